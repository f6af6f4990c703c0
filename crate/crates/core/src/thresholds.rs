//! Sharp lengths below which no vertical catenoid spans two coaxial circles
//! on the boundary planes of a slab.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::catenoid::{ln_cosh, CatenoidPiece, Slab};
use crate::error::{Error, Result};
use crate::par::{map_slice, Execution};
use crate::stability::tangent_cone_heights;

/// A marginally stable clipped catenoid with prescribed lower boundary length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MsSolution {
    pub scale: f64,
    pub offset: f64,
    pub lower_length: f64,
    pub upper_length: f64,
    pub apex_height: f64,
    pub slab: Slab,
}

impl MsSolution {
    pub fn piece(&self) -> CatenoidPiece {
        CatenoidPiece { scale: self.scale, offset: self.offset, slab: self.slab }
    }
}

/// Scale and `(ln ℓ₋, ln ℓ₊)` of the marginally stable piece with apex `z`
/// stretched across a slab of width `w`.
fn ms_lengths(z: f64, w: f64) -> (f64, f64, f64, f64, f64) {
    let c = tangent_cone_heights(z);
    let lam = w / (c.t_plus - c.t_minus);
    let base = (2.0 * PI * lam).ln();
    (lam, c.t_minus, c.t_plus, base + ln_cosh(c.t_minus), base + ln_cosh(c.t_plus))
}

pub fn ms_piece_for_lower_length(lower_length: f64, slab: &Slab) -> Result<MsSolution> {
    if !(lower_length.is_finite() && lower_length > 0.0) {
        return Err(Error::InvalidParameter(format!("lower length must be positive, got {lower_length}")));
    }
    let w = slab.width();
    let target = lower_length.ln();
    // ln ℓ₋ is decreasing in z.
    let g = |z: f64| ms_lengths(z, w).3 - target;
    let (mut lo, mut hi) = (-1.0f64, 1.0f64);
    let mut tries = 0;
    while g(lo) < 0.0 {
        hi = lo;
        lo *= 2.0;
        tries += 1;
        if tries > 12 {
            return Err(Error::no_conv("lower length bracket (large L)", g(lo)));
        }
    }
    tries = 0;
    while g(hi) > 0.0 {
        lo = hi;
        hi *= 2.0;
        tries += 1;
        if tries > 12 {
            return Err(Error::no_conv("lower length bracket (small L)", g(hi)));
        }
    }
    for _ in 0..200 {
        let m = 0.5 * (lo + hi);
        if m <= lo || m >= hi {
            break;
        }
        if g(m) > 0.0 {
            lo = m;
        } else {
            hi = m;
        }
    }
    let (glo, ghi) = (g(lo), g(hi));
    let z = if glo.abs() <= ghi.abs() { lo } else { hi };
    let residual = glo.abs().min(ghi.abs());
    if residual > 1e-12 {
        return Err(Error::no_conv("marginally stable piece for lower length", residual));
    }
    let (lam, t_minus, _, _, ln_up) = ms_lengths(z, w);
    Ok(MsSolution {
        scale: lam,
        offset: slab.h_minus - lam * t_minus,
        lower_length,
        upper_length: ln_up.exp(),
        apex_height: z,
        slab: *slab,
    })
}

pub fn f_omega(lower_length: f64, slab: &Slab) -> Result<f64> {
    Ok(ms_piece_for_lower_length(lower_length, slab)?.upper_length)
}

pub fn f_omega_sweep(lengths: &[f64], slab: &Slab, exec: Execution) -> Vec<Result<MsSolution>> {
    map_slice(lengths, exec, |&l| ms_piece_for_lower_length(l, slab))
}

/// Total boundary length of the symmetric marginally stable piece.
pub fn l_crit(slab: &Slab) -> f64 {
    let (_, _, _, lm, lp) = ms_lengths(0.0, slab.width());
    lm.exp() + lp.exp()
}

/// Relative band inside which `L₊ ≈ F(L₋)` is reported as tangential.
pub const TANGENTIAL_BAND: f64 = 1e-6;
/// Solutions closer than this in `|Δλ| + |Δc|` are merged.
pub const DEDUP_TOL: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spanning {
    pub pieces: Vec<CatenoidPiece>,
    /// Set when `|L₊ - F(L₋)| ≤ TANGENTIAL_BAND·F(L₋)`; the single returned
    /// piece is then the marginally stable one.
    pub tangential: bool,
    pub threshold: f64,
}

/// All vertical catenoids in the slab with lower and upper boundary circles of
/// the given lengths.
pub fn spanning_catenoids(lower_length: f64, upper_length: f64, slab: &Slab) -> Result<Spanning> {
    if !(upper_length.is_finite() && upper_length > 0.0) {
        return Err(Error::InvalidParameter(format!("upper length must be positive, got {upper_length}")));
    }
    let ms = ms_piece_for_lower_length(lower_length, slab)?;
    let f = ms.upper_length;
    if (upper_length - f).abs() <= TANGENTIAL_BAND * f {
        return Ok(Spanning { pieces: vec![ms.piece()], tangential: true, threshold: f });
    }
    if upper_length < f {
        return Ok(Spanning { pieces: Vec::new(), tangential: false, threshold: f });
    }
    // Unknown: normalized lower height s = (h₋ - c)/λ. Then
    // λ = L₋/(2π cosh s) and the upper height is s + 2πW cosh s / L₋.
    let w = slab.width();
    let ln_l = lower_length.ln();
    let target = upper_length.ln();
    let r = |s: f64| {
        let d = (2.0 * PI * w / lower_length).ln() + ln_cosh(s);
        let d = if d > 700.0 { f64::INFINITY } else { d.exp() };
        ln_l + ln_cosh(s + d) - ln_cosh(s) - target
    };
    let s_min = (slab.h_minus - ms.offset) / ms.scale;
    let mut roots = Vec::new();
    for dir in [-1.0, 1.0] {
        let mut step = 0.25;
        let mut far = s_min + dir * step;
        let mut tries = 0;
        while r(far) <= 0.0 {
            step *= 2.0;
            far = s_min + dir * step;
            tries += 1;
            if tries > 40 {
                return Err(Error::no_conv("spanning catenoid bracket", r(far)));
            }
        }
        let cells = 64;
        let (a, b) = if dir < 0.0 { (far, s_min) } else { (s_min, far) };
        let h = (b - a) / cells as f64;
        let mut prev = r(a);
        for i in 1..=cells {
            let x1 = a + h * i as f64;
            let cur = r(x1);
            if (prev > 0.0) != (cur > 0.0) {
                roots.push(bisect_sign(&r, x1 - h, x1));
            }
            prev = cur;
        }
    }
    let mut pieces: Vec<CatenoidPiece> = Vec::new();
    for s in roots {
        let lam = lower_length / (2.0 * PI * s.cosh());
        let c = slab.h_minus - lam * s;
        if pieces.iter().all(|p| (p.scale - lam).abs() + (p.offset - c).abs() > DEDUP_TOL) {
            pieces.push(CatenoidPiece { scale: lam, offset: c, slab: *slab });
        }
    }
    pieces.sort_by(|a, b| a.scale.total_cmp(&b.scale));
    Ok(Spanning { pieces, tangential: false, threshold: f })
}

fn bisect_sign<F: Fn(f64) -> f64>(f: &F, mut a: f64, mut b: f64) -> f64 {
    let fa_pos = f(a) > 0.0;
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        if (f(m) > 0.0) == fa_pos {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}
