//! Vertical catenoids `λ·Cat + t·e₃` clipped to horizontal slabs.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{periodic_trapezoid, GaussLegendre};
use crate::roots::{hybrid, RootOptions};

/// Below this scale the hyperbolic factors are evaluated in logarithmic form.
const SMALL_SCALE: f64 = 0.05;

/// `ln cosh x` without overflow.
pub fn ln_cosh(x: f64) -> f64 {
    let a = x.abs();
    a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
}

/// `ln sinh x` for `x > 0` without overflow.
pub fn ln_sinh(x: f64) -> f64 {
    debug_assert!(x > 0.0);
    if x < 1.0 {
        x.sinh().ln()
    } else {
        x + (-(-2.0 * x).exp()).ln_1p() - std::f64::consts::LN_2
    }
}

/// `c·cosh x` for `c > 0`, switching to exponential form when `cosh x` alone
/// would overflow.
fn scaled_cosh(c: f64, x: f64) -> f64 {
    if x.abs() < 700.0 {
        c * x.cosh()
    } else {
        (c.ln() + ln_cosh(x)).exp()
    }
}

/// The open region between two horizontal planes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Slab {
    pub h_minus: f64,
    pub h_plus: f64,
}

impl Slab {
    pub fn new(h_minus: f64, h_plus: f64) -> Result<Self> {
        if !(h_minus.is_finite() && h_plus.is_finite()) || h_minus >= h_plus {
            return Err(Error::InvalidParameter(format!(
                "slab needs finite h_minus < h_plus, got [{h_minus}, {h_plus}]"
            )));
        }
        Ok(Self { h_minus, h_plus })
    }

    /// The slab `{-1 < x₃ < 1}`.
    pub fn unit() -> Self {
        Self { h_minus: -1.0, h_plus: 1.0 }
    }

    pub fn width(&self) -> f64 {
        self.h_plus - self.h_minus
    }

    pub fn center(&self) -> f64 {
        0.5 * (self.h_minus + self.h_plus)
    }

    pub fn half_width(&self) -> f64 {
        0.5 * self.width()
    }

    pub fn contains_closed(&self, h: f64) -> bool {
        h >= self.h_minus && h <= self.h_plus
    }

    /// Translation + homothety taking this slab onto `[-1, 1]`.
    pub fn reduction(&self) -> Reduction {
        Reduction { center: self.center(), factor: self.half_width() }
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::new(c * self.h_minus, c * self.h_plus)
    }
}

/// The affine map `x ↦ (x - center)/factor` normalizing a slab.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Reduction {
    pub center: f64,
    pub factor: f64,
}

impl Reduction {
    pub fn height(&self, h: f64) -> f64 {
        (h - self.center) / self.factor
    }

    pub fn length(&self, l: f64) -> f64 {
        l / self.factor
    }

    /// Scale and offset of a piece in the normalized frame.
    pub fn piece(&self, scale: f64, offset: f64) -> (f64, f64) {
        (scale / self.factor, self.height(offset))
    }
}

/// A vertical catenoid of neck radius `scale` centred at height `offset`,
/// clipped to `slab`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CatenoidPiece {
    pub scale: f64,
    pub offset: f64,
    pub slab: Slab,
}

impl CatenoidPiece {
    pub fn new(scale: f64, offset: f64, slab: Slab) -> Result<Self> {
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::InvalidParameter(format!("catenoid scale must be positive, got {scale}")));
        }
        if !offset.is_finite() {
            return Err(Error::InvalidParameter(format!("catenoid offset must be finite, got {offset}")));
        }
        let slab = Slab::new(slab.h_minus, slab.h_plus)?;
        Ok(Self { scale, offset, slab })
    }

    /// Same piece expressed on `[-1, 1]`, with the homothety factor.
    pub fn canonical(&self) -> (CatenoidPiece, f64) {
        let r = self.slab.reduction();
        let (scale, offset) = r.piece(self.scale, self.offset);
        (CatenoidPiece { scale, offset, slab: Slab::unit() }, r.factor)
    }

    fn check_height(&self, h: f64) -> Result<()> {
        if !self.slab.contains_closed(h) || !h.is_finite() {
            return Err(Error::OutOfRange { what: "height", value: h, lo: self.slab.h_minus, hi: self.slab.h_plus });
        }
        Ok(())
    }

    /// `(λ cosh((h-t)/λ) cos θ, λ cosh((h-t)/λ) sin θ, h)`.
    pub fn parameterize(&self, h: f64, theta: f64) -> Result<[f64; 3]> {
        self.check_height(h)?;
        let r = self.radius(h);
        Ok([r * theta.cos(), r * theta.sin(), h])
    }

    /// Radius of the horizontal slice at height `h` (no range check).
    pub fn radius(&self, h: f64) -> f64 {
        scaled_cosh(self.scale, (h - self.offset) / self.scale)
    }

    pub fn area_in_slab(&self) -> f64 {
        let (c, factor) = self.canonical();
        factor * factor * canonical_area(c.scale, c.offset)
    }

    pub fn boundary_length(&self) -> f64 {
        2.0 * PI * (self.radius(self.slab.h_minus) + self.radius(self.slab.h_plus))
    }

    pub fn level_length(&self, height: f64) -> Result<f64> {
        self.check_height(height)?;
        Ok(2.0 * PI * self.radius(height))
    }

    /// Area by Gauss–Legendre in height times the trapezoid rule in angle,
    /// applied to `|∂_h F × ∂_θ F|` of the parameterization.
    pub fn area_by_quadrature(&self, height_nodes: usize, angle_nodes: usize) -> f64 {
        let per_panel = 16.min(height_nodes.max(1));
        let panels = (height_nodes / per_panel).max(1);
        let gl = GaussLegendre::new(per_panel);
        let lam = self.scale;
        gl.integrate(self.slab.h_minus, self.slab.h_plus, panels, |h| {
            let x = (h - self.offset) / lam;
            periodic_trapezoid(2.0 * PI, angle_nodes, |th| {
                let r = scaled_cosh(lam, x);
                let s = x.sinh();
                let fh = [s * th.cos(), s * th.sin(), 1.0];
                let ft = [-r * th.sin(), r * th.cos(), 0.0];
                let n = [
                    fh[1] * ft[2] - fh[2] * ft[1],
                    fh[2] * ft[0] - fh[0] * ft[2],
                    fh[0] * ft[1] - fh[1] * ft[0],
                ];
                (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt()
            })
        })
    }
}

/// `A(λ,t) = λ²π cosh(2t/λ) sinh(2/λ) + 2πλ` for the slab `[-1, 1]`.
pub fn canonical_area(scale: f64, offset: f64) -> f64 {
    let lam = scale;
    let main = if lam >= SMALL_SCALE {
        lam * lam * PI * (2.0 * offset / lam).cosh() * (2.0 / lam).sinh()
    } else {
        (2.0 * lam.ln() + PI.ln() + ln_cosh(2.0 * offset / lam) + ln_sinh(2.0 / lam)).exp()
    };
    main + 2.0 * PI * lam
}

/// Vertical flux `F₃ = 2πλ` of the scale-`λ` vertical catenoid.
pub fn vertical_flux(scale: f64) -> f64 {
    2.0 * PI * scale
}

/// `2λ/(1-λ²) - sinh(2/λ)`, whose unique root in `(0,1)` is `λ₀`.
pub fn lambda0_residual(lam: f64) -> f64 {
    2.0 * lam / (1.0 - lam * lam) - (2.0 / lam).sinh()
}

/// The scale minimizing the area of centred catenoids in `[-1, 1]`.
pub fn solve_lambda0() -> f64 {
    let f = |l: f64| {
        let d = 1.0 - l * l;
        let v = lambda0_residual(l);
        let dv = 2.0 * (1.0 + l * l) / (d * d) + 2.0 * (2.0 / l).cosh() / (l * l);
        (v, dv)
    };
    let opts = RootOptions { bracket_width: 1e-8, residual: 1e-13, max_iter: 200 };
    hybrid(f, 0.5, 0.99, opts).expect("λ₀ is bracketed by [0.5, 0.99]").x
}

/// Positive root of `t tanh t = 1`.
pub fn solve_t_star() -> f64 {
    let f = |t: f64| {
        let th = t.tanh();
        (t * th - 1.0, th + t * (1.0 - th * th))
    };
    hybrid(f, 0.5, 2.0, RootOptions { residual: 1e-15, ..RootOptions::default() })
        .expect("t tanh t = 1 is bracketed by [0.5, 2]")
        .x
}

/// `1 - h tanh h`, positive exactly on the marginally stable central piece.
pub fn ms_indicator(height: f64) -> f64 {
    1.0 - height * height.tanh()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn piece(l: f64, t: f64) -> CatenoidPiece {
        CatenoidPiece::new(l, t, Slab::unit()).unwrap()
    }

    #[test]
    fn slab_rejects_degenerate() {
        assert!(Slab::new(1.0, 1.0).is_err());
        assert!(Slab::new(2.0, 1.0).is_err());
        assert!(Slab::new(f64::NAN, 1.0).is_err());
        assert!(CatenoidPiece::new(0.0, 0.0, Slab::unit()).is_err());
    }

    #[test]
    fn parameterize_examples() {
        let p = piece(1.0, 0.0).parameterize(0.0, 0.0).unwrap();
        assert_eq!(p, [1.0, 0.0, 0.0]);
        let q = piece(1.0, 0.0).parameterize(1.0, PI / 2.0).unwrap();
        assert!(q[0].abs() < 1e-15 && (q[1] - 1f64.cosh()).abs() < 1e-15 && q[2] == 1.0);
        let s = CatenoidPiece::new(2.0, 0.5, Slab::unit()).unwrap().parameterize(0.5, 0.0).unwrap();
        assert_eq!(s, [2.0, 0.0, 0.5]);
        assert!(matches!(piece(1.0, 0.0).parameterize(1.5, 0.0), Err(Error::OutOfRange { .. })));
    }

    #[test]
    fn unit_area_and_length() {
        let a = piece(1.0, 0.0).area_in_slab();
        assert!((a - (PI * 2f64.sinh() + 2.0 * PI)).abs() < 1e-13);
        let l = piece(1.0, 0.0).boundary_length();
        assert!((l - 4.0 * PI * 1f64.cosh()).abs() < 1e-13);
    }

    #[test]
    fn small_scale_is_finite() {
        let a = canonical_area(0.01, 0.0);
        assert!(a.is_finite() && a > 0.0);
        let direct = 1e-4 * PI * 200f64.sinh() + 2.0 * PI * 0.01;
        assert!((a / direct - 1.0).abs() < 1e-12);
        assert!(piece(0.00141, 0.0).boundary_length().is_finite());
    }

    #[test]
    fn lambda0_and_t_star_agree() {
        let l = solve_lambda0();
        let t = solve_t_star();
        assert!(lambda0_residual(l).abs() <= 1e-12);
        assert!(((1.0 / l).tanh() - l).abs() <= 1e-10);
        assert!((l * t - 1.0).abs() < 1e-12);
        assert!(ms_indicator(t).abs() < 1e-15);
    }
}
