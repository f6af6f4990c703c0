//! Minimal annuli from Weierstrass data `(g, dh = h dz)` on `r < |z| < R`:
//! validation of the period conditions, flux, level-length profiles in the
//! log-radius and height gauges, area comparison with the catenoid, and the
//! second-derivative decomposition of level lengths.

use std::f64::consts::PI;

use num_complex::Complex64 as C;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::catenoid::{CatenoidPiece, Slab};
use crate::error::{Error, Result};
use crate::laurent::Laurent;
use crate::par::{map_indexed, Execution};
use crate::quadrature::{compensated_sum, GaussLegendre};
use crate::roots::{hybrid, RootOptions};
use crate::spectral;

const I: C = C::new(0.0, 1.0);

fn polar(r: f64, theta: f64) -> C {
    C::from_polar(r, theta)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidationOptions {
    /// Minimum modulus of `g` and `h` relative to their maximum on a circle.
    pub eps: f64,
    /// Points per circle for the modulus and winding scans.
    pub scan: usize,
    /// Residue tolerance relative to `|h₋₁|`.
    pub residual_tol: f64,
    /// Nodes for the circle DFT that extracts residues.
    pub dft_nodes: usize,
}

impl Default for ValidationOptions {
    fn default() -> Self {
        Self { eps: 1e-6, scan: 4096, residual_tol: 1e-8, dft_nodes: 1024 }
    }
}

/// Weierstrass data on the annulus `r_inner < |z| < r_outer`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeierstrassData {
    pub g: Laurent,
    pub h: Laurent,
    pub r_inner: f64,
    pub r_outer: f64,
}

/// Diagnostics of a successful validation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Validation {
    pub residue_gh: f64,
    pub residue_h_over_g: f64,
    pub imag_residue_h: f64,
    pub flux_vertical: f64,
    pub min_modulus_g: f64,
    pub min_modulus_h: f64,
}

#[derive(Serialize, Deserialize)]
struct DataDoc {
    version: u32,
    g: Vec<(i32, f64, f64)>,
    h: Vec<(i32, f64, f64)>,
    r_inner: f64,
    r_outer: f64,
}

pub const JSON_VERSION: u32 = 1;

fn table(l: &Laurent) -> Vec<(i32, f64, f64)> {
    l.terms().map(|(k, c)| (k, c.re, c.im)).collect()
}

fn from_table(t: &[(i32, f64, f64)], name: &str) -> Result<Laurent> {
    let mut l = Laurent::new();
    for &(k, re, im) in t {
        if !(re.is_finite() && im.is_finite()) {
            return Err(Error::InvalidData(format!("non-finite coefficient of z^{k} in {name}")));
        }
        if l.terms().any(|(p, _)| p == k) {
            return Err(Error::InvalidData(format!("duplicate power {k} in {name}")));
        }
        l.set(k, C::new(re, im));
    }
    Ok(l)
}

impl WeierstrassData {
    pub fn new(g: Laurent, h: Laurent, r_inner: f64, r_outer: f64) -> Result<Self> {
        if !(r_inner.is_finite() && r_outer.is_finite() && r_inner > 0.0 && r_inner < r_outer) {
            return Err(Error::InvalidData(format!("radii must satisfy 0 < r_inner < r_outer, got {r_inner}, {r_outer}")));
        }
        Ok(Self { g, h, r_inner, r_outer })
    }

    /// `g(z) = z`, `h(z) = λ/z`: the scale-`λ` vertical catenoid with height
    /// `λ log|z|`.
    pub fn catenoid(scale: f64, r_inner: f64, r_outer: f64) -> Result<Self> {
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::InvalidParameter(format!("catenoid scale must be positive, got {scale}")));
        }
        Self::new(
            Laurent::monomial(1, C::new(1.0, 0.0)),
            Laurent::monomial(-1, C::new(scale, 0.0)),
            r_inner,
            r_outer,
        )
    }

    pub fn to_json(&self) -> String {
        let doc = DataDoc {
            version: JSON_VERSION,
            g: table(&self.g),
            h: table(&self.h),
            r_inner: self.r_inner,
            r_outer: self.r_outer,
        };
        serde_json::to_string(&doc).expect("data document serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let doc: DataDoc = serde_json::from_str(s).map_err(|e| Error::InvalidData(format!("malformed data document: {e}")))?;
        if doc.version != JSON_VERSION {
            return Err(Error::InvalidData(format!("unsupported data version {}", doc.version)));
        }
        Self::new(from_table(&doc.g, "g")?, from_table(&doc.h, "h")?, doc.r_inner, doc.r_outer)
    }

    /// Residue `h₋₁`; its real part is the modulus `μ = F₃/2π`.
    pub fn log_coefficient(&self) -> C {
        self.h.coeff(-1)
    }

    pub fn mu(&self) -> f64 {
        self.log_coefficient().re
    }

    /// Homothety by `c`: scales `h`.
    pub fn scaled(&self, c: f64) -> Self {
        Self { h: self.h.scale(C::new(c, 0.0)), ..self.clone() }
    }

    /// Rotation by `alpha` about the vertical axis: multiplies `g` by `e^{iα}`.
    pub fn rotated(&self, alpha: f64) -> Self {
        Self { g: self.g.scale(polar(1.0, alpha)), ..self.clone() }
    }

    pub fn r_mid(&self) -> f64 {
        (self.r_inner * self.r_outer).sqrt()
    }

    /// `(½(1/g - g) h, (i/2)(1/g + g) h, h)` at `z`.
    pub fn phi(&self, z: C) -> [C; 3] {
        let g = self.g.eval(z);
        let h = self.h.eval(z);
        let gi = g.inv();
        [0.5 * (gi - g) * h, 0.5 * I * (gi + g) * h, h]
    }

    /// Holomorphic height `ζ = ∫ h dz` with the `h₋₁ Log z` branch on the
    /// principal sheet; `Re ζ = x₃`.
    pub fn zeta(&self, z: C) -> C {
        let mut s = self.log_coefficient() * z.ln();
        for (k, c) in self.h.terms() {
            if k != -1 {
                s += c * z.powi(k + 1) / (k as f64 + 1.0);
            }
        }
        s
    }

    pub fn height(&self, z: C) -> f64 {
        self.zeta(z).re
    }

    fn circle<F: Fn(C) -> C>(&self, f: F, r: f64, n: usize) -> Vec<C> {
        (0..n).map(|j| f(polar(r, 2.0 * PI * j as f64 / n as f64))).collect()
    }

    /// Laurent coefficient of `z^{-1}` of `f` from samples on `|z| = r`.
    fn residue_on_circle<F: Fn(C) -> C>(&self, f: F, r: f64, n: usize) -> C {
        let c = spectral::coefficients(&self.circle(f, r, n));
        c[n - 1] * r
    }

    /// Validates the period and vertical-flux conditions and the absence of
    /// zeros of `g` and `h` in the annulus.
    pub fn validate(&self) -> Result<Validation> {
        self.validate_with(&ValidationOptions::default())
    }

    pub fn validate_with(&self, opts: &ValidationOptions) -> Result<Validation> {
        let mu = self.log_coefficient();
        if !(mu.re > 0.0) {
            return Err(Error::InvalidData(format!("vertical flux 2π·Re h₋₁ = {} is not positive", 2.0 * PI * mu.re)));
        }
        let scale = mu.norm();
        let mut min_g = f64::INFINITY;
        let mut min_h = f64::INFINITY;
        let mut windings = Vec::new();
        for r in [self.r_inner, self.r_outer] {
            let gs = self.circle(|z| self.g.eval(z), r, opts.scan);
            let hs = self.circle(|z| self.h.eval(z), r, opts.scan);
            let (wg, mg) = winding_and_margin(&gs);
            let (wh, mh) = winding_and_margin(&hs);
            if mg < opts.eps {
                return Err(Error::InvalidData(format!("g nearly vanishes on |z| = {r} (margin {mg:e})")));
            }
            if mh < opts.eps {
                let j = hs.iter().enumerate().min_by(|a, b| a.1.norm().total_cmp(&b.1.norm())).map(|x| x.0).unwrap_or(0);
                let z = polar(r, 2.0 * PI * j as f64 / opts.scan as f64);
                return Err(Error::BranchPoint { factor: mh, eps: opts.eps, re: z.re, im: z.im });
            }
            min_g = min_g.min(mg);
            min_h = min_h.min(mh);
            windings.push((wg, wh));
        }
        if windings[0].0 != windings[1].0 {
            return Err(Error::InvalidData(format!(
                "g has {} zeros or poles in the annulus",
                (windings[1].0 - windings[0].0).abs()
            )));
        }
        if windings[0].1 != windings[1].1 {
            let z = self.interior_zero_of_h();
            let factor = self.h.eval(z).norm() / self.h.eval(polar(self.r_mid(), 0.0)).norm().max(f64::MIN_POSITIVE);
            return Err(Error::BranchPoint { factor, eps: opts.eps, re: z.re, im: z.im });
        }
        let r = self.r_mid();
        let res_gh = self.residue_on_circle(|z| self.g.eval(z) * self.h.eval(z), r, opts.dft_nodes).norm();
        let res_hg = self.residue_on_circle(|z| self.h.eval(z) / self.g.eval(z), r, opts.dft_nodes).norm();
        let tol = opts.residual_tol * scale;
        if res_gh > tol || res_hg > tol {
            return Err(Error::InvalidData(format!(
                "horizontal period/flux residues |Res gh| = {res_gh:e}, |Res h/g| = {res_hg:e} exceed {tol:e}"
            )));
        }
        if mu.im.abs() > tol {
            return Err(Error::InvalidData(format!("vertical period Im h₋₁ = {:e} exceeds {tol:e}", mu.im)));
        }
        Ok(Validation {
            residue_gh: res_gh,
            residue_h_over_g: res_hg,
            imag_residue_h: mu.im,
            flux_vertical: 2.0 * PI * mu.re,
            min_modulus_g: min_g,
            min_modulus_h: min_h,
        })
    }

    /// Approximate zero of `h` inside the annulus: the smallest `|h|` on a
    /// log-polar grid, polished by Newton's method.
    fn interior_zero_of_h(&self) -> C {
        let (lr0, lr1) = (self.r_inner.ln(), self.r_outer.ln());
        let mut best = (f64::INFINITY, polar(self.r_mid(), 0.0));
        for i in 1..64 {
            let r = (lr0 + (lr1 - lr0) * i as f64 / 64.0).exp();
            for j in 0..256 {
                let z = polar(r, 2.0 * PI * j as f64 / 256.0);
                let v = self.h.eval(z).norm();
                if v < best.0 {
                    best = (v, z);
                }
            }
        }
        let mut z = best.1;
        for _ in 0..50 {
            let (v, d) = self.h.eval_with_derivative(z);
            if d.norm() == 0.0 {
                break;
            }
            let step = v / d;
            let next = z - step;
            let r = next.norm();
            if !(r > self.r_inner && r < self.r_outer) {
                break;
            }
            z = next;
            if step.norm() <= 1e-15 * z.norm() {
                break;
            }
        }
        z
    }

    /// Flux `Im ∮ Φ dz` over `|z| = r` with `n` trapezoid nodes.
    pub fn flux_on_circle(&self, r: f64, n: usize) -> [f64; 3] {
        let mut s = [C::new(0.0, 0.0); 3];
        for j in 0..n {
            let z = polar(r, 2.0 * PI * j as f64 / n as f64);
            let p = self.phi(z);
            for k in 0..3 {
                s[k] += p[k] * I * z;
            }
        }
        let w = 2.0 * PI / n as f64;
        [s[0].im * w, s[1].im * w, s[2].im * w]
    }

    /// Flux of the core circle.
    pub fn flux(&self) -> [f64; 3] {
        self.flux_on_circle(self.r_mid(), 1024)
    }

    /// Rotation that would make the flux vertical: returns the flux and the
    /// angle between it and `e₃`.
    pub fn flux_alignment(&self) -> ([f64; 3], f64) {
        let f = self.flux();
        let n = (f[0] * f[0] + f[1] * f[1] + f[2] * f[2]).sqrt();
        (f, (f[2] / n).clamp(-1.0, 1.0).acos())
    }

    /// Points of the image of `|z| = r`, horizontally centred.
    pub fn circle_points(&self, r: f64, n: usize) -> Vec<[f64; 3]> {
        let zs = self.circle(|z| z, r, n);
        let mut comps = Vec::with_capacity(2);
        for k in 0..2 {
            let d: Vec<C> = zs.iter().map(|&z| self.phi(z)[k] * I * z).collect();
            let (int, _) = spectral::cumulative_integral(&d, 2.0 * PI);
            let vals: Vec<f64> = int.iter().map(|c| c.re).collect();
            let mean = vals.iter().sum::<f64>() / n as f64;
            comps.push(vals.into_iter().map(|x| x - mean).collect::<Vec<_>>());
        }
        zs.iter().enumerate().map(|(j, &z)| [comps[0][j], comps[1][j], self.height(z)]).collect()
    }

    /// `(max x₃ on the inner circle, min x₃ on the outer circle)`; every
    /// height strictly between them is a closed level of the annulus.
    pub fn height_range(&self, n: usize) -> (f64, f64) {
        let lo = self.circle_extremum(self.r_inner, n, 1.0);
        let hi = -self.circle_extremum(self.r_outer, n, -1.0);
        (lo, hi)
    }

    /// Maximum of `sign·x₃` on the circle `|z| = r`: the best of `n` samples,
    /// polished by golden-section search on the neighbouring bracket.
    fn circle_extremum(&self, r: f64, n: usize, sign: f64) -> f64 {
        let f = |t: f64| sign * self.height(C::from_polar(r, t));
        let h = 2.0 * PI / n as f64;
        let (j, _) = (0..n).map(|j| (j, f(h * j as f64))).fold((0, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a });
        let (mut a, mut b) = (h * (j as f64 - 1.0), h * (j as f64 + 1.0));
        let g = 0.5 * (5f64.sqrt() - 1.0);
        let mut c = b - g * (b - a);
        let mut d = a + g * (b - a);
        let (mut fc, mut fd) = (f(c), f(d));
        while b - a > 1e-12 {
            if fc > fd {
                b = d;
                d = c;
                fd = fc;
                c = b - g * (b - a);
                fc = f(c);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + g * (b - a);
                fd = f(d);
            }
        }
        fc.max(fd).max(f(h * j as f64))
    }

    /// Solves `ζ(z) = target` modulo the period `2πiμ` by Newton's method.
    fn invert(&self, target: C, guess: C) -> Result<C> {
        let mu = self.log_coefficient();
        let period = 2.0 * PI * mu.re;
        let scale = mu.norm() * (PI + 1.0) + target.re.abs();
        let mut z = guess;
        let mut best = (f64::INFINITY, z);
        for _ in 0..60 {
            let mut d = self.zeta(z) - target;
            d.im -= period * (d.im / period).round();
            let dn = d.norm();
            if dn < best.0 {
                best = (dn, z);
            }
            if dn <= 2e-15 * scale {
                break;
            }
            let mut step = d / self.h.eval(z);
            let limit = 0.3 * z.norm();
            if step.norm() > limit {
                step *= limit / step.norm();
            }
            z -= step;
        }
        if best.0 > 1e-11 * scale {
            return Err(Error::no_conv(format!("height-coordinate inversion at {target}"), best.0));
        }
        let r = best.1.norm();
        if r < self.r_inner * (1.0 - 1e-12) || r > self.r_outer * (1.0 + 1e-12) {
            return Err(Error::Domain(format!("level point |z| = {r} leaves the annulus")));
        }
        Ok(best.1)
    }

    /// Preimages of the level `x₃ = u` at `n` equally spaced conjugate-height
    /// values `v ∈ [0, 2πμ)`.
    fn level_nodes(&self, u: f64, n: usize, guess: C) -> Result<Vec<C>> {
        let mu = self.mu();
        let dv = 2.0 * PI * mu / n as f64;
        let rot = polar(1.0, dv / mu);
        let mut out = Vec::with_capacity(n);
        let mut z = self.invert(C::new(u, 0.0), guess)?;
        out.push(z);
        for j in 1..n {
            z = self.invert(C::new(u, dv * j as f64), z * rot)?;
            out.push(z);
        }
        Ok(out)
    }

    fn level_guess(&self, u: f64) -> C {
        C::new((u / self.mu()).exp(), 0.0)
    }

    fn level(&self, u: f64, n: usize) -> Result<Level> {
        let zs = self.level_nodes(u, n, self.level_guess(u))?;
        Ok(Level::new(self, zs))
    }
}

/// `g(z) = z`, `h(z) = λ/z` on `r_inner < |z| < r_outer`.
pub fn catenoid_data(scale: f64, r_inner: f64, r_outer: f64) -> Result<WeierstrassData> {
    WeierstrassData::catenoid(scale, r_inner, r_outer)
}

/// Winding number and relative minimum modulus of closed samples.
fn winding_and_margin(samples: &[C]) -> (i64, f64) {
    let n = samples.len();
    let mut turn = 0.0;
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    for j in 0..n {
        let a = samples[j];
        let b = samples[(j + 1) % n];
        turn += (b / a).arg();
        lo = lo.min(a.norm());
        hi = hi.max(a.norm());
    }
    ((turn / (2.0 * PI)).round() as i64, if hi > 0.0 { lo / hi } else { 0.0 })
}

/// Samples of one height level in the coordinates `(u, v) = (x₃, x₃*)`.
#[derive(Debug, Clone)]
struct Level {
    period: f64,
    z: Vec<C>,
    /// Gauss map `G = g(z)`.
    gauss: Vec<C>,
    /// `q = d log G / dζ = g'/(g h)`.
    q: Vec<C>,
}

impl Level {
    fn new(data: &WeierstrassData, z: Vec<C>) -> Self {
        let mut gauss = Vec::with_capacity(z.len());
        let mut q = Vec::with_capacity(z.len());
        for &w in &z {
            let (g, dg) = data.g.eval_with_derivative(w);
            gauss.push(g);
            q.push(dg / (g * data.h.eval(w)));
        }
        Self { period: 2.0 * PI * data.mu(), z, gauss, q }
    }

    fn dv(&self) -> f64 {
        self.period / self.z.len() as f64
    }

    /// Conformal factor `Λ = ½(|G| + 1/|G|) = 1/|∇x₃|`.
    fn metric(&self) -> Vec<f64> {
        self.gauss.iter().map(|g| 0.5 * (g.norm() + 1.0 / g.norm())).collect()
    }

    fn length(&self) -> f64 {
        compensated_sum(self.metric()) * self.dv()
    }

    /// `(∫Λ dv, ∫Λ² dv, L'(u), L''(u))` with `L(u) = ∫Λ dv`.
    fn moments(&self) -> [f64; 4] {
        let mut cols = [vec![], vec![], vec![], vec![]];
        for (g, q) in self.gauss.iter().zip(&self.q) {
            let w = g.norm().ln();
            let lam = w.cosh();
            cols[0].push(lam);
            cols[1].push(lam * lam);
            cols[2].push(w.sinh() * q.re);
            cols[3].push(lam * q.norm_sqr());
        }
        let dv = self.dv();
        cols.map(|c| compensated_sum(c) * dv)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    /// Number of height levels.
    pub levels: usize,
    /// Nodes per level.
    pub nodes: usize,
    /// Height range; defaults to the closed-level range inset by 2% per side.
    pub range: Option<(f64, f64)>,
    pub exec: Execution,
}

impl GridSpec {
    pub fn new(levels: usize, nodes: usize) -> Self {
        Self { levels, nodes, range: None, exec: Execution::default() }
    }
}

/// An immersed annulus sampled on a `(height level × conformal angle)` grid.
/// Node `(k, j)` sits at `x₃ = heights[k]`, `x₃* = j·period/nodes`.
#[derive(Debug, Clone)]
pub struct SampledAnnulus {
    pub heights: Vec<f64>,
    /// Period of the conjugate height, `2πμ`.
    pub period: f64,
    pub points: Vec<Vec<[f64; 3]>>,
    /// Preimages in the annulus.
    pub preimages: Vec<Vec<C>>,
    /// Conformal factor `Λ` of the `(x₃, x₃*)` coordinates.
    pub metric_factor: Vec<Vec<f64>>,
    pub normal: Vec<Vec<[f64; 3]>>,
    /// Second fundamental form in `(x₃, x₃*)` coordinates.
    pub second_form: Vec<Vec<[[f64; 2]; 2]>>,
    pub gauss: Vec<Vec<C>>,
    pub log_gauss_derivative: Vec<Vec<C>>,
    pub flux_vertical: f64,
    pub modulus_mu: f64,
    /// Largest real period picked up along a level.
    pub closure_error: f64,
}

fn horizontal_integrand(g: C) -> [C; 2] {
    let gi = g.inv();
    [0.5 * (gi - g), 0.5 * I * (gi + g)]
}

pub fn immerse(data: &WeierstrassData, spec: &GridSpec) -> Result<SampledAnnulus> {
    data.validate()?;
    if spec.levels < 5 || spec.nodes < 16 {
        return Err(Error::Configuration(format!("grid {}×{} is too coarse", spec.levels, spec.nodes)));
    }
    let (lo, hi) = match spec.range {
        Some(r) => r,
        None => {
            let (a, b) = data.height_range(4096);
            let w = b - a;
            (a + 0.02 * w, b - 0.02 * w)
        }
    };
    let (a, b) = data.height_range(4096);
    if !(lo < hi) || lo < a || hi > b {
        return Err(Error::Domain(format!("height range [{lo}, {hi}] is not inside the closed-level range [{a}, {b}]")));
    }
    let m = spec.levels;
    let n = spec.nodes;
    let du = (hi - lo) / (m - 1) as f64;
    let heights: Vec<f64> = (0..m).map(|k| lo + du * k as f64).collect();
    let levels = map_indexed(m, spec.exec, |k| data.level(heights[k], n)).into_iter().collect::<Result<Vec<_>>>()?;

    // Horizontal coordinates at v = 0, integrating along x₃* = 0 between levels.
    let gl = GaussLegendre::new(16);
    let steps = map_indexed(m - 1, spec.exec, |k| -> Result<[f64; 2]> {
        let (u0, u1) = (heights[k], heights[k + 1]);
        let (z0, z1) = (levels[k].z[0], levels[k + 1].z[0]);
        let mut acc = [0.0; 2];
        for (x, w) in gl.nodes.iter().zip(&gl.weights) {
            let s = 0.5 * (x + 1.0);
            let u = u0 + (u1 - u0) * s;
            let guess = (z0.ln() * (1.0 - s) + z1.ln() * s).exp();
            let z = data.invert(C::new(u, 0.0), guess)?;
            let f = horizontal_integrand(data.g.eval(z));
            for c in 0..2 {
                acc[c] += 0.5 * (u1 - u0) * w * f[c].re;
            }
        }
        Ok(acc)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let mut base = vec![[0.0; 2]; m];
    for k in 1..m {
        for c in 0..2 {
            base[k][c] = base[k - 1][c] + steps[k - 1][c];
        }
    }

    let period = 2.0 * PI * data.mu();
    let mut closure = 0.0f64;
    let mut points = Vec::with_capacity(m);
    for (k, lev) in levels.iter().enumerate() {
        let mut comps = [vec![0.0; n], vec![0.0; n]];
        for c in 0..2 {
            let d: Vec<C> = lev.gauss.iter().map(|&g| I * horizontal_integrand(g)[c]).collect();
            let (int, mean) = spectral::cumulative_integral(&d, period);
            closure = closure.max(mean.re.abs() * period);
            for j in 0..n {
                comps[c][j] = base[k][c] + int[j].re;
            }
        }
        points.push((0..n).map(|j| [comps[0][j], comps[1][j], heights[k]]).collect::<Vec<_>>());
    }
    let scale = data.mu();
    if closure > 1e-7 * scale {
        return Err(Error::InvalidData(format!("level curves fail to close (period {closure:e})")));
    }
    let centre = [0, 1].map(|c| points[0].iter().map(|p| p[c]).sum::<f64>() / n as f64);
    for row in points.iter_mut() {
        for p in row.iter_mut() {
            p[0] -= centre[0];
            p[1] -= centre[1];
        }
    }

    let mut metric_factor = Vec::with_capacity(m);
    let mut normal = Vec::with_capacity(m);
    let mut second_form = Vec::with_capacity(m);
    for lev in &levels {
        metric_factor.push(lev.metric());
        normal.push(
            lev.gauss
                .iter()
                .map(|g| {
                    let s = g.norm_sqr();
                    [2.0 * g.re / (s + 1.0), 2.0 * g.im / (s + 1.0), (s - 1.0) / (s + 1.0)]
                })
                .collect(),
        );
        second_form.push(lev.q.iter().map(|q| [[-q.re, q.im], [q.im, q.re]]).collect());
    }
    Ok(SampledAnnulus {
        heights,
        period,
        points,
        preimages: levels.iter().map(|l| l.z.clone()).collect(),
        metric_factor,
        normal,
        second_form,
        gauss: levels.iter().map(|l| l.gauss.clone()).collect(),
        log_gauss_derivative: levels.into_iter().map(|l| l.q).collect(),
        flux_vertical: period,
        modulus_mu: data.mu(),
        closure_error: closure,
    })
}

impl SampledAnnulus {
    pub fn levels(&self) -> usize {
        self.heights.len()
    }

    pub fn nodes(&self) -> usize {
        self.points[0].len()
    }

    pub fn level_spacing(&self) -> f64 {
        self.heights[1] - self.heights[0]
    }

    /// `H¹` of the level curve `k`.
    pub fn level_length(&self, k: usize) -> f64 {
        compensated_sum(self.metric_factor[k].iter().copied()) * self.period / self.nodes() as f64
    }
}

/// Terms of the level-length second derivative on one height level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Decomposition {
    pub height: f64,
    pub level_length: f64,
    /// Five-point finite difference of `H¹` across levels.
    pub fd_value: f64,
    /// `∫ |∇(1/|∇x₃|)|² + (κ² + β₂²)/|∇x₃|² ds`.
    pub formula_value: f64,
    /// `∫ β₂²/|∇x₃|² ds` with `β₂ = A(ν, E₂)`.
    pub beta_term: f64,
    /// `(2π/F₃)² H¹`, the catenoid value of the second derivative.
    pub catenoid_bound: f64,
}

pub fn second_derivative_decomposition(annulus: &SampledAnnulus, level_index: usize) -> Result<Decomposition> {
    let m = annulus.levels();
    let k = level_index;
    if k < 2 || k + 2 >= m {
        return Err(Error::Precondition(format!("level {k} needs two neighbours on each side among {m} levels")));
    }
    let n = annulus.nodes();
    let period = annulus.period;
    let dv = period / n as f64;
    let du = annulus.level_spacing();
    let len = |i: usize| annulus.level_length(i);
    let fd = (-len(k + 2) + 16.0 * len(k + 1) - 30.0 * len(k) + 16.0 * len(k - 1) - len(k - 2)) / (12.0 * du * du);

    let lam = &annulus.metric_factor[k];
    check_resolved(lam, "level conformal factor")?;
    let lam_v = spectral::derivative_real(lam, period, 1);
    let coords: Vec<Vec<f64>> = (0..3).map(|c| annulus.points[k].iter().map(|p| p[c]).collect()).collect();
    for c in &coords[..2] {
        check_resolved(c, "level curve")?;
    }
    let d1: Vec<Vec<f64>> = coords.iter().map(|c| spectral::derivative_real(c, period, 1)).collect();
    let d2: Vec<Vec<f64>> = coords.iter().map(|c| spectral::derivative_real(c, period, 2)).collect();
    let mut formula = 0.0;
    let mut beta = 0.0;
    for j in 0..n {
        let xp = [d1[0][j], d1[1][j], d1[2][j]];
        let xpp = [d2[0][j], d2[1][j], d2[2][j]];
        let cr = cross(xp, xpp);
        let sp = norm(xp);
        let kappa = norm(cr) / (sp * sp * sp);
        let l = lam[j];
        let b2 = annulus.second_form[k][j][0][1] / (l * l);
        formula += (lam_v[j] / l).powi(2) * l + (kappa * kappa + b2 * b2) * l * l * l;
        beta += b2 * b2 * l * l * l;
    }
    let h1 = len(k);
    Ok(Decomposition {
        height: annulus.heights[k],
        level_length: h1,
        fd_value: fd,
        formula_value: formula * dv,
        beta_term: beta * dv,
        catenoid_bound: (2.0 * PI / annulus.flux_vertical).powi(2) * h1,
    })
}

/// Fails when the top quarter of the spectrum carries noticeable energy.
fn check_resolved(samples: &[f64], what: &str) -> Result<()> {
    let n = samples.len();
    let z: Vec<C> = samples.iter().map(|&x| C::new(x, 0.0)).collect();
    let c = spectral::coefficients(&z);
    let total: f64 = c.iter().skip(1).map(|x| x.norm_sqr()).sum::<f64>() + c[0].norm_sqr();
    let tail: f64 = c
        .iter()
        .enumerate()
        .filter(|(k, _)| spectral::wavenumber(*k, n).unsigned_abs() as usize > 3 * n / 8)
        .map(|(_, x)| x.norm_sqr())
        .sum();
    let ratio = (tail / total).sqrt();
    if ratio > 1e-10 {
        return Err(Error::Resolution { what: what.into(), disagreement: ratio });
    }
    Ok(())
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn norm(a: [f64; 3]) -> f64 {
    (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt()
}

/// Co-area and Cauchy–Schwarz quantities on one level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoareaLevel {
    /// `d/du` of the area below the level, `∫ 1/|∇x₃| ds`.
    pub area_rate: f64,
    /// `H¹(Σ_u)²/F₃`.
    pub bound: f64,
    /// Variance of `|∇x₃|` over the level nodes.
    pub gradient_variance: f64,
}

pub fn coarea_level(annulus: &SampledAnnulus, k: usize) -> CoareaLevel {
    let n = annulus.nodes() as f64;
    let dv = annulus.period / n;
    let lam = &annulus.metric_factor[k];
    let rate = lam.iter().map(|l| l * l).sum::<f64>() * dv;
    let len = annulus.level_length(k);
    let grads: Vec<f64> = lam.iter().map(|l| 1.0 / l).collect();
    let mean = grads.iter().sum::<f64>() / n;
    let var = grads.iter().map(|g| (g - mean).powi(2)).sum::<f64>() / n;
    CoareaLevel { area_rate: rate, bound: len * len / annulus.flux_vertical, gradient_variance: var }
}

/// `(1/2π) ∫ |X_v|/|X_u| dv` on level `k`, which is the modulus `μ` for a
/// conformal grid. `X_u` uses a five-point stencil of freshly inverted levels
/// at spacing `delta`.
pub fn measured_modulus(data: &WeierstrassData, annulus: &SampledAnnulus, k: usize, delta: f64) -> Result<f64> {
    let n = annulus.nodes();
    let u = annulus.heights[k];
    let period = annulus.period;
    let dv = period / n as f64;
    let offsets = [-2.0, -1.0, 1.0, 2.0];
    let mut shifted = Vec::new();
    for s in offsets {
        let target_u = u + s * delta;
        let mut pts = Vec::with_capacity(n);
        for j in 0..n {
            let z0 = annulus.preimages[k][j];
            let z = data.invert(C::new(target_u, dv * j as f64), z0 * (s * delta / data.mu()).exp())?;
            pts.push(z);
        }
        shifted.push(pts);
    }
    // Integrate X_u = Re(Φ̃, 1) along each short vertical segment exactly via GL.
    let gl = GaussLegendre::new(8);
    let mut total = 0.0;
    let xv: Vec<[f64; 3]> = {
        let d: Vec<Vec<f64>> = (0..3)
            .map(|c| spectral::derivative_real(&annulus.points[k].iter().map(|p| p[c]).collect::<Vec<_>>(), period, 1))
            .collect();
        (0..n).map(|j| [d[0][j], d[1][j], d[2][j]]).collect()
    };
    for j in 0..n {
        // Positions relative to the level node along x₃* = v_j.
        let mut rel = [[0.0f64; 3]; 4];
        for (i, s) in offsets.iter().enumerate() {
            let z_end = shifted[i][j];
            let z0 = annulus.preimages[k][j];
            let mut acc = [0.0; 3];
            for (x, w) in gl.nodes.iter().zip(&gl.weights) {
                let t = 0.5 * (x + 1.0);
                let uu = u + s * delta * t;
                let guess = (z0.ln() * (1.0 - t) + z_end.ln() * t).exp();
                let z = data.invert(C::new(uu, dv * j as f64), guess)?;
                let f = horizontal_integrand(data.g.eval(z));
                acc[0] += 0.5 * s * delta * w * f[0].re;
                acc[1] += 0.5 * s * delta * w * f[1].re;
            }
            acc[2] = s * delta;
            rel[i] = acc;
        }
        let mut xu = [0.0; 3];
        for c in 0..3 {
            xu[c] = (rel[0][c] - 8.0 * rel[1][c] + 8.0 * rel[2][c] - rel[3][c]) / (12.0 * delta);
        }
        total += norm(xv[j]) / norm(xu);
    }
    Ok(total * dv / (2.0 * PI))
}

/// Lengths of the images of the circles `|z| = e^t` and their second
/// derivatives, plus the same data along true height levels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelProfile {
    /// Log-radii `t` of the sampled circles.
    pub log_radii: Vec<f64>,
    /// `μ·t`, the height the circle would have on the comparison catenoid.
    pub heights: Vec<f64>,
    pub lengths: Vec<f64>,
    pub second_derivative: Vec<f64>,
    pub flux_vertical: f64,
    /// Log-radii skipped because `zgh` or `zh/g` nearly vanishes there.
    pub skipped: Vec<f64>,
    /// Heights `x₃` of sampled level curves.
    pub level_heights: Vec<f64>,
    pub level_lengths: Vec<f64>,
    pub level_second_derivative: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileOptions {
    pub num_levels: usize,
    /// Finite-difference step for second derivatives.
    pub delta: f64,
    pub min_nodes: usize,
    pub max_nodes: usize,
    pub exec: Execution,
}

impl Default for ProfileOptions {
    fn default() -> Self {
        Self { num_levels: 21, delta: 1e-3, min_nodes: 256, max_nodes: 8192, exec: Execution::default() }
    }
}

fn five_point(f: [f64; 5], d: f64) -> f64 {
    (-f[4] + 16.0 * f[3] - 30.0 * f[2] + 16.0 * f[1] - f[0]) / (12.0 * d * d)
}

/// `½ ∮ (|zgh| + |zh/g|) dθ` over `|z| = e^t` and the smallest relative
/// modulus of the two terms.
fn circle_length(data: &WeierstrassData, t: f64, n: usize) -> (f64, f64) {
    let r = t.exp();
    let mut terms = Vec::with_capacity(2 * n);
    let mut a_min = f64::INFINITY;
    let mut a_max = 0.0f64;
    let mut b_min = f64::INFINITY;
    let mut b_max = 0.0f64;
    for j in 0..n {
        let z = polar(r, 2.0 * PI * j as f64 / n as f64);
        let g = data.g.eval(z);
        let zh = z * data.h.eval(z);
        let a = (zh * g).norm();
        let b = (zh / g).norm();
        terms.push(a);
        terms.push(b);
        a_min = a_min.min(a);
        a_max = a_max.max(a);
        b_min = b_min.min(b);
        b_max = b_max.max(b);
    }
    (0.5 * compensated_sum(terms) * 2.0 * PI / n as f64, (a_min / a_max).min(b_min / b_max))
}

/// Doubles the node count until the value agrees with the next doubling.
fn converge_nodes<F: Fn(usize) -> Result<f64>>(f: F, min: usize, max: usize, what: &str) -> Result<usize> {
    let mut n = min;
    let mut prev = f(n)?;
    loop {
        let next = f(2 * n)?;
        let diff = (next - prev).abs() / next.abs().max(f64::MIN_POSITIVE);
        if diff <= 1e-13 {
            return Ok(2 * n);
        }
        if 2 * n >= max {
            if diff <= 1e-8 {
                return Ok(2 * n);
            }
            return Err(Error::Resolution { what: what.into(), disagreement: diff });
        }
        n *= 2;
        prev = next;
    }
}

pub fn level_profile(data: &WeierstrassData, num_levels: usize) -> Result<LevelProfile> {
    level_profile_with(data, &ProfileOptions { num_levels, ..ProfileOptions::default() })
}

pub fn level_profile_with(data: &WeierstrassData, opts: &ProfileOptions) -> Result<LevelProfile> {
    let v = data.validate()?;
    if opts.num_levels < 2 {
        return Err(Error::Configuration("a level profile needs at least two levels".into()));
    }
    let d = opts.delta;
    let (t0, t1) = (data.r_inner.ln(), data.r_outer.ln());
    let pad = 0.01 * (t1 - t0) + 2.0 * d;
    let ts: Vec<f64> = (0..opts.num_levels).map(|k| t0 + pad + (t1 - t0 - 2.0 * pad) * k as f64 / (opts.num_levels - 1) as f64).collect();
    let circles = map_indexed(ts.len(), opts.exec, |k| -> Result<Option<(f64, f64)>> {
        let t = ts[k];
        let n = converge_nodes(|n| Ok(circle_length(data, t, n).0), opts.min_nodes, opts.max_nodes, "circle length quadrature")?;
        let mut vals = [0.0; 5];
        let mut vals2 = [0.0; 5];
        for (i, s) in [-2.0, -1.0, 0.0, 1.0, 2.0].iter().enumerate() {
            let (l, margin) = circle_length(data, t + s * d, n);
            if margin < 1e-6 {
                return Ok(None);
            }
            vals[i] = l;
            vals2[i] = circle_length(data, t + 2.0 * s * d, n).0;
        }
        let l2 = five_point(vals, d);
        let l2_coarse = five_point(vals2, 2.0 * d);
        if (l2 - l2_coarse).abs() > 1e-7 * (1.0 + vals[2]) {
            return Err(Error::Resolution { what: "finite-difference L''".into(), disagreement: (l2 - l2_coarse).abs() });
        }
        Ok(Some((vals[2], l2)))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;

    let mu = data.mu();
    let mut out = LevelProfile {
        log_radii: Vec::new(),
        heights: Vec::new(),
        lengths: Vec::new(),
        second_derivative: Vec::new(),
        flux_vertical: v.flux_vertical,
        skipped: Vec::new(),
        level_heights: Vec::new(),
        level_lengths: Vec::new(),
        level_second_derivative: Vec::new(),
    };
    for (t, c) in ts.iter().zip(circles) {
        match c {
            Some((l, l2)) => {
                out.log_radii.push(*t);
                out.heights.push(mu * t);
                out.lengths.push(l);
                out.second_derivative.push(l2);
            }
            None => out.skipped.push(*t),
        }
    }

    let (a, b) = data.height_range(4096);
    let w = b - a;
    let (ua, ub) = (a + 0.05 * w + 2.0 * d, b - 0.05 * w - 2.0 * d);
    if ua < ub {
        let us: Vec<f64> = (0..opts.num_levels).map(|k| ua + (ub - ua) * k as f64 / (opts.num_levels - 1) as f64).collect();
        let geo = map_indexed(us.len(), opts.exec, |k| -> Result<(f64, f64)> {
            let u = us[k];
            let n = converge_nodes(|n| data.level(u, n).map(|l| l.length()), 64, 4096, "level length quadrature")?;
            let mut vals = [0.0; 5];
            for (i, s) in [-2.0, -1.0, 0.0, 1.0, 2.0].iter().enumerate() {
                vals[i] = data.level(u + s * d, n)?.length();
            }
            Ok((vals[2], five_point(vals, d)))
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
        for (u, (l, l2)) in us.into_iter().zip(geo) {
            out.level_heights.push(u);
            out.level_lengths.push(l);
            out.level_second_derivative.push(l2);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvexityReport {
    /// `min (L'' - L)` over log-radius levels.
    pub min_slack: f64,
    /// `min (H'' - (2π/F₃)² H)` over height levels.
    pub min_slack_geometric: f64,
    /// Largest `|slack|/L` over both gauges.
    pub max_relative_slack: f64,
    pub equality_flag: bool,
}

pub fn convexity_check(profile: &LevelProfile) -> ConvexityReport {
    let mut min_slack = f64::INFINITY;
    let mut max_rel = 0.0f64;
    for (l, l2) in profile.lengths.iter().zip(&profile.second_derivative) {
        let s = l2 - l;
        min_slack = min_slack.min(s);
        max_rel = max_rel.max(s.abs() / l);
    }
    let c = (2.0 * PI / profile.flux_vertical).powi(2);
    let mut min_geo = f64::INFINITY;
    for (l, l2) in profile.level_lengths.iter().zip(&profile.level_second_derivative) {
        let s = l2 - c * l;
        min_geo = min_geo.min(s);
        max_rel = max_rel.max(s.abs() / (c * l));
    }
    ConvexityReport { min_slack, min_slack_geometric: min_geo, max_relative_slack: max_rel, equality_flag: max_rel <= 1e-6 }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CpxReport {
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
}

/// Compares `∮ ρ²|F'|²/|F| dθ` with `∮ |F| dθ` on `|z| = ρ`.
pub fn cpx_inequality_check(f: &Laurent, rho: f64) -> Result<CpxReport> {
    if !(rho.is_finite() && rho > 0.0) {
        return Err(Error::InvalidParameter(format!("radius must be positive, got {rho}")));
    }
    let scale = f.terms().map(|(k, c)| c.norm() * rho.powi(k)).fold(0.0, f64::max);
    if scale == 0.0 {
        return Err(Error::Precondition("F vanishes identically".into()));
    }
    if f.coeff(0).norm() > 1e-12 * scale {
        return Err(Error::Precondition(format!("constant coefficient {} is not zero", f.coeff(0))));
    }
    let eval = |n: usize| -> Result<(f64, f64)> {
        let mut lhs = 0.0;
        let mut rhs = 0.0;
        let mut lo = f64::INFINITY;
        for j in 0..n {
            let z = polar(rho, 2.0 * PI * j as f64 / n as f64);
            let (v, dv) = f.eval_with_derivative(z);
            let m = v.norm();
            lo = lo.min(m);
            lhs += rho * rho * dv.norm_sqr() / m;
            rhs += m;
        }
        if lo < 1e-6 * scale {
            return Err(Error::Precondition(format!("F nearly vanishes on |z| = {rho} (|F| = {lo:e})")));
        }
        let w = 2.0 * PI / n as f64;
        Ok((lhs * w, rhs * w))
    };
    let mut n = 256;
    let mut prev = eval(n)?;
    loop {
        let next = eval(2 * n)?;
        let diff = ((next.0 - prev.0).abs() + (next.1 - prev.1).abs()) / next.1;
        if diff <= 1e-14 || 2 * n >= 1 << 17 {
            if diff > 1e-9 {
                return Err(Error::Resolution { what: "holomorphic inequality quadrature".into(), disagreement: diff });
            }
            return Ok(CpxReport { lhs: next.0, rhs: next.1, slack: next.0 - next.1 });
        }
        n *= 2;
        prev = next;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AreaReport {
    pub area_sigma: f64,
    pub area_catenoid: f64,
    pub gap: f64,
    /// Height of the shortest level, where the comparison catenoid has its neck.
    pub neck_height: f64,
    pub flux_vertical: f64,
    /// `min (H¹(Σ_u) - H¹(C_u))/H¹(C_u)` over the sampled levels.
    pub min_level_gap: f64,
    pub levels_sampled: usize,
}

/// Area of the part of the annulus inside `slab` against the vertical
/// catenoid with the same flux and its neck at the shortest level.
pub fn area_comparison(data: &WeierstrassData, slab: &Slab) -> Result<AreaReport> {
    area_comparison_with(data, slab, Execution::default())
}

pub fn area_comparison_with(data: &WeierstrassData, slab: &Slab, exec: Execution) -> Result<AreaReport> {
    let v = data.validate()?;
    let (a, b) = data.height_range(4096);
    let tol = 1e-12 * (1.0 + a.abs().max(b.abs()));
    if slab.h_minus < a - tol || slab.h_plus > b + tol {
        return Err(Error::Domain(format!(
            "slab [{}, {}] is not spanned by the closed levels [{a}, {b}]",
            slab.h_minus, slab.h_plus
        )));
    }
    let (lo, hi) = (slab.h_minus.max(a), slab.h_plus.min(b));
    let mid = 0.5 * (lo + hi);
    let n = [lo, mid, hi]
        .iter()
        .map(|&u| converge_nodes(|n| data.level(u, n).map(|l| l.moments()[1]), 64, 4096, "level area density"))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .max()
        .unwrap_or(256);
    let moments = |u: f64| -> Result<[f64; 4]> { Ok(data.level(u, n)?.moments()) };

    let gl = GaussLegendre::new(16);
    let (us, ws) = gl.composite(lo, hi, 16);
    let ms = map_indexed(us.len(), exec, |i| moments(us[i])).into_iter().collect::<Result<Vec<_>>>()?;
    let area_sigma: f64 = ms.iter().zip(&ws).map(|(m, w)| m[1] * w).sum();

    let (d_lo, d_hi) = (moments(lo)?[2], moments(hi)?[2]);
    let neck = if d_lo >= 0.0 {
        lo
    } else if d_hi <= 0.0 {
        hi
    } else {
        let f = |u: f64| match moments(u) {
            Ok(m) => (m[2], m[3]),
            Err(_) => (f64::NAN, f64::NAN),
        };
        hybrid(f, lo, hi, RootOptions { bracket_width: 1e-10, residual: 1e-14, max_iter: 200 })?.x
    };
    let mu = data.mu();
    let cat = CatenoidPiece::new(mu, neck, *slab)?;
    let area_catenoid = cat.area_in_slab();
    let mut min_gap = f64::INFINITY;
    for (u, m) in us.iter().zip(&ms) {
        let lc = 2.0 * PI * cat.radius(*u);
        min_gap = min_gap.min((m[0] - lc) / lc);
    }
    Ok(AreaReport {
        area_sigma,
        area_catenoid,
        gap: area_sigma - area_catenoid,
        neck_height: neck,
        flux_vertical: v.flux_vertical,
        min_level_gap: min_gap,
        levels_sampled: us.len(),
    })
}

/// Adjusts `h₋₂` and `h₀` so that `Res(gh) = Res(h/g) = 0`, keeping the
/// other coefficients of `h`.
pub fn project_residues(g: &Laurent, h: &Laurent, r: f64) -> Result<Laurent> {
    let n = 1024;
    let samples: Vec<C> = (0..n).map(|j| polar(r, 2.0 * PI * j as f64 / n as f64)).map(|z| g.eval(z).inv()).collect();
    let c = spectral::coefficients(&samples);
    // Laurent coefficient k of 1/g on the circle.
    let gamma = |k: i64| -> C {
        let idx = k.rem_euclid(n as i64) as usize;
        c[idx] / r.powi(k as i32)
    };
    let mut base = h.clone();
    base.set(-2, C::new(0.0, 0.0));
    base.set(0, C::new(0.0, 0.0));
    let mut rhs = [C::new(0.0, 0.0); 2];
    for (k, hk) in base.terms() {
        rhs[0] -= hk * g.coeff(-1 - k);
        rhs[1] -= hk * gamma(-1 - k as i64);
    }
    let m = [[g.coeff(1), g.coeff(-1)], [gamma(1), gamma(-1)]];
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    if det.norm() < 1e-12 {
        return Err(Error::InvalidData(format!("residue projection is singular (det {det})")));
    }
    let hm2 = (rhs[0] * m[1][1] - m[0][1] * rhs[1]) / det;
    let h0 = (m[0][0] * rhs[1] - rhs[0] * m[1][0]) / det;
    let mut out = base;
    out.set(-2, hm2);
    out.set(0, h0);
    Ok(out)
}

/// Parameters for random near-catenoidal Weierstrass data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RandomDataSpec {
    pub r_inner: f64,
    pub r_outer: f64,
    pub mu_range: (f64, f64),
    /// Relative size of each perturbation term at the worst radius.
    pub amplitude: f64,
}

impl Default for RandomDataSpec {
    fn default() -> Self {
        Self { r_inner: (-1.2f64).exp(), r_outer: 1.2f64.exp(), mu_range: (0.5, 2.0), amplitude: 0.08 }
    }
}

fn cnormal<R: Rng + ?Sized>(rng: &mut R) -> C {
    let a: f64 = StandardNormal.sample(rng);
    let b: f64 = StandardNormal.sample(rng);
    C::new(a, b) * std::f64::consts::FRAC_1_SQRT_2
}

/// Size of `z^p` relative to `z^base` at the radius where it is largest.
fn term_weight(p: i32, base: i32, spec: &RandomDataSpec) -> f64 {
    let e = p - base;
    if e >= 0 {
        spec.r_outer.powi(-e)
    } else {
        spec.r_inner.powi(-e)
    }
}

/// Draws valid data by rejection: random perturbations of `g = z`,
/// `h = μ/z`, followed by residue projection and full validation.
pub fn random_data<R: Rng + ?Sized>(rng: &mut R, spec: &RandomDataSpec) -> Result<WeierstrassData> {
    for _ in 0..1000 {
        let mu = rng.random_range(spec.mu_range.0..=spec.mu_range.1);
        let eps = spec.amplitude * rng.random_range(0.2..=1.0);
        let mut g = Laurent::monomial(1, C::new(1.0, 0.0));
        for p in [-2, -1, 0, 2, 3] {
            g.add(p, cnormal(rng) * eps * term_weight(p, 1, spec) / 5f64.sqrt());
        }
        let mut h = Laurent::monomial(-1, C::new(mu, 0.0));
        for p in [-3, 1, 2] {
            h.add(p, cnormal(rng) * mu * eps * term_weight(p, -1, spec) / 3f64.sqrt());
        }
        let Ok(h) = project_residues(&g, &h, (spec.r_inner * spec.r_outer).sqrt()) else { continue };
        let Ok(data) = WeierstrassData::new(g, h, spec.r_inner, spec.r_outer) else { continue };
        if data.validate().is_err() {
            continue;
        }
        let (a, b) = data.height_range(1024);
        if a >= b {
            continue;
        }
        let probe = data.level(0.5 * (a + b), 64);
        if probe.is_err() {
            continue;
        }
        return Ok(data);
    }
    Err(Error::no_conv("random Weierstrass data rejection sampling", f64::NAN))
}

/// `count` independent draws; draw `i` uses its own stream seeded by
/// `seed + i`, so results do not depend on the execution mode.
pub fn random_batch(seed: u64, count: usize, spec: &RandomDataSpec, exec: Execution) -> Result<Vec<WeierstrassData>> {
    map_indexed(count, exec, |i| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(i as u64));
        random_data(&mut rng, spec)
    })
    .into_iter()
    .collect()
}

/// Random Laurent polynomial with powers in `-4..=4`, zero constant term, and
/// no zero near `|z| = rho`.
pub fn random_cpx_polynomial<R: Rng + ?Sized>(rng: &mut R, rho: f64) -> Laurent {
    loop {
        let mut f = Laurent::new();
        let terms = rng.random_range(1..=8);
        for _ in 0..terms {
            let mut p: i32 = rng.random_range(-4..=3);
            if p >= 0 {
                p += 1;
            }
            f.add(p, cnormal(rng) * rho.powi(-p));
        }
        if cpx_inequality_check(&f, rho).is_ok() {
            return f;
        }
    }
}
