//! Lowest periodic eigenvalue of `-d²/ds² + κ²` on closed curves and the
//! functional `L²λ₁/(2π)²`, conjectured to be at least 1 and known to be at
//! least ½.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par::{map_slice, Execution};
use crate::spectral::{self, TrigInterpolant};

pub const MIN_SAMPLES: usize = 32;
/// Smallest admissible speed relative to the mean speed.
pub const MIN_RELATIVE_SPEED: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CurvatureMethod {
    Spectral,
    /// Fourth-order periodic differences, used when the samples are not
    /// spectrally resolved.
    FiniteDifference,
}

/// A closed curve sampled at `N` parameter values uniform in `[0, 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosedCurve {
    samples: Vec<[f64; 3]>,
    speed: Vec<f64>,
    arclength: Vec<f64>,
    total_length: f64,
    curvature: Vec<f64>,
    method: CurvatureMethod,
}

fn coord(samples: &[[f64; 3]], c: usize) -> Vec<f64> {
    samples.iter().map(|p| p[c]).collect()
}

fn spectral_tail(x: &[f64]) -> f64 {
    let n = x.len();
    let c = spectral::coefficients(&x.iter().map(|&v| Complex64::new(v, 0.0)).collect::<Vec<_>>());
    let total: f64 = c.iter().skip(1).map(|v| v.norm_sqr()).sum();
    if total == 0.0 {
        return 0.0;
    }
    let tail: f64 = c
        .iter()
        .enumerate()
        .filter(|(k, _)| spectral::wavenumber(*k, n).unsigned_abs() as usize > 3 * n / 8)
        .map(|(_, v)| v.norm_sqr())
        .sum();
    (tail / total).sqrt()
}

fn fd_periodic(x: &[f64], h: f64, order: u32) -> Vec<f64> {
    let n = x.len();
    let at = |j: isize| x[j.rem_euclid(n as isize) as usize];
    (0..n as isize)
        .map(|j| match order {
            1 => (at(j - 2) - 8.0 * at(j - 1) + 8.0 * at(j + 1) - at(j + 2)) / (12.0 * h),
            _ => (-at(j - 2) + 16.0 * at(j - 1) - 30.0 * at(j) + 16.0 * at(j + 1) - at(j + 2)) / (12.0 * h * h),
        })
        .collect()
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn norm(a: [f64; 3]) -> f64 {
    (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt()
}

impl ClosedCurve {
    pub fn new(samples: Vec<[f64; 3]>) -> Result<Self> {
        let n = samples.len();
        if n < MIN_SAMPLES {
            return Err(Error::Precondition(format!("a closed curve needs at least {MIN_SAMPLES} samples, got {n}")));
        }
        if samples.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidData("non-finite curve sample".into()));
        }
        let coords: Vec<Vec<f64>> = (0..3).map(|c| coord(&samples, c)).collect();
        let tail = coords.iter().map(|c| spectral_tail(c)).fold(0.0, f64::max);
        let method = if tail <= 1e-6 { CurvatureMethod::Spectral } else { CurvatureMethod::FiniteDifference };
        let (d1, d2): (Vec<Vec<f64>>, Vec<Vec<f64>>) = match method {
            CurvatureMethod::Spectral => coords
                .iter()
                .map(|c| (spectral::derivative_real(c, 1.0, 1), spectral::derivative_real(c, 1.0, 2)))
                .unzip(),
            CurvatureMethod::FiniteDifference => {
                let h = 1.0 / n as f64;
                coords.iter().map(|c| (fd_periodic(c, h, 1), fd_periodic(c, h, 2))).unzip()
            }
        };
        let mut speed = Vec::with_capacity(n);
        let mut curvature = Vec::with_capacity(n);
        for j in 0..n {
            let a = [d1[0][j], d1[1][j], d1[2][j]];
            let b = [d2[0][j], d2[1][j], d2[2][j]];
            let s = norm(a);
            speed.push(s);
            curvature.push(norm(cross(a, b)) / (s * s * s));
        }
        let mean = speed.iter().sum::<f64>() / n as f64;
        let min = speed.iter().cloned().fold(f64::INFINITY, f64::min);
        if !(mean > 0.0) || min < MIN_RELATIVE_SPEED * mean {
            return Err(Error::Precondition(format!("curve is not immersed (speed {min:e} against mean {mean:e})")));
        }
        let (cum, _) = spectral::cumulative_integral(&speed.iter().map(|&v| Complex64::new(v, 0.0)).collect::<Vec<_>>(), 1.0);
        let arclength = cum.iter().map(|c| c.re).collect();
        Ok(Self { samples, speed, arclength, total_length: mean, curvature, method })
    }

    pub fn from_fn<F: Fn(f64) -> [f64; 3]>(n: usize, f: F) -> Result<Self> {
        Self::new((0..n).map(|j| f(j as f64 / n as f64)).collect())
    }

    pub fn circle(radius: f64, n: usize) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::InvalidParameter(format!("radius must be positive, got {radius}")));
        }
        Self::from_fn(n, |p| {
            let t = 2.0 * PI * p;
            [radius * t.cos(), radius * t.sin(), 0.0]
        })
    }

    /// Ellipse with semi-axes `a`, `b`, sampled uniformly in the angle.
    pub fn ellipse(a: f64, b: f64, n: usize) -> Result<Self> {
        if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
            return Err(Error::InvalidParameter(format!("semi-axes must be positive, got {a}, {b}")));
        }
        Self::from_fn(n, |p| {
            let t = 2.0 * PI * p;
            [a * t.cos(), b * t.sin(), 0.0]
        })
    }

    pub fn samples(&self) -> &[[f64; 3]] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn total_length(&self) -> f64 {
        self.total_length
    }

    /// Arclength from the first sample to each sample.
    pub fn arclength(&self) -> &[f64] {
        &self.arclength
    }

    pub fn curvature(&self) -> &[f64] {
        &self.curvature
    }

    pub fn speed(&self) -> &[f64] {
        &self.speed
    }

    pub fn curvature_method(&self) -> CurvatureMethod {
        self.method
    }

    pub fn transformed<F: Fn([f64; 3]) -> [f64; 3]>(&self, f: F) -> Result<Self> {
        Self::new(self.samples.iter().map(|&p| f(p)).collect())
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        self.transformed(|p| [c * p[0], c * p[1], c * p[2]])
    }

    /// Parses `{"points": [[x, y(, z)], ...]}` or `{"ellipse": [a, b], "n": N}`.
    pub fn from_json(s: &str) -> Result<Self> {
        let input: CurveInput = serde_json::from_str(s).map_err(|e| Error::InvalidData(format!("malformed curve document: {e}")))?;
        input.build()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CurveInput {
    Points { points: Vec<Vec<f64>> },
    Ellipse { ellipse: [f64; 2], n: usize },
}

impl CurveInput {
    pub fn build(&self) -> Result<ClosedCurve> {
        match self {
            CurveInput::Points { points } => {
                let mut out = Vec::with_capacity(points.len());
                for p in points {
                    match p.as_slice() {
                        [x, y] => out.push([*x, *y, 0.0]),
                        [x, y, z] => out.push([*x, *y, *z]),
                        _ => return Err(Error::InvalidData(format!("curve point with {} coordinates", p.len()))),
                    }
                }
                ClosedCurve::new(out)
            }
            CurveInput::Ellipse { ellipse, n } => ClosedCurve::ellipse(ellipse[0], ellipse[1], *n),
        }
    }
}

struct Interpolated {
    speed: TrigInterpolant,
    coords: Vec<TrigInterpolant>,
    length: f64,
}

impl Interpolated {
    fn new(curve: &ClosedCurve) -> Self {
        Self {
            speed: TrigInterpolant::new(&curve.speed, 1.0),
            coords: (0..3).map(|c| TrigInterpolant::new(&coord(&curve.samples, c), 1.0)).collect(),
            length: curve.total_length,
        }
    }

    fn arclength(&self, p: f64) -> f64 {
        self.length * p + self.speed.periodic_antiderivative(p)
    }

    /// Parameters of `n` points equally spaced in arclength, by Newton's
    /// method safeguarded with bisection (`s(p)` is increasing).
    fn arclength_nodes(&self, n: usize) -> Result<Vec<f64>> {
        let len = self.length;
        let mut out = Vec::with_capacity(n);
        let mut prev = 0.0;
        for k in 0..n {
            let target = len * k as f64 / n as f64;
            let (mut lo, mut hi) = (prev, 1.0);
            let mut p = (prev + len / n as f64 / self.speed.eval(prev)[0].max(f64::MIN_POSITIVE)).min(1.0);
            if k == 0 {
                p = 0.0;
            }
            for _ in 0..200 {
                let r = self.arclength(p) - target;
                if r.abs() <= 1e-13 * len {
                    break;
                }
                if r > 0.0 {
                    hi = p;
                } else {
                    lo = p;
                }
                let ds = self.speed.eval(p)[0];
                let q = p - r / ds;
                p = if ds > 0.0 && q > lo && q < hi { q } else { 0.5 * (lo + hi) };
            }
            let r = (self.arclength(p) - target).abs();
            if r > 1e-11 * len {
                return Err(Error::no_conv("arclength inversion", r));
            }
            out.push(p);
            prev = p;
        }
        Ok(out)
    }

    fn point(&self, p: f64) -> [f64; 3] {
        [self.coords[0].eval(p)[0], self.coords[1].eval(p)[0], self.coords[2].eval(p)[0]]
    }

    fn curvature(&self, p: f64) -> f64 {
        let d: Vec<[f64; 3]> = self.coords.iter().map(|c| c.eval(p)).collect();
        let a = [d[0][1], d[1][1], d[2][1]];
        let b = [d[0][2], d[1][2], d[2][2]];
        norm(cross(a, b)) / norm(a).powi(3)
    }
}

/// Resamples the trigonometric interpolant of `curve` at `n` points equally
/// spaced in arclength, starting from the first sample.
pub fn resample_arclength(curve: &ClosedCurve, n: usize) -> Result<ClosedCurve> {
    if n < MIN_SAMPLES {
        return Err(Error::Precondition(format!("resampling needs at least {MIN_SAMPLES} points, got {n}")));
    }
    let interp = Interpolated::new(curve);
    let nodes = interp.arclength_nodes(n)?;
    ClosedCurve::new(nodes.into_iter().map(|p| interp.point(p)).collect())
}

/// `(∫ f_s² + κ² f²) / ∫ f²` with `f` given at the curve samples.
pub fn rayleigh_quotient(curve: &ClosedCurve, f: &[f64]) -> Result<f64> {
    let n = curve.len();
    if f.len() != n {
        return Err(Error::Precondition(format!("test function has {} values for {n} samples", f.len())));
    }
    let fp = spectral::derivative_real(f, 1.0, 1);
    let mut num = 0.0;
    let mut den = 0.0;
    for j in 0..n {
        let v = curve.speed[j];
        num += fp[j] * fp[j] / v + curve.curvature[j].powi(2) * f[j] * f[j] * v;
        den += f[j] * f[j] * v;
    }
    let scale = f.iter().map(|x| x * x).sum::<f64>() / n as f64 * curve.total_length;
    if !(den / n as f64 > 1e-300) || scale == 0.0 {
        return Err(Error::Precondition("test function is identically zero".into()));
    }
    Ok(num / den)
}

/// Symmetric Fourier second-derivative matrix on `n` (even) equispaced
/// points of a period `period` interval.
pub fn fourier_second_derivative(n: usize, period: f64) -> DMatrix<f64> {
    let h = 2.0 * PI / n as f64;
    let scale = (2.0 * PI / period).powi(2);
    DMatrix::from_fn(n, n, |i, j| {
        let d = i as isize - j as isize;
        let v = if d == 0 {
            -PI * PI / (3.0 * h * h) - 1.0 / 6.0
        } else {
            let sign = if d.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
            -sign / (2.0 * (0.5 * d as f64 * h).sin().powi(2))
        };
        v * scale
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OvalReport {
    pub length: f64,
    pub lambda1: f64,
    /// `L²λ₁/(2π)²`.
    pub functional: f64,
    /// `(N, λ₁)` for each discretization tried.
    pub refinements: Vec<(usize, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenOptions {
    pub start: usize,
    pub max: usize,
    /// Relative agreement required between `N` and `2N`.
    pub tolerance: f64,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self { start: 64, max: 2048, tolerance: 1e-8 }
    }
}

/// `κ²` at `n` points equally spaced in arclength. Smooth curves use the
/// interpolant of the original samples; others are resampled and
/// differenced.
fn potential(curve: &ClosedCurve, n: usize) -> Result<Vec<f64>> {
    match curve.method {
        CurvatureMethod::Spectral => {
            let interp = Interpolated::new(curve);
            Ok(interp.arclength_nodes(n)?.into_iter().map(|p| interp.curvature(p).powi(2)).collect())
        }
        CurvatureMethod::FiniteDifference => Ok(resample_arclength(curve, n)?.curvature.iter().map(|k| k * k).collect()),
    }
}

fn lowest_at(curve: &ClosedCurve, n: usize) -> Result<(f64, f64)> {
    let len = curve.total_length;
    let mut m = -fourier_second_derivative(n, len);
    for (j, v) in potential(curve, n)?.into_iter().enumerate() {
        m[(j, j)] += v;
    }
    let ev = m.symmetric_eigenvalues();
    Ok((ev.iter().cloned().fold(f64::INFINITY, f64::min), len))
}

pub fn lowest_eigenvalue(curve: &ClosedCurve) -> Result<OvalReport> {
    lowest_eigenvalue_with(curve, &EigenOptions::default())
}

pub fn lowest_eigenvalue_with(curve: &ClosedCurve, opts: &EigenOptions) -> Result<OvalReport> {
    let mut n = opts.start.max(MIN_SAMPLES);
    n += n % 2;
    let mut refinements = Vec::new();
    let (mut prev, _) = lowest_at(curve, n)?;
    refinements.push((n, prev));
    loop {
        if 2 * n > opts.max {
            let last = refinements.len();
            let disagreement = if last >= 2 {
                (refinements[last - 1].1 - refinements[last - 2].1).abs() / refinements[last - 1].1.abs()
            } else {
                f64::NAN
            };
            return Err(Error::Resolution { what: "lowest periodic eigenvalue".into(), disagreement });
        }
        let (next, len) = lowest_at(curve, 2 * n)?;
        refinements.push((2 * n, next));
        if (next - prev).abs() <= opts.tolerance * next.abs() {
            let functional = len * len * next / (4.0 * PI * PI);
            if functional < 1.0 {
                log::warn!("curve with L²λ₁/(2π)² = {functional:.12} < 1; refinement study {refinements:?}");
            }
            return Ok(OvalReport { length: len, lambda1: next, functional, refinements });
        }
        prev = next;
        n *= 2;
    }
}

pub fn evaluate_batch(curves: &[ClosedCurve], exec: Execution) -> Vec<Result<OvalReport>> {
    map_slice(curves, exec, lowest_eigenvalue)
}

/// Convex polygon with rounded corners, built from its radius of curvature
/// as a function of the tangent angle `φ`: a floor `corner·L/2π` plus, for
/// each edge of length `ℓ` and direction `θ`, a von Mises bump of mass `ℓ`
/// and angular width `width` centred at `θ`. The curve closes because the
/// edge vectors sum to zero. Vertices must be in counterclockwise order.
pub fn rounded_polygon(vertices: &[[f64; 2]], corner: f64, width: f64, n: usize) -> Result<ClosedCurve> {
    let m = vertices.len();
    if m < 3 {
        return Err(Error::InvalidParameter("a polygon needs at least three vertices".into()));
    }
    if !(corner > 0.0 && width > 0.0) {
        return Err(Error::InvalidParameter(format!("corner {corner} and width {width} must be positive")));
    }
    let edges: Vec<(f64, f64)> = (0..m)
        .map(|i| {
            let a = vertices[i];
            let b = vertices[(i + 1) % m];
            let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
            ((dx * dx + dy * dy).sqrt(), dy.atan2(dx))
        })
        .collect();
    let per: f64 = edges.iter().map(|e| e.0).sum();
    let conc = 1.0 / (width * width);
    let phis: Vec<f64> = (0..n).map(|j| 2.0 * PI * j as f64 / n as f64).collect();
    let bump = |x: f64| (conc * (x.cos() - 1.0)).exp();
    let mass: f64 = phis.iter().map(|&p| bump(p)).sum::<f64>() * 2.0 * PI / n as f64;
    let rho: Vec<f64> = phis
        .iter()
        .map(|&p| corner * per / (2.0 * PI) + edges.iter().map(|(l, t)| l * bump(p - t) / mass).sum::<f64>())
        .collect();
    let tangent: Vec<Complex64> = phis.iter().zip(&rho).map(|(&p, &r)| Complex64::from_polar(r, p)).collect();
    let (x, _) = spectral::cumulative_integral(&tangent, 2.0 * PI);
    ClosedCurve::new(x.into_iter().map(|z| [z.re, z.im, 0.0]).collect())
}

pub fn regular_polygon(sides: usize) -> Vec<[f64; 2]> {
    (0..sides)
        .map(|k| {
            let t = 2.0 * PI * k as f64 / sides as f64;
            [t.cos(), t.sin()]
        })
        .collect()
}

/// Star-shaped planar curve `r(θ) = exp(Σ a_k cos(kθ + φ_k))` with
/// `|a_k| ≤ amplitude/k²`.
pub fn random_star_curve<R: Rng + ?Sized>(rng: &mut R, modes: usize, amplitude: f64, n: usize) -> Result<ClosedCurve> {
    let terms: Vec<(f64, f64, f64)> = (2..=modes + 1)
        .map(|k| (k as f64, amplitude * rng.random_range(-1.0..1.0) / (k * k) as f64, rng.random_range(0.0..2.0 * PI)))
        .collect();
    ClosedCurve::from_fn(n, |p| {
        let t = 2.0 * PI * p;
        let r = terms.iter().map(|(k, a, f)| a * (k * t + f).cos()).sum::<f64>().exp();
        [r * t.cos(), r * t.sin(), 0.0]
    })
}

/// Space curve: a unit circle with random low-mode vertical and radial
/// Fourier perturbations.
pub fn random_space_curve<R: Rng + ?Sized>(rng: &mut R, modes: usize, amplitude: f64, n: usize) -> Result<ClosedCurve> {
    let mut terms = Vec::new();
    for k in 1..=modes {
        let a = amplitude / (k * k) as f64;
        terms.push((k as f64, a * rng.random_range(-1.0..1.0), rng.random_range(0.0..2.0 * PI), a * rng.random_range(-1.0..1.0), rng.random_range(0.0..2.0 * PI)));
    }
    ClosedCurve::from_fn(n, |p| {
        let t = 2.0 * PI * p;
        let mut r = 1.0;
        let mut z = 0.0;
        for &(k, a, f, b, g) in &terms {
            if k >= 2.0 {
                r += a * (k * t + f).cos();
            }
            z += b * (k * t + g).cos();
        }
        [r * t.cos(), r * t.sin(), z]
    })
}

/// Fifty named curves: ellipses, rounded polygons, random star-shaped and
/// space curves. Deterministic for a given seed.
pub fn corpus(seed: u64) -> Result<Vec<(String, ClosedCurve)>> {
    let mut out = Vec::with_capacity(50);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for k in 0..15 {
        let b = 1.0 / (1.0 + 0.2 * k as f64);
        out.push((format!("ellipse_1_{b:.4}"), ClosedCurve::ellipse(1.0, b, 256)?));
    }
    for sides in 3..=8 {
        out.push((format!("polygon_{sides}"), rounded_polygon(&regular_polygon(sides), 0.35, 0.3, 512)?));
    }
    for k in 0..9 {
        let m = rng.random_range(3..=7);
        // Vertices at least 0.4 rad apart, so no corner is a sliver.
        let angles = loop {
            let mut a: Vec<f64> = (0..m).map(|_| rng.random_range(0.0..2.0 * PI)).collect();
            a.sort_by(f64::total_cmp);
            let gaps = (0..m).map(|i| (a[(i + 1) % m] - a[i]).rem_euclid(2.0 * PI));
            if gaps.fold(f64::INFINITY, f64::min) >= 0.4 {
                break a;
            }
        };
        let verts: Vec<[f64; 2]> = angles.iter().map(|t| [t.cos(), t.sin()]).collect();
        out.push((format!("random_polygon_{k}"), rounded_polygon(&verts, 0.35, 0.3, 512)?));
    }
    for k in 0..15 {
        out.push((format!("star_{k}"), random_star_curve(&mut rng, 5, 0.6, 256)?));
    }
    for k in 0..5 {
        out.push((format!("space_{k}"), random_space_curve(&mut rng, 4, 0.4, 256)?));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn circle_is_equality_case() {
        let r = lowest_eigenvalue(&ClosedCurve::circle(1.7, 64).unwrap()).unwrap();
        assert!((r.functional - 1.0).abs() < 1e-9);
        assert!((r.lambda1 - 1.0 / (1.7f64 * 1.7)).abs() < 1e-9);
    }

    #[test]
    fn constant_rayleigh_quotient_on_circle() {
        let c = ClosedCurve::circle(2.0, 64).unwrap();
        let q = rayleigh_quotient(&c, &vec![3.0; 64]).unwrap();
        assert!((q - 0.25).abs() < 1e-12);
    }

    #[test]
    fn too_few_samples() {
        assert!(ClosedCurve::circle(1.0, 16).is_err());
    }

    #[test]
    fn parses_both_inputs() {
        let c = ClosedCurve::from_json(r#"{"ellipse": [2, 1], "n": 64}"#).unwrap();
        assert_eq!(c.len(), 64);
        let pts: Vec<Vec<f64>> = (0..40).map(|j| {
            let t = 2.0 * PI * j as f64 / 40.0;
            vec![t.cos(), t.sin()]
        }).collect();
        let doc = serde_json::json!({ "points": pts }).to_string();
        assert!((ClosedCurve::from_json(&doc).unwrap().total_length() - 2.0 * PI).abs() < 1e-12);
    }
}
