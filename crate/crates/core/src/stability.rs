//! Marginally stable catenoid pieces cut out by tangent cones, and the lowest
//! rotationally symmetric Jacobi eigenvalue of a clipped catenoid.

use serde::{Deserialize, Serialize};

use crate::catenoid::{CatenoidPiece, Slab};
use crate::error::{Error, Result};
use crate::quadrature::GaussLegendre;
use crate::roots::{bisect_predicate, hybrid, RootOptions};

/// Heights where the two cones from `apex_height·e₃` touch the unit catenoid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConeTangency {
    pub apex_height: f64,
    pub t_plus: f64,
    pub t_minus: f64,
}

/// Positive root of `t - coth t = z`.
fn t_plus(z: f64) -> f64 {
    let lo = 1.0 / (z.abs() + 2.0);
    let hi = z.max(0.0) + 2.0;
    let f = |t: f64| {
        let c = 1.0 / t.tanh();
        (t - c - z, 1.0 + (c * c - 1.0))
    };
    let opts = RootOptions { bracket_width: 1e-8, residual: 1e-14 * (1.0 + z.abs()), max_iter: 300 };
    hybrid(f, lo, hi, opts).expect("t - coth t - z changes sign on the bracket").x
}

pub fn tangent_cone_heights(apex_height: f64) -> ConeTangency {
    ConeTangency { apex_height, t_plus: t_plus(apex_height), t_minus: -t_plus(-apex_height) }
}

/// Apex height whose cone touches the catenoid at height `t` (`t ≠ 0`).
pub fn apex_for_tangency(t: f64) -> f64 {
    t - 1.0 / t.tanh()
}

/// The unit catenoid clipped between the two tangency heights.
pub fn cat_ms(apex_height: f64) -> CatenoidPiece {
    let c = tangent_cone_heights(apex_height);
    CatenoidPiece { scale: 1.0, offset: 0.0, slab: Slab { h_minus: c.t_minus, h_plus: c.t_plus } }
}

/// Normal component of the dilation about the apex: `1 - (h - z) tanh h`.
pub fn dilation_jacobi_field(apex_height: f64, height: f64) -> f64 {
    1.0 - (height - apex_height) * height.tanh()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum EigenMethod {
    /// RK4 shooting with bisection on the eigenvalue.
    #[default]
    Shooting,
    /// Second-order finite differences, Sturm-sequence bisection.
    FiniteDifference,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JacobiOptions {
    /// Number of mesh intervals.
    pub mesh: usize,
    pub method: EigenMethod,
    /// Angular Fourier mode; 0 is the rotationally symmetric sector.
    pub angular_mode: u32,
}

impl Default for JacobiOptions {
    fn default() -> Self {
        Self { mesh: 4096, method: EigenMethod::Shooting, angular_mode: 0 }
    }
}

pub const MIN_MESH: usize = 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JacobiSpectrumResult {
    pub lowest_eigenvalue: f64,
    /// Eigenfunction on the uniform mesh, positive, scaled to unit maximum.
    pub eigenfunction_samples: Vec<f64>,
    pub mesh_size: usize,
    /// Largest endpoint magnitude of the normalized eigenfunction.
    pub end_residual: f64,
}

/// Jacobi problem `-u'' + k²u - 2 sech²(s) u = μ cosh²(s) u` on `[a, b]`.
struct Problem {
    a: f64,
    h: f64,
    n: usize,
    k2: f64,
    /// `(2 sech², cosh²)` at nodes `s_i` and midpoints, interleaved: index `2i` is
    /// node `i`, `2i + 1` the midpoint after it.
    coef: Vec<(f64, f64)>,
}

impl Problem {
    fn new(a: f64, b: f64, n: usize, k: u32) -> Self {
        let h = (b - a) / n as f64;
        let coef = (0..=2 * n)
            .map(|j| {
                let s = a + 0.5 * h * j as f64;
                let c = s.cosh();
                (2.0 / (c * c), c * c)
            })
            .collect();
        Self { a, h, n, k2: (k * k) as f64, coef }
    }

    fn q(&self, j: usize, mu: f64) -> f64 {
        let (p, w) = self.coef[j];
        self.k2 - p - mu * w
    }

    /// Runs RK4 from `u(a) = 0, u'(a) = 1`. Returns whether `u` reaches zero
    /// in `(a, b]`, optionally recording nodal values.
    fn shoot(&self, mu: f64, mut record: Option<&mut Vec<f64>>) -> bool {
        let h = self.h;
        let (mut y, mut v) = (0.0f64, 1.0f64);
        if let Some(r) = record.as_deref_mut() {
            r.clear();
            r.push(0.0);
        }
        let mut crossed = false;
        for i in 0..self.n {
            let (q0, qm, q1) = (self.q(2 * i, mu), self.q(2 * i + 1, mu), self.q(2 * i + 2, mu));
            let k1y = v;
            let k1v = q0 * y;
            let k2y = v + 0.5 * h * k1v;
            let k2v = qm * (y + 0.5 * h * k1y);
            let k3y = v + 0.5 * h * k2v;
            let k3v = qm * (y + 0.5 * h * k2y);
            let k4y = v + h * k3v;
            let k4v = q1 * (y + h * k3y);
            let yn = y + h / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y);
            let vn = v + h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
            if yn <= 0.0 && !crossed {
                crossed = true;
                if record.is_none() {
                    return true;
                }
            }
            y = yn;
            v = vn;
            if y.abs() > 1e100 {
                let s = 1.0 / y.abs();
                y *= s;
                v *= s;
                if let Some(r) = record.as_deref_mut() {
                    r.iter_mut().for_each(|x| *x *= s);
                }
            }
            if let Some(r) = record.as_deref_mut() {
                r.push(y);
            }
        }
        crossed
    }

    /// Rayleigh quotient of `sin(π(s-a)/(b-a))`, an upper bound for `μ₁`.
    fn rayleigh_upper(&self) -> f64 {
        let b = self.a + self.h * self.n as f64;
        let len = b - self.a;
        let w = std::f64::consts::PI / len;
        let gl = GaussLegendre::new(32);
        let panels = (len.ceil() as usize).clamp(4, 256);
        let num = gl.integrate(self.a, b, panels, |s| {
            let ph = (w * (s - self.a)).sin();
            let dph = w * (w * (s - self.a)).cos();
            let c = s.cosh();
            dph * dph + (self.k2 - 2.0 / (c * c)) * ph * ph
        });
        let den = gl.integrate(self.a, b, panels, |s| {
            let ph = (w * (s - self.a)).sin();
            let c = s.cosh();
            c * c * ph * ph
        });
        num / den
    }

    fn lowest_by_shooting(&self) -> Result<(f64, Vec<f64>)> {
        let lo = -2.5 - self.k2;
        let r = self.rayleigh_upper();
        let mut step = 0.1 * r.abs() + 0.1;
        let mut hi = r + step;
        let mut tries = 0;
        while !self.shoot(hi, None) {
            step *= 2.0;
            hi = r + step;
            tries += 1;
            if tries > 60 {
                return Err(Error::no_conv("Jacobi shooting upper bracket", hi));
            }
        }
        if self.shoot(lo, None) {
            return Err(Error::no_conv("Jacobi shooting lower bracket", lo));
        }
        let tol = 1e-16 * (hi - lo);
        let mu = bisect_predicate(lo, hi, tol, 200, |m| !self.shoot(m, None));
        let mut samples = Vec::with_capacity(self.n + 1);
        self.shoot(mu, Some(&mut samples));
        Ok((mu, samples))
    }

    /// Symmetrized FD matrix `W^{-1/2} T W^{-1/2}` on the interior nodes:
    /// diagonal and off-diagonal.
    fn fd_matrix(&self) -> (Vec<f64>, Vec<f64>) {
        let m = self.n - 1;
        let h2 = self.h * self.h;
        let w: Vec<f64> = (1..=m).map(|i| self.coef[2 * i].1).collect();
        let d = (1..=m).map(|i| (2.0 / h2 + self.k2 - self.coef[2 * i].0) / w[i - 1]).collect();
        let e = (0..m - 1).map(|i| -1.0 / (h2 * (w[i] * w[i + 1]).sqrt())).collect();
        (d, e)
    }

    fn lowest_by_fd(&self) -> Result<(f64, Vec<f64>)> {
        let (d, e) = self.fd_matrix();
        let m = d.len();
        let mut lo = f64::INFINITY;
        for i in 0..m {
            let r = if i > 0 { e[i - 1].abs() } else { 0.0 } + if i + 1 < m { e[i].abs() } else { 0.0 };
            lo = lo.min(d[i] - r);
        }
        let r = self.rayleigh_upper();
        let mut hi = r + 0.1 * r.abs() + 0.1;
        let mut tries = 0;
        while sturm_count(&d, &e, hi) == 0 {
            hi += (hi - lo).abs();
            tries += 1;
            if tries > 60 {
                return Err(Error::no_conv("finite-difference upper bracket", hi));
            }
        }
        let tol = 1e-16 * (hi - lo).abs();
        let mu = bisect_predicate(lo, hi, tol, 300, |x| sturm_count(&d, &e, x) == 0);
        let y = inverse_iteration(&d, &e, mu)?;
        let mut u = vec![0.0; self.n + 1];
        for i in 0..m {
            u[i + 1] = y[i] / self.coef[2 * (i + 1)].1.sqrt();
        }
        Ok((mu, u))
    }
}

/// Number of eigenvalues of the symmetric tridiagonal `(d, e)` below `x`.
fn sturm_count(d: &[f64], e: &[f64], x: f64) -> usize {
    let mut count = 0;
    let mut q = 1.0;
    for i in 0..d.len() {
        let off = if i > 0 { e[i - 1] * e[i - 1] / q } else { 0.0 };
        q = d[i] - x - off;
        if q == 0.0 {
            q = -f64::EPSILON * (d[i].abs() + x.abs()).max(f64::MIN_POSITIVE);
        }
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// Eigenvector of `(d, e)` for the eigenvalue nearest `shift`.
fn inverse_iteration(d: &[f64], e: &[f64], shift: f64) -> Result<Vec<f64>> {
    let m = d.len();
    let scale = d.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    let sigma = shift - 1e-12 * scale.max(1.0);
    let mut x = vec![1.0; m];
    for _ in 0..6 {
        // Thomas algorithm on (A - σI) y = x.
        let mut c = vec![0.0; m];
        let mut g = vec![0.0; m];
        let mut den = d[0] - sigma;
        c[0] = if m > 1 { e[0] / den } else { 0.0 };
        g[0] = x[0] / den;
        for i in 1..m {
            den = d[i] - sigma - e[i - 1] * c[i - 1];
            if den == 0.0 {
                den = f64::EPSILON * scale;
            }
            c[i] = if i + 1 < m { e[i] / den } else { 0.0 };
            g[i] = (x[i] - e[i - 1] * g[i - 1]) / den;
        }
        let mut y = vec![0.0; m];
        y[m - 1] = g[m - 1];
        for i in (0..m - 1).rev() {
            y[i] = g[i] - c[i] * y[i + 1];
        }
        let nrm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !nrm.is_finite() || nrm == 0.0 {
            return Err(Error::no_conv("inverse iteration", nrm));
        }
        x = y.into_iter().map(|v| v / nrm).collect();
    }
    Ok(x)
}

/// Lowest Dirichlet Jacobi eigenvalue of the piece, with the default options
/// and the given mesh.
pub fn lowest_jacobi_eigenvalue(piece: &CatenoidPiece, mesh: usize) -> Result<JacobiSpectrumResult> {
    lowest_jacobi_eigenvalue_with(piece, JacobiOptions { mesh, ..JacobiOptions::default() })
}

/// General pieces are normalized to unit scale: the eigenvalue of the scale-`λ`
/// piece is the unit-scale eigenvalue divided by `λ²`.
pub fn lowest_jacobi_eigenvalue_with(piece: &CatenoidPiece, opts: JacobiOptions) -> Result<JacobiSpectrumResult> {
    if opts.mesh < MIN_MESH {
        return Err(Error::Configuration(format!("Jacobi mesh {} is below the minimum {MIN_MESH}", opts.mesh)));
    }
    let lam = piece.scale;
    let a = (piece.slab.h_minus - piece.offset) / lam;
    let b = (piece.slab.h_plus - piece.offset) / lam;
    let p = Problem::new(a, b, opts.mesh, opts.angular_mode);
    let (mu, mut u) = match opts.method {
        EigenMethod::Shooting => p.lowest_by_shooting()?,
        EigenMethod::FiniteDifference => p.lowest_by_fd()?,
    };
    let peak = u.iter().fold(0.0f64, |m, x| if x.abs() > m.abs() { *x } else { m });
    if peak == 0.0 || !peak.is_finite() {
        return Err(Error::no_conv("Jacobi eigenfunction", peak));
    }
    u.iter_mut().for_each(|x| *x /= peak);
    let end_residual = u[0].abs().max(u[opts.mesh].abs());
    Ok(JacobiSpectrumResult { lowest_eigenvalue: mu / (lam * lam), eigenfunction_samples: u, mesh_size: opts.mesh, end_residual })
}

/// Eigenvalues at the given meshes and the observed order from the last three.
pub fn convergence_order(piece: &CatenoidPiece, meshes: &[usize], method: EigenMethod) -> Result<(Vec<f64>, f64)> {
    let mus = meshes
        .iter()
        .map(|&mesh| {
            lowest_jacobi_eigenvalue_with(piece, JacobiOptions { mesh, method, angular_mode: 0 }).map(|r| r.lowest_eigenvalue)
        })
        .collect::<Result<Vec<_>>>()?;
    let k = mus.len();
    if k < 3 {
        return Err(Error::Configuration("convergence order needs three meshes".into()));
    }
    let r = (mus[k - 3] - mus[k - 2]).abs() / (mus[k - 2] - mus[k - 1]).abs();
    Ok((mus.clone(), r.log2()))
}

/// For a fixed lower end `a` of the unit catenoid, the upper end `b` at which
/// `[a, b]` becomes marginally stable, searched up to `max(a, 0) + reach`.
pub fn marginal_upper_end(a: f64, reach: f64, mesh: usize) -> Result<Option<f64>> {
    let mu = |b: f64| -> Result<f64> {
        let piece = CatenoidPiece { scale: 1.0, offset: 0.0, slab: Slab::new(a, b)? };
        Ok(lowest_jacobi_eigenvalue(&piece, mesh)?.lowest_eigenvalue)
    };
    let far = a.max(0.0) + reach;
    if mu(far)? > 0.0 {
        return Ok(None);
    }
    let mut lo = a + 1e-3;
    let mut hi = far;
    while hi - lo > 1e-12 * (1.0 + hi.abs()) {
        let m = 0.5 * (lo + hi);
        if mu(m)? > 0.0 {
            lo = m;
        } else {
            hi = m;
        }
    }
    Ok(Some(0.5 * (lo + hi)))
}
