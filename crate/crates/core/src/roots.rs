//! Bracketed scalar root finding.
//!
//! The hybrid solver bisects until the bracket is narrow and then polishes
//! with Newton steps that are never allowed to leave the bracket.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct RootOptions {
    /// Bisection stops once the bracket is narrower than this.
    pub bracket_width: f64,
    /// Newton polishing target for |f|.
    pub residual: f64,
    pub max_iter: usize,
}

impl Default for RootOptions {
    fn default() -> Self {
        Self { bracket_width: 1e-8, residual: 1e-12, max_iter: 200 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Root {
    pub x: f64,
    pub residual: f64,
    pub iterations: usize,
}

fn opposite(a: f64, b: f64) -> bool {
    (a < 0.0 && b > 0.0) || (a > 0.0 && b < 0.0)
}

/// Finds a root of `f` in `[lo, hi]`; `f` returns `(value, derivative)`.
///
/// The sign change across the bracket is required. Newton polishing continues
/// past the residual target until the step stalls at rounding level, so the
/// returned root is typically accurate to a few ulps.
pub fn hybrid<F>(f: F, lo: f64, hi: f64, opts: RootOptions) -> Result<Root>
where
    F: Fn(f64) -> (f64, f64),
{
    let (mut a, mut b) = if lo < hi { (lo, hi) } else { (hi, lo) };
    let (mut fa, _) = f(a);
    let (fb, _) = f(b);
    if fa == 0.0 {
        return Ok(Root { x: a, residual: 0.0, iterations: 0 });
    }
    if fb == 0.0 {
        return Ok(Root { x: b, residual: 0.0, iterations: 0 });
    }
    if !opposite(fa, fb) {
        return Err(Error::Precondition(format!(
            "no sign change on [{a}, {b}]: f = ({fa:e}, {fb:e})"
        )));
    }
    let mut iterations = 0;
    while b - a > opts.bracket_width && iterations < opts.max_iter {
        let m = 0.5 * (a + b);
        let (fm, _) = f(m);
        iterations += 1;
        if fm == 0.0 {
            return Ok(Root { x: m, residual: 0.0, iterations });
        }
        if opposite(fa, fm) {
            b = m;
        } else {
            a = m;
            fa = fm;
        }
    }

    let mut x = 0.5 * (a + b);
    let (mut fx, mut dfx) = f(x);
    let mut best = (x, fx.abs());
    let mut extra = 0;
    while iterations < opts.max_iter {
        iterations += 1;
        if fx == 0.0 {
            break;
        }
        if opposite(fa, fx) {
            b = x;
        } else {
            a = x;
            fa = fx;
        }
        let mut next = x - fx / dfx;
        if !next.is_finite() || next <= a || next >= b {
            next = 0.5 * (a + b);
        }
        let step = (next - x).abs();
        x = next;
        let eval = f(x);
        fx = eval.0;
        dfx = eval.1;
        if fx.abs() < best.1 {
            best = (x, fx.abs());
        }
        if best.1 <= opts.residual {
            extra += 1;
        }
        if step <= 4.0 * f64::EPSILON * x.abs().max(f64::MIN_POSITIVE) || extra > 2 {
            break;
        }
    }
    Ok(Root { x: best.0, residual: best.1, iterations })
}

/// Plain bisection on a sign predicate: returns the boundary between
/// `below(x) == true` (left) and `false` (right) to absolute width `tol`.
pub fn bisect_predicate<P>(mut lo: f64, mut hi: f64, tol: f64, max_iter: usize, below: P) -> f64
where
    P: Fn(f64) -> bool,
{
    for _ in 0..max_iter {
        if hi - lo <= tol {
            break;
        }
        let m = 0.5 * (lo + hi);
        if m <= lo || m >= hi {
            break;
        }
        if below(m) {
            lo = m;
        } else {
            hi = m;
        }
    }
    0.5 * (lo + hi)
}

/// Minimizes a unimodal function on `[a, b]` by golden-section search.
pub fn golden_min<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}
