//! FFT-based operations on uniformly sampled periodic data.

use std::cell::RefCell;
use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// Forward DFT normalized by `1/n`, so entry `k` is the Fourier coefficient
/// of `exp(2πi k j / n)`.
pub fn coefficients(samples: &[Complex64]) -> Vec<Complex64> {
    let n = samples.len();
    let mut buf = samples.to_vec();
    PLANNER.with(|p| p.borrow_mut().plan_fft_forward(n).process(&mut buf));
    let s = 1.0 / n as f64;
    buf.iter_mut().for_each(|c| *c *= s);
    buf
}

/// Inverse of [`coefficients`].
pub fn synthesize(coeffs: &[Complex64]) -> Vec<Complex64> {
    let n = coeffs.len();
    let mut buf = coeffs.to_vec();
    PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(n).process(&mut buf));
    buf
}

/// Signed wavenumber of FFT bin `k` for length `n`; the Nyquist bin maps to
/// `n/2` and is treated as a cosine by the callers.
pub fn wavenumber(k: usize, n: usize) -> i64 {
    if k <= n / 2 {
        k as i64
    } else {
        k as i64 - n as i64
    }
}

fn is_nyquist(k: usize, n: usize) -> bool {
    n % 2 == 0 && k == n / 2
}

/// Derivative of order `order` (1 or 2) of periodic samples with the given period.
pub fn derivative(samples: &[Complex64], period: f64, order: u32) -> Vec<Complex64> {
    let n = samples.len();
    let mut c = coefficients(samples);
    let w0 = 2.0 * PI / period;
    for (k, ck) in c.iter_mut().enumerate() {
        let kk = wavenumber(k, n) as f64 * w0;
        if is_nyquist(k, n) && order % 2 == 1 {
            *ck = Complex64::new(0.0, 0.0);
            continue;
        }
        *ck *= Complex64::new(0.0, kk).powu(order);
    }
    synthesize(&c)
}

pub fn derivative_real(samples: &[f64], period: f64, order: u32) -> Vec<f64> {
    let z: Vec<Complex64> = samples.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    derivative(&z, period, order).into_iter().map(|c| c.re).collect()
}

/// Indefinite integral `∫_0^{x_j} f` at the sample nodes, together with the
/// mean of `f` (the linear growth rate of the integral).
pub fn cumulative_integral(samples: &[Complex64], period: f64) -> (Vec<Complex64>, Complex64) {
    let n = samples.len();
    let mut c = coefficients(samples);
    let mean = c[0];
    c[0] = Complex64::new(0.0, 0.0);
    let w0 = 2.0 * PI / period;
    for (k, ck) in c.iter_mut().enumerate().skip(1) {
        if is_nyquist(k, n) {
            *ck = Complex64::new(0.0, 0.0);
        } else {
            *ck /= Complex64::new(0.0, wavenumber(k, n) as f64 * w0);
        }
    }
    let periodic = synthesize(&c);
    let offset = periodic[0];
    let h = period / n as f64;
    let out = periodic
        .iter()
        .enumerate()
        .map(|(j, p)| p - offset + mean * (h * j as f64))
        .collect();
    (out, mean)
}

/// Trigonometric interpolant of real periodic samples on `[0, period)`.
#[derive(Debug, Clone)]
pub struct TrigInterpolant {
    /// `(wavenumber, coefficient)` pairs; the Nyquist term is split evenly.
    terms: Vec<(f64, Complex64)>,
    omega: f64,
}

impl TrigInterpolant {
    pub fn new(samples: &[f64], period: f64) -> Self {
        let n = samples.len();
        let z: Vec<Complex64> = samples.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        let c = coefficients(&z);
        let mut terms = Vec::with_capacity(n + 1);
        for (k, ck) in c.iter().enumerate() {
            let kk = wavenumber(k, n) as f64;
            if is_nyquist(k, n) {
                terms.push((kk, ck * 0.5));
                terms.push((-kk, ck * 0.5));
            } else {
                terms.push((kk, *ck));
            }
        }
        Self { terms, omega: 2.0 * PI / period }
    }

    /// Value and first `deriv` derivatives at `x` (`deriv <= 2`).
    pub fn eval(&self, x: f64) -> [f64; 3] {
        let mut out = [0.0; 3];
        for &(k, c) in &self.terms {
            let w = k * self.omega;
            let e = Complex64::from_polar(1.0, w * x) * c;
            out[0] += e.re;
            out[1] += (e * Complex64::new(0.0, w)).re;
            out[2] -= (e * (w * w)).re;
        }
        out
    }

    /// Constant Fourier coefficient (the mean over one period).
    pub fn mean(&self) -> f64 {
        self.terms.iter().find(|t| t.0 == 0.0).map(|t| t.1.re).unwrap_or(0.0)
    }

    /// `∫_0^x f - mean·x`, the periodic part of the antiderivative.
    pub fn periodic_antiderivative(&self, x: f64) -> f64 {
        let mut s = 0.0;
        for &(k, c) in &self.terms {
            if k == 0.0 {
                continue;
            }
            let w = k * self.omega;
            let e = (Complex64::from_polar(1.0, w * x) - 1.0) * c / Complex64::new(0.0, w);
            s += e.re;
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize, period: f64) -> Vec<f64> {
        (0..n).map(|j| period * j as f64 / n as f64).collect()
    }

    #[test]
    fn derivative_of_trig_polynomial() {
        let p = 3.0;
        let xs = grid(32, p);
        let w = 2.0 * PI / p;
        let f: Vec<f64> = xs.iter().map(|x| (w * x).sin() + 0.5 * (3.0 * w * x).cos()).collect();
        let d1 = derivative_real(&f, p, 1);
        let d2 = derivative_real(&f, p, 2);
        for (j, x) in xs.iter().enumerate() {
            let e1 = w * (w * x).cos() - 1.5 * w * (3.0 * w * x).sin();
            let e2 = -w * w * (w * x).sin() - 4.5 * w * w * (3.0 * w * x).cos();
            assert!((d1[j] - e1).abs() < 1e-12);
            assert!((d2[j] - e2).abs() < 1e-11);
        }
    }

    #[test]
    fn cumulative_integral_matches_antiderivative() {
        let p = 2.0 * PI;
        let xs = grid(64, p);
        let f: Vec<Complex64> = xs.iter().map(|x| Complex64::new(1.0 + x.cos(), x.sin())).collect();
        let (int, mean) = cumulative_integral(&f, p);
        assert!((mean - Complex64::new(1.0, 0.0)).norm() < 1e-14);
        for (j, x) in xs.iter().enumerate() {
            let exact = Complex64::new(x + x.sin(), 1.0 - x.cos());
            assert!((int[j] - exact).norm() < 1e-12);
        }
    }

    #[test]
    fn interpolant_reproduces_off_grid_values() {
        let p = 1.0;
        let xs = grid(16, p);
        let f: Vec<f64> = xs.iter().map(|x| (2.0 * PI * x).cos() * 2.0 + 1.0).collect();
        let ti = TrigInterpolant::new(&f, p);
        let v = ti.eval(0.123);
        assert!((v[0] - (1.0 + 2.0 * (2.0 * PI * 0.123).cos())).abs() < 1e-13);
        assert!((v[1] + 4.0 * PI * (2.0 * PI * 0.123).sin()).abs() < 1e-12);
        assert!((ti.mean() - 1.0).abs() < 1e-14);
        let a = ti.periodic_antiderivative(0.25);
        assert!((a - 2.0 / (2.0 * PI)).abs() < 1e-13);
    }
}
