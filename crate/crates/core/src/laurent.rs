//! Finite Laurent polynomials with complex coefficients.

use std::collections::BTreeMap;

use num_complex::Complex64;

/// `Σ c_k z^k` over a finite set of integer powers.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Laurent {
    terms: BTreeMap<i32, Complex64>,
}

impl Laurent {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_terms<I: IntoIterator<Item = (i32, Complex64)>>(terms: I) -> Self {
        let mut l = Self::new();
        for (k, c) in terms {
            l.add(k, c);
        }
        l
    }

    pub fn monomial(power: i32, c: Complex64) -> Self {
        Self::from_terms([(power, c)])
    }

    /// Adds `c z^power`; exact zeros are kept so that serialized tables survive
    /// a round trip unchanged.
    pub fn add(&mut self, power: i32, c: Complex64) {
        *self.terms.entry(power).or_insert(Complex64::new(0.0, 0.0)) += c;
    }

    pub fn set(&mut self, power: i32, c: Complex64) {
        self.terms.insert(power, c);
    }

    pub fn coeff(&self, power: i32) -> Complex64 {
        self.terms.get(&power).copied().unwrap_or_default()
    }

    pub fn terms(&self) -> impl Iterator<Item = (i32, Complex64)> + '_ {
        self.terms.iter().map(|(&k, &c)| (k, c))
    }

    pub fn is_zero(&self) -> bool {
        self.terms.values().all(|c| c.norm() == 0.0)
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self { terms: self.terms.iter().map(|(&k, &c)| (k, c * s)).collect() }
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.terms.iter().map(|(&k, &c)| c * z.powi(k)).sum()
    }

    /// Value and derivative at `z`.
    pub fn eval_with_derivative(&self, z: Complex64) -> (Complex64, Complex64) {
        let mut v = Complex64::new(0.0, 0.0);
        let mut d = Complex64::new(0.0, 0.0);
        for (&k, &c) in &self.terms {
            let zk1 = z.powi(k - 1);
            v += c * zk1 * z;
            d += c * zk1 * k as f64;
        }
        (v, d)
    }

    pub fn derivative(&self) -> Self {
        Self::from_terms(self.terms.iter().filter(|(&k, _)| k != 0).map(|(&k, &c)| (k - 1, c * k as f64)))
    }

    pub fn mul(&self, other: &Laurent) -> Self {
        let mut out = Self::new();
        for (&a, &ca) in &self.terms {
            for (&b, &cb) in &other.terms {
                out.add(a + b, ca * cb);
            }
        }
        out
    }

    /// Antiderivative of every term except `z^{-1}`, with zero constant.
    pub fn antiderivative_without_log(&self) -> Self {
        Self::from_terms(
            self.terms.iter().filter(|(&k, _)| k != -1).map(|(&k, &c)| (k + 1, c / (k as f64 + 1.0))),
        )
    }

    pub fn min_power(&self) -> Option<i32> {
        self.terms.keys().next().copied()
    }

    pub fn max_power(&self) -> Option<i32> {
        self.terms.keys().next_back().copied()
    }
}
