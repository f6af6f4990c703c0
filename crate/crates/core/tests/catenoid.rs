use std::f64::consts::PI;

use minimal_annuli::catenoid::{canonical_area, lambda0_residual, CatenoidPiece, Slab};
use minimal_annuli::{ms_indicator, solve_lambda0, solve_t_star, vertical_flux};
use proptest::prelude::*;

/// Composite Simpson rule, used as an oracle independent of the library's
/// Gauss–Legendre code.
fn simpson<F: Fn(f64) -> f64>(a: f64, b: f64, n: usize, f: F) -> f64 {
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += f(a + h * i as f64) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

/// Area of the surface of revolution `r(h) = λ cosh((h - t)/λ)`.
fn revolution_area(lam: f64, t: f64, a: f64, b: f64) -> f64 {
    simpson(a, b, 20000, |h| {
        let x = (h - t) / lam;
        2.0 * PI * lam * x.cosh() * (1.0 + x.sinh().powi(2)).sqrt()
    })
}

fn piece(lam: f64, t: f64) -> CatenoidPiece {
    CatenoidPiece::new(lam, t, Slab::unit()).unwrap()
}

#[test]
fn lambda0_satisfies_both_characterizations() {
    let l0 = solve_lambda0();
    assert!(lambda0_residual(l0).abs() <= 1e-12);
    assert!(((1.0 / l0).tanh() - l0).abs() <= 1e-10);
    assert!(l0 > 0.83 && l0 < 0.84);
    assert_eq!(l0, solve_lambda0());
    assert!((l0 * solve_t_star() - 1.0).abs() < 1e-12);
}

#[test]
fn unit_catenoid_slab_area() {
    let a = piece(1.0, 0.0).area_in_slab();
    let expected = PI * (2.0f64).sinh() + 2.0 * PI;
    assert!((a - expected).abs() < 1e-12 * expected);
    assert!((a - revolution_area(1.0, 0.0, -1.0, 1.0)).abs() < 1e-9 * a);
}

#[test]
fn unit_catenoid_boundary_length() {
    // Oracle: polygonal length of the two boundary circles of the parameterization.
    let p = piece(1.0, 0.0);
    let n = 20000;
    let mut total = 0.0;
    for h in [-1.0, 1.0] {
        for j in 0..n {
            let a = p.parameterize(h, 2.0 * PI * j as f64 / n as f64).unwrap();
            let b = p.parameterize(h, 2.0 * PI * (j + 1) as f64 / n as f64).unwrap();
            total += ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt();
        }
    }
    let exact = 4.0 * PI * 1f64.cosh();
    assert!((p.boundary_length() - exact).abs() < 1e-12 * exact);
    assert!((total - exact).abs() < 1e-7 * exact);
}

#[test]
fn level_lengths() {
    let p = piece(1.0, 0.0);
    assert!((p.level_length(0.0).unwrap() - 2.0 * PI).abs() < 1e-14);
    assert!((p.level_length(1.0).unwrap() - 2.0 * PI * 1f64.cosh()).abs() < 1e-13);
    assert!(p.level_length(1.5).is_err());
    let q = piece(0.7, 0.3);
    let min = (0..=2000).map(|i| -1.0 + 2.0 * i as f64 / 2000.0).min_by(|a, b| {
        q.level_length(*a).unwrap().total_cmp(&q.level_length(*b).unwrap())
    });
    assert!((min.unwrap() - 0.3).abs() < 1e-3);
    assert!((q.level_length(0.3).unwrap() - vertical_flux(0.7)).abs() < 1e-14);
}

#[test]
fn flux_as_conormal_integral() {
    for lam in [1.0, 2.0, 0.37] {
        let p = piece(lam, 0.2);
        let n = 4096;
        for h in [0.2, -0.5, 0.9] {
            // Conormal along the meridian, integrated over the slice circle.
            let x = (h - 0.2) / lam;
            let mut f = [0.0; 3];
            for j in 0..n {
                let th = 2.0 * PI * j as f64 / n as f64;
                let nu = [x.tanh() * th.cos(), x.tanh() * th.sin(), 1.0 / x.cosh()];
                let ds = 2.0 * PI * p.radius(h) / n as f64;
                for c in 0..3 {
                    f[c] += nu[c] * ds;
                }
            }
            assert!(f[0].abs() < 1e-10 && f[1].abs() < 1e-10);
            assert!((f[2] - vertical_flux(lam)).abs() < 1e-10 * vertical_flux(lam));
        }
    }
    assert!((vertical_flux(1.0) - 2.0 * PI).abs() < 1e-15);
    assert!((vertical_flux(2.0) - 4.0 * PI).abs() < 1e-15);
}

#[test]
fn closed_form_matches_tensor_quadrature() {
    // Deterministic sweep over λ ∈ [0.2, 5], |t| ≤ 2.
    for i in 0..12 {
        let lam = 0.2 * 25f64.powf(i as f64 / 11.0);
        for t in [-2.0, -0.7, 0.0, 1.3, 2.0] {
            let p = piece(lam, t);
            let exact = p.area_in_slab();
            let quad = p.area_by_quadrature(64 * 16, 256);
            assert!((quad - exact).abs() <= 1e-8 * exact, "λ={lam} t={t}: {quad} vs {exact}");
        }
    }
}

#[test]
fn grid_minimum_at_lambda0() {
    let l0 = solve_lambda0();
    let a0 = piece(l0, 0.0).area_in_slab();
    let b0 = piece(l0, 0.0).boundary_length();
    for i in 0..101 {
        let lam = 0.3 * 10f64.powf(i as f64 / 100.0);
        for j in 0..101 {
            let t = -1.5 + 3.0 * j as f64 / 100.0;
            let p = piece(lam, t);
            assert!(p.area_in_slab() >= a0);
            assert!(p.boundary_length() >= b0 * (1.0 - 1e-15));
        }
    }
}

#[test]
fn offset_derivative_vanishes_at_centre() {
    for lam in [0.2, 0.5, 1.0, 3.0, 10.0] {
        let d = 1e-5;
        let a = canonical_area(lam, 0.0);
        let der = (canonical_area(lam, d) - canonical_area(lam, -d)) / (2.0 * d);
        assert!(der.abs() <= 1e-6 * a);
    }
}

#[test]
fn ms_indicator_values() {
    assert_eq!(ms_indicator(0.0), 1.0);
    assert!(ms_indicator(solve_t_star()).abs() < 1e-15);
    assert!((solve_t_star() - 1.1997).abs() < 1e-4);
}

#[test]
fn general_slab_reduces_to_unit() {
    let slab = Slab::new(2.0, 5.0).unwrap();
    let p = CatenoidPiece::new(0.9, 3.1, slab).unwrap();
    let expected = revolution_area(0.9, 3.1, 2.0, 5.0);
    assert!((p.area_in_slab() - expected).abs() < 1e-9 * expected);
}

#[test]
fn rejects_invalid_input() {
    assert!(Slab::new(1.0, 1.0).is_err());
    assert!(Slab::new(f64::NAN, 1.0).is_err());
    assert!(CatenoidPiece::new(0.0, 0.0, Slab::unit()).is_err());
    assert!(CatenoidPiece::new(-1.0, 0.0, Slab::unit()).is_err());
}

proptest! {
    #[test]
    fn area_is_even_in_offset(lam in 0.1f64..5.0, t in -2.0f64..2.0) {
        let a = canonical_area(lam, t);
        let b = canonical_area(lam, -t);
        prop_assert!((a - b).abs() <= 1e-14 * a);
    }

    #[test]
    fn homothety_covariance(lam in 0.1f64..4.0, t in -2.0f64..2.0, c in 0.1f64..10.0, lo in -3.0f64..0.0, w in 0.1f64..4.0) {
        let slab = Slab::new(lo, lo + w).unwrap();
        let p = CatenoidPiece::new(lam, t, slab).unwrap();
        let q = CatenoidPiece::new(c * lam, c * t, slab.scaled(c).unwrap()).unwrap();
        prop_assert!((q.area_in_slab() - c * c * p.area_in_slab()).abs() <= 1e-12 * q.area_in_slab());
        prop_assert!((q.boundary_length() - c * p.boundary_length()).abs() <= 1e-12 * q.boundary_length());
        prop_assert!((vertical_flux(c * lam) - c * vertical_flux(lam)).abs() <= 1e-12 * vertical_flux(c * lam));
    }

    #[test]
    fn ms_indicator_is_even(h in -10.0f64..10.0) {
        prop_assert_eq!(ms_indicator(h), ms_indicator(-h));
    }

    #[test]
    fn parameterization_lies_on_catenoid(lam in 0.1f64..4.0, t in -1.0f64..1.0, h in -1.0f64..1.0, th in 0.0f64..6.3) {
        let p = CatenoidPiece::new(lam, t, Slab::unit()).unwrap();
        let x = p.parameterize(h, th).unwrap();
        let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
        prop_assert!((r - lam * ((x[2] - t) / lam).cosh()).abs() <= 1e-12 * r);
    }
}
