use std::f64::consts::{E, PI};

use minimal_annuli::catenoid::Slab;
use minimal_annuli::laurent::Laurent;
use minimal_annuli::par::Execution;
use minimal_annuli::spectral;
use minimal_annuli::weierstrass::*;
use minimal_annuli::Error;
use num_complex::Complex64 as C;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn batch(seed: u64, n: usize) -> Vec<WeierstrassData> {
    random_batch(seed, n, &RandomDataSpec::default(), Execution::default()).unwrap()
}

/// `∮ Φ dz` by an independent rectangle rule on a circle of radius `r`.
fn loop_integral(d: &WeierstrassData, r: f64, n: usize) -> [C; 3] {
    let mut s = [C::new(0.0, 0.0); 3];
    for j in 0..n {
        let z = C::from_polar(r, 2.0 * PI * j as f64 / n as f64);
        let g = d.g.eval(z);
        let h = d.h.eval(z);
        let dz = C::new(0.0, 2.0 * PI / n as f64) * z;
        s[0] += 0.5 * (1.0 / g - g) * h * dz;
        s[1] += C::new(0.0, 0.5) * (1.0 / g + g) * h * dz;
        s[2] += h * dz;
    }
    s
}

#[test]
fn catenoid_flux_and_neck() {
    for lam in [1.0, 0.6, 2.5] {
        let d = catenoid_data(lam, 0.4, 3.0).unwrap();
        let f = d.flux();
        assert!(f[0].abs() < 1e-12 && f[1].abs() < 1e-12);
        assert!((f[2] - minimal_annuli::vertical_flux(lam)).abs() < 1e-12 * f[2]);
        for p in d.circle_points(1.0, 256) {
            assert!(((p[0] * p[0] + p[1] * p[1]).sqrt() - lam).abs() < 1e-12 * lam);
            assert!(p[2].abs() < 1e-14);
        }
    }
}

#[test]
fn catenoid_profile_closed_form() {
    let d = catenoid_data(1.0, 1.0 / E, E).unwrap();
    let p = level_profile(&d, 21).unwrap();
    assert!(p.skipped.is_empty());
    for (t, l) in p.log_radii.iter().zip(&p.lengths) {
        assert!((l - 2.0 * PI * t.cosh()).abs() <= 1e-10);
        assert!(*l >= p.flux_vertical * (1.0 - 1e-14));
    }
    assert!(p.log_radii.windows(2).all(|w| w[1] > w[0]));
    let c = convexity_check(&p);
    assert!(c.equality_flag);
    assert!(c.min_slack.abs() <= 1e-6 && c.min_slack_geometric.abs() <= 1e-6);
}

#[test]
fn catenoid_immersion_lies_on_catenoid() {
    let d = catenoid_data(1.0, 1.0 / E, E).unwrap();
    let a = immerse(&d, &GridSpec::new(64, 128)).unwrap();
    let worst = a.points.iter().flatten().map(|p| ((p[0] * p[0] + p[1] * p[1]).sqrt() - p[2].cosh()).abs()).fold(0.0, f64::max);
    assert!(worst <= 1e-7);
    assert!(a.closure_error <= 1e-7);
    assert!((a.modulus_mu - 1.0).abs() < 1e-15);
}

#[test]
fn perturbed_data_closes() {
    let mut g = Laurent::monomial(1, C::new(1.0, 0.0));
    g.add(2, C::new(0.05, 0.0));
    let h = project_residues(&g, &Laurent::monomial(-1, C::new(1.0, 0.0)), 1.0).unwrap();
    let d = WeierstrassData::new(g, h, 0.5, 2.0).unwrap();
    let v = d.validate().unwrap();
    assert!(v.residue_gh < 1e-12 && v.residue_h_over_g < 1e-12);
    let a = immerse(&d, &GridSpec::new(32, 256)).unwrap();
    assert!(a.closure_error <= 1e-7 * d.mu());
    // Independent oracle: the loop integral has no real part on any circle.
    for r in [0.5, 1.0, 2.0] {
        let s = loop_integral(&d, r, 4096);
        for c in s {
            assert!(c.re.abs() <= 1e-10);
        }
    }
}

#[test]
fn invalid_data_is_rejected() {
    let z = Laurent::monomial(1, C::new(1.0, 0.0));
    // dh ≡ 0: no vertical flux.
    let flat = WeierstrassData::new(z.clone(), Laurent::new(), 0.5, 2.0).unwrap();
    assert!(matches!(flat.validate(), Err(Error::InvalidData(_))));
    assert!(matches!(immerse(&flat, &GridSpec::new(8, 32)), Err(Error::InvalidData(_))));
    // Horizontal period: Res(gh) ≠ 0.
    let mut h = Laurent::monomial(-1, C::new(1.0, 0.0));
    h.add(-2, C::new(0.1, 0.0));
    let bad = WeierstrassData::new(z.clone(), h, 0.5, 2.0).unwrap();
    assert!(matches!(bad.validate(), Err(Error::InvalidData(_))));
    // Vertical period: Im h₋₁ ≠ 0.
    let tilted = WeierstrassData::new(z.clone(), Laurent::monomial(-1, C::new(1.0, 0.2)), 0.5, 2.0).unwrap();
    assert!(matches!(tilted.validate(), Err(Error::InvalidData(_))));
    // h with a zero in the annulus: branch point.
    let hz = Laurent::from_terms([(-1, C::new(1.0, 0.0)), (-2, C::new(-1.0, 0.0))]);
    let mut gz = Laurent::monomial(1, C::new(1.0, 0.0));
    gz.add(0, C::new(0.0, 0.0));
    let branch = WeierstrassData::new(gz, hz, 0.5, 2.0).unwrap();
    assert!(branch.validate().is_err());
    assert!(WeierstrassData::new(z.clone(), Laurent::new(), 2.0, 1.0).is_err());
}

#[test]
fn branch_point_on_circle_is_reported() {
    // h = (z - 1)/z² vanishes on |z| = 1 = r_inner.
    let h = Laurent::from_terms([(-1, C::new(1.0, 0.0)), (-2, C::new(-1.0, 0.0))]);
    let d = WeierstrassData::new(Laurent::monomial(1, C::new(1.0, 0.0)), h, 1.0, 2.0).unwrap();
    assert!(matches!(d.validate(), Err(Error::BranchPoint { .. })));
}

#[test]
fn interior_branch_point_is_located() {
    // h = (z + 0.8i)/z² vanishes at z = -0.8i, inside 0.5 < |z| < 2.
    let h = Laurent::from_terms([(-1, C::new(1.0, 0.0)), (-2, C::new(0.0, 0.8))]);
    let d = WeierstrassData::new(Laurent::monomial(1, C::new(1.0, 0.0)), h, 0.5, 2.0).unwrap();
    match d.validate() {
        Err(Error::BranchPoint { re, im, factor, .. }) => {
            assert!(re.abs() < 1e-12 && (im + 0.8).abs() < 1e-12, "{re} {im}");
            assert!(factor < 1e-12);
        }
        other => panic!("expected a branch point, got {other:?}"),
    }
}

#[test]
fn flux_is_homology_invariant_and_homogeneous() {
    for d in batch(3, 10) {
        let (ri, ro) = (d.r_inner, d.r_outer);
        let fs: Vec<[f64; 3]> = [ri, d.r_mid(), ro].iter().map(|&r| d.flux_on_circle(r, 2048)).collect();
        for f in &fs[1..] {
            for c in 0..3 {
                assert!((f[c] - fs[0][c]).abs() <= 1e-9);
            }
        }
        let f = d.flux();
        assert!(f[0].abs() <= 1e-10 && f[1].abs() <= 1e-10);
        let f2 = d.scaled(2.5).flux();
        assert!((f2[2] - 2.5 * f[2]).abs() <= 1e-12 * f2[2]);
        let (_, tilt) = d.flux_alignment();
        assert!(tilt < 1e-10);
    }
}

#[test]
fn tilted_flux_is_reported() {
    // Res(gh) = -a, Res(h/g) = a with a real: the periods vanish and the
    // flux gains a horizontal component 2πa.
    let g = Laurent::monomial(1, C::new(1.0, 0.0));
    let h = Laurent::from_terms([(-1, C::new(1.0, 0.0)), (-2, C::new(-0.3, 0.0)), (0, C::new(0.3, 0.0))]);
    let d = WeierstrassData::new(g, h, 0.5, 2.0).unwrap();
    let (f, tilt) = d.flux_alignment();
    assert!((f[0] - 0.6 * PI).abs() < 1e-10 && f[1].abs() < 1e-10);
    assert!((tilt - (0.3f64).atan()).abs() < 1e-10);
    for r in [0.5, 2.0] {
        for c in loop_integral(&d, r, 4096) {
            assert!(c.re.abs() < 1e-10);
        }
    }
    assert!(d.validate().is_err());
}

#[test]
fn rotated_data_has_same_profile() {
    let d = &batch(8, 1)[0];
    let a = level_profile(d, 9).unwrap();
    let b = level_profile(&d.rotated(1.234), 9).unwrap();
    for (x, y) in a.lengths.iter().zip(&b.lengths) {
        assert!((x - y).abs() <= 1e-12 * x);
    }
}

#[test]
fn convexity_on_random_annuli() {
    let data = batch(100, 100);
    let reports: Vec<_> = data.iter().map(|d| convexity_check(&level_profile(d, 11).unwrap())).collect();
    for r in &reports {
        assert!(r.min_slack >= -1e-7);
        assert!(r.min_slack_geometric >= -1e-7);
    }
    // Homothety: slack scales linearly.
    for d in data.iter().take(5) {
        let a = level_profile(d, 7).unwrap();
        let b = level_profile(&d.scaled(3.0), 7).unwrap();
        for i in 0..a.lengths.len() {
            let sa = a.second_derivative[i] - a.lengths[i];
            let sb = b.second_derivative[i] - b.lengths[i];
            assert!((sb - 3.0 * sa).abs() <= 1e-7 * b.lengths[i]);
        }
    }
}

#[test]
fn cpx_inequality_examples_and_random() {
    let r = cpx_inequality_check(&Laurent::monomial(2, C::new(1.0, 0.0)), 1.0).unwrap();
    assert!((r.lhs - 8.0 * PI).abs() < 1e-12 && (r.rhs - 2.0 * PI).abs() < 1e-12);
    let a = C::new(-0.4, 2.2);
    for (p, rho) in [(1, 0.3), (-1, 0.3), (1, 4.0), (-1, 4.0)] {
        let r = cpx_inequality_check(&Laurent::monomial(p, a), rho).unwrap();
        assert!(r.slack.abs() <= 1e-12 * r.rhs);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for i in 0..500 {
        let rho = [0.5, 1.0, 2.0][i % 3];
        let f = random_cpx_polynomial(&mut rng, rho);
        let r = cpx_inequality_check(&f, rho).unwrap();
        assert!(r.slack >= -1e-9 * r.rhs.max(1.0));
        // Oracle: the same integrals at a fixed doubled resolution.
        let n = 65536;
        let (mut lhs, mut rhs) = (0.0, 0.0);
        for j in 0..n {
            let z = C::from_polar(rho, 2.0 * PI * j as f64 / n as f64);
            let (v, dv) = f.eval_with_derivative(z);
            lhs += rho * rho * dv.norm_sqr() / v.norm();
            rhs += v.norm();
        }
        let w = 2.0 * PI / n as f64;
        assert!((lhs * w - r.lhs).abs() <= 1e-6 * r.lhs);
        assert!((rhs * w - r.rhs).abs() <= 1e-6 * r.rhs);
    }
    assert!(matches!(cpx_inequality_check(&Laurent::from_terms([(0, a), (1, a)]), 1.0), Err(Error::Precondition(_))));
    let vanishing = Laurent::from_terms([(1, C::new(1.0, 0.0)), (-1, C::new(-1.0, 0.0))]);
    assert!(matches!(cpx_inequality_check(&vanishing, 1.0), Err(Error::Precondition(_))));
}

#[test]
fn catenoid_decomposition() {
    let d = catenoid_data(0.8, 0.3, 3.0).unwrap();
    let a = immerse(&d, &GridSpec::new(128, 256)).unwrap();
    for k in [4, 40, 64, 100] {
        let r = second_derivative_decomposition(&a, k).unwrap();
        assert!(r.beta_term <= 1e-10);
        assert!((r.fd_value - r.formula_value).abs() <= 1e-5 * r.formula_value);
        assert!((r.formula_value - r.catenoid_bound - r.beta_term).abs() <= 1e-9 * r.formula_value);
    }
    assert!(matches!(second_derivative_decomposition(&a, 1), Err(Error::Precondition(_))));
}

#[test]
fn random_decomposition_matches_finite_differences() {
    for d in batch(7, 20) {
        let a = immerse(&d, &GridSpec::new(256, 512)).unwrap();
        for k in [3, 128, 252] {
            let r = second_derivative_decomposition(&a, k).unwrap();
            assert!((r.fd_value - r.formula_value).abs() <= 1e-4 * r.formula_value);
            assert!(r.formula_value >= r.catenoid_bound + r.beta_term - 1e-9 * r.formula_value);
        }
    }
}

#[test]
fn under_resolved_level_is_reported() {
    // g = z + a(z⁶ + z⁻⁴) has residue-free h/g; its fifth harmonics need
    // far more than 32 nodes per level.
    let g = Laurent::from_terms([(1, C::new(1.0, 0.0)), (6, C::new(0.05, 0.0)), (-4, C::new(0.05, 0.0))]);
    let d = WeierstrassData::new(g, Laurent::monomial(-1, C::new(1.0, 0.0)), 0.8, 1.25).unwrap();
    d.validate().unwrap();
    let a = immerse(&d, &GridSpec::new(16, 32)).unwrap();
    assert!(matches!(second_derivative_decomposition(&a, 8), Err(Error::Resolution { .. })));
    let fine = immerse(&d, &GridSpec::new(16, 256)).unwrap();
    let r = second_derivative_decomposition(&fine, 8).unwrap();
    assert!((r.fd_value - r.formula_value).abs() <= 1e-4 * r.formula_value);
}

#[test]
fn grid_is_conformal_and_harmonic() {
    let d = &batch(21, 1)[0];
    let a = immerse(d, &GridSpec::new(128, 256)).unwrap();
    let du = a.level_spacing();
    let n = a.nodes();
    for k in [2, 60, 125] {
        let xv: Vec<Vec<f64>> = (0..3).map(|c| spectral::derivative_real(&a.points[k].iter().map(|p| p[c]).collect::<Vec<_>>(), a.period, 1)).collect();
        let xvv: Vec<Vec<f64>> = (0..3).map(|c| spectral::derivative_real(&a.points[k].iter().map(|p| p[c]).collect::<Vec<_>>(), a.period, 2)).collect();
        for j in 0..n {
            let p = |i: usize, c: usize| a.points[i][j][c];
            let xu: Vec<f64> = (0..3).map(|c| (p(k - 2, c) - 8.0 * p(k - 1, c) + 8.0 * p(k + 1, c) - p(k + 2, c)) / (12.0 * du)).collect();
            let xuu: Vec<f64> = (0..3).map(|c| (-p(k - 2, c) + 16.0 * p(k - 1, c) - 30.0 * p(k, c) + 16.0 * p(k + 1, c) - p(k + 2, c)) / (12.0 * du * du)).collect();
            let v: Vec<f64> = (0..3).map(|c| xv[c][j]).collect();
            let dot: f64 = (0..3).map(|c| xu[c] * v[c]).sum();
            let nu: f64 = xu.iter().map(|x| x * x).sum::<f64>();
            let nv: f64 = v.iter().map(|x| x * x).sum::<f64>();
            assert!(dot.abs() <= 1e-7 * nu, "k={k} j={j}");
            assert!((nu.sqrt() - nv.sqrt()).abs() <= 1e-7 * nu.sqrt());
            assert!((nu.sqrt() - a.metric_factor[k][j]).abs() <= 1e-7 * nu.sqrt());
            for c in 0..3 {
                assert!((xuu[c] + xvv[c][j]).abs() <= 1e-5);
            }
            let nn = a.normal[k][j];
            assert!(((nn[0] * nn[0] + nn[1] * nn[1] + nn[2] * nn[2]).sqrt() - 1.0).abs() <= 1e-10);
            // Second fundamental form against the normal component of X_uu.
            let ii: f64 = (0..3).map(|c| xuu[c] * nn[c]).sum();
            assert!((ii - a.second_form[k][j][0][0]).abs() <= 1e-5 * (1.0 + ii.abs()));
        }
    }
}

#[test]
fn modulus_identity() {
    for d in batch(31, 3) {
        let a = immerse(&d, &GridSpec::new(32, 128)).unwrap();
        let mu = measured_modulus(&d, &a, 16, 1e-3).unwrap();
        assert!((mu - a.flux_vertical / (2.0 * PI)).abs() <= 1e-8 * mu);
    }
}

#[test]
fn coarea_cauchy_schwarz() {
    let cat = immerse(&catenoid_data(1.3, 0.4, 2.5).unwrap(), &GridSpec::new(16, 128)).unwrap();
    for k in 0..16 {
        let c = coarea_level(&cat, k);
        assert!(c.gradient_variance <= 1e-10);
        assert!((c.area_rate - c.bound).abs() <= 1e-12 * c.bound);
    }
    for d in batch(41, 5) {
        let a = immerse(&d, &GridSpec::new(16, 256)).unwrap();
        for k in 0..16 {
            let c = coarea_level(&a, k);
            assert!(c.area_rate >= c.bound * (1.0 - 1e-14));
        }
    }
}

#[test]
fn catenoid_area_equality() {
    let d = catenoid_data(1.0, 1.0 / E, E).unwrap();
    let r = area_comparison(&d, &Slab::unit()).unwrap();
    assert!(r.gap.abs() <= 1e-7 * r.area_sigma);
    assert!(r.neck_height.abs() < 1e-8);
    let shifted = catenoid_data(0.7, 0.2, 3.0).unwrap();
    let (lo, hi) = shifted.height_range(4096);
    let r = area_comparison(&shifted, &Slab::new(lo, hi).unwrap()).unwrap();
    assert!(r.gap.abs() <= 1e-7 * r.area_sigma);
}

#[test]
fn area_bound_on_random_annuli() {
    for d in batch(500, 100) {
        let (lo, hi) = d.height_range(4096);
        let r = area_comparison(&d, &Slab::new(lo, hi).unwrap()).unwrap();
        assert!(r.gap >= -1e-6 * r.area_sigma);
        assert!(r.min_level_gap >= -1e-9);
    }
}

#[test]
fn slab_outside_levels_is_domain_error() {
    let d = catenoid_data(1.0, 1.0 / E, E).unwrap();
    assert!(matches!(area_comparison(&d, &Slab::new(-1.0, 1.5).unwrap()), Err(Error::Domain(_))));
}

#[test]
fn execution_modes_agree() {
    let a = random_batch(77, 6, &RandomDataSpec::default(), Execution::Parallel).unwrap();
    let b = random_batch(77, 6, &RandomDataSpec::default(), Execution::Sequential).unwrap();
    assert_eq!(a, b);
    let spec = GridSpec { exec: Execution::Sequential, ..GridSpec::new(16, 64) };
    let x = immerse(&a[0], &spec).unwrap();
    let y = immerse(&a[0], &GridSpec::new(16, 64)).unwrap();
    assert_eq!(x.points, y.points);
}

#[test]
fn json_round_trip() {
    for d in batch(1, 10) {
        let s = d.to_json();
        let back = WeierstrassData::from_json(&s).unwrap();
        assert_eq!(back, d);
        assert_eq!(back.to_json(), s);
        let (p, q) = (level_profile(&d, 5).unwrap(), level_profile(&back, 5).unwrap());
        assert_eq!(p, q);
    }
    assert!(WeierstrassData::from_json("{\"version\":1}").is_err());
    assert!(WeierstrassData::from_json("{\"version\":2,\"g\":[],\"h\":[],\"r_inner\":1,\"r_outer\":2}").is_err());
    assert!(WeierstrassData::from_json("{\"version\":1,\"g\":[[1,1,0],[1,2,0]],\"h\":[],\"r_inner\":1,\"r_outer\":2}").is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn projection_zeroes_residues(seed in 0u64..10_000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = random_data(&mut rng, &RandomDataSpec::default()).unwrap();
        let v = d.validate().unwrap();
        prop_assert!(v.residue_gh <= 1e-10 * d.mu());
        prop_assert!(v.residue_h_over_g <= 1e-10 * d.mu());
        // Independent check of the periods with a plain rectangle rule.
        let s = loop_integral(&d, d.r_mid(), 2048);
        for c in s {
            prop_assert!(c.re.abs() <= 1e-9);
        }
        prop_assert!((s[2].im - 2.0 * PI * d.mu()).abs() <= 1e-9);
    }

    #[test]
    fn catenoid_profile_any_scale(lam in 0.2f64..5.0) {
        let d = catenoid_data(lam, 0.5, 2.0).unwrap();
        let p = level_profile(&d, 5).unwrap();
        for (t, l) in p.log_radii.iter().zip(&p.lengths) {
            prop_assert!((l - 2.0 * PI * lam * t.cosh()).abs() <= 1e-10 * lam);
        }
    }
}
