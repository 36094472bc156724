use p2pbw::estimation::{
    ar1_oracle, estimate_all, estimate_gamma_sigma, estimate_literal, estimate_powerlaw_index,
    literal_gamma_roots, powerlaw_index_se,
};
use p2pbw::ou::{generate_path, Grid, OuParams, Trace};
use p2pbw::traffic::{generate_traffic_series, PowerLawParams};
use proptest::prelude::*;

fn stationary_ou(gamma: f64, sigma: f64, dt: f64, count: usize, seed: u64) -> Trace {
    let p = OuParams::zero_mean(gamma, sigma).unwrap();
    let full = generate_path(&p, &Grid::new(dt, count + 2_000).unwrap(), seed).unwrap();
    full.tail(2_000).unwrap()
}

#[test]
fn rmse_of_gamma_shrinks_with_sample_size() {
    let mut rmse = Vec::new();
    for n in [1_000, 10_000, 100_000] {
        let sq: f64 = (0..50)
            .map(|seed| {
                let t = stationary_ou(1.0, 0.5, 0.1, n, 500 + seed);
                (estimate_gamma_sigma(&t).unwrap().gamma_hat.unwrap() - 1.0).powi(2)
            })
            .sum();
        rmse.push((sq / 50.0).sqrt());
    }
    assert!(rmse[0] > rmse[1] && rmse[1] > rmse[2], "{rmse:?}");
}

#[test]
fn standard_errors_cover_truth() {
    let (gamma, sigma) = (1.0, 0.5);
    let mut hits_gamma = 0;
    let mut hits_sigma = 0;
    for seed in 0..50 {
        let t = stationary_ou(gamma, sigma, 0.1, 10_000, 900 + seed);
        let r = estimate_gamma_sigma(&t).unwrap();
        let se = r.standard_errors;
        if (r.gamma_hat.unwrap() - gamma).abs() < 2.0 * se.gamma.unwrap() {
            hits_gamma += 1;
        }
        if (r.sigma_hat.unwrap() - sigma).abs() < 2.0 * se.sigma.unwrap() {
            hits_sigma += 1;
        }
    }
    assert!(hits_gamma >= 45, "gamma coverage {hits_gamma}/50");
    assert!(hits_sigma >= 45, "sigma coverage {hits_sigma}/50");
}

#[test]
fn exact_and_conditional_agree_for_long_traces() {
    let t = stationary_ou(2.0, 1.0, 0.05, 100_000, 31);
    let exact = estimate_gamma_sigma(&t).unwrap();
    let oracle = ar1_oracle(&t).unwrap();
    let (ge, go) = (exact.gamma_hat.unwrap(), oracle.gamma_hat.unwrap());
    assert!((ge - go).abs() / go < 1e-3, "{ge} vs {go}");
}

#[test]
fn literal_route_reports_without_merging() {
    let t = stationary_ou(1.0, 0.5, 0.1, 5_000, 3);
    let lit = estimate_literal(&t).unwrap();
    let exact = estimate_gamma_sigma(&t).unwrap();
    assert_ne!(lit.method, exact.method);
    if !lit.converged {
        assert!(!lit.notes.is_empty());
    }
}

#[test]
fn literal_roots_exist_when_volatility_dominates() {
    // nσ⁴·A(1−A²)² outweighs C3(A + σ² − A²) once σ⁴ ≫ mean square of x.
    let t = stationary_ou(1.0, 0.1, 0.1, 2_000, 8);
    let roots = literal_gamma_roots(&t, 3.0).unwrap();
    assert!(!roots.is_empty());
    assert!(roots.iter().all(|r| *r > 0.0 && *r < 1.0));
}

#[test]
fn tail_index_recovered_within_tolerance() {
    let xs = generate_traffic_series(&PowerLawParams::new(1.0, 3.0).unwrap(), 100_000, 17).unwrap();
    let n_hat = estimate_powerlaw_index(&xs, 1.0).unwrap();
    assert!((n_hat - 3.0).abs() < 0.05, "{n_hat}");
    let se = powerlaw_index_se(n_hat, xs.len());
    assert!((n_hat - 3.0).abs() < 4.0 * se);
}

#[test]
fn traffic_only_estimation_marks_ou_absent() {
    let xs = generate_traffic_series(&PowerLawParams::new(2.0, 2.5).unwrap(), 10_000, 1).unwrap();
    let empty_ou = Trace::new(0.1, vec![0.0; 100]).unwrap();
    let r = estimate_all(&empty_ou, &xs, 2.0).unwrap();
    assert!(r.n_hat.is_some());
    assert!(r.gamma_hat.is_none() && r.sigma_hat.is_none());
}

#[test]
fn estimators_are_bit_reproducible() {
    let t = stationary_ou(0.7, 1.2, 0.2, 20_000, 4);
    let a = estimate_gamma_sigma(&t).unwrap();
    let b = estimate_gamma_sigma(&t).unwrap();
    assert_eq!(a.gamma_hat.unwrap().to_bits(), b.gamma_hat.unwrap().to_bits());
    assert_eq!(a.sigma_hat.unwrap().to_bits(), b.sigma_hat.unwrap().to_bits());
    assert_eq!(estimate_literal(&t).unwrap(), estimate_literal(&t).unwrap());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn scaling_values_scales_sigma(seed in 0u64..1_000, c in 0.01f64..100.0) {
        let t = stationary_ou(1.0, 0.5, 0.1, 3_000, seed);
        let base = estimate_gamma_sigma(&t).unwrap();
        let scaled = estimate_gamma_sigma(&t.scaled(c).unwrap()).unwrap();
        let (g0, g1) = (base.gamma_hat.unwrap(), scaled.gamma_hat.unwrap());
        let (s0, s1) = (base.sigma_hat.unwrap(), scaled.sigma_hat.unwrap());
        prop_assert!((g1 - g0).abs() <= 1e-9 * g0, "{} vs {}", g0, g1);
        prop_assert!((s1 - c * s0).abs() <= 1e-9 * c * s0, "{} vs {}", c * s0, s1);
    }

    #[test]
    fn halving_the_step_doubles_gamma(seed in 0u64..1_000, dt in 0.01f64..1.0) {
        let t = stationary_ou(1.0, 1.0, dt, 2_000, seed);
        let r1 = estimate_gamma_sigma(&t).unwrap();
        let r2 = estimate_gamma_sigma(&t.with_dt(dt / 2.0).unwrap()).unwrap();
        prop_assert_eq!(2.0 * r1.gamma_hat.unwrap(), r2.gamma_hat.unwrap());
    }

    #[test]
    fn tail_index_is_scale_invariant(seed in 0u64..1_000, n in 2.1f64..5.0, c in 0.01f64..100.0) {
        let xs = generate_traffic_series(&PowerLawParams::new(1.0, n).unwrap(), 2_000, seed).unwrap();
        let scaled: Vec<f64> = xs.iter().map(|x| x * c).collect();
        let n0 = estimate_powerlaw_index(&xs, 1.0).unwrap();
        let n1 = estimate_powerlaw_index(&scaled, c).unwrap();
        prop_assert!((n0 - n1).abs() < 1e-10 * n0);
    }
}
