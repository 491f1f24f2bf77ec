use proptest::prelude::*;
use rerand::inference::{
    diff_in_means, frt_p_value, interval_from_profile, invert_ci, p_value_profile, reference_draws, Grid,
};
use rerand::samplers::{sample_cr, LgrConfig};
use rerand::seed;
use rerand::simlab::{generate_covariates, generate_outcomes, OutcomeModel};
use rerand::{DesignContext, Sampler};

fn world(n: usize, d: usize, tau: f64, s: u64) -> (DesignContext, rerand::Assignment, Vec<f64>) {
    let x = generate_covariates(n, d, &mut seed::stream(s, &[1])).unwrap();
    let ctx = DesignContext::build(x, n / 2, 0.1).unwrap();
    let z = sample_cr(&ctx, &mut seed::stream(s, &[2]));
    let y = generate_outcomes(ctx.covariates(), &z, &OutcomeModel::ones(d, tau, 1.0), &mut seed::stream(s, &[3]))
        .unwrap();
    (ctx, z, y.into_inner())
}

#[test]
fn frt_size_under_sharp_null() {
    let tests = 500;
    let alpha = 0.05;
    let rejections = rerand::par::map_range(tests, |t| {
        let (ctx, z, y) = world(30, 2, 0.0, 1000 + t as u64);
        frt_p_value(&ctx, &y, &z, 0.0, &Sampler::Cr, 99, 77 + t as u64).unwrap().p_value <= alpha
    })
    .into_iter()
    .filter(|&r| r)
    .count();
    let rate = rejections as f64 / tests as f64;
    let se = (alpha * (1.0 - alpha) / tests as f64).sqrt();
    assert!((rate - alpha).abs() < 3.0 * se, "rate {rate}");
}

#[test]
fn ci_duality_with_profile() {
    let (ctx, z, y) = world(40, 2, 0.5, 3);
    let grid = Grid::around_estimate(&y, &z).unwrap();
    let sampler = Sampler::Lgr(LgrConfig::default());
    let alpha = 0.1;
    let ci = invert_ci(&ctx, &y, &z, alpha, &sampler, 39, &grid, 5).unwrap();
    let profile = p_value_profile(&ctx, &y, &z, &sampler, 39, &grid, 5).unwrap();
    for (k, r) in profile.iter().enumerate() {
        let t = grid.point(k);
        if r.p_value >= alpha {
            assert!(ci.contains(t), "accepted {t} outside {ci:?}");
        }
        if !ci.contains(t) {
            assert!(r.p_value < alpha);
        }
    }
    let lower_k = (0..grid.len()).find(|&k| grid.point(k) == ci.lower).unwrap();
    let upper_k = (0..grid.len()).find(|&k| grid.point(k) == ci.upper).unwrap();
    assert!(profile[lower_k].p_value >= alpha && profile[upper_k].p_value >= alpha);
    let seed_k = rerand::inference::grid_point_seed(5, lower_k);
    let direct = frt_p_value(&ctx, &y, &z, ci.lower, &sampler, 39, seed_k).unwrap();
    assert_eq!(direct.p_value, profile[lower_k].p_value);
}

#[test]
fn intervals_nest_as_alpha_falls() {
    let (ctx, z, y) = world(40, 3, 0.5, 8);
    let grid = Grid::around_estimate(&y, &z).unwrap();
    let profile = p_value_profile(&ctx, &y, &z, &Sampler::Cr, 49, &grid, 9).unwrap();
    let mut prev: Option<(f64, f64)> = None;
    for alpha in [0.3, 0.2, 0.1, 0.05, 0.02] {
        let ci = interval_from_profile(&profile, alpha, &grid).unwrap();
        if let Some((lo, hi)) = prev {
            assert!(ci.lower <= lo && ci.upper >= hi, "alpha {alpha}");
        }
        prev = Some((ci.lower, ci.upper));
    }
}

#[test]
fn estimate_has_high_p_value() {
    let (ctx, z, y) = world(40, 2, 0.5, 12);
    let tau_hat = diff_in_means(&y, &z);
    let r = frt_p_value(&ctx, &y, &z, tau_hat, &Sampler::Cr, 99, 1).unwrap();
    assert_eq!(r.p_value, 1.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn p_value_bounds_and_location(s in 0u64..10_000, tau0 in -2.0f64..2.0, c in -50.0f64..50.0, b in 1usize..40) {
        let (ctx, z, y) = world(16, 2, 0.3, s);
        let refs = reference_draws(&ctx, &Sampler::Cr, b, s).unwrap();
        let p = rerand::inference::p_value_from_reference(&y, &z, tau0, &refs).p_value;
        prop_assert!(p >= 1.0 / (b as f64 + 1.0) - 1e-15 && p <= 1.0);
        let shifted: Vec<f64> = y.iter().map(|v| v + c).collect();
        let q = rerand::inference::p_value_from_reference(&shifted, &z, tau0, &refs).p_value;
        prop_assert_eq!(p, q);
    }
}
