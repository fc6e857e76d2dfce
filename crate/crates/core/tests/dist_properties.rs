mod common;

use proptest::prelude::*;

use etiquette_core::dist::{
    derive_seed, empirical_percentile, ExponentialParams, GevParams, GmmParams, LaplaceParams, LognormalParams,
};
use etiquette_core::profile::builtin_profile;
use etiquette_core::RoadClass;

use common::{gev_cdf_oracle, integrate, ks_statistic};

fn gev_params() -> impl Strategy<Value = GevParams> {
    (-0.45..0.9_f64, 0.01..10.0_f64, -20.0..20.0_f64).prop_map(|(k, sigma, mu)| GevParams { k, sigma, mu })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn gev_quantile_inverts_cdf(g in gev_params(), p in 0.001..0.999_f64) {
        let x = g.quantile(p).unwrap();
        prop_assert!(g.in_support(x));
        let back = g.cdf(x).unwrap();
        prop_assert!((back - p).abs() < 1e-9, "p {} -> x {} -> {}", p, x, back);
    }

    #[test]
    fn gev_cdf_matches_closed_form(g in gev_params(), p in 0.01..0.99_f64) {
        let x = g.quantile(p).unwrap();
        let oracle = gev_cdf_oracle(g.k, g.sigma, g.mu, x);
        prop_assert!((g.cdf(x).unwrap() - oracle).abs() < 1e-9);
    }

    #[test]
    fn gev_pdf_continuous_at_gumbel_switch(sigma in 0.05..5.0_f64, mu in -5.0..5.0_f64, z in -3.0..6.0_f64) {
        let x = mu + sigma * z;
        let below = GevParams { k: -1e-9, sigma, mu }.pdf(x).unwrap();
        let above = GevParams { k: 1e-9, sigma, mu }.pdf(x).unwrap();
        let gumbel = GevParams { k: 0.0, sigma, mu }.pdf(x).unwrap();
        prop_assert!((below - above).abs() <= 1e-6 * gumbel.max(1e-300));
        prop_assert!((below - gumbel).abs() <= 1e-6 * gumbel.max(1e-300));
    }

    #[test]
    fn gev_pdf_integrates_to_one(g in gev_params()) {
        let (lo, hi) = g.support();
        let pdf = |x: f64| g.pdf(x).unwrap_or(0.0);
        let total = integrate(&pdf, lo, g.mu, g.sigma, 1e-11) + integrate(&pdf, g.mu, hi, g.sigma, 1e-11);
        prop_assert!((total - 1.0).abs() < 1e-6, "{:?} integrates to {}", g, total);
    }

    #[test]
    fn lognormal_moments_round_trip(mean in 0.01..100.0_f64, cv in 0.0..3.0_f64) {
        let var = (cv * mean).powi(2);
        let ln = LognormalParams::from_arith_moments(mean, var).unwrap();
        let back = LognormalParams::from_log_params(ln.log_mu, ln.log_sigma).unwrap();
        prop_assert!((back.arith_mean - mean).abs() <= 1e-9 * mean);
        prop_assert!((back.arith_var - var).abs() <= 1e-9 * var.max(1e-300));
        ln.validate().unwrap();
    }

    #[test]
    fn laplace_quantile_inverts_cdf(lambda in 0.1..50.0_f64, mu in -1.0..1.0_f64, p in 0.001..0.999_f64) {
        let l = LaplaceParams { lambda, mu };
        let x = l.quantile(p).unwrap();
        prop_assert!((l.cdf(x) - p).abs() < 1e-12);
    }

    #[test]
    fn exponential_quantile_inverts_cdf(mu in 1e-3..100.0_f64, p in 0.001..0.999_f64) {
        let e = ExponentialParams { mu };
        prop_assert!((e.cdf(e.quantile(p).unwrap()) - p).abs() < 1e-12);
    }

    #[test]
    fn sampling_is_deterministic(g in gev_params(), seed in any::<u64>()) {
        let a = g.sample(64, seed).unwrap();
        let b = g.sample(64, seed).unwrap();
        prop_assert_eq!(a.iter().map(|x| x.to_bits()).collect::<Vec<_>>(), b.iter().map(|x| x.to_bits()).collect::<Vec<_>>());
        let ln = LognormalParams::from_arith_moments(1.42, 0.08).unwrap();
        prop_assert_eq!(ln.sample(32, seed), ln.sample(32, seed));
        let lap = LaplaceParams { lambda: 16.5, mu: 0.0 };
        prop_assert_eq!(lap.sample(32, seed), lap.sample(32, seed));
        let ex = ExponentialParams { mu: 0.04 };
        prop_assert_eq!(ex.sample(32, seed), ex.sample(32, seed));
        let gmm = GmmParams { weights: vec![0.5, 0.5], means: vec![0.0, 5.0], variances: vec![1.0, 1.0] };
        prop_assert_eq!(gmm.sample(32, seed), gmm.sample(32, seed));
    }

    #[test]
    fn derived_seeds_differ_by_stream(seed in any::<u64>(), a in 0..1000_u64, b in 0..1000_u64) {
        prop_assume!(a != b);
        prop_assert_ne!(derive_seed(seed, a), derive_seed(seed, b));
    }

    #[test]
    fn percentile_is_monotone_and_bounded(mut xs in prop::collection::vec(-1e3..1e3_f64, 1..200), p in 0.0..=1.0_f64, q in 0.0..=1.0_f64) {
        let (lo, hi) = if p <= q { (p, q) } else { (q, p) };
        let a = empirical_percentile(&xs, lo).unwrap();
        let b = empirical_percentile(&xs, hi).unwrap();
        prop_assert!(a <= b);
        xs.sort_by(|a, b| a.total_cmp(b));
        prop_assert!(xs[0] <= a && b <= xs[xs.len() - 1]);
    }
}

#[test]
fn samples_follow_their_distribution() {
    let n = 20_000;
    let p = builtin_profile("spmd-2018").unwrap();
    for rc in RoadClass::ALL {
        let s = p.scenario(rc).unwrap();
        for field in [
            "accel_limit",
            "decel_limit",
            "lc_duration",
            "init_range_recip",
            "max_yaw_rate",
        ] {
            let g = *s.gev_field(field).unwrap();
            let x = g.sample(n, 11).unwrap();
            let d = ks_statistic(&x, |v| gev_cdf_oracle(g.k, g.sigma, g.mu, v));
            assert!(d < 0.015, "{rc} {field}: KS {d}");
        }
        let ln = s.mean_headway.unwrap();
        let normal = statrs::distribution::Normal::new(ln.log_mu, ln.log_sigma).unwrap();
        let x = ln.sample(n, 12);
        let d = ks_statistic(&x, |v| statrs::distribution::ContinuousCDF::cdf(&normal, v.ln()));
        assert!(d < 0.015, "{rc} headway: KS {d}");
        let lap = s.init_ttc_recip.unwrap();
        let x = lap.sample(n, 13);
        let d = ks_statistic(&x, |v| {
            let z = lap.lambda * (v - lap.mu);
            if z < 0.0 {
                0.5 * z.exp()
            } else {
                1.0 - 0.5 * (-z).exp()
            }
        });
        assert!(d < 0.015, "{rc} Laplace: KS {d}");
        let ex = s.pos_init_ttc_recip.unwrap();
        let x = ex.sample(n, 14);
        let d = ks_statistic(&x, |v| 1.0 - (-v / ex.mu).exp());
        assert!(d < 0.015, "{rc} exponential: KS {d}");
    }
}
