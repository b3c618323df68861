use proptest::prelude::*;
use sfc_core::analytics::{bs_price, d_values, decomposition_identity, greeks, OptionSpec};
use sfc_core::binomial::{crr_price, crr_step, TreeParams};
use sfc_core::decompose::{kappa_lambda, lambda_identity_gap};
use sfc_core::hedge::{accounting_violation, hedge_path, HedgeConfig, HedgeMode};
use sfc_core::market::{simulate_paths, GbmParams, TimeGrid};
use sfc_core::stats::{correlation, covariance, variance};

fn spec(sigma: f64, r: f64, maturity: f64) -> OptionSpec {
    OptionSpec::new(100.0, maturity, r, sigma).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn price_is_bounded_and_monotone(
        m in 0.5f64..2.0, sigma in 0.05f64..0.6, r in 0.0f64..0.1, tau in 0.05f64..3.0,
    ) {
        let s = spec(sigma, r, tau);
        let x = 100.0 * m;
        let w = bs_price(x, 0.0, &s).unwrap();
        let lower = (x - s.bond(0.0)).max(0.0);
        prop_assert!(w >= lower - 1e-12 && w < x);
        prop_assert!(bs_price(x * 1.01, 0.0, &s).unwrap() > w);
        prop_assert!(bs_price(x, 0.0, &s.with_sigma(sigma * 1.05)).unwrap() >= w - 1e-12 * x);
        prop_assert!(bs_price(x, 0.0, &spec(sigma, r, tau * 1.05)).unwrap() >= w - 1e-12 * x);
        let (d1, d2) = d_values(x, 0.0, &s).unwrap();
        let (e1, _) = d_values(x * 1.01, 0.0, &s).unwrap();
        prop_assert!(e1 > d1 && d1 > d2);
    }

    #[test]
    fn greek_invariants(
        m in 0.7f64..1.4, sigma in 0.1f64..0.5, r in 0.0f64..0.1, tau in 0.1f64..2.0,
    ) {
        let s = spec(sigma, r, tau);
        let x = 100.0 * m;
        let g = greeks(x, 0.0, &s).unwrap();
        prop_assert!(g.w1 > 0.0 && g.w1 < 1.0);
        prop_assert!(g.w11 > 0.0);
        prop_assert!(g.beta > -1.0 && g.beta < 0.0);
        prop_assert!(g.b > 0.0);
        prop_assert!((g.w - (g.w1 * x + g.beta * g.b)).abs() <= 1e-12 * x);
        let id = decomposition_identity(x, 0.0, &s).unwrap();
        prop_assert!(id.drift.abs() <= 1e-10 * x);
    }

    #[test]
    fn lambda_identity_is_exact(
        m in 0.5f64..2.0, sigma in 0.05f64..0.6, t in 0.0f64..0.99, mu in -0.2f64..0.3,
    ) {
        let s = spec(sigma, 0.05, 1.0);
        let x = 100.0 * m;
        let (_, l) = kappa_lambda(x, t, &s, mu).unwrap();
        prop_assert!(lambda_identity_gap(x, t, &s, l) <= 1e-12);
    }

    #[test]
    fn lattice_step_stays_between_states(
        cu in 0.0f64..50.0, frac in 0.0f64..1.0, u in 1.01f64..1.3, d in 0.75f64..0.99,
    ) {
        let r_star = d + (u - d) * 0.3;
        let tree = TreeParams::new(100.0, u, d, r_star, 1).unwrap();
        let cd = cu * frac;
        let c = crr_step(cu, cd, &tree).unwrap();
        prop_assert!(c * r_star >= cd - 1e-12 && c * r_star <= cu + 1e-12);
    }

    #[test]
    fn lattice_price_is_monotone_in_spot(m in 0.7f64..1.4, n in 2usize..200) {
        let s = spec(0.2, 0.05, 1.0);
        let a = crr_price(&s, 100.0 * m, 0.0, n).unwrap();
        let b = crr_price(&s, 100.0 * m * 1.01, 0.0, n).unwrap();
        prop_assert!(b >= a);
    }

    #[test]
    fn estimator_identities(xs in proptest::collection::vec(-10.0f64..10.0, 3..60)) {
        let ys: Vec<f64> = xs.iter().enumerate().map(|(i, x)| x * 0.5 + (i as f64).sin()).collect();
        prop_assert_eq!(covariance(&xs, &xs), variance(&xs));
        prop_assert_eq!(covariance(&xs, &ys), covariance(&ys, &xs));
        prop_assert!(variance(&xs) >= 0.0);
        let c = correlation(&xs, &ys);
        prop_assert!(c.is_nan() || (-1.0..=1.0).contains(&c));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn hedge_accounting_holds_for_any_seed(seed in any::<u64>(), steps in 2usize..200, mu in -0.1f64..0.3) {
        let s = spec(0.2, 0.05, 1.0);
        let params = GbmParams::new(100.0, mu, 0.2, 0.05).unwrap();
        let grid = TimeGrid::new(0.0, 1.0, steps).unwrap();
        let set = simulate_paths(params, &grid, 2, seed).unwrap();
        for mode in [HedgeMode::BudgetSolved, HedgeMode::FormulaPrescribed] {
            let ledger = hedge_path(set.prices(0), &grid, &s, &HedgeConfig::new(mode));
            prop_assert!(accounting_violation(&ledger) <= 1e-12 * 100.0);
            if mode == HedgeMode::BudgetSolved {
                prop_assert!(ledger.residual.iter().all(|r| r.abs() <= 1e-12 * 100.0));
            }
        }
    }

    #[test]
    fn paths_are_log_exact(seed in any::<u64>(), mu in -0.2f64..0.3, sigma in 0.01f64..0.8) {
        let params = GbmParams::new(100.0, mu, sigma, 0.05).unwrap();
        let grid = TimeGrid::new(0.0, 1.0, 50).unwrap();
        let set = simulate_paths(params, &grid, 3, seed).unwrap();
        for p in set.iter() {
            prop_assert_eq!(p.prices[0], 100.0);
            for i in 0..50 {
                let r = (p.prices[i + 1] / p.prices[i]).ln() - (mu - 0.5 * sigma * sigma) * grid.dt() - sigma * p.wiener[i];
                prop_assert!(r.abs() < 1e-12);
                prop_assert!(p.prices[i + 1] > 0.0);
            }
        }
    }
}
