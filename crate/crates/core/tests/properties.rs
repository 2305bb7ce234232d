use proptest::prelude::*;

use handy::hypotheses::build_trapping_region;
use handy::integrator::{integrate, IntegrationConfig};
use handy::model::{eval_g, fluxes_raw};
use handy::{ParameterSet, State4, Variant};

fn params(kappa: f64, xi1: f64, xi2: f64) -> ParameterSet {
    ParameterSet {
        kappa,
        xi1,
        xi2,
        ..ParameterSet::baseline()
    }
}

fn state() -> impl Strategy<Value = State4> {
    (0.0..100.0, 0.0..1e5, 1e-3..1e4, 1e-3..1e4).prop_map(|(a, b, c, e)| State4::new(a, b, c, e))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn clamped_supply_is_subadditive_in_kappa(z in 0.0..10.0f64, kappa in 1.0..20.0f64) {
        prop_assert!((kappa * z).min(1.0) <= kappa * z.min(1.0));
    }

    #[test]
    fn g_is_monotone_and_bounded(a in 0.0..5.0f64, b in 0.0..5.0f64) {
        let p = ParameterSet::baseline();
        let (lo, hi) = (a.min(b), a.max(b));
        let (g_lo, g_hi) = (eval_g(lo, &p).unwrap(), eval_g(hi, &p).unwrap());
        prop_assert!(g_lo <= g_hi);
        prop_assert!((p.xi1..=p.xi2).contains(&g_lo));
        prop_assert!((p.xi1..=p.xi2).contains(&g_hi));
    }

    #[test]
    fn elites_grow_at_least_as_fast(z in 0.0..5.0f64, kappa in 1.0..50.0f64) {
        let p = ParameterSet::baseline();
        prop_assert!(eval_g(kappa * z, &p).unwrap() >= eval_g(z, &p).unwrap());
    }

    #[test]
    fn elites_grow_at_the_break_even_supply(
        kappa in 1.0001..20.0f64,
        xi1 in -1.0..-1e-4f64,
        xi2 in 1e-4..1.0f64,
    ) {
        let p = params(kappa, xi1, xi2);
        let zeta = -xi1 / (xi2 - xi1);
        prop_assert!(eval_g(kappa * zeta, &p).unwrap() > 0.0);
    }

    #[test]
    fn population_growth_is_bounded_by_distribution(s in state(), kappa in 1.0..10.0f64) {
        let p = ParameterSet::baseline().with_kappa(kappa);
        let m = p.validate().unwrap();
        let d = m.rhs(&s, 0.0, Variant::Handy).unwrap();
        let f = fluxes_raw(&s, &p).f;
        let lhs = d.c + d.e;
        let rhs = p.xi1 * (s.c + s.e) + (p.xi2 - p.xi1) / p.sigma * f;
        prop_assert!(lhs <= rhs + 1e-12 * (lhs.abs() + rhs.abs()), "{lhs} > {rhs}");
    }

    #[test]
    fn lyapunov_total_satisfies_three_birds(s in state(), kappa in 1.0..10.0f64) {
        let m = ParameterSet::baseline().with_kappa(kappa).validate().unwrap();
        let d = m.rhs(&s, 0.0, Variant::Handy).unwrap();
        let h = m.fluxes(&s, 0.0).unwrap().h;
        let dy = m.people_per_food() * (d.c + d.e) + d.b_stor;
        let bound = h - m.eps_hat() * m.lyapunov_y(&s);
        prop_assert!(dy <= bound + 1e-12 * (dy.abs() + bound.abs()), "{dy} > {bound}");
    }

    #[test]
    fn region_grows_with_initial_food(a in 0.0..1e4f64, extra in 0.0..1e4f64) {
        let m = ParameterSet::baseline().validate().unwrap();
        let small = build_trapping_region(&m, &State4::new(a, 0.0, 1.0, 1.0));
        let large = build_trapping_region(&m, &State4::new(a + extra, 0.0, 1.0, 1.0));
        prop_assert!(small.b4 <= large.b4);
        prop_assert!(small.c5 <= large.c5);
    }

    #[test]
    fn rates_depend_only_on_supply_ratio(s in state(), k in 1e-3..1e3f64) {
        let p = ParameterSet::baseline();
        let scaled = State4::new(s.b_env, s.b_stor * k, s.c * k, s.e * k);
        let (a, b) = (fluxes_raw(&s, &p), fluxes_raw(&scaled, &p));
        prop_assert!((a.z - b.z).abs() <= 1e-12 * a.z.max(1.0));
        prop_assert!((a.g_kz - a.g_z) >= 0.0);
        prop_assert!((b.g_kz - b.g_z) >= 0.0);
        prop_assert!((a.g_z - b.g_z).abs() <= 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn integration_is_deterministic(e0 in 0.0..10.0f64, kappa in 1.1..5.0f64) {
        let m = ParameterSet::baseline().with_kappa(kappa).validate().unwrap();
        let cfg = IntegrationConfig::new(0.1, 50.0);
        let initial = State4::new(300.0, 0.0, 1000.0, e0);
        let a = integrate(initial, &m, Variant::Handy, &cfg).unwrap();
        let b = integrate(initial, &m, Variant::Handy, &cfg).unwrap();
        prop_assert_eq!(a.samples, b.samples);
        prop_assert_eq!(a.clamp_count, 0);
    }
}
