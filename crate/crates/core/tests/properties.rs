mod common;

use common::*;
use proptest::prelude::*;
use qnet_core::kernel::build_matrix;
use qnet_core::measures::{performance, solve, time_average};
use qnet_core::numerics::stationary_residual;
use qnet_core::solver::{
    arrival_distribution, arrival_distribution_single, batch_matrix, cut_balance_residuals, solve_sigma,
    truncation_level,
};
use qnet_core::{BatchSpec, Buffer, FiniteMethod, InterarrivalSpec, ModelSpec, PrecisionContext, Rejection};

fn ctx() -> PrecisionContext {
    PrecisionContext::with_digits(40).unwrap()
}

/// Law index, mean-one rate scale in tenths.
fn law_of(kind: u8, tenths: u32, ctx: &PrecisionContext) -> InterarrivalSpec {
    let lam = ctx.int(tenths as i64) / ctx.int(10);
    match kind % 4 {
        0 => InterarrivalSpec::deterministic(lam.recip()).unwrap(),
        1 => InterarrivalSpec::exponential(lam).unwrap(),
        2 => InterarrivalSpec::erlang(3, lam).unwrap(),
        _ => {
            // weights 0.7/0.3 with branch rates chosen so the mean is 1/λ
            let a = &lam * dec("1.4", ctx);
            let b = &lam * dec("0.6", ctx);
            InterarrivalSpec::hyperexponential(vec![dec("0.7", ctx), dec("0.3", ctx)], vec![a, b]).unwrap()
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    #[test]
    fn finite_chain_is_stochastic_and_balanced(kind in 0u8..4, tenths in 5u32..60, c in 1usize..5, extra in 0usize..8) {
        let ctx = ctx();
        let n = c + extra;
        let m = ModelSpec::new(c, ctx.one(), law_of(kind, tenths, &ctx), Buffer::Finite(n)).unwrap();
        let p = build_matrix(&m, n, &ctx).unwrap();
        prop_assert!(p.max_row_deviation(&ctx).1 <= ctx.tolerance(10));
        for i in 0..=n {
            for j in 0..=n {
                prop_assert!(!p.get(i, j).is_negative() || p.get(i, j).abs() < ctx.tolerance(10));
                if j > i + 1 {
                    prop_assert!(p.get(i, j).is_zero());
                }
            }
        }
        let pi = arrival_distribution_single(&m, &ctx).unwrap();
        let total = pi.probabilities.iter().fold(ctx.zero(), |a, v| a + v);
        prop_assert!((total - ctx.one()).abs() <= ctx.tolerance(12));
        for r in cut_balance_residuals(&m, &pi, &ctx).unwrap() {
            prop_assert!(r.abs() <= ctx.tolerance(12));
        }
        prop_assert!(stationary_residual(&p, &pi.probabilities, &ctx) <= ctx.tolerance(10));
    }

    #[test]
    fn time_averages_sum_to_one_and_satisfy_little(kind in 0u8..4, tenths in 5u32..60, c in 1usize..5, extra in 0usize..8) {
        let ctx = ctx();
        let m = ModelSpec::new(c, ctx.one(), law_of(kind, tenths, &ctx), Buffer::Finite(c + extra)).unwrap();
        let r = solve(&m, FiniteMethod::ExactCut, &ctx).unwrap();
        let total = r.time_average.probabilities.iter().fold(ctx.zero(), |a, v| a + v);
        prop_assert!((total - ctx.one()).abs() <= ctx.tolerance(12));
        for v in &r.time_average.probabilities {
            prop_assert!(!v.is_negative() || v.abs() <= ctx.tolerance(12));
        }
        prop_assert!((&r.report.lambda_eff * &r.report.w - &r.report.l).abs() <= ctx.tolerance(12));
        prop_assert!(r.report.lq <= r.report.l);
    }

    #[test]
    fn sigma_is_a_fixed_point_in_unit_interval(kind in 0u8..4, load in 10u32..95, c in 1usize..8) {
        let ctx = ctx();
        let tenths = load * c as u32 / 10;
        prop_assume!(tenths >= 1);
        let m = ModelSpec::new(c, ctx.one(), law_of(kind, tenths, &ctx), Buffer::Infinite).unwrap();
        let s = solve_sigma(&m, &ctx).unwrap();
        prop_assert!(s.is_positive() && s < ctx.one());
        let cmu = ctx.int(c as i64);
        let image = m.interarrival().lst(&(cmu * (ctx.one() - &s)));
        prop_assert!((image - &s).abs() <= ctx.eps_sigma() * ctx.int(2));
    }

    #[test]
    fn infinite_tail_is_geometric_and_certified(kind in 0u8..4, load in 20u32..90, c in 1usize..5) {
        let ctx = ctx();
        let tenths = load * c as u32 / 10;
        prop_assume!(tenths >= 1);
        let m = ModelSpec::new(c, ctx.one(), law_of(kind, tenths, &ctx), Buffer::Infinite).unwrap();
        let d = arrival_distribution_single(&m, &ctx).unwrap();
        let sigma = d.sigma.clone().unwrap();
        for n in c..d.n {
            prop_assert!((d.get(n + 1) / d.get(n) - &sigma).abs() <= ctx.tolerance(10));
        }
        let bound = sigma.powi(d.n - c) * (ctx.one() - &sigma).powi(2);
        prop_assert!(bound <= ctx.eps_trunc().clone());
        prop_assert_eq!(d.n, truncation_level(&sigma, c, None, &ctx));
        let p = time_average(&m, &d, &ctx).unwrap();
        let total = p.probabilities.iter().fold(p.tail_mass.clone(), |a, v| a + v);
        prop_assert!((total - ctx.one()).abs().to_f64() <= 1e-13);
    }

    #[test]
    fn batch_chains_are_stochastic(kind in 0u8..4, c in 1usize..4, extra in 0usize..6, ratio in 1u32..8, full in any::<bool>()) {
        let ctx = ctx();
        let n = c + extra;
        let q = ctx.int(ratio as i64) / ctx.int(10);
        let batch = BatchSpec::geometric(&q, 12).unwrap();
        let policy = if full { Rejection::Full } else { Rejection::Partial };
        let m = ModelSpec::new(c, ctx.one(), law_of(kind, 15, &ctx), Buffer::Finite(n))
            .unwrap()
            .with_batch(batch, Some(policy))
            .unwrap();
        let (p, _) = batch_matrix(&m, &ctx).unwrap();
        prop_assert!(p.max_row_deviation(&ctx).1 <= ctx.tolerance(10));
        let pi = arrival_distribution(&m, FiniteMethod::ExactCut, &ctx).unwrap();
        prop_assert!(stationary_residual(&p, &pi.probabilities, &ctx) <= ctx.eps_sigma() * ctx.int(10));
        let t = time_average(&m, &pi, &ctx).unwrap();
        let total = t.probabilities.iter().fold(ctx.zero(), |a, v| a + v);
        prop_assert!((total - ctx.one()).abs() <= ctx.tolerance(12));
        let r = performance(&m, &t, &ctx);
        prop_assert!(r.blocking_time_avg <= ctx.one());
    }

    #[test]
    fn unit_batch_reduces_to_single(kind in 0u8..4, c in 1usize..4, extra in 0usize..5, full in any::<bool>()) {
        let ctx = ctx();
        let n = c + extra;
        let m = ModelSpec::new(c, ctx.one(), law_of(kind, 20, &ctx), Buffer::Finite(n)).unwrap();
        let policy = if full { Rejection::Full } else { Rejection::Partial };
        let b = m.clone().with_batch(BatchSpec::unit(ctx.bits()), Some(policy)).unwrap();
        let single = solve(&m, FiniteMethod::ExactCut, &ctx).unwrap();
        let batch = solve(&b, FiniteMethod::ExactCut, &ctx).unwrap();
        let tol = (ctx.eps_sigma() * ctx.int(10)).to_f64();
        prop_assert!(max_abs_diff(&single.arrival.probabilities, &batch.arrival.probabilities) <= tol);
        prop_assert!(max_abs_diff(&single.time_average.probabilities, &batch.time_average.probabilities) <= tol);
    }
}

#[test]
fn direct_solve_agrees_with_cut_recursion_up_to_fifty() {
    let ctx = PrecisionContext::small_scale();
    for name in ["deterministic", "erlang", "hyperexponential", "exponential"] {
        let m = ModelSpec::new(3, ctx.int(2), law(name, "5", "0.8", &ctx), Buffer::Finite(50)).unwrap();
        let p = build_matrix(&m, 50, &ctx).unwrap();
        let direct = qnet_core::numerics::solve_stationary_direct(&p, &ctx).unwrap();
        let cut = arrival_distribution_single(&m, &ctx).unwrap();
        assert!(max_abs_diff(&direct, &cut.probabilities) < 1e-12, "{name}");
    }
}
