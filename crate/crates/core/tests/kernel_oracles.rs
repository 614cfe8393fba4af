mod common;

use common::*;
use qnet_core::kernel::{build_matrix, transition_prob};
use qnet_core::numerics::quadrature_pij_oracle;
use qnet_core::{Buffer, InterarrivalSpec, ModelSpec, PrecisionContext, Real};

fn binom(n: usize, k: usize, ctx: &PrecisionContext) -> Real {
    (0..k).fold(ctx.one(), |a, i| a * ctx.int((n - i) as i64) / ctx.int(i as i64 + 1))
}

fn fact(n: usize, ctx: &PrecisionContext) -> Real {
    (1..=n).fold(ctx.one(), |a, k| a * ctx.int(k as i64))
}

/// Erlang-k with rate θ per phase: ∫tⁿe^{−st}dA(t) = θᵏ (k+n−1)!/(k−1)! / (θ+s)^{k+n}.
fn erlang_moment(k: usize, theta: &Real, n: usize, s: &Real, ctx: &PrecisionContext) -> Real {
    theta.powi(k) * fact(k + n - 1, ctx) / fact(k - 1, ctx) / (theta + s).powi(k + n)
}

/// Regions 1 and 2 with the integrals done in closed form for Erlang-k.
fn erlang_oracle(i: usize, j: usize, c: usize, mu: &Real, k: usize, theta: &Real, ctx: &PrecisionContext) -> Real {
    if j > i + 1 {
        return ctx.zero();
    }
    if i + 1 <= c {
        // expand (1 − e^{−μt})^{i−j+1} e^{−μtj}
        let m = i + 1 - j;
        let mut acc = ctx.zero();
        for r in 0..=m {
            let s = mu * ctx.int((j + r) as i64);
            let term = binom(m, r, ctx) * erlang_moment(k, theta, 0, &s, ctx);
            if r % 2 == 1 {
                acc -= term;
            } else {
                acc += term;
            }
        }
        return binom(i + 1, m, ctx) * acc;
    }
    assert!(j >= c);
    let m = i + 1 - j;
    let cmu = mu * ctx.int(c as i64);
    cmu.powi(m) / fact(m, ctx) * erlang_moment(k, theta, m, &cmu, ctx)
}

#[test]
fn erlang_regions_one_and_two_match_closed_forms() {
    let ctx = PrecisionContext::small_scale();
    for k in [1usize, 2, 4] {
        let lam = dec("3.5", &ctx);
        let theta = &lam * ctx.int(k as i64);
        let law = InterarrivalSpec::erlang(k, lam).unwrap();
        let mu = dec("1.25", &ctx);
        let c = 4;
        let m = ModelSpec::new(c, mu.clone(), law, Buffer::Finite(14)).unwrap();
        for i in 0..14 {
            for j in 0..=i + 1 {
                let in_region_three = j < c && i >= c;
                if in_region_three || (j == 0 && i >= c) {
                    continue;
                }
                let got = transition_prob(&m, i, j, &ctx).unwrap();
                let want = erlang_oracle(i, j, c, &mu, k, &theta, &ctx);
                assert!((got - want).abs() < ctx.tolerance(12), "k={k} i={i} j={j}");
            }
        }
    }
}

#[test]
fn deterministic_region_two_is_poisson() {
    let ctx = PrecisionContext::small_scale();
    let a = dec("0.2", &ctx);
    let law = InterarrivalSpec::deterministic(a.clone()).unwrap();
    let m = ModelSpec::new(3, ctx.int(2), law, Buffer::Finite(10)).unwrap();
    let x = dec("1.2", &ctx);
    let e = (-x.clone()).exp();
    for i in 3..10 {
        for j in 3..=i + 1 {
            let n = i + 1 - j;
            let want = &e * x.powi(n) / fact(n, &ctx);
            assert!((transition_prob(&m, i, j, &ctx).unwrap() - want).abs() < ctx.tolerance(12));
        }
    }
}

#[test]
fn region_three_matches_quadrature_for_deterministic_and_exponential() {
    let ctx = PrecisionContext::small_scale();
    for l in [law("deterministic", "5", "0.8", &ctx), law("exponential", "5", "0.8", &ctx)] {
        for c in [2usize, 4, 6] {
            let m = ModelSpec::new(c, ctx.int(2), l.clone(), Buffer::Finite(c + 10)).unwrap();
            for i in c..c + 6 {
                for j in 1..c {
                    let exact = transition_prob(&m, i, j, &ctx).unwrap().to_f64();
                    let quad = quadrature_pij_oracle(i, j, &m, &ctx).unwrap();
                    assert!((exact - quad).abs() < 1e-9, "c={c} i={i} j={j}: {exact} vs {quad}");
                }
            }
        }
    }
}

#[test]
fn symbolic_deterministic_row() {
    // p(3,1) = 9/2 A*(μ) − 18 A*(2μ) + 27/2 A*(3μ) + 9μ A₁*(3μ) for c = 3
    let ctx = PrecisionContext::small_scale();
    let a = dec("0.2", &ctx);
    let mu = ctx.int(2);
    let m = ModelSpec::new(3, mu.clone(), InterarrivalSpec::deterministic(a.clone()).unwrap(), Buffer::Finite(6)).unwrap();
    let lst = |k: i64| (-(&a * &mu * ctx.int(k))).exp();
    let want = dec("4.5", &ctx) * lst(1) - ctx.int(18) * lst(2) + dec("13.5", &ctx) * lst(3)
        + ctx.int(9) * &mu * &a * lst(3);
    assert!((transition_prob(&m, 3, 1, &ctx).unwrap() - want).abs() < ctx.tolerance(12));
}

#[test]
fn thirty_servers_stay_stochastic_at_high_precision() {
    let ctx = PrecisionContext::large_scale();
    for name in ["deterministic", "erlang", "hyperexponential"] {
        let m = ModelSpec::new(30, dec("0.2", &ctx), law(name, "5.8", "0.873563218", &ctx), Buffer::Finite(120)).unwrap();
        let p = build_matrix(&m, 120, &ctx).unwrap();
        assert!(p.max_row_deviation(&ctx).1 < ctx.tolerance(10), "{name}");
        for row in p.rows() {
            for v in row {
                assert!(!v.is_negative() || v.abs() < ctx.tolerance(10), "{name}");
            }
        }
    }
}
