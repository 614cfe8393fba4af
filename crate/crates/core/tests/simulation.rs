mod common;

use common::*;
use qnet_core::simulator::simulate;
use qnet_core::{Buffer, InterarrivalSpec, ModelSpec, PhaseType, PrecisionContext};

#[test]
fn poisson_arrivals_see_time_averages() {
    let ctx = PrecisionContext::small_scale();
    let m = small_model("exponential", &ctx);
    let r = simulate(&m, 10_000_000, 42, 100).unwrap();
    assert!(r.flow_balanced());
    for n in 0..=6 {
        let se = (r.standard_errors.pre_arrival[n].powi(2) + r.standard_errors.time_average[n].powi(2)).sqrt();
        let d = (r.pre_arrival_freq[n] - r.time_avg_freq[n]).abs();
        assert!(d <= 3.0 * se, "n={n}: {d} vs {se}");
    }
    let se = r.standard_errors.time_average[2];
    assert!((r.time_avg_freq[2] - 0.212371283).abs() <= 3.0 * se);
}

#[test]
fn infinite_buffer_runs_and_balances() {
    let ctx = PrecisionContext::small_scale();
    let m = ModelSpec::new(2, ctx.int(2), law("erlang", "3", "0.8", &ctx), Buffer::Infinite).unwrap();
    let r = simulate(&m, 200_000, 9, 20).unwrap();
    assert!(r.flow_balanced());
    assert_eq!(r.accepted_fraction, 1.0);
    let total: f64 = r.time_avg_freq.iter().sum();
    assert!((total - 1.0).abs() < 1e-9);
}

#[test]
fn phase_type_sampler_has_the_right_mean() {
    let ctx = PrecisionContext::small_scale();
    // Coxian with mean 1/2
    let g = vec![dec("-3.5", &ctx), dec("1.75", &ctx), ctx.zero(), ctx.int(-7) / ctx.int(3)];
    let law = InterarrivalSpec::phase_type(PhaseType::new(vec![ctx.one(), ctx.zero()], g).unwrap()).unwrap();
    let m = ModelSpec::new(1, ctx.int(1000), law, Buffer::Finite(3)).unwrap();
    let r = simulate(&m, 400_000, 1, 20).unwrap();
    let tallied = (r.arrivals_simulated - r.warmup) as f64;
    assert!((r.horizon / tallied - 0.5).abs() < 0.005);
    assert!(r.time_avg_freq[0] > 0.99);
    assert!(r.flow_balanced());
}
