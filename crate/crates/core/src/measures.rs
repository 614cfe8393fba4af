//! Time-average distribution and performance measures.
//!
//! Both follow from rate conservation across each level `n`: the rate at
//! which arrivals push the system from below `n` to `n` or above equals the
//! rate `min(n,c)μ p(n)` of departures from `n`.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::kernel::{Buffer, ModelSpec, Rejection};
use crate::numerics::PrecisionContext;
use crate::real::Real;
use crate::solver::{arrival_distribution, ArrivalDistribution, FiniteMethod};

/// `p(0..=N)`. For a truncated infinite buffer `tail_mass` holds the mass of
/// states above `N` implied by the truncated arrival distribution, so that
/// `Σp + tail_mass = 1`.
#[derive(Debug, Clone)]
pub struct TimeAverageDistribution {
    pub probabilities: Vec<Real>,
    pub tail_mass: Real,
}

impl TimeAverageDistribution {
    pub fn len(&self) -> usize {
        self.probabilities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probabilities.is_empty()
    }

    pub fn get(&self, n: usize) -> &Real {
        &self.probabilities[n]
    }

    /// Cumulative sums `P(X ≤ n)`.
    pub fn cdf(&self, ctx: &PrecisionContext) -> Vec<Real> {
        let mut acc = ctx.zero();
        self.probabilities
            .iter()
            .map(|v| {
                acc += v;
                acc.clone()
            })
            .collect()
    }
}

/// Which arrival rate the mean sojourn time was divided by.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WaitConvention {
    /// `W = L / (λ_A (1 − p(N)))`; finite buffers.
    EffectiveRate,
    /// `W = L / λ_A`; infinite buffers.
    OfferedRate,
}

#[derive(Debug, Clone)]
pub struct PerformanceReport {
    pub l: Real,
    pub lq: Real,
    pub w: Real,
    pub wq: Real,
    pub lambda_eff: Real,
    /// `p(N)` for finite buffers, zero otherwise.
    pub blocking_time_avg: Real,
    pub convention: WaitConvention,
    /// `L / λ_A`, the alternative convention for finite buffers.
    pub w_offered: Real,
}

/// Truncated infinite chains carry an error of order `eps_trunc/(1−σ)` into `p(0)`.
fn check_p0(p0: &Real, truncated: bool, pi: &ArrivalDistribution, ctx: &PrecisionContext) -> Result<()> {
    let tol = if truncated {
        let gap = pi.sigma.as_ref().map(|s| ctx.one() - s).unwrap_or_else(|| ctx.real(1e-3));
        ctx.eps_trunc() * ctx.int(10) / gap
    } else {
        ctx.tolerance(12)
    };
    if p0.is_negative() && p0.abs() > tol {
        return Err(Error::NegativeProbability { state: 0, value: p0.to_f64() });
    }
    Ok(())
}

/// `p(n)` from `π` for single arrivals: `p(n) = cρπ(n−1)/n` for `n ≤ c`,
/// `ρπ(n−1)` above, `p(0)` in closed form.
pub fn time_average_single(model: &ModelSpec, pi: &ArrivalDistribution, ctx: &PrecisionContext) -> Result<TimeAverageDistribution> {
    if model.batch().is_some() {
        return Err(Error::Precondition(alloc::string::String::from(
            "time_average_single applied to a batch model",
        )));
    }
    let c = model.servers();
    let n = pi.n;
    let rho = model.rho().with_bits(ctx.bits());
    let one = ctx.one();
    let crho = &rho * ctx.int(c as i64);
    let mut p = Vec::with_capacity(n + 1);
    p.push(ctx.zero());
    for k in 1..=n {
        let v = if k <= c {
            &crho * pi.get(k - 1) / ctx.int(k as i64)
        } else {
            &rho * pi.get(k - 1)
        };
        p.push(v);
    }
    let finite = matches!(model.buffer(), Buffer::Finite(_));
    let tail_mass = if finite || n < c { ctx.zero() } else { &rho * pi.get(n) };
    if n + 1 >= c {
        let mut correction = ctx.zero();
        for k in 0..c.saturating_sub(1) {
            correction += ctx.int((c - k - 1) as i64) * pi.get(k) / ctx.int(k as i64 + 1);
        }
        let mut p0 = &one - &rho - &rho * correction;
        if finite {
            p0 += &rho * pi.get(n);
        }
        p[0] = p0;
    } else {
        let rest = p[1..].iter().fold(ctx.zero(), |a, v| a + v);
        p[0] = &one - rest;
    }
    check_p0(&p[0], !finite, pi, ctx)?;
    Ok(TimeAverageDistribution { probabilities: p, tail_mass })
}

/// `p(n) = λ Σ_{k<n} π(k)B^c(n−k) / (min(n,c)μ)`; under full rejection only
/// batches that fit count, so `B^c(N−k+1)` is subtracted.
pub fn time_average_batch(model: &ModelSpec, pi: &ArrivalDistribution, ctx: &PrecisionContext) -> Result<TimeAverageDistribution> {
    let batch = model
        .batch()
        .ok_or_else(|| Error::Precondition(alloc::string::String::from("model has no batch law")))?;
    let c = model.servers();
    let n = pi.n;
    let bits = ctx.bits();
    let lam = model.arrival_rate().with_bits(bits);
    let mu = model.service_rate().with_bits(bits);
    let full = model.rejection() == Some(Rejection::Full);
    let infinite = model.buffer() == Buffer::Infinite;
    let batch = if infinite { batch.lumped() } else { batch.clone() };
    let one = ctx.one();

    let mut p = Vec::with_capacity(n + 1);
    p.push(ctx.zero());
    for level in 1..=n {
        let mut acc = ctx.zero();
        for k in 0..level {
            let mut tail = batch.batch_tail(level - k);
            if full {
                tail -= batch.batch_tail(n - k + 1);
            }
            if !tail.is_zero() {
                acc += pi.get(k) * tail;
            }
        }
        let rate = &mu * ctx.int(level.min(c) as i64);
        p.push(&lam * acc / rate);
    }
    let tail_mass = if infinite {
        // levels above N: Σ_k π(k) Σ_{m>N−k} B^c(m) over rate cμ
        let mut acc = ctx.zero();
        for k in 0..=n {
            acc += pi.get(k) * batch.tail_sum(n - k + 1);
        }
        &lam * acc / (&mu * ctx.int(c as i64))
    } else {
        ctx.zero()
    };
    let rest = p[1..].iter().fold(tail_mass.clone(), |a, v| a + v);
    p[0] = &one - rest;
    check_p0(&p[0], infinite, pi, ctx)?;
    Ok(TimeAverageDistribution { probabilities: p, tail_mass })
}

pub fn time_average(model: &ModelSpec, pi: &ArrivalDistribution, ctx: &PrecisionContext) -> Result<TimeAverageDistribution> {
    if model.batch().is_some() {
        time_average_batch(model, pi, ctx)
    } else {
        time_average_single(model, pi, ctx)
    }
}

/// `L`, `Lq`, `W`, `Wq`, effective arrival rate.
pub fn performance(model: &ModelSpec, p: &TimeAverageDistribution, ctx: &PrecisionContext) -> PerformanceReport {
    let c = model.servers();
    let bits = ctx.bits();
    let mut l = ctx.zero();
    let mut lq = ctx.zero();
    for (n, v) in p.probabilities.iter().enumerate().skip(1) {
        l += ctx.int(n as i64) * v;
        if n > c {
            lq += ctx.int((n - c) as i64) * v;
        }
    }
    let lambda_a = model.offered_rate().with_bits(bits);
    let one = ctx.one();
    let (lambda_eff, blocking_time_avg, convention) = match model.buffer() {
        Buffer::Finite(n) => {
            let b = p.get(n).clone();
            (&lambda_a * (&one - &b), b, WaitConvention::EffectiveRate)
        }
        Buffer::Infinite => (lambda_a.clone(), ctx.zero(), WaitConvention::OfferedRate),
    };
    let w = &l / &lambda_eff;
    let wq = &w - model.service_rate().with_bits(bits).recip();
    let w_offered = &l / &lambda_a;
    PerformanceReport { l, lq, w, wq, lambda_eff, blocking_time_avg, convention, w_offered }
}

/// Everything computed for one model.
#[derive(Debug, Clone)]
pub struct StationaryResult {
    pub arrival: ArrivalDistribution,
    pub time_average: TimeAverageDistribution,
    pub report: PerformanceReport,
}

/// Full pipeline: arrival distribution, time averages, measures.
pub fn solve(model: &ModelSpec, method: FiniteMethod, ctx: &PrecisionContext) -> Result<StationaryResult> {
    let arrival = arrival_distribution(model, method, ctx)?;
    let time_average = time_average(model, &arrival, ctx)?;
    let report = performance(model, &time_average, ctx);
    Ok(StationaryResult { arrival, time_average, report })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::{BatchSpec, InterarrivalSpec};
    use crate::solver::arrival_distribution_single;

    fn ctx() -> PrecisionContext {
        PrecisionContext::small_scale()
    }

    const MM36_PI: [f64; 7] = [
        0.067958810, 0.169897026, 0.212371283, 0.176976069, 0.147480057, 0.122900048, 0.102416707,
    ];

    fn mm36(ctx: &PrecisionContext) -> ModelSpec {
        let law = InterarrivalSpec::exponential(ctx.int(5)).unwrap();
        ModelSpec::new(3, ctx.int(2), law, Buffer::Finite(6)).unwrap()
    }

    #[test]
    fn mm36_time_averages() {
        let ctx = ctx();
        let m = mm36(&ctx);
        let r = solve(&m, FiniteMethod::ExactCut, &ctx).unwrap();
        for (v, t) in r.time_average.probabilities.iter().zip(MM36_PI) {
            assert!((v.to_f64() - t).abs() < 5e-10);
        }
        assert!((r.report.l.to_f64() - 2.944488506).abs() < 5e-9);
        assert!((r.report.w.to_f64() - 0.656092538).abs() < 5e-9);
    }

    #[test]
    fn rate_conservation_and_little() {
        let ctx = ctx();
        let law = InterarrivalSpec::hyperexponential(
            alloc::vec![ctx.parse("0.8").unwrap(), ctx.parse("0.2").unwrap()],
            alloc::vec![ctx.int(8), ctx.int(2)],
        )
        .unwrap();
        let m = ModelSpec::new(3, ctx.int(2), law, Buffer::Finite(9)).unwrap();
        let pi = arrival_distribution_single(&m, &ctx).unwrap();
        let p = time_average_single(&m, &pi, &ctx).unwrap();
        let lam = m.arrival_rate();
        for n in 0..9 {
            let lhs = &lam * pi.get(n);
            let rhs = m.service_rate() * ctx.int((n + 1).min(3) as i64) * p.get(n + 1);
            assert!((lhs - rhs).abs() < ctx.tolerance(12));
        }
        let total = p.probabilities.iter().fold(ctx.zero(), |a, v| a + v);
        assert!((total - ctx.one()).abs() < ctx.tolerance(12));
        let rep = performance(&m, &p, &ctx);
        assert!((&rep.lambda_eff * &rep.w - &rep.l).abs() < ctx.tolerance(12));
        let busy = p
            .probabilities
            .iter()
            .enumerate()
            .fold(ctx.zero(), |a, (n, v)| a + ctx.int(n.min(3) as i64) * v);
        assert!((&rep.l - busy - &rep.lq).abs() < ctx.tolerance(12));
    }

    #[test]
    fn unit_batch_time_averages_match_single() {
        let ctx = ctx();
        let m = mm36(&ctx);
        let pi = arrival_distribution_single(&m, &ctx).unwrap();
        let single = time_average_single(&m, &pi, &ctx).unwrap();
        for policy in [Rejection::Partial, Rejection::Full] {
            let b = m.clone().with_batch(BatchSpec::unit(ctx.bits()), Some(policy)).unwrap();
            let batch = time_average_batch(&b, &pi, &ctx).unwrap();
            for (x, y) in batch.probabilities.iter().zip(&single.probabilities) {
                assert!((x - y).abs() < ctx.tolerance(12));
            }
        }
    }

    #[test]
    fn infinite_buffer_accounts_for_tail() {
        let ctx = ctx();
        let law = InterarrivalSpec::erlang(2, ctx.int(3)).unwrap();
        let m = ModelSpec::new(2, ctx.int(2), law, Buffer::Infinite).unwrap();
        let r = solve(&m, FiniteMethod::default(), &ctx).unwrap();
        let total = r.time_average.probabilities.iter().fold(r.time_average.tail_mass.clone(), |a, v| a + v);
        assert!((total - ctx.one()).abs() < ctx.tolerance(12));
        assert_eq!(r.report.convention, WaitConvention::OfferedRate);
    }
}
