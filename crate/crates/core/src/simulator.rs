//! Discrete-event simulation of GI^X/M/c/N in plain `f64`, used as an
//! independent check on the analytic solver.
//!
//! Randomness comes from ChaCha8 seeded with `seed_from_u64(seed)`; uniforms
//! take the top 53 bits of each `u64`. Service is exponential, so the next
//! departure is simply redrawn at rate `min(n,c)μ` after every event.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::distributions::InterarrivalLaw;
use crate::error::{Error, Result};
use crate::kernel::{Buffer, ModelSpec, Rejection};

pub const MIN_ARRIVALS: u64 = 10_000;
/// Smallest number of tallied arrivals per batch-means chunk.
pub const MIN_PER_BATCH: u64 = 100;

/// Batch-means standard errors, entry by entry.
#[derive(Debug, Clone, PartialEq)]
pub struct StandardErrors {
    pub pre_arrival: Vec<f64>,
    pub time_average: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationResult {
    /// π̂(n): fraction of tallied arrivals that found `n` in system.
    pub pre_arrival_freq: Vec<f64>,
    /// p̂(n): fraction of tallied time spent with `n` in system.
    pub time_avg_freq: Vec<f64>,
    pub standard_errors: StandardErrors,
    /// All arrivals, warm-up included.
    pub arrivals_simulated: u64,
    pub warmup: u64,
    /// Simulated time covered by the tallies.
    pub horizon: f64,
    pub seed: u64,
    /// Admitted customers over offered customers after warm-up.
    pub accepted_fraction: f64,
    pub accepted: u64,
    pub served: u64,
    pub final_in_system: u64,
}

impl SimulationResult {
    /// `accepted = served + final_in_system`.
    pub fn flow_balanced(&self) -> bool {
        self.accepted == self.served + self.final_in_system
    }

    pub fn mean_in_system(&self) -> f64 {
        self.time_avg_freq.iter().enumerate().map(|(n, p)| n as f64 * p).sum()
    }
}

struct Uniform(ChaCha8Rng);

impl Uniform {
    fn next(&mut self) -> f64 {
        (self.0.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    fn exp(&mut self, rate: f64) -> f64 {
        -libm::log(1.0 - self.next()) / rate
    }

    fn pick(&mut self, cumulative: &[f64]) -> usize {
        let u = self.next();
        cumulative.iter().position(|&c| u < c).unwrap_or(cumulative.len())
    }
}

enum Sampler {
    Fixed(f64),
    Exp(f64),
    Erlang(usize, f64),
    Mixture(Vec<f64>, Vec<f64>),
    /// Initial cumulative, holding rates, per-phase cumulative jump targets
    /// (index `phases` means absorption).
    Phases(Vec<f64>, Vec<f64>, Vec<Vec<f64>>),
}

fn cumulative(w: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut acc = 0.0;
    w.map(|v| {
        acc += v;
        acc
    })
    .collect()
}

impl Sampler {
    fn new(law: &InterarrivalLaw) -> Self {
        match law {
            InterarrivalLaw::Deterministic { period } => Sampler::Fixed(period.to_f64()),
            InterarrivalLaw::Exponential { rate } => Sampler::Exp(rate.to_f64()),
            InterarrivalLaw::Erlang { phases, rate } => Sampler::Erlang(*phases, *phases as f64 * rate.to_f64()),
            InterarrivalLaw::HyperExponential { weights, rates } => Sampler::Mixture(
                cumulative(weights.iter().map(|w| w.to_f64())),
                rates.iter().map(|r| r.to_f64()).collect(),
            ),
            InterarrivalLaw::PhaseType(ph) => {
                let m = ph.phases();
                let t = ph.generator();
                let hold: Vec<f64> = (0..m).map(|i| -t[i * m + i].to_f64()).collect();
                let jumps = (0..m)
                    .map(|i| {
                        let row = (0..=m).map(|j| {
                            if j == m {
                                ph.exit()[i].to_f64()
                            } else if j == i {
                                0.0
                            } else {
                                t[i * m + j].to_f64()
                            }
                        });
                        cumulative(row.map(|v| v / hold[i]))
                    })
                    .collect();
                Sampler::Phases(cumulative(ph.alpha().iter().map(|a| a.to_f64())), hold, jumps)
            }
        }
    }

    fn sample(&self, u: &mut Uniform) -> f64 {
        match self {
            Sampler::Fixed(t) => *t,
            Sampler::Exp(r) => u.exp(*r),
            Sampler::Erlang(k, r) => (0..*k).map(|_| u.exp(*r)).sum(),
            Sampler::Mixture(w, r) => {
                let i = u.pick(w).min(r.len() - 1);
                u.exp(r[i])
            }
            Sampler::Phases(alpha, hold, jumps) => {
                let m = hold.len();
                let mut phase = u.pick(alpha).min(m - 1);
                let mut t = 0.0;
                loop {
                    t += u.exp(hold[phase]);
                    let next = u.pick(&jumps[phase]).min(m);
                    if next == m {
                        return t;
                    }
                    phase = next;
                }
            }
        }
    }
}

fn bump(v: &mut Vec<f64>, n: usize, w: f64) {
    if v.len() <= n {
        v.resize(n + 1, 0.0);
    }
    v[n] += w;
}

/// Batch-means mean and standard error of each entry across chunks.
fn batch_means_se(chunks: &[Vec<f64>], len: usize) -> Vec<f64> {
    let b = chunks.len() as f64;
    (0..len)
        .map(|n| {
            let vals = chunks.iter().map(|c| c.get(n).copied().unwrap_or(0.0));
            let mean = vals.clone().sum::<f64>() / b;
            let ss: f64 = vals.map(|v| (v - mean) * (v - mean)).sum();
            libm::sqrt(ss / (b * (b - 1.0)))
        })
        .collect()
}

/// Simulates `arrivals` batch arrivals, discards the first 5% and splits the
/// rest into `batches` chunks of consecutive arrivals for batch means.
pub fn simulate(model: &ModelSpec, arrivals: u64, seed: u64, batches: usize) -> Result<SimulationResult> {
    if arrivals < MIN_ARRIVALS {
        return Err(Error::InvalidHorizon(format!("{arrivals} arrivals, need at least {MIN_ARRIVALS}")));
    }
    let warmup = arrivals / 20;
    let tallied = arrivals - warmup;
    if batches < 2 || tallied / (batches as u64) < MIN_PER_BATCH {
        return Err(Error::InvalidHorizon(format!(
            "{tallied} tallied arrivals cannot fill {batches} batches of at least {MIN_PER_BATCH}"
        )));
    }

    let c = model.servers() as u64;
    let mu = model.service_rate().to_f64();
    let capacity = match model.buffer() {
        Buffer::Finite(n) => Some(n as u64),
        Buffer::Infinite => None,
    };
    let rejection = model.rejection();
    // cumulative pmf over sizes 1..=K; anything past it is size K+1
    let sizes = model.batch().filter(|b| !b.is_unit()).map(|b| cumulative(b.pmf().iter().map(|p| p.to_f64())));
    let sampler = Sampler::new(model.interarrival().law());
    let mut rng = Uniform(ChaCha8Rng::seed_from_u64(seed));

    let mut pre_chunks: Vec<Vec<f64>> = vec![Vec::new(); batches];
    let mut time_chunks: Vec<Vec<f64>> = vec![Vec::new(); batches];
    let mut chunk_time = vec![0.0f64; batches];
    let mut chunk_count = vec![0u64; batches];
    let chunk_of = |k: u64| ((k - warmup) as u128 * batches as u128 / tallied as u128) as usize;

    let mut n: u64 = 0;
    let mut now = 0.0f64;
    let mut departure = f64::INFINITY;
    let mut accepted = 0u64;
    let mut served = 0u64;
    let mut offered_after = 0u64;
    let mut accepted_after = 0u64;

    for k in 0..arrivals {
        let next = now + sampler.sample(&mut rng);
        let open = if k > warmup { Some(chunk_of(k - 1)) } else { None };
        while n > 0 && departure <= next {
            if let Some(b) = open {
                bump(&mut time_chunks[b], n as usize, departure - now);
            }
            now = departure;
            n -= 1;
            served += 1;
            departure = if n > 0 { now + rng.exp(n.min(c) as f64 * mu) } else { f64::INFINITY };
        }
        if let Some(b) = open {
            bump(&mut time_chunks[b], n as usize, next - now);
        }
        now = next;

        let size = match &sizes {
            None => 1,
            Some(cum) => rng.pick(cum) as u64 + 1,
        };
        let admitted = match capacity {
            None => size,
            Some(cap) => {
                let room = cap - n;
                match rejection {
                    Some(Rejection::Full) if size > room => 0,
                    _ => size.min(room),
                }
            }
        };
        if k >= warmup {
            let b = chunk_of(k);
            bump(&mut pre_chunks[b], n as usize, 1.0);
            chunk_count[b] += 1;
            offered_after += size;
            accepted_after += admitted;
        }
        if admitted > 0 {
            n += admitted;
            accepted += admitted;
            departure = now + rng.exp(n.min(c) as f64 * mu);
        }
    }

    for (b, v) in time_chunks.iter().enumerate() {
        chunk_time[b] = v.iter().sum();
    }
    let len = pre_chunks.iter().chain(time_chunks.iter()).map(Vec::len).max().unwrap_or(1).max(capacity.map_or(1, |c| c as usize + 1));
    let total_time: f64 = chunk_time.iter().sum();

    let mut pre = vec![0.0; len];
    let mut avg = vec![0.0; len];
    for b in 0..batches {
        for (n, v) in pre_chunks[b].iter().enumerate() {
            pre[n] += v;
        }
        for (n, v) in time_chunks[b].iter().enumerate() {
            avg[n] += v;
        }
    }
    for v in pre.iter_mut() {
        *v /= tallied as f64;
    }
    for v in avg.iter_mut() {
        *v /= total_time;
    }

    let pre_freq: Vec<Vec<f64>> = pre_chunks
        .iter()
        .zip(&chunk_count)
        .map(|(v, &m)| v.iter().map(|x| x / m as f64).collect())
        .collect();
    let time_freq: Vec<Vec<f64>> = time_chunks
        .iter()
        .zip(&chunk_time)
        .map(|(v, &t)| v.iter().map(|x| x / t).collect())
        .collect();

    Ok(SimulationResult {
        pre_arrival_freq: pre,
        time_avg_freq: avg,
        standard_errors: StandardErrors {
            pre_arrival: batch_means_se(&pre_freq, len),
            time_average: batch_means_se(&time_freq, len),
        },
        arrivals_simulated: arrivals,
        warmup,
        horizon: total_time,
        seed,
        accepted_fraction: if offered_after == 0 { 1.0 } else { accepted_after as f64 / offered_after as f64 },
        accepted,
        served,
        final_in_system: n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::{BatchSpec, InterarrivalSpec};
    use crate::numerics::PrecisionContext;

    fn mm36(mu: &str) -> ModelSpec {
        let ctx = PrecisionContext::small_scale();
        let law = InterarrivalSpec::exponential(ctx.int(5)).unwrap();
        ModelSpec::new(3, ctx.parse(mu).unwrap(), law, Buffer::Finite(6)).unwrap()
    }

    #[test]
    fn reproducible_and_balanced() {
        let m = mm36("2");
        let a = simulate(&m, 50_000, 7, 20).unwrap();
        let b = simulate(&m, 50_000, 7, 20).unwrap();
        assert_eq!(a, b);
        assert!(a.flow_balanced());
        let s: f64 = a.pre_arrival_freq.iter().sum();
        let t: f64 = a.time_avg_freq.iter().sum();
        assert!((s - 1.0).abs() < 1e-12 && (t - 1.0).abs() < 1e-12);
        assert!(a.standard_errors.time_average.iter().all(|&e| e > 0.0));
    }

    #[test]
    fn horizon_errors() {
        let m = mm36("2");
        assert!(matches!(simulate(&m, 9_999, 1, 10), Err(Error::InvalidHorizon(_))));
        assert!(matches!(simulate(&m, 20_000, 1, 1000), Err(Error::InvalidHorizon(_))));
        assert!(matches!(simulate(&m, 20_000, 1, 1), Err(Error::InvalidHorizon(_))));
    }

    #[test]
    fn fast_service_empties_system() {
        let r = simulate(&mm36("1e6"), 20_000, 3, 10).unwrap();
        assert!(r.time_avg_freq[0] > 0.9999);
    }

    #[test]
    fn full_rejection_drops_oversized_batches() {
        let ctx = PrecisionContext::small_scale();
        let law = InterarrivalSpec::exponential(ctx.int(1)).unwrap();
        let m = ModelSpec::new(2, ctx.int(1), law, Buffer::Finite(2)).unwrap();
        let big = BatchSpec::from_pmf(vec![ctx.zero(), ctx.zero(), ctx.one()], ctx.zero()).unwrap();
        let r = simulate(&m.with_batch(big, Some(Rejection::Full)).unwrap(), 20_000, 5, 10).unwrap();
        assert_eq!(r.accepted, 0);
        assert_eq!(r.pre_arrival_freq[0], 1.0);
    }
}
