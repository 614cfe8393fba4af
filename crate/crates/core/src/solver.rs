//! Decay rate σ, truncation level, and the distribution seen by arrivals.
//!
//! Single-arrival chains only move up by one state per step, so flow across
//! the cut between `{0..j}` and `{j+1..N}` balances:
//! `π(j)p(j,j+1) = Σ_{k>j} π(k)a(k,j)` with `a(k,j) = Σ_{n≤j} p(k,n)`.
//! Solving that downward from a seed gives π without a linear solve. Batch
//! chains jump up by more than one and go through the stationary solver.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::kernel::{batch_transform, Buffer, ModelSpec, SingleKernel, TransitionMatrix};
use crate::numerics::{solve_fixed_point, solve_stationary_vector, PrecisionContext};
use crate::real::Real;

/// How a finite-buffer single-arrival model is solved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FiniteMethod {
    /// Cut recursion on the finite chain, seeded with `π'(N) = 1`. Exact.
    #[default]
    ExactCut,
    /// Seeds `π'(j) = σʲ` for `c ≤ j ≤ N` and recurses only below `c`, as
    /// for the infinite buffer. Not the exact finite-chain solution.
    GeometricTail,
}

/// Distribution of the number in system just before an arrival.
#[derive(Debug, Clone)]
pub struct ArrivalDistribution {
    /// `π(0..=N)`.
    pub probabilities: Vec<Real>,
    /// Geometric decay rate of the tail, when the solve used one.
    pub sigma: Option<Real>,
    /// `C` in `π(n) = Cσⁿ`, `n ≥ c`, for the geometric-tail paths.
    pub tail_constant: Option<Real>,
    /// Buffer size or truncation level.
    pub n: usize,
    /// Sum of the unnormalized vector.
    pub normalization_sum: Real,
}

impl ArrivalDistribution {
    pub fn len(&self) -> usize {
        self.probabilities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probabilities.is_empty()
    }

    pub fn get(&self, n: usize) -> &Real {
        &self.probabilities[n]
    }
}

/// σ, the root in (0,1) of `σ = A*(cμ(1−σ))`, by plain iteration from 0.5.
pub fn solve_sigma(model: &ModelSpec, ctx: &PrecisionContext) -> Result<Real> {
    let bits = ctx.bits();
    let c = model.servers();
    let cmu = model.service_rate().with_bits(bits) * Real::from_usize(c, bits);
    let rho = model.arrival_rate().with_bits(bits) / &cmu;
    if rho >= ctx.one() {
        return Err(Error::NonConvergence {
            iterations: 0,
            reason: format!("utilization {} is not below 1", rho.to_sig_string(12)),
        });
    }
    let law = model.interarrival();
    let one = ctx.one();
    let half = one.clone() / ctx.int(2);
    solve_fixed_point(|s: &Real| law.lst(&(&cmu * (&one - s))), &half, ctx)
}

/// Decay rate of the arrival distribution of the batch model: the root in
/// (0,1) of `A*(cμ(1−σ)) Σ_k b(k)σ^{−k} = 1` (batch tail lumped onto its
/// largest size). Equals [`solve_sigma`] for unit batches.
pub fn batch_decay_rate(model: &ModelSpec, ctx: &PrecisionContext) -> Result<Real> {
    let Some(batch) = model.batch() else {
        return solve_sigma(model, ctx);
    };
    if batch.is_unit() {
        return solve_sigma(model, ctx);
    }
    if model.rho() >= ctx.one() {
        return Err(Error::NonConvergence {
            iterations: 0,
            reason: format!("utilization {} is not below 1", model.rho().to_sig_string(12)),
        });
    }
    let bits = ctx.bits();
    let batch = batch.lumped();
    let cmu = model.service_rate().with_bits(bits) * Real::from_usize(model.servers(), bits);
    let law = model.interarrival();
    let one = ctx.one();
    let h = |s: &Real| {
        let inv = s.recip();
        let mut g = ctx.zero();
        let mut pw = one.clone();
        for b in batch.pmf() {
            pw = &pw * &inv;
            g += b * &pw;
        }
        law.lst(&(&cmu * (&one - s))) * g - &one
    };
    // h > 0 near 0, h < 0 just below 1 when ρ < 1
    let mut hi = one.clone() - ctx.real(1e-3);
    let mut gap = 1e-3;
    while !h(&hi).is_negative() {
        gap /= 16.0;
        if gap < 1e-60 {
            return Err(Error::NonConvergence {
                iterations: 0,
                reason: String::from("no sign change of the batch decay equation below 1"),
            });
        }
        hi = one.clone() - ctx.real(gap);
    }
    let mut lo = ctx.real(0.5);
    while !h(&lo).is_positive() {
        lo = lo * ctx.real(0.5);
        if lo < ctx.real(1e-300) {
            return Err(Error::NonConvergence {
                iterations: 0,
                reason: String::from("no sign change of the batch decay equation above 0"),
            });
        }
    }
    let half = ctx.real(0.5);
    let eps = ctx.eps_sigma().clone();
    let mut it = 0;
    while (&hi - &lo) > eps {
        let mid = (&lo + &hi) * &half;
        if h(&mid).is_positive() {
            lo = mid;
        } else {
            hi = mid;
        }
        it += 1;
        if it > ctx.max_iterations() {
            return Err(Error::NonConvergence { iterations: it, reason: String::from("bisection") });
        }
    }
    Ok((lo + hi) * half)
}

/// Smallest integer `N ≥ c + (ln ε − 2 ln(1−σ))/ln σ`, optionally refined
/// by `− ln(1 − Σ_{j<c} π(j))/ln σ` when the head mass is known.
pub fn truncation_level(sigma: &Real, c: usize, pi_head: Option<&Real>, ctx: &PrecisionContext) -> usize {
    if !sigma.is_positive() {
        return c;
    }
    let one = ctx.one();
    let ln_s = sigma.ln();
    let mut num = ctx.eps_trunc().ln() - ctx.int(2) * (&one - sigma).ln();
    if let Some(h) = pi_head {
        let rest = &one - h;
        if rest.is_positive() {
            num -= rest.ln();
        }
    }
    let extra = num / ln_s;
    if !extra.is_positive() {
        return c;
    }
    let n = extra.ceil().to_usize().unwrap_or(usize::MAX - c);
    c + n
}

/// Pre-arrival distribution of a single-arrival model: geometric tail plus
/// cut recursion for infinite buffers, the exact finite recursion otherwise.
pub fn arrival_distribution_single(model: &ModelSpec, ctx: &PrecisionContext) -> Result<ArrivalDistribution> {
    arrival_distribution_single_with(model, FiniteMethod::default(), ctx)
}

pub fn arrival_distribution_single_with(
    model: &ModelSpec,
    method: FiniteMethod,
    ctx: &PrecisionContext,
) -> Result<ArrivalDistribution> {
    if model.batch().is_some() {
        return Err(Error::Precondition(String::from(
            "single-arrival solve applied to a batch model",
        )));
    }
    let c = model.servers();
    match model.buffer() {
        Buffer::Infinite => {
            let sigma = solve_sigma(model, ctx)?;
            let n = truncation_level(&sigma, c, None, ctx).max(c);
            let kernel = SingleKernel::new(model, n, ctx)?;
            geometric_solve(&kernel, &sigma, n, false, ctx)
        }
        Buffer::Finite(n) => {
            let kernel = SingleKernel::new(model, n, ctx)?;
            if method == FiniteMethod::GeometricTail && n >= c {
                let sigma = solve_sigma(model, ctx)?;
                geometric_solve(&kernel, &sigma, n, true, ctx)
            } else {
                exact_finite_solve(&kernel, n, ctx)
            }
        }
    }
}

/// `a(k, 0..=upto)` with the last row of a finite chain repeating row `n−1`.
fn cut_rows(kernel: &SingleKernel, n: usize, upto: usize, finite: bool) -> Vec<Vec<Real>> {
    (0..=n)
        .map(|k| {
            if finite && k == n && n >= 1 {
                kernel.cut_row(n - 1, upto)
            } else {
                kernel.cut_row(k, upto)
            }
        })
        .collect()
}

fn divide_by_up(sum: Real, kernel: &SingleKernel, j: usize) -> Result<Real> {
    let up = kernel.up(j);
    if up.is_zero() {
        return Err(Error::DivisionHazard { state: j });
    }
    Ok(sum / up)
}

fn geometric_solve(
    kernel: &SingleKernel,
    sigma: &Real,
    n: usize,
    finite: bool,
    ctx: &PrecisionContext,
) -> Result<ArrivalDistribution> {
    let c = kernel.servers();
    let mut pi = vec![ctx.zero(); n + 1];
    let mut pw = sigma.powi(c);
    for slot in pi.iter_mut().skip(c) {
        *slot = pw.clone();
        pw = &pw * sigma;
    }
    if c >= 1 {
        let cuts = cut_rows(kernel, n, c - 1, finite);
        for j in (0..c).rev() {
            let mut acc = ctx.zero();
            for k in j + 1..=n {
                acc += &pi[k] * &cuts[k][j];
            }
            pi[j] = divide_by_up(acc, kernel, j)?;
        }
    }
    let head = pi[..c].iter().fold(ctx.zero(), |a, v| a + v);
    let phi = if finite {
        pi[c..].iter().fold(head, |a, v| a + v)
    } else {
        // Σ_{k=c}^{N} σ^k in closed form
        let one = ctx.one();
        head + sigma.powi(c) * (&one - sigma.powi(n - c + 1)) / (&one - sigma)
    };
    for v in pi.iter_mut() {
        *v = &*v / &phi;
    }
    Ok(ArrivalDistribution {
        probabilities: pi,
        sigma: Some(sigma.clone()),
        tail_constant: Some(phi.recip()),
        n,
        normalization_sum: phi,
    })
}

fn exact_finite_solve(kernel: &SingleKernel, n: usize, ctx: &PrecisionContext) -> Result<ArrivalDistribution> {
    let mut pi = vec![ctx.zero(); n + 1];
    pi[n] = ctx.one();
    if n >= 1 {
        let cuts = cut_rows(kernel, n, n - 1, true);
        for j in (0..n).rev() {
            let mut acc = ctx.zero();
            for k in j + 1..=n {
                acc += &pi[k] * &cuts[k][j];
            }
            pi[j] = divide_by_up(acc, kernel, j)?;
        }
    }
    let phi = pi.iter().fold(ctx.zero(), |a, v| a + v);
    for v in pi.iter_mut() {
        *v = &*v / &phi;
    }
    Ok(ArrivalDistribution { probabilities: pi, sigma: None, tail_constant: None, n, normalization_sum: phi })
}

/// The batch kernel of `model` on its (possibly truncated) state space.
pub fn batch_matrix(model: &ModelSpec, ctx: &PrecisionContext) -> Result<(TransitionMatrix, Option<Real>)> {
    let batch = model
        .batch()
        .ok_or_else(|| Error::Precondition(String::from("model has no batch law")))?;
    let single = model.single_arrival();
    match model.buffer() {
        Buffer::Finite(n) => {
            let kernel = SingleKernel::new(&single, n, ctx)?;
            let m = batch_transform(&kernel, batch, Buffer::Finite(n), n, model.rejection(), ctx)?;
            Ok((m, None))
        }
        Buffer::Infinite => {
            let sigma = batch_decay_rate(model, ctx)?;
            let kb = batch.lumped().support();
            let n = truncation_level(&sigma, model.servers(), None, ctx).max(model.servers()) + kb;
            let kernel = SingleKernel::new(&single, n + kb - 1, ctx)?;
            let m = batch_transform(&kernel, batch, Buffer::Infinite, n, None, ctx)?;
            Ok((m, Some(sigma)))
        }
    }
}

/// Pre-arrival distribution of a batch model from `π = πP*`.
pub fn arrival_distribution_batch(model: &ModelSpec, ctx: &PrecisionContext) -> Result<ArrivalDistribution> {
    let batch = model
        .batch()
        .ok_or_else(|| Error::Precondition(String::from("model has no batch law")))?;
    if model.buffer() == Buffer::Infinite && batch.is_unit() {
        return arrival_distribution_single(&model.single_arrival(), ctx);
    }
    let (p, sigma) = batch_matrix(model, ctx)?;
    let pi = solve_stationary_vector(&p, ctx)?;
    let n = pi.len() - 1;
    Ok(ArrivalDistribution { probabilities: pi, sigma, tail_constant: None, n, normalization_sum: ctx.one() })
}

/// Dispatches on whether the model has a batch law.
pub fn arrival_distribution(model: &ModelSpec, method: FiniteMethod, ctx: &PrecisionContext) -> Result<ArrivalDistribution> {
    if model.batch().is_some() {
        arrival_distribution_batch(model, ctx)
    } else {
        arrival_distribution_single_with(model, method, ctx)
    }
}

/// `π(j)p(j,j+1) − Σ_{k>j} π(k)a(k,j)` for `j = 0..N−1` on the chain the
/// single-arrival solve used (finite buffer: last row repeated).
pub fn cut_balance_residuals(model: &ModelSpec, dist: &ArrivalDistribution, ctx: &PrecisionContext) -> Result<Vec<Real>> {
    let n = dist.n;
    let kernel = SingleKernel::new(&model.single_arrival(), n, ctx)?;
    let finite = matches!(model.buffer(), Buffer::Finite(_));
    if n == 0 {
        return Ok(Vec::new());
    }
    let cuts = cut_rows(&kernel, n, n - 1, finite);
    let pi = &dist.probabilities;
    Ok((0..n)
        .map(|j| {
            let mut acc = ctx.zero();
            for k in j + 1..=n {
                acc += &pi[k] * &cuts[k][j];
            }
            &pi[j] * kernel.up(j) - acc
        })
        .collect())
}
