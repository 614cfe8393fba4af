//! Model description and the one-step transition matrix of the chain observed
//! just before arrivals.
//!
//! For the single-arrival model the state space splits into three regions:
//!
//! * `j ≤ i+1 ≤ c`: every customer present is in service, an alternating
//!   binomial sum over `A*((j+r)μ)`;
//! * `c ≤ j ≤ i+1`: all servers stay busy, `q(n) = (cμ)ⁿ A_n*(cμ)/n!` with
//!   `n = i−j+1`;
//! * `1 ≤ j ≤ c−1`, `i ≥ c`: a finite double sum of transform derivatives.
//!
//! In the third region the bracket `A*((c−k)μ) − Σ_{r≤i−c+1}(kμ)^r A_r*(cμ)/r!`
//! is the remainder of the Taylor expansion of `A*` about `cμ`, and is
//! evaluated as that remainder, `Σ_{r≥i−c+2}(kμ)^r A_r*(cμ)/r!`, accumulated
//! backwards. Subtracting the partial sum from `A*((c−k)μ)` directly loses
//! every significant digit once `i` reaches a few hundred.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::distributions::{BatchSpec, InterarrivalSpec};
use crate::error::{Error, Result};
use crate::numerics::PrecisionContext;
use crate::real::Real;

/// Waiting-room mode: capacity `N` (customers in system) or unlimited.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Buffer {
    Finite(usize),
    Infinite,
}

/// What happens to a batch that does not fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rejection {
    /// Admit as many as fit, drop the rest.
    Partial,
    /// Drop the whole batch.
    Full,
}

/// A GI/M/c-type model: `c` exponential servers with rate `μ`, renewal
/// arrivals, optional batches.
#[derive(Debug, Clone)]
pub struct ModelSpec {
    servers: usize,
    service_rate: Real,
    interarrival: InterarrivalSpec,
    buffer: Buffer,
    batch: Option<BatchSpec>,
    rejection: Option<Rejection>,
}

impl ModelSpec {
    /// Single-arrival model.
    pub fn new(servers: usize, service_rate: Real, interarrival: InterarrivalSpec, buffer: Buffer) -> Result<Self> {
        if servers == 0 {
            return Err(Error::InvalidModel(String::from("at least one server is required")));
        }
        if !service_rate.is_positive() || !service_rate.is_finite() {
            return Err(Error::InvalidModel(format!(
                "service rate must be positive, got {}",
                service_rate.to_sig_string(12)
            )));
        }
        if buffer == Buffer::Finite(0) {
            return Err(Error::InvalidModel(String::from("finite buffer needs capacity N >= 1")));
        }
        let m = ModelSpec { servers, service_rate, interarrival, buffer, batch: None, rejection: None };
        m.check_stability()?;
        Ok(m)
    }

    /// Adds a batch-size law. Finite buffers need a rejection policy;
    /// infinite buffers must not have one.
    pub fn with_batch(mut self, batch: BatchSpec, rejection: Option<Rejection>) -> Result<Self> {
        match (self.buffer, rejection) {
            (Buffer::Infinite, Some(_)) => return Err(Error::PolicyError),
            (Buffer::Finite(_), None) => {
                return Err(Error::InvalidModel(String::from(
                    "a finite-buffer batch model needs a rejection policy",
                )))
            }
            (Buffer::Finite(n), Some(_)) if n < self.servers => {
                return Err(Error::InvalidModel(format!(
                    "batch models need capacity N >= c (N={n}, c={})",
                    self.servers
                )))
            }
            _ => {}
        }
        self.batch = Some(batch);
        self.rejection = rejection;
        self.check_stability()?;
        Ok(self)
    }

    fn check_stability(&self) -> Result<()> {
        if self.buffer == Buffer::Infinite && self.rho() >= Real::one(self.service_rate.bits()) {
            return Err(Error::InvalidModel(format!(
                "an infinite buffer needs utilization below 1, got {}",
                self.rho().to_sig_string(12)
            )));
        }
        Ok(())
    }

    pub fn servers(&self) -> usize {
        self.servers
    }

    pub fn service_rate(&self) -> &Real {
        &self.service_rate
    }

    pub fn interarrival(&self) -> &InterarrivalSpec {
        &self.interarrival
    }

    pub fn buffer(&self) -> Buffer {
        self.buffer
    }

    pub fn capacity(&self) -> Option<usize> {
        match self.buffer {
            Buffer::Finite(n) => Some(n),
            Buffer::Infinite => None,
        }
    }

    pub fn batch(&self) -> Option<&BatchSpec> {
        self.batch.as_ref()
    }

    pub fn rejection(&self) -> Option<Rejection> {
        self.rejection
    }

    /// Same model without its batch law.
    pub fn single_arrival(&self) -> Self {
        ModelSpec { batch: None, rejection: None, ..self.clone() }
    }

    /// Batch (or customer, without batches) arrival rate λ.
    pub fn arrival_rate(&self) -> Real {
        self.interarrival.rate()
    }

    /// Offered customer rate λ_A = λE[X].
    pub fn offered_rate(&self) -> Real {
        match &self.batch {
            Some(b) => self.arrival_rate() * b.mean(),
            None => self.arrival_rate(),
        }
    }

    /// ρ = λE[X]/(cμ).
    pub fn rho(&self) -> Real {
        self.offered_rate() / (&self.service_rate * Real::from_usize(self.servers, self.service_rate.bits()))
    }
}

/// Dense row-major square matrix of transition probabilities.
#[derive(Debug, Clone)]
pub struct TransitionMatrix {
    size: usize,
    entries: Vec<Real>,
}

impl TransitionMatrix {
    pub fn from_entries(size: usize, entries: Vec<Real>) -> Self {
        assert_eq!(entries.len(), size * size, "matrix must be square");
        TransitionMatrix { size, entries }
    }

    fn from_rows(rows: Vec<Vec<Real>>) -> Self {
        let size = rows.len();
        let entries: Vec<Real> = rows.into_iter().flatten().collect();
        Self::from_entries(size, entries)
    }

    /// Number of states, `N + 1`.
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn get(&self, i: usize, j: usize) -> &Real {
        &self.entries[i * self.size + j]
    }

    pub fn row(&self, i: usize) -> &[Real] {
        &self.entries[i * self.size..(i + 1) * self.size]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[Real]> {
        self.entries.chunks(self.size.max(1))
    }

    /// `xP`.
    pub fn left_multiply(&self, x: &[Real], ctx: &PrecisionContext) -> Vec<Real> {
        let n = self.size;
        let mut y = vec![ctx.zero(); n];
        for (i, xi) in x.iter().enumerate().take(n) {
            if xi.is_zero() {
                continue;
            }
            for (j, p) in self.row(i).iter().enumerate() {
                if !p.is_zero() {
                    y[j] += xi * p;
                }
            }
        }
        y
    }

    /// Largest `|Σ_j p(i,j) − 1|` and the row where it occurs.
    pub fn max_row_deviation(&self, ctx: &PrecisionContext) -> (usize, Real) {
        let one = ctx.one();
        let mut worst = (0, ctx.zero());
        for (i, row) in self.rows().enumerate() {
            let s = row.iter().fold(ctx.zero(), |a, v| a + v);
            let d = (s - &one).abs();
            if d > worst.1 {
                worst = (i, d);
            }
        }
        worst
    }

    /// Fails with `StochasticityViolation` if some row sum is off by more
    /// than `tol`.
    pub fn check_stochastic(&self, tol: &Real, ctx: &PrecisionContext) -> Result<()> {
        let (row, dev) = self.max_row_deviation(ctx);
        if dev > *tol {
            return Err(Error::StochasticityViolation { row, deviation: dev.to_f64() });
        }
        Ok(())
    }

    /// Cut sums `a(k, j) = Σ_{n≤j} p(k, n)` for all k, j.
    pub fn cut_sums(&self, ctx: &PrecisionContext) -> Vec<Vec<Real>> {
        self.rows()
            .map(|row| {
                let mut acc = ctx.zero();
                row.iter()
                    .map(|v| {
                        acc += v;
                        acc.clone()
                    })
                    .collect()
            })
            .collect()
    }
}

fn factorial(n: usize, bits: usize) -> Real {
    let mut f = Real::one(bits);
    for k in 2..=n {
        f *= Real::from_usize(k, bits);
    }
    f
}

/// Signed coefficient of the bracket for index `k` in `p(i, j)`, third
/// region: `c!/j! · (−1)^{c−j−k}/(k!(c−j−k)!) · (c/k)^{i−c+1}`.
pub fn region3_coefficient(c: usize, j: usize, k: usize, i: usize, bits: usize) -> Real {
    assert!(j >= 1 && j < c && k >= 1 && k <= c - j && i >= c, "indices outside the third region");
    let mag = factorial(c, bits) / (factorial(j, bits) * factorial(k, bits) * factorial(c - j - k, bits));
    let ratio = Real::from_usize(c, bits) / Real::from_usize(k, bits);
    let v = mag * ratio.powi(i - c + 1);
    if (c - j - k) % 2 == 1 {
        -v
    } else {
        v
    }
}

/// `(−1)^{c−j−k}` as a flag plus `c!/(j!k!(c−j−k)!)`.
#[derive(Debug, Clone)]
struct Coefficient {
    negative: bool,
    magnitude: Real,
}

/// Transition probabilities of the single-arrival chain on the unbounded
/// state space, precomputed for rows `0..=max_row`.
#[derive(Debug, Clone)]
pub struct SingleKernel {
    c: usize,
    max_row: usize,
    bits: usize,
    /// `A*(mμ)`, m = 0..=c.
    astar: Vec<Real>,
    /// `binom[n][k]`, n ≤ c.
    binom: Vec<Vec<Real>>,
    /// `q(r)`, r = 0..=max_row+1.
    q: Vec<Real>,
    /// `Q(m) = Σ_{r≥m} q(r)`, m = 0..=max_row+2.
    qtail: Vec<Real>,
    /// `s[k-1][m] = Σ_{r≥m} (k/c)^{r−m+1} q(r)`, used for m ≥ 2.
    s: Vec<Vec<Real>>,
    /// `coef[j][k-1]` for 1 ≤ j ≤ c−1, 1 ≤ k ≤ c−j.
    coef: Vec<Vec<Coefficient>>,
}

const TAIL_EXTENSION_CAP: usize = 2_000_000;

impl SingleKernel {
    /// Precomputes everything needed for rows `0..=max_row`.
    pub fn new(model: &ModelSpec, max_row: usize, ctx: &PrecisionContext) -> Result<Self> {
        let bits = ctx.bits();
        let c = model.servers();
        let mu = model.service_rate().with_bits(bits);
        let law = model.interarrival();

        let astar: Vec<Real> = (0..=c).map(|m| law.lst(&(&mu * Real::from_usize(m, bits)))).collect();

        let mut binom: Vec<Vec<Real>> = Vec::with_capacity(c + 1);
        for n in 0..=c {
            let mut row = Vec::with_capacity(n + 1);
            for k in 0..=n {
                if k == 0 || k == n {
                    row.push(Real::one(bits));
                } else {
                    let prev: &Vec<Real> = &binom[n - 1];
                    row.push(&prev[k - 1] + &prev[k]);
                }
            }
            binom.push(row);
        }

        // q(r) until the tail beyond max_row+2 is negligible at working precision
        let cmu = &mu * Real::from_usize(c, bits);
        let limit = law.series_ratio_limit(&cmu) * cmu.to_f64();
        if !(limit < 1.0) {
            return Err(Error::NonConvergence {
                iterations: 0,
                reason: format!("departure-count law does not decay (ratio limit {limit})"),
            });
        }
        let base_len = max_row + 3;
        let mut q: Vec<Real> = Vec::with_capacity(base_len + 64);
        let mut power = Real::one(bits);
        let mut series = law.scaled_derivatives(&cmu);
        let eps_rel = Real::from_u64(2, bits).powi(bits + 8).recip();
        loop {
            let w = series.next().expect("series is infinite");
            q.push(&w * &power);
            power = &power * &cmu;
            let r = q.len() - 1;
            if r < base_len {
                continue;
            }
            let ratio = if q[r - 1].is_zero() { 0.0 } else { (&q[r] / &q[r - 1]).to_f64() };
            if ratio >= 1.0 {
                if r > base_len + TAIL_EXTENSION_CAP {
                    return Err(Error::NonConvergence {
                        iterations: r,
                        reason: String::from("departure-count probabilities keep increasing"),
                    });
                }
                continue;
            }
            let x = ratio.max(limit);
            let bound = &q[r] * Real::from_f64(x / (1.0 - x), bits);
            let reference = &q[base_len - 1];
            if bound <= &eps_rel * reference || q[r].is_zero() {
                break;
            }
            if r > base_len + TAIL_EXTENSION_CAP {
                return Err(Error::NonConvergence {
                    iterations: r,
                    reason: String::from("departure-count tail did not become negligible"),
                });
            }
        }
        let len = q.len();
        let mut qtail = vec![Real::zero(bits); len + 1];
        for m in (0..len).rev() {
            qtail[m] = &qtail[m + 1] + &q[m];
        }
        qtail.truncate(base_len);

        let mut s = Vec::new();
        let mut coef = Vec::new();
        if c >= 2 && max_row >= c {
            let m_max = max_row - c + 2;
            for k in 1..c {
                let f = Real::from_usize(k, bits) / Real::from_usize(c, bits);
                let mut acc = Real::zero(bits);
                let mut col = vec![Real::zero(bits); m_max + 1];
                for m in (2..len).rev() {
                    acc = &f * (&q[m] + &acc);
                    if m <= m_max {
                        col[m] = acc.clone();
                    }
                }
                s.push(col);
            }
            coef.push(Vec::new());
            let cf = factorial(c, bits);
            for j in 1..c {
                let row: Vec<Coefficient> = (1..=c - j)
                    .map(|k| Coefficient {
                        negative: (c - j - k) % 2 == 1,
                        magnitude: &cf / (factorial(j, bits) * factorial(k, bits) * factorial(c - j - k, bits)),
                    })
                    .collect();
                coef.push(row);
            }
        }
        q.truncate(max_row + 2);

        Ok(SingleKernel { c, max_row, bits, astar, binom, q, qtail, s, coef })
    }

    pub fn servers(&self) -> usize {
        self.c
    }

    /// Largest row index available.
    pub fn max_row(&self) -> usize {
        self.max_row
    }

    fn zero(&self) -> Real {
        Real::zero(self.bits)
    }

    fn check_row(&self, i: usize) {
        assert!(i <= self.max_row, "row {i} beyond precomputed range {}", self.max_row);
    }

    /// `q(n)`: probability of exactly `n` departures in one interarrival
    /// time with all servers busy.
    pub fn departures_all_busy(&self, n: usize) -> &Real {
        &self.q[n]
    }

    /// `Q(m)`: probability of at least `m` such departures.
    pub fn departures_all_busy_tail(&self, m: usize) -> Real {
        if m < self.qtail.len() {
            self.qtail[m].clone()
        } else {
            self.zero()
        }
    }

    fn region1(&self, i: usize, j: usize) -> Real {
        // C(i+1, i−j+1) Σ_r (−1)^r C(i−j+1, r) A*((j+r)μ)
        let d = i + 1 - j;
        let mut pos = self.zero();
        let mut neg = self.zero();
        for r in 0..=d {
            let t = &self.binom[d][r] * &self.astar[j + r];
            if r % 2 == 0 {
                pos += t;
            } else {
                neg += t;
            }
        }
        &self.binom[i + 1][d] * (pos - neg)
    }

    fn region3(&self, i: usize, j: usize) -> Real {
        let m = i - self.c + 2;
        let mut pos = self.zero();
        let mut neg = self.zero();
        for (k0, cf) in self.coef[j].iter().enumerate() {
            let t = &cf.magnitude * &self.s[k0][m];
            if cf.negative {
                neg += t;
            } else {
                pos += t;
            }
        }
        pos - neg
    }

    /// `p(i, j)` for `1 ≤ j ≤ c−1` and `i ≥ c`, all at once (index 0 holds
    /// `p(i, 0)` from the complement).
    fn lower_block(&self, i: usize) -> Vec<Real> {
        let c = self.c;
        let mut out = vec![self.zero(); c];
        let mut total = self.zero();
        for (j, slot) in out.iter_mut().enumerate().skip(1) {
            let v = self.region3(i, j);
            total += &v;
            *slot = v;
        }
        out[0] = self.departures_all_busy_tail(i - c + 2) - total;
        out
    }

    /// `p(i, j)` on the unbounded chain.
    pub fn prob(&self, i: usize, j: usize) -> Real {
        self.check_row(i);
        let c = self.c;
        if j > i + 1 {
            self.zero()
        } else if i < c {
            self.region1(i, j)
        } else if j >= c {
            self.q[i + 1 - j].clone()
        } else if j >= 1 {
            self.region3(i, j)
        } else {
            self.lower_block(i).swap_remove(0)
        }
    }

    /// `p(i, 0..width)` on the unbounded chain.
    pub fn row(&self, i: usize, width: usize) -> Vec<Real> {
        self.check_row(i);
        let c = self.c;
        let mut out = vec![self.zero(); width];
        if i < c {
            for (j, slot) in out.iter_mut().enumerate().take((i + 2).min(width)) {
                *slot = self.region1(i, j);
            }
        } else {
            let low = self.lower_block(i);
            for (j, v) in low.into_iter().enumerate().take(width) {
                out[j] = v;
            }
            for (j, slot) in out.iter_mut().enumerate().take((i + 2).min(width)).skip(c) {
                *slot = self.q[i + 1 - j].clone();
            }
        }
        out
    }

    /// `p(j, j+1)`: no departure during the interarrival time.
    pub fn up(&self, j: usize) -> &Real {
        if j < self.c {
            &self.astar[j + 1]
        } else {
            &self.q[0]
        }
    }

    /// Cut sums `a(k, j)` for `j = 0..=upto` on the unbounded chain.
    pub fn cut_row(&self, k: usize, upto: usize) -> Vec<Real> {
        self.check_row(k);
        let c = self.c;
        let one = Real::one(self.bits);
        let mut out = Vec::with_capacity(upto + 1);
        if k < c {
            let mut acc = self.zero();
            for j in 0..=upto {
                if j <= k + 1 {
                    acc += self.region1(k, j);
                    out.push(acc.clone());
                } else {
                    out.push(one.clone());
                }
            }
            return out;
        }
        // a(k, j) = Q(k−c+2) − Σ_{n=j+1}^{c−1} p(k, n) for j < c−1
        let low = self.lower_block(k);
        let head = c.min(upto + 1);
        let mut above = vec![self.zero(); head];
        let mut acc = self.zero();
        for j in (0..head).rev() {
            above[j] = acc.clone();
            if j >= 1 {
                acc += &low[j];
            }
        }
        let qc = self.departures_all_busy_tail(k - c + 2);
        for a in above {
            out.push(&qc - a);
        }
        for j in c..=upto {
            if j >= k + 1 {
                out.push(one.clone());
            } else {
                out.push(self.departures_all_busy_tail(k + 1 - j));
            }
        }
        out
    }
}

/// `p(i, j)` of the single-arrival model on the unbounded state space.
pub fn transition_prob(model: &ModelSpec, i: usize, j: usize, ctx: &PrecisionContext) -> Result<Real> {
    if model.batch().is_some() {
        return Err(Error::Precondition(String::from("transition_prob applies to single arrivals")));
    }
    if j > i + 1 {
        return Ok(ctx.zero());
    }
    Ok(SingleKernel::new(model, i, ctx)?.prob(i, j))
}

/// Rows `0..=n` of the single-arrival kernel restricted to states `0..=n`.
/// A finite buffer repeats row `n−1` as row `n`; for a truncated infinite
/// buffer the move `n → n+1` is folded into `n → n`.
pub fn build_matrix(model: &ModelSpec, n: usize, ctx: &PrecisionContext) -> Result<TransitionMatrix> {
    if model.batch().is_some() {
        return Err(Error::Precondition(String::from(
            "build_matrix builds the single-arrival kernel; use batch_transform",
        )));
    }
    let kernel = SingleKernel::new(model, n, ctx)?;
    let m = build_from_kernel(&kernel, model.buffer(), n);
    m.check_stochastic(&ctx.tolerance(10), ctx)?;
    Ok(m)
}

pub(crate) fn build_from_kernel(kernel: &SingleKernel, buffer: Buffer, n: usize) -> TransitionMatrix {
    let width = n + 1;
    let mut rows: Vec<Vec<Real>> = Vec::with_capacity(width);
    for i in 0..=n {
        match buffer {
            Buffer::Finite(_) if i == n && n >= 1 => {
                let dup = rows[n - 1].clone();
                rows.push(dup);
            }
            _ => {
                let mut r = kernel.row(i, width);
                if i == n {
                    let up = kernel.prob(i, i + 1);
                    r[n] += up;
                }
                rows.push(r);
            }
        }
    }
    TransitionMatrix::from_rows(rows)
}

/// Batch-arrival kernel `p*` on states `0..=n` built from the single-arrival
/// rows. A finite buffer needs `n = N` and a rejection policy; an infinite
/// buffer is truncated at `n` with overflow folded into state `n`, and the
/// batch tail is lumped onto its largest explicit size.
pub fn batch_transform(
    kernel: &SingleKernel,
    batch: &BatchSpec,
    buffer: Buffer,
    n: usize,
    rejection: Option<Rejection>,
    ctx: &PrecisionContext,
) -> Result<TransitionMatrix> {
    let width = n + 1;
    let zero = ctx.zero();
    let axpy = |acc: &mut [Real], w: &Real, row: &[Real]| {
        if w.is_zero() {
            return;
        }
        for (a, v) in acc.iter_mut().zip(row) {
            if !v.is_zero() {
                *a += w * v;
            }
        }
    };
    let rows = match (buffer, rejection) {
        (Buffer::Infinite, Some(_)) => return Err(Error::PolicyError),
        (Buffer::Finite(_), None) => {
            return Err(Error::Precondition(String::from(
                "finite-buffer batch kernel needs a rejection policy",
            )))
        }
        (Buffer::Finite(cap), Some(policy)) => {
            if cap != n || n == 0 {
                return Err(Error::Precondition(format!(
                    "finite batch kernel must be built at its capacity (N={cap}, n={n})"
                )));
            }
            let base: Vec<Vec<Real>> = (0..n).map(|i| kernel.row(i, width)).collect();
            (0..=n)
                .map(|i| {
                    let mut acc = vec![zero.clone(); width];
                    match policy {
                        Rejection::Partial => {
                            for k in 1..=n.saturating_sub(i + 1) {
                                axpy(&mut acc, &batch.prob(k), &base[i + k - 1]);
                            }
                            let over = batch.batch_tail(n - i);
                            axpy(&mut acc, &over, &base[n - 1]);
                        }
                        Rejection::Full => {
                            for k in 1..=(n - i) {
                                axpy(&mut acc, &batch.prob(k), &base[i + k - 1]);
                            }
                            let rejected = batch.batch_tail(n - i + 1);
                            if i == 0 {
                                acc[0] += rejected;
                            } else {
                                axpy(&mut acc, &rejected, &base[i - 1]);
                            }
                        }
                    }
                    acc
                })
                .collect::<Vec<_>>()
        }
        (Buffer::Infinite, None) => {
            let lumped = batch.lumped();
            let kb = lumped.support();
            let top = n + kb - 1;
            if kernel.max_row() < top {
                return Err(Error::Precondition(format!(
                    "kernel rows reach {}, batch transform needs {top}",
                    kernel.max_row()
                )));
            }
            let base: Vec<Vec<Real>> = (0..=top)
                .map(|i| {
                    let mut r = kernel.row(i, width);
                    let mut over = zero.clone();
                    for j in width..=i + 1 {
                        over += kernel.prob(i, j);
                    }
                    r[n] += over;
                    r
                })
                .collect();
            (0..=n)
                .map(|i| {
                    let mut acc = vec![zero.clone(); width];
                    for k in 1..=kb {
                        axpy(&mut acc, &lumped.prob(k), &base[i + k - 1]);
                    }
                    acc
                })
                .collect::<Vec<_>>()
        }
    };
    let m = TransitionMatrix::from_rows(rows);
    m.check_stochastic(&ctx.tolerance(10), ctx)?;
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::InterarrivalSpec;

    fn ctx() -> PrecisionContext {
        PrecisionContext::small_scale()
    }

    fn mm(c: usize, lam: f64, mu: f64, buffer: Buffer, ctx: &PrecisionContext) -> ModelSpec {
        let law = InterarrivalSpec::exponential(ctx.real(lam)).unwrap();
        ModelSpec::new(c, ctx.real(mu), law, buffer).unwrap()
    }

    fn det(c: usize, a: f64, mu: f64, buffer: Buffer, ctx: &PrecisionContext) -> ModelSpec {
        let law = InterarrivalSpec::deterministic(ctx.real(a)).unwrap();
        ModelSpec::new(c, ctx.real(mu), law, buffer).unwrap()
    }

    fn close(a: &Real, b: &Real, tol: f64) -> bool {
        (a - b).abs().to_f64() <= tol
    }

    #[test]
    fn row_zero_upward_entry() {
        let ctx = ctx();
        let m = mm(3, 5.0, 2.0, Buffer::Finite(6), &ctx);
        let p = transition_prob(&m, 0, 1, &ctx).unwrap();
        assert!(close(&p, &(ctx.int(5) / ctx.int(7)), 1e-45));
        assert!(transition_prob(&m, 2, 4, &ctx).unwrap().is_zero());
    }

    #[test]
    fn small_scale_symbolic_entries() {
        // c = 3, deterministic a = 0.2, μ = 2
        let ctx = ctx();
        let m = det(3, 0.2, 2.0, Buffer::Finite(6), &ctx);
        let law = m.interarrival();
        let mu = ctx.real(2.0);
        let a = |s: usize| law.lst(&(&mu * ctx.int(s as i64)));
        let a1 = law.lst_derivative(1, &(&mu * ctx.int(3)));
        let a3 = law.lst_derivative(3, &(&mu * ctx.int(3)));
        let k = SingleKernel::new(&m, 6, &ctx).unwrap();

        let p32 = ctx.int(9) * a(2) - ctx.int(9) * a(3) - ctx.int(9) * &mu * &a1;
        assert!(close(&k.prob(3, 2), &p32, 1e-40));
        let aa = 0.2f64 * 2.0;
        let closed = 9.0 * (-2.0 * aa).exp() - 9.0 * (-3.0 * aa).exp() - 9.0 * aa * (-3.0 * aa).exp();
        assert!((k.prob(3, 2).to_f64() - closed).abs() < 1e-14);

        let p31 = ctx.real(4.5) * a(1) - ctx.int(18) * a(2) + ctx.real(13.5) * a(3) + ctx.int(9) * &mu * &a1;
        assert!(close(&k.prob(3, 1), &p31, 1e-40));

        let p53 = ctx.real(4.5) * mu.powi(3) * a3;
        assert!(close(&k.prob(5, 3), &p53, 1e-40));
        assert!(close(&k.prob(0, 1), &(-(ctx.real(0.4))).exp(), 1e-45));
    }

    #[test]
    fn one_server_one_slot() {
        let ctx = ctx();
        let m = mm(1, 1.0, 1.5, Buffer::Finite(1), &ctx);
        let p = build_matrix(&m, 1, &ctx).unwrap();
        let up = m.interarrival().lst(m.service_rate());
        for i in 0..2 {
            assert!(close(p.get(i, 1), &up, 1e-45));
            assert!(close(p.get(i, 0), &(ctx.one() - &up), 1e-45));
        }
    }

    #[test]
    fn rows_are_stochastic_and_upper_hessenberg() {
        let ctx = ctx();
        for c in [1, 2, 3, 5] {
            let m = det(c, 0.2, 2.0, Buffer::Finite(12), &ctx);
            let p = build_matrix(&m, 12, &ctx).unwrap();
            let (_, dev) = p.max_row_deviation(&ctx);
            assert!(dev < ctx.tolerance(10));
            for i in 0..12 {
                for j in i + 2..13 {
                    assert!(p.get(i, j).is_zero());
                }
                for j in 0..13 {
                    assert!(!p.get(i, j).is_negative() || p.get(i, j).abs() < ctx.tolerance(10));
                }
            }
        }
    }

    #[test]
    fn cut_rows_match_matrix() {
        let ctx = ctx();
        let m = det(4, 0.3, 1.0, Buffer::Finite(15), &ctx);
        let k = SingleKernel::new(&m, 15, &ctx).unwrap();
        for i in 0..15 {
            let row = k.row(i, 17);
            let cut = k.cut_row(i, 16);
            let mut acc = ctx.zero();
            for j in 0..17 {
                acc += &row[j];
                assert!(close(&cut[j], &acc, 1e-40), "a({i},{j})");
            }
        }
    }

    #[test]
    fn unit_batch_leaves_kernel_unchanged() {
        let ctx = ctx();
        let m = det(3, 0.2, 2.0, Buffer::Finite(6), &ctx);
        let p = build_matrix(&m, 6, &ctx).unwrap();
        let k = SingleKernel::new(&m, 6, &ctx).unwrap();
        let unit = BatchSpec::unit(ctx.bits());
        for policy in [Rejection::Partial, Rejection::Full] {
            let q = batch_transform(&k, &unit, Buffer::Finite(6), 6, Some(policy), &ctx).unwrap();
            for i in 0..7 {
                for j in 0..7 {
                    assert!(close(p.get(i, j), q.get(i, j), 1e-45));
                }
            }
        }
    }

    #[test]
    fn policy_requires_finite_buffer() {
        let ctx = ctx();
        let m = mm(2, 1.0, 2.0, Buffer::Infinite, &ctx);
        let k = SingleKernel::new(&m, 10, &ctx).unwrap();
        let unit = BatchSpec::unit(ctx.bits());
        let r = batch_transform(&k, &unit, Buffer::Infinite, 5, Some(Rejection::Full), &ctx);
        assert_eq!(r.unwrap_err(), Error::PolicyError);
        let law = InterarrivalSpec::exponential(ctx.real(1.0)).unwrap();
        let base = ModelSpec::new(2, ctx.real(2.0), law, Buffer::Infinite).unwrap();
        assert_eq!(base.with_batch(unit, Some(Rejection::Partial)).unwrap_err(), Error::PolicyError);
    }

    #[test]
    fn unstable_infinite_model_is_rejected() {
        let ctx = ctx();
        let law = InterarrivalSpec::exponential(ctx.real(7.0)).unwrap();
        let r = ModelSpec::new(3, ctx.real(2.0), law, Buffer::Infinite);
        assert!(matches!(r, Err(Error::InvalidModel(_))));
    }

    #[test]
    fn coefficient_sign_and_size() {
        let bits = 256;
        // c = 3, j = 1: k = 1 → 3!/(1!1!1!) (−1)^1 (3)^{i−2}
        let v = region3_coefficient(3, 1, 1, 3, bits);
        assert!((v.to_f64() + 18.0).abs() < 1e-30);
        let v = region3_coefficient(3, 1, 2, 3, bits);
        assert!((v.to_f64() - 4.5).abs() < 1e-30);
    }
}
