//! Interarrival laws, their Laplace–Stieltjes transforms, and batch-size laws.
//!
//! For an interarrival distribution `A` the transform is `A*(s) = ∫e^{-st}dA(t)`
//! and `A_n*(s) = ∫tⁿe^{-st}dA(t)` is its signed n-th derivative. The kernel
//! mostly consumes the scaled values `w_r(s) = A_r*(s)/r!`, which stay bounded
//! for large `r` while the raw derivatives grow factorially; see
//! [`InterarrivalSpec::scaled_derivatives`].

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::real::Real;

/// Parameters of a supported interarrival law.
#[derive(Debug, Clone)]
pub enum InterarrivalLaw {
    /// Constant interarrival time `period`.
    Deterministic { period: Real },
    Exponential { rate: Real },
    /// `phases` exponential stages, each with rate `phases · rate`, so the
    /// mean stays `1/rate`.
    Erlang { phases: usize, rate: Real },
    /// Mixture of exponentials.
    HyperExponential { weights: Vec<Real>, rates: Vec<Real> },
    PhaseType(PhaseType),
}

/// Phase-type representation `(α, T)` with exit vector `T⁰ = −T·1`.
#[derive(Debug, Clone)]
pub struct PhaseType {
    alpha: Vec<Real>,
    generator: Vec<Real>,
    exit: Vec<Real>,
}

/// An interarrival law together with its mean `1/λ`.
#[derive(Debug, Clone)]
pub struct InterarrivalSpec {
    law: InterarrivalLaw,
    mean: Real,
}

fn invalid(msg: String) -> Error {
    Error::InvalidModel(msg)
}

/// Tolerance for "sums to one" checks on user input: 2^-(bits/2).
fn input_tolerance(bits: usize) -> Real {
    Real::from_u64(2, bits).powi(bits / 2).recip()
}

fn require_positive(name: &str, v: &Real) -> Result<()> {
    if v.is_positive() && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("{name} must be positive, got {}", v.to_sig_string(12))))
    }
}

impl PhaseType {
    /// Builds a representation from the initial vector and the row-major
    /// subgenerator `T` of an `m`-phase absorbing chain.
    pub fn new(alpha: Vec<Real>, generator: Vec<Real>) -> Result<Self> {
        let m = alpha.len();
        if m == 0 {
            return Err(invalid(String::from("phase-type law needs at least one phase")));
        }
        if generator.len() != m * m {
            return Err(invalid(format!(
                "phase-type generator must be {m}x{m}, got {} entries",
                generator.len()
            )));
        }
        let bits = alpha[0].bits();
        let tol = input_tolerance(bits);
        let mut total = Real::zero(bits);
        for (i, a) in alpha.iter().enumerate() {
            if a.is_negative() {
                return Err(invalid(format!("alpha[{i}] is negative")));
            }
            total += a;
        }
        if (&total - Real::one(bits)).abs() > tol {
            return Err(invalid(format!(
                "phase-type initial vector sums to {}, not 1",
                total.to_sig_string(12)
            )));
        }
        let mut exit = Vec::with_capacity(m);
        for i in 0..m {
            let row = &generator[i * m..(i + 1) * m];
            if !row[i].is_negative() {
                return Err(invalid(format!("T[{i}][{i}] must be negative")));
            }
            let mut s = Real::zero(bits);
            for (j, v) in row.iter().enumerate() {
                if j != i && v.is_negative() {
                    return Err(invalid(format!("T[{i}][{j}] must be nonnegative")));
                }
                s += v;
            }
            let out = -s;
            if out.is_negative() {
                if out.abs() > tol {
                    return Err(invalid(format!("row {i} of T has positive sum")));
                }
                exit.push(Real::zero(bits));
            } else {
                exit.push(out);
            }
        }
        let ph = PhaseType { alpha, generator, exit };
        // absorption must be certain: (−T) nonsingular
        let neg_t: Vec<Real> = ph.generator.iter().map(|v| -v).collect();
        let lu = Lu::factor(m, neg_t)
            .ok_or_else(|| invalid(String::from("phase-type generator is singular")))?;
        let x = lu.solve(&vec![Real::one(bits); m]);
        if x.iter().any(|v| !v.is_positive() && !v.is_zero()) {
            return Err(invalid(String::from("phase-type law has no finite mean")));
        }
        Ok(ph)
    }

    pub fn phases(&self) -> usize {
        self.alpha.len()
    }

    pub fn alpha(&self) -> &[Real] {
        &self.alpha
    }

    /// Row-major subgenerator.
    pub fn generator(&self) -> &[Real] {
        &self.generator
    }

    pub fn exit(&self) -> &[Real] {
        &self.exit
    }

    /// `α(−T)^{-1}1`.
    pub fn mean(&self) -> Real {
        let m = self.phases();
        let bits = self.alpha[0].bits();
        let neg_t: Vec<Real> = self.generator.iter().map(|v| -v).collect();
        let lu = Lu::factor(m, neg_t).expect("validated at construction");
        let x = lu.solve(&vec![Real::one(bits); m]);
        dot(&self.alpha, &x)
    }

    /// `sI − T`.
    fn shifted(&self, s: &Real) -> Vec<Real> {
        let m = self.phases();
        let mut a: Vec<Real> = self.generator.iter().map(|v| -v).collect();
        for i in 0..m {
            a[i * m + i] += s;
        }
        a
    }
}

fn dot(a: &[Real], b: &[Real]) -> Real {
    let bits = a.first().map(Real::bits).unwrap_or(64);
    a.iter().zip(b).fold(Real::zero(bits), |acc, (x, y)| acc + x * y)
}

/// Dense LU factorization with partial pivoting.
#[derive(Debug, Clone)]
pub(crate) struct Lu {
    n: usize,
    lu: Vec<Real>,
    perm: Vec<usize>,
}

impl Lu {
    pub(crate) fn factor(n: usize, mut a: Vec<Real>) -> Option<Self> {
        let mut perm: Vec<usize> = (0..n).collect();
        for col in 0..n {
            let mut best = col;
            for r in col + 1..n {
                if a[r * n + col].abs() > a[best * n + col].abs() {
                    best = r;
                }
            }
            if a[best * n + col].is_zero() {
                return None;
            }
            if best != col {
                for k in 0..n {
                    a.swap(col * n + k, best * n + k);
                }
                perm.swap(col, best);
            }
            let pivot = a[col * n + col].clone();
            for r in col + 1..n {
                if a[r * n + col].is_zero() {
                    continue;
                }
                let f = &a[r * n + col] / &pivot;
                for k in col + 1..n {
                    let t = &f * &a[col * n + k];
                    a[r * n + k] -= t;
                }
                a[r * n + col] = f;
            }
        }
        Some(Lu { n, lu: a, perm })
    }

    pub(crate) fn solve(&self, b: &[Real]) -> Vec<Real> {
        let n = self.n;
        let mut y: Vec<Real> = self.perm.iter().map(|&p| b[p].clone()).collect();
        for r in 0..n {
            for k in 0..r {
                let t = &self.lu[r * n + k] * &y[k];
                y[r] -= t;
            }
        }
        for r in (0..n).rev() {
            for k in r + 1..n {
                let t = &self.lu[r * n + k] * &y[k];
                y[r] -= t;
            }
            y[r] = &y[r] / &self.lu[r * n + r];
        }
        y
    }
}

impl InterarrivalSpec {
    fn build(law: InterarrivalLaw) -> Result<Self> {
        let mean = match &law {
            InterarrivalLaw::Deterministic { period } => {
                require_positive("deterministic period", period)?;
                period.clone()
            }
            InterarrivalLaw::Exponential { rate } => {
                require_positive("exponential rate", rate)?;
                rate.recip()
            }
            InterarrivalLaw::Erlang { phases, rate } => {
                if *phases == 0 {
                    return Err(invalid(String::from("Erlang law needs at least one phase")));
                }
                require_positive("Erlang rate", rate)?;
                rate.recip()
            }
            InterarrivalLaw::HyperExponential { weights, rates } => {
                if weights.is_empty() || weights.len() != rates.len() {
                    return Err(invalid(format!(
                        "hyperexponential law needs matching weights and rates ({} vs {})",
                        weights.len(),
                        rates.len()
                    )));
                }
                let bits = weights[0].bits();
                let mut total = Real::zero(bits);
                let mut mean = Real::zero(bits);
                for (i, (w, r)) in weights.iter().zip(rates).enumerate() {
                    if w.is_negative() {
                        return Err(invalid(format!("hyperexponential weight {i} is negative")));
                    }
                    require_positive("hyperexponential rate", r)?;
                    total += w;
                    mean += w / r;
                }
                if (&total - Real::one(bits)).abs() > input_tolerance(bits) {
                    return Err(invalid(format!(
                        "hyperexponential weights sum to {}, not 1",
                        total.to_sig_string(12)
                    )));
                }
                mean
            }
            InterarrivalLaw::PhaseType(ph) => ph.mean(),
        };
        Ok(InterarrivalSpec { law, mean })
    }

    /// Constant interarrival time `a` (rate `1/a`).
    pub fn deterministic(period: Real) -> Result<Self> {
        Self::build(InterarrivalLaw::Deterministic { period })
    }

    pub fn exponential(rate: Real) -> Result<Self> {
        Self::build(InterarrivalLaw::Exponential { rate })
    }

    /// Erlang with `phases` stages and overall rate `rate` (stage rate `phases·rate`).
    pub fn erlang(phases: usize, rate: Real) -> Result<Self> {
        Self::build(InterarrivalLaw::Erlang { phases, rate })
    }

    pub fn hyperexponential(weights: Vec<Real>, rates: Vec<Real>) -> Result<Self> {
        Self::build(InterarrivalLaw::HyperExponential { weights, rates })
    }

    pub fn phase_type(ph: PhaseType) -> Result<Self> {
        Self::build(InterarrivalLaw::PhaseType(ph))
    }

    pub fn law(&self) -> &InterarrivalLaw {
        &self.law
    }

    pub fn mean(&self) -> &Real {
        &self.mean
    }

    /// Arrival rate λ = 1/mean.
    pub fn rate(&self) -> Real {
        self.mean.recip()
    }

    pub fn name(&self) -> &'static str {
        match self.law {
            InterarrivalLaw::Deterministic { .. } => "deterministic",
            InterarrivalLaw::Exponential { .. } => "exponential",
            InterarrivalLaw::Erlang { .. } => "erlang",
            InterarrivalLaw::HyperExponential { .. } => "hyperexponential",
            InterarrivalLaw::PhaseType(_) => "phase_type",
        }
    }

    pub fn deterministic_period(&self) -> Option<&Real> {
        match &self.law {
            InterarrivalLaw::Deterministic { period } => Some(period),
            _ => None,
        }
    }

    /// `A*(s)`.
    pub fn lst(&self, s: &Real) -> Real {
        self.scaled_derivatives(s).next().expect("series is infinite")
    }

    /// `A_n*(s) = ∫tⁿe^{-st}dA(t)`.
    pub fn lst_derivative(&self, n: usize, s: &Real) -> Real {
        let w = self.scaled_derivatives(s).nth(n).expect("series is infinite");
        let mut fact = Real::one(s.bits());
        for k in 2..=n {
            fact *= Real::from_usize(k, s.bits());
        }
        w * fact
    }

    /// The sequence `w_r(s) = A_r*(s)/r!` for r = 0, 1, 2, ...
    pub fn scaled_derivatives(&self, s: &Real) -> DerivativeSeries {
        let bits = s.bits().max(self.mean.bits());
        let one = Real::one(bits);
        let state = match &self.law {
            InterarrivalLaw::Deterministic { period } => SeriesState::Deterministic {
                term: (-(s * period)).exp(),
                a: period.clone(),
                r: 0,
            },
            InterarrivalLaw::Exponential { rate } => {
                let f = (s + rate).recip();
                SeriesState::Mixture { terms: vec![rate * &f], factors: vec![f] }
            }
            InterarrivalLaw::HyperExponential { weights, rates } => {
                let factors: Vec<Real> = rates.iter().map(|r| (s + r).recip()).collect();
                let terms = weights
                    .iter()
                    .zip(rates)
                    .zip(&factors)
                    .map(|((w, r), f)| w * r * f)
                    .collect();
                SeriesState::Mixture { terms, factors }
            }
            InterarrivalLaw::Erlang { phases, rate } => {
                let theta = rate * Real::from_usize(*phases, bits);
                let inv = (s + &theta).recip();
                SeriesState::Erlang {
                    term: (&theta * &inv).powi(*phases),
                    k: *phases,
                    inv,
                    r: 0,
                }
            }
            InterarrivalLaw::PhaseType(ph) => {
                let lu = Lu::factor(ph.phases(), ph.shifted(s));
                match lu {
                    Some(lu) => {
                        let v = lu.solve(&ph.exit);
                        SeriesState::PhaseType { lu, v, alpha: ph.alpha.clone() }
                    }
                    // only possible at s = 0 with a defective chain, excluded at construction
                    None => SeriesState::Mixture { terms: vec![one], factors: vec![Real::zero(bits)] },
                }
            }
        };
        DerivativeSeries { state }
    }

    /// Limit of `w_{r+1}(s)/w_r(s)` as r grows; bounds the geometric decay
    /// of the series tail.
    pub fn series_ratio_limit(&self, s: &Real) -> f64 {
        match &self.law {
            InterarrivalLaw::Deterministic { .. } => 0.0,
            InterarrivalLaw::Exponential { rate } => (s + rate).recip().to_f64(),
            InterarrivalLaw::Erlang { phases, rate } => {
                (s + rate * Real::from_usize(*phases, s.bits())).recip().to_f64()
            }
            InterarrivalLaw::HyperExponential { weights, rates } => weights
                .iter()
                .zip(rates)
                .filter(|(w, _)| w.is_positive())
                .map(|(_, r)| (s + r).recip().to_f64())
                .fold(0.0, f64::max),
            InterarrivalLaw::PhaseType(ph) => ph_resolvent_radius(ph, s.to_f64()),
        }
    }

    /// Probability density at `t`, or `None` for the deterministic law.
    pub fn density_f64(&self, t: f64) -> Option<f64> {
        if t < 0.0 {
            return Some(0.0);
        }
        match &self.law {
            InterarrivalLaw::Deterministic { .. } => None,
            InterarrivalLaw::Exponential { rate } => {
                let l = rate.to_f64();
                Some(l * libm::exp(-l * t))
            }
            InterarrivalLaw::Erlang { phases, rate } => {
                let k = *phases;
                let theta = k as f64 * rate.to_f64();
                if t == 0.0 {
                    return Some(if k == 1 { theta } else { 0.0 });
                }
                let lnf: f64 = (1..k).map(|m| libm::log(m as f64)).sum();
                Some(libm::exp(k as f64 * libm::log(theta) + (k - 1) as f64 * libm::log(t) - theta * t - lnf))
            }
            InterarrivalLaw::HyperExponential { weights, rates } => Some(
                weights
                    .iter()
                    .zip(rates)
                    .map(|(w, r)| {
                        let l = r.to_f64();
                        w.to_f64() * l * libm::exp(-l * t)
                    })
                    .sum(),
            ),
            InterarrivalLaw::PhaseType(ph) => Some(ph_density(ph, t)),
        }
    }
}

/// Spectral radius of `(sI − T)^{-1}` by power iteration in `f64`.
fn ph_resolvent_radius(ph: &PhaseType, s: f64) -> f64 {
    let m = ph.phases();
    let bits = 128;
    let sr = Real::from_f64(s, bits);
    let a: Vec<Real> = ph.shifted(&sr).iter().map(|v| v.with_bits(bits)).collect();
    let Some(lu) = Lu::factor(m, a) else {
        return 1.0;
    };
    let mut v = vec![Real::one(bits); m];
    let mut est = 0.0;
    for _ in 0..400 {
        let w = lu.solve(&v);
        let norm = w.iter().map(|x| x.abs().to_f64()).fold(0.0, f64::max);
        if norm == 0.0 {
            return 0.0;
        }
        est = norm / v.iter().map(|x| x.abs().to_f64()).fold(0.0, f64::max);
        let inv = Real::from_f64(1.0 / norm, bits);
        v = w.iter().map(|x| x * &inv).collect();
    }
    est
}

/// `α e^{Tt} T⁰` by uniformization.
fn ph_density(ph: &PhaseType, t: f64) -> f64 {
    let m = ph.phases();
    let g: Vec<f64> = ph.generator.iter().map(Real::to_f64).collect();
    let alpha: Vec<f64> = ph.alpha.iter().map(Real::to_f64).collect();
    let exit: Vec<f64> = ph.exit.iter().map(Real::to_f64).collect();
    let q = (0..m).map(|i| -g[i * m + i]).fold(0.0, f64::max);
    if q == 0.0 {
        return 0.0;
    }
    let qt = q * t;
    let mut v = exit.clone();
    let mut acc = 0.0;
    let mut mass = 0.0;
    let n_max = (qt + 12.0 * libm::sqrt(qt) + 60.0) as usize;
    let mut log_fact = 0.0;
    for n in 0..=n_max {
        if n > 0 {
            log_fact += libm::log(n as f64);
        }
        let lw = if qt > 0.0 { -qt + n as f64 * libm::log(qt) - log_fact } else if n == 0 { 0.0 } else { f64::NEG_INFINITY };
        let w = libm::exp(lw);
        mass += w;
        acc += w * alpha.iter().zip(&v).map(|(a, x)| a * x).sum::<f64>();
        // v <- (I + T/q) v
        let next: Vec<f64> = (0..m)
            .map(|i| v[i] + (0..m).map(|j| g[i * m + j] * v[j]).sum::<f64>() / q)
            .collect();
        v = next;
        if mass > 1.0 - 1e-17 && n as f64 > qt {
            break;
        }
    }
    acc
}

/// Iterator over `w_r(s) = A_r*(s)/r!`.
#[derive(Debug, Clone)]
pub struct DerivativeSeries {
    state: SeriesState,
}

#[derive(Debug, Clone)]
enum SeriesState {
    Deterministic { term: Real, a: Real, r: usize },
    Mixture { terms: Vec<Real>, factors: Vec<Real> },
    Erlang { term: Real, k: usize, inv: Real, r: usize },
    PhaseType { lu: Lu, v: Vec<Real>, alpha: Vec<Real> },
}

impl Iterator for DerivativeSeries {
    type Item = Real;

    fn next(&mut self) -> Option<Real> {
        match &mut self.state {
            SeriesState::Deterministic { term, a, r } => {
                let out = term.clone();
                *r += 1;
                *term = &*term * &*a / Real::from_usize(*r, a.bits());
                Some(out)
            }
            SeriesState::Mixture { terms, factors } => {
                let mut out = Real::zero(terms[0].bits());
                for (t, f) in terms.iter_mut().zip(factors.iter()) {
                    out += &*t;
                    *t = &*t * f;
                }
                Some(out)
            }
            SeriesState::Erlang { term, k, inv, r } => {
                let out = term.clone();
                *r += 1;
                let bits = inv.bits();
                *term = &*term * &*inv * Real::from_usize(*k + *r - 1, bits) / Real::from_usize(*r, bits);
                Some(out)
            }
            SeriesState::PhaseType { lu, v, alpha } => {
                let out = dot(alpha, v);
                *v = lu.solve(v);
                Some(out)
            }
        }
    }
}

/// Batch-size law on {1, 2, ...}: explicit probabilities `b(1..K)` plus the
/// mass `tail_mass` of sizes above `K`.
#[derive(Debug, Clone)]
pub struct BatchSpec {
    pmf: Vec<Real>,
    tail_mass: Real,
    /// `tails[m-1] = B^c(m)` for m = 1..=K+1.
    tails: Vec<Real>,
    mean: Real,
    origin: Option<String>,
}

impl BatchSpec {
    fn assemble(pmf: Vec<Real>, tail_mass: Real, mean: Option<Real>, origin: Option<String>) -> Result<Self> {
        if pmf.is_empty() {
            return Err(invalid(String::from("batch law needs at least one size")));
        }
        let bits = pmf[0].bits();
        let mut tails = vec![Real::zero(bits); pmf.len() + 1];
        tails[pmf.len()] = tail_mass.clone();
        for k in (0..pmf.len()).rev() {
            tails[k] = &tails[k + 1] + &pmf[k];
        }
        let mean = mean.unwrap_or_else(|| {
            let mut m = Real::zero(bits);
            for (k, b) in pmf.iter().enumerate() {
                m += b * Real::from_usize(k + 1, bits);
            }
            m + &tail_mass * Real::from_usize(pmf.len() + 1, bits)
        });
        Ok(BatchSpec { pmf, tail_mass, tails, mean, origin })
    }

    /// Every batch has exactly one customer.
    pub fn unit(bits: usize) -> Self {
        Self::assemble(vec![Real::one(bits)], Real::zero(bits), None, None).expect("unit batch")
    }

    /// Batch law from explicit probabilities `b(1..K)` and the mass above `K`.
    /// The tail is re-derived as `1 − Σb` so the total is exactly one.
    pub fn from_pmf(pmf: Vec<Real>, tail_mass: Real) -> Result<Self> {
        if pmf.is_empty() {
            return Err(invalid(String::from("batch law needs at least one size")));
        }
        let bits = pmf[0].bits();
        let mut total = Real::zero(bits);
        for (k, b) in pmf.iter().enumerate() {
            if b.is_negative() {
                return Err(invalid(format!("batch probability b({}) is negative", k + 1)));
            }
            total += b;
        }
        if tail_mass.is_negative() {
            return Err(invalid(String::from("batch tail mass is negative")));
        }
        let sum = &total + &tail_mass;
        if (&sum - Real::one(bits)).abs() > input_tolerance(bits) {
            return Err(invalid(format!(
                "batch probabilities sum to {}, not 1",
                sum.to_sig_string(12)
            )));
        }
        let tail = (Real::one(bits) - &total).max(Real::zero(bits));
        Self::assemble(pmf, tail, None, None)
    }

    /// `b(k) = (1−q)q^{k−1}` for k = 1..=K with the exact tail `q^K`.
    pub fn geometric(ratio: &Real, support: usize) -> Result<Self> {
        let bits = ratio.bits();
        let one = Real::one(bits);
        if ratio.is_negative() || *ratio >= one {
            return Err(invalid(format!(
                "geometric batch ratio must lie in [0,1), got {}",
                ratio.to_sig_string(12)
            )));
        }
        if support == 0 {
            return Err(invalid(String::from("geometric batch needs support >= 1")));
        }
        let mut pmf = Vec::with_capacity(support);
        let mut term = &one - ratio;
        for _ in 0..support {
            pmf.push(term.clone());
            term = &term * ratio;
        }
        let tail = ratio.powi(support);
        let mean = (&one - ratio).recip();
        Self::assemble(pmf, tail, Some(mean), Some(format!("geometric(ratio={})", ratio.to_sig_string(20))))
    }

    /// Smallest support `K` with `q^K < eps`.
    pub fn geometric_support_for(ratio: &Real, eps: &Real) -> usize {
        if ratio.is_zero() {
            return 1;
        }
        let mut k = 1;
        let mut t = ratio.clone();
        while t >= *eps && k < 1_000_000 {
            t = &t * ratio;
            k += 1;
        }
        k
    }

    /// Conditions a law `g` on {0, 1, ...} on being nonzero:
    /// `b(k) = g(k)/(1 − g(0))`.
    pub fn normalize_from_zero_support(g: &[Real]) -> Result<Self> {
        if g.len() < 2 {
            let bits = g.first().map(Real::bits).unwrap_or(64);
            if g.first().is_none_or(|g0| (g0 - Real::one(bits)).abs() <= input_tolerance(bits)) {
                return Err(Error::DegenerateBatch);
            }
            return Err(invalid(String::from("law on {0,1,...} has no mass above zero")));
        }
        let bits = g[0].bits();
        let one = Real::one(bits);
        let scale = &one - &g[0];
        if !scale.is_positive() {
            return Err(Error::DegenerateBatch);
        }
        let mut pmf = Vec::with_capacity(g.len() - 1);
        let mut total = Real::zero(bits);
        for (k, v) in g.iter().enumerate().skip(1) {
            if v.is_negative() {
                return Err(invalid(format!("g({k}) is negative")));
            }
            let b = v / &scale;
            total += &b;
            pmf.push(b);
        }
        if total > &one + input_tolerance(bits) {
            return Err(invalid(String::from("law on {0,1,...} has total mass above one")));
        }
        let tail = (&one - &total).max(Real::zero(bits));
        Self::assemble(pmf, tail, None, Some(String::from("conditioned on nonzero size")))
    }

    /// Largest explicit size `K`.
    pub fn support(&self) -> usize {
        self.pmf.len()
    }

    /// `b(k)`; zero outside 1..=K.
    pub fn prob(&self, k: usize) -> Real {
        if k >= 1 && k <= self.pmf.len() {
            self.pmf[k - 1].clone()
        } else {
            Real::zero(self.tail_mass.bits())
        }
    }

    pub fn pmf(&self) -> &[Real] {
        &self.pmf
    }

    pub fn tail_mass(&self) -> &Real {
        &self.tail_mass
    }

    /// `E[X]`. For laws given by a plain pmf the tail is counted at size K+1.
    pub fn mean(&self) -> &Real {
        &self.mean
    }

    pub fn origin(&self) -> Option<&str> {
        self.origin.as_deref()
    }

    pub fn is_unit(&self) -> bool {
        self.pmf.len() == 1 && self.tail_mass.is_zero()
    }

    /// `B^c(m) = P(X ≥ m)`. Beyond `K+1` only the lumped tail is known and
    /// is returned as is.
    pub fn batch_tail(&self, m: usize) -> Real {
        if m <= 1 {
            Real::one(self.tail_mass.bits())
        } else if m <= self.tails.len() {
            self.tails[m - 1].clone()
        } else {
            self.tail_mass.clone()
        }
    }

    /// `Σ_{m ≥ from} B^c(m) = E[(X − from + 1)^+]`, with the tail counted at K+1.
    pub fn tail_sum(&self, from: usize) -> Real {
        let bits = self.tail_mass.bits();
        let from = from.max(1);
        let mut acc = Real::zero(bits);
        for m in from..=self.tails.len() {
            acc += &self.tails[m - 1];
        }
        acc
    }

    /// Same law with the tail mass moved onto `b(K)`.
    pub fn lumped(&self) -> Self {
        if self.tail_mass.is_zero() {
            return self.clone();
        }
        let mut pmf = self.pmf.clone();
        let last = pmf.len() - 1;
        pmf[last] = &pmf[last] + &self.tail_mass;
        let bits = self.tail_mass.bits();
        Self::assemble(pmf, Real::zero(bits), None, self.origin.clone()).expect("nonempty pmf")
    }
}
