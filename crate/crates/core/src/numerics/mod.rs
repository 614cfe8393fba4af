//! Precision context, scalar root finding, stationary vectors, quadrature.

mod fixed_point;
mod linear;
mod quadrature;

pub use fixed_point::{solve_fixed_point, solve_fixed_point_with};
pub use linear::{solve_stationary_direct, solve_stationary_power, solve_stationary_vector, stationary_residual};
pub use quadrature::{integrate, integrate_half_line, quadrature_pij_oracle, Quadrature};

use alloc::format;

use crate::error::{Error, Result};
use crate::real::Real;

/// Working precision plus the two tolerances used by the solver.
///
/// `eps_sigma` stops the fixed-point iteration for σ; `eps_trunc` is the
/// tolerance that fixes the truncation level of infinite-buffer models.
#[derive(Debug, Clone)]
pub struct PrecisionContext {
    digits: usize,
    bits: usize,
    eps_sigma: Real,
    eps_trunc: Real,
    max_iterations: usize,
}

impl PrecisionContext {
    pub const MIN_DIGITS: usize = 30;
    pub const DEFAULT_MAX_ITERATIONS: usize = 1_000_000;

    /// Mantissa width used for `digits` significant decimals, with 32 guard
    /// bits, rounded up to whole 64-bit words.
    pub fn bits_for_digits(digits: usize) -> usize {
        let raw = (digits as f64 * core::f64::consts::LOG2_10).ceil() as usize + 32;
        raw.div_ceil(64) * 64
    }

    pub fn new(digits: usize, eps_sigma: &str, eps_trunc: &str) -> Result<Self> {
        if digits < Self::MIN_DIGITS {
            return Err(Error::Precondition(format!(
                "precision must be at least {} digits, got {digits}",
                Self::MIN_DIGITS
            )));
        }
        let bits = Self::bits_for_digits(digits);
        let parse = |name: &str, s: &str| {
            let v = Real::parse(s, bits)
                .ok_or_else(|| Error::Precondition(format!("{name} is not a decimal: {s:?}")))?;
            if !v.is_positive() {
                return Err(Error::Precondition(format!("{name} must be positive, got {s}")));
            }
            Ok(v)
        };
        let eps_sigma = parse("eps_sigma", eps_sigma)?;
        let eps_trunc = parse("eps_trunc", eps_trunc)?;
        Ok(PrecisionContext {
            digits,
            bits,
            eps_sigma,
            eps_trunc,
            max_iterations: Self::DEFAULT_MAX_ITERATIONS,
        })
    }

    /// `digits` of precision, eps_sigma = 10^-(digits-10), eps_trunc = 1e-16.
    pub fn with_digits(digits: usize) -> Result<Self> {
        let es = format!("1e-{}", digits.saturating_sub(10));
        Self::new(digits, &es, "1e-16")
    }

    /// 50 digits; enough for the small finite-buffer models.
    pub fn small_scale() -> Self {
        Self::with_digits(50).expect("valid default context")
    }

    /// 150 digits, eps_sigma = 1e-125, eps_trunc = 1e-16.
    pub fn large_scale() -> Self {
        Self::new(150, "1e-125", "1e-16").expect("valid default context")
    }

    pub fn with_max_iterations(mut self, cap: usize) -> Self {
        self.max_iterations = cap.max(1);
        self
    }

    pub fn digits(&self) -> usize {
        self.digits
    }

    pub fn bits(&self) -> usize {
        self.bits
    }

    pub fn eps_sigma(&self) -> &Real {
        &self.eps_sigma
    }

    pub fn eps_trunc(&self) -> &Real {
        &self.eps_trunc
    }

    pub fn max_iterations(&self) -> usize {
        self.max_iterations
    }

    pub fn zero(&self) -> Real {
        Real::zero(self.bits)
    }

    pub fn one(&self) -> Real {
        Real::one(self.bits)
    }

    pub fn int(&self, v: i64) -> Real {
        Real::from_i64(v, self.bits)
    }

    pub fn real(&self, v: f64) -> Real {
        Real::from_f64(v, self.bits)
    }

    /// Parses a decimal literal at working precision.
    pub fn parse(&self, s: &str) -> Result<Real> {
        Real::parse(s, self.bits)
            .ok_or_else(|| Error::InvalidModel(format!("not a decimal number: {s:?}")))
    }

    /// 10^-(digits - slack), the usual "agrees at working precision" bound.
    pub fn tolerance(&self, slack: usize) -> Real {
        let e = self.digits.saturating_sub(slack);
        Real::from_u64(10, self.bits).powi(e).recip()
    }
}

impl Default for PrecisionContext {
    fn default() -> Self {
        Self::small_scale()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bits_cover_digits() {
        assert_eq!(PrecisionContext::bits_for_digits(50), 256);
        assert_eq!(PrecisionContext::bits_for_digits(150), 576);
    }

    #[test]
    fn rejects_bad_settings() {
        assert!(PrecisionContext::new(20, "1e-10", "1e-16").is_err());
        assert!(PrecisionContext::new(50, "0", "1e-16").is_err());
        assert!(PrecisionContext::new(50, "1e-40", "x").is_err());
        assert!(PrecisionContext::new(50, "1e-40", "-1").is_err());
    }

    #[test]
    fn large_scale_tolerances_are_representable() {
        let ctx = PrecisionContext::large_scale();
        assert!(ctx.eps_sigma().is_positive());
        let back = ctx.eps_sigma().to_sig_string(5);
        assert_eq!(back, "1e-125");
    }

    #[test]
    fn tolerance_scales_with_digits() {
        let ctx = PrecisionContext::small_scale();
        assert!((ctx.tolerance(10).to_f64() - 1e-40).abs() < 1e-50);
    }
}
