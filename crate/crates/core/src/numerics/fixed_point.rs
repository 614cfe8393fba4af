use alloc::format;
use alloc::string::String;

use super::PrecisionContext;
use crate::error::{Error, Result};
use crate::real::Real;

/// Plain functional iteration `x <- f(x)` from `x0` at full context precision.
///
/// Stops once the last step is below `eps_sigma` and the geometric estimate of
/// the remaining distance to the fixed point, `d * L / (1 - L)` with `L` the
/// observed contraction ratio, is below `eps_sigma` as well.
pub fn solve_fixed_point<F>(f: F, x0: &Real, ctx: &PrecisionContext) -> Result<Real>
where
    F: FnMut(&Real) -> Real,
{
    solve_fixed_point_with(f, x0, ctx.eps_sigma(), ctx.max_iterations()).map(|(x, _)| x)
}

/// As [`solve_fixed_point`] with an explicit tolerance and iteration cap;
/// also returns the number of iterations used.
pub fn solve_fixed_point_with<F>(
    mut f: F,
    x0: &Real,
    eps: &Real,
    cap: usize,
) -> Result<(Real, usize)>
where
    F: FnMut(&Real) -> Real,
{
    let one = Real::one(x0.bits());
    if !(x0.is_positive() && *x0 < one) {
        return Err(Error::Precondition(format!(
            "starting point must lie in (0,1), got {}",
            x0.to_sig_string(12)
        )));
    }
    let mut x = x0.clone();
    let mut prev_step: Option<Real> = None;
    for n in 1..=cap {
        let next = f(&x);
        if !next.is_finite() {
            return Err(Error::NonConvergence {
                iterations: n,
                reason: String::from("map produced a non-finite value"),
            });
        }
        let step = (&next - &x).abs();
        x = next;
        if step.is_zero() {
            return Ok((x, n));
        }
        if step < *eps {
            if let Some(p) = &prev_step {
                if step < *p {
                    let l = &step / p;
                    let remaining = &step * &l / (&one - &l);
                    if remaining < *eps {
                        return Ok((x, n));
                    }
                }
            }
        }
        prev_step = Some(step);
    }
    Err(Error::NonConvergence {
        iterations: cap,
        reason: format!("fixed-point step still above tolerance; last iterate {}", x.to_sig_string(12)),
    })
}
