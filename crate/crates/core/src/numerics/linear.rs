use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use super::PrecisionContext;
use crate::error::{Error, Result};
use crate::kernel::TransitionMatrix;
use crate::real::Real;

/// Largest chain handled by the dense direct solve; bigger chains use power
/// iteration.
pub const DIRECT_LIMIT: usize = 2001;

/// Stationary vector of a row-stochastic matrix, `π = πP`, `Σπ = 1`.
pub fn solve_stationary_vector(p: &TransitionMatrix, ctx: &PrecisionContext) -> Result<Vec<Real>> {
    if p.size() <= DIRECT_LIMIT {
        solve_stationary_direct(p, ctx)
    } else {
        solve_stationary_power(p, ctx)
    }
}

/// Gaussian elimination with partial pivoting on `(Pᵀ − I)x = 0` with the last
/// equation replaced by `Σx = 1`.
pub fn solve_stationary_direct(p: &TransitionMatrix, ctx: &PrecisionContext) -> Result<Vec<Real>> {
    let n = p.size();
    if n == 0 {
        return Ok(Vec::new());
    }
    let one = ctx.one();
    let mut a: Vec<Vec<Real>> = (0..n)
        .map(|r| {
            (0..n)
                .map(|col| {
                    if r == n - 1 {
                        one.clone()
                    } else if r == col {
                        p.get(col, r) - &one
                    } else {
                        p.get(col, r).clone()
                    }
                })
                .collect()
        })
        .collect();
    let mut b = vec![ctx.zero(); n];
    b[n - 1] = one.clone();

    let tiny = Real::from_u64(2, ctx.bits()).powi(ctx.bits() - 16).recip();
    for col in 0..n {
        let mut best = col;
        let mut best_abs = a[col][col].abs();
        for (r, row) in a.iter().enumerate().skip(col + 1) {
            let v = row[col].abs();
            if v > best_abs {
                best = r;
                best_abs = v;
            }
        }
        if best_abs <= tiny {
            return Err(Error::SingularSystem { column: col });
        }
        a.swap(col, best);
        b.swap(col, best);
        let pivot = a[col][col].clone();
        let (upper, lower) = a.split_at_mut(col + 1);
        let prow = &upper[col];
        for (off, row) in lower.iter_mut().enumerate() {
            if row[col].is_zero() {
                continue;
            }
            let factor = &row[col] / &pivot;
            for k in col..n {
                if prow[k].is_zero() {
                    continue;
                }
                let t = &factor * &prow[k];
                row[k] -= t;
            }
            let t = &factor * &b[col];
            b[col + 1 + off] -= t;
        }
    }
    let mut x = vec![ctx.zero(); n];
    for r in (0..n).rev() {
        let mut acc = b[r].clone();
        for k in r + 1..n {
            if !a[r][k].is_zero() {
                acc -= &a[r][k] * &x[k];
            }
        }
        x[r] = acc / &a[r][r];
    }
    normalize(&mut x, ctx);
    Ok(x)
}

/// Power iteration on the lazy chain `(P + I)/2`, which has the same
/// stationary vector and cannot oscillate.
pub fn solve_stationary_power(p: &TransitionMatrix, ctx: &PrecisionContext) -> Result<Vec<Real>> {
    let n = p.size();
    if n == 0 {
        return Ok(Vec::new());
    }
    let half = ctx.one() / ctx.int(2);
    let mut x = vec![ctx.one() / ctx.int(n as i64); n];
    for it in 1..=ctx.max_iterations() {
        let y = p.left_multiply(&x, ctx);
        let mut next: Vec<Real> = x.iter().zip(&y).map(|(xi, yi)| (xi + yi) * &half).collect();
        normalize(&mut next, ctx);
        let delta = next
            .iter()
            .zip(&x)
            .map(|(a, b)| (a - b).abs())
            .fold(ctx.zero(), Real::max);
        x = next;
        if delta < *ctx.eps_sigma() {
            normalize(&mut x, ctx);
            return Ok(x);
        }
        if it == ctx.max_iterations() {
            return Err(Error::NonConvergence {
                iterations: it,
                reason: format!("power iteration residual {}", delta.to_sig_string(6)),
            });
        }
    }
    Err(Error::NonConvergence { iterations: 0, reason: String::from("iteration cap is zero") })
}

fn normalize(x: &mut [Real], ctx: &PrecisionContext) {
    let total = x.iter().fold(ctx.zero(), |a, v| a + v);
    for v in x.iter_mut() {
        *v = &*v / &total;
    }
}

/// `max_j |(πP)(j) − π(j)|`.
pub fn stationary_residual(p: &TransitionMatrix, pi: &[Real], ctx: &PrecisionContext) -> Real {
    let y = p.left_multiply(pi, ctx);
    y.iter()
        .zip(pi)
        .map(|(a, b)| (a - b).abs())
        .fold(ctx.zero(), Real::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn matrix(ctx: &PrecisionContext, rows: &[&[f64]]) -> TransitionMatrix {
        let n = rows.len();
        let entries = rows
            .iter()
            .flat_map(|r| r.iter().map(|&v| ctx.parse(&alloc::format!("{v}")).unwrap()))
            .collect();
        TransitionMatrix::from_entries(n, entries)
    }

    #[test]
    fn symmetric_two_state() {
        let ctx = PrecisionContext::small_scale();
        let p = matrix(&ctx, &[&[0.5, 0.5], &[0.5, 0.5]]);
        for pi in [solve_stationary_direct(&p, &ctx).unwrap(), solve_stationary_power(&p, &ctx).unwrap()] {
            assert!((pi[0].to_f64() - 0.5).abs() < 1e-30);
            assert!((pi[1].to_f64() - 0.5).abs() < 1e-30);
        }
    }

    #[test]
    fn reducible_chain_is_rejected() {
        let ctx = PrecisionContext::small_scale().with_max_iterations(50);
        let p = matrix(&ctx, &[&[1.0, 0.0], &[0.0, 1.0]]);
        assert!(matches!(
            solve_stationary_direct(&p, &ctx),
            Err(Error::SingularSystem { .. })
        ));
    }

    #[test]
    fn direct_and_power_agree() {
        let ctx = PrecisionContext::small_scale();
        let p = matrix(
            &ctx,
            &[&[0.1, 0.9, 0.0], &[0.3, 0.2, 0.5], &[0.25, 0.25, 0.5]],
        );
        let a = solve_stationary_direct(&p, &ctx).unwrap();
        let b = solve_stationary_power(&p, &ctx).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs().to_f64() < 1e-35);
        }
        let r = stationary_residual(&p, &a, &ctx);
        assert!(r < ctx.eps_sigma().clone());
    }
}
