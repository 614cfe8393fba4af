use alloc::format;
use alloc::vec::Vec;

use super::PrecisionContext;
use crate::error::{Error, Result};
use crate::kernel::ModelSpec;

// 15-point Kronrod nodes (positive half) and weights, with the embedded
// 7-point Gauss weights for the odd-indexed nodes.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

const MAX_SEGMENTS: usize = 4000;

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for (idx, (&x, &w)) in XGK.iter().zip(&WGK).take(7).enumerate() {
        let dx = half * x;
        let pair = f(center - dx) + f(center + dx);
        kronrod += w * pair;
        if idx % 2 == 1 {
            gauss += WG[idx / 2] * pair;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

/// Globally adaptive Gauss–Kronrod (7/15) integration of `f` over `[a, b]`.
/// Splits the segment with the largest error estimate until the summed
/// estimate is below `max(abs_tol, rel_tol·|value|)`.
pub fn integrate<F>(mut f: F, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> Result<Quadrature>
where
    F: FnMut(f64) -> f64,
{
    let mut segments: Vec<(f64, f64, f64, f64)> = Vec::new();
    let (v, e) = gk15(&mut f, a, b);
    segments.push((a, b, v, e));
    let mut evaluations = 15;
    loop {
        let value: f64 = segments.iter().map(|s| s.2).sum();
        let error: f64 = segments.iter().map(|s| s.3).sum();
        if !value.is_finite() {
            return Err(Error::QuadratureFailure { tolerance: abs_tol, estimate: f64::INFINITY });
        }
        if error <= abs_tol.max(rel_tol * value.abs()) {
            return Ok(Quadrature { value, error, evaluations });
        }
        if segments.len() >= MAX_SEGMENTS {
            return Err(Error::QuadratureFailure { tolerance: abs_tol, estimate: error });
        }
        let worst = segments
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .map(|(k, _)| k)
            .unwrap_or(0);
        let (lo, hi, _, _) = segments.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return Err(Error::QuadratureFailure { tolerance: abs_tol, estimate: error });
        }
        let (v1, e1) = gk15(&mut f, lo, mid);
        let (v2, e2) = gk15(&mut f, mid, hi);
        evaluations += 30;
        segments.push((lo, mid, v1, e1));
        segments.push((mid, hi, v2, e2));
    }
}

/// Integral over `[0, ∞)` through the map `t = x/(1−x)`.
pub fn integrate_half_line<F>(mut f: F, abs_tol: f64, rel_tol: f64) -> Result<Quadrature>
where
    F: FnMut(f64) -> f64,
{
    integrate(
        |x| {
            if x >= 1.0 {
                return 0.0;
            }
            let d = 1.0 - x;
            let v = f(x / d) / (d * d);
            if v.is_finite() {
                v
            } else {
                0.0
            }
        },
        0.0,
        1.0,
        abs_tol,
        rel_tol,
    )
}

fn ln_factorial(n: usize) -> f64 {
    (1..=n).map(|k| libm::log(k as f64)).sum()
}

fn binomial(n: usize, k: usize) -> f64 {
    libm::exp(ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k)).round()
}

/// Transition probability `p(i, j)` for `j + 1 ≤ c ≤ i` by direct numerical
/// integration of the double integral over the time `v` at which the system
/// first drops to `c` customers and the interarrival time `t`.
///
/// Works in `f64`; the returned value carries an absolute error estimate
/// of at most 1e-10.
pub fn quadrature_pij_oracle(i: usize, j: usize, model: &ModelSpec, _ctx: &PrecisionContext) -> Result<f64> {
    let c = model.servers();
    if !(j < c && c <= i) {
        return Err(Error::Precondition(format!(
            "quadrature oracle needs j + 1 <= c <= i, got i={i}, j={j}, c={c}"
        )));
    }
    let mu = model.service_rate().to_f64();
    let law = model.interarrival();
    let shape = i - c + 1;
    let cmu = c as f64 * mu;
    let log_norm = shape as f64 * libm::log(cmu) - ln_factorial(shape - 1);
    let choose = binomial(c, c - j);
    let gamma = move |v: f64| {
        if v <= 0.0 {
            return if shape == 1 { cmu } else { 0.0 };
        }
        libm::exp(log_norm + (shape - 1) as f64 * libm::log(v) - cmu * v)
    };
    let inner_tol = 1e-13;
    let inner = |t: f64| -> Result<f64> {
        if t <= 0.0 {
            return Ok(0.0);
        }
        let q = integrate(
            |v| {
                let u = libm::exp(-mu * (t - v));
                gamma(v) * libm::pow(u, j as f64) * libm::pow(1.0 - u, (c - j) as f64)
            },
            0.0,
            t,
            inner_tol,
            0.0,
        )?;
        Ok(choose * q.value)
    };

    if let Some(a) = law.deterministic_period() {
        return inner(a.to_f64());
    }
    let mut failure = None;
    let outer = integrate_half_line(
        |t| match law.density_f64(t) {
            Some(d) if d > 0.0 => match inner(t) {
                Ok(g) => g * d,
                Err(e) => {
                    failure.get_or_insert(e);
                    0.0
                }
            },
            _ => 0.0,
        },
        1e-11,
        0.0,
    )?;
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(outer.value)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let q = integrate(|x| x * x * x, 0.0, 2.0, 1e-14, 0.0).unwrap();
        assert!((q.value - 4.0).abs() < 1e-13);
    }

    #[test]
    fn exponential_half_line() {
        let q = integrate_half_line(|t| 3.0 * libm::exp(-3.0 * t), 1e-12, 0.0).unwrap();
        assert!((q.value - 1.0).abs() < 1e-11);
    }

    #[test]
    fn peaked_integrand_needs_subdivision() {
        let q = integrate(|x| 1.0 / (1e-4 + x * x), -1.0, 1.0, 1e-10, 0.0).unwrap();
        let exact = 2.0 * libm::atan(1.0 / 1e-2) / 1e-2;
        assert!((q.value - exact).abs() < 1e-8);
        assert!(q.evaluations > 15);
    }

    #[test]
    fn budget_exhaustion_is_reported() {
        let r = integrate(|x| if x > 0.3 { 1.0 } else { 0.0 } / (x - 0.3).abs().max(1e-300), 0.0, 1.0, 1e-14, 0.0);
        assert!(matches!(r, Err(Error::QuadratureFailure { .. })));
    }
}
