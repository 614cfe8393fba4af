#![allow(dead_code)]

use qnet_core::{Buffer, InterarrivalSpec, ModelSpec, PrecisionContext, Real};

pub const MM36_PI: [&str; 7] =
    ["0.067958810", "0.169897026", "0.212371283", "0.176976069", "0.147480057", "0.122900048", "0.102416707"];

pub const SMALL_DET_PI: [&str; 7] =
    ["0.047234853", "0.127764093", "0.254669333", "0.232414603", "0.156638062", "0.107500964", "0.073778091"];
pub const SMALL_ERL_PI: [&str; 7] =
    ["0.060394802", "0.153533580", "0.228194616", "0.196990341", "0.150739248", "0.117912665", "0.092234748"];
pub const SMALL_HYP_PI: [&str; 7] =
    ["0.095667547", "0.170777140", "0.182173364", "0.153721590", "0.148862427", "0.131909935", "0.116887997"];

/// (name, L, W)
pub const SMALL_L_W: [(&str, &str, &str); 4] = [
    ("exponential", "2.944488506", "0.656092538"),
    ("deterministic", "2.941072182", "0.635068584"),
    ("erlang", "2.946822639", "0.649247728"),
    ("hyperexponential", "2.952616004", "0.668684379"),
];

pub const LARGE_L_W: [(&str, &str, &str); 4] = [
    ("deterministic", "39.357", "6.786"),
    ("erlang", "45.600", "7.870"),
    ("exponential", "52.083", "8.980"),
    ("hyperexponential", "65.500", "11.300"),
];

pub fn dec(s: &str, ctx: &PrecisionContext) -> Real {
    ctx.parse(s).unwrap()
}

/// Interarrival laws with overall rate `rate`; hyperexponential branch weight `p`, rates 8 and 2.
pub fn law(name: &str, rate: &str, p: &str, ctx: &PrecisionContext) -> InterarrivalSpec {
    let lam = dec(rate, ctx);
    match name {
        "deterministic" => InterarrivalSpec::deterministic(lam.recip()).unwrap(),
        "exponential" => InterarrivalSpec::exponential(lam).unwrap(),
        "erlang" => InterarrivalSpec::erlang(2, lam).unwrap(),
        "hyperexponential" => {
            let p = dec(p, ctx);
            InterarrivalSpec::hyperexponential(vec![p.clone(), ctx.one() - p], vec![ctx.int(8), ctx.int(2)]).unwrap()
        }
        other => panic!("unknown law {other}"),
    }
}

pub fn small_model(name: &str, ctx: &PrecisionContext) -> ModelSpec {
    ModelSpec::new(3, ctx.int(2), law(name, "5", "0.8", ctx), Buffer::Finite(6)).unwrap()
}

pub fn large_model(name: &str, ctx: &PrecisionContext) -> ModelSpec {
    ModelSpec::new(30, dec("0.2", ctx), law(name, "5.8", "0.873563218", ctx), Buffer::Infinite).unwrap()
}

/// Birth–death M/M/c/N: p(n) ∝ (λ/μ)ⁿ/n! for n ≤ c, then ×(λ/(cμ)) per level.
pub fn mmcn(lam: &Real, mu: &Real, c: usize, n: usize, ctx: &PrecisionContext) -> Vec<Real> {
    let mut w = vec![ctx.one()];
    for k in 1..=n {
        let rate = mu * ctx.int(k.min(c) as i64);
        let next = &w[k - 1] * lam / rate;
        w.push(next);
    }
    let total = w.iter().fold(ctx.zero(), |a, v| a + v);
    w.into_iter().map(|v| v / &total).collect()
}

/// M/M/c mean number in system via the Erlang C formula.
pub fn mmc_l(lam: &Real, mu: &Real, c: usize, ctx: &PrecisionContext) -> Real {
    let one = ctx.one();
    let a = lam / mu;
    let rho = &a / ctx.int(c as i64);
    let mut term = ctx.one();
    let mut head = ctx.zero();
    for k in 0..c {
        head += &term;
        term = term * &a / ctx.int(k as i64 + 1);
    }
    let last = term / (&one - &rho);
    let p0 = (head + &last).recip();
    let lq = p0 * last * &rho / (&one - &rho);
    lq + a
}

pub fn max_abs_diff(a: &[Real], b: &[Real]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs().to_f64()).fold(0.0, f64::max)
}
