//! Binary floating point with a caller-chosen mantissa width.
//!
//! [`Real`] wraps an `astro_float::BigFloat` together with the precision it was
//! created at. Arithmetic between two values runs at the larger of the two
//! precisions, so a computation seeded from one [`PrecisionContext`] stays at
//! that precision throughout.
//!
//! [`PrecisionContext`]: crate::PrecisionContext

use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;
use core::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

use astro_float::{BigFloat, Consts, Radix, RoundingMode, Sign};

const RM: RoundingMode = RoundingMode::ToEven;

#[derive(Clone)]
pub struct Real {
    v: BigFloat,
    bits: usize,
}

fn consts() -> Consts {
    Consts::new().expect("astro-float constant cache allocation")
}

impl Real {
    fn wrap(v: BigFloat, bits: usize) -> Self {
        Real { v, bits }
    }

    pub fn zero(bits: usize) -> Self {
        Self::from_u64(0, bits)
    }

    pub fn one(bits: usize) -> Self {
        Self::from_u64(1, bits)
    }

    pub fn from_u64(v: u64, bits: usize) -> Self {
        Self::wrap(BigFloat::from_u64(v, bits), bits)
    }

    pub fn from_i64(v: i64, bits: usize) -> Self {
        Self::wrap(BigFloat::from_i64(v, bits), bits)
    }

    pub fn from_usize(v: usize, bits: usize) -> Self {
        Self::from_u64(v as u64, bits)
    }

    /// Exact conversion of a binary double.
    pub fn from_f64(v: f64, bits: usize) -> Self {
        Self::wrap(BigFloat::from_f64(v, bits), bits)
    }

    /// Parses a decimal literal such as `0.873563218` or `1e-125`.
    pub fn parse(s: &str, bits: usize) -> Option<Self> {
        let t = s.trim();
        if t.is_empty() {
            return None;
        }
        let ok = t.bytes().all(|b| b.is_ascii_digit() || b"+-.eE".contains(&b));
        if !ok || !t.bytes().any(|b| b.is_ascii_digit()) {
            return None;
        }
        let v = BigFloat::parse(t, Radix::Dec, bits, RM, &mut consts());
        if v.is_nan() || v.is_inf() {
            return None;
        }
        Some(Self::wrap(v, bits))
    }

    pub fn bits(&self) -> usize {
        self.bits
    }

    /// Same value re-rounded to `bits` of mantissa.
    pub fn with_bits(&self, bits: usize) -> Self {
        let mut v = self.v.clone();
        if !v.is_zero() {
            let _ = v.set_precision(bits, RM);
        }
        Self::wrap(v, bits)
    }

    pub fn is_zero(&self) -> bool {
        self.v.is_zero()
    }

    pub fn is_negative(&self) -> bool {
        !self.v.is_zero() && self.v.is_negative()
    }

    pub fn is_positive(&self) -> bool {
        !self.v.is_zero() && self.v.is_positive()
    }

    pub fn is_finite(&self) -> bool {
        !self.v.is_nan() && !self.v.is_inf()
    }

    pub fn abs(&self) -> Self {
        Self::wrap(self.v.abs(), self.bits)
    }

    pub fn recip(&self) -> Self {
        Self::one(self.bits) / self
    }

    pub fn exp(&self) -> Self {
        Self::wrap(self.v.exp(self.bits, RM, &mut consts()), self.bits)
    }

    pub fn ln(&self) -> Self {
        Self::wrap(self.v.ln(self.bits, RM, &mut consts()), self.bits)
    }

    pub fn powi(&self, n: usize) -> Self {
        if n == 0 {
            return Self::one(self.bits);
        }
        Self::wrap(self.v.powi(n, self.bits, RM), self.bits)
    }

    pub fn sqrt(&self) -> Self {
        Self::wrap(self.v.sqrt(self.bits, RM), self.bits)
    }

    pub fn ceil(&self) -> Self {
        Self::wrap(self.v.ceil(), self.bits)
    }

    pub fn floor(&self) -> Self {
        Self::wrap(self.v.floor(), self.bits)
    }

    pub fn max(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }

    pub fn min(self, other: Self) -> Self {
        if other < self {
            other
        } else {
            self
        }
    }

    /// Nearest double (truncated to the top 128 mantissa bits first).
    pub fn to_f64(&self) -> f64 {
        if self.v.is_nan() {
            return f64::NAN;
        }
        if self.v.is_inf() {
            return if self.v.is_negative() { f64::NEG_INFINITY } else { f64::INFINITY };
        }
        let Some((m, _, sign, e, _)) = self.v.as_raw_parts() else {
            return f64::NAN;
        };
        if m.iter().all(|&w| w == 0) {
            return 0.0;
        }
        let hi = m[m.len() - 1] as u128;
        let lo = if m.len() > 1 { m[m.len() - 2] as u128 } else { 0 };
        let top = (hi << 64) | lo;
        // value = top / 2^128 * 2^e
        let f = top as f64 * libm::exp2(-128.0);
        let r = scale2(f, e as i64);
        if sign == Sign::Neg {
            -r
        } else {
            r
        }
    }

    /// Integer part as usize, or `None` when negative, non-finite, or too big.
    pub fn to_usize(&self) -> Option<usize> {
        if !self.is_finite() || self.is_negative() {
            return None;
        }
        let f = self.floor().to_f64();
        if f > (1u64 << 52) as f64 {
            return None;
        }
        Some(f as usize)
    }

    fn decimal(&self) -> Decimal {
        if self.v.is_zero() {
            return Decimal::zero();
        }
        let s = self
            .v
            .format(Radix::Dec, RM, &mut consts())
            .expect("finite value formats");
        Decimal::from_sci(&s)
    }

    /// Scientific-style rendering with at most `digits` significant digits,
    /// rounded half-to-even. Values with decimal exponent in [-30, 30) are
    /// written positionally; trailing zeros are dropped.
    pub fn to_sig_string(&self, digits: usize) -> String {
        if !self.is_finite() {
            return String::from(if self.v.is_nan() { "NaN" } else { "inf" });
        }
        let mut d = self.decimal();
        d.round_to_count(digits.max(1) as i64);
        d.trim();
        d.render()
    }

    /// Positional rendering with exactly `places` digits after the point,
    /// rounded half-to-even.
    pub fn to_fixed_string(&self, places: usize) -> String {
        let mut d = self.decimal();
        let keep = d.exp + 1 + places as i64;
        d.round_to_count(keep);
        d.render_fixed(places)
    }
}

fn scale2(mut f: f64, mut e: i64) -> f64 {
    while e > 1000 {
        f *= libm::exp2(1000.0);
        e -= 1000;
    }
    while e < -1000 {
        f *= libm::exp2(-1000.0);
        e += 1000;
        if f == 0.0 {
            return 0.0;
        }
    }
    f * libm::exp2(e as f64)
}

/// Decimal digit string `d0.d1d2... x 10^exp`.
#[derive(Debug, Clone)]
struct Decimal {
    neg: bool,
    digits: Vec<u8>,
    exp: i64,
}

impl Decimal {
    fn zero() -> Self {
        Decimal { neg: false, digits: Vec::new(), exp: 0 }
    }

    fn from_sci(s: &str) -> Self {
        let (neg, body) = match s.strip_prefix('-') {
            Some(b) => (true, b),
            None => (false, s),
        };
        let (mant, exp) = match body.find(['e', 'E']) {
            Some(p) => (&body[..p], body[p + 1..].parse::<i64>().unwrap_or(0)),
            None => (body, 0),
        };
        let point = mant.find('.').unwrap_or(mant.len());
        let mut digits: Vec<u8> = Vec::with_capacity(mant.len());
        for b in mant.bytes().filter(u8::is_ascii_digit) {
            digits.push(b - b'0');
        }
        let mut exp = exp + point as i64 - 1;
        let lead = digits.iter().take_while(|&&d| d == 0).count();
        digits.drain(..lead);
        exp -= lead as i64;
        let mut d = Decimal { neg, digits, exp };
        d.trim();
        d
    }

    fn is_zero(&self) -> bool {
        self.digits.is_empty()
    }

    fn trim(&mut self) {
        while self.digits.last() == Some(&0) {
            self.digits.pop();
        }
        if self.digits.is_empty() {
            self.neg = false;
            self.exp = 0;
        }
    }

    /// Keeps the leading `keep` digits (relative to the current exponent),
    /// rounding half-to-even.
    fn round_to_count(&mut self, keep: i64) {
        if self.is_zero() || keep >= self.digits.len() as i64 {
            return;
        }
        if keep < 0 {
            *self = Decimal::zero();
            return;
        }
        let k = keep as usize;
        let first = self.digits[k];
        let rest_nonzero = self.digits[k + 1..].iter().any(|&d| d != 0);
        let prev_odd = if k == 0 { false } else { self.digits[k - 1] % 2 == 1 };
        let up = first > 5 || (first == 5 && (rest_nonzero || prev_odd));
        self.digits.truncate(k);
        if up {
            let mut i = k;
            loop {
                if i == 0 {
                    self.digits.insert(0, 1);
                    self.exp += 1;
                    break;
                }
                i -= 1;
                if self.digits[i] == 9 {
                    self.digits[i] = 0;
                } else {
                    self.digits[i] += 1;
                    break;
                }
            }
        }
        let neg = self.neg;
        self.trim();
        if !self.is_zero() {
            self.neg = neg;
        }
    }

    fn digit_at(&self, pos: i64) -> u8 {
        // pos is the power of ten
        let idx = self.exp - pos;
        if idx < 0 || idx >= self.digits.len() as i64 {
            0
        } else {
            self.digits[idx as usize]
        }
    }

    fn render(&self) -> String {
        let mut out = String::new();
        if self.is_zero() {
            out.push('0');
            return out;
        }
        if self.neg {
            out.push('-');
        }
        let n = self.digits.len() as i64;
        if (-30..30).contains(&self.exp) {
            let low = (self.exp - n + 1).min(0);
            let high = self.exp.max(0);
            let mut p = high;
            while p >= low {
                out.push((b'0' + self.digit_at(p)) as char);
                if p == 0 && low < 0 {
                    out.push('.');
                }
                p -= 1;
            }
        } else {
            out.push((b'0' + self.digits[0]) as char);
            if n > 1 {
                out.push('.');
                for &d in &self.digits[1..] {
                    out.push((b'0' + d) as char);
                }
            }
            out.push('e');
            out.push_str(&alloc::format!("{}", self.exp));
        }
        out
    }

    fn render_fixed(&self, places: usize) -> String {
        let mut out = String::new();
        if self.neg && !self.is_zero() {
            out.push('-');
        }
        let high = self.exp.max(0);
        let mut p = high;
        while p >= 0 {
            out.push((b'0' + self.digit_at(p)) as char);
            p -= 1;
        }
        if places > 0 {
            out.push('.');
            for q in 1..=places as i64 {
                out.push((b'0' + self.digit_at(-q)) as char);
            }
        }
        out
    }
}

impl fmt::Debug for Real {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_sig_string(40))
    }
}

impl fmt::Display for Real {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let digits = f.precision().unwrap_or(self.bits * 3 / 10);
        f.write_str(&self.to_sig_string(digits))
    }
}

impl PartialEq for Real {
    fn eq(&self, other: &Self) -> bool {
        self.partial_cmp(other) == Some(Ordering::Equal)
    }
}

impl PartialOrd for Real {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        self.v.cmp(&other.v).map(|c| c.cmp(&0))
    }
}

macro_rules! binop {
    ($tr:ident, $m:ident, $inner:ident) => {
        impl $tr<&Real> for &Real {
            type Output = Real;
            fn $m(self, o: &Real) -> Real {
                let p = self.bits.max(o.bits);
                Real::wrap(self.v.$inner(&o.v, p, RM), p)
            }
        }
        impl $tr<Real> for &Real {
            type Output = Real;
            fn $m(self, o: Real) -> Real {
                self.$m(&o)
            }
        }
        impl $tr<&Real> for Real {
            type Output = Real;
            fn $m(self, o: &Real) -> Real {
                (&self).$m(o)
            }
        }
        impl $tr<Real> for Real {
            type Output = Real;
            fn $m(self, o: Real) -> Real {
                (&self).$m(&o)
            }
        }
    };
}

binop!(Add, add, add);
binop!(Sub, sub, sub);
binop!(Mul, mul, mul);
binop!(Div, div, div);

impl AddAssign<&Real> for Real {
    fn add_assign(&mut self, o: &Real) {
        *self = &*self + o;
    }
}

impl AddAssign<Real> for Real {
    fn add_assign(&mut self, o: Real) {
        *self = &*self + &o;
    }
}

impl SubAssign<&Real> for Real {
    fn sub_assign(&mut self, o: &Real) {
        *self = &*self - o;
    }
}

impl SubAssign<Real> for Real {
    fn sub_assign(&mut self, o: Real) {
        *self = &*self - &o;
    }
}

impl MulAssign<&Real> for Real {
    fn mul_assign(&mut self, o: &Real) {
        *self = &*self * o;
    }
}

impl MulAssign<Real> for Real {
    fn mul_assign(&mut self, o: Real) {
        *self = &*self * &o;
    }
}

impl Neg for Real {
    type Output = Real;
    fn neg(self) -> Real {
        Real::wrap(self.v.neg(), self.bits)
    }
}

impl Neg for &Real {
    type Output = Real;
    fn neg(self) -> Real {
        Real::wrap(self.v.clone().neg(), self.bits)
    }
}

impl core::iter::Sum for Real {
    /// Panics on an empty iterator; use a fold with an explicit zero instead.
    fn sum<I: Iterator<Item = Real>>(mut it: I) -> Real {
        let first = it.next().expect("sum of an empty iterator of Real");
        it.fold(first, |a, b| a + b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const P: usize = 256;

    fn r(s: &str) -> Real {
        Real::parse(s, P).unwrap()
    }

    #[test]
    fn arithmetic_and_order() {
        let a = r("1.5");
        let b = r("0.25");
        assert_eq!((&a + &b).to_f64(), 1.75);
        assert_eq!((&a - &b).to_f64(), 1.25);
        assert_eq!((&a * &b).to_f64(), 0.375);
        assert_eq!((&a / &b).to_f64(), 6.0);
        assert!(a > b);
        assert!((-a.clone()).is_negative());
        assert_eq!(a.powi(3).to_f64(), 3.375);
    }

    #[test]
    fn exp_and_ln() {
        let e = Real::one(P).exp();
        assert!((e.to_f64() - core::f64::consts::E).abs() < 1e-15);
        let back = e.ln();
        assert!((back - Real::one(P)).abs().to_f64() < 1e-70);
    }

    #[test]
    fn rendering() {
        assert_eq!(r("0.0679588101").to_sig_string(9), "0.0679588101");
        assert_eq!(r("0.0679588101").to_sig_string(8), "0.06795881");
        assert_eq!(r("2.5").to_fixed_string(0), "2");
        assert_eq!(r("3.5").to_fixed_string(0), "4");
        assert_eq!(r("-0.125").to_fixed_string(2), "-0.12");
        assert_eq!(r("39.3571").to_fixed_string(3), "39.357");
        assert_eq!(r("0.0004").to_fixed_string(3), "0.000");
        assert_eq!(r("0.9996").to_fixed_string(3), "1.000");
        assert_eq!(r("1e-40").to_sig_string(5), "1e-40");
        assert_eq!(r("123000").to_sig_string(5), "123000");
        assert_eq!(Real::zero(P).to_sig_string(5), "0");
        assert_eq!(r("0.5").to_sig_string(60), "0.5");
    }

    #[test]
    fn decimal_round_trip() {
        let x = Real::from_u64(2, P) / Real::from_u64(3, P);
        let s = x.to_sig_string(70);
        let y = Real::parse(&s, P).unwrap();
        assert_eq!(y.to_sig_string(70), s);
    }

    #[test]
    fn parse_rejects_garbage() {
        assert!(Real::parse("abc", P).is_none());
        assert!(Real::parse("", P).is_none());
        assert!(Real::parse("1e-125", P).unwrap().is_positive());
    }

    #[test]
    fn to_f64_extremes() {
        let tiny = r("1e-400");
        assert_eq!(tiny.to_f64(), 0.0);
        let x = r("-1234.5e-3");
        assert_eq!(x.to_f64(), -1.2345);
        assert_eq!(r("17.9").to_usize(), Some(17));
    }
}
