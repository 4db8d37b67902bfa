//! Double-double scalar: an unevaluated sum `hi + lo` of two `f64` with
//! `|lo| ≤ ulp(hi)/2`, about 106 bits of significand.
//!
//! Arithmetic follows the usual error-free transformations (Dekker products,
//! Knuth sums). Elementary functions reduce the argument and either sum a
//! Taylor series or refine the `f64` result with one Newton step, which is
//! enough to reach full double-double accuracy on moderate arguments.

use std::cmp::Ordering;
use std::f64::consts;
use std::fmt;
use std::iter::Sum;
use std::num::FpCategory;
use std::ops::{Add, AddAssign, Div, DivAssign, Mul, MulAssign, Neg, Rem, Sub, SubAssign};
use std::str::FromStr;

use thiserror::Error;

use num_traits::{Float, FloatConst, FromPrimitive, Num, NumCast, One, ToPrimitive, Zero};

use crate::scalar::Real;

#[derive(Clone, Copy, Default, PartialEq)]
pub struct DoubleDouble {
    hi: f64,
    lo: f64,
}

const SPLITTER: f64 = 134_217_729.0; // 2^27 + 1
const EPS: f64 = 4.930_380_657_631_324e-32; // 2^-104
const SERIES_TERMS: usize = 40;

const fn dd(hi: f64, lo: f64) -> DoubleDouble {
    DoubleDouble { hi, lo }
}

const PI: DoubleDouble = dd(consts::PI, 1.2246467991473532e-16);
const TWO_PI: DoubleDouble = dd(consts::TAU, 2.4492935982947064e-16);
const PI_2: DoubleDouble = dd(consts::FRAC_PI_2, 6.123233995736766e-17);
const LN_2: DoubleDouble = dd(consts::LN_2, 2.3190468138462996e-17);
const LN_10: DoubleDouble = dd(consts::LN_10, -2.1707562233822494e-16);

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
fn split(a: f64) -> (f64, f64) {
    let t = SPLITTER * a;
    let hi = t - (t - a);
    (hi, a - hi)
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    let (ah, al) = split(a);
    let (bh, bl) = split(b);
    (p, ((ah * bh - p) + ah * bl + al * bh) + al * bl)
}

impl DoubleDouble {
    pub const ZERO: Self = dd(0.0, 0.0);
    pub const ONE: Self = dd(1.0, 0.0);

    /// Normalizes `hi + lo`.
    pub fn new(hi: f64, lo: f64) -> Self {
        if !hi.is_finite() {
            return Self::raw(hi);
        }
        let (hi, lo) = two_sum(hi, lo);
        dd(hi, lo)
    }

    pub fn hi(self) -> f64 {
        self.hi
    }

    pub fn lo(self) -> f64 {
        self.lo
    }

    #[inline]
    fn raw(x: f64) -> Self {
        dd(x, 0.0)
    }

    #[inline]
    fn renorm(s: f64, e: f64) -> Self {
        if !s.is_finite() {
            return Self::raw(s);
        }
        let (hi, lo) = quick_two_sum(s, e);
        dd(hi, lo)
    }

    #[inline]
    fn add_f64(self, b: f64) -> Self {
        let (s, e) = two_sum(self.hi, b);
        Self::renorm(s, e + self.lo)
    }

    #[inline]
    fn mul_f64(self, b: f64) -> Self {
        let (p, e) = two_prod(self.hi, b);
        Self::renorm(p, e + self.lo * b)
    }

    /// Exact scaling by a power of two.
    #[inline]
    fn ldexp(self, k: i32) -> Self {
        let mut out = self;
        let mut k = k;
        while k != 0 {
            let step = k.clamp(-1000, 1000);
            let f = 2f64.powi(step);
            out = dd(out.hi * f, out.lo * f);
            k -= step;
        }
        out
    }

    #[inline]
    fn sqr(self) -> Self {
        let (p, e) = two_prod(self.hi, self.hi);
        Self::renorm(p, e + 2.0 * self.hi * self.lo)
    }

    fn is_zero_value(self) -> bool {
        self.hi == 0.0
    }

    /// `sin` and `cos` on `|t| ≤ π/4`.
    fn sin_cos_reduced(t: Self) -> (Self, Self) {
        let t2 = t.sqr();
        let (mut s, mut term) = (t, t);
        for k in 1..SERIES_TERMS {
            let k = k as f64;
            term = -(term * t2) / Self::raw((2.0 * k) * (2.0 * k + 1.0));
            s += term;
            if term.hi.abs() <= EPS * s.hi.abs() {
                break;
            }
        }
        let (mut c, mut term) = (Self::ONE, Self::ONE);
        for k in 1..SERIES_TERMS {
            let k = k as f64;
            term = -(term * t2) / Self::raw((2.0 * k - 1.0) * (2.0 * k));
            c += term;
            if term.hi.abs() <= EPS {
                break;
            }
        }
        (s, c)
    }

    /// Taylor series of `exp(x) − 1`, for small `|x|`.
    fn expm1_series(x: Self) -> Self {
        let (mut s, mut term) = (x, x);
        for k in 2..SERIES_TERMS {
            term = term * x / Self::raw(k as f64);
            s += term;
            if term.hi.abs() <= EPS * s.hi.abs() {
                break;
            }
        }
        s
    }
}

impl From<f64> for DoubleDouble {
    fn from(x: f64) -> Self {
        Self::raw(x)
    }
}

impl fmt::Debug for DoubleDouble {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "DoubleDouble({:e} + {:e})", self.hi, self.lo)
    }
}

/// Scientific notation with 32 significant digits unless a precision is given.
impl fmt::Display for DoubleDouble {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if !self.hi.is_finite() || self.hi == 0.0 {
            return fmt::Display::fmt(&self.hi, f);
        }
        let digits = f.precision().map_or(32, |p| p + 1).max(1);
        let neg = self.hi < 0.0;
        let x = self.abs();
        let mut e = x.hi.log10().floor() as i32;
        let mut y = x / Self::raw(10.0).powi(e);
        if y.hi >= 10.0 {
            y /= Self::raw(10.0);
            e += 1;
        } else if y.hi < 1.0 {
            y *= Self::raw(10.0);
            e -= 1;
        }
        let mut ds = Vec::with_capacity(digits + 1);
        for _ in 0..=digits {
            let d = y.hi.floor().clamp(0.0, 9.0);
            ds.push(d as u8);
            y = (y - Self::raw(d)) * Self::raw(10.0);
        }
        let round_up = ds.pop().unwrap_or(0) >= 5;
        if round_up {
            let mut k = ds.len();
            loop {
                if k == 0 {
                    ds.insert(0, 1);
                    ds.pop();
                    e += 1;
                    break;
                }
                k -= 1;
                if ds[k] == 9 {
                    ds[k] = 0;
                } else {
                    ds[k] += 1;
                    break;
                }
            }
        }
        if f.precision().is_none() {
            while ds.len() > 1 && ds.last() == Some(&0) {
                ds.pop();
            }
        }
        let mut s = String::with_capacity(ds.len() + 8);
        if neg {
            s.push('-');
        }
        s.push((b'0' + ds[0]) as char);
        if ds.len() > 1 {
            s.push('.');
            s.extend(ds[1..].iter().map(|d| (b'0' + d) as char));
        }
        write!(f, "{s}e{e}")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid double-double literal: {0}")]
pub struct ParseDoubleDoubleError(String);

impl FromStr for DoubleDouble {
    type Err = ParseDoubleDoubleError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || ParseDoubleDoubleError(s.to_string());
        let t = s.trim();
        let (neg, body) = match t.as_bytes().first() {
            Some(b'-') => (true, &t[1..]),
            Some(b'+') => (false, &t[1..]),
            _ => (false, t),
        };
        let lower = body.to_ascii_lowercase();
        if matches!(lower.as_str(), "inf" | "infinity" | "nan") {
            let v: f64 = body.parse().map_err(|_| err())?;
            return Ok(Self::raw(if neg { -v } else { v }));
        }
        let (mantissa, exponent) = match lower.find('e') {
            Some(k) => (&body[..k], body[k + 1..].parse::<i32>().map_err(|_| err())?),
            None => (body, 0),
        };
        let mut value = Self::ZERO;
        let (mut decimals, mut seen_digit, mut seen_point) = (0i32, false, false);
        for ch in mantissa.chars() {
            match ch {
                '0'..='9' => {
                    value = value * Self::raw(10.0) + Self::raw((ch as u8 - b'0') as f64);
                    seen_digit = true;
                    if seen_point {
                        decimals += 1;
                    }
                }
                '.' if !seen_point => seen_point = true,
                _ => return Err(err()),
            }
        }
        if !seen_digit {
            return Err(err());
        }
        let scale = exponent - decimals;
        let ten = Self::raw(10.0);
        value = if scale >= 0 {
            value * ten.powi(scale)
        } else {
            value / ten.powi(-scale)
        };
        Ok(if neg { -value } else { value })
    }
}

impl Neg for DoubleDouble {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        dd(-self.hi, -self.lo)
    }
}

impl Add for DoubleDouble {
    type Output = Self;
    #[inline]
    fn add(self, b: Self) -> Self {
        let (s, e) = two_sum(self.hi, b.hi);
        if !s.is_finite() {
            return Self::raw(s);
        }
        let (t, f) = two_sum(self.lo, b.lo);
        let (s, e) = quick_two_sum(s, e + t);
        Self::renorm(s, e + f)
    }
}

impl Sub for DoubleDouble {
    type Output = Self;
    #[inline]
    fn sub(self, b: Self) -> Self {
        self + (-b)
    }
}

impl Mul for DoubleDouble {
    type Output = Self;
    #[inline]
    fn mul(self, b: Self) -> Self {
        let (p, e) = two_prod(self.hi, b.hi);
        Self::renorm(p, e + (self.hi * b.lo + self.lo * b.hi))
    }
}

impl Div for DoubleDouble {
    type Output = Self;
    #[inline]
    fn div(self, b: Self) -> Self {
        let q1 = self.hi / b.hi;
        if !q1.is_finite() || b.hi == 0.0 {
            return Self::raw(q1);
        }
        let r = self - b.mul_f64(q1);
        let q2 = r.hi / b.hi;
        let r = r - b.mul_f64(q2);
        let q3 = r.hi / b.hi;
        let (q1, q2) = quick_two_sum(q1, q2);
        dd(q1, q2).add_f64(q3)
    }
}

impl Rem for DoubleDouble {
    type Output = Self;
    fn rem(self, b: Self) -> Self {
        self - (self / b).trunc() * b
    }
}

impl AddAssign for DoubleDouble {
    fn add_assign(&mut self, b: Self) {
        *self = *self + b;
    }
}

impl SubAssign for DoubleDouble {
    fn sub_assign(&mut self, b: Self) {
        *self = *self - b;
    }
}

impl MulAssign for DoubleDouble {
    fn mul_assign(&mut self, b: Self) {
        *self = *self * b;
    }
}

impl DivAssign for DoubleDouble {
    fn div_assign(&mut self, b: Self) {
        *self = *self / b;
    }
}

impl PartialOrd for DoubleDouble {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match self.hi.partial_cmp(&other.hi)? {
            Ordering::Equal => self.lo.partial_cmp(&other.lo),
            ord => Some(ord),
        }
    }
}

impl Sum for DoubleDouble {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::ZERO, |a, b| a + b)
    }
}

impl Zero for DoubleDouble {
    fn zero() -> Self {
        Self::ZERO
    }

    fn is_zero(&self) -> bool {
        self.hi == 0.0
    }
}

impl One for DoubleDouble {
    fn one() -> Self {
        Self::ONE
    }
}

impl Num for DoubleDouble {
    type FromStrRadixErr = ParseDoubleDoubleError;

    fn from_str_radix(s: &str, radix: u32) -> Result<Self, Self::FromStrRadixErr> {
        if radix != 10 {
            return Err(ParseDoubleDoubleError(format!(
                "{s} (radix {radix} unsupported)"
            )));
        }
        s.parse()
    }
}

impl ToPrimitive for DoubleDouble {
    fn to_i128(&self) -> Option<i128> {
        let t = self.trunc();
        if !t.hi.is_finite() || t.hi.abs() > 1.7e38 {
            return None;
        }
        (t.hi as i128).checked_add(t.lo as i128)
    }

    fn to_i64(&self) -> Option<i64> {
        self.to_i128().and_then(|v| i64::try_from(v).ok())
    }

    fn to_u64(&self) -> Option<u64> {
        self.to_i128().and_then(|v| u64::try_from(v).ok())
    }

    fn to_f64(&self) -> Option<f64> {
        Some(self.hi + self.lo)
    }

    fn to_f32(&self) -> Option<f32> {
        Some((self.hi + self.lo) as f32)
    }
}

impl FromPrimitive for DoubleDouble {
    fn from_i64(n: i64) -> Option<Self> {
        let hi = n as f64;
        Some(Self::new(hi, (n as i128 - hi as i128) as f64))
    }

    fn from_u64(n: u64) -> Option<Self> {
        let hi = n as f64;
        Some(Self::new(hi, (n as i128 - hi as i128) as f64))
    }

    fn from_f64(x: f64) -> Option<Self> {
        Some(Self::raw(x))
    }

    fn from_f32(x: f32) -> Option<Self> {
        Some(Self::raw(x as f64))
    }
}

impl NumCast for DoubleDouble {
    fn from<N: ToPrimitive>(n: N) -> Option<Self> {
        n.to_f64().map(Self::raw)
    }
}

impl FloatConst for DoubleDouble {
    fn E() -> Self {
        dd(consts::E, 1.4456468917292502e-16)
    }
    fn FRAC_1_PI() -> Self {
        dd(consts::FRAC_1_PI, -1.9678676675182486e-17)
    }
    fn FRAC_1_SQRT_2() -> Self {
        dd(consts::FRAC_1_SQRT_2, -4.833646656726457e-17)
    }
    fn FRAC_2_PI() -> Self {
        dd(consts::FRAC_2_PI, -3.935735335036497e-17)
    }
    fn FRAC_2_SQRT_PI() -> Self {
        dd(consts::FRAC_2_SQRT_PI, 1.533545961316588e-17)
    }
    fn FRAC_PI_2() -> Self {
        PI_2
    }
    fn FRAC_PI_3() -> Self {
        dd(consts::FRAC_PI_3, -1.072081766451091e-16)
    }
    fn FRAC_PI_4() -> Self {
        PI.ldexp(-2)
    }
    fn FRAC_PI_6() -> Self {
        dd(consts::FRAC_PI_6, -5.360408832255455e-17)
    }
    fn FRAC_PI_8() -> Self {
        PI.ldexp(-3)
    }
    fn LN_10() -> Self {
        LN_10
    }
    fn LN_2() -> Self {
        LN_2
    }
    fn LOG10_E() -> Self {
        dd(consts::LOG10_E, 1.098319650216765e-17)
    }
    fn LOG2_E() -> Self {
        dd(consts::LOG2_E, 2.0355273740931033e-17)
    }
    fn PI() -> Self {
        PI
    }
    fn SQRT_2() -> Self {
        dd(consts::SQRT_2, -9.667293313452913e-17)
    }
    fn TAU() -> Self {
        TWO_PI
    }
    fn LOG10_2() -> Self {
        dd(consts::LOG10_2, -2.8037281277851704e-18)
    }
    fn LOG2_10() -> Self {
        dd(consts::LOG2_10, 1.661617516973592e-16)
    }
}

impl Float for DoubleDouble {
    fn nan() -> Self {
        Self::raw(f64::NAN)
    }

    fn infinity() -> Self {
        Self::raw(f64::INFINITY)
    }

    fn neg_infinity() -> Self {
        Self::raw(f64::NEG_INFINITY)
    }

    fn neg_zero() -> Self {
        Self::raw(-0.0)
    }

    fn min_value() -> Self {
        Self::raw(f64::MIN)
    }

    fn min_positive_value() -> Self {
        Self::raw(f64::MIN_POSITIVE)
    }

    fn epsilon() -> Self {
        Self::raw(EPS)
    }

    fn max_value() -> Self {
        Self::raw(f64::MAX)
    }

    fn is_nan(self) -> bool {
        self.hi.is_nan()
    }

    fn is_infinite(self) -> bool {
        self.hi.is_infinite()
    }

    fn is_finite(self) -> bool {
        self.hi.is_finite()
    }

    fn is_normal(self) -> bool {
        self.hi.is_normal()
    }

    fn classify(self) -> FpCategory {
        self.hi.classify()
    }

    fn floor(self) -> Self {
        let hi = self.hi.floor();
        if hi == self.hi {
            Self::renorm(hi, self.lo.floor())
        } else {
            Self::raw(hi)
        }
    }

    fn ceil(self) -> Self {
        let hi = self.hi.ceil();
        if hi == self.hi {
            Self::renorm(hi, self.lo.ceil())
        } else {
            Self::raw(hi)
        }
    }

    /// Half-way cases round away from zero, as for `f64`.
    fn round(self) -> Self {
        let mut hi = self.hi.round();
        if hi == self.hi {
            return Self::renorm(hi, self.lo.round());
        }
        if (hi - self.hi).abs() == 0.5 {
            if hi > self.hi && self.lo < 0.0 {
                hi -= 1.0;
            } else if hi < self.hi && self.lo > 0.0 {
                hi += 1.0;
            }
        }
        Self::raw(hi)
    }

    fn trunc(self) -> Self {
        if self.hi >= 0.0 {
            self.floor()
        } else {
            self.ceil()
        }
    }

    fn fract(self) -> Self {
        self - self.trunc()
    }

    fn abs(self) -> Self {
        if self.hi < 0.0 || (self.hi == 0.0 && self.hi.is_sign_negative()) {
            -self
        } else {
            self
        }
    }

    fn signum(self) -> Self {
        Self::raw(self.hi.signum())
    }

    fn is_sign_positive(self) -> bool {
        self.hi.is_sign_positive()
    }

    fn is_sign_negative(self) -> bool {
        self.hi.is_sign_negative()
    }

    fn mul_add(self, a: Self, b: Self) -> Self {
        self * a + b
    }

    fn recip(self) -> Self {
        Self::ONE / self
    }

    fn powi(self, n: i32) -> Self {
        let mut base = self;
        let mut k = n.unsigned_abs();
        let mut acc = Self::ONE;
        while k > 0 {
            if k & 1 == 1 {
                acc *= base;
            }
            base = base.sqr();
            k >>= 1;
        }
        if n < 0 {
            acc.recip()
        } else {
            acc
        }
    }

    fn powf(self, n: Self) -> Self {
        if n.fract().is_zero_value() && n.hi.abs() < 2.0e9 {
            return self.powi(n.hi as i32);
        }
        if self.is_zero_value() {
            return if n.hi > 0.0 {
                Self::ZERO
            } else {
                Self::infinity()
            };
        }
        (n * self.ln()).exp()
    }

    fn sqrt(self) -> Self {
        if self.hi <= 0.0 {
            return if self.hi == 0.0 { self } else { Self::nan() };
        }
        if self.hi.is_infinite() {
            return self;
        }
        let x = 1.0 / self.hi.sqrt();
        let ax = self.hi * x;
        let (p, e) = two_prod(ax, ax);
        let residual = (self - dd(p, e)).hi;
        Self::raw(ax).add_f64(residual * (x * 0.5))
    }

    fn exp(self) -> Self {
        if self.hi > 709.78 {
            return Self::infinity();
        }
        if self.hi < -745.2 {
            return Self::ZERO;
        }
        if self.hi.is_nan() {
            return self;
        }
        if self.is_zero_value() {
            return Self::ONE;
        }
        // x = m ln 2 + 512 r with |r| ≤ ln 2 / 1024
        let m = (self.hi / LN_2.hi + 0.5).floor();
        let r = (self - LN_2.mul_f64(m)).ldexp(-9);
        let mut s = Self::expm1_series(r);
        for _ in 0..9 {
            s = s.ldexp(1) + s.sqr();
        }
        (s + Self::ONE).ldexp(m as i32)
    }

    fn exp2(self) -> Self {
        (self * LN_2).exp()
    }

    fn ln(self) -> Self {
        if self.hi <= 0.0 {
            return if self.hi == 0.0 {
                Self::neg_infinity()
            } else {
                Self::nan()
            };
        }
        if !self.hi.is_finite() {
            return self;
        }
        if self == Self::ONE {
            return Self::ZERO;
        }
        let y = Self::raw(self.hi.ln());
        y + self * (-y).exp() - Self::ONE
    }

    fn log(self, base: Self) -> Self {
        self.ln() / base.ln()
    }

    fn log2(self) -> Self {
        self.ln() / LN_2
    }

    fn log10(self) -> Self {
        self.ln() / LN_10
    }

    fn max(self, other: Self) -> Self {
        if self.is_nan() || other > self {
            other
        } else {
            self
        }
    }

    fn min(self, other: Self) -> Self {
        if self.is_nan() || other < self {
            other
        } else {
            self
        }
    }

    fn abs_sub(self, other: Self) -> Self {
        if self <= other {
            Self::ZERO
        } else {
            self - other
        }
    }

    fn cbrt(self) -> Self {
        if self.is_zero_value() || !self.hi.is_finite() {
            return self;
        }
        let y = Self::raw(self.hi.cbrt());
        y - (y.sqr() * y - self) / (y.sqr() * Self::raw(3.0))
    }

    fn hypot(self, other: Self) -> Self {
        let m = self.abs().max(other.abs());
        if m.is_zero_value() || !m.hi.is_finite() {
            return m;
        }
        let (a, b) = (self / m, other / m);
        m * (a.sqr() + b.sqr()).sqrt()
    }

    fn sin(self) -> Self {
        self.sin_cos().0
    }

    fn cos(self) -> Self {
        self.sin_cos().1
    }

    fn tan(self) -> Self {
        let (s, c) = self.sin_cos();
        s / c
    }

    fn asin(self) -> Self {
        let a = self.abs();
        if a > Self::ONE {
            return Self::nan();
        }
        if a == Self::ONE {
            return if self.hi > 0.0 { PI_2 } else { -PI_2 };
        }
        self.atan2((Self::ONE - self.sqr()).sqrt())
    }

    fn acos(self) -> Self {
        let a = self.abs();
        if a > Self::ONE {
            return Self::nan();
        }
        if a == Self::ONE {
            return if self.hi > 0.0 { Self::ZERO } else { PI };
        }
        (Self::ONE - self.sqr()).sqrt().atan2(self)
    }

    fn atan(self) -> Self {
        self.atan2(Self::ONE)
    }

    /// `atan2(self, other)`, the angle of the point `(other, self)`.
    fn atan2(self, other: Self) -> Self {
        let (y, x) = (self, other);
        if y.is_nan() || x.is_nan() {
            return Self::nan();
        }
        if x.is_zero_value() {
            if y.is_zero_value() {
                return Self::raw(y.hi.atan2(x.hi));
            }
            return if y.hi > 0.0 { PI_2 } else { -PI_2 };
        }
        if y.is_zero_value() {
            return if x.hi > 0.0 {
                y
            } else if y.hi.is_sign_negative() {
                -PI
            } else {
                PI
            };
        }
        if !x.hi.is_finite() || !y.hi.is_finite() {
            return Self::raw(y.hi.atan2(x.hi));
        }
        let r = x.hypot(y);
        let (xx, yy) = (x / r, y / r);
        let z = Self::raw(y.hi.atan2(x.hi));
        let (s, c) = z.sin_cos();
        if xx.hi.abs() > yy.hi.abs() {
            z + (yy - s) / c
        } else {
            z - (xx - c) / s
        }
    }

    fn sin_cos(self) -> (Self, Self) {
        if !self.hi.is_finite() {
            return (Self::nan(), Self::nan());
        }
        if self.is_zero_value() {
            return (self, Self::ONE);
        }
        let z = (self / TWO_PI).round();
        let r = self - TWO_PI * z;
        let j = (r.hi / PI_2.hi).round();
        let t = r - PI_2.mul_f64(j);
        let (s, c) = Self::sin_cos_reduced(t);
        match (j as i32).rem_euclid(4) {
            0 => (s, c),
            1 => (c, -s),
            2 => (-s, -c),
            _ => (-c, s),
        }
    }

    fn exp_m1(self) -> Self {
        if self.hi.abs() < 0.5 {
            Self::expm1_series(self)
        } else {
            self.exp() - Self::ONE
        }
    }

    fn ln_1p(self) -> Self {
        if self.hi.abs() < 1e-3 {
            // x − x²/2 + x³/3 − …
            let (mut s, mut power) = (self, self);
            for k in 2..SERIES_TERMS {
                power = -(power * self);
                let term = power / Self::raw(k as f64);
                s += term;
                if term.hi.abs() <= EPS * s.hi.abs() {
                    break;
                }
            }
            s
        } else {
            (Self::ONE + self).ln()
        }
    }

    fn sinh(self) -> Self {
        if self.hi.abs() < 0.5 {
            let e = self.exp_m1();
            // (e − 1/e)/2 with e = 1 + m: m(m + 2)/(2(m + 1))
            return e * (e + Self::raw(2.0)) / (e + Self::ONE).ldexp(1);
        }
        let e = self.exp();
        (e - e.recip()).ldexp(-1)
    }

    fn cosh(self) -> Self {
        let e = self.exp();
        (e + e.recip()).ldexp(-1)
    }

    fn tanh(self) -> Self {
        if self.hi.abs() > 40.0 {
            return Self::raw(self.hi.signum());
        }
        let m = self.ldexp(1).exp_m1();
        m / (m + Self::raw(2.0))
    }

    fn asinh(self) -> Self {
        let a = self.abs();
        let a2 = a.sqr();
        let out = (a + a2 / (Self::ONE + (a2 + Self::ONE).sqrt())).ln_1p();
        if self.hi < 0.0 {
            -out
        } else {
            out
        }
    }

    fn acosh(self) -> Self {
        if self < Self::ONE {
            return Self::nan();
        }
        (self + (self.sqr() - Self::ONE).sqrt()).ln()
    }

    fn atanh(self) -> Self {
        (self.ldexp(1) / (Self::ONE - self)).ln_1p().ldexp(-1)
    }

    fn integer_decode(self) -> (u64, i16, i8) {
        Float::integer_decode(self.hi)
    }
}

impl Real for DoubleDouble {}
