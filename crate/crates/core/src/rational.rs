//! Exact rational numbers with an inline `i64` fast path.
//!
//! Almost every number that shows up in the polyhedral computations here is a
//! small fraction, so values are stored as a reduced `i64` pair and only spill
//! into a heap-allocated [`BigRational`] when an intermediate result overflows.
//! The representation is canonical: a value that fits the small form is never
//! stored in the big form, so derived equality and hashing are sound.

use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::iter::Sum;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

#[derive(Clone)]
pub enum Q {
    /// Reduced fraction `n/d` with `d > 0`.
    Small(i64, i64),
    Big(Box<BigRational>),
}

fn gcd_u128(mut a: u128, mut b: u128) -> u128 {
    if a == 0 {
        return b;
    }
    if b == 0 {
        return a;
    }
    let shift = (a | b).trailing_zeros();
    a >>= a.trailing_zeros();
    loop {
        b >>= b.trailing_zeros();
        if a > b {
            std::mem::swap(&mut a, &mut b);
        }
        b -= a;
        if b == 0 {
            return a << shift;
        }
    }
}

fn gcd_i128(a: i128, b: i128) -> i128 {
    gcd_u128(a.unsigned_abs(), b.unsigned_abs()) as i128
}

impl Q {
    pub fn zero() -> Q {
        Q::Small(0, 1)
    }

    pub fn one() -> Q {
        Q::Small(1, 1)
    }

    pub fn from_int(n: i64) -> Q {
        Q::Small(n, 1)
    }

    /// Builds `n/d`, panicking on a zero denominator.
    pub fn new(n: i64, d: i64) -> Q {
        assert!(d != 0, "zero denominator");
        Q::from_i128(n as i128, d as i128)
    }

    fn from_i128(n: i128, d: i128) -> Q {
        debug_assert!(d != 0);
        let (mut n, mut d) = if d < 0 { (-n, -d) } else { (n, d) };
        let g = gcd_i128(n, d);
        if g > 1 {
            n /= g;
            d /= g;
        }
        if n == 0 {
            return Q::Small(0, 1);
        }
        match (i64::try_from(n), i64::try_from(d)) {
            (Ok(n), Ok(d)) => Q::Small(n, d),
            _ => Q::Big(Box::new(BigRational::new_raw(BigInt::from(n), BigInt::from(d)))),
        }
    }

    pub fn from_big(r: BigRational) -> Q {
        // BigRational::new reduces; new_raw callers must already be reduced.
        if let (Some(n), Some(d)) = (r.numer().to_i64(), r.denom().to_i64()) {
            return Q::Small(n, d);
        }
        Q::Big(Box::new(r))
    }

    pub fn from_bigints(n: BigInt, d: BigInt) -> Q {
        assert!(!d.is_zero(), "zero denominator");
        Q::from_big(BigRational::new(n, d))
    }

    pub fn to_big(&self) -> BigRational {
        match self {
            Q::Small(n, d) => BigRational::new_raw(BigInt::from(*n), BigInt::from(*d)),
            Q::Big(b) => (**b).clone(),
        }
    }

    pub fn numer(&self) -> BigInt {
        match self {
            Q::Small(n, _) => BigInt::from(*n),
            Q::Big(b) => b.numer().clone(),
        }
    }

    pub fn denom(&self) -> BigInt {
        match self {
            Q::Small(_, d) => BigInt::from(*d),
            Q::Big(b) => b.denom().clone(),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Q::Small(0, _))
    }

    pub fn is_one(&self) -> bool {
        matches!(self, Q::Small(1, 1))
    }

    pub fn is_integer(&self) -> bool {
        match self {
            Q::Small(_, d) => *d == 1,
            Q::Big(b) => b.is_integer(),
        }
    }

    pub fn signum(&self) -> i32 {
        match self {
            Q::Small(n, _) => n.signum() as i32,
            Q::Big(b) => {
                if b.is_positive() {
                    1
                } else if b.is_negative() {
                    -1
                } else {
                    0
                }
            }
        }
    }

    pub fn is_positive(&self) -> bool {
        self.signum() > 0
    }

    pub fn is_negative(&self) -> bool {
        self.signum() < 0
    }

    pub fn abs(&self) -> Q {
        if self.is_negative() {
            -self
        } else {
            self.clone()
        }
    }

    pub fn recip(&self) -> Q {
        match self {
            Q::Small(n, d) => {
                assert!(*n != 0, "reciprocal of zero");
                Q::from_i128(*d as i128, *n as i128)
            }
            Q::Big(b) => Q::from_big(b.recip()),
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Q::Small(n, d) => *n as f64 / *d as f64,
            Q::Big(b) => b.to_f64().unwrap_or(f64::NAN),
        }
    }

    /// Exact conversion of a finite double.
    pub fn from_f64_exact(x: f64) -> Option<Q> {
        BigRational::from_float(x).map(Q::from_big)
    }

    pub fn pow_i32(&self, e: i32) -> Q {
        let mut out = Q::one();
        let base = if e < 0 { self.recip() } else { self.clone() };
        for _ in 0..e.unsigned_abs() {
            out = &out * &base;
        }
        out
    }

    fn add_ref(&self, o: &Q) -> Q {
        match (self, o) {
            (Q::Small(a, b), Q::Small(c, d)) => {
                if *b == 1 && *d == 1 {
                    let s = *a as i128 + *c as i128;
                    return match i64::try_from(s) {
                        Ok(s) => Q::Small(s, 1),
                        Err(_) => Q::from_i128(s, 1),
                    };
                }
                if b == d {
                    return Q::from_i128(*a as i128 + *c as i128, *b as i128);
                }
                let n = *a as i128 * *d as i128 + *c as i128 * *b as i128;
                let den = *b as i128 * *d as i128;
                Q::from_i128(n, den)
            }
            _ => Q::from_big(self.to_big() + o.to_big()),
        }
    }

    fn sub_ref(&self, o: &Q) -> Q {
        match (self, o) {
            (Q::Small(a, b), Q::Small(c, d)) => {
                if *b == 1 && *d == 1 {
                    let s = *a as i128 - *c as i128;
                    return match i64::try_from(s) {
                        Ok(s) => Q::Small(s, 1),
                        Err(_) => Q::from_i128(s, 1),
                    };
                }
                if b == d {
                    return Q::from_i128(*a as i128 - *c as i128, *b as i128);
                }
                let n = *a as i128 * *d as i128 - *c as i128 * *b as i128;
                let den = *b as i128 * *d as i128;
                Q::from_i128(n, den)
            }
            _ => Q::from_big(self.to_big() - o.to_big()),
        }
    }

    fn mul_ref(&self, o: &Q) -> Q {
        match (self, o) {
            (Q::Small(a, b), Q::Small(c, d)) => {
                if *a == 0 || *c == 0 {
                    return Q::zero();
                }
                if *b == 1 && *d == 1 {
                    let p = *a as i128 * *c as i128;
                    return match i64::try_from(p) {
                        Ok(p) => Q::Small(p, 1),
                        Err(_) => Q::from_i128(p, 1),
                    };
                }
                let g1 = gcd_i128(*a as i128, *d as i128);
                let g2 = gcd_i128(*c as i128, *b as i128);
                let n = (*a as i128 / g1) * (*c as i128 / g2);
                let den = (*b as i128 / g2) * (*d as i128 / g1);
                match (i64::try_from(n), i64::try_from(den)) {
                    (Ok(n), Ok(den)) => Q::Small(n, den),
                    _ => Q::from_big(BigRational::new_raw(BigInt::from(n), BigInt::from(den))),
                }
            }
            _ => Q::from_big(self.to_big() * o.to_big()),
        }
    }

    fn div_ref(&self, o: &Q) -> Q {
        assert!(!o.is_zero(), "division by zero");
        match o {
            // -i64::MIN overflows; route through the general path then.
            Q::Small(c, _) if *c == i64::MIN => Q::from_big(self.to_big() / o.to_big()),
            Q::Small(c, d) => {
                let inv = if *c < 0 {
                    Q::Small(-*d, -*c)
                } else {
                    Q::Small(*d, *c)
                };
                self.mul_ref(&inv)
            }
            Q::Big(_) => Q::from_big(self.to_big() / o.to_big()),
        }
    }

    /// Integer least common multiple of a set of denominators, and gcd of the
    /// numerators, used to scale a rational vector into a primitive integer one.
    pub fn primitive_scale(v: &[Q]) -> Q {
        let mut all_small = true;
        let mut lcm: i128 = 1;
        let mut g: i128 = 0;
        for x in v {
            match x {
                Q::Small(n, d) => {
                    if *n == 0 {
                        continue;
                    }
                    let dd = *d as i128;
                    let gg = gcd_i128(lcm, dd);
                    match (lcm / gg).checked_mul(dd) {
                        Some(l) if l <= i64::MAX as i128 => lcm = l,
                        _ => {
                            all_small = false;
                            break;
                        }
                    }
                    g = gcd_i128(g, *n as i128);
                }
                Q::Big(_) => {
                    all_small = false;
                    break;
                }
            }
        }
        if all_small {
            if g == 0 {
                return Q::one();
            }
            // scale = lcm(dens) / gcd(nums) makes every entry an integer with gcd 1.
            return Q::from_i128(lcm, g);
        }
        let mut lcm = BigInt::one();
        let mut g = BigInt::zero();
        for x in v {
            if x.is_zero() {
                continue;
            }
            lcm = lcm.lcm(&x.denom());
            g = g.gcd(&x.numer());
        }
        if g.is_zero() {
            return Q::one();
        }
        Q::from_bigints(lcm, g)
    }
}

/// Scales `v` in place to the unique primitive integer vector on the same ray.
pub fn make_primitive(v: &mut [Q]) {
    let s = Q::primitive_scale(v);
    if !s.is_one() {
        for x in v.iter_mut() {
            if !x.is_zero() {
                *x = &*x * &s;
            }
        }
    }
}

pub fn dot(a: &[Q], b: &[Q]) -> Q {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = Q::zero();
    for (x, y) in a.iter().zip(b) {
        if x.is_zero() || y.is_zero() {
            continue;
        }
        acc += &(x * y);
    }
    acc
}

impl Default for Q {
    fn default() -> Self {
        Q::zero()
    }
}

impl PartialEq for Q {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Q::Small(a, b), Q::Small(c, d)) => a == c && b == d,
            (Q::Big(a), Q::Big(b)) => a == b,
            _ => false,
        }
    }
}

impl Eq for Q {}

impl Hash for Q {
    fn hash<H: Hasher>(&self, state: &mut H) {
        match self {
            Q::Small(n, d) => {
                0u8.hash(state);
                n.hash(state);
                d.hash(state);
            }
            Q::Big(b) => {
                1u8.hash(state);
                b.hash(state);
            }
        }
    }
}

impl Ord for Q {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Q::Small(a, b), Q::Small(c, d)) => {
                (*a as i128 * *d as i128).cmp(&(*c as i128 * *b as i128))
            }
            _ => self.to_big().cmp(&other.to_big()),
        }
    }
}

impl PartialOrd for Q {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

macro_rules! binop {
    ($tr:ident, $m:ident, $f:ident) => {
        impl $tr<&Q> for &Q {
            type Output = Q;
            fn $m(self, o: &Q) -> Q {
                self.$f(o)
            }
        }
        impl $tr<Q> for Q {
            type Output = Q;
            fn $m(self, o: Q) -> Q {
                (&self).$f(&o)
            }
        }
        impl $tr<&Q> for Q {
            type Output = Q;
            fn $m(self, o: &Q) -> Q {
                (&self).$f(o)
            }
        }
        impl $tr<Q> for &Q {
            type Output = Q;
            fn $m(self, o: Q) -> Q {
                self.$f(&o)
            }
        }
    };
}

binop!(Add, add, add_ref);
binop!(Sub, sub, sub_ref);
binop!(Mul, mul, mul_ref);
binop!(Div, div, div_ref);

impl AddAssign<&Q> for Q {
    fn add_assign(&mut self, o: &Q) {
        *self = self.add_ref(o);
    }
}

impl AddAssign<Q> for Q {
    fn add_assign(&mut self, o: Q) {
        *self = self.add_ref(&o);
    }
}

impl SubAssign<&Q> for Q {
    fn sub_assign(&mut self, o: &Q) {
        *self = self.sub_ref(o);
    }
}

impl SubAssign<Q> for Q {
    fn sub_assign(&mut self, o: Q) {
        *self = self.sub_ref(&o);
    }
}

impl MulAssign<&Q> for Q {
    fn mul_assign(&mut self, o: &Q) {
        *self = self.mul_ref(o);
    }
}

impl Neg for &Q {
    type Output = Q;
    fn neg(self) -> Q {
        match self {
            Q::Small(n, d) if *n != i64::MIN => Q::Small(-n, *d),
            _ => Q::from_big(-self.to_big()),
        }
    }
}

impl Neg for Q {
    type Output = Q;
    fn neg(self) -> Q {
        -&self
    }
}

impl Sum for Q {
    fn sum<I: Iterator<Item = Q>>(iter: I) -> Q {
        let mut acc = Q::zero();
        for x in iter {
            acc += &x;
        }
        acc
    }
}

impl<'a> Sum<&'a Q> for Q {
    fn sum<I: Iterator<Item = &'a Q>>(iter: I) -> Q {
        let mut acc = Q::zero();
        for x in iter {
            acc += x;
        }
        acc
    }
}

impl From<i64> for Q {
    fn from(n: i64) -> Q {
        Q::from_int(n)
    }
}

impl From<i32> for Q {
    fn from(n: i32) -> Q {
        Q::from_int(n as i64)
    }
}

impl From<usize> for Q {
    fn from(n: usize) -> Q {
        Q::from_i128(n as i128, 1)
    }
}

impl fmt::Display for Q {
    /// Always `num/den`, also for integers; this is the canonical export form.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Q::Small(n, d) => write!(f, "{n}/{d}"),
            Q::Big(b) => write!(f, "{}/{}", b.numer(), b.denom()),
        }
    }
}

impl fmt::Debug for Q {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_integer() {
            write!(f, "{}", self.numer())
        } else {
            write!(f, "{self}")
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid rational literal `{0}`")]
pub struct ParseRationalError(pub String);

impl FromStr for Q {
    type Err = ParseRationalError;

    /// Accepts `n`, `n/d` and finite decimals such as `0.25` or `-1.5`.
    fn from_str(s: &str) -> Result<Q, Self::Err> {
        let t = s.trim();
        let err = || ParseRationalError(s.to_string());
        if let Some((n, d)) = t.split_once('/') {
            let n: BigInt = n.trim().parse().map_err(|_| err())?;
            let d: BigInt = d.trim().parse().map_err(|_| err())?;
            if d.is_zero() {
                return Err(err());
            }
            return Ok(Q::from_bigints(n, d));
        }
        if let Some((ip, fp)) = t.split_once('.') {
            if fp.is_empty() || !fp.chars().all(|c| c.is_ascii_digit()) {
                return Err(err());
            }
            let neg = ip.starts_with('-');
            let ip_abs = ip.trim_start_matches(['-', '+']);
            let whole: BigInt = if ip_abs.is_empty() {
                BigInt::zero()
            } else {
                ip_abs.parse().map_err(|_| err())?
            };
            let frac: BigInt = fp.parse().map_err(|_| err())?;
            let scale = num_traits::pow(BigInt::from(10), fp.len());
            let mut n = whole * &scale + frac;
            if neg {
                n = -n;
            }
            return Ok(Q::from_bigints(n, scale));
        }
        let n: BigInt = t.parse().map_err(|_| err())?;
        Ok(Q::from_bigints(n, BigInt::one()))
    }
}

impl Serialize for Q {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Q {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Q, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
