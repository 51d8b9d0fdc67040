//! Exact arithmetic over rationals extended by square roots of integers.
//!
//! Memory-sharing quantities such as `S_I = Σ √(N_i U_i)` are irrational, and
//! partition membership hinges on comparisons that can land exactly on a
//! boundary. [`Real`] keeps such values symbolically as a quotient of two
//! [`SurdSum`]s. Every [`SurdSum`] is kept in a normal form where each term's
//! radicand lies in a distinct square class, so the square roots involved are
//! linearly independent over the rationals and a sum is zero exactly when it
//! has no terms. Signs of nonzero sums are then decided by interval evaluation
//! with doubling precision, which always terminates.

use std::cell::RefCell;
use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::OnceLock;

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Exact rational number used for memories, rates and bound values.
pub type Rational = BigRational;

/// Environment variable holding the starting precision (in bits) for
/// certified sign decisions.
pub const PRECISION_ENV: &str = "CACHELAB_PRECISION_BITS";

const DEFAULT_PRECISION_BITS: u32 = 256;
const MAX_PRECISION_BITS: u32 = 1 << 22;
const TRIAL_PRIME_LIMIT: u32 = 1 << 16;

/// Precision floor for certified comparisons, read once from
/// `CACHELAB_PRECISION_BITS` (default 256).
pub fn precision_floor() -> u32 {
    static FLOOR: OnceLock<u32> = OnceLock::new();
    *FLOOR.get_or_init(|| {
        std::env::var(PRECISION_ENV)
            .ok()
            .and_then(|v| v.trim().parse::<u32>().ok())
            .filter(|&b| b >= 8)
            .unwrap_or(DEFAULT_PRECISION_BITS)
    })
}

fn small_primes() -> &'static [u32] {
    static PRIMES: OnceLock<Vec<u32>> = OnceLock::new();
    PRIMES.get_or_init(|| {
        let n = TRIAL_PRIME_LIMIT as usize;
        let mut composite = vec![false; n];
        let mut primes = Vec::new();
        for i in 2..n {
            if !composite[i] {
                primes.push(i as u32);
                let mut j = i * i;
                while j < n {
                    composite[j] = true;
                    j += i;
                }
            }
        }
        primes
    })
}

/// Convenience constructor for `n / d`.
pub fn ratio(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

/// Convenience constructor for an integer rational.
pub fn int(n: u64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

fn perfect_sqrt(n: &BigUint) -> Option<BigUint> {
    let r = n.sqrt();
    if &r * &r == *n {
        Some(r)
    } else {
        None
    }
}

/// A square-class representative: the product of a set of distinct small
/// primes and a cofactor with no prime factor below 2^16 that is not a
/// perfect square (or 1).
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
struct Radicand {
    primes: Vec<u32>,
    big: BigUint,
}

impl Radicand {
    fn one() -> Self {
        Radicand {
            primes: Vec::new(),
            big: BigUint::one(),
        }
    }

    fn is_one(&self) -> bool {
        self.primes.is_empty() && self.big.is_one()
    }

    fn value(&self) -> BigUint {
        let mut v = self.big.clone();
        for &p in &self.primes {
            v *= p;
        }
        v
    }

    /// Splits a positive integer into `outside^2 * radicand`.
    fn reduce(n: &BigUint) -> (BigUint, Radicand) {
        debug_assert!(!n.is_zero());
        let mut rest = n.clone();
        let mut outside = BigUint::one();
        let mut primes = Vec::new();
        for &p in small_primes() {
            if rest.is_one() {
                break;
            }
            let pb = BigUint::from(p);
            if &pb * &pb > rest {
                // `rest` is prime or one
                break;
            }
            let mut exp = 0u32;
            loop {
                let (q, r) = rest.div_rem(&pb);
                if !r.is_zero() {
                    break;
                }
                rest = q;
                exp += 1;
            }
            if exp > 0 {
                outside *= pb.pow(exp / 2);
                if exp % 2 == 1 {
                    primes.push(p);
                }
            }
        }
        // Leftover below the trial limit is a small prime.
        if rest > BigUint::one() && rest < BigUint::from(TRIAL_PRIME_LIMIT) {
            let p = rest.to_u32().unwrap();
            primes.push(p);
            primes.sort_unstable();
            rest = BigUint::one();
        }
        if let Some(r) = perfect_sqrt(&rest) {
            outside *= r;
            rest = BigUint::one();
        }
        (outside, Radicand { primes, big: rest })
    }

    /// `√self · √other = coef · √result`.
    fn mul(&self, other: &Radicand) -> (BigUint, Radicand) {
        let mut coef = BigUint::one();
        let mut primes = Vec::with_capacity(self.primes.len() + other.primes.len());
        let (mut i, mut j) = (0, 0);
        while i < self.primes.len() || j < other.primes.len() {
            match (self.primes.get(i), other.primes.get(j)) {
                (Some(&a), Some(&b)) if a == b => {
                    coef *= a;
                    i += 1;
                    j += 1;
                }
                (Some(&a), Some(&b)) if a < b => {
                    primes.push(a);
                    i += 1;
                }
                (Some(_), Some(&b)) => {
                    primes.push(b);
                    j += 1;
                }
                (Some(&a), None) => {
                    primes.push(a);
                    i += 1;
                }
                (None, Some(&b)) => {
                    primes.push(b);
                    j += 1;
                }
                (None, None) => unreachable!(),
            }
        }
        let big = if self.big.is_one() {
            other.big.clone()
        } else if other.big.is_one() {
            self.big.clone()
        } else {
            let g = self.big.gcd(&other.big);
            coef *= &g;
            let rest = (&self.big / &g) * (&other.big / &g);
            match perfect_sqrt(&rest) {
                Some(r) => {
                    coef *= r;
                    BigUint::one()
                }
                None => rest,
            }
        };
        (coef, Radicand { primes, big })
    }

    /// If `√other = factor · √self` for a rational factor, returns it.
    fn class_factor(&self, other: &Radicand) -> Option<Rational> {
        if self.primes != other.primes {
            return None;
        }
        if self.big == other.big {
            return Some(Rational::one());
        }
        if self.big.is_one() || other.big.is_one() {
            return None;
        }
        let prod = &self.big * &other.big;
        perfect_sqrt(&prod).map(|q| {
            Rational::new(
                BigInt::from_biguint(Sign::Plus, q),
                BigInt::from_biguint(Sign::Plus, self.big.clone()),
            )
        })
    }
}

fn biguint_to_rational(n: BigUint) -> Rational {
    Rational::from_integer(BigInt::from_biguint(Sign::Plus, n))
}

thread_local! {
    static SQRT_CACHE: RefCell<HashMap<(BigUint, u32), BigUint>> = RefCell::new(HashMap::new());
}

/// `floor(√v · 2^bits)`.
fn scaled_isqrt(v: &BigUint, bits: u32) -> BigUint {
    SQRT_CACHE.with(|cache| {
        let key = (v.clone(), bits);
        if let Some(hit) = cache.borrow().get(&key) {
            return hit.clone();
        }
        let s = (v << (2 * bits as usize)).sqrt();
        let mut c = cache.borrow_mut();
        if c.len() > 1 << 16 {
            c.clear();
        }
        c.insert(key, s.clone());
        s
    })
}

/// A finite sum `Σ c_k √d_k` with rational `c_k` and pairwise independent
/// square roots.
#[derive(Clone, Debug, Default)]
pub struct SurdSum {
    terms: Vec<(Radicand, Rational)>,
}

impl SurdSum {
    pub fn zero() -> Self {
        SurdSum { terms: Vec::new() }
    }

    pub fn from_rational(q: Rational) -> Self {
        let mut s = SurdSum::zero();
        s.add_term(Radicand::one(), q);
        s
    }

    /// `c · √n` for a nonnegative integer `n`.
    pub fn sqrt_int(n: &BigUint, c: Rational) -> Self {
        if n.is_zero() {
            return SurdSum::zero();
        }
        let (outside, rad) = Radicand::reduce(n);
        let mut s = SurdSum::zero();
        s.add_term(rad, c * biguint_to_rational(outside));
        s
    }

    /// `√q` for a nonnegative rational `q`.
    pub fn sqrt_rational(q: &Rational) -> Self {
        assert!(!q.is_negative(), "square root of a negative rational");
        // √(a/b) = √(ab) / b
        let a = q.numer().to_biguint().unwrap();
        let b = q.denom().to_biguint().unwrap();
        let inv_b = Rational::new(BigInt::one(), q.denom().clone());
        SurdSum::sqrt_int(&(a * b), inv_b)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    /// The value as a rational, if it has no irrational part.
    pub fn as_rational(&self) -> Option<Rational> {
        match self.terms.as_slice() {
            [] => Some(Rational::zero()),
            [(r, c)] if r.is_one() => Some(c.clone()),
            _ => None,
        }
    }

    fn add_term(&mut self, rad: Radicand, coef: Rational) {
        if coef.is_zero() {
            return;
        }
        let mut hit = None;
        for (idx, (r, _)) in self.terms.iter().enumerate() {
            if let Some(f) = r.class_factor(&rad) {
                hit = Some((idx, f));
                break;
            }
        }
        match hit {
            Some((idx, f)) => {
                let c = &mut self.terms[idx].1;
                *c += coef * f;
                if c.is_zero() {
                    self.terms.remove(idx);
                }
            }
            None => {
                let pos = self.terms.binary_search_by(|(r, _)| r.cmp(&rad)).unwrap_or_else(|p| p);
                self.terms.insert(pos, (rad, coef));
            }
        }
    }

    pub fn scale(&self, q: &Rational) -> Self {
        if q.is_zero() {
            return SurdSum::zero();
        }
        SurdSum {
            terms: self.terms.iter().map(|(r, c)| (r.clone(), c * q)).collect(),
        }
    }

    /// Certified enclosure `[lo, hi]` of the value scaled by `den · 2^bits`,
    /// returned as integers together with the common scale.
    fn enclosure(&self, bits: u32) -> (BigInt, BigInt, BigInt) {
        let mut den = BigInt::one();
        for (_, c) in &self.terms {
            den = den.lcm(c.denom());
        }
        let one_scaled = BigInt::one() << bits as usize;
        let mut lo = BigInt::zero();
        let mut hi = BigInt::zero();
        for (r, c) in &self.terms {
            let a = c.numer() * (&den / c.denom());
            if r.is_one() {
                let v = &a * &one_scaled;
                lo += &v;
                hi += v;
                continue;
            }
            let s = BigInt::from_biguint(Sign::Plus, scaled_isqrt(&r.value(), bits));
            let s1 = &s + 1;
            if a.is_positive() {
                lo += &a * &s;
                hi += &a * s1;
            } else {
                lo += &a * s1;
                hi += &a * s;
            }
        }
        (lo, hi, den << bits as usize)
    }

    /// Exact sign, decided by refining an interval enclosure.
    pub fn signum(&self) -> Ordering {
        if self.terms.is_empty() {
            return Ordering::Equal;
        }
        if let Some(q) = self.as_rational() {
            return q.cmp(&Rational::zero());
        }
        let mut bits = precision_floor();
        loop {
            let (lo, hi, _) = self.enclosure(bits);
            if lo.is_positive() {
                return Ordering::Greater;
            }
            if hi.is_negative() {
                return Ordering::Less;
            }
            assert!(
                bits < MAX_PRECISION_BITS,
                "sign of a nonzero surd sum not resolved at {bits} bits"
            );
            bits *= 2;
        }
    }

    /// Rational enclosure of the value at the given precision.
    pub fn bounds(&self, bits: u32) -> (Rational, Rational) {
        let (lo, hi, scale) = self.enclosure(bits);
        (Rational::new(lo, scale.clone()), Rational::new(hi, scale))
    }
}

impl PartialEq for SurdSum {
    fn eq(&self, other: &Self) -> bool {
        (self - other).is_zero()
    }
}

impl<'a> Add<&'a SurdSum> for &'a SurdSum {
    type Output = SurdSum;
    fn add(self, rhs: &SurdSum) -> SurdSum {
        let mut out = self.clone();
        for (r, c) in &rhs.terms {
            out.add_term(r.clone(), c.clone());
        }
        out
    }
}

impl<'a> Sub<&'a SurdSum> for &'a SurdSum {
    type Output = SurdSum;
    fn sub(self, rhs: &SurdSum) -> SurdSum {
        let mut out = self.clone();
        for (r, c) in &rhs.terms {
            out.add_term(r.clone(), -c.clone());
        }
        out
    }
}

impl<'a> Mul<&'a SurdSum> for &'a SurdSum {
    type Output = SurdSum;
    fn mul(self, rhs: &SurdSum) -> SurdSum {
        let mut out = SurdSum::zero();
        for (r1, c1) in &self.terms {
            for (r2, c2) in &rhs.terms {
                let (k, r) = r1.mul(r2);
                out.add_term(r, c1 * c2 * biguint_to_rational(k));
            }
        }
        out
    }
}

impl Neg for &SurdSum {
    type Output = SurdSum;
    fn neg(self) -> SurdSum {
        SurdSum {
            terms: self.terms.iter().map(|(r, c)| (r.clone(), -c.clone())).collect(),
        }
    }
}

fn fmt_rational(q: &Rational, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    if q.is_integer() {
        write!(f, "{}", q.numer())
    } else {
        write!(f, "{}/{}", q.numer(), q.denom())
    }
}

impl fmt::Display for SurdSum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (idx, (r, c)) in self.terms.iter().enumerate() {
            let mag = c.abs();
            if idx == 0 {
                if c.is_negative() {
                    write!(f, "-")?;
                }
            } else if c.is_negative() {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            if r.is_one() {
                fmt_rational(&mag, f)?;
            } else {
                if !mag.is_one() {
                    fmt_rational(&mag, f)?;
                    write!(f, "*")?;
                }
                write!(f, "sqrt({})", r.value())?;
            }
        }
        Ok(())
    }
}

/// An element of the field generated by the rationals and square roots of
/// integers, stored as `num / den`.
#[derive(Clone, Debug)]
pub struct Real {
    num: SurdSum,
    den: SurdSum,
}

impl Real {
    pub fn zero() -> Self {
        Real::from(Rational::zero())
    }

    pub fn one() -> Self {
        Real::from(Rational::one())
    }

    pub fn from_integer(n: u64) -> Self {
        Real::from(int(n))
    }

    pub fn from_surds(num: SurdSum, den: SurdSum) -> Self {
        assert!(!den.is_zero(), "division by zero");
        Real { num, den }.normalized()
    }

    /// `√q` for a nonnegative rational.
    pub fn sqrt(q: &Rational) -> Self {
        Real::from_surds(SurdSum::sqrt_rational(q), SurdSum::from_rational(Rational::one()))
    }

    fn normalized(mut self) -> Self {
        if self.num.is_zero() {
            self.den = SurdSum::from_rational(Rational::one());
            return self;
        }
        if self.den.term_count() == 1 {
            let (r, c) = self.den.terms[0].clone();
            if r.is_one() {
                self.num = self.num.scale(&c.recip());
            } else {
                // a / (c√r) = a·√r / (c·r)
                let root = SurdSum {
                    terms: vec![(r.clone(), Rational::one())],
                };
                let scale = (c * biguint_to_rational(r.value())).recip();
                self.num = (&self.num * &root).scale(&scale);
            }
            self.den = SurdSum::from_rational(Rational::one());
        }
        self
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn signum(&self) -> Ordering {
        let a = self.num.signum();
        match self.den.signum() {
            Ordering::Greater => a,
            Ordering::Less => a.reverse(),
            Ordering::Equal => unreachable!("zero denominator"),
        }
    }

    pub fn is_positive(&self) -> bool {
        self.signum() == Ordering::Greater
    }

    pub fn is_negative(&self) -> bool {
        self.signum() == Ordering::Less
    }

    /// The exact rational value, if the number is rational.
    pub fn as_rational(&self) -> Option<Rational> {
        let n = self.num.as_rational()?;
        let d = self.den.as_rational()?;
        Some(n / d)
    }

    /// Certified rational enclosure `lo ≤ x ≤ hi`.
    pub fn enclose(&self, bits: u32) -> (Rational, Rational) {
        let mut bits = bits.max(8);
        loop {
            let (nl, nh) = self.num.bounds(bits);
            let (dl, dh) = self.den.bounds(bits);
            if dl.is_positive() || dh.is_negative() {
                let cands = [&nl / &dl, &nl / &dh, &nh / &dl, &nh / &dh];
                let lo = cands.iter().min().unwrap().clone();
                let hi = cands.iter().max().unwrap().clone();
                return (lo, hi);
            }
            bits *= 2;
        }
    }

    pub fn to_f64(&self) -> f64 {
        if let Some(q) = self.as_rational() {
            return rational_to_f64(&q);
        }
        let (lo, hi) = self.enclose(128);
        rational_to_f64(&((lo + hi) / int(2)))
    }

    /// Largest integer `n ≤ self`.
    pub fn floor(&self) -> BigInt {
        if let Some(q) = self.as_rational() {
            return q.floor().to_integer();
        }
        let mut bits = 64;
        loop {
            let (lo, hi) = self.enclose(bits);
            let fl = lo.floor().to_integer();
            let fh = hi.floor().to_integer();
            if fl == fh {
                return fl;
            }
            if &fh - &fl == BigInt::one() && self.cmp_rational(&Rational::from_integer(fh.clone())) == Ordering::Equal {
                return fh;
            }
            bits *= 2;
        }
    }

    /// Smallest integer `n ≥ self`.
    pub fn ceil(&self) -> BigInt {
        -(-self).floor()
    }

    pub fn cmp_rational(&self, q: &Rational) -> Ordering {
        (self - &Real::from(q.clone())).signum()
    }

    pub fn max(self, other: Real) -> Real {
        if self >= other {
            self
        } else {
            other
        }
    }

    pub fn min(self, other: Real) -> Real {
        if self <= other {
            self
        } else {
            other
        }
    }

    /// Decimal rendering with `digits` significant digits.
    pub fn to_decimal(&self, digits: usize) -> String {
        let (lo, hi) = self.enclose(96 + 4 * digits as u32);
        format_significant(&((lo + hi) / int(2)), digits)
    }
}

fn rational_to_f64(q: &Rational) -> f64 {
    // Shift into f64 range before dividing to keep precision for large parts.
    let n = q.numer().to_f64();
    let d = q.denom().to_f64();
    match (n, d) {
        (Some(n), Some(d)) if n.is_finite() && d.is_finite() && d != 0.0 => n / d,
        _ => {
            let bits = q.numer().bits() as i64 - q.denom().bits() as i64;
            let shift = 60 - bits;
            let scaled = if shift >= 0 {
                (q * Rational::from_integer(BigInt::one() << shift as usize)).to_integer()
            } else {
                (q / Rational::from_integer(BigInt::one() << (-shift) as usize)).to_integer()
            };
            scaled.to_f64().unwrap_or(0.0) * 2f64.powi(-shift as i32)
        }
    }
}

/// Formats a rational with `digits` significant decimal digits, trimming
/// trailing zeros. Deterministic across platforms.
pub fn format_significant(q: &Rational, digits: usize) -> String {
    if q.is_zero() {
        return "0".to_string();
    }
    let neg = q.is_negative();
    let mag = q.abs();
    // exponent e with 10^e ≤ mag < 10^(e+1)
    let mut e: i64 = mag.numer().to_string().len() as i64 - mag.denom().to_string().len() as i64;
    let pow10 = |k: i64| -> Rational {
        if k >= 0 {
            Rational::from_integer(BigInt::from(10u32).pow(k as u32))
        } else {
            Rational::new(BigInt::one(), BigInt::from(10u32).pow((-k) as u32))
        }
    };
    while pow10(e) > mag {
        e -= 1;
    }
    while pow10(e + 1) <= mag {
        e += 1;
    }
    let scale = digits as i64 - 1 - e;
    let scaled = &mag * pow10(scale);
    // round half up
    let mut m = (scaled + ratio(1, 2)).floor().to_integer();
    let mut scale = scale;
    if m.to_string().len() > digits {
        m /= 10;
        scale -= 1;
    }
    let s = m.to_string();
    let body = if scale <= 0 {
        let zeros = "0".repeat((-scale) as usize);
        format!("{s}{zeros}")
    } else {
        let scale = scale as usize;
        let padded = if s.len() <= scale {
            format!("{}{}", "0".repeat(scale - s.len() + 1), s)
        } else {
            s
        };
        let (int_part, frac) = padded.split_at(padded.len() - scale);
        let frac = frac.trim_end_matches('0');
        if frac.is_empty() {
            int_part.to_string()
        } else {
            format!("{int_part}.{frac}")
        }
    };
    if neg {
        format!("-{body}")
    } else {
        body
    }
}

impl From<Rational> for Real {
    fn from(q: Rational) -> Self {
        Real {
            num: SurdSum::from_rational(q),
            den: SurdSum::from_rational(Rational::one()),
        }
    }
}

impl From<SurdSum> for Real {
    fn from(s: SurdSum) -> Self {
        Real {
            num: s,
            den: SurdSum::from_rational(Rational::one()),
        }
    }
}

impl<'a> Add<&'a Real> for &'a Real {
    type Output = Real;
    fn add(self, rhs: &Real) -> Real {
        if (&self.den - &rhs.den).is_zero() {
            return Real::from_surds(&self.num + &rhs.num, self.den.clone());
        }
        Real::from_surds(&(&self.num * &rhs.den) + &(&rhs.num * &self.den), &self.den * &rhs.den)
    }
}

impl<'a> Sub<&'a Real> for &'a Real {
    type Output = Real;
    fn sub(self, rhs: &Real) -> Real {
        self + &(-rhs)
    }
}

impl<'a> Mul<&'a Real> for &'a Real {
    type Output = Real;
    fn mul(self, rhs: &Real) -> Real {
        Real::from_surds(&self.num * &rhs.num, &self.den * &rhs.den)
    }
}

impl<'a> Div<&'a Real> for &'a Real {
    type Output = Real;
    fn div(self, rhs: &Real) -> Real {
        assert!(!rhs.is_zero(), "division by zero");
        Real::from_surds(&self.num * &rhs.den, &self.den * &rhs.num)
    }
}

impl Neg for &Real {
    type Output = Real;
    fn neg(self) -> Real {
        Real {
            num: -&self.num,
            den: self.den.clone(),
        }
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr<Real> for Real {
            type Output = Real;
            fn $m(self, rhs: Real) -> Real {
                (&self).$m(&rhs)
            }
        }
        impl<'a> $tr<&'a Real> for Real {
            type Output = Real;
            fn $m(self, rhs: &Real) -> Real {
                (&self).$m(rhs)
            }
        }
        impl $tr<Rational> for Real {
            type Output = Real;
            fn $m(self, rhs: Rational) -> Real {
                (&self).$m(&Real::from(rhs))
            }
        }
        impl<'a> $tr<&'a Rational> for &'a Real {
            type Output = Real;
            fn $m(self, rhs: &Rational) -> Real {
                self.$m(&Real::from(rhs.clone()))
            }
        }
    };
}

forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);
forward_owned!(Div, div);

impl Neg for Real {
    type Output = Real;
    fn neg(self) -> Real {
        -&self
    }
}

impl PartialEq for Real {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Real {}

impl PartialOrd for Real {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Real {
    fn cmp(&self, other: &Self) -> Ordering {
        if let (Some(a), Some(b)) = (self.as_rational(), other.as_rational()) {
            return a.cmp(&b);
        }
        (self - other).signum()
    }
}

impl PartialEq<Rational> for Real {
    fn eq(&self, other: &Rational) -> bool {
        self.cmp_rational(other) == Ordering::Equal
    }
}

impl PartialOrd<Rational> for Real {
    fn partial_cmp(&self, other: &Rational) -> Option<Ordering> {
        Some(self.cmp_rational(other))
    }
}

impl fmt::Display for Real {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(q) = self.as_rational() {
            return fmt_rational(&q, f);
        }
        match self.den.as_rational() {
            Some(d) if d.is_one() => write!(f, "{}", self.num),
            _ => write!(f, "({})/({})", self.num, self.den),
        }
    }
}

/// Renders a rational as `p` or `p/q`.
pub fn rational_string(q: &Rational) -> String {
    if q.is_integer() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

/// Parses `p`, `p/q`, or a finite decimal such as `0.75` into an exact
/// rational.
pub fn parse_rational(s: &str) -> Option<Rational> {
    let s = s.trim();
    if let Some((p, q)) = s.split_once('/') {
        let p: BigInt = p.trim().parse().ok()?;
        let q: BigInt = q.trim().parse().ok()?;
        if q.is_zero() {
            return None;
        }
        return Some(Rational::new(p, q));
    }
    if let Some((ip, fp)) = s.split_once('.') {
        let neg = ip.starts_with('-');
        let ip = ip.trim_start_matches(['-', '+']);
        if !fp.chars().all(|c| c.is_ascii_digit()) || !ip.chars().all(|c| c.is_ascii_digit()) {
            return None;
        }
        let digits = format!("{}{}", if ip.is_empty() { "0" } else { ip }, fp);
        let n: BigInt = digits.parse().ok()?;
        let d = BigInt::from(10u32).pow(fp.len() as u32);
        let q = Rational::new(n, d);
        return Some(if neg { -q } else { q });
    }
    let n: BigInt = s.parse().ok()?;
    Some(Rational::from_integer(n))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sq(n: u64) -> Real {
        Real::sqrt(&int(n))
    }

    #[test]
    fn perfect_squares_collapse_to_rationals() {
        assert_eq!(sq(16).as_rational(), Some(int(4)));
        assert_eq!(Real::sqrt(&ratio(9, 4)).as_rational(), Some(ratio(3, 2)));
        assert_eq!(sq(0).as_rational(), Some(int(0)));
    }

    #[test]
    fn square_classes_merge() {
        // √8 = 2√2, √18 = 3√2, so √8 + √18 − 5√2 = 0
        let x = &(&sq(8) + &sq(18)) - &(sq(2) * int(5));
        assert!(x.is_zero());
        // √12·√3 = 6
        assert_eq!((sq(12) * sq(3)).as_rational(), Some(int(6)));
    }

    #[test]
    fn large_prime_cofactors_are_compared_by_class() {
        // 1_000_003 is prime and above the trial-division limit
        let p = 1_000_003u64;
        let a = sq(p * 4);
        let b = sq(p * 9);
        assert!((&(a * int(3)) - &(b * int(2))).is_zero());
        let c = sq(p) * sq(p);
        assert_eq!(c.as_rational(), Some(int(p)));
        // p·q with q another large prime; √(pq)·√(pq) = pq
        let q = 1_000_033u64;
        let pq = sq(p) * sq(q);
        assert_eq!((&pq * &pq).as_rational(), Some(int(p) * int(q)));
    }

    #[test]
    fn signs_and_ordering() {
        // √2 + √3 vs √10: 5 + 2√6 ≈ 9.899 < 10
        let lhs = &sq(2) + &sq(3);
        assert!(lhs < sq(10));
        assert!(sq(2) > ratio(1414, 1000));
        assert!(sq(2) < ratio(1415, 1000));
        let inv = &Real::one() / &(&sq(2) + &sq(3));
        // 1/(√2+√3) = √3 − √2
        assert!((&inv - &(&sq(3) - &sq(2))).is_zero());
    }

    #[test]
    fn floor_and_ceil_are_exact_at_integers() {
        let x = &(&sq(2) + &sq(2)) * &sq(2); // = 4
        assert_eq!(x.floor(), BigInt::from(4));
        assert_eq!(x.ceil(), BigInt::from(4));
        let y = sq(2) * int(100);
        assert_eq!(y.floor(), BigInt::from(141));
        assert_eq!(y.ceil(), BigInt::from(142));
        assert_eq!((-y).floor(), BigInt::from(-142));
    }

    #[test]
    fn decimal_formatting() {
        assert_eq!(format_significant(&int(6), 12), "6");
        assert_eq!(format_significant(&ratio(10, 9), 12), "1.11111111111");
        assert_eq!(format_significant(&ratio(-5, 6), 3), "-0.833");
        assert_eq!(format_significant(&ratio(1, 1000), 2), "0.001");
        assert_eq!(format_significant(&int(123456), 2), "120000");
        assert_eq!(format_significant(&ratio(999, 1000), 2), "1");
        assert_eq!(sq(2).to_decimal(12), "1.41421356237");
    }

    #[test]
    fn parsing() {
        assert_eq!(parse_rational("3/4"), Some(ratio(3, 4)));
        assert_eq!(parse_rational("0.1"), Some(ratio(1, 10)));
        assert_eq!(parse_rational("-2.50"), Some(ratio(-5, 2)));
        assert_eq!(parse_rational("7"), Some(int(7)));
        assert_eq!(parse_rational("1/0"), None);
        assert_eq!(parse_rational("abc"), None);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn sign_matches_float(a in 1u64..5000, b in 1u64..5000, c in -50i64..50, d in -50i64..50) {
                let x = &(sq(a) * ratio(c, 1)) + &(sq(b) * ratio(d, 1));
                let f = c as f64 * (a as f64).sqrt() + d as f64 * (b as f64).sqrt();
                if f.abs() > 1e-6 {
                    prop_assert_eq!(x.is_positive(), f > 0.0);
                }
            }

            #[test]
            fn division_round_trips(a in 1u64..500, b in 1u64..500, c in 1u64..500) {
                let x = &sq(a) + &sq(b);
                let y = &sq(c) + &Real::from(int(1));
                let z = &(&x / &y) * &y;
                prop_assert!((&z - &x).is_zero());
            }
        }
    }
}
