//! Arbitrary-precision interval arithmetic with outward rounding.
//!
//! Endpoints are MPFR floats. Every operation rounds the lower endpoint
//! toward -inf and the upper endpoint toward +inf, so the returned interval
//! always contains the exact image of the operands.

use std::cmp::Ordering;
use std::fmt;

use rug::float::Round;
use rug::ops::{AddAssignRound, AssignRound};
use rug::{Float, Integer};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_PRECISION_BITS: u32 = 256;

/// Significand bits used for interval endpoints.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Precision(u32);

impl Precision {
    pub fn new(bits: u32) -> Result<Self> {
        if !(53..=1 << 20).contains(&bits) {
            return Err(Error::InvalidArgument(format!(
                "precision must be in [53, 2^20] bits, got {bits}"
            )));
        }
        Ok(Precision(bits))
    }

    pub fn bits(self) -> u32 {
        self.0
    }

    pub fn doubled(self) -> Self {
        Precision(self.0.saturating_mul(2))
    }

    pub fn with_guard(self, extra: u32) -> Self {
        Precision(self.0 + extra)
    }
}

impl Default for Precision {
    fn default() -> Self {
        Precision(DEFAULT_PRECISION_BITS)
    }
}

impl fmt::Display for Precision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} bits", self.0)
    }
}

/// Operations accepted by [`apply`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Op {
    Add,
    Sub,
    Mul,
    Div,
    Sqrt,
    Log,
    Exp,
    Pow2,
    Abs,
    Min,
    Max,
}

impl Op {
    pub fn arity(self) -> usize {
        match self {
            Op::Add | Op::Sub | Op::Mul | Op::Div | Op::Min | Op::Max => 2,
            Op::Sqrt | Op::Log | Op::Exp | Op::Pow2 | Op::Abs => 1,
        }
    }
}

/// Closed interval `[lo, hi]` with finite MPFR endpoints and `lo <= hi`.
#[derive(Clone, PartialEq)]
pub struct Interval {
    lo: Float,
    hi: Float,
}

fn down<T>(prec: u32, v: T) -> Float
where
    Float: AssignRound<T, Round = Round, Ordering = Ordering>,
{
    Float::with_val_round(prec, v, Round::Down).0
}

fn up<T>(prec: u32, v: T) -> Float
where
    Float: AssignRound<T, Round = Round, Ordering = Ordering>,
{
    Float::with_val_round(prec, v, Round::Up).0
}

fn nonneg(x: &Float) -> bool {
    *x >= 0
}

fn nonpos(x: &Float) -> bool {
    *x <= 0
}

type FactorPair<'a> = (&'a Float, &'a Float);

impl Interval {
    /// Builds `[lo, hi]`, rejecting NaN, infinities, and reversed endpoints.
    pub fn from_floats(lo: Float, hi: Float) -> Result<Self> {
        if !lo.is_finite() || !hi.is_finite() {
            return Err(Error::Domain {
                op: "interval",
                detail: "non-finite endpoint".into(),
            });
        }
        if lo > hi {
            return Err(Error::Domain {
                op: "interval",
                detail: format!("lo {lo} > hi {hi}"),
            });
        }
        Ok(Interval { lo, hi })
    }

    fn raw(lo: Float, hi: Float) -> Self {
        debug_assert!(lo.is_finite() && hi.is_finite(), "non-finite endpoint");
        debug_assert!(lo <= hi, "reversed interval");
        Interval { lo, hi }
    }

    pub fn zero(prec: Precision) -> Self {
        Self::raw(Float::new(prec.bits()), Float::new(prec.bits()))
    }

    pub fn one(prec: Precision) -> Self {
        Self::from_i64(1, prec)
    }

    pub fn from_i64(v: i64, prec: Precision) -> Self {
        Self::raw(down(prec.bits(), v), up(prec.bits(), v))
    }

    pub fn from_f64(v: f64, prec: Precision) -> Self {
        assert!(v.is_finite(), "from_f64 on non-finite value");
        Self::raw(down(prec.bits(), v), up(prec.bits(), v))
    }

    pub fn from_f64_pair(lo: f64, hi: f64, prec: Precision) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite()) {
            return Err(Error::Domain {
                op: "interval",
                detail: "non-finite endpoint".into(),
            });
        }
        Self::from_floats(down(prec.bits(), lo), up(prec.bits(), hi))
    }

    pub fn from_integer(v: &Integer, prec: Precision) -> Self {
        Self::raw(down(prec.bits(), v), up(prec.bits(), v))
    }

    /// Point interval holding `x` exactly, widened only if `prec` is smaller
    /// than the precision of `x`.
    pub fn from_float(x: &Float, prec: Precision) -> Self {
        Self::raw(down(prec.bits(), x), up(prec.bits(), x))
    }

    /// Enclosure of a decimal literal such as `"0.1"` or `"-1.5e-3"`.
    pub fn from_decimal(s: &str, prec: Precision) -> Result<Self> {
        let parse = || {
            Float::parse(s.trim()).map_err(|e| Error::Domain {
                op: "parse",
                detail: format!("{s:?}: {e}"),
            })
        };
        let lo = Float::with_val_round(prec.bits(), parse()?, Round::Down).0;
        let hi = Float::with_val_round(prec.bits(), parse()?, Round::Up).0;
        Self::from_floats(lo, hi)
    }

    /// `[value - radius, value + radius]` for decimal strings, rounded outward.
    pub fn from_decimal_radius(value: &str, radius: &str, prec: Precision) -> Result<Self> {
        let v = Self::from_decimal(value, prec)?;
        let r = Self::from_decimal(radius, prec)?;
        if r.lo < 0 {
            return Err(Error::Domain {
                op: "parse",
                detail: format!("negative radius {radius:?}"),
            });
        }
        let p = prec.bits();
        let lo = down(p, &v.lo - &r.hi);
        let hi = up(p, &v.hi + &r.hi);
        Self::from_floats(lo, hi)
    }

    pub fn lo(&self) -> &Float {
        &self.lo
    }

    pub fn hi(&self) -> &Float {
        &self.hi
    }

    pub fn prec(&self) -> u32 {
        self.lo.prec().max(self.hi.prec())
    }

    pub fn precision(&self) -> Precision {
        Precision(self.prec())
    }

    /// Re-rounds both endpoints to `prec`, outward.
    pub fn with_precision(&self, prec: Precision) -> Self {
        Self::raw(down(prec.bits(), &self.lo), up(prec.bits(), &self.hi))
    }

    pub fn lo_f64(&self) -> f64 {
        self.lo.to_f64_round(Round::Down)
    }

    pub fn hi_f64(&self) -> f64 {
        self.hi.to_f64_round(Round::Up)
    }

    pub fn mid_f64(&self) -> f64 {
        self.mid().to_f64()
    }

    pub fn mid(&self) -> Float {
        let p = self.prec() + 1;
        let mut m = Float::with_val(p, &self.lo + &self.hi);
        m >>= 1;
        m
    }

    /// Upper bound on `hi - lo`.
    pub fn width(&self) -> Float {
        up(self.prec(), &self.hi - &self.lo)
    }

    pub fn width_f64(&self) -> f64 {
        self.width().to_f64_round(Round::Up)
    }

    /// Upper bound on the distance from the midpoint to either endpoint.
    pub fn rad(&self) -> Float {
        let m = self.mid();
        let a = up(self.prec(), &m - &self.lo);
        let b = up(self.prec(), &self.hi - &m);
        a.max(&b)
    }

    /// Upper bound on `max |x|` over the interval.
    pub fn mag(&self) -> Float {
        let a = Float::with_val(self.prec(), self.lo.abs_ref());
        let b = Float::with_val(self.prec(), self.hi.abs_ref());
        a.max(&b)
    }

    pub fn mag_f64(&self) -> f64 {
        self.mag().to_f64_round(Round::Up)
    }

    pub fn is_point(&self) -> bool {
        self.lo == self.hi
    }

    pub fn contains(&self, x: &Float) -> bool {
        self.lo <= *x && *x <= self.hi
    }

    pub fn contains_f64(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn contains_zero(&self) -> bool {
        nonpos(&self.lo) && nonneg(&self.hi)
    }

    pub fn contains_interval(&self, other: &Interval) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    pub fn intersects(&self, other: &Interval) -> bool {
        self.lo <= other.hi && other.lo <= self.hi
    }

    pub fn is_positive(&self) -> bool {
        self.lo > 0
    }

    pub fn is_negative(&self) -> bool {
        self.hi < 0
    }

    fn out_prec(&self, other: &Interval) -> u32 {
        self.prec().max(other.prec())
    }

    /// Smallest interval containing both operands.
    pub fn hull(&self, other: &Interval) -> Interval {
        let p = self.out_prec(other);
        let lo = if self.lo <= other.lo { &self.lo } else { &other.lo };
        let hi = if self.hi >= other.hi { &self.hi } else { &other.hi };
        Self::raw(down(p, lo), up(p, hi))
    }

    pub fn intersect(&self, other: &Interval) -> Option<Interval> {
        if !self.intersects(other) {
            return None;
        }
        let p = self.out_prec(other);
        let lo = if self.lo >= other.lo { &self.lo } else { &other.lo };
        let hi = if self.hi <= other.hi { &self.hi } else { &other.hi };
        Some(Self::raw(down(p, lo), up(p, hi)))
    }

    /// Widens by `r >= 0` on both sides.
    pub fn inflate(&self, r: &Float) -> Interval {
        debug_assert!(*r >= 0);
        let p = self.prec();
        Self::raw(down(p, &self.lo - r), up(p, &self.hi + r))
    }

    pub fn neg(&self) -> Interval {
        Self::raw(Float::with_val(self.lo.prec(), -&self.hi), Float::with_val(self.hi.prec(), -&self.lo))
    }

    pub fn add(&self, other: &Interval) -> Interval {
        let p = self.out_prec(other);
        Self::raw(down(p, &self.lo + &other.lo), up(p, &self.hi + &other.hi))
    }

    pub fn sub(&self, other: &Interval) -> Interval {
        let p = self.out_prec(other);
        Self::raw(down(p, &self.lo - &other.hi), up(p, &self.hi - &other.lo))
    }

    /// Endpoint pairs `(lo = a*b, hi = c*d)` for the product; `None` when both
    /// operands straddle zero and two candidates must be compared.
    fn mul_pairs<'a>(&'a self, b: &'a Interval) -> Option<(FactorPair<'a>, FactorPair<'a>)> {
        let (al, ah, bl, bh) = (&self.lo, &self.hi, &b.lo, &b.hi);
        if nonneg(al) {
            if nonneg(bl) {
                Some(((al, bl), (ah, bh)))
            } else if nonpos(bh) {
                Some(((ah, bl), (al, bh)))
            } else {
                Some(((ah, bl), (ah, bh)))
            }
        } else if nonpos(ah) {
            if nonneg(bl) {
                Some(((al, bh), (ah, bl)))
            } else if nonpos(bh) {
                Some(((ah, bh), (al, bl)))
            } else {
                Some(((al, bh), (al, bl)))
            }
        } else if nonneg(bl) {
            Some(((al, bh), (ah, bh)))
        } else if nonpos(bh) {
            Some(((ah, bl), (al, bl)))
        } else {
            None
        }
    }

    pub fn mul(&self, other: &Interval) -> Interval {
        let p = self.out_prec(other);
        match self.mul_pairs(other) {
            Some(((a, b), (c, d))) => Self::raw(down(p, a * b), up(p, c * d)),
            None => {
                let l1 = down(p, &self.lo * &other.hi);
                let l2 = down(p, &self.hi * &other.lo);
                let h1 = up(p, &self.lo * &other.lo);
                let h2 = up(p, &self.hi * &other.hi);
                Self::raw(l1.min(&l2), h1.max(&h2))
            }
        }
    }

    /// `self += a * b` with a single directed rounding per endpoint.
    pub fn add_mul_assign(&mut self, a: &Interval, b: &Interval) {
        match a.mul_pairs(b) {
            Some(((x, y), (z, w))) => {
                self.lo.add_assign_round(x * y, Round::Down);
                self.hi.add_assign_round(z * w, Round::Up);
            }
            None => {
                let prod = a.mul(b);
                self.lo.add_assign_round(&prod.lo, Round::Down);
                self.hi.add_assign_round(&prod.hi, Round::Up);
            }
        }
    }

    pub fn add_assign(&mut self, other: &Interval) {
        self.lo.add_assign_round(&other.lo, Round::Down);
        self.hi.add_assign_round(&other.hi, Round::Up);
    }

    pub fn div(&self, other: &Interval) -> Result<Interval> {
        if other.contains_zero() {
            return Err(Error::Domain {
                op: "div",
                detail: "divisor interval contains zero".into(),
            });
        }
        let p = self.out_prec(other);
        let (al, ah, bl, bh) = (&self.lo, &self.hi, &other.lo, &other.hi);
        let (lo, hi) = if *bl > 0 {
            let lo = if nonneg(al) { down(p, al / bh) } else { down(p, al / bl) };
            let hi = if nonneg(ah) { up(p, ah / bl) } else { up(p, ah / bh) };
            (lo, hi)
        } else {
            let lo = if nonneg(ah) { down(p, ah / bh) } else { down(p, ah / bl) };
            let hi = if nonneg(al) { up(p, al / bl) } else { up(p, al / bh) };
            (lo, hi)
        };
        Ok(Self::raw(lo, hi))
    }

    pub fn recip(&self) -> Result<Interval> {
        Interval::one(self.precision()).div(self)
    }

    /// Exact product by an integer.
    pub fn mul_i64(&self, k: i64) -> Interval {
        let p = self.prec();
        if k >= 0 {
            Self::raw(down(p, &self.lo * k), up(p, &self.hi * k))
        } else {
            Self::raw(down(p, &self.hi * k), up(p, &self.lo * k))
        }
    }

    /// Multiplication by `2^e`, exact barring exponent overflow.
    pub fn mul_pow2(&self, e: i32) -> Interval {
        let mut lo = self.lo.clone();
        let mut hi = self.hi.clone();
        if e >= 0 {
            lo <<= e as u32;
            hi <<= e as u32;
        } else {
            lo >>= (-e) as u32;
            hi >>= (-e) as u32;
        }
        Self::raw(lo, hi)
    }

    pub fn sqr(&self) -> Interval {
        let p = self.prec();
        if nonneg(&self.lo) {
            Self::raw(down(p, self.lo.square_ref()), up(p, self.hi.square_ref()))
        } else if nonpos(&self.hi) {
            Self::raw(down(p, self.hi.square_ref()), up(p, self.lo.square_ref()))
        } else {
            let a = up(p, self.lo.square_ref());
            let b = up(p, self.hi.square_ref());
            Self::raw(Float::new(p), a.max(&b))
        }
    }

    pub fn sqrt(&self) -> Result<Interval> {
        if self.lo < 0 {
            return Err(Error::Domain {
                op: "sqrt",
                detail: format!("negative lower endpoint {}", self.lo),
            });
        }
        let p = self.prec();
        Ok(Self::raw(down(p, self.lo.sqrt_ref()), up(p, self.hi.sqrt_ref())))
    }

    /// Natural logarithm.
    pub fn ln(&self) -> Result<Interval> {
        if self.lo <= 0 {
            return Err(Error::Domain {
                op: "log",
                detail: format!("non-positive lower endpoint {}", self.lo),
            });
        }
        let p = self.prec();
        Ok(Self::raw(down(p, self.lo.ln_ref()), up(p, self.hi.ln_ref())))
    }

    pub fn log2(&self) -> Result<Interval> {
        if self.lo <= 0 {
            return Err(Error::Domain {
                op: "log2",
                detail: format!("non-positive lower endpoint {}", self.lo),
            });
        }
        let p = self.prec();
        Ok(Self::raw(down(p, self.lo.log2_ref()), up(p, self.hi.log2_ref())))
    }

    pub fn exp(&self) -> Interval {
        let p = self.prec();
        Self::raw(down(p, self.lo.exp_ref()), up(p, self.hi.exp_ref()))
    }

    /// `2^self`.
    pub fn exp2(&self) -> Interval {
        let p = self.prec();
        Self::raw(down(p, self.lo.exp2_ref()), up(p, self.hi.exp2_ref()))
    }

    pub fn abs(&self) -> Interval {
        if nonneg(&self.lo) {
            self.clone()
        } else if nonpos(&self.hi) {
            self.neg()
        } else {
            let m = Float::with_val(self.lo.prec(), -&self.lo).max(&self.hi);
            Self::raw(Float::new(self.prec()), m)
        }
    }

    pub fn min(&self, other: &Interval) -> Interval {
        let p = self.out_prec(other);
        let lo = if self.lo <= other.lo { &self.lo } else { &other.lo };
        let hi = if self.hi <= other.hi { &self.hi } else { &other.hi };
        Self::raw(down(p, lo), up(p, hi))
    }

    pub fn max(&self, other: &Interval) -> Interval {
        let p = self.out_prec(other);
        let lo = if self.lo >= other.lo { &self.lo } else { &other.lo };
        let hi = if self.hi >= other.hi { &self.hi } else { &other.hi };
        Self::raw(down(p, lo), up(p, hi))
    }

    /// Clips the lower endpoint at zero. Only valid when the enclosed
    /// quantity is known to be non-negative.
    pub fn clip_nonneg(&self) -> Interval {
        if self.lo >= 0 {
            return self.clone();
        }
        let mut hi = self.hi.clone();
        if hi < 0 {
            hi = Float::new(self.prec());
        }
        Self::raw(Float::new(self.prec()), hi)
    }

    pub fn pi(prec: Precision) -> Interval {
        let p = prec.bits();
        Self::raw(down(p, rug::float::Constant::Pi), up(p, rug::float::Constant::Pi))
    }

    /// Standard normal distribution function, enclosed.
    pub fn normal_cdf(&self) -> Interval {
        // Phi(x) = erfc(-x / sqrt 2) / 2, increasing in x.
        let p = self.prec() + 16;
        let two = Interval::from_i64(2, Precision(p));
        let s2 = two.sqrt().expect("sqrt 2");
        let z = self.neg().with_precision(Precision(p)).div(&s2).expect("sqrt 2 > 0");
        // erfc is decreasing: erfc(z.hi) <= erfc(z) <= erfc(z.lo).
        let mut lo = down(p, &z.hi);
        lo.erfc_round(Round::Down);
        let mut hi = up(p, &z.lo);
        hi.erfc_round(Round::Up);
        lo >>= 1;
        hi >>= 1;
        let q = self.prec();
        Self::raw(down(q, &lo), up(q, &hi))
    }

    /// Decimal rendering of the lower endpoint, rounded down.
    pub fn lo_decimal(&self, digits: usize) -> String {
        self.lo.to_string_radix_round(10, Some(digits), Round::Down)
    }

    /// Decimal rendering of the upper endpoint, rounded up.
    pub fn hi_decimal(&self, digits: usize) -> String {
        self.hi.to_string_radix_round(10, Some(digits), Round::Up)
    }
}

impl fmt::Debug for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo_decimal(20), self.hi_decimal(20))
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let digits = f.precision().unwrap_or(12);
        write!(f, "[{}, {}]", self.lo_decimal(digits), self.hi_decimal(digits))
    }
}

/// Serialized as `{"lo": "...", "hi": "..."}` with outward-rounded decimal
/// strings, so no endpoint passes through a binary64.
impl Serialize for Interval {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("Interval", 2)?;
        st.serialize_field("lo", &self.lo_decimal(30))?;
        st.serialize_field("hi", &self.hi_decimal(30))?;
        st.end()
    }
}

/// Applies `op` to `args` at precision `prec`.
pub fn apply(op: Op, args: &[Interval], prec: Precision) -> Result<Interval> {
    if args.len() != op.arity() {
        return Err(Error::InvalidArgument(format!(
            "{op:?} takes {} operands, got {}",
            op.arity(),
            args.len()
        )));
    }
    let a = args[0].with_precision(prec);
    let out = match op {
        Op::Add => a.add(&args[1].with_precision(prec)),
        Op::Sub => a.sub(&args[1].with_precision(prec)),
        Op::Mul => a.mul(&args[1].with_precision(prec)),
        Op::Div => a.div(&args[1].with_precision(prec))?,
        Op::Min => a.min(&args[1].with_precision(prec)),
        Op::Max => a.max(&args[1].with_precision(prec)),
        Op::Sqrt => a.sqrt()?,
        Op::Log => a.ln()?,
        Op::Exp => a.exp(),
        Op::Pow2 => a.sqr(),
        Op::Abs => a.abs(),
    };
    Ok(out.with_precision(prec))
}

/// Sum with one directed rounding per term and endpoint.
pub fn sum<'a, I>(items: I, prec: Precision) -> Interval
where
    I: IntoIterator<Item = &'a Interval>,
{
    let mut acc = Interval::zero(prec);
    for x in items {
        acc.add_assign(x);
    }
    acc
}

/// Hull of a non-empty sequence.
pub fn hull_all<'a, I>(items: I) -> Option<Interval>
where
    I: IntoIterator<Item = &'a Interval>,
{
    let mut it = items.into_iter();
    let first = it.next()?.clone();
    Some(it.fold(first, |acc, x| acc.hull(x)))
}


#[cfg(test)]
mod fuzz {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const ORACLE_BITS: u32 = 1024;

    fn point(rng: &mut ChaCha8Rng, iv: (f64, f64)) -> f64 {
        let t: f64 = rng.random();
        (iv.0 + t * (iv.1 - iv.0)).clamp(iv.0, iv.1)
    }

    fn operand(rng: &mut ChaCha8Rng, positive: bool) -> (f64, f64) {
        let scale = 10f64.powi(rng.random_range(-3..4));
        let a: f64 = rng.random_range(-1.0..1.0) * scale;
        let w: f64 = rng.random::<f64>() * scale * 0.1;
        let a = if positive { a.abs() + 1e-3 } else { a };
        (a, a + w)
    }

    /// Oracle bracket of `op(x, y)` at 1024 bits, rounded down and up.
    fn oracle(op: Op, x: f64, y: f64) -> (Float, Float) {
        let run = |r: Round| {
            let p = ORACLE_BITS;
            let fx = Float::with_val(p, x);
            let fy = Float::with_val(p, y);
            match op {
                Op::Add => Float::with_val_round(p, &fx + &fy, r).0,
                Op::Sub => Float::with_val_round(p, &fx - &fy, r).0,
                Op::Mul => Float::with_val_round(p, &fx * &fy, r).0,
                Op::Div => Float::with_val_round(p, &fx / &fy, r).0,
                Op::Sqrt => Float::with_val_round(p, fx.sqrt_ref(), r).0,
                Op::Log => Float::with_val_round(p, fx.ln_ref(), r).0,
                Op::Exp => Float::with_val_round(p, fx.exp_ref(), r).0,
                Op::Pow2 => Float::with_val_round(p, fx.square_ref(), r).0,
                Op::Abs => fx.abs(),
                Op::Min => fx.min(&fy),
                Op::Max => fx.max(&fy),
            }
        };
        (run(Round::Down), run(Round::Up))
    }

    #[test]
    fn random_containment() {
        let ops = [
            Op::Add,
            Op::Sub,
            Op::Mul,
            Op::Div,
            Op::Sqrt,
            Op::Log,
            Op::Exp,
            Op::Pow2,
            Op::Abs,
            Op::Min,
            Op::Max,
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let prec = Precision::new(64).unwrap();
        let per_op = 100_000 / ops.len() + 1;
        let mut cases = 0;
        for op in ops {
            for _ in 0..per_op {
                let positive = matches!(op, Op::Sqrt | Op::Log);
                let a = operand(&mut rng, positive);
                let mut b = operand(&mut rng, false);
                if op == Op::Div && b.0 <= 0.0 && b.1 >= 0.0 {
                    b = (b.1 + 0.5, b.1 + 1.0);
                }
                let a = if op == Op::Exp { (a.0.clamp(-50.0, 50.0), a.1.clamp(-50.0, 50.0)) } else { a };
                let ia = Interval::from_f64_pair(a.0, a.1, prec).unwrap();
                let ib = Interval::from_f64_pair(b.0, b.1, prec).unwrap();
                let args: Vec<Interval> = if op.arity() == 2 { vec![ia, ib] } else { vec![ia] };
                let r = apply(op, &args, prec).unwrap();
                for _ in 0..4 {
                    let (x, y) = (point(&mut rng, a), point(&mut rng, b));
                    let (lo, hi) = oracle(op, x, y);
                    assert!(*r.lo() <= hi && lo <= *r.hi(), "{op:?}({x}, {y}) = [{lo}, {hi}] escapes {r}");
                }
                cases += 1;
            }
        }
        assert!(cases >= 100_000);
    }

    #[test]
    fn domain_errors_are_explicit() {
        let p = Precision::default();
        let z = Interval::from_f64_pair(-1.0, 1.0, p).unwrap();
        let one = Interval::one(p);
        assert!(matches!(apply(Op::Div, &[one.clone(), z.clone()], p), Err(Error::Domain { .. })));
        assert!(matches!(apply(Op::Log, std::slice::from_ref(&z), p), Err(Error::Domain { .. })));
        assert!(matches!(apply(Op::Sqrt, &[z], p), Err(Error::Domain { .. })));
        assert!(apply(Op::Add, &[one], p).is_err());
    }

    fn expr(x: &Interval, y: &Interval) -> Interval {
        let s = x.mul(y).add(&x.sqr()).sub(&y.exp());
        s.div(&y.abs().add(&Interval::one(x.precision()))).unwrap()
    }

    proptest! {
        #[test]
        fn hull_is_smallest_cover(a in -1e3f64..1e3, w in 0.0f64..10.0, b in -1e3f64..1e3, v in 0.0f64..10.0) {
            let p = Precision::default();
            let x = Interval::from_f64_pair(a, a + w, p).unwrap();
            let y = Interval::from_f64_pair(b, b + v, p).unwrap();
            let h = x.hull(&y);
            prop_assert!(h.contains_interval(&x) && h.contains_interval(&y));
            prop_assert_eq!(h.lo().clone(), x.lo().clone().min(y.lo()));
            prop_assert_eq!(h.hi().clone(), x.hi().clone().max(y.hi()));
            prop_assert_eq!(x.hull(&x), x.clone());
        }

        #[test]
        fn more_bits_never_widen(a in -5f64..5.0, w in 0.0f64..0.5, b in -5f64..5.0, v in 0.0f64..0.5, bits in 53u32..400) {
            let lo = Precision::new(bits).unwrap();
            let hi = lo.doubled();
            let x = (a, a + w);
            let y = (b, b + v);
            let r1 = expr(&Interval::from_f64_pair(x.0, x.1, lo).unwrap(), &Interval::from_f64_pair(y.0, y.1, lo).unwrap());
            let r2 = expr(&Interval::from_f64_pair(x.0, x.1, hi).unwrap(), &Interval::from_f64_pair(y.0, y.1, hi).unwrap());
            prop_assert!(r2.width() <= r1.width());
        }

        #[test]
        fn deterministic(a in -5f64..5.0, w in 0.0f64..0.5, b in -5f64..5.0) {
            let p = Precision::default();
            let x = Interval::from_f64_pair(a, a + w, p).unwrap();
            let y = Interval::from_f64_pair(b, b + 0.25, p).unwrap();
            prop_assert_eq!(expr(&x, &y), expr(&x, &y));
        }

        #[test]
        fn lo_never_exceeds_hi(a in -1e6f64..1e6, w in 0.0f64..1e3, b in 1e-3f64..1e6) {
            let p = Precision::new(80).unwrap();
            let x = Interval::from_f64_pair(a, a + w, p).unwrap();
            let y = Interval::from_f64_pair(b, b * 1.5, p).unwrap();
            for r in [x.add(&y), x.sub(&y), x.mul(&y), x.div(&y).unwrap(), x.sqr(), x.abs(), y.sqrt().unwrap(), y.ln().unwrap()] {
                prop_assert!(r.lo() <= r.hi());
            }
        }
    }
}
