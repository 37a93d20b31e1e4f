//! Gumbel normalizing constants and critical values for the sup-norm of
//! the variance term.
//!
//! With `a(j) = sqrt(2 ln2 j)`,
//! `b(j) = a - (ln(pi ln2) + ln j - ln(1 + upsilon)/2) / (2a)`,
//! `c(j) = (sigma_bar / sigma) 2^(j/2)` and `x(gamma) = -ln(-ln(1 - gamma))`,
//! the threshold is `u = c (x / a + b)`. All logs are natural.
//!
//! Point functions work in binary64; the `*_interval` variants propagate
//! enclosures of the constants with outward rounding.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::interval::{Interval, Precision};

/// Constants of a verified family plus the noise scale.
#[derive(Clone, Debug)]
pub struct BandConstants {
    pub sigma_bar_sq: Interval,
    pub upsilon: Interval,
    pub sigma: f64,
}

impl BandConstants {
    pub fn new(sigma_bar_sq: Interval, upsilon: Interval, sigma: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(domain("c", format!("sigma must be positive, got {sigma}")));
        }
        if !sigma_bar_sq.is_positive() {
            return Err(domain("c", "sigma_bar_sq must be positive".into()));
        }
        if *upsilon.lo() <= -1 {
            return Err(domain("b", "upsilon must exceed -1".into()));
        }
        Ok(BandConstants { sigma_bar_sq, upsilon, sigma })
    }

    /// Constants from decimal strings, read as exact point values.
    pub fn from_decimals(sigma_bar_sq: &str, upsilon: &str, sigma: f64, prec: Precision) -> Result<Self> {
        Self::new(Interval::from_decimal(sigma_bar_sq, prec)?, Interval::from_decimal(upsilon, prec)?, sigma)
    }

    /// White-noise scale `sigma = n^(-1/2)`.
    pub fn white_noise_sigma(n: f64) -> Result<f64> {
        if !(n > 0.0 && n.is_finite()) {
            return Err(domain("c", format!("sample size must be positive, got {n}")));
        }
        Ok(n.powf(-0.5))
    }
}

#[derive(Clone, Copy, Debug)]
pub struct CriticalQuery {
    pub j: f64,
    pub gamma: f64,
}

impl CriticalQuery {
    pub fn new(j: f64, gamma: f64) -> Result<Self> {
        check_j(j)?;
        check_gamma(gamma)?;
        Ok(CriticalQuery { j, gamma })
    }
}

/// The four ingredients and the resulting threshold.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct CriticalValues {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub x: f64,
    pub u: f64,
}

fn domain(op: &'static str, detail: String) -> Error {
    Error::Domain { op, detail }
}

fn check_j(j: f64) -> Result<()> {
    if !(j >= 1.0 && j.is_finite()) {
        return Err(domain("a", format!("need j >= 1, got {j}")));
    }
    Ok(())
}

fn check_gamma(gamma: f64) -> Result<()> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(domain("x", format!("need 0 < gamma < 1, got {gamma}")));
    }
    Ok(())
}

pub fn a_of(j: f64) -> Result<f64> {
    check_j(j)?;
    Ok((2.0 * std::f64::consts::LN_2 * j).sqrt())
}

pub fn b_of(j: f64, upsilon: f64) -> Result<f64> {
    let a = a_of(j)?;
    if !(upsilon > -1.0) {
        return Err(domain("b", format!("need upsilon > -1, got {upsilon}")));
    }
    let pi_ln2 = (std::f64::consts::PI * std::f64::consts::LN_2).ln();
    Ok(a - (pi_ln2 + j.ln() - 0.5 * upsilon.ln_1p()) / (2.0 * a))
}

pub fn c_of(j: f64, sigma_bar_sq: f64, sigma: f64) -> Result<f64> {
    check_j(j)?;
    if !(sigma_bar_sq > 0.0 && sigma > 0.0) {
        return Err(domain("c", "sigma_bar_sq and sigma must be positive".into()));
    }
    Ok(sigma_bar_sq.sqrt() / sigma * (0.5 * j).exp2())
}

pub fn x_of(gamma: f64) -> Result<f64> {
    check_gamma(gamma)?;
    Ok(-(-(-gamma).ln_1p()).ln())
}

/// Gumbel tail `1 - exp(-exp(-x))`; inverse of [`x_of`].
pub fn gumbel_tail(x: f64) -> f64 {
    -(-(-x).exp()).exp_m1()
}

/// `x(gamma) / a(j) + b(j)`: the threshold for the unit process.
pub fn normalized_threshold(q: &CriticalQuery, upsilon: f64) -> Result<f64> {
    Ok(x_of(q.gamma)? / a_of(q.j)? + b_of(q.j, upsilon)?)
}

/// `u = c(j) (x(gamma) / a(j) + b(j))`, using the midpoints of the constants.
pub fn critical_value(q: &CriticalQuery, c: &BandConstants) -> Result<f64> {
    Ok(critical_values(q, c)?.u)
}

pub fn critical_values(q: &CriticalQuery, c: &BandConstants) -> Result<CriticalValues> {
    let ups = c.upsilon.mid_f64();
    let a = a_of(q.j)?;
    let b = b_of(q.j, ups)?;
    let cc = c_of(q.j, c.sigma_bar_sq.mid_f64(), c.sigma)?;
    let x = x_of(q.gamma)?;
    Ok(CriticalValues { a, b, c: cc, x, u: cc * (x / a + b) })
}

fn iv_f64(v: f64, prec: Precision) -> Interval {
    Interval::from_f64(v, prec)
}

pub fn a_interval(j: &Interval) -> Result<Interval> {
    if *j.lo() < 1 {
        return Err(domain("a", format!("need j >= 1, got {j}")));
    }
    let prec = j.precision();
    let ln2 = Interval::from_i64(2, prec).ln()?;
    ln2.mul(j).mul_i64(2).sqrt()
}

pub fn b_interval(j: &Interval, upsilon: &Interval) -> Result<Interval> {
    let prec = j.precision();
    let a = a_interval(j)?;
    let one = Interval::one(prec);
    let opu = one.add(upsilon);
    if !opu.is_positive() {
        return Err(domain("b", format!("need upsilon > -1, got {upsilon}")));
    }
    let ln2 = Interval::from_i64(2, prec).ln()?;
    let head = Interval::pi(prec).mul(&ln2).ln()?;
    let corr = head.add(&j.ln()?).sub(&opu.ln()?.mul_pow2(-1));
    Ok(a.sub(&corr.div(&a.mul_i64(2))?))
}

pub fn c_interval(j: &Interval, sigma_bar_sq: &Interval, sigma: &Interval) -> Result<Interval> {
    if *j.lo() < 1 {
        return Err(domain("c", format!("need j >= 1, got {j}")));
    }
    Ok(sigma_bar_sq.sqrt()?.div(sigma)?.mul(&j.mul_pow2(-1).exp2()))
}

pub fn x_interval(gamma: &Interval) -> Result<Interval> {
    if *gamma.lo() <= 0 || *gamma.hi() >= 1 {
        return Err(domain("x", format!("need 0 < gamma < 1, got {gamma}")));
    }
    let one = Interval::one(gamma.precision());
    Ok(one.sub(gamma).ln()?.neg().ln()?.neg())
}

/// Enclosure of `u` for enclosed `j`, `gamma` and constants.
pub fn critical_value_interval(j: &Interval, gamma: &Interval, c: &BandConstants) -> Result<Interval> {
    let prec = j.precision();
    let a = a_interval(j)?;
    let b = b_interval(j, &c.upsilon)?;
    let cc = c_interval(j, &c.sigma_bar_sq, &iv_f64(c.sigma, prec))?;
    let x = x_interval(gamma)?;
    Ok(cc.mul(&x.div(&a)?.add(&b)))
}

pub fn normalized_threshold_interval(j: &Interval, gamma: &Interval, upsilon: &Interval) -> Result<Interval> {
    let a = a_interval(j)?;
    let b = b_interval(j, upsilon)?;
    Ok(x_interval(gamma)?.div(&a)?.add(&b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p() -> Precision {
        Precision::new(200).unwrap()
    }

    fn db8() -> BandConstants {
        BandConstants::from_decimals("1.250928", "0.266316", 1.0, p()).unwrap()
    }

    // 60-digit evaluations of the closed forms, frozen.
    const A1: f64 = 1.177_410_022_515_474_7;
    const U_DB8_J10_G05: &str = "147.569546721906100732533746818523119723637816283053652337824";
    const B_DB8_J10: &str = "3.3254315166174300705378682834206507960937511902829994312456";

    #[test]
    fn a_of_one() {
        assert!((a_of(1.0).unwrap() - A1).abs() < 1e-15);
    }

    #[test]
    fn x_vanishes_at_one_minus_inv_e() {
        let g = Interval::one(p()).sub(&Interval::from_i64(-1, p()).exp());
        assert!(x_interval(&g).unwrap().contains_zero());
        assert!(x_of(1.0 - (-1.0f64).exp()).unwrap().abs() < 1e-15);
    }

    #[test]
    fn b_without_upsilon_term() {
        let j = 7.0;
        let a = a_of(j).unwrap();
        let direct = a - ((std::f64::consts::PI * std::f64::consts::LN_2).ln() + j.ln()) / (2.0 * a);
        assert_eq!(b_of(j, 0.0).unwrap(), direct);
    }

    #[test]
    fn golden_db8_threshold() {
        let q = CriticalQuery::new(10.0, 0.05).unwrap();
        let golden: f64 = U_DB8_J10_G05.parse().unwrap();
        let u = critical_value(&q, &db8()).unwrap();
        assert!((u - golden).abs() <= 1e-12 * golden, "{u} vs {golden}");
        let enc = critical_value_interval(
            &Interval::from_i64(10, p()),
            &Interval::from_decimal("0.05", p()).unwrap(),
            &db8(),
        )
        .unwrap();
        assert!(enc.contains(&rug::Float::with_val(200, rug::Float::parse(U_DB8_J10_G05).unwrap())));
        assert!(enc.width_f64() < 1e-40);
        let b = b_interval(&Interval::from_i64(10, p()), &db8().upsilon).unwrap();
        assert!(b.contains(&rug::Float::with_val(200, rug::Float::parse(B_DB8_J10).unwrap())));
    }

    #[test]
    fn median_level_gives_c_times_b() {
        let q = CriticalQuery::new(12.0, 1.0 - (-1.0f64).exp()).unwrap();
        let v = critical_values(&q, &db8()).unwrap();
        assert!((v.u - v.c * v.b).abs() < 1e-12 * v.u);
    }

    #[test]
    fn domain_errors() {
        assert!(a_of(0.5).is_err());
        assert!(x_of(0.0).is_err());
        assert!(x_of(1.0).is_err());
        assert!(b_of(3.0, -1.0).is_err());
        assert!(BandConstants::from_decimals("1.2", "0.2", 0.0, p()).is_err());
        assert!(BandConstants::white_noise_sigma(-1.0).is_err());
    }

    #[test]
    fn threshold_grows_like_a() {
        for (j, tol) in [(10.0, 0.25), (20.0, 0.15), (40.0, 0.1)] {
            let q = CriticalQuery::new(j, 0.1).unwrap();
            let r = normalized_threshold(&q, 0.3).unwrap() / a_of(j).unwrap();
            assert!((r - 1.0).abs() < tol, "j = {j}: ratio {r}");
        }
    }

    #[test]
    fn threshold_is_normalized_critical_value() {
        let q = CriticalQuery::new(9.0, 0.2).unwrap();
        let c = db8();
        let v = critical_values(&q, &c).unwrap();
        let t = normalized_threshold(&q, c.upsilon.mid_f64()).unwrap();
        assert!((v.u / v.c - t).abs() < 1e-13 * t);
    }

    proptest! {
        #[test]
        fn gumbel_identity(g in 1e-9f64..0.999_999) {
            prop_assert!((gumbel_tail(x_of(g).unwrap()) - g).abs() <= 1e-12 * g.max(1e-3));
        }

        #[test]
        fn monotone_in_gamma_and_j(j in 1.0f64..60.0, g in 0.001f64..0.9, dg in 0.001f64..0.09, dj in 0.5f64..5.0) {
            let c = db8();
            let u = critical_value(&CriticalQuery::new(j, g).unwrap(), &c).unwrap();
            prop_assert!(critical_value(&CriticalQuery::new(j, g + dg).unwrap(), &c).unwrap() < u);
            prop_assert!(critical_value(&CriticalQuery::new(j + dj, g).unwrap(), &c).unwrap() > u);
        }

        #[test]
        fn upsilon_raises_threshold(j in 1.0f64..40.0, g in 0.01f64..0.5, ups in 0.0f64..2.0) {
            let q = CriticalQuery::new(j, g).unwrap();
            prop_assert!(normalized_threshold(&q, ups + 0.1).unwrap() > normalized_threshold(&q, ups).unwrap());
        }

        #[test]
        fn interval_contains_point(j in 1u32..40, g in 0.01f64..0.9, s in 1.0f64..1.5, ups in 0.05f64..1.0) {
            let prec = Precision::new(128).unwrap();
            let c = BandConstants::new(Interval::from_f64(s, prec), Interval::from_f64(ups, prec), 1.0).unwrap();
            let u = critical_value(&CriticalQuery::new(j as f64, g).unwrap(), &c).unwrap();
            let enc = critical_value_interval(&Interval::from_i64(j as i64, prec), &Interval::from_f64(g, prec), &c).unwrap();
            let slack = 1e-12 * u.abs();
            prop_assert!(enc.lo_f64() - slack <= u && u <= enc.hi_f64() + slack);
        }
    }
}
