//! Certified localization of the maximum of `sigma^2(t) = sum_k phi(t-k)^2`
//! and enclosures of the band constants.
//!
//! Each level encloses `sigma^2` and its first two derivatives cellwise on the
//! current torus window, shrinks the window to the cells that may still hold
//! a maximizer, and refines. The maximum is certified unique once the second
//! derivative is bounded below zero on the window.

use std::time::Instant;

use rug::Integer;
use serde::Serialize;

use crate::cascade::{FunctionEnclosure, Ladder, TorusWindow};
use crate::error::{Error, Result};
use crate::filters::{builtin_filter, Family, FilterBank};
use crate::interval::{hull_all, Interval, Precision};

/// Cellwise enclosures of `sigma^2`, its first and its second derivative.
/// A derivative is `None` when the matching cascade has no error certificate
/// yet, meaning it is unbounded.
#[derive(Clone, Debug)]
pub struct SigmaEnclosure {
    pub j: u32,
    pub window: TorusWindow,
    pub s0: Vec<Interval>,
    pub s1: Option<Vec<Interval>>,
    pub s2: Option<Vec<Interval>>,
}

impl SigmaEnclosure {
    /// Restriction to a sub-window at the same level.
    pub fn restrict(&self, w: &TorusWindow) -> Result<SigmaEnclosure> {
        let idx = sub_range(&self.window, w)?;
        let cut = |v: &Vec<Interval>| idx.iter().map(|&i| v[i].clone()).collect();
        Ok(SigmaEnclosure {
            j: self.j,
            window: w.clone(),
            s0: cut(&self.s0),
            s1: self.s1.as_ref().map(cut),
            s2: self.s2.as_ref().map(cut),
        })
    }

    /// Mean of the `s0` cells; contains the torus mean of `sigma^2` (which
    /// is 1) when the window is the full torus.
    pub fn mean_s0(&self) -> Interval {
        let prec = Precision::new(self.s0[0].prec()).expect("valid precision");
        let total = crate::interval::sum(self.s0.iter(), prec);
        total.div(&Interval::from_i64(self.s0.len() as i64, prec)).expect("non-empty")
    }
}

/// Positions of `inner`'s cells among `outer`'s cells, in order.
fn sub_range(outer: &TorusWindow, inner: &TorusWindow) -> Result<Vec<usize>> {
    if !inner.is_subset_of(outer) {
        return Err(Error::Window("window is not covered by the enclosure".into()));
    }
    let p = outer.period();
    let off = Integer::from(&inner.a - &outer.a).div_rem_euc(p).1;
    let start = off.to_usize().ok_or_else(|| Error::Window("offset overflow".into()))?;
    let count = inner.cell_count_usize().ok_or_else(|| Error::Window("window too large".into()))?;
    let n = outer.cell_count_usize().ok_or_else(|| Error::Window("window too large".into()))?;
    Ok((start..start + count).map(|i| i % n).collect())
}

fn widened(phi: &FunctionEnclosure, i: usize) -> Option<Vec<Interval>> {
    let eps = phi.eps_hi()?;
    Some(phi.shifts(i)?.into_iter().map(|v| v.inflate(eps)).collect())
}

/// Encloses `sigma^2 = sum phi^2`, `(sigma^2)' = 2 sum phi' phi`, and
/// `(sigma^2)'' = 2 sum (phi'' phi + phi'^2)` on every cell of `window`.
pub fn sigma_enclosure(
    phi0: &FunctionEnclosure,
    phi1: &FunctionEnclosure,
    phi2: &FunctionEnclosure,
    window: &TorusWindow,
) -> Result<SigmaEnclosure> {
    if phi0.j != window.level || phi1.j != window.level || phi2.j != window.level {
        return Err(Error::Window("enclosures and window must share the level".into()));
    }
    if phi0.eps.is_none() {
        return Err(Error::NoCertificate { n: 0, j: window.level });
    }
    let idx = sub_range(&phi0.window, window)?;
    let count = idx.len();
    for phi in [phi1, phi2] {
        sub_range(&phi.window, window)?;
    }
    let prec = Precision::new(phi0.cells().values().next().map(|v| v.prec()).unwrap_or(256))?;
    let mut s0 = Vec::with_capacity(count);
    let mut s1 = phi1.eps.as_ref().map(|_| Vec::with_capacity(count));
    let mut s2 = phi1.eps.as_ref().and(phi2.eps.as_ref()).map(|_| Vec::with_capacity(count));
    let missing = || Error::Window("missing coverage of a required shift".into());
    for &i in &idx {
        let f0 = widened(phi0, i).ok_or_else(missing)?;
        let mut a = Interval::zero(prec);
        for v in &f0 {
            a.add_assign(&v.sqr());
        }
        s0.push(a.clip_nonneg());
        if let Some(s1) = s1.as_mut() {
            let f1 = widened(phi1, i).ok_or_else(missing)?;
            let mut b = Interval::zero(prec);
            for (x, y) in f0.iter().zip(&f1) {
                b.add_mul_assign(x, y);
            }
            s1.push(b.mul_pow2(1));
            if let Some(s2) = s2.as_mut() {
                let f2 = widened(phi2, i).ok_or_else(missing)?;
                let mut c = Interval::zero(prec);
                for ((x, y), z) in f0.iter().zip(&f1).zip(&f2) {
                    c.add_mul_assign(z, x);
                    c.add_assign(&y.sqr());
                }
                s2.push(c.mul_pow2(1));
            }
        }
    }
    Ok(SigmaEnclosure { j: window.level, window: window.clone(), s0, s1, s2 })
}

/// Smallest torus arc holding every cell that may contain a maximizer: its
/// `s0` upper bound reaches the largest `s0` lower bound and its `s1`
/// contains zero. On a proper sub-window the arc stays inside the window.
pub fn candidate_interval(se: &SigmaEnclosure) -> Result<TorusWindow> {
    let floor = se
        .s0
        .iter()
        .map(|s| s.lo().clone())
        .max_by(|a, b| a.partial_cmp(b).expect("finite"))
        .ok_or_else(|| Error::Consistency("empty sigma enclosure".into()))?;
    let cand: Vec<usize> = (0..se.s0.len())
        .filter(|&i| *se.s0[i].hi() >= floor && se.s1.as_ref().is_none_or(|s1| s1[i].contains_zero()))
        .collect();
    if cand.is_empty() {
        return Err(Error::Consistency("no candidate cell for the maximum".into()));
    }
    let j = se.window.level;
    if se.window.full {
        let n = se.s0.len();
        // Complement of the largest circular gap between candidates.
        let mut best_gap = 0usize;
        let mut start = cand[0];
        for (idx, &c) in cand.iter().enumerate() {
            let next = cand[(idx + 1) % cand.len()];
            let gap = (next + n - c) % n;
            let gap = if gap == 0 { n } else { gap };
            if gap > best_gap {
                best_gap = gap;
                start = next;
            }
        }
        let len = n - best_gap + 1;
        let a = Integer::from(start);
        return TorusWindow::new(j, a.clone(), a + (len - 1) as u64);
    }
    let a = Integer::from(&se.window.a + cand[0] as u64);
    let b = Integer::from(&se.window.a + *cand.last().expect("non-empty") as u64);
    TorusWindow::new(j, a, b)
}

/// Enclosure of `max sigma^2`, given enclosures on a window and the
/// candidate arc inside it.
pub fn sigma_bar_sq(se: &SigmaEnclosure, cand: &TorusWindow) -> Result<Interval> {
    let lo = se
        .s0
        .iter()
        .map(|s| s.lo().clone())
        .max_by(|a, b| a.partial_cmp(b).expect("finite"))
        .ok_or_else(|| Error::Consistency("empty sigma enclosure".into()))?;
    let hi = sub_range(&se.window, cand)?
        .into_iter()
        .map(|i| se.s0[i].hi().clone())
        .max_by(|a, b| a.partial_cmp(b).expect("finite"))
        .expect("non-empty");
    Interval::from_floats(lo, hi).map_err(|_| Error::Consistency("sigma bounds crossed".into()))
}

/// Hull of `(sigma^2)''` over the window of `se`.
pub fn second_derivative_hull(se: &SigmaEnclosure) -> Option<Interval> {
    hull_all(se.s2.as_ref()?.iter())
}

/// Hull of `sum_k phi'(t-k)^2` over the window of `se`.
pub fn derivative_square_hull(se: &SigmaEnclosure, phi1: &FunctionEnclosure) -> Result<Interval> {
    let mut acc: Option<Interval> = None;
    for i in sub_range(&phi1.window, &se.window)? {
        let f1 = widened(phi1, i).ok_or(Error::NoCertificate { n: 1, j: se.j })?;
        let prec = Precision::new(f1[0].prec())?;
        let mut s = Interval::zero(prec);
        for v in &f1 {
            s.add_assign(&v.sqr());
        }
        let s = s.clip_nonneg();
        acc = Some(match acc {
            None => s,
            Some(a) => a.hull(&s),
        });
    }
    acc.ok_or_else(|| Error::Consistency("empty window".into()))
}

/// `upsilon = -2 sum phi'(t0-k)^2 / (sigma^2)''(t0)`, with numerator and
/// denominator bounded separately over the window of `se`. The result is
/// intersected with the equivalent form `-num / (sigma_bar * sigma'')` where
/// `sigma'' = (sigma^2)'' / (2 sigma_bar)`.
pub fn upsilon_enclosure(se: &SigmaEnclosure, phi1: &FunctionEnclosure, sigma_bar_sq: &Interval) -> Result<Interval> {
    let den = second_derivative_hull(se).ok_or(Error::NoCertificate { n: 2, j: se.j })?;
    if !den.is_negative() {
        return Err(Error::Domain { op: "upsilon", detail: "denominator not certified negative".into() });
    }
    let num = derivative_square_hull(se, phi1)?;
    let direct = num.mul_i64(-2).div(&den)?;
    let eq3 = upsilon_from_parts(&num, &den, sigma_bar_sq)?;
    Ok(direct.intersect(&eq3).unwrap_or(direct))
}

/// `-num / (sigma_bar * sigma'')` with `sigma'' = den / (2 sigma_bar)`.
pub fn upsilon_from_parts(num: &Interval, den: &Interval, sigma_bar_sq: &Interval) -> Result<Interval> {
    let sb = sigma_bar_sq.sqrt()?;
    let sigma_pp = den.div(&sb.mul_i64(2))?;
    num.neg().div(&sb.mul(&sigma_pp))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Converged,
    MaxLevel,
    FullTorusCap,
    PrecisionCap,
    /// `sigma^2` is exactly constant, so every point is a maximizer.
    ConstantVariance,
}

#[derive(Clone, Debug)]
pub struct VerifyConfig {
    pub target_width: f64,
    pub max_level: u32,
    pub precision: Precision,
    pub max_precision_bits: u32,
    /// Restart at doubled precision once rounding widths exceed this share
    /// of a certified error bound.
    pub rounding_share: f64,
}

impl VerifyConfig {
    pub fn new(target_width: f64, max_level: u32, precision: Precision) -> Self {
        VerifyConfig { target_width, max_level, precision, max_precision_bits: 4096, rounding_share: 0.25 }
    }
}

/// One row of the per-level log.
#[derive(Clone, Debug, Serialize)]
pub struct LevelTrace {
    pub j: u32,
    pub precision_bits: u32,
    pub window_cells: String,
    pub window_width: f64,
    pub eps: [Option<f64>; 3],
    pub alpha_lo: [Option<f64>; 3],
    pub sigma_bar_sq_width: Option<f64>,
    pub upsilon_width: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct VerificationReport {
    pub verified: bool,
    pub family: Family,
    #[serde(rename = "N")]
    pub n: usize,
    pub i_final: TorusWindow,
    pub t0_enclosure: TorusWindow,
    pub sigma_bar_sq: Option<Interval>,
    pub upsilon: Option<Interval>,
    pub j_final: u32,
    pub precision_bits: u32,
    pub second_deriv_upper: Option<Interval>,
    pub stop_reason: StopReason,
    pub trace: Vec<LevelTrace>,
}

/// Runs the level loop for a built-in family.
pub fn verify_assumption(
    family: &Family,
    n: usize,
    target_width: f64,
    max_level: u32,
    prec: Precision,
) -> Result<VerificationReport> {
    let cfg = VerifyConfig::new(target_width, max_level, prec);
    let fam = family.clone();
    verify_with(&cfg, |p| builtin_filter(&fam, n, p))
}

/// Runs the level loop; `make_bank` builds the filter at a given precision
/// so the loop can restart at higher precision.
pub fn verify_with<F>(cfg: &VerifyConfig, make_bank: F) -> Result<VerificationReport>
where
    F: Fn(Precision) -> Result<FilterBank>,
{
    if !(cfg.target_width > 0.0) {
        return Err(Error::InvalidArgument("target width must be positive".into()));
    }
    let mut prec = cfg.precision;
    let mut sb: Option<Interval> = None;
    let mut ups: Option<Interval> = None;
    let mut trace = Vec::new();
    'restart: loop {
        let bank = make_bank(prec)?;
        let mut ladder = Ladder::new(&bank, 2)?;
        let mut s2_upper: Option<Interval> = None;
        let mut verified = false;
        loop {
            let j = ladder.level();
            let eps: Vec<Option<rug::Float>> = (0..3).map(|n| ladder.eps(n)).collect();
            let mut row = LevelTrace {
                j,
                precision_bits: prec.bits(),
                window_cells: ladder.window().cell_count().to_string(),
                window_width: ladder.window().width_f64(),
                eps: [0, 1, 2].map(|n| eps[n].as_ref().map(|e| e.to_f64())),
                alpha_lo: [0, 1, 2].map(|n| ladder.alpha(n).map(|a| a.lo_f64())),
                sigma_bar_sq_width: None,
                upsilon_width: None,
            };
            // Rounding-dominated enclosures: restart at higher precision.
            let stalled = (0..3).any(|n| match &eps[n] {
                Some(e) if !e.is_zero() => ladder.rounding_width(n) > cfg.rounding_share * e.to_f64(),
                _ => false,
            });
            if stalled {
                if prec.bits() * 2 > cfg.max_precision_bits {
                    trace.push(row);
                    return Ok(report(&bank, &ladder, verified, sb, ups, s2_upper, prec, StopReason::PrecisionCap, trace));
                }
                prec = prec.doubled();
                trace.push(row);
                continue 'restart;
            }
            let mut next = ladder.window().refine();
            if eps[0].is_some() {
                let enc: Vec<FunctionEnclosure> = (0..3).map(|n| ladder.enclosure(n)).collect();
                let se = sigma_enclosure(&enc[0], &enc[1], &enc[2], ladder.window())?;
                let cand = candidate_interval(&se)?;
                let sb_j = sigma_bar_sq(&se, &cand)?;
                sb = Some(intersect_running(sb, sb_j)?);
                if is_exactly_constant(&se, eps[0].as_ref()) {
                    trace.push(row);
                    return Ok(report(&bank, &ladder, false, sb, None, None, prec, StopReason::ConstantVariance, trace));
                }
                let se_c = se.restrict(&cand)?;
                s2_upper = second_derivative_hull(&se_c);
                verified = false;
                if let Some(den) = &s2_upper {
                    if den.is_negative() {
                        let u = upsilon_enclosure(&se_c, &enc[1], sb.as_ref().expect("set above"))?;
                        ups = Some(intersect_running(ups, u)?);
                        verified = ups.as_ref().is_some_and(|u| u.is_positive());
                    }
                }
                row.sigma_bar_sq_width = sb.as_ref().map(Interval::width_f64);
                row.upsilon_width = ups.as_ref().map(Interval::width_f64);
                next = cand.refine();
                if verified
                    && sb.as_ref().is_some_and(|s| s.width_f64() <= cfg.target_width)
                    && ups.as_ref().is_some_and(|u| u.width_f64() <= cfg.target_width)
                {
                    trace.push(row);
                    let mut r = report(&bank, &ladder, true, sb, ups, s2_upper, prec, StopReason::Converged, trace);
                    r.i_final = cand.clone();
                    r.t0_enclosure = cand;
                    return Ok(r);
                }
            }
            trace.push(row);
            if j >= cfg.max_level {
                return Ok(report(&bank, &ladder, verified, sb, ups, s2_upper, prec, StopReason::MaxLevel, trace));
            }
            match ladder.advance(&next) {
                Ok(()) => {}
                Err(Error::Window(_)) if next.full => {
                    return Ok(report(
                        &bank,
                        &ladder,
                        verified,
                        sb,
                        ups,
                        s2_upper,
                        prec,
                        StopReason::FullTorusCap,
                        trace,
                    ));
                }
                Err(e) => return Err(e),
            }
        }
    }
}

/// Whether an exact (`eps = 0`) full-torus enclosure pins `sigma^2` to one
/// value on every cell.
fn is_exactly_constant(se: &SigmaEnclosure, eps0: Option<&rug::Float>) -> bool {
    let exact = eps0.is_some_and(|e| e.is_zero());
    let first = &se.s0[0];
    exact && se.window.full && first.lo() == first.hi() && se.s0.iter().all(|c| c == first)
}

fn intersect_running(prev: Option<Interval>, new: Interval) -> Result<Interval> {
    match prev {
        None => Ok(new),
        Some(p) => p.intersect(&new).ok_or_else(|| {
            Error::Consistency(format!("successive enclosures {p} and {new} are disjoint"))
        }),
    }
}

#[allow(clippy::too_many_arguments)]
fn report(
    bank: &FilterBank,
    ladder: &Ladder,
    verified: bool,
    sb: Option<Interval>,
    ups: Option<Interval>,
    s2: Option<Interval>,
    prec: Precision,
    stop: StopReason,
    trace: Vec<LevelTrace>,
) -> VerificationReport {
    VerificationReport {
        verified,
        family: bank.family.clone(),
        n: bank.n_moments,
        i_final: ladder.window().clone(),
        t0_enclosure: ladder.window().clone(),
        sigma_bar_sq: sb,
        upsilon: ups,
        j_final: ladder.level(),
        precision_bits: prec.bits(),
        second_deriv_upper: s2,
        stop_reason: stop,
        trace,
    }
}

/// Wall-clock wrapper used by the table command.
pub fn timed<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let t = Instant::now();
    let v = f();
    (v, t.elapsed().as_secs_f64())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cascade::{cascade_f, TorusWindow};
    use crate::filters::daubechies_filter;

    fn p() -> Precision {
        Precision::default()
    }

    fn synthetic(level: u32, s0: &[f64], s1: &[(f64, f64)]) -> SigmaEnclosure {
        let iv = |a: f64, b: f64| Interval::from_f64_pair(a, b, p()).unwrap();
        SigmaEnclosure {
            j: level,
            window: TorusWindow::full(level),
            s0: s0.iter().map(|&v| iv(v - 0.01, v + 0.01)).collect(),
            s1: Some(s1.iter().map(|&(a, b)| iv(a, b)).collect()),
            s2: None,
        }
    }

    #[test]
    fn candidate_wraps_the_seam() {
        let s0 = [1.3, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.3];
        let mut s1 = vec![(0.5, 0.7); 8];
        s1[0] = (-0.1, 0.1);
        s1[7] = (-0.1, 0.1);
        let w = candidate_interval(&synthetic(3, &s0, &s1)).unwrap();
        assert_eq!(w.a, 7);
        assert_eq!(w.b, 8);
        assert_eq!(w.width_f64(), 0.25);
    }

    #[test]
    fn single_candidate_cell() {
        let s0 = [1.0, 1.0, 1.5, 1.0];
        let s1 = [(0.5, 1.0), (0.5, 1.0), (-1.0, 1.0), (0.5, 1.0)];
        let w = candidate_interval(&synthetic(2, &s0, &s1)).unwrap();
        assert_eq!((w.a.to_u32(), w.b.to_u32()), (Some(2), Some(2)));
    }

    #[test]
    fn haar_sigma_is_identically_one() {
        let b = daubechies_filter(1, p()).unwrap();
        let mut ladder = Ladder::new(&b, 2).unwrap();
        ladder.advance_to(&TorusWindow::full(4)).unwrap();
        let w = TorusWindow::full(4);
        let f0 = cascade_f(&b, 0, 4, &w).unwrap();
        let se = sigma_enclosure(&f0, &ladder.enclosure(1), &ladder.enclosure(2), &w).unwrap();
        assert!(se.s1.is_none());
        assert!(se.s0.iter().all(|s| s.contains_f64(1.0)));
        let all = candidate_interval(&se).unwrap();
        assert!(all.full);
    }

    #[test]
    fn haar_is_rejected() {
        let r = verify_assumption(&Family::Daubechies, 1, 1e-6, 40, p()).unwrap();
        assert!(!r.verified);
        assert!(r.i_final.full);
        assert_eq!(r.stop_reason, StopReason::ConstantVariance);
        assert!(r.sigma_bar_sq.unwrap().contains(&rug::Float::with_val(64, 1)));
    }

    #[test]
    fn upsilon_forms_agree() {
        let prec = p();
        let num = Interval::from_f64_pair(0.30, 0.31, prec).unwrap();
        let den = Interval::from_f64_pair(-2.6, -2.5, prec).unwrap();
        let sb = Interval::from_f64_pair(1.25, 1.26, prec).unwrap();
        let direct = num.mul_i64(-2).div(&den).unwrap();
        let eq3 = upsilon_from_parts(&num, &den, &sb).unwrap();
        assert!(direct.intersects(&eq3));
    }
}
