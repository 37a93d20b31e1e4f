//! Cascade approximations of a scaling function and its derivatives, with
//! certified uniform error bounds and local (windowed) refinement.
//!
//! Level-`l` arrays are stored in "copy" layout: a run of `len` consecutive
//! indices starting at `lo`, repeated at every shift by `2^l` that meets the
//! support. A full-torus level uses `lo = 0`, `len = 2^l`; a windowed level
//! keeps only the residues of `J(l)`. Both layouts share one recurrence loop,
//! so windowed and full computations produce bit-identical intervals.

use std::collections::BTreeMap;

use rayon::prelude::*;
use rug::float::Round;
use rug::ops::AddAssignRound;
use rug::{Float, Integer};
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::filters::FilterBank;
use crate::interval::{Interval, Precision};

/// Largest full-torus array, in indices per cascade.
pub const FULL_INDEX_CAP: usize = 1 << 17;

/// `u^(n)` from `n` applications of `u'_k = 2 sum_{i<=k} (-1)^i u_{k-i}`.
#[derive(Clone, Debug)]
pub struct DerivedFilter {
    pub n: usize,
    pub coeffs: Vec<Interval>,
}

pub fn derive_filter(bank: &FilterBank, n: usize) -> DerivedFilter {
    let mut u = bank.u0.clone();
    for _ in 0..n {
        u = derive_once(&u, bank.precision);
    }
    DerivedFilter { n, coeffs: u }
}

fn derive_once(u: &[Interval], prec: Precision) -> Vec<Interval> {
    (0..u.len())
        .map(|k| {
            let mut acc = Interval::zero(prec);
            for i in 0..=k {
                if i % 2 == 0 {
                    acc = acc.add(&u[k - i]);
                } else {
                    acc = acc.sub(&u[k - i]);
                }
            }
            acc.mul_pow2(1)
        })
        .collect()
}

/// `max_{m=0,1} sum_{k<K} |sum_{i<=k} u_{2i+m} - 1|`, the factor measuring
/// how far the filter is from reproducing constants at level 0.
pub fn parity_defect(u: &[Interval], prec: Precision) -> Interval {
    let k = u.len() / 2;
    let one = Interval::one(prec);
    let mut best: Option<Interval> = None;
    for m in 0..2 {
        let mut partial = Interval::zero(prec);
        let mut total = Interval::zero(prec);
        for kk in 0..k {
            partial.add_assign(&u[2 * kk + m]);
            total.add_assign(&partial.sub(&one).abs());
        }
        best = Some(match best {
            None => total,
            Some(b) => b.max(&total),
        });
    }
    best.expect("non-empty filter")
}

/// Arc of `b - a + 1` cells at level `j` starting at cell `a`, wrapping
/// around the torus when `b >= 2^j`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TorusWindow {
    pub level: u32,
    pub a: Integer,
    pub b: Integer,
    pub full: bool,
}

impl TorusWindow {
    pub fn full(level: u32) -> Self {
        let p = Integer::from(1) << level;
        TorusWindow { level, a: Integer::new(), b: p - 1u32, full: true }
    }

    /// Normalizes `a` into `[0, 2^j)`; requires `0 <= b - a < 2^j`.
    pub fn new(level: u32, a: Integer, b: Integer) -> Result<Self> {
        let p = Integer::from(1) << level;
        let span = Integer::from(&b - &a);
        if span < 0 || span >= p {
            return Err(Error::Window(format!("need 0 <= b - a < 2^{level}, got b - a = {span}")));
        }
        let a = modp(a, &p);
        let b = Integer::from(&a + &span);
        let full = Integer::from(&span + 1u32) == p;
        Ok(TorusWindow { level, a, b, full })
    }

    pub fn period(&self) -> Integer {
        Integer::from(1) << self.level
    }

    pub fn cell_count(&self) -> Integer {
        Integer::from(&self.b - &self.a) + 1u32
    }

    pub fn cell_count_usize(&self) -> Option<usize> {
        self.cell_count().to_usize()
    }

    /// Arc length as a fraction of the torus.
    pub fn width_f64(&self) -> f64 {
        let c = Float::with_val(64, self.cell_count());
        (c >> self.level).to_f64()
    }

    pub fn refine(&self) -> TorusWindow {
        TorusWindow {
            level: self.level + 1,
            a: Integer::from(&self.a << 1),
            b: Integer::from(&self.b << 1) + 1u32,
            full: self.full,
        }
    }

    /// The same arc described at level `l`: coarsened by flooring for
    /// `l < level`, refined for `l > level`.
    pub fn at_level(&self, l: u32) -> TorusWindow {
        if l >= self.level {
            let mut w = self.clone();
            while w.level < l {
                w = w.refine();
            }
            return w;
        }
        let s = self.level - l;
        let a = Integer::from(&self.a >> s);
        let b = Integer::from(&self.b >> s);
        let p = Integer::from(1) << l;
        if Integer::from(&b - &a) >= p {
            return TorusWindow::full(l);
        }
        TorusWindow::new(l, a, b).expect("coarsened arc is valid")
    }

    pub fn contains_cell(&self, c: &Integer) -> bool {
        let p = self.period();
        let off = modp(Integer::from(c - &self.a), &p);
        off <= Integer::from(&self.b - &self.a)
    }

    /// Whether every cell of `self` lies in `other` (same level).
    pub fn is_subset_of(&self, other: &TorusWindow) -> bool {
        if self.level != other.level {
            return false;
        }
        if other.full {
            return true;
        }
        let p = self.period();
        let off = modp(Integer::from(&self.a - &other.a), &p);
        off + Integer::from(&self.b - &self.a) <= Integer::from(&other.b - &other.a)
    }

    fn endpoint(&self, c: &Integer) -> Float {
        let p = self.period();
        let c = modp(c.clone(), &p);
        Float::with_val(self.level.max(1) + 64, c) >> self.level
    }

    /// Left end `a / 2^j` in `[0, 1)`.
    pub fn left(&self) -> Float {
        self.endpoint(&self.a)
    }

    /// Right end `(b + 1) / 2^j`, reduced into `(0, 1]`.
    pub fn right(&self) -> Float {
        let r = self.endpoint(&(Integer::from(&self.b) + 1u32));
        if r == 0 {
            Float::with_val(r.prec(), 1)
        } else {
            r
        }
    }
}

impl Serialize for TorusWindow {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("TorusWindow", 6)?;
        st.serialize_field("level", &self.level)?;
        st.serialize_field("a", &self.a.to_string())?;
        st.serialize_field("b", &self.b.to_string())?;
        st.serialize_field("full", &self.full)?;
        st.serialize_field("left", &float_decimal(&self.left(), Round::Down))?;
        st.serialize_field("right", &float_decimal(&self.right(), Round::Up))?;
        st.end()
    }
}

fn modp(x: Integer, p: &Integer) -> Integer {
    x.div_rem_euc(p.clone()).1
}

fn float_decimal(x: &Float, r: Round) -> String {
    x.to_string_radix_round(10, Some(30), r)
}

/// `J(l) = [floor(2^(l-j) a) - 2K + 2, floor(2^(l-j) b)] + 2^l Z`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IndexSet {
    pub l: u32,
    pub lo: Integer,
    pub hi: Integer,
    /// The range covers every residue modulo `2^l`.
    pub all: bool,
}

impl IndexSet {
    pub fn contains(&self, k: &Integer) -> bool {
        if self.all {
            return true;
        }
        let p = Integer::from(1) << self.l;
        modp(Integer::from(k - &self.lo), &p) <= Integer::from(&self.hi - &self.lo)
    }

    pub fn residues(&self) -> Integer {
        if self.all {
            Integer::from(1) << self.l
        } else {
            Integer::from(&self.hi - &self.lo) + 1u32
        }
    }

    pub fn is_subset_of(&self, other: &IndexSet) -> bool {
        if other.all {
            return true;
        }
        if self.all || self.l != other.l {
            return false;
        }
        let p = Integer::from(1) << self.l;
        let off = modp(Integer::from(&self.lo - &other.lo), &p);
        off + Integer::from(&self.hi - &self.lo) <= Integer::from(&other.hi - &other.lo)
    }
}

fn scale_floor(x: &Integer, l: u32, j: u32) -> Integer {
    if l >= j {
        Integer::from(x << (l - j))
    } else {
        Integer::from(x >> (j - l))
    }
}

pub fn window_indices(j: u32, a: &Integer, b: &Integer, l: u32, k: usize) -> IndexSet {
    let lo = scale_floor(a, l, j) - Integer::from(2 * k - 2);
    let hi = scale_floor(b, l, j);
    let all = Integer::from(&hi - &lo) + 1u32 >= (Integer::from(1) << l);
    IndexSet { l, lo, hi, all }
}

/// Storage geometry of one level.
#[derive(Clone, Debug, PartialEq, Eq)]
struct Layout {
    l: u32,
    lo: Integer,
    len: usize,
    full: bool,
}

impl Layout {
    fn for_window(w: &TorusWindow, k: usize) -> Result<Layout> {
        let cells = w.cell_count();
        let len = Integer::from(&cells + (2 * k - 2) as u32);
        let p = w.period();
        if len >= p {
            let pu = p.to_usize().filter(|&p| p.saturating_mul(2 * k - 1) <= FULL_INDEX_CAP).ok_or_else(|| {
                Error::Window(format!("full-torus level {} exceeds {FULL_INDEX_CAP} indices", w.level))
            })?;
            return Ok(Layout { l: w.level, lo: Integer::new(), len: pu, full: true });
        }
        let len = len.to_usize().ok_or_else(|| Error::Window("window too long".into()))?;
        Ok(Layout { l: w.level, lo: Integer::from(&w.a - (2 * k - 2) as u32), len, full: false })
    }

    fn period(&self) -> Integer {
        Integer::from(1) << self.l
    }

    /// Copies `q` whose run `lo + [0, len) + 2^l q` meets `[0, last]`.
    fn copy_range(&self, last: &Integer) -> (i64, i64) {
        let p = self.period();
        let top = Integer::from(&self.lo + (self.len - 1) as u64);
        // smallest q with top + p q >= 0
        let qmin = (-top).div_rem_ceil(p.clone()).0;
        // largest q with lo + p q <= last
        let qmax = Integer::from(last - &self.lo).div_rem_floor(p).0;
        (qmin.to_i64().expect("copy index"), qmax.to_i64().expect("copy index"))
    }

    /// Offsets `t` in copy `q` whose index lies in `[0, last]`.
    fn valid_offsets(&self, q: i64, last: &Integer) -> (usize, usize) {
        let start = &self.lo + (self.period() * q);
        let t0 = Integer::from(-&start).max(Integer::new());
        let t1 = Integer::from(last - &start).min(Integer::from(self.len - 1));
        match (t0.to_usize(), t1.to_i64()) {
            (Some(a), Some(b)) if b >= a as i64 => (a, b as usize + 1),
            _ => (0, 0),
        }
    }
}

fn support_last(l: u32, k: usize) -> Integer {
    ((Integer::from(1) << l) - 1u32) * (2 * k - 1) as u32
}

fn range_last(l: u32, k: usize) -> Integer {
    (Integer::from(1) << l) * (2 * k - 1) as u32 - 1u32
}

/// Values `a[lo + t + 2^l q]` for copies `q0..q0+copies.len()`; entries
/// outside the tracked range are exact zeros.
#[derive(Clone, Debug)]
pub struct CopyArray {
    layout: Layout,
    k: usize,
    q0: i64,
    copies: Vec<Vec<Interval>>,
    zero: Interval,
}

impl CopyArray {
    pub fn level(&self) -> u32 {
        self.layout.l
    }

    pub fn is_full(&self) -> bool {
        self.layout.full
    }

    pub fn base(&self) -> &Integer {
        &self.layout.lo
    }

    pub fn run_len(&self) -> usize {
        self.layout.len
    }

    /// Value at relative position `(t, q)`; full layouts wrap `t`.
    fn rel(&self, t: i64, q: i64) -> &Interval {
        let (t, q) = if self.layout.full {
            let p = self.layout.len as i64;
            (t.rem_euclid(p), q + t.div_euclid(p))
        } else {
            (t, q)
        };
        if t < 0 || t as usize >= self.layout.len {
            return &self.zero;
        }
        let qi = q - self.q0;
        if qi < 0 || qi as usize >= self.copies.len() {
            return &self.zero;
        }
        &self.copies[qi as usize][t as usize]
    }

    /// Value at absolute index `k`, or `None` if `k` is not tracked.
    pub fn get(&self, k: &Integer) -> Option<&Interval> {
        let p = self.layout.period();
        let d = Integer::from(k - &self.layout.lo);
        let (q, t) = d.div_rem_floor(p);
        let t = t.to_usize()?;
        if t >= self.layout.len {
            return None;
        }
        let q = q.to_i64()?;
        let qi = q - self.q0;
        if qi < 0 || qi as usize >= self.copies.len() {
            return Some(&self.zero);
        }
        Some(&self.copies[qi as usize][t])
    }

    /// Tracked `(index, value)` pairs with index in `[0, last]`.
    pub fn entries_upto(&self, last: &Integer) -> Vec<(Integer, &Interval)> {
        let p = self.layout.period();
        let mut out = Vec::new();
        for (qi, copy) in self.copies.iter().enumerate() {
            let q = self.q0 + qi as i64;
            let (t0, t1) = self.layout.valid_offsets(q, last);
            let start = &self.layout.lo + (Integer::from(&p * q));
            for (t, v) in copy.iter().enumerate().take(t1).skip(t0) {
                out.push((Integer::from(&start + t as u64), v));
            }
        }
        out
    }

    pub fn entries(&self) -> Vec<(Integer, &Interval)> {
        self.entries_upto(&support_last(self.layout.l, self.k))
    }

    fn max_mag_upto(&self, last: &Integer, prec: Precision) -> Float {
        let mut m = Float::new(prec.bits());
        for (qi, copy) in self.copies.iter().enumerate() {
            let (t0, t1) = self.layout.valid_offsets(self.q0 + qi as i64, last);
            for x in &copy[t0..t1] {
                let v = x.mag();
                if v > m {
                    m = v;
                }
            }
        }
        m
    }

    /// Enclosure of `max over tracked residues of sum_i |a[r + 2^l i]|`,
    /// restricted to indices in `[0, last]`.
    fn max_residue_sum(&self, last: &Integer, prec: Precision) -> Interval {
        let p = prec.bits();
        let residues = self.layout.len;
        let ranges: Vec<(usize, usize)> =
            (0..self.copies.len()).map(|qi| self.layout.valid_offsets(self.q0 + qi as i64, last)).collect();
        let mut best_hi = Float::new(p);
        let mut best_lo = Float::new(p);
        for t in 0..residues {
            let mut hi = Float::new(p);
            let mut lo = Float::new(p);
            for (copy, &(t0, t1)) in self.copies.iter().zip(&ranges) {
                if t < t0 || t >= t1 {
                    continue;
                }
                let x = &copy[t];
                hi.add_assign_round(&x.mag(), Round::Up);
                let a = x.abs();
                lo.add_assign_round(a.lo(), Round::Down);
            }
            if hi > best_hi {
                best_hi = hi;
            }
            if lo > best_lo {
                best_lo = lo;
            }
        }
        Interval::from_floats(best_lo, best_hi).expect("ordered sums")
    }

    fn max_width_on(&self, t_range: std::ops::Range<usize>) -> f64 {
        let mut w: f64 = 0.0;
        for copy in &self.copies {
            for x in &copy[t_range.clone()] {
                w = w.max(x.width_f64());
            }
        }
        w
    }
}

/// Level-0 array `g_{0,k} = delta_k`.
fn initial_g(k: usize, prec: Precision) -> CopyArray {
    let layout = Layout { l: 0, lo: Integer::new(), len: 1, full: true };
    let (q0, q1) = layout.copy_range(&support_last(0, k));
    let copies = (q0..=q1)
        .map(|q| vec![if q == 0 { Interval::one(prec) } else { Interval::zero(prec) }])
        .collect();
    CopyArray { layout, k, q0, copies, zero: Interval::zero(prec) }
}

/// One refinement step `g_{l+1,k} = sum_i g_{l,i} u_{k-2i}` into `target`.
fn step_g(src: &CopyArray, u: &[Interval], target: &Layout, prec: Precision) -> Result<CopyArray> {
    let k = src.k;
    let l = src.layout.l;
    debug_assert_eq!(target.l, l + 1);
    // Offset of the target run against twice the source run, split into a
    // small part and a whole number `s` of target periods.
    let d = &target.lo - Integer::from(&src.layout.lo << 1);
    let (s, delta) = if src.layout.full {
        (0i64, d.to_i64().ok_or_else(|| Error::Window("offset overflow".into()))?)
    } else {
        let pt = target.period();
        let (s, r) = (&d + Integer::from(&pt >> 1)).div_rem_floor(pt.clone());
        let delta = r - Integer::from(&pt >> 1);
        (
            s.to_i64().ok_or_else(|| Error::Window("offset overflow".into()))?,
            delta.to_i64().ok_or_else(|| Error::Window("offset overflow".into()))?,
        )
    };
    let m_top = (2 * k - 1) as i64;
    if !src.layout.full {
        let t_min = (delta - m_top).div_euclid(2) + ((delta - m_top).rem_euclid(2));
        let t_max = (delta + target.len as i64 - 1).div_euclid(2);
        if t_min < 0 || t_max >= src.layout.len as i64 {
            return Err(Error::Window(format!(
                "window too small to cover dependency cone at level {} (needs offsets {t_min}..={t_max}, has {})",
                l + 1,
                src.layout.len
            )));
        }
    }
    let (q0, q1) = target.copy_range(&support_last(l + 1, k));
    let copies: Vec<Vec<Interval>> = (q0..=q1)
        .into_par_iter()
        .map(|q| {
            let sq = q + s;
            (0..target.len as i64)
                .map(|tp| {
                    let mut acc = Interval::zero(prec);
                    let mut m = m_top;
                    if (delta + tp - m).rem_euclid(2) != 0 {
                        m -= 1;
                    }
                    while m >= 0 {
                        let t = (delta + tp - m) / 2;
                        acc.add_mul_assign(src.rel(t, sq), &u[m as usize]);
                        m -= 2;
                    }
                    acc
                })
                .collect()
        })
        .collect();
    Ok(CopyArray { layout: target.clone(), k, q0, copies, zero: Interval::zero(prec) })
}

fn binomial(n: usize, i: usize) -> i64 {
    (0..i).fold(1i64, |acc, r| acc * (n - r) as i64 / (r + 1) as i64)
}

/// `f^(n)_{l,k} = sum_i C(n,i) (-1)^i g_{l,k-2^l i}` for `k < 2^l (2K-1)`.
fn f_from_g(g: &CopyArray, n: usize, prec: Precision) -> CopyArray {
    let layout = g.layout.clone();
    let last = range_last(layout.l, g.k);
    let (q0, q1) = layout.copy_range(&last);
    let weights: Vec<Interval> = (0..=n)
        .map(|i| {
            let b = binomial(n, i);
            Interval::from_i64(if i % 2 == 0 { b } else { -b }, prec)
        })
        .collect();
    let copies = (q0..=q1)
        .into_par_iter()
        .map(|q| {
            let (t0, t1) = layout.valid_offsets(q, &last);
            (0..layout.len)
                .map(|t| {
                    if t < t0 || t >= t1 {
                        return Interval::zero(prec);
                    }
                    let mut acc = Interval::zero(prec);
                    for (i, w) in weights.iter().enumerate() {
                        acc.add_mul_assign(w, g.rel(t as i64, q - i as i64));
                    }
                    acc
                })
                .collect()
        })
        .collect();
    CopyArray { layout, k: g.k, q0, copies, zero: Interval::zero(prec) }
}

/// Contraction certificate from level `level`: for every `j`,
/// `|f_j - f| <= c_const * 2^(-j * alpha_used)`.
#[derive(Clone, Debug)]
pub struct Certificate {
    pub level: u32,
    pub alpha: Interval,
    pub alpha_used: Float,
    pub c_const: Interval,
}

impl Certificate {
    /// Upper bound on the error at level `j`.
    pub fn eps_at(&self, j: u32) -> Float {
        if self.c_const.hi().is_zero() {
            return Float::new(self.c_const.prec());
        }
        let p = Precision::new(self.c_const.prec()).expect("valid precision");
        let e = Interval::from_float(&self.alpha_used, p).mul_i64(-(j as i64)).exp2();
        self.c_const.mul(&e).hi().clone()
    }
}

/// `alpha = 1 - log2(rho) / l` as an interval.
fn alpha_from_rho(rho: &Interval, l: u32, prec: Precision) -> Interval {
    let one = Interval::one(prec);
    let lf = Interval::from_i64(l as i64, prec);
    let hi_part = if rho.lo().is_sign_positive() && !rho.lo().is_zero() {
        Some(Interval::from_float(rho.lo(), prec).log2().expect("positive"))
    } else {
        None
    };
    let lo_part = Interval::from_float(rho.hi(), prec).log2().expect("row sums are positive");
    let a_lo = one.sub(&lo_part.div(&lf).expect("l >= 1"));
    let a_hi = match hi_part {
        Some(h) => one.sub(&h.div(&lf).expect("l >= 1")),
        None => Interval::from_f64(1e300, prec),
    };
    Interval::from_floats(a_lo.lo().clone(), a_hi.hi().clone()).unwrap_or(a_lo)
}

/// `(1 - 2^-a)^-1 * max_{l'<l} 2^((a-1) l') M_l' * D` with `a = alpha_used`.
fn c_bound(alpha_used: &Float, m_hist: &[Float], defect: &Interval, prec: Precision) -> Result<Interval> {
    let a = Interval::from_float(alpha_used, prec);
    let one = Interval::one(prec);
    let f1 = one.sub(&a.neg().exp2()).recip()?;
    let mut f2 = Interval::zero(prec);
    for (lp, m) in m_hist.iter().enumerate() {
        let w = a.sub(&one).mul_i64(lp as i64).exp2().mul(&Interval::from_float(m, prec));
        f2 = f2.max(&w);
    }
    Ok(f1.mul(&f2).mul(defect))
}

/// Per-derivative bookkeeping for the certificates of `f^(n)`.
#[derive(Clone, Debug)]
struct DerivState {
    defect: Interval,
    /// max |f^(n+1)_{l,k}| over the tracked indices, one entry per level.
    m_hist: Vec<Float>,
    rho: Option<Interval>,
    alpha: Option<Interval>,
    certs: Vec<Certificate>,
}

/// Incremental cascade over levels `0, 1, 2, ...` on shrinking windows.
///
/// Holds `g^(n)` for `n = 0..=nmax+1` at the current level; the extra order
/// feeds the error bounds of `f^(nmax)`.
pub struct Ladder {
    k: usize,
    nmax: usize,
    prec: Precision,
    filters: Vec<Vec<Interval>>,
    window: TorusWindow,
    g: Vec<CopyArray>,
    f: Vec<CopyArray>,
    derivs: Vec<DerivState>,
}

impl Ladder {
    pub fn new(bank: &FilterBank, nmax: usize) -> Result<Ladder> {
        let prec = bank.precision;
        let filters: Vec<Vec<Interval>> = (0..=nmax + 1).map(|n| derive_filter(bank, n).coeffs).collect();
        let k = bank.k;
        let g: Vec<CopyArray> = (0..=nmax + 1).map(|_| initial_g(k, prec)).collect();
        let derivs = (0..=nmax)
            .map(|n| DerivState {
                defect: parity_defect(&filters[n], prec),
                m_hist: Vec::new(),
                rho: None,
                alpha: None,
                certs: Vec::new(),
            })
            .collect();
        let mut ladder =
            Ladder { k, nmax, prec, filters, window: TorusWindow::full(0), g, f: Vec::new(), derivs };
        ladder.seal_level()?;
        Ok(ladder)
    }

    pub fn level(&self) -> u32 {
        self.window.level
    }

    pub fn window(&self) -> &TorusWindow {
        &self.window
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn precision(&self) -> Precision {
        self.prec
    }

    pub fn g(&self, n: usize) -> &CopyArray {
        &self.g[n]
    }

    pub fn f(&self, n: usize) -> &CopyArray {
        &self.f[n]
    }

    /// Refines to level `j + 1` on `next`, which must lie inside the
    /// refinement of the current window.
    pub fn advance(&mut self, next: &TorusWindow) -> Result<()> {
        if next.level != self.window.level + 1 || !next.is_subset_of(&self.window.refine()) {
            return Err(Error::Window("next window must lie inside the refined current window".into()));
        }
        let layout = Layout::for_window(next, self.k)?;
        let prec = self.prec;
        let new_g = self
            .g
            .iter()
            .zip(&self.filters)
            .map(|(g, u)| step_g(g, u, &layout, prec))
            .collect::<Result<Vec<_>>>()?;
        self.g = new_g;
        self.window = next.clone();
        self.seal_level()
    }

    /// Runs from the current level up to `j`, using the cone of `target`.
    pub fn advance_to(&mut self, target: &TorusWindow) -> Result<()> {
        while self.level() < target.level {
            let next = target.at_level(self.level() + 1);
            self.advance(&next)?;
        }
        Ok(())
    }

    fn seal_level(&mut self) -> Result<()> {
        let prec = self.prec;
        let l = self.level();
        self.f = self.g.iter().enumerate().map(|(n, g)| f_from_g(g, n, prec)).collect();
        let last_range = range_last(l, self.k);
        for n in 0..=self.nmax {
            let m = self.f[n + 1].max_mag_upto(&last_range, prec);
            let st = &mut self.derivs[n];
            st.m_hist.push(m);
            if l == 0 {
                continue;
            }
            let rho = self.g[n + 1].max_residue_sum(&last_range, prec);
            let alpha = alpha_from_rho(&rho, l, prec);
            st.rho = Some(rho);
            st.alpha = Some(alpha.clone());
            let exact_zero = st.defect.lo().is_zero() && st.defect.hi().is_zero();
            if exact_zero {
                st.certs.push(Certificate {
                    level: l,
                    alpha: alpha.clone(),
                    alpha_used: alpha.lo().clone(),
                    c_const: Interval::zero(prec),
                });
            } else if alpha.lo().is_sign_positive() && !alpha.lo().is_zero() {
                let hist = &st.m_hist[..l as usize];
                let c = c_bound(alpha.lo(), hist, &st.defect, prec)?;
                st.certs.push(Certificate { level: l, alpha: alpha.clone(), alpha_used: alpha.lo().clone(), c_const: c });
            }
        }
        Ok(())
    }

    /// Alpha enclosure at the current level for `f^(n)`.
    pub fn alpha(&self, n: usize) -> Option<&Interval> {
        self.derivs[n].alpha.as_ref()
    }

    pub fn rho(&self, n: usize) -> Option<&Interval> {
        self.derivs[n].rho.as_ref()
    }

    /// Certificate computed at the current level, if contraction held.
    pub fn current_certificate(&self, n: usize) -> Option<&Certificate> {
        self.derivs[n].certs.last().filter(|c| c.level == self.level())
    }

    pub fn certificates(&self, n: usize) -> &[Certificate] {
        &self.derivs[n].certs
    }

    pub fn parity_defect(&self, n: usize) -> &Interval {
        &self.derivs[n].defect
    }

    /// Best error bound at the current level over all certificates so far.
    pub fn best(&self, n: usize) -> Option<(Float, &Certificate)> {
        let j = self.level();
        self.derivs[n]
            .certs
            .iter()
            .map(|c| (c.eps_at(j), c))
            .min_by(|a, b| a.0.partial_cmp(&b.0).expect("finite bounds"))
    }

    pub fn eps(&self, n: usize) -> Option<Float> {
        self.best(n).map(|(e, _)| e)
    }

    /// Widest `f^(n)` value over the window's cells, all shifts.
    pub fn rounding_width(&self, n: usize) -> f64 {
        let f = &self.f[n];
        if f.layout.full {
            f.max_width_on(0..f.layout.len)
        } else {
            f.max_width_on(2 * self.k - 2..f.layout.len)
        }
    }

    /// Snapshot of `f^(n)` at the current level as a function enclosure.
    pub fn enclosure(&self, n: usize) -> FunctionEnclosure {
        let best = self.best(n);
        FunctionEnclosure {
            n,
            j: self.level(),
            k: self.k,
            window: self.window.clone(),
            values: self.f[n].clone(),
            alpha: self.alpha(n).cloned(),
            c_const: best.as_ref().map(|(_, c)| c.c_const.clone()),
            eps: best.map(|(e, _)| Interval::from_float(&e, self.prec).hull(&Interval::zero(self.prec))),
        }
    }
}

/// Cellwise enclosure of `phi^(n)` at level `j` on a torus window.
///
/// For `x` in the window, `phi^(n)(x)` lies in the value of cell
/// `floor(2^j (x + K - 1))` widened by `eps.hi`.
#[derive(Clone, Debug)]
pub struct FunctionEnclosure {
    pub n: usize,
    pub j: u32,
    pub k: usize,
    pub window: TorusWindow,
    values: CopyArray,
    pub alpha: Option<Interval>,
    pub c_const: Option<Interval>,
    /// `[0, eps]`, absent when no certificate is available.
    pub eps: Option<Interval>,
}

impl FunctionEnclosure {
    /// Cascade value `f^(n)_{j,k}`, if `k` is tracked.
    pub fn cell(&self, k: &Integer) -> Option<&Interval> {
        if *k < 0 || *k > range_last(self.j, self.k) {
            return None;
        }
        self.values.get(k)
    }

    pub fn eps_hi(&self) -> Option<&Float> {
        self.eps.as_ref().map(Interval::hi)
    }

    /// Cell index `floor(2^j (x + K - 1))` for a point `x` in `[1-K, K)`.
    pub fn cell_index(&self, x: &Float) -> Option<Integer> {
        let shifted = Float::with_val(x.prec() + 64, x + (self.k as i64 - 1)) << self.j;
        let idx = shifted.floor().to_integer()?;
        if idx < 0 || idx > range_last(self.j, self.k) {
            return None;
        }
        Some(idx)
    }

    /// Enclosure of `phi^(n)(x)`: cell value widened by eps.
    pub fn eval(&self, x: &Float) -> Option<Interval> {
        let eps = self.eps_hi()?;
        let c = self.cell(&self.cell_index(x)?)?;
        Some(c.inflate(eps))
    }

    /// Tracked cascade values with `0 <= k < 2^j (2K - 1)`.
    pub fn cells(&self) -> BTreeMap<Integer, Interval> {
        self.values
            .entries_upto(&range_last(self.j, self.k))
            .into_iter()
            .map(|(k, v)| (k, v.clone()))
            .collect()
    }

    /// The `2K - 1` values `f_{j, c + 2^j p}` for window cell `a + i`.
    pub fn shifts(&self, i: usize) -> Option<Vec<&Interval>> {
        let cells = self.window.cell_count_usize()?;
        if i >= cells {
            return None;
        }
        let c = Integer::from(&self.window.a + i as u64);
        let wrap = if c >= self.window.period() { 1 } else { 0 };
        let t = Integer::from(&c - &self.values.layout.lo).to_i64()?;
        Some((0..(2 * self.k - 1) as i64).map(|p| self.values.rel(t, p - wrap)).collect())
    }

    pub fn max_abs(&self) -> Float {
        self.values.max_mag_upto(&range_last(self.j, self.k), Precision::new(self.values.zero.prec()).unwrap())
    }
}

/// Level-`j` array of `filter`'s cascade, tracked on `J(j)` of `window`.
pub fn cascade_g(filter: &DerivedFilter, j: u32, window: &TorusWindow, prec: Precision) -> Result<CopyArray> {
    let k = filter.coeffs.len() / 2;
    let mut g = initial_g(k, prec);
    let target = window.at_level(j);
    for l in 1..=j {
        let w = target.at_level(l);
        let layout = Layout::for_window(&w, k)?;
        g = step_g(&g, &filter.coeffs, &layout, prec)?;
    }
    Ok(g)
}

/// Runs the ladder up to `j` on the cone of `window` and returns the
/// enclosure of `phi^(n)`; errors if contraction fails at level `j`.
pub fn cascade_f(bank: &FilterBank, n: usize, j: u32, window: &TorusWindow) -> Result<FunctionEnclosure> {
    let ladder = ladder_to(bank, n, j, window)?;
    let enc = ladder.enclosure(n);
    let exact = {
        let d = ladder.parity_defect(n);
        d.lo().is_zero() && d.hi().is_zero()
    };
    if !exact && ladder.current_certificate(n).is_none() {
        return Err(Error::NoCertificate { n, j });
    }
    Ok(enc)
}

fn ladder_to(bank: &FilterBank, n: usize, j: u32, window: &TorusWindow) -> Result<Ladder> {
    let mut ladder = Ladder::new(bank, n)?;
    ladder.advance_to(&window.at_level(j))?;
    Ok(ladder)
}

/// Enclosure of the windowed contraction exponent at level `j >= 1`.
pub fn alpha_bound(bank: &FilterBank, n: usize, j: u32, window: &TorusWindow) -> Result<Interval> {
    if j == 0 {
        return Err(Error::InvalidArgument("alpha needs j >= 1".into()));
    }
    let ladder = ladder_to(bank, n, j, window)?;
    Ok(ladder.alpha(n).cloned().expect("j >= 1"))
}

/// Upper bound on the level-`j` error constant, evaluated at the lower end
/// of the alpha enclosure.
pub fn error_constant(bank: &FilterBank, n: usize, j: u32, window: &TorusWindow) -> Result<Interval> {
    if j == 0 {
        return Err(Error::InvalidArgument("error constant needs j >= 1".into()));
    }
    let ladder = ladder_to(bank, n, j, window)?;
    ladder.current_certificate(n).map(|c| c.c_const.clone()).ok_or(Error::NoCertificate { n, j })
}

/// CSV rows `k, x_left, f_lo, f_hi` for the window cells and their shifts,
/// preceded by `#` metadata lines.
pub fn enclosure_csv(enc: &FunctionEnclosure, family: &str, n_moments: usize, digits: usize) -> String {
    let mut out = String::new();
    let alpha = enc.alpha.as_ref().map(|a| a.lo_decimal(digits)).unwrap_or_else(|| "none".into());
    let c = enc.c_const.as_ref().map(|c| c.hi_decimal(digits)).unwrap_or_else(|| "none".into());
    let eps = enc.eps.as_ref().map(|e| e.hi_decimal(digits)).unwrap_or_else(|| "inf".into());
    out.push_str(&format!("# family={family}\n# N={n_moments}\n# n={}\n# j={}\n", enc.n, enc.j));
    out.push_str(&format!("# alpha_lo={alpha}\n# C_hi={c}\n# eps_hi={eps}\n"));
    out.push_str("k,x_left,f_lo,f_hi\n");
    let prec = enc.values.zero.prec();
    for (k, v) in enc.cells().into_iter().filter(|(k, _)| enc.window.contains_cell(k)) {
        let x = (Float::with_val(prec.max(k.significant_bits() + 8), &k) >> enc.j) - (enc.k as i64 - 1);
        out.push_str(&format!(
            "{k},{},{},{}\n",
            x.to_string_radix(10, None),
            v.lo_decimal(digits),
            v.hi_decimal(digits)
        ));
    }
    out
}
