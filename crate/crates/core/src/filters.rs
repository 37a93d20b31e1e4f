//! Two-scale filter coefficients with rigorous enclosures.
//!
//! Coefficients are indexed so that `u[k]` multiplies `phi(2x + K - k)` and
//! both parity sums equal 1. Daubechies and symlet filters are built by
//! spectral factorization: the roots of the Daubechies polynomial are found
//! numerically, certified by disjoint inclusion discs, and multiplied out in
//! interval arithmetic.

use std::f64::consts::PI;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rug::float::Round;
use rug::{Float, Integer};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interval::{Interval, Precision};

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Daubechies,
    Symlet,
    Custom,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::Daubechies => "daubechies",
            Family::Symlet => "symlet",
            Family::Custom => "custom",
        })
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "daubechies" | "db" => Ok(Family::Daubechies),
            "symlet" | "sym" => Ok(Family::Symlet),
            "custom" => Ok(Family::Custom),
            other => Err(Error::InvalidArgument(format!("unknown family {other:?}"))),
        }
    }
}

/// Filter `u^(0)` of length `2K`, plus the number of vanishing moments.
#[derive(Clone, Debug)]
pub struct FilterBank {
    pub family: Family,
    pub n_moments: usize,
    pub k: usize,
    pub u0: Vec<Interval>,
    pub precision: Precision,
}

impl FilterBank {
    /// Wraps coefficients after checking length, normalization, and the
    /// first `n_moments` moment sums. Errors name the failing sum.
    pub fn new(family: Family, n_moments: usize, u0: Vec<Interval>, precision: Precision) -> Result<Self> {
        if u0.is_empty() || !u0.len().is_multiple_of(2) {
            return Err(Error::InvalidFilter(format!(
                "filter length must be even and positive, got {}",
                u0.len()
            )));
        }
        let k = u0.len() / 2;
        let bank = FilterBank { family, n_moments, k, u0, precision };
        let (even, odd) = bank.parity_sums();
        if !even.contains_f64(1.0) {
            return Err(Error::InvalidFilter(format!("even parity sum {even} does not contain 1")));
        }
        if !odd.contains_f64(1.0) {
            return Err(Error::InvalidFilter(format!("odd parity sum {odd} does not contain 1")));
        }
        for i in 0..n_moments {
            let m = bank.moment(i);
            if !m.contains_zero() {
                return Err(Error::InvalidFilter(format!(
                    "moment sum {i} (alternating, power {i}) = {m} does not contain 0"
                )));
            }
        }
        Ok(bank)
    }

    pub fn len(&self) -> usize {
        self.u0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u0.is_empty()
    }

    /// `(sum of even-index, sum of odd-index)` coefficients.
    pub fn parity_sums(&self) -> (Interval, Interval) {
        let mut even = Interval::zero(self.precision);
        let mut odd = Interval::zero(self.precision);
        for (k, u) in self.u0.iter().enumerate() {
            if k % 2 == 0 {
                even.add_assign(u);
            } else {
                odd.add_assign(u);
            }
        }
        (even, odd)
    }

    /// `sum_k (-1)^k k^i u_k`.
    pub fn moment(&self, i: usize) -> Interval {
        let p = self.precision;
        let mut acc = Interval::zero(p);
        for (k, u) in self.u0.iter().enumerate() {
            let pow = Integer::from(Integer::u_pow_u(k as u32, i as u32));
            let mut w = Interval::from_integer(&pow, p);
            if k % 2 == 1 {
                w = w.neg();
            }
            acc.add_mul_assign(&w, u);
        }
        acc
    }

    /// Largest `m` such that moment sums `0..m` all contain zero.
    pub fn detected_moments(&self) -> usize {
        (0..self.u0.len()).take_while(|&i| self.moment(i).contains_zero()).count()
    }

    /// Widest coefficient enclosure.
    pub fn max_width(&self) -> f64 {
        self.u0.iter().map(Interval::width_f64).fold(0.0, f64::max)
    }

    pub fn label(&self) -> String {
        match self.family {
            Family::Daubechies => format!("db{}", self.n_moments),
            Family::Symlet => format!("sym{}", self.n_moments),
            Family::Custom => format!("custom{}", self.k),
        }
    }
}

/// Extremal-phase Daubechies filter with `n` vanishing moments.
pub fn daubechies_filter(n: usize, prec: Precision) -> Result<FilterBank> {
    build_family(Family::Daubechies, n, prec)
}

/// Least-asymmetric filter with `n >= 4` vanishing moments.
///
/// Root groups (a real root, or a conjugate pair) are flipped to their
/// reciprocals exhaustively. The chosen flip minimizes
/// `min_l sum_w (theta(w) + l w)^2` over half-integer delays `l`, where
/// `theta` is the unwrapped phase on 2001 equispaced frequencies in `[0, pi]`.
pub fn symlet_filter(n: usize, prec: Precision) -> Result<FilterBank> {
    if n < 4 {
        return Err(Error::InvalidArgument(format!("symlets need N >= 4, got {n}")));
    }
    build_family(Family::Symlet, n, prec)
}

pub fn builtin_filter(family: &Family, n: usize, prec: Precision) -> Result<FilterBank> {
    match family {
        Family::Daubechies => daubechies_filter(n, prec),
        Family::Symlet => symlet_filter(n, prec),
        Family::Custom => Err(Error::InvalidArgument("custom filters are loaded from files".into())),
    }
}

/// Reads `value radius` pairs, one per line. `#` starts a comment; a line
/// with a single token has radius 0.
pub fn load_filter(path: &Path, prec: Precision) -> Result<FilterBank> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_filter(&text, prec)
}

pub fn parse_filter(text: &str, prec: Precision) -> Result<FilterBank> {
    let mut u0 = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        let parse_err = |msg: String| Error::Parse { line: idx + 1, msg };
        let iv = match toks.as_slice() {
            [v] => Interval::from_decimal(v, prec),
            [v, r] => Interval::from_decimal_radius(v, r, prec),
            _ => return Err(parse_err(format!("expected `value radius`, got {line:?}"))),
        }
        .map_err(|e| parse_err(e.to_string()))?;
        u0.push(iv);
    }
    if u0.len() % 2 != 0 || u0.is_empty() {
        return Err(Error::InvalidFilter(format!(
            "filter length must be even and positive, got {}",
            u0.len()
        )));
    }
    let probe = FilterBank::new(Family::Custom, 0, u0, prec)?;
    let n = probe.detected_moments();
    if n == 0 {
        return Err(Error::InvalidFilter(format!(
            "moment sum 0 (alternating) = {} does not contain 0",
            probe.moment(0)
        )));
    }
    FilterBank::new(Family::Custom, n, probe.u0, prec)
}

/// Coefficient-file lines `value radius` for `bank`, `digits` significant
/// digits per value. The radius is an upward-rounded bound on the distance
/// from the printed value to either endpoint, so reading the file back
/// yields enclosures of the original intervals.
pub fn format_filter(bank: &FilterBank, digits: usize) -> String {
    let mut out = String::new();
    for c in &bank.u0 {
        let p = c.prec() + 64;
        let value = c.mid().to_string_radix(10, Some(digits.max(2)));
        let v = Float::with_val(p, Float::parse(&value).expect("own output parses"));
        let a = Float::with_val_round(p, &v - c.lo(), rug::float::Round::Up).0.abs();
        let b = Float::with_val_round(p, c.hi() - &v, rug::float::Round::Up).0.abs();
        let r = a.max(&b);
        let radius = r.to_string_radix_round(10, Some(3), rug::float::Round::Up);
        out.push_str(&format!("{value} {radius}\n"));
    }
    out
}

fn build_family(family: Family, n: usize, prec: Precision) -> Result<FilterBank> {
    if n == 0 {
        return Err(Error::InvalidArgument("N must be at least 1".into()));
    }
    // Guard bits absorb the growth of root radii through the product.
    let work = Precision::new(prec.bits() + 64 + 8 * n as u32)?;
    let roots = certified_roots(n, work)?;
    let flips = match family {
        Family::Symlet => least_asymmetric_flips(n, &roots),
        _ => vec![false; roots.len()],
    };
    let v = expand_filter(n, &roots, &flips, work)?;
    let u0 = normalize(&v, work)?.into_iter().map(|x| x.with_precision(prec)).collect();
    FilterBank::new(family, n, u0, prec)
}

// Complex approximations for root finding. Only the final certification is
// rigorous, so these use round-to-nearest.
#[derive(Clone, Debug)]
struct Cx {
    re: Float,
    im: Float,
}

impl Cx {
    fn new(p: u32, re: f64, im: f64) -> Cx {
        Cx { re: Float::with_val(p, re), im: Float::with_val(p, im) }
    }

    fn prec(&self) -> u32 {
        self.re.prec()
    }

    fn add(&self, o: &Cx) -> Cx {
        let p = self.prec();
        Cx { re: Float::with_val(p, &self.re + &o.re), im: Float::with_val(p, &self.im + &o.im) }
    }

    fn sub(&self, o: &Cx) -> Cx {
        let p = self.prec();
        Cx { re: Float::with_val(p, &self.re - &o.re), im: Float::with_val(p, &self.im - &o.im) }
    }

    fn mul(&self, o: &Cx) -> Cx {
        let p = self.prec();
        let re = Float::with_val(p, &self.re * &o.re) - Float::with_val(p, &self.im * &o.im);
        let im = Float::with_val(p, &self.re * &o.im) + Float::with_val(p, &self.im * &o.re);
        Cx { re, im }
    }

    fn norm_sqr(&self) -> Float {
        let p = self.prec();
        Float::with_val(p, self.re.square_ref()) + Float::with_val(p, self.im.square_ref())
    }

    fn abs(&self) -> Float {
        self.norm_sqr().sqrt()
    }

    fn recip(&self) -> Cx {
        let d = self.norm_sqr();
        let p = self.prec();
        Cx { re: Float::with_val(p, &self.re / &d), im: -Float::with_val(p, &self.im / &d) }
    }

    fn div(&self, o: &Cx) -> Cx {
        self.mul(&o.recip())
    }

    fn conj(&self) -> Cx {
        Cx { re: self.re.clone(), im: Float::with_val(self.prec(), -&self.im) }
    }

    fn sqrt(&self) -> Cx {
        let p = self.prec();
        let r = self.abs();
        let mut re = Float::with_val(p, &r + &self.re);
        re /= 2;
        let re = re.sqrt();
        let mut im = Float::with_val(p, &r - &self.re);
        im /= 2;
        let mut im = im.sqrt();
        if self.im < 0 {
            im = -im;
        }
        Cx { re, im }
    }

    fn to_f64(&self) -> (f64, f64) {
        (self.re.to_f64(), self.im.to_f64())
    }
}

/// Horner evaluation of `p` (ascending coefficients) and its derivative.
fn eval_with_derivative(coef: &[Float], z: &Cx) -> (Cx, Cx) {
    let p = z.prec();
    let zero = Cx::new(p, 0.0, 0.0);
    let mut v = zero.clone();
    let mut d = zero;
    for c in coef.iter().rev() {
        d = d.mul(z).add(&v);
        v = v.mul(z);
        v.re += c;
    }
    (v, d)
}

/// Aberth-Ehrlich iteration on a polynomial with real coefficients.
fn aberth(coef: &[Float], prec: u32) -> Result<Vec<Cx>> {
    let deg = coef.len() - 1;
    if deg == 0 {
        return Ok(Vec::new());
    }
    let lead = coef[deg].to_f64().abs();
    let tail = coef[0].to_f64().abs();
    let rho = (tail / lead).powf(1.0 / deg as f64).max(1e-3);
    let mut z: Vec<Cx> = (0..deg)
        .map(|i| {
            let t = 2.0 * PI * i as f64 / deg as f64 + 0.4;
            Cx::new(prec, rho * t.cos(), rho * t.sin())
        })
        .collect();
    let tol = Float::with_val(prec, Float::i_exp(1, -(prec as i32) + 16));
    for _ in 0..2000 {
        let mut worst = Float::new(prec);
        for i in 0..deg {
            let (v, d) = eval_with_derivative(coef, &z[i]);
            if v.norm_sqr() == 0 {
                continue;
            }
            let ratio = v.div(&d);
            let mut s = Cx::new(prec, 0.0, 0.0);
            for (jj, zj) in z.iter().enumerate() {
                if jj != i {
                    s = s.add(&z[i].sub(zj).recip());
                }
            }
            let one = Cx::new(prec, 1.0, 0.0);
            let w = ratio.div(&one.sub(&ratio.mul(&s)));
            let scale = z[i].abs().max(&Float::with_val(prec, 1));
            let rel = Float::with_val(prec, w.abs() / &scale);
            if rel > worst {
                worst = rel;
            }
            z[i] = z[i].sub(&w);
        }
        if worst < tol {
            return Ok(z);
        }
    }
    Err(Error::Precision("root iteration did not converge; raise precision".into()))
}

/// Certified root of the Daubechies polynomial in `z`, as a disc.
#[derive(Clone, Debug)]
struct RootDisc {
    center: Cx,
    radius: Float,
}

/// A group of roots inside the unit disc that flip together: one real root,
/// or a conjugate pair stored by its upper representative.
#[derive(Clone, Debug)]
struct RootGroup {
    inner: RootDisc,
    outer: RootDisc,
    real: bool,
}

/// Integer coefficients (ascending) of
/// `sum_{k<N} C(N-1+k, k) 4^(N-1-k) (-1)^k z^(N-1-k) (z-1)^(2k)`.
fn z_polynomial(n: usize) -> Vec<Integer> {
    let deg = 2 * n - 2;
    let mut c = vec![Integer::new(); deg + 1];
    for k in 0..n {
        let b = Integer::from(Integer::binomial_u((n - 1 + k) as u32, k as u32));
        let scale = b * (Integer::from(1) << (2 * (n - 1 - k)) as u32);
        for t in 0..=2 * k {
            // (z-1)^(2k) = sum_t C(2k, t) z^t (-1)^(2k-t)
            let mut term = Integer::from(Integer::binomial_u(2 * k as u32, t as u32)) * &scale;
            if (2 * k - t + k) % 2 == 1 {
                term = -term;
            }
            c[n - 1 - k + t] += term;
        }
    }
    c
}

fn certified_roots(n: usize, work: Precision) -> Result<Vec<RootGroup>> {
    if n == 1 {
        return Ok(Vec::new());
    }
    let p = work.bits();
    // Roots in y = sin^2(w/2), then z from z^2 - (2 - 4y) z + 1 = 0.
    let ycoef: Vec<Float> = (0..n)
        .map(|k| Float::with_val(p, Integer::from(Integer::binomial_u((n - 1 + k) as u32, k as u32))))
        .collect();
    let ys = aberth(&ycoef, p)?;
    let zpoly = z_polynomial(n);
    let zcoef: Vec<Float> = zpoly.iter().map(|c| Float::with_val(p, c)).collect();

    let mut reps: Vec<(Cx, bool)> = Vec::new();
    let scale_tol = Float::with_val(p, Float::i_exp(1, -(p as i32) / 2));
    for y in &ys {
        let real = y.im.clone().abs() < scale_tol;
        if !real && y.im < 0 {
            continue;
        }
        let y = if real { Cx { re: y.re.clone(), im: Float::new(p) } } else { y.clone() };
        let mut c = Cx::new(p, 2.0, 0.0);
        let four_y = Cx { re: Float::with_val(p, &y.re * 4), im: Float::with_val(p, &y.im * 4) };
        c = c.sub(&four_y);
        let disc = c.mul(&c).sub(&Cx::new(p, 4.0, 0.0));
        let s = if real { Cx { re: disc.re.clone().abs().sqrt(), im: Float::new(p) } } else { disc.sqrt() };
        let half = |x: Cx| Cx { re: Float::with_val(p, &x.re / 2), im: Float::with_val(p, &x.im / 2) };
        let z1 = half(c.add(&s));
        let z2 = half(c.sub(&s));
        let inner = if z1.abs() < z2.abs() { z1 } else { z2 };
        reps.push((inner, real));
    }
    if reps.iter().map(|(_, r)| if *r { 1 } else { 2 }).sum::<usize>() != n - 1 {
        return Err(Error::Precision("could not pair conjugate roots; raise precision".into()));
    }

    // Newton polishing on the integer polynomial, keeping real roots real.
    let polish = |mut z: Cx| -> Cx {
        for _ in 0..8 {
            let (v, d) = eval_with_derivative(&zcoef, &z);
            if v.norm_sqr() == 0 {
                break;
            }
            z = z.sub(&v.div(&d));
        }
        z
    };
    let mut centers: Vec<(Cx, Cx, bool)> = reps
        .into_iter()
        .map(|(zi, real)| {
            let zo = zi.recip();
            let mut zi = polish(zi);
            let mut zo = polish(zo);
            if real {
                zi.im = Float::new(p);
                zo.im = Float::new(p);
            }
            (zi, zo, real)
        })
        .collect();
    // Deterministic order: by real part, then imaginary part.
    centers.sort_by(|a, b| {
        let (ar, ai) = a.0.to_f64();
        let (br, bi) = b.0.to_f64();
        ar.total_cmp(&br).then(ai.total_cmp(&bi))
    });

    let mut all: Vec<Cx> = Vec::new();
    for (zi, zo, real) in &centers {
        all.push(zi.clone());
        all.push(zo.clone());
        if !real {
            all.push(zi.conj());
            all.push(zo.conj());
        }
    }
    let radii = inclusion_radii(&zpoly, &all, work)?;
    disjoint_or_err(&all, &radii, work)?;

    let mut groups = Vec::new();
    let mut idx = 0;
    for (zi, zo, real) in centers {
        let ri = radii[idx].clone();
        let ro = radii[idx + 1].clone();
        idx += if real { 2 } else { 4 };
        let inner = RootDisc { center: zi, radius: ri };
        if !inside_unit(&inner, work) {
            return Err(Error::Precision("root disc touches the unit circle; raise precision".into()));
        }
        groups.push(RootGroup { inner, outer: RootDisc { center: zo, radius: ro }, real });
    }
    Ok(groups)
}

fn point(x: &Float, prec: Precision) -> Interval {
    Interval::from_float(x, prec)
}

fn abs_sq(re: &Interval, im: &Interval) -> Interval {
    re.sqr().add(&im.sqr())
}

/// Smith inclusion radii `deg * |p(z_i)| / (|lead| prod_{j != i} |z_i - z_j|)`.
fn inclusion_radii(coef: &[Integer], z: &[Cx], prec: Precision) -> Result<Vec<Float>> {
    let deg = coef.len() - 1;
    let coefs: Vec<Interval> = coef.iter().map(|c| Interval::from_integer(c, prec)).collect();
    let lead = coefs[deg].abs();
    let mut out = Vec::with_capacity(z.len());
    for (i, zi) in z.iter().enumerate() {
        let (zr, zim) = (point(&zi.re, prec), point(&zi.im, prec));
        let mut vr = Interval::zero(prec);
        let mut vi = Interval::zero(prec);
        for c in coefs.iter().rev() {
            let nr = vr.mul(&zr).sub(&vi.mul(&zim)).add(c);
            let ni = vr.mul(&zim).add(&vi.mul(&zr));
            vr = nr;
            vi = ni;
        }
        let num = abs_sq(&vr, &vi).sqrt()?;
        let mut den = lead.clone();
        for (jj, zj) in z.iter().enumerate() {
            if jj == i {
                continue;
            }
            let dr = zr.sub(&point(&zj.re, prec));
            let di = zim.sub(&point(&zj.im, prec));
            den = den.mul(&abs_sq(&dr, &di).sqrt()?);
        }
        let r = num.mul_i64(deg as i64).div(&den).map_err(|_| {
            Error::Precision("coincident root approximations; raise precision".into())
        })?;
        out.push(r.hi().clone());
    }
    Ok(out)
}

fn disjoint_or_err(z: &[Cx], r: &[Float], prec: Precision) -> Result<()> {
    for i in 0..z.len() {
        for jj in i + 1..z.len() {
            let dr = point(&z[i].re, prec).sub(&point(&z[jj].re, prec));
            let di = point(&z[i].im, prec).sub(&point(&z[jj].im, prec));
            let dist = abs_sq(&dr, &di).sqrt()?;
            let reach = Float::with_val_round(prec.bits(), &r[i] + &r[jj], Round::Up).0;
            if *dist.lo() <= reach {
                return Err(Error::Precision("root inclusion discs overlap; raise precision".into()));
            }
        }
    }
    Ok(())
}

fn inside_unit(d: &RootDisc, prec: Precision) -> bool {
    let m = abs_sq(&point(&d.center.re, prec), &point(&d.center.im, prec)).sqrt().unwrap();
    let reach = m.hi().clone() + &d.radius;
    reach < 1
}

/// Ascending polynomial product with a factor, both as interval coefficients.
fn poly_mul(a: &[Interval], b: &[Interval], prec: Precision) -> Vec<Interval> {
    let mut out = vec![Interval::zero(prec); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (jj, y) in b.iter().enumerate() {
            out[i + jj].add_mul_assign(x, y);
        }
    }
    out
}

/// Linear or quadratic real factor whose root(s) lie in the disc.
fn disc_factor(d: &RootDisc, real: bool, prec: Precision) -> Vec<Interval> {
    let re = point(&d.center.re, prec).inflate(&d.radius);
    if real {
        return vec![re.neg(), Interval::one(prec)];
    }
    // (z - w)(z - conj w) = z^2 - 2 Re(w) z + |w|^2
    let m = abs_sq(&point(&d.center.re, prec), &point(&d.center.im, prec)).sqrt().unwrap();
    let lo = Float::with_val_round(prec.bits(), m.lo() - &d.radius, Round::Down).0;
    let hi = Float::with_val_round(prec.bits(), m.hi() + &d.radius, Round::Up).0;
    let lo = if lo < 0 { Float::new(prec.bits()) } else { lo };
    let modulus = Interval::from_floats(lo, hi).expect("ordered");
    vec![modulus.sqr(), re.mul_i64(-2), Interval::one(prec)]
}

fn expand_filter(n: usize, groups: &[RootGroup], flips: &[bool], prec: Precision) -> Result<Vec<Interval>> {
    let mut v = vec![Interval::one(prec)];
    let lin = [Interval::one(prec), Interval::one(prec)];
    for _ in 0..n {
        v = poly_mul(&v, &lin, prec);
    }
    for (g, &flip) in groups.iter().zip(flips) {
        let d = if flip { &g.outer } else { &g.inner };
        v = poly_mul(&v, &disc_factor(d, g.real, prec), prec);
    }
    debug_assert_eq!(v.len(), 2 * n);
    // u_k multiplies phi(2x + K - k): coefficients in descending powers.
    v.reverse();
    Ok(v)
}

fn normalize(v: &[Interval], prec: Precision) -> Result<Vec<Interval>> {
    let total = crate::interval::sum(v.iter(), prec);
    let half = total.mul_pow2(-1);
    v.iter().map(|x| x.div(&half)).collect()
}

/// Unwrapped phase of `e^{-iw} - z` relative to `w = 0`, sampled on `grid`.
fn root_phase(z: (f64, f64), grid: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(grid.len());
    let mut prev = 0.0;
    let mut offset = 0.0;
    let mut base = 0.0;
    for (i, &w) in grid.iter().enumerate() {
        let a = (-w.sin() - z.1).atan2(w.cos() - z.0);
        if i == 0 {
            base = a;
        } else {
            let mut d = a + offset - prev;
            while d > PI {
                offset -= 2.0 * PI;
                d -= 2.0 * PI;
            }
            while d < -PI {
                offset += 2.0 * PI;
                d += 2.0 * PI;
            }
        }
        prev = a + offset;
        out.push(prev - base);
    }
    out
}

const PHASE_GRID: usize = 2001;

fn group_phase(d: &RootDisc, real: bool, grid: &[f64]) -> Vec<f64> {
    let z = d.center.to_f64();
    let mut ph = root_phase(z, grid);
    if !real {
        for (a, b) in ph.iter_mut().zip(root_phase((z.0, -z.1), grid)) {
            *a += b;
        }
    }
    ph
}

/// Flip pattern minimizing the half-integer-delay phase criterion. The first
/// group is pinned inside the unit disc, since flipping every group only
/// time-reverses the filter.
fn least_asymmetric_flips(n: usize, groups: &[RootGroup]) -> Vec<bool> {
    let grid: Vec<f64> = (0..PHASE_GRID).map(|i| PI * i as f64 / (PHASE_GRID - 1) as f64).collect();
    let inner: Vec<Vec<f64>> = groups.iter().map(|g| group_phase(&g.inner, g.real, &grid)).collect();
    let outer: Vec<Vec<f64>> = groups.iter().map(|g| group_phase(&g.outer, g.real, &grid)).collect();
    let sww: f64 = grid.iter().map(|w| w * w).sum();
    let free = groups.len().saturating_sub(1);
    let mut best = (f64::INFINITY, 0u64);
    for mask in 0..(1u64 << free) {
        let mut theta: Vec<f64> = grid.iter().map(|w| -(n as f64) * w / 2.0).collect();
        for (gi, (pin, pout)) in inner.iter().zip(&outer).enumerate() {
            let flipped = gi > 0 && (mask >> (gi - 1)) & 1 == 1;
            let src = if flipped { pout } else { pin };
            for (t, s) in theta.iter_mut().zip(src) {
                *t += s;
            }
        }
        let stt: f64 = theta.iter().map(|t| t * t).sum();
        let stw: f64 = theta.iter().zip(&grid).map(|(t, w)| t * w).sum();
        let score = (0..4 * n)
            .map(|h| {
                let l = h as f64 / 2.0;
                stt + 2.0 * l * stw + l * l * sww
            })
            .fold(f64::INFINITY, f64::min);
        if score < best.0 {
            best = (score, mask);
        }
    }
    (0..groups.len()).map(|gi| gi > 0 && (best.1 >> (gi - 1)) & 1 == 1).collect()
}
