//! Monte Carlo harness for the sup of the cyclostationary process
//! `X(t) = sigma_bar^-1 sum_k phi(t - k) Z_k` over one period `[0, 2^j)`.
//!
//! `phi` is sampled once from cascade midpoints; the certified distance
//! between those samples and the true values is folded into the reported
//! grid bias bound. Each replication draws its Gaussians from its own
//! ChaCha8 stream `(seed, rep)`, so serial and parallel runs agree bit for bit.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use rug::Integer;
use serde::Serialize;

use crate::asymptotics::{a_of, b_of, gumbel_tail, normalized_threshold, CriticalQuery};
use crate::cascade::{Ladder, TorusWindow, FULL_INDEX_CAP};
use crate::error::{Error, Result};
use crate::filters::{Family, FilterBank};
use crate::interval::{Interval, Precision};

/// Two-sided 99.9% standard normal quantile.
pub const Z_999: f64 = 3.290_526_731_491_926;

/// Point samples of `phi` at the dyadic points of depth `level`, plus
/// certified error information.
#[derive(Clone, Debug)]
pub struct PhiTable {
    pub k: usize,
    pub level: u32,
    /// `values[c]` approximates `phi(c / 2^level + 1 - K)`.
    values: Vec<f64>,
    /// Midpoints of the filter, used for the wavelet.
    u: Vec<f64>,
    /// Upper bound on `|phi(x) - sample|` over each sample's cell.
    pub value_error: Option<f64>,
    /// Upper bound on `sup_t sum_k |phi'(t - k)|`.
    pub derivative_sum: Option<f64>,
}

impl PhiTable {
    pub fn new(bank: &FilterBank, level: u32) -> Result<PhiTable> {
        let k = bank.k;
        let nmax = if k > 1 { 1 } else { 0 };
        let mut ladder = Ladder::new(bank, nmax)?;
        ladder.advance_to(&TorusWindow::full(level))?;
        let f0 = ladder.enclosure(0);
        let count = (2 * k - 1) << level;
        let mut values = Vec::with_capacity(count);
        let mut rad = 0.0f64;
        for c in 0..count {
            let v = f0.cell(&Integer::from(c)).ok_or_else(|| Error::Window("cell not tracked".into()))?;
            values.push(v.mid_f64());
            rad = rad.max(v.rad().to_f64() + f64::EPSILON * v.mag_f64());
        }
        let value_error = ladder.eps(0).map(|e| e.to_f64() + rad);
        let derivative_sum = if k == 1 {
            // Piecewise constant with breaks on the integer grid points.
            Some(0.0)
        } else {
            let f1 = ladder.enclosure(1);
            f1.eps_hi().map(|e| {
                let e = e.to_f64();
                let mut best = 0.0f64;
                for i in 0..1usize << level {
                    let s: f64 = f1.shifts(i).expect("full window").iter().map(|v| v.mag_f64() + e).sum();
                    best = best.max(s);
                }
                best
            })
        };
        Ok(PhiTable {
            k,
            level,
            values,
            u: bank.u0.iter().map(Interval::mid_f64).collect(),
            value_error,
            derivative_sum,
        })
    }

    /// `phi(num / 2^depth)`; zero outside the support. Needs `depth <= level`.
    pub fn phi(&self, num: i64, depth: u32) -> f64 {
        debug_assert!(depth <= self.level);
        let idx = (num << (self.level - depth)) + (((self.k - 1) as i64) << self.level);
        if idx < 0 || idx as usize >= self.values.len() {
            0.0
        } else {
            self.values[idx as usize]
        }
    }

    /// Wavelet `psi(x) = sum_m (-1)^m u_(2K-1-m) phi(2x + K - 1 - m)` at
    /// `num / 2^depth`. Needs `depth < level`.
    pub fn psi(&self, num: i64, depth: u32) -> f64 {
        let n = self.u.len();
        (0..n)
            .map(|m| {
                let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
                let arg = 2 * num + ((self.k as i64 - 1 - m as i64) << depth);
                sign * self.u[n - 1 - m] * self.phi(arg, depth)
            })
            .sum()
    }

    fn psi_error(&self, delta: f64) -> f64 {
        delta * self.u.iter().map(|v| v.abs()).sum::<f64>()
    }

    /// `sum_k 2^l g(2^l s - k) g(2^l t - k)` for `s = s_num / 2^depth`, with
    /// `g` either `phi` or `psi`, together with a first-order error bound
    /// from `value_error`.
    fn kernel(&self, wavelet: bool, l: u32, s_num: i64, t_num: i64, depth: u32, delta: f64) -> (f64, f64) {
        let scale = (l as f64).exp2();
        let lo = (s_num << l).div_euclid(1 << depth) - self.k as i64 - 1;
        let hi = lo + 2 * self.k as i64 + 2;
        let d = if wavelet { self.psi_error(delta) } else { delta };
        let (mut sum, mut err) = (0.0, 0.0);
        for kk in lo..=hi {
            let a_num = (s_num << l) - (kk << depth);
            let b_num = (t_num << l) - (kk << depth);
            let (a, b) = if wavelet {
                (self.psi(a_num, depth), self.psi(b_num, depth))
            } else {
                (self.phi(a_num, depth), self.phi(b_num, depth))
            };
            sum += a * b;
            err += a.abs() * d + b.abs() * d + d * d;
        }
        (scale * sum, scale * err)
    }

    /// Projection kernel of level `l` at `s = s_num / 2^depth`, `t = t_num / 2^depth`.
    pub fn projection_kernel(&self, l: u32, s_num: i64, t_num: i64, depth: u32) -> f64 {
        self.kernel(false, l, s_num, t_num, depth, 0.0).0
    }
}

/// Deepest full-torus cascade level within the index cap, at most 14.
pub fn max_table_level(k: usize) -> u32 {
    (0..=14u32).rev().find(|&l| (2 * k - 1) << l <= FULL_INDEX_CAP).unwrap_or(0)
}

/// Outcome of the change-of-basis check.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct KernelCheck {
    /// Largest `|P_j0 + sum_l W_l - P_j|` over the grid pairs.
    pub deviation: f64,
    /// Largest propagated bound of the sample errors over the grid pairs.
    pub error_budget: f64,
    pub pairs: usize,
}

/// Compares the multi-level kernel `P_j0 + sum_{j0 <= l < j} W_l` with the
/// single-level `P_j` on all pairs of `[0, 1]` grid points of depth
/// `grid_depth`.
pub fn kernel_identity_check(bank: &FilterBank, j0: u32, j: u32, grid_depth: u32) -> Result<KernelCheck> {
    if j0 > j {
        return Err(Error::InvalidArgument("need j0 <= j".into()));
    }
    let table = PhiTable::new(bank, max_table_level(bank.k).max(grid_depth + 1))?;
    let delta = table.value_error.ok_or(Error::NoCertificate { n: 0, j: table.level })?;
    let depth = grid_depth + 1;
    let n = 1i64 << grid_depth;
    let mut out = KernelCheck { deviation: 0.0, error_budget: 0.0, pairs: 0 };
    for s in 0..=n {
        for t in 0..=n {
            // Grid numerators at `depth` so the wavelet stays inside the table.
            let (sn, tn) = (2 * s, 2 * t);
            let (mut lhs, mut budget) = table.kernel(false, j0, sn, tn, depth, delta);
            for l in j0..j {
                let (w, e) = table.kernel(true, l, sn, tn, depth, delta);
                lhs += w;
                budget += e;
            }
            let (rhs, e) = table.kernel(false, j, sn, tn, depth, delta);
            out.deviation = out.deviation.max((lhs - rhs).abs());
            out.error_budget = out.error_budget.max(budget + e);
            out.pairs += 1;
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, Serialize)]
pub struct SimulationConfig {
    pub family: Family,
    #[serde(rename = "N")]
    pub n: usize,
    pub j: u32,
    pub grid_depth: u32,
    /// Level of the cascade the `phi` samples come from; at least `grid_depth`.
    pub cascade_level: u32,
    pub reps: usize,
    pub seed: u64,
    pub gammas: Vec<f64>,
}

impl SimulationConfig {
    pub fn new(bank: &FilterBank, j: u32, grid_depth: u32, reps: usize, seed: u64, gammas: Vec<f64>) -> Self {
        SimulationConfig {
            family: bank.family.clone(),
            n: bank.n_moments,
            j,
            grid_depth,
            cascade_level: max_table_level(bank.k).max(grid_depth),
            reps,
            seed,
            gammas,
        }
    }
}

/// Discretized process: for every grid fraction `r / 2^m` the `2K - 1`
/// weights `phi(r / 2^m + p) / sigma_bar`.
#[derive(Clone, Debug)]
pub struct ProcessModel {
    pub k: usize,
    pub j: u32,
    pub grid_depth: u32,
    pub sigma_bar: f64,
    weights: Vec<Vec<f64>>,
    pub table: PhiTable,
}

impl ProcessModel {
    pub fn new(bank: &FilterBank, sigma_bar_sq: f64, j: u32, grid_depth: u32, cascade_level: u32) -> Result<Self> {
        if cascade_level < grid_depth {
            return Err(Error::InvalidArgument("cascade level must be at least the grid depth".into()));
        }
        if !(sigma_bar_sq > 0.0) {
            return Err(Error::InvalidArgument("sigma_bar_sq must be positive".into()));
        }
        let table = PhiTable::new(bank, cascade_level)?;
        let sigma_bar = sigma_bar_sq.sqrt();
        let k = bank.k;
        let weights = (0..1i64 << grid_depth)
            .map(|r| {
                (0..2 * k - 1)
                    .map(|p| table.phi(r + ((p as i64 - (k as i64 - 1)) << grid_depth), grid_depth) / sigma_bar)
                    .collect()
            })
            .collect();
        Ok(ProcessModel { k, j, grid_depth, sigma_bar, weights, table })
    }

    /// Number of Gaussians per path: `Z_k` for `1 - K <= k <= 2^j + K - 2`.
    pub fn z_len(&self) -> usize {
        (1usize << self.j) + 2 * self.k - 2
    }

    pub fn draw(&self, seed: u64, rep: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(rep);
        (0..self.z_len()).map(|_| StandardNormal.sample(&mut rng)).collect()
    }

    /// Variance of `X` at grid fraction `r`, i.e. `sigma^2(r / 2^m) / sigma_bar^2`.
    pub fn variance_at(&self, r: usize) -> f64 {
        self.weights[r].iter().map(|w| w * w).sum()
    }

    /// Process values at fraction `r` for `t = q + r / 2^m`, `0 <= q < 2^j`.
    fn fill(&self, z: &[f64], r: usize, out: &mut Vec<f64>) {
        let count = 1usize << self.j;
        out.clear();
        out.resize(count, 0.0);
        let top = 2 * self.k - 2;
        for (p, &w) in self.weights[r].iter().enumerate() {
            let zs = &z[top - p..top - p + count];
            for (o, zv) in out.iter_mut().zip(zs) {
                *o += w * zv;
            }
        }
    }

    /// Grid maximum of `|X|` for the Gaussians `z`.
    pub fn sup_of(&self, z: &[f64]) -> f64 {
        let mut buf = Vec::new();
        let mut best = 0.0f64;
        for r in 0..self.weights.len() {
            self.fill(z, r, &mut buf);
            best = buf.iter().fold(best, |m, v| m.max(v.abs()));
        }
        best
    }

    /// All grid values in increasing `t`.
    pub fn path(&self, z: &[f64]) -> Vec<f64> {
        let per = self.weights.len();
        let mut out = vec![0.0; per << self.j];
        let mut buf = Vec::new();
        for r in 0..per {
            self.fill(z, r, &mut buf);
            for (q, v) in buf.iter().enumerate() {
                out[q * per + r] = *v;
            }
        }
        out
    }

    /// Bound on how far the continuous sup can exceed the grid sup for a path
    /// with `max |Z_k| = zmax`.
    pub fn bias_bound(&self, zmax: f64) -> Option<f64> {
        let dsum = self.table.derivative_sum?;
        let verr = self.table.value_error?;
        let step = (-(self.grid_depth as f64) - 1.0).exp2();
        Some((dsum * step + (2 * self.k - 1) as f64 * verr) * zmax / self.sigma_bar)
    }
}

/// Grid sup of `|X|` for replication `rep`.
pub fn simulate_sup(model: &ProcessModel, seed: u64, rep: u64) -> f64 {
    model.sup_of(&model.draw(seed, rep))
}

/// Grid sups of all replications, in replication order.
pub fn sup_samples(model: &ProcessModel, seed: u64, reps: usize) -> Vec<f64> {
    (0..reps as u64).into_par_iter().map(|r| simulate_sup(model, seed, r)).collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct GammaRow {
    pub gamma: f64,
    pub threshold: f64,
    pub exceedances: usize,
    pub probability: f64,
    pub ratio: f64,
    pub std_error: f64,
    pub ratio_ci_lo: f64,
    pub ratio_ci_hi: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SimulationReport {
    pub config: SimulationConfig,
    pub sigma_bar_sq: f64,
    pub upsilon: f64,
    pub rows: Vec<GammaRow>,
    /// Kolmogorov-Smirnov distance of `a(j) (sup - b(j))` to the Gumbel law.
    pub ks_distance: f64,
    pub grid_sup_bias_bound: Option<f64>,
    pub warnings: Vec<String>,
}

/// Fraction of samples strictly above `u`, with its binomial standard error.
pub fn exceedance(samples: &[f64], u: f64) -> (usize, f64, f64) {
    let hits = samples.iter().filter(|&&s| s > u).count();
    let n = samples.len() as f64;
    let p = hits as f64 / n;
    (hits, p, (p * (1.0 - p) / n).sqrt())
}

/// Kolmogorov-Smirnov distance of the empirical law of `samples` to `cdf`.
pub fn ks_distance(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut v = samples.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    v.iter().enumerate().fold(0.0, |d, (i, &x)| {
        let f = cdf(x);
        d.max(((i + 1) as f64 / n - f).abs()).max((f - i as f64 / n).abs())
    })
}

/// Runs the replications and summarizes exceedances of the thresholds
/// `x(gamma)/a(j) + b(j)`.
pub fn mc_exceedance(
    cfg: &SimulationConfig,
    bank: &FilterBank,
    sigma_bar_sq: f64,
    upsilon: f64,
) -> Result<SimulationReport> {
    Ok(mc_exceedance_with_samples(cfg, bank, sigma_bar_sq, upsilon)?.0)
}

/// [`mc_exceedance`] plus the per-replication grid sups.
pub fn mc_exceedance_with_samples(
    cfg: &SimulationConfig,
    bank: &FilterBank,
    sigma_bar_sq: f64,
    upsilon: f64,
) -> Result<(SimulationReport, Vec<f64>)> {
    if cfg.reps == 0 {
        return Err(Error::InvalidArgument("reps must be positive".into()));
    }
    let model = ProcessModel::new(bank, sigma_bar_sq, cfg.j, cfg.grid_depth, cfg.cascade_level)?;
    let jf = f64::from(cfg.j.max(1));
    let samples = sup_samples(&model, cfg.seed, cfg.reps);
    let report = summarize(cfg, &model, &samples, sigma_bar_sq, upsilon, jf)?;
    Ok((report, samples))
}

fn summarize(
    cfg: &SimulationConfig,
    model: &ProcessModel,
    samples: &[f64],
    sigma_bar_sq: f64,
    upsilon: f64,
    jf: f64,
) -> Result<SimulationReport> {
    let mut warnings = Vec::new();
    if let Some(g) = cfg.gammas.iter().cloned().reduce(f64::min) {
        if (cfg.reps as f64) < 100.0 / g {
            warnings.push(format!("reps = {} is below 100 / min(gamma) = {:.0}", cfg.reps, 100.0 / g));
        }
    }
    let mut rows = Vec::new();
    for &gamma in &cfg.gammas {
        let threshold = normalized_threshold(&CriticalQuery::new(jf, gamma)?, upsilon)?;
        let (hits, p, se) = exceedance(samples, threshold);
        rows.push(GammaRow {
            gamma,
            threshold,
            exceedances: hits,
            probability: p,
            ratio: p / gamma,
            std_error: se,
            ratio_ci_lo: (p - Z_999 * se).max(0.0) / gamma,
            ratio_ci_hi: (p + Z_999 * se) / gamma,
        });
    }
    let (a, b) = (a_of(jf)?, b_of(jf, upsilon)?);
    let standardized: Vec<f64> = samples.iter().map(|s| a * (s - b)).collect();
    let ks = ks_distance(&standardized, |x| 1.0 - gumbel_tail(x));
    let zmax = (0..cfg.reps as u64)
        .into_par_iter()
        .map(|r| model.draw(cfg.seed, r).iter().fold(0.0f64, |m, v| m.max(v.abs())))
        .reduce(|| 0.0, f64::max);
    Ok(SimulationReport {
        config: cfg.clone(),
        sigma_bar_sq,
        upsilon,
        rows,
        ks_distance: ks,
        grid_sup_bias_bound: model.bias_bound(zmax),
        warnings,
    })
}

/// `1 - (2 Phi(u) - 1)^(2^j)`, enclosed: the exceedance probability of the
/// maximum of `2^j` independent `|N(0, 1)|`.
pub fn haar_exact_exceedance(j: u32, u: &Interval) -> Result<Interval> {
    if *u.lo() < 0 {
        return Err(Error::Domain { op: "haar_exact_exceedance", detail: "need u >= 0".into() });
    }
    let prec = u.precision();
    let mut q = u.normal_cdf().mul_i64(2).sub(&Interval::one(prec)).clip_nonneg();
    for _ in 0..j {
        q = q.sqr();
    }
    Ok(Interval::one(prec).sub(&q))
}

/// Point value of [`haar_exact_exceedance`] at 256 bits.
pub fn haar_exact_exceedance_f64(j: u32, u: f64) -> Result<f64> {
    Ok(haar_exact_exceedance(j, &Interval::from_f64(u, Precision::default()))?.mid_f64())
}
