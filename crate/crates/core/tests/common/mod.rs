//! Independent reference values shared by the integration targets.

#![allow(dead_code)]

use rug::ops::Pow;
use rug::Float;

pub const ORACLE_BITS: u32 = 512;

fn f(v: impl Into<f64>) -> Float {
    Float::with_val(ORACLE_BITS, v.into())
}

/// The db2 filter in closed form, normalized to sum 2.
pub fn db2_filter() -> Vec<Float> {
    let s3 = Float::with_val(ORACLE_BITS, 3).sqrt();
    let q = |a: i32, b: i32| (Float::with_val(ORACLE_BITS, &s3 * b) + a) / 4u32;
    vec![q(1, 1), q(3, 1), q(3, -1), q(1, -1)]
}

/// Solves `A x = b` by Gaussian elimination with partial pivoting.
fn solve(mut a: Vec<Vec<Float>>, mut b: Vec<Float>) -> Vec<Float> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&r, &s| a[r][col].clone().abs().partial_cmp(&a[s][col].clone().abs()).unwrap())
            .unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..n {
            let m = Float::with_val(ORACLE_BITS, &a[r][col] / &a[col][col]);
            let (top, rest) = a.split_at_mut(r);
            for (x, y) in rest[0][col..].iter_mut().zip(&top[col][col..]) {
                *x -= Float::with_val(ORACLE_BITS, &m * y);
            }
            let t = Float::with_val(ORACLE_BITS, &m * &b[col]);
            b[r] -= t;
        }
    }
    let mut x = vec![f(0.0); n];
    for r in (0..n).rev() {
        let mut s = b[r].clone();
        for c in r + 1..n {
            s -= Float::with_val(ORACLE_BITS, &a[r][c] * &x[c]);
        }
        x[r] = s / &a[r][r];
    }
    x
}

/// `phi^(n)` at the dyadics `i / 2^depth` of the support `[1-K, K)`, from
/// the eigenvector of the two-scale matrix at the integers followed by
/// exact refinement `phi^(n)(x) = 2^n sum_m u_m phi^(n)(2x + K - 1 - m)`.
///
/// Entry `i` holds the value at `x = i / 2^depth + 1 - K`.
pub struct DyadicValues {
    pub k: usize,
    pub depth: u32,
    pub values: Vec<Float>,
}

impl DyadicValues {
    pub fn new(u: &[Float], n: u32, depth: u32) -> Self {
        let k = u.len() / 2;
        let ki = k as i64;
        // Interior integers 2-K..=K-1; phi^(n) vanishes at the endpoints.
        let ints: Vec<i64> = (2 - ki..ki).collect();
        let coeff = |idx: i64| if (0..2 * ki).contains(&idx) { u[idx as usize].clone() } else { f(0.0) };
        let lambda = f(0.5).pow(n);
        let dim = ints.len();
        let mut a: Vec<Vec<Float>> = ints
            .iter()
            .map(|&x| {
                ints.iter()
                    .map(|&y| {
                        let mut e = coeff(2 * x + ki - 1 - y);
                        if x == y {
                            e -= &lambda;
                        }
                        e
                    })
                    .collect()
            })
            .collect();
        let mut b = vec![f(0.0); dim];
        // Normalize with the polynomial reproduction identity
        // sum_y (-y)^n / n! phi^(n)(y) = 1.
        let fact: u32 = (1..=n).product();
        a[dim - 1] = ints.iter().map(|&y| f((-y as f64).powi(n as i32)) / fact).collect();
        b[dim - 1] = f(1.0);
        let at_ints = solve(a, b);

        let mut values = vec![f(0.0); 2 * k - 1];
        for (y, v) in ints.iter().zip(&at_ints) {
            values[(y + ki - 1) as usize] = v.clone();
        }
        let scale = f(2.0).pow(n);
        for d in 1..=depth {
            let len = (2 * k - 1) << d;
            let mut next = vec![f(0.0); len];
            for (i, slot) in next.iter_mut().enumerate() {
                if i % 2 == 0 {
                    *slot = values[i / 2].clone();
                    continue;
                }
                // x = i/2^d + 1 - K; 2x + K - 1 - m at depth d-1 has offset
                // i + (2 - 2K + K - 1 - m + K - 1) 2^(d-1) = i - m 2^(d-1).
                let mut s = f(0.0);
                for (m, um) in u.iter().enumerate() {
                    let t = i as i64 - ((m as i64) << (d - 1));
                    if t >= 0 && (t as usize) < values.len() {
                        s += Float::with_val(ORACLE_BITS, um * &values[t as usize]);
                    }
                }
                *slot = s * &scale;
            }
            values = next;
        }
        DyadicValues { k, depth, values }
    }

    /// Point `x` of entry `i`.
    pub fn point(&self, i: usize) -> Float {
        (f(i as f64) >> self.depth) - (self.k as i64 - 1)
    }
}

/// Standard normal distribution function.
pub fn std_normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

fn erfc(x: f64) -> f64 {
    Float::with_val(128, x).erfc().to_f64()
}
