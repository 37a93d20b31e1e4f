//! Published six-digit constants for N = 6..20, used only to flag table rows
//! whose enclosures miss them (for symlets, a sign of a different phase
//! convention).

/// `(N, sigma_bar^2, upsilon)` for Daubechies filters.
pub const DAUBECHIES: [(usize, f64, f64); 15] = [
    (6, 1.251716, 0.221993),
    (7, 1.276330, 0.197328),
    (8, 1.250928, 0.266316),
    (9, 1.222637, 0.275519),
    (10, 1.199772, 0.391629),
    (11, 1.195384, 0.415019),
    (12, 1.189984, 0.445388),
    (13, 1.182351, 0.460792),
    (14, 1.172690, 0.510179),
    (15, 1.165335, 0.553767),
    (16, 1.159678, 0.594027),
    (17, 1.154955, 0.621941),
    (18, 1.150103, 0.652913),
    (19, 1.145393, 0.686434),
    (20, 1.141050, 0.722113),
];

/// `(N, sigma_bar^2, upsilon)` for symlets.
pub const SYMLET: [(usize, f64, f64); 15] = [
    (6, 1.361961, 0.106518),
    (7, 1.253835, 0.248681),
    (8, 1.286722, 0.173642),
    (9, 1.232334, 0.302351),
    (10, 1.243114, 0.255337),
    (11, 1.209007, 0.324200),
    (12, 1.215480, 0.335022),
    (13, 1.195567, 0.385147),
    (14, 1.195969, 0.405884),
    (15, 1.184307, 0.446419),
    (16, 1.181901, 0.465670),
    (17, 1.174105, 0.496485),
    (18, 1.170871, 0.520228),
    (19, 1.164974, 0.551765),
    (20, 1.161837, 0.571150),
];

/// Rounding slack of a six-decimal value.
pub const HALF_UNIT: f64 = 5e-7;

pub fn lookup(family: &str, n: usize) -> Option<(f64, f64)> {
    let table: &[(usize, f64, f64)] = match family {
        "daubechies" => &DAUBECHIES,
        "symlet" => &SYMLET,
        _ => return None,
    };
    table.iter().find(|r| r.0 == n).map(|r| (r.1, r.2))
}

/// Whether `[lo, hi]` comes within the rounding slack of `reference`.
pub fn agrees(lo: f64, hi: f64, reference: f64) -> bool {
    lo - HALF_UNIT <= reference && reference <= hi + HALF_UNIT
}
