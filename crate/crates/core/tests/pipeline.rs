mod common;

use proptest::prelude::*;
use rug::{Float, Integer};

use common::DyadicValues;
use sbrw::asymptotics::{critical_value, critical_value_interval, BandConstants, CriticalQuery};
use sbrw::cascade::{cascade_f, TorusWindow};
use sbrw::filters::{daubechies_filter, format_filter, parse_filter, symlet_filter, Family};
use sbrw::simulate::{haar_exact_exceedance_f64, mc_exceedance, sup_samples, ProcessModel, SimulationConfig};
use sbrw::verify::{verify_assumption, verify_with, StopReason, VerifyConfig};
use sbrw::{Interval, Precision};

fn prec() -> Precision {
    Precision::default()
}

#[test]
fn second_derivative_contains_dyadic_values() {
    let p = Precision::new(common::ORACLE_BITS).unwrap();
    let bank = daubechies_filter(6, p).unwrap();
    let u: Vec<Float> = bank.u0.iter().map(Interval::mid).collect();
    let oracle = DyadicValues::new(&u, 2, 4);
    for j in [8, 10] {
        let enc = cascade_f(&bank, 2, j, &TorusWindow::full(j)).unwrap();
        for (i, v) in oracle.values.iter().enumerate() {
            let e = enc.eval(&oracle.point(i)).unwrap();
            assert!(e.lo() <= v && v <= e.hi(), "j={j} i={i}: {v} not in {e}");
        }
    }
}

#[test]
fn windowed_derivative_contains_dyadic_values() {
    let p = Precision::new(common::ORACLE_BITS).unwrap();
    let bank = symlet_filter(5, p).unwrap();
    let u: Vec<Float> = bank.u0.iter().map(Interval::mid).collect();
    let oracle = DyadicValues::new(&u, 1, 5);
    let j = 9;
    let window = TorusWindow::new(j, Integer::from(100), Integer::from(180)).unwrap();
    let enc = cascade_f(&bank, 1, j, &window).unwrap();
    let mut checked = 0;
    for (i, v) in oracle.values.iter().enumerate() {
        let x = oracle.point(i);
        let Some(k) = enc.cell_index(&x) else { continue };
        if !window.contains_cell(&k) {
            continue;
        }
        let e = enc.eval(&x).unwrap();
        assert!(e.lo() <= v && v <= e.hi(), "x={x}: {v} not in {e}");
        checked += 1;
    }
    // Five shifts of a window covering about 16% of the torus.
    assert!(checked > 20, "{checked}");
}

#[test]
fn printed_filter_verifies_like_builtin() {
    let builtin = verify_assumption(&Family::Daubechies, 6, 1e-5, 200, prec()).unwrap();
    let text = format_filter(&daubechies_filter(6, Precision::new(512).unwrap()).unwrap(), 60);
    let cfg = VerifyConfig::new(1e-5, 200, prec());
    let custom = verify_with(&cfg, |p| parse_filter(&text, p)).unwrap();
    assert!(builtin.verified && custom.verified);
    assert_eq!(custom.n, 6);
    let (a, b) = (builtin.sigma_bar_sq.unwrap(), custom.sigma_bar_sq.unwrap());
    assert!(a.intersect(&b).is_some(), "{a} vs {b}");
    let (a, b) = (builtin.upsilon.unwrap(), custom.upsilon.unwrap());
    assert!(a.intersect(&b).is_some(), "{a} vs {b}");
}

#[test]
fn unsmooth_family_is_not_verified() {
    // db2's phi has no derivative, so no upsilon can be certified.
    let r = verify_assumption(&Family::Daubechies, 2, 1e-6, 14, prec()).unwrap();
    assert!(!r.verified);
    assert!(r.upsilon.is_none());
    assert!(matches!(r.stop_reason, StopReason::MaxLevel | StopReason::FullTorusCap));
}

#[test]
fn verified_constants_feed_the_threshold() {
    let r = verify_assumption(&Family::Symlet, 8, 1e-6, 200, prec()).unwrap();
    assert!(r.verified);
    let c = BandConstants::new(r.sigma_bar_sq.clone().unwrap(), r.upsilon.clone().unwrap(), 1.0).unwrap();
    for (j, gamma) in [(8.0, 0.05), (12.0, 0.2), (20.0, 0.01)] {
        let u = critical_value(&CriticalQuery::new(j, gamma).unwrap(), &c).unwrap();
        let enc = critical_value_interval(
            &Interval::from_f64(j, prec()),
            &Interval::from_f64(gamma, prec()),
            &c,
        )
        .unwrap();
        assert!(enc.lo_f64() <= u * (1.0 + 1e-14) && u * (1.0 - 1e-14) <= enc.hi_f64());
        // Constants are known to 1e-6, so the threshold is known to about that.
        assert!(enc.width_f64() < 1e-5 * u);
    }
}

#[test]
fn process_variance_peaks_at_one() {
    let r = verify_assumption(&Family::Daubechies, 6, 1e-6, 200, prec()).unwrap();
    let s2 = r.sigma_bar_sq.unwrap().mid_f64();
    let bank = daubechies_filter(6, prec()).unwrap();
    let model = ProcessModel::new(&bank, s2, 4, 8, 12).unwrap();
    let vmax = (0..256).map(|r| model.variance_at(r)).fold(0.0f64, f64::max);
    // Max over a grid of step 2^-8 sits within O(h^2) of the true maximum.
    assert!(vmax <= 1.0 + 1e-6 && vmax > 1.0 - 1e-4, "{vmax}");
    // Torus mean of sigma^2 is 1.
    let mean = (0..256).map(|r| model.variance_at(r)).sum::<f64>() / 256.0 * s2;
    assert!((mean - 1.0).abs() < 1e-9, "{mean}");
}

#[test]
fn haar_pipeline_matches_exact_law() {
    let haar = daubechies_filter(1, prec()).unwrap();
    let cfg = SimulationConfig::new(&haar, 5, 2, 8000, 3, vec![0.1, 0.5]);
    let report = mc_exceedance(&cfg, &haar, 1.0, 0.0).unwrap();
    for row in &report.rows {
        let exact = haar_exact_exceedance_f64(5, row.threshold).unwrap();
        let half = 3.29 * (exact * (1.0 - exact) / 8000.0).sqrt() + 1.0 / 16000.0;
        assert!((row.probability - exact).abs() <= half, "{row:?} vs {exact}");
    }
    // Piecewise-constant paths: only sample rounding remains.
    assert!(report.grid_sup_bias_bound.unwrap() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    // Scaling the noise scales every sup by the same factor, so exceedance
    // indicators against thresholds scaled alike do not change.
    #[test]
    fn exceedances_are_scale_free(scale in 0.1f64..10.0, seed in 0u64..1000) {
        let bank = daubechies_filter(6, prec()).unwrap();
        let base = ProcessModel::new(&bank, 1.25, 3, 3, 10).unwrap();
        let scaled = ProcessModel::new(&bank, 1.25 / (scale * scale), 3, 3, 10).unwrap();
        let a = sup_samples(&base, seed, 50);
        let b = sup_samples(&scaled, seed, 50);
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((y - scale * x).abs() <= 1e-12 * y.abs().max(1.0));
        }
    }
}
