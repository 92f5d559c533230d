//! Cross-checks between independent implementations of the same quantity.

use std::f64::consts::PI;

use cyclekit::discrete_map::{discrete_energy, DiscreteMap};
use cyclekit::fitting::{fit_linear, fit_odi, OdiFitOptions};
use cyclekit::integrator::{polygon_area, polygon_contains, simulate, MEASURE_DT};
use cyclekit::{Case, Harmonic, LinearMap, Oscillator, Potential, Well};
use rand::rngs::StdRng;
use rand::{RngExt, SeedableRng};
use rand_distr::{Distribution, Normal};

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect()
}

/// Twenty `(E, well)` probes per case covering every orbit family.
pub fn oracle_energies(case: Case) -> Vec<(f64, Option<Well>)> {
    let osc = Oscillator::new(case.model()).unwrap();
    let prof = osc.profile();
    match prof.separatrix() {
        None => {
            let e0 = prof.global_min().energy;
            linspace(e0 + 0.02, 10.0, 20).into_iter().map(|e| (e, None)).collect()
        }
        Some(sep) => {
            let left = prof.well_min(Well::Left).unwrap().energy;
            let right = prof.well_min(Well::Right).unwrap().energy;
            let below = sep.energy - 0.002;
            let mut out: Vec<_> = linspace(left + 0.002, below, 6).into_iter().map(|e| (e, Some(Well::Left))).collect();
            out.extend(linspace(right + 0.01, below, 6).into_iter().map(|e| (e, Some(Well::Right))));
            out.extend(linspace(sep.energy + 0.01, 10.0, 8).into_iter().map(|e| (e, None)));
            out
        }
    }
}

fn trajectory_period<P: Potential>(osc: &Oscillator<P>, e: f64, well: Option<Well>, t_quad: f64, dt: f64) -> f64 {
    let s0 = osc.rest_state(e, well).unwrap();
    simulate(osc.potential(), s0, 6.0 * t_quad + 1.0, dt).unwrap().period().unwrap()
}

#[test]
fn quadrature_agrees_with_trajectory() {
    for case in Case::ALL {
        let osc = Oscillator::new(case.model()).unwrap();
        for (e, well) in oracle_energies(case) {
            let tq = osc.period(e, well).unwrap();
            let tt = trajectory_period(&osc, e, well, tq, MEASURE_DT);
            assert!((tq - tt).abs() < 0.02, "{case} E={e} {well:?}: {tq} vs {tt}");
        }
    }
}

#[test]
fn harmonic_quadrature_is_exact() {
    let osc = Oscillator::new(Harmonic { center: 0.3 }).unwrap();
    for e in [1e-8, 1e-3, 0.5, 7.0, 1e3, 1e9] {
        assert!((osc.period(e, None).unwrap() - PI).abs() < 1e-6, "E={e}");
    }
}

#[test]
fn trajectory_period_converges_at_second_order() {
    let osc = Oscillator::new(Case::I.model()).unwrap();
    let e = 1.57;
    let tq = osc.period(e, None).unwrap();
    let err = |dt: f64| {
        let s0 = osc.rest_state(e, None).unwrap();
        let tr = simulate(osc.potential(), s0, 60.0 * tq, dt).unwrap();
        (tr.period().unwrap() - tq).abs()
    };
    let errs: Vec<f64> = [0.04, 0.02, 0.01].iter().map(|&dt| err(dt)).collect();
    for w in errs.windows(2) {
        let ratio = w[0] / w[1];
        assert!((3.0..5.5).contains(&ratio), "{errs:?}");
    }
}

#[test]
fn trajectory_range_matches_turning_points() {
    for case in Case::ALL {
        let osc = Oscillator::new(case.model()).unwrap();
        for (e, well) in oracle_energies(case).into_iter().step_by(3) {
            let tp = osc.turning_points(e, well).unwrap();
            let tq = osc.period(e, well).unwrap();
            let tr = simulate(osc.potential(), osc.rest_state(e, well).unwrap(), 1.2 * tq, MEASURE_DT).unwrap();
            let (lo, hi) = tr.x_range();
            assert!((lo - tp.lower).abs() < 1e-4 && (hi - tp.upper).abs() < 1e-4, "{case} E={e}");
        }
    }
}

#[test]
fn phase_loops_nest_and_grow_with_energy() {
    let m = Case::I.model();
    let osc = Oscillator::new(m).unwrap();
    let loops: Vec<Vec<(f64, f64)>> = [0.1, 0.5, 1.0, 1.5]
        .iter()
        .map(|&e| {
            let tq = osc.period(e, None).unwrap();
            let tr = simulate(&m, osc.rest_state(e, None).unwrap(), tq + 1.5, MEASURE_DT).unwrap();
            tr.phase(m.linear_map()).loop_points(1.0, tq)
        })
        .collect();
    let areas: Vec<f64> = loops.iter().map(|l| polygon_area(l)).collect();
    assert!(areas.windows(2).all(|w| w[1] > w[0]), "{areas:?}");
    for w in loops.windows(2) {
        assert!(w[0].iter().all(|&p| polygon_contains(&w[1], p)));
    }
}

#[test]
fn discrete_energy_has_no_secular_growth_at_a_2() {
    for case in Case::ALL {
        let m = case.model();
        let osc = Oscillator::new(m).unwrap();
        let min = osc.profile().global_min();
        let map = DiscreteMap::new(m, 2.0).unwrap();
        let (x0, x1) = (min.x + 0.15, min.x + 0.1);
        let orbit = map.combined_orbit(x1, x0, 100_000).unwrap();
        let window_mean = |k: usize| {
            let w = &orbit[k * 10_000 + 1..(k + 1) * 10_000 + 1];
            w.windows(2).map(|p| discrete_energy(&m, p[1], p[0]) - min.energy).sum::<f64>() / (w.len() - 1) as f64
        };
        let first = window_mean(0);
        for k in 1..10 {
            let drift = (window_mean(k) - first).abs() / first;
            assert!(drift < 0.01 * k as f64, "{case} window {k}: {drift}");
        }
    }
}

#[test]
fn linear_fit_errors_match_standard_errors() {
    let (b, c, sigma) = (23.6, 969.0, 10.0);
    let noise = Normal::new(0.0, sigma).unwrap();
    let (mut out_b, mut out_c) = (0, 0);
    for seed in 0..100u64 {
        let mut rng = StdRng::seed_from_u64(seed);
        let di: Vec<f64> = (0..40).map(|_| rng.random_range(-40.0..40.0)).collect();
        let dg: Vec<f64> = di.iter().map(|d| b * d + c + noise.sample(&mut rng)).collect();
        let fit = fit_linear(&dg, &di, false).unwrap();
        let (se_b, se_c) = fit.std_errors.unwrap();
        out_b += usize::from((fit.params.slope - b).abs() > 3.0 * se_b);
        out_c += usize::from((fit.params.intercept - c).abs() > 3.0 * se_c);
    }
    // Nominal 3σ coverage is 99.7%; allow two misses per hundred.
    assert!(out_b <= 2 && out_c <= 2, "{out_b} {out_c}");
}

// Over this ΔG range the noisy data cannot pin the saturation, so the
// objective has a long flat valley and the two starts settle at different
// points along it.
#[test]
fn scattered_data_admit_different_equally_good_fits() {
    let truth = Case::I.odi();
    let noise = Normal::new(0.0, 8.0).unwrap();
    let mut rng = StdRng::seed_from_u64(7);
    let dg: Vec<f64> = (0..40).map(|_| rng.random_range(-0.5..2.5)).collect();
    let di: Vec<f64> = dg.iter().map(|x| truth.eval(*x) + noise.sample(&mut rng)).collect();
    let opts = OdiFitOptions::default();
    let a = fit_odi(&dg, &di, Some(Case::I.odi()), opts).unwrap();
    let b = fit_odi(&dg, &di, Some(Case::III.odi()), opts).unwrap();
    assert!((a.residual - b.residual).abs() <= 0.05 * a.residual.min(b.residual));
    let rel = |x: f64, y: f64| (x - y).abs() / x.abs().max(y.abs());
    let spread = [
        rel(a.params.amplitude, b.params.amplitude),
        rel(a.params.steepness, b.params.steepness),
        rel(a.params.center, b.params.center),
    ];
    assert!(spread.iter().any(|s| *s > 0.1), "{spread:?}");
}

#[test]
fn odi_fit_is_a_fixed_point() {
    let truth = Case::II.odi();
    let noise = Normal::new(0.0, 3.0).unwrap();
    let mut rng = StdRng::seed_from_u64(11);
    let dg: Vec<f64> = (0..30).map(|_| rng.random_range(-0.5..2.5)).collect();
    let di: Vec<f64> = dg.iter().map(|x| truth.eval(*x) + noise.sample(&mut rng)).collect();
    let first = fit_odi(&dg, &di, None, OdiFitOptions::default()).unwrap();
    let again = fit_odi(&dg, &di, Some(first.params), OdiFitOptions::default()).unwrap();
    let p = [first.params.offset, first.params.amplitude, first.params.steepness, first.params.center];
    let q = [again.params.offset, again.params.amplitude, again.params.steepness, again.params.center];
    for (x, y) in p.iter().zip(&q) {
        assert!((x - y).abs() <= 1e-6 * x.abs().max(1.0), "{p:?} {q:?}");
    }
}

#[test]
fn averaged_linear_fit_uses_the_paired_link() {
    let lm = LinearMap::MODIFIED;
    let di: Vec<f64> = (0..30).map(|k| 30.0 * (0.7 * k as f64).sin()).collect();
    let mut dg = vec![1.0];
    for d in &di[1..] {
        let prev = *dg.last().unwrap();
        dg.push(2.0 * lm.slope * d + 2.0 * lm.intercept - prev);
    }
    let fit = fit_linear(&dg, &di, true).unwrap();
    assert!((fit.params.slope / lm.slope - 1.0).abs() < 1e-9);
    assert!((fit.params.intercept / lm.intercept - 1.0).abs() < 1e-9);
}
