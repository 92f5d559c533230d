use cyclekit::data::{delta_g, energy_index, pearson, GdpRow, GdpSeries, IndexCase, VelocityScheme};
use cyclekit::discrete_map::{DiscreteMap, MapState};
use cyclekit::integrator::{simulate, step};
use cyclekit::model::log_cosh;
use cyclekit::period::find_extrema;
use cyclekit::{Case, Oscillator, PhaseState, Well};
use proptest::prelude::*;

fn any_case() -> impl Strategy<Value = Case> {
    prop_oneof![Just(Case::I), Just(Case::II), Just(Case::III)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn odi_strictly_increasing(case in any_case(), x1 in -3.0..5.0f64, gap in 1e-3..2.0f64) {
        let odi = case.odi();
        prop_assert!(odi.eval(x1) < odi.eval(x1 + gap));
    }

    #[test]
    fn odi_stays_in_range(case in any_case(), x in -1e3..1e3f64) {
        let odi = case.odi();
        let (lo, hi) = odi.range();
        let y = odi.eval(x);
        prop_assert!(lo <= y && y <= hi);
    }

    #[test]
    fn force_is_minus_potential_gradient(case in any_case(), x in -4.0..6.0f64) {
        let m = case.model();
        let h = 1e-5;
        let fd = -(m.potential(x + h) - m.potential(x - h)) / (2.0 * h);
        prop_assert!((fd - m.force(x)).abs() < 1e-6 * m.force(x).abs().max(1.0));
    }

    #[test]
    fn log_cosh_is_even_and_below_abs(u in -800.0..800.0f64) {
        prop_assert_eq!(log_cosh(u), log_cosh(-u));
        prop_assert!(log_cosh(u) <= u.abs());
        prop_assert!(log_cosh(u) >= u.abs() - std::f64::consts::LN_2 - 1e-12);
    }

    #[test]
    fn potential_is_asymptotically_quadratic(case in any_case(), sign in prop_oneof![Just(-1.0), Just(1.0)]) {
        let m = case.model();
        let x = sign * 1e7;
        prop_assert!((m.potential(x) / (2.0 * x * x) - 1.0).abs() < 1e-5);
    }

    #[test]
    fn verlet_is_time_reversible(case in any_case(), x0 in -0.5..2.0f64, v0 in -1.0..1.0f64, n in 10usize..2000) {
        let m = case.model();
        let dt = 1e-2;
        let mut s = PhaseState::new(x0, v0);
        for _ in 0..n {
            s = step(&m, s, dt);
        }
        s.v = -s.v;
        for _ in 0..n {
            s = step(&m, s, dt);
        }
        let scale = x0.abs().max(v0.abs()).max(1.0);
        prop_assert!((s.x - x0).abs() < 1e-9 * scale);
        prop_assert!((-s.v - v0).abs() < 1e-9 * scale);
    }

    #[test]
    fn simulate_sample_count(t_end in 0.01..5.0f64, dt in 1e-3..0.05f64) {
        let tr = simulate(&Case::I.model(), PhaseState::new(1.0, 0.0), t_end, dt).unwrap();
        prop_assert_eq!(tr.samples.len(), (t_end / dt - 1e-9).ceil() as usize + 1);
        prop_assert!(tr.samples.windows(2).all(|w| w[1].t > w[0].t));
    }

    #[test]
    fn turning_points_lie_on_the_energy_level(case in any_case(), lift in 1e-3..50.0f64) {
        let osc = Oscillator::new(case.model()).unwrap();
        let prof = osc.profile();
        let e = prof.global_min().energy + lift;
        let wells = prof.wells_below_separatrix(e);
        let well = wells.first().copied();
        if let Ok(tp) = osc.turning_points(e, well) {
            let tol = 1e-10 * e.abs().max(1.0);
            prop_assert!(tp.lower < tp.upper);
            prop_assert!((osc.potential().potential(tp.lower) - e).abs() < tol);
            prop_assert!((osc.potential().potential(tp.upper) - e).abs() < tol);
            let mid = tp.midpoint();
            prop_assert!(osc.potential().potential(mid) < e);
        }
    }

    // Restricted to the contracting regime: at a ≥ 2 the recursions are not
    // bit-identical and neutral or unstable dynamics amplify the last-ulp
    // differences.
    #[test]
    fn combined_recursion_matches_map(case in any_case(), a in 0.2..1.9f64, dg in 0.0..2.0f64, dg_prev in 0.0..2.0f64) {
        let m = case.model();
        let map = DiscreteMap::new(m, a).unwrap();
        let orbit = map.orbit(MapState::from_growth_pair(&m, dg, dg_prev), 100);
        if let Ok(comb) = map.combined_orbit(dg, dg_prev, orbit.states.len() - 1) {
            for (s, c) in orbit.states.iter().zip(&comb[1..]) {
                prop_assert!((s.dg - c).abs() <= 1e-12 * c.abs().max(1.0));
            }
        }
    }

    #[test]
    fn delta_g_cumulates_back(first in 1_000.0..40_000.0f64, steps in prop::collection::vec(-2_000.0..3_000.0f64, 2..60)) {
        let mut rows = vec![GdpRow { year: 1960, gdp: first }];
        for (k, s) in steps.iter().enumerate() {
            let prev = rows[k].gdp;
            rows.push(GdpRow { year: 1961 + k as i32, gdp: (prev + s).max(1.0) });
        }
        let series = GdpSeries::new(rows).unwrap();
        let d = delta_g(&series).unwrap();
        prop_assert_eq!(d.rows.len(), series.len() - 1);
        let back = d.cumulate(first);
        for (r, g) in series.rows().iter().zip(&back) {
            prop_assert!((r.gdp - g).abs() <= 1e-9 * r.gdp.abs().max(1.0));
        }
    }

    #[test]
    fn pearson_is_bounded(a in prop::collection::vec(-10.0..10.0f64, 3..40), seed in any::<u64>()) {
        let b: Vec<f64> = a.iter().enumerate().map(|(i, x)| x * ((seed >> (i % 64)) & 1) as f64 + i as f64).collect();
        if let Ok(r) = pearson(&a, &b) {
            prop_assert!((-1.0..=1.0).contains(&r));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn energy_index_is_translation_equivariant(shift in -500i32..500, xs in prop::collection::vec(0.0..2.0f64, 3..20)) {
        let mut gdp = vec![GdpRow { year: 1960, gdp: 8000.0 }];
        for (k, x) in xs.iter().enumerate() {
            let prev = gdp[k].gdp;
            gdp.push(GdpRow { year: 1961 + k as i32, gdp: prev + 1e3 * x });
        }
        let d = delta_g(&GdpSeries::new(gdp).unwrap()).unwrap();
        let cases: Vec<IndexCase> = Case::ALL.iter().map(|c| IndexCase::new(c.label(), c.model()).unwrap()).collect();
        let a = energy_index(&d, &cases, VelocityScheme::Central).unwrap();
        let b = energy_index(&d.shifted(shift), &cases, VelocityScheme::Central).unwrap();
        for (ra, rb) in a.rows.iter().zip(&b.rows) {
            prop_assert_eq!(ra.year + shift, rb.year);
            prop_assert_eq!(&ra.energy, &rb.energy);
            prop_assert_eq!(&ra.period, &rb.period);
            prop_assert_eq!(ra.di, rb.di);
        }
    }

    #[test]
    fn period_never_below_pi(case in any_case(), lift in 1e-3..1e3f64) {
        let osc = Oscillator::new(case.model()).unwrap();
        let prof = osc.profile();
        let e = prof.global_min().energy + lift;
        for well in [None, Some(Well::Left), Some(Well::Right)] {
            if let Ok(t) = osc.period(e, well) {
                prop_assert!(t > std::f64::consts::PI);
            }
        }
    }
}

#[test]
fn equilibrium_is_a_fixed_point_of_every_scheme() {
    for case in Case::ALL {
        let m = case.model();
        for ext in find_extrema(&m).unwrap().minima() {
            let s0 = PhaseState::new(ext.x, 0.0);
            let mut s = s0;
            for _ in 0..10_000 {
                s = step(&m, s, 1e-2);
            }
            assert!((s.x - s0.x).abs() < 1e-12 && s.v.abs() < 1e-12, "{case}");
            let map = DiscreteMap::new(m, 1.3).unwrap();
            let st = MapState::at_equilibrium(&m, ext.x);
            let next = map.step(st).unwrap();
            assert!((next.dg - st.dg).abs() < 1e-12 && (next.di - st.di).abs() < 1e-9);
        }
    }
}
