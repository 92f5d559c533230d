use std::path::PathBuf;

use cyclekit::data::{delta_g, di_reconstruct, energy_index, load_series_path, IndexCase, VelocityScheme, PEAK_FACTOR};
use cyclekit::synthetic::{fixture_csv, fixture_spec, FIXTURE_ENERGY, FIXTURE_SHOCK};
use cyclekit::{Case, LinearMap};

fn data_file(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

fn case_i() -> Vec<IndexCase> {
    vec![IndexCase::new("i", Case::I.model()).unwrap()]
}

#[test]
fn bundled_fixtures_match_generator() {
    for (name, shock) in [("synthetic_calm.csv", false), ("synthetic_shock.csv", true)] {
        let on_disk = std::fs::read_to_string(data_file(name)).unwrap();
        assert_eq!(on_disk, fixture_csv(shock).unwrap(), "{name} is stale; rerun the gen_fixtures example");
    }
}

#[test]
fn fixture_loads_with_44_increments() {
    let s = load_series_path(data_file("synthetic_calm.csv")).unwrap();
    assert_eq!(s.len(), 45);
    let d = delta_g(&s).unwrap();
    assert_eq!(d.rows.len(), 44);
    // Hand recomputation from the raw rows.
    for (w, r) in s.rows().windows(2).zip(&d.rows) {
        assert_eq!(r.year, w[1].year);
        assert!((r.value - (w[1].gdp - w[0].gdp) / 1000.0).abs() < 1e-12);
    }
    let lm = LinearMap::MODIFIED;
    let di = di_reconstruct(&d, &lm);
    assert_eq!(di.len(), 43);
    for (k, r) in di.iter().enumerate() {
        let direct = (d.rows[k + 1].value + d.rows[k].value - 2.0 * lm.intercept) / (2.0 * lm.slope);
        assert!((r.value - direct).abs() < 1e-9);
    }
}

#[test]
fn fixture_starts_on_the_design_energy() {
    let spec = fixture_spec(false).unwrap();
    let e = cyclekit::Potential::total_energy(&Case::I.model(), spec.start);
    assert!((e - FIXTURE_ENERGY).abs() < 1e-10);
}

#[test]
fn calm_fixture_has_no_peaks() {
    let d = delta_g(&load_series_path(data_file("synthetic_calm.csv")).unwrap()).unwrap();
    let idx = energy_index(&d, &case_i(), VelocityScheme::Central).unwrap();
    assert!(idx.peaks(0, PEAK_FACTOR).is_empty(), "{:?}", idx.peaks(0, PEAK_FACTOR));
}

#[test]
fn shock_fixture_peaks_once_at_the_shock() {
    let d = delta_g(&load_series_path(data_file("synthetic_shock.csv")).unwrap()).unwrap();
    let idx = energy_index(&d, &case_i(), VelocityScheme::Central).unwrap();
    assert_eq!(idx.peaks(0, PEAK_FACTOR), vec![FIXTURE_SHOCK.0]);
}

#[test]
fn index_energy_tracks_the_trajectory_energy() {
    // The one-year central difference underestimates |v| near the turning
    // points, so the per-year energy scatters around the true value. It must
    // still bracket it and stay in the right neighbourhood.
    let d = delta_g(&load_series_path(data_file("synthetic_calm.csv")).unwrap()).unwrap();
    let idx = energy_index(&d, &case_i(), VelocityScheme::Central).unwrap();
    let es: Vec<f64> = idx.energy_series(0).into_iter().map(|(_, e)| e).collect();
    let lo = es.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = es.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    assert!(lo < FIXTURE_ENERGY && FIXTURE_ENERGY < hi * 1.05, "{lo} {hi}");
    assert!(hi - lo < 0.5 * (FIXTURE_ENERGY - idx.floors[0]), "{lo} {hi}");
}
