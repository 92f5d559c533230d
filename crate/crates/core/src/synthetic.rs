//! Synthetic GDP series sampled from exact model trajectories, used as
//! offline fixtures for the energy-index pipeline.

use crate::data::{DataError, GdpRow, GdpSeries};
use crate::integrator::{self, IntegratorError, MEASURE_DT};
use crate::model::{Case, PhaseState, Potential};
use crate::period::{Oscillator, PeriodError};

#[derive(Debug, thiserror::Error)]
pub enum SyntheticError {
    #[error("need at least 3 rows, got {0}")]
    TooShort(usize),
    #[error("shock year {0} has no ΔG sample")]
    ShockOutOfRange(i32),
    #[error(transparent)]
    Integrator(#[from] IntegratorError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Period(#[from] PeriodError),
}

/// Energy of the bundled fixtures under case (i), 10⁶ units.
pub const FIXTURE_ENERGY: f64 = 0.12;
pub const FIXTURE_FIRST_YEAR: i32 = 1960;
pub const FIXTURE_ROWS: usize = 45;
pub const FIXTURE_BASE_GDP: f64 = 8000.0;
/// Shock injected into the shock fixture: `(year, Δx)`.
pub const FIXTURE_SHOCK: (i32, f64) = (1974, 1.0);

/// The bundled fixtures: case (i) started at rest on the upper turning
/// point of `FIXTURE_ENERGY`, optionally with `FIXTURE_SHOCK`.
pub fn fixture_spec(with_shock: bool) -> Result<SyntheticSpec, SyntheticError> {
    let osc = Oscillator::new(Case::I.model())?;
    let tp = osc.turning_points(FIXTURE_ENERGY, None)?;
    Ok(SyntheticSpec {
        start: PhaseState::new(tp.upper, 0.0),
        first_year: FIXTURE_FIRST_YEAR,
        rows: FIXTURE_ROWS,
        base_gdp: FIXTURE_BASE_GDP,
        shocks: if with_shock { vec![FIXTURE_SHOCK] } else { vec![] },
    })
}

/// CSV text of a bundled fixture.
pub fn fixture_csv(with_shock: bool) -> Result<String, SyntheticError> {
    let spec = fixture_spec(with_shock)?;
    Ok(model_series(&Case::I.model(), &spec)?.to_csv())
}

/// Description of a fixture: trajectory start, calendar and shocks.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    /// Phase state at the first ΔG year (`first_year + 1`).
    pub start: PhaseState,
    pub first_year: i32,
    /// GDP rows including the base year.
    pub rows: usize,
    /// GDP in the base year, dollars.
    pub base_gdp: f64,
    /// `(year, Δx)`: one-year displacement of ΔG (10³ dollars) added at
    /// that year only.
    pub shocks: Vec<(i32, f64)>,
}

/// Samples `x(t)` at whole years and accumulates it into a GDP path.
pub fn model_series<P: Potential + ?Sized>(p: &P, spec: &SyntheticSpec) -> Result<GdpSeries, SyntheticError> {
    if spec.rows < 3 {
        return Err(SyntheticError::TooShort(spec.rows));
    }
    let years = spec.rows - 1;
    let traj = integrator::simulate(p, spec.start, (years - 1) as f64, MEASURE_DT)?;
    let mut dg: Vec<f64> = (0..years)
        .map(|k| traj.x_at(k as f64).expect("within trajectory"))
        .collect();
    for &(year, delta) in &spec.shocks {
        let k = year - spec.first_year - 1;
        if k < 0 || k as usize >= dg.len() {
            return Err(SyntheticError::ShockOutOfRange(year));
        }
        dg[k as usize] += delta;
    }
    let mut rows = Vec::with_capacity(spec.rows);
    rows.push(GdpRow {
        year: spec.first_year,
        gdp: spec.base_gdp,
    });
    for (k, x) in dg.iter().enumerate() {
        let prev = rows[k].gdp;
        rows.push(GdpRow {
            year: spec.first_year + 1 + k as i32,
            gdp: prev + 1e3 * x,
        });
    }
    Ok(GdpSeries::new(rows)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::delta_g;
    use crate::model::Harmonic;

    #[test]
    fn samples_trajectory_at_whole_years() {
        let spec = SyntheticSpec {
            start: PhaseState::new(1.0, 0.0),
            first_year: 2000,
            rows: 6,
            base_gdp: 10_000.0,
            shocks: vec![],
        };
        let s = model_series(&Harmonic::default(), &spec).unwrap();
        assert_eq!(s.len(), 6);
        let d = delta_g(&s).unwrap();
        for (k, r) in d.rows.iter().enumerate() {
            assert!((r.value - (2.0 * k as f64).cos()).abs() < 1e-5, "{k}");
        }
    }

    #[test]
    fn shock_is_a_one_year_blip() {
        let mut spec = SyntheticSpec {
            start: PhaseState::new(1.0, 0.0),
            first_year: 2000,
            rows: 6,
            base_gdp: 10_000.0,
            shocks: vec![],
        };
        let calm = delta_g(&model_series(&Harmonic::default(), &spec).unwrap()).unwrap();
        spec.shocks.push((2003, 0.5));
        let hit = delta_g(&model_series(&Harmonic::default(), &spec).unwrap()).unwrap();
        for (a, b) in calm.rows.iter().zip(&hit.rows) {
            let expect = if a.year == 2003 { 0.5 } else { 0.0 };
            assert!((b.value - a.value - expect).abs() < 1e-9);
        }
        spec.shocks = vec![(2000, 1.0)];
        assert!(matches!(
            model_series(&Harmonic::default(), &spec),
            Err(SyntheticError::ShockOutOfRange(2000))
        ));
    }
}
