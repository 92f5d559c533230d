//! Annual difference-equation form of the model.
//!
//! ```text
//! DI(i+1)  = DI(i) + a·(ODI(ΔG(i)) − DI(i))
//! ΔG(i+1)  = 2b·DI(i+1) + 2c − ΔG(i)
//! ```
//!
//! Eliminating DI gives the single-variable recursion used by
//! [`DiscreteMap::combined_step`]. The relaxation rate `a` selects the
//! qualitative regime: convergence for `a < 2`, bounded oscillation at
//! `a = 2`, divergence above.

use thiserror::Error;

use crate::model::Model;
use crate::table::fmt_sig;

pub const DEFAULT_BOUND: f64 = 1e6;
/// Successive-ΔG difference treated as converged.
pub const CONVERGENCE_TOL: f64 = 1e-9;
/// Distance in (ΔG, DI) space counted as a return to the start.
pub const RETURN_TOL: f64 = 1e-3;
pub const MIN_HORIZON: usize = 100;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MapError {
    #[error("relaxation rate must be positive and finite, got {0}")]
    BadRelaxation(f64),
    #[error("divergence bound must be positive, got {0}")]
    BadBound(f64),
    #[error("|ΔG| = {value} exceeded the divergence bound {bound}")]
    Diverged { value: f64, bound: f64 },
    #[error("classification horizon must be at least {MIN_HORIZON} steps, got {0}")]
    HorizonTooShort(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MapState {
    pub di: f64,
    /// ΔG(i), 10³ dollars.
    pub dg: f64,
    /// ΔG(i−1), 10³ dollars.
    pub dg_prev: f64,
}

impl MapState {
    /// State whose DI satisfies the averaged link with the two growth values.
    pub fn from_growth_pair(model: &Model, dg: f64, dg_prev: f64) -> Self {
        Self {
            di: model.linear_map().di_from_pair(dg, dg_prev),
            dg,
            dg_prev,
        }
    }

    /// Rest state at an equilibrium `x*` of the flow.
    pub fn at_equilibrium(model: &Model, x: f64) -> Self {
        Self {
            di: model.odi(x),
            dg: x,
            dg_prev: x,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    ConvergesToFixedPoint,
    Periodic,
    Diverges,
    /// No criterion fired within the horizon.
    Inconclusive,
}

impl Regime {
    pub fn label(self) -> &'static str {
        match self {
            Regime::ConvergesToFixedPoint => "converges-to-fixed-point",
            Regime::Periodic => "periodic",
            Regime::Diverges => "diverges",
            Regime::Inconclusive => "inconclusive",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegimeReport {
    pub regime: Regime,
    /// Limit ΔG, present iff the orbit converged.
    pub fixed_point: Option<f64>,
    /// Steps until the first near-return, present iff periodic.
    pub period_steps: Option<usize>,
    /// Steps taken before the verdict.
    pub steps: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Orbit {
    /// Initial state first.
    pub states: Vec<MapState>,
    /// Step at which the bound was exceeded, if it was.
    pub diverged_at: Option<usize>,
}

impl Orbit {
    /// Columns `step, dg, di`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("step,dg,di\n");
        for (i, s) in self.states.iter().enumerate() {
            out.push_str(&format!("{},{},{}\n", i, fmt_sig(s.dg), fmt_sig(s.di)));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscreteMap {
    model: Model,
    relaxation: f64,
    bound: f64,
}

impl DiscreteMap {
    pub fn new(model: Model, relaxation: f64) -> Result<Self, MapError> {
        if !(relaxation.is_finite() && relaxation > 0.0) {
            return Err(MapError::BadRelaxation(relaxation));
        }
        Ok(Self {
            model,
            relaxation,
            bound: DEFAULT_BOUND,
        })
    }

    pub fn with_bound(mut self, bound: f64) -> Result<Self, MapError> {
        if bound.is_nan() || bound <= 0.0 {
            return Err(MapError::BadBound(bound));
        }
        self.bound = bound;
        Ok(self)
    }

    pub fn relaxation(&self) -> f64 {
        self.relaxation
    }

    fn check(&self, dg: f64) -> Result<f64, MapError> {
        if dg.abs() > self.bound || !dg.is_finite() {
            Err(MapError::Diverged {
                value: dg,
                bound: self.bound,
            })
        } else {
            Ok(dg)
        }
    }

    pub fn step(&self, s: MapState) -> Result<MapState, MapError> {
        let lm = self.model.linear_map();
        let di = s.di + self.relaxation * (self.model.odi(s.dg) - s.di);
        let dg = 2.0 * lm.slope * di + 2.0 * lm.intercept - s.dg;
        Ok(MapState {
            di,
            dg: self.check(dg)?,
            dg_prev: s.dg,
        })
    }

    /// `ΔG(i+1) = 2ab·ODI(ΔG(i)) + 2ac − a·ΔG(i) − (a − 1)·ΔG(i−1)`.
    pub fn combined_step(&self, dg: f64, dg_prev: f64) -> Result<f64, MapError> {
        let a = self.relaxation;
        let lm = self.model.linear_map();
        let next = 2.0 * a * lm.slope * self.model.odi(dg) + 2.0 * a * lm.intercept - a * dg - (a - 1.0) * dg_prev;
        self.check(next)
    }

    /// Iterates [`DiscreteMap::step`] up to `steps` times, stopping early on
    /// divergence.
    pub fn orbit(&self, s0: MapState, steps: usize) -> Orbit {
        let mut states = Vec::with_capacity(steps + 1);
        states.push(s0);
        let mut s = s0;
        for i in 1..=steps {
            match self.step(s) {
                Ok(next) => {
                    states.push(next);
                    s = next;
                }
                Err(_) => {
                    return Orbit {
                        states,
                        diverged_at: Some(i),
                    }
                }
            }
        }
        Orbit {
            states,
            diverged_at: None,
        }
    }

    /// ΔG orbit of the single-variable recursion, starting values first.
    pub fn combined_orbit(&self, dg: f64, dg_prev: f64, steps: usize) -> Result<Vec<f64>, MapError> {
        let mut out = Vec::with_capacity(steps + 2);
        out.push(dg_prev);
        out.push(dg);
        for _ in 0..steps {
            let n = out.len();
            let next = self.combined_step(out[n - 1], out[n - 2])?;
            out.push(next);
        }
        Ok(out)
    }

    /// Runs the orbit until it converges, returns near its start, escapes
    /// the bound, or the horizon is exhausted.
    ///
    /// A return only counts after the orbit has first moved more than
    /// `10·RETURN_TOL` away from the start, so slow convergence near a fixed
    /// point is never mistaken for a cycle.
    pub fn classify(&self, initial: MapState, horizon: usize) -> Result<RegimeReport, MapError> {
        if horizon < MIN_HORIZON {
            return Err(MapError::HorizonTooShort(horizon));
        }
        let dist = |s: &MapState| (s.dg - initial.dg).hypot(s.di - initial.di);
        let mut s = initial;
        let mut small_steps = 0;
        let mut left_start = false;
        for i in 1..=horizon {
            let next = match self.step(s) {
                Ok(n) => n,
                Err(_) => {
                    return Ok(RegimeReport {
                        regime: Regime::Diverges,
                        fixed_point: None,
                        period_steps: None,
                        steps: i,
                    })
                }
            };
            if (next.dg - s.dg).abs() < CONVERGENCE_TOL {
                small_steps += 1;
                if small_steps >= 2 {
                    return Ok(RegimeReport {
                        regime: Regime::ConvergesToFixedPoint,
                        fixed_point: Some(next.dg),
                        period_steps: None,
                        steps: i,
                    });
                }
            } else {
                small_steps = 0;
            }
            let d = dist(&next);
            if d > 10.0 * RETURN_TOL {
                left_start = true;
            } else if left_start && d < RETURN_TOL {
                return Ok(RegimeReport {
                    regime: Regime::Periodic,
                    fixed_point: None,
                    period_steps: Some(i),
                    steps: i,
                });
            }
            s = next;
        }
        Ok(RegimeReport {
            regime: Regime::Inconclusive,
            fixed_point: None,
            period_steps: None,
            steps: horizon,
        })
    }
}

/// Discrete analogue of the total energy, `½(x(i) − x(i−1))² + V(x(i))`.
pub fn discrete_energy(model: &Model, dg: f64, dg_prev: f64) -> f64 {
    let v = dg - dg_prev;
    0.5 * v * v + model.potential(dg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Case;
    use crate::period::find_extrema;

    fn equilibrium(case: Case) -> f64 {
        find_extrema(&case.model()).unwrap().global_min().x
    }

    #[test]
    fn fixed_point_is_invariant() {
        let m = Case::I.model();
        let x = equilibrium(Case::I);
        let s = MapState::at_equilibrium(&m, x);
        for a in [0.5, 1.0, 2.0, 3.0] {
            let next = DiscreteMap::new(m, a).unwrap().step(s).unwrap();
            assert!((next.dg - x).abs() < 1e-12 && (next.di - s.di).abs() < 1e-9);
            let c = DiscreteMap::new(m, a).unwrap().combined_step(x, x).unwrap();
            assert!((c - x).abs() < 1e-12);
        }
    }

    #[test]
    fn relaxation_two_reduces_to_second_difference() {
        let m = Case::I.model();
        let map = DiscreteMap::new(m, 2.0).unwrap();
        let lm = m.linear_map();
        for (x, xp) in [(1.0, 0.9), (0.2, 1.4), (2.5, 2.0)] {
            let direct = 2.0 * x - xp + 4.0 * (lm.slope * m.odi(x) - x + lm.intercept);
            assert!((map.combined_step(x, xp).unwrap() - direct).abs() < 1e-13);
        }
    }

    #[test]
    fn combined_matches_two_variable_orbit() {
        let m = Case::I.model();
        let map = DiscreteMap::new(m, 1.5).unwrap();
        let s0 = MapState::from_growth_pair(&m, 1.0, 0.9);
        let orbit = map.orbit(s0, 100);
        let combined = map.combined_orbit(1.0, 0.9, 100).unwrap();
        for (k, s) in orbit.states.iter().enumerate() {
            let c = combined[k + 1];
            assert!((s.dg - c).abs() <= 1e-12 * c.abs().max(1.0), "step {k}: {} vs {c}", s.dg);
        }
    }

    #[test]
    fn divergence_is_reported() {
        let m = Case::I.model();
        let map = DiscreteMap::new(m, 2.5).unwrap();
        let orbit = map.orbit(MapState::from_growth_pair(&m, 1.2, 0.7), 500);
        assert!(orbit.diverged_at.is_some());
        let small = DiscreteMap::new(m, 1.0).unwrap().with_bound(1e-3).unwrap();
        assert!(matches!(
            small.step(MapState::from_growth_pair(&m, 1.0, 1.0)),
            Err(MapError::Diverged { .. })
        ));
    }

    #[test]
    fn three_regimes() {
        let m = Case::I.model();
        let s0 = MapState::from_growth_pair(&m, 1.1, 0.6);
        let r1 = DiscreteMap::new(m, 1.0).unwrap().classify(s0, 10_000).unwrap();
        assert_eq!(r1.regime, Regime::ConvergesToFixedPoint);
        assert!((r1.fixed_point.unwrap() - equilibrium(Case::I)).abs() < 1e-8);
        let r2 = DiscreteMap::new(m, 2.0).unwrap().classify(s0, 1_000_000).unwrap();
        assert_eq!(r2.regime, Regime::Periodic);
        assert!(r2.period_steps.is_some() && r2.fixed_point.is_none());
        let r3 = DiscreteMap::new(m, 3.0).unwrap().classify(s0, 1_000).unwrap();
        assert_eq!(r3.regime, Regime::Diverges);
    }

    #[test]
    fn inconclusive_when_horizon_runs_out() {
        let m = Case::I.model();
        let s0 = MapState::from_growth_pair(&m, 1.1, 0.6);
        let r = DiscreteMap::new(m, 2.0).unwrap().classify(s0, 100).unwrap();
        assert_eq!(r.regime, Regime::Inconclusive);
        assert!(DiscreteMap::new(m, 2.0).unwrap().classify(s0, 99).is_err());
    }

    #[test]
    fn rejects_bad_relaxation() {
        assert!(DiscreteMap::new(Case::I.model(), 0.0).is_err());
        assert!(DiscreteMap::new(Case::I.model(), f64::NAN).is_err());
    }

    #[test]
    fn orbit_csv_columns() {
        let m = Case::I.model();
        let orbit = DiscreteMap::new(m, 1.0).unwrap().orbit(MapState::from_growth_pair(&m, 1.0, 1.0), 3);
        let csv = orbit.to_csv();
        assert!(csv.starts_with("step,dg,di\n0,1,"));
        assert_eq!(csv.lines().count(), 5);
    }
}
