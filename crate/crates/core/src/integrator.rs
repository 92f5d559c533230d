//! Velocity-Verlet integration of `x'' = F(x)`, period measurement from
//! velocity zero crossings, and reconstruction of the DI coordinate.

use thiserror::Error;

use crate::model::{LinearMap, PhaseState, Potential};
use crate::table::{fmt_opt, fmt_sig};

/// Largest accepted step, years.
pub const MAX_DT: f64 = 0.05;
/// Step used for period measurements.
pub const MEASURE_DT: f64 = 1e-3;
/// Step used for plotting runs.
pub const PLOT_DT: f64 = 1e-2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IntegratorError {
    #[error("step size must be positive and finite, got {0}")]
    BadStep(f64),
    #[error("step size {0} exceeds the stability limit {MAX_DT}")]
    StepTooLarge(f64),
    #[error("integration time must be positive and finite, got {0}")]
    BadDuration(f64),
    #[error("initial state is not finite")]
    NonFinite,
    #[error("need at least 3 velocity zero crossings of each sign, found {down} downward and {up} upward")]
    InsufficientOscillations { down: usize, up: usize },
}

/// One velocity-Verlet step: half kick, drift, half kick.
pub fn step<P: Potential + ?Sized>(p: &P, s: PhaseState, dt: f64) -> PhaseState {
    let v_half = s.v + 0.5 * dt * p.force(s.x);
    let x = s.x + dt * v_half;
    let v = v_half + 0.5 * dt * p.force(x);
    PhaseState { x, v }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub x: f64,
    pub v: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub dt: f64,
    pub samples: Vec<Sample>,
    /// Total energy at each sample.
    pub energy: Vec<f64>,
}

/// Integrates from `s0` over `[0, t_end]`, `⌈t_end/dt⌉ + 1` samples.
pub fn simulate<P: Potential + ?Sized>(p: &P, s0: PhaseState, t_end: f64, dt: f64) -> Result<Trajectory, IntegratorError> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(IntegratorError::BadStep(dt));
    }
    if dt > MAX_DT {
        return Err(IntegratorError::StepTooLarge(dt));
    }
    if !(t_end.is_finite() && t_end > 0.0) {
        return Err(IntegratorError::BadDuration(t_end));
    }
    if !s0.is_finite() {
        return Err(IntegratorError::NonFinite);
    }
    // Guard against t_end/dt landing a hair above an integer.
    let n = (t_end / dt - 1e-9).ceil() as usize;
    let mut samples = Vec::with_capacity(n + 1);
    let mut energy = Vec::with_capacity(n + 1);
    let mut s = s0;
    let mut f = p.force(s.x);
    for k in 0..=n {
        samples.push(Sample {
            t: k as f64 * dt,
            x: s.x,
            v: s.v,
        });
        energy.push(p.total_energy(s));
        if k == n {
            break;
        }
        let v_half = s.v + 0.5 * dt * f;
        let x = s.x + dt * v_half;
        f = p.force(x);
        s = PhaseState {
            x,
            v: v_half + 0.5 * dt * f,
        };
    }
    Ok(Trajectory { dt, samples, energy })
}

impl Trajectory {
    pub fn duration(&self) -> f64 {
        self.samples.last().map_or(0.0, |s| s.t)
    }

    pub fn final_state(&self) -> PhaseState {
        let s = self.samples.last().expect("trajectory is never empty");
        PhaseState { x: s.x, v: s.v }
    }

    /// `max |E(t) − E(0)| / |E(0)|`.
    pub fn max_relative_drift(&self) -> f64 {
        let e0 = self.energy[0];
        let worst = self.energy.iter().map(|e| (e - e0).abs()).fold(0.0, f64::max);
        worst / e0.abs()
    }

    /// `(min x, max x)` over the samples.
    pub fn x_range(&self) -> (f64, f64) {
        self.samples
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| (lo.min(s.x), hi.max(s.x)))
    }

    /// Interpolated times at which `v` changes sign, split by direction:
    /// `(downward, upward)`.
    pub fn velocity_crossings(&self) -> (Vec<f64>, Vec<f64>) {
        let mut down = Vec::new();
        let mut up = Vec::new();
        for w in self.samples.windows(2) {
            let (a, b) = (w[0], w[1]);
            let t_cross = || a.t + (b.t - a.t) * a.v / (a.v - b.v);
            if a.v > 0.0 && b.v <= 0.0 {
                down.push(t_cross());
            } else if a.v < 0.0 && b.v >= 0.0 {
                up.push(t_cross());
            }
        }
        (down, up)
    }

    /// Oscillation period from the mean spacing of same-direction velocity
    /// zero crossings, averaged over both directions.
    pub fn period(&self) -> Result<f64, IntegratorError> {
        let (down, up) = self.velocity_crossings();
        if down.len() < 3 || up.len() < 3 {
            return Err(IntegratorError::InsufficientOscillations {
                down: down.len(),
                up: up.len(),
            });
        }
        let mean_spacing = |c: &[f64]| (c[c.len() - 1] - c[0]) / (c.len() - 1) as f64;
        Ok(0.5 * (mean_spacing(&down) + mean_spacing(&up)))
    }

    /// Position at an arbitrary time, linear between samples.
    pub fn x_at(&self, t: f64) -> Option<f64> {
        if t < 0.0 || t > self.duration() {
            return None;
        }
        let pos = t / self.dt;
        let k = (pos.floor() as usize).min(self.samples.len() - 1);
        if k + 1 >= self.samples.len() {
            return Some(self.samples[k].x);
        }
        let frac = pos - k as f64;
        Some(self.samples[k].x + frac * (self.samples[k + 1].x - self.samples[k].x))
    }

    /// Pairs each sample with `DI(t) = (x(t) + x(t−1) − 2c)/(2b)`; the first
    /// year has no lagged value and carries `None`.
    pub fn phase(&self, lm: &LinearMap) -> PhaseTrajectory {
        let points = self
            .samples
            .iter()
            .map(|s| PhasePoint {
                t: s.t,
                x: s.x,
                di: (s.t >= 1.0)
                    .then(|| self.x_at(s.t - 1.0))
                    .flatten()
                    .map(|lag| lm.di_from_pair(s.x, lag)),
            })
            .collect();
        PhaseTrajectory { points }
    }

    /// Columns `t, x, v, energy`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,x,v,energy\n");
        for (s, e) in self.samples.iter().zip(&self.energy) {
            out.push_str(&format!("{},{},{},{}\n", fmt_sig(s.t), fmt_sig(s.x), fmt_sig(s.v), fmt_sig(*e)));
        }
        out
    }

    /// Every `stride`-th sample, for plotting.
    pub fn thinned(&self, stride: usize) -> Vec<Sample> {
        self.samples.iter().step_by(stride.max(1)).copied().collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhasePoint {
    pub t: f64,
    pub x: f64,
    pub di: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseTrajectory {
    pub points: Vec<PhasePoint>,
}

impl PhaseTrajectory {
    /// `(x, DI)` pairs with `t ∈ [start, start + span)`.
    pub fn loop_points(&self, start: f64, span: f64) -> Vec<(f64, f64)> {
        self.points
            .iter()
            .filter(|p| p.t >= start && p.t < start + span)
            .filter_map(|p| p.di.map(|d| (p.x, d)))
            .collect()
    }

    /// Columns `x, di`; `di` blank during the first year.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,di\n");
        for p in &self.points {
            out.push_str(&format!("{},{}\n", fmt_sig(p.x), fmt_opt(p.di)));
        }
        out
    }
}

/// Shoelace area of a closed polygon.
pub fn polygon_area(poly: &[(f64, f64)]) -> f64 {
    let n = poly.len();
    if n < 3 {
        return 0.0;
    }
    let twice: f64 = (0..n)
        .map(|i| {
            let (x0, y0) = poly[i];
            let (x1, y1) = poly[(i + 1) % n];
            x0 * y1 - x1 * y0
        })
        .sum();
    0.5 * twice.abs()
}

/// Even-odd ray casting.
pub fn polygon_contains(poly: &[(f64, f64)], pt: (f64, f64)) -> bool {
    let (px, py) = pt;
    let n = poly.len();
    let mut inside = false;
    let mut j = n.wrapping_sub(1);
    for i in 0..n {
        let (xi, yi) = poly[i];
        let (xj, yj) = poly[j];
        if (yi > py) != (yj > py) && px < (xj - xi) * (py - yi) / (yj - yi) + xi {
            inside = !inside;
        }
        j = i;
    }
    inside
}
