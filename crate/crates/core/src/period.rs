//! Period–energy relation of the conservative oscillator.
//!
//! Equilibria come from a sign-change scan of the force plus bisection.
//! Turning points bracket the orbit at a given energy, and the period is the
//! turning-point integral `T(E) = √2 ∫ dx / √(E − V(x))`, evaluated after the
//! substitution `x = m + h·sin θ`, which removes the inverse-square-root
//! endpoint singularity. The θ integral uses 256-node Gauss–Legendre panels,
//! bisected adaptively where the integrand is sharply peaked (orbits close to
//! the separatrix).

use std::fmt;
use std::num::NonZeroUsize;
use std::str::FromStr;
use std::sync::OnceLock;

use gauss_quad::legendre::GaussLegendre;
use thiserror::Error;

use crate::model::{PhaseState, Potential};

/// Half-width of the equilibrium search window around [`Potential::anchor`].
pub const SEARCH_HALF_WIDTH: f64 = 10.0;
/// Grid spacing of the equilibrium scan.
pub const SCAN_STEP: f64 = 1e-3;
/// Curvature below which an equilibrium is reported as degenerate.
pub const DEGENERATE_CURVATURE: f64 = 1e-8;
/// Relative distance to a local-maximum energy treated as the separatrix.
pub const SEPARATRIX_REL_TOL: f64 = 1e-6;
/// Periods above this are reported as divergent, years.
pub const MAX_PERIOD: f64 = 200.0;
/// Nodes per Gauss–Legendre panel.
pub const QUAD_NODES: usize = 256;

const QUAD_REL_TOL: f64 = 1e-11;
const QUAD_MAX_PANELS: usize = 400;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PeriodError {
    #[error("force has no root in the search window")]
    NoEquilibrium,
    #[error("unsupported potential shape with {minima} minima and {maxima} maxima")]
    UnsupportedShape { minima: usize, maxima: usize },
    #[error("energy {energy} is not above the well minimum {floor}")]
    NoOscillation { energy: f64, floor: f64 },
    #[error("energy {energy} admits an orbit in both wells; select left or right")]
    AmbiguousWell { energy: f64 },
    #[error("energy {energy} lies on the separatrix at {separatrix}")]
    Separatrix { energy: f64, separatrix: f64 },
    #[error("period diverges (computed {period} years)")]
    Diverged { period: f64 },
    #[error("failed to bracket a turning point at energy {energy}")]
    Bracket { energy: f64 },
    #[error("energy range must be finite with min <= max and at least one sample")]
    BadRange,
}

impl PeriodError {
    /// True for the separatrix-type failures (period blows up).
    pub fn is_divergence(&self) -> bool {
        matches!(self, PeriodError::Separatrix { .. } | PeriodError::Diverged { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExtremumKind {
    Min,
    Max,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Extremum {
    pub x: f64,
    pub energy: f64,
    /// `V''(x)` by central difference of the force.
    pub curvature: f64,
    pub kind: ExtremumKind,
    pub degenerate: bool,
}

impl Extremum {
    /// Small-oscillation period `2π/√V''` at a minimum.
    pub fn small_oscillation_period(&self) -> Option<f64> {
        (self.kind == ExtremumKind::Min && self.curvature > 0.0)
            .then(|| 2.0 * std::f64::consts::PI / self.curvature.sqrt())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shape {
    SingleWell,
    /// Two minima separated by a local maximum.
    Winebottle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Well {
    Left,
    Right,
}

impl FromStr for Well {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "left" | "l" => Ok(Well::Left),
            "right" | "r" => Ok(Well::Right),
            other => Err(format!("unknown well '{other}' (expected left or right)")),
        }
    }
}

/// Which closed orbit a turning-point pair or period belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Branch {
    /// The only well of a single-well potential.
    Single,
    Left,
    Right,
    /// Above the separatrix, enclosing both wells.
    Outer,
}

impl Branch {
    pub fn label(self) -> &'static str {
        match self {
            Branch::Single => "single",
            Branch::Left => "left",
            Branch::Right => "right",
            Branch::Outer => "outer",
        }
    }
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl From<Well> for Branch {
    fn from(w: Well) -> Self {
        match w {
            Well::Left => Branch::Left,
            Well::Right => Branch::Right,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PotentialProfile {
    /// Ordered by position.
    pub extrema: Vec<Extremum>,
    pub shape: Shape,
}

impl PotentialProfile {
    pub fn minima(&self) -> impl Iterator<Item = &Extremum> {
        self.extrema.iter().filter(|e| e.kind == ExtremumKind::Min)
    }

    pub fn global_min(&self) -> &Extremum {
        self.minima()
            .min_by(|a, b| a.energy.total_cmp(&b.energy))
            .expect("profile always has a minimum")
    }

    /// The interior maximum of a winebottle.
    pub fn separatrix(&self) -> Option<&Extremum> {
        match self.shape {
            Shape::SingleWell => None,
            Shape::Winebottle => self.extrema.iter().find(|e| e.kind == ExtremumKind::Max),
        }
    }

    pub fn well_min(&self, well: Well) -> Option<&Extremum> {
        if self.shape != Shape::Winebottle {
            return None;
        }
        let mut mins = self.minima();
        match well {
            Well::Left => mins.next(),
            Well::Right => mins.nth(1),
        }
    }

    /// Side of the separatrix a position lies on; `None` for single wells.
    pub fn well_of(&self, x: f64) -> Option<Well> {
        self.separatrix().map(|s| if x < s.x { Well::Left } else { Well::Right })
    }

    /// Wells holding a closed orbit strictly below the separatrix at `energy`.
    pub fn wells_below_separatrix(&self, energy: f64) -> Vec<Well> {
        match self.separatrix() {
            Some(s) if energy < s.energy => [Well::Left, Well::Right]
                .into_iter()
                .filter(|w| self.well_min(*w).is_some_and(|m| energy > m.energy))
                .collect(),
            _ => Vec::new(),
        }
    }
}

/// Bisection on a sign change of `f` between `lo` and `hi`, refined until
/// the bracket stops shrinking in floating point. Returns the end of the
/// final bracket with the same sign as `f(lo)`.
fn bisect(mut lo: f64, mut hi: f64, f: impl Fn(f64) -> f64) -> f64 {
    let f_lo = f(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm > 0.0) == (f_lo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Locates and classifies every equilibrium in `anchor ± 10`.
pub fn find_extrema<P: Potential + ?Sized>(p: &P) -> Result<PotentialProfile, PeriodError> {
    let start = p.anchor() - SEARCH_HALF_WIDTH;
    let n = (2.0 * SEARCH_HALF_WIDTH / SCAN_STEP).round() as usize;
    let grid = |k: usize| start + k as f64 * SCAN_STEP;

    let mut roots = Vec::new();
    let mut f_prev = p.force(grid(0));
    if f_prev == 0.0 {
        roots.push(grid(0));
    }
    for k in 1..=n {
        let x = grid(k);
        let f = p.force(x);
        if f == 0.0 {
            roots.push(x);
        } else if f_prev != 0.0 && (f > 0.0) != (f_prev > 0.0) {
            roots.push(bisect(grid(k - 1), x, |y| p.force(y)));
        }
        f_prev = f;
    }
    if roots.is_empty() {
        return Err(PeriodError::NoEquilibrium);
    }

    let h = 1e-5;
    let extrema: Vec<Extremum> = roots
        .into_iter()
        .map(|x| {
            let curvature = -(p.force(x + h) - p.force(x - h)) / (2.0 * h);
            Extremum {
                x,
                energy: p.potential(x),
                curvature,
                kind: if curvature > 0.0 { ExtremumKind::Min } else { ExtremumKind::Max },
                degenerate: curvature.abs() < DEGENERATE_CURVATURE,
            }
        })
        .collect();

    let minima = extrema.iter().filter(|e| e.kind == ExtremumKind::Min).count();
    let maxima = extrema.len() - minima;
    let shape = match (minima, maxima) {
        (1, 0) => Shape::SingleWell,
        (2, 1) if extrema[1].kind == ExtremumKind::Max => Shape::Winebottle,
        _ => return Err(PeriodError::UnsupportedShape { minima, maxima }),
    };
    Ok(PotentialProfile { extrema, shape })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TurningPoints {
    pub lower: f64,
    pub upper: f64,
    pub branch: Branch,
}

impl TurningPoints {
    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lower + self.upper)
    }

    pub fn half_width(&self) -> f64 {
        0.5 * (self.upper - self.lower)
    }
}

/// A potential together with its equilibrium structure.
#[derive(Debug, Clone)]
pub struct Oscillator<P> {
    potential: P,
    profile: PotentialProfile,
}

impl<P: Potential> Oscillator<P> {
    pub fn new(potential: P) -> Result<Self, PeriodError> {
        let profile = find_extrema(&potential)?;
        Ok(Self { potential, profile })
    }

    pub fn profile(&self) -> &PotentialProfile {
        &self.profile
    }

    pub fn potential(&self) -> &P {
        &self.potential
    }

    /// Resolves which orbit exists at `energy` given an optional well.
    pub fn branch_for(&self, energy: f64, well: Option<Well>) -> Result<Branch, PeriodError> {
        let floor = self.profile.global_min().energy;
        if energy.is_nan() || energy <= floor {
            return Err(PeriodError::NoOscillation { energy, floor });
        }
        let Some(sep) = self.profile.separatrix() else {
            return Ok(Branch::Single);
        };
        if energy > sep.energy {
            return Ok(Branch::Outer);
        }
        if energy == sep.energy {
            return Err(PeriodError::Separatrix {
                energy,
                separatrix: sep.energy,
            });
        }
        let available = self.profile.wells_below_separatrix(energy);
        match (well, available.as_slice()) {
            (Some(w), avail) if avail.contains(&w) => Ok(w.into()),
            (Some(w), _) => Err(PeriodError::NoOscillation {
                energy,
                floor: self.profile.well_min(w).map_or(floor, |m| m.energy),
            }),
            (None, [only]) => Ok((*only).into()),
            (None, _) => Err(PeriodError::AmbiguousWell { energy }),
        }
    }

    /// Positions where `V(x) = E` bounding the orbit.
    pub fn turning_points(&self, energy: f64, well: Option<Well>) -> Result<TurningPoints, PeriodError> {
        let branch = self.branch_for(energy, well)?;
        let v = &self.potential;
        let g = |x: f64| v.potential(x) - energy;
        let outward = |from: f64, dir: f64| -> Result<f64, PeriodError> {
            let mut inner = from;
            let mut step = 0.1;
            for _ in 0..200 {
                let outer = inner + dir * step;
                if g(outer) >= 0.0 {
                    return Ok(bisect(inner, outer, g));
                }
                inner = outer;
                step *= 2.0;
            }
            Err(PeriodError::Bracket { energy })
        };

        let (lower, upper) = match branch {
            Branch::Single => {
                let m = self.profile.global_min().x;
                (outward(m, -1.0)?, outward(m, 1.0)?)
            }
            Branch::Outer => {
                let first = self.profile.extrema.first().expect("non-empty").x;
                let last = self.profile.extrema.last().expect("non-empty").x;
                (outward(first, -1.0)?, outward(last, 1.0)?)
            }
            Branch::Left | Branch::Right => {
                let w = if branch == Branch::Left { Well::Left } else { Well::Right };
                let m = self.profile.well_min(w).expect("winebottle").x;
                let hump = self.profile.separatrix().expect("winebottle").x;
                match w {
                    Well::Left => (outward(m, -1.0)?, bisect(m, hump, g)),
                    Well::Right => (bisect(m, hump, g), outward(m, 1.0)?),
                }
            }
        };
        Ok(TurningPoints { lower, upper, branch })
    }

    /// Rest state on the upper turning point of the orbit at `energy`.
    pub fn rest_state(&self, energy: f64, well: Option<Well>) -> Result<PhaseState, PeriodError> {
        Ok(PhaseState::new(self.turning_points(energy, well)?.upper, 0.0))
    }

    /// Oscillation period at `energy`, years.
    pub fn period(&self, energy: f64, well: Option<Well>) -> Result<f64, PeriodError> {
        if let Some(sep) = self.profile.separatrix() {
            if (energy - sep.energy).abs() <= SEPARATRIX_REL_TOL * sep.energy.abs().max(f64::MIN_POSITIVE) {
                return Err(PeriodError::Separatrix {
                    energy,
                    separatrix: sep.energy,
                });
            }
        }
        let tp = self.turning_points(energy, well)?;
        let t = period_between(&self.potential, energy, tp.lower, tp.upper);
        if !t.is_finite() || t > MAX_PERIOD {
            return Err(PeriodError::Diverged { period: t });
        }
        Ok(t)
    }

    /// Samples `T(E)` at `n` evenly spaced energies in `[e_min, e_max]`.
    /// Where two wells hold an orbit and no well is given, both are sampled.
    pub fn period_curve(&self, e_min: f64, e_max: f64, n: usize, well: Option<Well>) -> Result<PeriodCurve, PeriodError> {
        if n == 0 || !(e_min.is_finite() && e_max.is_finite()) || e_min > e_max {
            return Err(PeriodError::BadRange);
        }
        let mut samples = Vec::new();
        for k in 0..n {
            let energy = if n == 1 {
                e_min
            } else {
                e_min + (e_max - e_min) * k as f64 / (n - 1) as f64
            };
            let wells = match well {
                Some(w) => vec![Some(w)],
                None => {
                    let avail = self.profile.wells_below_separatrix(energy);
                    if avail.len() == 2 {
                        avail.into_iter().map(Some).collect()
                    } else {
                        vec![None]
                    }
                }
            };
            for w in wells {
                let branch = self.branch_for(energy, w).ok();
                let (period, status) = match self.period(energy, w) {
                    Ok(t) => (Some(t), SampleStatus::Ok),
                    Err(e) => (None, SampleStatus::from_error(&e)),
                };
                samples.push(PeriodSample {
                    energy,
                    period,
                    branch,
                    status,
                });
            }
        }
        let separatrix_energy = self.profile.separatrix().map(|s| s.energy);
        let mut curve = PeriodCurve {
            samples,
            separatrix_energy,
            monotone_decreasing: false,
        };
        curve.monotone_decreasing = curve.branches().iter().all(|b| curve.is_strictly_decreasing(*b));
        Ok(curve)
    }
}

/// `√2 ∫_{lower}^{upper} dx / √(E − V(x))` via `x = m + h·sin θ`.
pub fn period_between<P: Potential + ?Sized>(p: &P, energy: f64, lower: f64, upper: f64) -> f64 {
    let m = 0.5 * (lower + upper);
    let h = 0.5 * (upper - lower);
    let integrand = |theta: f64| {
        let (s, c) = theta.sin_cos();
        let gap = energy - p.potential(m + h * s);
        if gap > 0.0 {
            h * c / gap.sqrt()
        } else {
            0.0
        }
    };
    let half_pi = std::f64::consts::FRAC_PI_2;
    std::f64::consts::SQRT_2 * adaptive_gauss_legendre(&integrand, -half_pi, half_pi)
}

fn rule() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(NonZeroUsize::new(QUAD_NODES).expect("non-zero")))
}

/// Globally adaptive composite Gauss–Legendre: the panel with the largest
/// error estimate (whole vs. two halves) is split until the summed estimate
/// falls below the relative tolerance or the panel budget runs out.
fn adaptive_gauss_legendre(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    struct Panel {
        a: f64,
        b: f64,
        value: f64,
        error: f64,
    }
    let panel = |a: f64, b: f64| {
        let mid = 0.5 * (a + b);
        let whole = rule().integrate(a, b, f);
        let value = rule().integrate(a, mid, f) + rule().integrate(mid, b, f);
        Panel {
            a,
            b,
            value,
            error: (value - whole).abs(),
        }
    };
    let mut panels = vec![panel(a, b)];
    while panels.len() < QUAD_MAX_PANELS {
        let total: f64 = panels.iter().map(|p| p.value).sum();
        let error: f64 = panels.iter().map(|p| p.error).sum();
        if error <= QUAD_REL_TOL * total.abs() {
            break;
        }
        let worst = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.total_cmp(&y.1.error))
            .map(|(i, _)| i)
            .expect("non-empty");
        let p = panels.swap_remove(worst);
        let mid = 0.5 * (p.a + p.b);
        panels.push(panel(p.a, mid));
        panels.push(panel(mid, p.b));
    }
    panels.iter().map(|p| p.value).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleStatus {
    Ok,
    NoOscillation,
    Ambiguous,
    Separatrix,
    Diverged,
    Failed,
}

impl SampleStatus {
    fn from_error(e: &PeriodError) -> Self {
        match e {
            PeriodError::NoOscillation { .. } => SampleStatus::NoOscillation,
            PeriodError::AmbiguousWell { .. } => SampleStatus::Ambiguous,
            PeriodError::Separatrix { .. } => SampleStatus::Separatrix,
            PeriodError::Diverged { .. } => SampleStatus::Diverged,
            _ => SampleStatus::Failed,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            SampleStatus::Ok => "ok",
            SampleStatus::NoOscillation => "no-oscillation",
            SampleStatus::Ambiguous => "ambiguous-well",
            SampleStatus::Separatrix => "separatrix",
            SampleStatus::Diverged => "diverged",
            SampleStatus::Failed => "failed",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeriodSample {
    pub energy: f64,
    /// `None` when `status` is not `Ok`.
    pub period: Option<f64>,
    pub branch: Option<Branch>,
    pub status: SampleStatus,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PeriodCurve {
    pub samples: Vec<PeriodSample>,
    pub separatrix_energy: Option<f64>,
    /// Every branch is strictly decreasing in energy.
    pub monotone_decreasing: bool,
}

impl PeriodCurve {
    pub fn branches(&self) -> Vec<Branch> {
        let mut out: Vec<Branch> = Vec::new();
        for b in self.samples.iter().filter_map(|s| s.branch) {
            if !out.contains(&b) {
                out.push(b);
            }
        }
        out
    }

    /// Successful `(E, T)` pairs of one branch, in energy order.
    pub fn branch(&self, branch: Branch) -> Vec<(f64, f64)> {
        self.samples
            .iter()
            .filter(|s| s.branch == Some(branch))
            .filter_map(|s| s.period.map(|t| (s.energy, t)))
            .collect()
    }

    pub fn is_strictly_decreasing(&self, branch: Branch) -> bool {
        self.branch(branch).windows(2).all(|w| w[1].1 < w[0].1)
    }

    /// Columns `E, T, well, flags`; blank `T` for gaps.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("E,T,well,flags\n");
        for s in &self.samples {
            out.push_str(&format!(
                "{},{},{},{}\n",
                crate::table::fmt_sig(s.energy),
                s.period.map(crate::table::fmt_sig).unwrap_or_default(),
                s.branch.map_or("", Branch::label),
                s.status.label()
            ));
        }
        out
    }
}
