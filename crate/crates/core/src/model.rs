//! Model constants and the closed-form scalar functions of the optimal-DI
//! oscillator: the tanh response, the force, the potential and the total
//! energy.
//!
//! Units: positions (ΔG) are in 10³ dollars, time in years, energies in
//! 10⁶ (10³ dollars)² / year². Raw-dollar quantities are converted at the
//! edges via [`LinearMap::from_dollars`] and [`OdiParams::from_dollars`].

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("ODI amplitude B must be positive and finite, got {0}")]
    Amplitude(f64),
    #[error("ODI steepness C must be positive and finite, got {0}")]
    Steepness(f64),
    #[error("ODI offset A and centre D must be finite")]
    NonFinite,
    #[error("linear map slope b must be positive and finite, got {0}")]
    Slope(f64),
    #[error("linear map intercept c must be finite")]
    Intercept,
    #[error("parameter file: {0}")]
    ParamFile(String),
}

/// Constants of the optimal-DI response `ODI(x) = A + B·tanh(C·(x − D))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdiParams {
    /// `A`: DI level at the centre of the response.
    pub offset: f64,
    /// `B`: half-range of the response, DI points.
    pub amplitude: f64,
    /// `C`: steepness, 1/(10³ dollars).
    pub steepness: f64,
    /// `D`: centre, 10³ dollars.
    pub center: f64,
}

impl OdiParams {
    pub fn new(offset: f64, amplitude: f64, steepness: f64, center: f64) -> Result<Self, ModelError> {
        let p = Self {
            offset,
            amplitude,
            steepness,
            center,
        };
        p.validate()?;
        Ok(p)
    }

    /// Converts parameters quoted against raw dollars (`C` per dollar, `D` in
    /// dollars) into internal units.
    pub fn from_dollars(offset: f64, amplitude: f64, steepness_per_dollar: f64, center_dollars: f64) -> Result<Self, ModelError> {
        Self::new(offset, amplitude, steepness_per_dollar * 1e3, center_dollars * 1e-3)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if !(self.amplitude.is_finite() && self.amplitude > 0.0) {
            return Err(ModelError::Amplitude(self.amplitude));
        }
        if !(self.steepness.is_finite() && self.steepness > 0.0) {
            return Err(ModelError::Steepness(self.steepness));
        }
        if !(self.offset.is_finite() && self.center.is_finite()) {
            return Err(ModelError::NonFinite);
        }
        Ok(())
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        self.offset + self.amplitude * (self.steepness * (x - self.center)).tanh()
    }

    /// Closed range `[A − B, A + B]` bounding the response.
    pub fn range(&self) -> (f64, f64) {
        (self.offset - self.amplitude, self.offset + self.amplitude)
    }
}

/// Linear link `ΔG = b·DI + c` between growth and sentiment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearMap {
    /// `b`, 10³ dollars per DI point.
    pub slope: f64,
    /// `c`, 10³ dollars.
    pub intercept: f64,
}

impl LinearMap {
    /// Pair used by the averaged (modified) model: b = 23.6, c = 969 dollars.
    pub const MODIFIED: LinearMap = LinearMap {
        slope: 0.0236,
        intercept: 0.969,
    };

    /// Pair quoted for the original, non-averaged link: b = 23.8, c = 980
    /// dollars. Kept as metadata; the continuum model never uses it.
    pub const ORIGINAL: LinearMap = LinearMap {
        slope: 0.0238,
        intercept: 0.980,
    };

    pub fn new(slope: f64, intercept: f64) -> Result<Self, ModelError> {
        if !(slope.is_finite() && slope > 0.0) {
            return Err(ModelError::Slope(slope));
        }
        if !intercept.is_finite() {
            return Err(ModelError::Intercept);
        }
        Ok(Self { slope, intercept })
    }

    pub fn from_dollars(slope: f64, intercept: f64) -> Result<Self, ModelError> {
        Self::new(slope * 1e-3, intercept * 1e-3)
    }

    /// `ΔG` implied by a DI level.
    pub fn growth(&self, di: f64) -> f64 {
        self.slope * di + self.intercept
    }

    /// DI implied by two consecutive growth values under the averaged link
    /// `ΔG(i) + ΔG(i−1) = 2b·DI(i) + 2c`.
    pub fn di_from_pair(&self, dg: f64, dg_prev: f64) -> f64 {
        (dg + dg_prev - 2.0 * self.intercept) / (2.0 * self.slope)
    }
}

/// `β = bB/C` and `γ = bA + c`, the only combinations the potential sees.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedParams {
    pub beta: f64,
    pub gamma: f64,
}

impl DerivedParams {
    pub fn from_parts(odi: &OdiParams, lm: &LinearMap) -> Self {
        Self {
            beta: lm.slope * odi.amplitude / odi.steepness,
            gamma: lm.slope * odi.offset + lm.intercept,
        }
    }
}

/// Position and velocity of the continuous system.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PhaseState {
    pub x: f64,
    pub v: f64,
}

impl PhaseState {
    pub const fn new(x: f64, v: f64) -> Self {
        Self { x, v }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.v.is_finite()
    }
}

/// A one-dimensional conservative force field.
///
/// `anchor` is a position near the bottom of the potential around which
/// equilibria are searched for.
pub trait Potential {
    fn potential(&self, x: f64) -> f64;
    fn force(&self, x: f64) -> f64;
    fn anchor(&self) -> f64;

    fn total_energy(&self, s: PhaseState) -> f64 {
        0.5 * s.v * s.v + self.potential(s.x)
    }
}

impl<P: Potential + ?Sized> Potential for &P {
    fn potential(&self, x: f64) -> f64 {
        (**self).potential(x)
    }
    fn force(&self, x: f64) -> f64 {
        (**self).force(x)
    }
    fn anchor(&self) -> f64 {
        (**self).anchor()
    }
}

/// `ln cosh(u)` without overflow for large `|u|` and without cancellation
/// near zero.
pub fn log_cosh(u: f64) -> f64 {
    let a = u.abs();
    if a < 1.0 {
        let s = (0.5 * a).sinh();
        (2.0 * s * s).ln_1p()
    } else {
        a - std::f64::consts::LN_2 + (-2.0 * a).exp().ln_1p()
    }
}

/// The parameter presets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Case {
    /// Original response: A = −5, B = 55.3, C = 0.628, D = 0.880.
    I,
    /// Gentle response: A = −1, B = 48.0, C = 0.600, D = 0.900.
    II,
    /// Steep response: A = −1, B = 30.0, C = 1.800, D = 0.920. Double well.
    III,
}

impl Case {
    pub const ALL: [Case; 3] = [Case::I, Case::II, Case::III];

    pub fn odi(self) -> OdiParams {
        let (offset, amplitude, steepness, center) = match self {
            Case::I => (-5.0, 55.3, 0.628, 0.880),
            Case::II => (-1.0, 48.0, 0.600, 0.900),
            Case::III => (-1.0, 30.0, 1.800, 0.920),
        };
        OdiParams {
            offset,
            amplitude,
            steepness,
            center,
        }
    }

    pub fn model(self) -> Model {
        Model::new(self.odi(), LinearMap::MODIFIED).expect("presets are valid")
    }

    pub fn label(self) -> &'static str {
        match self {
            Case::I => "i",
            Case::II => "ii",
            Case::III => "iii",
        }
    }
}

impl fmt::Display for Case {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Case {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "i" | "1" => Ok(Case::I),
            "ii" | "2" => Ok(Case::II),
            "iii" | "3" => Ok(Case::III),
            other => Err(format!("unknown case '{other}' (expected i, ii or iii)")),
        }
    }
}

/// A complete, validated parameter set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Model {
    odi: OdiParams,
    linear: LinearMap,
    derived: DerivedParams,
}

impl Model {
    pub fn new(odi: OdiParams, linear: LinearMap) -> Result<Self, ModelError> {
        odi.validate()?;
        LinearMap::new(linear.slope, linear.intercept)?;
        Ok(Self {
            odi,
            linear,
            derived: DerivedParams::from_parts(&odi, &linear),
        })
    }

    pub fn odi_params(&self) -> &OdiParams {
        &self.odi
    }

    pub fn linear_map(&self) -> &LinearMap {
        &self.linear
    }

    pub fn derived(&self) -> &DerivedParams {
        &self.derived
    }

    #[inline]
    pub fn odi(&self, x: f64) -> f64 {
        self.odi.eval(x)
    }

    /// Right-hand side of the equation of motion, `4·(b·ODI(x) − x + c)`.
    #[inline]
    pub fn force(&self, x: f64) -> f64 {
        4.0 * (self.linear.slope * self.odi(x) - x + self.linear.intercept)
    }

    /// `V(x) = −4β·ln cosh(C(x − D)) + 2(x − γ)²`, integration constant zero.
    #[inline]
    pub fn potential(&self, x: f64) -> f64 {
        let DerivedParams { beta, gamma } = self.derived;
        let u = self.odi.steepness * (x - self.odi.center);
        -4.0 * beta * log_cosh(u) + 2.0 * (x - gamma) * (x - gamma)
    }

    pub fn total_energy(&self, s: PhaseState) -> f64 {
        0.5 * s.v * s.v + self.potential(s.x)
    }

    /// Serialises the parameters as `key = value` lines.
    pub fn to_param_text(&self) -> String {
        let o = &self.odi;
        let l = &self.linear;
        format!(
            "# ODI response A + B*tanh(C*(x - D)); x in 10^3 dollars\nA = {}\nB = {}\nC = {}\nD = {}\n# linear map dG = b*DI + c; 10^3 dollars\nb = {}\nc = {}\n",
            o.offset, o.amplitude, o.steepness, o.center, l.slope, l.intercept
        )
    }

    /// Parses the format written by [`Model::to_param_text`]. `b` and `c`
    /// default to [`LinearMap::MODIFIED`]; `A`–`D` are mandatory.
    pub fn from_param_text(text: &str) -> Result<Self, ModelError> {
        let kv = parse_key_values(text)?;
        let get = |k: &str| kv.iter().find(|(key, _)| key == k).map(|(_, v)| *v);
        let need = |k: &str| get(k).ok_or_else(|| ModelError::ParamFile(format!("missing key '{k}'")));
        let odi = OdiParams::new(need("A")?, need("B")?, need("C")?, need("D")?)?;
        let linear = LinearMap::new(
            get("b").unwrap_or(LinearMap::MODIFIED.slope),
            get("c").unwrap_or(LinearMap::MODIFIED.intercept),
        )?;
        Model::new(odi, linear)
    }
}

/// Reads `key = value` lines, skipping blanks and `#` comments.
pub fn parse_key_values(text: &str) -> Result<Vec<(String, f64)>, ModelError> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| ModelError::ParamFile(format!("line {}: expected 'key = value'", n + 1)))?;
        let v: f64 = v
            .trim()
            .parse()
            .map_err(|_| ModelError::ParamFile(format!("line {}: bad number '{}'", n + 1, v.trim())))?;
        out.push((k.trim().to_string(), v));
    }
    Ok(out)
}

impl Potential for Model {
    fn potential(&self, x: f64) -> f64 {
        Model::potential(self, x)
    }
    fn force(&self, x: f64) -> f64 {
        Model::force(self, x)
    }
    fn anchor(&self) -> f64 {
        self.derived.gamma
    }
}

/// Pure quadratic well `V = 2(x − center)²`: the large-amplitude limit of
/// every preset, with period exactly π at all energies.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Harmonic {
    pub center: f64,
}

impl Potential for Harmonic {
    fn potential(&self, x: f64) -> f64 {
        2.0 * (x - self.center) * (x - self.center)
    }
    fn force(&self, x: f64) -> f64 {
        -4.0 * (x - self.center)
    }
    fn anchor(&self) -> f64 {
        self.center
    }
}
