//! Annual GDP ingestion and the per-year energy index.
//!
//! Input GDP is per capita in raw constant-price dollars; everything
//! downstream of [`delta_g`] is in 10³ dollars.

use std::io::Read;
use std::path::Path;

use thiserror::Error;

use crate::model::{LinearMap, Model, PhaseState};
use crate::period::{Oscillator, PeriodError};
use crate::table::{fmt_opt, fmt_sig};

/// Peaks must exceed this multiple of the median energy above the floor.
pub const PEAK_FACTOR: f64 = 1.5;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error("expected header '{expected}', found '{found}'")]
    Header { expected: String, found: String },
    #[error("line {line}: year {year} does not follow {previous}")]
    NotIncreasing { line: u64, year: i32, previous: i32 },
    #[error("missing year {missing} (between {before} and {after})")]
    Gap { missing: i32, before: i32, after: i32 },
    #[error("line {line}: GDP must be positive and finite, got {gdp}")]
    NonPositive { line: u64, gdp: f64 },
    #[error("need at least {needed} rows, got {got}")]
    TooShort { needed: usize, got: usize },
    #[error("series lengths differ ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("series has zero variance")]
    ZeroVariance,
    #[error(transparent)]
    Period(#[from] PeriodError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GdpRow {
    pub year: i32,
    /// Dollars per capita.
    pub gdp: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GdpSeries {
    rows: Vec<GdpRow>,
}

impl GdpSeries {
    /// Validates consecutive, strictly increasing years and positive GDP.
    pub fn new(rows: Vec<GdpRow>) -> Result<Self, DataError> {
        Self::validate(&rows, |i| i as u64 + 1)?;
        Ok(Self { rows })
    }

    fn validate(rows: &[GdpRow], line_of: impl Fn(usize) -> u64) -> Result<(), DataError> {
        for (i, r) in rows.iter().enumerate() {
            if !(r.gdp.is_finite() && r.gdp > 0.0) {
                return Err(DataError::NonPositive {
                    line: line_of(i),
                    gdp: r.gdp,
                });
            }
            if i > 0 {
                let prev = rows[i - 1].year;
                if r.year <= prev {
                    return Err(DataError::NotIncreasing {
                        line: line_of(i),
                        year: r.year,
                        previous: prev,
                    });
                }
                if r.year > prev + 1 {
                    return Err(DataError::Gap {
                        missing: prev + 1,
                        before: prev,
                        after: r.year,
                    });
                }
            }
        }
        Ok(())
    }

    pub fn rows(&self) -> &[GdpRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Columns `year, gdp`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("year,gdp\n");
        for r in &self.rows {
            out.push_str(&format!("{},{:.4}\n", r.year, r.gdp));
        }
        out
    }
}

fn check_header(rdr: &mut csv::Reader<impl Read>, expected: &'static [&'static str]) -> Result<(), DataError> {
    let headers = rdr.headers().map_err(|e| DataError::Parse {
        line: 1,
        message: e.to_string(),
    })?;
    let found: Vec<String> = headers.iter().map(|h| h.trim().to_ascii_lowercase()).collect();
    if found.len() != expected.len() || found.iter().zip(expected).any(|(f, e)| f != e) {
        return Err(DataError::Header {
            expected: expected.join(","),
            found: found.join(","),
        });
    }
    Ok(())
}

fn csv_reader<R: Read>(src: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(src)
}

fn field<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize, name: &str, line: u64) -> Result<T, DataError> {
    let raw = rec.get(i).ok_or_else(|| DataError::Parse {
        line,
        message: format!("missing column '{name}'"),
    })?;
    raw.parse().map_err(|_| DataError::Parse {
        line,
        message: format!("bad {name} '{raw}'"),
    })
}

/// Reads a `year,gdp` CSV.
pub fn load_series<R: Read>(src: R) -> Result<GdpSeries, DataError> {
    let mut rdr = csv_reader(src);
    check_header(&mut rdr, &["year", "gdp"])?;
    let mut rows = Vec::new();
    let mut lines = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| DataError::Parse {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        rows.push(GdpRow {
            year: field(&rec, 0, "year", line)?,
            gdp: field(&rec, 1, "gdp", line)?,
        });
        lines.push(line);
    }
    GdpSeries::validate(&rows, |i| lines[i])?;
    Ok(GdpSeries { rows })
}

pub fn load_series_path(path: impl AsRef<Path>) -> Result<GdpSeries, DataError> {
    load_series(std::fs::File::open(path)?)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct YearValue {
    pub year: i32,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeltaGSeries {
    /// `(year, ΔG)` with ΔG in 10³ dollars.
    pub rows: Vec<YearValue>,
}

impl DeltaGSeries {
    pub fn values(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.value).collect()
    }

    /// Inverse of [`delta_g`] given the first GDP value.
    pub fn cumulate(&self, first_gdp: f64) -> Vec<f64> {
        let mut out = vec![first_gdp];
        for r in &self.rows {
            let last = *out.last().expect("non-empty");
            out.push(last + 1e3 * r.value);
        }
        out
    }

    pub fn shifted(&self, years: i32) -> Self {
        Self {
            rows: self
                .rows
                .iter()
                .map(|r| YearValue {
                    year: r.year + years,
                    value: r.value,
                })
                .collect(),
        }
    }
}

/// `ΔG(y) = (GDP(y) − GDP(y−1))/1000`.
pub fn delta_g(s: &GdpSeries) -> Result<DeltaGSeries, DataError> {
    if s.len() < 2 {
        return Err(DataError::TooShort { needed: 2, got: s.len() });
    }
    Ok(DeltaGSeries {
        rows: s
            .rows
            .windows(2)
            .map(|w| YearValue {
                year: w[1].year,
                value: (w[1].gdp - w[0].gdp) * 1e-3,
            })
            .collect(),
    })
}

/// `DI(y) = (ΔG(y) + ΔG(y−1) − 2c)/(2b)`, from the second ΔG year on.
pub fn di_reconstruct(d: &DeltaGSeries, lm: &LinearMap) -> Vec<YearValue> {
    d.rows
        .windows(2)
        .map(|w| YearValue {
            year: w[1].year,
            value: lm.di_from_pair(w[1].value, w[0].value),
        })
        .collect()
}

/// Pearson correlation coefficient.
pub fn pearson(a: &[f64], b: &[f64]) -> Result<f64, DataError> {
    if a.len() != b.len() {
        return Err(DataError::LengthMismatch(a.len(), b.len()));
    }
    if a.len() < 3 {
        return Err(DataError::TooShort { needed: 3, got: a.len() });
    }
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return Err(DataError::ZeroVariance);
    }
    Ok((sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0))
}

/// Velocity estimate from annual ΔG samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum VelocityScheme {
    /// `(x(y+1) − x(y−1))/2`.
    #[default]
    Central,
    /// `x(y+1) − x(y)`.
    Forward,
}

/// A parameter set prepared for the index: model plus equilibrium structure.
#[derive(Debug, Clone)]
pub struct IndexCase {
    pub label: String,
    pub oscillator: Oscillator<Model>,
}

impl IndexCase {
    pub fn new(label: impl Into<String>, model: Model) -> Result<Self, PeriodError> {
        Ok(Self {
            label: label.into(),
            oscillator: Oscillator::new(model)?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ImpliedPeriod {
    Years(f64),
    /// Energy on the separatrix or the period exceeded the guard.
    Divergent,
    Absent,
}

impl ImpliedPeriod {
    pub fn years(self) -> Option<f64> {
        match self {
            ImpliedPeriod::Years(t) => Some(t),
            _ => None,
        }
    }

    fn cell(self) -> String {
        match self {
            ImpliedPeriod::Years(t) => fmt_sig(t),
            ImpliedPeriod::Divergent => "inf".into(),
            ImpliedPeriod::Absent => String::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IndexRow {
    pub year: i32,
    pub dg: f64,
    pub di: Option<f64>,
    /// One entry per case.
    pub energy: Vec<Option<f64>>,
    pub period: Vec<ImpliedPeriod>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnergyIndex {
    pub labels: Vec<String>,
    pub rows: Vec<IndexRow>,
    /// Potential minimum per case, the baseline for peak detection.
    pub floors: Vec<f64>,
}

/// Per-year phase state, total energy and implied period for every case.
///
/// The DI column uses the first case's linear map. Years without both
/// neighbours carry no energy.
pub fn energy_index(d: &DeltaGSeries, cases: &[IndexCase], scheme: VelocityScheme) -> Result<EnergyIndex, DataError> {
    if d.rows.len() < 3 {
        return Err(DataError::TooShort {
            needed: 3,
            got: d.rows.len(),
        });
    }
    let x: Vec<f64> = d.values();
    let di_lm = cases.first().map(|c| *c.oscillator.potential().linear_map());
    let rows = (0..x.len())
        .map(|i| {
            let interior = i > 0 && i + 1 < x.len();
            let state = interior.then(|| {
                let v = match scheme {
                    VelocityScheme::Central => 0.5 * (x[i + 1] - x[i - 1]),
                    VelocityScheme::Forward => x[i + 1] - x[i],
                };
                PhaseState::new(x[i], v)
            });
            let mut energy = Vec::with_capacity(cases.len());
            let mut period = Vec::with_capacity(cases.len());
            for c in cases {
                let e = state.map(|s| c.oscillator.potential().total_energy(s));
                energy.push(e);
                period.push(match e {
                    None => ImpliedPeriod::Absent,
                    Some(e) => implied_period(&c.oscillator, e, x[i]),
                });
            }
            IndexRow {
                year: d.rows[i].year,
                dg: x[i],
                di: match (i, di_lm) {
                    (1.., Some(lm)) => Some(lm.di_from_pair(x[i], x[i - 1])),
                    _ => None,
                },
                energy,
                period,
            }
        })
        .collect();
    Ok(EnergyIndex {
        labels: cases.iter().map(|c| c.label.clone()).collect(),
        rows,
        floors: cases.iter().map(|c| c.oscillator.profile().global_min().energy).collect(),
    })
}

/// Period at energy `e` on the orbit through position `x`.
pub fn implied_period(osc: &Oscillator<Model>, e: f64, x: f64) -> ImpliedPeriod {
    match osc.period(e, osc.profile().well_of(x)) {
        Ok(t) => ImpliedPeriod::Years(t),
        Err(err) if err.is_divergence() => ImpliedPeriod::Divergent,
        Err(_) => ImpliedPeriod::Absent,
    }
}

impl EnergyIndex {
    /// `(year, E)` for the years where case `k` has an energy.
    pub fn energy_series(&self, k: usize) -> Vec<(i32, f64)> {
        self.rows.iter().filter_map(|r| r.energy[k].map(|e| (r.year, e))).collect()
    }

    /// Years whose energy is a strict local maximum over a 3-year window and
    /// whose excess above the potential floor exceeds `factor` times the
    /// median excess.
    pub fn peaks(&self, k: usize, factor: f64) -> Vec<i32> {
        let series = self.energy_series(k);
        if series.len() < 3 {
            return Vec::new();
        }
        let floor = self.floors[k];
        let mut excess: Vec<f64> = series.iter().map(|(_, e)| e - floor).collect();
        excess.sort_by(f64::total_cmp);
        let n = excess.len();
        let median = if n % 2 == 1 {
            excess[n / 2]
        } else {
            0.5 * (excess[n / 2 - 1] + excess[n / 2])
        };
        series
            .windows(3)
            .filter(|w| w[0].0 + 1 == w[1].0 && w[1].0 + 1 == w[2].0)
            .filter(|w| w[1].1 > w[0].1 && w[1].1 > w[2].1)
            .filter(|w| w[1].1 - floor > factor * median)
            .map(|w| w[1].0)
            .collect()
    }

    /// Columns `year, dg, di, E_case_<label>…, T_case_<label>…`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("year,dg,di");
        for l in &self.labels {
            out.push_str(&format!(",E_case_{l}"));
        }
        for l in &self.labels {
            out.push_str(&format!(",T_case_{l}"));
        }
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!("{},{},{}", r.year, fmt_sig(r.dg), fmt_opt(r.di)));
            for e in &r.energy {
                out.push(',');
                out.push_str(&fmt_opt(*e));
            }
            for t in &r.period {
                out.push(',');
                out.push_str(&t.cell());
            }
            out.push('\n');
        }
        out
    }
}

/// Paired observations for fitting: `year, dg, di` with dg in 10³ dollars.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PairedSeries {
    pub years: Vec<i32>,
    pub dg: Vec<f64>,
    pub di: Vec<f64>,
}

pub fn load_paired<R: Read>(src: R) -> Result<PairedSeries, DataError> {
    let mut rdr = csv_reader(src);
    check_header(&mut rdr, &["year", "dg", "di"])?;
    let mut out = PairedSeries::default();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| DataError::Parse {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        out.years.push(field(&rec, 0, "year", line)?);
        out.dg.push(field(&rec, 1, "dg", line)?);
        out.di.push(field(&rec, 2, "di", line)?);
    }
    Ok(out)
}
