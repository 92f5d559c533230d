//! `cyclekit`: command-line front end for the optimal-DI cycle model.
//!
//! Exit status: 0 on success, 1 on invalid input, 2 on a numerical failure.

mod svg;

use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use cyclekit::data::{delta_g, energy_index, load_paired, load_series_path, IndexCase, VelocityScheme, PEAK_FACTOR};
use cyclekit::discrete_map::{DiscreteMap, MapState};
use cyclekit::fitting::{fit_linear, fit_odi, OdiFitOptions, DEFAULT_SEED};
use cyclekit::integrator::{polygon_area, simulate, IntegratorError, MEASURE_DT, PLOT_DT};
use cyclekit::period::{PeriodError, SampleStatus};
use cyclekit::table::fmt_sig;
use cyclekit::{Case, Model, Oscillator, PhaseState, Shape, Well};
use svg::{Guide, Plot, Series};

const UNITS: &str = "Units: positions (ΔG, x) in 10^3 dollars, time in years, energies in 10^6 units \
(so an energy of 1.57e6 is passed as --energy 1.57).";

#[derive(Parser)]
#[command(name = "cyclekit", version, about = "Simulate and analyse the optimal-DI business-cycle oscillator", after_help = UNITS)]
struct Cli {
    /// Directory for every file written; created if missing.
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,
    /// Also write SVG plots next to the CSV files.
    #[arg(long, global = true)]
    svg: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the equation of motion from a state or an energy.
    Simulate(SimulateArgs),
    /// Sample the period–energy relation by turning-point quadrature.
    PeriodCurve(PeriodCurveArgs),
    /// Per-year energy and implied period from a year,gdp CSV.
    EnergyIndex(EnergyIndexArgs),
    /// Iterate the annual difference map and classify its regime.
    Map(MapArgs),
    /// Fit the linear link or the tanh response to a year,dg,di CSV.
    Fit(FitArgs),
    /// Phase-space loops (x, DI) at several energies.
    PhaseSpace(PhaseSpaceArgs),
}

#[derive(Args)]
struct SimulateArgs {
    /// Preset i, ii, iii, or a parameter file.
    #[arg(long, default_value = "i")]
    case: String,
    /// Initial position, or `at-minimum` for the bottom of the (selected) well.
    #[arg(long, conflicts_with = "energy")]
    x0: Option<String>,
    /// Initial velocity, 10^3 dollars per year.
    #[arg(long, default_value_t = 0.0, conflicts_with = "energy")]
    v0: f64,
    /// Start at rest on the upper turning point of this energy (10^6 units).
    #[arg(long, allow_negative_numbers = true)]
    energy: Option<f64>,
    /// Well for double-well energies: left or right.
    #[arg(long)]
    well: Option<Well>,
    /// Simulated time, years.
    #[arg(long, default_value_t = 40.0)]
    t_end: f64,
    #[arg(long, default_value_t = MEASURE_DT)]
    dt: f64,
}

#[derive(Args)]
struct PeriodCurveArgs {
    /// Repeatable; defaults to all three presets.
    #[arg(long)]
    case: Vec<String>,
    #[arg(long, default_value_t = 0.01, allow_negative_numbers = true)]
    e_min: f64,
    #[arg(long, default_value_t = 10.0, allow_negative_numbers = true)]
    e_max: f64,
    #[arg(long, default_value_t = 50)]
    n: usize,
    /// Restrict double-well energies to one well.
    #[arg(long)]
    well: Option<Well>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Scheme {
    Central,
    Forward,
}

#[derive(Args)]
struct EnergyIndexArgs {
    /// CSV with header year,gdp (dollars per capita, constant prices).
    #[arg(long)]
    data: PathBuf,
    /// Repeatable; defaults to all three presets.
    #[arg(long)]
    case: Vec<String>,
    #[arg(long, value_enum, default_value_t = Scheme::Central)]
    scheme: Scheme,
}

#[derive(Args)]
struct MapArgs {
    #[arg(long, default_value = "i")]
    case: String,
    /// Relaxation rate a.
    #[arg(long)]
    a: f64,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    dg0: f64,
    #[arg(long, default_value_t = 0.9, allow_negative_numbers = true)]
    dg_prev0: f64,
    /// Initial DI; defaults to the value consistent with the two growth values.
    #[arg(long, allow_negative_numbers = true)]
    di0: Option<f64>,
    /// Orbit length written to orbit.csv.
    #[arg(long, default_value_t = 200)]
    steps: usize,
    /// Step budget for the regime classifier.
    #[arg(long, default_value_t = 100_000)]
    horizon: usize,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FitMode {
    Linear,
    Odi,
}

#[derive(Args)]
struct FitArgs {
    /// CSV with header year,dg,di (dg in 10^3 dollars).
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_enum)]
    mode: FitMode,
    /// Linear mode: regress (ΔG(i) + ΔG(i−1))/2 on DI(i).
    #[arg(long)]
    averaged: bool,
    /// Starting point and source of the parameters not being fitted.
    #[arg(long, default_value = "i")]
    init: String,
    /// Multi-start count for the tanh fit.
    #[arg(long, default_value_t = 8)]
    starts: usize,
    /// Overrides CYCLEKIT_SEED and the built-in seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct PhaseSpaceArgs {
    #[arg(long, default_value = "i")]
    case: String,
    /// Energies in 10^6 units; repeatable.
    #[arg(long, allow_negative_numbers = true, default_values_t = [0.1, 0.5, 1.0, 1.5])]
    energy: Vec<f64>,
    #[arg(long)]
    well: Option<Well>,
    #[arg(long, default_value_t = PLOT_DT)]
    dt: f64,
}

enum Failure {
    Invalid(anyhow::Error),
    Numerical(anyhow::Error),
}

type Outcome<T> = Result<T, Failure>;

trait Classify<T> {
    fn invalid(self) -> Outcome<T>;
    fn numerical(self) -> Outcome<T>;
}

impl<T, E: Into<anyhow::Error>> Classify<T> for Result<T, E> {
    fn invalid(self) -> Outcome<T> {
        self.map_err(|e| Failure::Invalid(e.into()))
    }
    fn numerical(self) -> Outcome<T> {
        self.map_err(|e| Failure::Numerical(e.into()))
    }
}

/// Energies outside the oscillatory range are the caller's mistake; the rest
/// is numerics.
fn period_failure(e: PeriodError) -> Failure {
    match e {
        PeriodError::NoOscillation { .. } | PeriodError::AmbiguousWell { .. } | PeriodError::BadRange => Failure::Invalid(e.into()),
        _ => Failure::Numerical(e.into()),
    }
}

fn integrator_failure(e: IntegratorError) -> Failure {
    match e {
        IntegratorError::InsufficientOscillations { .. } => Failure::Numerical(e.into()),
        _ => Failure::Invalid(e.into()),
    }
}

struct Out {
    dir: PathBuf,
    svg: bool,
}

impl Out {
    fn write(&self, name: &str, contents: &str) -> Outcome<PathBuf> {
        std::fs::create_dir_all(&self.dir)
            .with_context(|| format!("creating {}", self.dir.display()))
            .invalid()?;
        let path = self.dir.join(name);
        std::fs::write(&path, contents).with_context(|| format!("writing {}", path.display())).invalid()?;
        println!("wrote {}", path.display());
        Ok(path)
    }

    fn plot(&self, name: &str, plot: &Plot) -> Outcome<()> {
        if self.svg {
            self.write(name, &plot.render())?;
        }
        Ok(())
    }
}

/// A preset name or a parameter file path.
fn load_case(spec: &str) -> Outcome<(String, Model)> {
    if let Ok(c) = spec.parse::<Case>() {
        return Ok((c.label().to_string(), c.model()));
    }
    let path = Path::new(spec);
    if !path.is_file() {
        return Err(Failure::Invalid(anyhow!("'{spec}' is neither a preset (i, ii, iii) nor a readable parameter file")));
    }
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {spec}")).invalid()?;
    let model = Model::from_param_text(&text).with_context(|| format!("parameter file {spec}")).invalid()?;
    let label = path.file_stem().map_or_else(|| "custom".to_string(), |s| s.to_string_lossy().into_owned());
    Ok((label, model))
}

fn load_cases(specs: &[String]) -> Outcome<Vec<(String, Model)>> {
    if specs.is_empty() {
        return Ok(Case::ALL.iter().map(|c| (c.label().to_string(), c.model())).collect());
    }
    specs.iter().map(|s| load_case(s)).collect()
}

fn oscillator(model: Model) -> Outcome<Oscillator<Model>> {
    Oscillator::new(model).map_err(period_failure)
}

fn show<E: Display>(r: &Result<f64, E>) -> String {
    match r {
        Ok(t) => format!("{} years", fmt_sig(*t)),
        Err(e) => format!("undefined ({e})"),
    }
}

fn cmd_simulate(out: &Out, a: SimulateArgs) -> Outcome<()> {
    let (label, model) = load_case(&a.case)?;
    let osc = oscillator(model)?;
    let s0 = match (a.energy, a.x0.as_deref()) {
        (Some(e), _) => osc.rest_state(e, a.well).map_err(period_failure)?,
        (None, Some("at-minimum")) => {
            let prof = osc.profile();
            let m = match a.well {
                Some(w) => prof.well_min(w).ok_or_else(|| Failure::Invalid(anyhow!("case {label} has a single well")))?,
                None => prof.global_min(),
            };
            PhaseState::new(m.x, a.v0)
        }
        (None, Some(x)) => {
            let x: f64 = x.parse().map_err(|_| Failure::Invalid(anyhow!("--x0 expects a number or at-minimum, got '{x}'")))?;
            PhaseState::new(x, a.v0)
        }
        (None, None) => return Err(Failure::Invalid(anyhow!("give either --energy or --x0"))),
    };
    let traj = simulate(&model, s0, a.t_end, a.dt).map_err(integrator_failure)?;
    let e = model.total_energy(s0);
    println!("case {label}");
    println!("start x0 = {} (10^3 dollars), v0 = {}", fmt_sig(s0.x), fmt_sig(s0.v));
    println!("energy E = {} (10^6 units)", fmt_sig(e));

    let at_rest = s0.v == 0.0 && model.force(s0.x).abs() < 1e-9;
    if at_rest {
        println!("measured period: undefined (fixed point)");
    } else {
        match traj.period() {
            Ok(t) => println!("measured period: {} years", fmt_sig(t)),
            Err(err) => println!("measured period: undefined ({err})"),
        }
        let well = a.well.or_else(|| {
            let p = osc.profile();
            (p.shape == Shape::Winebottle && p.wells_below_separatrix(e).len() == 2)
                .then(|| p.well_of(s0.x))
                .flatten()
        });
        println!("quadrature period: {}", show(&osc.period(e, well)));
    }
    let (lo, hi) = traj.x_range();
    println!("x range: [{}, {}]", fmt_sig(lo), fmt_sig(hi));
    println!("max relative energy drift: {:.3e}", traj.max_relative_drift());

    let phase = traj.phase(model.linear_map());
    out.write("trajectory.csv", &traj.to_csv())?;
    out.write("phase.csv", &phase.to_csv())?;
    if out.svg {
        let stride = ((PLOT_DT / a.dt).round() as usize).max(1);
        let mut p = Plot::new(&format!("x(t), case {label}, E = {}", fmt_sig(e)), "t (years)", "x (10^3 dollars)");
        p.series.push(Series::line("x(t)", traj.thinned(stride).iter().map(|s| (s.t, s.x)).collect()));
        out.plot("trajectory.svg", &p)?;
        let mut q = Plot::new(&format!("phase space, case {label}"), "x (10^3 dollars)", "DI");
        q.series.push(Series::line(
            format!("E = {}", fmt_sig(e)),
            phase.points.iter().step_by(stride).filter_map(|pt| pt.di.map(|d| (pt.x, d))).collect(),
        ));
        out.plot("phase.svg", &q)?;
    }
    Ok(())
}

fn cmd_period_curve(out: &Out, a: PeriodCurveArgs) -> Outcome<()> {
    let cases = load_cases(&a.case)?;
    let mut plot = Plot::new("period versus energy", "E (10^6 units)", "T (years)");
    plot.guides.push(Guide::Horizontal(std::f64::consts::PI, "π".into()));
    for (label, model) in cases {
        let osc = oscillator(model)?;
        let curve = osc.period_curve(a.e_min, a.e_max, a.n, a.well).map_err(period_failure)?;
        out.write(&format!("period_curve_{label}.csv"), &curve.to_csv())?;
        let ok = curve.samples.iter().filter(|s| s.status == SampleStatus::Ok).count();
        println!(
            "case {label}: {ok}/{} samples with a period, strictly decreasing on every branch: {}",
            curve.samples.len(),
            curve.monotone_decreasing
        );
        if let Some(sep) = curve.separatrix_energy {
            println!("case {label}: separatrix at E = {}, period diverges there", fmt_sig(sep));
            plot.guides.push(Guide::Vertical(sep, format!("separatrix ({label})")));
        }
        for b in curve.branches() {
            plot.series.push(Series::line(format!("case {label} {b}"), curve.branch(b)));
        }
    }
    out.plot("period_curve.svg", &plot)
}

fn cmd_energy_index(out: &Out, a: EnergyIndexArgs) -> Outcome<()> {
    let series = load_series_path(&a.data).with_context(|| a.data.display().to_string()).invalid()?;
    let d = delta_g(&series).invalid()?;
    let cases = load_cases(&a.case)?
        .into_iter()
        .map(|(label, m)| IndexCase::new(label, m).map_err(period_failure))
        .collect::<Outcome<Vec<_>>>()?;
    let scheme = match a.scheme {
        Scheme::Central => VelocityScheme::Central,
        Scheme::Forward => VelocityScheme::Forward,
    };
    let idx = energy_index(&d, &cases, scheme).invalid()?;
    out.write("energy_index.csv", &idx.to_csv())?;
    let mut plot = Plot::new("energy per year", "year", "E (10^6 units)");
    for (k, label) in idx.labels.iter().enumerate() {
        let peaks = idx.peaks(k, PEAK_FACTOR);
        let list: Vec<String> = peaks.iter().map(|y| y.to_string()).collect();
        println!("case {label}: peak years [{}]", list.join(", "));
        let es = idx.energy_series(k);
        plot.series.push(Series::line(format!("case {label}"), es.iter().map(|&(y, e)| (y as f64, e)).collect()));
        let marks = es.iter().filter(|(y, _)| peaks.contains(y)).map(|&(y, e)| (y as f64, e)).collect();
        plot.series.push(Series::markers(format!("peaks {label}"), marks));
    }
    out.plot("energy_index.svg", &plot)
}

fn cmd_map(out: &Out, a: MapArgs) -> Outcome<()> {
    let (label, model) = load_case(&a.case)?;
    let map = DiscreteMap::new(model, a.a).invalid()?;
    let s0 = match a.di0 {
        Some(di) => MapState {
            di,
            dg: a.dg0,
            dg_prev: a.dg_prev0,
        },
        None => MapState::from_growth_pair(&model, a.dg0, a.dg_prev0),
    };
    let orbit = map.orbit(s0, a.steps);
    out.write("orbit.csv", &orbit.to_csv())?;
    let rep = map.classify(s0, a.horizon).invalid()?;
    let mut line = format!("case {label}, a = {}: {} after {} steps", fmt_sig(a.a), rep.regime.label(), rep.steps);
    if let Some(x) = rep.fixed_point {
        line.push_str(&format!(", fixed point ΔG = {}", fmt_sig(x)));
    }
    if let Some(n) = rep.period_steps {
        line.push_str(&format!(", first near-return at step {n}"));
    }
    println!("{line}");
    if out.svg {
        let mut p = Plot::new(&format!("difference map, case {label}, a = {}", fmt_sig(a.a)), "step", "ΔG (10^3 dollars)");
        p.series.push(Series::line("ΔG", orbit.states.iter().enumerate().map(|(i, s)| (i as f64, s.dg)).collect()));
        out.plot("orbit.svg", &p)?;
    }
    Ok(())
}

fn resolve_seed(flag: Option<u64>) -> Outcome<u64> {
    if let Some(s) = flag {
        return Ok(s);
    }
    match std::env::var("CYCLEKIT_SEED") {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| Failure::Invalid(anyhow!("CYCLEKIT_SEED must be an unsigned integer, got '{v}'"))),
        Err(_) => Ok(DEFAULT_SEED),
    }
}

fn cmd_fit(out: &Out, a: FitArgs) -> Outcome<()> {
    let file = std::fs::File::open(&a.data).with_context(|| a.data.display().to_string()).invalid()?;
    let data = load_paired(file).with_context(|| a.data.display().to_string()).invalid()?;
    let (_, init) = load_case(&a.init)?;
    let model = match a.mode {
        FitMode::Linear => {
            let fit = fit_linear(&data.dg, &data.di, a.averaged).invalid()?;
            println!("b = {}, c = {} (10^3 dollars)", fmt_sig(fit.params.slope), fmt_sig(fit.params.intercept));
            if let Some((sb, sc)) = fit.std_errors {
                println!("standard errors: b {}, c {}", fmt_sig(sb), fmt_sig(sc));
            }
            println!("rms residual {} over {} points", fmt_sig(fit.residual), fit.n_points);
            Model::new(*init.odi_params(), fit.params).invalid()?
        }
        FitMode::Odi => {
            let opts = OdiFitOptions {
                starts: a.starts,
                seed: resolve_seed(a.seed)?,
                ..OdiFitOptions::default()
            };
            let fit = fit_odi(&data.dg, &data.di, Some(*init.odi_params()), opts).invalid()?;
            let p = fit.params;
            println!(
                "A = {}, B = {}, C = {}, D = {}",
                fmt_sig(p.offset),
                fmt_sig(p.amplitude),
                fmt_sig(p.steepness),
                fmt_sig(p.center)
            );
            println!("rms residual {} over {} points, seed {}", fmt_sig(fit.residual), fit.n_points, opts.seed);
            if !fit.converged {
                println!("warning: simplex did not meet its tolerance within {} iterations", opts.max_iter);
            }
            if fit.degenerate {
                println!("warning: degenerate fit, the data do not constrain the response");
            }
            Model::new(p, *init.linear_map()).numerical()?
        }
    };
    out.write("params.txt", &model.to_param_text())?;
    Ok(())
}

fn cmd_phase_space(out: &Out, a: PhaseSpaceArgs) -> Outcome<()> {
    let (label, model) = load_case(&a.case)?;
    let osc = oscillator(model)?;
    let mut plot = Plot::new(&format!("phase space, case {label}"), "x (10^3 dollars)", "DI");
    for (k, &e) in a.energy.iter().enumerate() {
        let t = osc.period(e, a.well).map_err(period_failure)?;
        let s0 = osc.rest_state(e, a.well).map_err(period_failure)?;
        let traj = simulate(&model, s0, 1.0 + t + a.dt, a.dt).map_err(integrator_failure)?;
        let phase = traj.phase(model.linear_map());
        let loop_pts = phase.loop_points(1.0, t);
        out.write(&format!("phase_{}.csv", k + 1), &phase.to_csv())?;
        println!("E = {}: period {} years, loop area {}", fmt_sig(e), fmt_sig(t), fmt_sig(polygon_area(&loop_pts)));
        plot.series.push(Series::line(format!("E = {}", fmt_sig(e)), loop_pts));
    }
    out.plot("phase_space.svg", &plot)
}

fn run(cli: Cli) -> Outcome<()> {
    let out = Out {
        dir: cli.out_dir,
        svg: cli.svg,
    };
    match cli.command {
        Command::Simulate(a) => cmd_simulate(&out, a),
        Command::PeriodCurve(a) => cmd_period_curve(&out, a),
        Command::EnergyIndex(a) => cmd_energy_index(&out, a),
        Command::Map(a) => cmd_map(&out, a),
        Command::Fit(a) => cmd_fit(&out, a),
        Command::PhaseSpace(a) => cmd_phase_space(&out, a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Invalid(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Numerical(e)) => {
            eprintln!("numerical failure: {e:#}");
            ExitCode::from(2)
        }
    }
}
