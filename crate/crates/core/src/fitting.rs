//! Parameter estimation from paired `(ΔG, DI)` observations: ordinary least
//! squares for the linear link and multi-start Nelder–Mead for the tanh
//! response.

use rand::rngs::StdRng;
use rand::{RngExt, SeedableRng};
use thiserror::Error;

use crate::model::{LinearMap, ModelError, OdiParams};

pub const DEFAULT_SEED: u64 = 0x5eed_0d1f;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FitError {
    #[error("series lengths differ ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("need at least {needed} points, got {got}")]
    TooFew { needed: usize, got: usize },
    #[error("DI has zero variance; the linear fit is rank deficient")]
    RankDeficient,
    #[error("non-finite value in input")]
    NonFinite,
    #[error("fitted parameters are invalid: {0}")]
    Invalid(#[from] ModelError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult<P> {
    pub params: P,
    /// Root-mean-square residual.
    pub residual: f64,
    pub n_points: usize,
    pub converged: bool,
    /// The data do not constrain the response (flat DI).
    pub degenerate: bool,
    /// Standard errors of `(slope, intercept)`; linear fits only.
    pub std_errors: Option<(f64, f64)>,
}

fn check_pair(dg: &[f64], di: &[f64], needed: usize) -> Result<(), FitError> {
    if dg.len() != di.len() {
        return Err(FitError::LengthMismatch(dg.len(), di.len()));
    }
    if dg.len() < needed {
        return Err(FitError::TooFew { needed, got: dg.len() });
    }
    if dg.iter().chain(di).any(|v| !v.is_finite()) {
        return Err(FitError::NonFinite);
    }
    Ok(())
}

/// Least squares for `ΔG = b·DI + c`.
///
/// With `averaged`, the regressand is `(ΔG(i) + ΔG(i−1))/2` against `DI(i)`
/// for `i ≥ 1`; otherwise `ΔG(i)` against `DI(i)`.
pub fn fit_linear(dg: &[f64], di: &[f64], averaged: bool) -> Result<FitResult<LinearMap>, FitError> {
    check_pair(dg, di, 3)?;
    let (xs, ys): (Vec<f64>, Vec<f64>) = if averaged {
        (1..dg.len()).map(|i| (di[i], 0.5 * (dg[i] + dg[i - 1]))).unzip()
    } else {
        (di.to_vec(), dg.to_vec())
    };
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(FitError::RankDeficient);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - slope * x - intercept).powi(2)).sum();
    let std_errors = (xs.len() > 2).then(|| {
        let s2 = sse / (n - 2.0);
        ((s2 / sxx).sqrt(), (s2 * (1.0 / n + mx * mx / sxx)).sqrt())
    });
    Ok(FitResult {
        params: LinearMap::new(slope, intercept)?,
        residual: (sse / n).sqrt(),
        n_points: xs.len(),
        converged: true,
        degenerate: false,
        std_errors,
    })
}

/// Settings for [`fit_odi`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdiFitOptions {
    pub starts: usize,
    pub max_iter: usize,
    /// Relative jitter applied to the initial point for starts after the first.
    pub jitter: f64,
    pub seed: u64,
}

impl Default for OdiFitOptions {
    fn default() -> Self {
        Self {
            starts: 8,
            max_iter: 2000,
            jitter: 0.2,
            seed: DEFAULT_SEED,
        }
    }
}

/// Data-driven starting point: `A` = mean DI, `B` = half the DI range,
/// `D` = median ΔG, `C` = 1 / interquartile range of ΔG.
pub fn initial_guess(dg: &[f64], di: &[f64]) -> OdiParams {
    let n = di.len().max(1) as f64;
    let mean = di.iter().sum::<f64>() / n;
    let (lo, hi) = di
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| (l.min(*v), h.max(*v)));
    let mut sorted = dg.to_vec();
    sorted.sort_by(f64::total_cmp);
    let q = |p: f64| quantile(&sorted, p);
    let iqr = q(0.75) - q(0.25);
    let half_range = 0.5 * (hi - lo);
    OdiParams {
        offset: mean,
        amplitude: if half_range > 0.0 { half_range } else { 1.0 },
        steepness: if iqr > 0.0 { 1.0 / iqr } else { 1.0 },
        center: q(0.5),
    }
}

fn quantile(sorted: &[f64], p: f64) -> f64 {
    if sorted.is_empty() {
        return 0.0;
    }
    let pos = p * (sorted.len() - 1) as f64;
    let k = pos.floor() as usize;
    let frac = pos - k as f64;
    match sorted.get(k + 1) {
        Some(next) => sorted[k] + frac * (next - sorted[k]),
        None => sorted[k],
    }
}

fn encode(p: &OdiParams) -> [f64; 4] {
    [p.offset, p.amplitude.ln(), p.steepness.ln(), p.center]
}

fn decode(t: &[f64; 4]) -> OdiParams {
    OdiParams {
        offset: t[0],
        amplitude: t[1].exp(),
        steepness: t[2].exp(),
        center: t[3],
    }
}

fn sse(p: &OdiParams, dg: &[f64], di: &[f64]) -> f64 {
    dg.iter().zip(di).map(|(x, y)| (y - p.eval(*x)).powi(2)).sum()
}

/// Minimises `Σ (DI − ODI(ΔG))²` over `(A, ln B, ln C, D)` from `starts`
/// points: the initial guess itself, then jittered copies. The lowest
/// residual wins; ties go to the earlier start.
pub fn fit_odi(dg: &[f64], di: &[f64], init: Option<OdiParams>, opts: OdiFitOptions) -> Result<FitResult<OdiParams>, FitError> {
    check_pair(dg, di, 5)?;
    let init = init.unwrap_or_else(|| initial_guess(dg, di));
    init.validate()?;
    let objective = |t: &[f64; 4]| sse(&decode(t), dg, di);
    let base = encode(&init);
    let dg_scale = {
        let (lo, hi) = dg
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| (l.min(*v), h.max(*v)));
        (hi - lo).max(1e-3)
    };
    let mut rng = StdRng::seed_from_u64(opts.seed);
    let mut best: Option<SimplexResult<4>> = None;
    for k in 0..opts.starts.max(1) {
        let start = if k == 0 {
            base
        } else {
            let mut u = || opts.jitter * (2.0 * rng.random::<f64>() - 1.0);
            [
                base[0] + u() * base[0].abs().max(1.0),
                base[1] + u(),
                base[2] + u(),
                base[3] + u() * base[3].abs().max(dg_scale),
            ]
        };
        let steps = [
            0.05 * start[0].abs().max(1.0),
            0.05,
            0.05,
            0.05 * start[3].abs().max(dg_scale),
        ];
        let r = nelder_mead(objective, start, steps, opts.max_iter);
        if best.as_ref().is_none_or(|b| r.value < b.value) {
            best = Some(r);
        }
    }
    let best = best.expect("at least one start");
    let params = decode(&best.point);
    let n = dg.len();
    let (lo, hi) = dg
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| (l.min(*v), h.max(*v)));
    let swing = (params.eval(hi) - params.eval(lo)).abs();
    let di_flat = di.iter().all(|v| *v == di[0]);
    Ok(FitResult {
        params,
        residual: (best.value / n as f64).sqrt(),
        n_points: n,
        converged: best.converged,
        degenerate: di_flat || swing < 1e-6 * (1.0 + params.offset.abs()),
        std_errors: None,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimplexResult<const N: usize> {
    pub point: [f64; N],
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Best objective value after each iteration.
    pub trace: Vec<f64>,
}

/// Nelder–Mead with standard coefficients (reflection 1, expansion 2,
/// contraction ½, shrink ½). Stops when the simplex has collapsed both in
/// position and in value, or after `max_iter` iterations.
pub fn nelder_mead<const N: usize>(
    f: impl Fn(&[f64; N]) -> f64,
    start: [f64; N],
    steps: [f64; N],
    max_iter: usize,
) -> SimplexResult<N> {
    let eval = |p: &[f64; N]| {
        let v = f(p);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    let mut simplex: Vec<([f64; N], f64)> = Vec::with_capacity(N + 1);
    simplex.push((start, eval(&start)));
    for i in 0..N {
        let mut p = start;
        p[i] += steps[i];
        simplex.push((p, eval(&p)));
    }
    let mut trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    while iterations < max_iter {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let (best, worst) = (simplex[0].1, simplex[N].1);
        let diameter = simplex[1..]
            .iter()
            .map(|(p, _)| p.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
            .fold(0.0, f64::max);
        let scale = 1.0 + simplex[0].0.iter().map(|v| v.abs()).fold(0.0, f64::max);
        if diameter <= 1e-9 * scale && worst - best <= 1e-12 * best.abs() + 1e-24 {
            converged = true;
            break;
        }
        iterations += 1;

        let mut centroid = [0.0; N];
        for (p, _) in &simplex[..N] {
            for (c, v) in centroid.iter_mut().zip(p) {
                *c += v / N as f64;
            }
        }
        let along = |t: f64| {
            let mut p = [0.0; N];
            for i in 0..N {
                p[i] = centroid[i] + t * (simplex[N].0[i] - centroid[i]);
            }
            p
        };
        let refl = along(-1.0);
        let f_refl = eval(&refl);
        if f_refl < simplex[0].1 {
            let exp = along(-2.0);
            let f_exp = eval(&exp);
            simplex[N] = if f_exp < f_refl { (exp, f_exp) } else { (refl, f_refl) };
        } else if f_refl < simplex[N - 1].1 {
            simplex[N] = (refl, f_refl);
        } else {
            let (cand, f_cand) = if f_refl < simplex[N].1 {
                let p = along(-0.5);
                (p, eval(&p))
            } else {
                let p = along(0.5);
                (p, eval(&p))
            };
            if f_cand < simplex[N].1.min(f_refl) {
                simplex[N] = (cand, f_cand);
            } else {
                let best_p = simplex[0].0;
                for (p, v) in simplex.iter_mut().skip(1) {
                    for i in 0..N {
                        p[i] = best_p[i] + 0.5 * (p[i] - best_p[i]);
                    }
                    *v = eval(p);
                }
            }
        }
        let current_best = simplex.iter().map(|(_, v)| *v).fold(f64::INFINITY, f64::min);
        trace.push(current_best);
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    SimplexResult {
        point: simplex[0].0,
        value: simplex[0].1,
        iterations,
        converged,
        trace,
    }
}
