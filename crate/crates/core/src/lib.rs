//! Optimal-DI business-cycle model as a one-dimensional conservative
//! oscillator.
//!
//! The growth increment `x = ΔG` (10³ dollars) obeys
//! `x'' = 4·(b·ODI(x) − x + c)` with `ODI(x) = A + B·tanh(C·(x − D))`.
//! The crate provides the model functions ([`model`]), the annual difference
//! map and its regime classifier ([`discrete_map`]), a velocity-Verlet
//! integrator ([`integrator`]), turning-point period quadrature
//! ([`period`]), the GDP energy-index pipeline ([`data`]) and parameter
//! fitting ([`fitting`]).

pub mod data;
pub mod discrete_map;
pub mod fitting;
pub mod integrator;
pub mod model;
pub mod period;
pub mod synthetic;
pub mod table;

pub use model::{Case, DerivedParams, Harmonic, LinearMap, Model, OdiParams, PhaseState, Potential};
pub use period::{Branch, Oscillator, PeriodCurve, PotentialProfile, Shape, Well};
