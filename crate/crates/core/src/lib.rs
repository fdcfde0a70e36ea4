//! Conditional Curie-Weiss model of opinion formation.
//!
//! A population of `N` agents sits on the complete graph. A fraction `s` is
//! pinned to opinion `+1`, a fraction `r` is pinned to `-1`, and the remaining
//! fraction `t = 1 - s - r` is free. This crate computes the limiting specific
//! magnetization, its one-sided limits at the singular field `h = r - s`, the
//! two critical inverse temperatures, and classifies the phase-transition
//! regime. Every limit result can be cross-checked against an exact finite-N
//! sector sum ([`exactn`]) and a Monte Carlo sampler ([`mcsim`]).
//!
//! ```
//! use condcw::{phase, solver};
//!
//! let limits = solver::directional_limits(2.0, 0.2, 0.1).unwrap();
//! assert!(limits.m_minus < 0.0 && limits.m_plus > 0.0);
//! assert!((phase::beta_star(0.2, 0.1).unwrap() - 10.0 / 7.0).abs() < 1e-12);
//! ```

pub mod cli;
pub mod error;
pub mod exactn;
pub mod mcsim;
pub mod model;
pub mod phase;
pub mod solver;

pub use error::{Error, Result};
pub use model::{FiniteModel, ModelParams, SectorMagnetization};
pub use solver::{MagnetizationLimits, MinimizerSet};
