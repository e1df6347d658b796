//! Revenue-maximizing schedules for introducing inconvenience (fees, ads)
//! to a user base that adapts to each increase.
//!
//! The crate is organized around the retention curve `p(x)`, the probability
//! that a user keeps using a service after a single increase of size `x`:
//!
//! - [`retention`]: curve families, ARUM-derived curves, survival `p(x)^(A/x)`,
//!   curvature classification and the tangent point of discontinuous curves.
//! - [`adaptation`]: time-to-adapt clocks, rollout time and average rate.
//! - [`lasting`]: incomplete adaptation, where each step is depressed by the
//!   inconvenience accumulated so far.
//! - [`optimizer`]: discounted revenue of a schedule, optimal step counts and
//!   the one-dimensional sweep over step size.
//! - [`simulator`]: seeded Monte-Carlo cohorts and simulated A/B estimation.
//! - [`cli`]: JSON configuration, command dispatch and result files.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod adaptation;
pub mod cli;
mod error;
pub mod lasting;
pub mod optimizer;
pub mod retention;
pub mod search;
pub mod simulator;

pub use error::{Error, Result};
pub use lasting::{Decay, LastingEffect};
pub use optimizer::{OptimizationResult, RevenueFamily, RevenueModel, Schedule};
pub use retention::{ArumSpec, CurvatureClass, CurvatureKind, CurveFamily, RetentionCurve};
