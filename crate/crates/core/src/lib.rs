//! swlab: a scaling laboratory for clustered small-world overlays.
//!
//! The library builds two-level overlay networks (a torus of clusters, each
//! cluster a torus of nodes, plus distance-decaying long links), routes
//! queries over them (greedy across clusters, neighbor flooding within), and
//! measures how search time scales with network size under different
//! cluster-sizing policies. A companion analytic module studies the same
//! local/global communication tradeoff in a biological register: how many
//! detection modules of what size minimize a distributed response time under
//! a total-volume budget.
//!
//! Modules:
//!
//! * [`torus`] — discrete torus coordinates, distances, distance census;
//! * [`overlay`] — overlay construction and long-link sampling;
//! * [`routing`] — greedy routing, flooding, failure masks, query batches;
//! * [`policy`] — sizing policies and the analytic total-time model;
//! * [`immune`] — module-architecture scaling laws;
//! * [`fit`] — scaling fits and model comparison;
//! * [`harness`] — sweeps, robustness grids, CSV export;
//! * [`stats`] — chi-square, Welch comparison, bootstrap errors.

pub mod cli;
pub mod error;
pub mod fit;
pub mod harness;
pub mod immune;
pub mod overlay;
pub mod policy;
pub mod routing;
pub mod stats;
pub mod torus;
pub mod util;

pub use error::{Error, Result};
