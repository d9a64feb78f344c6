//! Maximum-effect subgroup discovery.
//!
//! When the outcome depends on the covariates only through a partition of the
//! covariate space, the subgroup with the largest treatment effect is one of
//! the partition cells. This crate learns such a partition with an ordinary
//! classification or regression tree over the covariates and the treatment,
//! turns its leaves into candidate rules, estimates each rule's effect on
//! held-out rows, and returns the best one.
//!
//! ```
//! use maxeffect::pipeline::{fit, FitConfig};
//! use maxeffect::sim::{simulate, SimSpec};
//!
//! let (data, truth) = simulate(&SimSpec { sim_id: 1, n: 4000, seed: 7 })?;
//! let result = fit(&data, &FitConfig::default(), 7)?;
//! println!("{} (estimated effect {:.2})", result.report.description, result.report.estimate.effect);
//! assert!((result.report.estimate.effect - truth.max_effect).abs() < 0.15);
//! # Ok::<(), maxeffect::Error>(())
//! ```
//!
//! Modules, bottom up: [`tabular`] (data and splits), [`cart`] (trees and
//! pruning), [`subgroup`] (rules and estimates), [`heuristics`] (effect-based
//! split criteria for comparison), [`pipeline`], [`sim`] (benchmarks),
//! [`metrics`], [`sweep`], and [`oracle`] (exact effects on finite models).

pub mod cart;
mod error;
pub mod heuristics;
pub mod metrics;
pub mod oracle;
pub mod pipeline;
pub mod seed;
pub mod sim;
pub mod subgroup;
pub mod sweep;
pub mod tabular;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../README.md")]
    mod readme {}
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/oracle.md")]
    mod oracle {}
    #[doc = include_str!("../../../book/src/trees.md")]
    mod trees {}
    #[doc = include_str!("../../../book/src/honest.md")]
    mod honest {}
    #[doc = include_str!("../../../book/src/heuristics.md")]
    mod heuristics {}
    #[doc = include_str!("../../../book/src/simulations.md")]
    mod simulations {}
    #[doc = include_str!("../../../book/src/statistics.md")]
    mod statistics {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
