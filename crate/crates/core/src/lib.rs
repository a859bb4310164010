//! Multi-edge scheduling of low-light enhancement for video analytics.
//!
//! - [`camq`]: CAM-based enhancement quality.
//! - [`sysmodel`]: latency, utility and feasibility of a decision.
//! - [`sched`]: genetic scheduler, exhaustive oracle and baselines.
//! - [`sim`]: slot-by-slot pipeline and synthetic workloads.
//! - [`cli`]: configuration, file formats and subcommands.

pub mod camq;
pub mod cli;
pub mod sched;
pub mod sim;
pub mod sysmodel;
