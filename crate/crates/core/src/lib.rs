//! Monte Carlo laboratory for asymmetric simple exclusion processes.
//!
//! The crate simulates three variants of ASEP on a finite window of the
//! integer lattice, all driven by the same colored swap rule:
//!
//! * single-species ASEP (every particle has color 1),
//! * two-species ASEP (first class = 2, second class = 1),
//! * multi-species (colored) ASEP with one distinct color per particle.
//!
//! On top of the dynamics it provides the coupling between colored and
//! two-species trajectories ([`coupling`]), theoretical speed laws and
//! goodness-of-fit tools ([`stats`]), a reproducible parallel experiment
//! harness ([`harness`]) and a command line front end ([`cli`]).
//!
//! Every trial draws its randomness from an [`RngStream`] keyed by
//! `(master_seed, trial_index)`, so results never depend on how trials are
//! scheduled across threads.

pub mod cli;
pub mod coupling;
pub mod dynamics;
mod error;
pub mod harness;
pub mod lattice;
pub mod rng;
pub mod stats;

pub use coupling::{CoupledState, CouplingStatus, Label, LabelKind};
pub use dynamics::{swap_permitted, Direction, Event, EventTrace, Mode, Outcome, RunStats, SimState};
pub use error::{Error, Result};
pub use lattice::{
    init_asep_step, init_colored_step, init_single_second_class, init_two_species, make_window,
    Color, Configuration, ModelParams, OriginRule, Window,
};
pub use rng::RngStream;
pub use stats::{EmpiricalCdf, SpeedLaw};
