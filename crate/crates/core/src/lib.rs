//! Maintenance scheduling for an integrated electric / natural gas system,
//! posed as a two-player sequential game between the asset owners whose
//! leaf payoffs come from an ISO dispatch MILP.
//!
//! The pipeline is:
//!
//! 1. [`schedule`] enumerates each owner's feasible maintenance windows.
//! 2. [`dispatch`] turns a joint schedule into the ISO's mixed-integer
//!    dispatch model (DC power flow, unit commitment, piecewise-linear
//!    Weymouth gas flow from [`pwl`]).
//! 3. [`milp`] solves that model to proven optimality.
//! 4. [`game`] assembles the game tree and runs backward induction.

pub mod dispatch;
pub mod game;
pub mod milp;
pub mod network;
pub mod pwl;
pub mod report;
pub mod schedule;

pub use dispatch::{DispatchOptions, DispatchSolution, LowerModel, StorageRevenue};
pub use game::{GameTree, Leader, SpneResult};
pub use milp::{MilpModel, MilpSolution, SolveLimits, SolveStatus};
pub use network::{BigMSet, CaseData, CaseError, Owner};
pub use pwl::PwlSegmentSet;
pub use schedule::{IndicatorMatrix, OwnerSchedule};
