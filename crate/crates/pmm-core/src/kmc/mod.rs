//! Continuous-time simulation of the particle system in macroscopic time.
//!
//! Rates already include the diffusive factor `n^2`, so clocks run in
//! macroscopic units. Selection is Gillespie's direct method on a sum tree.

pub mod ensemble;
pub mod events;
pub mod observables;
pub mod sim;
mod tree;

pub use ensemble::{run_ensemble, run_one, Binning, EnsembleStats};
pub use events::{apply, build_event_table, step, Event, EventTable};
pub use observables::{box_average, empirical_pairing, Direction};
pub use sim::{sample_initial, simulate, Seed, Simulator, Trajectory};
