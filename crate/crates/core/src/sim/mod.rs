//! Deterministic discrete-event simulation of the dumbbell experiment.

mod engine;
pub mod event;
pub mod time;
pub mod topology;

pub use engine::{run, Simulation};
pub use event::EventQueue;
pub use time::SimTime;
pub use topology::{build_dumbbell, LinkRole, LinkSpec, NodeId, Topology};
