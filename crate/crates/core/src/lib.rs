//! Speed planning through an occluded pedestrian crosswalk.
//!
//! The crate couples a single-track vehicle simulator ([`dynamics`]), a
//! ray-cast occupancy grid ([`world`]), a discrete crosswalk POMDP
//! ([`pomdp`]) solved with QMDP ([`qmdp`]), a Bayes-filter policy executor
//! with oracle and baseline comparators ([`belief`]), and a closed-loop
//! scenario runner ([`harness`]).

pub mod belief;
pub mod dynamics;
pub mod harness;
pub mod model;
pub mod path;
pub mod pomdp;
pub mod qmdp;
pub mod world;

pub use belief::{Belief, PolicyKind};
pub use dynamics::{VehicleParams, VehicleState};
pub use model::DiscretePomdp;
pub use qmdp::AlphaVectorPolicy;
pub use world::{OccupancyGrid, Scene};
