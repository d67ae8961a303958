//! Multiround distributed joins over generalized hypertree decompositions.
//!
//! * [`relation`] and [`query`]: relations, conjunctive queries, stored data
//!   and a brute-force join oracle.
//! * [`ghd`]: decompositions, validation, statistics and completion.
//! * [`transform`]: depth-reducing rewrites of decompositions.
//! * [`bsp`]: a tuple-counting MapReduce simulator.
//! * [`engine`]: Yannakakis-style engines running on top of the simulator.

pub mod bsp;
pub mod engine;
pub mod fixtures;
pub mod ghd;
pub mod query;
pub mod relation;
pub mod transform;
