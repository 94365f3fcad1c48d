//! Minimum-cost homomorphism problems over conservative constraint
//! languages: a tractability classifier producing re-verifiable
//! polymorphism witnesses, and an exact solver for the tractable case.

pub mod boolean;
pub mod classifier;
pub mod corpus;
pub mod engine;
pub mod io;
pub mod model;
pub mod poly;
pub mod report;
pub mod solver;
