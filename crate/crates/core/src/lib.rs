//! Differentially private learning dynamics for polymatrix games.
//!
//! Players sit on a graph and repeatedly broadcast Gaussian-noised strategies
//! to their neighbors, then take a regularized projected-gradient step. The
//! crate simulates those dynamics, measures how close the time-averaged play
//! is to a coarse correlated equilibrium, and audits the Rényi-DP leakage of
//! one edge's utilities.

pub mod dynamics;
pub mod error;
pub mod experiment;
pub mod game;
pub mod graph_gen;
pub mod oracle;
pub mod privacy;
pub mod rng;
pub mod simplex;
pub mod verify;

pub use error::{Error, Result};
pub use game::{PolymatrixGame, StrategyProfile, UtilityMatrix};
pub use simplex::SimplexVector;
