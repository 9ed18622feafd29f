//! Simulation and verification toolkit for randomly ordered Bratteli
//! diagrams.
//!
//! The crate models finite truncations of Bratteli diagrams, samples orders
//! from the uniform product measure, evaluates the successor (Vershik) map,
//! counts surviving maximal-path ancestries through the Wright-Fisher
//! correspondence, runs the evolve-and-split construction, and checks the
//! associated combinatorial bounds with exact brute-force oracles and Monte
//! Carlo statistics.

pub mod census;
pub mod diagram;
pub mod oracle;
pub mod ordering;
pub mod rng;
pub mod stats;
pub mod vershik;
pub mod wrightfisher;

pub use diagram::{BratteliDiagram, DiagramClassification, DiagramError, IncidenceMatrix};
pub use ordering::{AncestryTable, EdgeRef, Order, OrderingError, PathPrefix};
