//! Discrete exterior calculus on simplicial complexes of arbitrary dimension
//! with bilinear Hermitian metrics.
//!
//! The crate covers the full pipeline: structured and random mesh
//! generation, signed boundary operators and exterior derivatives,
//! circumcentric duals and diagonal Hodge stars under position-dependent
//! Hermitian metrics, de Rham and sharp operators, and Hermitian
//! eigenproblems for Laplace-Beltrami and Dirac-Kahler operators, with
//! problem presets that reproduce standard drum, cavity and oscillator
//! spectra.

pub mod calculus;
pub mod complex;
pub mod error;
pub mod geometry;
pub mod mesh;
pub mod meshgen;
pub mod metric;
pub mod problems;
pub mod solver;
pub mod sparse;

pub use complex::{Simplex, SimplicialComplex};
pub use error::{DecError, Result};
pub use geometry::{Embedding, GeometryTables};
pub use mesh::{GridStyle, Mesh};
pub use meshgen::BoxDomain;
pub use metric::MetricField;
pub use solver::{eigs_smallest, EigOptions, OperatorStack, Spectrum};
