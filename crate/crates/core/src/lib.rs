//! Unitary weighted discrete Hilbert transforms on the line and the circle.
//!
//! Given distinct nodes `γ_n` with positive weights `v_n`, the transform
//!
//! ```text
//! (a_n) ↦ ( Σ_n a_n v_n / (λ_j − γ_n) )_j      ℓ²_v → ℓ²_w
//! ```
//!
//! is unitary exactly when the target nodes `λ_j` form a level set
//! `φ(λ) = α` of the Herglotz potential built from `(γ, v)` and
//! `w_j = (Σ_n v_n / |λ_j − γ_n|²)⁻¹`. This crate constructs those level
//! sets, assembles the transform, certifies unitarity by Gram deviation, and
//! exposes the same objects in their reproducing-kernel form (the space of
//! functions `Σ a_n v_n / (z − γ_n)`) and, on the circle, in their Clark
//! basis form for the inner function `I = (φ − i)/(φ + i)`.
//!
//! Module map:
//!
//! - [`sequences`]: weighted node sets, admissibility, kernel weights.
//! - [`potential`]: the potential `φ` and its derivative for both geometries.
//! - [`levelset`]: roots of `φ = α`, the exceptional value, Herglotz
//!   partial fractions of `1/(α − φ)`.
//! - [`transform`]: the scaled transform matrix and its unitarity report.
//! - [`geometry`]: cross ratios and line/circle localization.
//! - [`rkspace`]: the reproducing-kernel space, sampling and reconstruction.
//! - [`clark`]: inner function, model-space kernels, Clark bases.
//! - [`cli`]: the command-line front end and demo corpus.

pub mod clark;
pub mod cli;
pub mod geometry;
pub mod levelset;
pub mod potential;
pub mod rkspace;
pub mod sequences;
pub mod transform;

mod error;
mod sum;

pub use error::{Error, Result};
pub use num_complex::Complex64;

pub use clark::{ClarkBasis, InnerFunction};
pub use geometry::{Locus, LocusClassification};
pub use levelset::{HerglotzDecomposition, LevelSet, SolverOptions};
pub use potential::{PotentialContext, PotentialVariant};
pub use rkspace::{KernelSpace, KernelVector, SamplingBasis, SpaceElement};
pub use sequences::{Geometry, WeightedNodeSet};
pub use transform::{TransformMatrix, UnitarityReport, Verdict};
