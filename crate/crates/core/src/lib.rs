//! Lehmer activation units.
//!
//! A small, dependency-light neural network library whose activation is the
//! weighted Lehmer transform `Σ wᵢxᵢˢ / Σ wᵢxᵢˢ⁻¹`, in a real variant with a
//! trainable suddency moment `s` and a complex variant with `s = a + ib`
//! followed by a trainable affine read-out.
//!
//! - [`lehmer`]: the transforms and their scalar helpers.
//! - [`grad`]: closed-form derivatives and finite-difference oracles.
//! - [`gradcheck`]: randomized analytic-vs-numeric agreement suite.
//! - [`nn`]: layers, networks and checkpoints.
//! - [`train`]: optimizers, training loop and stratified cross-validation.
//! - [`data`]: tabular CSV and IDX loaders.

pub mod data;
pub mod grad;
pub mod gradcheck;
mod kernel;
pub mod lehmer;
pub mod nn;
pub mod properties;
pub mod tensor;
pub mod train;

pub use lehmer::{
    Complex, ComplexLehmer, LehmerError, PositiveVector, ReLAUParams, SuddencyComplex,
    SuddencyReal, WeightVector,
};
pub use nn::{LauKind, LayerSpec, Mode, Network, NnError};
pub use tensor::{ShapeError, Tensor};
