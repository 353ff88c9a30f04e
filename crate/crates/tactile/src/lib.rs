//! Tactile where/what perception pipeline.
//!
//! Synthetic tap datasets over a (location, identity) class grid are
//! preprocessed, reduced by a two-stage PCA into a low-dimensional manifold,
//! classified by nearest-neighbour and histogram-likelihood models, and
//! analysed for per-location sensitivity and the resulting fixation point.

pub mod classify;
pub mod data;
pub mod error;
pub mod eval;
pub mod io;
pub mod linalg;
pub mod pca;
pub mod sensitivity;
pub mod svg;
pub mod synth;
