//! Geometry-aware distances between weighted sets of spectra.
//!
//! A dataset is a pool of compounds (mass spectra plus retention times) and a
//! list of fingerprints, each a weighted set of compounds with weights on the
//! simplex. The pipeline:
//!
//! 1. [`geometry`]: cosine-distance Gaussian affinity, density renormalization,
//!    Markov random walk and its diffusion map.
//! 2. [`codebook`]: K-means in diffusion coordinates; every fingerprint becomes
//!    a histogram over the K code words.
//! 3. [`metrics`]: the generalized diffusion distance
//!    `gdd(f, g) = ||sum_i (f_i - g_i) c_i||`, plus exact EMD and the
//!    linear-kernel MMD it converges to as K approaches m.
//! 4. [`inference`]: kernel logistic regression on GDD, a permutation
//!    two-sample test and per-bin exact median tests with Benjamini-Hochberg.
//! 5. [`embed`]: samples as convex combinations of code words, CSV/SVG export.
//!
//! [`cli`] wires everything into the `fp` binary.

mod artifact;
pub mod cli;
pub mod codebook;
pub mod embed;
mod error;
pub mod geometry;
pub mod ingest;
pub mod inference;
pub mod metrics;
pub mod rng;

pub use error::{Error, Result, Stage};
