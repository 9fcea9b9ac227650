//! Synthetic shortcut-learning laboratory.
//!
//! Latent feature pairs `(z_s, z_c)` are sampled with controlled predictivity,
//! embedded into an input space with controlled availability (amplification and
//! nesting), and used to train dense networks whose reliance on the shortcut
//! feature is compared against a Bayes-optimal linear reference. The [`ntk`]
//! module holds the infinite-width kernel account of the same effect.
//!
//! Module map:
//!
//! - [`datagen`]: latent sampling, probe grids, embedding apparatus, dataset export.
//! - [`classifiers`]: least-squares LDA and the analytic latent Bayes rule.
//! - [`mlp`]: dense networks with manual backpropagation and plain SGD.
//! - [`biasmetric`]: shortcut reliance over a probe grid and shortcut bias.
//! - [`ntk`]: kernels, spectra, alignment, jet-based sensitivities, sign maps.
//! - [`harness`]: seeded multi-run cells, sweeps, and CSV artifacts.

pub mod biasmetric;
pub mod classifiers;
pub mod datagen;
pub mod error;
pub mod harness;
pub mod mlp;
pub mod ntk;
mod util;

pub use error::{Error, Result};
pub use util::sign;
