//! Generalized separable nonnegative matrix factorization.
//!
//! A nonnegative `m × n` matrix is `(r₁, r₂)`-separable when it can be written
//! as `M = M(:,K₁)P₁ + P₂M(K₂,:)` with `|K₁| = r₁` selected columns,
//! `|K₂| = r₂` selected rows and nonnegative weights. This crate finds such
//! column/row subsets with two algorithms:
//!
//! - [`spa::gspa`], a greedy successive-projection heuristic running in
//!   `O(mnr)`;
//! - [`fgm::gsfgm_solve`], an accelerated projected gradient method for a
//!   convex self-expressive model `M ≈ MX + YM` whose diagonals of `X` and
//!   `Y` reveal the important columns and rows.
//!
//! Around them sit the baselines (SPA variants and an A-HALS NMF), weight
//! fitting and quality metrics ([`decomposition`]), synthetic instance
//! generators ([`datagen`]) and a seeded benchmark sweep ([`bench`]).
//!
//! ```
//! use gsnmf::{datagen, decomposition, matrix, spa};
//!
//! let (m, _) = datagen::example1_matrix(0.001);
//! let scaled = matrix::sinkhorn_scale(&m, 5.0, 5.0, 1e-12, 10_000).unwrap().scaled;
//! let (sets, _) = spa::gspa(scaled.view(), 4).unwrap();
//! let fit = decomposition::fit_weights_default(&m, &sets).unwrap();
//! assert!(fit.relative_error < 1e-3);
//! ```

pub mod assignment;
pub mod bench;
pub mod datagen;
pub mod decomposition;
pub mod error;
pub mod fgm;
pub mod io;
pub mod matrix;
pub mod nmf;
pub mod nnls;
pub mod spa;

pub use decomposition::{GroundTruth, GsDecomposition, IndexSets};
pub use error::{GsError, Result};
pub use matrix::{DenseMatrix, Permutation};
