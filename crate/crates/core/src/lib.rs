//! # wassmatrix
//!
//! Estimate squared 2-Wasserstein distance matrices from a small number of
//! exactly computed entries, then embed them with classical MDS.
//!
//! Two estimators are provided:
//!
//! | Estimator | Samples | Reconstruction |
//! |-----------|---------|----------------|
//! | [`mc::complete_mc`] | random upper-triangle entries | Gram-factor completion, augmented Lagrangian with Barzilai–Borwein steps |
//! | [`nystrom::complete_nystrom`] | `c` random full columns | `C U† Cᵀ` |
//!
//! Supporting modules compute exact distances ([`ot`]), draw and budget-match
//! sample plans ([`sampling`]), store matrices ([`matrixio`]), embed
//! ([`embedding`]) and score embeddings with 1-NN and LDA ([`classify`]).
//!
//! ```
//! use wassmatrix::measures::SyntheticSpec;
//! use wassmatrix::ot::{w2_matrix, MatrixPlan};
//! use wassmatrix::sampling::sample_columns;
//! use wassmatrix::nystrom::{complete_nystrom, ColumnBlock, NystromOptions};
//! use wassmatrix::matrixio::relative_error;
//!
//! let data = SyntheticSpec::Translations { n: 40 }.generate(1).unwrap();
//! let truth = w2_matrix(&data, MatrixPlan::Full, 2).unwrap();
//! let plan = sample_columns(40, 8, 7).unwrap();
//! let observed = w2_matrix(&data, MatrixPlan::Sampled(&plan), 2).unwrap();
//! let block = ColumnBlock::from_plan(&observed, &plan).unwrap();
//! let estimate = complete_nystrom(&block, &NystromOptions::default()).unwrap();
//! assert!(relative_error(&estimate, &truth).unwrap() < 1e-8);
//! ```

pub mod classify;
pub mod cli;
pub mod embedding;
mod error;
pub mod linalg;
pub mod matrixio;
pub mod mc;
pub mod measures;
pub mod nystrom;
pub mod ot;
pub mod sampling;
pub mod seed;

pub use error::{Error, Result};
