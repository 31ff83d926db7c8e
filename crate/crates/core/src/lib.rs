//! Ranking losses for cross-modal retrieval with continuous relevance labels:
//! triplet variants, Kendall-style pairwise losses with sliding-window
//! sampling, retrieval metrics and a small linear-encoder trainer.

pub mod error;
pub mod gradcheck;
pub mod io;
pub mod losses;
pub mod matrix;
pub mod metrics;
pub mod par;
pub mod pseudo_label;
pub mod sampling;
pub mod trainer;

pub use error::{Direction, Error, Result};
pub use losses::{bcls, Hyperparams, LossKind, LossResult};
pub use matrix::{cosine_similarity, l2_normalize_rows, FeatureMatrix, Matrix, RelevanceMatrix, SimilarityMatrix};
pub use sampling::{build_windows, WindowSpec};
