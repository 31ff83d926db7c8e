use std::io;

use thiserror::Error;

/// Which retrieval direction an anchor belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// Image anchor, text candidates (rows of the similarity matrix).
    ImageToText,
    /// Text anchor, image candidates (columns of the similarity matrix).
    TextToImage,
}

impl std::fmt::Display for Direction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Direction::ImageToText => f.write_str("i2t"),
            Direction::TextToImage => f.write_str("t2i"),
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix shape {rows}x{cols} does not match data length {len}")]
    BadShape { rows: usize, cols: usize, len: usize },
    #[error("matrix must have at least one row and one column")]
    Empty,
    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("row {0} has zero norm")]
    ZeroRow(usize),
    #[error("dimension mismatch: {left} vs {right}")]
    DimMismatch { left: usize, right: usize },
    #[error("matrix is {rows}x{cols}, expected square")]
    NotSquare { rows: usize, cols: usize },
    #[error("relevance diagonal entry {0} is not 1")]
    BadDiagonal(usize),
    #[error("relevance entry ({row}, {col}) = {value} outside [-1, 1]")]
    OutOfRange { row: usize, col: usize, value: f64 },
    #[error("caption groups: {0}")]
    BadGroups(String),
    #[error("pairing covers {got} captions, expected {expected}")]
    BadPairing { got: usize, expected: usize },
    #[error("no caption group has two or more members")]
    NoPairs,
    #[error("invalid window parameters alpha={alpha}, beta={beta}: need 0 < beta <= alpha < 2")]
    BadParams { alpha: f64, beta: f64 },
    #[error("similarity is {s}x{s}, relevance is {r}x{r}; need equal sizes with B >= 2")]
    SizeMismatch { s: usize, r: usize },
    #[error("anchor {anchor} ({direction}) has no candidate with relevance < 1")]
    NoNegatives { anchor: usize, direction: Direction },
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("need at least two observations")]
    TooShort,
    #[error("query {0} has an empty relevant set")]
    EmptyRelevantSet(usize),
    #[error("zero variance input")]
    ZeroVariance,
    #[error("invalid dimensions: {0}")]
    BadDims(String),
    #[error("invalid configuration: {0}")]
    BadConfig(String),
    #[error("malformed matrix file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
