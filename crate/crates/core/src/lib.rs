//! Bitext mapping by pattern recognition over a grid of matched tokens.
//!
//! Two texts span a rectangle whose axes are their character offsets. Tokens
//! that look like translations of each other become points in that space, and
//! short, straight, diagonal chains of such points trace the true
//! correspondence. [`map_bitext`] walks the space from the origin to the far
//! corner and returns a monotonic [`BitextMap`].

pub mod axes;
pub mod config;
pub mod error;
pub mod evaluation;
pub mod geometry;
pub mod matching;
pub mod optimizer;
pub mod recognizer;
pub mod search;
pub mod synthgen;

pub use axes::{
    tokenize_cognate_mode, tokenize_lexicon_mode, AxisMap, AxisToken, TokenKind, TokenRules,
};
pub use config::KeyValues;
pub use error::{read_to_string, Result, SimrError};
pub use evaluation::{
    evaluate, load_gold, rms_perpendicular_error, ErrorDirection, ErrorReport, GoldTBM,
    HistogramBin,
};
pub use geometry::{least_squares_fit, BitextSpace, LineFit, Point, Rect};
pub use matching::{CandidatePoint, Predicate, PredicateConfig, TranslationLexicon};
pub use optimizer::{anneal, AnnealConfig, AnnealResult, Objective, ParamBounds, TrainingBitext};
pub use recognizer::{Chain, SimrParams};
pub use search::{map_bitext, run_search, BitextMap, SearchConfig};
pub use synthgen::{generate, random_text, DistortionSpec, SyntheticBitext};
