//! Weighted and probabilistic tree automata over ranked and unranked trees.

pub mod cli;
pub mod consistency;
pub mod enumerate;
pub mod error;
pub mod fixpoint;
mod linalg;
pub mod linear;
pub mod format;
pub mod hedge;
pub mod infer;
pub mod learning;
pub mod sample;
pub mod semiring;
pub mod stepwise;
pub mod train;
pub mod tree;
pub mod wta;

pub use error::{Error, Result};
pub use semiring::SemiringKind;
pub use tree::{parse_tree, Context, ParseMode, RankedAlphabet, Tree};
pub use wta::{Run, StateId, Wta};
