pub mod cli;
pub mod data;
pub mod error;
pub mod penalize;
pub mod screening;
pub mod simulate;

pub use data::{degenerate_columns, interaction_column, pearson, standardize, Dataset, EffectIndex, Family};
pub use error::{Error, Result};
