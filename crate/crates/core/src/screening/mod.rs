//! Variable screening by aggregated correlation.
//!
//! A variable's score is the largest absolute correlation between the
//! response and any of its candidate effects: its main effect and its
//! products with every other variable. Ranking variables (rather than
//! effects) keeps both parents of a strong interaction.

mod acor;
mod binary;
pub(crate) mod kernel;
mod lrt;
mod pairs;

pub use acor::{
    acor, acor_all, binary_acor, binary_acor_all, screen_scores, shrunk_variable_set, AcorScores,
    ScreenSize, ShrunkSet,
};
pub use binary::{binary_cor, binary_cor_scale};
pub use lrt::{aggregated_lrt, LrtScores};
pub use pairs::{all_pairs_sis, EffectSet};

#[cfg(test)]
pub(crate) use lrt::fit_single_logistic;
