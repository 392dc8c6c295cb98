//! Hierarchy-respecting penalised estimation on a screened variable set.

mod coef;
mod config;
mod design;
mod deviance;
mod gresh;
mod logistic;
mod path;
pub mod scalar;
mod shim;

pub use coef::{check_sh, CoefficientSet, ShCheck, ZERO_SNAP};
pub use config::{Fit, Method, PenaltyConfig};
pub use design::ScreenedDesign;
pub use gresh::{gresh_fit, gresh_lambda_max, gresh_objective, update_interaction, update_main, GreshSolver};
pub use path::{
    gaussian_loglik, kappa_ebic, lambda_grid, lambda_path_gic, lambda_path_gic_with, GicRecord, GicResult, GicVariance, MAX_DF_FRACTION,
    PATH_FLOOR, PATH_LEN,
};
pub use shim::{shim_fit, shim_lambda_max, ShimSolver};
pub use deviance::{binomial_deviance, prediction_deviance, PROB_CLIP};
pub use logistic::{logistic_select, LogisticModel, RIDGE_FALLBACK, WALD_LEVEL};
