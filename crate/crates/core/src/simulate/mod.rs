//! Monte-Carlo harness: AR(1) designs, the three hierarchy cases, and
//! coverage / selection / hierarchy metrics.

mod config;
mod generate;
mod metrics;
mod scenario;

pub use config::SimConfig;
pub use generate::{gen_design, gen_response, gen_response_noiseless, Case, TruthSpec, SIGNAL};
pub use metrics::{aggregate, coverage_table, hierarchy_table, selection_table, ScenarioMetrics};
pub use scenario::{
    run_replicate, run_replication, run_scenario, selection_metrics, MethodRun, RepRecord, Scenario, SimMethod,
};
