//! Seeded RNG streams, Monte Carlo runs, exact oracles, reports and file formats.

pub mod io;
pub mod mc;
pub mod numparse;
pub mod oracle;
pub mod pipeline;
pub mod report;
pub mod rng;

pub use io::{parse_json, read_json, write_json, GraphJson, InstanceJson, PseudoDistJson, TableJson};
pub use mc::{mc_run, mc_run_multi, McRun, MultiMoments};
pub use oracle::{exact_expectation, exact_weighted, FiniteDist, OracleResult, ORACLE_CAP};
pub use pipeline::{run_pipeline, run_pipeline_file, PipelineConfig, PipelineReport};
pub use report::{all_pass, CheckReport, Verdict};
pub use rng::{stream, Rng};
