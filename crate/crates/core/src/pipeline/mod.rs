pub mod config;
pub mod offline;
pub mod online;
pub mod report;
pub mod wkcheck;

pub use config::PipelineConfig;
pub use offline::{build_offline, read_bundle, run_offline, write_bundle, OfflineModel};
pub use online::{evaluate_errors, parse_times, run_online, GpSource, OnlineRun};
pub use report::{write_report, Timings};
