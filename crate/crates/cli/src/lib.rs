//! Library side of the `odecg` command-line tool: problem-file loading,
//! bundled presets, and the run pipeline that writes `solution.csv` and a
//! report.

pub mod presets;
pub mod problem;
pub mod runner;

pub use problem::{BuiltProblem, ProblemError, ProblemFile};
pub use runner::{run, CliError, ReportFormat, RunArtifacts, RunFlags, RunReport};
