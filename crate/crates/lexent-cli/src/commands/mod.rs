mod ablate;
mod analyze;
mod build_space;
mod evaluate;
mod sweep;
mod synth;

pub use ablate::{ablate, AblateArgs};
pub use analyze::{analyze, AnalyzeArgs};
pub use build_space::{build_space, BuildSpaceArgs};
pub use evaluate::{evaluate, EvaluateArgs};
pub use sweep::{sweep_iterations, SweepArgs};
pub use synth::{synth, SynthArgs};

use std::fs;
use std::path::Path;

use crate::{CliError, CliResult};

/// Write a file under the run's output directory, creating it on demand.
pub(crate) fn write_output(out: &Path, name: &str, body: &str) -> CliResult<()> {
    fs::create_dir_all(out)
        .map_err(|e| CliError::Runtime(format!("create {}: {e}", out.display())))?;
    let path = out.join(name);
    fs::write(&path, body).map_err(|e| CliError::Runtime(format!("write {}: {e}", path.display())))
}

pub(crate) fn to_json_pretty<T: serde::Serialize>(value: &T) -> CliResult<String> {
    serde_json::to_string_pretty(value)
        .map(|s| s + "\n")
        .map_err(|e| CliError::Runtime(format!("encode JSON: {e}")))
}
