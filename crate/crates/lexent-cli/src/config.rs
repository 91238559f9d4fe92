//! Effective run configuration: a JSON file whose keys any flag overrides.
//!
//! Commands resolve their settings in three layers: built-in defaults, then
//! the `--config` file, then explicit flags. The winning values are echoed
//! to `<out>/config.echo.json` together with the command name, which makes
//! that file a complete recipe for reproducing the run.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use lexent::datasets::SynthConfig;
use lexent::eval::GridSpec;
use lexent::{AblationMask, ModelKind};

use crate::{CliError, CliResult};

pub const DEFAULT_FOLDS: usize = 20;
pub const DEFAULT_SEED: u64 = 0;
pub const DEFAULT_RESAMPLES: usize = 10_000;
pub const DEFAULT_TOP: usize = 10;
pub const DEFAULT_ITERATIONS: usize = 4;

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Subcommand that produced this file; informational in echoes.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub command: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub counts: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub space: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub data: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub models: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub folds: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid_c: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid_n: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid_gamma: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub separate_final_c: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub masks: Option<Vec<String>>,
    /// Iteration count for `analyze`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub iterations: Option<usize>,
    /// Regularization strength for `analyze`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub top: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub resamples: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub synth: Option<SynthConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

impl RunConfig {
    pub fn load(path: &Path) -> CliResult<RunConfig> {
        let raw = fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("config {}: {e}", path.display())))?;
        serde_json::from_str(&raw)
            .map_err(|e| CliError::usage(format!("config {}: {e}", path.display())))
    }

    /// Start from an optional config file and let `overrides` win per field.
    pub fn resolve(config_path: Option<&Path>, overrides: RunConfig) -> CliResult<RunConfig> {
        let base = match config_path {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        Ok(base.merged(overrides))
    }

    fn merged(self, over: RunConfig) -> RunConfig {
        RunConfig {
            command: over.command.or(self.command),
            counts: over.counts.or(self.counts),
            k: over.k.or(self.k),
            space: over.space.or(self.space),
            data: over.data.or(self.data),
            models: over.models.or(self.models),
            folds: over.folds.or(self.folds),
            seed: over.seed.or(self.seed),
            grid_c: over.grid_c.or(self.grid_c),
            grid_n: over.grid_n.or(self.grid_n),
            grid_gamma: over.grid_gamma.or(self.grid_gamma),
            separate_final_c: over.separate_final_c.or(self.separate_final_c),
            masks: over.masks.or(self.masks),
            iterations: over.iterations.or(self.iterations),
            c: over.c.or(self.c),
            top: over.top.or(self.top),
            resamples: over.resamples.or(self.resamples),
            synth: over.synth.or(self.synth),
            out: over.out.or(self.out),
        }
    }

    pub fn folds(&self) -> usize {
        self.folds.unwrap_or(DEFAULT_FOLDS)
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(DEFAULT_SEED)
    }

    pub fn grid(&self) -> CliResult<GridSpec> {
        let defaults = GridSpec::default();
        let grid = GridSpec {
            cs: self.grid_c.clone().unwrap_or(defaults.cs),
            ns: self.grid_n.clone().unwrap_or(defaults.ns),
            gammas: match &self.grid_gamma {
                Some(gs) => gs.iter().map(|&g| Some(g)).collect(),
                None => defaults.gammas,
            },
            separate_final_c: self.separate_final_c.unwrap_or(defaults.separate_final_c),
        };
        grid.validate()
            .map_err(|e| CliError::usage(e.to_string()))?;
        Ok(grid)
    }

    pub fn models(&self) -> CliResult<Vec<ModelKind>> {
        let names = self.models.as_ref().ok_or_else(|| {
            CliError::usage("no models selected; pass --models or set \"models\"")
        })?;
        if names.is_empty() {
            return Err(CliError::usage("the model list is empty"));
        }
        let mut kinds = Vec::with_capacity(names.len());
        for name in names {
            let kind: ModelKind = name
                .parse()
                .map_err(|e: lexent::Error| CliError::usage(e.to_string()))?;
            if !kinds.contains(&kind) {
                kinds.push(kind);
            }
        }
        Ok(kinds)
    }

    /// Ablation masks; `None` falls back to dropping each feature group in
    /// turn, while an explicitly empty list is a configuration error.
    pub fn masks(&self) -> CliResult<Vec<AblationMask>> {
        match &self.masks {
            None => Ok(vec![
                AblationMask {
                    drop_similarity: true,
                    ..AblationMask::none()
                },
                AblationMask {
                    drop_detectors: true,
                    ..AblationMask::none()
                },
                AblationMask {
                    drop_inclusion: true,
                    ..AblationMask::none()
                },
            ]),
            Some(labels) if labels.is_empty() => Err(CliError::usage(
                "the mask list is empty; omit it for the default sweep",
            )),
            Some(labels) => labels.iter().map(|l| parse_mask(l)).collect(),
        }
    }

    /// Input path that must already exist; anything else is a config error.
    pub fn existing_path(&self, field: &str) -> CliResult<&Path> {
        let opt = match field {
            "space" => &self.space,
            "data" => &self.data,
            _ => unreachable!("unknown path field {field}"),
        };
        let path = opt
            .as_deref()
            .ok_or_else(|| CliError::usage(format!("missing required --{field}")))?;
        if !path.exists() {
            return Err(CliError::usage(format!(
                "--{field} {} does not exist",
                path.display()
            )));
        }
        Ok(path)
    }

    pub fn out_dir(&self) -> CliResult<&Path> {
        self.out
            .as_deref()
            .ok_or_else(|| CliError::usage("missing required --out directory"))
    }
}

/// Parse a mask label as produced by [`AblationMask::label`]: `full`, or a
/// `,`-joined list of `-similarity`, `-detectors`, `-inclusion`.
pub fn parse_mask(label: &str) -> CliResult<AblationMask> {
    if label == "full" {
        return Ok(AblationMask::none());
    }
    let mut mask = AblationMask::none();
    for part in label.split(',') {
        match part.trim() {
            "-similarity" => mask.drop_similarity = true,
            "-detectors" => mask.drop_detectors = true,
            "-inclusion" => mask.drop_inclusion = true,
            other => {
                return Err(CliError::usage(format!(
                    "unknown mask {other:?}; expected full, -similarity, -detectors, -inclusion"
                )))
            }
        }
    }
    mask.validate()
        .map_err(|e| CliError::usage(e.to_string()))?;
    Ok(mask)
}

/// Write the settled configuration next to the run's outputs.
pub fn write_echo(out: &Path, config: &RunConfig) -> CliResult<()> {
    fs::create_dir_all(out)
        .map_err(|e| CliError::Runtime(format!("create {}: {e}", out.display())))?;
    let path = out.join("config.echo.json");
    let body = serde_json::to_string_pretty(config)
        .map_err(|e| CliError::Runtime(format!("encode config echo: {e}")))?;
    fs::write(&path, body + "\n")
        .map_err(|e| CliError::Runtime(format!("write {}: {e}", path.display())))?;
    Ok(())
}

/// Dataset label used in reports: the file stem of the pairs path.
pub fn dataset_label(data: &Path) -> String {
    data.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| data.display().to_string())
}

/// Comma-separated values from repeated or delimited flags, kept as strings
/// so parse failures surface as usage errors with the offending token.
pub fn split_csv(values: &[String]) -> Option<Vec<String>> {
    if values.is_empty() {
        return None;
    }
    Some(
        values
            .iter()
            .flat_map(|v| v.split(','))
            .map(|v| v.trim().to_string())
            .filter(|v| !v.is_empty())
            .collect(),
    )
}

pub fn parse_list<T: std::str::FromStr>(
    values: &[String],
    what: &str,
) -> CliResult<Option<Vec<T>>> {
    let Some(parts) = split_csv(values) else {
        return Ok(None);
    };
    let mut out = Vec::with_capacity(parts.len());
    for p in &parts {
        out.push(
            p.parse::<T>()
                .map_err(|_| CliError::usage(format!("invalid {what} value {p:?}")))?,
        );
    }
    Ok(Some(out))
}

/// Sanity-check that aligned prediction lists cover the same pairs, which
/// the shared fold plan guarantees unless models were run on different data.
pub fn check_alignment(
    predictions: &HashMap<ModelKind, Vec<lexent::eval::PairPrediction>>,
) -> CliResult<()> {
    let mut iter = predictions.values();
    let Some(first) = iter.next() else {
        return Ok(());
    };
    for other in iter {
        if other.len() != first.len()
            || other
                .iter()
                .zip(first)
                .any(|(a, b)| a.antecedent != b.antecedent || a.consequent != b.consequent)
        {
            return Err(CliError::Runtime(
                "model prediction lists are misaligned; this is a bug".to_string(),
            ));
        }
    }
    Ok(())
}
