use std::collections::HashSet;
use std::path::PathBuf;

use clap::Args;

use lexent::analysis::{mark_dataset, per_iteration_contexts};
use lexent::datasets::{filter_to_vocab, load_pairs};
use lexent::vecspace::Side;
use lexent::{HFeatureConfig, HFeatureModel, NeighborReport, VectorSpace};

use crate::config::{self, RunConfig, DEFAULT_ITERATIONS, DEFAULT_TOP};
use crate::{CliError, CliResult};

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// JSON config file; flags below override its keys.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    space: Option<PathBuf>,
    /// Pairs to fit the inspected model on (no cross-validation here).
    #[arg(long)]
    data: Option<PathBuf>,
    /// Detector iterations of the fitted model.
    #[arg(long)]
    iterations: Option<usize>,
    /// Regularization strength for both stages.
    #[arg(long)]
    c: Option<f64>,
    /// Neighbors per report.
    #[arg(long)]
    top: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

pub fn analyze(args: AnalyzeArgs) -> CliResult<()> {
    let mut cfg = RunConfig::resolve(
        args.config.as_deref(),
        RunConfig {
            space: args.space,
            data: args.data,
            iterations: args.iterations,
            c: args.c,
            top: args.top,
            seed: args.seed,
            out: args.out,
            ..RunConfig::default()
        },
    )?;
    cfg.command = Some("analyze".to_string());

    let space_dir = cfg.existing_path("space")?.to_path_buf();
    let data_path = cfg.existing_path("data")?.to_path_buf();
    let iterations = cfg.iterations.unwrap_or(DEFAULT_ITERATIONS);
    let c = cfg.c.unwrap_or(1.0);
    let top = cfg.top.unwrap_or(DEFAULT_TOP);
    let out = cfg.out_dir()?.to_path_buf();
    if iterations == 0 {
        return Err(CliError::usage("--iterations must be at least 1"));
    }
    if !(c.is_finite() && c > 0.0) {
        return Err(CliError::usage("--c must be positive and finite"));
    }

    let space = VectorSpace::load(&space_dir)?;
    let pairs = load_pairs(&data_path)?;
    let (kept, dropped) = filter_to_vocab(&pairs, &space);
    if kept.is_empty() {
        return Err(CliError::Runtime(
            "no dataset pairs are covered by the vector space".to_string(),
        ));
    }
    if dropped > 0 {
        log::warn!("dropped {dropped} pairs outside the space vocabulary");
    }

    let model_config = HFeatureConfig {
        n: iterations,
        c_detector: c,
        c_final: c,
        ..HFeatureConfig::default()
    };
    let model = HFeatureModel::fit(&kept, &space, &model_config)?;

    let vocabulary: HashSet<String> = kept
        .iter()
        .flat_map(|p| [p.antecedent.clone(), p.consequent.clone()])
        .collect();
    let mut iteration_reports = per_iteration_contexts(&model, &space, top)?;
    for report in &mut iteration_reports {
        mark_dataset(&mut report.neighbors, &vocabulary);
    }

    config::write_echo(&out, &cfg)?;
    model.save(&out.join("model.json"))?;

    let mut markdown = String::new();
    for it in &iteration_reports {
        let report = NeighborReport {
            title: format!("Iteration {} detector: most similar contexts", it.iteration),
            side: Side::Context,
            entries: it.neighbors.clone(),
        };
        markdown.push_str(&report.to_markdown());
        markdown.push('\n');
        super::write_output(
            &out,
            &format!("contexts-iter-{}.tsv", it.iteration),
            &report.to_tsv(),
        )?;
    }
    super::write_output(&out, "neighbors.md", &markdown)?;

    println!(
        "fitted {} detector iterations on {} pairs (train F1 {:.4})",
        model.detectors.len(),
        kept.len(),
        model.final_train_f1
    );
    for it in &iteration_reports {
        let head = it
            .neighbors
            .first()
            .map(|e| format!("{} ({:.3})", e.token, e.cosine))
            .unwrap_or_else(|| "none".to_string());
        println!("  iteration {}: top context {head}", it.iteration);
    }
    println!("wrote {}", out.display());
    Ok(())
}
