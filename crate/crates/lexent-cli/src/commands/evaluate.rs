use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use clap::Args;
use serde::Serialize;

use lexent::datasets::load_pairs;
use lexent::eval::{bootstrap_compare, run_cv, CvReport};
use lexent::{ModelKind, VectorSpace};

use crate::config::{self, RunConfig};
use crate::CliResult;

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// JSON config file; flags below override its keys.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Directory produced by build-space.
    #[arg(long)]
    space: Option<PathBuf>,
    /// Labeled pairs TSV: antecedent, consequent, label.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Models to evaluate on one shared fold plan.
    #[arg(long, alias = "model", value_delimiter = ',')]
    models: Vec<String>,
    /// Cross-validation fold count.
    #[arg(long)]
    folds: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Grid of C values.
    #[arg(long = "grid-c", value_delimiter = ',')]
    grid_c: Vec<String>,
    /// Grid of detector iteration counts.
    #[arg(long = "grid-n", value_delimiter = ',')]
    grid_n: Vec<String>,
    /// Grid of RBF gammas; omit to use 1/dim.
    #[arg(long = "grid-gamma", value_delimiter = ',')]
    grid_gamma: Vec<String>,
    /// Tune the final classifier's C separately from the detectors' C.
    #[arg(long)]
    separate_final_c: bool,
    /// Bootstrap resamples for model comparisons.
    #[arg(long)]
    resamples: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Serialize)]
struct ResultsFile<'a> {
    config: &'a RunConfig,
    results: &'a [CvReport],
}

#[derive(Serialize)]
struct Comparison {
    model_a: String,
    model_b: String,
    /// F1 advantage of model_a over model_b on pooled test predictions.
    observed_delta: f64,
    p_value: f64,
    resamples: usize,
}

pub fn evaluate(args: EvaluateArgs) -> CliResult<()> {
    let mut cfg = RunConfig::resolve(
        args.config.as_deref(),
        RunConfig {
            space: args.space,
            data: args.data,
            models: config::split_csv(&args.models),
            folds: args.folds,
            seed: args.seed,
            grid_c: config::parse_list(&args.grid_c, "--grid-c")?,
            grid_n: config::parse_list(&args.grid_n, "--grid-n")?,
            grid_gamma: config::parse_list(&args.grid_gamma, "--grid-gamma")?,
            separate_final_c: args.separate_final_c.then_some(true),
            resamples: args.resamples,
            out: args.out,
            ..RunConfig::default()
        },
    )?;
    cfg.command = Some("evaluate".to_string());

    let space_dir = cfg.existing_path("space")?.to_path_buf();
    let data_path = cfg.existing_path("data")?.to_path_buf();
    let models = cfg.models()?;
    let grid = cfg.grid()?;
    let out = cfg.out_dir()?.to_path_buf();
    let folds = cfg.folds();
    let seed = cfg.seed();
    let resamples = cfg.resamples.unwrap_or(config::DEFAULT_RESAMPLES);

    let space = VectorSpace::load(&space_dir)?;
    let pairs = load_pairs(&data_path)?;
    let dataset = config::dataset_label(&data_path);

    // One seed for every model keeps the fold plan identical, so pooled
    // predictions are pairwise aligned for the bootstrap.
    let mut reports = Vec::with_capacity(models.len());
    for &model in &models {
        log::info!(
            "evaluating {} on {dataset} with {folds} folds",
            model.name()
        );
        reports.push(run_cv(model, &pairs, &space, folds, seed, &grid, None)?);
    }

    config::write_echo(&out, &cfg)?;
    let results_file = ResultsFile {
        config: &cfg,
        results: &reports,
    };
    super::write_output(&out, "results.json", &super::to_json_pretty(&results_file)?)?;
    super::write_output(&out, "summary.csv", &summary_csv(&dataset, &reports))?;
    for report in &reports {
        super::write_output(
            &out,
            &format!("predictions-{}.tsv", report.model.name()),
            &predictions_tsv(report),
        )?;
    }

    if reports.len() >= 2 {
        let comparisons = compare_models(&reports, resamples, seed)?;
        super::write_output(
            &out,
            "bootstrap.json",
            &super::to_json_pretty(&comparisons)?,
        )?;
        for c in &comparisons {
            println!(
                "bootstrap {} vs {}: delta {:+.4}, p = {:.4} ({} resamples)",
                c.model_a, c.model_b, c.observed_delta, c.p_value, c.resamples
            );
        }
    }

    println!("Mean F1 scores for each model and data set");
    for r in &reports {
        println!(
            "  {:<12} {:<16} {:.4}  (pooled {:.4}, {} folds, {} skipped, {} OOV dropped)",
            r.model.name(),
            dataset,
            r.mean_f1,
            r.pooled_f1,
            r.folds.len(),
            r.skipped_folds.len(),
            r.dropped_oov
        );
    }
    println!("wrote {}", out.display());
    Ok(())
}

fn summary_csv(dataset: &str, reports: &[CvReport]) -> String {
    let mut csv = String::from("model,dataset,fold,C,n,f1\n");
    for r in reports {
        for f in &r.folds {
            let n = if r.model == ModelKind::HFeature {
                f.point.n.to_string()
            } else {
                String::new()
            };
            let _ = writeln!(
                csv,
                "{},{},{},{},{},{:.8e}",
                r.model.name(),
                dataset,
                f.fold,
                f.point.c,
                n,
                f.test_f1
            );
        }
    }
    csv
}

fn predictions_tsv(report: &CvReport) -> String {
    let mut tsv = String::from("antecedent\tconsequent\tgold\tpred\tdecision\n");
    for p in report.all_predictions() {
        let _ = writeln!(
            tsv,
            "{}\t{}\t{}\t{}\t{:.8e}",
            p.antecedent, p.consequent, p.gold as u8, p.pred as u8, p.decision
        );
    }
    tsv
}

/// Paired bootstrap for every model pair, better mean F1 first, over pooled
/// test predictions.
fn compare_models(reports: &[CvReport], resamples: usize, seed: u64) -> CliResult<Vec<Comparison>> {
    let mut pooled: HashMap<ModelKind, Vec<lexent::eval::PairPrediction>> = HashMap::new();
    for r in reports {
        pooled.insert(r.model, r.all_predictions());
    }
    config::check_alignment(&pooled)?;

    let mut comparisons = Vec::new();
    for (i, a) in reports.iter().enumerate() {
        for b in &reports[i + 1..] {
            let (first, second) = if a.mean_f1 >= b.mean_f1 {
                (a, b)
            } else {
                (b, a)
            };
            let preds_a = &pooled[&first.model];
            let preds_b = &pooled[&second.model];
            let golds: Vec<bool> = preds_a.iter().map(|p| p.gold).collect();
            let a_flags: Vec<bool> = preds_a.iter().map(|p| p.pred).collect();
            let b_flags: Vec<bool> = preds_b.iter().map(|p| p.pred).collect();
            let outcome = bootstrap_compare(&golds, &a_flags, &b_flags, resamples, seed)?;
            comparisons.push(Comparison {
                model_a: first.model.name().to_string(),
                model_b: second.model.name().to_string(),
                observed_delta: outcome.observed_delta,
                p_value: outcome.p_value,
                resamples: outcome.resamples,
            });
        }
    }
    Ok(comparisons)
}
