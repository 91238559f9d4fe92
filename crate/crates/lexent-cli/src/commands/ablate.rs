use std::fmt::Write as _;
use std::path::PathBuf;

use clap::Args;

use lexent::datasets::load_pairs;
use lexent::eval::{ablate as run_ablation, GridSpec};
use lexent::VectorSpace;

use crate::config::{self, RunConfig};
use crate::CliResult;

#[derive(Debug, Args)]
pub struct AblateArgs {
    /// JSON config file; flags below override its keys.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    space: Option<PathBuf>,
    #[arg(long)]
    data: Option<PathBuf>,
    /// Masks to sweep, one per occurrence: -similarity, -detectors,
    /// -inclusion, or a comma-joined combination. Default drops each group
    /// in turn.
    #[arg(long = "masks", alias = "mask", allow_hyphen_values = true)]
    masks: Vec<String>,
    #[arg(long)]
    folds: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Iteration counts to sweep under each mask.
    #[arg(long = "grid-n", value_delimiter = ',')]
    grid_n: Vec<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

pub fn ablate(args: AblateArgs) -> CliResult<()> {
    let mut cfg = RunConfig::resolve(
        args.config.as_deref(),
        RunConfig {
            space: args.space,
            data: args.data,
            masks: if args.masks.is_empty() {
                None
            } else {
                Some(args.masks)
            },
            folds: args.folds,
            seed: args.seed,
            grid_n: config::parse_list(&args.grid_n, "--grid-n")?,
            out: args.out,
            ..RunConfig::default()
        },
    )?;
    cfg.command = Some("ablate".to_string());

    let space_dir = cfg.existing_path("space")?.to_path_buf();
    let data_path = cfg.existing_path("data")?.to_path_buf();
    let masks = cfg.masks()?;
    let ns = cfg.grid_n.clone().unwrap_or(GridSpec::default().ns);
    let out = cfg.out_dir()?.to_path_buf();

    let space = VectorSpace::load(&space_dir)?;
    let pairs = load_pairs(&data_path)?;
    let report = run_ablation(&pairs, &space, cfg.folds(), cfg.seed(), &ns, &masks)?;

    config::write_echo(&out, &cfg)?;
    super::write_output(&out, "ablation.json", &super::to_json_pretty(&report)?)?;

    let mut csv = String::from("mask,best_n,best_test_f1,delta_vs_full\n");
    let mut curves = String::from("mask,n,mean_val_f1,mean_test_f1\n");
    for m in &report.masks {
        let _ = writeln!(
            csv,
            "{},{},{:.8e},{:.8e}",
            m.label, m.best_n, m.best_test_f1, m.delta_vs_full
        );
        for p in &m.points {
            let _ = writeln!(
                curves,
                "{},{},{:.8e},{:.8e}",
                m.label, p.n, p.mean_val_f1, p.mean_test_f1
            );
        }
    }
    super::write_output(&out, "ablation.csv", &csv)?;
    super::write_output(&out, "ablation-curves.csv", &curves)?;

    println!("Absolute decrease in mean F1");
    for m in &report.masks {
        println!(
            "  {:<28} best n={}  F1 {:.4}  decrease {:.4}",
            m.label, m.best_n, m.best_test_f1, -m.delta_vs_full
        );
    }
    println!("wrote {}", out.display());
    Ok(())
}
