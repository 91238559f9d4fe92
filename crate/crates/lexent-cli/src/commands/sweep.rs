use std::fmt::Write as _;
use std::path::PathBuf;

use clap::Args;

use lexent::datasets::load_pairs;
use lexent::eval::{iteration_sweep, GridSpec};
use lexent::VectorSpace;

use crate::config::{self, RunConfig};
use crate::CliResult;

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// JSON config file; flags below override its keys.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    space: Option<PathBuf>,
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    folds: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Iteration counts to sweep.
    #[arg(long = "grid-n", value_delimiter = ',')]
    grid_n: Vec<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

pub fn sweep_iterations(args: SweepArgs) -> CliResult<()> {
    let mut cfg = RunConfig::resolve(
        args.config.as_deref(),
        RunConfig {
            space: args.space,
            data: args.data,
            folds: args.folds,
            seed: args.seed,
            grid_n: config::parse_list(&args.grid_n, "--grid-n")?,
            out: args.out,
            ..RunConfig::default()
        },
    )?;
    cfg.command = Some("sweep-iterations".to_string());

    let space_dir = cfg.existing_path("space")?.to_path_buf();
    let data_path = cfg.existing_path("data")?.to_path_buf();
    let ns = cfg.grid_n.clone().unwrap_or(GridSpec::default().ns);
    let out = cfg.out_dir()?.to_path_buf();

    let space = VectorSpace::load(&space_dir)?;
    let pairs = load_pairs(&data_path)?;
    let sweep = iteration_sweep(&pairs, &space, cfg.folds(), cfg.seed(), &ns)?;

    config::write_echo(&out, &cfg)?;
    super::write_output(&out, "sweep.json", &super::to_json_pretty(&sweep)?)?;

    let mut csv = String::from("n,mean_val_f1,mean_test_f1,delta_vs_first\n");
    for (p, delta) in sweep.points.iter().zip(&sweep.deltas_vs_first) {
        let _ = writeln!(
            csv,
            "{},{:.8e},{:.8e},{:.8e}",
            p.n, p.mean_val_f1, p.mean_test_f1, delta
        );
    }
    super::write_output(&out, "sweep.csv", &csv)?;

    println!("Mean validation F1 by iteration count");
    for (p, delta) in sweep.points.iter().zip(&sweep.deltas_vs_first) {
        println!(
            "  n={}  val F1 {:.4}  test F1 {:.4}  delta vs first {:+.4}",
            p.n, p.mean_val_f1, p.mean_test_f1, delta
        );
    }
    println!("best n = {}", sweep.best_n);
    println!("wrote {}", out.display());
    Ok(())
}
