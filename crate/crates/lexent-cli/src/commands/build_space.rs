use std::path::PathBuf;

use clap::Args;

use lexent::vecspace::{build_space as build, read_counts_tsv, SvdParams};

use crate::config::{self, RunConfig};
use crate::{CliError, CliResult};

#[derive(Debug, Args)]
pub struct BuildSpaceArgs {
    /// JSON config file; flags below override its keys.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Counts TSV: word, context, count.
    #[arg(long)]
    counts: Option<PathBuf>,
    /// Embedding dimensionality after truncation.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for the space files.
    #[arg(long)]
    out: Option<PathBuf>,
}

pub fn build_space(args: BuildSpaceArgs) -> CliResult<()> {
    let mut cfg = RunConfig::resolve(
        args.config.as_deref(),
        RunConfig {
            counts: args.counts,
            k: args.k,
            seed: args.seed,
            out: args.out,
            ..RunConfig::default()
        },
    )?;
    cfg.command = Some("build-space".to_string());

    let counts_path = cfg
        .counts
        .clone()
        .ok_or_else(|| CliError::usage("missing required --counts"))?;
    let k = cfg
        .k
        .ok_or_else(|| CliError::usage("missing required --k"))?;
    let out = cfg.out_dir()?.to_path_buf();

    // From here on every failure is a runtime error: an unreadable or
    // malformed counts file and an infeasible k both exit with code 1.
    let counts = read_counts_tsv(&counts_path)?;
    let space = build(&counts, k, &SvdParams::with_seed(cfg.seed()))?;
    space.save(&out)?;
    config::write_echo(&out, &cfg)?;

    let meta = space.meta();
    let density = counts.nnz() as f64 / (counts.n_rows() as f64 * counts.n_cols() as f64);
    println!(
        "built space: {} words, {} contexts, k={}, counts density {:.4}, {} dead word rows",
        space.vocab_size(),
        space.context_size(),
        space.k(),
        density,
        meta.dead_words
    );
    println!("wrote {}", out.display());
    Ok(())
}
