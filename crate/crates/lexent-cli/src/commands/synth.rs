use std::fmt::Write as _;
use std::path::PathBuf;

use clap::Args;

use lexent::datasets::{synth_corpus, write_pairs};

use crate::config::{self, RunConfig};
use crate::CliResult;

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// JSON config file; the corpus recipe lives under its "synth" key.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

pub fn synth(args: SynthArgs) -> CliResult<()> {
    let mut cfg = RunConfig::resolve(
        args.config.as_deref(),
        RunConfig {
            seed: args.seed,
            out: args.out,
            ..RunConfig::default()
        },
    )?;
    cfg.command = Some("synth".to_string());

    let mut synth_config = cfg.synth.clone().unwrap_or_default();
    if let Some(seed) = cfg.seed {
        synth_config.seed = seed;
    }
    cfg.synth = Some(synth_config.clone());
    let out = cfg.out_dir()?.to_path_buf();

    let corpus = synth_corpus(&synth_config)?;

    config::write_echo(&out, &cfg)?;
    let counts = &corpus.counts;
    let rows = counts.row_tokens();
    let cols = counts.col_tokens();
    let mut tsv = String::new();
    for &(r, c, v) in counts.entries() {
        let _ = writeln!(tsv, "{}\t{}\t{:.8e}", rows[r as usize], cols[c as usize], v);
    }
    super::write_output(&out, "counts.tsv", &tsv)?;
    write_pairs(&out.join("pairs.tsv"), &corpus.pairs)?;

    let positives = corpus.pairs.iter().filter(|p| p.label).count();
    println!(
        "synthesized corpus: {} words, {} contexts, {} counts; {} pairs ({} positive)",
        counts.n_rows(),
        counts.n_cols(),
        counts.nnz(),
        corpus.pairs.len(),
        positives
    );
    println!("wrote {}", out.display());
    Ok(())
}
