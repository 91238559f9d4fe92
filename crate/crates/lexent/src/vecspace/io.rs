//! On-disk formats for counts and built spaces.
//!
//! Counts arrive as a three-column TSV (`word<TAB>context<TAB>count`). A
//! built space is a directory holding `meta.json`, `words.tsv`,
//! `contexts.tsv`, and `sigma.tsv`; embedding rows are written as the token
//! followed by its coordinates in `{:.8e}` form, which keeps files diffable
//! while round-tripping through text with ~1e-8 fidelity.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::vecspace::{CountMatrix, VectorSpace};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpaceMeta {
    pub k: usize,
    pub vocab_size: usize,
    pub context_size: usize,
    pub seed: u64,
    pub oversample: usize,
    pub power_iters: usize,
    pub dense_threshold: usize,
    pub words_normalized: bool,
    pub contexts_normalized: bool,
    /// Tokens whose embedding collapsed to the zero vector during the build.
    pub dead_words: usize,
}

pub fn read_counts_tsv(path: &Path) -> Result<CountMatrix> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = BufReader::new(file);
    let mut builder = CountMatrix::builder();
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let lineno = idx + 1;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line.split('\t');
        let (word, context, raw) = match (fields.next(), fields.next(), fields.next()) {
            (Some(w), Some(c), Some(r)) if fields.next().is_none() => (w, c, r),
            _ => {
                return Err(Error::Parse {
                    path: path.display().to_string(),
                    line: lineno,
                    msg: "expected exactly 3 tab-separated fields".into(),
                })
            }
        };
        let count: f64 = raw.trim().parse().map_err(|_| Error::Parse {
            path: path.display().to_string(),
            line: lineno,
            msg: format!("count {raw:?} is not a number"),
        })?;
        if !count.is_finite() || count <= 0.0 {
            return Err(Error::Parse {
                path: path.display().to_string(),
                line: lineno,
                msg: format!("count must be finite and positive, got {count}"),
            });
        }
        builder.add(word, context, count);
    }
    if builder.is_empty() {
        return Err(Error::EmptyCounts);
    }
    Ok(builder.finish())
}

pub(crate) fn save_space(space: &VectorSpace, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let meta = serde_json::to_string_pretty(space.meta())?;
    fs::write(dir.join("meta.json"), meta + "\n").map_err(|e| Error::io(dir, e))?;
    write_rows(
        &dir.join("words.tsv"),
        space.word_tokens(),
        space.word_rows(),
    )?;
    write_rows(
        &dir.join("contexts.tsv"),
        space.context_tokens(),
        space.context_rows(),
    )?;
    let sigma_path = dir.join("sigma.tsv");
    let file = fs::File::create(&sigma_path).map_err(|e| Error::io(&sigma_path, e))?;
    let mut out = BufWriter::new(file);
    for s in space.sigma() {
        writeln!(out, "{s:.8e}").map_err(|e| Error::io(&sigma_path, e))?;
    }
    out.flush().map_err(|e| Error::io(&sigma_path, e))?;
    Ok(())
}

fn write_rows(path: &Path, tokens: &[String], rows: &DenseMatrix) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    for (i, token) in tokens.iter().enumerate() {
        out.write_all(token.as_bytes())
            .map_err(|e| Error::io(path, e))?;
        for x in rows.row(i) {
            write!(out, "\t{x:.8e}").map_err(|e| Error::io(path, e))?;
        }
        out.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

pub(crate) fn load_space(dir: &Path) -> Result<VectorSpace> {
    let meta_path = dir.join("meta.json");
    let meta_raw = fs::read_to_string(&meta_path).map_err(|e| Error::io(&meta_path, e))?;
    let meta: SpaceMeta = serde_json::from_str(&meta_raw)?;
    let (word_tokens, words) = read_rows(&dir.join("words.tsv"), meta.k)?;
    let (context_tokens, contexts) = read_rows(&dir.join("contexts.tsv"), meta.k)?;
    let sigma_path = dir.join("sigma.tsv");
    let sigma_raw = fs::read_to_string(&sigma_path).map_err(|e| Error::io(&sigma_path, e))?;
    let mut sigma = Vec::with_capacity(meta.k);
    for (idx, line) in sigma_raw.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let v: f64 = line.trim().parse().map_err(|_| Error::Parse {
            path: sigma_path.display().to_string(),
            line: idx + 1,
            msg: format!("singular value {line:?} is not a number"),
        })?;
        sigma.push(v);
    }
    if word_tokens.len() != meta.vocab_size || context_tokens.len() != meta.context_size {
        return Err(Error::invalid(format!(
            "space at {} is inconsistent with its meta.json",
            dir.display()
        )));
    }
    Ok(VectorSpace::from_parts(
        meta.k,
        word_tokens,
        context_tokens,
        words,
        contexts,
        sigma,
        meta,
    ))
}

fn read_rows(path: &Path, k: usize) -> Result<(Vec<String>, DenseMatrix)> {
    let raw = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut tokens = Vec::new();
    let mut flat = Vec::new();
    for (idx, line) in raw.lines().enumerate() {
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split('\t');
        let token = fields.next().unwrap_or_default();
        let before = flat.len();
        for f in fields {
            let v: f64 = f.parse().map_err(|_| Error::Parse {
                path: path.display().to_string(),
                line: idx + 1,
                msg: format!("coordinate {f:?} is not a number"),
            })?;
            flat.push(v);
        }
        if flat.len() - before != k {
            return Err(Error::Parse {
                path: path.display().to_string(),
                line: idx + 1,
                msg: format!("expected {k} coordinates, got {}", flat.len() - before),
            });
        }
        tokens.push(token.to_string());
    }
    let n = tokens.len();
    Ok((tokens, DenseMatrix::from_flat(n, k, flat)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vecspace::{build_space, SvdParams};

    fn sample_counts_file(dir: &Path, body: &str) -> std::path::PathBuf {
        let path = dir.join("counts.tsv");
        fs::write(&path, body).unwrap();
        path
    }

    #[test]
    fn reads_counts_skipping_blanks_and_comments() {
        let tmp = tempfile::tempdir().unwrap();
        let path = sample_counts_file(
            tmp.path(),
            "# header\nalpha\tctx1\t3\n\nbeta\tctx2\t1.5\nalpha\tctx1\t2\n",
        );
        let m = read_counts_tsv(&path).unwrap();
        assert_eq!(m.nnz(), 2);
        assert_eq!(m.value("alpha", "ctx1"), Some(5.0));
        assert_eq!(m.value("beta", "ctx2"), Some(1.5));
    }

    #[test]
    fn malformed_line_reports_its_number() {
        let tmp = tempfile::tempdir().unwrap();
        let path = sample_counts_file(tmp.path(), "a\tb\t1\nbroken line\n");
        match read_counts_tsv(&path) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
        let path = sample_counts_file(tmp.path(), "a\tb\tNaN\n");
        assert!(matches!(read_counts_tsv(&path), Err(Error::Parse { .. })));
        let path = sample_counts_file(tmp.path(), "a\tb\t-2\n");
        match read_counts_tsv(&path) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 1),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn empty_counts_file_is_an_error() {
        let tmp = tempfile::tempdir().unwrap();
        let path = sample_counts_file(tmp.path(), "# nothing here\n");
        assert!(matches!(read_counts_tsv(&path), Err(Error::EmptyCounts)));
    }

    #[test]
    fn space_roundtrips_through_disk() {
        let mut b = CountMatrix::builder();
        for i in 0..7 {
            for j in 0..6 {
                if (i * 3 + j) % 4 != 0 {
                    b.add(&format!("w{i}"), &format!("c{j}"), (1 + i + j * 2) as f64);
                }
            }
        }
        let counts = b.finish();
        let space = build_space(&counts, 3, &SvdParams::with_seed(17)).unwrap();
        let tmp = tempfile::tempdir().unwrap();
        space.save(tmp.path()).unwrap();
        let loaded = VectorSpace::load(tmp.path()).unwrap();
        assert_eq!(loaded.k(), space.k());
        assert_eq!(loaded.word_tokens(), space.word_tokens());
        assert_eq!(loaded.context_tokens(), space.context_tokens());
        for (a, b) in space.sigma().iter().zip(loaded.sigma()) {
            assert!((a - b).abs() < 1e-7 * a.abs().max(1.0));
        }
        for i in 0..space.vocab_size() {
            for (x, y) in space
                .word_rows()
                .row(i)
                .iter()
                .zip(loaded.word_rows().row(i))
            {
                assert!((x - y).abs() < 1e-7);
            }
        }
        // Saving the loaded space again produces byte-identical files.
        let tmp2 = tempfile::tempdir().unwrap();
        loaded.save(tmp2.path()).unwrap();
        for name in ["meta.json", "words.tsv", "contexts.tsv", "sigma.tsv"] {
            let a = fs::read(tmp.path().join(name)).unwrap();
            let b = fs::read(tmp2.path().join(name)).unwrap();
            assert_eq!(a, b, "{name} differs after a save/load/save cycle");
        }
    }
}
