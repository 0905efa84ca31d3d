//! Instance specs: generated in memory or read from a stream file.

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use ccstream::graph::gen::with_churn;
use ccstream::graph::stream::{read_stream, write_stream, write_updates};
use ccstream::hash::sub_seed;
use ccstream::{gen_instance, Clustering, Error, InstanceKind, Result, StreamSource};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "kebab-case")]
pub enum InstanceSpec {
    Gen {
        #[serde(flatten)]
        kind: InstanceKind,
        n: usize,
        seed: u64,
        /// Insert/delete pairs interleaved on untouched pairs.
        #[serde(default)]
        churn: usize,
    },
    File { path: PathBuf },
}

pub struct Loaded {
    pub source: StreamSource,
    pub planted: Option<Clustering>,
    pub query: Option<Clustering>,
    pub expect_zero: Option<bool>,
    pub digest: String,
}

pub fn digest(src: &StreamSource) -> String {
    let mut text = Vec::new();
    write_stream(src, &mut text).expect("writing to memory");
    Sha256::digest(&text).iter().map(|b| format!("{b:02x}")).collect()
}

impl InstanceSpec {
    pub fn load(&self) -> Result<Loaded> {
        match self {
            InstanceSpec::Gen { kind, n, seed, churn } => {
                let inst = gen_instance(kind, *n, *seed)?;
                let source = if *churn > 0 { with_churn(&inst.source, *churn, sub_seed(*seed, "gen-churn"))? } else { inst.source };
                Ok(Loaded {
                    digest: digest(&source),
                    source,
                    planted: inst.planted,
                    query: inst.query,
                    expect_zero: inst.expect_zero,
                })
            }
            InstanceSpec::File { path } => {
                let source = read_stream(BufReader::new(File::open(path)?))?;
                let meta = read_comments(path, source.n())?;
                Ok(Loaded {
                    digest: digest(&source),
                    source,
                    planted: meta.planted,
                    query: meta.query,
                    expect_zero: meta.expect_zero,
                })
            }
        }
    }
}

#[derive(Default)]
struct Comments {
    planted: Option<Clustering>,
    query: Option<Clustering>,
    expect_zero: Option<bool>,
}

fn labels_from(text: &str, n: usize) -> Result<Clustering> {
    let raw: Vec<usize> = text
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| Error::MalformedStream(format!("bad label {t:?}"))))
        .collect::<Result<_>>()?;
    if raw.len() != n {
        return Err(Error::MalformedStream(format!("{} labels for n = {n}", raw.len())));
    }
    Ok(Clustering::from_labels(&raw))
}

/// `# planted: ...`, `# query: ...` and `# expect-zero: ...` lines written by `gen`.
fn read_comments(path: &Path, n: usize) -> Result<Comments> {
    let mut c = Comments::default();
    for line in BufReader::new(File::open(path)?).lines() {
        let line = line?;
        let Some(body) = line.trim().strip_prefix('#') else { continue };
        if let Some((key, value)) = body.trim().split_once(':') {
            match key.trim() {
                "planted" => c.planted = Some(labels_from(value, n)?),
                "query" => c.query = Some(labels_from(value, n)?),
                "expect-zero" => c.expect_zero = value.trim().parse().ok(),
                _ => {}
            }
        }
    }
    Ok(c)
}

fn join(c: &Clustering) -> String {
    c.labels().iter().map(|l| l.to_string()).collect::<Vec<_>>().join(" ")
}

/// Writes a generated instance with its metadata as comment lines.
pub fn write_instance(spec: &InstanceSpec, out: &Path) -> Result<Loaded> {
    let loaded = spec.load()?;
    let mut comments = vec![format!("instance: {}", serde_json::to_string(spec)?)];
    if let Some(p) = &loaded.planted {
        comments.push(format!("planted: {}", join(p)));
    }
    if let Some(q) = &loaded.query {
        comments.push(format!("query: {}", join(q)));
    }
    if let Some(z) = loaded.expect_zero {
        comments.push(format!("expect-zero: {z}"));
    }
    let src = &loaded.source;
    let file = std::io::BufWriter::new(File::create(out)?);
    write_updates(src.n(), src.weight_class(), &comments, src.updates().iter().copied(), file)?;
    Ok(loaded)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_round_trips_through_json() {
        let spec = InstanceSpec::Gen { kind: InstanceKind::Planted { k: 2, flip: 0.1 }, n: 10, seed: 3, churn: 0 };
        let text = serde_json::to_string(&spec).unwrap();
        assert_eq!(serde_json::from_str::<InstanceSpec>(&text).unwrap(), spec);
    }

    #[test]
    fn written_file_reloads_with_metadata() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.stream");
        let spec = InstanceSpec::Gen { kind: InstanceKind::Cliques { k: 3, negatives: false }, n: 9, seed: 1, churn: 4 };
        let written = write_instance(&spec, &path).unwrap();
        let back = InstanceSpec::File { path }.load().unwrap();
        assert_eq!(back.digest, written.digest);
        assert_eq!(back.planted, written.planted);
        assert!(!back.source.is_insert_only());
    }
}
