//! Replayable update streams with pass accounting, and the line-oriented text format.

use std::io::{BufRead, Write};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{validate_update, EdgeUpdate, GraphSnapshot, NodeId, Op, WeightClass};
use crate::error::{Error, Result};
use crate::hash::sub_seed;

/// A stored sequence of updates that algorithms may only read through full passes.
#[derive(Clone, Debug)]
pub struct StreamSource {
    n: usize,
    weight_class: WeightClass,
    updates: Vec<EdgeUpdate>,
    passes: usize,
    permute_seed: Option<u64>,
}

impl StreamSource {
    /// Validates the sequence against the dynamic-stream contract and wraps it.
    pub fn new(n: usize, weight_class: WeightClass, updates: Vec<EdgeUpdate>) -> Result<Self> {
        let mut s = GraphSnapshot::empty(n, weight_class);
        for (i, e) in updates.iter().enumerate() {
            s.apply_update(e).map_err(|err| match err {
                Error::MalformedStream(m) => Error::MalformedStream(format!("update {i}: {m}")),
                other => other,
            })?;
        }
        Ok(StreamSource { n, weight_class, updates, passes: 0, permute_seed: None })
    }

    /// Insert-only stream of a snapshot's edges in key order.
    pub fn from_snapshot(s: &GraphSnapshot) -> Self {
        let updates = s.edges().map(|(u, v, w)| EdgeUpdate::insert(u, v, w)).collect();
        StreamSource {
            n: s.n,
            weight_class: s.weight_class,
            updates,
            passes: 0,
            permute_seed: None,
        }
    }

    /// Makes each pass present the updates in a fresh seeded order. Only valid for
    /// insert-only streams, where order cannot break the delete-after-insert contract.
    pub fn with_pass_permutation(mut self, seed: u64) -> Result<Self> {
        if !self.is_insert_only() {
            return Err(Error::InvalidInput(
                "pass permutation requires an insert-only stream".into(),
            ));
        }
        self.permute_seed = Some(seed);
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn weight_class(&self) -> WeightClass {
        self.weight_class
    }

    pub fn len(&self) -> usize {
        self.updates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.updates.is_empty()
    }

    pub fn is_insert_only(&self) -> bool {
        self.updates.iter().all(|e| e.op == Op::Insert)
    }

    pub fn passes(&self) -> usize {
        self.passes
    }

    pub fn reset_passes(&mut self) {
        self.passes = 0;
    }

    /// Starts a full replay. The pass counter is charged up front, so a pass that is
    /// abandoned early still counts.
    pub fn pass(&mut self) -> Pass<'_> {
        let order = self.permute_seed.map(|seed| {
            let mut idx: Vec<u32> = (0..self.updates.len() as u32).collect();
            let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(seed, &format!("pass-{}", self.passes)));
            idx.shuffle(&mut rng);
            idx
        });
        self.passes += 1;
        Pass { updates: &self.updates, order, pos: 0 }
    }

    /// Consumes one pass and folds it into the net-weight snapshot.
    pub fn snapshot(&mut self) -> GraphSnapshot {
        let (n, wc) = (self.n, self.weight_class);
        let pass = self.pass();
        let updates: Vec<EdgeUpdate> = pass.collect();
        GraphSnapshot::from_updates(n, wc, updates.iter())
    }

    /// The materialized graph, for oracles and reporting. Does not count as a pass.
    pub fn oracle_snapshot(&self) -> GraphSnapshot {
        GraphSnapshot::from_updates(self.n, self.weight_class, self.updates.iter())
    }

    pub fn updates(&self) -> &[EdgeUpdate] {
        &self.updates
    }
}

pub struct Pass<'a> {
    updates: &'a [EdgeUpdate],
    order: Option<Vec<u32>>,
    pos: usize,
}

impl Iterator for Pass<'_> {
    type Item = EdgeUpdate;

    fn next(&mut self) -> Option<EdgeUpdate> {
        let idx = match &self.order {
            Some(o) => *o.get(self.pos)? as usize,
            None => self.pos,
        };
        let e = self.updates.get(idx).copied();
        self.pos += 1;
        e
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let rest = self.updates.len().saturating_sub(self.pos);
        (rest, Some(rest))
    }
}

impl ExactSizeIterator for Pass<'_> {}

pub fn write_stream<W: Write>(src: &StreamSource, out: W) -> Result<()> {
    write_updates(src.n, src.weight_class, &[], src.updates.iter().copied(), out)
}

/// Writes a header, optional `#` comment lines and the updates.
pub fn write_updates<W, I>(
    n: usize,
    wc: WeightClass,
    comments: &[String],
    updates: I,
    mut out: W,
) -> Result<()>
where
    W: Write,
    I: IntoIterator<Item = EdgeUpdate>,
{
    for c in comments {
        writeln!(out, "# {c}")?;
    }
    writeln!(out, "H {n} {wc}")?;
    for e in updates {
        let tag = match e.op {
            Op::Insert => 'I',
            Op::Delete => 'D',
        };
        writeln!(out, "{tag} {} {} {}", e.u, e.v, e.weight)?;
    }
    out.flush()?;
    Ok(())
}

/// Parses the text format. Blank lines and `#` comments are skipped; the header must
/// precede every update.
pub fn read_stream<R: BufRead>(input: R) -> Result<StreamSource> {
    let mut header: Option<(usize, WeightClass)> = None;
    let mut updates = Vec::new();
    for (lineno, line) in input.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = |msg: &str| Error::MalformedStream(format!("line {}: {msg}: {line:?}", lineno + 1));
        let fields: Vec<&str> = line.split_whitespace().collect();
        match fields[0] {
            "H" => {
                if header.is_some() {
                    return Err(bad("duplicate header"));
                }
                let n: usize = fields.get(1).and_then(|s| s.parse().ok()).ok_or_else(|| bad("bad node count"))?;
                let w_star = || -> Result<u64> {
                    fields
                        .get(3)
                        .and_then(|s| s.parse().ok())
                        .filter(|w| *w >= 1)
                        .ok_or_else(|| bad("missing or invalid w_star"))
                };
                let wc = match fields.get(2).copied() {
                    Some("unit") => WeightClass::Unit,
                    Some("bounded") => WeightClass::Bounded { w_star: w_star()? },
                    Some("arbitrary") => WeightClass::Arbitrary { w_star: w_star()? },
                    _ => return Err(bad("unknown weight class")),
                };
                header = Some((n, wc));
            }
            tag @ ("I" | "D") => {
                let (n, wc) = header.ok_or_else(|| bad("update before header"))?;
                if fields.len() != 4 {
                    return Err(bad("expected `I|D u v w`"));
                }
                let u: NodeId = fields[1].parse().map_err(|_| bad("bad node id"))?;
                let v: NodeId = fields[2].parse().map_err(|_| bad("bad node id"))?;
                let w: i64 = fields[3].parse().map_err(|_| bad("bad weight"))?;
                let e = if tag == "I" { EdgeUpdate::insert(u, v, w) } else { EdgeUpdate::delete(u, v, w) };
                validate_update(n, wc, &e).map_err(|err| bad(&err.to_string()))?;
                updates.push(e);
            }
            _ => return Err(bad("unknown record")),
        }
    }
    let (n, wc) = header.ok_or_else(|| Error::MalformedStream("missing header line".into()))?;
    StreamSource::new(n, wc, updates)
}
