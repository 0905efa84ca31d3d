//! JSONL iteration traces for the iterative solvers.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::error::Result;

/// Line-delimited JSON sink. Records are written as they arrive so long runs keep memory flat.
pub struct TraceWriter {
    out: Box<dyn Write>,
    records: usize,
}

impl TraceWriter {
    pub fn new<W: Write + 'static>(out: W) -> Self {
        TraceWriter { out: Box::new(out), records: 0 }
    }

    pub fn create(path: &Path) -> Result<Self> {
        Ok(TraceWriter::new(BufWriter::new(File::create(path)?)))
    }

    pub fn record<T: Serialize>(&mut self, rec: &T) -> Result<()> {
        serde_json::to_writer(&mut self.out, rec)?;
        self.out.write_all(b"\n")?;
        self.records += 1;
        Ok(())
    }

    pub fn records(&self) -> usize {
        self.records
    }

    pub fn flush(&mut self) -> Result<()> {
        self.out.flush()?;
        Ok(())
    }
}

/// Writes to an optional trace, ignoring the call when tracing is off.
pub(crate) fn emit<T: Serialize>(trace: &mut Option<&mut TraceWriter>, rec: &T) -> Result<()> {
    match trace {
        Some(t) => t.record(rec),
        None => Ok(()),
    }
}
