//! Output files: CSV tables and the JSON run manifest written next to them.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rntk::Error;
use serde::Serialize;
use serde_json::Value;

pub struct OutputDir {
    root: PathBuf,
    written: Vec<String>,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self, Error> {
        fs::create_dir_all(root)?;
        Ok(OutputDir {
            root: root.to_path_buf(),
            written: Vec::new(),
        })
    }

    /// Opens `name` for writing and records it for the manifest.
    pub fn file(&mut self, name: &str) -> Result<BufWriter<File>, Error> {
        let path = self.root.join(name);
        self.written.push(path.display().to_string());
        Ok(BufWriter::new(File::create(path)?))
    }

    /// Writes a header and rows of already formatted cells.
    pub fn csv(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<(), Error> {
        let mut w = self.file(name)?;
        writeln!(w, "{}", header.join(","))?;
        for row in rows {
            writeln!(w, "{}", row.join(","))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), Error> {
        let mut w = self.file(name)?;
        serde_json::to_writer_pretty(&mut w, value).map_err(|e| Error::Io(e.into()))?;
        writeln!(w)?;
        w.flush()?;
        Ok(())
    }

    pub fn written(&self) -> &[String] {
        &self.written
    }
}

/// Everything needed to replay a run. Only `wall_seconds` varies between
/// identical invocations.
#[derive(Debug, Serialize)]
pub struct Manifest {
    pub command: String,
    pub version: &'static str,
    pub seed: u64,
    pub settings: Value,
    pub summary: Value,
    pub outputs: Vec<String>,
    pub wall_seconds: f64,
}

/// JSON has no infinities; SNRs use the strings `"inf"` / `"-inf"`.
pub fn number(v: f64) -> Value {
    if v.is_nan() {
        Value::Null
    } else if v == f64::INFINITY {
        Value::from("inf")
    } else if v == f64::NEG_INFINITY {
        Value::from("-inf")
    } else {
        Value::from(v)
    }
}

/// `Display` for CSV cells; infinities come out as `inf`.
pub fn cell(v: impl ToString) -> String {
    v.to_string()
}
