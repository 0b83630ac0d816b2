use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

/// Writes artifacts into one directory, tagging every CSV row with the config hash.
pub struct Output {
    dir: PathBuf,
    hash: String,
    written: Vec<PathBuf>,
}

/// Formats a number so that reruns produce identical bytes.
pub fn num(v: f64) -> String {
    if v.is_finite() {
        format!("{v:e}")
    } else {
        v.to_string()
    }
}

pub fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

impl Output {
    pub fn new(dir: &Path, hash: String) -> io::Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self { dir: dir.to_owned(), hash, written: Vec::new() })
    }

    pub fn hash(&self) -> &str {
        &self.hash
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }

    fn path(&mut self, name: &str) -> PathBuf {
        let p = self.dir.join(name);
        self.written.push(p.clone());
        p
    }

    pub fn csv(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> io::Result<()> {
        let mut w = csv::Writer::from_path(self.path(name))?;
        w.write_record(header.iter().copied().chain(["config_hash"]))?;
        for row in rows {
            w.write_record(row.iter().map(String::as_str).chain([self.hash.as_str()]))?;
        }
        w.flush()
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> io::Result<()> {
        let mut w = BufWriter::new(File::create(self.path(name))?);
        serde_json::to_writer_pretty(&mut w, value)?;
        writeln!(w)?;
        w.flush()
    }

    /// Two-column plot data, space-separated.
    pub fn dat(&mut self, name: &str, pairs: &[(f64, f64)]) -> io::Result<()> {
        let mut w = BufWriter::new(File::create(self.path(name))?);
        for &(a, b) in pairs {
            writeln!(w, "{} {}", num(a), num(b))?;
        }
        w.flush()
    }
}
