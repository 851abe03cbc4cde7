use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::error::CliError;

/// Provenance written at the top of every artifact as `#` comment lines.
#[derive(Clone, Debug)]
pub struct Meta {
    pub command: String,
    pub config_hash: String,
    pub decisions: Vec<(&'static str, String)>,
}

impl Meta {
    fn write_header(&self, w: &mut impl Write, name: &str, units: &str) -> std::io::Result<()> {
        writeln!(w, "# artifact: {name}")?;
        writeln!(w, "# producer: polarity {} {}", env!("CARGO_PKG_VERSION"), self.command)?;
        writeln!(w, "# config_sha256: {}", self.config_hash)?;
        writeln!(w, "# units: {units}")?;
        for (k, v) in &self.decisions {
            writeln!(w, "# decision: {k} = {v}")?;
        }
        Ok(())
    }
}

pub fn num(x: f64) -> String {
    if x.is_nan() {
        "NA".into()
    } else {
        x.to_string()
    }
}

pub fn opt(x: Option<f64>) -> String {
    x.map_or_else(|| "NA".into(), num)
}

pub struct Output<'a> {
    pub dir: &'a Path,
    pub meta: &'a Meta,
    pub written: Vec<PathBuf>,
}

impl<'a> Output<'a> {
    pub fn new(dir: &'a Path, meta: &'a Meta) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        Ok(Output { dir, meta, written: Vec::new() })
    }

    /// Writes a CSV table with the metadata header.
    pub fn table<I>(&mut self, name: &str, units: &str, header: &[&str], rows: I) -> Result<(), CliError>
    where
        I: IntoIterator<Item = Vec<String>>,
    {
        self.raw(name, units, |w| {
            let mut csv = csv::Writer::from_writer(w);
            csv.write_record(header).map_err(std::io::Error::other)?;
            for r in rows {
                csv.write_record(&r).map_err(std::io::Error::other)?;
            }
            csv.flush()
        })
    }

    /// Writes the metadata header, then lets `body` fill the rest.
    pub fn raw(
        &mut self,
        name: &str,
        units: &str,
        body: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
    ) -> Result<(), CliError> {
        let path = self.dir.join(name);
        let f = File::create(&path).map_err(|e| CliError::io(&path, e))?;
        let mut w = BufWriter::with_capacity(1 << 20, f);
        self.meta
            .write_header(&mut w, name, units)
            .and_then(|_| body(&mut w))
            .and_then(|_| w.flush())
            .map_err(|e| CliError::io(&path, e))?;
        self.written.push(path);
        Ok(())
    }
}
