//! Table and JSON writers. With `--out DIR` every table goes to its own file;
//! otherwise only the primary table is printed to stdout.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use clap::ValueEnum;
use serde::Serialize;

use crate::error::CliResult;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

pub struct Sink {
    dir: Option<PathBuf>,
    format: Format,
}

impl Sink {
    pub fn new(dir: Option<PathBuf>, format: Format) -> CliResult<Self> {
        if let Some(d) = &dir {
            fs::create_dir_all(d)?;
        }
        Ok(Self { dir, format })
    }

    pub fn has_dir(&self) -> bool {
        self.dir.is_some()
    }

    fn open(&self, name: &str, ext: &str, primary: bool) -> CliResult<Option<Box<dyn Write>>> {
        Ok(match &self.dir {
            Some(d) => Some(Box::new(BufWriter::new(File::create(d.join(format!("{name}.{ext}")))?))),
            None if primary => Some(Box::new(io::stdout().lock())),
            None => None,
        })
    }

    /// Writes `rows` as `name.csv` or `name.json` according to `--format`.
    pub fn table<T: Serialize>(&self, name: &str, rows: &[T], primary: bool) -> CliResult<()> {
        match self.format {
            Format::Csv => {
                if let Some(out) = self.open(name, "csv", primary)? {
                    write_csv(out, rows)?;
                }
            }
            Format::Json => self.json(name, &rows, primary)?,
        }
        Ok(())
    }

    /// Writes preformatted bytes to `DIR/file`, or stdout without `--out`.
    pub fn raw(&self, file: &str, bytes: &[u8]) -> CliResult<()> {
        let (stem, ext) = file.rsplit_once('.').unwrap_or((file, ""));
        if let Some(mut out) = self.open(stem, ext, true)? {
            out.write_all(bytes)?;
            out.flush()?;
        }
        Ok(())
    }

    /// Writes `name.json` regardless of `--format`.
    pub fn json<T: Serialize + ?Sized>(&self, name: &str, value: &T, primary: bool) -> CliResult<()> {
        if let Some(mut out) = self.open(name, "json", primary)? {
            serde_json::to_writer_pretty(&mut out, value)?;
            writeln!(out)?;
            out.flush()?;
        }
        Ok(())
    }
}

pub fn write_csv<T: Serialize, W: Write>(out: W, rows: &[T]) -> CliResult<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
