//! Artifact emission and exit codes.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_STAT_FAIL: i32 = 2;
pub const EXIT_INSUFFICIENT: i32 = 3;

pub fn exit_code_for(err: &Error) -> i32 {
    match err {
        Error::EmptySample(_) => EXIT_INSUFFICIENT,
        _ => EXIT_USAGE,
    }
}

/// A CSV table built in memory, written in one go.
#[derive(Debug, Clone, PartialEq)]
pub struct Csv {
    header: Vec<String>,
    body: String,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        Csv { header: header.iter().map(|h| h.to_string()).collect(), body: String::new() }
    }

    pub fn row<I, D>(&mut self, cells: I)
    where
        I: IntoIterator<Item = D>,
        D: std::fmt::Display,
    {
        let mut first = true;
        for cell in cells {
            if !first {
                self.body.push(',');
            }
            first = false;
            let _ = write!(self.body, "{cell}");
        }
        self.body.push('\n');
    }

    pub fn render(&self) -> String {
        format!("{}\n{}", self.header.join(","), self.body)
    }
}

/// Destination for a command's artifacts. Without a directory only the
/// JSON summary is produced, on stdout.
#[derive(Debug, Clone)]
pub struct Output {
    dir: Option<PathBuf>,
}

impl Output {
    pub fn new(dir: Option<PathBuf>) -> Result<Self> {
        if let Some(d) = &dir {
            fs::create_dir_all(d)?;
        }
        Ok(Output { dir })
    }

    pub fn dir(&self) -> Option<&Path> {
        self.dir.as_deref()
    }

    pub fn csv(&self, name: &str, table: &Csv) -> Result<()> {
        if let Some(d) = &self.dir {
            fs::write(d.join(name), table.render())?;
        }
        Ok(())
    }

    /// Prints the summary and stores it as `summary.json`.
    pub fn summary<T: Serialize>(&self, value: &T) -> Result<()> {
        let text = serde_json::to_string_pretty(value)?;
        if let Some(d) = &self.dir {
            fs::write(d.join("summary.json"), format!("{text}\n"))?;
        }
        let mut out = std::io::stdout().lock();
        match writeln!(out, "{text}") {
            Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
            _ => Ok(()),
        }
    }
}

/// Comma-separated list of reals, e.g. `0.5,1,2`. Empty text is an empty grid.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Grid(pub Vec<f64>);

impl std::str::FromStr for Grid {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        parse_grid(s).map(Grid)
    }
}

/// Parses `"0.5,1,2"`.
pub fn parse_grid(text: &str) -> std::result::Result<Vec<f64>, String> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<f64>().map_err(|e| format!("bad grid value '{s}': {e}")))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_layout() {
        let mut c = Csv::new(&["t", "k", "prob"]);
        c.row([1.0, 2.0, 0.25]);
        assert_eq!(c.render(), "t,k,prob\n1,2,0.25\n");
    }

    #[test]
    fn grids() {
        assert_eq!(parse_grid("0.5, 1,2").unwrap(), vec![0.5, 1.0, 2.0]);
        assert!(parse_grid("a").is_err());
    }

    #[test]
    fn creates_missing_directory() {
        let tmp = tempfile::tempdir().unwrap();
        let dir = tmp.path().join("a/b");
        let out = Output::new(Some(dir.clone())).unwrap();
        out.csv("x.csv", &Csv::new(&["a"])).unwrap();
        assert!(dir.join("x.csv").exists());
    }
}
