use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::SweepConfig;
use crate::CliResult;

/// A CSV table: `# config:` line, header row, LF line endings.
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: Vec<&'static str>) -> Self {
        Self { header, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn render(&self, config: &SweepConfig) -> CliResult<String> {
        let mut out = format!("# config: {}\n", config.to_json()).into_bytes();
        {
            let mut w = csv::WriterBuilder::new()
                .terminator(csv::Terminator::Any(b'\n'))
                .from_writer(&mut out);
            w.write_record(&self.header)?;
            for r in &self.rows {
                w.write_record(r)?;
            }
            w.flush()?;
        }
        Ok(String::from_utf8(out).expect("csv output is utf-8"))
    }
}

/// Plain float formatting; non-finite values become empty cells.
pub fn num(v: f64) -> String {
    if v.is_finite() {
        format!("{v}")
    } else {
        String::new()
    }
}

pub fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, num)
}

#[derive(Serialize)]
struct Report<'a, T: Serialize> {
    config: &'a SweepConfig,
    result: &'a T,
}

/// JSON document with the resolved config and sorted keys.
pub fn render_json<T: Serialize>(config: &SweepConfig, result: &T) -> CliResult<String> {
    let v = serde_json::to_value(Report { config, result })?;
    let mut s = serde_json::to_string_pretty(&v)?;
    s.push('\n');
    Ok(s)
}

pub fn write_file(dir: &Path, name: &str, body: &str) -> CliResult<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join(name);
    let mut f = std::fs::File::create(&path)?;
    f.write_all(body.as_bytes())?;
    Ok(path)
}
