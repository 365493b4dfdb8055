//! CSV path serialization and the key=value config file format.
//!
//! Both parsers accept untrusted input: they return [`Error::Parse`] on
//! malformed data and must never panic.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Read, Write as _};
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::{SamplePath, TimeGrid};

/// Write a path as CSV: header `t,value` or `t,value,dW`; the increment
/// column on row `i` holds the step increment `dW_i` (blank on the last row).
pub fn write_path_csv(path: &SamplePath, w: &mut impl std::io::Write) -> Result<()> {
    let with_dw = path.noise_increments().is_some();
    if with_dw {
        writeln!(w, "t,value,dW")?;
    } else {
        writeln!(w, "t,value")?;
    }
    let times = path.grid().times();
    for (i, (&t, &v)) in times.iter().zip(path.values()).enumerate() {
        match path.noise_increments() {
            Some(dw) if i < dw.len() => writeln!(w, "{t},{v},{}", dw[i])?,
            Some(_) => writeln!(w, "{t},{v},")?,
            None => writeln!(w, "{t},{v}")?,
        }
    }
    Ok(())
}

pub fn save_path_csv(path: &SamplePath, file: &Path) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(file)?);
    write_path_csv(path, &mut f)?;
    f.flush()?;
    Ok(())
}

fn parse_field(s: &str, line: usize, what: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| Error::Parse(format!("line {line}: bad {what} {s:?}")))
}

/// Parse a path CSV produced by [`write_path_csv`] (or hand-written in the
/// same shape). The grid is reconstructed from the `t` column.
pub fn read_path_csv(r: impl Read) -> Result<SamplePath> {
    let reader = BufReader::new(r);
    let mut lines = reader.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty input".into()))?
        .map_err(|e| Error::Parse(format!("read failure: {e}")))?;
    let with_dw = match header.trim() {
        "t,value" => false,
        "t,value,dW" => true,
        other => return Err(Error::Parse(format!("bad header {other:?}"))),
    };
    let mut times = Vec::new();
    let mut values = Vec::new();
    let mut increments = Vec::new();
    for (idx, line) in lines.enumerate() {
        let line = line.map_err(|e| Error::Parse(format!("read failure: {e}")))?;
        let lineno = idx + 2;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        let expected = if with_dw { 3 } else { 2 };
        if fields.len() != expected {
            return Err(Error::Parse(format!(
                "line {lineno}: expected {expected} fields, got {}",
                fields.len()
            )));
        }
        times.push(parse_field(fields[0], lineno, "time")?);
        values.push(parse_field(fields[1], lineno, "value")?);
        if with_dw && !fields[2].trim().is_empty() {
            increments.push(parse_field(fields[2], lineno, "increment")?);
        }
    }
    let grid = TimeGrid::from_times(times).map_err(|e| Error::Parse(e.to_string()))?;
    let increments = if with_dw {
        if increments.len() != grid.n_steps() {
            return Err(Error::Parse(format!(
                "{} increments for {} steps",
                increments.len(),
                grid.n_steps()
            )));
        }
        Some(increments)
    } else {
        None
    };
    SamplePath::new(grid, values, increments, 0).map_err(|e| Error::Parse(e.to_string()))
}

pub fn load_path_csv(file: &Path) -> Result<SamplePath> {
    read_path_csv(std::fs::File::open(file)?)
}

/// Write an ensemble sharing one grid: columns `t,path_0,...,path_{n-1}`.
pub fn write_ensemble_csv(paths: &[SamplePath], w: &mut impl std::io::Write) -> Result<()> {
    let first = paths
        .first()
        .ok_or_else(|| Error::domain("empty ensemble"))?;
    let grid = first.grid();
    if paths.iter().any(|p| p.grid().times() != grid.times()) {
        return Err(Error::domain("ensemble paths must share one grid"));
    }
    write!(w, "t")?;
    for k in 0..paths.len() {
        write!(w, ",path_{k}")?;
    }
    writeln!(w)?;
    for (i, &t) in grid.times().iter().enumerate() {
        write!(w, "{t}")?;
        for p in paths {
            write!(w, ",{}", p.values()[i])?;
        }
        writeln!(w)?;
    }
    Ok(())
}

/// Parsed key=value config: `[section]` headers, `key = value` lines,
/// `#`-comments. Keys are stored as `section.key` (or bare `key` before any
/// section header). Duplicate keys: last one wins.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Config {
    entries: BTreeMap<String, String>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Config> {
        let mut entries = BTreeMap::new();
        let mut section = String::new();
        for (idx, raw) in text.lines().enumerate() {
            let lineno = idx + 1;
            let line = match raw.find('#') {
                Some(p) => &raw[..p],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            if let Some(inner) = line.strip_prefix('[') {
                let name = inner
                    .strip_suffix(']')
                    .ok_or_else(|| Error::Parse(format!("line {lineno}: unclosed section")))?
                    .trim();
                if name.is_empty() {
                    return Err(Error::Parse(format!("line {lineno}: empty section name")));
                }
                section = name.to_string();
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("line {lineno}: expected key = value")))?;
            let key = key.trim();
            if key.is_empty() {
                return Err(Error::Parse(format!("line {lineno}: empty key")));
            }
            let full = if section.is_empty() {
                key.to_string()
            } else {
                format!("{section}.{key}")
            };
            entries.insert(full, value.trim().to_string());
        }
        Ok(Config { entries })
    }

    pub fn load(file: &Path) -> Result<Config> {
        Config::parse(&std::fs::read_to_string(file)?)
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn get_f64(&self, key: &str) -> Result<Option<f64>> {
        self.entries
            .get(key)
            .map(|v| {
                v.parse::<f64>()
                    .map_err(|_| Error::Parse(format!("config {key}: bad number {v:?}")))
            })
            .transpose()
    }

    pub fn get_u64(&self, key: &str) -> Result<Option<u64>> {
        self.entries
            .get(key)
            .map(|v| {
                v.parse::<u64>()
                    .map_err(|_| Error::Parse(format!("config {key}: bad integer {v:?}")))
            })
            .transpose()
    }

    pub fn get_usize(&self, key: &str) -> Result<Option<usize>> {
        self.entries
            .get(key)
            .map(|v| {
                v.parse::<usize>()
                    .map_err(|_| Error::Parse(format!("config {key}: bad integer {v:?}")))
            })
            .transpose()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }
}
