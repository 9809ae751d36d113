use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::ser::Formatter;
use std::io::{self, Write};
use std::path::Path;

/// Floats with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

/// Compact JSON with every float written as `fmt_f64` does.
struct FixedFloats;

impl Formatter for FixedFloats {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        w.write_all(fmt_f64(value).as_bytes())
    }

    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, value as f64)
    }
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, FixedFloats);
    value.serialize(&mut ser)?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf)?)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    std::fs::write(path, to_json(value)?).with_context(|| format!("writing {}", path.display()))
}

/// One CSV cell.
pub enum Cell {
    F(f64),
    I(i64),
    S(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::F(x) => fmt_f64(*x),
            Cell::I(i) => i.to_string(),
            Cell::S(s) => s.clone(),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::F(x)
    }
}

impl From<Option<f64>> for Cell {
    fn from(x: Option<f64>) -> Self {
        x.map_or(Cell::S(String::new()), Cell::F)
    }
}

impl From<usize> for Cell {
    fn from(i: usize) -> Self {
        Cell::I(i as i64)
    }
}

impl From<bool> for Cell {
    fn from(b: bool) -> Self {
        Cell::S(b.to_string())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::S(s)
    }
}

/// A header row followed by data rows; further sections start with their
/// own header.
pub struct Table {
    sections: Vec<(Vec<&'static str>, Vec<Vec<Cell>>)>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Table { sections: vec![(header.to_vec(), Vec::new())] }
    }

    pub fn row(&mut self, cells: Vec<Cell>) {
        let (h, rows) = self.sections.last_mut().unwrap();
        debug_assert_eq!(h.len(), cells.len());
        rows.push(cells);
    }

    pub fn section(&mut self, header: &[&'static str]) {
        self.sections.push((header.to_vec(), Vec::new()));
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut w = csv::WriterBuilder::new()
            .flexible(true)
            .from_path(path)
            .with_context(|| format!("writing {}", path.display()))?;
        for (header, rows) in &self.sections {
            w.write_record(header)?;
            for r in rows {
                w.write_record(r.iter().map(Cell::render))?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_keep_seventeen_digits() {
        assert_eq!(fmt_f64(1.0), "1.0000000000000000e0");
        let x = std::f64::consts::PI / 7.0;
        assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
        let v: Vec<f64> = serde_json::from_str(&to_json(&vec![x, -2.5e-300, 0.0]).unwrap()).unwrap();
        assert_eq!(v, vec![x, -2.5e-300, 0.0]);
    }

    #[test]
    fn non_finite_floats_become_null() {
        assert_eq!(to_json(&vec![f64::NAN]).unwrap(), "[null]\n");
    }
}
