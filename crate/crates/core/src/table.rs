//! Plain result tables written as CSV or aligned text.
//!
//! Cells are stored already formatted, so both outputs carry the same digits.

use std::io::Write;

use crate::error::Result;

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

/// Shortest representation that parses back to the same value, in
/// scientific notation outside `[1e-3, 1e7)`.
pub fn num(x: f64) -> String {
    let a = x.abs();
    if x.is_nan() {
        String::new()
    } else if a == 0.0 || !a.is_finite() || (1e-3..1e7).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

pub fn opt_num(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

pub fn opt_int(x: Option<u64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

impl Table {
    pub fn new(name: impl Into<String>, columns: &[&str]) -> Self {
        Self { name: name.into(), columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(&self.columns)?;
        for row in &self.rows {
            out.write_record(row)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }

    pub fn write_text<W: Write>(&self, mut w: W) -> Result<()> {
        let mut widths: Vec<usize> = self.columns.iter().map(String::len).collect();
        for row in &self.rows {
            for (wd, cell) in widths.iter_mut().zip(row) {
                *wd = (*wd).max(cell.len());
            }
        }
        writeln!(w, "# {}", self.name)?;
        let line = |cells: &[String]| {
            cells.iter().zip(&widths).map(|(c, wd)| format!("{c:<wd$}")).collect::<Vec<_>>().join("  ")
        };
        writeln!(w, "{}", line(&self.columns).trim_end())?;
        for row in &self.rows {
            writeln!(w, "{}", line(row).trim_end())?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_and_text_carry_the_same_cells() {
        let mut t = Table::new("demo", &["a", "b"]);
        t.push(vec![num(0.1 + 0.2), opt_int(None)]);
        let csv = t.to_csv_string().unwrap();
        assert_eq!(csv, "a,b\n0.30000000000000004,\n");
        let mut text = Vec::new();
        t.write_text(&mut text).unwrap();
        let text = String::from_utf8(text).unwrap();
        assert!(text.contains("0.30000000000000004"));
        assert_eq!(num(f64::NAN), "");
        assert_eq!(num(8.07625400934648e-8), "8.07625400934648e-8");
        assert_eq!(num(76e6), "7.6e7");
        for x in [1.234e-9, 0.5, 123.25, 9.9e12, -3e-5] {
            assert_eq!(num(x).parse::<f64>().unwrap(), x);
        }
    }
}
