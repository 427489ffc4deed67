//! Report rendering: aligned human tables plus a TSV machine format that
//! round-trips exactly (values are written in shortest-round-trip decimal).

use crate::error::{Error, Result};

/// Labelled rows of numeric columns, the machine-facing report shape.
#[derive(Debug, Clone, PartialEq)]
pub struct MachineTable {
    pub columns: Vec<String>,
    pub rows: Vec<(String, Vec<f64>)>,
}

impl MachineTable {
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("label");
        for c in &self.columns {
            out.push('\t');
            out.push_str(c);
        }
        out.push('\n');
        for (label, values) in &self.rows {
            out.push_str(label);
            for v in values {
                out.push('\t');
                out.push_str(&v.to_string());
            }
            out.push('\n');
        }
        out
    }

    pub fn from_tsv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Data("machine table: empty file".into()))?;
        let mut cols = header.split('\t');
        if cols.next() != Some("label") {
            return Err(Error::Data("machine table: missing label header".into()));
        }
        let columns: Vec<String> = cols.map(str::to_string).collect();
        let mut rows = Vec::new();
        for (lineno, line) in lines.enumerate() {
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split('\t');
            let label = parts.next().unwrap_or_default().to_string();
            let values = parts
                .map(|p| {
                    p.parse::<f64>().map_err(|_| {
                        Error::Data(format!(
                            "machine table: bad number {p:?} on line {}",
                            lineno + 2
                        ))
                    })
                })
                .collect::<Result<Vec<f64>>>()?;
            if values.len() != columns.len() {
                return Err(Error::Data(format!(
                    "machine table: row {label} has {} values, expected {}",
                    values.len(),
                    columns.len()
                )));
            }
            rows.push((label, values));
        }
        Ok(Self { columns, rows })
    }

    /// Aligned human-readable rendering, values to two decimals.
    pub fn render(&self) -> String {
        let mut cells: Vec<Vec<String>> = Vec::with_capacity(self.rows.len() + 1);
        let mut header = vec![String::new()];
        header.extend(self.columns.iter().cloned());
        cells.push(header);
        for (label, values) in &self.rows {
            let mut row = vec![label.clone()];
            row.extend(values.iter().map(|v| format!("{v:.2}")));
            cells.push(row);
        }
        render_aligned(&cells)
    }
}

/// Lay already-formatted (label, value) cells into an n-column grid, filling
/// left to right; trailing cells of the last row are left blank.
pub fn render_category_grid(cells: &[(String, String)], columns: usize) -> String {
    let columns = columns.max(1);
    let n_rows = cells.len().div_ceil(columns);
    let mut grid: Vec<Vec<String>> = Vec::with_capacity(n_rows);
    for r in 0..n_rows {
        let mut row = Vec::with_capacity(columns * 2);
        for c in 0..columns {
            match cells.get(r * columns + c) {
                Some((label, value)) => {
                    row.push(label.clone());
                    row.push(value.clone());
                }
                None => {
                    row.push(String::new());
                    row.push(String::new());
                }
            }
        }
        grid.push(row);
    }
    render_aligned(&grid)
}

fn render_aligned(rows: &[Vec<String>]) -> String {
    let n_cols = rows.iter().map(Vec::len).max().unwrap_or(0);
    let mut widths = vec![0usize; n_cols];
    for row in rows {
        for (i, cell) in row.iter().enumerate() {
            widths[i] = widths[i].max(cell.chars().count());
        }
    }
    let mut out = String::new();
    for row in rows {
        let mut line = String::new();
        for (i, cell) in row.iter().enumerate() {
            if i > 0 {
                line.push_str("  ");
            }
            line.push_str(cell);
            let pad = widths[i].saturating_sub(cell.chars().count());
            line.extend(std::iter::repeat(' ').take(pad));
        }
        out.push_str(line.trim_end());
        out.push('\n');
    }
    out
}
