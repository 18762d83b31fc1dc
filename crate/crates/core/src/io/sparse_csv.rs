use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::types::{SparseDepth, SparseEntry};

const HEADER: &str = "row,col,depth_m";

/// Parses `row,col,depth_m` text for an image of the given size. Errors
/// name the 1-based line, counting the header as line 1.
pub fn parse_sparse_csv(text: &str, height: usize, width: usize) -> Result<SparseDepth> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header = reader
        .headers()
        .map_err(|e| Error::Csv { line: 1, msg: e.to_string() })?
        .iter()
        .collect::<Vec<_>>()
        .join(",");
    if header != HEADER {
        return Err(Error::Csv {
            line: 1,
            msg: format!("expected header '{HEADER}', got '{header}'"),
        });
    }
    let mut seen = std::collections::HashMap::new();
    let mut entries = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::Csv {
            line: e.position().map_or(0, |p| p.line()),
            msg: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let bad = |msg: String| Error::Csv { line, msg };
        if record.len() != 3 {
            return Err(bad(format!("expected 3 fields, got {}", record.len())));
        }
        let row: usize = record[0].parse().map_err(|e| bad(format!("row '{}': {e}", &record[0])))?;
        let col: usize = record[1].parse().map_err(|e| bad(format!("col '{}': {e}", &record[1])))?;
        let depth: f32 = record[2].parse().map_err(|e| bad(format!("depth '{}': {e}", &record[2])))?;
        if row >= height || col >= width {
            return Err(bad(format!("pixel ({row},{col}) outside {height}x{width}")));
        }
        if !depth.is_finite() || depth <= 0.0 {
            return Err(bad(format!("depth {depth} is not positive")));
        }
        if let Some(first) = seen.insert((row, col), line) {
            return Err(bad(format!("duplicate pixel ({row},{col}), first seen on line {first}")));
        }
        entries.push(SparseEntry { row, col, depth });
    }
    SparseDepth::new(height, width, entries)
}

pub fn read_sparse_csv(path: impl AsRef<Path>, height: usize, width: usize) -> Result<SparseDepth> {
    let text = fs::read_to_string(path)?;
    parse_sparse_csv(&text, height, width)
}

/// Entries in `(row, col)` order; depths use the shortest text that reads
/// back to the same `f32`.
pub fn sparse_csv_string(s: &SparseDepth) -> String {
    let mut out = String::with_capacity(16 * (s.len() + 1));
    out.push_str(HEADER);
    out.push('\n');
    for e in s.entries() {
        out.push_str(&format!("{},{},{}\n", e.row, e.col, e.depth));
    }
    out
}

pub fn write_sparse_csv(path: impl AsRef<Path>, s: &SparseDepth) -> Result<()> {
    fs::write(path, sparse_csv_string(s))?;
    Ok(())
}
