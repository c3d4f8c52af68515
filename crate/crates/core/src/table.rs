//! Two-column plain-text tables: whitespace-separated `x y` pairs, one per
//! line, `#` comment lines and blank lines ignored, strictly increasing `x`.

use std::path::Path;

use crate::error::{Error, Result};

pub fn parse_table(text: &str) -> Result<Vec<(f64, f64)>> {
    let mut rows: Vec<(f64, f64)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut cols = line.split_whitespace();
        let mut next = |what: &str| -> Result<f64> {
            let tok = cols
                .next()
                .ok_or_else(|| Error::Parse { line: i + 1, message: format!("missing {what} column") })?;
            tok.parse::<f64>()
                .map_err(|e| Error::Parse { line: i + 1, message: format!("bad {what} value {tok:?}: {e}") })
        };
        let x = next("first")?;
        let y = next("second")?;
        if cols.next().is_some() {
            return Err(Error::Parse { line: i + 1, message: "expected exactly two columns".into() });
        }
        if !x.is_finite() || !y.is_finite() {
            return Err(Error::Parse { line: i + 1, message: "non-finite value".into() });
        }
        if let Some(&(px, _)) = rows.last() {
            if x <= px {
                return Err(Error::Parse {
                    line: i + 1,
                    message: format!("first column must increase strictly ({x} after {px})"),
                });
            }
        }
        rows.push((x, y));
    }
    if rows.len() < 2 {
        return Err(Error::invalid("table needs at least two data rows"));
    }
    Ok(rows)
}

pub fn read_table(path: impl AsRef<Path>) -> Result<Vec<(f64, f64)>> {
    parse_table(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_blank_lines() {
        let t = parse_table("# header\n0 0\n\n 1.5\t2e-1 \n# tail\n3 4\n").unwrap();
        assert_eq!(t, vec![(0.0, 0.0), (1.5, 0.2), (3.0, 4.0)]);
    }

    #[test]
    fn rejects_decreasing_and_malformed_rows() {
        assert!(matches!(parse_table("0 0\n0 1\n"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(parse_table("0 0\n1\n"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(parse_table("0 0\n1 x\n"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(parse_table("0 0 0\n1 1\n"), Err(Error::Parse { line: 1, .. })));
        assert!(parse_table("0 0\n").is_err());
    }
}
