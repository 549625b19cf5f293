// SPDX-License-Identifier: MIT OR Apache-2.0

//! Reading series files and declarative config files.

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;

use crate::CliError;

fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

/// One value per line, or one column of a CSV file with a header row.
///
/// Blank lines and lines starting with `#` are skipped. Without `column`, a
/// non-numeric first data line is taken as a header.
pub fn read_series(path: &Path, column: Option<&str>) -> Result<Vec<f64>, CliError> {
    let text = read_text(path)?;
    let values = match column {
        None => parse_lines(&text, path)?,
        Some(col) => parse_column(&text, col, path)?,
    };
    if values.is_empty() {
        return Err(CliError::Validation(format!("{}: no values", path.display())));
    }
    Ok(values)
}

fn check_finite(v: f64, path: &Path, line: usize) -> Result<f64, CliError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(CliError::Validation(format!("{}:{line}: value {v} is not finite", path.display())))
    }
}

fn parse_lines(text: &str, path: &Path) -> Result<Vec<f64>, CliError> {
    let mut out = Vec::new();
    let mut seen_data = false;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        match line.parse::<f64>() {
            Ok(v) => out.push(check_finite(v, path, i + 1)?),
            Err(_) if !seen_data => {}
            Err(_) => {
                return Err(CliError::Io(format!("{}:{}: cannot parse {line:?} as a number", path.display(), i + 1)));
            }
        }
        seen_data = true;
    }
    Ok(out)
}

fn parse_column(text: &str, column: &str, path: &Path) -> Result<Vec<f64>, CliError> {
    let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(text.as_bytes());
    let headers = reader.headers().map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?.clone();
    let idx = headers
        .iter()
        .position(|h| h == column)
        .or_else(|| column.parse::<usize>().ok().filter(|&i| i < headers.len()))
        .ok_or_else(|| CliError::Validation(format!("{}: no column {column:?} in header {headers:?}", path.display())))?;
    let mut out = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let cell = rec.get(idx).unwrap_or("");
        let v = cell
            .parse::<f64>()
            .map_err(|_| CliError::Io(format!("{}:{line}: cannot parse {cell:?} as a number", path.display())))?;
        out.push(check_finite(v, path, line)?);
    }
    Ok(out)
}

/// A TOML config file.
pub fn read_toml<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = read_text(path)?;
    toml::from_str(&text).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
}

/// `start:stop:step` (inclusive of `stop` up to rounding) or a comma list.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>, CliError> {
    let bad = || CliError::Validation(format!("--theta-grid {spec:?}: expected start:stop:step or a comma list"));
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() == 3 {
        let nums: Vec<f64> = parts.iter().map(|p| p.trim().parse::<f64>()).collect::<Result<_, _>>().map_err(|_| bad())?;
        let (a, b, h) = (nums[0], nums[1], nums[2]);
        if !(h > 0.0) || b < a {
            return Err(bad());
        }
        let n = ((b - a) / h + 1e-9).floor() as usize;
        return Ok((0..=n).map(|i| a + i as f64 * h).collect());
    }
    spec.split(',').map(|p| p.trim().parse::<f64>().map_err(|_| bad())).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_forms() {
        assert_eq!(parse_grid("0.25,0.5").unwrap(), vec![0.25, 0.5]);
        let g = parse_grid("0.1:0.5:0.1").unwrap();
        assert_eq!(g.len(), 5);
        assert!((g[4] - 0.5).abs() < 1e-12);
        assert!(parse_grid("1:0:0.1").is_err());
        assert!(parse_grid("x").is_err());
    }

    #[test]
    fn header_and_comments() {
        let p = Path::new("mem");
        assert_eq!(parse_lines("# c\nvalue\n1\n\n2.5\n", p).unwrap(), vec![1.0, 2.5]);
        let e = parse_lines("1\n2\nabc\n", p).unwrap_err();
        assert!(matches!(e, CliError::Io(ref m) if m.contains(":3:")), "{e:?}");
        assert!(matches!(parse_lines("1\ninf\n", p), Err(CliError::Validation(_))));
    }

    #[test]
    fn csv_column_by_name_and_index() {
        let p = Path::new("mem");
        let text = "a,b\n1,10\n2,20\n";
        assert_eq!(parse_column(text, "b", p).unwrap(), vec![10.0, 20.0]);
        assert_eq!(parse_column(text, "0", p).unwrap(), vec![1.0, 2.0]);
        assert!(parse_column(text, "c", p).is_err());
        let e = parse_column("a\n1\nz\n", "a", p).unwrap_err();
        assert!(matches!(e, CliError::Io(ref m) if m.contains(":3:")), "{e:?}");
    }
}
