//! Numeric CSV input for the analysis subcommands.

use std::path::Path;

use photonbench::Error;

/// Rows of numbers. A first row that does not parse as numbers is taken as
/// a header. Blank lines and lines starting with '#' are skipped.
pub fn read_numeric_csv(path: &Path) -> Result<Vec<Vec<f64>>, Error> {
    let text = std::fs::read_to_string(path)?;
    parse_numeric_csv(&text)
}

pub fn parse_numeric_csv(text: &str) -> Result<Vec<Vec<f64>>, Error> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Csv {
            line: e.position().map_or(0, |p| p.line() as usize),
            reason: e.to_string(),
        })?;
        let line = record.position().map_or(i + 1, |p| p.line() as usize);
        if record.iter().all(str::is_empty) {
            continue;
        }
        let parsed: Result<Vec<f64>, _> = record.iter().map(str::parse::<f64>).collect();
        match parsed {
            Ok(v) => rows.push(v),
            Err(_) if rows.is_empty() && i == 0 => {}
            Err(e) => {
                return Err(Error::Csv {
                    line,
                    reason: format!("{e} in {:?}", record.iter().collect::<Vec<_>>()),
                })
            }
        }
    }
    if rows.is_empty() {
        return Err(Error::Csv {
            line: 0,
            reason: "no data rows".into(),
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_and_comments() {
        let rows = parse_numeric_csv("power_nW,r1,r2\n# note\n10, 1.5,2\n\n20,3,4\n").unwrap();
        assert_eq!(rows, vec![vec![10.0, 1.5, 2.0], vec![20.0, 3.0, 4.0]]);
    }

    #[test]
    fn bad_number_reports_line() {
        match parse_numeric_csv("a,b\n1,2\n3,x\n").unwrap_err() {
            Error::Csv { line, .. } => assert_eq!(line, 3),
            e => panic!("{e}"),
        }
        assert!(parse_numeric_csv("only,header\n").is_err());
    }
}
