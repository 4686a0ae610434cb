//! Loss files: one nonnegative number per row in a column named `loss`. The header may be
//! left out when the file has a single column. Blank lines are skipped.

use std::fs::File;
use std::io::Read;
use std::path::Path;

use crate::CliError;

pub fn read_losses(path: &Path) -> Result<Vec<f64>, CliError> {
    let file = File::open(path).map_err(|e| CliError::Data {
        line: 0,
        message: format!("cannot open {}: {e}", path.display()),
    })?;
    parse_losses(file)
}

pub fn parse_losses<R: Read>(mut reader: R) -> Result<Vec<f64>, CliError> {
    let mut bytes = Vec::new();
    reader.read_to_end(&mut bytes).map_err(|e| CliError::Data {
        line: 0,
        message: e.to_string(),
    })?;
    // the csv reader does not count the blank lines it skips
    let line_of = |pos: Option<&csv::Position>| {
        pos.map_or(0, |p| {
            let mut end = (p.byte() as usize).min(bytes.len());
            while end < bytes.len() && matches!(bytes[end], b'\n' | b'\r') {
                end += 1;
            }
            bytes[..end].iter().filter(|&&b| b == b'\n').count() + 1
        })
    };
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(bytes.as_slice());
    let mut column: Option<usize> = None;
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| CliError::Data {
            line: line_of(e.position()),
            message: e.to_string(),
        })?;
        let line = line_of(rec.position());
        if rec.iter().all(str::is_empty) {
            continue;
        }
        let col = match column {
            Some(c) => c,
            None => {
                if let Some(c) = rec.iter().position(|f| f.eq_ignore_ascii_case("loss")) {
                    column = Some(c);
                    continue;
                }
                if rec.len() > 1 {
                    return Err(CliError::Data {
                        line,
                        message: "no `loss` column in the header".into(),
                    });
                }
                column = Some(0);
                if rec[0].parse::<f64>().is_err() {
                    // single-column file with some other header name
                    continue;
                }
                0
            }
        };
        let field = rec.get(col).unwrap_or("");
        let v: f64 = field.parse().map_err(|_| CliError::Data {
            line,
            message: format!("not a number: {field:?}"),
        })?;
        if !v.is_finite() {
            return Err(CliError::Data {
                line,
                message: format!("loss must be finite, got {field}"),
            });
        }
        if v < 0.0 {
            return Err(CliError::Data {
                line,
                message: format!("negative loss {field}"),
            });
        }
        out.push(v);
    }
    if out.is_empty() {
        return Err(CliError::Data {
            line: 0,
            message: "no losses in input".into(),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> Result<Vec<f64>, CliError> {
        parse_losses(s.as_bytes())
    }

    #[test]
    fn header_and_blank_lines() {
        assert_eq!(parse("loss\n1.5\n\n2\n").unwrap(), vec![1.5, 2.0]);
        assert_eq!(parse("id,loss\n1,0.5\n2,3\n").unwrap(), vec![0.5, 3.0]);
        assert_eq!(parse("0.25\n4\n").unwrap(), vec![0.25, 4.0]);
        assert_eq!(parse("amount\n7\n").unwrap(), vec![7.0]);
    }

    #[test]
    fn negative_reports_line() {
        match parse("loss\n1\n\n-2\n") {
            Err(CliError::Data { line, message }) => {
                assert_eq!(line, 4);
                assert!(message.contains("negative"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn empty_and_garbage() {
        assert!(matches!(parse(""), Err(CliError::Data { .. })));
        assert!(matches!(parse("loss\n"), Err(CliError::Data { .. })));
        assert!(matches!(parse("loss\nabc\n"), Err(CliError::Data { line: 2, .. })));
        assert!(matches!(parse("a,b\n1,2\n"), Err(CliError::Data { line: 1, .. })));
        assert!(matches!(parse("loss\nNaN\n"), Err(CliError::Data { .. })));
    }
}
