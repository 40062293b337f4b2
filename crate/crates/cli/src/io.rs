//! Text formats for observations, tensors, aggregations and factor
//! matrices. Indices in files are 1-based; lines starting with `#` and
//! blank lines are skipped.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use tenfill::{AggregationMatrix, CooObservations, DenseTensor3, Matrix};

use crate::error::{CliError, Result};

pub fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Non-comment, non-blank lines with their 1-based line numbers.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn fields<'a, const N: usize>(origin: &str, line: usize, text: &'a str, what: &str) -> Result<[&'a str; N]> {
    let f: Vec<&str> = text.split_whitespace().collect();
    f.try_into()
        .map_err(|f: Vec<&str>| CliError::parse(origin, line, format!("expected `{what}`, found {} fields", f.len())))
}

fn number<T: FromStr>(origin: &str, line: usize, s: &str, what: &str) -> Result<T> {
    s.parse()
        .map_err(|_| CliError::parse(origin, line, format!("invalid {what} `{s}`")))
}

fn value(origin: &str, line: usize, s: &str) -> Result<f64> {
    let v: f64 = number(origin, line, s, "value")?;
    if !v.is_finite() {
        return Err(CliError::parse(origin, line, format!("non-finite value `{s}`")));
    }
    Ok(v)
}

/// 1-based index in `1..=n`, returned 0-based.
fn index(origin: &str, line: usize, s: &str, n: usize, what: &str) -> Result<usize> {
    let i: usize = number(origin, line, s, what)?;
    if i == 0 || i > n {
        return Err(CliError::parse(
            origin,
            line,
            format!("{what} {i} out of range 1..={n}"),
        ));
    }
    Ok(i - 1)
}

fn shape_line(origin: &str, lines: &mut impl Iterator<Item = (usize, impl AsRef<str>)>) -> Result<[usize; 3]> {
    let (ln, text) = lines
        .next()
        .ok_or_else(|| CliError::content(origin, "missing shape line `I1 I2 I3`"))?;
    let f = fields::<3>(origin, ln, text.as_ref(), "I1 I2 I3")?;
    let mut shape = [0; 3];
    for (m, s) in f.iter().enumerate() {
        shape[m] = number(origin, ln, s, "mode size")?;
        if shape[m] == 0 {
            return Err(CliError::parse(origin, ln, format!("mode {} has size 0", m + 1)));
        }
    }
    Ok(shape)
}

/// Parses the COO format: a shape line `I1 I2 I3`, then `i j k value` per
/// line. `origin` names the source in diagnostics.
pub fn parse_coo(text: &str, origin: &str) -> Result<CooObservations> {
    let mut lines = content_lines(text);
    let shape = shape_line(origin, &mut lines)?;
    let mut first_seen: HashMap<[usize; 3], usize> = HashMap::new();
    let mut entries = Vec::new();
    for (ln, text) in lines {
        let f = fields::<4>(origin, ln, text, "i j k value")?;
        let mut idx = [0; 3];
        for m in 0..3 {
            idx[m] = index(origin, ln, f[m], shape[m], &format!("mode-{} index", m + 1))?;
        }
        let v = value(origin, ln, f[3])?;
        if let Some(prev) = first_seen.insert(idx, ln) {
            return Err(CliError::parse(
                origin,
                ln,
                format!(
                    "duplicate coordinate ({}, {}, {}), first given on line {prev}",
                    idx[0] + 1,
                    idx[1] + 1,
                    idx[2] + 1
                ),
            ));
        }
        entries.push((idx, v));
    }
    Ok(CooObservations::new(shape, entries)?)
}

pub fn parse_coo_file(path: &Path) -> Result<CooObservations> {
    parse_coo(&read_text(path)?, &path.display().to_string())
}

/// A tensor stored in COO form; absent entries are zero.
pub fn parse_tensor_file(path: &Path) -> Result<DenseTensor3> {
    Ok(parse_coo_file(path)?.to_dense())
}

pub fn format_coo(obs: &CooObservations) -> String {
    let [a, b, c] = obs.shape();
    let mut out = format!("{a} {b} {c}\n");
    for (idx, v) in obs.iter() {
        writeln!(out, "{} {} {} {v:?}", idx[0] + 1, idx[1] + 1, idx[2] + 1).unwrap();
    }
    out
}

/// Every entry of `t`, zeros included.
pub fn format_tensor(t: &DenseTensor3) -> String {
    format_coo(&CooObservations::from_dense(t))
}

/// Parses an aggregation: a line `J I`, then `coarse_index fine_index`
/// per line, each fine index exactly once.
pub fn parse_aggregation(text: &str, origin: &str) -> Result<AggregationMatrix> {
    let mut lines = content_lines(text);
    let (ln, head) = lines
        .next()
        .ok_or_else(|| CliError::content(origin, "missing size line `J I`"))?;
    let [j, i] = fields::<2>(origin, ln, head, "J I")?;
    let coarse: usize = number(origin, ln, j, "coarse size")?;
    let fine: usize = number(origin, ln, i, "fine size")?;
    if coarse == 0 || coarse >= fine {
        return Err(CliError::parse(
            origin,
            ln,
            format!("coarse size {coarse} must be positive and below fine size {fine}"),
        ));
    }
    let mut assignment: Vec<Option<(usize, usize)>> = vec![None; fine];
    for (ln, text) in lines {
        let [c, f] = fields::<2>(origin, ln, text, "coarse_index fine_index")?;
        let c = index(origin, ln, c, coarse, "coarse index")?;
        let f = index(origin, ln, f, fine, "fine index")?;
        if let Some((_, prev)) = assignment[f] {
            return Err(CliError::parse(
                origin,
                ln,
                format!("fine index {} assigned twice, first on line {prev}", f + 1),
            ));
        }
        assignment[f] = Some((c, ln));
    }
    let assignment = assignment
        .iter()
        .enumerate()
        .map(|(f, a)| {
            a.map(|(c, _)| c)
                .ok_or_else(|| CliError::content(origin, format!("fine index {} unassigned", f + 1)))
        })
        .collect::<Result<Vec<usize>>>()?;
    AggregationMatrix::new(coarse, assignment).map_err(|e| CliError::content(origin, e.to_string()))
}

pub fn parse_aggregation_file(path: &Path) -> Result<AggregationMatrix> {
    parse_aggregation(&read_text(path)?, &path.display().to_string())
}

pub fn format_aggregation(agg: &AggregationMatrix) -> String {
    let mut out = format!("{} {}\n", agg.coarse_size(), agg.fine_size());
    for (f, &c) in agg.assignment().iter().enumerate() {
        writeln!(out, "{} {}", c + 1, f + 1).unwrap();
    }
    out
}

/// Parses a dense matrix: a line `rows cols`, then one line of `cols`
/// values per row.
pub fn parse_matrix(text: &str, origin: &str) -> Result<Matrix> {
    let mut lines = content_lines(text);
    let (ln, head) = lines
        .next()
        .ok_or_else(|| CliError::content(origin, "missing size line `rows cols`"))?;
    let [r, c] = fields::<2>(origin, ln, head, "rows cols")?;
    let rows: usize = number(origin, ln, r, "row count")?;
    let cols: usize = number(origin, ln, c, "column count")?;
    let mut data = Vec::with_capacity(rows * cols);
    let mut seen = 0;
    for (ln, text) in lines {
        if seen == rows {
            return Err(CliError::parse(origin, ln, format!("more than {rows} rows")));
        }
        let f: Vec<&str> = text.split_whitespace().collect();
        if f.len() != cols {
            return Err(CliError::parse(
                origin,
                ln,
                format!("expected {cols} values, found {}", f.len()),
            ));
        }
        for s in f {
            data.push(value(origin, ln, s)?);
        }
        seen += 1;
    }
    if seen != rows {
        return Err(CliError::content(origin, format!("expected {rows} rows, found {seen}")));
    }
    Ok(Matrix::from_vec(rows, cols, data)?)
}

pub fn parse_matrix_file(path: &Path) -> Result<Matrix> {
    parse_matrix(&read_text(path)?, &path.display().to_string())
}

pub fn format_matrix(m: &Matrix) -> String {
    let mut out = format!("{} {}\n", m.rows(), m.cols());
    for r in 0..m.rows() {
        let row: Vec<String> = m.row(r).iter().map(|v| format!("{v:?}")).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line_of(e: CliError) -> usize {
        e.line().unwrap_or_else(|| panic!("no line in {e}"))
    }

    #[test]
    fn single_observation() {
        let obs = parse_coo("2 2 2\n1 1 1 3.5", "t").unwrap();
        assert_eq!(obs.shape(), [2, 2, 2]);
        assert_eq!(obs.iter().collect::<Vec<_>>(), vec![([0, 0, 0], 3.5)]);
    }

    #[test]
    fn comments_and_blanks_skipped() {
        let obs = parse_coo("# header\n\n2 3 4\n# mid\n2 3 4 -1e-3\n", "t").unwrap();
        assert_eq!(obs.iter().collect::<Vec<_>>(), vec![([1, 2, 3], -1e-3)]);
    }

    #[test]
    fn coo_malformations_name_their_line() {
        let cases = [
            ("2 2 2\n1 1 1 1\n1 1 1 2", 3, "duplicate"),
            ("2 2 2\n1 1 3 1", 2, "out of range"),
            ("2 2 2\n0 1 1 1", 2, "out of range"),
            ("2 2 2\n1 1 1", 2, "expected"),
            ("2 2 2\n1 1 1 x", 2, "invalid value"),
            ("2 2 2\n1 1 1 NaN", 2, "non-finite"),
            ("2 2\n", 1, "expected"),
            ("2 0 2\n", 1, "size 0"),
            ("2 2 2\n1 a 1 1", 2, "invalid mode-2 index"),
        ];
        for (text, line, needle) in cases {
            let e = parse_coo(text, "t").unwrap_err();
            assert!(e.to_string().contains(needle), "{text:?}: {e}");
            assert_eq!(line_of(e), line, "{text:?}");
        }
        assert!(parse_coo("# only comments\n", "t").is_err());
    }

    #[test]
    fn duplicate_names_both_lines() {
        let e = parse_coo("2 2 2\n1 2 1 1\n2 2 2 1\n1 2 1 5", "obs.txt").unwrap_err();
        assert_eq!(
            e.to_string(),
            "obs.txt:4: duplicate coordinate (1, 2, 1), first given on line 2"
        );
    }

    #[test]
    fn two_block_aggregation() {
        let agg = parse_aggregation("2 4\n1 1\n1 2\n2 3\n2 4", "t").unwrap();
        assert_eq!(agg.assignment(), &[0, 0, 1, 1]);
        assert_eq!(parse_aggregation(&format_aggregation(&agg), "t").unwrap(), agg);
    }

    #[test]
    fn aggregation_malformations() {
        let e = parse_aggregation("2 4\n1 1\n1 2\n2 4", "t").unwrap_err();
        assert_eq!(e.to_string(), "t: fine index 3 unassigned");
        let lined = [
            ("4 4\n1 1", 1, "below fine size"),
            ("5 4\n1 1", 1, "below fine size"),
            ("2 4\n1 1\n1 1", 3, "assigned twice"),
            ("2 4\n3 1", 2, "coarse index 3 out of range"),
            ("2 4\n1 5", 2, "fine index 5 out of range"),
            ("2 4\n1 1 1", 2, "expected"),
        ];
        for (text, line, needle) in lined {
            let e = parse_aggregation(text, "t").unwrap_err();
            assert!(e.to_string().contains(needle), "{text:?}: {e}");
            assert_eq!(line_of(e), line, "{text:?}");
        }
        let e = parse_aggregation("2 4\n1 1\n1 2\n1 3\n1 4", "t").unwrap_err();
        assert!(e.to_string().contains("coarse index 2 has no fine index"), "{e}");
    }

    #[test]
    fn matrix_round_trip_and_errors() {
        let m = Matrix::from_fn(3, 2, |i, j| (i as f64 + 0.1) / (j as f64 + 3.0));
        assert_eq!(parse_matrix(&format_matrix(&m), "t").unwrap(), m);
        assert_eq!(line_of(parse_matrix("2 2\n1 2\n3", "t").unwrap_err()), 3);
        assert_eq!(line_of(parse_matrix("1 2\n1 2\n3 4", "t").unwrap_err()), 3);
        assert!(parse_matrix("2 2\n1 2", "t")
            .unwrap_err()
            .to_string()
            .contains("expected 2 rows"));
    }
}
