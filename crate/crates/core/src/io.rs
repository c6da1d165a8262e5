//! Shared text formatting and small CSV readers.

use std::io::{BufRead, BufReader, Read, Write};

use crate::error::{Error, Result};
use crate::marginal::{DailySeries, TimeLabel};

/// Seventeen significant digits, enough to round-trip any `f64`.
pub fn fmt_f64(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    format!("{x:.16e}")
}

/// Reads a numeric CSV, skipping a non-numeric header line. Returns the
/// header (if any) and the rows.
pub fn read_numeric_csv<R: Read>(reader: R) -> Result<(Option<Vec<String>>, Vec<Vec<f64>>)> {
    let mut header = None;
    let mut rows = Vec::new();
    for (n, line) in BufReader::new(reader).lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        match fields
            .iter()
            .map(|f| f.parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
        {
            Ok(row) => rows.push(row),
            Err(_) if rows.is_empty() && header.is_none() => {
                header = Some(fields.iter().map(|s| s.to_string()).collect());
            }
            Err(e) => return Err(Error::Parse(format!("line {}: {e}", n + 1))),
        }
    }
    if let Some(w) = rows.first().map(Vec::len) {
        if let Some(i) = rows.iter().position(|r| r.len() != w) {
            return Err(Error::Parse(format!(
                "row {} has {} fields, expected {w}",
                i + 1,
                rows[i].len()
            )));
        }
    }
    Ok((header, rows))
}

/// Writes a matrix with its axes: the header carries the column axis and
/// each row starts with its row-axis value.
pub fn write_matrix_csv<W: Write>(
    mut w: W,
    corner_label: &str,
    cols: &[f64],
    rows: &[f64],
    values: &[f64],
) -> Result<()> {
    let mut header = vec![corner_label.to_string()];
    header.extend(cols.iter().map(|v| fmt_f64(*v)));
    writeln!(w, "{}", header.join(","))?;
    for (r, y) in rows.iter().enumerate() {
        let mut line = vec![fmt_f64(*y)];
        line.extend(
            values[r * cols.len()..(r + 1) * cols.len()]
                .iter()
                .map(|v| fmt_f64(*v)),
        );
        writeln!(w, "{}", line.join(","))?;
    }
    Ok(())
}

/// Inverse of [`write_matrix_csv`]: column axis, row axis, row-major values.
pub fn read_matrix_csv<R: Read>(reader: R) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    let mut lines = BufReader::new(reader).lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty matrix file".into()))??;
    let parse = |s: &str, n: usize| {
        s.trim()
            .parse::<f64>()
            .map_err(|e| Error::Parse(format!("line {n}: {e}")))
    };
    let cols = header
        .split(',')
        .skip(1)
        .map(|s| parse(s, 1))
        .collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::new();
    let mut values = Vec::new();
    for (n, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        rows.push(parse(fields.next().unwrap_or(""), n + 2)?);
        let before = values.len();
        for f in fields {
            values.push(parse(f, n + 2)?);
        }
        if values.len() - before != cols.len() {
            return Err(Error::Parse(format!(
                "line {}: expected {} values",
                n + 2,
                cols.len()
            )));
        }
    }
    Ok((cols, rows, values))
}

/// Writes aligned series as `year,day,<name>...` rows.
pub fn write_series_table<W: Write>(
    mut w: W,
    names: &[String],
    series: &[&DailySeries],
) -> Result<()> {
    if names.len() != series.len() {
        return Err(Error::Config(format!(
            "{} names for {} series",
            names.len(),
            series.len()
        )));
    }
    let Some(first) = series.first() else {
        return Err(Error::Empty("series table"));
    };
    for s in &series[1..] {
        crate::marginal::check_aligned(first, s)?;
    }
    writeln!(w, "year,day,{}", names.join(","))?;
    for (i, t) in first.times().iter().enumerate() {
        let mut row = vec![t.year.to_string(), t.day.to_string()];
        row.extend(series.iter().map(|s| fmt_f64(s.values()[i])));
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

/// Inverse of [`write_series_table`]: column names and one series per column.
pub fn read_series_table<R: Read>(reader: R) -> Result<(Vec<String>, Vec<DailySeries>)> {
    let (header, rows) = read_numeric_csv(reader)?;
    let header = header.ok_or_else(|| Error::Parse("series table needs a header".into()))?;
    if header.len() < 3 || header[0] != "year" || header[1] != "day" {
        return Err(Error::Parse(
            "series table header must start with year,day and name at least one series".into(),
        ));
    }
    if let Some(r) = rows.iter().position(|r| r.len() != header.len()) {
        return Err(Error::Parse(format!(
            "row {} has {} fields, header has {}",
            r + 1,
            rows[r].len(),
            header.len()
        )));
    }
    let mut times = Vec::with_capacity(rows.len());
    for (n, r) in rows.iter().enumerate() {
        if r[0].fract() != 0.0 || r[1].fract() != 0.0 || r[1] < 0.0 {
            return Err(Error::Parse(format!("row {}: bad time label", n + 1)));
        }
        times.push(TimeLabel::new(r[0] as i32, r[1] as u32));
    }
    let series = (2..header.len())
        .map(|c| DailySeries::new(rows.iter().map(|r| r[c]).collect(), times.clone()))
        .collect::<Result<Vec<_>>>()?;
    Ok((header[2..].to_vec(), series))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits_round_trip() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 0.0, 1.0] {
            let s = fmt_f64(x);
            assert_eq!(s.parse::<f64>().unwrap(), x, "{s}");
        }
    }

    #[test]
    fn matrix_round_trip() {
        let cols = [0.25, 0.75];
        let rows = [0.1, 0.5, 0.9];
        let vals = [1.0, 2.0, 3.0, 4.0, 5.0, f64::NEG_INFINITY];
        let mut buf = Vec::new();
        write_matrix_csv(&mut buf, "u2\\u1", &cols, &rows, &vals).unwrap();
        let (c, r, v) = read_matrix_csv(buf.as_slice()).unwrap();
        assert_eq!(
            (c.as_slice(), r.as_slice(), v.as_slice()),
            (&cols[..], &rows[..], &vals[..])
        );
    }

    #[test]
    fn series_table_round_trip() {
        let times = vec![TimeLabel::new(1999, 3), TimeLabel::new(2000, 1)];
        let a = DailySeries::new(vec![0.1, -2.0], times.clone()).unwrap();
        let b = DailySeries::new(vec![1.0 / 3.0, 7.5], times).unwrap();
        let names = vec!["box0".to_string(), "box1".to_string()];
        let mut buf = Vec::new();
        write_series_table(&mut buf, &names, &[&a, &b]).unwrap();
        let (n, s) = read_series_table(buf.as_slice()).unwrap();
        assert_eq!(n, names);
        assert_eq!(s, vec![a, b]);
    }

    #[test]
    fn numeric_csv_with_header() {
        let (h, rows) = read_numeric_csv("u1,u2\n0.1,0.2\n0.3,0.4\n".as_bytes()).unwrap();
        assert_eq!(h.unwrap(), vec!["u1", "u2"]);
        assert_eq!(rows, vec![vec![0.1, 0.2], vec![0.3, 0.4]]);
        assert!(read_numeric_csv("1,2\nx,3\n".as_bytes()).is_err());
    }
}
