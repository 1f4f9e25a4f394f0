//! CSV datasets: a header `f0,…,f{d-1},label`, real features, `±1` labels,
//! no missing values.

use std::path::Path;

use crate::error::{Error, Result};
use crate::labels::Label;
use crate::scoring::UnlabeledPool;

/// Reads a labeled CSV into a pool with hidden labels. Error rows are CSV
/// line numbers (the header is line 1).
pub fn read_csv(path: impl AsRef<Path>) -> Result<UnlabeledPool> {
    let file = std::fs::File::open(path.as_ref())?;
    read_csv_from(file)
}

pub fn read_csv_from<R: std::io::Read>(reader: R) -> Result<UnlabeledPool> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
    let header = rdr.headers().map_err(|e| Error::Ingestion { row: 1, message: e.to_string() })?.clone();
    let width = header.len();
    if width < 2 {
        return Err(Error::Ingestion { row: 1, message: "need at least one feature column and a label".into() });
    }
    for (i, name) in header.iter().enumerate() {
        let expected = if i + 1 == width { "label".to_string() } else { format!("f{i}") };
        if name != expected {
            return Err(Error::Ingestion {
                row: 1,
                message: format!("column {} is `{name}`, expected `{expected}`", i + 1),
            });
        }
    }
    let dim = width - 1;
    let mut points = Vec::new();
    let mut labels = Vec::new();
    for (k, record) in rdr.records().enumerate() {
        let row = k + 2;
        let record = record.map_err(|e| Error::Ingestion { row, message: e.to_string() })?;
        if record.len() != width {
            return Err(Error::Ingestion { row, message: format!("expected {width} fields, found {}", record.len()) });
        }
        let mut point = Vec::with_capacity(dim);
        for (c, field) in record.iter().take(dim).enumerate() {
            let v: f64 = field
                .parse()
                .map_err(|_| Error::Ingestion { row, message: format!("f{c} = `{field}` is not a real number") })?;
            if !v.is_finite() {
                return Err(Error::Ingestion { row, message: format!("f{c} is not finite") });
            }
            point.push(v);
        }
        let raw = &record[dim];
        let label = raw
            .parse::<f64>()
            .ok()
            .and_then(|v| Label::try_from(v).ok())
            .ok_or_else(|| Error::Ingestion { row, message: format!("label `{raw}` is not +1 or -1") })?;
        points.push(point);
        labels.push(label);
    }
    UnlabeledPool::with_oracle(points, labels)
}

/// Writes a pool with hidden labels in the ingestion format.
pub fn write_csv(pool: &UnlabeledPool, path: impl AsRef<Path>) -> Result<()> {
    let file = std::fs::File::create(path.as_ref())?;
    write_csv_to(pool, file)
}

pub fn write_csv_to<W: std::io::Write>(pool: &UnlabeledPool, writer: W) -> Result<()> {
    let labels = pool
        .oracle()
        .ok_or_else(|| Error::InvalidArgument("pool has no labels to write".into()))?;
    let dim = pool.dim().unwrap_or(0);
    let mut w = csv::Writer::from_writer(writer);
    let mut header: Vec<String> = (0..dim).map(|i| format!("f{i}")).collect();
    header.push("label".into());
    w.write_record(&header)?;
    for (p, l) in pool.points().iter().zip(labels) {
        let mut rec: Vec<String> = p.iter().map(|v| v.to_string()).collect();
        rec.push(l.to_string());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> Result<UnlabeledPool> {
        read_csv_from(s.as_bytes())
    }

    #[test]
    fn reads_valid_file() {
        let pool = parse("f0,f1,label\n0.5,1,1\n-2,3e-1,-1\n").unwrap();
        assert_eq!(pool.len(), 2);
        assert_eq!(pool.point(1), &[-2.0, 0.3]);
        assert_eq!(pool.oracle().unwrap(), &[Label::Pos, Label::Neg]);
    }

    #[test]
    fn header_errors() {
        assert!(matches!(parse("x,label\n1,1\n"), Err(Error::Ingestion { row: 1, .. })));
        assert!(matches!(parse("f0,f1\n1,1\n"), Err(Error::Ingestion { row: 1, .. })));
        assert!(matches!(parse("label\n1\n"), Err(Error::Ingestion { row: 1, .. })));
    }

    #[test]
    fn row_errors_carry_line_numbers() {
        match parse("f0,label\n1,1\n2,0\n") {
            Err(Error::Ingestion { row, .. }) => assert_eq!(row, 3),
            other => panic!("unexpected {other:?}"),
        }
        match parse("f0,label\n1,1\n2,1\nabc,-1\n") {
            Err(Error::Ingestion { row, message }) => {
                assert_eq!(row, 4);
                assert!(message.contains("f0"));
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(parse("f0,label\n,1\n"), Err(Error::Ingestion { row: 2, .. })));
        assert!(matches!(parse("f0,label\n1,1,3\n"), Err(Error::Ingestion { row: 2, .. })));
    }

    #[test]
    fn write_then_read() {
        let pool = UnlabeledPool::with_oracle(vec![vec![0.125, -3.0], vec![1e-7, 2.5]], vec![Label::Neg, Label::Pos])
            .unwrap();
        let mut buf = Vec::new();
        write_csv_to(&pool, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("f0,f1,label\n"));
        assert_eq!(parse(&text).unwrap(), pool);
    }
}
