use std::io::Write;
use std::path::Path;

use chrono::NaiveDate;

use crate::data::FeatureSchema;
use crate::error::{Error, Result};
use crate::numerics::Matrix;

pub const DATE_COLUMN: &str = "date";
pub const PRICE_COLUMN: &str = "adj_close";
const DATE_FORMAT: &str = "%Y-%m-%d";

/// One stock's aligned daily series.
///
/// `values` is `D x n_days`: row `i` is feature column `columns[i]`, column
/// `j` is trading day `dates[j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureFrame {
    pub stock_id: String,
    pub dates: Vec<NaiveDate>,
    pub adj_close: Vec<f64>,
    pub columns: Vec<String>,
    pub values: Matrix,
}

impl FeatureFrame {
    /// Assemble a frame from day-ordered rows, enforcing every frame invariant.
    pub fn from_days(
        stock_id: impl Into<String>,
        columns: Vec<String>,
        mut days: Vec<(NaiveDate, f64, Vec<f64>)>,
    ) -> Result<Self> {
        let stock_id = stock_id.into();
        days.sort_by_key(|d| d.0);
        if let Some(w) = days.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(Error::Integrity(format!("{stock_id}: duplicate date {}", w[0].0)));
        }
        let d = columns.len();
        let n = days.len();
        let mut values = Matrix::zeros(d, n);
        let mut dates = Vec::with_capacity(n);
        let mut adj_close = Vec::with_capacity(n);
        for (j, (date, price, feats)) in days.into_iter().enumerate() {
            if !(price > 0.0 && price.is_finite()) {
                return Err(Error::Integrity(format!(
                    "{stock_id}: adj_close must be positive, got {price} on {date}"
                )));
            }
            if feats.len() != d {
                return Err(Error::dims("from_days", (d, n), (feats.len(), 1)));
            }
            for (i, &v) in feats.iter().enumerate() {
                if v < 0.0 {
                    return Err(Error::Preprocessing {
                        column: columns[i].clone(),
                        value: v,
                    });
                }
                values.set(i, j, v);
            }
            dates.push(date);
            adj_close.push(price);
        }
        Ok(Self {
            stock_id,
            dates,
            adj_close,
            columns,
            values,
        })
    }

    pub fn len(&self) -> usize {
        self.dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }
}

/// Read a per-stock CSV (`date, adj_close, <features...>`).
///
/// The stock id is the file stem. Rows may appear in any order; the frame is
/// sorted by date. Feature values must be nonnegative.
pub fn load_frame(path: &Path, schema: &FeatureSchema) -> Result<FeatureFrame> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
    let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    let position = |name: &str| header.iter().position(|h| h == name);

    let mut missing = Vec::new();
    let mut wanted = vec![DATE_COLUMN.to_string(), PRICE_COLUMN.to_string()];
    wanted.extend(schema.names());
    let mut idx = Vec::with_capacity(wanted.len());
    for name in &wanted {
        match position(name) {
            Some(i) => idx.push(i),
            None => {
                if !missing.contains(name) {
                    missing.push(name.clone());
                }
            }
        }
    }
    if !missing.is_empty() {
        return Err(Error::Schema {
            path: path.to_path_buf(),
            missing,
        });
    }

    let number = |record: &csv::StringRecord, line: usize, col: usize| -> Result<f64> {
        let raw = record.get(col).unwrap_or("");
        match raw.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => Err(Error::Parse {
                path: path.to_path_buf(),
                row: line,
                column: header[col].clone(),
                value: raw.to_string(),
            }),
        }
    };

    let mut days = Vec::new();
    for (k, record) in reader.records().enumerate() {
        let record = record?;
        // header is line 1
        let line = k + 2;
        let raw_date = record.get(idx[0]).unwrap_or("");
        let date = NaiveDate::parse_from_str(raw_date, DATE_FORMAT).map_err(|_| Error::Parse {
            path: path.to_path_buf(),
            row: line,
            column: DATE_COLUMN.into(),
            value: raw_date.to_string(),
        })?;
        let price = number(&record, line, idx[1])?;
        let feats = idx[2..]
            .iter()
            .map(|&c| number(&record, line, c))
            .collect::<Result<Vec<_>>>()?;
        days.push((date, price, feats));
    }

    let stock_id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    FeatureFrame::from_days(stock_id, schema.names(), days)
}

/// Feature columns of a per-stock CSV: every header field except `date`.
/// `adj_close` is included, so by default the price is a model input too.
pub fn read_feature_names(path: &Path) -> Result<Vec<String>> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
    let header = reader.headers()?;
    if !header.iter().any(|h| h == DATE_COLUMN) {
        return Err(Error::Schema {
            path: path.to_path_buf(),
            missing: vec![DATE_COLUMN.into()],
        });
    }
    Ok(header.iter().filter(|h| *h != DATE_COLUMN).map(str::to_string).collect())
}

/// Write `frame` in the format [`load_frame`] reads. A feature column named
/// `adj_close` is not written twice.
pub fn write_frame(frame: &FeatureFrame, path: &Path) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    let extra: Vec<usize> = (0..frame.columns.len())
        .filter(|&i| frame.columns[i] != PRICE_COLUMN)
        .collect();
    write!(out, "{DATE_COLUMN},{PRICE_COLUMN}")?;
    for &i in &extra {
        write!(out, ",{}", frame.columns[i])?;
    }
    writeln!(out)?;
    for (j, date) in frame.dates.iter().enumerate() {
        // `{}` on f64 prints the shortest string that parses back exactly
        write!(out, "{},{}", date.format(DATE_FORMAT), frame.adj_close[j])?;
        for &i in &extra {
            write!(out, ",{}", frame.values.get(i, j))?;
        }
        writeln!(out)?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fs;

    fn schema() -> FeatureSchema {
        FeatureSchema::from_names(&["sent_score", "tweet_count"]).unwrap()
    }

    fn write(dir: &Path, name: &str, body: &str) -> std::path::PathBuf {
        let p = dir.join(name);
        fs::write(&p, body).unwrap();
        p
    }

    #[test]
    fn loads_three_rows_ascending() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            dir.path(),
            "AAA.csv",
            "date,adj_close,sent_score,tweet_count\n2021-01-04,10,0.5,3\n2021-01-05,11,0.25,4\n2021-01-06,12,0.75,5\n",
        );
        let f = load_frame(&p, &schema()).unwrap();
        assert_eq!(f.stock_id, "AAA");
        assert_eq!(f.len(), 3);
        assert!(f.dates.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(f.values.get(1, 2), 5.0);
    }

    #[test]
    fn header_gives_feature_names() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "A.csv", "date,adj_close,sent_score\n2021-01-04,10,0.5\n");
        assert_eq!(read_feature_names(&p).unwrap(), vec!["adj_close", "sent_score"]);
        let q = write(dir.path(), "B.csv", "day,adj_close\n");
        assert!(matches!(read_feature_names(&q), Err(Error::Schema { .. })));
    }

    #[test]
    fn shuffled_rows_equal_sorted_rows() {
        let dir = tempfile::tempdir().unwrap();
        let sorted = write(
            dir.path(),
            "S.csv",
            "date,adj_close,sent_score,tweet_count\n2021-01-04,10,0.5,3\n2021-01-05,11,0.25,4\n2021-01-06,12,0.75,5\n",
        );
        let shuffled = write(
            dir.path(),
            "X.csv",
            "date,adj_close,sent_score,tweet_count\n2021-01-06,12,0.75,5\n2021-01-04,10,0.5,3\n2021-01-05,11,0.25,4\n",
        );
        let mut a = load_frame(&sorted, &schema()).unwrap();
        let b = load_frame(&shuffled, &schema()).unwrap();
        a.stock_id = b.stock_id.clone();
        assert_eq!(a, b);
    }

    #[test]
    fn missing_price_column_is_schema_error() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "A.csv", "date,sent_score\n2021-01-04,0.5\n");
        match load_frame(&p, &schema()) {
            Err(Error::Schema { missing, .. }) => {
                assert_eq!(missing, vec!["adj_close".to_string(), "tweet_count".to_string()])
            }
            other => panic!("expected schema error, got {other:?}"),
        }
    }

    #[test]
    fn non_numeric_cell_reports_line() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            dir.path(),
            "A.csv",
            "date,adj_close,sent_score,tweet_count\n2021-01-04,10,0.5,3\n2021-01-05,11,abc,4\n",
        );
        match load_frame(&p, &schema()) {
            Err(Error::Parse { row, column, .. }) => {
                assert_eq!(row, 3);
                assert_eq!(column, "sent_score");
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn duplicate_date_is_integrity_error() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            dir.path(),
            "A.csv",
            "date,adj_close,sent_score,tweet_count\n2021-01-04,10,0.5,3\n2021-01-04,11,0.5,4\n",
        );
        assert!(matches!(load_frame(&p, &schema()), Err(Error::Integrity(_))));
    }

    #[test]
    fn negative_feature_rejected_with_column() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            dir.path(),
            "A.csv",
            "date,adj_close,sent_score,tweet_count\n2021-01-04,10,0.5,-3\n",
        );
        match load_frame(&p, &schema()) {
            Err(Error::Preprocessing { column, .. }) => assert_eq!(column, "tweet_count"),
            other => panic!("expected preprocessing error, got {other:?}"),
        }
    }

    #[test]
    fn nonpositive_price_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            dir.path(),
            "A.csv",
            "date,adj_close,sent_score,tweet_count\n2021-01-04,0,0.5,3\n",
        );
        assert!(matches!(load_frame(&p, &schema()), Err(Error::Integrity(_))));
    }

    #[test]
    fn price_can_be_a_feature() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "A.csv", "date,adj_close,sent_score\n2021-01-04,10.5,0.5\n");
        let s = FeatureSchema::from_names(&["adj_close", "sent_score"]).unwrap();
        let f = load_frame(&p, &s).unwrap();
        assert_eq!(f.values.get(0, 0), 10.5);
        let out = dir.path().join("B.csv");
        write_frame(&f, &out).unwrap();
        let g = load_frame(&out, &s).unwrap();
        assert_eq!(f.values, g.values);
    }
}
