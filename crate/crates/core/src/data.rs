//! Tabular datasets, CSV ingestion and min-max scaling onto the unit cube.

use std::collections::HashSet;
use std::fs::File;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

/// N×p predictor matrix (row-major) with a length-N response.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    predictors: Vec<f64>,
    response: Vec<f64>,
    column_names: Vec<String>,
    response_name: String,
    n_rows: usize,
    n_cols: usize,
}

impl Dataset {
    /// Builds a dataset from row-major predictors, checking shape and finiteness.
    pub fn new(
        predictors: Vec<f64>,
        response: Vec<f64>,
        column_names: Vec<String>,
        response_name: impl Into<String>,
    ) -> Result<Self> {
        let n_cols = column_names.len();
        let n_rows = response.len();
        if n_rows == 0 || n_cols == 0 {
            return Err(Error::InvalidDataset(format!(
                "need at least one row and one predictor, got {n_rows}x{n_cols}"
            )));
        }
        if predictors.len() != n_rows * n_cols {
            return Err(Error::InvalidDataset(format!(
                "predictor buffer holds {} values, expected {n_rows}x{n_cols}",
                predictors.len()
            )));
        }
        if let Some(pos) = predictors.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidDataset(format!(
                "non-finite predictor at row {}, column {}",
                pos / n_cols,
                pos % n_cols
            )));
        }
        if let Some(pos) = response.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidDataset(format!(
                "non-finite response at row {pos}"
            )));
        }
        Ok(Self {
            predictors,
            response,
            column_names,
            response_name: response_name.into(),
            n_rows,
            n_cols,
        })
    }

    /// Dataset with generated column names `x1..xp` and response `y`.
    pub fn from_rows(rows: &[Vec<f64>], response: Vec<f64>) -> Result<Self> {
        let p = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != p) {
            return Err(Error::InvalidDataset("ragged predictor rows".into()));
        }
        let names = (1..=p).map(|j| format!("x{j}")).collect();
        Self::new(rows.concat(), response, names, "y")
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.predictors[i * self.n_cols..(i + 1) * self.n_cols]
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.predictors[i * self.n_cols + j]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.n_rows).map(|i| self.value(i, j)).collect()
    }

    pub fn response(&self) -> &[f64] {
        &self.response
    }

    pub fn column_names(&self) -> &[String] {
        &self.column_names
    }

    pub fn response_name(&self) -> &str {
        &self.response_name
    }

    pub fn predictors(&self) -> &[f64] {
        &self.predictors
    }

    /// New dataset holding the given rows, in the given order (repeats allowed).
    pub fn select_rows(&self, indices: &[usize]) -> Dataset {
        let mut predictors = Vec::with_capacity(indices.len() * self.n_cols);
        let mut response = Vec::with_capacity(indices.len());
        for &i in indices {
            predictors.extend_from_slice(self.row(i));
            response.push(self.response[i]);
        }
        Dataset {
            predictors,
            response,
            column_names: self.column_names.clone(),
            response_name: self.response_name.clone(),
            n_rows: indices.len(),
            n_cols: self.n_cols,
        }
    }

    /// Keeps only the listed predictor columns.
    pub fn select_columns(&self, columns: &[usize]) -> Result<Dataset> {
        if let Some(&bad) = columns.iter().find(|&&j| j >= self.n_cols) {
            return Err(Error::InvalidArgument(format!(
                "column {bad} out of range for {} predictors",
                self.n_cols
            )));
        }
        let mut predictors = Vec::with_capacity(self.n_rows * columns.len());
        for i in 0..self.n_rows {
            predictors.extend(columns.iter().map(|&j| self.value(i, j)));
        }
        Dataset::new(
            predictors,
            self.response.clone(),
            columns.iter().map(|&j| self.column_names[j].clone()).collect(),
            self.response_name.clone(),
        )
    }

    /// Same predictors, replaced response.
    pub fn with_response(&self, response: Vec<f64>) -> Result<Dataset> {
        Dataset::new(
            self.predictors.clone(),
            response,
            self.column_names.clone(),
            self.response_name.clone(),
        )
    }

    /// Natural log of the named columns; the response may be among them.
    pub fn log_transformed(&self, columns: &[String]) -> Result<Dataset> {
        let mut x = self.predictors.clone();
        let mut y = self.response.clone();
        for name in columns {
            let (values, stride, offset): (&mut Vec<f64>, usize, usize) = if *name == self.response_name {
                (&mut y, 1, 0)
            } else {
                let j = self
                    .column_names
                    .iter()
                    .position(|c| c == name)
                    .ok_or_else(|| Error::MissingColumn(name.clone()))?;
                (&mut x, self.n_cols, j)
            };
            for (row, v) in values.iter_mut().skip(offset).step_by(stride).enumerate() {
                if *v <= 0.0 {
                    return Err(Error::BadCell {
                        row: row + 2,
                        column: name.clone(),
                        value: v.to_string(),
                        reason: "log needs a positive value",
                    });
                }
                *v = v.ln();
            }
        }
        Dataset::new(x, y, self.column_names.clone(), self.response_name.clone())
    }

    /// Writes predictors followed by the response, shortest round-trip formatting.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv_to(file)
    }

    pub fn write_csv_to<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header: Vec<&str> = self.column_names.iter().map(String::as_str).collect();
        header.push(&self.response_name);
        w.write_record(&header)?;
        let mut record = Vec::with_capacity(self.n_cols + 1);
        for i in 0..self.n_rows {
            record.clear();
            record.extend(self.row(i).iter().map(|v| v.to_string()));
            record.push(self.response[i].to_string());
            w.write_record(&record)?;
        }
        w.flush().map_err(|e| Error::io("<csv writer>", e))?;
        Ok(())
    }
}

/// Loads a headed CSV; every non-response column becomes a predictor, in header order.
pub fn load_csv(path: impl AsRef<Path>, response_column: &str) -> Result<Dataset> {
    load_csv_columns(path, response_column, None)
}

/// Like [`load_csv`], but only the named predictor columns are parsed.
pub fn load_csv_columns(
    path: impl AsRef<Path>,
    response_column: &str,
    predictors: Option<&[String]>,
) -> Result<Dataset> {
    load(path.as_ref(), Some(response_column), predictors)
}

/// Loads a headed CSV with no response: every column is a predictor and the
/// response is zero-filled.
pub fn load_design_csv(path: impl AsRef<Path>) -> Result<Dataset> {
    load(path.as_ref(), None, None)
}

fn load(path: &Path, response_column: Option<&str>, predictors: Option<&[String]>) -> Result<Dataset> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(file);
    let header: Vec<String> = reader.headers()?.iter().map(str::to_owned).collect();

    let mut seen = HashSet::new();
    for name in &header {
        if !seen.insert(name.as_str())
            && (Some(name.as_str()) == response_column || is_wanted(predictors, name))
        {
            return Err(Error::DuplicateColumn(name.clone()));
        }
    }
    let response_idx = match response_column {
        Some(r) => Some(
            header
                .iter()
                .position(|h| h == r)
                .ok_or_else(|| Error::MissingResponse(r.to_owned()))?,
        ),
        None => None,
    };

    let predictor_idx: Vec<usize> = match predictors {
        Some(names) => names
            .iter()
            .map(|name| {
                header
                    .iter()
                    .position(|h| h == name)
                    .ok_or_else(|| Error::MissingColumn(name.clone()))
            })
            .collect::<Result<_>>()?,
        None => (0..header.len()).filter(|&j| Some(j) != response_idx).collect(),
    };
    if let Some(r) = response_idx.filter(|r| predictor_idx.contains(r)) {
        return Err(Error::InvalidArgument(format!(
            "`{}` cannot be both response and predictor",
            header[r]
        )));
    }

    let mut values = Vec::new();
    let mut response = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        // header is line 1, first data row is line 2
        let line = row + 2;
        let parse = |j: usize| -> Result<f64> {
            let raw = record.get(j).unwrap_or("");
            let v: f64 = raw.parse().map_err(|_| Error::BadCell {
                row: line,
                column: header[j].clone(),
                value: raw.to_owned(),
                reason: "not a decimal number",
            })?;
            if !v.is_finite() {
                return Err(Error::BadCell {
                    row: line,
                    column: header[j].clone(),
                    value: raw.to_owned(),
                    reason: "not finite",
                });
            }
            Ok(v)
        };
        for &j in &predictor_idx {
            values.push(parse(j)?);
        }
        response.push(match response_idx {
            Some(r) => parse(r)?,
            None => 0.0,
        });
    }
    let names = predictor_idx.iter().map(|&j| header[j].clone()).collect();
    Dataset::new(values, response, names, response_column.unwrap_or(""))
}

fn is_wanted(predictors: Option<&[String]>, name: &str) -> bool {
    predictors.map_or(true, |p| p.iter().any(|s| s == name))
}

/// Per-column affine map of a dataset onto [0, 1].
#[derive(Debug, Clone)]
pub struct ScaledView<'a> {
    source: &'a Dataset,
    col_min: Vec<f64>,
    col_max: Vec<f64>,
    scaled: Vec<f64>,
    degenerate: Vec<usize>,
}

/// Scales every predictor column by its observed min and max.
///
/// Constant columns map to 0 and are listed in [`ScaledView::degenerate_columns`].
pub fn scale_to_unit(d: &Dataset) -> ScaledView<'_> {
    let p = d.n_cols();
    let mut col_min = vec![f64::INFINITY; p];
    let mut col_max = vec![f64::NEG_INFINITY; p];
    for i in 0..d.n_rows() {
        for (j, &v) in d.row(i).iter().enumerate() {
            col_min[j] = col_min[j].min(v);
            col_max[j] = col_max[j].max(v);
        }
    }
    let degenerate: Vec<usize> = (0..p).filter(|&j| col_max[j] <= col_min[j]).collect();
    for &j in &degenerate {
        log::warn!(
            "predictor `{}` is constant; scaling it to 0",
            d.column_names()[j]
        );
    }
    let mut scaled = Vec::with_capacity(d.predictors().len());
    for i in 0..d.n_rows() {
        for (j, &v) in d.row(i).iter().enumerate() {
            scaled.push(scale_value(v, col_min[j], col_max[j]));
        }
    }
    ScaledView {
        source: d,
        col_min,
        col_max,
        scaled,
        degenerate,
    }
}

fn scale_value(v: f64, lo: f64, hi: f64) -> f64 {
    if hi <= lo {
        return 0.0;
    }
    ((v - lo) / (hi - lo)).clamp(0.0, 1.0)
}

impl<'a> ScaledView<'a> {
    pub fn source(&self) -> &'a Dataset {
        self.source
    }

    pub fn n_rows(&self) -> usize {
        self.source.n_rows()
    }

    pub fn n_cols(&self) -> usize {
        self.source.n_cols()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let p = self.n_cols();
        &self.scaled[i * p..(i + 1) * p]
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.scaled[i * self.n_cols() + j]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.n_rows()).map(|i| self.value(i, j)).collect()
    }

    /// Row-major scaled matrix.
    pub fn values(&self) -> &[f64] {
        &self.scaled
    }

    pub fn col_min(&self) -> &[f64] {
        &self.col_min
    }

    pub fn col_max(&self) -> &[f64] {
        &self.col_max
    }

    pub fn degenerate_columns(&self) -> &[usize] {
        &self.degenerate
    }

    /// Maps an original-unit value of column `j` into scaled units (not clamped).
    pub fn scale(&self, j: usize, v: f64) -> f64 {
        let (lo, hi) = (self.col_min[j], self.col_max[j]);
        if hi <= lo {
            0.0
        } else {
            (v - lo) / (hi - lo)
        }
    }

    /// Inverse of [`ScaledView::scale`]; degenerate columns return their constant.
    pub fn unscale(&self, j: usize, v: f64) -> f64 {
        let (lo, hi) = (self.col_min[j], self.col_max[j]);
        if hi <= lo {
            lo
        } else {
            lo + v * (hi - lo)
        }
    }

    /// Scaled predictors of the selected rows as a new dataset, response carried along.
    pub fn scaled_subset(&self, indices: &[usize]) -> Dataset {
        let p = self.n_cols();
        let mut predictors = Vec::with_capacity(indices.len() * p);
        let mut response = Vec::with_capacity(indices.len());
        for &i in indices {
            predictors.extend_from_slice(self.row(i));
            response.push(self.source.response()[i]);
        }
        Dataset {
            predictors,
            response,
            column_names: self.source.column_names.clone(),
            response_name: self.source.response_name.clone(),
            n_rows: indices.len(),
            n_cols: p,
        }
    }

    /// The whole dataset in scaled units.
    pub fn to_dataset(&self) -> Dataset {
        Dataset {
            predictors: self.scaled.clone(),
            response: self.source.response.clone(),
            column_names: self.source.column_names.clone(),
            response_name: self.source.response_name.clone(),
            n_rows: self.n_rows(),
            n_cols: self.n_cols(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_tmp(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    #[test]
    fn loads_small_csv() {
        let f = write_tmp("x1,x2,y\n1,2,3\n4,5,6\n7,8,9\n");
        let d = load_csv(f.path(), "y").unwrap();
        assert_eq!((d.n_rows(), d.n_cols()), (3, 2));
        assert_eq!(d.row(1), &[4.0, 5.0]);
        assert_eq!(d.response(), &[3.0, 6.0, 9.0]);
        assert_eq!(d.column_names(), &["x1".to_string(), "x2".to_string()]);
    }

    #[test]
    fn log_transform_of_predictor_and_response() {
        let d = Dataset::new(vec![1.0, 2.0, std::f64::consts::E, 4.0], vec![1.0, 10.0], vec!["a".into(), "b".into()], "y").unwrap();
        let t = d.log_transformed(&["a".into(), "y".into()]).unwrap();
        assert_eq!(t.row(0), &[0.0, 2.0]);
        assert_eq!(t.row(1), &[1.0, 4.0]);
        assert_eq!(t.response(), &[0.0, 10f64.ln()]);
        assert!(matches!(d.log_transformed(&["z".into()]), Err(Error::MissingColumn(_))));
        let neg = Dataset::new(vec![1.0, -1.0], vec![0.0, 0.0], vec!["a".into()], "y").unwrap();
        assert!(matches!(neg.log_transformed(&["a".into()]), Err(Error::BadCell { row: 3, .. })));
    }

    #[test]
    fn design_csv_has_no_response() {
        let f = write_tmp("u,v\n0.1,0.2\n0.3,0.4\n");
        let d = load_design_csv(f.path()).unwrap();
        assert_eq!(d.n_cols(), 2);
        assert_eq!(d.response(), &[0.0, 0.0]);
        assert_eq!(d.response_name(), "");
    }

    #[test]
    fn response_in_middle_keeps_header_order() {
        let f = write_tmp("a,y,b\n1,2,3\n");
        let d = load_csv(f.path(), "y").unwrap();
        assert_eq!(d.column_names(), &["a".to_string(), "b".to_string()]);
        assert_eq!(d.row(0), &[1.0, 3.0]);
    }

    #[test]
    fn nan_cell_names_row_and_column() {
        let f = write_tmp("x1,x2,y\n1,2,3\n4,NaN,6\n");
        match load_csv(f.path(), "y") {
            Err(Error::BadCell { row, column, .. }) => {
                assert_eq!(row, 3);
                assert_eq!(column, "x2");
            }
            other => panic!("expected bad cell, got {other:?}"),
        }
    }

    #[test]
    fn non_numeric_and_missing_and_duplicate() {
        let f = write_tmp("x1,y\nabc,1\n");
        assert!(matches!(load_csv(f.path(), "y"), Err(Error::BadCell { .. })));
        let f = write_tmp("x1,x2\n1,2\n");
        assert!(matches!(load_csv(f.path(), "y"), Err(Error::MissingResponse(_))));
        let f = write_tmp("x1,y,y\n1,2,3\n");
        assert!(matches!(load_csv(f.path(), "y"), Err(Error::DuplicateColumn(_))));
        assert!(matches!(
            load_csv("/nonexistent/file.csv", "y"),
            Err(Error::Io { .. })
        ));
    }

    #[test]
    fn diamonds_style_column_selection() {
        let f = write_tmp(
            "carat,cut,depth,table,price\n-1.47,Ideal,61.5,55,5.79\n-1.56,Premium,59.8,61,5.79\n-1.47,Good,56.9,65,5.79\n",
        );
        let cols: Vec<String> = ["carat", "depth", "table"].map(String::from).to_vec();
        let d = load_csv_columns(f.path(), "price", Some(&cols)).unwrap();
        assert_eq!(d.n_cols(), 3);
        assert_eq!(d.column_names(), cols.as_slice());
        // the categorical column would be rejected without selection
        assert!(load_csv(f.path(), "price").is_err());
    }

    #[test]
    fn scaling_maps_affinely() {
        let d = Dataset::from_rows(&[vec![-2.0, 5.0], vec![0.0, 5.0], vec![2.0, 5.0]], vec![0.0; 3])
            .unwrap();
        let s = scale_to_unit(&d);
        assert_eq!(s.column(0), vec![0.0, 0.5, 1.0]);
        assert_eq!(s.column(1), vec![0.0, 0.0, 0.0]);
        assert_eq!(s.degenerate_columns(), &[1]);
    }

    #[test]
    fn round_trip_unscale() {
        let rows: Vec<Vec<f64>> = (0..50)
            .map(|i| vec![(i as f64).sin() * 3.7 + 1.0, (i as f64 * 0.37).exp()])
            .collect();
        let d = Dataset::from_rows(&rows, vec![0.0; 50]).unwrap();
        let s = scale_to_unit(&d);
        for i in 0..50 {
            for j in 0..2 {
                let back = s.unscale(j, s.value(i, j));
                assert!((back - d.value(i, j)).abs() <= 1e-12 * d.value(i, j).abs().max(1.0));
            }
        }
    }

    #[test]
    fn csv_round_trip_is_bit_exact() {
        let rows: Vec<Vec<f64>> = (0..20)
            .map(|i| vec![1.0 / (i as f64 + 3.0), -std::f64::consts::PI * i as f64])
            .collect();
        let y = (0..20).map(|i| (i as f64).sqrt() / 7.0).collect();
        let d = Dataset::from_rows(&rows, y).unwrap();
        let f = tempfile::NamedTempFile::new().unwrap();
        d.write_csv(f.path()).unwrap();
        let back = load_csv(f.path(), "y").unwrap();
        assert_eq!(back, d);
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(Dataset::new(vec![], vec![], vec![], "y").is_err());
        assert!(Dataset::new(vec![1.0, f64::NAN], vec![1.0], vec!["a".into(), "b".into()], "y").is_err());
        assert!(Dataset::new(vec![1.0], vec![1.0, 2.0], vec!["a".into()], "y").is_err());
    }
}
