use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};
use std::path::Path;

/// n observations (rows) by p variables (columns), all finite.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    values: DMatrix<f64>,
}

impl DataMatrix {
    pub fn new(values: DMatrix<f64>) -> Result<Self> {
        if values.nrows() == 0 || values.ncols() == 0 {
            return Err(Error::InvalidInput("data matrix must have at least one row and one column".into()));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            let (r, c) = (pos % values.nrows(), pos / values.nrows());
            return Err(Error::InvalidInput(format!("non-finite entry at row {}, column {}", r + 1, c + 1)));
        }
        Ok(Self { values })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let p = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != p) {
            return Err(Error::Dimension("rows have unequal lengths".into()));
        }
        Self::new(DMatrix::from_fn(n, p, |i, j| rows[i][j]))
    }

    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    pub fn p(&self) -> usize {
        self.values.ncols()
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn into_values(self) -> DMatrix<f64> {
        self.values
    }

    pub fn row(&self, i: usize) -> DVector<f64> {
        self.values.row(i).transpose()
    }

    /// Parses comma-separated numeric rows. With `header` the first line is skipped.
    pub fn parse_csv(text: &str, header: bool) -> Result<Self> {
        let mut rows = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            if header && lineno == 0 {
                continue;
            }
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let row: std::result::Result<Vec<f64>, _> = line.split(',').map(|f| f.trim().parse::<f64>()).collect();
            match row {
                Ok(r) => rows.push(r),
                Err(e) => {
                    return Err(Error::InvalidInput(format!("line {}: {}", lineno + 1, e)));
                }
            }
        }
        if rows.is_empty() {
            return Err(Error::InvalidInput("no data rows".into()));
        }
        let p = rows[0].len();
        if let Some(bad) = rows.iter().position(|r| r.len() != p) {
            return Err(Error::Dimension(format!(
                "data row {} has {} fields, expected {}",
                bad + 1,
                rows[bad].len(),
                p
            )));
        }
        Self::from_rows(&rows)
    }

    pub fn read_csv(path: impl AsRef<Path>, header: bool) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {}", path.display(), e)))?;
        Self::parse_csv(&text, header)
    }
}

/// Two independent samples over the same p variables.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoSample {
    pub x: DataMatrix,
    pub y: DataMatrix,
}

impl TwoSample {
    pub fn new(x: DataMatrix, y: DataMatrix) -> Result<Self> {
        if x.p() != y.p() {
            return Err(Error::Dimension(format!("x has {} columns but y has {}", x.p(), y.p())));
        }
        if x.n() < 2 || y.n() < 2 {
            return Err(Error::TooSmall("each group needs at least 2 observations".into()));
        }
        Ok(Self { x, y })
    }

    pub fn from_matrices(x: DMatrix<f64>, y: DMatrix<f64>) -> Result<Self> {
        Self::new(DataMatrix::new(x)?, DataMatrix::new(y)?)
    }

    pub fn n(&self) -> usize {
        self.x.n()
    }

    pub fn m(&self) -> usize {
        self.y.n()
    }

    pub fn p(&self) -> usize {
        self.x.p()
    }

    pub(crate) fn require_sizes(&self, min_n: usize, what: &str) -> Result<()> {
        if self.n() < min_n || self.m() < min_n {
            return Err(Error::TooSmall(format!("{what} needs at least {min_n} observations per group")));
        }
        Ok(())
    }

    /// Both groups shifted by the pooled grand mean. Every mean test is a
    /// function of the data only through this translation-free version.
    pub(crate) fn grand_centered(&self) -> (DMatrix<f64>, DMatrix<f64>) {
        let total = (self.n() + self.m()) as f64;
        let g = (self.x.values().row_sum() + self.y.values().row_sum()) / total;
        let mut x = self.x.values().clone();
        let mut y = self.y.values().clone();
        for mut r in x.row_iter_mut() {
            r -= &g;
        }
        for mut r in y.row_iter_mut() {
            r -= &g;
        }
        (x, y)
    }
}
