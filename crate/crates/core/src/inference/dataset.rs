use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::params::SimplexPoint;

/// Compositional observations sharing one `K`, optionally paired with a
/// predictor matrix (one row per observation).
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    rows: Vec<SimplexPoint>,
    predictors: Option<DMatrix<f64>>,
}

impl Dataset {
    pub fn new(rows: Vec<SimplexPoint>) -> Result<Self> {
        let Some(first) = rows.first() else {
            return Err(Error::InvalidArgument("dataset has no rows".into()));
        };
        let k = first.k();
        if let Some(bad) = rows.iter().find(|r| r.k() != k) {
            return Err(Error::DimensionMismatch {
                expected: k,
                got: bad.k(),
            });
        }
        Ok(Self {
            rows,
            predictors: None,
        })
    }

    pub fn with_predictors(rows: Vec<SimplexPoint>, predictors: DMatrix<f64>) -> Result<Self> {
        let mut ds = Self::new(rows)?;
        if predictors.nrows() != ds.rows.len() {
            return Err(Error::DimensionMismatch {
                expected: ds.rows.len(),
                got: predictors.nrows(),
            });
        }
        if let Some((i, v)) = predictors.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite {
                what: "predictor",
                index: i,
                value: *v,
            });
        }
        ds.predictors = Some(predictors);
        Ok(ds)
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn k(&self) -> usize {
        self.rows[0].k()
    }

    pub fn rows(&self) -> &[SimplexPoint] {
        &self.rows
    }

    pub fn predictors(&self) -> Option<&DMatrix<f64>> {
        self.predictors.as_ref()
    }

    /// Componentwise average of the rows: the sufficient statistic.
    pub fn mean(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.k()];
        for r in &self.rows {
            for (a, b) in m.iter_mut().zip(r.as_slice()) {
                *a += b;
            }
        }
        let n = self.rows.len() as f64;
        m.iter_mut().for_each(|v| *v /= n);
        m
    }
}
