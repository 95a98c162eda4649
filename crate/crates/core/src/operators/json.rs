use serde::{Deserialize, Serialize};

use super::{Operator, Superoperator};
use crate::error::{Error, Result};
use crate::linalg::CMat;
use num_complex::Complex64;

/// Wire format for dense matrices: `{ "dim": n, "re": [[...]], "im": [[...]] }`, row-major.
///
/// `im` may be omitted for real matrices. For superoperators `dim` is the
/// matrix size `d²`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixJson {
    pub dim: usize,
    pub re: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub im: Option<Vec<Vec<f64>>>,
}

impl MatrixJson {
    pub fn from_matrix(m: &CMat) -> Self {
        let rows = |f: fn(&Complex64) -> f64| -> Vec<Vec<f64>> {
            (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| f(&m[(i, j)])).collect()).collect()
        };
        Self { dim: m.nrows(), re: rows(|z| z.re), im: Some(rows(|z| z.im)) }
    }

    pub fn to_matrix(&self) -> Result<CMat> {
        let n = self.dim;
        let check = |rows: &Vec<Vec<f64>>, part: &str| -> Result<()> {
            if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                return Err(Error::InvalidParameter(format!(
                    "matrix '{part}' part must be {n}x{n}"
                )));
            }
            Ok(())
        };
        check(&self.re, "re")?;
        if let Some(im) = &self.im {
            check(im, "im")?;
        }
        Ok(CMat::from_fn(n, n, |i, j| {
            let im = self.im.as_ref().map_or(0.0, |im| im[i][j]);
            Complex64::new(self.re[i][j], im)
        }))
    }

    pub fn to_operator(&self) -> Result<Operator> {
        Operator::new(self.to_matrix()?)
    }

    pub fn to_superoperator(&self) -> Result<Superoperator> {
        Superoperator::from_matrix(self.to_matrix()?)
    }
}

impl From<&Operator> for MatrixJson {
    fn from(op: &Operator) -> Self {
        Self::from_matrix(op.matrix())
    }
}

impl From<&Superoperator> for MatrixJson {
    fn from(s: &Superoperator) -> Self {
        Self::from_matrix(s.matrix())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::standard::sigma_2;

    #[test]
    fn parses_documented_schema() {
        let text = r#"{ "dim": 2, "re": [[0, 1], [1, 0]], "im": [[0, 0], [0, 0]] }"#;
        let m: MatrixJson = serde_json::from_str(text).unwrap();
        let op = m.to_operator().unwrap();
        assert_eq!(op, crate::operators::standard::sigma_1());
        let real_only: MatrixJson = serde_json::from_str(r#"{"dim":1,"re":[[2.5]]}"#).unwrap();
        assert_eq!(real_only.to_matrix().unwrap()[(0, 0)], Complex64::new(2.5, 0.0));
    }

    #[test]
    fn round_trip_through_text() {
        let op = sigma_2().scale_real(0.1 + 1e-17);
        let text = serde_json::to_string(&MatrixJson::from(&op)).unwrap();
        let back: MatrixJson = serde_json::from_str(&text).unwrap();
        assert_eq!(back.to_operator().unwrap(), op);
    }

    #[test]
    fn rejects_ragged_rows() {
        let bad = MatrixJson { dim: 2, re: vec![vec![1.0, 0.0], vec![0.0]], im: None };
        assert!(bad.to_matrix().is_err());
    }
}
