//! Regression datasets and column standardization.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DatasetMeta {
    /// Generator or source name.
    pub source: String,
    pub seed: Option<u64>,
}

/// Response `y` (length `T`), regressors `X` (`T x q`) and, for simulated
/// data, the true coefficient paths (`T x q`).
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub y: Vec<f64>,
    pub x: DMatrix<f64>,
    pub truth: Option<DMatrix<f64>>,
    pub response_name: String,
    pub predictor_names: Vec<String>,
    pub meta: DatasetMeta,
}

impl Dataset {
    pub fn new(y: Vec<f64>, x: DMatrix<f64>) -> Result<Self> {
        let q = x.ncols();
        let ds = Self {
            y,
            x,
            truth: None,
            response_name: "y".into(),
            predictor_names: (1..=q).map(|j| format!("x{j}")).collect(),
            meta: DatasetMeta::default(),
        };
        ds.validate()?;
        Ok(ds)
    }

    pub fn with_truth(mut self, truth: DMatrix<f64>) -> Result<Self> {
        self.truth = Some(truth);
        self.validate()?;
        Ok(self)
    }

    pub fn with_names(mut self, response: &str, predictors: Vec<String>) -> Result<Self> {
        self.response_name = response.to_string();
        self.predictor_names = predictors;
        self.validate()?;
        Ok(self)
    }

    pub fn with_meta(mut self, source: &str, seed: Option<u64>) -> Self {
        self.meta = DatasetMeta { source: source.to_string(), seed };
        self
    }

    /// Number of time points `T`.
    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    /// Number of predictors `q`.
    pub fn n_predictors(&self) -> usize {
        self.x.ncols()
    }

    pub fn validate(&self) -> Result<()> {
        let (n, q) = self.x.shape();
        if n != self.y.len() {
            return Err(Error::Data(format!("{} responses but {n} regressor rows", self.y.len())));
        }
        if n == 0 || q == 0 {
            return Err(Error::Data(format!("empty dataset ({n} rows, {q} predictors)")));
        }
        if self.predictor_names.len() != q {
            return Err(Error::Data(format!("{} predictor names for {q} predictors", self.predictor_names.len())));
        }
        if let Some(tr) = &self.truth {
            if tr.shape() != (n, q) {
                return Err(Error::Data(format!("truth is {}x{}, expected {n}x{q}", tr.nrows(), tr.ncols())));
            }
        }
        if self.y.iter().chain(self.x.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Data("non-finite value in the data".into()));
        }
        Ok(())
    }
}

/// Sample mean and standard deviation (denominator `n - 1`).
pub fn mean_sd(values: impl ExactSizeIterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.clone().sum::<f64>() / n;
    let ss = values.map(|v| (v - mean) * (v - mean)).sum::<f64>();
    (mean, (ss / (n - 1.0)).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnScale {
    pub mean: f64,
    pub sd: f64,
}

/// Location and scale of every column, for mapping results back to the
/// original units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardization {
    pub response: ColumnScale,
    pub predictors: Vec<ColumnScale>,
}

impl Standardization {
    /// Coefficient on the original scale for a coefficient of standardized
    /// predictor `j` on the standardized response.
    pub fn coefficient_to_original(&self, j: usize, value: f64) -> f64 {
        value * self.response.sd / self.predictors[j].sd
    }

    /// Undo the standardization of a dataset.
    pub fn restore(&self, data: &Dataset) -> Dataset {
        let mut out = data.clone();
        for v in out.y.iter_mut() {
            *v = self.response.mean + self.response.sd * *v;
        }
        for (j, s) in self.predictors.iter().enumerate() {
            for v in out.x.column_mut(j).iter_mut() {
                *v = s.mean + s.sd * *v;
            }
        }
        out
    }
}

/// Center and scale the response and every predictor to zero sample mean and
/// unit sample variance.
pub fn standardize(data: &Dataset) -> Result<(Dataset, Standardization)> {
    data.validate()?;
    if data.len() < 2 {
        return Err(Error::Data("standardization needs at least two rows".into()));
    }
    let scale_of = |name: &str, col: Vec<f64>| -> Result<ColumnScale> {
        let (mean, sd) = mean_sd(col.iter().copied());
        if !(sd > 0.0 && sd.is_finite()) {
            return Err(Error::Data(format!("column '{name}' has zero variance")));
        }
        Ok(ColumnScale { mean, sd })
    };
    let response = scale_of(&data.response_name, data.y.clone())?;
    let predictors = (0..data.n_predictors())
        .map(|j| scale_of(&data.predictor_names[j], data.x.column(j).iter().copied().collect()))
        .collect::<Result<Vec<_>>>()?;
    let mut out = data.clone();
    for v in out.y.iter_mut() {
        *v = (*v - response.mean) / response.sd;
    }
    for (j, s) in predictors.iter().enumerate() {
        for v in out.x.column_mut(j).iter_mut() {
            *v = (*v - s.mean) / s.sd;
        }
    }
    if let Some(tr) = out.truth.as_mut() {
        for (j, s) in predictors.iter().enumerate() {
            for v in tr.column_mut(j).iter_mut() {
                *v *= s.sd / response.sd;
            }
        }
    }
    Ok((out, Standardization { response, predictors }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Dataset {
        let x = DMatrix::from_row_slice(4, 2, &[1.0, 10.0, 2.0, 14.0, 3.0, 9.0, 5.0, 11.0]);
        Dataset::new(vec![0.5, 1.5, -0.2, 3.0], x).unwrap()
    }

    #[test]
    fn round_trip() {
        let d = sample();
        let (s, rec) = standardize(&d).unwrap();
        let (m, sd) = mean_sd(s.y.iter().copied());
        assert!(m.abs() < 1e-14 && (sd - 1.0).abs() < 1e-14);
        let back = rec.restore(&s);
        for (a, b) in back.y.iter().zip(&d.y) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!((back.x - d.x).abs().max() < 1e-12);
    }

    #[test]
    fn idempotent_on_standardized_input() {
        let (s, _) = standardize(&sample()).unwrap();
        let (s2, _) = standardize(&s).unwrap();
        assert!((s2.x - &s.x).abs().max() < 1e-12);
    }

    #[test]
    fn constant_column_is_rejected() {
        let x = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 1.0, 3.0, 1.0, 4.0]);
        let d = Dataset::new(vec![1.0, 2.0, 3.0], x).unwrap();
        let err = standardize(&d).unwrap_err();
        assert!(err.to_string().contains("x1"), "{err}");
        assert_eq!(err.exit_code(), 3);
    }

    #[test]
    fn shape_checks() {
        assert!(Dataset::new(vec![1.0], DMatrix::zeros(2, 1)).is_err());
        assert!(sample().with_truth(DMatrix::zeros(3, 2)).is_err());
    }
}
