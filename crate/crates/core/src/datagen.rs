//! Seeded generators for the simulation studies and the synthetic inflation
//! fixture.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::data::Dataset;
use crate::dists::sample_std_normal;
use crate::error::{Error, Result};
use crate::io::{INFLATION_PREDICTORS, INFLATION_RESPONSE};

/// Length of the single-equation simulation.
pub const EXAMPLE1_LEN: usize = 200;
/// Length of the recursive-regression simulation.
pub const EXAMPLE2_LEN: usize = 240;
/// Number of series in the recursive-regression simulation.
pub const EXAMPLE2_DIM: usize = 10;

fn rng_for(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Innovation standard deviation that gives the AR(1) coefficients of the
/// single-equation example a stationary variance of 0.25.
pub fn example1_stationary_innovation_sd() -> f64 {
    (0.25 * (1.0 - 0.97f64 * 0.97)).sqrt()
}

/// Single-equation example with five coefficients:
///
/// 1. AR(1) around 2 with coefficient 0.97 and stationary variance 0.25,
/// 2. the same AR(1) without a mean up to `t = 100`, zero afterwards,
///    started from `N(2, 0.25)`,
/// 3. `-2` on `21..=50` and `121..=150`, zero elsewhere,
/// 4. and 5. zero.
///
/// Regressors are iid standard normal and the noise variance is 1.
pub fn generate_example1(seed: u64) -> Dataset {
    generate_example1_with(seed, example1_stationary_innovation_sd())
}

/// Single-equation example with a chosen innovation standard deviation for
/// the two AR(1) coefficients. Starting values are still drawn from
/// `N(2, 0.25)`.
pub fn generate_example1_with(seed: u64, innov_sd: f64) -> Dataset {
    let (n, q) = (EXAMPLE1_LEN, 5);
    let mut rng = rng_for(seed);
    let phi = 0.97;
    let stat_sd = 0.5;
    let mut truth = DMatrix::zeros(n, q);

    let mut b1 = 2.0 + stat_sd * sample_std_normal(&mut rng);
    let mut b2 = 2.0 + stat_sd * sample_std_normal(&mut rng);
    for t in 0..n {
        let day = t + 1;
        if t > 0 {
            b1 = 2.0 + phi * (b1 - 2.0) + innov_sd * sample_std_normal(&mut rng);
            b2 = phi * b2 + innov_sd * sample_std_normal(&mut rng);
        }
        truth[(t, 0)] = b1;
        truth[(t, 1)] = if day <= 100 { b2 } else { 0.0 };
        truth[(t, 2)] = if (21..=50).contains(&day) || (121..=150).contains(&day) { -2.0 } else { 0.0 };
    }

    let x = DMatrix::from_fn(n, q, |_, _| sample_std_normal(&mut rng));
    let y = (0..n).map(|t| x.row(t).dot(&truth.row(t)) + sample_std_normal(&mut rng)).collect();
    Dataset::new(y, x)
        .and_then(|d| d.with_truth(truth))
        .expect("generator produces consistent shapes")
        .with_meta("example1", Some(seed))
}

/// The four coefficient processes of the recursive-regression example.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CoefProcess {
    /// Zero-mean AR(1).
    Ar,
    /// Zero-mean AR(1) up to the middle of the sample, zero afterwards.
    ArThenZero,
    /// `-0.5` on two fixed intervals, zero elsewhere.
    Step,
    Zero,
}

impl CoefProcess {
    pub const ALL: [CoefProcess; 4] = [CoefProcess::Ar, CoefProcess::ArThenZero, CoefProcess::Step, CoefProcess::Zero];

    /// Uniform draw among the four processes.
    pub fn sample<R: Rng + ?Sized>(rng: &mut R) -> Self {
        Self::ALL[rng.random_range(0..4)]
    }

    /// Simulate a path of length `n`.
    pub fn path<R: Rng + ?Sized>(self, n: usize, rng: &mut R) -> Vec<f64> {
        let phi: f64 = 0.98;
        let innov_var = (1.0 - phi) * 0.15;
        let stat_sd = (innov_var / (1.0 - phi * phi)).sqrt();
        let ar = |rng: &mut R| {
            let mut b = stat_sd * sample_std_normal(rng);
            (0..n)
                .map(|t| {
                    if t > 0 {
                        b = phi * b + innov_var.sqrt() * sample_std_normal(rng);
                    }
                    b
                })
                .collect::<Vec<f64>>()
        };
        match self {
            CoefProcess::Ar => ar(rng),
            CoefProcess::ArThenZero => {
                let mut p = ar(rng);
                for v in p.iter_mut().skip(n / 2) {
                    *v = 0.0;
                }
                p
            }
            CoefProcess::Step => (1..=n).map(|t| step_value(t, n)).collect(),
            CoefProcess::Zero => vec![0.0; n],
        }
    }
}

/// Value of the step process at (1-based) time `t` of `n`: zero for
/// `t <= n/8`, `3n/8 < t <= 5n/8` and `t > 7n/8`; `-0.5` for `n/8 <= t < 3n/8`
/// and `5n/8 < t <= 7n/8`. The zero branch is checked first; a time point
/// covered by neither branch is zero.
pub fn step_value(t: usize, n: usize) -> f64 {
    let t = t as f64;
    let e = n as f64 / 8.0;
    let zero = t <= e || (3.0 * e < t && t <= 5.0 * e) || t > 7.0 * e;
    let neg = (e <= t && t < 3.0 * e) || (5.0 * e < t && t <= 7.0 * e);
    if !zero && neg {
        -0.5
    } else {
        0.0
    }
}

/// Time-varying lower-triangular system `y_t = B_t y_t + eps_t`.
#[derive(Debug, Clone, PartialEq)]
pub struct CholeskySystem {
    /// `B_t` for each time point (`q x q`, zero on and above the diagonal).
    pub b: Vec<DMatrix<f64>>,
    /// Generated series, `T x q`.
    pub series: DMatrix<f64>,
    /// Innovations used in generation, `T x q`.
    pub eps: DMatrix<f64>,
    /// Process drawn for each strictly-lower entry `(i, j)`, row-major.
    pub processes: Vec<((usize, usize), CoefProcess)>,
}

impl CholeskySystem {
    pub fn dim(&self) -> usize {
        self.series.ncols()
    }

    /// Regression of series `i` on series `0..i`, with the true coefficients.
    pub fn equation(&self, i: usize) -> Result<Dataset> {
        let q = self.dim();
        if i == 0 || i >= q {
            return Err(Error::Dimension(format!("equation {i} out of range 1..{q}")));
        }
        let n = self.series.nrows();
        let x = self.series.columns(0, i).into_owned();
        let y = self.series.column(i).iter().copied().collect();
        let truth = DMatrix::from_fn(n, i, |t, j| self.b[t][(i, j)]);
        let names = (1..=i).map(|j| format!("y{j}")).collect();
        Ok(Dataset::new(y, x)?.with_truth(truth)?.with_names(&format!("y{}", i + 1), names)?)
    }
}

/// Recursive-regression example with `q` series of length `n`; innovations
/// have variance 0.0625.
pub fn generate_cholesky_system(seed: u64, n: usize, q: usize) -> CholeskySystem {
    let mut rng = rng_for(seed);
    let mut b = vec![DMatrix::zeros(q, q); n];
    let mut processes = Vec::new();
    for i in 1..q {
        for j in 0..i {
            let kind = CoefProcess::sample(&mut rng);
            let path = kind.path(n, &mut rng);
            for (t, v) in path.into_iter().enumerate() {
                b[t][(i, j)] = v;
            }
            processes.push(((i, j), kind));
        }
    }
    let eps = DMatrix::from_fn(n, q, |_, _| 0.25 * sample_std_normal(&mut rng));
    let mut series = DMatrix::zeros(n, q);
    for t in 0..n {
        for i in 0..q {
            let mut v = eps[(t, i)];
            for j in 0..i {
                v += b[t][(i, j)] * series[(t, j)];
            }
            series[(t, i)] = v;
        }
    }
    CholeskySystem { b, series, eps, processes }
}

/// Recursive-regression example at the published size (`T = 240`,
/// `q = 10`), with its `q - 1` regression datasets.
pub fn generate_example2(seed: u64) -> (CholeskySystem, Vec<Dataset>) {
    generate_example2_sized(seed, EXAMPLE2_LEN, EXAMPLE2_DIM)
}

pub fn generate_example2_sized(seed: u64, n: usize, q: usize) -> (CholeskySystem, Vec<Dataset>) {
    let sys = generate_cholesky_system(seed, n, q);
    let eqs = (1..q)
        .map(|i| sys.equation(i).expect("equation index in range").with_meta("example2", Some(seed)))
        .collect();
    (sys, eqs)
}

/// `n_rep` datasets from `generator`, with seeds `base_seed, base_seed + 1, ...`.
pub fn replicate<T>(generator: impl Fn(u64) -> T, n_rep: usize, base_seed: u64) -> Result<Vec<T>> {
    if n_rep == 0 {
        return Err(Error::Config("at least one replication is required".into()));
    }
    Ok((0..n_rep as u64).map(|i| generator(base_seed.wrapping_add(i))).collect())
}

/// Synthetic data with the column layout of the quarterly inflation dataset:
/// persistent standard-normal predictors, four lags of the response, and a
/// response driven by a few of them.
pub fn generate_inflation_fixture(seed: u64, rows: usize) -> Dataset {
    let mut rng = rng_for(seed);
    let n_exo = INFLATION_PREDICTORS.len() - 4;
    let warm = 4;
    let total = rows + warm;
    let mut exo = DMatrix::zeros(total, n_exo);
    for j in 0..n_exo {
        let mut v = sample_std_normal(&mut rng);
        for t in 0..total {
            if t > 0 {
                v = 0.7 * v + (1.0f64 - 0.49).sqrt() * sample_std_normal(&mut rng);
            }
            exo[(t, j)] = v;
        }
    }
    let mut infl = vec![0.0; total];
    for t in 0..total {
        let lag = if t > 0 { infl[t - 1] } else { 0.0 };
        infl[t] = 0.5 * lag + 0.4 * exo[(t, 0)] - 0.3 * exo[(t, 22)] + 0.35 * sample_std_normal(&mut rng);
    }
    let x = DMatrix::from_fn(rows, INFLATION_PREDICTORS.len(), |t, j| {
        let tt = t + warm;
        if j < n_exo {
            exo[(tt, j)]
        } else {
            infl[tt - (j - n_exo + 1)]
        }
    });
    let y = infl[warm..].to_vec();
    Dataset::new(y, x)
        .and_then(|d| d.with_names(INFLATION_RESPONSE, INFLATION_PREDICTORS.iter().map(|s| s.to_string()).collect()))
        .expect("fixture shape matches the schema")
        .with_meta("inflation-fixture", Some(seed))
}
