//! Two-state latent regimes (spike / slab) and their time-by-predictor layout.

use serde::{Deserialize, Serialize};

/// Value of the latent variance multiplier: `Spike` stands for the spike ratio
/// `r`, `Slab` for 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Regime {
    Spike,
    Slab,
}

impl Regime {
    pub const BOTH: [Regime; 2] = [Regime::Spike, Regime::Slab];

    #[inline]
    pub fn scale(self, spike_ratio: f64) -> f64 {
        match self {
            Regime::Spike => spike_ratio,
            Regime::Slab => 1.0,
        }
    }

    #[inline]
    pub fn is_slab(self) -> bool {
        matches!(self, Regime::Slab)
    }

    #[inline]
    pub fn index(self) -> usize {
        match self {
            Regime::Spike => 0,
            Regime::Slab => 1,
        }
    }

    pub fn from_slab(slab: bool) -> Self {
        if slab {
            Regime::Slab
        } else {
            Regime::Spike
        }
    }
}

/// `T x q` matrix of regimes, stored time-major so a time slice is contiguous.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegimeMatrix {
    len: usize,
    dim: usize,
    data: Vec<Regime>,
}

impl RegimeMatrix {
    pub fn filled(len: usize, dim: usize, value: Regime) -> Self {
        Self { len, dim, data: vec![value; len * dim] }
    }

    pub fn from_columns(columns: &[Vec<Regime>]) -> Self {
        let dim = columns.len();
        let len = columns.first().map_or(0, Vec::len);
        assert!(columns.iter().all(|c| c.len() == len), "ragged regime columns");
        let mut data = Vec::with_capacity(len * dim);
        for t in 0..len {
            data.extend(columns.iter().map(|c| c[t]));
        }
        Self { len, dim, data }
    }

    /// Number of time points.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Number of predictors.
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, t: usize, j: usize) -> Regime {
        self.data[t * self.dim + j]
    }

    #[inline]
    pub fn set(&mut self, t: usize, j: usize, value: Regime) {
        self.data[t * self.dim + j] = value;
    }

    #[inline]
    pub fn row(&self, t: usize) -> &[Regime] {
        &self.data[t * self.dim..(t + 1) * self.dim]
    }

    pub fn column(&self, j: usize) -> Vec<Regime> {
        (0..self.len).map(|t| self.get(t, j)).collect()
    }

    pub fn set_column(&mut self, j: usize, values: &[Regime]) {
        assert_eq!(values.len(), self.len);
        for (t, &v) in values.iter().enumerate() {
            self.set(t, j, v);
        }
    }
}

/// Counts of `(from, to)` transitions along one regime path, indexed
/// `[from.index()][to.index()]`.
pub fn transition_counts(path: &[Regime]) -> [[usize; 2]; 2] {
    let mut counts = [[0usize; 2]; 2];
    for w in path.windows(2) {
        counts[w[0].index()][w[1].index()] += 1;
    }
    counts
}
