use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

/// Per-feature centering and scaling. Scales are population standard
/// deviations; constant features get scale 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub means: Vec<f64>,
    pub scales: Vec<f64>,
}

impl Standardizer {
    pub fn fit(x: ArrayView2<'_, f64>) -> Self {
        let n = x.nrows().max(1) as f64;
        let means: Array1<f64> = x.sum_axis(Axis(0)) / n;
        let scales = x
            .axis_iter(Axis(1))
            .zip(means.iter())
            .map(|(col, &m)| {
                let var = col.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n;
                let s = var.sqrt();
                if s > 0.0 && s.is_finite() {
                    s
                } else {
                    1.0
                }
            })
            .collect();
        Standardizer {
            means: means.to_vec(),
            scales,
        }
    }

    pub fn identity(p: usize) -> Self {
        Standardizer {
            means: vec![0.0; p],
            scales: vec![1.0; p],
        }
    }

    pub fn dim(&self) -> usize {
        self.means.len()
    }

    pub fn transform(&self, x: ArrayView2<'_, f64>) -> Array2<f64> {
        let mut out = x.to_owned();
        for (mut col, (m, s)) in out.axis_iter_mut(Axis(1)).zip(self.means.iter().zip(&self.scales)) {
            col.mapv_inplace(|v| (v - m) / s);
        }
        out
    }

    pub fn transform_row(&self, x: ArrayView1<'_, f64>) -> Vec<f64> {
        x.iter()
            .zip(self.means.iter().zip(&self.scales))
            .map(|(v, (m, s))| (v - m) / s)
            .collect()
    }
}
