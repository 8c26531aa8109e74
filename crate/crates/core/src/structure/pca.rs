use nalgebra::{DMatrix, SymmetricEigen};

use super::gabor::GaborFeatureStack;
use crate::error::{Error, Result};
use crate::raster::{normalize, RasterGray};

/// Principal-component projection of a feature stack.
#[derive(Debug, Clone)]
pub struct PcaProjection {
    /// Per component: scores reshaped to the image grid, min-max normalized.
    pub components: Vec<RasterGray>,
    /// Unit loading vectors, sign fixed so the largest-magnitude entry is positive.
    pub loadings: Vec<Vec<f64>>,
    /// Covariance eigenvalues, descending.
    pub variances: Vec<f64>,
}

impl PcaProjection {
    /// First-component image.
    pub fn image(&self) -> &RasterGray {
        &self.components[0]
    }
}

/// Reshapes the stack into a pixels × channels matrix, centers it and
/// projects onto the top `k` covariance eigenvectors.
pub fn pca_project(stack: &GaborFeatureStack, k: usize) -> Result<PcaProjection> {
    let n = stack.width() * stack.height();
    let c = stack.n_channels();
    if k == 0 || k > c {
        return Err(Error::InvalidParameter(format!(
            "component count must be in 1..={c}, got {k}"
        )));
    }
    if n <= c {
        return Err(Error::InvalidParameter(format!(
            "need more pixels ({n}) than channels ({c})"
        )));
    }

    let means: Vec<f64> = stack
        .channels()
        .iter()
        .map(|ch| ch.iter().sum::<f64>() / n as f64)
        .collect();
    let centered: Vec<Vec<f64>> = stack
        .channels()
        .iter()
        .zip(&means)
        .map(|(ch, m)| ch.iter().map(|v| v - m).collect())
        .collect();

    let mut cov = DMatrix::<f64>::zeros(c, c);
    for i in 0..c {
        for j in i..c {
            let s: f64 = centered[i].iter().zip(&centered[j]).map(|(a, b)| a * b).sum();
            let v = s / (n - 1) as f64;
            cov[(i, j)] = v;
            cov[(j, i)] = v;
        }
    }
    let trace: f64 = (0..c).map(|i| cov[(i, i)]).sum();
    if !(trace > 1e-12) {
        return Err(Error::DegenerateInput("feature matrix has zero variance".into()));
    }

    let eig = SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..c).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));

    let mut components = Vec::with_capacity(k);
    let mut loadings = Vec::with_capacity(k);
    let mut variances = Vec::with_capacity(k);
    for &idx in order.iter().take(k) {
        let mut v: Vec<f64> = eig.eigenvectors.column(idx).iter().copied().collect();
        let lead = v
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()).then(b.0.cmp(&a.0)))
            .map(|(i, _)| i)
            .unwrap_or(0);
        if v[lead] < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
        let mut scores = vec![0.0; n];
        for (ch, &wgt) in centered.iter().zip(&v) {
            if wgt == 0.0 {
                continue;
            }
            for (s, x) in scores.iter_mut().zip(ch) {
                *s += wgt * x;
            }
        }
        let img = RasterGray::new(stack.width(), stack.height(), scores)?;
        components.push(normalize(&img));
        loadings.push(v);
        variances.push(eig.eigenvalues[idx].max(0.0));
    }
    Ok(PcaProjection {
        components,
        loadings,
        variances,
    })
}
