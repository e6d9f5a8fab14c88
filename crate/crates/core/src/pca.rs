//! Principal components of optimization trajectories and cost landscapes on
//! the plane of the first two components.
//!
//! A model stores the full orthogonal basis `𝓔` (rows sorted by descending
//! eigenvalue), so `γ = 𝓔 (θ - mean)` is exact and truncation is a separate
//! step. Landscape energies are exact re-evaluations at `lift(γ₁, γ₂)`.

use std::io::Write;

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ansatz::{Ansatz, Objective};
use crate::error::{Error, Result};
use crate::ising::SkInstance;
use crate::optim::RunRecord;

/// Default landscape resolution per axis.
pub const DEFAULT_RESOLUTION: usize = 50;

/// Fraction of the trajectory's extent added on each side of the default
/// landscape window.
pub const DEFAULT_PADDING: f64 = 0.2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    pub mean: Vec<f64>,
    /// Row `i` is the unit component `𝓔_i`.
    pub components: Vec<Vec<f64>>,
    pub eigenvalues: Vec<f64>,
    pub explained_variance_ratio: Vec<f64>,
    pub n_samples: usize,
}

/// Fits the covariance (divisor `M - 1`) of `samples`.
///
/// Each component's largest-magnitude entry is made non-negative. When all
/// samples coincide the whole ratio goes to the first component.
pub fn fit_pca(samples: &[Vec<f64>]) -> Result<PcaModel> {
    if samples.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "PCA needs at least 2 samples, got {}",
            samples.len()
        )));
    }
    let m = samples[0].len();
    if m == 0 {
        return Err(Error::InsufficientData("samples have no coordinates".into()));
    }
    if let Some(bad) = samples.iter().find(|s| s.len() != m) {
        return Err(Error::ParameterLength {
            expected: m,
            got: bad.len(),
        });
    }
    let count = samples.len();
    let mut mean = vec![0.0; m];
    for s in samples {
        for (acc, x) in mean.iter_mut().zip(s) {
            *acc += x;
        }
    }
    for x in &mut mean {
        *x /= count as f64;
    }
    let centered = DMatrix::from_fn(count, m, |r, c| samples[r][c] - mean[c]);
    let cov = centered.transpose() * &centered / (count - 1) as f64;
    let eig = SymmetricEigen::new(cov);

    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let mut components = Vec::with_capacity(m);
    let mut eigenvalues = Vec::with_capacity(m);
    for &k in &order {
        let mut v: Vec<f64> = eig.eigenvectors.column(k).iter().copied().collect();
        let lead = v
            .iter()
            .enumerate()
            .fold(0, |best, (i, x)| if x.abs() > v[best].abs() { i } else { best });
        if v[lead] < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
        components.push(v);
        // The covariance is PSD, so negative eigenvalues are rounding noise.
        eigenvalues.push(eig.eigenvalues[k].max(0.0));
    }
    let total: f64 = eigenvalues.iter().sum();
    let explained_variance_ratio = if total > 0.0 {
        eigenvalues.iter().map(|l| l / total).collect()
    } else {
        (0..m).map(|i| if i == 0 { 1.0 } else { 0.0 }).collect()
    };
    Ok(PcaModel {
        mean,
        components,
        eigenvalues,
        explained_variance_ratio,
        n_samples: count,
    })
}

/// PCA over the iterates of one run.
pub fn fit_trajectory(record: &RunRecord) -> Result<PcaModel> {
    let samples: Vec<Vec<f64>> = record.iterates.iter().map(|it| it.theta.clone()).collect();
    if samples.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "trajectory has {} iterate(s), PCA needs at least 2",
            samples.len()
        )));
    }
    fit_pca(&samples)
}

/// PCA over the iterates of several runs stacked together.
pub fn fit_pooled(records: &[RunRecord]) -> Result<PcaModel> {
    let samples: Vec<Vec<f64>> = records
        .iter()
        .flat_map(|r| r.iterates.iter().map(|it| it.theta.clone()))
        .collect();
    fit_pca(&samples)
}

/// `ratio₁ + ratio₂`.
pub fn explained_variance_top2(model: &PcaModel) -> f64 {
    model.explained_variance_ratio.iter().take(2).sum()
}

impl PcaModel {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    fn check(&self, len: usize) -> Result<()> {
        if len != self.dim() {
            return Err(Error::ParameterLength {
                expected: self.dim(),
                got: len,
            });
        }
        Ok(())
    }

    /// First `n` coordinates of `𝓔 (θ - mean)`.
    pub fn project(&self, theta: &[f64], n: usize) -> Result<Vec<f64>> {
        self.check(theta.len())?;
        if n > self.dim() {
            return Err(Error::IndexOutOfRange {
                index: n,
                bound: self.dim(),
            });
        }
        Ok(self.components[..n]
            .iter()
            .map(|e| e.iter().zip(theta).zip(&self.mean).map(|((e, t), mu)| e * (t - mu)).sum())
            .collect())
    }

    /// `mean + γ₁ 𝓔₁ + γ₂ 𝓔₂`.
    pub fn lift(&self, gamma: [f64; 2]) -> Vec<f64> {
        let mut theta = self.mean.clone();
        for (g, e) in gamma.iter().zip(&self.components) {
            for (t, x) in theta.iter_mut().zip(e) {
                *t += g * x;
            }
        }
        theta
    }

    /// `mean + Σ γ_i 𝓔_i` over all given coordinates.
    pub fn reconstruct(&self, gamma: &[f64]) -> Result<Vec<f64>> {
        if gamma.len() > self.dim() {
            return Err(Error::IndexOutOfRange {
                index: gamma.len(),
                bound: self.dim(),
            });
        }
        let mut theta = self.mean.clone();
        for (g, e) in gamma.iter().zip(&self.components) {
            for (t, x) in theta.iter_mut().zip(e) {
                *t += g * x;
            }
        }
        Ok(theta)
    }
}

/// Closed window `[lo, hi]` on each principal axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub pc1: (f64, f64),
    pub pc2: (f64, f64),
}

impl Bounds {
    /// Bounding box of `points`, widened by `pad` times its extent on each
    /// side. A degenerate axis gets a half-width of `pad`.
    pub fn around(points: &[[f64; 2]], pad: f64) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InsufficientData("no points to bound".into()));
        }
        let axis = |k: usize| {
            let lo = points.iter().map(|p| p[k]).fold(f64::INFINITY, f64::min);
            let hi = points.iter().map(|p| p[k]).fold(f64::NEG_INFINITY, f64::max);
            let span = hi - lo;
            let w = if span > 0.0 { pad * span } else { pad };
            (lo - w, hi + w)
        };
        Ok(Self {
            pc1: axis(0),
            pc2: axis(1),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub pc1: f64,
    pub pc2: f64,
    pub energy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Landscape {
    pub bounds: Bounds,
    pub resolution: usize,
    /// `pc1`-major order.
    pub points: Vec<GridPoint>,
}

fn axis_values(range: (f64, f64), resolution: usize) -> Vec<f64> {
    let step = (range.1 - range.0) / (resolution - 1) as f64;
    (0..resolution)
        .map(|i| if i + 1 == resolution { range.1 } else { range.0 + step * i as f64 })
        .collect()
}

/// Energies on a `resolution × resolution` grid over `bounds` in the
/// `(pc1, pc2)` plane.
pub fn landscape_grid(
    model: &PcaModel,
    ansatz: &Ansatz,
    inst: &SkInstance,
    bounds: Bounds,
    resolution: usize,
) -> Result<Landscape> {
    if resolution < 2 {
        return Err(Error::config(format!(
            "landscape.resolution: must be at least 2, got {resolution}"
        )));
    }
    if model.dim() != ansatz.n_params() {
        return Err(Error::ParameterLength {
            expected: ansatz.n_params(),
            got: model.dim(),
        });
    }
    if model.components.len() < 2 {
        return Err(Error::InsufficientData("landscape needs two principal components".into()));
    }
    let obj = Objective::new(ansatz, inst)?;
    let xs = axis_values(bounds.pc1, resolution);
    let ys = axis_values(bounds.pc2, resolution);
    let cells: Vec<(f64, f64)> = xs.iter().flat_map(|&x| ys.iter().map(move |&y| (x, y))).collect();
    let points = cells
        .par_iter()
        .map(|&(pc1, pc2)| {
            let energy = obj.energy(&model.lift([pc1, pc2]))?;
            Ok(GridPoint { pc1, pc2, energy })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Landscape {
        bounds,
        resolution,
        points,
    })
}

impl Landscape {
    /// CSV with header `pc1,pc2,energy`.
    pub fn write_csv(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "pc1,pc2,energy")?;
        for p in &self.points {
            writeln!(w, "{},{},{}", p.pc1, p.pc2, p.energy)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub iteration: u64,
    pub pc1: f64,
    pub pc2: f64,
    pub energy: f64,
}

/// Every iterate of `record` on the `(pc1, pc2)` plane, in order.
pub fn project_trajectory(model: &PcaModel, record: &RunRecord) -> Result<Vec<TrajectoryPoint>> {
    record
        .iterates
        .iter()
        .map(|it| {
            let g = model.project(&it.theta, 2)?;
            Ok(TrajectoryPoint {
                iteration: it.iteration,
                pc1: g[0],
                pc2: g[1],
                energy: it.energy,
            })
        })
        .collect()
}

/// CSV with header `iteration,pc1,pc2,energy`.
pub fn write_trajectory_csv(points: &[TrajectoryPoint], mut w: impl Write) -> std::io::Result<()> {
    writeln!(w, "iteration,pc1,pc2,energy")?;
    for p in points {
        writeln!(w, "{},{},{},{}", p.iteration, p.pc1, p.pc2, p.energy)?;
    }
    Ok(())
}

/// Trajectory bounding box padded by [`DEFAULT_PADDING`].
pub fn default_bounds(points: &[TrajectoryPoint]) -> Result<Bounds> {
    let pts: Vec<[f64; 2]> = points.iter().map(|p| [p.pc1, p.pc2]).collect();
    Bounds::around(&pts, DEFAULT_PADDING)
}
