//! Derivative-free minimizers over an arbitrary cost: the radius-shrinking
//! linear-model search named COBYLA and Nelder-Mead.
//!
//! Both report one [`TracePoint`] per iteration holding the best point found
//! so far, so recorded energies are always exact values of the cost.

use crate::error::Result;

#[derive(Debug, Clone, PartialEq)]
pub struct TracePoint {
    pub theta: Vec<f64>,
    pub energy: f64,
    /// Cumulative evaluations after this iteration.
    pub evaluations: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub points: Vec<TracePoint>,
    pub final_theta: Vec<f64>,
    pub converged: bool,
    /// Stopping statistic after each completed update: `ρ` for COBYLA,
    /// the simplex spread for Nelder-Mead.
    pub statistic: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CobylaParams {
    pub rho_i: f64,
    pub rho_end: f64,
    /// Iterations without improvement before `ρ` is halved; `0` means one
    /// full sweep over the coordinates.
    pub patience: usize,
}

impl Default for CobylaParams {
    fn default() -> Self {
        Self {
            rho_i: 0.5,
            rho_end: 1e-5,
            patience: 0,
        }
    }
}

/// Counts evaluations against a budget and tracks the best point.
struct Tally<F> {
    cost: F,
    evaluations: u64,
    budget: u64,
    best: Option<(Vec<f64>, f64)>,
}

impl<F: FnMut(&[f64]) -> Result<f64>> Tally<F> {
    fn eval(&mut self, theta: &[f64]) -> Result<f64> {
        let e = (self.cost)(theta)?;
        self.evaluations += 1;
        if self.best.as_ref().is_none_or(|(_, b)| e < *b) {
            self.best = Some((theta.to_vec(), e));
        }
        Ok(e)
    }

    fn affords(&self, n: u64) -> bool {
        self.evaluations + n <= self.budget
    }

    fn point(&self) -> TracePoint {
        let (theta, energy) = self.best.clone().expect("at least one evaluation");
        TracePoint {
            theta,
            energy,
            evaluations: self.evaluations,
        }
    }
}

/// Linear-model trust-radius search, three evaluations per iteration:
///
/// 1. evaluate `θ ± ρ e_j` (cycling `j`) to refresh one component of the
///    linear model `ĝ`, moving to the better stencil point if it improves;
/// 2. evaluate the model step `θ - ρ ĝ/‖ĝ‖` and accept it on improvement;
/// 3. halve `ρ` after `patience` iterations without improvement;
/// 4. stop once `ρ < ρ_end`.
///
/// The starting point costs one evaluation and is the first trace point.
pub fn cobyla_minimize(
    cost: impl FnMut(&[f64]) -> Result<f64>,
    theta0: &[f64],
    params: &CobylaParams,
    budget: u64,
) -> Result<Trajectory> {
    let mut tally = Tally {
        cost,
        evaluations: 0,
        budget,
        best: None,
    };
    let mut out = Trajectory {
        points: Vec::new(),
        final_theta: theta0.to_vec(),
        converged: false,
        statistic: Vec::new(),
    };
    if !tally.affords(1) {
        return Ok(out);
    }
    let m = theta0.len();
    let patience = if params.patience == 0 { m.max(1) } else { params.patience };
    let mut theta = theta0.to_vec();
    let mut f = tally.eval(&theta)?;
    out.points.push(tally.point());
    let mut rho = params.rho_i;
    let mut model = vec![0.0; m];
    let mut j = 0;
    let mut stale = 0;
    loop {
        if rho < params.rho_end {
            out.converged = true;
            break;
        }
        if m == 0 || !tally.affords(3) {
            break;
        }
        let mut improved = false;

        let mut plus = theta.clone();
        plus[j] += rho;
        let f_plus = tally.eval(&plus)?;
        let mut minus = theta.clone();
        minus[j] -= rho;
        let f_minus = tally.eval(&minus)?;
        model[j] = (f_plus - f_minus) / (2.0 * rho);
        if f_plus < f.min(f_minus) {
            (theta, f, improved) = (plus, f_plus, true);
        } else if f_minus < f {
            (theta, f, improved) = (minus, f_minus, true);
        }
        j = (j + 1) % m;

        let norm = model.iter().map(|g| g * g).sum::<f64>().sqrt();
        let mut trial = theta.clone();
        if norm > 0.0 {
            for (t, g) in trial.iter_mut().zip(&model) {
                *t -= rho * g / norm;
            }
        } else {
            trial[j] += rho;
        }
        let f_trial = tally.eval(&trial)?;
        if f_trial < f {
            (theta, f, improved) = (trial, f_trial, true);
        }

        if improved {
            stale = 0;
        } else {
            stale += 1;
            if stale >= patience {
                rho *= 0.5;
                stale = 0;
            }
        }
        out.statistic.push(rho);
        out.points.push(tally.point());
    }
    out.final_theta = theta;
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NelderMeadParams {
    /// Simplex size `a`.
    pub size: f64,
    /// Termination tolerance on the vertex-value spread.
    pub tol: f64,
}

impl Default for NelderMeadParams {
    fn default() -> Self {
        Self { size: 0.5, tol: 1e-8 }
    }
}

const REFLECT: f64 = 1.0;
const EXPAND: f64 = 2.0;
const CONTRACT: f64 = 0.5;
const SHRINK: f64 = 0.5;

/// Offsets `(p, q)` of the regular initial simplex of size `a` in `n`
/// dimensions: vertex `i` is `θ_0 + p e_i + q Σ_{k≠i} e_k`.
pub fn simplex_offsets(n: usize, a: f64) -> (f64, f64) {
    let nf = n as f64;
    let root = (nf + 1.0).sqrt();
    let scale = a / (nf * std::f64::consts::SQRT_2);
    (scale * (root + nf - 1.0), scale * (root - 1.0))
}

/// Spread of the simplex values, `sqrt(Σ (J_i - J̄)² / n)` over `n + 1`
/// vertices.
pub fn simplex_spread(values: &[f64]) -> f64 {
    let n = values.len().saturating_sub(1).max(1) as f64;
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt()
}

/// Nelder-Mead with reflection 1, expansion 2, contraction 0.5 and shrink 0.5.
/// Every evaluation, including the `n + 1` initial vertices, is one
/// iteration; the trace records the best vertex after each.
pub fn nelder_mead_minimize(
    cost: impl FnMut(&[f64]) -> Result<f64>,
    theta0: &[f64],
    params: &NelderMeadParams,
    budget: u64,
) -> Result<Trajectory> {
    let mut tally = Tally {
        cost,
        evaluations: 0,
        budget,
        best: None,
    };
    let mut out = Trajectory {
        points: Vec::new(),
        final_theta: theta0.to_vec(),
        converged: false,
        statistic: Vec::new(),
    };
    let n = theta0.len();
    let (p, q) = simplex_offsets(n.max(1), params.size);

    macro_rules! eval {
        ($x:expr) => {{
            if !tally.affords(1) {
                out.final_theta = tally.best.as_ref().map_or(theta0.to_vec(), |b| b.0.clone());
                return Ok(out);
            }
            let e = tally.eval(&$x)?;
            out.points.push(tally.point());
            e
        }};
    }

    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    let f0 = eval!(theta0);
    simplex.push((theta0.to_vec(), f0));
    for i in 0..n {
        let x: Vec<f64> = theta0
            .iter()
            .enumerate()
            .map(|(k, t)| t + if k == i { p } else { q })
            .collect();
        let f = eval!(x);
        simplex.push((x, f));
    }

    loop {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let values: Vec<f64> = simplex.iter().map(|v| v.1).collect();
        let spread = simplex_spread(&values);
        out.statistic.push(spread);
        if n == 0 || spread < params.tol {
            out.converged = true;
            break;
        }
        let mut centroid = vec![0.0; n];
        for (x, _) in &simplex[..n] {
            for (c, xi) in centroid.iter_mut().zip(x) {
                *c += xi / n as f64;
            }
        }
        let along = |from: &[f64], coef: f64| -> Vec<f64> {
            centroid.iter().zip(from).map(|(c, x)| c + coef * (x - c)).collect()
        };
        let (best, second_worst, worst) = (values[0], values[n - 1], values[n]);
        let xr = along(&simplex[n].0, -REFLECT);
        let fr = eval!(xr);
        if fr < best {
            let xe = along(&xr, EXPAND);
            let fe = eval!(xe);
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < second_worst {
            simplex[n] = (xr, fr);
            continue;
        }
        let accepted = if fr < worst {
            let xc = along(&xr, CONTRACT);
            let fc = eval!(xc);
            (fc <= fr).then_some((xc, fc))
        } else {
            let xc = along(&simplex[n].0, CONTRACT);
            let fc = eval!(xc);
            (fc < worst).then_some((xc, fc))
        };
        if let Some(v) = accepted {
            simplex[n] = v;
            continue;
        }
        let x0 = simplex[0].0.clone();
        for i in 1..=n {
            let xs: Vec<f64> = x0
                .iter()
                .zip(&simplex[i].0)
                .map(|(a, b)| a + SHRINK * (b - a))
                .collect();
            let fs = eval!(xs);
            simplex[i] = (xs, fs);
        }
    }
    out.final_theta = simplex[0].0.clone();
    Ok(out)
}
