//! Gradient-based update rules: SGD, Adam and BFGS.

use nalgebra::{DMatrix, DVector};

/// SGD schedule `a_k = a / (A + k)^b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Schedule {
    pub a: f64,
    pub big_a: f64,
    pub b: f64,
}

impl Schedule {
    pub fn gain(&self, k: usize) -> f64 {
        self.a / (self.big_a + k as f64).powf(self.b)
    }
}

/// `θ_{k+1} = θ_k - a_k g_k`.
pub fn sgd_step(theta: &[f64], g: &[f64], k: usize, schedule: &Schedule) -> Vec<f64> {
    let ak = schedule.gain(k);
    theta.iter().zip(g).map(|(t, gi)| t - ak * gi).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamParams {
    pub eta: f64,
    pub a1: f64,
    pub a2: f64,
    pub eps: f64,
}

impl Default for AdamParams {
    fn default() -> Self {
        Self {
            eta: 0.1,
            a1: 0.9,
            a2: 0.999,
            eps: 1e-8,
        }
    }
}

/// First and second moments; `k` counts completed steps.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub k: u32,
}

impl AdamState {
    pub fn new(dim: usize) -> Self {
        Self {
            m: vec![0.0; dim],
            v: vec![0.0; dim],
            k: 0,
        }
    }
}

/// One bias-corrected Adam step; advances `state.k` to the step index used.
pub fn adam_step(state: &mut AdamState, theta: &[f64], g: &[f64], p: &AdamParams) -> Vec<f64> {
    state.k += 1;
    let k = state.k as i32;
    let c1 = 1.0 - p.a1.powi(k);
    let c2 = 1.0 - p.a2.powi(k);
    let mut next = Vec::with_capacity(theta.len());
    for i in 0..theta.len() {
        state.m[i] = p.a1 * state.m[i] + (1.0 - p.a1) * g[i];
        state.v[i] = p.a2 * state.v[i] + (1.0 - p.a2) * g[i] * g[i];
        let m_hat = state.m[i] / c1;
        let v_hat = state.v[i] / c2;
        next.push(theta[i] - p.eta * m_hat / (v_hat.sqrt() + p.eps));
    }
    next
}

/// Below this `yᵀΔθ` the rank-two update is skipped.
pub const CURVATURE_GUARD: f64 = 1e-10;

/// How far along `d = -B⁻¹ g` a BFGS step goes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BfgsStep {
    /// Full Newton step clipped to this length.
    Radius(f64),
    /// `α d` with a fixed gain.
    Gain(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct BfgsState {
    /// Hessian approximation `B_k`.
    pub b: DMatrix<f64>,
    prev: Option<(DVector<f64>, DVector<f64>)>,
    /// Whether the last step fell back to steepest descent.
    pub fallback: bool,
    /// Whether the last call updated `B`.
    pub updated: bool,
}

impl BfgsState {
    /// `B_0 = scale · I`.
    pub fn new(dim: usize, scale: f64) -> Self {
        Self {
            b: DMatrix::identity(dim, dim) * scale,
            prev: None,
            fallback: false,
            updated: false,
        }
    }

    /// Rank-two update from `Δθ = s` and `y`; returns whether it was applied.
    pub fn update(&mut self, s: &DVector<f64>, y: &DVector<f64>) -> bool {
        let ys = y.dot(s);
        let bs = &self.b * s;
        let sbs = s.dot(&bs);
        if ys <= CURVATURE_GUARD || sbs <= 0.0 {
            return false;
        }
        self.b += y * y.transpose() / ys - &bs * bs.transpose() / sbs;
        true
    }

    /// Secant pair along a probe direction: with `q = J(θ+cδ) + J(θ-cδ) - 2J(θ)`
    /// the pair `s = cδ`, `y = q δ / (c‖δ‖²)` has `yᵀs = q ≈ c² δᵀHδ`.
    pub fn update_along(&mut self, delta: &[f64], c: f64, q: f64) -> bool {
        let d = DVector::from_column_slice(delta);
        let norm2 = d.norm_squared();
        if norm2 == 0.0 || c == 0.0 {
            return false;
        }
        let s = &d * c;
        let y = &d * (q / (c * norm2));
        self.update(&s, &y)
    }

    /// `d = -B⁻¹ g`, or `-g` when `B` is not positive definite.
    pub fn direction(&mut self, g: &[f64]) -> DVector<f64> {
        let gv = DVector::from_column_slice(g);
        let solved = self.b.clone().cholesky().map(|ch| -ch.solve(&gv));
        match solved {
            Some(d) if d.iter().all(|x| x.is_finite()) => {
                self.fallback = false;
                d
            }
            _ => {
                self.fallback = true;
                -gv
            }
        }
    }
}

/// Applies the pending update from the previous `(θ, g)` pair, then steps
/// along `d = -B⁻¹ g`. Falls back to `d = -g` when `B` is not positive
/// definite.
pub fn bfgs_step(state: &mut BfgsState, theta: &[f64], g: &[f64], step: BfgsStep) -> Vec<f64> {
    let t = DVector::from_column_slice(theta);
    let gv = DVector::from_column_slice(g);
    state.updated = match state.prev.take() {
        Some((t0, g0)) => state.update(&(&t - t0), &(&gv - g0)),
        None => false,
    };
    let d = state.direction(g);
    let alpha = match step {
        BfgsStep::Radius(r) => {
            let norm = d.norm();
            if norm > r {
                r / norm
            } else {
                1.0
            }
        }
        BfgsStep::Gain(a) => a,
    };
    let next = &t + alpha * d;
    state.prev = Some((t, gv));
    next.iter().copied().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sgd_examples() {
        let unit = Schedule { a: 1.0, big_a: 0.0, b: 0.0 };
        assert_eq!(sgd_step(&[1.0], &[1.0], 0, &unit), vec![0.0]);
        let s = Schedule { a: 1.0, big_a: 1.0, b: 1.0 };
        assert_eq!(s.gain(1), 0.5);
        assert_eq!(sgd_step(&[0.3, -2.0], &[0.0, 0.0], 4, &s), vec![0.3, -2.0]);
    }

    #[test]
    fn adam_first_step_is_sign_step() {
        let p = AdamParams::default();
        let mut st = AdamState::new(2);
        let next = adam_step(&mut st, &[0.0, 0.0], &[3.0, -0.5], &p);
        assert!((next[0] + p.eta).abs() < 1e-8);
        assert!((next[1] - p.eta).abs() < 1e-8);
        assert_eq!(st.k, 1);
    }

    #[test]
    fn adam_zero_gradient_never_moves() {
        let mut st = AdamState::new(1);
        let mut t = vec![0.7];
        for _ in 0..20 {
            t = adam_step(&mut st, &t, &[0.0], &AdamParams::default());
        }
        assert_eq!(t, vec![0.7]);
    }

    #[test]
    fn adam_on_parabola_decreases_monotonically() {
        let p = AdamParams {
            eta: 0.1,
            ..AdamParams::default()
        };
        let mut st = AdamState::new(1);
        let mut t = vec![1.0];
        for _ in 0..10 {
            let next = adam_step(&mut st, &t, &[2.0 * t[0]], &p);
            assert!(next[0].abs() < t[0].abs());
            t = next;
        }
    }

    fn quadratic() -> DMatrix<f64> {
        DMatrix::from_row_slice(2, 2, &[3.0, 1.0, 1.0, 2.0])
    }

    fn grad_of(h: &DMatrix<f64>, t: &[f64]) -> Vec<f64> {
        (h * DVector::from_column_slice(t)).iter().copied().collect()
    }

    #[test]
    fn bfgs_converges_on_quadratic() {
        let h = quadratic();
        let mut st = BfgsState::new(2, 1.0);
        let mut t = vec![1.0, -2.0];
        let mut iters = 0;
        while DVector::from_column_slice(&t).norm() >= 1e-8 {
            let g = grad_of(&h, &t);
            t = bfgs_step(&mut st, &t, &g, BfgsStep::Radius(1.0));
            iters += 1;
            assert!(iters <= 10, "no convergence within 10 iterations: {t:?}");
        }
    }

    #[test]
    fn bfgs_secant_condition() {
        let h = quadratic();
        let mut st = BfgsState::new(2, 1.0);
        let t0 = vec![0.4, 0.9];
        let g0 = grad_of(&h, &t0);
        let t1 = bfgs_step(&mut st, &t0, &g0, BfgsStep::Gain(0.2));
        let g1 = grad_of(&h, &t1);
        bfgs_step(&mut st, &t1, &g1, BfgsStep::Gain(0.2));
        assert!(st.updated);
        let s = DVector::from_column_slice(&t1) - DVector::from_column_slice(&t0);
        let y = DVector::from_column_slice(&g1) - DVector::from_column_slice(&g0);
        assert!((&st.b * s - y).amax() < 1e-10);
    }

    #[test]
    fn bfgs_curvature_guard() {
        let mut st = BfgsState::new(2, 1.0);
        let before = st.b.clone();
        let s = DVector::from_column_slice(&[1.0, 0.0]);
        assert!(!st.update(&s, &DVector::from_column_slice(&[-1.0, 0.0])));
        assert!(!st.update(&s, &DVector::from_column_slice(&[0.0, 1.0])));
        assert_eq!(st.b, before);
    }

    #[test]
    fn probe_secant_matches_directional_curvature() {
        let h = DMatrix::from_row_slice(3, 3, &[2.0, 0.5, 0.0, 0.5, 1.0, 0.3, 0.0, 0.3, 4.0]);
        let energy = |t: &DVector<f64>| 0.5 * t.dot(&(&h * t));
        let theta = DVector::from_column_slice(&[0.3, -0.2, 0.1]);
        let delta = DVector::from_column_slice(&[1.0, -1.0, 1.0]);
        let c = 0.2;
        let q = energy(&(&theta + &delta * c)) + energy(&(&theta - &delta * c)) - 2.0 * energy(&theta);
        let mut st = BfgsState::new(3, 1.0);
        assert!(st.update_along(delta.as_slice(), c, q));
        let along = (&st.b * &delta - &h * &delta).dot(&delta);
        assert!(along.abs() < 1e-10);
        assert!(!st.update_along(delta.as_slice(), c, -q));
    }

    #[test]
    fn bfgs_falls_back_on_indefinite_matrix() {
        let mut st = BfgsState::new(2, 1.0);
        st.b = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        let next = bfgs_step(&mut st, &[0.0, 0.0], &[1.0, 1.0], BfgsStep::Gain(0.5));
        assert!(st.fallback);
        assert_eq!(next, vec![-0.5, -0.5]);
    }
}
