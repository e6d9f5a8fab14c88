//! Gradient engines for an [`Objective`]: parameter shift, SPSA, adjoint
//! differentiation and central finite differences.
//!
//! All engines return the gradient with respect to the free parameters `θ`.
//! Gates sharing a parameter contribute through the chain rule
//! `∂J/∂θ_i = Σ_{g bound to i} w_g ∂J/∂a_g`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ansatz::Objective;
use crate::error::{Error, Result};
use crate::ising::SkInstance;
use crate::rng::SuiteRng;
use crate::sim::Statevector;

/// Gate-level shift constant for `exp(-i a P / 2)` rotations.
pub const PAULI_SHIFT_CONSTANT: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GradMethod {
    #[serde(rename = "ps")]
    ParameterShift,
    #[serde(rename = "spsa")]
    Spsa,
    #[serde(rename = "adjoint")]
    Adjoint,
    #[serde(rename = "fd")]
    FiniteDifference,
}

/// Method constants shared by every gradient call of a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GradientSettings {
    #[serde(rename = "grad")]
    pub method: GradMethod,
    /// Shift constant `r`; shifts are `±π/(4r)`.
    pub shift_constant: f64,
    /// SPSA scale `c`, decayed as `c / (k + 1)^0.101`.
    pub spsa_c: f64,
    pub fd_h: f64,
}

impl Default for GradientSettings {
    fn default() -> Self {
        Self {
            method: GradMethod::Adjoint,
            shift_constant: PAULI_SHIFT_CONSTANT,
            spsa_c: 0.1,
            fd_h: 1e-5,
        }
    }
}

impl GradientSettings {
    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        if !(self.shift_constant > 0.0) {
            errs.push("grad: shift constant r must be > 0".to_string());
        }
        if !(self.spsa_c > 0.0) {
            errs.push("spsa_c: must be > 0".to_string());
        }
        if !(self.fd_h > 0.0) {
            errs.push("fd_h: must be > 0".to_string());
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(errs))
        }
    }

    /// `c_k = c / (k + 1)^0.101`.
    pub fn spsa_scale(&self, k: usize) -> f64 {
        self.spsa_c / ((k + 1) as f64).powf(0.101)
    }
}

/// Shift rule `r [J(a + π/(4r)) - J(a - π/(4r))]`, applied per
/// gate angle and chained into the bound parameters. Costs two evaluations
/// per gate, i.e. `2m` for a fully parameterized ansatz.
pub fn grad_parameter_shift(obj: &Objective<'_>, theta: &[f64], r: f64) -> Result<Vec<f64>> {
    if !(r > 0.0) {
        return Err(Error::config("shift constant r must be > 0"));
    }
    let ansatz = obj.ansatz;
    let angles = ansatz.gate_angles(theta)?;
    let shift = std::f64::consts::PI / (4.0 * r);
    let per_gate: Vec<f64> = (0..angles.len())
        .into_par_iter()
        .map(|g| -> Result<f64> {
            let mut shifted = angles.clone();
            shifted[g] = angles[g] + shift;
            let plus = obj.energy_at_angles(&shifted)?;
            shifted[g] = angles[g] - shift;
            let minus = obj.energy_at_angles(&shifted)?;
            Ok(r * (plus - minus))
        })
        .collect::<Result<_>>()?;
    let mut grad = vec![0.0; theta.len()];
    for (g, d) in per_gate.into_iter().enumerate() {
        grad[ansatz.binding()[g]] += ansatz.gates()[g].coefficient * d;
    }
    Ok(grad)
}

/// One SPSA draw: the estimate, the perturbation that produced it and the
/// two probe energies `J(θ ± cδ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpsaEstimate {
    pub gradient: Vec<f64>,
    pub delta: Vec<f64>,
    pub scale: f64,
    pub plus: f64,
    pub minus: f64,
}

fn probe(
    mut cost: impl FnMut(&[f64]) -> Result<f64>,
    theta: &[f64],
    c: f64,
    delta: &[f64],
) -> Result<(f64, f64)> {
    let plus: Vec<f64> = theta.iter().zip(delta).map(|(t, d)| t + c * d).collect();
    let minus: Vec<f64> = theta.iter().zip(delta).map(|(t, d)| t - c * d).collect();
    Ok((cost(&plus)?, cost(&minus)?))
}

/// `[J(θ + cδ) - J(θ - cδ)] / (2 c δ_i)` for a given `δ ∈ {±1}^m`.
/// Two evaluations of `cost`.
pub fn spsa_with_delta(
    cost: impl FnMut(&[f64]) -> Result<f64>,
    theta: &[f64],
    c: f64,
    delta: &[f64],
) -> Result<Vec<f64>> {
    let (plus, minus) = probe(cost, theta, c, delta)?;
    Ok(delta.iter().map(|d| (plus - minus) / (2.0 * c * d)).collect())
}

pub fn draw_delta(m: usize, rng: &mut SuiteRng) -> Vec<f64> {
    (0..m).map(|_| rng.sign()).collect()
}

/// SPSA over an arbitrary cost; draws `δ` from `rng`.
pub fn spsa(
    cost: impl FnMut(&[f64]) -> Result<f64>,
    theta: &[f64],
    c: f64,
    rng: &mut SuiteRng,
) -> Result<SpsaEstimate> {
    let delta = draw_delta(theta.len(), rng);
    let (plus, minus) = probe(cost, theta, c, &delta)?;
    let gradient = delta.iter().map(|d| (plus - minus) / (2.0 * c * d)).collect();
    Ok(SpsaEstimate {
        gradient,
        delta,
        scale: c,
        plus,
        minus,
    })
}

pub fn grad_spsa(obj: &Objective<'_>, theta: &[f64], c: f64, rng: &mut SuiteRng) -> Result<SpsaEstimate> {
    obj.ansatz.check_params(theta)?;
    spsa(|t| obj.energy(t), theta, c, rng)
}

/// Central differences `[J(θ + h e_i) - J(θ - h e_i)] / 2h`; `2m` evaluations.
pub fn finite_difference(mut cost: impl FnMut(&[f64]) -> Result<f64>, theta: &[f64], h: f64) -> Result<Vec<f64>> {
    let mut t = theta.to_vec();
    let mut grad = Vec::with_capacity(theta.len());
    for i in 0..theta.len() {
        t[i] = theta[i] + h;
        let plus = cost(&t)?;
        t[i] = theta[i] - h;
        let minus = cost(&t)?;
        t[i] = theta[i];
        grad.push((plus - minus) / (2.0 * h));
    }
    Ok(grad)
}

pub fn grad_finite_difference(obj: &Objective<'_>, theta: &[f64], h: f64) -> Result<Vec<f64>> {
    obj.ansatz.check_params(theta)?;
    finite_difference(|t| obj.energy(t), theta, h)
}

fn apply_cost(inst: &SkInstance, psi: &mut Statevector) {
    let amps = psi.amplitudes_mut();
    inst.for_each_energy_chunk(|start, energies| {
        for (a, e) in amps[start..start + energies.len()].iter_mut().zip(energies) {
            *a *= e;
        }
    });
}

/// Adjoint differentiation: one forward pass, then a backward sweep that
/// undoes each gate on both the state `|ψ>` and the costate `<λ| = <ψ| H_c U...`
/// and accumulates `2 Re <λ| ∂U_g/∂a_g |ψ_{g-1}>` with
/// `∂U_g/∂a_g |ψ_{g-1}> = -i/2 P_g |ψ_g>`.
///
/// Returns `(energy, gradient)`. Counts as one function evaluation.
pub fn grad_adjoint(obj: &Objective<'_>, theta: &[f64]) -> Result<(f64, Vec<f64>)> {
    let ansatz = obj.ansatz;
    let angles = ansatz.gate_angles(theta)?;
    let mut psi = ansatz.state_from_angles(&angles)?;
    let mut lambda = psi.clone();
    apply_cost(obj.instance, &mut lambda);
    let energy = psi.inner(&lambda)?.re;
    obj.counter().bump();

    let mut grad = vec![0.0; theta.len()];
    let mut scratch = psi.clone();
    for (g, gate) in ansatz.gates().iter().enumerate().rev() {
        scratch.amplitudes_mut().copy_from_slice(psi.amplitudes());
        scratch.apply_pauli(&gate.generator)?;
        // <λ| (-i/2) P |ψ_g>, real part doubled: Re(-i z) = Im z
        let overlap = lambda.inner(&scratch)?;
        let d_angle = overlap.im;
        grad[ansatz.binding()[g]] += gate.coefficient * d_angle;
        psi.apply_rotation(&gate.generator, -angles[g])?;
        lambda.apply_rotation(&gate.generator, -angles[g])?;
    }
    Ok((energy, grad))
}

#[cfg(test)]
mod tests {
    use std::f64::consts::{FRAC_PI_2, PI};

    use super::*;
    use crate::ansatz::{build_dcqc, build_qaoa, Ansatz, Gate, Mode};
    use crate::ising::{generate_sk, Coupling};
    use crate::sim::{Pauli, PauliString};

    fn linear(w: &[f64]) -> impl FnMut(&[f64]) -> Result<f64> + '_ {
        move |t: &[f64]| Ok(t.iter().zip(w).map(|(a, b)| a * b).sum())
    }

    #[test]
    fn spsa_linear_exact_for_fixed_delta() {
        let g = spsa_with_delta(linear(&[1.0, 0.0]), &[0.3, -0.2], 0.7, &[1.0, 1.0]).unwrap();
        assert_eq!(g, vec![1.0, 1.0]);
    }

    #[test]
    fn spsa_is_deterministic_and_rank_one() {
        let w = [0.5, -1.0, 2.0, 0.0];
        let a = spsa(linear(&w), &[0.0; 4], 0.1, &mut SuiteRng::new(7, 3)).unwrap();
        let b = spsa(linear(&w), &[0.0; 4], 0.1, &mut SuiteRng::new(7, 3)).unwrap();
        assert_eq!(a, b);
        let products: Vec<f64> = a.gradient.iter().zip(&a.delta).map(|(g, d)| g * d).collect();
        assert!(products.iter().all(|p| *p == products[0]));
    }

    #[test]
    fn finite_difference_examples() {
        let g = finite_difference(|_| Ok(3.0), &[1.0, 2.0], 1e-3).unwrap();
        assert_eq!(g, vec![0.0, 0.0]);
        for h in [0.5, 0.25, 0.125] {
            let g = finite_difference(|t| Ok(t[0] * t[0]), &[1.0], h).unwrap();
            assert_eq!(g, vec![2.0]);
        }
    }

    /// `J(θ) = cos θ`: qubits 0 and 1 are pinned from `|+>` to `|0>` by fixed
    /// `-π/2` Y rotations (parameter 0 held at 1), then `Y_0(θ)` with cost
    /// `H = +Z_0 Z_1` reads out `<Z_0> = cos θ`.
    fn cosine_circuit() -> (Ansatz, SkInstance) {
        let inst = SkInstance::from_couplings(2, 0, vec![Coupling { i: 0, j: 1, value: -1.0 }]).unwrap();
        let y = |q| PauliString::single(2, q, Pauli::Y).unwrap();
        let gates = vec![
            Gate { generator: y(1), coefficient: -FRAC_PI_2 },
            Gate { generator: y(0), coefficient: -FRAC_PI_2 },
            Gate { generator: y(0), coefficient: 1.0 },
        ];
        (Ansatz::new(2, gates, vec![0, 0, 1], 2, 1).unwrap(), inst)
    }

    #[test]
    fn analytic_single_rotation() {
        let (a, inst) = cosine_circuit();
        let obj = Objective::new(&a, &inst).unwrap();
        for t in [0.0, 0.4, FRAC_PI_2, 2.0] {
            let e = obj.energy(&[1.0, t]).unwrap();
            assert!((e - t.cos()).abs() < 1e-14, "{e} vs {}", t.cos());
        }
        for (t, want) in [(0.0, 0.0), (FRAC_PI_2, -1.0), (PI, 0.0)] {
            let ps = grad_parameter_shift(&obj, &[1.0, t], 0.5).unwrap();
            let (_, adj) = grad_adjoint(&obj, &[1.0, t]).unwrap();
            assert!((ps[1] - want).abs() < 1e-14);
            assert!((adj[1] - want).abs() < 1e-14);
        }
        // (1/2)[cos(π) - cos(0)] at θ = π/2
        let direct = 0.5 * (PI.cos() - 0.0f64.cos());
        assert_eq!(direct, -1.0);
    }

    #[test]
    fn evaluation_accounting() {
        let inst = generate_sk(5, 2).unwrap();
        let a = build_dcqc(&inst, 1, Mode::Full);
        let m = a.n_params() as u64;
        let theta = vec![0.3; a.n_params()];
        let obj = Objective::new(&a, &inst).unwrap();
        grad_parameter_shift(&obj, &theta, 0.5).unwrap();
        assert_eq!(obj.evaluations(), 2 * m);
        grad_spsa(&obj, &theta, 0.1, &mut SuiteRng::new(0, 0)).unwrap();
        assert_eq!(obj.evaluations(), 2 * m + 2);
        grad_adjoint(&obj, &theta).unwrap();
        assert_eq!(obj.evaluations(), 2 * m + 3);
        grad_finite_difference(&obj, &theta, 1e-4).unwrap();
        assert_eq!(obj.evaluations(), 4 * m + 3);
    }

    #[test]
    fn shared_parameters_use_chain_rule() {
        let inst = generate_sk(5, 9).unwrap();
        let a = build_qaoa(&inst, 2);
        let theta = [0.3, -0.7, 1.1, 0.2];
        let obj = Objective::new(&a, &inst).unwrap();
        let (_, adj) = grad_adjoint(&obj, &theta).unwrap();
        let ps = grad_parameter_shift(&obj, &theta, 0.5).unwrap();

        let full = a.unshared();
        let full_obj = Objective::new(&full, &inst).unwrap();
        let replicated: Vec<f64> = a.binding().iter().map(|&b| theta[b]).collect();
        let (_, per_gate) = grad_adjoint(&full_obj, &replicated).unwrap();
        let mut summed = vec![0.0; 4];
        for (g, &b) in a.binding().iter().enumerate() {
            summed[b] += per_gate[g];
        }
        for i in 0..4 {
            assert!((adj[i] - summed[i]).abs() < 1e-10);
            assert!((adj[i] - ps[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn settings_validation() {
        let mut s = GradientSettings::default();
        assert!(s.validate().is_ok());
        s.spsa_c = 0.0;
        s.fd_h = -1.0;
        match s.validate() {
            Err(Error::Config(v)) => assert_eq!(v.len(), 2),
            other => panic!("{other:?}"),
        }
        assert!((GradientSettings::default().spsa_scale(0) - 0.1).abs() < 1e-15);
    }
}
