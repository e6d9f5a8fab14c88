//! Parameterized circuits: DCQC (counterdiabatic pool `{Y_i, Y_i Z_j}`), QAOA
//! and multi-angle QAOA.
//!
//! An [`Ansatz`] is an ordered gate list plus a binding map from gates to free
//! parameters. Gate `g` applies `exp(-i a_g P_g / 2)` with
//! `a_g = coefficient_g * θ[binding_g]`, so Hamiltonian weights live in the
//! coefficient and derivatives pick up that factor through the chain rule.
//! All three families start from `|+>^{⊗n}`.

use std::fmt;
use std::ops::Range;
use std::sync::atomic::{AtomicU64, Ordering};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ising::{cost_expectation, SkInstance};
use crate::sim::{
    apply_conditional_rotation, apply_diagonal_quadratic, rotate_slice, Pauli, PauliString, Statevector,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Dcqc,
    Qaoa,
    Maqaoa,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Full,
    TwoParam,
}

/// Ansatz descriptor as it appears in run configs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnsatzSpec {
    pub family: Family,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<Mode>,
    pub p: usize,
}

impl AnsatzSpec {
    pub fn new(family: Family, mode: Mode, p: usize) -> Self {
        Self {
            family,
            mode: Some(mode),
            p,
        }
    }

    /// QAOA is inherently two-parameter per layer and maQAOA fully
    /// parameterized; DCQC defaults to full.
    pub fn effective_mode(&self) -> Result<Mode> {
        match (self.family, self.mode) {
            (Family::Dcqc, m) => Ok(m.unwrap_or(Mode::Full)),
            (Family::Qaoa, None | Some(Mode::TwoParam)) => Ok(Mode::TwoParam),
            (Family::Maqaoa, None | Some(Mode::Full)) => Ok(Mode::Full),
            (f, Some(m)) => Err(Error::config(format!(
                "ansatz.mode: {m:?} is not available for family {f:?}"
            ))),
        }
    }

    pub fn build(&self, inst: &SkInstance) -> Result<Ansatz> {
        if self.p == 0 {
            return Err(Error::config("ansatz.p: must be at least 1"));
        }
        let mode = self.effective_mode()?;
        Ok(match self.family {
            Family::Dcqc => build_dcqc(inst, self.p, mode),
            Family::Qaoa => build_qaoa(inst, self.p),
            Family::Maqaoa => build_ma_qaoa(inst, self.p),
        })
    }
}

impl fmt::Display for AnsatzSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let family = match self.family {
            Family::Dcqc => "dcqc",
            Family::Qaoa => "qaoa",
            Family::Maqaoa => "maqaoa",
        };
        match self.effective_mode() {
            Ok(Mode::Full) if self.family == Family::Dcqc => write!(f, "{family}-full-p{}", self.p),
            Ok(Mode::TwoParam) if self.family == Family::Dcqc => {
                write!(f, "{family}-two_param-p{}", self.p)
            }
            _ => write!(f, "{family}-p{}", self.p),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gate {
    pub generator: PauliString,
    pub coefficient: f64,
}

/// Runs of commuting gates that the simulator applies in one sweep.
#[derive(Debug, Clone, PartialEq)]
enum Block {
    Single(usize),
    /// Consecutive `Z` / `ZZ` rotations.
    Diagonal(Range<usize>),
    /// Consecutive `σ_q` / `σ_q Z_j` rotations sharing `q` and `σ`.
    Conditional { qubit: usize, axis: Pauli, gates: Range<usize> },
    /// Leading single-qubit rotations, which keep `|+>^n` a product state.
    Product(Range<usize>),
    /// Gates acting only below `LOCAL_BITS`, swept chunk by chunk so each
    /// chunk stays in cache across the whole run.
    Local(Vec<usize>),
}

const LOCAL_BITS: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq)]
enum GateShape {
    Z(usize),
    Zz(usize, usize),
    Flip { qubit: usize, axis: Pauli, control: Option<usize> },
    Other,
}

fn shape(p: &PauliString) -> GateShape {
    let letters: Vec<(usize, Pauli)> = p.letters().iter().map(|(&q, &l)| (q, l)).collect();
    match letters.as_slice() {
        [(q, Pauli::Z)] => GateShape::Z(*q),
        [(i, Pauli::Z), (j, Pauli::Z)] => GateShape::Zz(*i, *j),
        [(q, axis @ (Pauli::X | Pauli::Y))] => GateShape::Flip {
            qubit: *q,
            axis: *axis,
            control: None,
        },
        [(a, pa), (b, pb)] => match (pa, pb) {
            (Pauli::X | Pauli::Y, Pauli::Z) => GateShape::Flip {
                qubit: *a,
                axis: *pa,
                control: Some(*b),
            },
            (Pauli::Z, Pauli::X | Pauli::Y) => GateShape::Flip {
                qubit: *b,
                axis: *pb,
                control: Some(*a),
            },
            _ => GateShape::Other,
        },
        _ => GateShape::Other,
    }
}

fn plan(gates: &[Gate]) -> Vec<Block> {
    let shapes: Vec<GateShape> = gates.iter().map(|g| shape(&g.generator)).collect();
    let mut blocks = Vec::new();
    let mut g = 0;
    while g < gates.len() {
        let mut end = g + 1;
        let block = match shapes[g] {
            GateShape::Z(_) | GateShape::Zz(..) => {
                while end < gates.len() && matches!(shapes[end], GateShape::Z(_) | GateShape::Zz(..)) {
                    end += 1;
                }
                Block::Diagonal(g..end)
            }
            GateShape::Flip { qubit, axis, .. } => {
                while end < gates.len()
                    && matches!(shapes[end], GateShape::Flip { qubit: q, axis: a, .. } if q == qubit && a == axis)
                {
                    end += 1;
                }
                Block::Conditional {
                    qubit,
                    axis,
                    gates: g..end,
                }
            }
            GateShape::Other => Block::Single(g),
        };
        let block = if end - g == 1 { Block::Single(g) } else { block };
        blocks.push(block);
        g = end;
    }
    merge_singles(gates, blocks)
}

fn merge_singles(gates: &[Gate], blocks: Vec<Block>) -> Vec<Block> {
    let mut out: Vec<Block> = Vec::with_capacity(blocks.len());
    let mut prefix = true;
    for block in blocks {
        let Block::Single(g) = block else {
            prefix = false;
            out.push(block);
            continue;
        };
        let p = &gates[g].generator;
        if prefix && p.weight() == 1 {
            match out.last_mut() {
                Some(Block::Product(r)) => r.end = g + 1,
                _ => out.push(Block::Product(g..g + 1)),
            }
            continue;
        }
        prefix = false;
        let local = p.letters().keys().all(|&q| q < LOCAL_BITS);
        match out.last_mut() {
            Some(Block::Local(run)) if local => run.push(g),
            _ if local => out.push(Block::Local(vec![g])),
            _ => out.push(Block::Single(g)),
        }
    }
    out
}

fn product_state(n: usize, gates: &[Gate], range: Range<usize>, angles: &[f64]) -> Result<Statevector> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut factors = vec![[Complex64::new(h, 0.0); 2]; n];
    for g in range {
        let (&q, &letter) = gates[g].generator.letters().iter().next().expect("weight-1 generator");
        let mut one = Statevector::from_amplitudes(factors[q].to_vec())?;
        one.apply_rotation(&PauliString::single(1, 0, letter)?, angles[g])?;
        factors[q].copy_from_slice(one.amplitudes());
    }
    let mut amps = Vec::with_capacity(1 << n);
    amps.push(Complex64::new(1.0, 0.0));
    for f in &factors {
        let len = amps.len();
        for k in 0..len {
            amps.push(amps[k] * f[1]);
        }
        for a in &mut amps[..len] {
            *a *= f[0];
        }
    }
    Statevector::from_amplitudes(amps)
}

/// Function-evaluation counter owned by one optimizer run.
#[derive(Debug, Default)]
pub struct EvalCounter(AtomicU64);

impl EvalCounter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self) -> u64 {
        self.0.load(Ordering::Relaxed)
    }

    pub(crate) fn bump(&self) {
        self.0.fetch_add(1, Ordering::Relaxed);
    }
}

#[derive(Debug, Clone)]
pub struct Ansatz {
    n_qubits: usize,
    gates: Vec<Gate>,
    binding: Vec<usize>,
    n_params: usize,
    layers: usize,
    blocks: Vec<Block>,
}

impl Ansatz {
    /// Checks that every gate acts on `n_qubits`, every binding is in range
    /// and every parameter drives at least one gate.
    pub fn new(n_qubits: usize, gates: Vec<Gate>, binding: Vec<usize>, n_params: usize, layers: usize) -> Result<Self> {
        if gates.len() != binding.len() {
            return Err(Error::InvalidInstance(format!(
                "{} gates but {} bindings",
                gates.len(),
                binding.len()
            )));
        }
        for g in &gates {
            if g.generator.n_qubits() != n_qubits {
                return Err(Error::Dimension {
                    expected: n_qubits,
                    got: g.generator.n_qubits(),
                });
            }
        }
        let mut used = vec![false; n_params];
        for &b in &binding {
            if b >= n_params {
                return Err(Error::IndexOutOfRange {
                    index: b,
                    bound: n_params,
                });
            }
            used[b] = true;
        }
        if let Some(free) = used.iter().position(|u| !u) {
            return Err(Error::InvalidInstance(format!("parameter {free} drives no gate")));
        }
        let blocks = plan(&gates);
        Ok(Self {
            n_qubits,
            gates,
            binding,
            n_params,
            layers,
            blocks,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn binding(&self) -> &[usize] {
        &self.binding
    }

    /// Number of free parameters `m`.
    pub fn n_params(&self) -> usize {
        self.n_params
    }

    pub fn layers(&self) -> usize {
        self.layers
    }

    /// Gates bound to each parameter.
    pub fn gates_of_param(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.n_params];
        for (g, &b) in self.binding.iter().enumerate() {
            out[b].push(g);
        }
        out
    }

    pub fn check_params(&self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.n_params {
            return Err(Error::ParameterLength {
                expected: self.n_params,
                got: theta.len(),
            });
        }
        Ok(())
    }

    /// Per-gate rotation angles `a_g = coefficient_g θ[binding_g]`.
    pub fn gate_angles(&self, theta: &[f64]) -> Result<Vec<f64>> {
        self.check_params(theta)?;
        Ok(self
            .gates
            .iter()
            .zip(&self.binding)
            .map(|(g, &b)| g.coefficient * theta[b])
            .collect())
    }

    /// Same ansatz with every gate given its own parameter (coefficients kept).
    pub fn unshared(&self) -> Ansatz {
        Ansatz::new(
            self.n_qubits,
            self.gates.clone(),
            (0..self.gates.len()).collect(),
            self.gates.len(),
            self.layers,
        )
        .expect("one parameter per gate is always a valid binding")
    }

    /// Prepares the circuit state for explicit gate angles, using the fused
    /// block sweeps.
    pub fn state_from_angles(&self, angles: &[f64]) -> Result<Statevector> {
        if angles.len() != self.gates.len() {
            return Err(Error::ParameterLength {
                expected: self.gates.len(),
                got: angles.len(),
            });
        }
        let mut psi = Statevector::plus(self.n_qubits)?;
        for block in &self.blocks {
            match block {
                Block::Single(g) => psi.apply_rotation(&self.gates[*g].generator, angles[*g])?,
                Block::Product(range) => {
                    psi = product_state(self.n_qubits, &self.gates, range.clone(), angles)?
                }
                Block::Local(run) => {
                    let chunk = 1usize << LOCAL_BITS.min(self.n_qubits);
                    for part in psi.amplitudes_mut().chunks_exact_mut(chunk) {
                        for &g in run {
                            rotate_slice(part, &self.gates[g].generator, angles[g]);
                        }
                    }
                }
                Block::Diagonal(range) => {
                    let mut linear = Vec::new();
                    let mut quadratic = Vec::new();
                    for g in range.clone() {
                        match shape(&self.gates[g].generator) {
                            GateShape::Z(q) => linear.push((q, angles[g])),
                            GateShape::Zz(i, j) => quadratic.push((i, j, angles[g])),
                            _ => unreachable!("diagonal block holds only Z and ZZ gates"),
                        }
                    }
                    apply_diagonal_quadratic(&mut psi, &linear, &quadratic);
                }
                Block::Conditional { qubit, axis, gates } => {
                    let mut offset = 0.0;
                    let mut controls = Vec::new();
                    for g in gates.clone() {
                        match shape(&self.gates[g].generator) {
                            GateShape::Flip { control: None, .. } => offset += angles[g],
                            GateShape::Flip { control: Some(j), .. } => controls.push((j, angles[g])),
                            _ => unreachable!("conditional block holds only flip gates"),
                        }
                    }
                    apply_conditional_rotation(&mut psi, *qubit, *axis, offset, &controls);
                }
            }
        }
        Ok(psi)
    }

    /// Gate-by-gate reference path, one in-place rotation per gate.
    pub fn state_gate_by_gate(&self, angles: &[f64]) -> Result<Statevector> {
        if angles.len() != self.gates.len() {
            return Err(Error::ParameterLength {
                expected: self.gates.len(),
                got: angles.len(),
            });
        }
        let mut psi = Statevector::plus(self.n_qubits)?;
        for (g, &a) in self.gates.iter().zip(angles) {
            psi.apply_rotation(&g.generator, a)?;
        }
        Ok(psi)
    }

    pub fn state(&self, theta: &[f64]) -> Result<Statevector> {
        self.state_from_angles(&self.gate_angles(theta)?)
    }

    /// Energy `<H_c>` and final state; one function evaluation.
    pub fn evaluate(&self, theta: &[f64], inst: &SkInstance, counter: &EvalCounter) -> Result<(f64, Statevector)> {
        self.check_instance(inst)?;
        let psi = self.state(theta)?;
        let energy = cost_expectation(inst, &psi)?;
        counter.bump();
        Ok((energy, psi))
    }

    pub(crate) fn check_instance(&self, inst: &SkInstance) -> Result<()> {
        if inst.n_qubits() != self.n_qubits {
            return Err(Error::Dimension {
                expected: self.n_qubits,
                got: inst.n_qubits(),
            });
        }
        Ok(())
    }
}

/// DCQC circuit from the SK counterdiabatic pool.
///
/// Each layer applies `Y_q` for every qubit, then `Y_i Z_j` for every pair
/// `i < j` in lexicographic order. `TwoParam` binds all singles of layer `l`
/// to parameter `2l` and all pairs to `2l + 1`; `Full` gives every gate its
/// own parameter, `n(n-1)/2 + n` per layer.
pub fn build_dcqc(inst: &SkInstance, p: usize, mode: Mode) -> Ansatz {
    let n = inst.n_qubits();
    let mut gates = Vec::new();
    let mut binding = Vec::new();
    for layer in 0..p {
        for q in 0..n {
            gates.push(Gate {
                generator: PauliString::single(n, q, Pauli::Y).expect("qubit in range"),
                coefficient: 1.0,
            });
            binding.push(match mode {
                Mode::Full => gates.len() - 1,
                Mode::TwoParam => 2 * layer,
            });
        }
        for c in inst.couplings() {
            gates.push(Gate {
                generator: PauliString::pair(n, (c.i, Pauli::Y), (c.j, Pauli::Z)).expect("pair in range"),
                coefficient: 1.0,
            });
            binding.push(match mode {
                Mode::Full => gates.len() - 1,
                Mode::TwoParam => 2 * layer + 1,
            });
        }
    }
    let m = match mode {
        Mode::Full => gates.len(),
        Mode::TwoParam => 2 * p,
    };
    Ansatz::new(n, gates, binding, m, p).expect("dcqc construction is consistent")
}

fn per_layer(n: usize) -> usize {
    n * (n - 1) / 2 + n
}

fn qaoa_gates(inst: &SkInstance) -> Vec<Gate> {
    let n = inst.n_qubits();
    let mut gates = Vec::with_capacity(per_layer(n));
    for c in inst.couplings() {
        gates.push(Gate {
            generator: PauliString::pair(n, (c.i, Pauli::Z), (c.j, Pauli::Z)).expect("pair in range"),
            coefficient: -2.0 * c.value,
        });
    }
    for q in 0..n {
        gates.push(Gate {
            generator: PauliString::single(n, q, Pauli::X).expect("qubit in range"),
            coefficient: 2.0,
        });
    }
    gates
}

/// Standard QAOA: `exp(-i α H_c)` as one `Z_i Z_j` rotation per pair with
/// coefficient `-2 J_ij`, then `exp(-i β Σ X_q)` with coefficient 2.
/// Parameters `(α_l, β_l) = (2l, 2l + 1)`.
pub fn build_qaoa(inst: &SkInstance, p: usize) -> Ansatz {
    let n = inst.n_qubits();
    let pairs = inst.couplings().len();
    let mut gates = Vec::new();
    let mut binding = Vec::new();
    for layer in 0..p {
        gates.extend(qaoa_gates(inst));
        binding.extend(std::iter::repeat_n(2 * layer, pairs));
        binding.extend(std::iter::repeat_n(2 * layer + 1, n));
    }
    Ansatz::new(n, gates, binding, 2 * p, p).expect("qaoa construction is consistent")
}

/// Multi-angle QAOA: the QAOA gate sequence with one parameter per gate.
pub fn build_ma_qaoa(inst: &SkInstance, p: usize) -> Ansatz {
    let n = inst.n_qubits();
    let mut gates = Vec::new();
    for _ in 0..p {
        gates.extend(qaoa_gates(inst));
    }
    let m = gates.len();
    Ansatz::new(n, gates, (0..m).collect(), m, p).expect("ma-qaoa construction is consistent")
}

/// An (ansatz, instance) cost function with its own evaluation counter.
#[derive(Debug)]
pub struct Objective<'a> {
    pub ansatz: &'a Ansatz,
    pub instance: &'a SkInstance,
    counter: EvalCounter,
}

impl<'a> Objective<'a> {
    pub fn new(ansatz: &'a Ansatz, instance: &'a SkInstance) -> Result<Self> {
        ansatz.check_instance(instance)?;
        Ok(Self {
            ansatz,
            instance,
            counter: EvalCounter::new(),
        })
    }

    pub fn n_params(&self) -> usize {
        self.ansatz.n_params()
    }

    /// Cumulative function evaluations.
    pub fn evaluations(&self) -> u64 {
        self.counter.get()
    }

    pub fn counter(&self) -> &EvalCounter {
        &self.counter
    }

    pub fn energy(&self, theta: &[f64]) -> Result<f64> {
        Ok(self.ansatz.evaluate(theta, self.instance, &self.counter)?.0)
    }

    pub fn evaluate(&self, theta: &[f64]) -> Result<(f64, Statevector)> {
        self.ansatz.evaluate(theta, self.instance, &self.counter)
    }

    /// Energy for explicit per-gate angles; counts one evaluation.
    pub fn energy_at_angles(&self, angles: &[f64]) -> Result<f64> {
        let psi = self.ansatz.state_from_angles(angles)?;
        let e = cost_expectation(self.instance, &psi)?;
        self.counter.bump();
        Ok(e)
    }
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::ising::generate_sk;
    use crate::rng::SuiteRng;

    fn random_theta(m: usize, seed: u64) -> Vec<f64> {
        let mut rng = SuiteRng::new(seed, 99);
        (0..m).map(|_| rng.angle()).collect()
    }

    #[test]
    fn parameter_counts() {
        let i10 = generate_sk(10, 1).unwrap();
        let full = build_dcqc(&i10, 1, Mode::Full);
        assert_eq!(full.n_params(), 55);
        assert_eq!(full.gates().len(), 55);
        let two = build_dcqc(&i10, 1, Mode::TwoParam);
        assert_eq!(two.n_params(), 2);
        assert_eq!(two.gates().len(), 55);
        assert_eq!(build_dcqc(&generate_sk(28, 1).unwrap(), 1, Mode::Full).n_params(), 406);

        assert_eq!(build_qaoa(&i10, 1).n_params(), 2);
        assert_eq!(build_qaoa(&i10, 1).gates().len(), 55);
        assert_eq!(build_qaoa(&generate_sk(4, 1).unwrap(), 3).n_params(), 6);
        assert_eq!(build_ma_qaoa(&i10, 1).n_params(), 55);
        assert_eq!(build_ma_qaoa(&generate_sk(2, 1).unwrap(), 1).n_params(), 3);
        let i6 = generate_sk(6, 2).unwrap();
        for p in 1..4 {
            assert_eq!(build_ma_qaoa(&i6, p).gates().len(), build_qaoa(&i6, p).gates().len());
            assert_eq!(build_dcqc(&i6, p, Mode::Full).gates().len(), build_ma_qaoa(&i6, p).gates().len());
        }
    }

    #[test]
    fn dcqc_layout() {
        let inst = generate_sk(4, 3).unwrap();
        let a = build_dcqc(&inst, 2, Mode::Full);
        let labels: Vec<String> = a.gates()[..10].iter().map(|g| g.generator.to_string()).collect();
        assert_eq!(
            labels,
            ["YIII", "IYII", "IIYI", "IIIY", "YZII", "YIZI", "YIIZ", "IYZI", "IYIZ", "IIYZ"]
        );
        assert_eq!(a.binding(), (0..20).collect::<Vec<_>>().as_slice());
        let two = build_dcqc(&inst, 2, Mode::TwoParam);
        assert_eq!(&two.binding()[..10], &[0, 0, 0, 0, 1, 1, 1, 1, 1, 1]);
        assert_eq!(&two.binding()[10..], &[2, 2, 2, 2, 3, 3, 3, 3, 3, 3]);
    }

    #[test]
    fn zero_angles_leave_plus_state() {
        let inst = generate_sk(6, 4).unwrap();
        for a in [
            build_dcqc(&inst, 1, Mode::Full),
            build_dcqc(&inst, 2, Mode::TwoParam),
            build_qaoa(&inst, 2),
            build_ma_qaoa(&inst, 1),
        ] {
            let c = EvalCounter::new();
            let (e, _) = a.evaluate(&vec![0.0; a.n_params()], &inst, &c).unwrap();
            assert!(e.abs() < 1e-12);
            assert_eq!(c.get(), 1);
        }
    }

    #[test]
    fn fused_plan_matches_gate_by_gate() {
        let inst = generate_sk(7, 5).unwrap();
        for (k, a) in [
            build_dcqc(&inst, 2, Mode::Full),
            build_dcqc(&inst, 1, Mode::TwoParam),
            build_qaoa(&inst, 3),
            build_ma_qaoa(&inst, 2),
        ]
        .into_iter()
        .enumerate()
        {
            let angles = a.gate_angles(&random_theta(a.n_params(), k as u64)).unwrap();
            let fused = a.state_from_angles(&angles).unwrap();
            let slow = a.state_gate_by_gate(&angles).unwrap();
            let diff = fused
                .amplitudes()
                .iter()
                .zip(slow.amplitudes())
                .map(|(x, y)| (x - y).norm())
                .fold(0.0, f64::max);
            assert!(diff < 1e-12, "ansatz {k}: {diff}");
        }
    }

    #[test]
    fn fused_plan_above_chunk_width() {
        let inst = generate_sk(LOCAL_BITS + 2, 9).unwrap();
        for a in [build_dcqc(&inst, 2, Mode::Full), build_ma_qaoa(&inst, 2)] {
            let angles = a.gate_angles(&random_theta(a.n_params(), 3)).unwrap();
            let fused = a.state_from_angles(&angles).unwrap();
            let slow = a.state_gate_by_gate(&angles).unwrap();
            let diff = fused
                .amplitudes()
                .iter()
                .zip(slow.amplitudes())
                .map(|(x, y)| (x - y).norm())
                .fold(0.0, f64::max);
            assert!(diff < 1e-12, "{diff}");
        }
    }

    #[test]
    fn parameter_length_checked() {
        let inst = generate_sk(3, 0).unwrap();
        let a = build_qaoa(&inst, 1);
        assert!(matches!(
            a.evaluate(&[0.1], &inst, &EvalCounter::new()),
            Err(Error::ParameterLength { expected: 2, got: 1 })
        ));
        let other = generate_sk(4, 0).unwrap();
        assert!(matches!(
            a.evaluate(&[0.1, 0.2], &other, &EvalCounter::new()),
            Err(Error::Dimension { .. })
        ));
    }

    #[test]
    fn shared_binding_equals_replicated_full() {
        let inst = generate_sk(5, 6).unwrap();
        let two = build_dcqc(&inst, 2, Mode::TwoParam);
        let theta = random_theta(4, 1);
        let replicated: Vec<f64> = two.binding().iter().map(|&b| theta[b]).collect();
        let full = two.unshared();
        let c = EvalCounter::new();
        let (e1, _) = two.evaluate(&theta, &inst, &c).unwrap();
        let (e2, _) = full.evaluate(&replicated, &inst, &c).unwrap();
        assert!((e1 - e2).abs() < 1e-12);
    }

    #[test]
    fn period_two_pi_per_parameter() {
        let inst = generate_sk(5, 8).unwrap();
        let a = build_dcqc(&inst, 1, Mode::Full);
        let theta = random_theta(a.n_params(), 3);
        let c = EvalCounter::new();
        let (e0, _) = a.evaluate(&theta, &inst, &c).unwrap();
        for i in [0, 4, 7, 14] {
            let mut t = theta.clone();
            t[i] += 2.0 * PI;
            let (e1, _) = a.evaluate(&t, &inst, &c).unwrap();
            assert!((e0 - e1).abs() < 1e-10);
        }
    }

    #[test]
    fn descriptor_modes() {
        let spec: AnsatzSpec = serde_json::from_str(r#"{"family":"dcqc","mode":"two_param","p":1}"#).unwrap();
        assert_eq!(spec.effective_mode().unwrap(), Mode::TwoParam);
        let bad = AnsatzSpec::new(Family::Qaoa, Mode::Full, 1);
        assert!(bad.effective_mode().is_err());
        let inst = generate_sk(3, 0).unwrap();
        assert!(AnsatzSpec::new(Family::Dcqc, Mode::Full, 0).build(&inst).is_err());
        assert_eq!(spec.to_string(), "dcqc-two_param-p1");
    }
}
