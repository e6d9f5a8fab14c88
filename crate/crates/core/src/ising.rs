//! Sherrington–Kirkpatrick instances with ±1 couplings and the diagonal cost
//! `H_c = -Σ_{i<j} J_ij Z_i Z_j`.
//!
//! Spin convention: `s_k = +1` when bit `k` of the basis index is 0, `-1`
//! otherwise, matching the `Z` eigenvalue on little-endian amplitudes.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{streams, SuiteRng};
use crate::sim::{Pauli, PauliString, Statevector, MAX_QUBITS};

/// Largest `n` for which [`exact_ground_truth`] enumerates all basis states.
pub const MAX_ENUMERATION_QUBITS: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coupling {
    pub i: usize,
    pub j: usize,
    pub value: f64,
}

/// An SK instance: one ±1 coupling per unordered pair, in lexicographic order.
#[derive(Debug, Clone, PartialEq)]
pub struct SkInstance {
    n_qubits: usize,
    seed: u64,
    couplings: Vec<Coupling>,
    dense: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceFile {
    n: usize,
    seed: u64,
    couplings: Vec<(usize, usize, serde_json::Number)>,
}

impl Serialize for SkInstance {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_file().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for SkInstance {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        Self::from_file(InstanceFile::deserialize(deserializer)?).map_err(serde::de::Error::custom)
    }
}

impl SkInstance {
    /// Validates and wraps an explicit coupling list.
    pub fn from_couplings(n: usize, seed: u64, couplings: Vec<Coupling>) -> Result<Self> {
        check_n(n)?;
        let expected = n * (n - 1) / 2;
        if couplings.len() != expected {
            return Err(Error::InvalidInstance(format!(
                "expected {expected} couplings for n = {n}, got {}",
                couplings.len()
            )));
        }
        let mut dense = vec![0.0; n * n];
        let mut seen = vec![false; n * n];
        for c in &couplings {
            if c.i >= c.j || c.j >= n {
                return Err(Error::InvalidInstance(format!(
                    "coupling ({}, {}) must satisfy i < j < {n}",
                    c.i, c.j
                )));
            }
            if c.value != 1.0 && c.value != -1.0 {
                return Err(Error::InvalidInstance(format!(
                    "coupling ({}, {}) = {} is not ±1",
                    c.i, c.j, c.value
                )));
            }
            if std::mem::replace(&mut seen[c.i * n + c.j], true) {
                return Err(Error::InvalidInstance(format!(
                    "duplicate coupling ({}, {})",
                    c.i, c.j
                )));
            }
            dense[c.i * n + c.j] = c.value;
            dense[c.j * n + c.i] = c.value;
        }
        let mut couplings = couplings;
        couplings.sort_by_key(|c| (c.i, c.j));
        Ok(Self {
            n_qubits: n,
            seed,
            couplings,
            dense,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn couplings(&self) -> &[Coupling] {
        &self.couplings
    }

    /// `J_ij` for `i != j` (symmetric), 0 on the diagonal.
    pub fn coupling(&self, i: usize, j: usize) -> f64 {
        self.dense[i * self.n_qubits + j]
    }

    /// The cost Hamiltonian as a Pauli sum `{(-J_ij, Z_i Z_j)}`.
    pub fn pauli_terms(&self) -> Vec<(f64, PauliString)> {
        self.couplings
            .iter()
            .map(|c| {
                let p = PauliString::pair(self.n_qubits, (c.i, Pauli::Z), (c.j, Pauli::Z))
                    .expect("coupling indices validated at construction");
                (-c.value, p)
            })
            .collect()
    }

    fn to_file(&self) -> InstanceFile {
        InstanceFile {
            n: self.n_qubits,
            seed: self.seed,
            couplings: self
                .couplings
                .iter()
                .map(|c| (c.i, c.j, serde_json::Number::from(c.value as i64)))
                .collect(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string(&self.to_file()).expect("instance serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::from_file(serde_json::from_str(text)?)
    }

    fn from_file(file: InstanceFile) -> Result<Self> {
        let couplings = file
            .couplings
            .into_iter()
            .map(|(i, j, v)| {
                let value = v.as_f64().ok_or_else(|| {
                    Error::InvalidInstance(format!("coupling ({i}, {j}) is not a number"))
                })?;
                Ok(Coupling { i, j, value })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_couplings(file.n, file.seed, couplings)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    /// Streams `H_c(z)` for every basis index in ascending order, one chunk of
    /// `2^{⌈n/2⌉}` consecutive indices at a time: `f(first_index, energies)`.
    ///
    /// Each chunk is built from per-half tables plus a cross term filled by
    /// doubling, so the whole sweep costs `O(2^n)` additions. Couplings are
    /// ±1, so every energy is an exact integer in `f64`.
    pub fn for_each_energy_chunk(&self, mut f: impl FnMut(usize, &[f64])) {
        let n = self.n_qubits;
        let low_bits = n.div_ceil(2);
        let low_dim = 1usize << low_bits;
        let high_dim = 1usize << (n - low_bits);

        let spin = |z: usize, q: usize| if (z >> q) & 1 == 0 { 1.0 } else { -1.0 };
        let mut low = vec![0.0; low_dim];
        let mut high = vec![0.0; high_dim];
        for c in &self.couplings {
            if c.j < low_bits {
                for (z, e) in low.iter_mut().enumerate() {
                    *e -= c.value * spin(z, c.i) * spin(z, c.j);
                }
            } else if c.i >= low_bits {
                for (z, e) in high.iter_mut().enumerate() {
                    *e -= c.value * spin(z, c.i - low_bits) * spin(z, c.j - low_bits);
                }
            }
        }

        let mut field = vec![0.0; low_bits];
        let mut row = vec![0.0; low_dim];
        for (zh, &eh) in high.iter().enumerate() {
            field.iter_mut().for_each(|h| *h = 0.0);
            for c in &self.couplings {
                if c.i < low_bits && c.j >= low_bits {
                    field[c.i] -= c.value * spin(zh, c.j - low_bits);
                }
            }
            row[0] = field.iter().sum::<f64>();
            for (b, &h) in field.iter().enumerate() {
                let len = 1usize << b;
                for z in 0..len {
                    row[z | len] = row[z] - 2.0 * h;
                }
            }
            for (r, &el) in row.iter_mut().zip(&low) {
                *r += el + eh;
            }
            f(zh * low_dim, &row);
        }
    }
}

fn check_n(n: usize) -> Result<()> {
    if !(2..=MAX_QUBITS).contains(&n) {
        return Err(Error::Size {
            n,
            min: 2,
            max: MAX_QUBITS,
        });
    }
    Ok(())
}

/// Draws every `J_ij` (lexicographic pair order) as an independent fair ±1
/// from the suite generator on the instance stream of `seed`.
pub fn generate_sk(n: usize, seed: u64) -> Result<SkInstance> {
    check_n(n)?;
    let mut rng = SuiteRng::new(seed, streams::INSTANCE);
    let mut couplings = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            couplings.push(Coupling {
                i,
                j,
                value: rng.sign(),
            });
        }
    }
    SkInstance::from_couplings(n, seed, couplings)
}

/// `-Σ_{i<j} J_ij s_i s_j` for one basis index, by direct summation.
pub fn classical_energy(inst: &SkInstance, bits: usize) -> Result<f64> {
    let bound = 1usize << inst.n_qubits;
    if bits >= bound {
        return Err(Error::IndexOutOfRange { index: bits, bound });
    }
    let spin = |q: usize| if (bits >> q) & 1 == 0 { 1.0 } else { -1.0 };
    Ok(-inst
        .couplings
        .iter()
        .map(|c| c.value * spin(c.i) * spin(c.j))
        .sum::<f64>())
}

/// Exact minimum energy and every basis index attaining it.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub energy: f64,
    pub optimal_bitstrings: Vec<usize>,
}

impl GroundTruth {
    /// `Σ_{z optimal} |ψ_z|²`, the probability mass on the degenerate ground space.
    pub fn fidelity(&self, psi: &Statevector) -> f64 {
        self.optimal_bitstrings
            .iter()
            .map(|&z| psi.probability(z))
            .sum()
    }

    pub fn ratio(&self, energy: f64) -> Result<f64> {
        if self.energy == 0.0 {
            return Err(Error::UndefinedRatio);
        }
        Ok(energy / self.energy)
    }
}

pub fn exact_ground_truth(inst: &SkInstance) -> Result<GroundTruth> {
    let n = inst.n_qubits;
    if n > MAX_ENUMERATION_QUBITS {
        return Err(Error::Capacity {
            n,
            max: MAX_ENUMERATION_QUBITS,
        });
    }
    let mut best = f64::INFINITY;
    let mut argmin = Vec::new();
    inst.for_each_energy_chunk(|start, energies| {
        for (k, &e) in energies.iter().enumerate() {
            if e < best {
                best = e;
                argmin.clear();
                argmin.push(start + k);
            } else if e == best {
                argmin.push(start + k);
            }
        }
    });
    Ok(GroundTruth {
        energy: best,
        optimal_bitstrings: argmin,
    })
}

/// `<ψ|H_c|ψ> = Σ_z |ψ_z|² H_c(z)`.
pub fn cost_expectation(inst: &SkInstance, psi: &Statevector) -> Result<f64> {
    psi.check_dim(inst.n_qubits)?;
    let amps = psi.amplitudes();
    let mut total = 0.0;
    inst.for_each_energy_chunk(|start, energies| {
        let chunk = &amps[start..start + energies.len()];
        total += chunk
            .iter()
            .zip(energies)
            .map(|(a, e)| a.norm_sqr() * e)
            .sum::<f64>();
    });
    Ok(total)
}

/// `<H_c> / E_g`.
pub fn approximation_ratio(inst: &SkInstance, truth: &GroundTruth, psi: &Statevector) -> Result<f64> {
    truth.ratio(cost_expectation(inst, psi)?)
}

pub fn ground_state_fidelity(inst: &SkInstance, truth: &GroundTruth, psi: &Statevector) -> Result<f64> {
    psi.check_dim(inst.n_qubits)?;
    Ok(truth.fidelity(psi))
}

#[cfg(test)]
mod tests {
    use num_complex::Complex64;

    use super::*;

    fn instance(n: usize, values: &[f64]) -> SkInstance {
        let mut cs = Vec::new();
        let mut k = 0;
        for i in 0..n {
            for j in i + 1..n {
                cs.push(Coupling { i, j, value: values[k] });
                k += 1;
            }
        }
        SkInstance::from_couplings(n, 0, cs).unwrap()
    }

    fn basis(n: usize, z: usize) -> Statevector {
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n];
        amps[z] = Complex64::new(1.0, 0.0);
        Statevector::from_amplitudes(amps).unwrap()
    }

    #[test]
    fn generate_shape_and_determinism() {
        let a = generate_sk(4, 9).unwrap();
        assert_eq!(a.couplings().len(), 6);
        assert!(a.couplings().iter().all(|c| c.value.abs() == 1.0 && c.i < c.j));
        assert_eq!(a, generate_sk(4, 9).unwrap());
        assert!(matches!(generate_sk(1, 0), Err(Error::Size { .. })));
        assert!(matches!(generate_sk(31, 0), Err(Error::Size { .. })));
    }

    #[test]
    fn classical_energy_examples() {
        let ferro = instance(2, &[1.0]);
        assert_eq!(classical_energy(&ferro, 0b00).unwrap(), -1.0);
        assert_eq!(classical_energy(&ferro, 0b01).unwrap(), 1.0);
        assert!(classical_energy(&ferro, 4).is_err());

        // (J01, J02, J12) = (+1, -1, +1); bits 010 -> s = (+1, -1, +1)
        let tri = instance(3, &[1.0, -1.0, 1.0]);
        assert_eq!(classical_energy(&tri, 0b010).unwrap(), 3.0);
    }

    #[test]
    fn ground_truth_examples() {
        let ferro = instance(2, &[1.0]);
        let gt = exact_ground_truth(&ferro).unwrap();
        assert_eq!(gt.energy, -1.0);
        assert_eq!(gt.optimal_bitstrings, vec![0b00, 0b11]);

        let tri = instance(3, &[1.0, -1.0, 1.0]);
        let gt = exact_ground_truth(&tri).unwrap();
        assert_eq!(gt.energy, -1.0);
        assert_eq!(gt.optimal_bitstrings.len(), 6);

        let big = generate_sk(25, 0).unwrap();
        assert!(matches!(exact_ground_truth(&big), Err(Error::Capacity { n: 25, max: 24 })));
    }

    #[test]
    fn streamed_energies_match_direct_sum() {
        for n in [2usize, 3, 4, 7, 10] {
            let inst = generate_sk(n, 100 + n as u64).unwrap();
            let mut count = 0;
            inst.for_each_energy_chunk(|start, es| {
                for (k, &e) in es.iter().enumerate() {
                    assert_eq!(e, classical_energy(&inst, start + k).unwrap());
                    count += 1;
                }
            });
            assert_eq!(count, 1 << n);
        }
    }

    #[test]
    fn cost_and_metrics() {
        let ferro = instance(2, &[1.0]);
        assert_eq!(cost_expectation(&ferro, &basis(2, 0)).unwrap(), -1.0);
        let inst = generate_sk(6, 3).unwrap();
        assert!(cost_expectation(&inst, &Statevector::plus(6).unwrap()).unwrap().abs() < 1e-12);
        assert!(cost_expectation(&inst, &basis(3, 0)).is_err());

        let gt = exact_ground_truth(&inst).unwrap();
        let opt = basis(6, gt.optimal_bitstrings[0]);
        assert_eq!(approximation_ratio(&inst, &gt, &opt).unwrap(), 1.0);
        assert_eq!(ground_state_fidelity(&inst, &gt, &opt).unwrap(), 1.0);
        let plus = Statevector::plus(6).unwrap();
        assert!(approximation_ratio(&inst, &gt, &plus).unwrap().abs() < 1e-12);

        let ferro_gt = exact_ground_truth(&ferro).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let cat = Statevector::from_amplitudes(vec![
            Complex64::new(h, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, h),
        ])
        .unwrap();
        assert!((ground_state_fidelity(&ferro, &ferro_gt, &cat).unwrap() - 1.0).abs() < 1e-15);

        let zero = GroundTruth {
            energy: 0.0,
            optimal_bitstrings: vec![0],
        };
        assert!(matches!(zero.ratio(-1.0), Err(Error::UndefinedRatio)));
    }

    #[test]
    fn json_round_trip_is_byte_exact() {
        let inst = generate_sk(5, u64::MAX - 3).unwrap();
        let text = inst.to_json();
        let back = SkInstance::from_json(&text).unwrap();
        assert_eq!(back, inst);
        assert_eq!(back.to_json(), text);
        assert!(SkInstance::from_json(r#"{"n":2,"seed":0,"couplings":[[0,1,0.5]]}"#).is_err());
        assert!(SkInstance::from_json(r#"{"n":3,"seed":0,"couplings":[[0,1,1]]}"#).is_err());
        assert!(SkInstance::from_json(r#"{"n":2,"seed":0,"couplings":[[1,0,1]]}"#).is_err());
    }
}
