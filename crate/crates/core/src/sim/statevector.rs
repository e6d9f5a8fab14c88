use num_complex::Complex64;

use crate::error::{Error, Result};

use super::{PauliString, MAX_QUBITS};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Dense complex amplitudes of an `n_qubits` register.
///
/// Ordering is little-endian: qubit `k` is bit `k` of the amplitude index.
#[derive(Debug, Clone, PartialEq)]
pub struct Statevector {
    n_qubits: usize,
    amps: Vec<Complex64>,
}

fn check_size(n: usize) -> Result<()> {
    if n == 0 || n > MAX_QUBITS {
        Err(Error::Size {
            n,
            min: 1,
            max: MAX_QUBITS,
        })
    } else {
        Ok(())
    }
}

impl Statevector {
    /// `|0...0>`.
    pub fn zero(n: usize) -> Result<Self> {
        check_size(n)?;
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n];
        amps[0] = Complex64::new(1.0, 0.0);
        Ok(Self { n_qubits: n, amps })
    }

    /// `|+>^{⊗n}`, the uniform superposition.
    pub fn plus(n: usize) -> Result<Self> {
        check_size(n)?;
        let a = (0.5f64).powf(n as f64 / 2.0);
        Ok(Self {
            n_qubits: n,
            amps: vec![Complex64::new(a, 0.0); 1 << n],
        })
    }

    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self> {
        let len = amps.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(Error::InvalidInstance(format!(
                "amplitude vector length {len} is not a power of two >= 2"
            )));
        }
        let n = len.trailing_zeros() as usize;
        check_size(n)?;
        Ok(Self { n_qubits: n, amps })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub(crate) fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn probability(&self, index: usize) -> f64 {
        self.amps[index].norm_sqr()
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &Statevector) -> Result<Complex64> {
        self.check_dim(other.n_qubits)?;
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    pub(crate) fn check_dim(&self, n: usize) -> Result<()> {
        if n != self.n_qubits {
            return Err(Error::Dimension {
                expected: self.n_qubits,
                got: n,
            });
        }
        Ok(())
    }

    /// Replaces the state with `P|ψ>`.
    pub fn apply_pauli(&mut self, p: &PauliString) -> Result<()> {
        self.check_dim(p.n_qubits())?;
        let flip = p.flip_mask();
        let yp = p.y_phase();
        if flip == 0 {
            for (z, a) in self.amps.iter_mut().enumerate() {
                *a *= p.coefficient(z, yp);
            }
            return Ok(());
        }
        let stride = 1usize << (usize::BITS - 1 - flip.leading_zeros());
        let dim = self.amps.len();
        for base in (0..dim).step_by(2 * stride) {
            for z in base..base + stride {
                let w = z ^ flip;
                let az = self.amps[z];
                let aw = self.amps[w];
                self.amps[w] = p.coefficient(z, yp) * az;
                self.amps[z] = p.coefficient(w, yp) * aw;
            }
        }
        Ok(())
    }

    /// Applies `exp(-i θ P / 2) = cos(θ/2) I - i sin(θ/2) P` in place.
    pub fn apply_rotation(&mut self, p: &PauliString, theta: f64) -> Result<()> {
        self.check_dim(p.n_qubits())?;
        rotate_slice(&mut self.amps, p, theta);
        Ok(())
    }

    /// `Re <ψ|P|ψ>`.
    pub fn expectation_pauli(&self, p: &PauliString) -> Result<f64> {
        self.check_dim(p.n_qubits())?;
        let flip = p.flip_mask();
        let yp = p.y_phase();
        let mut acc = Complex64::new(0.0, 0.0);
        for (z, a) in self.amps.iter().enumerate() {
            acc += self.amps[z ^ flip].conj() * p.coefficient(z, yp) * a;
        }
        Ok(acc.re)
    }

    /// `Σ_k c_k Re <ψ|P_k|ψ>`.
    ///
    /// Sums consisting only of Z strings take a single pass over the
    /// probabilities instead of one pass per term.
    pub fn expectation_pauli_sum(&self, terms: &[(f64, PauliString)]) -> Result<f64> {
        for (_, p) in terms {
            self.check_dim(p.n_qubits())?;
        }
        if terms.iter().all(|(_, p)| p.is_diagonal()) {
            let mut total = 0.0;
            for (z, a) in self.amps.iter().enumerate() {
                let prob = a.norm_sqr();
                if prob == 0.0 {
                    continue;
                }
                let mut e = 0.0;
                for (c, p) in terms {
                    if (z & p.phase_mask()).count_ones() & 1 == 0 {
                        e += c;
                    } else {
                        e -= c;
                    }
                }
                total += prob * e;
            }
            return Ok(total);
        }
        terms
            .iter()
            .map(|(c, p)| self.expectation_pauli(p).map(|v| c * v))
            .sum()
    }

    /// Index of the most probable basis state (lowest index on ties).
    pub fn most_probable(&self) -> usize {
        let mut best = 0;
        let mut best_p = -1.0;
        for (z, a) in self.amps.iter().enumerate() {
            let p = a.norm_sqr();
            if p > best_p {
                best_p = p;
                best = z;
            }
        }
        best
    }
}

/// Rotation kernel over any aligned block of `2^k` amplitudes with
/// `k` above every qubit `p` touches.
pub(crate) fn rotate_slice(amps: &mut [Complex64], p: &PauliString, theta: f64) {
    let (s, c) = (0.5 * theta).sin_cos();
    let flip = p.flip_mask();
    let yp = p.y_phase();
    if flip == 0 {
        let plus = Complex64::new(c, -s);
        let minus = Complex64::new(c, s);
        let mask = p.phase_mask();
        for (z, a) in amps.iter_mut().enumerate() {
            *a *= if (z & mask).count_ones() & 1 == 0 {
                plus
            } else {
                minus
            };
        }
        return;
    }
    let stride = 1usize << (usize::BITS - 1 - flip.leading_zeros());
    let mis = -I * s;
    for (k, block) in amps.chunks_exact_mut(2 * stride).enumerate() {
        let base = k * 2 * stride;
        for z in 0..stride {
            let w = z ^ flip;
            let az = block[z];
            let aw = block[w];
            block[z] = c * az + mis * p.coefficient(base + w, yp) * aw;
            block[w] = c * aw + mis * p.coefficient(base + z, yp) * az;
        }
    }
}

#[cfg(test)]
mod tests {
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, PI};

    use super::*;
    use crate::sim::Pauli;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn close(a: &[Complex64], b: &[Complex64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).norm() <= tol)
    }

    #[test]
    fn init_states() {
        assert_eq!(Statevector::zero(1).unwrap().amplitudes(), &[c(1.0, 0.0), c(0.0, 0.0)]);
        assert_eq!(
            Statevector::zero(2).unwrap().amplitudes(),
            &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]
        );
        assert!(matches!(Statevector::zero(31), Err(Error::Size { n: 31, .. })));
        assert!(matches!(Statevector::plus(0), Err(Error::Size { .. })));

        let p1 = Statevector::plus(1).unwrap();
        assert!(close(p1.amplitudes(), &[c(FRAC_1_SQRT_2, 0.0); 2], 1e-15));
        let p2 = Statevector::plus(2).unwrap();
        assert!(close(p2.amplitudes(), &[c(0.5, 0.0); 4], 1e-15));
        assert!((Statevector::plus(10).unwrap().norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_qubit_paulis_on_zero() {
        let cases = [
            (Pauli::Z, [c(1.0, 0.0), c(0.0, 0.0)]),
            (Pauli::X, [c(0.0, 0.0), c(1.0, 0.0)]),
            (Pauli::Y, [c(0.0, 0.0), c(0.0, 1.0)]),
        ];
        for (p, want) in cases {
            let mut s = Statevector::zero(1).unwrap();
            s.apply_pauli(&PauliString::single(1, 0, p).unwrap()).unwrap();
            assert!(close(s.amplitudes(), &want, 0.0), "{p}");
        }
    }

    #[test]
    fn pauli_dimension_mismatch() {
        let mut s = Statevector::zero(2).unwrap();
        let p = PauliString::single(3, 0, Pauli::X).unwrap();
        assert!(matches!(s.apply_pauli(&p), Err(Error::Dimension { .. })));
        assert!(matches!(s.apply_rotation(&p, 0.1), Err(Error::Dimension { .. })));
    }

    #[test]
    fn y_rotation_examples() {
        let y = PauliString::single(1, 0, Pauli::Y).unwrap();
        let z = PauliString::single(1, 0, Pauli::Z).unwrap();

        let mut s = Statevector::zero(1).unwrap();
        s.apply_rotation(&y, 0.0).unwrap();
        assert_eq!(s, Statevector::zero(1).unwrap());

        let mut s = Statevector::zero(1).unwrap();
        s.apply_rotation(&y, PI).unwrap();
        assert!((s.amplitudes()[1].norm() - 1.0).abs() < 1e-15);
        assert!((s.expectation_pauli(&z).unwrap() + 1.0).abs() < 1e-15);

        let mut s = Statevector::zero(1).unwrap();
        s.apply_rotation(&y, FRAC_PI_2).unwrap();
        assert!(s.expectation_pauli(&z).unwrap().abs() < 1e-15);
    }

    #[test]
    fn expectation_examples() {
        let z0 = PauliString::single(1, 0, Pauli::Z).unwrap();
        assert_eq!(
            Statevector::zero(1)
                .unwrap()
                .expectation_pauli_sum(&[(1.0, z0.clone())])
                .unwrap(),
            1.0
        );
        assert!(Statevector::plus(1)
            .unwrap()
            .expectation_pauli_sum(&[(1.0, z0)])
            .unwrap()
            .abs()
            < 1e-15);
        let zz = PauliString::parse("ZZ").unwrap();
        assert_eq!(
            Statevector::zero(2)
                .unwrap()
                .expectation_pauli_sum(&[(-1.0, zz)])
                .unwrap(),
            -1.0
        );
    }

    #[test]
    fn off_diagonal_expectation() {
        let x = PauliString::parse("X").unwrap();
        let y = PauliString::parse("Y").unwrap();
        assert!((Statevector::plus(1).unwrap().expectation_pauli(&x).unwrap() - 1.0).abs() < 1e-15);
        // (|0> + i|1>)/√2 is the +1 eigenstate of Y
        let s = Statevector::from_amplitudes(vec![c(FRAC_1_SQRT_2, 0.0), c(0.0, FRAC_1_SQRT_2)]).unwrap();
        assert!((s.expectation_pauli(&y).unwrap() - 1.0).abs() < 1e-15);
    }
}
