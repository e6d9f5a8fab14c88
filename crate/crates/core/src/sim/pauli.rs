use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};

use super::MAX_QUBITS;

/// Single-qubit Pauli letter. Identity is implied on qubits a string omits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Pauli {
    X,
    Y,
    Z,
}

impl Pauli {
    fn from_char(c: char) -> Option<Self> {
        match c {
            'X' | 'x' => Some(Pauli::X),
            'Y' | 'y' => Some(Pauli::Y),
            'Z' | 'z' => Some(Pauli::Z),
            _ => None,
        }
    }
}

impl fmt::Display for Pauli {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = match self {
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        };
        write!(f, "{c}")
    }
}

/// A tensor product of Pauli letters on an `n_qubits` register.
///
/// Besides the letter map the string caches its bit masks: `flip_mask` has a
/// bit set for every X or Y letter, `phase_mask` for every Y or Z letter.
/// With those, `P|z> = i^{#Y} (-1)^{popcount(z & phase_mask)} |z ^ flip_mask>`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PauliString {
    n_qubits: usize,
    letters: BTreeMap<usize, Pauli>,
    flip_mask: usize,
    phase_mask: usize,
    y_count: u32,
}

impl PauliString {
    pub fn new(n_qubits: usize, letters: impl IntoIterator<Item = (usize, Pauli)>) -> Result<Self> {
        if n_qubits == 0 || n_qubits > MAX_QUBITS {
            return Err(Error::Size {
                n: n_qubits,
                min: 1,
                max: MAX_QUBITS,
            });
        }
        let mut map = BTreeMap::new();
        for (q, p) in letters {
            if q >= n_qubits {
                return Err(Error::InvalidPauli(format!(
                    "qubit {q} out of range for {n_qubits}-qubit register"
                )));
            }
            if map.insert(q, p).is_some() {
                return Err(Error::InvalidPauli(format!("qubit {q} listed twice")));
            }
        }
        if map.is_empty() {
            return Err(Error::InvalidPauli(
                "the all-identity string is not a valid generator".into(),
            ));
        }
        let mut flip_mask = 0usize;
        let mut phase_mask = 0usize;
        let mut y_count = 0u32;
        for (&q, &p) in &map {
            match p {
                Pauli::X => flip_mask |= 1 << q,
                Pauli::Y => {
                    flip_mask |= 1 << q;
                    phase_mask |= 1 << q;
                    y_count += 1;
                }
                Pauli::Z => phase_mask |= 1 << q,
            }
        }
        Ok(Self {
            n_qubits,
            letters: map,
            flip_mask,
            phase_mask,
            y_count,
        })
    }

    pub fn single(n_qubits: usize, qubit: usize, p: Pauli) -> Result<Self> {
        Self::new(n_qubits, [(qubit, p)])
    }

    pub fn pair(n_qubits: usize, (qa, pa): (usize, Pauli), (qb, pb): (usize, Pauli)) -> Result<Self> {
        Self::new(n_qubits, [(qa, pa), (qb, pb)])
    }

    /// Parses a dense label such as `"IYZI"`, leftmost character = qubit 0.
    pub fn parse(label: &str) -> Result<Self> {
        let n = label.chars().count();
        let mut letters = Vec::new();
        for (q, c) in label.chars().enumerate() {
            if c == 'I' || c == 'i' {
                continue;
            }
            let p = Pauli::from_char(c)
                .ok_or_else(|| Error::InvalidPauli(format!("unknown letter '{c}'")))?;
            letters.push((q, p));
        }
        Self::new(n, letters)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn letters(&self) -> &BTreeMap<usize, Pauli> {
        &self.letters
    }

    pub fn flip_mask(&self) -> usize {
        self.flip_mask
    }

    pub fn phase_mask(&self) -> usize {
        self.phase_mask
    }

    pub fn is_diagonal(&self) -> bool {
        self.flip_mask == 0
    }

    pub fn weight(&self) -> usize {
        self.letters.len()
    }

    /// `i^{#Y}`, the global factor in front of the sign.
    pub(crate) fn y_phase(&self) -> Complex64 {
        match self.y_count % 4 {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        }
    }

    /// Coefficient `c` with `P|z> = c |z ^ flip_mask>`.
    #[inline]
    pub(crate) fn coefficient(&self, z: usize, y_phase: Complex64) -> Complex64 {
        if (z & self.phase_mask).count_ones() & 1 == 1 {
            -y_phase
        } else {
            y_phase
        }
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for q in 0..self.n_qubits {
            match self.letters.get(&q) {
                Some(p) => write!(f, "{p}")?,
                None => write!(f, "I")?,
            }
        }
        Ok(())
    }
}
