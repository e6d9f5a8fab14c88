//! Fused kernels for runs of mutually commuting Pauli rotations.
//!
//! A run of `Z`/`ZZ` rotations is a single diagonal phase, and a run of
//! `σ_q Z_j` rotations (same `q`, same `σ ∈ {X, Y}`) is a single-qubit
//! rotation on `q` whose angle depends on the other bits. Both phases are
//! sums of per-bit contributions, so their exponentials factor into small
//! tables built by repeated doubling instead of one transcendental call per
//! amplitude.

use num_complex::Complex64;

use super::{Pauli, Statevector};

/// `out[0] = base`, `out[z | 1 << b] = out[z] * factors[b]` for `z < 2^b`.
fn doubling_table(base: Complex64, factors: &[Complex64], out: &mut Vec<Complex64>) {
    out.clear();
    out.reserve(1 << factors.len());
    out.push(base);
    for f in factors {
        let len = out.len();
        for z in 0..len {
            let v = out[z] * f;
            out.push(v);
        }
    }
}

#[inline]
fn spin(z: usize, q: usize) -> f64 {
    if (z >> q) & 1 == 0 {
        1.0
    } else {
        -1.0
    }
}

fn cis(phi: f64) -> Complex64 {
    let (s, c) = phi.sin_cos();
    Complex64::new(c, s)
}

/// Applies `Π_k exp(-i a_k Z_{q_k} / 2) · Π_k exp(-i b_k Z_{i_k} Z_{j_k} / 2)`.
pub fn apply_diagonal_quadratic(
    sv: &mut Statevector,
    linear: &[(usize, f64)],
    quadratic: &[(usize, usize, f64)],
) {
    let n = sv.n_qubits();
    let low_bits = n.div_ceil(2);
    let high_bits = n - low_bits;
    let low_dim = 1usize << low_bits;
    let high_dim = 1usize << high_bits;

    // phase(z) = Σ (a/2) s_q + Σ (b/2) s_i s_j, split into low-only,
    // high-only and low×high cross parts.
    let mut low_lin = Vec::new();
    let mut high_lin = Vec::new();
    for &(q, a) in linear {
        if q < low_bits {
            low_lin.push((q, 0.5 * a));
        } else {
            high_lin.push((q - low_bits, 0.5 * a));
        }
    }
    let mut low_quad = Vec::new();
    let mut high_quad = Vec::new();
    let mut cross = Vec::new();
    for &(i, j, b) in quadratic {
        let (i, j) = if i < j { (i, j) } else { (j, i) };
        let h = 0.5 * b;
        if j < low_bits {
            low_quad.push((i, j, h));
        } else if i >= low_bits {
            high_quad.push((i - low_bits, j - low_bits, h));
        } else {
            cross.push((i, j - low_bits, h));
        }
    }

    let table = |dim: usize, lin: &[(usize, f64)], quad: &[(usize, usize, f64)]| -> Vec<Complex64> {
        (0..dim)
            .map(|z| {
                let mut phase = 0.0;
                for &(q, a) in lin {
                    phase += a * spin(z, q);
                }
                for &(i, j, b) in quad {
                    phase += b * spin(z, i) * spin(z, j);
                }
                cis(-phase)
            })
            .collect()
    };
    let low_table = table(low_dim, &low_lin, &low_quad);
    let high_table = table(high_dim, &high_lin, &high_quad);

    let amps = sv.amplitudes_mut();
    let mut coupling = vec![0.0; low_bits];
    let mut factors = vec![Complex64::new(1.0, 0.0); low_bits];
    let mut row = Vec::with_capacity(low_dim);
    for (zh, chunk) in amps.chunks_exact_mut(low_dim).enumerate() {
        if cross.is_empty() {
            let h = high_table[zh];
            for (a, l) in chunk.iter_mut().zip(&low_table) {
                *a *= l * h;
            }
            continue;
        }
        coupling.iter_mut().for_each(|c| *c = 0.0);
        for &(i, j, b) in &cross {
            coupling[i] += b * spin(zh, j);
        }
        let total: f64 = coupling.iter().sum();
        for (f, &c) in factors.iter_mut().zip(&coupling) {
            *f = cis(2.0 * c);
        }
        doubling_table(cis(-total) * high_table[zh], &factors, &mut row);
        for ((a, l), r) in chunk.iter_mut().zip(&low_table).zip(&row) {
            *a *= l * r;
        }
    }
}

/// Applies `exp(-i (offset + Σ_k c_k Z_{j_k}) σ_q / 2)` for `σ ∈ {X, Y}`,
/// i.e. the product of the commuting rotations `σ_q` (angle `offset`) and
/// `σ_q Z_{j_k}` (angle `c_k`). Every `j_k` must differ from `qubit`.
pub fn apply_conditional_rotation(
    sv: &mut Statevector,
    qubit: usize,
    axis: Pauli,
    offset: f64,
    controls: &[(usize, f64)],
) {
    debug_assert!(axis != Pauli::Z);
    let n = sv.n_qubits();
    let mut per_qubit = vec![0.0; n];
    for &(j, c) in controls {
        debug_assert_ne!(j, qubit);
        per_qubit[j] += c;
    }

    // u(z) = exp(i Φ(z) / 2): cos and sin of the half angle in one number.
    let low_sum: f64 = per_qubit[..qubit].iter().sum();
    let high_sum: f64 = per_qubit[qubit + 1..].iter().sum();
    let low_factors: Vec<Complex64> = per_qubit[..qubit].iter().map(|&c| cis(-c)).collect();
    let high_factors: Vec<Complex64> = per_qubit[qubit + 1..].iter().map(|&c| cis(-c)).collect();
    let mut low_table = Vec::new();
    let mut high_table = Vec::new();
    doubling_table(cis(0.5 * low_sum), &low_factors, &mut low_table);
    doubling_table(cis(0.5 * (offset + high_sum)), &high_factors, &mut high_table);

    let stride = 1usize << qubit;
    let amps = sv.amplitudes_mut();
    for (hi, block) in amps.chunks_exact_mut(2 * stride).enumerate() {
        let uh = high_table[hi];
        let (zeros, ones) = block.split_at_mut(stride);
        for ((a0, a1), ul) in zeros.iter_mut().zip(ones.iter_mut()).zip(&low_table) {
            let u = ul * uh;
            let (c, s) = (u.re, u.im);
            let (x0, x1) = (*a0, *a1);
            match axis {
                Pauli::Y => {
                    *a0 = c * x0 - s * x1;
                    *a1 = s * x0 + c * x1;
                }
                _ => {
                    let mis = Complex64::new(0.0, -s);
                    *a0 = c * x0 + mis * x1;
                    *a1 = mis * x0 + c * x1;
                }
            }
        }
    }
}
