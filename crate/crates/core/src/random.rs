//! Random instances for property checks: unitaries built from Givens
//! rotations, density matrices, POVMs, attacks and parity codes.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::attack::AttackSpec;
use crate::gf2::{BitString, ParityCode};
use crate::infotheory::Povm;
use crate::linalg::{Complex, ComplexMatrix, StateVector};

fn random_complex<R: Rng + ?Sized>(rng: &mut R) -> Complex {
    Complex::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
}

/// Applies a random Givens rotation with random phases in the `(p, q)` plane
/// on the left of `u`.
fn rotate_rows<R: Rng + ?Sized>(rng: &mut R, u: &mut ComplexMatrix, p: usize, q: usize) {
    let theta: f64 = rng.random_range(0.0..std::f64::consts::TAU);
    let a = Complex::from_polar(1.0, rng.random_range(0.0..std::f64::consts::TAU));
    let b = Complex::from_polar(1.0, rng.random_range(0.0..std::f64::consts::TAU));
    let (c, s) = (theta.cos(), theta.sin());
    for k in 0..u.cols() {
        let up = u[(p, k)];
        let uq = u[(q, k)];
        u[(p, k)] = a * c * up - b.conj() * s * uq;
        u[(q, k)] = b * s * up + a.conj() * c * uq;
    }
}

/// A unitary composed from `dim²` random plane rotations and a random
/// diagonal phase.
pub fn random_unitary<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> ComplexMatrix {
    let mut u = ComplexMatrix::identity(dim);
    for k in 0..dim {
        u[(k, k)] = Complex::from_polar(1.0, rng.random_range(0.0..std::f64::consts::TAU));
    }
    if dim > 1 {
        for _ in 0..dim * dim {
            let p = rng.random_range(0..dim);
            let mut q = rng.random_range(0..dim - 1);
            if q >= p {
                q += 1;
            }
            rotate_rows(rng, &mut u, p, q);
        }
    }
    u
}

pub fn random_unit_vector<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> StateVector {
    loop {
        let v = StateVector::new((0..dim).map(|_| random_complex(rng)).collect()).expect("finite");
        let n = v.norm();
        if n > 1e-6 {
            return v.scale(Complex::new(1.0 / n, 0.0));
        }
    }
}

/// A random hermitian matrix with entries in the unit box.
pub fn random_hermitian<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(dim, dim);
    for i in 0..dim {
        m[(i, i)] = Complex::new(rng.random_range(-1.0..1.0), 0.0);
        for j in (i + 1)..dim {
            let z = random_complex(rng);
            m[(i, j)] = z;
            m[(j, i)] = z.conj();
        }
    }
    m
}

/// `G G† / Tr(G G†)` for a random `dim × rank` matrix `G`.
pub fn random_density<R: Rng + ?Sized>(rng: &mut R, dim: usize, rank: usize) -> ComplexMatrix {
    let rank = rank.clamp(1, dim);
    let mut rho = ComplexMatrix::zeros(dim, dim);
    for _ in 0..rank {
        let v = StateVector::new((0..dim).map(|_| random_complex(rng)).collect()).expect("finite");
        rho = &rho + &v.projector();
    }
    let tr = rho.trace().re;
    rho.scale_real(1.0 / tr)
}

/// A general POVM: random positive operators `A_x` normalized as
/// `S^{-1/2} A_x S^{-1/2}` with `S = Σ A_x`.
pub fn random_povm<R: Rng + ?Sized>(rng: &mut R, dim: usize, outcomes: usize) -> Povm {
    let outcomes = outcomes.max(1);
    loop {
        let raw: Vec<ComplexMatrix> = (0..outcomes)
            .map(|_| {
                let rank = rng.random_range(1..=dim);
                random_density(rng, dim, rank)
            })
            .collect();
        let sum = raw.iter().skip(1).fold(raw[0].clone(), |acc, a| &acc + a);
        let (vals, vecs) = sum.eigh().expect("sum of densities is hermitian");
        if vals.last().copied().unwrap_or(0.0) < 1e-6 {
            continue;
        }
        let inv_sqrt = ComplexMatrix::from_real_diag(&vals.iter().map(|v| 1.0 / v.sqrt()).collect::<Vec<_>>());
        let s = &(&vecs * &inv_sqrt) * &vecs.adjoint();
        let elements = raw
            .iter()
            .map(|a| {
                let e = &(&s * a) * &s;
                hermitize(&e)
            })
            .collect();
        return Povm::from_parts(elements);
    }
}

/// A POVM whose elements are diagonal in a random rotated basis:
/// `E_x = U D_x U†` with nonnegative diagonals summing to one.
///
/// `U` is a product of `4·dim` Givens rotations, which keeps this affordable
/// for the 2^n-dimensional states of the brute-force check.
pub fn random_rotated_povm<R: Rng + ?Sized>(rng: &mut R, dim: usize, outcomes: usize) -> Povm {
    let outcomes = outcomes.max(1);
    let weights: Vec<Vec<f64>> = (0..dim)
        .map(|_| {
            let w: Vec<f64> = (0..outcomes).map(|_| rng.random_range(0.0..1.0) + 1e-3).collect();
            let s: f64 = w.iter().sum();
            w.into_iter().map(|x| x / s).collect()
        })
        .collect();
    let rotations: Vec<(usize, usize, f64, f64)> = if dim > 1 {
        (0..4 * dim)
            .map(|_| {
                let p = rng.random_range(0..dim);
                let mut q = rng.random_range(0..dim - 1);
                if q >= p {
                    q += 1;
                }
                (p, q, rng.random_range(0.0..std::f64::consts::TAU), rng.random_range(0.0..std::f64::consts::TAU))
            })
            .collect()
    } else {
        Vec::new()
    };
    let elements = (0..outcomes)
        .map(|x| {
            let mut e = ComplexMatrix::from_real_diag(&weights.iter().map(|w| w[x]).collect::<Vec<_>>());
            for &(p, q, theta, phi) in &rotations {
                conjugate_by_rotation(&mut e, p, q, theta, phi);
            }
            hermitize(&e)
        })
        .collect();
    Povm::from_parts(elements)
}

/// `E ← G E G†` for the plane rotation `G` acting on coordinates `p, q`.
fn conjugate_by_rotation(e: &mut ComplexMatrix, p: usize, q: usize, theta: f64, phi: f64) {
    let (c, s) = (theta.cos(), theta.sin());
    let ph = Complex::from_polar(1.0, phi);
    let n = e.rows();
    // rows
    for k in 0..n {
        let ep = e[(p, k)];
        let eq = e[(q, k)];
        e[(p, k)] = ep * c - ph.conj() * s * eq;
        e[(q, k)] = ph * s * ep + eq * c;
    }
    // columns (multiply by G† on the right)
    for k in 0..n {
        let ep = e[(k, p)];
        let eq = e[(k, q)];
        e[(k, p)] = ep * c - ph * s * eq;
        e[(k, q)] = ph.conj() * s * ep + eq * c;
    }
}

fn hermitize(m: &ComplexMatrix) -> ComplexMatrix {
    (m + &m.adjoint()).scale_real(0.5)
}

/// A valid attack read off two columns of a random unitary on
/// `probe ⊗ qubit`, applied to `|E⟩|0⟩` and `|E⟩|1⟩` with `|E⟩ = |0⟩`.
pub fn random_attack<R: Rng + ?Sized>(rng: &mut R, probe_dim: usize) -> AttackSpec {
    let u = random_unitary(rng, 2 * probe_dim);
    let read = |col: usize, qubit: usize| {
        StateVector::new((0..probe_dim).map(|e| u[(2 * e + qubit, col)]).collect()).expect("finite")
    };
    AttackSpec::new(read(0, 0), read(0, 1), read(1, 0), read(1, 1)).expect("dimensions agree")
}

/// A random nonzero bit string of length `n`.
pub fn random_nonzero_bits<R: Rng + ?Sized>(rng: &mut R, n: usize) -> BitString {
    loop {
        let bits: Vec<bool> = (0..n).map(|_| rng.random_bool(0.5)).collect();
        if bits.iter().any(|&b| b) {
            return BitString::from_bools(&bits);
        }
    }
}

/// A random parity code with `r` error-correction equations (`r < n`).
pub fn random_code<R: Rng + ?Sized>(rng: &mut R, n: usize, r: usize) -> ParityCode {
    assert!(r < n, "need r < n");
    loop {
        let v = random_nonzero_bits(rng, n);
        let ecc: Vec<BitString> = (0..r).map(|_| random_nonzero_bits(rng, n)).collect();
        let bits: Vec<u8> = (0..r).map(|_| rng.random_range(0..2u8)).collect();
        if let Ok(code) = ParityCode::new(v, ecc, bits) {
            return code;
        }
    }
}

/// The generator behind every seeded simulation: ChaCha20 keyed with the
/// seed's 8 little-endian bytes followed by 24 zero bytes, stream 0.
///
/// Draws used by the simulator, all from `next_u64`:
/// - unit float: `(x >> 11) · 2⁻⁵³`
/// - Bernoulli(p): `unit < p`
/// - fair bit: `x >> 63`
/// - integer below `k`: reject `x < (2⁶⁴ − k) mod k`, return `x mod k`
pub fn seeded_rng(seed: u64) -> ChaCha20Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    ChaCha20Rng::from_seed(key)
}

pub fn unit_f64<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

pub fn bernoulli<R: RngCore + ?Sized>(rng: &mut R, p: f64) -> bool {
    unit_f64(rng) < p
}

pub fn fair_bit<R: RngCore + ?Sized>(rng: &mut R) -> u8 {
    (rng.next_u64() >> 63) as u8
}

pub fn below<R: RngCore + ?Sized>(rng: &mut R, k: u64) -> u64 {
    assert!(k > 0, "empty range");
    let threshold = k.wrapping_neg() % k;
    loop {
        let x = rng.next_u64();
        if x >= threshold {
            return x % k;
        }
    }
}

/// Fisher–Yates from the back: for `i = len−1 … 1` swap `i` with `below(i+1)`.
pub fn shuffle<T, R: RngCore + ?Sized>(rng: &mut R, items: &mut [T]) {
    for i in (1..items.len()).rev() {
        let j = below(rng, i as u64 + 1) as usize;
        items.swap(i, j);
    }
}

/// SplitMix64 finalizer, used to derive independent per-trial seeds.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
