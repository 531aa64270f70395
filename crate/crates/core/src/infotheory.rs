//! Shannon distinguishability of two equiprobable states.
//!
//! `SD` is the mutual information between a uniform input bit and the outcome
//! of a measurement. Two bounds are provided: the trace-norm upper bound
//! `½ Tr|ρ0 − ρ1|` and a grid-search lower bound over rank-one projective
//! measurements for small dimensions.

use std::f64::consts::{FRAC_PI_2, TAU};

use thiserror::Error;

use crate::linalg::{Complex, ComplexMatrix, LinalgError, StateVector, HERMITIAN_TOL};

/// Probabilities at or below this are treated as zero inside logarithms.
pub const PROB_CLAMP: f64 = 1e-15;

const NEG_TOL: f64 = 1e-12;
const SUM_TOL: f64 = 1e-10;
const POVM_TOL: f64 = 1e-10;

/// Largest state dimension accepted by [`sd_optimize_small`].
pub const OPTIMIZE_MAX_DIM: usize = 4;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum InfoError {
    #[error("probability {0} outside [0, 1]")]
    Domain(f64),
    #[error("invalid distribution: {0}")]
    Distribution(String),
    #[error("invalid POVM: {0}")]
    Povm(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

fn xlog2x(p: f64) -> f64 {
    if p <= PROB_CLAMP {
        0.0
    } else {
        p * p.log2()
    }
}

/// `I_2(p) = 1 + p log₂ p + (1 − p) log₂(1 − p)`.
pub fn binary_entropy_info(p: f64) -> Result<f64, InfoError> {
    if !(-NEG_TOL..=1.0 + NEG_TOL).contains(&p) || p.is_nan() {
        return Err(InfoError::Domain(p));
    }
    let p = p.clamp(0.0, 1.0);
    Ok((1.0 + xlog2x(p) + xlog2x(1.0 - p)).clamp(0.0, 1.0))
}

/// Conditional outcome distributions `(p_0(x), p_1(x))` for a binary input.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryChannelDist {
    outcomes: Vec<(f64, f64)>,
}

impl BinaryChannelDist {
    pub fn new(outcomes: Vec<(f64, f64)>) -> Result<Self, InfoError> {
        if outcomes.is_empty() {
            return Err(InfoError::Distribution("no outcomes".into()));
        }
        let mut clamped = Vec::with_capacity(outcomes.len());
        for (x, &(p0, p1)) in outcomes.iter().enumerate() {
            if !p0.is_finite() || !p1.is_finite() || p0 < -NEG_TOL || p1 < -NEG_TOL {
                return Err(InfoError::Distribution(format!("outcome {x} has probabilities ({p0}, {p1})")));
            }
            let clamp = |p: f64| if p <= PROB_CLAMP { 0.0 } else { p };
            clamped.push((clamp(p0), clamp(p1)));
        }
        let s0: f64 = clamped.iter().map(|o| o.0).sum();
        let s1: f64 = clamped.iter().map(|o| o.1).sum();
        if (s0 - 1.0).abs() > SUM_TOL || (s1 - 1.0).abs() > SUM_TOL {
            return Err(InfoError::Distribution(format!("conditionals sum to ({s0}, {s1})")));
        }
        Ok(Self { outcomes: clamped })
    }

    pub fn outcomes(&self) -> &[(f64, f64)] {
        &self.outcomes
    }
}

/// `SD(p_0, p_1) = Σ_x p(x) I_2(p_x(0))` with a uniform prior on the input bit.
pub fn sd_distributions(d: &BinaryChannelDist) -> f64 {
    let sd: f64 = d
        .outcomes
        .iter()
        .map(|&(p0, p1)| {
            let px = 0.5 * (p0 + p1);
            if px <= PROB_CLAMP {
                return 0.0;
            }
            // Bayes: p_x(0) = ½ p_0(x) / p(x).
            let post0 = (p0 / (p0 + p1)).clamp(0.0, 1.0);
            px * binary_entropy_info(post0).expect("posterior lies in [0, 1]")
        })
        .sum();
    sd.clamp(0.0, 1.0)
}

/// A positive operator-valued measure on a `dim`-dimensional space.
#[derive(Debug, Clone, PartialEq)]
pub struct Povm {
    elements: Vec<ComplexMatrix>,
}

impl Povm {
    /// Checks every element is hermitian and positive semidefinite and that
    /// the elements sum to the identity.
    pub fn new(elements: Vec<ComplexMatrix>) -> Result<Self, InfoError> {
        let first = elements.first().ok_or_else(|| InfoError::Povm("no elements".into()))?;
        let dim = first.rows();
        let mut sum = ComplexMatrix::zeros(dim, dim);
        for (x, e) in elements.iter().enumerate() {
            if e.rows() != dim || e.cols() != dim {
                return Err(InfoError::Povm(format!("element {x} is {}x{}, expected {dim}x{dim}", e.rows(), e.cols())));
            }
            if !e.is_hermitian(HERMITIAN_TOL) {
                return Err(InfoError::Povm(format!("element {x} is not hermitian")));
            }
            let min = e.hermitian_eigenvalues()?.last().copied().unwrap_or(0.0);
            if min < -POVM_TOL {
                return Err(InfoError::Povm(format!("element {x} has eigenvalue {min}")));
            }
            sum = &sum + e;
        }
        let dev = sum.max_abs_diff(&ComplexMatrix::identity(dim))?;
        if dev > POVM_TOL {
            return Err(InfoError::Povm(format!("elements sum to identity only within {dev:e}")));
        }
        Ok(Self { elements })
    }

    /// For elements that are valid by construction.
    pub(crate) fn from_parts(elements: Vec<ComplexMatrix>) -> Self {
        debug_assert!(!elements.is_empty());
        Self { elements }
    }

    /// Projective measurement in the computational basis.
    pub fn computational(dim: usize) -> Self {
        Self::from_parts((0..dim).map(|k| StateVector::basis(dim, k).projector()).collect())
    }

    /// Two-outcome measurement `{|u⟩⟨u|, I − |u⟩⟨u|}` for a unit vector `u`.
    pub fn rank_one_projective(u: &StateVector) -> Self {
        let p = u.projector();
        let q = &ComplexMatrix::identity(u.dim()) - &p;
        Self::from_parts(vec![p, q])
    }

    pub fn dim(&self) -> usize {
        self.elements[0].rows()
    }

    pub fn elements(&self) -> &[ComplexMatrix] {
        &self.elements
    }

    /// Outcome probabilities `Tr(ρ E_x)`.
    pub fn probabilities(&self, rho: &ComplexMatrix) -> Result<Vec<f64>, InfoError> {
        if rho.rows() != self.dim() || rho.cols() != self.dim() {
            return Err(InfoError::Shape(format!(
                "state is {}x{}, POVM acts on dimension {}",
                rho.rows(),
                rho.cols(),
                self.dim()
            )));
        }
        self.elements.iter().map(|e| Ok(rho.trace_product(e)?.re)).collect()
    }
}

/// `SD^E(ρ0, ρ1)`: distinguishability achieved by one fixed measurement.
pub fn sd_for_measurement(rho0: &ComplexMatrix, rho1: &ComplexMatrix, e: &Povm) -> Result<f64, InfoError> {
    let p0 = e.probabilities(rho0)?;
    let p1 = e.probabilities(rho1)?;
    let dist = BinaryChannelDist::new(p0.into_iter().zip(p1).collect())?;
    Ok(sd_distributions(&dist))
}

/// `½ Tr|ρ0 − ρ1|`, an upper bound on the distinguishability of any measurement.
pub fn sd_trace_bound(rho0: &ComplexMatrix, rho1: &ComplexMatrix) -> Result<f64, InfoError> {
    if rho0.rows() != rho1.rows() || rho0.cols() != rho1.cols() {
        return Err(InfoError::Shape(format!("{}x{} vs {}x{}", rho0.rows(), rho0.cols(), rho1.rows(), rho1.cols())));
    }
    Ok(0.5 * (rho0 - rho1).trace_norm()?)
}

/// `E ⊗ Id_{d2}`: the same measurement acting on the first factor of a product space.
pub fn lift_povm(e: &Povm, d2: usize) -> Result<Povm, InfoError> {
    if d2 == 0 {
        return Err(InfoError::Shape("lifted factor must have dimension >= 1".into()));
    }
    let id = ComplexMatrix::identity(d2);
    let lifted = e.elements.iter().map(|el| el.kron(&id)).collect::<Result<Vec<_>, _>>()?;
    Ok(Povm::from_parts(lifted))
}

/// Best distinguishability over a grid of two-outcome rank-one projective
/// measurements `{|u⟩⟨u|, I − |u⟩⟨u|}`.
///
/// `u` is parameterized by `d − 1` polar angles in `[0, π/2]` and `d − 1`
/// relative phases in `[0, 2π)`. The number of steps per angle is
/// `resolution` rounded up to a power of two, so grids are nested and the
/// result never decreases as the resolution grows.
pub fn sd_optimize_small(rho0: &ComplexMatrix, rho1: &ComplexMatrix, resolution: usize) -> Result<f64, InfoError> {
    let d = rho0.rows();
    if !rho0.is_square() || rho1.rows() != d || rho1.cols() != d {
        return Err(InfoError::Shape("states must be square and of equal dimension".into()));
    }
    if d > OPTIMIZE_MAX_DIM {
        return Err(InfoError::Unsupported(format!("grid search supports dimension <= {OPTIMIZE_MAX_DIM}, got {d}")));
    }
    if d == 1 {
        return Ok(0.0);
    }
    let steps = resolution.max(1).next_power_of_two();
    let polar: Vec<(f64, f64)> = (0..=steps)
        .map(|i| {
            let t = (i as f64 * FRAC_PI_2) / steps as f64;
            (t.cos(), t.sin())
        })
        .collect();
    let phases: Vec<Complex> = (0..steps).map(|j| Complex::from_polar(1.0, (j as f64 * TAU) / steps as f64)).collect();

    let free = d - 1;
    let mut theta_idx = vec![0usize; free];
    let mut phi_idx = vec![0usize; free];
    let mut u = vec![Complex::new(0.0, 0.0); d];
    let mut best: f64 = 0.0;
    loop {
        // Hyperspherical coordinates with a real first component.
        let mut radius = 1.0;
        for k in 0..free {
            let (cos_t, sin_t) = polar[theta_idx[k]];
            let phase = if k == 0 { Complex::new(1.0, 0.0) } else { phases[phi_idx[k - 1]] };
            u[k] = phase * (radius * cos_t);
            radius *= sin_t;
        }
        u[free] = phases[phi_idx[free - 1]] * radius;

        let p0 = quadratic_form(rho0, &u).clamp(0.0, 1.0);
        let p1 = quadratic_form(rho1, &u).clamp(0.0, 1.0);
        let dist = BinaryChannelDist { outcomes: vec![(p0, p1), (1.0 - p0, 1.0 - p1)] };
        best = best.max(sd_distributions(&dist));

        if !advance(&mut theta_idx, steps + 1) && !advance(&mut phi_idx, steps) {
            break;
        }
    }
    Ok(best)
}

/// Mixed-radix increment; returns false after wrapping back to all zeros.
fn advance(idx: &mut [usize], radix: usize) -> bool {
    for slot in idx.iter_mut() {
        *slot += 1;
        if *slot < radix {
            return true;
        }
        *slot = 0;
    }
    false
}

fn quadratic_form(m: &ComplexMatrix, u: &[Complex]) -> f64 {
    let d = u.len();
    let data = m.data();
    let mut acc = Complex::new(0.0, 0.0);
    for i in 0..d {
        let row: Complex = (0..d).map(|j| data[i * d + j] * u[j]).sum();
        acc += u[i].conj() * row;
    }
    acc.re
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn ket(a: &[f64]) -> StateVector {
        StateVector::from_real(a).unwrap()
    }

    #[test]
    fn i2_values() {
        assert_eq!(binary_entropy_info(0.5).unwrap(), 0.0);
        assert_eq!(binary_entropy_info(0.0).unwrap(), 1.0);
        assert_eq!(binary_entropy_info(1.0).unwrap(), 1.0);
        // 1 + ¼ log₂ ¼ + ¾ log₂ ¾ = 1 − ½ + ¾(log₂ 3 − 2)
        let expected = 0.5 + 0.75 * (3f64.log2() - 2.0);
        assert!((binary_entropy_info(0.25).unwrap() - expected).abs() < 1e-15);
        assert!((expected - 0.188_721_875_540_867).abs() < 1e-12);
    }

    #[test]
    fn i2_domain() {
        assert!(matches!(binary_entropy_info(1.01), Err(InfoError::Domain(_))));
        assert!(matches!(binary_entropy_info(-0.1), Err(InfoError::Domain(_))));
        assert!(binary_entropy_info(f64::NAN).is_err());
    }

    #[test]
    fn sd_distribution_examples() {
        let same = BinaryChannelDist::new(vec![(0.3, 0.3), (0.7, 0.7)]).unwrap();
        assert!(sd_distributions(&same).abs() < 1e-15);
        let disjoint = BinaryChannelDist::new(vec![(1.0, 0.0), (0.0, 1.0)]).unwrap();
        assert_eq!(sd_distributions(&disjoint), 1.0);
        // p(x=0) = 3/4 with posterior 2/3; p(x=1) = 1/4 with posterior 0.
        let d = BinaryChannelDist::new(vec![(1.0, 0.5), (0.0, 0.5)]).unwrap();
        let h13 = -(1.0 / 3.0) * (1.0f64 / 3.0).log2() - (2.0 / 3.0) * (2.0f64 / 3.0).log2();
        let expected = 0.75 * (1.0 - h13) + 0.25 * 1.0;
        assert!((sd_distributions(&d) - expected).abs() < 1e-15);
        assert!((expected - (1.0 - 0.75 * h13)).abs() < 1e-15);
        assert!((expected - 0.311_278_124_459_133).abs() < 1e-12);
    }

    #[test]
    fn distribution_validation() {
        assert!(BinaryChannelDist::new(vec![(0.5, 0.5)]).is_err());
        assert!(BinaryChannelDist::new(vec![(1.1, 0.5), (-0.1, 0.5)]).is_err());
        assert!(BinaryChannelDist::new(vec![]).is_err());
    }

    #[test]
    fn measurement_examples() {
        let zero = ket(&[1.0, 0.0]).projector();
        let one = ket(&[0.0, 1.0]).projector();
        let plus = ket(&[FRAC_1_SQRT_2, FRAC_1_SQRT_2]).projector();
        let z = Povm::computational(2);
        assert_eq!(sd_for_measurement(&plus, &plus, &z).unwrap(), 0.0);
        assert!((sd_for_measurement(&zero, &one, &z).unwrap() - 1.0).abs() < 1e-15);
        let by_hand = sd_distributions(&BinaryChannelDist::new(vec![(1.0, 0.5), (0.0, 0.5)]).unwrap());
        assert!((sd_for_measurement(&zero, &plus, &z).unwrap() - by_hand).abs() < 1e-12);
        assert!(matches!(sd_for_measurement(&zero, &plus, &Povm::computational(3)), Err(InfoError::Shape(_))));
    }

    #[test]
    fn trace_bound_examples() {
        let zero = ket(&[1.0, 0.0]).projector();
        let one = ket(&[0.0, 1.0]).projector();
        let plus = ket(&[FRAC_1_SQRT_2, FRAC_1_SQRT_2]).projector();
        assert!(sd_trace_bound(&plus, &plus).unwrap().abs() < 1e-15);
        assert!((sd_trace_bound(&zero, &one).unwrap() - 1.0).abs() < 1e-15);
        assert!((sd_trace_bound(&zero, &plus).unwrap() - FRAC_1_SQRT_2).abs() < 1e-12);
        assert!(sd_trace_bound(&zero, &ComplexMatrix::identity(3)).is_err());
    }

    #[test]
    fn povm_validation() {
        assert!(Povm::new(vec![ComplexMatrix::identity(2)]).is_ok());
        let half = ComplexMatrix::from_real_diag(&[0.5, 0.5]);
        assert!(Povm::new(vec![half.clone()]).is_err());
        let neg = ComplexMatrix::from_real_diag(&[1.5, -0.5]);
        let comp = ComplexMatrix::from_real_diag(&[-0.5, 1.5]);
        assert!(matches!(Povm::new(vec![neg, comp]), Err(InfoError::Povm(_))));
    }

    #[test]
    fn lift_examples() {
        let id = lift_povm(&Povm::new(vec![ComplexMatrix::identity(2)]).unwrap(), 3).unwrap();
        assert_eq!(id.elements(), &[ComplexMatrix::identity(6)]);
        let z = lift_povm(&Povm::computational(2), 2).unwrap();
        assert_eq!(z.elements()[0], ComplexMatrix::from_real_diag(&[1.0, 1.0, 0.0, 0.0]));
        assert_eq!(z.elements()[1], ComplexMatrix::from_real_diag(&[0.0, 0.0, 1.0, 1.0]));
        assert!(Povm::new(z.elements().to_vec()).is_ok());
    }

    #[test]
    fn optimize_examples() {
        let zero = ket(&[1.0, 0.0]).projector();
        let one = ket(&[0.0, 1.0]).projector();
        let plus = ket(&[FRAC_1_SQRT_2, FRAC_1_SQRT_2]).projector();
        assert_eq!(sd_optimize_small(&plus, &plus, 16).unwrap(), 0.0);
        assert!((sd_optimize_small(&zero, &one, 1000).unwrap() - 1.0).abs() < 1e-6);
        let lower = sd_optimize_small(&zero, &plus, 256).unwrap();
        assert!(lower <= FRAC_1_SQRT_2);
        assert!(lower > 0.3);
        let big = ComplexMatrix::identity(5).scale_real(0.2);
        assert!(matches!(sd_optimize_small(&big, &big, 4), Err(InfoError::Unsupported(_))));
    }

    #[test]
    fn optimize_monotone_in_resolution() {
        let zero = ket(&[1.0, 0.0]).projector();
        let tilted = ket(&[0.3f64.cos(), 0.3f64.sin()]).projector();
        let mut last = 0.0;
        for res in [1, 2, 3, 5, 8, 13, 64] {
            let v = sd_optimize_small(&zero, &tilted, res).unwrap();
            assert!(v >= last, "resolution {res}: {v} < {last}");
            last = v;
        }
    }

    #[test]
    fn i2_below_linear_bound_on_grid() {
        for k in 0..=10_000 {
            let r = k as f64 / 10_000.0;
            assert!(binary_entropy_info(r).unwrap() <= (2.0 * r - 1.0).abs() + 1e-15);
        }
    }
}
