//! Collective attacks described by Eve's four probe states.
//!
//! Eve's unitary maps `|E⟩|0⟩ ↦ |e00⟩|0⟩ + |e01⟩|1⟩` and
//! `|E⟩|1⟩ ↦ |e10⟩|0⟩ + |e11⟩|1⟩`. The probe kets are not normalized; the
//! constraints that unitarity puts on them are checked by [`validate`].

use std::f64::consts::FRAC_PI_4;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{Complex, ComplexMatrix, Keep, LinalgError, StateVector};

/// Residual allowed on the norm and orthogonality constraints.
pub const ATTACK_TOL: f64 = 1e-10;

/// Largest allowed disagreement between the two routes to `pe_x`.
pub const ROUTE_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AttackError {
    #[error("invalid attack: {0}")]
    Invalid(ValidationReport),
    #[error("x-basis error rate routes disagree: {formula} vs {direct}")]
    Inconsistent { formula: f64, direct: f64 },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Basis {
    Z,
    X,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackSpec {
    pub probe_dim: usize,
    pub e00: StateVector,
    pub e01: StateVector,
    pub e10: StateVector,
    pub e11: StateVector,
}

impl AttackSpec {
    /// Builds a spec whose kets share one dimension. Unitarity is not checked here.
    pub fn new(e00: StateVector, e01: StateVector, e10: StateVector, e11: StateVector) -> Result<Self, LinalgError> {
        let probe_dim = e00.dim();
        if [&e01, &e10, &e11].iter().any(|e| e.dim() != probe_dim) {
            return Err(LinalgError::Shape("probe states must share one dimension".into()));
        }
        Ok(Self { probe_dim, e00, e01, e10, e11 })
    }

    /// Eve does nothing: `e00 = e11 = |0⟩`.
    pub fn identity(probe_dim: usize) -> Self {
        let e = StateVector::basis(probe_dim, 0);
        let z = StateVector::zeros(probe_dim);
        Self { probe_dim, e00: e.clone(), e01: z.clone(), e10: z, e11: e }
    }

    /// Eve copies the z value into a qubit probe with a CNOT.
    pub fn cnot() -> Self {
        Self {
            probe_dim: 2,
            e00: StateVector::basis(2, 0),
            e01: StateVector::zeros(2),
            e10: StateVector::zeros(2),
            e11: StateVector::basis(2, 1),
        }
    }

    /// No z errors and `⟨e00|e11⟩ = cos 2θ`.
    pub fn symmetric(theta: f64) -> Self {
        let t = 2.0 * theta;
        Self {
            probe_dim: 2,
            e00: StateVector::basis(2, 0),
            e01: StateVector::zeros(2),
            e10: StateVector::zeros(2),
            e11: StateVector::from_real(&[t.cos(), t.sin()]).expect("finite"),
        }
    }

    /// Purifications `|ψ_0⟩ = |e00⟩|0⟩ + |e01⟩|1⟩`, `|ψ_1⟩ = |e11⟩|0⟩ + |e10⟩|1⟩`
    /// on probe ⊗ qubit.
    pub fn purifications(&self) -> Result<(StateVector, StateVector), LinalgError> {
        let zero = StateVector::basis(2, 0);
        let one = StateVector::basis(2, 1);
        let psi0 = &self.e00.kron(&zero)? + &self.e01.kron(&one)?;
        let psi1 = &self.e11.kron(&zero)? + &self.e10.kron(&one)?;
        Ok((psi0, psi1))
    }

    /// Eve's reduced state when Alice sent `bit` in the z basis:
    /// `|e_b0⟩⟨e_b0| + |e_b1⟩⟨e_b1|`.
    pub fn eve_state(&self, bit: u8) -> ComplexMatrix {
        let (a, b) = if bit == 0 { (&self.e00, &self.e01) } else { (&self.e10, &self.e11) };
        &a.projector() + &b.projector()
    }

    /// Traces the qubit out of `|ψ_b⟩⟨ψ_b|`.
    pub fn traced_purification(&self, bit: u8) -> Result<ComplexMatrix, LinalgError> {
        let (psi0, psi1) = self.purifications()?;
        let psi = if bit == 0 { psi0 } else { psi1 };
        psi.projector().partial_trace((self.probe_dim, 2), Keep::First)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    Dimension {
        field: &'static str,
        expected: usize,
        actual: usize,
    },
    /// `⟨e_b0|e_b0⟩ + ⟨e_b1|e_b1⟩ ≠ 1` for input `bit`.
    Norm {
        bit: u8,
        residual: f64,
    },
    /// `⟨e00|e10⟩ + ⟨e01|e11⟩ ≠ 0`.
    Orthogonality {
        residual: f64,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Dimension { field, expected, actual } => {
                write!(f, "{field} has dimension {actual}, expected probe_dim {expected}")
            }
            Violation::Norm { bit, residual } => {
                write!(f, "output for input {bit} is not normalized (residual {residual:e})")
            }
            Violation::Orthogonality { residual } => {
                write!(f, "outputs for inputs 0 and 1 are not orthogonal (residual {residual:e})")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_ok() {
            return write!(f, "ok");
        }
        let msgs: Vec<String> = self.violations.iter().map(ToString::to_string).collect();
        write!(f, "{}", msgs.join("; "))
    }
}

pub fn validate(a: &AttackSpec) -> ValidationReport {
    let mut violations = Vec::new();
    for (field, e) in [("e00", &a.e00), ("e01", &a.e01), ("e10", &a.e10), ("e11", &a.e11)] {
        if e.dim() != a.probe_dim {
            violations.push(Violation::Dimension { field, expected: a.probe_dim, actual: e.dim() });
        }
    }
    if !violations.is_empty() {
        return ValidationReport { violations };
    }
    for (bit, x, y) in [(0u8, &a.e00, &a.e01), (1u8, &a.e10, &a.e11)] {
        let residual = (x.norm_sqr() + y.norm_sqr() - 1.0).abs();
        if residual > ATTACK_TOL {
            violations.push(Violation::Norm { bit, residual });
        }
    }
    let residual = (a.e00.inner(&a.e10) + a.e01.inner(&a.e11)).norm();
    if residual > ATTACK_TOL {
        violations.push(Violation::Orthogonality { residual });
    }
    ValidationReport { violations }
}

fn require_valid(a: &AttackSpec) -> Result<(), AttackError> {
    let report = validate(a);
    if report.is_ok() {
        Ok(())
    } else {
        Err(AttackError::Invalid(report))
    }
}

/// Re-expresses the attack for inputs and outputs in the x basis.
pub fn to_x_basis(a: &AttackSpec) -> Result<AttackSpec, AttackError> {
    require_valid(a)?;
    let half = Complex::new(0.5, 0.0);
    let same = &a.e00 + &a.e11;
    let flip = &a.e10 + &a.e01;
    let diff = &a.e00 - &a.e11;
    let skew = &a.e10 - &a.e01;
    Ok(AttackSpec {
        probe_dim: a.probe_dim,
        e00: (&same + &flip).scale(half),
        e01: (&diff + &skew).scale(half),
        e10: (&diff - &skew).scale(half),
        e11: (&same - &flip).scale(half),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorRates {
    pub pe_z: f64,
    pub pe_x: f64,
    pub pe: f64,
}

impl ErrorRates {
    pub fn in_basis(&self, basis: Basis) -> f64 {
        match basis {
            Basis::Z => self.pe_z,
            Basis::X => self.pe_x,
        }
    }
}

fn direct_error(a: &AttackSpec) -> f64 {
    0.5 * (a.e01.norm_sqr() + a.e10.norm_sqr())
}

/// Bob's error probabilities per basis and overall.
///
/// `pe_x` is computed both from z-basis inner products and directly on the
/// x-basis spec; the two must agree.
pub fn error_rates(a: &AttackSpec) -> Result<ErrorRates, AttackError> {
    require_valid(a)?;
    let pe_z = direct_error(a).clamp(0.0, 1.0);
    let formula = 0.5 * (1.0 - (a.e00.inner(&a.e11) + a.e10.inner(&a.e01)).re);
    let direct = direct_error(&to_x_basis(a)?);
    if (formula - direct).abs() > ROUTE_TOL {
        return Err(AttackError::Inconsistent { formula, direct });
    }
    let pe_x = formula.clamp(0.0, 1.0);
    Ok(ErrorRates { pe_z, pe_x, pe: 0.5 * (pe_z + pe_x) })
}

/// Angle of the purification pair `cos α |0_H⟩ ± sin α |1_H⟩` for one basis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PurifiedPair {
    pub alpha: f64,
}

impl PurifiedPair {
    /// `⟨Ψ_0|Ψ_1⟩ = cos 2α`.
    pub fn overlap(&self) -> f64 {
        (2.0 * self.alpha).cos()
    }
}

/// `α = ½ arccos |⟨ψ_0|ψ_1⟩|` with `⟨ψ_0|ψ_1⟩ = ⟨e00|e11⟩ + ⟨e01|e10⟩`.
///
/// Evaluated as `sin α = ½ ‖ψ_0 − e^{iθ} ψ_1‖` with the phase `θ` that makes
/// the overlap real, which stays accurate when the overlap is close to one.
pub fn disturbance_angle(a: &AttackSpec, basis: Basis) -> Result<PurifiedPair, AttackError> {
    let spec = match basis {
        Basis::Z => {
            require_valid(a)?;
            a.clone()
        }
        Basis::X => to_x_basis(a)?,
    };
    let overlap = spec.e00.inner(&spec.e11) + spec.e01.inner(&spec.e10);
    let phase = if overlap.norm() > 0.0 { overlap.conj() / overlap.norm() } else { Complex::new(1.0, 0.0) };
    let dist_sqr = (&spec.e00 - &spec.e11.scale(phase)).norm_sqr() + (&spec.e01 - &spec.e10.scale(phase)).norm_sqr();
    let alpha = (0.5 * dist_sqr.sqrt()).min(1.0).asin().clamp(0.0, FRAC_PI_4);
    Ok(PurifiedPair { alpha })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn close(a: &StateVector, b: &StateVector, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn identity_and_cnot_are_valid() {
        assert!(validate(&AttackSpec::identity(3)).is_ok());
        assert!(validate(&AttackSpec::cnot()).is_ok());
    }

    #[test]
    fn row_norm_violation() {
        let e = StateVector::basis(2, 0);
        let mut a = AttackSpec::identity(2);
        a.e01 = e.clone();
        a.e00 = e;
        let report = validate(&a);
        assert_eq!(
            report.violations,
            vec![Violation::Norm { bit: 0, residual: 1.0 }, Violation::Orthogonality { residual: 1.0 }]
        );
    }

    #[test]
    fn dimension_violation() {
        let mut a = AttackSpec::identity(2);
        a.e10 = StateVector::zeros(3);
        assert!(matches!(validate(&a).violations[0], Violation::Dimension { field: "e10", .. }));
    }

    #[test]
    fn orthogonality_violation() {
        let mut a = AttackSpec::identity(2);
        a.e10 = StateVector::basis(2, 0);
        a.e11 = StateVector::zeros(2);
        assert!(validate(&a).violations.iter().any(|v| matches!(v, Violation::Orthogonality { .. })));
        assert!(matches!(error_rates(&a), Err(AttackError::Invalid(_))));
    }

    #[test]
    fn x_basis_of_identity() {
        let a = AttackSpec::identity(2);
        assert_eq!(to_x_basis(&a).unwrap(), a);
    }

    #[test]
    fn x_basis_of_cnot() {
        let x = to_x_basis(&AttackSpec::cnot()).unwrap();
        let minus = StateVector::from_real(&[0.5, -0.5]).unwrap();
        let plus = StateVector::from_real(&[0.5, 0.5]).unwrap();
        assert!(close(&x.e01, &minus, 1e-15));
        assert!(close(&x.e10, &minus, 1e-15));
        assert!(close(&x.e00, &plus, 1e-15));
        assert!(close(&x.e11, &plus, 1e-15));
        assert!(validate(&x).is_ok());
        let back = to_x_basis(&x).unwrap();
        assert!(close(&back.e00, &AttackSpec::cnot().e00, 1e-12));
        assert!(close(&back.e11, &AttackSpec::cnot().e11, 1e-12));
    }

    #[test]
    fn error_rate_examples() {
        assert_eq!(error_rates(&AttackSpec::identity(2)).unwrap(), ErrorRates { pe_z: 0.0, pe_x: 0.0, pe: 0.0 });
        let cnot = error_rates(&AttackSpec::cnot()).unwrap();
        assert!(cnot.pe_z.abs() < 1e-12 && (cnot.pe_x - 0.5).abs() < 1e-12 && (cnot.pe - 0.25).abs() < 1e-12);
        let theta = 0.3;
        let sym = error_rates(&AttackSpec::symmetric(theta)).unwrap();
        assert!(sym.pe_z.abs() < 1e-15);
        assert!((sym.pe_x - (1.0 - (2.0 * theta).cos()) / 2.0).abs() < 1e-15);
    }

    #[test]
    fn angle_examples() {
        assert_eq!(disturbance_angle(&AttackSpec::identity(2), Basis::Z).unwrap().alpha, 0.0);
        let cnot = disturbance_angle(&AttackSpec::cnot(), Basis::Z).unwrap();
        assert!((cnot.alpha - FRAC_PI_4).abs() < 1e-12);
        let pe_x = error_rates(&AttackSpec::cnot()).unwrap().pe_x;
        assert!(cnot.alpha.sin() <= pe_x.sqrt() + 1e-10);
        assert!((cnot.alpha.sin() - FRAC_1_SQRT_2).abs() < 1e-12);
        for theta in [0.0, 0.1, 0.5, FRAC_PI_4] {
            let pair = disturbance_angle(&AttackSpec::symmetric(theta), Basis::Z).unwrap();
            assert!((pair.alpha - theta).abs() < 1e-7, "theta {theta}: {}", pair.alpha);
            assert!((pair.overlap() - (2.0 * theta).cos()).abs() < 1e-12);
        }
    }

    #[test]
    fn traced_purification_matches_eve_view() {
        let a = AttackSpec::cnot();
        let traced = a.traced_purification(0).unwrap();
        assert!(traced.max_abs_diff(&a.eve_state(0)).unwrap() < 1e-15);
        // e00 = (1, 0), e01 = 0 leaves Eve with |0⟩⟨0|.
        let mut b = AttackSpec::identity(2);
        b.e01 = StateVector::zeros(2);
        let t = b.traced_purification(0).unwrap();
        assert!(t.max_abs_diff(&StateVector::basis(2, 0).projector()).unwrap() < 1e-15);
    }

    #[test]
    fn json_round_trip() {
        let a = AttackSpec::symmetric(0.2);
        let text = serde_json::to_string(&a).unwrap();
        assert!(text.contains("\"probe_dim\":2"));
        let back: AttackSpec = serde_json::from_str(&text).unwrap();
        assert_eq!(back, a);
    }
}
