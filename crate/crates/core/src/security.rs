//! Eve's lifted states for a parity-bit key and the bounds on her information.
//!
//! For key string `x` the purification of Eve's probes is the product state
//! `|Ψ_x⟩ = Σ_j d_j (−1)^{x·j} |j⟩` with `d_j = Π_i (cos α_i or sin α_i)`.
//! Conditioning on the key bit `x·v = b` (and on the public parity equations
//! of the code) gives two mixtures whose difference `Δ` has the closed form
//! `2 Σ_{j,s} (−1)^{s·b} d_j d_{j⊕v⊕v_s} |j⟩⟨j⊕v⊕v_s|`.
//!
//! The closed forms are cross-checked against explicit enumeration in
//! [`brute_force_check`].

use std::f64::consts::{FRAC_PI_4, LN_2};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::attack::{self, AttackError, AttackSpec, Basis};
use crate::gf2::{self, BitString, Gf2Error, ParityCode};
use crate::infotheory::{self, InfoError};
use crate::linalg::{Complex, ComplexMatrix, LinalgError, StateVector, DIM_CAP};
use crate::random;

/// Slack on `sin α_i ≤ √(2 p_i)`.
pub const NOISE_TOL: f64 = 1e-10;

/// Largest `n` accepted by [`brute_force_check`].
pub const BRUTE_FORCE_MAX_N: usize = 10;

pub const DELTA_MATCH_TOL: f64 = 1e-10;
pub const TRACE_NORM_TOL: f64 = 1e-9;
pub const SD_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SecurityError {
    #[error("length mismatch: {0}")]
    Length(String),
    #[error("{0} key bits need a state space larger than the cap {DIM_CAP}")]
    Capacity(usize),
    #[error("invalid parameter: {0}")]
    Domain(String),
    #[error(transparent)]
    Gf2(#[from] Gf2Error),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Info(#[from] InfoError),
    #[error(transparent)]
    Attack(#[from] AttackError),
}

/// Per-bit disturbance angles `α_i ∈ [0, π/4]` and Bob's error probabilities `p_i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawNoise")]
pub struct PerBitNoise {
    alphas: Vec<f64>,
    ps: Vec<f64>,
    /// True when `p_i` was set to `sin²(α_i)/2`, the smallest value consistent with `α_i`.
    worst_case_consistent: bool,
}

#[derive(Deserialize)]
struct RawNoise {
    alphas: Vec<f64>,
    #[serde(default)]
    ps: Option<Vec<f64>>,
}

impl TryFrom<RawNoise> for PerBitNoise {
    type Error = SecurityError;
    fn try_from(raw: RawNoise) -> Result<Self, Self::Error> {
        match raw.ps {
            Some(ps) => PerBitNoise::new(raw.alphas, ps),
            None => PerBitNoise::from_alphas(raw.alphas),
        }
    }
}

impl PerBitNoise {
    pub fn new(alphas: Vec<f64>, ps: Vec<f64>) -> Result<Self, SecurityError> {
        Self::build(alphas, ps, false)
    }

    /// Sets `p_i = sin²(α_i)/2`.
    pub fn from_alphas(alphas: Vec<f64>) -> Result<Self, SecurityError> {
        let ps = alphas.iter().map(|a| a.sin().powi(2) / 2.0).collect();
        Self::build(alphas, ps, true)
    }

    pub fn uniform(n: usize, alpha: f64) -> Result<Self, SecurityError> {
        Self::from_alphas(vec![alpha; n])
    }

    /// One attack per key bit. The angle is the larger of the two bases and
    /// `p_i` is the attack's overall error rate, so `sin α_i ≤ √(2 p_i)` holds
    /// whichever basis was used.
    pub fn from_attacks(attacks: &[AttackSpec]) -> Result<Self, SecurityError> {
        let mut alphas = Vec::with_capacity(attacks.len());
        let mut ps = Vec::with_capacity(attacks.len());
        for a in attacks {
            let rates = attack::error_rates(a)?;
            let az = attack::disturbance_angle(a, Basis::Z)?.alpha;
            let ax = attack::disturbance_angle(a, Basis::X)?.alpha;
            alphas.push(az.max(ax));
            ps.push(rates.pe);
        }
        Self::new(alphas, ps)
    }

    fn build(alphas: Vec<f64>, ps: Vec<f64>, worst_case_consistent: bool) -> Result<Self, SecurityError> {
        if alphas.is_empty() {
            return Err(SecurityError::Domain("noise needs at least one bit".into()));
        }
        if alphas.len() != ps.len() {
            return Err(SecurityError::Length(format!("{} angles but {} error probabilities", alphas.len(), ps.len())));
        }
        for (i, (&a, &p)) in alphas.iter().zip(&ps).enumerate() {
            if !(0.0..=FRAC_PI_4 + 1e-12).contains(&a) {
                return Err(SecurityError::Domain(format!("alpha[{i}] = {a} outside [0, pi/4]")));
            }
            if !(0.0..=1.0).contains(&p) {
                return Err(SecurityError::Domain(format!("p[{i}] = {p} outside [0, 1]")));
            }
            if a.sin() > (2.0 * p).sqrt() + NOISE_TOL {
                return Err(SecurityError::Domain(format!(
                    "bit {i}: sin(alpha) = {} exceeds sqrt(2p) = {}",
                    a.sin(),
                    (2.0 * p).sqrt()
                )));
            }
        }
        let alphas = alphas.into_iter().map(|a| a.min(FRAC_PI_4)).collect();
        Ok(Self { alphas, ps, worst_case_consistent })
    }

    pub fn len(&self) -> usize {
        self.alphas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alphas.is_empty()
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    pub fn ps(&self) -> &[f64] {
        &self.ps
    }

    pub fn is_worst_case_consistent(&self) -> bool {
        self.worst_case_consistent
    }
}

fn check_lengths(code: &ParityCode, noise: &PerBitNoise) -> Result<(), SecurityError> {
    if code.n() != noise.len() {
        return Err(SecurityError::Length(format!("code has n = {} but noise covers {} bits", code.n(), noise.len())));
    }
    Ok(())
}

fn check_state_space(n: usize) -> Result<usize, SecurityError> {
    if n >= usize::BITS as usize || (1usize << n) > DIM_CAP {
        return Err(SecurityError::Capacity(n));
    }
    Ok(1 << n)
}

/// `d_j = Π_i d_{j_i}` with `d_0 = cos α_i` and `d_1 = sin α_i`.
pub fn coefficient_d(j: &BitString, noise: &PerBitNoise) -> Result<f64, SecurityError> {
    if j.len() != noise.len() {
        return Err(SecurityError::Length(format!("string of length {} vs {} noisy bits", j.len(), noise.len())));
    }
    Ok(noise.alphas.iter().enumerate().map(|(i, a)| if j.get(i) { a.sin() } else { a.cos() }).product())
}

/// All `d_j` indexed by the big-endian basis index of `j`.
fn coefficient_table(noise: &PerBitNoise) -> Result<Vec<f64>, SecurityError> {
    let dim = check_state_space(noise.len())?;
    let mut table = Vec::with_capacity(dim);
    table.push(1.0);
    for a in &noise.alphas {
        let (s, c) = a.sin_cos();
        table = table.iter().flat_map(|&t| [t * c, t * s]).collect();
    }
    Ok(table)
}

/// `|Ψ_x⟩ = Σ_j d_j (−1)^{x·j} |j⟩`.
pub fn build_psi_x(x: &BitString, noise: &PerBitNoise) -> Result<StateVector, SecurityError> {
    if x.len() != noise.len() {
        return Err(SecurityError::Length(format!("string of length {} vs {} noisy bits", x.len(), noise.len())));
    }
    let table = coefficient_table(noise)?;
    let xmask = x.to_index();
    let amps = table
        .iter()
        .enumerate()
        .map(|(j, &d)| {
            let sign = if (xmask & j).count_ones().is_multiple_of(2) { 1.0 } else { -1.0 };
            Complex::new(sign * d, 0.0)
        })
        .collect();
    Ok(StateVector::new(amps)?)
}

/// Equal mixture of `|Ψ_x⟩⟨Ψ_x|` over all `x` with `x·v = key_bit` that
/// satisfy the error-correction equations.
pub fn mixture_rho(code: &ParityCode, key_bit: u8, noise: &PerBitNoise) -> Result<ComplexMatrix, SecurityError> {
    check_lengths(code, noise)?;
    let dim = check_state_space(code.n())?;
    let solutions = gf2::enumerate_solutions(code, key_bit)?;
    let mut rho = ComplexMatrix::zeros(dim, dim);
    for x in &solutions {
        rho = &rho + &build_psi_x(x, noise)?.projector();
    }
    Ok(rho.scale_real(1.0 / solutions.len() as f64))
}

/// `Δ = ρ̃_0 − ρ̃_1` from the closed form, without enumerating key strings.
pub fn delta_analytic(code: &ParityCode, noise: &PerBitNoise) -> Result<ComplexMatrix, SecurityError> {
    check_lengths(code, noise)?;
    let dim = check_state_space(code.n())?;
    let table = coefficient_table(noise)?;
    let mut delta = ComplexMatrix::zeros(dim, dim);
    for k in 0..(1usize << code.r()) {
        let shift = code.coset_string(k).to_index();
        let sign = if code.coset_sign_bit(k) == 0 { 2.0 } else { -2.0 };
        for (j, &dj) in table.iter().enumerate() {
            let col = j ^ shift;
            delta[(j, col)] += Complex::new(sign * dj * table[col], 0.0);
        }
    }
    Ok(delta)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceNormBound {
    pub bound: f64,
    /// `2 Π_{i ∈ v⊕v_s} sin 2α_i` for each coset label `s`.
    pub per_coset: Vec<f64>,
}

/// `Tr|Δ| ≤ 2 Σ_s Π_{i ∈ v⊕v_s} sin 2α_i`; exact when there are no
/// error-correction equations.
pub fn trace_norm_bound(code: &ParityCode, noise: &PerBitNoise) -> Result<TraceNormBound, SecurityError> {
    check_lengths(code, noise)?;
    let r = code.r();
    if r > gf2::enumeration_cap() {
        return Err(Gf2Error::Capacity { exponent: r, cap: gf2::enumeration_cap() }.into());
    }
    let factors: Vec<f64> = noise.alphas.iter().map(|a| (2.0 * a).sin()).collect();
    let per_coset: Vec<f64> = (0..(1usize << r))
        .map(|k| 2.0 * code.coset_string(k).ones_positions().map(|i| factors[i]).product::<f64>())
        .collect();
    Ok(TraceNormBound { bound: per_coset.iter().sum(), per_coset })
}

/// Upper bounds on Eve's information about the key bit from a trace-norm bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SdBound {
    /// `min(1, Tr|Δ|)`, the chain without the factor ½.
    pub full_trace: f64,
    /// `min(1, ½ Tr|Δ|)`.
    pub half_trace: f64,
}

impl SdBound {
    pub fn from_trace_norm(tr: f64) -> Self {
        Self { full_trace: tr.min(1.0), half_trace: (0.5 * tr).min(1.0) }
    }
}

/// `min(1, ½ · trace_norm_bound)`.
pub fn sd_upper_bound(code: &ParityCode, noise: &PerBitNoise) -> Result<f64, SecurityError> {
    Ok(SdBound::from_trace_norm(trace_norm_bound(code, noise)?.bound).half_trace)
}

fn check_hoeffding(n_test: u64, delta: f64) -> Result<(), SecurityError> {
    if n_test == 0 {
        return Err(SecurityError::Domain("n_test must be at least 1".into()));
    }
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(SecurityError::Domain(format!("delta = {delta} must be positive")));
    }
    Ok(())
}

/// `2 e^{−2 n_test δ²}`, the chance that untested bits are noisier than
/// `p_test + 2δ`. Not clamped: it exceeds 1 when vacuous.
pub fn hoeffding_tail(n_test: u64, delta: f64) -> Result<f64, SecurityError> {
    check_hoeffding(n_test, delta)?;
    Ok(2.0 * (-2.0 * n_test as f64 * delta * delta).exp())
}

pub fn log2_hoeffding_tail(n_test: u64, delta: f64) -> Result<f64, SecurityError> {
    check_hoeffding(n_test, delta)?;
    Ok(1.0 - 2.0 * n_test as f64 * delta * delta / LN_2)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum BoundMode {
    /// `2^{r+1} [(16/α)(p_test + 2δ)]^{αn/2}` with `αn = min_s n̂_s`.
    #[default]
    Uniform,
    /// `2 Σ_s [(16n/n̂_s)(p_test + 2δ)]^{n̂_s/2}`.
    PerCoset,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundParams {
    /// Key length `n = n_test = n'/2`.
    pub n: u64,
    pub r: u64,
    /// `α = n̂/n`. In per-coset mode it is recomputed from the weights.
    pub alpha: f64,
    pub p_test: f64,
    pub delta: f64,
    #[serde(default)]
    pub mode: BoundMode,
    /// `n̂_s` for every coset label, required in per-coset mode.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<u64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub n: u64,
    pub r: u64,
    pub alpha: f64,
    pub delta: f64,
    pub p_test: f64,
    pub mode: BoundMode,
    /// Trace-norm bound of a concrete code and noise, when one was supplied.
    pub tr_delta_bound: Option<f64>,
    pub sd_bound: Option<SdBound>,
    /// Set when the per-bit `p_i` were derived from the angles.
    pub worst_case_consistent: Option<bool>,
    /// Per-coset summands of the first term (per-coset mode only).
    pub per_coset_terms: Vec<f64>,
    pub first_term: f64,
    /// `p_luck = 2 e^{−2nδ²}`.
    pub hoeffding_tail: f64,
    /// `min(1, first_term + hoeffding_tail)`.
    pub total_info_bound: f64,
    /// Same with the first term halved.
    pub total_info_bound_tight: f64,
    /// Unclamped `log₂(first_term + hoeffding_tail)`.
    pub log2_total_info_bound: f64,
}

impl BoundReport {
    /// Attaches the trace-norm bound of a concrete code and noise.
    pub fn with_code_bound(mut self, tr: &TraceNormBound, noise: &PerBitNoise) -> Self {
        self.tr_delta_bound = Some(tr.bound);
        self.sd_bound = Some(SdBound::from_trace_norm(tr.bound));
        self.worst_case_consistent = Some(noise.is_worst_case_consistent());
        self
    }
}

/// `log₂ Σ 2^{t_k}` without overflow or underflow.
fn log2_sum(terms: &[f64]) -> f64 {
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + terms.iter().map(|t| (t - max).exp2()).sum::<f64>().log2()
}

/// Evaluates the statistical bound on Eve's total information in log space.
pub fn total_info_bound(params: &BoundParams) -> Result<BoundReport, SecurityError> {
    let BoundParams { n, r, alpha, p_test, delta, mode, .. } = *params;
    if n == 0 {
        return Err(SecurityError::Domain("n must be at least 1".into()));
    }
    if !(0.0..=1.0).contains(&p_test) {
        return Err(SecurityError::Domain(format!("p_test = {p_test} outside [0, 1]")));
    }
    check_hoeffding(n, delta)?;
    let noise_level = p_test + 2.0 * delta;

    let (alpha, log2_first, per_coset_terms) = match mode {
        BoundMode::Uniform => {
            if !(alpha > 0.0 && alpha <= 1.0) {
                return Err(SecurityError::Domain(format!("alpha = {alpha} outside (0, 1]")));
            }
            let base = (16.0 / alpha) * noise_level;
            let log2_first = (r as f64 + 1.0) + (alpha * n as f64 / 2.0) * base.log2();
            (alpha, log2_first, Vec::new())
        }
        BoundMode::PerCoset => {
            let weights = params
                .weights
                .as_ref()
                .ok_or_else(|| SecurityError::Domain("per-coset mode needs coset weights".into()))?;
            if r >= u64::from(u32::BITS) || weights.len() as u64 != 1u64 << r {
                return Err(SecurityError::Domain(format!("{} weights for r = {r}", weights.len())));
            }
            if weights.contains(&0) {
                return Err(SecurityError::Domain("coset weights must be at least 1".into()));
            }
            let logs: Vec<f64> = weights
                .iter()
                .map(|&w| {
                    let base = (16.0 * n as f64 / w as f64) * noise_level;
                    1.0 + (w as f64 / 2.0) * base.log2()
                })
                .collect();
            let min_w = *weights.iter().min().expect("nonempty");
            (min_w as f64 / n as f64, log2_sum(&logs), logs.iter().map(|l| l.exp2()).collect())
        }
    };

    let log2_tail = log2_hoeffding_tail(n, delta)?;
    let log2_total = log2_sum(&[log2_first, log2_tail]);
    let log2_tight = log2_sum(&[log2_first - 1.0, log2_tail]);
    Ok(BoundReport {
        n,
        r,
        alpha,
        delta,
        p_test,
        mode,
        tr_delta_bound: None,
        sd_bound: None,
        worst_case_consistent: None,
        per_coset_terms,
        first_term: log2_first.exp2(),
        hoeffding_tail: log2_tail.exp2(),
        total_info_bound: log2_total.exp2().min(1.0),
        total_info_bound_tight: log2_tight.exp2().min(1.0),
        log2_total_info_bound: log2_total,
    })
}

/// Parameters at which the total bound falls below a target.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness {
    pub target_log2: f64,
    pub n: u64,
    pub r: u64,
    /// `n̂ = αn`, always even.
    pub n_hat: u64,
    pub report: BoundReport,
}

/// Searches `α ∈ {1/20, …, 1}`, `δ ∈ {0.0001, …, 0.05}` and `n` (a multiple
/// of 40, so `αn` is an even integer) for the smallest key length whose
/// uniform-mode bound is at most `2^{target_log2}`, with `r = ⌈r_frac·n⌉`
/// error-correction parities.
pub fn search_witness(p_test: f64, target_log2: f64, r_frac: f64) -> Option<Witness> {
    const STEP: u64 = 40;
    const MAX_MULTIPLE: u64 = 1 << 26;
    let mut best: Option<Witness> = None;
    for k in 1..=20u64 {
        let alpha = k as f64 / 20.0;
        if r_frac > alpha {
            continue;
        }
        for m in 1..=500u64 {
            let delta = m as f64 / 10_000.0;
            let eval = |t: u64| -> Option<BoundReport> {
                let n = STEP * t;
                let r = (r_frac * n as f64).ceil() as u64;
                let params = BoundParams { n, r, alpha, p_test, delta, mode: BoundMode::Uniform, weights: None };
                total_info_bound(&params).ok()
            };
            let holds = |t: u64| eval(t).is_some_and(|rep| rep.log2_total_info_bound <= target_log2);
            if !holds(MAX_MULTIPLE) {
                continue;
            }
            let (mut lo, mut hi) = (0u64, MAX_MULTIPLE);
            while hi - lo > 1 {
                let mid = lo + (hi - lo) / 2;
                if holds(mid) {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            let n = STEP * hi;
            if best.as_ref().is_some_and(|b| b.n <= n) {
                continue;
            }
            let report = eval(hi).expect("evaluated above");
            best = Some(Witness { target_log2, n, r: report.r, n_hat: k * n / 20, report });
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BruteForceReport {
    pub n: usize,
    pub r: usize,
    /// Largest entrywise gap between the enumerated and closed-form `Δ`.
    pub max_delta_mismatch: f64,
    pub trace_norm_bruteforce: f64,
    pub trace_norm_bound: f64,
    /// Equality is required when there are no error-correction equations.
    pub tightness_required: bool,
    pub povm_trials: usize,
    pub max_sd_measured: f64,
    /// `½ Tr|ρ̃_0 − ρ̃_1|` from the enumerated mixtures.
    pub sd_trace_bound: f64,
    pub failures: Vec<String>,
    pub passed: bool,
}

/// Builds both mixtures by enumeration and checks the closed forms against them.
pub fn brute_force_check(
    code: &ParityCode,
    noise: &PerBitNoise,
    povm_trials: usize,
    seed: u64,
) -> Result<BruteForceReport, SecurityError> {
    check_lengths(code, noise)?;
    let n = code.n();
    if n > BRUTE_FORCE_MAX_N {
        return Err(SecurityError::Domain(format!("brute force supports n <= {BRUTE_FORCE_MAX_N}, got {n}")));
    }
    let rho0 = mixture_rho(code, 0, noise)?;
    let rho1 = mixture_rho(code, 1, noise)?;
    let brute = &rho0 - &rho1;
    let analytic = delta_analytic(code, noise)?;
    let max_delta_mismatch = brute.max_abs_diff(&analytic)?;
    let trace_norm_bruteforce = brute.trace_norm()?;
    let bound = trace_norm_bound(code, noise)?.bound;
    let tightness_required = code.r() == 0;

    let mut failures = Vec::new();
    if max_delta_mismatch > DELTA_MATCH_TOL {
        failures.push(format!("closed-form delta differs from enumeration by {max_delta_mismatch:e}"));
    }
    if trace_norm_bruteforce > bound + TRACE_NORM_TOL {
        failures.push(format!("trace norm {trace_norm_bruteforce} exceeds bound {bound}"));
    }
    if tightness_required && (trace_norm_bruteforce - bound).abs() > TRACE_NORM_TOL {
        failures.push(format!("trace norm {trace_norm_bruteforce} should equal {bound}"));
    }

    let sd_trace_bound = 0.5 * trace_norm_bruteforce;
    let mut rng = random::seeded_rng(seed);
    let mut max_sd_measured: f64 = 0.0;
    for trial in 0..povm_trials {
        let outcomes = 2 + trial % 3;
        let povm = random::random_rotated_povm(&mut rng, rho0.rows(), outcomes);
        let sd = infotheory::sd_for_measurement(&rho0, &rho1, &povm)?;
        max_sd_measured = max_sd_measured.max(sd);
        if sd > sd_trace_bound + SD_TOL {
            failures.push(format!("POVM trial {trial}: SD {sd} exceeds half trace norm {sd_trace_bound}"));
        }
    }

    Ok(BruteForceReport {
        n,
        r: code.r(),
        max_delta_mismatch,
        trace_norm_bruteforce,
        trace_norm_bound: bound,
        tightness_required,
        povm_trials,
        max_sd_measured,
        sd_trace_bound,
        passed: failures.is_empty(),
        failures,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn bs(s: &str) -> BitString {
        s.parse().unwrap()
    }

    #[test]
    fn noise_validation() {
        assert!(PerBitNoise::new(vec![0.1], vec![0.0]).is_err(), "angle needs error");
        assert!(PerBitNoise::new(vec![1.0], vec![0.5]).is_err(), "angle above pi/4");
        assert!(PerBitNoise::new(vec![0.1, 0.2], vec![0.1]).is_err());
        assert!(PerBitNoise::new(vec![], vec![]).is_err());
        let n = PerBitNoise::from_alphas(vec![0.3, 0.0]).unwrap();
        assert!(n.is_worst_case_consistent());
        assert!((n.ps()[0] - 0.3f64.sin().powi(2) / 2.0).abs() < 1e-16);
        assert!(!PerBitNoise::new(vec![0.1], vec![0.1]).unwrap().is_worst_case_consistent());
    }

    #[test]
    fn noise_from_attacks() {
        let noise = PerBitNoise::from_attacks(&[AttackSpec::identity(2), AttackSpec::cnot()]).unwrap();
        assert_eq!(noise.alphas()[0], 0.0);
        assert!((noise.alphas()[1] - FRAC_PI_4).abs() < 1e-12);
        assert!((noise.ps()[1] - 0.25).abs() < 1e-12);
    }

    #[test]
    fn coefficient_examples() {
        let noise = PerBitNoise::from_alphas(vec![0.2, 0.5]).unwrap();
        assert!((coefficient_d(&bs("00"), &noise).unwrap() - 0.2f64.cos() * 0.5f64.cos()).abs() < 1e-16);
        assert!((coefficient_d(&bs("01"), &noise).unwrap() - 0.2f64.cos() * 0.5f64.sin()).abs() < 1e-16);
        let quiet = PerBitNoise::uniform(3, 0.0).unwrap();
        assert_eq!(coefficient_d(&bs("010"), &quiet).unwrap(), 0.0);
        assert!(coefficient_d(&bs("0"), &noise).is_err());
    }

    #[test]
    fn psi_worked_example() {
        let (a1, a2) = (0.3f64, 0.6f64);
        let noise = PerBitNoise::from_alphas(vec![a1, a2]).unwrap();
        let psi = build_psi_x(&bs("01"), &noise).unwrap();
        let expected = [a1.cos() * a2.cos(), -a1.cos() * a2.sin(), a1.sin() * a2.cos(), -a1.sin() * a2.sin()];
        for (k, e) in expected.iter().enumerate() {
            assert!((psi[k].re - e).abs() < 1e-15 && psi[k].im == 0.0);
        }
        assert!(psi.is_normalized());
    }

    #[test]
    fn psi_is_product_of_single_bit_states() {
        let alphas = [0.1, 0.7, 0.4];
        let noise = PerBitNoise::from_alphas(alphas.to_vec()).unwrap();
        let x = bs("101");
        let mut prod = StateVector::from_real(&[1.0]).unwrap();
        for (i, a) in alphas.iter().enumerate() {
            let sign = if x.get(i) { -1.0 } else { 1.0 };
            prod = prod.kron(&StateVector::from_real(&[a.cos(), sign * a.sin()]).unwrap()).unwrap();
        }
        assert!((&build_psi_x(&x, &noise).unwrap() - &prod).norm() < 1e-15);
    }

    #[test]
    fn zero_noise_gives_ground_state() {
        let noise = PerBitNoise::uniform(3, 0.0).unwrap();
        for k in 0..8 {
            assert_eq!(build_psi_x(&BitString::from_index(k, 3), &noise).unwrap(), StateVector::basis(8, 0));
        }
        let code = ParityCode::privacy_only(bs("101")).unwrap();
        let ground = StateVector::basis(8, 0).projector();
        for b in 0..2 {
            assert!(mixture_rho(&code, b, &noise).unwrap().max_abs_diff(&ground).unwrap() < 1e-15);
        }
        assert_eq!(delta_analytic(&code, &noise).unwrap().max_abs(), 0.0);
        assert_eq!(trace_norm_bound(&code, &noise).unwrap().bound, 0.0);
    }

    #[test]
    fn single_bit_mixture_is_pure() {
        let noise = PerBitNoise::from_alphas(vec![0.4]).unwrap();
        let code = ParityCode::privacy_only(bs("1")).unwrap();
        for b in 0..2u8 {
            let psi = build_psi_x(&BitString::from_index(b as usize, 1), &noise).unwrap();
            assert!(mixture_rho(&code, b, &noise).unwrap().max_abs_diff(&psi.projector()).unwrap() < 1e-15);
        }
    }

    #[test]
    fn two_bit_mixture_and_delta() {
        let a = 0.35;
        let noise = PerBitNoise::uniform(2, a).unwrap();
        let code = ParityCode::privacy_only(bs("11")).unwrap();
        let p00 = build_psi_x(&bs("00"), &noise).unwrap().projector();
        let p11 = build_psi_x(&bs("11"), &noise).unwrap().projector();
        let rho0 = (&p00 + &p11).scale_real(0.5);
        assert!(mixture_rho(&code, 0, &noise).unwrap().max_abs_diff(&rho0).unwrap() < 1e-15);

        let delta = delta_analytic(&code, &noise).unwrap();
        let (c, s) = (a.cos(), a.sin());
        // d_00 = c², d_11 = s², d_01 = d_10 = cs.
        assert!((delta[(0, 3)].re - 2.0 * c * c * s * s).abs() < 1e-15);
        assert!((delta[(3, 0)].re - 2.0 * c * c * s * s).abs() < 1e-15);
        assert!((delta[(1, 2)].re - 2.0 * c * s * c * s).abs() < 1e-15);
        assert_eq!(delta[(0, 0)].re, 0.0);
        assert_eq!(delta[(0, 1)].re, 0.0);
        let bound = trace_norm_bound(&code, &noise).unwrap().bound;
        assert!((bound - 2.0 * (2.0 * a).sin().powi(2)).abs() < 1e-15);
    }

    #[test]
    fn delta_with_one_equation_decomposes() {
        let noise = PerBitNoise::from_alphas(vec![0.1, 0.5, 0.3, 0.7]).unwrap();
        for b1 in 0..2u8 {
            let code = ParityCode::new(bs("1100"), vec![bs("0110")], vec![b1]).unwrap();
            let full = delta_analytic(&code, &noise).unwrap();
            let d_v = delta_analytic(&ParityCode::privacy_only(bs("1100")).unwrap(), &noise).unwrap();
            let d_shift = delta_analytic(&ParityCode::privacy_only(bs("1010")).unwrap(), &noise).unwrap();
            let expected = if b1 == 0 { &d_v + &d_shift } else { &d_v - &d_shift };
            assert!(full.max_abs_diff(&expected).unwrap() < 1e-15);
        }
    }

    #[test]
    fn sd_bound_examples() {
        let code = ParityCode::privacy_only(bs("11")).unwrap();
        assert_eq!(sd_upper_bound(&code, &PerBitNoise::uniform(2, 0.0).unwrap()).unwrap(), 0.0);
        let v = sd_upper_bound(&code, &PerBitNoise::uniform(2, PI / 12.0).unwrap()).unwrap();
        assert!((v - 0.25).abs() < 1e-15);
        let clamped = SdBound::from_trace_norm(3.0);
        assert_eq!(clamped.half_trace, 1.0);
        assert_eq!(clamped.full_trace, 1.0);
        assert_eq!(SdBound::from_trace_norm(0.5).full_trace, 0.5);
    }

    #[test]
    fn hoeffding_examples() {
        assert!((hoeffding_tail(5000, 0.02).unwrap() - 2.0 * (-4.0f64).exp()).abs() < 1e-15);
        assert!((hoeffding_tail(5000, 0.02).unwrap() - 0.036_631_277_777_468).abs() < 1e-12);
        assert!((hoeffding_tail(1, 1e-12).unwrap() - 2.0).abs() < 1e-12);
        assert!(hoeffding_tail(100, 0.1).unwrap() > hoeffding_tail(101, 0.1).unwrap());
        assert!(hoeffding_tail(100, 0.1).unwrap() > hoeffding_tail(100, 0.11).unwrap());
        assert!(hoeffding_tail(0, 0.1).is_err());
        assert!(hoeffding_tail(10, 0.0).is_err());
        assert!(hoeffding_tail(10, -1.0).is_err());
    }

    fn uniform_params(n: u64, r: u64, alpha: f64, p_test: f64, delta: f64) -> BoundParams {
        BoundParams { n, r, alpha, p_test, delta, mode: BoundMode::Uniform, weights: None }
    }

    #[test]
    fn total_bound_vacuous_for_tiny_delta() {
        let rep = total_info_bound(&uniform_params(1000, 0, 1.0, 0.0, 1e-9)).unwrap();
        assert!(rep.first_term < 1e-300);
        assert!((rep.hoeffding_tail - 2.0).abs() < 1e-9);
        assert_eq!(rep.total_info_bound, 1.0);
    }

    #[test]
    fn total_bound_decays_geometrically() {
        // (16/0.5)(0.02 + 0.01) = 0.96 < 1
        for r in [0u64, 3] {
            let a = total_info_bound(&uniform_params(400, r, 0.5, 0.02, 0.005)).unwrap();
            let b = total_info_bound(&uniform_params(800, r, 0.5, 0.02, 0.005)).unwrap();
            let expected_a = 2f64.powi(r as i32 + 1) * 0.96f64.powf(100.0);
            assert!((a.first_term / expected_a - 1.0).abs() < 1e-12);
            assert!((b.first_term / a.first_term - 0.96f64.powf(100.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn uniform_equals_per_coset_when_weights_equal() {
        let (n, r, nhat) = (200u64, 2u64, 120u64);
        let uni = total_info_bound(&uniform_params(n, r, nhat as f64 / n as f64, 0.01, 0.004)).unwrap();
        let per = total_info_bound(&BoundParams {
            mode: BoundMode::PerCoset,
            weights: Some(vec![nhat; 4]),
            ..uniform_params(n, r, 0.0, 0.01, 0.004)
        })
        .unwrap();
        assert!((uni.log2_total_info_bound - per.log2_total_info_bound).abs() < 1e-10);
        assert_eq!(per.per_coset_terms.len(), 4);
        // heavier cosets only help
        let heavier = total_info_bound(&BoundParams {
            mode: BoundMode::PerCoset,
            weights: Some(vec![nhat, nhat + 10, nhat + 20, nhat + 5]),
            ..uniform_params(n, r, 0.0, 0.01, 0.004)
        })
        .unwrap();
        assert!(heavier.first_term <= uni.first_term);
    }

    #[test]
    fn total_bound_domain_errors() {
        assert!(total_info_bound(&uniform_params(0, 0, 0.5, 0.02, 0.01)).is_err());
        assert!(total_info_bound(&uniform_params(10, 0, 0.0, 0.02, 0.01)).is_err());
        assert!(total_info_bound(&uniform_params(10, 0, 1.5, 0.02, 0.01)).is_err());
        assert!(total_info_bound(&uniform_params(10, 0, 0.5, 0.02, 0.0)).is_err());
        let missing = BoundParams { mode: BoundMode::PerCoset, ..uniform_params(10, 1, 0.5, 0.02, 0.01) };
        assert!(total_info_bound(&missing).is_err());
    }

    #[test]
    fn witness_exists_at_two_percent() {
        let w = search_witness(0.02, -100.0, 0.15).expect("witness");
        assert!(w.report.log2_total_info_bound <= -100.0);
        assert!(w.r as f64 <= w.report.alpha * w.n as f64);
        assert_eq!(w.n_hat % 2, 0);
    }

    #[test]
    fn brute_force_small() {
        let noise = PerBitNoise::from_alphas(vec![0.2, 0.6, 0.4]).unwrap();
        let code = ParityCode::new(bs("110"), vec![bs("011")], vec![1]).unwrap();
        let rep = brute_force_check(&code, &noise, 10, 7).unwrap();
        assert!(rep.passed, "{:?}", rep.failures);
        let plain = brute_force_check(
            &ParityCode::privacy_only(bs("11")).unwrap(),
            &PerBitNoise::from_alphas(vec![0.3, 0.5]).unwrap(),
            10,
            1,
        )
        .unwrap();
        assert!(plain.passed, "{:?}", plain.failures);
        assert!((plain.trace_norm_bruteforce - plain.trace_norm_bound).abs() < 1e-9);
    }

    #[test]
    fn brute_force_rejects_large_n() {
        let noise = PerBitNoise::uniform(11, 0.1).unwrap();
        let code = ParityCode::privacy_only(BitString::ones(11)).unwrap();
        assert!(matches!(brute_force_check(&code, &noise, 1, 0), Err(SecurityError::Domain(_))));
    }
}
