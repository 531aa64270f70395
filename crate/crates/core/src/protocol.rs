//! BB84 sifting and error estimation with a seeded generator.
//!
//! Bob's outcomes are drawn from the error probabilities an attack induces
//! on matched-basis rounds; Eve's probes are not simulated.
//!
//! Each raw round draws, in order: Alice's bit, Alice's basis, Bob's basis,
//! then for matched bases one unit float compared against the round's error
//! probability. Mismatched rounds draw nothing more. See
//! [`crate::random::seeded_rng`] for the generator.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::attack::{self, AttackError, AttackSpec, Basis, ErrorRates};
use crate::random::{self, bernoulli, fair_bit};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProtocolError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("protocol aborted: {0}")]
    Abort(String),
    #[error(transparent)]
    Attack(#[from] AttackError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolConfig {
    /// Raw rounds `n''`.
    pub n_raw: usize,
    pub p_allowed: f64,
    pub rng_seed: u64,
}

impl ProtocolConfig {
    pub fn validate(&self) -> Result<(), ProtocolError> {
        if self.n_raw < 4 {
            return Err(ProtocolError::Config(format!("n_raw = {} must be at least 4", self.n_raw)));
        }
        if !(0.0..=1.0).contains(&self.p_allowed) {
            return Err(ProtocolError::Config(format!("p_allowed = {} outside [0, 1]", self.p_allowed)));
        }
        Ok(())
    }
}

/// Where Bob's matched-basis error probabilities come from.
#[derive(Debug, Clone, PartialEq)]
pub enum ErrorModel {
    Uniform(f64),
    /// One probability per raw round.
    PerBit(Vec<f64>),
    /// `pe_z` on z rounds and `pe_x` on x rounds.
    Attack(AttackSpec),
}

enum Rates {
    Uniform(f64),
    PerBit(Vec<f64>),
    Attack(ErrorRates),
}

impl Rates {
    fn prepare(model: &ErrorModel, n_raw: usize) -> Result<Self, ProtocolError> {
        let check = |p: f64| {
            if (0.0..=1.0).contains(&p) {
                Ok(())
            } else {
                Err(ProtocolError::Config(format!("error probability {p} outside [0, 1]")))
            }
        };
        Ok(match model {
            ErrorModel::Uniform(p) => {
                check(*p)?;
                Rates::Uniform(*p)
            }
            ErrorModel::PerBit(ps) => {
                if ps.len() != n_raw {
                    return Err(ProtocolError::Config(format!("{} error probabilities for {n_raw} rounds", ps.len())));
                }
                ps.iter().try_for_each(|&p| check(p))?;
                Rates::PerBit(ps.clone())
            }
            ErrorModel::Attack(a) => Rates::Attack(attack::error_rates(a)?),
        })
    }

    fn at(&self, round: usize, basis: Basis) -> f64 {
        match self {
            Rates::Uniform(p) => *p,
            Rates::PerBit(ps) => ps[round],
            Rates::Attack(r) => r.in_basis(basis),
        }
    }
}

fn basis_of(bit: u8) -> Basis {
    if bit == 0 {
        Basis::Z
    } else {
        Basis::X
    }
}

/// Bases are encoded as bits: 0 for z, 1 for x. `bob_bits`, `error_probs`
/// and the test/key index lists refer to positions in `sifted_indices`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub n_raw: usize,
    pub alice_bits: Vec<u8>,
    pub alice_bases: Vec<u8>,
    pub bob_bases: Vec<u8>,
    pub sifted_indices: Vec<usize>,
    pub bob_bits: Vec<u8>,
    pub error_probs: Vec<f64>,
    /// Sifted position dropped to make `n'` even.
    pub discarded: Option<usize>,
    pub n_prime: usize,
    pub test_indices: Vec<usize>,
    pub key_indices: Vec<usize>,
    pub test_errors: usize,
    pub p_test: f64,
    pub p_allowed: f64,
    pub accepted: bool,
}

impl Transcript {
    /// Mean matched-basis error probability over the `n'` sifted bits that
    /// were kept.
    pub fn mean_error_prob(&self) -> f64 {
        let kept = self.n_prime;
        self.error_probs[..kept].iter().sum::<f64>() / kept as f64
    }

    pub fn n_test(&self) -> usize {
        self.test_indices.len()
    }
}

pub fn run_protocol(cfg: &ProtocolConfig, model: &ErrorModel) -> Result<Transcript, ProtocolError> {
    cfg.validate()?;
    let rates = Rates::prepare(model, cfg.n_raw)?;
    let mut rng = random::seeded_rng(cfg.rng_seed);
    let n = cfg.n_raw;
    let mut alice_bits = Vec::with_capacity(n);
    let mut alice_bases = Vec::with_capacity(n);
    let mut bob_bases = Vec::with_capacity(n);
    let mut sifted_indices = Vec::new();
    let mut bob_bits = Vec::new();
    let mut error_probs = Vec::new();
    for round in 0..n {
        let bit = fair_bit(&mut rng);
        let a_basis = fair_bit(&mut rng);
        let b_basis = fair_bit(&mut rng);
        alice_bits.push(bit);
        alice_bases.push(a_basis);
        bob_bases.push(b_basis);
        if a_basis == b_basis {
            let p = rates.at(round, basis_of(a_basis));
            let flip = bernoulli(&mut rng, p);
            sifted_indices.push(round);
            bob_bits.push(bit ^ u8::from(flip));
            error_probs.push(p);
        }
    }
    let mut n_prime = sifted_indices.len();
    let discarded = if n_prime % 2 == 1 {
        n_prime -= 1;
        Some(n_prime)
    } else {
        None
    };
    if n_prime == 0 {
        return Err(ProtocolError::Abort("no usable sifted bits".into()));
    }
    let mut order: Vec<usize> = (0..n_prime).collect();
    random::shuffle(&mut rng, &mut order);
    let n_test = n_prime / 2;
    let mut test_indices = order[..n_test].to_vec();
    let mut key_indices = order[n_test..].to_vec();
    test_indices.sort_unstable();
    key_indices.sort_unstable();
    let test_errors = test_indices.iter().filter(|&&k| alice_bits[sifted_indices[k]] != bob_bits[k]).count();
    let p_test = test_errors as f64 / n_test as f64;
    Ok(Transcript {
        n_raw: n,
        alice_bits,
        alice_bases,
        bob_bases,
        sifted_indices,
        bob_bits,
        error_probs,
        discarded,
        n_prime,
        test_indices,
        key_indices,
        test_errors,
        p_test,
        p_allowed: cfg.p_allowed,
        accepted: p_test <= cfg.p_allowed,
    })
}

/// Seed of trial `t`: `splitmix64(seed ⊕ splitmix64(t))`.
pub fn trial_seed(seed: u64, trial: u64) -> u64 {
    random::splitmix64(seed ^ random::splitmix64(trial))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonteCarloReport {
    pub trials: usize,
    pub aborted: usize,
    pub delta: f64,
    /// Trials where the mean error probability of the sifted bits exceeded
    /// `p_test + 2δ`.
    pub violations: usize,
    pub empirical_rate: f64,
    /// Mean over trials of `2 e^{−2 n_test δ²}`.
    pub bound: f64,
    pub bound_min: f64,
    pub bound_max: f64,
    /// Binomial standard deviation of the rate at the bound, `√(b(1−b)/trials)`.
    pub std_error: f64,
    pub within_3_sigma: bool,
    pub mean_n_prime: f64,
    pub mean_p_test: f64,
}

struct TrialOutcome {
    violated: bool,
    bound: f64,
    n_prime: usize,
    p_test: f64,
}

/// Checks `Pr[p_{n'} > p_test + 2δ] ≤ 2 e^{−2 n_test δ²}` empirically.
///
/// `p_{n'}` is the mean per-bit error probability over the kept sifted bits
/// and `p_test` is the trial's own estimate. Trials run in parallel with
/// seeds from [`trial_seed`]; a trial with no sifted bits counts as aborted.
pub fn hoeffding_monte_carlo(
    cfg: &ProtocolConfig,
    model: &ErrorModel,
    delta: f64,
    trials: usize,
) -> Result<MonteCarloReport, ProtocolError> {
    if trials == 0 {
        return Err(ProtocolError::Config("trials must be at least 1".into()));
    }
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(ProtocolError::Config(format!("delta = {delta} must be positive")));
    }
    cfg.validate()?;
    Rates::prepare(model, cfg.n_raw)?;
    let outcomes: Vec<Result<Option<TrialOutcome>, ProtocolError>> = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let trial_cfg = ProtocolConfig { rng_seed: trial_seed(cfg.rng_seed, t), ..cfg.clone() };
            match run_protocol(&trial_cfg, model) {
                Ok(tr) => {
                    let n_test = tr.n_test() as f64;
                    Ok(Some(TrialOutcome {
                        violated: tr.mean_error_prob() > tr.p_test + 2.0 * delta,
                        bound: 2.0 * (-2.0 * n_test * delta * delta).exp(),
                        n_prime: tr.n_prime,
                        p_test: tr.p_test,
                    }))
                }
                Err(ProtocolError::Abort(_)) => Ok(None),
                Err(e) => Err(e),
            }
        })
        .collect();

    let mut aborted = 0;
    let mut done = Vec::with_capacity(trials);
    for o in outcomes {
        match o? {
            Some(t) => done.push(t),
            None => aborted += 1,
        }
    }
    if done.is_empty() {
        return Err(ProtocolError::Abort("every trial aborted".into()));
    }
    let m = done.len() as f64;
    let violations = done.iter().filter(|t| t.violated).count();
    let empirical_rate = violations as f64 / m;
    let bound = done.iter().map(|t| t.bound).sum::<f64>() / m;
    let bound_min = done.iter().map(|t| t.bound).fold(f64::INFINITY, f64::min);
    let bound_max = done.iter().map(|t| t.bound).fold(0.0, f64::max);
    let b = bound.min(1.0);
    let std_error = (b * (1.0 - b) / m).sqrt();
    Ok(MonteCarloReport {
        trials,
        aborted,
        delta,
        violations,
        empirical_rate,
        bound,
        bound_min,
        bound_max,
        std_error,
        within_3_sigma: empirical_rate <= bound + 3.0 * std_error,
        mean_n_prime: done.iter().map(|t| t.n_prime as f64).sum::<f64>() / m,
        mean_p_test: done.iter().map(|t| t.p_test).sum::<f64>() / m,
    })
}
