//! JSON scenario files tying an attack, a parity code, per-bit noise, a
//! protocol run and bound parameters together. Every section is optional;
//! each subcommand asks for the sections it needs.
//!
//! ```json
//! {
//!   "attack": { "probe_dim": 2, "e00": [[1,0],[0,0]], "e01": [[0,0],[0,0]],
//!               "e10": [[0,0],[0,0]], "e11": [[0,0],[1,0]] },
//!   "code": { "v": "111", "ecc_strings": ["110"], "ecc_bits": [1] },
//!   "noise": { "alphas": [0.1, 0.2, 0.3] },
//!   "protocol": { "n_raw": 1000, "p_allowed": 0.05, "rng_seed": 7, "uniform_error": 0.02 },
//!   "bounds": { "delta": 0.01, "p_test": 0.02, "mode": "uniform" }
//! }
//! ```

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::attack::{self, AttackSpec};
use crate::gf2::{self, BitString, ParityCode};
use crate::protocol::{ErrorModel, ProtocolConfig};
use crate::security::{BoundMode, BoundParams, PerBitNoise};

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    /// One attack applied to every bit.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attack: Option<AttackSpec>,
    /// One attack per key bit.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attacks: Option<Vec<AttackSpec>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<NoiseSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub code: Option<CodeSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub protocol: Option<ProtocolSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bounds: Option<BoundsSection>,
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSection {
    pub alphas: Vec<f64>,
    /// Defaults to `sin²(α_i)/2`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ps: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct CodeSection {
    pub v: BitString,
    #[serde(default)]
    pub ecc_strings: Vec<BitString>,
    #[serde(default)]
    pub ecc_bits: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolSection {
    pub n_raw: usize,
    pub p_allowed: f64,
    pub rng_seed: u64,
    /// Same error probability in every round.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub uniform_error: Option<f64>,
    /// One error probability per raw round.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_bit_error: Option<Vec<f64>>,
    /// Slack for the Monte Carlo check; falls back to `bounds.delta`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsSection {
    pub delta: f64,
    pub p_test: f64,
    #[serde(default)]
    pub mode: BoundMode,
    /// Key length; defaults to the code length.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<u64>,
    /// Defaults to the code's number of error-correction equations.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<u64>,
    /// Defaults to the code's `min_s n̂_s / n`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
}

#[derive(Debug)]
pub enum LoadError {
    Io(std::io::Error),
    Parse { path: String, message: String, line: usize, column: usize },
}

impl fmt::Display for LoadError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LoadError::Io(e) => write!(f, "cannot read scenario: {e}"),
            LoadError::Parse { path, message, line, column } => {
                write!(f, "line {line}, column {column}: field `{path}`: {message}")
            }
        }
    }
}

impl std::error::Error for LoadError {}

impl Scenario {
    pub fn parse(text: &str) -> Result<Self, LoadError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            let (line, column) = (inner.line(), inner.column());
            let full = inner.to_string();
            let message = full.strip_suffix(&format!(" at line {line} column {column}")).unwrap_or(&full).to_string();
            LoadError::Parse { path, line, column, message }
        })
    }

    pub fn load(path: &Path) -> Result<Self, LoadError> {
        Self::parse(&std::fs::read_to_string(path).map_err(LoadError::Io)?)
    }

    pub fn parity_code(&self) -> Option<Result<ParityCode, String>> {
        self.code
            .as_ref()
            .map(|c| ParityCode::new(c.v.clone(), c.ecc_strings.clone(), c.ecc_bits.clone()).map_err(|e| e.to_string()))
    }

    /// Key length implied by the code, the noise or the attack list.
    fn key_length(&self) -> Option<usize> {
        self.code
            .as_ref()
            .map(|c| c.v.len())
            .or_else(|| self.noise.as_ref().map(|n| n.alphas.len()))
            .or_else(|| self.attacks.as_ref().map(Vec::len))
    }

    /// Explicit noise, else derived from the attack list, else from the single
    /// attack repeated over the key length.
    pub fn per_bit_noise(&self) -> Option<Result<PerBitNoise, String>> {
        if let Some(n) = &self.noise {
            let built = match &n.ps {
                Some(ps) => PerBitNoise::new(n.alphas.clone(), ps.clone()),
                None => PerBitNoise::from_alphas(n.alphas.clone()),
            };
            return Some(built.map_err(|e| e.to_string()));
        }
        if let Some(list) = &self.attacks {
            return Some(PerBitNoise::from_attacks(list).map_err(|e| e.to_string()));
        }
        let single = self.attack.as_ref()?;
        let n = self.key_length()?;
        Some(PerBitNoise::from_attacks(&vec![single.clone(); n]).map_err(|e| e.to_string()))
    }

    pub fn protocol_config(&self) -> Option<ProtocolConfig> {
        self.protocol.as_ref().map(|p| ProtocolConfig { n_raw: p.n_raw, p_allowed: p.p_allowed, rng_seed: p.rng_seed })
    }

    /// Explicit error probabilities take precedence over the single attack.
    pub fn error_model(&self) -> Result<ErrorModel, String> {
        let p = self.protocol.as_ref().ok_or("scenario has no protocol section")?;
        match (&p.uniform_error, &p.per_bit_error, &self.attack) {
            (Some(_), Some(_), _) => Err("give either uniform_error or per_bit_error, not both".into()),
            (Some(u), None, _) => Ok(ErrorModel::Uniform(*u)),
            (None, Some(list), _) => Ok(ErrorModel::PerBit(list.clone())),
            (None, None, Some(a)) => Ok(ErrorModel::Attack(a.clone())),
            (None, None, None) => Err("protocol needs uniform_error, per_bit_error or a single attack".into()),
        }
    }

    pub fn monte_carlo_delta(&self) -> Option<f64> {
        self.protocol.as_ref().and_then(|p| p.delta).or_else(|| self.bounds.as_ref().map(|b| b.delta))
    }

    /// Bound parameters with defaults filled in from the code.
    pub fn bound_params(&self, mode_override: Option<BoundMode>) -> Result<BoundParams, String> {
        let b = self.bounds.as_ref().ok_or("scenario has no bounds section")?;
        let mode = mode_override.unwrap_or(b.mode);
        let code = self.parity_code().transpose()?;
        let weights = match &code {
            Some(c) => Some(gf2::coset_weights(c).map_err(|e| e.to_string())?),
            None => None,
        };
        let n = b.n.or(code.as_ref().map(|c| c.n() as u64)).ok_or("bounds need n or a code")?;
        let r = b.r.or(code.as_ref().map(|c| c.r() as u64)).ok_or("bounds need r or a code")?;
        let per_coset = if mode == BoundMode::PerCoset {
            let c = code.as_ref().ok_or("per-coset mode needs a code")?;
            if c.n() as u64 != n || c.r() as u64 != r {
                return Err(format!("per-coset mode needs n = {} and r = {} to match the code", c.n(), c.r()));
            }
            weights.as_ref().map(|w| w.entries.iter().map(|e| e.weight as u64).collect())
        } else {
            None
        };
        let alpha = b.alpha.or(weights.as_ref().map(|w| w.alpha)).ok_or("uniform mode needs alpha or a code")?;
        Ok(BoundParams { n, r, alpha, p_test: b.p_test, delta: b.delta, mode, weights: per_coset })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationSummary {
    pub passed: bool,
    pub checks: Vec<Check>,
}

/// Validates every present section and the lengths shared between them.
pub fn validate(s: &Scenario) -> ValidationSummary {
    let mut checks = Vec::new();
    let mut push = |name: String, result: Result<(), String>| {
        let (passed, detail) = match result {
            Ok(()) => (true, "ok".to_string()),
            Err(e) => (false, e),
        };
        checks.push(Check { name, passed, detail });
    };
    let attack_check = |a: &AttackSpec| {
        let report = attack::validate(a);
        if report.is_ok() {
            attack::error_rates(a).map(|_| ()).map_err(|e| e.to_string())
        } else {
            Err(report.to_string())
        }
    };
    if let Some(a) = &s.attack {
        push("attack".into(), attack_check(a));
    }
    if let Some(list) = &s.attacks {
        for (i, a) in list.iter().enumerate() {
            push(format!("attacks[{i}]"), attack_check(a));
        }
    }
    if let Some(code) = s.parity_code() {
        push("code".into(), code.map(|_| ()));
    }
    if let Some(noise) = s.per_bit_noise() {
        push("noise".into(), noise.map(|_| ()));
    }
    if let Some(cfg) = s.protocol_config() {
        push("protocol".into(), cfg.validate().map_err(|e| e.to_string()));
        push("protocol.errors".into(), s.error_model().and_then(|m| check_model(&m, cfg.n_raw)));
    }
    if s.bounds.is_some() {
        push("bounds".into(), s.bound_params(None).map(|_| ()));
    }

    let mut lengths: Vec<(&str, usize)> = Vec::new();
    if let Some(c) = &s.code {
        lengths.push(("code", c.v.len()));
    }
    if let Some(n) = &s.noise {
        lengths.push(("noise.alphas", n.alphas.len()));
        if let Some(ps) = &n.ps {
            lengths.push(("noise.ps", ps.len()));
        }
    }
    if let Some(list) = &s.attacks {
        lengths.push(("attacks", list.len()));
    }
    if let Some(n) = s.bounds.as_ref().and_then(|b| b.n) {
        if s.bounds.as_ref().is_some_and(|b| b.mode == BoundMode::PerCoset) {
            lengths.push(("bounds.n", n as usize));
        }
    }
    if lengths.len() > 1 {
        let first = lengths[0];
        let bad: Vec<String> = lengths
            .iter()
            .filter(|(_, len)| *len != first.1)
            .map(|(name, len)| format!("{name} has length {len}, {} has {}", first.0, first.1))
            .collect();
        push("lengths".into(), if bad.is_empty() { Ok(()) } else { Err(bad.join("; ")) });
    }

    let passed = checks.iter().all(|c| c.passed);
    ValidationSummary { passed, checks }
}

fn check_model(m: &ErrorModel, n_raw: usize) -> Result<(), String> {
    let in_range = |p: &f64| (0.0..=1.0).contains(p);
    match m {
        ErrorModel::Uniform(p) if !in_range(p) => Err(format!("uniform_error {p} outside [0, 1]")),
        ErrorModel::PerBit(ps) if ps.len() != n_raw => {
            Err(format!("per_bit_error has {} entries for n_raw = {n_raw}", ps.len()))
        }
        ErrorModel::PerBit(ps) if !ps.iter().all(in_range) => Err("per_bit_error entries must lie in [0, 1]".into()),
        _ => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const CNOT: &str =
        r#"{"probe_dim":2,"e00":[[1,0],[0,0]],"e01":[[0,0],[0,0]],"e10":[[0,0],[0,0]],"e11":[[0,0],[1,0]]}"#;

    #[test]
    fn parse_reports_field_and_line() {
        let text = "{\n  \"code\": {\n    \"v\": \"1x1\"\n  }\n}";
        match Scenario::parse(text) {
            Err(LoadError::Parse { path, line, .. }) => {
                assert_eq!(path, "code.v");
                assert!((3..=4).contains(&line), "line {line}");
            }
            other => panic!("expected parse error, got {other:?}"),
        }
        assert!(Scenario::parse(r#"{"bogus": 1}"#).is_err());
    }

    #[test]
    fn empty_scenario_validates() {
        let s = Scenario::parse("{}").unwrap();
        assert!(validate(&s).passed);
    }

    #[test]
    fn cnot_noise_from_single_attack() {
        let s = Scenario::parse(&format!(r#"{{"attack":{CNOT},"code":{{"v":"11"}}}}"#)).unwrap();
        let noise = s.per_bit_noise().unwrap().unwrap();
        assert_eq!(noise.len(), 2);
        assert!(validate(&s).passed);
    }

    #[test]
    fn dependent_code_fails_validation() {
        let s = Scenario::parse(r#"{"code":{"v":"110","ecc_strings":["011","101"],"ecc_bits":[0,1]}}"#).unwrap();
        let summary = validate(&s);
        assert!(!summary.passed);
        assert!(summary.checks.iter().any(|c| c.name == "code" && c.detail.contains("linearly dependent")));
    }

    #[test]
    fn length_mismatch_is_reported() {
        let s = Scenario::parse(r#"{"code":{"v":"110"},"noise":{"alphas":[0.1,0.2]}}"#).unwrap();
        let summary = validate(&s);
        assert!(summary.checks.iter().any(|c| c.name == "lengths" && !c.passed));
    }

    #[test]
    fn bound_params_from_code() {
        let s = Scenario::parse(
            r#"{"code":{"v":"1111","ecc_strings":["1100"],"ecc_bits":[0]},"bounds":{"delta":0.01,"p_test":0.02}}"#,
        )
        .unwrap();
        let p = s.bound_params(None).unwrap();
        assert_eq!((p.n, p.r), (4, 1));
        assert_eq!(p.alpha, 0.5);
        let per = s.bound_params(Some(BoundMode::PerCoset)).unwrap();
        assert_eq!(per.weights, Some(vec![4, 2]));
    }
}
