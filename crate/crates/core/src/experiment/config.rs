use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functional::Coupling;
use crate::geometry::SurfaceSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    DeterministicStability,
    RbmRevuz,
    ExcursionScaling,
    EpsilonLadder,
    Counterexample,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::DeterministicStability => "deterministic-stability",
            ExperimentKind::RbmRevuz => "rbm-revuz",
            ExperimentKind::ExcursionScaling => "excursion-scaling",
            ExperimentKind::EpsilonLadder => "epsilon-ladder",
            ExperimentKind::Counterexample => "counterexample",
        }
    }

    fn simulates(self) -> bool {
        matches!(self, ExperimentKind::RbmRevuz | ExperimentKind::ExcursionScaling | ExperimentKind::EpsilonLadder)
    }
}

/// Thresholds of the pass/fail checks written into every report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Relative error allowed on `E[L_T]`.
    pub revuz_rel: f64,
    /// Allowed `|slope − 1|` for `E[N_ε]` against `1/ε`.
    pub scaling_slope: f64,
    /// Consecutive decreasing pairs required in the median ladder gaps;
    /// `None` allows one exception.
    pub ladder_decreasing: Option<usize>,
    /// Second-smallest singular value threshold.
    pub rank_sigma: f64,
    /// Fraction of seeds that must clear `rank_sigma`.
    pub rank_fraction: f64,
    /// Split multiplicativity residual.
    pub split: f64,
    /// Allowed growth of the quadratic endpoint sum over its reference rung.
    pub quadratic_growth: f64,
    /// Largest admissible slope of `ln|v_j(1)|` against `j`.
    pub counterexample_slope: f64,
    /// Smallest admissible limit magnitude.
    pub counterexample_limit: f64,
    /// Admissible range of the gap ratio when `δ` halves.
    pub halving_low: f64,
    pub halving_high: f64,
    /// Slack on the calibrated Skorokhod stability constant.
    pub skorokhod_slack: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            revuz_rel: 0.05,
            scaling_slope: 0.2,
            ladder_decreasing: None,
            rank_sigma: 0.01,
            rank_fraction: 0.9,
            split: 1e-10,
            quadratic_growth: 3.0,
            counterexample_slope: -1.0,
            counterexample_limit: 0.1,
            halving_low: 0.3,
            halving_high: 0.7,
            skorokhod_slack: 2.0,
        }
    }
}

/// An experiment as read from a TOML file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub domain: SurfaceSpec,
    /// Ambient dimension; defaults to what the domain implies, else 2.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default = "one")]
    pub replicas: usize,
    /// Euler step `h`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
    /// Time horizon `T` of time-driven runs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time_horizon: Option<f64>,
    /// Local-time horizon `r` of local-time-driven runs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub local_time: Option<f64>,
    /// Give up on reaching `local_time` after this much time.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_time: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub j_min: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub j_max: Option<u32>,
    /// Even `j` values of the counterexample.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub j_list: Option<Vec<u32>>,
    /// Contact layer; defaults to `2√h·log(1/h)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub boundary_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coupling: Option<Coupling>,
    /// Fixed start point; uniform in the domain when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<Vec<f64>>,
    /// Pieces of the random trajectories of stability runs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pieces: Option<usize>,
    /// Largest perturbation of the stability `δ`-ladder.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    /// Rungs of the `δ`-ladder.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_rungs: Option<usize>,
    /// Not part of the echo: it does not change any output.
    #[serde(default, skip_serializing)]
    pub out_dir: Option<PathBuf>,
    #[serde(default)]
    pub tolerances: Tolerances,
}

fn one() -> usize {
    1
}

/// A problem found while reading or checking a config.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    /// 1-based line in the config text, when known.
    pub line: Option<usize>,
    pub field: String,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(line) => write!(f, "line {line}: {}: {}", self.field, self.message),
            None => write!(f, "{}: {}", self.field, self.message),
        }
    }
}

fn field_line(text: &str, field: &str) -> Option<usize> {
    text.lines().position(|l| {
        let l = l.trim_start();
        l.strip_prefix(field).is_some_and(|rest| rest.trim_start().starts_with('='))
    })
    .map(|i| i + 1)
}

fn line_of_offset(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

impl ExperimentConfig {
    /// Parses TOML text, reporting syntax and schema errors as diagnostics.
    pub fn parse(text: &str) -> std::result::Result<Self, Vec<Diagnostic>> {
        toml::from_str::<ExperimentConfig>(text).map_err(|e| {
            let line = e.span().map(|s| line_of_offset(text, s.start));
            let message = e.message().to_string();
            let field = message
                .split('`')
                .nth(1)
                .filter(|_| message.contains("field"))
                .unwrap_or("config")
                .to_string();
            vec![Diagnostic { line, field, message }]
        })
    }

    /// Range and consistency checks; `text` is used only for line numbers.
    pub fn diagnostics(&self, text: &str) -> Vec<Diagnostic> {
        let mut out = Vec::new();
        let mut bad = |field: &str, message: String| {
            out.push(Diagnostic { line: field_line(text, field), field: field.into(), message });
        };
        if self.seed.is_none() {
            bad("seed", "missing master seed".into());
        }
        if self.replicas == 0 {
            bad("replicas", "must be at least 1".into());
        }
        if let Some(dim) = self.dim {
            if dim < 2 {
                bad("dim", format!("must be at least 2, got {dim}"));
            }
            if let Some(d) = self.domain.implied_dim().filter(|&d| d != dim) {
                bad("dim", format!("{} lives in dimension {d}", self.domain));
            }
        }
        let positive = |v: Option<f64>| v.is_some_and(|v| v.is_finite() && v > 0.0);
        if let Some(h) = self.step {
            if !positive(Some(h)) {
                bad("step", format!("must be positive, got {h}"));
            }
        } else if self.kind.simulates() {
            bad("step", "missing Euler step".into());
        }
        if let Some(t) = self.time_horizon.filter(|t| !(t.is_finite() && *t >= 0.0)) {
            bad("time_horizon", format!("must be nonnegative, got {t}"));
        }
        if let Some(r) = self.local_time.filter(|r| !(r.is_finite() && *r >= 0.0)) {
            bad("local_time", format!("must be nonnegative, got {r}"));
        }
        if let Some(t) = self.max_time.filter(|t| !positive(Some(*t))) {
            bad("max_time", format!("must be positive, got {t}"));
        }
        if let Some(t) = self.boundary_tol.filter(|t| !(t.is_finite() && *t >= 0.0)) {
            bad("boundary_tol", format!("must be nonnegative, got {t}"));
        }
        let needs_range = matches!(self.kind, ExperimentKind::ExcursionScaling | ExperimentKind::EpsilonLadder);
        match (self.j_min, self.j_max) {
            (Some(a), Some(b)) if a > b || b > 52 => bad("j_max", format!("j range {a}..={b} is empty or too fine")),
            (None, _) if needs_range => bad("j_min", "missing for ladder runs".into()),
            (_, None) if needs_range => bad("j_max", "missing for ladder runs".into()),
            _ => {}
        }
        match self.kind {
            ExperimentKind::RbmRevuz => {
                if self.time_horizon.is_none() {
                    bad("time_horizon", "missing for rbm-revuz".into());
                }
                if !self.domain.is_bounded() {
                    bad("domain", "rbm runs need a bounded domain".into());
                }
            }
            ExperimentKind::ExcursionScaling | ExperimentKind::EpsilonLadder => {
                if self.local_time.is_none() {
                    bad("local_time", format!("missing for {}", self.kind.name()));
                }
                if !self.domain.is_bounded() {
                    bad("domain", "rbm runs need a bounded domain".into());
                }
            }
            ExperimentKind::Counterexample => {
                if !matches!(self.domain, SurfaceSpec::Parabola { .. }) {
                    bad("domain", "the counterexample lives on a parabola".into());
                }
                if let Some(js) = &self.j_list {
                    if js.is_empty() || js.iter().any(|&j| j < 2 || j % 2 != 0) {
                        bad("j_list", "needs even values of at least 2".into());
                    }
                }
            }
            ExperimentKind::DeterministicStability => {
                if self.pieces.is_some_and(|p| p < 2) {
                    bad("pieces", "needs at least 2 pieces".into());
                }
                if self.delta.is_some_and(|d| !positive(Some(d))) {
                    bad("delta", "must be positive".into());
                }
                if self.delta_rungs.is_some_and(|r| r < 2) {
                    bad("delta_rungs", "needs at least 2 rungs".into());
                }
            }
        }
        if let Some(start) = &self.start {
            if start.len() != self.dimension() {
                bad("start", format!("has {} coordinates, expected {}", start.len(), self.dimension()));
            }
        }
        out
    }

    pub fn dimension(&self) -> usize {
        self.dim.or(self.domain.implied_dim()).unwrap_or(2)
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    /// Reads, parses and checks a config file.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let config = Self::parse(&text).map_err(Error::ConfigInvalid)?;
        let diags = config.diagnostics(&text);
        if diags.is_empty() {
            Ok(config)
        } else {
            Err(Error::ConfigInvalid(diags))
        }
    }
}

/// Diagnostics for a config file; empty when it is valid.
pub fn validate(path: &Path) -> Result<Vec<Diagnostic>> {
    let text = std::fs::read_to_string(path)?;
    Ok(match ExperimentConfig::parse(&text) {
        Ok(c) => c.diagnostics(&text),
        Err(d) => d,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const VALID: &str = r#"
kind = "rbm-revuz"
domain = "ball(r=1)"
seed = 3
replicas = 4
step = 1e-3
time_horizon = 0.5
"#;

    #[test]
    fn valid_config_has_no_diagnostics() {
        let c = ExperimentConfig::parse(VALID).unwrap();
        assert!(c.diagnostics(VALID).is_empty());
        assert_eq!(c.dimension(), 2);
    }

    #[test]
    fn missing_seed_and_negative_step_are_reported_with_lines() {
        let text = VALID.replace("seed = 3\n", "").replace("step = 1e-3", "step = -1e-3");
        let d = ExperimentConfig::parse(&text).unwrap().diagnostics(&text);
        let fields: Vec<&str> = d.iter().map(|d| d.field.as_str()).collect();
        assert_eq!(fields, ["seed", "step"]);
        assert_eq!(d[0].line, None);
        assert_eq!(d[1].line, Some(5));
    }

    #[test]
    fn unknown_field_is_a_diagnostic() {
        let text = format!("{VALID}bogus = 1\n");
        let d = ExperimentConfig::parse(&text).unwrap_err();
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].line, Some(8));
    }

    #[test]
    fn bad_domain_is_a_diagnostic() {
        let text = VALID.replace("ball(r=1)", "torus(1)");
        assert!(ExperimentConfig::parse(&text).is_err());
    }
}
