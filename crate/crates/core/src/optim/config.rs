use std::fmt;

use serde::{Deserialize, Serialize};

use super::direct::{CobylaParams, NelderMeadParams};
use super::steps::{AdamParams, Schedule};
use crate::error::{Error, Result};
use crate::grad::{GradMethod, GradientSettings};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    PsSgd,
    PsBfgs,
    PsAdam,
    SpsaSgd,
    SpsaBfgs,
    SpsaAdam,
    Cobyla,
    NelderMead,
}

impl OptimizerKind {
    pub const ALL: [OptimizerKind; 8] = [
        Self::PsSgd,
        Self::PsBfgs,
        Self::PsAdam,
        Self::SpsaSgd,
        Self::SpsaBfgs,
        Self::SpsaAdam,
        Self::Cobyla,
        Self::NelderMead,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::PsSgd => "ps_sgd",
            Self::PsBfgs => "ps_bfgs",
            Self::PsAdam => "ps_adam",
            Self::SpsaSgd => "spsa_sgd",
            Self::SpsaBfgs => "spsa_bfgs",
            Self::SpsaAdam => "spsa_adam",
            Self::Cobyla => "cobyla",
            Self::NelderMead => "nelder_mead",
        }
    }

    pub fn uses_parameter_shift(self) -> bool {
        matches!(self, Self::PsSgd | Self::PsBfgs | Self::PsAdam)
    }

    pub fn uses_spsa(self) -> bool {
        matches!(self, Self::SpsaSgd | Self::SpsaBfgs | Self::SpsaAdam)
    }

    /// Nominal evaluations per iteration for `m` parameters.
    pub fn paper_charge(self, m: usize) -> u64 {
        match self {
            Self::PsSgd | Self::PsBfgs | Self::PsAdam => 2 * m as u64 + 1,
            Self::SpsaSgd | Self::SpsaBfgs | Self::SpsaAdam | Self::Cobyla => 3,
            Self::NelderMead => 1,
        }
    }

    /// Hyperparameter keys this optimizer reads.
    fn keys(self) -> &'static [&'static str] {
        match self {
            Self::PsSgd => &["grad", "a", "A", "b"],
            Self::PsBfgs => &["grad", "b0", "trust_radius"],
            Self::PsAdam => &["grad", "eta", "a1", "a2", "eps"],
            Self::SpsaSgd => &["spsa_c", "a", "A", "b"],
            Self::SpsaBfgs => &["spsa_c", "a", "A", "b", "b0"],
            Self::SpsaAdam => &["spsa_c", "eta", "a1", "a2", "eps"],
            Self::Cobyla => &["rho_i", "rho_end", "patience"],
            Self::NelderMead => &["simplex_size", "tol"],
        }
    }
}

impl fmt::Display for OptimizerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// How evaluations are billed against the budget.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Accounting {
    /// Fixed per-iteration rates; adjoint gradients are billed as parameter shift.
    #[default]
    Paper,
    /// Evaluations the simulator actually performed.
    True,
}

pub const DEFAULT_BUDGET: u64 = 1000;

fn default_budget() -> u64 {
    DEFAULT_BUDGET
}

/// One optimizer with its hyperparameter overrides. Unset keys take the
/// defaults listed on [`OptimizerConfig::resolved`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerConfig {
    pub kind: OptimizerKind,
    #[serde(default = "default_budget")]
    pub budget: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iterations: Option<u64>,
    /// Gradient engine for `ps_*` optimizers: `"ps"` or `"adjoint"`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grad: Option<GradMethod>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spsa_c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(default, rename = "A", skip_serializing_if = "Option::is_none")]
    pub big_a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    /// Scale of `B_0 = b0 · I`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b0: Option<f64>,
    /// Initial step-length cap for BFGS.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trust_radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho_i: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho_end: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub patience: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simplex_size: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
}

impl OptimizerConfig {
    pub fn new(kind: OptimizerKind) -> Self {
        Self {
            kind,
            budget: DEFAULT_BUDGET,
            max_iterations: None,
            grad: None,
            spsa_c: None,
            a: None,
            big_a: None,
            b: None,
            eta: None,
            a1: None,
            a2: None,
            eps: None,
            b0: None,
            trust_radius: None,
            rho_i: None,
            rho_end: None,
            patience: None,
            simplex_size: None,
            tol: None,
        }
    }

    fn set_keys(&self) -> Vec<&'static str> {
        let mut keys = Vec::new();
        let mut note = |set: bool, k: &'static str| {
            if set {
                keys.push(k)
            }
        };
        note(self.grad.is_some(), "grad");
        note(self.spsa_c.is_some(), "spsa_c");
        note(self.a.is_some(), "a");
        note(self.big_a.is_some(), "A");
        note(self.b.is_some(), "b");
        note(self.eta.is_some(), "eta");
        note(self.a1.is_some(), "a1");
        note(self.a2.is_some(), "a2");
        note(self.eps.is_some(), "eps");
        note(self.b0.is_some(), "b0");
        note(self.trust_radius.is_some(), "trust_radius");
        note(self.rho_i.is_some(), "rho_i");
        note(self.rho_end.is_some(), "rho_end");
        note(self.patience.is_some(), "patience");
        note(self.simplex_size.is_some(), "simplex_size");
        note(self.tol.is_some(), "tol");
        keys
    }

    /// A copy with every key this kind reads filled in. Defaults:
    /// `grad = adjoint`, `spsa_c = 0.1`, SGD `(a, A, b) = (0.1, 10, 0.602)`,
    /// Adam `(η, a1, a2, ε) = (0.1, 0.9, 0.999, 1e-8)`, `b0 = 1`,
    /// `trust_radius = 0.5`, COBYLA `(ρ_i, ρ_end) = (0.5, 1e-5)` with
    /// `patience = 0` (one sweep), Nelder-Mead `(a, ε) = (0.5, 1e-8)`.
    pub fn resolved(&self) -> Self {
        let mut r = self.clone();
        let keys = self.kind.keys();
        let has = |k: &str| keys.contains(&k);
        let adam = AdamParams::default();
        let cobyla = CobylaParams::default();
        let nm = NelderMeadParams::default();
        let fill = |slot: &mut Option<f64>, key: &str, value: f64| {
            if has(key) && slot.is_none() {
                *slot = Some(value);
            }
        };
        if has("grad") && r.grad.is_none() {
            r.grad = Some(GradMethod::Adjoint);
        }
        fill(&mut r.spsa_c, "spsa_c", GradientSettings::default().spsa_c);
        fill(&mut r.a, "a", 0.1);
        fill(&mut r.big_a, "A", 10.0);
        fill(&mut r.b, "b", 0.602);
        fill(&mut r.eta, "eta", adam.eta);
        fill(&mut r.a1, "a1", adam.a1);
        fill(&mut r.a2, "a2", adam.a2);
        fill(&mut r.eps, "eps", adam.eps);
        fill(&mut r.b0, "b0", 1.0);
        fill(&mut r.trust_radius, "trust_radius", 0.5);
        fill(&mut r.rho_i, "rho_i", cobyla.rho_i);
        fill(&mut r.rho_end, "rho_end", cobyla.rho_end);
        if has("patience") && r.patience.is_none() {
            r.patience = Some(cobyla.patience);
        }
        fill(&mut r.simplex_size, "simplex_size", nm.size);
        fill(&mut r.tol, "tol", nm.tol);
        r
    }

    /// Problems found, each prefixed with `path`.
    pub fn problems(&self, path: &str) -> Vec<String> {
        let mut errs = Vec::new();
        for key in self.set_keys() {
            if !self.kind.keys().contains(&key) {
                errs.push(format!("{path}.{key}: not used by optimizer kind {}", self.kind));
            }
        }
        let r = self.resolved();
        if let Some(g) = r.grad {
            if !matches!(g, GradMethod::ParameterShift | GradMethod::Adjoint) {
                errs.push(format!("{path}.grad: must be \"ps\" or \"adjoint\" for {}", self.kind));
            }
        }
        let mut positive = |v: Option<f64>, key: &str| {
            if let Some(x) = v {
                if !(x > 0.0 && x.is_finite()) {
                    errs.push(format!("{path}.{key}: must be a positive number, got {x}"));
                }
            }
        };
        positive(r.spsa_c, "spsa_c");
        positive(r.a, "a");
        positive(r.eta, "eta");
        positive(r.eps, "eps");
        positive(r.b0, "b0");
        positive(r.trust_radius, "trust_radius");
        positive(r.rho_i, "rho_i");
        positive(r.rho_end, "rho_end");
        positive(r.simplex_size, "simplex_size");
        positive(r.tol, "tol");
        if let Some(x) = r.big_a {
            if !(x >= 0.0 && x.is_finite()) {
                errs.push(format!("{path}.A: must be >= 0, got {x}"));
            }
        }
        if let Some(x) = r.b {
            if !(x >= 0.0 && x.is_finite()) {
                errs.push(format!("{path}.b: must be >= 0, got {x}"));
            }
        }
        for (v, key) in [(r.a1, "a1"), (r.a2, "a2")] {
            if let Some(x) = v {
                if !(0.0..1.0).contains(&x) {
                    errs.push(format!("{path}.{key}: must lie in [0, 1), got {x}"));
                }
            }
        }
        if let (Some(i), Some(e)) = (r.rho_i, r.rho_end) {
            if i <= e {
                errs.push(format!("{path}.rho_i: must exceed rho_end ({i} <= {e})"));
            }
        }
        errs
    }

    pub fn validate(&self) -> Result<()> {
        let errs = self.problems("optimizer");
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(errs))
        }
    }

    pub(crate) fn schedule(&self) -> Schedule {
        let r = self.resolved();
        Schedule {
            a: r.a.unwrap_or(0.1),
            big_a: r.big_a.unwrap_or(10.0),
            b: r.b.unwrap_or(0.602),
        }
    }

    pub(crate) fn adam(&self) -> AdamParams {
        let r = self.resolved();
        let d = AdamParams::default();
        AdamParams {
            eta: r.eta.unwrap_or(d.eta),
            a1: r.a1.unwrap_or(d.a1),
            a2: r.a2.unwrap_or(d.a2),
            eps: r.eps.unwrap_or(d.eps),
        }
    }

    pub(crate) fn cobyla(&self) -> CobylaParams {
        let r = self.resolved();
        let d = CobylaParams::default();
        CobylaParams {
            rho_i: r.rho_i.unwrap_or(d.rho_i),
            rho_end: r.rho_end.unwrap_or(d.rho_end),
            patience: r.patience.unwrap_or(d.patience),
        }
    }

    pub(crate) fn nelder_mead(&self) -> NelderMeadParams {
        let r = self.resolved();
        let d = NelderMeadParams::default();
        NelderMeadParams {
            size: r.simplex_size.unwrap_or(d.size),
            tol: r.tol.unwrap_or(d.tol),
        }
    }

    pub(crate) fn gradient_settings(&self) -> GradientSettings {
        let r = self.resolved();
        let d = GradientSettings::default();
        GradientSettings {
            method: if self.kind.uses_spsa() {
                GradMethod::Spsa
            } else {
                r.grad.unwrap_or(d.method)
            },
            spsa_c: r.spsa_c.unwrap_or(d.spsa_c),
            ..d
        }
    }
}
