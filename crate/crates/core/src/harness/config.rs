use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::ansatz::{AnsatzSpec, Family, Mode};
use crate::error::{Error, Result};
use crate::ising::{generate_sk, SkInstance, MAX_ENUMERATION_QUBITS};
use crate::optim::{Accounting, OptimizerConfig};
use crate::rng::{streams, SuiteRng, GENERATOR_NAME};

/// Largest `n` the harness simulates at all.
pub const MAX_SIMULATED_QUBITS: usize = 30;

/// Instance source: a file, or `(n, seed)` for [`generate_sk`].
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub file: Option<PathBuf>,
}

impl InstanceSpec {
    pub fn generated(n: usize, seed: u64) -> Self {
        Self {
            n: Some(n),
            seed: Some(seed),
            file: None,
        }
    }

    fn problems(&self, path: &str) -> Vec<String> {
        match (&self.file, self.n, self.seed) {
            (Some(f), None, None) if !f.is_file() => {
                vec![format!("{path}.file: {} does not exist", f.display())]
            }
            (Some(_), None, None) => Vec::new(),
            (None, Some(n), Some(_)) if n < 2 => vec![format!("{path}.n: must be at least 2, got {n}")],
            (None, Some(_), Some(_)) => Vec::new(),
            _ => vec![format!("{path}: give either \"file\" or both \"n\" and \"seed\"")],
        }
    }

    pub fn load(&self) -> Result<SkInstance> {
        match (&self.file, self.n, self.seed) {
            (Some(f), _, _) => SkInstance::read(f),
            (None, Some(n), Some(seed)) => generate_sk(n, seed),
            _ => Err(Error::config("instance: give either \"file\" or both \"n\" and \"seed\"")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitDistribution {
    /// i.i.d. uniform on `(-π, π]`.
    #[default]
    Uniform,
    /// i.i.d. uniform on `(-scale, scale]`.
    Small,
}

/// Initial parameters: init `i` draws from `SuiteRng::new(seed + i, INIT)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitSpec {
    #[serde(default)]
    pub distribution: InitDistribution,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale: Option<f64>,
    #[serde(default)]
    pub seed: u64,
}

impl Default for InitSpec {
    fn default() -> Self {
        Self {
            distribution: InitDistribution::Uniform,
            scale: None,
            seed: 0,
        }
    }
}

impl InitSpec {
    pub fn init_seed(&self, index: usize) -> u64 {
        self.seed.wrapping_add(index as u64)
    }

    pub fn theta0(&self, index: usize, m: usize) -> Vec<f64> {
        let mut rng = SuiteRng::new(self.init_seed(index), streams::INIT);
        let shrink = match self.distribution {
            InitDistribution::Uniform => 1.0,
            InitDistribution::Small => self.scale.unwrap_or(0.1) / std::f64::consts::PI,
        };
        (0..m).map(|_| shrink * rng.angle()).collect()
    }

    fn problems(&self, path: &str) -> Vec<String> {
        match (self.distribution, self.scale) {
            (InitDistribution::Uniform, Some(_)) => {
                vec![format!("{path}.scale: only used by the \"small\" distribution")]
            }
            (InitDistribution::Small, Some(s)) if !(s > 0.0 && s.is_finite()) => {
                vec![format!("{path}.scale: must be a positive number, got {s}")]
            }
            _ => Vec::new(),
        }
    }
}

/// Qubit counts and ansatz pair for the scaling protocol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalingSpec {
    pub n: Vec<usize>,
    #[serde(default = "default_scaling_ansatze")]
    pub ansatze: Vec<AnsatzSpec>,
    /// Seed of the instance generated at every `n`.
    #[serde(default = "default_instance_seed")]
    pub instance_seed: u64,
}

fn default_scaling_ansatze() -> Vec<AnsatzSpec> {
    vec![
        AnsatzSpec::new(Family::Dcqc, Mode::Full, 1),
        AnsatzSpec {
            family: Family::Maqaoa,
            mode: None,
            p: 1,
        },
    ]
}

fn default_instance_seed() -> u64 {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LandscapeSpec {
    #[serde(default = "default_resolution")]
    pub resolution: usize,
    /// Fit one PCA over all given records instead of one per record.
    #[serde(default)]
    pub pooled: bool,
}

fn default_resolution() -> usize {
    crate::pca::DEFAULT_RESOLUTION
}

impl Default for LandscapeSpec {
    fn default() -> Self {
        Self {
            resolution: default_resolution(),
            pooled: false,
        }
    }
}

fn default_ansatz() -> AnsatzSpec {
    AnsatzSpec::new(Family::Dcqc, Mode::Full, 1)
}

fn default_inits() -> usize {
    10
}

fn default_rng() -> String {
    GENERATOR_NAME.to_string()
}

/// One experiment. `budget`, when set, replaces every optimizer's own budget.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub instance: InstanceSpec,
    #[serde(default = "default_ansatz")]
    pub ansatz: AnsatzSpec,
    #[serde(default)]
    pub optimizers: Vec<OptimizerConfig>,
    #[serde(default = "default_inits")]
    pub inits: usize,
    #[serde(default)]
    pub init: InitSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget: Option<u64>,
    #[serde(default)]
    pub accounting: Accounting,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scaling: Option<ScalingSpec>,
    #[serde(default)]
    pub landscape: LandscapeSpec,
    #[serde(default = "default_rng")]
    pub rng: String,
}

impl ExperimentConfig {
    /// Parses `text`; errors carry the JSON path plus line and column.
    /// Relative instance paths resolve against `base`.
    pub fn from_json(text: &str, base: Option<&Path>) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let mut cfg: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            if path == "." {
                Error::config(format!("config: {inner}"))
            } else {
                Error::config(format!("{path}: {inner}"))
            }
        })?;
        if let (Some(base), Some(file)) = (base, cfg.instance.file.as_mut()) {
            if file.is_relative() {
                *file = base.join(&*file);
            }
        }
        Ok(cfg)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text, path.parent())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Optimizer list with the experiment budget applied.
    pub fn effective_optimizers(&self) -> Vec<OptimizerConfig> {
        self.optimizers
            .iter()
            .map(|o| {
                let mut o = o.clone();
                if let Some(b) = self.budget {
                    o.budget = b;
                }
                o
            })
            .collect()
    }

    /// Every problem found, each prefixed with its path.
    pub fn problems(&self) -> Vec<String> {
        let mut errs = Vec::new();
        if self.rng != GENERATOR_NAME {
            errs.push(format!(
                "rng: unsupported generator \"{}\", only \"{GENERATOR_NAME}\" is available",
                self.rng
            ));
        }
        if self.inits == 0 {
            errs.push("inits: must be at least 1".into());
        }
        if self.ansatz.p == 0 {
            errs.push("ansatz.p: must be at least 1".into());
        }
        if let Err(Error::Config(v)) = self.ansatz.effective_mode() {
            errs.extend(v);
        }
        errs.extend(self.init.problems("init"));
        for (i, o) in self.optimizers.iter().enumerate() {
            errs.extend(o.problems(&format!("optimizers[{i}]")));
        }
        if self.landscape.resolution < 2 {
            errs.push(format!(
                "landscape.resolution: must be at least 2, got {}",
                self.landscape.resolution
            ));
        }
        match &self.scaling {
            Some(s) => {
                if s.n.is_empty() {
                    errs.push("scaling.n: must list at least one qubit count".into());
                }
                for (i, &n) in s.n.iter().enumerate() {
                    if n < 2 {
                        errs.push(format!("scaling.n[{i}]: must be at least 2, got {n}"));
                    } else if n > MAX_SIMULATED_QUBITS {
                        errs.push(format!(
                            "scaling.n[{i}]: {n} exceeds the simulation capacity of {MAX_SIMULATED_QUBITS} qubits"
                        ));
                    }
                }
                if s.ansatze.is_empty() {
                    errs.push("scaling.ansatze: must list at least one ansatz".into());
                }
                for (i, a) in s.ansatze.iter().enumerate() {
                    if a.p == 0 {
                        errs.push(format!("scaling.ansatze[{i}].p: must be at least 1"));
                    }
                    if let Err(Error::Config(v)) = a.effective_mode() {
                        errs.extend(v.into_iter().map(|m| format!("scaling.ansatze[{i}]: {m}")));
                    }
                }
            }
            None => errs.extend(self.instance.problems("instance")),
        }
        errs
    }

    pub fn validate(&self) -> Result<()> {
        let errs = self.problems();
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(errs))
        }
    }
}

/// Whether energies at `n` qubits can be scored against the exact ground state.
pub fn exact_reference_available(n: usize) -> bool {
    n <= MAX_ENUMERATION_QUBITS
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optim::OptimizerKind;

    #[test]
    fn minimal_config_takes_defaults() {
        let cfg = ExperimentConfig::from_json(
            r#"{"instance":{"n":10,"seed":1},"optimizers":[{"kind":"spsa_bfgs"}]}"#,
            None,
        )
        .unwrap();
        assert_eq!(cfg.inits, 10);
        assert_eq!(cfg.ansatz, AnsatzSpec::new(Family::Dcqc, Mode::Full, 1));
        assert_eq!(cfg.accounting, Accounting::Paper);
        assert_eq!(cfg.rng, "chacha8");
        assert_eq!(cfg.effective_optimizers()[0].budget, 1000);
        cfg.validate().unwrap();
        let back = ExperimentConfig::from_json(&cfg.to_json(), None).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn parse_errors_name_the_path() {
        let err = ExperimentConfig::from_json(
            "{\n  \"instance\": {\"n\": 10, \"seed\": 1},\n  \"optimizers\": [{\"kind\": \"spsa_bfgs\"}, {\"kind\": \"adamw\"}]\n}",
            None,
        )
        .unwrap_err()
        .to_string();
        assert!(err.contains("optimizers[1].kind"), "{err}");
        assert!(err.contains("line 3"), "{err}");
        let err = ExperimentConfig::from_json(r#"{"instance":{"n":10,"seed":1},"extra":1}"#, None)
            .unwrap_err()
            .to_string();
        assert!(err.contains("extra"), "{err}");
    }

    #[test]
    fn validation_lists_every_problem() {
        let mut cfg = ExperimentConfig::from_json(r#"{"instance":{"n":10}}"#, None).unwrap();
        cfg.inits = 0;
        cfg.rng = "mt19937".into();
        let mut o = OptimizerConfig::new(OptimizerKind::Cobyla);
        o.eta = Some(0.1);
        cfg.optimizers.push(o);
        let errs = cfg.problems();
        assert_eq!(errs.len(), 4, "{errs:?}");
        assert!(errs.iter().any(|e| e.starts_with("optimizers[0].eta")));
        assert!(errs.iter().any(|e| e.starts_with("instance:")));
    }

    #[test]
    fn missing_instance_file() {
        let cfg = ExperimentConfig::from_json(r#"{"instance":{"file":"nope.json"}}"#, Some(Path::new("/nonexistent")))
            .unwrap();
        let errs = cfg.problems();
        assert!(errs[0].starts_with("instance.file: /nonexistent/nope.json"), "{errs:?}");
    }

    #[test]
    fn init_streams() {
        let init = InitSpec::default();
        let a = init.theta0(3, 5);
        assert_eq!(a, init.theta0(3, 5));
        assert_ne!(a, init.theta0(4, 5));
        assert_eq!(&init.theta0(3, 8)[..5], &a[..]);
        assert!(a.iter().all(|x| x.abs() <= std::f64::consts::PI));
        let small = InitSpec {
            distribution: InitDistribution::Small,
            scale: Some(0.01),
            seed: 0,
        };
        assert!(small.theta0(0, 20).iter().all(|x| x.abs() <= 0.01));
    }

    #[test]
    fn scaling_capacity() {
        let cfg = ExperimentConfig::from_json(r#"{"scaling":{"n":[10,40]},"optimizers":[{"kind":"spsa_bfgs"}]}"#, None)
            .unwrap();
        let errs = cfg.problems();
        assert_eq!(errs.len(), 1);
        assert!(errs[0].contains("capacity of 30"), "{errs:?}");
    }
}
