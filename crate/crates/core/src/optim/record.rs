use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::config::{Accounting, OptimizerConfig};
use crate::ansatz::AnsatzSpec;
use crate::error::{Error, Result};
use crate::ising::SkInstance;

/// Energy ratio `E / E_g` counted as reaching the ground state region.
pub const THRESHOLD_RATIO: f64 = 0.9;

/// Run metadata, the first line of a record file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunHeader {
    /// Fully resolved optimizer settings.
    pub optimizer: OptimizerConfig,
    pub accounting: Accounting,
    pub n_params: usize,
    /// Seed of the run's SPSA stream.
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ansatz: Option<AnsatzSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub instance: Option<SkInstance>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub init_index: Option<usize>,
    /// `E_g` the ratios are taken against.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_energy: Option<f64>,
    /// Whether `reference_energy` is the exact ground energy.
    #[serde(default)]
    pub reference_exact: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Iterate {
    pub iteration: u64,
    /// Cumulative evaluations charged under the run's accounting mode.
    pub evaluations: u64,
    /// Cumulative evaluations the simulator performed.
    pub true_evaluations: u64,
    pub energy: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ratio: Option<f64>,
    /// BFGS fell back to steepest descent on this step.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub fallback: bool,
    pub theta: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThresholdCount {
    pub iterations: u64,
    pub evaluations: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunFooter {
    pub final_theta: Vec<f64>,
    pub converged: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<ThresholdCount>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub header: RunHeader,
    pub iterates: Vec<Iterate>,
    pub footer: RunFooter,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum Line {
    Header(RunHeader),
    Iterate(Iterate),
    Footer(RunFooter),
}

impl RunRecord {
    pub fn final_energy(&self) -> Option<f64> {
        self.iterates.last().map(|it| it.energy)
    }

    pub fn final_ratio(&self) -> Option<f64> {
        self.iterates.last().and_then(|it| it.ratio)
    }

    pub fn evaluations(&self) -> u64 {
        self.iterates.last().map_or(0, |it| it.evaluations)
    }

    /// First iterate whose ratio reaches `level`.
    pub fn counts_to(&self, level: f64) -> Option<ThresholdCount> {
        self.iterates
            .iter()
            .find(|it| it.ratio.is_some_and(|r| r >= level))
            .map(|it| ThresholdCount {
                iterations: it.iteration,
                evaluations: it.evaluations,
            })
    }

    pub fn reached_threshold(&self) -> bool {
        self.footer.threshold.is_some()
    }

    /// Recomputes ratios and the threshold count against `reference`.
    pub fn rescore(&mut self, reference: f64, exact: bool) {
        self.header.reference_energy = Some(reference);
        self.header.reference_exact = exact;
        for it in &mut self.iterates {
            it.ratio = (reference != 0.0).then(|| it.energy / reference);
        }
        self.footer.threshold = self.counts_to(THRESHOLD_RATIO);
    }

    /// Header line, one line per iterate, footer line.
    pub fn write_jsonl(&self, mut w: impl Write) -> Result<()> {
        let mut put = |line: &Line| -> Result<()> {
            serde_json::to_writer(&mut w, line)?;
            w.write_all(b"\n").map_err(|e| Error::io("<record>", e))
        };
        put(&Line::Header(self.header.clone()))?;
        for it in &self.iterates {
            put(&Line::Iterate(it.clone()))?;
        }
        put(&Line::Footer(self.footer.clone()))
    }

    pub fn to_jsonl(&self) -> String {
        let mut buf = Vec::new();
        self.write_jsonl(&mut buf).expect("writing to memory cannot fail");
        String::from_utf8(buf).expect("serde_json emits UTF-8")
    }

    pub fn read_jsonl(r: impl BufRead) -> Result<Self> {
        let mut header = None;
        let mut iterates = Vec::new();
        let mut footer = None;
        for (k, line) in r.lines().enumerate() {
            let line = line.map_err(|e| Error::io("<record>", e))?;
            if line.trim().is_empty() {
                continue;
            }
            let parsed: Line = serde_json::from_str(&line)
                .map_err(|e| Error::Record(format!("line {}: {e}", k + 1)))?;
            match parsed {
                Line::Header(h) if header.is_none() && iterates.is_empty() => header = Some(h),
                Line::Iterate(it) if header.is_some() && footer.is_none() => iterates.push(it),
                Line::Footer(f) if header.is_some() && footer.is_none() => footer = Some(f),
                _ => {
                    return Err(Error::Record(format!(
                        "line {}: out-of-order entry",
                        k + 1
                    )))
                }
            }
        }
        match (header, footer) {
            (Some(header), Some(footer)) => Ok(Self {
                header,
                iterates,
                footer,
            }),
            _ => Err(Error::Record("lacks a header or footer line".into())),
        }
    }

    pub fn from_jsonl(text: &str) -> Result<Self> {
        Self::read_jsonl(text.as_bytes())
    }
}
