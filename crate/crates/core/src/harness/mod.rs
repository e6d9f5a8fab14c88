//! Experiment protocols behind the command-line tool.
//!
//! Every protocol fans its `(optimizer × init)` cells out to the current
//! rayon pool, collects the results in cell order and persists each
//! [`RunRecord`] before any summary is computed, so all outputs are
//! reproducible byte for byte and every summary can be recomputed from the
//! record files alone.
//!
//! Output layout under the output directory:
//!
//! - `config.json`: the experiment config as parsed
//! - `records/manifest.json` plus `records/<label>/init_<i>.jsonl`
//! - `summary.json`, `summary.csv`, and `traces.csv` for `compare`
//! - `scaling.json`, `scaling.csv` for `scaling`
//! - `landscape.csv`, `trajectory.csv`, `pca.json` for `landscape`

mod config;
mod summary;

use std::fs;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use config::{
    exact_reference_available, ExperimentConfig, InitDistribution, InitSpec, InstanceSpec, LandscapeSpec,
    ScalingSpec, MAX_SIMULATED_QUBITS,
};
pub use summary::{
    median_with_misses, rank_order, summarize, summarize_optimizer, BenchmarkSummary, OptimizerSummary, Stat,
    TraceRow,
};

use crate::ansatz::{Ansatz, AnsatzSpec, Family};
use crate::error::{Error, Result};
use crate::ising::{exact_ground_truth, generate_sk, SkInstance};
use crate::optim::{run_optimizer, OptimizerConfig, OptimizerKind, RunOptions, RunRecord};
use crate::pca::{self, Bounds, PcaModel};

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

fn write_file(path: &Path, body: impl FnOnce(&mut BufWriter<fs::File>) -> std::io::Result<()>) -> Result<()> {
    if let Some(dir) = path.parent() {
        create_dir(dir)?;
    }
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    body(&mut w).and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    write_file(path, |w| writeln!(w, "{text}"))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

/// Writes a generated instance to `out`.
pub fn cmd_gen_instance(n: usize, seed: u64, out: &Path) -> Result<SkInstance> {
    let inst = generate_sk(n, seed)?;
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        create_dir(dir)?;
    }
    inst.write(out)?;
    Ok(inst)
}

/// Energy the ratios are scored against and whether it is exact.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Reference {
    pub energy: f64,
    pub exact: bool,
}

fn exact_reference(inst: &SkInstance) -> Result<Option<Reference>> {
    if !exact_reference_available(inst.n_qubits()) {
        return Ok(None);
    }
    Ok(Some(Reference {
        energy: exact_ground_truth(inst)?.energy,
        exact: true,
    }))
}

/// Rescores runs without an exact reference against the lowest recorded
/// energy; such ratios are labeled `reference_exact = false`.
fn sampled_reference(records: &mut [&mut RunRecord]) -> Option<Reference> {
    let best = records
        .iter()
        .flat_map(|r| r.iterates.iter().map(|it| it.energy))
        .fold(f64::INFINITY, f64::min);
    if !best.is_finite() {
        return None;
    }
    for r in records.iter_mut() {
        r.rescore(best, false);
    }
    Some(Reference {
        energy: best,
        exact: false,
    })
}

/// Record-file label per optimizer: the kind name, with `_2`, `_3`, ...
/// appended to repeated kinds.
pub fn optimizer_labels(optimizers: &[OptimizerConfig]) -> Vec<String> {
    let mut labels = Vec::with_capacity(optimizers.len());
    for (i, o) in optimizers.iter().enumerate() {
        let seen = optimizers[..i].iter().filter(|p| p.kind == o.kind).count();
        labels.push(if seen == 0 {
            o.kind.name().to_string()
        } else {
            format!("{}_{}", o.kind, seen + 1)
        });
    }
    labels
}

/// One optimizer's runs over the shared inits.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSet {
    pub label: String,
    pub kind: OptimizerKind,
    pub records: Vec<RunRecord>,
}

struct Problem<'a> {
    inst: &'a SkInstance,
    spec: AnsatzSpec,
    ansatz: &'a Ansatz,
    reference: Option<Reference>,
}

/// Runs every `(optimizer, init)` cell of `cfg` on one problem. Cells run in
/// parallel and come back in `(optimizer, init)` order.
fn execute(cfg: &ExperimentConfig, problem: &Problem<'_>) -> Result<Vec<RunSet>> {
    let optimizers = cfg.effective_optimizers();
    let labels = optimizer_labels(&optimizers);
    let m = problem.ansatz.n_params();
    let cells: Vec<(usize, usize)> = (0..optimizers.len())
        .flat_map(|o| (0..cfg.inits).map(move |i| (o, i)))
        .collect();
    let records = cells
        .par_iter()
        .map(|&(o, i)| {
            let theta0 = cfg.init.theta0(i, m);
            let opts = RunOptions {
                accounting: cfg.accounting,
                seed: cfg.init.init_seed(i),
                reference_energy: problem.reference.map(|r| r.energy),
                reference_exact: problem.reference.is_some_and(|r| r.exact),
            };
            let mut rec = run_optimizer(problem.ansatz, problem.inst, &optimizers[o], &theta0, &opts)?;
            rec.header.ansatz = Some(problem.spec);
            rec.header.instance = Some(problem.inst.clone());
            rec.header.init_index = Some(i);
            Ok(rec)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut records = records.into_iter();
    Ok(optimizers
        .iter()
        .zip(labels)
        .map(|(o, label)| RunSet {
            label,
            kind: o.kind,
            records: records.by_ref().take(cfg.inits).collect(),
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ManifestEntry {
    label: String,
    kind: OptimizerKind,
    files: Vec<PathBuf>,
}

fn record_path(label: &str, init: usize) -> PathBuf {
    PathBuf::from(label).join(format!("init_{init:02}.jsonl"))
}

/// Writes `records/<label>/init_<i>.jsonl` and `records/manifest.json`.
pub fn persist_run_sets(dir: &Path, sets: &[RunSet]) -> Result<()> {
    let mut manifest = Vec::with_capacity(sets.len());
    for set in sets {
        let mut files = Vec::with_capacity(set.records.len());
        for (i, rec) in set.records.iter().enumerate() {
            let rel = record_path(&set.label, i);
            write_file(&dir.join(&rel), |w| {
                rec.write_jsonl(&mut *w).map_err(|e| std::io::Error::other(e.to_string()))
            })?;
            files.push(rel);
        }
        manifest.push(ManifestEntry {
            label: set.label.clone(),
            kind: set.kind,
            files,
        });
    }
    write_json(&dir.join("manifest.json"), &manifest)
}

/// Reads back what [`persist_run_sets`] wrote.
pub fn load_run_sets(dir: &Path) -> Result<Vec<RunSet>> {
    let manifest: Vec<ManifestEntry> = read_json(&dir.join("manifest.json"))?;
    manifest
        .into_iter()
        .map(|entry| {
            let records = entry
                .files
                .iter()
                .map(|f| read_record(&dir.join(f)))
                .collect::<Result<Vec<_>>>()?;
            Ok(RunSet {
                label: entry.label,
                kind: entry.kind,
                records,
            })
        })
        .collect()
}

pub fn read_record(path: &Path) -> Result<RunRecord> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    RunRecord::read_jsonl(BufReader::new(file)).map_err(|e| match e {
        Error::Record(msg) => Error::Record(format!("{}: {msg}", path.display())),
        other => other,
    })
}

/// Summary of persisted run sets.
pub fn summarize_sets(sets: &[RunSet]) -> BenchmarkSummary {
    let triples: Vec<_> = sets
        .iter()
        .map(|s| (s.label.clone(), s.kind, s.records.clone()))
        .collect();
    summarize(&triples)
}

fn single_problem_runs(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<RunSet>> {
    cfg.validate()?;
    if cfg.optimizers.is_empty() {
        return Err(Error::config("optimizers: must list at least one optimizer"));
    }
    let inst = cfg.instance.load()?;
    if inst.n_qubits() > MAX_SIMULATED_QUBITS {
        return Err(Error::Capacity {
            n: inst.n_qubits(),
            max: MAX_SIMULATED_QUBITS,
        });
    }
    let ansatz = cfg.ansatz.build(&inst)?;
    let problem = Problem {
        inst: &inst,
        spec: cfg.ansatz,
        ansatz: &ansatz,
        reference: exact_reference(&inst)?,
    };
    let mut sets = execute(cfg, &problem)?;
    if problem.reference.is_none() {
        let mut all: Vec<&mut RunRecord> = sets.iter_mut().flat_map(|s| s.records.iter_mut()).collect();
        sampled_reference(&mut all);
    }
    create_dir(out)?;
    write_file(&out.join("config.json"), |w| writeln!(w, "{}", cfg.to_json()))?;
    persist_run_sets(&out.join("records"), &sets)?;
    Ok(sets)
}

fn write_summary(out: &Path, summary: &BenchmarkSummary, traces: bool) -> Result<()> {
    write_json(&out.join("summary.json"), summary)?;
    write_file(&out.join("summary.csv"), |w| summary.write_csv(w))?;
    if traces {
        write_file(&out.join("traces.csv"), |w| summary.write_traces_csv(w))?;
    }
    Ok(())
}

/// One record per `(optimizer, init)`, then `summary.json` and `summary.csv`.
pub fn cmd_run(cfg: &ExperimentConfig, out: &Path) -> Result<BenchmarkSummary> {
    single_problem_runs(cfg, out)?;
    let summary = summarize_sets(&load_run_sets(&out.join("records"))?);
    write_summary(out, &summary, false)?;
    Ok(summary)
}

/// [`cmd_run`] over an optimizer set sharing every init, plus energy traces
/// against evaluations in `traces.csv`.
pub fn cmd_compare(cfg: &ExperimentConfig, out: &Path) -> Result<BenchmarkSummary> {
    let sets = single_problem_runs(cfg, out)?;
    check_shared_inits(&sets)?;
    let summary = summarize_sets(&load_run_sets(&out.join("records"))?);
    write_summary(out, &summary, true)?;
    Ok(summary)
}

/// Every optimizer must have the same parameter count and identical `θ₀`
/// for init `i`.
pub fn check_shared_inits(sets: &[RunSet]) -> Result<()> {
    let Some(first) = sets.first() else {
        return Ok(());
    };
    let mut errs = Vec::new();
    for set in &sets[1..] {
        for (i, (a, b)) in first.records.iter().zip(&set.records).enumerate() {
            if a.header.n_params != b.header.n_params {
                errs.push(format!(
                    "{}: {} parameters, {} has {}",
                    set.label, b.header.n_params, first.label, a.header.n_params
                ));
                break;
            }
            let (ta, tb) = (a.iterates.first(), b.iterates.first());
            if ta.map(|t| &t.theta) != tb.map(|t| &t.theta) {
                errs.push(format!("{}: init {i} differs from {}", set.label, first.label));
            }
        }
    }
    if errs.is_empty() {
        Ok(())
    } else {
        Err(Error::Config(errs))
    }
}

/// One `(n, ansatz)` row of the scaling protocol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub n: usize,
    pub ansatz: String,
    pub n_params: usize,
    pub reference_energy: f64,
    pub reference_exact: bool,
    pub final_ratio: Stat,
    pub final_energy: Stat,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingSummary {
    pub optimizer: String,
    pub rows: Vec<ScalingRow>,
}

impl ScalingSummary {
    pub fn row(&self, n: usize, ansatz: &str) -> Option<&ScalingRow> {
        self.rows.iter().find(|r| r.n == n && r.ansatz == ansatz)
    }

    pub fn write_csv(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(
            w,
            "n,ansatz,n_params,reference_energy,reference_exact,runs,mean_ratio,std_ratio,stderr_ratio,median_ratio,best_ratio,mean_energy,std_energy"
        )?;
        for r in &self.rows {
            let q = &r.final_ratio;
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{},{},{},{},{}",
                r.n,
                r.ansatz,
                r.n_params,
                r.reference_energy,
                r.reference_exact,
                q.count,
                q.mean,
                q.std,
                q.stderr,
                q.median,
                q.max,
                r.final_energy.mean,
                r.final_energy.std
            )?;
        }
        Ok(())
    }
}

pub fn ansatz_label(spec: &AnsatzSpec) -> String {
    let family = match spec.family {
        Family::Dcqc => "dcqc",
        Family::Qaoa => "qaoa",
        Family::Maqaoa => "maqaoa",
    };
    match spec.effective_mode() {
        Ok(crate::ansatz::Mode::TwoParam) if spec.family == Family::Dcqc => format!("{family}_2param_p{}", spec.p),
        _ => format!("{family}_p{}", spec.p),
    }
}

/// For each `n`: one instance, every ansatz in the pair, the first
/// configured optimizer over the shared inits. Rows are scored against the
/// exact ground energy up to the enumeration bound and against the lowest
/// recorded energy at that `n` beyond it.
pub fn cmd_scaling(cfg: &ExperimentConfig, out: &Path) -> Result<ScalingSummary> {
    cfg.validate()?;
    let spec = cfg
        .scaling
        .as_ref()
        .ok_or_else(|| Error::config("scaling: missing section"))?;
    let Some(optimizer) = cfg.effective_optimizers().into_iter().next() else {
        return Err(Error::config("optimizers: scaling needs one optimizer"));
    };
    let mut single = cfg.clone();
    single.optimizers = vec![optimizer.clone()];
    single.budget = None;
    create_dir(out)?;
    write_file(&out.join("config.json"), |w| writeln!(w, "{}", cfg.to_json()))?;

    let mut rows = Vec::new();
    for &n in &spec.n {
        if n > MAX_SIMULATED_QUBITS {
            return Err(Error::Capacity {
                n,
                max: MAX_SIMULATED_QUBITS,
            });
        }
        let inst = generate_sk(n, spec.instance_seed)?;
        let reference = exact_reference(&inst)?;
        let mut per_ansatz = Vec::new();
        for a in &spec.ansatze {
            let ansatz = a.build(&inst)?;
            let problem = Problem {
                inst: &inst,
                spec: *a,
                ansatz: &ansatz,
                reference,
            };
            let set = execute(&single, &problem)?.remove(0);
            per_ansatz.push((a, ansatz.n_params(), set));
        }
        let reference = match reference {
            Some(r) => r,
            None => {
                let mut all: Vec<&mut RunRecord> = per_ansatz.iter_mut().flat_map(|p| p.2.records.iter_mut()).collect();
                sampled_reference(&mut all).ok_or_else(|| Error::InsufficientData(format!("no energies at n = {n}")))?
            }
        };
        for (a, m, set) in per_ansatz {
            let label = ansatz_label(a);
            let dir = out.join("records").join(format!("n{n:02}")).join(&label);
            persist_run_sets(
                &dir,
                &[RunSet {
                    label: optimizer.kind.name().to_string(),
                    ..set.clone()
                }],
            )?;
            let ratios: Vec<f64> = set.records.iter().filter_map(RunRecord::final_ratio).collect();
            let energies: Vec<f64> = set.records.iter().filter_map(RunRecord::final_energy).collect();
            let (Some(final_ratio), Some(final_energy)) = (Stat::of(&ratios), Stat::of(&energies)) else {
                return Err(Error::InsufficientData(format!("no finished runs at n = {n}, ansatz {label}")));
            };
            rows.push(ScalingRow {
                n,
                ansatz: label,
                n_params: m,
                reference_energy: reference.energy,
                reference_exact: reference.exact,
                final_ratio,
                final_energy,
            });
        }
    }
    let summary = ScalingSummary {
        optimizer: optimizer.kind.name().to_string(),
        rows,
    };
    write_json(&out.join("scaling.json"), &summary)?;
    write_file(&out.join("scaling.csv"), |w| summary.write_csv(w))?;
    Ok(summary)
}

/// Explained-variance report written next to the landscape CSVs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LandscapeReport {
    pub records: Vec<PathBuf>,
    pub pooled: bool,
    pub n_samples: usize,
    pub explained_variance_top2: f64,
    /// Leading ratios, at most ten.
    pub explained_variance_ratio: Vec<f64>,
    pub eigenvalues: Vec<f64>,
    pub bounds: Bounds,
    pub resolution: usize,
}

fn problem_of(record: &RunRecord, path: &Path) -> Result<(SkInstance, Ansatz)> {
    let (Some(spec), Some(inst)) = (record.header.ansatz, record.header.instance.clone()) else {
        return Err(Error::Record(format!(
            "{}: header lacks the ansatz or instance needed to rebuild the cost",
            path.display()
        )));
    };
    let ansatz = spec.build(&inst)?;
    Ok((inst, ansatz))
}

fn landscape_one(
    model: &PcaModel,
    records: &[(PathBuf, RunRecord)],
    spec: LandscapeSpec,
    out: &Path,
) -> Result<LandscapeReport> {
    let mut all_points = Vec::new();
    let mut projected = Vec::new();
    for (_, rec) in records {
        let pts = pca::project_trajectory(model, rec)?;
        all_points.extend(pts.iter().copied());
        projected.push(pts);
    }
    let bounds = pca::default_bounds(&all_points)?;
    let (path0, rec0) = &records[0];
    let (inst, ansatz) = problem_of(rec0, path0)?;
    let grid = pca::landscape_grid(model, &ansatz, &inst, bounds, spec.resolution)?;
    create_dir(out)?;
    write_file(&out.join("landscape.csv"), |w| grid.write_csv(w))?;
    if projected.len() == 1 {
        write_file(&out.join("trajectory.csv"), |w| pca::write_trajectory_csv(&projected[0], w))?;
    } else {
        for (k, pts) in projected.iter().enumerate() {
            write_file(&out.join(format!("trajectory_{k:02}.csv")), |w| pca::write_trajectory_csv(pts, w))?;
        }
    }
    let report = LandscapeReport {
        records: records.iter().map(|(p, _)| p.clone()).collect(),
        pooled: records.len() > 1,
        n_samples: model.n_samples,
        explained_variance_top2: pca::explained_variance_top2(model),
        explained_variance_ratio: model.explained_variance_ratio.iter().take(10).copied().collect(),
        eigenvalues: model.eigenvalues.iter().take(10).copied().collect(),
        bounds,
        resolution: spec.resolution,
    };
    write_json(&out.join("pca.json"), &report)?;
    Ok(report)
}

/// PCA of each record's trajectory (or one pooled PCA), the energy grid on
/// the first two components and the projected trajectory. With several
/// unpooled records each gets its own `out/<index>_<file stem>/`.
pub fn cmd_landscape(paths: &[PathBuf], spec: LandscapeSpec, out: &Path) -> Result<Vec<LandscapeReport>> {
    if paths.is_empty() {
        return Err(Error::config("landscape: no record given"));
    }
    if spec.resolution < 2 {
        return Err(Error::config(format!(
            "landscape.resolution: must be at least 2, got {}",
            spec.resolution
        )));
    }
    let records = paths
        .iter()
        .map(|p| Ok((p.clone(), read_record(p)?)))
        .collect::<Result<Vec<_>>>()?;
    for (p, r) in &records {
        if r.iterates.len() < 2 {
            return Err(Error::InsufficientData(format!(
                "{}: trajectory has {} iterate(s), needs at least 2",
                p.display(),
                r.iterates.len()
            )));
        }
    }
    if spec.pooled {
        let model = pca::fit_pooled(&records.iter().map(|(_, r)| r.clone()).collect::<Vec<_>>())?;
        return Ok(vec![landscape_one(&model, &records, spec, out)?]);
    }
    let many = records.len() > 1;
    records
        .iter()
        .enumerate()
        .map(|(k, (p, r))| {
            let model = pca::fit_trajectory(r)?;
            let dir = if many {
                let stem = p.file_stem().map_or_else(|| "record".into(), |s| s.to_string_lossy().into_owned());
                out.join(format!("{k:02}_{stem}"))
            } else {
                out.to_path_buf()
            };
            landscape_one(&model, std::slice::from_ref(&(p.clone(), r.clone())), spec, &dir)
        })
        .collect()
}
