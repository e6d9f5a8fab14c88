use std::cmp::Ordering;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::optim::{OptimizerKind, RunRecord, THRESHOLD_RATIO};

/// Location and spread of a sample; `std` uses the `n - 1` divisor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub count: usize,
    pub mean: f64,
    pub std: f64,
    pub stderr: f64,
    pub median: f64,
    pub min: f64,
    pub max: f64,
}

impl Stat {
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std = if values.len() > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        Some(Self {
            count: values.len(),
            mean,
            std,
            stderr: std / n.sqrt(),
            median: median_sorted(&sorted),
            min: sorted[0],
            max: sorted[sorted.len() - 1],
        })
    }
}

fn median_sorted(v: &[f64]) -> f64 {
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Median where missing values count as `+∞`; `None` when the median itself
/// is infinite, i.e. fewer than half the runs have a value.
pub fn median_with_misses(values: &[Option<f64>]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v: Vec<f64> = values.iter().map(|x| x.unwrap_or(f64::INFINITY)).collect();
    v.sort_by(f64::total_cmp);
    let m = median_sorted(&v);
    m.is_finite().then_some(m)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub evaluations: u64,
    pub mean_energy: f64,
    pub std_energy: f64,
    pub runs: usize,
}

/// Per-optimizer statistics over its runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerSummary {
    pub label: String,
    pub kind: OptimizerKind,
    pub runs: usize,
    /// Runs whose ratio reached [`THRESHOLD_RATIO`].
    pub reached: usize,
    /// Median evaluations to the threshold, unreached runs counted as `+∞`.
    pub median_evaluations_to_threshold: Option<f64>,
    pub median_iterations_to_threshold: Option<f64>,
    /// Over the runs that reached the threshold.
    pub evaluations_to_threshold: Option<Stat>,
    pub iterations_to_threshold: Option<Stat>,
    pub final_energy: Option<Stat>,
    pub final_ratio: Option<Stat>,
    pub trace: Vec<TraceRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkSummary {
    pub threshold: f64,
    pub reference_energy: Option<f64>,
    pub reference_exact: bool,
    pub optimizers: Vec<OptimizerSummary>,
    /// Labels best first: fewer median evaluations to the threshold, then
    /// higher median final ratio.
    pub ranking: Vec<String>,
}

/// Energy of the last iterate at or below each evaluation count, over the
/// union of the runs' evaluation counts. Finished runs carry their last
/// value forward.
fn trace(records: &[RunRecord]) -> Vec<TraceRow> {
    let mut grid: Vec<u64> = records
        .iter()
        .flat_map(|r| r.iterates.iter().map(|it| it.evaluations))
        .collect();
    grid.sort_unstable();
    grid.dedup();
    let mut cursors = vec![0usize; records.len()];
    grid.into_iter()
        .map(|e| {
            let mut values = Vec::with_capacity(records.len());
            for (r, c) in records.iter().zip(cursors.iter_mut()) {
                while *c + 1 < r.iterates.len() && r.iterates[*c + 1].evaluations <= e {
                    *c += 1;
                }
                if let Some(it) = r.iterates.get(*c).filter(|it| it.evaluations <= e) {
                    values.push(it.energy);
                }
            }
            let s = Stat::of(&values);
            TraceRow {
                evaluations: e,
                mean_energy: s.map_or(f64::NAN, |s| s.mean),
                std_energy: s.map_or(f64::NAN, |s| s.std),
                runs: values.len(),
            }
        })
        .collect()
}

pub fn summarize_optimizer(label: &str, kind: OptimizerKind, records: &[RunRecord]) -> OptimizerSummary {
    let counts: Vec<_> = records.iter().map(|r| r.footer.threshold).collect();
    let evals: Vec<f64> = counts.iter().flatten().map(|c| c.evaluations as f64).collect();
    let iters: Vec<f64> = counts.iter().flatten().map(|c| c.iterations as f64).collect();
    let finals: Vec<f64> = records.iter().filter_map(RunRecord::final_energy).collect();
    let ratios: Vec<f64> = records.iter().filter_map(RunRecord::final_ratio).collect();
    OptimizerSummary {
        label: label.to_string(),
        kind,
        runs: records.len(),
        reached: evals.len(),
        median_evaluations_to_threshold: median_with_misses(
            &counts.iter().map(|c| c.map(|c| c.evaluations as f64)).collect::<Vec<_>>(),
        ),
        median_iterations_to_threshold: median_with_misses(
            &counts.iter().map(|c| c.map(|c| c.iterations as f64)).collect::<Vec<_>>(),
        ),
        evaluations_to_threshold: Stat::of(&evals),
        iterations_to_threshold: Stat::of(&iters),
        final_energy: Stat::of(&finals),
        final_ratio: Stat::of(&ratios),
        trace: trace(records),
    }
}

/// `Less` when `a` ranks ahead of `b`.
pub fn rank_order(a: &OptimizerSummary, b: &OptimizerSummary) -> Ordering {
    let evals = |s: &OptimizerSummary| s.median_evaluations_to_threshold.unwrap_or(f64::INFINITY);
    let ratio = |s: &OptimizerSummary| s.final_ratio.map_or(f64::NEG_INFINITY, |r| r.median);
    evals(a).total_cmp(&evals(b)).then(ratio(b).total_cmp(&ratio(a)))
}

pub fn summarize(sets: &[(String, OptimizerKind, Vec<RunRecord>)]) -> BenchmarkSummary {
    let optimizers: Vec<OptimizerSummary> = sets
        .iter()
        .map(|(label, kind, records)| summarize_optimizer(label, *kind, records))
        .collect();
    let mut order: Vec<&OptimizerSummary> = optimizers.iter().collect();
    order.sort_by(|a, b| rank_order(a, b));
    let header = sets.iter().flat_map(|s| s.2.first()).next().map(|r| &r.header);
    BenchmarkSummary {
        threshold: THRESHOLD_RATIO,
        reference_energy: header.and_then(|h| h.reference_energy),
        reference_exact: header.is_some_and(|h| h.reference_exact),
        ranking: order.iter().map(|s| s.label.clone()).collect(),
        optimizers,
    }
}

pub(crate) fn cell(v: Option<f64>) -> String {
    v.filter(|x| x.is_finite()).map_or_else(String::new, |x| x.to_string())
}

impl BenchmarkSummary {
    pub fn get(&self, label: &str) -> Option<&OptimizerSummary> {
        self.optimizers.iter().find(|s| s.label == label)
    }

    /// One row per optimizer.
    pub fn write_csv(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(
            w,
            "label,kind,runs,reached,median_evaluations,mean_evaluations,std_evaluations,stderr_evaluations,\
             median_iterations,mean_iterations,std_iterations,stderr_iterations,\
             median_final_energy,mean_final_energy,std_final_energy,\
             median_final_ratio,mean_final_ratio,std_final_ratio,best_final_ratio"
        )?;
        for s in &self.optimizers {
            let e = s.evaluations_to_threshold;
            let i = s.iterations_to_threshold;
            let f = s.final_energy;
            let r = s.final_ratio;
            let cols = [
                cell(s.median_evaluations_to_threshold),
                cell(e.map(|x| x.mean)),
                cell(e.map(|x| x.std)),
                cell(e.map(|x| x.stderr)),
                cell(s.median_iterations_to_threshold),
                cell(i.map(|x| x.mean)),
                cell(i.map(|x| x.std)),
                cell(i.map(|x| x.stderr)),
                cell(f.map(|x| x.median)),
                cell(f.map(|x| x.mean)),
                cell(f.map(|x| x.std)),
                cell(r.map(|x| x.median)),
                cell(r.map(|x| x.mean)),
                cell(r.map(|x| x.std)),
                cell(r.map(|x| x.max)),
            ];
            writeln!(w, "{},{},{},{},{}", s.label, s.kind, s.runs, s.reached, cols.join(","))?;
        }
        Ok(())
    }

    /// Mean and std energy against evaluations, one block per optimizer.
    pub fn write_traces_csv(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "label,evaluations,mean_energy,std_energy,runs")?;
        for s in &self.optimizers {
            for t in &s.trace {
                writeln!(
                    w,
                    "{},{},{},{},{}",
                    s.label,
                    t.evaluations,
                    cell(Some(t.mean_energy)),
                    cell(Some(t.std_energy)),
                    t.runs
                )?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stat_basics() {
        let s = Stat::of(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(s.mean, 2.5);
        assert_eq!(s.median, 2.5);
        assert!((s.std - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert!((s.stderr - s.std / 2.0).abs() < 1e-15);
        assert_eq!((s.min, s.max), (1.0, 4.0));
        assert!(Stat::of(&[]).is_none());
        assert_eq!(Stat::of(&[7.0]).unwrap().std, 0.0);
    }

    #[test]
    fn medians_with_unreached_runs() {
        assert_eq!(median_with_misses(&[Some(3.0), None, Some(1.0)]), Some(3.0));
        assert_eq!(median_with_misses(&[Some(3.0), None, None]), None);
        assert_eq!(median_with_misses(&[Some(3.0), Some(5.0), None, Some(1.0)]), Some(4.0));
        assert_eq!(median_with_misses(&[Some(3.0), None, None, Some(1.0)]), None);
    }

    #[test]
    fn csv_cells() {
        assert_eq!(cell(None), "");
        assert_eq!(cell(Some(f64::NAN)), "");
        assert_eq!(cell(Some(0.1)), "0.1");
    }
}
