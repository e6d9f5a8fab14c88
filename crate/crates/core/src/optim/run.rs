use std::f64::consts::PI;

use super::config::{Accounting, OptimizerConfig, OptimizerKind};
use super::direct::{cobyla_minimize, nelder_mead_minimize, Trajectory};
use super::record::{Iterate, RunFooter, RunHeader, RunRecord};
use super::steps::{adam_step, bfgs_step, sgd_step, AdamState, BfgsState, BfgsStep};
use crate::ansatz::{Ansatz, Objective};
use crate::error::{Error, Result};
use crate::grad::{grad_adjoint, grad_parameter_shift, grad_spsa, GradMethod};
use crate::ising::SkInstance;
use crate::rng::{streams, SuiteRng};

/// Per-run settings that are not optimizer hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    pub accounting: Accounting,
    /// Seeds the SPSA perturbation stream.
    pub seed: u64,
    /// Energy the ratios are taken against, usually the exact `E_g`.
    pub reference_energy: Option<f64>,
    pub reference_exact: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            accounting: Accounting::Paper,
            seed: 0,
            reference_energy: None,
            reference_exact: true,
        }
    }
}

/// Largest step-length cap the parameter-shift BFGS radius may grow to.
const MAX_RADIUS: f64 = PI;

enum Update {
    Sgd,
    Adam(AdamState),
    Bfgs { state: BfgsState, radius: f64 },
}

/// Drives `config` from `theta0` until the evaluation budget, the iteration
/// cap or the optimizer's own stopping rule ends the run.
///
/// Iterate 0 is the starting point, charged one evaluation. Gradient
/// optimizers then charge `2m + 1` (parameter shift) or `3` (SPSA) per
/// iteration under [`Accounting::Paper`]; an iteration is only started when
/// its whole charge fits in the remaining budget.
pub fn run_optimizer(
    ansatz: &Ansatz,
    inst: &SkInstance,
    config: &OptimizerConfig,
    theta0: &[f64],
    opts: &RunOptions,
) -> Result<RunRecord> {
    config.validate()?;
    ansatz.check_params(theta0)?;
    let obj = Objective::new(ansatz, inst)?;
    let header = RunHeader {
        optimizer: config.resolved(),
        accounting: opts.accounting,
        n_params: ansatz.n_params(),
        seed: opts.seed,
        ansatz: None,
        instance: None,
        init_index: None,
        reference_energy: opts.reference_energy,
        reference_exact: opts.reference_exact,
    };
    let (iterates, converged, final_theta) = match config.kind {
        OptimizerKind::Cobyla | OptimizerKind::NelderMead => direct(&obj, config, theta0)?,
        _ => gradient_run(&obj, config, theta0, opts)?,
    };
    let mut record = RunRecord {
        header,
        iterates,
        footer: RunFooter {
            final_theta,
            converged,
            threshold: None,
        },
    };
    if let Some(e) = opts.reference_energy {
        record.rescore(e, opts.reference_exact);
    }
    Ok(record)
}

fn direct(obj: &Objective<'_>, config: &OptimizerConfig, theta0: &[f64]) -> Result<(Vec<Iterate>, bool, Vec<f64>)> {
    let charge = config.kind.paper_charge(obj.n_params());
    let budget = match config.max_iterations {
        Some(it) => config.budget.min(1 + charge * it),
        None => config.budget,
    };
    let cost = |t: &[f64]| obj.energy(t);
    let run: Trajectory = if config.kind == OptimizerKind::Cobyla {
        cobyla_minimize(cost, theta0, &config.cobyla(), budget)?
    } else {
        nelder_mead_minimize(cost, theta0, &config.nelder_mead(), budget)?
    };
    let iterates = run
        .points
        .into_iter()
        .enumerate()
        .map(|(k, p)| Iterate {
            iteration: k as u64,
            evaluations: p.evaluations,
            true_evaluations: p.evaluations,
            energy: p.energy,
            ratio: None,
            fallback: false,
            theta: p.theta,
        })
        .collect();
    Ok((iterates, run.converged, run.final_theta))
}

fn gradient_run(
    obj: &Objective<'_>,
    config: &OptimizerConfig,
    theta0: &[f64],
    opts: &RunOptions,
) -> Result<(Vec<Iterate>, bool, Vec<f64>)> {
    let kind = config.kind;
    let m = obj.n_params();
    let settings = config.gradient_settings();
    let gates = obj.ansatz.gates().len() as u64;
    let true_charge = match settings.method {
        GradMethod::ParameterShift => 2 * gates + 1,
        GradMethod::Adjoint => 2,
        GradMethod::Spsa => 3,
        GradMethod::FiniteDifference => 2 * m as u64 + 1,
    };
    let charge = match opts.accounting {
        Accounting::Paper => kind.paper_charge(m),
        Accounting::True => true_charge,
    };
    let schedule = config.schedule();
    let adam = config.adam();
    let r = config.resolved();
    let mut update = match kind {
        OptimizerKind::PsSgd | OptimizerKind::SpsaSgd => Update::Sgd,
        OptimizerKind::PsAdam | OptimizerKind::SpsaAdam => Update::Adam(AdamState::new(m)),
        _ => Update::Bfgs {
            state: BfgsState::new(m, r.b0.unwrap_or(1.0)),
            radius: r.trust_radius.unwrap_or(0.5),
        },
    };
    let mut rng = SuiteRng::new(opts.seed, streams::SPSA);

    let mut iterates = Vec::new();
    let mut converged = false;
    if config.budget == 0 {
        return Ok((iterates, converged, theta0.to_vec()));
    }
    let mut theta = theta0.to_vec();
    let mut energy = obj.energy(&theta)?;
    let mut charged = 1u64;
    iterates.push(Iterate {
        iteration: 0,
        evaluations: charged,
        true_evaluations: obj.evaluations(),
        energy,
        ratio: None,
        fallback: false,
        theta: theta.clone(),
    });

    let mut k = 0usize;
    loop {
        if config.max_iterations.is_some_and(|cap| k as u64 >= cap) || charged + charge > config.budget {
            break;
        }
        let mut probe = None;
        let g = match settings.method {
            GradMethod::ParameterShift => grad_parameter_shift(obj, &theta, settings.shift_constant)?,
            GradMethod::Adjoint => grad_adjoint(obj, &theta)?.1,
            GradMethod::Spsa => {
                let est = grad_spsa(obj, &theta, settings.spsa_scale(k), &mut rng)?;
                let g = est.gradient.clone();
                probe = Some(est);
                g
            }
            GradMethod::FiniteDifference => {
                return Err(Error::config("finite differences are not an optimizer gradient"))
            }
        };
        let mut fallback = false;
        let next = match &mut update {
            Update::Sgd => sgd_step(&theta, &g, k, &schedule),
            Update::Adam(state) => adam_step(state, &theta, &g, &adam),
            Update::Bfgs { state, radius } => match &probe {
                Some(est) => {
                    let q = est.plus + est.minus - 2.0 * energy;
                    state.update_along(&est.delta, est.scale, q);
                    let d = state.direction(&g);
                    fallback = state.fallback;
                    let ak = schedule.gain(k);
                    theta.iter().zip(d.iter()).map(|(t, di)| t + ak * di).collect()
                }
                None => {
                    let next = bfgs_step(state, &theta, &g, BfgsStep::Radius(*radius));
                    fallback = state.fallback;
                    next
                }
            },
        };
        let moved = next.iter().zip(&theta).any(|(a, b)| a != b);
        let next_energy = obj.energy(&next)?;
        match (&mut update, &probe) {
            (Update::Bfgs { .. }, Some(est)) => {
                // Keep the best of the points evaluated this iteration.
                let sign = if est.plus <= est.minus { 1.0 } else { -1.0 };
                let probe_energy = est.plus.min(est.minus);
                if probe_energy < next_energy.min(energy) {
                    theta = theta.iter().zip(&est.delta).map(|(t, d)| t + sign * est.scale * d).collect();
                    energy = probe_energy;
                } else if next_energy <= energy {
                    theta = next;
                    energy = next_energy;
                }
            }
            (Update::Bfgs { radius, .. }, None) => {
                let len = next.iter().zip(&theta).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
                if next_energy >= energy {
                    *radius *= 0.25;
                } else if len >= 0.99 * *radius {
                    *radius = (2.0 * *radius).min(MAX_RADIUS);
                }
                theta = next;
                energy = next_energy;
            }
            _ => {
                theta = next;
                energy = next_energy;
            }
        }
        charged += charge;
        k += 1;
        iterates.push(Iterate {
            iteration: k as u64,
            evaluations: charged,
            true_evaluations: obj.evaluations(),
            energy,
            ratio: None,
            fallback,
            theta: theta.clone(),
        });
        if !moved {
            converged = true;
            break;
        }
    }
    Ok((iterates, converged, theta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ansatz::{build_dcqc, build_qaoa, Mode};
    use crate::ising::{exact_ground_truth, generate_sk};

    fn init(m: usize, seed: u64) -> Vec<f64> {
        let mut rng = SuiteRng::new(seed, streams::INIT);
        (0..m).map(|_| rng.angle()).collect()
    }

    fn run(kind: OptimizerKind, budget: u64, accounting: Accounting) -> (Ansatz, SkInstance, RunRecord) {
        let inst = generate_sk(6, 3).unwrap();
        let ansatz = build_dcqc(&inst, 1, Mode::Full);
        let mut cfg = OptimizerConfig::new(kind);
        cfg.budget = budget;
        let truth = exact_ground_truth(&inst).unwrap();
        let opts = RunOptions {
            accounting,
            seed: 7,
            reference_energy: Some(truth.energy),
            reference_exact: true,
        };
        let rec = run_optimizer(&ansatz, &inst, &cfg, &init(ansatz.n_params(), 1), &opts).unwrap();
        (ansatz, inst, rec)
    }

    #[test]
    fn charges_per_iteration() {
        let m = 21;
        for kind in OptimizerKind::ALL {
            let (_, _, rec) = run(kind, 400, Accounting::Paper);
            assert_eq!(rec.iterates[0].evaluations, 1);
            assert!(rec.evaluations() <= 400);
            let want = kind.paper_charge(m);
            for w in rec.iterates.windows(2) {
                assert_eq!(w[1].evaluations - w[0].evaluations, want, "{kind}");
                assert_eq!(w[1].iteration, w[0].iteration + 1);
            }
            if !rec.footer.converged {
                assert!(rec.evaluations() + want > 400, "{kind} stopped early");
            }
        }
    }

    #[test]
    fn parameter_shift_budget_rounds_down() {
        let inst = generate_sk(10, 1).unwrap();
        let ansatz = build_dcqc(&inst, 1, Mode::Full);
        let mut cfg = OptimizerConfig::new(OptimizerKind::PsAdam);
        cfg.budget = 1000;
        let rec = run_optimizer(&ansatz, &inst, &cfg, &init(55, 2), &RunOptions::default()).unwrap();
        assert_eq!(rec.iterates.len(), 10);
        assert_eq!(rec.iterates[1].evaluations, 112);
        assert_eq!(rec.evaluations(), 1000);
    }

    #[test]
    fn true_accounting_bills_simulator_work() {
        let (_, _, rec) = run(OptimizerKind::PsSgd, 60, Accounting::True);
        for it in &rec.iterates {
            assert_eq!(it.evaluations, it.true_evaluations);
        }
        assert_eq!(rec.iterates[1].evaluations, 3);

        let inst = generate_sk(5, 2).unwrap();
        let qaoa = build_qaoa(&inst, 1);
        let mut cfg = OptimizerConfig::new(OptimizerKind::PsSgd);
        cfg.grad = Some(GradMethod::ParameterShift);
        cfg.max_iterations = Some(2);
        let rec = run_optimizer(&qaoa, &inst, &cfg, &[0.3, -0.2], &RunOptions::default()).unwrap();
        assert_eq!(rec.iterates[1].evaluations, 6);
        assert_eq!(rec.iterates[1].true_evaluations, 1 + 2 * 15 + 1);
    }

    #[test]
    fn records_replay_exactly() {
        for kind in OptimizerKind::ALL {
            let (ansatz, inst, rec) = run(kind, 300, Accounting::Paper);
            let obj = Objective::new(&ansatz, &inst).unwrap();
            for it in &rec.iterates {
                assert!((obj.energy(&it.theta).unwrap() - it.energy).abs() <= 1e-12, "{kind}");
            }
            let back = RunRecord::from_jsonl(&rec.to_jsonl()).unwrap();
            assert_eq!(back, rec);
        }
    }

    #[test]
    fn iteration_cap() {
        let inst = generate_sk(4, 1).unwrap();
        let ansatz = build_dcqc(&inst, 1, Mode::TwoParam);
        for kind in OptimizerKind::ALL {
            let mut cfg = OptimizerConfig::new(kind);
            cfg.max_iterations = Some(5);
            let rec = run_optimizer(&ansatz, &inst, &cfg, &[0.1, 0.2], &RunOptions::default()).unwrap();
            assert!(rec.iterates.len() <= 6, "{kind}");
        }
    }

    #[test]
    fn spsa_bfgs_never_accepts_a_worse_point() {
        let (_, _, rec) = run(OptimizerKind::SpsaBfgs, 600, Accounting::Paper);
        assert!(rec.iterates.len() > 100);
        for w in rec.iterates.windows(2) {
            assert!(w[1].energy <= w[0].energy);
        }
        assert!(rec.final_energy().unwrap() < rec.iterates[0].energy);
    }
}
