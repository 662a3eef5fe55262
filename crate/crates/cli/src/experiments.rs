//! Experiment drivers: turn a resolved config into CSV rows.

use ontolab_core::engine::{qm_sequential_probs, Engine, Estimate, Executor, SamplingLaw, Sweep};
use ontolab_core::model::{EpistemicState, ModelSpec};
use ontolab_core::projective::{Context, PureState, Unitary};
use ontolab_core::{Complex64, Result};

use crate::config::{ChainStep, Experiment, ExperimentConfig, Law};
use crate::output::CsvRow;

pub fn run<E: Executor>(config: &ExperimentConfig, engine: &Engine<E>) -> Result<Vec<CsvRow>> {
    match config.experiment {
        Experiment::BornSweep => born_sweep(config, engine),
        Experiment::DeltaOpt => delta_opt(config, engine),
        Experiment::Contextuality => contextuality(config, engine),
        Experiment::Repeatability => repeatability(config, engine),
        Experiment::Sequential => sequential(config, engine),
        Experiment::MarbleCheck => marble_check(config, engine),
    }
}

fn row(
    config: &ExperimentConfig,
    model: String,
    delta: Option<f64>,
    theta: Option<f64>,
    outcome: String,
    qm: Option<f64>,
    om: &Estimate,
) -> CsvRow {
    CsvRow {
        experiment: config.experiment.name(),
        model,
        delta,
        theta,
        outcome,
        qm_prob: qm,
        om_prob: om.mean,
        std_err: om.std_error,
        n_samples: om.n_samples,
        seed: config.seed,
    }
}

fn sweep_rows(config: &ExperimentConfig, sweep: &Sweep, out: &mut Vec<CsvRow>) {
    for r in &sweep.rows {
        out.push(row(
            config,
            r.model.identifier(),
            Some(r.delta),
            Some(r.theta),
            r.outcome.to_string(),
            Some(r.qm_prob),
            &r.om,
        ));
    }
}

fn born_sweep<E: Executor>(config: &ExperimentConfig, engine: &Engine<E>) -> Result<Vec<CsvRow>> {
    let sweep = engine.deviation_sweep(&config.model, &config.theta_grid.points(), config.n_samples)?;
    let mut out = Vec::with_capacity(sweep.rows.len());
    sweep_rows(config, &sweep, &mut out);
    Ok(out)
}

/// Sweep rows for every `Δ`, then one `score` row per `Δ` (om_prob = max
/// deviation, std_err = largest standard error) and a final `best` row.
fn delta_opt<E: Executor>(config: &ExperimentConfig, engine: &Engine<E>) -> Result<Vec<CsvRow>> {
    let opt =
        engine.optimize_delta(&config.model, &config.delta_grid, &config.theta_grid.points(), config.n_samples)?;
    let mut out = Vec::new();
    for sweep in &opt.sweeps {
        sweep_rows(config, sweep, &mut out);
    }
    let model = config.model.identifier();
    let mut best = None;
    for s in &opt.table {
        let r = CsvRow {
            experiment: config.experiment.name(),
            model: model.clone(),
            delta: Some(s.delta),
            theta: None,
            outcome: "score".into(),
            qm_prob: None,
            om_prob: s.score,
            std_err: s.max_std_error,
            n_samples: config.n_samples,
            seed: config.seed,
        };
        if s.delta == opt.best_delta && best.is_none() {
            best = Some(CsvRow { outcome: "best".into(), ..r.clone() });
        }
        out.push(r);
    }
    out.extend(best);
    Ok(out)
}

fn contextuality<E: Executor>(config: &ExperimentConfig, engine: &Engine<E>) -> Result<Vec<CsvRow>> {
    let m = &config.model;
    let base = Context::computational(m.system_dim(), m.ontic_dim())?;
    let (law, label, delta) = match config.law {
        Law::Haar => (SamplingLaw::Haar, format!("haar/d{}/D{}", m.system_dim(), m.ontic_dim()), None),
        Law::State => {
            let state = EpistemicState::new(*m, *base.element(0)?)?;
            (SamplingLaw::State(state), m.identifier(), Some(m.delta()))
        }
    };
    let u = engine.unfaithful_fraction(&base, &law, config.n_samples, config.n_contexts)?;
    Ok(vec![
        row(config, label.clone(), delta, None, "sampled".into(), None, &u.sampled),
        row(config, label, delta, None, "analytic".into(), None, &u.analytic),
    ])
}

fn repeatability<E: Executor>(config: &ExperimentConfig, engine: &Engine<E>) -> Result<Vec<CsvRow>> {
    let m = &config.model;
    let ctx = Context::computational(m.system_dim(), m.ontic_dim())?;
    let mut out = Vec::new();
    for theta in config.theta_grid.points() {
        let psi = PureState::in_plane(m.system_dim(), theta)?;
        let e = engine.repeatability_run(m, &psi, &ctx, config.update, config.n_samples)?;
        out.push(row(config, m.identifier(), Some(m.delta()), Some(theta), "repeat".into(), Some(1.0), &e));
    }
    Ok(out)
}

/// Computational context rotated by `angle` in the `|0⟩,|1⟩` plane.
fn rotated_context(m: &ModelSpec, angle: f64) -> Result<Context> {
    let d = m.system_dim();
    let (s, c) = angle.sin_cos();
    let rows: Vec<Vec<Complex64>> = (0..d)
        .map(|i| {
            (0..d)
                .map(|j| {
                    let x = match (i, j) {
                        (0, 0) | (1, 1) => c,
                        (0, 1) => -s,
                        (1, 0) => s,
                        _ if i == j => 1.0,
                        _ => 0.0,
                    };
                    Complex64::new(x, 0.0)
                })
                .collect()
        })
        .collect();
    let refs: Vec<&[Complex64]> = rows.iter().map(Vec::as_slice).collect();
    Context::from_unitary(&Unitary::from_rows(&refs)?, m.ontic_dim())
}

/// Rows `s<k>:<i>` (outcome `i` at step `k`), `seq:<o1>-<o2>-...` (joint
/// sequences) and `agree<k>` (step `k` repeats step 1), each against the
/// projective-update prediction.
fn sequential<E: Executor>(config: &ExperimentConfig, engine: &Engine<E>) -> Result<Vec<CsvRow>> {
    let m = &config.model;
    let a = Context::computational(m.system_dim(), m.ontic_dim())?;
    let b = rotated_context(m, config.chain_angle)?;
    let chain: Vec<Context> =
        config.chain.iter().map(|s| if *s == ChainStep::A { a.clone() } else { b.clone() }).collect();
    let psi = PureState::in_plane(m.system_dim(), config.theta)?;
    let report = engine.sequential_run(m, &psi, &chain, config.update, config.n_samples, false)?;
    let qm_joint = qm_sequential_probs(&psi, &chain)?;

    let d = report.system_dim;
    let mut qm_marginal = vec![vec![0.0; d]; report.steps];
    let mut qm_agree = vec![0.0; report.steps];
    for (index, p) in qm_joint.iter().enumerate() {
        let seq = report.decode(index);
        for (k, &o) in seq.iter().enumerate() {
            qm_marginal[k][o] += p;
            if o == seq[0] {
                qm_agree[k] += p;
            }
        }
    }

    let (id, delta, theta) = (m.identifier(), Some(m.delta()), Some(config.theta));
    let mut out = Vec::new();
    for (k, step) in report.marginals.iter().enumerate() {
        for (i, e) in step.iter().enumerate() {
            out.push(row(config, id.clone(), delta, theta, format!("s{}:{i}", k + 1), Some(qm_marginal[k][i]), e));
        }
    }
    for (index, &count) in report.joint_counts.iter().enumerate() {
        let seq: Vec<String> = report.decode(index).iter().map(ToString::to_string).collect();
        let e = Estimate::from_count(count, report.n, engine.seed(), engine.workers());
        out.push(row(config, id.clone(), delta, theta, format!("seq:{}", seq.join("-")), Some(qm_joint[index]), &e));
    }
    for (k, (qm, e)) in qm_agree.iter().zip(&report.agreement).enumerate().skip(1) {
        out.push(row(config, id.clone(), delta, theta, format!("agree{}", k + 1), Some(*qm), e));
    }
    Ok(out)
}

/// Per angle: the green frequency of a marble observed at polar angle
/// `2α`, and the ks-qubit outcome-0 frequency for `cos α|0⟩ + sin α|1⟩`.
fn marble_check<E: Executor>(config: &ExperimentConfig, engine: &Engine<E>) -> Result<Vec<CsvRow>> {
    let marble = ModelSpec::marble_world();
    let qubit = ModelSpec::ks_qubit();
    let ctx = Context::computational(2, 2)?;
    let mut out = Vec::new();
    for (task, &alpha) in config.alphas.iter().enumerate() {
        let qm = alpha.cos().powi(2);
        let green = engine.marble_green_probability(alpha, config.n_samples, task as u32)?;
        out.push(row(config, marble.identifier(), Some(marble.delta()), Some(alpha), "green".into(), Some(qm), &green));
        let psi = PureState::in_plane(2, alpha)?;
        let est = engine.estimate_outcome_probs_task(&qubit, &psi, &ctx, config.n_samples, task as u32)?;
        out.push(row(config, qubit.identifier(), Some(qubit.delta()), Some(alpha), "0".into(), Some(qm), &est[0]));
    }
    Ok(out)
}
