//! Seeded Monte Carlo estimators.
//!
//! Work is cut into fixed-size batches of [`BATCH_SIZE`] samples. Batch `k`
//! of task `j` draws from [`substream`]`(seed, j, k)`: a ChaCha8 generator
//! keyed by the master seed with stream number `(j << 32) | k`. Batches return
//! integer tallies that are summed in batch order, so results depend only on
//! `(seed, n, task)` and never on how batches are spread over workers.
//!
//! Tasks separate independent experiments sharing one seed (one task per
//! sweep point). Re-running a sweep at a different `Δ` reuses the same
//! streams, which gives common random numbers across the `Δ` grid.

use alloc::vec;
use alloc::vec::Vec;

// needed without std; dev-dependencies link std into test builds
#[allow(unused_imports)]
use num_traits::Float as _;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::measurement::{
    collapse_update, faithful_in_span, outcome_unchecked, FaithfulnessProbe, Posterior, DEFAULT_POSTERIOR_BUDGET,
};
use crate::model::{sample_marble, EpistemicState, MarbleOutcome, ModelSpec, SamplerKind};
use crate::projective::{haar_state, Context, PureState, RealSphereState};

pub const BATCH_SIZE: u64 = 4096;

/// Task id reserved for drawing the contexts of a faithfulness probe.
const PROBE_TASK: u32 = u32::MAX;

/// Independent random stream for batch `batch` of task `task`.
pub fn substream(seed: u64, task: u32, batch: u32) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((task as u64) << 32) | batch as u64);
    rng
}

/// Runs independent jobs `0..jobs` and returns their results in job order.
pub trait Executor {
    fn workers(&self) -> usize;

    fn map<T, F>(&self, jobs: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send;
}

/// Runs every job on the calling thread.
#[derive(Clone, Copy, Debug, Default)]
pub struct Sequential;

impl Executor for Sequential {
    fn workers(&self) -> usize {
        1
    }

    fn map<T, F>(&self, jobs: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        (0..jobs).map(f).collect()
    }
}

/// A Monte Carlo proportion with its provenance.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    /// Wald error `√(p̂(1-p̂)/n)`, or `√(0.25/n)` when `p̂ ∈ {0, 1}`.
    pub std_error: f64,
    pub n_samples: u64,
    pub seed: u64,
    pub n_workers: usize,
}

impl Estimate {
    pub fn from_count(hits: u64, n: u64, seed: u64, n_workers: usize) -> Self {
        let nf = n.max(1) as f64;
        let p = hits as f64 / nf;
        let var = if hits == 0 || hits == n { 0.25 } else { p * (1.0 - p) };
        Self { mean: p, std_error: (var / nf).sqrt(), n_samples: n, seed, n_workers }
    }

    /// `(mean - target) / std_error`.
    pub fn z_score(&self, target: f64) -> f64 {
        (self.mean - target) / self.std_error
    }
}

/// One `(θ, outcome)` point of a Born-rule comparison.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub theta: f64,
    pub outcome: usize,
    pub qm_prob: f64,
    pub om: Estimate,
    pub delta: f64,
    pub model: ModelSpec,
}

impl SweepRow {
    pub fn deviation(&self) -> f64 {
        (self.om.mean - self.qm_prob).abs()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Sweep {
    pub rows: Vec<SweepRow>,
    /// `max |om - qm|` over all rows.
    pub score: f64,
    pub max_std_error: f64,
}

impl Sweep {
    fn from_rows(rows: Vec<SweepRow>) -> Self {
        let score = rows.iter().map(SweepRow::deviation).fold(0.0, f64::max);
        let max_std_error = rows.iter().map(|r| r.om.std_error).fold(0.0, f64::max);
        Self { rows, score, max_std_error }
    }

    /// Row with the largest deviation.
    pub fn worst(&self) -> Option<&SweepRow> {
        self.rows.iter().max_by(|a, b| a.deviation().total_cmp(&b.deviation()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DeltaScore {
    pub delta: f64,
    pub score: f64,
    pub max_std_error: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DeltaOptimization {
    pub best_delta: f64,
    pub table: Vec<DeltaScore>,
    pub sweeps: Vec<Sweep>,
}

/// Where the ontic states of an unfaithfulness measurement come from.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SamplingLaw {
    Haar,
    State(EpistemicState),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UnfaithfulEstimate {
    /// Outcome 0 in the base context, a different outcome in some probe
    /// context.
    pub sampled: Estimate,
    /// Outcome 0 in the base context but not faithful by the closed form.
    pub analytic: Estimate,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum UpdateRule {
    /// Re-center the density on the obtained outcome's central element.
    #[default]
    Collapse,
    /// Keep the prior, conditioned on every outcome seen so far.
    Bayes,
}

impl UpdateRule {
    pub fn name(self) -> &'static str {
        match self {
            UpdateRule::Collapse => "collapse",
            UpdateRule::Bayes => "bayes",
        }
    }
}

impl core::str::FromStr for UpdateRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "collapse" => Ok(UpdateRule::Collapse),
            "bayes" => Ok(UpdateRule::Bayes),
            _ => Err(Error::InvalidArgument("update must be collapse or bayes")),
        }
    }
}

/// Outcome statistics of a measurement chain.
#[derive(Clone, Debug, PartialEq)]
pub struct SequentialReport {
    pub system_dim: usize,
    pub steps: usize,
    pub n: u64,
    /// Counts of outcome sequences, indexed by `Σ_k o_k · d^k`.
    pub joint_counts: Vec<u64>,
    /// `marginals[k][i]`: frequency of outcome `i` at step `k`.
    pub marginals: Vec<Vec<Estimate>>,
    /// `agreement[k]`: frequency of step `k` repeating the step-0 outcome.
    pub agreement: Vec<Estimate>,
}

impl SequentialReport {
    /// Outcome sequence of a joint index.
    pub fn decode(&self, index: usize) -> Vec<usize> {
        let mut rest = index;
        (0..self.steps)
            .map(|_| {
                let o = rest % self.system_dim;
                rest /= self.system_dim;
                o
            })
            .collect()
    }
}

/// Born probabilities `|⟨λ_i|ψ⟩|²` with `ψ` embedded into the context's
/// ontic dimension.
pub fn born_probs(psi: &PureState, context: &Context) -> Result<Vec<f64>> {
    if psi.dim() != context.system_dim() {
        return Err(Error::DimensionMismatch { expected: context.system_dim(), found: psi.dim() });
    }
    let e = psi.embed(context.ontic_dim())?;
    context.elements().iter().map(|l| e.overlap(l)).collect()
}

/// Quantum joint distribution of a chain of projective measurements with
/// Lüders updates, indexed like [`SequentialReport::joint_counts`].
pub fn qm_sequential_probs(psi: &PureState, contexts: &[Context]) -> Result<Vec<f64>> {
    let first = contexts.first().ok_or(Error::InvalidArgument("empty measurement chain"))?;
    let d = first.system_dim();
    let steps = contexts.len();
    let embedded = psi.embed(first.ontic_dim())?;
    let mut probs = vec![0.0; d.pow(steps as u32)];
    for (index, p) in probs.iter_mut().enumerate() {
        let mut rest = index;
        let mut prev = embedded;
        let mut acc = 1.0;
        for c in contexts {
            let o = rest % d;
            rest /= d;
            let e = *c.element(o)?;
            acc *= prev.overlap(&e)?;
            prev = e;
        }
        *p = acc;
    }
    Ok(probs)
}

/// Monte Carlo driver: a master seed, a sampler choice and an executor.
#[derive(Clone, Debug)]
pub struct Engine<E> {
    seed: u64,
    sampler: SamplerKind,
    posterior_budget: u64,
    executor: E,
}

impl<E: Executor> Engine<E> {
    pub fn new(seed: u64, executor: E) -> Self {
        Self { seed, sampler: SamplerKind::default(), posterior_budget: DEFAULT_POSTERIOR_BUDGET, executor }
    }

    pub fn with_sampler(mut self, sampler: SamplerKind) -> Self {
        self.sampler = sampler;
        self
    }

    pub fn with_posterior_budget(mut self, budget: u64) -> Self {
        self.posterior_budget = budget.max(1);
        self
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn sampler(&self) -> SamplerKind {
        self.sampler
    }

    pub fn workers(&self) -> usize {
        self.executor.workers()
    }

    fn estimate(&self, hits: u64, n: u64) -> Estimate {
        Estimate::from_count(hits, n, self.seed, self.executor.workers())
    }

    /// Splits `n` samples into batches, runs `batch(rng, count)` on each and
    /// sums the returned tallies (all of length `width`).
    pub fn tally<F>(&self, task: u32, n: u64, width: usize, batch: F) -> Result<Vec<u64>>
    where
        F: Fn(&mut ChaCha8Rng, u64) -> Result<Vec<u64>> + Sync + Send,
    {
        let n_batches = n.div_ceil(BATCH_SIZE);
        if n_batches > u32::MAX as u64 {
            return Err(Error::InvalidArgument("too many samples"));
        }
        let seed = self.seed;
        let results = self.executor.map(n_batches as usize, |k| {
            let count = BATCH_SIZE.min(n - k as u64 * BATCH_SIZE);
            let mut rng = substream(seed, task, k as u32);
            batch(&mut rng, count)
        });
        let mut total = vec![0u64; width];
        for r in results {
            for (t, c) in total.iter_mut().zip(r?) {
                *t += c;
            }
        }
        Ok(total)
    }

    fn outcome_counts(&self, state: &EpistemicState, context: &Context, n: u64, task: u32) -> Result<Vec<u64>> {
        let d = context.system_dim();
        let sampler = self.sampler;
        self.tally(task, n, d, |rng, count| {
            let mut c = vec![0u64; d];
            for _ in 0..count {
                c[outcome_unchecked(&state.sample(sampler, rng), context)] += 1;
            }
            Ok(c)
        })
    }

    /// Outcome frequencies for system state `psi` measured in `context`.
    /// The means sum to exactly one.
    pub fn estimate_outcome_probs(
        &self,
        model: &ModelSpec,
        psi: &PureState,
        context: &Context,
        n: u64,
    ) -> Result<Vec<Estimate>> {
        self.estimate_outcome_probs_task(model, psi, context, n, 0)
    }

    /// [`estimate_outcome_probs`](Self::estimate_outcome_probs) on the
    /// streams of `task`.
    pub fn estimate_outcome_probs_task(
        &self,
        model: &ModelSpec,
        psi: &PureState,
        context: &Context,
        n: u64,
        task: u32,
    ) -> Result<Vec<Estimate>> {
        if n == 0 {
            return Err(Error::InvalidArgument("n must be at least 1"));
        }
        check_context(model, context)?;
        let state = EpistemicState::for_system_state(*model, psi)?;
        let counts = self.outcome_counts(&state, context, n, task)?;
        Ok(counts.into_iter().map(|c| self.estimate(c, n)).collect())
    }

    /// `max_i |om_i - qm_i|` for one system state, with the largest standard
    /// error among the outcomes.
    pub fn deviation_for_state(
        &self,
        model: &ModelSpec,
        psi: &PureState,
        context: &Context,
        n: u64,
        task: u32,
    ) -> Result<(f64, f64)> {
        let qm = born_probs(psi, context)?;
        let om = self.estimate_outcome_probs_task(model, psi, context, n, task)?;
        let dev = qm.iter().zip(&om).map(|(q, e)| (e.mean - q).abs()).fold(0.0, f64::max);
        let se = om.iter().map(|e| e.std_error).fold(0.0, f64::max);
        Ok((dev, se))
    }

    /// Born-rule comparison for `ψ(θ) = cos θ|0⟩ + sin θ|1⟩` in the
    /// computational context, one task per grid point.
    pub fn deviation_sweep(&self, model: &ModelSpec, theta_grid: &[f64], n: u64) -> Result<Sweep> {
        if theta_grid.is_empty() {
            return Err(Error::InvalidArgument("empty theta grid"));
        }
        let context = Context::computational(model.system_dim(), model.ontic_dim())?;
        let mut rows = Vec::with_capacity(theta_grid.len() * model.system_dim());
        for (task, &theta) in theta_grid.iter().enumerate() {
            let psi = PureState::in_plane(model.system_dim(), theta)?;
            let qm = born_probs(&psi, &context)?;
            let om = self.estimate_outcome_probs_task(model, &psi, &context, n, task as u32)?;
            for (outcome, (q, e)) in qm.into_iter().zip(om).enumerate() {
                rows.push(SweepRow { theta, outcome, qm_prob: q, om: e, delta: model.delta(), model: *model });
            }
        }
        Ok(Sweep::from_rows(rows))
    }

    /// Sweeps every `Δ` in the grid (same family as `model`) with common
    /// random numbers and returns the `Δ` of smallest deviation score,
    /// preferring the lowest `Δ` on ties.
    pub fn optimize_delta(
        &self,
        model: &ModelSpec,
        delta_grid: &[f64],
        theta_grid: &[f64],
        n: u64,
    ) -> Result<DeltaOptimization> {
        if delta_grid.is_empty() {
            return Err(Error::InvalidArgument("empty delta grid"));
        }
        let mut table = Vec::with_capacity(delta_grid.len());
        let mut sweeps = Vec::with_capacity(delta_grid.len());
        for &delta in delta_grid {
            let spec = model.with_delta(delta)?;
            let sweep = self.deviation_sweep(&spec, theta_grid, n)?;
            table.push(DeltaScore { delta, score: sweep.score, max_std_error: sweep.max_std_error });
            sweeps.push(sweep);
        }
        let best = table
            .iter()
            .min_by(|a, b| a.score.total_cmp(&b.score).then(a.delta.total_cmp(&b.delta)))
            .expect("nonempty grid");
        Ok(DeltaOptimization { best_delta: best.delta, table, sweeps })
    }

    /// Fraction of ontic states giving outcome 0 in `base` that flip to
    /// another outcome in one of `n_contexts` contexts rotated about the
    /// first element, plus the closed-form count of the same set.
    pub fn unfaithful_fraction(
        &self,
        base: &Context,
        law: &SamplingLaw,
        n: u64,
        n_contexts: usize,
    ) -> Result<UnfaithfulEstimate> {
        if n == 0 {
            return Err(Error::InvalidArgument("n must be at least 1"));
        }
        let dim = base.ontic_dim();
        if let SamplingLaw::State(s) = law {
            if s.center().dim() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: s.center().dim() });
            }
        }
        let probe = FaithfulnessProbe::new(base, 0, n_contexts, &mut substream(self.seed, PROBE_TASK, 0))?;
        let sampler = self.sampler;
        let counts = self.tally(0, n, 2, |rng, count| {
            let mut c = vec![0u64; 2];
            for _ in 0..count {
                let lambda = match law {
                    SamplingLaw::Haar => haar_state(dim, rng)?,
                    SamplingLaw::State(s) => s.sample(sampler, rng),
                };
                if outcome_unchecked(&lambda, base) != 0 {
                    continue;
                }
                if !probe.is_faithful(&lambda)? {
                    c[0] += 1;
                }
                if !faithful_in_span(&lambda, base, 0)? {
                    c[1] += 1;
                }
            }
            Ok(c)
        })?;
        Ok(UnfaithfulEstimate { sampled: self.estimate(counts[0], n), analytic: self.estimate(counts[1], n) })
    }

    /// Frequency with which re-measuring `context` after the update repeats
    /// the first outcome.
    pub fn repeatability_run(
        &self,
        model: &ModelSpec,
        psi: &PureState,
        context: &Context,
        update: UpdateRule,
        n: u64,
    ) -> Result<Estimate> {
        let report = self.sequential_run(model, psi, core::slice::from_ref(context), update, n, true)?;
        Ok(report.agreement[1])
    }

    /// Simulates the measurement chain `contexts` on `n` independent
    /// systems prepared in `psi`. With `repeat_last`, the last context is
    /// measured once more at the end.
    pub fn sequential_run(
        &self,
        model: &ModelSpec,
        psi: &PureState,
        contexts: &[Context],
        update: UpdateRule,
        n: u64,
        repeat_last: bool,
    ) -> Result<SequentialReport> {
        if n == 0 {
            return Err(Error::InvalidArgument("n must be at least 1"));
        }
        let mut chain: Vec<Context> = contexts.to_vec();
        if repeat_last {
            chain.push(contexts.last().ok_or(Error::InvalidArgument("empty measurement chain"))?.clone());
        }
        let first = chain.first().ok_or(Error::InvalidArgument("empty measurement chain"))?;
        let d = first.system_dim();
        for c in &chain {
            check_context(model, c)?;
        }
        let steps = chain.len();
        let width = d
            .checked_pow(steps as u32)
            .filter(|w| *w <= 1 << 20)
            .ok_or(Error::InvalidArgument("measurement chain too long"))?;
        let prior = EpistemicState::for_system_state(*model, psi)?;
        let sampler = self.sampler;
        let budget = self.posterior_budget;
        let chain_ref = &chain;
        let joint_counts = self.tally(0, n, width, |rng, count| {
            let mut c = vec![0u64; width];
            for _ in 0..count {
                let mut index = 0usize;
                let mut scale = 1usize;
                let mut state = prior;
                let mut posterior = Posterior::new(prior).with_sampler(sampler).with_budget(budget);
                for ctx in chain_ref {
                    let lambda = match update {
                        UpdateRule::Collapse => state.sample(sampler, rng),
                        UpdateRule::Bayes => posterior.sample(rng)?,
                    };
                    let o = outcome_unchecked(&lambda, ctx);
                    match update {
                        UpdateRule::Collapse => state = collapse_update(model, ctx, o)?,
                        UpdateRule::Bayes => posterior = posterior.and_then(ctx, o)?,
                    }
                    index += o * scale;
                    scale *= d;
                }
                c[index] += 1;
            }
            Ok(c)
        })?;

        let mut marginal_counts = vec![vec![0u64; d]; steps];
        let mut agree = vec![0u64; steps];
        let mut report =
            SequentialReport { system_dim: d, steps, n, joint_counts, marginals: Vec::new(), agreement: Vec::new() };
        for (index, &count) in report.joint_counts.iter().enumerate() {
            if count == 0 {
                continue;
            }
            let seq = report.decode(index);
            for (k, &o) in seq.iter().enumerate() {
                marginal_counts[k][o] += count;
                if o == seq[0] {
                    agree[k] += count;
                }
            }
        }
        report.marginals =
            marginal_counts.into_iter().map(|row| row.into_iter().map(|c| self.estimate(c, n)).collect()).collect();
        report.agreement = agree.into_iter().map(|c| self.estimate(c, n)).collect();
        Ok(report)
    }

    /// Green frequency for a marble prepared around the north pole and
    /// observed along the direction at polar angle `2α`, i.e. the Bloch
    /// vector of `cos α|0⟩ + sin α|1⟩`.
    pub fn marble_green_probability(&self, alpha: f64, n: u64, task: u32) -> Result<Estimate> {
        if n == 0 {
            return Err(Error::InvalidArgument("n must be at least 1"));
        }
        let north = RealSphereState::new([0.0, 0.0, 1.0])?;
        let m = RealSphereState::from_angles(2.0 * alpha, 0.0);
        let counts = self.tally(task, n, 1, |rng, count| {
            let green = (0..count)
                .filter(|_| crate::model::marble_outcome(&sample_marble(&north, rng), &m) == MarbleOutcome::Green)
                .count() as u64;
            Ok(vec![green])
        })?;
        Ok(self.estimate(counts[0], n))
    }
}

fn check_context(model: &ModelSpec, context: &Context) -> Result<()> {
    if context.ontic_dim() != model.ontic_dim() {
        return Err(Error::DimensionMismatch { expected: model.ontic_dim(), found: context.ontic_dim() });
    }
    if context.system_dim() != model.system_dim() {
        return Err(Error::DimensionMismatch { expected: model.system_dim(), found: context.system_dim() });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::INV_SQRT_3;
    use core::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

    fn grid(count: usize) -> Vec<f64> {
        (0..count).map(|i| FRAC_PI_2 * i as f64 / (count - 1) as f64).collect()
    }

    /// Runs jobs in reverse order, to check results don't depend on
    /// scheduling.
    struct Reversed;

    impl Executor for Reversed {
        fn workers(&self) -> usize {
            2
        }

        fn map<T, F>(&self, jobs: usize, f: F) -> Vec<T>
        where
            T: Send,
            F: Fn(usize) -> T + Sync + Send,
        {
            let mut out: Vec<(usize, T)> = (0..jobs).rev().map(|k| (k, f(k))).collect();
            out.sort_by_key(|(k, _)| *k);
            out.into_iter().map(|(_, t)| t).collect()
        }
    }

    #[test]
    fn estimate_error_convention() {
        let e = Estimate::from_count(0, 100, 1, 1);
        assert_eq!((e.mean, e.std_error), (0.0, 0.05));
        let e = Estimate::from_count(100, 100, 1, 1);
        assert_eq!((e.mean, e.std_error), (1.0, 0.05));
        let e = Estimate::from_count(25, 100, 1, 1);
        assert!((e.std_error - (0.25f64 * 0.75 / 100.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn substreams_differ() {
        use rand::RngCore;
        let a = substream(1, 0, 0).next_u64();
        assert_ne!(a, substream(1, 0, 1).next_u64());
        assert_ne!(a, substream(1, 1, 0).next_u64());
        assert_ne!(a, substream(2, 0, 0).next_u64());
        assert_eq!(a, substream(1, 0, 0).next_u64());
    }

    #[test]
    fn born_probs_examples() {
        let ctx = Context::computational(3, 3).unwrap();
        let p = born_probs(&PureState::in_plane(3, 0.3).unwrap(), &ctx).unwrap();
        assert!((p[0] - 0.3f64.cos().powi(2)).abs() < 1e-12);
        assert!((p[1] - 0.3f64.sin().powi(2)).abs() < 1e-12);
        assert_eq!(p[2], 0.0);
        let p = born_probs(&PureState::in_plane(3, 0.0).unwrap(), &ctx).unwrap();
        assert_eq!(p, vec![1.0, 0.0, 0.0]);
        let p = born_probs(&PureState::in_plane(3, FRAC_PI_4).unwrap(), &ctx).unwrap();
        assert!((p[0] - 0.5).abs() < 1e-12 && (p[1] - 0.5).abs() < 1e-12);
        assert!(born_probs(&PureState::basis(2, 0).unwrap(), &ctx).is_err());
        let emb = Context::computational(2, 3).unwrap();
        let p = born_probs(&PureState::in_plane(2, 1.0).unwrap(), &emb).unwrap();
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ks_qubit_reproduces_born_rule_at_pi_over_six() {
        let engine = Engine::new(11, Sequential);
        let psi = PureState::in_plane(2, PI / 6.0).unwrap();
        let ctx = Context::computational(2, 2).unwrap();
        let est = engine.estimate_outcome_probs(&ModelSpec::ks_qubit(), &psi, &ctx, 100_000).unwrap();
        assert!(est[0].z_score(0.75).abs() < 3.0, "{:?}", est[0]);
        assert_eq!(est[0].mean + est[1].mean, 1.0);
    }

    #[test]
    fn center_on_context_element_is_certain() {
        let engine = Engine::new(12, Sequential);
        for spec in [
            ModelSpec::ks_qubit(),
            ModelSpec::linear_trace(3, INV_SQRT_3).unwrap(),
            ModelSpec::uniform_embedded(3, 0.5).unwrap(),
        ] {
            let ctx = Context::computational(spec.system_dim(), spec.ontic_dim()).unwrap();
            let psi = PureState::basis(spec.system_dim(), 0).unwrap();
            let est = engine.estimate_outcome_probs(&spec, &psi, &ctx, 20_000).unwrap();
            assert_eq!(est[0].mean, 1.0, "{spec}");
        }
    }

    #[test]
    fn results_do_not_depend_on_scheduling() {
        let spec = ModelSpec::linear_trace(3, INV_SQRT_3).unwrap();
        let ctx = Context::computational(3, 3).unwrap();
        let psi = PureState::in_plane(3, 0.7).unwrap();
        let a = Engine::new(5, Sequential).estimate_outcome_probs(&spec, &psi, &ctx, 30_000).unwrap();
        let b = Engine::new(5, Reversed).estimate_outcome_probs(&spec, &psi, &ctx, 30_000).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.mean, y.mean);
        }
        let c = Engine::new(6, Sequential).estimate_outcome_probs(&spec, &psi, &ctx, 30_000).unwrap();
        assert_ne!(a[0].mean, c[0].mean);
    }

    #[test]
    fn sweep_shape_and_trivial_rows() {
        let engine = Engine::new(13, Sequential);
        let sweep = engine.deviation_sweep(&ModelSpec::ks_qubit(), &grid(19), 5_000).unwrap();
        assert_eq!(sweep.rows.len(), 38);
        let first = &sweep.rows[0];
        assert_eq!((first.theta, first.outcome, first.qm_prob, first.om.mean), (0.0, 0, 1.0, 1.0));
        for pair in sweep.rows.chunks(2) {
            assert!((pair[0].qm_prob + pair[1].qm_prob - 1.0).abs() < 1e-12);
        }
        assert!(engine.deviation_sweep(&ModelSpec::ks_qubit(), &[], 10).is_err());
    }

    #[test]
    fn optimize_delta_single_point_and_qubit_family() {
        let engine = Engine::new(14, Sequential);
        let thetas = grid(7);
        let single = engine.optimize_delta(&ModelSpec::ks_qubit(), &[0.3], &thetas, 2_000).unwrap();
        assert_eq!(single.best_delta, 0.3);
        let opt = engine.optimize_delta(&ModelSpec::ks_qubit(), &[0.3, 0.5, 0.7], &thetas, 20_000).unwrap();
        assert_eq!(opt.best_delta, 0.5);
        let at_half = opt.table[1];
        assert!(at_half.score < 4.0 * at_half.max_std_error);
    }

    #[test]
    fn unfaithful_fraction_examples() {
        let engine = Engine::new(15, Sequential);
        let ctx = Context::computational(3, 3).unwrap();
        let spec = ModelSpec::linear_trace(3, 0.5).unwrap();
        let centered = EpistemicState::new(spec, *ctx.element(0).unwrap()).unwrap();
        let u = engine.unfaithful_fraction(&ctx, &SamplingLaw::State(centered), 20_000, 200).unwrap();
        assert_eq!(u.sampled.mean, 0.0);
        assert_eq!(u.analytic.mean, 0.0);

        let h = engine.unfaithful_fraction(&ctx, &SamplingLaw::Haar, 20_000, 200).unwrap();
        assert!(h.sampled.mean > 5.0 * h.sampled.std_error);
        assert!(h.sampled.mean <= h.analytic.mean);
        assert!(engine.unfaithful_fraction(&ctx, &SamplingLaw::Haar, 10, 0).is_err());
    }

    #[test]
    fn repeatability_examples() {
        let engine = Engine::new(16, Sequential);
        let ctx = Context::computational(3, 3).unwrap();
        let psi = PureState::in_plane(3, 0.6).unwrap();
        let lt = ModelSpec::linear_trace(3, INV_SQRT_3).unwrap();
        let r = engine.repeatability_run(&lt, &psi, &ctx, UpdateRule::Collapse, 10_000).unwrap();
        assert_eq!(r.mean, 1.0);
        let low = ModelSpec::linear_trace(3, 0.4).unwrap();
        let r = engine.repeatability_run(&low, &psi, &ctx, UpdateRule::Collapse, 10_000).unwrap();
        assert!(r.mean < 1.0 - 3.0 * r.std_error, "{r:?}");
        let r = engine.repeatability_run(&low, &psi, &ctx, UpdateRule::Bayes, 5_000).unwrap();
        assert_eq!(r.mean, 1.0);
    }

    #[test]
    fn single_step_chain_matches_outcome_estimate() {
        let engine = Engine::new(17, Sequential);
        let spec = ModelSpec::linear_trace(3, INV_SQRT_3).unwrap();
        let ctx = Context::computational(3, 3).unwrap();
        let psi = PureState::in_plane(3, 0.5).unwrap();
        let chain = engine
            .sequential_run(&spec, &psi, core::slice::from_ref(&ctx), UpdateRule::Collapse, 20_000, false)
            .unwrap();
        let direct = engine.estimate_outcome_probs(&spec, &psi, &ctx, 20_000).unwrap();
        for (a, b) in chain.marginals[0].iter().zip(&direct) {
            assert_eq!(a.mean, b.mean);
        }
    }

    #[test]
    fn qm_chain_probabilities() {
        let a = Context::computational(2, 2).unwrap();
        let psi = PureState::in_plane(2, 0.4).unwrap();
        let p = qm_sequential_probs(&psi, &[a.clone(), a.clone()]).unwrap();
        assert!((p[0] - 0.4f64.cos().powi(2)).abs() < 1e-12);
        assert_eq!(p[1], 0.0);
        assert_eq!(p[2], 0.0);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(qm_sequential_probs(&psi, &[]).is_err());
    }

    #[test]
    fn marble_green_matches_cos_squared() {
        let engine = Engine::new(18, Sequential);
        for (k, alpha) in [0.0, PI / 8.0, FRAC_PI_4, 3.0 * PI / 8.0].into_iter().enumerate() {
            let e = engine.marble_green_probability(alpha, 40_000, k as u32).unwrap();
            assert!(e.z_score(alpha.cos().powi(2)).abs() < 3.5, "{alpha}: {e:?}");
        }
    }
}
