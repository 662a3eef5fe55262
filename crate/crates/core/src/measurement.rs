//! Deterministic outcome assignment, post-measurement updates and the
//! faithful/unfaithful split of ontic space.
//!
//! An ontic state gives the outcome whose central element it overlaps most.
//! Ties, which have measure zero under every density used here, go to the
//! lowest index.

use alloc::vec::Vec;

use rand::Rng;

use crate::error::{Error, Result};
use crate::model::{EpistemicState, ModelSpec, SamplerKind};
use crate::projective::{Context, PureState};

/// Default number of prior draws a [`Posterior`] may spend per sample.
pub const DEFAULT_POSTERIOR_BUDGET: u64 = 1_000_000;

fn check_ontic(lambda: &PureState, context: &Context) -> Result<()> {
    if lambda.dim() == context.ontic_dim() {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected: context.ontic_dim(), found: lambda.dim() })
    }
}

#[inline]
pub(crate) fn outcome_unchecked(lambda: &PureState, context: &Context) -> usize {
    let mut best = 0;
    let mut best_overlap = f64::NEG_INFINITY;
    for (i, e) in context.elements().iter().enumerate() {
        let o = lambda.overlap_unchecked(e);
        if o > best_overlap {
            best = i;
            best_overlap = o;
        }
    }
    best
}

/// Index of the closest central element.
pub fn outcome_of(lambda: &PureState, context: &Context) -> Result<usize> {
    check_ontic(lambda, context)?;
    Ok(outcome_unchecked(lambda, context))
}

/// `χ_i(λ)`: whether `λ` gives outcome `i` in this context.
pub fn characteristic(lambda: &PureState, context: &Context, i: usize) -> Result<bool> {
    context.element(i)?;
    Ok(outcome_of(lambda, context)? == i)
}

/// The model's state after outcome `i`: same model, re-centered on the
/// outcome's central element.
pub fn collapse_update(model: &ModelSpec, context: &Context, i: usize) -> Result<EpistemicState> {
    EpistemicState::new(*model, *context.element(i)?)
}

/// Non-disturbing update: the prior restricted to the region where every
/// recorded `(context, outcome)` pair holds. Sampled by filtering prior draws.
#[derive(Clone, Debug)]
pub struct Posterior {
    prior: EpistemicState,
    conditions: Vec<(Context, usize)>,
    sampler: SamplerKind,
    budget: u64,
}

/// Conditions `state` on outcome `i` of `context`.
pub fn bayes_update(state: &EpistemicState, context: &Context, i: usize) -> Result<Posterior> {
    Posterior::new(*state).and_then(context, i)
}

impl Posterior {
    pub fn new(prior: EpistemicState) -> Self {
        Self { prior, conditions: Vec::new(), sampler: SamplerKind::default(), budget: DEFAULT_POSTERIOR_BUDGET }
    }

    pub fn with_budget(mut self, budget: u64) -> Self {
        self.budget = budget.max(1);
        self
    }

    pub fn with_sampler(mut self, sampler: SamplerKind) -> Self {
        self.sampler = sampler;
        self
    }

    /// Adds another outcome constraint.
    pub fn and_then(mut self, context: &Context, i: usize) -> Result<Self> {
        context.element(i)?;
        if context.ontic_dim() != self.prior.model().ontic_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.prior.model().ontic_dim(),
                found: context.ontic_dim(),
            });
        }
        self.conditions.push((context.clone(), i));
        Ok(self)
    }

    pub fn prior(&self) -> &EpistemicState {
        &self.prior
    }

    pub fn accepts(&self, lambda: &PureState) -> bool {
        self.conditions.iter().all(|(c, i)| outcome_unchecked(lambda, c) == *i)
    }

    /// Draws prior samples until one satisfies every condition.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<PureState> {
        for _ in 0..self.budget {
            let lambda = self.prior.sample(self.sampler, rng);
            if self.accepts(&lambda) {
                return Ok(lambda);
            }
        }
        let outcome = self.conditions.last().map_or(0, |(_, i)| *i);
        Err(Error::ZeroProbabilityOutcome { outcome, attempts: self.budget })
    }

    /// Fraction of `n` prior draws that satisfy the conditions, i.e. the
    /// model probability of the recorded outcome sequence.
    pub fn acceptance<R: Rng + ?Sized>(&self, n: u64, rng: &mut R) -> (u64, u64) {
        let hits = (0..n).filter(|_| self.accepts(&self.prior.sample(self.sampler, rng))).count() as u64;
        (hits, n)
    }
}

/// Closed-form faithfulness for full contexts (`d = D`): `λ` gives the `λ₀`
/// outcome in every context containing `λ₀` iff `Tr(λλ₀) > 1/2`. At exactly
/// 1/2 a rotated context can tie, so the boundary counts as unfaithful.
pub fn faithful_analytic(lambda: &PureState, lambda0: &PureState) -> Result<bool> {
    Ok(lambda.overlap(lambda0)? > 0.5)
}

/// Faithfulness relative to the span of a possibly embedded context: the
/// weight of `λ` on the rest of the span must stay below its overlap with
/// element `axis`. Equals [`faithful_analytic`] when the context spans the
/// whole space.
pub fn faithful_in_span(lambda: &PureState, context: &Context, axis: usize) -> Result<bool> {
    check_ontic(lambda, context)?;
    let t0 = lambda.overlap_unchecked(context.element(axis)?);
    let span: f64 = context.elements().iter().map(|e| lambda.overlap_unchecked(e)).sum();
    Ok(t0 > span - t0)
}

/// A fixed family of contexts, all sharing the element at `axis` with a base
/// context and otherwise Haar-rotated about it.
#[derive(Clone, Debug)]
pub struct FaithfulnessProbe {
    axis: usize,
    contexts: Vec<Context>,
}

impl FaithfulnessProbe {
    pub fn new<R: Rng + ?Sized>(base: &Context, axis: usize, n_contexts: usize, rng: &mut R) -> Result<Self> {
        if n_contexts == 0 {
            return Err(Error::InvalidArgument("n_contexts must be at least 1"));
        }
        base.element(axis)?;
        let contexts = (0..n_contexts).map(|_| base.rotated_about(axis, rng)).collect::<Result<Vec<_>>>()?;
        Ok(Self { axis, contexts })
    }

    pub fn contexts(&self) -> &[Context] {
        &self.contexts
    }

    /// True iff `λ` gives the axis outcome in every probe context.
    pub fn is_faithful(&self, lambda: &PureState) -> Result<bool> {
        check_ontic(lambda, &self.contexts[0])?;
        Ok(self.contexts.iter().all(|c| outcome_unchecked(lambda, c) == self.axis))
    }
}

/// Brute-force faithfulness: `λ` must give the `λ₀` outcome in each of
/// `n_contexts` random full contexts containing `λ₀`.
pub fn faithful_sampled<R: Rng + ?Sized>(
    lambda: &PureState,
    lambda0: &PureState,
    n_contexts: usize,
    rng: &mut R,
) -> Result<bool> {
    if lambda.dim() != lambda0.dim() {
        return Err(Error::DimensionMismatch { expected: lambda0.dim(), found: lambda.dim() });
    }
    let base = context_through(lambda0)?;
    FaithfulnessProbe::new(&base, 0, n_contexts, rng)?.is_faithful(lambda)
}

/// A full context whose first element is `lambda0`.
pub fn context_through(lambda0: &PureState) -> Result<Context> {
    Context::completing(lambda0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::INV_SQRT_3;
    use crate::projective::{haar_context, haar_state, Unitary};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn outcome_examples() {
        let ctx = Context::computational(3, 3).unwrap();
        assert_eq!(outcome_of(&PureState::basis(3, 1).unwrap(), &ctx).unwrap(), 1);
        // embedded λ orthogonal to the whole subspace ties at 0
        let emb = Context::computational(3, 4).unwrap();
        assert_eq!(outcome_of(&PureState::basis(4, 3).unwrap(), &emb).unwrap(), 0);
        assert!(outcome_of(&PureState::basis(2, 0).unwrap(), &ctx).is_err());
    }

    #[test]
    fn characteristic_partitions_ontic_space() {
        let mut r = rng(1);
        let ctx = haar_context(3, 3, &mut r).unwrap();
        for i in 0..3 {
            assert!(characteristic(ctx.element(i).unwrap(), &ctx, i).unwrap());
            assert!(!characteristic(ctx.element(i).unwrap(), &ctx, (i + 1) % 3).unwrap());
        }
        for _ in 0..1000 {
            let l = haar_state(3, &mut r).unwrap();
            let ones = (0..3).filter(|&i| characteristic(&l, &ctx, i).unwrap()).count();
            assert_eq!(ones, 1);
        }
        assert_eq!(
            characteristic(&PureState::basis(3, 0).unwrap(), &ctx, 3),
            Err(Error::IndexOutOfRange { index: 3, len: 3 })
        );
    }

    #[test]
    fn qubit_outcome_is_heaviside_form() {
        let mut r = rng(2);
        for _ in 0..100_000 {
            let ctx = haar_context(2, 2, &mut r).unwrap();
            let l = haar_state(2, &mut r).unwrap();
            let t0 = l.overlap(ctx.element(0).unwrap()).unwrap();
            let heaviside = if t0 >= 0.5 { 0 } else { 1 };
            let o = outcome_of(&l, &ctx).unwrap();
            if (t0 - 0.5).abs() > 1e-12 {
                assert_eq!(o, heaviside);
            }
        }
    }

    #[test]
    fn outcomes_are_unitarily_covariant() {
        let mut r = rng(3);
        for _ in 0..2000 {
            let ctx = haar_context(3, 3, &mut r).unwrap();
            let l = haar_state(3, &mut r).unwrap();
            let u = Unitary::haar(3, &mut r).unwrap();
            let a = outcome_of(&l, &ctx).unwrap();
            let b = outcome_of(&u.apply(&l).unwrap(), &u.apply_context(&ctx).unwrap()).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn collapse_recenters() {
        let ctx = Context::computational(2, 2).unwrap();
        let s = collapse_update(&crate::model::ModelSpec::ks_qubit(), &ctx, 0).unwrap();
        assert_eq!(*s.center(), PureState::basis(2, 0).unwrap());
        assert!(collapse_update(&crate::model::ModelSpec::ks_qubit(), &ctx, 2).is_err());
    }

    #[test]
    fn posterior_samples_give_conditioned_outcome() {
        let mut r = rng(4);
        let spec = crate::model::ModelSpec::linear_trace(3, 0.4).unwrap();
        let psi = PureState::from_real(&[1.0, 1.0, 0.3]).unwrap();
        let state = EpistemicState::new(spec, psi).unwrap();
        let ctx = Context::computational(3, 3).unwrap();
        for i in 0..3 {
            let post = bayes_update(&state, &ctx, i).unwrap();
            for _ in 0..200 {
                let l = post.sample(&mut r).unwrap();
                assert_eq!(outcome_of(&l, &ctx).unwrap(), i);
            }
        }
    }

    #[test]
    fn posterior_of_center_outcome_accepts_everything() {
        let mut r = rng(5);
        let ctx = Context::computational(2, 2).unwrap();
        let state = EpistemicState::new(crate::model::ModelSpec::ks_qubit(), PureState::basis(2, 0).unwrap()).unwrap();
        let post = bayes_update(&state, &ctx, 0).unwrap();
        assert_eq!(post.acceptance(10_000, &mut r), (10_000, 10_000));
    }

    #[test]
    fn impossible_outcome_exhausts_budget() {
        let mut r = rng(6);
        let ctx = Context::computational(2, 2).unwrap();
        let state = EpistemicState::new(crate::model::ModelSpec::ks_qubit(), PureState::basis(2, 0).unwrap()).unwrap();
        let post = bayes_update(&state, &ctx, 1).unwrap().with_budget(1000);
        assert_eq!(post.sample(&mut r), Err(Error::ZeroProbabilityOutcome { outcome: 1, attempts: 1000 }));
    }

    #[test]
    fn faithful_examples() {
        let mut r = rng(7);
        let l0 = PureState::basis(3, 0).unwrap();
        assert!(faithful_analytic(&l0, &l0).unwrap());
        assert!(faithful_sampled(&l0, &l0, 50, &mut r).unwrap());

        // overlap 0.4: some context must flip it
        let l = PureState::from_real(&[0.4f64.sqrt(), 0.6f64.sqrt(), 0.0]).unwrap();
        assert!(!faithful_analytic(&l, &l0).unwrap());
        assert!(!faithful_sampled(&l, &l0, 1000, &mut r).unwrap());

        let perp = PureState::from_real(&[0.0, 0.6, 0.8]).unwrap();
        assert!(!faithful_sampled(&perp, &l0, 10, &mut r).unwrap());
        assert!(faithful_sampled(&l0, &PureState::basis(2, 0).unwrap(), 10, &mut r).is_err());
    }

    #[test]
    fn faithful_boundary_at_half() {
        let l0 = PureState::basis(3, 0).unwrap();
        let at = |t: f64| PureState::from_real(&[t.sqrt(), (1.0 - t).sqrt(), 0.0]).unwrap();
        assert!(!faithful_analytic(&at(0.5 - 1e-9), &l0).unwrap());
        assert!(faithful_analytic(&at(0.5 + 1e-9), &l0).unwrap());
        assert!(faithful_analytic(&at(0.51), &l0).unwrap());
    }

    #[test]
    fn span_faithfulness_reduces_to_analytic_for_full_contexts() {
        let mut r = rng(8);
        let ctx = haar_context(3, 3, &mut r).unwrap();
        for _ in 0..2000 {
            let l = haar_state(3, &mut r).unwrap();
            assert_eq!(faithful_in_span(&l, &ctx, 0).unwrap(), faithful_analytic(&l, ctx.element(0).unwrap()).unwrap());
        }
    }

    #[test]
    fn span_faithfulness_matches_probe_for_embedded_contexts() {
        let mut r = rng(9);
        let base = Context::computational(3, 4).unwrap();
        let probe = FaithfulnessProbe::new(&base, 0, 400, &mut r).unwrap();
        let mut disagree = 0;
        for _ in 0..2000 {
            let l = haar_state(4, &mut r).unwrap();
            if outcome_of(&l, &base).unwrap() != 0 {
                continue;
            }
            if faithful_in_span(&l, &base, 0).unwrap() != probe.is_faithful(&l).unwrap() {
                disagree += 1;
            }
        }
        assert!(disagree < 20, "{disagree}");
    }

    #[test]
    fn support_of_centered_states_is_faithful() {
        let mut r = rng(10);
        for delta in [0.5, INV_SQRT_3, 0.8] {
            let spec = crate::model::ModelSpec::linear_trace(3, delta).unwrap();
            let l0 = haar_state(3, &mut r).unwrap();
            let state = EpistemicState::new(spec, l0).unwrap();
            for _ in 0..5000 {
                let l = state.sample_conditional(&mut r);
                assert!(faithful_analytic(&l, &l0).unwrap() || l.overlap(&l0).unwrap() <= 0.5 + 1e-15);
            }
        }
    }
}
