//! Epistemic densities over ontic space.
//!
//! Every model density depends on an ontic state `λ` only through its
//! overlap `t = Tr(λ λ_ψ)` with the center `λ_ψ`. Under the Haar measure on
//! `CP^{D-1}` that overlap has density `(D-1)(1-t)^{D-2}`, so normalization,
//! acceptance rates and the exact conditional sampler all reduce to
//! one-dimensional integrals in `t`.

use alloc::string::{String, ToString};
use core::fmt;
use core::str::FromStr;

// needed without std; dev-dependencies link std into test builds
#[allow(unused_imports)]
use num_traits::Float as _;
use rand::Rng;
use rand_distr::{Distribution, UnitSphere};

use crate::error::{Error, Result};
use crate::projective::{self, PureState, RealSphereState, MAX_DIM, MIN_DIM};
use crate::quadrature::{self, powu};

/// `1/√3`, the default support cutoff of the linear-trace model.
pub const INV_SQRT_3: f64 = 0.577_350_269_189_625_8;

const ROOT_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Variant {
    /// Kochen–Specker qubit model: weight `max(t - 1/2, 0)` on `CP^1`.
    KsQubit,
    /// The qubit model on the real 2-sphere (Bloch vectors), with a cosine
    /// density on the hemisphere around `n`.
    MarbleWorld,
    /// Weight `max(t - Δ, 0)` on `CP^{d-1}`.
    LinearTrace,
    /// Flat density on `t ≥ Δ` in `CP^d`, system embedded in the leading
    /// `d` coordinates.
    UniformEmbedded,
}

impl Variant {
    pub const ALL: [Variant; 4] =
        [Variant::KsQubit, Variant::MarbleWorld, Variant::LinearTrace, Variant::UniformEmbedded];

    pub fn name(self) -> &'static str {
        match self {
            Variant::KsQubit => "ks-qubit",
            Variant::MarbleWorld => "marble-world",
            Variant::LinearTrace => "linear-trace",
            Variant::UniformEmbedded => "uniform-embedded",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL.into_iter().find(|v| v.name() == s).ok_or(Error::InvalidModel("unknown variant"))
    }
}

/// How samples are drawn from an [`EpistemicState`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum SamplerKind {
    /// Haar (or uniform-sphere) proposals accepted with probability
    /// `weight / weight_max`.
    Rejection,
    /// Inverse-CDF draw of the overlap, then a Haar direction in the
    /// orthogonal complement of the center. Consumes a fixed number of
    /// random numbers per sample.
    #[default]
    Conditional,
}

impl SamplerKind {
    pub fn name(self) -> &'static str {
        match self {
            SamplerKind::Rejection => "rejection",
            SamplerKind::Conditional => "conditional",
        }
    }
}

impl FromStr for SamplerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rejection" => Ok(SamplerKind::Rejection),
            "conditional" => Ok(SamplerKind::Conditional),
            _ => Err(Error::InvalidArgument("sampler must be rejection or conditional")),
        }
    }
}

/// A validated model definition.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelSpec {
    variant: Variant,
    system_dim: usize,
    ontic_dim: usize,
    delta: f64,
}

impl ModelSpec {
    pub const DEFAULT_UNIFORM_DELTA: f64 = 0.5;

    pub fn new(variant: Variant, system_dim: usize, ontic_dim: usize, delta: f64) -> Result<Self> {
        if !(MIN_DIM..=MAX_DIM).contains(&system_dim) {
            return Err(Error::DimensionOutOfRange(system_dim));
        }
        if !(MIN_DIM..=MAX_DIM).contains(&ontic_dim) {
            return Err(Error::DimensionOutOfRange(ontic_dim));
        }
        if !delta.is_finite() || !(0.0..1.0).contains(&delta) {
            return Err(Error::InvalidModel("delta must lie in [0, 1)"));
        }
        match variant {
            Variant::KsQubit | Variant::MarbleWorld => {
                if system_dim != 2 || ontic_dim != 2 {
                    return Err(Error::InvalidModel("qubit models need d = D = 2"));
                }
                if delta != 0.5 {
                    return Err(Error::InvalidModel("qubit models fix delta = 1/2"));
                }
            }
            Variant::LinearTrace => {
                if system_dim != ontic_dim {
                    return Err(Error::InvalidModel("linear-trace needs d = D"));
                }
            }
            Variant::UniformEmbedded => {
                if ontic_dim != system_dim + 1 {
                    return Err(Error::InvalidModel("uniform-embedded needs D = d + 1"));
                }
                if delta == 0.0 {
                    return Err(Error::InvalidModel("uniform-embedded needs delta in (0, 1)"));
                }
            }
        }
        let spec = Self { variant, system_dim, ontic_dim, delta };
        if spec.support_integral() <= 0.0 {
            return Err(Error::EmptySupport);
        }
        Ok(spec)
    }

    pub fn ks_qubit() -> Self {
        Self { variant: Variant::KsQubit, system_dim: 2, ontic_dim: 2, delta: 0.5 }
    }

    pub fn marble_world() -> Self {
        Self { variant: Variant::MarbleWorld, system_dim: 2, ontic_dim: 2, delta: 0.5 }
    }

    pub fn linear_trace(system_dim: usize, delta: f64) -> Result<Self> {
        Self::new(Variant::LinearTrace, system_dim, system_dim, delta)
    }

    pub fn uniform_embedded(system_dim: usize, delta: f64) -> Result<Self> {
        Self::new(Variant::UniformEmbedded, system_dim, system_dim + 1, delta)
    }

    /// Default model of a variant: qubit models as fixed, linear-trace on a
    /// qutrit with `Δ = 1/√3`, uniform-embedded qubit in `CP^2` with
    /// `Δ = 1/2`.
    pub fn default_for(variant: Variant) -> Self {
        match variant {
            Variant::KsQubit => Self::ks_qubit(),
            Variant::MarbleWorld => Self::marble_world(),
            Variant::LinearTrace => Self::linear_trace(3, INV_SQRT_3).expect("valid default"),
            Variant::UniformEmbedded => Self::uniform_embedded(2, Self::DEFAULT_UNIFORM_DELTA).expect("valid default"),
        }
    }

    /// Same family with a different support cutoff. The qubit models only
    /// exist at `Δ = 1/2`; other cutoffs map to the linear-trace form on
    /// `CP^1`, which is the same weight shape.
    pub fn with_delta(&self, delta: f64) -> Result<Self> {
        match self.variant {
            Variant::KsQubit | Variant::MarbleWorld if delta == 0.5 => Ok(*self),
            Variant::KsQubit | Variant::MarbleWorld => Self::new(Variant::LinearTrace, 2, 2, delta),
            v => Self::new(v, self.system_dim, self.ontic_dim, delta),
        }
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn system_dim(&self) -> usize {
        self.system_dim
    }

    pub fn ontic_dim(&self) -> usize {
        self.ontic_dim
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Short identifier without commas, e.g. `linear-trace/d3/D3`.
    pub fn identifier(&self) -> String {
        let mut s = String::from(self.variant.name());
        s.push_str("/d");
        s.push_str(&self.system_dim.to_string());
        s.push_str("/D");
        s.push_str(&self.ontic_dim.to_string());
        s
    }

    /// Unnormalized density as a function of the overlap with the center.
    pub fn weight(&self, t: f64) -> f64 {
        match self.variant {
            Variant::KsQubit | Variant::LinearTrace => (t - self.delta).max(0.0),
            Variant::MarbleWorld => (2.0 * t - 1.0).max(0.0),
            Variant::UniformEmbedded => {
                if t >= self.delta {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// Supremum of [`weight`](Self::weight) over `[0, 1]`.
    pub fn weight_max(&self) -> f64 {
        match self.variant {
            Variant::KsQubit | Variant::LinearTrace => 1.0 - self.delta,
            Variant::MarbleWorld | Variant::UniformEmbedded => 1.0,
        }
    }

    /// Density of the overlap of a Haar-random state in `CP^{D-1}` with a
    /// fixed state.
    pub fn haar_overlap_density(&self, t: f64) -> f64 {
        let d = self.ontic_dim as u32;
        (d - 1) as f64 * powu(1.0 - t, d - 2)
    }

    /// `∫ weight(t) (D-1)(1-t)^{D-2} dt` in closed form.
    fn support_integral(&self) -> f64 {
        let a = 1.0 - self.delta;
        let d = self.ontic_dim as u32;
        match self.variant {
            Variant::KsQubit | Variant::LinearTrace => powu(a, d) / d as f64,
            Variant::MarbleWorld => 0.25,
            Variant::UniformEmbedded => powu(a, d - 1),
        }
    }

    /// Normalization constant `N` such that `N · weight` integrates to one
    /// against the Haar measure.
    pub fn normalization(&self) -> Result<f64> {
        let i = self.support_integral();
        if i > 0.0 && i.is_finite() {
            Ok(1.0 / i)
        } else {
            Err(Error::EmptySupport)
        }
    }

    /// [`normalization`](Self::normalization) by adaptive quadrature of the
    /// overlap marginal instead of the closed form.
    pub fn normalization_numeric(&self) -> Result<f64> {
        let i = quadrature::integrate(|t| self.weight(t) * self.haar_overlap_density(t), self.delta, 1.0, 1e-14);
        if i > 0.0 {
            Ok(1.0 / i)
        } else {
            Err(Error::EmptySupport)
        }
    }

    /// Probability that a Haar proposal is accepted by the rejection sampler.
    pub fn acceptance_rate(&self) -> f64 {
        match self.variant {
            // proposals come from the uniform sphere: ∫ max(cos, 0) dΩ / 4π
            Variant::MarbleWorld => 0.25,
            _ => self.support_integral() / self.weight_max(),
        }
    }

    /// Maps `u ∈ [0, 1)` to an overlap distributed with density
    /// `∝ weight(t) (D-1)(1-t)^{D-2}`.
    pub fn overlap_quantile(&self, u: f64) -> f64 {
        let a = 1.0 - self.delta;
        let d = self.ontic_dim as u32;
        // x = (1 - t) / a has CDF G(x) on [0, 1]
        let x = match self.variant {
            Variant::UniformEmbedded => u.powf(1.0 / (d - 1) as f64),
            // linear weight with D = 2: G(x) = 2x - x²
            _ if d == 2 => 1.0 - (1.0 - u).sqrt(),
            // G(x) = D x^{D-1} - (D-1) x^D
            _ => {
                let df = d as f64;
                quadrature::bisect(|x| df * powu(x, d - 1) - (df - 1.0) * powu(x, d), u, 0.0, 1.0, ROOT_TOL)
            }
        };
        1.0 - a * x
    }

    /// Key/value fragment understood by [`ModelSpec::from_pairs`].
    pub fn to_fragment(&self) -> String {
        use core::fmt::Write;
        let mut s = String::new();
        let _ = write!(
            s,
            "variant = {}\nd = {}\nD = {}\ndelta = {:?}\n",
            self.variant, self.system_dim, self.ontic_dim, self.delta
        );
        s
    }

    /// Builds a spec from `(key, value)` pairs with keys `variant`, `d`, `D`
    /// and `delta`. Only `variant` is required; the rest default per variant
    /// (`D` defaults from `d`).
    pub fn from_pairs<'a, I>(pairs: I) -> core::result::Result<Self, ParseModelError>
    where
        I: IntoIterator<Item = (&'a str, &'a str)>,
    {
        let mut variant = None;
        let mut d = None;
        let mut big_d = None;
        let mut delta = None;
        for (k, v) in pairs {
            let v = v.trim();
            match k.trim() {
                "variant" => variant = Some(v.parse::<Variant>().map_err(|_| ParseModelError::bad("variant", v))?),
                "d" => d = Some(v.parse::<usize>().map_err(|_| ParseModelError::bad("d", v))?),
                "D" => big_d = Some(v.parse::<usize>().map_err(|_| ParseModelError::bad("D", v))?),
                "delta" => delta = Some(parse_real(v).ok_or_else(|| ParseModelError::bad("delta", v))?),
                other => return Err(ParseModelError::UnknownKey(other.to_string())),
            }
        }
        let variant = variant.ok_or(ParseModelError::MissingKey("variant"))?;
        let base = Self::default_for(variant);
        let d = d.unwrap_or(base.system_dim);
        let big_d = big_d.unwrap_or(match variant {
            Variant::UniformEmbedded => d + 1,
            _ => d,
        });
        let delta = delta.unwrap_or(base.delta);
        Self::new(variant, d, big_d, delta).map_err(ParseModelError::Invalid)
    }
}

impl fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (delta = {})", self.identifier(), self.delta)
    }
}

/// Parses `key = value` lines with `#` comments.
impl FromStr for ModelSpec {
    type Err = ParseModelError;

    fn from_str(s: &str) -> core::result::Result<Self, ParseModelError> {
        let mut pairs = alloc::vec::Vec::new();
        for line in s.lines() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| ParseModelError::bad("line", line))?;
            pairs.push((k.trim(), v.trim()));
        }
        Self::from_pairs(pairs)
    }
}

/// Parses a real number, also accepting `pi`-fractions such as `pi/4`,
/// `3*pi/8`, and `1/sqrt(3)`.
pub fn parse_real(s: &str) -> Option<f64> {
    let s = s.trim();
    if let Ok(x) = s.parse::<f64>() {
        return Some(x);
    }
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), Some(d.trim())),
        None => (s, None),
    };
    let atom = |a: &str| -> Option<f64> {
        if a == "pi" {
            return Some(core::f64::consts::PI);
        }
        if let Some(inner) = a.strip_prefix("sqrt(").and_then(|r| r.strip_suffix(')')) {
            return inner.trim().parse::<f64>().ok().filter(|x| *x >= 0.0).map(|x| x.sqrt());
        }
        a.parse::<f64>().ok()
    };
    let numerator = match num.split_once('*') {
        Some((a, b)) => atom(a.trim())? * atom(b.trim())?,
        None => atom(num)?,
    };
    match den {
        Some(d) => {
            let d = atom(d)?;
            (d != 0.0).then(|| numerator / d)
        }
        None => Some(numerator),
    }
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum ParseModelError {
    #[error("unknown model key `{0}`")]
    UnknownKey(String),
    #[error("missing required key `{0}`")]
    MissingKey(&'static str),
    #[error("invalid value `{value}` for key `{key}`")]
    BadValue { key: &'static str, value: String },
    #[error(transparent)]
    Invalid(Error),
}

impl ParseModelError {
    fn bad(key: &'static str, value: &str) -> Self {
        ParseModelError::BadValue { key, value: value.to_string() }
    }

    /// The config key this error concerns, if any.
    pub fn key(&self) -> Option<&str> {
        match self {
            ParseModelError::UnknownKey(k) => Some(k),
            ParseModelError::MissingKey(k) | ParseModelError::BadValue { key: k, .. } => Some(k),
            ParseModelError::Invalid(_) => None,
        }
    }
}

/// A normalized density `P_ψ(λ)` over ontic space, centered at a state of
/// the ontic dimension.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpistemicState {
    model: ModelSpec,
    center: PureState,
    normalization: f64,
}

impl EpistemicState {
    pub fn new(model: ModelSpec, center: PureState) -> Result<Self> {
        if center.dim() != model.ontic_dim {
            return Err(Error::DimensionMismatch { expected: model.ontic_dim, found: center.dim() });
        }
        let normalization = model.normalization()?;
        Ok(Self { model, center, normalization })
    }

    /// State for the system vector `psi` (dimension `d`), embedded into the
    /// ontic dimension.
    pub fn for_system_state(model: ModelSpec, psi: &PureState) -> Result<Self> {
        if psi.dim() != model.system_dim {
            return Err(Error::DimensionMismatch { expected: model.system_dim, found: psi.dim() });
        }
        Self::new(model, psi.embed(model.ontic_dim)?)
    }

    pub fn model(&self) -> &ModelSpec {
        &self.model
    }

    pub fn center(&self) -> &PureState {
        &self.center
    }

    pub fn normalization(&self) -> f64 {
        self.normalization
    }

    /// `N · weight(overlap(λ, center))`, a density w.r.t. the normalized
    /// Haar measure.
    pub fn density_at(&self, lambda: &PureState) -> Result<f64> {
        let t = lambda.overlap(&self.center)?;
        Ok(self.normalization * self.model.weight(t))
    }

    pub fn sample<R: Rng + ?Sized>(&self, kind: SamplerKind, rng: &mut R) -> PureState {
        match kind {
            SamplerKind::Rejection => self.sample_rejection(rng),
            SamplerKind::Conditional => self.sample_conditional(rng),
        }
    }

    pub fn sample_rejection<R: Rng + ?Sized>(&self, rng: &mut R) -> PureState {
        if self.model.variant == Variant::MarbleWorld {
            let n = self.center.bloch_vector().expect("qubit center");
            return PureState::from_bloch(&sample_marble(&n, rng));
        }
        let dim = self.model.ontic_dim;
        let wmax = self.model.weight_max();
        loop {
            let lambda = projective::haar_state(dim, rng).expect("validated dimension");
            let w = self.model.weight(lambda.overlap_unchecked(&self.center));
            if w <= 0.0 {
                continue;
            }
            if self.model.variant == Variant::UniformEmbedded || rng.random::<f64>() * wmax < w {
                return lambda;
            }
        }
    }

    pub fn sample_conditional<R: Rng + ?Sized>(&self, rng: &mut R) -> PureState {
        let t = self.model.overlap_quantile(rng.random::<f64>());
        let eta = projective::haar_orthogonal(&self.center, rng);
        let dim = self.model.ontic_dim;
        let (a, b) = (t.sqrt(), (1.0 - t).max(0.0).sqrt());
        let mut amps = [num_complex::Complex64::new(0.0, 0.0); MAX_DIM];
        for (k, z) in amps.iter_mut().enumerate().take(dim) {
            *z = self.center.amplitudes()[k] * a + eta[k] * b;
        }
        PureState::new(&amps[..dim]).expect("unit combination")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MarbleOutcome {
    Green,
    Red,
}

/// Cosine density peaked at `n` on its hemisphere, normalized against the
/// uniform probability measure on the sphere: `4 max(λ·n, 0)`.
pub fn marble_density(n: &RealSphereState, lambda: &RealSphereState) -> f64 {
    4.0 * n.dot(lambda).max(0.0)
}

/// Green iff the marble sits in the hemisphere around `m` (boundary green).
pub fn marble_outcome(lambda: &RealSphereState, m: &RealSphereState) -> MarbleOutcome {
    if lambda.dot(m) >= 0.0 {
        MarbleOutcome::Green
    } else {
        MarbleOutcome::Red
    }
}

/// Rejection sample of [`marble_density`] from uniform sphere proposals.
pub fn sample_marble<R: Rng + ?Sized>(n: &RealSphereState, rng: &mut R) -> RealSphereState {
    loop {
        let v: [f64; 3] = UnitSphere.sample(rng);
        let Ok(lambda) = RealSphereState::new(v) else { continue };
        if rng.random::<f64>() < n.dot(&lambda) {
            return lambda;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::projective::haar_state;
    use crate::stats::{ks_statistic, ks_two_sample};
    use alloc::vec::Vec;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    /// Composite midpoint rule with many panels, independent of the
    /// adaptive integrator.
    fn midpoint<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
        let h = (b - a) / n as f64;
        (0..n).map(|i| f(a + (i as f64 + 0.5) * h)).sum::<f64>() * h
    }

    fn all_specs() -> Vec<ModelSpec> {
        let mut v = alloc::vec![ModelSpec::ks_qubit(), ModelSpec::marble_world()];
        for d in 2..=4 {
            for delta in [0.0, 0.3, 0.4, 0.5, INV_SQRT_3, 2.0 / 3.0, 0.9] {
                v.push(ModelSpec::linear_trace(d, delta).unwrap());
                if delta > 0.0 {
                    v.push(ModelSpec::uniform_embedded(d, delta).unwrap());
                }
            }
        }
        v
    }

    #[test]
    fn weight_examples() {
        assert_eq!(ModelSpec::ks_qubit().weight(0.75), 0.25);
        assert_eq!(ModelSpec::linear_trace(3, INV_SQRT_3).unwrap().weight(0.5), 0.0);
        assert_eq!(ModelSpec::uniform_embedded(2, 0.6).unwrap().weight(0.61), 1.0);
        assert_eq!(ModelSpec::uniform_embedded(2, 0.6).unwrap().weight(0.6), 1.0);
        assert_eq!(ModelSpec::uniform_embedded(2, 0.6).unwrap().weight(0.59), 0.0);
    }

    #[test]
    fn normalization_examples_against_midpoint_oracle() {
        let ks = ModelSpec::ks_qubit();
        let oracle = midpoint(|t| (t - 0.5).max(0.0), 0.0, 1.0, 200_000);
        assert!((oracle - 0.125).abs() < 1e-9);
        assert!((ks.normalization().unwrap() - 8.0).abs() < 1e-12);

        for delta in [0.2, 0.5, 0.75] {
            let u = ModelSpec::uniform_embedded(2, delta).unwrap();
            let oracle = midpoint(|t| if t >= delta { 2.0 * (1.0 - t) } else { 0.0 }, delta, 1.0, 200_000);
            assert!((1.0 / oracle - u.normalization().unwrap()).abs() < 1e-6 * u.normalization().unwrap());
            assert!((u.normalization().unwrap() - 1.0 / ((1.0 - delta) * (1.0 - delta))).abs() < 1e-9);

            let l = ModelSpec::linear_trace(3, delta).unwrap();
            let oracle = midpoint(|t| (t - delta) * 2.0 * (1.0 - t), delta, 1.0, 200_000);
            assert!((1.0 / oracle - l.normalization().unwrap()).abs() < 1e-6 * l.normalization().unwrap());
            assert!((l.normalization().unwrap() - 3.0 / (1.0 - delta).powi(3)).abs() < 1e-9);
        }
    }

    #[test]
    fn normalization_integrates_to_one_for_every_spec() {
        for spec in all_specs() {
            let n = spec.normalization().unwrap();
            let total =
                quadrature::integrate(|t| n * spec.weight(t) * spec.haar_overlap_density(t), spec.delta(), 1.0, 1e-13);
            let below = quadrature::integrate(|t| spec.weight(t), 0.0, spec.delta() * (1.0 - 1e-12), 1e-13);
            assert!((total - 1.0).abs() < 1e-9, "{spec}: {total}");
            assert_eq!(below, 0.0);
            let numeric = spec.normalization_numeric().unwrap();
            assert!((numeric - n).abs() < 1e-9 * n, "{spec}");
        }
    }

    #[test]
    fn invalid_specs_rejected() {
        assert!(ModelSpec::new(Variant::KsQubit, 2, 2, 0.4).is_err());
        assert!(ModelSpec::new(Variant::KsQubit, 3, 3, 0.5).is_err());
        assert!(ModelSpec::new(Variant::LinearTrace, 3, 4, 0.5).is_err());
        assert!(ModelSpec::new(Variant::UniformEmbedded, 3, 3, 0.5).is_err());
        assert!(ModelSpec::new(Variant::UniformEmbedded, 2, 3, 0.0).is_err());
        assert!(ModelSpec::linear_trace(3, 1.0).is_err());
        assert!(ModelSpec::linear_trace(3, f64::NAN).is_err());
        assert!(ModelSpec::linear_trace(3, -0.1).is_err());
        assert_eq!(ModelSpec::linear_trace(9, 0.5), Err(Error::DimensionOutOfRange(9)));
    }

    #[test]
    fn with_delta_keeps_family() {
        let ks = ModelSpec::ks_qubit();
        assert_eq!(ks.with_delta(0.5).unwrap(), ks);
        let shifted = ks.with_delta(0.3).unwrap();
        assert_eq!(shifted.variant(), Variant::LinearTrace);
        assert_eq!((shifted.system_dim(), shifted.ontic_dim()), (2, 2));
        let u = ModelSpec::uniform_embedded(3, 0.5).unwrap().with_delta(0.6).unwrap();
        assert_eq!((u.variant(), u.ontic_dim(), u.delta()), (Variant::UniformEmbedded, 4, 0.6));
    }

    #[test]
    fn density_at_examples() {
        let psi = PureState::basis(2, 0).unwrap();
        let s = EpistemicState::new(ModelSpec::ks_qubit(), psi).unwrap();
        assert!((s.density_at(&psi).unwrap() - 4.0).abs() < 1e-12);
        assert_eq!(s.density_at(&PureState::basis(2, 1).unwrap()).unwrap(), 0.0);

        let delta = INV_SQRT_3;
        let l =
            EpistemicState::new(ModelSpec::linear_trace(3, delta).unwrap(), PureState::basis(3, 0).unwrap()).unwrap();
        let boundary = PureState::from_real(&[delta.sqrt(), (1.0 - delta).sqrt(), 0.0]).unwrap();
        assert!(l.density_at(&boundary).unwrap() < 1e-12);
        assert!(l.density_at(&PureState::basis(2, 0).unwrap()).is_err());
    }

    #[test]
    fn fragment_round_trip() {
        for spec in all_specs() {
            let parsed: ModelSpec = spec.to_fragment().parse().unwrap();
            assert_eq!(parsed, spec);
        }
        let spec: ModelSpec = "# qutrit\nvariant = linear-trace\ndelta = 1/sqrt(3)\n".parse().unwrap();
        assert_eq!(spec, ModelSpec::linear_trace(3, INV_SQRT_3).unwrap());
        let spec: ModelSpec = "variant = uniform-embedded\nd = 3".parse().unwrap();
        assert_eq!(spec.ontic_dim(), 4);
        assert_eq!("d = 3".parse::<ModelSpec>().unwrap_err(), ParseModelError::MissingKey("variant"));
        assert_eq!("variant = ks-qubit\ncolour = red".parse::<ModelSpec>().unwrap_err().key(), Some("colour"));
        assert!(matches!("variant = linear-trace\ndelta = 1.5".parse::<ModelSpec>(), Err(ParseModelError::Invalid(_))));
    }

    #[test]
    fn parse_real_forms() {
        assert_eq!(parse_real("0.25"), Some(0.25));
        assert_eq!(parse_real("pi/4"), Some(core::f64::consts::FRAC_PI_4));
        assert!((parse_real("3*pi/8").unwrap() - 3.0 * core::f64::consts::PI / 8.0).abs() < 1e-15);
        assert!((parse_real("1/sqrt(3)").unwrap() - INV_SQRT_3).abs() < 1e-15);
        assert_eq!(parse_real("pi/0"), None);
        assert_eq!(parse_real("banana"), None);
    }

    #[test]
    fn ks_qubit_mean_overlap_is_five_sixths() {
        // E[t] = ∫_{1/2}^1 t · 8(t - 1/2) dt
        let oracle = midpoint(|t| t * 8.0 * (t - 0.5), 0.5, 1.0, 100_000);
        assert!((oracle - 5.0 / 6.0).abs() < 1e-9);
        let s = EpistemicState::new(ModelSpec::ks_qubit(), PureState::basis(2, 0).unwrap()).unwrap();
        let mut r = rng(1);
        let n = 100_000;
        let ts: Vec<f64> = (0..n).map(|_| s.sample_rejection(&mut r).overlap(s.center()).unwrap()).collect();
        let mean = ts.iter().sum::<f64>() / n as f64;
        let var = ts.iter().map(|t| (t - mean) * (t - mean)).sum::<f64>() / n as f64;
        assert!((mean - oracle).abs() < 3.0 * (var / n as f64).sqrt(), "{mean}");
    }

    #[test]
    fn uniform_samples_respect_support() {
        let mut r = rng(2);
        for delta in [0.3, 0.6, 0.8] {
            let spec = ModelSpec::uniform_embedded(2, delta).unwrap();
            let psi = PureState::in_plane(2, 0.4).unwrap();
            let s = EpistemicState::for_system_state(spec, &psi).unwrap();
            for kind in [SamplerKind::Rejection, SamplerKind::Conditional] {
                for _ in 0..5_000 {
                    assert!(s.sample(kind, &mut r).overlap(s.center()).unwrap() >= delta);
                }
            }
        }
    }

    #[test]
    fn linear_trace_acceptance_rate_matches_counting() {
        let spec = ModelSpec::linear_trace(3, INV_SQRT_3).unwrap();
        let expected = (1.0 - INV_SQRT_3).powi(2) / 3.0;
        assert!((spec.acceptance_rate() - expected).abs() < 1e-15);
        let center = PureState::basis(3, 0).unwrap();
        let mut r = rng(3);
        let n = 200_000;
        let mut accepted = 0u32;
        for _ in 0..n {
            let l = haar_state(3, &mut r).unwrap();
            let w = spec.weight(l.overlap(&center).unwrap());
            if r.random::<f64>() * spec.weight_max() < w {
                accepted += 1;
            }
        }
        let p = accepted as f64 / n as f64;
        let se = (expected * (1.0 - expected) / n as f64).sqrt();
        assert!((p - expected).abs() < 3.0 * se, "{p} vs {expected}");
    }

    #[test]
    fn conditional_sample_has_drawn_overlap() {
        let mut r = rng(4);
        for spec in all_specs() {
            let center = haar_state(spec.ontic_dim(), &mut r).unwrap();
            let s = EpistemicState::new(spec, center).unwrap();
            for _ in 0..50 {
                let u: f64 = r.random();
                let t = spec.overlap_quantile(u);
                let eta = projective::haar_orthogonal(&center, &mut r);
                let dim = spec.ontic_dim();
                let amps: Vec<_> =
                    (0..dim).map(|k| center.amplitudes()[k] * t.sqrt() + eta[k] * (1.0 - t).sqrt()).collect();
                let l = PureState::new(&amps).unwrap();
                assert!((l.overlap(&center).unwrap() - t).abs() < 1e-10);
                assert!(s.density_at(&l).unwrap() >= 0.0);
            }
        }
    }

    #[test]
    fn overlap_quantiles_invert_the_cdf() {
        // ks-qubit: CDF (2t - 1)² on [1/2, 1]
        let ks = ModelSpec::ks_qubit();
        for u in [0.0, 0.1, 0.25, 0.5, 0.9, 0.999] {
            let t = ks.overlap_quantile(u);
            // quantile maps u to the upper tail: P(T ≥ t) = u
            assert!((1.0 - (2.0 * t - 1.0).powi(2) - u).abs() < 1e-12, "u={u} t={t}");
        }
        // general check via quadrature of the t-density
        for spec in all_specs() {
            let n = spec.normalization().unwrap();
            for u in [0.05, 0.3, 0.7, 0.95] {
                let t = spec.overlap_quantile(u);
                let upper = quadrature::integrate(|s| n * spec.weight(s) * spec.haar_overlap_density(s), t, 1.0, 1e-13);
                assert!((upper - u).abs() < 1e-9, "{spec} u={u}: {upper}");
            }
        }
    }

    #[test]
    fn samplers_agree_on_overlap_law() {
        let mut r = rng(5);
        for spec in [
            ModelSpec::ks_qubit(),
            ModelSpec::marble_world(),
            ModelSpec::linear_trace(3, 0.4).unwrap(),
            ModelSpec::uniform_embedded(3, 0.5).unwrap(),
        ] {
            let center = haar_state(spec.ontic_dim(), &mut r).unwrap();
            let s = EpistemicState::new(spec, center).unwrap();
            let a: Vec<f64> = (0..40_000).map(|_| s.sample_rejection(&mut r).overlap(&center).unwrap()).collect();
            let b: Vec<f64> = (0..40_000).map(|_| s.sample_conditional(&mut r).overlap(&center).unwrap()).collect();
            let d = ks_two_sample(&a, &b);
            assert!(d < 0.015, "{spec}: {d}");
        }
    }

    #[test]
    fn ks_qubit_overlap_cdf() {
        let s = EpistemicState::new(ModelSpec::ks_qubit(), PureState::basis(2, 1).unwrap()).unwrap();
        let mut r = rng(6);
        let ts: Vec<f64> = (0..50_000).map(|_| s.sample_conditional(&mut r).overlap(s.center()).unwrap()).collect();
        let ks = ks_statistic(&ts, |t| if t < 0.5 { 0.0 } else { (2.0 * t - 1.0).powi(2) });
        assert!(ks < 0.01, "{ks}");
    }

    #[test]
    fn unitary_covariance_of_sampling() {
        let mut r = rng(7);
        let spec = ModelSpec::linear_trace(3, INV_SQRT_3).unwrap();
        let psi = haar_state(3, &mut r).unwrap();
        let u = crate::projective::Unitary::haar(3, &mut r).unwrap();
        let probe = haar_state(3, &mut r).unwrap();
        let rotated = EpistemicState::new(spec, u.apply(&psi).unwrap()).unwrap();
        let original = EpistemicState::new(spec, psi).unwrap();
        let a: Vec<f64> = (0..40_000).map(|_| rotated.sample_conditional(&mut r).overlap(&probe).unwrap()).collect();
        let b: Vec<f64> = (0..40_000)
            .map(|_| u.apply(&original.sample_rejection(&mut r)).unwrap().overlap(&probe).unwrap())
            .collect();
        assert!(ks_two_sample(&a, &b) < 0.015);
    }

    #[test]
    fn marble_density_and_outcome() {
        let n = RealSphereState::new([0.0, 0.0, 1.0]).unwrap();
        assert_eq!(marble_density(&n, &n), 4.0);
        assert_eq!(marble_density(&n, &RealSphereState::new([1.0, 0.0, 0.0]).unwrap()), 0.0);
        assert_eq!(marble_density(&n, &n.antipode()), 0.0);
        let m = RealSphereState::from_angles(0.3, 1.0);
        assert_eq!(marble_outcome(&m, &m), MarbleOutcome::Green);
        assert_eq!(marble_outcome(&m.antipode(), &m), MarbleOutcome::Red);
        // density integrates to one over the uniform probability measure
        let total = midpoint(
            |c| marble_density(&n, &RealSphereState::new([(1.0 - c * c).sqrt(), 0.0, c]).unwrap()) / 2.0,
            -1.0,
            1.0,
            100_000,
        );
        assert!((total - 1.0).abs() < 1e-8);
    }

    #[test]
    fn marble_density_is_ks_density_on_bloch_sphere() {
        let mut r = rng(8);
        let ks = ModelSpec::ks_qubit();
        for _ in 0..200 {
            let psi = haar_state(2, &mut r).unwrap();
            let l = haar_state(2, &mut r).unwrap();
            let s = EpistemicState::new(ks, psi).unwrap();
            let marble = marble_density(&psi.bloch_vector().unwrap(), &l.bloch_vector().unwrap());
            assert!((marble - s.density_at(&l).unwrap()).abs() < 1e-12);
        }
    }
}
