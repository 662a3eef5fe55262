//! Pure states, unitaries and measurement contexts over small complex
//! dimensions, with Haar-measure sampling.
//!
//! Everything here is a `Copy` value backed by fixed-size arrays of
//! [`MAX_DIM`] entries; only the leading `dim` entries are meaningful.

use alloc::vec::Vec;
use core::fmt;

use num_complex::Complex64;
// needed without std; dev-dependencies link std into test builds
#[allow(unused_imports)]
use num_traits::Float as _;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

pub const MIN_DIM: usize = 2;
pub const MAX_DIM: usize = 8;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Norm below which a vector counts as zero.
pub const ZERO_NORM: f64 = 1e-14;
/// Tolerance for orthogonality of context elements and unitarity.
pub const ORTHO_TOL: f64 = 1e-10;

fn check_dim(dim: usize) -> Result<()> {
    if (MIN_DIM..=MAX_DIM).contains(&dim) {
        Ok(())
    } else {
        Err(Error::DimensionOutOfRange(dim))
    }
}

fn check_same(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm_sqr(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum()
}

pub(crate) fn gaussian_vector<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> [Complex64; MAX_DIM] {
    let mut v = [ZERO; MAX_DIM];
    for z in v.iter_mut().take(dim) {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        *z = Complex64::new(re, im);
    }
    v
}

/// A unit vector in `C^dim` modulo global phase, i.e. a rank-1 projector.
///
/// The stored amplitudes are canonical: the first component of largest
/// magnitude is real and nonnegative. Two states that differ only by a global
/// phase therefore compare equal component by component.
#[derive(Clone, Copy, PartialEq)]
pub struct PureState {
    dim: usize,
    amps: [Complex64; MAX_DIM],
}

impl PureState {
    /// Normalizes and canonicalizes `amplitudes`.
    pub fn new(amplitudes: &[Complex64]) -> Result<Self> {
        check_dim(amplitudes.len())?;
        let mut amps = [ZERO; MAX_DIM];
        amps[..amplitudes.len()].copy_from_slice(amplitudes);
        Self::from_raw(amplitudes.len(), amps)
    }

    /// Real amplitudes, a common case in tests and configs.
    pub fn from_real(amplitudes: &[f64]) -> Result<Self> {
        check_dim(amplitudes.len())?;
        let mut amps = [ZERO; MAX_DIM];
        for (z, &x) in amps.iter_mut().zip(amplitudes) {
            *z = Complex64::new(x, 0.0);
        }
        Self::from_raw(amplitudes.len(), amps)
    }

    /// `k`-th computational basis vector.
    pub fn basis(dim: usize, k: usize) -> Result<Self> {
        check_dim(dim)?;
        if k >= dim {
            return Err(Error::IndexOutOfRange { index: k, len: dim });
        }
        let mut amps = [ZERO; MAX_DIM];
        amps[k] = ONE;
        Ok(Self { dim, amps })
    }

    /// `cos θ |0⟩ + sin θ |1⟩` in dimension `dim`.
    pub fn in_plane(dim: usize, theta: f64) -> Result<Self> {
        check_dim(dim)?;
        let mut amps = [ZERO; MAX_DIM];
        amps[0] = Complex64::new(theta.cos(), 0.0);
        amps[1] = Complex64::new(theta.sin(), 0.0);
        Self::from_raw(dim, amps)
    }

    fn from_raw(dim: usize, mut amps: [Complex64; MAX_DIM]) -> Result<Self> {
        let norm = norm_sqr(&amps[..dim]).sqrt();
        if norm.is_nan() || norm < ZERO_NORM {
            return Err(Error::ZeroVector);
        }
        if (norm - 1.0).abs() > 1e-15 {
            for z in amps.iter_mut().take(dim) {
                *z /= norm;
            }
        }
        let mut s = Self { dim, amps };
        s.canonicalize();
        Ok(s)
    }

    fn canonicalize(&mut self) {
        let mut best = 0;
        let mut best_mag = -1.0;
        for (k, z) in self.amplitudes().iter().enumerate() {
            let m = z.norm_sqr();
            if m > best_mag {
                best = k;
                best_mag = m;
            }
        }
        let pivot = self.amps[best];
        let mag = pivot.norm();
        if mag > 0.0 {
            let phase = pivot.conj() / mag;
            for z in self.amps.iter_mut().take(self.dim) {
                *z *= phase;
            }
            // exact, so that re-canonicalizing is a no-op
            self.amps[best] = Complex64::new(self.amps[best].norm(), 0.0);
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps[..self.dim]
    }

    /// `⟨self|other⟩` on the canonical representatives.
    pub fn inner(&self, other: &PureState) -> Result<Complex64> {
        check_same(self.dim, other.dim)?;
        Ok(inner(self.amplitudes(), other.amplitudes()))
    }

    /// `Tr(λ₁λ₂) = |⟨a|b⟩|²`.
    pub fn overlap(&self, other: &PureState) -> Result<f64> {
        Ok(self.inner(other)?.norm_sqr().min(1.0))
    }

    /// Overlap without the dimension check, for hot loops where dimensions
    /// were validated up front.
    #[inline]
    pub(crate) fn overlap_unchecked(&self, other: &PureState) -> f64 {
        inner(self.amplitudes(), other.amplitudes()).norm_sqr()
    }

    /// `1 - Tr(λ₁λ₂)`.
    pub fn distance(&self, other: &PureState) -> Result<f64> {
        Ok(1.0 - self.overlap(other)?)
    }

    /// Pads with zeros to `target_dim`.
    pub fn embed(&self, target_dim: usize) -> Result<PureState> {
        check_dim(target_dim)?;
        if target_dim < self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: target_dim });
        }
        Ok(PureState { dim: target_dim, amps: self.amps })
    }

    /// Keeps the leading `dim` amplitudes and renormalizes.
    pub fn project(&self, dim: usize) -> Result<PureState> {
        check_dim(dim)?;
        if dim > self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: dim });
        }
        PureState::new(&self.amps[..dim])
    }

    /// Squared weight of the leading `dim` amplitudes.
    pub fn weight_in_leading(&self, dim: usize) -> f64 {
        norm_sqr(&self.amps[..dim.min(self.dim)])
    }

    /// Multiplies every amplitude by `phase` and re-canonicalizes.
    pub fn with_phase(&self, phase: Complex64) -> Result<PureState> {
        let mut amps = self.amps;
        for z in amps.iter_mut().take(self.dim) {
            *z *= phase;
        }
        Self::from_raw(self.dim, amps)
    }

    /// Bloch vector of a qubit state.
    pub fn bloch_vector(&self) -> Result<RealSphereState> {
        check_same(2, self.dim)?;
        let (a, b) = (self.amps[0], self.amps[1]);
        let ab = a.conj() * b;
        Ok(RealSphereState::new_unchecked([2.0 * ab.re, 2.0 * ab.im, a.norm_sqr() - b.norm_sqr()]))
    }

    /// Qubit state with the given Bloch vector.
    pub fn from_bloch(v: &RealSphereState) -> PureState {
        let [x, y, z] = v.vector();
        let half = z.clamp(-1.0, 1.0).acos() / 2.0;
        let phi = y.atan2(x);
        let mut amps = [ZERO; MAX_DIM];
        amps[0] = Complex64::new(half.cos(), 0.0);
        amps[1] = Complex64::from_polar(half.sin(), phi);
        Self::from_raw(2, amps).expect("Bloch vector yields a unit state")
    }
}

impl fmt::Debug for PureState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.amplitudes()).finish()
    }
}

/// Draws a state from the unitarily invariant measure on `CP^{dim-1}`.
pub fn haar_state<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Result<PureState> {
    check_dim(dim)?;
    loop {
        let v = gaussian_vector(dim, rng);
        match PureState::from_raw(dim, v) {
            Ok(s) => return Ok(s),
            Err(Error::ZeroVector) => continue,
            Err(e) => return Err(e),
        }
    }
}

/// Haar-random unit vector orthogonal to `center`, as raw amplitudes.
pub(crate) fn haar_orthogonal<R: Rng + ?Sized>(center: &PureState, rng: &mut R) -> [Complex64; MAX_DIM] {
    let dim = center.dim;
    loop {
        let mut v = gaussian_vector(dim, rng);
        for _ in 0..2 {
            let c = inner(center.amplitudes(), &v[..dim]);
            for (x, a) in v.iter_mut().zip(&center.amps[..dim]) {
                *x -= c * a;
            }
        }
        let n = norm_sqr(&v[..dim]).sqrt();
        if n > 1e-8 {
            for z in v.iter_mut().take(dim) {
                *z /= n;
            }
            return v;
        }
    }
}

/// Orthonormalizes `cols` in place (two Gram–Schmidt passes). Returns false if
/// a column collapsed to zero.
fn gram_schmidt(dim: usize, cols: &mut [[Complex64; MAX_DIM]]) -> bool {
    for j in 0..cols.len() {
        for _ in 0..2 {
            for i in 0..j {
                let c = inner(&cols[i][..dim], &cols[j][..dim]);
                let prev = cols[i];
                for k in 0..dim {
                    cols[j][k] -= c * prev[k];
                }
            }
        }
        let n = norm_sqr(&cols[j][..dim]).sqrt();
        if n < 1e-8 {
            return false;
        }
        for z in cols[j].iter_mut().take(dim) {
            *z /= n;
        }
    }
    true
}

/// A `dim × dim` unitary matrix.
#[derive(Clone, Copy, PartialEq)]
pub struct Unitary {
    dim: usize,
    /// column-major: `cols[j][i]` is entry `(i, j)`
    cols: [[Complex64; MAX_DIM]; MAX_DIM],
}

impl Unitary {
    pub fn identity(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        let mut cols = [[ZERO; MAX_DIM]; MAX_DIM];
        for (j, c) in cols.iter_mut().enumerate().take(dim) {
            c[j] = ONE;
        }
        Ok(Self { dim, cols })
    }

    /// Builds from row-major entries; fails unless `U†U = 1` within 1e-10.
    pub fn from_rows(rows: &[&[Complex64]]) -> Result<Self> {
        let dim = rows.len();
        check_dim(dim)?;
        let mut cols = [[ZERO; MAX_DIM]; MAX_DIM];
        for (i, row) in rows.iter().enumerate() {
            check_same(dim, row.len())?;
            for (j, &z) in row.iter().enumerate() {
                cols[j][i] = z;
            }
        }
        let u = Self { dim, cols };
        let err = u.unitarity_error();
        if err > ORTHO_TOL {
            return Err(Error::NotOrthogonal(err));
        }
        Ok(u)
    }

    /// Haar-random unitary via Gram–Schmidt on a Ginibre matrix.
    pub fn haar<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Result<Self> {
        check_dim(dim)?;
        let mut cols = [[ZERO; MAX_DIM]; MAX_DIM];
        loop {
            for c in cols.iter_mut().take(dim) {
                *c = gaussian_vector(dim, rng);
            }
            if gram_schmidt(dim, &mut cols[..dim]) {
                return Ok(Self { dim, cols });
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        self.cols[col][row]
    }

    /// Max entrywise deviation of `U†U` from the identity.
    pub fn unitarity_error(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.dim {
            for j in 0..self.dim {
                let g = inner(&self.cols[i][..self.dim], &self.cols[j][..self.dim]);
                let target = if i == j { ONE } else { ZERO };
                worst = worst.max((g - target).norm());
            }
        }
        worst
    }

    fn apply_raw(&self, v: &[Complex64]) -> [Complex64; MAX_DIM] {
        let mut out = [ZERO; MAX_DIM];
        for (j, &x) in v.iter().enumerate() {
            for (o, u) in out.iter_mut().zip(&self.cols[j][..self.dim]) {
                *o += u * x;
            }
        }
        out
    }

    pub fn apply(&self, s: &PureState) -> Result<PureState> {
        check_same(self.dim, s.dim)?;
        PureState::from_raw(self.dim, self.apply_raw(s.amplitudes()))
    }

    pub fn apply_context(&self, c: &Context) -> Result<Context> {
        check_same(self.dim, c.ontic_dim())?;
        let elements = c.elements().iter().map(|e| self.apply(e)).collect::<Result<Vec<_>>>()?;
        Context::new(c.system_dim(), elements)
    }

    /// Product `self · other`.
    pub fn compose(&self, other: &Unitary) -> Result<Unitary> {
        check_same(self.dim, other.dim)?;
        let mut cols = [[ZERO; MAX_DIM]; MAX_DIM];
        for (j, c) in cols.iter_mut().enumerate().take(self.dim) {
            *c = self.apply_raw(&other.cols[j][..self.dim]);
        }
        Ok(Unitary { dim: self.dim, cols })
    }
}

impl fmt::Debug for Unitary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut l = f.debug_list();
        for i in 0..self.dim {
            let row: Vec<Complex64> = (0..self.dim).map(|j| self.entry(i, j)).collect();
            l.entry(&row);
        }
        l.finish()
    }
}

/// `U·s`, re-canonicalized.
pub fn apply_unitary(u: &Unitary, s: &PureState) -> Result<PureState> {
    u.apply(s)
}

pub fn rotate_context(u: &Unitary, c: &Context) -> Result<Context> {
    u.apply_context(c)
}

/// Orthonormal basis whose first column is `axis`; the remaining columns come
/// from Gram–Schmidt on the computational basis, so the result is
/// deterministic.
fn basis_through(axis: &PureState) -> [[Complex64; MAX_DIM]; MAX_DIM] {
    let dim = axis.dim;
    let mut cols = [[ZERO; MAX_DIM]; MAX_DIM];
    cols[0] = axis.amps;
    let mut filled = 1;
    for k in 0..dim {
        if filled == dim {
            break;
        }
        cols[filled] = [ZERO; MAX_DIM];
        cols[filled][k] = ONE;
        if gram_schmidt(dim, &mut cols[..=filled]) {
            filled += 1;
        }
    }
    debug_assert_eq!(filled, dim);
    cols
}

/// `B · diag(1, W) · B†` where `B` is a basis through the axis.
fn conjugate_block(axis: &PureState, w: &Unitary) -> Unitary {
    let dim = axis.dim;
    let b = basis_through(axis);
    let mut mid = [[ZERO; MAX_DIM]; MAX_DIM];
    mid[0][0] = ONE;
    for j in 0..w.dim {
        for i in 0..w.dim {
            mid[j + 1][i + 1] = w.cols[j][i];
        }
    }
    let mut cols = [[ZERO; MAX_DIM]; MAX_DIM];
    // column j of B·M·B† = Σ_k (B·M)_{:,k} conj(B_{j,k})
    for j in 0..dim {
        for k in 0..dim {
            let coeff = b[k][j].conj();
            for l in 0..dim {
                let bm = mid[k][l];
                if bm == ZERO {
                    continue;
                }
                for i in 0..dim {
                    cols[j][i] += b[l][i] * bm * coeff;
                }
            }
        }
    }
    Unitary { dim, cols }
}

/// How a unitary fixing an axis acts on the axis' orthogonal complement.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum AxisRotation {
    /// Haar-random unitary on the complement.
    Haar,
    /// Rotation by the given angle in the plane of the first two complement
    /// basis vectors (a phase when the complement is one-dimensional).
    Angle(f64),
}

/// A unitary `U` with `U·axis = axis`, acting on the complement as described
/// by `rotation`.
pub fn unitary_fixing_axis<R: Rng + ?Sized>(axis: &PureState, rotation: AxisRotation, rng: &mut R) -> Unitary {
    let dim = axis.dim;
    let sub = dim - 1;
    let w = match rotation {
        AxisRotation::Haar if sub == 1 => {
            let phi: f64 = rng.random::<f64>() * core::f64::consts::TAU;
            let mut cols = [[ZERO; MAX_DIM]; MAX_DIM];
            cols[0][0] = Complex64::from_polar(1.0, phi);
            Unitary { dim: 1, cols }
        }
        AxisRotation::Haar => Unitary::haar(sub, rng).expect("complement dimension in range"),
        AxisRotation::Angle(a) => {
            let mut cols = [[ZERO; MAX_DIM]; MAX_DIM];
            if sub == 1 {
                cols[0][0] = Complex64::from_polar(1.0, a);
            } else {
                let (s, c) = a.sin_cos();
                for (k, col) in cols.iter_mut().enumerate().take(sub) {
                    col[k] = ONE;
                }
                cols[0][0] = Complex64::new(c, 0.0);
                cols[0][1] = Complex64::new(s, 0.0);
                cols[1][0] = Complex64::new(-s, 0.0);
                cols[1][1] = Complex64::new(c, 0.0);
            }
            Unitary { dim: sub, cols }
        }
    };
    conjugate_block(axis, &w)
}

/// An ordered set of `system_dim` mutually orthogonal states in `C^ontic_dim`.
/// Outcome indices refer to list positions.
#[derive(Clone, PartialEq)]
pub struct Context {
    system_dim: usize,
    elements: Vec<PureState>,
}

impl Context {
    pub fn new(system_dim: usize, elements: Vec<PureState>) -> Result<Self> {
        check_dim(system_dim)?;
        check_same(system_dim, elements.len())?;
        let ontic = elements[0].dim;
        if ontic < system_dim {
            return Err(Error::DimensionMismatch { expected: system_dim, found: ontic });
        }
        for e in &elements {
            check_same(ontic, e.dim)?;
        }
        for i in 0..elements.len() {
            for j in i + 1..elements.len() {
                let o = elements[i].overlap_unchecked(&elements[j]);
                if o > ORTHO_TOL {
                    return Err(Error::NotOrthogonal(o));
                }
            }
        }
        Ok(Self { system_dim, elements })
    }

    /// Computational basis of `C^system_dim`, embedded into `C^ontic_dim`.
    pub fn computational(system_dim: usize, ontic_dim: usize) -> Result<Self> {
        check_dim(ontic_dim)?;
        let elements =
            (0..system_dim).map(|k| PureState::basis(system_dim, k)?.embed(ontic_dim)).collect::<Result<Vec<_>>>()?;
        Self::new(system_dim, elements)
    }

    /// Columns of `u` as a context, embedded into `C^ontic_dim`.
    pub fn from_unitary(u: &Unitary, ontic_dim: usize) -> Result<Self> {
        let elements =
            (0..u.dim).map(|j| PureState::new(&u.cols[j][..u.dim])?.embed(ontic_dim)).collect::<Result<Vec<_>>>()?;
        Self::new(u.dim, elements)
    }

    /// Full context whose first element is `first`, completed
    /// deterministically by Gram–Schmidt on the computational basis.
    pub fn completing(first: &PureState) -> Result<Self> {
        let dim = first.dim;
        let b = basis_through(first);
        let mut elements = Vec::with_capacity(dim);
        elements.push(*first);
        for col in b.iter().take(dim).skip(1) {
            elements.push(PureState::from_raw(dim, *col)?);
        }
        Self::new(dim, elements)
    }

    pub fn system_dim(&self) -> usize {
        self.system_dim
    }

    pub fn ontic_dim(&self) -> usize {
        self.elements[0].dim
    }

    pub fn elements(&self) -> &[PureState] {
        &self.elements
    }

    pub fn element(&self, i: usize) -> Result<&PureState> {
        self.elements.get(i).ok_or(Error::IndexOutOfRange { index: i, len: self.system_dim })
    }

    /// A copy with the span of `self` rotated by a Haar-random unitary that
    /// fixes element `axis`. For full contexts this is
    /// [`unitary_fixing_axis`]; for embedded ones the rotation stays inside
    /// the embedded subspace.
    pub fn rotated_about<R: Rng + ?Sized>(&self, axis: usize, rng: &mut R) -> Result<Context> {
        let pivot = *self.element(axis)?;
        if self.system_dim == self.ontic_dim() {
            let u = unitary_fixing_axis(&pivot, AxisRotation::Haar, rng);
            return u.apply_context(self);
        }
        let others: Vec<&PureState> =
            self.elements.iter().enumerate().filter(|(k, _)| *k != axis).map(|(_, e)| e).collect();
        let sub = others.len();
        let w = if sub == 1 {
            let phi: f64 = rng.random::<f64>() * core::f64::consts::TAU;
            let mut cols = [[ZERO; MAX_DIM]; MAX_DIM];
            cols[0][0] = Complex64::from_polar(1.0, phi);
            Unitary { dim: 1, cols }
        } else {
            Unitary::haar(sub, rng)?
        };
        let dim = self.ontic_dim();
        let mut rotated = Vec::with_capacity(sub);
        for j in 0..sub {
            let mut v = [ZERO; MAX_DIM];
            for (k, e) in others.iter().enumerate() {
                let c = w.cols[j][k];
                for (x, a) in v.iter_mut().zip(&e.amps[..dim]) {
                    *x += c * a;
                }
            }
            rotated.push(PureState::from_raw(dim, v)?);
        }
        let mut elements = Vec::with_capacity(self.system_dim);
        let mut it = rotated.into_iter();
        for k in 0..self.system_dim {
            elements.push(if k == axis { pivot } else { it.next().expect("one per other element") });
        }
        Context::new(self.system_dim, elements)
    }
}

impl fmt::Debug for Context {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Context").field("system_dim", &self.system_dim).field("elements", &self.elements).finish()
    }
}

/// First `system_dim` columns of a Haar unitary, embedded into `ontic_dim`.
pub fn haar_context<R: Rng + ?Sized>(system_dim: usize, ontic_dim: usize, rng: &mut R) -> Result<Context> {
    check_dim(ontic_dim)?;
    if ontic_dim < system_dim {
        return Err(Error::DimensionMismatch { expected: system_dim, found: ontic_dim });
    }
    let u = Unitary::haar(system_dim, rng)?;
    Context::from_unitary(&u, ontic_dim)
}

/// A point on the real unit 2-sphere.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RealSphereState {
    v: [f64; 3],
}

impl RealSphereState {
    pub fn new(v: [f64; 3]) -> Result<Self> {
        let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if n.is_nan() || n < ZERO_NORM {
            return Err(Error::ZeroVector);
        }
        Ok(Self { v: [v[0] / n, v[1] / n, v[2] / n] })
    }

    fn new_unchecked(v: [f64; 3]) -> Self {
        Self::new(v).expect("nonzero vector")
    }

    /// `[sin θ cos φ, sin θ sin φ, cos θ]`.
    pub fn from_angles(theta: f64, phi: f64) -> Self {
        let (st, ct) = theta.sin_cos();
        let (sp, cp) = phi.sin_cos();
        Self { v: [st * cp, st * sp, ct] }
    }

    pub fn vector(&self) -> [f64; 3] {
        self.v
    }

    pub fn dot(&self, other: &RealSphereState) -> f64 {
        self.v[0] * other.v[0] + self.v[1] * other.v[1] + self.v[2] * other.v[2]
    }

    pub fn antipode(&self) -> RealSphereState {
        Self { v: [-self.v[0], -self.v[1], -self.v[2]] }
    }
}
