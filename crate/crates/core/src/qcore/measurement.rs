use alloc::vec::Vec;

use super::linalg::{
    hermitian_eigen, identity, is_hermitian, max_abs_diff, partial_trace_b_with, trace_product,
};
use super::state::DensityMatrix;
use super::{cr, CMatrix, RMatrix, C64};
use crate::error::{bail, Result};
use crate::tol;

/// Anything that can be written as a list of effect operators on `C^d`.
pub trait Effects {
    fn dim(&self) -> usize;
    fn effects(&self) -> Vec<CMatrix>;
}

impl Effects for [CMatrix] {
    fn dim(&self) -> usize {
        self.first().map_or(0, |m| m.nrows())
    }

    fn effects(&self) -> Vec<CMatrix> {
        self.to_vec()
    }
}

impl Effects for Vec<CMatrix> {
    fn dim(&self) -> usize {
        self.as_slice().dim()
    }

    fn effects(&self) -> Vec<CMatrix> {
        self.clone()
    }
}

/// Orthogonal projectors summing to the identity.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectiveMeasurement {
    dim: usize,
    projectors: Vec<CMatrix>,
}

impl ProjectiveMeasurement {
    pub fn new(projectors: Vec<CMatrix>) -> Result<Self> {
        let Some(first) = projectors.first() else {
            bail!(InvalidArgument, "measurement has no outcomes");
        };
        let dim = first.nrows();
        if dim == 0 {
            bail!(InvalidDimension, "projectors must be non-empty");
        }
        let mut sum = CMatrix::zeros(dim, dim);
        for (a, p) in projectors.iter().enumerate() {
            if p.nrows() != dim || p.ncols() != dim {
                bail!(InvalidArgument, "projector {a} has shape {:?}", p.shape());
            }
            if !is_hermitian(p, tol::STRUCT) {
                bail!(InvalidArgument, "projector {a} is not Hermitian");
            }
            if max_abs_diff(&(p * p), p) > tol::STRUCT {
                bail!(InvalidArgument, "projector {a} is not idempotent");
            }
            for (b, q) in projectors.iter().enumerate().skip(a + 1) {
                if (p * q).iter().any(|z| z.norm() > tol::STRUCT) {
                    bail!(InvalidArgument, "projectors {a} and {b} are not orthogonal");
                }
            }
            sum += p;
        }
        if max_abs_diff(&sum, &identity(dim)) > tol::STRUCT {
            bail!(InvalidArgument, "projectors do not sum to the identity");
        }
        Ok(Self { dim, projectors })
    }

    /// Rank-one projectors onto the columns of a unitary.
    pub fn from_basis(unitary: &CMatrix) -> Result<Self> {
        let projectors = unitary
            .column_iter()
            .map(|col| col * col.adjoint())
            .collect();
        Self::new(projectors)
    }

    pub fn computational(d: usize) -> Result<Self> {
        if d == 0 {
            bail!(InvalidDimension, "d must be at least 1");
        }
        Self::from_basis(&identity(d))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.projectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.projectors.is_empty()
    }

    pub fn projectors(&self) -> &[CMatrix] {
        &self.projectors
    }

    /// `{U P U†}`.
    pub fn rotated(&self, u: &CMatrix) -> Self {
        Self {
            dim: self.dim,
            projectors: self
                .projectors
                .iter()
                .map(|p| u * p * u.adjoint())
                .collect(),
        }
    }

    /// `{P*}`: the elementwise conjugate, equal to `Pᵀ` for Hermitian `P`.
    pub fn conjugated(&self) -> Self {
        Self {
            dim: self.dim,
            projectors: self
                .projectors
                .iter()
                .map(|p| p.map(|z| z.conj()))
                .collect(),
        }
    }
}

impl Effects for ProjectiveMeasurement {
    fn dim(&self) -> usize {
        self.dim
    }

    fn effects(&self) -> Vec<CMatrix> {
        self.projectors.clone()
    }
}

/// `P(a, b) = tr(ρ M_a ⊗ N_b)`.
pub fn joint_prob<M, N>(rho: &DensityMatrix, m: &M, n: &N) -> Result<RMatrix>
where
    M: Effects + ?Sized,
    N: Effects + ?Sized,
{
    let d = rho.local_dim()?;
    if m.dim() != d || n.dim() != d {
        bail!(
            InvalidArgument,
            "measurement dimensions ({}, {}) do not match state dimension {d}",
            m.dim(),
            n.dim()
        );
    }
    let ms = m.effects();
    let ns = n.effects();
    let mut out = RMatrix::zeros(ms.len(), ns.len());
    for (b, nb) in ns.iter().enumerate() {
        let x = partial_trace_b_with(rho.entries(), nb, d);
        for (a, ma) in ms.iter().enumerate() {
            out[(a, b)] = trace_product(ma, &x).re;
        }
    }
    Ok(out)
}

/// Closed form for the isotropic state:
/// `(p/d) tr(Q_aᵀ R_b) + (1 − p) tr(Q_a) tr(R_b) / d²`.
pub fn iso_joint_closed(
    d: usize,
    p: f64,
    q: &ProjectiveMeasurement,
    r: &ProjectiveMeasurement,
) -> Result<RMatrix> {
    if q.dim() != d || r.dim() != d {
        bail!(InvalidArgument, "measurements must act on C^{d}");
    }
    if !(0.0..=1.0).contains(&p) {
        bail!(InvalidParameter, "p = {p} outside [0, 1]");
    }
    let df = d as f64;
    let mut out = RMatrix::zeros(q.len(), r.len());
    for (a, qa) in q.projectors().iter().enumerate() {
        let qa_t = qa.transpose();
        let tr_q = qa.trace().re;
        for (b, rb) in r.projectors().iter().enumerate() {
            let overlap = trace_product(&qa_t, rb).re;
            out[(a, b)] = p / df * overlap + (1.0 - p) * tr_q * rb.trace().re / (df * df);
        }
    }
    Ok(out)
}

/// Effects factored into weighted rank-one pieces, so that
/// `⟨λ|E_k|λ⟩ = Σ |⟨f|λ⟩|²` over the pieces `f` of outcome `k`.
///
/// This is the hot path of every Monte Carlo kernel.
#[derive(Debug, Clone)]
pub struct QuadForms {
    dim: usize,
    outcomes: usize,
    rows: Vec<C64>,
    owner: Vec<usize>,
}

impl QuadForms {
    pub fn from_effects(effects: &[CMatrix]) -> Self {
        let dim = effects.first().map_or(0, |m| m.nrows());
        let mut rows = Vec::new();
        let mut owner = Vec::new();
        for (k, e) in effects.iter().enumerate() {
            let (vals, vecs) = hermitian_eigen(e);
            for (i, &v) in vals.iter().enumerate() {
                if v > tol::NORM {
                    let s = libm::sqrt(v);
                    rows.extend(vecs.column(i).iter().map(|z| z * cr(s)));
                    owner.push(k);
                }
            }
        }
        Self {
            dim,
            outcomes: effects.len(),
            rows,
            owner,
        }
    }

    /// Forms for `{E_kᵀ}`, i.e. the conjugated effects.
    pub fn from_effects_transposed(effects: &[CMatrix]) -> Self {
        let conj: Vec<CMatrix> = effects.iter().map(|e| e.map(|z| z.conj())).collect();
        Self::from_effects(&conj)
    }

    /// Rank-one forms from explicit (weight, vector) pairs: `E_k = c_k |v_k⟩⟨v_k|`.
    pub fn from_rank_one(weights: &[f64], vectors: &[&[C64]], conjugate: bool) -> Self {
        let dim = vectors.first().map_or(0, |v| v.len());
        let mut rows = Vec::with_capacity(dim * vectors.len());
        for (&w, v) in weights.iter().zip(vectors) {
            let s = libm::sqrt(w.max(0.0));
            rows.extend(
                v.iter()
                    .map(|z| if conjugate { z.conj() } else { *z } * cr(s)),
            );
        }
        Self {
            dim,
            outcomes: weights.len(),
            rows,
            owner: (0..weights.len()).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn outcomes(&self) -> usize {
        self.outcomes
    }

    /// Writes `⟨λ|E_k|λ⟩` into `out[k]`.
    #[inline]
    pub fn eval(&self, lambda: &[C64], out: &mut [f64]) {
        out[..self.outcomes].fill(0.0);
        for (row, &k) in self.rows.chunks_exact(self.dim).zip(&self.owner) {
            let mut re = 0.0;
            let mut im = 0.0;
            for (f, l) in row.iter().zip(lambda) {
                // conj(f) * l
                re += f.re * l.re + f.im * l.im;
                im += f.re * l.im - f.im * l.re;
            }
            out[k] += re * re + im * im;
        }
    }
}
