//! Local model for isotropic states under general measurements.
//!
//! Every POVM is first refined into weighted rank-one effects
//! `M_a = c_a |v_a⟩⟨v_a|` ([`refine_povm`]); coarse-graining the refined
//! outcomes recovers the original statistics. Alice keeps the Born-rule
//! response `⟨λ|M_aᵀ|λ⟩`. Bob uses the Heaviside response
//!
//! `P(b|λ) = ⟨λ|N_b|λ⟩ Θ(⟨λ|R_b|λ⟩ − 1/d) + (c_b/d) [1 − Σ_k ⟨λ|N_k|λ⟩ Θ(⟨λ|R_k|λ⟩ − 1/d)]`
//!
//! with `R_b = |v_b⟩⟨v_b|` and `Θ(x) = 1` iff `x > 0`. The model reproduces
//! the isotropic state at weight [`p_phi_povm`].

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::{bail, Result};
use crate::model::{IsotropicKernel, LocalModel};
use crate::montecarlo::{run_serial, McConfig, McEstimate};
use crate::nielsen::{completed_weight, schmidt_frame, NielsenKernel};
use crate::qcore::{
    c, cr, fill_haar, hermitian_eigen, is_hermitian, BipartitePureState, CMatrix, CVector, Effects,
    HiddenVariable, ProjectiveMeasurement, QuadForms, RMatrix, C64,
};
use crate::tol;

/// Weighted rank-one effects `c_k |v_k⟩⟨v_k|` summing to the identity.
#[derive(Debug, Clone, PartialEq)]
pub struct RankOnePovm {
    dim: usize,
    weights: Vec<f64>,
    directions: Vec<CVector>,
}

impl RankOnePovm {
    pub fn new(weights: Vec<f64>, directions: Vec<CVector>) -> Result<Self> {
        if weights.is_empty() || weights.len() != directions.len() {
            bail!(InvalidArgument, "need one direction per weight");
        }
        let dim = directions[0].len();
        if dim == 0 {
            bail!(InvalidDimension, "directions must be non-empty");
        }
        let mut sum = CMatrix::zeros(dim, dim);
        for (k, (w, v)) in weights.iter().zip(&directions).enumerate() {
            if v.len() != dim {
                bail!(InvalidArgument, "direction {k} has length {}", v.len());
            }
            if *w < 0.0 || !w.is_finite() {
                bail!(InvalidArgument, "weight {k} is {w}");
            }
            if (v.norm_squared() - 1.0).abs() > tol::NORM {
                bail!(InvalidArgument, "direction {k} is not a unit vector");
            }
            sum += v * v.adjoint() * cr(*w);
        }
        let err = (sum - CMatrix::identity(dim, dim))
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        if err > tol::STRUCT {
            bail!(InvalidArgument, "effects miss the identity by {err}");
        }
        Ok(Self {
            dim,
            weights,
            directions,
        })
    }

    pub fn from_projective(m: &ProjectiveMeasurement) -> Result<Self> {
        let (povm, map) = refine_povm(m.projectors())?;
        if map.fine_outcomes() != m.len() {
            bail!(InvalidArgument, "projective measurement is not rank one");
        }
        Ok(povm)
    }

    pub fn computational(d: usize) -> Result<Self> {
        Self::from_projective(&ProjectiveMeasurement::computational(d)?)
    }

    /// Qubit state with Bloch angles `(theta, phi)`.
    fn bloch(theta: f64, phi: f64) -> CVector {
        CVector::from_vec(vec![
            cr(libm::cos(theta / 2.0)),
            c(libm::cos(phi), libm::sin(phi)) * libm::sin(theta / 2.0),
        ])
    }

    /// Three real qubit states at 120° on the Bloch circle, weights 2/3.
    pub fn trine() -> Self {
        let directions = (0..3)
            .map(|j| Self::bloch(2.0 * core::f64::consts::PI * j as f64 / 3.0, 0.0))
            .collect();
        Self::new(vec![2.0 / 3.0; 3], directions).expect("trine is complete")
    }

    /// Symmetric informationally complete qubit POVM, weights 1/2.
    pub fn tetrahedral() -> Self {
        let theta = libm::acos(-1.0 / 3.0);
        let two_pi_3 = 2.0 * core::f64::consts::PI / 3.0;
        let directions = vec![
            Self::bloch(0.0, 0.0),
            Self::bloch(theta, 0.0),
            Self::bloch(theta, two_pi_3),
            Self::bloch(theta, 2.0 * two_pi_3),
        ];
        Self::new(vec![0.5; 4], directions).expect("tetrahedron is complete")
    }

    /// `k ≥ d` Haar directions with random weights, made complete by
    /// `S^{-1/2} M_k S^{-1/2}`, `S = Σ M_k`. Elements stay rank one.
    pub fn random<R: Rng + ?Sized>(d: usize, k: usize, rng: &mut R) -> Result<Self> {
        if d == 0 {
            bail!(InvalidDimension, "d must be at least 1");
        }
        if k < d {
            bail!(InvalidArgument, "need at least d = {d} elements, got {k}");
        }
        loop {
            let raw: Vec<CVector> = (0..k)
                .map(|_| {
                    let mut buf = vec![c(0.0, 0.0); d];
                    fill_haar(rng, &mut buf);
                    let w: f64 = rng.random_range(0.1..1.0);
                    CVector::from_vec(buf) * cr(libm::sqrt(w))
                })
                .collect();
            let mut s = CMatrix::zeros(d, d);
            raw.iter().for_each(|v| s += v * v.adjoint());
            let (vals, vecs) = hermitian_eigen(&s);
            if vals[0] < 1e-6 {
                continue;
            }
            let inv_sqrt = CVector::from_iterator(d, vals.iter().map(|&x| cr(1.0 / libm::sqrt(x))));
            let s_inv_sqrt = &vecs * CMatrix::from_diagonal(&inv_sqrt) * vecs.adjoint();
            let mut weights = Vec::with_capacity(k);
            let mut directions = Vec::with_capacity(k);
            for v in &raw {
                let u = &s_inv_sqrt * v;
                let n = u.norm();
                weights.push(n * n);
                directions.push(u.unscale(n));
            }
            return Self::new(weights, directions);
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn directions(&self) -> &[CVector] {
        &self.directions
    }

    /// `{U M_k U†}`.
    pub fn rotated(&self, u: &CMatrix) -> Self {
        Self {
            dim: self.dim,
            weights: self.weights.clone(),
            directions: self.directions.iter().map(|v| u * v).collect(),
        }
    }

    fn direction_slices(&self) -> Vec<&[C64]> {
        self.directions.iter().map(|v| v.as_slice()).collect()
    }
}

impl Effects for RankOnePovm {
    fn dim(&self) -> usize {
        self.dim
    }

    fn effects(&self) -> Vec<CMatrix> {
        self.weights
            .iter()
            .zip(&self.directions)
            .map(|(w, v)| v * v.adjoint() * cr(*w))
            .collect()
    }
}

/// Maps refined outcomes back onto the outcomes of the original POVM.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoarseGraining {
    map: Vec<usize>,
    coarse: usize,
}

impl CoarseGraining {
    pub fn new(map: Vec<usize>, coarse: usize) -> Result<Self> {
        if let Some(&bad) = map.iter().find(|&&m| m >= coarse) {
            bail!(InvalidArgument, "coarse index {bad} out of range {coarse}");
        }
        Ok(Self { map, coarse })
    }

    pub fn map(&self) -> &[usize] {
        &self.map
    }

    pub fn fine_outcomes(&self) -> usize {
        self.map.len()
    }

    pub fn coarse_outcomes(&self) -> usize {
        self.coarse
    }

    pub fn coarse_grain(&self, fine: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.coarse];
        for (&m, &p) in self.map.iter().zip(fine) {
            out[m] += p;
        }
        out
    }

    /// Coarse-grains rows with `self` and columns with `cols`.
    pub fn coarse_grain_joint(&self, fine: &RMatrix, cols: &CoarseGraining) -> RMatrix {
        let mut out = RMatrix::zeros(self.coarse, cols.coarse);
        for (a, &ma) in self.map.iter().enumerate() {
            for (b, &mb) in cols.map.iter().enumerate() {
                out[(ma, mb)] += fine[(a, b)];
            }
        }
        out
    }
}

/// Splits each PSD element into its weighted eigenprojectors.
pub fn refine_povm(elements: &[CMatrix]) -> Result<(RankOnePovm, CoarseGraining)> {
    let Some(first) = elements.first() else {
        bail!(InvalidArgument, "POVM has no elements");
    };
    let d = first.nrows();
    let mut weights = Vec::new();
    let mut directions = Vec::new();
    let mut map = Vec::new();
    let mut sum = CMatrix::zeros(d, d);
    for (m, e) in elements.iter().enumerate() {
        if e.shape() != (d, d) {
            bail!(InvalidArgument, "element {m} has shape {:?}", e.shape());
        }
        if !is_hermitian(e, tol::STRUCT) {
            bail!(InvalidArgument, "element {m} is not Hermitian");
        }
        let (vals, vecs) = hermitian_eigen(e);
        if vals[0] < tol::PSD {
            bail!(InvalidArgument, "element {m} has eigenvalue {}", vals[0]);
        }
        for (i, &v) in vals.iter().enumerate() {
            if v > tol::NORM {
                let dir: CVector = vecs.column(i).into_owned();
                let n = dir.norm();
                weights.push(v);
                directions.push(dir.unscale(n));
                map.push(m);
            }
        }
        sum += e;
    }
    let err = (sum - CMatrix::identity(d, d))
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max);
    if err > tol::STRUCT {
        bail!(InvalidArgument, "POVM elements miss the identity by {err}");
    }
    Ok((
        RankOnePovm::new(weights, directions)?,
        CoarseGraining::new(map, elements.len())?,
    ))
}

fn check_dim(m: &RankOnePovm, lambda: &HiddenVariable) -> Result<()> {
    if m.dim() != lambda.dim() {
        bail!(
            InvalidArgument,
            "POVM on C^{} applied to C^{}",
            m.dim(),
            lambda.dim()
        );
    }
    Ok(())
}

/// `P_M(a|λ) = ⟨λ|M_aᵀ|λ⟩ = c_a |⟨v_a*|λ⟩|²`.
pub fn alice_response_povm(m: &RankOnePovm, lambda: &HiddenVariable) -> Result<Vec<f64>> {
    check_dim(m, lambda)?;
    let l = lambda.as_vector();
    Ok(m.weights()
        .iter()
        .zip(m.directions())
        .map(|(w, v)| {
            // ⟨v*|λ⟩ = Σ_j v_j λ_j
            let amp: C64 = v.iter().zip(l.iter()).map(|(a, b)| a * b).sum();
            w * amp.norm_sqr()
        })
        .collect())
}

#[inline]
fn heaviside(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else {
        0.0
    }
}

/// Bob's Heaviside response from the overlaps `o_b = ⟨λ|R_b|λ⟩`.
#[inline]
fn bob_from_overlaps(weights: &[f64], overlaps: &[f64], d: usize, out: &mut [f64]) {
    let inv_d = 1.0 / d as f64;
    let mut fired = 0.0;
    for ((o, &w), &ov) in out.iter_mut().zip(weights).zip(overlaps) {
        let t = w * ov * heaviside(ov - inv_d);
        *o = t;
        fired += t;
    }
    let rest = 1.0 - fired;
    for (o, &w) in out.iter_mut().zip(weights) {
        *o += w * inv_d * rest;
    }
}

/// Bracket `1 − Σ_k ⟨λ|N_k|λ⟩ Θ(⟨λ|R_k|λ⟩ − 1/d)` of Bob's response.
pub fn bob_remainder(n: &RankOnePovm, lambda: &HiddenVariable) -> Result<f64> {
    check_dim(n, lambda)?;
    let d = n.dim() as f64;
    let l = lambda.as_vector();
    Ok(1.0
        - n.weights()
            .iter()
            .zip(n.directions())
            .map(|(w, v)| {
                let ov = v.dotc(l).norm_sqr();
                w * ov * heaviside(ov - 1.0 / d)
            })
            .sum::<f64>())
}

pub fn bob_response_povm(n: &RankOnePovm, lambda: &HiddenVariable) -> Result<Vec<f64>> {
    check_dim(n, lambda)?;
    let l = lambda.as_vector();
    let overlaps: Vec<f64> = n
        .directions()
        .iter()
        .map(|v| v.dotc(l).norm_sqr())
        .collect();
    let mut out = vec![0.0; n.len()];
    bob_from_overlaps(n.weights(), &overlaps, n.dim(), &mut out);
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct PovmModel {
    dim: usize,
    alice: QuadForms,
    bob_dirs: QuadForms,
    bob_weights: Vec<f64>,
}

impl PovmModel {
    pub fn new(m: &RankOnePovm, n: &RankOnePovm) -> Result<Self> {
        if m.dim() != n.dim() {
            bail!(
                InvalidArgument,
                "Alice acts on C^{}, Bob on C^{}",
                m.dim(),
                n.dim()
            );
        }
        let ones = vec![1.0; n.len()];
        Ok(Self {
            dim: m.dim(),
            alice: QuadForms::from_rank_one(m.weights(), &m.direction_slices(), true),
            bob_dirs: QuadForms::from_rank_one(&ones, &n.direction_slices(), false),
            bob_weights: n.weights().to_vec(),
        })
    }
}

impl LocalModel for PovmModel {
    fn dim(&self) -> usize {
        self.dim
    }

    fn outcomes(&self) -> (usize, usize) {
        (self.alice.outcomes(), self.bob_weights.len())
    }

    #[inline]
    fn alice(&self, lambda: &[C64], out: &mut [f64]) {
        self.alice.eval(lambda, out);
    }

    #[inline]
    fn bob(&self, lambda: &[C64], work: &mut [f64], out: &mut [f64]) {
        self.bob_dirs.eval(lambda, work);
        bob_from_overlaps(&self.bob_weights, work, self.dim, out);
    }
}

pub fn joint_kernel(m: &RankOnePovm, n: &RankOnePovm) -> Result<IsotropicKernel<PovmModel>> {
    Ok(IsotropicKernel::new(PovmModel::new(m, n)?))
}

pub fn mc_joint_povm(m: &RankOnePovm, n: &RankOnePovm, cfg: &McConfig) -> Result<McEstimate> {
    Ok(run_serial(&joint_kernel(m, n)?, cfg))
}

/// Nielsen-extended POVM model for target `psi`.
pub fn extended_kernel(
    psi: &BipartitePureState,
    m: &RankOnePovm,
    n: &RankOnePovm,
) -> Result<NielsenKernel<PovmModel>> {
    let (form, ops) = schmidt_frame(psi)?;
    if m.dim() != ops.d() || n.dim() != ops.d() {
        bail!(InvalidArgument, "POVM dimension does not match the state");
    }
    let m_s = m.rotated(&form.basis_a().adjoint());
    let n_s = n.rotated(&form.basis_b().adjoint());
    NielsenKernel::new(ops, PovmModel::new(&m_s, &n_s)?)
}

pub fn mc_joint_extended_povm(
    psi: &BipartitePureState,
    m: &RankOnePovm,
    n: &RankOnePovm,
    cfg: &McConfig,
) -> Result<McEstimate> {
    Ok(run_serial(&extended_kernel(psi, m, n)?, cfg))
}

/// `(3d − 1)(d − 1)^{d−1} / ((d + 1) d^d)`.
pub fn p_phi_povm(d: usize) -> Result<f64> {
    if d < 2 {
        bail!(InvalidDimension, "p_phi_povm requires d ≥ 2, got {d}");
    }
    let df = d as f64;
    // ((d − 1)/d)^{d−1} / d, evaluated in log space for large d.
    let pow = libm::exp((df - 1.0) * libm::log1p(-1.0 / df));
    Ok((3.0 * df - 1.0) / (df + 1.0) * pow / df)
}

/// Noise-completed threshold for the POVM model.
pub fn p_rho_povm(d: usize) -> Result<f64> {
    Ok(completed_weight(p_phi_povm(d)?, d))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::{haar_state, haar_unitary, isotropic_state, joint_prob};
    use crate::rng::RngStream;

    fn normalized(p: &[f64]) -> bool {
        p.iter().all(|&x| x >= -1e-12) && (p.iter().sum::<f64>() - 1.0).abs() < 1e-12
    }

    #[test]
    fn refine_examples() {
        let z = ProjectiveMeasurement::computational(3).unwrap();
        let (povm, map) = refine_povm(z.projectors()).unwrap();
        assert_eq!(map.map(), &[0, 1, 2]);
        assert!(povm.weights().iter().all(|w| (w - 1.0).abs() < 1e-12));

        let trine = RankOnePovm::trine();
        let (fine, map) = refine_povm(&trine.effects()).unwrap();
        assert_eq!(fine.len(), 3);
        assert_eq!(map.map(), &[0, 1, 2]);
        assert!(fine.weights().iter().all(|w| (w - 2.0 / 3.0).abs() < 1e-12));

        let half = CMatrix::identity(2, 2) * cr(0.5);
        let (fine, map) = refine_povm(&[half.clone(), half]).unwrap();
        assert_eq!(fine.len(), 4);
        assert!(fine.weights().iter().all(|w| (w - 0.5).abs() < 1e-12));
        assert_eq!(map.map(), &[0, 0, 1, 1]);
    }

    #[test]
    fn refine_rejects_invalid() {
        let neg = CMatrix::from_diagonal(&CVector::from_vec(vec![cr(1.2), cr(-0.2)]));
        let rest = CMatrix::from_diagonal(&CVector::from_vec(vec![cr(-0.2), cr(1.2)]));
        assert!(refine_povm(&[neg, rest]).is_err());
        let part = CMatrix::identity(2, 2) * cr(0.4);
        assert!(refine_povm(&[part.clone(), part]).is_err());
    }

    #[test]
    fn refine_round_trip() {
        let mut rng = RngStream::new(44, 0);
        for d in 2..5 {
            // coarse POVM: pair up elements of a random rank-one POVM
            let fine = RankOnePovm::random(d, 2 * d, &mut rng).unwrap();
            let effects = fine.effects();
            let coarse: Vec<CMatrix> = effects.chunks(2).map(|p| &p[0] + &p[1]).collect();
            let (refined, map) = refine_povm(&coarse).unwrap();
            let psi = haar_state(d, &mut rng).unwrap();
            let state = psi.as_vector();
            let direct: Vec<f64> = coarse.iter().map(|e| state.dotc(&(e * state)).re).collect();
            let fine_p: Vec<f64> = refined
                .effects()
                .iter()
                .map(|e| state.dotc(&(e * state)).re)
                .collect();
            let back = map.coarse_grain(&fine_p);
            for (x, y) in direct.iter().zip(&back) {
                assert!((x - y).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn standard_povms_are_complete() {
        assert_eq!(RankOnePovm::trine().len(), 3);
        assert_eq!(RankOnePovm::tetrahedral().len(), 4);
        let sum: f64 = RankOnePovm::tetrahedral().weights().iter().sum();
        assert!((sum - 2.0).abs() < 1e-12);
    }

    #[test]
    fn alice_examples() {
        let z = ProjectiveMeasurement::computational(3).unwrap();
        let m = RankOnePovm::from_projective(&z).unwrap();
        let mut rng = RngStream::new(1, 0);
        let lam = haar_state(3, &mut rng).unwrap();
        let proj = crate::projective::alice_response(&z, &lam).unwrap();
        let povm = alice_response_povm(&m, &lam).unwrap();
        for (a, b) in proj.iter().zip(&povm) {
            assert!((a - b).abs() < 1e-12);
        }
        let e0 = HiddenVariable::basis(3, 0).unwrap();
        let p = alice_response_povm(&m, &e0).unwrap();
        assert!((p[0] - 1.0).abs() < 1e-15 && p[1].abs() < 1e-15);
        let r = RankOnePovm::random(3, 5, &mut rng).unwrap();
        assert!(normalized(&alice_response_povm(&r, &lam).unwrap()));
    }

    #[test]
    fn bob_examples() {
        let z = RankOnePovm::computational(2).unwrap();
        let e0 = HiddenVariable::basis(2, 0).unwrap();
        let p = bob_response_povm(&z, &e0).unwrap();
        assert!((p[0] - 1.0).abs() < 1e-15 && p[1].abs() < 1e-15);
        assert!(bob_remainder(&z, &e0).unwrap().abs() < 1e-15);
    }

    #[test]
    fn responses_are_distributions() {
        let mut rng = RngStream::new(77, 0);
        for d in 2..6 {
            for _ in 0..500 {
                let k = rng.random_range(d..=2 * d + 2);
                let m = RankOnePovm::random(d, k, &mut rng).unwrap();
                let lam = haar_state(d, &mut rng).unwrap();
                assert!(normalized(&alice_response_povm(&m, &lam).unwrap()));
                assert!(normalized(&bob_response_povm(&m, &lam).unwrap()));
                assert!(bob_remainder(&m, &lam).unwrap() >= -1e-12);
            }
        }
    }

    #[test]
    fn bob_covariance() {
        let mut rng = RngStream::new(78, 0);
        for d in 2..5 {
            for _ in 0..50 {
                let n = RankOnePovm::random(d, d + 2, &mut rng).unwrap();
                let u = haar_unitary(d, &mut rng).unwrap();
                let lam = haar_state(d, &mut rng).unwrap();
                let lhs = bob_response_povm(&n.rotated(&u.adjoint()), &lam).unwrap();
                let rhs = bob_response_povm(&n, &lam.rotated(&u)).unwrap();
                for (x, y) in lhs.iter().zip(&rhs) {
                    assert!((x - y).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn model_matches_direct_responses() {
        let mut rng = RngStream::new(79, 0);
        let m = RankOnePovm::random(3, 4, &mut rng).unwrap();
        let n = RankOnePovm::random(3, 5, &mut rng).unwrap();
        let model = PovmModel::new(&m, &n).unwrap();
        let mut a = [0.0; 4];
        let mut b = [0.0; 5];
        let mut w = [0.0; 5];
        for _ in 0..100 {
            let lam = haar_state(3, &mut rng).unwrap();
            model.alice(lam.as_slice(), &mut a);
            model.bob(lam.as_slice(), &mut w, &mut b);
            let da = alice_response_povm(&m, &lam).unwrap();
            let db = bob_response_povm(&n, &lam).unwrap();
            assert!(a.iter().zip(&da).all(|(x, y)| (x - y).abs() < 1e-12));
            assert!(b.iter().zip(&db).all(|(x, y)| (x - y).abs() < 1e-12));
        }
    }

    #[test]
    fn thresholds() {
        assert!((p_phi_povm(2).unwrap() - 5.0 / 12.0).abs() < 1e-15);
        assert!((p_phi_povm(3).unwrap() - 8.0 / 27.0).abs() < 1e-15);
        let d = 10_000usize;
        let ratio = p_phi_povm(d).unwrap() * core::f64::consts::E * d as f64 / 3.0;
        assert!((ratio - 1.0).abs() < 0.01, "ratio {ratio}");
        assert!((p_rho_povm(2).unwrap() - 5.0 / 19.0).abs() < 1e-15);
        assert!((p_rho_povm(3).unwrap() - 8.0 / 65.0).abs() < 1e-15);
        let ratio = p_rho_povm(d).unwrap() * core::f64::consts::E * (d as f64).powi(2) / 3.0;
        assert!((ratio - 1.0).abs() < 0.05);
        assert!(p_phi_povm(1).is_err() && p_rho_povm(0).is_err());
    }

    #[test]
    fn small_run_matches_isotropic() {
        let z = RankOnePovm::computational(2).unwrap();
        let cfg = McConfig::new(100_000, 2, 10_000).unwrap();
        let est = mc_joint_povm(&z, &z, &cfg).unwrap();
        let oracle = joint_prob(&isotropic_state(2, 5.0 / 12.0).unwrap(), &z, &z).unwrap();
        assert!(est.max_sigma_deviation(&oracle) < 5.0);
    }
}
