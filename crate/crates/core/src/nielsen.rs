//! Extension of the isotropic model to arbitrary pure states.
//!
//! Write `ψ = Σ_j ν_j |jj⟩` in its Schmidt basis. With the cyclic shifts
//! `Π_i = Σ_j |j⟩⟨j+i|` and `A_i = D_ν Π_i` one has
//! `ψ = √d (A_i ⊗ Π_i) φ_d` for every `i`. The source draws a Haar `λ`,
//! simulates the measurement `{A_i*}` on it, and hands Alice
//! `A_i* λ / √q_i` and Bob `Π_i λ`. Feeding these to the isotropic response
//! functions reproduces the state `p_φ |ψ⟩⟨ψ| + (1 − p_φ) σ ⊗ 1/d`.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::{bail, Result};
use crate::model::{outer_into, LocalModel, ModelScratch};
use crate::montecarlo::{run_serial, McConfig, McEstimate, SampleKernel};
use crate::projective::{p_phi, ProjectiveModel};
use crate::qcore::{
    c, cr, fill_haar, kron, max_abs_diff, max_entangled, reduced_density, schmidt,
    BipartitePureState, CMatrix, CVector, DensityMatrix, HiddenVariable, ProjectiveMeasurement,
    SchmidtForm, C64,
};
use crate::tol;

/// `Π_i` with `Π_i |k⟩ = |k − i mod d⟩`.
pub fn cyclic_shift(d: usize, i: usize) -> CMatrix {
    let mut m = CMatrix::zeros(d, d);
    for j in 0..d {
        m[(j, (j + i) % d)] = cr(1.0);
    }
    m
}

#[derive(Debug, Clone, PartialEq)]
pub struct NielsenOperators {
    nu: Vec<f64>,
    a: Vec<CMatrix>,
    w: Vec<CMatrix>,
}

impl NielsenOperators {
    pub fn d(&self) -> usize {
        self.nu.len()
    }

    pub fn nu(&self) -> &[f64] {
        &self.nu
    }

    /// `A_i = D_ν Π_i`.
    pub fn a(&self) -> &[CMatrix] {
        &self.a
    }

    /// `W_i = A_i† A_i`.
    pub fn w(&self) -> &[CMatrix] {
        &self.w
    }

    /// `σ = D_ν²`, the reduced state in the Schmidt basis.
    pub fn sigma(&self) -> CMatrix {
        CMatrix::from_diagonal(&CVector::from_iterator(
            self.d(),
            self.nu.iter().map(|v| cr(v * v)),
        ))
    }

    /// `q_i(λ) = ⟨λ|A_iᵀ A_i*|λ⟩ = Σ_j ν_j² |λ_{j+i}|²`.
    #[inline]
    pub fn branch_weights(&self, lambda: &[C64], out: &mut [f64]) {
        let d = self.d();
        for (i, q) in out.iter_mut().enumerate().take(d) {
            let mut acc = 0.0;
            for (j, nu) in self.nu.iter().enumerate() {
                acc += nu * nu * lambda[(j + i) % d].norm_sqr();
            }
            *q = acc;
        }
    }

    /// Writes `A_i* λ / √q` and `Π_i λ`.
    #[inline]
    pub fn split(
        &self,
        branch: usize,
        q: f64,
        lambda: &[C64],
        lambda_a: &mut [C64],
        lambda_b: &mut [C64],
    ) {
        let d = self.d();
        let inv = 1.0 / libm::sqrt(q);
        for j in 0..d {
            let shifted = lambda[(j + branch) % d];
            lambda_b[j] = shifted;
            lambda_a[j] = shifted * (self.nu[j] * inv);
        }
    }
}

pub fn nielsen_operators(nu: &[f64]) -> Result<NielsenOperators> {
    let d = nu.len();
    if d == 0 {
        bail!(InvalidDimension, "empty Schmidt vector");
    }
    if nu.iter().any(|&v| v < 0.0 || !v.is_finite()) {
        bail!(InvalidArgument, "Schmidt coefficients must be nonnegative");
    }
    let n2: f64 = nu.iter().map(|v| v * v).sum();
    if (n2 - 1.0).abs() > tol::NORM {
        bail!(InvalidArgument, "Σ ν² = {n2}, expected 1");
    }
    let d_nu = CMatrix::from_diagonal(&CVector::from_iterator(d, nu.iter().map(|&v| cr(v))));
    let a: Vec<CMatrix> = (0..d).map(|i| &d_nu * cyclic_shift(d, i)).collect();
    let w = a.iter().map(|ai| ai.adjoint() * ai).collect();
    Ok(NielsenOperators {
        nu: nu.to_vec(),
        a,
        w,
    })
}

/// Residuals of the four operator identities behind the extension, each a
/// max-abs (or vector 2-norm) deviation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdentityResiduals {
    /// `Σ_i W_i = 1`.
    pub completeness: f64,
    /// `√d (A_i ⊗ Π_i) φ_d = ψ` in the Schmidt frame, worst `i`.
    pub reconstruction: f64,
    /// `⟨φ_d|W_i ⊗ 1|φ_d⟩ = 1/d`, worst `i`.
    pub overlap: f64,
    /// `Σ_i A_i A_i† = d σ`.
    pub sigma: f64,
}

impl IdentityResiduals {
    pub fn max(&self) -> f64 {
        self.completeness
            .max(self.reconstruction)
            .max(self.overlap)
            .max(self.sigma)
    }
}

pub fn identity_residuals(ops: &NielsenOperators) -> Result<IdentityResiduals> {
    let d = ops.d();
    let target = BipartitePureState::from_schmidt_coefficients(ops.nu())?;
    let phi = max_entangled(d)?;
    let id = CMatrix::identity(d, d);
    let scale = cr(libm::sqrt(d as f64));
    let mut sum_w = CMatrix::zeros(d, d);
    let mut sum_aa = CMatrix::zeros(d, d);
    let mut reconstruction: f64 = 0.0;
    let mut overlap: f64 = 0.0;
    for i in 0..d {
        let mapped = kron(&ops.a[i], &cyclic_shift(d, i)) * phi.amplitudes() * scale;
        reconstruction = reconstruction.max((&mapped - target.amplitudes()).norm());
        let o = phi
            .amplitudes()
            .dotc(&(kron(&ops.w[i], &id) * phi.amplitudes()));
        overlap = overlap.max((o - cr(1.0 / d as f64)).norm());
        sum_w += &ops.w[i];
        sum_aa += &ops.a[i] * ops.a[i].adjoint();
    }
    Ok(IdentityResiduals {
        completeness: max_abs_diff(&sum_w, &id),
        reconstruction,
        overlap,
        sigma: max_abs_diff(&sum_aa, &(ops.sigma() * cr(d as f64))),
    })
}

/// Outcome of the simulated source measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceSample {
    pub branch: usize,
    pub lambda_a: HiddenVariable,
    pub lambda_b: HiddenVariable,
    pub weight: f64,
}

/// Inverse-CDF draw over branches heavier than [`tol::BRANCH`].
#[inline]
pub(crate) fn draw_branch<R: Rng + ?Sized>(rng: &mut R, weights: &[f64]) -> usize {
    let total: f64 = weights.iter().filter(|&&q| q >= tol::BRANCH).sum();
    let target = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut last = 0;
    for (i, &q) in weights.iter().enumerate() {
        if q < tol::BRANCH {
            continue;
        }
        acc += q;
        last = i;
        if target < acc {
            return i;
        }
    }
    last
}

pub fn source_step<R: Rng + ?Sized>(
    lambda: &HiddenVariable,
    ops: &NielsenOperators,
    rng: &mut R,
) -> Result<SourceSample> {
    let d = ops.d();
    if lambda.dim() != d {
        bail!(
            InvalidArgument,
            "hidden variable in C^{} for operators on C^{d}",
            lambda.dim()
        );
    }
    let mut weights = vec![0.0; d];
    ops.branch_weights(lambda.as_slice(), &mut weights);
    let branch = draw_branch(rng, &weights);
    let mut la = vec![c(0.0, 0.0); d];
    let mut lb = vec![c(0.0, 0.0); d];
    ops.split(branch, weights[branch], lambda.as_slice(), &mut la, &mut lb);
    Ok(SourceSample {
        branch,
        lambda_a: HiddenVariable::from_trusted(CVector::from_vec(la)),
        lambda_b: HiddenVariable::from_trusted(CVector::from_vec(lb)),
        weight: weights[branch],
    })
}

/// `w |ψ⟩⟨ψ| + (1 − w) σ ⊗ 1/d`: the state reproduced by the extended model
/// when the isotropic model works at weight `w`.
pub fn source_noisy_state(psi: &BipartitePureState, w: f64) -> Result<DensityMatrix> {
    let d = psi.square_dim()?;
    if !(0.0..=1.0).contains(&w) {
        bail!(InvalidParameter, "weight {w} outside [0, 1]");
    }
    let sigma = reduced_density(psi);
    let local = kron(
        sigma.entries(),
        &(CMatrix::identity(d, d) * cr(1.0 / d as f64)),
    );
    let pure = psi.projector();
    Ok(DensityMatrix::from_trusted(
        pure.entries() * cr(w) + local * cr(1.0 - w),
    ))
}

/// `ρ̃ = p_φ |ψ⟩⟨ψ| + (1 − p_φ) σ ⊗ 1/d`.
pub fn tilde_rho(psi: &BipartitePureState) -> Result<DensityMatrix> {
    let d = psi.square_dim()?;
    source_noisy_state(psi, p_phi(d)?)
}

/// Source measurement followed by an isotropic-state local model.
#[derive(Debug, Clone)]
pub struct NielsenKernel<M> {
    ops: NielsenOperators,
    model: M,
}

impl<M: LocalModel> NielsenKernel<M> {
    /// `model` must already act in the Schmidt basis of the target state.
    pub fn new(ops: NielsenOperators, model: M) -> Result<Self> {
        if ops.d() != model.dim() {
            bail!(
                InvalidArgument,
                "operators on C^{} with a model on C^{}",
                ops.d(),
                model.dim()
            );
        }
        Ok(Self { ops, model })
    }
}

impl<M: LocalModel> SampleKernel for NielsenKernel<M> {
    type Scratch = ModelScratch;

    fn shape(&self) -> (usize, usize) {
        self.model.outcomes()
    }

    fn scratch(&self) -> ModelScratch {
        ModelScratch::new(&self.model)
    }

    #[inline]
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R, s: &mut ModelScratch, cells: &mut [f64]) {
        fill_haar(rng, &mut s.lambda);
        self.ops.branch_weights(&s.lambda, &mut s.branch);
        let i = draw_branch(rng, &s.branch);
        self.ops
            .split(i, s.branch[i], &s.lambda, &mut s.lambda_a, &mut s.lambda_b);
        self.model.alice(&s.lambda_a, &mut s.alice);
        self.model.bob(&s.lambda_b, &mut s.work, &mut s.bob);
        outer_into(&s.alice, &s.bob, cells);
    }
}

/// Schmidt form of `psi` together with its Nielsen operators.
pub fn schmidt_frame(psi: &BipartitePureState) -> Result<(SchmidtForm, NielsenOperators)> {
    let form = schmidt(psi)?;
    let ops = nielsen_operators(form.coefficients())?;
    Ok((form, ops))
}

/// Kernel of the extended projective model for target `psi` and
/// measurements `q`, `r` given in the computational frame. The measurements
/// are rotated into the Schmidt frame of `psi`.
pub fn extended_kernel(
    psi: &BipartitePureState,
    q: &ProjectiveMeasurement,
    r: &ProjectiveMeasurement,
) -> Result<NielsenKernel<ProjectiveModel>> {
    let (form, ops) = schmidt_frame(psi)?;
    if q.dim() != ops.d() || r.dim() != ops.d() {
        bail!(
            InvalidArgument,
            "measurement dimension does not match the state"
        );
    }
    let q_s = q.rotated(&form.basis_a().adjoint());
    let r_s = r.rotated(&form.basis_b().adjoint());
    NielsenKernel::new(ops, ProjectiveModel::new(&q_s, &r_s)?)
}

pub fn mc_joint_extended(
    psi: &BipartitePureState,
    q: &ProjectiveMeasurement,
    r: &ProjectiveMeasurement,
    cfg: &McConfig,
) -> Result<McEstimate> {
    Ok(run_serial(&extended_kernel(psi, q, r)?, cfg))
}

/// `σ_k = Σ_j μ²_{j+k} |a_j⟩⟨a_j|` for `k = 0..d`, in the computational frame.
pub fn shifted_reduced_states(psi: &BipartitePureState) -> Result<Vec<DensityMatrix>> {
    let form = schmidt(psi)?;
    let d = form.dim();
    let u = form.basis_a();
    let mu2: Vec<f64> = form.coefficients().iter().map(|v| v * v).collect();
    Ok((0..d)
        .map(|k| {
            let diag = CVector::from_iterator(d, (0..d).map(|j| cr(mu2[(j + k) % d])));
            DensityMatrix::from_trusted(u * CMatrix::from_diagonal(&diag) * u.adjoint())
        })
        .collect())
}

/// `w / ((1 − w)(d − 1) + 1)`: white-noise weight after completing the local
/// noise of a model that works at weight `w`.
pub fn completed_weight(w: f64, d: usize) -> f64 {
    w / ((1.0 - w) * (d - 1) as f64 + 1.0)
}

/// `p_ρ = p_φ / ((1 − p_φ)(d − 1) + 1)`.
pub fn p_rho(d: usize) -> Result<f64> {
    Ok(completed_weight(p_phi(d)?, d))
}

/// Mixes `ρ̃` with the remaining cyclic shifts of `σ` to reach
/// `p |ψ⟩⟨ψ| + (1 − p) 1/d²`. Returns the state, `p` and the mixing weight
/// `q` of `ρ̃`, which satisfies `q (1 − p_φ) = (1 − q)/(d − 1)`.
pub fn noise_completion(psi: &BipartitePureState) -> Result<(DensityMatrix, f64, f64)> {
    noise_completion_with(psi, p_phi(psi.square_dim()?)?)
}

/// [`noise_completion`] for a model working at weight `w`.
pub fn noise_completion_with(
    psi: &BipartitePureState,
    w: f64,
) -> Result<(DensityMatrix, f64, f64)> {
    let d = psi.square_dim()?;
    if d < 2 {
        bail!(InvalidDimension, "noise completion needs d ≥ 2");
    }
    let q = 1.0 / ((1.0 - w) * (d - 1) as f64 + 1.0);
    let tilde = source_noisy_state(psi, w)?;
    let shifts = shifted_reduced_states(psi)?;
    let half = CMatrix::identity(d, d) * cr(1.0 / d as f64);
    let mut rest = CMatrix::zeros(d, d);
    for s in &shifts[1..] {
        rest += s.entries();
    }
    let out = tilde.entries() * cr(q) + kron(&rest, &half) * cr((1.0 - q) / (d - 1) as f64);
    Ok((DensityMatrix::from_trusted(out), q * w, q))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::{haar_state, isotropic_state, max_entangled, noisy_state};
    use crate::rng::RngStream;

    fn max_diff(a: &CMatrix, b: &CMatrix) -> f64 {
        a.iter()
            .zip(b.iter())
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max)
    }

    fn random_pure(d: usize, rng: &mut RngStream) -> BipartitePureState {
        let v = haar_state(d * d, rng).unwrap();
        BipartitePureState::normalized(d, d, v.as_vector().clone()).unwrap()
    }

    #[test]
    fn maximally_entangled_operators() {
        for d in 2..6 {
            let nu = vec![1.0 / libm::sqrt(d as f64); d];
            let ops = nielsen_operators(&nu).unwrap();
            for i in 0..d {
                let want = cyclic_shift(d, i) * cr(1.0 / libm::sqrt(d as f64));
                assert!(max_diff(&ops.a()[i], &want) < 1e-15);
                assert!(
                    max_diff(&ops.w()[i], &(CMatrix::identity(d, d) * cr(1.0 / d as f64))) < 1e-15
                );
            }
        }
    }

    #[test]
    fn qubit_operators() {
        let ops = nielsen_operators(&[libm::sqrt(0.9), libm::sqrt(0.1)]).unwrap();
        let w0 = CMatrix::from_diagonal(&CVector::from_vec(vec![cr(0.9), cr(0.1)]));
        let w1 = CMatrix::from_diagonal(&CVector::from_vec(vec![cr(0.1), cr(0.9)]));
        assert!(max_diff(&ops.w()[0], &w0) < 1e-15);
        assert!(max_diff(&ops.w()[1], &w1) < 1e-15);
        assert!(nielsen_operators(&[0.9, 0.1]).is_err());
        assert!(nielsen_operators(&[1.0, -0.0001]).is_err());
    }

    #[test]
    fn identity_residuals_vanish() {
        let mut rng = RngStream::new(32, 0);
        for d in 2..6 {
            let psi = random_pure(d, &mut rng);
            let (_, ops) = schmidt_frame(&psi).unwrap();
            assert!(identity_residuals(&ops).unwrap().max() < 1e-12);
        }
    }

    #[test]
    fn operator_identities() {
        let mut rng = RngStream::new(31, 0);
        for d in 2..6 {
            for _ in 0..10 {
                let psi = random_pure(d, &mut rng);
                let form = schmidt(&psi).unwrap();
                let ops = nielsen_operators(form.coefficients()).unwrap();
                let target =
                    BipartitePureState::from_schmidt_coefficients(form.coefficients()).unwrap();
                let phi = max_entangled(d).unwrap();
                let mut sum_w = CMatrix::zeros(d, d);
                let mut sum_aa = CMatrix::zeros(d, d);
                for i in 0..d {
                    let mapped = kron(&ops.a()[i], &cyclic_shift(d, i))
                        * phi.amplitudes()
                        * cr(libm::sqrt(d as f64));
                    let diff = (&mapped - target.amplitudes()).norm();
                    assert!(diff < 1e-10);
                    let overlap = phi
                        .amplitudes()
                        .dotc(&(kron(&ops.w()[i], &CMatrix::identity(d, d)) * phi.amplitudes()));
                    assert!((overlap.re - 1.0 / d as f64).abs() < 1e-12);
                    sum_w += &ops.w()[i];
                    sum_aa += &ops.a()[i] * ops.a()[i].adjoint();
                }
                assert!(max_diff(&sum_w, &CMatrix::identity(d, d)) < 1e-10);
                assert!(max_diff(&sum_aa, &(ops.sigma() * cr(d as f64))) < 1e-10);
            }
        }
    }

    #[test]
    fn branch_weights_match_matrix_form() {
        let mut rng = RngStream::new(8, 0);
        for d in 2..6 {
            let psi = random_pure(d, &mut rng);
            let ops = nielsen_operators(schmidt(&psi).unwrap().coefficients()).unwrap();
            let lam = haar_state(d, &mut rng).unwrap();
            let mut q = vec![0.0; d];
            ops.branch_weights(lam.as_slice(), &mut q);
            for (qi, a) in q.iter().zip(ops.a()) {
                let a_conj = a.map(|z| z.conj());
                let direct = lam
                    .as_vector()
                    .dotc(&(a.transpose() * &a_conj * lam.as_vector()))
                    .re;
                assert!((qi - direct).abs() < 1e-12);
            }
            assert!((q.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn source_step_examples() {
        let mut rng = RngStream::new(4, 0);
        let ops = nielsen_operators(&[1.0 / libm::sqrt(3.0); 3]).unwrap();
        let lam = haar_state(3, &mut rng).unwrap();
        let mut q = [0.0; 3];
        ops.branch_weights(lam.as_slice(), &mut q);
        assert!(q.iter().all(|&x| (x - 1.0 / 3.0).abs() < 1e-12));

        let product = nielsen_operators(&[1.0, 0.0]).unwrap();
        let e0 = HiddenVariable::basis(2, 0).unwrap();
        for _ in 0..20 {
            let s = source_step(&e0, &product, &mut rng).unwrap();
            assert_eq!(s.branch, 0);
            assert!((s.weight - 1.0).abs() < 1e-15);
            assert!((s.lambda_a.as_slice()[0].norm() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_branches_never_drawn() {
        let mut rng = RngStream::new(6, 0);
        let ops = nielsen_operators(&[libm::sqrt(0.5), libm::sqrt(0.5), 0.0]).unwrap();
        let lam = HiddenVariable::basis(3, 2).unwrap();
        // q = (0, 0.5, 0.5)
        for _ in 0..200 {
            let s = source_step(&lam, &ops, &mut rng).unwrap();
            assert_ne!(s.branch, 0);
            assert!((s.lambda_a.as_vector().norm() - 1.0).abs() < 1e-12);
            assert!((s.lambda_b.as_vector().norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn tilde_rho_examples() {
        let t = tilde_rho(&max_entangled(2).unwrap()).unwrap();
        assert!(max_diff(t.entries(), isotropic_state(2, 0.5).unwrap().entries()) < 1e-15);

        let prod = BipartitePureState::from_schmidt_coefficients(&[1.0, 0.0]).unwrap();
        let t = tilde_rho(&prod).unwrap();
        let mut want = CMatrix::zeros(4, 4);
        want[(0, 0)] = cr(0.5 + 0.25);
        want[(1, 1)] = cr(0.25);
        assert!(max_diff(t.entries(), &want) < 1e-15);

        let mut rng = RngStream::new(10, 0);
        for d in 2..6 {
            for _ in 0..50 {
                let t = tilde_rho(&random_pure(d, &mut rng)).unwrap();
                assert!(DensityMatrix::new(t.into_inner()).is_ok());
            }
        }
    }

    #[test]
    fn shifted_states_sum_to_identity() {
        let mut rng = RngStream::new(12, 0);
        for d in 2..7 {
            let shifts = shifted_reduced_states(&random_pure(d, &mut rng)).unwrap();
            let mut sum = CMatrix::zeros(d, d);
            shifts.iter().for_each(|s| sum += s.entries());
            assert!(max_diff(&sum, &CMatrix::identity(d, d)) < 1e-12);
        }
    }

    #[test]
    fn noise_completion_identity() {
        let mut rng = RngStream::new(14, 0);
        for d in 2..6 {
            for _ in 0..50 {
                let psi = random_pure(d, &mut rng);
                let (state, p, q) = noise_completion(&psi).unwrap();
                let pphi = p_phi(d).unwrap();
                assert!((p - p_rho(d).unwrap()).abs() < 1e-15);
                assert!((q * (1.0 - pphi) - (1.0 - q) / (d - 1) as f64).abs() < 1e-15);
                let want = noisy_state(&psi.projector(), p).unwrap();
                assert!(max_diff(state.entries(), want.entries()) < 1e-12);
            }
        }
        let psi = random_pure(2, &mut rng);
        assert!((noise_completion(&psi).unwrap().1 - 1.0 / 3.0).abs() < 1e-15);
        let single = BipartitePureState::from_schmidt_coefficients(&[1.0]).unwrap();
        assert!(matches!(
            noise_completion(&single),
            Err(crate::Error::InvalidDimension(_))
        ));
    }

    #[test]
    fn p_rho_examples() {
        assert!((p_rho(2).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert!((p_rho(3).unwrap() - 5.0 / 26.0).abs() < 1e-15);
        let d = 1_000_000usize;
        let ratio = p_rho(d).unwrap() * (d as f64).powi(2) / libm::log(d as f64);
        assert!((ratio - 1.0).abs() < 0.05);
        assert!(p_rho(1).is_err());
    }

    #[test]
    fn extended_reduces_to_isotropic_on_phi() {
        let mut rng = RngStream::new(20, 0);
        let q = crate::qcore::haar_basis(2, &mut rng).unwrap();
        let r = crate::qcore::haar_basis(2, &mut rng).unwrap();
        let cfg = McConfig::new(100_000, 3, 10_000).unwrap();
        let est = mc_joint_extended(&max_entangled(2).unwrap(), &q, &r, &cfg).unwrap();
        let oracle = crate::qcore::iso_joint_closed(2, 0.5, &q, &r).unwrap();
        assert!(est.max_sigma_deviation(&oracle) < 5.0);
    }
}
