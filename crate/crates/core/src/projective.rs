//! Local model for isotropic states under projective measurements.
//!
//! The hidden variable is a Haar-random `|λ⟩ ∈ C^d`. Alice answers with the
//! Born-rule distribution `⟨λ|Q_aᵀ|λ⟩`; Bob answers deterministically with
//! the outcome maximizing `⟨λ|R_b|λ⟩`. The resulting correlations are those
//! of the isotropic state at weight [`p_phi`]`(d) = (H_d − 1)/(d − 1)`.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::{bail, Result};
use crate::model::{IsotropicKernel, LocalModel};
use crate::montecarlo::{run_serial, McConfig, McEstimate, SampleKernel};
use crate::qcore::{fill_haar, HiddenVariable, ProjectiveMeasurement, QuadForms, C64};
use crate::tol;

/// One draw of the model: λ, Alice's distribution and Bob's outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalResponseSample {
    pub lambda: HiddenVariable,
    pub alice_probs: Vec<f64>,
    pub bob_outcome: usize,
}

fn check_dim(m: &ProjectiveMeasurement, lambda: &HiddenVariable) -> Result<()> {
    if m.dim() != lambda.dim() {
        bail!(
            InvalidArgument,
            "measurement on C^{} applied to hidden variable in C^{}",
            m.dim(),
            lambda.dim()
        );
    }
    Ok(())
}

/// `P_Q(a|λ) = ⟨λ|Q_aᵀ|λ⟩`.
pub fn alice_response(q: &ProjectiveMeasurement, lambda: &HiddenVariable) -> Result<Vec<f64>> {
    check_dim(q, lambda)?;
    let v = lambda.as_vector();
    Ok(q.projectors()
        .iter()
        .map(|p| v.dotc(&(p.transpose() * v)).re.max(0.0))
        .collect())
}

/// Index of the first maximum; ties go to the lowest index.
#[inline]
pub(crate) fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate().skip(1) {
        if x > xs[best] {
            best = i;
        }
    }
    best
}

/// `argmax_b ⟨λ|R_b|λ⟩`.
pub fn bob_response(r: &ProjectiveMeasurement, lambda: &HiddenVariable) -> Result<usize> {
    check_dim(r, lambda)?;
    let v = lambda.as_vector();
    let overlaps: Vec<f64> = r.projectors().iter().map(|p| v.dotc(&(p * v)).re).collect();
    Ok(argmax(&overlaps))
}

pub fn local_response_sample(
    q: &ProjectiveMeasurement,
    r: &ProjectiveMeasurement,
    lambda: HiddenVariable,
) -> Result<LocalResponseSample> {
    let alice_probs = alice_response(q, &lambda)?;
    let bob_outcome = bob_response(r, &lambda)?;
    Ok(LocalResponseSample {
        lambda,
        alice_probs,
        bob_outcome,
    })
}

/// Born-rule Alice, argmax Bob, with precomputed quadratic forms.
#[derive(Debug, Clone)]
pub struct ProjectiveModel {
    dim: usize,
    alice: QuadForms,
    bob: QuadForms,
}

impl ProjectiveModel {
    pub fn new(q: &ProjectiveMeasurement, r: &ProjectiveMeasurement) -> Result<Self> {
        if q.dim() != r.dim() {
            bail!(
                InvalidArgument,
                "Alice acts on C^{}, Bob on C^{}",
                q.dim(),
                r.dim()
            );
        }
        Ok(Self {
            dim: q.dim(),
            alice: QuadForms::from_effects_transposed(q.projectors()),
            bob: QuadForms::from_effects(r.projectors()),
        })
    }
}

impl LocalModel for ProjectiveModel {
    fn dim(&self) -> usize {
        self.dim
    }

    fn outcomes(&self) -> (usize, usize) {
        (self.alice.outcomes(), self.bob.outcomes())
    }

    #[inline]
    fn alice(&self, lambda: &[C64], out: &mut [f64]) {
        self.alice.eval(lambda, out);
    }

    #[inline]
    fn bob(&self, lambda: &[C64], work: &mut [f64], out: &mut [f64]) {
        let n = self.bob.outcomes();
        self.bob.eval(lambda, work);
        out.fill(0.0);
        out[argmax(&work[..n])] = 1.0;
    }
}

pub fn joint_kernel(
    q: &ProjectiveMeasurement,
    r: &ProjectiveMeasurement,
) -> Result<IsotropicKernel<ProjectiveModel>> {
    Ok(IsotropicKernel::new(ProjectiveModel::new(q, r)?))
}

/// Monte Carlo estimate of `∫ μ(dλ) P_Q(a|λ) P_R(b|λ)`.
pub fn mc_joint(
    q: &ProjectiveMeasurement,
    r: &ProjectiveMeasurement,
    cfg: &McConfig,
) -> Result<McEstimate> {
    Ok(run_serial(&joint_kernel(q, r)?, cfg))
}

/// `H_d = Σ_{k=1}^d 1/k`, summed smallest term first.
pub fn harmonic(d: usize) -> f64 {
    (1..=d).rev().map(|k| 1.0 / k as f64).sum()
}

/// Critical weight of the projective model: `(H_d − 1)/(d − 1)`.
pub fn p_phi(d: usize) -> Result<f64> {
    if d < 2 {
        bail!(InvalidDimension, "p_phi requires d ≥ 2, got {d}");
    }
    Ok((harmonic(d) - 1.0) / (d - 1) as f64)
}

/// Value of `∫ μ(dλ) ⟨λ|R_b|λ⟩ P_R(b|λ)` implied by [`p_phi`]:
/// `((d − 1) p_phi + 1) / d²`.
pub fn selfcorr_expected(d: usize) -> Result<f64> {
    let df = d as f64;
    Ok(((df - 1.0) * p_phi(d)? + 1.0) / (df * df))
}

/// Samples `⟨λ|R_b|λ⟩ · [argmax = b]`.
#[derive(Debug, Clone)]
pub struct SelfCorrelationKernel {
    forms: QuadForms,
    outcome: usize,
}

impl SelfCorrelationKernel {
    pub fn new(r: &ProjectiveMeasurement, outcome: usize) -> Result<Self> {
        if outcome >= r.len() {
            bail!(InvalidArgument, "outcome {outcome} out of range");
        }
        Ok(Self {
            forms: QuadForms::from_effects(r.projectors()),
            outcome,
        })
    }
}

impl SampleKernel for SelfCorrelationKernel {
    type Scratch = (Vec<C64>, Vec<f64>);

    fn shape(&self) -> (usize, usize) {
        (1, 1)
    }

    fn scratch(&self) -> Self::Scratch {
        (
            vec![C64::new(0.0, 0.0); self.forms.dim()],
            vec![0.0; self.forms.outcomes()],
        )
    }

    #[inline]
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R, s: &mut Self::Scratch, cells: &mut [f64]) {
        fill_haar(rng, &mut s.0);
        self.forms.eval(&s.0, &mut s.1);
        cells[0] = if argmax(&s.1) == self.outcome {
            s.1[self.outcome]
        } else {
            0.0
        };
    }
}

/// Monte Carlo estimate (1×1) of `∫ μ(dλ) ⟨λ|R_b|λ⟩ P_R(b|λ)`.
pub fn mc_selfcorr(
    r: &ProjectiveMeasurement,
    outcome: usize,
    cfg: &McConfig,
) -> Result<McEstimate> {
    Ok(run_serial(&SelfCorrelationKernel::new(r, outcome)?, cfg))
}

/// Checks that `probs` is a valid distribution to [`tol::NORM`].
pub fn is_distribution(probs: &[f64]) -> bool {
    probs.iter().all(|&p| p >= -tol::NORM) && (probs.iter().sum::<f64>() - 1.0).abs() <= tol::NORM
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::{c, haar_basis, haar_state, haar_unitary, iso_joint_closed, CVector};
    use crate::rng::RngStream;

    #[test]
    fn alice_examples() {
        let z = ProjectiveMeasurement::computational(3).unwrap();
        let e0 = HiddenVariable::basis(3, 0).unwrap();
        assert_eq!(alice_response(&z, &e0).unwrap(), vec![1.0, 0.0, 0.0]);

        let z2 = ProjectiveMeasurement::computational(2).unwrap();
        let t: f64 = 0.3;
        let lam = HiddenVariable::new(CVector::from_vec(vec![
            c(libm::cos(t), 0.0),
            c(libm::sin(t), 0.0),
        ]))
        .unwrap();
        let p = alice_response(&z2, &lam).unwrap();
        assert!((p[0] - libm::cos(t).powi(2)).abs() < 1e-15);
        assert!((p[1] - libm::sin(t).powi(2)).abs() < 1e-15);

        let mut rng = RngStream::new(9, 0);
        let q = haar_basis(4, &mut rng).unwrap();
        let lam = haar_state(4, &mut rng).unwrap();
        assert!(is_distribution(&alice_response(&q, &lam).unwrap()));

        let bad = HiddenVariable::basis(2, 0).unwrap();
        assert!(alice_response(&q, &bad).is_err());
    }

    #[test]
    fn bob_examples() {
        let z3 = ProjectiveMeasurement::computational(3).unwrap();
        assert_eq!(
            bob_response(&z3, &HiddenVariable::basis(3, 1).unwrap()).unwrap(),
            1
        );
        let z2 = ProjectiveMeasurement::computational(2).unwrap();
        let lam = HiddenVariable::new(CVector::from_vec(vec![
            c(libm::sqrt(0.9), 0.0),
            c(libm::sqrt(0.1), 0.0),
        ]))
        .unwrap();
        assert_eq!(bob_response(&z2, &lam).unwrap(), 0);
        assert!(bob_response(&z3, &lam).is_err());
    }

    #[test]
    fn bob_covariance() {
        let mut rng = RngStream::new(17, 0);
        for d in 2..6 {
            for _ in 0..50 {
                let u = haar_unitary(d, &mut rng).unwrap();
                let r = haar_basis(d, &mut rng).unwrap();
                let lam = haar_state(d, &mut rng).unwrap();
                // U† R U
                let rotated = r.rotated(&u.adjoint());
                assert_eq!(
                    bob_response(&rotated, &lam).unwrap(),
                    bob_response(&r, &lam.rotated(&u)).unwrap()
                );
            }
        }
    }

    #[test]
    fn model_matches_direct_responses() {
        let mut rng = RngStream::new(2, 0);
        let q = haar_basis(3, &mut rng).unwrap();
        let r = haar_basis(3, &mut rng).unwrap();
        let model = ProjectiveModel::new(&q, &r).unwrap();
        for _ in 0..100 {
            let lam = haar_state(3, &mut rng).unwrap();
            let mut a = [0.0; 3];
            let mut b = [0.0; 3];
            let mut w = [0.0; 3];
            model.alice(lam.as_slice(), &mut a);
            model.bob(lam.as_slice(), &mut w, &mut b);
            let direct = alice_response(&q, &lam).unwrap();
            for k in 0..3 {
                assert!((a[k] - direct[k]).abs() < 1e-12);
            }
            assert_eq!(b[bob_response(&r, &lam).unwrap()], 1.0);
        }
    }

    #[test]
    fn p_phi_examples() {
        assert_eq!(p_phi(2).unwrap(), 0.5);
        assert!((p_phi(3).unwrap() - 5.0 / 12.0).abs() < 1e-15);
        let d = 1_000_000usize;
        let ratio = p_phi(d).unwrap() * d as f64 / libm::log(d as f64);
        assert!((ratio - 1.0).abs() < 0.05, "ratio {ratio}");
        assert!(p_phi(1).is_err());
        assert!(matches!(p_phi(0), Err(crate::Error::InvalidDimension(_))));
    }

    #[test]
    fn p_phi_strictly_decreasing() {
        let mut h = 1.0 + 0.5;
        let mut prev = p_phi(2).unwrap();
        for d in 3..=10_000usize {
            h += 1.0 / d as f64;
            let next = (h - 1.0) / (d - 1) as f64;
            assert!(next < prev, "not decreasing at d = {d}");
            prev = next;
        }
    }

    #[test]
    fn single_sample_rows_sum_to_alice() {
        let z = ProjectiveMeasurement::computational(2).unwrap();
        let cfg = McConfig::new(1, 123, 1).unwrap();
        let est = mc_joint(&z, &z, &cfg).unwrap();
        assert_eq!(est, mc_joint(&z, &z, &cfg).unwrap());
        let mut rng = RngStream::for_chunk(123, 0);
        let lam = haar_state(2, &mut rng).unwrap();
        let alice = alice_response(&z, &lam).unwrap();
        for (a, expected) in alice.iter().enumerate() {
            let row: f64 = est.estimate.row(a).sum();
            assert!((row - expected).abs() < 1e-12);
        }
        assert!((est.total() - 1.0).abs() < 1e-12);
        assert!(mc_joint(&z, &z, &McConfig::new(0, 1, 1).unwrap_or(cfg)).is_ok());
    }

    #[test]
    fn small_run_matches_closed_form() {
        let z = ProjectiveMeasurement::computational(2).unwrap();
        let cfg = McConfig::new(100_000, 1, 10_000).unwrap();
        let est = mc_joint(&z, &z, &cfg).unwrap();
        let oracle = iso_joint_closed(2, 0.5, &z, &z).unwrap();
        assert!(est.max_sigma_deviation(&oracle) < 5.0);
        assert!((est.total() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn selfcorr_small_run() {
        let z = ProjectiveMeasurement::computational(2).unwrap();
        let cfg = McConfig::new(100_000, 5, 10_000).unwrap();
        let (v, s) = mc_selfcorr(&z, 1, &cfg).unwrap().scalar();
        assert!((v - 3.0 / 8.0).abs() < 5.0 * s);
        assert!((selfcorr_expected(3).unwrap() - 11.0 / 54.0).abs() < 1e-15);
    }
}
