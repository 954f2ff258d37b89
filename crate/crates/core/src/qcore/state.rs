use alloc::vec::Vec;

use super::linalg::{identity, is_hermitian, min_eigenvalue, partial_transpose_b, sqrt_dim};
use super::{cr, CMatrix, CVector, C64};
use crate::error::{bail, Result};
use crate::tol;

/// Pure state on `C^dim_a ⊗ C^dim_b`; amplitude `(i, j)` sits at `i * dim_b + j`.
#[derive(Debug, Clone, PartialEq)]
pub struct BipartitePureState {
    dim_a: usize,
    dim_b: usize,
    amplitudes: CVector,
}

impl BipartitePureState {
    pub fn new(dim_a: usize, dim_b: usize, amplitudes: CVector) -> Result<Self> {
        if dim_a == 0 || dim_b == 0 {
            bail!(InvalidDimension, "local dimensions must be positive");
        }
        if amplitudes.len() != dim_a * dim_b {
            bail!(
                InvalidArgument,
                "expected {} amplitudes, got {}",
                dim_a * dim_b,
                amplitudes.len()
            );
        }
        let norm2 = amplitudes.norm_squared();
        if (norm2 - 1.0).abs() > tol::NORM {
            bail!(InvalidArgument, "state norm² is {norm2}, expected 1");
        }
        Ok(Self {
            dim_a,
            dim_b,
            amplitudes,
        })
    }

    /// Rescales `amplitudes` to unit norm.
    pub fn normalized(dim_a: usize, dim_b: usize, amplitudes: CVector) -> Result<Self> {
        let norm = amplitudes.norm();
        if norm == 0.0 || !norm.is_finite() {
            bail!(
                InvalidArgument,
                "cannot normalize a zero or non-finite vector"
            );
        }
        Self::new(dim_a, dim_b, amplitudes.unscale(norm))
    }

    /// `Σ_j ν_j |jj⟩`.
    pub fn from_schmidt_coefficients(nu: &[f64]) -> Result<Self> {
        let d = nu.len();
        let mut amps = CVector::zeros(d * d);
        for (j, &v) in nu.iter().enumerate() {
            amps[j * d + j] = cr(v);
        }
        Self::new(d, d, amps)
    }

    pub fn dim_a(&self) -> usize {
        self.dim_a
    }

    pub fn dim_b(&self) -> usize {
        self.dim_b
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    pub fn amplitude(&self, i: usize, j: usize) -> C64 {
        self.amplitudes[i * self.dim_b + j]
    }

    /// Coefficient matrix `C` with `C[(i, j)] = amplitude(i, j)`.
    pub fn coefficient_matrix(&self) -> CMatrix {
        CMatrix::from_fn(self.dim_a, self.dim_b, |i, j| self.amplitude(i, j))
    }

    pub fn projector(&self) -> DensityMatrix {
        DensityMatrix::from_trusted(&self.amplitudes * self.amplitudes.adjoint())
    }

    /// `|⟨self|other⟩|²`.
    pub fn fidelity(&self, other: &Self) -> f64 {
        self.amplitudes.dotc(&other.amplitudes).norm_sqr()
    }

    pub(crate) fn square_dim(&self) -> Result<usize> {
        if self.dim_a != self.dim_b {
            bail!(
                Unsupported,
                "only d×d bipartitions are supported, got {}×{}",
                self.dim_a,
                self.dim_b
            );
        }
        Ok(self.dim_a)
    }
}

/// Hermitian, positive-semidefinite, unit-trace matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    entries: CMatrix,
}

impl DensityMatrix {
    pub fn new(entries: CMatrix) -> Result<Self> {
        if !entries.is_square() || entries.nrows() == 0 {
            bail!(
                InvalidDimension,
                "density matrix must be square and non-empty"
            );
        }
        if !is_hermitian(&entries, tol::NORM) {
            bail!(InvalidArgument, "density matrix is not Hermitian");
        }
        let tr = entries.trace();
        if (tr.re - 1.0).abs() > tol::NORM || tr.im.abs() > tol::NORM {
            bail!(InvalidArgument, "density matrix trace is {tr}, expected 1");
        }
        let min = min_eigenvalue(&entries);
        if min < tol::PSD {
            bail!(InvalidArgument, "density matrix has eigenvalue {min}");
        }
        Ok(Self { entries })
    }

    /// Skips validation; for convex combinations of valid states.
    pub(crate) fn from_trusted(entries: CMatrix) -> Self {
        Self { entries }
    }

    pub fn maximally_mixed(n: usize) -> Result<Self> {
        if n == 0 {
            bail!(InvalidDimension, "dimension must be positive");
        }
        Ok(Self::from_trusted(identity(n) * cr(1.0 / n as f64)))
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &CMatrix {
        &self.entries
    }

    pub fn into_inner(self) -> CMatrix {
        self.entries
    }

    /// Local dimension `d` of a state on `C^d ⊗ C^d`.
    pub fn local_dim(&self) -> Result<usize> {
        sqrt_dim(self.dim())
    }

    /// `Σ_k w_k ρ_k` for weights summing to one.
    pub fn mixture(parts: &[(f64, &DensityMatrix)]) -> Result<Self> {
        let Some((_, first)) = parts.first() else {
            bail!(InvalidArgument, "empty mixture");
        };
        let n = first.dim();
        let mut total = 0.0;
        let mut acc = CMatrix::zeros(n, n);
        for (w, rho) in parts {
            if rho.dim() != n {
                bail!(InvalidArgument, "mixture components differ in dimension");
            }
            if *w < 0.0 {
                bail!(InvalidParameter, "negative mixture weight {w}");
            }
            total += w;
            acc += &rho.entries * cr(*w);
        }
        if (total - 1.0).abs() > tol::NORM {
            bail!(InvalidParameter, "mixture weights sum to {total}");
        }
        Ok(Self::from_trusted(acc))
    }
}

/// `|φ_d⟩ = d^{-1/2} Σ_i |ii⟩`.
pub fn max_entangled(d: usize) -> Result<BipartitePureState> {
    if d == 0 {
        bail!(InvalidDimension, "d must be at least 1");
    }
    let nu: Vec<f64> = (0..d).map(|_| 1.0 / libm::sqrt(d as f64)).collect();
    BipartitePureState::from_schmidt_coefficients(&nu)
}

/// `p ρ + (1 − p) 1/d²` on `C^d ⊗ C^d`.
pub fn noisy_state(rho: &DensityMatrix, p: f64) -> Result<DensityMatrix> {
    if !(0.0..=1.0).contains(&p) {
        bail!(InvalidParameter, "p = {p} outside [0, 1]");
    }
    let n = rho.dim();
    let mut out = &rho.entries * cr(p);
    let noise = (1.0 - p) / n as f64;
    for i in 0..n {
        out[(i, i)] += cr(noise);
    }
    Ok(DensityMatrix::from_trusted(out))
}

/// Isotropic state `p |φ_d⟩⟨φ_d| + (1 − p) 1/d²`.
pub fn isotropic_state(d: usize, p: f64) -> Result<DensityMatrix> {
    noisy_state(&max_entangled(d)?.projector(), p)
}

/// `σ = tr_B |ψ⟩⟨ψ| = C C†`.
pub fn reduced_density(psi: &BipartitePureState) -> DensityMatrix {
    let c = psi.coefficient_matrix();
    DensityMatrix::from_trusted(&c * c.adjoint())
}

/// Schmidt decomposition `ψ = Σ_j ν_j |a_j⟩|b_j⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct SchmidtForm {
    coefficients: Vec<f64>,
    basis_a: CMatrix,
    basis_b: CMatrix,
}

impl SchmidtForm {
    /// Descending, nonnegative, `Σ ν² = 1`.
    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    /// Unitary whose column `j` is `|a_j⟩`.
    pub fn basis_a(&self) -> &CMatrix {
        &self.basis_a
    }

    /// Unitary whose column `j` is `|b_j⟩`.
    pub fn basis_b(&self) -> &CMatrix {
        &self.basis_b
    }

    pub fn dim(&self) -> usize {
        self.coefficients.len()
    }

    pub fn reconstruct(&self) -> Result<BipartitePureState> {
        let d = self.dim();
        let mut amps = CVector::zeros(d * d);
        for (k, &nu) in self.coefficients.iter().enumerate() {
            for i in 0..d {
                let ai = self.basis_a[(i, k)] * cr(nu);
                for j in 0..d {
                    amps[i * d + j] += ai * self.basis_b[(j, k)];
                }
            }
        }
        BipartitePureState::normalized(d, d, amps)
    }
}

pub fn schmidt(psi: &BipartitePureState) -> Result<SchmidtForm> {
    let d = psi.square_dim()?;
    let svd = psi.coefficient_matrix().svd_unordered(true, true);
    let (Some(u), Some(v_t)) = (svd.u, svd.v_t) else {
        bail!(InvalidArgument, "singular value decomposition failed");
    };
    let mut order: Vec<usize> = (0..d).collect();
    // Stable sort keeps input order on ties.
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    let raw: Vec<f64> = order
        .iter()
        .map(|&k| svd.singular_values[k].max(0.0))
        .collect();
    let norm = libm::sqrt(raw.iter().map(|x| x * x).sum::<f64>());
    let coefficients = raw.iter().map(|x| x / norm).collect();
    // C = U Σ V†, so ψ = Σ_k σ_k |u_k⟩ ⊗ |conj(row k of V†)⟩.
    let basis_a = CMatrix::from_fn(d, d, |i, k| u[(i, order[k])]);
    let basis_b = CMatrix::from_fn(d, d, |j, k| v_t[(order[k], j)]);
    Ok(SchmidtForm {
        coefficients,
        basis_a,
        basis_b,
    })
}

/// Minimum eigenvalue of the partial transpose on subsystem B.
pub fn ppt_min_eigenvalue(rho: &DensityMatrix) -> Result<f64> {
    let d = rho.local_dim()?;
    Ok(min_eigenvalue(&partial_transpose_b(rho.entries(), d)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::c;
    use alloc::vec;

    fn close(a: f64, b: f64, t: f64) -> bool {
        (a - b).abs() <= t
    }

    #[test]
    fn max_entangled_examples() {
        let s = 1.0 / libm::sqrt(2.0);
        let phi2 = max_entangled(2).unwrap();
        assert!(close(phi2.amplitude(0, 0).re, s, 1e-15));
        assert!(close(phi2.amplitude(1, 1).re, s, 1e-15));
        assert_eq!(phi2.amplitude(0, 1), c(0.0, 0.0));
        let phi1 = max_entangled(1).unwrap();
        assert_eq!(phi1.amplitudes().len(), 1);
        assert!(close(phi1.amplitude(0, 0).re, 1.0, 1e-15));
        let phi3 = max_entangled(3).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 1.0 / libm::sqrt(3.0) } else { 0.0 };
                assert!(close(phi3.amplitude(i, j).re, want, 1e-15));
            }
        }
        assert!(matches!(
            max_entangled(0),
            Err(crate::Error::InvalidDimension(_))
        ));
    }

    #[test]
    fn noisy_state_examples() {
        let phi = max_entangled(2).unwrap().projector();
        let zero = noisy_state(&phi, 0.0).unwrap();
        assert!(
            crate::qcore::linalg::max_abs_diff(zero.entries(), &(identity(4) * cr(0.25))) < 1e-15
        );
        let one = noisy_state(&phi, 1.0).unwrap();
        assert_eq!(one, phi);
        let half = noisy_state(&phi, 0.5).unwrap();
        let diag: Vec<f64> = (0..4).map(|i| half.entries()[(i, i)].re).collect();
        for (got, want) in diag.iter().zip([0.375, 0.125, 0.125, 0.375]) {
            assert!(close(*got, want, 1e-15));
        }
        assert!(close(half.entries()[(0, 3)].re, 0.25, 1e-15));
        assert!(DensityMatrix::new(half.into_inner()).is_ok());
        assert!(matches!(
            noisy_state(&phi, 1.5),
            Err(crate::Error::InvalidParameter(_))
        ));
        assert!(noisy_state(&phi, -0.1).is_err());
    }

    #[test]
    fn density_matrix_validation() {
        assert!(DensityMatrix::new(CMatrix::identity(2, 2)).is_err());
        let not_psd = CMatrix::from_diagonal(&CVector::from_vec(vec![cr(1.5), cr(-0.5)]));
        assert!(DensityMatrix::new(not_psd).is_err());
        let mut not_herm = CMatrix::identity(2, 2) * cr(0.5);
        not_herm[(0, 1)] = c(0.1, 0.0);
        assert!(DensityMatrix::new(not_herm).is_err());
    }

    #[test]
    fn schmidt_examples() {
        let s = 1.0 / libm::sqrt(2.0);
        let f = schmidt(&max_entangled(2).unwrap()).unwrap();
        assert!(close(f.coefficients()[0], s, 1e-12) && close(f.coefficients()[1], s, 1e-12));

        let prod = BipartitePureState::from_schmidt_coefficients(&[1.0, 0.0]).unwrap();
        let f = schmidt(&prod).unwrap();
        assert!(close(f.coefficients()[0], 1.0, 1e-12) && close(f.coefficients()[1], 0.0, 1e-12));

        let psi = BipartitePureState::from_schmidt_coefficients(&[
            libm::sqrt(1.0 / 3.0),
            libm::sqrt(2.0 / 3.0),
        ])
        .unwrap();
        let f = schmidt(&psi).unwrap();
        assert!(close(f.coefficients()[0], libm::sqrt(2.0 / 3.0), 1e-12));
        assert!(close(f.coefficients()[1], libm::sqrt(1.0 / 3.0), 1e-12));
        assert!(psi.fidelity(&f.reconstruct().unwrap()) > 1.0 - 1e-10);
    }

    #[test]
    fn schmidt_rejects_rectangular() {
        let psi = BipartitePureState::normalized(2, 3, CVector::from_element(6, cr(1.0))).unwrap();
        assert!(matches!(schmidt(&psi), Err(crate::Error::Unsupported(_))));
    }

    #[test]
    fn reduced_density_examples() {
        let sigma = reduced_density(&max_entangled(3).unwrap());
        assert!(
            crate::qcore::linalg::max_abs_diff(sigma.entries(), &(identity(3) * cr(1.0 / 3.0)))
                < 1e-15
        );
        let prod = BipartitePureState::from_schmidt_coefficients(&[1.0, 0.0]).unwrap();
        let sigma = reduced_density(&prod);
        assert!(close(sigma.entries()[(0, 0)].re, 1.0, 1e-15));
        assert!(close(sigma.entries()[(1, 1)].re, 0.0, 1e-15));
        let psi = BipartitePureState::from_schmidt_coefficients(&[
            libm::sqrt(1.0 / 3.0),
            libm::sqrt(2.0 / 3.0),
        ])
        .unwrap();
        let sigma = reduced_density(&psi);
        assert!(close(sigma.entries()[(0, 0)].re, 1.0 / 3.0, 1e-15));
        assert!(close(sigma.entries()[(1, 1)].re, 2.0 / 3.0, 1e-15));
    }

    #[test]
    fn ppt_examples() {
        let at_threshold = isotropic_state(2, 1.0 / 3.0).unwrap();
        assert!(ppt_min_eigenvalue(&at_threshold).unwrap().abs() < 1e-10);
        let bell = isotropic_state(2, 1.0).unwrap();
        assert!(close(ppt_min_eigenvalue(&bell).unwrap(), -0.5, 1e-12));
        let mixed = DensityMatrix::maximally_mixed(9).unwrap();
        assert!(close(ppt_min_eigenvalue(&mixed).unwrap(), 1.0 / 9.0, 1e-12));
        let not_square = DensityMatrix::maximally_mixed(6).unwrap();
        assert!(matches!(
            ppt_min_eigenvalue(&not_square),
            Err(crate::Error::InvalidArgument(_))
        ));
    }
}
