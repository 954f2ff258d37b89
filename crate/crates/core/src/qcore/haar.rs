use alloc::vec::Vec;

use rand::Rng;
use rand_distr::StandardNormal;

use super::measurement::ProjectiveMeasurement;
use super::{c, CMatrix, CVector, C64};
use crate::error::{bail, Result};
use crate::tol;

/// Unit vector in `C^d`, the local hidden variable of every model here.
#[derive(Debug, Clone, PartialEq)]
pub struct HiddenVariable(CVector);

impl HiddenVariable {
    pub fn new(v: CVector) -> Result<Self> {
        if v.is_empty() {
            bail!(InvalidDimension, "hidden variable must have d ≥ 1");
        }
        let n2 = v.norm_squared();
        if (n2 - 1.0).abs() > tol::NORM {
            bail!(InvalidArgument, "hidden variable norm² is {n2}, expected 1");
        }
        Ok(Self(v))
    }

    pub fn normalized(v: CVector) -> Result<Self> {
        let n = v.norm();
        if n == 0.0 || !n.is_finite() {
            bail!(InvalidArgument, "cannot normalize a zero vector");
        }
        Self::new(v.unscale(n))
    }

    /// Basis vector `e_k` of `C^d`.
    pub fn basis(d: usize, k: usize) -> Result<Self> {
        if k >= d {
            bail!(InvalidArgument, "basis index {k} out of range for d = {d}");
        }
        let mut v = CVector::zeros(d);
        v[k] = c(1.0, 0.0);
        Self::new(v)
    }

    pub(crate) fn from_trusted(v: CVector) -> Self {
        Self(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_vector(&self) -> &CVector {
        &self.0
    }

    pub fn as_slice(&self) -> &[C64] {
        self.0.as_slice()
    }

    pub fn rotated(&self, u: &CMatrix) -> Self {
        Self(u * &self.0)
    }
}

/// Fills `out` with a Haar-distributed unit vector: iid complex Gaussians,
/// normalized.
#[inline]
pub fn fill_haar<R: Rng + ?Sized>(rng: &mut R, out: &mut [C64]) {
    loop {
        let mut n2 = 0.0;
        for z in out.iter_mut() {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            n2 += re * re + im * im;
            *z = c(re, im);
        }
        if n2 > 0.0 {
            let inv = 1.0 / libm::sqrt(n2);
            for z in out.iter_mut() {
                *z *= inv;
            }
            return;
        }
    }
}

pub fn haar_state<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Result<HiddenVariable> {
    if d == 0 {
        bail!(InvalidDimension, "d must be at least 1");
    }
    let mut buf: Vec<C64> = alloc::vec![c(0.0, 0.0); d];
    fill_haar(rng, &mut buf);
    Ok(HiddenVariable(CVector::from_vec(buf)))
}

/// Haar-random unitary: QR of a complex Ginibre matrix with the diagonal of
/// `R` rotated to be real positive.
pub fn haar_unitary<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Result<CMatrix> {
    if d == 0 {
        bail!(InvalidDimension, "d must be at least 1");
    }
    let g = CMatrix::from_fn(d, d, |_, _| {
        c(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for k in 0..d {
        let rkk = r[(k, k)];
        let n = rkk.norm();
        let phase = if n > 0.0 { rkk / n } else { c(1.0, 0.0) };
        for i in 0..d {
            q[(i, k)] *= phase;
        }
    }
    Ok(q)
}

pub fn haar_basis<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Result<ProjectiveMeasurement> {
    ProjectiveMeasurement::from_basis(&haar_unitary(d, rng)?)
}
