//! Upper bounds on the locality threshold and the separability constants.
//!
//! The two-qubit noisy state `p |φ₂⟩⟨φ₂| + (1 − p) 1/d²` violates CHSH for
//! `p > p_chsh(d)`. The settings realizing this act as the qubit-optimal
//! observables on `span{|0⟩, |1⟩}` and as `+1` on the complement.

use alloc::vec::Vec;

use rand::Rng;

use crate::error::{bail, Result};
use crate::nielsen::p_rho;
use crate::povm::{p_phi_povm, p_rho_povm};
use crate::projective::{harmonic, p_phi};
use crate::qcore::{
    cr, haar_unitary, hermitian_eigen, is_hermitian, kron, noisy_state, partial_trace_a_with,
    partial_trace_b_with, BipartitePureState, CMatrix, CVector, DensityMatrix,
};
use crate::tol;

/// Catalan's constant.
pub const CATALAN: f64 = 0.915_965_594_177_219_015_054_603_514_932_384_110_774;

/// Table value `π²/(16 K)` of the CGLMP upper bound for maximally entangled
/// states. Reported, never derived here.
pub const CGLMP_BOUND: f64 = core::f64::consts::PI * core::f64::consts::PI / (16.0 * CATALAN);

/// Hermitian observable with spectrum in `[−1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryObservable {
    matrix: CMatrix,
}

impl BinaryObservable {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        if !matrix.is_square() || matrix.nrows() == 0 {
            bail!(InvalidDimension, "observable must be square and non-empty");
        }
        if !is_hermitian(&matrix, tol::STRUCT) {
            bail!(InvalidArgument, "observable is not Hermitian");
        }
        let (vals, _) = hermitian_eigen(&matrix);
        if vals[0] < -1.0 - tol::STRUCT || vals[vals.len() - 1] > 1.0 + tol::STRUCT {
            bail!(
                InvalidArgument,
                "spectrum [{}, {}] leaves [−1, 1]",
                vals[0],
                vals[vals.len() - 1]
            );
        }
        Ok(Self { matrix })
    }

    /// `Σ_k sign(x_k) |e_k⟩⟨e_k|` for Hermitian `x`, with `sign(0) = +1`.
    /// This maximizes `tr(A x)` over observables with spectrum in `[−1, 1]`.
    pub fn sign_of(x: &CMatrix) -> Self {
        let (vals, vecs) = hermitian_eigen(x);
        let signs = CVector::from_iterator(
            vals.len(),
            vals.iter().map(|&v| cr(if v >= 0.0 { 1.0 } else { -1.0 })),
        );
        Self {
            matrix: &vecs * CMatrix::from_diagonal(&signs) * vecs.adjoint(),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }
}

/// Alice's `A0, A1` and Bob's `B0, B1`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChshSettings {
    pub a0: BinaryObservable,
    pub a1: BinaryObservable,
    pub b0: BinaryObservable,
    pub b1: BinaryObservable,
}

/// `p |φ₂⟩⟨φ₂| + (1 − p) 1/d²` with `|φ₂⟩ = (|00⟩ + |11⟩)/√2` inside `C^d ⊗ C^d`.
pub fn embedded_state(d: usize, p: f64) -> Result<DensityMatrix> {
    if d < 2 {
        bail!(
            InvalidDimension,
            "embedding a qubit pair needs d ≥ 2, got {d}"
        );
    }
    let mut amps = CVector::zeros(d * d);
    let s = 1.0 / libm::sqrt(2.0);
    amps[0] = cr(s);
    amps[d + 1] = cr(s);
    let phi2 = BipartitePureState::new(d, d, amps)?;
    noisy_state(&phi2.projector(), p)
}

/// `tr(ρ [A0 ⊗ (B0 + B1) + A1 ⊗ (B0 − B1)])`.
pub fn chsh_value(rho: &DensityMatrix, s: &ChshSettings) -> Result<f64> {
    let d = rho.local_dim()?;
    if [&s.a0, &s.a1, &s.b0, &s.b1].iter().any(|o| o.dim() != d) {
        bail!(InvalidArgument, "observables must act on C^{d}");
    }
    let plus = s.b0.matrix() + s.b1.matrix();
    let minus = s.b0.matrix() - s.b1.matrix();
    let op = kron(s.a0.matrix(), &plus) + kron(s.a1.matrix(), &minus);
    Ok((rho.entries() * op).trace().re)
}

/// Qubit-optimal settings on the first two levels, `+1` on the rest.
pub fn embedded_settings(d: usize) -> Result<ChshSettings> {
    if d < 2 {
        bail!(InvalidDimension, "need d ≥ 2, got {d}");
    }
    let s = 1.0 / libm::sqrt(2.0);
    let embed = |block: [f64; 4]| {
        let mut m = CMatrix::identity(d, d);
        m[(0, 0)] = cr(block[0]);
        m[(0, 1)] = cr(block[1]);
        m[(1, 0)] = cr(block[2]);
        m[(1, 1)] = cr(block[3]);
        BinaryObservable::new(m)
    };
    Ok(ChshSettings {
        a0: embed([1.0, 0.0, 0.0, -1.0])?,
        a1: embed([0.0, 1.0, 1.0, 0.0])?,
        b0: embed([s, s, s, -s])?,
        b1: embed([s, -s, -s, -s])?,
    })
}

/// `p · 2√2 + (1 − p) · 2 (d − 2)² / d²`.
pub fn embedded_chsh_closed(d: usize, p: f64) -> f64 {
    let df = d as f64;
    p * 2.0 * core::f64::consts::SQRT_2 + (1.0 - p) * 2.0 * (df - 2.0) * (df - 2.0) / (df * df)
}

/// `4(d − 1) / ((√2 − 1) d² + 4d − 4)`.
pub fn p_chsh(d: usize) -> Result<f64> {
    if d < 2 {
        bail!(InvalidDimension, "p_chsh requires d ≥ 2, got {d}");
    }
    let df = d as f64;
    Ok(4.0 * (df - 1.0) / ((core::f64::consts::SQRT_2 - 1.0) * df * df + 4.0 * df - 4.0))
}

fn random_observable<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Result<BinaryObservable> {
    let u = haar_unitary(d, rng)?;
    let signs = CVector::from_iterator(
        d,
        (0..d).map(|_| cr(if rng.random::<bool>() { 1.0 } else { -1.0 })),
    );
    Ok(BinaryObservable {
        matrix: &u * CMatrix::from_diagonal(&signs) * u.adjoint(),
    })
}

fn trace_norm(x: &CMatrix) -> f64 {
    hermitian_eigen(x).0.iter().map(|v| v.abs()).sum()
}

const SEE_SAW_MAX_ITERS: usize = 500;
const SEE_SAW_TOL: f64 = 1e-13;

/// Multi-restart see-saw maximization of the CHSH value over observables
/// with spectrum in `[−1, 1]`. Each restart starts from random Bob
/// observables (Haar eigenbasis, random ±1 spectrum) and alternates exact
/// maximizations for Alice and Bob until the value stalls.
pub fn optimize_chsh<R: Rng + ?Sized>(
    rho: &DensityMatrix,
    restarts: usize,
    rng: &mut R,
) -> Result<(f64, ChshSettings)> {
    if restarts == 0 {
        bail!(InvalidParameter, "restarts must be at least 1");
    }
    let d = rho.local_dim()?;
    let r = rho.entries();
    let mut best: Option<(f64, ChshSettings)> = None;
    for _ in 0..restarts {
        let mut b0 = random_observable(d, rng)?;
        let mut b1 = random_observable(d, rng)?;
        let mut value = f64::NEG_INFINITY;
        let mut settings = None;
        for _ in 0..SEE_SAW_MAX_ITERS {
            let x0 = partial_trace_b_with(r, &(b0.matrix() + b1.matrix()), d);
            let x1 = partial_trace_b_with(r, &(b0.matrix() - b1.matrix()), d);
            let a0 = BinaryObservable::sign_of(&x0);
            let a1 = BinaryObservable::sign_of(&x1);
            let y0 = partial_trace_a_with(r, &(a0.matrix() + a1.matrix()), d);
            let y1 = partial_trace_a_with(r, &(a0.matrix() - a1.matrix()), d);
            let next = trace_norm(&y0) + trace_norm(&y1);
            b0 = BinaryObservable::sign_of(&y0);
            b1 = BinaryObservable::sign_of(&y1);
            let done = next - value < SEE_SAW_TOL;
            value = value.max(next);
            settings = Some(ChshSettings {
                a0,
                a1,
                b0: b0.clone(),
                b1: b1.clone(),
            });
            if done {
                break;
            }
        }
        let settings = settings.expect("at least one iteration");
        let value = chsh_value(rho, &settings)?;
        if best.as_ref().is_none_or(|(v, _)| value > *v) {
            best = Some((value, settings));
        }
    }
    Ok(best.expect("restarts ≥ 1"))
}

/// Smallest `d ≥ 2` with `p_chsh(d) < p_phi(d)`, by doubling then bisection
/// on the closed forms.
pub fn crossover_dimension() -> usize {
    let below = |d: usize| -> bool {
        let df = d as f64;
        let phi = (harmonic(d) - 1.0) / (df - 1.0);
        p_chsh(d).expect("d ≥ 2") < phi
    };
    let mut lo = 2usize;
    let mut hi = 4usize;
    while !below(hi) {
        lo = hi;
        hi *= 2;
    }
    // invariant: !below(lo), below(hi)
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if below(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// `(1/(d² − 1), 2/(d² + 2), 1/(d + 1))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeparabilityBounds {
    pub lower: f64,
    pub upper: f64,
    pub iso: f64,
}

pub fn separability_bounds(d: usize) -> Result<SeparabilityBounds> {
    if d < 2 {
        bail!(InvalidDimension, "separability bounds need d ≥ 2, got {d}");
    }
    let df = d as f64;
    Ok(SeparabilityBounds {
        lower: 1.0 / (df * df - 1.0),
        upper: 2.0 / (df * df + 2.0),
        iso: 1.0 / (df + 1.0),
    })
}

/// Every threshold for one dimension.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundsRow {
    pub d: usize,
    pub p_sep_iso: f64,
    pub p_sep_lower: f64,
    pub p_sep_upper: f64,
    pub p_phi: f64,
    pub p_phi_povm: f64,
    pub p_rho: f64,
    pub p_rho_povm: f64,
    pub p_chsh: f64,
    pub cglmp_const: f64,
}

impl BoundsRow {
    pub fn new(d: usize) -> Result<Self> {
        let sep = separability_bounds(d)?;
        Ok(Self {
            d,
            p_sep_iso: sep.iso,
            p_sep_lower: sep.lower,
            p_sep_upper: sep.upper,
            p_phi: p_phi(d)?,
            p_phi_povm: p_phi_povm(d)?,
            p_rho: p_rho(d)?,
            p_rho_povm: p_rho_povm(d)?,
            p_chsh: p_chsh(d)?,
            cglmp_const: CGLMP_BOUND,
        })
    }

    /// `p_phi · d / ln d`.
    pub fn ratio_phi(&self) -> f64 {
        self.p_phi * self.d as f64 / libm::log(self.d as f64)
    }

    /// `p_phi_povm · e d / 3`.
    pub fn ratio_phi_povm(&self) -> f64 {
        self.p_phi_povm * core::f64::consts::E * self.d as f64 / 3.0
    }

    /// `p_rho · d² / ln d`.
    pub fn ratio_rho(&self) -> f64 {
        let df = self.d as f64;
        self.p_rho * df * df / libm::log(df)
    }

    /// `p_rho_povm · e d² / 3`.
    pub fn ratio_rho_povm(&self) -> f64 {
        let df = self.d as f64;
        self.p_rho_povm * core::f64::consts::E * df * df / 3.0
    }

    /// `p_chsh · (√2 − 1) d / 4`.
    pub fn ratio_chsh(&self) -> f64 {
        self.p_chsh * (core::f64::consts::SQRT_2 - 1.0) * self.d as f64 / 4.0
    }

    pub fn is_ordered(&self) -> bool {
        let all = [
            self.p_sep_iso,
            self.p_sep_lower,
            self.p_sep_upper,
            self.p_phi,
            self.p_phi_povm,
            self.p_rho,
            self.p_rho_povm,
            self.p_chsh,
        ];
        self.p_sep_lower <= self.p_sep_upper
            && self.p_rho <= self.p_phi
            && self.p_rho_povm <= self.p_phi_povm
            && all.iter().all(|&p| p > 0.0 && p <= 1.0)
    }
}

pub fn bounds_table(dims: &[usize]) -> Result<Vec<BoundsRow>> {
    dims.iter().map(|&d| BoundsRow::new(d)).collect()
}
