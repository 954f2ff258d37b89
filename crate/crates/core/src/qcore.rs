//! Complex linear-algebra substrate.

mod haar;
mod linalg;
mod measurement;
mod state;

pub use haar::{fill_haar, haar_basis, haar_state, haar_unitary, HiddenVariable};
pub use linalg::{
    hermitian_eigen, is_hermitian, kron, max_abs_diff, min_eigenvalue, partial_trace_a_with,
    partial_trace_b_with, partial_transpose_b, sqrt_dim,
};
pub use measurement::{iso_joint_closed, joint_prob, Effects, ProjectiveMeasurement, QuadForms};
pub use state::{
    isotropic_state, max_entangled, noisy_state, ppt_min_eigenvalue, reduced_density, schmidt,
    BipartitePureState, DensityMatrix, SchmidtForm,
};

pub use num_complex::Complex;

pub type C64 = Complex<f64>;
pub type CMatrix = nalgebra::DMatrix<C64>;
pub type CVector = nalgebra::DVector<C64>;
pub type RMatrix = nalgebra::DMatrix<f64>;

#[inline]
pub(crate) fn c(re: f64, im: f64) -> C64 {
    Complex::new(re, im)
}

#[inline]
pub(crate) fn cr(re: f64) -> C64 {
    Complex::new(re, 0.0)
}
