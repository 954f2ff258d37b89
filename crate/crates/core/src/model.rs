//! Local response models and the Haar-measure sampling kernel shared by the
//! projective and general-measurement constructions.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::montecarlo::SampleKernel;
use crate::qcore::{c, fill_haar, C64};

/// A pair of local response functions driven by a hidden unit vector in `C^d`.
pub trait LocalModel {
    fn dim(&self) -> usize;

    /// Number of outcomes for Alice and Bob.
    fn outcomes(&self) -> (usize, usize);

    /// Alice's outcome distribution `P(a|λ)`.
    fn alice(&self, lambda: &[C64], out: &mut [f64]);

    /// Bob's outcome distribution `P(b|λ)`. `work` has at least as many
    /// entries as Bob has outcomes.
    fn bob(&self, lambda: &[C64], work: &mut [f64], out: &mut [f64]);
}

/// Per-thread buffers for model kernels.
#[derive(Debug, Clone)]
pub struct ModelScratch {
    pub(crate) lambda: Vec<C64>,
    pub(crate) lambda_a: Vec<C64>,
    pub(crate) lambda_b: Vec<C64>,
    pub(crate) branch: Vec<f64>,
    pub(crate) alice: Vec<f64>,
    pub(crate) bob: Vec<f64>,
    pub(crate) work: Vec<f64>,
}

impl ModelScratch {
    pub fn new<M: LocalModel + ?Sized>(model: &M) -> Self {
        let d = model.dim();
        let (na, nb) = model.outcomes();
        Self {
            lambda: vec![c(0.0, 0.0); d],
            lambda_a: vec![c(0.0, 0.0); d],
            lambda_b: vec![c(0.0, 0.0); d],
            branch: vec![0.0; d],
            alice: vec![0.0; na],
            bob: vec![0.0; nb],
            work: vec![0.0; nb],
        }
    }
}

#[inline]
pub(crate) fn outer_into(alice: &[f64], bob: &[f64], cells: &mut [f64]) {
    let nb = bob.len();
    for (a, &pa) in alice.iter().enumerate() {
        for (cell, &pb) in cells[a * nb..(a + 1) * nb].iter_mut().zip(bob) {
            *cell = pa * pb;
        }
    }
}

/// `λ ~ Haar`, both parties respond to the same `λ`.
#[derive(Debug, Clone)]
pub struct IsotropicKernel<M> {
    model: M,
}

impl<M: LocalModel> IsotropicKernel<M> {
    pub fn new(model: M) -> Self {
        Self { model }
    }

    pub fn model(&self) -> &M {
        &self.model
    }
}

impl<M: LocalModel> SampleKernel for IsotropicKernel<M> {
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
        self.model.alice(&s.lambda, &mut s.alice);
        self.model.bob(&s.lambda, &mut s.work, &mut s.bob);
        outer_into(&s.alice, &s.bob, cells);
    }
}
