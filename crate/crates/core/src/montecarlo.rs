//! Chunked Monte Carlo with per-cell Welford statistics.
//!
//! A run of `samples` draws is split into chunks of `chunk_size`. Chunk `c`
//! draws from [`RngStream::for_chunk`]`(seed, c)` and accumulates its own
//! [`CellStats`]. Chunk results are merged in ascending chunk order, so a
//! serial run here and a parallel run elsewhere are bit-identical for equal
//! `(samples, seed, chunk_size)`.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::{bail, Result};
use crate::qcore::RMatrix;
use crate::rng::RngStream;

pub const DEFAULT_CHUNK_SIZE: u64 = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct McConfig {
    samples: u64,
    seed: u64,
    chunk_size: u64,
}

impl McConfig {
    pub fn new(samples: u64, seed: u64, chunk_size: u64) -> Result<Self> {
        if samples == 0 {
            bail!(InvalidParameter, "samples must be at least 1");
        }
        if chunk_size == 0 {
            bail!(InvalidParameter, "chunk_size must be at least 1");
        }
        Ok(Self {
            samples,
            seed,
            chunk_size,
        })
    }

    pub fn with_seed(samples: u64, seed: u64) -> Result<Self> {
        Self::new(samples, seed, DEFAULT_CHUNK_SIZE)
    }

    pub fn samples(&self) -> u64 {
        self.samples
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn chunk_size(&self) -> u64 {
        self.chunk_size
    }

    pub fn chunk_count(&self) -> u64 {
        self.samples.div_ceil(self.chunk_size)
    }

    pub fn chunk_len(&self, chunk: u64) -> u64 {
        let start = chunk * self.chunk_size;
        self.chunk_size.min(self.samples.saturating_sub(start))
    }
}

/// Running mean and second central moment.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Welford {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Welford {
    #[inline]
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    /// Chan et al. pairwise combination.
    pub fn merge(&mut self, other: &Welford) {
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = *other;
            return;
        }
        let n = self.n + other.n;
        let delta = other.mean - self.mean;
        let (na, nb) = (self.n as f64, other.n as f64);
        self.mean += delta * nb / n as f64;
        self.m2 += other.m2 + delta * delta * na * nb / n as f64;
        self.n = n;
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Unbiased sample variance; zero with fewer than two samples.
    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.m2 / (self.n - 1) as f64
        }
    }

    pub fn stderr(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            libm::sqrt(self.variance() / self.n as f64)
        }
    }
}

/// Row-major grid of [`Welford`] accumulators.
#[derive(Debug, Clone, PartialEq)]
pub struct CellStats {
    rows: usize,
    cols: usize,
    cells: Vec<Welford>,
}

impl CellStats {
    pub fn new(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            cells: vec![Welford::default(); rows * cols],
        }
    }

    #[inline]
    pub fn push(&mut self, sample: &[f64]) {
        for (w, &x) in self.cells.iter_mut().zip(sample) {
            w.push(x);
        }
    }

    pub fn merge(&mut self, other: &CellStats) {
        for (a, b) in self.cells.iter_mut().zip(&other.cells) {
            a.merge(b);
        }
    }

    pub fn count(&self) -> u64 {
        self.cells.first().map_or(0, Welford::count)
    }

    pub fn finish(&self) -> McEstimate {
        McEstimate {
            estimate: RMatrix::from_fn(self.rows, self.cols, |a, b| {
                self.cells[a * self.cols + b].mean()
            }),
            stderr: RMatrix::from_fn(self.rows, self.cols, |a, b| {
                self.cells[a * self.cols + b].stderr()
            }),
            samples: self.count(),
        }
    }
}

/// Monte Carlo estimate of a joint distribution with per-cell standard errors.
#[derive(Debug, Clone, PartialEq)]
pub struct McEstimate {
    pub estimate: RMatrix,
    pub stderr: RMatrix,
    pub samples: u64,
}

impl McEstimate {
    /// Largest `|estimate − oracle| / stderr` over all cells. A cell with
    /// zero standard error counts as zero deviation when it matches the
    /// oracle to 1e-12 and as infinite otherwise.
    pub fn max_sigma_deviation(&self, oracle: &RMatrix) -> f64 {
        self.estimate
            .iter()
            .zip(self.stderr.iter())
            .zip(oracle.iter())
            .map(|((e, s), o)| {
                let diff = (e - o).abs();
                if *s > 0.0 {
                    diff / s
                } else if diff <= 1e-12 {
                    0.0
                } else {
                    f64::INFINITY
                }
            })
            .fold(0.0, f64::max)
    }

    /// `½ Σ |estimate − oracle|`.
    pub fn total_variation(&self, oracle: &RMatrix) -> f64 {
        0.5 * self
            .estimate
            .iter()
            .zip(oracle.iter())
            .map(|(e, o)| (e - o).abs())
            .sum::<f64>()
    }

    pub fn total(&self) -> f64 {
        self.estimate.sum()
    }

    /// Scalar view of a 1×1 estimate.
    pub fn scalar(&self) -> (f64, f64) {
        (self.estimate[(0, 0)], self.stderr[(0, 0)])
    }
}

/// A sampler that writes one draw's contribution to every cell.
pub trait SampleKernel {
    type Scratch;

    /// `(rows, cols)` of the estimated matrix.
    fn shape(&self) -> (usize, usize);

    fn scratch(&self) -> Self::Scratch;

    /// Writes one sample into `cells` (row-major, length `rows * cols`).
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R, scratch: &mut Self::Scratch, cells: &mut [f64]);
}

pub fn run_chunk<K: SampleKernel + ?Sized>(kernel: &K, cfg: &McConfig, chunk: u64) -> CellStats {
    let (rows, cols) = kernel.shape();
    let mut stats = CellStats::new(rows, cols);
    let mut rng = RngStream::for_chunk(cfg.seed(), chunk);
    let mut scratch = kernel.scratch();
    let mut cells = vec![0.0; rows * cols];
    for _ in 0..cfg.chunk_len(chunk) {
        kernel.sample(&mut rng, &mut scratch, &mut cells);
        stats.push(&cells);
    }
    stats
}

/// Merges chunk results in the order given (ascending chunk index).
pub fn reduce_chunks<I: IntoIterator<Item = CellStats>>(
    shape: (usize, usize),
    chunks: I,
) -> McEstimate {
    let mut acc = CellStats::new(shape.0, shape.1);
    for c in chunks {
        acc.merge(&c);
    }
    acc.finish()
}

pub fn run_serial<K: SampleKernel + ?Sized>(kernel: &K, cfg: &McConfig) -> McEstimate {
    reduce_chunks(
        kernel.shape(),
        (0..cfg.chunk_count()).map(|c| run_chunk(kernel, cfg, c)),
    )
}
