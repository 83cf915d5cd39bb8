use std::cell::Cell;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::Result;
use crate::Matrix;

/// Random streams are ChaCha8 seeded through `seed_from_u64`, with normal
/// deviates from `rand_distr::StandardNormal` (ziggurat). Entries are drawn
/// in row-major order.
pub type SketchRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> SketchRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `rows x cols` matrix of i.i.d. standard normal entries, reproducible for a
/// fixed seed.
pub fn gaussian_matrix(rows: usize, cols: usize, seed: u64) -> Matrix {
    gaussian_from_rng(&mut rng_from_seed(seed), rows, cols)
}

pub fn gaussian_from_rng(rng: &mut SketchRng, rows: usize, cols: usize) -> Matrix {
    let data: Vec<f64> = (0..rows * cols).map(|_| StandardNormal.sample(rng)).collect();
    Matrix::new(rows, cols, data).expect("length is rows * cols")
}

/// Access to the data matrix `A` as the randomized algorithms see it: only
/// through block products. Each method is one sweep over `A`.
pub trait DataMatrix {
    fn shape(&self) -> (usize, usize);

    /// `A * x`.
    fn apply(&self, x: &Matrix) -> Result<Matrix>;

    /// `Aᵀ * y`.
    fn apply_transpose(&self, y: &Matrix) -> Result<Matrix>;

    /// `leftᵀ * A * right`.
    fn compress(&self, left: &Matrix, right: &Matrix) -> Result<Matrix>;

    /// `(A * right, Aᵀ * left)` gathered in the same sweep.
    fn sketch_both(&self, right: &Matrix, left: &Matrix) -> Result<(Matrix, Matrix)>;
}

impl DataMatrix for Matrix {
    fn shape(&self) -> (usize, usize) {
        Matrix::shape(self)
    }

    fn apply(&self, x: &Matrix) -> Result<Matrix> {
        self.matmul(x)
    }

    fn apply_transpose(&self, y: &Matrix) -> Result<Matrix> {
        self.t_matmul(y)
    }

    fn compress(&self, left: &Matrix, right: &Matrix) -> Result<Matrix> {
        left.t_matmul(self)?.matmul(right)
    }

    fn sketch_both(&self, right: &Matrix, left: &Matrix) -> Result<(Matrix, Matrix)> {
        Ok((self.matmul(right)?, self.t_matmul(left)?))
    }
}

/// Wraps a matrix and counts full sweeps over it.
pub struct PassCounter<'a> {
    inner: &'a Matrix,
    passes: Cell<usize>,
}

impl<'a> PassCounter<'a> {
    pub fn new(inner: &'a Matrix) -> Self {
        PassCounter { inner, passes: Cell::new(0) }
    }

    pub fn passes(&self) -> usize {
        self.passes.get()
    }

    fn tick(&self) {
        self.passes.set(self.passes.get() + 1);
    }
}

impl DataMatrix for PassCounter<'_> {
    fn shape(&self) -> (usize, usize) {
        self.inner.shape()
    }

    fn apply(&self, x: &Matrix) -> Result<Matrix> {
        self.tick();
        self.inner.apply(x)
    }

    fn apply_transpose(&self, y: &Matrix) -> Result<Matrix> {
        self.tick();
        self.inner.apply_transpose(y)
    }

    fn compress(&self, left: &Matrix, right: &Matrix) -> Result<Matrix> {
        self.tick();
        self.inner.compress(left, right)
    }

    fn sketch_both(&self, right: &Matrix, left: &Matrix) -> Result<(Matrix, Matrix)> {
        self.tick();
        self.inner.sketch_both(right, left)
    }
}

/// Runs `run` against a pass-instrumented view of `a` and returns the pass
/// total alongside the result.
pub fn count_passes<T>(
    a: &Matrix,
    run: impl FnOnce(&PassCounter<'_>) -> Result<T>,
) -> Result<(T, usize)> {
    let counter = PassCounter::new(a);
    let out = run(&counter)?;
    Ok((out, counter.passes()))
}
