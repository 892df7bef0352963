//! Dense and iterative Hermitian linear algebra on complex vectors.
//!
//! Everything here is deterministic: eigendecompositions come from dense
//! solvers with a fixed ordering convention, iterative solves use a seeded
//! start vector, and long sums run as pairwise trees so results do not depend
//! on thread count or summation chunking.

pub use nalgebra::DMatrix;

use nalgebra::DVector;
use num_complex::Complex;
use rand_core::{RngCore, SeedableRng};

pub type C64 = Complex<f64>;

pub const ZERO: C64 = Complex::new(0.0, 0.0);
pub const ONE: C64 = Complex::new(1.0, 0.0);

pub fn c(re: f64, im: f64) -> C64 {
    Complex::new(re, im)
}

pub fn cr(re: f64) -> C64 {
    Complex::new(re, 0.0)
}

/// Pairwise (tree) sum; bit-reproducible for a fixed slice regardless of how
/// the surrounding computation is parallelized.
pub fn pairwise_sum(xs: &[C64]) -> C64 {
    if xs.len() <= 32 {
        let mut acc = ZERO;
        for x in xs {
            acc += x;
        }
        return acc;
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

// Fixed block size for chunked vector kernels; the chunk grid depends only
// on the vector length, so parallel results match sequential ones bitwise.
const CHUNK: usize = 8192;

/// Inner product ⟨a|b⟩, conjugate-linear in the first argument.
pub fn dot(a: &[C64], b: &[C64]) -> C64 {
    assert_eq!(a.len(), b.len());
    let chunks = a.len().div_ceil(CHUNK).max(1);
    let partials = crate::par::map_collect(chunks, |g| {
        let lo = g * CHUNK;
        let hi = (lo + CHUNK).min(a.len());
        let prods: Vec<C64> = (lo..hi).map(|i| a[i].conj() * b[i]).collect();
        pairwise_sum(&prods)
    });
    pairwise_sum(&partials)
}

pub fn norm(a: &[C64]) -> f64 {
    dot(a, a).re.max(0.0).sqrt()
}

pub fn scale_in_place(a: &mut [C64], s: C64) {
    for x in a {
        *x *= s;
    }
}

pub fn axpy(y: &mut [C64], alpha: C64, x: &[C64]) {
    assert_eq!(y.len(), x.len());
    let n = y.len();
    let chunks = n.div_ceil(CHUNK).max(1);
    let out = crate::par::DisjointWrites::new(y);
    crate::par::for_each_group(chunks, |g| {
        let lo = g * CHUNK;
        let hi = (lo + CHUNK).min(n);
        for (i, &xi) in x[lo..hi].iter().enumerate() {
            // Chunks are disjoint index ranges.
            unsafe { out.add_assign(lo + i, alpha * xi) };
        }
    });
}

/// Deterministic pseudo-random complex vector with entries in the unit box,
/// used as iterative start vectors and randomized probe states.
pub fn seeded_vector(dim: usize, seed: u64) -> Vec<C64> {
    let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed);
    let mut draw = || (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64 - 0.5;
    (0..dim).map(|_| c(draw(), draw())).collect()
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues ascending with
/// matching eigenvector columns.
pub fn hermitian_eigen(m: &DMatrix<C64>) -> (Vec<f64>, DMatrix<C64>) {
    let n = m.nrows();
    assert_eq!(n, m.ncols());
    let se = m.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| se.eigenvalues[i].total_cmp(&se.eigenvalues[j]));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| se.eigenvalues[i]).collect();
    let mut vectors = DMatrix::<C64>::zeros(n, n);
    for (k, &i) in order.iter().enumerate() {
        vectors.set_column(k, &se.eigenvectors.column(i));
    }
    (eigenvalues, vectors)
}

/// Orthonormal basis of the column space of `map`, with the numerical rank.
///
/// Rank counts singular values above `rel_tol` times the largest one. The
/// basis comes from the (small) Gram matrix `map† map`: if `v` is a unit
/// eigenvector of the Gram matrix with eigenvalue σ², then `map v / σ` is a
/// unit left singular vector, and distinct ones are automatically orthogonal.
pub struct ImageBasis {
    pub basis: DMatrix<C64>,
    pub rank: usize,
    pub sigma_max: f64,
}

pub fn image_basis(map: &DMatrix<C64>, rel_tol: f64) -> ImageBasis {
    let gram = map.adjoint() * map;
    let (evals, evecs) = hermitian_eigen(&gram);
    let lambda_max = evals.last().copied().unwrap_or(0.0).max(0.0);
    let sigma_max = lambda_max.sqrt();
    // Forming the Gram matrix squares singular values, so its eigenvalues
    // carry rounding noise of order dim·eps·lambda_max. Anything below that
    // is indistinguishable from zero no matter how small `rel_tol` is.
    let noise_floor = 8.0 * map.nrows().max(map.ncols()) as f64 * f64::EPSILON;
    let cut = lambda_max * (rel_tol * rel_tol).max(noise_floor);
    let mut cols: Vec<DVector<C64>> = Vec::new();
    // Largest singular value first keeps the basis ordering deterministic.
    for i in (0..evals.len()).rev() {
        if evals[i] > cut && evals[i] > 0.0 {
            let sigma = evals[i].sqrt();
            let col = map * evecs.column(i) / cr(sigma);
            cols.push(col);
        }
    }
    let rank = cols.len();
    let basis = if rank == 0 {
        DMatrix::<C64>::zeros(map.nrows(), 0)
    } else {
        DMatrix::from_columns(&cols)
    };
    ImageBasis {
        basis,
        rank,
        sigma_max,
    }
}

/// Largest principal-angle sine of the columns of `v` against span(`u`).
///
/// Both inputs need orthonormal columns. Computed as the largest singular
/// value of `(I − uu†)v`, which stays well conditioned for angles near zero
/// (where cosines saturate at 1 in f64).
pub fn max_sine_against(u: &DMatrix<C64>, v: &DMatrix<C64>) -> f64 {
    if v.ncols() == 0 {
        return 0.0;
    }
    let overlap = u.adjoint() * v;
    let w = v - u * overlap;
    let (evals, _) = hermitian_eigen(&(w.adjoint() * &w));
    evals.last().copied().unwrap_or(0.0).max(0.0).sqrt()
}

/// Symmetric subspace distance: the larger of the two directional sines.
pub fn subspace_sine(u: &DMatrix<C64>, v: &DMatrix<C64>) -> f64 {
    max_sine_against(u, v).max(max_sine_against(v, u))
}

/// Removes the components of `v` lying in span(`q`) (orthonormal columns).
pub fn project_out(q: &DMatrix<C64>, v: &mut [C64]) {
    if q.ncols() == 0 {
        return;
    }
    let vv = DVector::from_column_slice(v);
    let coeffs = q.adjoint() * &vv;
    let res = vv - q * coeffs;
    v.copy_from_slice(res.as_slice());
}

/// A Hermitian linear operator given by its action on vectors.
pub trait LinOp: Sync {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[C64], y: &mut [C64]);
}

pub struct DenseOp<'a>(pub &'a DMatrix<C64>);

impl<'a> LinOp for DenseOp<'a> {
    fn dim(&self) -> usize {
        self.0.nrows()
    }
    fn apply(&self, x: &[C64], y: &mut [C64]) {
        let xv = DVector::from_column_slice(x);
        let yv = self.0 * xv;
        y.copy_from_slice(yv.as_slice());
    }
}

/// Result of an iterative extreme-eigenvalue solve.
#[derive(Debug, Clone)]
pub struct Spectrum {
    /// Converged (or best-effort) eigenvalues, ascending.
    pub eigenvalues: Vec<f64>,
    /// Residual estimates ‖Av − λv‖ per reported eigenvalue.
    pub residuals: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Lanczos with full reorthogonalization for the `k` smallest eigenvalues of
/// a Hermitian operator, optionally deflating a known invariant subspace
/// (orthonormal columns of `deflate`), e.g. an analytically known kernel.
///
/// Full reorthogonalization keeps the basis numerically orthogonal so no
/// ghost eigenvalue duplicates appear; patch dimensions here (≤ 6^6) leave
/// the basis storage cheap relative to operator applications.
pub fn lanczos_smallest(
    op: &dyn LinOp,
    k: usize,
    tol: f64,
    max_iter: usize,
    deflate: &DMatrix<C64>,
    seed: u64,
) -> Spectrum {
    let n = op.dim();
    let kernel_rank = deflate.ncols();
    let free_dim = n - kernel_rank;
    let want = k.min(free_dim);
    if want == 0 {
        return Spectrum {
            eigenvalues: vec![],
            residuals: vec![],
            iterations: 0,
            converged: true,
        };
    }

    let mut basis: Vec<Vec<C64>> = Vec::new();
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();

    let mut v = seeded_vector(n, seed);
    project_out(deflate, &mut v);
    let nv = norm(&v);
    assert!(nv > 0.0, "start vector vanished under deflation");
    scale_in_place(&mut v, cr(1.0 / nv));
    basis.push(v);

    let mut w = vec![ZERO; n];
    let max_iter = max_iter.min(free_dim);

    loop {
        let j = basis.len() - 1;
        let iterations = j + 1;
        op.apply(&basis[j], &mut w);
        project_out(deflate, &mut w);
        let alpha = dot(&basis[j], &w).re;
        alphas.push(alpha);
        // Full reorthogonalization, twice for safety against cancellation.
        for _pass in 0..2 {
            for b in &basis {
                let coeff = dot(b, &w);
                axpy(&mut w, -coeff, b);
            }
        }
        let beta = norm(&w);

        let (ritz, ok) = tridiag_check(&alphas, &betas, beta, want, tol);
        let finished = ok || beta < 1e-300 || iterations >= max_iter;
        if finished {
            let (evals, residuals) = ritz;
            return Spectrum {
                eigenvalues: evals,
                residuals,
                iterations,
                converged: ok,
            };
        }

        betas.push(beta);
        let mut next = w.clone();
        scale_in_place(&mut next, cr(1.0 / beta));
        basis.push(next);
    }
}

/// Eigenvalues of the current Lanczos tridiagonal plus residual bounds
/// |β_m · s_last| for the `want` smallest; `ok` when all are below `tol`.
fn tridiag_check(
    alphas: &[f64],
    betas: &[f64],
    beta_next: f64,
    want: usize,
    tol: f64,
) -> ((Vec<f64>, Vec<f64>), bool) {
    let m = alphas.len();
    let mut t = DMatrix::<f64>::zeros(m, m);
    for i in 0..m {
        t[(i, i)] = alphas[i];
        if i + 1 < m {
            t[(i, i + 1)] = betas[i];
            t[(i + 1, i)] = betas[i];
        }
    }
    let se = t.symmetric_eigen();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&i, &j| se.eigenvalues[i].total_cmp(&se.eigenvalues[j]));
    let take = want.min(m);
    let mut evals = Vec::with_capacity(take);
    let mut residuals = Vec::with_capacity(take);
    for &idx in order.iter().take(take) {
        evals.push(se.eigenvalues[idx]);
        residuals.push((beta_next * se.eigenvectors[(m - 1, idx)]).abs());
    }
    let ok = take == want && residuals.iter().all(|r| *r < tol);
    ((evals, residuals), ok)
}

/// Dense materialization of an operator; test/debug helper.
pub fn dense_from_op(op: &dyn LinOp) -> DMatrix<C64> {
    let n = op.dim();
    let mut out = DMatrix::<C64>::zeros(n, n);
    let mut x = vec![ZERO; n];
    let mut y = vec![ZERO; n];
    for j in 0..n {
        x[j] = ONE;
        op.apply(&x, &mut y);
        for i in 0..n {
            out[(i, j)] = y[i];
        }
        x[j] = ZERO;
    }
    out
}
