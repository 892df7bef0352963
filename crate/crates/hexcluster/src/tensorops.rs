//! Strided application of local operators to vectors in a tensor-product
//! space.
//!
//! State layout convention used across the crate: for an ordered list of
//! subsystem dimensions `dims = [d_0, .., d_{n-1}]`, the flat index of a
//! multi-index `(a_0, .., a_{n-1})` is row-major with `a_0` most significant:
//! `idx = a_0·(d_1···d_{n-1}) + ... + a_{n-1}`.

use crate::linalg::{C64, ZERO};
use crate::par;
use nalgebra::DMatrix;

/// Strides for the row-major layout of `dims`.
pub fn strides(dims: &[usize]) -> Vec<usize> {
    let mut s = vec![1usize; dims.len()];
    for i in (0..dims.len().saturating_sub(1)).rev() {
        s[i] = s[i + 1] * dims[i + 1];
    }
    s
}

pub fn total_dim(dims: &[usize]) -> usize {
    dims.iter().product()
}

/// Flat offsets of all local configurations of the subsystems at `positions`
/// (ascending, row-major among themselves), other indices held at zero.
pub fn local_offsets(dims: &[usize], positions: &[usize]) -> Vec<usize> {
    let st = strides(dims);
    let mut offs = vec![0usize];
    for &p in positions {
        let mut next = Vec::with_capacity(offs.len() * dims[p]);
        for &base in &offs {
            for a in 0..dims[p] {
                next.push(base + a * st[p]);
            }
        }
        offs = next;
    }
    offs
}

/// Flat offsets of all configurations of the subsystems *not* in `positions`.
pub fn rest_offsets(dims: &[usize], positions: &[usize]) -> Vec<usize> {
    let rest: Vec<usize> = (0..dims.len()).filter(|i| !positions.contains(i)).collect();
    local_offsets(dims, &rest)
}

fn run_groups<F>(rest: &[usize], f: F)
where
    F: Fn(&[usize]) + Sync,
{
    // Chunk rest-index groups coarsely; each chunk owns disjoint offsets.
    let chunk = rest.len().div_ceil(256).max(1);
    let groups = rest.len().div_ceil(chunk);
    par::for_each_group(groups, |g| {
        let lo = g * chunk;
        let hi = (lo + chunk).min(rest.len());
        f(&rest[lo..hi]);
    });
}

/// y += (M acting on `positions` ⊗ identity elsewhere) x.
///
/// `matrix` is D×D with D the product of the dimensions at `positions`,
/// row-major over those positions in ascending order.
pub fn add_apply_dense(
    matrix: &DMatrix<C64>,
    dims: &[usize],
    positions: &[usize],
    x: &[C64],
    y: &mut [C64],
) {
    let loc = local_offsets(dims, positions);
    let d = loc.len();
    assert_eq!(matrix.nrows(), d);
    let rest = rest_offsets(dims, positions);
    let out = par::DisjointWrites::new(y);
    run_groups(&rest, |bases| {
        let mut xloc = vec![ZERO; d];
        let mut yloc = vec![ZERO; d];
        for &base in bases {
            for (a, &off) in loc.iter().enumerate() {
                xloc[a] = x[base + off];
            }
            yloc.iter_mut().for_each(|v| *v = ZERO);
            for b in 0..d {
                let xb = xloc[b];
                if xb != ZERO {
                    for a in 0..d {
                        yloc[a] += matrix[(a, b)] * xb;
                    }
                }
            }
            for (a, &off) in loc.iter().enumerate() {
                // Disjointness: distinct rest bases address distinct offsets.
                unsafe { out.add_assign(base + off, yloc[a]) };
            }
        }
    });
}

/// y += ((I − B B†) acting on `positions` ⊗ identity elsewhere) x.
///
/// `basis` holds orthonormal columns spanning the kernel of the projector
/// complement; this factored form applies rank-r projectors in O(D·r) per
/// slice instead of O(D²).
pub fn add_apply_projector_complement(
    basis: &DMatrix<C64>,
    dims: &[usize],
    positions: &[usize],
    x: &[C64],
    y: &mut [C64],
) {
    let loc = local_offsets(dims, positions);
    let d = loc.len();
    assert_eq!(basis.nrows(), d);
    let r = basis.ncols();
    let rest = rest_offsets(dims, positions);
    let out = par::DisjointWrites::new(y);
    run_groups(&rest, |bases| {
        let mut xloc = vec![ZERO; d];
        let mut coef = vec![ZERO; r];
        for &base in bases {
            for (a, &off) in loc.iter().enumerate() {
                xloc[a] = x[base + off];
            }
            for k in 0..r {
                let mut acc = ZERO;
                for a in 0..d {
                    acc += basis[(a, k)].conj() * xloc[a];
                }
                coef[k] = acc;
            }
            for k in 0..r {
                let ck = coef[k];
                for a in 0..d {
                    xloc[a] -= basis[(a, k)] * ck;
                }
            }
            for (a, &off) in loc.iter().enumerate() {
                unsafe { out.add_assign(base + off, xloc[a]) };
            }
        }
    });
}

/// Contracts one subsystem index with a bra vector: the result lives on the
/// remaining subsystems in their original order.
///
/// `out[rest] = Σ_a conj(bra[a]) · x[rest ⊗ a]`.
pub fn contract_index(dims: &[usize], position: usize, bra: &[C64], x: &[C64]) -> Vec<C64> {
    assert_eq!(bra.len(), dims[position]);
    let st = strides(dims);
    let rest = rest_offsets(dims, &[position]);
    let mut out = vec![ZERO; rest.len()];
    // rest_offsets enumerates the remaining subsystems row-major in their
    // original order, which is exactly the layout of the contracted vector.
    for (i, &base) in rest.iter().enumerate() {
        let mut acc = ZERO;
        for a in 0..dims[position] {
            acc += bra[a].conj() * x[base + a * st[position]];
        }
        out[i] = acc;
    }
    out
}

/// Squared norms of the slices along one subsystem index: entry `a` is the
/// weight of configuration `a` of that subsystem.
pub fn index_weights(dims: &[usize], position: usize, x: &[C64]) -> Vec<f64> {
    let st = strides(dims);
    let rest = rest_offsets(dims, &[position]);
    let mut w = vec![0.0f64; dims[position]];
    for &base in &rest {
        for (a, wa) in w.iter_mut().enumerate() {
            *wa += x[base + a * st[position]].norm_sqr();
        }
    }
    w
}
