//! Local interaction terms and patch operators.
//!
//! Three interchangeable term families share one operator container: rank
//! projector complements onto two-site support spaces, dense spin-5/2
//! interaction matrices built from explicit polynomial factors, and
//! four-site block complements used by the gap arguments.

use crate::lattice::{Block, HexLattice, Orientation, SiteId};
use crate::linalg::{self, C64, ZERO};
use crate::par;
use crate::peps::{self, Boundary, ProjectorKind, ProjectorSpec};
use crate::tensorops;
use nalgebra::DMatrix;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HamError {
    #[error("support rank {got}, expected {expected}")]
    RankMismatch { expected: usize, got: usize },
    #[error("dense operator of {needed} bytes exceeds budget of {budget} bytes")]
    Budget { needed: usize, budget: usize },
    #[error(transparent)]
    Peps(#[from] peps::PepsError),
}

/// Interaction families selectable at assembly time.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Flavor {
    Projector,
    Spin,
    BlockK,
}

/// Local matrix data of one term. The factored projector-complement form
/// applies `v - B (B† v)` per slice, much cheaper than a dense product when
/// the kept rank is small against the local dimension.
#[derive(Clone, Debug)]
pub enum TermPayload {
    Dense(DMatrix<C64>),
    ProjComplement { basis: DMatrix<C64> },
}

/// One local term: a matrix on `sites` (ascending, first most significant).
#[derive(Clone, Debug)]
pub struct OperatorTerm {
    pub sites: Vec<SiteId>,
    pub flavor: Flavor,
    pub orientation: Option<Orientation>,
    pub payload: TermPayload,
}

impl OperatorTerm {
    /// Local dimension the payload acts on.
    pub fn local_dim(&self) -> usize {
        match &self.payload {
            TermPayload::Dense(m) => m.nrows(),
            TermPayload::ProjComplement { basis } => basis.nrows(),
        }
    }

    /// Materialises the local matrix.
    pub fn dense_local(&self) -> DMatrix<C64> {
        match &self.payload {
            TermPayload::Dense(m) => m.clone(),
            TermPayload::ProjComplement { basis } => {
                DMatrix::identity(basis.nrows(), basis.nrows()) - basis * basis.adjoint()
            }
        }
    }

    /// y += (term ⊗ identity) x over the product space of `dims`, with this
    /// term occupying `positions`.
    pub fn add_apply(&self, dims: &[usize], positions: &[usize], x: &[C64], y: &mut [C64]) {
        match &self.payload {
            TermPayload::Dense(m) => tensorops::add_apply_dense(m, dims, positions, x, y),
            TermPayload::ProjComplement { basis } => {
                tensorops::add_apply_projector_complement(basis, dims, positions, x, y)
            }
        }
    }
}

/// Sum of local terms over an ordered site list.
#[derive(Clone, Debug)]
pub struct HamiltonianOperator {
    pub site_order: Vec<SiteId>,
    pub dims: Vec<usize>,
    pub terms: Vec<OperatorTerm>,
}

impl HamiltonianOperator {
    pub fn total_dim(&self) -> usize {
        self.dims.iter().product()
    }

    fn positions_of(&self, term: &OperatorTerm) -> Vec<usize> {
        term.sites
            .iter()
            .map(|s| {
                self.site_order
                    .binary_search(s)
                    .expect("term site inside operator site order")
            })
            .collect()
    }

    /// y = H x. Terms apply in a fixed sequence so results are bitwise
    /// reproducible regardless of thread count.
    pub fn apply_into(&self, x: &[C64], y: &mut [C64]) {
        y.iter_mut().for_each(|v| *v = ZERO);
        for term in &self.terms {
            let positions = self.positions_of(term);
            term.add_apply(&self.dims, &positions, x, y);
        }
    }

    pub fn to_dense(&self, budget_bytes: usize) -> Result<DMatrix<C64>, HamError> {
        let n = self.total_dim();
        let needed = n * n * std::mem::size_of::<C64>();
        if needed > budget_bytes {
            return Err(HamError::Budget {
                needed,
                budget: budget_bytes,
            });
        }
        let mut dense = DMatrix::zeros(n, n);
        let mut x = vec![ZERO; n];
        let mut y = vec![ZERO; n];
        for col in 0..n {
            x[col] = linalg::ONE;
            self.apply_into(&x, &mut y);
            for row in 0..n {
                dense[(row, col)] = y[row];
            }
            x[col] = ZERO;
        }
        Ok(dense)
    }
}

impl linalg::LinOp for HamiltonianOperator {
    fn dim(&self) -> usize {
        self.total_dim()
    }

    fn apply(&self, x: &[C64], y: &mut [C64]) {
        self.apply_into(x, y);
    }
}

/// The sixteen boundary-closure states of one bonded site pair, columns
/// indexed by sign choices on the four unbonded legs (ascending leg order,
/// first leg most significant, bit 1 = odd closure). Rows are the pair's
/// physical configurations in site order (left/lower site first).
pub fn pair_support(orientation: Orientation) -> DMatrix<C64> {
    // In site order every horizontal bond joins first.right to second.left
    // and every vertical bond joins first.up to second.down; legs sit at
    // (left, right, vertical) x (site 1, site 2).
    let (q1, q2) = match orientation {
        Orientation::ALeftOfB | Orientation::ARightOfB => (1usize, 3usize),
        Orientation::ABelowB => (2usize, 5usize),
    };
    let free: Vec<usize> = (0..6).filter(|q| *q != q1 && *q != q2).collect();
    let phi = peps::singlet();
    let t = ProjectorKind::Tric;
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut m = DMatrix::zeros(36, 16);
    for ka in 0..6 {
        for kb in 0..6 {
            let ba = t.bits(ka);
            let bb = t.bits(kb);
            let bits = [ba[0], ba[1], ba[2], bb[0], bb[1], bb[2]];
            let w = phi[(bits[q1] as usize, bits[q2] as usize)];
            if w == ZERO {
                continue;
            }
            for col in 0..16 {
                let mut amp = w;
                for (j, &q) in free.iter().enumerate() {
                    let odd = col >> (3 - j) & 1 == 1;
                    let s = if odd && bits[q] == 1 { -h } else { h };
                    amp *= linalg::cr(s);
                }
                m[(ka * 6 + kb, col)] = amp;
            }
        }
    }
    m
}

/// Projector-complement term for one bond: identity minus the orthogonal
/// projector onto the pair support. The support must have rank 16.
pub fn h_projector(orientation: Orientation, rank_tol: f64) -> Result<TermPayload, HamError> {
    let map = pair_support(orientation);
    let space = peps::orthonormal_image(&map, rank_tol);
    if space.rank != 16 {
        return Err(HamError::RankMismatch {
            expected: 16,
            got: space.rank,
        });
    }
    Ok(TermPayload::ProjComplement { basis: space.basis })
}

/// Spin-5/2 operators expressed in the physical level basis after relabeling
/// levels by `level_map` (entry i names the level carrying the i-th largest
/// magnetic quantum number).
#[derive(Clone, Debug)]
pub struct SpinMatrices {
    pub s_z: DMatrix<C64>,
    pub s_plus: DMatrix<C64>,
    pub s_minus: DMatrix<C64>,
    pub s_x: DMatrix<C64>,
    pub s_y: DMatrix<C64>,
    pub level_map: [usize; 6],
}

pub fn spin_matrices(level_map: [usize; 6]) -> SpinMatrices {
    let s = 2.5f64;
    let mut s_z = DMatrix::zeros(6, 6);
    let mut s_plus: DMatrix<C64> = DMatrix::zeros(6, 6);
    for i in 0..6 {
        let m = s - i as f64;
        s_z[(level_map[i], level_map[i])] = linalg::cr(m);
        if i > 0 {
            // Raising connects m to m+1, one slot up the ladder.
            let amp = (s * (s + 1.0) - m * (m + 1.0)).sqrt();
            s_plus[(level_map[i - 1], level_map[i])] = linalg::cr(amp);
        }
    }
    let s_minus = s_plus.adjoint();
    let s_x = (&s_plus + &s_minus).map(|x| x * 0.5);
    let s_y = (&s_plus - &s_minus).map(|x| x * C64::new(0.0, -0.5));
    SpinMatrices {
        s_z,
        s_plus,
        s_minus,
        s_x,
        s_y,
        level_map,
    }
}

impl SpinMatrices {
    /// a·S_z + b·I.
    fn zlin(&self, a: f64, b: f64) -> DMatrix<C64> {
        self.s_z.map(|x| x * a) + DMatrix::identity(6, 6).map(|x: C64| x * b)
    }

    /// Polynomial in S_z, coefficients ascending from the constant term.
    fn zpoly(&self, coeffs: &[f64]) -> DMatrix<C64> {
        let mut acc: DMatrix<C64> = DMatrix::zeros(6, 6);
        for &c in coeffs.iter().rev() {
            acc = &acc * &self.s_z + DMatrix::identity(6, 6).map(|x: C64| x * c);
        }
        acc
    }

    /// Product of linear factors (aᵢ·S_z + bᵢ·I), leftmost factor first.
    fn zchain(&self, factors: &[(f64, f64)]) -> DMatrix<C64> {
        let mut acc = DMatrix::identity(6, 6);
        for &(a, b) in factors {
            acc *= self.zlin(a, b);
        }
        acc
    }

    fn splus_pow(&self, n: usize) -> DMatrix<C64> {
        let mut acc = DMatrix::identity(6, 6);
        for _ in 0..n {
            acc *= &self.s_plus;
        }
        acc
    }
}

fn kron(a: &DMatrix<C64>, b: &DMatrix<C64>) -> DMatrix<C64> {
    a.kronecker(b)
}

/// Exchanges the two six-dimensional tensor factors of a 36×36 matrix.
fn swap_factors(m: &DMatrix<C64>) -> DMatrix<C64> {
    let mut out = DMatrix::zeros(36, 36);
    for i in 0..6 {
        for j in 0..6 {
            for k in 0..6 {
                for l in 0..6 {
                    out[(j * 6 + i, l * 6 + k)] = m[(i * 6 + j, k * 6 + l)];
                }
            }
        }
    }
    out
}

/// Interaction matrix for a horizontal pair with the A-sublattice site in
/// the first tensor slot.
fn h_spin_horizontal(spin: &SpinMatrices) -> DMatrix<C64> {
    let sq2 = std::f64::consts::SQRT_2;
    let sq10 = 10f64.sqrt();
    let t1 = kron(
        &spin.zchain(&[
            (2.0, -5.0),
            (2.0, -3.0),
            (2.0, -1.0),
            (2.0, 1.0),
            (4.0, 11.0),
        ]),
        &spin.zchain(&[
            (2.0, 5.0),
            (2.0, 3.0),
            (2.0, -1.0),
            (2.0, 1.0),
            (4.0, -11.0),
        ]),
    )
    .map(|x| x * 2.0);
    let t2 = kron(
        &(&spin.s_plus * spin.zchain(&[(2.0, -5.0), (2.0, 3.0), (2.0, -1.0), (2.0, 1.0)])),
        &spin.zpoly(&[67.0, -272.0, -280.0, 64.0, 48.0]),
    )
    .map(|x| x * (-75.0 * sq2));
    let t3 = kron(
        &spin.zpoly(&[67.0, 272.0, -280.0, -64.0, 48.0]),
        &(&spin.s_plus * spin.zchain(&[(2.0, -5.0), (2.0, -3.0), (2.0, -1.0), (2.0, 3.0)])),
    )
    .map(|x| x * (75.0 * sq2));
    let t4 = kron(
        &(spin.splus_pow(3) * spin.zchain(&[(2.0, -1.0), (2.0, -3.0)])),
        &spin.zpoly(&[675.0, -3848.0, -2840.0, 0.0, 560.0, 128.0]),
    )
    .map(|x| x * (4.0 * sq10));
    let t5 = kron(
        &spin.zpoly(&[-675.0, -3848.0, 2840.0, 0.0, -560.0, 128.0]),
        &(spin.splus_pow(3) * spin.zchain(&[(2.0, -5.0), (2.0, -3.0)])),
    )
    .map(|x| x * (4.0 * sq10));
    let m = t1 + t2 + t3 + t4 + t5;
    &m + m.adjoint()
}

/// Interaction matrix for a vertical pair with the lower site in the first
/// tensor slot; symmetric under exchanging the slots by construction.
fn h_spin_vertical(spin: &SpinMatrices) -> DMatrix<C64> {
    let eye = DMatrix::identity(6, 6);
    let v1 = kron(
        &spin.zchain(&[(2.0, -5.0), (2.0, -3.0), (2.0, 3.0), (2.0, 5.0)]),
        &eye,
    )
    .map(|x| x * -25.0);
    let v2 = kron(
        &(spin.splus_pow(3) * spin.zchain(&[(2.0, -5.0), (2.0, -1.0)])),
        &spin.zpoly(&[-9.0, 3550.0, 40.0, -1968.0, -16.0, 224.0]),
    )
    .map(|x| x * 25.0);
    let v3 = kron(
        &spin.splus_pow(5),
        &spin.zpoly(&[-125.0, 5994.0, 520.0, -3600.0, -80.0, 416.0]),
    )
    .map(|x| x * -12.0);
    let m = v1 + v2 + v3;
    let sym = &m + m.adjoint();
    &sym + swap_factors(&sym)
}

/// Dense spin interaction for a bond, expressed in site order (left or
/// lower site in the first slot).
pub fn h_spin(orientation: Orientation, spin: &SpinMatrices) -> DMatrix<C64> {
    match orientation {
        Orientation::ALeftOfB => h_spin_horizontal(spin),
        Orientation::ARightOfB => swap_factors(&h_spin_horizontal(spin)),
        Orientation::ABelowB => h_spin_vertical(spin),
    }
}

/// Four-site block-pair complement: identity minus the projector onto the
/// open-boundary support of the union of two adjacent vertical-bond blocks.
pub fn build_k_term(
    lattice: &HexLattice,
    block_m: &Block,
    block_n: &Block,
    rank_tol: f64,
) -> Result<OperatorTerm, HamError> {
    let mut sites = vec![block_m.lower, block_m.upper, block_n.lower, block_n.upper];
    sites.sort();
    let spec = ProjectorSpec::uniform(ProjectorKind::Tric);
    let map = peps::support_map(lattice, &sites, &spec, &Boundary::all_free())?;
    let space = peps::orthonormal_image(&map.matrix, rank_tol);
    let open = map.open_legs.len();
    if space.rank != 1 << open {
        return Err(HamError::RankMismatch {
            expected: 1 << open,
            got: space.rank,
        });
    }
    Ok(OperatorTerm {
        sites,
        flavor: Flavor::BlockK,
        orientation: None,
        payload: TermPayload::ProjComplement { basis: space.basis },
    })
}

/// Assembly knobs; defaults suit every patch the binary exposes.
#[derive(Clone, Debug)]
pub struct AssembleOptions {
    pub rank_tol: f64,
    pub level_map: [usize; 6],
}

impl Default for AssembleOptions {
    fn default() -> Self {
        AssembleOptions {
            rank_tol: 1e-9,
            level_map: [0, 1, 2, 3, 4, 5],
        }
    }
}

/// Builds the patch operator of the requested flavor: one term per bond for
/// the two-site flavors, one term per adjacent block pair for the block
/// flavor.
pub fn assemble(
    lattice: &HexLattice,
    flavor: Flavor,
    opts: &AssembleOptions,
) -> Result<HamiltonianOperator, HamError> {
    let site_order: Vec<SiteId> = (0..lattice.n_sites()).collect();
    let dims = vec![6usize; lattice.n_sites()];
    let mut terms = Vec::new();
    match flavor {
        Flavor::Projector => {
            let horizontal = h_projector(Orientation::ALeftOfB, opts.rank_tol)?;
            let vertical = h_projector(Orientation::ABelowB, opts.rank_tol)?;
            for bond in lattice.bonds() {
                let orientation = lattice.classify_bond(bond);
                let payload = match orientation {
                    Orientation::ABelowB => vertical.clone(),
                    _ => horizontal.clone(),
                };
                let (s, t) = bond.sites();
                terms.push(OperatorTerm {
                    sites: vec![s.min(t), s.max(t)],
                    flavor,
                    orientation: Some(orientation),
                    payload,
                });
            }
        }
        Flavor::Spin => {
            let spin = spin_matrices(opts.level_map);
            for bond in lattice.bonds() {
                let orientation = lattice.classify_bond(bond);
                let (s, t) = bond.sites();
                terms.push(OperatorTerm {
                    sites: vec![s.min(t), s.max(t)],
                    flavor,
                    orientation: Some(orientation),
                    payload: TermPayload::Dense(h_spin(orientation, &spin)),
                });
            }
        }
        Flavor::BlockK => {
            let partition = lattice.block_partition();
            for entry in &partition.adjacency {
                if entry.m < entry.n {
                    terms.push(build_k_term(
                        lattice,
                        &partition.blocks[entry.m],
                        &partition.blocks[entry.n],
                        opts.rank_tol,
                    )?);
                }
            }
        }
    }
    Ok(HamiltonianOperator {
        site_order,
        dims,
        terms,
    })
}

/// Eigenvalue facts for one bond matrix of a candidate level relabeling.
#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct OrientationDiag {
    pub orientation: Orientation,
    pub min_eigenvalue: f64,
    pub max_abs_eigenvalue: f64,
    pub negative_diagonal_entries: usize,
    pub kernel_dim: usize,
    pub kernel_alignment_sine: f64,
}

/// Diagnostics for one candidate relabeling across the three bond types.
#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct PermDiagnostics {
    pub level_map: Vec<usize>,
    pub orientations: Vec<OrientationDiag>,
}

/// Outcome of the exhaustive relabeling search.
#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct LevelMapReport {
    pub found: Option<Vec<usize>>,
    pub permutations_checked: usize,
    pub tol: f64,
    /// Candidate whose worst relative minimum eigenvalue is largest.
    pub best: PermDiagnostics,
    pub identity: PermDiagnostics,
}

const KERNEL_SINE_TOL: f64 = 1e-6;

fn orientation_diag(
    h: &DMatrix<C64>,
    orientation: Orientation,
    support: &DMatrix<C64>,
    rel_tol: f64,
) -> OrientationDiag {
    let (eigs, vecs) = linalg::hermitian_eigen(h);
    let scale = eigs
        .iter()
        .fold(0.0f64, |acc, &e| acc.max(e.abs()))
        .max(f64::MIN_POSITIVE);
    let kernel_cols: Vec<usize> = (0..eigs.len())
        .filter(|&i| eigs[i].abs() <= rel_tol * scale)
        .collect();
    let kernel = DMatrix::from_fn(36, kernel_cols.len(), |r, c| vecs[(r, kernel_cols[c])]);
    let sine = if kernel_cols.is_empty() {
        1.0
    } else {
        linalg::subspace_sine(&kernel, support)
    };
    let negative_diagonal_entries = (0..36).filter(|&i| h[(i, i)].re < -rel_tol * scale).count();
    OrientationDiag {
        orientation,
        min_eigenvalue: eigs[0],
        max_abs_eigenvalue: scale,
        negative_diagonal_entries,
        kernel_dim: kernel_cols.len(),
        kernel_alignment_sine: sine,
    }
}

fn perm_diagnostics(level_map: [usize; 6], rel_tol: f64) -> PermDiagnostics {
    let spin = spin_matrices(level_map);
    let horizontal_support =
        peps::orthonormal_image(&pair_support(Orientation::ALeftOfB), 1e-9).basis;
    let vertical_support = peps::orthonormal_image(&pair_support(Orientation::ABelowB), 1e-9).basis;
    let swapped_support = {
        // Site order puts the B site first for this orientation.
        let mut m = DMatrix::zeros(36, 16);
        for i in 0..6 {
            for j in 0..6 {
                for c in 0..16 {
                    m[(j * 6 + i, c)] = horizontal_support[(i * 6 + j, c)];
                }
            }
        }
        m
    };
    let orientations = vec![
        orientation_diag(
            &h_spin(Orientation::ALeftOfB, &spin),
            Orientation::ALeftOfB,
            &horizontal_support,
            rel_tol,
        ),
        orientation_diag(
            &h_spin(Orientation::ARightOfB, &spin),
            Orientation::ARightOfB,
            &swapped_support,
            rel_tol,
        ),
        orientation_diag(
            &h_spin(Orientation::ABelowB, &spin),
            Orientation::ABelowB,
            &vertical_support,
            rel_tol,
        ),
    ];
    PermDiagnostics {
        level_map: level_map.to_vec(),
        orientations,
    }
}

fn diag_accepts(d: &PermDiagnostics, rel_tol: f64) -> bool {
    d.orientations.iter().all(|o| {
        o.min_eigenvalue >= -rel_tol * o.max_abs_eigenvalue
            && o.kernel_dim == 16
            && o.kernel_alignment_sine <= KERNEL_SINE_TOL
    })
}

fn worst_relative_min(d: &PermDiagnostics) -> f64 {
    d.orientations
        .iter()
        .map(|o| o.min_eigenvalue / o.max_abs_eigenvalue)
        .fold(f64::INFINITY, f64::min)
}

/// Searches all 720 level relabelings for one making every bond matrix
/// positive semidefinite with kernel equal to the pair support.
pub fn find_level_map(rel_tol: f64) -> LevelMapReport {
    let perms = permutations();
    let diags: Vec<PermDiagnostics> =
        par::map_collect(perms.len(), |i| perm_diagnostics(perms[i], rel_tol));
    let found = diags
        .iter()
        .find(|d| diag_accepts(d, rel_tol))
        .map(|d| d.level_map.clone());
    let best = diags
        .iter()
        .max_by(|a, b| worst_relative_min(a).total_cmp(&worst_relative_min(b)))
        .expect("permutation list is nonempty")
        .clone();
    let identity = diags
        .iter()
        .find(|d| d.level_map == vec![0, 1, 2, 3, 4, 5])
        .expect("identity permutation present")
        .clone();
    LevelMapReport {
        found,
        permutations_checked: perms.len(),
        tol: rel_tol,
        best,
        identity,
    }
}

fn permutations() -> Vec<[usize; 6]> {
    fn heap(k: usize, a: &mut [usize; 6], out: &mut Vec<[usize; 6]>) {
        if k == 1 {
            out.push(*a);
            return;
        }
        for i in 0..k {
            heap(k - 1, a, out);
            if k.is_multiple_of(2) {
                a.swap(i, k - 1);
            } else {
                a.swap(0, k - 1);
            }
        }
    }
    let mut out = Vec::with_capacity(720);
    heap(6, &mut [0, 1, 2, 3, 4, 5], &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pair_support_has_rank_sixteen() {
        for orientation in [
            Orientation::ALeftOfB,
            Orientation::ARightOfB,
            Orientation::ABelowB,
        ] {
            let space = peps::orthonormal_image(&pair_support(orientation), 1e-9);
            assert_eq!(space.rank, 16);
        }
    }

    #[test]
    fn projector_term_annihilates_support() {
        let map = pair_support(Orientation::ABelowB);
        let payload = h_projector(Orientation::ABelowB, 1e-9).unwrap();
        let term = OperatorTerm {
            sites: vec![0, 1],
            flavor: Flavor::Projector,
            orientation: Some(Orientation::ABelowB),
            payload,
        };
        let h = term.dense_local();
        for c in 0..16 {
            let col = map.column(c).into_owned();
            let res = &h * &col;
            assert!(res.norm() < 1e-12);
        }
        // Complement of a projector: Hermitian and idempotent.
        assert!((&h - h.adjoint()).norm() < 1e-12);
        assert!((&h * &h - &h).norm() < 1e-10);
    }

    #[test]
    fn spin_ladder_identities() {
        let spin = spin_matrices([0, 1, 2, 3, 4, 5]);
        let comm = &spin.s_z * &spin.s_plus - &spin.s_plus * &spin.s_z;
        assert!((comm - &spin.s_plus).norm() < 1e-12);
        let comm2 = &spin.s_plus * &spin.s_minus - &spin.s_minus * &spin.s_plus;
        assert!((comm2 - spin.s_z.map(|x| x * 2.0)).norm() < 1e-12);
        let casimir = &spin.s_x * &spin.s_x + &spin.s_y * &spin.s_y + &spin.s_z * &spin.s_z;
        let expect = DMatrix::identity(6, 6).map(|x: C64| x * (2.5 * 3.5));
        assert!((casimir - expect).norm() < 1e-12);
    }

    #[test]
    fn relabeled_spin_matrices_are_conjugate() {
        let base = spin_matrices([0, 1, 2, 3, 4, 5]);
        let perm = [3, 0, 5, 1, 4, 2];
        let mapped = spin_matrices(perm);
        let mut q: DMatrix<C64> = DMatrix::zeros(6, 6);
        for i in 0..6 {
            q[(perm[i], i)] = linalg::ONE;
        }
        let conj = &q * &base.s_plus * q.adjoint();
        assert!((conj - &mapped.s_plus).norm() < 1e-12);
    }

    #[test]
    fn spin_bond_matrices_are_hermitian() {
        let spin = spin_matrices([0, 1, 2, 3, 4, 5]);
        for orientation in [
            Orientation::ALeftOfB,
            Orientation::ARightOfB,
            Orientation::ABelowB,
        ] {
            let h = h_spin(orientation, &spin);
            assert!((&h - h.adjoint()).norm() < 1e-9 * h.norm().max(1.0));
        }
    }

    #[test]
    fn vertical_spin_matrix_is_swap_symmetric() {
        let spin = spin_matrices([0, 1, 2, 3, 4, 5]);
        let h = h_spin(Orientation::ABelowB, &spin);
        assert!((swap_factors(&h) - &h).norm() < 1e-9 * h.norm());
    }

    #[test]
    fn horizontal_orientations_are_swaps_of_each_other() {
        let spin = spin_matrices([0, 1, 2, 3, 4, 5]);
        let l = h_spin(Orientation::ALeftOfB, &spin);
        let r = h_spin(Orientation::ARightOfB, &spin);
        assert!((swap_factors(&l) - &r).norm() < 1e-12 * l.norm());
    }

    #[test]
    fn dense_operator_matches_term_sum() {
        let lattice = HexLattice::build_patch(1, 2).unwrap();
        let op = assemble(&lattice, Flavor::Projector, &Default::default()).unwrap();
        let dense = op.to_dense(1 << 26).unwrap();
        let local = op.terms[0].dense_local();
        assert!((dense - local).norm() < 1e-12);
    }

    #[test]
    fn permutation_count() {
        let perms = permutations();
        assert_eq!(perms.len(), 720);
        let unique: std::collections::BTreeSet<[usize; 6]> = perms.iter().copied().collect();
        assert_eq!(unique.len(), 720);
    }
}
