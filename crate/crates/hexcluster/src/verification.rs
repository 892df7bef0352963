//! Patch-level certificates: support-space uniqueness, map injectivity,
//! ground-space membership, spectra above the kernel, and the operator
//! inequalities behind the spectral-gap bound.
//!
//! Every check computes its claim along two routes where feasible (dense
//! eigensolve against factored/iterative evidence) and reports raw numbers
//! next to the pass verdict, so a failure is diagnosable from the report
//! alone.

use crate::hamiltonian::{self, AssembleOptions, Flavor, HamiltonianOperator, OperatorTerm};
use crate::lattice::{HexLattice, NeighborPosition, PairClass, PatchSpec, SiteId};
use crate::linalg::{self, LinOp, C64, ZERO};
use crate::peps::{self, Boundary, ProjectorKind, ProjectorSpec, SupportSpace};
use crate::tensorops;
use nalgebra::DMatrix;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error(transparent)]
    Lattice(#[from] crate::lattice::LatticeError),
    #[error(transparent)]
    Peps(#[from] peps::PepsError),
    #[error(transparent)]
    Ham(#[from] hamiltonian::HamError),
    #[error("patch has no {0}")]
    MissingStructure(&'static str),
}

/// Eigenvalues at most this are counted as kernel directions throughout.
pub const KERNEL_TOL: f64 = 1e-7;

/// Ambients up to this use dense eigensolves; larger ones go iterative.
const DENSE_DIM_LIMIT: usize = 1536;

fn tric_spec() -> ProjectorSpec {
    ProjectorSpec::uniform(ProjectorKind::Tric)
}

/// Orthonormal basis of the open-boundary support of `region`.
fn region_support(lattice: &HexLattice, region: &[SiteId]) -> Result<SupportSpace, VerifyError> {
    let map = peps::support_map(lattice, region, &tric_spec(), &Boundary::all_free())?;
    Ok(peps::orthonormal_image(&map.matrix, 1e-9))
}

/// One bond-term operator per internal bond of `region`.
fn region_bond_operator(
    lattice: &HexLattice,
    region: &[SiteId],
    rank_tol: f64,
) -> Result<HamiltonianOperator, VerifyError> {
    let mut terms = Vec::new();
    for bond in lattice.internal_bonds(region) {
        let orientation = lattice.classify_bond(&bond);
        let payload = hamiltonian::h_projector(orientation, rank_tol)?;
        let (s, t) = bond.sites();
        terms.push(OperatorTerm {
            sites: vec![s.min(t), s.max(t)],
            flavor: Flavor::Projector,
            orientation: Some(orientation),
            payload,
        });
    }
    Ok(HamiltonianOperator {
        site_order: region.to_vec(),
        dims: vec![6; region.len()],
        terms,
    })
}

/// Largest norm of the operator applied to any basis column.
fn max_apply_residual(op: &HamiltonianOperator, basis: &DMatrix<C64>) -> f64 {
    let n = op.total_dim();
    assert_eq!(basis.nrows(), n);
    let mut x = vec![ZERO; n];
    let mut y = vec![ZERO; n];
    let mut worst: f64 = 0.0;
    for c in 0..basis.ncols() {
        for (i, xi) in x.iter_mut().enumerate() {
            *xi = basis[(i, c)];
        }
        op.apply_into(&x, &mut y);
        worst = worst.max(linalg::norm(&y));
    }
    worst
}

/// Tensors `basis` (acting on `positions`) with the identity on the rest of
/// the slots; columns are ordered rest-major so the lift is deterministic.
fn lift_basis(basis: &DMatrix<C64>, dims: &[usize], positions: &[usize]) -> DMatrix<C64> {
    let loc = tensorops::local_offsets(dims, positions);
    let rest = tensorops::rest_offsets(dims, positions);
    assert_eq!(basis.nrows(), loc.len());
    let ambient: usize = dims.iter().product();
    let rank = basis.ncols();
    let mut out = DMatrix::zeros(ambient, rest.len() * rank);
    for (ri, &roff) in rest.iter().enumerate() {
        for c in 0..rank {
            let col = ri * rank + c;
            for (a, &loff) in loc.iter().enumerate() {
                out[(roff + loff, col)] = basis[(a, c)];
            }
        }
    }
    out
}

/// Common intersection of support spaces over one ambient space: the kernel
/// of the sum of projector complements, found by a dense eigensolve.
pub fn intersect_subspaces(spaces: &[SupportSpace], kernel_tol: f64) -> SupportSpace {
    let ambient = spaces[0].ambient;
    let mut t = DMatrix::<C64>::identity(ambient, ambient).map(|x: C64| x * spaces.len() as f64);
    for s in spaces {
        assert_eq!(s.ambient, ambient);
        t -= &s.basis * s.basis.adjoint();
    }
    let (evals, evecs) = linalg::hermitian_eigen(&t);
    let kernel_cols: Vec<usize> = (0..ambient).filter(|&i| evals[i] < kernel_tol).collect();
    let basis = DMatrix::from_fn(ambient, kernel_cols.len(), |r, c| {
        evecs[(r, kernel_cols[c])]
    });
    SupportSpace {
        ambient,
        basis,
        rank: kernel_cols.len(),
        tol: kernel_tol,
    }
}

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct RegionUniqueness {
    pub region: Vec<SiteId>,
    pub support_rank: usize,
    pub factors: usize,
    /// Largest residual of a support basis vector under any single factor
    /// complement (containment of the support in every factor).
    pub max_containment_residual: f64,
    /// Smallest eigenvalue of the summed complements off the support space;
    /// positive means the intersection is exactly the support.
    pub complement_min_eigenvalue: f64,
    pub complement_converged: bool,
    /// Dense cross-check: rank of the literal intersection and its worst
    /// principal-angle sine against the support space (small regions only).
    pub intersection_rank: Option<usize>,
    pub intersection_alignment_sine: Option<f64>,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct UniquenessReport {
    pub patch: PatchSpec,
    pub region_sizes: Vec<usize>,
    pub tol: f64,
    pub regions: Vec<RegionUniqueness>,
    pub pass: bool,
}

/// Checks that on every connected region of the given sizes, the common
/// kernel of the bond terms is exactly the region's support space.
pub fn check_uniqueness(
    lattice: &HexLattice,
    region_sizes: &[usize],
    tol: f64,
    seed: u64,
) -> Result<UniquenessReport, VerifyError> {
    let mut regions = Vec::new();
    for &size in region_sizes {
        for region in lattice.enumerate_regions(size) {
            let support = region_support(lattice, &region)?;
            let op = region_bond_operator(lattice, &region, 1e-9)?;
            if op.terms.is_empty() {
                continue;
            }
            let max_containment_residual = max_containment(&op, &support.basis);
            let spectrum = linalg::lanczos_smallest(&op, 1, tol, 400, &support.basis, seed);
            let complement_min_eigenvalue = spectrum.eigenvalues[0];
            let ambient = op.total_dim();
            let (intersection_rank, intersection_alignment_sine) = if ambient <= 256 {
                let lifted: Vec<SupportSpace> = op
                    .terms
                    .iter()
                    .map(|term| {
                        let positions: Vec<usize> = term
                            .sites
                            .iter()
                            .map(|s| region.binary_search(s).expect("site"))
                            .collect();
                        let basis = factor_basis(term);
                        let full = lift_basis(&basis, &op.dims, &positions);
                        SupportSpace {
                            ambient,
                            basis: full,
                            rank: 0,
                            tol,
                        }
                    })
                    .collect();
                let inter = intersect_subspaces(&lifted, KERNEL_TOL);
                let sine = linalg::subspace_sine(&inter.basis, &support.basis);
                (Some(inter.rank), Some(sine))
            } else {
                (None, None)
            };
            let pass = max_containment_residual < KERNEL_TOL
                && complement_min_eigenvalue > KERNEL_TOL
                && spectrum.converged
                && intersection_rank.is_none_or(|r| r == support.rank)
                && intersection_alignment_sine.is_none_or(|s| s < 1e-6);
            regions.push(RegionUniqueness {
                region,
                support_rank: support.rank,
                factors: op.terms.len(),
                max_containment_residual,
                complement_min_eigenvalue,
                complement_converged: spectrum.converged,
                intersection_rank,
                intersection_alignment_sine,
                pass,
            });
        }
    }
    let pass = !regions.is_empty() && regions.iter().all(|r| r.pass);
    Ok(UniquenessReport {
        patch: PatchSpec {
            rows: lattice.rows,
            cols: lattice.cols,
        },
        region_sizes: region_sizes.to_vec(),
        tol,
        regions,
        pass,
    })
}

/// Worst residual of any support column under any single term of `op`.
fn max_containment(op: &HamiltonianOperator, basis: &DMatrix<C64>) -> f64 {
    let n = op.total_dim();
    let mut worst: f64 = 0.0;
    let mut x = vec![ZERO; n];
    let mut y = vec![ZERO; n];
    for term in &op.terms {
        let single = HamiltonianOperator {
            site_order: op.site_order.clone(),
            dims: op.dims.clone(),
            terms: vec![term.clone()],
        };
        for c in 0..basis.ncols() {
            for (i, xi) in x.iter_mut().enumerate() {
                *xi = basis[(i, c)];
            }
            single.apply_into(&x, &mut y);
            worst = worst.max(linalg::norm(&y));
        }
    }
    worst
}

/// Orthonormal basis of a term's kept subspace (the kernel of the term).
fn factor_basis(term: &OperatorTerm) -> DMatrix<C64> {
    match &term.payload {
        hamiltonian::TermPayload::ProjComplement { basis } => basis.clone(),
        hamiltonian::TermPayload::Dense(m) => {
            let (evals, evecs) = linalg::hermitian_eigen(m);
            let cols: Vec<usize> = (0..evals.len())
                .filter(|&i| evals[i].abs() <= KERNEL_TOL)
                .collect();
            DMatrix::from_fn(m.nrows(), cols.len(), |r, c| evecs[(r, cols[c])])
        }
    }
}

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct RegionInjectivity {
    pub region: Vec<SiteId>,
    pub open_legs: usize,
    pub rank: usize,
    pub expected: usize,
    pub injective: bool,
}

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct InjectivityReport {
    pub patch: PatchSpec,
    pub region_sizes: Vec<usize>,
    pub rank_tol: f64,
    pub regions: Vec<RegionInjectivity>,
    /// True when every region of two or more sites reaches full boundary
    /// rank. Single-site regions are reported but cannot be injective.
    pub pass: bool,
}

/// Ranks of the boundary-to-physical maps of all connected regions of the
/// given sizes.
pub fn check_injectivity(
    lattice: &HexLattice,
    region_sizes: &[usize],
    rank_tol: f64,
) -> Result<InjectivityReport, VerifyError> {
    let spec = tric_spec();
    let mut regions = Vec::new();
    for &size in region_sizes {
        for region in lattice.enumerate_regions(size) {
            let map = peps::support_map(lattice, &region, &spec, &Boundary::all_free())?;
            let space = peps::orthonormal_image(&map.matrix, rank_tol);
            let open_legs = map.open_legs.len();
            let expected = 1usize << open_legs;
            regions.push(RegionInjectivity {
                region,
                open_legs,
                rank: space.rank,
                expected,
                injective: space.rank == expected,
            });
        }
    }
    let pass = regions
        .iter()
        .filter(|r| r.region.len() >= 2)
        .all(|r| r.injective)
        && regions.iter().any(|r| r.region.len() >= 2);
    Ok(InjectivityReport {
        patch: PatchSpec {
            rows: lattice.rows,
            cols: lattice.cols,
        },
        region_sizes: region_sizes.to_vec(),
        rank_tol,
        regions,
        pass,
    })
}

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct GroundCheckReport {
    pub patch: PatchSpec,
    pub flavor: Flavor,
    pub boundary: String,
    pub dim: usize,
    /// Raw contraction norm of the patch state before normalisation.
    pub state_norm: f64,
    /// Norm of the assembled operator applied to the normalised state.
    pub residual: f64,
    /// Weight of the state inside the patch support space.
    pub support_weight: f64,
    pub tol: f64,
    pub pass: bool,
}

/// Contracts the patch state and checks it is annihilated by the assembled
/// operator and fully contained in the patch support space.
pub fn ground_check(
    lattice: &HexLattice,
    flavor: Flavor,
    opts: &AssembleOptions,
    boundary: &Boundary,
    boundary_label: &str,
    budget_bytes: usize,
    tol: f64,
) -> Result<GroundCheckReport, VerifyError> {
    let state = peps::contract_state(lattice, &tric_spec(), boundary, budget_bytes)?;
    let op = hamiltonian::assemble(lattice, flavor, opts)?;
    let mut y = vec![ZERO; state.amplitudes.len()];
    op.apply_into(&state.amplitudes, &mut y);
    let residual = linalg::norm(&y);
    let all_sites: Vec<SiteId> = (0..lattice.n_sites()).collect();
    let support = region_support(lattice, &all_sites)?;
    let support_weight = peps::support_weight(&state.amplitudes, &support);
    let pass = residual < tol && support_weight > 1.0 - 1e-10;
    Ok(GroundCheckReport {
        patch: PatchSpec {
            rows: lattice.rows,
            cols: lattice.cols,
        },
        flavor,
        boundary: boundary_label.to_string(),
        dim: state.amplitudes.len(),
        state_norm: state.norm,
        residual,
        support_weight,
        tol,
        pass,
    })
}

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SpectrumReport {
    pub patch: PatchSpec,
    pub flavor: Flavor,
    pub dim: usize,
    pub route: String,
    pub eigenvalues: Vec<f64>,
    pub residuals: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub tol: f64,
    pub seed: u64,
}

/// Lowest eigenvalues of an assembled patch operator: dense for small
/// ambients, Lanczos otherwise.
pub fn lowest_spectrum(
    lattice: &HexLattice,
    flavor: Flavor,
    opts: &AssembleOptions,
    k: usize,
    tol: f64,
    seed: u64,
) -> Result<SpectrumReport, VerifyError> {
    let op = hamiltonian::assemble(lattice, flavor, opts)?;
    let dim = op.total_dim();
    let patch = PatchSpec {
        rows: lattice.rows,
        cols: lattice.cols,
    };
    if dim <= DENSE_DIM_LIMIT {
        let dense = op.to_dense(usize::MAX)?;
        let (evals, _) = linalg::hermitian_eigen(&dense);
        let take = k.min(dim);
        return Ok(SpectrumReport {
            patch,
            flavor,
            dim,
            route: "dense".into(),
            eigenvalues: evals[..take].to_vec(),
            residuals: vec![0.0; take],
            iterations: 0,
            converged: true,
            tol,
            seed,
        });
    }
    let empty = DMatrix::<C64>::zeros(dim, 0);
    let spec = linalg::lanczos_smallest(&op, k, tol, 400, &empty, seed);
    Ok(SpectrumReport {
        patch,
        flavor,
        dim,
        route: "lanczos".into(),
        eigenvalues: spec.eigenvalues,
        residuals: spec.residuals,
        iterations: spec.iterations,
        converged: spec.converged,
        tol,
        seed,
    })
}

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct GapReport {
    pub patch: PatchSpec,
    pub dim: usize,
    pub kernel_dim: usize,
    /// Largest residual of the operator on a kernel basis vector.
    pub kernel_residual_max: f64,
    /// Smallest eigenvalue off the kernel.
    pub gap: f64,
    pub bound: f64,
    pub route: String,
    pub iterations: usize,
    pub converged: bool,
    pub tol: f64,
    pub seed: u64,
    pub pass: bool,
}

/// Certifies that the bond-term operator of a patch vanishes exactly on the
/// patch support space and is bounded below by `bound` off of it.
pub fn gap_above_kernel(
    lattice: &HexLattice,
    bound: f64,
    tol: f64,
    seed: u64,
) -> Result<GapReport, VerifyError> {
    let op = hamiltonian::assemble(lattice, Flavor::Projector, &AssembleOptions::default())?;
    let dim = op.total_dim();
    let all_sites: Vec<SiteId> = (0..lattice.n_sites()).collect();
    let support = region_support(lattice, &all_sites)?;
    let kernel_residual_max = max_apply_residual(&op, &support.basis);
    let patch = PatchSpec {
        rows: lattice.rows,
        cols: lattice.cols,
    };
    let (gap, route, iterations, converged, kernel_dim, kernel_aligned) = if dim <= DENSE_DIM_LIMIT
    {
        let dense = op.to_dense(usize::MAX)?;
        let (evals, evecs) = linalg::hermitian_eigen(&dense);
        let kernel_cols: Vec<usize> = (0..dim).filter(|&i| evals[i].abs() <= KERNEL_TOL).collect();
        let kernel = DMatrix::from_fn(dim, kernel_cols.len(), |r, c| evecs[(r, kernel_cols[c])]);
        // Dense route certifies the kernel twice over: by count and by
        // alignment with the support basis.
        let sine = linalg::subspace_sine(&kernel, &support.basis);
        let gap = evals
            .iter()
            .copied()
            .find(|e| *e > KERNEL_TOL)
            .unwrap_or(f64::INFINITY);
        let aligned = kernel_cols.len() == support.rank && sine < 1e-6;
        (
            gap,
            "dense".to_string(),
            0,
            true,
            kernel_cols.len(),
            aligned,
        )
    } else {
        // Iterative route: the support residual plus a positive deflated
        // minimum already pin the kernel exactly.
        let spec = linalg::lanczos_smallest(&op, 1, tol, 400, &support.basis, seed);
        (
            spec.eigenvalues[0],
            "lanczos".to_string(),
            spec.iterations,
            spec.converged,
            support.rank,
            true,
        )
    };
    let pass = kernel_residual_max < KERNEL_TOL
        && converged
        && kernel_aligned
        && gap > KERNEL_TOL
        && gap >= bound - tol;
    Ok(GapReport {
        patch,
        dim,
        kernel_dim,
        kernel_residual_max,
        gap,
        bound,
        route,
        iterations,
        converged,
        tol,
        seed,
        pass,
    })
}

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct MuSection {
    pub patch: PatchSpec,
    pub region: Vec<SiteId>,
    pub mu: f64,
    /// Smallest nonzero eigenvalue of the three-bond sum (dense route).
    pub mu_star: f64,
    pub h_kernel_dim: usize,
    pub k_kernel_dim: usize,
    /// Alignment of the bond-sum kernel with the block-pair support.
    pub kernel_alignment_sine: f64,
    /// Iterative route: smallest eigenvalue of (bond sum − mu · block term)
    /// off the shared kernel.
    pub shifted_min_eigenvalue: f64,
    pub shifted_converged: bool,
    /// Disagreement between the iterative route and the dense prediction
    /// min(0, mu_star − mu).
    pub dual_route_gap: f64,
}

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct PairOutcome {
    pub positions: Vec<NeighborPosition>,
    pub min_anticommutator_eigenvalue: f64,
    pub min_relaxed_eigenvalue: f64,
    pub iterations: usize,
    pub converged: bool,
    pub class: Option<PairClass>,
}

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct AnticommutatorSection {
    pub patch: PatchSpec,
    pub interior_block: Vec<SiteId>,
    pub pairs: Vec<PairOutcome>,
    pub psd_count: usize,
    pub third_count: usize,
    /// Whether the computed classes reproduce the geometric default table.
    pub matches_geometric_default: bool,
}

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct KBoundCase {
    pub patch: PatchSpec,
    pub blocks: Vec<Vec<SiteId>>,
    pub dim: usize,
    pub kernel_dim: usize,
    pub kernel_residual_max: f64,
    pub smallest_nonzero: f64,
    pub bound: f64,
    pub route: String,
    pub iterations: usize,
    pub converged: bool,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct KBoundSection {
    pub two_block: KBoundCase,
    pub three_block: KBoundCase,
}

/// Shared envelope for the operator-inequality checks.
#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct InequalityReport {
    pub check: String,
    pub tol: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu: Option<MuSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub anticommutators: Option<AnticommutatorSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k_bound: Option<KBoundSection>,
    pub pass: bool,
}

/// Linear combination a·b + b·a + shift·(a + b) of two Hermitian operators
/// over one site list; Hermitian by construction.
struct PairCombinationOp<'a> {
    a: &'a HamiltonianOperator,
    b: &'a HamiltonianOperator,
    shift: f64,
}

impl LinOp for PairCombinationOp<'_> {
    fn dim(&self) -> usize {
        self.a.total_dim()
    }

    fn apply(&self, x: &[C64], y: &mut [C64]) {
        let n = x.len();
        let mut ax = vec![ZERO; n];
        let mut bx = vec![ZERO; n];
        self.a.apply_into(x, &mut ax);
        self.b.apply_into(x, &mut bx);
        self.a.apply_into(&bx, y);
        let mut t = vec![ZERO; n];
        self.b.apply_into(&ax, &mut t);
        linalg::axpy(y, linalg::ONE, &t);
        if self.shift != 0.0 {
            linalg::axpy(y, linalg::cr(self.shift), &ax);
            linalg::axpy(y, linalg::cr(self.shift), &bx);
        }
    }
}

/// Wraps one four-site block term as an operator over a larger site list.
fn block_term_operator(
    lattice: &HexLattice,
    site_order: &[SiteId],
    block_a: &crate::lattice::Block,
    block_b: &crate::lattice::Block,
) -> Result<HamiltonianOperator, VerifyError> {
    let term = hamiltonian::build_k_term(lattice, block_a, block_b, 1e-9)?;
    Ok(HamiltonianOperator {
        site_order: site_order.to_vec(),
        dims: vec![6; site_order.len()],
        terms: vec![term],
    })
}

/// Compares the three-bond sum over two adjacent blocks with `mu` times the
/// block-pair complement. The dense route diagonalises the bond sum; the
/// iterative route bounds the shifted operator off the shared kernel.
pub fn check_mu(mu: f64, tol: f64, seed: u64) -> Result<InequalityReport, VerifyError> {
    let lattice = HexLattice::build_patch(3, 2)?;
    let partition = lattice.block_partition();
    if partition.blocks.len() != 2 {
        return Err(VerifyError::MissingStructure("two-block partition"));
    }
    let mut region: Vec<SiteId> = partition.blocks.iter().flat_map(|b| b.sites()).collect();
    region.sort();
    let h_op = region_bond_operator(&lattice, &region, 1e-9)?;
    debug_assert_eq!(h_op.terms.len(), 3);
    let k_op = block_term_operator(
        &lattice,
        &region,
        &partition.blocks[0],
        &partition.blocks[1],
    )?;
    let support = region_support(&lattice, &region)?;

    let h = h_op.to_dense(usize::MAX)?;
    let (h_evals, h_evecs) = linalg::hermitian_eigen(&h);
    let dim = h.nrows();
    let kernel_cols: Vec<usize> = (0..dim)
        .filter(|&i| h_evals[i].abs() <= KERNEL_TOL)
        .collect();
    let h_kernel = DMatrix::from_fn(dim, kernel_cols.len(), |r, c| h_evecs[(r, kernel_cols[c])]);
    let kernel_alignment_sine = linalg::subspace_sine(&h_kernel, &support.basis);
    let mu_star = h_evals
        .iter()
        .copied()
        .find(|e| *e > KERNEL_TOL)
        .unwrap_or(f64::INFINITY);

    // Iterative route on the shifted operator, deflating the shared kernel.
    let shifted = ShiftedPairOp {
        h: &h_op,
        k: &k_op,
        mu,
    };
    let spec = linalg::lanczos_smallest(&shifted, 1, 1e-7, 400, &support.basis, seed);
    let shifted_min_deflated = spec.eigenvalues[0];
    // Off the kernel the block term acts as the identity, so the deflated
    // minimum equals mu_star − mu; the full minimum adds the kernel zeros.
    let shifted_min_eigenvalue = shifted_min_deflated.min(0.0);
    let dual_route_gap = (shifted_min_eigenvalue - (mu_star - mu).min(0.0)).abs();

    let kernels_match = kernel_cols.len() == support.rank
        && support.rank == k_kernel_dim_expected(&k_op)
        && kernel_alignment_sine < 1e-6;
    let pass = kernels_match
        && spec.converged
        && mu_star >= mu - tol
        && shifted_min_eigenvalue >= -1e-7
        && dual_route_gap < 1e-6;
    Ok(InequalityReport {
        check: "mu-bound".into(),
        tol,
        mu: Some(MuSection {
            patch: PatchSpec {
                rows: lattice.rows,
                cols: lattice.cols,
            },
            region,
            mu,
            mu_star,
            h_kernel_dim: kernel_cols.len(),
            k_kernel_dim: k_kernel_dim_expected(&k_op),
            kernel_alignment_sine,
            shifted_min_eigenvalue,
            shifted_converged: spec.converged,
            dual_route_gap,
        }),
        anticommutators: None,
        k_bound: None,
        pass,
    })
}

/// Kernel dimension of a single block term: the number of kept directions.
fn k_kernel_dim_expected(k_op: &HamiltonianOperator) -> usize {
    match &k_op.terms[0].payload {
        hamiltonian::TermPayload::ProjComplement { basis } => basis.ncols(),
        hamiltonian::TermPayload::Dense(_) => 0,
    }
}

/// h − mu · k over a shared site list.
struct ShiftedPairOp<'a> {
    h: &'a HamiltonianOperator,
    k: &'a HamiltonianOperator,
    mu: f64,
}

impl LinOp for ShiftedPairOp<'_> {
    fn dim(&self) -> usize {
        self.h.total_dim()
    }

    fn apply(&self, x: &[C64], y: &mut [C64]) {
        self.h.apply_into(x, y);
        let mut kx = vec![ZERO; x.len()];
        self.k.apply_into(x, &mut kx);
        linalg::axpy(y, linalg::cr(-self.mu), &kx);
    }
}

/// Classifies the anticommutators of the four block terms around the one
/// interior block of a 4×3 patch.
pub fn check_anticommutators(tol: f64, seed: u64) -> Result<InequalityReport, VerifyError> {
    let lattice = HexLattice::build_patch(4, 3)?;
    let partition = lattice.block_partition();
    let interior = partition.interior_blocks();
    let m = *interior
        .first()
        .ok_or(VerifyError::MissingStructure("interior block"))?;
    let neighbors = partition.neighbors_of(m);
    if neighbors.len() != 4 {
        return Err(VerifyError::MissingStructure("four block neighbours"));
    }
    let mut pairs = Vec::new();
    for i in 0..neighbors.len() {
        for j in (i + 1)..neighbors.len() {
            let (n1, p1) = neighbors[i];
            let (n2, p2) = neighbors[j];
            let mut region: Vec<SiteId> = partition.blocks[m]
                .sites()
                .into_iter()
                .chain(partition.blocks[n1].sites())
                .chain(partition.blocks[n2].sites())
                .collect();
            region.sort();
            let k1 = block_term_operator(
                &lattice,
                &region,
                &partition.blocks[m],
                &partition.blocks[n1],
            )?;
            let k2 = block_term_operator(
                &lattice,
                &region,
                &partition.blocks[m],
                &partition.blocks[n2],
            )?;
            let dim = k1.total_dim();
            let empty = DMatrix::<C64>::zeros(dim, 0);
            let anti = PairCombinationOp {
                a: &k1,
                b: &k2,
                shift: 0.0,
            };
            let s1 = linalg::lanczos_smallest(&anti, 1, tol, 400, &empty, seed);
            let relaxed = PairCombinationOp {
                a: &k1,
                b: &k2,
                shift: 1.0 / 3.0,
            };
            let s2 = linalg::lanczos_smallest(&relaxed, 1, tol, 400, &empty, seed);
            let min_anti = s1.eigenvalues[0];
            let min_relaxed = s2.eigenvalues[0];
            let class = if min_anti >= -tol {
                Some(PairClass::PsdClass)
            } else if min_relaxed >= -tol {
                Some(PairClass::ThirdClass)
            } else {
                None
            };
            pairs.push(PairOutcome {
                positions: vec![p1, p2],
                min_anticommutator_eigenvalue: min_anti,
                min_relaxed_eigenvalue: min_relaxed,
                iterations: s1.iterations + s2.iterations,
                converged: s1.converged && s2.converged,
                class,
            });
        }
    }
    let psd_count = pairs
        .iter()
        .filter(|p| p.class == Some(PairClass::PsdClass))
        .count();
    let third_count = pairs
        .iter()
        .filter(|p| p.class == Some(PairClass::ThirdClass))
        .count();
    let matches_geometric_default = pairs
        .iter()
        .all(|p| p.class == Some(partition.pair_class(p.positions[0], p.positions[1])));
    let pass = pairs.iter().all(|p| p.class.is_some() && p.converged)
        && psd_count == 4
        && third_count == 2;
    Ok(InequalityReport {
        check: "anticommutator".into(),
        tol,
        mu: None,
        anticommutators: Some(AnticommutatorSection {
            patch: PatchSpec {
                rows: lattice.rows,
                cols: lattice.cols,
            },
            interior_block: partition.blocks[m].sites().to_vec(),
            pairs,
            psd_count,
            third_count,
            matches_geometric_default,
        }),
        k_bound: None,
        pass,
    })
}

/// Lower-bounds the smallest nonzero eigenvalue of summed block terms: a
/// single term on a 3×2 patch (dense) and a two-term chain on a 3×3 patch
/// (deflated Lanczos).
pub fn check_k_bound(bound: f64, tol: f64, seed: u64) -> Result<InequalityReport, VerifyError> {
    // Single block term: spectrum is exactly {0, 1}.
    let two = {
        let lattice = HexLattice::build_patch(3, 2)?;
        let partition = lattice.block_partition();
        let mut region: Vec<SiteId> = partition.blocks.iter().flat_map(|b| b.sites()).collect();
        region.sort();
        let k_op = block_term_operator(
            &lattice,
            &region,
            &partition.blocks[0],
            &partition.blocks[1],
        )?;
        let support = region_support(&lattice, &region)?;
        let kernel_residual_max = max_apply_residual(&k_op, &support.basis);
        let dense = k_op.to_dense(usize::MAX)?;
        let (evals, _) = linalg::hermitian_eigen(&dense);
        let kernel_dim = evals.iter().filter(|e| e.abs() <= KERNEL_TOL).count();
        let smallest_nonzero = evals
            .iter()
            .copied()
            .find(|e| *e > KERNEL_TOL)
            .unwrap_or(f64::INFINITY);
        let pass = kernel_residual_max < KERNEL_TOL
            && kernel_dim == support.rank
            && smallest_nonzero >= bound - tol;
        KBoundCase {
            patch: PatchSpec {
                rows: lattice.rows,
                cols: lattice.cols,
            },
            blocks: partition
                .blocks
                .iter()
                .map(|b| b.sites().to_vec())
                .collect(),
            dim: dense.nrows(),
            kernel_dim,
            kernel_residual_max,
            smallest_nonzero,
            bound,
            route: "dense".into(),
            iterations: 0,
            converged: true,
            pass,
        }
    };
    // Chain of two block terms sharing the middle block.
    let three = {
        let lattice = HexLattice::build_patch(3, 3)?;
        let partition = lattice.block_partition();
        if partition.blocks.len() != 3 {
            return Err(VerifyError::MissingStructure("three-block partition"));
        }
        // Middle block by column; the chain is (left, middle), (middle, right).
        let mut order: Vec<usize> = (0..3).collect();
        order.sort_by_key(|&i| lattice.coords(partition.blocks[i].lower).1);
        let (left, middle, right) = (order[0], order[1], order[2]);
        let mut region: Vec<SiteId> = partition.blocks.iter().flat_map(|b| b.sites()).collect();
        region.sort();
        let k12 = block_term_operator(
            &lattice,
            &region,
            &partition.blocks[left],
            &partition.blocks[middle],
        )?;
        let k23 = block_term_operator(
            &lattice,
            &region,
            &partition.blocks[middle],
            &partition.blocks[right],
        )?;
        let sum = HamiltonianOperator {
            site_order: region.clone(),
            dims: vec![6; region.len()],
            terms: vec![k12.terms[0].clone(), k23.terms[0].clone()],
        };
        let support = region_support(&lattice, &region)?;
        let kernel_residual_max = max_apply_residual(&sum, &support.basis);
        let spec = linalg::lanczos_smallest(&sum, 1, 1e-7, 400, &support.basis, seed);
        let smallest_nonzero = spec.eigenvalues[0];
        let pass = kernel_residual_max < KERNEL_TOL
            && spec.converged
            && smallest_nonzero > KERNEL_TOL
            && smallest_nonzero >= bound - tol;
        KBoundCase {
            patch: PatchSpec {
                rows: lattice.rows,
                cols: lattice.cols,
            },
            blocks: partition
                .blocks
                .iter()
                .map(|b| b.sites().to_vec())
                .collect(),
            dim: sum.total_dim(),
            kernel_dim: support.rank,
            kernel_residual_max,
            smallest_nonzero,
            bound,
            route: "lanczos".into(),
            iterations: spec.iterations,
            converged: spec.converged,
            pass,
        }
    };
    let pass = two.pass && three.pass;
    Ok(InequalityReport {
        check: "k-bound".into(),
        tol,
        mu: None,
        anticommutators: None,
        k_bound: Some(KBoundSection {
            two_block: two,
            three_block: three,
        }),
        pass,
    })
}

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct PairRestrictionCase {
    pub levels: [usize; 2],
    pub kind: ProjectorKind,
    /// Squared weight of the patch state inside this same-pair sector.
    pub sector_weight: f64,
    /// Cross-route fidelity against the sector's own qubit tensor family;
    /// the restriction and that family select identical virtual rows.
    pub kind_fidelity: f64,
    /// Fidelity against the 000/111 qubit state before any Pauli dressing.
    pub identity_fidelity: f64,
    /// Best fidelity against the 000/111 qubit state over all tensor
    /// products of single-site Paulis.
    pub fidelity: f64,
    /// The dressing that realises `fidelity`, one letter per site.
    pub paulis: Vec<String>,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ClusterCorrespondenceReport {
    pub patch: PatchSpec,
    pub tol: f64,
    pub cases: Vec<PairRestrictionCase>,
    pub pass: bool,
}

/// Applies a single-qubit operator at `site` of an n-qubit vector, first
/// site most significant.
fn apply_site_op(amps: &mut [C64], n: usize, site: usize, op: &[[C64; 2]; 2]) {
    let stride = 1usize << (n - 1 - site);
    let mut base = 0;
    while base < amps.len() {
        for off in 0..stride {
            let i0 = base + off;
            let i1 = i0 + stride;
            let (a, b) = (amps[i0], amps[i1]);
            amps[i0] = op[0][0] * a + op[0][1] * b;
            amps[i1] = op[1][0] * a + op[1][1] * b;
        }
        base += 2 * stride;
    }
}

fn overlap(a: &[C64], b: &[C64]) -> f64 {
    let mut acc = ZERO;
    for (x, y) in a.iter().zip(b.iter()) {
        acc += x.conj() * y;
    }
    acc.norm()
}

/// Checks that restricting the six-level patch state to one physical level
/// pair reproduces the matching qubit patch state, exactly for the 000/111
/// pair and up to an explicitly found tensor of single-site Paulis for the
/// other two.
pub fn check_cluster_correspondence(
    lattice: &HexLattice,
    tol: f64,
    budget_bytes: usize,
) -> Result<ClusterCorrespondenceReport, VerifyError> {
    let n = lattice.n_sites();
    let psi = peps::contract_state(lattice, &tric_spec(), &Boundary::all_plus(), budget_bytes)?;
    let i2 = linalg::ONE;
    let paulis: [(&str, [[C64; 2]; 2]); 4] = [
        ("i", [[i2, ZERO], [ZERO, i2]]),
        ("x", [[ZERO, i2], [i2, ZERO]]),
        (
            "y",
            [[ZERO, -linalg::c(0.0, 1.0)], [linalg::c(0.0, 1.0), ZERO]],
        ),
        ("z", [[i2, ZERO], [ZERO, -i2]]),
    ];
    let cases_spec = [
        ([0usize, 1usize], ProjectorKind::ClusterHex),
        ([2, 3], ProjectorKind::Prime),
        ([4, 5], ProjectorKind::DoublePrime),
    ];
    let reference = peps::contract_state(
        lattice,
        &ProjectorSpec::uniform(ProjectorKind::ClusterHex),
        &Boundary::all_plus(),
        budget_bytes,
    )?;
    let mut cases = Vec::new();
    for (levels, kind) in cases_spec {
        let (sector, sector_weight) = peps::project_subspace(&psi, &levels)?;
        // Compact the surviving pair onto qubit indices, order preserved.
        let mut compact = vec![ZERO; 1 << n];
        for (q, slot) in compact.iter_mut().enumerate() {
            let mut idx = 0usize;
            for s in 0..n {
                let bit = (q >> (n - 1 - s)) & 1;
                idx = idx * 6 + levels[bit];
            }
            *slot = sector.amplitudes[idx];
        }
        let kind_fidelity = if kind == ProjectorKind::ClusterHex {
            overlap(&reference.amplitudes, &compact)
        } else {
            let family = peps::contract_state(
                lattice,
                &ProjectorSpec::uniform(kind),
                &Boundary::all_plus(),
                budget_bytes,
            )?;
            overlap(&family.amplitudes, &compact)
        };
        let identity_fidelity = overlap(&reference.amplitudes, &compact);
        let mut best = (identity_fidelity, vec![0usize; n]);
        if identity_fidelity < 1.0 - tol {
            for code in 0..4usize.pow(n as u32) {
                let mut letters = vec![0usize; n];
                let mut c = code;
                for site in (0..n).rev() {
                    letters[site] = c % 4;
                    c /= 4;
                }
                let mut dressed = compact.clone();
                for (site, &p) in letters.iter().enumerate() {
                    if p != 0 {
                        apply_site_op(&mut dressed, n, site, &paulis[p].1);
                    }
                }
                let f = overlap(&reference.amplitudes, &dressed);
                if f > best.0 {
                    best = (f, letters);
                }
            }
        }
        let (fidelity, letters) = best;
        // The 000/111 pair must match undressed; the others may be dressed.
        let pass = kind_fidelity >= 1.0 - tol
            && if levels[0] == 0 {
                identity_fidelity >= 1.0 - tol
            } else {
                fidelity >= 1.0 - tol
            };
        cases.push(PairRestrictionCase {
            levels,
            kind,
            sector_weight,
            kind_fidelity,
            identity_fidelity,
            fidelity,
            paulis: letters.iter().map(|&p| paulis[p].0.to_string()).collect(),
            pass,
        });
    }
    let pass = cases.iter().all(|c| c.pass);
    Ok(ClusterCorrespondenceReport {
        patch: PatchSpec {
            rows: lattice.rows,
            cols: lattice.cols,
        },
        tol,
        cases,
        pass,
    })
}
