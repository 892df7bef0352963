//! Tensor-network state construction on brick-wall patches.
//!
//! Every site tensor is an isometry row-selector: each physical level pins
//! all three virtual bits of its site. Contractions therefore factor over
//! bonds and dangling legs, and a patch amplitude is a product of bond
//! weights and boundary-closure weights, no virtual sum required.

use crate::lattice::{HexLattice, LegId, LegRole, SiteId};
use crate::linalg::{self, C64, ZERO};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PepsError {
    #[error("state of {needed} bytes exceeds budget of {budget} bytes")]
    Budget { needed: usize, budget: usize },
    #[error("region is empty")]
    EmptyRegion,
    #[error("contraction produced the zero vector")]
    ZeroState,
    #[error("boundary assignment for {0:?} must be a qubit vector")]
    BadAssignment(LegId),
    #[error("level set is empty or outside 0..=5")]
    BadLevels,
}

/// Site-tensor families. All are row selectors from three virtual qubits
/// (left, right, vertical) to the physical space.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ProjectorKind {
    /// Six-level tensor: levels 0..5 select virtual configurations
    /// 000, 111, 100, 011, 010, 101.
    Tric,
    /// Qubit tensor keeping the 000/111 rows.
    ClusterHex,
    /// Qubit tensor keeping the 100/011 rows.
    Prime,
    /// Qubit tensor keeping the 010/101 rows.
    DoublePrime,
}

impl ProjectorKind {
    pub fn physical_dim(self) -> usize {
        match self {
            ProjectorKind::Tric => 6,
            _ => 2,
        }
    }

    /// Virtual bits (left, right, vertical) selected by each physical level.
    pub fn bits(self, level: usize) -> [u8; 3] {
        let rows: &[[u8; 3]] = match self {
            ProjectorKind::Tric => &[
                [0, 0, 0],
                [1, 1, 1],
                [1, 0, 0],
                [0, 1, 1],
                [0, 1, 0],
                [1, 0, 1],
            ],
            ProjectorKind::ClusterHex => &[[0, 0, 0], [1, 1, 1]],
            ProjectorKind::Prime => &[[1, 0, 0], [0, 1, 1]],
            ProjectorKind::DoublePrime => &[[0, 1, 0], [1, 0, 1]],
        };
        rows[level]
    }

    pub fn bit_for(self, level: usize, role: LegRole) -> u8 {
        let bits = self.bits(level);
        match role {
            LegRole::Left => bits[0],
            LegRole::Right => bits[1],
            LegRole::Up | LegRole::Down => bits[2],
        }
    }
}

/// The site tensor as a physical-dim × 8 matrix; virtual columns are indexed
/// by (left, right, vertical) bits with the left bit most significant.
pub fn projector(kind: ProjectorKind) -> DMatrix<C64> {
    let d = kind.physical_dim();
    let mut m = DMatrix::zeros(d, 8);
    for level in 0..d {
        let b = kind.bits(level);
        let col = (b[0] as usize) << 2 | (b[1] as usize) << 1 | b[2] as usize;
        m[(level, col)] = linalg::ONE;
    }
    m
}

/// Bond weight matrix: entry (i, j) is the amplitude for bits i, j on the
/// two joined legs. Symmetric, unit Frobenius norm.
pub fn singlet() -> DMatrix<C64> {
    DMatrix::from_row_slice(2, 2, &[0.5, 0.5, 0.5, -0.5]).map(linalg::cr)
}

/// Per-site tensor assignment, one default kind with optional overrides.
#[derive(Clone, Debug)]
pub struct ProjectorSpec {
    pub default: ProjectorKind,
    pub overrides: BTreeMap<SiteId, ProjectorKind>,
}

impl ProjectorSpec {
    pub fn uniform(kind: ProjectorKind) -> Self {
        ProjectorSpec {
            default: kind,
            overrides: BTreeMap::new(),
        }
    }

    pub fn kind_at(&self, site: SiteId) -> ProjectorKind {
        self.overrides.get(&site).copied().unwrap_or(self.default)
    }
}

/// Closure rule for one dangling virtual leg.
#[derive(Clone, Debug, PartialEq)]
pub enum BoundaryAssignment {
    /// Leg stays open and becomes an index of the region map.
    Free,
    /// Leg is closed with the given qubit ket; the amplitude picks up the
    /// ket component of the leg's bit.
    Fixed([C64; 2]),
}

impl BoundaryAssignment {
    pub fn plus() -> Self {
        let h = linalg::cr(std::f64::consts::FRAC_1_SQRT_2);
        BoundaryAssignment::Fixed([h, h])
    }

    pub fn minus() -> Self {
        let h = linalg::cr(std::f64::consts::FRAC_1_SQRT_2);
        BoundaryAssignment::Fixed([h, -h])
    }

    pub fn basis_state(bit: u8) -> Self {
        let mut v = [ZERO, ZERO];
        v[bit as usize] = linalg::ONE;
        BoundaryAssignment::Fixed(v)
    }
}

/// Boundary rules for a contraction; legs without an entry use the default.
#[derive(Clone, Debug)]
pub struct Boundary {
    pub default: BoundaryAssignment,
    pub overrides: BTreeMap<LegId, BoundaryAssignment>,
}

impl Boundary {
    /// Every dangling leg closed with the even-superposition ket.
    pub fn all_plus() -> Self {
        Boundary {
            default: BoundaryAssignment::plus(),
            overrides: BTreeMap::new(),
        }
    }

    /// Every dangling leg left open.
    pub fn all_free() -> Self {
        Boundary {
            default: BoundaryAssignment::Free,
            overrides: BTreeMap::new(),
        }
    }

    pub fn set(&mut self, leg: LegId, assignment: BoundaryAssignment) {
        self.overrides.insert(leg, assignment);
    }

    pub fn assignment(&self, leg: LegId) -> &BoundaryAssignment {
        self.overrides.get(&leg).unwrap_or(&self.default)
    }
}

/// A physical-space vector over an ordered list of sites, row-major with the
/// first site most significant. `amplitudes` is unit-normalised; `norm`
/// records the raw contraction norm before normalisation.
#[derive(Clone, Debug)]
pub struct StateVector {
    pub site_order: Vec<SiteId>,
    pub dims: Vec<usize>,
    pub amplitudes: Vec<C64>,
    pub norm: f64,
}

impl StateVector {
    pub fn total_dim(&self) -> usize {
        self.dims.iter().product()
    }
}

/// Contracts the full patch with every dangling leg closed, producing the
/// physical-space state. Fails if the dense vector would exceed
/// `budget_bytes` or any boundary leg is left free.
pub fn contract_state(
    lattice: &HexLattice,
    spec: &ProjectorSpec,
    boundary: &Boundary,
    budget_bytes: usize,
) -> Result<StateVector, PepsError> {
    let sites: Vec<SiteId> = (0..lattice.n_sites()).collect();
    let dims: Vec<usize> = sites
        .iter()
        .map(|&s| spec.kind_at(s).physical_dim())
        .collect();
    let total: usize = dims.iter().product();
    let needed = total * std::mem::size_of::<C64>();
    if needed > budget_bytes {
        return Err(PepsError::Budget {
            needed,
            budget: budget_bytes,
        });
    }
    let phi = singlet();
    let dangling = lattice.dangling_legs();
    for leg in &dangling {
        if *boundary.assignment(*leg) == BoundaryAssignment::Free {
            return Err(PepsError::BadAssignment(*leg));
        }
    }
    let mut amplitudes = vec![ZERO; total];
    let mut levels = vec![0usize; sites.len()];
    for (idx, amp) in amplitudes.iter_mut().enumerate() {
        decode(idx, &dims, &mut levels);
        let mut a = linalg::ONE;
        for bond in lattice.bonds() {
            let ba = leg_bit(spec, &levels, bond.a);
            let bb = leg_bit(spec, &levels, bond.b);
            a *= phi[(ba as usize, bb as usize)];
        }
        for leg in &dangling {
            match boundary.assignment(*leg) {
                BoundaryAssignment::Fixed(v) => {
                    a *= v[leg_bit(spec, &levels, *leg) as usize];
                }
                BoundaryAssignment::Free => unreachable!(),
            }
            if a == ZERO {
                break;
            }
        }
        *amp = a;
    }
    let norm = linalg::norm(&amplitudes);
    if norm == 0.0 {
        return Err(PepsError::ZeroState);
    }
    linalg::scale_in_place(&mut amplitudes, linalg::cr(1.0 / norm));
    Ok(StateVector {
        site_order: sites,
        dims,
        amplitudes,
        norm,
    })
}

fn decode(mut idx: usize, dims: &[usize], out: &mut [usize]) {
    for i in (0..dims.len()).rev() {
        out[i] = idx % dims[i];
        idx /= dims[i];
    }
}

fn leg_bit(spec: &ProjectorSpec, levels: &[usize], leg: LegId) -> u8 {
    spec.kind_at(leg.site).bit_for(levels[leg.site], leg.role)
}

/// Linear map from open-boundary configurations into the physical space of a
/// region. Rows are physical configurations (region sites ascending, first
/// most significant); columns are bit patterns on the open legs (ascending
/// LegId order, first leg most significant).
#[derive(Clone, Debug)]
pub struct RegionMap {
    pub region: Vec<SiteId>,
    pub dims: Vec<usize>,
    pub open_legs: Vec<LegId>,
    pub matrix: DMatrix<C64>,
}

/// Builds the region map of `region` inside `lattice`: bonds internal to the
/// region are contracted with the bond weight, every other leg of a region
/// site follows `boundary` (free legs become map columns, fixed legs close
/// with their ket).
pub fn support_map(
    lattice: &HexLattice,
    region: &[SiteId],
    spec: &ProjectorSpec,
    boundary: &Boundary,
) -> Result<RegionMap, PepsError> {
    if region.is_empty() {
        return Err(PepsError::EmptyRegion);
    }
    let mut region: Vec<SiteId> = region.to_vec();
    region.sort();
    region.dedup();
    let dims: Vec<usize> = region
        .iter()
        .map(|&s| spec.kind_at(s).physical_dim())
        .collect();
    let rows: usize = dims.iter().product();
    let internal = lattice.internal_bonds(&region);
    let dangling = lattice.dangling_legs_of(&region);
    let open_legs: Vec<LegId> = dangling
        .iter()
        .filter(|leg| *boundary.assignment(**leg) == BoundaryAssignment::Free)
        .copied()
        .collect();
    let cols = 1usize << open_legs.len();
    let phi = singlet();
    let mut matrix = DMatrix::zeros(rows, cols);
    let mut levels = vec![0usize; region.len()];
    let site_level =
        |levels: &[usize], s: SiteId| levels[region.binary_search(&s).expect("site in region")];
    for row in 0..rows {
        decode(row, &dims, &mut levels);
        let mut a = linalg::ONE;
        for bond in &internal {
            let ba = spec
                .kind_at(bond.a.site)
                .bit_for(site_level(&levels, bond.a.site), bond.a.role);
            let bb = spec
                .kind_at(bond.b.site)
                .bit_for(site_level(&levels, bond.b.site), bond.b.role);
            a *= phi[(ba as usize, bb as usize)];
        }
        for leg in &dangling {
            if let BoundaryAssignment::Fixed(v) = boundary.assignment(*leg) {
                let bit = spec
                    .kind_at(leg.site)
                    .bit_for(site_level(&levels, leg.site), leg.role);
                a *= v[bit as usize];
            }
        }
        if a == ZERO {
            continue;
        }
        // The open-leg bits are pinned by the physical configuration, so the
        // row has a single nonzero column.
        let mut col = 0usize;
        for leg in &open_legs {
            let bit = spec
                .kind_at(leg.site)
                .bit_for(site_level(&levels, leg.site), leg.role);
            col = col << 1 | bit as usize;
        }
        matrix[(row, col)] = a;
    }
    Ok(RegionMap {
        region,
        dims,
        open_legs,
        matrix,
    })
}

/// Orthonormal basis of a map's column space with its numerical rank.
#[derive(Clone, Debug)]
pub struct SupportSpace {
    pub ambient: usize,
    pub basis: DMatrix<C64>,
    pub rank: usize,
    pub tol: f64,
}

pub fn orthonormal_image(map: &DMatrix<C64>, rel_tol: f64) -> SupportSpace {
    let img = linalg::image_basis(map, rel_tol);
    SupportSpace {
        ambient: map.nrows(),
        basis: img.basis,
        rank: img.rank,
        tol: rel_tol,
    }
}

/// Weight of a unit vector inside a support space: the squared norm of its
/// orthogonal projection onto the space.
pub fn support_weight(vector: &[C64], space: &SupportSpace) -> f64 {
    assert_eq!(vector.len(), space.ambient);
    let mut weight = 0.0;
    for j in 0..space.rank {
        let col = space.basis.column(j);
        let mut acc = ZERO;
        for (i, &v) in vector.iter().enumerate() {
            acc += col[i].conj() * v;
        }
        weight += acc.norm_sqr();
    }
    weight
}

/// Keeps only the amplitudes whose level at every site lies in `levels`,
/// renormalises the survivor, and reports the kept squared weight relative
/// to the input. The returned vector stays in the full physical space with
/// zeros outside the sector; `norm` scales by the kept component's norm.
pub fn project_subspace(
    state: &StateVector,
    levels: &[usize],
) -> Result<(StateVector, f64), PepsError> {
    if levels.is_empty() || levels.iter().any(|&l| l >= 6) {
        return Err(PepsError::BadLevels);
    }
    let mut mask = [false; 6];
    for &l in levels {
        mask[l] = true;
    }
    let keep = |mut idx: usize| -> bool {
        for &d in state.dims.iter().rev() {
            if !mask[idx % d] {
                return false;
            }
            idx /= d;
        }
        true
    };
    let mut amplitudes: Vec<C64> = state
        .amplitudes
        .iter()
        .enumerate()
        .map(|(i, &a)| if keep(i) { a } else { ZERO })
        .collect();
    let kept = linalg::norm(&amplitudes);
    if kept <= 0.0 {
        return Err(PepsError::ZeroState);
    }
    let scale = linalg::cr(1.0 / kept);
    for a in amplitudes.iter_mut() {
        *a *= scale;
    }
    Ok((
        StateVector {
            site_order: state.site_order.clone(),
            dims: state.dims.clone(),
            amplitudes,
            norm: state.norm * kept,
        },
        kept * kept,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn singlet_is_symmetric_unit_norm() {
        let phi = singlet();
        assert_eq!(phi[(0, 1)], phi[(1, 0)]);
        let n2: f64 = phi.iter().map(|x| x.norm_sqr()).sum();
        assert_abs_diff_eq!(n2, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn projector_rows_are_unit_selectors() {
        for kind in [
            ProjectorKind::Tric,
            ProjectorKind::ClusterHex,
            ProjectorKind::Prime,
            ProjectorKind::DoublePrime,
        ] {
            let p = projector(kind);
            assert_eq!(p.nrows(), kind.physical_dim());
            assert_eq!(p.ncols(), 8);
            for r in 0..p.nrows() {
                let ones = p.row(r).iter().filter(|x| **x != ZERO).count();
                assert_eq!(ones, 1);
            }
            // Distinct levels select distinct virtual configurations.
            let qubit_rank = linalg::image_basis(&p.transpose(), 1e-9).rank;
            assert_eq!(qubit_rank, p.nrows());
        }
    }

    #[test]
    fn six_level_bits_split_into_selector_pairs() {
        // Levels with left bit set: 1, 2, 5. Right: 1, 3, 4. Vertical: 1, 3, 5.
        let t = ProjectorKind::Tric;
        let l: Vec<usize> = (0..6).filter(|&k| t.bits(k)[0] == 1).collect();
        let r: Vec<usize> = (0..6).filter(|&k| t.bits(k)[1] == 1).collect();
        let u: Vec<usize> = (0..6).filter(|&k| t.bits(k)[2] == 1).collect();
        assert_eq!(l, vec![1, 2, 5]);
        assert_eq!(r, vec![1, 3, 4]);
        assert_eq!(u, vec![1, 3, 5]);
    }

    #[test]
    fn single_site_contraction_is_uniform() {
        let lat = HexLattice::build_patch(1, 1).unwrap();
        let spec = ProjectorSpec::uniform(ProjectorKind::Tric);
        let st = contract_state(&lat, &spec, &Boundary::all_plus(), 1 << 20).unwrap();
        assert_eq!(st.dims, vec![6]);
        // Three plus closures give every level weight (1/sqrt 8); raw norm
        // squared is 6/8.
        assert_abs_diff_eq!(st.norm * st.norm, 0.75, epsilon = 1e-12);
        for a in &st.amplitudes {
            assert_abs_diff_eq!(a.re, 1.0 / 6f64.sqrt(), epsilon = 1e-12);
        }
    }

    #[test]
    fn two_site_contraction_norm() {
        let lat = HexLattice::build_patch(1, 2).unwrap();
        let spec = ProjectorSpec::uniform(ProjectorKind::Tric);
        let st = contract_state(&lat, &spec, &Boundary::all_plus(), 1 << 20).unwrap();
        // Four plus closures contribute 1/4; each bond weight is +-1/2, so
        // the raw norm squared is 36 * (1/16) * (1/4).
        assert_abs_diff_eq!(st.norm * st.norm, 0.5625, epsilon = 1e-12);
    }

    #[test]
    fn single_site_map_rank_is_six() {
        let lat = HexLattice::build_patch(1, 1).unwrap();
        let spec = ProjectorSpec::uniform(ProjectorKind::Tric);
        let map = support_map(&lat, &[0], &spec, &Boundary::all_free()).unwrap();
        assert_eq!(map.matrix.nrows(), 6);
        assert_eq!(map.matrix.ncols(), 8);
        let space = orthonormal_image(&map.matrix, 1e-9);
        assert_eq!(space.rank, 6);
    }

    #[test]
    fn budget_rejection() {
        let lat = HexLattice::build_patch(2, 2).unwrap();
        let spec = ProjectorSpec::uniform(ProjectorKind::Tric);
        let err = contract_state(&lat, &spec, &Boundary::all_plus(), 64);
        assert!(matches!(err, Err(PepsError::Budget { .. })));
    }

    #[test]
    fn level_projection_weights_partition_unity() {
        let lat = HexLattice::build_patch(1, 2).unwrap();
        let spec = ProjectorSpec::uniform(ProjectorKind::Tric);
        let psi = contract_state(&lat, &spec, &Boundary::all_plus(), 1 << 20).unwrap();

        let (full, w_full) = project_subspace(&psi, &[0, 1, 2, 3, 4, 5]).unwrap();
        assert_abs_diff_eq!(w_full, 1.0, epsilon = 1e-12);
        for (a, b) in full.amplitudes.iter().zip(psi.amplitudes.iter()) {
            assert_abs_diff_eq!((a - b).norm(), 0.0, epsilon = 1e-12);
        }

        // Same-pair sectors are exclusive, so their weights are a partition
        // of the cross-sector remainder's complement.
        let mut sum = 0.0;
        for pair in [[0usize, 1], [2, 3], [4, 5]] {
            let (sector, w) = project_subspace(&psi, &pair).unwrap();
            sum += w;
            assert_abs_diff_eq!(linalg::norm(&sector.amplitudes), 1.0, epsilon = 1e-12);
            // Survivors carry only in-pair levels at both sites.
            for (i, a) in sector.amplitudes.iter().enumerate() {
                if a.norm() > 0.0 {
                    assert!(pair.contains(&(i / 6)) && pair.contains(&(i % 6)));
                }
            }
        }
        assert!(sum <= 1.0 + 1e-12);

        assert!(matches!(
            project_subspace(&psi, &[]),
            Err(PepsError::BadLevels)
        ));
        assert!(matches!(
            project_subspace(&psi, &[6]),
            Err(PepsError::BadLevels)
        ));
    }
}
