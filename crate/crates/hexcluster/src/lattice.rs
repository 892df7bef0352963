//! Brick-wall geometry: finite rectangular patches of the hexagonal lattice
//! drawn with all hexagon "verticals" on alternating columns.
//!
//! Sites carry row/column coordinates with rows increasing upward. Every
//! site has a left and a right virtual leg; sites on sublattice A (row+col
//! even) carry an up leg, sites on sublattice B a down leg. Horizontal bonds
//! join every pair of column neighbours; a vertical bond joins (r,c) to
//! (r+1,c) exactly when r+c is even, so verticals attach the up leg of an A
//! site to the down leg of the B site above it.

use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use thiserror::Error;

/// Row-major site index within a patch.
pub type SiteId = usize;

#[derive(Debug, Error)]
pub enum LatticeError {
    #[error("patch must have at least one row and one column, got {rows}x{cols}")]
    EmptyPatch { rows: usize, cols: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sublattice {
    A,
    B,
}

/// Virtual leg roles; declaration order fixes the leg ordering used for
/// dangling-leg enumeration and boundary indexing.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum LegRole {
    Left,
    Right,
    Up,
    Down,
}

/// One virtual leg of one site. Ordering is by site, then role.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct LegId {
    pub site: SiteId,
    pub role: LegRole,
}

impl LegId {
    pub fn new(site: SiteId, role: LegRole) -> Self {
        LegId { site, role }
    }
}

/// A contracted pair of legs. `a` is the leg on the smaller site index.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bond {
    pub a: LegId,
    pub b: LegId,
}

impl Bond {
    pub fn sites(&self) -> (SiteId, SiteId) {
        (self.a.site, self.b.site)
    }

    pub fn touches(&self, site: SiteId) -> bool {
        self.a.site == site || self.b.site == site
    }
}

/// Relative placement of the two sublattice sites joined by a bond.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Orientation {
    ALeftOfB,
    ARightOfB,
    ABelowB,
}

/// Placement of an adjacent vertical-bond block relative to a given block.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum NeighborPosition {
    BelowLeft,
    BelowRight,
    AboveLeft,
    AboveRight,
}

impl NeighborPosition {
    pub const ALL: [NeighborPosition; 4] = [
        NeighborPosition::BelowLeft,
        NeighborPosition::BelowRight,
        NeighborPosition::AboveLeft,
        NeighborPosition::AboveRight,
    ];

    /// The placement of `m` as seen from `n` when `n` sits at `self` from `m`.
    pub fn opposite(self) -> Self {
        match self {
            NeighborPosition::BelowLeft => NeighborPosition::AboveRight,
            NeighborPosition::BelowRight => NeighborPosition::AboveLeft,
            NeighborPosition::AboveLeft => NeighborPosition::BelowRight,
            NeighborPosition::AboveRight => NeighborPosition::BelowLeft,
        }
    }
}

/// Classification of an anticommutator of two block-neighbour terms.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum PairClass {
    PsdClass,
    ThirdClass,
}

/// Requested patch extent.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatchSpec {
    pub rows: usize,
    pub cols: usize,
}

/// A finite brick-wall patch with open boundary.
#[derive(Clone, Debug)]
pub struct HexLattice {
    pub rows: usize,
    pub cols: usize,
    bonds: Vec<Bond>,
}

impl HexLattice {
    pub fn build_patch(rows: usize, cols: usize) -> Result<Self, LatticeError> {
        if rows == 0 || cols == 0 {
            return Err(LatticeError::EmptyPatch { rows, cols });
        }
        let mut bonds = Vec::new();
        for r in 0..rows {
            for c in 0..cols {
                let s = r * cols + c;
                if c + 1 < cols {
                    bonds.push(Bond {
                        a: LegId::new(s, LegRole::Right),
                        b: LegId::new(s + 1, LegRole::Left),
                    });
                }
                if r + 1 < rows && (r + c) % 2 == 0 {
                    bonds.push(Bond {
                        a: LegId::new(s, LegRole::Up),
                        b: LegId::new(s + cols, LegRole::Down),
                    });
                }
            }
        }
        Ok(HexLattice { rows, cols, bonds })
    }

    pub fn n_sites(&self) -> usize {
        self.rows * self.cols
    }

    pub fn site(&self, row: usize, col: usize) -> SiteId {
        debug_assert!(row < self.rows && col < self.cols);
        row * self.cols + col
    }

    pub fn coords(&self, site: SiteId) -> (usize, usize) {
        (site / self.cols, site % self.cols)
    }

    pub fn sublattice(&self, site: SiteId) -> Sublattice {
        let (r, c) = self.coords(site);
        if (r + c) % 2 == 0 {
            Sublattice::A
        } else {
            Sublattice::B
        }
    }

    /// The three virtual legs of a site in the crate-wide fixed order
    /// (left, right, vertical).
    pub fn legs(&self, site: SiteId) -> [LegId; 3] {
        let vertical = match self.sublattice(site) {
            Sublattice::A => LegRole::Up,
            Sublattice::B => LegRole::Down,
        };
        [
            LegId::new(site, LegRole::Left),
            LegId::new(site, LegRole::Right),
            LegId::new(site, vertical),
        ]
    }

    pub fn bonds(&self) -> &[Bond] {
        &self.bonds
    }

    /// Legs not contracted by any bond, in ascending LegId order.
    pub fn dangling_legs(&self) -> Vec<LegId> {
        self.dangling_legs_of(&(0..self.n_sites()).collect::<Vec<_>>())
    }

    /// Legs of `region` sites not contracted by any bond internal to the
    /// region, in ascending LegId order.
    pub fn dangling_legs_of(&self, region: &[SiteId]) -> Vec<LegId> {
        let inside = |s: SiteId| region.contains(&s);
        let mut contracted = BTreeSet::new();
        for bond in &self.bonds {
            if inside(bond.a.site) && inside(bond.b.site) {
                contracted.insert(bond.a);
                contracted.insert(bond.b);
            }
        }
        let mut out = Vec::new();
        for &s in region {
            for leg in self.legs(s) {
                if !contracted.contains(&leg) {
                    out.push(leg);
                }
            }
        }
        out.sort();
        out
    }

    /// Bonds with both endpoints inside `region`, in lattice bond order.
    pub fn internal_bonds(&self, region: &[SiteId]) -> Vec<Bond> {
        self.bonds
            .iter()
            .filter(|b| region.contains(&b.a.site) && region.contains(&b.b.site))
            .copied()
            .collect()
    }

    pub fn classify_bond(&self, bond: &Bond) -> Orientation {
        match (bond.a.role, bond.b.role) {
            (LegRole::Up, LegRole::Down) => Orientation::ABelowB,
            (LegRole::Right, LegRole::Left) => match self.sublattice(bond.a.site) {
                Sublattice::A => Orientation::ALeftOfB,
                Sublattice::B => Orientation::ARightOfB,
            },
            _ => unreachable!("bonds join right-left or up-down legs"),
        }
    }

    /// The bond's sites ordered as (A-sublattice site, B-sublattice site).
    pub fn sublattice_pair(&self, bond: &Bond) -> (SiteId, SiteId) {
        match self.sublattice(bond.a.site) {
            Sublattice::A => (bond.a.site, bond.b.site),
            Sublattice::B => (bond.b.site, bond.a.site),
        }
    }

    pub fn neighbors(&self, site: SiteId) -> Vec<SiteId> {
        let mut out: Vec<SiteId> = self
            .bonds
            .iter()
            .filter_map(|b| {
                let (s, t) = b.sites();
                if s == site {
                    Some(t)
                } else if t == site {
                    Some(s)
                } else {
                    None
                }
            })
            .collect();
        out.sort();
        out
    }

    /// All connected regions of exactly `size` sites, each ascending, the
    /// list in lexicographic order.
    pub fn enumerate_regions(&self, size: usize) -> Vec<Vec<SiteId>> {
        let mut found: BTreeSet<Vec<SiteId>> = BTreeSet::new();
        if size == 0 {
            return Vec::new();
        }
        // Grow connected sets one frontier site at a time; the BTreeSet
        // canonicalises the many growth orders of the same region.
        let mut stack: Vec<BTreeSet<SiteId>> =
            (0..self.n_sites()).map(|s| BTreeSet::from([s])).collect();
        while let Some(region) = stack.pop() {
            if region.len() == size {
                found.insert(region.into_iter().collect());
                continue;
            }
            for &s in &region {
                for t in self.neighbors(s) {
                    if !region.contains(&t) {
                        let mut next = region.clone();
                        next.insert(t);
                        stack.push(next);
                    }
                }
            }
        }
        found.into_iter().collect()
    }

    /// Groups sites into vertical-bond blocks plus leftover single sites and
    /// records which blocks touch through a horizontal bond.
    pub fn block_partition(&self) -> BlockPartition {
        let mut blocks = Vec::new();
        for bond in &self.bonds {
            if self.classify_bond(bond) == Orientation::ABelowB {
                blocks.push(Block {
                    lower: bond.a.site,
                    upper: bond.b.site,
                });
            }
        }
        blocks.sort_by_key(|b| b.lower);
        let in_block: BTreeSet<SiteId> = blocks.iter().flat_map(|b| [b.lower, b.upper]).collect();
        let leftover: Vec<SiteId> = (0..self.n_sites())
            .filter(|s| !in_block.contains(s))
            .collect();
        let mut adjacency = Vec::new();
        for (m, bm) in blocks.iter().enumerate() {
            let (rm, cm) = self.coords(bm.lower);
            for (n, bn) in blocks.iter().enumerate() {
                if m == n {
                    continue;
                }
                let (rn, cn) = self.coords(bn.lower);
                let dr = rn as isize - rm as isize;
                let dc = cn as isize - cm as isize;
                let position = match (dr, dc) {
                    (-1, -1) => NeighborPosition::BelowLeft,
                    (-1, 1) => NeighborPosition::BelowRight,
                    (1, -1) => NeighborPosition::AboveLeft,
                    (1, 1) => NeighborPosition::AboveRight,
                    _ => continue,
                };
                // The shared row holds the connecting horizontal bond.
                let row = rm.max(rn);
                let (cl, cr) = (cm.min(cn), cm.max(cn));
                let bond = Bond {
                    a: LegId::new(self.site(row, cl), LegRole::Right),
                    b: LegId::new(self.site(row, cr), LegRole::Left),
                };
                debug_assert!(self.bonds.contains(&bond));
                adjacency.push(BlockAdjacency {
                    m,
                    n,
                    position,
                    bond,
                });
            }
        }
        adjacency.sort_by_key(|e| (e.m, e.n));
        BlockPartition {
            blocks,
            leftover,
            adjacency,
            third_class_pairs: BlockPartition::default_third_class(),
        }
    }
}

/// One vertical bond treated as a unit: lower site is sublattice A.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Block {
    pub lower: SiteId,
    pub upper: SiteId,
}

impl Block {
    pub fn sites(&self) -> [SiteId; 2] {
        [self.lower, self.upper]
    }
}

/// Directed adjacency entry: block `n` sits at `position` relative to block
/// `m`, connected through `bond`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockAdjacency {
    pub m: usize,
    pub n: usize,
    pub position: NeighborPosition,
    pub bond: Bond,
}

/// Vertical-bond grouping of a patch with the neighbour-pair classification
/// used by the anticommutator checks.
#[derive(Clone, Debug)]
pub struct BlockPartition {
    pub blocks: Vec<Block>,
    pub leftover: Vec<SiteId>,
    pub adjacency: Vec<BlockAdjacency>,
    third_class_pairs: BTreeSet<(NeighborPosition, NeighborPosition)>,
}

impl BlockPartition {
    /// Geometric default: the two same-tier pairs (both below, both above)
    /// only satisfy the relaxed bound; the four mixed-tier pairs are
    /// positive semidefinite.
    fn default_third_class() -> BTreeSet<(NeighborPosition, NeighborPosition)> {
        BTreeSet::from([
            key(NeighborPosition::BelowLeft, NeighborPosition::BelowRight),
            key(NeighborPosition::AboveLeft, NeighborPosition::AboveRight),
        ])
    }

    pub fn pair_class(&self, a: NeighborPosition, b: NeighborPosition) -> PairClass {
        if self.third_class_pairs.contains(&key(a, b)) {
            PairClass::ThirdClass
        } else {
            PairClass::PsdClass
        }
    }

    /// Replaces the classification table with computed verdicts.
    pub fn apply_calibration(&mut self, third_class: &[(NeighborPosition, NeighborPosition)]) {
        self.third_class_pairs = third_class.iter().map(|&(a, b)| key(a, b)).collect();
    }

    /// Neighbours of block `m` as (block index, position) in position order.
    pub fn neighbors_of(&self, m: usize) -> Vec<(usize, NeighborPosition)> {
        let mut out: Vec<(usize, NeighborPosition)> = self
            .adjacency
            .iter()
            .filter(|e| e.m == m)
            .map(|e| (e.n, e.position))
            .collect();
        out.sort_by_key(|&(n, p)| (p, n));
        out
    }

    /// Blocks with all four neighbour positions occupied.
    pub fn interior_blocks(&self) -> Vec<usize> {
        (0..self.blocks.len())
            .filter(|&m| self.neighbors_of(m).len() == 4)
            .collect()
    }

    pub fn connecting_bond(&self, m: usize, n: usize) -> Option<Bond> {
        self.adjacency
            .iter()
            .find(|e| e.m == m && e.n == n)
            .map(|e| e.bond)
    }
}

fn key(a: NeighborPosition, b: NeighborPosition) -> (NeighborPosition, NeighborPosition) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn patch_1x2_has_one_bond_four_dangling() {
        let lat = HexLattice::build_patch(1, 2).unwrap();
        assert_eq!(lat.bonds().len(), 1);
        assert_eq!(lat.dangling_legs().len(), 4);
    }

    #[test]
    fn patch_1x1_has_no_bonds_three_dangling() {
        let lat = HexLattice::build_patch(1, 1).unwrap();
        assert_eq!(lat.bonds().len(), 0);
        assert_eq!(lat.dangling_legs().len(), 3);
    }

    #[test]
    fn patch_2x2_counts() {
        let lat = HexLattice::build_patch(2, 2).unwrap();
        assert_eq!(lat.n_sites(), 4);
        assert_eq!(lat.bonds().len(), 3);
        assert_eq!(lat.dangling_legs().len(), 6);
    }

    #[test]
    fn patch_2x4_counts() {
        let lat = HexLattice::build_patch(2, 4).unwrap();
        assert_eq!(lat.n_sites(), 8);
        assert_eq!(lat.bonds().len(), 8);
        assert_eq!(lat.dangling_legs().len(), 8);
    }

    #[test]
    fn vertical_bonds_only_on_even_parity() {
        let lat = HexLattice::build_patch(3, 3).unwrap();
        for bond in lat.bonds() {
            if lat.classify_bond(bond) == Orientation::ABelowB {
                let (r, c) = lat.coords(bond.a.site);
                assert_eq!((r + c) % 2, 0);
                assert_eq!(lat.sublattice(bond.a.site), Sublattice::A);
                assert_eq!(lat.sublattice(bond.b.site), Sublattice::B);
            }
        }
    }

    #[test]
    fn interior_block_has_four_neighbors() {
        let lat = HexLattice::build_patch(4, 3).unwrap();
        let part = lat.block_partition();
        assert_eq!(part.blocks.len(), 5);
        assert_eq!(part.leftover, vec![lat.site(0, 1), lat.site(3, 1)]);
        let interior = part.interior_blocks();
        assert_eq!(interior.len(), 1);
        let m = interior[0];
        assert_eq!(
            part.blocks[m],
            Block {
                lower: lat.site(1, 1),
                upper: lat.site(2, 1)
            }
        );
        let nbrs = part.neighbors_of(m);
        let positions: Vec<NeighborPosition> = nbrs.iter().map(|&(_, p)| p).collect();
        assert_eq!(positions, NeighborPosition::ALL.to_vec());
    }

    #[test]
    fn region_enumeration_matches_brute_force_on_2x3() {
        let lat = HexLattice::build_patch(2, 3).unwrap();
        for size in 1..=4 {
            let fast = lat.enumerate_regions(size);
            let slow = brute_force_regions(&lat, size);
            assert_eq!(fast, slow, "size {size}");
        }
    }

    // Oracle: filter all site subsets of the given size by connectivity.
    fn brute_force_regions(lat: &HexLattice, size: usize) -> Vec<Vec<SiteId>> {
        let n = lat.n_sites();
        let mut out = Vec::new();
        for mask in 0u32..(1 << n) {
            if mask.count_ones() as usize != size {
                continue;
            }
            let region: Vec<SiteId> = (0..n).filter(|s| mask >> s & 1 == 1).collect();
            if is_connected(lat, &region) {
                out.push(region);
            }
        }
        out.sort();
        out
    }

    fn is_connected(lat: &HexLattice, region: &[SiteId]) -> bool {
        let mut seen = vec![region[0]];
        let mut frontier = vec![region[0]];
        while let Some(s) = frontier.pop() {
            for t in lat.neighbors(s) {
                if region.contains(&t) && !seen.contains(&t) {
                    seen.push(t);
                    frontier.push(t);
                }
            }
        }
        seen.len() == region.len()
    }

    #[test]
    fn leg_ordering_is_site_then_role() {
        let l1 = LegId::new(0, LegRole::Right);
        let l2 = LegId::new(0, LegRole::Up);
        let l3 = LegId::new(1, LegRole::Left);
        assert!(l1 < l2 && l2 < l3);
    }
}
