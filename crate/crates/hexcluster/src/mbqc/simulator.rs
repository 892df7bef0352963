//! Exact measurement simulation on small patches.
//!
//! The state tensor keeps one six-level slot per unmeasured site and one
//! qubit slot per open leg, ordered sites-then-legs, each group ascending,
//! first slot most significant. Measurements contract site slots one at a
//! time; amplitudes stay unnormalized so the squared norm of the current
//! tensor is the probability of the recorded trajectory.

use nalgebra::DMatrix;
use rand_core::RngCore;
use serde::{Deserialize, Serialize};

use crate::lattice::{HexLattice, LegId, SiteId};
use crate::linalg::{norm, C64, ZERO};
use crate::mbqc::basis::{basis_vectors, MeasBasis};
use crate::mbqc::reference::h_gate;
use crate::mbqc::MbqcError;
use crate::peps::{Boundary, BoundaryAssignment, ProjectorSpec, RegionMap};
use crate::tensorops::{contract_index, strides};

/// Branches with squared norm below this fraction of the state are dead;
/// postselecting one is an error.
pub const DEAD_BRANCH_TOL: f64 = 1e-12;

/// How a measurement outcome is chosen.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "ModeRepr", into = "ModeRepr")]
pub enum MeasureMode {
    Sample,
    Postselect(usize),
}

#[derive(Clone, Serialize, Deserialize)]
#[serde(untagged)]
enum ModeRepr {
    Name(String),
    Post { post: usize },
}

impl From<MeasureMode> for ModeRepr {
    fn from(m: MeasureMode) -> Self {
        match m {
            MeasureMode::Sample => ModeRepr::Name("sample".into()),
            MeasureMode::Postselect(k) => ModeRepr::Post { post: k },
        }
    }
}

impl TryFrom<ModeRepr> for MeasureMode {
    type Error = String;

    fn try_from(r: ModeRepr) -> Result<Self, String> {
        match r {
            ModeRepr::Name(s) if s == "sample" => Ok(MeasureMode::Sample),
            ModeRepr::Name(s) => Err(format!("unknown measurement mode {s:?}")),
            ModeRepr::Post { post } => Ok(MeasureMode::Postselect(post)),
        }
    }
}

/// One recorded measurement.
#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct MeasurementRecord {
    pub site: SiteId,
    pub basis: MeasBasis,
    pub outcome: usize,
    /// Probability of this outcome given all earlier ones.
    pub probability: f64,
}

/// Collapsed logical content of the open legs after all sites are measured.
#[derive(Clone, Debug)]
pub struct LogicalState {
    pub legs: Vec<LegId>,
    /// Normalized amplitudes, first leg most significant.
    pub amplitudes: Vec<C64>,
    /// Norm of the unnormalized trajectory branch.
    pub norm: f64,
}

#[derive(Clone, Debug)]
pub struct SimState {
    sites: Vec<SiteId>,
    legs: Vec<LegId>,
    dims: Vec<usize>,
    amp: Vec<C64>,
}

impl SimState {
    /// Contracts `region` with every dangling leg closed on |+> except the
    /// listed `open` legs, which become qubit slots.
    pub fn new(lattice: &HexLattice, region: &[SiteId], open: &[LegId]) -> Result<Self, MbqcError> {
        let mut boundary = Boundary::all_plus();
        let dangling = lattice.dangling_legs_of(region);
        for leg in open {
            if !dangling.contains(leg) {
                return Err(MbqcError::UnknownLeg(*leg));
            }
            boundary.set(*leg, BoundaryAssignment::Free);
        }
        let spec = ProjectorSpec::uniform(crate::peps::ProjectorKind::Tric);
        let map = crate::peps::support_map(lattice, region, &spec, &boundary)?;
        Ok(SimState::from_region_map(map))
    }

    fn from_region_map(map: RegionMap) -> Self {
        let RegionMap {
            region,
            mut dims,
            open_legs,
            matrix,
        } = map;
        let cols = matrix.ncols();
        let mut amp = vec![ZERO; matrix.nrows() * cols];
        for row in 0..matrix.nrows() {
            for col in 0..cols {
                amp[row * cols + col] = matrix[(row, col)];
            }
        }
        dims.extend(std::iter::repeat_n(2, open_legs.len()));
        SimState {
            sites: region,
            legs: open_legs,
            dims,
            amp,
        }
    }

    pub fn unmeasured(&self) -> &[SiteId] {
        &self.sites
    }

    pub fn open_legs(&self) -> &[LegId] {
        &self.legs
    }

    pub fn norm(&self) -> f64 {
        norm(&self.amp)
    }

    fn site_position(&self, site: SiteId) -> Result<usize, MbqcError> {
        self.sites
            .binary_search(&site)
            .map_err(|_| MbqcError::UnknownSite(site))
    }

    fn leg_position(&self, leg: LegId) -> Result<usize, MbqcError> {
        self.legs
            .iter()
            .position(|l| *l == leg)
            .map(|i| self.sites.len() + i)
            .ok_or(MbqcError::UnknownLeg(leg))
    }

    /// Unnormalized branch after projecting `site` onto `ket`.
    pub fn project(&self, site: SiteId, ket: &[C64]) -> Result<SimState, MbqcError> {
        let pos = self.site_position(site)?;
        // contract_index conjugates its bra argument, which is exactly the
        // <ket| collapse.
        let amp = contract_index(&self.dims, pos, ket, &self.amp);
        let mut sites = self.sites.clone();
        sites.remove(pos);
        let mut dims = self.dims.clone();
        dims.remove(pos);
        Ok(SimState {
            sites,
            legs: self.legs.clone(),
            dims,
            amp,
        })
    }

    /// Squared branch norms of each outcome of `basis` at `site`.
    pub fn branch_weights(&self, site: SiteId, basis: &MeasBasis) -> Result<Vec<f64>, MbqcError> {
        let pos = self.site_position(site)?;
        if *basis == MeasBasis::Computational6 {
            return Ok(crate::tensorops::index_weights(&self.dims, pos, &self.amp));
        }
        let mut weights = Vec::with_capacity(6);
        for ket in basis_vectors(basis) {
            let branch = self.project(site, &ket)?;
            let n = branch.norm();
            weights.push(n * n);
        }
        Ok(weights)
    }

    /// Measures `site`, collapsing the state to the chosen branch.
    pub fn measure_site<R: RngCore>(
        &mut self,
        site: SiteId,
        basis: &MeasBasis,
        mode: MeasureMode,
        rng: &mut R,
    ) -> Result<MeasurementRecord, MbqcError> {
        let weights = self.branch_weights(site, basis)?;
        let total: f64 = weights.iter().sum();
        let outcome = match mode {
            MeasureMode::Postselect(k) => {
                if k >= weights.len() {
                    return Err(MbqcError::BadOutcome {
                        outcome: k,
                        dim: weights.len(),
                    });
                }
                k
            }
            MeasureMode::Sample => {
                let u = (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
                let target = u * total;
                let mut cum = 0.0;
                let mut chosen = weights.len() - 1;
                for (k, w) in weights.iter().enumerate() {
                    cum += w;
                    if target < cum {
                        chosen = k;
                        break;
                    }
                }
                chosen
            }
        };
        let probability = if total > 0.0 {
            weights[outcome] / total
        } else {
            0.0
        };
        if probability < DEAD_BRANCH_TOL {
            return Err(MbqcError::DeadBranch {
                site,
                outcome,
                probability,
            });
        }
        let kets = basis_vectors(basis);
        *self = self.project(site, &kets[outcome])?;
        Ok(MeasurementRecord {
            site,
            basis: *basis,
            outcome,
            probability,
        })
    }

    /// Contracts open legs with input kets; the kets are injected as they
    /// are, without any leg-crossing transform. contract_index conjugates
    /// its bra, so feed it the conjugate to inject the ket raw.
    pub fn inject_inputs(&mut self, inputs: &[(LegId, [C64; 2])]) -> Result<(), MbqcError> {
        for (leg, ket) in inputs {
            let pos = self.leg_position(*leg)?;
            let bra = [ket[0].conj(), ket[1].conj()];
            self.amp = contract_index(&self.dims, pos, &bra, &self.amp);
            self.dims.remove(pos);
            self.legs.remove(pos - self.sites.len());
        }
        Ok(())
    }

    fn leg_bits(&self, flat: usize, order: &[LegId]) -> Result<usize, MbqcError> {
        let st = strides(&self.dims);
        let mut idx = 0usize;
        for leg in order {
            let pos = self.leg_position(*leg)?;
            idx = (idx << 1) | ((flat / st[pos]) % 2);
        }
        Ok(idx)
    }

    /// Realized linear map from `inputs` to `outputs` once every site is
    /// measured, with one leg-crossing Hadamard applied per output leg.
    /// The first leg of each list is the most significant qubit.
    pub fn extract_operator(
        &self,
        outputs: &[LegId],
        inputs: &[LegId],
    ) -> Result<DMatrix<C64>, MbqcError> {
        if !self.sites.is_empty() {
            return Err(MbqcError::SitesRemain(self.sites.len()));
        }
        let mut listed: Vec<LegId> = outputs.iter().chain(inputs).copied().collect();
        listed.sort();
        if listed != self.legs {
            return Err(MbqcError::BadPattern(format!(
                "output/input lists do not cover the {} open legs exactly",
                self.legs.len()
            )));
        }
        let rows = 1usize << outputs.len();
        let cols = 1usize << inputs.len();
        let mut m = DMatrix::zeros(rows, cols);
        for (flat, &a) in self.amp.iter().enumerate() {
            let r = self.leg_bits(flat, outputs)?;
            let c = self.leg_bits(flat, inputs)?;
            m[(r, c)] = a;
        }
        Ok(hadamard_all(outputs.len()) * m)
    }

    /// Remaining open legs as a normalized logical state, one leg-crossing
    /// Hadamard per leg, in the listed order.
    pub fn extract_logical(&self, order: &[LegId]) -> Result<LogicalState, MbqcError> {
        let m = self.extract_operator(order, &[])?;
        let amplitudes: Vec<C64> = m.column(0).iter().copied().collect();
        let n = norm(&amplitudes);
        if n == 0.0 {
            return Err(MbqcError::BadPattern("logical state has zero norm".into()));
        }
        let amplitudes = amplitudes.iter().map(|z| z / n).collect();
        Ok(LogicalState {
            legs: order.to_vec(),
            amplitudes,
            norm: n,
        })
    }
}

fn hadamard_all(n: usize) -> DMatrix<C64> {
    let h = h_gate();
    let mut m: DMatrix<C64> = DMatrix::identity(1, 1);
    for _ in 0..n {
        m = m.kronecker(&h);
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::LegRole;
    use crate::linalg::cr;
    use crate::mbqc::basis::one_qubit_table;
    use crate::mbqc::reference::compare_up_to_phase;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn single_site() -> (HexLattice, SimState, LegId, LegId) {
        let lattice = HexLattice::build_patch(1, 1).unwrap();
        let site = lattice.site(0, 0);
        let input = LegId::new(site, LegRole::Right);
        let output = LegId::new(site, LegRole::Left);
        let state = SimState::new(&lattice, &[site], &[input, output]).unwrap();
        (lattice, state, output, input)
    }

    #[test]
    fn single_site_rotated_outcomes_match_table() {
        let theta = 1.37;
        let (_, state, output, input) = single_site();
        let table = one_qubit_table(theta);
        let kets = basis_vectors(&MeasBasis::Rotated(theta));
        for (k, ket) in kets.iter().enumerate() {
            let branch = state.project(0, ket).unwrap();
            let realized = branch.extract_operator(&[output], &[input]).unwrap();
            let fid = compare_up_to_phase(&realized, &table[k]);
            assert!(fid > 1.0 - 1e-12, "outcome {k}: fidelity {fid}");
        }
    }

    #[test]
    fn sampled_probabilities_are_conditional() {
        let (_, mut state, _, input) = single_site();
        state.inject_inputs(&[(input, [cr(1.0), cr(0.0)])]).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        let rec = state
            .measure_site(0, &MeasBasis::Computational6, MeasureMode::Sample, &mut rng)
            .unwrap();
        // Input |0> leaves only right-bit-0 levels alive, uniformly.
        assert!([0, 2, 5].contains(&rec.outcome));
        assert!((rec.probability - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn postselecting_dead_branch_fails() {
        let (_, mut state, _, input) = single_site();
        state.inject_inputs(&[(input, [cr(1.0), cr(0.0)])]).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        let err = state
            .measure_site(
                0,
                &MeasBasis::Computational6,
                MeasureMode::Postselect(1),
                &mut rng,
            )
            .unwrap_err();
        assert!(matches!(err, MbqcError::DeadBranch { outcome: 1, .. }));
    }

    #[test]
    fn trajectory_norm_tracks_probability_chain() {
        let lattice = HexLattice::build_patch(1, 2).unwrap();
        let sites = [lattice.site(0, 0), lattice.site(0, 1)];
        let out = LegId::new(sites[0], LegRole::Left);
        let inp = LegId::new(sites[1], LegRole::Right);
        let mut state = SimState::new(&lattice, &sites, &[out, inp]).unwrap();
        state.inject_inputs(&[(inp, [cr(0.6), cr(0.8)])]).unwrap();
        let start = state.norm();
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        let mut chain = 1.0;
        for site in sites {
            let rec = state
                .measure_site(site, &MeasBasis::Hat, MeasureMode::Sample, &mut rng)
                .unwrap();
            chain *= rec.probability;
        }
        let logical = state.extract_logical(&[out]).unwrap();
        assert!((logical.norm - start * chain.sqrt()).abs() < 1e-12);
        assert!((norm(&logical.amplitudes) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn mode_serde_round_trips() {
        for m in [MeasureMode::Sample, MeasureMode::Postselect(3)] {
            let s = serde_json::to_string(&m).unwrap();
            assert_eq!(serde_json::from_str::<MeasureMode>(&s).unwrap(), m);
        }
        assert_eq!(
            serde_json::to_string(&MeasureMode::Sample).unwrap(),
            "\"sample\""
        );
    }
}
