//! Exhaustive gate verification.
//!
//! Every check enumerates all outcome tuples of a pattern by recursively
//! collapsing one site at a time, extracts the realized logical operation of
//! each branch, and compares it against the independently assembled expected
//! operation up to a global phase. Branches of probability zero are skipped;
//! they cannot occur.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::lattice::{HexLattice, SiteId};
use crate::linalg::C64;
use crate::mbqc::basis::{
    basis_vectors, chain_cz_operation, cz_expected, cz_expected_from_correction,
    extended_cz_correction, extended_cz_from_bits, hat_bits, one_qubit_table, ExtendedCzOutcomes,
    MeasBasis,
};
use crate::mbqc::patterns::{
    cz_geometry, extended_cz_geometry, wire_geometry, ExtendedGeometry, ExtendedVariant,
};
use crate::mbqc::reference::{compare_up_to_phase, h_gate, vector_fidelity};
use crate::mbqc::simulator::{MeasureMode, SimState};
use crate::mbqc::MbqcError;
use crate::peps::ProjectorKind;
use rand_chacha::ChaCha12Rng;
use rand_core::SeedableRng;
use std::collections::BTreeSet;

/// Branches whose squared norm falls below this fraction of the parent are
/// treated as impossible outcomes and skipped during enumeration.
const IMPOSSIBLE_BRANCH: f64 = 1e-20;

/// Walks every outcome tuple of `bases` over the given sites, calling
/// `leaf` with the outcome tuple and the fully collapsed branch.
fn for_each_outcome<F>(
    state: &SimState,
    sites: &[(SiteId, MeasBasis)],
    outcomes: &mut Vec<usize>,
    reference_sq: f64,
    leaf: &mut F,
) -> Result<(), MbqcError>
where
    F: FnMut(&[usize], &SimState) -> Result<(), MbqcError>,
{
    let Some(&(site, basis)) = sites.first() else {
        return leaf(outcomes, state);
    };
    let kets = basis_vectors(&basis);
    for (k, ket) in kets.iter().enumerate() {
        let branch = state.project(site, ket)?;
        let n = branch.norm();
        if n * n < IMPOSSIBLE_BRANCH * reference_sq {
            continue;
        }
        outcomes.push(k);
        for_each_outcome(&branch, &sites[1..], outcomes, reference_sq, leaf)?;
        outcomes.pop();
    }
    Ok(())
}

/// Worst fidelity and where it occurred.
#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct WorstCase {
    pub fidelity: f64,
    pub outcomes: Vec<usize>,
}

impl WorstCase {
    fn start() -> Self {
        WorstCase {
            fidelity: f64::INFINITY,
            outcomes: Vec::new(),
        }
    }

    fn absorb(&mut self, fidelity: f64, outcomes: &[usize]) {
        if fidelity < self.fidelity {
            self.fidelity = fidelity;
            self.outcomes = outcomes.to_vec();
        }
    }
}

/// One-qubit gate family: single-site realized maps against the six-entry
/// operation table for several rotation angles, plus two-site composition.
#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct OneQubitReport {
    pub thetas: Vec<f64>,
    pub single_site_tuples: usize,
    pub single_site_worst: WorstCase,
    pub composition_tuples: usize,
    pub composition_worst: WorstCase,
    pub computational_tuples: usize,
    pub computational_worst: WorstCase,
    pub tol: f64,
    pub pass: bool,
}

pub fn check_one_qubit(thetas: &[f64], tol: f64) -> Result<OneQubitReport, MbqcError> {
    let mut single_worst = WorstCase::start();
    let mut single_tuples = 0usize;
    let wire1 = wire_geometry(1)?;
    let state1 = SimState::new(
        &wire1.lattice,
        &wire1.region,
        &[wire1.outputs[0], wire1.inputs[0]],
    )?;
    for &theta in thetas {
        let table = one_qubit_table(theta);
        let site = wire1.region[0];
        let basis = MeasBasis::Rotated(theta);
        let kets = basis_vectors(&basis);
        for (k, ket) in kets.iter().enumerate() {
            let branch = state1.project(site, ket)?;
            let realized = branch.extract_operator(&wire1.outputs, &wire1.inputs)?;
            single_worst.absorb(compare_up_to_phase(&realized, &table[k]), &[k]);
            single_tuples += 1;
        }
    }

    // Computational-basis outcomes collapse the site to a rank-one map
    // |l><r| built from the level's virtual bits.
    let mut comp_worst = WorstCase::start();
    let mut comp_tuples = 0usize;
    for level in 0..6 {
        let bits = ProjectorKind::Tric.bits(level);
        let kets = basis_vectors(&MeasBasis::Computational6);
        let branch = state1.project(wire1.region[0], &kets[level])?;
        let realized = branch.extract_operator(&wire1.outputs, &wire1.inputs)?;
        let mut expected: DMatrix<C64> = DMatrix::zeros(2, 2);
        expected[(bits[0] as usize, bits[1] as usize)] = crate::linalg::cr(1.0);
        expected = h_gate() * expected;
        comp_worst.absorb(compare_up_to_phase(&realized, &expected), &[level]);
        comp_tuples += 1;
    }

    // Two-site wire: the realized map must be the product of the per-site
    // table entries, leftmost site outermost.
    let mut comp2_worst = WorstCase::start();
    let mut comp2_tuples = 0usize;
    let wire2 = wire_geometry(2)?;
    let (ta, tb) = (0.4, -1.1);
    let state2 = SimState::new(
        &wire2.lattice,
        &wire2.region,
        &[wire2.outputs[0], wire2.inputs[0]],
    )?;
    let tables = [one_qubit_table(ta), one_qubit_table(tb)];
    let sites = [
        (wire2.region[0], MeasBasis::Rotated(ta)),
        (wire2.region[1], MeasBasis::Rotated(tb)),
    ];
    let reference_sq = state2.norm() * state2.norm();
    for_each_outcome(
        &state2,
        &sites,
        &mut Vec::new(),
        reference_sq,
        &mut |outcomes, branch| {
            let realized = branch.extract_operator(&wire2.outputs, &wire2.inputs)?;
            let expected = &tables[0][outcomes[0]] * &tables[1][outcomes[1]];
            comp2_worst.absorb(compare_up_to_phase(&realized, &expected), outcomes);
            comp2_tuples += 1;
            Ok(())
        },
    )?;

    let pass = single_worst.fidelity >= 1.0 - tol
        && comp_worst.fidelity >= 1.0 - tol
        && comp2_worst.fidelity >= 1.0 - tol;
    Ok(OneQubitReport {
        thetas: thetas.to_vec(),
        single_site_tuples: single_tuples,
        single_site_worst: single_worst,
        composition_tuples: comp2_tuples,
        composition_worst: comp2_worst,
        computational_tuples: comp_tuples,
        computational_worst: comp_worst,
        tol,
        pass,
    })
}

/// Wire initialization and readout through computational-basis measurements
/// of the terminal sites.
#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct InitReadoutReport {
    pub init_worst: WorstCase,
    pub readout_mass_error: f64,
    pub tol: f64,
    pub pass: bool,
}

pub fn check_init_readout(tol: f64) -> Result<InitReadoutReport, MbqcError> {
    let map = crate::mbqc::basis::init_readout_map();
    let wire = wire_geometry(1)?;
    let site = wire.region[0];
    let s = std::f64::consts::FRAC_1_SQRT_2;

    // Init: no injected input; the right leg closes on |+> like any other
    // boundary leg, and the outcome decides |+> or |-> on the wire.
    let mut init_worst = WorstCase::start();
    let init_state = SimState::new(&wire.lattice, &wire.region, &[wire.outputs[0]])?;
    let kets = basis_vectors(&MeasBasis::Computational6);
    for (level, ket) in kets.iter().enumerate() {
        let branch = init_state.project(site, ket)?;
        let logical = branch.extract_logical(&wire.outputs)?;
        let sign = if map.init_plus[level] { 1.0 } else { -1.0 };
        let want = [crate::linalg::cr(s), crate::linalg::cr(s * sign)];
        init_worst.absorb(vector_fidelity(&logical.amplitudes, &want), &[level]);
    }

    // Readout: inject a Z eigenstate; all outcome probability must sit on
    // levels whose readout bit matches.
    let mut mass_error = 0.0f64;
    for bit in 0..2u8 {
        let mut state = SimState::new(&wire.lattice, &wire.region, &[wire.inputs[0]])?;
        let mut ket = [crate::linalg::cr(0.0); 2];
        ket[bit as usize] = crate::linalg::cr(1.0);
        state.inject_inputs(&[(wire.inputs[0], ket)])?;
        let weights = state.branch_weights(site, &MeasBasis::Computational6)?;
        let total: f64 = weights.iter().sum();
        let wrong: f64 = weights
            .iter()
            .enumerate()
            .filter(|(level, _)| map.readout_bit[*level] != bit)
            .map(|(_, w)| w)
            .sum();
        mass_error = mass_error.max(wrong / total);
    }

    let pass = init_worst.fidelity >= 1.0 - tol && mass_error <= tol;
    Ok(InitReadoutReport {
        init_worst,
        readout_mass_error: mass_error,
        tol,
        pass,
    })
}

/// Vertical-bond controlled-Z over all 36 hat outcome pairs, checked against
/// the collapsed-tensor assembly and the correction-frame form.
#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct CzReport {
    pub tuples: usize,
    pub worst: WorstCase,
    pub frame_worst: WorstCase,
    pub tol: f64,
    pub pass: bool,
}

pub fn check_cz(tol: f64) -> Result<CzReport, MbqcError> {
    let g = cz_geometry()?;
    let mut open = g.inputs.clone();
    open.extend(&g.outputs);
    let state = SimState::new(&g.lattice, &g.region, &open)?;
    // Wire a runs through the upper site, listed first in inputs/outputs;
    // measure it first so outcome tuples read (o_a, o_b).
    let upper = g.inputs[0].site;
    let lower = g.inputs[1].site;
    let sites = [(upper, MeasBasis::Hat), (lower, MeasBasis::Hat)];
    let mut worst = WorstCase::start();
    let mut frame_worst = WorstCase::start();
    let mut tuples = 0usize;
    let reference_sq = state.norm() * state.norm();
    for_each_outcome(
        &state,
        &sites,
        &mut Vec::new(),
        reference_sq,
        &mut |outcomes, branch| {
            let realized = branch.extract_operator(&g.outputs, &g.inputs)?;
            let expected = cz_expected(outcomes[0], outcomes[1]);
            let framed = cz_expected_from_correction(outcomes[0], outcomes[1]);
            worst.absorb(compare_up_to_phase(&realized, &expected), outcomes);
            frame_worst.absorb(compare_up_to_phase(&realized, &framed), outcomes);
            tuples += 1;
            Ok(())
        },
    )?;
    let pass = tuples == 36 && worst.fidelity >= 1.0 - tol && frame_worst.fidelity >= 1.0 - tol;
    Ok(CzReport {
        tuples,
        worst,
        frame_worst,
        tol,
        pass,
    })
}

/// Results for one candidate wiring of the detached-chain controlled-Z.
#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ExtendedCandidateReport {
    pub variant: ExtendedVariant,
    pub tuples: usize,
    /// Tuples matching the listed correction rule.
    pub matched: usize,
    pub worst: WorstCase,
    /// Mismatch counts keyed by the outcome at chain end `e`.
    pub mismatches_by_e: [usize; 6],
    /// Same tuples, with the e-end bit read from the level's right bit
    /// instead of the listed rule.
    pub alternate_e_rule_matched: usize,
    pub alternate_e_rule_worst: WorstCase,
    /// Tuples matching the operation assembled from the collapsed tensors
    /// along this candidate's actual bond structure.
    pub tensor_route_matched: usize,
    pub tensor_route_worst: WorstCase,
}

fn bonded(lattice: &HexLattice, x: SiteId, y: SiteId) -> bool {
    lattice.bonds().iter().any(|b| b.touches(x) && b.touches(y))
}

/// Expected operation from the collapsed tensors themselves. Summing the
/// internal virtual bits of the chain leaves `(H (x) H) (X^{l_a} (x)
/// X^{l_b}) CZ (Z (x) Z) (X^{r_a} (x) X^{r_b})`, where each wire's Z
/// exponent collects the sign bit of its own site, the sign bit of the
/// bridge site on the other wire, and the two bits facing the bond that
/// couples it into the chain.
fn tensor_route_expected(g: &ExtendedGeometry, o: &ExtendedCzOutcomes) -> DMatrix<C64> {
    let lattice = &g.pattern.lattice;
    let col = |s: SiteId| lattice.coords(s).1;
    // Picks the (left, right) bit of `from` on the leg facing `to`.
    let toward = |bits: (u8, u8), from: SiteId, to: SiteId| -> u8 {
        if col(to) < col(from) {
            bits.0
        } else {
            bits.1
        }
    };
    let (la, sa, ra) = hat_bits(o.a);
    let (lb, sb, rb) = hat_bits(o.b);
    let (lc, sc, rc) = hat_bits(o.c);
    let (ld, sd, rd) = hat_bits(o.d);
    let e_bits = ProjectorKind::Tric.bits(o.e);
    let f_bits = ProjectorKind::Tric.bits(o.f);
    let (end_d, end_d_bits, end_c, end_c_bits) = if bonded(lattice, g.sites.e, g.sites.d) {
        (g.sites.e, e_bits, g.sites.f, f_bits)
    } else {
        (g.sites.f, f_bits, g.sites.e, e_bits)
    };
    let za = sa
        ^ sd
        ^ toward((lc, rc), g.sites.c, g.sites.d)
        ^ toward((end_d_bits[0], end_d_bits[1]), end_d, g.sites.d);
    let zb = sb
        ^ sc
        ^ toward((ld, rd), g.sites.d, g.sites.c)
        ^ toward((end_c_bits[0], end_c_bits[1]), end_c, g.sites.c);
    chain_cz_operation([la, lb], [za, zb], [ra, rb])
}

/// Detached-chain controlled-Z over all 6^6 outcome tuples for each of the
/// four candidate wirings.
#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ExtendedCzReport {
    pub candidates: Vec<ExtendedCandidateReport>,
    pub best: usize,
    pub tol: f64,
    /// The collapsed-tensor assembly reproduces every realized operation on
    /// every candidate; a failure here means the simulation itself broke.
    pub tensor_route_pass: bool,
    /// The listed correction rule holds on every tuple of some candidate.
    pub pass: bool,
}

pub fn check_extended_cz(tol: f64) -> Result<ExtendedCzReport, MbqcError> {
    let mut candidates = Vec::new();
    for variant in ExtendedVariant::ALL {
        let g = extended_cz_geometry(variant)?;
        let p = &g.pattern;
        let mut open = p.inputs.clone();
        open.extend(&p.outputs);
        let state = SimState::new(&p.lattice, &p.region, &open)?;
        let sites = [
            (g.sites.a, MeasBasis::Hat),
            (g.sites.b, MeasBasis::Hat),
            (g.sites.c, MeasBasis::Hat),
            (g.sites.d, MeasBasis::Hat),
            (g.sites.e, MeasBasis::Computational6),
            (g.sites.f, MeasBasis::Computational6),
        ];
        let mut tuples = 0usize;
        let mut matched = 0usize;
        let mut worst = WorstCase::start();
        let mut mismatches_by_e = [0usize; 6];
        let mut alt_matched = 0usize;
        let mut alt_worst = WorstCase::start();
        let mut tensor_matched = 0usize;
        let mut tensor_worst = WorstCase::start();
        let reference_sq = state.norm() * state.norm();
        for_each_outcome(
            &state,
            &sites,
            &mut Vec::new(),
            reference_sq,
            &mut |o, branch| {
                let realized = branch.extract_operator(&p.outputs, &p.inputs)?;
                let outcomes = ExtendedCzOutcomes {
                    a: o[0],
                    b: o[1],
                    c: o[2],
                    d: o[3],
                    e: o[4],
                    f: o[5],
                };
                let bits = extended_cz_correction(&outcomes);
                let fid = compare_up_to_phase(&realized, &extended_cz_from_bits(&bits));
                worst.absorb(fid, o);
                tuples += 1;
                if fid >= 1.0 - tol {
                    matched += 1;
                } else {
                    mismatches_by_e[outcomes.e] += 1;
                }
                let mut alt = bits;
                alt.u_e = ProjectorKind::Tric.bits(outcomes.e)[1];
                let alt_fid = compare_up_to_phase(&realized, &extended_cz_from_bits(&alt));
                alt_worst.absorb(alt_fid, o);
                if alt_fid >= 1.0 - tol {
                    alt_matched += 1;
                }
                let tensor_fid =
                    compare_up_to_phase(&realized, &tensor_route_expected(&g, &outcomes));
                tensor_worst.absorb(tensor_fid, o);
                if tensor_fid >= 1.0 - tol {
                    tensor_matched += 1;
                }
                Ok(())
            },
        )?;
        candidates.push(ExtendedCandidateReport {
            variant,
            tuples,
            matched,
            worst,
            mismatches_by_e,
            alternate_e_rule_matched: alt_matched,
            alternate_e_rule_worst: alt_worst,
            tensor_route_matched: tensor_matched,
            tensor_route_worst: tensor_worst,
        });
    }
    let best = candidates
        .iter()
        .enumerate()
        .max_by(|(_, a), (_, b)| {
            a.matched
                .cmp(&b.matched)
                .then(a.worst.fidelity.total_cmp(&b.worst.fidelity))
        })
        .map(|(i, _)| i)
        .unwrap_or(0);
    let tensor_route_pass = candidates
        .iter()
        .all(|c| c.tuples > 0 && c.tensor_route_matched == c.tuples);
    let pass = candidates
        .iter()
        .any(|c| c.tuples > 0 && c.matched == c.tuples);
    Ok(ExtendedCzReport {
        candidates,
        best,
        tol,
        tensor_route_pass,
        pass,
    })
}

/// Sampled-trajectory variant of the detached-chain check.
#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ExtendedSampleReport {
    pub variant: ExtendedVariant,
    pub samples: usize,
    pub distinct_tuples: usize,
    pub listed_matched: usize,
    pub listed_worst: WorstCase,
    pub tensor_matched: usize,
    pub tensor_worst: WorstCase,
    pub tol: f64,
    pub seed: u64,
    /// The listed correction rule reproduces every sampled realized
    /// operation.
    pub pass: bool,
}

/// Draws outcome tuples by Born sampling on the operator-level state and
/// compares each realized operation against the listed correction rule and
/// the collapsed-tensor route.
pub fn check_extended_cz_sampled(
    variant: ExtendedVariant,
    samples: usize,
    seed: u64,
    tol: f64,
) -> Result<ExtendedSampleReport, MbqcError> {
    let g = extended_cz_geometry(variant)?;
    let p = &g.pattern;
    let mut open = p.inputs.clone();
    open.extend(&p.outputs);
    let base = SimState::new(&p.lattice, &p.region, &open)?;
    let sites = [
        (g.sites.a, MeasBasis::Hat),
        (g.sites.b, MeasBasis::Hat),
        (g.sites.c, MeasBasis::Hat),
        (g.sites.d, MeasBasis::Hat),
        (g.sites.e, MeasBasis::Computational6),
        (g.sites.f, MeasBasis::Computational6),
    ];
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut seen = BTreeSet::new();
    let mut listed_matched = 0usize;
    let mut listed_worst = WorstCase::start();
    let mut tensor_matched = 0usize;
    let mut tensor_worst = WorstCase::start();
    for _ in 0..samples {
        let mut state = base.clone();
        let mut o = [0usize; 6];
        for (i, (site, basis)) in sites.iter().enumerate() {
            let record = state.measure_site(*site, basis, MeasureMode::Sample, &mut rng)?;
            o[i] = record.outcome;
        }
        seen.insert(o);
        let realized = state.extract_operator(&p.outputs, &p.inputs)?;
        let outcomes = ExtendedCzOutcomes {
            a: o[0],
            b: o[1],
            c: o[2],
            d: o[3],
            e: o[4],
            f: o[5],
        };
        let bits = extended_cz_correction(&outcomes);
        let listed_fid = compare_up_to_phase(&realized, &extended_cz_from_bits(&bits));
        listed_worst.absorb(listed_fid, &o);
        if listed_fid >= 1.0 - tol {
            listed_matched += 1;
        }
        let tensor_fid = compare_up_to_phase(&realized, &tensor_route_expected(&g, &outcomes));
        tensor_worst.absorb(tensor_fid, &o);
        if tensor_fid >= 1.0 - tol {
            tensor_matched += 1;
        }
    }
    Ok(ExtendedSampleReport {
        variant,
        samples,
        distinct_tuples: seen.len(),
        listed_matched,
        listed_worst,
        tensor_matched,
        tensor_worst,
        tol,
        seed,
        pass: listed_matched == samples && samples > 0,
    })
}

/// All gate families in one report.
#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct GateCheckReport {
    pub one_qubit: OneQubitReport,
    pub init_readout: InitReadoutReport,
    pub cz: CzReport,
    pub extended_cz: ExtendedCzReport,
    pub pass: bool,
}

pub fn verify_gates(thetas: &[f64], tol: f64) -> Result<GateCheckReport, MbqcError> {
    let one_qubit = check_one_qubit(thetas, tol)?;
    let init_readout = check_init_readout(tol)?;
    let cz = check_cz(tol)?;
    let extended_cz = check_extended_cz(tol)?;
    let pass = one_qubit.pass && init_readout.pass && cz.pass && extended_cz.pass;
    Ok(GateCheckReport {
        one_qubit,
        init_readout,
        cz,
        extended_cz,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOL: f64 = 1e-10;

    #[test]
    fn one_qubit_table_verifies() {
        let report = check_one_qubit(&[0.0, 0.37, std::f64::consts::FRAC_PI_2, -2.2], TOL).unwrap();
        assert!(report.pass, "worst {:?}", report.single_site_worst);
        assert_eq!(report.single_site_tuples, 24);
        assert_eq!(report.composition_tuples, 36);
    }

    #[test]
    fn init_readout_verifies() {
        let report = check_init_readout(TOL).unwrap();
        assert!(report.pass, "{report:?}");
    }

    #[test]
    fn cz_all_pairs_verify() {
        let report = check_cz(TOL).unwrap();
        assert!(report.pass, "worst {:?}", report.worst);
        assert_eq!(report.tuples, 36);
    }

    // Runs the full 4 x 6^6 tuple sweep; a couple of seconds under the
    // optimized test profile.
    #[test]
    fn extended_cz_tensor_route_verifies_and_listed_rule_does_not() {
        let report = check_extended_cz(TOL).unwrap();
        assert!(report.tensor_route_pass, "{report:?}");
        for c in &report.candidates {
            assert_eq!(c.tuples, 46656);
            assert_eq!(c.tensor_route_matched, c.tuples);
            assert!(c.tensor_route_worst.fidelity > 1.0 - 1e-12);
        }
        // The listed rule holds exactly on the outcome subset where both
        // wires carry no X byproduct and the e-end bit agrees: 2/27.
        let best = &report.candidates[report.best];
        assert!(!report.pass);
        assert_eq!(best.matched, 46656 * 2 / 27);
        assert_eq!(best.mismatches_by_e, [7776, 7776, 6912, 6912, 6912, 6912]);
    }
}
