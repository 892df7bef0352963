//! Measurement patterns: geometry builders for the standard gate layouts and
//! a JSON-described runner.
//!
//! Pattern files look like
//!
//! ```json
//! {
//!   "patch": {"rows": 1, "cols": 3},
//!   "inputs":  [{"site": 2, "role": "right"}],
//!   "outputs": [{"site": 0, "role": "left"}],
//!   "steps": [
//!     {"site": 2, "basis": {"rot": 0.7853981633974483}, "mode": "sample"},
//!     {"site": 1, "basis": "hat", "mode": {"post": 0}},
//!     {"site": 0, "basis": "comp6", "mode": "sample"}
//!   ]
//! }
//! ```
//!
//! or name a builtin (`"builtin": "wire" | "cz" | "extendedCz"`) instead of a
//! patch. Inputs are closed with |+> when the pattern runs; outputs stay open
//! and come back as the logical state.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::lattice::{HexLattice, LegId, LegRole, SiteId};
use crate::linalg::cr;
use crate::mbqc::basis::{wire_byproduct, MeasBasis};
use crate::mbqc::simulator::{MeasureMode, MeasurementRecord, SimState};
use crate::mbqc::MbqcError;

/// Classical X/Z byproduct bits per logical wire, flipped as rotated-basis
/// outcomes come in.
#[derive(Clone, Debug, Default, Serialize)]
pub struct PauliFrame {
    pub x: Vec<u8>,
    pub z: Vec<u8>,
}

impl PauliFrame {
    pub fn new(wires: usize) -> Self {
        PauliFrame {
            x: vec![0; wires],
            z: vec![0; wires],
        }
    }

    pub fn absorb(&mut self, wire: usize, outcome: usize) {
        let b = wire_byproduct(outcome);
        self.x[wire] ^= b.x;
        self.z[wire] ^= b.z;
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PatchDef {
    pub rows: usize,
    pub cols: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub region: Option<Vec<SiteId>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PatternLeg {
    pub site: SiteId,
    pub role: RoleName,
}

/// Lowercase leg-role names for pattern files.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RoleName {
    Left,
    Right,
    Up,
    Down,
}

impl From<RoleName> for LegRole {
    fn from(r: RoleName) -> LegRole {
        match r {
            RoleName::Left => LegRole::Left,
            RoleName::Right => LegRole::Right,
            RoleName::Up => LegRole::Up,
            RoleName::Down => LegRole::Down,
        }
    }
}

impl From<LegRole> for RoleName {
    fn from(r: LegRole) -> RoleName {
        match r {
            LegRole::Left => RoleName::Left,
            LegRole::Right => RoleName::Right,
            LegRole::Up => RoleName::Up,
            LegRole::Down => RoleName::Down,
        }
    }
}

impl PatternLeg {
    pub fn leg(&self) -> LegId {
        LegId::new(self.site, self.role.into())
    }

    fn from_leg(leg: LegId) -> Self {
        PatternLeg {
            site: leg.site,
            role: leg.role.into(),
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PatternStep {
    pub site: SiteId,
    pub basis: MeasBasis,
    pub mode: MeasureMode,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Pattern {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub builtin: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub patch: Option<PatchDef>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub inputs: Vec<PatternLeg>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub outputs: Vec<PatternLeg>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub steps: Vec<PatternStep>,
}

/// A pattern bound to its lattice, ready to run.
#[derive(Clone, Debug)]
pub struct ResolvedPattern {
    pub lattice: HexLattice,
    pub region: Vec<SiteId>,
    pub inputs: Vec<LegId>,
    pub outputs: Vec<LegId>,
    pub steps: Vec<PatternStep>,
}

impl Pattern {
    pub fn from_json(text: &str) -> Result<Pattern, MbqcError> {
        serde_json::from_str(text).map_err(|e| MbqcError::BadPattern(e.to_string()))
    }

    pub fn resolve(&self) -> Result<ResolvedPattern, MbqcError> {
        let mut resolved = match (&self.builtin, &self.patch) {
            (Some(_), Some(_)) => {
                return Err(MbqcError::BadPattern(
                    "give either a builtin name or a patch, not both".into(),
                ));
            }
            (Some(name), None) => builtin_pattern(name)?,
            (None, Some(def)) => {
                let lattice = HexLattice::build_patch(def.rows, def.cols)?;
                let region = match &def.region {
                    Some(sites) => {
                        let mut region = sites.clone();
                        region.sort();
                        region.dedup();
                        for &s in &region {
                            if s >= lattice.n_sites() {
                                return Err(MbqcError::UnknownSite(s));
                            }
                        }
                        region
                    }
                    None => (0..lattice.n_sites()).collect(),
                };
                ResolvedPattern {
                    lattice,
                    region,
                    inputs: self.inputs.iter().map(PatternLeg::leg).collect(),
                    outputs: self.outputs.iter().map(PatternLeg::leg).collect(),
                    steps: self.steps.clone(),
                }
            }
            (None, None) => {
                return Err(MbqcError::BadPattern(
                    "pattern needs a builtin name or a patch".into(),
                ));
            }
        };
        // Explicit fields override builtin defaults.
        if !self.steps.is_empty() {
            resolved.steps = self.steps.clone();
        }
        if !self.inputs.is_empty() {
            resolved.inputs = self.inputs.iter().map(PatternLeg::leg).collect();
        }
        if !self.outputs.is_empty() {
            resolved.outputs = self.outputs.iter().map(PatternLeg::leg).collect();
        }
        resolved.validate()?;
        Ok(resolved)
    }
}

impl ResolvedPattern {
    fn validate(&self) -> Result<(), MbqcError> {
        let mut measured: Vec<SiteId> = self.steps.iter().map(|s| s.site).collect();
        measured.sort();
        measured.dedup();
        if measured.len() != self.steps.len() {
            return Err(MbqcError::BadPattern("a site is measured twice".into()));
        }
        if measured != self.region {
            return Err(MbqcError::BadPattern(format!(
                "steps measure {} sites but the region has {}",
                measured.len(),
                self.region.len()
            )));
        }
        let dangling = self.lattice.dangling_legs_of(&self.region);
        for leg in self.inputs.iter().chain(&self.outputs) {
            if !dangling.contains(leg) {
                return Err(MbqcError::UnknownLeg(*leg));
            }
        }
        Ok(())
    }

    pub fn describe(&self) -> Pattern {
        Pattern {
            builtin: None,
            patch: Some(PatchDef {
                rows: self.lattice.rows,
                cols: self.lattice.cols,
                region: Some(self.region.clone()),
            }),
            inputs: self
                .inputs
                .iter()
                .copied()
                .map(PatternLeg::from_leg)
                .collect(),
            outputs: self
                .outputs
                .iter()
                .copied()
                .map(PatternLeg::from_leg)
                .collect(),
            steps: self.steps.clone(),
        }
    }
}

fn builtin_pattern(name: &str) -> Result<ResolvedPattern, MbqcError> {
    match name {
        "wire" => {
            let g = wire_geometry(3)?;
            let steps = g
                .region
                .iter()
                .map(|&site| PatternStep {
                    site,
                    basis: MeasBasis::Hat,
                    mode: MeasureMode::Sample,
                })
                .collect();
            Ok(ResolvedPattern { steps, ..g })
        }
        "cz" => {
            let g = cz_geometry()?;
            let steps = g
                .region
                .iter()
                .map(|&site| PatternStep {
                    site,
                    basis: MeasBasis::Hat,
                    mode: MeasureMode::Sample,
                })
                .collect();
            Ok(ResolvedPattern { steps, ..g })
        }
        "extendedCz" => {
            let g = extended_cz_geometry(ExtendedVariant::default())?;
            let steps = g
                .hat_sites()
                .iter()
                .map(|&site| PatternStep {
                    site,
                    basis: MeasBasis::Hat,
                    mode: MeasureMode::Sample,
                })
                .chain([g.sites.e, g.sites.f].iter().map(|&site| PatternStep {
                    site,
                    basis: MeasBasis::Computational6,
                    mode: MeasureMode::Sample,
                }))
                .collect();
            let g = g.pattern;
            Ok(ResolvedPattern { steps, ..g })
        }
        other => Err(MbqcError::BadPattern(format!("unknown builtin {other:?}"))),
    }
}

/// Single wire along a 1 x `cols` row: input on the rightmost right leg,
/// output on the leftmost left leg. No steps; callers pick the bases.
pub fn wire_geometry(cols: usize) -> Result<ResolvedPattern, MbqcError> {
    let lattice = HexLattice::build_patch(1, cols)?;
    let region: Vec<SiteId> = (0..lattice.n_sites()).collect();
    let inputs = vec![LegId::new(lattice.site(0, cols - 1), LegRole::Right)];
    let outputs = vec![LegId::new(lattice.site(0, 0), LegRole::Left)];
    Ok(ResolvedPattern {
        lattice,
        region,
        inputs,
        outputs,
        steps: Vec::new(),
    })
}

/// Two wires joined by one vertical bond: wire `a` through the upper site,
/// wire `b` through the lower one. Wire order in operators is [a, b].
pub fn cz_geometry() -> Result<ResolvedPattern, MbqcError> {
    let lattice = HexLattice::build_patch(2, 1)?;
    let lower = lattice.site(0, 0);
    let upper = lattice.site(1, 0);
    let region = vec![lower, upper];
    let inputs = vec![
        LegId::new(upper, LegRole::Right),
        LegId::new(lower, LegRole::Right),
    ];
    let outputs = vec![
        LegId::new(upper, LegRole::Left),
        LegId::new(lower, LegRole::Left),
    ];
    Ok(ResolvedPattern {
        lattice,
        region,
        inputs,
        outputs,
        steps: Vec::new(),
    })
}

/// Site roles in the detached-chain controlled-Z layout: wires pass through
/// `a` (top row) and `b` (bottom row); `c` sits below `a`, `d` beside `c`
/// and above `b`; `e` and `f` end the chain and are detached.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ExtendedSites {
    pub a: SiteId,
    pub b: SiteId,
    pub c: SiteId,
    pub d: SiteId,
    pub e: SiteId,
    pub f: SiteId,
}

/// The four candidate wirings: the bottom wire sits one column left or right
/// of the top wire, and the two chain ends can swap roles.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ExtendedVariant {
    pub mirrored: bool,
    pub swap_chain_ends: bool,
}

impl ExtendedVariant {
    pub const ALL: [ExtendedVariant; 4] = [
        ExtendedVariant {
            mirrored: false,
            swap_chain_ends: false,
        },
        ExtendedVariant {
            mirrored: false,
            swap_chain_ends: true,
        },
        ExtendedVariant {
            mirrored: true,
            swap_chain_ends: false,
        },
        ExtendedVariant {
            mirrored: true,
            swap_chain_ends: true,
        },
    ];
}

#[derive(Clone, Debug)]
pub struct ExtendedGeometry {
    pub pattern: ResolvedPattern,
    pub sites: ExtendedSites,
    pub variant: ExtendedVariant,
}

impl ExtendedGeometry {
    /// Measurement order for the hat-basis sites.
    pub fn hat_sites(&self) -> [SiteId; 4] {
        [self.sites.a, self.sites.b, self.sites.c, self.sites.d]
    }
}

/// Builds the six-site detached-chain layout on a 3 x 6 patch. The top wire
/// runs through `a = (2, 3)`; `c = (1, 3)` hangs below it and `d` sits next
/// to `c` carrying the bottom wire site `b` underneath. The chain columns
/// mirror for the mirrored variant.
pub fn extended_cz_geometry(variant: ExtendedVariant) -> Result<ExtendedGeometry, MbqcError> {
    let lattice = HexLattice::build_patch(3, 6)?;
    let z = 3usize;
    let (dcol, ecol, fcol) = if variant.mirrored {
        (z + 1, z + 2, z - 1)
    } else {
        (z - 1, z - 2, z + 1)
    };
    let a = lattice.site(2, z);
    let c = lattice.site(1, z);
    let d = lattice.site(1, dcol);
    let b = lattice.site(0, dcol);
    let (e, f) = if variant.swap_chain_ends {
        (lattice.site(1, fcol), lattice.site(1, ecol))
    } else {
        (lattice.site(1, ecol), lattice.site(1, fcol))
    };
    let sites = ExtendedSites { a, b, c, d, e, f };
    let mut region = vec![a, b, c, d, e, f];
    region.sort();
    let inputs = vec![LegId::new(a, LegRole::Right), LegId::new(b, LegRole::Right)];
    let outputs = vec![LegId::new(a, LegRole::Left), LegId::new(b, LegRole::Left)];
    let pattern = ResolvedPattern {
        lattice,
        region,
        inputs,
        outputs,
        steps: Vec::new(),
    };
    Ok(ExtendedGeometry {
        pattern,
        sites,
        variant,
    })
}

/// Record of one pattern run.
#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct RunRecord {
    pub seed: u64,
    pub measurements: Vec<MeasurementRecord>,
    pub logical: LogicalReport,
}

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct LogicalReport {
    pub legs: Vec<PatternLeg>,
    /// Normalized amplitudes as [re, im] pairs, first leg most significant.
    pub amplitudes: Vec<[f64; 2]>,
    pub norm: f64,
}

/// Runs a resolved pattern: inputs close on |+>, steps execute in order, and
/// the outputs come back as the logical state. Sampling is driven by a
/// stream cipher seeded with `seed`, so runs are reproducible.
pub fn run_pattern(pattern: &ResolvedPattern, seed: u64) -> Result<RunRecord, MbqcError> {
    let mut open: Vec<LegId> = pattern.inputs.clone();
    open.extend(&pattern.outputs);
    let mut state = SimState::new(&pattern.lattice, &pattern.region, &open)?;
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let plus = [cr(s), cr(s)];
    let injections: Vec<(LegId, [crate::linalg::C64; 2])> =
        pattern.inputs.iter().map(|&leg| (leg, plus)).collect();
    state.inject_inputs(&injections)?;
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut measurements = Vec::with_capacity(pattern.steps.len());
    for step in &pattern.steps {
        measurements.push(state.measure_site(step.site, &step.basis, step.mode, &mut rng)?);
    }
    let logical = state.extract_logical(&pattern.outputs)?;
    Ok(RunRecord {
        seed,
        measurements,
        logical: LogicalReport {
            legs: logical
                .legs
                .iter()
                .copied()
                .map(PatternLeg::from_leg)
                .collect(),
            amplitudes: logical.amplitudes.iter().map(|z| [z.re, z.im]).collect(),
            norm: logical.norm,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mbqc::reference::vector_fidelity;

    #[test]
    fn extended_geometry_has_expected_shape() {
        for variant in ExtendedVariant::ALL {
            let g = extended_cz_geometry(variant).unwrap();
            let p = &g.pattern;
            assert_eq!(p.region.len(), 6);
            assert_eq!(p.lattice.internal_bonds(&p.region).len(), 5);
            assert_eq!(p.lattice.dangling_legs_of(&p.region).len(), 8);
        }
    }

    #[test]
    fn pattern_json_round_trips() {
        let text = r#"{
            "patch": {"rows": 1, "cols": 2},
            "inputs":  [{"site": 1, "role": "right"}],
            "outputs": [{"site": 0, "role": "left"}],
            "steps": [
                {"site": 0, "basis": "hat", "mode": "sample"},
                {"site": 1, "basis": {"rot": 0.25}, "mode": {"post": 2}}
            ]
        }"#;
        let pattern = Pattern::from_json(text).unwrap();
        let resolved = pattern.resolve().unwrap();
        assert_eq!(resolved.steps.len(), 2);
        let back = serde_json::to_string(&resolved.describe()).unwrap();
        let again = Pattern::from_json(&back).unwrap().resolve().unwrap();
        assert_eq!(again.region, resolved.region);
        assert_eq!(again.inputs, resolved.inputs);
    }

    #[test]
    fn duplicate_step_is_rejected() {
        let text = r#"{
            "patch": {"rows": 1, "cols": 1},
            "steps": [
                {"site": 0, "basis": "hat", "mode": "sample"},
                {"site": 0, "basis": "hat", "mode": "sample"}
            ]
        }"#;
        let err = Pattern::from_json(text).unwrap().resolve().unwrap_err();
        assert!(matches!(err, MbqcError::BadPattern(_)));
    }

    #[test]
    fn identity_wire_teleports_plus() {
        // Two hat measurements postselected on outcome 0 realize H·H = 1.
        let mut g = wire_geometry(2).unwrap();
        g.steps = g
            .region
            .iter()
            .map(|&site| PatternStep {
                site,
                basis: MeasBasis::Hat,
                mode: MeasureMode::Postselect(0),
            })
            .collect();
        let record = run_pattern(&g, 5).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let got: Vec<crate::linalg::C64> = record
            .logical
            .amplitudes
            .iter()
            .map(|p| crate::linalg::c(p[0], p[1]))
            .collect();
        assert!(vector_fidelity(&got, &[cr(s), cr(s)]) > 1.0 - 1e-12);
    }

    #[test]
    fn sampled_runs_are_reproducible() {
        let pattern = Pattern {
            builtin: Some("wire".into()),
            ..Pattern::default()
        };
        let resolved = pattern.resolve().unwrap();
        let a = run_pattern(&resolved, 42).unwrap();
        let b = run_pattern(&resolved, 42).unwrap();
        let oa: Vec<usize> = a.measurements.iter().map(|m| m.outcome).collect();
        let ob: Vec<usize> = b.measurements.iter().map(|m| m.outcome).collect();
        assert_eq!(oa, ob);
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
    }

    #[test]
    fn frame_tracks_wire_outcomes() {
        let mut frame = PauliFrame::new(1);
        frame.absorb(0, 3);
        assert_eq!((frame.x[0], frame.z[0]), (1, 1));
        frame.absorb(0, 1);
        assert_eq!((frame.x[0], frame.z[0]), (0, 1));
    }
}
