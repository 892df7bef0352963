//! Independent circuit oracle.
//!
//! Gate matrices and circuit evaluation are written without any reference to
//! the cluster-state machinery, so agreement between a simulated measurement
//! pattern and [`reference_apply`] checks the whole pipeline, not a shared
//! formula. Wire 0 is the most significant qubit.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::linalg::{c, cr, C64};
use crate::mbqc::MbqcError;

pub fn h_gate() -> DMatrix<C64> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    DMatrix::from_row_slice(2, 2, &[cr(s), cr(s), cr(s), cr(-s)])
}

pub fn x_gate() -> DMatrix<C64> {
    DMatrix::from_row_slice(2, 2, &[cr(0.0), cr(1.0), cr(1.0), cr(0.0)])
}

pub fn y_gate() -> DMatrix<C64> {
    DMatrix::from_row_slice(2, 2, &[cr(0.0), c(0.0, -1.0), c(0.0, 1.0), cr(0.0)])
}

pub fn z_gate() -> DMatrix<C64> {
    DMatrix::from_row_slice(2, 2, &[cr(1.0), cr(0.0), cr(0.0), cr(-1.0)])
}

/// Phase rotation `diag(1, exp(i theta))`, so `zrot(pi/2)|1> = i|1>`.
pub fn zrot_gate(theta: f64) -> DMatrix<C64> {
    DMatrix::from_row_slice(
        2,
        2,
        &[cr(1.0), cr(0.0), cr(0.0), c(theta.cos(), theta.sin())],
    )
}

pub fn cz_gate() -> DMatrix<C64> {
    let mut m: DMatrix<C64> = DMatrix::identity(4, 4);
    m[(3, 3)] = cr(-1.0);
    m
}

/// One gate application; `wires` are qubit indices, wire 0 most significant.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GateOp {
    pub gate: String,
    pub wires: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub angle: Option<f64>,
}

/// Total unitary of `circuit` on `n_wires` qubits; gates listed first are
/// applied first.
pub fn reference_apply(circuit: &[GateOp], n_wires: usize) -> Result<DMatrix<C64>, MbqcError> {
    let dim = 1usize << n_wires;
    let mut total: DMatrix<C64> = DMatrix::identity(dim, dim);
    for op in circuit {
        let wire = |i: usize| -> Result<usize, MbqcError> {
            let w = *op.wires.get(i).ok_or_else(|| {
                MbqcError::BadCircuit(format!("gate {:?} needs {} wires", op.gate, i + 1))
            })?;
            if w >= n_wires {
                return Err(MbqcError::BadCircuit(format!(
                    "wire {w} out of range for {n_wires} wires"
                )));
            }
            Ok(w)
        };
        let full = match op.gate.as_str() {
            "h" => embed_one(&h_gate(), wire(0)?, n_wires),
            "x" => embed_one(&x_gate(), wire(0)?, n_wires),
            "y" => embed_one(&y_gate(), wire(0)?, n_wires),
            "z" => embed_one(&z_gate(), wire(0)?, n_wires),
            "zrot" => {
                let theta = op
                    .angle
                    .ok_or_else(|| MbqcError::BadCircuit("zrot needs an angle".into()))?;
                embed_one(&zrot_gate(theta), wire(0)?, n_wires)
            }
            "cz" => {
                let (a, b) = (wire(0)?, wire(1)?);
                if a == b {
                    return Err(MbqcError::BadCircuit("cz needs two distinct wires".into()));
                }
                embed_cz(a, b, n_wires)
            }
            other => {
                return Err(MbqcError::BadCircuit(format!("unknown gate {other:?}")));
            }
        };
        total = full * total;
    }
    Ok(total)
}

fn embed_one(g: &DMatrix<C64>, wire: usize, n_wires: usize) -> DMatrix<C64> {
    let left: DMatrix<C64> = DMatrix::identity(1 << wire, 1 << wire);
    let right_dim = 1usize << (n_wires - 1 - wire);
    let right: DMatrix<C64> = DMatrix::identity(right_dim, right_dim);
    left.kronecker(g).kronecker(&right)
}

fn embed_cz(a: usize, b: usize, n_wires: usize) -> DMatrix<C64> {
    let dim = 1usize << n_wires;
    let mut m: DMatrix<C64> = DMatrix::identity(dim, dim);
    let (ba, bb) = (n_wires - 1 - a, n_wires - 1 - b);
    for idx in 0..dim {
        if idx >> ba & 1 == 1 && idx >> bb & 1 == 1 {
            m[(idx, idx)] = cr(-1.0);
        }
    }
    m
}

/// Overlap `|<a, b>| / (|a| |b|)` of two matrices under the Frobenius inner
/// product; 1 means equal up to a global phase.
pub fn compare_up_to_phase(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
    let na = a.norm();
    let nb = b.norm();
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    (a.adjoint() * b).trace().norm() / (na * nb)
}

/// Same comparison for state vectors.
pub fn vector_fidelity(a: &[C64], b: &[C64]) -> f64 {
    let na = crate::linalg::norm(a);
    let nb = crate::linalg::norm(b);
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    crate::linalg::dot(a, b).norm() / (na * nb)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn op(gate: &str, wires: &[usize]) -> GateOp {
        GateOp {
            gate: gate.into(),
            wires: wires.to_vec(),
            angle: None,
        }
    }

    #[test]
    fn zrot_phases_the_one_component() {
        let g = zrot_gate(std::f64::consts::FRAC_PI_2);
        assert!((g[(1, 1)] - c(0.0, 1.0)).norm() < 1e-15);
        assert!((g[(0, 0)] - cr(1.0)).norm() < 1e-15);
    }

    #[test]
    fn hzh_equals_x() {
        let circuit = [op("h", &[0]), op("z", &[0]), op("h", &[0])];
        let total = reference_apply(&circuit, 1).unwrap();
        assert!(compare_up_to_phase(&total, &x_gate()) > 1.0 - 1e-14);
    }

    #[test]
    fn cz_is_symmetric_in_wires() {
        let a = reference_apply(&[op("cz", &[0, 1])], 2).unwrap();
        let b = reference_apply(&[op("cz", &[1, 0])], 2).unwrap();
        assert_eq!(a, b);
        assert_eq!(a, cz_gate());
    }

    #[test]
    fn cz_embeds_on_outer_wires() {
        let m = reference_apply(&[op("cz", &[0, 2])], 3).unwrap();
        for idx in 0..8usize {
            let want = if idx & 0b101 == 0b101 { -1.0 } else { 1.0 };
            assert_eq!(m[(idx, idx)], cr(want));
        }
    }

    #[test]
    fn unknown_gate_is_rejected() {
        assert!(reference_apply(&[op("t", &[0])], 1).is_err());
    }
}
