//! Example two-qubit states on `(x, y)`, basis index `2x + y`, `|↑⟩ = |0⟩`.

use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, Label, C64};
use crate::qstate::{BipartiteState, DensityMatrix};
use crate::linalg::SubsystemDims;

fn qubit_pair() -> SubsystemDims {
    SubsystemDims::pair((Label::X, 2), (Label::Y, 2)).expect("distinct labels")
}

fn check_probabilities(p: &[f64]) -> Result<()> {
    if p.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(Error::InvalidArgument("probabilities must be nonnegative".into()));
    }
    let s: f64 = p.iter().sum();
    if (s - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidArgument(format!("probabilities sum to {s}, not 1")));
    }
    Ok(())
}

/// `p1 |↑↑⟩ + p2 |↓↑⟩ + p3 |↑↓⟩ + p4 |↓↓⟩`, diagonal. Marginal on `x` is
/// `diag(p1 + p3, p2 + p4)`.
pub fn classical(p: [f64; 4]) -> Result<BipartiteState> {
    check_probabilities(&p)?;
    let m = ComplexMatrix::from_real_diag(&[p[0], p[2], p[1], p[3]]);
    BipartiteState::new(DensityMatrix::new(m, qubit_pair())?)
}

/// `½|↑↑⟩⟨↑↑| + ¼|↑↑⟩⟨↓↓| + ¼|↓↓⟩⟨↑↑| + ½|↓↓⟩⟨↓↓|`.
pub fn bell_mix() -> BipartiteState {
    let mut m = ComplexMatrix::zeros(4, 4);
    m[(0, 0)] = C64::new(0.5, 0.0);
    m[(0, 3)] = C64::new(0.25, 0.0);
    m[(3, 0)] = C64::new(0.25, 0.0);
    m[(3, 3)] = C64::new(0.5, 0.0);
    BipartiteState::new(DensityMatrix::new(m, qubit_pair()).expect("valid state")).expect("two factors")
}

/// `p1 |v⟩⟨v| + p2 |↓↓⟩⟨↓↓|` with `v = (|↑↑⟩ + |↓↓⟩)/√2`.
pub fn vw_mix(p1: f64, p2: f64) -> Result<BipartiteState> {
    check_probabilities(&[p1, p2])?;
    let mut m = ComplexMatrix::zeros(4, 4);
    for &(i, j) in &[(0, 0), (0, 3), (3, 0), (3, 3)] {
        m[(i, j)] = C64::new(0.5 * p1, 0.0);
    }
    m[(3, 3)] += C64::new(p2, 0.0);
    BipartiteState::new(DensityMatrix::new(m, qubit_pair())?)
}
