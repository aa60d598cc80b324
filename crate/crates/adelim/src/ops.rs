//! Standard operators. Qubit basis is ordered (e, g), so `sigma_z = |e><e| - |g><g|`
//! and `sigma_minus = |g><e|`.

use ndarray::Array2;

use crate::linalg::{c, ONE};
use crate::superop::Operator;

pub fn sigma_x() -> Operator {
    Operator::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]).unwrap()
}

pub fn sigma_y() -> Operator {
    let mut m = Array2::zeros((2, 2));
    m[[0, 1]] = c(0.0, -1.0);
    m[[1, 0]] = c(0.0, 1.0);
    Operator::new(m).unwrap()
}

pub fn sigma_z() -> Operator {
    Operator::from_real_rows(&[&[1.0, 0.0], &[0.0, -1.0]]).unwrap()
}

pub fn sigma_minus() -> Operator {
    Operator::from_real_rows(&[&[0.0, 0.0], &[1.0, 0.0]]).unwrap()
}

pub fn sigma_plus() -> Operator {
    sigma_minus().dag()
}

pub fn proj_e() -> Operator {
    Operator::unit(2, 0, 0)
}

pub fn proj_g() -> Operator {
    Operator::unit(2, 1, 1)
}

/// Pauli basis `{I, sx, sy, sz}`.
pub fn paulis() -> [Operator; 4] {
    [Operator::identity(2), sigma_x(), sigma_y(), sigma_z()]
}

/// Annihilation operator on Fock levels `0..=n_max`.
pub fn destroy(n_max: usize) -> Operator {
    let n = n_max + 1;
    let mut m = Array2::zeros((n, n));
    for k in 1..n {
        m[[k - 1, k]] = c((k as f64).sqrt(), 0.0);
    }
    Operator::new(m).unwrap()
}

/// Number operator on Fock levels `0..=n_max`.
pub fn number(n_max: usize) -> Operator {
    let n = n_max + 1;
    let mut m = Array2::zeros((n, n));
    for k in 0..n {
        m[[k, k]] = c(k as f64, 0.0);
    }
    Operator::new(m).unwrap()
}

/// Diagonal operator from real entries.
pub fn diag(entries: &[f64]) -> Operator {
    let n = entries.len();
    let mut m = Array2::zeros((n, n));
    for (k, &x) in entries.iter().enumerate() {
        m[[k, k]] = c(x, 0.0);
    }
    Operator::new(m).unwrap()
}

/// `|k><k|` on a `d`-level system.
pub fn level_projector(d: usize, k: usize) -> Operator {
    let mut m = Array2::zeros((d, d));
    m[[k, k]] = ONE;
    Operator::new(m).unwrap()
}
