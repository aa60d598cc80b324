//! Seeded random operators and generators for property checks.

use ndarray::{Array1, Array2};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::linalg::{c, C64};
use crate::elimination::CompositeModel;
use crate::spectral::Lindbladian;
use crate::superop::{commutator_superop, Operator};

pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    c(re, im) / 2f64.sqrt()
}

/// Ginibre matrix with unit-variance complex normal entries.
pub fn ginibre<R: Rng + ?Sized>(rng: &mut R, d: usize) -> Operator {
    let m = Array2::from_shape_simple_fn((d, d), || complex_normal(rng));
    Operator::new(m).expect("square")
}

pub fn hermitian<R: Rng + ?Sized>(rng: &mut R, d: usize) -> Operator {
    ginibre(rng, d).hermitian_part()
}

/// Full-rank density matrix `G G^dagger / tr`.
pub fn density<R: Rng + ?Sized>(rng: &mut R, d: usize) -> Operator {
    let g = ginibre(rng, d);
    let r = g.dot(&g.dag());
    r.scale(c(1.0, 0.0) / r.trace())
}

pub fn pure_state<R: Rng + ?Sized>(rng: &mut R, d: usize) -> Array1<C64> {
    let v: Array1<C64> = (0..d).map(|_| complex_normal(rng)).collect();
    let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.mapv(|z| z / n)
}

/// Random Hamiltonian plus `n_jumps` Ginibre jump operators with weights in (0.2, 1.2).
/// Generic draws have a unique, full-rank steady state.
pub fn lindbladian<R: Rng + ?Sized>(rng: &mut R, d: usize, n_jumps: usize) -> Lindbladian {
    let h = hermitian(rng, d);
    let jumps = (0..n_jumps)
        .map(|_| (0.2 + rng.random::<f64>(), ginibre(rng, d)))
        .collect();
    Lindbladian::new(h, jumps).expect("valid by construction")
}

/// Random fast Lindbladian, Hamiltonian slow dynamics and a random interaction,
/// decomposed by operator Schmidt decomposition.
pub fn composite_model<R: Rng + ?Sized>(rng: &mut R, da: usize, db: usize) -> CompositeModel {
    let la = lindbladian(rng, da, 2);
    let lb = commutator_superop(&hermitian(rng, db)).scale(c(0.0, -1.0));
    let h = hermitian(rng, da * db);
    CompositeModel::new(la, lb, h, None).expect("valid by construction")
}
