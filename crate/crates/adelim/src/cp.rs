//! Complete positivity, Lindblad form and qubit-spectrum feasibility tests.

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};
use crate::linalg::{self, c, Mat, C64, ONE};
use crate::superop::{
    choi, commutator_superop, dissipator_superop, unvec, LinearMap, Operator, SuperOp,
};

pub const DEFAULT_TOL: f64 = 1e-10;

/// Outcome of a Choi-matrix positivity test.
#[derive(Clone, Debug, PartialEq)]
pub struct CpVerdict {
    pub is_cp: bool,
    pub min_choi_eig: f64,
    pub tol_used: f64,
    /// Spectral scale `max(1, ||Choi||)` multiplying the tolerance.
    pub scale: f64,
    /// Set when the Choi matrix is not Hermitian within tolerance.
    pub hermiticity_broken: bool,
}

pub fn is_completely_positive(s: &SuperOp, tol: f64) -> Result<CpVerdict> {
    verdict_from_choi(choi(s).mat(), tol)
}

/// Same test for a map between spaces of different dimension.
pub fn is_completely_positive_map(k: &LinearMap, tol: f64) -> Result<CpVerdict> {
    verdict_from_choi(k.choi().mat(), tol)
}

fn verdict_from_choi(ch: &Mat, tol: f64) -> Result<CpVerdict> {
    let defect = linalg::hermiticity_defect(&ch.view());
    let (psd, min, scale) = linalg::psd_check(&ch.view(), tol)?;
    let broken = defect > tol * linalg::max_abs(&ch.view()).max(1.0);
    Ok(CpVerdict {
        is_cp: psd && !broken,
        min_choi_eig: min,
        tol_used: tol,
        scale,
        hermiticity_broken: broken,
    })
}

/// Outcome of the projected-Choi Lindblad test, with the extracted generator.
#[derive(Clone, Debug)]
pub struct LindbladVerdict {
    pub is_lindblad: bool,
    pub min_projected_eig: f64,
    pub tol_used: f64,
    pub hamiltonian: Operator,
    /// Traceless jump operators, already scaled by the square root of their rate.
    pub jumps: Vec<Operator>,
}

impl LindbladVerdict {
    /// `-i[H, .] + sum_k D[L_k]` from the extracted data.
    pub fn reconstruct(&self) -> SuperOp {
        let mut s = commutator_superop(&self.hamiltonian).scale(c(0.0, -1.0));
        for l in &self.jumps {
            s = s.add(&dissipator_superop(l));
        }
        s
    }
}

/// A Hermiticity-preserving, trace-annihilating `S` is a Lindbladian iff
/// `P Choi(S) P >= 0` with `P = I (x) I - |I>><<I|/d`.
pub fn is_lindbladian(s: &SuperOp, tol: f64) -> Result<LindbladVerdict> {
    let d = s.dim();
    let scale = s.max_abs().max(1.0);
    let herm = s.hermiticity_preservation_defect();
    if herm > 1e-9 * scale {
        return Err(Error::NotHermitianPreserving { defect: herm });
    }
    let tr = s.trace_annihilation_defect();
    if tr > 1e-9 * scale {
        return Err(Error::NotTraceAnnihilating { defect: tr });
    }

    let n = d * d;
    let ch = choi(s).mat().clone();
    let mut p: Mat = linalg::eye(n);
    for i in 0..d {
        for j in 0..d {
            p[[i * d + i, j * d + j]] -= c(1.0 / d as f64, 0.0);
        }
    }
    let pcp = p.dot(&ch).dot(&p);
    let (w, v) = linalg::eigh(&pcp.view())?;
    let norm = w.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(1.0);
    let min = w.iter().cloned().fold(f64::INFINITY, f64::min);
    let is_lindblad = min >= -tol * norm;

    // Jump operators from the positive part of the projected Choi matrix.
    let mut jumps = Vec::new();
    for (k, &mu) in w.iter().enumerate() {
        if mu > tol * norm {
            let col: Array1<C64> = v.column(k).to_owned();
            jumps.push(Operator::wrap(unvec(&col, d)).scale(c(mu.sqrt(), 0.0)));
        }
    }

    // Remainder R = S - sum L . L^dagger has the form K. + .K^dagger; read off K.
    let mut r = s.mat().clone();
    for l in &jumps {
        let jump = linalg::kron(&l.conj().view(), &l.view());
        r = r - jump;
    }
    let mut m = Array2::<C64>::zeros((d, d));
    for i in 0..d {
        for j in 0..d {
            let col = r.column(i + d * j);
            for a in 0..d {
                m[[a, i]] += col[a + d * j];
            }
        }
    }
    let tr_k = linalg::trace(&m.view()).re / (2.0 * d as f64);
    let mut k = m;
    for a in 0..d {
        k[[a, a]] -= c(tr_k, 0.0);
    }
    let k = k / c(d as f64, 0.0);
    let h = (&k - &linalg::dagger(&k.view())) * c(0.0, 0.5);
    Ok(LindbladVerdict {
        is_lindblad,
        min_projected_eig: min,
        tol_used: tol,
        hamiltonian: Operator::wrap(h).hermitian_part(),
        jumps,
    })
}

/// Witness for a non-positive diagonal map.
#[derive(Clone, Debug)]
pub struct DiagonalWitness {
    pub psi: Array1<C64>,
    pub phi: Array1<C64>,
    /// `<phi| T(|psi><psi|) |phi>`, equal to the negative eigenvalue of the coefficient matrix.
    pub value: f64,
}

#[derive(Clone, Debug)]
pub struct DiagonalPositivity {
    /// Positive, equivalently completely positive.
    pub is_cp: bool,
    pub min_eig: f64,
    pub witness: Option<DiagonalWitness>,
}

/// `T(rho) = sum_mn p_mn Pi_m rho Pi_n`, an entrywise product.
pub fn apply_diagonal_map(p: &Mat, rho: &Operator) -> Operator {
    Operator::wrap(p * rho.mat())
}

/// Positivity of a diagonal map equals PSD of its coefficient matrix. When it
/// fails, returns `psi = conj(u_n)` for an eigenvector `u_n` with negative
/// eigenvalue and `phi` the all-ones vector.
pub fn diagonal_map_positivity(p: &Mat, tol: f64) -> Result<DiagonalPositivity> {
    let d = p.nrows();
    if p.ncols() != d {
        return Err(Error::DimensionMismatch("coefficient matrix must be square".into()));
    }
    let defect = linalg::hermiticity_defect(&p.view());
    if defect > 1e-10 * linalg::max_abs(&p.view()).max(1.0) {
        return Err(Error::NonHermitianInput { defect });
    }
    let (w, u) = linalg::eigh(&p.view())?;
    let norm = w.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(1.0);
    let min = w[0];
    let is_cp = min >= -tol * norm;
    let witness = if is_cp {
        None
    } else {
        let psi: Array1<C64> = u.column(0).mapv(|z| z.conj());
        let phi = Array1::from_elem(d, ONE);
        let out = apply_diagonal_map(p, &Operator::projector(&psi));
        let value = phi
            .iter()
            .enumerate()
            .map(|(a, pa)| {
                phi.iter()
                    .enumerate()
                    .map(|(b, pb)| pa.conj() * out.mat()[[a, b]] * pb)
                    .sum::<C64>()
            })
            .sum::<C64>()
            .re;
        Some(DiagonalWitness { psi, phi, value })
    };
    Ok(DiagonalPositivity {
        is_cp,
        min_eig: min,
        witness,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct WpgVerdict {
    pub feasible: bool,
    /// Real eigenvalues kept, moduli of complex pairs.
    pub s: [f64; 3],
}

pub const CONJ_TOL: f64 = 1e-9;

/// Kraus-map feasibility of a qubit spectrum `{1} ∪ {l1, l2, l3}`: the triple
/// `s` must satisfy `1 ± s1 ± s2 ± s3 >= 0` with an even number of minus signs.
pub fn wpg_spectrum_feasible(lambda: [C64; 4]) -> Result<WpgVerdict> {
    let unit = (0..4)
        .min_by(|&a, &b| (lambda[a] - ONE).norm().total_cmp(&(lambda[b] - ONE).norm()))
        .expect("non-empty");
    if (lambda[unit] - ONE).norm() > CONJ_TOL {
        return Err(Error::NoUnitEigenvalue);
    }
    let rest: Vec<C64> = (0..4).filter(|&k| k != unit).map(|k| lambda[k]).collect();
    let mut used = [false; 3];
    let mut s = [0.0; 3];
    for k in 0..3 {
        let z = rest[k];
        if z.im.abs() <= CONJ_TOL {
            s[k] = z.re;
            continue;
        }
        if !used[k] {
            let partner = (0..3).find(|&j| j != k && !used[j] && (rest[j] - z.conj()).norm() <= CONJ_TOL);
            match partner {
                Some(j) => {
                    used[k] = true;
                    used[j] = true;
                }
                None => return Err(Error::NotConjugationClosed),
            }
        }
        s[k] = z.norm();
    }
    Ok(WpgVerdict {
        feasible: tetrahedron_contains(s),
        s,
    })
}

pub fn tetrahedron_contains(s: [f64; 3]) -> bool {
    let slack = -1e-12;
    1.0 + s[0] + s[1] + s[2] >= slack
        && 1.0 - s[0] - s[1] + s[2] >= slack
        && 1.0 - s[0] + s[1] - s[2] >= slack
        && 1.0 + s[0] - s[1] - s[2] >= slack
}

/// Sorted form `s1 <= 1`, `s1 + s2 <= 1 + s3` (descending order), valid when all `s >= 0`.
pub fn tetrahedron_contains_sorted(mut s: [f64; 3]) -> bool {
    s.sort_by(|a, b| b.total_cmp(a));
    s[0] <= 1.0 + 1e-12 && s[0] + s[1] <= 1.0 + s[2] + 1e-12
}

/// `2 e^{-t/T2} <= 1 + e^{-t/T1}`.
pub fn cp_inequality_check(t1: f64, t2: f64, t: f64) -> bool {
    2.0 * (-t / t2).exp() <= 1.0 + (-t / t1).exp()
}

/// Small-time limit of [`cp_inequality_check`]: holds iff `2/T2 >= 1/T1`.
pub fn cp_inequality_small_time(t1: f64, t2: f64) -> bool {
    2.0 / t2 >= 1.0 / t1
}

/// When the small-time limit fails, the end `t*` of the violation window `(0, t*)`.
pub fn cp_violation_window(t1: f64, t2: f64) -> Option<f64> {
    if cp_inequality_small_time(t1, t2) {
        return None;
    }
    let f = |t: f64| 1.0 + (-t / t1).exp() - 2.0 * (-t / t2).exp();
    let mut hi = t1.min(t2) * 1e-3;
    while f(hi) < 0.0 {
        hi *= 2.0;
        if !hi.is_finite() {
            return None;
        }
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::ZERO;
    use crate::ops;
    use crate::random;
    use crate::spectral::propagator;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn cp_examples() {
        let v = is_completely_positive(&SuperOp::identity(2), DEFAULT_TOL).unwrap();
        assert!(v.is_cp);
        let tr = SuperOp::from_fn(2, |x| x.transpose());
        let v = is_completely_positive(&tr, DEFAULT_TOL).unwrap();
        assert!(!v.is_cp);
        assert!((v.min_choi_eig + 1.0).abs() < 1e-14);
        let p = propagator(&dissipator_superop(&ops::sigma_minus()), 1.0).unwrap();
        assert!(is_completely_positive(&p, DEFAULT_TOL).unwrap().is_cp);
    }

    #[test]
    fn lindblad_examples() {
        let w = 1.0;
        let s = commutator_superop(&ops::sigma_z())
            .scale(c(0.0, -w / 2.0))
            .add(&dissipator_superop(&ops::sigma_minus()).scale(c(0.3, 0.0)));
        let v = is_lindbladian(&s, DEFAULT_TOL).unwrap();
        assert!(v.is_lindblad);
        assert!(v.reconstruct().sub(&s).max_abs() < 1e-12);

        let (w0, g0) = (1.0, 0.25);
        let l0 = commutator_superop(&ops::sigma_z())
            .scale(c(0.0, -w0 / 2.0))
            .add(&dissipator_superop(&ops::sigma_x()).scale(c(g0, 0.0)))
            .sub(&dissipator_superop(&ops::sigma_y()).scale(c(g0, 0.0)));
        assert!(!is_lindbladian(&l0, DEFAULT_TOL).unwrap().is_lindblad);
    }

    #[test]
    fn lindblad_preconditions() {
        let tr = SuperOp::from_fn(2, |x| x.scale(c(0.0, 1.0)));
        assert!(matches!(
            is_lindbladian(&tr, DEFAULT_TOL),
            Err(Error::NotHermitianPreserving { .. })
        ));
        let id = SuperOp::identity(2);
        assert!(matches!(
            is_lindbladian(&id, DEFAULT_TOL),
            Err(Error::NotTraceAnnihilating { .. })
        ));
    }

    #[test]
    fn diagonal_map_examples() {
        let v = diagonal_map_positivity(&linalg::eye(3), DEFAULT_TOL).unwrap();
        assert!(v.is_cp && v.witness.is_none());

        let p = ndarray::array![[ZERO, ONE], [ONE, ZERO]];
        let v = diagonal_map_positivity(&p, DEFAULT_TOL).unwrap();
        assert!(!v.is_cp);
        assert!((v.witness.unwrap().value + 1.0).abs() < 1e-12);

        // Zero diagonal and a non-zero off-diagonal element can never be PSD.
        let mut lam = Array2::<C64>::zeros((3, 3));
        lam[[0, 1]] = c(-0.1, 0.3);
        lam[[1, 0]] = lam[[0, 1]].conj();
        assert!(!diagonal_map_positivity(&lam, DEFAULT_TOL).unwrap().is_cp);

        let bad = ndarray::array![[ZERO, ONE], [ZERO, ZERO]];
        assert!(matches!(
            diagonal_map_positivity(&bad, DEFAULT_TOL),
            Err(Error::NonHermitianInput { .. })
        ));
    }

    #[test]
    fn wpg_examples() {
        assert!(wpg_spectrum_feasible([ONE; 4]).unwrap().feasible);
        let w = 0.7f64;
        let v = wpg_spectrum_feasible([ONE, C64::from_polar(1.0, w), C64::from_polar(1.0, -w), ONE])
            .unwrap();
        assert!(v.feasible);
        assert!(!tetrahedron_contains([0.9, 0.9, 0.7]));
        assert!(matches!(
            wpg_spectrum_feasible([c(0.5, 0.0); 4]),
            Err(Error::NoUnitEigenvalue)
        ));
        assert!(matches!(
            wpg_spectrum_feasible([ONE, c(0.5, 0.1), c(0.5, 0.2), c(0.3, 0.0)]),
            Err(Error::NotConjugationClosed)
        ));
    }

    #[test]
    fn cp_inequality_examples() {
        for t in [1e-3, 0.1, 1.0, 10.0] {
            assert!(cp_inequality_check(2.0, 2.0, t));
        }
        // 2/T2 < 1/T1 and small t: violated.
        assert!(!cp_inequality_check(1.0, 3.0, 1e-3));
        assert!(cp_inequality_check(1.0, 1.5, 1e-3));
        assert!(cp_inequality_check(1.0, 2.0, 0.01));
        let ts = cp_violation_window(1.0, 3.0).unwrap();
        assert!(ts > 0.0);
        assert!(!cp_inequality_check(1.0, 3.0, 0.5 * ts));
        assert!(cp_inequality_check(1.0, 3.0, 1.5 * ts));
        assert!(cp_violation_window(1.0, 2.0).is_none());
    }

    #[test]
    fn random_lindbladians_pass_and_reconstruct() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let d = 2 + (rand::Rng::random::<u32>(&mut rng) % 2) as usize;
            let nj = 1 + (rand::Rng::random::<u32>(&mut rng) % 3) as usize;
            let l = random::lindbladian(&mut rng, d, nj);
            let s = l.superop();
            let v = is_lindbladian(&s, DEFAULT_TOL).unwrap();
            assert!(v.is_lindblad);
            let rec = v.reconstruct();
            assert!(rec.sub(&s).max_abs() <= 1e-8 * s.max_abs());
            for t in [0.1, 1.0, 10.0] {
                let p = propagator(&s, t).unwrap();
                assert!(is_completely_positive(&p, DEFAULT_TOL).unwrap().is_cp);
            }
        }
    }

    proptest! {
        #[test]
        fn wpg_permutation_invariant(
            a in -1.0f64..1.0, b in -1.0f64..1.0, r in 0.0f64..1.0, th in 0.0f64..3.0, which in 0usize..3
        ) {
            let z = C64::from_polar(r, th);
            let cases = [
                [ONE, c(a, 0.0), z, z.conj()],
                [ONE, z, c(a, 0.0), z.conj()],
                [ONE, z, z.conj(), c(a, 0.0)],
            ];
            let base = wpg_spectrum_feasible(cases[0]).unwrap().feasible;
            prop_assert_eq!(wpg_spectrum_feasible(cases[which]).unwrap().feasible, base);
            let reals = [[ONE, c(a, 0.0), c(b, 0.0), c(r, 0.0)], [c(r, 0.0), c(b, 0.0), ONE, c(a, 0.0)]];
            prop_assert_eq!(
                wpg_spectrum_feasible(reals[0]).unwrap().feasible,
                wpg_spectrum_feasible(reals[1]).unwrap().feasible
            );
        }

        #[test]
        fn sorted_form_agrees_for_positive_s(s1 in 0.0f64..1.2, s2 in 0.0f64..1.2, s3 in 0.0f64..1.2) {
            let s = [s1, s2, s3];
            prop_assert_eq!(tetrahedron_contains(s), tetrahedron_contains_sorted(s));
        }

        #[test]
        fn diagonal_witness_certifies(v in proptest::collection::vec(-1.0f64..1.0, 12)) {
            let d = 3;
            let mut p = Array2::<C64>::zeros((d, d));
            let mut k = 0;
            for i in 0..d {
                p[[i, i]] = c(v[k], 0.0);
                k += 1;
                for j in i + 1..d {
                    p[[i, j]] = c(v[k], v[k + 1]);
                    p[[j, i]] = p[[i, j]].conj();
                    k += 2;
                }
            }
            let res = diagonal_map_positivity(&p, DEFAULT_TOL).unwrap();
            if let Some(w) = res.witness {
                prop_assert!(w.value < -DEFAULT_TOL);
                prop_assert!((w.value - res.min_eig).abs() < 1e-10);
            }
        }
    }
}
