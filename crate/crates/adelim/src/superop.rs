//! Operators, column-stacking vectorization, supermatrices and Choi matrices.
//!
//! `|A>> = sum_ij A_ij |j> (x) |i>`, i.e. entry `(i, j)` of `A` lands at
//! index `i + d*j`. With this convention `|ABC>> = (C^T (x) A) |B>>`.
//! Composite spaces are ordered fast factor (A) first, slow factor (B) second.

use ndarray::{Array1, Array2, ArrayView2};

use crate::error::{Error, Result};
use crate::linalg::{self, c, Mat, C64, ONE, ZERO};

/// Dense square operator on a finite Hilbert space.
#[derive(Clone, Debug, PartialEq)]
pub struct Operator {
    mat: Mat,
}

impl Operator {
    pub fn new(mat: Mat) -> Result<Self> {
        if mat.nrows() != mat.ncols() || mat.nrows() == 0 {
            return Err(Error::DimensionMismatch(format!(
                "operator must be square and non-empty, got {}x{}",
                mat.nrows(),
                mat.ncols()
            )));
        }
        Ok(Self { mat })
    }

    /// Internal constructor for matrices known to be square.
    pub(crate) fn wrap(mat: Mat) -> Self {
        debug_assert_eq!(mat.nrows(), mat.ncols());
        Self { mat }
    }

    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self> {
        let n = rows.len();
        let mut m = Array2::zeros((n, n));
        for (i, r) in rows.iter().enumerate() {
            if r.len() != n {
                return Err(Error::DimensionMismatch("ragged rows".into()));
            }
            for (j, &x) in r.iter().enumerate() {
                m[[i, j]] = c(x, 0.0);
            }
        }
        Self::new(m)
    }

    pub fn zeros(dim: usize) -> Self {
        Self::wrap(Array2::zeros((dim, dim)))
    }

    pub fn identity(dim: usize) -> Self {
        Self::wrap(linalg::eye(dim))
    }

    /// `|i><j|`.
    pub fn unit(dim: usize, i: usize, j: usize) -> Self {
        let mut m = Array2::zeros((dim, dim));
        m[[i, j]] = ONE;
        Self::wrap(m)
    }

    /// `|psi><psi|` for a (not necessarily normalized) vector.
    pub fn projector(psi: &Array1<C64>) -> Self {
        let n = psi.len();
        let mut m = Array2::zeros((n, n));
        for i in 0..n {
            for j in 0..n {
                m[[i, j]] = psi[i] * psi[j].conj();
            }
        }
        Self::wrap(m)
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn mat(&self) -> &Mat {
        &self.mat
    }

    pub fn view(&self) -> ArrayView2<'_, C64> {
        self.mat.view()
    }

    pub fn into_mat(self) -> Mat {
        self.mat
    }

    pub fn dag(&self) -> Self {
        Self::wrap(linalg::dagger(&self.mat.view()))
    }

    pub fn transpose(&self) -> Self {
        Self::wrap(self.mat.t().to_owned())
    }

    pub fn conj(&self) -> Self {
        Self::wrap(self.mat.mapv(|z| z.conj()))
    }

    pub fn trace(&self) -> C64 {
        linalg::trace(&self.mat.view())
    }

    pub fn dot(&self, other: &Operator) -> Self {
        Self::wrap(self.mat.dot(&other.mat))
    }

    pub fn kron(&self, other: &Operator) -> Self {
        Self::wrap(linalg::kron(&self.mat.view(), &other.mat.view()))
    }

    pub fn scale(&self, z: C64) -> Self {
        Self::wrap(&self.mat * z)
    }

    pub fn add(&self, other: &Operator) -> Self {
        Self::wrap(&self.mat + &other.mat)
    }

    pub fn sub(&self, other: &Operator) -> Self {
        Self::wrap(&self.mat - &other.mat)
    }

    pub fn comm(&self, other: &Operator) -> Self {
        Self::wrap(self.mat.dot(&other.mat) - other.mat.dot(&self.mat))
    }

    pub fn hermitian_part(&self) -> Self {
        Self::wrap(linalg::hermitize(&self.mat.view()))
    }

    pub fn hermiticity_defect(&self) -> f64 {
        linalg::hermiticity_defect(&self.mat.view())
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_defect() <= tol
    }

    pub fn min_eig_hermitian(&self) -> Result<f64> {
        linalg::min_eig_hermitian(&self.mat.view())
    }

    /// PSD with the scale-aware tolerance used throughout the crate.
    pub fn is_psd(&self, tol: f64) -> Result<bool> {
        Ok(linalg::psd_check(&self.mat.view(), tol)?.0)
    }

    pub fn max_abs(&self) -> f64 {
        linalg::max_abs(&self.mat.view())
    }

    pub fn dist(&self, other: &Operator) -> f64 {
        linalg::max_abs(&(&self.mat - &other.mat).view())
    }
}

/// Vectorized operator, column stacked.
#[derive(Clone, Debug, PartialEq)]
pub struct VecOp {
    dim: usize,
    v: Array1<C64>,
}

impl VecOp {
    pub fn new(v: Array1<C64>) -> Result<Self> {
        let dim = (v.len() as f64).sqrt().round() as usize;
        if dim * dim != v.len() || dim == 0 {
            return Err(Error::DimensionMismatch(format!(
                "vector length {} is not a perfect square",
                v.len()
            )));
        }
        Ok(Self { dim, v })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_array(&self) -> &Array1<C64> {
        &self.v
    }

    pub fn into_array(self) -> Array1<C64> {
        self.v
    }
}

pub fn vectorize(a: &Operator) -> VecOp {
    let d = a.dim();
    VecOp {
        dim: d,
        v: vec_of(&a.mat.view()),
    }
}

pub fn devectorize(v: &VecOp) -> Operator {
    Operator::wrap(unvec(&v.v, v.dim))
}

/// `<<A|B>> = tr(A^dagger B)`.
pub fn inner(a: &VecOp, b: &VecOp) -> C64 {
    linalg::vdot(&a.v, &b.v)
}

/// Column-stacking of a (possibly non-square) matrix view.
pub(crate) fn vec_of(a: &ArrayView2<C64>) -> Array1<C64> {
    a.t().iter().cloned().collect()
}

pub(crate) fn unvec(v: &Array1<C64>, d: usize) -> Mat {
    let mut m = Array2::zeros((d, d));
    for j in 0..d {
        for i in 0..d {
            m[[i, j]] = v[i + d * j];
        }
    }
    m
}

/// Dense supermatrix acting on vectorized operators of side `dim`.
#[derive(Clone, Debug, PartialEq)]
pub struct SuperOp {
    dim: usize,
    mat: Mat,
}

impl SuperOp {
    pub fn new(dim: usize, mat: Mat) -> Result<Self> {
        if mat.nrows() != dim * dim || mat.ncols() != dim * dim {
            return Err(Error::DimensionMismatch(format!(
                "supermatrix for dim {} must be {}x{}, got {}x{}",
                dim,
                dim * dim,
                dim * dim,
                mat.nrows(),
                mat.ncols()
            )));
        }
        Ok(Self { dim, mat })
    }

    pub(crate) fn wrap(dim: usize, mat: Mat) -> Self {
        debug_assert_eq!(mat.nrows(), dim * dim);
        Self { dim, mat }
    }

    pub fn zeros(dim: usize) -> Self {
        Self::wrap(dim, Array2::zeros((dim * dim, dim * dim)))
    }

    pub fn identity(dim: usize) -> Self {
        Self::wrap(dim, linalg::eye(dim * dim))
    }

    /// Supermatrix of an arbitrary linear map given as a closure on operators.
    pub fn from_fn(dim: usize, f: impl Fn(&Operator) -> Operator) -> Self {
        let n = dim * dim;
        let mut m = Array2::zeros((n, n));
        for j in 0..dim {
            for i in 0..dim {
                let out = f(&Operator::unit(dim, i, j));
                m.column_mut(i + dim * j).assign(&vec_of(&out.view()));
            }
        }
        Self::wrap(dim, m)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn mat(&self) -> &Mat {
        &self.mat
    }

    pub fn into_mat(self) -> Mat {
        self.mat
    }

    pub fn apply(&self, v: &VecOp) -> Result<VecOp> {
        if v.dim != self.dim {
            return Err(Error::DimensionMismatch(format!(
                "superop dim {} applied to operator dim {}",
                self.dim, v.dim
            )));
        }
        Ok(VecOp {
            dim: self.dim,
            v: self.mat.dot(&v.v),
        })
    }

    pub fn apply_op(&self, a: &Operator) -> Result<Operator> {
        Ok(devectorize(&self.apply(&vectorize(a))?))
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &SuperOp) -> Self {
        Self::wrap(self.dim, self.mat.dot(&other.mat))
    }

    pub fn add(&self, other: &SuperOp) -> Self {
        Self::wrap(self.dim, &self.mat + &other.mat)
    }

    pub fn sub(&self, other: &SuperOp) -> Self {
        Self::wrap(self.dim, &self.mat - &other.mat)
    }

    pub fn scale(&self, z: C64) -> Self {
        Self::wrap(self.dim, &self.mat * z)
    }

    pub fn max_abs(&self) -> f64 {
        linalg::max_abs(&self.mat.view())
    }

    pub fn spectral_norm(&self) -> Result<f64> {
        linalg::spectral_norm(&self.mat.view())
    }

    /// Largest `|<<I| S |E_ij>>|`, zero for trace-annihilating maps.
    pub fn trace_annihilation_defect(&self) -> f64 {
        let d = self.dim;
        let mut m: f64 = 0.0;
        for col in 0..d * d {
            let t: C64 = (0..d).map(|i| self.mat[[i + d * i, col]]).sum();
            m = m.max(t.norm());
        }
        m
    }

    /// Largest deviation from `S(X^dagger) = S(X)^dagger` over matrix units.
    pub fn hermiticity_preservation_defect(&self) -> f64 {
        let d = self.dim;
        let mut m: f64 = 0.0;
        for j in 0..d {
            for i in 0..d {
                let a = unvec(&self.mat.column(i + d * j).to_owned(), d);
                let b = unvec(&self.mat.column(j + d * i).to_owned(), d);
                let diff = &a - &linalg::dagger(&b.view());
                m = m.max(linalg::max_abs(&diff.view()));
            }
        }
        m
    }
}

/// Rectangular linear map between operator spaces of different sides.
/// Columns are indexed by input matrix units, rows by vectorized output.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearMap {
    dim_in: usize,
    dim_out: usize,
    mat: Mat,
}

impl LinearMap {
    pub fn new(dim_in: usize, dim_out: usize, mat: Mat) -> Result<Self> {
        if mat.nrows() != dim_out * dim_out || mat.ncols() != dim_in * dim_in {
            return Err(Error::DimensionMismatch(format!(
                "map {}->{} needs a {}x{} matrix, got {}x{}",
                dim_in,
                dim_out,
                dim_out * dim_out,
                dim_in * dim_in,
                mat.nrows(),
                mat.ncols()
            )));
        }
        Ok(Self {
            dim_in,
            dim_out,
            mat,
        })
    }

    pub(crate) fn wrap(dim_in: usize, dim_out: usize, mat: Mat) -> Self {
        Self {
            dim_in,
            dim_out,
            mat,
        }
    }

    pub fn zeros(dim_in: usize, dim_out: usize) -> Self {
        Self::wrap(
            dim_in,
            dim_out,
            Array2::zeros((dim_out * dim_out, dim_in * dim_in)),
        )
    }

    /// Matrix of `f` sampled on the matrix units of the input space.
    pub fn from_fn(dim_in: usize, dim_out: usize, f: impl Fn(&Operator) -> Operator) -> Self {
        let mut m = Array2::zeros((dim_out * dim_out, dim_in * dim_in));
        for j in 0..dim_in {
            for i in 0..dim_in {
                let out = f(&Operator::unit(dim_in, i, j));
                assert_eq!(out.dim(), dim_out, "map output dimension");
                m.column_mut(i + dim_in * j).assign(&vec_of(&out.view()));
            }
        }
        Self::wrap(dim_in, dim_out, m)
    }

    pub fn dim_in(&self) -> usize {
        self.dim_in
    }

    pub fn dim_out(&self) -> usize {
        self.dim_out
    }

    pub fn mat(&self) -> &Mat {
        &self.mat
    }

    pub fn apply_op(&self, a: &Operator) -> Result<Operator> {
        if a.dim() != self.dim_in {
            return Err(Error::DimensionMismatch("map input dimension".into()));
        }
        let v = self.mat.dot(&vec_of(&a.view()));
        Ok(Operator::wrap(unvec(&v, self.dim_out)))
    }

    /// `self ∘ s` for a superoperator on the input space.
    pub fn compose_right(&self, s: &SuperOp) -> Self {
        Self::wrap(self.dim_in, self.dim_out, self.mat.dot(s.mat()))
    }

    pub fn add(&self, other: &LinearMap) -> Self {
        Self::wrap(self.dim_in, self.dim_out, &self.mat + &other.mat)
    }

    pub fn scale(&self, z: C64) -> Self {
        Self::wrap(self.dim_in, self.dim_out, &self.mat * z)
    }

    pub fn choi(&self) -> ChoiMatrix {
        ChoiMatrix {
            dim_in: self.dim_in,
            dim_out: self.dim_out,
            mat: choi_of(self.dim_in, self.dim_out, &self.mat),
        }
    }
}

impl From<SuperOp> for LinearMap {
    fn from(s: SuperOp) -> Self {
        LinearMap::wrap(s.dim, s.dim, s.mat)
    }
}

/// `sum_ij |i><j| (x) S(|i><j|)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ChoiMatrix {
    dim_in: usize,
    dim_out: usize,
    mat: Mat,
}

impl ChoiMatrix {
    pub fn dim_in(&self) -> usize {
        self.dim_in
    }

    pub fn dim_out(&self) -> usize {
        self.dim_out
    }

    pub fn mat(&self) -> &Mat {
        &self.mat
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        linalg::hermiticity_defect(&self.mat.view()) <= tol
    }

    pub fn min_eig(&self) -> Result<f64> {
        linalg::min_eig_hermitian(&self.mat.view())
    }
}

fn choi_of(dim_in: usize, dim_out: usize, m: &Mat) -> Mat {
    let n = dim_in * dim_out;
    let mut out = Array2::zeros((n, n));
    for j in 0..dim_in {
        for i in 0..dim_in {
            let col = m.column(i + dim_in * j);
            for b in 0..dim_out {
                for a in 0..dim_out {
                    out[[i * dim_out + a, j * dim_out + b]] = col[a + dim_out * b];
                }
            }
        }
    }
    out
}

pub fn choi(s: &SuperOp) -> ChoiMatrix {
    ChoiMatrix {
        dim_in: s.dim,
        dim_out: s.dim,
        mat: choi_of(s.dim, s.dim, &s.mat),
    }
}

fn check_same(a: &Operator, b: &Operator) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch(format!(
            "operators of dims {} and {}",
            a.dim(),
            b.dim()
        )));
    }
    Ok(())
}

/// `C^T (x) A`, the supermatrix of `B -> A B C`.
pub fn sandwich_supermatrix(a: &Operator, cop: &Operator) -> Result<SuperOp> {
    check_same(a, cop)?;
    Ok(SuperOp::wrap(
        a.dim(),
        linalg::kron(&cop.mat.t(), &a.mat.view()),
    ))
}

/// `H^x = H . - . H`.
pub fn commutator_superop(h: &Operator) -> SuperOp {
    let id = Operator::identity(h.dim());
    let left = sandwich_supermatrix(h, &id).expect("same dim");
    let right = sandwich_supermatrix(&id, h).expect("same dim");
    left.sub(&right)
}

/// `D[L] = L . L^dagger - (L^dagger L . + . L^dagger L)/2`.
pub fn dissipator_superop(l: &Operator) -> SuperOp {
    let id = Operator::identity(l.dim());
    let ldl = l.dag().dot(l);
    let jump = sandwich_supermatrix(l, &l.dag()).expect("same dim");
    let left = sandwich_supermatrix(&ldl, &id).expect("same dim");
    let right = sandwich_supermatrix(&id, &ldl).expect("same dim");
    jump.sub(&left.add(&right).scale(c(0.5, 0.0)))
}

/// Which tensor factor to trace out.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Factor {
    A,
    B,
}

/// Partial trace of an operator on `H_A (x) H_B`.
pub fn partial_trace(rho: &Operator, dim_a: usize, dim_b: usize, over: Factor) -> Result<Operator> {
    if rho.dim() != dim_a * dim_b {
        return Err(Error::DimensionMismatch(format!(
            "operator dim {} does not factor as {}x{}",
            rho.dim(),
            dim_a,
            dim_b
        )));
    }
    Ok(Operator::wrap(ptrace_mat(&rho.view(), dim_a, dim_b, over)))
}

pub(crate) fn ptrace_mat(x: &ArrayView2<C64>, da: usize, db: usize, over: Factor) -> Mat {
    match over {
        Factor::A => {
            let mut out = Array2::zeros((db, db));
            for a in 0..da {
                for p in 0..db {
                    for q in 0..db {
                        out[[p, q]] += x[[a * db + p, a * db + q]];
                    }
                }
            }
            out
        }
        Factor::B => {
            let mut out = Array2::zeros((da, da));
            for a in 0..da {
                for ap in 0..da {
                    let mut s = ZERO;
                    for b in 0..db {
                        s += x[[a * db + b, ap * db + b]];
                    }
                    out[[a, ap]] = s;
                }
            }
            out
        }
    }
}

/// The partial trace as a linear map from `H_A (x) H_B` operators to the kept factor.
pub fn partial_trace_superop(dim_a: usize, dim_b: usize, over: Factor) -> LinearMap {
    let n = dim_a * dim_b;
    let kept = match over {
        Factor::A => dim_b,
        Factor::B => dim_a,
    };
    let mut m = Array2::zeros((kept * kept, n * n));
    for j in 0..n {
        for i in 0..n {
            let (ai, bi) = (i / dim_b, i % dim_b);
            let (aj, bj) = (j / dim_b, j % dim_b);
            let col = i + n * j;
            match over {
                Factor::A if ai == aj => m[[bi + dim_b * bj, col]] = ONE,
                Factor::B if bi == bj => m[[ai + dim_a * aj, col]] = ONE,
                _ => {}
            }
        }
    }
    LinearMap::wrap(n, kept, m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ops;
    use proptest::prelude::*;

    fn rand_op(d: usize, seed: &[f64]) -> Operator {
        let mut m = Array2::zeros((d, d));
        for i in 0..d {
            for j in 0..d {
                let k = 2 * (i * d + j);
                m[[i, j]] = c(seed[k % seed.len()], seed[(k + 1) % seed.len()]);
            }
        }
        Operator::wrap(m)
    }

    #[test]
    fn identity_round_trip_and_inner() {
        let id = Operator::identity(2);
        let v = vectorize(&id);
        assert_eq!(devectorize(&v), id);
        assert_eq!(inner(&v, &v), c(2.0, 0.0));
        let sx = vectorize(&ops::sigma_x());
        let sy = vectorize(&ops::sigma_y());
        assert!(inner(&sx, &sy).norm() < 1e-15);
    }

    #[test]
    fn devectorize_rejects_non_square_length() {
        assert!(VecOp::new(Array1::zeros(5)).is_err());
    }

    #[test]
    fn sandwich_examples() {
        let id = Operator::identity(2);
        assert_eq!(sandwich_supermatrix(&id, &id).unwrap(), SuperOp::identity(2));
        let gg = ops::proj_g();
        let out = sandwich_supermatrix(&ops::sigma_x(), &id)
            .unwrap()
            .apply_op(&gg)
            .unwrap();
        assert!(out.dist(&ops::sigma_x().dot(&gg)) < 1e-15);
        let out = sandwich_supermatrix(&ops::sigma_minus(), &ops::sigma_plus())
            .unwrap()
            .apply_op(&ops::proj_e())
            .unwrap();
        assert!(out.dist(&gg) < 1e-15);
    }

    #[test]
    fn commutator_and_dissipator_examples() {
        assert!(commutator_superop(&Operator::identity(3)).max_abs() < 1e-15);
        let d = dissipator_superop(&ops::sigma_minus());
        let out = d.apply_op(&ops::proj_e()).unwrap();
        assert!(out.dist(&ops::proj_g().sub(&ops::proj_e())) < 1e-15);
    }

    #[test]
    fn partial_trace_examples() {
        let ra = Operator::from_real_rows(&[&[0.25, 0.1], &[0.1, 0.75]]).unwrap();
        let rb = ops::proj_e();
        let out = partial_trace(&ra.kron(&rb), 2, 2, Factor::A).unwrap();
        assert!(out.dist(&rb) < 1e-15);
        // (|00> + |11>)/sqrt2
        let mut psi = Array1::zeros(4);
        psi[0] = c(0.5f64.sqrt(), 0.0);
        psi[3] = c(0.5f64.sqrt(), 0.0);
        let out = partial_trace(&Operator::projector(&psi), 2, 2, Factor::A).unwrap();
        assert!(out.dist(&Operator::identity(2).scale(c(0.5, 0.0))) < 1e-15);
        let out = partial_trace(
            &Operator::identity(2).kron(&Operator::identity(3)),
            2,
            3,
            Factor::B,
        )
        .unwrap();
        assert!(out.dist(&Operator::identity(2).scale(c(3.0, 0.0))) < 1e-15);
        assert!(partial_trace(&Operator::identity(5), 2, 3, Factor::A).is_err());
    }

    #[test]
    fn partial_trace_superop_matches_direct() {
        let x = rand_op(6, &[0.3, -0.2, 0.9, 0.4, -0.7, 0.1, 0.5]);
        for over in [Factor::A, Factor::B] {
            let direct = partial_trace(&x, 2, 3, over).unwrap();
            let via = partial_trace_superop(2, 3, over).apply_op(&x).unwrap();
            assert!(direct.dist(&via) < 1e-14);
        }
    }

    #[test]
    fn choi_examples() {
        let ch = choi(&SuperOp::identity(2));
        let w = linalg::eigvalsh(&ch.mat().view()).unwrap();
        assert!((w[3] - 2.0).abs() < 1e-14 && w[0].abs() < 1e-14 && w[2].abs() < 1e-14);

        let dep = SuperOp::from_fn(2, |x| Operator::identity(2).scale(x.trace() * 0.5));
        let ch = choi(&dep);
        let expect = linalg::eye(4) * c(0.5, 0.0);
        assert!(linalg::max_abs(&(ch.mat() - &expect).view()) < 1e-15);

        let tr = SuperOp::from_fn(2, |x| x.transpose());
        let ch = choi(&tr);
        assert!((ch.min_eig().unwrap() + 1.0).abs() < 1e-14);
    }

    fn arb_op(d: usize) -> impl Strategy<Value = Operator> {
        proptest::collection::vec(-1.0f64..1.0, 2 * d * d).prop_map(move |v| {
            let mut m = Array2::zeros((d, d));
            for i in 0..d {
                for j in 0..d {
                    m[[i, j]] = c(v[2 * (i * d + j)], v[2 * (i * d + j) + 1]);
                }
            }
            Operator::wrap(m)
        })
    }

    proptest! {
        #[test]
        fn round_trip_is_exact(a in (1usize..5).prop_flat_map(arb_op)) {
            prop_assert_eq!(devectorize(&vectorize(&a)), a);
        }

        #[test]
        fn sandwich_identity(
            (a, b, cc) in (1usize..5).prop_flat_map(|d| (arb_op(d), arb_op(d), arb_op(d)))
        ) {
            let s = sandwich_supermatrix(&a, &cc).unwrap();
            let lhs = s.apply_op(&b).unwrap();
            let rhs = a.dot(&b).dot(&cc);
            let scale = rhs.max_abs().max(1.0);
            prop_assert!(lhs.dist(&rhs) <= 1e-12 * scale);
        }

        #[test]
        fn inner_is_trace_form((a, b) in (1usize..5).prop_flat_map(|d| (arb_op(d), arb_op(d)))) {
            let lhs = inner(&vectorize(&a), &vectorize(&b));
            let rhs = a.dag().dot(&b).trace();
            prop_assert!((lhs - rhs).norm() < 1e-12);
        }

        #[test]
        fn dissipator_is_traceless((l, r) in (1usize..5).prop_flat_map(|d| (arb_op(d), arb_op(d)))) {
            let out = dissipator_superop(&l).apply_op(&r).unwrap();
            prop_assert!(out.trace().norm() < 1e-12);
        }

        #[test]
        fn choi_hermitian_for_lindblad_form(
            (h, l) in (1usize..4).prop_flat_map(|d| (arb_op(d), arb_op(d)))
        ) {
            let h = h.hermitian_part();
            let s = commutator_superop(&h).scale(c(0.0, -1.0)).add(&dissipator_superop(&l));
            prop_assert!(choi(&s).is_hermitian(1e-12));
        }

        #[test]
        fn nested_partial_traces_give_trace(x in arb_op(6)) {
            let rb = partial_trace(&x, 2, 3, Factor::A).unwrap();
            let ra = partial_trace(&x, 2, 3, Factor::B).unwrap();
            prop_assert!((rb.trace() - x.trace()).norm() < 1e-14);
            prop_assert!((ra.trace() - x.trace()).norm() < 1e-14);
        }
    }
}
