//! Spectra of superoperators, steady states and the pseudoinverse of a
//! Lindbladian with a unique steady state.

use ndarray::{Array1, Array2};
use ndarray_linalg::OperationNorm;

use crate::error::{Error, Result};
use crate::linalg::{self, c, Mat, C64, I, ONE, ZERO};
use crate::superop::{
    commutator_superop, dissipator_superop, unvec, vec_of, Operator, SuperOp, VecOp,
};

/// Hamiltonian plus weighted jump operators, `-i[H, .] + sum_k w_k D[L_k]`.
#[derive(Clone, Debug)]
pub struct Lindbladian {
    h: Operator,
    jumps: Vec<(f64, Operator)>,
    ldl: Vec<Operator>,
}

impl Lindbladian {
    pub fn new(h: Operator, jumps: Vec<(f64, Operator)>) -> Result<Self> {
        let defect = h.hermiticity_defect();
        if defect > 1e-12 * h.max_abs().max(1.0) {
            return Err(Error::InvalidInput(format!(
                "Hamiltonian is not Hermitian (defect {defect:.3e})"
            )));
        }
        for (w, l) in &jumps {
            if !(*w >= 0.0) {
                return Err(Error::InvalidInput(format!("negative jump weight {w}")));
            }
            if l.dim() != h.dim() {
                return Err(Error::DimensionMismatch("jump operator dimension".into()));
            }
        }
        let ldl = jumps.iter().map(|(_, l)| l.dag().dot(l)).collect();
        Ok(Self { h, jumps, ldl })
    }

    pub fn dim(&self) -> usize {
        self.h.dim()
    }

    pub fn hamiltonian(&self) -> &Operator {
        &self.h
    }

    pub fn jumps(&self) -> &[(f64, Operator)] {
        &self.jumps
    }

    /// Same generator multiplied by a positive constant (rescaling time).
    pub fn scaled(&self, f: f64) -> Result<Self> {
        if !(f > 0.0) {
            return Err(Error::InvalidInput("scale factor must be positive".into()));
        }
        Self::new(
            self.h.scale(c(f, 0.0)),
            self.jumps.iter().map(|(w, l)| (w * f, l.clone())).collect(),
        )
    }

    pub fn superop(&self) -> SuperOp {
        let mut s = commutator_superop(&self.h).scale(-I);
        for (w, l) in &self.jumps {
            s = s.add(&dissipator_superop(l).scale(c(*w, 0.0)));
        }
        s
    }

    /// Action on an operator without forming the supermatrix.
    pub fn apply(&self, x: &Operator) -> Operator {
        let h = self.h.mat();
        let xm = x.mat();
        let mut out = (h.dot(xm) - xm.dot(h)) * (-I);
        for ((w, l), ldl) in self.jumps.iter().zip(&self.ldl) {
            let lm = l.mat();
            let jump = lm.dot(xm).dot(&linalg::dagger(&lm.view()));
            let anti = ldl.mat().dot(xm) + xm.dot(ldl.mat());
            out = out + (jump - anti * c(0.5, 0.0)) * c(*w, 0.0);
        }
        Operator::wrap(out)
    }

    /// Supermatrix columns as sparse lists, built from the operator structure.
    pub(crate) fn sparse_columns(&self) -> SparseColumns {
        let d = self.dim();
        let nz = |m: &Mat| -> Vec<Vec<(usize, C64)>> {
            (0..d)
                .map(|i| {
                    (0..d)
                        .filter_map(|a| {
                            let z = m[[a, i]];
                            (z != ZERO).then_some((a, z))
                        })
                        .collect()
                })
                .collect()
        };
        let h_cols = nz(self.h.mat());
        let h_rows: Vec<Vec<(usize, C64)>> = nz(&self.h.mat().t().to_owned());
        let l_cols: Vec<_> = self.jumps.iter().map(|(_, l)| nz(l.mat())).collect();
        let ldl_cols: Vec<_> = self.ldl.iter().map(|m| nz(m.mat())).collect();
        let ldl_rows: Vec<_> = self
            .ldl
            .iter()
            .map(|m| nz(&m.mat().t().to_owned()))
            .collect();

        let mut cols = Vec::with_capacity(d * d);
        let mut scratch = Array2::<C64>::zeros((d, d));
        let mut touched: Vec<(usize, usize)> = Vec::new();
        for j in 0..d {
            for i in 0..d {
                // L(|i><j|)
                let mut add = |a: usize, b: usize, z: C64, t: &mut Vec<(usize, usize)>| {
                    if scratch[[a, b]] == ZERO {
                        t.push((a, b));
                    }
                    scratch[[a, b]] += z;
                };
                for &(a, z) in &h_cols[i] {
                    add(a, j, -I * z, &mut touched);
                }
                for &(b, z) in &h_rows[j] {
                    add(i, b, I * z, &mut touched);
                }
                for (k, (w, _)) in self.jumps.iter().enumerate() {
                    let w = c(*w, 0.0);
                    for &(a, la) in &l_cols[k][i] {
                        for &(b, lb) in &l_cols[k][j] {
                            add(a, b, w * la * lb.conj(), &mut touched);
                        }
                    }
                    for &(a, z) in &ldl_cols[k][i] {
                        add(a, j, -0.5 * w * z, &mut touched);
                    }
                    for &(b, z) in &ldl_rows[k][j] {
                        add(i, b, -0.5 * w * z, &mut touched);
                    }
                }
                let mut col: Vec<(usize, C64)> = touched
                    .drain(..)
                    .filter_map(|(a, b)| {
                        let z = scratch[[a, b]];
                        scratch[[a, b]] = ZERO;
                        (z != ZERO).then_some((a + d * b, z))
                    })
                    .collect();
                col.sort_by_key(|e| e.0);
                col.dedup_by_key(|e| e.0);
                cols.push(col);
            }
        }
        SparseColumns { dim: d, cols }
    }
}

/// Supermatrix stored column by column; only used for block detection.
pub(crate) struct SparseColumns {
    dim: usize,
    cols: Vec<Vec<(usize, C64)>>,
}

impl SparseColumns {
    fn from_dense(s: &SuperOp) -> Self {
        let n = s.dim() * s.dim();
        let cols = (0..n)
            .map(|j| {
                (0..n)
                    .filter_map(|i| {
                        let z = s.mat()[[i, j]];
                        (z != ZERO).then_some((i, z))
                    })
                    .collect()
            })
            .collect();
        SparseColumns { dim: s.dim(), cols }
    }
}

/// Eigenvalues with biorthonormal right/left eigen-operators.
#[derive(Clone, Debug)]
pub struct SpectralData {
    pub eigenvalues: Vec<C64>,
    pub right: Vec<Operator>,
    pub left: Vec<Operator>,
}

impl SpectralData {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// `max |<<Xbar_a|X_b>> - delta_ab|`.
    pub fn biorthonormality_defect(&self) -> f64 {
        let mut m: f64 = 0.0;
        for (a, l) in self.left.iter().enumerate() {
            let lv = vec_of(&l.view());
            for (b, r) in self.right.iter().enumerate() {
                let z = linalg::vdot(&lv, &vec_of(&r.view()));
                let target = if a == b { ONE } else { ZERO };
                m = m.max((z - target).norm());
            }
        }
        m
    }

    /// `max |sum_a |X_a>><<Xbar_a| - I|`.
    pub fn completeness_defect(&self) -> f64 {
        let n = self.len();
        let mut acc = Array2::<C64>::zeros((n, n));
        for (l, r) in self.left.iter().zip(&self.right) {
            let rv = vec_of(&r.view());
            let lv = vec_of(&l.view());
            for i in 0..n {
                for j in 0..n {
                    acc[[i, j]] += rv[i] * lv[j].conj();
                }
            }
        }
        linalg::max_abs(&(acc - linalg::eye(n)).view())
    }
}

/// Tolerances for [`diagonalize`].
#[derive(Clone, Copy, Debug)]
pub struct DiagOptions {
    /// Eigenvalues closer than `degeneracy_tol * ||S||_1` count as degenerate.
    pub degeneracy_tol: f64,
    /// Eigenvector-matrix condition above which a degenerate spectrum is rejected.
    pub max_condition: f64,
}

impl Default for DiagOptions {
    fn default() -> Self {
        Self {
            degeneracy_tol: 1e-8,
            max_condition: 1e8,
        }
    }
}

pub fn diagonalize(s: &SuperOp) -> Result<SpectralData> {
    diagonalize_with(s, DiagOptions::default())
}

pub fn diagonalize_with(s: &SuperOp, opts: DiagOptions) -> Result<SpectralData> {
    let d = s.dim();
    let n = d * d;
    let scale = s.mat().opnorm_one()?.max(f64::MIN_POSITIVE);
    let (w, v) = linalg::eig(&s.mat().view())?;

    let order = sorted_order(&w, 1e-10 * scale.max(1.0));
    let w: Vec<C64> = order.iter().map(|&k| w[k]).collect();
    let mut vs = Array2::<C64>::zeros((n, n));
    for (new, &old) in order.iter().enumerate() {
        vs.column_mut(new).assign(&v.column(old));
    }

    let near_degenerate = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).find(|&(a, b)| {
        (w[a] - w[b]).norm() < opts.degeneracy_tol * scale
    });
    let inv = match linalg::inv(&vs.view()) {
        Ok(m) => m,
        Err(_) => {
            return Err(Error::NearDegenerate {
                value: near_degenerate.map(|(a, _)| w[a]).unwrap_or(w[0]),
                condition: f64::INFINITY,
            })
        }
    };
    let condition = vs.opnorm_one()? * inv.opnorm_one()?;
    if let Some((a, _)) = near_degenerate {
        if condition > opts.max_condition {
            return Err(Error::NearDegenerate {
                value: w[a],
                condition,
            });
        }
    }

    let right = (0..n)
        .map(|k| Operator::wrap(unvec(&vs.column(k).to_owned(), d)))
        .collect();
    let left = (0..n)
        .map(|k| {
            let row: Array1<C64> = inv.row(k).mapv(|z| z.conj());
            Operator::wrap(unvec(&row, d))
        })
        .collect();
    let data = SpectralData {
        eigenvalues: w,
        right,
        left,
    };
    let defect = data.biorthonormality_defect();
    if defect > 1e-9 {
        return Err(Error::NearDegenerate {
            value: data.eigenvalues[0],
            condition,
        });
    }
    Ok(data)
}

/// Descending real part; within runs of equal real part (to `tol`), descending imaginary part.
fn sorted_order(w: &Array1<C64>, tol: f64) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..w.len()).collect();
    idx.sort_by(|&a, &b| w[b].re.total_cmp(&w[a].re));
    let mut out = Vec::with_capacity(idx.len());
    let mut start = 0;
    while start < idx.len() {
        let mut end = start + 1;
        while end < idx.len() && (w[idx[end - 1]].re - w[idx[end]].re).abs() <= tol {
            end += 1;
        }
        let mut run = idx[start..end].to_vec();
        run.sort_by(|&a, &b| w[b].im.total_cmp(&w[a].im));
        out.extend(run);
        start = end;
    }
    out
}

/// Unique fixed point of a Lindbladian and its spectral gap.
#[derive(Clone, Debug)]
pub struct SteadyState {
    pub rho: Operator,
    pub gap: f64,
}

/// Dense steady-state extraction; `gap_tol` is relative to `||S||_1`.
pub fn steady_state(l: &Lindbladian) -> Result<SteadyState> {
    steady_state_of(&l.superop(), 1e-8)
}

pub fn steady_state_of(s: &SuperOp, gap_tol: f64) -> Result<SteadyState> {
    let d = s.dim();
    let scale = s.mat().opnorm_one()?.max(1e-300);
    let (w, v) = linalg::eig(&s.mat().view())?;
    let mut idx: Vec<usize> = (0..w.len()).collect();
    idx.sort_by(|&a, &b| w[a].norm().total_cmp(&w[b].norm()));
    let k0 = idx[0];
    if idx.len() > 1 && w[idx[1]].norm() < gap_tol * scale {
        return Err(Error::NonUniqueSteadyState { second: w[idx[1]] });
    }
    let x = unvec(&v.column(k0).to_owned(), d);
    let tr = linalg::trace(&x.view());
    if tr.norm() < 1e-12 {
        return Err(Error::TraceNormalizationFailure { trace_abs: tr.norm() });
    }
    let rho = Operator::wrap(x / tr).hermitian_part();
    let rho = rho.scale(ONE / rho.trace());
    let gap = idx[1..]
        .iter()
        .map(|&k| -w[k].re)
        .fold(f64::INFINITY, f64::min);
    Ok(SteadyState { rho, gap })
}

/// `L^+ = sum_{a>=1} (1/lambda_a) |X_a>><<Xbar_a|` from a diagonalization of `S`.
pub fn pseudo_inverse(s: &SuperOp, spec: &SpectralData) -> Result<SuperOp> {
    let d = s.dim();
    let n = d * d;
    if spec.len() != n {
        return Err(Error::DimensionMismatch("spectral data size".into()));
    }
    let scale = s.mat().opnorm_one()?.max(1e-300);
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| spec.eigenvalues[a].norm().total_cmp(&spec.eigenvalues[b].norm()));
    let zero = idx[0];
    for &k in &idx[1..] {
        if spec.eigenvalues[k].re > -1e-8 * scale {
            return Err(Error::NonUniqueSteadyState {
                second: spec.eigenvalues[k],
            });
        }
    }
    let mut m = Array2::<C64>::zeros((n, n));
    for k in 0..n {
        if k == zero {
            continue;
        }
        let r = vec_of(&spec.right[k].view());
        let l = vec_of(&spec.left[k].view());
        let f = ONE / spec.eigenvalues[k];
        for i in 0..n {
            let ri = r[i] * f;
            for j in 0..n {
                m[[i, j]] += ri * l[j].conj();
            }
        }
    }
    Ok(SuperOp::wrap(d, m))
}

/// `e^{S t} v`.
pub fn propagate(s: &SuperOp, t: f64, v: &VecOp) -> Result<VecOp> {
    if t < 0.0 {
        return Err(Error::InvalidInput("propagation time must be non-negative".into()));
    }
    if t == 0.0 {
        return Ok(v.clone());
    }
    let e = linalg::expm(&(s.mat() * c(t, 0.0)).view())?;
    VecOp::new(e.dot(v.as_array()))
}

/// Supermatrix `e^{S t}`.
pub fn propagator(s: &SuperOp, t: f64) -> Result<SuperOp> {
    Ok(SuperOp::wrap(
        s.dim(),
        linalg::expm(&(s.mat() * c(t, 0.0)).view())?,
    ))
}

/// `L^+ = -int_0^inf (e^{Lt} - P0) dt` without eigenvectors. The integral
/// `int_0^T e^{Lt} dt` is the upper-right block of `exp([[L, I], [0, 0]] T)`
/// and `P0` is taken as `e^{LT}`; `T` doubles until the result moves by less
/// than `tol` and `e^{LT}` is idempotent to `tol`.
pub fn integral_pseudo_inverse(s: &SuperOp, tol: f64) -> Result<SuperOp> {
    let n = s.dim() * s.dim();
    let norm = s.mat().opnorm_one()?.max(1e-300);
    let mut aug = Array2::<C64>::zeros((2 * n, 2 * n));
    aug.slice_mut(ndarray::s![..n, ..n]).assign(s.mat());
    for i in 0..n {
        aug[[i, n + i]] = ONE;
    }
    let mut t = 16.0 / norm;
    let mut prev: Option<Mat> = None;
    for _ in 0..60 {
        let e = linalg::expm(&(&aug * c(t, 0.0)).view())?;
        let p0 = e.slice(ndarray::s![..n, ..n]).to_owned();
        let phi = e.slice(ndarray::s![..n, n..]).to_owned();
        let cand = (&p0 * c(t, 0.0)) - phi;
        let settled = linalg::max_abs(&(p0.dot(&p0) - &p0).view()) < tol;
        if let Some(pv) = &prev {
            if settled && linalg::max_abs(&(&cand - pv).view()) < tol {
                return Ok(SuperOp::wrap(s.dim(), cand));
            }
        }
        prev = Some(cand);
        t *= 2.0;
    }
    Err(Error::AssumptionViolated(
        "time integral of the propagator did not settle".into(),
    ))
}

/// Group inverse `L^+ = (L + P0)^{-1} - P0` with `P0 = |rho>><<I|`, evaluated
/// block by block on the connected components of the supermatrix sparsity
/// graph. Agrees with [`pseudo_inverse`] whenever the spectral route applies,
/// but needs no eigenvectors and scales to large Fock truncations.
#[derive(Clone, Debug)]
pub struct GroupInverse {
    dim: usize,
    steady: Operator,
    blocks: Vec<(Vec<usize>, Mat)>,
}

impl GroupInverse {
    pub fn from_lindbladian(l: &Lindbladian) -> Result<Self> {
        Self::build(l.sparse_columns())
    }

    pub fn from_superop(s: &SuperOp) -> Result<Self> {
        Self::build(SparseColumns::from_dense(s))
    }

    fn build(sp: SparseColumns) -> Result<Self> {
        let d = sp.dim;
        let n = d * d;
        let mut uf = UnionFind::new(n);
        for (j, col) in sp.cols.iter().enumerate() {
            for &(i, _) in col {
                uf.union(i, j);
            }
        }
        // P0 couples the steady-state support to the diagonal; keep all diagonal
        // indices in one block.
        for i in 1..d {
            uf.union(0, i + d * i);
        }
        let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
        for i in 0..n {
            groups.entry(uf.find(i)).or_default().push(i);
        }
        let core_root = uf.find(0);
        let mut pos = vec![usize::MAX; n];
        let mut blocks = Vec::new();
        let mut steady_vec = Array1::<C64>::zeros(n);
        let mut scale: f64 = 0.0;
        for col in &sp.cols {
            scale = scale.max(col.iter().map(|e| e.1.norm()).sum::<f64>());
        }
        let scale = scale.max(1e-300);

        for (root, idx) in groups {
            for (k, &i) in idx.iter().enumerate() {
                pos[i] = k;
            }
            let m = idx.len();
            let mut blk = Array2::<C64>::zeros((m, m));
            for (cl, &j) in idx.iter().enumerate() {
                for &(i, z) in &sp.cols[j] {
                    blk[[pos[i], cl]] = z;
                }
            }
            if root == core_root {
                // Kernel vector: replace the first diagonal row by the trace functional.
                let diag_local: Vec<usize> = (0..d).map(|i| pos[i + d * i]).collect();
                let r = diag_local[0];
                let mut sys = blk.clone();
                sys.row_mut(r).fill(ZERO);
                for &k in &diag_local {
                    sys[[r, k]] = ONE;
                }
                let sys_inv = linalg::inv(&sys.view()).map_err(|_| Error::NonUniqueSteadyState {
                    second: ZERO,
                })?;
                let cond = sys.opnorm_one()? * sys_inv.opnorm_one()?;
                if cond > 1e14 {
                    return Err(Error::NonUniqueSteadyState { second: ZERO });
                }
                let x = sys_inv.column(r).to_owned();
                let mut rho = Array1::<C64>::zeros(n);
                for (k, &i) in idx.iter().enumerate() {
                    rho[i] = x[k];
                }
                let rho_op = Operator::wrap(unvec(&rho, d)).hermitian_part();
                let rho_op = rho_op.scale(ONE / rho_op.trace());
                steady_vec = vec_of(&rho_op.view());
                for &k in &diag_local {
                    for (rl, &i) in idx.iter().enumerate() {
                        blk[[rl, k]] += steady_vec[i];
                    }
                }
            }
            let inv = linalg::inv(&blk.view()).map_err(|_| Error::NonUniqueSteadyState {
                second: ZERO,
            })?;
            let growth = inv.opnorm_one()? * scale;
            if growth > 1e13 {
                return Err(Error::NonUniqueSteadyState { second: ZERO });
            }
            blocks.push((idx, inv));
        }
        let steady = Operator::wrap(unvec(&steady_vec, d));
        Ok(Self {
            dim: d,
            steady,
            blocks,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn steady(&self) -> &Operator {
        &self.steady
    }

    /// Largest block size; useful to report the effective work.
    pub fn max_block(&self) -> usize {
        self.blocks.iter().map(|b| b.0.len()).max().unwrap_or(0)
    }

    pub fn apply(&self, x: &Operator) -> Operator {
        let d = self.dim;
        let xv = vec_of(&x.view());
        let mut out = Array1::<C64>::zeros(d * d);
        for (idx, inv) in &self.blocks {
            let sub: Array1<C64> = idx.iter().map(|&i| xv[i]).collect();
            let y = inv.dot(&sub);
            for (k, &i) in idx.iter().enumerate() {
                out[i] = y[k];
            }
        }
        let tr = x.trace();
        let mut y = unvec(&out, d);
        y.zip_mut_with(self.steady.mat(), |o, r| *o -= tr * r);
        Operator::wrap(y)
    }

    pub fn superop(&self) -> SuperOp {
        SuperOp::from_fn(self.dim, |x| self.apply(x))
    }
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}
