//! Order-by-order adiabatic elimination of a fast subsystem `A` coupled to a
//! slow subsystem `B`, gauge transformations of the resulting expansion and
//! the second-order completely positive gauge.
//!
//! The total generator is `L_A (x) I + eps (I (x) L_B + L_int)` with
//! `L_int = -i[H_int, .]`. Operators on `A (x) B` use the row index `a * dB + b`.

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};
use crate::linalg::{self, c, Mat, C64, I, ZERO};
use crate::spectral::{self, GroupInverse, Lindbladian};
use crate::superop::{unvec, vec_of, LinearMap, Operator, SuperOp};

/// Norm of `K_n` above which the recursion is declared numerically meaningless.
pub const GROWTH_LIMIT: f64 = 1e12;

#[derive(Clone, Debug)]
pub struct CompositeModel {
    fast: Lindbladian,
    slow: SuperOp,
    h_int: Operator,
    terms: Vec<(Operator, Operator)>,
    ginv: GroupInverse,
}

impl CompositeModel {
    /// `terms` lists pairs `(A_k, B_k)` with `H_int = sum_k A_k^dagger (x) B_k`.
    /// When `None`, an operator Schmidt decomposition is used.
    pub fn new(
        fast: Lindbladian,
        slow: SuperOp,
        h_int: Operator,
        terms: Option<Vec<(Operator, Operator)>>,
    ) -> Result<Self> {
        let (da, db) = (fast.dim(), slow.dim());
        if h_int.dim() != da * db {
            return Err(Error::DimensionMismatch(format!(
                "interaction has side {}, expected {}",
                h_int.dim(),
                da * db
            )));
        }
        let defect = h_int.hermiticity_defect();
        if defect > 1e-12 * h_int.max_abs().max(1.0) {
            return Err(Error::InvalidInput(format!(
                "interaction Hamiltonian is not Hermitian (defect {defect:.3e})"
            )));
        }
        let terms = match terms {
            Some(t) => t,
            None => operator_schmidt(&h_int, da, db)?,
        };
        let mut rec = Operator::zeros(da * db);
        for (a, b) in &terms {
            if a.dim() != da || b.dim() != db {
                return Err(Error::DimensionMismatch("interaction term dimension".into()));
            }
            rec = rec.add(&a.dag().kron(b));
        }
        let err = rec.dist(&h_int);
        if err > 1e-12 * h_int.max_abs().max(1.0) {
            return Err(Error::InvalidInput(format!(
                "interaction terms do not reconstruct H_int (error {err:.3e})"
            )));
        }
        let ginv = GroupInverse::from_lindbladian(&fast)?;
        Ok(Self {
            fast,
            slow,
            h_int,
            terms,
            ginv,
        })
    }

    pub fn dim_a(&self) -> usize {
        self.fast.dim()
    }

    pub fn dim_b(&self) -> usize {
        self.slow.dim()
    }

    pub fn fast(&self) -> &Lindbladian {
        &self.fast
    }

    pub fn slow(&self) -> &SuperOp {
        &self.slow
    }

    pub fn h_int(&self) -> &Operator {
        &self.h_int
    }

    pub fn terms(&self) -> &[(Operator, Operator)] {
        &self.terms
    }

    pub fn steady_a(&self) -> &Operator {
        self.ginv.steady()
    }

    pub fn group_inverse(&self) -> &GroupInverse {
        &self.ginv
    }

    /// `(I (x) L_B + L_int)(x)`.
    pub fn apply_perturbation(&self, x: &Mat) -> Mat {
        let h = self.h_int.mat();
        let comm = (h.dot(x) - x.dot(h)) * (-I);
        comm + apply_b_blocks(x, self.dim_a(), self.dim_b(), &self.slow)
    }

    /// `(L_A (x) I)(x)`.
    pub fn apply_fast(&self, x: &Mat) -> Mat {
        map_a_blocks(x, self.dim_a(), self.dim_b(), |blk| {
            self.fast.apply(&Operator::wrap(blk)).into_mat()
        })
    }

    /// Full supermatrix of `L_A (x) I + eps (I (x) L_B + L_int)`; dense, small models only.
    pub fn total_superop(&self, eps: f64) -> SuperOp {
        let d = self.dim_a() * self.dim_b();
        SuperOp::from_fn(d, |x| {
            let m = self.apply_fast(x.mat()) + self.apply_perturbation(x.mat()) * c(eps, 0.0);
            Operator::wrap(m)
        })
    }
}

/// Operator Schmidt decomposition `H = sum_k A_k^dagger (x) B_k`.
pub fn operator_schmidt(h: &Operator, da: usize, db: usize) -> Result<Vec<(Operator, Operator)>> {
    let hm = h.mat();
    let mut r = Array2::<C64>::zeros((da * da, db * db));
    for a in 0..da {
        for ap in 0..da {
            for b in 0..db {
                for bp in 0..db {
                    r[[a * da + ap, b * db + bp]] = hm[[a * db + b, ap * db + bp]];
                }
            }
        }
    }
    let (u, s, vt) = linalg::svd(&r.view())?;
    let smax = s.iter().cloned().fold(0.0, f64::max);
    let mut terms = Vec::new();
    for k in 0..s.len() {
        if s[k] <= 1e-14 * smax.max(1e-300) {
            continue;
        }
        let mut ak = Array2::<C64>::zeros((da, da));
        for a in 0..da {
            for ap in 0..da {
                ak[[a, ap]] = u[[a * da + ap, k]] * s[k];
            }
        }
        let mut bk = Array2::<C64>::zeros((db, db));
        for b in 0..db {
            for bp in 0..db {
                bk[[b, bp]] = vt[[k, b * db + bp]];
            }
        }
        terms.push((Operator::wrap(ak).dag(), Operator::wrap(bk)));
    }
    Ok(terms)
}

/// Apply `f` to every `A`-block `x[(., b), (., b')]`.
pub(crate) fn map_a_blocks(x: &Mat, da: usize, db: usize, f: impl Fn(Mat) -> Mat) -> Mat {
    let mut out = Array2::<C64>::zeros((da * db, da * db));
    for b in 0..db {
        for bp in 0..db {
            let mut blk = Array2::<C64>::zeros((da, da));
            for a in 0..da {
                for ap in 0..da {
                    blk[[a, ap]] = x[[a * db + b, ap * db + bp]];
                }
            }
            let y = f(blk);
            for a in 0..da {
                for ap in 0..da {
                    out[[a * db + b, ap * db + bp]] = y[[a, ap]];
                }
            }
        }
    }
    out
}

/// `(I (x) S)(x)` for a supermatrix `S` on `B`.
pub(crate) fn apply_b_blocks(x: &Mat, da: usize, db: usize, s: &SuperOp) -> Mat {
    let mut out = Array2::<C64>::zeros((da * db, da * db));
    if s.max_abs() == 0.0 {
        return out;
    }
    let sm = s.mat();
    let mut v = Array1::<C64>::zeros(db * db);
    for a in 0..da {
        for ap in 0..da {
            for b in 0..db {
                for bp in 0..db {
                    v[b + db * bp] = x[[a * db + b, ap * db + bp]];
                }
            }
            let w = sm.dot(&v);
            for b in 0..db {
                for bp in 0..db {
                    out[[a * db + b, ap * db + bp]] = w[b + db * bp];
                }
            }
        }
    }
    out
}

/// `tr_A` of an operator on `A (x) B`.
pub(crate) fn trace_a(x: &Mat, da: usize, db: usize) -> Mat {
    let mut out = Array2::<C64>::zeros((db, db));
    for a in 0..da {
        for b in 0..db {
            for bp in 0..db {
                out[[b, bp]] += x[[a * db + b, a * db + bp]];
            }
        }
    }
    out
}

/// Gauge superoperators `G_1, G_2, ...` on `B`; missing orders are zero.
#[derive(Clone, Debug, PartialEq)]
pub struct GaugeSeq {
    dim: usize,
    ops: Vec<SuperOp>,
}

impl GaugeSeq {
    /// Partial-trace parametrization.
    pub fn zero(dim: usize) -> Self {
        Self { dim, ops: Vec::new() }
    }

    /// `ops[n - 1] = G_n`.
    pub fn new(dim: usize, ops: Vec<SuperOp>) -> Result<Self> {
        if ops.iter().any(|g| g.dim() != dim) {
            return Err(Error::DimensionMismatch("gauge superoperator dimension".into()));
        }
        Ok(Self { dim, ops })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `G_n` for `n >= 1`.
    pub fn get(&self, n: usize) -> SuperOp {
        assert!(n >= 1, "gauge orders start at 1");
        self.ops
            .get(n - 1)
            .cloned()
            .unwrap_or_else(|| SuperOp::zeros(self.dim))
    }

    pub fn is_zero(&self) -> bool {
        self.ops.iter().all(|g| g.max_abs() == 0.0)
    }

    /// `sum_n eps^n G_n` up to `order`.
    pub fn sum(&self, eps: f64, order: usize) -> SuperOp {
        let mut s = SuperOp::zeros(self.dim);
        for n in 1..=order.min(self.ops.len()) {
            s = s.add(&self.ops[n - 1].scale(c(eps.powi(n as i32), 0.0)));
        }
        s
    }
}

/// Per-order assignment maps `K_n: B -> A (x) B` and reduced generators `Ls_n`.
#[derive(Clone, Debug)]
pub struct Expansion {
    dim_a: usize,
    dim_b: usize,
    rho_a: Operator,
    k: Vec<LinearMap>,
    ls: Vec<SuperOp>,
    gauge: GaugeSeq,
}

impl Expansion {
    pub fn order(&self) -> usize {
        self.ls.len() - 1
    }

    pub fn dim_a(&self) -> usize {
        self.dim_a
    }

    pub fn dim_b(&self) -> usize {
        self.dim_b
    }

    pub fn rho_a(&self) -> &Operator {
        &self.rho_a
    }

    pub fn k(&self, n: usize) -> &LinearMap {
        &self.k[n]
    }

    pub fn ls(&self, n: usize) -> &SuperOp {
        &self.ls[n]
    }

    pub fn gauge(&self) -> &GaugeSeq {
        &self.gauge
    }

    /// `sum_{n <= order} eps^n K_n`.
    pub fn k_sum(&self, eps: f64, order: usize) -> LinearMap {
        let mut s = self.k[0].clone();
        for n in 1..=order.min(self.order()) {
            s = s.add(&self.k[n].scale(c(eps.powi(n as i32), 0.0)));
        }
        s
    }

    /// `sum_{n <= order} eps^n Ls_n`.
    pub fn ls_sum(&self, eps: f64, order: usize) -> SuperOp {
        let mut s = self.ls[0].clone();
        for n in 1..=order.min(self.order()) {
            s = s.add(&self.ls[n].scale(c(eps.powi(n as i32), 0.0)));
        }
        s
    }
}

/// Runs the elimination recursion to order `order`.
pub fn eliminate(model: &CompositeModel, order: usize, gauge: &GaugeSeq) -> Result<Expansion> {
    if order == 0 {
        return Err(Error::InvalidInput("expansion order must be at least 1".into()));
    }
    let (da, db) = (model.dim_a(), model.dim_b());
    if gauge.dim() != db {
        return Err(Error::DimensionMismatch("gauge acts on the slow space".into()));
    }
    let nb = db * db;
    let rho = model.steady_a().clone();
    let units: Vec<Operator> = (0..nb).map(|cix| Operator::unit(db, cix % db, cix / db)).collect();

    // cols[n][c] = K_n(E_c) as an A (x) B matrix.
    let mut cols: Vec<Vec<Mat>> = vec![units.iter().map(|e| rho.kron(e).into_mat()).collect()];
    let mut ls: Vec<SuperOp> = vec![SuperOp::zeros(db)];

    let apply_k = |kc: &[Mat], y: &Mat| -> Mat {
        let yv = vec_of(&y.view());
        let mut out = Array2::<C64>::zeros((da * db, da * db));
        for (cix, z) in yv.iter().enumerate() {
            if *z != ZERO {
                out.scaled_add(*z, &kc[cix]);
            }
        }
        out
    };

    for n in 1..=order {
        let mut l_n: Vec<Mat> = Vec::with_capacity(nb);
        for cix in 0..nb {
            let mut x = model.apply_perturbation(&cols[n - 1][cix]);
            for k in 1..n {
                let y = ls[n - k].mat().column(cix).to_owned();
                let y = unvec(&y, db);
                x = x - apply_k(&cols[k], &y);
            }
            l_n.push(x);
        }
        let mut ls_mat = Array2::<C64>::zeros((nb, nb));
        for (cix, x) in l_n.iter().enumerate() {
            let t = trace_a(x, da, db);
            ls_mat.column_mut(cix).assign(&vec_of(&t.view()));
        }
        let ls_n = SuperOp::wrap(db, ls_mat);
        let g_n = gauge.get(n);

        let mut k_n: Vec<Mat> = Vec::with_capacity(nb);
        let mut growth: f64 = 0.0;
        for (cix, x) in l_n.iter().enumerate() {
            let lsv = unvec(&ls_n.mat().column(cix).to_owned(), db);
            let src = linalg::kron(&rho.view(), &lsv.view()) - x;
            let mut kx = map_a_blocks(&src, da, db, |blk| {
                model.ginv.apply(&Operator::wrap(blk)).into_mat()
            });
            let gv = unvec(&g_n.mat().column(cix).to_owned(), db);
            kx = kx + linalg::kron(&rho.view(), &gv.view());
            growth = growth.max(linalg::max_abs(&kx.view()));
            k_n.push(kx);
        }
        if !growth.is_finite() || growth > GROWTH_LIMIT {
            return Err(Error::OrderTooHigh { order: n, growth });
        }
        cols.push(k_n);
        ls.push(ls_n);
    }

    let k = cols
        .into_iter()
        .map(|kc| {
            let mut m = Array2::<C64>::zeros(((da * db).pow(2), nb));
            for (cix, x) in kc.iter().enumerate() {
                m.column_mut(cix).assign(&vec_of(&x.view()));
            }
            LinearMap::wrap(db, da * db, m)
        })
        .collect();
    Ok(Expansion {
        dim_a: da,
        dim_b: db,
        rho_a: rho,
        k,
        ls,
        gauge: gauge.clone(),
    })
}

/// Spectral norm of `K(Ls(.)) - L_tot(K(.))` over the slow space, with both
/// series summed to the expansion order.
pub fn invariance_residual(model: &CompositeModel, exp: &Expansion, eps: f64) -> Result<f64> {
    let (da, db) = (model.dim_a(), model.dim_b());
    let n = exp.order();
    let k = exp.k_sum(eps, n);
    let ls = exp.ls_sum(eps, n);
    let lhs = k.mat().dot(ls.mat());
    let mut r = lhs;
    for cix in 0..db * db {
        let x = unvec(&k.mat().column(cix).to_owned(), da * db);
        let tot = model.apply_fast(&x) + model.apply_perturbation(&x) * c(eps, 0.0);
        let mut col = r.column_mut(cix);
        col -= &vec_of(&tot.view());
    }
    linalg::spectral_norm(&r.view())
}

/// Re-expresses a `G = 0` expansion in the gauge `G`: `K^G = K o (I + G)` and
/// `Ls^G = (I + G)^{-1} o Ls o (I + G)`, each truncated at the expansion order.
pub fn gauge_transform(exp0: &Expansion, gauge: &GaugeSeq, eps: f64) -> Result<Expansion> {
    if !exp0.gauge.is_zero() {
        return Err(Error::InvalidInput("gauge_transform expects a G = 0 expansion".into()));
    }
    let db = exp0.dim_b;
    if gauge.dim() != db {
        return Err(Error::DimensionMismatch("gauge acts on the slow space".into()));
    }
    let order = exp0.order();
    let total = SuperOp::identity(db).add(&gauge.sum(eps, order));
    let cond = linalg::cond1(&total.mat().view()).unwrap_or(f64::INFINITY);
    if !cond.is_finite() || cond > 1e12 {
        return Err(Error::GaugeNotInvertible { condition: cond });
    }

    // g[0] = I, g[n] = G_n; h = series of (I + G)^{-1}.
    let g: Vec<SuperOp> = (0..=order)
        .map(|n| if n == 0 { SuperOp::identity(db) } else { gauge.get(n) })
        .collect();
    let mut h: Vec<SuperOp> = vec![SuperOp::identity(db)];
    for n in 1..=order {
        let mut acc = SuperOp::zeros(db);
        for k in 1..=n {
            acc = acc.sub(&g[k].compose(&h[n - k]));
        }
        h.push(acc);
    }

    let mut k = Vec::with_capacity(order + 1);
    for n in 0..=order {
        let mut acc = LinearMap::zeros(db, exp0.dim_a * db);
        for j in 0..=n {
            acc = acc.add(&exp0.k[j].compose_right(&g[n - j]));
        }
        k.push(acc);
    }
    let mut ls = Vec::with_capacity(order + 1);
    for n in 0..=order {
        let mut acc = SuperOp::zeros(db);
        for i in 0..=n {
            for j in 0..=n - i {
                let kk = n - i - j;
                if exp0.ls[j].max_abs() == 0.0 {
                    continue;
                }
                acc = acc.add(&h[i].compose(&exp0.ls[j]).compose(&g[kk]));
            }
        }
        ls.push(acc);
    }
    Ok(Expansion {
        dim_a: exp0.dim_a,
        dim_b: db,
        rho_a: exp0.rho_a.clone(),
        k,
        ls,
        gauge: gauge.clone(),
    })
}

/// Second-order gauge that makes the assignment map completely positive.
#[derive(Clone, Debug)]
pub struct CpGauge {
    /// `G_1 = 0` and `G_2`; the series variable is not included.
    pub gauge: GaugeSeq,
    /// `F_k` with `F_k rho_A = -L_A^+(S(A_k rho_A))`.
    pub f_ops: Vec<Operator>,
    /// `Gamma_kj = tr(F_k rho_A F_j^dagger)`.
    pub gamma: Mat,
    /// `mu = (z - 1) Gamma`.
    pub mu: Mat,
    /// `eta_kj = <A_j^dagger F_k> + <A_k^dagger F_j>^*`, dissipation matrix of `Ls_2`.
    pub eta: Mat,
}

pub const RANK_TOL: f64 = 1e-10;

pub fn second_order_cp_gauge(model: &CompositeModel, z: f64) -> Result<CpGauge> {
    if !(z >= 1.0) {
        return Err(Error::InvalidInput(format!("gauge parameter z = {z} must be >= 1")));
    }
    let rho = model.steady_a();
    let min_eig = rho.min_eig_hermitian()?;
    if min_eig <= RANK_TOL {
        return Err(Error::RankDeficientSteadyState { min_eig });
    }
    let rho_inv = linalg::inv(&rho.view())?;
    let f_ops: Vec<Operator> = model
        .terms()
        .iter()
        .map(|(a, _)| {
            let ar = a.dot(rho);
            let s = ar.sub(&rho.scale(ar.trace()));
            let frho = model.ginv.apply(&s).scale(c(-1.0, 0.0));
            Operator::wrap(frho.mat().dot(&rho_inv))
        })
        .collect();
    let nk = f_ops.len();
    let expect = |x: &Operator| x.dot(rho).trace();
    let mut gamma = Array2::<C64>::zeros((nk, nk));
    let mut eta = Array2::<C64>::zeros((nk, nk));
    for k in 0..nk {
        for j in 0..nk {
            gamma[[k, j]] = f_ops[k].dot(rho).dot(&f_ops[j].dag()).trace();
            let (ak, _) = &model.terms()[k];
            let (aj, _) = &model.terms()[j];
            eta[[k, j]] = expect(&aj.dag().dot(&f_ops[k])) + expect(&ak.dag().dot(&f_ops[j])).conj();
        }
    }
    let db = model.dim_b();
    let mut g2 = SuperOp::zeros(db);
    for k in 0..nk {
        for j in 0..nk {
            let w = gamma[[k, j]] * z;
            if w == ZERO {
                continue;
            }
            let bk = &model.terms()[k].1;
            let bj = &model.terms()[j].1;
            let bkd = bk.dag();
            let anti = bj.dot(&bkd);
            let term = SuperOp::from_fn(db, |x| {
                let jump = bkd.dot(x).dot(bj);
                let ac = anti.dot(x).add(&x.dot(&anti));
                jump.sub(&ac.scale(c(0.5, 0.0)))
            });
            g2 = g2.add(&term.scale(w));
        }
    }
    let mu = &gamma * c(z - 1.0, 0.0);
    Ok(CpGauge {
        gauge: GaugeSeq::new(db, vec![SuperOp::zeros(db), g2])?,
        f_ops,
        gamma,
        mu,
        eta,
    })
}

/// `exp(t sum_{n <= N} eps^n Ls_n)`.
pub fn reduced_propagator(exp: &Expansion, eps: f64, t: f64) -> Result<SuperOp> {
    spectral::propagator(&exp.ls_sum(eps, exp.order()), t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cp::{is_completely_positive_map, is_lindbladian, DEFAULT_TOL};
    use crate::random;
    use crate::superop::{commutator_superop, partial_trace_superop, Factor};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_model(seed: u64, da: usize, db: usize) -> CompositeModel {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        random::composite_model(&mut rng, da, db)
    }

    #[test]
    fn decoupled_system_has_trivial_corrections() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let la = random::lindbladian(&mut rng, 3, 2);
        let m = CompositeModel::new(la, SuperOp::zeros(2), Operator::zeros(6), Some(vec![])).unwrap();
        let e = eliminate(&m, 4, &GaugeSeq::zero(2)).unwrap();
        for n in 1..=4 {
            assert_eq!(e.ls(n).max_abs(), 0.0);
            assert_eq!(linalg::max_abs(&e.k(n).mat().view()), 0.0);
        }
    }

    #[test]
    fn zeroth_order_and_partial_trace_gauge() {
        let m = random_model(2, 2, 2);
        let e = eliminate(&m, 3, &GaugeSeq::zero(2)).unwrap();
        let tr = partial_trace_superop(2, 2, Factor::A);
        let k0 = tr.mat().dot(e.k(0).mat());
        assert!((k0 - linalg::eye(4)).iter().all(|z| z.norm() < 1e-12));
        for n in 1..=3 {
            let kn = tr.mat().dot(e.k(n).mat());
            assert!(linalg::max_abs(&kn.view()) < 1e-10);
            assert!(e.ls(n).trace_annihilation_defect() < 1e-10);
            assert!(e.ls(n).hermiticity_preservation_defect() < 1e-10);
        }
        let x = Operator::unit(2, 0, 1);
        let k0x = e.k(0).apply_op(&x).unwrap();
        assert!(k0x.dist(&e.rho_a().kron(&x)) < 1e-14);
    }

    #[test]
    fn schmidt_reconstructs() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let h = random::hermitian(&mut rng, 6);
        let t = operator_schmidt(&h, 3, 2).unwrap();
        let mut rec = Operator::zeros(6);
        for (a, b) in &t {
            rec = rec.add(&a.dag().kron(b));
        }
        assert!(rec.dist(&h) < 1e-12);
        assert!(t.len() <= 4);
    }

    #[test]
    fn residual_scales_with_order() {
        let m = random_model(7, 2, 2);
        for order in [2usize, 3] {
            let e = eliminate(&m, order, &GaugeSeq::zero(2)).unwrap();
            let eps0 = 0.02;
            let r: Vec<f64> = (0..3)
                .map(|k| invariance_residual(&m, &e, eps0 / 2f64.powi(k)).unwrap())
                .collect();
            for w in r.windows(2) {
                let ratio = w[0] / w[1];
                let want = 2f64.powi(order as i32 + 1);
                assert!(ratio > want / 2.0 && ratio < want * 2.0, "{order}: {r:?}");
            }
        }
    }

    #[test]
    fn ls_matches_total_spectrum_slow_part() {
        // The slow eigenvalues of L_tot agree with those of the reduced generator
        // up to the truncation order.
        let m = random_model(11, 2, 2);
        let e = eliminate(&m, 4, &GaugeSeq::zero(2)).unwrap();
        let eps = 0.01;
        let (w_tot, _) = linalg::eig(&m.total_superop(eps).mat().view()).unwrap();
        let (w_s, _) = linalg::eig(&e.ls_sum(eps, 4).mat().view()).unwrap();
        let mut tot: Vec<C64> = w_tot.to_vec();
        tot.sort_by(|a, b| b.re.total_cmp(&a.re));
        for z in w_s.iter() {
            let best = tot.iter().map(|t| (t - z).norm()).fold(f64::INFINITY, f64::min);
            assert!(best < 1e-8, "{z}: {best}");
        }
    }

    #[test]
    fn gauge_leaves_spectrum_invariant() {
        let m = random_model(13, 2, 2);
        let e = eliminate(&m, 4, &GaugeSeq::zero(2)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let eps = 1e-3;
        for _ in 0..5 {
            let g1 = SuperOp::new(2, random::ginibre(&mut rng, 4).into_mat()).unwrap();
            let g2 = SuperOp::new(2, random::ginibre(&mut rng, 4).into_mat()).unwrap();
            let gauge = GaugeSeq::new(2, vec![g1, g2]).unwrap();
            let eg = gauge_transform(&e, &gauge, eps).unwrap();
            let (a, _) = linalg::eig(&e.ls_sum(eps, 4).mat().view()).unwrap();
            let (b, _) = linalg::eig(&eg.ls_sum(eps, 4).mat().view()).unwrap();
            for z in a.iter() {
                let best = b.iter().map(|t| (t - z).norm()).fold(f64::INFINITY, f64::min);
                assert!(best < 1e-9, "{best}");
            }
        }
        let same = gauge_transform(&e, &GaugeSeq::zero(2), eps).unwrap();
        for n in 0..=4 {
            assert!(same.ls(n).sub(e.ls(n)).max_abs() < 1e-15);
        }
    }

    #[test]
    fn gauge_engine_agrees_with_transform() {
        // Running the recursion with G directly gives K o (I + G) to the same order.
        let m = random_model(17, 2, 2);
        let e0 = eliminate(&m, 3, &GaugeSeq::zero(2)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(18);
        let g1 = commutator_superop(&random::hermitian(&mut rng, 2)).scale(c(0.0, -1.0));
        let gauge = GaugeSeq::new(2, vec![g1]).unwrap();
        let eg = eliminate(&m, 3, &gauge).unwrap();
        let et = gauge_transform(&e0, &gauge, 0.1).unwrap();
        for n in 0..=3 {
            let dk = linalg::max_abs(&(eg.k(n).mat() - et.k(n).mat()).view());
            assert!(dk < 1e-10, "K_{n}: {dk}");
            assert!(eg.ls(n).sub(et.ls(n)).max_abs() < 1e-10);
        }
    }

    #[test]
    fn second_order_reduced_generator_is_lindblad() {
        for seed in 0..10 {
            let m = random_model(100 + seed, 2 + (seed as usize % 2), 2);
            let e = eliminate(&m, 2, &GaugeSeq::zero(2)).unwrap();
            let s = e.ls_sum(0.05, 2);
            assert!(is_lindbladian(&s, DEFAULT_TOL).unwrap().is_lindblad, "seed {seed}");
        }
    }

    #[test]
    fn bare_assignment_is_not_cp_and_mu_follows_z() {
        for seed in 0..5 {
            let m = random_model(200 + seed, 2, 2);
            let e0 = eliminate(&m, 2, &GaugeSeq::zero(2)).unwrap();
            let bare = is_completely_positive_map(&e0.k_sum(1e-3, 2), DEFAULT_TOL).unwrap();
            assert!(!bare.is_cp, "seed {seed}: {}", bare.min_choi_eig);
            let cg = second_order_cp_gauge(&m, 1.0).unwrap();
            assert!(linalg::max_abs(&cg.mu.view()) < 1e-12);
            assert!(linalg::min_eig_hermitian(&cg.gamma.view()).unwrap() >= -1e-12);
            let cg2 = second_order_cp_gauge(&m, 2.0).unwrap();
            assert!(linalg::min_eig_hermitian(&cg2.mu.view()).unwrap() >= -1e-12);
            assert!(linalg::min_eig_hermitian(&cg.eta.view()).unwrap() >= -1e-10);
        }
    }

    #[test]
    fn cp_gauge_for_bosonic_fast_mode() {
        // Thermal oscillator: [L_mu, F_k] is proportional to the identity away
        // from the truncation edge, so the resolvent term drops out.
        let (n_max, n_th) = (14, 0.3);
        let a = crate::ops::destroy(n_max);
        let la = Lindbladian::new(
            Operator::zeros(n_max + 1),
            vec![(1.0 + n_th, a.clone()), (n_th, a.dag())],
        )
        .unwrap();
        let sm = crate::ops::sigma_minus();
        let h = a.dag().kron(&sm).add(&a.kron(&sm.dag()));
        let m = CompositeModel::new(la, SuperOp::zeros(2), h, Some(vec![(a.clone(), sm.clone()), (a.dag(), sm.dag())]))
            .unwrap();
        let e0 = eliminate(&m, 2, &GaugeSeq::zero(2)).unwrap();
        let cg = second_order_cp_gauge(&m, 1.0).unwrap();
        let min_eigs = |eps: f64| {
            let eg = gauge_transform(&e0, &cg.gauge, eps).unwrap();
            let bare = is_completely_positive_map(&e0.k_sum(eps, 2), DEFAULT_TOL).unwrap();
            let gauged = is_completely_positive_map(&eg.k_sum(eps, 2), DEFAULT_TOL).unwrap();
            (bare.min_choi_eig, gauged.min_choi_eig)
        };
        // Bare negativity is second order; what is left after the gauge comes
        // from truncating W (rho (x) .) W^dagger and is third order.
        let (b1, g1) = min_eigs(0.02);
        let (b2, g2) = min_eigs(0.01);
        assert!(b1 < 0.0 && (b1 / b2 - 4.0).abs() < 0.5, "{b1} {b2}");
        assert!(g1 > -1e-12 || g1 / g2 > 6.0, "{g1} {g2}");
        assert!(g1.abs() < 0.05 * b1.abs());
    }

    #[test]
    fn reduced_propagator_semigroup() {
        let m = random_model(31, 2, 2);
        let e = eliminate(&m, 2, &GaugeSeq::zero(2)).unwrap();
        let p0 = reduced_propagator(&e, 0.1, 0.0).unwrap();
        assert!(p0.sub(&SuperOp::identity(2)).max_abs() < 1e-15);
        let a = reduced_propagator(&e, 0.1, 0.7).unwrap();
        let b = reduced_propagator(&e, 0.1, 1.1).unwrap();
        let ab = reduced_propagator(&e, 0.1, 1.8).unwrap();
        assert!(a.compose(&b).sub(&ab).max_abs() < 1e-9);
        let tr_pres = ab.sub(&SuperOp::identity(2)).trace_annihilation_defect();
        assert!(tr_pres < 1e-10);
    }

    #[test]
    fn rank_deficient_steady_state_is_reported() {
        let la = Lindbladian::new(Operator::zeros(2), vec![(1.0, crate::ops::sigma_minus())]).unwrap();
        let h = crate::ops::sigma_x().kron(&crate::ops::sigma_z());
        let m = CompositeModel::new(la, SuperOp::zeros(2), h, None).unwrap();
        assert!(matches!(
            second_order_cp_gauge(&m, 1.0),
            Err(Error::RankDeficientSteadyState { .. })
        ));
    }

    /// `K^G_2` equals the order-2 part of `W (rho (x) .) W^dagger`, minus
    /// `L_A^+(sum P (rho (x) .) P^dagger)`, plus the `mu` term, built here
    /// independently from `F_k`, `V_k` and `U_kj`.
    #[test]
    fn gauged_second_order_k_has_structured_form() {
        let m = random_model(200, 2, 2);
        let (da, db) = (2, 2);
        let z = 1.0;
        let cg = second_order_cp_gauge(&m, z).unwrap();
        let e0 = eliminate(&m, 2, &GaugeSeq::zero(2)).unwrap();
        let eg = gauge_transform(&e0, &cg.gauge, 0.1).unwrap();
        let rho = m.steady_a().clone();
        let rinv = linalg::inv(&rho.view()).unwrap();
        let gi = m.group_inverse();
        let s_of = |x: &Operator| x.sub(&rho.scale(x.trace()));
        let terms = m.terms();
        let nk = terms.len();
        let f = &cg.f_ops;
        let v: Vec<Operator> = f.iter().map(|fk| Operator::wrap(gi.apply(&s_of(&fk.dot(&rho))).mat().dot(&rinv))).collect();
        let expect = |x: &Operator| x.dot(&rho).trace();
        let mut nmat = Operator::zeros(da * db);
        let mut mm = Operator::zeros(da * db);
        for k in 0..nk {
            let (ak, bk) = &terms[k];
            mm = mm.add(&f[k].kron(&bk.dag()));
            let lbk = m.slow().apply_op(&bk.dag()).unwrap();
            nmat = nmat.add(&v[k].kron(&lbk).scale(I));
            for j in 0..nk {
                let (_, bj) = &terms[j];
                let zjk = cg.gamma[[j, k]] * (z / 2.0);
                let ukj = Operator::wrap(gi.apply(&s_of(&ak.dag().dot(&f[j]).dot(&rho))).mat().dot(&rinv))
                    .sub(&Operator::identity(da).scale(zjk));
                nmat = nmat.add(&ukj.kron(&bk.dot(&bj.dag())));
                nmat = nmat.sub(&v[j].kron(&bj.dag().dot(bk)).scale(expect(&ak.dag())));
            }
        }
        let mut worst: f64 = 0.0;
        for cix in 0..db * db {
            let e = Operator::unit(db, cix % db, cix / db);
            let x = rho.kron(&e);
            let mut want = nmat.dot(&x).add(&x.dot(&nmat.dag())).add(&mm.dot(&x).dot(&mm.dag()));
            for (w, l) in m.fast().jumps() {
                let lw = l.scale(c(w.sqrt(), 0.0));
                let mut p = Operator::zeros(da * db);
                for k in 0..nk {
                    p = p.add(&lw.dot(&f[k]).sub(&f[k].dot(&lw)).kron(&terms[k].1.dag()));
                }
                let y = p.dot(&x).dot(&p.dag());
                let ly = map_a_blocks(y.mat(), da, db, |b| gi.apply(&Operator::wrap(b)).into_mat());
                want = want.sub(&Operator::wrap(ly));
            }
            for k in 0..nk {
                for j in 0..nk {
                    let t = rho.kron(&terms[k].1.dag().dot(&e).dot(&terms[j].1));
                    want = want.add(&t.scale(cg.mu[[k, j]]));
                }
            }
            let got = eg.k(2).apply_op(&e).unwrap();
            worst = worst.max(got.dist(&want));
        }
        assert!(worst < 1e-12, "{worst:e}");
    }
}
