//! Damped oscillator coupled to a slow system through a Jaynes-Cummings interaction.
//!
//! The oscillator (subsystem A) evolves under
//! `L_A = -i Delta_A (a^dag a)^x + gamma (1 + n_th) D[a] + gamma n_th D[a^dag]`
//! and couples to subsystem B through `-i g (a^dag (x) B + a (x) B^dag)^x`, with
//! `B = s-` for the qubit. Closed forms describe the untruncated oscillator;
//! numerical checks keep Fock levels `0..=n_max`.

use ndarray::{s, Array2};

use crate::cp::{wpg_spectrum_feasible, WpgVerdict};
use crate::elimination::{eliminate, CompositeModel, Expansion, GaugeSeq};
use crate::error::{Error, Result};
use crate::linalg::{self, c, Mat, C64, I, ONE, ZERO};
use crate::ops;
use crate::spectral::Lindbladian;
use crate::superop::{
    commutator_superop, dissipator_superop, sandwich_supermatrix, LinearMap, Operator, SuperOp,
};

pub const DEFAULT_N_MAX: usize = 40;

/// Model parameters; `g`, `gamma` and `delta_a` share one time unit.
#[derive(Clone, Debug, PartialEq)]
pub struct JCParams {
    pub g: f64,
    pub gamma: f64,
    pub delta_a: f64,
    pub n_th: f64,
    pub n_max: usize,
}

impl JCParams {
    pub fn new(g: f64, gamma: f64, delta_a: f64, n_th: f64, n_max: usize) -> Result<Self> {
        let p = Self {
            g,
            gamma,
            delta_a,
            n_th,
            n_max,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0) {
            return Err(Error::InvalidInput("gamma must be positive".into()));
        }
        if !(self.n_th >= 0.0) || !self.n_th.is_finite() {
            return Err(Error::InvalidInput(format!("n_th = {} must be >= 0", self.n_th)));
        }
        if !self.g.is_finite() || !self.delta_a.is_finite() {
            return Err(Error::InvalidInput("g and delta_a must be finite".into()));
        }
        if self.n_max < 2 {
            return Err(Error::InvalidInput(format!("n_max = {} must be >= 2", self.n_max)));
        }
        Ok(())
    }

    pub fn with_n_max(&self, n_max: usize) -> Self {
        Self {
            n_max,
            ..self.clone()
        }
    }

    /// `|g| / gamma`.
    pub fn epsilon(&self) -> f64 {
        self.g.abs() / self.gamma
    }

    /// Signed series variable `g / gamma` used by the engine runs.
    pub fn series_variable(&self) -> f64 {
        self.g / self.gamma
    }

    /// `gamma + 2 i Delta_A`.
    pub fn gamma_bar(&self) -> C64 {
        c(self.gamma, 2.0 * self.delta_a)
    }

    pub fn n_plus(&self) -> f64 {
        self.n_th
    }

    pub fn n_minus(&self) -> f64 {
        1.0 + self.n_th
    }

    /// Truncated `L_A`.
    pub fn oscillator(&self) -> Lindbladian {
        let a = ops::destroy(self.n_max);
        let h = ops::number(self.n_max).scale(c(self.delta_a, 0.0));
        let jumps = vec![
            (self.gamma * self.n_minus(), a.clone()),
            (self.gamma * self.n_plus(), a.dag()),
        ];
        Lindbladian::new(h, jumps).expect("valid by construction")
    }

    /// `(n_th / (1 + n_th))^{a^dag a}`, normalized on the truncated space.
    pub fn thermal_state(&self) -> Operator {
        let q = self.n_th / (1.0 + self.n_th);
        let w: Vec<f64> = (0..=self.n_max).map(|k| q.powi(k as i32)).collect();
        let z: f64 = w.iter().sum();
        ops::diag(&w.iter().map(|x| x / z).collect::<Vec<_>>())
    }

    /// Thermal population of the highest kept Fock level.
    pub fn top_population(&self) -> f64 {
        let q = self.n_th / (1.0 + self.n_th);
        let z: f64 = (0..=self.n_max).map(|k| q.powi(k as i32)).sum();
        q.powi(self.n_max as i32) / z
    }

    pub fn check_truncation(&self, trunc_tol: f64) -> Result<()> {
        let population = self.top_population();
        if population > trunc_tol {
            return Err(Error::TruncationTooSmall { population });
        }
        Ok(())
    }

    /// Engine model in units of `gamma`: fast part `L_A / gamma`, slow part `L_B`,
    /// `H_int = a^dag (x) B + a (x) B^dag`. The series variable is `g / gamma`.
    pub fn composite_model(&self, b: &Operator, l_b: &SuperOp) -> Result<CompositeModel> {
        if l_b.dim() != b.dim() {
            return Err(Error::DimensionMismatch("L_B and B act on different spaces".into()));
        }
        let fast = self.oscillator().scaled(1.0 / self.gamma)?;
        let a = ops::destroy(self.n_max);
        let terms = vec![(a.clone(), b.clone()), (a.dag(), b.dag())];
        let h = a.dag().kron(b).add(&a.kron(&b.dag()));
        CompositeModel::new(fast, l_b.clone(), h, Some(terms))
    }

    /// Oscillator-qubit model, `B = s-` and `L_B = 0`.
    pub fn qubit_model(&self) -> Result<CompositeModel> {
        self.composite_model(&ops::sigma_minus(), &SuperOp::zeros(2))
    }
}

/// `|Delta_A| / gamma` at which the fourth-order dephasing rate changes sign.
pub fn dephasing_sign_threshold() -> f64 {
    (2.0 * 3f64.sqrt() - 3.0).sqrt() / 2.0
}

/// Rates of the qubit generator through fourth order in `g`.
#[derive(Clone, Debug, PartialEq)]
pub struct FourthOrderCoeffs {
    pub omega_b4: f64,
    pub gamma_minus4: f64,
    pub gamma_plus4: f64,
    pub gamma_phi4: f64,
    pub b_minus: C64,
    pub b_plus: C64,
    /// Second-order parts of `omega_B`, `gamma_-`, `gamma_+`.
    pub omega_b2: f64,
    pub gamma_minus2: f64,
    pub gamma_plus2: f64,
}

impl FourthOrderCoeffs {
    /// `-i (omega_B / 2) sz^x + gamma_- D[s-] + gamma_+ D[s+] + gamma_phi D[sz]`.
    pub fn generator(&self) -> SuperOp {
        qubit_generator(self.omega_b4, self.gamma_minus4, self.gamma_plus4, self.gamma_phi4)
    }

    pub fn second_order_generator(&self) -> SuperOp {
        qubit_generator(self.omega_b2, self.gamma_minus2, self.gamma_plus2, 0.0)
    }
}

fn qubit_generator(omega: f64, gm: f64, gp: f64, gphi: f64) -> SuperOp {
    commutator_superop(&ops::sigma_z())
        .scale(c(0.0, -omega / 2.0))
        .add(&dissipator_superop(&ops::sigma_minus()).scale(c(gm, 0.0)))
        .add(&dissipator_superop(&ops::sigma_plus()).scale(c(gp, 0.0)))
        .add(&dissipator_superop(&ops::sigma_z()).scale(c(gphi, 0.0)))
}

pub fn fourth_order_coeffs(p: &JCParams) -> FourthOrderCoeffs {
    let (g, gam) = (p.g, p.gamma);
    let gb = p.gamma_bar();
    let gb2 = gb.norm_sqr();
    let (np, nm) = (p.n_plus(), p.n_minus());
    let g2 = g * g;
    let g4 = g2 * g2;
    let cross = c(1.0, 8.0 * gam * p.delta_a / gb2) * (8.0 * g4 * np * nm) / (gb.conj() * gb2);
    let b = |n: f64| c(2.0 * g2 * n, 0.0) / gb + c(8.0 * g4 * n * n, 0.0) / (gb * gb * gb) + cross;
    let (b_minus, b_plus) = (b(nm), b(np));
    let x = 2.0 * p.delta_a / gam;
    let x2 = x * x;
    let gamma_phi4 =
        -8.0 * g4 * np * nm * (3.0 - 6.0 * x2 - x2 * x2) / (gam.powi(3) * (1.0 + x2).powi(3));
    FourthOrderCoeffs {
        omega_b4: (b_minus + b_plus).im,
        gamma_minus4: 2.0 * b_minus.re,
        gamma_plus4: 2.0 * b_plus.re,
        gamma_phi4,
        b_minus,
        b_plus,
        omega_b2: -4.0 * p.delta_a * g2 * (nm + np) / gb2,
        gamma_minus2: 4.0 * g2 * gam * nm / gb2,
        gamma_plus2: 4.0 * g2 * gam * np / gb2,
    }
}

/// Rates read off a qubit generator in the basis `{I, sx, sy, sz} / sqrt 2`.
#[derive(Clone, Debug)]
pub struct QubitRates {
    /// `M_ij = tr(P_i L(P_j))`.
    pub pauli: Mat,
    pub omega_b: f64,
    pub gamma_minus: f64,
    pub gamma_plus: f64,
    pub gamma_phi: f64,
    pub inv_t1: f64,
    pub inv_t2: f64,
    pub rz_over_t1: f64,
}

pub fn pauli_matrix(l: &SuperOp) -> Result<Mat> {
    if l.dim() != 2 {
        return Err(Error::DimensionMismatch(format!("qubit generator expected, got side {}", l.dim())));
    }
    let basis: Vec<Operator> = ops::paulis()
        .iter()
        .map(|p| p.scale(c(std::f64::consts::FRAC_1_SQRT_2, 0.0)))
        .collect();
    let mut m = Array2::zeros((4, 4));
    for j in 0..4 {
        let lj = l.apply_op(&basis[j])?;
        for i in 0..4 {
            m[[i, j]] = basis[i].dag().dot(&lj).trace();
        }
    }
    Ok(m)
}

pub fn qubit_rates(l: &SuperOp) -> Result<QubitRates> {
    let m = pauli_matrix(l)?;
    let inv_t2 = -m[[1, 1]].re;
    let inv_t1 = -m[[3, 3]].re;
    let rz_over_t1 = m[[3, 0]].re;
    Ok(QubitRates {
        omega_b: m[[2, 1]].re,
        gamma_minus: (inv_t1 - rz_over_t1) / 2.0,
        gamma_plus: (inv_t1 + rz_over_t1) / 2.0,
        gamma_phi: (inv_t2 - inv_t1 / 2.0) / 2.0,
        inv_t1,
        inv_t2,
        rz_over_t1,
        pauli: m,
    })
}

/// Engine elimination of the oscillator-qubit model without gauge.
pub fn engine_expansion(p: &JCParams, order: usize) -> Result<Expansion> {
    eliminate(&p.qubit_model()?, order, &GaugeSeq::zero(2))
}

/// Physical generator `gamma sum_n (g/gamma)^n Ls_n`.
pub fn engine_generator(p: &JCParams, exp: &Expansion) -> SuperOp {
    exp.ls_sum(p.series_variable(), exp.order())
        .scale(c(p.gamma, 0.0))
}

pub fn engine_rates(p: &JCParams) -> Result<QubitRates> {
    let exp = engine_expansion(p, 4)?;
    qubit_rates(&engine_generator(p, &exp))
}

/// Deviations of `rates` from the closed form, ordered as
/// `(omega_B, gamma_-, gamma_+, gamma_phi)`. Each is relative to
/// `max(|closed form|, 1e-4 |gamma_-|)`, since `omega_B` vanishes at `Delta_A = 0`.
pub fn relative_residuals(cf: &FourthOrderCoeffs, rates: &QubitRates) -> [f64; 4] {
    let floor = 1e-4 * cf.gamma_minus4.abs();
    let rel = |want: f64, got: f64| (got - want).abs() / want.abs().max(floor);
    [
        rel(cf.omega_b4, rates.omega_b),
        rel(cf.gamma_minus4, rates.gamma_minus),
        rel(cf.gamma_plus4, rates.gamma_plus),
        rel(cf.gamma_phi4, rates.gamma_phi),
    ]
}

/// Engine rates at `n_max` and `2 n_max`.
#[derive(Clone, Debug)]
pub struct TruncationDrift {
    pub coarse: QubitRates,
    pub fine: QubitRates,
    /// Largest entry of the difference of the two Pauli matrices.
    pub drift: f64,
}

pub fn truncation_drift(p: &JCParams) -> Result<TruncationDrift> {
    let coarse = engine_rates(p)?;
    let fine = engine_rates(&p.with_n_max(2 * p.n_max))?;
    let drift = linalg::max_abs(&(&coarse.pauli - &fine.pauli).view());
    Ok(TruncationDrift {
        coarse,
        fine,
        drift,
    })
}

/// The similarity map `W_A` that diagonalizes `L_A` in Fock matrix units.
#[derive(Clone, Debug)]
pub struct WTransform {
    pub n_max: usize,
    pub gamma_bar: C64,
    pub w: SuperOp,
    pub w_inv: SuperOp,
    /// `W_A L_A W_A^{-1}`.
    pub m_a: SuperOp,
}

/// Builds `exp(-n_th a^T (x) a^dag) exp(a^* (x) a)` and its inverse by dense
/// exponentials of the truncated supermatrices.
pub fn w_transform(p: &JCParams, trunc_tol: f64) -> Result<WTransform> {
    p.validate()?;
    p.check_truncation(trunc_tol)?;
    let a = ops::destroy(p.n_max);
    let down = sandwich_supermatrix(&a, &a.dag())?;
    let up = sandwich_supermatrix(&a.dag(), &a)?;
    let e = |s: &SuperOp, f: f64| -> Result<Mat> { linalg::expm(&(s.mat() * c(f, 0.0)).view()) };
    let w = e(&up, -p.n_th)?.dot(&e(&down, 1.0)?);
    let w_inv = e(&down, -1.0)?.dot(&e(&up, p.n_th)?);
    let d = p.n_max + 1;
    let w = SuperOp::new(d, w)?;
    let w_inv = SuperOp::new(d, w_inv)?;
    let m_a = w.compose(&p.oscillator().superop()).compose(&w_inv);
    Ok(WTransform {
        n_max: p.n_max,
        gamma_bar: p.gamma_bar(),
        w,
        w_inv,
        m_a,
    })
}

impl WTransform {
    /// `lambda_{m,n} = -(gamma_bar m + gamma_bar^* n) / 2`.
    pub fn eigenvalue(&self, m: usize, n: usize) -> C64 {
        -(self.gamma_bar * m as f64 + self.gamma_bar.conj() * n as f64) / 2.0
    }

    /// `W_A^{-1}(|0><0|)`.
    pub fn steady_state(&self) -> Result<Operator> {
        self.w_inv.apply_op(&Operator::unit(self.n_max + 1, 0, 0))
    }

    /// Largest deviation of `M_A` from `diag(lambda_{m,n})` on the block of
    /// matrix units with `m, n <= cutoff`. Truncation errors enter at the top
    /// Fock level and are amplified by `W_A`, so only a low block is meaningful.
    pub fn diagonal_defect(&self, cutoff: usize) -> f64 {
        let d = self.n_max + 1;
        let k = cutoff.min(self.n_max);
        let units: Vec<(usize, usize)> = (0..=k).flat_map(|n| (0..=k).map(move |m| (m, n))).collect();
        let mut worst: f64 = 0.0;
        for &(m, n) in &units {
            let col = m + d * n;
            for &(mr, nr) in &units {
                let row = mr + d * nr;
                let expect = if row == col { self.eigenvalue(m, n) } else { ZERO };
                worst = worst.max((self.m_a.mat()[[row, col]] - expect).norm());
            }
        }
        worst
    }

    /// Residuals of the four relations `W(a W^{-1}(O)) = a O + n_th O a`, ...,
    /// compared on Fock levels `0..=cutoff`.
    pub fn similarity_defects(&self, n_th: f64, o: &Operator, cutoff: usize) -> Result<[f64; 4]> {
        let a = ops::destroy(self.n_max);
        let ad = a.dag();
        let x = self.w_inv.apply_op(o)?;
        let conj = |y: Operator| self.w.apply_op(&y);
        let lhs = [
            conj(a.dot(&x))?,
            conj(x.dot(&ad))?,
            conj(ad.dot(&x))?,
            conj(x.dot(&a))?,
        ];
        let n = c(n_th, 0.0);
        let n1 = c(1.0 + n_th, 0.0);
        let rhs = [
            a.dot(o).add(&o.dot(&a).scale(n)),
            o.dot(&ad).add(&ad.dot(o).scale(n)),
            ad.dot(o).scale(n1).add(&o.dot(&ad)),
            o.dot(&a).scale(n1).add(&a.dot(o)),
        ];
        let k = cutoff.min(self.n_max) + 1;
        let mut out = [0.0; 4];
        for i in 0..4 {
            let diff = lhs[i].mat() - rhs[i].mat();
            out[i] = linalg::max_abs(&diff.slice(s![..k, ..k]));
        }
        Ok(out)
    }
}

/// One term `|m><n| (x) T(rho) + h.c.` of a closed-form `J_n`.
#[derive(Clone, Debug)]
pub struct FockTerm {
    pub m: usize,
    pub n: usize,
    pub map: SuperOp,
}

/// Closed-form elimination in the `W_A` frame, `L_s = sum_n g^n L_{s,n}`.
#[derive(Clone, Debug)]
pub struct AppCExpansion {
    pub y10: C64,
    pub y20: C64,
    pub y11: C64,
    pub b_l: SuperOp,
    pub b_d: SuperOp,
    pub b_r: SuperOp,
    pub b_u: SuperOp,
    /// `ls[n] = L_{s,n}` for `n = 0..=4`, `ls[0] = 0`.
    pub ls: Vec<SuperOp>,
    /// `j[n]` for `n = 1..=3`; `j[0]` is `|0><0| (x) rho` and kept empty.
    /// `j[3]` omits the terms with `|m><n|`, `m + n > 1`.
    pub j: Vec<Vec<FockTerm>>,
}

/// `X -> T(X) + T(X^dag)^dag`.
fn with_hc(t: &SuperOp) -> SuperOp {
    let h = SuperOp::from_fn(t.dim(), |x| {
        t.apply_op(&x.dag()).expect("dimension checked").dag()
    });
    t.add(&h)
}

pub fn appc_recursion(p: &JCParams, b: &Operator, l_b: &SuperOp) -> Result<AppCExpansion> {
    p.validate()?;
    let db = b.dim();
    if l_b.dim() != db {
        return Err(Error::DimensionMismatch("L_B and B act on different spaces".into()));
    }
    let n = c(p.n_th, 0.0);
    let n1 = c(1.0 + p.n_th, 0.0);
    let bd = b.dag();
    let b_l = SuperOp::from_fn(db, |o| o.dot(&bd).sub(&bd.dot(o)).scale(I));
    let b_d = SuperOp::from_fn(db, |o| o.dot(b).sub(&b.dot(o)).scale(I));
    let b_r = SuperOp::from_fn(db, |o| o.dot(b).scale(n).sub(&b.dot(o).scale(n1)).scale(I));
    let b_u = SuperOp::from_fn(db, |o| bd.dot(o).scale(n).sub(&o.dot(&bd).scale(n1)).scale(-I));
    let gb = p.gamma_bar();
    let y = |m: f64, k: f64| c(2.0, 0.0) / (gb * m + gb.conj() * k);
    let (y10, y20, y11) = (y(1.0, 0.0), y(2.0, 0.0), y(1.0, 1.0));
    let comm = |x: &SuperOp, z: &SuperOp| x.compose(z).sub(&z.compose(x));

    let lb_br = comm(l_b, &b_r);
    let lb_lb_br = comm(l_b, &lb_br);
    let br_bl = b_l.compose(&b_r);
    let ls2 = with_hc(&br_bl.scale(y10));
    let ls3 = with_hc(&b_l.compose(&lb_br).scale(y10 * y10));
    let ls4_raw = b_l
        .compose(&lb_lb_br)
        .scale(y10 * y10 * y10)
        .add(&b_l.compose(&b_l).compose(&b_r).compose(&b_r).scale(2.0 * y10 * y10 * y20))
        .add(&b_d.compose(&b_l).compose(&b_u).compose(&b_r).scale(y10.norm_sqr() * y11))
        .add(&b_l.compose(&b_d).compose(&b_u).compose(&b_r).scale(y10 * y10 * y11))
        .sub(&b_l.compose(&b_r).compose(&ls2).scale(y10 * y10));
    let ls4 = with_hc(&ls4_raw);

    let term = |m, k, map: SuperOp| FockTerm { m, n: k, map };
    let j1 = vec![term(1, 0, b_r.scale(y10))];
    let j2 = vec![
        term(1, 0, lb_br.scale(y10 * y10)),
        term(2, 0, b_r.compose(&b_r).scale(2f64.sqrt() * y10 * y20)),
        term(1, 1, b_u.compose(&b_r).scale(y10 * y11)),
    ];
    let j3 = vec![
        term(1, 0, lb_lb_br.scale(y10 * y10 * y10)),
        term(1, 0, b_l.compose(&b_r).compose(&b_r).scale(2.0 * y10 * y10 * y20)),
        term(0, 1, b_l.compose(&b_u).compose(&b_r).scale(y10.norm_sqr() * y11)),
        term(1, 0, b_d.compose(&b_u).compose(&b_r).scale(y10 * y10 * y11)),
        term(1, 0, b_r.compose(&ls2).scale(-y10 * y10)),
    ];
    Ok(AppCExpansion {
        y10,
        y20,
        y11,
        b_l,
        b_d,
        b_r,
        b_u,
        ls: vec![SuperOp::zeros(db), l_b.clone(), ls2, ls3, ls4],
        j: vec![Vec::new(), j1, j2, j3],
    })
}

impl AppCExpansion {
    pub fn dim_b(&self) -> usize {
        self.b_l.dim()
    }

    /// `sum_{n<=4} g^n L_{s,n}`.
    pub fn ls_sum(&self, g: f64) -> SuperOp {
        self.ls
            .iter()
            .enumerate()
            .fold(SuperOp::zeros(self.dim_b()), |acc, (k, l)| {
                acc.add(&l.scale(c(g.powi(k as i32), 0.0)))
            })
    }

    /// `J_order` as a map into the oscillator truncated at `n_max` tensored with B.
    pub fn j_map(&self, order: usize, n_max: usize) -> Result<LinearMap> {
        if order >= self.j.len() {
            return Err(Error::InvalidInput(format!("J_{order} is not available")));
        }
        let terms = &self.j[order];
        if terms.iter().any(|t| t.m.max(t.n) > n_max) {
            return Err(Error::InvalidInput(format!("n_max = {n_max} too small for J_{order}")));
        }
        let da = n_max + 1;
        let db = self.dim_b();
        Ok(LinearMap::from_fn(db, da * db, |rho| {
            if order == 0 {
                return Operator::unit(da, 0, 0).kron(rho);
            }
            let mut out = Operator::zeros(da * db);
            for t in terms {
                let e = Operator::unit(da, t.m, t.n);
                let x = t.map.apply_op(rho).expect("dimension checked");
                let y = t.map.apply_op(&rho.dag()).expect("dimension checked");
                out = out.add(&e.kron(&x)).add(&e.kron(&y).dag());
            }
            out
        }))
    }
}

/// Applies a superoperator on the first tensor factor of `x` (index `a * db + b`).
pub fn apply_on_a(sup: &SuperOp, x: &Mat, db: usize) -> Result<Mat> {
    let da = sup.dim();
    if x.nrows() != da * db || x.ncols() != da * db {
        return Err(Error::DimensionMismatch("operator does not factor as A (x) B".into()));
    }
    let mut out = Array2::zeros(x.raw_dim());
    for b in 0..db {
        for bp in 0..db {
            let blk = Operator::new(x.slice(s![b..;db, bp..;db]).to_owned())?;
            let y = sup.apply_op(&blk)?;
            out.slice_mut(s![b..;db, bp..;db]).assign(y.mat());
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct BlochSummary {
    pub t1: f64,
    pub t2: f64,
    pub rz: f64,
    /// `1/DeltaT = 1/T1 - 1/T2`; infinite when the two rates coincide.
    pub delta_t: f64,
}

/// Evidence that `e^{L_s t}` maps the Bloch ball into itself.
#[derive(Clone, Debug, PartialEq)]
pub struct ContractionCertificate {
    pub delta_t_positive: bool,
    /// `gamma_- gamma_+ - 4 gamma_phi^2`.
    pub rate_margin: f64,
    /// Largest `d r^2 / dt` over the sampled unit Bloch vectors.
    pub max_dr2_dt: f64,
    pub grid_points: usize,
    pub passes: bool,
}

#[derive(Clone, Debug)]
pub struct BlochAnalysis {
    pub summary: BlochSummary,
    pub certificate: ContractionCertificate,
    pub coeffs: FourthOrderCoeffs,
}

impl BlochAnalysis {
    /// Eigenvalues `{1, e^{-t/T2 + i w t}, e^{-t/T2 - i w t}, e^{-t/T1}}` of `e^{L_s t}`.
    pub fn spectrum(&self, t: f64) -> [C64; 4] {
        let w = self.coeffs.omega_b4;
        let s2 = c(-t / self.summary.t2, w * t).exp();
        [ONE, s2, s2.conj(), c((-t / self.summary.t1).exp(), 0.0)]
    }

    pub fn kraus_feasibility(&self, t: f64) -> Result<WpgVerdict> {
        wpg_spectrum_feasible(self.spectrum(t))
    }

    /// `d r^2/dt` on the unit sphere at height `r_z`, in completed-square form.
    pub fn dr2_dt(&self, rz: f64) -> f64 {
        let BlochSummary { t1, rz: r_inf, delta_t, .. } = self.summary;
        let c4 = &self.coeffs;
        let margin = c4.gamma_minus4 * c4.gamma_plus4 - 4.0 * c4.gamma_phi4 * c4.gamma_phi4;
        let shift = rz - delta_t * r_inf / (2.0 * t1);
        -(2.0 / delta_t) * (shift * shift + delta_t * delta_t * margin)
    }
}

pub fn bloch_analysis(coeffs: &FourthOrderCoeffs, grid: usize) -> Result<BlochAnalysis> {
    let inv_t1 = coeffs.gamma_minus4 + coeffs.gamma_plus4;
    let inv_t2 = inv_t1 / 2.0 + 2.0 * coeffs.gamma_phi4;
    if !(inv_t1 > 0.0) || !(inv_t2 > 0.0) {
        return Err(Error::UnstableReducedDynamics {
            t1: 1.0 / inv_t1,
            t2: 1.0 / inv_t2,
        });
    }
    let t1 = 1.0 / inv_t1;
    let summary = BlochSummary {
        t1,
        t2: 1.0 / inv_t2,
        rz: (coeffs.gamma_plus4 - coeffs.gamma_minus4) * t1,
        delta_t: 1.0 / (inv_t1 - inv_t2),
    };
    // Bloch velocity from the generator itself: dr_k/dt = M_k0 + sum_j M_kj r_j.
    let m = pauli_matrix(&coeffs.generator())?;
    let grid = grid.max(2);
    let mut max_dr2_dt = f64::NEG_INFINITY;
    let mut count = 0;
    for i in 0..grid {
        let theta = std::f64::consts::PI * i as f64 / (grid - 1) as f64;
        for j in 0..grid {
            let phi = 2.0 * std::f64::consts::PI * j as f64 / grid as f64;
            let r = [theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()];
            let mut dr2 = 0.0;
            for k in 0..3 {
                let mut v = m[[k + 1, 0]].re;
                for l in 0..3 {
                    v += m[[k + 1, l + 1]].re * r[l];
                }
                dr2 += 2.0 * r[k] * v;
            }
            max_dr2_dt = max_dr2_dt.max(dr2);
            count += 1;
        }
    }
    let rate_margin =
        coeffs.gamma_minus4 * coeffs.gamma_plus4 - 4.0 * coeffs.gamma_phi4 * coeffs.gamma_phi4;
    let delta_t_positive = summary.delta_t > 0.0;
    let certificate = ContractionCertificate {
        delta_t_positive,
        rate_margin,
        max_dr2_dt,
        grid_points: count,
        passes: delta_t_positive && rate_margin > 0.0 && max_dr2_dt < 0.0,
    };
    Ok(BlochAnalysis {
        summary,
        certificate,
        coeffs: coeffs.clone(),
    })
}

/// Non-Lindblad qubit generator that is similar to a pure rotation.
#[derive(Clone, Debug)]
pub struct ToySimilarity {
    pub q0: f64,
    pub l0: SuperOp,
    /// `e^{-q0 D[sx+sy]} L0 e^{q0 D[sx+sy]}`.
    pub l0_prime: SuperOp,
    pub omega0_prime: f64,
    /// Largest entry of `L0' + i (omega0'/2) sz^x`.
    pub residual: f64,
    /// Largest distance between the sorted spectra of `L0` and `L0'`.
    pub spectrum_defect: f64,
    pub lindblad_before: bool,
    pub lindblad_after: bool,
}

pub fn toy_similarity_example(omega0: f64, gamma0: f64) -> Result<ToySimilarity> {
    if !(omega0 > 2.0 * gamma0.abs()) {
        return Err(Error::StabilityViolated { omega0, gamma0 });
    }
    let q0 = (2.0 * gamma0 / omega0).atanh() / 4.0;
    let l0 = commutator_superop(&ops::sigma_z())
        .scale(c(0.0, -omega0 / 2.0))
        .add(&dissipator_superop(&ops::sigma_x()).scale(c(gamma0, 0.0)))
        .sub(&dissipator_superop(&ops::sigma_y()).scale(c(gamma0, 0.0)));
    let s = dissipator_superop(&ops::sigma_x().add(&ops::sigma_y()));
    let fwd = linalg::expm(&(s.mat() * c(q0, 0.0)).view())?;
    let bwd = linalg::expm(&(s.mat() * c(-q0, 0.0)).view())?;
    let l0_prime = SuperOp::new(2, bwd.dot(l0.mat()).dot(&fwd))?;
    let omega0_prime = (omega0 * omega0 - 4.0 * gamma0 * gamma0).sqrt();
    let target = commutator_superop(&ops::sigma_z()).scale(c(0.0, -omega0_prime / 2.0));
    let residual = l0_prime.sub(&target).max_abs();
    let spectrum_defect = sorted_spectrum_distance(&l0, &l0_prime)?;
    let lindblad_before = crate::cp::is_lindbladian(&l0, crate::cp::DEFAULT_TOL)?.is_lindblad;
    let lindblad_after = crate::cp::is_lindbladian(&l0_prime, crate::cp::DEFAULT_TOL)?.is_lindblad;
    Ok(ToySimilarity {
        q0,
        l0,
        l0_prime,
        omega0_prime,
        residual,
        spectrum_defect,
        lindblad_before,
        lindblad_after,
    })
}

fn sorted_spectrum(s: &SuperOp) -> Result<Vec<C64>> {
    let (w, _) = linalg::eig(&s.mat().view())?;
    let mut v = w.to_vec();
    v.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    Ok(v)
}

/// Largest distance between the spectra of two superoperators sorted by `(Re, Im)`.
pub fn sorted_spectrum_distance(a: &SuperOp, b: &SuperOp) -> Result<f64> {
    let (x, y) = (sorted_spectrum(a)?, sorted_spectrum(b)?);
    Ok(x.iter().zip(&y).map(|(p, q)| (p - q).norm()).fold(0.0, f64::max))
}

/// Second-order assignment maps of the oscillator-qubit model at `Delta_A = 0`.
#[derive(Clone, Debug)]
pub struct SecondOrderAssignment {
    pub rho_a: Operator,
    /// `I - 2i eps (a^dag (x) s- + a (x) s+) - 2 eps^2 (a^dag a - n_th) (x) I`.
    pub w: Operator,
    /// `W - 2 eps^2 I (x) ((1 + n_th) s+ s- + n_th s- s+)`.
    pub w_gauged: Operator,
    /// `4 eps^2 (1 + n_th) D[s-] + 4 eps^2 n_th D[s+]`.
    pub gauge: SuperOp,
    /// Jump part of `gauge` only.
    pub jump_gauge: SuperOp,
    pub k_g0: LinearMap,
    /// `w_gauged (rho_A (x) rho) w_gauged^dag`, the map paired with `gauge`.
    pub k_gauged: LinearMap,
    /// `W (rho_A (x) rho) W^dag`, the map paired with `jump_gauge`.
    pub k_w: LinearMap,
    /// `<0,e| K^{G=0}(|g><g|) |0,e>`.
    pub witness: f64,
    pub min_choi_g0: f64,
    pub min_choi_gauged: f64,
    pub min_choi_w: f64,
}

pub fn second_order_assignment(p: &JCParams) -> Result<SecondOrderAssignment> {
    p.validate()?;
    if p.delta_a != 0.0 {
        return Err(Error::InvalidInput("second-order assignment requires Delta_A = 0".into()));
    }
    let eps = p.series_variable();
    let e2 = eps * eps;
    let n = p.n_th;
    let da = p.n_max + 1;
    let a = ops::destroy(p.n_max);
    let (sm, sp) = (ops::sigma_minus(), ops::sigma_plus());
    let ia = Operator::identity(da);
    let i2 = Operator::identity(2);
    let x = a.dag().kron(&sm).add(&a.kron(&sp));
    let shifted = ops::number(p.n_max).sub(&ia.scale(c(n, 0.0)));
    let w = Operator::identity(2 * da)
        .sub(&x.scale(c(0.0, 2.0 * eps)))
        .sub(&shifted.kron(&i2).scale(c(2.0 * e2, 0.0)));
    let decay = sp.dot(&sm).scale(c(1.0 + n, 0.0)).add(&sm.dot(&sp).scale(c(n, 0.0)));
    let w_gauged = w.sub(&ia.kron(&decay).scale(c(2.0 * e2, 0.0)));
    let gauge = dissipator_superop(&sm)
        .scale(c(4.0 * e2 * (1.0 + n), 0.0))
        .add(&dissipator_superop(&sp).scale(c(4.0 * e2 * n, 0.0)));
    let jump_gauge = sandwich_supermatrix(&sm, &sp)?
        .scale(c(4.0 * e2 * (1.0 + n), 0.0))
        .add(&sandwich_supermatrix(&sp, &sm)?.scale(c(4.0 * e2 * n, 0.0)));
    let rho_a = p.thermal_state();
    let im = ia.kron(&sm);
    let ip = ia.kron(&sp);
    let conj = |u: &Operator, y: &Operator| u.dot(y).dot(&u.dag());
    let k_g0 = LinearMap::from_fn(2, 2 * da, |r| {
        let y = rho_a.kron(r);
        conj(&w, &y)
            .sub(&conj(&im, &y).scale(c(4.0 * e2 * (1.0 + n), 0.0)))
            .sub(&conj(&ip, &y).scale(c(4.0 * e2 * n, 0.0)))
    });
    let k_gauged = LinearMap::from_fn(2, 2 * da, |r| conj(&w_gauged, &rho_a.kron(r)));
    let k_w = LinearMap::from_fn(2, 2 * da, |r| conj(&w, &rho_a.kron(r)));
    // Basis (e, g): |0, e> has index 0.
    let witness = k_g0.apply_op(&ops::proj_g())?.mat()[[0, 0]].re;
    Ok(SecondOrderAssignment {
        min_choi_g0: k_g0.choi().min_eig()?,
        min_choi_gauged: k_gauged.choi().min_eig()?,
        min_choi_w: k_w.choi().min_eig()?,
        rho_a,
        w,
        w_gauged,
        gauge,
        jump_gauge,
        k_g0,
        k_gauged,
        k_w,
        witness,
    })
}
