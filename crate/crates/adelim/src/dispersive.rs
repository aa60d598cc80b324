//! Dispersively coupled qudit and driven-dissipative qubit.
//!
//! The qubit (subsystem A) evolves under
//! `L_A = -i(Omega/2 sx + Delta/2 sz)^x + kappa D[s-]` and couples to the
//! qudit (subsystem B) through `i sum_m chi_m (V_A (x) Pi_m)^x` with `V_A = sz`.
//! Everything is computed in the frame where the qudit free evolution vanishes.
//! Because `L_tot(A (x) Pi_mn) = L_A^(m,n)(A) (x) Pi_mn`, the slow manifold is
//! obtained exactly from one 4x4 eigenproblem per pair `(m, n)`.

use ndarray::{Array1, Array2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::elimination::CompositeModel;
use crate::error::{Error, Result};
use crate::linalg::{self, c, Mat, C64, I, ONE, ZERO};
use crate::ops;
use crate::random;
use crate::spectral::{self, Lindbladian};
use crate::superop::{sandwich_supermatrix, unvec, vec_of, LinearMap, Operator, SuperOp};

/// Model parameters; all rates share one time unit.
#[derive(Clone, Debug, PartialEq)]
pub struct DispersiveParams {
    pub d: usize,
    pub chis: Vec<f64>,
    pub omega: f64,
    pub delta: f64,
    pub kappa: f64,
}

impl DispersiveParams {
    pub fn new(chis: Vec<f64>, omega: f64, delta: f64, kappa: f64) -> Result<Self> {
        let p = Self {
            d: chis.len(),
            chis,
            omega,
            delta,
            kappa,
        };
        p.validate()?;
        Ok(p)
    }

    /// Equally spaced shifts `(0, chi, 2 chi, ...)`.
    pub fn ladder(d: usize, chi: f64, omega: f64, delta: f64, kappa: f64) -> Result<Self> {
        Self::new((0..d).map(|m| m as f64 * chi).collect(), omega, delta, kappa)
    }

    pub fn validate(&self) -> Result<()> {
        if self.d < 2 || self.chis.len() != self.d {
            return Err(Error::InvalidInput(format!(
                "need d >= 2 and d shifts (d = {}, {} shifts)",
                self.d,
                self.chis.len()
            )));
        }
        if !(self.kappa > 0.0) {
            return Err(Error::InvalidInput("kappa must be positive".into()));
        }
        Ok(())
    }

    /// Characteristic coupling `max |chi_m|`.
    pub fn chi_scale(&self) -> f64 {
        self.chis.iter().fold(0.0f64, |m, x| m.max(x.abs()))
    }

    /// Timescale ratio `chi / kappa`.
    pub fn epsilon(&self) -> f64 {
        self.chi_scale() / self.kappa
    }

    /// `chi_m / chi`; zeros when all shifts vanish.
    pub fn chi_ratios(&self) -> Vec<f64> {
        let s = self.chi_scale();
        if s == 0.0 {
            return vec![0.0; self.d];
        }
        self.chis.iter().map(|x| x / s).collect()
    }

    pub fn qubit(&self) -> Lindbladian {
        let h = ops::sigma_x()
            .scale(c(self.omega / 2.0, 0.0))
            .add(&ops::sigma_z().scale(c(self.delta / 2.0, 0.0)));
        Lindbladian::new(h, vec![(self.kappa, ops::sigma_minus())]).expect("Hermitian by construction")
    }

    /// Supermatrix of `L_A^(m,n)(X) = L_A(X) + i(chi_m V X - chi_n X V)`.
    pub fn block_generator(&self, m: usize, n: usize) -> SuperOp {
        let v = ops::sigma_z();
        let id = Operator::identity(2);
        let left = sandwich_supermatrix(&v, &id).expect("2x2");
        let right = sandwich_supermatrix(&id, &v).expect("2x2");
        self.qubit()
            .superop()
            .add(&left.scale(I * self.chis[m]))
            .sub(&right.scale(I * self.chis[n]))
    }

    /// The same system as a [`CompositeModel`] in units of `kappa`, with series
    /// variable `epsilon()` and `H_int = -V_A (x) diag(chi_m / chi)`.
    pub fn composite_model(&self) -> Result<CompositeModel> {
        let fast = self.qubit().scaled(1.0 / self.kappa)?;
        let b = ops::diag(&self.chi_ratios());
        let a = ops::sigma_z().scale(c(-1.0, 0.0));
        let h = a.kron(&b);
        CompositeModel::new(fast, SuperOp::zeros(self.d), h, Some(vec![(a, b)]))
    }
}

/// Slow eigen-data of every block `L_A^(m,n)`.
#[derive(Clone, Debug)]
pub struct SlowSpectrum {
    pub d: usize,
    /// `lambda_{m,n}`.
    pub lambdas: Mat,
    /// `qs[m][n] = Q_{m,n}`, normalized to unit trace.
    pub qs: Vec<Vec<Operator>>,
    /// `max Re(-lambda_{m,n})`.
    pub slow_rate_max: f64,
    /// `min_{k>1} Re(-lambda^(k)_{m,n})`.
    pub fast_rate_min: f64,
    pub gap_ok: bool,
}

pub fn slow_spectrum(p: &DispersiveParams) -> Result<SlowSpectrum> {
    p.validate()?;
    let d = p.d;
    let mut lambdas = Array2::zeros((d, d));
    let mut qs = vec![Vec::with_capacity(d); d];
    let mut slow_rate_max = f64::NEG_INFINITY;
    let mut fast_rate_min = f64::INFINITY;
    for m in 0..d {
        for n in 0..d {
            let s = p.block_generator(m, n);
            let (w, v) = linalg::eig(&s.mat().view())?;
            let mut idx: Vec<usize> = (0..w.len()).collect();
            idx.sort_by(|&a, &b| w[b].re.total_cmp(&w[a].re));
            let (k0, k1) = (idx[0], idx[1]);
            let scale = linalg::max_abs(&s.mat().view()).max(1e-300);
            if (w[k0] - w[k1]).norm() < 1e-8 * scale {
                return Err(Error::NearDegenerate {
                    value: w[k0],
                    condition: f64::INFINITY,
                });
            }
            let q = unvec(&v.column(k0).to_owned(), 2);
            let tr = linalg::trace(&q.view());
            if tr.norm() < 1e-10 {
                return Err(Error::TraceNormalizationFailure { trace_abs: tr.norm() });
            }
            lambdas[[m, n]] = w[k0];
            qs[m].push(Operator::wrap(q / tr));
            slow_rate_max = slow_rate_max.max(-w[k0].re);
            for &k in &idx[1..] {
                fast_rate_min = fast_rate_min.min(-w[k].re);
            }
        }
    }
    Ok(SlowSpectrum {
        d,
        lambdas,
        qs,
        slow_rate_max,
        fast_rate_min,
        gap_ok: slow_rate_max < fast_rate_min,
    })
}

/// Assignment map and reduced generator in the partial-trace parametrization.
#[derive(Clone, Debug)]
pub struct ExactMaps {
    /// `K(rho) = sum Q_{m,n} (x) Pi_m rho Pi_n`.
    pub k: LinearMap,
    /// `L_s(rho) = sum lambda_{m,n} Pi_m rho Pi_n`.
    pub ls: SuperOp,
}

pub fn exact_maps(s: &SlowSpectrum) -> Result<ExactMaps> {
    if !s.gap_ok {
        return Err(Error::AssumptionViolated(format!(
            "no timescale separation: slow rate {} >= fast rate {}",
            s.slow_rate_max, s.fast_rate_min
        )));
    }
    let d = s.d;
    let mut k = Array2::zeros((4 * d * d, d * d));
    let mut ls = Array2::zeros((d * d, d * d));
    for m in 0..d {
        for n in 0..d {
            let col = m + d * n;
            let e = Operator::unit(d, m, n);
            k.column_mut(col)
                .assign(&vec_of(&s.qs[m][n].kron(&e).view()));
            ls[[col, col]] = s.lambdas[[m, n]];
        }
    }
    Ok(ExactMaps {
        k: LinearMap::new(d, 2 * d, k)?,
        ls: SuperOp::new(d, ls)?,
    })
}

/// Largest column norm of `L_tot K - K L_s` over the matrix units of the qudit.
pub fn exact_invariance_residual(p: &DispersiveParams, maps: &ExactMaps) -> Result<f64> {
    let model = p.composite_model()?;
    let ltot = model.total_superop(p.epsilon()).into_mat() * c(p.kappa, 0.0);
    let r = ltot.dot(maps.k.mat()) - maps.k.mat().dot(maps.ls.mat());
    Ok(r.columns()
        .into_iter()
        .map(|col| col.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt())
        .fold(0.0, f64::max))
}

/// The `d x (d-1)` matrix whose column `k` has `q(k+2) = 1/((k+2)(k+1))` in
/// rows `0..=k` and `-1/(k+2)` in row `k+1`.
pub fn s_matrix(d: usize) -> Array2<f64> {
    let mut s = Array2::zeros((d, d.saturating_sub(1)));
    for k in 0..d.saturating_sub(1) {
        let kk = (k + 2) as f64;
        for r in 0..=k {
            s[[r, k]] = 1.0 / (kk * (kk - 1.0));
        }
        s[[k + 1, k]] = -1.0 / kk;
    }
    s
}

#[derive(Clone, Debug)]
pub struct LindbladCriterion {
    /// `S^T lambda S`, Hermitian.
    pub stls: Mat,
    /// Its eigenvalues, descending.
    pub eigenvalues: Vec<f64>,
    pub is_lindblad: bool,
    /// Closed-form determinant proxy, only for `d = 3`.
    pub d_value: Option<f64>,
}

pub fn lindblad_criterion(s: &SlowSpectrum) -> Result<LindbladCriterion> {
    lindblad_criterion_of(&s.lambdas)
}

/// Criterion for an arbitrary coefficient matrix `lambda`.
pub fn lindblad_criterion_of(lambdas: &Mat) -> Result<LindbladCriterion> {
    let d = lambdas.nrows();
    if d < 2 || lambdas.ncols() != d {
        return Err(Error::InvalidInput("coefficient matrix must be square with d >= 2".into()));
    }
    let sm = s_matrix(d).mapv(|x| c(x, 0.0));
    let stls = linalg::hermitize(&sm.t().dot(lambdas).dot(&sm).view());
    let (ok, _, _) = linalg::psd_check(&stls.view(), 1e-10)?;
    let mut eigenvalues = linalg::eigvalsh(&stls.view())?.to_vec();
    eigenvalues.reverse();
    let d_value = (d == 3).then(|| d_criterion(lambdas[[0, 1]], lambdas[[0, 2]], lambdas[[1, 2]]));
    Ok(LindbladCriterion {
        stls,
        eigenvalues,
        is_lindblad: ok,
        d_value,
    })
}

/// `D = |l12 + l13 + l23|^2 - 2(|l12|^2 + |l13|^2 + |l23|^2) - 4 Im(l12) Im(l23)`.
pub fn d_criterion(l12: C64, l13: C64, l23: C64) -> f64 {
    (l12 + l13 + l23).norm_sqr() - 2.0 * (l12.norm_sqr() + l13.norm_sqr() + l23.norm_sqr())
        - 4.0 * l12.im * l23.im
}

/// One qutrit grid point of the `D` map.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DScanPoint {
    pub omega: f64,
    pub delta: f64,
    pub d_value: f64,
    pub gap_ok: bool,
}

/// `D` at drive `omega` and detuning `delta` for three shifts `chis`.
pub fn d_scan_point(chis: &[f64; 3], omega: f64, delta: f64, kappa: f64) -> Result<DScanPoint> {
    let p = DispersiveParams::new(chis.to_vec(), omega, delta, kappa)?;
    let s = slow_spectrum(&p)?;
    let l = &s.lambdas;
    Ok(DScanPoint {
        omega,
        delta,
        d_value: d_criterion(l[[0, 1]], l[[0, 2]], l[[1, 2]]),
        gap_ok: s.gap_ok,
    })
}

/// Fourth-order coefficients of the reduced generator, in units of `kappa`.
///
/// With `B = diag(chi_m / chi)` and `eps = chi / kappa`,
/// `L_s / kappa = -i eps x1 B rho + eps^2 x2 [B rho, B] + i eps^3 [x3 B rho B + y3 rho B^2, B]
///  + eps^4 [x4 B^2 rho B - y4 B^3 rho, B] + h.c.`
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FourthOrderDispersive {
    pub x1: C64,
    pub x2: C64,
    pub x3: C64,
    pub y3: C64,
    pub x4: C64,
    pub y4: C64,
    pub c1: f64,
    pub c2: C64,
    pub c3: C64,
    pub c_b: f64,
}

pub fn fourth_order_coefficients(p: &DispersiveParams) -> Result<FourthOrderDispersive> {
    p.validate()?;
    let la = p.qubit().scaled(1.0 / p.kappa)?.superop();
    let spec = spectral::diagonalize(&la)?;
    let nu: Vec<C64> = spec.eigenvalues.clone();
    let tr0 = spec.right[0].trace();
    let x: Vec<Mat> = spec
        .right
        .iter()
        .enumerate()
        .map(|(a, r)| if a == 0 { r.mat() / tr0 } else { r.mat().clone() })
        .collect();
    let xb: Vec<Mat> = spec
        .left
        .iter()
        .enumerate()
        .map(|(a, l)| if a == 0 { l.mat() * tr0.conj() } else { l.mat().clone() })
        .collect();
    let v = vec_of(&ops::sigma_z().view());
    let me = |m: &Mat| linalg::vdot(&vec_of(&m.view()), &v);

    let r = 1..4;
    let v0 = me(&x[0]);
    let va: Vec<C64> = (0..4).map(|a| me(&x[a])).collect();
    let v0a: Vec<C64> = (0..4).map(|a| me(&x[0].dot(&xb[a]))).collect();
    let va0: Vec<C64> = (0..4).map(|a| me(&xb[a].dot(&x[0]))).collect();
    // vab[a][b] = (V)_{a, b-bar}, vba[b][a] = (V)_{b-bar, a}
    let vab: Vec<Vec<C64>> = (0..4)
        .map(|a| (0..4).map(|b| me(&x[a].dot(&xb[b]))).collect())
        .collect();
    let vba: Vec<Vec<C64>> = (0..4)
        .map(|b| (0..4).map(|a| me(&xb[b].dot(&x[a]))).collect())
        .collect();
    let cj = |z: C64| z.conj();
    let re2 = |z: C64| c(2.0 * z.re, 0.0);

    let x1 = -v0;
    let x2: C64 = -r.clone().map(|a| cj(v0a[a]) * va[a] / cj(nu[a])).sum::<C64>();
    if !(x2.re > 0.0) {
        return Err(Error::AssumptionViolated(format!("Re(x2) = {} is not positive", x2.re)));
    }

    let mut x3 = -v0 * r.clone().map(|a| cj(v0a[a]) * va[a] / cj(nu[a] * nu[a])).sum::<C64>();
    let mut y3 = -v0 * r.clone().map(|a| cj(va0[a]) * va[a] / cj(nu[a] * nu[a])).sum::<C64>();
    for a in r.clone() {
        for b in r.clone() {
            let w = ONE / (nu[a] * cj(nu[b]));
            x3 += v0a[a] * cj(vab[a][b]) * va[b] * w;
            y3 += v0a[a] * cj(vba[b][a]) * va[b] * w;
        }
    }
    let x3 = -x3;

    let mut x4 = ZERO;
    let mut y4 = ZERO;
    let mut a1 = ZERO;
    let mut a2 = ZERO;
    for a in r.clone() {
        let f = x2 / (nu[a] * nu[a]);
        x4 += re2(v0a[a] * cj(va[a]) * f) + va0[a] * cj(va[a]) * f;
        y4 += va0[a] * cj(va[a]) * f;
        a1 += v0a[a] * cj(va[a]) * f;
        a2 += va0[a] * cj(va[a]) * f;
        let n3 = cj(nu[a]).powi(3);
        x4 -= v0 * v0 * (c(2.0, 0.0) * cj(v0a[a]) * va[a] / n3 + v0a[a] * cj(va[a]) / nu[a].powi(3));
        y4 -= v0 * v0 * cj(v0a[a]) * va[a] / n3;
        for b in r.clone() {
            let den = cj(nu[a]) * nu[b];
            let w = (cj(nu[a]) + nu[b]) / (den * den);
            x4 += re2(v0 * cj(v0a[a]) * vab[a][b] * cj(va[b]) * w)
                + v0 * cj(v0a[a]) * vba[b][a] * cj(va[b]) * w;
            y4 += v0 * cj(v0a[a]) * vba[b][a] * cj(va[b]) * w;
            for g in r.clone() {
                let den3 = cj(nu[a]) * nu[b] * cj(nu[g]);
                x4 -= cj(v0a[a]) * va[g] * (vab[a][b] * cj(vab[b][g]) + vba[b][a] * cj(vba[g][b])) / den3
                    + cj(cj(v0a[a]) * vab[a][b] * cj(vba[g][b]) * va[g] / den3);
                y4 -= cj(v0a[a]) * vba[b][a] * cj(vab[b][g]) * va[g] / den3;
            }
        }
    }
    let x4 = x4 - c(2.0, 0.0) * (re2(a1) + a2);
    let y4 = y4 - c(2.0, 0.0) * a2;

    let c1 = (2.0 * x2.re).sqrt();
    let c2 = I * (y3.conj() - c(2.0 * x3.re, 0.0)) / c1;
    let c3 = -(x4 + y4) / c1;
    let c_b = (2.0 * x4.re - c2.norm_sqr()) / c1.powi(4);
    Ok(FourthOrderDispersive {
        x1,
        x2,
        x3,
        y3,
        x4,
        y4,
        c1,
        c2,
        c3,
        c_b,
    })
}

impl FourthOrderDispersive {
    /// Coefficient of `eps^order` multiplying `Pi_m rho Pi_n` in `L_s / kappa`,
    /// for `B` eigenvalues `bm`, `bn`.
    pub fn series_coefficient(&self, order: usize, bm: f64, bn: f64) -> C64 {
        let f = |x: f64, y: f64| -> C64 {
            match order {
                1 => -I * self.x1 * x,
                2 => self.x2 * (x * y - x * x),
                3 => I * (self.x3 * (x * y * y - x * x * y) + self.y3 * (y * y * y - x * y * y)),
                4 => {
                    self.x4 * (x * x * y * y) - (self.y4 + self.x4) * (x * x * x * y)
                        + self.y4 * x.powi(4)
                }
                _ => ZERO,
            }
        };
        f(bm, bn) + f(bn, bm).conj()
    }

    /// `L_s / kappa` truncated at `eps^4`, as a diagonal supermatrix.
    pub fn series_generator(&self, eps: f64, b: &[f64]) -> SuperOp {
        let d = b.len();
        let mut m = Array2::zeros((d * d, d * d));
        for i in 0..d {
            for j in 0..d {
                m[[i + d * j, i + d * j]] = (1..=4)
                    .map(|n| self.series_coefficient(n, b[i], b[j]) * eps.powi(n as i32))
                    .sum::<C64>();
            }
        }
        SuperOp::wrap(d, m)
    }

    /// `-i[h_B, .] + eps^2 D[l_B] + eps^4 c_B D[l_B^2]`, equal to
    /// [`series_generator`](Self::series_generator) up to `O(eps^5)`.
    pub fn lindblad_rewrite(&self, eps: f64, b: &[f64]) -> SuperOp {
        let pw = |k: i32| -> Vec<f64> { b.iter().map(|x| x.powi(k)).collect() };
        let h: Vec<f64> = (0..b.len())
            .map(|i| {
                eps * self.x1.re * b[i] + eps.powi(2) * self.x2.im * pw(2)[i]
                    + eps.powi(3) * self.y3.re * pw(3)[i]
                    - eps.powi(4) * self.y4.im * pw(4)[i]
            })
            .collect();
        let l: Array1<C64> = (0..b.len())
            .map(|i| self.c1 * b[i] + eps * self.c2 * pw(2)[i] + eps * eps * self.c3 * pw(3)[i])
            .collect();
        let lop = Operator::wrap(Array2::from_diag(&l));
        let l2 = lop.dot(&lop);
        crate::superop::commutator_superop(&ops::diag(&h))
            .scale(-I)
            .add(&crate::superop::dissipator_superop(&lop).scale(c(eps * eps, 0.0)))
            .add(&crate::superop::dissipator_superop(&l2).scale(c(eps.powi(4) * self.c_b, 0.0)))
    }
}

/// One time point of the exact reduced evolution from a separable initial state.
#[derive(Clone, Debug)]
pub struct MasterPoint {
    pub t: f64,
    /// `[T_{B,t}]_{m,n} = tr_A exp(L_A^(m,n) t)(rho_A)`.
    pub t_matrix: Mat,
    /// Forward-difference log-derivative `lambda_{m,n}(t)`.
    pub lambdas: Mat,
    /// Eigenvalues of `S^T lambda(t) S`, descending.
    pub stls_eigs: Vec<f64>,
    pub min_eig_t: f64,
}

/// Exact master-equation coefficients on `t_grid`, with log increments taken
/// over `dt_fd` (the principal log of the ratio unwraps the phase).
pub fn exact_master_equation(
    p: &DispersiveParams,
    rho_a: &Operator,
    t_grid: &[f64],
    dt_fd: f64,
) -> Result<Vec<MasterPoint>> {
    p.validate()?;
    if rho_a.dim() != 2 {
        return Err(Error::DimensionMismatch("qubit state must be 2x2".into()));
    }
    if !(dt_fd > 0.0) || t_grid.iter().any(|t| !(*t >= 0.0)) {
        return Err(Error::InvalidInput("need dt_fd > 0 and t >= 0".into()));
    }
    let d = p.d;
    let v0 = vec_of(&rho_a.view());
    let blocks: Vec<(SuperOp, Mat)> = (0..d * d)
        .map(|k| {
            let s = p.block_generator(k / d, k % d);
            let step = linalg::expm(&(s.mat() * c(dt_fd, 0.0)).view())?;
            Ok((s, step))
        })
        .collect::<Result<_>>()?;
    // <<I| v for a column-stacked 2x2 operator
    let tr = |v: &Array1<C64>| v[0] + v[3];

    let mut out = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        let mut tm = Array2::zeros((d, d));
        let mut lm = Array2::zeros((d, d));
        for (k, (s, step)) in blocks.iter().enumerate() {
            let (m, n) = (k / d, k % d);
            let vt = if t == 0.0 {
                v0.clone()
            } else {
                linalg::expm(&(s.mat() * c(t, 0.0)).view())?.dot(&v0)
            };
            let a = tr(&vt);
            let b = tr(&step.dot(&vt));
            if a.norm() < 1e-12 || b.norm() < 1e-12 {
                return Err(Error::CoefficientZeroCrossing { m, n, t });
            }
            tm[[m, n]] = a;
            lm[[m, n]] = (b / a).ln() / dt_fd;
        }
        let crit = lindblad_criterion_of(&lm)?;
        let min_eig_t = linalg::min_eig_hermitian(&tm.view())?;
        out.push(MasterPoint {
            t,
            t_matrix: tm,
            lambdas: lm,
            stls_eigs: crit.eigenvalues,
            min_eig_t,
        });
    }
    Ok(out)
}

/// Largest `c` such that `c Q_{m,n}` keeps every two-level superposition of
/// `m, n` positive: `1 / sigma_max(Q_mm^{-1/2} Q_mn Q_nn^{-1/2})`. Real and
/// positive; diagonal entries are 1.
pub fn optimal_pair_coefficients(s: &SlowSpectrum) -> Result<Array2<f64>> {
    let d = s.d;
    let inv_sqrt: Vec<Mat> = (0..d)
        .map(|m| {
            let (w, u) = linalg::eigh(&s.qs[m][m].view())?;
            if w[0] <= 1e-12 {
                return Err(Error::RankDeficientSteadyState { min_eig: w[0] });
            }
            let dm = Array2::from_diag(&w.mapv(|x| c(1.0 / x.sqrt(), 0.0)));
            Ok(u.dot(&dm).dot(&linalg::dagger(&u.view())))
        })
        .collect::<Result<_>>()?;
    let mut ct = Array2::ones((d, d));
    for m in 0..d {
        for n in 0..d {
            if m != n {
                let x = inv_sqrt[m].dot(s.qs[m][n].mat()).dot(&inv_sqrt[n]);
                let smax = linalg::spectral_norm(&x.view())?;
                ct[[m, n]] = 1.0 / smax;
            }
        }
    }
    Ok(ct)
}

/// `K(|psi><psi|)` for the diagonal gauge with coefficients `c_mn` (`c_mm = 1`).
pub fn diagonal_gauge_image(s: &SlowSpectrum, coeffs: &Array2<f64>, u: f64, psi: &Array1<C64>) -> Mat {
    let d = s.d;
    let mut out = Array2::zeros((2 * d, 2 * d));
    for m in 0..d {
        for n in 0..d {
            let amp = psi[m] * psi[n].conj();
            if amp == ZERO {
                continue;
            }
            let cmn = if m == n { 1.0 } else { u * coeffs[[m, n]] };
            let q = s.qs[m][n].mat();
            for a in 0..2 {
                for b in 0..2 {
                    out[[a * d + m, b * d + n]] += q[[a, b]] * amp * cmn;
                }
            }
        }
    }
    out
}

/// Deterministic pure qudit states: equal-weight two- and three-level
/// superpositions on an 8-point phase grid, then seeded random states up to `count`.
pub fn state_samples(d: usize, count: usize, seed: u64) -> Vec<Array1<C64>> {
    let phases: Vec<C64> = (0..8)
        .map(|k| C64::from_polar(1.0, std::f64::consts::TAU * k as f64 / 8.0))
        .collect();
    let mut out = Vec::with_capacity(count);
    for m in 0..d {
        for n in m + 1..d {
            for ph in &phases {
                let mut v = Array1::zeros(d);
                v[m] = c(0.5f64.sqrt(), 0.0);
                v[n] = ph * 0.5f64.sqrt();
                out.push(v);
            }
        }
    }
    let w = (1.0 / 3.0f64).sqrt();
    for m in 0..d {
        for n in m + 1..d {
            for l in n + 1..d {
                for p1 in &phases {
                    for p2 in &phases {
                        let mut v = Array1::zeros(d);
                        v[m] = c(w, 0.0);
                        v[n] = p1 * w;
                        v[l] = p2 * w;
                        out.push(v);
                    }
                }
            }
        }
    }
    out.truncate(count);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    while out.len() < count {
        out.push(random::pure_state(&mut rng, d));
    }
    out
}

/// Largest `u` in `(0, 1]`, found by bisection to `u_tol`, such that
/// `K(|psi><psi|) = sum u c_mn Q_{m,n} (x) Pi_m |psi><psi| Pi_n` is positive
/// (min eigenvalue `>= -tol * max(1, ||.||)`) for every sample.
pub fn diagonal_gauge_umax(
    s: &SlowSpectrum,
    ctilde: &Array2<f64>,
    samples: &[Array1<C64>],
    u_tol: f64,
    tol: f64,
) -> Result<f64> {
    if ctilde.iter().any(|x| *x == 0.0) {
        return Err(Error::InvalidInput("pairwise coefficients must be nonzero".into()));
    }
    let feasible = |u: f64| -> Result<bool> {
        for psi in samples {
            let m = diagonal_gauge_image(s, ctilde, u, psi);
            if !linalg::psd_check(&m.view(), tol)?.0 {
                return Ok(false);
            }
        }
        Ok(true)
    };
    if feasible(1.0)? {
        return Ok(1.0);
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    while hi - lo > u_tol {
        let mid = 0.5 * (lo + hi);
        if feasible(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}
