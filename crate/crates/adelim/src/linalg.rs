//! Dense complex linear-algebra helpers on top of ndarray / LAPACK.

use ndarray::{s, Array1, Array2, ArrayView2, Axis, ShapeBuilder};
use ndarray_linalg::{Eig, EigValsh, Eigh, Inverse, OperationNorm, JobSvd, SVD, SVDDC, UPLO};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type Mat = Array2<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn eye(n: usize) -> Mat {
    Array2::eye(n)
}

pub fn dagger(a: &ArrayView2<C64>) -> Mat {
    a.t().mapv(|z| z.conj())
}

pub fn trace(a: &ArrayView2<C64>) -> C64 {
    a.diag().sum()
}

/// Kronecker product with the first factor as the slow (outer) index.
pub fn kron(a: &ArrayView2<C64>, b: &ArrayView2<C64>) -> Mat {
    let (ar, ac) = a.dim();
    let (br, bc) = b.dim();
    let mut out = Array2::zeros((ar * br, ac * bc));
    for i in 0..ar {
        for j in 0..ac {
            let aij = a[[i, j]];
            if aij == ZERO {
                continue;
            }
            let mut blk = out.slice_mut(s![i * br..(i + 1) * br, j * bc..(j + 1) * bc]);
            blk.zip_mut_with(b, |o, &bv| *o = aij * bv);
        }
    }
    out
}

pub fn hermitize(a: &ArrayView2<C64>) -> Mat {
    (a.to_owned() + dagger(a)) * c(0.5, 0.0)
}

/// Largest elementwise deviation from Hermiticity.
pub fn hermiticity_defect(a: &ArrayView2<C64>) -> f64 {
    let mut m: f64 = 0.0;
    let n = a.nrows();
    for i in 0..n {
        for j in 0..n {
            m = m.max((a[[i, j]] - a[[j, i]].conj()).norm());
        }
    }
    m
}

pub fn max_abs(a: &ArrayView2<C64>) -> f64 {
    a.iter().fold(0.0, |m, z| m.max(z.norm()))
}

pub fn fro_norm(a: &ArrayView2<C64>) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn spectral_norm(a: &ArrayView2<C64>) -> Result<f64> {
    if a.is_empty() {
        return Ok(0.0);
    }
    // Thin matrices: go through the small Gram matrix.
    let (r, cdim) = a.dim();
    if r > 4 * cdim || cdim > 4 * r {
        let g = if r > cdim {
            dagger(a).dot(a)
        } else {
            a.dot(&dagger(a))
        };
        let w = g.eigvalsh(UPLO::Lower)?;
        return Ok(w.iter().cloned().fold(0.0, f64::max).max(0.0).sqrt());
    }
    let (_, sv, _) = a.to_owned().svd(false, false)?;
    Ok(sv.iter().cloned().fold(0.0, f64::max))
}

/// Thin SVD `a = U diag(s) V^dagger`, returned as `(U, s, V^dagger)`.
pub fn svd(a: &ArrayView2<C64>) -> Result<(Mat, Array1<f64>, Mat)> {
    let mut f = Array2::zeros(a.raw_dim().f());
    f.assign(a);
    let (u, sv, vt) = f.svddc(JobSvd::Some)?;
    match (u, vt) {
        (Some(u), Some(vt)) => Ok((u, sv, vt)),
        _ => Err(Error::Linalg("SVD did not return singular vectors".into())),
    }
}

pub fn inv(a: &ArrayView2<C64>) -> Result<Mat> {
    Ok(a.to_owned().inv()?)
}

/// 1-norm condition number estimate via an explicit inverse.
pub fn cond1(a: &ArrayView2<C64>) -> Result<f64> {
    let ai = inv(a)?;
    Ok(a.opnorm_one()? * ai.opnorm_one()?)
}

/// Right eigen-decomposition (unsorted), columns of the second output are eigenvectors.
pub fn eig(a: &ArrayView2<C64>) -> Result<(Array1<C64>, Mat)> {
    Ok(a.to_owned().eig()?)
}

/// Eigenvalues of the Hermitian part, ascending.
pub fn eigvalsh(a: &ArrayView2<C64>) -> Result<Array1<f64>> {
    Ok(hermitize(a).eigvalsh(UPLO::Lower)?)
}

/// Eigen-decomposition of the Hermitian part, ascending eigenvalues.
pub fn eigh(a: &ArrayView2<C64>) -> Result<(Array1<f64>, Mat)> {
    // ndarray-linalg conjugates the eigenvectors of row-major complex input.
    let h = hermitize(a);
    let mut f = Array2::zeros(h.raw_dim().f());
    f.assign(&h);
    Ok(f.eigh(UPLO::Lower)?)
}

pub fn min_eig_hermitian(a: &ArrayView2<C64>) -> Result<f64> {
    let w = eigvalsh(a)?;
    Ok(w.iter().cloned().fold(f64::INFINITY, f64::min))
}

/// PSD test with the scale-aware tolerance `min eig >= -tol * max(1, ||M||)`.
/// Returns (verdict, min eigenvalue, scale).
pub fn psd_check(a: &ArrayView2<C64>, tol: f64) -> Result<(bool, f64, f64)> {
    let w = eigvalsh(a)?;
    let min = w.iter().cloned().fold(f64::INFINITY, f64::min);
    let norm = w.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let scale = norm.max(1.0);
    Ok((min >= -tol * scale, min, scale))
}

const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];
const THETA13: f64 = 5.371920351148152;

/// Matrix exponential by scaling and squaring with a degree-13 Padé approximant.
pub fn expm(a: &ArrayView2<C64>) -> Result<Mat> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(Error::DimensionMismatch(format!("expm of {}x{}", n, a.ncols())));
    }
    if n == 0 {
        return Ok(Array2::zeros((0, 0)));
    }
    let norm1 = a.opnorm_one()?;
    let s = if norm1 > THETA13 {
        (norm1 / THETA13).log2().ceil() as i32
    } else {
        0
    };
    let a = a.mapv(|z| z / 2f64.powi(s));
    let b = |k: usize| c(PADE13[k], 0.0);
    let id: Mat = eye(n);
    let a2 = a.dot(&a);
    let a4 = a2.dot(&a2);
    let a6 = a4.dot(&a2);
    let u_inner = &a6 * b(13) + &a4 * b(11) + &a2 * b(9);
    let u = a.dot(&(a6.dot(&u_inner) + &a6 * b(7) + &a4 * b(5) + &a2 * b(3) + &id * b(1)));
    let v_inner = &a6 * b(12) + &a4 * b(10) + &a2 * b(8);
    let v = a6.dot(&v_inner) + &a6 * b(6) + &a4 * b(4) + &a2 * b(2) + &id * b(0);
    let p = &v + &u;
    let q = &v - &u;
    let mut r = inv(&q.view())?.dot(&p);
    for _ in 0..s {
        r = r.dot(&r);
    }
    Ok(r)
}

/// Column-wise inner product `<a|b> = sum conj(a_i) b_i`.
pub fn vdot(a: &Array1<C64>, b: &Array1<C64>) -> C64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

/// Stack matrices vertically (rows appended).
pub fn vstack(parts: &[Mat]) -> Mat {
    let views: Vec<_> = parts.iter().map(|p| p.view()).collect();
    ndarray::concatenate(Axis(0), &views).expect("consistent column counts")
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn eigh_returns_right_eigenvectors_of_complex_input() {
        let a = array![[ZERO, c(0.0, 0.5)], [c(0.0, -0.5), c(1.0, 0.0)]];
        let (w, v) = eigh(&a.view()).unwrap();
        for k in 0..2 {
            let r = a.dot(&v.column(k)) - v.column(k).mapv(|z| z * w[k]);
            assert!(r.iter().all(|z| z.norm() < 1e-12), "{r}");
        }
        let (l, r) = eig(&a.view()).unwrap();
        for k in 0..2 {
            let res = a.dot(&r.column(k)) - r.column(k).mapv(|z| z * l[k]);
            assert!(res.iter().all(|z| z.norm() < 1e-12), "{res}");
        }
    }

    #[test]
    fn expm_of_diagonal() {
        let a = array![[c(1.0, 0.0), ZERO], [ZERO, c(-2.0, 3.0)]];
        let e = expm(&a.view()).unwrap();
        assert!((e[[0, 0]] - c(1.0f64.exp(), 0.0)).norm() < 1e-13);
        assert!((e[[1, 1]] - c(-2.0, 3.0).exp()).norm() < 1e-13);
        assert!(e[[0, 1]].norm() < 1e-15);
    }

    #[test]
    fn expm_of_rotation_generator_large_norm() {
        let w = 40.0;
        let a = array![[ZERO, c(-w, 0.0)], [c(w, 0.0), ZERO]];
        let e = expm(&a.view()).unwrap();
        assert!((e[[0, 0]].re - w.cos()).abs() < 1e-11);
        assert!((e[[1, 0]].re - w.sin()).abs() < 1e-11);
    }

    #[test]
    fn expm_of_nilpotent_is_finite_series() {
        let a = array![[ZERO, c(2.0, 1.0)], [ZERO, ZERO]];
        let e = expm(&a.view()).unwrap();
        assert!((e[[0, 1]] - c(2.0, 1.0)).norm() < 1e-14);
        assert!((e[[0, 0]] - ONE).norm() < 1e-14);
    }

    #[test]
    fn kron_layout() {
        let a = array![[ONE, c(2.0, 0.0)], [c(3.0, 0.0), c(4.0, 0.0)]];
        let b = array![[ZERO, ONE], [ONE, ZERO]];
        let k = kron(&a.view(), &b.view());
        assert_eq!(k[[0, 1]], ONE);
        assert_eq!(k[[1, 2]], c(2.0, 0.0));
        assert_eq!(k[[3, 2]], c(4.0, 0.0));
    }

    #[test]
    fn spectral_norm_thin_and_square_agree() {
        let a = array![[c(3.0, 0.0), ZERO], [ZERO, c(0.0, -4.0)]];
        assert!((spectral_norm(&a.view()).unwrap() - 4.0).abs() < 1e-12);
        let tall = ndarray::concatenate(Axis(0), &[a.view(); 5]).unwrap();
        let expect = 4.0 * 5f64.sqrt();
        assert!((spectral_norm(&tall.view()).unwrap() - expect).abs() < 1e-12);
    }
}
