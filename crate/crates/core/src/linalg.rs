//! Small complex linear-algebra helpers on top of nalgebra.
//!
//! Eigen and singular vectors returned from here carry a fixed phase: the
//! first non-negligible component of every vector is real and positive.

use nalgebra::{Cholesky, DMatrix, SymmetricEigen, SVD};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub type CMat = DMatrix<Complex64>;

/// Default relative tolerance below which eigenvalues of a PSD matrix count as zero.
pub const DEFAULT_RANK_TOL: f64 = 1e-9;

pub fn c64(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// One circularly symmetric complex Gaussian sample with unit variance.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn random_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMat {
    CMat::from_fn(rows, cols, |_, _| complex_gaussian(rng))
}

/// Random matrix with orthonormal columns (QR of a Gaussian matrix).
pub fn random_orthonormal<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMat {
    assert!(cols <= rows, "cannot fit {cols} orthonormal columns in {rows} dimensions");
    if cols == 0 {
        return CMat::zeros(rows, 0);
    }
    let a = random_matrix(rows, cols, rng);
    a.qr().q()
}

pub fn hstack(blocks: &[&CMat]) -> CMat {
    let rows = blocks.first().map_or(0, |b| b.nrows());
    let cols = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = CMat::zeros(rows, cols);
    let mut c0 = 0;
    for b in blocks {
        assert_eq!(b.nrows(), rows, "hstack row mismatch");
        out.view_mut((0, c0), (rows, b.ncols())).copy_from(*b);
        c0 += b.ncols();
    }
    out
}

pub fn vstack(blocks: &[&CMat]) -> CMat {
    let cols = blocks.first().map_or(0, |b| b.ncols());
    let rows = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = CMat::zeros(rows, cols);
    let mut r0 = 0;
    for b in blocks {
        assert_eq!(b.ncols(), cols, "vstack column mismatch");
        out.view_mut((r0, 0), (b.nrows(), cols)).copy_from(*b);
        r0 += b.nrows();
    }
    out
}

pub fn block_diag(blocks: &[CMat]) -> CMat {
    let rows = blocks.iter().map(|b| b.nrows()).sum();
    let cols = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = CMat::zeros(rows, cols);
    let (mut r0, mut c0) = (0, 0);
    for b in blocks {
        out.view_mut((r0, c0), (b.nrows(), b.ncols())).copy_from(b);
        r0 += b.nrows();
        c0 += b.ncols();
    }
    out
}

/// Rotate every column so its first non-negligible entry is real positive.
pub fn normalize_phases(m: &mut CMat) {
    for mut col in m.column_iter_mut() {
        let scale = col.iter().fold(0.0_f64, |a, z| a.max(z.norm()));
        if scale == 0.0 {
            continue;
        }
        if let Some(lead) = col.iter().copied().find(|z| z.norm() > 1e-12 * scale) {
            let rot = lead.conj() / lead.norm();
            col.iter_mut().for_each(|z| *z *= rot);
        }
    }
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.
///
/// The input is symmetrized first, so tiny non-Hermitian roundoff is harmless.
pub fn hermitian_eigen(a: &CMat) -> (Vec<f64>, CMat) {
    assert!(a.is_square(), "hermitian_eigen needs a square matrix");
    let n = a.nrows();
    if n == 0 {
        return (Vec::new(), CMat::zeros(0, 0));
    }
    let h = (a + a.adjoint()) * c64(0.5, 0.0);
    let eig = SymmetricEigen::new(h);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = eig.eigenvectors.select_columns(&order);
    normalize_phases(&mut vectors);
    (values, vectors)
}

/// Singular value decomposition with singular values sorted descending.
#[derive(Debug, Clone)]
pub struct SortedSvd {
    /// Left singular vectors, `rows x min(rows, cols)`.
    pub left: CMat,
    pub singular_values: Vec<f64>,
    /// Right singular vectors, `cols x min(rows, cols)`.
    pub right: CMat,
}

pub fn sorted_svd(a: &CMat) -> Result<SortedSvd> {
    let (r, c) = a.shape();
    if r == 0 || c == 0 {
        return Ok(SortedSvd {
            left: CMat::zeros(r, 0),
            singular_values: Vec::new(),
            right: CMat::zeros(c, 0),
        });
    }
    let svd = SVD::try_new(a.clone(), true, true, f64::EPSILON, 0)
        .ok_or_else(|| Error::Numerical("SVD did not converge".into()))?;
    let u = svd.u.expect("requested U");
    let v = svd.v_t.expect("requested V^T").adjoint();
    let k = svd.singular_values.len();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    let singular_values = order.iter().map(|&i| svd.singular_values[i]).collect();
    let mut left = u.select_columns(&order);
    let mut right = v.select_columns(&order);
    // Fix the phase on the left vectors and carry the same rotation to the
    // right ones so that A = F diag(s) M^H still holds.
    for j in 0..k {
        let col = left.column(j);
        let scale = col.iter().fold(0.0_f64, |a, z| a.max(z.norm()));
        if scale == 0.0 {
            continue;
        }
        if let Some(lead) = col.iter().copied().find(|z| z.norm() > 1e-12 * scale) {
            let rot = lead.conj() / lead.norm();
            left.column_mut(j).iter_mut().for_each(|z| *z *= rot);
            right.column_mut(j).iter_mut().for_each(|z| *z *= rot);
        }
    }
    Ok(SortedSvd {
        left,
        singular_values,
        right,
    })
}

pub fn singular_values(a: &CMat) -> Vec<f64> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Vec::new();
    }
    let mut s: Vec<f64> = a.singular_values().iter().copied().collect();
    s.sort_by(|x, y| y.total_cmp(x));
    s
}

/// Numerical rank: singular values above `tol * sigma_max`.
pub fn numerical_rank(a: &CMat, tol: f64) -> usize {
    let s = singular_values(a);
    let Some(&top) = s.first() else { return 0 };
    if top == 0.0 {
        return 0;
    }
    s.iter().filter(|&&v| v > tol * top).count()
}

/// Orthonormal basis of the numerical null space of a Hermitian PSD matrix.
///
/// Eigenvectors whose eigenvalue is at most `rank_tol * lambda_max` are kept,
/// ordered by ascending eigenvalue. A zero matrix returns a full unitary basis.
pub fn null_space_basis(q: &CMat, rank_tol: f64) -> CMat {
    let (values, vectors) = hermitian_eigen(q);
    let lambda_max = values.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    if lambda_max == 0.0 {
        return vectors;
    }
    let keep: Vec<usize> = values
        .iter()
        .enumerate()
        .filter(|(_, &v)| v <= rank_tol * lambda_max)
        .map(|(i, _)| i)
        .collect();
    vectors.select_columns(&keep)
}

/// `ln det` of a Hermitian positive definite matrix.
pub fn log_det_hpd(a: &CMat) -> Result<f64> {
    if a.nrows() == 0 {
        return Ok(0.0);
    }
    let h = (a + a.adjoint()) * c64(0.5, 0.0);
    let chol = Cholesky::new(h)
        .ok_or_else(|| Error::Numerical("matrix is not positive definite".into()))?;
    Ok(chol.l_dirty().diagonal().iter().map(|z| 2.0 * z.re.ln()).sum())
}

/// Largest deviation of `A^H A` from the identity.
pub fn orthonormality_error(a: &CMat) -> f64 {
    let g = a.adjoint() * a;
    let eye = CMat::identity(g.nrows(), g.ncols());
    (g - eye).iter().fold(0.0_f64, |m, z| m.max(z.norm()))
}

pub fn frob_sq(a: &CMat) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn svd_reconstructs_and_sorts() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for (r, c) in [(2, 4), (3, 3), (4, 2)] {
            let a = random_matrix(r, c, &mut rng);
            let svd = sorted_svd(&a).unwrap();
            assert!(svd.singular_values.windows(2).all(|w| w[0] >= w[1]));
            let s = CMat::from_diagonal(&nalgebra::DVector::from_iterator(
                svd.singular_values.len(),
                svd.singular_values.iter().map(|&x| c64(x, 0.0)),
            ));
            let back = &svd.left * s * svd.right.adjoint();
            assert!((back - &a).norm() <= 1e-12 * a.norm());
            assert!(orthonormality_error(&svd.left) < 1e-12);
            assert!(orthonormality_error(&svd.right) < 1e-12);
        }
    }

    #[test]
    fn phases_are_fixed() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let a = random_matrix(3, 3, &mut rng);
        let q = &a * a.adjoint();
        let (_, v) = hermitian_eigen(&q);
        for col in v.column_iter() {
            let lead = col.iter().find(|z| z.norm() > 1e-12).unwrap();
            assert!(lead.im.abs() < 1e-14 && lead.re > 0.0);
        }
    }

    #[test]
    fn null_space_of_zero_is_everything() {
        let q = CMat::zeros(4, 4);
        let t = null_space_basis(&q, DEFAULT_RANK_TOL);
        assert_eq!(t.shape(), (4, 4));
        assert!(orthonormality_error(&t) < 1e-14);
    }

    #[test]
    fn null_space_of_rank_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let r = random_matrix(4, 1, &mut rng);
        let q = &r * r.adjoint();
        let t = null_space_basis(&q, DEFAULT_RANK_TOL);
        assert_eq!(t.ncols(), 3);
        assert!((&q * &t).norm() < 1e-12 * q.norm());
    }

    #[test]
    fn log_det_matches_eigenvalues() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = random_matrix(3, 3, &mut rng);
        let q = &a * a.adjoint() + CMat::identity(3, 3);
        let (vals, _) = hermitian_eigen(&q);
        let expect: f64 = vals.iter().map(|v| v.ln()).sum();
        assert!((log_det_hpd(&q).unwrap() - expect).abs() < 1e-12);
    }

    #[test]
    fn stacking_shapes() {
        let a = CMat::from_element(2, 1, c64(1.0, 0.0));
        let b = CMat::from_element(2, 3, c64(2.0, 0.0));
        assert_eq!(hstack(&[&a, &b]).shape(), (2, 4));
        let c = CMat::from_element(1, 3, c64(3.0, 0.0));
        assert_eq!(vstack(&[&b, &c]).shape(), (3, 3));
        assert_eq!(block_diag(&[a, c]).shape(), (3, 4));
    }
}
