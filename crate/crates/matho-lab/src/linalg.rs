//! Small dense linear-algebra helpers on complex matrices.

use nalgebra::DMatrix;
use num_complex::Complex64;

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;

/// Relative singular-value cutoff used for rank decisions.
pub const RANK_TOL: f64 = 1e-10;

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

pub fn fro(a: &CMat) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Largest singular value.
pub fn op_norm(a: &CMat) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    to_faer(a)
        .singular_values()
        .expect("SVD converges on finite input")
        .first()
        .copied()
        .unwrap_or(0.0)
}

// Spectral work goes through faer: nalgebra's SVD and Hermitian eigensolver return
// inaccurate factors on some small, clustered problems met here.
fn to_faer(a: &CMat) -> faer::Mat<C64> {
    faer::Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)])
}

fn from_faer(a: faer::MatRef<'_, C64>) -> CMat {
    CMat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)])
}

/// `f(a)` for a Hermitian `a` and a real function `f` of its eigenvalues. Returns
/// `None` if `f` refuses an eigenvalue.
fn hermitian_function(a: &CMat, f: impl Fn(f64) -> Option<f64>) -> Option<CMat> {
    if a.is_empty() {
        return Some(a.clone());
    }
    let herm = (a + a.adjoint()).scale(0.5);
    let eig = to_faer(&herm)
        .self_adjoint_eigen(faer::Side::Lower)
        .expect("eigensolver converges on finite input");
    let v = from_faer(eig.U());
    let s = eig.S().column_vector();
    let mut scaled = v.clone();
    for k in 0..v.ncols() {
        let fk = f(s[k].re)?;
        scaled.column_mut(k).scale_mut(fk);
    }
    Some(scaled * v.adjoint())
}

pub fn max_abs(a: &CMat) -> f64 {
    a.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn conj(a: &CMat) -> CMat {
    a.map(|z| z.conj())
}

/// Deviation of `u` from being unitary, `|u* u - I|_F`.
pub fn unitarity_defect(u: &CMat) -> f64 {
    if !u.is_square() {
        return f64::INFINITY;
    }
    fro(&(u.adjoint() * u - identity(u.ncols())))
}

/// Orthonormal bases of the column space of `a` and of its orthogonal complement,
/// from a column-pivoted QR factorization with the full `Q`. Columns whose pivot falls
/// below `rel_tol` times the largest pivot count as rank-deficient.
pub fn range_split(a: &CMat, rel_tol: f64) -> (CMat, CMat) {
    let (m, n) = a.shape();
    if m == 0 || n == 0 {
        return (CMat::zeros(m, 0), identity(m));
    }
    let qr = to_faer(a).col_piv_qr();
    let r = qr.R();
    let top = r[(0, 0)].norm();
    let rank = if top == 0.0 {
        0
    } else {
        (0..m.min(n)).take_while(|&i| r[(i, i)].norm() > rel_tol * top).count()
    };
    let q = from_faer(qr.compute_Q().as_ref());
    (q.columns(0, rank).into_owned(), q.columns(rank, m - rank).into_owned())
}

/// Orthonormal basis of the column space of `a`; see [`range_split`].
pub fn range_basis(a: &CMat, rel_tol: f64) -> CMat {
    range_split(a, rel_tol).0
}

/// Orthonormal basis of the orthogonal complement of the span of the orthonormal columns `q`.
pub fn complement_basis(q: &CMat) -> CMat {
    let (n, r) = q.shape();
    if r >= n {
        return CMat::zeros(n, 0);
    }
    let full = from_faer(to_faer(q).col_piv_qr().compute_Q().as_ref());
    full.columns(r, n - r).into_owned()
}

pub fn projector(q: &CMat) -> CMat {
    q * q.adjoint()
}

/// Moore-Penrose pseudo-inverse with relative cutoff.
pub fn pinv(a: &CMat, rel_tol: f64) -> CMat {
    if a.is_empty() {
        return CMat::zeros(a.ncols(), a.nrows());
    }
    let svd = to_faer(a).thin_svd().expect("SVD converges on finite input");
    let s = svd.S().column_vector();
    let smax = s[0].re;
    let u = from_faer(svd.U());
    let mut v = from_faer(svd.V());
    for k in 0..v.ncols() {
        let sk = s[k].re;
        let inv = if smax > 0.0 && sk > rel_tol * smax { 1.0 / sk } else { 0.0 };
        v.column_mut(k).scale_mut(inv);
    }
    v * u.adjoint()
}

/// Hermitian square root of a Hermitian positive semidefinite matrix.
/// Eigenvalues are clipped at zero; values below `-1e-12` are treated as an error.
pub fn hermitian_sqrt(a: &CMat) -> Option<CMat> {
    hermitian_function(a, |l| (l >= -1e-12).then(|| l.max(0.0).sqrt()))
}

/// Column-major vectorization.
pub fn vec_of(a: &CMat) -> nalgebra::DVector<C64> {
    nalgebra::DVector::from_column_slice(a.as_slice())
}

pub fn unvec(v: &[C64], nrows: usize, ncols: usize) -> CMat {
    CMat::from_column_slice(nrows, ncols, v)
}

/// Kronecker product.
pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn range_and_complement_split_the_space() {
        let a = CMat::from_row_slice(3, 2, &[c(1., 0.), c(2., 0.), c(0., 1.), c(0., 2.), c(0., 0.), c(0., 0.)]);
        let q = range_basis(&a, RANK_TOL);
        assert_eq!(q.ncols(), 1);
        let comp = complement_basis(&q);
        assert_eq!(comp.ncols(), 2);
        assert!(fro(&(q.adjoint() * &comp)) < 1e-14);
    }

    #[test]
    fn sqrt_squares_back() {
        let w = CMat::from_row_slice(2, 2, &[c(0.3, 0.1), c(0.0, 0.2), c(-0.1, 0.0), c(0.25, 0.0)]);
        let d = identity(2) - w.adjoint() * &w;
        let r = hermitian_sqrt(&d).unwrap();
        assert!(fro(&(&r * &r - d)) < 1e-13);
        assert!(hermitian_sqrt(&(-identity(2))).is_none());
    }

    #[test]
    fn spectral_helpers_handle_tiny_entries() {
        // nalgebra's complex SVD gets this projector's spectrum wrong.
        let q = CMat::from_column_slice(
            3,
            1,
            &[c(0.4846711219518668, 0.8746964636637778), c(3.0633e-16, -1.2966e-15), c(0., 0.)],
        );
        let r = identity(3) - &q * q.adjoint();
        assert!((op_norm(&r) - 1.0).abs() < 1e-14);
        assert!(fro(&(pinv(&r, RANK_TOL) - &r)) < 1e-13);
        assert_eq!(complement_basis(&q).ncols(), 2);
    }

    #[test]
    fn pinv_solves_systems_with_repeated_singular_values() {
        // Repeated singular values; eigensolvers that mix degenerate eigenvectors fail here.
        let d = 0.8059266259071795;
        let mut a = CMat::zeros(3, 6);
        a[(0, 0)] = c(1., 0.);
        for i in 0..3 {
            a[(i, 3 + i)] = c(d, 0.);
        }
        assert!(fro(&(&a * pinv(&a, RANK_TOL) - identity(3))) < 1e-13);
    }

    #[test]
    fn pinv_handles_clustered_singular_values() {
        // Defect system [D1^T kron I, I kron D2] with rank-one defects of nearly equal
        // norm; nalgebra's SVD loses about 0.1 in the reconstruction here.
        let e1 = CMat::from_column_slice(
            6,
            1,
            &[
                c(-0.7852587648361404, 0.45341763816423164),
                c(0.1591533092666922, 0.3816805521229888),
                c(-0.06559938235336148, -0.03908668300863801),
                c(0.023112405859697545, -0.019089237110338688),
                c(0.0031694850250169227, 0.0048242280100072735),
                c(0.0025530561842829255, 0.0004180690201390473),
            ],
        );
        let e2 = CMat::from_column_slice(
            4,
            1,
            &[
                c(-0.8959239654194822, 0.1714801059614725),
                c(0.38437344504998255, 0.09145371903207042),
                c(-0.06579717706229832, 0.07918403813029967),
                c(-0.002958622266905929, 0.031517710394331766),
            ],
        );
        let left = kron(&(&e1 * e1.adjoint()).transpose(), &identity(4));
        let right = kron(&identity(6), &(&e2 * e2.adjoint()));
        let mut a = CMat::zeros(24, 48);
        a.view_mut((0, 0), (24, 24)).copy_from(&left);
        a.view_mut((0, 24), (24, 24)).copy_from(&right);
        assert!(fro(&(&a * pinv(&a, RANK_TOL) * &a - &a)) < 1e-12);
    }

    #[test]
    fn hermitian_sqrt_squares_back() {
        let b = CMat::from_row_slice(2, 2, &[c(1., 0.), c(0., 2.), c(0.5, 0.), c(1., -1.)]);
        let a = &b * b.adjoint();
        let r = hermitian_sqrt(&a).unwrap();
        assert!(fro(&(&r * &r - &a)) < 1e-12);
        assert!(hermitian_sqrt(&(-identity(2))).is_none());
    }

    #[test]
    fn pinv_inverts_full_rank() {
        let a = CMat::from_row_slice(2, 2, &[c(2., 0.), c(1., 1.), c(0., 0.), c(3., 0.)]);
        assert!(fro(&(pinv(&a, RANK_TOL) * &a - identity(2))) < 1e-14);
    }
}
