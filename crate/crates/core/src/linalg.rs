//! Dense matrix primitives: column stacking, Kronecker products, Frobenius
//! geometry, generalized inverses and orthogonal projection onto the matrix
//! model spaces `S(G) = { G Ψ Gᵀ : Ψ symmetric }`.
//!
//! Conventions
//! -----------
//! - `vec` stacks columns, so entry `(i, j)` of a `rows×cols` matrix lands at
//!   offset `j·rows + i` (zero based). This is exactly the storage order of
//!   [`nalgebra::DMatrix`].
//! - The estimators never build `p²×p²` Kronecker products. [`kron`] is here
//!   for identities and for brute-force checks at small dimension.
//! - Generalized inverses are Moore–Penrose inverses. The singular value
//!   decomposition is read off the symmetric eigendecomposition of the
//!   dilation `[[0, A], [Aᵀ, 0]]`.
//!   Any reflexive generalized inverse yields the same projector, so the
//!   choice only matters for conditioning.

use std::ops::Deref;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{CovselError, Result};

/// Dense real matrix, column-major.
pub type Mat = DMatrix<f64>;

const EIG_EPS: f64 = 1e-15;
const EIG_MAX_ITER: usize = 10_000;

/// Relative asymmetry tolerated by [`SymMat::new`].
pub const SYMMETRY_TOL: f64 = 1e-10;

/// Square matrix known to be symmetric up to [`SYMMETRY_TOL`].
#[derive(Debug, Clone, PartialEq)]
pub struct SymMat(Mat);

impl SymMat {
    /// Wraps `m` after checking that it is square, finite and symmetric.
    pub fn new(m: Mat) -> Result<Self> {
        if !m.is_square() {
            return Err(CovselError::ShapeMismatch(format!(
                "symmetric matrix must be square, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        if m.iter().any(|x| !x.is_finite()) {
            return Err(CovselError::NonFinite("symmetric matrix"));
        }
        let scale = m.amax();
        let asym = max_asymmetry(&m);
        if asym > SYMMETRY_TOL * (1.0 + scale) {
            return Err(CovselError::NotSymmetric(asym));
        }
        Ok(Self(m))
    }

    /// Returns `(m + mᵀ)/2`.
    pub fn symmetrize(m: &Mat) -> Result<Self> {
        if !m.is_square() {
            return Err(CovselError::ShapeMismatch(format!(
                "cannot symmetrize a {}x{} matrix",
                m.nrows(),
                m.ncols()
            )));
        }
        Ok(Self((m + m.transpose()) * 0.5))
    }

    pub fn zeros(dim: usize) -> Self {
        Self(Mat::zeros(dim, dim))
    }

    pub fn identity(dim: usize) -> Self {
        Self(Mat::identity(dim, dim))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_mat(&self) -> &Mat {
        &self.0
    }

    pub fn into_inner(self) -> Mat {
        self.0
    }

    /// Smallest eigenvalue.
    pub fn min_eigenvalue(&self) -> f64 {
        SymmetricEigen::new(self.0.clone()).eigenvalues.min()
    }
}

impl Deref for SymMat {
    type Target = Mat;

    fn deref(&self) -> &Mat {
        &self.0
    }
}

fn max_asymmetry(m: &Mat) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0_f64;
    for j in 0..n {
        for i in (j + 1)..n {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

/// Orthogonal projector `Π = G (GᵀG)⁻ Gᵀ` onto the column space of a design
/// matrix `G`.
#[derive(Debug, Clone, PartialEq)]
pub struct Projector {
    matrix: SymMat,
    rank: usize,
}

impl Projector {
    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn matrix(&self) -> &SymMat {
        &self.matrix
    }

    /// Identity projector (the full model).
    pub fn identity(dim: usize) -> Self {
        Self {
            matrix: SymMat::identity(dim),
            rank: dim,
        }
    }
}

/// Column-stacking vectorization.
pub fn vec(a: &Mat) -> Vec<f64> {
    a.as_slice().to_vec()
}

/// Inverse of [`vec`].
pub fn unvec(v: &[f64], rows: usize, cols: usize) -> Result<Mat> {
    if rows * cols != v.len() {
        return Err(CovselError::BadUnvecShape {
            len: v.len(),
            rows,
            cols,
        });
    }
    Ok(Mat::from_column_slice(rows, cols, v))
}

/// Kronecker product: the `(i, j)` block of the result is `a[(i, j)]·b`.
pub fn kron(a: &Mat, b: &Mat) -> Mat {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    let mut out = Mat::zeros(ar * br, ac * bc);
    for j in 0..ac {
        for i in 0..ar {
            let aij = a[(i, j)];
            if aij == 0.0 {
                continue;
            }
            let mut block = out.view_mut((i * br, j * bc), (br, bc));
            block.zip_apply(b, |o, x| *o = aij * x);
        }
    }
    out
}

/// Frobenius inner product `⟨A, B⟩ = tr(ABᵀ)`.
pub fn frobenius_inner(a: &Mat, b: &Mat) -> Result<f64> {
    if a.shape() != b.shape() {
        return Err(CovselError::ShapeMismatch(format!(
            "inner product of {:?} and {:?}",
            a.shape(),
            b.shape()
        )));
    }
    Ok(a.dot(b))
}

/// Squared Frobenius norm.
pub fn frobenius_norm_sq(a: &Mat) -> f64 {
    a.norm_squared()
}

/// Default relative singular-value cutoff: `1e-12 · max(rows, cols)`.
pub fn default_rtol(a: &Mat) -> f64 {
    1e-12 * a.nrows().max(a.ncols()) as f64
}

/// Moore–Penrose inverse. Singular values `≤ rtol·σ_max` are treated as zero.
///
/// The result `M` is a reflexive generalized inverse: `AMA = A` and `MAM = M`.
pub fn pseudo_inverse(a: &Mat, rtol: f64) -> Result<Mat> {
    if a.iter().any(|x| !x.is_finite()) {
        return Err(CovselError::NonFinite("pseudo_inverse input"));
    }
    let (m, n) = a.shape();
    if m == 0 || n == 0 {
        return Ok(Mat::zeros(n, m));
    }
    // The dilation [[0, A], [Aᵀ, 0]] has eigenvalues ±σ_i with unit
    // eigenvectors [u_i; v_i]/√2, so M = Σ_{σ_i > cutoff} 2 v_i u_iᵀ / σ_i.
    let mut dilation = Mat::zeros(m + n, m + n);
    dilation.view_mut((0, m), (m, n)).copy_from(a);
    dilation.view_mut((m, 0), (n, m)).copy_from(&a.transpose());
    let eig = SymmetricEigen::try_new(dilation, EIG_EPS, EIG_MAX_ITER)
        .ok_or(CovselError::DecompositionFailed)?;
    let sigma_max = eig.eigenvalues.max();
    let cutoff = rtol * sigma_max;

    let mut out = Mat::zeros(n, m);
    for (k, &s) in eig.eigenvalues.iter().enumerate() {
        if s > cutoff {
            let e = eig.eigenvectors.column(k);
            let u = e.rows(0, m);
            let v = e.rows(m, n);
            out.ger(2.0 / s, &v, &u, 1.0);
        }
    }
    Ok(out)
}

/// Projector onto the column space of `g`.
pub fn projector(g: &Mat) -> Result<Projector> {
    if g.nrows() == 0 || g.ncols() == 0 {
        return Err(CovselError::ShapeMismatch(
            "design matrix must have at least one row and one column".into(),
        ));
    }
    let gram = g.transpose() * g;
    let gram_inv = pseudo_inverse(&gram, default_rtol(&gram))?;
    let pi = g * gram_inv * g.transpose();
    let matrix = SymMat::symmetrize(&pi)?;
    let rank = matrix.trace().round().max(0.0) as usize;
    Ok(Projector { matrix, rank })
}

/// Frobenius projection of `a` onto `S(G)`: `Π · ((A + Aᵀ)/2) · Π`.
pub fn project_to_model_space(a: &Mat, proj: &Projector) -> Result<SymMat> {
    if a.nrows() != proj.dim() || a.ncols() != proj.dim() {
        return Err(CovselError::ShapeMismatch(format!(
            "cannot project a {}x{} matrix with a projector of dim {}",
            a.nrows(),
            a.ncols(),
            proj.dim()
        )));
    }
    let sym = SymMat::symmetrize(a)?;
    let pi = proj.matrix.as_mat();
    SymMat::symmetrize(&(pi * sym.as_mat() * pi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{random_mat, rng};
    use proptest::prelude::*;

    fn rel_err(a: &Mat, b: &Mat) -> f64 {
        (a - b).norm() / b.norm().max(1e-300)
    }

    #[test]
    fn vec_stacks_columns() {
        let a = Mat::from_row_slice(2, 2, &[1.0, 3.0, 2.0, 4.0]);
        assert_eq!(vec(&a), vec![1.0, 2.0, 3.0, 4.0]);
        assert_eq!(vec(&Mat::zeros(2, 2)), vec![0.0; 4]);
    }

    #[test]
    fn vec_index_layout() {
        let mut r = rng(1);
        let a = random_mat(&mut r, 3, 2);
        let v = vec(&a);
        for j in 0..2 {
            for i in 0..3 {
                assert_eq!(v[j * 3 + i], a[(i, j)]);
            }
        }
        let l2 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let fro = (0..3)
            .flat_map(|i| (0..2).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)] * a[(i, j)])
            .sum::<f64>()
            .sqrt();
        assert!((l2 - fro).abs() <= 1e-12 * fro);
    }

    #[test]
    fn unvec_cases() {
        let m = unvec(&[1.0, 2.0, 3.0, 4.0], 2, 2).unwrap();
        assert_eq!(m, Mat::from_row_slice(2, 2, &[1.0, 3.0, 2.0, 4.0]));
        assert_eq!(unvec(&[1.0], 1, 1).unwrap(), Mat::from_element(1, 1, 1.0));
        let err = unvec(&[1.0, 2.0, 3.0], 2, 2).unwrap_err();
        assert!(err.to_string().contains("bad unvec shape"));
    }

    #[test]
    fn unvec_round_trip_many() {
        let mut r = rng(2);
        for k in 0..100 {
            let rows = 1 + k % 5;
            let cols = 1 + (k / 5) % 4;
            let a = random_mat(&mut r, rows, cols);
            assert_eq!(unvec(&vec(&a), rows, cols).unwrap(), a);
        }
    }

    #[test]
    fn kron_small_cases() {
        let mut r = rng(3);
        let b = random_mat(&mut r, 2, 3);
        let k = kron(&Mat::identity(2, 2), &b);
        assert_eq!(k.shape(), (4, 6));
        assert_eq!(k.view((0, 0), (2, 3)), b);
        assert_eq!(k.view((2, 3), (2, 3)), b);
        assert!(k.view((0, 3), (2, 3)).iter().all(|&x| x == 0.0));
        assert!(k.view((2, 0), (2, 3)).iter().all(|&x| x == 0.0));

        let two = Mat::from_element(1, 1, 2.0);
        assert_eq!(kron(&two, &b), &b * 2.0);
    }

    #[test]
    fn kron_matches_index_formula() {
        let mut r = rng(4);
        let a = random_mat(&mut r, 2, 3);
        let b = random_mat(&mut r, 4, 2);
        let k = kron(&a, &b);
        for i in 0..2 {
            for j in 0..3 {
                for s in 0..4 {
                    for t in 0..2 {
                        assert_eq!(k[(i * 4 + s, j * 2 + t)], a[(i, j)] * b[(s, t)]);
                    }
                }
            }
        }
    }

    #[test]
    fn kron_mixed_product_and_transpose() {
        let mut r = rng(5);
        for _ in 0..10 {
            let a = random_mat(&mut r, 3, 3);
            let b = random_mat(&mut r, 3, 3);
            let c = random_mat(&mut r, 3, 3);
            let d = random_mat(&mut r, 3, 3);
            let lhs = kron(&a, &b) * kron(&c, &d);
            let rhs = kron(&(&a * &c), &(&b * &d));
            assert!(rel_err(&lhs, &rhs) <= 1e-12);
            assert_eq!(
                kron(&a, &b).transpose(),
                kron(&a.transpose(), &b.transpose())
            );
        }
    }

    #[test]
    fn frobenius_inner_cases() {
        let i3 = Mat::identity(3, 3);
        assert_eq!(frobenius_inner(&i3, &i3).unwrap(), 3.0);
        let mut r = rng(6);
        let a = random_mat(&mut r, 4, 4);
        let b = random_mat(&mut r, 4, 4);
        assert_eq!(frobenius_inner(&a, &Mat::zeros(4, 4)).unwrap(), 0.0);
        let by_vec: f64 = vec(&a).iter().zip(vec(&b)).map(|(x, y)| x * y).sum();
        let by_trace = (&a * b.transpose()).trace();
        let got = frobenius_inner(&a, &b).unwrap();
        assert!((got - by_vec).abs() <= 1e-12 * by_vec.abs().max(1.0));
        assert!((got - by_trace).abs() <= 1e-12 * by_trace.abs().max(1.0));
        assert!(frobenius_inner(&a, &Mat::zeros(3, 4)).is_err());
    }

    #[test]
    fn pseudo_inverse_cases() {
        let i3 = Mat::identity(3, 3);
        assert!((pseudo_inverse(&i3, default_rtol(&i3)).unwrap() - &i3).norm() < 1e-14);

        let d = Mat::from_diagonal(&nalgebra::DVector::from_vec(vec![2.0, 0.0]));
        let m = pseudo_inverse(&d, default_rtol(&d)).unwrap();
        let want = Mat::from_diagonal(&nalgebra::DVector::from_vec(vec![0.5, 0.0]));
        assert!((m - want).norm() < 1e-14);
    }

    #[test]
    fn pseudo_inverse_satisfies_penrose_on_rank_deficient() {
        let mut r = rng(7);
        for k in 0..2000 {
            let (rows, cols, rank) = (2 + k % 7, 2 + (k / 7) % 5, 1 + k % 3);
            let a = random_mat(&mut r, rows, rank) * random_mat(&mut r, rank, cols);
            let m = pseudo_inverse(&a, default_rtol(&a)).unwrap();
            let tol = 1e-8 * a.norm();
            assert!((&a * &m * &a - &a).norm() <= tol, "case {k}");
            assert!((&m * &a * &m - &m).norm() <= 1e-8 * m.norm(), "case {k}");
            let am = &a * &m;
            let ma = &m * &a;
            assert!(
                (&am - am.transpose()).norm() <= 1e-8 * am.norm(),
                "case {k}"
            );
            assert!(
                (&ma - ma.transpose()).norm() <= 1e-8 * ma.norm(),
                "case {k}"
            );
        }
    }

    #[test]
    fn projector_cases() {
        let p = projector(&Mat::identity(5, 5)).unwrap();
        assert!((p.matrix().as_mat() - Mat::identity(5, 5)).norm() < 1e-12);
        assert_eq!(p.rank(), 5);

        let ones = Mat::from_element(2, 1, 1.0);
        let p = projector(&ones).unwrap();
        assert!((p.matrix().as_mat() - Mat::from_element(2, 2, 0.5)).norm() < 1e-14);
        assert_eq!(p.rank(), 1);

        let zero = projector(&Mat::zeros(4, 1)).unwrap();
        assert_eq!(zero.rank(), 0);
        assert_eq!(zero.matrix().as_mat(), &Mat::zeros(4, 4));
    }

    #[test]
    fn projector_laws_and_column_space_invariance() {
        let mut r = rng(8);
        for rank in 1..=4 {
            // 7x5 design of the requested rank
            let g = random_mat(&mut r, 7, rank) * random_mat(&mut r, rank, 5);
            let p = projector(&g).unwrap();
            let pi = p.matrix().as_mat();
            assert!((pi * pi - pi).norm() <= 1e-8 * 7.0);
            assert!((pi - pi.transpose()).norm() <= 1e-12);
            assert!((pi * &g - &g).norm() <= 1e-8 * g.norm());
            assert_eq!(p.rank(), rank);

            let rmix = random_mat(&mut r, 5, 5) + Mat::identity(5, 5) * 3.0;
            let p2 = projector(&(&g * rmix)).unwrap();
            assert!((p2.matrix().as_mat() - pi).norm() <= 1e-8);
        }
    }

    #[test]
    fn project_with_identity_symmetrizes() {
        let mut r = rng(9);
        let a = random_mat(&mut r, 4, 4);
        let got = project_to_model_space(&a, &Projector::identity(4)).unwrap();
        assert!((got.as_mat() - (&a + a.transpose()) * 0.5).norm() < 1e-14);
        assert!(project_to_model_space(&a, &Projector::identity(3)).is_err());
    }

    #[test]
    fn projection_beats_random_competitors() {
        let mut r = rng(10);
        let a = SymMat::symmetrize(&random_mat(&mut r, 6, 6))
            .unwrap()
            .into_inner();
        let g = random_mat(&mut r, 6, 3);
        let best = project_to_model_space(&a, &projector(&g).unwrap()).unwrap();
        let best_dist = (&a - best.as_mat()).norm();
        for _ in 0..1000 {
            let psi = SymMat::symmetrize(&random_mat(&mut r, 3, 3)).unwrap();
            let competitor = &g * psi.as_mat() * g.transpose();
            assert!(best_dist <= (&a - competitor).norm() + 1e-12);
        }
    }

    #[test]
    fn projection_keeps_psd() {
        let mut r = rng(11);
        for _ in 0..20 {
            let f = random_mat(&mut r, 6, 3);
            let a = &f * f.transpose();
            let g = random_mat(&mut r, 6, 2);
            let proj = project_to_model_space(&a, &projector(&g).unwrap()).unwrap();
            assert!(proj.min_eigenvalue() >= -1e-8 * a.norm());
        }
    }

    #[test]
    fn projection_matches_kronecker_route() {
        let mut r = rng(12);
        let a = random_mat(&mut r, 5, 5);
        let g = random_mat(&mut r, 5, 2);
        let p = projector(&g).unwrap();
        let direct = project_to_model_space(&a, &p).unwrap();
        let pi = p.matrix().as_mat();
        let sym = (&a + a.transpose()) * 0.5;
        let big = kron(pi, pi);
        let routed = unvec(
            (big * nalgebra::DVector::from_vec(vec(&sym))).as_slice(),
            5,
            5,
        )
        .unwrap();
        assert!(rel_err(direct.as_mat(), &routed) <= 1e-10);
    }

    #[test]
    fn symmat_rejects_asymmetry() {
        let m = Mat::from_row_slice(2, 2, &[1.0, 2.0, 2.5, 1.0]);
        assert!(matches!(SymMat::new(m), Err(CovselError::NotSymmetric(_))));
        assert!(SymMat::new(Mat::zeros(2, 3)).is_err());
    }

    proptest! {
        #[test]
        fn vec_abc_identity(seed in any::<u64>(), k in 1usize..4, l in 1usize..4, m in 1usize..4, q in 1usize..4) {
            let mut r = rng(seed);
            let a = random_mat(&mut r, k, l);
            let b = random_mat(&mut r, l, m);
            let c = random_mat(&mut r, m, q);
            let lhs = nalgebra::DVector::from_vec(vec(&(&a * &b * &c)));
            let rhs = kron(&c.transpose(), &a) * nalgebra::DVector::from_vec(vec(&b));
            prop_assert!((&lhs - &rhs).norm() <= 1e-10 * lhs.norm().max(1e-12));
        }

        #[test]
        fn vec_norm_is_frobenius(seed in any::<u64>(), rows in 1usize..6, cols in 1usize..6) {
            let mut r = rng(seed);
            let a = random_mat(&mut r, rows, cols);
            let v = vec(&a);
            let l2 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            prop_assert!((a.norm() - l2).abs() <= 1e-12 * a.norm());
            prop_assert_eq!(unvec(&v, rows, cols).unwrap(), a);
        }
    }
}
