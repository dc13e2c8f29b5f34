//! Small dense helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

pub type Mat = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// Symplectic form for `n` modes in interleaved ordering.
pub fn omega(n: usize) -> Mat {
    let mut m = Mat::zeros(2 * n, 2 * n);
    for k in 0..n {
        m[(2 * k, 2 * k + 1)] = 1.0;
        m[(2 * k + 1, 2 * k)] = -1.0;
    }
    m
}

pub fn symmetrize(m: &Mat) -> Mat {
    (m + m.transpose()) * 0.5
}

/// Eigen-decomposition of a symmetric matrix, eigenvalues ascending.
pub fn sym_eigen(m: &Mat) -> (Vector, Mat) {
    let eig = SymmetricEigen::new(symmetrize(m));
    let n = eig.eigenvalues.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = Vector::from_iterator(n, idx.iter().map(|&i| eig.eigenvalues[i]));
    let mut vecs = Mat::zeros(n, n);
    for (c, &i) in idx.iter().enumerate() {
        vecs.set_column(c, &eig.eigenvectors.column(i));
    }
    (vals, vecs)
}

/// Applies `f` to the spectrum of a symmetric matrix.
pub fn sym_func(m: &Mat, f: impl Fn(f64) -> f64) -> Mat {
    let (vals, vecs) = sym_eigen(m);
    let d = Mat::from_diagonal(&vals.map(f));
    symmetrize(&(&vecs * d * vecs.transpose()))
}

pub fn sqrtm(m: &Mat) -> Mat {
    sym_func(m, |x| x.max(0.0).sqrt())
}

pub fn min_eigenvalue(m: &Mat) -> f64 {
    sym_eigen(m).0[0]
}

pub fn direct_sum(a: &Mat, b: &Mat) -> Mat {
    let (ra, ca) = a.shape();
    let (rb, cb) = b.shape();
    let mut m = Mat::zeros(ra + rb, ca + cb);
    m.view_mut((0, 0), (ra, ca)).copy_from(a);
    m.view_mut((ra, ca), (rb, cb)).copy_from(b);
    m
}

pub fn concat(a: &Vector, b: &Vector) -> Vector {
    Vector::from_iterator(a.len() + b.len(), a.iter().chain(b.iter()).copied())
}

/// Quadrature indices belonging to the listed modes.
pub fn mode_indices(modes: &[usize]) -> Vec<usize> {
    modes.iter().flat_map(|&m| [2 * m, 2 * m + 1]).collect()
}

pub fn submatrix(m: &Mat, rows: &[usize], cols: &[usize]) -> Mat {
    Mat::from_fn(rows.len(), cols.len(), |i, j| m[(rows[i], cols[j])])
}

pub fn subvector(v: &Vector, idx: &[usize]) -> Vector {
    Vector::from_iterator(idx.len(), idx.iter().map(|&i| v[i]))
}

/// ‖a − b‖_F / max(‖b‖_F, 1e-300).
pub fn rel_residual(a: &Mat, b: &Mat) -> f64 {
    (a - b).norm() / b.norm().max(1e-300)
}

pub fn inverse(m: &Mat) -> Option<Mat> {
    m.clone().try_inverse()
}

pub fn z2() -> Mat {
    Mat::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0])
}

pub fn eye(n: usize) -> Mat {
    Mat::identity(n, n)
}

pub fn mat2(a: f64, b: f64, c: f64, d: f64) -> Mat {
    Mat::from_row_slice(2, 2, &[a, b, c, d])
}

/// 4×4 matrix from 2×2 blocks.
pub fn blocks2(a: &Mat, b: &Mat, c: &Mat, d: &Mat) -> Mat {
    let mut m = Mat::zeros(4, 4);
    m.view_mut((0, 0), (2, 2)).copy_from(a);
    m.view_mut((0, 2), (2, 2)).copy_from(b);
    m.view_mut((2, 0), (2, 2)).copy_from(c);
    m.view_mut((2, 2), (2, 2)).copy_from(d);
    m
}
