//! Gaussian states as moment pairs, symplectic spectra and the standard
//! decompositions (Williamson, Euler), entropies, purification and Wigner
//! evaluation.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::config::{LogBase, DECOMP_TOL, VALIDITY_TOL};
use crate::error::{domain, finite, Error, Result};
use crate::linalg::{
    concat, direct_sum, eye, mode_indices, omega, rel_residual, sqrtm, subvector, submatrix,
    sym_eigen, sym_func, symmetrize, Mat, Vector,
};

/// Symplectic form of an `n_modes` system.
#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticForm {
    pub n_modes: usize,
    pub matrix: Mat,
}

impl SymplecticForm {
    pub fn new(n_modes: usize) -> Self {
        SymplecticForm { n_modes, matrix: omega(n_modes) }
    }
}

/// Mean vector and covariance matrix of an N-mode Gaussian state.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianState {
    pub mean: Vector,
    pub cov: Mat,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Diagnostics {
    pub symmetric_ok: bool,
    pub uncertainty_ok: bool,
    /// `None` when the covariance is not positive definite.
    pub min_sympl_eig: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum StateKind {
    Vacuum,
    Thermal { n_bar: f64 },
    /// One amplitude per mode; `q = 2 Re α`, `p = 2 Im α`.
    Coherent { alpha: Vec<Complex64> },
    SqueezedVacuum { r: f64, theta: f64 },
    GeneralOneMode { n_bar: f64, r: f64, theta: f64, alpha: Complex64 },
    Epr { r: f64 },
}

fn check_shape(mean: &Vector, cov: &Mat) -> Result<usize> {
    let (r, c) = cov.shape();
    if r != c || r % 2 != 0 || r == 0 {
        return Err(Error::Shape(format!("covariance must be square with even size, got {r}x{c}")));
    }
    if mean.len() != r {
        return Err(Error::Shape(format!("mean has length {}, expected {r}", mean.len())));
    }
    if mean.iter().chain(cov.iter()).any(|x| !x.is_finite()) {
        return domain("moments must be finite");
    }
    Ok(r / 2)
}

/// Validity diagnostics for raw moments.
pub fn validate_moments(mean: &Vector, cov: &Mat) -> Result<Diagnostics> {
    let n = check_shape(mean, cov)?;
    let asym = (cov - cov.transpose()).amax();
    let symmetric_ok = asym <= VALIDITY_TOL * cov.amax().max(1.0);
    let v = symmetrize(cov);
    let om = omega(n);
    let h = DMatrix::<Complex64>::from_fn(2 * n, 2 * n, |i, j| Complex64::new(v[(i, j)], om[(i, j)]));
    let min_h = SymmetricEigen::new(h).eigenvalues.min();
    let min_sympl_eig = symplectic_eigenvalues(&v).ok().map(|s| s[0]);
    Ok(Diagnostics { symmetric_ok, uncertainty_ok: min_h >= -VALIDITY_TOL, min_sympl_eig })
}

impl GaussianState {
    /// Builds a state, rejecting asymmetric or unphysical covariances.
    pub fn new(mean: Vector, cov: Mat) -> Result<Self> {
        let d = validate_moments(&mean, &cov)?;
        if !d.symmetric_ok {
            return domain("covariance matrix is not symmetric");
        }
        if !d.uncertainty_ok {
            return domain("covariance violates the uncertainty principle V + iΩ ≥ 0");
        }
        Ok(GaussianState { mean, cov: symmetrize(&cov) })
    }

    /// Skips physical validation; for internal results that are valid by construction.
    pub(crate) fn from_parts(mean: Vector, cov: Mat) -> Self {
        GaussianState { mean, cov: symmetrize(&cov) }
    }

    pub fn zero_mean(cov: Mat) -> Result<Self> {
        let n = cov.nrows();
        Self::new(Vector::zeros(n), cov)
    }

    pub fn vacuum(n_modes: usize) -> Self {
        Self::from_parts(Vector::zeros(2 * n_modes), eye(2 * n_modes))
    }

    pub fn n_modes(&self) -> usize {
        self.cov.nrows() / 2
    }

    pub fn validate(&self) -> Diagnostics {
        validate_moments(&self.mean, &self.cov).expect("state has consistent shape")
    }

    pub fn symplectic_eigenvalues(&self) -> Result<Vec<f64>> {
        symplectic_eigenvalues(&self.cov)
    }

    pub fn is_pure(&self, tol: f64) -> Result<bool> {
        Ok(self.symplectic_eigenvalues()?.iter().all(|&v| (v - 1.0).abs() <= tol))
    }

    pub fn entropy(&self, base: LogBase) -> Result<f64> {
        von_neumann_entropy(self, base)
    }

    /// Covariance block of one mode.
    pub fn mode_cov(&self, k: usize) -> Mat {
        self.cov.view((2 * k, 2 * k), (2, 2)).into_owned()
    }
}

/// R(θ) acting on (q, p).
pub fn rotation_matrix(theta: f64) -> Mat {
    let (s, c) = theta.sin_cos();
    Mat::from_row_slice(2, 2, &[c, s, -s, c])
}

fn alpha_mean(a: Complex64) -> [f64; 2] {
    [2.0 * a.re, 2.0 * a.im]
}

fn one_mode(n_bar: f64, r: f64, theta: f64) -> Mat {
    let rot = rotation_matrix(theta);
    let sq = Mat::from_diagonal(&Vector::from_vec(vec![(-2.0 * r).exp(), (2.0 * r).exp()]));
    symmetrize(&(&rot * sq * rot.transpose() * (2.0 * n_bar + 1.0)))
}

/// EPR covariance of variance ν (`ν = cosh 2r`).
pub fn epr_cov(nu: f64) -> Mat {
    let c = (nu * nu - 1.0).max(0.0).sqrt();
    Mat::from_row_slice(
        4,
        4,
        &[nu, 0.0, c, 0.0, 0.0, nu, 0.0, -c, c, 0.0, nu, 0.0, 0.0, -c, 0.0, nu],
    )
}

fn repeat(mode: &GaussianState, n: usize) -> GaussianState {
    let mut out = mode.clone();
    for _ in 1..n {
        out = tensor(&out, mode);
    }
    out
}

pub fn make_state(kind: &StateKind, n_modes: usize) -> Result<GaussianState> {
    if n_modes == 0 {
        return domain("n_modes must be positive");
    }
    match kind {
        StateKind::Vacuum => Ok(GaussianState::vacuum(n_modes)),
        StateKind::Thermal { n_bar } => {
            finite("n_bar", *n_bar)?;
            if *n_bar < 0.0 {
                return domain(format!("thermal n_bar must be >= 0, got {n_bar}"));
            }
            let m = GaussianState::from_parts(Vector::zeros(2), eye(2) * (2.0 * n_bar + 1.0));
            Ok(repeat(&m, n_modes))
        }
        StateKind::Coherent { alpha } => {
            if alpha.len() != n_modes {
                return Err(Error::Shape(format!(
                    "coherent state needs one amplitude per mode: {} given for {n_modes} modes",
                    alpha.len()
                )));
            }
            for a in alpha {
                finite("alpha", a.re)?;
                finite("alpha", a.im)?;
            }
            let mean = Vector::from_iterator(2 * n_modes, alpha.iter().flat_map(|&a| alpha_mean(a)));
            Ok(GaussianState::from_parts(mean, eye(2 * n_modes)))
        }
        StateKind::SqueezedVacuum { r, theta } => {
            finite("r", *r)?;
            finite("theta", *theta)?;
            let m = GaussianState::from_parts(Vector::zeros(2), one_mode(0.0, *r, *theta));
            Ok(repeat(&m, n_modes))
        }
        StateKind::GeneralOneMode { n_bar, r, theta, alpha } => {
            for (name, x) in [("n_bar", *n_bar), ("r", *r), ("theta", *theta), ("alpha", alpha.re), ("alpha", alpha.im)] {
                finite(name, x)?;
            }
            if *n_bar < 0.0 {
                return domain(format!("n_bar must be >= 0, got {n_bar}"));
            }
            let m = GaussianState::from_parts(Vector::from_row_slice(&alpha_mean(*alpha)), one_mode(*n_bar, *r, *theta));
            Ok(repeat(&m, n_modes))
        }
        StateKind::Epr { r } => {
            finite("r", *r)?;
            if n_modes != 2 {
                return domain(format!("an EPR state has 2 modes, {n_modes} requested"));
            }
            // negative r flips the sign of the correlations, as for squeeze2(r)
            let mut cov = epr_cov((2.0 * r).cosh());
            if *r < 0.0 {
                for (i, j) in [(0, 2), (2, 0), (1, 3), (3, 1)] {
                    cov[(i, j)] = -cov[(i, j)];
                }
            }
            Ok(GaussianState::from_parts(Vector::zeros(4), cov))
        }
    }
}

/// Sorted symplectic eigenvalues, the moduli of the spectrum of iΩV.
///
/// Uses A = V^{1/2} Ω V^{1/2}: A is antisymmetric and normal, its singular
/// values are the ν_k, each twice.
pub fn symplectic_eigenvalues(cov: &Mat) -> Result<Vec<f64>> {
    let (r, c) = cov.shape();
    if r != c || r % 2 != 0 {
        return Err(Error::Shape(format!("covariance must be square with even size, got {r}x{c}")));
    }
    let v = symmetrize(cov);
    let (vals, _) = sym_eigen(&v);
    if vals[0] <= 0.0 {
        return domain(format!("covariance is not positive definite (min eigenvalue {:.3e})", vals[0]));
    }
    if let Some(mut nu) = uncorrelated_spectrum(&v) {
        nu.sort_by(f64::total_cmp);
        return Ok(nu);
    }
    let s = sqrtm(&v);
    let a = &s * omega(r / 2) * &s;
    let mut sv: Vec<f64> = a.singular_values().iter().copied().collect();
    sv.sort_by(f64::total_cmp);
    Ok((0..r / 2).map(|k| 0.5 * (sv[2 * k] + sv[2 * k + 1])).collect())
}

/// Exact spectrum when modes carry no mutual correlations.
fn uncorrelated_spectrum(v: &Mat) -> Option<Vec<f64>> {
    let n = v.nrows() / 2;
    for i in 0..2 * n {
        for j in 0..2 * n {
            if i / 2 != j / 2 && v[(i, j)] != 0.0 {
                return None;
            }
        }
    }
    Some((0..n).map(|k| (v[(2 * k, 2 * k)] * v[(2 * k + 1, 2 * k + 1)] - v[(2 * k, 2 * k + 1)].powi(2)).sqrt()).collect())
}

/// Affine Gaussian unitary `x → S x + d`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticTransform {
    pub s: Mat,
    pub d: Vector,
}

impl SymplecticTransform {
    pub fn new(s: Mat, d: Vector) -> Result<Self> {
        let (r, c) = s.shape();
        if r != c || r % 2 != 0 || d.len() != r {
            return Err(Error::Shape(format!("symplectic transform needs 2N×2N matrix and 2N vector, got {r}x{c}, {}", d.len())));
        }
        Ok(SymplecticTransform { s, d })
    }

    pub fn linear(s: Mat) -> Self {
        let n = s.nrows();
        SymplecticTransform { s, d: Vector::zeros(n) }
    }

    pub fn identity(n_modes: usize) -> Self {
        Self::linear(eye(2 * n_modes))
    }

    pub fn n_modes(&self) -> usize {
        self.s.nrows() / 2
    }

    /// max |SΩSᵀ − Ω|.
    pub fn symplectic_error(&self) -> f64 {
        let om = omega(self.n_modes());
        (&self.s * &om * self.s.transpose() - om).amax()
    }

    pub fn is_symplectic(&self, tol: f64) -> bool {
        self.symplectic_error() <= tol
    }

    /// `self` followed by `next`.
    pub fn then(&self, next: &SymplecticTransform) -> SymplecticTransform {
        SymplecticTransform { s: &next.s * &self.s, d: &next.s * &self.d + &next.d }
    }

    pub fn inverse(&self) -> SymplecticTransform {
        let om = omega(self.n_modes());
        let inv = om.transpose() * self.s.transpose() * &om;
        let d = -(&inv * &self.d);
        SymplecticTransform { s: inv, d }
    }
}

/// Symplectic inverse Ωᵀ Sᵀ Ω.
pub fn symplectic_inverse(s: &Mat) -> Mat {
    let om = omega(s.nrows() / 2);
    om.transpose() * s.transpose() * om
}

#[derive(Debug, Clone, PartialEq)]
pub struct WilliamsonDecomposition {
    pub s: SymplecticTransform,
    pub spectrum: Vec<f64>,
    pub residual: f64,
}

impl WilliamsonDecomposition {
    pub fn diagonal(&self) -> Mat {
        Mat::from_diagonal(&Vector::from_iterator(
            2 * self.spectrum.len(),
            self.spectrum.iter().flat_map(|&v| [v, v]),
        ))
    }

    pub fn reconstruct(&self) -> Mat {
        &self.s.s * self.diagonal() * self.s.s.transpose()
    }
}

/// One pass of the Hermitian-eigen construction. Returns (S, ν ascending).
fn williamson_pass(v: &Mat) -> Result<(Mat, Vec<f64>)> {
    let dim = v.nrows();
    let n = dim / 2;
    let (vals, _) = sym_eigen(v);
    if vals[0] <= 0.0 {
        return Err(Error::Numerical(format!(
            "covariance not positive definite (min eigenvalue {:.3e}, condition {:.3e})",
            vals[0],
            vals[dim - 1] / vals[0].abs().max(1e-300)
        )));
    }
    let v_half = sqrtm(v);
    let v_mhalf = sym_func(v, |x| 1.0 / x.sqrt());
    let a = &v_mhalf * omega(n) * &v_mhalf;
    let h = DMatrix::<Complex64>::from_fn(dim, dim, |i, j| Complex64::new(0.0, a[(i, j)]));
    let eig = SymmetricEigen::new(h);
    let mut idx: Vec<usize> = (0..dim).collect();
    idx.sort_by(|&x, &y| eig.eigenvalues[y].total_cmp(&eig.eigenvalues[x]));
    let mut o = Mat::zeros(dim, dim);
    let mut nu = Vec::with_capacity(n);
    let rt2 = std::f64::consts::SQRT_2;
    for (k, &i) in idx.iter().take(n).enumerate() {
        let lam = eig.eigenvalues[i];
        if lam <= 0.0 {
            return Err(Error::Numerical("symplectic spectrum degenerated to zero".into()));
        }
        let u = eig.eigenvectors.column(i);
        for r in 0..dim {
            o[(r, 2 * k)] = rt2 * u[r].im;
            o[(r, 2 * k + 1)] = rt2 * u[r].re;
        }
        nu.push(1.0 / lam);
    }
    let d_mhalf = Vector::from_iterator(dim, nu.iter().flat_map(|&x| [x.powf(-0.5); 2]));
    let s = v_half * o * Mat::from_diagonal(&d_mhalf);
    Ok((s, nu))
}

/// Williamson decomposition V = S (⊕ν_k I) Sᵀ.
pub fn williamson(cov: &Mat) -> Result<WilliamsonDecomposition> {
    let (r, c) = cov.shape();
    if r != c || r % 2 != 0 {
        return Err(Error::Shape(format!("covariance must be square with even size, got {r}x{c}")));
    }
    let v = symmetrize(cov);
    let (s0, _) = williamson_pass(&v)?;
    let s0_inv = symplectic_inverse(&s0);
    let v1 = symmetrize(&(&s0_inv * &v * s0_inv.transpose()));
    let (s1, nu) = williamson_pass(&v1)?;
    let s = s0 * s1;
    let mut w = WilliamsonDecomposition { s: SymplecticTransform::linear(s), spectrum: nu, residual: 0.0 };
    w.residual = rel_residual(&w.reconstruct(), &v);
    if w.residual > DECOMP_TOL || w.s.symplectic_error() > DECOMP_TOL * w.s.s.norm_squared().max(1.0) {
        let (vals, _) = sym_eigen(&v);
        return Err(Error::Numerical(format!(
            "williamson residual {:.3e} exceeds {DECOMP_TOL:e} (condition {:.3e})",
            w.residual,
            vals[r - 1] / vals[0]
        )));
    }
    Ok(w)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EulerDecomposition {
    pub k: Mat,
    pub squeezings: Vec<f64>,
    pub l: Mat,
    pub residual: f64,
}

impl EulerDecomposition {
    pub fn middle(&self) -> Mat {
        Mat::from_diagonal(&Vector::from_iterator(
            2 * self.squeezings.len(),
            self.squeezings.iter().flat_map(|&r| [(-r).exp(), r.exp()]),
        ))
    }

    pub fn reconstruct(&self) -> Mat {
        &self.k * self.middle() * &self.l
    }
}

/// Euler (Bloch–Messiah) decomposition S = K (⊕S(r_k)) L.
///
/// Polar split S = U P, then P = W D Wᵀ with W orthogonal symplectic: each
/// eigenvector v of P with eigenvalue λ ≤ 1 is paired with Ωᵀv (eigenvalue 1/λ).
pub fn euler(s: &Mat) -> Result<EulerDecomposition> {
    let (r, c) = s.shape();
    if r != c || r % 2 != 0 {
        return Err(Error::Shape(format!("symplectic matrix must be square with even size, got {r}x{c}")));
    }
    let n = r / 2;
    let st = SymplecticTransform::linear(s.clone());
    let err = st.symplectic_error();
    if err > 1e-8 * s.norm_squared().max(1.0) {
        return domain(format!("matrix is not symplectic (|SΩSᵀ−Ω| = {err:.3e})"));
    }
    let om = omega(n);
    let p = sqrtm(&(s.transpose() * s));
    let p_inv = sym_func(&p, |x| 1.0 / x);
    let u = s * &p_inv;
    let (_, vecs) = sym_eigen(&p);
    let mut w = Mat::zeros(r, r);
    let mut used: Vec<Vector> = Vec::with_capacity(r);
    let mut k = 0;
    for i in 0..r {
        if k == n {
            break;
        }
        let mut v: Vector = vecs.column(i).into_owned();
        for _ in 0..2 {
            for b in &used {
                let proj = b.dot(&v);
                v -= b * proj;
            }
        }
        let norm = v.norm();
        if norm < 0.5 {
            continue;
        }
        v /= norm;
        let partner = om.transpose() * &v;
        w.set_column(2 * k, &v);
        w.set_column(2 * k + 1, &partner);
        used.push(v);
        used.push(partner);
        k += 1;
    }
    if k != n {
        return Err(Error::Numerical("failed to build an orthogonal symplectic eigenbasis".into()));
    }
    let squeezings: Vec<f64> = (0..n)
        .map(|j| {
            let v = w.column(2 * j);
            -(v.dot(&(&p * v))).ln()
        })
        .collect();
    let mut e = EulerDecomposition { k: &u * &w, squeezings, l: w.transpose(), residual: 0.0 };
    e.residual = rel_residual(&e.reconstruct(), s);
    if e.residual > DECOMP_TOL {
        return Err(Error::Numerical(format!("euler residual {:.3e} exceeds {DECOMP_TOL:e}", e.residual)));
    }
    Ok(e)
}

pub fn tensor(a: &GaussianState, b: &GaussianState) -> GaussianState {
    GaussianState::from_parts(concat(&a.mean, &b.mean), direct_sum(&a.cov, &b.cov))
}

fn check_modes(n: usize, modes: &[usize]) -> Result<()> {
    for (i, &m) in modes.iter().enumerate() {
        if m >= n {
            return Err(Error::Index(format!("mode {m} out of range for {n} modes")));
        }
        if modes[..i].contains(&m) {
            return Err(Error::Index(format!("mode {m} listed twice")));
        }
    }
    Ok(())
}

/// Keeps the listed modes, in the listed order.
pub fn partial_trace(state: &GaussianState, keep: &[usize]) -> Result<GaussianState> {
    check_modes(state.n_modes(), keep)?;
    if keep.is_empty() {
        return domain("partial trace must keep at least one mode");
    }
    let idx = mode_indices(keep);
    Ok(GaussianState::from_parts(subvector(&state.mean, &idx), submatrix(&state.cov, &idx, &idx)))
}

/// Reorders modes: new mode `i` is old mode `order[i]`.
pub fn permute(state: &GaussianState, order: &[usize]) -> Result<GaussianState> {
    if order.len() != state.n_modes() {
        return Err(Error::Index(format!("permutation has {} entries for {} modes", order.len(), state.n_modes())));
    }
    partial_trace(state, order)
}

/// Pure state on 2N modes whose first N modes reproduce `state`.
pub fn purify(state: &GaussianState) -> Result<GaussianState> {
    let n = state.n_modes();
    let w = williamson(&state.cov)?;
    let mut cov = Mat::zeros(4 * n, 4 * n);
    for (k, &nu) in w.spectrum.iter().enumerate() {
        let nu = if nu < 1.0 + 1e-9 { 1.0 } else { nu };
        let c = (nu * nu - 1.0).sqrt();
        let (a, b) = (2 * k, 2 * (n + k));
        for j in 0..2 {
            cov[(a + j, a + j)] = nu;
            cov[(b + j, b + j)] = nu;
        }
        cov[(a, b)] = c;
        cov[(b, a)] = c;
        cov[(a + 1, b + 1)] = -c;
        cov[(b + 1, a + 1)] = -c;
    }
    let big_s = direct_sum(&w.s.s, &eye(2 * n));
    let mut cov = &big_s * cov * big_s.transpose();
    cov.view_mut((0, 0), (2 * n, 2 * n)).copy_from(&symmetrize(&state.cov));
    let mean = concat(&state.mean, &Vector::zeros(2 * n));
    Ok(GaussianState::from_parts(mean, cov))
}

/// g(x) = ((x+1)/2) log((x+1)/2) − ((x−1)/2) log((x−1)/2).
pub fn g_function(x: f64, base: LogBase) -> Result<f64> {
    if !x.is_finite() || x < 1.0 - VALIDITY_TOL {
        return domain(format!("g(x) requires x >= 1, got {x}"));
    }
    if x <= 1.0 {
        return Ok(0.0);
    }
    let a = (x + 1.0) / 2.0;
    let b = (x - 1.0) / 2.0;
    let nats = a * a.ln() - if b > 0.0 { b * b.ln() } else { 0.0 };
    Ok(base.from_nats(nats))
}

pub fn entropy_of_spectrum(nu: &[f64], base: LogBase) -> Result<f64> {
    nu.iter().map(|&x| g_function(x, base)).sum()
}

pub fn von_neumann_entropy(state: &GaussianState, base: LogBase) -> Result<f64> {
    entropy_of_spectrum(&state.symplectic_eigenvalues()?, base)
}

/// Entropy of a covariance matrix (mean is irrelevant).
pub fn cov_entropy(cov: &Mat, base: LogBase) -> Result<f64> {
    entropy_of_spectrum(&symplectic_eigenvalues(cov)?, base)
}

pub fn wigner_at(state: &GaussianState, x: &Vector) -> Result<f64> {
    if x.len() != state.mean.len() {
        return Err(Error::Shape(format!("point has length {}, expected {}", x.len(), state.mean.len())));
    }
    let inv = state
        .cov
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Numerical("covariance is singular".into()))?;
    let dx = x - &state.mean;
    let n = state.n_modes() as i32;
    let norm = (2.0 * std::f64::consts::PI).powi(n) * state.cov.determinant().sqrt();
    Ok((-0.5 * dx.dot(&(inv * &dx))).exp() / norm)
}

/// χ(ξ) = exp[−½ ξᵀ(ΩVΩᵀ)ξ − i(Ωx̄)ᵀξ].
pub fn char_fn_at(state: &GaussianState, xi: &Vector) -> Result<Complex64> {
    if xi.len() != state.mean.len() {
        return Err(Error::Shape(format!("point has length {}, expected {}", xi.len(), state.mean.len())));
    }
    let om = omega(state.n_modes());
    let quad = xi.dot(&(&om * &state.cov * om.transpose() * xi));
    let lin = (&om * &state.mean).dot(xi);
    Ok(Complex64::new(-0.5 * quad, -lin).exp())
}
