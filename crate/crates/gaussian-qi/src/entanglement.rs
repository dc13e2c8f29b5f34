//! Partial transposition, PPT tests and entanglement measures.

use crate::config::{LogBase, VALIDITY_TOL};
use crate::error::{domain, Error, Result};
use crate::linalg::Mat;
use crate::phase_space::{partial_trace, symplectic_eigenvalues, von_neumann_entropy, GaussianState};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PptVerdict {
    Entangled,
    Separable,
    /// PPT but the bipartition is not one where PPT implies separability.
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PptResult {
    pub min_pt_sympl_eig: f64,
    pub entangled: bool,
    pub verdict: PptVerdict,
}

fn check_bipartition(state: &GaussianState, b: &[usize]) -> Result<Vec<usize>> {
    let n = state.n_modes();
    if b.is_empty() || b.len() >= n {
        return domain("bipartition needs a non-empty subsystem on both sides");
    }
    for (i, &m) in b.iter().enumerate() {
        if m >= n || b[..i].contains(&m) {
            return Err(Error::Index(format!("invalid mode {m} in bipartition")));
        }
    }
    Ok((0..n).filter(|k| !b.contains(k)).collect())
}

/// Ṽ = (I_A ⊕ T_B) V (I_A ⊕ T_B), T_B flipping every p of B.
pub fn partial_transpose(state: &GaussianState, b: &[usize]) -> Result<Mat> {
    check_bipartition(state, b)?;
    let mut v = state.cov.clone();
    for &m in b {
        let p = 2 * m + 1;
        for k in 0..v.nrows() {
            v[(p, k)] = -v[(p, k)];
        }
        for k in 0..v.nrows() {
            v[(k, p)] = -v[(k, p)];
        }
    }
    Ok(v)
}

pub fn pt_symplectic_eigenvalues(state: &GaussianState, b: &[usize]) -> Result<Vec<f64>> {
    symplectic_eigenvalues(&partial_transpose(state, b)?)
}

/// PPT criterion. `bisymmetric` marks states known to be bisymmetric, where
/// PPT is also sufficient for separability.
pub fn ppt_test(state: &GaussianState, b: &[usize], bisymmetric: bool) -> Result<PptResult> {
    let a = check_bipartition(state, b)?;
    let nu = pt_symplectic_eigenvalues(state, b)?[0];
    let entangled = nu < 1.0 - VALIDITY_TOL;
    let verdict = if entangled {
        PptVerdict::Entangled
    } else if a.len() == 1 || b.len() == 1 || bisymmetric {
        PptVerdict::Separable
    } else {
        PptVerdict::Inconclusive
    };
    Ok(PptResult { min_pt_sympl_eig: nu, entangled, verdict })
}

/// E_N = Σ_k F(ν̃_k), F(x) = −log x for x < 1.
pub fn log_negativity(state: &GaussianState, b: &[usize], base: LogBase) -> Result<f64> {
    Ok(pt_symplectic_eigenvalues(state, b)?
        .iter()
        .filter(|&&x| x < 1.0)
        .map(|&x| -base.log(x))
        .sum())
}

/// Entropy of the reduced state of a pure bipartite state.
pub fn entropy_of_entanglement(state: &GaussianState, b: &[usize], base: LogBase) -> Result<f64> {
    let a = check_bipartition(state, b)?;
    if !state.is_pure(1e-8)? {
        return Err(Error::Precondition("entropy of entanglement needs a pure state".into()));
    }
    let sa = von_neumann_entropy(&partial_trace(state, &a)?, base)?;
    let sb = von_neumann_entropy(&partial_trace(state, b)?, base)?;
    if (sa - sb).abs() > 1e-9 * sa.abs().max(1.0) {
        return Err(Error::Numerical(format!("reduced entropies differ: {sa} vs {sb}")));
    }
    Ok(sa)
}

/// (Var q₋, Var p₊) with q₋ = (q_a − q_b)/√2, p₊ = (p_a + p_b)/√2.
pub fn epr_correlations(state: &GaussianState) -> Result<(f64, f64)> {
    if state.n_modes() != 2 {
        return Err(Error::Shape(format!("EPR correlations need two modes, got {}", state.n_modes())));
    }
    let v = &state.cov;
    let q = 0.5 * (v[(0, 0)] + v[(2, 2)] - 2.0 * v[(0, 2)]);
    let p = 0.5 * (v[(1, 1)] + v[(3, 3)] + 2.0 * v[(1, 3)]);
    Ok((q, p))
}
