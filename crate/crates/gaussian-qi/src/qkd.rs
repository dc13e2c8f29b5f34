//! Secret-key rates of the fully-Gaussian CV-QKD family under collective
//! entangling-cloner attacks, postselection, finite-size shell and the
//! entanglement-based source parameters.
//!
//! Noise bookkeeping: `chi` is the excess noise referred to the channel input,
//! χ = 2n̄(1−τ)/τ. The vacuum noise of the loss, (1−τ)/τ referred to the input,
//! is added explicitly, so Bob's variance is τ(V+χ) + 1 − τ.

use serde::{Deserialize, Serialize};

use crate::config::LogBase;
use crate::error::{domain, finite, Error, Result};
use crate::linalg::{eye, mode_indices, submatrix, z2, Mat};
use crate::measurements::{homodyne_condition, Quadrature};
use crate::phase_space::{epr_cov, g_function, partial_trace, symplectic_eigenvalues, tensor, GaussianState};
use crate::unitaries::{apply_on, beam_splitter};

/// Absolute tolerance of the postselection quadrature (nats).
pub const POSTSELECTION_TOL: f64 = 1e-11;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SourceStates {
    Coherent,
    Squeezed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Detection {
    Homodyne,
    Heterodyne,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Reconciliation {
    Direct,
    Reverse,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QkdScenario {
    pub states: SourceStates,
    pub detection: Detection,
    pub reconciliation: Reconciliation,
    /// EPR variance of the entanglement-based source.
    #[serde(rename = "V")]
    pub v: f64,
    pub tau: f64,
    pub chi: f64,
    /// Sifting factor; `None` picks 1 for heterodyne and ½ for homodyne Bob.
    #[serde(default)]
    pub phi: Option<f64>,
    #[serde(default = "one")]
    pub beta: f64,
}

fn one() -> f64 {
    1.0
}

/// χ = 2n̄(1−τ)/τ.
pub fn excess_noise(tau: f64, n_bar: f64) -> f64 {
    2.0 * n_bar * (1.0 - tau) / tau
}

impl QkdScenario {
    pub fn new(states: SourceStates, detection: Detection, reconciliation: Reconciliation, v: f64, tau: f64, chi: f64) -> Result<Self> {
        let s = QkdScenario { states, detection, reconciliation, v, tau, chi, phi: None, beta: 1.0 };
        s.validate()?;
        Ok(s)
    }

    /// Channel given by thermal photons n̄ instead of χ.
    pub fn with_thermal(states: SourceStates, detection: Detection, reconciliation: Reconciliation, v: f64, tau: f64, n_bar: f64) -> Result<Self> {
        if !(n_bar >= 0.0) {
            return domain(format!("n_bar must be non-negative, got {n_bar}"));
        }
        Self::new(states, detection, reconciliation, v, tau, excess_noise(tau, n_bar))
    }

    pub fn validate(&self) -> Result<()> {
        for (name, x) in [("V", self.v), ("tau", self.tau), ("chi", self.chi), ("beta", self.beta)] {
            finite(name, x)?;
        }
        if self.v < 1.0 {
            return domain(format!("V must be at least 1, got {}", self.v));
        }
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return domain(format!("tau must lie in (0,1], got {}", self.tau));
        }
        if self.chi < 0.0 {
            return domain(format!("chi must be non-negative, got {}", self.chi));
        }
        if !(0.0..=1.0).contains(&self.beta) {
            return domain(format!("beta must lie in [0,1], got {}", self.beta));
        }
        if let Some(phi) = self.phi {
            if !(phi > 0.0 && phi <= 1.0) {
                return domain(format!("phi must lie in (0,1], got {phi}"));
            }
        }
        Ok(())
    }

    pub fn no_switching(&self) -> bool {
        self.states == SourceStates::Coherent && self.detection == Detection::Heterodyne
    }

    pub fn sifting(&self) -> f64 {
        self.phi.unwrap_or(match self.detection {
            Detection::Heterodyne => 1.0,
            Detection::Homodyne => 0.5,
        })
    }

    pub fn with_chi(&self, chi: f64) -> Self {
        QkdScenario { chi, ..*self }
    }

    pub fn with_tau(&self, tau: f64) -> Self {
        QkdScenario { tau, ..*self }
    }

    /// Alice's measurement in the entanglement-based picture.
    fn alice_detection(&self) -> Detection {
        match self.states {
            SourceStates::Coherent => Detection::Heterodyne,
            SourceStates::Squeezed => Detection::Homodyne,
        }
    }
}

/// [[xI, zZ], [zZ, yI]] with x = V, y = τ(V+χ) + 1 − τ, z = √(τ(V²−1)).
pub fn shared_cm(s: &QkdScenario) -> Result<Mat> {
    s.validate()?;
    let x = s.v;
    let y = s.tau * (s.v + s.chi) + 1.0 - s.tau;
    let z = (s.tau * (s.v * s.v - 1.0)).sqrt();
    let mut m = Mat::zeros(4, 4);
    m.view_mut((0, 0), (2, 2)).copy_from(&(eye(2) * x));
    m.view_mut((2, 2), (2, 2)).copy_from(&(eye(2) * y));
    m.view_mut((0, 2), (2, 2)).copy_from(&(z2() * z));
    m.view_mut((2, 0), (2, 2)).copy_from(&(z2() * z));
    Ok(m)
}

fn entropy(cov: &Mat, base: LogBase) -> Result<f64> {
    let scale = cov.amax().max(1.0);
    let slack = 1e-12 * scale;
    let mut total = 0.0;
    for nu in symplectic_eigenvalues(cov)? {
        if nu < 1.0 - slack {
            return Err(Error::Numerical(format!("symplectic eigenvalue {nu} below 1")));
        }
        total += g_function(nu.max(1.0), base)?;
    }
    Ok(total)
}

/// One homodyne of the key-variable measurement.
#[derive(Debug, Clone, Copy)]
struct Step {
    mode: usize,
    quad: Quadrature,
}

/// Appends the detector network for `mode` and returns the measured key
/// quadratures. Heterodyne is a balanced splitter with a vacuum port,
/// q read on the signal port and p on the vacuum port.
fn detect(state: &GaussianState, mode: usize, det: Detection, both: bool) -> Result<(GaussianState, Vec<Step>)> {
    match det {
        Detection::Homodyne => Ok((state.clone(), vec![Step { mode, quad: Quadrature::Q }])),
        Detection::Heterodyne => {
            let anc = state.n_modes();
            let st = apply_on(&tensor(state, &GaussianState::vacuum(1)), &beam_splitter(0.5)?, &[mode, anc])?;
            let mut steps = vec![Step { mode, quad: Quadrature::Q }];
            if both {
                steps.push(Step { mode: anc, quad: Quadrature::P });
            }
            Ok((st, steps))
        }
    }
}

/// Conditions on every step; returns the state and the surviving original modes.
fn condition_all(state: &GaussianState, steps: &[Step]) -> Result<(GaussianState, Vec<usize>)> {
    let mut cur = state.clone();
    let mut alive: Vec<usize> = (0..state.n_modes()).collect();
    for st in steps {
        let pos = alive.iter().position(|&m| m == st.mode).expect("measured mode is alive");
        cur = homodyne_condition(&cur, pos, st.quad, 0.0)?.conditioned;
        alive.remove(pos);
    }
    Ok((cur, alive))
}

fn outcome_index(st: &Step) -> usize {
    match st.quad {
        Quadrature::P => 2 * st.mode + 1,
        _ => 2 * st.mode,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MutualInformation {
    /// From the joint Gaussian law of the key variables.
    pub derived: f64,
    /// (w/2) log[(V+χ_tot)/(χ_tot+λ/V)], χ_tot = χ + (1−τ)/τ.
    pub printed: f64,
}

pub fn mutual_information(s: &QkdScenario, base: LogBase) -> Result<MutualInformation> {
    let ab = GaussianState::from_parts(nalgebra::DVector::zeros(4), shared_cm(s)?);
    let both = s.no_switching();
    let (st, mut steps) = detect(&ab, 0, s.alice_detection(), both)?;
    let n_alice = steps.len();
    let (st, bob) = detect(&st, 1, s.detection, both)?;
    steps.extend(bob);
    let idx: Vec<usize> = steps.iter().map(outcome_index).collect();
    let sigma = submatrix(&st.cov, &idx, &idx);
    let sa = submatrix(&st.cov, &idx[..n_alice], &idx[..n_alice]);
    let sb = submatrix(&st.cov, &idx[n_alice..], &idx[n_alice..]);
    let derived = base.from_nats(0.5 * (sa.determinant() * sb.determinant() / sigma.determinant()).ln());

    let w = if both { 2.0 } else { 1.0 };
    let lambda = match s.states {
        SourceStates::Coherent => s.v,
        SourceStates::Squeezed => 1.0,
    };
    let chi_tot = s.chi + (1.0 - s.tau) / s.tau;
    let printed = 0.5 * w * base.log((s.v + chi_tot) / (chi_tot + lambda / s.v));
    Ok(MutualInformation { derived, printed })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EveInformation {
    pub s_eve: f64,
    pub s_e: f64,
    pub s_e_cond: f64,
    pub spectrum: Vec<f64>,
    pub cond_spectrum: Vec<f64>,
}

/// Holevo information of Eve on the reference key variable, via S(E) = S(AB)
/// and purity of the conditioned remainder.
pub fn eve_holevo(s: &QkdScenario, base: LogBase) -> Result<EveInformation> {
    let ab = GaussianState::from_parts(nalgebra::DVector::zeros(4), shared_cm(s)?);
    let both = s.no_switching();
    let (mode, det) = match s.reconciliation {
        Reconciliation::Reverse => (1, s.detection),
        Reconciliation::Direct => (0, s.alice_detection()),
    };
    let (st, steps) = detect(&ab, mode, det, both)?;
    let (cond, _) = condition_all(&st, &steps)?;
    let s_e = entropy(&ab.cov, base)?;
    let s_e_cond = entropy(&cond.cov, base)?;
    Ok(EveInformation {
        s_eve: s_e - s_e_cond,
        s_e,
        s_e_cond,
        spectrum: symplectic_eigenvalues(&ab.cov)?,
        cond_spectrum: symplectic_eigenvalues(&cond.cov)?,
    })
}

/// Environment variance of the entangling cloner, ν_E = 1 + τχ/(1−τ).
pub fn cloner_nu(tau: f64, chi: f64) -> f64 {
    1.0 + tau * chi / (1.0 - tau)
}

/// Pure network: A′ (0), B (1), Eve's E′ (2) and E₂ (3).
pub fn cloner_network(s: &QkdScenario) -> Result<GaussianState> {
    s.validate()?;
    if s.tau >= 1.0 {
        return Err(Error::Unsupported("the entangling cloner needs tau < 1".into()));
    }
    let src = GaussianState::zero_mean(epr_cov(s.v))?;
    let env = GaussianState::zero_mean(epr_cov(cloner_nu(s.tau, s.chi)))?;
    apply_on(&tensor(&src, &env), &beam_splitter(s.tau)?, &[1, 2])
}

/// Same quantity as [`eve_holevo`], computed on Eve's explicit modes.
pub fn eve_holevo_dilation(s: &QkdScenario, base: LogBase) -> Result<f64> {
    let net = cloner_network(s)?;
    let both = s.no_switching();
    let (mode, det) = match s.reconciliation {
        Reconciliation::Reverse => (1, s.detection),
        Reconciliation::Direct => (0, s.alice_detection()),
    };
    let s_e = entropy(&partial_trace(&net, &[2, 3])?.cov, base)?;
    let (st, steps) = detect(&net, mode, det, both)?;
    let (cond, alive) = condition_all(&st, &steps)?;
    let keep: Vec<usize> = [2, 3].iter().map(|m| alive.iter().position(|a| a == m).expect("Eve is never measured")).collect();
    let idx = mode_indices(&keep);
    Ok(s_e - entropy(&submatrix(&cond.cov, &idx, &idx), base)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct KeyRateResult {
    pub i_ab: f64,
    pub i_ab_printed: f64,
    pub s_eve: f64,
    pub k: f64,
    pub phi: f64,
    pub spectrum: Vec<f64>,
    pub cond_spectrum: Vec<f64>,
}

/// K = φ(βI − S_eve).
pub fn key_rate(s: &QkdScenario, base: LogBase) -> Result<KeyRateResult> {
    let i = mutual_information(s, base)?;
    let e = eve_holevo(s, base)?;
    let phi = s.sifting();
    Ok(KeyRateResult {
        i_ab: i.derived,
        i_ab_printed: i.printed,
        s_eve: e.s_eve,
        k: phi * (s.beta * i.derived - e.s_eve),
        phi,
        spectrum: e.spectrum,
        cond_spectrum: e.cond_spectrum,
    })
}

/// Root χ̄ of K(χ) = 0 at fixed τ; zero when K(0) ≤ 0.
pub fn security_threshold(s: &QkdScenario, base: LogBase) -> Result<f64> {
    let k = |chi: f64| key_rate(&s.with_chi(chi), base).map(|r| r.k);
    let k0 = k(0.0)?;
    if k0 <= 0.0 {
        return Ok(0.0);
    }
    let mut trace = vec![(0.0, k0)];
    let (mut lo, mut k_lo) = (0.0, k0);
    let mut hi = 0.01;
    let mut k_hi = k(hi)?;
    trace.push((hi, k_hi));
    let mut grow = 0;
    while k_hi > 0.0 {
        if k_hi > k_lo {
            return Err(Error::Numerical(format!("K not decreasing in chi while bracketing: {trace:?}")));
        }
        grow += 1;
        if grow > 60 {
            return Err(Error::Numerical(format!("no sign change of K in chi: {trace:?}")));
        }
        lo = hi;
        k_lo = k_hi;
        hi *= 2.0;
        k_hi = k(hi)?;
        trace.push((hi, k_hi));
    }
    while hi - lo > 1e-8 {
        let mid = 0.5 * (lo + hi);
        let km = k(mid)?;
        trace.push((mid, km));
        if km > k_lo || km < k_hi {
            return Err(Error::Numerical(format!("K not monotone in chi on the bracket: {trace:?}")));
        }
        if km > 0.0 {
            lo = mid;
            k_lo = km;
        } else {
            hi = mid;
            k_hi = km;
        }
    }
    Ok(0.5 * (lo + hi))
}

fn binary_entropy_nats(p: f64) -> f64 {
    let t = |x: f64| if x > 0.0 { -x * x.ln() } else { 0.0 };
    t(p) + t(1.0 - p)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PostselectionResult {
    pub k: f64,
    /// Same integral at a 100× looser tolerance.
    pub k_coarse: f64,
}

/// Postselected coherent-state key rate, direct reconciliation on the sign of
/// Alice's quadrature. `v_a` is the modulation variance (V = V_a + 1).
///
/// Bob's sign error for a slice (a, b) is 1/(1 + exp(2√τ|a||b|/N)), N the
/// conditional outcome variance. Eve's term per |a| is S(V_E + ddᵀ) − S(V_E)
/// for her cloner modes given the full coherent amplitude.
pub fn postselection_rate(tau: f64, chi: f64, v_a: f64, detection: Detection, beta: f64, base: LogBase) -> Result<PostselectionResult> {
    for (name, x) in [("tau", tau), ("chi", chi), ("v_a", v_a), ("beta", beta)] {
        finite(name, x)?;
    }
    if !(tau > 0.0 && tau <= 1.0) || chi < 0.0 || v_a < 0.0 || !(0.0..=1.0).contains(&beta) {
        return domain("postselection needs tau in (0,1], chi >= 0, v_a >= 0, beta in [0,1]");
    }
    if v_a == 0.0 {
        return Ok(PostselectionResult { k: 0.0, k_coarse: 0.0 });
    }
    if tau >= 1.0 && chi > 0.0 {
        return Err(Error::Unsupported("excess noise at tau = 1 has no entangling-cloner model".into()));
    }
    let n_b = 1.0 + tau * chi;
    let (noise, channels, phi) = match detection {
        Detection::Homodyne => (n_b, 1.0, 0.5),
        Detection::Heterodyne => (n_b + 1.0, 2.0, 1.0),
    };
    let eve_cov = if tau < 1.0 {
        let env = GaussianState::zero_mean(epr_cov(cloner_nu(tau, chi)))?;
        let st = apply_on(&tensor(&GaussianState::vacuum(1), &env), &beam_splitter(tau)?, &[0, 1])?;
        Some(partial_trace(&st, &[1, 2])?.cov)
    } else {
        None
    };
    let eve_term = |a: f64| -> Result<f64> {
        let Some(v) = &eve_cov else { return Ok(0.0) };
        let mut d = nalgebra::DVector::zeros(4);
        d[0] = -(1.0 - tau).sqrt() * a;
        Ok(entropy(&(v + &d * d.transpose()), LogBase::E)? - entropy(v, LogBase::E)?)
    };
    let sigma = noise.sqrt();
    let info = |a: f64, b: f64| {
        let p = 1.0 / (1.0 + (2.0 * tau.sqrt() * a * b / noise).exp());
        std::f64::consts::LN_2 - binary_entropy_nats(p)
    };
    // Kept region for |a|: |b| > b*, where β I(|a|, b*) = E(|a|).
    let inner = |a: f64, e: f64, tol: f64| -> f64 {
        if a == 0.0 || e >= beta * std::f64::consts::LN_2 {
            return 0.0;
        }
        let mu = tau.sqrt() * a;
        let b_max = mu + 40.0 * sigma;
        let gain = |b: f64| beta * info(a, b) - e;
        let b_star = if gain(0.0) >= 0.0 {
            0.0
        } else {
            let (mut lo, mut hi) = (0.0, b_max);
            if gain(hi) <= 0.0 {
                return 0.0;
            }
            for _ in 0..200 {
                let m = 0.5 * (lo + hi);
                if gain(m) > 0.0 {
                    hi = m;
                } else {
                    lo = m;
                }
            }
            hi
        };
        let norm = 1.0 / (sigma * (2.0 * std::f64::consts::PI).sqrt());
        let dens = |b: f64| norm * ((-(b - mu).powi(2) / (2.0 * noise)).exp() + (-(b + mu).powi(2) / (2.0 * noise)).exp());
        let f = |b: f64| dens(b) * gain(b).max(0.0);
        // split at the peak so the adaptive rule sees it
        let mut total = 0.0;
        let mut edges = vec![b_star];
        for c in [mu - 4.0 * sigma, mu, mu + 4.0 * sigma] {
            if c > b_star {
                edges.push(c);
            }
        }
        edges.push(b_max);
        for w in edges.windows(2) {
            total += crate::channels::adaptive_simpson(&f, w[0], w[1], tol, 40);
        }
        total
    };
    // Alice's amplitudes with E(|a|) ≥ β ln 2 never contribute.
    let sa = v_a.sqrt();
    let mut a_max = 40.0 * sa;
    if eve_term(a_max)? >= beta * std::f64::consts::LN_2 {
        let (mut lo, mut hi) = (0.0, a_max);
        for _ in 0..200 {
            let m = 0.5 * (lo + hi);
            if eve_term(m)? >= beta * std::f64::consts::LN_2 {
                hi = m;
            } else {
                lo = m;
            }
        }
        a_max = hi;
    }
    let integrate = |tol: f64| -> Result<f64> {
        let failed = std::cell::Cell::new(None);
        let outer = |a: f64| {
            let e = eve_term(a).unwrap_or_else(|err| {
                failed.set(Some(err));
                0.0
            });
            let dens = 2.0 * (-a * a / (2.0 * v_a)).exp() / (sa * (2.0 * std::f64::consts::PI).sqrt());
            dens * inner(a, e, 1e-2 * tol)
        };
        let mut total = 0.0;
        let mut edges = vec![0.0];
        for c in [sa, 4.0 * sa] {
            if c < a_max {
                edges.push(c);
            }
        }
        edges.push(a_max);
        for w in edges.windows(2) {
            total += crate::channels::adaptive_simpson(&outer, w[0], w[1], tol, 40);
        }
        if let Some(err) = failed.take() {
            return Err(err);
        }
        Ok(base.from_nats(phi * channels * total))
    };
    let k = integrate(POSTSELECTION_TOL)?;
    let k_coarse = integrate(1e2 * POSTSELECTION_TOL)?;
    if (k - k_coarse).abs() > 1e-4 * k.abs() + 1e3 * POSTSELECTION_TOL {
        return Err(Error::Numerical(format!("postselection quadrature not converged: {k} vs {k_coarse}")));
    }
    Ok(PostselectionResult { k, k_coarse })
}

/// Worst-case channel parameters allowed by parameter estimation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceRegion {
    pub tau: (f64, f64),
    pub chi: (f64, f64),
}

impl ConfidenceRegion {
    pub fn point(tau: f64, chi: f64) -> Self {
        ConfidenceRegion { tau: (tau, tau), chi: (chi, chi) }
    }
}

/// max S_eve over the region (S_eve grows with χ, so χ_max is used).
pub fn worst_case_eve(s: &QkdScenario, region: &ConfidenceRegion, base: LogBase) -> Result<f64> {
    let (t0, t1) = region.tau;
    let (c0, c1) = region.chi;
    if !(t0 <= t1 && c0 <= c1) {
        return domain("confidence region bounds are reversed");
    }
    let at = |t: f64| eve_holevo(&QkdScenario { tau: t, chi: c1, ..*s }, base).map(|e| e.s_eve);
    if t0 == t1 {
        return at(t0);
    }
    const N: usize = 64;
    let grid: Vec<f64> = (0..=N).map(|k| t0 + (t1 - t0) * k as f64 / N as f64).collect();
    let mut vals = Vec::with_capacity(grid.len());
    for &t in &grid {
        vals.push(at(t)?);
    }
    let (k, &best) = vals.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).expect("grid is non-empty");
    let lo = grid[k.saturating_sub(1)];
    let hi = grid[(k + 1).min(N)];
    let (_, neg) = crate::discrimination::brent_min(|t| at(t).map(|v| -v), lo, hi, 1e-10, 200)?;
    Ok(best.max(-neg))
}

/// K = (φn/N)[βI − S_εPE − Δ(n) − D(n)].
pub fn finite_size_rate(
    s: &QkdScenario,
    n_total: u64,
    n_key: u64,
    delta: &dyn Fn(u64) -> f64,
    d_pen: &dyn Fn(u64) -> f64,
    region: &ConfidenceRegion,
    base: LogBase,
) -> Result<f64> {
    if n_key > n_total || n_total == 0 {
        return domain(format!("need 0 < n <= N, got n = {n_key}, N = {n_total}"));
    }
    let i = mutual_information(s, base)?.derived;
    let s_pe = worst_case_eve(s, region, base)?;
    let frac = n_key as f64 / n_total as f64;
    Ok(s.sifting() * frac * (s.beta * i - s_pe - delta(n_key) - d_pen(n_key)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EbSource {
    pub gamma_q: f64,
    pub gamma_p: f64,
    pub x: f64,
    pub mu: f64,
}

/// Alice's splitter τ_A in the entanglement-based source.
pub fn eb_source_params(v: f64, tau_a: f64) -> Result<EbSource> {
    finite("V", v)?;
    finite("tau_a", tau_a)?;
    if v < 1.0 {
        return domain(format!("V must be at least 1, got {v}"));
    }
    if !(tau_a > 0.0 && tau_a <= 1.0) {
        return domain(format!("tau_a must lie in (0,1], got {tau_a}"));
    }
    let mu = (1.0 - tau_a) / tau_a;
    let w = v * v - 1.0;
    Ok(EbSource {
        gamma_q: (tau_a * w).sqrt() / (tau_a * v + 1.0 - tau_a),
        gamma_p: ((1.0 - tau_a) * w).sqrt() / ((1.0 - tau_a) * v + tau_a),
        x: (mu * v + 1.0) / (v + mu),
        mu,
    })
}
