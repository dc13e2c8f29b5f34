//! One-mode Gaussian channels: classification, dilation, capacities and
//! channel discrimination.

use serde::{Deserialize, Serialize};

use crate::config::{LogBase, VALIDITY_TOL};
use crate::discrimination::{chernoff_bound, multicopy_bounds, BinaryHypothesis};
use crate::error::{domain, finite, Error, Result};
use crate::linalg::{blocks2, eye, min_eigenvalue, symmetrize, z2, Mat, Vector};
use crate::phase_space::{epr_cov, g_function, partial_trace, tensor, von_neumann_entropy, GaussianState, SymplecticTransform};
use crate::unitaries::{apply, embed};

/// Rank threshold relative to the largest singular value.
pub const RANK_TOL: f64 = 1e-10;
/// |1 − τ| below this routes to the τ = 1 branch.
pub const UNIT_TAU_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianChannel {
    pub t: Mat,
    pub n: Mat,
    pub d: Vector,
}

impl GaussianChannel {
    pub fn new(t: Mat, n: Mat, d: Vector) -> Result<Self> {
        let ch = GaussianChannel { t, n, d };
        ch.validate()?;
        Ok(ch)
    }

    pub fn identity() -> Self {
        GaussianChannel { t: eye(2), n: Mat::zeros(2, 2), d: Vector::zeros(2) }
    }

    /// L(τ, n̄).
    pub fn lossy(tau: f64, n_bar: f64) -> Result<Self> {
        if !(tau > 0.0 && tau < 1.0) {
            return domain(format!("lossy channel needs 0 < tau < 1, got {tau}"));
        }
        CanonicalForm::new(ChannelClass::CLoss, tau, n_bar)?.channel()
    }

    /// A(τ, n̄).
    pub fn amplifier(tau: f64, n_bar: f64) -> Result<Self> {
        if !(tau > 1.0) {
            return domain(format!("amplifying channel needs tau > 1, got {tau}"));
        }
        CanonicalForm::new(ChannelClass::CAmp, tau, n_bar)?.channel()
    }

    pub fn validate(&self) -> Result<()> {
        if self.t.shape() != (2, 2) || self.n.shape() != (2, 2) || self.d.len() != 2 {
            return Err(Error::Shape("one-mode channel needs 2x2 T, 2x2 N and a 2-vector d".into()));
        }
        for x in self.t.iter().chain(self.n.iter()).chain(self.d.iter()) {
            finite("channel entry", *x)?;
        }
        let scale = self.n.amax().max(1.0);
        if (&self.n - self.n.transpose()).amax() > VALIDITY_TOL * scale {
            return domain("N must be symmetric");
        }
        if min_eigenvalue(&self.n) < -VALIDITY_TOL * scale {
            return domain("N must be positive semidefinite");
        }
        let det_t = self.t.determinant();
        let det_n = symmetrize(&self.n).determinant();
        let need = (det_t - 1.0).powi(2);
        if det_n < need - VALIDITY_TOL * need.max(scale * scale) {
            return domain(format!("det N = {det_n} violates det N >= (det T - 1)^2 = {need}"));
        }
        Ok(())
    }

    /// W ∘ self ∘ U for symplectic U (input) and W (output).
    pub fn dressed(&self, u: &Mat, w: &Mat) -> Self {
        GaussianChannel { t: w * &self.t * u, n: symmetrize(&(w * &self.n * w.transpose())), d: w * &self.d }
    }
}

/// Applies a one-mode channel to `mode`; other modes see the identity.
pub fn apply_channel(ch: &GaussianChannel, state: &GaussianState, mode: usize) -> Result<GaussianState> {
    ch.validate()?;
    let n = state.n_modes();
    if mode >= n {
        return Err(Error::Index(format!("mode {mode} out of range for {n} modes")));
    }
    let mut t = eye(2 * n);
    let mut big_n = Mat::zeros(2 * n, 2 * n);
    let mut d = Vector::zeros(2 * n);
    let o = 2 * mode;
    t.view_mut((o, o), (2, 2)).copy_from(&ch.t);
    big_n.view_mut((o, o), (2, 2)).copy_from(&ch.n);
    d.rows_mut(o, 2).copy_from(&ch.d);
    let mean = &t * &state.mean + d;
    let cov = symmetrize(&(&t * &state.cov * t.transpose() + big_n));
    Ok(GaussianState::from_parts(mean, cov))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ChannelClass {
    A1,
    A2,
    B1,
    B2,
    B2Id,
    CLoss,
    CAmp,
    D,
}

impl ChannelClass {
    pub const ALL: [ChannelClass; 8] = [
        ChannelClass::A1,
        ChannelClass::A2,
        ChannelClass::B1,
        ChannelClass::B2,
        ChannelClass::B2Id,
        ChannelClass::CLoss,
        ChannelClass::CAmp,
        ChannelClass::D,
    ];

    pub fn rank(self) -> u8 {
        match self {
            ChannelClass::A1 | ChannelClass::B2Id => 0,
            ChannelClass::A2 | ChannelClass::B1 => 1,
            _ => 2,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            ChannelClass::A1 => "A1",
            ChannelClass::A2 => "A2",
            ChannelClass::B1 => "B1",
            ChannelClass::B2 => "B2",
            ChannelClass::B2Id => "B2(Id)",
            ChannelClass::CLoss => "C(Loss)",
            ChannelClass::CAmp => "C(Amp)",
            ChannelClass::D => "D",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Invariants {
    pub tau: f64,
    pub rank: u8,
    pub n_bar: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CanonicalForm {
    pub tau: f64,
    pub rank: u8,
    pub n_bar: f64,
    pub class: ChannelClass,
}

impl CanonicalForm {
    /// Builds a form, checking that `tau` and `n_bar` fit the class.
    pub fn new(class: ChannelClass, tau: f64, n_bar: f64) -> Result<Self> {
        finite("tau", tau)?;
        finite("n_bar", n_bar)?;
        if n_bar < 0.0 {
            return domain(format!("n_bar must be >= 0, got {n_bar}"));
        }
        let ok = match class {
            ChannelClass::A1 | ChannelClass::A2 => tau == 0.0,
            ChannelClass::B1 => tau == 1.0 && n_bar == 0.0,
            ChannelClass::B2Id => tau == 1.0 && n_bar == 0.0,
            ChannelClass::B2 => tau == 1.0 && n_bar > 0.0,
            ChannelClass::CLoss => tau > 0.0 && tau < 1.0,
            ChannelClass::CAmp => tau > 1.0,
            ChannelClass::D => tau < 0.0,
        };
        if !ok {
            return domain(format!("(tau={tau}, n_bar={n_bar}) is not a {} form", class.label()));
        }
        Ok(CanonicalForm { tau, rank: class.rank(), n_bar, class })
    }

    pub fn nu(&self) -> f64 {
        2.0 * self.n_bar + 1.0
    }

    /// (T_c, N_c) of the form.
    pub fn channel(&self) -> Result<GaussianChannel> {
        let i = eye(2);
        let z = z2();
        let nu = self.nu();
        let tau = self.tau;
        let (t, n) = match self.class {
            ChannelClass::A1 => (Mat::zeros(2, 2), &i * nu),
            ChannelClass::A2 => ((&i + &z) * 0.5, &i * nu),
            ChannelClass::B1 => (i.clone(), (&i - &z) * 0.5),
            ChannelClass::B2 => (i.clone(), &i * self.n_bar),
            ChannelClass::B2Id => (i.clone(), Mat::zeros(2, 2)),
            ChannelClass::CLoss => (&i * tau.sqrt(), &i * ((1.0 - tau) * nu)),
            ChannelClass::CAmp => (&i * tau.sqrt(), &i * ((tau - 1.0) * nu)),
            ChannelClass::D => (&z * (-tau).sqrt(), &i * ((1.0 - tau) * nu)),
        };
        GaussianChannel::new(t, n, Vector::zeros(2))
    }
}

fn numerical_rank(m: &Mat) -> u8 {
    let sv = m.singular_values();
    let top = sv.max();
    if top == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s >= RANK_TOL * top).count() as u8
}

pub fn invariants_of(ch: &GaussianChannel) -> Result<Invariants> {
    ch.validate()?;
    let rank_t = numerical_rank(&ch.t);
    let rank_n = numerical_rank(&ch.n);
    let tau = if rank_t < 2 { 0.0 } else { ch.t.determinant() };
    let det_n = symmetrize(&ch.n).determinant().max(0.0);
    let n_bar = if (1.0 - tau).abs() < UNIT_TAU_TOL {
        if rank_n < 2 {
            0.0
        } else {
            det_n.sqrt()
        }
    } else {
        (det_n.sqrt() / (2.0 * (1.0 - tau).abs()) - 0.5).max(0.0)
    };
    Ok(Invariants { tau, rank: rank_t.min(rank_n), n_bar })
}

pub fn classify(ch: &GaussianChannel) -> Result<CanonicalForm> {
    let inv = invariants_of(ch)?;
    let unit = (1.0 - inv.tau).abs() < UNIT_TAU_TOL;
    let class = match (inv.rank, inv.tau) {
        (0, t) if t == 0.0 => ChannelClass::A1,
        (1, t) if t == 0.0 => ChannelClass::A2,
        (0, _) if unit => ChannelClass::B2Id,
        (1, _) if unit => ChannelClass::B1,
        (2, _) if unit => ChannelClass::B2,
        (2, t) if t > 0.0 && t < 1.0 => ChannelClass::CLoss,
        (2, t) if t > 1.0 => ChannelClass::CAmp,
        (2, t) if t < 0.0 => ChannelClass::D,
        (r, t) => return Err(Error::Numerical(format!("invariants tau={t}, rank={r} match no canonical class"))),
    };
    let tau = if unit { 1.0 } else { inv.tau };
    let n_bar = if matches!(class, ChannelClass::B1 | ChannelClass::B2Id) { 0.0 } else { inv.n_bar };
    Ok(CanonicalForm { tau, rank: class.rank(), n_bar, class })
}

/// Two-mode dilation: the system meets one arm E of an environment EPR
/// state of variance ν through M; the other arm e is untouched.
#[derive(Debug, Clone, PartialEq)]
pub struct Dilation {
    pub m: Mat,
    pub nu: f64,
}

pub fn dilate(form: &CanonicalForm) -> Result<Dilation> {
    let i = eye(2);
    let z = z2();
    let o = Mat::zeros(2, 2);
    let tau = form.tau;
    let m = match form.class {
        ChannelClass::B2 => {
            return Err(Error::Unsupported("class B2 with rank 2 has no simple dilation".into()));
        }
        ChannelClass::B2Id => eye(4),
        ChannelClass::A1 => blocks2(&o, &i, &i, &o),
        ChannelClass::A2 => blocks2(&((&i + &z) * 0.5), &i, &i, &((&z - &i) * 0.5)),
        ChannelClass::B1 => blocks2(&i, &((&i - &z) * 0.5), &((&i + &z) * 0.5), &(-&i)),
        ChannelClass::CLoss => {
            let (a, b) = (tau.sqrt(), (1.0 - tau).sqrt());
            blocks2(&(&i * a), &(&i * b), &(&i * -b), &(&i * a))
        }
        ChannelClass::CAmp => {
            let (a, b) = (tau.sqrt(), (tau - 1.0).sqrt());
            blocks2(&(&i * a), &(&z * b), &(&z * b), &(&i * a))
        }
        ChannelClass::D => {
            let (a, b) = ((-tau).sqrt(), (1.0 - tau).sqrt());
            blocks2(&(&z * a), &(&i * b), &(&i * -b), &(&z * -a))
        }
    };
    Ok(Dilation { m, nu: form.nu() })
}

/// Runs the dilation on `mode` and traces out the environment.
pub fn apply_dilation(form: &CanonicalForm, state: &GaussianState, mode: usize) -> Result<GaussianState> {
    let dil = dilate(form)?;
    let n = state.n_modes();
    if mode >= n {
        return Err(Error::Index(format!("mode {mode} out of range for {n} modes")));
    }
    let env = GaussianState::from_parts(Vector::zeros(4), epr_cov(dil.nu));
    let joint = tensor(state, &env);
    let u = embed(&SymplecticTransform::linear(dil.m), &[mode, n], n + 2)?;
    partial_trace(&apply(&joint, &u)?, &(0..n).collect::<Vec<_>>())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Degradability {
    Antidegradable,
    Degradable,
    Unknown,
}

pub fn degradability(form: &CanonicalForm) -> Degradability {
    if form.tau <= 0.5 {
        return Degradability::Antidegradable;
    }
    let pure = form.n_bar == 0.0;
    match form.class {
        ChannelClass::CLoss | ChannelClass::CAmp if pure => Degradability::Degradable,
        _ => Degradability::Unknown,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Exactness {
    Exact,
    LowerBound,
    /// Lower bound believed to be tight.
    ConjecturedTight,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Capacity {
    pub value: f64,
    pub kind: Exactness,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CapacityRecord {
    pub c_pure_loss: Option<Capacity>,
    pub c_lower: Option<Capacity>,
    pub q_lower: Option<Capacity>,
    pub e_r: Option<Capacity>,
    pub c_e: Option<Capacity>,
}

/// Closed-form capacity formulas; `m_bar` is the mean input photon number.
pub fn capacities(form: &CanonicalForm, m_bar: f64, base: LogBase) -> Result<CapacityRecord> {
    finite("m_bar", m_bar)?;
    if m_bar < 0.0 {
        return domain(format!("m_bar must be >= 0, got {m_bar}"));
    }
    let mu = 2.0 * m_bar + 1.0;
    let nu = form.nu();
    let tau = form.tau;
    let g = |x: f64| g_function(x, base);
    let mut rec = CapacityRecord::default();
    let pure_loss = matches!(form.class, ChannelClass::B2Id)
        || (form.class == ChannelClass::CLoss && form.n_bar == 0.0);
    if pure_loss {
        rec.c_pure_loss = Some(Capacity { value: g(tau * mu + 1.0 - tau)?, kind: Exactness::Exact });
        let d = ((1.0 + m_bar * (tau + 1.0)).powi(2) - 4.0 * tau * m_bar * (m_bar + 1.0)).sqrt();
        let lp = d + m_bar * (1.0 - tau);
        let lm = d - m_bar * (1.0 - tau);
        let value = g(mu)? + g(tau * mu + 1.0 - tau)? - g(lm.max(1.0))? - g(lp)?;
        rec.c_e = Some(Capacity { value, kind: Exactness::Exact });
    }
    if form.class == ChannelClass::CLoss {
        let value = g(tau * mu + (1.0 - tau) * nu)? - g(tau + (1.0 - tau) * nu)?;
        rec.c_lower = Some(Capacity { value, kind: Exactness::ConjecturedTight });
    }
    if (1.0 - tau).abs() >= UNIT_TAU_TOL {
        let q = if tau == 0.0 { 0.0 } else { (base.log((tau / (1.0 - tau)).abs()) - g(nu)?).max(0.0) };
        rec.q_lower = Some(Capacity { value: q, kind: Exactness::LowerBound });
        let e = (base.log((1.0 / (1.0 - tau)).abs()) - g(nu)?).max(0.0);
        rec.e_r = Some(Capacity { value: e, kind: Exactness::Exact });
    }
    Ok(rec)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoherentInfo {
    pub j: f64,
    pub j_r: f64,
}

/// Coherent and reverse coherent information for an EPR source of variance μ.
pub fn coherent_info(ch: &GaussianChannel, mu: f64, base: LogBase) -> Result<CoherentInfo> {
    finite("mu", mu)?;
    if mu < 1.0 {
        return domain(format!("source variance mu must be >= 1, got {mu}"));
    }
    let src = GaussianState::from_parts(Vector::zeros(4), epr_cov(mu));
    let rb = apply_channel(ch, &src, 1)?;
    let s_rb = von_neumann_entropy(&rb, base)?;
    let s_r = von_neumann_entropy(&partial_trace(&rb, &[0])?, base)?;
    let s_b = von_neumann_entropy(&partial_trace(&rb, &[1])?, base)?;
    Ok(CoherentInfo { j: s_b - s_rb, j_r: s_r - s_rb })
}

/// Far-field broadband capacity (ω_c T / 2π y₀) ∫₀^{y₀} g[(e^{1/x} − 1)⁻¹] dx,
/// the integrand being the entropy of a thermal mode with that mean photon number.
pub fn broadband_capacity(y0: f64, omega_c: f64, time: f64, base: LogBase) -> Result<f64> {
    for (name, x) in [("y0", y0), ("omega_c", omega_c), ("T", time)] {
        finite(name, x)?;
        if x <= 0.0 {
            return domain(format!("{name} must be > 0, got {x}"));
        }
    }
    let f = |x: f64| -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        let n = 1.0 / (1.0 / x).exp_m1();
        g_function(2.0 * n + 1.0, base).unwrap_or(0.0)
    };
    let integral = adaptive_simpson(&f, 0.0, y0, 1e-12, 50);
    Ok(omega_c * time / (2.0 * std::f64::consts::PI * y0) * integral)
}

pub(crate) fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    fn simpson(fa: f64, fm: f64, fb: f64, a: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = simpson(fa, flm, fm, a, m);
        let right = simpson(fm, frm, fb, m, b);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
    let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
    rec(f, a, b, fa, fm, fb, simpson(fa, fm, fb, a, b), tol, depth)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Transmitter {
    /// M signal/idler EPR pairs with m̄ photons per signal.
    Epr { m_bar: f64, copies: u32 },
    /// M coherent signals with m̄ photons each, no idlers.
    Coherent { m_bar: f64, copies: u32 },
}

impl Transmitter {
    fn parts(&self) -> (f64, u32) {
        match *self {
            Transmitter::Epr { m_bar, copies } | Transmitter::Coherent { m_bar, copies } => (m_bar, copies),
        }
    }

    /// Single-copy input: signal is mode 0, the idler (if any) mode 1.
    fn input(&self) -> Result<GaussianState> {
        let (m_bar, copies) = self.parts();
        finite("m_bar", m_bar)?;
        if m_bar < 0.0 || copies == 0 {
            return domain("transmitter needs m_bar >= 0 and at least one copy");
        }
        Ok(match self {
            Transmitter::Epr { .. } => GaussianState::from_parts(Vector::zeros(4), epr_cov(2.0 * m_bar + 1.0)),
            Transmitter::Coherent { .. } => {
                GaussianState::from_parts(Vector::from_vec(vec![2.0 * m_bar.sqrt(), 0.0]), eye(2))
            }
        })
    }
}

fn channel_hypothesis(tx: &Transmitter, g0: &GaussianChannel, g1: &GaussianChannel) -> Result<BinaryHypothesis> {
    let input = tx.input()?;
    let mut h = BinaryHypothesis::new(apply_channel(g0, &input, 0)?, apply_channel(g1, &input, 0)?)?;
    h.copies = tx.parts().1;
    Ok(h)
}

#[derive(Debug, Clone, PartialEq)]
pub struct IlluminationBounds {
    pub p_epr: f64,
    pub p_coh: f64,
    /// Per-copy exponents −ln inf_s C_s.
    pub exponent_epr: f64,
    pub exponent_coh: f64,
    /// exp(−Mκm̄/n̄)/2 and exp(−Mκm̄/4n̄)/2.
    pub asymptotic_epr: f64,
    pub asymptotic_coh: f64,
    pub warnings: Vec<String>,
}

/// Target absent: C(0,0,n̄). Target present: L(κ, n̄/(1−κ)).
pub fn illumination_channels(kappa: f64, n_bar: f64) -> Result<(GaussianChannel, GaussianChannel)> {
    finite("kappa", kappa)?;
    finite("n_bar", n_bar)?;
    if !(0.0..1.0).contains(&kappa) || n_bar < 0.0 {
        return domain(format!("need 0 <= kappa < 1 and n_bar >= 0, got kappa={kappa}, n_bar={n_bar}"));
    }
    let absent = CanonicalForm::new(ChannelClass::A1, 0.0, n_bar)?.channel()?;
    let present = if kappa == 0.0 {
        absent.clone()
    } else {
        GaussianChannel::lossy(kappa, n_bar / (1.0 - kappa))?
    };
    Ok((absent, present))
}

pub fn illumination_error_bounds(copies: u32, kappa: f64, n_bar: f64, m_bar: f64) -> Result<IlluminationBounds> {
    let (absent, present) = illumination_channels(kappa, n_bar)?;
    let mut warnings = Vec::new();
    if kappa > 0.1 {
        warnings.push(format!("kappa = {kappa} is outside the low-reflectivity regime"));
    }
    if n_bar < 10.0 {
        warnings.push(format!("n_bar = {n_bar} is outside the bright-background regime"));
    }
    if m_bar > 0.1 {
        warnings.push(format!("m_bar = {m_bar} is outside the weak-signal regime"));
    }
    let run = |tx: Transmitter| -> Result<(f64, f64)> {
        let h = channel_hypothesis(&tx, &absent, &present)?;
        let c = chernoff_bound(&h)?;
        Ok((multicopy_bounds(&h)?.p_qc, -c.c_min.ln()))
    };
    let (p_epr, exponent_epr) = run(Transmitter::Epr { m_bar, copies })?;
    let (p_coh, exponent_coh) = run(Transmitter::Coherent { m_bar, copies })?;
    let m = copies as f64;
    let (asymptotic_epr, asymptotic_coh) = if n_bar > 0.0 {
        (0.5 * (-m * kappa * m_bar / n_bar).exp(), 0.5 * (-m * kappa * m_bar / (4.0 * n_bar)).exp())
    } else {
        (f64::NAN, f64::NAN)
    };
    Ok(IlluminationBounds { p_epr, p_coh, exponent_epr, exponent_coh, asymptotic_epr, asymptotic_coh, warnings })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReadingResult {
    pub p_err: f64,
    /// 1 − h(p_err), bits per cell.
    pub info_gain: f64,
}

/// QCB for reading a cell encoded in L(κ₀, n̄) vs L(κ₁, n̄).
pub fn reading_error(kappa0: f64, kappa1: f64, n_bar: f64, tx: &Transmitter) -> Result<ReadingResult> {
    for k in [kappa0, kappa1] {
        finite("kappa", k)?;
        if !(k > 0.0 && k <= 1.0) {
            return domain(format!("reflectivities must lie in (0,1], got {k}"));
        }
    }
    if kappa0 == kappa1 {
        return domain("reflectivities must differ");
    }
    let cell = |k: f64| -> Result<GaussianChannel> {
        if k == 1.0 {
            Ok(GaussianChannel::identity())
        } else {
            GaussianChannel::lossy(k, n_bar)
        }
    };
    let h = channel_hypothesis(tx, &cell(kappa0)?, &cell(kappa1)?)?;
    let p_err = multicopy_bounds(&h)?.p_qc.min(0.5);
    let h2 = if p_err <= 0.0 { 0.0 } else { -p_err * p_err.log2() - (1.0 - p_err) * (1.0 - p_err).log2() };
    Ok(ReadingResult { p_err, info_gain: 1.0 - h2 })
}
