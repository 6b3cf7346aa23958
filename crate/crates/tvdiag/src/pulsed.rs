//! Prepare-then-measure protocol: a steady-state preparation followed by a
//! finite readout pulse whose output is filtered into a single temporal mode.
//!
//! During readout only `(Y, x)` matter. The filtered meter output is
//! `𝒴 = ∫₀^τ f(t) [√κ Y(t) − Y_in(t)] dt`, and the figures of merit follow
//! from the covariance of `(x(τ), 𝒴)`.

use crate::error::{invalid, Error, Result};
use crate::gaussian::{BathSpec, LinearModel};
use crate::linalg::{e1, iterated_exp_integral, lyapunov, RMat};
use crate::metrics::MeasurementFigures;
use crate::models::assemble;
use crate::quadrature::{integrate, Tolerance};

/// Relative gap below which `κ` and `γ` are treated as equal.
pub const DEGENERATE_RATES: f64 = 1e-12;
/// Relative gap below which the covariance integrals use quadrature, since
/// the exponential sums cancel as `(κ/(κ−γ))²`.
pub const NEAR_DEGENERATE_RATES: f64 = 1e-3;

/// Temporal mode used to filter the meter output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PulseShape {
    /// `f ∝ M₂₃(t)`, normalized so that `∫ f² = 1`.
    #[default]
    Exponential,
    /// `f = 1/√τ`.
    Constant,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulsedParams {
    pub kappa: f64,
    pub gamma: f64,
    pub omega_m: f64,
    pub g: f64,
    pub alpha: f64,
    /// Coefficient of the residual `x²` term during readout.
    pub nu_x2: f64,
    /// Variance of `x` at the start of the pulse.
    pub v0: f64,
    pub bath: BathSpec,
    pub shape: PulseShape,
}

impl PulsedParams {
    pub fn new(kappa: f64, gamma: f64, omega_m: f64, g: f64, alpha: f64, v0: f64, bath: BathSpec) -> Self {
        let a2 = alpha * alpha;
        PulsedParams {
            kappa,
            gamma,
            omega_m,
            g,
            alpha,
            nu_x2: a2 * omega_m / (8.0 * (2.0 + a2)),
            v0,
            bath,
            shape: PulseShape::Exponential,
        }
    }

    pub fn with_shape(mut self, shape: PulseShape) -> Self {
        self.shape = shape;
        self
    }

    fn validate(&self) -> Result<()> {
        for (n, v) in [("kappa", self.kappa), ("gamma", self.gamma), ("v0", self.v0)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid(format!("{n} must be positive")));
            }
        }
        for (n, v) in [("g", self.g), ("alpha", self.alpha), ("omega_m", self.omega_m)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(invalid(format!("{n} must be non-negative")));
            }
        }
        if !self.nu_x2.is_finite() {
            return Err(invalid("nu_x2 must be finite"));
        }
        self.bath.validate()
    }

    /// `κ` and `γ` coincide and `M₂₃` is no longer a difference of exponentials.
    pub fn is_degenerate(&self) -> bool {
        (self.kappa - self.gamma).abs() < DEGENERATE_RATES * self.kappa
    }

    fn is_near_degenerate(&self) -> bool {
        (self.kappa - self.gamma).abs() < NEAR_DEGENERATE_RATES * self.kappa
    }

    fn half_coupling(&self) -> f64 {
        self.alpha * self.g / 2.0
    }

    /// `M₂₃(t)`, the response of the cavity phase quadrature to `x`.
    pub fn m23(&self, t: f64) -> f64 {
        let (k, gm) = (self.kappa, self.gamma);
        if self.is_degenerate() {
            self.half_coupling() * t * (-k * t / 2.0).exp()
        } else {
            let c = self.alpha * self.g / (k - gm);
            c * (-gm * t / 2.0).exp() * -(-(k - gm) * t / 2.0).exp_m1()
        }
    }
}

/// Drift during readout over `(X, Y, x, p)`.
pub fn readout_drift(p: &PulsedParams) -> RMat {
    let (k, gm, h) = (p.kappa, p.gamma, p.half_coupling());
    #[rustfmt::skip]
    let a = RMat::from_row_slice(4, 4, &[
        -k / 2.0, 0.0, 0.0, 0.0,
        0.0, -k / 2.0, h, 0.0,
        0.0, 0.0, -gm / 2.0, 0.0,
        h, 0.0, p.nu_x2, -gm / 2.0,
    ]);
    a
}

/// `M(t) = exp(A t)` for the readout drift, in closed form.
pub fn propagator(p: &PulsedParams, t: f64) -> RMat {
    let ek = (-p.kappa * t / 2.0).exp();
    let eg = (-p.gamma * t / 2.0).exp();
    let m23 = p.m23(t);
    let mut m = RMat::zeros(4, 4);
    m[(0, 0)] = ek;
    m[(1, 1)] = ek;
    m[(2, 2)] = eg;
    m[(3, 3)] = eg;
    m[(1, 2)] = m23;
    m[(3, 0)] = m23;
    m[(3, 2)] = p.nu_x2 * t * eg;
    m
}

/// `𝒢(τ) = 1 + κ ∫₀^τ M₂₃²`.
pub fn measurement_gain(p: &PulsedParams, tau: f64) -> Result<f64> {
    if p.is_near_degenerate() {
        let i = integrate("gain", |s| p.m23(s).powi(2), 0.0, tau, Tolerance::default())?;
        return Ok(1.0 + p.kappa * i);
    }
    let (k, gm) = (p.kappa, p.gamma);
    let c = p.alpha * p.g / (k - gm);
    let i = e1(gm, tau) - 2.0 * e1((k + gm) / 2.0, tau) + e1(k, tau);
    Ok(1.0 + k * c * c * i.max(0.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PreparationParams {
    pub kappa: f64,
    pub gamma: f64,
    pub omega_m: f64,
    pub g: f64,
    pub alpha: f64,
}

/// Drift of a single modulated tweezer used for dissipative squeezing,
/// over `(X, Y, x, p)`.
pub fn preparation_drift(p: &PreparationParams) -> RMat {
    let (k, gm, a) = (p.kappa, p.gamma, p.alpha);
    let lo = p.g * (a - 2.0) / 4.0;
    let hi = p.g * (a + 2.0) / 4.0;
    let rot = -2.0 * a * p.omega_m / (2.0 + a * a);
    #[rustfmt::skip]
    let m = RMat::from_row_slice(4, 4, &[
        -k / 2.0, 0.0, 0.0, lo,
        0.0, -k / 2.0, hi, 0.0,
        0.0, lo, -gm / 2.0, 0.0,
        hi, 0.0, rot, -gm / 2.0,
    ]);
    m
}

pub fn preparation_model(p: &PreparationParams, bath: &BathSpec) -> Result<LinearModel> {
    for (n, v) in [("kappa", p.kappa), ("gamma", p.gamma)] {
        if !(v.is_finite() && v > 0.0) {
            return Err(invalid(format!("{n} must be positive")));
        }
    }
    let (sk, sg) = (p.kappa.sqrt(), p.gamma.sqrt());
    let lossless = BathSpec { eta: 1.0, ..*bath };
    assemble(preparation_drift(p), &[sk, sk, sg, sg], crate::gaussian::ModeLayout::optomechanical(), &lossless)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Preparation {
    pub v0: f64,
    pub covariance: RMat,
}

/// Steady state of the preparation stage; `v0` is its position variance.
pub fn prepare_state_lyapunov(p: &PreparationParams, bath: &BathSpec) -> Result<Preparation> {
    let m = preparation_model(p, bath)?;
    let d = RMat::from_fn(4, 4, |i, j| m.h[i] * m.vin[(i, j)] * m.h[j]);
    let v = lyapunov(&m.a, &d)?;
    Ok(Preparation { v0: v[(2, 2)], covariance: v })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PulsedState {
    pub m: RMat,
    pub gain: f64,
    /// `(√κ ∫ f M₂₃)²`, the weight of the initial signal in the meter.
    pub transfer: f64,
    pub v33: f64,
    pub v32: f64,
    pub v22: f64,
}

/// Building blocks of the covariance integrals.
#[derive(Debug, Clone, Copy)]
struct Integrals {
    a: f64,
    af: f64,
    f2: f64,
    b: f64,
    h2: f64,
    q2: f64,
    r: f64,
}

/// Filter as a sum of exponentials `Σ φ_j e^{−p_j t}`.
fn filter_terms(p: &PulsedParams, tau: f64, gain: f64) -> Vec<(f64, f64)> {
    match p.shape {
        PulseShape::Constant => vec![(1.0 / tau.sqrt(), 0.0)],
        PulseShape::Exponential => {
            let norm = (p.kappa / (gain - 1.0)).sqrt();
            m23_terms(p).into_iter().map(|(c, r)| (norm * c, r)).collect()
        }
    }
}

fn m23_terms(p: &PulsedParams) -> Vec<(f64, f64)> {
    let c = p.alpha * p.g / (p.kappa - p.gamma);
    vec![(c, p.gamma / 2.0), (-c, p.kappa / 2.0)]
}

fn chain_integrals(p: &PulsedParams, tau: f64, gain: f64) -> Integrals {
    let k = p.kappa;
    let f = filter_terms(p, tau, gain);
    let m = m23_terms(p);
    let ch = |r: &[f64]| iterated_exp_integral(r, tau);
    let mut out = Integrals { a: 0.0, af: 0.0, f2: 0.0, b: 0.0, h2: 0.0, q2: 0.0, r: 0.0 };
    for &(fj, pj) in &f {
        out.a += fj * e1(pj + k / 2.0, tau);
        for &(mi, ri) in &m {
            out.af += fj * mi * e1(pj + ri, tau);
            out.r += fj * mi * ch(&[pj, pj + ri + p.gamma / 2.0, p.gamma / 2.0]);
        }
        for &(fk, pk) in &f {
            let s = pj + pk;
            out.f2 += fj * fk * e1(s, tau);
            out.b += fj * fk * ch(&[s, pk + k / 2.0, 0.0]);
            out.h2 += 2.0 * fj * fk * ch(&[s, s + k, pk + k / 2.0, 0.0]);
            for &(mi, ri) in &m {
                for &(ml, rl) in &m {
                    out.q2 += 2.0 * fj * fk * mi * ml * ch(&[s, s + ri + rl, pk + rl, 0.0]);
                }
            }
        }
    }
    out.af *= k.sqrt();
    out
}

fn quadrature_integrals(p: &PulsedParams, tau: f64, gain: f64, tol: Tolerance) -> Result<Integrals> {
    let k = p.kappa;
    let norm = (k / (gain - 1.0)).sqrt();
    let f = |t: f64| match p.shape {
        PulseShape::Constant => 1.0 / tau.sqrt(),
        PulseShape::Exponential => norm * p.m23(t),
    };
    let m22 = |t: f64| (-k * t / 2.0).exp();
    let inner = Tolerance { rel: tol.rel * 1e-2, ..tol };
    let h = |s: f64| integrate("h", |t| f(t) * m22(t - s), s, tau, inner).unwrap_or(f64::NAN);
    let q = |s: f64| integrate("q", |t| f(t) * p.m23(t - s), s, tau, inner).unwrap_or(f64::NAN);
    let checked = |name: &'static str, v: Result<f64>| -> Result<f64> {
        let v = v?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::QuadratureFailed { integral: name, estimate: v, error: f64::NAN })
        }
    };
    Ok(Integrals {
        a: integrate("A", |t| f(t) * m22(t), 0.0, tau, tol)?,
        af: k.sqrt() * integrate("a_f", |t| f(t) * p.m23(t), 0.0, tau, tol)?,
        f2: integrate("f2", |t| f(t).powi(2), 0.0, tau, tol)?,
        b: checked("B", integrate("B", |s| f(s) * h(s), 0.0, tau, tol))?,
        h2: checked("h2", integrate("h2", |s| h(s).powi(2), 0.0, tau, tol))?,
        q2: checked("q2", integrate("q2", |s| q(s).powi(2), 0.0, tau, tol))?,
        r: checked("R", integrate("R", |s| (-p.gamma * (tau - s) / 2.0).exp() * q(s), 0.0, tau, tol))?,
    })
}

fn assemble_state(p: &PulsedParams, tau: f64, gain: f64, i: Integrals) -> PulsedState {
    let (k, gm) = (p.kappa, p.gamma);
    let vx = p.bath.vx();
    let vo = p.bath.optical_variance();
    let m33 = (-gm * tau / 2.0).exp();
    let optical = k * i.a * i.a + i.f2 - 2.0 * k * i.b + k * k * i.h2;
    PulsedState {
        m: propagator(p, tau),
        gain,
        transfer: i.af * i.af,
        v22: i.af * i.af * p.v0 + vo * optical + k * gm * vx * i.q2,
        v32: m33 * i.af * p.v0 + gm * k.sqrt() * vx * i.r,
        v33: m33 * m33 * p.v0 + gm * vx * e1(gm, tau),
    }
}

fn check_pulse(p: &PulsedParams, tau: f64) -> Result<f64> {
    p.validate()?;
    if !(tau.is_finite() && tau > 0.0) {
        return Err(invalid("pulse duration must be positive"));
    }
    let gain = measurement_gain(p, tau)?;
    if p.shape == PulseShape::Exponential && gain <= 1.0 {
        return Err(invalid("exponential filter needs a nonzero readout coupling"));
    }
    Ok(gain)
}

/// Covariance of `(x(τ), 𝒴)` at the end of a pulse of length `tau`.
pub fn pulsed_covariances(p: &PulsedParams, tau: f64) -> Result<PulsedState> {
    let gain = check_pulse(p, tau)?;
    let i = if p.is_near_degenerate() {
        quadrature_integrals(p, tau, gain, Tolerance { rel: 1e-10, ..Tolerance::default() })?
    } else {
        chain_integrals(p, tau, gain)
    };
    Ok(assemble_state(p, tau, gain, i))
}

/// Same covariances by nested adaptive quadrature.
pub fn pulsed_covariances_quadrature(p: &PulsedParams, tau: f64, tol: Tolerance) -> Result<PulsedState> {
    let gain = check_pulse(p, tau)?;
    let i = quadrature_integrals(p, tau, gain, tol)?;
    Ok(assemble_state(p, tau, gain, i))
}

/// Figures with the signal taken as `M₃₃(τ)² V₀`.
pub fn figures_from_state(p: &PulsedParams, tau: f64, s: &PulsedState) -> Result<MeasurementFigures> {
    if s.v22 <= crate::metrics::DEGENERATE_METER {
        return Err(Error::DegenerateMeter { v22: s.v22 });
    }
    let m33 = (-p.gamma * tau / 2.0).exp();
    let vc = (s.v33 - s.v32 * s.v32 / s.v22).max(0.0);
    let ts = m33 * m33 * p.v0 / s.v33;
    let tm = s.transfer * p.v0 / s.v22;
    Ok(MeasurementFigures::from_figures(vc, ts, tm, p.v0, 0.0))
}

pub fn pulsed_metrics(p: &PulsedParams, tau: f64) -> Result<MeasurementFigures> {
    let s = pulsed_covariances(p, tau)?;
    figures_from_state(p, tau, &s)
}
