//! Coherent-scattering levitodynamics with amplitude-modulated tweezers.

use crate::error::{invalid, Error, Result};
use crate::gaussian::{BathSpec, LinearModel, ModeKind, ModeLayout, ScatteringMatrix};
use crate::linalg::{CMat, RMat, C64, I};
use crate::metrics::{figures_from, Conditioning, MeasurementFigures};
use crate::models::{assemble, imperfect_qnd_model, Coupling, ImperfectQndParams};

/// Modulation frequency that removes the `p²` term for depth `alpha`.
pub fn qnd_modulation_frequency(omega_m: f64, alpha: f64) -> f64 {
    let a2 = alpha * alpha;
    omega_m * (16.0 + 7.0 * a2) / (16.0 + 8.0 * a2)
}

/// Mechanical frequency of a trap at `omega_tr` modulated with depth `alpha`.
pub fn renormalized_frequency(omega_tr: f64, alpha: f64) -> f64 {
    omega_tr * (1.0 + alpha * alpha / 2.0).sqrt()
}

/// `α̃ = α ω_tr²/(4ω_m)` for the primary tweezer, expressed through `ω_m`.
pub fn alpha_tilde_primary(alpha: f64, omega_m: f64) -> f64 {
    alpha * omega_m / (2.0 * (2.0 + alpha * alpha))
}

/// `α̃ = α² ω_tr²/(16ω_m)` for the readout tweezer, expressed through `ω_m`.
pub fn alpha_tilde_readout(alpha: f64, omega_m: f64) -> f64 {
    alpha * alpha * omega_m / (8.0 * (2.0 + alpha * alpha))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TweezerParams {
    pub omega_m: f64,
    pub alpha: f64,
    pub phi: f64,
    pub g: f64,
    /// Modulation frequency; [`qnd_modulation_frequency`] when `None`.
    pub omega_mod: Option<f64>,
    pub kappa: f64,
    pub gamma: f64,
}

impl TweezerParams {
    pub fn new(omega_m: f64, alpha: f64, g: f64, kappa: f64, gamma: f64) -> Self {
        TweezerParams { omega_m, alpha, phi: 0.0, g, omega_mod: None, kappa, gamma }
    }

    pub fn modulation_frequency(&self) -> f64 {
        self.omega_mod.unwrap_or_else(|| qnd_modulation_frequency(self.omega_m, self.alpha))
    }

    /// Readout coupling in the `−2g` drift convention of the single-cavity models.
    pub fn effective_coupling(&self) -> f64 {
        self.alpha * self.g / 4.0
    }

    /// `(μ, ν)` of the residual `μ x² + ν p²` terms in the modulation frame.
    pub fn quadratic_terms(&self) -> (f64, f64) {
        let a2 = self.alpha * self.alpha;
        let shift = a2 * self.omega_m / (16.0 * (2.0 + a2));
        let half = (self.omega_m - self.modulation_frequency()) / 2.0;
        (half + shift, half - shift)
    }

    fn validate(&self) -> Result<()> {
        for (n, v) in [("omega_m", self.omega_m), ("kappa", self.kappa), ("gamma", self.gamma)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid(format!("{n} must be positive")));
            }
        }
        if !(self.alpha.is_finite() && self.alpha >= 0.0) {
            return Err(invalid("alpha must be non-negative"));
        }
        if !(self.g.is_finite() && self.g >= 0.0 && self.phi.is_finite()) {
            return Err(invalid("g and phi must be finite, g non-negative"));
        }
        Ok(())
    }
}

/// Single modulated tweezer reading out `x_φ = x cos φ − p sin φ`.
pub fn single_tweezer_qnd_model(p: &TweezerParams, bath: &BathSpec) -> Result<LinearModel> {
    p.validate()?;
    let (mu, nu) = p.quadratic_terms();
    let q = ImperfectQndParams {
        kappa: p.kappa,
        gamma: p.gamma,
        coupling: Coupling::G(p.effective_coupling()),
        delta_c: 0.0,
        mu,
        nu,
        xi: 0.0,
    };
    let mut m = imperfect_qnd_model(&q, bath)?;
    if p.phi != 0.0 {
        let (c, s) = (p.phi.cos(), p.phi.sin());
        let r = RMat::from_row_slice(2, 2, &[c, -s, s, c]);
        let blk = m.vin.view((2, 2), (2, 2)).into_owned();
        let rot = &r * blk * r.transpose();
        m.vin.view_mut((2, 2), (2, 2)).copy_from(&rot);
    }
    Ok(m)
}

/// Primary (index 1) and readout (index 2) tweezers sharing one particle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualTweezerParams {
    pub kappa1: f64,
    pub kappa2: f64,
    pub gamma: f64,
    pub omega_m: f64,
    pub g1: f64,
    pub g2: f64,
    pub alpha1: f64,
    pub alpha2: f64,
    pub alpha_tilde1: f64,
    pub alpha_tilde2: f64,
}

impl DualTweezerParams {
    #[allow(clippy::too_many_arguments)]
    pub fn new(kappa1: f64, kappa2: f64, gamma: f64, omega_m: f64, g1: f64, g2: f64, alpha1: f64, alpha2: f64) -> Self {
        DualTweezerParams {
            kappa1,
            kappa2,
            gamma,
            omega_m,
            g1,
            g2,
            alpha1,
            alpha2,
            alpha_tilde1: alpha_tilde_primary(alpha1, omega_m),
            alpha_tilde2: alpha_tilde_readout(alpha2, omega_m),
        }
    }

    /// Splits a fixed total `g_T² = g₁² + g₂²`, with `readout_fraction = g₂²/g_T²`.
    pub fn with_total_coupling(mut self, g_total: f64, readout_fraction: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&readout_fraction) || !(g_total.is_finite() && g_total >= 0.0) {
            return Err(invalid("readout fraction must lie in [0, 1] and g_T be non-negative"));
        }
        self.g1 = g_total * (1.0 - readout_fraction).sqrt();
        self.g2 = g_total * readout_fraction.sqrt();
        Ok(self)
    }

    pub fn c1(&self) -> f64 {
        self.g1 * self.g1 / (4.0 * self.gamma * self.kappa1)
    }

    pub fn c2(&self) -> f64 {
        self.g2 * self.g2 / (4.0 * self.gamma * self.kappa2)
    }

    /// Mechanical linewidth including optical damping by the primary tweezer.
    pub fn gamma_m(&self) -> f64 {
        self.gamma + self.g1 * self.g1 * (1.0 - self.alpha1 * self.alpha1 / 4.0) / self.kappa1
    }

    fn validate(&self) -> Result<()> {
        for (n, v) in [("kappa1", self.kappa1), ("kappa2", self.kappa2), ("gamma", self.gamma)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid(format!("{n} must be positive")));
            }
        }
        for (n, v) in [("g1", self.g1), ("g2", self.g2), ("alpha1", self.alpha1), ("alpha2", self.alpha2), ("omega_m", self.omega_m)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(invalid(format!("{n} must be non-negative")));
            }
        }
        if !(self.alpha_tilde1.is_finite() && self.alpha_tilde2.is_finite()) {
            return Err(invalid("alpha_tilde must be finite"));
        }
        Ok(())
    }
}

pub fn dual_tweezer_layout() -> ModeLayout {
    ModeLayout::new(
        &["X1", "Y1", "X2", "Y2", "x", "p"],
        &[ModeKind::Optical, ModeKind::Optical, ModeKind::Mechanical],
        4,
        3,
        5,
    )
    .expect("static layout")
}

/// Full model over `(X₁, Y₁, X₂, Y₂, x, p)` with the readout on `Y₂`.
pub fn dual_tweezer_model(p: &DualTweezerParams, bath: &BathSpec) -> Result<LinearModel> {
    p.validate()?;
    let (k1, k2, gm) = (p.kappa1, p.kappa2, p.gamma);
    let lo = p.g1 * (p.alpha1 - 2.0) / 4.0;
    let hi = p.g1 * (p.alpha1 + 2.0) / 4.0;
    let rd = p.g2 * p.alpha2 / 2.0;
    let mut a = RMat::zeros(6, 6);
    for (i, d) in [-k1 / 2.0, -k1 / 2.0, -k2 / 2.0, -k2 / 2.0, -gm / 2.0, -gm / 2.0].into_iter().enumerate() {
        a[(i, i)] = d;
    }
    a[(0, 5)] = lo;
    a[(1, 4)] = hi;
    a[(3, 4)] = rd;
    a[(4, 1)] = lo;
    a[(5, 0)] = hi;
    a[(5, 2)] = rd;
    a[(5, 4)] = -4.0 * (p.alpha_tilde1 + p.alpha_tilde2);
    let (s1, s2, sg) = (k1.sqrt(), k2.sqrt(), gm.sqrt());
    assemble(a, &[s1, s1, s2, s2, sg, sg], dual_tweezer_layout(), bath)
}

/// Linewidth and quadrature variances of the mechanics dressed by the
/// primary tweezer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompoundVariances {
    pub gamma_m: f64,
    pub vx: f64,
    pub vp: f64,
    pub vxp: f64,
}

/// Adiabatic compound variances with a vacuum primary-tweezer input.
pub fn compound_signal_variances(p: &DualTweezerParams, bath: &BathSpec) -> Result<CompoundVariances> {
    let gamma_m = p.gamma_m();
    if gamma_m <= 0.0 {
        return Err(Error::NegativeLinewidth { gamma_m });
    }
    let r = p.g1 * p.g1 / (8.0 * gamma_m * p.kappa1);
    Ok(CompoundVariances {
        gamma_m,
        vx: p.gamma * bath.vx() / gamma_m + r * (2.0 - p.alpha1).powi(2),
        vp: p.gamma * bath.vp() / gamma_m + r * (2.0 + p.alpha1).powi(2),
        vxp: p.gamma * bath.vxp() / gamma_m,
    })
}

/// Compound variances seen at detection frequency `omega`, with the
/// primary cavity response `χ₁ = (κ₁ − 2iω)⁻¹` and thermal optical input.
pub fn compound_signal_variances_at(p: &DualTweezerParams, bath: &BathSpec, omega: f64) -> Result<CompoundVariances> {
    let gamma_m = p.gamma_m();
    if gamma_m <= 0.0 {
        return Err(Error::NegativeLinewidth { gamma_m });
    }
    let chi1 = 1.0 / (p.kappa1 * p.kappa1 + 4.0 * omega * omega);
    let opt = p.g1 * p.g1 * chi1 * p.kappa1 * bath.optical_variance();
    Ok(CompoundVariances {
        gamma_m,
        vx: (opt * (p.alpha1 - 2.0).powi(2) + 4.0 * p.gamma * bath.vx()) / (4.0 * gamma_m),
        vp: (opt * (p.alpha1 + 2.0).powi(2) + 4.0 * p.gamma * bath.vp()) / (4.0 * gamma_m),
        vxp: p.gamma * bath.vxp() / gamma_m,
    })
}

/// Readout figures in terms of the rescaled cooperativities
/// `C_i = g_i²/(4γκ_i)` and the compound signal variance `vxs`.
pub fn dual_tweezer_metrics(c1: f64, c2: f64, alpha1: f64, alpha2: f64, vxs: f64) -> MeasurementFigures {
    let d = 1.0 + c1 * (4.0 - alpha1 * alpha1);
    let k = 32.0 * alpha2 * alpha2 * c2;
    let den = d / vxs + k;
    MeasurementFigures::from_figures(d / den, 1.0, k / den, vxs, 0.0)
}

/// Readout cooperativity at which [`dual_tweezer_metrics`] reaches
/// `V_c = ½`, with `vxs` the adiabatic compound variance.
pub fn dual_tweezer_threshold(c1: f64, alpha1: f64, alpha2: f64, vx: f64) -> f64 {
    let d = 1.0 + c1 * (4.0 - alpha1 * alpha1);
    let num = 2.0 * vx - 1.0 - 2.0 * c1 * alpha1 * (2.0 - alpha1);
    d * num / (16.0 * alpha2 * alpha2 * (2.0 * vx + c1 * (2.0 - alpha1).powi(2)))
}

/// Alternative threshold expression built on `(2 − α₁²)²` instead of
/// `(2 − α₁)²`; it coincides with [`dual_tweezer_threshold`] at `α₁ = 0`.
pub fn dual_tweezer_threshold_as_printed(c1: f64, alpha1: f64, alpha2: f64, vx: f64) -> f64 {
    let a2 = alpha1 * alpha1;
    let d = 1.0 + c1 * (4.0 - a2);
    let num = 2.0 * vx - c1 * a2 * (3.0 - a2) - 1.0;
    d * num / (16.0 * alpha2 * alpha2 * (2.0 * vx + c1 * (2.0 - a2).powi(2)))
}

/// Readout-tweezer scattering over `(X₂, Y₂, x̄, p̄)` after eliminating the
/// primary cavity.
pub fn reduced_scattering(p: &DualTweezerParams, omega: f64) -> Result<ScatteringMatrix> {
    p.validate()?;
    let gamma_m = p.gamma_m();
    if gamma_m <= 0.0 {
        return Err(Error::NegativeLinewidth { gamma_m });
    }
    let w = I * (2.0 * omega);
    let k2 = C64::new(p.kappa2, 0.0);
    let gmm = C64::new(gamma_m, 0.0);
    let chi2 = (k2 - w).inv();
    let chim = (gmm - w).inv();
    let km = (k2 + w) * chi2;
    let gm_ph = (gmm + w) * chim;
    let s = chi2 * chim * (2.0 * p.g2 * p.alpha2 * (gamma_m * p.kappa2).sqrt());
    let om = chim * chim * (-16.0 * (p.alpha_tilde1 + p.alpha_tilde2) * gamma_m);
    let z = C64::new(0.0, 0.0);
    #[rustfmt::skip]
    let m = CMat::from_row_slice(4, 4, &[
        km, z, z, z,
        z, km, s, z,
        z, z, gm_ph, z,
        s, z, om, gm_ph,
    ]);
    Ok(ScatteringMatrix { s: m, omega })
}

/// Figures from [`reduced_scattering`] with the compound mechanical input.
/// `vxs` overrides the compound position variance.
pub fn reduced_figures(p: &DualTweezerParams, bath: &BathSpec, omega: f64, vxs: Option<f64>) -> Result<MeasurementFigures> {
    bath.validate()?;
    let cv = compound_signal_variances_at(p, bath, omega)?;
    let sp = reduced_scattering(p, omega)?;
    let sm = reduced_scattering(p, -omega)?;
    let vo = bath.optical_variance();
    let mut vin = RMat::from_diagonal(&nalgebra::DVector::from_column_slice(&[vo, vo, vxs.unwrap_or(cv.vx), cv.vp]));
    vin[(2, 3)] = cv.vxp;
    vin[(3, 2)] = cv.vxp;
    let (sp, sm, vin) = if bath.eta < 1.0 {
        let aug = |s: &ScatteringMatrix| ScatteringMatrix { s: crate::gaussian::augment_loss(&s.s, 0, bath.eta), omega: s.omega };
        (aug(&sp), aug(&sm), vin.resize(6, 6, 0.0).map_with_location(|i, j, x| if i == j && i >= 4 { vo } else { x }))
    } else {
        (sp, sm, vin)
    };
    let vout = crate::gaussian::output_covariance(&sp, &sm, &vin)?;
    figures_from(&sp, &vout, &vin, &ModeLayout::optomechanical(), Conditioning::Meter)
}
