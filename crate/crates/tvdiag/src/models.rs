//! Scenario builders and closed-form figures for the single-cavity
//! measurement schemes.

use nalgebra::DVector;

use crate::error::{invalid, Result};
use crate::gaussian::{apply_detection_loss, input_covariance, BathSpec, LinearModel, ModeKind, ModeLayout};
use crate::linalg::RMat;
use crate::metrics::MeasurementFigures;

/// Coupling given either as a rate or as the cooperativity `C = 4g²/(κγ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Coupling {
    G(f64),
    Cooperativity(f64),
}

impl Coupling {
    pub fn g(&self, kappa: f64, gamma: f64) -> f64 {
        match *self {
            Coupling::G(g) => g,
            Coupling::Cooperativity(c) => (c * kappa * gamma).sqrt() / 2.0,
        }
    }

    pub fn cooperativity(&self, kappa: f64, gamma: f64) -> f64 {
        match *self {
            Coupling::G(g) => 4.0 * g * g / (kappa * gamma),
            Coupling::Cooperativity(c) => c,
        }
    }

    fn validate(&self) -> Result<()> {
        let v = match *self {
            Coupling::G(g) => g,
            Coupling::Cooperativity(c) => c,
        };
        if !(v.is_finite() && v >= 0.0) {
            return Err(invalid("coupling must be finite and non-negative"));
        }
        Ok(())
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(invalid(format!("{name} must be positive, got {v}")))
    }
}

fn finite(name: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("{name} must be finite")))
    }
}

/// Wraps a drift matrix into a model with bath-derived inputs, detection
/// loss and a stability check.
pub(crate) fn assemble(a: RMat, h: &[f64], layout: ModeLayout, bath: &BathSpec) -> Result<LinearModel> {
    bath.validate()?;
    let vin = input_covariance(bath, &layout);
    let model = LinearModel::new(a, DVector::from_column_slice(h), vin, layout)?.ensure_stable()?;
    if bath.eta < 1.0 {
        apply_detection_loss(&model, bath.eta)
    } else {
        Ok(model)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DisplacementParams {
    pub kappa: f64,
    pub gamma: f64,
    pub omega_m: f64,
    pub coupling: Coupling,
}

impl DisplacementParams {
    pub fn g(&self) -> f64 {
        self.coupling.g(self.kappa, self.gamma)
    }

    pub fn cooperativity(&self) -> f64 {
        self.coupling.cooperativity(self.kappa, self.gamma)
    }
}

/// Drift over `(X, Y, x, p)` for a position-coupled cavity.
pub fn displacement_model(p: &DisplacementParams, bath: &BathSpec) -> Result<LinearModel> {
    positive("kappa", p.kappa)?;
    positive("gamma", p.gamma)?;
    if !(p.omega_m.is_finite() && p.omega_m >= 0.0) {
        return Err(invalid("omega_m must be non-negative"));
    }
    p.coupling.validate()?;
    let (k, gm, wm, g) = (p.kappa, p.gamma, p.omega_m, p.g());
    #[rustfmt::skip]
    let a = RMat::from_row_slice(4, 4, &[
        -k / 2.0, 0.0, 0.0, 0.0,
        0.0, -k / 2.0, -2.0 * g, 0.0,
        0.0, 0.0, -gm / 2.0, wm,
        -2.0 * g, 0.0, -wm, -gm / 2.0,
    ]);
    let (sk, sg) = (k.sqrt(), gm.sqrt());
    assemble(a, &[sk, sk, sg, sg], ModeLayout::optomechanical(), bath)
}

/// Ideal back-action-evading readout: the displacement model with no free
/// mechanical rotation.
pub fn ideal_qnd_model(kappa: f64, gamma: f64, coupling: Coupling, bath: &BathSpec) -> Result<LinearModel> {
    displacement_model(&DisplacementParams { kappa, gamma, omega_m: 0.0, coupling }, bath)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CqncParams {
    pub kappa: f64,
    pub gamma: f64,
    pub omega_m: f64,
    pub coupling: Coupling,
    /// Bath of the negative-mass oscillator; the mechanical bath if `None`.
    pub ancilla_bath: Option<BathSpec>,
}

pub fn cqnc_layout() -> ModeLayout {
    ModeLayout::new(
        &["X", "Y", "x", "p", "Xc", "Yc"],
        &[ModeKind::Optical, ModeKind::Mechanical, ModeKind::Mechanical],
        2,
        1,
        3,
    )
    .expect("static layout")
}

/// Index of the negative-mass amplitude quadrature in [`cqnc_layout`].
pub const CQNC_ANCILLA: usize = 4;

/// Cavity coupled to a mechanical mode and a matched negative-mass
/// oscillator, over `(X, Y, x, p, X_c, Y_c)`.
pub fn cqnc_model(p: &CqncParams, bath: &BathSpec) -> Result<LinearModel> {
    positive("kappa", p.kappa)?;
    positive("gamma", p.gamma)?;
    positive("omega_m", p.omega_m)?;
    p.coupling.validate()?;
    let (k, gm, wm) = (p.kappa, p.gamma, p.omega_m);
    let g = p.coupling.g(k, gm);
    #[rustfmt::skip]
    let a = RMat::from_row_slice(6, 6, &[
        -k / 2.0, 0.0, 0.0, 0.0, 0.0, 0.0,
        0.0, -k / 2.0, -2.0 * g, 0.0, -2.0 * g, 0.0,
        0.0, 0.0, -gm / 2.0, wm, 0.0, 0.0,
        -2.0 * g, 0.0, -wm, -gm / 2.0, 0.0, 0.0,
        0.0, 0.0, 0.0, 0.0, -gm / 2.0, -wm,
        -2.0 * g, 0.0, 0.0, 0.0, wm, -gm / 2.0,
    ]);
    let (sk, sg) = (k.sqrt(), gm.sqrt());
    let layout = cqnc_layout();
    let mut model = assemble(a, &[sk, sk, sg, sg, sg, sg], layout, bath)?;
    if let Some(ab) = p.ancilla_bath {
        ab.validate()?;
        let blk = ab.mechanical_block();
        for i in 0..2 {
            for j in 0..2 {
                model.vin[(4 + i, 4 + j)] = blk[i][j];
            }
        }
    }
    Ok(model)
}

/// Back-action-evading readout with cavity detuning and bilinear mechanical
/// terms `μ x² + ν p² + ξ (xp + px)/2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImperfectQndParams {
    pub kappa: f64,
    pub gamma: f64,
    pub coupling: Coupling,
    pub delta_c: f64,
    pub mu: f64,
    pub nu: f64,
    pub xi: f64,
}

impl ImperfectQndParams {
    pub fn ideal(kappa: f64, gamma: f64, coupling: Coupling) -> Self {
        ImperfectQndParams { kappa, gamma, coupling, delta_c: 0.0, mu: 0.0, nu: 0.0, xi: 0.0 }
    }

    /// From free rotation `δ_m` and squeezing `ζ`: `μ = (δ_m+ζ)/2`,
    /// `ν = (δ_m−ζ)/2`.
    pub fn with_rotation_and_squeezing(mut self, delta_m: f64, zeta: f64) -> Self {
        self.mu = (delta_m + zeta) / 2.0;
        self.nu = (delta_m - zeta) / 2.0;
        self
    }

    pub fn delta_m(&self) -> f64 {
        self.mu + self.nu
    }

    pub fn zeta(&self) -> f64 {
        self.mu - self.nu
    }

    /// Rotation cancels squeezing and no `p²` term is left.
    pub fn is_compensated(&self) -> bool {
        self.nu.abs() <= 1e-12 * self.mu.abs().max(self.gamma)
    }
}

pub fn imperfect_qnd_model(p: &ImperfectQndParams, bath: &BathSpec) -> Result<LinearModel> {
    positive("kappa", p.kappa)?;
    positive("gamma", p.gamma)?;
    p.coupling.validate()?;
    for (n, v) in [("delta_c", p.delta_c), ("mu", p.mu), ("nu", p.nu), ("xi", p.xi)] {
        finite(n, v)?;
    }
    if p.xi.abs() >= p.gamma / 2.0 {
        return Err(invalid(format!("|xi| = {} must stay below gamma/2", p.xi.abs())));
    }
    let (k, gm) = (p.kappa, p.gamma);
    let g = p.coupling.g(k, gm);
    #[rustfmt::skip]
    let a = RMat::from_row_slice(4, 4, &[
        -k / 2.0, p.delta_c, 0.0, 0.0,
        -p.delta_c, -k / 2.0, -2.0 * g, 0.0,
        0.0, 0.0, p.xi - gm / 2.0, 2.0 * p.nu,
        -2.0 * g, 0.0, -2.0 * p.mu, -p.xi - gm / 2.0,
    ]);
    let (sk, sg) = (k.sqrt(), gm.sqrt());
    assemble(a, &[sk, sk, sg, sg], ModeLayout::optomechanical(), bath)
}

/// Ideal readout with detection efficiency `η` and thermal cavity input `n_c`.
pub fn ideal_qnd_metrics(c: f64, vx: f64, eta: f64, n_c: f64) -> MeasurementFigures {
    let k = 16.0 * c * eta / (n_c + 0.5);
    let vc = 1.0 / (1.0 / vx + k);
    let tm = k / (1.0 / vx + k);
    MeasurementFigures::from_figures(vc, 1.0, tm, vx, 0.0)
}

/// Smallest cooperativity at which ideal readout squeezes below vacuum.
pub fn qnd_cooperativity_threshold(vx: f64) -> f64 {
    ((2.0 * vx - 1.0) / (32.0 * vx)).max(0.0)
}

/// Cooperativity balancing imprecision and back-action at frequency `omega`.
pub fn c_sql(kappa: f64, gamma: f64, omega_m: f64, omega: f64) -> f64 {
    let z = nalgebra::Complex::new(-gamma, 2.0 * omega);
    let t = z * z + 4.0 * omega_m * omega_m;
    (kappa * kappa + 4.0 * omega * omega) / (16.0 * kappa * kappa * gamma * omega_m) * t.norm()
}

/// High-quality-factor value of [`c_sql`] on mechanical resonance.
pub fn c_sql_approx(kappa: f64, omega_m: f64) -> f64 {
    0.25 + omega_m * omega_m / (kappa * kappa)
}

/// Effective cooperativity of a detuned cavity.
pub fn detuned_cooperativity(c: f64, kappa: f64, delta_c: f64) -> f64 {
    let k2 = kappa * kappa;
    c * k2 * k2 / (k2 + 4.0 * delta_c * delta_c).powi(2)
}

/// Closed-form figures on cavity resonance with a `ν p²` term.
pub fn nu_model_closed_metrics(c: f64, nu: f64, gamma: f64, bath: &BathSpec) -> MeasurementFigures {
    let (vx, vp, vxp) = (bath.vx(), bath.vp(), bath.vxp());
    let g2 = gamma * gamma;
    let den = 512.0 * c * nu * nu * (2.0 * c + vp) + g2 * (1.0 + 32.0 * c * vx) + 256.0 * c * gamma * nu * vxp;
    let num = g2 * vx
        + 16.0 * gamma * nu * vxp
        + 64.0 * nu * nu * ((2.0 * c + vp) * (1.0 + 8.0 * c * vx) - 8.0 * c * vxp * vxp);
    let vc = num / den;
    let ts = vx * g2 / (vx * g2 + 16.0 * nu * (4.0 * nu * (2.0 * c + vp) + gamma * vxp));
    let tm = 32.0 * c * g2 * vx / den;
    MeasurementFigures::from_figures(vc, ts, tm, vx, 0.0)
}

/// Closed-form figures with position squeezing `ξ`.
pub fn xi_model_closed_metrics(c: f64, xi: f64, gamma: f64, vx: f64) -> MeasurementFigures {
    let v_xi = vx * ((gamma + 2.0 * xi) / (gamma - 2.0 * xi)).powi(2);
    let k = 32.0 * c * gamma * gamma / (gamma + 2.0 * xi).powi(2);
    let vc = 1.0 / (1.0 / v_xi + k);
    let tm = k / (1.0 / v_xi + k);
    MeasurementFigures::from_figures(vc, 1.0, tm, vx, 0.0)
}
