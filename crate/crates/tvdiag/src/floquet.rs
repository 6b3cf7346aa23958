//! Back-action-evading readout without the rotating-wave approximation.
//!
//! The two-tone drive leaves a drift that oscillates at `2ω_m`,
//! `A(t) = A⁻ e^{−2iω_m t} + A⁰ + A⁺ e^{2iω_m t}`. Fourier components of
//! the fields at `ω + 2nω_m` are coupled by `A^∓`; truncating at `|n| ≤ N`
//! leaves a block-tridiagonal linear system.

use nalgebra::DVector;

use crate::error::{invalid, Error, Result};
use crate::gaussian::{augment_loss, input_covariance, BathSpec, ModeLayout, ScatteringMatrix, SINGULAR_RCOND};
use crate::linalg::{inverse_with_rcond, to_complex, CMat, RMat, C64, I};
use crate::metrics::{figures_from, Conditioning, MeasurementFigures};
use crate::models::Coupling;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeyondRwaParams {
    pub kappa: f64,
    pub gamma: f64,
    pub omega_m: f64,
    pub coupling: Coupling,
}

impl BeyondRwaParams {
    pub fn g(&self) -> f64 {
        self.coupling.g(self.kappa, self.gamma)
    }

    pub fn cooperativity(&self) -> f64 {
        self.coupling.cooperativity(self.kappa, self.gamma)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FloquetDrift {
    pub a_minus: CMat,
    pub a_zero: RMat,
    pub a_plus: CMat,
    pub omega_m: f64,
    pub order: usize,
}

impl FloquetDrift {
    pub fn with_order(mut self, order: usize) -> Self {
        self.order = order;
        self
    }

    /// The real drift matrix at time `t`.
    pub fn drift_at(&self, t: f64) -> RMat {
        let ph = (I * (2.0 * self.omega_m * t)).exp();
        let osc = self.a_plus.map(|z| 2.0 * (z * ph).re);
        &self.a_zero + osc
    }

    pub fn dim(&self) -> usize {
        self.a_zero.nrows()
    }
}

/// Frequency components of the two-tone drift over `(X, Y, x, p)`.
pub fn decompose_drift(p: &BeyondRwaParams) -> Result<FloquetDrift> {
    for (n, v) in [("kappa", p.kappa), ("gamma", p.gamma), ("omega_m", p.omega_m)] {
        if !(v.is_finite() && v > 0.0) {
            return Err(invalid(format!("{n} must be positive")));
        }
    }
    let (k, gm, g) = (p.kappa, p.gamma, p.g());
    if !(g.is_finite() && g >= 0.0) {
        return Err(invalid("coupling must be finite and non-negative"));
    }
    #[rustfmt::skip]
    let a_zero = RMat::from_row_slice(4, 4, &[
        -k / 2.0, 0.0, 0.0, 0.0,
        0.0, -k / 2.0, -2.0 * g, 0.0,
        0.0, 0.0, -gm / 2.0, 0.0,
        -2.0 * g, 0.0, 0.0, -gm / 2.0,
    ]);
    let mut a_minus = CMat::zeros(4, 4);
    a_minus[(1, 2)] = C64::new(-g, 0.0);
    a_minus[(1, 3)] = C64::new(0.0, g);
    a_minus[(2, 0)] = C64::new(0.0, -g);
    a_minus[(3, 0)] = C64::new(-g, 0.0);
    let a_plus = a_minus.map(|z| z.conj());
    Ok(FloquetDrift { a_minus, a_zero, a_plus, omega_m: p.omega_m, order: 1 })
}

/// Sideband scattering blocks `S_n(ω)`, `n = −N..=N`, mapping inputs at
/// `ω + 2nω_m` onto the output at `ω`.
#[derive(Debug, Clone, PartialEq)]
pub struct FloquetScattering {
    pub omega: f64,
    pub order: usize,
    pub blocks: Vec<CMat>,
}

impl FloquetScattering {
    pub fn carrier(&self) -> ScatteringMatrix {
        ScatteringMatrix { s: self.blocks[self.order].clone(), omega: self.omega }
    }

    pub fn sideband(&self, n: i64) -> Option<&CMat> {
        let idx = n + self.order as i64;
        usize::try_from(idx).ok().and_then(|i| self.blocks.get(i))
    }

    /// All blocks side by side, one column group per input sideband.
    pub fn stacked(&self) -> CMat {
        let d = self.blocks[0].nrows();
        let mut out = CMat::zeros(d, d * self.blocks.len());
        for (i, b) in self.blocks.iter().enumerate() {
            out.view_mut((0, d * i), (d, d)).copy_from(b);
        }
        out
    }
}

/// Response of every Fourier component to a unit source at the carrier.
fn sideband_response(fd: &FloquetDrift, h: &[f64], omega: f64) -> Result<Vec<CMat>> {
    let d = fd.dim();
    let n = fd.order;
    let nb = 2 * n + 1;
    let mut m = CMat::zeros(d * nb, d * nb);
    let a0 = to_complex(&fd.a_zero);
    for i in 0..nb {
        let harmonic = i as f64 - n as f64;
        let mut blk = a0.clone();
        for k in 0..d {
            blk[(k, k)] += I * (omega - 2.0 * harmonic * fd.omega_m);
        }
        m.view_mut((d * i, d * i), (d, d)).copy_from(&blk);
        if i + 1 < nb {
            m.view_mut((d * i, d * (i + 1)), (d, d)).copy_from(&fd.a_minus);
        }
        if i > 0 {
            m.view_mut((d * i, d * (i - 1)), (d, d)).copy_from(&fd.a_plus);
        }
    }
    let (inv, rcond) = inverse_with_rcond(&m).ok_or(Error::SingularAtFrequency { omega, rcond: 0.0 })?;
    if rcond < SINGULAR_RCOND {
        return Err(Error::SingularAtFrequency { omega, rcond });
    }
    Ok((0..nb)
        .map(|i| {
            let mut t = inv.view((d * i, d * n), (d, d)).into_owned();
            for r in 0..d {
                for c in 0..d {
                    t[(r, c)] *= -h[c];
                }
            }
            t
        })
        .collect())
}

/// `S_n(ω) = −H T_n(ω + 2nω_m) H − δ_{n0} I`, where `T_n(ω')` is the
/// `n`-th Fourier block of the truncated resolvent driven at the carrier.
pub fn floquet_scattering(fd: &FloquetDrift, h: &[f64], omega: f64) -> Result<FloquetScattering> {
    let d = fd.dim();
    if h.len() != d {
        return Err(invalid("input coupling length does not match the drift"));
    }
    let n = fd.order as i64;
    let mut blocks = Vec::with_capacity(2 * fd.order + 1);
    for harmonic in -n..=n {
        let resp = sideband_response(fd, h, omega + 2.0 * harmonic as f64 * fd.omega_m)?;
        let t = &resp[(harmonic + n) as usize];
        let mut s = CMat::zeros(d, d);
        for r in 0..d {
            for c in 0..d {
                s[(r, c)] = t[(r, c)] * h[r];
            }
        }
        if harmonic == 0 {
            for r in 0..d {
                s[(r, r)] -= C64::new(1.0, 0.0);
            }
        }
        blocks.push(s);
    }
    Ok(FloquetScattering { omega, order: fd.order, blocks })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FloquetModel {
    pub drift: FloquetDrift,
    pub h: DVector<f64>,
    pub vin: RMat,
    pub layout: ModeLayout,
    pub eta: f64,
}

pub fn beyond_rwa_model(p: &BeyondRwaParams, bath: &BathSpec, order: usize) -> Result<FloquetModel> {
    bath.validate()?;
    let drift = decompose_drift(p)?.with_order(order);
    let layout = ModeLayout::optomechanical();
    let (sk, sg) = (p.kappa.sqrt(), p.gamma.sqrt());
    Ok(FloquetModel {
        drift,
        h: DVector::from_column_slice(&[sk, sk, sg, sg]),
        vin: input_covariance(bath, &layout),
        layout,
        eta: bath.eta,
    })
}

/// Output covariance `Re Σ_n S_n V S_nᴴ`, treating the input sidebands as
/// independent, with the carrier block supplying the transfer paths.
pub fn floquet_output(model: &FloquetModel, omega: f64) -> Result<(ScatteringMatrix, RMat)> {
    let fs = floquet_scattering(&model.drift, model.h.as_slice(), omega)?;
    let d = model.drift.dim();
    let nb = fs.blocks.len();
    let mut vbig = RMat::zeros(d * nb, d * nb);
    for i in 0..nb {
        vbig.view_mut((d * i, d * i), (d, d)).copy_from(&model.vin);
    }
    let mut s = fs.stacked();
    let mut carrier = fs.carrier();
    if model.eta < 1.0 {
        let mode = model.layout.meter_mode();
        s = augment_loss(&s, mode, model.eta);
        carrier.s = augment_loss(&carrier.s, mode, model.eta);
        let n = vbig.nrows();
        let va = model.vin[(2 * mode, 2 * mode)];
        let mut v2 = RMat::zeros(n + 2, n + 2);
        v2.view_mut((0, 0), (n, n)).copy_from(&vbig);
        v2[(n, n)] = va;
        v2[(n + 1, n + 1)] = va;
        vbig = v2;
    }
    let out = (&s * to_complex(&vbig) * s.adjoint()).map(|z| z.re);
    Ok((carrier, (&out + out.transpose()) * 0.5))
}

pub fn floquet_figures(model: &FloquetModel, omega: f64) -> Result<MeasurementFigures> {
    let (carrier, vout) = floquet_output(model, omega)?;
    let d = model.drift.dim();
    let mut vin = model.vin.clone();
    if carrier.s.ncols() > d {
        vin = vin.resize(d + 2, d + 2, 0.0);
    }
    figures_from(&carrier, &vout, &vin, &model.layout, Conditioning::Meter)
}

fn sideband_ratios(c: f64, kappa: f64, omega_m: f64) -> (f64, f64) {
    let den = kappa * kappa + 16.0 * omega_m * omega_m;
    (c * kappa * kappa / den, kappa * omega_m / den)
}

/// Detection at `ω = 0` with `γ ≪ κ, ω_m`.
pub fn floquet_qnd_metrics_closed(c: f64, kappa: f64, omega_m: f64, vx: f64) -> MeasurementFigures {
    let (r, _) = sideband_ratios(c, kappa, omega_m);
    let ivx = 1.0 / vx;
    let vc = (1.0 + (8.0 * c + ivx) * 4.0 * r) / (ivx + 32.0 * c + 32.0 * c * r * ivx);
    let ts = 1.0 / (1.0 + 4.0 * r * ivx);
    let tm = 32.0 * c / (32.0 * c + ivx * (1.0 + 32.0 * c * r));
    MeasurementFigures::from_figures(vc, ts, tm, vx, 0.0)
}

/// Alternative transfer expressions in terms of `κω_m/(κ²+16ω_m²)`. They
/// share `V_c` with [`floquet_qnd_metrics_closed`] but disagree with the
/// truncated solution for `T_s` and `T_m`; kept for comparison.
pub fn floquet_qnd_metrics_as_printed(c: f64, kappa: f64, omega_m: f64, vx: f64) -> MeasurementFigures {
    let (r, q) = sideband_ratios(c, kappa, omega_m);
    let ivx = 1.0 / vx;
    let vc = (1.0 + (8.0 * c + ivx) * 4.0 * r) / (ivx + 32.0 * c + 32.0 * c * r * ivx);
    let ts = 1.0 / (1.0 + 8.0 * ivx * (4.0 * q).powi(2));
    let tm = 32.0 * c / (32.0 * c + ivx * (1.0 + 64.0 * (4.0 * c * q).powi(2)));
    MeasurementFigures::from_figures(vc, ts, tm, vx, 0.0)
}

/// Whether `γ` is small enough against `κ` and `ω_m` for the closed forms.
pub fn closed_form_valid(kappa: f64, gamma: f64, omega_m: f64) -> bool {
    gamma <= 1e-3 * kappa.min(omega_m)
}
