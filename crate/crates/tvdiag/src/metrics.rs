//! Conditional variance, transfer coefficients and regime classification.

use std::fmt;

use crate::error::{Error, Result};
use crate::gaussian::{output_covariance_at, LinearModel, ModeLayout, ScatteringMatrix};
use crate::linalg::RMat;

/// Meter variances at or below this are treated as a missing meter channel.
pub const DEGENERATE_METER: f64 = 1e-14;
/// Scattering paths below this magnitude count as absent.
pub const ZERO_PATH: f64 = 1e-14;
/// Round-off allowance before a negative conditional variance is an error.
pub const CLAMP_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Regime {
    Classical,
    Idt,
    Qsp,
    Qnd,
}

impl Regime {
    pub fn as_str(&self) -> &'static str {
        match self {
            Regime::Classical => "Classical",
            Regime::Idt => "IDT",
            Regime::Qsp => "QSP",
            Regime::Qnd => "QND",
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasurementFigures {
    pub vc: f64,
    pub ts: f64,
    pub tm: f64,
    pub ns_eq: f64,
    pub nm_eq: f64,
    pub regime: Regime,
    pub omega: f64,
}

impl MeasurementFigures {
    /// Builds the record from the three figures, deriving the equivalent
    /// noises from `T = V/(V + n)`.
    pub fn from_figures(vc: f64, ts: f64, tm: f64, signal_variance: f64, omega: f64) -> Self {
        let n_of = |t: f64| if t > 0.0 { signal_variance * (1.0 / t - 1.0) } else { f64::INFINITY };
        MeasurementFigures {
            vc,
            ts,
            tm,
            ns_eq: n_of(ts),
            nm_eq: n_of(tm),
            regime: classify_regime(vc, ts, tm),
            omega,
        }
    }

    pub fn t_sum(&self) -> f64 {
        self.ts + self.tm
    }
}

/// Which outputs the signal is conditioned on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Conditioning {
    /// The meter output alone.
    #[default]
    Meter,
    /// Meter and an ancilla output, including the meter–ancilla correlation.
    MeterAndAncilla { ancilla: usize },
    /// Meter and ancilla treated as uncorrelated.
    MeterAndAncillaUncorrelated { ancilla: usize },
}

/// `V_ss − V_sm² / V_mm`, clamped at zero within round-off.
pub fn conditional_variance(vout: &RMat, layout: &ModeLayout) -> Result<f64> {
    let (s, m) = (layout.signal, layout.meter);
    let vmm = vout[(m, m)];
    if vmm <= DEGENERATE_METER {
        return Err(Error::DegenerateMeter { v22: vmm });
    }
    clamp(vout[(s, s)] - vout[(s, m)].powi(2) / vmm, vout[(s, s)])
}

fn clamp(vc: f64, scale: f64) -> Result<f64> {
    if vc >= 0.0 {
        Ok(vc)
    } else if vc > -CLAMP_TOLERANCE * scale.abs().max(1.0) {
        Ok(0.0)
    } else {
        Err(Error::InvalidParameter(format!("negative conditional variance {vc}")))
    }
}

/// Conditional variance for the negative-mass layout `(X, Y, x, p, X_c, Y_c)`.
pub fn cqnc_conditional_variance(vout: &RMat, layout: &ModeLayout, conditioning: Conditioning) -> Result<f64> {
    let (s, m) = (layout.signal, layout.meter);
    match conditioning {
        Conditioning::Meter => conditional_variance(vout, layout),
        Conditioning::MeterAndAncilla { ancilla: a } => {
            let (v22, v55, v25) = (vout[(m, m)], vout[(a, a)], vout[(m, a)]);
            let (v23, v35) = (vout[(m, s)], vout[(s, a)]);
            let det = v22 * v55 - v25 * v25;
            if v22 <= DEGENERATE_METER || det <= DEGENERATE_METER * v55.abs().max(1.0) {
                return Err(Error::DegenerateMeter { v22 });
            }
            let num = v22 * v35 * v35 + v23 * v23 * v55 - 2.0 * v23 * v25 * v35;
            clamp(vout[(s, s)] - num / det, vout[(s, s)])
        }
        Conditioning::MeterAndAncillaUncorrelated { ancilla: a } => {
            let (v22, v55) = (vout[(m, m)], vout[(a, a)]);
            if v22 <= DEGENERATE_METER || v55 <= DEGENERATE_METER {
                return Err(Error::DegenerateMeter { v22: v22.min(v55) });
            }
            let vc = vout[(s, s)] - vout[(s, m)].powi(2) / v22 - vout[(s, a)].powi(2) / v55;
            clamp(vc, vout[(s, s)])
        }
    }
}

/// Measurement-equivalent input noises `(n_s, n_m)`: the output variance
/// referred back through the signal path, minus the signal input variance.
/// Infinite when the path vanishes.
pub fn equivalent_noises(s: &ScatteringMatrix, vout: &RMat, vin: &RMat, layout: &ModeLayout) -> (f64, f64) {
    let sig = layout.signal;
    let v = vin[(sig, sig)];
    let n_for = |row: usize| {
        let path = s.get(row, sig).norm();
        if path < ZERO_PATH {
            f64::INFINITY
        } else {
            vout[(row, row)] / (path * path) - v
        }
    };
    (n_for(sig), n_for(layout.meter))
}

/// `T = V/(V + n_eq)` for signal and meter, zero for a vanished path.
pub fn transfer_coefficients(s: &ScatteringMatrix, vout: &RMat, vin: &RMat, layout: &ModeLayout) -> (f64, f64) {
    let sig = layout.signal;
    let v = vin[(sig, sig)];
    let t_for = |row: usize| {
        let path = s.get(row, sig).norm();
        if path < ZERO_PATH {
            0.0
        } else {
            path * path * v / vout[(row, row)]
        }
    };
    (t_for(sig), t_for(layout.meter))
}

/// QND needs `V_c < ½` and `T_s + T_m > 1`; ties fall on the non-QND side.
pub fn classify_regime(vc: f64, ts: f64, tm: f64) -> Regime {
    let squeezed = vc < 0.5;
    let transfers = ts + tm > 1.0;
    match (squeezed, transfers) {
        (true, true) => Regime::Qnd,
        (true, false) => Regime::Qsp,
        (false, true) => Regime::Idt,
        (false, false) => Regime::Classical,
    }
}

/// Figures of merit from a scattering matrix and its output covariance.
pub fn figures_from(
    s: &ScatteringMatrix,
    vout: &RMat,
    vin: &RMat,
    layout: &ModeLayout,
    conditioning: Conditioning,
) -> Result<MeasurementFigures> {
    let vc = cqnc_conditional_variance(vout, layout, conditioning)?;
    let (ts, tm) = transfer_coefficients(s, vout, vin, layout);
    let (ns_eq, nm_eq) = equivalent_noises(s, vout, vin, layout);
    Ok(MeasurementFigures { vc, ts, tm, ns_eq, nm_eq, regime: classify_regime(vc, ts, tm), omega: s.omega })
}

/// Evaluates a model at detection frequency `omega`.
pub fn evaluate(model: &LinearModel, omega: f64, conditioning: Conditioning) -> Result<MeasurementFigures> {
    let (s, vout) = output_covariance_at(model, omega)?;
    figures_from(&s, &vout, &model.vin, &model.layout, conditioning)
}
