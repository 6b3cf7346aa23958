//! Linear input–output models: drift matrices, input covariances,
//! frequency-domain scattering and output covariances.

use nalgebra::DVector;

use crate::error::{invalid, Error, Result};
use crate::linalg::{inverse_with_rcond, lyapunov, spectral_abscissa, to_complex, CMat, RMat, C64, I};

/// Reciprocal condition number below which `A + iωI` counts as singular.
pub const SINGULAR_RCOND: f64 = 1e-12;
/// Largest imaginary residue silently dropped from an output covariance.
pub const HERMITIAN_RESIDUE: f64 = 1e-10;
/// Eigenvalues with real part above `-STABILITY_MARGIN` are rejected.
pub const STABILITY_MARGIN: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModeKind {
    Optical,
    Mechanical,
}

/// Quadrature ordering of a model and the roles of its channels.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeLayout {
    pub labels: Vec<String>,
    pub kinds: Vec<ModeKind>,
    pub signal: usize,
    pub meter: usize,
    pub conjugate: usize,
}

impl ModeLayout {
    pub fn new(
        labels: &[&str],
        kinds: &[ModeKind],
        signal: usize,
        meter: usize,
        conjugate: usize,
    ) -> Result<Self> {
        let n = labels.len();
        if n == 0 || !n.is_multiple_of(2) {
            return Err(invalid(format!("layout needs an even number of quadratures, got {n}")));
        }
        if kinds.len() * 2 != n {
            return Err(invalid("one mode kind per quadrature pair is required"));
        }
        if signal >= n || meter >= n || conjugate >= n {
            return Err(invalid("channel index out of range"));
        }
        if signal == meter || signal == conjugate || meter == conjugate {
            return Err(invalid("signal, meter and conjugate indices must differ"));
        }
        Ok(ModeLayout {
            labels: labels.iter().map(|s| s.to_string()).collect(),
            kinds: kinds.to_vec(),
            signal,
            meter,
            conjugate,
        })
    }

    /// `(X, Y, x, p)` with `x` as signal and `Y` as meter.
    pub fn optomechanical() -> Self {
        Self::new(&["X", "Y", "x", "p"], &[ModeKind::Optical, ModeKind::Mechanical], 2, 1, 3)
            .expect("static layout")
    }

    pub fn dim(&self) -> usize {
        self.labels.len()
    }

    pub fn modes(&self) -> usize {
        self.kinds.len()
    }

    pub fn meter_mode(&self) -> usize {
        self.meter / 2
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }
}

/// Mechanical and optical bath parameters plus detection efficiency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BathSpec {
    pub n_m: f64,
    pub m_sq: C64,
    pub n_c: f64,
    pub eta: f64,
}

impl BathSpec {
    pub fn new(n_m: f64, m_sq: C64, n_c: f64, eta: f64) -> Result<Self> {
        let b = BathSpec { n_m, m_sq, n_c, eta };
        b.validate()?;
        Ok(b)
    }

    /// Thermal mechanical bath, vacuum cavity input, perfect detection.
    pub fn thermal(n_m: f64) -> Self {
        BathSpec { n_m, m_sq: C64::new(0.0, 0.0), n_c: 0.0, eta: 1.0 }
    }

    pub fn with_squeezing(self, m_sq: C64) -> Result<Self> {
        Self::new(self.n_m, m_sq, self.n_c, self.eta)
    }

    pub fn with_cavity_occupation(self, n_c: f64) -> Result<Self> {
        Self::new(self.n_m, self.m_sq, n_c, self.eta)
    }

    pub fn with_efficiency(self, eta: f64) -> Result<Self> {
        Self::new(self.n_m, self.m_sq, self.n_c, eta)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.n_m, self.m_sq.re, self.m_sq.im, self.n_c, self.eta];
        if finite.iter().any(|x| !x.is_finite()) {
            return Err(invalid("bath parameters must be finite"));
        }
        if self.n_m < 0.0 || self.n_c < 0.0 {
            return Err(invalid("bath occupations must be non-negative"));
        }
        if !(0.0..=1.0).contains(&self.eta) {
            return Err(invalid(format!("detection efficiency {} outside [0, 1]", self.eta)));
        }
        if self.m_sq.norm_sqr() > self.n_m * (self.n_m + 1.0) * (1.0 + 1e-12) + 1e-300 {
            return Err(invalid("|m_sq|^2 exceeds n_m (n_m + 1)"));
        }
        Ok(())
    }

    pub fn vx(&self) -> f64 {
        self.n_m + self.m_sq.re + 0.5
    }

    pub fn vp(&self) -> f64 {
        self.n_m - self.m_sq.re + 0.5
    }

    pub fn vxp(&self) -> f64 {
        self.m_sq.im
    }

    pub fn optical_variance(&self) -> f64 {
        self.n_c + 0.5
    }

    pub fn mechanical_block(&self) -> [[f64; 2]; 2] {
        [[self.vx(), self.vxp()], [self.vxp(), self.vp()]]
    }
}

/// `u̇ = A u + H u_in` with input covariance `vin`.
///
/// When `loss` is set the measured optical mode passes a beam splitter of
/// that transmission and `vin` carries two extra ancilla entries.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub a: RMat,
    pub h: DVector<f64>,
    pub vin: RMat,
    pub layout: ModeLayout,
    pub loss: Option<f64>,
}

impl LinearModel {
    pub fn new(a: RMat, h: DVector<f64>, vin: RMat, layout: ModeLayout) -> Result<Self> {
        let n = layout.dim();
        if a.nrows() != n || a.ncols() != n || h.len() != n || vin.nrows() != n || vin.ncols() != n {
            return Err(invalid("model dimensions do not match the layout"));
        }
        if h.iter().any(|x| *x < 0.0 || !x.is_finite()) {
            return Err(invalid("input couplings must be finite and non-negative"));
        }
        check_covariance(&vin)?;
        Ok(LinearModel { a, h, vin, layout, loss: None })
    }

    pub fn dim(&self) -> usize {
        self.layout.dim()
    }

    /// Rejects models with an eigenvalue at or right of `-STABILITY_MARGIN`.
    pub fn ensure_stable(self) -> Result<Self> {
        let max_re = spectral_abscissa(&self.a);
        if max_re > -STABILITY_MARGIN || !max_re.is_finite() {
            return Err(Error::UnstableModel { max_re });
        }
        Ok(self)
    }

    /// Steady-state covariance of the intracavity and mechanical
    /// quadratures, `A V + V Aᵀ + H V_in H = 0`.
    pub fn steady_state(&self) -> Result<RMat> {
        let n = self.dim();
        let vin = self.vin.view((0, 0), (n, n));
        let d = RMat::from_fn(n, n, |i, j| self.h[i] * vin[(i, j)] * self.h[j]);
        lyapunov(&self.a, &d)
    }

    pub fn signal_input_variance(&self) -> f64 {
        self.vin[(self.layout.signal, self.layout.signal)]
    }
}

fn check_covariance(v: &RMat) -> Result<()> {
    let n = v.nrows();
    let scale = v.amax().max(1.0);
    if (v - v.transpose()).amax() > 1e-12 * scale {
        return Err(invalid("input covariance is not symmetric"));
    }
    for m in 0..n / 2 {
        let (i, j) = (2 * m, 2 * m + 1);
        let det = v[(i, i)] * v[(j, j)] - v[(i, j)] * v[(j, i)];
        if det < 0.25 - 1e-12 * scale * scale {
            return Err(invalid(format!("mode {m} violates the uncertainty bound (det = {det})")));
        }
    }
    Ok(())
}

/// Frequency-domain map from input to output quadratures.
#[derive(Debug, Clone, PartialEq)]
pub struct ScatteringMatrix {
    pub s: CMat,
    pub omega: f64,
}

impl ScatteringMatrix {
    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.s[(row, col)]
    }
}

/// Optical input variance of the measured mode, used for loss ancillas.
fn ancilla_variance(model: &LinearModel) -> f64 {
    let k = 2 * model.layout.meter_mode();
    model.vin[(k, k)]
}

/// Input covariance for the given bath: optical blocks `(n_c + ½) I`,
/// mechanical blocks built from `V_x`, `V_p`, `V_xp`.
pub fn input_covariance(bath: &BathSpec, layout: &ModeLayout) -> RMat {
    let n = layout.dim();
    let mut v = RMat::zeros(n, n);
    for (m, kind) in layout.kinds.iter().enumerate() {
        let k = 2 * m;
        match kind {
            ModeKind::Optical => {
                v[(k, k)] = bath.optical_variance();
                v[(k + 1, k + 1)] = bath.optical_variance();
            }
            ModeKind::Mechanical => {
                let b = bath.mechanical_block();
                v[(k, k)] = b[0][0];
                v[(k, k + 1)] = b[0][1];
                v[(k + 1, k)] = b[1][0];
                v[(k + 1, k + 1)] = b[1][1];
            }
        }
    }
    v
}

/// `S(ω) = −[H (A + iωI)⁻¹ H + I]`, augmented with loss ancillas when the
/// model carries a detection efficiency.
pub fn build_scattering(model: &LinearModel, omega: f64) -> Result<ScatteringMatrix> {
    let n = model.dim();
    let mut m = to_complex(&model.a);
    for k in 0..n {
        m[(k, k)] += I * omega;
    }
    let (inv, rcond) = inverse_with_rcond(&m).ok_or(Error::SingularAtFrequency { omega, rcond: 0.0 })?;
    if rcond < SINGULAR_RCOND {
        return Err(Error::SingularAtFrequency { omega, rcond });
    }
    let mut s = CMat::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            s[(i, j)] = -inv[(i, j)] * (model.h[i] * model.h[j]);
        }
        s[(i, i)] -= C64::new(1.0, 0.0);
    }
    let s = match model.loss {
        None => s,
        Some(eta) => augment_loss(&s, model.layout.meter_mode(), eta),
    };
    Ok(ScatteringMatrix { s, omega })
}

/// Scales the rows of optical mode `mode` by `√η` and appends two ancilla
/// columns carrying `√(1−η)`.
pub fn augment_loss(s: &CMat, mode: usize, eta: f64) -> CMat {
    let (rows, cols) = s.shape();
    let mut out = CMat::zeros(rows, cols + 2);
    out.view_mut((0, 0), (rows, cols)).copy_from(s);
    let t = eta.sqrt();
    let r = (1.0 - eta).max(0.0).sqrt();
    for q in 0..2 {
        let row = 2 * mode + q;
        for j in 0..cols {
            out[(row, j)] *= t;
        }
        out[(row, cols + q)] = C64::new(r, 0.0);
    }
    out
}

/// Symmetrized output covariance `½[S(ω) V Sᵀ(−ω) + S(−ω) V Sᵀ(ω)]`.
pub fn output_covariance(
    s_plus: &ScatteringMatrix,
    s_minus: &ScatteringMatrix,
    vin: &RMat,
) -> Result<RMat> {
    if s_plus.s.ncols() != vin.nrows() || s_minus.s.shape() != s_plus.s.shape() {
        return Err(invalid("scattering and covariance dimensions differ"));
    }
    let v = to_complex(vin);
    let p = &s_plus.s * &v * s_minus.s.transpose();
    let q = &s_minus.s * &v * s_plus.s.transpose();
    let sum = (p + q) * C64::new(0.5, 0.0);
    let scale = sum.iter().map(|z| z.re.abs()).fold(1.0, f64::max);
    let residue = sum.iter().map(|z| z.im.abs()).fold(0.0, f64::max) / scale;
    if residue > HERMITIAN_RESIDUE {
        return Err(Error::NonHermitianResult { residue });
    }
    let re = sum.map(|z| z.re);
    Ok((&re + re.transpose()) * 0.5)
}

/// Scattering at `ω` together with the output covariance at `ω`.
pub fn output_covariance_at(model: &LinearModel, omega: f64) -> Result<(ScatteringMatrix, RMat)> {
    let sp = build_scattering(model, omega)?;
    let sm = build_scattering(model, -omega)?;
    let v = output_covariance(&sp, &sm, &model.vin)?;
    Ok((sp, v))
}

/// Adds detection loss on the measured optical mode. Successive losses
/// compose multiplicatively.
pub fn apply_detection_loss(model: &LinearModel, eta: f64) -> Result<LinearModel> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(invalid(format!("detection efficiency {eta} outside [0, 1]")));
    }
    let mut out = model.clone();
    match model.loss {
        Some(e0) => out.loss = Some(e0 * eta),
        None => {
            let n = model.dim();
            let va = ancilla_variance(model);
            let mut vin = RMat::zeros(n + 2, n + 2);
            vin.view_mut((0, 0), (n, n)).copy_from(&model.vin);
            vin[(n, n)] = va;
            vin[(n + 1, n + 1)] = va;
            out.vin = vin;
            out.loss = Some(eta);
        }
    }
    Ok(out)
}
