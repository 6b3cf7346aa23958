//! Grid-plus-golden-section minimization and bisection thresholds.

use crate::error::{invalid, Error, Result};
use crate::gaussian::LinearModel;
use crate::metrics::{evaluate, Conditioning, MeasurementFigures};
use crate::par;

/// Local grid minima within this relative distance of the best are reported.
pub const BRANCH_TOLERANCE: f64 = 0.01;

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub name: String,
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
    pub log: bool,
    pub rel_tol: f64,
}

impl SweepSpec {
    pub fn log(name: &str, lo: f64, hi: f64, n: usize) -> Self {
        SweepSpec { name: name.to_string(), lo, hi, n, log: true, rel_tol: 1e-6 }
    }

    pub fn linear(name: &str, lo: f64, hi: f64, n: usize) -> Self {
        SweepSpec { name: name.to_string(), lo, hi, n, log: false, rel_tol: 1e-6 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lo.is_finite() && self.hi.is_finite()) {
            return Err(invalid(format!("sweep '{}' endpoints must be finite", self.name)));
        }
        if self.n < 2 {
            return Err(invalid(format!("sweep '{}' needs at least two points", self.name)));
        }
        if self.log && !(self.lo > 0.0 && self.hi > 0.0) {
            return Err(invalid(format!("log sweep '{}' needs positive endpoints", self.name)));
        }
        if !(self.rel_tol > 0.0) {
            return Err(invalid("refinement tolerance must be positive"));
        }
        Ok(())
    }

    fn to_axis(&self, x: f64) -> f64 {
        if self.log {
            x.ln()
        } else {
            x
        }
    }

    fn from_axis(&self, u: f64) -> f64 {
        if self.log {
            u.exp()
        } else {
            u
        }
    }

    /// Grid points, endpoints included exactly.
    pub fn points(&self) -> Vec<f64> {
        let (a, b) = (self.to_axis(self.lo), self.to_axis(self.hi));
        let last = self.n - 1;
        (0..self.n)
            .map(|i| match i {
                0 => self.lo,
                i if i == last => self.hi,
                i => self.from_axis(a + (b - a) * i as f64 / last as f64),
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Optimum {
    pub arg: f64,
    pub value: f64,
    pub at_boundary: bool,
    /// Other local grid minima close to the best value, as `(arg, value)`.
    pub branches: Vec<(f64, f64)>,
}

fn golden_section<F: Fn(f64) -> f64>(f: &F, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if (b - a).abs() <= tol {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    if fc < fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Scans the grid in parallel, then refines around the best point. Failed
/// evaluations are skipped; the result is never worse than the best grid
/// point.
pub fn minimize_scan<F>(spec: &SweepSpec, f: F) -> Result<Optimum>
where
    F: Fn(f64) -> Result<f64> + Sync,
{
    spec.validate()?;
    let xs = spec.points();
    let ys: Vec<f64> = par::map(&xs, |&x| f(x).ok().filter(|v| !v.is_nan()).unwrap_or(f64::INFINITY));
    let (best, &ybest) = ys
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("non-empty grid");
    if !ybest.is_finite() {
        return Err(invalid(format!("no grid point of '{}' could be evaluated", spec.name)));
    }
    let n = xs.len();
    let lo = spec.to_axis(xs[best.saturating_sub(1)]);
    let hi = spec.to_axis(xs[(best + 1).min(n - 1)]);
    let g = |u: f64| f(spec.from_axis(u)).ok().filter(|v| !v.is_nan()).unwrap_or(f64::INFINITY);
    let scale = if spec.log { 1.0 } else { spec.to_axis(xs[best]).abs().max(f64::MIN_POSITIVE) };
    let (u, yu) = golden_section(&g, lo, hi, spec.rel_tol * scale);
    let (arg, value) = if yu < ybest { (spec.from_axis(u), yu) } else { (xs[best], ybest) };
    let mut branches = Vec::new();
    for i in 0..n {
        if i == best {
            continue;
        }
        let left = if i == 0 { f64::INFINITY } else { ys[i - 1] };
        let right = if i + 1 == n { f64::INFINITY } else { ys[i + 1] };
        let local = ys[i] <= left && ys[i] <= right && ys[i].is_finite();
        let far = i + 1 < best || i > best + 1;
        if local && far && (ys[i] - value).abs() <= BRANCH_TOLERANCE * value.abs() {
            branches.push((xs[i], ys[i]));
        }
    }
    Ok(Optimum { arg, value, at_boundary: best == 0 || best == n - 1, branches })
}

/// Detection frequency minimizing the conditional variance.
pub fn minimize_vc_over_frequency(
    model: &LinearModel,
    omega: &SweepSpec,
    conditioning: Conditioning,
) -> Result<(Optimum, MeasurementFigures)> {
    let opt = minimize_scan(omega, |w| evaluate(model, w, conditioning).map(|f| f.vc))?;
    let fig = evaluate(model, opt.arg, conditioning)?;
    Ok((opt, fig))
}

/// Cooperativity minimizing the conditional variance of a model family.
pub fn generalized_sql<F>(
    family: F,
    coop: &SweepSpec,
    omega: f64,
    conditioning: Conditioning,
) -> Result<(Optimum, MeasurementFigures)>
where
    F: Fn(f64) -> Result<LinearModel> + Sync,
{
    let vc = |c: f64| evaluate(&family(c)?, omega, conditioning).map(|f| f.vc);
    let opt = minimize_scan(coop, vc)?;
    let fig = evaluate(&family(opt.arg)?, omega, conditioning)?;
    Ok((opt, fig))
}

/// Bisection for `curve(x) = level` on `[lo, hi]` to relative `rel_tol`.
pub fn find_threshold<F>(curve: F, level: f64, lo: f64, hi: f64, rel_tol: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    let (mut a, mut b) = (lo, hi);
    let fa = curve(a)? - level;
    let fb = curve(b)? - level;
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() || fa.is_nan() || fb.is_nan() {
        return Err(Error::NoBracket { lo, hi });
    }
    let sa = fa.signum();
    for _ in 0..300 {
        let m = 0.5 * (a + b);
        if (b - a).abs() <= rel_tol * m.abs().max(f64::MIN_POSITIVE) {
            return Ok(m);
        }
        let fm = curve(m)? - level;
        if fm == 0.0 {
            return Ok(m);
        }
        if fm.signum() == sa {
            a = m;
        } else {
            b = m;
        }
    }
    Ok(0.5 * (a + b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::BathSpec;
    use crate::models::{displacement_model, ideal_qnd_model, Coupling, DisplacementParams};
    use approx::assert_relative_eq;

    #[test]
    fn grid_endpoints_exact() {
        let s = SweepSpec::log("C", 1e-3, 1e4, 200);
        let p = s.points();
        assert_eq!((p[0], p[199]), (1e-3, 1e4));
        assert!(SweepSpec::log("C", 0.0, 1.0, 5).validate().is_err());
        assert!(SweepSpec::linear("C", 0.0, 1.0, 1).validate().is_err());
    }

    #[test]
    fn parabola() {
        let o = minimize_scan(&SweepSpec::linear("x", -3.0, 5.0, 17), |x| Ok((x - 1.234).powi(2))).unwrap();
        assert_relative_eq!(o.arg, 1.234, max_relative = 1e-6);
        assert!(!o.at_boundary);
    }

    #[test]
    fn boundary_minimum_flagged() {
        let o = minimize_scan(&SweepSpec::log("C", 1e-2, 1e2, 50), |c| Ok(1.0 / (1.0 + c))).unwrap();
        assert!(o.at_boundary);
        assert_eq!(o.arg, 1e2);
    }

    #[test]
    fn two_branches_reported() {
        let f = |x: f64| Ok(((x - 1.0) * (x + 1.0)).powi(2) + 0.1);
        let o = minimize_scan(&SweepSpec::linear("x", -2.0, 2.0, 41), f).unwrap();
        assert_eq!(o.branches.len(), 1);
        assert_relative_eq!(o.branches[0].0.abs(), 1.0, max_relative = 1e-12);
    }

    #[test]
    fn ideal_readout_prefers_dc() {
        let m = ideal_qnd_model(1.0, 0.01, Coupling::Cooperativity(1.0), &BathSpec::thermal(1.0)).unwrap();
        let (o, f) = minimize_vc_over_frequency(&m, &SweepSpec::linear("omega", 0.0, 5.0, 101), Conditioning::Meter).unwrap();
        assert_eq!(o.arg, 0.0);
        assert!(o.at_boundary);
        assert_relative_eq!(f.vc, 1.0 / (1.0 / 1.5 + 32.0), max_relative = 1e-9);
    }

    #[test]
    fn displacement_below_sql_reads_on_resonance() {
        let p = DisplacementParams { kappa: 10.0, gamma: 0.01, omega_m: 1.0, coupling: Coupling::Cooperativity(0.05) };
        let m = displacement_model(&p, &BathSpec::thermal(1.0)).unwrap();
        let (o, _) = minimize_vc_over_frequency(&m, &SweepSpec::log("omega", 0.1, 10.0, 200), Conditioning::Meter).unwrap();
        assert!((o.arg - 1.0).abs() < 0.02, "{}", o.arg);
    }

    #[test]
    fn threshold_bisection() {
        let x = find_threshold(|x| Ok(x * x), 2.0, 0.0, 3.0, 1e-10).unwrap();
        assert_relative_eq!(x, 2f64.sqrt(), max_relative = 1e-9);
        assert!(matches!(find_threshold(|x| Ok(x), 5.0, 0.0, 1.0, 1e-6), Err(Error::NoBracket { .. })));
    }

    #[test]
    fn deterministic() {
        let s = SweepSpec::log("C", 1e-3, 1e3, 64);
        let f = |c: f64| Ok((c.ln() - 0.3).powi(2) + c.sin() * 1e-3);
        assert_eq!(minimize_scan(&s, f).unwrap(), minimize_scan(&s, f).unwrap());
    }
}
