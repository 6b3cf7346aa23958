//! Scenario catalog: parameter tables and model construction.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use tvdiag::floquet::{beyond_rwa_model, floquet_figures, BeyondRwaParams, FloquetModel};
use tvdiag::levitation::{dual_tweezer_model, reduced_figures, single_tweezer_qnd_model, DualTweezerParams, TweezerParams};
use tvdiag::models::{
    cqnc_model, displacement_model, ideal_qnd_model, imperfect_qnd_model, Coupling, CqncParams, DisplacementParams,
    ImperfectQndParams, CQNC_ANCILLA,
};
use tvdiag::pulsed::{
    figures_from_state, prepare_state_lyapunov, pulsed_covariances, PreparationParams, PulseShape, PulsedParams,
    PulsedState,
};
use tvdiag::{evaluate, BathSpec, Conditioning, LinearModel, MeasurementFigures};

use crate::config::{BathConfig, ConditioningSpec, RunConfig, BATH_KEYS};
use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    Displacement,
    Cqnc,
    QndIdeal,
    QndImperfect,
    QndFloquet,
    LevSingle,
    LevDual,
    LevPulsed,
}

pub const ALL: [Scenario; 8] = [
    Scenario::Displacement,
    Scenario::Cqnc,
    Scenario::QndIdeal,
    Scenario::QndImperfect,
    Scenario::QndFloquet,
    Scenario::LevSingle,
    Scenario::LevDual,
    Scenario::LevPulsed,
];

#[derive(Debug, Clone, Copy)]
enum Default {
    Value(f64),
    /// Falls back to another key.
    Key(&'static str),
    Text(&'static str),
    Optional,
    Required,
}

#[derive(Debug, Clone, Copy)]
pub struct Key {
    pub name: &'static str,
    default: Default,
    pub doc: &'static str,
}

const fn num(name: &'static str, v: f64, doc: &'static str) -> Key {
    Key { name, default: Default::Value(v), doc }
}

const fn opt(name: &'static str, doc: &'static str) -> Key {
    Key { name, default: Default::Optional, doc }
}

const fn req(name: &'static str, doc: &'static str) -> Key {
    Key { name, default: Default::Required, doc }
}

const fn alias(name: &'static str, other: &'static str, doc: &'static str) -> Key {
    Key { name, default: Default::Key(other), doc }
}

const fn text(name: &'static str, v: &'static str, doc: &'static str) -> Key {
    Key { name, default: Default::Text(v), doc }
}

const COUPLING: [Key; 2] = [
    opt("C", "cooperativity 4g²/(κγ); give C or g"),
    opt("g", "coupling rate; give C or g"),
];

const DISPLACEMENT: &[Key] = &[
    num("kappa", 10.0, "cavity linewidth"),
    num("gamma", 0.01, "mechanical damping"),
    num("omega_m", 1.0, "mechanical frequency"),
    COUPLING[0],
    COUPLING[1],
    alias("omega", "omega_m", "detection frequency"),
];

const CQNC: &[Key] = &[
    num("kappa", 10.0, "cavity linewidth"),
    num("gamma", 0.01, "mechanical and ancilla damping"),
    num("omega_m", 1.0, "mechanical frequency"),
    COUPLING[0],
    COUPLING[1],
    opt("ancilla_n_m", "ancilla bath occupation; mechanical n_m when absent"),
    alias("omega", "omega_m", "detection frequency"),
];

const QND_IDEAL: &[Key] = &[
    num("kappa", 10.0, "cavity linewidth"),
    num("gamma", 0.01, "mechanical damping"),
    COUPLING[0],
    COUPLING[1],
    num("omega", 0.0, "detection frequency"),
];

const QND_IMPERFECT: &[Key] = &[
    num("kappa", 10.0, "cavity linewidth"),
    num("gamma", 0.01, "mechanical damping"),
    COUPLING[0],
    COUPLING[1],
    num("delta_c", 0.0, "cavity detuning"),
    num("mu", 0.0, "x² coefficient"),
    num("nu", 0.0, "p² coefficient"),
    num("xi", 0.0, "(xp+px)/2 coefficient, |ξ| < γ/2"),
    opt("delta_m", "free rotation; with zeta replaces mu and nu"),
    opt("zeta", "squeezing; with delta_m replaces mu and nu"),
    num("omega", 0.0, "detection frequency"),
];

const QND_FLOQUET: &[Key] = &[
    num("kappa", 0.1, "cavity linewidth"),
    num("gamma", 0.01, "mechanical damping"),
    num("omega_m", 1.0, "mechanical frequency"),
    COUPLING[0],
    COUPLING[1],
    num("order", 1.0, "number of sideband pairs kept"),
    num("omega", 0.0, "detection frequency"),
];

const LEV_SINGLE: &[Key] = &[
    num("kappa", 1.0, "cavity linewidth"),
    num("gamma", 1e-6, "mechanical damping"),
    num("omega_m", 100.0, "trap frequency"),
    req("g", "coupling rate"),
    num("alpha", 0.2, "trap modulation depth"),
    num("phi", 0.0, "modulation phase"),
    opt("omega_mod", "modulation frequency; QND value when absent"),
    num("omega", 0.0, "detection frequency"),
];

const LEV_DUAL: &[Key] = &[
    num("kappa1", 1.0, "primary cavity linewidth"),
    num("kappa2", 1.0, "readout cavity linewidth"),
    num("gamma", 1e-9, "mechanical damping"),
    num("omega_m", 1000.0, "trap frequency"),
    opt("g1", "primary coupling"),
    opt("g2", "readout coupling"),
    opt("g_total", "total coupling √(g1²+g2²); replaces g1 and g2"),
    opt("readout_fraction", "g2²/g_total², used with g_total"),
    num("alpha1", 0.2, "primary modulation depth"),
    num("alpha2", 0.2, "readout modulation depth"),
    opt("alpha_tilde1", "primary rotation coefficient; derived when absent"),
    opt("alpha_tilde2", "readout rotation coefficient; derived when absent"),
    text("model", "reduced", "reduced (two modes, compound signal bath) or full"),
    num("omega", 0.0, "detection frequency"),
];

const LEV_PULSED: &[Key] = &[
    num("kappa", 1.0, "cavity linewidth"),
    num("gamma", 1e-9, "mechanical damping"),
    num("omega_m", 1000.0, "trap frequency"),
    req("g", "readout coupling"),
    num("alpha", 0.6, "readout modulation depth"),
    req("tau", "pulse length"),
    opt("v0", "initial x variance; prepared state when absent"),
    alias("prep_g", "g", "preparation coupling"),
    num("prep_alpha", 0.2, "preparation modulation depth"),
    text("shape", "exponential", "temporal mode: exponential or constant"),
];

impl Scenario {
    pub fn name(&self) -> &'static str {
        match self {
            Scenario::Displacement => "displacement",
            Scenario::Cqnc => "cqnc",
            Scenario::QndIdeal => "qnd-ideal",
            Scenario::QndImperfect => "qnd-imperfect",
            Scenario::QndFloquet => "qnd-floquet",
            Scenario::LevSingle => "lev-single",
            Scenario::LevDual => "lev-dual",
            Scenario::LevPulsed => "lev-pulsed",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        ALL.into_iter().find(|x| x.name() == s)
    }

    pub fn keys(&self) -> &'static [Key] {
        match self {
            Scenario::Displacement => DISPLACEMENT,
            Scenario::Cqnc => CQNC,
            Scenario::QndIdeal => QND_IDEAL,
            Scenario::QndImperfect => QND_IMPERFECT,
            Scenario::QndFloquet => QND_FLOQUET,
            Scenario::LevSingle => LEV_SINGLE,
            Scenario::LevDual => LEV_DUAL,
            Scenario::LevPulsed => LEV_PULSED,
        }
    }

    pub fn summary(&self) -> &'static str {
        match self {
            Scenario::Displacement => "single-tone displacement readout of a mechanical oscillator",
            Scenario::Cqnc => "coherent quantum noise cancellation with a negative-mass ancilla",
            Scenario::QndIdeal => "ideal back-action-evading readout",
            Scenario::QndImperfect => "back-action evasion with detuning and residual mechanical terms",
            Scenario::QndFloquet => "two-tone readout with counter-rotating terms kept (Floquet)",
            Scenario::LevSingle => "levitated particle in a single modulated tweezer",
            Scenario::LevDual => "levitated particle in a primary and a readout tweezer",
            Scenario::LevPulsed => "pulsed readout of a levitated particle after squeezing",
        }
    }

    pub fn example(&self) -> &'static str {
        match self {
            Scenario::Displacement => "tv sweep --scenario displacement --param C --log 1e-3 1e4 --n 200 --optimize-frequency",
            Scenario::Cqnc => "tv sweep --scenario cqnc --param C --log 1e-3 1e4 --n 200 --conditioning meter+ancilla",
            Scenario::QndIdeal => "tv sweep --scenario qnd-ideal --param C --log 1e-3 1e3 --n 200 --n-m 1",
            Scenario::QndImperfect => "tv sql --scenario qnd-imperfect --gamma 1 --nu 0.1 --sql-param C --sql-lo 1e-2 --sql-hi 1e3",
            Scenario::QndFloquet => "tv sweep --scenario qnd-floquet --kappa 0.5 --param C --log 1e-2 1e2 --n 100",
            Scenario::LevSingle => "tv sweep --scenario lev-single --param g --log 1e-3 1 --n 50 --alpha 0.2",
            Scenario::LevDual => "tv sweep --scenario lev-dual --g2 0.1 --param g1 --log 1e-4 1 --n 50 --n-m 1e7",
            Scenario::LevPulsed => "tv pulsed --scenario lev-pulsed --g 0.6 --param tau --log 0.1 100 --n 100 --n-m 1e7",
        }
    }

    pub fn accepts(&self, key: &str) -> bool {
        self.keys().iter().any(|k| k.name == key)
    }
}

/// Every parameter name known to any scenario.
pub fn all_keys() -> Vec<&'static str> {
    let mut v: Vec<&str> = ALL.iter().flat_map(|s| s.keys().iter().map(|k| k.name)).collect();
    v.sort_unstable();
    v.dedup();
    v
}

pub fn help_text() -> String {
    let mut s = String::from("Scenarios:\n");
    for sc in ALL {
        let _ = writeln!(s, "\n  {}: {}", sc.name(), sc.summary());
        for k in sc.keys() {
            let d = match k.default {
                Default::Value(v) => format!("default {v}"),
                Default::Key(o) => format!("default {o}"),
                Default::Text(t) => format!("default {t}"),
                Default::Optional => "optional".to_string(),
                Default::Required => "required".to_string(),
            };
            let _ = writeln!(s, "      {:<18} {} ({d})", k.name, k.doc);
        }
        let _ = writeln!(s, "    example: {}", sc.example());
    }
    s
}

/// Parameter values of one sweep point.
#[derive(Debug, Clone)]
pub struct Point {
    pub scenario: Scenario,
    nums: BTreeMap<String, f64>,
    strs: BTreeMap<String, String>,
    pub bath: BathConfig,
    pub conditioning: ConditioningSpec,
}

impl Point {
    /// Resolves a configuration with the swept values applied on top.
    pub fn resolve(cfg: &RunConfig, overrides: &[(&str, f64)]) -> Result<Point, CliError> {
        let sc = cfg.scenario;
        let mut nums = BTreeMap::new();
        let mut strs = BTreeMap::new();
        for key in cfg.params.keys() {
            if !sc.accepts(key) {
                return Err(CliError::Config(format!(
                    "params.{key}: unknown parameter for scenario {}",
                    sc.name()
                )));
            }
        }
        for k in sc.keys() {
            match k.default {
                Default::Text(t) => {
                    let v = cfg.param_str(k.name)?.unwrap_or(t);
                    strs.insert(k.name.to_string(), v.to_string());
                }
                _ => {
                    if let Some(v) = cfg.param_f64(k.name)? {
                        nums.insert(k.name.to_string(), v);
                    }
                }
            }
        }
        let mut bath = cfg.bath;
        for &(key, v) in overrides {
            if BATH_KEYS.contains(&key) {
                bath.set(key, v);
            } else if sc.accepts(key) {
                nums.insert(key.to_string(), v);
            } else {
                return Err(CliError::Config(format!(
                    "sweep.param: '{key}' is not a parameter of scenario {}",
                    sc.name()
                )));
            }
        }
        for k in sc.keys() {
            if nums.contains_key(k.name) {
                continue;
            }
            match k.default {
                Default::Value(v) => {
                    nums.insert(k.name.to_string(), v);
                }
                Default::Key(other) => {
                    if let Some(&v) = nums.get(other) {
                        nums.insert(k.name.to_string(), v);
                    }
                }
                _ => {}
            }
        }
        Ok(Point { scenario: sc, nums, strs, bath, conditioning: cfg.conditioning })
    }

    fn get(&self, key: &str) -> Option<f64> {
        self.nums.get(key).copied()
    }

    fn req(&self, key: &str) -> Result<f64, CliError> {
        self.get(key)
            .ok_or_else(|| CliError::Config(format!("params.{key}: required by scenario {}", self.scenario.name())))
    }

    fn text(&self, key: &str) -> &str {
        self.strs.get(key).map(String::as_str).unwrap_or("")
    }

    pub fn omega(&self) -> f64 {
        self.get("omega").unwrap_or(0.0)
    }

    pub fn bath_spec(&self) -> Result<BathSpec, CliError> {
        let b = &self.bath;
        BathSpec::new(b.n_m, tvdiag::nalgebra::Complex::new(b.m_re, b.m_im), b.n_c, b.eta)
            .map_err(|e| CliError::Config(format!("bath: {e}")))
    }

    fn coupling(&self) -> Result<Coupling, CliError> {
        match (self.get("C"), self.get("g")) {
            (Some(c), None) => Ok(Coupling::Cooperativity(c)),
            (None, Some(g)) => Ok(Coupling::G(g)),
            (Some(_), Some(_)) => Err(CliError::Config("params.g: give either C or g, not both".into())),
            (None, None) => Err(CliError::Config(format!(
                "params.C: scenario {} needs C or g",
                self.scenario.name()
            ))),
        }
    }

    fn conditioning(&self) -> Result<Conditioning, CliError> {
        match (self.scenario, self.conditioning) {
            (_, ConditioningSpec::Meter) => Ok(Conditioning::Meter),
            (Scenario::Cqnc, ConditioningSpec::MeterAndAncilla) => {
                Ok(Conditioning::MeterAndAncilla { ancilla: CQNC_ANCILLA })
            }
            (Scenario::Cqnc, ConditioningSpec::MeterAndAncillaUncorrelated) => {
                Ok(Conditioning::MeterAndAncillaUncorrelated { ancilla: CQNC_ANCILLA })
            }
            (s, _) => Err(CliError::Config(format!(
                "conditioning: ancilla conditioning is only available for cqnc, not {}",
                s.name()
            ))),
        }
    }

    pub fn label(&self) -> String {
        let parts: Vec<String> = self.nums.iter().map(|(k, v)| format!("{k}={v}")).collect();
        parts.join(", ")
    }

    fn numerical(&self, e: tvdiag::Error) -> CliError {
        CliError::numerical(&format!("{} at {}", self.scenario.name(), self.label()), e)
    }

    pub fn evaluator(&self) -> Result<Evaluator, CliError> {
        let bath = self.bath_spec()?;
        let e = |e| self.numerical(e);
        let ev = match self.scenario {
            Scenario::Displacement => {
                let p = DisplacementParams {
                    kappa: self.req("kappa")?,
                    gamma: self.req("gamma")?,
                    omega_m: self.req("omega_m")?,
                    coupling: self.coupling()?,
                };
                Evaluator::Linear(displacement_model(&p, &bath).map_err(e)?, self.conditioning()?)
            }
            Scenario::Cqnc => {
                let ancilla_bath = self.get("ancilla_n_m").map(BathSpec::thermal);
                let p = CqncParams {
                    kappa: self.req("kappa")?,
                    gamma: self.req("gamma")?,
                    omega_m: self.req("omega_m")?,
                    coupling: self.coupling()?,
                    ancilla_bath,
                };
                Evaluator::Linear(cqnc_model(&p, &bath).map_err(e)?, self.conditioning()?)
            }
            Scenario::QndIdeal => {
                let m = ideal_qnd_model(self.req("kappa")?, self.req("gamma")?, self.coupling()?, &bath).map_err(e)?;
                Evaluator::Linear(m, self.conditioning()?)
            }
            Scenario::QndImperfect => {
                let mut p = ImperfectQndParams::ideal(self.req("kappa")?, self.req("gamma")?, self.coupling()?);
                p.delta_c = self.req("delta_c")?;
                p.mu = self.req("mu")?;
                p.nu = self.req("nu")?;
                p.xi = self.req("xi")?;
                match (self.get("delta_m"), self.get("zeta")) {
                    (None, None) => {}
                    (Some(dm), Some(z)) => {
                        if p.mu != 0.0 || p.nu != 0.0 {
                            return Err(CliError::Config(
                                "params.delta_m: give either (mu, nu) or (delta_m, zeta)".into(),
                            ));
                        }
                        p = p.with_rotation_and_squeezing(dm, z);
                    }
                    (Some(_), None) => return Err(CliError::Config("params.zeta: required with delta_m".into())),
                    (None, Some(_)) => return Err(CliError::Config("params.delta_m: required with zeta".into())),
                }
                Evaluator::Linear(imperfect_qnd_model(&p, &bath).map_err(e)?, self.conditioning()?)
            }
            Scenario::QndFloquet => {
                self.conditioning()?;
                let p = BeyondRwaParams {
                    kappa: self.req("kappa")?,
                    gamma: self.req("gamma")?,
                    omega_m: self.req("omega_m")?,
                    coupling: self.coupling()?,
                };
                let order = self.req("order")?;
                if !(order >= 0.0 && order.fract() == 0.0 && order <= 64.0) {
                    return Err(CliError::Config("params.order: must be an integer in [0, 64]".into()));
                }
                Evaluator::Floquet(beyond_rwa_model(&p, &bath, order as usize).map_err(e)?)
            }
            Scenario::LevSingle => {
                let mut p = TweezerParams::new(
                    self.req("omega_m")?,
                    self.req("alpha")?,
                    self.req("g")?,
                    self.req("kappa")?,
                    self.req("gamma")?,
                );
                p.phi = self.req("phi")?;
                p.omega_mod = self.get("omega_mod");
                Evaluator::Linear(single_tweezer_qnd_model(&p, &bath).map_err(e)?, self.conditioning()?)
            }
            Scenario::LevDual => {
                self.conditioning()?;
                let mut p = DualTweezerParams::new(
                    self.req("kappa1")?,
                    self.req("kappa2")?,
                    self.req("gamma")?,
                    self.req("omega_m")?,
                    0.0,
                    0.0,
                    self.req("alpha1")?,
                    self.req("alpha2")?,
                );
                match (self.get("g_total"), self.get("g1"), self.get("g2")) {
                    (Some(gt), None, None) => {
                        let f = self.req("readout_fraction")?;
                        p = p.with_total_coupling(gt, f).map_err(e)?;
                    }
                    (None, Some(g1), Some(g2)) => {
                        p.g1 = g1;
                        p.g2 = g2;
                    }
                    (Some(_), _, _) => {
                        return Err(CliError::Config("params.g_total: replaces g1 and g2; give one form".into()))
                    }
                    (None, None, _) => return Err(CliError::Config("params.g1: required by scenario lev-dual".into())),
                    (None, _, None) => return Err(CliError::Config("params.g2: required by scenario lev-dual".into())),
                }
                if let Some(a) = self.get("alpha_tilde1") {
                    p.alpha_tilde1 = a;
                }
                if let Some(a) = self.get("alpha_tilde2") {
                    p.alpha_tilde2 = a;
                }
                match self.text("model") {
                    "reduced" => Evaluator::Reduced(p, bath),
                    "full" => Evaluator::Linear(dual_tweezer_model(&p, &bath).map_err(e)?, Conditioning::Meter),
                    other => {
                        return Err(CliError::Config(format!(
                            "params.model: expected reduced or full, got '{other}'"
                        )))
                    }
                }
            }
            Scenario::LevPulsed => {
                self.conditioning()?;
                let shape = match self.text("shape") {
                    "exponential" => PulseShape::Exponential,
                    "constant" => PulseShape::Constant,
                    other => {
                        return Err(CliError::Config(format!(
                            "params.shape: expected exponential or constant, got '{other}'"
                        )))
                    }
                };
                let (kappa, gamma, omega_m) = (self.req("kappa")?, self.req("gamma")?, self.req("omega_m")?);
                let g = self.req("g")?;
                let tau = self.req("tau")?;
                if !(tau >= 0.0 && tau.is_finite()) {
                    return Err(CliError::Config("params.tau: must be a non-negative number".into()));
                }
                let v0 = match self.get("v0") {
                    Some(v) => v,
                    None => {
                        let prep = PreparationParams {
                            kappa,
                            gamma,
                            omega_m,
                            g: self.req("prep_g")?,
                            alpha: self.req("prep_alpha")?,
                        };
                        prepare_state_lyapunov(&prep, &bath).map_err(e)?.v0
                    }
                };
                let p = PulsedParams::new(kappa, gamma, omega_m, g, self.req("alpha")?, v0, bath).with_shape(shape);
                Evaluator::Pulsed(p, tau)
            }
        };
        Ok(ev)
    }
}

/// A built model ready to be evaluated at a detection frequency.
pub enum Evaluator {
    Linear(LinearModel, Conditioning),
    Floquet(FloquetModel),
    Reduced(DualTweezerParams, BathSpec),
    Pulsed(PulsedParams, f64),
}

impl Evaluator {
    pub fn figures(&self, omega: f64) -> tvdiag::Result<MeasurementFigures> {
        match self {
            Evaluator::Linear(m, c) => evaluate(m, omega, *c),
            Evaluator::Floquet(m) => floquet_figures(m, omega),
            Evaluator::Reduced(p, b) => reduced_figures(p, b, omega, None),
            Evaluator::Pulsed(p, tau) => pulsed_covariances(p, *tau).and_then(|s| figures_from_state(p, *tau, &s)),
        }
    }

    pub fn is_pulsed(&self) -> bool {
        matches!(self, Evaluator::Pulsed(..))
    }

    /// Pulse state and the parameters it was computed with.
    pub fn pulse(&self) -> Option<tvdiag::Result<(PulsedParams, f64, PulsedState)>> {
        match self {
            Evaluator::Pulsed(p, tau) => Some(pulsed_covariances(p, *tau).map(|s| (*p, *tau, s))),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_scenario_has_an_example_naming_it() {
        for s in ALL {
            assert!(s.example().contains(s.name()));
        }
        assert!(help_text().contains("lev-pulsed"));
    }

    #[test]
    fn unknown_param_is_named() {
        let mut c = RunConfig::new(Scenario::QndIdeal);
        c.set_param("C", "1").unwrap();
        c.set_param("omega_m", "1").unwrap();
        let e = Point::resolve(&c, &[]).unwrap_err();
        assert!(e.to_string().contains("params.omega_m"), "{e}");
    }

    #[test]
    fn alias_default_follows_sweep() {
        let mut c = RunConfig::new(Scenario::Displacement);
        c.set_param("C", "1").unwrap();
        let p = Point::resolve(&c, &[("omega_m", 2.5)]).unwrap();
        assert_eq!(p.omega(), 2.5);
    }

    #[test]
    fn coupling_required() {
        let c = RunConfig::new(Scenario::QndIdeal);
        let e = Point::resolve(&c, &[]).unwrap().evaluator().err().unwrap();
        assert!(e.to_string().contains("params.C"));
        assert_eq!(e.exit_code(), 2);
    }
}
