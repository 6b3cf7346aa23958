//! Command execution: grids of sweep points mapped to table rows.

use tvdiag::optimizer::{find_threshold, minimize_scan, Optimum};
use tvdiag::MeasurementFigures;

use crate::config::{Command, Quantity, RunConfig};
use crate::error::CliError;
use crate::scenario::Point;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(usize),
    Bool(bool),
    Text(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

const FIGURE_COLUMNS: [&str; 8] = ["omega", "Vc", "Ts", "Tm", "Ts+Tm", "ns_eq", "nm_eq", "regime"];

fn figure_cells(f: &MeasurementFigures) -> Vec<Cell> {
    vec![
        Cell::Num(f.omega),
        Cell::Num(f.vc),
        Cell::Num(f.ts),
        Cell::Num(f.tm),
        Cell::Num(f.t_sum()),
        Cell::Num(f.ns_eq),
        Cell::Num(f.nm_eq),
        Cell::Text(f.regime.as_str().to_string()),
    ]
}

/// Cartesian product of the sweep axes, first axis outermost.
fn grid(cfg: &RunConfig) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = vec![Vec::new()];
    for axis in &cfg.sweep {
        let pts = axis.points();
        out = out
            .into_iter()
            .flat_map(|prefix| {
                pts.iter().map(move |&x| {
                    let mut v = prefix.clone();
                    v.push(x);
                    v
                })
            })
            .collect();
    }
    out
}

fn overrides<'a>(cfg: &'a RunConfig, values: &[f64]) -> Vec<(&'a str, f64)> {
    cfg.sweep.iter().map(|a| a.param.as_str()).zip(values.iter().copied()).collect()
}

/// Figures at one parameter point, at the configured or optimized frequency.
fn figures_at(cfg: &RunConfig, ov: &[(&str, f64)], force_optimize: bool) -> Result<(MeasurementFigures, Option<Optimum>), CliError> {
    let point = Point::resolve(cfg, ov)?;
    let ev = point.evaluator()?;
    let at = |w: f64| format!("{} at omega={w}, {}", cfg.scenario.name(), point.label());
    let optimize = force_optimize || cfg.frequency.map(|f| f.optimize).unwrap_or(false);
    if optimize {
        if ev.is_pulsed() {
            return Err(CliError::Config("frequency.optimize: not applicable to lev-pulsed".into()));
        }
        let spec = cfg
            .frequency
            .ok_or_else(|| CliError::Config("frequency: optimization needs a [frequency] range".into()))?
            .to_spec();
        let opt = minimize_scan(&spec, |w| ev.figures(w).map(|f| f.vc))
            .map_err(|e| CliError::numerical(&format!("{} over omega, {}", cfg.scenario.name(), point.label()), e))?;
        let f = ev.figures(opt.arg).map_err(|e| CliError::numerical(&at(opt.arg), e))?;
        Ok((f, Some(opt)))
    } else {
        let w = point.omega();
        let f = ev.figures(w).map_err(|e| CliError::numerical(&at(w), e))?;
        Ok((f, None))
    }
}

/// Generalized SQL: the conditional variance minimized over the `[sql]` axis.
fn sql_at(cfg: &RunConfig, ov: &[(&str, f64)]) -> Result<(f64, MeasurementFigures, Optimum), CliError> {
    let axis = cfg.sql.as_ref().expect("validated");
    let with = |x: f64| {
        let mut v = ov.to_vec();
        v.push((axis.param.as_str(), x));
        v
    };
    let first_error = std::sync::Mutex::new(None);
    let opt = minimize_scan(&axis.to_spec(), |x| match figures_at(cfg, &with(x), false) {
        Ok((f, _)) => Ok(f.vc),
        Err(e) => {
            let mut slot = first_error.lock().expect("lock");
            let msg = e.to_string();
            if slot.is_none() {
                *slot = Some(e);
            }
            Err(tvdiag::Error::InvalidParameter(msg))
        }
    });
    let opt = match opt {
        Ok(o) => o,
        Err(_) => {
            return Err(first_error
                .into_inner()
                .expect("lock")
                .unwrap_or_else(|| CliError::Numerical(format!("sql.{}: no point evaluated", axis.param))))
        }
    };
    let (f, _) = figures_at(cfg, &with(opt.arg), false)?;
    Ok((opt.arg, f, opt))
}

fn sweep_table(cfg: &RunConfig, force_optimize: bool) -> Result<Table, CliError> {
    let mut columns: Vec<String> = cfg.sweep.iter().map(|a| a.param.clone()).collect();
    columns.extend(FIGURE_COLUMNS.iter().map(|s| s.to_string()));
    let optimized = force_optimize || cfg.frequency.map(|f| f.optimize).unwrap_or(false);
    if optimized {
        columns.push("omega_at_boundary".into());
        columns.push("omega_branches".into());
    }
    let points = grid(cfg);
    let rows = tvdiag::par::map(&points, |vals| {
        let (f, opt) = figures_at(cfg, &overrides(cfg, vals), force_optimize)?;
        let mut row: Vec<Cell> = vals.iter().map(|&x| Cell::Num(x)).collect();
        row.extend(figure_cells(&f));
        if let Some(o) = opt {
            row.push(Cell::Bool(o.at_boundary));
            row.push(Cell::Int(o.branches.len()));
        }
        Ok(row)
    });
    Ok(Table { columns, rows: rows.into_iter().collect::<Result<_, CliError>>()? })
}

fn sql_table(cfg: &RunConfig) -> Result<Table, CliError> {
    let axis = cfg.sql.as_ref().expect("validated");
    let mut columns: Vec<String> = cfg.sweep.iter().map(|a| a.param.clone()).collect();
    columns.push(axis.param.clone());
    columns.extend(FIGURE_COLUMNS.iter().map(|s| s.to_string()));
    columns.push("sql_at_boundary".into());
    let points = grid(cfg);
    let rows = tvdiag::par::map(&points, |vals| {
        let (arg, f, opt) = sql_at(cfg, &overrides(cfg, vals))?;
        let mut row: Vec<Cell> = vals.iter().map(|&x| Cell::Num(x)).collect();
        row.push(Cell::Num(arg));
        row.extend(figure_cells(&f));
        row.push(Cell::Bool(opt.at_boundary));
        Ok(row)
    });
    Ok(Table { columns, rows: rows.into_iter().collect::<Result<_, CliError>>()? })
}

fn threshold_table(cfg: &RunConfig) -> Result<Table, CliError> {
    let t = cfg.threshold.as_ref().expect("validated");
    let mut columns: Vec<String> = cfg.sweep.iter().map(|a| a.param.clone()).collect();
    columns.push(t.param.clone());
    columns.push("level".into());
    if t.quantity == Quantity::SqlVc {
        columns.push(cfg.sql.as_ref().expect("validated").param.clone());
    }
    columns.extend(FIGURE_COLUMNS.iter().map(|s| s.to_string()));
    let points = grid(cfg);
    let rows = tvdiag::par::map(&points, |vals| {
        let ov = overrides(cfg, vals);
        let with = |x: f64| {
            let mut v = ov.clone();
            v.push((t.param.as_str(), x));
            v
        };
        let err = std::sync::Mutex::new(None::<CliError>);
        let curve = |x: f64| -> tvdiag::Result<f64> {
            let r = match t.quantity {
                Quantity::Vc => figures_at(cfg, &with(x), false).map(|(f, _)| f.vc),
                Quantity::TSum => figures_at(cfg, &with(x), false).map(|(f, _)| f.t_sum()),
                Quantity::SqlVc => sql_at(cfg, &with(x)).map(|(_, f, _)| f.vc),
            };
            r.map_err(|e| {
                let msg = e.to_string();
                *err.lock().expect("lock") = Some(e);
                tvdiag::Error::InvalidParameter(msg)
            })
        };
        let x = match find_threshold(curve, t.level, t.lo, t.hi, t.rel_tol) {
            Ok(x) => x,
            Err(tvdiag::Error::NoBracket { lo, hi }) => {
                return Err(CliError::Numerical(format!(
                    "threshold.{}: quantity does not cross {} between {lo} and {hi}",
                    t.param, t.level
                )))
            }
            Err(e) => {
                return Err(err
                    .into_inner()
                    .expect("lock")
                    .unwrap_or_else(|| CliError::Numerical(format!("threshold.{}: {e}", t.param))))
            }
        };
        let mut row: Vec<Cell> = vals.iter().map(|&x| Cell::Num(x)).collect();
        row.push(Cell::Num(x));
        row.push(Cell::Num(t.level));
        let f = if t.quantity == Quantity::SqlVc {
            let (arg, f, _) = sql_at(cfg, &with(x))?;
            row.push(Cell::Num(arg));
            f
        } else {
            figures_at(cfg, &with(x), false)?.0
        };
        row.extend(figure_cells(&f));
        Ok(row)
    });
    Ok(Table { columns, rows: rows.into_iter().collect::<Result<_, CliError>>()? })
}

fn pulsed_table(cfg: &RunConfig) -> Result<Table, CliError> {
    let mut columns: Vec<String> = cfg.sweep.iter().map(|a| a.param.clone()).collect();
    for c in ["v0", "gain", "Vc", "Ts", "Tm", "Ts+Tm", "ns_eq", "nm_eq", "regime"] {
        columns.push(c.into());
    }
    let points = grid(cfg);
    let rows = tvdiag::par::map(&points, |vals| {
        let point = Point::resolve(cfg, &overrides(cfg, vals))?;
        let ev = point.evaluator()?;
        let at = || format!("lev-pulsed at {}", point.label());
        let (p, tau, s) = ev.pulse().expect("pulsed scenario").map_err(|e| CliError::numerical(&at(), e))?;
        let f = tvdiag::pulsed::figures_from_state(&p, tau, &s).map_err(|e| CliError::numerical(&at(), e))?;
        let mut row: Vec<Cell> = vals.iter().map(|&x| Cell::Num(x)).collect();
        row.push(Cell::Num(p.v0));
        row.push(Cell::Num(s.gain));
        row.extend(figure_cells(&f).into_iter().skip(1));
        Ok(row)
    });
    Ok(Table { columns, rows: rows.into_iter().collect::<Result<_, CliError>>()? })
}

pub fn run(cfg: &RunConfig) -> Result<Table, CliError> {
    cfg.validate()?;
    match cfg.command {
        Command::Sweep => sweep_table(cfg, false),
        Command::OptimizeFrequency => sweep_table(cfg, true),
        Command::Sql => sql_table(cfg),
        Command::Threshold => threshold_table(cfg),
        Command::Pulsed => pulsed_table(cfg),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{AxisConfig, Scale, ThresholdConfig};
    use crate::scenario::Scenario;

    fn qnd_sweep() -> RunConfig {
        let mut c = RunConfig::new(Scenario::QndIdeal);
        c.sweep.push(AxisConfig { param: "C".into(), lo: 1e-3, hi: 1e3, n: 25, scale: Scale::Log });
        c
    }

    #[test]
    fn ideal_rows_obey_identity() {
        let t = run(&qnd_sweep()).unwrap();
        assert_eq!(t.rows.len(), 25);
        for r in &t.rows {
            let (Cell::Num(c), Cell::Num(vc)) = (&r[0], &r[2]) else { panic!() };
            assert!((vc * (1.0 / 1.5 + 32.0 * c) - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn two_axis_grid_order() {
        let mut c = qnd_sweep();
        c.sweep[0].n = 3;
        c.sweep.push(AxisConfig { param: "n_m".into(), lo: 0.0, hi: 1.0, n: 2, scale: Scale::Linear });
        let t = run(&c).unwrap();
        let firsts: Vec<_> = t.rows.iter().map(|r| (r[0].clone(), r[1].clone())).collect();
        assert_eq!(firsts[0], (Cell::Num(1e-3), Cell::Num(0.0)));
        assert_eq!(firsts[1], (Cell::Num(1e-3), Cell::Num(1.0)));
        assert_eq!(t.rows.len(), 6);
    }

    #[test]
    fn threshold_matches_closed_form() {
        let mut c = RunConfig::new(Scenario::QndIdeal);
        c.command = Command::Threshold;
        c.threshold = Some(ThresholdConfig {
            param: "C".into(),
            lo: 1e-4,
            hi: 10.0,
            level: 0.5,
            quantity: Quantity::Vc,
            rel_tol: 1e-10,
        });
        let t = run(&c).unwrap();
        let Cell::Num(x) = t.rows[0][0] else { panic!() };
        assert!((x / (2.0 / (32.0 * 1.5)) - 1.0).abs() < 1e-8, "{x}");
    }

    #[test]
    fn numerical_failure_exit_code() {
        let mut c = RunConfig::new(Scenario::Displacement);
        c.set_param("C", "1").unwrap();
        c.set_param("omega", "0").unwrap();
        c.set_param("omega_m", "0").unwrap();
        c.set_param("gamma", "0").unwrap();
        let e = run(&c).unwrap_err();
        assert!(e.exit_code() == 2 || e.exit_code() == 3);
    }
}
