//! CSV and JSON rendering, and recovery of the echoed config for replay.

use std::fmt::Write as _;

use crate::config::RunConfig;
use crate::error::CliError;
use crate::run::{Cell, Table};

const CONFIG_BEGIN: &str = "# --- config ---";
const CONFIG_END: &str = "# --- end config ---";

pub fn tool_version() -> String {
    format!("tv {}", env!("CARGO_PKG_VERSION"))
}

fn number(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.16e}")
    }
}

fn csv_cell(c: &Cell) -> String {
    match c {
        Cell::Num(x) => number(*x),
        Cell::Int(n) => n.to_string(),
        Cell::Bool(b) => b.to_string(),
        Cell::Text(s) => s.clone(),
    }
}

fn json_string(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for ch in s.chars() {
        match ch {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            c if (c as u32) < 0x20 => {
                let _ = write!(out, "\\u{:04x}", c as u32);
            }
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

fn json_cell(c: &Cell) -> String {
    match c {
        Cell::Num(x) if x.is_finite() => number(*x),
        Cell::Num(x) => json_string(&number(*x)),
        Cell::Int(n) => n.to_string(),
        Cell::Bool(b) => b.to_string(),
        Cell::Text(s) => json_string(s),
    }
}

pub fn render_csv(table: &Table, cfg: &RunConfig) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# {}", tool_version());
    let _ = writeln!(s, "# command: {}", cfg.command.as_str());
    let _ = writeln!(s, "# scenario: {}", cfg.scenario.name());
    let _ = writeln!(s, "{CONFIG_BEGIN}");
    for line in cfg.to_toml().lines() {
        if line.is_empty() {
            s.push_str("#\n");
        } else {
            let _ = writeln!(s, "# {line}");
        }
    }
    let _ = writeln!(s, "{CONFIG_END}");
    let _ = writeln!(s, "{}", table.columns.join(","));
    for row in &table.rows {
        let cells: Vec<String> = row.iter().map(csv_cell).collect();
        let _ = writeln!(s, "{}", cells.join(","));
    }
    s
}

pub fn render_json(table: &Table) -> String {
    let mut s = String::from("[\n");
    for (i, row) in table.rows.iter().enumerate() {
        let fields: Vec<String> = table
            .columns
            .iter()
            .zip(row)
            .map(|(k, c)| format!("{}: {}", json_string(k), json_cell(c)))
            .collect();
        let sep = if i + 1 == table.rows.len() { "" } else { "," };
        let _ = writeln!(s, "  {{{}}}{sep}", fields.join(", "));
    }
    s.push_str("]\n");
    s
}

/// Config echoed in the header of a CSV written by this tool.
pub fn config_from_header(text: &str) -> Result<RunConfig, CliError> {
    let mut lines = text.lines();
    if !lines.any(|l| l == CONFIG_BEGIN) {
        return Err(CliError::Config("replay: no config header found (only CSV output carries one)".into()));
    }
    let mut toml = String::new();
    for line in lines {
        if line == CONFIG_END {
            return RunConfig::from_toml(&toml);
        }
        let body = line
            .strip_prefix("# ")
            .or_else(|| line.strip_prefix('#'))
            .ok_or_else(|| CliError::Config("replay: malformed config header".into()))?;
        toml.push_str(body);
        toml.push('\n');
    }
    Err(CliError::Config("replay: unterminated config header".into()))
}
