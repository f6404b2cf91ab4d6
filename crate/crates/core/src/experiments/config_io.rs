//! Flat `key = value` scenario files.
//!
//! Powers are given in dBm, path gains in dB and angles in degrees; they are
//! converted to linear units and radians on load. Lines starting with `#`
//! are comments. A `profile = desk|full` line selects the base parameter
//! set that unspecified keys fall back to.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::Path;

use crate::config::{Profile, SystemConfig};
use crate::error::{Error, Result};
use crate::linalg::{db_to_linear, dbm_to_watts};

#[derive(Clone, Copy)]
enum Unit {
    Plain,
    Db,
    Dbm,
    Deg,
}

type Field = fn(&mut SystemConfig) -> &mut f64;
type IntField = fn(&mut SystemConfig) -> &mut usize;

enum Slot {
    F(Field, Unit),
    U(IntField),
    U32(fn(&mut SystemConfig) -> &mut u32),
    U64(fn(&mut SystemConfig) -> &mut u64),
}

fn slots() -> Vec<(&'static str, Slot)> {
    use Slot::*;
    use Unit::*;
    vec![
        ("wavelength", F(|c| &mut c.wavelength, Plain)),
        ("element_spacing", F(|c| &mut c.element_spacing, Plain)),
        ("n_tx", U(|c| &mut c.n_tx)),
        ("n_rx", U(|c| &mut c.n_rx)),
        ("ris_rows", U(|c| &mut c.ris_rows)),
        ("ris_cols", U(|c| &mut c.ris_cols)),
        ("rician_factor", F(|c| &mut c.rician_factor, Plain)),
        ("beta_r_db", F(|c| &mut c.beta_r, Db)),
        ("beta_b_db", F(|c| &mut c.beta_b, Db)),
        ("beta_c_db", F(|c| &mut c.beta_c, Db)),
        ("beta_w_db", F(|c| &mut c.beta_w, Db)),
        ("alpha_r", F(|c| &mut c.alpha_r, Plain)),
        ("alpha_b", F(|c| &mut c.alpha_b, Plain)),
        ("alpha_c", F(|c| &mut c.alpha_c, Plain)),
        ("alpha_w", F(|c| &mut c.alpha_w, Plain)),
        ("d_ar", F(|c| &mut c.d_ar, Plain)),
        ("d_rb", F(|c| &mut c.d_rb, Plain)),
        ("d_rc", F(|c| &mut c.d_rc, Plain)),
        ("d_aw", F(|c| &mut c.d_aw, Plain)),
        ("theta_r_deg", F(|c| &mut c.theta_r, Deg)),
        ("theta_w_hat_deg", F(|c| &mut c.theta_w_hat, Deg)),
        ("gamma_a_deg", F(|c| &mut c.gamma_a, Deg)),
        ("phi_a_deg", F(|c| &mut c.phi_a, Deg)),
        ("gamma_b_deg", F(|c| &mut c.gamma_b, Deg)),
        ("gamma_c_deg", F(|c| &mut c.gamma_c, Deg)),
        ("phi_b_deg", F(|c| &mut c.phi_b, Deg)),
        ("phi_c_deg", F(|c| &mut c.phi_c, Deg)),
        ("sigma_b2_dbm", F(|c| &mut c.sigma_b2, Dbm)),
        ("sigma_c2_dbm", F(|c| &mut c.sigma_c2, Dbm)),
        ("sigma_a2_dbm", F(|c| &mut c.sigma_a2, Dbm)),
        ("sigma_w2_dbm", F(|c| &mut c.sigma_w2, Dbm)),
        ("power_dbm", F(|c| &mut c.power, Dbm)),
        ("qos_rate_bpshz", F(|c| &mut c.qos_rate, Plain)),
        ("epsilon", F(|c| &mut c.epsilon, Plain)),
        ("channel_uses", U(|c| &mut c.channel_uses)),
        ("gamma_crb", F(|c| &mut c.gamma_crb, Plain)),
        ("nb_max_angle_deg", F(|c| &mut c.nb_max_angle, Deg)),
        ("rng_seed", U64(|c| &mut c.rng_seed)),
        ("eta0", F(|c| &mut c.solver.eta0, Plain)),
        ("omega", F(|c| &mut c.solver.omega, Plain)),
        ("mu", F(|c| &mut c.solver.mu, Plain)),
        ("inner_tol", F(|c| &mut c.solver.inner_tol, Plain)),
        ("max_inner", U(|c| &mut c.solver.max_inner)),
        ("max_outer", U(|c| &mut c.solver.max_outer)),
        ("max_ao", U(|c| &mut c.solver.max_ao)),
        ("zeta0", F(|c| &mut c.solver.zeta0, Plain)),
        ("conic_tol", F(|c| &mut c.solver.conic.tol, Plain)),
        ("conic_max_iter", U32(|c| &mut c.solver.conic.max_iter)),
    ]
}

fn to_internal(unit: Unit, x: f64) -> f64 {
    match unit {
        Unit::Plain => x,
        Unit::Db => db_to_linear(x),
        Unit::Dbm => dbm_to_watts(x),
        Unit::Deg => x.to_radians(),
    }
}

fn to_external(unit: Unit, x: f64) -> f64 {
    match unit {
        Unit::Plain => x,
        Unit::Db => 10.0 * x.log10(),
        Unit::Dbm => 10.0 * (x * 1e3).log10(),
        Unit::Deg => x.to_degrees(),
    }
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::ConfigParse { line, msg: msg.into() }
}

/// Parses configuration text. Unspecified keys keep the values of the
/// selected profile (the full-size reference set by default).
pub fn parse_config(text: &str) -> Result<SystemConfig> {
    parse_config_with_base(text, None)
}

/// Like [`parse_config`], with `base` used unless the text names a profile.
pub fn parse_config_with_base(text: &str, base: Option<Profile>) -> Result<SystemConfig> {
    let mut entries = Vec::new();
    let mut seen = HashSet::new();
    let mut profile = base.unwrap_or(Profile::Full);
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| parse_err(line_no, format!("expected `key = value`, got `{line}`")))?;
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() || value.is_empty() {
            return Err(parse_err(line_no, "empty key or value"));
        }
        if !seen.insert(key.to_string()) {
            return Err(parse_err(line_no, format!("duplicate key `{key}`")));
        }
        if key == "profile" {
            profile = value.parse().map_err(|e: Error| parse_err(line_no, e.to_string()))?;
        } else {
            entries.push((line_no, key.to_string(), value.to_string()));
        }
    }

    let mut cfg = SystemConfig::for_profile(profile);
    let table = slots();
    for (line_no, key, value) in entries {
        let (_, slot) = table
            .iter()
            .find(|(k, _)| *k == key)
            .ok_or_else(|| parse_err(line_no, format!("unknown key `{key}`")))?;
        match slot {
            Slot::F(field, unit) => {
                let x: f64 = value
                    .parse()
                    .map_err(|_| parse_err(line_no, format!("`{key}` expects a number, got `{value}`")))?;
                *field(&mut cfg) = to_internal(*unit, x);
            }
            Slot::U(field) => {
                *field(&mut cfg) = value
                    .parse()
                    .map_err(|_| parse_err(line_no, format!("`{key}` expects a non-negative integer, got `{value}`")))?;
            }
            Slot::U32(field) => {
                *field(&mut cfg) = value
                    .parse()
                    .map_err(|_| parse_err(line_no, format!("`{key}` expects a non-negative integer, got `{value}`")))?;
            }
            Slot::U64(field) => {
                *field(&mut cfg) = value
                    .parse()
                    .map_err(|_| parse_err(line_no, format!("`{key}` expects a non-negative integer, got `{value}`")))?;
            }
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<SystemConfig> {
    parse_config(&std::fs::read_to_string(path)?)
}

pub fn load_config_with_base(path: &Path, base: Option<Profile>) -> Result<SystemConfig> {
    parse_config_with_base(&std::fs::read_to_string(path)?, base)
}

/// Renders every key so that [`parse_config`] reproduces `cfg`.
pub fn render_config(cfg: &SystemConfig) -> String {
    let mut cfg = cfg.clone();
    let mut out = String::new();
    for (key, slot) in slots() {
        let _ = match slot {
            Slot::F(field, unit) => writeln!(out, "{key} = {:?}", to_external(unit, *field(&mut cfg))),
            Slot::U(field) => writeln!(out, "{key} = {}", field(&mut cfg)),
            Slot::U32(field) => writeln!(out, "{key} = {}", field(&mut cfg)),
            Slot::U64(field) => writeln!(out, "{key} = {}", field(&mut cfg)),
        };
    }
    out
}
