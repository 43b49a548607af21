use std::collections::BTreeSet;

use thiserror::Error;

use super::{Provenance, Solution};
use crate::model::VarRef;

#[derive(Debug, Error, PartialEq)]
pub enum ImportError {
    #[error("line {line}: {message}")]
    Line { line: usize, message: String },
    #[error("unknown variable {0:?}")]
    UnknownVariable(String),
    #[error("malformed solution: {0}")]
    Malformed(String),
}

const INTEGRALITY_TOL: f64 = 1e-6;

/// Reads `name = value` lines written by an external solver for a model
/// exported with `export_lp`. Blank lines and lines starting with `#` or `\`
/// are skipped; binaries must be within 1e-6 of 0 or 1; sensors without an
/// `e_i*` line get zero energy.
pub fn import_external(text: &str, n_sensors: usize) -> Result<Solution, ImportError> {
    let mut ones = BTreeSet::new();
    let mut energy = vec![0.0; n_sensors];
    for (k, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with('\\') {
            continue;
        }
        let err = |message: String| ImportError::Line {
            line: k + 1,
            message,
        };
        let (name, value) = line
            .split_once('=')
            .map(|(a, b)| (a.trim(), b.trim()))
            .ok_or_else(|| err("expected `name = value`".into()))?;
        let value: f64 = value
            .parse()
            .ok()
            .filter(|v: &f64| v.is_finite())
            .ok_or_else(|| err(format!("invalid value {value:?}")))?;
        let var = VarRef::from_name(name).ok_or_else(|| ImportError::UnknownVariable(name.into()))?;
        match var {
            VarRef::E { sensor } => {
                let slot = energy
                    .get_mut(sensor)
                    .ok_or_else(|| err(format!("sensor {sensor} out of range")))?;
                *slot = value;
            }
            _ => {
                let rounded = value.round();
                if (value - rounded).abs() > INTEGRALITY_TOL || !(rounded == 0.0 || rounded == 1.0) {
                    return Err(err(format!("{name} = {value} is not binary")));
                }
                if rounded == 1.0 {
                    ones.insert(var);
                }
            }
        }
    }
    Ok(Solution {
        ones,
        energy,
        provenance: Provenance::External,
        wall_time_s: 0.0,
    })
}
