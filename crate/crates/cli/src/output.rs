//! CSV and JSON writers with a fixed float format.

use std::fmt::Write as _;
use std::path::Path;

use ddlab_core::solver::{Grid1D, RunDiagnostics, State};
use ddlab_core::systems::EntropyMap;
use serde::Serialize;

use crate::CliError;

/// 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Config(format!("serializing {}: {e}", path.display())))?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}

/// Columns `x, u_1..u_N, v_1..v_N`.
pub fn write_fields(path: &Path, grid: &Grid1D, state: &State, map: &EntropyMap) -> Result<(), CliError> {
    let nc = state.n_comp;
    let mut s = String::from("x");
    for k in 1..=nc {
        write!(s, ",u_{k}").unwrap();
    }
    for k in 1..=nc {
        write!(s, ",v_{k}").unwrap();
    }
    s.push('\n');
    for i in 0..state.n_cells() {
        let u = state.cell(i);
        s.push_str(&fmt_f64(grid.x(i)));
        for x in u.iter().chain(&map.to_entropy(u)) {
            s.push(',');
            s.push_str(&fmt_f64(*x));
        }
        s.push('\n');
    }
    std::fs::write(path, s)?;
    Ok(())
}

/// Columns `t, mass (or mass_1..mass_N), entropy, dissipation, flux_gap, entropy_flux_gap, gradient_energy`.
pub fn write_diagnostics(path: &Path, diag: &RunDiagnostics, n_comp: usize) -> Result<(), CliError> {
    let mut s = String::from("t");
    if n_comp == 1 {
        s.push_str(",mass");
    } else {
        for k in 1..=n_comp {
            write!(s, ",mass_{k}").unwrap();
        }
    }
    s.push_str(",entropy,dissipation,flux_gap,entropy_flux_gap,gradient_energy\n");
    for r in &diag.records {
        let mut row = vec![r.t];
        row.extend(&r.mass);
        row.extend([r.entropy, r.dissipation, r.flux_gap, r.entropy_flux_gap, r.gradient_energy]);
        s.push_str(&row.iter().map(|x| fmt_f64(*x)).collect::<Vec<_>>().join(","));
        s.push('\n');
    }
    std::fs::write(path, s)?;
    Ok(())
}
