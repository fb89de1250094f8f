//! The `combos` subcommand: enumerate setting/outcome/midpoint-label
//! tuples the swap run can never produce.

use anyhow::{anyhow, Result};

use bellbias_core::protocols::{zero_probability_combos, Geometry};
use bellbias_core::quantum::MeasAngle;

use crate::emit::fmt12;

fn to_angles(name: &str, grid: &[f64]) -> Result<Vec<MeasAngle>> {
    if grid.is_empty() {
        return Err(anyhow!("--{name}: needs at least one angle"));
    }
    grid.iter()
        .map(|&v| {
            if v.is_finite() {
                Ok(MeasAngle::new(v))
            } else {
                Err(anyhow!("--{name}: angle must be finite, got {v}"))
            }
        })
        .collect()
}

/// Renders the deterministic, sorted list of impossible tuples; the
/// second grid defaults to the first.
pub fn combos_text(geometry: Geometry, a_grid: &[f64], b_grid: Option<&[f64]>) -> Result<String> {
    let a = to_angles("a-grid", a_grid)?;
    let b = match b_grid {
        Some(g) => to_angles("b-grid", g)?,
        None => a.clone(),
    };
    let combos = zero_probability_combos(geometry, &a, &b)?;
    if combos.is_empty() {
        return Ok("no zero-probability combinations on this grid\n".to_string());
    }
    let mut out = format!("{} zero-probability combinations:\n", combos.len());
    for c in &combos {
        out.push_str(&format!(
            "a={} b={} A={:+} B={:+} m={}\n",
            fmt12(c.a.radians()),
            fmt12(c.b.radians()),
            c.outcome_a.value(),
            c.outcome_b.value(),
            c.label.token(),
        ));
    }
    Ok(out)
}
