//! The `oracle` subcommand: closed-form joint outcome table for one
//! Bell state and one analyzer pair.

use anyhow::{anyhow, Result};

use bellbias_core::quantum::{bell_state, joint_distribution, BellLabel, MeasAngle, Outcome};

use crate::emit::fmt12;

/// Renders the exact table, marginals, and correlation.
pub fn oracle_text(label: BellLabel, a: f64, b: f64) -> Result<String> {
    for (name, v) in [("a", a), ("b", b)] {
        if !v.is_finite() {
            return Err(anyhow!("--{name}: angle must be finite, got {v}"));
        }
    }
    let a = MeasAngle::new(a);
    let b = MeasAngle::new(b);
    let dist = joint_distribution(&bell_state(label), a, b)?;
    let mut out = String::new();
    out.push_str(&format!("state: {}\n", label.token()));
    out.push_str(&format!("a: {}  b: {}\n", fmt12(a.radians()), fmt12(b.radians())));
    for oa in Outcome::BOTH {
        for ob in Outcome::BOTH {
            out.push_str(&format!(
                "P(A={:+}, B={:+}) = {}\n",
                oa.value(),
                ob.value(),
                fmt12(dist.prob(oa, ob)),
            ));
        }
    }
    out.push_str(&format!(
        "P(A=+1) = {}  P(B=+1) = {}\n",
        fmt12(dist.marginal_a(Outcome::Plus)),
        fmt12(dist.marginal_b(Outcome::Plus)),
    ));
    out.push_str(&format!("E = {}\n", fmt12(dist.correlation())));
    Ok(out)
}
