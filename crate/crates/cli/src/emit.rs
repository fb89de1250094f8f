//! File emission: the fixed-header events CSV, per-generator detail
//! CSVs, and atomic writes so a crashed run never leaves a truncated
//! file behind.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use bellbias_core::gallery::{
    ClinicReport, CoinFactoryReport, DigitParityReport, SurvivorshipReport,
};
use bellbias_core::protocols::Ensemble;
use bellbias_core::quantum::Outcome;

/// Every run writes this header, whatever the job; inapplicable
/// columns stay empty so downstream readers never branch on schema.
pub const EVENTS_HEADER: &str = "trial,protocol,prep,m,a,b,A,B,kept,hopper";

/// Formats with 12 significant digits, enough to reconstruct the
/// angle exactly for lookup purposes.
pub fn fmt12(x: f64) -> String {
    format!("{x:.11e}")
}

fn outcome_cell(o: Outcome) -> &'static str {
    match o {
        Outcome::Plus => "+1",
        Outcome::Minus => "-1",
    }
}

fn parity_cell(digit: u8) -> &'static str {
    if digit % 2 == 1 {
        "+1"
    } else {
        "-1"
    }
}

/// Heads reads as +1, matching the sign the correlation estimates use.
fn face_cell(face: bellbias_core::gallery::Face) -> &'static str {
    match face {
        bellbias_core::gallery::Face::Heads => "+1",
        bellbias_core::gallery::Face::Tails => "-1",
    }
}

/// Writes via a temp file in the same directory plus rename, so the
/// destination is either absent, old, or complete.
pub fn write_atomic(path: &Path, contents: &[u8]) -> io::Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let file_name = path
        .file_name()
        .ok_or_else(|| io::Error::new(io::ErrorKind::InvalidInput, "path has no file name"))?;
    let mut tmp = file_name.to_os_string();
    tmp.push(".tmp");
    let tmp_path = match dir {
        Some(d) => d.join(&tmp),
        None => tmp.into(),
    };
    fs::write(&tmp_path, contents)?;
    match fs::rename(&tmp_path, path) {
        Ok(()) => Ok(()),
        Err(e) => {
            let _ = fs::remove_file(&tmp_path);
            Err(e)
        }
    }
}

/// Event rows for a protocol ensemble.
pub fn protocol_events_csv(ensemble: &Ensemble) -> String {
    let id = ensemble.protocol_id();
    let mut out = String::with_capacity(64 * (ensemble.records.len() + 1));
    out.push_str(EVENTS_HEADER);
    out.push('\n');
    for r in &ensemble.records {
        let prep = r.prep.map(|l| l.token()).unwrap_or("");
        let m = r.swap_outcome.map(|l| l.token()).unwrap_or("");
        let _ = write!(
            out,
            "{},{},{},{},{},{},{},{},{},",
            r.trial,
            id,
            prep,
            m,
            fmt12(r.a.radians()),
            fmt12(r.b.radians()),
            outcome_cell(r.outcome_a),
            outcome_cell(r.outcome_b),
            r.kept,
        );
        if let Some(bin) = r.hopper {
            let _ = write!(out, "{bin}");
        }
        out.push('\n');
    }
    out
}

/// Survivorship rows: one per sortie, `kept` = came back. Readings and
/// settings do not apply.
pub fn survivorship_events_csv(report: &SurvivorshipReport) -> String {
    let mut out = String::with_capacity(32 * (report.records.len() + 1));
    out.push_str(EVENTS_HEADER);
    out.push('\n');
    for r in &report.records {
        let _ = writeln!(out, "{},survivorship,,,,,,,{},", r.sortie, r.survived);
    }
    out
}

pub fn survivorship_details_csv(report: &SurvivorshipReport) -> String {
    let mut out = String::from("sortie,hits,survived\n");
    for r in &report.records {
        let hits = r
            .hits
            .iter()
            .map(|h| h.to_string())
            .collect::<Vec<_>>()
            .join(";");
        let _ = writeln!(out, "{},{},{}", r.sortie, hits, r.survived);
    }
    out
}

/// Coin rows: `m` is the true face pair (the candidate common cause),
/// A/B are the two observers' readings as signs.
pub fn coin_factory_events_csv(report: &CoinFactoryReport) -> String {
    let mut out = String::with_capacity(48 * (report.records.len() + 1));
    out.push_str(EVENTS_HEADER);
    out.push('\n');
    for (i, r) in report.records.iter().enumerate() {
        let faces = format!("{}{}", r.alice_face.token(), r.bob_face.token());
        let _ = writeln!(
            out,
            "{},coin_factory,,{},,,{},{},true,",
            i,
            faces,
            face_cell(r.alice_sees),
            face_cell(r.bob_sees),
        );
    }
    out
}

pub fn coin_factory_details_csv(report: &CoinFactoryReport) -> String {
    let mut out = String::from("shift,coin,setting,alice_face,bob_face,alice_sees,bob_sees\n");
    for r in &report.records {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.shift,
            r.coin,
            r.setting.token(),
            r.alice_face.token(),
            r.bob_face.token(),
            r.alice_sees.token(),
            r.bob_sees.token(),
        );
    }
    out
}

/// Clinic rows: A/B are the two diagnoses as signs, `kept` = admitted.
pub fn clinic_events_csv(report: &ClinicReport) -> String {
    let mut out = String::with_capacity(48 * (report.records.len() + 1));
    out.push_str(EVENTS_HEADER);
    out.push('\n');
    for r in &report.records {
        let sign = |present: bool| if present { "+1" } else { "-1" };
        let _ = writeln!(
            out,
            "{},clinic,,,,,{},{},{},",
            r.candidate,
            sign(r.disease_a),
            sign(r.disease_b),
            r.admitted,
        );
    }
    out
}

pub fn clinic_details_csv(report: &ClinicReport) -> String {
    let mut out = String::from("candidate,carrier,disease_a,disease_b,admitted\n");
    for r in &report.records {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            r.candidate, r.carrier, r.disease_a, r.disease_b, r.admitted,
        );
    }
    out
}

/// Digit rows: A/B are the two parities as signs (odd = +1), `kept` =
/// the position is inside S (not both digits odd).
pub fn digit_parity_events_csv(report: &DigitParityReport) -> String {
    let mut out = String::with_capacity(40 * (report.n + 1));
    out.push_str(EVENTS_HEADER);
    out.push('\n');
    for (i, (&da, &db)) in report.digits_a.iter().zip(&report.digits_b).enumerate() {
        let in_s = !(da % 2 == 1 && db % 2 == 1);
        let _ = writeln!(
            out,
            "{},digit_parity,,,,,{},{},{},",
            i,
            parity_cell(da),
            parity_cell(db),
            in_s,
        );
    }
    out
}

pub fn digit_parity_details_csv(report: &DigitParityReport) -> String {
    let mut out = String::from("position,digit_a,digit_b,in_s\n");
    for (i, (&da, &db)) in report.digits_a.iter().zip(&report.digits_b).enumerate() {
        let in_s = !(da % 2 == 1 && db % 2 == 1);
        let _ = writeln!(out, "{i},{da},{db},{in_s}");
    }
    out
}
