//! Summary assembly: serializable mirrors of the core statistics,
//! wired up per protocol, plus the pass/fail gates the `--gates` flag
//! turns into an exit code.
//!
//! Sections that cannot be computed from the data at hand (say, an
//! empty stratum in a ten-trial smoke run) are dropped with a note
//! rather than failing the whole run; gates, by contrast, report
//! `passed: false` whenever the check could not be established.

use serde::Serialize;

use bellbias_core::gallery::{
    ClinicConfig, ClinicReport, CoinFactoryConfig, CoinFactoryReport, DigitSource,
    SurvivorshipConfig, SurvivorshipReport, DigitParityReport,
};
use bellbias_core::protocols::{Ensemble, ProtocolKind};
use bellbias_core::quantum::{bell_state, joint_distribution, BellLabel, MeasAngle};
use bellbias_core::stats::{
    self, analytic_chsh, chsh_in, compare_to_analytic, fact_deviation, fact_deviation_analytic,
    screening_off, selection_delta, tabulate, CauseSelector, ChshConvention, ChshReport,
    Conditioning, CorrEstimate, JointTable, ScreenReport,
};

use crate::config::ReportId;

/// How many standard errors a sampled statistic may sit from its
/// reference before a gate trips.
pub const GATE_SIGMAS: f64 = 5.0;

#[derive(Debug, Clone, Serialize)]
pub struct CorrDto {
    pub value: f64,
    pub stderr: f64,
    pub n: u64,
}

impl From<CorrEstimate> for CorrDto {
    fn from(c: CorrEstimate) -> CorrDto {
        CorrDto {
            value: c.value,
            stderr: c.stderr,
            n: c.n,
        }
    }
}

fn corr_opt(c: Option<CorrEstimate>) -> Option<CorrDto> {
    c.map(CorrDto::from)
}

#[derive(Debug, Clone, Serialize)]
pub struct ChshDto {
    pub s: f64,
    pub stderr: f64,
    pub convention: String,
    pub correlations: Vec<CorrDto>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub analytic: Option<f64>,
    pub violates_classical_bound: bool,
}

impl From<ChshReport> for ChshDto {
    fn from(r: ChshReport) -> ChshDto {
        ChshDto {
            s: r.s,
            stderr: r.stderr,
            convention: r.convention.token().to_string(),
            correlations: r.correlations.into_iter().map(CorrDto::from).collect(),
            analytic: r.analytic,
            violates_classical_bound: r.violates_classical_bound,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct StratumChshDto {
    pub key: u8,
    pub label: String,
    pub chsh: ChshDto,
}

#[derive(Debug, Clone, Serialize)]
pub struct ChshSection {
    /// Pooled over the whole ensemble.
    pub overall: ChshDto,
    /// Kept sub-ensemble (filter protocol only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kept: Option<ChshDto>,
    /// Conditioned on the protocol's cause variable, one entry per
    /// populated stratum.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub strata: Vec<StratumChshDto>,
}

#[derive(Debug, Clone, Serialize)]
pub struct FactCellDto {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stratum: Option<u8>,
    pub pair: usize,
    pub a: i32,
    pub b: i32,
    pub deviation: f64,
    pub stderr: f64,
    pub n: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct FactSection {
    pub max_deviation: f64,
    pub argmax: FactCellDto,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub analytic_max: Option<f64>,
    pub skipped: usize,
    pub cells: Vec<FactCellDto>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SelectionSection {
    /// Which sub-ensemble was carved out.
    pub selection: String,
    /// Setting pair the correlations are compared at.
    pub pair: usize,
    pub super_corr: CorrDto,
    pub sub_corr: CorrDto,
    pub delta: f64,
    pub z_score: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScreenStratumDto {
    pub key: u8,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub corr: Option<CorrDto>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScreeningSection {
    pub cause: String,
    pub strata: Vec<ScreenStratumDto>,
    pub max_abs_conditional_corr: f64,
    pub degenerate: bool,
}

fn screening_section(cause: &str, report: ScreenReport) -> ScreeningSection {
    ScreeningSection {
        cause: cause.to_string(),
        strata: report
            .strata
            .into_iter()
            .map(|s| ScreenStratumDto {
                key: s.key,
                corr: corr_opt(s.corr),
            })
            .collect(),
        max_abs_conditional_corr: report.max_abs_conditional_corr,
        degenerate: report.degenerate,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleEntryDto {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stratum: Option<u8>,
    /// Bell label of the reference distribution.
    pub reference: String,
    pub max_abs_deviation: f64,
    pub max_sigmas: f64,
    pub worst_pair: usize,
    pub worst_a: i32,
    pub worst_b: i32,
    pub chi_square: f64,
    pub df: u64,
    pub p_value: f64,
    pub impossible_observed: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ProtocolSummary {
    pub protocol: String,
    pub trials: u64,
    pub records: u64,
    pub kept: u64,
    /// Cause variable the conditioned sections stratify by.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cause: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stratum_counts: Option<Vec<u64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub chsh: Option<ChshSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fact: Option<FactSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub selection: Option<SelectionSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub screening: Option<ScreeningSection>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub oracle_compare: Vec<OracleEntryDto>,
    /// Sections that had to be dropped, and why.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

/// One named check with its worst observed statistic and the bound it
/// must stay inside.
#[derive(Debug, Clone, Serialize)]
pub struct Gate {
    pub name: String,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub observed: Option<f64>,
    pub bound: f64,
    pub note: String,
}

impl Gate {
    fn within(name: &str, observed: f64, bound: f64, note: impl Into<String>) -> Gate {
        Gate {
            name: name.to_string(),
            passed: observed <= bound,
            observed: Some(observed),
            bound,
            note: note.into(),
        }
    }

    fn exceeds(name: &str, observed: f64, bound: f64, note: impl Into<String>) -> Gate {
        Gate {
            name: name.to_string(),
            passed: observed > bound,
            observed: Some(observed),
            bound,
            note: note.into(),
        }
    }

    fn failed(name: &str, note: impl Into<String>) -> Gate {
        Gate {
            name: name.to_string(),
            passed: false,
            observed: None,
            bound: GATE_SIGMAS,
            note: note.into(),
        }
    }
}

/// The stratifying cause variable of each protocol.
pub fn cause_for(kind: &ProtocolKind) -> CauseSelector {
    match kind {
        ProtocolKind::FixedState { .. } | ProtocolKind::RandomState => CauseSelector::Prep,
        ProtocolKind::Swap { .. } => CauseSelector::SwapOutcome,
        ProtocolKind::ClassicalFilter => CauseSelector::Kept,
        ProtocolKind::HopperSort => CauseSelector::Hopper,
    }
}

pub fn cause_token(cause: CauseSelector) -> &'static str {
    match cause {
        CauseSelector::Prep => "prep",
        CauseSelector::SwapOutcome => "m",
        CauseSelector::Hopper => "hopper",
        CauseSelector::Kept => "kept",
    }
}

fn is_two_by_two(ensemble: &Ensemble) -> bool {
    let s = &ensemble.config.strategy;
    s.a_count() == 2 && s.b_count() == 2
}

fn stratum_total(table: &JointTable, stratum: usize) -> u64 {
    (0..table.pair_count()).map(|p| table.total(stratum, p)).sum()
}

fn quadruple_pairs(ensemble: &Ensemble) -> [(MeasAngle, MeasAngle); 4] {
    let s = &ensemble.config.strategy;
    [s.pair(0), s.pair(1), s.pair(2), s.pair(3)]
}

/// Bell reference for a stratum key: labels for preparation, swap
/// outcome, and hopper strata all share the label indexing, and the
/// sorter's bins reproduce the forward conditional tables exactly.
fn stratum_reference(kind: &ProtocolKind, key: u8) -> Option<BellLabel> {
    match kind {
        ProtocolKind::ClassicalFilter => {
            (key == 1).then_some(BellLabel::PsiMinus)
        }
        _ => BellLabel::from_index(key as usize),
    }
}

/// Closed-form CHSH for the pooled ensemble: the prepared state for a
/// fixed preparation, the uniform Bell mixture otherwise. The filter's
/// pooled readings are independent fair coins, so every term vanishes.
fn overall_analytic(
    kind: &ProtocolKind,
    pairs: [(MeasAngle, MeasAngle); 4],
    convention: ChshConvention,
) -> Result<f64, stats::StatsError> {
    match kind {
        ProtocolKind::FixedState { label } => {
            analytic_chsh(&bell_state(*label), pairs, convention)
        }
        ProtocolKind::ClassicalFilter => Ok(0.0),
        _ => {
            let mut s = 0.0;
            for label in BellLabel::ALL {
                s += 0.25 * analytic_chsh(&bell_state(label), pairs, convention)?;
            }
            Ok(s)
        }
    }
}

fn chsh_section(
    ensemble: &Ensemble,
    convention: ChshConvention,
    notes: &mut Vec<String>,
) -> Option<ChshSection> {
    let pairs = quadruple_pairs(ensemble);
    let pooled = tabulate(ensemble, |_| true, Conditioning::None);
    let overall = match stats::chsh(&pooled, [0, 1, 2, 3], convention) {
        Ok(report) => {
            let analytic = overall_analytic(&ensemble.config.kind, pairs, convention);
            match analytic {
                Ok(a) => report.with_analytic(a),
                Err(_) => report,
            }
        }
        Err(e) => {
            notes.push(format!("chsh: {e}"));
            return None;
        }
    };
    let kept = if matches!(ensemble.config.kind, ProtocolKind::ClassicalFilter) {
        let table = tabulate(ensemble, |r| r.kept, Conditioning::None);
        match stats::chsh(&table, [0, 1, 2, 3], convention) {
            Ok(report) => {
                let analytic = analytic_chsh(&bell_state(BellLabel::PsiMinus), pairs, convention);
                Some(ChshDto::from(match analytic {
                    Ok(a) => report.with_analytic(a),
                    Err(_) => report,
                }))
            }
            Err(e) => {
                notes.push(format!("chsh.kept: {e}"));
                None
            }
        }
    } else {
        None
    };
    let cause = cause_for(&ensemble.config.kind);
    let mut strata = Vec::new();
    if cause != CauseSelector::Kept {
        let table = tabulate(ensemble, |_| true, Conditioning::By(cause));
        for key in 0..cause.stratum_count() as u8 {
            let Some(label) = stratum_reference(&ensemble.config.kind, key) else {
                continue;
            };
            if stratum_total(&table, key as usize) == 0 {
                continue;
            }
            match chsh_in(&table, key as usize, [0, 1, 2, 3], convention) {
                Ok(report) => {
                    let analytic = analytic_chsh(&bell_state(label), pairs, convention);
                    let report = match analytic {
                        Ok(a) => report.with_analytic(a),
                        Err(_) => report,
                    };
                    strata.push(StratumChshDto {
                        key,
                        label: label.token().to_string(),
                        chsh: ChshDto::from(report),
                    });
                }
                Err(e) => notes.push(format!("chsh stratum {key}: {e}")),
            }
        }
    }
    Some(ChshSection {
        overall: ChshDto::from(overall),
        kept,
        strata,
    })
}

/// Labels whose closed-form tables this protocol can produce.
fn reference_labels(kind: &ProtocolKind) -> Vec<BellLabel> {
    match kind {
        ProtocolKind::FixedState { label } => vec![*label],
        ProtocolKind::ClassicalFilter => vec![BellLabel::PsiMinus],
        _ => BellLabel::ALL.to_vec(),
    }
}

fn fact_section(ensemble: &Ensemble, notes: &mut Vec<String>) -> Option<FactSection> {
    let cause = cause_for(&ensemble.config.kind);
    let table = tabulate(ensemble, |_| true, Conditioning::By(cause));
    let report = match fact_deviation(&table) {
        Ok(r) => r,
        Err(e) => {
            notes.push(format!("fact: {e}"));
            return None;
        }
    };
    let mut analytic_max: Option<f64> = None;
    for label in reference_labels(&ensemble.config.kind) {
        let state = bell_state(label);
        for (_, a, b) in ensemble.config.strategy.pairs() {
            if let Ok(dist) = joint_distribution(&state, a, b) {
                let d = fact_deviation_analytic(&dist);
                analytic_max = Some(analytic_max.map_or(d, |m: f64| m.max(d)));
            }
        }
    }
    let to_dto = |c: &bellbias_core::stats::FactCell| FactCellDto {
        stratum: c.stratum_key,
        pair: c.pair,
        a: c.outcome_a.value(),
        b: c.outcome_b.value(),
        deviation: c.deviation,
        stderr: c.stderr,
        n: c.n,
    };
    Some(FactSection {
        max_deviation: report.max_deviation,
        argmax: to_dto(&report.argmax),
        analytic_max,
        skipped: report.skipped.len(),
        cells: report.cells.iter().map(to_dto).collect(),
    })
}

/// Sub-ensemble each protocol's selection story is about: the kept
/// records for the filter, the first label's stratum otherwise.
fn selection_filter(
    kind: &ProtocolKind,
) -> Option<(&'static str, fn(&bellbias_core::protocols::EventRecord) -> bool)> {
    match kind {
        ProtocolKind::FixedState { .. } => None,
        ProtocolKind::RandomState => Some(("prep = psi-", |r| {
            r.prep == Some(BellLabel::PsiMinus)
        })),
        ProtocolKind::Swap { .. } => Some(("m = psi-", |r| {
            r.swap_outcome == Some(BellLabel::PsiMinus)
        })),
        ProtocolKind::ClassicalFilter => Some(("kept", |r| r.kept)),
        ProtocolKind::HopperSort => Some(("hopper = 0", |r| r.hopper == Some(0))),
    }
}

fn selection_section(ensemble: &Ensemble, notes: &mut Vec<String>) -> Option<SelectionSection> {
    let (selection, filter) = selection_filter(&ensemble.config.kind)?;
    let super_table = tabulate(ensemble, |_| true, Conditioning::None);
    let sub_table = tabulate(ensemble, filter, Conditioning::None);
    match selection_delta(&super_table, &sub_table, 0) {
        Ok(report) => Some(SelectionSection {
            selection: selection.to_string(),
            pair: 0,
            super_corr: report.super_corr.into(),
            sub_corr: report.sub_corr.into(),
            delta: report.delta,
            z_score: report.z_score,
        }),
        Err(e) => {
            notes.push(format!("selection: {e}"));
            None
        }
    }
}

fn oracle_section(ensemble: &Ensemble, notes: &mut Vec<String>) -> Vec<OracleEntryDto> {
    let cause = cause_for(&ensemble.config.kind);
    let table = tabulate(ensemble, |_| true, Conditioning::By(cause));
    let mut entries = Vec::new();
    for key in 0..cause.stratum_count() as u8 {
        let Some(label) = stratum_reference(&ensemble.config.kind, key) else {
            continue;
        };
        if stratum_total(&table, key as usize) == 0 {
            continue;
        }
        match compare_to_analytic(&table, key as usize, &bell_state(label)) {
            Ok(c) => entries.push(OracleEntryDto {
                stratum: Some(key),
                reference: label.token().to_string(),
                max_abs_deviation: c.max_abs_deviation,
                max_sigmas: c.max_sigmas,
                worst_pair: c.max_cell.0,
                worst_a: c.max_cell.1.value(),
                worst_b: c.max_cell.2.value(),
                chi_square: c.chi_square,
                df: c.df,
                p_value: c.p_value,
                impossible_observed: c.impossible_observed,
            }),
            Err(e) => notes.push(format!("oracle-compare stratum {key}: {e}")),
        }
    }
    entries
}

/// Builds every requested section from one finished ensemble.
pub fn build_protocol_summary(
    ensemble: &Ensemble,
    convention: ChshConvention,
    reports: &[ReportId],
) -> ProtocolSummary {
    let mut notes = Vec::new();
    let cause = cause_for(&ensemble.config.kind);
    let mut stratum_counts = vec![0u64; cause.stratum_count()];
    let mut kept = 0u64;
    for r in &ensemble.records {
        if r.kept {
            kept += 1;
        }
        if let Some(v) = cause.value(r) {
            if let Some(slot) = stratum_counts.get_mut(v as usize) {
                *slot += 1;
            }
        }
    }
    let want = |id: ReportId| reports.contains(&id);
    let chsh = (want(ReportId::Chsh) && is_two_by_two(ensemble))
        .then(|| chsh_section(ensemble, convention, &mut notes))
        .flatten();
    let fact = want(ReportId::Fact)
        .then(|| fact_section(ensemble, &mut notes))
        .flatten();
    let selection = want(ReportId::Selection)
        .then(|| selection_section(ensemble, &mut notes))
        .flatten();
    let screening = want(ReportId::Screening).then(|| {
        screening_section(cause_token(cause), screening_off(ensemble, cause))
    });
    let oracle_compare = if want(ReportId::OracleCompare) {
        oracle_section(ensemble, &mut notes)
    } else {
        Vec::new()
    };
    ProtocolSummary {
        protocol: ensemble.protocol_id().to_string(),
        trials: ensemble.config.trials,
        records: ensemble.records.len() as u64,
        kept,
        cause: Some(cause_token(cause).to_string()),
        stratum_counts: Some(stratum_counts),
        chsh,
        fact,
        selection,
        screening,
        oracle_compare,
        notes,
    }
}

fn binomial_z(count: u64, n: u64, p: f64) -> f64 {
    if n == 0 {
        return f64::INFINITY;
    }
    let stderr = (p * (1.0 - p) / n as f64).sqrt();
    let rate = count as f64 / n as f64;
    (rate - p).abs() / stderr
}

/// Worst per-stratum z against a uniform share, e.g. label draws
/// against 1/4.
fn uniformity_gate(name: &str, counts: &[u64], note: &str) -> Gate {
    let n: u64 = counts.iter().sum();
    let p = 1.0 / counts.len() as f64;
    let worst = counts
        .iter()
        .map(|&c| binomial_z(c, n, p))
        .fold(0.0f64, f64::max);
    Gate::within(name, worst, GATE_SIGMAS, note)
}

/// Worst |E|/stderr over the populated setting pairs of a table's
/// stratum; the reference is zero correlation.
fn vanishing_corr_gate(name: &str, table: &JointTable, stratum: usize, note: &str) -> Gate {
    let mut worst = 0.0f64;
    let mut saw_any = false;
    for pair in 0..table.pair_count() {
        match stats::corr_in(table, stratum, pair) {
            Ok(c) => {
                saw_any = true;
                let z = if c.stderr > 0.0 {
                    c.value.abs() / c.stderr
                } else if c.value == 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                };
                worst = worst.max(z);
            }
            Err(_) => continue,
        }
    }
    if !saw_any {
        return Gate::failed(name, "no populated setting pair");
    }
    Gate::within(name, worst, GATE_SIGMAS, note)
}

fn chsh_vs_analytic_gate(name: &str, report: &ChshReport, note: &str) -> Gate {
    let Some(analytic) = report.analytic else {
        return Gate::failed(name, "no closed form available");
    };
    let z = if report.stderr > 0.0 {
        (report.s - analytic).abs() / report.stderr
    } else if report.s == analytic {
        0.0
    } else {
        f64::INFINITY
    };
    Gate::within(name, z, GATE_SIGMAS, note)
}

/// Worst oracle deviation (in binomial sigmas) over the populated
/// cause strata; any observation of a zero-probability cell fails.
fn oracle_gate(name: &str, ensemble: &Ensemble, note: &str) -> Gate {
    let cause = cause_for(&ensemble.config.kind);
    let table = tabulate(ensemble, |_| true, Conditioning::By(cause));
    let mut worst = 0.0f64;
    let mut impossible = 0u64;
    let mut compared = 0;
    for key in 0..cause.stratum_count() as u8 {
        let Some(label) = stratum_reference(&ensemble.config.kind, key) else {
            continue;
        };
        if stratum_total(&table, key as usize) == 0 {
            continue;
        }
        match compare_to_analytic(&table, key as usize, &bell_state(label)) {
            Ok(c) => {
                compared += 1;
                worst = worst.max(c.max_sigmas);
                impossible += c.impossible_observed;
            }
            Err(_) => {
                return Gate::failed(name, format!("stratum {key} has an empty setting pair"));
            }
        }
    }
    if compared == 0 {
        return Gate::failed(name, "no populated stratum to compare");
    }
    if impossible > 0 {
        let mut gate = Gate::within(name, worst, GATE_SIGMAS, note);
        gate.passed = false;
        gate.note = format!("{impossible} observations of zero-probability cells");
        return gate;
    }
    Gate::within(name, worst, GATE_SIGMAS, note)
}

/// Statistical checks for a protocol run; every gate must pass on a
/// healthy build with enough trials.
pub fn protocol_gates(ensemble: &Ensemble, convention: ChshConvention) -> Vec<Gate> {
    let mut gates = Vec::new();
    let kind = ensemble.config.kind;
    let cause = cause_for(&kind);
    let two_by_two = is_two_by_two(ensemble);
    let pairs = two_by_two.then(|| quadruple_pairs(ensemble));
    let pooled = tabulate(ensemble, |_| true, Conditioning::None);
    let n = ensemble.records.len() as u64;

    match kind {
        ProtocolKind::FixedState { label } => {
            if let Some(pairs) = pairs {
                if let Ok(report) = stats::chsh(&pooled, [0, 1, 2, 3], convention) {
                    let analytic = analytic_chsh(&bell_state(label), pairs, convention).ok();
                    let report = ChshReport {
                        analytic,
                        ..report
                    };
                    gates.push(chsh_vs_analytic_gate(
                        "chsh_matches_analytic",
                        &report,
                        "|S - closed form| in stderr units",
                    ));
                }
            }
            gates.push(oracle_gate(
                "joint_tables_match_oracle",
                ensemble,
                "worst cell deviation in binomial stderr units",
            ));
        }
        ProtocolKind::RandomState | ProtocolKind::Swap { .. } | ProtocolKind::HopperSort => {
            let mut counts = vec![0u64; cause.stratum_count()];
            for r in &ensemble.records {
                if let Some(v) = cause.value(r) {
                    counts[v as usize] += 1;
                }
            }
            let freq_name = match kind {
                ProtocolKind::Swap { .. } => "m_frequencies_uniform",
                ProtocolKind::HopperSort => "bin_frequencies_uniform",
                _ => "label_frequencies_uniform",
            };
            gates.push(uniformity_gate(
                freq_name,
                &counts,
                "worst per-value z against a 1/4 share",
            ));
            gates.push(vanishing_corr_gate(
                "pooled_correlations_vanish",
                &pooled,
                0,
                "worst pooled |E| in stderr units",
            ));
            if matches!(kind, ProtocolKind::HopperSort) {
                let discards = ensemble.records.iter().filter(|r| !r.kept).count();
                gates.push(Gate::within(
                    "no_discards",
                    discards as f64,
                    0.0,
                    "records thrown away (must be exactly zero)",
                ));
            }
            if let Some(pairs) = pairs {
                let table = tabulate(ensemble, |_| true, Conditioning::By(cause));
                if stratum_total(&table, 0) > 0 {
                    match chsh_in(&table, 0, [0, 1, 2, 3], convention) {
                        Ok(report) => {
                            let analytic =
                                analytic_chsh(&bell_state(BellLabel::PsiMinus), pairs, convention)
                                    .ok();
                            let report = ChshReport { analytic, ..report };
                            gates.push(chsh_vs_analytic_gate(
                                "singlet_stratum_chsh_matches_analytic",
                                &report,
                                "|S - closed form| in the first stratum",
                            ));
                        }
                        Err(e) => gates
                            .push(Gate::failed("singlet_stratum_chsh_matches_analytic", e.to_string())),
                    }
                } else {
                    gates.push(Gate::failed(
                        "singlet_stratum_chsh_matches_analytic",
                        "first stratum is empty",
                    ));
                }
            }
            gates.push(oracle_gate(
                "strata_match_oracles",
                ensemble,
                "worst cell deviation in binomial stderr units",
            ));
        }
        ProtocolKind::ClassicalFilter => {
            let kept = ensemble.records.iter().filter(|r| r.kept).count() as u64;
            gates.push(Gate::within(
                "keep_rate_near_quarter",
                binomial_z(kept, n, 0.25),
                GATE_SIGMAS,
                "|keep rate - 1/4| in binomial stderr units",
            ));
            gates.push(vanishing_corr_gate(
                "unfiltered_correlations_vanish",
                &pooled,
                0,
                "worst pooled |E| in stderr units",
            ));
            if let Some(pairs) = pairs {
                let table = tabulate(ensemble, |r| r.kept, Conditioning::None);
                match stats::chsh(&table, [0, 1, 2, 3], convention) {
                    Ok(report) => {
                        let analytic =
                            analytic_chsh(&bell_state(BellLabel::PsiMinus), pairs, convention).ok();
                        let report = ChshReport { analytic, ..report };
                        gates.push(chsh_vs_analytic_gate(
                            "kept_chsh_matches_analytic",
                            &report,
                            "|S - closed form| over the kept records",
                        ));
                    }
                    Err(e) => gates.push(Gate::failed("kept_chsh_matches_analytic", e.to_string())),
                }
            }
            gates.push(oracle_gate(
                "kept_table_matches_oracle",
                ensemble,
                "worst kept-cell deviation in binomial stderr units",
            ));
        }
    }
    gates
}

// ---------------------------------------------------------------------------
// Gallery summaries and gates
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct SurvivorshipSummary {
    pub region_count: u32,
    pub lethal_regions: Vec<u32>,
    pub hits_per_sortie: u32,
    pub sorties: u64,
    pub survivors: u64,
    pub survival_rate: f64,
    pub analytic_survival_rate: f64,
    pub all_hits: Vec<u64>,
    pub survivor_hits: Vec<u64>,
    pub hit_ratio: Vec<Option<f64>>,
}

pub fn survivorship_summary(
    config: &SurvivorshipConfig,
    report: &SurvivorshipReport,
) -> SurvivorshipSummary {
    SurvivorshipSummary {
        region_count: report.region_count,
        lethal_regions: config.lethal_regions.iter().copied().collect(),
        hits_per_sortie: config.hits_per_sortie,
        sorties: report.sortie_count,
        survivors: report.survivor_count,
        survival_rate: report.survival_rate,
        analytic_survival_rate: report.analytic_survival_rate,
        all_hits: report.all_hits.clone(),
        survivor_hits: report.survivor_hits.clone(),
        hit_ratio: report.hit_ratio.clone(),
    }
}

pub fn survivorship_gates(config: &SurvivorshipConfig, report: &SurvivorshipReport) -> Vec<Gate> {
    let lethal_survivor_hits: u64 = config
        .lethal_regions
        .iter()
        .map(|&r| report.survivor_hits[r as usize])
        .sum();
    vec![
        Gate::within(
            "no_survivor_hits_in_lethal_regions",
            lethal_survivor_hits as f64,
            0.0,
            "hits recorded on returning sorties in regions nothing returns from",
        ),
        Gate::within(
            "survival_rate_matches_analytic",
            binomial_z(
                report.survivor_count,
                report.sortie_count,
                report.analytic_survival_rate,
            ),
            GATE_SIGMAS,
            "|rate - closed form| in binomial stderr units",
        ),
    ]
}

#[derive(Debug, Clone, Serialize)]
pub struct CoinFactorySummary {
    pub shifts: u64,
    pub coins_per_shift: u64,
    pub error_rate: f64,
    pub coins: u64,
    /// Cluster-robust by shift: coins in a shift share the setting.
    pub overall: CorrDto,
    pub per_setting: Vec<Option<CorrDto>>,
    pub analytic_per_setting: Vec<f64>,
    /// Readings conditioned on the true face pair, per setting.
    pub screening: Vec<Option<ScreeningSection>>,
}

pub fn coin_factory_summary(
    config: &CoinFactoryConfig,
    report: &CoinFactoryReport,
) -> CoinFactorySummary {
    CoinFactorySummary {
        shifts: config.shifts,
        coins_per_shift: config.coins_per_shift,
        error_rate: config.error_rate,
        coins: report.records.len() as u64,
        overall: report.overall.into(),
        per_setting: report.per_setting.iter().map(|c| corr_opt(*c)).collect(),
        analytic_per_setting: report.analytic_per_setting.to_vec(),
        screening: report
            .screening
            .iter()
            .map(|s| s.clone().map(|r| screening_section("faces", r)))
            .collect(),
    }
}

pub fn coin_factory_gates(report: &CoinFactoryReport) -> Vec<Gate> {
    let mut gates = Vec::new();
    let mut worst = 0.0f64;
    let mut missing = false;
    for (i, corr) in report.per_setting.iter().enumerate() {
        match corr {
            Some(c) if c.stderr > 0.0 => {
                worst = worst.max((c.value - report.analytic_per_setting[i]).abs() / c.stderr);
            }
            _ => missing = true,
        }
    }
    gates.push(if missing {
        Gate::failed(
            "per_setting_correlations_match_model",
            "a setting was never drawn or had no spread",
        )
    } else {
        Gate::within(
            "per_setting_correlations_match_model",
            worst,
            GATE_SIGMAS,
            "worst |corr - model| in stderr units",
        )
    });
    let z = if report.overall.stderr > 0.0 {
        report.overall.value.abs() / report.overall.stderr
    } else {
        f64::INFINITY
    };
    gates.push(Gate::within(
        "overall_correlation_vanishes",
        z,
        GATE_SIGMAS,
        "pooled |corr| in cluster-robust stderr units",
    ));
    let mut worst = 0.0f64;
    let mut any_stratum = false;
    for screen in report.screening.iter().flatten() {
        for stratum in &screen.strata {
            if let Some(c) = &stratum.corr {
                any_stratum = true;
                let z = if c.stderr > 0.0 {
                    c.value.abs() / c.stderr
                } else if c.value == 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                };
                worst = worst.max(z);
            }
        }
    }
    gates.push(if any_stratum {
        Gate::within(
            "true_faces_screen_off_readings",
            worst,
            GATE_SIGMAS,
            "worst conditional |corr| in stderr units",
        )
    } else {
        Gate::failed("true_faces_screen_off_readings", "no stratum had spread")
    });
    gates
}

#[derive(Debug, Clone, Serialize)]
pub struct ClinicSummary {
    pub mode: String,
    pub population: u64,
    pub carriers: u64,
    /// Disease A x disease B counts over everyone screened.
    pub full_counts: [[u64; 2]; 2],
    /// The same table restricted to carriers.
    pub restricted_counts: [[u64; 2]; 2],
    #[serde(skip_serializing_if = "Option::is_none")]
    pub full_phi: Option<CorrDto>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub restricted_phi: Option<CorrDto>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub full_odds_ratio: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub restricted_odds_ratio: Option<f64>,
    pub degenerate: bool,
}

pub fn clinic_summary(config: &ClinicConfig, report: &ClinicReport) -> ClinicSummary {
    ClinicSummary {
        mode: report.mode.token().to_string(),
        population: config.population,
        carriers: report.carriers,
        full_counts: report.full_counts,
        restricted_counts: report.restricted_counts,
        full_phi: corr_opt(report.full_phi),
        restricted_phi: corr_opt(report.restricted_phi),
        full_odds_ratio: report.full_odds_ratio,
        restricted_odds_ratio: report.restricted_odds_ratio,
        degenerate: report.degenerate,
    }
}

pub fn clinic_gates(report: &ClinicReport) -> Vec<Gate> {
    let assoc = match &report.full_phi {
        Some(c) if c.stderr > 0.0 => Gate::exceeds(
            "full_population_association_detected",
            c.value.abs() / c.stderr,
            GATE_SIGMAS,
            "|phi| over everyone, in stderr units (must exceed the bound)",
        ),
        _ => Gate::failed(
            "full_population_association_detected",
            "no spread in the full table",
        ),
    };
    let vanish = match &report.restricted_phi {
        Some(c) if c.stderr > 0.0 => Gate::within(
            "carrier_stratum_association_vanishes",
            c.value.abs() / c.stderr,
            GATE_SIGMAS,
            "|phi| among carriers, in stderr units",
        ),
        _ => Gate::failed(
            "carrier_stratum_association_vanishes",
            "no spread among carriers",
        ),
    };
    vec![assoc, vanish]
}

#[derive(Debug, Clone, Serialize)]
pub struct DigitParitySummary {
    pub n: usize,
    pub source_a: String,
    pub source_b: String,
    /// Parity counts indexed [a odd][b odd].
    pub cells: [[u64; 2]; 2],
    pub within_s_cells: [[u64; 2]; 2],
    pub excluded: u64,
    pub within_s_n: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub full_phi: Option<CorrDto>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub within_s_phi: Option<CorrDto>,
    /// Conditional parity correlation inside S implied by independent
    /// uniform digits.
    pub model_within_s_phi: f64,
}

pub fn digit_parity_summary(report: &DigitParityReport) -> DigitParitySummary {
    DigitParitySummary {
        n: report.n,
        source_a: report.source_a.to_string(),
        source_b: report.source_b.to_string(),
        cells: report.cells,
        within_s_cells: report.within_s_cells,
        excluded: report.excluded,
        within_s_n: report.within_s_n,
        full_phi: corr_opt(report.full_phi),
        within_s_phi: corr_opt(report.within_s_phi),
        model_within_s_phi: bellbias_core::gallery::UNIFORM_WITHIN_S_PHI,
    }
}

pub fn digit_parity_gates(
    report: &DigitParityReport,
    source_a: &DigitSource,
    source_b: &DigitSource,
) -> Vec<Gate> {
    let mut gates = vec![Gate::within(
        "excluded_cell_structurally_empty",
        report.within_s_cells[1][1] as f64,
        0.0,
        "odd-odd pairs counted inside S (must be exactly zero)",
    )];
    // The -1/2 reference presumes independent uniform digits, which
    // only the generated streams guarantee; fixed constants get the
    // same check since they behave that way empirically, but arbitrary
    // digit files do not.
    let model_applies = !matches!(source_a, DigitSource::Digits(_))
        && !matches!(source_b, DigitSource::Digits(_));
    if model_applies {
        gates.push(match &report.within_s_phi {
            Some(c) if c.stderr > 0.0 => Gate::within(
                "within_s_phi_matches_model",
                (c.value - bellbias_core::gallery::UNIFORM_WITHIN_S_PHI).abs() / c.stderr,
                GATE_SIGMAS,
                "|phi - (-1/2)| inside S, in stderr units",
            ),
            _ => Gate::failed("within_s_phi_matches_model", "no spread inside S"),
        });
    }
    gates
}

#[cfg(test)]
mod tests {
    use super::*;
    use bellbias_core::protocols::{self, ProtocolConfig, SettingStrategy};

    fn run(kind: ProtocolKind, trials: u64) -> Ensemble {
        let config = ProtocolConfig::new(kind, SettingStrategy::chsh_quadruple(), trials).unwrap();
        protocols::run(&config, 20260815).unwrap()
    }

    const ALL_REPORTS: [ReportId; 5] = [
        ReportId::Chsh,
        ReportId::Fact,
        ReportId::Selection,
        ReportId::Screening,
        ReportId::OracleCompare,
    ];

    #[test]
    fn fixed_state_summary_has_the_closed_form() {
        let ensemble = run(
            ProtocolKind::FixedState {
                label: BellLabel::PsiMinus,
            },
            40_000,
        );
        let reports: Vec<ReportId> = vec![ReportId::Chsh, ReportId::Fact, ReportId::OracleCompare];
        let summary = build_protocol_summary(&ensemble, ChshConvention::default(), &reports);
        let chsh = summary.chsh.expect("chsh section");
        let analytic = chsh.overall.analytic.expect("closed form");
        approx::assert_abs_diff_eq!(analytic.abs(), 8.0f64.sqrt(), epsilon = 1e-12);
        assert!((chsh.overall.s - analytic).abs() <= GATE_SIGMAS * chsh.overall.stderr);
        assert!(chsh.overall.violates_classical_bound);
        let fact = summary.fact.expect("fact section");
        // every quadruple pair has |a-b| of pi/4 or 3pi/4, so the
        // singlet's worst cell deviation is cos(pi/4)/4
        approx::assert_abs_diff_eq!(
            fact.analytic_max.unwrap(),
            0.1767766952966369,
            epsilon = 1e-12
        );
        assert!(summary.selection.is_none());
        assert_eq!(summary.oracle_compare.len(), 1);
        assert_eq!(summary.oracle_compare[0].reference, "psi-");
        assert!(summary.notes.is_empty(), "{:?}", summary.notes);
    }

    #[test]
    fn fixed_state_gates_pass() {
        let ensemble = run(
            ProtocolKind::FixedState {
                label: BellLabel::PhiPlus,
            },
            40_000,
        );
        for gate in protocol_gates(&ensemble, ChshConvention::default()) {
            assert!(gate.passed, "{} failed: {:?} {}", gate.name, gate.observed, gate.note);
        }
    }

    #[test]
    fn hopper_summary_and_gates() {
        let ensemble = run(ProtocolKind::HopperSort, 60_000);
        let summary = build_protocol_summary(&ensemble, ChshConvention::default(), &ALL_REPORTS);
        assert_eq!(summary.kept, 60_000);
        assert_eq!(summary.oracle_compare.len(), 4);
        let gates = protocol_gates(&ensemble, ChshConvention::default());
        assert!(gates.iter().any(|g| g.name == "no_discards"));
        for gate in &gates {
            assert!(gate.passed, "{} failed: {:?} {}", gate.name, gate.observed, gate.note);
        }
        let screening = summary.screening.expect("screening section");
        assert_eq!(screening.cause, "hopper");
        // conditioning on a bin leaves the readings strongly dependent
        assert!(screening.max_abs_conditional_corr > 0.3);
    }

    #[test]
    fn filter_summary_and_gates() {
        let ensemble = run(ProtocolKind::ClassicalFilter, 80_000);
        let summary = build_protocol_summary(&ensemble, ChshConvention::default(), &ALL_REPORTS);
        let chsh = summary.chsh.expect("chsh section");
        let kept = chsh.kept.expect("kept chsh");
        assert!((kept.s - kept.analytic.unwrap()).abs() <= GATE_SIGMAS * kept.stderr);
        assert!(!chsh.overall.violates_classical_bound);
        let selection = summary.selection.expect("selection section");
        assert_eq!(selection.selection, "kept");
        assert!(selection.z_score.abs() > GATE_SIGMAS);
        for gate in protocol_gates(&ensemble, ChshConvention::default()) {
            assert!(gate.passed, "{} failed: {:?} {}", gate.name, gate.observed, gate.note);
        }
    }

    #[test]
    fn swap_gates_pass() {
        let ensemble = run(
            ProtocolKind::Swap {
                geometry: bellbias_core::protocols::Geometry::Intermediate,
            },
            60_000,
        );
        for gate in protocol_gates(&ensemble, ChshConvention::default()) {
            assert!(gate.passed, "{} failed: {:?} {}", gate.name, gate.observed, gate.note);
        }
    }

    #[test]
    fn tiny_runs_drop_sections_instead_of_failing() {
        let config = ProtocolConfig::new(
            ProtocolKind::RandomState,
            SettingStrategy::chsh_quadruple(),
            3,
        )
        .unwrap();
        let ensemble = protocols::run(&config, 5).unwrap();
        let summary = build_protocol_summary(&ensemble, ChshConvention::default(), &ALL_REPORTS);
        // three records cannot populate every section, but assembly
        // must not panic and the drops must be explained
        assert_eq!(summary.records, 3);
        assert!(
            summary.chsh.is_some() || summary.notes.iter().any(|n| n.starts_with("chsh")),
            "{:?}",
            summary.notes
        );
    }

    #[test]
    fn clinic_gates_separate_full_from_restricted() {
        let config = ClinicConfig {
            population: 400_000,
            p_disease_a: 0.05,
            p_disease_b: 0.05,
            mode: bellbias_core::gallery::SelectionMode::Postselect,
            seed: 7,
        };
        let report = bellbias_core::gallery::clinic(&config).unwrap();
        let gates = clinic_gates(&report);
        for gate in &gates {
            assert!(gate.passed, "{} failed: {:?} {}", gate.name, gate.observed, gate.note);
        }
        let summary = clinic_summary(&config, &report);
        assert_eq!(summary.mode, "postselect");
        assert!(summary.full_phi.is_some());
    }

    #[test]
    fn digit_gates_skip_the_model_for_files() {
        let source = DigitSource::Digits(vec![1, 2, 3, 4, 5, 6, 7, 8, 9, 0, 1, 2]);
        let report =
            bellbias_core::gallery::digit_parity(&source, &DigitSource::Pi, 12).unwrap();
        let gates = digit_parity_gates(&report, &source, &DigitSource::Pi);
        assert_eq!(gates.len(), 1);
        assert!(gates[0].passed);
        let synth_a = DigitSource::SyntheticUniform { seed: 41 };
        let synth_b = DigitSource::SyntheticUniform { seed: 42 };
        let report = bellbias_core::gallery::digit_parity(&synth_a, &synth_b, 30_000).unwrap();
        let gates = digit_parity_gates(&report, &synth_a, &synth_b);
        assert_eq!(gates.len(), 2);
        for gate in &gates {
            assert!(gate.passed, "{} failed: {:?} {}", gate.name, gate.observed, gate.note);
        }
    }

    #[test]
    fn survivorship_gates_pass() {
        let config = SurvivorshipConfig {
            region_count: 10,
            lethal_regions: [0, 1, 2].into_iter().collect(),
            hits_per_sortie: 5,
            sorties: 50_000,
            seed: 9,
        };
        let report = bellbias_core::gallery::survivorship(&config).unwrap();
        for gate in survivorship_gates(&config, &report) {
            assert!(gate.passed, "{} failed: {:?} {}", gate.name, gate.observed, gate.note);
        }
    }

    #[test]
    fn coin_factory_gates_pass() {
        let config = CoinFactoryConfig {
            shifts: 8_000,
            coins_per_shift: 10,
            error_rate: 0.1,
            seed: 13,
        };
        let report = bellbias_core::gallery::coin_factory(&config).unwrap();
        for gate in coin_factory_gates(&report) {
            assert!(gate.passed, "{} failed: {:?} {}", gate.name, gate.observed, gate.note);
        }
    }
}
