//! Executes a resolved run end to end: simulate, summarize, gate,
//! and write the three output files.

use std::fs;
use std::path::PathBuf;
use std::time::Instant;

use anyhow::{Context, Result};
use serde_json::json;

use bellbias_core::gallery;
use bellbias_core::protocols;

use crate::config::{GalleryJob, Job, ResolvedRun};
use crate::emit;
use crate::reports::{self, Gate};

/// What a finished run produced, for the caller to report on.
pub struct RunOutcome {
    pub gates: Vec<Gate>,
    pub events_path: PathBuf,
    pub details_path: Option<PathBuf>,
    pub summary_path: PathBuf,
}

impl RunOutcome {
    pub fn gates_passed(&self) -> bool {
        self.gates.iter().all(|g| g.passed)
    }
}

/// Runs the job on `threads` workers (the process default when
/// `None`) and writes `events.csv`, `summary.json`, and — for the
/// classical generators — `details.csv` into the output directory.
pub fn execute(run: &ResolvedRun, threads: Option<usize>) -> Result<RunOutcome> {
    if run.seed_generated {
        eprintln!(
            "note: no seed given; using generated master seed {} (echoed in summary.json)",
            run.master_seed
        );
    }
    fs::create_dir_all(&run.out_dir)
        .with_context(|| format!("cannot create output directory {}", run.out_dir.display()))?;
    let started = Instant::now();
    let (events, details, summary, gates) = match &run.job {
        Job::Protocol { config, convention } => {
            let ensemble = match threads {
                Some(n) => rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build()
                    .context("cannot build worker pool")?
                    .install(|| protocols::run_parallel(config, run.master_seed)),
                None => protocols::run_parallel(config, run.master_seed),
            }?;
            let summary =
                reports::build_protocol_summary(&ensemble, *convention, &run.reports);
            let gates = reports::protocol_gates(&ensemble, *convention);
            (
                emit::protocol_events_csv(&ensemble),
                None,
                serde_json::to_value(summary)?,
                gates,
            )
        }
        Job::Gallery(GalleryJob::Survivorship(config)) => {
            let report = gallery::survivorship(config)?;
            (
                emit::survivorship_events_csv(&report),
                Some(emit::survivorship_details_csv(&report)),
                serde_json::to_value(reports::survivorship_summary(config, &report))?,
                reports::survivorship_gates(config, &report),
            )
        }
        Job::Gallery(GalleryJob::CoinFactory(config)) => {
            let report = gallery::coin_factory(config)?;
            (
                emit::coin_factory_events_csv(&report),
                Some(emit::coin_factory_details_csv(&report)),
                serde_json::to_value(reports::coin_factory_summary(config, &report))?,
                reports::coin_factory_gates(&report),
            )
        }
        Job::Gallery(GalleryJob::Clinic(config)) => {
            let report = gallery::clinic(config)?;
            (
                emit::clinic_events_csv(&report),
                Some(emit::clinic_details_csv(&report)),
                serde_json::to_value(reports::clinic_summary(config, &report))?,
                reports::clinic_gates(&report),
            )
        }
        Job::Gallery(GalleryJob::DigitParity {
            source_a,
            source_b,
            n,
        }) => {
            let report = gallery::digit_parity(source_a, source_b, *n)?;
            (
                emit::digit_parity_events_csv(&report),
                Some(emit::digit_parity_details_csv(&report)),
                serde_json::to_value(reports::digit_parity_summary(&report))?,
                reports::digit_parity_gates(&report, source_a, source_b),
            )
        }
    };
    let elapsed_ms = started.elapsed().as_millis() as u64;

    let document = json!({
        "tool": {
            "name": "bellbias",
            "version": env!("CARGO_PKG_VERSION"),
        },
        "job": run.job.id(),
        "master_seed": run.master_seed,
        "seed_generated": run.seed_generated,
        "elapsed_ms": elapsed_ms,
        "config": run.echo,
        "summary": summary,
        "gates": gates,
        "gates_passed": gates.iter().all(|g| g.passed),
    });

    let events_path = run.out_dir.join("events.csv");
    emit::write_atomic(&events_path, events.as_bytes())
        .with_context(|| format!("cannot write {}", events_path.display()))?;
    let details_path = match details {
        Some(text) => {
            let path = run.out_dir.join("details.csv");
            emit::write_atomic(&path, text.as_bytes())
                .with_context(|| format!("cannot write {}", path.display()))?;
            Some(path)
        }
        None => None,
    };
    let summary_path = run.out_dir.join("summary.json");
    let mut text = serde_json::to_string_pretty(&document)?;
    text.push('\n');
    emit::write_atomic(&summary_path, text.as_bytes())
        .with_context(|| format!("cannot write {}", summary_path.display()))?;

    Ok(RunOutcome {
        gates,
        events_path,
        details_path,
        summary_path,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{Overrides, RunConfig};

    fn resolve(value: serde_json::Value) -> ResolvedRun {
        let config: RunConfig = serde_json::from_value(value).unwrap();
        config.resolve(&Overrides::default()).unwrap()
    }

    #[test]
    fn protocol_run_writes_all_files() {
        let dir = tempfile::tempdir().unwrap();
        let run = resolve(serde_json::json!({
            "version": 1,
            "seed": 42,
            "out_dir": dir.path(),
            "protocol": {"kind": "fixed_state", "label": "psi-", "trials": 2_000},
        }));
        let outcome = execute(&run, Some(2)).unwrap();
        let events = fs::read_to_string(&outcome.events_path).unwrap();
        assert!(events.starts_with(emit::EVENTS_HEADER));
        assert_eq!(events.lines().count(), 2_001);
        assert!(outcome.details_path.is_none());
        let summary: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(&outcome.summary_path).unwrap()).unwrap();
        assert_eq!(summary["master_seed"], 42);
        assert_eq!(summary["job"], "fixed_state");
        assert_eq!(summary["config"]["protocol"]["trials"], 2_000);
        assert!(summary["gates"].as_array().unwrap().len() >= 2);
    }

    #[test]
    fn worker_count_does_not_change_the_events_file() {
        let dir = tempfile::tempdir().unwrap();
        let mut texts = Vec::new();
        for threads in [1usize, 3] {
            let run = resolve(serde_json::json!({
                "version": 1,
                "seed": 11,
                "out_dir": dir.path().join(format!("t{threads}")),
                "protocol": {"kind": "swap", "geometry": "past", "trials": 3_000},
            }));
            let outcome = execute(&run, Some(threads)).unwrap();
            texts.push(fs::read(&outcome.events_path).unwrap());
        }
        assert_eq!(texts[0], texts[1]);
    }

    #[test]
    fn gallery_run_writes_details() {
        let dir = tempfile::tempdir().unwrap();
        let run = resolve(serde_json::json!({
            "version": 1,
            "seed": 5,
            "out_dir": dir.path(),
            "gallery": {"kind": "clinic", "population": 30_000},
        }));
        let outcome = execute(&run, None).unwrap();
        let details = fs::read_to_string(outcome.details_path.unwrap()).unwrap();
        assert!(details.starts_with("candidate,carrier,disease_a,disease_b,admitted"));
        let events = fs::read_to_string(&outcome.events_path).unwrap();
        assert!(events.starts_with(emit::EVENTS_HEADER));
        assert_eq!(events.lines().count(), 30_001);
    }

    #[test]
    fn rerunning_the_echo_reproduces_events_byte_for_byte() {
        let dir = tempfile::tempdir().unwrap();
        let run = resolve(serde_json::json!({
            "version": 1,
            "seed": 31,
            "out_dir": dir.path().join("first"),
            "protocol": {"kind": "hopper_sort", "trials": 2_500},
        }));
        let first = execute(&run, None).unwrap();
        let summary: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(&first.summary_path).unwrap()).unwrap();
        let mut echoed: RunConfig = serde_json::from_value(summary["config"].clone()).unwrap();
        echoed.out_dir = Some(dir.path().join("second"));
        let second = execute(&echoed.resolve(&Overrides::default()).unwrap(), None).unwrap();
        assert_eq!(
            fs::read(&first.events_path).unwrap(),
            fs::read(&second.events_path).unwrap()
        );
    }
}
