//! The runners' central contract: an ensemble is a pure function of
//! `(config, master_seed)` — re-runs, protocol order, and (with the
//! `parallel` feature) worker counts must not move a single byte.

use core::f64::consts::FRAC_PI_3;

use bellbias_core::protocols::{
    run, Geometry, ProtocolConfig, ProtocolKind, SettingStrategy,
};
use bellbias_core::quantum::{BellLabel, MeasAngle};

fn all_protocol_configs(trials: u64) -> Vec<ProtocolConfig> {
    let quadruple = SettingStrategy::chsh_quadruple;
    let single = || SettingStrategy::single(MeasAngle::new(0.2), MeasAngle::new(FRAC_PI_3));
    let mut configs = vec![
        ProtocolConfig::new(
            ProtocolKind::FixedState {
                label: BellLabel::PsiMinus,
            },
            single(),
            trials,
        )
        .unwrap(),
        ProtocolConfig::new(ProtocolKind::RandomState, quadruple(), trials).unwrap(),
        ProtocolConfig::new(ProtocolKind::ClassicalFilter, quadruple(), trials).unwrap(),
        ProtocolConfig::new(ProtocolKind::HopperSort, quadruple(), trials).unwrap(),
    ];
    for geometry in Geometry::ALL {
        configs.push(
            ProtocolConfig::new(ProtocolKind::Swap { geometry }, single(), trials).unwrap(),
        );
    }
    configs
}

#[test]
fn reruns_are_identical() {
    for config in all_protocol_configs(500) {
        let first = run(&config, 0xfeed_beef).unwrap();
        let second = run(&config, 0xfeed_beef).unwrap();
        assert_eq!(
            first.records,
            second.records,
            "{} re-run diverged",
            config.kind.id()
        );
    }
}

#[test]
fn the_master_seed_matters() {
    for config in all_protocol_configs(500) {
        let first = run(&config, 1).unwrap();
        let second = run(&config, 2).unwrap();
        assert_ne!(
            first.records,
            second.records,
            "{} ignored the master seed",
            config.kind.id()
        );
    }
}

#[test]
fn trials_prefix_is_stable_under_extension() {
    // growing a run must not disturb the trials already simulated
    for (short, long) in all_protocol_configs(200).into_iter().zip(all_protocol_configs(400)) {
        let short_run = run(&short, 99).unwrap();
        let long_run = run(&long, 99).unwrap();
        assert_eq!(short_run.records[..], long_run.records[..200]);
    }
}

#[cfg(feature = "parallel")]
mod parallel {
    use super::*;
    use bellbias_core::protocols::run_parallel;

    #[test]
    fn worker_count_never_changes_the_ensemble() {
        for config in all_protocol_configs(2_000) {
            let serial = run(&config, 7).unwrap();
            for threads in [1usize, 2, 5] {
                let pool = rayon::ThreadPoolBuilder::new()
                    .num_threads(threads)
                    .build()
                    .unwrap();
                let parallel = pool.install(|| run_parallel(&config, 7)).unwrap();
                assert_eq!(
                    serial.records,
                    parallel.records,
                    "{} diverged at {} workers",
                    config.kind.id(),
                    threads
                );
            }
        }
    }
}
