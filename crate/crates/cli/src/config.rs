//! Run configuration: a versioned JSON schema, strict validation with
//! errors that name the offending key, and resolution into the core
//! crate's config types.
//!
//! A resolved run can always be echoed back out as a `RunConfig` with
//! every default filled in; re-running that echo reproduces the same
//! events byte for byte.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use serde::{Deserialize, Serialize};

use bellbias_core::gallery::{
    ClinicConfig, CoinFactoryConfig, DigitSource, SelectionMode, SurvivorshipConfig,
};
use bellbias_core::protocols::{Geometry, ProtocolConfig, ProtocolKind, SettingStrategy};
use bellbias_core::quantum::{BellLabel, MeasAngle};
use bellbias_core::stats::ChshConvention;

/// Only config schema this build reads.
pub const CONFIG_VERSION: u32 = 1;

/// Default trial count for protocol runs.
pub const DEFAULT_TRIALS: u64 = 1_000_000;

/// Which summary reports to compute.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReportId {
    Chsh,
    Fact,
    Selection,
    Screening,
    OracleCompare,
}

impl ReportId {
    pub fn token(self) -> &'static str {
        match self {
            ReportId::Chsh => "chsh",
            ReportId::Fact => "fact",
            ReportId::Selection => "selection",
            ReportId::Screening => "screening",
            ReportId::OracleCompare => "oracle-compare",
        }
    }
}

/// Top-level config document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub version: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
    /// Report selection; defaults to everything applicable to the job.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reports: Option<Vec<ReportId>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub protocol: Option<ProtocolSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gallery: Option<GallerySpec>,
}

/// Protocol job description. `kind` decides which of the optional
/// fields apply; inapplicable keys are rejected, not ignored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolSpec {
    /// One of `fixed_state`, `random_state`, `swap`, `classical_filter`,
    /// `hopper_sort`.
    pub kind: String,
    /// Bell label for `fixed_state` (`psi-`, `phi+`, `phi-`, `psi+`).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    /// Midpoint measurement placement for `swap` (`past`,
    /// `intermediate`, `future`).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub geometry: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trials: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub settings: Option<SettingsSpec>,
    /// Which CHSH term carries the minus sign (`minus_a1b2` by default).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub chsh_convention: Option<String>,
}

/// Measurement-setting schedule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SettingsSpec {
    /// `chsh_quadruple`, `single`, or `grid`.
    pub kind: String,
    /// Angle (radians) for `single`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    /// Angle lists for `grid`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a_grid: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b_grid: Option<Vec<f64>>,
    /// Row-major pair weights for `grid`; uniform when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
}

/// Gallery job description, same key discipline as [`ProtocolSpec`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GallerySpec {
    /// One of `survivorship`, `coin_factory`, `clinic`, `digit_parity`.
    pub kind: String,
    // survivorship
    #[serde(skip_serializing_if = "Option::is_none")]
    pub region_count: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lethal_regions: Option<Vec<u32>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hits_per_sortie: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sorties: Option<u64>,
    // coin_factory
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shifts: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coins_per_shift: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error_rate: Option<f64>,
    // clinic
    #[serde(skip_serializing_if = "Option::is_none")]
    pub population: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_disease_a: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_disease_b: Option<f64>,
    /// `preselect` or `postselect`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mode: Option<String>,
    // digit_parity
    #[serde(skip_serializing_if = "Option::is_none")]
    pub source_a: Option<SourceSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub source_b: Option<SourceSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
}

/// One digit stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceSpec {
    /// `pi`, `e`, `synthetic_uniform`, or `file`.
    pub kind: String,
    /// Stream seed for `synthetic_uniform`; derived from the master
    /// seed when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Digit file for `file`: one ASCII digit per byte, newlines
    /// permitted.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
}

/// Command-line overrides applied on top of the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub trials: Option<u64>,
    pub out_dir: Option<PathBuf>,
}

/// A fully resolved run: concrete core configs, concrete seed, and the
/// echo that reproduces it.
#[derive(Debug, Clone)]
pub struct ResolvedRun {
    pub master_seed: u64,
    /// The seed was invented here rather than supplied.
    pub seed_generated: bool,
    pub out_dir: PathBuf,
    pub reports: Vec<ReportId>,
    pub job: Job,
    /// Self-contained config echo; running it again reproduces the
    /// same events.
    pub echo: RunConfig,
}

#[derive(Debug, Clone)]
pub enum Job {
    Protocol {
        config: ProtocolConfig,
        convention: ChshConvention,
    },
    Gallery(GalleryJob),
}

#[derive(Debug, Clone)]
pub enum GalleryJob {
    Survivorship(SurvivorshipConfig),
    CoinFactory(CoinFactoryConfig),
    Clinic(ClinicConfig),
    DigitParity {
        source_a: DigitSource,
        source_b: DigitSource,
        n: usize,
    },
}

impl Job {
    pub fn id(&self) -> &'static str {
        match self {
            Job::Protocol { config, .. } => config.kind.id(),
            Job::Gallery(GalleryJob::Survivorship(_)) => "survivorship",
            Job::Gallery(GalleryJob::CoinFactory(_)) => "coin_factory",
            Job::Gallery(GalleryJob::Clinic(_)) => "clinic",
            Job::Gallery(GalleryJob::DigitParity { .. }) => "digit_parity",
        }
    }
}

pub fn load(path: &Path) -> Result<RunConfig> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read config {}", path.display()))?;
    let config: RunConfig = serde_json::from_str(&text)
        .with_context(|| format!("config {} is not valid", path.display()))?;
    Ok(config)
}

/// Invents a master seed when none was given; anything nonrepeating is
/// fine since the seed is always echoed.
pub fn generate_seed() -> u64 {
    use std::hash::{BuildHasher, Hasher, RandomState};
    let mut hasher = RandomState::new().build_hasher();
    hasher.write_u64(std::process::id().into());
    hasher.finish()
}

impl RunConfig {
    /// Validates and resolves into runnable core configs, applying
    /// command-line overrides. Digit `file` sources are read here.
    pub fn resolve(&self, overrides: &Overrides) -> Result<ResolvedRun> {
        if self.version != CONFIG_VERSION {
            bail!(
                "version: expected {CONFIG_VERSION}, got {} — this build only reads schema {CONFIG_VERSION}",
                self.version
            );
        }
        let (seed, seed_generated) = match overrides.seed.or(self.seed) {
            Some(s) => (s, false),
            None => (generate_seed(), true),
        };
        let out_dir = overrides
            .out_dir
            .clone()
            .or_else(|| self.out_dir.clone())
            .unwrap_or_else(|| PathBuf::from("."));

        let mut echo = self.clone();
        echo.seed = Some(seed);
        echo.out_dir = Some(out_dir.clone());

        let job = match (&self.protocol, &self.gallery) {
            (Some(p), None) => {
                let (job, resolved_spec) = resolve_protocol(p, overrides)?;
                echo.protocol = Some(resolved_spec);
                job
            }
            (None, Some(g)) => {
                let (job, resolved_spec) = resolve_gallery(g, seed, overrides)?;
                echo.gallery = Some(resolved_spec);
                Job::Gallery(job)
            }
            (Some(_), Some(_)) => bail!("protocol/gallery: exactly one must be present, got both"),
            (None, None) => bail!("protocol/gallery: exactly one must be present, got neither"),
        };

        let reports = match &self.reports {
            Some(list) => {
                let unique: BTreeSet<ReportId> = list.iter().copied().collect();
                for id in &unique {
                    check_report_applies(*id, &job)?;
                }
                unique.into_iter().collect()
            }
            None => default_reports(&job),
        };
        echo.reports = Some(reports.clone());

        Ok(ResolvedRun {
            master_seed: seed,
            seed_generated,
            out_dir,
            reports,
            job,
            echo,
        })
    }
}

fn parse_label(s: &str) -> Result<BellLabel> {
    BellLabel::parse(s)
        .ok_or_else(|| anyhow!("protocol.label: unknown Bell label {s:?} (expected psi-/phi+/phi-/psi+)"))
}

fn parse_geometry(s: &str) -> Result<Geometry> {
    Geometry::parse(s)
        .ok_or_else(|| anyhow!("protocol.geometry: unknown geometry {s:?} (expected past/intermediate/future)"))
}

fn resolve_settings(spec: Option<&SettingsSpec>) -> Result<(SettingStrategy, SettingsSpec)> {
    let Some(spec) = spec else {
        let strategy = SettingStrategy::chsh_quadruple();
        return Ok((
            strategy,
            SettingsSpec {
                kind: "chsh_quadruple".into(),
                a: None,
                b: None,
                a_grid: None,
                b_grid: None,
                weights: None,
            },
        ));
    };
    let reject = |field: &str, present: bool| -> Result<()> {
        if present {
            bail!(
                "protocol.settings.{field}: does not apply to settings kind {:?}",
                spec.kind
            );
        }
        Ok(())
    };
    match spec.kind.as_str() {
        "chsh_quadruple" => {
            reject("a", spec.a.is_some())?;
            reject("b", spec.b.is_some())?;
            reject("a_grid", spec.a_grid.is_some())?;
            reject("b_grid", spec.b_grid.is_some())?;
            reject("weights", spec.weights.is_some())?;
            Ok((SettingStrategy::chsh_quadruple(), spec.clone()))
        }
        "single" => {
            reject("a_grid", spec.a_grid.is_some())?;
            reject("b_grid", spec.b_grid.is_some())?;
            reject("weights", spec.weights.is_some())?;
            let a = spec.a.ok_or_else(|| anyhow!("protocol.settings.a: required for kind \"single\""))?;
            let b = spec.b.ok_or_else(|| anyhow!("protocol.settings.b: required for kind \"single\""))?;
            for (key, v) in [("a", a), ("b", b)] {
                if !v.is_finite() {
                    bail!("protocol.settings.{key}: angle must be finite, got {v}");
                }
            }
            Ok((
                SettingStrategy::single(MeasAngle::new(a), MeasAngle::new(b)),
                spec.clone(),
            ))
        }
        "grid" => {
            reject("a", spec.a.is_some())?;
            reject("b", spec.b.is_some())?;
            let a_grid = spec
                .a_grid
                .clone()
                .ok_or_else(|| anyhow!("protocol.settings.a_grid: required for kind \"grid\""))?;
            let b_grid = spec
                .b_grid
                .clone()
                .ok_or_else(|| anyhow!("protocol.settings.b_grid: required for kind \"grid\""))?;
            for (key, grid) in [("a_grid", &a_grid), ("b_grid", &b_grid)] {
                if let Some(v) = grid.iter().find(|v| !v.is_finite()) {
                    bail!("protocol.settings.{key}: angle must be finite, got {v}");
                }
            }
            let to_angles = |grid: &[f64]| grid.iter().map(|&v| MeasAngle::new(v)).collect::<Vec<_>>();
            let strategy = SettingStrategy::new(
                to_angles(&a_grid),
                to_angles(&b_grid),
                spec.weights.clone(),
            )
            .map_err(|e| anyhow!("protocol.settings: {e}"))?;
            Ok((strategy, spec.clone()))
        }
        other => bail!(
            "protocol.settings.kind: unknown kind {other:?} (expected chsh_quadruple/single/grid)"
        ),
    }
}

fn resolve_protocol(spec: &ProtocolSpec, overrides: &Overrides) -> Result<(Job, ProtocolSpec)> {
    let reject = |field: &str, present: bool| -> Result<()> {
        if present {
            bail!("protocol.{field}: does not apply to protocol kind {:?}", spec.kind);
        }
        Ok(())
    };
    let kind = match spec.kind.as_str() {
        "fixed_state" => {
            reject("geometry", spec.geometry.is_some())?;
            let label = spec
                .label
                .as_deref()
                .ok_or_else(|| anyhow!("protocol.label: required for fixed_state"))?;
            ProtocolKind::FixedState {
                label: parse_label(label)?,
            }
        }
        "random_state" => {
            reject("label", spec.label.is_some())?;
            reject("geometry", spec.geometry.is_some())?;
            ProtocolKind::RandomState
        }
        "swap" => {
            reject("label", spec.label.is_some())?;
            let geometry = spec
                .geometry
                .as_deref()
                .ok_or_else(|| anyhow!("protocol.geometry: required for swap"))?;
            ProtocolKind::Swap {
                geometry: parse_geometry(geometry)?,
            }
        }
        "classical_filter" => {
            reject("label", spec.label.is_some())?;
            reject("geometry", spec.geometry.is_some())?;
            ProtocolKind::ClassicalFilter
        }
        "hopper_sort" => {
            reject("label", spec.label.is_some())?;
            reject("geometry", spec.geometry.is_some())?;
            ProtocolKind::HopperSort
        }
        other => bail!(
            "protocol.kind: unknown kind {other:?} (expected fixed_state/random_state/swap/classical_filter/hopper_sort)"
        ),
    };
    let (strategy, settings_echo) = resolve_settings(spec.settings.as_ref())?;
    let trials = overrides.trials.or(spec.trials).unwrap_or(DEFAULT_TRIALS);
    let convention = match spec.chsh_convention.as_deref() {
        None => ChshConvention::default(),
        Some(s) => ChshConvention::parse(s).ok_or_else(|| {
            anyhow!("protocol.chsh_convention: unknown convention {s:?}")
        })?,
    };
    let config = ProtocolConfig::new(kind, strategy, trials)
        .map_err(|e| anyhow!("protocol: {e}"))?;
    let resolved_spec = ProtocolSpec {
        kind: spec.kind.clone(),
        label: spec.label.clone(),
        geometry: spec.geometry.clone(),
        trials: Some(trials),
        settings: Some(settings_echo),
        chsh_convention: Some(convention.token().into()),
    };
    Ok((Job::Protocol { config, convention }, resolved_spec))
}

fn resolve_source(
    spec: &SourceSpec,
    key: &str,
    default_seed: u64,
) -> Result<(DigitSource, SourceSpec)> {
    match spec.kind.as_str() {
        "pi" | "e" => {
            if spec.seed.is_some() {
                bail!("gallery.{key}.seed: does not apply to source kind {:?}", spec.kind);
            }
            if spec.path.is_some() {
                bail!("gallery.{key}.path: does not apply to source kind {:?}", spec.kind);
            }
            let source = if spec.kind == "pi" {
                DigitSource::Pi
            } else {
                DigitSource::E
            };
            Ok((source, spec.clone()))
        }
        "synthetic_uniform" => {
            if spec.path.is_some() {
                bail!("gallery.{key}.path: does not apply to source kind \"synthetic_uniform\"");
            }
            let seed = spec.seed.unwrap_or(default_seed);
            Ok((
                DigitSource::SyntheticUniform { seed },
                SourceSpec {
                    kind: spec.kind.clone(),
                    seed: Some(seed),
                    path: None,
                },
            ))
        }
        "file" => {
            if spec.seed.is_some() {
                bail!("gallery.{key}.seed: does not apply to source kind \"file\"");
            }
            let path = spec
                .path
                .as_ref()
                .ok_or_else(|| anyhow!("gallery.{key}.path: required for source kind \"file\""))?;
            let digits = read_digit_file(path)
                .with_context(|| format!("gallery.{key}.path: {}", path.display()))?;
            Ok((DigitSource::Digits(digits), spec.clone()))
        }
        other => bail!(
            "gallery.{key}.kind: unknown source kind {other:?} (expected pi/e/synthetic_uniform/file)"
        ),
    }
}

/// Digit file format: one ASCII digit per byte; newlines (LF/CRLF) may
/// break the stream into blocks and are ignored.
pub fn read_digit_file(path: &Path) -> Result<Vec<u8>> {
    let bytes = fs::read(path)?;
    let mut digits = Vec::with_capacity(bytes.len());
    for (i, &b) in bytes.iter().enumerate() {
        match b {
            b'0'..=b'9' => digits.push(b - b'0'),
            b'\n' | b'\r' => {}
            other => bail!("byte {i} is {other:#04x}, not an ASCII digit or newline"),
        }
    }
    Ok(digits)
}

fn resolve_gallery(
    spec: &GallerySpec,
    master_seed: u64,
    overrides: &Overrides,
) -> Result<(GalleryJob, GallerySpec)> {
    let reject = |field: &str, present: bool| -> Result<()> {
        if present {
            bail!("gallery.{field}: does not apply to gallery kind {:?}", spec.kind);
        }
        Ok(())
    };
    let reject_protocolish = |fields: &[(&str, bool)]| -> Result<()> {
        for (field, present) in fields {
            reject(field, *present)?;
        }
        Ok(())
    };
    match spec.kind.as_str() {
        "survivorship" => {
            reject_protocolish(&[
                ("shifts", spec.shifts.is_some()),
                ("coins_per_shift", spec.coins_per_shift.is_some()),
                ("error_rate", spec.error_rate.is_some()),
                ("population", spec.population.is_some()),
                ("p_disease_a", spec.p_disease_a.is_some()),
                ("p_disease_b", spec.p_disease_b.is_some()),
                ("mode", spec.mode.is_some()),
                ("source_a", spec.source_a.is_some()),
                ("source_b", spec.source_b.is_some()),
                ("n", spec.n.is_some()),
            ])?;
            let config = SurvivorshipConfig {
                region_count: spec.region_count.unwrap_or(10),
                lethal_regions: spec
                    .lethal_regions
                    .clone()
                    .unwrap_or_else(|| vec![0, 1, 2])
                    .into_iter()
                    .collect(),
                hits_per_sortie: spec.hits_per_sortie.unwrap_or(5),
                sorties: overrides.trials.or(spec.sorties).unwrap_or(100_000),
                seed: master_seed,
            };
            let echo = GallerySpec {
                region_count: Some(config.region_count),
                lethal_regions: Some(config.lethal_regions.iter().copied().collect()),
                hits_per_sortie: Some(config.hits_per_sortie),
                sorties: Some(config.sorties),
                ..GallerySpec::bare("survivorship")
            };
            Ok((GalleryJob::Survivorship(config), echo))
        }
        "coin_factory" => {
            reject_protocolish(&[
                ("region_count", spec.region_count.is_some()),
                ("lethal_regions", spec.lethal_regions.is_some()),
                ("hits_per_sortie", spec.hits_per_sortie.is_some()),
                ("sorties", spec.sorties.is_some()),
                ("population", spec.population.is_some()),
                ("p_disease_a", spec.p_disease_a.is_some()),
                ("p_disease_b", spec.p_disease_b.is_some()),
                ("mode", spec.mode.is_some()),
                ("source_a", spec.source_a.is_some()),
                ("source_b", spec.source_b.is_some()),
                ("n", spec.n.is_some()),
            ])?;
            let config = CoinFactoryConfig {
                shifts: overrides.trials.or(spec.shifts).unwrap_or(20_000),
                coins_per_shift: spec.coins_per_shift.unwrap_or(10),
                error_rate: spec.error_rate.unwrap_or(0.1),
                seed: master_seed,
            };
            let echo = GallerySpec {
                shifts: Some(config.shifts),
                coins_per_shift: Some(config.coins_per_shift),
                error_rate: Some(config.error_rate),
                ..GallerySpec::bare("coin_factory")
            };
            Ok((GalleryJob::CoinFactory(config), echo))
        }
        "clinic" => {
            reject_protocolish(&[
                ("region_count", spec.region_count.is_some()),
                ("lethal_regions", spec.lethal_regions.is_some()),
                ("hits_per_sortie", spec.hits_per_sortie.is_some()),
                ("sorties", spec.sorties.is_some()),
                ("shifts", spec.shifts.is_some()),
                ("coins_per_shift", spec.coins_per_shift.is_some()),
                ("error_rate", spec.error_rate.is_some()),
                ("source_a", spec.source_a.is_some()),
                ("source_b", spec.source_b.is_some()),
                ("n", spec.n.is_some()),
            ])?;
            let mode = match spec.mode.as_deref() {
                None => SelectionMode::Postselect,
                Some(s) => SelectionMode::parse(s).ok_or_else(|| {
                    anyhow!("gallery.mode: unknown mode {s:?} (expected preselect/postselect)")
                })?,
            };
            let config = ClinicConfig {
                population: overrides.trials.or(spec.population).unwrap_or(1_000_000),
                p_disease_a: spec.p_disease_a.unwrap_or(0.05),
                p_disease_b: spec.p_disease_b.unwrap_or(0.05),
                mode,
                seed: master_seed,
            };
            let echo = GallerySpec {
                population: Some(config.population),
                p_disease_a: Some(config.p_disease_a),
                p_disease_b: Some(config.p_disease_b),
                mode: Some(mode.token().into()),
                ..GallerySpec::bare("clinic")
            };
            Ok((GalleryJob::Clinic(config), echo))
        }
        "digit_parity" => {
            reject_protocolish(&[
                ("region_count", spec.region_count.is_some()),
                ("lethal_regions", spec.lethal_regions.is_some()),
                ("hits_per_sortie", spec.hits_per_sortie.is_some()),
                ("sorties", spec.sorties.is_some()),
                ("shifts", spec.shifts.is_some()),
                ("coins_per_shift", spec.coins_per_shift.is_some()),
                ("error_rate", spec.error_rate.is_some()),
                ("population", spec.population.is_some()),
                ("p_disease_a", spec.p_disease_a.is_some()),
                ("p_disease_b", spec.p_disease_b.is_some()),
                ("mode", spec.mode.is_some()),
            ])?;
            let default_a = SourceSpec {
                kind: "pi".into(),
                seed: None,
                path: None,
            };
            let default_b = SourceSpec {
                kind: "e".into(),
                seed: None,
                path: None,
            };
            // distinct default seeds so two synthetic sources in one run
            // do not mirror each other
            let (source_a, echo_a) = resolve_source(
                spec.source_a.as_ref().unwrap_or(&default_a),
                "source_a",
                master_seed,
            )?;
            let (source_b, echo_b) = resolve_source(
                spec.source_b.as_ref().unwrap_or(&default_b),
                "source_b",
                master_seed.wrapping_add(1),
            )?;
            let n = overrides.trials.map(|t| t as usize).or(spec.n).unwrap_or(2_000);
            let echo = GallerySpec {
                source_a: Some(echo_a),
                source_b: Some(echo_b),
                n: Some(n),
                ..GallerySpec::bare("digit_parity")
            };
            Ok((
                GalleryJob::DigitParity {
                    source_a,
                    source_b,
                    n,
                },
                echo,
            ))
        }
        other => bail!(
            "gallery.kind: unknown kind {other:?} (expected survivorship/coin_factory/clinic/digit_parity)"
        ),
    }
}

impl GallerySpec {
    /// A spec with only the kind set; every parameter at its default.
    pub fn bare(kind: &str) -> GallerySpec {
        GallerySpec {
            kind: kind.into(),
            region_count: None,
            lethal_regions: None,
            hits_per_sortie: None,
            sorties: None,
            shifts: None,
            coins_per_shift: None,
            error_rate: None,
            population: None,
            p_disease_a: None,
            p_disease_b: None,
            mode: None,
            source_a: None,
            source_b: None,
            n: None,
        }
    }
}

fn check_report_applies(id: ReportId, job: &Job) -> Result<()> {
    let applicable = default_reports(job);
    if applicable.contains(&id) {
        return Ok(());
    }
    match (id, job) {
        (ReportId::Chsh, Job::Protocol { .. }) => bail!(
            "reports: \"chsh\" needs a 2x2 settings grid such as chsh_quadruple"
        ),
        _ => bail!("reports: {:?} does not apply to job {:?}", id.token(), job.id()),
    }
}

/// Everything computable for the job; used when `reports` is absent.
pub fn default_reports(job: &Job) -> Vec<ReportId> {
    match job {
        Job::Protocol { config, .. } => {
            let mut ids = Vec::new();
            if config.strategy.a_count() == 2 && config.strategy.b_count() == 2 {
                ids.push(ReportId::Chsh);
            }
            ids.push(ReportId::Fact);
            if !matches!(config.kind, ProtocolKind::FixedState { .. }) {
                ids.push(ReportId::Selection);
            }
            ids.push(ReportId::Screening);
            ids.push(ReportId::OracleCompare);
            ids
        }
        // gallery summaries are always emitted; the generic report
        // machinery does not apply
        Job::Gallery(_) => Vec::new(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal(protocol: serde_json::Value) -> String {
        serde_json::json!({
            "version": 1,
            "seed": 7,
            "protocol": protocol,
        })
        .to_string()
    }

    fn resolve(text: &str) -> Result<ResolvedRun> {
        let config: RunConfig = serde_json::from_str(text)?;
        config.resolve(&Overrides::default())
    }

    #[test]
    fn minimal_protocol_config_resolves_with_defaults() {
        let run = resolve(&minimal(serde_json::json!({"kind": "random_state"}))).unwrap();
        assert_eq!(run.master_seed, 7);
        assert!(!run.seed_generated);
        let Job::Protocol { config, convention } = &run.job else {
            panic!("expected protocol job");
        };
        assert_eq!(config.trials, DEFAULT_TRIALS);
        assert_eq!(config.strategy.pair_count(), 4);
        assert_eq!(*convention, ChshConvention::MinusA1B2);
        assert!(run.reports.contains(&ReportId::Chsh));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = r#"{"version": 1, "protocol": {"kind": "random_state"}, "extra": 1}"#;
        let err = serde_json::from_str::<RunConfig>(text).unwrap_err();
        assert!(err.to_string().contains("extra"), "{err}");
        let text = r#"{"version": 1, "protocol": {"kind": "random_state", "bogus": 2}}"#;
        let err = serde_json::from_str::<RunConfig>(text).unwrap_err();
        assert!(err.to_string().contains("bogus"), "{err}");
    }

    #[test]
    fn inapplicable_keys_are_rejected_with_their_names() {
        let err = resolve(&minimal(
            serde_json::json!({"kind": "random_state", "label": "psi-"}),
        ))
        .unwrap_err();
        assert!(err.to_string().contains("protocol.label"), "{err}");
        let err = resolve(&minimal(
            serde_json::json!({"kind": "fixed_state", "label": "psi-", "geometry": "past"}),
        ))
        .unwrap_err();
        assert!(err.to_string().contains("protocol.geometry"), "{err}");
    }

    #[test]
    fn exactly_one_job_is_required() {
        let err = resolve(r#"{"version": 1}"#).unwrap_err();
        assert!(err.to_string().contains("exactly one"), "{err}");
        let both = serde_json::json!({
            "version": 1,
            "protocol": {"kind": "random_state"},
            "gallery": {"kind": "clinic"},
        });
        let err = resolve(&both.to_string()).unwrap_err();
        assert!(err.to_string().contains("exactly one"), "{err}");
    }

    #[test]
    fn wrong_version_is_refused() {
        let err = resolve(r#"{"version": 2, "protocol": {"kind": "random_state"}}"#).unwrap_err();
        assert!(err.to_string().contains("version"), "{err}");
    }

    #[test]
    fn missing_seed_is_generated_and_echoed() {
        let text = r#"{"version": 1, "protocol": {"kind": "random_state"}}"#;
        let run = resolve(text).unwrap();
        assert!(run.seed_generated);
        assert_eq!(run.echo.seed, Some(run.master_seed));
    }

    #[test]
    fn echo_resolves_to_the_same_job() {
        let text = minimal(serde_json::json!({
            "kind": "swap",
            "geometry": "intermediate",
            "trials": 500,
            "settings": {"kind": "single", "a": 0.1, "b": 0.2},
        }));
        let run = resolve(&text).unwrap();
        let echo_text = serde_json::to_string(&run.echo).unwrap();
        let rerun = resolve(&echo_text).unwrap();
        assert_eq!(rerun.master_seed, run.master_seed);
        match (&run.job, &rerun.job) {
            (Job::Protocol { config: a, .. }, Job::Protocol { config: b, .. }) => {
                assert_eq!(a, b);
            }
            _ => panic!("job kinds diverged"),
        }
    }

    #[test]
    fn overrides_beat_the_file() {
        let text = minimal(serde_json::json!({"kind": "random_state", "trials": 10}));
        let run = resolve(&text).unwrap();
        let Job::Protocol { config, .. } = &run.job else {
            panic!()
        };
        assert_eq!(config.trials, 10);
        let config_doc: RunConfig = serde_json::from_str(&text).unwrap();
        let run = config_doc
            .resolve(&Overrides {
                seed: Some(99),
                trials: Some(25),
                out_dir: Some(PathBuf::from("elsewhere")),
            })
            .unwrap();
        assert_eq!(run.master_seed, 99);
        assert_eq!(run.out_dir, PathBuf::from("elsewhere"));
        let Job::Protocol { config, .. } = &run.job else {
            panic!()
        };
        assert_eq!(config.trials, 25);
    }

    #[test]
    fn chsh_report_requires_the_quadruple() {
        let config = serde_json::json!({
            "version": 1,
            "seed": 1,
            "reports": ["chsh"],
            "protocol": {
                "kind": "fixed_state",
                "label": "psi-",
                "settings": {"kind": "single", "a": 0.0, "b": 0.0},
            },
        });
        let err = resolve(&config.to_string()).unwrap_err();
        assert!(err.to_string().contains("chsh_quadruple"), "{err}");
    }

    #[test]
    fn gallery_defaults_fill_in() {
        let config = serde_json::json!({
            "version": 1,
            "seed": 3,
            "gallery": {"kind": "digit_parity"},
        });
        let run = resolve(&config.to_string()).unwrap();
        let Job::Gallery(GalleryJob::DigitParity { source_a, source_b, n }) = &run.job else {
            panic!("expected digit parity job");
        };
        assert_eq!(*source_a, DigitSource::Pi);
        assert_eq!(*source_b, DigitSource::E);
        assert_eq!(*n, 2_000);
        // synthetic sources without explicit seeds get distinct ones
        let config = serde_json::json!({
            "version": 1,
            "seed": 3,
            "gallery": {
                "kind": "digit_parity",
                "source_a": {"kind": "synthetic_uniform"},
                "source_b": {"kind": "synthetic_uniform"},
            },
        });
        let run = resolve(&config.to_string()).unwrap();
        let Job::Gallery(GalleryJob::DigitParity { source_a, source_b, .. }) = &run.job else {
            panic!()
        };
        assert_ne!(source_a, source_b);
    }

    #[test]
    fn digit_files_are_read_and_checked() {
        let dir = std::env::temp_dir().join(format!("bellbias-cfg-test-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let good = dir.join("good.txt");
        fs::write(&good, b"31415\n92653\n").unwrap();
        assert_eq!(read_digit_file(&good).unwrap(), vec![3, 1, 4, 1, 5, 9, 2, 6, 5, 3]);
        let bad = dir.join("bad.txt");
        fs::write(&bad, b"12x3").unwrap();
        let err = read_digit_file(&bad).unwrap_err();
        assert!(err.to_string().contains("byte 2"), "{err}");
        fs::remove_dir_all(&dir).unwrap();
    }
}
