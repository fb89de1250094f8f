//! Classical selection-bias generators.
//!
//! Four self-contained models, each deterministic given its seed, each
//! producing both raw event records and a summary report:
//!
//! * [`survivorship`] — aircraft sorties take uniform hits; only sorties
//!   with no hit in a lethal region come home, so the surviving sample's
//!   hit map has holes exactly where the danger is.
//! * [`coin_factory`] — a factory alternates between minting ordinary
//!   coins and double-sided ones; two observers looking at opposite
//!   faces see correlations that appear and disappear depending on what
//!   is held fixed.
//! * [`clinic`] — two diseases share a necessary precondition; the full
//!   population shows an association that vanishes once the study is
//!   restricted to carriers, whether the restriction happens at intake
//!   or afterwards.
//! * [`digit_parity`] — parities of paired digit streams (exact π and e
//!   digits, seeded uniform digits, or caller-provided digits) become
//!   anticorrelated once attention is restricted to positions where the
//!   digits are not both odd.
//!
//! None of these involve any quantum machinery; they exist so the same
//! estimators that run on the entangled-pair protocols can be pointed at
//! transparently classical data.

mod digits;

use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use crate::math;
use crate::quantum::Outcome;
use crate::rng::TrialRng;
use crate::stats::{self, ChiSquare, CorrEstimate, ScreenReport, StatsError};

/// Upper bound on π/e digit requests; the spigot's cost grows
/// quadratically, so this keeps worst-case runs at desk scale.
pub const COMPUTED_DIGIT_CAP: usize = 100_000;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GalleryError {
    #[error("region count must be at least 1")]
    NoRegions,
    #[error("lethal region {region} is outside 0..{region_count}")]
    LethalRegionOutOfRange { region: u32, region_count: u32 },
    #[error("every region is lethal; no sortie could ever return")]
    AllRegionsLethal,
    #[error("hits per sortie must be at least 1")]
    NoHits,
    #[error("count must be at least 1")]
    EmptySample,
    #[error("error rate {0} is outside [0, 0.5)")]
    BadErrorRate(f64),
    #[error("run is too large to index")]
    TooManyRecords,
    #[error("probability {0} is outside [0, 1]")]
    BadProbability(f64),
    #[error("digit request {requested} exceeds the computed-stream cap {cap}")]
    DigitCapExceeded { requested: usize, cap: usize },
    #[error("digit stream has {available} digits, need {requested}")]
    StreamTooShort { available: usize, requested: usize },
    #[error("byte {0} is not a decimal digit")]
    BadDigit(u8),
}

// ---------------------------------------------------------------------
// survivorship

/// Sortie model: `hits_per_sortie` independent uniform hits over
/// `region_count` regions; the aircraft returns iff no hit landed in a
/// lethal region.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SurvivorshipConfig {
    pub region_count: u32,
    pub lethal_regions: BTreeSet<u32>,
    pub hits_per_sortie: u32,
    pub sorties: u64,
    pub seed: u64,
}

impl SurvivorshipConfig {
    fn validate(&self) -> Result<(), GalleryError> {
        if self.region_count == 0 {
            return Err(GalleryError::NoRegions);
        }
        if let Some(&region) = self.lethal_regions.iter().find(|&&r| r >= self.region_count) {
            return Err(GalleryError::LethalRegionOutOfRange {
                region,
                region_count: self.region_count,
            });
        }
        if self.lethal_regions.len() as u32 == self.region_count {
            return Err(GalleryError::AllRegionsLethal);
        }
        if self.hits_per_sortie == 0 {
            return Err(GalleryError::NoHits);
        }
        if self.sorties == 0 {
            return Err(GalleryError::EmptySample);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SortieRecord {
    pub sortie: u64,
    pub hits: Vec<u32>,
    pub survived: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SurvivorshipReport {
    pub records: Vec<SortieRecord>,
    pub region_count: u32,
    /// Hit counts per region over every sortie flown.
    pub all_hits: Vec<u64>,
    /// Hit counts per region over returning sorties only.
    pub survivor_hits: Vec<u64>,
    pub survivor_count: u64,
    pub sortie_count: u64,
    pub survival_rate: f64,
    /// ((safe regions)/(all regions))^hits: chance that no hit lands in
    /// a lethal region.
    pub analytic_survival_rate: f64,
    /// Per-region survivor hit frequency over full-ensemble hit
    /// frequency; `None` where the full ensemble saw no hits at all.
    pub hit_ratio: Vec<Option<f64>>,
}

/// Flies the sorties and tallies where the hits landed, both over the
/// whole ensemble and over the survivors. Sortie `i` draws from the
/// random stream `(seed, i)`.
pub fn survivorship(config: &SurvivorshipConfig) -> Result<SurvivorshipReport, GalleryError> {
    config.validate()?;
    let regions = config.region_count as usize;
    let mut records = Vec::with_capacity(config.sorties as usize);
    let mut all_hits = alloc::vec![0u64; regions];
    let mut survivor_hits = alloc::vec![0u64; regions];
    let mut survivor_count = 0u64;
    for sortie in 0..config.sorties {
        let mut rng = TrialRng::new(config.seed, sortie);
        let hits: Vec<u32> = (0..config.hits_per_sortie)
            .map(|_| rng.below(u64::from(config.region_count)) as u32)
            .collect();
        let survived = hits.iter().all(|h| !config.lethal_regions.contains(h));
        for &h in &hits {
            all_hits[h as usize] += 1;
            if survived {
                survivor_hits[h as usize] += 1;
            }
        }
        if survived {
            survivor_count += 1;
        }
        records.push(SortieRecord {
            sortie,
            hits,
            survived,
        });
    }
    let total_all: u64 = all_hits.iter().sum();
    let total_surv: u64 = survivor_hits.iter().sum();
    let hit_ratio = all_hits
        .iter()
        .zip(&survivor_hits)
        .map(|(&a, &s)| {
            if a == 0 || total_surv == 0 {
                None
            } else {
                Some((s as f64 / total_surv as f64) / (a as f64 / total_all as f64))
            }
        })
        .collect();
    let safe = f64::from(config.region_count - config.lethal_regions.len() as u32);
    let analytic_survival_rate =
        math::powi(safe / f64::from(config.region_count), config.hits_per_sortie as i32);
    Ok(SurvivorshipReport {
        records,
        region_count: config.region_count,
        all_hits,
        survivor_hits,
        survivor_count,
        sortie_count: config.sorties,
        survival_rate: survivor_count as f64 / config.sorties as f64,
        analytic_survival_rate,
        hit_ratio,
    })
}

// ---------------------------------------------------------------------
// coin factory

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Face {
    Heads,
    Tails,
}

impl Face {
    pub fn token(self) -> &'static str {
        match self {
            Face::Heads => "H",
            Face::Tails => "T",
        }
    }

    fn index(self) -> u8 {
        match self {
            Face::Heads => 0,
            Face::Tails => 1,
        }
    }

    fn outcome(self) -> Outcome {
        match self {
            Face::Heads => Outcome::Plus,
            Face::Tails => Outcome::Minus,
        }
    }

    fn flipped(self) -> Face {
        match self {
            Face::Heads => Face::Tails,
            Face::Tails => Face::Heads,
        }
    }
}

/// What the factory is minting during a shift.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShiftSetting {
    /// Ordinary coins: heads one side, tails the other, orientation
    /// random — opposite-side observers are anticorrelated.
    Normal,
    /// Two-headed or two-tailed coins with equal probability — the
    /// observers are correlated.
    DoubleSided,
}

impl ShiftSetting {
    pub const BOTH: [ShiftSetting; 2] = [ShiftSetting::Normal, ShiftSetting::DoubleSided];

    pub fn index(self) -> usize {
        match self {
            ShiftSetting::Normal => 0,
            ShiftSetting::DoubleSided => 1,
        }
    }

    pub fn token(self) -> &'static str {
        match self {
            ShiftSetting::Normal => "normal",
            ShiftSetting::DoubleSided => "double_sided",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoinFactoryConfig {
    pub shifts: u64,
    pub coins_per_shift: u64,
    /// Probability that an observer misreads the face in front of them;
    /// both misreadings are independent.
    pub error_rate: f64,
    pub seed: u64,
}

impl CoinFactoryConfig {
    fn validate(&self) -> Result<(), GalleryError> {
        if self.shifts == 0 || self.coins_per_shift == 0 {
            return Err(GalleryError::EmptySample);
        }
        if !(self.error_rate >= 0.0 && self.error_rate < 0.5) {
            return Err(GalleryError::BadErrorRate(self.error_rate));
        }
        // stream ids are 2·coin and 2·shift+1, so the doubled total must fit
        self.shifts
            .checked_mul(self.coins_per_shift)
            .and_then(|n| n.checked_mul(2))
            .ok_or(GalleryError::TooManyRecords)?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CoinRecord {
    pub shift: u64,
    pub coin: u64,
    pub setting: ShiftSetting,
    pub alice_face: Face,
    pub bob_face: Face,
    pub alice_sees: Face,
    pub bob_sees: Face,
}

impl CoinRecord {
    /// The coin's true face pair, encoded 0..4 — the candidate common
    /// cause for screening-off checks.
    pub fn face_code(&self) -> u8 {
        self.alice_face.index() * 2 + self.bob_face.index()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoinFactoryReport {
    pub records: Vec<CoinRecord>,
    /// Correlation of the two observers' readings over all shifts. Coins
    /// in one shift share the setting draw, so the stderr here is
    /// cluster-robust by shift rather than the iid formula.
    pub overall: CorrEstimate,
    /// Per-setting correlations, indexed by [`ShiftSetting::index`];
    /// `None` if the setting never came up.
    pub per_setting: [Option<CorrEstimate>; 2],
    /// ∓(1−2ε)²: the per-setting correlations the flip model implies.
    pub analytic_per_setting: [f64; 2],
    /// Readings conditioned on the true face pair, per setting; in every
    /// stratum the residual correlation is pure observation noise.
    pub screening: [Option<ScreenReport>; 2],
}

/// Runs the factory. Shift `s` draws its setting from stream `2s+1`;
/// coin `c` of shift `s` draws faces and misreadings from stream
/// `2(s·coins_per_shift + c)` — disjoint by parity, so records depend
/// only on `(seed, shift, coin)`.
pub fn coin_factory(config: &CoinFactoryConfig) -> Result<CoinFactoryReport, GalleryError> {
    config.validate()?;
    let total = config.shifts * config.coins_per_shift;
    let mut records = Vec::with_capacity(total as usize);
    for shift in 0..config.shifts {
        let setting = if TrialRng::new(config.seed, shift * 2 + 1).bit() {
            ShiftSetting::DoubleSided
        } else {
            ShiftSetting::Normal
        };
        for coin in 0..config.coins_per_shift {
            let global = shift * config.coins_per_shift + coin;
            let mut rng = TrialRng::new(config.seed, global * 2);
            let first = if rng.bit() { Face::Heads } else { Face::Tails };
            let (alice_face, bob_face) = match setting {
                ShiftSetting::Normal => (first, first.flipped()),
                ShiftSetting::DoubleSided => (first, first),
            };
            let alice_sees = if rng.uniform() < config.error_rate {
                alice_face.flipped()
            } else {
                alice_face
            };
            let bob_sees = if rng.uniform() < config.error_rate {
                bob_face.flipped()
            } else {
                bob_face
            };
            records.push(CoinRecord {
                shift,
                coin,
                setting,
                alice_face,
                bob_face,
                alice_sees,
                bob_sees,
            });
        }
    }
    let overall = clustered_corr(&records, config.shifts, config.coins_per_shift);
    let q = 1.0 - 2.0 * config.error_rate;
    let mut per_setting = [None, None];
    let mut screening = [None, None];
    for setting in ShiftSetting::BOTH {
        let i = setting.index();
        per_setting[i] = stats::corr_of_pairs(
            records
                .iter()
                .filter(|r| r.setting == setting)
                .map(|r| (r.alice_sees.outcome(), r.bob_sees.outcome())),
        );
        let triples: Vec<_> = records
            .iter()
            .filter(|r| r.setting == setting)
            .map(|r| (r.face_code(), r.alice_sees.outcome(), r.bob_sees.outcome()))
            .collect();
        if !triples.is_empty() {
            screening[i] = Some(stats::screening_off_triples(triples));
        }
    }
    Ok(CoinFactoryReport {
        records,
        overall,
        per_setting,
        analytic_per_setting: [-(q * q), q * q],
        screening,
    })
}

/// Mean of ±1 reading products with a by-shift cluster-robust stderr.
fn clustered_corr(records: &[CoinRecord], shifts: u64, coins_per_shift: u64) -> CorrEstimate {
    let n = records.len() as f64;
    let product = |r: &CoinRecord| -> f64 {
        f64::from(r.alice_sees.outcome().value()) * f64::from(r.bob_sees.outcome().value())
    };
    let value = records.iter().map(product).sum::<f64>() / n;
    let mut ssq = 0.0;
    for shift in 0..shifts {
        let lo = (shift * coins_per_shift) as usize;
        let hi = lo + coins_per_shift as usize;
        let resid: f64 = records[lo..hi].iter().map(|r| product(r) - value).sum();
        ssq += resid * resid;
    }
    CorrEstimate {
        value,
        stderr: math::sqrt(ssq) / n,
        n: records.len() as u64,
    }
}

// ---------------------------------------------------------------------
// clinic

/// When the carrier restriction is applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SelectionMode {
    /// Only carriers are admitted at the door.
    Preselect,
    /// Everyone is admitted, the analysis restricts afterwards.
    Postselect,
}

impl SelectionMode {
    pub fn token(self) -> &'static str {
        match self {
            SelectionMode::Preselect => "preselect",
            SelectionMode::Postselect => "postselect",
        }
    }

    pub fn parse(s: &str) -> Option<SelectionMode> {
        match s {
            "preselect" => Some(SelectionMode::Preselect),
            "postselect" => Some(SelectionMode::Postselect),
            _ => None,
        }
    }
}

/// Two diseases that both require a carried trait (a fair-coin draw per
/// candidate) and are otherwise independent: the trait is a common
/// cause, so the diseases associate in the full population and
/// decouple among carriers.
#[derive(Debug, Clone, PartialEq)]
pub struct ClinicConfig {
    pub population: u64,
    /// P(disease A | carrier); non-carriers never develop either.
    pub p_disease_a: f64,
    /// P(disease B | carrier).
    pub p_disease_b: f64,
    pub mode: SelectionMode,
    pub seed: u64,
}

impl ClinicConfig {
    fn validate(&self) -> Result<(), GalleryError> {
        if self.population == 0 {
            return Err(GalleryError::EmptySample);
        }
        self.population
            .checked_mul(2)
            .ok_or(GalleryError::TooManyRecords)?;
        for p in [self.p_disease_a, self.p_disease_b] {
            if !(0.0..=1.0).contains(&p) {
                return Err(GalleryError::BadProbability(p));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PatientRecord {
    pub candidate: u64,
    pub carrier: bool,
    pub disease_a: bool,
    pub disease_b: bool,
    pub admitted: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClinicReport {
    pub mode: SelectionMode,
    pub records: Vec<PatientRecord>,
    /// Disease A × disease B counts over everyone screened.
    pub full_counts: [[u64; 2]; 2],
    /// The same table restricted to carriers.
    pub restricted_counts: [[u64; 2]; 2],
    pub carriers: u64,
    pub full_phi: Option<CorrEstimate>,
    pub restricted_phi: Option<CorrEstimate>,
    pub full_odds_ratio: Option<f64>,
    pub restricted_odds_ratio: Option<f64>,
    /// No carrier was ever sampled; the restricted table is empty.
    pub degenerate: bool,
}

/// Screens `population` candidates and contrasts the full-population
/// disease association with the carrier-restricted one.
///
/// Candidate `i` draws from stream `2i` when postselecting and `2i+1`
/// when preselecting: the two modes sample disjoint randomness on
/// purpose, so comparing their restricted tables is a genuine
/// two-sample check rather than a byte-for-byte identity.
pub fn clinic(config: &ClinicConfig) -> Result<ClinicReport, GalleryError> {
    config.validate()?;
    let mut records = Vec::with_capacity(config.population as usize);
    let mut full = [[0u64; 2]; 2];
    let mut restricted = [[0u64; 2]; 2];
    let mut carriers = 0u64;
    for candidate in 0..config.population {
        let stream = match config.mode {
            SelectionMode::Postselect => candidate * 2,
            SelectionMode::Preselect => candidate * 2 + 1,
        };
        let mut rng = TrialRng::new(config.seed, stream);
        let carrier = rng.bit();
        // draw both uniforms regardless of carrier status so every
        // candidate consumes the same amount of stream
        let u_a = rng.uniform();
        let u_b = rng.uniform();
        let disease_a = carrier && u_a < config.p_disease_a;
        let disease_b = carrier && u_b < config.p_disease_b;
        let admitted = match config.mode {
            SelectionMode::Postselect => true,
            SelectionMode::Preselect => carrier,
        };
        full[usize::from(disease_a)][usize::from(disease_b)] += 1;
        if carrier {
            carriers += 1;
            restricted[usize::from(disease_a)][usize::from(disease_b)] += 1;
        }
        records.push(PatientRecord {
            candidate,
            carrier,
            disease_a,
            disease_b,
            admitted,
        });
    }
    Ok(ClinicReport {
        mode: config.mode,
        records,
        full_counts: full,
        restricted_counts: restricted,
        carriers,
        full_phi: stats::phi(full).ok(),
        restricted_phi: stats::phi(restricted).ok(),
        full_odds_ratio: stats::odds_ratio(full),
        restricted_odds_ratio: stats::odds_ratio(restricted),
        degenerate: carriers == 0,
    })
}

/// Homogeneity test between two runs' restricted tables — the check
/// that admitting carriers at the door and restricting afterwards
/// produce the same distribution.
pub fn clinic_mode_homogeneity(
    first: &ClinicReport,
    second: &ClinicReport,
) -> Result<ChiSquare, StatsError> {
    let flatten = |r: &ClinicReport| -> Vec<u64> {
        r.restricted_counts.iter().flatten().copied().collect()
    };
    stats::chi_square_homogeneity(&[flatten(first), flatten(second)])
}

// ---------------------------------------------------------------------
// digit parity

/// Where a digit stream comes from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DigitSource {
    /// Exact fractional digits of π (spigot).
    Pi,
    /// Exact fractional digits of e (factorial series).
    E,
    /// Seeded uniform digits 0..9.
    SyntheticUniform { seed: u64 },
    /// Caller-provided digits, e.g. read from a file.
    Digits(Vec<u8>),
}

impl DigitSource {
    pub fn id(&self) -> &'static str {
        match self {
            DigitSource::Pi => "pi",
            DigitSource::E => "e",
            DigitSource::SyntheticUniform { .. } => "synthetic_uniform",
            DigitSource::Digits(_) => "digits",
        }
    }
}

/// First `n` digits of the source. π and e yield fractional digits only
/// (the integer parts 3 and 2 are dropped, so both streams read as
/// digit sequences of a number in (0,1)); computed streams are capped
/// at [`COMPUTED_DIGIT_CAP`].
pub fn generate_digits(source: &DigitSource, n: usize) -> Result<Vec<u8>, GalleryError> {
    match source {
        DigitSource::Pi | DigitSource::E => {
            if n > COMPUTED_DIGIT_CAP {
                return Err(GalleryError::DigitCapExceeded {
                    requested: n,
                    cap: COMPUTED_DIGIT_CAP,
                });
            }
            Ok(match source {
                DigitSource::Pi => digits::pi_fractional(n),
                _ => digits::e_fractional(n),
            })
        }
        DigitSource::SyntheticUniform { seed } => {
            let mut rng = TrialRng::new(*seed, 0);
            Ok((0..n).map(|_| rng.below(10) as u8).collect())
        }
        DigitSource::Digits(v) => {
            if v.len() < n {
                return Err(GalleryError::StreamTooShort {
                    available: v.len(),
                    requested: n,
                });
            }
            if let Some(&bad) = v[..n].iter().find(|&&d| d > 9) {
                return Err(GalleryError::BadDigit(bad));
            }
            Ok(v[..n].to_vec())
        }
    }
}

/// Within-S phi implied by uniform digit streams: conditioned on "not
/// both odd", the three remaining parity cells are equally likely.
pub const UNIFORM_WITHIN_S_PHI: f64 = -0.5;

#[derive(Debug, Clone, PartialEq)]
pub struct DigitParityReport {
    pub n: usize,
    pub source_a: &'static str,
    pub source_b: &'static str,
    pub digits_a: Vec<u8>,
    pub digits_b: Vec<u8>,
    /// Parity counts indexed `[a is odd][b is odd]`.
    pub cells: [[u64; 2]; 2],
    /// The same counts over S = positions where not both digits are
    /// odd; the `[1][1]` cell is structurally zero.
    pub within_s_cells: [[u64; 2]; 2],
    /// Positions excluded from S (both digits odd).
    pub excluded: u64,
    pub within_s_n: u64,
    pub full_phi: Option<CorrEstimate>,
    pub within_s_phi: Option<CorrEstimate>,
}

/// Pairs up the first `n` digits of two streams and tabulates parities,
/// both overall and within the set S of positions where the digits are
/// not both odd.
pub fn digit_parity(
    source_a: &DigitSource,
    source_b: &DigitSource,
    n: usize,
) -> Result<DigitParityReport, GalleryError> {
    if n == 0 {
        return Err(GalleryError::EmptySample);
    }
    let digits_a = generate_digits(source_a, n)?;
    let digits_b = generate_digits(source_b, n)?;
    let mut cells = [[0u64; 2]; 2];
    let mut within_s_cells = [[0u64; 2]; 2];
    for (&da, &db) in digits_a.iter().zip(&digits_b) {
        let a_odd = usize::from(da % 2 == 1);
        let b_odd = usize::from(db % 2 == 1);
        cells[a_odd][b_odd] += 1;
        if !(a_odd == 1 && b_odd == 1) {
            within_s_cells[a_odd][b_odd] += 1;
        }
    }
    let excluded = cells[1][1];
    Ok(DigitParityReport {
        n,
        source_a: source_a.id(),
        source_b: source_b.id(),
        digits_a,
        digits_b,
        cells,
        within_s_cells,
        excluded,
        within_s_n: n as u64 - excluded,
        full_phi: stats::phi(cells).ok(),
        within_s_phi: stats::phi(within_s_cells).ok(),
    })
}
