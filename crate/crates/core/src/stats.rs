//! Statistical verification of the security and privacy constraints.
//!
//! The constraints themselves are information-theoretic equalities of
//! distributions; at desk scale we verify them as fixed-seed chi-square
//! tests with a conservative threshold, Bonferroni-corrected across the
//! per-server subtests, plus exact structural checks on every sampled plan.
//! Each test ships a negative control (mask disabled, permutations
//! disabled) that must fail decisively.

use statrs::distribution::{ChiSquared, ContinuousCDF};
use thiserror::Error;

use crate::matrix::FMatrix;
use crate::plan::{build_plan, identity_permutations, sample_permutations, validate_plan, QueryPlan};
use crate::scheme::{encode_shares, sample_mask, MaskMatrix, ParamError, SchemeError};
use crate::seeding::{stream_rng, trial_seed, Stream};
use crate::{field::PrimeField, scheme::validate_params, scheme::SchemeParams};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum StatError {
    #[error("{test} needs at least {required} trials for {cells} cells, got {got}")]
    InsufficientTrials {
        test: &'static str,
        required: u64,
        got: u64,
        cells: u64,
    },
    #[error(transparent)]
    Param(#[from] ParamError),
    #[error(transparent)]
    Scheme(#[from] SchemeError),
}

impl From<crate::field::FieldError> for StatError {
    fn from(e: crate::field::FieldError) -> Self {
        StatError::Param(ParamError::Field(e))
    }
}

/// One chi-square subtest (a single server or histogram comparison).
#[derive(Debug, Clone, PartialEq)]
pub struct SubTest {
    pub label: String,
    pub statistic: f64,
    pub degrees_of_freedom: u64,
    pub p_value: f64,
}

/// Outcome of a statistical harness run. `passed` means every subtest's
/// p-value stayed above the (already corrected) threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct StatTestReport {
    pub name: String,
    pub statistic: f64,
    pub degrees_of_freedom: u64,
    pub p_value: f64,
    pub trials: u64,
    pub threshold: f64,
    pub passed: bool,
    pub subtests: Vec<SubTest>,
}

impl StatTestReport {
    fn from_subtests(name: String, trials: u64, threshold: f64, subtests: Vec<SubTest>) -> Self {
        let worst = subtests
            .iter()
            .min_by(|a, b| a.p_value.total_cmp(&b.p_value))
            .cloned()
            .unwrap_or(SubTest {
                label: "vacuous".into(),
                statistic: 0.0,
                degrees_of_freedom: 0,
                p_value: 1.0,
            });
        let passed = subtests.iter().all(|s| s.p_value > threshold);
        StatTestReport {
            name,
            statistic: worst.statistic,
            degrees_of_freedom: worst.degrees_of_freedom,
            p_value: worst.p_value,
            trials,
            threshold,
            passed,
            subtests,
        }
    }
}

/// Upper-tail p-value of a chi-square statistic.
pub fn chi_square_p_value(statistic: f64, degrees_of_freedom: u64) -> f64 {
    if degrees_of_freedom == 0 {
        return 1.0;
    }
    let dist = ChiSquared::new(degrees_of_freedom as f64).expect("positive df");
    1.0 - dist.cdf(statistic)
}

/// Goodness of fit against the uniform distribution over all cells.
pub fn chi_square_uniform(observed: &[u64]) -> (f64, u64) {
    let total: u64 = observed.iter().sum();
    let expected = total as f64 / observed.len() as f64;
    let stat = observed
        .iter()
        .map(|&o| {
            let d = o as f64 - expected;
            d * d / expected
        })
        .sum();
    (stat, observed.len() as u64 - 1)
}

/// Two-sample chi-square over a shared set of cells; cells empty in both
/// samples carry no information and are skipped.
pub fn chi_square_two_sample(a: &[u64], b: &[u64]) -> (f64, u64) {
    assert_eq!(a.len(), b.len(), "histograms must share cells");
    let total_a: u64 = a.iter().sum();
    let total_b: u64 = b.iter().sum();
    let grand = (total_a + total_b) as f64;
    let mut stat = 0.0;
    let mut used = 0u64;
    for (&oa, &ob) in a.iter().zip(b) {
        let cell = (oa + ob) as f64;
        if cell == 0.0 {
            continue;
        }
        used += 1;
        for (observed, total) in [(oa as f64, total_a as f64), (ob as f64, total_b as f64)] {
            let expected = total * cell / grand;
            let d = observed - expected;
            stat += d * d / expected;
        }
    }
    (stat, used.saturating_sub(1))
}

const ALPHA: f64 = 0.01;

/// Security harness configuration. Defaults are the enumerable desk-scale
/// setting: scalar partitions over F_5 on a 4-server, K=3 scheme.
#[derive(Debug, Clone, Copy)]
pub struct SecurityTestConfig {
    pub prime: u64,
    pub servers: u32,
    pub mds_k: u32,
    pub trials: u64,
    pub seed: u64,
    /// Negative control: all-zero mask. Must make the test fail.
    pub mask_disabled: bool,
}

impl Default for SecurityTestConfig {
    fn default() -> Self {
        SecurityTestConfig {
            prime: 5,
            servers: 4,
            mds_k: 3,
            trials: 100_000,
            seed: 20_240_601,
            mask_disabled: false,
        }
    }
}

/// Empirically checks the security constraint: over fresh masks, each
/// server's share of a fixed input is uniform, and indistinguishable
/// between two adversarially different inputs.
///
/// Shares are scalars (1x1 partitions), so the share space is the whole
/// field and every histogram cell is well populated.
pub fn security_test(cfg: &SecurityTestConfig) -> Result<StatTestReport, StatError> {
    let field = PrimeField::new(cfg.prime)?;
    let p = cfg.prime;
    if cfg.trials < 100 * p {
        return Err(StatError::InsufficientTrials {
            test: "security",
            required: 100 * p,
            got: cfg.trials,
            cells: p,
        });
    }
    let k = cfg.mds_k as usize;
    // two fixed, different inputs: partition vectors (1, 2, ..) and (2, 3, ..)
    let input_a: Vec<FMatrix> = (0..k - 1)
        .map(|i| FMatrix::from_rows(field, &[vec![i as u64 + 1]]).unwrap())
        .collect();
    let input_b: Vec<FMatrix> = (0..k - 1)
        .map(|i| FMatrix::from_rows(field, &[vec![i as u64 + 2]]).unwrap())
        .collect();
    let points: Vec<_> = (1..=u64::from(cfg.servers))
        .map(|n| field.element(n))
        .collect();

    let mut hist_a = vec![vec![0u64; p as usize]; cfg.servers as usize];
    let mut hist_b = vec![vec![0u64; p as usize]; cfg.servers as usize];
    let mut rng = stream_rng(cfg.seed, Stream::Trials);
    for _ in 0..cfg.trials {
        // independent masks per input: the two-sample comparison needs
        // independent samples, not two images of one draw
        let mut draw = |disabled: bool| {
            if disabled {
                MaskMatrix::disabled(field, 1, 1)
            } else {
                sample_mask(field, 1, 1, &mut rng)
            }
        };
        let mask_a = draw(cfg.mask_disabled);
        let mask_b = draw(cfg.mask_disabled);
        let shares_a = encode_shares(&input_a, &mask_a, &points)?;
        let shares_b = encode_shares(&input_b, &mask_b, &points)?;
        for n in 0..cfg.servers as usize {
            hist_a[n][shares_a[n].data.get(0, 0).value() as usize] += 1;
            hist_b[n][shares_b[n].data.get(0, 0).value() as usize] += 1;
        }
    }

    let mut subtests = Vec::new();
    for n in 0..cfg.servers as usize {
        for (tag, hist) in [("input-a", &hist_a[n]), ("input-b", &hist_b[n])] {
            let (stat, df) = chi_square_uniform(hist);
            subtests.push(SubTest {
                label: format!("server {} {} uniformity", n + 1, tag),
                statistic: stat,
                degrees_of_freedom: df,
                p_value: chi_square_p_value(stat, df),
            });
        }
        let (stat, df) = chi_square_two_sample(&hist_a[n], &hist_b[n]);
        subtests.push(SubTest {
            label: format!("server {} two-sample", n + 1),
            statistic: stat,
            degrees_of_freedom: df,
            p_value: chi_square_p_value(stat, df),
        });
    }
    let threshold = ALPHA / subtests.len() as f64;
    Ok(StatTestReport::from_subtests(
        "security".into(),
        cfg.trials,
        threshold,
        subtests,
    ))
}

/// Privacy harness configuration. Defaults match the worked example
/// schedule (N=4, M=2, K=3).
#[derive(Debug, Clone, Copy)]
pub struct PrivacyTestConfig {
    pub servers: u32,
    pub messages: u32,
    pub mds_k: u32,
    pub trials: u64,
    pub seed: u64,
    pub buckets: u32,
    /// Negative control: identity permutations. Must make the test fail.
    pub permutations_disabled: bool,
}

impl Default for PrivacyTestConfig {
    fn default() -> Self {
        PrivacyTestConfig {
            servers: 4,
            messages: 2,
            mds_k: 3,
            trials: 10_000,
            seed: 20_240_602,
            buckets: 64,
            permutations_disabled: false,
        }
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    // FNV's low bits are poor on inputs with trailing zero bytes; finalize
    // so bucketing by modulus sees all 64 bits
    h = (h ^ (h >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    h = (h ^ (h >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    h ^ (h >> 31)
}

/// Canonical byte view of everything one server sees of the plan: the
/// multiset of its requests, sorted. Generation order would leak which
/// message drove the construction, so a real user hands each server its
/// batch in canonical order; the descriptor mirrors that.
fn server_view_bytes(plan: &QueryPlan, server: u32) -> Vec<u8> {
    let mut mine: Vec<(u32, u32, &Vec<crate::plan::BlockId>)> = plan
        .requests
        .iter()
        .filter(|r| r.server == server)
        .map(|r| (r.repetition, r.round, &r.terms))
        .collect();
    mine.sort();
    let mut bytes = Vec::new();
    for (repetition, round, terms) in mine {
        bytes.extend_from_slice(&repetition.to_le_bytes());
        bytes.extend_from_slice(&round.to_le_bytes());
        bytes.extend_from_slice(&(terms.len() as u32).to_le_bytes());
        for t in terms {
            bytes.extend_from_slice(&t.message.to_le_bytes());
            bytes.extend_from_slice(&t.index.to_le_bytes());
        }
    }
    bytes
}

fn plan_for(
    servers: u32,
    messages: u32,
    mds_k: u32,
    theta: u32,
    seed: u64,
    permutations_disabled: bool,
) -> Result<QueryPlan, StatError> {
    let params = validate_params(SchemeParams {
        servers,
        messages,
        mds_k,
        prime: crate::field::next_prime(u64::from(servers)),
        d1: 1,
        d2: 1,
        d3: 1,
        theta,
        seed,
    })?;
    let perms = if permutations_disabled {
        identity_permutations(messages, params.block_count())
    } else {
        sample_permutations(
            messages,
            params.block_count(),
            &mut stream_rng(seed, Stream::Permutations),
        )
    };
    Ok(build_plan(&params, &perms).expect("canonical schedule is feasible"))
}

/// Empirically checks the privacy constraint: over fresh seeds, each
/// server's concrete query view is distributed identically whether the
/// desired message is 1 or 2. Every sampled plan is also validated
/// structurally (message symmetry and the other schedule constraints are
/// exact, not statistical).
pub fn privacy_test(cfg: &PrivacyTestConfig) -> Result<StatTestReport, StatError> {
    if cfg.messages < 2 {
        // only one possible desired index: nothing to hide
        return Ok(StatTestReport::from_subtests(
            "privacy".into(),
            cfg.trials,
            ALPHA,
            Vec::new(),
        ));
    }
    let buckets = cfg.buckets as usize;
    let required = 100 * cfg.buckets as u64;
    if cfg.trials < required {
        return Err(StatError::InsufficientTrials {
            test: "privacy",
            required,
            got: cfg.trials,
            cells: cfg.buckets as u64,
        });
    }

    let mut hist_a = vec![vec![0u64; buckets]; cfg.servers as usize];
    let mut hist_b = vec![vec![0u64; buckets]; cfg.servers as usize];
    for t in 0..cfg.trials {
        let plan_a = plan_for(
            cfg.servers,
            cfg.messages,
            cfg.mds_k,
            1,
            trial_seed(cfg.seed, 2 * t),
            cfg.permutations_disabled,
        )?;
        let plan_b = plan_for(
            cfg.servers,
            cfg.messages,
            cfg.mds_k,
            2,
            trial_seed(cfg.seed, 2 * t + 1),
            cfg.permutations_disabled,
        )?;
        validate_plan(&plan_a).expect("sampled plan must satisfy C1-C6");
        validate_plan(&plan_b).expect("sampled plan must satisfy C1-C6");
        for n in 0..cfg.servers {
            let ha = fnv1a(&server_view_bytes(&plan_a, n + 1)) as usize % buckets;
            let hb = fnv1a(&server_view_bytes(&plan_b, n + 1)) as usize % buckets;
            hist_a[n as usize][ha] += 1;
            hist_b[n as usize][hb] += 1;
        }
    }

    let mut subtests = Vec::new();
    for n in 0..cfg.servers as usize {
        let (stat, df) = chi_square_two_sample(&hist_a[n], &hist_b[n]);
        subtests.push(SubTest {
            label: format!("server {} query view", n + 1),
            statistic: stat,
            degrees_of_freedom: df,
            p_value: chi_square_p_value(stat, df),
        });
    }
    let threshold = ALPHA / subtests.len() as f64;
    Ok(StatTestReport::from_subtests(
        "privacy".into(),
        cfg.trials,
        threshold,
        subtests,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn p_values_match_known_quantiles() {
        // chi-square with 1 df: P[X > 3.841] ~ 0.05
        let p = chi_square_p_value(3.841, 1);
        assert!((p - 0.05).abs() < 1e-3, "p = {p}");
        // df = 4: P[X > 9.488] ~ 0.05
        let p = chi_square_p_value(9.488, 4);
        assert!((p - 0.05).abs() < 1e-3, "p = {p}");
        assert_eq!(chi_square_p_value(0.0, 0), 1.0);
    }

    #[test]
    fn uniform_statistic_matches_hand_computation() {
        let (stat, df) = chi_square_uniform(&[28, 31, 40, 35]);
        assert_eq!(df, 3);
        assert!((stat - 2.417_910_447_761_194).abs() < 1e-12);
    }

    #[test]
    fn two_sample_statistic_is_zero_for_identical_histograms() {
        let (stat, df) = chi_square_two_sample(&[10, 20, 30], &[10, 20, 30]);
        assert_eq!(df, 2);
        assert!(stat.abs() < 1e-12);
    }

    #[test]
    fn two_sample_detects_disjoint_masses() {
        let (stat, df) = chi_square_two_sample(&[100, 0], &[0, 100]);
        assert_eq!(df, 1);
        assert!(stat > 100.0);
        assert!(chi_square_p_value(stat, df) < 1e-9);
    }

    #[test]
    fn insufficient_trials_are_rejected() {
        let cfg = SecurityTestConfig {
            trials: 400,
            ..SecurityTestConfig::default()
        };
        assert!(matches!(
            security_test(&cfg),
            Err(StatError::InsufficientTrials { .. })
        ));
        let cfg = PrivacyTestConfig {
            trials: 50,
            ..PrivacyTestConfig::default()
        };
        assert!(matches!(
            privacy_test(&cfg),
            Err(StatError::InsufficientTrials { .. })
        ));
    }

    #[test]
    fn security_smoke_run_passes_quickly() {
        let cfg = SecurityTestConfig {
            trials: 2_000,
            ..SecurityTestConfig::default()
        };
        let report = security_test(&cfg).unwrap();
        assert!(report.passed, "worst p = {}", report.p_value);
        assert_eq!(report.subtests.len(), 12);
    }

    #[test]
    fn disabled_mask_fails_decisively() {
        let cfg = SecurityTestConfig {
            trials: 2_000,
            mask_disabled: true,
            ..SecurityTestConfig::default()
        };
        let report = security_test(&cfg).unwrap();
        assert!(!report.passed);
        assert!(report.p_value < 1e-12);
    }

    #[test]
    fn privacy_smoke_run_passes_quickly() {
        let cfg = PrivacyTestConfig {
            trials: 6_400,
            buckets: 16,
            ..PrivacyTestConfig::default()
        };
        let report = privacy_test(&cfg).unwrap();
        assert!(report.passed, "worst p = {}", report.p_value);
        assert_eq!(report.subtests.len(), 4);
    }

    #[test]
    fn disabled_permutations_fail_decisively() {
        let cfg = PrivacyTestConfig {
            trials: 6_400,
            buckets: 16,
            permutations_disabled: true,
            ..PrivacyTestConfig::default()
        };
        let report = privacy_test(&cfg).unwrap();
        assert!(!report.passed);
        assert!(report.p_value < 1e-12);
    }

    #[test]
    fn single_message_is_vacuously_private() {
        let cfg = PrivacyTestConfig {
            messages: 1,
            trials: 10,
            ..PrivacyTestConfig::default()
        };
        let report = privacy_test(&cfg).unwrap();
        assert!(report.passed);
        assert!(report.subtests.is_empty());
    }
}
