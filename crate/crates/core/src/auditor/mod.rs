//! Exhaustive verification of user privacy, database privacy and zero error.
//!
//! [`enumerate_joint`] walks the whole probability space at small parameters
//! and the checks turn it into exact verdicts: total-variation distances and
//! error probabilities are rationals, and zero leakage is decided by testing
//! that joint counts factor into their marginals. Sabotaged
//! [`SchemeVariant`]s show each check can fail.
//!
//! Above the state budget only [`sampling::estimate`] is available, and its
//! output is labelled as statistical.

pub mod checks;
pub mod sampling;
pub mod table;

use num::Zero;
use serde::Serialize;

pub use checks::{
    check_correctness, check_db_privacy, check_user_privacy, measure_rates, Leakage, RateMeasurement,
    UserPrivacy,
};
pub use sampling::{estimate, StatisticalReport, STATISTICAL_LABEL};
pub use table::{enumerate_joint, JointEntry, JointTable, SchemeVariant, StateLayout, DEFAULT_BUDGET};

use crate::analysis::{rational_text, Rational};
use crate::error::Result;
use crate::params::ProtocolParams;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AuditConfig {
    pub databases: usize,
    pub lengths: Vec<usize>,
    pub prime: u64,
    pub variant: SchemeVariant,
    pub budget: u128,
}

impl AuditConfig {
    pub fn new(params: &ProtocolParams, variant: SchemeVariant, budget: u128) -> Self {
        AuditConfig {
            databases: params.databases(),
            lengths: params.lengths().to_vec(),
            prime: params.prime().into(),
            variant,
            budget,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AuditReport {
    pub config: AuditConfig,
    pub mode: &'static str,
    pub states_per_index: u64,
    pub fingerprint: String,
    pub user_privacy: UserPrivacy,
    pub db_leakage: Leakage,
    #[serde(serialize_with = "rational_text::serialize")]
    pub error_probability: Rational,
    pub rates: RateMeasurement,
}

impl AuditReport {
    pub fn user_privacy_tv(&self) -> &Rational {
        &self.user_privacy.tv
    }

    pub fn db_leakage_bits(&self) -> f64 {
        self.db_leakage.bits
    }

    pub fn passed(&self) -> bool {
        self.user_privacy.tv.is_zero() && self.db_leakage.independent && self.error_probability.is_zero()
    }

    /// A passing scheme must download at least `L N / (N - 1)` and consume
    /// at least `L / (N - 1)` common randomness, `L` the largest length.
    pub fn meets_lower_bounds(&self) -> bool {
        let n = self.config.databases;
        let l = self.config.lengths.iter().copied().max().unwrap_or(0);
        self.rates.download * (n - 1) >= l * n && self.rates.randomness * (n - 1) >= l
    }

    /// False only for a passing scheme that undercuts the lower bounds.
    pub fn converse_consistent(&self) -> bool {
        !self.passed() || self.meets_lower_bounds()
    }
}

/// Enumerate, run every check and measure rates from one transcript per
/// desired index.
pub fn audit(params: &ProtocolParams, variant: SchemeVariant, budget: u128) -> Result<AuditReport> {
    let table = enumerate_joint(params, variant, budget)?;
    let transcripts = (1..=table.messages())
        .map(|k| table.entry(k, 0).map(|e| e.transcript))
        .collect::<Result<Vec<_>>>()?;
    Ok(AuditReport {
        config: AuditConfig::new(params, variant, budget),
        mode: "exhaustive",
        states_per_index: table.states_per_index(),
        fingerprint: table.fingerprint(),
        user_privacy: check_user_privacy(&table),
        db_leakage: check_db_privacy(&table),
        error_probability: check_correctness(&table),
        rates: measure_rates(&transcripts, params)?,
    })
}
