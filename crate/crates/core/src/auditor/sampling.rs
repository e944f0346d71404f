//! Seeded Monte-Carlo estimates for parameters beyond the enumeration
//! budget. Nothing here certifies privacy.

use std::collections::BTreeMap;

use rand::Rng;
use serde::Serialize;

use crate::analysis::{rational_text, ratio, Rational};
use crate::auditor::table::{Evaluator, SchemeVariant, StateLayout};
use crate::auditor::AuditConfig;
use crate::error::{Error, Result};
use crate::field::{seeded_rng, Symbol};
use crate::params::ProtocolParams;
use crate::schemes::SessionPlan;

pub const STATISTICAL_LABEL: &str = "statistical, not certifying";

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StatisticalReport {
    pub config: AuditConfig,
    pub mode: &'static str,
    pub samples: u64,
    pub seed: u64,
    pub observed_errors: u64,
    #[serde(serialize_with = "rational_text::serialize")]
    pub error_rate: Rational,
    /// Plug-in TV between the empirical `(Q_n, A_n)` distributions of two
    /// desired indices, maximized over databases and pairs. Biased upward at
    /// small sample sizes.
    pub view_tv_estimate: f64,
}

impl StatisticalReport {
    /// A decoding error is a concrete counterexample; privacy estimates
    /// never fail a run.
    pub fn refuted(&self) -> bool {
        self.observed_errors > 0
    }
}

pub fn estimate(
    params: &ProtocolParams,
    variant: SchemeVariant,
    samples: u64,
    seed: u64,
    budget: u128,
) -> Result<StatisticalReport> {
    if samples == 0 {
        return Err(Error::InvalidParams("need at least one sample".into()));
    }
    let plan = SessionPlan::for_params(params)?;
    let layout = StateLayout::of(&plan);
    let k_count = plan.messages();
    let mut rng = seeded_rng(seed);
    let mut evaluators: Vec<Evaluator> = (0..k_count).map(|k| Evaluator::new(&plan, variant, k)).collect();
    // views[n][k]: empirical counts of database n's (Q_n, A_n) given k
    let mut views: Vec<Vec<BTreeMap<Vec<Symbol>, u64>>> = vec![vec![BTreeMap::new(); k_count]; plan.databases];
    let mut draws = vec![0u64; k_count];
    let mut errors = 0;
    let mut digits = vec![0; layout.width()];

    for _ in 0..samples {
        let k = rng.gen_range(0..k_count);
        for d in &mut digits {
            *d = rng.gen_range(0..plan.prime.get());
        }
        let ev = &mut evaluators[k];
        ev.eval(&digits);
        if ev.decoded != ev.desired(&digits) {
            errors += 1;
        }
        draws[k] += 1;
        for (n, per_k) in views.iter_mut().enumerate() {
            let mut key = Vec::new();
            for (qs, avs) in ev.queries.iter().zip(&ev.answers) {
                if let (Some(q), Some(&a)) = (qs.get(n), avs.get(n)) {
                    key.extend_from_slice(q);
                    key.push(a);
                }
            }
            *per_k[k].entry(key).or_insert(0) += 1;
        }
    }

    let mut tv = 0.0f64;
    for per_k in &views {
        for a in 0..k_count {
            for b in a + 1..k_count {
                if draws[a] == 0 || draws[b] == 0 {
                    continue;
                }
                tv = tv.max(plug_in_tv(&per_k[a], draws[a], &per_k[b], draws[b]));
            }
        }
    }

    Ok(StatisticalReport {
        config: AuditConfig::new(params, variant, budget),
        mode: STATISTICAL_LABEL,
        samples,
        seed,
        observed_errors: errors,
        error_rate: ratio(errors as usize, samples as usize),
        view_tv_estimate: tv,
    })
}

fn plug_in_tv<K: Ord>(a: &BTreeMap<K, u64>, na: u64, b: &BTreeMap<K, u64>, nb: u64) -> f64 {
    let fa = |c: u64| c as f64 / na as f64;
    let fb = |c: u64| c as f64 / nb as f64;
    let mut sum: f64 = a
        .iter()
        .map(|(key, &c)| (fa(c) - b.get(key).map_or(0.0, |&d| fb(d))).abs())
        .sum();
    sum += b.iter().filter(|(key, _)| !a.contains_key(key)).map(|(_, &d)| fb(d)).sum::<f64>();
    sum / 2.0
}
