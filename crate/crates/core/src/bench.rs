//! Per-target rows and benchmark aggregates, computed from run logs alone so
//! stored logs reproduce the numbers printed during a run.

use molpilot_chem::scoring::{diversity, is_high_quality, tsr, Property, PropertyProfile, TargetThresholds};
use molpilot_chem::{default_fingerprint, parse_smiles, Fingerprint};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::runlog::{replay, Outcome, RunLog};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BenchError {
    #[error("no targets to aggregate")]
    NoTargets,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetRow {
    pub target: String,
    pub seed: u64,
    pub outcome: Outcome,
    pub actions: usize,
    pub pool_size: usize,
    /// Fraction of the final pool that is high quality.
    pub hq_fraction: f64,
    /// Fraction of the final pool passing each threshold, in `Property::ALL` order.
    pub property_fractions: [f64; 5],
    pub dvs: Option<f64>,
    pub dvs_pass: bool,
}

/// Statistics of a final pool given its profiles and fingerprints.
pub fn pool_stats(profiles: &[PropertyProfile], fps: &[&Fingerprint], t: &TargetThresholds) -> (f64, [f64; 5], Option<f64>) {
    let n = profiles.len();
    let frac = |k: usize| if n == 0 { 0.0 } else { k as f64 / n as f64 };
    let hq = frac(profiles.iter().filter(|p| is_high_quality(p, t)).count());
    let mut props = [0.0; 5];
    for (slot, prop) in props.iter_mut().zip(Property::ALL) {
        *slot = frac(profiles.iter().filter(|p| prop.passes(p, t)).count());
    }
    (hq, props, diversity(fps).ok())
}

/// Row for one run, rebuilt from its log. Fingerprints are recomputed from
/// the logged SMILES.
pub fn row_from_log(log: &RunLog) -> TargetRow {
    let rp = replay(log);
    let records = rp.pool_records();
    let outcome = log.outcome().unwrap_or(Outcome::Error);
    let base = TargetRow {
        target: log.header.target.clone(),
        seed: log.header.seed,
        outcome,
        actions: rp.actions,
        pool_size: records.len(),
        hq_fraction: 0.0,
        property_fractions: [0.0; 5],
        dvs: None,
        dvs_pass: false,
    };
    let Some(req) = log.requirements() else { return base };
    let profiles: Vec<PropertyProfile> = records.iter().map(|r| r.profile).collect();
    let fps: Vec<Fingerprint> = records.iter().filter_map(|r| parse_smiles(&r.smiles).ok()).map(|g| default_fingerprint(&g)).collect();
    let refs: Vec<&Fingerprint> = fps.iter().collect();
    let (hq_fraction, property_fractions, dvs) = pool_stats(&profiles, &refs, &req.thresholds);
    TargetRow { hq_fraction, property_fractions, dvs, dvs_pass: dvs.is_some_and(|d| d >= req.dvs_min), ..base }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub targets: usize,
    pub successes: usize,
    /// Percent of targets with a successful outcome.
    pub tsr: f64,
    /// Means over targets, as percentages.
    pub hq: f64,
    pub property: [f64; 5],
    pub dvs_pass_rate: f64,
}

pub fn aggregate(rows: &[TargetRow]) -> Result<Aggregate, BenchError> {
    let outcomes: Vec<bool> = rows.iter().map(|r| r.outcome == Outcome::Success).collect();
    let rate = tsr(&outcomes).map_err(|_| BenchError::NoTargets)?;
    let n = rows.len() as f64;
    let mean = |f: &dyn Fn(&TargetRow) -> f64| 100.0 * rows.iter().map(f).sum::<f64>() / n;
    let mut property = [0.0; 5];
    for (k, slot) in property.iter_mut().enumerate() {
        *slot = mean(&|r| r.property_fractions[k]);
    }
    Ok(Aggregate {
        targets: rows.len(),
        successes: outcomes.iter().filter(|&&s| s).count(),
        tsr: rate,
        hq: mean(&|r| r.hq_fraction),
        property,
        dvs_pass_rate: mean(&|r| if r.dvs_pass { 1.0 } else { 0.0 }),
    })
}

pub fn rows_csv(rows: &[TargetRow]) -> String {
    let mut out = String::from("target,seed,outcome,actions,pool,HQ,QED,LRF,SAS,VNA,NVT,DVS\n");
    for r in rows {
        let p = r.property_fractions;
        let dvs = r.dvs.map(|d| format!("{d:.3}")).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{},{:.3},{:.3},{:.3},{:.3},{:.3},{:.3},{}\n",
            r.target, r.seed, r.outcome, r.actions, r.pool_size, r.hq_fraction, p[0], p[1], p[2], p[3], p[4], dvs
        ));
    }
    out
}

impl std::fmt::Display for Aggregate {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "targets   {}", self.targets)?;
        writeln!(f, "TSR       {:.1}% ({} of {})", self.tsr, self.successes, self.targets)?;
        writeln!(f, "HQ        {:.1}%", self.hq)?;
        for (prop, v) in Property::ALL.iter().zip(self.property) {
            writeln!(f, "{:<9} {:.1}%", prop.name().to_ascii_uppercase(), v)?;
        }
        write!(f, "DVS pass  {:.1}%", self.dvs_pass_rate)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(success: bool) -> TargetRow {
        TargetRow {
            target: "t".into(),
            seed: 1,
            outcome: if success { Outcome::Success } else { Outcome::BudgetExhausted },
            actions: 3,
            pool_size: 5,
            hq_fraction: if success { 1.0 } else { 0.4 },
            property_fractions: [1.0, 1.0, 0.8, 0.6, 1.0],
            dvs: Some(0.85),
            dvs_pass: success,
        }
    }

    #[test]
    fn twenty_two_of_thirty() {
        let rows: Vec<TargetRow> = (0..30).map(|i| row(i < 22)).collect();
        let a = aggregate(&rows).unwrap();
        assert!((a.tsr - 73.3).abs() < 0.05);
        assert_eq!(a.successes, 22);
        assert!((a.hq - 100.0 * (22.0 + 8.0 * 0.4) / 30.0).abs() < 1e-9);
    }

    #[test]
    fn single_and_empty() {
        assert_eq!(aggregate(&[row(true)]).unwrap().tsr, 100.0);
        assert_eq!(aggregate(&[]), Err(BenchError::NoTargets));
    }
}
