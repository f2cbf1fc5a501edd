//! Quantitative estimate of drug-likeness: the unweighted geometric mean of
//! eight asymmetric double-sigmoid desirability functions.

use std::sync::OnceLock;

use crate::descriptors::{DescriptorError, DescriptorSet};

const PARAM_TABLE: &str = include_str!("../data/qed_params.tsv");

/// Parameters of one asymmetric double sigmoid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdsParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub e: f64,
    pub f: f64,
    pub dmax: f64,
}

/// Property order used throughout: MW, ALOGP, HBA, HBD, PSA, ROTB, AROM, ALERTS.
pub const PROPERTIES: [&str; 8] = ["MW", "ALOGP", "HBA", "HBD", "PSA", "ROTB", "AROM", "ALERTS"];

#[derive(Debug, Clone, PartialEq)]
pub struct QedParams {
    pub params: [AdsParams; 8],
}

impl QedParams {
    pub fn builtin() -> &'static QedParams {
        static PARAMS: OnceLock<QedParams> = OnceLock::new();
        PARAMS.get_or_init(|| QedParams::parse(PARAM_TABLE).expect("built-in desirability table parses"))
    }

    pub fn parse(text: &str) -> Result<QedParams, DescriptorError> {
        let mut found: [Option<AdsParams>; 8] = [None; 8];
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = |message: String| DescriptorError::Table { table: "qed", line: i + 1, message };
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 8 {
                return Err(bad("expected 8 columns".into()));
            }
            let slot = PROPERTIES.iter().position(|p| *p == f[0]).ok_or_else(|| bad(format!("unknown property {:?}", f[0])))?;
            let mut v = [0.0; 7];
            for (k, s) in f[1..].iter().enumerate() {
                v[k] = s.parse().map_err(|_| bad(format!("bad number {s:?}")))?;
            }
            found[slot] = Some(AdsParams { a: v[0], b: v[1], c: v[2], d: v[3], e: v[4], f: v[5], dmax: v[6] });
        }
        let mut params = [AdsParams { a: 0.0, b: 0.0, c: 0.0, d: 0.0, e: 0.0, f: 0.0, dmax: 1.0 }; 8];
        for (k, p) in found.iter().enumerate() {
            params[k] =
                p.ok_or(DescriptorError::Table { table: "qed", line: 0, message: format!("missing property {}", PROPERTIES[k]) })?;
        }
        Ok(QedParams { params })
    }
}

/// Asymmetric double sigmoid, normalized by its maximum.
pub fn ads(x: f64, p: &AdsParams) -> f64 {
    let exp1 = 1.0 + (-(x - p.c + p.d / 2.0) / p.e).exp();
    let exp2 = 1.0 + (-(x - p.c - p.d / 2.0) / p.f).exp();
    (p.a + p.b / exp1 * (1.0 - 1.0 / exp2)) / p.dmax
}

/// Geometric mean of desirabilities, each clamped into (0, 1].
pub fn geometric_mean(desirabilities: &[f64]) -> f64 {
    let n = desirabilities.len() as f64;
    let log_sum: f64 = desirabilities.iter().map(|&d| d.clamp(f64::MIN_POSITIVE, 1.0).ln()).sum();
    (log_sum / n).exp()
}

/// The eight property values fed to the desirability functions.
pub fn qed_inputs(d: &DescriptorSet) -> [f64; 8] {
    [d.mw, d.logp, d.qed_hba as f64, d.qed_hbd as f64, d.tpsa, d.qed_rotb as f64, d.qed_arom as f64, d.alerts as f64]
}

pub fn desirabilities(d: &DescriptorSet, params: &QedParams) -> [f64; 8] {
    let x = qed_inputs(d);
    std::array::from_fn(|k| ads(x[k], &params.params[k]))
}

/// Drug-likeness in (0, 1] with the built-in parameters.
pub fn qed(d: &DescriptorSet) -> f64 {
    qed_with(d, QedParams::builtin())
}

pub fn qed_with(d: &DescriptorSet, params: &QedParams) -> f64 {
    geometric_mean(&desirabilities(d, params))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equal_desirabilities_give_that_value() {
        for x in [0.1, 0.5, 0.93, 1.0] {
            assert!((geometric_mean(&[x; 8]) - x).abs() < 1e-12);
        }
    }

    #[test]
    fn clamping_keeps_result_in_unit_interval() {
        assert!(geometric_mean(&[0.0; 8]) > 0.0);
        assert!(geometric_mean(&[1.5; 8]) <= 1.0);
    }

    #[test]
    fn builtin_params_cover_all_properties() {
        let p = QedParams::builtin();
        assert!((p.params[0].b - 392.5754953).abs() < 1e-9);
        assert!((p.params[7].dmax - 417.725314).abs() < 1e-9);
    }

    #[test]
    fn missing_property_is_an_error() {
        assert!(QedParams::parse("MW 1 2 3 4 5 6 7\n").is_err());
    }
}
