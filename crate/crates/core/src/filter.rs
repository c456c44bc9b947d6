//! Threshold pruning of scored MWE pairs and retention statistics.

use std::collections::HashSet;

use serde::Serialize;

use crate::corpus::BilingualMwePair;
use crate::error::{Error, Result};

/// Outcome of one filtering pass.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FilterReport {
    pub threshold: f64,
    pub input_count: u64,
    pub kept_count: u64,
    pub retention_percent: f64,
}

/// Keeps pairs with score ≥ threshold, preserving input order.
pub fn filter_pairs(
    pairs: &[BilingualMwePair],
    threshold: f64,
) -> Result<(Vec<BilingualMwePair>, FilterReport)> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(Error::usage(format!("threshold {threshold} outside [0,1]")));
    }
    let kept: Vec<BilingualMwePair> =
        pairs.iter().filter(|p| p.score >= threshold).cloned().collect();
    let report = FilterReport {
        threshold,
        input_count: pairs.len() as u64,
        kept_count: kept.len() as u64,
        retention_percent: retention_percent(pairs.len() as u64, kept.len() as u64)?,
    };
    Ok((kept, report))
}

/// 100·kept/input, rounded half-up to one decimal. Empty input yields 0.
pub fn retention_percent(input_count: u64, kept_count: u64) -> Result<f64> {
    if input_count == 0 {
        if kept_count > 0 {
            return Err(Error::data(format!("kept {kept_count} pairs out of 0")));
        }
        return Ok(0.0);
    }
    if kept_count > input_count {
        return Err(Error::data(format!("kept {kept_count} exceeds input {input_count}")));
    }
    let percent = 100.0 * kept_count as f64 / input_count as f64;
    Ok((percent * 10.0 + 0.5).floor() / 10.0)
}

/// Drops repeated (source, target) pairs, keeping the first occurrence.
pub fn dedupe_pairs(pairs: &[BilingualMwePair]) -> Vec<BilingualMwePair> {
    let mut seen: HashSet<(&str, &str)> = HashSet::new();
    pairs
        .iter()
        .filter(|p| seen.insert((p.source_mwe.as_str(), p.target_mwe.as_str())))
        .cloned()
        .collect()
}
