//! Descending order statistics and empirical CVaR (super-quantile) sequences.
//!
//! For a sample sorted as `X_1 >= X_2 >= ... >= X_n`, the CVaR order
//! statistic `Y_k` is the mean of the `k` largest observations. Indices in
//! the public accessors are 1-based to match the usual notation.

use crate::error::{Error, Result};
use crate::numeric::KahanSum;
use std::path::Path;

/// Sample values sorted in non-increasing order.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderedSample {
    values: Vec<f64>,
}

impl OrderedSample {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `X_i` with 1-based `i`.
    #[inline]
    pub fn get(&self, i: usize) -> f64 {
        self.values[i - 1]
    }
}

/// Prefix means of an [`OrderedSample`].
#[derive(Debug, Clone, PartialEq)]
pub struct CvarSequence {
    values: Vec<f64>,
}

impl CvarSequence {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `Y_k` with 1-based `k`.
    #[inline]
    pub fn get(&self, k: usize) -> f64 {
        self.values[k - 1]
    }
}

/// Stable descending sort. Rejects empty input and non-finite values.
pub fn order_descending(sample: &[f64]) -> Result<OrderedSample> {
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    if let Some(i) = sample.iter().position(|x| !x.is_finite()) {
        return Err(Error::NonFinite(i));
    }
    let mut values = sample.to_vec();
    values.sort_by(|a, b| b.total_cmp(a));
    Ok(OrderedSample { values })
}

/// `Y_k = (1/k) sum_{i<=k} X_i` via a compensated running sum.
pub fn cvar_sequence(ordered: &OrderedSample) -> CvarSequence {
    let mut acc = KahanSum::new();
    let mut values = Vec::with_capacity(ordered.len());
    for (i, &x) in ordered.values.iter().enumerate() {
        acc.add(x);
        let y = acc.value() / (i + 1) as f64;
        // rounding can make the running mean tick up by an ulp on ties
        let y = match values.last() {
            Some(&prev) if y > prev => prev,
            _ => y,
        };
        values.push(y);
    }
    CvarSequence { values }
}

/// Convenience: sort and build the CVaR sequence in one step.
pub fn cvar_from_raw(sample: &[f64]) -> Result<(OrderedSample, CvarSequence)> {
    let ordered = order_descending(sample)?;
    let cvar = cvar_sequence(&ordered);
    Ok((ordered, cvar))
}

/// Parse a sample from text: one decimal value per line, blank lines and
/// `#` comment lines ignored.
pub fn parse_sample(text: &str) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let s = line.trim();
        if s.is_empty() || s.starts_with('#') {
            continue;
        }
        let v: f64 = s
            .parse()
            .map_err(|_| Error::Parse(format!("line {}: invalid number {s:?}", lineno + 1)))?;
        out.push(v);
    }
    Ok(out)
}

/// Read a sample file (see [`parse_sample`]).
pub fn read_sample_file(path: &Path) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_sample(&text)
}
