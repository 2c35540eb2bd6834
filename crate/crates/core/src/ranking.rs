//! Ordered rankings, top/bottom extracts and Kendall rank correlation.

use std::cmp::Ordering;
use std::collections::HashMap;

use serde::Serialize;
use thiserror::Error;

use crate::pipeline::IndexResult;
use crate::scalar::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RankingError {
    #[error("k = {k} is outside 1..={len}")]
    KOutOfRange { k: usize, len: usize },
    #[error("rankings do not cover the same entities")]
    MismatchedUniverse,
}

/// Anything with a slug, a display name and a score to rank by.
pub trait Scored<T> {
    fn slug(&self) -> &str;
    fn name(&self) -> &str;
    fn score(&self) -> T;
}

impl<T: Scalar> Scored<T> for IndexResult<T> {
    fn slug(&self) -> &str {
        &self.slug
    }
    fn name(&self) -> &str {
        &self.name
    }
    fn score(&self) -> T {
        self.final_index
    }
}

impl<T: Copy> Scored<T> for (String, String, T) {
    fn slug(&self) -> &str {
        &self.0
    }
    fn name(&self) -> &str {
        &self.1
    }
    fn score(&self) -> T {
        self.2
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankEntry<T> {
    /// 1-based position in the full ranking.
    pub rank: usize,
    pub slug: String,
    pub name: String,
    pub value: T,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Ranking<T> {
    pub label: String,
    pub entries: Vec<RankEntry<T>>,
}

impl<T: Scalar> Ranking<T> {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn slugs(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.slug.as_str())
    }
}

/// Descending by score; equal scores ordered by slug ascending.
pub fn rank<T: Scalar, S: Scored<T>>(label: &str, items: &[S]) -> Ranking<T> {
    let mut sorted: Vec<&S> = items.iter().collect();
    sorted.sort_by(|a, b| {
        b.score()
            .partial_cmp(&a.score())
            .unwrap_or(Ordering::Equal)
            .then_with(|| a.slug().cmp(b.slug()))
    });
    Ranking {
        label: label.to_owned(),
        entries: sorted
            .into_iter()
            .enumerate()
            .map(|(i, s)| RankEntry {
                rank: i + 1,
                slug: s.slug().to_owned(),
                name: s.name().to_owned(),
                value: s.score(),
            })
            .collect(),
    }
}

fn check_k(k: usize, len: usize) -> Result<(), RankingError> {
    if k == 0 || k > len {
        Err(RankingError::KOutOfRange { k, len })
    } else {
        Ok(())
    }
}

pub fn top_k<T: Scalar>(ranking: &Ranking<T>, k: usize) -> Result<Ranking<T>, RankingError> {
    check_k(k, ranking.len())?;
    Ok(Ranking {
        label: format!("{} (top {k})", ranking.label),
        entries: ranking.entries[..k].to_vec(),
    })
}

/// Last `k` entries, worst first. Ranks keep their full-ranking values.
pub fn bottom_k<T: Scalar>(ranking: &Ranking<T>, k: usize) -> Result<Ranking<T>, RankingError> {
    check_k(k, ranking.len())?;
    Ok(Ranking {
        label: format!("{} (bottom {k})", ranking.label),
        entries: ranking.entries[ranking.len() - k..].iter().rev().cloned().collect(),
    })
}

/// Kendall's tau between two orderings of the same entities.
///
/// Rankings are strict total orders, so tau-a and tau-b coincide. Discordant
/// pairs are counted as inversions with a merge sort, O(n log n). Fewer than
/// two entities have no pairs and correlate perfectly by convention.
pub fn kendall_tau<T: Scalar>(a: &Ranking<T>, b: &Ranking<T>) -> Result<f64, RankingError> {
    if a.len() != b.len() {
        return Err(RankingError::MismatchedUniverse);
    }
    let position: HashMap<&str, usize> = b.slugs().enumerate().map(|(i, s)| (s, i)).collect();
    if position.len() != b.len() {
        return Err(RankingError::MismatchedUniverse);
    }
    let mut sequence = a
        .slugs()
        .map(|s| position.get(s).copied().ok_or(RankingError::MismatchedUniverse))
        .collect::<Result<Vec<_>, _>>()?;
    let n = sequence.len();
    if n < 2 {
        return Ok(1.0);
    }
    let mut seen = vec![false; n];
    for &p in &sequence {
        if std::mem::replace(&mut seen[p], true) {
            return Err(RankingError::MismatchedUniverse);
        }
    }
    let discordant = count_inversions(&mut sequence);
    let pairs = (n * (n - 1) / 2) as u64;
    Ok((pairs as f64 - 2.0 * discordant as f64) / pairs as f64)
}

fn count_inversions(values: &mut [usize]) -> u64 {
    let n = values.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut inversions = count_inversions(&mut values[..mid]) + count_inversions(&mut values[mid..]);
    let mut merged = Vec::with_capacity(n);
    let (mut i, mut j) = (0, mid);
    while i < mid && j < n {
        if values[i] <= values[j] {
            merged.push(values[i]);
            i += 1;
        } else {
            merged.push(values[j]);
            inversions += (mid - i) as u64;
            j += 1;
        }
    }
    merged.extend_from_slice(&values[i..mid]);
    merged.extend_from_slice(&values[j..]);
    values.copy_from_slice(&merged);
    inversions
}
