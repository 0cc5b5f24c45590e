//! Cosine similarity, top-M subpopulation selection and subpopulation weights.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{PpmError, Result};

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `a·b / (|a||b|)`, clamped to [-1, 1].
pub fn cosine_similarity(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(PpmError::DimensionMismatch {
            expected: a.len(),
            found: b.len(),
        });
    }
    let (na, nb) = (norm(a), norm(b));
    if na == 0.0 || nb == 0.0 || !na.is_finite() || !nb.is_finite() {
        return Err(PpmError::UndefinedSimilarity);
    }
    Ok((dot(a, b) / (na * nb)).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankedPatient {
    pub index: usize,
    pub score: f64,
}

/// Training patients sorted by descending similarity, ties by ascending index.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityRanking {
    entries: Vec<RankedPatient>,
}

impl SimilarityRanking {
    /// Sorts arbitrary scored entries into ranking order.
    pub fn from_scores(scores: impl IntoIterator<Item = (usize, f64)>) -> Self {
        let mut entries: Vec<RankedPatient> = scores
            .into_iter()
            .map(|(index, score)| RankedPatient {
                index,
                score: score.clamp(-1.0, 1.0),
            })
            .collect();
        entries.sort_by(|a, b| {
            b.score
                .partial_cmp(&a.score)
                .unwrap_or(Ordering::Equal)
                .then(a.index.cmp(&b.index))
        });
        SimilarityRanking { entries }
    }

    pub fn entries(&self) -> &[RankedPatient] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Ranks every training patient against the index patient.
///
/// Zero-norm training rows get score -1 so they sort last.
pub fn rank_by_similarity(index_patient: &[f64], train: &Dataset) -> Result<SimilarityRanking> {
    if index_patient.len() != train.n_features() {
        return Err(PpmError::DimensionMismatch {
            expected: train.n_features(),
            found: index_patient.len(),
        });
    }
    let index_norm = norm(index_patient);
    if index_norm == 0.0 || !index_norm.is_finite() {
        return Err(PpmError::UndefinedSimilarity);
    }
    let mut zero_rows = 0usize;
    let scores: Vec<(usize, f64)> = (0..train.n_rows())
        .map(|k| {
            let row = train.row(k);
            let nk = norm(row);
            if nk == 0.0 {
                zero_rows += 1;
                (k, -1.0)
            } else {
                (k, dot(index_patient, row) / (index_norm * nk))
            }
        })
        .collect();
    if zero_rows > 0 {
        warn!("{zero_rows} zero-norm training patients demoted to similarity -1");
    }
    Ok(SimilarityRanking::from_scores(scores))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Subpopulation {
    pub member_indices: Vec<usize>,
    pub weights: Vec<f64>,
}

impl Subpopulation {
    pub fn size(&self) -> usize {
        self.member_indices.len()
    }
}

/// The first `m` entries of the ranking, unit weights.
pub fn select_top_m(ranking: &SimilarityRanking, m: usize) -> Result<Subpopulation> {
    if m == 0 || m > ranking.len() {
        return Err(PpmError::SubpopulationSize {
            m,
            max: ranking.len(),
        });
    }
    Ok(Subpopulation {
        member_indices: ranking.entries[..m].iter().map(|e| e.index).collect(),
        weights: vec![1.0; m],
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightScheme {
    #[default]
    Uniform,
    HalfTricube,
    AntiSimilar,
}

impl WeightScheme {
    pub const ALL: [WeightScheme; 3] = [
        WeightScheme::Uniform,
        WeightScheme::HalfTricube,
        WeightScheme::AntiSimilar,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            WeightScheme::Uniform => "uniform",
            WeightScheme::HalfTricube => "half_tricube",
            WeightScheme::AntiSimilar => "anti_similar",
        }
    }

    /// Weights for rank positions `0..m` (0 = most similar).
    pub fn weights(self, m: usize) -> Vec<f64> {
        match self {
            WeightScheme::Uniform => vec![1.0; m],
            WeightScheme::HalfTricube => (0..m).map(|r| half_tricube(r, m)).collect(),
            WeightScheme::AntiSimilar => (0..m).rev().map(|r| half_tricube(r, m)).collect(),
        }
    }
}

impl fmt::Display for WeightScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for WeightScheme {
    type Err = PpmError;

    fn from_str(s: &str) -> Result<Self> {
        WeightScheme::ALL
            .into_iter()
            .find(|w| w.as_str() == s)
            .ok_or_else(|| PpmError::Config(format!("unknown weight_scheme `{s}`")))
    }
}

/// Decreasing half of the tricube kernel over rank position, bandwidth `m`.
fn half_tricube(rank: usize, m: usize) -> f64 {
    let u = rank as f64 / m as f64;
    (1.0 - u * u * u).powi(3)
}

/// Re-weights a subpopulation that is a prefix of `ranking`.
pub fn apply_weights(
    sub: &Subpopulation,
    ranking: &SimilarityRanking,
    scheme: WeightScheme,
) -> Result<Subpopulation> {
    let m = sub.size();
    let is_prefix = m <= ranking.len()
        && sub
            .member_indices
            .iter()
            .zip(&ranking.entries)
            .all(|(&i, e)| i == e.index);
    if !is_prefix {
        return Err(PpmError::InvalidDataset(
            "subpopulation is not a prefix of the ranking".into(),
        ));
    }
    Ok(Subpopulation {
        member_indices: sub.member_indices.clone(),
        weights: scheme.weights(m),
    })
}
