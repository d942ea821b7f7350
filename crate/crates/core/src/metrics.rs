//! Quantitative readings of an interaction matrix: mirror symmetry about
//! the diagonal, row/column scan lines, and dispersion of interaction mass,
//! plus the collective / leader-dominated classification built on them.
//!
//! Every score depends only on the multiset of directed cell counts, so all
//! of them are invariant under user relabeling, axis ordering, and uniform
//! scaling of counts.

use std::collections::HashMap;
use std::fmt;

use rayon::prelude::*;
use serde::ser::{SerializeSeq, SerializeStruct};
use serde::{Serialize, Serializer};
use serde_json::value::RawValue;
use thiserror::Error;

use crate::ingest::DatasetSnapshot;
use crate::matrix::{build_matrix, InteractionMatrix, MatrixError, UserOrdering};
use crate::model::{ForumId, UserId};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("matrix has no interactions")]
    EmptyMatrix,
    #[error("threshold `{name}` = {value} is out of range ({range})")]
    InvalidThreshold {
        name: &'static str,
        value: f64,
        range: &'static str,
    },
}

/// Analyst-tunable parameters of scan-line detection and classification.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thresholds {
    /// Minimum breadth fraction for a scan line, in (0, 1].
    pub alpha: f64,
    /// Forums smaller than this report no scan lines.
    pub scan_min_users: usize,
    /// Top-2 share at or above which a forum is leader-dominated, in [0, 1].
    pub tau_share: f64,
    /// Forums smaller than this are indeterminate.
    pub min_users: usize,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            alpha: 0.5,
            scan_min_users: 4,
            tau_share: 0.75,
            min_users: 5,
        }
    }
}

impl Thresholds {
    pub fn validate(&self) -> Result<(), MetricsError> {
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(MetricsError::InvalidThreshold {
                name: "alpha",
                value: self.alpha,
                range: "(0, 1]",
            });
        }
        if !(0.0..=1.0).contains(&self.tau_share) {
            return Err(MetricsError::InvalidThreshold {
                name: "tau_share",
                value: self.tau_share,
                range: "[0, 1]",
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymmetryScores {
    pub cosine_symmetry: f64,
    pub dyad_reciprocity: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanLineReport {
    pub alpha: f64,
    /// Broad senders, by fraction descending then `UserId`.
    pub row_lines: Vec<(UserId, f64)>,
    /// Broad recipients, same order.
    pub column_lines: Vec<(UserId, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DispersionScores {
    pub density: f64,
    pub cell_gini: f64,
    pub top2_share: f64,
    /// False for N <= 3, where two users necessarily touch most records.
    pub top2_informative: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Classification {
    Collective,
    LeaderDominated,
    Indeterminate,
}

impl Classification {
    pub fn token(self) -> &'static str {
        match self {
            Self::Collective => "collective",
            Self::LeaderDominated => "leader_dominated",
            Self::Indeterminate => "indeterminate",
        }
    }
}

impl fmt::Display for Classification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PatternReport {
    pub forum: ForumId,
    pub n_users: usize,
    pub symmetry: SymmetryScores,
    pub scan_lines: ScanLineReport,
    pub dispersion: DispersionScores,
    pub classification: Classification,
    pub thresholds: Thresholds,
}

impl PatternReport {
    /// PatternReport JSON wire form, reals fixed to six decimals.
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("report serialization is infallible")
    }
}

fn nonempty(matrix: &InteractionMatrix) -> Result<(), MetricsError> {
    if matrix.total_count() == 0 {
        Err(MetricsError::EmptyMatrix)
    } else {
        Ok(())
    }
}

/// Cosine similarity between the matrix and its transpose, and the share of
/// active dyads that are reciprocated.
pub fn symmetry_scores(matrix: &InteractionMatrix) -> Result<SymmetryScores, MetricsError> {
    nonempty(matrix)?;
    let mut dot: u128 = 0;
    let mut norm: u128 = 0;
    let mut active = 0u64;
    let mut reciprocated = 0u64;
    for ((i, j), cell) in matrix.cells() {
        let c = cell.count() as u128;
        let mirror = matrix.count(j, i) as u128;
        dot += c * mirror;
        norm += c * c;
        if mirror == 0 {
            active += 1;
        } else if i < j {
            active += 1;
            reciprocated += 1;
        }
    }
    Ok(SymmetryScores {
        cosine_symmetry: dot as f64 / norm as f64,
        dyad_reciprocity: reciprocated as f64 / active as f64,
    })
}

/// Users whose distinct partners cover at least `alpha` of the other N-1
/// users, as senders (rows) and as recipients (columns). Forums with fewer
/// than `min_users` users report no lines.
pub fn detect_scan_lines(
    matrix: &InteractionMatrix,
    alpha: f64,
    min_users: usize,
) -> Result<ScanLineReport, MetricsError> {
    nonempty(matrix)?;
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(MetricsError::InvalidThreshold {
            name: "alpha",
            value: alpha,
            range: "(0, 1]",
        });
    }
    let n = matrix.n();
    let mut report = ScanLineReport {
        alpha,
        row_lines: Vec::new(),
        column_lines: Vec::new(),
    };
    if n < min_users {
        return Ok(report);
    }
    let mut out_breadth = vec![0usize; n];
    let mut in_breadth = vec![0usize; n];
    for ((i, j), _) in matrix.cells() {
        out_breadth[i] += 1;
        in_breadth[j] += 1;
    }
    let lines = |breadth: &[usize]| {
        let mut lines: Vec<(UserId, f64)> = breadth
            .iter()
            .enumerate()
            .map(|(u, &b)| (u, b as f64 / (n - 1) as f64))
            .filter(|&(_, frac)| frac >= alpha)
            .map(|(u, frac)| (matrix.users()[u].clone(), frac))
            .collect();
        lines.sort_by(|(ua, fa), (ub, fb)| fb.total_cmp(fa).then_with(|| ua.cmp(ub)));
        lines
    };
    report.row_lines = lines(&out_breadth);
    report.column_lines = lines(&in_breadth);
    Ok(report)
}

/// Gini coefficient of the nonzero cell counts (mean absolute difference
/// over twice the mean). Exact integer accumulation, one division.
fn gini(counts: &mut [u64]) -> f64 {
    let n = counts.len() as i128;
    let total: i128 = counts.iter().map(|&c| c as i128).sum();
    if n == 0 || total == 0 {
        return 0.0;
    }
    counts.sort_unstable();
    // sum over ordered pairs |x_a - x_b| = 2 * sum_i (2i - n + 1) x_(i)
    let weighted: i128 = counts
        .iter()
        .enumerate()
        .map(|(i, &x)| (2 * i as i128 - n + 1) * x as i128)
        .sum();
    (2 * weighted) as f64 / (2 * n * total) as f64
}

/// Records touched by the top two participants.
///
/// When participation ties make the top two ambiguous, the candidate pair
/// touching the most records is used, which keeps the share independent of
/// user names.
fn top2_touched(matrix: &InteractionMatrix) -> u64 {
    let n = matrix.n();
    let mut participation = vec![0u64; n];
    for ((i, j), cell) in matrix.cells() {
        participation[i] += cell.count();
        participation[j] += cell.count();
    }
    let mutual = |a: usize, b: usize| matrix.count(a, b) + matrix.count(b, a);

    let top = *participation.iter().max().expect("matrix has users");
    let leaders: Vec<usize> = (0..n).filter(|&u| participation[u] == top).collect();
    if leaders.len() >= 2 {
        // maximize 2*top - mutual: find the least-connected pair of leaders
        let is_leader: Vec<bool> = {
            let mut v = vec![false; n];
            leaders.iter().for_each(|&u| v[u] = true);
            v
        };
        let mut dyads: HashMap<(usize, usize), u64> = HashMap::new();
        for ((i, j), cell) in matrix.cells() {
            if is_leader[i] && is_leader[j] {
                *dyads.entry((i.min(j), i.max(j))).or_default() += cell.count();
            }
        }
        let k = leaders.len() as u64;
        let pairs = k * (k - 1) / 2;
        let least = if (dyads.len() as u64) < pairs {
            0
        } else {
            dyads.values().copied().min().unwrap_or(0)
        };
        2 * top - least
    } else {
        let first = leaders[0];
        let second = participation
            .iter()
            .enumerate()
            .filter(|&(u, _)| u != first)
            .map(|(_, &p)| p)
            .max()
            .expect("a matrix has at least two users");
        let least = (0..n)
            .filter(|&u| u != first && participation[u] == second)
            .map(|u| mutual(first, u))
            .min()
            .expect("second place is attained");
        top + second - least
    }
}

/// Density of nonzero cells, Gini of nonzero cell counts, and the share of
/// records touching the two most active users.
pub fn dispersion_scores(matrix: &InteractionMatrix) -> Result<DispersionScores, MetricsError> {
    nonempty(matrix)?;
    let n = matrix.n();
    let mut counts: Vec<u64> = matrix.cells().map(|(_, c)| c.count()).collect();
    Ok(DispersionScores {
        density: counts.len() as f64 / (n * (n - 1)) as f64,
        cell_gini: gini(&mut counts),
        top2_share: top2_touched(matrix) as f64 / matrix.total_count() as f64,
        top2_informative: n > 3,
    })
}

/// Indeterminate below `min_users`; leader-dominated when the top-2 share
/// reaches `tau_share`; collective otherwise.
pub fn classify(
    n_users: usize,
    _symmetry: &SymmetryScores,
    _scan_lines: &ScanLineReport,
    dispersion: &DispersionScores,
    thresholds: &Thresholds,
) -> Classification {
    if n_users < thresholds.min_users {
        Classification::Indeterminate
    } else if dispersion.top2_share >= thresholds.tau_share {
        Classification::LeaderDominated
    } else {
        Classification::Collective
    }
}

/// Every metric for one matrix.
pub fn pattern_report(
    matrix: &InteractionMatrix,
    thresholds: &Thresholds,
) -> Result<PatternReport, MetricsError> {
    thresholds.validate()?;
    let symmetry = symmetry_scores(matrix)?;
    let scan_lines = detect_scan_lines(matrix, thresholds.alpha, thresholds.scan_min_users)?;
    let dispersion = dispersion_scores(matrix)?;
    let classification = classify(matrix.n(), &symmetry, &scan_lines, &dispersion, thresholds);
    Ok(PatternReport {
        forum: matrix.forum().clone(),
        n_users: matrix.n(),
        symmetry,
        scan_lines,
        dispersion,
        classification,
        thresholds: *thresholds,
    })
}

#[derive(Debug, Error)]
pub enum BatchError {
    #[error(transparent)]
    Matrix(#[from] MatrixError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

/// Reports for every forum of a snapshot in canonical forum order. Forums
/// are evaluated in parallel; the result order does not depend on it.
pub fn report_all(
    snapshot: &DatasetSnapshot,
    thresholds: &Thresholds,
) -> Result<Vec<PatternReport>, BatchError> {
    thresholds.validate()?;
    snapshot
        .forums()
        .par_iter()
        .map(|meta| {
            let records = snapshot
                .forum_records(meta.id.as_str())
                .expect("listed forums have records");
            let matrix = build_matrix(records, UserOrdering::default())?;
            Ok(pattern_report(&matrix, thresholds)?)
        })
        .collect()
}

/// A real serialized with exactly six decimals, ties to even.
struct Fixed6(f64);

impl Serialize for Fixed6 {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let raw =
            RawValue::from_string(format!("{:.6}", self.0)).map_err(serde::ser::Error::custom)?;
        raw.serialize(serializer)
    }
}

struct Lines<'a>(&'a [(UserId, f64)]);

impl Serialize for Lines<'_> {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut seq = serializer.serialize_seq(Some(self.0.len()))?;
        for (user, frac) in self.0 {
            seq.serialize_element(&(user, Fixed6(*frac)))?;
        }
        seq.end()
    }
}

impl Serialize for SymmetryScores {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut s = serializer.serialize_struct("SymmetryScores", 2)?;
        s.serialize_field("cosine", &Fixed6(self.cosine_symmetry))?;
        s.serialize_field("dyad_reciprocity", &Fixed6(self.dyad_reciprocity))?;
        s.end()
    }
}

impl Serialize for ScanLineReport {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut s = serializer.serialize_struct("ScanLineReport", 3)?;
        s.serialize_field("alpha", &Fixed6(self.alpha))?;
        s.serialize_field("rows", &Lines(&self.row_lines))?;
        s.serialize_field("cols", &Lines(&self.column_lines))?;
        s.end()
    }
}

impl Serialize for DispersionScores {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut s = serializer.serialize_struct("DispersionScores", 4)?;
        s.serialize_field("density", &Fixed6(self.density))?;
        s.serialize_field("cell_gini", &Fixed6(self.cell_gini))?;
        s.serialize_field("top2_share", &Fixed6(self.top2_share))?;
        s.serialize_field("top2_informative", &self.top2_informative)?;
        s.end()
    }
}

impl Serialize for Thresholds {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut s = serializer.serialize_struct("Thresholds", 4)?;
        s.serialize_field("alpha", &Fixed6(self.alpha))?;
        s.serialize_field("scan_min_users", &self.scan_min_users)?;
        s.serialize_field("tau_share", &Fixed6(self.tau_share))?;
        s.serialize_field("min_users", &self.min_users)?;
        s.end()
    }
}

impl Serialize for PatternReport {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut s = serializer.serialize_struct("PatternReport", 7)?;
        s.serialize_field("forum_id", &self.forum)?;
        s.serialize_field("n_users", &self.n_users)?;
        s.serialize_field("symmetry", &self.symmetry)?;
        s.serialize_field("scan_lines", &self.scan_lines)?;
        s.serialize_field("dispersion", &self.dispersion)?;
        s.serialize_field("classification", self.classification.token())?;
        s.serialize_field("thresholds", &self.thresholds)?;
        s.end()
    }
}
