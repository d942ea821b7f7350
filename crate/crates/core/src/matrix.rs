//! User×user interaction matrices for a single forum.
//!
//! Rows are senders and columns recipients, both axes in the same user
//! order. The diagonal never holds a cell: self-interaction is impossible,
//! which [`InteractionRecord`] already guarantees. Cells are stored sparsely;
//! a missing cell is a meaningful zero.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::marker::PhantomData;
use std::str::FromStr;

use serde::ser::{SerializeMap, SerializeSeq, SerializeStruct};
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::model::{ForumId, InteractionRecord, Label, SentimentLabel, TrustLabel, UserId};

/// Default number of frequency buckets, including the empty bucket 0.
pub const DEFAULT_BUCKETS: usize = 9;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MatrixError {
    #[error("forum has no interactions")]
    EmptyForum,
    #[error("records span several forums ({expected} and {found})")]
    MixedForums { expected: ForumId, found: ForumId },
    #[error("label counts sum to zero")]
    EmptyCounts,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid ordering `{0}`; expected first_appearance, activity_descending or lexicographic")]
pub struct InvalidOrdering(pub String);

/// Axis order strategy. Every strategy yields a permutation of the forum's
/// participants and is applied to rows and columns jointly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum UserOrdering {
    /// Earliest timestamp in any role; at equal timestamps senders precede
    /// recipients, then `UserId`.
    #[default]
    FirstAppearance,
    /// Participation count descending, ties by `UserId`.
    ActivityDescending,
    Lexicographic,
}

impl UserOrdering {
    pub const ALL: [Self; 3] = [
        Self::FirstAppearance,
        Self::ActivityDescending,
        Self::Lexicographic,
    ];

    pub fn token(self) -> &'static str {
        match self {
            Self::FirstAppearance => "first_appearance",
            Self::ActivityDescending => "activity_descending",
            Self::Lexicographic => "lexicographic",
        }
    }
}

impl fmt::Display for UserOrdering {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for UserOrdering {
    type Err = InvalidOrdering;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|o| o.token() == s)
            .ok_or_else(|| InvalidOrdering(s.to_owned()))
    }
}

/// Returns the unique argmax of `counts` (indexed in taxonomy order), or the
/// taxonomy's neutral member when the maximum is shared.
pub fn dominant_label<L: Label>(counts: &[u64]) -> Result<L, MatrixError> {
    debug_assert_eq!(counts.len(), L::ALL.len());
    let max = counts.iter().copied().max().unwrap_or(0);
    if max == 0 {
        return Err(MatrixError::EmptyCounts);
    }
    let mut winners = counts.iter().enumerate().filter(|(_, &c)| c == max);
    let (first, _) = winners.next().expect("max is attained");
    if winners.next().is_some() {
        Ok(L::NEUTRAL)
    } else {
        Ok(L::ALL[first])
    }
}

/// Aggregate of every interaction in one (sender, recipient) direction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CellAggregate {
    count: u64,
    trust_counts: [u64; 3],
    sentiment_counts: [u64; 4],
    dominant_trust: TrustLabel,
    dominant_sentiment: SentimentLabel,
}

impl CellAggregate {
    fn from_labels(trust_counts: [u64; 3], sentiment_counts: [u64; 4]) -> Self {
        let count = trust_counts.iter().sum();
        debug_assert_eq!(count, sentiment_counts.iter().sum::<u64>());
        Self {
            count,
            trust_counts,
            sentiment_counts,
            dominant_trust: dominant_label(&trust_counts).expect("cell is nonempty"),
            dominant_sentiment: dominant_label(&sentiment_counts).expect("cell is nonempty"),
        }
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn trust_count(&self, label: TrustLabel) -> u64 {
        self.trust_counts[label.index()]
    }

    pub fn sentiment_count(&self, label: SentimentLabel) -> u64 {
        self.sentiment_counts[label.index()]
    }

    pub fn trust_counts(&self) -> &[u64; 3] {
        &self.trust_counts
    }

    pub fn sentiment_counts(&self) -> &[u64; 4] {
        &self.sentiment_counts
    }

    pub fn dominant_trust(&self) -> TrustLabel {
        self.dominant_trust
    }

    pub fn dominant_sentiment(&self) -> SentimentLabel {
        self.dominant_sentiment
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InteractionMatrix {
    forum: ForumId,
    ordering: UserOrdering,
    users: Vec<UserId>,
    cells: BTreeMap<(usize, usize), CellAggregate>,
    total_count: u64,
}

impl InteractionMatrix {
    pub fn forum(&self) -> &ForumId {
        &self.forum
    }

    pub fn ordering(&self) -> UserOrdering {
        self.ordering
    }

    pub fn users(&self) -> &[UserId] {
        &self.users
    }

    /// Side length N.
    pub fn n(&self) -> usize {
        self.users.len()
    }

    pub fn total_count(&self) -> u64 {
        self.total_count
    }

    pub fn cell(&self, from: usize, to: usize) -> Option<&CellAggregate> {
        self.cells.get(&(from, to))
    }

    pub fn count(&self, from: usize, to: usize) -> u64 {
        self.cell(from, to).map_or(0, CellAggregate::count)
    }

    /// Nonzero cells in row-major order.
    pub fn cells(&self) -> impl ExactSizeIterator<Item = ((usize, usize), &CellAggregate)> + '_ {
        self.cells.iter().map(|(&k, v)| (k, v))
    }

    pub fn nonzero_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn max_count(&self) -> u64 {
        self.cells
            .values()
            .map(CellAggregate::count)
            .max()
            .unwrap_or(0)
    }

    pub fn index_of(&self, user: &UserId) -> Option<usize> {
        self.users.iter().position(|u| u == user)
    }

    /// The same matrix with every interaction reversed.
    pub fn transpose(&self) -> Self {
        Self {
            forum: self.forum.clone(),
            ordering: self.ordering,
            users: self.users.clone(),
            cells: self
                .cells
                .iter()
                .map(|(&(i, j), c)| ((j, i), c.clone()))
                .collect(),
            total_count: self.total_count,
        }
    }

    /// Matrix JSON wire form.
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("matrix serialization is infallible")
    }
}

struct LabelMap<'a, L: Label>(&'a [u64], PhantomData<L>);

impl<L: Label> Serialize for LabelMap<'_, L> {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(L::ALL.len()))?;
        for (label, count) in L::ALL.iter().zip(self.0) {
            map.serialize_entry(label.token(), count)?;
        }
        map.end()
    }
}

struct CellJson<'a>((usize, usize), &'a CellAggregate);

impl Serialize for CellJson<'_> {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let CellJson((from, to), cell) = self;
        let mut s = serializer.serialize_struct("Cell", 7)?;
        s.serialize_field("from", from)?;
        s.serialize_field("to", to)?;
        s.serialize_field("count", &cell.count)?;
        s.serialize_field(
            "trust",
            &LabelMap::<TrustLabel>(&cell.trust_counts, PhantomData),
        )?;
        s.serialize_field(
            "sentiment",
            &LabelMap::<SentimentLabel>(&cell.sentiment_counts, PhantomData),
        )?;
        s.serialize_field("dominant_trust", &cell.dominant_trust)?;
        s.serialize_field("dominant_sentiment", &cell.dominant_sentiment)?;
        s.end()
    }
}

struct CellsJson<'a>(&'a BTreeMap<(usize, usize), CellAggregate>);

impl Serialize for CellsJson<'_> {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut seq = serializer.serialize_seq(Some(self.0.len()))?;
        for (&k, v) in self.0 {
            seq.serialize_element(&CellJson(k, v))?;
        }
        seq.end()
    }
}

impl Serialize for InteractionMatrix {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut s = serializer.serialize_struct("InteractionMatrix", 5)?;
        s.serialize_field("forum_id", &self.forum)?;
        s.serialize_field("ordering", self.ordering.token())?;
        s.serialize_field("users", &self.users)?;
        s.serialize_field("total_count", &self.total_count)?;
        s.serialize_field("cells", &CellsJson(&self.cells))?;
        s.end()
    }
}

fn check_single_forum(records: &[InteractionRecord]) -> Result<&ForumId, MatrixError> {
    let first = records.first().ok_or(MatrixError::EmptyForum)?.forum();
    match records.iter().find(|r| r.forum() != first) {
        Some(other) => Err(MatrixError::MixedForums {
            expected: first.clone(),
            found: other.forum().clone(),
        }),
        None => Ok(first),
    }
}

/// Orders the distinct participants of `records` for both matrix axes.
pub fn order_users(
    records: &[InteractionRecord],
    strategy: UserOrdering,
) -> Result<Vec<UserId>, MatrixError> {
    if records.is_empty() {
        return Err(MatrixError::EmptyForum);
    }
    let users = match strategy {
        UserOrdering::FirstAppearance => {
            // (timestamp, role) with sender = 0 so senders win ties
            let mut first: HashMap<&UserId, (u64, u8)> = HashMap::new();
            for r in records {
                for (user, role) in [(r.from(), 0u8), (r.to(), 1u8)] {
                    let key = (r.timestamp(), role);
                    first
                        .entry(user)
                        .and_modify(|k| *k = (*k).min(key))
                        .or_insert(key);
                }
            }
            let mut keyed: Vec<_> = first.into_iter().map(|(u, k)| (k, u)).collect();
            keyed.sort_unstable();
            keyed.into_iter().map(|(_, u)| u.clone()).collect()
        }
        UserOrdering::ActivityDescending => {
            let mut activity: HashMap<&UserId, u64> = HashMap::new();
            for r in records {
                *activity.entry(r.from()).or_default() += 1;
                *activity.entry(r.to()).or_default() += 1;
            }
            let mut keyed: Vec<_> = activity.into_iter().collect();
            keyed.sort_unstable_by(|(ua, a), (ub, b)| b.cmp(a).then_with(|| ua.cmp(ub)));
            keyed.into_iter().map(|(u, _)| u.clone()).collect()
        }
        UserOrdering::Lexicographic => {
            let mut users: Vec<&UserId> = records.iter().flat_map(|r| [r.from(), r.to()]).collect();
            users.sort_unstable();
            users.dedup();
            users.into_iter().cloned().collect()
        }
    };
    Ok(users)
}

/// Aggregates one forum's records into its interaction matrix.
pub fn build_matrix(
    records: &[InteractionRecord],
    ordering: UserOrdering,
) -> Result<InteractionMatrix, MatrixError> {
    let forum = check_single_forum(records)?.clone();
    let users = order_users(records, ordering)?;
    let index: HashMap<&UserId, usize> = users.iter().enumerate().map(|(i, u)| (u, i)).collect();

    let mut tallies: BTreeMap<(usize, usize), ([u64; 3], [u64; 4])> = BTreeMap::new();
    for r in records {
        let key = (index[r.from()], index[r.to()]);
        let (trust, sentiment) = tallies.entry(key).or_default();
        trust[r.trust().index()] += 1;
        sentiment[r.sentiment().index()] += 1;
    }
    let cells: BTreeMap<_, _> = tallies
        .into_iter()
        .map(|(k, (t, s))| (k, CellAggregate::from_labels(t, s)))
        .collect();
    debug_assert!(cells.keys().all(|(i, j)| i != j));

    Ok(InteractionMatrix {
        forum,
        ordering,
        users,
        cells,
        total_count: records.len() as u64,
    })
}

/// Linear frequency scale. Bucket 0 is reserved for absent interactions;
/// counts 1..=max_count fill buckets 1..bucket_count-1.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ColorScale {
    bucket_count: usize,
    max_count: u64,
}

impl ColorScale {
    pub fn bucket_count(&self) -> usize {
        self.bucket_count
    }

    pub fn max_count(&self) -> u64 {
        self.max_count
    }

    pub fn bucket(&self, count: u64) -> usize {
        if count == 0 || self.max_count == 0 {
            return 0;
        }
        let ranges = (self.bucket_count - 1) as u64;
        let count = count.min(self.max_count);
        if self.max_count <= ranges {
            count as usize
        } else {
            (1 + (count - 1) as u128 * ranges as u128 / self.max_count as u128) as usize
        }
    }

    /// Buckets that some count in 0..=max_count maps to.
    pub fn used_buckets(&self) -> usize {
        self.bucket(self.max_count) + 1
    }

    /// Inclusive count range covered by `bucket`, if it is used.
    pub fn bucket_range(&self, bucket: usize) -> Option<(u64, u64)> {
        if bucket >= self.used_buckets() {
            return None;
        }
        if bucket == 0 {
            return Some((0, 0));
        }
        let ranges = (self.bucket_count - 1) as u64;
        if self.max_count <= ranges {
            let b = bucket as u64;
            return Some((b, b));
        }
        // smallest c with (c-1)*ranges >= (b-1)*max
        let lo = |b: u64| 1 + ((b - 1) * self.max_count).div_ceil(ranges);
        let b = bucket as u64;
        let hi = if b == ranges {
            self.max_count
        } else {
            lo(b + 1) - 1
        };
        Some((lo(b), hi))
    }

    /// One label per used bucket: `"0"`, `"3"`, or `"14-26"`.
    pub fn legend_labels(&self) -> Vec<String> {
        (0..self.used_buckets())
            .filter_map(|b| self.bucket_range(b))
            .map(|(lo, hi)| {
                if lo == hi {
                    lo.to_string()
                } else {
                    format!("{lo}-{hi}")
                }
            })
            .collect()
    }
}

/// Builds the frequency scale for a matrix whose largest cell is `max_count`.
///
/// Panics if `bucket_count < 2`.
pub fn make_color_scale(max_count: u64, bucket_count: usize) -> ColorScale {
    assert!(
        bucket_count >= 2,
        "a color scale needs at least two buckets"
    );
    ColorScale {
        bucket_count,
        max_count,
    }
}
