//! Seeded synthetic corpora with exact aggregate counts.
//!
//! Users are split into disjoint per-forum pools so the global distinct
//! user count is exact, and every pool member appears in at least one
//! record. Each forum follows one interaction regime:
//!
//! - `LeaderDominated`: two designated leaders; every record touches a
//!   leader and at least a fifth of records run between the two leaders, so
//!   leaders hold at least 60% of record endpoints.
//! - `Dispersed`: directed pairs drawn uniformly.
//! - `Reciprocal`: every drawn pair is emitted in both directions; an odd
//!   leftover record is emitted one-directional.
//!
//! No directed pair repeats more than [`MAX_PAIR_MULTIPLICITY`] times.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::ingest::{DatasetSnapshot, SnapshotBuilder};
use crate::model::{ForumId, InteractionRecord, Label, SentimentLabel, TrustLabel, UserId};

/// Cap on records per directed (sender, recipient) pair within a forum.
pub const MAX_PAIR_MULTIPLICITY: u64 = 64;

const EPOCH_2010: u64 = 1_262_304_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FixtureError {
    #[error("infeasible fixture: {0}")]
    InfeasibleSpec(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown regime `{0}`; expected leader_dominated, dispersed, reciprocal or mixed")]
pub struct InvalidRegime(pub String);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Regime {
    LeaderDominated,
    Dispersed,
    Reciprocal,
}

impl Regime {
    pub const ALL: [Self; 3] = [Self::LeaderDominated, Self::Dispersed, Self::Reciprocal];

    pub fn token(self) -> &'static str {
        match self {
            Self::LeaderDominated => "leader_dominated",
            Self::Dispersed => "dispersed",
            Self::Reciprocal => "reciprocal",
        }
    }

    /// Fewest records that cover `n` users.
    fn min_interactions(self, n: u64) -> u64 {
        match self {
            Self::Dispersed => n.div_ceil(2),
            Self::Reciprocal => 2 * n.div_ceil(2) - 1,
            // smallest k with k - ceil(k/5) >= n - 2 spoke records, and k >= 1
            Self::LeaderDominated => {
                let spokes = n - 2;
                let mut k = spokes + spokes.div_ceil(4);
                while k - k.div_ceil(5) < spokes {
                    k += 1;
                }
                k.max(1)
            }
        }
    }

    /// Most records possible without exceeding the pair multiplicity cap.
    fn max_interactions(self, n: u64) -> u64 {
        let m = MAX_PAIR_MULTIPLICITY;
        match self {
            Self::Dispersed | Self::Reciprocal => n * (n - 1) * m,
            // leader pair holds 2 directed pairs and must carry ceil(k/5)
            Self::LeaderDominated => (2 * m + 4 * (n - 2) * m).min(10 * m),
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for Regime {
    type Err = InvalidRegime;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|r| r.token() == s)
            .ok_or_else(|| InvalidRegime(s.to_owned()))
    }
}

/// Regime assignment across forums.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RegimePlan {
    Uniform(Regime),
    /// Forum i gets `Regime::ALL[i % 3]`.
    Mixed,
    PerForum(Vec<Regime>),
}

impl RegimePlan {
    fn regime(&self, forum: usize) -> Regime {
        match self {
            Self::Uniform(r) => *r,
            Self::Mixed => Regime::ALL[forum % Regime::ALL.len()],
            Self::PerForum(list) => list[forum],
        }
    }
}

impl FromStr for RegimePlan {
    type Err = InvalidRegime;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "mixed" {
            Ok(Self::Mixed)
        } else if s.contains(',') {
            s.split(',')
                .map(|r| r.trim().parse())
                .collect::<Result<_, _>>()
                .map(Self::PerForum)
        } else {
            s.parse().map(Self::Uniform)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FixtureSpec {
    pub forum_count: usize,
    pub user_count: usize,
    pub interaction_count: usize,
    pub regimes: RegimePlan,
    pub seed: u64,
}

fn infeasible(msg: impl Into<String>) -> FixtureError {
    FixtureError::InfeasibleSpec(msg.into())
}

/// Splits `total` into `parts` sizes differing by at most one, larger first.
fn even_split(total: u64, parts: usize) -> Vec<u64> {
    let p = parts as u64;
    (0..p)
        .map(|i| total / p + u64::from(i < total % p))
        .collect()
}

/// Distributes `total` records: each forum gets at least its minimum, and
/// the surplus follows pool capacity n(n-1) without exceeding any maximum.
fn allocate(total: u64, mins: &[u64], maxes: &[u64], weights: &[u64]) -> Vec<u64> {
    let mut alloc = mins.to_vec();
    let mut rest = total - mins.iter().sum::<u64>();
    while rest > 0 {
        let open: Vec<usize> = (0..alloc.len()).filter(|&f| alloc[f] < maxes[f]).collect();
        let weight: u128 = open.iter().map(|&f| weights[f] as u128).sum();
        let mut given = 0;
        for &f in &open {
            let share = (rest as u128 * weights[f] as u128 / weight) as u64;
            let g = share.min(maxes[f] - alloc[f]);
            alloc[f] += g;
            given += g;
        }
        rest -= given;
        if given == 0 {
            for &f in &open {
                if rest == 0 {
                    break;
                }
                alloc[f] += 1;
                rest -= 1;
            }
        }
    }
    alloc
}

/// Draws directed pairs for one forum of `pool` users.
struct PairSampler<'a> {
    rng: &'a mut ChaCha8Rng,
    n: usize,
    used: std::collections::HashMap<(usize, usize), u64>,
}

impl PairSampler<'_> {
    fn room(&self, a: usize, b: usize) -> bool {
        self.used.get(&(a, b)).copied().unwrap_or(0) < MAX_PAIR_MULTIPLICITY
    }

    fn take(&mut self, a: usize, b: usize) -> (usize, usize) {
        *self.used.entry((a, b)).or_default() += 1;
        (a, b)
    }

    /// Random pool members as (a, b) with a != b, covering everyone once.
    fn covering_pairs(&mut self) -> Vec<(usize, usize)> {
        let mut order: Vec<usize> = (0..self.n).collect();
        order.shuffle(self.rng);
        let mut pairs: Vec<(usize, usize)> = order.chunks_exact(2).map(|c| (c[0], c[1])).collect();
        if self.n % 2 == 1 {
            let last = order[self.n - 1];
            let other = order[self.rng.random_range(0..self.n - 1)];
            pairs.push((last, other));
        }
        pairs
    }

    fn dispersed(&mut self, k: u64) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(k as usize);
        for (a, b) in self.covering_pairs() {
            out.push(self.take(a, b));
        }
        while (out.len() as u64) < k {
            let a = self.rng.random_range(0..self.n);
            let b = self.rng.random_range(0..self.n);
            if a != b && self.room(a, b) {
                out.push(self.take(a, b));
            }
        }
        out
    }

    fn reciprocal(&mut self, k: u64) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(k as usize);
        let mut units = self.covering_pairs().into_iter();
        while (out.len() as u64) < k {
            let (a, b) = match units.next() {
                Some(p) => p,
                None => loop {
                    let a = self.rng.random_range(0..self.n);
                    let b = self.rng.random_range(0..self.n);
                    if a != b && self.room(a, b) && self.room(b, a) {
                        break (a, b);
                    }
                },
            };
            out.push(self.take(a, b));
            if (out.len() as u64) < k {
                out.push(self.take(b, a));
            }
        }
        out
    }

    fn leader_dominated(&mut self, k: u64) -> Vec<(usize, usize)> {
        let mut order: Vec<usize> = (0..self.n).collect();
        order.shuffle(self.rng);
        let (l1, l2) = (order[0], order[1]);
        let spokes = &order[2..];
        let between = k
            .div_ceil(5)
            .max(k.saturating_sub(4 * spokes.len() as u64 * MAX_PAIR_MULTIPLICITY));
        let mut out = Vec::with_capacity(k as usize);
        while (out.len() as u64) < between {
            let (a, b) = if self.rng.random_bool(0.5) {
                (l1, l2)
            } else {
                (l2, l1)
            };
            if self.room(a, b) {
                out.push(self.take(a, b));
            } else {
                out.push(self.take(b, a));
            }
        }
        let spoke_edge = |s: &mut Self, spoke: usize| loop {
            let leader = if s.rng.random_bool(0.5) { l1 } else { l2 };
            let (a, b) = if s.rng.random_bool(0.5) {
                (spoke, leader)
            } else {
                (leader, spoke)
            };
            if s.room(a, b) {
                return s.take(a, b);
            }
        };
        for &spoke in spokes {
            out.push(spoke_edge(self, spoke));
        }
        while (out.len() as u64) < k {
            let spoke = spokes[self.rng.random_range(0..spokes.len())];
            out.push(spoke_edge(self, spoke));
        }
        out
    }
}

fn pick<L: Label>(rng: &mut ChaCha8Rng) -> L {
    L::ALL[rng.random_range(0..L::ALL.len())]
}

/// Generates a corpus whose forum, distinct-user and record totals equal
/// the requested counts exactly. Identical `FixtureSpec`s yield identical snapshots.
pub fn generate_fixture(spec: &FixtureSpec) -> Result<DatasetSnapshot, FixtureError> {
    let forums = spec.forum_count;
    let users = spec.user_count as u64;
    let total = spec.interaction_count as u64;
    if forums == 0 || users == 0 || total == 0 {
        return Err(infeasible("counts must be positive"));
    }
    if users < 2 * forums as u64 {
        return Err(infeasible(format!(
            "{users} users cannot fill {forums} forums of at least 2 users"
        )));
    }
    if let RegimePlan::PerForum(list) = &spec.regimes {
        if list.len() != forums {
            return Err(infeasible(format!(
                "{} regimes given for {forums} forums",
                list.len()
            )));
        }
    }

    let pools = even_split(users, forums);
    let regimes: Vec<Regime> = (0..forums).map(|f| spec.regimes.regime(f)).collect();
    let mins: Vec<u64> = pools
        .iter()
        .zip(&regimes)
        .map(|(&n, r)| r.min_interactions(n))
        .collect();
    let maxes: Vec<u64> = pools
        .iter()
        .zip(&regimes)
        .map(|(&n, r)| r.max_interactions(n))
        .collect();
    let (lo, hi) = (mins.iter().sum::<u64>(), maxes.iter().sum::<u64>());
    if total < lo {
        return Err(infeasible(format!(
            "{total} interactions cannot cover {users} users (need at least {lo})"
        )));
    }
    if total > hi {
        return Err(infeasible(format!(
            "{total} interactions exceed capacity {hi} at multiplicity {MAX_PAIR_MULTIPLICITY}"
        )));
    }
    let weights: Vec<u64> = pools.iter().map(|&n| n * (n - 1)).collect();
    let counts = allocate(total, &mins, &maxes, &weights);

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let user_width = (users.max(2) - 1).to_string().len();
    let forum_width = forums.to_string().len();
    let mut builder = SnapshotBuilder::new();
    let mut next_user = 0u64;
    for (f, ((&pool, &k), regime)) in pools.iter().zip(&counts).zip(&regimes).enumerate() {
        let ids: Vec<UserId> = (next_user..next_user + pool)
            .map(|u| {
                UserId::new(&format!("u{u:0user_width$}")).expect("generated id is a valid token")
            })
            .collect();
        next_user += pool;
        let forum = ForumId::new(&format!("f{:0forum_width$}", f + 1)).expect("valid token");
        let name = format!("Forum {:0forum_width$} ({regime})", f + 1);

        let mut sampler = PairSampler {
            rng: &mut rng,
            n: pool as usize,
            used: Default::default(),
        };
        let pairs = match regime {
            Regime::Dispersed => sampler.dispersed(k),
            Regime::Reciprocal => sampler.reciprocal(k),
            Regime::LeaderDominated => sampler.leader_dominated(k),
        };
        debug_assert_eq!(pairs.len() as u64, k);

        let mut ts = EPOCH_2010 + f as u64 * 7 * 86_400;
        for (i, (a, b)) in pairs.into_iter().enumerate() {
            ts += rng.random_range(30..3_600);
            let record = InteractionRecord::new(
                forum.clone(),
                &format!("p{:06}", i + 1),
                ids[a].clone(),
                ids[b].clone(),
                ts,
                pick::<TrustLabel>(&mut rng),
                pick::<SentimentLabel>(&mut rng),
            )
            .expect("generated pairs are distinct users");
            builder
                .push(record, &name)
                .expect("one name per generated forum");
        }
    }
    Ok(builder.build())
}
