//! Brute-force reference scores over a dense count array.
//!
//! `c[i][j]` is the number of records from user i to user j. Users with no
//! records at all are dropped before scoring, matching how a matrix is
//! built from records. Nothing here touches the engine's types.

#![allow(dead_code, clippy::needless_range_loop)]

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleScores {
    pub cosine: f64,
    pub reciprocity: f64,
    pub density: f64,
    pub gini: f64,
    pub top2_share: f64,
}

/// Restrict to users that send or receive at least one record.
pub fn participants(c: &[Vec<u64>]) -> Vec<Vec<u64>> {
    let n = c.len();
    let keep: Vec<usize> = (0..n)
        .filter(|&u| (0..n).any(|v| v != u && (c[u][v] > 0 || c[v][u] > 0)))
        .collect();
    keep.iter()
        .map(|&i| {
            keep.iter()
                .map(|&j| if i == j { 0 } else { c[i][j] })
                .collect()
        })
        .collect()
}

pub fn total(c: &[Vec<u64>]) -> u64 {
    let n = c.len();
    let mut t = 0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                t += c[i][j];
            }
        }
    }
    t
}

/// Every score, or `None` for a matrix with no records.
pub fn scores(raw: &[Vec<u64>]) -> Option<OracleScores> {
    let c = participants(raw);
    let n = c.len();
    let total = total(&c);
    if total == 0 {
        return None;
    }

    // cosine between the off-diagonal vector and its transpose
    let mut dot = 0u64;
    let mut norm = 0u64;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                dot += c[i][j] * c[j][i];
                norm += c[i][j] * c[i][j];
            }
        }
    }

    // unordered pairs, each visited once
    let mut active = 0u64;
    let mut both = 0u64;
    for i in 0..n {
        for j in (i + 1)..n {
            if c[i][j] + c[j][i] > 0 {
                active += 1;
            }
            if c[i][j] > 0 && c[j][i] > 0 {
                both += 1;
            }
        }
    }

    let mut nonzero = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i != j && c[i][j] > 0 {
                nonzero.push(c[i][j]);
            }
        }
    }
    let m = nonzero.len() as u64;
    let mut abs_diff = 0u64;
    for &a in &nonzero {
        for &b in &nonzero {
            abs_diff += a.abs_diff(b);
        }
    }
    // sum / (2 m^2 mu) with mu = total / m
    let gini = abs_diff as f64 / (2 * m * total) as f64;

    Some(OracleScores {
        cosine: dot as f64 / norm as f64,
        reciprocity: both as f64 / active as f64,
        density: m as f64 / (n * (n - 1)) as f64,
        gini,
        top2_share: top2_touched(&c) as f64 / total as f64,
    })
}

fn participation(c: &[Vec<u64>], u: usize) -> u64 {
    (0..c.len())
        .filter(|&v| v != u)
        .map(|v| c[u][v] + c[v][u])
        .sum()
}

/// Records touching a or b, by walking every cell.
fn touched(c: &[Vec<u64>], a: usize, b: usize) -> u64 {
    let n = c.len();
    let mut t = 0;
    for i in 0..n {
        for j in 0..n {
            if i != j && (i == a || i == b || j == a || j == b) {
                t += c[i][j];
            }
        }
    }
    t
}

/// Over every pair that some tie-break could make the top two, the most
/// records touched.
pub fn top2_touched(c: &[Vec<u64>]) -> u64 {
    let n = c.len();
    let p: Vec<u64> = (0..n).map(|u| participation(c, u)).collect();
    let mut sorted = p.clone();
    sorted.sort_unstable_by(|a, b| b.cmp(a));
    let (first, second) = (sorted[0], sorted[1]);
    let mut best = 0;
    for a in 0..n {
        for b in (a + 1)..n {
            let (hi, lo) = (p[a].max(p[b]), p[a].min(p[b]));
            if hi == first && lo == second {
                best = best.max(touched(c, a, b));
            }
        }
    }
    best
}
