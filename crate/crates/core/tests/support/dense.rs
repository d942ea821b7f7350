//! Turning dense count arrays into records and matrices.

#![allow(dead_code, clippy::needless_range_loop)]

use intermap_core::{
    build_matrix, ForumId, InteractionMatrix, InteractionRecord, Label, SentimentLabel, TrustLabel,
    UserId, UserOrdering,
};

pub fn user_name(i: usize) -> String {
    format!("user{i:02}")
}

/// One record per unit of count, named by `names[i]`, in row-major order.
pub fn records_named(c: &[Vec<u64>], names: &[String]) -> Vec<InteractionRecord> {
    let forum = ForumId::new("dense").unwrap();
    let mut out = Vec::new();
    let mut t = 0u64;
    for (i, row) in c.iter().enumerate() {
        for (j, &k) in row.iter().enumerate() {
            if i == j {
                continue;
            }
            for _ in 0..k {
                out.push(
                    InteractionRecord::new(
                        forum.clone(),
                        &format!("p{t}"),
                        UserId::new(&names[i]).unwrap(),
                        UserId::new(&names[j]).unwrap(),
                        t,
                        TrustLabel::ALL[(t % 3) as usize],
                        SentimentLabel::ALL[(t % 4) as usize],
                    )
                    .unwrap(),
                );
                t += 1;
            }
        }
    }
    out
}

pub fn records(c: &[Vec<u64>]) -> Vec<InteractionRecord> {
    let names: Vec<String> = (0..c.len()).map(user_name).collect();
    records_named(c, &names)
}

pub fn matrix(c: &[Vec<u64>], ordering: UserOrdering) -> InteractionMatrix {
    build_matrix(&records(c), ordering).unwrap()
}

/// All n×n arrays with off-diagonal counts in 0..=max, as a flat index.
pub fn enumerate(n: usize, max: u64) -> impl Iterator<Item = Vec<Vec<u64>>> {
    let slots = n * (n - 1);
    let base = max + 1;
    (0..base.pow(slots as u32)).map(move |mut code| {
        let mut c = vec![vec![0; n]; n];
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    c[i][j] = code % base;
                    code /= base;
                }
            }
        }
        c
    })
}

/// Input of the golden four-user render: empty, single and repeated cells.
pub fn four_users() -> (Vec<Vec<u64>>, Vec<String>) {
    let counts = vec![
        vec![0, 3, 1, 0],
        vec![2, 0, 0, 1],
        vec![0, 0, 0, 5],
        vec![1, 0, 0, 0],
    ];
    (counts, (1..=4).map(|i| format!("User{i}")).collect())
}

pub fn four_user_matrix() -> InteractionMatrix {
    let (counts, names) = four_users();
    build_matrix(&records_named(&counts, &names), UserOrdering::Lexicographic).unwrap()
}
