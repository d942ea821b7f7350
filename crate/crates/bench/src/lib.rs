//! Shared inputs for the benchmarks.

use intermap_core::{generate_fixture, FixtureSpec, InteractionRecord, Regime, RegimePlan};

/// Records of one seeded forum with `users` participants.
pub fn forum_records(users: usize, interactions: usize, regime: Regime) -> Vec<InteractionRecord> {
    let snapshot = generate_fixture(&FixtureSpec {
        forum_count: 1,
        user_count: users,
        interaction_count: interactions,
        regimes: RegimePlan::Uniform(regime),
        seed: 1,
    })
    .expect("benchmark fixture is feasible");
    let id = snapshot.forums()[0].id.clone();
    snapshot
        .forum_records(id.as_str())
        .expect("forum exists")
        .to_vec()
}
