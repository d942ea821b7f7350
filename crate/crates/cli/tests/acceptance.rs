//! Release gate. Prints one PASS/FAIL line per criterion and exits non-zero
//! if any criterion fails. Tolerances and budgets are the constants below.

#![allow(clippy::needless_range_loop)]

#[path = "../../core/tests/support/dense.rs"]
mod dense;
#[path = "../../core/tests/support/oracle.rs"]
mod oracle;

use std::collections::BTreeSet;
use std::panic::{self, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use axum::body::{to_bytes, Body};
use axum::http::{Request, StatusCode};
use axum::Router;
use intermap_cli::{api, router, AppState};
use intermap_core::model::{ForumId, SentimentLabel, TrustLabel, UserId};
use intermap_core::{
    build_matrix, dispersion_scores, generate_fixture, pattern_report, render_matrix_svg,
    symmetry_scores, Classification, DatasetSnapshot, FixtureSpec, InteractionRecord,
    PatternReport, Regime, RegimePlan, RenderSpec, Thresholds, UserOrdering,
};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;
use tempfile::TempDir;
use tower::ServiceExt;

const ORACLE_TOL: f64 = 1e-12;
const WORKED_TOL: f64 = 1e-9;
const ORACLE_RANDOM_CASES: usize = 10_000;
const INVARIANCE_CASES: usize = 1_000;
const CORPUS_BUDGET: Duration = Duration::from_secs(5);
const REGIME_BUDGET: Duration = Duration::from_secs(10);
const REGIME_MIN_ACCURACY: f64 = 0.95;
const PERF_BUDGET: Duration = Duration::from_secs(1);

type Outcome = Result<String, String>;
type Check = fn() -> Outcome;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if let false = $cond {
            return Err(format!($($msg)+));
        }
    };
}

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_intermap")
}

fn intermap(args: &[&str]) -> Result<(String, String), String> {
    let out = Command::new(bin())
        .args(args)
        .output()
        .map_err(|e| format!("cannot spawn intermap: {e}"))?;
    let stdout = String::from_utf8_lossy(&out.stdout).into_owned();
    let stderr = String::from_utf8_lossy(&out.stderr).into_owned();
    if !out.status.success() {
        return Err(format!(
            "intermap {args:?} exited {:?}: {stderr}",
            out.status.code()
        ));
    }
    Ok((stdout, stderr))
}

fn path_str(p: &Path) -> &str {
    p.to_str().expect("temp paths are UTF-8")
}

fn corpus_spec() -> FixtureSpec {
    FixtureSpec {
        forum_count: 53,
        user_count: 1292,
        interaction_count: 5823,
        regimes: RegimePlan::Mixed,
        seed: 7,
    }
}

fn random_counts(rng: &mut ChaCha8Rng, max_n: usize, max_count: u64) -> Vec<Vec<u64>> {
    loop {
        let n = rng.random_range(2..=max_n);
        let c: Vec<Vec<u64>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        if i == j {
                            0
                        } else {
                            rng.random_range(0..=max_count)
                        }
                    })
                    .collect()
            })
            .collect();
        if oracle::total(&c) > 0 {
            return c;
        }
    }
}

fn report_for(c: &[Vec<u64>], names: &[String], ordering: UserOrdering) -> PatternReport {
    let m = build_matrix(&dense::records_named(c, names), ordering).unwrap();
    pattern_report(&m, &Thresholds::default()).unwrap()
}

fn scores(r: &PatternReport) -> [f64; 5] {
    [
        r.symmetry.cosine_symmetry,
        r.symmetry.dyad_reciprocity,
        r.dispersion.density,
        r.dispersion.cell_gini,
        r.dispersion.top2_share,
    ]
}

// ---------------------------------------------------------------------------

fn corpus_aggregates() -> Outcome {
    let dir = TempDir::new().map_err(|e| e.to_string())?;
    let csv = dir.path().join("corpus.csv");
    let start = Instant::now();
    intermap(&[
        "generate-fixture",
        "--forums",
        "53",
        "--users",
        "1292",
        "--interactions",
        "5823",
        "--output",
        path_str(&csv),
    ])?;
    let (report, _) = intermap(&["ingest", "--input", path_str(&csv), "--report"])?;
    let elapsed = start.elapsed();
    let v: Value = serde_json::from_str(&report).map_err(|e| e.to_string())?;
    ensure!(v["accepted"] == 5823, "accepted {}", v["accepted"]);
    ensure!(
        v["rejected"].as_array().is_some_and(Vec::is_empty),
        "rejections {}",
        v["rejected"]
    );
    ensure!(v["forums_seen"] == 53, "forums {}", v["forums_seen"]);
    ensure!(v["users_seen"] == 1292, "users {}", v["users_seen"]);
    ensure!(elapsed < CORPUS_BUDGET, "took {elapsed:?}");
    Ok(format!(
        "53 forums / 1292 users / 5823 records in {elapsed:.2?}"
    ))
}

fn oracle_equivalence() -> Outcome {
    let check = |c: &Vec<Vec<u64>>| -> Result<(), String> {
        let Some(want) = oracle::scores(c) else {
            return Ok(());
        };
        let m = dense::matrix(c, UserOrdering::FirstAppearance);
        let s = symmetry_scores(&m).map_err(|e| e.to_string())?;
        let d = dispersion_scores(&m).map_err(|e| e.to_string())?;
        for (name, got, want) in [
            ("cosine_symmetry", s.cosine_symmetry, want.cosine),
            ("dyad_reciprocity", s.dyad_reciprocity, want.reciprocity),
            ("density", d.density, want.density),
            ("cell_gini", d.cell_gini, want.gini),
            ("top2_share", d.top2_share, want.top2_share),
        ] {
            ensure!(
                (got - want).abs() <= ORACLE_TOL,
                "{name} {got} vs oracle {want} on {c:?}"
            );
        }
        Ok(())
    };
    let mut exhaustive = 0;
    for c in dense::enumerate(2, 3)
        .chain(dense::enumerate(3, 3))
        .chain(dense::enumerate(4, 1))
    {
        check(&c)?;
        exhaustive += 1;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..ORACLE_RANDOM_CASES {
        check(&random_counts(&mut rng, 5, 3))?;
    }
    Ok(format!(
        "{exhaustive} enumerated + {ORACLE_RANDOM_CASES} random matrices within {ORACLE_TOL:e}"
    ))
}

fn fixed_points() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut checked = 0;
    for _ in 0..200 {
        let mut c = random_counts(&mut rng, 8, 5);
        let n = c.len();
        for i in 0..n {
            for j in 0..i {
                c[i][j] = c[j][i];
            }
        }
        if oracle::total(&c) == 0 {
            continue;
        }
        let s = symmetry_scores(&dense::matrix(&c, UserOrdering::FirstAppearance)).unwrap();
        ensure!(
            s.cosine_symmetry == 1.0 && s.dyad_reciprocity == 1.0,
            "symmetric {c:?}: {s:?}"
        );
        checked += 1;
    }
    for spokes in 1..=30 {
        let mut c = vec![vec![0; spokes + 1]; spokes + 1];
        for s in 1..=spokes {
            c[0][s] = 1 + (s as u64 % 3);
        }
        let s = symmetry_scores(&dense::matrix(&c, UserOrdering::FirstAppearance)).unwrap();
        ensure!(
            s.cosine_symmetry == 0.0 && s.dyad_reciprocity == 0.0,
            "star {spokes}: {s:?}"
        );
        checked += 1;
    }
    for _ in 0..200 {
        let n = rng.random_range(2..=9);
        let k = rng.random_range(1..=7);
        let mut c = vec![vec![0; n]; n];
        for i in 0..n {
            for j in 0..n {
                if i != j && rng.random_bool(0.4) {
                    c[i][j] = k;
                }
            }
        }
        if oracle::total(&c) == 0 {
            continue;
        }
        let d = dispersion_scores(&dense::matrix(&c, UserOrdering::FirstAppearance)).unwrap();
        ensure!(d.cell_gini == 0.0, "uniform {c:?}: gini {}", d.cell_gini);
        checked += 1;
    }
    Ok(format!(
        "{checked} symmetric / star / uniform matrices exact"
    ))
}

fn worked_example() -> Outcome {
    // A->B:2, B->A:1, A->C:1
    let names: Vec<String> = ["A", "B", "C"].iter().map(|s| s.to_string()).collect();
    let c = vec![vec![0, 2, 1], vec![1, 0, 0], vec![0, 0, 0]];
    let r = report_for(&c, &names, UserOrdering::FirstAppearance);
    for (name, got, want) in [
        ("cosine_symmetry", r.symmetry.cosine_symmetry, 2.0 / 3.0),
        ("dyad_reciprocity", r.symmetry.dyad_reciprocity, 0.5),
        ("cell_gini", r.dispersion.cell_gini, 1.0 / 6.0),
        ("top2_share", r.dispersion.top2_share, 1.0),
    ] {
        ensure!(
            (got - want).abs() <= WORKED_TOL,
            "{name} = {got}, expected {want}"
        );
    }
    Ok(format!(
        "cosine {:.6}, reciprocity {:.6}, gini {:.6}, top2 {:.6}",
        r.symmetry.cosine_symmetry,
        r.symmetry.dyad_reciprocity,
        r.dispersion.cell_gini,
        r.dispersion.top2_share
    ))
}

fn regime_recovery() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(4242);
    let mut correct = 0;
    let mut misses = Vec::new();
    for i in 0..200u64 {
        let (regime, expected) = if i < 100 {
            (Regime::LeaderDominated, Classification::LeaderDominated)
        } else {
            (Regime::Dispersed, Classification::Collective)
        };
        let n = rng.random_range(8..=40usize);
        let per_user = rng.random_range(2..=6usize);
        let snap = generate_fixture(&FixtureSpec {
            forum_count: 1,
            user_count: n,
            interaction_count: n * per_user,
            regimes: RegimePlan::Uniform(regime),
            seed: 1000 + i,
        })
        .map_err(|e| e.to_string())?;
        let records = snap.forum_records(snap.forums()[0].id.as_str()).unwrap();
        let m = build_matrix(records, UserOrdering::default()).unwrap();
        let got = pattern_report(&m, &Thresholds::default())
            .unwrap()
            .classification;
        if got == expected {
            correct += 1;
        } else {
            misses.push(format!("{regime} n={n} -> {got}"));
        }
    }
    let elapsed = start.elapsed();
    let accuracy = correct as f64 / 200.0;
    ensure!(
        accuracy >= REGIME_MIN_ACCURACY,
        "accuracy {accuracy}: {misses:?}"
    );
    ensure!(elapsed < REGIME_BUDGET, "took {elapsed:?}");
    Ok(format!("{correct}/200 correct in {elapsed:.2?}"))
}

fn invariance() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for case in 0..INVARIANCE_CASES {
        let c = random_counts(&mut rng, 8, 4);
        let n = c.len();
        let base: Vec<String> = (0..n).map(dense::user_name).collect();
        let mut relabeled: Vec<String> = (0..n)
            .map(|i| format!("m{:03}", rng.random_range(0..1000) * 10 + i))
            .collect();
        relabeled.shuffle(&mut rng);
        let ord = UserOrdering::ALL[case % 3];
        let a = report_for(&c, &base, ord);
        let b = report_for(&c, &relabeled, ord);
        ensure!(
            scores(&a) == scores(&b),
            "relabeling changed scores on {c:?}"
        );
        ensure!(
            a.classification == b.classification,
            "relabeling changed class on {c:?}"
        );
        let fractions = |r: &PatternReport| {
            let mut rows: Vec<f64> = r.scan_lines.row_lines.iter().map(|l| l.1).collect();
            let mut cols: Vec<f64> = r.scan_lines.column_lines.iter().map(|l| l.1).collect();
            rows.sort_by(f64::total_cmp);
            cols.sort_by(f64::total_cmp);
            (rows, cols)
        };
        ensure!(
            fractions(&a) == fractions(&b),
            "relabeling changed scan lines on {c:?}"
        );
    }
    for _ in 0..INVARIANCE_CASES {
        let c = random_counts(&mut rng, 8, 4);
        let names: Vec<String> = (0..c.len()).map(dense::user_name).collect();
        let first = report_for(&c, &names, UserOrdering::FirstAppearance);
        for ord in UserOrdering::ALL {
            ensure!(
                report_for(&c, &names, ord) == first,
                "{ord} changed the report on {c:?}"
            );
        }
    }
    for _ in 0..INVARIANCE_CASES {
        let c = random_counts(&mut rng, 7, 3);
        let k = rng.random_range(2..=6u64);
        let names: Vec<String> = (0..c.len()).map(dense::user_name).collect();
        let scaled: Vec<Vec<u64>> = c
            .iter()
            .map(|r| r.iter().map(|x| x * k).collect())
            .collect();
        let a = report_for(&c, &names, UserOrdering::FirstAppearance);
        let b = report_for(&scaled, &names, UserOrdering::FirstAppearance);
        ensure!(
            scores(&a) == scores(&b),
            "scaling by {k} changed scores on {c:?}"
        );
        ensure!(
            a.scan_lines == b.scan_lines,
            "scaling by {k} changed scan lines on {c:?}"
        );
    }
    Ok(format!(
        "{INVARIANCE_CASES} cases each: relabeling, ordering, scaling"
    ))
}

fn golden_path() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/golden/four_users.svg")
}

fn determinism() -> Outcome {
    let dir = TempDir::new().map_err(|e| e.to_string())?;
    let csv = dir.path().join("corpus.csv");
    intermap(&[
        "generate-fixture",
        "--forums",
        "4",
        "--users",
        "60",
        "--interactions",
        "500",
        "--output",
        path_str(&csv),
    ])?;
    let mut renders = Vec::new();
    for k in 0..2 {
        let out = dir.path().join(format!("r{k}.svg"));
        intermap(&[
            "render",
            "--data",
            path_str(&csv),
            "--forum",
            "f1",
            "--layer",
            "trust",
            "--output",
            path_str(&out),
        ])?;
        renders.push(std::fs::read(&out).map_err(|e| e.to_string())?);
    }
    ensure!(renders[0] == renders[1], "CLI renders differ");

    let snap = intermap_core::ingest_csv(std::fs::read(&csv).unwrap().as_slice())
        .unwrap()
        .0;
    let app = router(AppState::new(
        snap,
        Thresholds::default(),
        RenderSpec::default(),
    ));
    let uris = [
        "/forums",
        "/healthz",
        "/forums/f2/matrix?order=activity_descending",
        "/forums/f2/metrics?alpha=0.3",
        "/forums/f2/render.svg?layer=sentiment&cell_px=10",
    ];
    for uri in uris {
        let a = block_on(get(&app, uri));
        let b = block_on(get(&app, uri));
        ensure!(a.0 == StatusCode::OK, "{uri}: {}", a.0);
        ensure!(a == b, "{uri}: responses differ");
    }

    let svg = render_matrix_svg(&dense::four_user_matrix(), &RenderSpec::default())
        .unwrap()
        .content;
    let golden = std::fs::read_to_string(golden_path()).map_err(|e| format!("golden: {e}"))?;
    ensure!(
        svg == golden,
        "four-user render differs from the golden file"
    );
    let doc = roxmltree::Document::parse(&svg).map_err(|e| e.to_string())?;
    let class = |c: &str| {
        doc.descendants()
            .filter(|n| {
                n.attribute("class")
                    .is_some_and(|a| a.split(' ').next() == Some(c))
            })
            .count()
    };
    ensure!(
        class("diagonal") == 4 && class("cell") == 12,
        "golden has {} X / {} cells",
        class("diagonal"),
        class("cell")
    );
    Ok(format!(
        "render and {} GET routes repeat byte-identically; golden 4 X + 12 cells",
        uris.len()
    ))
}

fn diagonal_exclusion() -> Outcome {
    let dir = TempDir::new().map_err(|e| e.to_string())?;
    let csv = dir.path().join("loop.csv");
    std::fs::write(
        &csv,
        "forum_id,forum_name,post_id,timestamp,from_user,to_user,trust,sentiment\n\
         f,Forum,p1,100,alice,bob,trust,positive\n\
         f,Forum,p2,160,bob,alice,neutral,unrelated\n\
         f,Forum,p3,220,carol,carol,mistrust,negative\n",
    )
    .unwrap();
    let (report, _) = intermap(&["ingest", "--input", path_str(&csv), "--report"])?;
    let v: Value = serde_json::from_str(&report).unwrap();
    ensure!(v["accepted"] == 2, "accepted {}", v["accepted"]);
    let rejected = &v["rejected"][0];
    ensure!(
        rejected["line"] == 4 && rejected["error"] == "self_interaction",
        "rejection {rejected}"
    );

    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut built = 0;
    for seed in 0..300u64 {
        let forums = rng.random_range(1..=4usize);
        let users = forums * rng.random_range(2..=12usize);
        let snap = generate_fixture(&FixtureSpec {
            forum_count: forums,
            user_count: users,
            interaction_count: users * 3,
            regimes: RegimePlan::Uniform(Regime::ALL[seed as usize % 3]),
            seed,
        })
        .map_err(|e| e.to_string())?;
        for meta in snap.forums() {
            let m = build_matrix(
                snap.forum_records(meta.id.as_str()).unwrap(),
                UserOrdering::ALL[seed as usize % 3],
            )
            .unwrap();
            ensure!(
                m.cells().all(|((i, j), _)| i != j),
                "diagonal cell in {seed}/{}",
                meta.id
            );
            built += 1;
        }
    }
    let direct = InteractionRecord::new(
        ForumId::new("f").unwrap(),
        "p",
        UserId::new("u").unwrap(),
        UserId::new("u").unwrap(),
        0,
        TrustLabel::Trust,
        SentimentLabel::Positive,
    );
    ensure!(direct.is_err(), "self-interaction record constructed");
    Ok(format!(
        "line 4 rejected as self_interaction; {built} built matrices diagonal-free"
    ))
}

async fn get(app: &Router, uri: &str) -> (StatusCode, String, String) {
    let response = app
        .clone()
        .oneshot(Request::get(uri).body(Body::empty()).unwrap())
        .await
        .unwrap();
    let status = response.status();
    let ctype = response
        .headers()
        .get("content-type")
        .and_then(|v| v.to_str().ok())
        .unwrap_or("")
        .to_owned();
    let body = to_bytes(response.into_body(), usize::MAX).await.unwrap();
    (status, ctype, String::from_utf8(body.to_vec()).unwrap())
}

fn block_on<F: std::future::Future>(f: F) -> F::Output {
    tokio::runtime::Builder::new_current_thread()
        .enable_all()
        .build()
        .unwrap()
        .block_on(f)
}

/// Every value of `"key":` in `body` is written with exactly six decimals.
fn six_decimals(body: &str, key: &str) -> bool {
    let pat = format!("\"{key}\":");
    body.match_indices(&pat).all(|(at, _)| {
        let rest = &body[at + pat.len()..];
        let num: String = rest
            .chars()
            .take_while(|c| c.is_ascii_digit() || *c == '.')
            .collect();
        matches!(num.split_once('.'), Some((int, frac)) if !int.is_empty() && frac.len() == 6)
    })
}

fn check_matrix_json(body: &str, users: usize, total: usize) -> Result<(), String> {
    let v: Value = serde_json::from_str(body).map_err(|e| e.to_string())?;
    let list = v["users"].as_array().ok_or("users")?;
    ensure!(list.len() == users, "users {} != {users}", list.len());
    ensure!(
        v["total_count"] == total,
        "total_count {}",
        v["total_count"]
    );
    ensure!(
        v["forum_id"].is_string() && v["ordering"].is_string(),
        "ids"
    );
    let mut prev = None;
    let mut sum = 0;
    for cell in v["cells"].as_array().ok_or("cells")? {
        let (from, to) = (
            cell["from"].as_u64().ok_or("from")?,
            cell["to"].as_u64().ok_or("to")?,
        );
        ensure!(from != to, "diagonal cell");
        ensure!(
            (from as usize) < users && (to as usize) < users,
            "index out of range"
        );
        ensure!(prev < Some((from, to)), "cells out of order");
        prev = Some((from, to));
        let count = cell["count"].as_u64().ok_or("count")?;
        let trust: u64 = ["trust", "neutral", "mistrust"]
            .iter()
            .map(|k| cell["trust"][k].as_u64().unwrap_or(u64::MAX / 8))
            .sum();
        let sentiment: u64 = ["positive", "negative", "neutral", "unrelated"]
            .iter()
            .map(|k| cell["sentiment"][k].as_u64().unwrap_or(u64::MAX / 8))
            .sum();
        ensure!(
            trust == count && sentiment == count,
            "label counts do not sum to {count}"
        );
        ensure!(
            cell["dominant_trust"].is_string() && cell["dominant_sentiment"].is_string(),
            "dominant labels"
        );
        sum += count;
    }
    ensure!(sum as usize == total, "cells sum to {sum}");
    Ok(())
}

fn check_report_json(body: &str, forum: &str) -> Result<(), String> {
    let v: Value = serde_json::from_str(body).map_err(|e| e.to_string())?;
    ensure!(v["forum_id"] == forum, "forum_id");
    ensure!(v["n_users"].is_u64(), "n_users");
    for key in ["cosine", "dyad_reciprocity"] {
        ensure!(v["symmetry"][key].is_f64(), "symmetry.{key}");
    }
    for key in ["density", "cell_gini", "top2_share"] {
        ensure!(v["dispersion"][key].is_f64(), "dispersion.{key}");
    }
    ensure!(
        v["scan_lines"]["rows"].is_array() && v["scan_lines"]["cols"].is_array(),
        "scan_lines"
    );
    let class = v["classification"].as_str().unwrap_or("");
    ensure!(
        ["collective", "leader_dominated", "indeterminate"].contains(&class),
        "classification {class}"
    );
    ensure!(v["thresholds"].is_object(), "thresholds");
    for key in [
        "cosine",
        "dyad_reciprocity",
        "density",
        "cell_gini",
        "top2_share",
        "alpha",
        "tau_share",
    ] {
        ensure!(
            six_decimals(body, key),
            "{key} is not fixed to six decimals"
        );
    }
    Ok(())
}

fn api_contract() -> Outcome {
    let snap = generate_fixture(&corpus_spec()).map_err(|e| e.to_string())?;
    let metas = snap.forums().to_vec();
    let app = router(AppState::new(
        snap.clone(),
        Thresholds::default(),
        RenderSpec::default(),
    ));

    block_on(async {
        let (status, ctype, body) = get(&app, "/forums").await;
        ensure!(
            status == StatusCode::OK && ctype == "application/json",
            "/forums {status} {ctype}"
        );
        let list: Value = serde_json::from_str(&body).map_err(|e| e.to_string())?;
        let list = list.as_array().ok_or("forum list")?;
        ensure!(list.len() == 53, "{} forums listed", list.len());
        for (item, meta) in list.iter().zip(&metas) {
            ensure!(
                item["id"] == meta.id.as_str() && item["name"] == meta.display_name.as_str(),
                "forum order"
            );
            ensure!(
                item["user_count"] == meta.user_count
                    && item["interaction_count"] == meta.interaction_count,
                "forum counts"
            );
        }
        let (_, _, health) = get(&app, "/healthz").await;
        ensure!(
            serde_json::from_str::<Value>(&health).unwrap()
                == serde_json::json!({"status": "ok", "forums": 53}),
            "healthz {health}"
        );

        for meta in &metas {
            let id = meta.id.as_str();
            let (status, _, body) = get(&app, &format!("/forums/{id}/matrix")).await;
            ensure!(status == StatusCode::OK, "{id} matrix {status}");
            check_matrix_json(&body, meta.user_count, meta.interaction_count)
                .map_err(|e| format!("{id} matrix: {e}"))?;

            let (status, _, body) = get(&app, &format!("/forums/{id}/metrics")).await;
            ensure!(status == StatusCode::OK, "{id} metrics {status}");
            check_report_json(&body, id).map_err(|e| format!("{id} metrics: {e}"))?;

            let (status, ctype, body) = get(&app, &format!("/forums/{id}/render.svg")).await;
            ensure!(
                status == StatusCode::OK && ctype == "image/svg+xml",
                "{id} render {status} {ctype}"
            );
            let doc = roxmltree::Document::parse(&body).map_err(|e| format!("{id} svg: {e}"))?;
            let mut positions = BTreeSet::new();
            for node in doc
                .descendants()
                .filter(|n| n.attribute("data-from").is_some())
            {
                positions.insert((
                    node.attribute("data-from").unwrap().to_owned(),
                    node.attribute("data-to").unwrap().to_owned(),
                ));
            }
            ensure!(
                positions.len() == meta.user_count * meta.user_count,
                "{id} svg positions {}",
                positions.len()
            );
        }

        let f = metas[0].id.as_str();
        let cases = [
            ("/forums/nosuch/matrix".to_owned(), 404, "unknown_forum"),
            ("/forums/nosuch/metrics".to_owned(), 404, "unknown_forum"),
            ("/forums/nosuch/render.svg".to_owned(), 404, "unknown_forum"),
            ("/no/such/route".to_owned(), 404, "not_found"),
            (
                format!("/forums/{f}/matrix?order=bogus"),
                400,
                "invalid_ordering",
            ),
            (
                format!("/forums/{f}/matrix?layer=bogus"),
                400,
                "invalid_layer",
            ),
            (
                format!("/forums/{f}/metrics?tau_share=1.5"),
                400,
                "invalid_threshold",
            ),
            (
                format!("/forums/{f}/metrics?alpha=0"),
                400,
                "invalid_threshold",
            ),
            (
                format!("/forums/{f}/render.svg?cell_px=2"),
                400,
                "invalid_cell_px",
            ),
            (
                format!("/forums/{f}/render.svg?layer=bogus"),
                400,
                "invalid_layer",
            ),
        ];
        for (uri, want, token) in &cases {
            let (status, ctype, body) = get(&app, uri).await;
            ensure!(
                status.as_u16() == *want && ctype == "application/json",
                "{uri}: {status} {ctype}"
            );
            let v: Value = serde_json::from_str(&body).map_err(|e| e.to_string())?;
            ensure!(v["error"] == *token, "{uri}: {body}");
        }

        let big = generate_fixture(&FixtureSpec {
            forum_count: 1,
            user_count: 501,
            interaction_count: 700,
            regimes: RegimePlan::Uniform(Regime::Dispersed),
            seed: 3,
        })
        .map_err(|e| e.to_string())?;
        let big_id = big.forums()[0].id.to_string();
        let big_app = router(AppState::new(
            big,
            Thresholds::default(),
            RenderSpec::default(),
        ));
        let (status, _, body) = get(&big_app, &format!("/forums/{big_id}/render.svg")).await;
        ensure!(
            status == StatusCode::PAYLOAD_TOO_LARGE,
            "cap status {status}"
        );
        let v: Value = serde_json::from_str(&body).map_err(|e| e.to_string())?;
        ensure!(
            v == serde_json::json!({"error": "too_many_users", "n": 501, "cap": 500}),
            "cap body {body}"
        );
        Ok::<_, String>(())
    })?;

    // the CLI and the service print the same bytes
    let dir = TempDir::new().map_err(|e| e.to_string())?;
    let csv = dir.path().join("corpus.csv");
    std::fs::write(&csv, snap.to_csv_string()).unwrap();
    let id = metas[5].id.as_str();
    let (cli, _) = intermap(&[
        "matrix",
        "--data",
        path_str(&csv),
        "--forum",
        id,
        "--order",
        "lexicographic",
    ])?;
    let served = block_on(get(
        &app,
        &format!("/forums/{id}/matrix?order=lexicographic"),
    ))
    .2;
    ensure!(cli == served, "CLI and service matrix bodies differ");
    ensure!(
        cli == api::matrix_json(&snap, id, UserOrdering::Lexicographic).unwrap(),
        "api body differs"
    );

    Ok(format!(
        "53 forums validated on all routes; {} error paths + 413 cap",
        10
    ))
}

fn performance() -> Outcome {
    let snap: DatasetSnapshot = generate_fixture(&FixtureSpec {
        forum_count: 1,
        user_count: 1000,
        interaction_count: 10_000,
        regimes: RegimePlan::Uniform(Regime::Dispersed),
        seed: 10,
    })
    .map_err(|e| e.to_string())?;
    let records = snap.forum_records(snap.forums()[0].id.as_str()).unwrap();
    let start = Instant::now();
    let m = build_matrix(records, UserOrdering::default()).unwrap();
    let report = pattern_report(&m, &Thresholds::default()).unwrap();
    let elapsed = start.elapsed();
    ensure!(
        report.n_users == 1000 && m.total_count() == 10_000,
        "fixture shape"
    );
    ensure!(elapsed < PERF_BUDGET, "took {elapsed:?}");
    Ok(format!(
        "1000 users / 10000 records built and scored in {elapsed:.2?}"
    ))
}

fn main() -> ExitCode {
    let criteria: [(&str, Check); 10] = [
        ("corpus aggregates", corpus_aggregates),
        ("oracle equivalence", oracle_equivalence),
        ("analytic fixed points", fixed_points),
        ("worked example", worked_example),
        ("regime recovery", regime_recovery),
        ("invariance suite", invariance),
        ("determinism and golden SVG", determinism),
        ("diagonal exclusion", diagonal_exclusion),
        ("API contract", api_contract),
        ("performance", performance),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    println!("acceptance: {} criteria", criteria.len());
    for (k, (name, check)) in criteria.iter().enumerate() {
        let outcome = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(detail) => println!("PASS  {:>2}. {name}: {detail}", k + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL  {:>2}. {name}: {why}", k + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
