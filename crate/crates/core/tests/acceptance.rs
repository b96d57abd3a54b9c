//! Acceptance checks. Runs as a plain binary and prints one PASS/FAIL line
//! per criterion; exits non-zero if any fail.

mod common;

use std::io::{BufRead, BufReader, Write};
use std::panic;
use std::path::Path;
use std::process::{Command, Stdio};
use std::sync::mpsc;
use std::thread;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use common::demo::{demo_dir, demo_resources, write_config};
use common::oracle;
use common::server::{get, post, ServeProcess};
use tourdesk::attractions::{nearby_restaurants, Attraction, FixtureProvider, Place};
use tourdesk::dialogue::{DialogueState, RecommendPolicy, Resolution};
use tourdesk::embeddings::{EmbeddedUtterance, EmbeddingStore};
use tourdesk::expression::{params_for, ExpressionTable, SMILE, SURPRISE};
use tourdesk::intent::{classify, Classification};
use tourdesk::similarity::{
    cosine, norm_masses, solve_ot, two_stage_similarity, wrd_distance, CostMatrix, Method,
    Thresholds,
};

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($arg:tt)*) => {
        // A NaN comparison must fail, so no `!$cond`.
        match $cond {
            true => {}
            false => return Err(format!($($arg)*)),
        }
    };
}

type Check = fn() -> Outcome;

fn main() {
    let criteria: [(&str, Check); 9] = [
        ("ot-exactness", ot_exactness),
        ("wrd-properties", wrd_properties),
        ("two-stage-rule", two_stage_rule),
        ("intent-sample-questions", intent_sample_questions),
        ("expression-table", expression_table),
        ("flow-conformance", flow_conformance),
        ("affirmation", affirmation),
        ("places", places),
        ("service-durability", service_durability),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (name, check) in criteria {
        let start = Instant::now();
        let outcome = panic::catch_unwind(check).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            Err(format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {name} ({secs:.2}s): {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {name} ({secs:.2}s): {detail}");
            }
        }
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}

fn random_vec(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect()
}

/// Exact OT value against brute-force enumeration of basic solutions.
fn ot_exactness() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x07_2022);
    let mut worst: f64 = 0.0;
    for i in 0..500 {
        let n = rng.random_range(1..=4);
        let m = rng.random_range(1..=4);
        let xs: Vec<Vec<f64>> = (0..n).map(|_| random_vec(&mut rng, 5)).collect();
        let ys: Vec<Vec<f64>> = (0..m).map(|_| random_vec(&mut rng, 5)).collect();
        let a = norm_masses(&xs).map_err(|e| e.to_string())?;
        let b = norm_masses(&ys).map_err(|e| e.to_string())?;
        let cost: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..m).map(|_| rng.random_range(0.0..=2.0)).collect())
            .collect();
        let plan = solve_ot(
            &a,
            &b,
            &CostMatrix::from_rows(&cost).map_err(|e| e.to_string())?,
        )
        .map_err(|e| format!("instance {i}: {e}"))?;
        let expected = oracle::exhaustive_ot(a.as_slice(), b.as_slice(), &cost);
        let diff = (plan.value - expected).abs();
        worst = worst.max(diff);
        ensure!(
            diff <= 1e-9,
            "instance {i} ({n}x{m}): solver {} vs oracle {expected}",
            plan.value
        );
    }
    let secs = start.elapsed().as_secs_f64();
    ensure!(secs < 60.0, "took {secs:.1}s");
    Ok(format!("500 instances, max deviation {worst:.2e}"))
}

/// A 50-word synthetic vector file, loaded through the normal reader.
fn synthetic_store(rng: &mut ChaCha8Rng) -> Result<EmbeddingStore, String> {
    let dim = 8;
    let mut text = format!("50 {dim}\n");
    for w in 0..50 {
        let scale = rng.random_range(0.2..4.0);
        let v: Vec<String> = random_vec(rng, dim)
            .iter()
            .map(|x| format!("{:.6}", x * scale))
            .collect();
        text.push_str(&format!("w{w} {}\n", v.join(" ")));
    }
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let path = dir.path().join("vectors.txt");
    std::fs::write(&path, text).map_err(|e| e.to_string())?;
    EmbeddingStore::load(&path).map_err(|e| e.to_string())
}

fn random_sentence(
    rng: &mut ChaCha8Rng,
    store: &EmbeddingStore,
    max_len: usize,
) -> EmbeddedUtterance {
    let len = rng.random_range(1..=max_len);
    EmbeddedUtterance::from_vectors((0..len).map(|_| {
        let w = format!("w{}", rng.random_range(0..50));
        let v = store.get(&w).unwrap().to_vec();
        (w, v)
    }))
}

fn wrd_properties() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(50);
    let store = synthetic_store(&mut rng)?;
    ensure!(store.len() == 50, "store has {} words", store.len());
    let pairs = 250;
    let (mut worst_id, mut worst_sym, mut worst_scale, mut worst_oracle) = (0f64, 0f64, 0f64, 0f64);
    for i in 0..pairs {
        let a = random_sentence(&mut rng, &store, 6);
        let b = random_sentence(&mut rng, &store, 6);
        let d = |x: &EmbeddedUtterance, y: &EmbeddedUtterance| wrd_distance(x, y).unwrap();

        let id = d(&a, &a);
        worst_id = worst_id.max(id.abs());
        ensure!(id.abs() <= 1e-9, "pair {i}: identity distance {id}");

        let (ab, ba) = (d(&a, &b), d(&b, &a));
        worst_sym = worst_sym.max((ab - ba).abs());
        ensure!((ab - ba).abs() <= 1e-9, "pair {i}: {ab} vs {ba}");
        ensure!(
            (0.0..=2.0).contains(&ab),
            "pair {i}: distance {ab} out of range"
        );

        // The oracle enumerates spanning trees, so keep it to small pairs.
        if a.len() <= 4 && b.len() <= 4 {
            let o = oracle::wrd_distance(&a.vectors, &b.vectors);
            worst_oracle = worst_oracle.max((ab - o).abs());
            ensure!((ab - o).abs() <= 1e-9, "pair {i}: {ab} vs oracle {o}");
        }

        // Scaling every vector of one sentence by the same factor.
        let c = rng.random_range(0.1..10.0);
        let scaled = EmbeddedUtterance::from_vectors(
            a.tokens
                .iter()
                .zip(&a.vectors)
                .map(|(t, v)| (t.clone(), v.iter().map(|x| x * c).collect::<Vec<f64>>())),
        );
        let s = d(&scaled, &b);
        worst_scale = worst_scale.max((s - ab).abs());
        ensure!(
            (s - ab).abs() <= 1e-9,
            "pair {i}: scaled by {c}: {s} vs {ab}"
        );

        let x = random_sentence(&mut rng, &store, 1);
        let y = random_sentence(&mut rng, &store, 1);
        let single = d(&x, &y);
        let expected = 1.0 - cosine(&x.vectors[0], &y.vectors[0]);
        ensure!(
            single == expected,
            "pair {i}: single word {single} vs 1-cos {expected}"
        );
        let independent = 1.0 - oracle::cosine(&x.vectors[0], &y.vectors[0]);
        ensure!(
            (single - independent).abs() <= 1e-12,
            "pair {i}: {single} vs {independent}"
        );
    }
    Ok(format!(
        "{pairs} pairs; max identity {worst_id:.1e}, symmetry {worst_sym:.1e}, scale {worst_scale:.1e}, oracle {worst_oracle:.1e}"
    ))
}

/// Threshold just above / below a pair's WRD score flips the method.
fn two_stage_rule() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let store = synthetic_store(&mut rng)?;
    let mut cases = 0;
    for k in 0..3 {
        let a = random_sentence(&mut rng, &store, 4);
        let b = random_sentence(&mut rng, &store, 4);
        let score = 1.0 - oracle::wrd_distance(&a.vectors, &b.vectors);
        for (offset, expected) in [(-0.01, Method::Wrd), (0.01, Method::CosineMean)] {
            let thresholds = Thresholds {
                wrd_fallback: score + offset,
                ..Thresholds::default()
            };
            let r = two_stage_similarity(&a, &b, &thresholds).map_err(|e| e.to_string())?;
            ensure!(
                r.method == expected,
                "pair {k}, fallback {}: got {:?}",
                score + offset,
                r.method
            );
            let expected_score = match expected {
                Method::Wrd => score,
                Method::CosineMean => oracle::cosine_of_means(&a.vectors, &b.vectors),
            };
            ensure!(
                (r.score - expected_score).abs() <= 1e-9,
                "pair {k}: score {} vs {expected_score}",
                r.score
            );
            cases += 1;
        }
    }
    Ok(format!("{cases} cases"))
}

fn intent_sample_questions() -> Outcome {
    let res = demo_resources(|_| {});
    ensure!(
        res.engine.thresholds == Thresholds::default(),
        "demo config changes thresholds"
    );
    let e = &res.engine;
    let mut seen = Vec::new();
    for (q, want) in [
        ("How much is the entrance fee?", "PriceRemark"),
        ("What are the hours of operation?", "TimeRemark"),
        ("Can I park my car there?", "Parking"),
    ] {
        match classify(
            q,
            &e.registry,
            &e.store,
            e.segmenter.as_ref(),
            &e.thresholds,
        ) {
            Classification::Matched {
                category, score, ..
            } => {
                ensure!(category == want, "{q:?} -> {category}");
                ensure!(score == 1.0, "{q:?} scored {score}");
                seen.push(format!("{category}={score}"));
            }
            other => return Err(format!("{q:?} -> {other:?}")),
        }
    }
    Ok(seen.join(", "))
}

fn expression_table() -> Outcome {
    let file =
        ExpressionTable::load(demo_dir().join("expression.json")).map_err(|e| e.to_string())?;
    for (label, table) in [
        ("built-in", ExpressionTable::default()),
        ("demo file", file),
    ] {
        let smile = params_for(&table, SMILE).params.components();
        let surprise = params_for(&table, SURPRISE).params.components();
        ensure!(smile == [0.3, 0.2, 0.1, 0.0], "{label} smile {smile:?}");
        ensure!(
            surprise == [0.1, 0.2, -0.8, 0.0],
            "{label} surprise {surprise:?}"
        );
    }
    Ok("smile (0.3, 0.2, 0.1, 0.0), surprise (0.1, 0.2, -0.8, 0.0)".into())
}

/// REPL child process with line-at-a-time stdin and captured stdout.
struct Repl {
    child: std::process::Child,
    stdin: std::process::ChildStdin,
    lines: mpsc::Receiver<String>,
    seen: Vec<String>,
}

impl Repl {
    fn spawn(config: &Path, extra: &[&str]) -> Repl {
        let mut child = Command::new(env!("CARGO_BIN_EXE_tourdesk"))
            .args(["repl", "--config"])
            .arg(config)
            .args(["--spots", "shirakawa-garden,minato-aquarium"])
            .args(extra)
            .env_remove("PLACES_API_KEY")
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()
            .expect("spawn repl");
        let stdin = child.stdin.take().unwrap();
        let stdout = child.stdout.take().unwrap();
        let (tx, lines) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                let Ok(line) = line else { break };
                // Prompts share a line with the next output.
                let line = line.trim_start_matches("> ").to_string();
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        Repl {
            child,
            stdin,
            lines,
            seen: Vec::new(),
        }
    }

    fn say(&mut self, text: &str) {
        writeln!(self.stdin, "{text}").unwrap();
        self.stdin.flush().unwrap();
    }

    /// Waits for the next `[state: ...]` line; returns (reply, state line).
    fn reply(&mut self) -> Result<(String, String), String> {
        let mut reply = String::new();
        loop {
            let line = self
                .lines
                .recv_timeout(Duration::from_secs(5))
                .map_err(|_| format!("no output; so far: {:?}", self.seen))?;
            self.seen.push(line.clone());
            if let Some(r) = line.strip_prefix("guide: ") {
                reply = r.to_string();
            } else if line.starts_with("[state: ") {
                return Ok((reply, line));
            }
        }
    }

    fn finish(mut self) -> Result<Vec<String>, String> {
        let status = self.child.wait().map_err(|e| e.to_string())?;
        self.seen.extend(self.lines.iter());
        ensure!(status.success(), "repl exited with {status}");
        Ok(self.seen)
    }
}

fn flow_conformance() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let config = write_config(dir.path(), |_| {});

    // Car visitor, run into the deadline.
    let start = Instant::now();
    let mut repl = Repl::spawn(&config, &["--deadline-secs", "2"]);
    let (greeting, state) = repl.reply()?;
    ensure!(
        state.starts_with("[state: AskName]"),
        "after greeting: {state}"
    );
    ensure!(greeting.contains("name"), "greeting: {greeting}");

    repl.say("My name is Ken");
    let (overview, state) = repl.reply()?;
    ensure!(
        state.starts_with("[state: Overview]"),
        "after name: {state}"
    );
    let (other, rec) = (
        overview.find("Shirakawa Sakura Garden"),
        overview.find("Minato Harbor Aquarium"),
    );
    ensure!(
        matches!((other, rec), (Some(o), Some(r)) if o < r),
        "recommended spot not second: {overview}"
    );

    repl.say("Sounds lovely");
    let (_, state) = repl.reply()?;
    ensure!(state.starts_with("[state: AskTransport]"), "{state}");

    repl.say("by car");
    let (recommend, state) = repl.reply()?;
    ensure!(state.starts_with("[state: QA]"), "{state}");
    ensure!(
        recommend.contains("recommend Minato Harbor Aquarium"),
        "{recommend}"
    );
    ensure!(
        recommend.contains("parking lot"),
        "no parking justification: {recommend}"
    );

    let mut third = String::new();
    for (i, q) in [
        "How much is the entrance fee?",
        "What are the hours of operation?",
        "Can I park my car there?",
    ]
    .iter()
    .enumerate()
    {
        repl.say(q);
        let (reply, state) = repl.reply()?;
        ensure!(state.starts_with("[state: QA]"), "{q}: {state}");
        let prefixed = reply.starts_with("Ken, ");
        ensure!(prefixed == (i == 2), "QA reply {}: {reply}", i + 1);
        third = reply;
    }

    let elapsed = start.elapsed();
    if elapsed < Duration::from_millis(2100) {
        thread::sleep(Duration::from_millis(2100) - elapsed);
    }
    repl.say("Are there any good restaurants nearby?");
    let (wrap, state) = repl.reply()?;
    ensure!(
        state.starts_with("[state: Closing]"),
        "after deadline: {state} ({wrap})"
    );
    repl.say(":quit");
    repl.say("");
    let out = repl.finish()?;
    ensure!(
        out.iter().any(|l| l.starts_with("Questionnaire")),
        "no questionnaire prompt"
    );
    let car_secs = start.elapsed().as_secs_f64();
    ensure!(car_secs < 5.0, "car session took {car_secs:.2}s");

    // Train visitor.
    let start = Instant::now();
    let mut repl = Repl::spawn(&config, &[]);
    repl.reply()?;
    repl.say("I'm Ken");
    repl.reply()?;
    repl.say("ok");
    repl.reply()?;
    repl.say("We'll take the train");
    let (recommend, _) = repl.reply()?;
    ensure!(
        recommend.contains("train from Minato Pier Station"),
        "no train justification: {recommend}"
    );
    repl.say(":quit");
    let (_, state) = repl.reply()?;
    ensure!(state.starts_with("[state: Closed]"), "{state}");
    repl.say("");
    repl.finish()?;
    let train_secs = start.elapsed().as_secs_f64();
    ensure!(train_secs < 5.0, "train session took {train_secs:.2}s");

    Ok(format!(
        "car {car_secs:.2}s, train {train_secs:.2}s; 3rd QA reply: {:?}",
        third.chars().take(40).collect::<String>()
    ))
}

fn affirmation() -> Outcome {
    let res = demo_resources(|_| {});
    let e = &res.engine;
    let spot = |id: &str| res.attractions.get(id).unwrap().clone();
    let t = 1_700_000_000_000;
    let (mut s, _) = e
        .start(
            "a",
            spot("shirakawa-garden"),
            spot("minato-aquarium"),
            &RecommendPolicy::MoreData,
            t,
        )
        .map_err(|e| e.to_string())?;
    for text in ["I'm Ken", "ok", "by car"] {
        e.advance(&mut s, text, t + 1).map_err(|e| e.to_string())?;
    }
    let offer = s
        .core
        .pending_offer
        .clone()
        .ok_or("no offer after recommendation")?;
    let r = e
        .advance(&mut s, "it's okay", t + 2)
        .map_err(|e| e.to_string())?;
    let d = r.debug.clone().ok_or("no debug info")?;
    ensure!(d.resolved_by == Resolution::Affirmation, "{d:?}");
    ensure!(
        d.category.as_deref() == Some(offer.category.as_str()),
        "{d:?} vs {offer:?}"
    );
    ensure!(
        r.text.contains("2400 yen"),
        "offered fee not given: {}",
        r.text
    );

    // No offer pending: a clarification reply leaves nothing to accept.
    e.advance(&mut s, "blah blah", t + 3)
        .map_err(|e| e.to_string())?;
    ensure!(
        s.core.pending_offer.is_none(),
        "offer pending after clarification"
    );
    let r = e
        .advance(&mut s, "it's okay", t + 4)
        .map_err(|e| e.to_string())?;
    ensure!(r.new_state == DialogueState::QA, "{:?}", r.new_state);
    ensure!(
        r.text.contains("not sure what you mean") && r.text.ends_with('?'),
        "expected a disambiguation question: {}",
        r.text
    );
    Ok(format!(
        "offer {} answered; bare okay -> question",
        offer.category
    ))
}

fn places() -> Outcome {
    // Hand-built fixture: places due north of the spot at known distances.
    let center = (35.0, 139.0);
    let meters_per_degree = 6_371_008.8 * std::f64::consts::PI / 180.0;
    let north = |m: f64| center.0 + m / meters_per_degree;
    let fixture: Vec<Place> = [
        ("C", 650.0),
        ("A", 90.0),
        ("E", 1500.0),
        ("B", 300.0),
        ("D", 799.0),
    ]
    .iter()
    .map(|&(name, m)| Place {
        name: name.into(),
        lat: north(m),
        lng: center.1,
        rating: None,
    })
    .collect();
    let spot: Attraction = serde_json::from_value(json!({
        "id": "s", "name": "S", "location": {"lat": center.0, "lng": center.1}
    }))
    .map_err(|e| e.to_string())?;
    let provider = FixtureProvider::new(fixture);
    let found = nearby_restaurants(&provider, &spot, 800.0).map_err(|e| e.to_string())?;
    let names: Vec<&str> = found.iter().map(|r| r.name.as_str()).collect();
    ensure!(names == ["A", "B", "C", "D"], "got {names:?}");
    for (r, m) in found.iter().zip([90.0, 300.0, 650.0, 799.0]) {
        ensure!(
            (r.distance_m - m).abs() < 0.5,
            "{} at {} m, expected {m}",
            r.name,
            r.distance_m
        );
    }

    // Live mode with no key refuses to start.
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let config = write_config(dir.path(), |v| {
        v["places"] = json!({"mode": "live", "base_url": "http://127.0.0.1:9/nearby"});
    });
    let out = Command::new(env!("CARGO_BIN_EXE_tourdesk"))
        .args(["classify", "--config"])
        .arg(&config)
        .arg("hello")
        .env_remove("PLACES_API_KEY")
        .output()
        .map_err(|e| e.to_string())?;
    let stderr = String::from_utf8_lossy(&out.stderr);
    ensure!(!out.status.success(), "live mode without key started");
    ensure!(
        stderr.contains("PLACES_API_KEY"),
        "error does not name the key: {stderr}"
    );
    Ok(format!(
        "{} within 800 m in distance order; live without key: {}",
        names.len(),
        stderr.trim()
    ))
}

fn service_durability() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let config = write_config(dir.path(), |_| {});
    let server = ServeProcess::spawn(&config);
    let base = server.base.clone();
    let (status, created) = post(
        &format!("{base}/sessions"),
        &json!({"spot_a_id": "shirakawa-garden", "spot_b_id": "minato-aquarium"}),
    )
    .map_err(|e| e.to_string())?;
    ensure!(status == 201, "create: {status} {created}");
    let id = created["session_id"]
        .as_str()
        .ok_or("no session id")?
        .to_string();
    for text in ["I'm Ken", "ok", "by train", "How much is the entrance fee?"] {
        let (status, body) = post(
            &format!("{base}/sessions/{id}/utterance"),
            &json!({ "text": text }),
        )
        .map_err(|e| e.to_string())?;
        ensure!(status == 200, "{text}: {status} {body}");
    }
    let (_, before) =
        get(&format!("{base}/sessions/{id}/transcript")).map_err(|e| e.to_string())?;
    server.kill();

    let server = ServeProcess::spawn(&config);
    let (status, after) =
        get(&format!("{}/sessions/{id}/transcript", server.base)).map_err(|e| e.to_string())?;
    ensure!(status == 200, "transcript after restart: {status}");
    ensure!(before == after, "transcript changed across restart");
    let turns = after["turns"].as_array().map_or(0, |t| t.len());
    let (status, body) = post(
        &format!("{}/sessions/{id}/utterance", server.base),
        &json!({"text": "What are the hours of operation?"}),
    )
    .map_err(|e| e.to_string())?;
    ensure!(
        status == 200 && body["state"] == "QA",
        "continue after restart: {status} {body}"
    );
    Ok(format!("{turns} turns intact after SIGKILL and restart"))
}
