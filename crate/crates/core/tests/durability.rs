mod common;

use std::fs::OpenOptions;
use std::io::Write;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::thread;
use std::time::Duration;

use serde_json::{json, Value};

use common::demo::write_config;
use common::server::{get, post, ServeProcess};

fn transcript(base: &str, id: &str) -> Value {
    let (status, t) = get(&format!("{base}/sessions/{id}/transcript")).unwrap();
    assert_eq!(status, 200, "{t}");
    t
}

#[test]
fn kill_and_restart_keeps_acknowledged_turns() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), |_| {});
    let server = ServeProcess::spawn(&config);
    let base = server.base.clone();
    let (status, created) = post(
        &format!("{base}/sessions"),
        &json!({"spot_a_id": "shirakawa-garden", "spot_b_id": "minato-aquarium"}),
    )
    .unwrap();
    assert_eq!(status, 201);
    let id = created["session_id"].as_str().unwrap().to_string();
    for text in ["I'm Ken", "ok", "by car"] {
        post(
            &format!("{base}/sessions/{id}/utterance"),
            &json!({ "text": text }),
        )
        .unwrap();
    }

    // Keep talking from another thread and kill the server part-way.
    let acked = Arc::new(AtomicUsize::new(0));
    let talker = {
        let (base, id, acked) = (base.clone(), id.clone(), acked.clone());
        thread::spawn(move || {
            for i in 0.. {
                let url = format!("{base}/sessions/{id}/utterance");
                match post(
                    &url,
                    &json!({ "text": format!("What are the hours of operation? {i}") }),
                ) {
                    Ok((200, _)) => acked.fetch_add(1, Ordering::SeqCst),
                    _ => break,
                };
            }
        })
    };
    thread::sleep(Duration::from_millis(400));
    server.kill();
    talker.join().unwrap();
    let acked = acked.load(Ordering::SeqCst);
    assert!(acked > 0, "no utterance got through before the kill");

    let server = ServeProcess::spawn(&config);
    let t = transcript(&server.base, &id);
    let turns = t["turns"].as_array().unwrap();
    for (i, turn) in turns.iter().enumerate() {
        assert_eq!(turn["seq"], i as u64);
    }
    let visitor_qa = turns
        .iter()
        .filter(|t| {
            t["speaker"] == "visitor" && t["text"].as_str().unwrap().starts_with("What are")
        })
        .count();
    // Every acknowledged exchange is on disk; at most one more was written
    // but not acknowledged when the process died.
    assert!(
        visitor_qa == acked || visitor_qa == acked + 1,
        "{visitor_qa} vs {acked}"
    );
    assert_eq!(turns.last().unwrap()["speaker"], "robot");

    let (status, r) = post(
        &format!("{}/sessions/{id}/utterance", server.base),
        &json!({"text": "Can I park my car there?"}),
    )
    .unwrap();
    assert_eq!(status, 200, "{r}");
    assert_eq!(r["debug"]["category"], "Parking");
}

#[test]
fn torn_trailing_line_is_dropped() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), |_| {});
    let server = ServeProcess::spawn(&config);
    let base = server.base.clone();
    let (_, created) = post(
        &format!("{base}/sessions"),
        &json!({"spot_a_id": "takamine-castle", "spot_b_id": "aozora-art-museum"}),
    )
    .unwrap();
    let id = created["session_id"].as_str().unwrap().to_string();
    post(
        &format!("{base}/sessions/{id}/utterance"),
        &json!({"text": "Call me Yui"}),
    )
    .unwrap();
    let before = transcript(&base, &id);
    server.kill();

    let log = dir.path().join("logs").join(format!("{id}.jsonl"));
    let mut f = OpenOptions::new().append(true).open(&log).unwrap();
    f.write_all(br#"{"kind":"turn","session_id":"#).unwrap();
    drop(f);

    let server = ServeProcess::spawn(&config);
    assert_eq!(transcript(&server.base, &id), before);
    let (status, _) = post(
        &format!("{}/sessions/{id}/utterance", server.base),
        &json!({"text": "sounds nice"}),
    )
    .unwrap();
    assert_eq!(status, 200);
    // The log is clean again: every line parses.
    for line in std::fs::read_to_string(&log).unwrap().lines() {
        serde_json::from_str::<Value>(line).unwrap();
    }
}
