mod common;

use std::path::Path;
use std::sync::mpsc;
use std::thread;

use serde_json::{json, Value};
use srcsent_cli::service::{load_score_dir, serve, AppState};
use srcsent_core::corpus::load_pairs;
use srcsent_core::pipeline::AnnotationStore;
use srcsent_core::score::write_scores;
use srcsent_core::ScoreVector;

use common::fixture;

struct Server {
    base: String,
    stop: Option<mpsc::Sender<()>>,
    handle: Option<thread::JoinHandle<()>>,
}

impl Server {
    fn start(corpus: &Path, log: &Path, scores: Option<&Path>) -> Self {
        let pairs = load_pairs(corpus).unwrap();
        let store = AnnotationStore::open(log).unwrap();
        let scores = scores
            .map(|d| load_score_dir(d).unwrap())
            .unwrap_or_default();
        let state = AppState::new(pairs, store, scores);
        let (addr_tx, addr_rx) = mpsc::channel();
        let (stop_tx, stop_rx) = mpsc::channel::<()>();
        let handle = thread::spawn(move || {
            let rt = tokio::runtime::Runtime::new().unwrap();
            rt.block_on(async move {
                let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
                addr_tx.send(listener.local_addr().unwrap()).unwrap();
                let shutdown = async move {
                    let _ = tokio::task::spawn_blocking(move || stop_rx.recv()).await;
                };
                serve(listener, state, shutdown).await.unwrap();
            });
        });
        let addr = addr_rx.recv().unwrap();
        Self {
            base: format!("http://{addr}"),
            stop: Some(stop_tx),
            handle: Some(handle),
        }
    }

    fn url(&self, path: &str) -> String {
        format!("{}{path}", self.base)
    }

    fn get(&self, path: &str) -> (u16, Value) {
        respond(ureq::get(&self.url(path)).call())
    }

    fn post(&self, path: &str, annotator: Option<&str>, body: &Value) -> (u16, Value) {
        let mut req = ureq::post(&self.url(path));
        if let Some(a) = annotator {
            req = req.set("Authorization", &format!("Bearer {a}"));
        }
        respond(req.send_json(body.clone()))
    }
}

impl Drop for Server {
    fn drop(&mut self) {
        drop(self.stop.take());
        if let Some(h) = self.handle.take() {
            h.join().unwrap();
        }
    }
}

fn respond(r: Result<ureq::Response, ureq::Error>) -> (u16, Value) {
    match r {
        Ok(resp) => (resp.status(), resp.into_json().unwrap_or(Value::Null)),
        Err(ureq::Error::Status(code, resp)) => (code, resp.into_json().unwrap_or(Value::Null)),
        Err(e) => panic!("transport: {e}"),
    }
}

fn labels(n: usize, on: usize) -> Value {
    json!((0..n).map(|i| u8::from(i == on)).collect::<Vec<_>>())
}

#[test]
fn write_then_read_then_gold() {
    let dir = tempfile::tempdir().unwrap();
    let fx = fixture(dir.path());
    let log = dir.path().join("live/annotations.jsonl");
    let server = Server::start(&fx.corpus, &log, None);
    let pair = &fx.pairs[0];
    let n = pair.len();

    assert_eq!(server.get("/health").0, 200);
    let (status, body) = server.get(&format!("/pairs/{}", pair.pair_id));
    assert_eq!(status, 200);
    assert_eq!(body["sentences"].as_array().unwrap().len(), n);
    assert_eq!(body["summary"], pair.summary.as_str());

    let path = format!("/pairs/{}/annotations", pair.pair_id);
    for a in ["ann-1", "ann-2"] {
        let (status, body) = server.post(
            &path,
            Some(a),
            &json!({ "sentence_labels": labels(n, fx.sources[0]), "reconstructability": "yes" }),
        );
        assert_eq!(status, 201, "{body}");
        assert_eq!(body["annotator_id"], a);
    }
    let (_, records) = server.get(&path);
    assert_eq!(records.as_array().unwrap().len(), 2);

    let (status, gold) = server.get(&format!("/pairs/{}/gold", pair.pair_id));
    assert_eq!(status, 200);
    assert_eq!(gold["sources"], json!([fx.sources[0]]));
    assert_eq!(gold["n_annotators"], 2);

    let (_, agreement) = server.get("/agreement");
    assert_eq!(agreement["source_alpha"], 1.0);
    assert_eq!(agreement["annotators"], 2);
}

#[test]
fn rejected_submissions_persist_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let fx = fixture(dir.path());
    let log = dir.path().join("log.jsonl");
    let server = Server::start(&fx.corpus, &log, None);
    let pair = &fx.pairs[1];
    let n = pair.len();
    let path = format!("/pairs/{}/annotations", pair.pair_id);

    let mut partial = vec![json!(1); n];
    partial[2] = Value::Null;
    let (status, body) = server.post(&path, Some("x"), &json!({ "sentence_labels": partial }));
    assert_eq!(status, 422);
    assert!(body["fields"]["sentence_labels[2]"].is_string(), "{body}");
    assert!(body["fields"]["reconstructability"].is_string(), "{body}");

    let (status, body) = server.post(
        &path,
        Some("x"),
        &json!({ "sentence_labels": labels(n, 0), "reconstructability": "maybe" }),
    );
    assert_eq!(status, 422);
    assert!(body["fields"]["reconstructability"].is_string());

    let good = json!({ "sentence_labels": labels(n, 0), "reconstructability": "no" });
    assert_eq!(server.post(&path, None, &good).0, 401);
    assert_eq!(
        server.post("/pairs/nope/annotations", Some("x"), &good).0,
        404
    );
    assert_eq!(server.get("/annotations").1, json!([]));
    assert_eq!(std::fs::read_to_string(&log).unwrap(), "");

    assert_eq!(server.post(&path, Some("x"), &good).0, 201);
    assert_eq!(server.post(&path, Some("x"), &good).0, 409);
    assert_eq!(std::fs::read_to_string(&log).unwrap().lines().count(), 1);
}

#[test]
fn annotator_queue_skips_submitted_pairs() {
    let dir = tempfile::tempdir().unwrap();
    let fx = fixture(dir.path());
    let server = Server::start(&fx.corpus, &dir.path().join("log.jsonl"), None);
    let (_, all) = server.get("/pairs?annotator=z");
    assert_eq!(all.as_array().unwrap().len(), 12);
    let p = &fx.pairs[3];
    let body = json!({ "sentence_labels": labels(p.len(), 1), "reconstructability": "partly" });
    assert_eq!(
        server
            .post(
                &format!("/pairs/{}/annotations", p.pair_id),
                Some("z"),
                &body
            )
            .0,
        201
    );
    let (_, left) = server.get("/pairs?annotator=z");
    let ids: Vec<&str> = left
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v["pair_id"].as_str().unwrap())
        .collect();
    assert_eq!(ids.len(), 11);
    assert!(!ids.contains(&p.pair_id.as_str()));
    assert_eq!(
        server
            .get("/pairs?annotator=other")
            .1
            .as_array()
            .unwrap()
            .len(),
        12
    );
    let (_, everything) = server.get("/pairs");
    assert_eq!(everything[3]["annotations"], 1);
    assert_eq!(everything[0]["split"], "xsum_reference");
}

#[test]
fn scores_by_method() {
    let dir = tempfile::tempdir().unwrap();
    let fx = fixture(dir.path());
    let scores = dir.path().join("scores");
    std::fs::create_dir_all(&scores).unwrap();
    let p = &fx.pairs[0];
    let mut s = vec![0.0; p.len()];
    s[1] = 2.0;
    s[0] = 1.0;
    let v = ScoreVector::new(p.pair_id.clone(), "toy", s.clone());
    write_scores(
        std::fs::File::create(scores.join("toy.scores.jsonl")).unwrap(),
        &[v],
    )
    .unwrap();
    std::fs::write(scores.join("notes.txt"), "ignored").unwrap();

    let server = Server::start(&fx.corpus, &dir.path().join("log.jsonl"), Some(&scores));
    let (status, body) = server.get(&format!("/pairs/{}/scores?method=toy", p.pair_id));
    assert_eq!(status, 200);
    assert_eq!(body["scores"], json!(s));
    assert_eq!(body["ranking"][0], 1);
    assert_eq!(body["ranking"][1], 0);

    let (status, body) = server.get(&format!("/pairs/{}/scores?method=bogus", p.pair_id));
    assert_eq!(status, 404);
    assert_eq!(body["available"], json!(["toy"]));
    let (_, all) = server.get(&format!("/pairs/{}/scores", p.pair_id));
    assert!(all["toy"].is_object());
    assert_eq!(
        server
            .get(&format!("/pairs/{}/scores?method=toy", fx.pairs[1].pair_id))
            .0,
        404
    );
}

#[test]
fn gold_and_agreement_before_any_annotation() {
    let dir = tempfile::tempdir().unwrap();
    let fx = fixture(dir.path());
    let server = Server::start(&fx.corpus, &dir.path().join("log.jsonl"), None);
    assert_eq!(
        server
            .get(&format!("/pairs/{}/gold", fx.pairs[0].pair_id))
            .0,
        404
    );
    assert_eq!(server.get("/pairs/missing").0, 404);
    let (status, body) = server.get("/agreement");
    assert_eq!(status, 200);
    assert_eq!(body["source_alpha"], Value::Null);
    let (status, schema) = server.get("/schema/annotation");
    assert_eq!(status, 200);
    assert_eq!(schema["title"], "AnnotationRecord");
}

#[test]
fn annotations_survive_restart() {
    let dir = tempfile::tempdir().unwrap();
    let fx = fixture(dir.path());
    let log = dir.path().join("log.jsonl");
    let p = &fx.pairs[5];
    let path = format!("/pairs/{}/annotations", p.pair_id);
    let body = json!({ "sentence_labels": labels(p.len(), 0), "reconstructability": "yes" });
    {
        let server = Server::start(&fx.corpus, &log, None);
        assert_eq!(server.post(&path, Some("a"), &body).0, 201);
    }
    // a torn write from a crash mid-append
    let mut text = std::fs::read_to_string(&log).unwrap();
    text.push_str(r#"{"pair_id":"synth"#);
    std::fs::write(&log, text).unwrap();

    let server = Server::start(&fx.corpus, &log, None);
    let (_, records) = server.get("/annotations");
    assert_eq!(records.as_array().unwrap().len(), 1);
    assert_eq!(server.post(&path, Some("a"), &body).0, 409);
    assert_eq!(server.post(&path, Some("b"), &body).0, 201);
    drop(server);
    let reopened = AnnotationStore::open(&log).unwrap();
    assert_eq!(reopened.len(), 2);
}

#[test]
fn concurrent_submissions_are_all_durable() {
    let dir = tempfile::tempdir().unwrap();
    let fx = fixture(dir.path());
    let log = dir.path().join("log.jsonl");
    let server = Server::start(&fx.corpus, &log, None);
    thread::scope(|s| {
        for a in 0..6 {
            let server = &server;
            let pairs = &fx.pairs;
            s.spawn(move || {
                for p in pairs {
                    let body = json!({ "sentence_labels": labels(p.len(), a % p.len()), "reconstructability": "no" });
                    let (status, _) =
                        server.post(&format!("/pairs/{}/annotations", p.pair_id), Some(&format!("t{a}")), &body);
                    assert_eq!(status, 201);
                }
            });
        }
    });
    drop(server);
    assert_eq!(AnnotationStore::open(&log).unwrap().len(), 72);
}
