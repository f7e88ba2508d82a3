#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use axum::Router;
use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use http_body_util::BodyExt;
use serde_json::{Value, json};
use tower::ServiceExt;

use adaptutor_core::fixtures;
use adaptutor_core::session::{RecordStore, SeedMode, StepClock, Tutor, TutorConfig, VariantPolicy};
use adaptutor_core::{CoursePack, Instrument};
use adaptutor_service::{AppState, router};

pub const TEACHER: &str = "teacher-secret";

pub struct Api {
    pub router: Router,
    pub state: Arc<AppState>,
    pub dir: tempfile::TempDir,
}

pub fn tutor(seed: u64) -> Tutor {
    Tutor::new(
        Arc::new(fixtures::demo_pack().unwrap()),
        Arc::new(fixtures::default_rules().unwrap()),
        Arc::new(fixtures::demo_instrument().unwrap()),
        TutorConfig {
            seed_mode: SeedMode::Fixed(seed),
            variant_policy: VariantPolicy::Adaptive,
        },
    )
    .with_clock(Arc::new(StepClock::starting_at(1_000)))
}

fn open(dir: &Path, seed: u64) -> (Router, Arc<AppState>) {
    let store = RecordStore::open(dir.join("records")).unwrap();
    let state = Arc::new(AppState::new(tutor(seed), store, TEACHER.to_string()));
    (router(state.clone()), state)
}

impl Api {
    pub fn new(seed: u64) -> Api {
        let dir = tempfile::tempdir().unwrap();
        let (router, state) = open(dir.path(), seed);
        Api { router, state, dir }
    }

    /// A fresh service over the same records directory.
    pub fn restart(self, seed: u64) -> Api {
        let (router, state) = open(self.dir.path(), seed);
        Api {
            router,
            state,
            dir: self.dir,
        }
    }

    pub async fn send(
        &self,
        method: Method,
        path: &str,
        token: Option<&str>,
        body: Option<Value>,
        idempotency_key: Option<&str>,
    ) -> (StatusCode, Value) {
        let mut req = Request::builder().method(method).uri(path);
        if let Some(t) = token {
            req = req.header("authorization", format!("Bearer {t}"));
        }
        if let Some(k) = idempotency_key {
            req = req.header("idempotency-key", k);
        }
        let req = match body {
            Some(b) => req
                .header("content-type", "application/json")
                .body(Body::from(b.to_string())),
            None => req.body(Body::empty()),
        }
        .unwrap();
        let resp = self.router.clone().oneshot(req).await.unwrap();
        let status = resp.status();
        let bytes = resp.into_body().collect().await.unwrap().to_bytes();
        let value = if bytes.is_empty() {
            Value::Null
        } else {
            serde_json::from_slice(&bytes).unwrap_or_else(|_| {
                panic!("non-JSON body for {path}: {}", String::from_utf8_lossy(&bytes))
            })
        };
        (status, value)
    }

    pub async fn get(&self, path: &str, token: &str) -> (StatusCode, Value) {
        self.send(Method::GET, path, Some(token), None, None).await
    }

    pub async fn post(&self, path: &str, token: &str, body: Value) -> (StatusCode, Value) {
        self.send(Method::POST, path, Some(token), Some(body), None).await
    }

    pub async fn token(&self, learner: &str) -> String {
        let (status, body) = self
            .send(Method::POST, &format!("/auth/learners/{learner}"), Some(TEACHER), None, None)
            .await;
        assert_eq!(status, StatusCode::OK, "{body}");
        body["token"].as_str().unwrap().to_string()
    }

    /// Issues a token and submits a questionnaire leaning toward `style`.
    pub async fn profiled(&self, learner: &str, style: &str) -> String {
        let token = self.token(learner).await;
        let (status, body) = self
            .post(
                &format!("/learners/{learner}/profile"),
                &token,
                json!({ "responses": responses_favoring(&fixtures::demo_instrument().unwrap(), style) }),
            )
            .await;
        assert_eq!(status, StatusCode::OK, "{body}");
        token
    }
}

pub fn responses_favoring(instrument: &Instrument, style: &str) -> BTreeMap<String, i32> {
    instrument
        .items
        .iter()
        .map(|item| {
            let v = if item.style.code() == style {
                if item.reverse_scored { 1 } else { 5 }
            } else {
                3
            };
            (item.id.clone(), v)
        })
        .collect()
}

/// Answers a rendered test view from the pack's answer key.
pub fn answers_for(pack: &CoursePack, test: &Value, correct: impl Fn(usize) -> bool) -> Value {
    let mut answers = serde_json::Map::new();
    for (i, q) in test["questions"].as_array().unwrap().iter().enumerate() {
        let id = q["id"].as_str().unwrap();
        let (_, question) = pack.find_question(id).unwrap();
        let choice = if correct(i) {
            question.correct_choice()
        } else {
            question.choices.iter().find(|c| !c.correct).unwrap()
        };
        answers.insert(id.to_string(), Value::String(choice.id.clone()));
    }
    json!({ "answers": answers })
}

/// Every object key anywhere in `value`.
pub fn keys(value: &Value, out: &mut Vec<String>) {
    match value {
        Value::Object(map) => {
            for (k, v) in map {
                out.push(k.clone());
                keys(v, out);
            }
        }
        Value::Array(items) => items.iter().for_each(|v| keys(v, out)),
        _ => {}
    }
}

/// Every string anywhere in `value`.
pub fn strings(value: &Value, out: &mut Vec<String>) {
    match value {
        Value::String(s) => out.push(s.clone()),
        Value::Object(map) => map.values().for_each(|v| strings(v, out)),
        Value::Array(items) => items.iter().for_each(|v| strings(v, out)),
        _ => {}
    }
}

pub fn state_name(body: &Value) -> &str {
    body["state"]["state"].as_str().unwrap_or_default()
}
