use std::collections::{BTreeMap, HashMap, VecDeque};
use std::sync::{Arc, Mutex as StdMutex};

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, State};
use axum::http::{HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Deserialize;
use serde_json::{Value, json};
use tokio::sync::Mutex;

use adaptutor_core::LearnerModel;
use adaptutor_core::profiler::dominant_style;
use adaptutor_core::session::{Channel, PretestOutcome, RecordStore, Tutor, valid_learner_id};

use crate::auth::{learner_token, require_learner, require_teacher};
use crate::error::ApiError;
use crate::views::{content_view, state_view, test_view};

pub const IDEMPOTENCY_HEADER: &str = "idempotency-key";
const REPLAY_CACHE: usize = 256;

type Reply = (StatusCode, Value);

#[derive(Default)]
struct Slot {
    model: Option<LearnerModel>,
    persisted: usize,
    replies: HashMap<String, Reply>,
    order: VecDeque<String>,
}

impl Slot {
    fn remember(&mut self, key: String, reply: Reply) {
        if self.replies.insert(key.clone(), reply).is_none() {
            self.order.push_back(key);
        }
        while self.order.len() > REPLAY_CACHE {
            if let Some(old) = self.order.pop_front() {
                self.replies.remove(&old);
            }
        }
    }
}

/// Shared service state. Each learner has one slot; requests for the same
/// learner are serialized on it.
pub struct AppState {
    tutor: Tutor,
    store: RecordStore,
    teacher_token: String,
    slots: StdMutex<HashMap<String, Arc<Mutex<Slot>>>>,
}

impl AppState {
    pub fn new(tutor: Tutor, store: RecordStore, teacher_token: String) -> AppState {
        AppState {
            tutor,
            store,
            teacher_token,
            slots: StdMutex::new(HashMap::new()),
        }
    }

    pub fn tutor(&self) -> &Tutor {
        &self.tutor
    }

    fn slot(&self, learner: &str) -> Arc<Mutex<Slot>> {
        let mut slots = self.slots.lock().expect("slot table poisoned");
        slots.entry(learner.to_string()).or_default().clone()
    }

    fn load<'s>(&self, slot: &'s mut Slot, learner: &str) -> Result<&'s mut LearnerModel, ApiError> {
        if slot.model.is_none() {
            let model = if self.store.exists(learner)? {
                self.store.load(learner, &self.tutor.pack().id)?
            } else {
                self.tutor.new_learner(learner)
            };
            slot.persisted = model.event_log.len();
            slot.model = Some(model);
        }
        Ok(slot.model.as_mut().expect("loaded above"))
    }

    /// Runs a read-only view of the learner model.
    async fn read<F>(&self, learner: &str, view: F) -> Result<Value, ApiError>
    where
        F: FnOnce(&Tutor, &LearnerModel) -> Result<Value, ApiError>,
    {
        check_id(learner)?;
        let slot = self.slot(learner);
        let mut slot = slot.lock().await;
        let model = self.load(&mut slot, learner)?;
        view(&self.tutor, model)
    }

    /// Applies `op` to a copy of the learner model and commits the new events
    /// before the copy replaces the cached model. Replies are remembered per
    /// idempotency key.
    async fn mutate<F>(&self, learner: &str, key: Option<String>, op: F) -> Response
    where
        F: FnOnce(&Tutor, &mut LearnerModel) -> Result<Reply, ApiError>,
    {
        if let Err(e) = check_id(learner) {
            return e.into_response();
        }
        let slot = self.slot(learner);
        let mut slot = slot.lock().await;
        if let Some(key) = &key
            && let Some((status, body)) = slot.replies.get(key)
        {
            return (*status, Json(body.clone())).into_response();
        }
        let reply = self.apply(&mut slot, learner, op);
        let reply = match reply {
            Ok(reply) => reply,
            Err(e) => (e.status, serde_json::to_value(&e.body).expect("error bodies serialize")),
        };
        if let Some(key) = key
            && !reply.0.is_server_error()
        {
            slot.remember(key, reply.clone());
        }
        (reply.0, Json(reply.1)).into_response()
    }

    fn apply<F>(&self, slot: &mut Slot, learner: &str, op: F) -> Result<Reply, ApiError>
    where
        F: FnOnce(&Tutor, &mut LearnerModel) -> Result<Reply, ApiError>,
    {
        let mut working = self.load(slot, learner)?.clone();
        let reply = op(&self.tutor, &mut working)?;
        if working.event_log.len() > slot.persisted {
            if let Err(e) = self.store.commit(&working, slot.persisted) {
                // The log may hold a partial append; reload from disk next time.
                slot.model = None;
                tracing::error!(learner, error = %e, "commit failed");
                return Err(e.into());
            }
            slot.persisted = working.event_log.len();
        }
        slot.model = Some(working);
        Ok(reply)
    }
}

fn check_id(learner: &str) -> Result<(), ApiError> {
    if valid_learner_id(learner) {
        Ok(())
    } else {
        Err(ApiError::invalid(
            "InvalidLearnerId",
            format!("invalid learner id `{learner}`"),
        ))
    }
}

fn idempotency_key(headers: &HeaderMap, route: String) -> Option<String> {
    headers
        .get(IDEMPOTENCY_HEADER)
        .and_then(|v| v.to_str().ok())
        .map(|k| format!("{route}#{k}"))
}

fn body<T>(payload: Result<Json<T>, JsonRejection>) -> Result<T, ApiError> {
    payload
        .map(|Json(v)| v)
        .map_err(|e| ApiError::invalid("InvalidBody", e.body_text()))
}

fn ok(value: Value) -> Result<Reply, ApiError> {
    Ok((StatusCode::OK, value))
}

type Shared = State<Arc<AppState>>;

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/instrument", get(instrument))
        .route("/auth/learners/{id}", post(issue_token))
        .route("/learners/{id}/profile", post(profile))
        .route("/learners/{id}/state", get(learner_state))
        .route("/learners/{id}/concepts/{cid}/pretest", post(pretest))
        .route("/learners/{id}/concepts/{cid}/posttest", post(posttest))
        .route("/learners/{id}/concepts/{cid}/content", get(content))
        .route("/learners/{id}/tests/{tid}/answers", post(answers))
        .route("/learners/{id}/tests/{tid}/questions/{qid}/hint", post(hint))
        .route("/learners/{id}/inbox", get(inbox))
        .route("/learners/{id}/inbox/{mid}/read", post(read_message))
        .route("/learners/{id}/events", get(events))
        .route("/teacher/messages", post(teacher_message))
        .with_state(state)
}

async fn health(State(app): Shared) -> Json<Value> {
    Json(json!({
        "status": "ok",
        "pack_id": app.tutor.pack().id,
        "rulebook_id": app.tutor.rules().id,
    }))
}

async fn instrument(State(app): Shared) -> Json<Value> {
    Json(serde_json::to_value(app.tutor.instrument()).expect("instruments serialize"))
}

async fn issue_token(
    State(app): Shared,
    Path(id): Path<String>,
    headers: HeaderMap,
) -> Result<Json<Value>, ApiError> {
    require_teacher(&headers, &app.teacher_token)?;
    check_id(&id)?;
    Ok(Json(json!({
        "learner_id": id,
        "token": learner_token(&app.teacher_token, &id),
    })))
}

#[derive(Deserialize)]
struct ProfileBody {
    responses: HashMap<String, i32>,
}

async fn profile(
    State(app): Shared,
    Path(id): Path<String>,
    headers: HeaderMap,
    payload: Result<Json<ProfileBody>, JsonRejection>,
) -> Response {
    if let Err(e) = require_learner(&headers, &app.teacher_token, &id) {
        return e.into_response();
    }
    let key = idempotency_key(&headers, "profile".into());
    app.mutate(&id, key, |tutor, model| {
        let payload = body(payload)?;
        let state = tutor.submit_profile(model, &payload.responses)?;
        let vector = model.style_vector.expect("set by profiling");
        ok(json!({
            "style_vector": vector,
            "dominant_style": dominant_style(&vector),
            "state": state,
        }))
    })
    .await
}

async fn learner_state(
    State(app): Shared,
    Path(id): Path<String>,
    headers: HeaderMap,
) -> Result<Json<Value>, ApiError> {
    require_learner(&headers, &app.teacher_token, &id)?;
    app.read(&id, |tutor, model| {
        Ok(serde_json::to_value(state_view(tutor.pack(), model)).expect("views serialize"))
    })
    .await
    .map(Json)
}

async fn pretest(
    State(app): Shared,
    Path((id, cid)): Path<(String, String)>,
    headers: HeaderMap,
) -> Response {
    if let Err(e) = require_learner(&headers, &app.teacher_token, &id) {
        return e.into_response();
    }
    let key = idempotency_key(&headers, format!("pretest/{cid}"));
    app.mutate(&id, key, |tutor, model| {
        match tutor.issue_pretest(model, &cid)? {
            PretestOutcome::Test(test) => ok(json!({
                "test": test_view(tutor.pack(), &test),
                "redirected": Value::Null,
            })),
            PretestOutcome::Redirected(state) => ok(json!({
                "test": Value::Null,
                "redirected": state,
            })),
        }
    })
    .await
}

async fn posttest(
    State(app): Shared,
    Path((id, cid)): Path<(String, String)>,
    headers: HeaderMap,
) -> Response {
    if let Err(e) = require_learner(&headers, &app.teacher_token, &id) {
        return e.into_response();
    }
    let key = idempotency_key(&headers, format!("posttest/{cid}"));
    app.mutate(&id, key, |tutor, model| {
        let test = tutor.issue_posttest(model, &cid)?;
        ok(json!({ "test": test_view(tutor.pack(), &test) }))
    })
    .await
}

async fn content(
    State(app): Shared,
    Path((id, cid)): Path<(String, String)>,
    headers: HeaderMap,
) -> Result<Json<Value>, ApiError> {
    require_learner(&headers, &app.teacher_token, &id)?;
    app.read(&id, |tutor, model| {
        let style = tutor.content_style(model, &cid)?;
        let concept = tutor
            .pack()
            .concept(&cid)
            .ok_or_else(|| ApiError::not_found("concept", &cid))?;
        let view = content_view(tutor.pack(), &id, concept, style);
        Ok(serde_json::to_value(view).expect("views serialize"))
    })
    .await
    .map(Json)
}

#[derive(Deserialize)]
struct AnswersBody {
    answers: BTreeMap<String, String>,
}

async fn answers(
    State(app): Shared,
    Path((id, tid)): Path<(String, String)>,
    headers: HeaderMap,
    payload: Result<Json<AnswersBody>, JsonRejection>,
) -> Response {
    if let Err(e) = require_learner(&headers, &app.teacher_token, &id) {
        return e.into_response();
    }
    let key = idempotency_key(&headers, format!("answers/{tid}"));
    app.mutate(&id, key, |tutor, model| {
        let payload = body(payload)?;
        let submission = tutor.submit_answers(model, &tid, &payload.answers)?;
        ok(json!({
            "phase": submission.phase,
            "report": submission.report,
            "state": submission.state,
            "solutions": submission.solutions,
        }))
    })
    .await
}

async fn hint(
    State(app): Shared,
    Path((id, tid, qid)): Path<(String, String, String)>,
    headers: HeaderMap,
) -> Response {
    if let Err(e) = require_learner(&headers, &app.teacher_token, &id) {
        return e.into_response();
    }
    let key = idempotency_key(&headers, format!("hint/{tid}/{qid}"));
    app.mutate(&id, key, |tutor, model| {
        let outcome = tutor.request_hint(model, &tid, &qid)?;
        ok(json!({
            "question": qid,
            "hint": outcome.hint,
            "remaining_budget": outcome.remaining_budget,
        }))
    })
    .await
}

async fn inbox(
    State(app): Shared,
    Path(id): Path<String>,
    headers: HeaderMap,
) -> Result<Json<Value>, ApiError> {
    require_learner(&headers, &app.teacher_token, &id)?;
    app.read(&id, |_, model| Ok(json!({ "messages": model.inbox })))
        .await
        .map(Json)
}

async fn read_message(
    State(app): Shared,
    Path((id, mid)): Path<(String, String)>,
    headers: HeaderMap,
) -> Response {
    if let Err(e) = require_learner(&headers, &app.teacher_token, &id) {
        return e.into_response();
    }
    let key = idempotency_key(&headers, format!("read/{mid}"));
    app.mutate(&id, key, |tutor, model| {
        tutor.mark_read(model, &mid)?;
        ok(json!({ "id": mid, "read": true }))
    })
    .await
}

async fn events(
    State(app): Shared,
    Path(id): Path<String>,
    headers: HeaderMap,
) -> Result<Json<Value>, ApiError> {
    require_teacher(&headers, &app.teacher_token)?;
    app.read(&id, |_, model| Ok(json!({ "events": model.event_log })))
        .await
        .map(Json)
}

#[derive(Deserialize)]
struct MessageBody {
    to: String,
    channel: Channel,
    body: String,
}

async fn teacher_message(
    State(app): Shared,
    headers: HeaderMap,
    payload: Result<Json<MessageBody>, JsonRejection>,
) -> Response {
    if let Err(e) = require_teacher(&headers, &app.teacher_token) {
        return e.into_response();
    }
    let payload = match body(payload) {
        Ok(p) => p,
        Err(e) => return e.into_response(),
    };
    let key = idempotency_key(&headers, "message".into());
    app.mutate(&payload.to.clone(), key, |tutor, model| {
        if model.event_log.is_empty() {
            return Err(ApiError::not_found("learner", &model.learner_id));
        }
        let message = tutor.post_message(model, payload.channel, &payload.body);
        Ok((
            StatusCode::CREATED,
            serde_json::to_value(message).expect("messages serialize"),
        ))
    })
    .await
}
