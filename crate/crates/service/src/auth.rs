use axum::http::HeaderMap;
use axum::http::header::AUTHORIZATION;
use sha2::{Digest, Sha256};

use crate::error::ApiError;

/// Opaque learner token derived from the teacher secret.
pub fn learner_token(teacher_token: &str, learner_id: &str) -> String {
    let mut hasher = Sha256::new();
    hasher.update(teacher_token.as_bytes());
    hasher.update(b":");
    hasher.update(learner_id.as_bytes());
    hex::encode(hasher.finalize())
}

fn bearer(headers: &HeaderMap) -> Option<&str> {
    headers
        .get(AUTHORIZATION)?
        .to_str()
        .ok()?
        .strip_prefix("Bearer ")
        .map(str::trim)
}

/// Constant-time comparison of two tokens.
fn same(a: &str, b: &str) -> bool {
    a.len() == b.len()
        && a
            .bytes()
            .zip(b.bytes())
            .fold(0u8, |acc, (x, y)| acc | (x ^ y))
            == 0
}

pub fn require_teacher(headers: &HeaderMap, teacher_token: &str) -> Result<(), ApiError> {
    match bearer(headers) {
        Some(token) if same(token, teacher_token) => Ok(()),
        _ => Err(ApiError::unauthorized()),
    }
}

/// The learner's own token or the teacher token.
pub fn require_learner(
    headers: &HeaderMap,
    teacher_token: &str,
    learner_id: &str,
) -> Result<(), ApiError> {
    match bearer(headers) {
        Some(token)
            if same(token, teacher_token)
                || same(token, &learner_token(teacher_token, learner_id)) =>
        {
            Ok(())
        }
        _ => Err(ApiError::unauthorized()),
    }
}
