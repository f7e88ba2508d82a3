//! HTTP front end for the tutoring engine.

mod app;
pub mod auth;
pub mod config;
pub mod error;
pub mod views;

use std::fmt;
use std::path::Path;
use std::sync::Arc;

use adaptutor_core::content::CoursePack;
use adaptutor_core::expert::Rulebook;
use adaptutor_core::fixtures;
use adaptutor_core::profiler::Instrument;
use adaptutor_core::session::{RecordStore, Tutor, TutorConfig, VariantPolicy};

pub use app::{AppState, IDEMPOTENCY_HEADER, router};
pub use config::{ApiConfig, ConfigError, Flags};
pub use error::{ApiError, ErrorBody};

/// A startup failure tied to the file that caused it.
#[derive(Debug)]
pub struct StartupError {
    pub path: String,
    pub detail: String,
}

impl fmt::Display for StartupError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.detail)
    }
}

impl std::error::Error for StartupError {}

fn read(path: &Path) -> Result<String, StartupError> {
    std::fs::read_to_string(path).map_err(|e| StartupError {
        path: path.display().to_string(),
        detail: e.to_string(),
    })
}

fn fail(path: &Path, err: impl fmt::Display) -> StartupError {
    StartupError {
        path: path.display().to_string(),
        detail: err.to_string(),
    }
}

/// Loads every document named by the configuration and builds the service state.
pub fn build_state(config: &ApiConfig) -> Result<Arc<AppState>, StartupError> {
    let pack = CoursePack::from_json(&read(&config.pack)?).map_err(|e| fail(&config.pack, e))?;
    let rules = Rulebook::from_json(&read(&config.rules)?).map_err(|e| fail(&config.rules, e))?;
    let instrument = match &config.instrument {
        Some(path) => Instrument::from_json(&read(path)?).map_err(|e| fail(path, e))?,
        None => fixtures::demo_instrument().expect("bundled instrument is valid"),
    };
    let store = RecordStore::open(&config.records).map_err(|e| fail(&config.records, e))?;
    let tutor = Tutor::new(
        Arc::new(pack),
        Arc::new(rules),
        Arc::new(instrument),
        TutorConfig {
            seed_mode: config.seed,
            variant_policy: VariantPolicy::Adaptive,
        },
    );
    Ok(Arc::new(AppState::new(tutor, store, config.teacher_token.clone())))
}
