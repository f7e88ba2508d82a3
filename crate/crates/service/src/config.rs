use std::net::SocketAddr;
use std::path::PathBuf;

use adaptutor_core::session::SeedMode;
use clap::Parser;
use thiserror::Error;

pub const ENV_PREFIX: &str = "ADAPTUTOR_";

/// Command-line flags. Every flag can also be set through an `ADAPTUTOR_*`
/// variable, which takes precedence over the flag.
#[derive(Debug, Clone, Default, Parser)]
#[command(name = "adaptutor", version, about = "Adaptive tutoring HTTP service")]
pub struct Flags {
    /// Course pack document.
    #[arg(long)]
    pub pack: Option<PathBuf>,
    /// Rulebook document.
    #[arg(long)]
    pub rules: Option<PathBuf>,
    /// Directory holding learner records.
    #[arg(long)]
    pub records: Option<PathBuf>,
    /// Listen address.
    #[arg(long)]
    pub bind: Option<String>,
    /// Question-selection seed: an integer for reproducible runs, or `entropy`.
    #[arg(long)]
    pub seed: Option<String>,
    /// Bearer token of the teacher role.
    #[arg(long)]
    pub teacher_token: Option<String>,
    /// Questionnaire document; the bundled demo instrument when absent.
    #[arg(long)]
    pub instrument: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ApiConfig {
    pub bind: SocketAddr,
    pub pack: PathBuf,
    pub rules: PathBuf,
    pub records: PathBuf,
    pub seed: SeedMode,
    pub teacher_token: String,
    pub instrument: Option<PathBuf>,
}

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("missing required setting `{flag}` (or {env})")]
    Missing { flag: &'static str, env: String },
    #[error("`{flag}`: {detail}")]
    Invalid { flag: &'static str, detail: String },
    #[error("{what} `{}` does not exist", path.display())]
    NoSuchPath { what: &'static str, path: PathBuf },
}

pub fn parse_seed(raw: &str) -> Result<SeedMode, ConfigError> {
    if raw.eq_ignore_ascii_case("entropy") {
        return Ok(SeedMode::Entropy);
    }
    raw.parse().map(SeedMode::Fixed).map_err(|_| ConfigError::Invalid {
        flag: "--seed",
        detail: format!("expected an integer or `entropy`, got `{raw}`"),
    })
}

impl ApiConfig {
    /// Merges flags with environment variables looked up through `env`.
    pub fn resolve(
        flags: Flags,
        env: impl Fn(&str) -> Option<String>,
    ) -> Result<ApiConfig, ConfigError> {
        let pick = |flag: &'static str, value: Option<String>| -> Option<String> {
            let name = format!("{ENV_PREFIX}{}", flag.to_uppercase().replace('-', "_"));
            env(&name).or(value)
        };
        let require = |flag: &'static str, value: Option<String>| -> Result<String, ConfigError> {
            pick(flag, value).ok_or_else(|| ConfigError::Missing {
                flag,
                env: format!("{ENV_PREFIX}{}", flag.to_uppercase().replace('-', "_")),
            })
        };
        let path = |p: Option<PathBuf>| p.map(|p| p.to_string_lossy().into_owned());

        let pack = PathBuf::from(require("pack", path(flags.pack))?);
        let rules = PathBuf::from(require("rules", path(flags.rules))?);
        let records =
            PathBuf::from(pick("records", path(flags.records)).unwrap_or_else(|| "records".into()));
        let bind = pick("bind", flags.bind).unwrap_or_else(|| "127.0.0.1:8080".into());
        let bind = bind.parse().map_err(|e| ConfigError::Invalid {
            flag: "--bind",
            detail: format!("`{bind}`: {e}"),
        })?;
        let seed = match pick("seed", flags.seed) {
            Some(raw) => parse_seed(&raw)?,
            None => SeedMode::Entropy,
        };
        let teacher_token = require("teacher-token", flags.teacher_token)?;
        if teacher_token.is_empty() {
            return Err(ConfigError::Invalid {
                flag: "--teacher-token",
                detail: "must not be empty".into(),
            });
        }
        let instrument = pick("instrument", path(flags.instrument)).map(PathBuf::from);

        for (what, p) in [("pack", &pack), ("rulebook", &rules)]
            .into_iter()
            .chain(instrument.as_ref().map(|p| ("instrument", p)))
        {
            if !p.exists() {
                return Err(ConfigError::NoSuchPath {
                    what,
                    path: p.clone(),
                });
            }
        }
        Ok(ApiConfig {
            bind,
            pack,
            rules,
            records,
            seed,
            teacher_token,
            instrument,
        })
    }
}
