use std::process::ExitCode;

use clap::Parser;

use adaptutor_service::{ApiConfig, Flags, build_state, router};

#[tokio::main]
async fn main() -> ExitCode {
    tracing_subscriber::fmt().with_target(false).init();

    let config = match ApiConfig::resolve(Flags::parse(), |k| std::env::var(k).ok()) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("adaptutor: {e}");
            return ExitCode::from(2);
        }
    };
    let state = match build_state(&config) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("adaptutor: cannot load {e}");
            return ExitCode::from(2);
        }
    };
    let listener = match tokio::net::TcpListener::bind(config.bind).await {
        Ok(l) => l,
        Err(e) => {
            eprintln!("adaptutor: cannot bind {}: {e}", config.bind);
            return ExitCode::FAILURE;
        }
    };
    tracing::info!(
        bind = %config.bind,
        pack = %state.tutor().pack().id,
        rules = %state.tutor().rules().id,
        records = %config.records.display(),
        "listening"
    );
    let served = axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
            tracing::info!("shutting down");
        })
        .await;
    match served {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("adaptutor: {e}");
            ExitCode::FAILURE
        }
    }
}
