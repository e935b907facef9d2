//! HTTP control plane for live simulation sessions.
//!
//! Each session owns one engine worker thread. Simulation commands posted to
//! a session are aligned to the next day boundary and recorded in a command
//! log; `GET /sessions/{id}/log` exports that log as a configuration file
//! that `learnsim run --config` replays to the same metrics. See
//! `docs/api.md` for the wire format.

pub mod api;
mod http;
mod session;

use learnsim_core::Error as CoreError;

pub use http::{router, serve, AppState, ServeOptions};
pub use session::{SessionHandle, SessionParams};

#[derive(Debug, Clone, thiserror::Error)]
pub enum ServiceError {
    #[error("unknown session {0}")]
    UnknownSession(api::SessionId),
    #[error("{message}")]
    Invalid {
        message: String,
        violations: Vec<api::ViolationBody>,
    },
    #[error("{0}")]
    Conflict(String),
    #[error("{0}")]
    Internal(String),
}

impl ServiceError {
    pub fn invalid(message: impl Into<String>, violations: Vec<(&str, &str)>) -> Self {
        ServiceError::Invalid {
            message: message.into(),
            violations: violations
                .into_iter()
                .map(|(p, r)| api::ViolationBody { path: p.into(), rule: r.into() })
                .collect(),
        }
    }

    pub fn from_core(e: CoreError) -> Self {
        match e {
            CoreError::InvalidConfig(v) => ServiceError::Invalid {
                message: format!("{} violation(s)", v.len()),
                violations: v
                    .into_iter()
                    .map(|x| api::ViolationBody { path: x.path, rule: x.rule })
                    .collect(),
            },
            e @ (CoreError::Parse { .. } | CoreError::Domain(_)) => ServiceError::Invalid {
                message: e.to_string(),
                violations: Vec::new(),
            },
            other => ServiceError::Internal(other.to_string()),
        }
    }
}
