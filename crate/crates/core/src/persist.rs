//! JSON model files wrapped in a versioned envelope:
//! `{"format": "cbdt-model/v1", "kind": "<learner>", "model": {...}}`.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{CbdtError, Result};

pub const MODEL_FORMAT: &str = "cbdt-model/v1";

#[derive(Serialize)]
struct EnvelopeRef<'a, T> {
    format: &'a str,
    kind: &'a str,
    model: &'a T,
}

#[derive(Deserialize)]
struct Envelope<T> {
    format: String,
    kind: String,
    model: T,
}

#[derive(Deserialize)]
struct Header {
    format: String,
    kind: String,
}

pub fn to_json<T: Serialize>(kind: &str, model: &T) -> Result<String> {
    Ok(serde_json::to_string(&EnvelopeRef {
        format: MODEL_FORMAT,
        kind,
        model,
    })?)
}

fn check_header(format: &str, kind: &str, expected_kind: &str, origin: &str) -> Result<()> {
    if format != MODEL_FORMAT {
        return Err(CbdtError::Format {
            path: origin.into(),
            message: format!("unsupported model format {format:?} (expected {MODEL_FORMAT:?})"),
        });
    }
    if kind != expected_kind {
        return Err(CbdtError::Format {
            path: origin.into(),
            message: format!("model kind is {kind:?}, expected {expected_kind:?}"),
        });
    }
    Ok(())
}

pub fn from_json<T: DeserializeOwned>(kind: &str, text: &str, origin: &str) -> Result<T> {
    let header: Header = serde_json::from_str(text).map_err(|e| CbdtError::Format {
        path: origin.into(),
        message: format!("not a model file: {e}"),
    })?;
    check_header(&header.format, &header.kind, kind, origin)?;
    let env: Envelope<T> = serde_json::from_str(text).map_err(|e| CbdtError::Format {
        path: origin.into(),
        message: e.to_string(),
    })?;
    check_header(&env.format, &env.kind, kind, origin)?;
    Ok(env.model)
}

/// Learner kind recorded in a model file, without decoding the model.
pub fn peek_kind(path: impl AsRef<Path>) -> Result<String> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| CbdtError::io(path, e))?;
    let header: Header = serde_json::from_str(&text).map_err(|e| CbdtError::Format {
        path: path.into(),
        message: format!("not a model file: {e}"),
    })?;
    check_header(&header.format, &header.kind, &header.kind, &path.display().to_string())?;
    Ok(header.kind)
}

pub fn save<T: Serialize>(kind: &str, model: &T, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, to_json(kind, model)?).map_err(|e| CbdtError::io(path, e))
}

pub fn load<T: DeserializeOwned>(kind: &str, path: impl AsRef<Path>) -> Result<T> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| CbdtError::io(path, e))?;
    from_json(kind, &text, &path.display().to_string())
}
