//! Browser bindings: train on simulated data, extract rules from the trained
//! model, and compute efficiency-adjusted PEHE.
//!
//! Results cross the boundary as JSON strings.

pub mod session;

use wasm_bindgen::prelude::*;

use session::{Session, TrainOptions};

fn js_error(e: cbdt::CbdtError) -> JsError {
    JsError::new(&e.to_string())
}

fn to_json<T: serde::Serialize>(value: &T) -> Result<String, JsError> {
    serde_json::to_string(value).map_err(|e| JsError::new(&e.to_string()))
}

/// Default training options as JSON, for initializing the form.
#[wasm_bindgen(js_name = defaultOptions)]
pub fn default_options() -> Result<String, JsError> {
    to_json(&TrainOptions::default())
}

#[wasm_bindgen(js_name = efficiencyAdjustedPehe)]
pub fn efficiency_adjusted_pehe(pehe_sqrt: f64, train_seconds: f64, infer_ms: f64) -> Result<f64, JsError> {
    session::efficiency(pehe_sqrt, train_seconds, infer_ms).map_err(js_error)
}

#[wasm_bindgen]
pub struct Demo {
    session: Option<Session>,
}

#[wasm_bindgen]
impl Demo {
    #[wasm_bindgen(constructor)]
    pub fn new() -> Demo {
        Demo { session: None }
    }

    /// Train on freshly simulated data; returns the summary as JSON.
    pub fn train(&mut self, options_json: &str) -> Result<String, JsError> {
        let options = session::parse_options(options_json).map_err(js_error)?;
        let (session, summary) = Session::train(&options).map_err(js_error)?;
        self.session = Some(session);
        to_json(&summary)
    }

    /// Rules explaining the last trained model; returns JSON.
    pub fn rules(&self, depth: usize, min_support: f64) -> Result<String, JsError> {
        let session = self.session.as_ref().ok_or_else(|| JsError::new("train a model first"))?;
        to_json(&session.rules(depth, min_support).map_err(js_error)?)
    }

    #[wasm_bindgen(js_name = modelJson)]
    pub fn model_json(&self) -> Result<String, JsError> {
        let session = self.session.as_ref().ok_or_else(|| JsError::new("train a model first"))?;
        session.model_json().map_err(js_error)
    }
}

impl Default for Demo {
    fn default() -> Self {
        Demo::new()
    }
}
