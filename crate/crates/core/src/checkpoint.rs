//! Checkpoint file: a single JSON object.
//!
//! ```json
//! {
//!   "format": "ggcn-checkpoint",
//!   "version": 1,
//!   "variant": "ggcn",
//!   "dims": { "input": 30, "hidden": 400, "latent": 200 },
//!   "config": { ...resolved TrainConfig... },
//!   "tensors": [
//!     { "name": "W0", "rows": 30, "cols": 400, "values": [ ...row-major... ] },
//!     { "name": "W1", ... },
//!     { "name": "W2", ... }
//!   ]
//! }
//! ```
//!
//! Values are written with shortest round-trip formatting, so a saved and
//! reloaded checkpoint is bit-identical.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ModelDims, ModelParams, ModelVariant};
use crate::numeric::Matrix;
use crate::train::TrainConfig;

pub const FORMAT: &str = "ggcn-checkpoint";
pub const VERSION: u32 = 1;
const NAMES: [&str; 3] = ["W0", "W1", "W2"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedTensor {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub variant: ModelVariant,
    pub dims: ModelDims,
    pub config: TrainConfig,
    pub tensors: Vec<NamedTensor>,
}

impl Checkpoint {
    pub fn new(variant: ModelVariant, config: &TrainConfig, params: &ModelParams) -> Self {
        let tensors = NAMES
            .iter()
            .zip(params.tensors())
            .map(|(name, m)| NamedTensor {
                name: name.to_string(),
                rows: m.rows(),
                cols: m.cols(),
                values: m.as_slice().to_vec(),
            })
            .collect();
        Checkpoint {
            format: FORMAT.into(),
            version: VERSION,
            variant,
            dims: params.dims(),
            config: config.clone(),
            tensors,
        }
    }

    pub fn params(&self) -> Result<ModelParams> {
        if self.format != FORMAT || self.version != VERSION {
            return Err(Error::contract(format!(
                "unsupported checkpoint {} v{}",
                self.format, self.version
            )));
        }
        let mut mats = Vec::with_capacity(3);
        for name in NAMES {
            let t = self
                .tensors
                .iter()
                .find(|t| t.name == name)
                .ok_or_else(|| Error::contract(format!("checkpoint lacks tensor {name}")))?;
            mats.push(Matrix::from_vec(t.rows, t.cols, t.values.clone())?);
        }
        let w2 = mats.pop().expect("three tensors");
        let w1 = mats.pop().expect("three tensors");
        let w0 = mats.pop().expect("three tensors");
        let params = ModelParams::from_tensors(w0, w1, w2)?;
        if params.dims() != self.dims {
            return Err(Error::contract("checkpoint dims disagree with its tensors"));
        }
        Ok(params)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).map_err(|e| Error::json(path, e))?;
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::json(path, e))
    }
}
