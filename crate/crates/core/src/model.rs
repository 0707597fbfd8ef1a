//! Two-layer graph-convolutional Gaussian encoder, reparameterised sampling,
//! inner-product decoder and the adaptive priors used between growth steps.
//!
//! All three model variants share one parameter layout:
//!
//! ```text
//! H       = ReLU(Â · X · W0)
//! mean    = Â · H · W1
//! log_std = Â · H · W2
//! ```
//!
//! `Â` is the normalised (candidate) adjacency for the graph-convolutional
//! variants and the identity for [`ModelVariant::MlpVae`].

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::NormalizedAdjacency;
use crate::numeric::{stable_sigmoid, Matrix, Tape, Var};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModelVariant {
    /// Sequential generative model trained over sampled growth sequences.
    #[serde(rename = "ggcn")]
    GGcn,
    /// Static graph-convolutional VAE over the whole observed graph.
    #[serde(rename = "gcnvae")]
    GcnVae,
    /// Same encoder with the adjacency replaced by the identity.
    #[serde(rename = "mlpvae")]
    MlpVae,
}

impl ModelVariant {
    pub const ALL: [ModelVariant; 3] = [ModelVariant::GGcn, ModelVariant::GcnVae, ModelVariant::MlpVae];

    pub fn tag(self) -> &'static str {
        match self {
            ModelVariant::GGcn => "ggcn",
            ModelVariant::GcnVae => "gcnvae",
            ModelVariant::MlpVae => "mlpvae",
        }
    }

    /// Human-readable name used in result tables.
    pub fn display_name(self) -> &'static str {
        match self {
            ModelVariant::GGcn => "G-GCN",
            ModelVariant::GcnVae => "GCN-VAE",
            ModelVariant::MlpVae => "MLP-VAE",
        }
    }

    pub fn uses_adjacency(self) -> bool {
        self != ModelVariant::MlpVae
    }
}

impl fmt::Display for ModelVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for ModelVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "ggcn" => Ok(ModelVariant::GGcn),
            "gcnvae" => Ok(ModelVariant::GcnVae),
            "mlpvae" => Ok(ModelVariant::MlpVae),
            _ => Err(Error::contract(format!("unknown model variant {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelDims {
    pub input: usize,
    pub hidden: usize,
    pub latent: usize,
}

/// Encoder weights, shared by every growth step.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub w0: Matrix,
    pub w1: Matrix,
    pub w2: Matrix,
}

impl ModelParams {
    /// Glorot-uniform initialisation of all three weight matrices.
    pub fn init<R: Rng + ?Sized>(dims: ModelDims, rng: &mut R) -> Self {
        ModelParams {
            w0: Matrix::glorot(dims.input, dims.hidden, rng),
            w1: Matrix::glorot(dims.hidden, dims.latent, rng),
            w2: Matrix::glorot(dims.hidden, dims.latent, rng),
        }
    }

    pub fn from_tensors(w0: Matrix, w1: Matrix, w2: Matrix) -> Result<Self> {
        let p = ModelParams { w0, w1, w2 };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.w0.cols() != self.w1.rows() {
            return Err(Error::Dimension {
                op: "model params (w0, w1)",
                left: self.w0.shape(),
                right: self.w1.shape(),
            });
        }
        if self.w1.shape() != self.w2.shape() {
            return Err(Error::Dimension {
                op: "model params (w1, w2)",
                left: self.w1.shape(),
                right: self.w2.shape(),
            });
        }
        if !(self.w0.all_finite() && self.w1.all_finite() && self.w2.all_finite()) {
            return Err(Error::NonFinite("model parameters".into()));
        }
        Ok(())
    }

    pub fn dims(&self) -> ModelDims {
        ModelDims {
            input: self.w0.rows(),
            hidden: self.w0.cols(),
            latent: self.w1.cols(),
        }
    }

    pub fn tensors(&self) -> [&Matrix; 3] {
        [&self.w0, &self.w1, &self.w2]
    }

    pub fn tensors_mut(&mut self) -> [&mut Matrix; 3] {
        [&mut self.w0, &mut self.w1, &mut self.w2]
    }

    pub fn to_vec(&self) -> Vec<Matrix> {
        vec![self.w0.clone(), self.w1.clone(), self.w2.clone()]
    }

    /// Registers the weights as differentiable leaves.
    pub fn on_tape(&self, tape: &mut Tape) -> ParamVars {
        ParamVars {
            w0: tape.param(self.w0.clone()),
            w1: tape.param(self.w1.clone()),
            w2: tape.param(self.w2.clone()),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ParamVars {
    pub w0: Var,
    pub w1: Var,
    pub w2: Var,
}

/// Per-node diagonal Gaussian over latent factors.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianLatent {
    pub mean: Matrix,
    pub log_std: Matrix,
}

impl GaussianLatent {
    pub fn new(mean: Matrix, log_std: Matrix) -> Result<Self> {
        if mean.shape() != log_std.shape() {
            return Err(Error::Dimension {
                op: "gaussian latent",
                left: mean.shape(),
                right: log_std.shape(),
            });
        }
        Ok(GaussianLatent { mean, log_std })
    }

    pub fn standard_normal(n: usize, latent: usize) -> Self {
        GaussianLatent {
            mean: Matrix::zeros(n, latent),
            log_std: Matrix::zeros(n, latent),
        }
    }

    pub fn n(&self) -> usize {
        self.mean.rows()
    }

    pub fn latent_dim(&self) -> usize {
        self.mean.cols()
    }

    pub fn slice_rows(&self, start: usize, end: usize) -> Result<Self> {
        Ok(GaussianLatent {
            mean: self.mean.slice_rows(start, end)?,
            log_std: self.log_std.slice_rows(start, end)?,
        })
    }
}

/// Tape handles for a [`GaussianLatent`].
#[derive(Debug, Clone, Copy)]
pub struct LatentVars {
    pub mean: Var,
    pub log_std: Var,
}

impl LatentVars {
    pub fn value(&self, tape: &Tape) -> GaussianLatent {
        GaussianLatent {
            mean: tape.value(self.mean).clone(),
            log_std: tape.value(self.log_std).clone(),
        }
    }

    pub fn constant(latent: &GaussianLatent, tape: &mut Tape) -> Self {
        LatentVars {
            mean: tape.constant(latent.mean.clone()),
            log_std: tape.constant(latent.log_std.clone()),
        }
    }

    pub fn slice_rows(&self, tape: &mut Tape, start: usize, end: usize) -> Result<Self> {
        Ok(LatentVars {
            mean: tape.slice_rows(self.mean, start, end)?,
            log_std: tape.slice_rows(self.log_std, start, end)?,
        })
    }
}

/// Records the encoder on `tape`. `adjacency` is `None` for the identity
/// operator.
pub fn encode_on_tape(tape: &mut Tape, adjacency: Option<Var>, features: Var, w: &ParamVars) -> Result<LatentVars> {
    let propagate = |tape: &mut Tape, v: Var| match adjacency {
        Some(a) => tape.matmul(a, v),
        None => Ok(v),
    };
    let xw = tape.matmul(features, w.w0)?;
    let pre = propagate(tape, xw)?;
    let hidden = tape.relu(pre);
    let hm = tape.matmul(hidden, w.w1)?;
    let mean = propagate(tape, hm)?;
    let hs = tape.matmul(hidden, w.w2)?;
    let log_std = propagate(tape, hs)?;
    Ok(LatentVars { mean, log_std })
}

/// Posterior parameters for every node. Under [`ModelVariant::MlpVae`] the
/// adjacency is ignored (only its size is checked).
pub fn encode(
    a_norm: &NormalizedAdjacency,
    features: &Matrix,
    params: &ModelParams,
    variant: ModelVariant,
) -> Result<GaussianLatent> {
    if a_norm.size() != features.rows() {
        return Err(Error::Dimension {
            op: "encode",
            left: a_norm.matrix().shape(),
            right: features.shape(),
        });
    }
    encode_dense(variant.uses_adjacency().then(|| a_norm.matrix()), features, params)
}

pub(crate) fn encode_dense(
    adjacency: Option<&Matrix>,
    features: &Matrix,
    params: &ModelParams,
) -> Result<GaussianLatent> {
    if features.cols() != params.w0.rows() {
        return Err(Error::Dimension {
            op: "encode",
            left: features.shape(),
            right: params.w0.shape(),
        });
    }
    let mut tape = Tape::new();
    let a = adjacency.map(|a| tape.constant(a.clone()));
    let x = tape.constant(features.clone());
    let w = ParamVars {
        w0: tape.constant(params.w0.clone()),
        w1: tape.constant(params.w1.clone()),
        w2: tape.constant(params.w2.clone()),
    };
    Ok(encode_on_tape(&mut tape, a, x, &w)?.value(&tape))
}

/// `z = mean + exp(log_std) ⊙ eps`; the noise is a constant, so gradients
/// reach `mean` and `log_std` only.
pub fn reparameterize_on_tape(tape: &mut Tape, latent: &LatentVars, eps: &Matrix) -> Result<Var> {
    let shape = tape.value(latent.mean).shape();
    if eps.shape() != shape {
        return Err(Error::Dimension {
            op: "reparameterize",
            left: shape,
            right: eps.shape(),
        });
    }
    let e = tape.constant(eps.clone());
    let std = tape.exp(latent.log_std);
    let noise = tape.mul(std, e)?;
    tape.add(latent.mean, noise)
}

pub fn reparameterize(latent: &GaussianLatent, eps: &Matrix) -> Result<Matrix> {
    if eps.shape() != latent.mean.shape() {
        return Err(Error::Dimension {
            op: "reparameterize",
            left: latent.mean.shape(),
            right: eps.shape(),
        });
    }
    let mut z = latent.log_std.zip_map(eps, |ls, e| ls.exp() * e);
    z.add_assign(&latent.mean);
    Ok(z)
}

/// Edge probabilities `sigmoid(⟨z_i, z_j⟩)` for all pairs.
pub fn decode_edge_probs(z: &Matrix) -> Result<Matrix> {
    if !z.all_finite() {
        return Err(Error::NonFinite("latent codes passed to the decoder".into()));
    }
    Ok(z.matmul_t(z)?.map(stable_sigmoid))
}

/// Score of a single pair, `sigmoid(⟨z_i, z_j⟩)`.
pub fn edge_prob(z: &Matrix, i: usize, j: usize) -> f64 {
    let dot: f64 = z.row(i).iter().zip(z.row(j)).map(|(a, b)| a * b).sum();
    stable_sigmoid(dot)
}

/// Adaptive prior for a growth step: old nodes keep the distribution the
/// previous step assigned them, the `n_new` incoming nodes get `N(0, I)`.
pub fn make_priors(prev: Option<&GaussianLatent>, n_new: usize, latent: usize) -> Result<GaussianLatent> {
    if n_new == 0 {
        return Err(Error::contract("a growth step needs at least one new node"));
    }
    let fresh = GaussianLatent::standard_normal(n_new, latent);
    let Some(prev) = prev else {
        return Ok(fresh);
    };
    if prev.latent_dim() != latent {
        return Err(Error::Dimension {
            op: "make_priors",
            left: prev.mean.shape(),
            right: (n_new, latent),
        });
    }
    let stack = |a: &Matrix, b: &Matrix| {
        let mut data = a.as_slice().to_vec();
        data.extend_from_slice(b.as_slice());
        Matrix::from_vec(a.rows() + b.rows(), latent, data)
    };
    Ok(GaussianLatent {
        mean: stack(&prev.mean, &fresh.mean)?,
        log_std: stack(&prev.log_std, &fresh.log_std)?,
    })
}
