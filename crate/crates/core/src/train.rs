//! Sequential training over sampled growth sequences, plus the two static
//! baselines.
//!
//! One training iteration of the sequential model:
//!
//! 1. sample a uniform node ordering and cut it into contiguous batches
//!    (the first batch is the seed subgraph, whose likelihood is not
//!    modelled);
//! 2. for each later batch, attach it to the nodes seen so far through a
//!    candidate adjacency filled with probability `p̃`, normalise, encode,
//!    sample `z`, decode, and score the step against the true adjacency,
//!    with the previous step's posterior as prior for old nodes and `N(0, I)`
//!    for the incoming ones;
//! 3. sum the step losses and take one Adam step on the shared weights.
//!
//! All randomness of an iteration is drawn up front into an
//! [`IterationPlan`], so a plan can be replayed exactly (gradient checks,
//! equivalence tests). Orderings, candidate fills and reparameterisation
//! noise come from independent streams of one seed.

use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::Metrics;
use crate::graph::{
    build_candidate, build_schedule, normalize_adjacency, sample_ordering, with_self_loops, Graph, SelfLoops,
};
use crate::loss::{check_beta, default_pos_weight, kl_on_tape, recon_on_tape, LossBreakdown, ReconTarget};
use crate::model::{
    encode_on_tape, reparameterize_on_tape, LatentVars, ModelDims, ModelParams, ModelVariant, ParamVars,
};
use crate::numeric::{AdamConfig, AdamState, Matrix, Tape, Var};

/// How the candidate fill probability is chosen during training.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PTilde {
    /// Edge density of the training graph.
    Density,
    Fixed(f64),
}

impl PTilde {
    pub fn resolve(self, g: &Graph) -> f64 {
        match self {
            PTilde::Density => g.density(),
            PTilde::Fixed(p) => p,
        }
    }
}

impl fmt::Display for PTilde {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PTilde::Density => f.write_str("density"),
            PTilde::Fixed(p) => write!(f, "{p}"),
        }
    }
}

impl FromStr for PTilde {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("density") {
            return Ok(PTilde::Density);
        }
        let p: f64 = s
            .parse()
            .map_err(|_| Error::contract(format!("p-tilde must be `density` or a probability, got {s:?}")))?;
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::contract(format!("p-tilde must lie in [0, 1], got {p}")));
        }
        Ok(PTilde::Fixed(p))
    }
}

/// Whether gradients flow through the adaptive prior into the encoding that
/// produced it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PriorGrad {
    #[default]
    Off,
    On,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub hidden_dim: usize,
    pub latent_dim: usize,
    pub learning_rate: f64,
    pub iterations: usize,
    pub beta: f64,
    /// Batches per sampled ordering, seed included; each holds about
    /// `n / num_batches` nodes. With 1 there is no growth and the model
    /// trains on the static graph.
    pub num_batches: usize,
    pub p_tilde: PTilde,
    pub self_loops: SelfLoops,
    pub recon_target: ReconTarget,
    pub prior_grad: PriorGrad,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            hidden_dim: 400,
            latent_dim: 200,
            learning_rate: 1e-3,
            iterations: 200,
            beta: 1.0,
            num_batches: 3,
            p_tilde: PTilde::Density,
            self_loops: SelfLoops::All,
            recon_target: ReconTarget::All,
            prior_grad: PriorGrad::Off,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.hidden_dim == 0 || self.latent_dim == 0 || self.num_batches == 0 {
            return Err(Error::contract("hidden, latent and num_batches must be at least 1"));
        }
        if self.learning_rate.is_nan() || self.learning_rate <= 0.0 {
            return Err(Error::contract(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        check_beta(self.beta)?;
        if let PTilde::Fixed(p) = self.p_tilde {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::contract(format!("p_tilde must lie in [0, 1], got {p}")));
            }
        }
        Ok(())
    }

    pub fn dims(&self, input: usize) -> ModelDims {
        ModelDims {
            input,
            hidden: self.hidden_dim,
            latent: self.latent_dim,
        }
    }
}

/// Independent random streams derived from one seed.
#[derive(Debug, Clone)]
pub struct RngStreams {
    pub init: ChaCha8Rng,
    pub ordering: ChaCha8Rng,
    pub fills: ChaCha8Rng,
    pub noise: ChaCha8Rng,
}

impl RngStreams {
    pub fn new(seed: u64) -> Self {
        let stream = |id: u64| {
            let mut r = ChaCha8Rng::seed_from_u64(seed);
            r.set_stream(id);
            r
        };
        RngStreams {
            init: stream(0),
            ordering: stream(1),
            fills: stream(2),
            noise: stream(3),
        }
    }
}

/// Where a step's prior over its old nodes comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum StepPrior {
    /// `N(0, I)` for every node (no old nodes, or a static baseline).
    StandardNormal,
    /// The previous step's posterior over exactly this step's old nodes.
    Previous,
    /// First transition: the seed subgraph's encoding under its own
    /// candidate matrix toward the incoming batch (an independent fill
    /// draw), restricted to the old rows. Holds that normalised operator.
    Seed(Matrix),
}

/// Everything one growth step needs, with all randomness already drawn.
#[derive(Debug, Clone, PartialEq)]
pub struct StepPlan {
    /// Graph node ids present after the step, old nodes first.
    pub nodes: Vec<usize>,
    pub n_old: usize,
    /// Normalised propagation operator; `None` means the identity.
    pub operator: Option<Matrix>,
    pub prior: StepPrior,
    /// True adjacency over the reconstructed nodes (`nodes` or its old
    /// prefix, per [`ReconTarget`]).
    pub target: Matrix,
    pub pos_weight: f64,
    pub eps: Matrix,
}

impl StepPlan {
    pub fn n_new(&self) -> usize {
        self.nodes.len() - self.n_old
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationPlan {
    pub steps: Vec<StepPlan>,
}

/// Single step over the whole graph with a standard-normal prior; the
/// objective of the static autoencoders.
pub fn static_plan(g: &Graph, variant: ModelVariant, latent: usize, noise: &mut ChaCha8Rng) -> Result<IterationPlan> {
    let operator = match variant {
        ModelVariant::MlpVae => None,
        _ => Some(normalize_adjacency(&with_self_loops(g.adjacency()))?.into_matrix()),
    };
    let target = g.adjacency().clone();
    let pos_weight = default_pos_weight(&target);
    Ok(IterationPlan {
        steps: vec![StepPlan {
            nodes: (0..g.n()).collect(),
            n_old: 0,
            operator,
            prior: StepPrior::StandardNormal,
            target,
            pos_weight,
            eps: Matrix::random_normal(g.n(), latent, noise),
        }],
    })
}

/// Samples one ordering and replays its growth schedule.
pub fn growth_plan(g: &Graph, cfg: &TrainConfig, p_tilde: f64, rngs: &mut RngStreams) -> Result<IterationPlan> {
    let ordering = sample_ordering(g.n(), &mut rngs.ordering)?;
    let schedule = build_schedule(g.n(), cfg.num_batches)?;
    if schedule.num_transitions() == 0 {
        return static_plan(g, ModelVariant::GGcn, cfg.latent_dim, &mut rngs.noise);
    }
    let seq = ordering.sequence();
    let mut steps = Vec::with_capacity(schedule.num_transitions());
    for (k, batch) in schedule.batches().iter().enumerate().skip(1) {
        let old = &seq[..batch.start];
        let nodes = seq[..batch.end].to_vec();
        let a_obs = g.adjacency().select_square(old);
        let candidate = build_candidate(&a_obs, batch.len(), p_tilde, &mut rngs.fills)?;
        let operator = normalize_adjacency(&candidate.with_self_loops(cfg.self_loops))?.into_matrix();
        let prior = if k == 1 {
            let seed_candidate = build_candidate(&a_obs, batch.len(), p_tilde, &mut rngs.fills)?;
            StepPrior::Seed(normalize_adjacency(&seed_candidate.with_self_loops(cfg.self_loops))?.into_matrix())
        } else {
            StepPrior::Previous
        };
        let target = match cfg.recon_target {
            ReconTarget::All => g.adjacency().select_square(&nodes),
            ReconTarget::OldOnly => a_obs,
        };
        let pos_weight = default_pos_weight(&target);
        let eps = Matrix::random_normal(nodes.len(), cfg.latent_dim, &mut rngs.noise);
        steps.push(StepPlan {
            nodes,
            n_old: old.len(),
            operator: Some(operator),
            prior,
            target,
            pos_weight,
            eps,
        });
    }
    Ok(IterationPlan { steps })
}

/// Draws the plan for one iteration of `variant`.
pub fn sample_plan(
    g: &Graph,
    variant: ModelVariant,
    cfg: &TrainConfig,
    p_tilde: f64,
    rngs: &mut RngStreams,
) -> Result<IterationPlan> {
    match variant {
        ModelVariant::GGcn => growth_plan(g, cfg, p_tilde, rngs),
        _ => static_plan(g, variant, cfg.latent_dim, &mut rngs.noise),
    }
}

/// Records the summed loss of a plan on `tape`; returns the loss handle and
/// the per-step breakdowns.
pub fn forward_plan(
    tape: &mut Tape,
    g: &Graph,
    w: &ParamVars,
    plan: &IterationPlan,
    cfg: &TrainConfig,
) -> Result<(Var, Vec<LossBreakdown>)> {
    if plan.steps.is_empty() {
        return Err(Error::contract("iteration plan has no steps"));
    }
    let latent = cfg.latent_dim;
    let mut prev: Option<LatentVars> = None;
    let mut totals = Vec::with_capacity(plan.steps.len());
    let mut breakdowns = Vec::with_capacity(plan.steps.len());

    for step in &plan.steps {
        let x = tape.constant(g.features().select_rows(&step.nodes));
        let a = step.operator.as_ref().map(|m| tape.constant(m.clone()));
        let q = encode_on_tape(tape, a, x, w)?;

        let old_prior = match (&step.prior, step.n_old) {
            (_, 0) | (StepPrior::StandardNormal, _) => None,
            (StepPrior::Previous, n_old) => {
                let p = prev.ok_or_else(|| Error::contract("first step cannot use a previous prior"))?;
                if tape.value(p.mean).rows() != n_old {
                    return Err(Error::contract("previous posterior does not cover the old nodes"));
                }
                Some(p)
            }
            (StepPrior::Seed(op), n_old) => {
                let sa = tape.constant(op.clone());
                let seed_q = encode_on_tape(tape, Some(sa), x, w)?;
                Some(seed_q.slice_rows(tape, 0, n_old)?)
            }
        };
        let old_prior = old_prior.map(|p| match cfg.prior_grad {
            PriorGrad::Off => LatentVars {
                mean: tape.detach(p.mean),
                log_std: tape.detach(p.log_std),
            },
            PriorGrad::On => p,
        });
        let prior = match old_prior {
            None => {
                let zeros = Matrix::zeros(step.nodes.len(), latent);
                LatentVars {
                    mean: tape.constant(zeros.clone()),
                    log_std: tape.constant(zeros),
                }
            }
            Some(p) => {
                let zm = tape.constant(Matrix::zeros(step.n_new(), latent));
                let zs = tape.constant(Matrix::zeros(step.n_new(), latent));
                LatentVars {
                    mean: tape.concat_rows(&[p.mean, zm])?,
                    log_std: tape.concat_rows(&[p.log_std, zs])?,
                }
            }
        };

        let z = reparameterize_on_tape(tape, &q, &step.eps)?;
        let z_target = if step.target.rows() == step.nodes.len() {
            z
        } else {
            tape.slice_rows(z, 0, step.target.rows())?
        };
        let recon = recon_on_tape(tape, z_target, &step.target, step.pos_weight)?;
        let kl = kl_on_tape(tape, &q, &prior)?;
        let scaled = tape.scale(kl, cfg.beta);
        let total = tape.add(recon, scaled)?;
        breakdowns.push(LossBreakdown::new(
            tape.value(recon)[(0, 0)],
            tape.value(kl)[(0, 0)],
            cfg.beta,
        ));
        totals.push(total);
        prev = Some(q);
    }

    let mut loss = totals[0];
    for &t in &totals[1..] {
        loss = tape.add(loss, t)?;
    }
    Ok((loss, breakdowns))
}

/// Loss value of a frozen plan.
pub fn plan_loss(g: &Graph, params: &ModelParams, plan: &IterationPlan, cfg: &TrainConfig) -> Result<f64> {
    let mut tape = Tape::new();
    let w = params.on_tape(&mut tape);
    let (loss, _) = forward_plan(&mut tape, g, &w, plan, cfg)?;
    tape.value(loss).item()
}

/// Loss value and gradients `[∂W0, ∂W1, ∂W2]` of a frozen plan.
pub fn plan_loss_and_grads(
    g: &Graph,
    params: &ModelParams,
    plan: &IterationPlan,
    cfg: &TrainConfig,
) -> Result<(f64, Vec<LossBreakdown>, [Matrix; 3])> {
    let mut tape = Tape::new();
    let w = params.on_tape(&mut tape);
    let (loss, steps) = forward_plan(&mut tape, g, &w, plan, cfg)?;
    let value = tape.value(loss).item()?;
    let mut grads = tape.backward(loss)?;
    let mut take = |v: Var| grads.take(v).expect("parameters always receive gradients");
    Ok((value, steps, [take(w.w0), take(w.w1), take(w.w2)]))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub steps: Vec<LossBreakdown>,
    /// Step losses summed.
    pub loss: LossBreakdown,
    pub seconds: f64,
    pub validation: Option<Metrics>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    pub records: Vec<IterationRecord>,
}

impl TrainHistory {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn totals(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.loss.total).collect()
    }

    /// One row per growth step: `iteration,step_index,recon,kl,total`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "iteration,step_index,recon,kl,total")?;
        for r in &self.records {
            for (k, s) in r.steps.iter().enumerate() {
                writeln!(out, "{},{},{},{},{}", r.iteration, k, s.recon, s.kl, s.total)?;
            }
        }
        Ok(())
    }

    /// CSV file preceded by a `# config: {...}` comment line.
    pub fn save_csv(&self, path: &Path, cfg: &TrainConfig, variant: ModelVariant) -> Result<()> {
        let mut buf = Vec::new();
        let echo = serde_json::json!({ "variant": variant, "config": cfg });
        writeln!(buf, "# config: {echo}").expect("writing to a Vec");
        self.write_csv(&mut buf).expect("writing to a Vec");
        std::fs::write(path, buf).map_err(|e| Error::io(path, e))
    }
}

#[derive(Debug, Clone)]
pub struct Trained {
    pub variant: ModelVariant,
    pub config: TrainConfig,
    pub params: ModelParams,
    pub history: TrainHistory,
}

/// Trains `variant` on `g` without progress reporting.
pub fn train(g: &Graph, variant: ModelVariant, cfg: &TrainConfig) -> Result<Trained> {
    train_with(g, variant, cfg, |_, _| None)
}

pub fn train_ggcn(g: &Graph, cfg: &TrainConfig) -> Result<Trained> {
    train(g, ModelVariant::GGcn, cfg)
}

pub fn train_gcnvae(g: &Graph, cfg: &TrainConfig) -> Result<Trained> {
    train(g, ModelVariant::GcnVae, cfg)
}

pub fn train_mlpvae(g: &Graph, cfg: &TrainConfig) -> Result<Trained> {
    train(g, ModelVariant::MlpVae, cfg)
}

/// Trains `variant` on `g`, calling `on_iteration` after every update. The
/// hook may return validation metrics, which are stored in the history.
pub fn train_with<F>(g: &Graph, variant: ModelVariant, cfg: &TrainConfig, mut on_iteration: F) -> Result<Trained>
where
    F: FnMut(&IterationRecord, &ModelParams) -> Option<Metrics>,
{
    cfg.validate()?;
    if variant == ModelVariant::GGcn && g.n() < cfg.num_batches + 1 {
        return Err(Error::contract(format!(
            "{} nodes cannot be grown in {} batches",
            g.n(),
            cfg.num_batches
        )));
    }
    if g.n() < 2 {
        return Err(Error::contract("training needs at least two nodes"));
    }
    let mut rngs = RngStreams::new(cfg.seed);
    let mut params = ModelParams::init(cfg.dims(g.feature_dim()), &mut rngs.init);
    let mut adam = AdamState::new(AdamConfig::with_learning_rate(cfg.learning_rate), params.tensors());
    let p_tilde = cfg.p_tilde.resolve(g);
    let mut history = TrainHistory::default();

    for iteration in 0..cfg.iterations {
        let started = Instant::now();
        let plan = sample_plan(g, variant, cfg, p_tilde, &mut rngs)?;
        let (loss, steps, grads) = plan_loss_and_grads(g, &params, &plan, cfg)?;
        if !loss.is_finite() {
            let step = steps
                .iter()
                .position(|s| !s.total.is_finite())
                .map_or_else(|| "sum".to_string(), |k| k.to_string());
            return Err(Error::NonFinite(format!("loss at iteration {iteration}, step {step}")));
        }
        if grads.iter().any(|g| !g.all_finite()) {
            return Err(Error::NonFinite(format!("gradient at iteration {iteration}")));
        }
        adam.step(&mut params.tensors_mut(), &[&grads[0], &grads[1], &grads[2]])?;

        let recon = steps.iter().map(|s| s.recon).sum();
        let kl = steps.iter().map(|s| s.kl).sum();
        let mut record = IterationRecord {
            iteration,
            loss: LossBreakdown {
                recon,
                kl,
                total: loss,
                beta: cfg.beta,
            },
            steps,
            seconds: started.elapsed().as_secs_f64(),
            validation: None,
        };
        record.validation = on_iteration(&record, &params);
        history.records.push(record);
    }

    Ok(Trained {
        variant,
        config: cfg.clone(),
        params,
        history,
    })
}
