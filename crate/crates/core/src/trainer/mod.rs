//! Mini-batch training loop for the encoder and the autoencoder, with
//! checkpoint/resume, layer activation export and latent interpolation.

mod checkpoint;

pub use checkpoint::{Checkpoint, CHECKPOINT_VERSION};

use std::time::Instant;

use crate::datasets::Dataset;
use crate::graph::{input_similarities, GraphConfig, InputSimilarities, NeighborGraph};
use crate::losses::{loss_autoencoder, loss_encoder, BatchTargets, LatentSigma, LossConfig, LossMode, Schedule};
use crate::network::{adam_step, AdamState, LayerSpec, Network};
use crate::numerics::{Matrix, SeededRng};
use crate::Error;

/// Rows per forward pass when embedding a whole dataset.
const EMBED_CHUNK: usize = 4096;

const STREAM_DECODER: u64 = 1;
const STREAM_SHUFFLE: u64 = 2;

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub seed: u64,
    pub loss: LossConfig,
    pub layers: LayerSpec,
    /// Input-space neighbours per point.
    pub k: usize,
    pub nu_input: f64,
    pub autoencoder: bool,
    /// Epochs between metric evaluations; 0 disables them.
    pub eval_every: usize,
    /// Epochs between checkpoints; 0 disables them.
    pub checkpoint_every: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 500,
            batch_size: 1500,
            lr: 0.001,
            seed: 0,
            loss: LossConfig::default(),
            layers: LayerSpec {
                dims: vec![-1, 600, 500, 400, 300, 200, 2],
            },
            k: 15,
            nu_input: 100.0,
            autoencoder: false,
            eval_every: 0,
            checkpoint_every: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), Error> {
        if self.epochs == 0 {
            return Err(Error::InvalidArgument("epochs must be at least 1".into()));
        }
        if self.batch_size < 2 {
            return Err(Error::InvalidArgument(format!("batch_size must be at least 2, got {}", self.batch_size)));
        }
        if !(self.lr > 0.0) || !self.lr.is_finite() {
            return Err(Error::InvalidArgument(format!("lr must be positive, got {}", self.lr)));
        }
        if !(self.nu_input > 0.0) {
            return Err(Error::InvalidArgument(format!("nu_input must be positive, got {}", self.nu_input)));
        }
        if self.k == 0 {
            return Err(Error::InvalidArgument("k must be at least 1".into()));
        }
        self.loss.validate()
    }

    pub fn graph_config(&self) -> GraphConfig {
        GraphConfig {
            k: self.k,
            q: self.loss.q,
            nu_input: self.nu_input,
        }
    }
}

/// What happened in one epoch.
#[derive(Clone, Debug, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    /// Latent ν applied.
    pub nu: f64,
    pub mu: f64,
    /// Summed batch objective (encoder plus β·reconstruction).
    pub loss: f64,
    /// Summed reconstruction error (autoencoder only).
    pub reconstruction: f64,
    pub batches: usize,
    /// `Σ_b n_b²` over the epoch's batches.
    pub pair_budget: u64,
    pub kernel_evaluations: u64,
    pub sigma_unconverged: usize,
    /// Largest |residual| among converged latent scales.
    pub sigma_max_residual: f64,
}

#[derive(Clone, Debug)]
pub struct RunReport {
    pub epochs: Vec<EpochStats>,
    pub embedding: Matrix,
    pub wall_seconds: f64,
    pub config: TrainConfig,
}

impl RunReport {
    pub fn losses(&self) -> Vec<f64> {
        self.epochs.iter().map(|e| e.loss).collect()
    }

    pub fn nu_applied(&self) -> Vec<f64> {
        self.epochs.iter().map(|e| e.nu).collect()
    }
}

/// Trained networks and the run report.
#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub encoder: Network,
    pub decoder: Option<Network>,
    pub graph: NeighborGraph,
    pub report: RunReport,
}

/// Stateful training run over one dataset.
pub struct Trainer<'a> {
    ds: &'a Dataset,
    cfg: TrainConfig,
    graph: NeighborGraph,
    sims: InputSimilarities,
    schedule: Schedule,
    encoder: Network,
    decoder: Option<Network>,
    enc_adam: AdamState,
    dec_adam: Option<AdamState>,
    rng: SeededRng,
    /// Last solved latent scale per point, NaN before the first solve.
    sigma_cache: Vec<f64>,
    stats: Vec<EpochStats>,
    started: Instant,
}

fn batch_targets(
    mode: LossMode,
    batch: &[usize],
    graph: &NeighborGraph,
    sims: &InputSimilarities,
    local: &mut [usize],
) -> BatchTargets {
    match mode {
        LossMode::Lgp => BatchTargets::Lgp(sims.restrict(batch)),
        LossMode::Lis => {
            for (a, &i) in batch.iter().enumerate() {
                local[i] = a;
            }
            let nb = batch
                .iter()
                .map(|&i| {
                    graph
                        .neighbors(i)
                        .iter()
                        .zip(graph.knn.neighbor_sq_dists(i))
                        .filter(|(&j, _)| local[j] != usize::MAX)
                        .map(|(&j, &d)| (local[j], d.sqrt()))
                        .collect()
                })
                .collect();
            for &i in batch {
                local[i] = usize::MAX;
            }
            BatchTargets::Lis(nb)
        }
    }
}

impl<'a> Trainer<'a> {
    pub fn new(ds: &'a Dataset, cfg: TrainConfig) -> Result<Self, Error> {
        cfg.validate()?;
        if ds.len() < 2 {
            return Err(Error::InvalidArgument("training needs at least two points".into()));
        }
        let dims = cfg.layers.resolve(ds.dim());
        if dims[0] != ds.dim() {
            return Err(Error::Shape(format!(
                "first layer width {} does not match the data width {}",
                dims[0],
                ds.dim()
            )));
        }
        let (graph, sims) = input_similarities(ds, &cfg.graph_config())?;
        let schedule = cfg.loss.schedule(cfg.epochs)?;
        let encoder = Network::init_he(&dims, &mut SeededRng::new(cfg.seed))?;
        let decoder = if cfg.autoencoder {
            let rev: Vec<usize> = dims.iter().rev().copied().collect();
            Some(Network::init_he(&rev, &mut SeededRng::with_stream(cfg.seed, STREAM_DECODER))?)
        } else {
            None
        };
        let enc_adam = AdamState::new(&encoder);
        let dec_adam = decoder.as_ref().map(AdamState::new);
        Ok(Self {
            ds,
            graph,
            sims,
            schedule,
            enc_adam,
            dec_adam,
            rng: SeededRng::with_stream(cfg.seed, STREAM_SHUFFLE),
            sigma_cache: vec![f64::NAN; ds.len()],
            stats: Vec::with_capacity(cfg.epochs),
            encoder,
            decoder,
            cfg,
            started: Instant::now(),
        })
    }

    /// Rebuilds a run from a checkpoint taken with the same data and configuration.
    pub fn resume(ds: &'a Dataset, cfg: TrainConfig, ckpt: Checkpoint) -> Result<Self, Error> {
        let mut t = Self::new(ds, cfg)?;
        if ckpt.encoder.dims() != t.encoder.dims() {
            return Err(Error::Format(format!(
                "checkpoint encoder widths {:?} do not match the configuration {:?}",
                ckpt.encoder.dims(),
                t.encoder.dims()
            )));
        }
        if ckpt.decoder.is_some() != t.decoder.is_some() {
            return Err(Error::Format("checkpoint and configuration disagree on the decoder".into()));
        }
        if ckpt.sigma_cache.len() != ds.len() || ckpt.stats.len() != ckpt.epoch || ckpt.epoch > t.cfg.epochs {
            return Err(Error::Format("checkpoint does not belong to this dataset or run length".into()));
        }
        if ckpt.rng.seed != t.cfg.seed {
            return Err(Error::Format(format!("checkpoint seed {} differs from configured seed {}", ckpt.rng.seed, t.cfg.seed)));
        }
        t.encoder = ckpt.encoder;
        t.enc_adam = ckpt.encoder_adam;
        t.decoder = ckpt.decoder;
        t.dec_adam = ckpt.decoder_adam;
        t.rng = SeededRng::from_state(ckpt.rng);
        t.sigma_cache = ckpt.sigma_cache;
        t.stats = ckpt.stats;
        Ok(t)
    }

    pub fn config(&self) -> &TrainConfig {
        &self.cfg
    }

    pub fn graph(&self) -> &NeighborGraph {
        &self.graph
    }

    pub fn schedule(&self) -> &Schedule {
        &self.schedule
    }

    pub fn encoder(&self) -> &Network {
        &self.encoder
    }

    pub fn decoder(&self) -> Option<&Network> {
        self.decoder.as_ref()
    }

    /// Epochs completed so far.
    pub fn epoch(&self) -> usize {
        self.stats.len()
    }

    pub fn is_done(&self) -> bool {
        self.epoch() >= self.cfg.epochs
    }

    pub fn stats(&self) -> &[EpochStats] {
        &self.stats
    }

    /// Current embedding of the whole dataset in original order.
    pub fn embed(&self) -> Result<Matrix, Error> {
        embed(&self.encoder, &self.ds.features)
    }

    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint {
            epoch: self.epoch(),
            encoder: self.encoder.clone(),
            encoder_adam: self.enc_adam.clone(),
            decoder: self.decoder.clone(),
            decoder_adam: self.dec_adam.clone(),
            rng: self.rng.state(),
            sigma_cache: self.sigma_cache.clone(),
            stats: self.stats.clone(),
        }
    }

    /// Runs one epoch over a fresh shuffle of the data.
    pub fn run_epoch(&mut self) -> Result<&EpochStats, Error> {
        let epoch = self.epoch();
        if epoch >= self.cfg.epochs {
            return Err(Error::InvalidArgument("all configured epochs have already run".into()));
        }
        let nu = self.schedule.nu[epoch];
        let mu = self.schedule.mu[epoch];
        let m = self.ds.len();
        let bs = self.cfg.batch_size.min(m);
        let perm = self.rng.permutation(m);
        let mut local = vec![usize::MAX; m];
        let mut st = EpochStats {
            epoch,
            nu,
            mu,
            loss: 0.0,
            reconstruction: 0.0,
            batches: 0,
            pair_budget: 0,
            kernel_evaluations: 0,
            sigma_unconverged: 0,
            sigma_max_residual: 0.0,
        };
        for (b, batch) in perm.chunks(bs).enumerate() {
            if batch.len() < 2 {
                continue;
            }
            let xb = self.ds.features.select_rows(batch);
            let targets = batch_targets(self.cfg.loss.mode, batch, &self.graph, &self.sims, &mut local);
            let warm: Vec<f64> = batch.iter().map(|&i| self.sigma_cache[i]).collect();
            let warm = if warm.iter().all(|s| s.is_finite()) { Some(warm) } else { None };
            let sigma = LatentSigma::Solve(warm.as_deref());

            let trace = self.encoder.forward(&xb)?;
            let z = trace.output();
            let (value, enc, grad_z) = match self.decoder.as_mut() {
                None => {
                    let enc = loss_encoder(z, &targets, &self.cfg.loss, nu, mu, sigma)?;
                    let g = enc.grad.clone();
                    (enc.loss, enc, g)
                }
                Some(dec) => {
                    let dtrace = dec.forward(z)?;
                    let ae = loss_autoencoder(&xb, z, dtrace.output(), &targets, &self.cfg.loss, nu, mu, sigma)?;
                    let (dgrads, gz_dec) = dec.backward(&dtrace, &ae.grad_reconstruction)?;
                    if !ae.total.is_finite() {
                        return Err(Error::Diverged {
                            epoch,
                            batch: b,
                            value: ae.total,
                        });
                    }
                    adam_step(dec, &dgrads, self.dec_adam.as_mut().expect("decoder has optimizer state"), self.cfg.lr)?;
                    st.reconstruction += ae.reconstruction;
                    let mut g = ae.encoder.grad.clone();
                    for (a, d) in g.as_mut_slice().iter_mut().zip(gz_dec.as_slice()) {
                        *a += d;
                    }
                    (ae.total, ae.encoder, g)
                }
            };
            if !value.is_finite() {
                return Err(Error::Diverged { epoch, batch: b, value });
            }
            let (grads, _) = self.encoder.backward(&trace, &grad_z)?;
            adam_step(&mut self.encoder, &grads, &mut self.enc_adam, self.cfg.lr)?;

            for (a, &i) in batch.iter().enumerate() {
                if let Some(&s) = enc.sigma.get(a) {
                    self.sigma_cache[i] = s;
                }
            }
            for (&c, &r) in enc.sigma_converged.iter().zip(&enc.sigma_residual) {
                if c {
                    st.sigma_max_residual = st.sigma_max_residual.max(r.abs());
                } else {
                    st.sigma_unconverged += 1;
                }
            }
            st.loss += value;
            st.batches += 1;
            st.pair_budget += (batch.len() * batch.len()) as u64;
            st.kernel_evaluations += enc.kernel_evaluations;
        }
        self.stats.push(st);
        Ok(self.stats.last().unwrap())
    }

    /// Runs the remaining epochs, calling `on_epoch` after each one.
    pub fn run_with<F>(&mut self, mut on_epoch: F) -> Result<(), Error>
    where
        F: FnMut(&Trainer<'a>, &EpochStats) -> Result<(), Error>,
    {
        while !self.is_done() {
            let st = self.run_epoch()?.clone();
            on_epoch(self, &st)?;
        }
        Ok(())
    }

    pub fn run(&mut self) -> Result<(), Error> {
        self.run_with(|_, _| Ok(()))
    }

    pub fn finish(self) -> Result<TrainOutcome, Error> {
        let embedding = self.embed()?;
        if !embedding.is_finite() {
            return Err(Error::NonFinite("final embedding".into()));
        }
        Ok(TrainOutcome {
            report: RunReport {
                epochs: self.stats,
                embedding,
                wall_seconds: self.started.elapsed().as_secs_f64(),
                config: self.cfg,
            },
            encoder: self.encoder,
            decoder: self.decoder,
            graph: self.graph,
        })
    }
}

/// Encoder-only training to completion.
pub fn train_encoder(ds: &Dataset, cfg: TrainConfig) -> Result<TrainOutcome, Error> {
    let cfg = TrainConfig { autoencoder: false, ..cfg };
    let mut t = Trainer::new(ds, cfg)?;
    t.run()?;
    t.finish()
}

/// Joint encoder/decoder training to completion.
pub fn train_autoencoder(ds: &Dataset, cfg: TrainConfig) -> Result<TrainOutcome, Error> {
    let cfg = TrainConfig { autoencoder: true, ..cfg };
    let mut t = Trainer::new(ds, cfg)?;
    t.run()?;
    t.finish()
}

/// Final-layer output for every row, in chunks.
pub fn embed(net: &Network, x: &Matrix) -> Result<Matrix, Error> {
    let mut data = Vec::with_capacity(x.rows() * net.output_dim());
    let idx: Vec<usize> = (0..x.rows()).collect();
    for chunk in idx.chunks(EMBED_CHUNK) {
        data.extend(net.predict(&x.select_rows(chunk))?.into_vec());
    }
    Matrix::from_vec(x.rows(), net.output_dim(), data)
}

/// Every layer's activations `X⁽⁰⁾ … X⁽ᴸ⁾` for the full dataset.
pub fn export_layer_activations(net: &Network, x: &Matrix) -> Result<Vec<Matrix>, Error> {
    Ok(net.forward(x)?.activations)
}

/// Decodes `steps` latent points evenly spaced from `za` to `zb` inclusive.
pub fn interpolate_latent(decoder: Option<&Network>, za: &[f64], zb: &[f64], steps: usize) -> Result<Matrix, Error> {
    let dec = decoder.ok_or_else(|| Error::InvalidArgument("interpolation needs a trained decoder".into()))?;
    if steps < 2 {
        return Err(Error::InvalidArgument(format!("interpolation needs at least 2 steps, got {steps}")));
    }
    if za.len() != dec.input_dim() || zb.len() != dec.input_dim() {
        return Err(Error::Shape(format!("latent points must have {} coordinates", dec.input_dim())));
    }
    let d = za.len();
    let mut z = Matrix::zeros(steps, d);
    for s in 0..steps {
        let t = s as f64 / (steps - 1) as f64;
        for k in 0..d {
            z[(s, k)] = if s == steps - 1 { zb[k] } else { za[k] + t * (zb[k] - za[k]) };
        }
    }
    dec.predict(&z)
}
