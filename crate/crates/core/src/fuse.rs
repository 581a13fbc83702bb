//! α-scaled fusion of topic and embedding vectors, compressed by a
//! one-hidden-layer autoencoder whose hidden activations become the fused
//! per-poem features.
//!
//! Network: `input → hidden (ReLU) → input (linear)`, loss = mean squared
//! error over all output coordinates. Training is single-threaded Adam with
//! global gradient-norm clipping; every reduction runs in a fixed order, so
//! a seed reproduces the weights bit-for-bit.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::numfmt::{exact, sig9};
use crate::rng::SeededRng;

pub const DEFAULT_ALPHA: f64 = 15.0;
pub const DEFAULT_HIDDEN: usize = 16;
pub const DEFAULT_EPOCHS: usize = 1000;
pub const DEFAULT_BATCH: usize = 128;
const FORMAT_TAG: &str = "poemscope-autoencoder 1";

#[derive(Debug, Clone, PartialEq)]
pub struct FusionInput {
    pub poem_index: usize,
    pub vector: Vec<f64>,
}

/// `[alpha · theta ‖ embedding]`.
pub fn build_fusion_input(
    poem_index: usize,
    theta: &[f64],
    embedding: &[f64],
    alpha: f64,
) -> Result<FusionInput> {
    if alpha.is_nan() || alpha <= 0.0 {
        return Err(Error::InvalidInput(format!("alpha must be > 0, got {alpha}")));
    }
    if theta.is_empty() || embedding.is_empty() {
        return Err(Error::InvalidInput("empty theta or embedding".into()));
    }
    let mass: f64 = theta.iter().sum();
    if (mass - 1.0).abs() > 1e-6 {
        return Err(Error::InvalidInput(format!("theta sums to {mass}, not 1")));
    }
    let mut vector = Vec::with_capacity(theta.len() + embedding.len());
    vector.extend(theta.iter().map(|t| alpha * t));
    vector.extend_from_slice(embedding);
    Ok(FusionInput { poem_index, vector })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub hidden: usize,
    pub epochs: usize,
    pub batch: usize,
    pub learning_rate: f64,
    pub clip_norm: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            hidden: DEFAULT_HIDDEN,
            epochs: DEFAULT_EPOCHS,
            batch: DEFAULT_BATCH,
            learning_rate: 1e-3,
            clip_norm: 5.0,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Autoencoder {
    pub input_dim: usize,
    pub hidden_dim: usize,
    /// `hidden × input`, row-major.
    pub enc_w: Vec<f64>,
    pub enc_b: Vec<f64>,
    /// `input × hidden`, row-major.
    pub dec_w: Vec<f64>,
    pub dec_b: Vec<f64>,
    pub seed: u64,
    pub batch: usize,
    /// Mean per-sample loss of each epoch.
    pub loss_log: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FusedLatent {
    pub poem_index: usize,
    pub vector: Vec<f64>,
}

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const EPS: f64 = 1e-7;

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
}

impl Adam {
    fn new(n: usize) -> Self {
        Self {
            m: vec![0.0; n],
            v: vec![0.0; n],
        }
    }

    fn step(&mut self, params: &mut [f64], grads: &[f64], lr: f64, bias1: f64, bias2: f64) {
        for i in 0..params.len() {
            let g = grads[i];
            self.m[i] = BETA1 * self.m[i] + (1.0 - BETA1) * g;
            self.v[i] = BETA2 * self.v[i] + (1.0 - BETA2) * g * g;
            let m_hat = self.m[i] / bias1;
            let v_hat = self.v[i] / bias2;
            params[i] -= lr * m_hat / (v_hat.sqrt() + EPS);
        }
    }
}

struct Grads {
    enc_w: Vec<f64>,
    enc_b: Vec<f64>,
    dec_w: Vec<f64>,
    dec_b: Vec<f64>,
}

impl Grads {
    fn zeros(input: usize, hidden: usize) -> Self {
        Self {
            enc_w: vec![0.0; input * hidden],
            enc_b: vec![0.0; hidden],
            dec_w: vec![0.0; input * hidden],
            dec_b: vec![0.0; input],
        }
    }

    fn clear(&mut self) {
        for g in [&mut self.enc_w, &mut self.enc_b, &mut self.dec_w, &mut self.dec_b] {
            g.iter_mut().for_each(|x| *x = 0.0);
        }
    }

    fn scale(&mut self, f: f64) {
        for g in [&mut self.enc_w, &mut self.enc_b, &mut self.dec_w, &mut self.dec_b] {
            g.iter_mut().for_each(|x| *x *= f);
        }
    }

    fn norm(&self) -> f64 {
        [&self.enc_w, &self.enc_b, &self.dec_w, &self.dec_b]
            .iter()
            .flat_map(|g| g.iter())
            .map(|x| x * x)
            .sum::<f64>()
            .sqrt()
    }
}

impl Autoencoder {
    /// Glorot-uniform weights, zero biases.
    fn init(input_dim: usize, hidden_dim: usize, seed: u64, batch: usize) -> Self {
        let mut rng = SeededRng::new(seed);
        let limit = (6.0 / (input_dim + hidden_dim) as f64).sqrt();
        let enc_w = (0..input_dim * hidden_dim)
            .map(|_| rng.uniform(-limit, limit))
            .collect();
        let dec_w = (0..input_dim * hidden_dim)
            .map(|_| rng.uniform(-limit, limit))
            .collect();
        Self {
            input_dim,
            hidden_dim,
            enc_w,
            enc_b: vec![0.0; hidden_dim],
            dec_w,
            dec_b: vec![0.0; input_dim],
            seed,
            batch,
            loss_log: Vec::new(),
        }
    }

    /// Pre-activations and ReLU activations of the hidden layer.
    fn hidden(&self, x: &[f64], pre: &mut [f64], act: &mut [f64]) {
        for h in 0..self.hidden_dim {
            let row = &self.enc_w[h * self.input_dim..(h + 1) * self.input_dim];
            let z = self.enc_b[h] + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>();
            pre[h] = z;
            act[h] = z.max(0.0);
        }
    }

    fn decode(&self, act: &[f64], out: &mut [f64]) {
        for (o, slot) in out.iter_mut().enumerate() {
            let row = &self.dec_w[o * self.hidden_dim..(o + 1) * self.hidden_dim];
            *slot = self.dec_b[o] + row.iter().zip(act).map(|(w, a)| w * a).sum::<f64>();
        }
    }

    pub fn reconstruct(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_len(x.len())?;
        let mut pre = vec![0.0; self.hidden_dim];
        let mut act = vec![0.0; self.hidden_dim];
        let mut out = vec![0.0; self.input_dim];
        self.hidden(x, &mut pre, &mut act);
        self.decode(&act, &mut out);
        Ok(out)
    }

    /// Mean squared error of one sample (averaged over coordinates).
    pub fn sample_loss(&self, x: &[f64]) -> Result<f64> {
        let out = self.reconstruct(x)?;
        Ok(out.iter().zip(x).map(|(y, t)| (y - t) * (y - t)).sum::<f64>() / self.input_dim as f64)
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.input_dim {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim,
                actual: len,
            });
        }
        Ok(())
    }

    /// Accumulates gradients of the batch-mean loss; returns the summed sample loss.
    fn backprop(&self, batch: &[&[f64]], grads: &mut Grads, scratch: &mut Scratch) -> f64 {
        let (n_in, n_h) = (self.input_dim, self.hidden_dim);
        let m = batch.len() as f64;
        let coef = 2.0 / (m * n_in as f64);
        let mut loss = 0.0;
        for x in batch {
            self.hidden(x, &mut scratch.pre, &mut scratch.act);
            self.decode(&scratch.act, &mut scratch.out);
            let mut sq = 0.0;
            for o in 0..n_in {
                let r = scratch.out[o] - x[o];
                sq += r * r;
                scratch.delta_out[o] = coef * r;
            }
            loss += sq / n_in as f64;
            scratch.delta_h.iter_mut().for_each(|d| *d = 0.0);
            for o in 0..n_in {
                let d = scratch.delta_out[o];
                grads.dec_b[o] += d;
                let row = &self.dec_w[o * n_h..(o + 1) * n_h];
                let grow = &mut grads.dec_w[o * n_h..(o + 1) * n_h];
                for h in 0..n_h {
                    grow[h] += d * scratch.act[h];
                    scratch.delta_h[h] += d * row[h];
                }
            }
            for h in 0..n_h {
                if scratch.pre[h] <= 0.0 {
                    continue;
                }
                let d = scratch.delta_h[h];
                grads.enc_b[h] += d;
                let grow = &mut grads.enc_w[h * n_in..(h + 1) * n_in];
                for (g, v) in grow.iter_mut().zip(x.iter()) {
                    *g += d * v;
                }
            }
        }
        loss
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "{FORMAT_TAG}").unwrap();
        writeln!(out, "input\t{}", self.input_dim).unwrap();
        writeln!(out, "hidden\t{}", self.hidden_dim).unwrap();
        writeln!(out, "seed\t{}", self.seed).unwrap();
        writeln!(out, "epochs\t{}", self.loss_log.len()).unwrap();
        writeln!(out, "batch\t{}", self.batch).unwrap();
        for (name, values) in [
            ("enc_w", &self.enc_w),
            ("enc_b", &self.enc_b),
            ("dec_w", &self.dec_w),
            ("dec_b", &self.dec_b),
        ] {
            writeln!(out, "{name}").unwrap();
            for v in values {
                writeln!(out, "{}", exact(*v)).unwrap();
            }
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let path = std::path::Path::new("<autoencoder>");
        let lines: Vec<&str> = text.lines().collect();
        if lines.first() != Some(&FORMAT_TAG) {
            return Err(Error::format(path, 1, "unknown weights format"));
        }
        let header = |i: usize, name: &str| -> Result<u64> {
            lines
                .get(i)
                .and_then(|l| l.strip_prefix(name))
                .and_then(|l| l.strip_prefix('\t'))
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| Error::format(path, i + 1, format!("expected {name}")))
        };
        let input_dim = header(1, "input")? as usize;
        let hidden_dim = header(2, "hidden")? as usize;
        let seed = header(3, "seed")?;
        let batch = header(5, "batch")? as usize;
        let mut cursor = 6;
        let mut block = |name: &str, len: usize| -> Result<Vec<f64>> {
            if lines.get(cursor) != Some(&name) {
                return Err(Error::format(path, cursor + 1, format!("expected {name}")));
            }
            let values = lines
                .get(cursor + 1..cursor + 1 + len)
                .ok_or_else(|| Error::format(path, cursor + 1, format!("truncated {name}")))?
                .iter()
                .map(|l| l.parse::<f64>().map_err(|_| Error::format(path, cursor + 1, "bad number")))
                .collect::<Result<Vec<_>>>()?;
            cursor += len + 1;
            Ok(values)
        };
        let enc_w = block("enc_w", input_dim * hidden_dim)?;
        let enc_b = block("enc_b", hidden_dim)?;
        let dec_w = block("dec_w", input_dim * hidden_dim)?;
        let dec_b = block("dec_b", input_dim)?;
        Ok(Self {
            input_dim,
            hidden_dim,
            enc_w,
            enc_b,
            dec_w,
            dec_b,
            seed,
            batch,
            loss_log: Vec::new(),
        })
    }

    /// `epoch,loss` rows, 9 significant digits.
    pub fn loss_csv(&self) -> String {
        let mut out = String::from("epoch,loss\n");
        for (i, l) in self.loss_log.iter().enumerate() {
            writeln!(out, "{},{}", i + 1, sig9(*l)).unwrap();
        }
        out
    }
}

struct Scratch {
    pre: Vec<f64>,
    act: Vec<f64>,
    out: Vec<f64>,
    delta_out: Vec<f64>,
    delta_h: Vec<f64>,
}

/// Trains on all `inputs`; each epoch reshuffles with the seeded generator
/// and keeps the final partial batch.
pub fn train_autoencoder(inputs: &[FusionInput], config: &TrainConfig) -> Result<Autoencoder> {
    let first = inputs
        .first()
        .ok_or_else(|| Error::InvalidInput("no training inputs".into()))?;
    if config.epochs == 0 || config.batch == 0 || config.hidden == 0 {
        return Err(Error::InvalidInput("epochs, batch and hidden must be >= 1".into()));
    }
    let dim = first.vector.len();
    if let Some(bad) = inputs.iter().find(|x| x.vector.len() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            actual: bad.vector.len(),
        });
    }
    let mut model = Autoencoder::init(dim, config.hidden, config.seed, config.batch);
    let mut shuffle_rng = SeededRng::with_stream(config.seed, 1);
    let mut grads = Grads::zeros(dim, config.hidden);
    let mut scratch = Scratch {
        pre: vec![0.0; config.hidden],
        act: vec![0.0; config.hidden],
        out: vec![0.0; dim],
        delta_out: vec![0.0; dim],
        delta_h: vec![0.0; config.hidden],
    };
    let mut opt = [
        Adam::new(model.enc_w.len()),
        Adam::new(model.enc_b.len()),
        Adam::new(model.dec_w.len()),
        Adam::new(model.dec_b.len()),
    ];
    let (mut pow1, mut pow2) = (1.0, 1.0);
    let mut order: Vec<usize> = (0..inputs.len()).collect();
    for epoch in 1..=config.epochs {
        shuffle_rng.shuffle(&mut order);
        let mut epoch_loss = 0.0;
        for chunk in order.chunks(config.batch) {
            let batch: Vec<&[f64]> = chunk.iter().map(|&i| inputs[i].vector.as_slice()).collect();
            grads.clear();
            epoch_loss += model.backprop(&batch, &mut grads, &mut scratch);
            let norm = grads.norm();
            if !norm.is_finite() {
                return Err(Error::Divergence { epoch });
            }
            if norm > config.clip_norm {
                grads.scale(config.clip_norm / norm);
            }
            pow1 *= BETA1;
            pow2 *= BETA2;
            let (b1, b2) = (1.0 - pow1, 1.0 - pow2);
            let lr = config.learning_rate;
            opt[0].step(&mut model.enc_w, &grads.enc_w, lr, b1, b2);
            opt[1].step(&mut model.enc_b, &grads.enc_b, lr, b1, b2);
            opt[2].step(&mut model.dec_w, &grads.dec_w, lr, b1, b2);
            opt[3].step(&mut model.dec_b, &grads.dec_b, lr, b1, b2);
        }
        let mean = epoch_loss / inputs.len() as f64;
        if !mean.is_finite() {
            return Err(Error::Divergence { epoch });
        }
        model.loss_log.push(mean);
    }
    Ok(model)
}

/// Hidden-layer activations for one input.
pub fn encode(model: &Autoencoder, input: &FusionInput) -> Result<FusedLatent> {
    model.check_len(input.vector.len())?;
    let mut pre = vec![0.0; model.hidden_dim];
    let mut act = vec![0.0; model.hidden_dim];
    model.hidden(&input.vector, &mut pre, &mut act);
    Ok(FusedLatent {
        poem_index: input.poem_index,
        vector: act,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn input(v: Vec<f64>) -> FusionInput {
        FusionInput {
            poem_index: 0,
            vector: v,
        }
    }

    #[test]
    fn fusion_scaling() {
        let e: Vec<f64> = (0..768).map(|i| i as f64 / 768.0).collect();
        let f = build_fusion_input(0, &[0.25; 4], &e, 15.0).unwrap();
        assert_eq!(f.vector.len(), 772);
        assert_eq!(&f.vector[..4], &[3.75; 4]);
        assert_eq!(&f.vector[4..], e.as_slice());
        let f = build_fusion_input(0, &[1.0, 0.0, 0.0, 0.0], &e, 1.0).unwrap();
        assert_eq!(&f.vector[..4], &[1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn fusion_errors() {
        assert!(build_fusion_input(0, &[0.5, 0.5], &[1.0], 0.0).is_err());
        assert!(build_fusion_input(0, &[0.5, 0.5], &[1.0], -2.0).is_err());
        assert!(build_fusion_input(0, &[0.5, 0.4], &[1.0], 1.0).is_err());
    }

    #[test]
    fn larger_alpha_larger_topic_block() {
        let theta = [0.1, 0.2, 0.3, 0.4];
        let norm = |a: f64| {
            let f = build_fusion_input(0, &theta, &[0.0; 8], a).unwrap();
            f.vector[..4].iter().map(|x| x * x).sum::<f64>().sqrt()
        };
        assert!(norm(15.0) > norm(5.0));
        assert!(norm(5.0) > norm(1.0));
    }

    #[test]
    fn zero_model_encodes_to_zero() {
        let model = Autoencoder {
            input_dim: 3,
            hidden_dim: 16,
            enc_w: vec![0.0; 48],
            enc_b: vec![0.0; 16],
            dec_w: vec![0.0; 48],
            dec_b: vec![0.0; 3],
            seed: 0,
            batch: 1,
            loss_log: vec![],
        };
        let z = encode(&model, &input(vec![1.0, 2.0, 3.0])).unwrap();
        assert_eq!(z.vector, vec![0.0; 16]);
        assert!(encode(&model, &input(vec![1.0])).is_err());
    }

    #[test]
    fn analytic_gradient_matches_finite_differences() {
        let config = TrainConfig {
            hidden: 3,
            ..TrainConfig::default()
        };
        let model = Autoencoder::init(4, config.hidden, 5, 2);
        let xs = [vec![0.3, -1.2, 0.8, 0.1], vec![1.0, 0.5, -0.4, 2.0]];
        let batch: Vec<&[f64]> = xs.iter().map(Vec::as_slice).collect();
        let mut grads = Grads::zeros(4, 3);
        let mut scratch = Scratch {
            pre: vec![0.0; 3],
            act: vec![0.0; 3],
            out: vec![0.0; 4],
            delta_out: vec![0.0; 4],
            delta_h: vec![0.0; 3],
        };
        model.backprop(&batch, &mut grads, &mut scratch);
        let loss = |m: &Autoencoder| {
            xs.iter().map(|x| m.sample_loss(x).unwrap()).sum::<f64>() / xs.len() as f64
        };
        let h = 1e-6;
        for i in 0..model.enc_w.len() {
            let mut p = model.clone();
            p.enc_w[i] += h;
            let mut q = model.clone();
            q.enc_w[i] -= h;
            let fd = (loss(&p) - loss(&q)) / (2.0 * h);
            assert!((fd - grads.enc_w[i]).abs() < 1e-6, "enc_w[{i}]: {fd} vs {}", grads.enc_w[i]);
        }
        for i in 0..model.dec_b.len() {
            let mut p = model.clone();
            p.dec_b[i] += h;
            let mut q = model.clone();
            q.dec_b[i] -= h;
            let fd = (loss(&p) - loss(&q)) / (2.0 * h);
            assert!((fd - grads.dec_b[i]).abs() < 1e-6);
        }
        for i in 0..model.dec_w.len() {
            let mut p = model.clone();
            p.dec_w[i] += h;
            let mut q = model.clone();
            q.dec_w[i] -= h;
            let fd = (loss(&p) - loss(&q)) / (2.0 * h);
            assert!((fd - grads.dec_w[i]).abs() < 1e-6);
        }
    }

    #[test]
    fn constant_data_is_learned() {
        let mut rng = SeededRng::new(11);
        let x: Vec<f64> = (0..772).map(|_| rng.uniform(-1.0, 1.0)).collect();
        let data: Vec<FusionInput> = (0..50).map(|_| input(x.clone())).collect();
        let model = train_autoencoder(&data, &TrainConfig::default()).unwrap();
        assert_eq!(model.loss_log.len(), 1000);
        let (first, last) = (model.loss_log[0], *model.loss_log.last().unwrap());
        assert!(last < 1e-4 * first, "{first} -> {last}");
    }

    #[test]
    fn training_errors() {
        assert!(train_autoencoder(&[], &TrainConfig::default()).is_err());
        let data = vec![input(vec![1.0, 2.0]), input(vec![1.0])];
        assert!(train_autoencoder(&data, &TrainConfig::default()).is_err());
        let bad = TrainConfig {
            epochs: 0,
            ..TrainConfig::default()
        };
        assert!(train_autoencoder(&[input(vec![1.0])], &bad).is_err());
    }

    #[test]
    fn divergence_is_reported() {
        let data = vec![input(vec![f64::MAX, -f64::MAX, f64::MAX])];
        let err = train_autoencoder(&data, &TrainConfig::default()).unwrap_err();
        assert!(matches!(err, Error::Divergence { epoch: 1 }));
        assert_eq!(err.exit_code(), 3);
    }

    #[test]
    fn weights_text_round_trip() {
        let data: Vec<FusionInput> = (0..5).map(|i| input(vec![i as f64, 1.0, -0.5])).collect();
        let cfg = TrainConfig {
            epochs: 3,
            hidden: 2,
            ..TrainConfig::default()
        };
        let model = train_autoencoder(&data, &cfg).unwrap();
        let back = Autoencoder::from_text(&model.to_text()).unwrap();
        assert_eq!(back.enc_w, model.enc_w);
        assert_eq!(back.dec_b, model.dec_b);
        assert!(model.loss_csv().starts_with("epoch,loss\n1,"));
    }
}
