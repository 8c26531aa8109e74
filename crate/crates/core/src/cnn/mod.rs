//! Small convolutional classifier for proposal patches.
//!
//! Layer stack: conv 3×3×8 → ReLU → max-pool 2 → conv 3×3×16 → ReLU →
//! max-pool 2 → fully connected 64 → fully connected 3 + softmax.

mod layers;
pub mod store;

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::proposal::{BBox, ProposalRegion};
use crate::raster::{normalize, resize_bilinear, RasterGray};
use layers::*;

pub use store::{load_dataset_dir, load_model, model_from_bytes, model_to_bytes, save_model};

/// Side of the square network input.
pub const PATCH: usize = 64;
const C1: usize = 8;
const C2: usize = 16;
const HIDDEN: usize = 64;
const CONV_BIAS_INIT: f64 = 0.01;
pub const N_CLASSES: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Insulator,
    Triangle,
    Other,
}

impl Label {
    pub const ALL: [Label; N_CLASSES] = [Label::Insulator, Label::Triangle, Label::Other];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            Label::Insulator => "insulator",
            Label::Triangle => "triangle",
            Label::Other => "other",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|l| l.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown label '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Arch {
    /// The full convolutional stack.
    Conv,
    /// Convolutions and pooling bypassed: fc 64 → fc 3 on the raw patch.
    LinearOnly,
}

impl Arch {
    pub(crate) fn code(self) -> u8 {
        match self {
            Arch::Conv => 1,
            Arch::LinearOnly => 2,
        }
    }

    pub(crate) fn from_code(c: u8) -> Option<Self> {
        match c {
            1 => Some(Arch::Conv),
            2 => Some(Arch::LinearOnly),
            _ => None,
        }
    }

    /// Parameter tensor shapes, weights before biases, layer by layer.
    pub fn shapes(self) -> Vec<Vec<usize>> {
        let flat = match self {
            Arch::Conv => C2 * (PATCH / 4) * (PATCH / 4),
            Arch::LinearOnly => PATCH * PATCH,
        };
        let mut s = Vec::new();
        if self == Arch::Conv {
            s.extend([vec![C1, 1, 3, 3], vec![C1], vec![C2, C1, 3, 3], vec![C2]]);
        }
        s.extend([vec![HIDDEN, flat], vec![HIDDEN], vec![N_CLASSES, HIDDEN], vec![N_CLASSES]]);
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CnnModel {
    pub(crate) arch: Arch,
    pub(crate) seed: u64,
    pub(crate) params: Vec<Vec<f64>>,
}

/// Intermediate values kept for the backward pass.
#[derive(Debug)]
struct Trace {
    conv1_in: Vec<f64>,
    r1: Vec<f64>,
    idx1: Vec<usize>,
    p1: Vec<f64>,
    r2: Vec<f64>,
    idx2: Vec<usize>,
    flat: Vec<f64>,
    hidden: Vec<f64>,
    probs: Vec<f64>,
}

impl Trace {
    /// Which units pass their ReLU and which inputs win each pool.
    fn pattern(&self) -> (Vec<bool>, Vec<bool>, &[usize], &[usize]) {
        (
            self.r1.iter().map(|v| *v > 0.0).collect(),
            self.r2.iter().map(|v| *v > 0.0).collect(),
            &self.idx1,
            &self.idx2,
        )
    }
}

pub type Gradients = Vec<Vec<f64>>;

impl CnnModel {
    /// Xavier-uniform weights from a seeded generator; fully connected biases
    /// zero, convolution biases a small positive constant.
    pub fn new(seed: u64) -> Self {
        Self::with_arch(Arch::Conv, seed)
    }

    pub fn with_arch(arch: Arch, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let conv_bias: &[usize] = if arch == Arch::Conv { &[1, 3] } else { &[] };
        let params = arch
            .shapes()
            .into_iter()
            .enumerate()
            .map(|(i, shape)| {
                let n: usize = shape.iter().product();
                if shape.len() == 1 {
                    // conv biases start slightly positive so flat input areas
                    // do not sit exactly on the ReLU kink
                    let b = if conv_bias.contains(&i) { CONV_BIAS_INIT } else { 0.0 };
                    return vec![b; n];
                }
                let (fan_in, fan_out) = if shape.len() == 4 {
                    (shape[1] * 9, shape[0] * 9)
                } else {
                    (shape[1], shape[0])
                };
                let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
                (0..n).map(|_| rng.gen_range(-limit..limit)).collect()
            })
            .collect();
        Self { arch, seed, params }
    }

    /// Every parameter zero; the output is uniform for any input.
    pub fn zeros(arch: Arch) -> Self {
        let params = arch
            .shapes()
            .iter()
            .map(|s| vec![0.0; s.iter().product()])
            .collect();
        Self { arch, seed: 0, params }
    }

    pub fn arch(&self) -> Arch {
        self.arch
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn params(&self) -> &[Vec<f64>] {
        &self.params
    }

    pub fn n_params(&self) -> usize {
        self.params.iter().map(Vec::len).sum()
    }

    fn check_input(x: &RasterGray) -> Result<()> {
        if x.dims() != (PATCH, PATCH) {
            return Err(Error::DimensionMismatch {
                expected: (PATCH, PATCH),
                actual: x.dims(),
            });
        }
        Ok(())
    }

    fn run(&self, x: &[f64]) -> Trace {
        let p = &self.params;
        match self.arch {
            Arch::Conv => {
                let mut r1 = conv3x3_forward(x, 1, PATCH, &p[0], &p[1], C1);
                relu_in_place(&mut r1);
                let (p1, idx1) = maxpool2_forward(&r1, C1, PATCH);
                let mut r2 = conv3x3_forward(&p1, C1, PATCH / 2, &p[2], &p[3], C2);
                relu_in_place(&mut r2);
                let (flat, idx2) = maxpool2_forward(&r2, C2, PATCH / 2);
                let hidden = fc_forward(&flat, &p[4], &p[5]);
                let probs = softmax(&fc_forward(&hidden, &p[6], &p[7]));
                Trace {
                    conv1_in: x.to_vec(),
                    r1,
                    idx1,
                    p1,
                    r2,
                    idx2,
                    flat,
                    hidden,
                    probs,
                }
            }
            Arch::LinearOnly => {
                let hidden = fc_forward(x, &p[0], &p[1]);
                let probs = softmax(&fc_forward(&hidden, &p[2], &p[3]));
                Trace {
                    conv1_in: Vec::new(),
                    r1: Vec::new(),
                    idx1: Vec::new(),
                    p1: Vec::new(),
                    r2: Vec::new(),
                    idx2: Vec::new(),
                    flat: x.to_vec(),
                    hidden,
                    probs,
                }
            }
        }
    }

    /// Class probabilities for a 64×64 patch.
    pub fn forward(&self, x: &RasterGray) -> Result<[f64; N_CLASSES]> {
        Self::check_input(x)?;
        let t = self.run(x.data());
        Ok([t.probs[0], t.probs[1], t.probs[2]])
    }

    /// Cross-entropy of one sample.
    pub fn loss(&self, x: &RasterGray, label: Label) -> Result<f64> {
        let p = self.forward(x)?;
        Ok(-p[label.index()].ln())
    }

    /// Loss and its gradient with respect to every parameter.
    pub fn loss_and_gradients(&self, x: &RasterGray, label: Label) -> Result<(f64, Gradients)> {
        Self::check_input(x)?;
        let mut grads: Gradients = self.params.iter().map(|v| vec![0.0; v.len()]).collect();
        let loss = self.accumulate_gradients(x.data(), label, &mut grads);
        Ok((loss, grads))
    }

    fn accumulate_gradients(&self, x: &[f64], label: Label, grads: &mut Gradients) -> f64 {
        let t = self.run(x);
        let loss = -t.probs[label.index()].ln();
        let mut dlogits = t.probs.clone();
        dlogits[label.index()] -= 1.0;
        let p = &self.params;
        let fc = if self.arch == Arch::Conv { 4 } else { 0 };
        let (g_lo, g_hi) = grads.split_at_mut(fc + 2);
        let dhidden = {
            let (dw, db) = g_hi.split_at_mut(1);
            fc_backward(&t.hidden, &p[fc + 2], &dlogits, &mut dw[0], &mut db[0], true).expect("requested")
        };
        let need_flat = self.arch == Arch::Conv;
        let dflat = {
            let (dw, db) = g_lo[fc..].split_at_mut(1);
            fc_backward(&t.flat, &p[fc], &dhidden, &mut dw[0], &mut db[0], need_flat)
        };
        if let Some(dflat) = dflat {
            let mut dr2 = maxpool2_backward(&dflat, &t.idx2, t.r2.len());
            for (g, v) in dr2.iter_mut().zip(&t.r2) {
                if *v <= 0.0 {
                    *g = 0.0;
                }
            }
            let (g01, g23) = g_lo.split_at_mut(2);
            let (dw2, db2) = g23.split_at_mut(1);
            let dp1 = conv3x3_backward(&t.p1, C1, PATCH / 2, &p[2], &dr2, C2, &mut dw2[0], &mut db2[0], true)
                .expect("requested");
            let mut dr1 = maxpool2_backward(&dp1, &t.idx1, t.r1.len());
            for (g, v) in dr1.iter_mut().zip(&t.r1) {
                if *v <= 0.0 {
                    *g = 0.0;
                }
            }
            let (dw1, db1) = g01.split_at_mut(1);
            conv3x3_backward(&t.conv1_in, 1, PATCH, &p[0], &dr1, C1, &mut dw1[0], &mut db1[0], false);
        }
        loss
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub momentum: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.01,
            epochs: 30,
            batch_size: 16,
            seed: 7,
            momentum: 0.9,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) {
            return Err(Error::InvalidParameter("learning rate must be positive".into()));
        }
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::InvalidParameter("epochs and batch size must be at least 1".into()));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::InvalidParameter("momentum must be in [0, 1)".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub patch: RasterGray,
    pub label: Label,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct LabeledDataset {
    pub train: Vec<Sample>,
    pub test: Vec<Sample>,
}

impl LabeledDataset {
    pub fn validate(&self) -> Result<()> {
        for s in self.train.iter().chain(&self.test) {
            CnnModel::check_input(&s.patch)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: CnnModel,
    /// Mean training-set loss after each epoch.
    pub epoch_losses: Vec<f64>,
}

pub fn mean_loss(model: &CnnModel, samples: &[Sample]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut total = 0.0;
    for s in samples {
        total += model.loss(&s.patch, s.label)?;
    }
    Ok(total / samples.len() as f64)
}

/// Mini-batch gradient descent with momentum on cross-entropy. The sample
/// order of each epoch comes from a generator seeded by `cfg.seed`.
pub fn train(model: &CnnModel, data: &LabeledDataset, cfg: &TrainConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    if data.train.is_empty() {
        return Err(Error::EmptyDataset);
    }
    data.validate()?;
    let mut model = model.clone();
    let mut velocity: Gradients = model.params.iter().map(|v| vec![0.0; v.len()]).collect();
    let mut grads: Gradients = velocity.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..data.train.len()).collect();
    let mut epoch_losses = Vec::with_capacity(cfg.epochs);

    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(cfg.batch_size) {
            grads.iter_mut().for_each(|g| g.fill(0.0));
            for &i in batch {
                let s = &data.train[i];
                let l = model.accumulate_gradients(s.patch.data(), s.label, &mut grads);
                if !l.is_finite() {
                    return Err(Error::Diverged { epoch });
                }
            }
            let scale = cfg.learning_rate / batch.len() as f64;
            for ((w, v), g) in model.params.iter_mut().zip(&mut velocity).zip(&grads) {
                for ((wi, vi), gi) in w.iter_mut().zip(v.iter_mut()).zip(g) {
                    *vi = cfg.momentum * *vi - scale * gi;
                    *wi += *vi;
                }
            }
        }
        let loss = mean_loss(&model, &data.train)?;
        if !loss.is_finite() || model.params.iter().flatten().any(|w| !w.is_finite()) {
            return Err(Error::Diverged { epoch });
        }
        log::info!("epoch {epoch}: loss {loss:.6}");
        epoch_losses.push(loss);
    }
    Ok(TrainOutcome { model, epoch_losses })
}

pub fn accuracy(model: &CnnModel, samples: &[Sample]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut right = 0;
    for s in samples {
        if classify(model, &s.patch)?.0 == s.label {
            right += 1;
        }
    }
    Ok(right as f64 / samples.len() as f64)
}

/// Per-tensor probe order for the gradient check, shuffled by a generator
/// seeded from the model seed.
fn probe_order(model: &CnnModel) -> Vec<Vec<usize>> {
    let mut rng = ChaCha8Rng::seed_from_u64(model.seed ^ 0x9e37_79b9_7f4a_7c15);
    model
        .params
        .iter()
        .map(|p| {
            let mut idx: Vec<usize> = (0..p.len()).collect();
            idx.shuffle(&mut rng);
            idx
        })
        .collect()
}

const FD_STEP: f64 = 1e-5;
/// Weights probed per tensor (all of a smaller one).
const PROBES_PER_TENSOR: usize = 60;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheck {
    /// Largest `|a − n| / max(|a|, |n|, 1e-6)` over the probed weights.
    pub max_rel_error: f64,
    pub probed: usize,
    /// Candidates passed over because a ±step perturbation flipped a ReLU or
    /// moved a max-pool winner, where the loss is not differentiable.
    pub skipped_at_kinks: usize,
}

/// Compares `analytic` against central differences. Weights whose
/// perturbation changes the activation pattern are replaced by the next
/// candidate of the same tensor.
pub fn compare_gradients(model: &CnnModel, sample: &Sample, analytic: &Gradients) -> Result<GradCheck> {
    CnnModel::check_input(&sample.patch)?;
    let x = sample.patch.data();
    let base_trace = model.run(x);
    let base = base_trace.pattern();
    let mut probe = model.clone();
    let mut out = GradCheck {
        max_rel_error: 0.0,
        probed: 0,
        skipped_at_kinks: 0,
    };
    for (t, order) in probe_order(model).into_iter().enumerate() {
        let mut taken = 0;
        for i in order {
            if taken == PROBES_PER_TENSOR {
                break;
            }
            let orig = probe.params[t][i];
            probe.params[t][i] = orig + FD_STEP;
            let up = probe.run(x);
            probe.params[t][i] = orig - FD_STEP;
            let down = probe.run(x);
            probe.params[t][i] = orig;
            if up.pattern() != base || down.pattern() != base {
                out.skipped_at_kinks += 1;
                continue;
            }
            let label = sample.label.index();
            let numeric = (-up.probs[label].ln() + down.probs[label].ln()) / (2.0 * FD_STEP);
            let a = analytic[t][i];
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-6);
            out.max_rel_error = out.max_rel_error.max(rel);
            out.probed += 1;
            taken += 1;
        }
    }
    Ok(out)
}

/// Backpropagated gradients against central finite differences.
pub fn gradient_check(model: &CnnModel, sample: &Sample) -> Result<f64> {
    let (_, grads) = model.loss_and_gradients(&sample.patch, sample.label)?;
    Ok(compare_gradients(model, sample, &grads)?.max_rel_error)
}

/// Bilinear resample to the network size, then min-max normalization.
pub fn prepare_patch(img: &RasterGray) -> RasterGray {
    normalize(&resize_bilinear(img, PATCH, PATCH))
}

pub fn crop_patch(img: &RasterGray, bbox: &BBox) -> Result<RasterGray> {
    let [x, y, w, h] = *bbox;
    if w == 0 || h == 0 || x + w > img.width() || y + h > img.height() {
        return Err(Error::InvalidParameter(format!("box {bbox:?} outside the image")));
    }
    Ok(prepare_patch(&img.crop(x, y, w, h)))
}

pub fn classify(model: &CnnModel, patch: &RasterGray) -> Result<(Label, [f64; N_CLASSES])> {
    let probs = model.forward(patch)?;
    let best = (0..N_CLASSES)
        .max_by(|&a, &b| probs[a].total_cmp(&probs[b]).then(b.cmp(&a)))
        .expect("three classes");
    Ok((Label::ALL[best], probs))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifiedRegion {
    #[serde(flatten)]
    pub region: ProposalRegion,
    pub label: Label,
    pub confidence: f64,
}

/// Keeps regions not labelled `other`, in input order.
pub fn filter_with<F>(regions: &[ProposalRegion], mut label_of: F) -> Result<Vec<ClassifiedRegion>>
where
    F: FnMut(&ProposalRegion) -> Result<(Label, f64)>,
{
    let mut out = Vec::new();
    for r in regions {
        let (label, confidence) = label_of(r)?;
        if label != Label::Other {
            out.push(ClassifiedRegion {
                region: r.clone(),
                label,
                confidence,
            });
        }
    }
    Ok(out)
}

pub fn filter_proposals(model: &CnnModel, regions: &[ProposalRegion], img: &RasterGray) -> Result<Vec<ClassifiedRegion>> {
    filter_with(regions, |r| {
        let (label, probs) = classify(model, &crop_patch(img, &r.bbox)?)?;
        Ok((label, probs[label.index()]))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::proposal::{Coord, Subband};
    use crate::synth;

    fn sample(seed: u64, label: Label) -> Sample {
        let kind = match label {
            Label::Insulator => synth::ObjectKind::Bar,
            Label::Triangle => synth::ObjectKind::Triangle,
            Label::Other => synth::ObjectKind::Noise,
        };
        Sample {
            patch: synth::toy_patch(kind, seed),
            label,
        }
    }

    #[test]
    fn same_seed_same_weights() {
        assert_eq!(CnnModel::new(5), CnnModel::new(5));
        assert_ne!(CnnModel::new(5), CnnModel::new(6));
        let shapes = Arch::Conv.shapes();
        for (p, s) in CnnModel::new(1).params().iter().zip(shapes) {
            assert_eq!(p.len(), s.iter().product::<usize>());
        }
    }

    #[test]
    fn probabilities_sum_to_one() {
        let m = CnnModel::new(3);
        for seed in 0..5 {
            let p = m.forward(&sample(seed, Label::Triangle).patch).unwrap();
            assert!((p.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
            assert!(p.iter().all(|&v| v >= 0.0));
        }
        assert!(m.forward(&RasterGray::zeros(32, 32)).is_err());
    }

    #[test]
    fn zero_model_is_uniform() {
        for arch in [Arch::Conv, Arch::LinearOnly] {
            let p = CnnModel::zeros(arch).forward(&sample(1, Label::Other).patch).unwrap();
            for v in p {
                assert!((v - 1.0 / 3.0).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        for (seed, label) in [(11, Label::Insulator), (12, Label::Triangle), (13, Label::Other)] {
            let m = CnnModel::new(seed);
            let s = sample(seed, label);
            let (_, g) = m.loss_and_gradients(&s.patch, s.label).unwrap();
            let check = compare_gradients(&m, &s, &g).unwrap();
            assert!(check.probed >= 200);
            assert!(check.max_rel_error <= 1e-4, "{check:?}");
        }
        let lin = CnnModel::with_arch(Arch::LinearOnly, 11);
        let e = gradient_check(&lin, &sample(3, Label::Triangle)).unwrap();
        assert!(e <= 1e-7, "{e}");
    }

    #[test]
    fn corrupted_gradients_are_caught() {
        let m = CnnModel::new(4);
        let s = sample(9, Label::Other);
        let (_, mut g) = m.loss_and_gradients(&s.patch, s.label).unwrap();
        for t in &mut g {
            for v in t.iter_mut() {
                *v = *v * 1.5 + 1e-3;
            }
        }
        let check = compare_gradients(&m, &s, &g).unwrap();
        assert!(check.max_rel_error > 1e-2);
        assert!(check.probed >= 200);
    }

    #[test]
    fn single_sample_is_memorized() {
        let data = LabeledDataset {
            train: vec![sample(0, Label::Triangle)],
            test: Vec::new(),
        };
        let cfg = TrainConfig { epochs: 200, batch_size: 1, learning_rate: 0.01, ..TrainConfig::default() };
        let out = train(&CnnModel::new(1), &data, &cfg).unwrap();
        let p = out.model.forward(&data.train[0].patch).unwrap();
        assert!(p[Label::Triangle.index()] >= 0.99, "{p:?}");
    }

    #[test]
    fn training_is_deterministic_and_checks_inputs() {
        let train_set: Vec<Sample> = (0..6).map(|i| sample(i, Label::ALL[i as usize % 3])).collect();
        let data = LabeledDataset { train: train_set, test: Vec::new() };
        let cfg = TrainConfig { epochs: 2, batch_size: 4, ..TrainConfig::default() };
        let a = train(&CnnModel::new(2), &data, &cfg).unwrap();
        let b = train(&CnnModel::new(2), &data, &cfg).unwrap();
        assert_eq!(a.model, b.model);
        assert_eq!(a.epoch_losses, b.epoch_losses);

        assert!(matches!(train(&CnnModel::new(2), &LabeledDataset::default(), &cfg), Err(Error::EmptyDataset)));
        let wild = TrainConfig { learning_rate: 1e6, epochs: 3, ..cfg };
        assert!(matches!(train(&CnnModel::new(2), &data, &wild), Err(Error::Diverged { .. })));
    }

    #[test]
    fn small_step_lowers_batch_loss() {
        let batch: Vec<Sample> = (0..6).map(|i| sample(100 + i, Label::ALL[i as usize % 3])).collect();
        let data = LabeledDataset { train: batch.clone(), test: Vec::new() };
        let m = CnnModel::new(8);
        let before = mean_loss(&m, &batch).unwrap();
        let cfg = TrainConfig { epochs: 1, batch_size: 6, learning_rate: 1e-3, momentum: 0.0, ..TrainConfig::default() };
        let after = train(&m, &data, &cfg).unwrap().epoch_losses[0];
        assert!(after < before, "{after} vs {before}");
    }

    #[test]
    fn filter_rule_and_order() {
        let region = |x| ProposalRegion {
            bbox: [x, 0, 8, 8],
            subband: Subband::Vertical,
            seed: Coord::new(0, 0),
            entropy: -1.0,
            nfc_seed: 0.5,
        };
        let regions = vec![region(0), region(10)];
        let verdicts = [(Label::Insulator, 0.8), (Label::Other, 0.9)];
        let mut k = 0;
        let kept = filter_with(&regions, |_| {
            k += 1;
            Ok(verdicts[k - 1])
        })
        .unwrap();
        assert_eq!(kept.len(), 1);
        assert_eq!(kept[0].region, regions[0]);
        assert_eq!(kept[0].label, Label::Insulator);

        let m = CnnModel::new(1);
        assert!(filter_proposals(&m, &[], &RasterGray::zeros(10, 10)).unwrap().is_empty());
    }
}
