//! Early-fusion input assembly and a trainable late-fusion head.
//!
//! The early-fusion tensor is the five geometric layers followed by the
//! chosen semantic encoding, zero-filled where invalid and otherwise
//! unnormalized. The late-fusion head is a per-cell two-layer network,
//! `logits = W2·relu(W1·x + b1) + b2`, which is what a stack of two 1×1
//! convolutions computes: no information crosses cell boundaries.
//!
//! Loss and gradients are reduced over fixed chunks of cells in chunk order,
//! so results do not depend on the thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::classes::{ClassId, Label, NUM_CLASSES};
use crate::error::{Error, Result};
use crate::geometry::argmax;
use crate::grid::{GridSpec, LabelGrid};
use crate::gridmap::{GridMapStack, LAYER_NAMES};
use crate::semantic::{ArgmaxGrid, SemanticGrid};

/// Cells per reduction chunk.
const CHUNK: usize = 1024;

/// Default hidden width of the late-fusion head.
pub const DEFAULT_HIDDEN: usize = 32;

/// A stack of named per-cell channels.
#[derive(Debug, Clone, PartialEq)]
pub struct FusionInput {
    spec: GridSpec,
    names: Vec<String>,
    /// Cell-major: `names.len()` consecutive values per cell.
    data: Vec<f64>,
    /// Cells with at least one valid source channel.
    cell_valid: Vec<bool>,
}

impl FusionInput {
    pub fn new(spec: GridSpec, names: Vec<String>, data: Vec<f64>, cell_valid: Vec<bool>) -> Result<Self> {
        if data.len() != spec.n_cells() * names.len() || cell_valid.len() != spec.n_cells() {
            return Err(Error::DimensionMismatch(format!(
                "{} values / {} validity flags for {} cells × {} channels",
                data.len(),
                cell_valid.len(),
                spec.n_cells(),
                names.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::DimensionMismatch("non-finite channel value".into()));
        }
        Ok(FusionInput {
            spec,
            names,
            data,
            cell_valid,
        })
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn channel_names(&self) -> &[String] {
        &self.names
    }

    pub fn channels(&self) -> usize {
        self.names.len()
    }

    pub fn cell(&self, k: usize) -> &[f64] {
        let c = self.channels();
        &self.data[k * c..(k + 1) * c]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn cell_validity(&self) -> &[bool] {
        &self.cell_valid
    }

    /// One channel as a raster.
    pub fn channel(&self, index: usize) -> Vec<f64> {
        self.data.iter().skip(index).step_by(self.channels()).copied().collect()
    }
}

/// Semantic source for the early-fusion tensor.
#[derive(Debug, Clone, Copy)]
pub enum SemanticFeatures<'a> {
    /// Histogram, summed or mean encoding: eleven channels.
    Grid(&'a SemanticGrid),
    /// Argmax encoding: one channel holding `ClassId + 1`, 0 for empty cells.
    Argmax(&'a ArgmaxGrid),
}

/// Concatenate the geometric layers with a semantic encoding.
pub fn assemble_early_fusion_input(stack: &GridMapStack, semantic: SemanticFeatures<'_>) -> Result<FusionInput> {
    let spec = *stack.spec();
    let sem_spec = match semantic {
        SemanticFeatures::Grid(g) => *g.spec(),
        SemanticFeatures::Argmax(a) => *a.spec(),
    };
    if sem_spec != spec {
        return Err(Error::SpecMismatch);
    }

    let mut names: Vec<String> = LAYER_NAMES.iter().map(|s| s.to_string()).collect();
    match semantic {
        SemanticFeatures::Grid(g) => {
            let prefix = g.mode().name();
            names.extend(ClassId::ALL.iter().map(|c| format!("{prefix}/{}", c.name())));
        }
        SemanticFeatures::Argmax(_) => names.push("argmax".into()),
    }
    let channels = names.len();
    let layers = stack.layers();

    let mut data = Vec::with_capacity(spec.n_cells() * channels);
    let mut cell_valid = Vec::with_capacity(spec.n_cells());
    for k in 0..spec.n_cells() {
        let mut valid = false;
        for layer in layers {
            data.push(layer.values()[k]);
            valid |= layer.validity()[k];
        }
        match semantic {
            SemanticFeatures::Grid(g) => {
                data.extend_from_slice(&g.mass()[k * NUM_CLASSES..(k + 1) * NUM_CLASSES]);
                valid |= g.counts()[k] > 0;
            }
            SemanticFeatures::Argmax(a) => {
                let label = a.labels()[k];
                data.push(label.map_or(0.0, |c| (c.index() + 1) as f64));
                valid |= label.is_some();
            }
        }
        cell_valid.push(valid);
    }
    FusionInput::new(spec, names, data, cell_valid)
}

/// Per-channel affine standardization applied before the first layer.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelNorm {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl ChannelNorm {
    /// Mean and standard deviation per channel over the valid cells of all
    /// inputs. Constant channels get unit scale.
    pub fn fit(inputs: &[&FusionInput]) -> Result<Self> {
        let channels = inputs.first().ok_or(Error::EmptyDataset)?.channels();
        let mut sum = vec![0.0; channels];
        let mut sq = vec![0.0; channels];
        let mut n = 0usize;
        for input in inputs {
            if input.channels() != channels {
                return Err(Error::DimensionMismatch("channel counts differ".into()));
            }
            for k in (0..input.spec.n_cells()).filter(|&k| input.cell_valid[k]) {
                for (c, v) in input.cell(k).iter().enumerate() {
                    sum[c] += v;
                    sq[c] += v * v;
                }
                n += 1;
            }
        }
        let n = n.max(1) as f64;
        let mean: Vec<f64> = sum.iter().map(|s| s / n).collect();
        let std = sq
            .iter()
            .zip(&mean)
            .map(|(q, m)| {
                let var = (q / n - m * m).max(0.0);
                if var > 1e-24 {
                    var.sqrt()
                } else {
                    1.0
                }
            })
            .collect();
        Ok(ChannelNorm { mean, std })
    }
}

/// Per-cell two-layer network producing class logits.
#[derive(Debug, Clone, PartialEq)]
pub struct LateFusionHead {
    inputs: usize,
    hidden: usize,
    /// `hidden × inputs`, row-major.
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    /// `NUM_CLASSES × hidden`, row-major.
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
    pub norm: Option<ChannelNorm>,
}

/// Gradient with the same layout as the head's parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct HeadGradient {
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
}

impl HeadGradient {
    fn zeros(inputs: usize, hidden: usize) -> Self {
        HeadGradient {
            w1: vec![0.0; hidden * inputs],
            b1: vec![0.0; hidden],
            w2: vec![0.0; NUM_CLASSES * hidden],
            b2: vec![0.0; NUM_CLASSES],
        }
    }

    fn add(&mut self, other: &HeadGradient) {
        for (a, b) in self.flat_mut().zip(other.flat()) {
            *a += b;
        }
    }

    fn scale(&mut self, s: f64) {
        self.flat_mut().for_each(|v| *v *= s);
    }

    /// All entries in `w1, b1, w2, b2` order.
    pub fn flat(&self) -> impl Iterator<Item = f64> + '_ {
        self.w1.iter().chain(&self.b1).chain(&self.w2).chain(&self.b2).copied()
    }

    fn flat_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.w1
            .iter_mut()
            .chain(self.b1.iter_mut())
            .chain(self.w2.iter_mut())
            .chain(self.b2.iter_mut())
    }
}

impl LateFusionHead {
    /// All-zero parameters.
    pub fn zeros(inputs: usize, hidden: usize) -> Self {
        LateFusionHead {
            inputs,
            hidden,
            w1: vec![0.0; hidden * inputs],
            b1: vec![0.0; hidden],
            w2: vec![0.0; NUM_CLASSES * hidden],
            b2: vec![0.0; NUM_CLASSES],
            norm: None,
        }
    }

    /// Glorot-uniform weights, zero biases.
    pub fn init(inputs: usize, hidden: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut head = Self::zeros(inputs, hidden);
        let a1 = (6.0 / (inputs + hidden) as f64).sqrt();
        let a2 = (6.0 / (hidden + NUM_CLASSES) as f64).sqrt();
        head.w1.iter_mut().for_each(|w| *w = rng.random_range(-a1..a1));
        head.w2.iter_mut().for_each(|w| *w = rng.random_range(-a2..a2));
        head
    }

    pub fn from_parts(
        inputs: usize,
        hidden: usize,
        w1: Vec<f64>,
        b1: Vec<f64>,
        w2: Vec<f64>,
        b2: Vec<f64>,
        norm: Option<ChannelNorm>,
    ) -> Result<Self> {
        let ok = w1.len() == hidden * inputs
            && b1.len() == hidden
            && w2.len() == NUM_CLASSES * hidden
            && b2.len() == NUM_CLASSES
            && norm.as_ref().is_none_or(|n| n.mean.len() == inputs && n.std.len() == inputs);
        if !ok {
            return Err(Error::DimensionMismatch(format!(
                "head parameters do not match {inputs} inputs × {hidden} hidden"
            )));
        }
        let head = LateFusionHead {
            inputs,
            hidden,
            w1,
            b1,
            w2,
            b2,
            norm,
        };
        if head.flat_params().any(|v| !v.is_finite()) {
            return Err(Error::DimensionMismatch("non-finite head parameter".into()));
        }
        Ok(head)
    }

    pub fn with_norm(mut self, norm: ChannelNorm) -> Self {
        self.norm = Some(norm);
        self
    }

    pub fn inputs(&self) -> usize {
        self.inputs
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    /// All parameters in `w1, b1, w2, b2` order.
    pub fn flat_params(&self) -> impl Iterator<Item = f64> + '_ {
        self.w1.iter().chain(&self.b1).chain(&self.w2).chain(&self.b2).copied()
    }

    pub fn flat_params_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.w1
            .iter_mut()
            .chain(self.b1.iter_mut())
            .chain(self.w2.iter_mut())
            .chain(self.b2.iter_mut())
    }

    pub fn param_count(&self) -> usize {
        self.hidden * self.inputs + self.hidden + NUM_CLASSES * self.hidden + NUM_CLASSES
    }

    fn check_input(&self, input: &FusionInput) -> Result<()> {
        if input.channels() != self.inputs {
            return Err(Error::DimensionMismatch(format!(
                "head expects {} channels, input has {}",
                self.inputs,
                input.channels()
            )));
        }
        Ok(())
    }

    fn normalize_into(&self, x: &[f64], buf: &mut Vec<f64>) {
        buf.clear();
        match &self.norm {
            None => buf.extend_from_slice(x),
            Some(n) => buf.extend(x.iter().zip(&n.mean).zip(&n.std).map(|((v, m), s)| (v - m) / s)),
        }
    }

    // Pre-activations, activations and logits of one cell.
    fn cell_forward(&self, x: &[f64], pre: &mut [f64], act: &mut [f64]) -> [f64; NUM_CLASSES] {
        for h in 0..self.hidden {
            let row = &self.w1[h * self.inputs..(h + 1) * self.inputs];
            let z = self.b1[h] + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>();
            pre[h] = z;
            act[h] = z.max(0.0);
        }
        let mut logits = [0.0; NUM_CLASSES];
        for (c, l) in logits.iter_mut().enumerate() {
            let row = &self.w2[c * self.hidden..(c + 1) * self.hidden];
            *l = self.b2[c] + row.iter().zip(act.iter()).map(|(w, a)| w * a).sum::<f64>();
        }
        logits
    }
}

/// Logits for every cell, cell-major.
pub fn forward(head: &LateFusionHead, input: &FusionInput) -> Result<Vec<[f64; NUM_CLASSES]>> {
    head.check_input(input)?;
    let n = input.spec.n_cells();
    let out = (0..n)
        .into_par_iter()
        .with_min_len(CHUNK)
        .map_init(
            || (vec![0.0; head.hidden], vec![0.0; head.hidden], Vec::new()),
            |(pre, act, x), k| {
                head.normalize_into(input.cell(k), x);
                head.cell_forward(x, pre, act)
            },
        )
        .collect();
    Ok(out)
}

// Summed loss, summed gradient and number of evaluated cells.
fn loss_sums(head: &LateFusionHead, input: &FusionInput, gt: &LabelGrid) -> Result<(f64, HeadGradient, usize)> {
    head.check_input(input)?;
    if input.spec() != gt.spec() {
        return Err(Error::SpecMismatch);
    }
    let labels = gt.labels();
    let n = input.spec.n_cells();
    let chunks: Vec<(f64, HeadGradient, usize)> = (0..n.div_ceil(CHUNK))
        .into_par_iter()
        .map(|chunk| {
            let mut grad = HeadGradient::zeros(head.inputs, head.hidden);
            let mut loss = 0.0;
            let mut count = 0;
            let mut pre = vec![0.0; head.hidden];
            let mut act = vec![0.0; head.hidden];
            let mut d_hidden = vec![0.0; head.hidden];
            let mut x = Vec::with_capacity(head.inputs);
            let start = chunk * CHUNK;
            for (k, label) in labels.iter().enumerate().take((start + CHUNK).min(n)).skip(start) {
                let Some(target) = *label else { continue };
                head.normalize_into(input.cell(k), &mut x);
                let logits = head.cell_forward(&x, &mut pre, &mut act);
                let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let sum_exp: f64 = logits.iter().map(|l| (l - max).exp()).sum();
                loss += max + sum_exp.ln() - logits[target.index()];
                count += 1;

                d_hidden.iter_mut().for_each(|v| *v = 0.0);
                for (c, &logit) in logits.iter().enumerate() {
                    let p = (logit - max).exp() / sum_exp;
                    let dl = p - if c == target.index() { 1.0 } else { 0.0 };
                    grad.b2[c] += dl;
                    let w_row = &head.w2[c * head.hidden..(c + 1) * head.hidden];
                    let g_row = &mut grad.w2[c * head.hidden..(c + 1) * head.hidden];
                    for h in 0..head.hidden {
                        g_row[h] += dl * act[h];
                        d_hidden[h] += dl * w_row[h];
                    }
                }
                for h in 0..head.hidden {
                    if pre[h] <= 0.0 {
                        continue;
                    }
                    let dz = d_hidden[h];
                    grad.b1[h] += dz;
                    let g_row = &mut grad.w1[h * head.inputs..(h + 1) * head.inputs];
                    for (g, v) in g_row.iter_mut().zip(&x) {
                        *g += dz * v;
                    }
                }
            }
            (loss, grad, count)
        })
        .collect();

    let mut total = HeadGradient::zeros(head.inputs, head.hidden);
    let mut loss = 0.0;
    let mut count = 0;
    for (l, g, c) in &chunks {
        loss += l;
        total.add(g);
        count += c;
    }
    Ok((loss, total, count))
}

/// Mean softmax cross-entropy over the labeled cells of `gt` and its exact
/// gradient.
pub fn loss_and_gradient(head: &LateFusionHead, input: &FusionInput, gt: &LabelGrid) -> Result<(f64, HeadGradient)> {
    let (loss, mut grad, count) = loss_sums(head, input, gt)?;
    if count == 0 {
        return Err(Error::NothingToEvaluate);
    }
    grad.scale(1.0 / count as f64);
    Ok((loss / count as f64, grad))
}

/// Full-batch gradient descent settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainOptions {
    pub epochs: usize,
    pub learning_rate: f64,
}

/// Full-batch gradient descent over every labeled cell of every example.
///
/// Returns the trained head and the loss evaluated before each update.
pub fn train(
    mut head: LateFusionHead,
    dataset: &[(FusionInput, LabelGrid)],
    options: &TrainOptions,
) -> Result<(LateFusionHead, Vec<f64>)> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut trace = Vec::with_capacity(options.epochs);
    for epoch in 0..options.epochs {
        let mut grad = HeadGradient::zeros(head.inputs, head.hidden);
        let mut loss = 0.0;
        let mut count = 0;
        for (input, gt) in dataset {
            let (l, g, c) = loss_sums(&head, input, gt)?;
            loss += l;
            grad.add(&g);
            count += c;
        }
        if count == 0 {
            return Err(Error::NothingToEvaluate);
        }
        let loss = loss / count as f64;
        grad.scale(1.0 / count as f64);
        if !loss.is_finite() {
            let max_param = head.flat_params().map(f64::abs).fold(0.0, f64::max);
            return Err(Error::Diverged {
                epoch,
                loss,
                detail: format!("{count} cells, max |param| {max_param:e}, lr {}", options.learning_rate),
            });
        }
        trace.push(loss);
        for (p, g) in head.flat_params_mut().zip(grad.flat()) {
            *p -= options.learning_rate * g;
        }
    }
    Ok((head, trace))
}

/// Initialize from `seed` and train.
pub fn train_from_seed(
    dataset: &[(FusionInput, LabelGrid)],
    hidden: usize,
    seed: u64,
    options: &TrainOptions,
) -> Result<(LateFusionHead, Vec<f64>)> {
    let inputs = dataset.first().ok_or(Error::EmptyDataset)?.0.channels();
    train(LateFusionHead::init(inputs, hidden, seed), dataset, options)
}

/// Argmax class per cell (lowest class on ties); cells without any valid
/// source channel are Ignore.
pub fn predict(head: &LateFusionHead, input: &FusionInput) -> Result<LabelGrid> {
    let logits = forward(head, input)?;
    let labels: Vec<Label> = logits
        .iter()
        .zip(&input.cell_valid)
        .map(|(l, &valid)| valid.then(|| ClassId::ALL[argmax(l)]))
        .collect();
    LabelGrid::from_labels(input.spec, labels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{CellIndex, GridLayer};
    use crate::semantic::{encode_argmax, encode_histogram};
    use crate::{Point, PointCloud};

    fn random_input(spec: GridSpec, channels: usize, seed: u64) -> FusionInput {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = (0..spec.n_cells() * channels).map(|_| rng.random_range(-1.0..1.0)).collect();
        FusionInput::new(
            spec,
            (0..channels).map(|c| format!("c{c}")).collect(),
            data,
            vec![true; spec.n_cells()],
        )
        .unwrap()
    }

    fn stack(spec: GridSpec) -> GridMapStack {
        GridMapStack::from_layers(std::array::from_fn(|_| GridLayer::invalid(spec))).unwrap()
    }

    #[test]
    fn channel_counts() {
        let spec = GridSpec::new(0.0, 0.0, 1.0, 2, 2).unwrap();
        let cloud = PointCloud::new(vec![Point::new(0.5, 0.5, 0.0, 0.0)])
            .unwrap()
            .with_labels(vec![Some(ClassId::BUILDING)])
            .unwrap();
        let hist = encode_histogram(&cloud, &spec).unwrap();
        let a = assemble_early_fusion_input(&stack(spec), SemanticFeatures::Grid(&hist)).unwrap();
        assert_eq!(a.channels(), 16);
        assert_eq!(a.channel_names()[5], "histogram/building");
        let arg = encode_argmax(&hist);
        let b = assemble_early_fusion_input(&stack(spec), SemanticFeatures::Argmax(&arg)).unwrap();
        assert_eq!(b.channels(), 6);
        // building is class 0, encoded as 1; empty cells 0
        assert_eq!(b.channel(5), vec![1.0, 0.0, 0.0, 0.0]);
        assert_eq!(b.cell_validity(), &[true, false, false, false]);
        for c in 0..5 {
            assert!(b.channel(c).iter().all(|v| *v == 0.0));
        }
    }

    #[test]
    fn spec_mismatch() {
        let spec = GridSpec::new(0.0, 0.0, 1.0, 2, 2).unwrap();
        let other = LabelGrid::ignored(GridSpec::new(0.0, 0.0, 1.0, 3, 2).unwrap());
        assert!(assemble_early_fusion_input(&stack(spec), SemanticFeatures::Argmax(&other)).is_err());
    }

    #[test]
    fn bias_only_head_predicts_road() {
        let spec = GridSpec::new(0.0, 0.0, 1.0, 3, 3).unwrap();
        let mut input = random_input(spec, 6, 1);
        input.cell_valid[4] = false;
        let mut head = LateFusionHead::zeros(6, 4);
        head.b2[ClassId::ROAD.index()] = 10.0;
        let pred = predict(&head, &input).unwrap();
        for k in 0..9 {
            let expect = if k == 4 { None } else { Some(ClassId::ROAD) };
            assert_eq!(pred.labels()[k], expect);
        }
    }

    #[test]
    fn identical_cells_identical_logits() {
        let spec = GridSpec::new(0.0, 0.0, 1.0, 1, 2).unwrap();
        let input = FusionInput::new(spec, vec!["a".into(), "b".into()], vec![0.3, -0.2, 0.3, -0.2], vec![true; 2]).unwrap();
        let logits = forward(&LateFusionHead::init(2, 8, 3), &input).unwrap();
        assert_eq!(logits[0], logits[1]);
    }

    #[test]
    fn uniform_logits_loss_is_ln_11() {
        let spec = GridSpec::new(0.0, 0.0, 1.0, 2, 3).unwrap();
        let input = random_input(spec, 4, 5);
        let mut gt = LabelGrid::ignored(spec);
        gt.set(CellIndex::new(0, 0), Some(ClassId::POLE));
        gt.set(CellIndex::new(1, 2), Some(ClassId::TRUNK));
        let (loss, _) = loss_and_gradient(&LateFusionHead::zeros(4, 5), &input, &gt).unwrap();
        assert!((loss - (NUM_CLASSES as f64).ln()).abs() < 1e-12);
    }

    #[test]
    fn confident_logits_loss_vanishes() {
        let spec = GridSpec::new(0.0, 0.0, 1.0, 1, 1).unwrap();
        let input = random_input(spec, 2, 5);
        let mut gt = LabelGrid::ignored(spec);
        gt.set(CellIndex::new(0, 0), Some(ClassId::ROAD));
        let mut head = LateFusionHead::zeros(2, 2);
        head.b2[ClassId::ROAD.index()] = 50.0;
        let (loss, _) = loss_and_gradient(&head, &input, &gt).unwrap();
        assert!(loss < 1e-20);
    }

    #[test]
    fn all_ignore_is_an_error() {
        let spec = GridSpec::new(0.0, 0.0, 1.0, 2, 2).unwrap();
        let input = random_input(spec, 3, 0);
        let r = loss_and_gradient(&LateFusionHead::zeros(3, 2), &input, &LabelGrid::ignored(spec));
        assert!(matches!(r, Err(Error::NothingToEvaluate)));
    }

    #[test]
    fn dimension_mismatch() {
        let spec = GridSpec::new(0.0, 0.0, 1.0, 2, 2).unwrap();
        assert!(forward(&LateFusionHead::zeros(5, 2), &random_input(spec, 3, 0)).is_err());
    }

    #[test]
    fn zero_learning_rate_keeps_parameters() {
        let spec = GridSpec::new(0.0, 0.0, 1.0, 3, 3).unwrap();
        let input = random_input(spec, 3, 2);
        let gt = LabelGrid::from_labels(spec, vec![Some(ClassId::ROAD); 9]).unwrap();
        let head = LateFusionHead::init(3, 4, 11);
        let opts = TrainOptions { epochs: 5, learning_rate: 0.0 };
        let (trained, trace) = train(head.clone(), &[(input, gt)], &opts).unwrap();
        assert_eq!(trained, head);
        assert_eq!(trace.len(), 5);
        assert!(trace.windows(2).all(|w| w[0] == w[1]));
    }

    #[test]
    fn divergence_is_reported() {
        let spec = GridSpec::new(0.0, 0.0, 1.0, 1, 1).unwrap();
        let input = FusionInput::new(spec, vec!["a".into()], vec![1e300], vec![true]).unwrap();
        let gt = LabelGrid::from_labels(spec, vec![Some(ClassId::ROAD)]).unwrap();
        let mut head = LateFusionHead::zeros(1, 1);
        head.w1[0] = 1e10;
        head.w2[0] = 1e10;
        let r = train(head, &[(input, gt)], &TrainOptions { epochs: 3, learning_rate: 0.1 });
        assert!(matches!(r, Err(Error::Diverged { epoch: 0, .. })));
    }

    #[test]
    fn standardization_centers_channels() {
        let spec = GridSpec::new(0.0, 0.0, 1.0, 4, 4).unwrap();
        let input = random_input(spec, 3, 9);
        let norm = ChannelNorm::fit(&[&input]).unwrap();
        let head = LateFusionHead::init(3, 4, 0).with_norm(norm.clone());
        let mut buf = Vec::new();
        let mut sums = [0.0; 3];
        for k in 0..16 {
            head.normalize_into(input.cell(k), &mut buf);
            for c in 0..3 {
                sums[c] += buf[c];
            }
        }
        assert!(sums.iter().all(|s| s.abs() < 1e-12));
        assert!(norm.std.iter().all(|s| *s > 0.0));
    }
}
