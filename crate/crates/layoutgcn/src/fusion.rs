//! Aspect fusion: pool paired graph hiddens, project the wide aspects down,
//! concatenate, and classify with a two-layer MLP.
//!
//! Per node, with d the graph hidden width:
//!
//!   syntactic  = pool(h_syn1, h_syn2)          (N x d)
//!   semantic   = h_semc W_sem + b_sem          (768 -> d)
//!   density    = pool(h_den1, h_den2)          (N x d)
//!   appearance = h_appr W_app + b_app          (2048 -> d)
//!
//!   cat    = [syntactic | semantic | density | appearance]   (that order)
//!   hidden = tanh(cat W1 + b1), then inverted dropout (p = 0.1)
//!   logits = hidden W2 + b2
//!
//! Pooling is elementwise min, avg, or max across the two same-shaped
//! matrices. The graph hiddens are frozen features here: gradients stop at
//! the projection inputs, so pooling never needs a backward pass. Any
//! non-empty subset of the four aspects can be fused (the ablation study
//! retrains this classifier per subset); the concatenation keeps the
//! canonical order above restricted to the chosen subset.

use ndarray::{Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::math::{argmax, cross_entropy, glorot_uniform, rng_for, shuffle, softmax_rows, uniform01};
use crate::optim::Adam;
use crate::{Error, Result};

/// Elementwise pooling mode across two same-shaped node-feature matrices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pooling {
    Min,
    Avg,
    Max,
}

impl Pooling {
    pub const ALL: [Pooling; 3] = [Pooling::Min, Pooling::Avg, Pooling::Max];

    pub fn name(self) -> &'static str {
        match self {
            Pooling::Min => "min",
            Pooling::Avg => "avg",
            Pooling::Max => "max",
        }
    }

    pub fn from_name(name: &str) -> Option<Pooling> {
        Pooling::ALL.iter().copied().find(|p| p.name() == name)
    }
}

/// Elementwise pool of two same-shaped matrices.
pub fn pool_aspect(a: &Array2<f64>, b: &Array2<f64>, mode: Pooling) -> Result<Array2<f64>> {
    if a.dim() != b.dim() {
        return Err(Error::Contract(format!(
            "pooled matrices must share a shape, got {:?} and {:?}",
            a.dim(),
            b.dim()
        )));
    }
    let mut out = a.clone();
    for (o, &bv) in out.iter_mut().zip(b.iter()) {
        *o = match mode {
            Pooling::Min => o.min(bv),
            Pooling::Avg => (*o + bv) / 2.0,
            Pooling::Max => o.max(bv),
        };
    }
    Ok(out)
}

/// The four fusable aspects, in canonical concatenation order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aspect {
    Syntactic,
    Semantic,
    Density,
    Appearance,
}

impl Aspect {
    pub const ALL: [Aspect; 4] = [
        Aspect::Syntactic,
        Aspect::Semantic,
        Aspect::Density,
        Aspect::Appearance,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Aspect::Syntactic => "syntactic",
            Aspect::Semantic => "semantic",
            Aspect::Density => "density",
            Aspect::Appearance => "appearance",
        }
    }

    pub fn from_name(name: &str) -> Option<Aspect> {
        Aspect::ALL.iter().copied().find(|a| a.name() == name)
    }
}

/// Normalize an aspect subset to canonical order, rejecting empties and
/// duplicates.
pub fn normalize_aspects(aspects: &[Aspect]) -> Result<Vec<Aspect>> {
    if aspects.is_empty() {
        return Err(Error::Contract("aspect subset must be non-empty".into()));
    }
    let mut out = Vec::new();
    for a in Aspect::ALL {
        let count = aspects.iter().filter(|&&x| x == a).count();
        if count > 1 {
            return Err(Error::Contract(format!("duplicate aspect {}", a.name())));
        }
        if count == 1 {
            out.push(a);
        }
    }
    Ok(out)
}

/// Frozen per-page graph hiddens feeding the classifier. `labels` holds gold
/// class indices during training and may be empty for prediction.
#[derive(Debug, Clone)]
pub struct AspectHiddens {
    pub page_id: String,
    pub labels: Vec<usize>,
    /// N x d
    pub syn1: Array2<f64>,
    /// N x d
    pub syn2: Array2<f64>,
    /// N x semantic width (the graph keeps its input width)
    pub semc: Array2<f64>,
    /// N x d
    pub den1: Array2<f64>,
    /// N x d
    pub den2: Array2<f64>,
    /// N x appearance width (the graph keeps its input width)
    pub appr: Array2<f64>,
}

impl AspectHiddens {
    pub fn node_count(&self) -> usize {
        self.den1.nrows()
    }
}

/// Affine projection used to resize the wide aspects.
#[derive(Debug, Clone)]
pub struct Projection {
    /// in_dim x out_dim
    pub w: Array2<f64>,
    /// 1 x out_dim
    pub b: Array2<f64>,
}

impl Projection {
    fn new(in_dim: usize, out_dim: usize, rng: &mut rand_chacha::ChaCha8Rng) -> Projection {
        Projection {
            w: glorot_uniform(rng, in_dim, out_dim),
            b: Array2::zeros((1, out_dim)),
        }
    }

    fn apply(&self, x: &Array2<f64>) -> Array2<f64> {
        x.dot(&self.w) + &self.b
    }
}

/// The fused classifier over a chosen aspect subset.
#[derive(Debug, Clone)]
pub struct FusionClassifier {
    pub aspects: Vec<Aspect>,
    pub pooling: Pooling,
    /// Hidden width d shared by the pooled aspects and the projections.
    pub d: usize,
    /// Present iff the semantic aspect is fused.
    pub fc_semc: Option<Projection>,
    /// Present iff the appearance aspect is fused.
    pub fc_appr: Option<Projection>,
    /// (|aspects| * d) x mlp_hidden
    pub mlp_w1: Array2<f64>,
    /// 1 x mlp_hidden
    pub mlp_b1: Array2<f64>,
    /// mlp_hidden x classes
    pub mlp_w2: Array2<f64>,
    /// 1 x classes
    pub mlp_b2: Array2<f64>,
    pub dropout: f64,
}

/// Cached intermediates for one training step.
struct ForwardCache {
    cat: Array2<f64>,
    z1: Array2<f64>,
    dropped: Array2<f64>,
    mask: Option<Array2<f64>>,
}

impl FusionClassifier {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        aspects: &[Aspect],
        pooling: Pooling,
        d: usize,
        semantic_dim: usize,
        appearance_dim: usize,
        mlp_hidden: usize,
        classes: usize,
        seed: u64,
    ) -> Result<FusionClassifier> {
        let aspects = normalize_aspects(aspects)?;
        let mut rng = rng_for(seed, "init.fusion");
        let fc_semc = aspects
            .contains(&Aspect::Semantic)
            .then(|| Projection::new(semantic_dim, d, &mut rng));
        let fc_appr = aspects
            .contains(&Aspect::Appearance)
            .then(|| Projection::new(appearance_dim, d, &mut rng));
        let cat_dim = aspects.len() * d;
        Ok(FusionClassifier {
            aspects,
            pooling,
            d,
            fc_semc,
            fc_appr,
            mlp_w1: glorot_uniform(&mut rng, cat_dim, mlp_hidden),
            mlp_b1: Array2::zeros((1, mlp_hidden)),
            mlp_w2: glorot_uniform(&mut rng, mlp_hidden, classes),
            mlp_b2: Array2::zeros((1, classes)),
            dropout: 0.1,
        })
    }

    pub fn classes(&self) -> usize {
        self.mlp_w2.ncols()
    }

    fn check_widths(&self, h: &AspectHiddens) -> Result<()> {
        let n = h.node_count();
        let same = |name: &str, m: &Array2<f64>, cols: usize| -> Result<()> {
            if m.nrows() != n || m.ncols() != cols {
                return Err(Error::Contract(format!(
                    "{name} hidden must be {n} x {cols}, got {} x {}",
                    m.nrows(),
                    m.ncols()
                )));
            }
            Ok(())
        };
        for a in &self.aspects {
            match a {
                Aspect::Syntactic => {
                    same("syn1", &h.syn1, self.d)?;
                    same("syn2", &h.syn2, self.d)?;
                }
                Aspect::Semantic => {
                    let p = self.fc_semc.as_ref().expect("semantic projection present");
                    same("semc", &h.semc, p.w.nrows())?;
                }
                Aspect::Density => {
                    same("den1", &h.den1, self.d)?;
                    same("den2", &h.den2, self.d)?;
                }
                Aspect::Appearance => {
                    let p = self.fc_appr.as_ref().expect("appearance projection present");
                    same("appr", &h.appr, p.w.nrows())?;
                }
            }
        }
        Ok(())
    }

    /// Assemble the N x (|aspects| * d) fused feature matrix.
    pub fn fuse(&self, h: &AspectHiddens) -> Result<Array2<f64>> {
        self.check_widths(h)?;
        let n = h.node_count();
        let mut cat = Array2::zeros((n, self.aspects.len() * self.d));
        for (k, a) in self.aspects.iter().enumerate() {
            let block = match a {
                Aspect::Syntactic => pool_aspect(&h.syn1, &h.syn2, self.pooling)?,
                Aspect::Semantic => self.fc_semc.as_ref().unwrap().apply(&h.semc),
                Aspect::Density => pool_aspect(&h.den1, &h.den2, self.pooling)?,
                Aspect::Appearance => self.fc_appr.as_ref().unwrap().apply(&h.appr),
            };
            cat.slice_mut(ndarray::s![.., k * self.d..(k + 1) * self.d])
                .assign(&block);
        }
        Ok(cat)
    }

    fn forward(&self, h: &AspectHiddens, mask: Option<&Array2<f64>>) -> Result<(Array2<f64>, ForwardCache)> {
        let cat = self.fuse(h)?;
        let z1 = cat.dot(&self.mlp_w1) + &self.mlp_b1;
        let hidden = z1.mapv(f64::tanh);
        let dropped = match mask {
            Some(m) => {
                if m.dim() != hidden.dim() {
                    return Err(Error::Contract(format!(
                        "dropout mask must be {:?}, got {:?}",
                        hidden.dim(),
                        m.dim()
                    )));
                }
                &hidden * m / (1.0 - self.dropout)
            }
            None => hidden,
        };
        let logits = dropped.dot(&self.mlp_w2) + &self.mlp_b2;
        Ok((
            logits,
            ForwardCache {
                cat,
                z1,
                dropped,
                mask: mask.cloned(),
            },
        ))
    }

    /// Inference: class probabilities and argmax predictions (ties resolve
    /// to the lowest class index). Dropout is disabled.
    pub fn predict(&self, h: &AspectHiddens) -> Result<(Array2<f64>, Vec<usize>)> {
        let (logits, _) = self.forward(h, None)?;
        let probs = softmax_rows(&logits);
        let preds = (0..probs.nrows())
            .map(|i| argmax(&probs.row(i).to_owned()))
            .collect();
        Ok((probs, preds))
    }

    /// One training step's loss and gradients, with an explicit dropout mask
    /// (entries 0 or 1; kept units are rescaled by 1/(1-p)).
    pub fn loss_grad(
        &self,
        h: &AspectHiddens,
        mask: &Array2<f64>,
    ) -> Result<(f64, FusionGrads)> {
        let n = h.node_count();
        if h.labels.len() != n {
            return Err(Error::Contract(format!(
                "label count {} does not match node count {n}",
                h.labels.len()
            )));
        }
        let classes = self.classes();
        if let Some(&bad) = h.labels.iter().find(|&&l| l >= classes) {
            return Err(Error::Contract(format!(
                "label index {bad} out of range for {classes} classes"
            )));
        }
        let (logits, cache) = self.forward(h, Some(mask))?;
        let (loss, _probs, d_logits) = cross_entropy(&logits, &h.labels);

        let d_w2 = cache.dropped.t().dot(&d_logits);
        let d_b2 = d_logits.sum_axis(Axis(0)).insert_axis(Axis(0));
        let mut d_hidden = d_logits.dot(&self.mlp_w2.t());
        if let Some(m) = &cache.mask {
            d_hidden = d_hidden * m / (1.0 - self.dropout);
        }
        // tanh'(z) = 1 - tanh(z)^2
        let tanh_z = cache.z1.mapv(f64::tanh);
        let d_z1 = d_hidden * (1.0 - &tanh_z * &tanh_z);
        let d_w1 = cache.cat.t().dot(&d_z1);
        let d_b1 = d_z1.sum_axis(Axis(0)).insert_axis(Axis(0));
        let d_cat = d_z1.dot(&self.mlp_w1.t());

        // Split the concatenation gradient into aspect blocks; only the
        // projected aspects carry parameters.
        let mut d_semc = None;
        let mut d_appr = None;
        for (k, a) in self.aspects.iter().enumerate() {
            let block = d_cat.slice(ndarray::s![.., k * self.d..(k + 1) * self.d]);
            match a {
                Aspect::Semantic => {
                    let dw = h.semc.t().dot(&block);
                    let db = block.sum_axis(Axis(0)).insert_axis(Axis(0));
                    d_semc = Some((dw, db));
                }
                Aspect::Appearance => {
                    let dw = h.appr.t().dot(&block);
                    let db = block.sum_axis(Axis(0)).insert_axis(Axis(0));
                    d_appr = Some((dw, db));
                }
                _ => {}
            }
        }
        Ok((
            loss,
            FusionGrads {
                d_semc,
                d_appr,
                d_w1,
                d_b1,
                d_w2,
                d_b2,
            },
        ))
    }

    /// The trainable tensors in a stable order (projections first, canonical
    /// aspect order, then the MLP).
    pub fn params_mut(&mut self) -> Vec<&mut Array2<f64>> {
        let mut out: Vec<&mut Array2<f64>> = Vec::new();
        if let Some(p) = self.fc_semc.as_mut() {
            out.push(&mut p.w);
            out.push(&mut p.b);
        }
        if let Some(p) = self.fc_appr.as_mut() {
            out.push(&mut p.w);
            out.push(&mut p.b);
        }
        out.push(&mut self.mlp_w1);
        out.push(&mut self.mlp_b1);
        out.push(&mut self.mlp_w2);
        out.push(&mut self.mlp_b2);
        out
    }

    fn fresh_mask(&self, rng: &mut rand_chacha::ChaCha8Rng, n: usize) -> Array2<f64> {
        let h = self.mlp_w1.ncols();
        Array2::from_shape_fn((n, h), |_| {
            if uniform01(rng) < self.dropout {
                0.0
            } else {
                1.0
            }
        })
    }
}

/// Gradients matching `FusionClassifier::params_mut` order.
pub struct FusionGrads {
    pub d_semc: Option<(Array2<f64>, Array2<f64>)>,
    pub d_appr: Option<(Array2<f64>, Array2<f64>)>,
    pub d_w1: Array2<f64>,
    pub d_b1: Array2<f64>,
    pub d_w2: Array2<f64>,
    pub d_b2: Array2<f64>,
}

impl FusionGrads {
    fn into_vec(self) -> Vec<Array2<f64>> {
        let mut out = Vec::new();
        if let Some((w, b)) = self.d_semc {
            out.push(w);
            out.push(b);
        }
        if let Some((w, b)) = self.d_appr {
            out.push(w);
            out.push(b);
        }
        out.push(self.d_w1);
        out.push(self.d_b1);
        out.push(self.d_w2);
        out.push(self.d_b2);
        out
    }
}

/// Train the classifier over frozen hiddens: seeded page shuffle per epoch,
/// fresh dropout mask and one optimizer step per page. Returns mean loss per
/// epoch.
pub fn train_classifier(
    model: &mut FusionClassifier,
    pages: &[AspectHiddens],
    epochs: usize,
    lr: f64,
    seed: u64,
) -> Result<Vec<f64>> {
    if epochs == 0 {
        return Err(Error::Contract("epochs must be at least 1".into()));
    }
    if pages.is_empty() {
        return Err(Error::Data("no pages to train on".into()));
    }
    let mut order_rng = rng_for(seed, "train.fusion");
    let mut mask_rng = rng_for(seed, "train.fusion.dropout");
    let mut adam = Adam::new(lr);
    let mut history = Vec::with_capacity(epochs);
    let mut order: Vec<usize> = (0..pages.len()).collect();
    for epoch in 0..epochs {
        shuffle(&mut order_rng, &mut order);
        let mut total = 0.0;
        for &pi in &order {
            let page = &pages[pi];
            let mask = model.fresh_mask(&mut mask_rng, page.node_count());
            let (loss, grads) = model.loss_grad(page, &mask)?;
            if !loss.is_finite() {
                return Err(Error::Numeric {
                    epoch,
                    page_id: page.page_id.clone(),
                    msg: format!("loss is {loss}"),
                });
            }
            total += loss;
            let grads = grads.into_vec();
            let mut params = model.params_mut();
            adam.step(&mut params, &grads);
        }
        history.push(total / pages.len() as f64);
    }
    Ok(history)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::{rng_for, standard_normal};
    use ndarray::array;

    fn randn(rows: usize, cols: usize, rng: &mut rand_chacha::ChaCha8Rng) -> Array2<f64> {
        Array2::from_shape_fn((rows, cols), |_| standard_normal(rng))
    }

    fn hiddens(n: usize, d: usize, sd: usize, ad: usize, seed: u64, labels: Vec<usize>) -> AspectHiddens {
        let mut rng = rng_for(seed, "fusion-test");
        AspectHiddens {
            page_id: "p".into(),
            labels,
            syn1: randn(n, d, &mut rng),
            syn2: randn(n, d, &mut rng),
            semc: randn(n, sd, &mut rng),
            den1: randn(n, d, &mut rng),
            den2: randn(n, d, &mut rng),
            appr: randn(n, ad, &mut rng),
        }
    }

    #[test]
    fn pool_matches_hand_values() {
        let a = array![[1.0, -2.0], [0.5, 4.0]];
        let b = array![[0.0, 3.0], [0.5, -1.0]];
        assert_eq!(
            pool_aspect(&a, &b, Pooling::Min).unwrap(),
            array![[0.0, -2.0], [0.5, -1.0]]
        );
        assert_eq!(
            pool_aspect(&a, &b, Pooling::Max).unwrap(),
            array![[1.0, 3.0], [0.5, 4.0]]
        );
        assert_eq!(
            pool_aspect(&a, &b, Pooling::Avg).unwrap(),
            array![[0.5, 0.5], [0.5, 1.5]]
        );
        let wrong = Array2::<f64>::zeros((3, 2));
        assert!(pool_aspect(&a, &wrong, Pooling::Max).is_err());
    }

    #[test]
    fn fuse_orders_blocks_canonically() {
        let model = FusionClassifier::new(
            &[Aspect::Appearance, Aspect::Syntactic], // given out of order
            Pooling::Max,
            3,
            5,
            4,
            6,
            2,
            1,
        )
        .unwrap();
        assert_eq!(model.aspects, vec![Aspect::Syntactic, Aspect::Appearance]);
        let h = hiddens(2, 3, 5, 4, 2, vec![]);
        let cat = model.fuse(&h).unwrap();
        assert_eq!(cat.dim(), (2, 6));
        // First block is the pooled syntactic pair.
        let syn = pool_aspect(&h.syn1, &h.syn2, Pooling::Max).unwrap();
        for i in 0..2 {
            for j in 0..3 {
                assert_eq!(cat[[i, j]], syn[[i, j]]);
            }
        }
    }

    #[test]
    fn gradients_match_finite_differences_all_aspects() {
        let mut model = FusionClassifier::new(
            &Aspect::ALL,
            Pooling::Max,
            3,
            5,
            6,
            4,
            3,
            7,
        )
        .unwrap();
        let h = hiddens(3, 3, 5, 6, 8, vec![0, 2, 1]);
        // Fixed mask with a dropped unit so the mask path is exercised.
        let mut mask = Array2::from_elem((3, 4), 1.0);
        mask[[1, 2]] = 0.0;
        let (_, grads) = model.loss_grad(&h, &mask).unwrap();
        let analytic = grads.into_vec();
        let eps = 1e-6;
        let n_tensors = analytic.len();
        for ti in 0..n_tensors {
            let (rows, cols) = analytic[ti].dim();
            for i in 0..rows {
                for j in 0..cols {
                    let orig = model.params_mut()[ti][[i, j]];
                    model.params_mut()[ti][[i, j]] = orig + eps;
                    let up = model.loss_grad(&h, &mask).unwrap().0;
                    model.params_mut()[ti][[i, j]] = orig - eps;
                    let down = model.loss_grad(&h, &mask).unwrap().0;
                    model.params_mut()[ti][[i, j]] = orig;
                    let fd = (up - down) / (2.0 * eps);
                    let an = analytic[ti][[i, j]];
                    let tol = 1e-9 + 1e-4 * fd.abs().max(an.abs());
                    assert!(
                        (fd - an).abs() < tol,
                        "tensor {ti} [{i},{j}]: fd {fd} vs analytic {an}"
                    );
                }
            }
        }
    }

    #[test]
    fn single_aspect_subset_drops_unused_projections() {
        let model = FusionClassifier::new(
            &[Aspect::Density],
            Pooling::Avg,
            4,
            5,
            6,
            8,
            3,
            9,
        )
        .unwrap();
        assert!(model.fc_semc.is_none());
        assert!(model.fc_appr.is_none());
        assert_eq!(model.mlp_w1.nrows(), 4);
        let h = hiddens(2, 4, 5, 6, 10, vec![]);
        let (probs, preds) = model.predict(&h).unwrap();
        assert_eq!(probs.dim(), (2, 3));
        assert_eq!(preds.len(), 2);
        for i in 0..2 {
            let s: f64 = probs.row(i).sum();
            assert!((s - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn dropout_masks_are_deterministic_per_seed() {
        let model = FusionClassifier::new(&Aspect::ALL, Pooling::Max, 2, 3, 3, 16, 2, 3).unwrap();
        let mut r1 = rng_for(5, "train.fusion.dropout");
        let mut r2 = rng_for(5, "train.fusion.dropout");
        let m1 = model.fresh_mask(&mut r1, 4);
        let m2 = model.fresh_mask(&mut r2, 4);
        assert_eq!(m1, m2);
        assert!(m1.iter().all(|&v| v == 0.0 || v == 1.0));
        // Roughly 10% dropped over a large draw.
        let mut r3 = rng_for(6, "train.fusion.dropout");
        let big = model.fresh_mask(&mut r3, 2000);
        let dropped = big.iter().filter(|&&v| v == 0.0).count() as f64;
        let rate = dropped / big.len() as f64;
        assert!((rate - 0.1).abs() < 0.02, "drop rate {rate}");
    }

    #[test]
    fn training_separates_density_coded_classes() {
        // Class is readable off den1 column 0; other aspects are noise.
        let mut pages = Vec::new();
        let mut rng = rng_for(11, "fusion-train-test");
        for p in 0..6 {
            let n = 4;
            let mut h = hiddens(n, 4, 5, 6, 100 + p, vec![]);
            let mut labels = Vec::new();
            for i in 0..n {
                let class = (i + p as usize) % 2;
                h.den1[[i, 0]] = if class == 0 { 2.0 } else { -2.0 };
                h.den2[[i, 0]] = h.den1[[i, 0]] - 0.5 * uniform01(&mut rng);
                labels.push(class);
            }
            h.labels = labels;
            pages.push(h);
        }
        let mut model =
            FusionClassifier::new(&Aspect::ALL, Pooling::Max, 4, 5, 6, 16, 2, 13).unwrap();
        let history = train_classifier(&mut model, &pages, 80, 5e-3, 17).unwrap();
        assert!(history[79] < history[0] * 0.3, "loss {:?}", (history[0], history[79]));
        for page in &pages {
            let (_, preds) = model.predict(page).unwrap();
            assert_eq!(&preds, &page.labels);
        }
    }

    #[test]
    fn determinism_same_seed_same_weights() {
        let build = || {
            let pages: Vec<AspectHiddens> = (0..3)
                .map(|p| {
                    let mut h = hiddens(3, 4, 5, 6, 200 + p, vec![0, 1, 0]);
                    h.den1[[0, 0]] = 3.0;
                    h
                })
                .collect();
            let mut model =
                FusionClassifier::new(&Aspect::ALL, Pooling::Max, 4, 5, 6, 8, 2, 21).unwrap();
            train_classifier(&mut model, &pages, 5, 1e-3, 23).unwrap();
            model
        };
        let a = build();
        let b = build();
        assert_eq!(a.mlp_w1, b.mlp_w1);
        assert_eq!(a.mlp_w2, b.mlp_w2);
        assert_eq!(a.fc_appr.unwrap().w, b.fc_appr.unwrap().w);
    }

    #[test]
    fn empty_and_duplicate_aspects_rejected() {
        assert!(FusionClassifier::new(&[], Pooling::Max, 2, 3, 3, 4, 2, 1).is_err());
        assert!(FusionClassifier::new(
            &[Aspect::Density, Aspect::Density],
            Pooling::Max,
            2,
            3,
            3,
            4,
            2,
            1
        )
        .is_err());
    }
}
