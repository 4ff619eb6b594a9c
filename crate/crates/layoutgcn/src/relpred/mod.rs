//! Parent-relation prediction: every segment picks its parent segment, or an
//! appended all-zero "no parent" slot.
//!
//! Per page with N segments:
//!
//!   inputs  = [semantic | appearance] per segment      (N x 2816 by default)
//!   proj    = inputs W_in + b_in + pos[rank]           (N x d_model)
//!   x0      = [proj ; 0]                               (N+1 rows, fake slot last)
//!   h       = encoder_layer(x0)                        (post-norm transformer)
//!   scores  = (h_real Wq) (h Wk)^T                     (N x (N+1), unscaled)
//!
//! `rank` is the segment's reading-order position (sorted by y1 then x1);
//! the fake slot receives no positional embedding and no bias — it stays an
//! all-zero input row. Training minimizes row-softmax cross-entropy over the
//! raw scores with the diagonal left in (a fresh model therefore starts near
//! loss = ln(N+1)). Prediction masks the diagonal, takes the row argmax, and
//! breaks any cycles by dropping the lowest-probability edge per cycle, so
//! the output is always a forest.
//!
//! The parent scorer's Q/K transforms are bias-free and initialized in a
//! small symmetric band rather than at zero, which for a bilinear form is a
//! saddle the optimizer would have to escape.

pub mod encoder;

use ndarray::{s, Array2, Axis};

use crate::corpus::{Featurizer, Page, SEMANTIC_DIM};
use crate::math::{argmax, cross_entropy, glorot_uniform, rng_for, shuffle, softmax_rows, standard_normal, uniform_matrix};
use crate::optim::Adam;
use crate::{Error, Result};
use encoder::EncoderLayer;

/// Reading-order rank of each segment: position when sorting by (y1, x1),
/// ties by index.
pub fn reading_order_ranks(page: &Page) -> Vec<usize> {
    let mut order: Vec<usize> = (0..page.segments.len()).collect();
    order.sort_by(|&a, &b| {
        let sa = &page.segments[a].bbox;
        let sb = &page.segments[b].bbox;
        sa.y1
            .partial_cmp(&sb.y1)
            .unwrap()
            .then(sa.x1.partial_cmp(&sb.x1).unwrap())
            .then(a.cmp(&b))
    });
    let mut ranks = vec![0usize; order.len()];
    for (rank, &idx) in order.iter().enumerate() {
        ranks[idx] = rank;
    }
    ranks
}

/// Per-segment relation input: semantic and appearance vectors concatenated.
pub fn relation_inputs(page: &Page, featurizer: &Featurizer) -> Result<Array2<f64>> {
    let sem = featurizer.semantic_matrix(&page.segments)?;
    let app = featurizer.appearance_matrix(&page.segments)?;
    let n = page.segments.len();
    let mut out = Array2::zeros((n, sem.ncols() + app.ncols()));
    out.slice_mut(s![.., ..sem.ncols()]).assign(&sem);
    out.slice_mut(s![.., sem.ncols()..]).assign(&app);
    Ok(out)
}

/// Class targets for training: parent index, or N for "no parent".
pub fn targets_from_parents(parents: &[Option<usize>]) -> Vec<usize> {
    let n = parents.len();
    parents.iter().map(|p| p.unwrap_or(n)).collect()
}

/// One page of relation training data.
#[derive(Debug, Clone)]
pub struct RelationPage {
    pub page_id: String,
    /// N x input_dim
    pub inputs: Array2<f64>,
    pub ranks: Vec<usize>,
    /// N entries in 0..=N (N = no parent).
    pub targets: Vec<usize>,
}

/// Predicted parents plus the post-mask softmax probability of each choice.
#[derive(Debug, Clone)]
pub struct RelationPrediction {
    pub parents: Vec<Option<usize>>,
    pub probs: Vec<f64>,
}

/// The relation model parameters.
#[derive(Debug, Clone)]
pub struct RelationModel {
    pub d_model: usize,
    pub max_positions: usize,
    /// input_dim x d_model
    pub w_in: Array2<f64>,
    /// 1 x d_model
    pub b_in: Array2<f64>,
    /// max_positions x d_model, learned
    pub pos: Array2<f64>,
    pub encoder: EncoderLayer,
    /// d_model x d_model, bias-free
    pub wq2: Array2<f64>,
    /// d_model x d_model, bias-free
    pub wk2: Array2<f64>,
}

struct RelCache {
    x0: Array2<f64>,
    enc: encoder::EncoderCache,
    x2: Array2<f64>,
    qm: Array2<f64>,
    km: Array2<f64>,
}

impl RelationModel {
    pub fn new(
        input_dim: usize,
        d_model: usize,
        heads: usize,
        ff_dim: usize,
        max_positions: usize,
        seed: u64,
    ) -> Result<RelationModel> {
        let mut rng = rng_for(seed, "init.relations");
        let w_in = glorot_uniform(&mut rng, input_dim, d_model);
        let pos = Array2::from_shape_fn((max_positions, d_model), |_| {
            standard_normal(&mut rng) * 0.02
        });
        let encoder = EncoderLayer::new(d_model, heads, ff_dim, &mut rng)?;
        let wq2 = uniform_matrix(&mut rng, d_model, d_model, 0.005);
        let wk2 = uniform_matrix(&mut rng, d_model, d_model, 0.005);
        Ok(RelationModel {
            d_model,
            max_positions,
            w_in,
            b_in: Array2::zeros((1, d_model)),
            pos,
            encoder,
            wq2,
            wk2,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.w_in.nrows()
    }

    /// Trainable tensors in a stable order.
    pub fn params_mut(&mut self) -> Vec<&mut Array2<f64>> {
        let mut out: Vec<&mut Array2<f64>> = vec![&mut self.w_in, &mut self.b_in, &mut self.pos];
        out.extend(self.encoder.params_mut());
        out.push(&mut self.wq2);
        out.push(&mut self.wk2);
        out
    }

    fn check_page(&self, inputs: &Array2<f64>, ranks: &[usize]) -> Result<usize> {
        let n = inputs.nrows();
        if n == 0 {
            return Err(Error::Contract("relation page must have segments".into()));
        }
        if inputs.ncols() != self.input_dim() {
            return Err(Error::Contract(format!(
                "relation inputs must be {} wide, got {}",
                self.input_dim(),
                inputs.ncols()
            )));
        }
        if ranks.len() != n {
            return Err(Error::Contract(format!(
                "rank count {} does not match segment count {n}",
                ranks.len()
            )));
        }
        if n > self.max_positions {
            return Err(Error::Capacity(format!(
                "page has {n} segments but the relation model holds {} positions",
                self.max_positions
            )));
        }
        let mut seen = vec![false; n];
        for &r in ranks {
            if r >= n || seen[r] {
                return Err(Error::Contract(format!(
                    "ranks must be a permutation of 0..{n}"
                )));
            }
            seen[r] = true;
        }
        Ok(n)
    }

    fn forward_cached(&self, inputs: &Array2<f64>, ranks: &[usize]) -> Result<RelCache> {
        let n = self.check_page(inputs, ranks)?;
        let mut proj = inputs.dot(&self.w_in) + &self.b_in;
        for i in 0..n {
            let add = &proj.row(i) + &self.pos.row(ranks[i]);
            proj.row_mut(i).assign(&add);
        }
        // Fake "no parent" slot: one all-zero row appended after projection.
        let mut x0 = Array2::zeros((n + 1, self.d_model));
        x0.slice_mut(s![..n, ..]).assign(&proj);
        let (x2, enc) = self.encoder.forward(&x0);
        let qm = x2.slice(s![..n, ..]).dot(&self.wq2);
        let km = x2.dot(&self.wk2);
        Ok(RelCache {
            x0,
            enc,
            qm,
            km,
            x2,
        })
    }

    /// Raw parent scores, one row per real segment over N+1 candidates (the
    /// last column is the "no parent" slot).
    pub fn relation_forward(&self, inputs: &Array2<f64>, ranks: &[usize]) -> Result<Array2<f64>> {
        let cache = self.forward_cached(inputs, ranks)?;
        Ok(cache.qm.dot(&cache.km.t()))
    }

    /// Cross-entropy over unmasked score rows plus gradients for all
    /// parameter tensors, in `params_mut` order.
    pub fn loss_grad(&self, page: &RelationPage) -> Result<(f64, Vec<Array2<f64>>)> {
        let cache = self.forward_cached(&page.inputs, &page.ranks)?;
        let n = page.inputs.nrows();
        if page.targets.len() != n {
            return Err(Error::Contract(format!(
                "target count {} does not match segment count {n}",
                page.targets.len()
            )));
        }
        for (i, &t) in page.targets.iter().enumerate() {
            if t > n || t == i {
                return Err(Error::Contract(format!(
                    "target {t} invalid for segment {i} of {n}"
                )));
            }
        }
        let scores = cache.qm.dot(&cache.km.t());
        let (loss, _probs, d_scores) = cross_entropy(&scores, &page.targets);

        let d_qm = d_scores.dot(&cache.km);
        let d_km = d_scores.t().dot(&cache.qm);
        let x2_real = cache.x2.slice(s![..n, ..]);
        let d_wq2 = x2_real.t().dot(&d_qm);
        let d_wk2 = cache.x2.t().dot(&d_km);
        let mut d_x2 = d_km.dot(&self.wk2.t());
        {
            let add = &d_x2.slice(s![..n, ..]) + &d_qm.dot(&self.wq2.t());
            d_x2.slice_mut(s![..n, ..]).assign(&add);
        }
        let (enc_grads, d_x0) = self.encoder.backward(&cache.x0, &cache.enc, &d_x2);
        // The fake row is a constant zero input: its gradient stops here.
        let d_proj = d_x0.slice(s![..n, ..]);
        let mut d_pos = Array2::zeros(self.pos.dim());
        for i in 0..n {
            let add = &d_pos.row(page.ranks[i]) + &d_proj.row(i);
            d_pos.row_mut(page.ranks[i]).assign(&add);
        }
        let d_w_in = page.inputs.t().dot(&d_proj);
        let d_b_in = d_proj.sum_axis(Axis(0)).insert_axis(Axis(0));

        let mut grads = vec![d_w_in, d_b_in, d_pos];
        grads.extend(enc_grads.0);
        grads.push(d_wq2);
        grads.push(d_wk2);
        Ok((loss, grads))
    }

    /// Predict parents: mask self-selection, take the row argmax over the
    /// masked softmax, then break cycles (drop the lowest-probability edge in
    /// each, ties to the lowest child index). The result is always a forest.
    pub fn predict(&self, inputs: &Array2<f64>, ranks: &[usize]) -> Result<RelationPrediction> {
        let cache = self.forward_cached(inputs, ranks)?;
        let mut scores = cache.qm.dot(&cache.km.t());
        let n = inputs.nrows();
        for i in 0..n {
            scores[[i, i]] = f64::NEG_INFINITY;
        }
        let probs = softmax_rows(&scores);
        let mut parents: Vec<Option<usize>> = Vec::with_capacity(n);
        let mut chosen_probs = Vec::with_capacity(n);
        for i in 0..n {
            let row = probs.row(i).to_owned();
            let j = argmax(&row);
            chosen_probs.push(row[j]);
            parents.push(if j == n { None } else { Some(j) });
        }
        break_cycles(&mut parents, &chosen_probs);
        Ok(RelationPrediction {
            parents,
            probs: chosen_probs,
        })
    }
}

/// Remove cycles from a parent-pointer map. Each node has at most one
/// outgoing edge, so cycles are node-disjoint; for each cycle the edge with
/// the lowest probability (ties: lowest child index) is dropped.
pub fn break_cycles(parents: &mut [Option<usize>], probs: &[f64]) {
    let n = parents.len();
    // 0 = unvisited, 1 = on current path, 2 = finished
    let mut color = vec![0u8; n];
    for start in 0..n {
        if color[start] != 0 {
            continue;
        }
        let mut path = Vec::new();
        let mut cur = start;
        loop {
            color[cur] = 1;
            path.push(cur);
            match parents[cur] {
                Some(p) if color[p] == 0 => cur = p,
                Some(p) if color[p] == 1 => {
                    let pos = path.iter().position(|&x| x == p).unwrap();
                    let drop = path[pos..]
                        .iter()
                        .copied()
                        .min_by(|&a, &b| {
                            probs[a]
                                .partial_cmp(&probs[b])
                                .unwrap()
                                .then(a.cmp(&b))
                        })
                        .unwrap();
                    parents[drop] = None;
                    break;
                }
                _ => break,
            }
        }
        for &v in &path {
            color[v] = 2;
        }
    }
}

/// Train the relation model: seeded page shuffle per epoch, one optimizer
/// step per page. Returns mean loss per epoch.
pub fn train_relations(
    model: &mut RelationModel,
    pages: &[RelationPage],
    epochs: usize,
    lr: f64,
    seed: u64,
) -> Result<Vec<f64>> {
    if epochs == 0 {
        return Err(Error::Contract("epochs must be at least 1".into()));
    }
    if pages.is_empty() {
        return Err(Error::Data("no pages with parent links to train on".into()));
    }
    let mut rng = rng_for(seed, "train.relations");
    let mut adam = Adam::new(lr);
    let mut history = Vec::with_capacity(epochs);
    let mut order: Vec<usize> = (0..pages.len()).collect();
    for epoch in 0..epochs {
        shuffle(&mut rng, &mut order);
        let mut total = 0.0;
        for &pi in &order {
            let page = &pages[pi];
            let (loss, grads) = model.loss_grad(page)?;
            if !loss.is_finite() {
                return Err(Error::Numeric {
                    epoch,
                    page_id: page.page_id.clone(),
                    msg: format!("loss is {loss}"),
                });
            }
            total += loss;
            let mut params = model.params_mut();
            adam.step(&mut params, &grads);
        }
        history.push(total / pages.len() as f64);
    }
    Ok(history)
}

/// Number of distinct semantic+appearance input columns (the default model
/// width).
pub const RELATION_INPUT_DIM: usize = SEMANTIC_DIM + crate::corpus::APPEARANCE_DIM;
