//! Two-layer graph convolution over a normalized adjacency, pretrained per
//! aspect on node classification.
//!
//! Forward, with A_hat the normalized adjacency and X the node features:
//!
//!   H1     = relu(A_hat X W1)
//!   logits = A_hat H1 W2
//!
//! No bias terms. After pretraining, H1 is extracted as the aspect's node
//! representation and the classification head W2 is discarded.
//!
//! Density and appearance aspects have static features; the two syntactic
//! aspects encode their features through a Bi-LSTM that trains jointly with
//! the graph weights, so their loop backpropagates through the encoder and
//! steps all eight tensors together. Pages are visited one at a time in a
//! seeded shuffled order, one optimizer step per page.

use ndarray::Array2;

use crate::encoding::bilstm::BiLstmParams;
use crate::math::{cross_entropy, glorot_uniform, relu, rng_for, shuffle};
use crate::optim::Adam;
use crate::graphs::GraphKind;
use crate::{Error, Result};

/// Weights for one aspect's GCN.
#[derive(Debug, Clone)]
pub struct GcnModel {
    pub kind: GraphKind,
    /// input_dim x hidden
    pub w1: Array2<f64>,
    /// hidden x classes
    pub w2: Array2<f64>,
}

/// Loss and gradients for one page.
#[derive(Debug, Clone)]
pub struct GcnStep {
    pub loss: f64,
    pub probs: Array2<f64>,
    pub d_w1: Array2<f64>,
    pub d_w2: Array2<f64>,
    /// Gradient with respect to the input features, for encoders that train
    /// jointly (zero-cost to callers that ignore it on static aspects).
    pub d_features: Array2<f64>,
}

impl GcnModel {
    pub fn new(
        kind: GraphKind,
        input_dim: usize,
        hidden: usize,
        classes: usize,
        seed: u64,
    ) -> GcnModel {
        let mut rng = rng_for(seed, &format!("init.gcn.{}", kind.name()));
        GcnModel {
            kind,
            w1: glorot_uniform(&mut rng, input_dim, hidden),
            w2: glorot_uniform(&mut rng, hidden, classes),
        }
    }

    pub fn hidden_dim(&self) -> usize {
        self.w1.ncols()
    }

    /// Forward pass returning the hidden layer and the logits.
    pub fn forward(&self, norm_adj: &Array2<f64>, features: &Array2<f64>) -> (Array2<f64>, Array2<f64>) {
        let ax = norm_adj.dot(features);
        let h1 = relu(&ax.dot(&self.w1));
        let logits = norm_adj.dot(&h1).dot(&self.w2);
        (h1, logits)
    }

    /// The pretrained node representation for a page.
    pub fn extract_hidden(&self, norm_adj: &Array2<f64>, features: &Array2<f64>) -> Array2<f64> {
        self.forward(norm_adj, features).0
    }

    /// Cross-entropy loss over all nodes plus gradients. The normalized
    /// adjacency is symmetric, which the backward pass relies on.
    pub fn loss_grad(
        &self,
        norm_adj: &Array2<f64>,
        features: &Array2<f64>,
        labels: &[usize],
    ) -> Result<GcnStep> {
        let n = features.nrows();
        if labels.len() != n {
            return Err(Error::Contract(format!(
                "label count {} does not match node count {n}",
                labels.len()
            )));
        }
        let classes = self.w2.ncols();
        if let Some(&bad) = labels.iter().find(|&&l| l >= classes) {
            return Err(Error::Contract(format!(
                "label index {bad} out of range for {classes} classes"
            )));
        }
        let ax = norm_adj.dot(features);
        let z1 = ax.dot(&self.w1);
        let h1 = relu(&z1);
        let ah1 = norm_adj.dot(&h1);
        let logits = ah1.dot(&self.w2);
        let (loss, probs, d_logits) = cross_entropy(&logits, labels);

        let d_w2 = ah1.t().dot(&d_logits);
        // d/dH1 of A_hat H1 W2 is A_hat^T (dLogits W2^T); A_hat is symmetric.
        let d_h1 = norm_adj.dot(&d_logits.dot(&self.w2.t()));
        let mut d_z1 = d_h1;
        for (dz, z) in d_z1.iter_mut().zip(z1.iter()) {
            if *z <= 0.0 {
                *dz = 0.0;
            }
        }
        let d_w1 = ax.t().dot(&d_z1);
        let d_features = norm_adj.dot(&d_z1.dot(&self.w1.t()));
        Ok(GcnStep {
            loss,
            probs,
            d_w1,
            d_w2,
            d_features,
        })
    }
}

/// One page of training input for a static-feature aspect.
pub struct StaticPage<'a> {
    pub page_id: &'a str,
    pub norm_adj: &'a Array2<f64>,
    pub features: &'a Array2<f64>,
    pub labels: &'a [usize],
}

/// Distinct embedded symbol sequences for one page plus the mapping from
/// node index to its sequence. Pages repeat parse signatures heavily, so the
/// encoder runs once per distinct sequence and nodes share rows.
#[derive(Debug, Clone)]
pub struct GroupedSeqs {
    /// Each entry is a pad_len x input_dim embedded sequence.
    pub distinct: Vec<Array2<f64>>,
    /// node_group[i] indexes into `distinct` for node i.
    pub node_group: Vec<usize>,
}

impl GroupedSeqs {
    pub fn node_count(&self) -> usize {
        self.node_group.len()
    }

    /// Build the N x 2h feature matrix by running the encoder over the
    /// distinct sequences and gathering rows per node.
    pub fn encode(&self, lstm: &BiLstmParams) -> Result<(Array2<f64>, crate::encoding::bilstm::BiLstmCache)> {
        let refs: Vec<&Array2<f64>> = self.distinct.iter().collect();
        let (rows, cache) = lstm.forward_batch(&refs)?;
        let mut features = Array2::zeros((self.node_group.len(), rows.ncols()));
        for (i, &g) in self.node_group.iter().enumerate() {
            features.row_mut(i).assign(&rows.row(g));
        }
        Ok((features, cache))
    }

    /// Scatter per-node feature gradients back onto the distinct rows.
    pub fn scatter_grad(&self, d_features: &Array2<f64>) -> Array2<f64> {
        let mut d_rows = Array2::zeros((self.distinct.len(), d_features.ncols()));
        for (i, &g) in self.node_group.iter().enumerate() {
            let add = &d_rows.row(g) + &d_features.row(i);
            d_rows.row_mut(g).assign(&add);
        }
        d_rows
    }
}

/// One page of training input for a syntactic aspect.
pub struct SynPage<'a> {
    pub page_id: &'a str,
    pub norm_adj: &'a Array2<f64>,
    pub seqs: &'a GroupedSeqs,
    pub labels: &'a [usize],
}

fn check_finite(loss: f64, epoch: usize, page_id: &str) -> Result<f64> {
    if loss.is_finite() {
        Ok(loss)
    } else {
        Err(Error::Numeric {
            epoch,
            page_id: page_id.to_string(),
            msg: format!("loss is {loss}"),
        })
    }
}

/// Pretrain a static-feature aspect: seeded page shuffle each epoch, one
/// optimizer step per page. Returns the mean loss per epoch.
pub fn pretrain_static(
    model: &mut GcnModel,
    pages: &[StaticPage<'_>],
    epochs: usize,
    lr: f64,
    seed: u64,
) -> Result<Vec<f64>> {
    if epochs == 0 {
        return Err(Error::Contract("epochs must be at least 1".into()));
    }
    if pages.is_empty() {
        return Err(Error::Data("no pages to pretrain on".into()));
    }
    let mut rng = rng_for(seed, &format!("pretrain.{}", model.kind.name()));
    let mut adam = Adam::new(lr);
    let mut history = Vec::with_capacity(epochs);
    let mut order: Vec<usize> = (0..pages.len()).collect();
    for epoch in 0..epochs {
        shuffle(&mut rng, &mut order);
        let mut total = 0.0;
        for &pi in &order {
            let page = &pages[pi];
            let step = model.loss_grad(page.norm_adj, page.features, page.labels)?;
            check_finite(step.loss, epoch, page.page_id)?;
            total += step.loss;
            adam.step(
                &mut [&mut model.w1, &mut model.w2],
                &[step.d_w1, step.d_w2],
            );
        }
        history.push(total / pages.len() as f64);
    }
    Ok(history)
}

/// Pretrain a syntactic aspect jointly with its sequence encoder. Each page
/// step backpropagates the graph loss through the gathered encoder rows and
/// updates the graph weights and all six encoder tensors together.
pub fn pretrain_syntactic(
    model: &mut GcnModel,
    lstm: &mut BiLstmParams,
    pages: &[SynPage<'_>],
    epochs: usize,
    lr: f64,
    seed: u64,
) -> Result<Vec<f64>> {
    if epochs == 0 {
        return Err(Error::Contract("epochs must be at least 1".into()));
    }
    if pages.is_empty() {
        return Err(Error::Data("no pages to pretrain on".into()));
    }
    let mut rng = rng_for(seed, &format!("pretrain.{}", model.kind.name()));
    let mut adam = Adam::new(lr);
    let mut history = Vec::with_capacity(epochs);
    let mut order: Vec<usize> = (0..pages.len()).collect();
    for epoch in 0..epochs {
        shuffle(&mut rng, &mut order);
        let mut total = 0.0;
        for &pi in &order {
            let page = &pages[pi];
            let (features, cache) = page.seqs.encode(lstm)?;
            let step = model.loss_grad(page.norm_adj, &features, page.labels)?;
            check_finite(step.loss, epoch, page.page_id)?;
            total += step.loss;
            let d_rows = page.seqs.scatter_grad(&step.d_features);
            let seq_refs: Vec<&Array2<f64>> = page.seqs.distinct.iter().collect();
            let lstm_grads = lstm.backward(&seq_refs, &cache, &d_rows);
            let mut grads = vec![step.d_w1, step.d_w2];
            grads.extend(lstm_grads.into_vec());
            let mut params: Vec<&mut Array2<f64>> = vec![&mut model.w1, &mut model.w2];
            params.extend(lstm.params_mut());
            adam.step(&mut params, &grads);
        }
        history.push(total / pages.len() as f64);
    }
    Ok(history)
}
