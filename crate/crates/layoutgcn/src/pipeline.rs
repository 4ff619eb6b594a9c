//! End-to-end orchestration: configuration, page preparation, the training
//! stages, hidden extraction, prediction, and checkpoint I/O.
//!
//! Training order matters. The relation model is trained first on the pages
//! that carry gold parent links; its predictions then fill in parent maps for
//! pages that lack links, so the relation-based aspects (`syn1`, `syn2`,
//! `semc`) always have an adjacency to work with. The six aspect graphs are
//! pretrained next (each on node classification), their hidden layers are
//! frozen, and the fused classifier is trained last over those hiddens.
//! [`run_training`] performs the whole sequence; the stages are also public
//! (`train_relation_model`, `pretrain_one`, ...) so a front end can run them
//! as separate commands against a shared model directory.
//!
//! Everything downstream of a [`PipelineConfig`] and a page list is a pure
//! function of the seed, so saving and reloading a model directory
//! reproduces predictions bit for bit.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use ndarray::{s, Array2};
use serde::{Deserialize, Serialize};

use crate::checkpoint::Checkpoint;
use crate::corpus::{
    validate_pages, ColumnMode, Featurizer, LabelSet, Page, APPEARANCE_DIM, SEMANTIC_DIM,
};
use crate::encoding::bilstm::BiLstmParams;
use crate::encoding::{embed_symbol_sequence, ParseLevel, SymbolTable, ENCODING_DIM, LSTM_HIDDEN};
use crate::eval::{evaluate_classifier, ClassifierSpec, EvalReport};
use crate::fusion::{
    normalize_aspects, train_classifier, Aspect, AspectHiddens, FusionClassifier, Pooling,
    Projection,
};
use crate::gcn::{pretrain_static, pretrain_syntactic, GcnModel, GroupedSeqs, StaticPage, SynPage};
use crate::graphs::{
    build_density_graphs, normalize_adjacency, relation_adjacency, GraphKind,
};
use crate::math::rng_for;
use crate::relpred::{
    reading_order_ranks, targets_from_parents, train_relations, RelationModel, RelationPage,
};
use crate::{Error, Result};

fn d_hidden() -> usize {
    256
}
fn d_mlp_hidden() -> usize {
    512
}
fn d_gcn_epochs() -> usize {
    10
}
fn d_classifier_epochs() -> usize {
    40
}
fn d_relation_epochs() -> usize {
    10
}
fn d_lr_semantic() -> f64 {
    1e-4
}
fn d_lr_syntactic() -> f64 {
    1e-4
}
fn d_lr_density() -> f64 {
    1e-3
}
fn d_lr_appearance() -> f64 {
    1e-3
}
fn d_classifier_lr() -> f64 {
    2e-5
}
fn d_relation_lr() -> f64 {
    1e-3
}
fn d_pooling() -> Pooling {
    Pooling::Max
}
fn d_aspects() -> Vec<Aspect> {
    Aspect::ALL.to_vec()
}
fn d_d_model() -> usize {
    512
}
fn d_heads() -> usize {
    8
}
fn d_ff_dim() -> usize {
    2048
}
fn d_max_positions() -> usize {
    128
}
fn d_fallback() -> bool {
    true
}

/// Every tunable knob of the pipeline. Only `seed` has no default, so a
/// config file can be as short as `seed = 7`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    /// Master seed; every random stream in the pipeline derives from it.
    pub seed: u64,
    /// GCN hidden width for the density and syntactic aspects (the semantic
    /// and appearance graphs keep their input width as hidden width), and
    /// the common width d that pooled aspects are projected to.
    #[serde(default = "d_hidden")]
    pub hidden_dim: usize,
    #[serde(default = "d_mlp_hidden")]
    pub mlp_hidden: usize,
    /// Pretraining epochs for each aspect graph.
    #[serde(default = "d_gcn_epochs")]
    pub gcn_epochs: usize,
    #[serde(default = "d_classifier_epochs")]
    pub classifier_epochs: usize,
    #[serde(default = "d_relation_epochs")]
    pub relation_epochs: usize,
    #[serde(default = "d_lr_semantic")]
    pub lr_semantic: f64,
    #[serde(default = "d_lr_syntactic")]
    pub lr_syntactic: f64,
    #[serde(default = "d_lr_density")]
    pub lr_density: f64,
    #[serde(default = "d_lr_appearance")]
    pub lr_appearance: f64,
    #[serde(default = "d_classifier_lr")]
    pub classifier_lr: f64,
    #[serde(default = "d_relation_lr")]
    pub relation_lr: f64,
    #[serde(default = "d_pooling")]
    pub pooling: Pooling,
    /// Aspect subset the classifier fuses (canonical order enforced).
    #[serde(default = "d_aspects")]
    pub aspects: Vec<Aspect>,
    #[serde(default = "d_d_model")]
    pub d_model: usize,
    #[serde(default = "d_heads")]
    pub heads: usize,
    #[serde(default = "d_ff_dim")]
    pub ff_dim: usize,
    /// Positional-embedding capacity of the relation model; pages with more
    /// segments cannot receive predicted links.
    #[serde(default = "d_max_positions")]
    pub max_positions: usize,
    /// Hash-featurize segments that carry no inline vectors.
    #[serde(default = "d_fallback")]
    pub fallback_features: bool,
    /// Force every page to this column mode instead of its annotation.
    #[serde(default)]
    pub column_override: Option<ColumnMode>,
}

impl PipelineConfig {
    /// All defaults with the given seed.
    pub fn with_seed(seed: u64) -> PipelineConfig {
        serde_json::from_value(serde_json::json!({ "seed": seed }))
            .expect("seed-only config must deserialize")
    }

    /// Pretraining learning rate for one graph kind.
    pub fn lr_for(&self, kind: GraphKind) -> f64 {
        match kind {
            GraphKind::Den1 | GraphKind::Den2 => self.lr_density,
            GraphKind::Appr => self.lr_appearance,
            GraphKind::Syn1 | GraphKind::Syn2 => self.lr_syntactic,
            GraphKind::Semc => self.lr_semantic,
        }
    }

    /// GCN hidden width for one graph kind: the wide aspects keep their
    /// input width so no information is lost before fusion projects them.
    pub fn gcn_hidden(&self, kind: GraphKind) -> usize {
        match kind {
            GraphKind::Appr => APPEARANCE_DIM,
            GraphKind::Semc => SEMANTIC_DIM,
            _ => self.hidden_dim,
        }
    }

    /// The config as a JSON value, for embedding in checkpoints/manifests.
    pub fn to_value(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config serializes")
    }
}

/// One page with everything precomputed that does not depend on parent
/// links: geometric adjacency, all static features, syntactic sequences.
#[derive(Debug, Clone)]
pub struct PreparedPage {
    pub page_id: String,
    pub seg_ids: Vec<String>,
    /// Gold class indices; `None` when some segment label is outside the
    /// label set (prediction still works, evaluation will not).
    pub labels: Option<Vec<usize>>,
    /// Gold parent map; `None` when the page carries no links at all.
    pub gold_parents: Option<Vec<Option<usize>>>,
    pub ranks: Vec<usize>,
    /// Normalized geometric adjacency shared by den1/den2/appr.
    pub geo_norm: Array2<f64>,
    pub den1_feats: Array2<f64>,
    pub den2_feats: Array2<f64>,
    pub appr_feats: Array2<f64>,
    pub semc_feats: Array2<f64>,
    pub syn1_seqs: GroupedSeqs,
    pub syn2_seqs: GroupedSeqs,
}

impl PreparedPage {
    pub fn node_count(&self) -> usize {
        self.seg_ids.len()
    }

    /// Relation-model input rows: semantic and appearance side by side.
    fn relation_inputs(&self) -> Array2<f64> {
        let n = self.node_count();
        let mut out = Array2::zeros((n, SEMANTIC_DIM + APPEARANCE_DIM));
        out.slice_mut(s![.., ..SEMANTIC_DIM]).assign(&self.semc_feats);
        out.slice_mut(s![.., SEMANTIC_DIM..]).assign(&self.appr_feats);
        out
    }
}

/// Group a page's symbol sequences at one parse level: distinct embedded
/// sequences plus the node -> sequence mapping, so the encoder runs once per
/// distinct parse signature.
fn grouped_seqs(page: &Page, level: ParseLevel, table: &SymbolTable) -> GroupedSeqs {
    let mut index: BTreeMap<Vec<usize>, usize> = BTreeMap::new();
    let mut distinct = Vec::new();
    let mut node_group = Vec::with_capacity(page.segments.len());
    for seg in &page.segments {
        let seq = table.symbol_sequence(seg, level);
        let g = *index.entry(seq.clone()).or_insert_with(|| {
            distinct.push(embed_symbol_sequence(&seq));
            distinct.len() - 1
        });
        node_group.push(g);
    }
    GroupedSeqs { distinct, node_group }
}

/// Validate and precompute every page. Empty pages are skipped with a
/// warning since no graph can be built over zero nodes.
pub fn prepare(
    pages: &[Page],
    config: &PipelineConfig,
    featurizer: &Featurizer,
    symbols: &SymbolTable,
    labels: &LabelSet,
) -> Result<Vec<PreparedPage>> {
    validate_pages(pages)?;
    let mut out = Vec::with_capacity(pages.len());
    for original in pages {
        if original.segments.is_empty() {
            log::warn!("skipping page {} with no segments", original.page_id);
            continue;
        }
        let overridden;
        let page = match config.column_override {
            Some(mode) => {
                let mut p = original.clone();
                p.column_mode = mode;
                overridden = p;
                &overridden
            }
            None => original,
        };
        let (g1, g2) = build_density_graphs(page)?;
        let appr_feats = featurizer.appearance_matrix(&page.segments)?;
        let semc_feats = featurizer.semantic_matrix(&page.segments)?;
        let page_labels = page
            .segments
            .iter()
            .map(|seg| labels.index_of(&seg.label))
            .collect::<Option<Vec<usize>>>();
        out.push(PreparedPage {
            page_id: page.page_id.clone(),
            seg_ids: page.segments.iter().map(|s| s.id.clone()).collect(),
            labels: page_labels,
            gold_parents: page.has_parent_links().then(|| page.parent_indices()),
            ranks: reading_order_ranks(page),
            geo_norm: g1.norm_adjacency,
            den1_feats: g1.features,
            den2_feats: g2.features,
            appr_feats,
            semc_feats,
            syn1_seqs: grouped_seqs(page, ParseLevel::L1, symbols),
            syn2_seqs: grouped_seqs(page, ParseLevel::L2, symbols),
        });
    }
    Ok(out)
}

/// Where parent links come from at extraction/prediction time.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinkSource {
    /// Use gold links where a page has them, predict otherwise.
    GoldOrPredict,
    /// Ignore gold links and always predict (how unseen pages behave).
    AlwaysPredict,
}

/// A fully trained pipeline.
#[derive(Debug, Clone)]
pub struct TrainedModels {
    pub config: PipelineConfig,
    pub labels: LabelSet,
    pub symbols: SymbolTable,
    pub gcn: BTreeMap<GraphKind, GcnModel>,
    /// Sequence encoder trained with syn1.
    pub lstm1: BiLstmParams,
    /// Sequence encoder trained with syn2.
    pub lstm2: BiLstmParams,
    pub fusion: FusionClassifier,
    /// Absent when no training page carried gold links.
    pub relations: Option<RelationModel>,
    /// Mean loss per epoch, keyed by stage ("gcn.den1", ..., "relations",
    /// "fusion").
    pub histories: BTreeMap<String, Vec<f64>>,
}

impl TrainedModels {
    pub fn featurizer(&self) -> Featurizer {
        Featurizer::new(self.config.seed, self.config.fallback_features)
    }

    /// The classifier-training recipe these models used, for retraining
    /// experiments (ablations, pooling comparisons) over the same hiddens.
    pub fn classifier_spec(&self) -> ClassifierSpec {
        ClassifierSpec {
            pooling: self.config.pooling,
            d: self.config.hidden_dim,
            semantic_dim: SEMANTIC_DIM,
            appearance_dim: APPEARANCE_DIM,
            mlp_hidden: self.config.mlp_hidden,
            classes: self.labels.len(),
            epochs: self.config.classifier_epochs,
            lr: self.config.classifier_lr,
            seed: self.config.seed,
        }
    }

    fn gcn_for(&self, kind: GraphKind) -> Result<&GcnModel> {
        self.gcn
            .get(&kind)
            .ok_or_else(|| Error::MissingCheckpoint(kind.name().to_string()))
    }
}

/// Resolve the parent map one page uses, returning whether it was predicted.
fn resolve_parents(
    page: &PreparedPage,
    relations: Option<&RelationModel>,
    source: LinkSource,
) -> Result<(Vec<Option<usize>>, bool)> {
    if source == LinkSource::GoldOrPredict {
        if let Some(gold) = &page.gold_parents {
            return Ok((gold.clone(), false));
        }
    }
    match relations {
        Some(model) => {
            let pred = model.predict(&page.relation_inputs(), &page.ranks)?;
            Ok((pred.parents, true))
        }
        None => Err(Error::MissingCheckpoint("relations".to_string())),
    }
}

/// Train the relation model on every prepared page with gold links. Pages
/// beyond the positional capacity are skipped with a warning. Returns `None`
/// when no page qualifies.
pub fn train_relation_model(
    prepared: &[PreparedPage],
    config: &PipelineConfig,
) -> Result<Option<(RelationModel, Vec<f64>)>> {
    let mut rel_pages = Vec::new();
    for page in prepared {
        let Some(gold) = &page.gold_parents else {
            continue;
        };
        if page.node_count() > config.max_positions {
            log::warn!(
                "page {} has {} segments, over the positional capacity {}; not used for relation training",
                page.page_id,
                page.node_count(),
                config.max_positions
            );
            continue;
        }
        rel_pages.push(RelationPage {
            page_id: page.page_id.clone(),
            inputs: page.relation_inputs(),
            ranks: page.ranks.clone(),
            targets: targets_from_parents(gold),
        });
    }
    if rel_pages.is_empty() {
        log::warn!("no pages carry gold parent links; skipping relation training");
        return Ok(None);
    }
    let mut model = RelationModel::new(
        SEMANTIC_DIM + APPEARANCE_DIM,
        config.d_model,
        config.heads,
        config.ff_dim,
        config.max_positions,
        config.seed,
    )?;
    let history = train_relations(
        &mut model,
        &rel_pages,
        config.relation_epochs,
        config.relation_lr,
        config.seed,
    )?;
    Ok(Some((model, history)))
}

/// Parent maps for training the relation-based aspects: gold where a page is
/// annotated, predicted otherwise. Without a relation model, unannotated
/// pages fall back to a link-free graph (self-loops only).
pub fn resolve_parent_maps(
    prepared: &[PreparedPage],
    relations: Option<&RelationModel>,
) -> Result<Vec<Vec<Option<usize>>>> {
    let mut parent_maps = Vec::with_capacity(prepared.len());
    for page in prepared {
        match (&page.gold_parents, relations) {
            (Some(gold), _) => parent_maps.push(gold.clone()),
            (None, Some(model)) => {
                parent_maps.push(model.predict(&page.relation_inputs(), &page.ranks)?.parents)
            }
            (None, None) => {
                log::warn!(
                    "page {} has no links and no relation model; its relation aspects see an edgeless graph",
                    page.page_id
                );
                parent_maps.push(vec![None; page.node_count()]);
            }
        }
    }
    Ok(parent_maps)
}

/// Normalized relation adjacency for each page under the given parent maps.
pub fn relation_norms(
    prepared: &[PreparedPage],
    parent_maps: &[Vec<Option<usize>>],
) -> Result<Vec<Array2<f64>>> {
    prepared
        .iter()
        .zip(parent_maps)
        .map(|(page, parents)| {
            let a = relation_adjacency(page.node_count(), parents)?;
            normalize_adjacency(&a)
        })
        .collect()
}

/// Gold label indices for training, or a data error naming the page.
fn require_labels(page: &PreparedPage) -> Result<&[usize]> {
    page.labels.as_deref().ok_or_else(|| {
        Error::Data(format!(
            "page {} has labels outside the label set",
            page.page_id
        ))
    })
}

/// One pretrained aspect graph: its GCN, the sequence encoder trained with
/// it (syntactic kinds only), and the loss history.
#[derive(Debug, Clone)]
pub struct AspectOutcome {
    pub model: GcnModel,
    pub lstm: Option<BiLstmParams>,
    pub history: Vec<f64>,
}

/// Pretrain one aspect graph on node classification. `rel_norms` must hold
/// the per-page normalized relation adjacencies (from [`relation_norms`]);
/// only the relation-based kinds read them.
pub fn pretrain_one(
    kind: GraphKind,
    prepared: &[PreparedPage],
    rel_norms: &[Array2<f64>],
    config: &PipelineConfig,
    classes: usize,
) -> Result<AspectOutcome> {
    if prepared.len() != rel_norms.len() {
        return Err(Error::Contract(format!(
            "{} prepared pages but {} relation adjacencies",
            prepared.len(),
            rel_norms.len()
        )));
    }
    let mut model = GcnModel::new(
        kind,
        kind.feature_dim(),
        config.gcn_hidden(kind),
        classes,
        config.seed,
    );
    let lr = config.lr_for(kind);
    match kind {
        GraphKind::Den1 | GraphKind::Den2 | GraphKind::Appr | GraphKind::Semc => {
            let static_pages = prepared
                .iter()
                .enumerate()
                .map(|(i, page)| {
                    Ok(StaticPage {
                        page_id: &page.page_id,
                        norm_adj: match kind {
                            GraphKind::Semc => &rel_norms[i],
                            _ => &page.geo_norm,
                        },
                        features: match kind {
                            GraphKind::Den1 => &page.den1_feats,
                            GraphKind::Den2 => &page.den2_feats,
                            GraphKind::Appr => &page.appr_feats,
                            _ => &page.semc_feats,
                        },
                        labels: require_labels(page)?,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            let history =
                pretrain_static(&mut model, &static_pages, config.gcn_epochs, lr, config.seed)?;
            Ok(AspectOutcome {
                model,
                lstm: None,
                history,
            })
        }
        GraphKind::Syn1 | GraphKind::Syn2 => {
            let syn_pages = prepared
                .iter()
                .enumerate()
                .map(|(i, page)| {
                    Ok(SynPage {
                        page_id: &page.page_id,
                        norm_adj: &rel_norms[i],
                        seqs: match kind {
                            GraphKind::Syn1 => &page.syn1_seqs,
                            _ => &page.syn2_seqs,
                        },
                        labels: require_labels(page)?,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            let mut lstm = BiLstmParams::new(
                ENCODING_DIM,
                LSTM_HIDDEN,
                &mut rng_for(config.seed, &format!("init.lstm.{}", kind.name())),
            );
            let history = pretrain_syntactic(
                &mut model,
                &mut lstm,
                &syn_pages,
                config.gcn_epochs,
                lr,
                config.seed,
            )?;
            Ok(AspectOutcome {
                model,
                lstm: Some(lstm),
                history,
            })
        }
    }
}

/// Train everything on one page list. The label set is taken from the pages
/// themselves.
pub fn run_training(pages: &[Page], config: &PipelineConfig) -> Result<TrainedModels> {
    let labels = LabelSet::from_pages(pages)?;
    let featurizer = Featurizer::new(config.seed, config.fallback_features);
    let symbols = SymbolTable::default();
    let prepared = prepare(pages, config, &featurizer, &symbols, &labels)?;
    if prepared.is_empty() {
        return Err(Error::Data("no non-empty pages to train on".into()));
    }
    let mut histories = BTreeMap::new();

    log::info!("training relation model");
    let relations = match train_relation_model(&prepared, config)? {
        Some((model, history)) => {
            histories.insert("relations".to_string(), history);
            Some(model)
        }
        None => None,
    };

    let parent_maps = resolve_parent_maps(&prepared, relations.as_ref())?;
    let rel_norms = relation_norms(&prepared, &parent_maps)?;

    let classes = labels.len();
    let mut gcn = BTreeMap::new();
    let mut lstm1 = None;
    let mut lstm2 = None;
    for kind in GraphKind::ALL {
        log::info!("pretraining {} graph", kind.name());
        let outcome = pretrain_one(kind, &prepared, &rel_norms, config, classes)?;
        histories.insert(format!("gcn.{}", kind.name()), outcome.history);
        gcn.insert(kind, outcome.model);
        match kind {
            GraphKind::Syn1 => lstm1 = outcome.lstm,
            GraphKind::Syn2 => lstm2 = outcome.lstm,
            _ => {}
        }
    }

    let mut models = TrainedModels {
        config: config.clone(),
        labels,
        symbols,
        gcn,
        lstm1: lstm1.expect("syn1 pretraining yields its encoder"),
        lstm2: lstm2.expect("syn2 pretraining yields its encoder"),
        fusion: FusionClassifier::new(
            &config.aspects,
            config.pooling,
            config.hidden_dim,
            SEMANTIC_DIM,
            APPEARANCE_DIM,
            config.mlp_hidden,
            classes,
            config.seed,
        )?,
        relations,
        histories,
    };

    log::info!("training fused classifier");
    let mut hiddens = Vec::with_capacity(prepared.len());
    for (page, parents) in prepared.iter().zip(&parent_maps) {
        require_labels(page)?;
        hiddens.push(extract_hiddens(&models, page, parents)?);
    }
    let history = train_classifier(
        &mut models.fusion,
        &hiddens,
        config.classifier_epochs,
        config.classifier_lr,
        config.seed,
    )?;
    models.histories.insert("fusion".to_string(), history);
    Ok(models)
}

/// Frozen per-aspect hiddens for one page under a fixed parent map.
fn extract_hiddens(
    models: &TrainedModels,
    page: &PreparedPage,
    parents: &[Option<usize>],
) -> Result<AspectHiddens> {
    let rel_norm = normalize_adjacency(&relation_adjacency(page.node_count(), parents)?)?;
    let (syn1_feats, _) = page.syn1_seqs.encode(&models.lstm1)?;
    let (syn2_feats, _) = page.syn2_seqs.encode(&models.lstm2)?;
    Ok(AspectHiddens {
        page_id: page.page_id.clone(),
        labels: page.labels.clone().unwrap_or_default(),
        syn1: models
            .gcn_for(GraphKind::Syn1)?
            .extract_hidden(&rel_norm, &syn1_feats),
        syn2: models
            .gcn_for(GraphKind::Syn2)?
            .extract_hidden(&rel_norm, &syn2_feats),
        semc: models
            .gcn_for(GraphKind::Semc)?
            .extract_hidden(&rel_norm, &page.semc_feats),
        den1: models
            .gcn_for(GraphKind::Den1)?
            .extract_hidden(&page.geo_norm, &page.den1_feats),
        den2: models
            .gcn_for(GraphKind::Den2)?
            .extract_hidden(&page.geo_norm, &page.den2_feats),
        appr: models
            .gcn_for(GraphKind::Appr)?
            .extract_hidden(&page.geo_norm, &page.appr_feats),
    })
}

/// One page's extracted hiddens plus the links that produced them.
#[derive(Debug, Clone)]
pub struct ExtractedPage {
    pub hiddens: AspectHiddens,
    pub seg_ids: Vec<String>,
    pub parents: Vec<Option<usize>>,
    pub parents_predicted: bool,
}

/// Extract aspect hiddens for a page list under the given link source.
pub fn extract_pages(
    models: &TrainedModels,
    pages: &[Page],
    source: LinkSource,
) -> Result<Vec<ExtractedPage>> {
    let featurizer = models.featurizer();
    let prepared = prepare(pages, &models.config, &featurizer, &models.symbols, &models.labels)?;
    let mut out = Vec::with_capacity(prepared.len());
    for page in &prepared {
        let (parents, parents_predicted) =
            resolve_parents(page, models.relations.as_ref(), source)?;
        out.push(ExtractedPage {
            hiddens: extract_hiddens(models, page, &parents)?,
            seg_ids: page.seg_ids.clone(),
            parents,
            parents_predicted,
        });
    }
    Ok(out)
}

/// Predicted labels and links for one page.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PagePrediction {
    pub page_id: String,
    pub seg_ids: Vec<String>,
    /// Predicted label name per segment.
    pub labels: Vec<String>,
    /// Classifier probability of each predicted label.
    pub confidence: Vec<f64>,
    /// Parent map used for the relation aspects (child index -> parent index).
    pub parents: Vec<Option<usize>>,
    pub parents_predicted: bool,
}

/// Classify every segment of every page.
pub fn predict_with(
    models: &TrainedModels,
    pages: &[Page],
    source: LinkSource,
) -> Result<Vec<PagePrediction>> {
    let extracted = extract_pages(models, pages, source)?;
    let mut out = Vec::with_capacity(extracted.len());
    for page in extracted {
        let (probs, preds) = models.fusion.predict(&page.hiddens)?;
        let confidence = preds
            .iter()
            .enumerate()
            .map(|(i, &c)| probs[[i, c]])
            .collect();
        out.push(PagePrediction {
            page_id: page.hiddens.page_id,
            seg_ids: page.seg_ids,
            labels: preds.iter().map(|&c| models.labels.name(c).to_string()).collect(),
            confidence,
            parents: page.parents,
            parents_predicted: page.parents_predicted,
        });
    }
    Ok(out)
}

/// Score the classifier against the pages' gold labels.
pub fn evaluate_with(
    models: &TrainedModels,
    pages: &[Page],
    source: LinkSource,
) -> Result<EvalReport> {
    let extracted = extract_pages(models, pages, source)?;
    let hiddens: Vec<AspectHiddens> = extracted.into_iter().map(|p| p.hiddens).collect();
    evaluate_classifier(&models.fusion, &hiddens, &models.labels)
}

const LSTM_TENSORS: [&str; 6] = [
    "lstm.wx_f",
    "lstm.wh_f",
    "lstm.b_f",
    "lstm.wx_b",
    "lstm.wh_b",
    "lstm.b_b",
];

const RELATION_TENSORS: [&str; 21] = [
    "w_in", "b_in", "pos", "enc.wq", "enc.bq", "enc.wk", "enc.bk", "enc.wv", "enc.bv", "enc.wo",
    "enc.bo", "enc.ln1_g", "enc.ln1_b", "enc.wf1", "enc.bf1", "enc.wf2", "enc.bf2", "enc.ln2_g",
    "enc.ln2_b", "wq2", "wk2",
];

fn lstm_tensor_values(lstm: &BiLstmParams) -> [&Array2<f64>; 6] {
    [
        &lstm.wx_f, &lstm.wh_f, &lstm.b_f, &lstm.wx_b, &lstm.wh_b, &lstm.b_b,
    ]
}

fn relation_tensor_values(model: &RelationModel) -> [&Array2<f64>; 21] {
    let e = &model.encoder;
    [
        &model.w_in,
        &model.b_in,
        &model.pos,
        &e.wq,
        &e.bq,
        &e.wk,
        &e.bk,
        &e.wv,
        &e.bv,
        &e.wo,
        &e.bo,
        &e.ln1_g,
        &e.ln1_b,
        &e.wf1,
        &e.bf1,
        &e.wf2,
        &e.bf2,
        &e.ln2_g,
        &e.ln2_b,
        &model.wq2,
        &model.wk2,
    ]
}

fn ckpt_path(dir: &Path, stem: &str) -> PathBuf {
    dir.join(format!("{stem}.json"))
}

/// Write one pretrained aspect to `dir` as `{kind}.json`, returning the path.
pub fn save_gcn_checkpoint(
    dir: &Path,
    outcome: &AspectOutcome,
    config: &PipelineConfig,
    labels: &LabelSet,
) -> Result<PathBuf> {
    let kind = outcome.model.kind;
    let mut ck = Checkpoint::new(
        &format!("gcn.{}", kind.name()),
        config.seed,
        config.to_value(),
        labels.names().to_vec(),
    );
    ck.insert("w1", &outcome.model.w1);
    ck.insert("w2", &outcome.model.w2);
    if let Some(lstm) = &outcome.lstm {
        for (name, tensor) in LSTM_TENSORS.iter().zip(lstm_tensor_values(lstm)) {
            ck.insert(name, tensor);
        }
    }
    ck.loss_history = outcome.history.clone();
    let path = ckpt_path(dir, kind.name());
    ck.save(&path)?;
    Ok(path)
}

/// Write the fused classifier to `dir` as `fusion.json`, returning the path.
pub fn save_fusion_checkpoint(
    dir: &Path,
    fusion: &FusionClassifier,
    config: &PipelineConfig,
    labels: &LabelSet,
    history: &[f64],
) -> Result<PathBuf> {
    let mut ck = Checkpoint::new("fusion", config.seed, config.to_value(), labels.names().to_vec());
    ck.insert("mlp_w1", &fusion.mlp_w1);
    ck.insert("mlp_b1", &fusion.mlp_b1);
    ck.insert("mlp_w2", &fusion.mlp_w2);
    ck.insert("mlp_b2", &fusion.mlp_b2);
    if let Some(p) = &fusion.fc_semc {
        ck.insert("fc_semc.w", &p.w);
        ck.insert("fc_semc.b", &p.b);
    }
    if let Some(p) = &fusion.fc_appr {
        ck.insert("fc_appr.w", &p.w);
        ck.insert("fc_appr.b", &p.b);
    }
    ck.loss_history = history.to_vec();
    let path = ckpt_path(dir, "fusion");
    ck.save(&path)?;
    Ok(path)
}

/// Write the relation model to an explicit checkpoint path.
pub fn save_relations_checkpoint(
    path: &Path,
    model: &RelationModel,
    config: &PipelineConfig,
    history: &[f64],
) -> Result<()> {
    let mut ck = Checkpoint::new("relations", config.seed, config.to_value(), Vec::new());
    for (name, tensor) in RELATION_TENSORS.iter().zip(relation_tensor_values(model)) {
        ck.insert(name, tensor);
    }
    ck.loss_history = history.to_vec();
    ck.save(path)
}

/// Read a relation checkpoint; model dimensions come from its stored config.
pub fn load_relations_checkpoint(path: &Path) -> Result<(RelationModel, Vec<f64>)> {
    let ck = Checkpoint::load(path)?;
    let config: PipelineConfig = serde_json::from_value(ck.config.clone())
        .map_err(|e| Error::Data(format!("relation checkpoint has a bad config: {e}")))?;
    let t = |name: &str| ck.tensor(name);
    let model = RelationModel {
        d_model: config.d_model,
        max_positions: config.max_positions,
        w_in: t("w_in")?,
        b_in: t("b_in")?,
        pos: t("pos")?,
        encoder: crate::relpred::encoder::EncoderLayer {
            d_model: config.d_model,
            heads: config.heads,
            wq: t("enc.wq")?,
            bq: t("enc.bq")?,
            wk: t("enc.wk")?,
            bk: t("enc.bk")?,
            wv: t("enc.wv")?,
            bv: t("enc.bv")?,
            wo: t("enc.wo")?,
            bo: t("enc.bo")?,
            ln1_g: t("enc.ln1_g")?,
            ln1_b: t("enc.ln1_b")?,
            wf1: t("enc.wf1")?,
            bf1: t("enc.bf1")?,
            wf2: t("enc.wf2")?,
            bf2: t("enc.bf2")?,
            ln2_g: t("enc.ln2_g")?,
            ln2_b: t("enc.ln2_b")?,
        },
        wq2: t("wq2")?,
        wk2: t("wk2")?,
    };
    Ok((model, ck.loss_history))
}

/// Write the symbol table to `dir` as `symbols.json`, returning the path.
pub fn save_symbols(dir: &Path, symbols: &SymbolTable) -> Result<PathBuf> {
    let body = serde_json::to_string(symbols)
        .map_err(|e| Error::Data(format!("symbol table serialization failed: {e}")))?;
    let path = ckpt_path(dir, "symbols");
    std::fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

/// Write every model to `dir` as one checkpoint file per component plus the
/// symbol table:
/// `den1.json den2.json appr.json syn1.json syn2.json semc.json fusion.json
/// relations.json symbols.json`.
pub fn save_models(models: &TrainedModels, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for kind in GraphKind::ALL {
        let outcome = AspectOutcome {
            model: models.gcn_for(kind)?.clone(),
            lstm: match kind {
                GraphKind::Syn1 => Some(models.lstm1.clone()),
                GraphKind::Syn2 => Some(models.lstm2.clone()),
                _ => None,
            },
            history: models
                .histories
                .get(&format!("gcn.{}", kind.name()))
                .cloned()
                .unwrap_or_default(),
        };
        save_gcn_checkpoint(dir, &outcome, &models.config, &models.labels)?;
    }
    save_fusion_checkpoint(
        dir,
        &models.fusion,
        &models.config,
        &models.labels,
        models.histories.get("fusion").map_or(&[], |h| h.as_slice()),
    )?;
    if let Some(rel) = &models.relations {
        save_relations_checkpoint(
            &ckpt_path(dir, "relations"),
            rel,
            &models.config,
            models
                .histories
                .get("relations")
                .map_or(&[], |h| h.as_slice()),
        )?;
    }
    save_symbols(dir, &models.symbols)?;
    Ok(())
}

/// Load a checkpoint or report which one is missing.
fn load_required(dir: &Path, stem: &str) -> Result<Checkpoint> {
    let path = ckpt_path(dir, stem);
    if !path.exists() {
        return Err(Error::MissingCheckpoint(stem.to_string()));
    }
    Checkpoint::load(&path)
}

fn lstm_from_checkpoint(ck: &Checkpoint) -> Result<BiLstmParams> {
    Ok(BiLstmParams {
        wx_f: ck.tensor("lstm.wx_f")?,
        wh_f: ck.tensor("lstm.wh_f")?,
        b_f: ck.tensor("lstm.b_f")?,
        wx_b: ck.tensor("lstm.wx_b")?,
        wh_b: ck.tensor("lstm.wh_b")?,
        b_b: ck.tensor("lstm.b_b")?,
    })
}

/// Load the pretrained stage of a model directory: the six aspect
/// checkpoints, the symbol table, and the relation model if present. The
/// fused classifier comes back freshly initialized from the stored config,
/// ready for [`train_classifier`]; [`load_models`] replaces it from disk.
pub fn load_pretrained(dir: &Path) -> Result<TrainedModels> {
    let mut checkpoints = BTreeMap::new();
    for kind in GraphKind::ALL {
        checkpoints.insert(kind, load_required(dir, kind.name())?);
    }
    let first = &checkpoints[&GraphKind::Den1];
    let config: PipelineConfig = serde_json::from_value(first.config.clone())
        .map_err(|e| Error::Data(format!("den1 checkpoint has a bad config: {e}")))?;
    let labels = LabelSet::new(first.labels.clone())?;
    for (kind, ck) in &checkpoints {
        if ck.labels != first.labels {
            return Err(Error::Data(format!(
                "label sets disagree between the den1 and {} checkpoints",
                kind.name()
            )));
        }
        if ck.seed != first.seed {
            return Err(Error::Data(format!(
                "seeds disagree between the den1 and {} checkpoints",
                kind.name()
            )));
        }
    }

    let mut gcn = BTreeMap::new();
    let mut histories = BTreeMap::new();
    for (kind, ck) in &checkpoints {
        gcn.insert(
            *kind,
            GcnModel {
                kind: *kind,
                w1: ck.tensor("w1")?,
                w2: ck.tensor("w2")?,
            },
        );
        histories.insert(format!("gcn.{}", kind.name()), ck.loss_history.clone());
    }
    let lstm1 = lstm_from_checkpoint(&checkpoints[&GraphKind::Syn1])?;
    let lstm2 = lstm_from_checkpoint(&checkpoints[&GraphKind::Syn2])?;

    let rel_path = ckpt_path(dir, "relations");
    let relations = if rel_path.exists() {
        let (model, history) = load_relations_checkpoint(&rel_path)?;
        histories.insert("relations".to_string(), history);
        Some(model)
    } else {
        None
    };

    let sym_path = ckpt_path(dir, "symbols");
    if !sym_path.exists() {
        return Err(Error::MissingCheckpoint("symbols".to_string()));
    }
    let body = std::fs::read_to_string(&sym_path).map_err(|e| Error::io(&sym_path, e))?;
    let symbols: SymbolTable = serde_json::from_str(&body)
        .map_err(|e| Error::Data(format!("{} is not a symbol table: {e}", sym_path.display())))?;

    let fusion = FusionClassifier::new(
        &config.aspects,
        config.pooling,
        config.hidden_dim,
        SEMANTIC_DIM,
        APPEARANCE_DIM,
        config.mlp_hidden,
        labels.len(),
        config.seed,
    )?;

    Ok(TrainedModels {
        config,
        labels,
        symbols,
        gcn,
        lstm1,
        lstm2,
        fusion,
        relations,
        histories,
    })
}

/// Load every model [`save_models`] wrote. The relation checkpoint is
/// optional here; using a link source that needs it reports it as missing
/// then.
pub fn load_models(dir: &Path) -> Result<TrainedModels> {
    let mut models = load_pretrained(dir)?;
    let fusion_ck = load_required(dir, "fusion")?;
    if fusion_ck.labels != models.labels.names() {
        return Err(Error::Data(
            "label sets disagree between the den1 and fusion checkpoints".into(),
        ));
    }
    if fusion_ck.seed != models.config.seed {
        return Err(Error::Data(
            "seeds disagree between the den1 and fusion checkpoints".into(),
        ));
    }
    let config: PipelineConfig = serde_json::from_value(fusion_ck.config.clone())
        .map_err(|e| Error::Data(format!("fusion checkpoint has a bad config: {e}")))?;
    let projection = |stem: &str| -> Result<Option<Projection>> {
        match (
            fusion_ck.params.contains_key(&format!("{stem}.w")),
            fusion_ck.params.contains_key(&format!("{stem}.b")),
        ) {
            (true, true) => Ok(Some(Projection {
                w: fusion_ck.tensor(&format!("{stem}.w"))?,
                b: fusion_ck.tensor(&format!("{stem}.b"))?,
            })),
            (false, false) => Ok(None),
            _ => Err(Error::Data(format!(
                "fusion checkpoint has half of the {stem} projection"
            ))),
        }
    };
    models.fusion = FusionClassifier {
        aspects: normalize_aspects(&config.aspects)?,
        pooling: config.pooling,
        d: config.hidden_dim,
        fc_semc: projection("fc_semc")?,
        fc_appr: projection("fc_appr")?,
        mlp_w1: fusion_ck.tensor("mlp_w1")?,
        mlp_b1: fusion_ck.tensor("mlp_b1")?,
        mlp_w2: fusion_ck.tensor("mlp_w2")?,
        mlp_b2: fusion_ck.tensor("mlp_b2")?,
        dropout: 0.1,
    };
    models
        .histories
        .insert("fusion".to_string(), fusion_ck.loss_history.clone());
    models.config = config;
    Ok(models)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::mixed_corpus;

    /// Small-but-complete config for tests.
    fn tiny_config(seed: u64) -> PipelineConfig {
        let mut c = PipelineConfig::with_seed(seed);
        c.hidden_dim = 8;
        c.mlp_hidden = 16;
        c.gcn_epochs = 1;
        c.classifier_epochs = 2;
        c.relation_epochs = 1;
        c.d_model = 16;
        c.heads = 2;
        c.ff_dim = 16;
        c
    }

    #[test]
    fn config_defaults_fill_in() {
        let c: PipelineConfig = serde_json::from_value(serde_json::json!({ "seed": 7 })).unwrap();
        assert_eq!(c.seed, 7);
        assert_eq!(c.hidden_dim, 256);
        assert_eq!(c.gcn_epochs, 10);
        assert_eq!(c.classifier_lr, 2e-5);
        assert_eq!(c.pooling, Pooling::Max);
        assert_eq!(c.aspects, Aspect::ALL.to_vec());
        assert_eq!(c.column_override, None);
    }

    #[test]
    fn config_rejects_unknown_keys() {
        let r: std::result::Result<PipelineConfig, _> =
            serde_json::from_value(serde_json::json!({ "seed": 7, "hiden_dim": 3 }));
        assert!(r.is_err());
    }

    #[test]
    fn config_round_trips_through_value() {
        let c = tiny_config(99);
        let back: PipelineConfig = serde_json::from_value(c.to_value()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn trains_predicts_and_round_trips_through_disk() {
        let config = tiny_config(11);
        let pages = mixed_corpus(6, 3);
        let models = run_training(&pages, &config).unwrap();
        assert!(models.relations.is_some());
        assert_eq!(models.gcn.len(), 6);

        let preds = predict_with(&models, &pages, LinkSource::GoldOrPredict).unwrap();
        assert_eq!(preds.len(), 6);
        for p in &preds {
            assert_eq!(p.labels.len(), 6);
            assert!(!p.parents_predicted);
            for name in &p.labels {
                assert!(models.labels.index_of(name).is_some());
            }
            for c in &p.confidence {
                assert!(*c > 0.0 && *c <= 1.0);
            }
        }

        let dir = tempfile::tempdir().unwrap();
        save_models(&models, dir.path()).unwrap();
        let loaded = load_models(dir.path()).unwrap();
        let again = predict_with(&loaded, &pages, LinkSource::GoldOrPredict).unwrap();
        for (a, b) in preds.iter().zip(&again) {
            assert_eq!(a.labels, b.labels);
            assert_eq!(a.confidence, b.confidence);
            assert_eq!(a.parents, b.parents);
        }

        // Predicted links differ in provenance but still classify.
        let forced = predict_with(&loaded, &pages, LinkSource::AlwaysPredict).unwrap();
        assert!(forced.iter().all(|p| p.parents_predicted));

        let report = evaluate_with(&loaded, &pages, LinkSource::GoldOrPredict).unwrap();
        assert_eq!(report.total, 36);
    }

    #[test]
    fn staged_stages_match_run_training() {
        let config = tiny_config(17);
        let pages = mixed_corpus(5, 9);
        let whole = run_training(&pages, &config).unwrap();

        // The same stages run one by one against a shared directory.
        let labels = LabelSet::from_pages(&pages).unwrap();
        let featurizer = Featurizer::new(config.seed, config.fallback_features);
        let symbols = SymbolTable::default();
        let prepared = prepare(&pages, &config, &featurizer, &symbols, &labels).unwrap();
        let dir = tempfile::tempdir().unwrap();

        let (rel, rel_hist) = train_relation_model(&prepared, &config).unwrap().unwrap();
        save_relations_checkpoint(&ckpt_path(dir.path(), "relations"), &rel, &config, &rel_hist)
            .unwrap();
        let parent_maps = resolve_parent_maps(&prepared, Some(&rel)).unwrap();
        let rel_norms = relation_norms(&prepared, &parent_maps).unwrap();
        for kind in GraphKind::ALL {
            let outcome = pretrain_one(kind, &prepared, &rel_norms, &config, labels.len()).unwrap();
            save_gcn_checkpoint(dir.path(), &outcome, &config, &labels).unwrap();
        }
        save_symbols(dir.path(), &symbols).unwrap();

        let mut staged = load_pretrained(dir.path()).unwrap();
        let hiddens: Vec<AspectHiddens> = extract_pages(&staged, &pages, LinkSource::GoldOrPredict)
            .unwrap()
            .into_iter()
            .map(|p| p.hiddens)
            .collect();
        let hist = train_classifier(
            &mut staged.fusion,
            &hiddens,
            config.classifier_epochs,
            config.classifier_lr,
            config.seed,
        )
        .unwrap();
        save_fusion_checkpoint(dir.path(), &staged.fusion, &config, &labels, &hist).unwrap();

        let loaded = load_models(dir.path()).unwrap();
        let a = predict_with(&whole, &pages, LinkSource::AlwaysPredict).unwrap();
        let b = predict_with(&loaded, &pages, LinkSource::AlwaysPredict).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.labels, y.labels);
            assert_eq!(x.confidence, y.confidence);
            assert_eq!(x.parents, y.parents);
        }
    }

    #[test]
    fn training_is_deterministic_on_disk() {
        let config = tiny_config(21);
        let pages = mixed_corpus(4, 5);
        let d1 = tempfile::tempdir().unwrap();
        let d2 = tempfile::tempdir().unwrap();
        save_models(&run_training(&pages, &config).unwrap(), d1.path()).unwrap();
        save_models(&run_training(&pages, &config).unwrap(), d2.path()).unwrap();
        for stem in ["den1", "den2", "appr", "syn1", "syn2", "semc", "fusion", "relations"] {
            let a = std::fs::read(ckpt_path(d1.path(), stem)).unwrap();
            let b = std::fs::read(ckpt_path(d2.path(), stem)).unwrap();
            assert!(a == b, "checkpoint {stem} differs between identical runs");
        }
    }

    #[test]
    fn missing_directory_reports_first_checkpoint() {
        let dir = tempfile::tempdir().unwrap();
        let err = load_models(dir.path()).unwrap_err();
        assert_eq!(err.to_string(), "missing checkpoint: den1");
    }

    #[test]
    fn predicting_without_links_or_model_fails() {
        let config = tiny_config(31);
        let mut pages = mixed_corpus(4, 7);
        for page in &mut pages {
            for seg in &mut page.segments {
                seg.parent_id = None;
            }
        }
        let models = run_training(&pages, &config).unwrap();
        assert!(models.relations.is_none());
        let err = predict_with(&models, &pages, LinkSource::AlwaysPredict).unwrap_err();
        assert_eq!(err.to_string(), "missing checkpoint: relations");
    }
}
