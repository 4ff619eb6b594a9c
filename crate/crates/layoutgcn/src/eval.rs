//! Classification metrics and the ablation / pooling-comparison experiment
//! drivers.
//!
//! Reports carry per-class precision, recall, F1, and support plus micro,
//! macro, and weighted aggregates and a gold-by-predicted confusion matrix.
//! Any zero denominator yields 0.0 rather than NaN. With exactly one
//! prediction per segment, micro-F1 equals plain accuracy; both fields are
//! kept because reports name them in different contexts.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::corpus::LabelSet;
use crate::fusion::{
    normalize_aspects, train_classifier, Aspect, AspectHiddens, FusionClassifier, Pooling,
};
use crate::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub label: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalReport {
    pub classes: Vec<ClassMetrics>,
    pub micro_f1: f64,
    pub macro_f1: f64,
    pub weighted_f1: f64,
    pub accuracy: f64,
    pub total: usize,
    /// confusion[gold][predicted]
    pub confusion: Vec<Vec<usize>>,
}

fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// Build a report from aligned gold/predicted class indices.
pub fn report_from_indices(gold: &[usize], pred: &[usize], labels: &LabelSet) -> Result<EvalReport> {
    if gold.len() != pred.len() {
        return Err(Error::Contract(format!(
            "gold and predicted lengths differ: {} vs {}",
            gold.len(),
            pred.len()
        )));
    }
    let c = labels.len();
    for &v in gold.iter().chain(pred.iter()) {
        if v >= c {
            return Err(Error::Contract(format!(
                "class index {v} out of range for {c} labels"
            )));
        }
    }
    let mut confusion = vec![vec![0usize; c]; c];
    for (&g, &p) in gold.iter().zip(pred.iter()) {
        confusion[g][p] += 1;
    }
    let mut classes = Vec::with_capacity(c);
    let mut tp_all = 0usize;
    let mut fp_all = 0usize;
    let mut fn_all = 0usize;
    for k in 0..c {
        let tp = confusion[k][k];
        let fp: usize = (0..c).filter(|&g| g != k).map(|g| confusion[g][k]).sum();
        let fn_: usize = (0..c).filter(|&p| p != k).map(|p| confusion[k][p]).sum();
        let support: usize = confusion[k].iter().sum();
        let precision = ratio(tp as f64, (tp + fp) as f64);
        let recall = ratio(tp as f64, (tp + fn_) as f64);
        let f1 = ratio(2.0 * precision * recall, precision + recall);
        classes.push(ClassMetrics {
            label: labels.names()[k].clone(),
            precision,
            recall,
            f1,
            support,
        });
        tp_all += tp;
        fp_all += fp;
        fn_all += fn_;
    }
    let total = gold.len();
    let micro_p = ratio(tp_all as f64, (tp_all + fp_all) as f64);
    let micro_r = ratio(tp_all as f64, (tp_all + fn_all) as f64);
    let micro_f1 = ratio(2.0 * micro_p * micro_r, micro_p + micro_r);
    let macro_f1 = ratio(classes.iter().map(|m| m.f1).sum::<f64>(), c as f64);
    let weighted_f1 = ratio(
        classes.iter().map(|m| m.f1 * m.support as f64).sum::<f64>(),
        total as f64,
    );
    let accuracy = ratio(tp_all as f64, total as f64);
    Ok(EvalReport {
        classes,
        micro_f1,
        macro_f1,
        weighted_f1,
        accuracy,
        total,
        confusion,
    })
}

/// Compare predicted labels against gold by segment id. The two id sets must
/// match exactly; mismatches are reported with the offending ids.
pub fn score(
    gold: &BTreeMap<String, String>,
    pred: &BTreeMap<String, String>,
    labels: &LabelSet,
) -> Result<EvalReport> {
    let missing: Vec<&String> = gold.keys().filter(|k| !pred.contains_key(*k)).collect();
    let extra: Vec<&String> = pred.keys().filter(|k| !gold.contains_key(*k)).collect();
    if !missing.is_empty() || !extra.is_empty() {
        let show = |v: &[&String]| {
            let mut s: Vec<String> = v.iter().take(5).map(|x| x.to_string()).collect();
            if v.len() > 5 {
                s.push(format!("... {} more", v.len() - 5));
            }
            s.join(", ")
        };
        return Err(Error::Data(format!(
            "prediction ids do not match gold ids; missing from predictions: [{}]; unexpected: [{}]",
            show(&missing),
            show(&extra)
        )));
    }
    let mut gold_idx = Vec::with_capacity(gold.len());
    let mut pred_idx = Vec::with_capacity(gold.len());
    for (id, g_label) in gold {
        let p_label = &pred[id];
        let g = labels.index_of(g_label).ok_or_else(|| {
            Error::Data(format!("gold label {g_label:?} for {id:?} is not in the label set"))
        })?;
        let p = labels.index_of(p_label).ok_or_else(|| {
            Error::Data(format!(
                "predicted label {p_label:?} for {id:?} is not in the label set"
            ))
        })?;
        gold_idx.push(g);
        pred_idx.push(p);
    }
    report_from_indices(&gold_idx, &pred_idx, labels)
}

/// Share of the most frequent gold class — the score of a constant-majority
/// predictor. Returns (label, share).
pub fn majority_baseline(gold: &[usize], labels: &LabelSet) -> Result<(String, f64)> {
    if gold.is_empty() {
        return Err(Error::Data("cannot take a baseline over zero segments".into()));
    }
    let mut counts = vec![0usize; labels.len()];
    for &g in gold {
        if g >= labels.len() {
            return Err(Error::Contract(format!("class index {g} out of range")));
        }
        counts[g] += 1;
    }
    let best = (0..counts.len()).max_by_key(|&k| (counts[k], usize::MAX - k)).unwrap();
    Ok((
        labels.names()[best].clone(),
        counts[best] as f64 / gold.len() as f64,
    ))
}

/// Fixed-width text rendering of a report.
pub fn render_table(report: &EvalReport) -> String {
    let mut width = "label".len();
    for m in &report.classes {
        width = width.max(m.label.len());
    }
    let mut out = String::new();
    out.push_str(&format!(
        "{:<w$}  precision  recall  f1      support\n",
        "label",
        w = width
    ));
    for m in &report.classes {
        out.push_str(&format!(
            "{:<w$}  {:.4}     {:.4}  {:.4}  {}\n",
            m.label,
            m.precision,
            m.recall,
            m.f1,
            m.support,
            w = width
        ));
    }
    out.push_str(&format!(
        "micro-f1 {:.4}  macro-f1 {:.4}  weighted-f1 {:.4}  accuracy {:.4}  total {}\n",
        report.micro_f1, report.macro_f1, report.weighted_f1, report.accuracy, report.total
    ));
    out
}

/// Everything needed to train one fused classifier in an experiment.
#[derive(Debug, Clone)]
pub struct ClassifierSpec {
    pub pooling: Pooling,
    pub d: usize,
    pub semantic_dim: usize,
    pub appearance_dim: usize,
    pub mlp_hidden: usize,
    pub classes: usize,
    pub epochs: usize,
    pub lr: f64,
    pub seed: u64,
}

impl ClassifierSpec {
    fn train(
        &self,
        aspects: &[Aspect],
        pooling: Pooling,
        train_pages: &[AspectHiddens],
    ) -> Result<FusionClassifier> {
        let mut model = FusionClassifier::new(
            aspects,
            pooling,
            self.d,
            self.semantic_dim,
            self.appearance_dim,
            self.mlp_hidden,
            self.classes,
            self.seed,
        )?;
        train_classifier(&mut model, train_pages, self.epochs, self.lr, self.seed)?;
        Ok(model)
    }
}

/// Evaluate a trained classifier against the gold labels stored on the pages.
pub fn evaluate_classifier(
    model: &FusionClassifier,
    pages: &[AspectHiddens],
    labels: &LabelSet,
) -> Result<EvalReport> {
    let mut gold = Vec::new();
    let mut pred = Vec::new();
    for page in pages {
        if page.labels.len() != page.node_count() {
            return Err(Error::Contract(format!(
                "page {} lacks gold labels for evaluation",
                page.page_id
            )));
        }
        let (_, preds) = model.predict(page)?;
        gold.extend_from_slice(&page.labels);
        pred.extend(preds);
    }
    report_from_indices(&gold, &pred, labels)
}

#[derive(Debug, Clone, Serialize)]
pub struct AblationResult {
    pub aspects: Vec<Aspect>,
    pub train_report: EvalReport,
    pub eval_report: EvalReport,
}

/// Retrain the fused classifier on each aspect subset (by default: every
/// single aspect plus the full set) over the same frozen hiddens and seed.
pub fn ablate_aspects(
    spec: &ClassifierSpec,
    subsets: &[Vec<Aspect>],
    train_pages: &[AspectHiddens],
    eval_pages: &[AspectHiddens],
    labels: &LabelSet,
) -> Result<Vec<AblationResult>> {
    let mut out = Vec::with_capacity(subsets.len());
    for subset in subsets {
        let aspects = normalize_aspects(subset)?;
        let model = spec.train(&aspects, spec.pooling, train_pages)?;
        out.push(AblationResult {
            aspects,
            train_report: evaluate_classifier(&model, train_pages, labels)?,
            eval_report: evaluate_classifier(&model, eval_pages, labels)?,
        });
    }
    Ok(out)
}

/// The default ablation grid: each aspect alone, then all four together.
pub fn default_ablation_subsets() -> Vec<Vec<Aspect>> {
    let mut subsets: Vec<Vec<Aspect>> = Aspect::ALL.iter().map(|&a| vec![a]).collect();
    subsets.push(Aspect::ALL.to_vec());
    subsets
}

#[derive(Debug, Clone, Serialize)]
pub struct PoolingResult {
    pub pooling: Pooling,
    pub train_report: EvalReport,
    pub eval_report: EvalReport,
}

/// Retrain the same classifier under each pooling mode.
pub fn compare_pooling(
    spec: &ClassifierSpec,
    aspects: &[Aspect],
    train_pages: &[AspectHiddens],
    eval_pages: &[AspectHiddens],
    labels: &LabelSet,
) -> Result<Vec<PoolingResult>> {
    let mut out = Vec::with_capacity(Pooling::ALL.len());
    for pooling in Pooling::ALL {
        let model = spec.train(aspects, pooling, train_pages)?;
        out.push(PoolingResult {
            pooling,
            train_report: evaluate_classifier(&model, train_pages, labels)?,
            eval_report: evaluate_classifier(&model, eval_pages, labels)?,
        });
    }
    Ok(out)
}
