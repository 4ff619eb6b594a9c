//! One function per subcommand, plus the manifest plumbing they share.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::Result;
use layoutgcn::checkpoint::Manifest;
use layoutgcn::corpus::{
    ingest_funsd, read_canonical, validate_pages, write_canonical, Featurizer, LabelSet, Page,
    APPEARANCE_DIM, SEMANTIC_DIM,
};
use layoutgcn::encoding::{SymbolTable, ENCODING_DIM};
use layoutgcn::eval::{
    ablate_aspects, compare_pooling, default_ablation_subsets, render_table, score,
};
use layoutgcn::fusion::{train_classifier, Aspect, AspectHiddens, FusionClassifier};
use layoutgcn::graphs::{
    build_appearance_graph, build_density_graphs, build_semantic_graph, normalize_adjacency,
    relation_adjacency, AspectGraph, GraphExport, GraphKind,
};
use layoutgcn::pipeline::{
    extract_pages, load_models, load_pretrained, load_relations_checkpoint, predict_with,
    prepare, pretrain_one, relation_norms, resolve_parent_maps, save_fusion_checkpoint,
    save_gcn_checkpoint, save_relations_checkpoint, save_symbols, train_relation_model,
    LinkSource, PagePrediction, PipelineConfig, TrainedModels,
};
use layoutgcn::render::render_page_svg;
use ndarray::Array2;

use crate::{config, AspectArg, Command, ConfigArgs, IngestFormat, LinksArg, SynthKind, UsageError};

pub fn run(cmd: Command) -> Result<()> {
    match cmd {
        Command::Ingest {
            format,
            input,
            out,
            split,
        } => ingest(format, &input, &out, split),
        Command::GenSynth {
            config,
            kind,
            pages,
            out,
        } => gen_synth(&config, kind, pages, &out),
        Command::BuildGraphs { config, input, out } => build_graphs(&config, &input, &out),
        Command::TrainRelations {
            config,
            input,
            model,
        } => train_relations_cmd(&config, &input, &model),
        Command::Pretrain {
            config,
            input,
            aspect,
            model_dir,
        } => pretrain(&config, &input, aspect, &model_dir),
        Command::Train {
            config,
            input,
            model_dir,
        } => train(&config, &input, &model_dir),
        Command::Predict {
            input,
            model_dir,
            out,
            links,
        } => predict(&input, &model_dir, &out, links),
        Command::Eval {
            pred,
            gold,
            json,
            out,
        } => eval(&pred, &gold, json, out.as_deref()),
        Command::Ablate {
            input,
            model_dir,
            aspects,
            eval,
            json,
            out,
        } => ablate(&input, &model_dir, aspects.as_deref(), eval.as_deref(), json, out.as_deref()),
        Command::ComparePooling {
            input,
            model_dir,
            eval,
            json,
            out,
        } => compare_pooling_cmd(&input, &model_dir, eval.as_deref(), json, out.as_deref()),
        Command::Render { input, pred, out } => render(&input, pred.as_deref(), &out),
    }
}

/// `X.manifest.json` next to a produced file.
fn sidecar_manifest(out: &Path) -> PathBuf {
    let name = out
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "out".to_string());
    out.with_file_name(format!("{name}.manifest.json"))
}

fn manifest_for(
    command: &str,
    config: serde_json::Value,
    seed: Option<u64>,
    inputs: &[(&str, &Path)],
) -> Manifest {
    let mut m = Manifest::new(command, config);
    if let Some(seed) = seed {
        m.seeds.insert("seed".to_string(), seed);
    }
    for (name, path) in inputs {
        m.inputs.insert(name.to_string(), path.display().to_string());
    }
    m
}

fn finish_manifest(mut m: Manifest, outputs: &[&Path], at: &Path) -> Result<()> {
    for out in outputs {
        m.record_checkpoint(out)?;
    }
    m.save(at)?;
    Ok(())
}

fn write_lines(path: &Path, lines: &[String]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| layoutgcn::Error::io(dir, e))?;
    }
    let mut body = lines.join("\n");
    if !body.is_empty() {
        body.push('\n');
    }
    std::fs::write(path, body).map_err(|e| layoutgcn::Error::io(path, e))?;
    Ok(())
}

fn read_predictions(path: &Path) -> Result<Vec<PagePrediction>> {
    let body = std::fs::read_to_string(path).map_err(|e| layoutgcn::Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in body.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let pred: PagePrediction = serde_json::from_str(line).map_err(|e| {
            layoutgcn::Error::Parse {
                line: i + 1,
                msg: format!("{} is not a prediction record: {e}", path.display()),
            }
        })?;
        out.push(pred);
    }
    Ok(out)
}

fn ingest(format: IngestFormat, input: &Path, out: &Path, split: crate::SplitArg) -> Result<()> {
    let pages = match format {
        IngestFormat::Canonical => read_canonical(input)?,
        IngestFormat::Funsd => ingest_funsd(input, split.into())?,
    };
    validate_pages(&pages)?;
    write_canonical(out, &pages)?;
    let m = manifest_for(
        "ingest",
        serde_json::json!({
            "format": format!("{format:?}").to_lowercase(),
            "split": format!("{split:?}").to_lowercase(),
        }),
        None,
        &[("in", input)],
    );
    finish_manifest(m, &[out], &sidecar_manifest(out))?;
    println!("wrote {} pages to {}", pages.len(), out.display());
    Ok(())
}

fn gen_synth(config_args: &ConfigArgs, kind: SynthKind, pages: usize, out: &Path) -> Result<()> {
    let config = config::resolve(config_args)?;
    let seed = config.seed;
    let manifest_cfg = serde_json::json!({ "kind": format!("{kind:?}"), "pages": pages });
    match kind {
        SynthKind::FunsdFixture => {
            layoutgcn::synth::write_funsd_fixture(out, seed)?;
            let m = manifest_for("gen-synth", manifest_cfg, Some(seed), &[]);
            finish_manifest(m, &[], &out.join("gen-synth.manifest.json"))?;
            println!("wrote funsd fixture to {}", out.display());
        }
        _ => {
            let corpus = match kind {
                // Feature seed = master seed, so training with the same seed
                // sees the intended feature clusters.
                SynthKind::Mixed => layoutgcn::synth::mixed_corpus(pages, seed),
                SynthKind::Stacked => layoutgcn::synth::stacked_corpus(pages, seed),
                SynthKind::PoolingTie => layoutgcn::synth::pooling_tie_corpus(pages, seed),
                SynthKind::FunsdFixture => unreachable!(),
            };
            write_canonical(out, &corpus)?;
            let m = manifest_for("gen-synth", manifest_cfg, Some(seed), &[]);
            finish_manifest(m, &[out], &sidecar_manifest(out))?;
            println!("wrote {} pages to {}", corpus.len(), out.display());
        }
    }
    Ok(())
}

fn build_graphs(config_args: &ConfigArgs, input: &Path, out: &Path) -> Result<()> {
    let config = config::resolve(config_args)?;
    let pages = read_canonical(input)?;
    validate_pages(&pages)?;
    let featurizer = Featurizer::new(config.seed, config.fallback_features);
    let mut lines = Vec::new();
    let mut exported = 0usize;
    for original in &pages {
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
        let n = page.segments.len();
        let parents = if page.has_parent_links() {
            page.parent_indices()
        } else {
            log::warn!(
                "page {} has no parent links; its relation graphs are edgeless",
                page.page_id
            );
            vec![None; n]
        };
        let (den1, den2) = build_density_graphs(page)?;
        let appr = build_appearance_graph(page, &featurizer)?;
        let semc = build_semantic_graph(page, &parents, &featurizer)?;
        let rel_a = relation_adjacency(n, &parents)?;
        let rel_norm = normalize_adjacency(&rel_a)?;
        // The syntactic kinds share the relation adjacency; their features
        // are produced downstream by the sequence encoder, so the export
        // carries structure and width only.
        let syn = |kind: GraphKind| AspectGraph {
            kind,
            adjacency: rel_a.clone(),
            norm_adjacency: rel_norm.clone(),
            features: Array2::zeros((n, ENCODING_DIM)),
        };
        for g in [
            &den1,
            &den2,
            &appr,
            &syn(GraphKind::Syn1),
            &syn(GraphKind::Syn2),
            &semc,
        ] {
            let record = GraphExport::from_graph(&page.page_id, g, None);
            lines.push(serde_json::to_string(&record).map_err(|e| {
                layoutgcn::Error::Data(format!("graph export serialization failed: {e}"))
            })?);
        }
        exported += 1;
    }
    write_lines(out, &lines)?;
    let m = manifest_for("build-graphs", config.to_value(), Some(config.seed), &[("in", input)]);
    finish_manifest(m, &[out], &sidecar_manifest(out))?;
    println!("wrote 6 graphs for each of {exported} pages to {}", out.display());
    Ok(())
}

/// Shared first step of the training commands.
fn load_and_prepare(
    config: &PipelineConfig,
    input: &Path,
) -> Result<(Vec<Page>, LabelSet, SymbolTable, Vec<layoutgcn::pipeline::PreparedPage>)> {
    let pages = read_canonical(input)?;
    let labels = LabelSet::from_pages(&pages)?;
    let featurizer = Featurizer::new(config.seed, config.fallback_features);
    let symbols = SymbolTable::default();
    let prepared = prepare(&pages, config, &featurizer, &symbols, &labels)?;
    if prepared.is_empty() {
        return Err(layoutgcn::Error::Data("no non-empty pages to train on".into()).into());
    }
    Ok((pages, labels, symbols, prepared))
}

fn train_relations_cmd(config_args: &ConfigArgs, input: &Path, model: &Path) -> Result<()> {
    let config = config::resolve(config_args)?;
    let (_, _, _, prepared) = load_and_prepare(&config, input)?;
    let Some((rel, history)) = train_relation_model(&prepared, &config)? else {
        return Err(layoutgcn::Error::Data(
            "no page carries parent links; nothing to train the relation model on".into(),
        )
        .into());
    };
    if let Some(dir) = model.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| layoutgcn::Error::io(dir, e))?;
    }
    save_relations_checkpoint(model, &rel, &config, &history)?;
    let m = manifest_for("train-relations", config.to_value(), Some(config.seed), &[("in", input)]);
    finish_manifest(m, &[model], &sidecar_manifest(model))?;
    println!(
        "trained relation model on {} epochs, final loss {:.6}; wrote {}",
        history.len(),
        history.last().copied().unwrap_or(f64::NAN),
        model.display()
    );
    Ok(())
}

fn pretrain(config_args: &ConfigArgs, input: &Path, aspect: AspectArg, model_dir: &Path) -> Result<()> {
    let config = config::resolve(config_args)?;
    let (_, labels, symbols, prepared) = load_and_prepare(&config, input)?;
    std::fs::create_dir_all(model_dir).map_err(|e| layoutgcn::Error::io(model_dir, e))?;

    let rel_path = model_dir.join("relations.json");
    let relations = if rel_path.exists() {
        let (model, _) = load_relations_checkpoint(&rel_path)?;
        Some(model)
    } else {
        None
    };
    let parent_maps = resolve_parent_maps(&prepared, relations.as_ref())?;
    let rel_norms = relation_norms(&prepared, &parent_maps)?;

    let mut outputs = Vec::new();
    for kind in aspect.kinds() {
        let outcome = pretrain_one(kind, &prepared, &rel_norms, &config, labels.len())?;
        println!(
            "{}: {} epochs, final loss {:.6}",
            kind.name(),
            outcome.history.len(),
            outcome.history.last().copied().unwrap_or(f64::NAN)
        );
        outputs.push(save_gcn_checkpoint(model_dir, &outcome, &config, &labels)?);
    }
    outputs.push(save_symbols(model_dir, &symbols)?);

    let m = manifest_for("pretrain", config.to_value(), Some(config.seed), &[("in", input)]);
    let outs: Vec<&Path> = outputs.iter().map(|p| p.as_path()).collect();
    finish_manifest(
        m,
        &outs,
        &model_dir.join(format!("pretrain-{}.manifest.json", aspect.name())),
    )?;
    Ok(())
}

fn train(config_args: &ConfigArgs, input: &Path, model_dir: &Path) -> Result<()> {
    let requested = config::resolve(config_args)?;
    let mut models = load_pretrained(model_dir)?;

    // Knobs that shaped the pretrained checkpoints must not change now.
    let stored = models.config.clone();
    let frozen: [(&str, bool); 4] = [
        ("seed", requested.seed == stored.seed),
        ("hidden_dim", requested.hidden_dim == stored.hidden_dim),
        (
            "fallback_features",
            requested.fallback_features == stored.fallback_features,
        ),
        (
            "column_override",
            requested.column_override == stored.column_override,
        ),
    ];
    if let Some((key, _)) = frozen.iter().find(|(_, same)| !same) {
        return Err(layoutgcn::Error::Data(format!(
            "config key {key} disagrees with the pretrained checkpoints in {}",
            model_dir.display()
        ))
        .into());
    }
    let mut merged = stored;
    merged.mlp_hidden = requested.mlp_hidden;
    merged.classifier_epochs = requested.classifier_epochs;
    merged.classifier_lr = requested.classifier_lr;
    merged.pooling = requested.pooling;
    merged.aspects = requested.aspects.clone();
    models.config = merged.clone();
    models.fusion = FusionClassifier::new(
        &merged.aspects,
        merged.pooling,
        merged.hidden_dim,
        SEMANTIC_DIM,
        APPEARANCE_DIM,
        merged.mlp_hidden,
        models.labels.len(),
        merged.seed,
    )?;

    let pages = read_canonical(input)?;
    let corpus_labels = LabelSet::from_pages(&pages)?;
    if corpus_labels != models.labels {
        return Err(layoutgcn::Error::Data(format!(
            "the corpus labels {:?} do not match the pretrained checkpoints' labels {:?}",
            corpus_labels.names(),
            models.labels.names()
        ))
        .into());
    }

    let hiddens: Vec<AspectHiddens> = extract_pages(&models, &pages, LinkSource::GoldOrPredict)?
        .into_iter()
        .map(|p| p.hiddens)
        .collect();
    let history = train_classifier(
        &mut models.fusion,
        &hiddens,
        merged.classifier_epochs,
        merged.classifier_lr,
        merged.seed,
    )?;
    let path = save_fusion_checkpoint(model_dir, &models.fusion, &merged, &models.labels, &history)?;

    let report = layoutgcn::eval::evaluate_classifier(&models.fusion, &hiddens, &models.labels)?;
    let m = manifest_for("train", merged.to_value(), Some(merged.seed), &[("in", input)]);
    finish_manifest(m, &[path.as_path()], &model_dir.join("train.manifest.json"))?;
    println!(
        "trained classifier: final loss {:.6}, training accuracy {:.4}; wrote {}",
        history.last().copied().unwrap_or(f64::NAN),
        report.accuracy,
        path.display()
    );
    Ok(())
}

fn predict(input: &Path, model_dir: &Path, out: &Path, links: LinksArg) -> Result<()> {
    let models = load_models(model_dir)?;
    let pages = read_canonical(input)?;
    let preds = predict_with(&models, &pages, links.into())?;
    let mut lines = Vec::with_capacity(preds.len());
    for pred in &preds {
        lines.push(serde_json::to_string(pred).map_err(|e| {
            layoutgcn::Error::Data(format!("prediction serialization failed: {e}"))
        })?);
    }
    write_lines(out, &lines)?;
    let mut m = manifest_for(
        "predict",
        models.config.to_value(),
        Some(models.config.seed),
        &[("in", input)],
    );
    m.inputs.insert("model-dir".to_string(), model_dir.display().to_string());
    finish_manifest(m, &[out], &sidecar_manifest(out))?;
    let predicted = preds.iter().filter(|p| p.parents_predicted).count();
    println!(
        "wrote predictions for {} pages ({predicted} with predicted links) to {}",
        preds.len(),
        out.display()
    );
    Ok(())
}

/// `page_id/seg_id -> label` from either a canonical page file or a
/// predictions file, so gold corpora can stand in on both sides of `eval`.
fn read_labels_any(path: &Path) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    match read_canonical(path) {
        Ok(pages) => {
            for page in &pages {
                for seg in &page.segments {
                    out.insert(format!("{}/{}", page.page_id, seg.id), seg.label.clone());
                }
            }
        }
        Err(_) => {
            for pred in read_predictions(path)? {
                for (seg_id, label) in pred.seg_ids.iter().zip(&pred.labels) {
                    out.insert(format!("{}/{}", pred.page_id, seg_id), label.clone());
                }
            }
        }
    }
    Ok(out)
}

fn write_json_report<T: serde::Serialize>(report: &T, out: Option<&Path>) -> Result<Option<String>> {
    let body = serde_json::to_string_pretty(report)
        .map_err(|e| layoutgcn::Error::Data(format!("report serialization failed: {e}")))?;
    if let Some(path) = out {
        write_lines(path, &[body.clone()])?;
    }
    Ok(Some(body))
}

fn eval(pred: &Path, gold: &Path, json: bool, out: Option<&Path>) -> Result<()> {
    let gold_pages = read_canonical(gold)?;
    let labels = LabelSet::from_pages(&gold_pages)?;
    let mut gold_map = BTreeMap::new();
    for page in &gold_pages {
        for seg in &page.segments {
            gold_map.insert(format!("{}/{}", page.page_id, seg.id), seg.label.clone());
        }
    }
    let pred_map = read_labels_any(pred)?;
    let report = score(&gold_map, &pred_map, &labels)?;
    let body = write_json_report(&report, out)?.expect("serialized");
    if json {
        println!("{body}");
    } else {
        print!("{}", render_table(&report));
    }
    if let Some(path) = out {
        let m = manifest_for(
            "eval",
            serde_json::json!({}),
            None,
            &[("pred", pred), ("gold", gold)],
        );
        finish_manifest(m, &[path], &sidecar_manifest(path))?;
    }
    Ok(())
}

fn parse_aspect_list(raw: &str) -> Result<Vec<Aspect>> {
    raw.split(',')
        .map(|token| {
            let token = token.trim();
            match token {
                "syn" => Ok(Aspect::Syntactic),
                "sem" => Ok(Aspect::Semantic),
                "dens" => Ok(Aspect::Density),
                "appr" => Ok(Aspect::Appearance),
                _ => Aspect::from_name(token).ok_or_else(|| {
                    UsageError(format!(
                        "unknown aspect {token:?}; use syn, sem, dens, appr or the full names"
                    ))
                    .into()
                }),
            }
        })
        .collect()
}

/// Hiddens for the harness commands: training pages plus optional held-out
/// pages (falling back to the training pages).
fn harness_hiddens(
    models: &TrainedModels,
    input: &Path,
    eval: Option<&Path>,
) -> Result<(Vec<AspectHiddens>, Vec<AspectHiddens>)> {
    let take = |path: &Path| -> Result<Vec<AspectHiddens>> {
        let pages = read_canonical(path)?;
        Ok(extract_pages(models, &pages, LinkSource::GoldOrPredict)?
            .into_iter()
            .map(|p| p.hiddens)
            .collect())
    };
    let train_h = take(input)?;
    let eval_h = match eval {
        Some(path) => take(path)?,
        None => train_h.clone(),
    };
    Ok((train_h, eval_h))
}

fn ablate(
    input: &Path,
    model_dir: &Path,
    aspects: Option<&str>,
    eval: Option<&Path>,
    json: bool,
    out: Option<&Path>,
) -> Result<()> {
    let subsets = match aspects {
        Some(raw) => vec![parse_aspect_list(raw)?],
        None => default_ablation_subsets(),
    };
    let models = load_models(model_dir)?;
    let (train_h, eval_h) = harness_hiddens(&models, input, eval)?;
    let runs = ablate_aspects(&models.classifier_spec(), &subsets, &train_h, &eval_h, &models.labels)?;
    write_json_report(&runs, out)?;
    if json {
        println!(
            "{}",
            serde_json::to_string_pretty(&runs)
                .map_err(|e| layoutgcn::Error::Data(format!("report serialization failed: {e}")))?
        );
    } else {
        for run in &runs {
            let name: Vec<&str> = run.aspects.iter().map(|a| a.name()).collect();
            println!(
                "{:<45} train-acc {:.4}  eval micro-F1 {:.4}  macro-F1 {:.4}",
                name.join("+"),
                run.train_report.accuracy,
                run.eval_report.micro_f1,
                run.eval_report.macro_f1
            );
        }
    }
    if let Some(path) = out {
        let m = manifest_for(
            "ablate",
            models.config.to_value(),
            Some(models.config.seed),
            &[("in", input)],
        );
        finish_manifest(m, &[path], &sidecar_manifest(path))?;
    }
    Ok(())
}

fn compare_pooling_cmd(
    input: &Path,
    model_dir: &Path,
    eval: Option<&Path>,
    json: bool,
    out: Option<&Path>,
) -> Result<()> {
    let models = load_models(model_dir)?;
    let (train_h, eval_h) = harness_hiddens(&models, input, eval)?;
    let runs = compare_pooling(
        &models.classifier_spec(),
        &models.fusion.aspects,
        &train_h,
        &eval_h,
        &models.labels,
    )?;
    write_json_report(&runs, out)?;
    if json {
        println!(
            "{}",
            serde_json::to_string_pretty(&runs)
                .map_err(|e| layoutgcn::Error::Data(format!("report serialization failed: {e}")))?
        );
    } else {
        for run in &runs {
            println!(
                "{:<4} train-acc {:.4}  eval micro-F1 {:.4}  macro-F1 {:.4}",
                run.pooling.name(),
                run.train_report.accuracy,
                run.eval_report.micro_f1,
                run.eval_report.macro_f1
            );
        }
    }
    if let Some(path) = out {
        let m = manifest_for(
            "compare-pooling",
            models.config.to_value(),
            Some(models.config.seed),
            &[("in", input)],
        );
        finish_manifest(m, &[path], &sidecar_manifest(path))?;
    }
    Ok(())
}

fn render(input: &Path, pred: Option<&Path>, out: &Path) -> Result<()> {
    let mut pages = read_canonical(input)?;
    if let Some(pred_path) = pred {
        let preds = read_predictions(pred_path)?;
        let by_page: BTreeMap<&str, &PagePrediction> =
            preds.iter().map(|p| (p.page_id.as_str(), p)).collect();
        for page in &mut pages {
            let Some(pred) = by_page.get(page.page_id.as_str()) else {
                return Err(layoutgcn::Error::Data(format!(
                    "no prediction for page {}",
                    page.page_id
                ))
                .into());
            };
            let labels: BTreeMap<&str, &str> = pred
                .seg_ids
                .iter()
                .map(String::as_str)
                .zip(pred.labels.iter().map(String::as_str))
                .collect();
            for seg in &mut page.segments {
                let Some(&label) = labels.get(seg.id.as_str()) else {
                    return Err(layoutgcn::Error::Data(format!(
                        "no prediction for segment {} on page {}",
                        seg.id, page.page_id
                    ))
                    .into());
                };
                seg.label = label.to_string();
            }
        }
    }
    let labels = LabelSet::from_pages(&pages)?;
    std::fs::create_dir_all(out).map_err(|e| layoutgcn::Error::io(out, e))?;
    let mut written = Vec::new();
    for page in &pages {
        let file = out.join(format!("{}.svg", page.page_id.replace(['/', '\\'], "_")));
        let svg = render_page_svg(page, &labels);
        let mut f = std::fs::File::create(&file).map_err(|e| layoutgcn::Error::io(&file, e))?;
        f.write_all(svg.as_bytes()).map_err(|e| layoutgcn::Error::io(&file, e))?;
        written.push(file);
    }
    let mut m = manifest_for("render", serde_json::json!({}), None, &[("in", input)]);
    if let Some(p) = pred {
        m.inputs.insert("pred".to_string(), p.display().to_string());
    }
    let outs: Vec<&Path> = written.iter().map(|p| p.as_path()).collect();
    finish_manifest(m, &outs, &out.join("render.manifest.json"))?;
    println!("wrote {} SVGs to {}", written.len(), out.display());
    Ok(())
}
