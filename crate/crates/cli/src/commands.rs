//! The pipeline stages. Each reads its inputs from the run directory (or the
//! data directory for `sample`), writes its artifacts atomically and leaves a
//! manifest under `manifests/`.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use hsc_core::coding::encode;
use hsc_core::mesh::{parse_surface, write_surface};
use hsc_core::patches::{read_patch_dump, write_patch_dump};
use hsc_core::pipeline::{adaboost_fit, auc, complement};
use hsc_core::rng::{stage_seed, Stage};
use hsc_core::synth::{read_labels_csv, write_labels_csv};
use hsc_core::{
    evaluate, fpsbs_sample, generate, kfold_split, max_pool, nested_split, smooth_vertex_field,
    train, Dictionary, EvalReport, SparseCode, StumpEnsemble, SubjectRecord, SynthConfig,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::artifacts::{create_dir, list_files, read_text, Layout, Manifest, ManifestBuilder};
use crate::config::{Protocol, RunConfig};
use crate::error::CliError;

/// Writes `subjects/<id>.hsm` and `subjects/labels.csv`.
pub fn cmd_synth(config: &RunConfig, layout: &Layout) -> Result<Manifest, CliError> {
    let seed = stage_seed(config.seed, Stage::Synth);
    let mut manifest = ManifestBuilder::new(layout, "synth", config, Some(seed));
    let subjects = generate(&SynthConfig { seed, ..config.synth.clone() })?;
    let dir = layout.subjects_dir();
    create_dir(&dir)?;
    let texts: Vec<String> = subjects.par_iter().map(|s| write_surface(&s.surface)).collect();
    for (s, text) in subjects.iter().zip(&texts) {
        manifest.write_output(&dir.join(format!("{}.hsm", s.id)), text.as_bytes())?;
    }
    let labels = write_labels_csv(subjects.iter().map(|s| (s.id.as_str(), s.label)));
    manifest.write_output(&dir.join("labels.csv"), labels.as_bytes())?;
    manifest.note("subjects", subjects.len());
    manifest.finish()
}

fn read_labels(manifest: &mut ManifestBuilder, path: &Path) -> Result<Vec<(String, bool)>, CliError> {
    let labels = read_labels_csv(&manifest.read_input(path)?).map_err(|e| CliError::from(e).in_file(path))?;
    if labels.is_empty() {
        return Err(CliError::Input(format!("{}: no subjects listed", path.display())));
    }
    Ok(labels)
}

/// Samples ring patches on every labeled surface and writes one patch dump
/// per subject.
pub fn cmd_sample(config: &RunConfig, layout: &Layout) -> Result<Manifest, CliError> {
    let seed = stage_seed(config.seed, Stage::Sample);
    let mut manifest = ManifestBuilder::new(layout, "sample", config, Some(seed));
    let data_dir = config.paths.data_dir.clone().unwrap_or_else(|| layout.subjects_dir());
    let labels = read_labels(&mut manifest, &data_dir.join("labels.csv"))?;
    let mut texts = Vec::with_capacity(labels.len());
    for (id, _) in &labels {
        let path = data_dir.join(format!("{id}.hsm"));
        texts.push((path.clone(), manifest.read_input(&path)?));
    }

    // Every subject uses the stage seed, so surfaces sharing a template
    // mesh get the same centers.
    let dumps: Vec<(String, bool)> = texts
        .par_iter()
        .map(|(path, text)| -> Result<(String, bool), CliError> {
            let in_file = |e: CliError| e.in_file(path);
            let mut surface = parse_surface(text).map_err(|e| in_file(e.into()))?;
            if config.smoothing.iterations > 0 {
                let field = smooth_vertex_field(
                    surface.adjacency(),
                    &surface.tbm_field(),
                    config.smoothing.iterations,
                    config.smoothing.step,
                )?;
                surface = surface.with_tbm(&field).map_err(|e| in_file(e.into()))?;
            }
            let sampling = fpsbs_sample(&surface, &config.sampling, seed).map_err(|e| in_file(e.into()))?;
            Ok((write_patch_dump(&sampling.patches), sampling.radii_non_increasing()))
        })
        .collect::<Result<_, _>>()?;

    let mut total = 0;
    for ((id, _), (dump, monotone)) in labels.iter().zip(&dumps) {
        if !monotone {
            log::warn!("{id}: farthest-point radii increased during sampling");
        }
        total += dump.lines().count() - 1;
        manifest.write_output(&layout.patch_file(id), dump.as_bytes())?;
    }
    let copy = write_labels_csv(labels.iter().map(|(id, y)| (id.as_str(), *y)));
    manifest.write_output(&layout.labels(), copy.as_bytes())?;
    manifest.note("subjects", labels.len());
    manifest.note("patches", total);
    manifest.finish()
}

fn read_patches(manifest: &mut ManifestBuilder, path: &Path) -> Result<Vec<Vec<f64>>, CliError> {
    let rows = read_patch_dump(&manifest.read_input(path)?).map_err(|e| CliError::from(e).in_file(path))?;
    if rows.is_empty() {
        return Err(CliError::Input(format!("{}: no patches", path.display())));
    }
    Ok(rows.into_iter().map(|r| r.features).collect())
}

/// Learns the dictionary from every patch dump in `patches/`. Labels are not
/// read: the dictionary is unsupervised and shared by all folds.
pub fn cmd_train(config: &RunConfig, layout: &Layout) -> Result<Manifest, CliError> {
    let seed = stage_seed(config.seed, Stage::Train);
    let mut manifest = ManifestBuilder::new(layout, "train", config, Some(seed));
    let dir = layout.patches_dir();
    let files = list_files(&dir, "csv")?;
    if files.is_empty() {
        return Err(CliError::Input(format!("{}: no patch files", dir.display())));
    }
    let mut samples = Vec::new();
    for path in &files {
        samples.extend(read_patches(&mut manifest, path)?);
    }
    let scc = hsc_core::SccConfig { seed, ..config.scc.clone() };
    let (dict, diag) = train(&samples, config.atoms, &scc)?;
    let violations = diag.violations(1e-12, 1e-10);
    if !violations.is_clean() {
        log::warn!("training diagnostics flagged violations: {violations:?}");
    }
    manifest.write_output(&layout.dictionary(), dict.to_json().as_bytes())?;
    manifest.write_output(&layout.convergence(), diag.to_csv().as_bytes())?;
    manifest.note("samples", samples.len());
    manifest.note("violations", serde_json::to_value(&violations).expect("serializes"));
    let epochs: Vec<[f64; 2]> = diag.epoch_summaries().iter().map(|e| [e.mean_before, e.mean_after]).collect();
    manifest.note("epoch_means", serde_json::to_value(epochs).expect("serializes"));
    manifest.finish()
}

/// Encodes every subject's patches with the trained dictionary and pools
/// them into one feature vector per subject.
pub fn cmd_features(config: &RunConfig, layout: &Layout) -> Result<Manifest, CliError> {
    let mut manifest = ManifestBuilder::new(layout, "features", config, None);
    let dict_path = layout.dictionary();
    let dict = Dictionary::from_json(&manifest.read_input(&dict_path)?).map_err(|e| CliError::from(e).in_file(&dict_path))?;
    let labels = read_labels(&mut manifest, &layout.labels())?;
    let mut patches = Vec::with_capacity(labels.len());
    for (id, _) in &labels {
        patches.push(read_patches(&mut manifest, &layout.patch_file(id))?);
    }
    let scc = hsc_core::SccConfig { lambda: dict.lambda(), ..config.scc.clone() };
    let records: Vec<SubjectRecord> = labels
        .par_iter()
        .zip(&patches)
        .map(|((id, label), xs)| -> Result<SubjectRecord, CliError> {
            let codes: Vec<SparseCode> = xs.iter().map(|x| encode(&dict, x, &scc)).collect::<Result<_, _>>()?;
            Ok(SubjectRecord {
                subject_id: id.clone(),
                pooled: max_pool(&codes, dict.atoms(), config.pooling)?,
                label: *label,
                group_tag: if *label { "case" } else { "control" }.into(),
            })
        })
        .collect::<Result<_, _>>()?;
    let text = serde_json::to_string(&records).expect("records serialize");
    manifest.write_output(&layout.features(), text.as_bytes())?;
    manifest.note("subjects", records.len());
    manifest.finish()
}

/// Output of `classify`, input of `report`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub name: String,
    pub protocol: Protocol,
    /// Pooled out-of-fold predictions (k-fold) or the test split (nested).
    pub overall: EvalReport,
    /// Per test fold under k-fold; empty under the nested protocol.
    pub folds: Vec<EvalReport>,
    pub rounds: usize,
}

fn load_records(manifest: &mut ManifestBuilder, path: &Path) -> Result<Vec<SubjectRecord>, CliError> {
    let records: Vec<SubjectRecord> = serde_json::from_str(&manifest.read_input(path)?)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    if records.is_empty() {
        return Err(CliError::Input(format!("{}: no subjects", path.display())));
    }
    Ok(records)
}

fn fit_on(records: &[SubjectRecord], idx: &[usize], rounds: usize) -> Result<StumpEnsemble, CliError> {
    let x: Vec<&[f64]> = idx.iter().map(|&i| records[i].pooled.as_slice()).collect();
    let y: Vec<bool> = idx.iter().map(|&i| records[i].label).collect();
    Ok(adaboost_fit(&x, &y, rounds)?)
}

/// Cross-validates boosted stumps on the pooled features.
pub fn cmd_classify(config: &RunConfig, layout: &Layout) -> Result<Manifest, CliError> {
    let seed = stage_seed(config.seed, Stage::Classify);
    let mut manifest = ManifestBuilder::new(layout, "classify", config, Some(seed));
    let records = load_records(&mut manifest, &layout.features())?;
    let labels: Vec<bool> = records.iter().map(|r| r.label).collect();
    let n = records.len();
    let mut predictions = String::from("subject_id,label,fold,score\n");
    let mut models = Vec::new();

    let evaluation = match config.protocol {
        Protocol::Kfold { k } => {
            let folds = kfold_split(&labels, k, seed)?;
            let mut scores = vec![0.0; n];
            let mut fold_of = vec![0; n];
            let mut fold_reports = Vec::with_capacity(k);
            for (f, test) in folds.iter().enumerate() {
                let model = fit_on(&records, &complement(n, test), config.classifier.rounds)?;
                for &i in test {
                    scores[i] = model.score(&records[i].pooled);
                    fold_of[i] = f;
                }
                let s: Vec<f64> = test.iter().map(|&i| scores[i]).collect();
                let y: Vec<bool> = test.iter().map(|&i| labels[i]).collect();
                fold_reports.push(evaluate(&s, &y)?);
                models.push(model);
            }
            for (i, r) in records.iter().enumerate() {
                let _ = writeln!(predictions, "{},{},{},{}", r.subject_id, u8::from(r.label), fold_of[i], scores[i]);
            }
            Evaluation {
                name: config.name.clone(),
                protocol: config.protocol.clone(),
                overall: evaluate(&scores, &labels)?,
                folds: fold_reports,
                rounds: config.classifier.rounds,
            }
        }
        Protocol::Nested { ratios } => {
            let split = nested_split(&labels, (ratios[0], ratios[1], ratios[2]), seed)?;
            let grid = if config.classifier.rounds_grid.is_empty() {
                vec![config.classifier.rounds]
            } else {
                config.classifier.rounds_grid.clone()
            };
            // Highest validation AUC wins; ties go to fewer rounds.
            let mut best: Option<(f64, usize, StumpEnsemble)> = None;
            for &rounds in &grid {
                let model = fit_on(&records, &split.train, rounds)?;
                let s: Vec<f64> = split.validation.iter().map(|&i| model.score(&records[i].pooled)).collect();
                let y: Vec<bool> = split.validation.iter().map(|&i| labels[i]).collect();
                let a = auc(&s, &y)?;
                let better = match &best {
                    None => true,
                    Some((ba, br, _)) => a > *ba || (a == *ba && rounds < *br),
                };
                if better {
                    best = Some((a, rounds, model));
                }
            }
            let (val_auc, rounds, model) = best.expect("grid is non-empty");
            manifest.note("validation_auc", val_auc);
            let s: Vec<f64> = split.test.iter().map(|&i| model.score(&records[i].pooled)).collect();
            let y: Vec<bool> = split.test.iter().map(|&i| labels[i]).collect();
            for (part, idx) in [("train", &split.train), ("validation", &split.validation), ("test", &split.test)] {
                for &i in idx.iter() {
                    let r = &records[i];
                    let _ = writeln!(predictions, "{},{},{part},{}", r.subject_id, u8::from(r.label), model.score(&r.pooled));
                }
            }
            models.push(model);
            Evaluation {
                name: config.name.clone(),
                protocol: config.protocol.clone(),
                overall: evaluate(&s, &y)?,
                folds: Vec::new(),
                rounds,
            }
        }
    };

    for (f, model) in models.iter().enumerate() {
        manifest.write_output(&layout.models_dir().join(format!("fold_{f}.json")), model.to_json().as_bytes())?;
    }
    manifest.write_output(&layout.predictions(), predictions.as_bytes())?;
    let text = serde_json::to_string_pretty(&evaluation).expect("evaluation serializes");
    manifest.write_output(&layout.evaluation(), text.as_bytes())?;
    manifest.note("auc", evaluation.overall.auc);
    manifest.finish()
}

type MetricCell = fn(&EvalReport) -> String;

/// Metric rows `ACC`, `SEN`, `SPE` (percent, two decimals) and `AUC` (four
/// decimals), one column per evaluation.
pub fn report_csv(evaluations: &[Evaluation]) -> String {
    let mut out = String::from("metric");
    for e in evaluations {
        let _ = write!(out, ",{}", e.name);
    }
    out.push('\n');
    let rows: [(&str, MetricCell); 4] = [
        ("ACC", |r| format!("{:.2}%", 100.0 * r.acc)),
        ("SEN", |r| format!("{:.2}%", 100.0 * r.sen)),
        ("SPE", |r| format!("{:.2}%", 100.0 * r.spe)),
        ("AUC", |r| format!("{:.4}", r.auc)),
    ];
    for (metric, cell) in rows {
        out.push_str(metric);
        for e in evaluations {
            let _ = write!(out, ",{}", cell(&e.overall));
        }
        out.push('\n');
    }
    out
}

/// Aggregates `evaluation.json` from this run and any `include` runs into
/// `report.csv`.
pub fn cmd_report(config: &RunConfig, layout: &Layout, include: &[PathBuf]) -> Result<Manifest, CliError> {
    let mut manifest = ManifestBuilder::new(layout, "report", config, None);
    let mut paths = vec![layout.evaluation()];
    paths.extend(include.iter().map(|d| Layout::new(d).evaluation()));
    let mut evaluations = Vec::with_capacity(paths.len());
    for path in &paths {
        let text = read_text(path)?;
        manifest.input(path, text.as_bytes());
        let e: Evaluation =
            serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        evaluations.push(e);
    }
    manifest.write_output(&layout.report(), report_csv(&evaluations).as_bytes())?;
    manifest.finish()
}

/// All stages in order. `synth` runs only when no data directory is set.
pub fn cmd_run(config: &RunConfig, layout: &Layout) -> Result<Vec<Manifest>, CliError> {
    let mut manifests = Vec::new();
    if config.paths.data_dir.is_none() {
        manifests.push(cmd_synth(config, layout)?);
    }
    manifests.push(cmd_sample(config, layout)?);
    manifests.push(cmd_train(config, layout)?);
    manifests.push(cmd_features(config, layout)?);
    manifests.push(cmd_classify(config, layout)?);
    manifests.push(cmd_report(config, layout, &[])?);
    Ok(manifests)
}
