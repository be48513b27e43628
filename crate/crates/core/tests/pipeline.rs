use hsc_core::patches::extract_patches;
use hsc_core::{
    adaboost_train, encode, evaluate, fpsbs_sample, generate, kfold_split, max_pool, train, PoolMode, SamplingConfig,
    SccConfig, SubjectRecord, SynthConfig,
};

fn records(effect_size: f64) -> Vec<SubjectRecord> {
    let synth = SynthConfig { subjects_per_class: 16, grid: [14, 14], effect_size, seed: 7, ..SynthConfig::default() };
    let subjects = generate(&synth).unwrap();
    let sampling = SamplingConfig { target_patch_count: 40, patch_dim: 19, ..SamplingConfig::default() };
    let centers = fpsbs_sample(&subjects[0].surface, &sampling, 1).unwrap().centers();
    let patches: Vec<Vec<Vec<f64>>> = subjects
        .iter()
        .map(|s| extract_patches(&s.surface, &centers, 19).unwrap().into_iter().map(|p| p.features).collect())
        .collect();
    let all: Vec<&Vec<f64>> = patches.iter().flatten().collect();
    let scc = SccConfig { lambda: 0.15, epochs: 3, seed: 2, ..SccConfig::default() };
    let (dict, diag) = train(&all, 40, &scc).unwrap();
    assert!(dict.is_feasible() && diag.violations(1e-12, f64::INFINITY).is_clean());
    subjects
        .iter()
        .zip(&patches)
        .map(|(s, ps)| {
            let codes: Vec<_> = ps.iter().map(|x| encode(&dict, x, &scc).unwrap()).collect();
            SubjectRecord {
                subject_id: s.id.clone(),
                pooled: max_pool(&codes, dict.atoms(), PoolMode::Max).unwrap(),
                label: s.label,
                group_tag: s.group_tag().into(),
            }
        })
        .collect()
}

fn cross_validated_auc(records: &[SubjectRecord]) -> f64 {
    let labels: Vec<bool> = records.iter().map(|r| r.label).collect();
    let folds = kfold_split(&labels, 4, 3).unwrap();
    let mut scores = vec![0.0; records.len()];
    for fold in &folds {
        let train_set: Vec<SubjectRecord> =
            (0..records.len()).filter(|i| !fold.contains(i)).map(|i| records[i].clone()).collect();
        let model = adaboost_train(&train_set, 30).unwrap();
        for &i in fold {
            scores[i] = model.score(&records[i].pooled);
        }
    }
    evaluate(&scores, &labels).unwrap().auc
}

#[test]
fn planted_effect_is_detected_from_pooled_codes() {
    let with_effect = records(0.5);
    assert_eq!(with_effect.len(), 32);
    assert!(with_effect.iter().all(|r| r.pooled.len() == 40 && r.pooled.iter().all(|v| v.is_finite())));
    let auc = cross_validated_auc(&with_effect);
    assert!(auc >= 0.9, "AUC {auc}");
}

#[test]
fn library_pipeline_is_deterministic() {
    let a = records(0.5);
    let b = records(0.5);
    assert_eq!(a, b);
}
