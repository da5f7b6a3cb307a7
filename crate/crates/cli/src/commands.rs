use std::path::{Path, PathBuf};

use plmm::eval::{
    ari_over_epochs, kfold_perplexity, model_selection_rates, rates_from_selections, EvalReport,
    Trainer,
};
use plmm::io::{load_dataset, save_dataset, DatasetFile, DatasetFormat, LinkRecord, ModelRecord};
use plmm::synth::generate_seeded;
use plmm::{interpret_links, plmm_fit, LinkParameters, MixtureModel, TemporalDataset};

use crate::artifacts::{
    hash_file, read_json, to_json, AspectCounts, ClusterHistogram, FitEpoch, FitFile,
    InterpretationFile, Invocation, Manifest, OutputDir, PolarityCount, TransitionInterpretation,
    TruthFile, FORMAT_VERSION,
};
use crate::config::RunConfig;
use crate::error::CliError;

fn epoch_file_name(id: &str) -> String {
    let safe: String = id
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect();
    format!("epoch_{safe}")
}

fn load(path: &Path) -> Result<DatasetFile, CliError> {
    if !path.exists() {
        return Err(CliError::Validation(format!(
            "input {} does not exist",
            path.display()
        )));
    }
    Ok(load_dataset(path, DatasetFormat::from_path(path))?)
}

fn write_dataset(out: &mut OutputDir, rel: &str, file: &DatasetFile) -> Result<(), CliError> {
    let path = out.root().join(rel);
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    save_dataset(&path, file, DatasetFormat::Csv)?;
    out.record(rel)
}

pub fn simulate(config: &RunConfig, out_dir: &Path) -> Result<Manifest, CliError> {
    config.synth.validate()?;
    let truth = generate_seeded(&config.synth)?;
    let file = DatasetFile::with_default_names(truth.dataset.clone());
    let mut out = OutputDir::create(out_dir)?;
    write_dataset(&mut out, "dataset.csv", &file)?;
    for (t, id) in file.epoch_ids.iter().enumerate() {
        let single = DatasetFile {
            features: file.features.clone(),
            epoch_ids: vec![id.clone()],
            dataset: TemporalDataset::new(vec![truth.dataset.epoch(t).to_vec()])?,
        };
        write_dataset(
            &mut out,
            &format!("epochs/{}.csv", epoch_file_name(id)),
            &single,
        )?;
    }
    let record = TruthFile {
        schema_version: FORMAT_VERSION,
        epoch_ids: file.epoch_ids.clone(),
        labels: truth.labels.clone(),
        true_models: truth
            .true_models
            .iter()
            .map(|m| ModelRecord::new(m, None, None))
            .collect(),
        true_submodels: truth.true_submodels.clone(),
        true_links: truth
            .true_links
            .iter()
            .map(|l| LinkRecord {
                delta: l.delta().to_vec(),
                gamma: l.gamma().to_vec(),
            })
            .collect(),
        removed: truth.removed,
    };
    out.write("truth.json", &to_json(&record)?)?;
    out.finish(
        Invocation::Simulate,
        config,
        config.synth.rng_seed,
        Vec::new(),
    )
}

fn cluster_counts(data: &[plmm::CountVector], labels: &[usize], k: usize) -> Vec<Vec<u64>> {
    let d = data.first().map_or(0, |x| x.dim());
    let mut out = vec![vec![0u64; d]; k];
    for (x, &z) in data.iter().zip(labels) {
        for (s, &c) in out[z].iter_mut().zip(x.counts()) {
            *s += c as u64;
        }
    }
    out
}

pub fn fit(config: &RunConfig, dataset: &Path, out_dir: &Path) -> Result<Manifest, CliError> {
    config.plmm.validate()?;
    let file = load(dataset)?;
    let results = plmm_fit::<f64>(&file.dataset, &config.plmm)?;
    let mut out = OutputDir::create(out_dir)?;
    let mut epochs = Vec::with_capacity(results.len());
    let mut labels_csv = String::from("epoch,sample,label\n");
    for ((id, res), data) in file
        .epoch_ids
        .iter()
        .zip(&results)
        .zip(file.dataset.epochs())
    {
        let model = ModelRecord::new(&res.model, res.selected_submodel, res.links.as_ref());
        out.write(
            &format!("models/{}.json", epoch_file_name(id)),
            &to_json(&model)?,
        )?;
        for (i, z) in res.labels.iter().enumerate() {
            labels_csv.push_str(&format!("{id},{i},{z}\n"));
        }
        epochs.push(FitEpoch {
            epoch_id: id.clone(),
            k: res.k,
            loglik: res.loglik,
            model,
            bic_table: res.bic_table.clone(),
            mapping: res.mapping.clone(),
            source_components: res.source_components.clone(),
            k_scores: res.k_scores.clone(),
            labels: res.labels.clone(),
            cluster_counts: cluster_counts(data, &res.labels, res.k),
        });
    }
    out.write("labels.csv", labels_csv.as_bytes())?;
    let fit = FitFile {
        schema_version: FORMAT_VERSION,
        features: file.features.clone(),
        include_coefficient: config.plmm.em.include_coefficient,
        epochs,
    };
    out.write("fit.json", &to_json(&fit)?)?;
    let rates = model_selection_rates(std::slice::from_ref(&results)).ok();
    if let Some(rates) = rates {
        out.write("selection_rates.json", &to_json(&rates)?)?;
    }
    out.finish(
        Invocation::Fit {
            dataset: dataset.to_path_buf(),
        },
        config,
        config.plmm.em.rng_seed,
        vec![hash_file(dataset)?],
    )
}

fn fitted_model(epoch: &FitEpoch) -> Result<MixtureModel<f64>, CliError> {
    Ok(epoch.model.clone().into_parts()?.0)
}

pub fn evaluate(
    config: &RunConfig,
    dataset: &Path,
    truth: Option<&Path>,
    model: Option<&Path>,
    out_dir: &Path,
) -> Result<Manifest, CliError> {
    if truth.is_none() && model.is_none() {
        return Err(CliError::Validation(
            "evaluate needs --truth, --model or both".into(),
        ));
    }
    config.plmm.validate()?;
    let file = load(dataset)?;
    let fit: Option<FitFile> = model.map(read_json).transpose()?;
    let mut report = EvalReport {
        include_coefficient: config.plmm.em.include_coefficient,
        ..EvalReport::default()
    };

    if let Some(truth_path) = truth {
        let truth: TruthFile = read_json(truth_path)?;
        let fitted: Vec<Vec<usize>> = match &fit {
            Some(f) => f.epochs.iter().map(|e| e.labels.clone()).collect(),
            None => plmm_fit::<f64>(&file.dataset, &config.plmm)?
                .into_iter()
                .map(|e| e.labels)
                .collect(),
        };
        let (values, mean, std) = ari_over_epochs(&truth.labels, &fitted)?;
        if !values.is_empty() {
            report.ari_mean = Some(mean);
            report.ari_std = Some(std);
        }
        report.ari_per_epoch = values;
    }

    if let Some(fit) = &fit {
        if fit.epochs.len() != file.dataset.num_epochs() {
            return Err(CliError::Validation(format!(
                "fit has {} epochs but the dataset has {}",
                fit.epochs.len(),
                file.dataset.num_epochs()
            )));
        }
        let t = config.evaluate.epoch.unwrap_or(fit.epochs.len() - 1);
        if t >= fit.epochs.len() {
            return Err(CliError::Validation(format!(
                "evaluate.epoch {t} is out of range"
            )));
        }
        let data = file.dataset.epoch(t);
        let k = fit.epochs[t].k;
        let folds = config.evaluate.folds;
        let seed = config.plmm.em.rng_seed;
        let result = if t == 0 {
            kfold_perplexity::<f64>(data, k, folds, &config.plmm.em, seed, Trainer::Static)?
        } else {
            let previous = fitted_model(&fit.epochs[t - 1])?;
            let trainer = Trainer::Transition {
                previous: &previous,
                config: &config.plmm,
            };
            kfold_perplexity(data, previous.k(), folds, &config.plmm.em, seed, trainer)?
        };
        report.perplexity_per_fold = result.per_fold;
        report.perplexity_mean = Some(result.mean);
        let selected: Vec<_> = fit.epochs.iter().filter_map(|e| e.model.submodel).collect();
        if !selected.is_empty() {
            report.submodel_rates = rates_from_selections(selected)?;
        }
    }

    let mut out = OutputDir::create(out_dir)?;
    out.write("report.json", &to_json(&report)?)?;
    let mut inputs = vec![hash_file(dataset)?];
    for p in truth.iter().chain(model.iter()) {
        inputs.push(hash_file(p)?);
    }
    out.finish(
        Invocation::Evaluate {
            dataset: dataset.to_path_buf(),
            truth: truth.map(Path::to_path_buf),
            model: model.map(Path::to_path_buf),
        },
        config,
        config.plmm.em.rng_seed,
        inputs,
    )
}

/// `aspect:polarity` feature names grouped by aspect in first-seen order.
fn aspect_layout(features: &[String]) -> Option<Vec<(String, Vec<(String, usize)>)>> {
    let mut layout: Vec<(String, Vec<(String, usize)>)> = Vec::new();
    for (j, f) in features.iter().enumerate() {
        let (aspect, polarity) = f.split_once(':')?;
        if aspect.is_empty() || polarity.is_empty() || polarity.contains(':') {
            return None;
        }
        match layout.iter_mut().find(|(a, _)| a == aspect) {
            Some((_, pols)) => pols.push((polarity.to_string(), j)),
            None => layout.push((aspect.to_string(), vec![(polarity.to_string(), j)])),
        }
    }
    Some(layout)
}

pub fn interpret(
    config: &RunConfig,
    fit_path: &Path,
    out_dir: &Path,
) -> Result<Manifest, CliError> {
    config.plmm.validate()?;
    let fit: FitFile = read_json(fit_path)?;
    let mut transitions = Vec::new();
    for epoch in &fit.epochs {
        let (model, submodel, links) = epoch.model.clone().into_parts()?;
        let (Some(sm), Some(links), Some(src)) = (submodel, links, &epoch.source_components) else {
            continue;
        };
        let links: LinkParameters<f64> = links;
        let matrix = interpret_links(&links, sm, src, model.components(), &config.plmm)?;
        transitions.push(TransitionInterpretation {
            epoch_id: epoch.epoch_id.clone(),
            submodel: sm,
            matrix,
        });
    }
    if transitions.is_empty() {
        return Err(CliError::Validation(
            "fit output has no transitions with links; interpretation needs at least two epochs"
                .into(),
        ));
    }
    let histograms = aspect_layout(&fit.features).map(|layout| {
        fit.epochs
            .iter()
            .flat_map(|epoch| {
                let layout = &layout;
                epoch
                    .cluster_counts
                    .iter()
                    .enumerate()
                    .map(move |(k, counts)| ClusterHistogram {
                        epoch_id: epoch.epoch_id.clone(),
                        cluster: k,
                        aspects: layout
                            .iter()
                            .map(|(aspect, pols)| AspectCounts {
                                aspect: aspect.clone(),
                                polarities: pols
                                    .iter()
                                    .map(|(p, j)| PolarityCount {
                                        polarity: p.clone(),
                                        count: counts[*j],
                                    })
                                    .collect(),
                            })
                            .collect(),
                    })
            })
            .collect()
    });
    let report = InterpretationFile {
        schema_version: FORMAT_VERSION,
        features: fit.features.clone(),
        transitions,
        histograms,
    };
    let mut out = OutputDir::create(out_dir)?;
    out.write("interpretation.json", &to_json(&report)?)?;
    out.finish(
        Invocation::Interpret {
            fit: fit_path.to_path_buf(),
        },
        config,
        config.plmm.em.rng_seed,
        vec![hash_file(fit_path)?],
    )
}

/// Reruns the command recorded in a manifest and compares output checksums.
/// Returns the files whose contents differ.
pub fn replay(manifest_path: &Path, out_override: Option<&Path>) -> Result<Vec<String>, CliError> {
    let manifest: Manifest = read_json(manifest_path)?;
    for input in &manifest.inputs {
        let now = hash_file(Path::new(&input.path))?;
        if now.sha256 != input.sha256 {
            return Err(CliError::Validation(format!(
                "input {} changed since the recorded run",
                input.path
            )));
        }
    }
    let out: PathBuf = out_override.map_or_else(|| manifest.out_dir.clone(), Path::to_path_buf);
    let config = &manifest.config;
    let rerun = match &manifest.invocation {
        Invocation::Simulate => simulate(config, &out)?,
        Invocation::Fit { dataset } => fit(config, dataset, &out)?,
        Invocation::Evaluate {
            dataset,
            truth,
            model,
        } => evaluate(config, dataset, truth.as_deref(), model.as_deref(), &out)?,
        Invocation::Interpret { fit } => interpret(config, fit, &out)?,
    };
    let mut differing = Vec::new();
    for old in &manifest.outputs {
        match rerun.outputs.iter().find(|a| a.path == old.path) {
            Some(new) if new.sha256 == old.sha256 => {}
            _ => differing.push(old.path.clone()),
        }
    }
    for new in &rerun.outputs {
        if !manifest.outputs.iter().any(|a| a.path == new.path) {
            differing.push(new.path.clone());
        }
    }
    Ok(differing)
}
