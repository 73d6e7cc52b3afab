//! Command implementations: simulate, features, train, evaluate, and the
//! full experiment grid, plus the bounded worker pool.
//!
//! Parallelism never changes results: per-account extraction seeds depend
//! only on (seed, user_id), accounts are processed in sorted order, and
//! outputs are assembled in that order before writing.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use anyhow::{bail, Result};

use kldetect_core::baselines::{compa_features, vandam_features, BowRepresentation};
use kldetect_core::baselines::build_bow_matrix;
use kldetect_core::classifier::fit_standardizer;
use kldetect_core::classifier::train_svm;
use kldetect_core::corpus::{apply_retention, Account, Corpus};
use kldetect_core::error::Error as CoreError;
use kldetect_core::evaluate::{run_cv, run_cv_matrix, CvResult, EvalReport};
use kldetect_core::features::{baseline_matrix, bow_matrix_dense, kl_matrix, FeatureMatrix};
use kldetect_core::kl_features::extract_account;

use crate::config::{RatioSpec, RunConfig};
use crate::formats::{
    atomic_write, render_report_table, render_report_tsv, write_feature_tsv, write_model,
    ProvenanceHeader,
};
use crate::io::{apply_gold_labels, load_corpus, read_gold, write_corpus, write_gold, LoadStats};

pub const BASE_FAMILIES: [&str; 5] = ["lm", "compa", "vandam", "bow-count", "bow-tfidf"];

/// Runs `f` over `items` on up to `jobs` threads; results keep input order.
pub fn parallel_map<T, R, F>(items: &[T], jobs: usize, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync,
{
    let jobs = jobs.max(1).min(items.len().max(1));
    if jobs == 1 {
        return items.iter().map(&f).collect();
    }
    let chunk = items.len().div_ceil(jobs);
    let f = &f;
    std::thread::scope(|scope| {
        let handles: Vec<_> = items
            .chunks(chunk)
            .map(|slice| scope.spawn(move || slice.iter().map(f).collect::<Vec<R>>()))
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("worker thread panicked"))
            .collect()
    })
}

/// Artifact locations inside the workdir, keyed by the ratio label.
#[derive(Debug, Clone)]
pub struct Paths {
    workdir: PathBuf,
}

impl Paths {
    pub fn new(cfg: &RunConfig) -> Paths {
        Paths {
            workdir: cfg.workdir.clone(),
        }
    }

    pub fn simulated_corpus(&self, ratio_label: &str) -> PathBuf {
        self.workdir.join(format!("corpus_sim_r{ratio_label}.tsv"))
    }

    pub fn gold(&self, ratio_label: &str) -> PathBuf {
        self.workdir.join(format!("gold_r{ratio_label}.tsv"))
    }

    pub fn features(&self, family: &str, ratio_label: &str) -> PathBuf {
        self.workdir.join(format!("features_{family}_r{ratio_label}.tsv"))
    }

    pub fn model(&self, feature_set: &str, ratio_label: &str) -> PathBuf {
        self.workdir.join(format!("model_{feature_set}_r{ratio_label}.txt"))
    }

    pub fn report(&self) -> PathBuf {
        self.workdir.join("report.tsv")
    }
}

fn header(cfg: &RunConfig) -> ProvenanceHeader {
    ProvenanceHeader {
        config_hash: cfg.config_hash(),
        seed: cfg.seed,
    }
}

/// Loads the input corpus and applies the retention filters.
pub fn prepared_input(cfg: &RunConfig) -> Result<(Corpus, LoadStats)> {
    let (corpus, stats) = load_corpus(&cfg.corpus)?;
    let retained = apply_retention(&corpus, cfg.min_coverage_seconds, cfg.top_k);
    Ok((retained, stats))
}

fn split_set(feature_set: &str) -> Result<Vec<String>> {
    let parts: Vec<String> = feature_set
        .split('+')
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .collect();
    if parts.is_empty() {
        bail!("feature set {feature_set:?} names no families");
    }
    for p in &parts {
        if !BASE_FAMILIES.contains(&p.as_str()) {
            bail!("unknown feature family {p:?} (known: {})", BASE_FAMILIES.join(", "));
        }
    }
    Ok(parts)
}

fn is_bow(family: &str) -> bool {
    family.starts_with("bow-")
}

/// Extracts one base family over the whole corpus. For bag-of-words families,
/// fitting (df filter, idf, selection) uses `training_ids` only.
pub fn family_matrix(
    corpus: &Corpus,
    family: &str,
    cfg: &RunConfig,
    training_ids: &BTreeSet<String>,
    jobs: usize,
) -> Result<FeatureMatrix> {
    let accounts: Vec<&Account> = corpus.accounts.values().collect();
    match family {
        "lm" => {
            let sampler = cfg.sampler_config();
            let extracted = parallel_map(&accounts, jobs, |a| extract_account(a, &sampler));
            let mut vectors = Vec::with_capacity(extracted.len());
            let mut zero_filled = 0usize;
            for result in extracted {
                let (vector, zeros) = result?;
                if zeros > 0 {
                    zero_filled += 1;
                }
                vectors.push(vector);
            }
            if zero_filled > 0 {
                eprintln!(
                    "warning: {zero_filled} account(s) had divergence samples zero-filled \
                     after exhausting redraws"
                );
            }
            Ok(kl_matrix(&vectors, corpus)?)
        }
        "compa" => {
            let vectors = parallel_map(&accounts, jobs, |a| compa_features(a));
            Ok(baseline_matrix(&vectors)?)
        }
        "vandam" => {
            let vectors = parallel_map(&accounts, jobs, |a| vandam_features(a));
            Ok(baseline_matrix(&vectors)?)
        }
        "bow-count" | "bow-tfidf" => {
            let representation = if family == "bow-count" {
                BowRepresentation::Count
            } else {
                BowRepresentation::TfIdf
            };
            let bow = build_bow_matrix(corpus, &cfg.bow_config(representation), training_ids)?;
            Ok(bow_matrix_dense(&bow, corpus)?)
        }
        other => bail!("unknown feature family {other:?}"),
    }
}

/// Precomputes the fold-independent families named by the given sets.
fn static_cache(
    corpus: &Corpus,
    cfg: &RunConfig,
    sets: &[String],
    jobs: usize,
) -> Result<BTreeMap<String, FeatureMatrix>> {
    let mut cache = BTreeMap::new();
    for set in sets {
        for family in split_set(set)? {
            if !is_bow(&family) && !cache.contains_key(&family) {
                let all_ids: BTreeSet<String> = corpus.accounts.keys().cloned().collect();
                let matrix = family_matrix(corpus, &family, cfg, &all_ids, jobs)?;
                cache.insert(family, matrix);
            }
        }
    }
    Ok(cache)
}

/// Assembles the (possibly concatenated) matrix for one feature set.
fn set_matrix(
    corpus: &Corpus,
    feature_set: &str,
    cfg: &RunConfig,
    training_ids: &BTreeSet<String>,
    cache: &BTreeMap<String, FeatureMatrix>,
    jobs: usize,
) -> Result<FeatureMatrix> {
    let parts = split_set(feature_set)?;
    let mut mats = Vec::with_capacity(parts.len());
    for family in &parts {
        if let Some(m) = cache.get(family) {
            mats.push(m.clone());
        } else {
            mats.push(family_matrix(corpus, family, cfg, training_ids, jobs)?);
        }
    }
    Ok(FeatureMatrix::concat(&mats)?)
}

fn corpus_ids_labels(corpus: &Corpus) -> Result<(Vec<String>, Vec<u8>)> {
    let ids: Vec<String> = corpus.accounts.keys().cloned().collect();
    let labels = corpus
        .accounts
        .values()
        .map(|a| {
            a.label
                .as_binary()
                .ok_or_else(|| CoreError::UnlabeledAccount(a.user_id.clone()))
        })
        .collect::<Result<Vec<u8>, _>>()?;
    Ok((ids, labels))
}

/// Cross-validates one (feature set, ratio) cell. Bag-of-words parts are
/// refit inside every fold on that fold's training accounts.
pub fn run_cell(
    corpus: &Corpus,
    feature_set: &str,
    ratio_label: &str,
    cfg: &RunConfig,
    cache: &BTreeMap<String, FeatureMatrix>,
    jobs: usize,
) -> Result<EvalReport> {
    let (ids, labels) = corpus_ids_labels(corpus)?;
    let hyper = cfg.svm_hyper();
    let has_bow = split_set(feature_set)?.iter().any(|f| is_bow(f));
    let cv: CvResult = if has_bow {
        run_cv(&ids, &labels, cfg.folds, cfg.seed, &hyper, |train_idx| {
            let training_ids: BTreeSet<String> =
                train_idx.iter().map(|&i| ids[i].clone()).collect();
            set_matrix(corpus, feature_set, cfg, &training_ids, cache, jobs)
                .map_err(|e| CoreError::InvalidConfig(format!("{e:#}")))
        })?
    } else {
        let all_ids: BTreeSet<String> = ids.iter().cloned().collect();
        let matrix = set_matrix(corpus, feature_set, cfg, &all_ids, cache, jobs)?;
        run_cv_matrix(&matrix, cfg.folds, cfg.seed, &hyper)?
    };
    Ok(EvalReport {
        feature_set: feature_set.to_string(),
        ratio_mode: ratio_label.to_string(),
        seed: cfg.seed,
        cv,
    })
}

#[derive(Debug, Clone)]
pub struct SimulateSummary {
    pub accounts: usize,
    pub compromised: usize,
    pub skipped: Vec<String>,
    pub corpus_path: PathBuf,
    pub gold_path: PathBuf,
}

fn simulate_at(
    cfg: &RunConfig,
    input: &Corpus,
    ratio: RatioSpec,
    paths: &Paths,
) -> Result<(Corpus, SimulateSummary)> {
    let label = ratio.label();
    let sim = kldetect_core::simulator::simulate_corpus(input, &cfg.simulation_config(ratio))?;
    let corpus_path = paths.simulated_corpus(&label);
    let gold_path = paths.gold(&label);
    write_corpus(&corpus_path, &sim.corpus, &header(cfg))?;
    write_gold(&gold_path, &sim.corpus, &sim.plans, &header(cfg))?;
    if !sim.skipped.is_empty() {
        eprintln!(
            "warning: {} account(s) drawn for compromise but skipped (no feasible donor): {}",
            sim.skipped.len(),
            sim.skipped.join(", ")
        );
    }
    let summary = SimulateSummary {
        accounts: sim.corpus.len(),
        compromised: sim.plans.len(),
        skipped: sim.skipped.clone(),
        corpus_path,
        gold_path,
    };
    Ok((sim.corpus, summary))
}

/// `simulate`: inject takeovers at the configured ratio; write the simulated
/// corpus cache and the gold-label file.
pub fn cmd_simulate(cfg: &RunConfig) -> Result<SimulateSummary> {
    let paths = Paths::new(cfg);
    let (input, _) = prepared_input(cfg)?;
    let (_, summary) = simulate_at(cfg, &input, cfg.ratio, &paths)?;
    Ok(summary)
}

/// Loads the simulated corpus cache and re-attaches gold labels.
pub fn load_simulated(cfg: &RunConfig, ratio: RatioSpec) -> Result<Corpus> {
    let paths = Paths::new(cfg);
    let label = ratio.label();
    let corpus_path = paths.simulated_corpus(&label);
    if !corpus_path.is_file() {
        bail!(
            "simulated corpus {} not found; run `kldetect simulate` first",
            corpus_path.display()
        );
    }
    let (mut corpus, _) = load_corpus(&corpus_path)?;
    let gold = read_gold(&paths.gold(&label))?;
    apply_gold_labels(&mut corpus, &gold)?;
    Ok(corpus)
}

/// `features`: write one TSV per base family named by the configured feature
/// set, extracted from the simulated corpus at the configured ratio.
pub fn cmd_features(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let paths = Paths::new(cfg);
    let corpus = load_simulated(cfg, cfg.ratio)?;
    let label = cfg.ratio.label();
    let all_ids: BTreeSet<String> = corpus.accounts.keys().cloned().collect();
    let mut written = Vec::new();
    for family in split_set(&cfg.feature_set)? {
        let matrix = family_matrix(&corpus, &family, cfg, &all_ids, cfg.jobs)?;
        let path = paths.features(&family, &label);
        write_feature_tsv(&path, &matrix, &header(cfg))?;
        written.push(path);
    }
    Ok(written)
}

/// `train`: fit the standardizer and SVM on all labeled accounts of the
/// simulated corpus and write the self-describing model file.
pub fn cmd_train(cfg: &RunConfig) -> Result<PathBuf> {
    let paths = Paths::new(cfg);
    let corpus = load_simulated(cfg, cfg.ratio)?;
    let all_ids: BTreeSet<String> = corpus.accounts.keys().cloned().collect();
    let cache = static_cache(&corpus, cfg, std::slice::from_ref(&cfg.feature_set), cfg.jobs)?;
    let matrix = set_matrix(&corpus, &cfg.feature_set, cfg, &all_ids, &cache, cfg.jobs)?;
    let standardizer = fit_standardizer(&matrix.rows)?;
    let x = standardizer.transform(&matrix.rows)?;
    let model = train_svm(&x, &matrix.labels, &cfg.svm_hyper())?;
    let path = paths.model(&cfg.feature_set, &cfg.ratio.label());
    write_model(&path, &matrix.feature_names, &standardizer, &model, &header(cfg))?;
    Ok(path)
}

#[derive(Debug)]
pub struct EvaluateOutput {
    pub reports: Vec<EvalReport>,
    pub report_path: PathBuf,
    pub table: String,
}

fn write_report(cfg: &RunConfig, reports: &[EvalReport]) -> Result<EvaluateOutput> {
    let paths = Paths::new(cfg);
    let tsv = render_report_tsv(reports, &header(cfg));
    atomic_write(&paths.report(), &tsv)?;
    Ok(EvaluateOutput {
        reports: reports.to_vec(),
        report_path: paths.report(),
        table: render_report_table(reports),
    })
}

/// `evaluate`: cross-validate every configured feature set on the simulated
/// corpus at the configured ratio; write the report TSV.
pub fn cmd_evaluate(cfg: &RunConfig) -> Result<EvaluateOutput> {
    let corpus = load_simulated(cfg, cfg.ratio)?;
    let label = cfg.ratio.label();
    let cache = static_cache(&corpus, cfg, &cfg.feature_sets, cfg.jobs)?;
    let mut reports = Vec::new();
    for set in &cfg.feature_sets {
        reports.push(run_cell(&corpus, set, &label, cfg, &cache, cfg.jobs)?);
    }
    write_report(cfg, &reports)
}

/// `pipeline`: the full grid. For every configured ratio: simulate, export
/// per-family feature TSVs, then cross-validate every feature set. One
/// combined report holds all (feature set, ratio) rows.
pub fn cmd_pipeline(cfg: &RunConfig) -> Result<EvaluateOutput> {
    let paths = Paths::new(cfg);
    let (input, _) = prepared_input(cfg)?;
    let mut reports = Vec::new();
    for &ratio in &cfg.ratios {
        let label = ratio.label();
        let (sim_corpus, _) = simulate_at(cfg, &input, ratio, &paths)?;
        let cache = static_cache(&sim_corpus, cfg, &cfg.feature_sets, cfg.jobs)?;
        let all_ids: BTreeSet<String> = sim_corpus.accounts.keys().cloned().collect();
        let mut exported: BTreeSet<String> = BTreeSet::new();
        for set in &cfg.feature_sets {
            for family in split_set(set)? {
                if exported.insert(family.clone()) {
                    let matrix = match cache.get(&family) {
                        Some(m) => m.clone(),
                        None => family_matrix(&sim_corpus, &family, cfg, &all_ids, cfg.jobs)?,
                    };
                    write_feature_tsv(&paths.features(&family, &label), &matrix, &header(cfg))?;
                }
            }
        }
        for set in &cfg.feature_sets {
            reports.push(run_cell(&sim_corpus, set, &label, cfg, &cache, cfg.jobs)?);
        }
    }
    write_report(cfg, &reports)
}

/// `synth`: write a deterministic synthetic corpus in the stream format.
pub fn cmd_synth(params: &crate::synth::SynthParams, out: &Path) -> Result<PathBuf> {
    let corpus = crate::synth::generate(params);
    let blob = format!("{params:?}");
    let header = ProvenanceHeader {
        config_hash: kldetect_core::rng::fnv1a64(blob.as_bytes()),
        seed: params.seed,
    };
    write_corpus(out, &corpus, &header)?;
    Ok(out.to_path_buf())
}
