use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{anyhow, Context, Result};
use featgenn_core::dataset::{append_features, load_csv, make_folds, prepare, Dataset};
use featgenn_core::eval::CvEvaluator;
use featgenn_core::evolve::{run_evolution, EvolutionOutcome};
use featgenn_core::netgen::Pooling;
use featgenn_core::rng::derive_seed;
use log::{info, warn};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{DatasetEntry, ExperimentConfig};
use crate::reference;
use crate::report::{self, file_stem, ResultRow, ResultTable};

/// What a command produced; `failures` lists runs that could not complete.
#[derive(Debug)]
pub struct CommandOutput {
    pub table: ResultTable,
    pub failures: Vec<String>,
    pub out_dir: PathBuf,
}

struct Loaded {
    entry: DatasetEntry,
    data: Dataset,
    positive: usize,
}

enum LoadState {
    Ready(Loaded),
    Skipped,
    Failed(String),
}

fn load_dataset(cfg: &ExperimentConfig, entry: &DatasetEntry) -> LoadState {
    let path = cfg.dataset_path(entry);
    if entry.optional && !path.exists() {
        warn!("{}: {} not found, skipping optional dataset", entry.name, path.display());
        return LoadState::Skipped;
    }
    let raw = match load_csv(&path, &entry.target) {
        Ok(d) => d,
        Err(e) => return LoadState::Failed(format!("{}: {e}", entry.name)),
    };
    let Some(positive) = raw.label_of(&entry.positive) else {
        return LoadState::Failed(format!(
            "{}: positive label {:?} not among {:?}",
            entry.name,
            entry.positive,
            raw.classes()
        ));
    };
    let (mut data, _) = prepare(&raw);
    data.name = entry.name.clone();
    LoadState::Ready(Loaded {
        entry: entry.clone(),
        data,
        positive,
    })
}

/// Per-run scorer. Seeds depend on the run index only, so every method and
/// setting compared within a run index sees the same folds and forests.
fn evaluator(cfg: &ExperimentConfig, l: &Loaded, run: usize) -> Result<CvEvaluator> {
    let seed = derive_seed(cfg.experiment.eval_seed, &[run as u64]);
    let folds = make_folds(&l.data, cfg.experiment.folds, seed)?;
    let mut forest = cfg.forest.clone();
    forest.seed = seed;
    Ok(CvEvaluator {
        folds,
        forest,
        average: cfg.experiment.f1_average,
        positive: l.positive,
    })
}

fn ga_seed(cfg: &ExperimentConfig, run: usize) -> u64 {
    derive_seed(cfg.experiment.seed, &[run as u64])
}

fn thread_pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .context("building worker pool")
}

fn prepare_out(cfg: &ExperimentConfig) -> Result<PathBuf> {
    let dir = cfg.experiment.out.clone();
    std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    std::fs::write(dir.join("config_echo.toml"), cfg.echo())?;
    Ok(dir)
}

#[derive(Serialize)]
struct Timing {
    dataset: String,
    method: String,
    variant: String,
    seconds: f64,
}

fn write_timings(dir: &Path, timings: &[Timing]) -> Result<()> {
    report::write_json(&dir.join("timings.json"), &timings)
}

fn load_all(cfg: &ExperimentConfig, failures: &mut Vec<String>) -> Vec<Loaded> {
    let mut out = Vec::new();
    for entry in &cfg.datasets {
        match load_dataset(cfg, entry) {
            LoadState::Ready(l) => {
                info!("{}: {} rows, {} columns", l.entry.name, l.data.n_rows(), l.data.n_cols());
                out.push(l);
            }
            LoadState::Skipped => {}
            LoadState::Failed(msg) => {
                warn!("{msg}");
                failures.push(msg);
            }
        }
    }
    out
}

struct BaseRun {
    score: f64,
    weighted: f64,
}

fn baseline_rows(cfg: &ExperimentConfig, loaded: &[Loaded], failures: &mut Vec<String>, timings: &mut Vec<Timing>) -> Vec<ResultRow> {
    let hash = cfg.hash();
    let mut rows = Vec::new();
    for l in loaded {
        let start = Instant::now();
        let runs: Vec<Result<BaseRun>> = (0..cfg.experiment.runs)
            .into_par_iter()
            .map(|r| {
                let rep = evaluator(cfg, l, r)?.report(&l.data)?;
                Ok(BaseRun {
                    score: rep.mean_f1,
                    weighted: rep.mean_weighted_f1(),
                })
            })
            .collect();
        let mut row = ResultRow::new(&l.entry.name, "base", "raw", &hash)
            .with_reference(reference::pooling(&l.entry.name).map(|p| (p.base, None)));
        row.runs = cfg.experiment.runs;
        row.seeds = (0..cfg.experiment.runs)
            .map(|r| derive_seed(cfg.experiment.eval_seed, &[r as u64]))
            .collect();
        let (scores, weighted) = collect_runs(&l.entry.name, "base", runs, &mut row, failures, |b| (b.score, b.weighted));
        row.set_scores(scores, &weighted);
        timings.push(Timing {
            dataset: l.entry.name.clone(),
            method: "base".into(),
            variant: "raw".into(),
            seconds: start.elapsed().as_secs_f64(),
        });
        rows.push(row);
    }
    rows
}

fn collect_runs<T>(
    dataset: &str,
    label: &str,
    runs: Vec<Result<T>>,
    row: &mut ResultRow,
    failures: &mut Vec<String>,
    pick: impl Fn(&T) -> (f64, f64),
) -> (Vec<f64>, Vec<f64>) {
    let mut scores = Vec::new();
    let mut weighted = Vec::new();
    let mut errors = Vec::new();
    for (r, res) in runs.iter().enumerate() {
        match res {
            Ok(v) => {
                let (s, w) = pick(v);
                scores.push(s);
                weighted.push(w);
            }
            Err(e) => {
                let msg = format!("{dataset} {label} run {r}: {e:#}");
                warn!("{msg}");
                errors.push(msg.clone());
                failures.push(msg);
            }
        }
    }
    if !errors.is_empty() {
        row.error = Some(errors.join(" | "));
    }
    (scores, weighted)
}

pub fn cmd_baseline(cfg: &ExperimentConfig) -> Result<CommandOutput> {
    let dir = prepare_out(cfg)?;
    let pool = thread_pool(cfg.experiment.workers)?;
    let mut failures = Vec::new();
    let mut timings = Vec::new();
    let mut table = ResultTable::new("baseline", &cfg.hash());
    pool.install(|| {
        let loaded = load_all(cfg, &mut failures);
        table.rows = baseline_rows(cfg, &loaded, &mut failures, &mut timings);
    });
    table.sort();
    report::write_results(&dir, &table)?;
    write_timings(&dir, &timings)?;
    Ok(CommandOutput {
        table,
        failures,
        out_dir: dir,
    })
}

/// One evolution setting applied to one dataset.
#[derive(Debug, Clone)]
struct Setting {
    pooling: Pooling,
    fraction: f64,
    variant: String,
}

struct EvoRun {
    run: usize,
    seed: u64,
    score: f64,
    weighted: f64,
    outcome: EvolutionOutcome,
}

fn evolve_once(cfg: &ExperimentConfig, l: &Loaded, s: &Setting, run: usize) -> Result<EvoRun> {
    let gcfg = cfg.generator_for(&l.entry, s.pooling);
    let mut ecfg = cfg.evolution.clone();
    ecfg.seed = ga_seed(cfg, run);
    ecfg.corr_fraction = s.fraction;
    let ev = evaluator(cfg, l, run)?;
    let outcome = run_evolution(&ecfg, &gcfg, &l.data, &ev)?;
    let extended = append_features(&l.data, outcome.best.features.view(), &outcome.generated_names)?;
    let rep = ev.report(&extended)?;
    let score = outcome
        .best
        .candidate
        .score
        .ok_or_else(|| anyhow!("best candidate was never scored"))?;
    Ok(EvoRun {
        run,
        seed: ecfg.seed,
        score,
        weighted: rep.mean_weighted_f1(),
        outcome,
    })
}

#[derive(Serialize)]
struct GenomeExport<'a> {
    dataset: &'a str,
    variant: &'a str,
    run: usize,
    seed: u64,
    score: f64,
    generation_found: usize,
    selected_features: &'a [usize],
    selected_names: Vec<&'a str>,
    generated_names: &'a [String],
    genome: &'a featgenn_core::netgen::Genome,
    plans: &'a [featgenn_core::netgen::PoolPlan],
}

struct EvoSummary {
    row: ResultRow,
    /// Hall-of-fame history of each completed run, by run index.
    histories: Vec<(usize, Vec<(usize, f64)>)>,
}

#[allow(clippy::too_many_arguments)]
fn evolution_row(
    cfg: &ExperimentConfig,
    dir: &Path,
    l: &Loaded,
    s: &Setting,
    label: &str,
    reference: Option<reference::Score>,
    failures: &mut Vec<String>,
    timings: &mut Vec<Timing>,
) -> Result<EvoSummary> {
    let start = Instant::now();
    let runs: Vec<Result<EvoRun>> = (0..cfg.experiment.runs)
        .into_par_iter()
        .map(|r| evolve_once(cfg, l, s, r))
        .collect();
    let mut row = ResultRow::new(&l.entry.name, "featgenn", &s.variant, &cfg.hash()).with_reference(reference);
    row.pooling = Some(s.pooling.as_str().to_string());
    row.fraction = Some(s.fraction);
    row.runs = cfg.experiment.runs;
    row.seeds = (0..cfg.experiment.runs).map(|r| ga_seed(cfg, r)).collect();
    let (scores, weighted) = collect_runs(&l.entry.name, &s.variant, runs.iter().map(|r| r.as_ref().map_err(|e| anyhow!("{e:#}"))).collect(), &mut row, failures, |e| (e.score, e.weighted));
    row.set_scores(scores, &weighted);

    let ok: Vec<&EvoRun> = runs.iter().filter_map(|r| r.as_ref().ok()).collect();
    let mut histories = Vec::new();
    for e in &ok {
        report::write_history(dir, &format!("{label}_run{}", e.run), &e.outcome.history)?;
        histories.push((e.run, e.outcome.history.clone()));
    }
    // best run by score, ties to the earliest run
    if let Some(best) = ok
        .iter()
        .copied()
        .reduce(|a, b| if b.score > a.score { b } else { a })
    {
        let o = &best.outcome;
        row.n_generated = o.best.features.ncols();
        report::write_features(dir, label, &o.generated_names, o.best.features.view())?;
        let names = l.data.columns();
        let export = GenomeExport {
            dataset: &l.entry.name,
            variant: &s.variant,
            run: best.run,
            seed: best.seed,
            score: best.score,
            generation_found: o.best.generation,
            selected_features: &o.selected_features,
            selected_names: o.selected_features.iter().map(|&i| names[i].name.as_str()).collect(),
            generated_names: &o.generated_names,
            genome: &o.best.candidate.genome,
            plans: &o.best.plans,
        };
        report::write_json(&dir.join(format!("genome_{}.json", file_stem(label))), &export)?;
    }
    timings.push(Timing {
        dataset: l.entry.name.clone(),
        method: "featgenn".into(),
        variant: s.variant.clone(),
        seconds: start.elapsed().as_secs_f64(),
    });
    Ok(EvoSummary { row, histories })
}

fn pooled_reference(dataset: &str, pooling: Pooling) -> Option<reference::Score> {
    reference::pooling(dataset).map(|p| match pooling {
        Pooling::Correlation => p.corr_pool,
        Pooling::Max => p.max_pool,
    })
}

pub fn cmd_run(cfg: &ExperimentConfig) -> Result<CommandOutput> {
    let dir = prepare_out(cfg)?;
    let pool = thread_pool(cfg.experiment.workers)?;
    let mut failures = Vec::new();
    let mut timings = Vec::new();
    let mut table = ResultTable::new("run", &cfg.hash());
    let pooling = cfg.generator.pooling;
    let setting = Setting {
        pooling,
        fraction: cfg.evolution.corr_fraction,
        variant: pooling.as_str().to_string(),
    };
    pool.install(|| -> Result<()> {
        for l in load_all(cfg, &mut failures) {
            let s = evolution_row(cfg, &dir, &l, &setting, &l.entry.name, pooled_reference(&l.entry.name, pooling), &mut failures, &mut timings)?;
            table.rows.push(s.row);
        }
        Ok(())
    })?;
    table.sort();
    report::write_results(&dir, &table)?;
    write_timings(&dir, &timings)?;
    Ok(CommandOutput {
        table,
        failures,
        out_dir: dir,
    })
}

pub fn cmd_compare_pooling(cfg: &ExperimentConfig) -> Result<CommandOutput> {
    let dir = prepare_out(cfg)?;
    let pool = thread_pool(cfg.experiment.workers)?;
    let mut failures = Vec::new();
    let mut timings = Vec::new();
    let mut table = ResultTable::new("compare-pooling", &cfg.hash());
    let mut deltas = Vec::new();
    pool.install(|| -> Result<()> {
        for l in load_all(cfg, &mut failures) {
            let mut means = Vec::new();
            for pooling in [Pooling::Correlation, Pooling::Max] {
                let s = Setting {
                    pooling,
                    fraction: cfg.evolution.corr_fraction,
                    variant: pooling.as_str().to_string(),
                };
                let label = format!("{}_{}", l.entry.name, pooling.as_str());
                let sum = evolution_row(cfg, &dir, &l, &s, &label, pooled_reference(&l.entry.name, pooling), &mut failures, &mut timings)?;
                means.push(sum.row.mean_f1);
                table.rows.push(sum.row);
            }
            let paper = reference::pooling(&l.entry.name).map(|p| p.corr_pool.0 - p.max_pool.0);
            deltas.push(vec![
                l.entry.name.clone(),
                means[0].to_string(),
                means[1].to_string(),
                (means[0] - means[1]).to_string(),
                paper.map(|d| d.to_string()).unwrap_or_default(),
                paper.map(|_| reference::SOURCE.to_string()).unwrap_or_default(),
            ]);
        }
        Ok(())
    })?;
    table.sort();
    deltas.sort();
    report::write_results(&dir, &table)?;
    report::write_rows(
        &dir.join("pooling_deltas.csv"),
        &["dataset", "correlation_f1", "max_f1", "delta", "reference_delta", "reference_source"],
        &deltas,
    )?;
    write_timings(&dir, &timings)?;
    Ok(CommandOutput {
        table,
        failures,
        out_dir: dir,
    })
}

fn fraction_variant(f: f64) -> String {
    if f >= 1.0 {
        "full".to_string()
    } else {
        format!("{}%", (f * 100.0).round())
    }
}

pub fn cmd_data_fraction(cfg: &ExperimentConfig) -> Result<CommandOutput> {
    let dir = prepare_out(cfg)?;
    let pool = thread_pool(cfg.experiment.workers)?;
    let mut failures = Vec::new();
    let mut timings = Vec::new();
    let mut table = ResultTable::new("data-fraction", &cfg.hash());
    let mut curves = Vec::new();
    let mut gains = Vec::new();
    let pooling = cfg.generator.pooling;
    let mut fractions = cfg.experiment.fractions.clone();
    fractions.sort_by(f64::total_cmp);
    fractions.dedup();
    pool.install(|| -> Result<()> {
        for l in load_all(cfg, &mut failures) {
            let mut means = Vec::new();
            for &f in &fractions {
                let s = Setting {
                    pooling,
                    fraction: f,
                    variant: fraction_variant(f),
                };
                let label = format!("{}_frac{}", l.entry.name, (f * 100.0).round());
                let sum = evolution_row(cfg, &dir, &l, &s, &label, None, &mut failures, &mut timings)?;
                for (run, hist) in &sum.histories {
                    for (g, best) in hist {
                        curves.push(vec![
                            l.entry.name.clone(),
                            f.to_string(),
                            run.to_string(),
                            g.to_string(),
                            best.to_string(),
                        ]);
                    }
                }
                means.push((f, sum.row.mean_f1, sum.row.completed));
                table.rows.push(sum.row);
            }
            if let Some(&(_, full, n)) = means.iter().find(|m| m.0 >= 1.0) {
                for &(f, m, k) in &means {
                    if f >= 1.0 || n == 0 || k == 0 {
                        continue;
                    }
                    let paper = reference::FRACTION_GAIN_PCT
                        .iter()
                        .find(|(pf, _)| (pf - f).abs() < 1e-9)
                        .map(|p| p.1);
                    gains.push(vec![
                        l.entry.name.clone(),
                        f.to_string(),
                        m.to_string(),
                        full.to_string(),
                        ((full - m) / m * 100.0).to_string(),
                        paper.map(|p| p.to_string()).unwrap_or_default(),
                        paper.map(|_| reference::SOURCE.to_string()).unwrap_or_default(),
                    ]);
                }
            }
        }
        Ok(())
    })?;
    table.sort();
    report::write_results(&dir, &table)?;
    report::write_rows(&dir.join("curves.csv"), &["dataset", "fraction", "run", "generation", "best_f1"], &curves)?;
    report::write_rows(
        &dir.join("fraction_gains.csv"),
        &["dataset", "fraction", "mean_f1", "full_mean_f1", "full_gain_pct", "reference_gain_pct", "reference_source"],
        &gains,
    )?;
    write_timings(&dir, &timings)?;
    Ok(CommandOutput {
        table,
        failures,
        out_dir: dir,
    })
}

#[derive(Serialize)]
struct CountReport {
    dataset: String,
    configured: Option<usize>,
    measured: Option<usize>,
    reference_featgenn: usize,
    reference_random: usize,
    reference_autofeat: usize,
    reference_nfs: usize,
    reference_difer: usize,
    reference_source: &'static str,
}

pub fn cmd_bench(cfg: &ExperimentConfig) -> Result<CommandOutput> {
    let dir = prepare_out(cfg)?;
    let pool = thread_pool(cfg.experiment.workers)?;
    let mut failures = Vec::new();
    let mut timings = Vec::new();
    let mut table = ResultTable::new("bench", &cfg.hash());
    let pooling = cfg.generator.pooling;
    let setting = Setting {
        pooling,
        fraction: cfg.evolution.corr_fraction,
        variant: pooling.as_str().to_string(),
    };
    pool.install(|| -> Result<()> {
        let loaded = load_all(cfg, &mut failures);
        table.rows = baseline_rows(cfg, &loaded, &mut failures, &mut timings);
        for l in &loaded {
            let reference = reference::comparison(&l.entry.name).map(|c| c.values[6]);
            let s = evolution_row(cfg, &dir, l, &setting, &l.entry.name, reference, &mut failures, &mut timings)?;
            table.rows.push(s.row);
        }
        Ok(())
    })?;
    table.sort();

    // comparison table: literature rows, then measured rows
    let mut header = vec!["dataset", "source"];
    header.extend(reference::METHODS);
    let mut cmp = Vec::new();
    for row in &reference::COMPARISON {
        let mut r = vec![row.dataset.to_string(), reference::SOURCE.to_string()];
        r.extend(row.values.iter().map(|(m, s)| match s {
            Some(s) => format!("{m} ({s})"),
            None => m.to_string(),
        }));
        cmp.push(r);
    }
    for entry in &cfg.datasets {
        let base = table.rows.iter().find(|r| r.dataset == entry.name && r.method == "base");
        let feat = table.rows.iter().find(|r| r.dataset == entry.name && r.method == "featgenn");
        if base.is_none() && feat.is_none() {
            continue;
        }
        let mut r = vec![entry.name.clone(), "measured".to_string()];
        r.push(base.map(|b| b.mean_f1.to_string()).unwrap_or_default());
        r.extend(std::iter::repeat(String::new()).take(5));
        r.push(feat.map(|f| format!("{} ({})", f.mean_f1, f.std_f1)).unwrap_or_default());
        r.push(
            feat.and_then(|f| f.scores.iter().copied().reduce(f64::max))
                .map(|m| m.to_string())
                .unwrap_or_default(),
        );
        cmp.push(r);
    }
    report::write_rows(&dir.join("comparison.csv"), &header, &cmp)?;

    let counts: Vec<CountReport> = reference::FEATURE_COUNTS
        .iter()
        .map(|c| {
            let entry = cfg.datasets.iter().find(|d| d.name.eq_ignore_ascii_case(c.dataset));
            let measured = table
                .rows
                .iter()
                .find(|r| r.dataset.eq_ignore_ascii_case(c.dataset) && r.method == "featgenn" && r.completed > 0)
                .map(|r| r.n_generated);
            CountReport {
                dataset: c.dataset.to_string(),
                configured: entry.map(|e| e.n_out),
                measured,
                reference_random: c.counts[0],
                reference_autofeat: c.counts[1],
                reference_nfs: c.counts[2],
                reference_difer: c.counts[3],
                reference_featgenn: c.counts[4],
                reference_source: reference::SOURCE,
            }
        })
        .collect();
    let opt = |v: Option<usize>| v.map(|n| n.to_string()).unwrap_or_default();
    let count_rows: Vec<Vec<String>> = counts
        .iter()
        .map(|c| {
            vec![
                c.dataset.clone(),
                opt(c.configured),
                opt(c.measured),
                c.reference_featgenn.to_string(),
                c.reference_random.to_string(),
                c.reference_autofeat.to_string(),
                c.reference_nfs.to_string(),
                c.reference_difer.to_string(),
                c.reference_source.to_string(),
            ]
        })
        .collect();
    report::write_rows(
        &dir.join("feature_counts.csv"),
        &[
            "dataset",
            "featgenn_configured",
            "featgenn_measured",
            "reference_featgenn",
            "reference_random",
            "reference_autofeat",
            "reference_nfs",
            "reference_difer",
            "reference_source",
        ],
        &count_rows,
    )?;
    report::write_json(&dir.join("feature_counts.json"), &counts)?;
    report::write_results(&dir, &table)?;
    write_timings(&dir, &timings)?;
    Ok(CommandOutput {
        table,
        failures,
        out_dir: dir,
    })
}
