//! Acceptance criteria 1-8, one PASS/FAIL line each.
//!
//! Criteria 2-4 run the real datasets at the stated budget (about half an hour
//! on one core). Failures are printed, not raised, so the rest of the suite
//! still runs; set `FEATGENN_ACCEPTANCE_STRICT=1` to turn any FAIL into a
//! non-zero exit.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use featgenn_cli::{cmd_baseline, cmd_bench, cmd_compare_pooling, cmd_run, ExperimentConfig, Overrides};
use featgenn_core::dataset::Dataset;
use featgenn_core::eval::f1_score;
use featgenn_core::netgen::{
    build_pool_plan, correlation_pool, max_pool, update_pool_plans, GeneratorConfig, PoolPlan,
};
use featgenn_core::stats::{
    correlation_matrix, correlation_scores, mrmr_select, mutual_information, pearson, CorrelationScores,
};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const DATASETS: [&str; 4] = ["SpamBase", "Ionosphere", "SpectF", "German Credit"];

struct Verdict {
    id: usize,
    pass: bool,
    detail: String,
}

fn config() -> ExperimentConfig {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/default.toml");
    ExperimentConfig::load(&path).expect("default config loads")
}

fn out_dir(name: &str) -> PathBuf {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join("acceptance").join(name);
    let _ = std::fs::remove_dir_all(&dir);
    dir
}

fn with_out(mut cfg: ExperimentConfig, name: &str) -> ExperimentConfig {
    cfg.apply(&Overrides {
        out: Some(out_dir(name)),
        ..Default::default()
    })
    .expect("valid overrides");
    cfg
}

// ---- independent oracles ----

fn oracle_pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let cov: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let vy: f64 = y.iter().map(|b| (b - my) * (b - my)).sum();
    if vx == 0.0 || vy == 0.0 {
        0.0
    } else {
        (cov / (vx.sqrt() * vy.sqrt())).clamp(-1.0, 1.0)
    }
}

fn oracle_f1(t: &[usize], p: &[usize], positive: usize) -> f64 {
    let (mut tp, mut fp, mut fn_) = (0.0, 0.0, 0.0);
    for (a, b) in t.iter().zip(p) {
        match (*a == positive, *b == positive) {
            (true, true) => tp += 1.0,
            (false, true) => fp += 1.0,
            (true, false) => fn_ += 1.0,
            _ => {}
        }
    }
    let precision = if tp + fp > 0.0 { tp / (tp + fp) } else { 0.0 };
    let recall = if tp + fn_ > 0.0 { tp / (tp + fn_) } else { 0.0 };
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

fn entropy<K: Ord>(counts: &BTreeMap<K, usize>, n: f64) -> f64 {
    counts
        .values()
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum()
}

fn oracle_mi(x: &[f64], y: &[usize], bins: usize) -> f64 {
    let lo = x.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let code = |v: f64| {
        if hi <= lo {
            0
        } else {
            (((v - lo) / (hi - lo) * bins as f64).floor() as usize).min(bins - 1)
        }
    };
    let n = x.len() as f64;
    let mut hx = BTreeMap::new();
    let mut hy = BTreeMap::new();
    let mut hxy = BTreeMap::new();
    for (&v, &c) in x.iter().zip(y) {
        *hx.entry(code(v)).or_insert(0) += 1;
        *hy.entry(c).or_insert(0) += 1;
        *hxy.entry((code(v), c)).or_insert(0) += 1;
    }
    (entropy(&hx, n) + entropy(&hy, n) - entropy(&hxy, n)).max(0.0)
}

// ---- criteria ----

fn criterion_1() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = [0.0f64; 4];
    for _ in 0..100 {
        let n = rng.gen_range(2..30);
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-10.0..10.0)).collect();
        let y: Vec<f64> = (0..n).map(|_| rng.gen_range(-10.0..10.0)).collect();
        worst[0] = worst[0].max((pearson(&x, &y).unwrap() - oracle_pearson(&x, &y)).abs());

        let (rows, cols) = (rng.gen_range(2..15), rng.gen_range(1..7));
        let m = Array2::from_shape_fn((rows, cols), |_| rng.gen_range(-3.0..3.0));
        let all: Vec<usize> = (0..rows).collect();
        let cs = correlation_scores(&correlation_matrix(m.view(), &all).unwrap());
        for f in 0..cols {
            let cf: Vec<f64> = m.column(f).to_vec();
            let row_sum: f64 = (0..cols)
                .map(|k| {
                    if k == f {
                        // self-term: 1 unless the column is constant
                        if oracle_pearson(&cf, &cf) == 0.0 { 0.0 } else { 1.0 }
                    } else {
                        oracle_pearson(&cf, &m.column(k).to_vec())
                    }
                })
                .sum();
            worst[1] = worst[1].max((cs.cs[f] - row_sum / cols as f64).abs());
        }

        let len = rng.gen_range(1..50);
        let t: Vec<usize> = (0..len).map(|_| rng.gen_range(0..2)).collect();
        let p: Vec<usize> = (0..len).map(|_| rng.gen_range(0..2)).collect();
        worst[2] = worst[2].max((f1_score(&t, &p, 1).unwrap() - oracle_f1(&t, &p, 1)).abs());

        let len = rng.gen_range(2..80);
        let bins = rng.gen_range(2..12);
        let xv: Vec<f64> = (0..len).map(|_| rng.gen_range(-5.0..5.0)).collect();
        let yv: Vec<usize> = (0..len).map(|_| rng.gen_range(0..3)).collect();
        worst[3] = worst[3].max((mutual_information(&xv, &yv, bins).unwrap() - oracle_mi(&xv, &yv, bins)).abs());
    }
    let pass = worst[0] <= 1e-12 && worst[1] <= 1e-12 && worst[2] <= 1e-12 && worst[3] <= 1e-9;
    Verdict {
        id: 1,
        pass,
        detail: format!(
            "max |err| pearson {:.1e}, cs {:.1e}, f1 {:.1e}, mi {:.1e} over 100 instances each",
            worst[0], worst[1], worst[2], worst[3]
        ),
    }
}

struct Baselines {
    means: BTreeMap<String, f64>,
}

fn criterion_2() -> (Verdict, Baselines) {
    let cfg = with_out(config(), "baseline");
    let out = cmd_baseline(&cfg).expect("baseline runs");
    let targets = [
        ("SpamBase", 0.9102, 0.02),
        ("Ionosphere", 0.9233, 0.03),
        ("SpectF", 0.7750, 0.05),
        ("German Credit", 0.7401, 0.03),
        ("Credit_Default", 0.8037, 0.03),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    let mut means = BTreeMap::new();
    for (name, paper, tol) in targets {
        match out.table.rows.iter().find(|r| r.dataset == name && r.completed > 0) {
            Some(r) => {
                // Credit_Default is checked on weighted f1 whatever the primary averaging
                let got = if name == "Credit_Default" { r.mean_weighted_f1 } else { r.mean_f1 };
                let ok = (got - paper).abs() <= tol;
                pass &= ok;
                means.insert(name.to_string(), r.mean_f1);
                parts.push(format!("{name} {got:.4} vs {paper}±{tol} {}", if ok { "ok" } else { "MISS" }));
            }
            None => {
                pass = false;
                parts.push(format!("{name} unavailable"));
            }
        }
    }
    (
        Verdict {
            id: 2,
            pass,
            detail: parts.join("; "),
        },
        Baselines { means },
    )
}

fn criteria_3_and_4(base: &Baselines) -> (Verdict, Verdict) {
    let mut cfg = config();
    cfg.evolution.generations = 10;
    cfg.evolution.pop_size = 16;
    cfg.apply(&Overrides {
        datasets: DATASETS.iter().map(|s| s.to_string()).collect(),
        runs: Some(5),
        out: Some(out_dir("compare_pooling")),
        ..Default::default()
    })
    .unwrap();
    let out = cmd_compare_pooling(&cfg).expect("compare-pooling runs");
    let mut wins = 0;
    let mut never_below = true;
    let mut corr_wins = 0;
    let mut corr_ok = true;
    let mut p3 = Vec::new();
    let mut p4 = Vec::new();
    for name in DATASETS {
        let corr = out.table.find(name, "featgenn", "correlation").map(|r| r.mean_f1);
        let max = out.table.find(name, "featgenn", "max").map(|r| r.mean_f1);
        let b = base.means.get(name).copied();
        match (corr, b) {
            (Some(c), Some(b)) => {
                wins += usize::from(c > b);
                never_below &= c >= b - 0.01;
                p3.push(format!("{name} {c:.4} vs base {b:.4}"));
            }
            _ => {
                never_below = false;
                p3.push(format!("{name} missing"));
            }
        }
        match (corr, max) {
            (Some(c), Some(m)) => {
                corr_wins += usize::from(c > m);
                corr_ok &= c >= m - 0.005;
                p4.push(format!("{name} corr {c:.4} max {m:.4}"));
            }
            _ => {
                corr_ok = false;
                p4.push(format!("{name} missing"));
            }
        }
    }
    (
        Verdict {
            id: 3,
            pass: wins >= 3 && never_below,
            detail: format!("beats base on {wins}/4; {}", p3.join("; ")),
        },
        Verdict {
            id: 4,
            pass: corr_ok && corr_wins >= 2,
            detail: format!("corr > max on {corr_wins}/4; {}", p4.join("; ")),
        },
    )
}

fn criterion_5() -> Verdict {
    // monotone hall of fame: eps = 0, every dataset, five seeds, reduced budget
    let mut cfg = config();
    cfg.evolution.depreciation_eps = 0.0;
    cfg.evolution.generations = 4;
    cfg.evolution.pop_size = 8;
    cfg.evolution.elite_size = 2;
    cfg.forest.n_trees = 25;
    cfg.apply(&Overrides {
        datasets: DATASETS.iter().map(|s| s.to_string()).collect(),
        runs: Some(5),
        out: Some(out_dir("monotone")),
        ..Default::default()
    })
    .unwrap();
    let out = cmd_run(&cfg).expect("run completes");
    let mut checked = 0;
    let mut monotone = true;
    for entry in std::fs::read_dir(&out.out_dir).unwrap() {
        let path = entry.unwrap().path();
        let name = path.file_name().unwrap().to_string_lossy().to_string();
        if !name.starts_with("history_") {
            continue;
        }
        let mut rd = csv::Reader::from_path(&path).unwrap();
        let scores: Vec<f64> = rd.records().map(|r| r.unwrap()[1].parse().unwrap()).collect();
        monotone &= scores.windows(2).all(|w| w[1] >= w[0]);
        checked += 1;
    }
    monotone &= checked == DATASETS.len() * 5;

    // determinism: two identical executions, byte-identical results.json
    let mut det = config();
    det.evolution.generations = 2;
    det.evolution.pop_size = 6;
    det.evolution.elite_size = 2;
    det.evolution.tournament_opponents = 2;
    let mut bytes = Vec::new();
    for i in 0..2 {
        let mut c = det.clone();
        c.apply(&Overrides {
            datasets: vec!["Ionosphere".into()],
            runs: Some(1),
            seed: Some(42),
            out: Some(out_dir(&format!("determinism_{i}"))),
            ..Default::default()
        })
        .unwrap();
        let o = cmd_run(&c).unwrap();
        bytes.push(std::fs::read(o.out_dir.join("results.json")).unwrap());
    }
    let identical = bytes[0] == bytes[1];
    Verdict {
        id: 5,
        pass: monotone && identical,
        detail: format!(
            "{checked} histories non-decreasing: {monotone}; repeated run results.json identical: {identical}"
        ),
    }
}

fn is_partition(plan: &PoolPlan, positions: usize) -> bool {
    let mut all: Vec<usize> = plan.groups.iter().flatten().copied().collect();
    all.sort_unstable();
    all == (0..positions).collect::<Vec<_>>()
}

fn criterion_6() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut partitions = true;
    for _ in 0..100 {
        let (rows, d, k) = (rng.gen_range(3..20), rng.gen_range(1..12), rng.gen_range(2..5));
        let x = Array2::from_shape_fn((rows, d), |_| rng.gen_range(-1.0..1.0));
        let m = correlation_matrix(x.view(), &(0..rows).collect::<Vec<_>>()).unwrap();
        let plan = build_pool_plan(&m, k);
        partitions &= is_partition(&plan, d) && plan.groups.iter().all(|g| g.len() <= k);
    }

    let col: Vec<f64> = (0..10).map(|_| rng.gen_range(-4.0..4.0)).collect();
    let act = Array2::from_shape_fn((10, 3), |(r, _)| col[r]);
    let plan = PoolPlan {
        layer: 0,
        groups: vec![vec![0, 1, 2]],
        scores: CorrelationScores { cs: vec![0.9, -0.2, 0.4] },
    };
    let pooled = correlation_pool(act.view(), &plan, &plan.scores).unwrap();
    let identity = pooled.column(0).iter().zip(&col).all(|(a, b)| (a - b).abs() < 1e-12);

    let mut max_ok = true;
    for _ in 0..1000 {
        let len = rng.gen_range(1..25);
        let k = rng.gen_range(1..6);
        let row: Vec<f64> = (0..len).map(|_| rng.gen_range(-9.0..9.0)).collect();
        let got = max_pool(Array2::from_shape_vec((1, len), row.clone()).unwrap().view(), k);
        for (g, out) in got.row(0).iter().enumerate() {
            let mut best = f64::NEG_INFINITY;
            for p in g * k..((g + 1) * k).min(len) {
                if row[p] > best {
                    best = row[p];
                }
            }
            max_ok &= *out == best;
        }
        max_ok &= got.ncols() == len.div_ceil(k);
    }

    let a: Vec<f64> = (0..30).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let b: Vec<f64> = (0..30).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let x = Array2::from_shape_fn((30, 4), |(r, c)| if c % 2 == 0 { a[r] } else { b[r] });
    let cfg = GeneratorConfig::default();
    let plans = update_pool_plans(None, &cfg, x.view(), 1.0, 0).unwrap();
    let dup_grouped = plans[0].groups == vec![vec![0, 2], vec![1, 3]];
    Verdict {
        id: 6,
        pass: partitions && identity && max_ok && dup_grouped,
        detail: format!(
            "partitions {partitions}; identical-column pool {identity}; max_pool oracle x1000 {max_ok}; duplicates grouped {:?}",
            plans[0].groups
        ),
    }
}

fn criterion_7() -> Verdict {
    let x = ndarray::array![
        [0.0, 0.0, 0.0],
        [0.0, 0.0, 0.0],
        [0.0, 0.0, 1.0],
        [1.0, 1.0, 0.0],
        [1.0, 1.0, 1.0],
        [1.0, 1.0, 1.0],
        [1.0, 1.0, 0.0],
        [1.0, 1.0, 1.0]
    ];
    let d = Dataset::from_parts("dup", x, vec![0, 0, 0, 0, 1, 1, 1, 1]).unwrap();
    let picks = mrmr_select(&d, 2, 2).unwrap();
    let dup_ok = picks == vec![0, 2];

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut first_ok = 0;
    for _ in 0..50 {
        let (n, cols) = (rng.gen_range(10..60), rng.gen_range(2..8));
        let y: Vec<usize> = (0..n).map(|i| if i < 2 { i } else { rng.gen_range(0..2) }).collect();
        let x = Array2::from_shape_fn((n, cols), |(r, c)| rng.gen_range(-1.0..1.0) + (c % 3) as f64 * y[r] as f64);
        let d = Dataset::from_parts("r", x.clone(), y.clone()).unwrap();
        let mi: Vec<f64> = (0..cols).map(|c| oracle_mi(&x.column(c).to_vec(), &y, 10)).collect();
        let mut arg = 0;
        for c in 1..cols {
            if mi[c] > mi[arg] + 1e-12 {
                arg = c;
            }
        }
        first_ok += usize::from(mrmr_select(&d, 1, 10).unwrap()[0] == arg);
    }
    Verdict {
        id: 7,
        pass: dup_ok && first_ok == 50,
        detail: format!("duplicate instance picks {picks:?}; first pick = argmax MI on {first_ok}/50"),
    }
}

fn criterion_8() -> Verdict {
    let mut cfg = config();
    cfg.evolution.generations = 1;
    cfg.evolution.pop_size = 4;
    cfg.evolution.elite_size = 1;
    cfg.evolution.tournament_opponents = 2;
    cfg.forest.n_trees = 10;
    let cfg = {
        let mut c = with_out(cfg, "bench");
        c.experiment.runs = 1;
        c
    };
    let out = cmd_bench(&cfg).expect("bench runs");
    let mut rd = csv::Reader::from_path(out.out_dir.join("feature_counts.csv")).unwrap();
    let mut configured_ok = true;
    let mut measured_ok = true;
    let mut measured = 0;
    let mut cells = Vec::new();
    for rec in rd.records() {
        let rec = rec.unwrap();
        let reference: usize = rec[3].parse().unwrap();
        configured_ok &= rec[1].parse::<usize>().ok() == Some(reference);
        if !rec[2].is_empty() {
            measured += 1;
            measured_ok &= rec[2].parse::<usize>().unwrap() == reference;
        }
        cells.push(format!("{} {}/{}/{}", &rec[0], &rec[1], if rec[2].is_empty() { "-" } else { &rec[2] }, reference));
    }
    Verdict {
        id: 8,
        pass: configured_ok && measured_ok && measured == DATASETS.len(),
        detail: format!(
            "configured/measured/paper: {}; measured on {measured} of 6 (others have no data)",
            cells.join(", ")
        ),
    }
}

fn main() {
    let strict = std::env::var("FEATGENN_ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    let start = Instant::now();
    let mut verdicts = vec![criterion_1()];
    let (v2, base) = criterion_2();
    verdicts.push(v2);
    let (v3, v4) = criteria_3_and_4(&base);
    verdicts.push(v3);
    verdicts.push(v4);
    verdicts.push(criterion_5());
    verdicts.push(criterion_6());
    verdicts.push(criterion_7());
    verdicts.push(criterion_8());
    verdicts.sort_by_key(|v| v.id);
    println!();
    for v in &verdicts {
        println!("criterion {}: {} - {}", v.id, if v.pass { "PASS" } else { "FAIL" }, v.detail);
    }
    let failed = verdicts.iter().filter(|v| !v.pass).count();
    println!(
        "acceptance: {} passed, {failed} failed in {:.0}s",
        verdicts.len() - failed,
        start.elapsed().as_secs_f64()
    );
    if strict && failed > 0 {
        std::process::exit(1);
    }
}
