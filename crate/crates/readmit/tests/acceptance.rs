//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.
#![allow(clippy::needless_range_loop)]


use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use rand::Rng;
use readmit::stages::{read_model, read_tfidf_model};
use readmit::synth::PLANTED_TOKENS;
use readmit_core::cohort::{stratified_split, Split, SplitRatios};
use readmit_core::eval::{auc, metrics, Averaging, EvalReport, Metric};
use readmit_core::features::{embed_document_mock, pca_fit, DOC_DIM};
use readmit_core::linalg::Matrix;
use readmit_core::models::{gradient_check, logreg_top_features, Dataset, GradientModel};
use readmit_core::rng::seeded;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within_time(name: &str, limit: Duration, f: impl FnOnce() -> Outcome) -> Outcome {
    let start = Instant::now();
    let detail = f()?;
    let took = start.elapsed();
    ensure(took < limit, || format!("{name} took {took:.1?}, limit {limit:?}"))?;
    Ok(format!("{detail} in {took:.2?}"))
}

// Metric oracle: hand-rolled per-class counting.

struct OracleScores {
    accuracy: f64,
    precision: [f64; 3],
    recall: [f64; 3],
    f1: [f64; 3],
}

fn oracle_metrics(labels: &[u8], preds: &[u8]) -> OracleScores {
    let n = labels.len() as f64;
    let mut per_class = Vec::new();
    for class in [0u8, 1] {
        let tp = labels.iter().zip(preds).filter(|(l, p)| **l == class && **p == class).count() as f64;
        let predicted = preds.iter().filter(|p| **p == class).count() as f64;
        let actual = labels.iter().filter(|l| **l == class).count() as f64;
        let p = if predicted == 0.0 { 0.0 } else { tp / predicted };
        let r = if actual == 0.0 { 0.0 } else { tp / actual };
        let f = if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) };
        per_class.push((p, r, f, actual / n));
    }
    let correct = labels.iter().zip(preds).filter(|(l, p)| l == p).count() as f64;
    let (neg, pos) = (per_class[0], per_class[1]);
    OracleScores {
        accuracy: correct / n,
        precision: [pos.0, (neg.0 + pos.0) / 2.0, neg.3 * neg.0 + pos.3 * pos.0],
        recall: [pos.1, (neg.1 + pos.1) / 2.0, neg.3 * neg.1 + pos.3 * pos.1],
        f1: [pos.2, (neg.2 + pos.2) / 2.0, neg.3 * neg.2 + pos.3 * pos.2],
    }
}

fn metric_oracle() -> Outcome {
    let mut rng = seeded(101, 0);
    let mut worst = 0.0f64;
    for case in 0..1000 {
        let n = rng.gen_range(1..=500);
        let prevalence: f64 = rng.gen_range(0.0..=1.0);
        let flip: f64 = rng.gen_range(0.0..=1.0);
        let labels: Vec<u8> = (0..n).map(|_| u8::from(rng.gen_bool(prevalence))).collect();
        let preds: Vec<u8> = labels.iter().map(|l| if rng.gen_bool(flip) { 1 - l } else { *l }).collect();
        let got = metrics(&labels, &preds).map_err(|e| format!("case {case}: {e}"))?;
        let want = oracle_metrics(&labels, &preds);
        for (i, s) in [got.binary, got.macro_avg, got.weighted].iter().enumerate() {
            for (a, b) in [
                (s.accuracy, want.accuracy),
                (s.precision, want.precision[i]),
                (s.recall, want.recall[i]),
                (s.f1, want.f1[i]),
            ] {
                worst = worst.max((a - b).abs());
            }
        }
        ensure(got.weighted.recall == got.weighted.accuracy, || {
            format!("case {case}: weighted recall {} != accuracy {}", got.weighted.recall, got.weighted.accuracy)
        })?;
    }
    ensure(worst <= 1e-12, || format!("max deviation {worst:e}"))?;
    Ok(format!("1000 cases, max deviation {worst:e}"))
}

// AUC oracle: exact pair counting in integers.

fn pair_count_auc(labels: &[u8], scores: &[f64]) -> f64 {
    let (mut twice_credit, mut pairs) = (0u64, 0u64);
    for (i, &li) in labels.iter().enumerate() {
        for (j, &lj) in labels.iter().enumerate() {
            if li == 1 && lj == 0 {
                pairs += 1;
                twice_credit += match scores[i].partial_cmp(&scores[j]).unwrap() {
                    std::cmp::Ordering::Greater => 2,
                    std::cmp::Ordering::Equal => 1,
                    std::cmp::Ordering::Less => 0,
                };
            }
        }
    }
    twice_credit as f64 / (2 * pairs) as f64
}

fn auc_oracle() -> Outcome {
    let worked = auc(&[1, 0, 1, 0], &[0.9, 0.8, 0.4, 0.2]).map_err(|e| e.to_string())?;
    ensure(worked == 0.75, || format!("worked example gave {worked}"))?;
    let mut rng = seeded(202, 0);
    let mut worst = 0.0f64;
    let mut tied_cases = 0;
    for case in 0..500 {
        let n = rng.gen_range(2..=200);
        let mut labels: Vec<u8> = (0..n).map(|_| u8::from(rng.gen_bool(0.3))).collect();
        labels[0] = 1;
        labels[1] = 0;
        let ties = case % 2 == 0;
        let scores: Vec<f64> = (0..n)
            .map(|_| if ties { f64::from(rng.gen_range(0..8u8)) / 8.0 } else { rng.gen::<f64>() })
            .collect();
        if ties {
            tied_cases += 1;
        }
        let got = auc(&labels, &scores).map_err(|e| format!("case {case}: {e}"))?;
        worst = worst.max((got - pair_count_auc(&labels, &scores)).abs());
    }
    ensure(worst <= 1e-9, || format!("max deviation {worst:e}"))?;
    Ok(format!("worked example 0.75, 500 cases ({tied_cases} with ties), max deviation {worst:e}"))
}

// PCA oracle: cyclic Jacobi on the sample covariance.

fn jacobi_eigenvalues(mut a: Vec<Vec<f64>>) -> Vec<f64> {
    let n = a.len();
    for _sweep in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |j| *j != i).map(move |j| (i, j))).map(|(i, j)| a[i][j] * a[i][j]).sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| a[i][i]).collect();
    ev.sort_by(|x, y| y.total_cmp(x));
    ev
}

fn covariance(rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = rows.len();
    let d = rows[0].len();
    let mean: Vec<f64> = (0..d).map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / n as f64).collect();
    let mut c = vec![vec![0.0; d]; d];
    for r in rows {
        for i in 0..d {
            for j in 0..d {
                c[i][j] += (r[i] - mean[i]) * (r[j] - mean[j]);
            }
        }
    }
    for row in &mut c {
        for v in row {
            *v /= (n - 1) as f64;
        }
    }
    c
}

fn pca_oracle() -> Outcome {
    let hand = Matrix::from_rows(&[[1.0, 1.0], [-1.0, -1.0], [2.0, 2.0], [-2.0, -2.0]], 2).map_err(|e| e.to_string())?;
    let fit = pca_fit(&hand, 1).map_err(|e| e.to_string())?.model;
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let comp = fit.components.row(0);
    ensure((comp[0] - h).abs() < 1e-9 && (comp[1] - h).abs() < 1e-9, || format!("hand component {comp:?}"))?;
    let ev = fit.explained_variance[0];
    ensure((ev - 20.0 / 3.0).abs() < 1e-9, || format!("hand eigenvalue {ev}"))?;

    let mut rng = seeded(303, 0);
    let (mut orth, mut var_rel, mut recon) = (0.0f64, 0.0f64, 0.0f64);
    for case in 0..200 {
        let n = rng.gen_range(2..=100);
        let d = rng.gen_range(1..=30);
        let scales: Vec<f64> = (0..d).map(|_| rng.gen_range(0.1..5.0)).collect();
        let rows: Vec<Vec<f64>> = (0..n).map(|_| scales.iter().map(|s| s * rng.gen_range(-1.0..1.0)).collect()).collect();
        let x = Matrix::from_rows(&rows, d).map_err(|e| e.to_string())?;
        let k = (n - 1).min(d);
        let model = pca_fit(&x, k).map_err(|e| format!("case {case}: {e}"))?.model;
        let c = &model.components;
        for a in 0..k {
            for b in 0..k {
                let dot: f64 = c.row(a).iter().zip(c.row(b)).map(|(p, q)| p * q).sum();
                orth = orth.max((dot - if a == b { 1.0 } else { 0.0 }).abs());
            }
        }
        let eig = jacobi_eigenvalues(covariance(&rows));
        let proj = model.transform_rows(&x).map_err(|e| e.to_string())?;
        let floor = eig[0].abs() * 1e-10;
        for j in 0..k {
            let col: Vec<f64> = proj.iter_rows().map(|r| r[j]).collect();
            let m = col.iter().sum::<f64>() / n as f64;
            let var = col.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1) as f64;
            if eig[j] > floor {
                var_rel = var_rel.max((var - eig[j]).abs() / eig[j]);
                var_rel = var_rel.max((model.explained_variance[j] - eig[j]).abs() / eig[j]);
            }
        }
        for (i, r) in rows.iter().enumerate() {
            for f in 0..d {
                let back = model.mean[f] + (0..k).map(|j| proj.row(i)[j] * c.row(j)[f]).sum::<f64>();
                recon = recon.max((back - r[f]).abs());
            }
        }
    }
    ensure(orth <= 1e-8, || format!("orthonormality deviation {orth:e}"))?;
    ensure(var_rel <= 1e-6, || format!("variance relative deviation {var_rel:e}"))?;
    ensure(recon < 1e-8, || format!("reconstruction error {recon:e}"))?;
    Ok(format!("hand case exact, 200 matrices: orthonormality {orth:.1e}, variance {var_rel:.1e}, reconstruction {recon:.1e}"))
}

fn gradient_checks() -> Outcome {
    let mut rng = seeded(404, 0);
    let mut report = Vec::new();
    for (name, model, d) in [
        ("LOGREG", GradientModel::Logreg { l2: 1e-2 }, 10),
        ("MLP", GradientModel::Mlp { hidden: vec![3], l2: 1e-2 }, 4),
    ] {
        let n = 20;
        let features: Vec<f64> = (0..n * d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let labels: Vec<u8> = (0..n).map(|i| (i % 2) as u8).collect();
        let data = Dataset::new(Matrix::from_vec(n, d, features).map_err(|e| e.to_string())?, labels)
            .map_err(|e| e.to_string())?;
        let err = gradient_check(&model, &data, 1e-5, 10, 7).map_err(|e| e.to_string())?;
        ensure(err < 1e-4, || format!("{name} max relative error {err:e}"))?;
        report.push(format!("{name} {err:.1e}"));
    }
    Ok(format!("10 draws each, max relative error {}", report.join(", ")))
}

// Chunk/pool oracle: token vectors, chunking and pooling coded from scratch.

fn oracle_token_vector(token: &str, seed: u64) -> Vec<f64> {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in seed.to_le_bytes().iter().chain(token.as_bytes()) {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x100_0000_01b3);
    }
    let mut state = h;
    (0..768)
        .map(|_| {
            state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
            let mut z = state;
            z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
            z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
            z ^= z >> 31;
            (z >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
        })
        .collect()
}

fn oracle_document(tokens: &[String], seed: u64) -> (Vec<f64>, [usize; 4]) {
    let kept = &tokens[..tokens.len().min(2048)];
    let mut out = Vec::with_capacity(3072);
    let mut counts = [0; 4];
    for (c, count) in counts.iter_mut().enumerate() {
        let chunk: &[String] = if kept.len() > c * 512 { &kept[c * 512..kept.len().min((c + 1) * 512)] } else { &[] };
        *count = chunk.len();
        let mut sum = vec![0.0; 768];
        for t in chunk {
            for (s, v) in sum.iter_mut().zip(oracle_token_vector(t, seed)) {
                *s += v;
            }
        }
        if !chunk.is_empty() {
            for s in &mut sum {
                *s /= chunk.len() as f64;
            }
        }
        out.extend(sum);
    }
    (out, counts)
}

fn chunk_pool_oracle() -> Outcome {
    let mut rng = seeded(505, 0);
    let vocab: Vec<String> = (0..400).map(|i| format!("w{i}")).collect();
    let mut lengths = vec![0, 1, 511, 512, 513, 2047, 2048, 2049, 3000];
    while lengths.len() < 100 {
        lengths.push(rng.gen_range(0..=3000));
    }
    for (doc, len) in lengths.into_iter().enumerate() {
        let tokens: Vec<String> = (0..len).map(|_| vocab[rng.gen_range(0..vocab.len())].clone()).collect();
        let seed = doc as u64;
        let got = embed_document_mock(doc as u64, &tokens, seed).map_err(|e| e.to_string())?;
        let (want, counts) = oracle_document(&tokens, seed);
        ensure(got.vector.len() == DOC_DIM, || format!("doc {doc}: dimension {}", got.vector.len()))?;
        ensure(got.chunk_token_counts == counts, || format!("doc {doc}: counts {:?} vs {counts:?}", got.chunk_token_counts))?;
        ensure(got.vector == want, || format!("doc {doc} ({len} tokens) differs from oracle"))?;
        for (c, &count) in counts.iter().enumerate() {
            let zero = got.block(c).iter().all(|v| *v == 0.0);
            ensure(zero == (count == 0), || format!("doc {doc} chunk {c}: zero block {zero} with {count} tokens"))?;
        }
    }
    Ok("100 documents of 0 to 3000 tokens match bit for bit".into())
}

fn split_fidelity() -> Outcome {
    // i -> 2942 i mod 49083 is a bijection, so exactly 2,942 rows are positive.
    let items: Vec<(u64, u8)> = (0..49_083u64).map(|i| (1_000_000 + i * 7, u8::from(i * 2_942 % 49_083 < 2_942))).collect();
    ensure(items.iter().filter(|(_, l)| *l == 1).count() == 2_942, || "fixture positives".into())?;
    let (assignment, _) = stratified_split(&items, SplitRatios::default(), 7).map_err(|e| e.to_string())?;
    let mut size = BTreeMap::new();
    let mut pos = BTreeMap::new();
    for (id, label) in &items {
        let s = assignment.get(*id).ok_or("unassigned row")?;
        *size.entry(s).or_insert(0i64) += 1;
        *pos.entry(s).or_insert(0i64) += i64::from(*label);
    }
    let want = [(Split::Train, 34_358, 2_059), (Split::Val, 7_363, 442), (Split::Test, 7_362, 441)];
    for (s, n, p) in want {
        let (gn, gp) = (size[&s], pos[&s]);
        ensure((gn - n).abs() <= 1, || format!("{s} size {gn}, expected {n}"))?;
        ensure((gp - p).abs() <= 5, || format!("{s} positives {gp}, expected {p}"))?;
    }
    Ok(want.iter().map(|(s, _, _)| format!("{s} {} ({})", size[s], pos[s])).collect::<Vec<_>>().join(", "))
}

fn imbalance_edge() -> Outcome {
    let labels: Vec<u8> = (0..300).map(|i| u8::from(i % 50 < 3)).collect();
    let scores = vec![0.0; labels.len()];
    let (report, roc) = EvalReport::evaluate("ALL_NEGATIVE", 0, "TEST", Averaging::Binary, &labels, &scores, 0.5)
        .map_err(|e| e.to_string())?;
    let m = metrics(&labels, &vec![0; labels.len()]).map_err(|e| e.to_string())?;
    ensure(report.metrics.binary.precision == 0.0, || "precision not 0".into())?;
    ensure(report.metrics.binary.recall == 0.0, || "recall not 0".into())?;
    ensure(m.is_undefined(Metric::Precision, Averaging::Binary), || "precision not flagged".into())?;
    ensure(report.flags.iter().any(|f| f == "precision/binary"), || format!("flags {:?}", report.flags))?;
    let json = serde_json::to_string(&report).map_err(|e| e.to_string())?;
    let back: EvalReport = serde_json::from_str(&json).map_err(|e| e.to_string())?;
    ensure(back == report, || "report does not round-trip".into())?;
    ensure(report.auc == 0.5 && roc.points.len() == 2, || format!("auc {} over {} points", report.auc, roc.points.len()))?;
    Ok(format!("prevalence {:.2}, precision 0 flagged, recall 0, auc 0.5", 18.0 / 300.0))
}

// End-to-end runs through the binary.

struct Run {
    dir: PathBuf,
    steps: Vec<(String, String)>,
}

impl Run {
    fn cmd(&mut self, stage: &str, out: &str, args: &[&str]) -> Result<String, String> {
        let output = Command::new(env!("CARGO_BIN_EXE_readmit"))
            .current_dir(&self.dir)
            .arg(stage)
            .args(args)
            .output()
            .map_err(|e| e.to_string())?;
        let stdout = String::from_utf8_lossy(&output.stdout).into_owned();
        if !output.status.success() {
            return Err(format!("{stage} failed: {}", String::from_utf8_lossy(&output.stderr)));
        }
        self.steps.push((stage.to_string(), format!("{out}.manifest.json")));
        Ok(stdout)
    }

    fn pipeline(dir: &Path, signal: &str) -> Result<Self, String> {
        let mut r = Run { dir: dir.to_path_buf(), steps: Vec::new() };
        let s = ["--cohort", "cohort.csv", "--splits", "cohort.csv.splits.csv"];
        r.cmd("synth", "adm.csv", &["--n", "2000", "--prevalence", "0.06", "--signal", signal, "--seed", "7", "--admissions", "adm.csv", "--notes", "notes.csv"])?;
        r.cmd("cohort", "cohort.csv", &["--admissions", "adm.csv", "--notes", "notes.csv", "--out", "cohort.csv", "--seed", "7"])?;
        r.cmd("prep", "clean.csv", &["--cohort", "cohort.csv", "--out", "clean.csv"])?;
        r.cmd("featurize", "tfidf.csv", &["--cleaned", "clean.csv", "--splits", "cohort.csv.splits.csv", "--out", "tfidf.csv", "--representation", "tfidf"])?;
        r.cmd("train", "lr.json", &[&["--features", "tfidf.csv", "--out", "lr.json", "--model", "LOGREG", "--seed", "7", "--vocabulary", "tfidf.csv.tfidf.json"][..], &s].concat())?;
        r.cmd("evaluate", "lr.eval.json", &[&["--model", "lr.json", "--features", "tfidf.csv", "--out", "lr.eval.json"][..], &s].concat())?;
        r.cmd("featurize", "emb.csv", &["--cleaned", "clean.csv", "--splits", "cohort.csv.splits.csv", "--out", "emb.csv", "--representation", "embedding", "--provider", "mock", "--seed", "7"])?;
        r.cmd("pca", "pc.csv", &["--features", "emb.csv", "--splits", "cohort.csv.splits.csv", "--out", "pc.csv", "--k", "50"])?;
        r.cmd("train", "mlp.json", &[&["--features", "pc.csv", "--out", "mlp.json", "--model", "MLP", "--seed", "7"][..], &s].concat())?;
        r.cmd("evaluate", "mlp.eval.json", &[&["--model", "mlp.json", "--features", "pc.csv", "--out", "mlp.eval.json"][..], &s].concat())?;
        r.cmd("report", "report.csv", &["lr.eval.json", "mlp.eval.json", "--out", "report.csv"])?;
        Ok(r)
    }

    fn auc(&self, report: &str) -> Result<f64, String> {
        let text = fs::read_to_string(self.dir.join(report)).map_err(|e| e.to_string())?;
        let r: EvalReport = serde_json::from_str(&text).map_err(|e| e.to_string())?;
        Ok(r.auc)
    }
}

fn snapshot(dir: &Path) -> Result<BTreeMap<String, Vec<u8>>, String> {
    let mut files = BTreeMap::new();
    for entry in fs::read_dir(dir).map_err(|e| e.to_string())? {
        let path = entry.map_err(|e| e.to_string())?.path();
        let name = path.file_name().unwrap().to_string_lossy().into_owned();
        files.insert(name, fs::read(&path).map_err(|e| e.to_string())?);
    }
    Ok(files)
}

fn end_to_end(strong: &Run, strong_time: Duration, null: &Run, null_time: Duration) -> Outcome {
    let (lr, mlp) = (strong.auc("lr.eval.json")?, strong.auc("mlp.eval.json")?);
    let (lr0, mlp0) = (null.auc("lr.eval.json")?, null.auc("mlp.eval.json")?);
    let detail = format!(
        "signal 0.9: TF-IDF+LOGREG {lr:.4}, MOCK+PCA+MLP {mlp:.4} ({strong_time:.1?}); signal 0.5: {lr0:.4}, {mlp0:.4} ({null_time:.1?})"
    );
    let limit = Duration::from_secs(120);
    let band = |a: f64| (0.45..=0.55).contains(&a);
    ensure(lr >= 0.90 && mlp >= 0.90, || format!("{detail}; signal 0.9 AUC below 0.90"))?;
    ensure(band(lr0) && band(mlp0), || format!("{detail}; signal 0.5 AUC outside [0.45, 0.55]"))?;
    ensure(strong_time < limit && null_time < limit, || format!("{detail}; over 2 min"))?;
    Ok(detail)
}

fn determinism(run: &Run) -> Outcome {
    let before = snapshot(&run.dir)?;
    let mut replay = Run { dir: run.dir.clone(), steps: Vec::new() };
    for (stage, manifest) in &run.steps {
        replay.cmd(stage, "", &["--config", manifest])?;
    }
    let after = snapshot(&run.dir)?;
    ensure(before.keys().eq(after.keys()), || "replay produced a different file set".into())?;
    let changed: Vec<&String> = before.iter().filter(|(k, v)| after[*k] != **v).map(|(k, _)| k).collect();
    ensure(changed.is_empty(), || format!("files differ after replay: {changed:?}"))?;
    Ok(format!("{} stages replayed from manifests, {} files byte-identical", run.steps.len(), before.len()))
}

fn interpretability(run: &Run) -> Outcome {
    let model = read_model(&run.dir.join("lr.json")).map_err(|e| e.to_string())?;
    let tfidf = read_tfidf_model(&run.dir.join("tfidf.csv.tfidf.json")).map_err(|e| e.to_string())?;
    let top = logreg_top_features(&model, tfidf.terms(), 10).map_err(|e| e.to_string())?;
    let terms: Vec<&str> = top.positive.iter().map(|(t, _)| t.as_str()).collect();
    for token in PLANTED_TOKENS {
        ensure(terms.contains(&token), || format!("{token} missing from top-10 positives {terms:?}"))?;
    }
    let ranks: Vec<String> = PLANTED_TOKENS
        .iter()
        .map(|t| format!("{t} #{}", terms.iter().position(|x| x == t).unwrap() + 1))
        .collect();
    Ok(ranks.join(", "))
}

fn main() {
    let mut results: Vec<(&str, Outcome)> = vec![
        ("metric oracle", within_time("metric oracle", Duration::from_secs(5), metric_oracle)),
        ("auc oracle", within_time("auc oracle", Duration::from_secs(10), auc_oracle)),
        ("pca", within_time("pca", Duration::from_secs(30), pca_oracle)),
        ("gradient checks", within_time("gradient checks", Duration::from_secs(10), gradient_checks)),
        ("chunk/pool path", chunk_pool_oracle()),
    ];

    let strong_dir = tempfile::tempdir().expect("tempdir");
    let null_dir = tempfile::tempdir().expect("tempdir");
    let start = Instant::now();
    let strong = Run::pipeline(strong_dir.path(), "0.9");
    let strong_time = start.elapsed();
    let start = Instant::now();
    let null = Run::pipeline(null_dir.path(), "0.5");
    let null_time = start.elapsed();
    let e2e = match (&strong, &null) {
        (Ok(s), Ok(n)) => end_to_end(s, strong_time, n, null_time),
        (Err(e), _) | (_, Err(e)) => Err(e.clone()),
    };
    results.push(("end-to-end synthetic", e2e));
    results.push(("split fidelity", split_fidelity()));
    results.push(("imbalance edge", imbalance_edge()));
    match &strong {
        Ok(run) => {
            results.push(("interpretability", interpretability(run)));
            results.push(("determinism", determinism(run)));
        }
        Err(e) => {
            results.push(("interpretability", Err(format!("pipeline failed: {e}"))));
            results.push(("determinism", Err(format!("pipeline failed: {e}"))));
        }
    }

    let mut failed = 0;
    for (name, outcome) in &results {
        match outcome {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {name}: {detail}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
