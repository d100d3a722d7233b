//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use masktrack_core::lta::{spatial_cost, temporal_cost};
use masktrack_core::metrics::evaluate;
use masktrack_core::model::{PipelineConfig, TrackedMask};
use masktrack_core::pipeline::{Association, IdealInputs};
use masktrack_core::raster::{warp_mask, FlowField};
use masktrack_core::sta::{hungarian_min, CostMatrix};
use masktrack_core::synth::{benchmark_spec, generate, preset, single_gap_spec};
use masktrack_core::BinaryMask;

type Outcome = Result<String, String>;

fn check(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn brute_force(c: &CostMatrix) -> (f64, Vec<(usize, usize)>) {
    let (r, k) = (c.rows(), c.cols());
    let transpose = r > k;
    let (small, large) = if transpose { (k, r) } else { (r, k) };
    let mut best = (f64::INFINITY, Vec::new());
    let mut perm: Vec<usize> = Vec::new();
    let mut used = vec![false; large];
    fn rec(
        c: &CostMatrix,
        small: usize,
        large: usize,
        transpose: bool,
        perm: &mut Vec<usize>,
        used: &mut [bool],
        best: &mut (f64, Vec<(usize, usize)>),
    ) {
        if perm.len() == small {
            let mut pairs: Vec<(usize, usize)> = perm
                .iter()
                .enumerate()
                .map(|(s, &l)| if transpose { (l, s) } else { (s, l) })
                .collect();
            pairs.sort();
            let total: f64 = pairs.iter().map(|&(i, j)| c.get(i, j)).sum();
            if total < best.0 || (total == best.0 && pairs < best.1) {
                *best = (total, pairs);
            }
            return;
        }
        for l in 0..large {
            if !used[l] {
                used[l] = true;
                perm.push(l);
                rec(c, small, large, transpose, perm, used, best);
                perm.pop();
                used[l] = false;
            }
        }
    }
    rec(c, small, large, transpose, &mut perm, &mut used, &mut best);
    best
}

fn hungarian_vs_exhaustive() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for trial in 0..1000 {
        let r = rng.gen_range(1..=7);
        let k = rng.gen_range(1..=7);
        // half the matrices use small integers so optimal ties are common
        let integer = trial % 2 == 0;
        let vals: Vec<f64> = (0..r * k)
            .map(|_| if integer { rng.gen_range(0..10) as f64 } else { rng.gen_range(-1.0..1.0) })
            .collect();
        let c = CostMatrix::from_fn(r, k, |i, j| vals[i * k + j]);
        let got = hungarian_min(&c);
        let mut pairs = got.pairs.clone();
        pairs.sort();
        let (best, best_pairs) = brute_force(&c);
        let total: f64 = pairs.iter().map(|&(i, j)| c.get(i, j)).sum();
        check(pairs.len() == r.min(k), format!("trial {trial}: {} pairs for {r}x{k}", pairs.len()))?;
        check(total == best, format!("trial {trial}: cost {total} vs optimum {best}"))?;
        check(pairs == best_pairs, format!("trial {trial}: {pairs:?} vs {best_pairs:?}"))?;
    }
    let t = start.elapsed();
    check(t < Duration::from_secs(5), format!("took {t:?}"))?;
    Ok(format!("1000 matrices up to 7x7 identical to exhaustive search in {t:.2?}"))
}

fn random_mask(rng: &mut ChaCha8Rng, w: u32, h: u32) -> Vec<bool> {
    let p = rng.gen_range(0.0..1.0);
    (0..w * h).map(|_| rng.gen_bool(p)).collect()
}

fn mask_ops_vs_dense() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for trial in 0..500 {
        let w = rng.gen_range(1..=64u32);
        let h = rng.gen_range(1..=64u32);
        let (da, db) = (random_mask(&mut rng, w, h), random_mask(&mut rng, w, h));
        let a = BinaryMask::from_dense(w, h, &da).unwrap();
        let b = BinaryMask::from_dense(w, h, &db).unwrap();
        let idx = |x: u32, y: u32| (x * h + y) as usize;

        let area = da.iter().filter(|&&v| v).count() as u64;
        check(a.area() == area, format!("trial {trial}: area"))?;
        let inter = da.iter().zip(&db).filter(|(x, y)| **x && **y).count() as u64;
        let union = da.iter().zip(&db).filter(|(x, y)| **x || **y).count() as u64;
        let iou = if union == 0 { 0.0 } else { inter as f64 / union as f64 };
        check(a.iou(&b).unwrap() == iou, format!("trial {trial}: IoU"))?;

        let (mut sx, mut sy) = (0u64, 0u64);
        for x in 0..w {
            for y in 0..h {
                if da[idx(x, y)] {
                    sx += x as u64;
                    sy += y as u64;
                }
            }
        }
        match a.centroid() {
            Ok(c) => check(
                area > 0 && c == (sx as f64 / area as f64, sy as f64 / area as f64),
                format!("trial {trial}: centroid {c:?}"),
            )?,
            Err(_) => check(area == 0, format!("trial {trial}: centroid failed"))?,
        }

        let vectors: Vec<[f32; 2]> = (0..w * h)
            .map(|_| [rng.gen_range(-6.0..6.0), rng.gen_range(-6.0..6.0)])
            .collect();
        let flow = FlowField::new(w, h, vectors).unwrap();
        let mut warped = vec![false; (w * h) as usize];
        for x in 0..w {
            for y in 0..h {
                if da[idx(x, y)] {
                    let [u, v] = flow.at(x, y);
                    let (nx, ny) = (x as i64 + u.round() as i64, y as i64 + v.round() as i64);
                    if (0..w as i64).contains(&nx) && (0..h as i64).contains(&ny) {
                        warped[idx(nx as u32, ny as u32)] = true;
                    }
                }
            }
        }
        check(warp_mask(&a, &flow).unwrap().to_dense() == warped, format!("trial {trial}: warp"))?;
    }
    Ok("IoU, area, centroid and warp equal the dense oracle on 500 masks".into())
}

fn square(frame: u32, id: u32) -> TrackedMask {
    TrackedMask { frame, track_id: id, class_id: 1, mask: BinaryMask::rect(32, 32, 4, 4, 10, 10) }
}

fn metric_fixtures() -> Outcome {
    let gt: Vec<TrackedMask> = (0..4).map(|f| square(f, 1)).collect();
    let perfect = evaluate(&gt, &gt, None).map_err(|e| e.to_string())?;
    for (name, v) in [
        ("HOTA", perfect.hota),
        ("DetA", perfect.deta),
        ("AssA", perfect.assa),
        ("sMOTSA", perfect.smotsa),
        ("MOTSA", perfect.motsa),
        ("IDF1", perfect.idf1),
    ] {
        check((v - 1.0).abs() <= 1e-9, format!("perfect {name} = {v}"))?;
    }
    check(perfect.idsw == 0, "perfect IDSw")?;

    let split: Vec<TrackedMask> = (0..4).map(|f| square(f, if f < 2 { 1 } else { 2 })).collect();
    let r = evaluate(&split, &gt, None).map_err(|e| e.to_string())?;
    check((r.hota - 0.5f64.sqrt()).abs() <= 1e-9, format!("split HOTA = {}", r.hota))?;
    check(r.idsw == 1, format!("split IDSw = {}", r.idsw))?;

    let empty = evaluate(&[], &gt, None).map_err(|e| e.to_string())?;
    for (name, v) in [
        ("HOTA", empty.hota),
        ("DetA", empty.deta),
        ("AssA", empty.assa),
        ("sMOTSA", empty.smotsa),
        ("MOTSA", empty.motsa),
        ("IDF1", empty.idf1),
    ] {
        check(v == 0.0, format!("empty {name} = {v}"))?;
    }
    Ok(format!("perfect = 1, split HOTA = {:.12} with IDSw 1, empty = 0", r.hota))
}

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_masktrack")
}

fn masktrack(args: &[&str]) -> Result<String, String> {
    let out = Command::new(bin()).args(args).output().map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!("masktrack {}: {}", args.join(" "), String::from_utf8_lossy(&out.stderr)));
    }
    Ok(String::from_utf8_lossy(&out.stdout).into_owned())
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn read_metric(dir: &Path, key: &str) -> Result<f64, String> {
    let text = std::fs::read_to_string(dir.join("metrics.txt")).map_err(|e| e.to_string())?;
    text.lines()
        .find_map(|l| l.strip_prefix(&format!("{key}=")))
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| format!("no {key} in metrics"))
}

fn end_to_end(work: &Path) -> Outcome {
    let start = Instant::now();
    let seqs = work.join("e2e");
    masktrack(&["synth", "--preset", "lanes", "--count", "5", "--seed", "100", "--out", p(&seqs)])?;
    let mut dirs: Vec<PathBuf> = std::fs::read_dir(&seqs)
        .map_err(|e| e.to_string())?
        .map(|e| e.unwrap().path())
        .collect();
    dirs.sort();
    check(dirs.len() == 5, format!("{} sequences", dirs.len()))?;
    let dir_args: Vec<&str> = dirs.iter().map(|d| p(d)).collect();
    let (full, short) = (work.join("e2e-full"), work.join("e2e-short"));
    let mut run = vec!["run"];
    run.extend(&dir_args);
    masktrack(&[&run[..], &["--out", p(&full)]].concat())?;
    masktrack(&[&run[..], &["--out", p(&short), "--disable-lta"]].concat())?;

    let mut assa_drops = Vec::new();
    for d in &dirs {
        let name = d.file_name().unwrap().to_str().unwrap();
        let mut scores = Vec::new();
        for res in [&full, &short] {
            let ev = res.join(format!("{name}-eval"));
            let pred = res.join(format!("{name}.txt"));
            masktrack(&["eval", "--pred", p(&pred), "--gt", p(d), "--out", p(&ev)])?;
            scores.push((read_metric(&ev, "hota")?, read_metric(&ev, "assa")?));
        }
        check(scores[0].0 == 1.0, format!("{name}: HOTA {}", scores[0].0))?;
        check(scores[1].1 < scores[0].1, format!("{name}: AssA {} without LTA", scores[1].1))?;
        assa_drops.push(format!("{:.3}", scores[1].1));
    }
    let t = start.elapsed();
    check(t < Duration::from_secs(60), format!("took {t:?}"))?;
    Ok(format!("HOTA 1.0 on 5 scenarios; AssA without LTA {}; {t:.2?}", assa_drops.join("/")))
}

fn oracle_ordering() -> Outcome {
    let cfg = PipelineConfig::default();
    let mut lines = Vec::new();
    for seed in 0..5 {
        let s = generate(&benchmark_spec(seed, true)).map_err(|e| e.to_string())?;
        let ideal = IdealInputs::new(&s, 1);
        let hota = |mode| -> Result<f64, String> {
            let r = ideal.run(&cfg, mode).map_err(|e| e.to_string())?;
            Ok(ideal.evaluate(&r).map_err(|e| e.to_string())?.hota)
        };
        let (run, lta, slta) = (
            hota(Association::Full)?,
            hota(Association::OracleLta)?,
            hota(Association::OracleSlta)?,
        );
        check(run <= lta && lta <= slta, format!("seed {seed}: {run} / {lta} / {slta}"))?;
        lines.push(format!("{run:.3}<={lta:.3}<={slta:.3}"));
    }
    Ok(format!("run <= oracle LTA <= oracle SLTA: {}", lines.join(", ")))
}

fn track_count(spec: masktrack_core::synth::ScenarioSpec) -> Result<usize, String> {
    let s = generate(&spec).map_err(|e| e.to_string())?;
    let r = IdealInputs::new(&s, 0)
        .run(&PipelineConfig::default(), Association::Full)
        .map_err(|e| e.to_string())?;
    Ok(r.tracks.len())
}

fn admissibility_gating() -> Outcome {
    let cfg = PipelineConfig::default();
    for (name, expected) in [("gap2s", (2.0, None)), ("jump", (0.6, Some(0.21)))] {
        let spec = preset(name, 0).map_err(|e| e.to_string())?;
        let s = generate(&spec).map_err(|e| e.to_string())?;
        let ideal = IdealInputs::new(&s, 0);
        let r = ideal.run(&cfg, Association::ShortTermOnly).map_err(|e| e.to_string())?;
        check(r.tracks.len() == 2, format!("{name}: {} tracklets", r.tracks.len()))?;
        let (a, b) = (&r.tracks[0], &r.tracks[1]);
        let ct = temporal_cost(a, b, s.meta.fps);
        check((ct - expected.0).abs() < 1e-12, format!("{name}: temporal cost {ct}"))?;
        if let Some(cs) = expected.1 {
            let got = spatial_cost(a, b, &s.meta).map_err(|e| e.to_string())?;
            check((got - cs).abs() < 1e-12, format!("{name}: spatial cost {got}"))?;
        }
        let n = ideal.run(&cfg, Association::Full).map_err(|e| e.to_string())?.tracks.len();
        check(n == 2, format!("{name}: merged into {n} track(s)"))?;
    }
    // the same gaps just inside the bounds do merge
    check(track_count(single_gap_spec(1, 14, 0))? == 1, "1.5 s gap not merged")?;
    check(track_count(single_gap_spec(6, 5, 0))? == 1, "0.18 jump not merged")?;
    Ok("2.0 s gap and 0.21 jump stay split; 1.5 s and 0.18 controls merge".into())
}

fn theta_l_plateau() -> Outcome {
    let grid: Vec<f64> = (0..10).map(|k| k as f64 / 10.0).collect();
    let mut summary = Vec::new();
    for seed in 0..5 {
        let s = generate(&benchmark_spec(200 + seed, false)).map_err(|e| e.to_string())?;
        let ideal = IdealInputs::new(&s, 0);
        let mut hotas = Vec::new();
        for &t in &grid {
            let cfg = PipelineConfig { theta_l: t, ..Default::default() };
            let r = ideal.run(&cfg, Association::Full).map_err(|e| e.to_string())?;
            hotas.push(ideal.evaluate(&r).map_err(|e| e.to_string())?.hota);
        }
        let plateau = &hotas[1..=5];
        check(plateau.iter().all(|&h| h == plateau[0]), format!("seed {seed}: {hotas:?}"))?;
        summary.push(format!("{:.3}", plateau[0]));
    }
    Ok(format!("HOTA constant for theta_l in [0.1, 0.5]: {}", summary.join("/")))
}

fn tree_bytes(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let path = e.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                out.push((path.strip_prefix(dir).unwrap().to_path_buf(), std::fs::read(&path).unwrap()));
            }
        }
    }
    out.sort();
    out
}

fn determinism(work: &Path) -> Outcome {
    let mut trees = Vec::new();
    for (k, jobs) in ["1", "4"].iter().enumerate() {
        let seqs = work.join(format!("det-seqs-{k}"));
        let res = work.join(format!("det-res-{k}"));
        masktrack(&["synth", "--preset", "noisy", "--count", "3", "--seed", "7", "--out", p(&seqs)])?;
        let dirs: Vec<String> = (7..10).map(|s| p(&seqs.join(format!("noisy-{s}"))).to_string()).collect();
        let mut args = vec!["run", "--seed", "7", "--jobs", jobs, "--out", p(&res)];
        args.extend(dirs.iter().map(|s| s.as_str()));
        masktrack(&args)?;
        trees.push((tree_bytes(&seqs), tree_bytes(&res)));
    }
    check(!trees[0].1.is_empty(), "no result files")?;
    check(trees[0].0 == trees[1].0, "synthetic inputs differ between runs")?;
    check(trees[0].1 == trees[1].1, "result files differ between runs")?;
    Ok(format!("{} result files byte-identical across runs and job counts", trees[0].1.len()))
}

fn main() {
    let work = tempfile::tempdir().expect("temp dir");
    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome>)> = vec![
        ("hungarian", Box::new(hungarian_vs_exhaustive)),
        ("mask-ops", Box::new(mask_ops_vs_dense)),
        ("metric-fixtures", Box::new(metric_fixtures)),
        ("end-to-end", Box::new(|| end_to_end(work.path()))),
        ("oracle-ordering", Box::new(oracle_ordering)),
        ("admissibility", Box::new(admissibility_gating)),
        ("theta-l-plateau", Box::new(theta_l_plateau)),
        ("determinism", Box::new(|| determinism(work.path()))),
    ];
    let mut failed = 0;
    for (k, (name, f)) in criteria.iter().enumerate() {
        match f() {
            Ok(msg) => println!("PASS [{}] {name}: {msg}", k + 1),
            Err(msg) => {
                failed += 1;
                println!("FAIL [{}] {name}: {msg}", k + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
