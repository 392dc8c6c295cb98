use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use acorsis::cli::{parse_csv, write_csv, Table, EXIT_CONFIG, EXIT_CSV, EXIT_DEGENERATE, EXIT_SIZE};
use acorsis::simulate::{gen_design, gen_response, Case};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use tempfile::TempDir;

fn acorsis(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_acorsis"))
        .args(args)
        .env_remove("ACORSIS_THREADS")
        .output()
        .expect("binary runs")
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn write_table(dir: &Path, name: &str, y: &[f64], x: &[f64], p: usize) -> PathBuf {
    let n = y.len();
    let mut names = vec!["y".to_string()];
    let mut columns = vec![y.to_vec()];
    for j in 0..p {
        names.push(format!("x{}", j + 1));
        columns.push(x[j * n..(j + 1) * n].to_vec());
    }
    let path = dir.join(name);
    write_csv(&Table { names, columns }, std::fs::File::create(&path).unwrap()).unwrap();
    path
}

fn scalars(report: &str) -> BTreeMap<String, String> {
    report
        .lines()
        .take_while(|l| !l.starts_with("##"))
        .filter_map(|l| l.split_once(" = "))
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect()
}

/// Rows of the TSV block following `## name`, header included.
fn section<'a>(report: &'a str, name: &str) -> Vec<Vec<&'a str>> {
    let head = format!("## {name}");
    report
        .lines()
        .skip_while(|l| *l != head)
        .skip(1)
        .take_while(|l| !l.is_empty() && !l.starts_with("##"))
        .map(|l| l.split('\t').collect())
        .collect()
}

fn pearson_abs(u: &[f64], v: &[f64]) -> f64 {
    let n = u.len() as f64;
    let (mu, mv) = (u.iter().sum::<f64>() / n, v.iter().sum::<f64>() / n);
    let (mut suv, mut suu, mut svv) = (0.0, 0.0, 0.0);
    for (a, b) in u.iter().zip(v) {
        suv += (a - mu) * (b - mv);
        suu += (a - mu) * (a - mu);
        svv += (b - mv) * (b - mv);
    }
    if suu == 0.0 {
        return 0.0;
    }
    (suv / (suu * svv).sqrt()).abs()
}

#[test]
fn toy_product_response_ranks_its_parents_first() {
    let dir = TempDir::new().unwrap();
    let mut cols: [[f64; 10]; 4] = [
        [0.3, -1.1, 0.8, 1.9, -0.4, 0.2, -1.5, 0.9, 1.2, -0.7],
        [1.4, 0.6, -0.9, 0.5, -1.8, 1.1, 0.3, -0.2, -1.0, 0.7],
        [-0.5, 0.9, 1.3, -1.2, 0.4, -0.1, 0.8, 1.6, -0.6, -1.4],
        [0.2, 0.1, -0.3, 1.0, 1.5, -0.8, -1.2, 0.4, 0.6, -0.9],
    ];
    // centred so that raw and standardised products agree up to scale
    for c in cols.iter_mut() {
        let m = c.iter().sum::<f64>() / 10.0;
        c.iter_mut().for_each(|v| *v -= m);
    }
    let y: Vec<f64> = (0..10).map(|i| cols[0][i] * cols[1][i]).collect();
    let x: Vec<f64> = cols.iter().flatten().copied().collect();

    // brute force: every variable's best main or product correlation
    let brute: Vec<f64> = (0..4)
        .map(|j| {
            let mut best = pearson_abs(&cols[j], &y);
            for k in (0..4).filter(|&k| k != j) {
                let z: Vec<f64> = (0..10).map(|i| cols[j][i] * cols[k][i]).collect();
                best = best.max(pearson_abs(&z, &y));
            }
            best
        })
        .collect();
    assert!(brute[0] > 0.999 && brute[1] > 0.999);
    assert!(brute[2] < 0.99 && brute[3] < 0.99);

    let data = write_table(dir.path(), "toy.csv", &y, &x, 4);
    let out = dir.path().join("toy.report");
    let o = acorsis(&["screen", "--data", path_str(&data), "--response", "y", "--d", "2", "--out", path_str(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report = std::fs::read_to_string(&out).unwrap();
    let rows = section(&report, "scores");
    assert_eq!(rows[0], ["rank", "variable", "index", "score", "partner", "kept"]);
    let top: Vec<&str> = rows[1..3].iter().map(|r| r[1]).collect();
    assert!(top.contains(&"x1") && top.contains(&"x2"));
    for r in &rows[1..] {
        let j: usize = r[2].parse().unwrap();
        let s: f64 = r[3].parse().unwrap();
        assert!((s - brute[j - 1]).abs() < 1e-9, "x{j}: {s} vs {}", brute[j - 1]);
    }
    assert_eq!(scalars(&report)["selected"], "x1,x2");
    assert_eq!(scalars(&report)["manifest"], "toy.report.manifest");
    assert!(dir.path().join("toy.report.manifest").exists());
}

#[test]
fn oversized_d_keeps_everything_and_warns() {
    let dir = TempDir::new().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let x: Vec<f64> = (0..60).map(|_| StandardNormal.sample(&mut rng)).collect();
    let y: Vec<f64> = (0..20).map(|i| x[i] + x[20 + i] * x[40 + i]).collect();
    let data = write_table(dir.path(), "d.csv", &y, &x, 3);
    let out = dir.path().join("r.txt");
    let o = acorsis(&["screen", "--data", path_str(&data), "--response", "y", "--d", "5", "--out", path_str(&out)]);
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("warning"));
    let report = std::fs::read_to_string(&out).unwrap();
    assert_eq!(scalars(&report)["kept"], "3");
    assert_eq!(scalars(&report)["selected"], "x1,x2,x3");
    let manifest = std::fs::read_to_string(dir.path().join("r.txt.manifest")).unwrap();
    assert!(manifest.lines().any(|l| l.starts_with("warning = ") && l.contains("exceeds p = 3")));
}

#[test]
fn gamma_at_two_hundred_rows_gives_thirty_seven() {
    let dir = TempDir::new().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (n, p) = (200, 60);
    let x = gen_design(n, p, 0.0, &mut rng).unwrap();
    let (y, _) = gen_response(Case::A, &x, n, p, &mut rng).unwrap();
    let data = write_table(dir.path(), "g.csv", &y, &x, p);
    let out = dir.path().join("g.txt");
    let gamma = (1.0 / (n as f64).ln()).to_string();
    let o = acorsis(&["screen", "--data", path_str(&data), "--response", "y", "--gamma", &gamma, "--out", path_str(&out)]);
    assert!(o.status.success());
    let manifest = std::fs::read_to_string(dir.path().join("g.txt.manifest")).unwrap();
    assert!(manifest.lines().any(|l| l == "d = 37"), "{manifest}");
    assert!(manifest.lines().any(|l| l.starts_with("input = ") && l.contains("sha256:")));
    assert_eq!(scalars(&std::fs::read_to_string(&out).unwrap())["kept"], "37");
}

#[test]
fn zero_kappa_picks_largest_loglik() {
    let dir = TempDir::new().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (n, p) = (80, 12);
    let x = gen_design(n, p, 0.0, &mut rng).unwrap();
    let (y, _) = gen_response(Case::C, &x, n, p, &mut rng).unwrap();
    let data = write_table(dir.path(), "k.csv", &y, &x, p);
    let out = dir.path().join("k.txt");
    let o = acorsis(&[
        "fit", "--data", path_str(&data), "--response", "y", "--d", "6", "--kappa", "0", "--out", path_str(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report = std::fs::read_to_string(&out).unwrap();
    let rows = section(&report, "gic_path");
    assert_eq!(rows.len(), 51);
    let mut best = f64::NEG_INFINITY;
    let mut chosen = f64::NAN;
    for r in &rows[1..] {
        let ll: f64 = r[5].parse().unwrap();
        if r[8] == "true" {
            best = best.max(ll);
        }
        if r[9] == "true" {
            chosen = ll;
        }
    }
    assert_eq!(chosen, best);
    let s = scalars(&report);
    assert_eq!(s["kappa"], "0");
    assert_eq!(s["sh_satisfied"], "true");
}

#[test]
fn binomial_fit_scores_test_data() {
    let dir = TempDir::new().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let (n, p) = (300, 15);
    let draw = |rng: &mut ChaCha8Rng| {
        let x: Vec<f64> = (0..n * p).map(|_| StandardNormal.sample(rng)).collect();
        let y: Vec<f64> = (0..n)
            .map(|i| {
                let eta = 1.5 * x[i] - 1.5 * x[n + i] + 1.5 * x[i] * x[n + i];
                let u: f64 = rand::Rng::random(rng);
                f64::from(u < 1.0 / (1.0 + (-eta).exp()))
            })
            .collect();
        (y, x)
    };
    let (y, x) = draw(&mut rng);
    let (ty, tx) = draw(&mut rng);
    let train = write_table(dir.path(), "train.csv", &y, &x, p);
    let test = write_table(dir.path(), "test.csv", &ty, &tx, p);
    let out = dir.path().join("b.txt");
    let o = acorsis(&[
        "fit", "--data", path_str(&train), "--response", "y", "--family", "binomial", "--d", "5",
        "--test-data", path_str(&test), "--out", path_str(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report = std::fs::read_to_string(&out).unwrap();
    let s = scalars(&report);
    let dev: f64 = s["test_deviance"].parse().unwrap();
    // null deviance of the held-out rows bounds a useful model from above
    let pbar = ty.iter().sum::<f64>() / n as f64;
    let null = -2.0 * ty.iter().map(|&v| if v == 1.0 { pbar.ln() } else { (1.0 - pbar).ln() }).sum::<f64>();
    assert!(dev < null, "{dev} vs null {null}");
    let terms: Vec<&str> = section(&report, "coefficients")[1..].iter().map(|r| r[0]).collect();
    assert!(terms.contains(&"x1:x2"), "{terms:?}");
    assert_eq!(s["sh_satisfied"], "true");
}

#[test]
fn exit_codes() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("o.txt");
    let screen = |data: &Path, extra: &[&str]| {
        let mut args = vec!["screen", "--data", path_str(data), "--response", "y", "--out", path_str(&out)];
        args.extend_from_slice(extra);
        acorsis(&args)
    };
    let file = |name: &str, text: &str| {
        let p = dir.path().join(name);
        std::fs::write(&p, text).unwrap();
        p
    };
    let good = "y,a,b,c\n1,2,3,1\n2,1,5,0\n0,4,1,2\n3,3,2,5\n1,0,4,1\n";

    let na = file("na.csv", "y,a\n1,2\n2,NA\n3,1\n");
    assert_eq!(screen(&na, &[]).status.code(), Some(EXIT_CSV));
    let ragged = file("ragged.csv", "y,a\n1,2\n2\n");
    assert_eq!(screen(&ragged, &[]).status.code(), Some(EXIT_CSV));
    let no_y = file("noy.csv", "u,a\n1,2\n2,3\n");
    assert_eq!(screen(&no_y, &[]).status.code(), Some(EXIT_CSV));
    assert_eq!(screen(&dir.path().join("missing.csv"), &[]).status.code(), Some(EXIT_CSV));

    let constant = file("const.csv", "y,a,flat,b,level\n1,2,7,1,0\n2,1,7,3,0\n0,4,7,2,0\n3,3,7,5,0\n");
    let o = screen(&constant, &[]);
    assert_eq!(o.status.code(), Some(EXIT_DEGENERATE));
    let msg = String::from_utf8_lossy(&o.stderr);
    assert!(msg.contains("flat") && msg.contains("level"), "{msg}");
    let one_class = file("oneclass.csv", "y,a,b\n1,2,1\n1,1,3\n1,4,2\n");
    assert_eq!(screen(&one_class, &["--family", "binomial"]).status.code(), Some(EXIT_DEGENERATE));

    let good = file("good.csv", good);
    assert_eq!(screen(&good, &["--gamma", "1.5"]).status.code(), Some(EXIT_SIZE));
    assert_eq!(screen(&good, &["--d", "0"]).status.code(), Some(EXIT_SIZE));
    assert_eq!(screen(&good, &["--gamma", "0.1"]).status.code(), Some(EXIT_SIZE));
    assert_eq!(screen(&good, &["--d", "2"]).status.code(), Some(0));

    let bad_cfg = file("bad.cfg", "n = 40\np = oops\n");
    let o = acorsis(&["simulate", "--config", path_str(&bad_cfg), "--out", path_str(&dir.path().join("sim"))]);
    assert_eq!(o.status.code(), Some(EXIT_CONFIG));
    let bad_rho = file("rho.cfg", "n = 40\np = 10\nreps = 1\nrho = 1.5\nseed = 1\n");
    let o = acorsis(&["simulate", "--config", path_str(&bad_rho), "--out", path_str(&dir.path().join("sim"))]);
    assert_eq!(o.status.code(), Some(EXIT_CONFIG));
}

const SMOKE: &str = "# tiny smoke config\nn = 60\np = 20\nrho = 0, 0.5\ncase = a, c\nreps = 2\nd = 8\nseed = 99\n";

#[test]
fn simulate_smoke_writes_every_table() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("sim.cfg");
    std::fs::write(&cfg, SMOKE.replace("reps = 2", "reps = 1")).unwrap();
    let out = dir.path().join("sim");
    let o = acorsis(&["simulate", "--config", path_str(&cfg), "--out", path_str(&out), "--threads", "1"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for name in ["coverage.tsv", "selection.tsv", "hierarchy.tsv"] {
        let text = std::fs::read_to_string(out.join(name)).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "# manifest = manifest.txt");
        assert!(lines[1].starts_with("method\trho\tcase\treps\tfailed"));
        assert!(lines.len() > 2, "{name} has no rows");
    }
    let cov = std::fs::read_to_string(out.join("coverage.tsv")).unwrap();
    assert_eq!(cov.lines().count(), 2 + 4 * 4);
    let manifest = std::fs::read_to_string(out.join("manifest.txt")).unwrap();
    assert!(manifest.contains("seed = 99"));
    assert_eq!(manifest.lines().filter(|l| l.starts_with("failed_replicates = ")).count(), 16);
}

#[test]
fn simulate_is_byte_deterministic_across_thread_counts() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("sim.cfg");
    std::fs::write(&cfg, SMOKE).unwrap();
    let run = |tag: &str, threads: &str| {
        let out = dir.path().join(tag);
        let o = acorsis(&["simulate", "--config", path_str(&cfg), "--out", path_str(&out), "--threads", threads]);
        assert!(o.status.success());
        ["coverage.tsv", "selection.tsv", "hierarchy.tsv"].map(|n| std::fs::read(out.join(n)).unwrap())
    };
    let a = run("a", "1");
    let b = run("b", "1");
    let c = run("c", "3");
    assert_eq!(a, b);
    assert_eq!(a, c);
}

#[test]
fn csv_round_trip_through_files() {
    let dir = TempDir::new().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let columns: Vec<Vec<f64>> = (0..5)
        .map(|c| (0..40).map(|_| { let z: f64 = StandardNormal.sample(&mut rng); z } * 10f64.powi(c * 3 - 6)).collect::<Vec<f64>>())
        .collect();
    let t = Table {
        names: (0..5).map(|c| format!("v{c}")).collect(),
        columns,
    };
    let path = dir.path().join("rt.csv");
    write_csv(&t, std::fs::File::create(&path).unwrap()).unwrap();
    let back = parse_csv(std::fs::File::open(&path).unwrap()).unwrap();
    assert_eq!(back.names, t.names);
    for (a, b) in back.columns.iter().zip(&t.columns) {
        for (u, v) in a.iter().zip(b) {
            assert!((u - v).abs() <= 1e-12 * v.abs().max(1.0));
        }
    }
}
