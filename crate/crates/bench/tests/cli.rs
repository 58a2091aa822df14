use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use ppl_bench::outputs::{Summary, TRACE_HEADER};

fn ppl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ppl")).args(args).output().unwrap()
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path
}

fn solve(config: &Path, out: &Path) -> Output {
    ppl(&[
        "solve",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ])
}

fn read_summary(dir: &Path) -> Summary {
    serde_json::from_str(&fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap()
}

/// trace.csv with the elapsed_sec column removed.
fn without_clock(path: &Path) -> Vec<String> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| {
            let mut f: Vec<&str> = l.split(',').collect();
            f.remove(1);
            f.join(",")
        })
        .collect()
}

#[test]
fn disk_plada_converges_through_the_cli() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "disk.toml",
        "problem = \"disk\"\nmethod = \"plada\"\ntrace_every = 100\n",
    );
    let out = dir.path().join("run");
    let res = solve(&cfg, &out);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let s = read_summary(&out);
    assert!(s.converged);
    assert_eq!(s.stop_reason, "converged");
    let trace = fs::read_to_string(out.join("trace.csv")).unwrap();
    assert_eq!(trace.lines().next().unwrap(), TRACE_HEADER);
    let last_iter: usize = trace
        .lines()
        .last()
        .unwrap()
        .split(',')
        .next()
        .unwrap()
        .parse()
        .unwrap();
    assert_eq!(last_iter, s.iterations);
}

#[test]
fn zero_budget_writes_one_row() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "k0.toml", "problem = \"qp\"\nmax_iters = 0\n");
    let out = dir.path().join("run");
    assert!(solve(&cfg, &out).status.success());
    assert_eq!(fs::read_to_string(out.join("trace.csv")).unwrap().lines().count(), 2);
}

#[test]
fn corrupted_data_path_fails_without_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "bad.toml",
        "problem = \"fairness-dp\"\ndata_path = \"missing.svm\"\ngroup_feature = 0\n",
    );
    let out = dir.path().join("run");
    let res = solve(&cfg, &out);
    assert!(!res.status.success());
    assert!(String::from_utf8_lossy(&res.stderr).contains("missing.svm"));
    assert!(!out.join("summary.json").exists());

    let broken = write_config(dir.path(), "broken.svm", "+1 1:0.5\n-1 2:oops\n");
    let cfg = write_config(
        dir.path(),
        "broken.toml",
        &format!(
            "problem = \"fairness-dp\"\ndata_path = {:?}\ngroup_feature = 0\n",
            broken
        ),
    );
    let res = solve(&cfg, &out);
    assert!(!res.status.success());
    assert!(
        String::from_utf8_lossy(&res.stderr).contains("line 2"),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );
    assert!(!out.join("summary.json").exists());
}

#[test]
fn config_errors_exit_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "typo.toml", "problem = \"disk\"\nalhpa = 1.0\n");
    let res = solve(&cfg, &dir.path().join("run"));
    assert!(!res.status.success());
    assert!(String::from_utf8_lossy(&res.stderr).contains("alhpa"));
    let cfg = write_config(
        dir.path(),
        "mix.toml",
        "problem = \"fairness-dp\"\nmethod = \"ppala\"\n",
    );
    assert!(!solve(&cfg, &dir.path().join("run")).status.success());
}

#[test]
fn same_seed_reruns_match_except_elapsed_time() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "fair.toml",
        "problem = \"fairness-dp\"\nsynthetic_rows = 300\nmax_iters = 2000\ntrace_every = 7\nseed = 5\n",
    );
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert!(solve(&cfg, &a).status.success());
    assert!(solve(&cfg, &b).status.success());
    assert_eq!(without_clock(&a.join("trace.csv")), without_clock(&b.join("trace.csv")));
    let (sa, sb) = (read_summary(&a), read_summary(&b));
    assert_eq!(sa.final_x, sb.final_x);
    assert_eq!(sa.final_nu, sb.final_nu);

    let c = dir.path().join("c");
    let res = ppl(&[
        "solve",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        c.to_str().unwrap(),
        "--seed",
        "6",
    ]);
    assert!(res.status.success());
    assert_eq!(read_summary(&c).config.seed, 6);
    assert_ne!(read_summary(&c).final_x, sa.final_x);
}

#[test]
fn rate_check_and_estimate_subcommands() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "qp.toml",
        "problem = \"qp\"\nmethod = \"ppala\"\nqp_n = 3\nqp_m = 2\nmax_iters = 4000\nstop_on_kkt = false\n",
    );
    let out = dir.path().join("run");
    assert!(solve(&cfg, &out).status.success());

    let trace = out.join("trace.csv");
    let res = ppl(&["rate", "--trace", trace.to_str().unwrap(), "--t", "1000"]);
    assert!(res.status.success());
    let v: serde_json::Value = serde_json::from_slice(&res.stdout).unwrap();
    assert_eq!(v["rate_summary"]["t"], 1000);
    assert_eq!(v["rate_summary"]["sufficient"], true);
    assert_eq!(v["random_iterate"]["draws"], 100);

    let res = ppl(&["check", "--config", cfg.to_str().unwrap()]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stdout));
    let v: serde_json::Value = serde_json::from_slice(&res.stdout).unwrap();
    assert_eq!(v["passed"], true);
    assert_eq!(v["steps"], 4000);

    let res = ppl(&["estimate", "--config", cfg.to_str().unwrap()]);
    assert!(res.status.success());
    let v: serde_json::Value = serde_json::from_slice(&res.stdout).unwrap();
    assert!(v["declared"]["m_g"].as_f64().unwrap() > 0.0);
    assert!(v["sampled"]["l_f"].as_f64().unwrap() > 0.0);
}

#[test]
fn shipped_configs_load() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
    let mut n = 0;
    for entry in fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            ppl_bench::load_config(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            n += 1;
        }
    }
    assert!(n >= 6, "{n}");
}
