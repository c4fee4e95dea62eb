use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_sitesplit");

/// A tiny, fast configuration: two bosons with four levels.
const SMALL: &[&str] = &[
    "--system.d_b=4",
    "--system.chain_length=2",
    "--tdvp.t_max=2",
    "--tdvp.max_bond=8",
];

fn sitesplit(dir: &Path, args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .env("SITESPLIT_OUTPUT_DIR", dir)
        .env_remove("RUST_LOG")
        .output()
        .expect("binary runs")
}

fn small(cmd: &str, extra: &[&str]) -> Vec<String> {
    std::iter::once(cmd)
        .chain(SMALL.iter().copied())
        .chain(extra.iter().copied())
        .map(str::to_string)
        .collect()
}

fn run_ok(dir: &Path, args: &[String]) -> Output {
    let args: Vec<&str> = args.iter().map(String::as_str).collect();
    let out = sitesplit(dir, &args);
    assert!(
        out.status.success(),
        "exit {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn data_lines(text: &str) -> Vec<&str> {
    text.lines().filter(|l| !l.starts_with('#')).collect()
}

#[test]
fn run_writes_csv_with_stable_schema() {
    let dir = tempfile::tempdir().unwrap();
    run_ok(dir.path(), &small("run", &["--bath.alpha=0.2"]));
    let text = std::fs::read_to_string(dir.path().join("run_s1_alpha0.2.csv")).unwrap();
    assert!(text.ends_with('\n'));
    let lines = data_lines(&text);
    assert_eq!(lines[0], "t,sz,norm,energy,max_bond_entropy,max_bond,n_1");
    let first: Vec<f64> = lines[1].split(',').map(|v| v.parse().unwrap()).collect();
    assert_eq!(first[0], 0.0);
    assert_eq!(first[1], 1.0);
    let times: Vec<f64> = lines[1..]
        .iter()
        .map(|l| l.split(',').next().unwrap().parse().unwrap())
        .collect();
    assert!(times.windows(2).all(|w| w[1] > w[0]));
    assert_eq!(times.len(), 21);
    assert!(dir.path().join("run_s1_alpha0.2_timing.csv").exists());
    assert!(dir.path().join("run_summary.csv").exists());
}

#[test]
fn outputs_embed_the_resolved_config() {
    let dir = tempfile::tempdir().unwrap();
    run_ok(dir.path(), &small("run", &["--bath.alpha=0.2", "--system.delta=0.25"]));
    let text = std::fs::read_to_string(dir.path().join("run_s1_alpha0.2.csv")).unwrap();
    let toml: String = text
        .lines()
        .filter_map(|l| l.strip_prefix("# "))
        .skip(1)
        .take_while(|l| !l.starts_with("k_eff"))
        .map(|l| format!("{l}\n"))
        .collect();
    let cfg = sitesplit_cli::SimConfig::from_toml_with_overrides(&toml, &[]).unwrap();
    assert_eq!(cfg.system.delta, 0.25);
    assert_eq!(cfg.system.d_b, 4);
    assert_eq!(cfg.alphas(), vec![0.2]);
    assert_eq!(cfg.output.dir, dir.path());
    assert!(text.lines().any(|l| l.starts_with("# k_eff = [")));
}

#[test]
fn reruns_are_bit_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = small("run", &["--bath.alpha=[0.1,0.3]", "--jobs=2"]);
    run_ok(a.path(), &args);
    run_ok(b.path(), &args);
    for name in ["run_s1_alpha0.1.csv", "run_s1_alpha0.3.csv", "run_summary.csv"] {
        let x = std::fs::read_to_string(a.path().join(name)).unwrap();
        let y = std::fs::read_to_string(b.path().join(name)).unwrap();
        assert_eq!(data_lines(&x), data_lines(&y), "{name}");
    }
}

#[test]
fn config_file_and_overrides_combine() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, "[bath]\nalpha = 0.4\n[output]\nprefix = \"cfg\"\n").unwrap();
    let mut args = small("coeffs", &["--system.chain_length=7"]);
    args.extend(["--config".to_string(), cfg.display().to_string()]);
    run_ok(dir.path(), &args);
    let text = std::fs::read_to_string(dir.path().join("cfg_coeffs.csv")).unwrap();
    let lines = data_lines(&text);
    assert_eq!(lines[0], "n,omega_n,t_n");
    assert_eq!(lines.len(), 8);
    assert!(text.contains("# alpha = 0.4"));
}

#[test]
fn oracle_agrees_with_tdvp() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_ok(dir.path(), &small("oracle", &["--compare", "--bath.alpha=0.3"]));
    let text = std::fs::read_to_string(dir.path().join("run_oracle.csv")).unwrap();
    let lines = data_lines(&text);
    assert_eq!(lines[0], "t,sz_exact,sz_tdvp");
    let worst = lines[1..]
        .iter()
        .map(|l| {
            let v: Vec<f64> = l.split(',').map(|x| x.parse().unwrap()).collect();
            (v[1] - v[2]).abs()
        })
        .fold(0.0, f64::max);
    assert!(worst < 1e-4, "{worst}");
    assert!(String::from_utf8_lossy(&out.stdout).contains("dimension 32"));
}

#[test]
fn spectra_reports_k_eff() {
    let dir = tempfile::tempdir().unwrap();
    run_ok(dir.path(), &small("spectra", &["--system.d_b=9", "--system.chain_length=3"]));
    let text = std::fs::read_to_string(dir.path().join("run_spectra.csv")).unwrap();
    assert!(text.lines().any(|l| l.starts_with("# k_eff = [")));
    assert!(data_lines(&text).len() > 1);
}

#[test]
fn benchmark_reports_both_bases() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "benchmark",
        "--benchmark.d_b_list=[4,9]",
        "--benchmark.chain_length=4",
        "--benchmark.sweeps=1",
    ];
    let out = sitesplit(dir.path(), &args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(dir.path().join("run_benchmark.csv")).unwrap();
    let lines = data_lines(&text);
    assert_eq!(lines[0], "d_b,split_ms,unsplit_ms,speedup,max_k_eff");
    assert_eq!(lines.len(), 3);
    assert!(String::from_utf8_lossy(&out.stdout).contains("fitted exponents"));
}

#[test]
fn output_dir_comes_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let nested = dir.path().join("deep/er");
    let out = Command::new(BIN)
        .args(["coeffs", "--system.chain_length=3", "--output.dir=ignored"])
        .env("SITESPLIT_OUTPUT_DIR", &nested)
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(nested.join("run_coeffs.csv").exists());
}

#[test]
fn invalid_configs_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        vec!["run", "--bath.alpha=-0.5"],
        vec!["run", "--tdvp.dt=0"],
        vec!["run", "--nonsense.key=1"],
        vec!["run", "--tdvp.scheme=\"three_site\""],
        vec!["run", "--config", "/nonexistent/config.toml"],
        vec!["frobnicate"],
    ] {
        let out = sitesplit(dir.path(), &args);
        assert_eq!(out.status.code(), Some(1), "{args:?}");
        assert!(!out.stderr.is_empty(), "{args:?}");
    }
}

#[test]
fn oversized_oracle_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = sitesplit(dir.path(), &["oracle", "--system.d_b=100", "--system.chain_length=3"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("exceeds cap"));
}
