use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use tempfile::TempDir;
use vsheet_cli::artifacts::sha256_hex;

fn vsheet(config: &str, out: &Path, extra: &[&str]) -> Output {
    let cfg = out.with_extension("toml");
    std::fs::write(&cfg, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_vsheet"))
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(out)
        .args(["--verbosity", "0"])
        .args(extra)
        .output()
        .unwrap()
}

fn files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect();
    v.sort();
    v
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap()
}

fn json(dir: &Path, name: &str) -> serde_json::Value {
    serde_json::from_str(&read(dir, name)).unwrap()
}

fn out(tmp: &TempDir, name: &str) -> PathBuf {
    tmp.path().join(name)
}

#[test]
fn unknown_keys_and_bad_values_exit_with_one() {
    let tmp = TempDir::new().unwrap();
    let o = vsheet("[experiment]\nkind = \"evolve\"\n[grid]\nresolution = 3\n", &out(&tmp, "a"), &[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("resolution"));
    let o = vsheet("[experiment]\nkind = \"evolve\"\n[grid]\nn1 = 3\n", &out(&tmp, "b"), &[]);
    assert_eq!(o.status.code(), Some(1));
    let o = vsheet("[experiment]\nkind = \"evolve\"\n[state]\nplus = [1.0, 0.0, 0.0, 0.0, 1.0, 0.0]\nminus = [-1.0, 0.0, 0.0, 0.0, 1.0, 0.0]\n", &out(&tmp, "c"), &[]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn cfl_violation_is_a_numerical_abort() {
    let tmp = TempDir::new().unwrap();
    let o = vsheet("[experiment]\nkind = \"evolve\"\n[grid]\nn1 = 16\nn2 = 16\n[evolve]\nt_end = 0.5\nsnapshot_dt = 0.5\ndt = 0.5\n", &out(&tmp, "a"), &[]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn same_seed_gives_identical_bytes() {
    let tmp = TempDir::new().unwrap();
    let cfg = "[experiment]\nkind = \"symmetrize\"\n[symmetrize]\nsamples = 200\n";
    let (a, b, c) = (out(&tmp, "a"), out(&tmp, "b"), out(&tmp, "c"));
    for (dir, seed) in [(&a, "5"), (&b, "5"), (&c, "6")] {
        assert_eq!(vsheet(cfg, dir, &["--seed", seed]).status.code(), Some(0));
    }
    assert_eq!(files(&a), files(&b));
    assert_ne!(read(&a, "symmetrize.csv"), read(&c, "symmetrize.csv"));
    let s = json(&a, "symmetrize.json");
    assert_eq!(s["b0_disagreements"], 0);
    assert!(s["max_lambda_ratio"].as_f64().unwrap() < 1.0);
    assert_eq!(s["balance_within_tolerance"], true);
}

#[test]
fn evolve_runs_are_deterministic_under_the_seeded_pulse() {
    let tmp = TempDir::new().unwrap();
    let cfg = "[experiment]\nkind = \"evolve\"\nseed = 3\n[grid]\nn1 = 16\nn2 = 16\n[evolve]\nt_end = 0.4\nsnapshot_dt = 0.1\npulse_duration = 0.3\n";
    let (a, b) = (out(&tmp, "a"), out(&tmp, "b"));
    assert_eq!(vsheet(cfg, &a, &[]).status.code(), Some(0));
    assert_eq!(vsheet(cfg, &b, &[]).status.code(), Some(0));
    assert_eq!(files(&a), files(&b));
}

#[test]
fn manifest_hashes_match_and_the_saved_config_reruns() {
    let tmp = TempDir::new().unwrap();
    let a = out(&tmp, "a");
    assert_eq!(vsheet("[experiment]\nkind = \"stability-map\"\n[stability_map]\njump_samples = 5\n", &a, &["--seed", "11"]).status.code(), Some(0));
    let m = json(&a, "manifest.json");
    assert_eq!(m["experiment"], "stability-map");
    assert_eq!(m["seed"], 11);
    assert_eq!(m["config_sha256"], sha256_hex(read(&a, "config.toml").as_bytes()));
    assert!(m["versions"]["vsheet-core"].is_string());
    assert!(m["tolerances"]["stability_margin"].is_number());
    for art in m["artifacts"].as_array().unwrap() {
        let bytes = std::fs::read(a.join(art["file"].as_str().unwrap())).unwrap();
        assert_eq!(art["sha256"], sha256_hex(&bytes));
    }
    let b = out(&tmp, "b");
    let o = Command::new(env!("CARGO_BIN_EXE_vsheet")).arg("--config").arg(a.join("config.toml")).arg("--out").arg(&b).args(["--verbosity", "0"]).output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(files(&a), files(&b));
}

#[test]
fn stability_map_changes_sign_on_the_closed_form_curve() {
    let tmp = TempDir::new().unwrap();
    let a = out(&tmp, "a");
    assert_eq!(vsheet("[experiment]\nkind = \"stability-map\"\n", &a, &[]).status.code(), Some(0));
    let text = read(&a, "stability_map.csv");
    assert!(!text.contains('\r'));
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("jump_u2,field_h2,margin,critical_field,stable"));
    let step = 2.0 / 40.0;
    let mut checked = 0;
    for l in lines {
        let v: Vec<f64> = l.split(',').map(|x| x.parse().unwrap()).collect();
        let (h, margin, crit) = (v[1], v[2], v[3]);
        if (h - crit).abs() > step {
            assert_eq!(margin > 0.0, h > crit, "{l}");
            checked += 1;
        }
    }
    assert!(checked > 1000);
    let s = json(&a, "stability_map.json");
    assert!(s["sign_changes"].as_u64().unwrap() > 10);
    assert_eq!(s["misplaced"], 0);
}

#[test]
fn evolve_with_zero_forcing_has_an_all_zero_ledger() {
    let tmp = TempDir::new().unwrap();
    let a = out(&tmp, "a");
    let cfg = "[experiment]\nkind = \"evolve\"\n[grid]\nn1 = 16\nn2 = 16\n[evolve]\nforcing = \"zero\"\nt_end = 0.5\n";
    assert_eq!(vsheet(cfg, &a, &[]).status.code(), Some(0));
    let text = read(&a, "energy_ledger.csv");
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 6);
    for r in rows {
        let v: Vec<f64> = r.split(',').map(|x| x.parse().unwrap()).collect();
        assert!(v[1..].iter().all(|&x| x == 0.0), "{r}");
    }
    assert_eq!(json(&a, "evolve.json")["max_ledger_entry"], 0.0);
    assert!(a.join("final_state.bin").exists() && a.join("front_history.bin").exists());
}

#[test]
fn energy_report_records_the_apriori_constant() {
    let tmp = TempDir::new().unwrap();
    let a = out(&tmp, "a");
    let cfg = "[experiment]\nkind = \"energy-report\"\n[grid]\nn1 = 24\nn2 = 24\n[evolve]\nt_end = 0.6\npulse_duration = 0.4\n";
    assert_eq!(vsheet(cfg, &a, &[]).status.code(), Some(0));
    let r = json(&a, "energy_report.json");
    assert!(r["apriori"]["constant"].as_f64().unwrap() > 0.0);
    assert!(r["constraint_growth"].as_f64().unwrap() <= 10.0);
}

#[test]
fn compat_reports_a_quadratic_forcing() {
    let tmp = TempDir::new().unwrap();
    let a = out(&tmp, "a");
    assert_eq!(vsheet("[experiment]\nkind = \"compat\"\n", &a, &[]).status.code(), Some(0));
    let r = json(&a, "compat.json");
    assert!((r["forcing_slope"].as_f64().unwrap() - 2.0).abs() < 0.3);
    assert!(r["compatible_order"].as_u64().is_some());
    let o = vsheet("[experiment]\nkind = \"compat\"\n[compat]\ndelta = 1e-9\n", &out(&tmp, "b"), &[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("smaller T"));
}

#[test]
fn nash_moser_demo_emits_one_record_per_iterate() {
    let tmp = TempDir::new().unwrap();
    let a = out(&tmp, "a");
    let cfg = "[experiment]\nkind = \"nash-moser-demo\"\n[nash_moser]\nn1 = 32\nn2 = 32\nnt = 9\nmax_iter = 2\n";
    assert_eq!(vsheet(cfg, &a, &[]).status.code(), Some(0));
    let text = read(&a, "iterates.jsonl");
    let recs: Vec<serde_json::Value> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(recs.len(), 3);
    for (i, r) in recs.iter().enumerate() {
        assert_eq!(r["i"], i);
        for key in ["theta", "residual_interior", "residual_boundary", "delta_v", "delta_psi", "bookkeeping_residual"] {
            assert!(r[key].is_number(), "{key}");
        }
    }
    assert!(recs[2]["residual_interior"].as_f64() < recs[0]["residual_interior"].as_f64());
}

#[test]
fn shipped_configs_parse() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
    let mut kinds = Vec::new();
    for (name, bytes) in files(&dir) {
        let cfg = vsheet_cli::config::RunConfig::parse(std::str::from_utf8(&bytes).unwrap()).unwrap_or_else(|e| panic!("{name}: {e}"));
        kinds.push(cfg.experiment.kind.name());
    }
    kinds.sort();
    assert_eq!(kinds, ["compat", "energy-report", "evolve", "nash-moser-demo", "stability-map", "symmetrize"]);
}
