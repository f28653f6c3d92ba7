use std::process::{Command, Output};

use moeda::cli::{read_sweep_csv, read_table};

fn moeda(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_moeda")).args(args).output().expect("binary runs")
}

fn stdout_of(args: &[&str]) -> Vec<u8> {
    let out = moeda(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    out.stdout
}

const COMMANDS: &[&[&str]] = &[
    &["evaluate", "--m", "2", "--genome", "111000,000111,010101"],
    &["oracle", "--problem", "trap-invtrap", "--m", "2", "--k", "3"],
    &["predict", "--k", "3", "--m", "8"],
    &["run", "--problem", "onemax-zeromax", "--ell", "6", "--algo", "umda", "--n", "40", "--runs", "3", "--seed", "11"],
    &["run", "--m", "2", "--algo", "nsga2-xover", "--replacement", "crowding", "--n", "30", "--runs", "2", "--seed", "4", "--mode", "objective"],
    &["bisect", "--m", "2", "--repeats", "2", "--runs", "3", "--seed", "5", "--mode", "objective"],
    &["sweep", "--problem", "onemax-zeromax", "--ell", "3,4", "--algo", "umda", "--repeats", "2", "--runs", "3", "--seed", "7", "--mode", "objective"],
    &["niche-prob", "--m", "3", "--n", "60", "--runs", "5", "--seed", "9"],
];

#[test]
fn every_command_is_byte_identical_on_rerun_and_reparses() {
    for args in COMMANDS {
        let a = stdout_of(args);
        let b = stdout_of(args);
        assert_eq!(a, b, "{args:?}");
        let (header, rows) = read_table(a.as_slice()).unwrap();
        assert!(!header.is_empty() && !rows.is_empty(), "{args:?}");
        assert!(rows.iter().all(|r| r.len() == header.len()));
    }
}

#[test]
fn job_count_does_not_change_results() {
    let base = ["sweep", "--problem", "onemax-zeromax", "--ell", "3,4", "--algo", "umda", "--repeats", "2", "--runs", "4", "--seed", "3", "--mode", "objective"];
    let one = stdout_of(&[&base[..], &["--jobs", "1"]].concat());
    let three = stdout_of(&[&base[..], &["--jobs", "3"]].concat());
    assert_eq!(one, three);
}

#[test]
fn sweep_output_round_trips() {
    let out = stdout_of(COMMANDS[6]);
    let text = String::from_utf8(out.clone()).unwrap();
    assert!(text.starts_with(
        "kind,m,k,d,m_d,ell,algo,replacement,mode,n_min_mean,n_min_std,evals_mean,evals_std,repeats,master_seed\n"
    ));
    let records = read_sweep_csv(out.as_slice()).unwrap();
    assert_eq!(records.len(), 2);
    assert_eq!(moeda::cli::write_sweep_csv(&records).unwrap(), out);
}

#[test]
fn oracle_prints_front() {
    let text = String::from_utf8(stdout_of(COMMANDS[1])).unwrap();
    assert_eq!(
        text,
        "entry,genome,f1,f2\n\
         genotype,000000,0.2,2\n\
         genotype,000111,1.1,1.1\n\
         genotype,111000,1.1,1.1\n\
         genotype,111111,2,0.2\n\
         point,,0.2,2\n\
         point,,1.1,1.1\n\
         point,,2,0.2\n"
    );
}

#[test]
fn predict_reports_sizing_values() {
    let text = String::from_utf8(stdout_of(COMMANDS[2])).unwrap();
    for line in ["eda_popsize,192", "m_d,6", "niching_popsize_approx,64", "log_base,2"] {
        assert!(text.lines().any(|l| l == line), "{line} missing from\n{text}");
    }
}

#[test]
fn output_file_and_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.cfg");
    let out = dir.path().join("result.csv");
    std::fs::write(&cfg, "problem=onemax-zeromax\nell=6\nalgo=umda\nn=40\nseed=11\nruns=3\n").unwrap();
    let status = moeda(&["run", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]).status;
    assert!(status.success());
    assert_eq!(std::fs::read(&out).unwrap(), stdout_of(COMMANDS[3]));
}

#[test]
fn unseeded_runs_report_their_seed() {
    let out = moeda(&["run", "--m", "2", "--n", "20"]);
    assert!(out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    let seed = stderr.trim().strip_prefix("seed = ").expect("seed on stderr");
    let (header, rows) = read_table(out.stdout.as_slice()).unwrap();
    let col = header.iter().position(|h| h == "seed").unwrap();
    assert_eq!(rows[0][col], seed);
}

#[test]
fn errors_exit_nonzero() {
    let usage = moeda(&["sweep", "--problem", "overlap", "--md", "9", "--m", "4"]);
    assert_eq!(usage.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&usage.stderr).contains("--md"));

    let unknown = moeda(&["run", "--m", "2", "--n", "8", "--colour", "blue"]);
    assert_eq!(unknown.status.code(), Some(2));

    let io = moeda(&["predict", "--k", "3", "--m", "8", "--out", "/nonexistent-dir/x.csv"]);
    assert_eq!(io.status.code(), Some(1));

    let infeasible = moeda(&["bisect", "--m", "4", "--n-max", "8", "--n-start", "4", "--seed", "1", "--runs", "1", "--repeats", "1"]);
    assert_eq!(infeasible.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&infeasible.stderr).contains("n_max"));

    assert!(moeda(&["--help"]).status.success());
}
