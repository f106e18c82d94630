use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};

use treeseries::format::{parse_linrep, parse_model, parse_wta, Model};
use treeseries::wta::check_pta;
use treeseries::{parse_tree, ParseMode};

fn golden(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/golden")
        .join(name)
        .to_str()
        .unwrap()
        .to_string()
}

struct Out {
    code: i32,
    stdout: String,
    stderr: String,
}

fn run(args: &[&str], stdin: &str) -> Out {
    let mut child = Command::new(env!("CARGO_BIN_EXE_treeseries"))
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(stdin.as_bytes()).unwrap();
    let out = child.wait_with_output().unwrap();
    Out {
        code: out.status.code().unwrap_or(-1),
        stdout: String::from_utf8(out.stdout).unwrap(),
        stderr: String::from_utf8(out.stderr).unwrap(),
    }
}

fn path(dir: &Path, name: &str) -> String {
    dir.join(name).to_str().unwrap().to_string()
}

#[test]
fn eval_prints_one_line_per_tree() {
    let dir = tempfile::tempdir().unwrap();
    let trees = path(dir.path(), "trees.txt");
    std::fs::write(&trees, "a\nf(a,a)\n").unwrap();
    let out = run(&["eval", "-A", &golden("p1.wta"), "-T", &trees], "");
    assert_eq!(out.code, 0);
    assert_eq!(out.stdout, "0.6\n0.144\n");
    let out = run(&["eval", "-A", "-", "-t", "a"], &std::fs::read_to_string(golden("p1.wta")).unwrap());
    assert_eq!(out.stdout, "0.6\n");
}

#[test]
fn eval_rejects_unknown_symbols_and_arity_errors() {
    for tree in ["g(a)", "f(a)", "a(a)"] {
        let out = run(&["eval", "-A", &golden("p1.wta"), "-t", tree], "");
        assert_eq!(out.code, 2, "{tree}");
        assert!(out.stderr.starts_with("error:"));
    }
}

#[test]
fn runs_and_viterbi_print_annotated_runs() {
    let out = run(&["runs", "-A", &golden("p1.wta"), "-t", "f(a,a)"], "");
    assert_eq!(out.stdout, "f:q(a:q,a:q)\t0.144\n");
    let out = run(&["viterbi", "-A", &golden("p1.wta"), "-t", "f(a,a)"], "");
    assert_eq!(out.stdout, "f:q(a:q,a:q)\t0.144\n");
}

#[test]
fn sample_is_reproducible_and_parseable() {
    let args = ["sample", "-A", &golden("p1.wta"), "-n", "50", "--seed", "9"];
    let a = run(&args, "");
    let b = run(&args, "");
    assert_eq!(a.code, 0);
    assert_eq!(a.stdout, b.stdout);
    let alphabet = treeseries::RankedAlphabet::new([("f", 2), ("a", 0)]).unwrap();
    assert_eq!(a.stdout.lines().count(), 50);
    for line in a.stdout.lines() {
        parse_tree(line, ParseMode::Ranked(&alphabet)).unwrap();
    }
}

#[test]
fn check_reports_validity_and_hedge_models() {
    let out = run(&["check", "-A", &golden("p1.wta")], "");
    assert_eq!((out.code, out.stdout.as_str()), (0, "valid\n"));
    let out = run(&["check", "-A", &golden("h1.wha")], "");
    assert_eq!((out.code, out.stdout.as_str()), (0, "valid\n"));
    let out = run(&["check", "-A", &golden("p1.wta"), "--consistency"], "");
    assert!(out.stdout.contains("verdict=Consistent"));
}

#[test]
fn train_learn_convert_minimize_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let sample = path(dir.path(), "s.txt");
    let s = run(&["sample", "-A", &golden("p1.wta"), "-n", "2000", "--seed", "4"], "");
    std::fs::write(&sample, s.stdout).unwrap();

    let trained = path(dir.path(), "trained.wta");
    let out = run(&["train", "-A", &golden("p1.wta"), "-S", &sample, "--iters", "5", "-o", &trained], "");
    assert_eq!(out.code, 0, "{}", out.stderr);
    assert!(out.stdout.lines().all(|l| l.starts_with("iter ")));
    let model = parse_wta(&std::fs::read_to_string(&trained).unwrap()).unwrap();
    assert!(check_pta(&model).is_valid());

    let out = run(&["train", "-A", &golden("p1.wta"), "-S", &sample, "--viterbi", "--iters", "3"], "");
    assert_eq!(out.code, 0, "{}", out.stderr);
    assert!(out.stdout.contains("wta"));

    let learned = path(dir.path(), "learned.lr");
    let out = run(&["learn", "-S", &sample, "-o", &learned], "");
    assert_eq!(out.code, 0, "{}", out.stderr);
    let rep = parse_linrep(&std::fs::read_to_string(&learned).unwrap()).unwrap();
    assert!(rep.dim() >= 1);

    let out = run(&["learn", "-S", &sample, "--format", "wta", "--max-dim", "1"], "");
    assert_eq!(out.code, 0, "{}", out.stderr);
    assert!(matches!(parse_model(&out.stdout).unwrap(), Model::Wta(_)));

    let out = run(&["convert", "-A", &golden("p1.wta"), "--to", "linrep"], "");
    assert!(matches!(parse_model(&out.stdout).unwrap(), Model::Linear(_)));
    let out = run(&["convert", "-A", &golden("h1.wha"), "--to", "wsta"], "");
    assert!(matches!(parse_model(&out.stdout).unwrap(), Model::Wta(_)));
    let out = run(&["convert", "-A", &golden("p1.wta"), "--to", "pta"], "");
    assert!(check_pta(&parse_wta(&out.stdout).unwrap()).is_valid());

    let out = run(&["minimize", "-A", &learned], "");
    assert_eq!(out.code, 0, "{}", out.stderr);
    assert!(parse_linrep(&out.stdout).unwrap().dim() <= rep.dim());
}

#[test]
fn learn_accepts_unranked_samples() {
    let dir = tempfile::tempdir().unwrap();
    let sample = path(dir.path(), "u.txt");
    std::fs::write(&sample, "3\tb\n2\tb(a)\n1\tb(a,a)\n").unwrap();
    let out = run(&["learn", "-S", &sample, "--unranked"], "");
    assert_eq!(out.code, 0, "{}", out.stderr);
    assert!(out.stdout.contains("@/2"));
}

#[test]
fn encode_and_decode_read_stdin() {
    let out = run(&["encode"], "b(a,a,c(a,a))\nf(a,a)\n");
    assert_eq!(out.stdout, "@(@(@(b,a),a),@(@(c,a),a))\n@(@(f,a),a)\n");
    let out = run(&["decode"], &out.stdout);
    assert_eq!(out.stdout, "b(a,a,c(a,a))\nf(a,a)\n");
    let out = run(&["decode", "-t", "@(a)"], "");
    assert_eq!(out.code, 2);
}

#[test]
fn missing_files_and_malformed_models_fail_cleanly() {
    let out = run(&["eval", "-A", "/nonexistent/model.wta", "-t", "a"], "");
    assert_ne!(out.code, 0);
    assert!(out.stderr.starts_with("error:"));
    let out = run(&["eval", "-A", "-", "-t", "a"], "wta\nsemiring: real\nbogus line\n");
    assert_eq!(out.code, 2);
}
