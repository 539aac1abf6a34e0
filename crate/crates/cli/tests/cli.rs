use std::fs;
use std::io::Write;
use std::path::Path;
use std::process::{Command, Output, Stdio};

const CELECOXIB: &str = "CC1=CC=C(C=C1)C1=CC(C(F)(F)F)=NN1C1=CC=C(C=C1)S(N)(=O)=O";
const FIG1F: &str = "[1*]C&[1*]C1=CC=C([2*])C=C1&[2*]C1=CC([3*])=NN1[5*]&[3*]C([4*])(F)F&[4*]F^[5*]C1=CC=C([6*])C=C1&&[6*]S(N)(=O)=O&&&";

const CORPUS: [&str; 6] = [
    "CC(=O)NC1=CC=C(O)C=C1",
    CELECOXIB,
    "CCN(CC)CCOC(=O)C1=CC=C(N)C=C1",
    "CC(C)CC1=CC=C(C=C1)C(C)C(O)=O",
    "OC1=CC=CC=C1",
    "CN1C=NC2=C1C(=O)N(C)C(=O)N2C",
];

fn run(args: &[&str], stdin: &str) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_tsmiles"))
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    let _ = child.stdin.take().unwrap().write_all(stdin.as_bytes());
    child.wait_with_output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn encode_single_atom() {
    let o = run(&["encode"], "C\n");
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "#tsmiles scheme=tsid dialect=paper\nC&&\n");
}

#[test]
fn encode_celecoxib_golden() {
    let o = run(&["encode", "--scheme", "tsid"], &format!("{CELECOXIB}\n"));
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).lines().nth(1), Some(FIG1F));
}

#[test]
fn empty_input_fails() {
    let o = run(&["encode"], "");
    assert_eq!(o.status.code(), Some(1));
    assert!(!o.stderr.is_empty());
}

#[test]
fn decode_simple_text() {
    let o = run(&["decode"], "#tsmiles scheme=tsid dialect=paper\nCO&&\n");
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "CO\n");
}

#[test]
fn malformed_line_goes_to_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "in.tsm", "#tsmiles scheme=tsid dialect=paper\nCO&&\n^C(&&\nCC&&\n");
    let out = dir.path().join("out.smi");
    let o = run(&["decode", "-i", &input, "-o", out.to_str().unwrap()], "");
    assert_eq!(o.status.code(), Some(3));
    assert_eq!(fs::read_to_string(&out).unwrap(), "CO\nCC\n");
    let errors = fs::read_to_string(dir.path().join("out.smi.errors")).unwrap();
    assert_eq!(errors.lines().count(), 1);
    assert!(errors.starts_with("3\tparse\t"));
}

#[test]
fn decode_report_is_json_lines() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("r.jsonl");
    let o = run(&["decode", "--report", report.to_str().unwrap()], "#tsmiles scheme=tsdy dialect=paper\n*C&*C&&&\n");
    assert_eq!(o.status.code(), Some(0));
    let text = fs::read_to_string(report).unwrap();
    let v: serde_json::Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
    assert_eq!(v["smiles"], "CC");
    assert_eq!(v["report"]["joins"][0]["candidates"], 1);
}

#[test]
fn encode_decode_files_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "in.smi", &(CORPUS.join("\n") + "\n"));
    for scheme in ["tsid", "tssa", "vanilla"] {
        let enc = dir.path().join(format!("{scheme}.tsm"));
        let o = run(&["encode", "-i", &input, "-o", enc.to_str().unwrap(), "--scheme", scheme], "");
        assert_eq!(o.status.code(), Some(0));
        let o = run(&["decode", "-i", enc.to_str().unwrap()], "");
        assert_eq!(o.status.code(), Some(0), "{scheme}");
        let canon = run(&["decode", "-i", &input, "--scheme", "vanilla"], "");
        if scheme != "tssa" {
            assert_eq!(stdout(&o), stdout(&canon), "{scheme}");
        } else {
            assert_eq!(stdout(&o).lines().count(), CORPUS.len());
        }
    }
}

#[test]
fn roundtrip_summary() {
    let o = run(&["roundtrip", "--scheme", "tsid"], &(CORPUS.join("\n") + "\n"));
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "identical\t6\ndiffers\t0\nkekulization-exempt\t0\nfailed\t0\n");
    let o = run(&["roundtrip", "--scheme", "tsdy", "--seed", "5"], &(CORPUS.join("\n") + "\n"));
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).ends_with("failed\t0\n"));
}

#[test]
fn augment_lists_every_root() {
    let o = run(&["augment"], &format!("{CELECOXIB}\n"));
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 7);
    assert!(rows.iter().all(|r| r.starts_with("1\t")));
    assert!(rows.contains(&format!("1\t{FIG1F}").as_str()));
}

#[test]
fn generate_ngram_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "in.smi", &(CORPUS.join("\n") + "\n"));
    let args = ["generate", "ngram", "-i", &input, "--scheme", "tsdy", "--order", "5", "--count", "40", "--seed", "9"];
    let a = run(&args, "");
    let b = run(&args, "");
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    assert!(!a.stdout.is_empty());
    let summary = String::from_utf8(a.stderr).unwrap();
    assert!(summary.lines().any(|l| l == "attempted\t40"));
}

#[test]
fn generate_pool_save_and_reload() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "in.smi", &(CORPUS.join("\n") + "\n"));
    let pool = dir.path().join("p.pool");
    let first = run(
        &[
            "generate",
            "pool",
            "-i",
            &input,
            "--scheme",
            "tssa",
            "--count",
            "25",
            "--seed",
            "2",
            "--save-pool",
            pool.to_str().unwrap(),
        ],
        "",
    );
    assert_eq!(first.status.code(), Some(0));
    assert_eq!(stdout(&first).lines().count(), 25);
    let again = run(
        &["generate", "pool", "--pool", pool.to_str().unwrap(), "--count", "25", "--seed", "2", "--reference", &input],
        "",
    );
    assert_eq!(again.status.code(), Some(0));
    assert_eq!(first.stdout, again.stdout);
    assert_eq!(first.stderr, again.stderr);
}

#[test]
fn missing_reference_is_config_error() {
    let o = run(&["generate", "pool", "--reference", "/nonexistent/ref.smi"], "C\n");
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn bad_names_are_config_errors() {
    for args in [["encode", "--scheme", "tsxx"], ["encode", "--dialect", "loose"], ["encode", "--root", "middle"]] {
        assert_eq!(run(&args, "C\n").status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "run.conf", "# defaults\nscheme = tsdy\ndialect = strict\n");
    let o = run(&["encode", "--config", &cfg], "CCOC\n");
    assert_eq!(stdout(&o).lines().next(), Some("#tsmiles scheme=tsdy dialect=strict"));
    let o = run(&["encode", "--config", &cfg, "--scheme", "tsid"], "CCOC\n");
    assert_eq!(stdout(&o).lines().next(), Some("#tsmiles scheme=tsid dialect=strict"));
    let bad = write(dir.path(), "bad.conf", "colour = blue\n");
    assert_eq!(run(&["encode", "--config", &bad], "C\n").status.code(), Some(2));
}

#[test]
fn stats_single_line() {
    let o = run(&["stats"], "C(C)C\n");
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("token\tinput\tC\t3\t0.600000\n"));
    assert!(text.contains("paren_fraction\tinput\t0.400000\n"));
    assert!(text.contains("depth\tinput\t1\t3\t0.600000\n"));
}

#[test]
fn stats_compares_schemes_and_sets() {
    let dir = tempfile::tempdir().unwrap();
    let other = write(dir.path(), "other.smi", "CCO\nCCCC\n");
    let o = run(&["stats", "--scheme", "tssa", "--compare", &other], &(CORPUS.join("\n") + "\n"));
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let value = |key: &str| -> f64 { text.lines().find_map(|l| l.strip_prefix(key)).unwrap().parse().unwrap() };
    assert!(value("paren_fraction\ttssa\t") < value("paren_fraction\tinput\t"));
    assert!(value("w1_heavy_atom_count\t") > 0.0);
}
