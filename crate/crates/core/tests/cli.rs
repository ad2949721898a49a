use std::process::{Command, Output};

const SUBCOMMANDS: [&str; 14] = [
    "harvest",
    "counts",
    "convert",
    "corpus-stats",
    "authors-split",
    "idparse",
    "idscan",
    "build-graph",
    "graph-stats",
    "split",
    "featurize",
    "train",
    "evaluate",
    "ablation",
];

fn arxivnet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_arxivnet")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn help_documents_every_flag() {
    let top = arxivnet(&["--help"]);
    assert!(top.status.success());
    for sub in SUBCOMMANDS {
        assert!(stdout(&top).contains(sub), "{sub} missing from top-level help");
        let out = arxivnet(&[sub, "--help"]);
        assert!(out.status.success(), "{sub} --help failed");
        let help = stdout(&out);
        for flag in ["--config", "--format", "--jobs", "--verbose"] {
            assert!(help.contains(flag), "{sub} --help lacks {flag}");
        }
        // every long flag line carries a description or a value name
        for line in help.lines().filter(|l| l.trim_start().starts_with("--")) {
            assert!(line.trim().contains(' '), "{sub}: undocumented flag line {line:?}");
        }
    }
}

#[test]
fn idparse_examples() {
    let ok = arxivnet(&["idparse", "0704.0001"]);
    assert_eq!(ok.status.code(), Some(0));
    assert_eq!(stdout(&ok), "0704.0001\n");

    let bad = arxivnet(&["idparse", "0713.0001"]);
    assert_eq!(bad.status.code(), Some(1));
    let err = String::from_utf8_lossy(&bad.stderr);
    assert_eq!(err.lines().count(), 1);
    assert!(err.starts_with("error[id]: "));
    assert!(bad.stdout.is_empty());
}

#[test]
fn usage_and_config_exit_codes() {
    assert_eq!(arxivnet(&["no-such-command"]).status.code(), Some(2));
    assert_eq!(arxivnet(&["graph-stats", "--bogus"]).status.code(), Some(2));
    assert_eq!(arxivnet(&["graph-stats"]).status.code(), Some(3));
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "[paths]\nunknown = 1\n").unwrap();
    let out = arxivnet(&["--config", cfg.to_str().unwrap(), "counts"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error[config]: "));
}

#[test]
fn graph_stats_json_keys() {
    let dir = tempfile::tempdir().unwrap();
    let edges = dir.path().join("fixture.tsv");
    std::fs::write(&edges, "#nodes\n0704.0001\n0704.0002\n0704.0003\n0704.0004\n#edges\n0704.0001\t0704.0002\n0704.0003\t0704.0002\n").unwrap();
    let out = arxivnet(&["graph-stats", "--edges", edges.to_str().unwrap(), "--format", "json"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    for key in ["n_nodes", "n_edges", "mean_degree", "wcc_fraction", "isolated_fraction", "alpha_in", "x_min_in", "alpha_out", "x_min_out"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    assert_eq!(v["n_nodes"], 4);
    assert_eq!(v["mean_degree"], 1.0);
    assert_eq!(v["isolated_fraction"], 0.25);
}

#[test]
fn idscan_reads_stdin() {
    use std::io::Write;
    use std::process::Stdio;
    let mut child = Command::new(env!("CARGO_BIN_EXE_arxivnet"))
        .arg("idscan")
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(b"cf. arXiv:1501.00001v2 and hep-th/9901001").unwrap();
    let out = child.wait_with_output().unwrap();
    assert_eq!(stdout(&out), "10\t1501.00001v2\n27\thep-th/9901001\n");
}
