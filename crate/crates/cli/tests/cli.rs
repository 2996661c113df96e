use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cubic-dendrite"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).expect("utf-8 output")
}

/// Value of `key:` in the first record of kind `kind`.
fn field(text: &str, kind: &str, key: &str) -> Option<String> {
    let line = text.lines().find(|l| l.starts_with(&format!("record:{kind} ")))?;
    let start = line.find(&format!(" {key}:"))? + key.len() + 2;
    let rest = &line[start..];
    let end = if rest.starts_with('[') {
        rest.find(']').map(|i| i + 1)
    } else {
        rest.find(' ')
    };
    Some(rest[..end.unwrap_or(rest.len())].to_string())
}

fn complex(s: &str) -> (f64, f64) {
    let v: Vec<f64> = s.trim_matches(|c| c == '[' || c == ']').split(',').map(|x| x.parse().unwrap()).collect();
    (v[0], v[1])
}

fn check_lines(text: &str) -> Vec<&str> {
    text.lines().filter(|l| l.starts_with("record:check ")).collect()
}

#[test]
fn trace_ray_lands_at_the_second_critical_value_preimage() {
    let o = run(&["trace-ray", "--angle", "1/3", "--start", "2.0", "--end", "1e-8"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let (re, im) = complex(&field(&text, "ray", "landing").expect("landing resolved"));
    assert!((re + 2.958621655489772).abs() < 1e-5 && im.abs() < 1e-5, "{text}");
}

#[test]
fn verify_seed_passes_every_check() {
    let o = run(&["verify", "--poly", "seed", "--k", "2", "--l", "1"]);
    let text = stdout(&o);
    assert_eq!(o.status.code(), Some(0), "{text}");
    let checks = check_lines(&text);
    assert!(checks.len() > 10);
    assert!(checks.iter().all(|l| l.contains("status:pass")));
    assert_eq!(field(&text, "branching", "j").as_deref(), Some("0"));
}

#[test]
fn wrong_j_is_a_check_failure() {
    let o = run(&["verify", "--poly", "seed", "--j", "1"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("status:fail"));
}

#[test]
fn pipeline_errors_exit_with_two() {
    let o = run(&["trace-ray", "--angle", "1/0"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).contains("record:status command:trace-ray status:error"));
    let o = run(&["verify", "--poly", "seed", "--k", "3", "--l", "1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn emitted_polynomial_round_trips() {
    let first = stdout(&run(&["perturb", "--m", "1"]));
    let poly = field(&first, "perturbation", "poly").expect("poly field");
    let a = stdout(&run(&["verify", "--poly", &poly, "--k", "2", "--l", "3"]));
    let b = stdout(&run(&["verify", "--poly", &poly, "--k", "2", "--l", "3"]));
    assert_eq!(check_lines(&a), check_lines(&b));
    assert_eq!(field(&a, "input", "poly").as_deref(), Some(poly.as_str()));
    assert!(check_lines(&a).iter().all(|l| l.contains("status:pass")), "{a}");
}

#[test]
fn reproduce_fig5_is_deterministic_across_thread_counts() {
    let one = run(&["reproduce-fig5", "--threads", "1"]);
    let four = run(&["reproduce-fig5", "--threads", "4"]);
    assert_eq!(one.status.code(), Some(0), "{}", stdout(&one));
    assert_eq!(one.stdout, four.stdout);
    let text = stdout(&one);
    assert_eq!(field(&text, "status", "status").as_deref(), Some("pass"));
    let configs: Vec<String> = text
        .lines()
        .filter(|l| l.starts_with("record:member "))
        .map(|l| field(l, "member", "config").unwrap())
        .collect();
    assert_eq!(configs, ["[0,2,1]", "[2,2,3]", "[4,5,5]", "[9,8,10]"]);
    // timings go to stderr only
    assert!(String::from_utf8_lossy(&one.stderr).contains("record:timing"));
    assert!(!text.contains("seconds"));
}

#[test]
fn json_lines_parse() {
    let o = run(&["landing", "--angles", "0,1/2", "--json"]);
    assert_eq!(o.status.code(), Some(0));
    let lines: Vec<serde_json::Value> = stdout(&o).lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 3);
    assert_eq!(lines[1]["angle"], "1/2");
    let beta = lines[1]["landing"][0].as_f64().unwrap();
    assert!((beta + 3.958621655489772).abs() < 1e-5);
}

#[test]
fn puzzle_and_render_write_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = run(&["puzzle", "--depth", "3", "--out", out]);
    let text = stdout(&o);
    assert_eq!(o.status.code(), Some(0), "{text}");
    assert_eq!(text.lines().filter(|l| l.starts_with("record:puzzle-level ")).count(), 4);
    assert!(dir.path().join("puzzle.csv").exists() && dir.path().join("puzzle.svg").exists());

    let args = ["render", "--size", "64x48", "--rays", "1/3,2/3", "--critical", "--out", out];
    let a = run(&[&args[..], &["--threads", "1"]].concat());
    let bytes_a = std::fs::read(dir.path().join("render.ppm")).unwrap();
    let b = run(&[&args[..], &["--threads", "3"]].concat());
    let bytes_b = std::fs::read(dir.path().join("render.ppm")).unwrap();
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(bytes_a, bytes_b);
    assert!(bytes_a.starts_with(b"P6\n64 48\n255\n"));
}

#[test]
fn config_file_sets_defaults_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("settings.toml");
    std::fs::write(&cfg, "json = true\nlanding-tol = 1e-7\n").unwrap();
    let o = run(&["landing", "--angles", "0", "--config", cfg.to_str().unwrap()]);
    assert!(stdout(&o).starts_with('{'));
    std::fs::write(&cfg, "tol = \"loose\"\n").unwrap();
    let o = run(&["landing", "--angles", "0", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    std::fs::write(&cfg, "landing-tol = 1e-7\n").unwrap();
    let o = run(&["landing", "--angles", "0", "--config", cfg.to_str().unwrap(), "--landing-tol", "1e-6"]);
    assert_eq!(o.status.code(), Some(0));
}
