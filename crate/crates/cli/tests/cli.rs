use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn hetblock(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hetblock"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn generate(dir: &Path, extra: &[&str]) {
    let mut args = vec!["generate", "--out", p(dir), "--seed", "5"];
    args.extend_from_slice(extra);
    let out = hetblock(&args);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn pipeline_is_reproducible() {
    let tmp = TempDir::new().unwrap();
    let data = tmp.path().join("data");
    generate(&data, &["--n-left", "120", "--n-right", "100", "--n-dups", "40"]);
    let run = |name: &str| {
        let out_dir = tmp.path().join(name);
        let out = hetblock(&[
            "pipeline",
            "--left",
            p(&data.join("left.csv")),
            "--right",
            p(&data.join("right.csv")),
            "--truth",
            p(&data.join("truth.csv")),
            "--n",
            "30",
            "--seed",
            "9",
            "--out",
            p(&out_dir),
        ]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
        out_dir
    };
    let a = run("a");
    let b = run("b");
    for f in ["scheme.json", "gamma.csv", "mappings.json", "duplicates.csv", "learn_report.json"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    let report = json(&a.join("pipeline_report.json"));
    assert_eq!(report["mapping_source"], "matcher");
    let eval = json(&a.join("eval_report.json"));
    assert_eq!(eval["pq_identity_holds"], true);
    let timings = fs::read_to_string(a.join("timings.csv")).unwrap();
    assert!(timings.starts_with("stage,seconds\nload,"));
    assert_eq!(timings.lines().count(), 6);
}

#[test]
fn convert_round_trip_and_errors() {
    let tmp = TempDir::new().unwrap();
    let one = tmp.path().join("one.nt");
    fs::write(&one, "<http://x.org/s1> <http://x.org/name> \"Ann\" .\n").unwrap();
    let csv = tmp.path().join("one.csv");
    let out = hetblock(&["convert", "--input", p(&one), "--output", p(&csv), "--direction", "nt-to-csv"]);
    assert_eq!(code(&out), 0);
    assert_eq!(fs::read_to_string(&csv).unwrap(), "subject,name\ns1,Ann\n");

    let table = tmp.path().join("t.csv");
    fs::write(&table, "subject,name,phone\nb,Bo,null\na,Ann,1;2\n").unwrap();
    let nt = tmp.path().join("t.nt");
    let back = tmp.path().join("back.csv");
    assert_eq!(code(&hetblock(&["convert", "--input", p(&table), "--output", p(&nt), "--direction", "csv-to-nt"])), 0);
    assert_eq!(code(&hetblock(&["convert", "--input", p(&nt), "--output", p(&back), "--direction", "nt-to-csv"])), 0);
    assert_eq!(fs::read_to_string(&back).unwrap(), "subject,name,phone\na,Ann,1;2\nb,Bo,null\n");

    let bad = tmp.path().join("bad.nt");
    let mut text = "<s> <p> \"o\" .\n".repeat(6);
    text.push_str("<s> <p> broken\n");
    fs::write(&bad, text).unwrap();
    let out = hetblock(&["convert", "--input", p(&bad), "--output", p(&back), "--direction", "nt-to-csv"]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 7"));
}

#[test]
fn match_reports_defaults_and_mapping_quality() {
    let tmp = TempDir::new().unwrap();
    let data = tmp.path().join("data");
    generate(&data, &["--noise", "0"]);
    let left = data.join("left.csv");
    let right = data.join("right.csv");
    let out_dir = tmp.path().join("m");
    let out = hetblock(&[
        "match",
        "--left",
        p(&left),
        "--right",
        p(&right),
        "--truth-mapping",
        p(&data.join("q_truth.json")),
        "--out",
        p(&out_dir),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let report = json(&out_dir.join("match_report.json"));
    assert_eq!(report["t"], 50);
    assert_eq!(report["theta"], 0.5);
    assert_eq!(report["mapping_precision"], 1.0);

    let ex = tmp.path().join("ex");
    let out = hetblock(&["match", "--left", p(&left), "--right", p(&right), "--exhaustive", "--out", p(&ex)]);
    assert_eq!(code(&out), 0);
    assert_eq!(json(&ex.join("mappings.json")).as_array().unwrap().len(), 25);
    assert_eq!(json(&ex.join("match_report.json"))["exhaustive"], true);

    let empty = tmp.path().join("empty.csv");
    fs::write(&empty, "id,name\n").unwrap();
    let out = hetblock(&["match", "--left", p(&empty), "--right", p(&right), "--out", p(&ex)]);
    assert_eq!(code(&out), 3);
}

#[test]
fn learn_failure_and_determinism() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    fs::write(d.join("l.csv"), "id,fruit\na1,apple\na2,orange\n").unwrap();
    fs::write(d.join("r.csv"), "id,fruit\nb1,apple\nb2,kiwi\n").unwrap();
    fs::write(d.join("dups.csv"), "left_id,right_id,cosine\na1,b1,1\na2,b2,0.5\n").unwrap();
    fs::write(d.join("q.json"), r#"[{"left":["fruit"],"right":["fruit"],"score":1.0}]"#).unwrap();
    let learn = |kappa: &str, out: &str| {
        hetblock(&[
            "learn",
            "--left",
            p(&d.join("l.csv")),
            "--right",
            p(&d.join("r.csv")),
            "--duplicates",
            p(&d.join("dups.csv")),
            "--mappings",
            p(&d.join("q.json")),
            "--kappa",
            kappa,
            "--out",
            p(&d.join(out)),
        ])
    };
    let out = learn("1.0", "fail");
    assert_eq!(code(&out), 4);
    assert!(String::from_utf8_lossy(&out.stderr).contains("learner failure"));

    assert_eq!(code(&learn("0.4", "x")), 0);
    assert_eq!(code(&learn("0.4", "y")), 0);
    assert_eq!(fs::read(d.join("x/scheme.json")).unwrap(), fs::read(d.join("y/scheme.json")).unwrap());
}

#[test]
fn block_and_evaluate() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    fs::write(d.join("l.csv"), "id,name\nz,ann lee\na,bo\n").unwrap();
    fs::write(d.join("r.csv"), "id,name\ny,lee\nx,ann\nw,cy\n").unwrap();
    fs::write(
        d.join("scheme.json"),
        r#"{"k":1,"terms":[{"atoms":[{"gbp":"Tokens","left":"name","right":"name"}]}]}"#,
    )
    .unwrap();
    fs::write(d.join("empty.json"), "").unwrap();
    fs::write(d.join("truth.csv"), "left_id,right_id\nz,x\n").unwrap();
    let f = |name: &str| d.join(name).to_str().unwrap().to_string();
    let (l, r, scheme, empty, gamma, truth) = (
        f("l.csv"),
        f("r.csv"),
        f("scheme.json"),
        f("empty.json"),
        f("gamma.csv"),
        f("truth.csv"),
    );
    let inputs = ["--left", l.as_str(), "--right", r.as_str()];

    let mut args = vec!["block", "--scheme", empty.as_str(), "--out", p(d)];
    args.extend_from_slice(&inputs);
    assert_eq!(code(&hetblock(&args)), 3);
    args[2] = scheme.as_str();
    assert_eq!(code(&hetblock(&args)), 0);
    assert_eq!(fs::read_to_string(d.join("gamma.csv")).unwrap(), "left_id,right_id\nz,x\nz,y\n");
    let stats = json(&d.join("block_stats.json"));
    assert_eq!(stats["blocks"], 4);
    assert_eq!(stats["max_block_records"], 2);

    let mut args = vec!["evaluate", "--gamma", gamma.as_str(), "--truth", truth.as_str(), "--out", p(d)];
    args.extend_from_slice(&inputs);
    assert_eq!(code(&hetblock(&args)), 0);
    let eval = json(&d.join("eval_report.json"));
    assert_eq!(eval["pc"], 1.0);
    assert_eq!(eval["pq"], 0.5);
    assert_eq!(eval["pq_identity_holds"], true);

    fs::write(d.join("none.csv"), "left_id,right_id\n").unwrap();
    let out = hetblock(&[
        "evaluate", "--gamma", p(&d.join("none.csv")), "--truth", p(&d.join("truth.csv")), "--n-left", "2",
        "--n-right", "3", "--out", p(d),
    ]);
    assert_eq!(code(&out), 0);
    let eval = json(&d.join("eval_report.json"));
    assert_eq!((eval["rr"].as_f64(), eval["pc"].as_f64(), eval["pq"].as_f64()), (Some(1.0), Some(0.0), Some(0.0)));
}

#[test]
fn config_file_and_flag_precedence() {
    let tmp = TempDir::new().unwrap();
    let data = tmp.path().join("data");
    generate(&data, &["--n-left", "80", "--n-right", "80", "--n-dups", "30"]);
    let cfg = tmp.path().join("cfg.json");
    let config = serde_json::json!({
        "left": {"path": data.join("left.csv")},
        "right": {"path": data.join("right.csv")},
        "matcher": {"t": 20, "theta": 0.5, "n": 20, "seed": 1},
        "learner": {"kappa": 0.2, "k": 1},
        "out": tmp.path().join("from_file"),
    });
    fs::write(&cfg, config.to_string()).unwrap();

    let out = hetblock(&["pipeline", "--config", p(&cfg), "--kappa", "0.5"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let report = json(&tmp.path().join("from_file/pipeline_report.json"));
    assert_eq!(report["config"]["learner"]["kappa"], 0.5);
    assert_eq!(report["config"]["matcher"]["t"], 20);

    let q = tmp.path().join("q.json");
    fs::write(&q, r#"[{"left":["name"],"right":["full_name"],"score":1.0}]"#).unwrap();
    let out = hetblock(&["pipeline", "--config", p(&cfg), "--mappings", p(&q), "--exhaustive"]);
    assert_eq!(code(&out), 3);
    let out = hetblock(&["pipeline", "--config", p(&cfg), "--mappings", p(&q)]);
    assert_eq!(code(&out), 0);

    fs::write(&cfg, "{\"learner\": ").unwrap();
    assert_eq!(code(&hetblock(&["pipeline", "--config", p(&cfg)])), 2);
}
