use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn dmt(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dmt"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn ok(args: &[&str], cwd: &Path) -> Output {
    let o = dmt(args, cwd);
    assert_eq!(code(&o), 0, "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    o
}

fn read(p: impl AsRef<Path>) -> String {
    fs::read_to_string(p).unwrap()
}

fn manifest_value(text: &str, key: &str) -> String {
    text.lines()
        .find_map(|l| l.split_once(" = ").filter(|(k, _)| *k == key).map(|(_, v)| v.to_string()))
        .unwrap_or_else(|| panic!("no {key}"))
}

const SMALL: &[&str] = &["--epochs", "3", "--dims", "-1,16,2", "--k", "5", "--q", "8"];

fn small_train(dir: &Path, data: &str, out: &str, extra: &[&str]) -> Output {
    let mut args = vec!["train", data, "--label-col", "0", "-o", out];
    args.extend_from_slice(SMALL);
    args.extend_from_slice(extra);
    dmt(&args, dir)
}

fn smile(dir: &Path) {
    ok(&["generate", "smileface", "--size", "60", "--seed", "2", "-o", "sf.csv"], dir);
}

#[test]
fn generate_shapes_and_bytes() {
    let d = tempfile::tempdir().unwrap();
    let p = d.path();
    ok(&["generate", "swissroll", "--size", "1500", "--seed", "7", "-o", "a.csv"], p);
    ok(&["generate", "swissroll", "--size", "1500", "--seed", "7", "-o", "b.csv"], p);
    let a = read(p.join("a.csv"));
    assert_eq!(a, read(p.join("b.csv")));
    assert_eq!(a.lines().count(), 1500);
    assert!(a.lines().all(|l| l.split(',').count() == 4));

    ok(&["generate", "repeatpoints", "--copies", "300", "--dim", "100", "-o", "r.csv"], p);
    let r = read(p.join("r.csv"));
    assert_eq!(r.lines().count(), 900);
    assert!(r.lines().all(|l| l.split(',').count() == 101));
}

#[test]
fn exit_codes() {
    let d = tempfile::tempdir().unwrap();
    let p = d.path();
    assert_eq!(code(&dmt(&["generate", "moons", "-o", "x.csv"], p)), 1);
    assert_eq!(code(&dmt(&["train", "--bogus"], p)), 1);
    assert_eq!(code(&dmt(&["generate", "swissroll", "-o", "no/such/dir/x.csv"], p)), 2);
    assert_eq!(code(&dmt(&["train", "missing.csv", "-o", "out"], p)), 2);

    fs::write(p.join("bad.csv"), "1,2\n3,oops\n").unwrap();
    let o = dmt(&["train", "bad.csv", "-o", "out"], p);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("row 2"));

    smile(p);
    let o = small_train(p, "sf.csv", "boom", &["--lr", "1e300"]);
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).contains("epoch"));
    assert_eq!(code(&small_train(p, "sf.csv", "neg", &["--lr", "-1"])), 1);
}

#[test]
fn config_errors_list_every_line() {
    let d = tempfile::tempdir().unwrap();
    let p = d.path();
    smile(p);
    fs::write(p.join("c.cfg"), "epochs = 2\nlearnrate = 0.1\n# fine\nq = abc\n").unwrap();
    let o = dmt(&["train", "sf.csv", "--config", "c.cfg", "-o", "out"], p);
    assert_eq!(code(&o), 1);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("c.cfg:2: unknown key `learnrate`"), "{err}");
    assert!(err.contains("c.cfg:4:"), "{err}");
    assert_eq!(code(&dmt(&["train", "sf.csv", "--preset", "nope", "-o", "out"], p)), 1);
}

#[test]
fn presets_and_mode_are_recorded() {
    let d = tempfile::tempdir().unwrap();
    let p = d.path();
    smile(p);
    let args = |preset: &'static str, out: &'static str| {
        vec!["train", "sf.csv", "--label-col", "0", "--preset", preset, "--epochs", "1", "--dims", "-1,8,2", "-o", out]
    };
    ok(&args("swissroll", "sr"), p);
    let m = read(p.join("sr/manifest.txt"));
    assert_eq!(manifest_value(&m, "config.nu_end"), "100.0");
    assert_eq!(manifest_value(&m, "config.q"), "40.0");
    ok(&args("mnist", "mn"), p);
    let m = read(p.join("mn/manifest.txt"));
    assert_eq!(manifest_value(&m, "config.nu_end"), "0.001");
    assert_eq!(manifest_value(&m, "config.q"), "20.0");

    ok(&["train", "sf.csv", "-o", "lis", "--mode", "lis"].iter().chain(SMALL).copied().collect::<Vec<_>>(), p);
    let m = read(p.join("lis/manifest.txt"));
    assert_eq!(manifest_value(&m, "config.mode"), "lis");
    assert_eq!(manifest_value(&m, "metrics.srm"), "skipped: no labels");
}

#[test]
fn train_is_idempotent_and_replayable() {
    let d = tempfile::tempdir().unwrap();
    let p = d.path();
    smile(p);
    for out in ["a", "b"] {
        let o = small_train(p, "sf.csv", out, &["--autoencoder", "true", "--checkpoint-every", "1", "--eval-every", "1"]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    }
    for f in ["embedding.csv", "manifest.txt", "ckpt-1", "ckpt-3", "metrics_history.csv"] {
        assert_eq!(read(p.join("a").join(f)), read(p.join("b").join(f)), "{f}");
    }
    let emb = read(p.join("a/embedding.csv"));
    assert!(emb.starts_with("id,label,z1,z2\n0,"));
    assert_eq!(emb.lines().count(), 61);
    assert_eq!(read(p.join("a/metrics_history.csv")).lines().count(), 4);
    let m = read(p.join("a/manifest.txt"));
    assert_eq!(manifest_value(&m, "loss").split(',').count(), 3);
    assert!(read(p.join("a/timing.txt")).starts_with("wall_seconds = "));

    let o = ok(&["replay", "a/manifest.txt", "-o", "replayed"], p);
    assert!(String::from_utf8_lossy(&o.stdout).contains("replay matches"));
    assert_eq!(read(p.join("replayed/embedding.csv")), emb);

    // resuming from the epoch-1 checkpoint reproduces the uninterrupted run
    let o = small_train(p, "sf.csv", "resumed", &["--autoencoder", "true", "--resume", "a/ckpt-1"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(read(p.join("resumed/embedding.csv")), emb);

    // a changed dataset is refused
    ok(&["generate", "smileface", "--size", "60", "--seed", "3", "-o", "sf.csv"], p);
    assert_eq!(code(&dmt(&["replay", "a/manifest.txt", "-o", "again"], p)), 2);
}

#[test]
fn eval_reports() {
    let d = tempfile::tempdir().unwrap();
    let p = d.path();
    smile(p);
    // identity embedding of 2-D data
    let rows: Vec<String> = read(p.join("sf.csv")).lines().map(String::from).collect();
    let mut emb = String::from("id,z1,z2\n");
    let mut plain = String::new();
    for (i, r) in rows.iter().enumerate() {
        let (_, xy) = r.split_once(',').unwrap();
        emb.push_str(&format!("{i},{xy}\n"));
        plain.push_str(&format!("{xy}\n"));
    }
    fs::write(p.join("emb.csv"), &emb).unwrap();
    fs::write(p.join("plain.csv"), &plain).unwrap();

    let o = ok(&["eval", "sf.csv", "emb.csv", "--label-col", "0", "-o", "rep.txt"], p);
    let rep = read(p.join("rep.txt"));
    assert_eq!(String::from_utf8_lossy(&o.stdout), rep);
    assert_eq!(manifest_value(&rep, "con"), "1.0");
    assert_eq!(manifest_value(&rep, "tru"), "1.0");
    assert_eq!(manifest_value(&rep, "rre"), "0.0");
    assert_eq!(manifest_value(&rep, "srm"), "0.0");
    assert_eq!(manifest_value(&rep, "k_used"), "3");

    let rep = String::from_utf8(ok(&["eval", "plain.csv", "emb.csv"], p).stdout).unwrap();
    assert_eq!(manifest_value(&rep, "srm"), "skipped: no labels");
    assert_eq!(manifest_value(&rep, "acc"), "skipped: no labels");

    fs::write(p.join("short.csv"), emb.lines().take(30).collect::<Vec<_>>().join("\n")).unwrap();
    assert_eq!(code(&dmt(&["eval", "plain.csv", "short.csv"], p)), 2);
    fs::write(p.join("dup.csv"), emb.replacen("\n1,", "\n0,", 1)).unwrap();
    let o = dmt(&["eval", "plain.csv", "dup.csv"], p);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("duplicate id"));
}

#[test]
fn plot_and_layers() {
    let d = tempfile::tempdir().unwrap();
    let p = d.path();
    fs::write(p.join("e.csv"), "id,label,z1,z2\n0,0,0.0,1.0\n1,1,2.0,3.0\n2,1,-1.0,0.5\n").unwrap();
    ok(&["plot", "e.csv", "-o", "a.svg"], p);
    ok(&["plot", "e.csv", "-o", "b.svg"], p);
    let svg = read(p.join("a.svg"));
    assert_eq!(svg, read(p.join("b.svg")));
    assert_eq!(svg.matches("<circle").count(), 3);
    fs::write(p.join("e3.csv"), "id,z1,z2,z3\n0,0,0,0\n1,1,1,1\n").unwrap();
    assert_eq!(code(&dmt(&["plot", "e3.csv", "-o", "c.svg"], p)), 2);

    ok(&["generate", "swissroll", "--size", "80", "-o", "sr.csv"], p);
    let mut args = vec!["train", "sr.csv", "--label-col", "0", "-o", "run", "--epochs", "2", "--dims", "-1,6,4,2"];
    args.extend_from_slice(&["--k", "5", "--q", "8"]);
    ok(&args, p);
    ok(&["layers", "run/ckpt-2", "sr.csv", "--label-col", "0", "-o", "layers"], p);
    let mut files: Vec<String> = fs::read_dir(p.join("layers"))
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    files.sort();
    let csv: Vec<&String> = files.iter().filter(|f| f.ends_with(".csv") && !f.contains("pca")).collect();
    assert_eq!(csv.len(), 4);
    assert!(files.contains(&"layer_1_pca.csv".to_string()));
    assert!(files.contains(&"layer_3.svg".to_string()));
    let last = read(p.join("layers/layer_3.csv"));
    assert_eq!(last, read(p.join("run/embedding.csv")));

    ok(&["generate", "swissroll", "--size", "80", "-o", "two.csv"], p);
    fs::write(p.join("narrow.csv"), "0,1\n2,3\n").unwrap();
    assert_eq!(code(&dmt(&["layers", "run/ckpt-2", "narrow.csv", "-o", "x"], p)), 2);
}

#[test]
fn sweep_runs_each_value() {
    let d = tempfile::tempdir().unwrap();
    let p = d.path();
    smile(p);
    let run = |out: &'static str| {
        let mut a = vec!["sweep", "sf.csv", "--label-col", "0", "--key", "q", "--values", "5,20,45", "-o", out];
        a.extend_from_slice(&["--epochs", "2", "--dims", "-1,8,2", "--k", "5"]);
        ok(&a, p)
    };
    run("s1");
    run("s2");
    let s = read(p.join("s1/summary.csv"));
    assert_eq!(s, read(p.join("s2/summary.csv")));
    assert_eq!(s.lines().count(), 4);
    assert!(s.starts_with("value,final_loss,con,tru,rre,dpc,srm,acc\n5,"));
    for v in ["q-5", "q-20", "q-45"] {
        assert!(p.join("s1").join(v).join("embedding.csv").exists());
    }
    assert_eq!(code(&dmt(&["sweep", "sf.csv", "--key", "lr", "--values", "1", "-o", "s3"], p)), 1);
}
