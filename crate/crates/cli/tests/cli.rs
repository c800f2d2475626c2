use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn crpq(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_crpq")).args(args).env_remove("RUST_LOG").output().expect("binary runs")
}

fn path(dir: &TempDir, name: &str) -> String {
    dir.path().join(name).to_string_lossy().into_owned()
}

fn write(dir: &TempDir, name: &str, text: &str) -> String {
    let p = path(dir, name);
    fs::write(&p, text).unwrap();
    p
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

#[test]
fn star_instance_end_to_end() {
    let dir = TempDir::new().unwrap();
    let graph = path(&dir, "star.tsv");
    let gen = crpq(&["gen", "--family", "star", "--n", "1", "--out", &graph]);
    assert!(gen.status.success(), "{}", stderr(&gen));
    let edges = fs::read_to_string(&graph).unwrap();
    assert_eq!(edges.lines().filter(|l| !l.starts_with('#')).count(), 6);
    assert!(stderr(&gen).contains("vertices=7 edges=6"));
    let query = dir.path().join("star.query");
    assert!(Path::new(&query).exists());

    for engine in ["optimal", "baseline", "oracle"] {
        let out = crpq(&["eval", &graph, query.to_str().unwrap(), "--engine", engine]);
        assert!(out.status.success(), "{engine}: {}", stderr(&out));
        assert_eq!(stdout(&out), "u_0\tz_1\tz_2\n");
        assert!(stderr(&out).contains("rows=1"));
    }
}

#[test]
fn eval_writes_sorted_rows_to_file() {
    let dir = TempDir::new().unwrap();
    let graph = write(&dir, "g.tsv", "c\tp\tx\nb\tp\tx\na\tp\tx\nx\tq\ty\n");
    let query = write(&dir, "q.txt", "free: A Y\natom: A p X\natom: X q Y\n");
    let out_path = path(&dir, "rows.tsv");
    let out = crpq(&["eval", &graph, &query, "--out", &out_path, "--parallel"]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert_eq!(fs::read_to_string(&out_path).unwrap(), "a\ty\nb\ty\nc\ty\n");
    assert!(stdout(&out).is_empty());
    let again = path(&dir, "rows2.tsv");
    crpq(&["eval", &graph, &query, "--out", &again]);
    assert_eq!(fs::read(&out_path).unwrap(), fs::read(&again).unwrap());
}

#[test]
fn empty_graph_has_no_answers() {
    let dir = TempDir::new().unwrap();
    let graph = write(&dir, "g.tsv", "");
    let query = write(&dir, "q.txt", "free: X Y\natom: X a Y\n");
    let out = crpq(&["eval", &graph, &query]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out), "");
    assert!(stderr(&out).contains("rows=0"));
}

#[test]
fn exit_codes() {
    let dir = TempDir::new().unwrap();
    let graph = write(&dir, "g.tsv", "u\ta\tv\n");
    let self_loop = write(&dir, "loop.txt", "free: X\natom: X a X\n");
    let out = crpq(&["eval", &graph, &self_loop]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("cannot have a self-loop"), "{}", stderr(&out));
    assert_eq!(crpq(&["eval", &graph, &self_loop, "--engine", "baseline"]).status.code(), Some(2));

    let bad = write(&dir, "bad.txt", "free: X\natom: X (a Y\n");
    assert_eq!(crpq(&["eval", &graph, &bad]).status.code(), Some(1));
    let bad_graph = write(&dir, "bad.tsv", "only\ttwo\n");
    let ok_query = write(&dir, "ok.txt", "free: X\natom: X a Y\n");
    assert_eq!(crpq(&["eval", &bad_graph, &ok_query]).status.code(), Some(1));
    assert_eq!(crpq(&["eval", &graph, &ok_query, "--engine", "fastest"]).status.code(), Some(1));

    // Enough star leaves to push the oracle's intermediate rows past its guard.
    let star = path(&dir, "star.tsv");
    assert!(crpq(&["gen", "--n", "10000", "--out", &star]).status.success());
    let guarded = crpq(&["eval", &star, &path(&dir, "star.query"), "--engine", "oracle"]);
    assert_eq!(guarded.status.code(), Some(3), "{}", stderr(&guarded));
}

#[test]
fn analyze_reports_widths() {
    let dir = TempDir::new().unwrap();
    let q2 = write(&dir, "q2.txt", "free: Y1 Y2 Y3\natom: X r1 Y1\natom: X r2 Y2\natom: X r3 Y3\n");
    let out = crpq(&["analyze", &q2]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("fn_fhtw=3 trivial=false exponent=0.6667"), "{text}");
    let q1 = write(&dir, "q1.txt", "free: X Y1 Y2 Y3\natom: X r1 Y1\natom: X r2 Y2\natom: X r3 Y3\n");
    assert!(stdout(&crpq(&["analyze", &q1])).contains("fn_fhtw=1 trivial=false exponent=0.5000"));

    let running = write(
        &dir,
        "running.txt",
        "free: D E F G K L\n\
         atom: A r1 B\natom: A r2 C\natom: A r3 D\natom: C r4 E\natom: C r5 F\natom: D r6 G\n\
         atom: E r7 H\natom: F r8 I\natom: F r9 J\natom: H r10 K\natom: H r11 L\n",
    );
    let text = stdout(&crpq(&["analyze", &running]));
    assert!(text.contains("components=4"), "{text}");
    assert!(text.contains("fn_fhtw=3"));

    let cyclic = write(&dir, "cyc.txt", "free: X\natom: X a Y\natom: Y b X\n");
    let out = crpq(&["analyze", &cyclic]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stdout(&out).contains("parallel edges"), "{}", stdout(&out));
    assert_eq!(crpq(&["analyze", &write(&dir, "junk.txt", "atom: X a Y\n")]).status.code(), Some(1));
}

#[test]
fn bench_writes_csv_and_slopes() {
    let dir = TempDir::new().unwrap();
    let csv = path(&dir, "bench.csv");
    let out = crpq(&["bench", "--family", "star", "--n", "2^4,2^5", "--engine", "optimal,baseline", "--reps", "3", "--out", &csv]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "n,engine,rep,wall_ns,N,OUT,OUT_a,rounds");
    assert_eq!(lines.len(), 1 + 2 * 2 * 3);
    assert!(lines[1].starts_with("16,optimal,0,"));
    assert!(lines.iter().skip(1).all(|l| l.split(',').count() == 8));
    let err = stderr(&out);
    assert!(err.contains("slope optimal") && err.contains("slope baseline"), "{err}");

    let single = crpq(&["bench", "--n", "8", "--engine", "oracle", "--reps", "2"]);
    assert!(single.status.success());
    assert_eq!(stdout(&single).lines().count(), 1 + 2);
    assert!(stderr(&single).contains("n/a"));

    assert_eq!(crpq(&["bench", "--family", "grid", "--n", "8"]).status.code(), Some(1));
}

#[test]
fn gen_is_reproducible_and_validated() {
    let dir = TempDir::new().unwrap();
    let a = path(&dir, "a.tsv");
    let b = path(&dir, "b.tsv");
    for p in [&a, &b] {
        assert!(crpq(&["gen", "--family", "random", "--n", "50", "--seed", "9", "--out", p]).status.success());
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert!(!dir.path().join("a.query").exists());
    assert_eq!(crpq(&["gen", "--family", "star", "--n", "0", "--out", &a]).status.code(), Some(1));
}
