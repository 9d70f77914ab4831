use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use htn::fixtures;
use htn::io::parse_plan_json;
use htn::model::Step;

struct Dir(PathBuf);

impl Dir {
    fn new(tag: &str) -> Self {
        let p = std::env::temp_dir().join(format!("htn-cli-{tag}-{}", std::process::id()));
        fs::create_dir_all(&p).unwrap();
        Dir(p)
    }

    fn file(&self, name: &str, text: &str) -> PathBuf {
        let p = self.0.join(name);
        fs::write(&p, text).unwrap();
        p
    }
}

impl Drop for Dir {
    fn drop(&mut self) {
        let _ = fs::remove_dir_all(&self.0);
    }
}

fn htn(args: &[&dyn AsRef<std::ffi::OsStr>]) -> Output {
    let mut c = Command::new(env!("CARGO_BIN_EXE_htn"));
    for a in args {
        c.arg(a);
    }
    c.output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn logistics(dir: &Dir) -> (PathBuf, PathBuf) {
    (dir.file("logistics.htd", fixtures::LOGISTICS), dir.file("fig1.htp", fixtures::FIG1))
}

#[test]
fn solve_prints_a_plan_that_validates() {
    let dir = Dir::new("solve");
    let (d, p) = logistics(&dir);
    let out = htn(&[&"solve", &d, &p, &"--validate"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let plan = parse_plan_json(&stdout(&out)).unwrap();
    assert_eq!(plan.steps.len(), 6);
    assert_eq!(plan.steps[4], Step::new("!fly", &["p", "l2", "l4"]));

    let json = dir.file("plan.json", &stdout(&out));
    assert_eq!(code(&htn(&[&"validate", &d, &p, &json])), 0);

    let text = htn(&[&"solve", &d, &p, &"--format", &"text"]);
    assert_eq!(code(&text), 0);
    let listing = stdout(&text);
    assert!(listing.contains("(!unload-plane p b l4)"), "{listing}");
    let txt = dir.file("plan.txt", &listing);
    assert_eq!(code(&htn(&[&"validate", &d, &p, &txt])), 0);

    let broken = dir.file("broken.txt", &listing.replace("(!drive t l1 l2)", "(!drive t l2 l1)"));
    let out = htn(&[&"validate", &d, &p, &broken]);
    assert_eq!(code(&out), 1);
}

#[test]
fn exit_codes_follow_the_outcome() {
    let dir = Dir::new("codes");
    let (d, p) = logistics(&dir);
    let noplane = dir.file("noplane.htp", fixtures::FIG1_NOPLANE);
    assert_eq!(code(&htn(&[&"solve", &d, &p, &"--budget", &"1"])), 2);
    assert_eq!(code(&htn(&[&"solve", &d, &p, &"--engine", &"plan", &"--budget", &"1"])), 2);
    assert_eq!(code(&htn(&[&"solve", &d, &noplane])), 1);
    assert_eq!(code(&htn(&[&"solve", &d, &dir.0.join("missing.htp")])), 3);
    let bad = dir.file("bad.htd", "(define (domain d) (:operator (a)))");
    let out = htn(&[&"solve", &bad, &p]);
    assert_eq!(code(&out), 3);
    assert!(String::from_utf8_lossy(&out.stderr).contains("bad.htd:1:"));
}

#[test]
fn blocks_stack_solves_and_validates() {
    let dir = Dir::new("blocks");
    let d = dir.file("blocks.htd", fixtures::BLOCKS);
    let p = dir.file("stack2.htp", fixtures::STACK2);
    assert_eq!(code(&htn(&[&"solve", &d, &p, &"--validate"])), 0);
}

#[test]
fn classify_oracle_and_generator() {
    let dir = Dir::new("misc");
    let (d, p) = logistics(&dir);
    let out = htn(&[&"classify", &d]);
    assert_eq!(stdout(&out).trim(), "regular, recursive, totally-ordered, with variables");

    let out = htn(&[&"oracle", &d, &p]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).contains("(!fly p l2 l4)"));

    let out = htn(&[&"gen-logistics", &"--boxes", &"2", &"--seed", &"3", &"--out", &dir.0]);
    assert_eq!(code(&out), 0);
    let listed = stdout(&out);
    let paths: Vec<&Path> = listed.lines().map(|l| Path::new(l.trim())).collect();
    assert_eq!(paths.len(), 2);
    let solved = htn(&[&"solve", &paths[0], &paths[1], &"--validate"]);
    assert_eq!(code(&solved), 0);
}

#[test]
fn bench_json_has_one_row_per_size_and_engine() {
    let out = htn(&[&"bench", &"--boxes", &"1..3", &"--engine", &"state,plan", &"--format", &"json"]);
    assert_eq!(code(&out), 0);
    let report = htn::bench::BenchReport::from_json(&stdout(&out)).unwrap();
    assert_eq!(report.rows.len(), 6);
    assert!(report.rows.iter().all(|r| r.valid));
}
