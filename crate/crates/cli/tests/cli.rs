use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use meshmark::mesh::write_obj;
use meshmark::synth::feature_sphere;
use tempfile::TempDir;

fn meshmark(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_meshmark"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code_of(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn path(dir: &TempDir, name: &str) -> String {
    dir.path().join(name).display().to_string()
}

/// Writes a small sphere, a toy code and a config naming it by relative path.
fn workspace() -> TempDir {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("mesh.obj"), write_obj(&feature_sphere(24, 1).unwrap())).unwrap();
    let out = meshmark(&[
        "codegen", "--q", "15", "--mu", "3", "--eta", "14", "--out", &path(&dir, "toy.alist"),
        "--report", &path(&dir, "codegen.txt"),
    ]);
    assert_eq!(code_of(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    fs::write(dir.path().join("wm.cfg"), "# toy setup\ndelta = 0.01\ncode = toy.alist\n").unwrap();
    dir
}

fn read(dir: &TempDir, name: &str) -> String {
    fs::read_to_string(dir.path().join(name)).unwrap()
}

#[test]
fn codegen_report_describes_code() {
    let dir = workspace();
    let report = read(&dir, "codegen.txt");
    assert!(report.contains("n = 210"), "{report}");
    assert!(report.contains("girth_at_least_6 = true"), "{report}");
    assert!(read(&dir, "toy.alist").starts_with("210 "));
}

#[test]
fn blind_round_trip() {
    let dir = workspace();
    let payload = "1011001110001";
    let out = meshmark(&[
        "embed", "--mesh", &path(&dir, "mesh.obj"), "--payload", payload, "--key", "42", "--config",
        &path(&dir, "wm.cfg"), "--out", &path(&dir, "marked.obj"), "--report", &path(&dir, "embed.txt"),
    ]);
    assert_eq!(code_of(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(read(&dir, "embed.txt").contains("payload_bits = 13"));

    let out = meshmark(&[
        "extract", "--mesh", &path(&dir, "marked.obj"), "--key", "42", "--config", &path(&dir, "wm.cfg"),
        "--payload-bits", "13",
    ]);
    assert_eq!(code_of(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), payload);
}

#[test]
fn oracle_round_trip_after_attack() {
    let dir = workspace();
    let payload = "0110";
    let out = meshmark(&[
        "embed", "--mesh", &path(&dir, "mesh.obj"), "--payload", payload, "--key", "7", "--config",
        &path(&dir, "wm.cfg"), "--out", &path(&dir, "marked.obj"), "--report", &path(&dir, "embed.txt"),
        "--selection", &path(&dir, "sel.csv"),
    ]);
    assert_eq!(code_of(&out), 0);
    assert!(read(&dir, "sel.csv").starts_with("channel_position,vertex_index\n0,"));

    let out = meshmark(&[
        "attack", "--mesh", &path(&dir, "marked.obj"), "--simplify", "1.0", "--out", &path(&dir, "attacked.obj"),
        "--survival", &path(&dir, "survival.csv"), "--report", &path(&dir, "attack.txt"),
    ]);
    assert_eq!(code_of(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(read(&dir, "survival.csv").starts_with("original_index,survived,new_index\n0,1,0\n"));

    let out = meshmark(&[
        "extract", "--mesh", &path(&dir, "attacked.obj"), "--key", "7", "--config", &path(&dir, "wm.cfg"),
        "--selection", &path(&dir, "sel.csv"), "--survival", &path(&dir, "survival.csv"), "--embed-report",
        &path(&dir, "embed.txt"), "--payload-bits", "4", "--report", &path(&dir, "extract.txt"),
    ]);
    assert_eq!(code_of(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), payload);
    let report = read(&dir, "extract.txt");
    assert!(report.contains("mode = oracle") && report.contains("p_hat = 0"), "{report}");
}

#[test]
fn region_attack_writes_survival_map() {
    let dir = workspace();
    let out = meshmark(&[
        "attack", "--mesh", &path(&dir, "mesh.obj"), "--region-hops", "2", "--seed", "3", "--out",
        &path(&dir, "cut.obj"), "--survival", &path(&dir, "survival.csv"),
    ]);
    assert_eq!(code_of(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let csv = read(&dir, "survival.csv");
    let deleted = csv.lines().skip(1).filter(|l| l.contains(",0,")).count();
    assert!(deleted > 1);
    assert!(String::from_utf8_lossy(&out.stdout).contains("attack = region"));
}

#[test]
fn sweep_and_capacity_csvs() {
    let dir = tempfile::tempdir().unwrap();
    let out = meshmark(&[
        "sweep", "--q", "15", "--mu", "3", "--eta", "14", "--p-d", "0.05,0.01", "--frames", "20", "--seed", "1",
        "--out", &path(&dir, "sweep.csv"),
    ]);
    assert_eq!(code_of(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let sweep = read(&dir, "sweep.csv");
    let mut lines = sweep.lines();
    assert_eq!(lines.next(), Some("p_d,frames,bit_errors,frame_errors,ber,fer,mean_iterations,nonconverged"));
    assert_eq!(lines.count(), 2);

    let out = meshmark(&["capacity", "--sizes", "2,4", "--p-d", "0,0.05", "--out", &path(&dir, "cap.csv")]);
    assert_eq!(code_of(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let cap = read(&dir, "cap.csv");
    let mut lines = cap.lines();
    assert_eq!(lines.next(), Some("p_d,alphabet_size,c_unit,iterations,converged,p_star"));
    let first: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(&first[..2], ["0", "2"]);
    assert!((first[2].parse::<f64>().unwrap() - 0.40569).abs() < 1e-4);
    assert_eq!(first[5].split(';').count(), 2);
}

#[test]
fn rank_writes_ordered_csv() {
    let dir = workspace();
    let out = meshmark(&[
        "rank", "--mesh", &path(&dir, "mesh.obj"), "--config", &path(&dir, "wm.cfg"), "--out", &path(&dir, "rank.csv"),
    ]);
    assert_eq!(code_of(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let csv = read(&dir, "rank.csv");
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("index,score,kappa_g,kappa_h"));
    let scores: Vec<f64> = lines.map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert!(scores.len() > 630);
    assert!(scores.windows(2).all(|w| w[0] >= w[1]));
}

#[test]
fn synth_writes_obj() {
    let dir = tempfile::tempdir().unwrap();
    let out = meshmark(&["synth", "--kind", "icosphere", "--out", &path(&dir, "ico.obj")]);
    assert_eq!(code_of(&out), 0);
    assert!(read(&dir, "ico.obj").lines().any(|l| l.starts_with("f ")));
}

#[test]
fn exit_codes_follow_error_kind() {
    let dir = workspace();
    let mesh = path(&dir, "mesh.obj");
    let cfg = path(&dir, "wm.cfg");
    let embed = |mesh: &str, cfg: &str, payload: &str| {
        meshmark(&[
            "embed", "--mesh", mesh, "--payload", payload, "--key", "1", "--config", cfg, "--out",
            &path(&dir, "o.obj"), "--report", &path(&dir, "r.txt"),
        ])
    };
    // Missing file.
    assert_eq!(code_of(&embed(&path(&dir, "absent.obj"), &cfg, "1")), 1);
    // Malformed OBJ.
    fs::write(dir.path().join("bad.obj"), "v 0 0\n").unwrap();
    assert_eq!(code_of(&embed(&path(&dir, "bad.obj"), &cfg, "1")), 2);
    // Usage error.
    assert_eq!(code_of(&meshmark(&["embed", "--mesh", &mesh])), 2);
    // Unknown config key, and a payload that is not binary.
    fs::write(dir.path().join("odd.cfg"), "code = toy.alist\nflavour = 3\n").unwrap();
    assert_eq!(code_of(&embed(&mesh, &path(&dir, "odd.cfg"), "1")), 3);
    assert_eq!(code_of(&embed(&mesh, &cfg, "10x1")), 3);
    // Payload longer than k.
    let long = "1".repeat(500);
    assert_eq!(code_of(&embed(&mesh, &cfg, &long)), 4);
    // Too few vertices for the selection.
    let tiny = dir.path().join("tiny.obj");
    fs::write(&tiny, write_obj(&meshmark::synth::icosphere(1).unwrap())).unwrap();
    assert_eq!(code_of(&embed(&tiny.display().to_string(), &cfg, "1")), 4);
    assert!(!Path::new(&path(&dir, "o.obj")).exists());
}

#[test]
fn extract_from_unmarked_mesh_finds_nothing() {
    let dir = workspace();
    let out = meshmark(&[
        "extract", "--mesh", &path(&dir, "mesh.obj"), "--key", "1", "--config", &path(&dir, "wm.cfg"),
    ]);
    let code = code_of(&out);
    assert_eq!(code, 4, "{}", String::from_utf8_lossy(&out.stderr));
}
