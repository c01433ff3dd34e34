use std::path::Path;
use std::process::{Command, Output};

fn prestrain(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_prestrain"))
        .args(args)
        .env("RUST_LOG", "info")
        .env_remove("PRESTRAIN_WORKERS")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

/// Data rows as cells, after the hash comment and the header.
fn rows(csv: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut lines = csv.split("\r\n").filter(|l| !l.is_empty());
    let comment = lines.next().unwrap();
    assert!(comment.starts_with("# config-sha256: "), "{comment}");
    assert_eq!(comment.len(), "# config-sha256: ".len() + 64);
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    (header, lines.map(|l| l.split(',').map(String::from).collect()).collect())
}

fn column<'a>(header: &[String], row: &'a [String], name: &str) -> &'a str {
    &row[header.iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"))]
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn lattice_counts_for_the_diagonal_shell() {
    let (h, r) = rows(&stdout(&prestrain(&["lattices", "--radius-sq", "2", "--dim", "2"])));
    assert_eq!(r.len(), 1);
    assert_eq!(column(&h, &r[0], "orbit_size"), "4");
    assert_eq!(column(&h, &r[0], "families"), "8");
    let (h, r) = rows(&stdout(&prestrain(&["lattices", "--radius-sq", "2", "--dim", "2", "--families"])));
    assert_eq!(r.len(), 8);
    assert!(r.iter().all(|row| column(&h, row, "det").trim_start_matches('-') == "2"));
}

#[test]
fn envelope_at_twice_the_identity() {
    let (h, r) = rows(&stdout(&prestrain(&["qw", "--matrix", "2,0,0,2"])));
    assert_eq!(column(&h, &r[0], "W"), "2");
    assert_eq!(column(&h, &r[0], "QW"), "2");
    let (h, r) = rows(&stdout(&prestrain(&["qw", "--matrix", "-0.5,0,0,1"])));
    assert_eq!(column(&h, &r[0], "QW"), "0");
    assert!(!prestrain(&["qw", "--matrix", "1,2,3"]).status.success());
}

#[test]
fn flat_study_has_zero_minima_and_a_plot() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "demo.toml",
        "eps = [0.25, 0.125]\ncase = \"nearest-2d\"\n[metric]\nname = \"identity\"\ndim = 2\n[continuum]\nresolution = 6\n",
    );
    let svg = dir.path().join("plot.svg");
    let out = prestrain(&["study", "--config", &cfg, "--svg", svg.to_str().unwrap()]);
    let (h, r) = rows(&stdout(&out));
    let discrete: Vec<_> = r.iter().filter(|row| row[0] == "discrete").collect();
    assert_eq!(discrete.len(), 2);
    assert!(discrete.iter().all(|row| column(&h, row, "value") == "0"));
    let plot = std::fs::read_to_string(svg).unwrap();
    assert!(plot.starts_with("<svg") && plot.contains("<polyline"));
    assert!(String::from_utf8_lossy(&out.stderr).contains("resolved configuration"));
}

#[test]
fn identical_runs_write_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "run.toml",
        r#"
seed = 9
eps = [0.25, 0.125]

[metric]
name = "example1"
a = 0.25
b = 2.0

[deformation]
name = "noisy"
matrix = [0.7, 0.0, 0.0, 1.5]
noise = 0.2

[[cutoff]]
radius_sq = 1
weight = 1.0

[[cutoff]]
radius_sq = 2
weight = 0.5

[minimize]
max_iter = 300
"#,
    );
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for p in [&a, &b] {
        stdout(&prestrain(&["minimize", "--config", &cfg, "--output", p.to_str().unwrap()]));
    }
    let (ta, tb) = (std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(ta, tb);
    let (h, r) = rows(&String::from_utf8(ta).unwrap());
    assert_eq!(r.len(), 2);
    for row in &r {
        let start: f64 = column(&h, row, "initial").parse().unwrap();
        let end: f64 = column(&h, row, "min_energy").parse().unwrap();
        assert!(end <= start);
    }
}

#[test]
fn energy_and_representation_reports() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "energy.toml",
        "eps = 0.125\n[deformation]\nname = \"affine\"\nmatrix = [2.0, 0.0, 0.0, 2.0]\n",
    );
    let (h, r) = rows(&stdout(&prestrain(&["energy", "--config", &cfg])));
    let e: f64 = column(&h, &r[0], "E").parse().unwrap();
    // 7×7 interior nodes, 4·7·6 ordered nearest pairs, each stretched to twice its length
    assert!((e - 168.0 / 64.0).abs() < 1e-12, "{e}");
    let (h, r) = rows(&stdout(&prestrain(&["represent", "--config", &cfg])));
    let gap: f64 = column(&h, &r[0], "gap").parse().unwrap();
    let bound: f64 = column(&h, &r[0], "bound").parse().unwrap();
    assert!(gap >= 0.0 && gap <= bound);
}

#[test]
fn curvature_of_the_second_example() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "k.toml",
        "[metric]\nname = \"example2\"\noffset = 0.7853981633974483\ncoupling = 0.1\n[curvature]\ngrid = 3\n",
    );
    let (h, r) = rows(&stdout(&prestrain(&["curvature", "--config", &cfg])));
    assert_eq!(r.len(), 9);
    for row in &r {
        let x1: f64 = column(&h, row, "x1").parse().unwrap();
        let x2: f64 = column(&h, row, "x2").parse().unwrap();
        let k: f64 = column(&h, row, "kappa").parse().unwrap();
        let exact = -0.1 / (std::f64::consts::FRAC_PI_4 + 0.1 * x1 * x2).sin();
        assert!((k - exact).abs() < 1e-6 * exact.abs());
        assert_eq!(column(&h, row, "kappa_effective"), "0");
    }
}

#[test]
fn bad_configs_are_rejected_with_a_location() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "bad.toml", "eps = 0.25\nbogus = 1\n");
    let out = prestrain(&["energy", "--config", &cfg]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 2") && err.contains("bogus"), "{err}");
    let cfg = write_config(dir.path(), "neg.toml", "eps = -0.25\n[deformation]\nname = \"identity\"\n");
    assert!(!prestrain(&["energy", "--config", &cfg]).status.success());
    let cfg = write_config(dir.path(), "dim.toml", "[metric]\nname = \"identity\"\ndim = 3\n");
    assert!(!prestrain(&["minimize", "--config", &cfg]).status.success());
}

#[test]
fn worker_count_comes_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "w.toml", "eps = 0.25\n");
    let run = |env: Option<&str>, flag: Option<&str>| {
        let mut c = Command::new(env!("CARGO_BIN_EXE_prestrain"));
        c.args(["minimize", "--config", &cfg]).env("RUST_LOG", "info").env_remove("PRESTRAIN_WORKERS");
        if let Some(v) = env {
            c.env("PRESTRAIN_WORKERS", v);
        }
        if let Some(v) = flag {
            c.args(["--workers", v]);
        }
        let out = c.output().unwrap();
        assert!(out.status.success());
        String::from_utf8_lossy(&out.stderr).to_string()
    };
    assert!(run(None, None).contains("workers = 1"));
    assert!(run(Some("3"), None).contains("workers = 3"));
    assert!(run(Some("3"), Some("2")).contains("workers = 2"));
}
