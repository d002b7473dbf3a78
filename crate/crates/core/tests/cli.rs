use std::path::Path;
use std::process::{Command, Output};

fn srj(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_srj"))
        .args(args)
        .env_remove("SRJ_SEED")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn data_rows(text: &str) -> Vec<&str> {
    text.lines().filter(|l| !l.starts_with('#')).skip(1).collect()
}

fn assets() -> String {
    format!("{}/../../assets", env!("CARGO_MANIFEST_DIR"))
}

#[test]
fn scheme_rows() {
    let one = srj(&["scheme", "1"]);
    assert!(one.status.success());
    let text = stdout(&one);
    assert!(text.starts_with("# schema=1\nindex,omega,order_position\n"));
    assert_eq!(data_rows(&text).len(), 1);

    let level = srj(&["scheme", "--level", "10"]);
    assert!(level.status.success());
    assert_eq!(data_rows(&stdout(&level)).len(), 47);

    assert_eq!(srj(&["scheme", "0"]).status.code(), Some(1));
    assert_eq!(srj(&["scheme", "--level", "25"]).status.code(), Some(1));
}

#[test]
fn solve_reports_and_exit_codes() {
    let o = srj(&["solve", "--problem", "poisson1d:100"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let trailer: Vec<&str> = text.lines().last().unwrap().split(',').collect();
    assert_eq!(trailer[0], "total");
    assert_eq!(trailer[2], "converged");
    let its: usize = trailer[6].parse().unwrap();
    assert!(its < 1500, "{its}");

    let o = srj(&["solve", "--problem", "poisson1d:100", "--controller", "jacobi", "--max-iters", "1000"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).lines().last().unwrap().contains("not_converged"));

    let o = srj(&["solve", "--problem", "nonsense:3"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(!o.stderr.is_empty());
}

#[test]
fn solve_mesh_and_trace() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("trace.csv");
    let mesh = format!("mesh:{}/disk.mesh", assets());
    let o = srj(&[
        "solve",
        "--problem",
        &mesh,
        "--tol",
        "1e-9",
        "--trace",
        trace.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let t = std::fs::read_to_string(&trace).unwrap();
    assert!(t.starts_with("# schema=1\n"));
    assert!(data_rows(&t).len() > 10);
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn bench_rows(spec: &str) -> Vec<Vec<String>> {
    let o = srj(&["bench", spec]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    data_rows(&stdout(&o))
        .iter()
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn bench_is_reproducible_and_ordered() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write(
        dir.path(),
        "b.toml",
        "problems = [\"poisson1d:50\", \"poisson1d:100\", \"poisson1d:200\", \"poisson1d:400\", \"tridiag:100\"]\n\
         controllers = [\"heuristic\", \"increasing\"]\n\
         tol = 1e-7\n\
         repetitions = 2\n",
    );
    let strip = |rows: Vec<Vec<String>>| -> Vec<Vec<String>> {
        rows.into_iter().map(|mut r| {
            r.pop();
            r
        })
        .collect()
    };
    let a = strip(bench_rows(&spec));
    let b = strip(bench_rows(&spec));
    assert_eq!(a, b);
    assert_eq!(a.len(), 5 * 2 * 2);

    for size in ["50", "100", "200", "400"] {
        let its = |c: &str| -> usize {
            a.iter()
                .find(|r| r[0] == format!("poisson1d:{size}") && r[2] == c)
                .unwrap()[4]
                .parse()
                .unwrap()
        };
        assert!(its("heuristic") <= its("increasing"), "size {size}");
    }

    let empty = write(dir.path(), "e.toml", "problems = [\"poisson1d:10\"]\ncontrollers = []\n");
    assert_eq!(srj(&["bench", &empty]).status.code(), Some(1));
    let unknown = write(dir.path(), "u.toml", "problems = [\"poisson1d:10\"]\ncontrollers = [\"jacobi\"]\nbogus = 1\n");
    assert_eq!(srj(&["bench", &unknown]).status.code(), Some(1));
}

#[test]
fn collect_then_fit() {
    let dir = tempfile::tempdir().unwrap();
    let args = |out: &str| {
        vec![
            "collect".to_string(),
            "--sizes".into(),
            "10,20".into(),
            "--points".into(),
            "4000".into(),
            "--seed".into(),
            "7".into(),
            "-o".into(),
            out.into(),
        ]
    };
    let p1 = dir.path().join("a.csv");
    let p2 = dir.path().join("b.csv");
    for p in [&p1, &p2] {
        let a = args(p.to_str().unwrap());
        let a: Vec<&str> = a.iter().map(String::as_str).collect();
        assert_eq!(srj(&a).status.code(), Some(0));
    }
    let d1 = std::fs::read(&p1).unwrap();
    assert_eq!(d1, std::fs::read(&p2).unwrap());
    assert_eq!(data_rows(std::str::from_utf8(&d1).unwrap()).len(), 4000);

    let th = dir.path().join("t.txt");
    let cl = dir.path().join("c.csv");
    let o = srj(&[
        "fit",
        "--data",
        p1.to_str().unwrap(),
        "--n-set",
        "200",
        "--clusters",
        cl.to_str().unwrap(),
        "-o",
        th.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let t = std::fs::read_to_string(&th).unwrap();
    assert!(t.contains("t_hi=") && t.contains("t_lo="));
    assert!(cl.exists());

    let o = srj(&["solve", "--problem", "poisson1d:50", "--thresholds", th.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));

    let empty = write(dir.path(), "empty.csv", "");
    assert_eq!(srj(&["fit", "--data", &empty]).status.code(), Some(1));
}

#[test]
fn help_and_usage_errors() {
    assert_eq!(srj(&["--help"]).status.code(), Some(0));
    assert_eq!(srj(&[]).status.code(), Some(1));
    assert_eq!(srj(&["levels"]).status.code(), Some(0));
}
