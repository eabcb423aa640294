use std::path::Path;
use std::process::{Command, Output};

fn esdg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_esdg")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

#[test]
fn invalid_flux_name_is_rejected() {
    let o = esdg(&["run", "--case", "sod", "--flux", "rusanov"]);
    assert!(!o.status.success());
    let err = stderr(&o);
    assert!(err.contains("rusanov") && err.contains("--flux"), "{err}");
}

#[test]
fn invalid_inputs_fail_with_messages() {
    let o = esdg(&["run", "--case", "nowhere"]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("unknown case"));
    let o = esdg(&["run", "--case", "sod", "--cfl", "-0.1"]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("cfl"));
    let o = esdg(&["run", "--case", "sod", "--quadrature", "gll"]);
    assert!(!o.status.success());
    let o = esdg(&["run", "--config", "/nonexistent/file.cfg"]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("nonexistent"));
}

#[test]
fn short_sod_run_writes_csv_schema() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sod");
    let o = esdg(&[
        "run",
        "--case",
        "sod",
        "--degree",
        "3",
        "--elements",
        "16",
        "--max-steps",
        "10",
        "--output-every",
        "0.001",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("done: 10 steps"));

    let diag = read(&out.join("diagnostics.csv"));
    let mut lines = diag.lines();
    assert_eq!(lines.next().unwrap(), "t,S,mass,energy,min_rho,min_p,dS_rel,relax_gamma");
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 11);
    assert!(rows.iter().all(|r| r.len() == 8));
    assert_eq!(rows[0][0], 0.0);
    assert!(rows.windows(2).all(|w| w[1][0] > w[0][0]));
    // no relaxation: gamma is one
    assert!(rows.iter().all(|r| r[7] == 1.0));

    let index = read(&out.join("snapshots.csv"));
    assert_eq!(index.lines().next().unwrap(), "index,t,file");
    for line in index.lines().skip(1) {
        let file = line.split(',').nth(2).unwrap();
        let snap = read(&out.join(file));
        assert_eq!(snap.lines().next().unwrap(), "x1,rho,rho_u1,rho_e,p,theta_prime");
        assert_eq!(snap.lines().count(), 1 + 16 * 4);
    }
    let summary = read(&out.join("summary.txt"));
    assert!(summary.contains("steps = 10"));
    assert!(summary.contains("max_entropy_change"));
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bubble.cfg");
    std::fs::write(&cfg, "case = bubble\ndegree = 2\nelements = 3x3\nflux = ec\nrelaxation = true\nmax_steps = 2\n").unwrap();
    let o = esdg(&["run", "--config", cfg.to_str().unwrap(), "--flux", "es", "--progress-every", "1"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("flux es") && text.contains("lsrk54-relaxation"), "{text}");
    assert!(text.contains("steps = 2"));
    assert!(text.contains("step       1"));
}

#[test]
fn verify_reports_all_passing() {
    let o = esdg(&["verify", "--seed", "4"]);
    assert!(o.status.success(), "{}", stdout(&o));
    let text = stdout(&o);
    assert!(text.lines().filter(|l| l.starts_with("PASS")).count() > 20);
    assert!(!text.contains("FAIL"));
    assert!(text.contains("0 failed"));
}

#[test]
fn convergence_writes_table() {
    let dir = tempfile::tempdir().unwrap();
    let o = esdg(&[
        "convergence",
        "--case",
        "density-wave-1d",
        "--degree",
        "2",
        "--elements",
        "4",
        "--t-end",
        "0.05",
        "--levels",
        "2",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let table = read(&dir.path().join("convergence.csv"));
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines[0], "level,elements,h,err_rho,rate_rho");
    assert_eq!(lines.len(), 3);
    let rate: f64 = lines[2].split(',').nth(4).unwrap().parse().unwrap();
    assert!(rate > 2.0, "{rate}");
}

#[test]
fn mesh_info_exports() {
    let dir = tempfile::tempdir().unwrap();
    let ops = dir.path().join("ops");
    let nodes = dir.path().join("nodes.csv");
    let o = esdg(&[
        "mesh-info",
        "--case",
        "bubble",
        "--degree",
        "2",
        "--elements",
        "2x2",
        "--dump-operators",
        ops.to_str().unwrap(),
        "--export-nodes",
        nodes.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("elements [2, 2] (4 total)"));
    assert!(std::fs::read_dir(&ops).unwrap().count() > 3);
    let text = read(&nodes);
    assert_eq!(text.lines().next().unwrap(), "element,node,x1,x2");
    assert_eq!(text.lines().count(), 1 + 4 * 9);
}
