use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use esdg::config::RunConfig;
use esdg::run::{convergence, resolve, run};
use esdg::simulation::{build_mesh, build_operators};
use esdg::verify::all_checks;

#[derive(Parser)]
#[command(name = "esdg", version, about = "Entropy-stable DG solver for compressible Euler with gravity")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a case and write diagnostics, snapshots and a summary.
    Run(Common),
    /// Refine a case uniformly and report L2 errors and observed rates.
    Convergence {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        levels: Option<usize>,
        /// Comma-separated list of rho, p, T, w.
        #[arg(long)]
        quantities: Option<String>,
    },
    /// Check discrete identities and print one PASS/FAIL line each.
    Verify {
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Describe the mesh and operators of a configured case.
    MeshInfo {
        #[command(flatten)]
        common: Common,
        /// Write every reference operator as CSV into this directory.
        #[arg(long)]
        dump_operators: Option<PathBuf>,
        /// Write interpolation node coordinates to this CSV file.
        #[arg(long)]
        export_nodes: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Common {
    /// `key = value` configuration file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    case: Option<String>,
    #[arg(long)]
    degree: Option<String>,
    /// Resolution multiplier for the case's element aspect.
    #[arg(long)]
    resolution: Option<String>,
    /// Element counts, e.g. `32` or `25x3`.
    #[arg(long)]
    elements: Option<String>,
    /// lgl or gauss
    #[arg(long)]
    quadrature: Option<String>,
    /// ec or es
    #[arg(long)]
    flux: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    cfl: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    t_end: Option<String>,
    #[arg(long)]
    warp: Option<String>,
    #[arg(long)]
    relaxation: Option<String>,
    #[arg(long)]
    out: Option<String>,
    #[arg(long)]
    output_every: Option<String>,
    #[arg(long)]
    max_steps: Option<String>,
    #[arg(long)]
    adaptive_dt: Option<String>,
    #[arg(long)]
    progress_every: Option<String>,
    /// auto or general
    #[arg(long)]
    kernel: Option<String>,
    #[arg(long)]
    seed: Option<String>,
}

impl Common {
    fn config(&self) -> Result<RunConfig> {
        let mut c = match &self.config {
            Some(p) => RunConfig::from_file(p).with_context(|| format!("reading {}", p.display()))?,
            None => RunConfig::default(),
        };
        let overrides = [
            ("case", &self.case),
            ("degree", &self.degree),
            ("resolution", &self.resolution),
            ("elements", &self.elements),
            ("quadrature", &self.quadrature),
            ("flux", &self.flux),
            ("cfl", &self.cfl),
            ("t_end", &self.t_end),
            ("warp", &self.warp),
            ("relaxation", &self.relaxation),
            ("out", &self.out),
            ("output_every", &self.output_every),
            ("max_steps", &self.max_steps),
            ("adaptive_dt", &self.adaptive_dt),
            ("progress_every", &self.progress_every),
            ("kernel", &self.kernel),
            ("seed", &self.seed),
        ];
        for (key, value) in overrides {
            if let Some(v) = value {
                c.set(key, v).with_context(|| format!("--{}", key.replace('_', "-")))?;
            }
        }
        c.validate()?;
        Ok(c)
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn execute(cli: Cli) -> Result<bool> {
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    match cli.command {
        Command::Run(common) => {
            let config = common.config()?;
            let result = run(&config, &mut out)?;
            if config.out.is_none() {
                result.summary.write(&mut out)?;
            }
            Ok(true)
        }
        Command::Convergence { common, levels, quantities } => {
            let mut config = common.config()?;
            if let Some(l) = levels {
                config.set("levels", &l.to_string())?;
            }
            if let Some(q) = quantities {
                config.set("quantities", &q)?;
            }
            config.validate()?;
            let out_dir = config.out.clone();
            let table = convergence(&config, &mut out)?;
            if table.self_convergence {
                writeln!(out, "errors measured against a run one level finer")?;
            }
            table.write_csv(&mut out)?;
            if let Some(dir) = out_dir {
                std::fs::create_dir_all(&dir)?;
                let path = dir.join("convergence.csv");
                let mut f = std::fs::File::create(&path).with_context(|| format!("creating {}", path.display()))?;
                table.write_csv(&mut f)?;
            }
            Ok(true)
        }
        Command::Verify { seed } => {
            let checks = all_checks(seed)?;
            for c in &checks {
                writeln!(out, "{c}")?;
            }
            let failed = checks.iter().filter(|c| !c.pass).count();
            writeln!(out, "{} checks, {} failed", checks.len(), failed)?;
            Ok(failed == 0)
        }
        Command::MeshInfo { common, dump_operators, export_nodes } => {
            let config = common.config()?;
            let r = resolve(&config)?;
            let ops = build_operators(r.options.degree, r.case.dim, r.options.quadrature)?;
            let mesh = build_mesh(&r.case, &ops, &r.options)?;
            writeln!(out, "case {}", r.case.name)?;
            writeln!(out, "elements {:?} ({} total)", r.options.elements, mesh.n_elements)?;
            writeln!(out, "degree {} quadrature {} warp {}", r.options.degree, r.options.quadrature, r.options.warp)?;
            writeln!(out, "nodes per element {}", ops.n_nodes())?;
            writeln!(out, "volume points per element {}", ops.n_vol())?;
            writeln!(out, "face points per element {}", ops.n_face())?;
            writeln!(out, "collocated {}", ops.collocated)?;
            writeln!(out, "dofs {}", mesh.n_elements * ops.n_nodes() * (r.case.dim + 2))?;
            writeln!(out, "jacobian range {:.6e} {:.6e}", mesh.min_jacobian(), mesh.max_jacobian())?;
            writeln!(out, "volume {:.12e}", mesh.volume(&ops))?;
            writeln!(out, "gcl residual {:.3e}", mesh.gcl_residual(&ops))?;
            let (sbp, cst) = ops.sbp_residuals();
            writeln!(out, "sbp residual {sbp:.3e} constant residual {cst:.3e}")?;
            if let Some(dir) = dump_operators {
                std::fs::create_dir_all(&dir)?;
                ops.dump_csv(&dir)?;
                writeln!(out, "operators written to {}", dir.display())?;
            }
            if let Some(path) = export_nodes {
                if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
                    std::fs::create_dir_all(parent)?;
                }
                mesh.export_nodes_csv(&path)?;
                writeln!(out, "nodes written to {}", path.display())?;
            }
            if !(mesh.min_jacobian() > 0.0) {
                bail!("mesh has a nonpositive jacobian");
            }
            Ok(true)
        }
    }
}
