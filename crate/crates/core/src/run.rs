//! Case runs and convergence studies, with CSV output.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use crate::cases::{case_by_name, CaseSetup};
use crate::config::RunConfig;
use crate::diagnostics::{
    convergence_rates, l2_box_norms, l2_errors, primitive_from_conservative, relative_change, DiagnosticsRow, Quantity,
    Rate, DIAGNOSTICS_HEADER,
};
use crate::error::{Error, Result};
use crate::simulation::{Discretization, DiscretizationOptions};
use crate::time::{integrate, Scheme, TimeStepperConfig};

/// Case, discretization and stepper settings after applying defaults.
pub struct ResolvedRun {
    pub case: CaseSetup,
    pub options: DiscretizationOptions,
    pub stepper: TimeStepperConfig,
}

pub fn resolve(config: &RunConfig) -> Result<ResolvedRun> {
    config.validate()?;
    let case = case_by_name(&config.case)?;
    let resolution = config.resolution.unwrap_or(case.default_resolution);
    let mut options = DiscretizationOptions::new(&case, config.degree, resolution);
    if let Some(e) = &config.elements {
        if e.len() != case.dim {
            return Err(Error::Config(format!(
                "case '{}' is {}D but {} element counts were given",
                case.name,
                case.dim,
                e.len()
            )));
        }
        options.elements = e.clone();
    }
    options.quadrature = config.quadrature;
    options.flux = config.flux;
    options.path = config.kernel;
    if let Some(w) = config.warp {
        options.warp = w;
    }
    let stepper = TimeStepperConfig {
        scheme: if config.relaxation { Scheme::Lsrk54Relaxation } else { Scheme::Lsrk54 },
        cfl: config.cfl.unwrap_or(case.cfl),
        t_end: config.t_end.unwrap_or(case.t_end),
        relaxation_tol: config.relaxation_tol,
        relaxation_max_iter: config.relaxation_max_iter,
        adaptive_dt: config.adaptive_dt,
    };
    stepper.validate()?;
    Ok(ResolvedRun { case, options, stepper })
}

/// Final invariant values of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub case: String,
    pub steps: usize,
    pub t_final: f64,
    pub dt: f64,
    pub entropy_initial: f64,
    pub entropy_final: f64,
    /// Largest `|S - S0| / |S0|` over the run.
    pub max_entropy_change: f64,
    /// Largest single-step increase `(S_{n+1} - S_n) / |S_n|`.
    pub max_entropy_increase: f64,
    pub mass_drift: f64,
    pub energy_drift: f64,
    pub min_density: f64,
    pub max_density: f64,
    pub min_pressure: f64,
    pub max_speed: f64,
    pub gamma_min: f64,
    pub gamma_max: f64,
    pub wall_seconds: f64,
}

impl RunSummary {
    pub fn write(&self, w: &mut impl Write) -> std::io::Result<()> {
        writeln!(w, "case = {}", self.case)?;
        writeln!(w, "steps = {}", self.steps)?;
        writeln!(w, "t_final = {:.17e}", self.t_final)?;
        writeln!(w, "dt = {:.17e}", self.dt)?;
        writeln!(w, "entropy_initial = {:.17e}", self.entropy_initial)?;
        writeln!(w, "entropy_final = {:.17e}", self.entropy_final)?;
        writeln!(w, "max_entropy_change = {:.6e}", self.max_entropy_change)?;
        writeln!(w, "max_entropy_increase = {:.6e}", self.max_entropy_increase)?;
        writeln!(w, "mass_drift = {:.6e}", self.mass_drift)?;
        writeln!(w, "energy_drift = {:.6e}", self.energy_drift)?;
        writeln!(w, "min_density = {:.17e}", self.min_density)?;
        writeln!(w, "max_density = {:.17e}", self.max_density)?;
        writeln!(w, "min_pressure = {:.17e}", self.min_pressure)?;
        writeln!(w, "max_speed = {:.6e}", self.max_speed)?;
        writeln!(w, "gamma_range = {:.17e} {:.17e}", self.gamma_min, self.gamma_max)?;
        writeln!(w, "wall_seconds = {:.3}", self.wall_seconds)
    }
}

pub struct RunResult {
    pub case: CaseSetup,
    pub disc: Discretization,
    pub q0: Vec<f64>,
    pub q: Vec<f64>,
    pub rows: Vec<DiagnosticsRow>,
    pub summary: RunSummary,
}

fn write_snapshot(path: &Path, case: &CaseSetup, disc: &Discretization, q: &[f64]) -> Result<()> {
    let mut f = BufWriter::new(File::create(path)?);
    let dim = disc.dim();
    let mut header: Vec<String> = (1..=dim).map(|i| format!("x{i}")).collect();
    header.push("rho".into());
    header.extend((1..=dim).map(|i| format!("rho_u{i}")));
    header.extend(["rho_e", "p", "theta_prime"].map(String::from));
    writeln!(f, "{}", header.join(","))?;
    for r in disc.nodal_records(case, q)? {
        let mut cols: Vec<String> = r.x[..dim].iter().map(|v| format!("{v:.17e}")).collect();
        cols.extend(r.q.iter().map(|v| format!("{v:.17e}")));
        cols.push(format!("{:.17e}", r.p));
        cols.push(format!("{:.17e}", r.theta_perturbation));
        writeln!(f, "{}", cols.join(","))?;
    }
    f.flush()?;
    Ok(())
}

struct Outputs {
    diagnostics: BufWriter<File>,
    index: BufWriter<File>,
    count: usize,
}

impl Outputs {
    fn create(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir)?;
        let mut diagnostics = BufWriter::new(File::create(dir.join("diagnostics.csv"))?);
        writeln!(diagnostics, "{DIAGNOSTICS_HEADER}")?;
        let mut index = BufWriter::new(File::create(dir.join("snapshots.csv"))?);
        writeln!(index, "index,t,file")?;
        Ok(Self { diagnostics, index, count: 0 })
    }

    fn snapshot(&mut self, dir: &Path, case: &CaseSetup, disc: &Discretization, q: &[f64], t: f64) -> Result<()> {
        let name = format!("snapshot_{:04}.csv", self.count);
        write_snapshot(&dir.join(&name), case, disc, q)?;
        writeln!(self.index, "{},{:.17e},{}", self.count, t, name)?;
        self.count += 1;
        Ok(())
    }
}

/// Run a configured case to its end time (or `max_steps`), writing outputs
/// when `config.out` is set and progress lines to `progress`.
pub fn run(config: &RunConfig, progress: &mut dyn Write) -> Result<RunResult> {
    let started = Instant::now();
    let ResolvedRun { case, options, stepper } = resolve(config)?;
    let disc = Discretization::new(&case, &options)?;
    let q0 = disc.initial_state(&case)?;
    let mut q = q0.clone();
    let dt0 = disc.compute_dt(&q0, stepper.cfl)?;

    let first = DiagnosticsRow::compute(&disc, &q, 0.0, None, 1.0)?;
    let s0 = first.entropy;
    let mut rows = vec![first];
    let out_dir = config.out.clone();
    let mut outputs = match &out_dir {
        Some(d) => {
            let mut o = Outputs::create(d)?;
            first.write_csv(&mut o.diagnostics)?;
            o.snapshot(d, &case, &disc, &q, 0.0)?;
            Some(o)
        }
        None => None,
    };
    writeln!(
        progress,
        "case {} dim {} N {} elements {:?} quadrature {} flux {} scheme {} dt {:.6e} t_end {}",
        case.name,
        case.dim,
        options.degree,
        options.elements,
        options.quadrature,
        options.flux,
        stepper.scheme,
        dt0,
        stepper.t_end
    )?;

    let (rho0, rho0_hi) = disc.density_range(&q0);
    let mut summary = RunSummary {
        case: case.name.clone(),
        steps: 0,
        t_final: 0.0,
        dt: dt0,
        entropy_initial: s0,
        entropy_final: s0,
        max_entropy_change: 0.0,
        max_entropy_increase: f64::NEG_INFINITY,
        mass_drift: 0.0,
        energy_drift: 0.0,
        min_density: rho0,
        max_density: rho0_hi,
        min_pressure: first.min_p,
        max_speed: disc.max_speed(&q0),
        gamma_min: 1.0,
        gamma_max: 1.0,
        wall_seconds: 0.0,
    };
    let mut next_output = config.output_every;
    let mut prev_entropy = s0;
    let max_steps = config.max_steps.unwrap_or(usize::MAX);
    let adaptive = stepper.adaptive_dt;
    let cfl = stepper.cfl;

    let t_final = integrate(
        &disc,
        &mut q,
        0.0,
        &stepper,
        |q| if adaptive { disc.compute_dt(q, cfl) } else { Ok(dt0) },
        |report, q| {
            let row = DiagnosticsRow::compute(&disc, q, report.t, Some(s0), report.info.gamma)?;
            let (lo, hi) = disc.density_range(q);
            summary.steps = report.step;
            summary.t_final = report.t;
            summary.entropy_final = row.entropy;
            summary.max_entropy_change = summary.max_entropy_change.max(row.entropy_change.abs());
            summary.max_entropy_increase = summary
                .max_entropy_increase
                .max(relative_change(row.entropy, prev_entropy));
            prev_entropy = row.entropy;
            summary.mass_drift = summary.mass_drift.max(relative_change(row.mass, rows[0].mass).abs());
            summary.energy_drift = summary.energy_drift.max(relative_change(row.energy, rows[0].energy).abs());
            summary.min_density = summary.min_density.min(lo);
            summary.max_density = summary.max_density.max(hi);
            summary.min_pressure = summary.min_pressure.min(row.min_p);
            summary.max_speed = summary.max_speed.max(disc.max_speed(q));
            summary.gamma_min = summary.gamma_min.min(report.info.gamma);
            summary.gamma_max = summary.gamma_max.max(report.info.gamma);
            if config.progress_every > 0 && report.step % config.progress_every == 0 {
                writeln!(
                    progress,
                    "step {:>7} t {:.6e} dt {:.6e} gamma {:.15} dS/S0 {:+.3e}",
                    report.step, report.t, report.info.dt_taken, report.info.gamma, row.entropy_change
                )?;
            }
            if let (Some(o), Some(dir)) = (outputs.as_mut(), out_dir.as_ref()) {
                row.write_csv(&mut o.diagnostics)?;
                if let (Some(next), Some(every)) = (next_output, config.output_every) {
                    if report.t >= next - 1e-12 * every {
                        o.snapshot(dir, &case, &disc, q, report.t)?;
                        next_output = Some(next + every);
                    }
                }
            }
            rows.push(row);
            Ok(report.step < max_steps)
        },
    )?;
    summary.t_final = t_final;
    if summary.steps == 0 {
        summary.max_entropy_increase = 0.0;
    }
    summary.wall_seconds = started.elapsed().as_secs_f64();

    if let (Some(mut o), Some(dir)) = (outputs, out_dir.as_ref()) {
        if config.output_every.is_none() || rows.last().map(|r| r.t) != Some(0.0) {
            o.snapshot(dir, &case, &disc, &q, t_final)?;
        }
        o.diagnostics.flush()?;
        o.index.flush()?;
        let mut f = BufWriter::new(File::create(dir.join("summary.txt"))?);
        summary.write(&mut f)?;
        f.flush()?;
    }
    writeln!(
        progress,
        "done: {} steps to t = {:.6e}, max |dS/S0| = {:.3e}, mass drift {:.3e}, energy drift {:.3e}, {:.2} s",
        summary.steps,
        summary.t_final,
        summary.max_entropy_change,
        summary.mass_drift,
        summary.energy_drift,
        summary.wall_seconds
    )?;
    Ok(RunResult { case, disc, q0, q, rows, summary })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceLevel {
    pub elements: Vec<usize>,
    /// Horizontal element size.
    pub h: f64,
    pub errors: Vec<f64>,
    pub rates: Vec<Option<Rate>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceTable {
    pub quantities: Vec<Quantity>,
    pub levels: Vec<ConvergenceLevel>,
    /// True when errors are measured against a finer run instead of an
    /// exact solution.
    pub self_convergence: bool,
}

impl ConvergenceTable {
    pub fn write_csv(&self, w: &mut impl Write) -> std::io::Result<()> {
        let mut header = vec!["level".to_string(), "elements".into(), "h".into()];
        header.extend(self.quantities.iter().map(|q| format!("err_{}", q.name())));
        header.extend(self.quantities.iter().map(|q| format!("rate_{}", q.name())));
        writeln!(w, "{}", header.join(","))?;
        for (i, l) in self.levels.iter().enumerate() {
            let elements: Vec<String> = l.elements.iter().map(|k| k.to_string()).collect();
            let mut cols = vec![i.to_string(), elements.join("x"), format!("{:.17e}", l.h)];
            cols.extend(l.errors.iter().map(|e| format!("{e:.17e}")));
            cols.extend(l.rates.iter().map(|r| r.map(|r| r.to_string()).unwrap_or_default()));
            writeln!(w, "{}", cols.join(","))?;
        }
        Ok(())
    }

    /// Rates for one quantity, skipping the first level.
    pub fn rates_of(&self, quantity: Quantity) -> Vec<Rate> {
        let k = self.quantities.iter().position(|q| *q == quantity).expect("quantity in table");
        self.levels.iter().filter_map(|l| l.rates[k]).collect()
    }
}

fn default_quantities(case: &CaseSetup) -> Vec<Quantity> {
    if case.name == "gravity-wave" {
        vec![Quantity::Temperature, Quantity::VerticalVelocity]
    } else {
        vec![Quantity::Density]
    }
}

/// Run `config.levels` uniformly refined levels and measure L2 errors at
/// the end time, against the exact solution when the case has one and
/// against one further refined run otherwise.
///
/// Self-convergence errors are integrated with `N + 4` Gauss points per
/// axis and element, evaluating both solutions as polynomials. For cases
/// with a background state each run's own interpolated background is
/// subtracted first, so its interpolation error does not enter.
pub fn convergence(config: &RunConfig, progress: &mut dyn Write) -> Result<ConvergenceTable> {
    if config.relaxation {
        return Err(Error::Config("convergence studies need a fixed end time; disable relaxation".into()));
    }
    let base = resolve(config)?;
    if base.options.warp && base.case.exact.is_none() {
        return Err(Error::Config("self-convergence needs an unwarped mesh".into()));
    }
    let quantities = config.quantities.clone().unwrap_or_else(|| default_quantities(&base.case));
    let self_convergence = base.case.exact.is_none();
    let n_runs = config.levels + usize::from(self_convergence);
    let mut results = Vec::with_capacity(n_runs);
    for level in 0..n_runs {
        let mut c = config.clone();
        c.out = None;
        c.elements = Some(base.options.elements.iter().map(|k| k << level).collect());
        c.progress_every = 0;
        let r = run(&c, progress)?;
        results.push(r);
    }
    let reference = if self_convergence { results.pop() } else { None };
    let measure = base.case.measure();
    let mut levels = Vec::new();
    for r in &results {
        let gas = r.case.gas;
        let t = r.summary.t_final;
        let errors = match &reference {
            Some(fine) => {
                let dim = r.disc.dim();
                let perturbation = |d: &Discretization, case: &CaseSetup, q: &[f64], bg: &Option<Vec<f64>>, x: &[f64; 2]| -> Result<Vec<f64>> {
                    let phi = (case.geopotential)(x);
                    let s = primitive_from_conservative(&d.evaluate_at(case, q, x)?, phi, &gas);
                    let b = match bg {
                        Some(bg) => Some(primitive_from_conservative(&d.evaluate_at(case, bg, x)?, phi, &gas)),
                        None => None,
                    };
                    Ok(quantities
                        .iter()
                        .map(|qty| qty.of(&s, dim, &gas) - b.as_ref().map_or(0.0, |b| qty.of(b, dim, &gas)))
                        .collect())
                };
                let background = |d: &Discretization, case: &CaseSetup| -> Result<Option<Vec<f64>>> {
                    case.background.as_ref().map(|bg| d.interpolate(case, |x| bg(x))).transpose()
                };
                let (bg, fine_bg) = (background(&r.disc, &r.case)?, background(&fine.disc, &fine.case)?);
                let points = r.disc.ops().degree + 4;
                let elements = &r.disc.mesh().elements_per_dim;
                l2_box_norms(&r.case.extents, elements, points, quantities.len(), |x| {
                    let a = perturbation(&r.disc, &r.case, &r.q, &bg, x)?;
                    let b = perturbation(&fine.disc, &fine.case, &fine.q, &fine_bg, x)?;
                    Ok(a.iter().zip(&b).map(|(a, b)| a - b).collect())
                })?
            }
            None => {
                let exact = r.case.exact.as_ref().expect("exact solution");
                l2_errors(&r.disc, &r.q, &gas, measure, &quantities, |x| Ok(exact(x, t)))?
            }
        };
        let elements = r.disc.mesh().elements_per_dim.clone();
        let (lo, hi) = r.case.extents[0];
        levels.push(ConvergenceLevel {
            h: (hi - lo) / elements[0] as f64,
            elements,
            errors,
            rates: vec![None; quantities.len()],
        });
    }
    for k in 0..quantities.len() {
        let pts: Vec<(f64, f64)> = levels.iter().map(|l| (l.h, l.errors[k])).collect();
        for (i, rate) in convergence_rates(&pts)?.into_iter().enumerate() {
            levels[i + 1].rates[k] = Some(rate);
        }
    }
    Ok(ConvergenceTable { quantities, levels, self_convergence })
}
