//! Discrete property checks: summation by parts, metric identities,
//! free-stream and hydrostatic preservation, entropy shuffle relations and
//! conservation.

use std::sync::Arc;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use crate::cases::{
    case_by_name, gravity_wave, isothermal_balance, periodic_perturbation, rising_bubble, CaseSetup,
    GravityWaveParams, IsothermalParams, Primitive,
};
use crate::error::Result;
use crate::euler::{
    ec_flux_dir, entropy, es_flux_dir, matrix_dissipation, physical_flux_dir, GasParameters, NodeAux, State,
};
use crate::mesh::BoundaryKind;
use crate::semidiscrete::SurfaceFlux;
use crate::simulation::{build_mesh, build_operators, Discretization, DiscretizationOptions, Quadrature};
use crate::time::EntropySystem;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: String,
    pub value: f64,
    pub tol: f64,
    pub pass: bool,
}

impl CheckResult {
    /// Passes when `value <= tol`.
    pub fn below(name: impl Into<String>, value: f64, tol: f64) -> Self {
        Self { name: name.into(), value, tol, pass: value <= tol }
    }

    /// Passes when `value > tol`; used for negative controls.
    pub fn above(name: impl Into<String>, value: f64, tol: f64) -> Self {
        Self { name: name.into(), value, tol, pass: value > tol }
    }
}

impl std::fmt::Display for CheckResult {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} {:<48} {:.3e} (tol {:.0e})",
            if self.pass { "PASS" } else { "FAIL" },
            self.name,
            self.value,
            self.tol
        )
    }
}

const QUADRATURES: [Quadrature; 2] = [Quadrature::Lgl, Quadrature::Gauss];

/// Worst `max(|Q + Q^T - B|, |Q 1|)` over `N = 1..=max_degree` for each rule
/// and dimension.
pub fn sbp_checks(max_degree: usize) -> Result<Vec<CheckResult>> {
    let mut out = Vec::new();
    for quad in QUADRATURES {
        for dim in [1, 2] {
            let mut worst: f64 = 0.0;
            for n in 1..=max_degree {
                let (a, b) = build_operators(n, dim, quad)?.sbp_residuals();
                worst = worst.max(a).max(b);
            }
            out.push(CheckResult::below(format!("sbp {quad} d={dim} N=1..{max_degree}"), worst, 1e-12));
        }
    }
    Ok(out)
}

/// A perturbed skew block must break the identity.
pub fn sbp_negative_control() -> Result<CheckResult> {
    let mut ops = build_operators(3, 2, Quadrature::Lgl)?;
    ops.hybrid[0].vol_skew[(0, 1)] += 1e-8;
    let (a, b) = ops.sbp_residuals();
    Ok(CheckResult::above("sbp detects a perturbed operator", a.max(b), 1e-12))
}

/// Metric identities on the warped bubble mesh, 10 x 10, `N = 4`.
pub fn gcl_checks() -> Result<Vec<CheckResult>> {
    let case = rising_bubble(true);
    let mut out = Vec::new();
    for quad in QUADRATURES {
        let opts = DiscretizationOptions { quadrature: quad, ..DiscretizationOptions::new(&case, 4, 10) };
        let ops = build_operators(4, 2, quad)?;
        let mesh = build_mesh(&case, &ops, &opts)?;
        out.push(CheckResult::below(format!("gcl bubble mesh {quad}"), mesh.gcl_residual(&ops), 1e-12));
        let scale = mesh.jac_face.iter().fold(0.0f64, |a, &b| a.max(b));
        out.push(CheckResult::below(
            format!("watertight faces bubble mesh {quad}"),
            mesh.watertightness_residual() / scale,
            1e-12,
        ));
    }
    Ok(out)
}

/// `max |dq| dt_1 / max |q|`, with `dt_1` the unit-CFL time step: the
/// fraction of the state changed by one unit-CFL step.
pub fn relative_rate(disc: &Discretization, q: &[f64], dq: &[f64]) -> Result<f64> {
    let dt = disc.compute_dt(q, 1.0)?;
    let qmax = q.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    Ok(dq.iter().fold(0.0f64, |a, b| a.max(b.abs())) * dt / qmax)
}

fn rhs_of(disc: &Discretization, q: &[f64]) -> Result<Vec<f64>> {
    let mut dq = vec![0.0; q.len()];
    disc.rhs(q, &mut dq)?;
    Ok(dq)
}

/// Case with zero geopotential and a uniform state on the same mesh, made
/// periodic in every direction so that oblique flow is a steady state.
pub fn free_stream_case(mut case: CaseSetup, state: Primitive) -> CaseSetup {
    case.boundary = vec![BoundaryKind::Periodic; case.dim];
    case.geopotential = Arc::new(|_| 0.0);
    case.initial = Arc::new(move |_| state);
    case.background = None;
    case.exact = Some(Arc::new(move |_, _| state));
    case
}

/// Uniform flow on the warped bubble and gravity-wave meshes.
pub fn free_stream_checks() -> Result<Vec<CheckResult>> {
    let state = Primitive { rho: 1.1, u: [12.0, -7.0], p: 9e4 };
    let meshes = [
        ("bubble", free_stream_case(rising_bubble(true), state), 4, 10),
        ("gravity-wave", free_stream_case(gravity_wave(&GravityWaveParams::default(), true), state), 3, 2),
    ];
    let mut out = Vec::new();
    for (name, case, degree, res) in meshes {
        for quad in QUADRATURES {
            for flux in [SurfaceFlux::Ec, SurfaceFlux::Es] {
                let opts = DiscretizationOptions { quadrature: quad, flux, ..DiscretizationOptions::new(&case, degree, res) };
                let disc = Discretization::new(&case, &opts)?;
                let q = disc.initial_state(&case)?;
                let dq = rhs_of(&disc, &q)?;
                out.push(CheckResult::below(
                    format!("free stream {name} mesh {quad} {flux}"),
                    relative_rate(&disc, &q, &dq)?,
                    1e-11,
                ));
            }
        }
    }
    Ok(out)
}

/// Resting isothermal atmosphere in 1D and 2D, `N = 4`, ES flux on the
/// collocated rule.
pub fn well_balance_checks() -> Result<Vec<CheckResult>> {
    let mut out = Vec::new();
    for dim in [1, 2] {
        let case = isothermal_balance(dim, &IsothermalParams::default())?;
        let opts = DiscretizationOptions::new(&case, 4, 4);
        let disc = Discretization::new(&case, &opts)?;
        let q = disc.initial_state(&case)?;
        let dq = rhs_of(&disc, &q)?;
        out.push(CheckResult::below(
            format!("hydrostatic rhs isothermal {dim}d"),
            relative_rate(&disc, &q, &dq)?,
            1e-12,
        ));
    }
    Ok(out)
}

/// Rates of mass, energy and entropy on a doubly periodic warped mesh with a
/// nonuniform geopotential. Each nodal state is rescaled by a random factor
/// so that element interfaces carry jumps.
pub fn semidiscrete_balance_checks(seed: u64) -> Result<Vec<CheckResult>> {
    let case = periodic_perturbation();
    let mut out = Vec::new();
    for quad in QUADRATURES {
        for flux in [SurfaceFlux::Ec, SurfaceFlux::Es] {
            let opts = DiscretizationOptions { quadrature: quad, flux, ..DiscretizationOptions::new(&case, 3, 3) };
            let disc = Discretization::new(&case, &opts)?;
            let mut q = disc.initial_state(&case)?;
            let mut rng = StdRng::seed_from_u64(seed);
            let nc = disc.n_components();
            let np = disc.ops().n_nodes();
            for e in 0..disc.mesh().n_elements {
                for i in 0..np {
                    let s = 1.0 + rng.gen_range(-0.02..0.02);
                    for c in 0..nc {
                        q[(e * nc + c) * np + i] *= s;
                    }
                }
            }
            disc.entropy(&q)?;
            let dq = rhs_of(&disc, &q)?;
            let dt = disc.compute_dt(&q, 1.0)?;
            let ints = disc.integrals(&q);
            let rates = disc.integrals(&dq);
            out.push(CheckResult::below(
                format!("mass rate {quad} {flux}"),
                (rates[0] * dt / ints[0]).abs(),
                1e-13,
            ));
            out.push(CheckResult::below(
                format!("energy rate {quad} {flux}"),
                (rates[nc - 1] * dt / ints[nc - 1]).abs(),
                1e-13,
            ));
            let s = disc.entropy(&q)?;
            let ds = disc.entropy_inner(&q, &dq)? * dt / s.abs();
            match flux {
                SurfaceFlux::Ec => out.push(CheckResult::below(format!("entropy rate {quad} ec"), ds.abs(), 1e-12)),
                SurfaceFlux::Es => {
                    out.push(CheckResult::below(format!("entropy production sign {quad} es"), ds, 1e-13));
                    out.push(CheckResult::above(format!("entropy production magnitude {quad} es"), -ds, 0.0));
                }
            }
        }
    }
    Ok(out)
}

fn random_state<const D: usize>(rng: &mut StdRng, phi: f64, gas: &GasParameters) -> State<D> {
    let rho = rng.gen_range(0.2..3.0);
    let mut u = [0.0; D];
    for v in &mut u {
        *v = rng.gen_range(-2.0..2.0);
    }
    State::from_primitive(rho, u, rng.gen_range(0.2..3.0), phi, gas)
}

fn dot<const D: usize>(a: &[f64; D], b: &[f64; D]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Worst entropy shuffle residuals over `pairs` random state pairs per
/// direction: the conservative relation relative to its term sizes, and the
/// largest (signed) violation of the dissipative inequality.
pub fn shuffle_residuals(pairs: usize, seed: u64) -> Result<(f64, f64, f64)> {
    let gas = GasParameters::default();
    let mut rng = StdRng::seed_from_u64(seed);
    let mut ec: f64 = 0.0;
    let mut es = f64::NEG_INFINITY;
    let mut psd = f64::NEG_INFINITY;
    let zeta = |q: &State<2>, phi: f64, a: &[f64; 2]| -> Result<f64> { Ok(dot(&q.velocity(), a) * entropy(q, phi, &gas)?) };
    for _ in 0..pairs {
        let (pl, pr) = (rng.gen_range(0.0..2.0), rng.gen_range(0.0..2.0));
        let ql: State<2> = random_state(&mut rng, pl, &gas);
        let qr: State<2> = random_state(&mut rng, pr, &gas);
        let l = NodeAux::new(&ql, pl, &gas)?;
        let r = NodeAux::new(&qr, pr, &gas)?;
        let bl = l.entropy_variables(&gas);
        let br = r.entropy_variables(&gas);
        let angle: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        for a in [[1.0, 0.0], [0.0, 1.0], [angle.cos(), angle.sin()]] {
            let dl = ec_flux_dir(&l, &r, &a, &gas) - physical_flux_dir(&l, &a, &gas);
            let dr = ec_flux_dir(&r, &l, &a, &gas) - physical_flux_dir(&r, &a, &gas);
            let rhs = zeta(&qr, pr, &a)? - zeta(&ql, pl, &a)?;
            let res = bl.dot(&dl) - br.dot(&dr) - rhs;
            let scale = (bl.max_abs() * dl.max_abs() + br.max_abs() * dr.max_abs() + rhs.abs()).max(1.0);
            ec = ec.max(res.abs() / scale);

            let m = [-a[0], -a[1]];
            let sl = es_flux_dir(&l, &r, &a, &gas) - physical_flux_dir(&l, &a, &gas);
            let sr = -(es_flux_dir(&r, &l, &m, &gas) - physical_flux_dir(&r, &m, &gas));
            let res = br.dot(&sr) - bl.dot(&sl) - (zeta(&ql, pl, &a)? - zeta(&qr, pr, &a)?);
            let scale = (bl.max_abs() * sl.max_abs() + br.max_abs() * sr.max_abs()).max(1.0);
            es = es.max(res / scale);

            let jb = br - bl;
            let h = matrix_dissipation(&l, &r, &a, &gas);
            psd = psd.max(-jb.dot(&h) / (jb.max_abs() * h.max_abs()).max(f64::MIN_POSITIVE));
        }
    }
    Ok((ec, es, psd))
}

pub fn shuffle_checks(pairs: usize, seed: u64) -> Result<Vec<CheckResult>> {
    let (ec, es, psd) = shuffle_residuals(pairs, seed)?;
    Ok(vec![
        CheckResult::below("ec flux entropy shuffle (relative)", ec, 1e-11),
        CheckResult::below("es flux entropy inequality (signed)", es, 1e-12),
        CheckResult::below("dissipation is nonnegative (signed)", psd, 1e-12),
    ])
}

/// Every check, in a fixed order.
pub fn all_checks(seed: u64) -> Result<Vec<CheckResult>> {
    let mut out = sbp_checks(6)?;
    out.push(sbp_negative_control()?);
    out.extend(gcl_checks()?);
    out.extend(free_stream_checks()?);
    out.extend(well_balance_checks()?);
    out.extend(semidiscrete_balance_checks(seed)?);
    out.extend(shuffle_checks(1000, seed)?);
    // the Sod case must be constructible and admissible
    let sod = case_by_name("sod")?;
    let disc = Discretization::new(&sod, &DiscretizationOptions::new(&sod, 4, 32))?;
    let q = disc.initial_state(&sod)?;
    out.push(CheckResult::above("sod initial minimum pressure", disc.min_density_pressure(&q).1, 0.0));
    Ok(out)
}
