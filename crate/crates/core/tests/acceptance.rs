//! Acceptance criteria, one PASS/FAIL line each. Reference quantities are
//! computed here from first principles rather than through the library.

use esdg::cases::{case_by_name, gravity_wave, rising_bubble, GravityWaveParams, Primitive};
use esdg::config::RunConfig;
use esdg::diagnostics::{Quantity, Rate};
use esdg::euler::{ec_flux_dir, es_flux_dir, matrix_dissipation, GasParameters, NodeAux, State};
use esdg::run::{convergence, run, RunResult};
use esdg::simulation::{build_operators, Discretization, DiscretizationOptions, Quadrature};
use esdg::time::{integrate, EntropySystem, Scheme, TimeStepperConfig};
use esdg::verify::free_stream_case;
use nalgebra::{DMatrix, DVector};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

const GAS: GasParameters = GasParameters { gamma: 1.4, gas_constant: 287.0 };

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

// ---------------------------------------------------------------------------
// pointwise oracles

fn prim<const D: usize>(q: &[f64], phi: f64) -> (f64, [f64; D], f64) {
    let rho = q[0];
    let mut u = [0.0; D];
    for i in 0..D {
        u[i] = q[1 + i] / rho;
    }
    let ke: f64 = 0.5 * rho * u.iter().map(|v| v * v).sum::<f64>();
    (rho, u, (GAS.gamma - 1.0) * (q[D + 1] - rho * phi - ke))
}

fn flux<const D: usize>(q: &[f64], phi: f64, a: &[f64; D]) -> Vec<f64> {
    let (rho, u, p) = prim::<D>(q, phi);
    let un: f64 = u.iter().zip(a).map(|(u, a)| u * a).sum();
    let mut f = vec![rho * un];
    f.extend((0..D).map(|i| rho * un * u[i] + p * a[i]));
    f.push((q[D + 1] + p) * un);
    f
}

fn eta<const D: usize>(q: &[f64], phi: f64) -> f64 {
    let (rho, _, p) = prim::<D>(q, phi);
    -rho * (p.ln() - GAS.gamma * rho.ln()) / (GAS.gamma - 1.0)
}

fn beta<const D: usize>(q: &[f64], phi: f64) -> Vec<f64> {
    let (rho, u, p) = prim::<D>(q, phi);
    let g = GAS.gamma;
    let s = p.ln() - g * rho.ln();
    let u2: f64 = u.iter().map(|v| v * v).sum();
    let mut v = vec![(g - s) / (g - 1.0) - rho * (0.5 * u2 - phi) / p];
    v.extend(u.iter().map(|ui| rho * ui / p));
    v.push(-rho / p);
    v
}

fn dotv(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn amax(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

fn log_mean(a: f64, b: f64) -> f64 {
    if ((a - b) / (a + b)).abs() < 1e-4 {
        // series in the relative difference
        let m = 0.5 * (a + b);
        let e = ((a - b) / (a + b)).powi(2);
        m / (1.0 + e / 3.0 + e * e / 5.0 + e * e * e / 7.0)
    } else {
        (a - b) / (a.ln() - b.ln())
    }
}

fn random_state(rng: &mut StdRng, phi: f64) -> Vec<f64> {
    let rho: f64 = rng.gen_range(0.2..3.0);
    let u = [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
    let p: f64 = rng.gen_range(0.2..3.0);
    vec![
        rho,
        rho * u[0],
        rho * u[1],
        p / (GAS.gamma - 1.0) + 0.5 * rho * (u[0] * u[0] + u[1] * u[1]) + rho * phi,
    ]
}

fn st(q: &[f64]) -> State<2> {
    State::new(q[0], [q[1], q[2]], q[3])
}

// ---------------------------------------------------------------------------
// discrete oracles on collocated meshes

/// Nodal conservative vector of node `i` in element `e`.
fn node(q: &[f64], disc: &Discretization, e: usize, i: usize) -> Vec<f64> {
    let np = disc.ops().n_nodes();
    let nc = disc.n_components();
    (0..nc).map(|c| q[(e * nc + c) * np + i]).collect()
}

/// Sum over nodes of `J w f(q_node, x_node)`; requires LGL collocation.
fn nodal_integral(disc: &Discretization, q: &[f64], f: impl Fn(&[f64], &[f64; 2]) -> f64) -> f64 {
    let ops = disc.ops();
    assert!(ops.collocated);
    let mesh = disc.mesh();
    let np = ops.n_nodes();
    let mut total = 0.0;
    for e in 0..mesh.n_elements {
        for i in 0..np {
            total += mesh.jac_vol[e * np + i] * ops.vol_rule.weights[i] * f(&node(q, disc, e, i), &mesh.x_nodes[e * np + i]);
        }
    }
    total
}

fn config(text: &str) -> RunConfig {
    let mut c = RunConfig::default();
    c.apply_str(text).expect("valid config");
    c.progress_every = 0;
    c
}

fn quiet_run(text: &str) -> RunResult {
    run(&config(text), &mut std::io::sink()).expect("run completes")
}

// ---------------------------------------------------------------------------
// criteria

fn sbp_identity() -> Outcome {
    let mut worst: f64 = 0.0;
    for quad in [Quadrature::Lgl, Quadrature::Gauss] {
        for dim in [1, 2] {
            for n in 1..=6 {
                let ops = build_operators(n, dim, quad).unwrap();
                let nv = ops.n_vol();
                let nt = nv + ops.n_face();
                for i in 0..dim {
                    let q = ops.hybrid[i].dense();
                    let mut b = DMatrix::zeros(nt, nt);
                    for f in 0..ops.n_face() {
                        let nrm = if dim == 1 { ops.face_normals[f][0] } else { ops.face_normals[f][i] };
                        b[(nv + f, nv + f)] = ops.face_weights[f] * nrm;
                    }
                    worst = worst.max((&q + q.transpose() - b).amax());
                    worst = worst.max((&q * DVector::from_element(nt, 1.0)).amax());
                }
            }
        }
    }
    outcome(worst < 1e-12, format!("max residual {worst:.2e} over N=1..6, d=1,2, both rules"))
}

fn gcl_bubble_mesh() -> Outcome {
    let case = rising_bubble(true);
    let mut worst: f64 = 0.0;
    for quad in [Quadrature::Lgl, Quadrature::Gauss] {
        let opts = DiscretizationOptions { quadrature: quad, ..DiscretizationOptions::new(&case, 4, 10) };
        let disc = Discretization::new(&case, &opts).unwrap();
        let (ops, mesh) = (disc.ops(), disc.mesh());
        let nt = ops.n_total();
        for e in 0..mesh.n_elements {
            let g = mesh.combined_metrics(e);
            for j in 0..2 {
                for row in 0..nt {
                    let mut s = 0.0;
                    for k in 0..2 {
                        for col in 0..nt {
                            s += ops.hybrid[k].entry(row, col) * g[j * 2 + k][col];
                        }
                    }
                    worst = worst.max(s.abs());
                }
            }
        }
    }
    outcome(worst < 1e-12, format!("max per-element residual {worst:.2e} (10x10, N=4, both rules)"))
}

fn shuffle_relations() -> Outcome {
    let mut rng = StdRng::seed_from_u64(2024);
    let (mut ec, mut es) = (0.0f64, f64::NEG_INFINITY);
    for a in [[1.0, 0.0], [0.0, 1.0]] {
        for _ in 0..1000 {
            let (pl, pr) = (rng.gen_range(0.0..2.0), rng.gen_range(0.0..2.0));
            let (ql, qr) = (random_state(&mut rng, pl), random_state(&mut rng, pr));
            let l = NodeAux::new(&st(&ql), pl, &GAS).unwrap();
            let r = NodeAux::new(&st(&qr), pr, &GAS).unwrap();
            let (bl, br) = (beta::<2>(&ql, pl), beta::<2>(&qr, pr));
            let zeta = |q: &[f64], phi: f64, a: &[f64; 2]| (q[1] * a[0] + q[2] * a[1]) / q[0] * eta::<2>(q, phi);
            let sub = |x: State<2>, y: Vec<f64>| -> Vec<f64> { x.to_vec().iter().zip(&y).map(|(x, y)| x - y).collect() };

            let dl = sub(ec_flux_dir(&l, &r, &a, &GAS), flux::<2>(&ql, pl, &a));
            let dr = sub(ec_flux_dir(&r, &l, &a, &GAS), flux::<2>(&qr, pr, &a));
            let rhs = zeta(&qr, pr, &a) - zeta(&ql, pl, &a);
            let res = dotv(&bl, &dl) - dotv(&br, &dr) - rhs;
            let scale = (amax(&bl) * amax(&dl) + amax(&br) * amax(&dr) + rhs.abs()).max(1.0);
            ec = ec.max(res.abs() / scale);

            let m = [-a[0], -a[1]];
            let sl = sub(es_flux_dir(&l, &r, &a, &GAS), flux::<2>(&ql, pl, &a));
            let sr: Vec<f64> = sub(es_flux_dir(&r, &l, &m, &GAS), flux::<2>(&qr, pr, &m)).iter().map(|v| -v).collect();
            let res = dotv(&br, &sr) - dotv(&bl, &sl) - (zeta(&ql, pl, &a) - zeta(&qr, pr, &a));
            let scale = (amax(&bl) * amax(&sl) + amax(&br) * amax(&sr)).max(1.0);
            es = es.max(res / scale);
        }
    }
    outcome(
        ec < 1e-11 && es <= 1e-12,
        format!("EC relative residual {ec:.2e}, ES signed residual {es:.2e} (2000 pairs)"),
    )
}

/// `R |Lambda| T R^T [[beta]]` from explicit eigenvector and scaling matrices.
fn explicit_dissipation(ql: &[f64], pl: f64, qr: &[f64], pr: f64, n: &[f64; 2]) -> DVector<f64> {
    let g = GAS.gamma;
    let (rl, ul, pl_) = prim::<2>(ql, pl);
    let (rr, ur, pr_) = prim::<2>(qr, pr);
    let (bl, br) = (rl / (2.0 * pl_), rr / (2.0 * pr_));
    let rho_ln = log_mean(rl, rr);
    let b_ln = log_mean(bl, br);
    let p_star = 0.5 * (rl + rr) / (bl + br);
    let c = (p_star / rho_ln).sqrt();
    let ub = [0.5 * (ul[0] + ur[0]), 0.5 * (ul[1] + ur[1])];
    let un = ub[0] * n[0] + ub[1] * n[1];
    let u2 = 2.0 * (ub[0] * ub[0] + ub[1] * ub[1]) - 0.5 * (ul[0] * ul[0] + ul[1] * ul[1] + ur[0] * ur[0] + ur[1] * ur[1]);
    let phi = 0.5 * (pl + pr);
    let h = g / (2.0 * b_ln * (g - 1.0)) + 0.5 * u2 + phi;
    let t = [-n[1], n[0]];
    #[rustfmt::skip]
    let rmat = DMatrix::from_row_slice(4, 4, &[
        1.0, 1.0, 0.0, 1.0,
        ub[0] - c * n[0], ub[0], t[0], ub[0] + c * n[0],
        ub[1] - c * n[1], ub[1], t[1], ub[1] + c * n[1],
        h - un * c, 0.5 * u2 + phi, t[0] * ub[0] + t[1] * ub[1], h + un * c,
    ]);
    let lam = DMatrix::from_diagonal(&DVector::from_vec(vec![(un - c).abs(), un.abs(), un.abs(), (un + c).abs()]));
    let scale = DMatrix::from_diagonal(&DVector::from_vec(vec![
        rho_ln / (2.0 * g),
        (g - 1.0) * rho_ln / g,
        p_star,
        rho_ln / (2.0 * g),
    ]));
    let jump = DVector::from_iterator(4, beta::<2>(qr, pr).iter().zip(beta::<2>(ql, pl)).map(|(a, b)| a - b));
    &rmat * lam * scale * rmat.transpose() * jump
}

fn dissipation_matrix() -> Outcome {
    let mut rng = StdRng::seed_from_u64(77);
    let (mut diff, mut psd) = (0.0f64, f64::NEG_INFINITY);
    for _ in 0..1000 {
        let (pl, pr) = (rng.gen_range(0.0..2.0), rng.gen_range(0.0..2.0));
        let (ql, qr) = (random_state(&mut rng, pl), random_state(&mut rng, pr));
        let angle: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        let n = [angle.cos(), angle.sin()];
        let l = NodeAux::new(&st(&ql), pl, &GAS).unwrap();
        let r = NodeAux::new(&st(&qr), pr, &GAS).unwrap();
        let closed = matrix_dissipation(&l, &r, &n, &GAS).to_vec();
        let explicit = explicit_dissipation(&ql, pl, &qr, pr, &n);
        let scale = explicit.amax().max(1.0);
        for c in 0..4 {
            diff = diff.max((closed[c] - explicit[c]).abs() / scale);
        }
        let jump: Vec<f64> = beta::<2>(&qr, pr).iter().zip(beta::<2>(&ql, pl)).map(|(a, b)| a - b).collect();
        let form = dotv(&jump, &closed);
        psd = psd.max(-form / (amax(&jump) * amax(&closed)).max(f64::MIN_POSITIVE));
    }
    outcome(
        diff < 1e-11 && psd <= 1e-12,
        format!("max relative difference {diff:.2e}, min normalized [[b]]'H[[b]] {:.2e}", -psd),
    )
}

const BUBBLE: &str = "case = bubble\ndegree = 4\nresolution = 10\nwarp = true\nrelaxation = true\ncfl = 0.4\nmax_steps = 300";

fn bubble_entropy(flux: &str) -> (RunResult, f64, f64) {
    let r = quiet_run(&format!("{BUBBLE}\nflux = {flux}"));
    let phi = |x: &[f64; 2]| 9.81 * x[1];
    let s0 = nodal_integral(&r.disc, &r.q0, |q, x| eta::<2>(q, phi(x)));
    let s1 = nodal_integral(&r.disc, &r.q, |q, x| eta::<2>(q, phi(x)));
    (r, s0, s1)
}

fn entropy_conservation() -> Outcome {
    let (r, s0, s1) = bubble_entropy("ec");
    let change = ((s1 - s0) / s0).abs();
    let logged = (r.rows.last().unwrap().entropy - s1).abs() / s1.abs();
    outcome(
        change < 1e-13 && r.summary.steps >= 200 && logged < 1e-14,
        format!(
            "|dS/S0| = {change:.2e} after {} steps (t = {:.3} s), logged entropy agrees to {logged:.1e}",
            r.summary.steps, r.summary.t_final
        ),
    )
}

fn entropy_decay() -> Outcome {
    let (r, s0, s1) = bubble_entropy("es");
    let worst = r
        .rows
        .windows(2)
        .map(|w| (w[1].entropy - w[0].entropy) / w[0].entropy.abs())
        .fold(f64::NEG_INFINITY, f64::max);
    let logged = (r.rows.last().unwrap().entropy - s1).abs() / s1.abs();
    outcome(
        worst <= 1e-13 && s1 < s0 && r.summary.steps >= 200 && logged < 1e-14,
        format!(
            "largest per-step relative increase {worst:.2e} over {} steps, total change {:.2e}",
            r.summary.steps,
            (s1 - s0) / s0.abs()
        ),
    )
}

fn well_balance() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for dim in [1, 2] {
        let r = quiet_run(&format!("case = isothermal-{dim}d\ndegree = 4\nflux = es\nmax_steps = 1000\nt_end = 1e9"));
        let (disc, np) = (&r.disc, r.disc.ops().n_nodes());
        let (mut umax, mut drift) = (0.0f64, 0.0f64);
        for e in 0..disc.mesh().n_elements {
            for i in 0..np {
                let (a, b) = (node(&r.q, disc, e, i), node(&r.q0, disc, e, i));
                for k in 0..dim {
                    umax = umax.max((a[1 + k] / a[0]).abs());
                }
                drift = drift.max(((a[0] - b[0]) / b[0]).abs());
            }
        }
        umax = umax.max(r.summary.max_speed);
        pass &= umax < 1e-10 && drift < 1e-12 && r.summary.steps == 1000;
        parts.push(format!("{dim}d: max|u| {umax:.1e} m/s, rho drift {drift:.1e}"));
    }
    outcome(pass, parts.join("; "))
}

fn conservation() -> Outcome {
    let r = quiet_run("case = periodic-perturbation\ndegree = 4\nmax_steps = 500\nt_end = 1e9");
    let mass = |q: &[f64]| nodal_integral(&r.disc, q, |q, _| q[0]);
    let energy = |q: &[f64]| nodal_integral(&r.disc, q, |q, _| q[3]);
    let dm = ((mass(&r.q) - mass(&r.q0)) / mass(&r.q0)).abs();
    let de = ((energy(&r.q) - energy(&r.q0)) / energy(&r.q0)).abs();
    outcome(
        dm < 1e-12 && de < 1e-12 && r.summary.steps == 500,
        format!("mass drift {dm:.1e}, energy drift {de:.1e} over {} steps (warped, doubly periodic)", r.summary.steps),
    )
}

fn free_stream() -> Outcome {
    let state = Primitive { rho: 1.1, u: [12.0, -7.0], p: 9e4 };
    let mut worst: f64 = 0.0;
    let mut parts = Vec::new();
    for (name, case, degree, res) in [
        ("bubble", free_stream_case(rising_bubble(true), state), 4, 10),
        ("gravity-wave", free_stream_case(gravity_wave(&GravityWaveParams::default(), true), state), 3, 2),
    ] {
        for quad in [Quadrature::Lgl, Quadrature::Gauss] {
            let opts = DiscretizationOptions { quadrature: quad, ..DiscretizationOptions::new(&case, degree, res) };
            let disc = Discretization::new(&case, &opts).unwrap();
            let q = disc.initial_state(&case).unwrap();
            let mut dq = vec![0.0; q.len()];
            disc.rhs(&q, &mut dq).unwrap();
            // reference size of a single derivative term: |F| / h
            let q0 = node(&q, &disc, 0, 0);
            let f = flux::<2>(&q0, 0.0, &[1.0, 0.0]).into_iter().chain(flux::<2>(&q0, 0.0, &[0.0, 1.0]));
            let fmax = f.fold(0.0f64, |m, v| m.max(v.abs()));
            let h = (0..disc.mesh().n_elements).map(|e| disc.mesh().min_node_spacing(e)).fold(f64::INFINITY, f64::min);
            let rel = amax(&dq) * h / fmax;
            worst = worst.max(rel);
            parts.push(format!("{name} {quad} {rel:.1e}"));
        }
    }
    outcome(worst < 1e-11, format!("relative |dq/dt|: {}", parts.join(", ")))
}

fn sod() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for quad in ["lgl", "gauss"] {
        let r = run(&config(&format!("case = sod\ndegree = 4\nelements = 32\ncfl = 0.2\nquadrature = {quad}")), &mut std::io::sink());
        match r {
            Ok(r) => {
                // profile at t = 0.2: nodal values and volume points
                let nodal: Vec<f64> = (0..r.disc.mesh().n_elements)
                    .flat_map(|e| (0..r.disc.ops().n_nodes()).map(move |i| (e, i)))
                    .map(|(e, i)| node(&r.q, &r.disc, e, i)[0])
                    .collect();
                let (vlo, vhi) = r.disc.density_range(&r.q);
                let lo = nodal.iter().copied().fold(vlo, f64::min);
                let hi = nodal.iter().copied().fold(vhi, f64::max);
                let reached = (r.summary.t_final - 0.2).abs() < 1e-12;
                pass &= reached && lo >= 0.1 && hi <= 1.05;
                parts.push(format!(
                    "{quad}: t = {:.3}, rho in [{lo:.4}, {hi:.4}], wall rho(0) = {:.4}, run-wide min {:.4}",
                    r.summary.t_final, nodal[0], r.summary.min_density
                ));
            }
            Err(e) => {
                pass = false;
                parts.push(format!("{quad}: {e}"));
            }
        }
    }
    outcome(pass, parts.join("; "))
}

fn gravity_wave_convergence() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for n in [2usize, 3] {
        let c = config(&format!("case = gravity-wave\ndegree = {n}\nelements = 25x3\nlevels = 3\nquantities = T, w\nwarp = false"));
        let table = convergence(&c, &mut std::io::sink()).expect("study completes");
        for qty in [Quantity::Temperature, Quantity::VerticalVelocity] {
            let rates = table.rates_of(qty);
            let ok = rates.len() == 2
                && rates.iter().all(|r| matches!(r, Rate::Value(v) if (v - (n as f64 + 1.0)).abs() <= 0.4));
            pass &= ok;
            let shown: Vec<String> = rates.iter().map(|r| r.to_string()).collect();
            parts.push(format!("N={n} {} rates [{}]", qty.name(), shown.join(", ")));
        }
    }
    outcome(pass, parts.join("; "))
}

/// `q' = -q^3` with entropy `q^2 / 2`; exact `q(t) = 1 / sqrt(1 + 2t)`.
struct Cubic;

impl EntropySystem for Cubic {
    fn rhs(&self, q: &[f64], dq: &mut [f64]) -> esdg::Result<()> {
        dq[0] = -q[0] * q[0] * q[0];
        Ok(())
    }
    fn entropy(&self, q: &[f64]) -> esdg::Result<f64> {
        Ok(0.5 * q[0] * q[0])
    }
    fn entropy_inner(&self, q: &[f64], v: &[f64]) -> esdg::Result<f64> {
        Ok(q[0] * v[0])
    }
}

fn relaxation_order() -> Outcome {
    let steps = [10usize, 20, 40, 80];
    let errors: Vec<f64> = steps
        .iter()
        .map(|&n| {
            let cfg = TimeStepperConfig { scheme: Scheme::Lsrk54Relaxation, t_end: 2.0, ..Default::default() };
            let mut q = vec![1.0];
            let dt = 2.0 / n as f64;
            let t = integrate(&Cubic, &mut q, 0.0, &cfg, |_| Ok(dt), |_, _| Ok(true)).unwrap();
            (q[0] - 1.0 / (1.0 + 2.0 * t).sqrt()).abs()
        })
        .collect();
    // least-squares slope of log(err) against log(dt)
    let xs: Vec<f64> = steps.iter().map(|&n| (2.0 / n as f64).ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let (mx, my) = (xs.iter().sum::<f64>() / 4.0, ys.iter().sum::<f64>() / 4.0);
    let slope = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>()
        / xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
    outcome((slope - 4.0).abs() <= 0.15, format!("slope {slope:.3}, errors {:?}", errors.iter().map(|e| format!("{e:.2e}")).collect::<Vec<_>>()))
}

#[test]
fn acceptance() {
    let criteria: [(&str, fn() -> Outcome); 12] = [
        ("SBP identity", sbp_identity),
        ("GCL on warped bubble mesh", gcl_bubble_mesh),
        ("entropy shuffle relations", shuffle_relations),
        ("dissipation matrix", dissipation_matrix),
        ("entropy conservation (bubble, EC, relaxation)", entropy_conservation),
        ("entropy decay (bubble, ES, relaxation)", entropy_decay),
        ("well-balance (isothermal 1D, 2D)", well_balance),
        ("conservation (periodic 2D)", conservation),
        ("free-stream preservation", free_stream),
        ("Sod robustness", sod),
        ("gravity-wave convergence", gravity_wave_convergence),
        ("relaxation order", relaxation_order),
    ];
    let mut failed = Vec::new();
    for (name, check) in criteria {
        let o = check();
        println!("{} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        if !o.pass {
            failed.push(name);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}

#[test]
fn sod_case_uses_unit_domain() {
    let case = case_by_name("sod").unwrap();
    assert_eq!(case.extents, vec![(0.0, 1.0)]);
}
