//! Dimension-erased discretization of a test case.

use crate::cases::{potential_temperature, CaseSetup, Primitive};
use crate::error::{Error, Result};
use crate::euler::{pressure, State};
use crate::mesh::Mesh;
use crate::operators::ElementOperators;
use crate::quadrature::{gauss_rule, lgl_rule, NodalBasis};
use crate::semidiscrete::{KernelPath, SemiDiscretization, SurfaceFlux};
use crate::time::EntropySystem;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quadrature {
    /// `N + 1` LGL points, collocated with the nodes.
    Lgl,
    /// `N + 2` Gauss points.
    Gauss,
}

impl std::str::FromStr for Quadrature {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lgl" => Ok(Self::Lgl),
            "gauss" => Ok(Self::Gauss),
            other => Err(Error::InvalidArgument(format!(
                "unknown quadrature '{other}', expected 'lgl' or 'gauss'"
            ))),
        }
    }
}

impl std::fmt::Display for Quadrature {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Lgl => "lgl",
            Self::Gauss => "gauss",
        })
    }
}

pub fn build_operators(degree: usize, dim: usize, quadrature: Quadrature) -> Result<ElementOperators> {
    let basis = NodalBasis::lgl(degree)?;
    let rule = match quadrature {
        Quadrature::Lgl => lgl_rule(degree + 1)?,
        Quadrature::Gauss => gauss_rule(degree + 2)?,
    };
    ElementOperators::new(&basis, &rule, (dim == 2).then_some(&rule), dim)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscretizationOptions {
    pub degree: usize,
    /// Element counts per axis.
    pub elements: Vec<usize>,
    pub quadrature: Quadrature,
    pub flux: SurfaceFlux,
    pub warp: bool,
    pub path: KernelPath,
}

impl DiscretizationOptions {
    pub fn new(case: &CaseSetup, degree: usize, resolution: usize) -> Self {
        Self {
            degree,
            elements: case.elements(resolution),
            quadrature: Quadrature::Lgl,
            flux: SurfaceFlux::Es,
            warp: case.warp.is_some(),
            path: KernelPath::Auto,
        }
    }
}

pub fn build_mesh(case: &CaseSetup, ops: &ElementOperators, opts: &DiscretizationOptions) -> Result<Mesh> {
    let mesh = Mesh::new_box(ops, &case.extents, &opts.elements, &case.boundary)?;
    match (&case.warp, opts.warp) {
        (Some(w), true) => mesh.warp(ops, |x| w(x)),
        (None, true) => Err(Error::Config(format!("case '{}' has no warp", case.name))),
        _ => Ok(mesh),
    }
}

pub enum Discretization {
    One(SemiDiscretization<1>),
    Two(SemiDiscretization<2>),
}

macro_rules! dispatch {
    ($self:expr, $s:ident => $body:expr) => {
        match $self {
            Discretization::One($s) => $body,
            Discretization::Two($s) => $body,
        }
    };
}

fn state_from<const D: usize>(p: &Primitive, phi: f64, case: &CaseSetup) -> State<D> {
    let mut u = [0.0; D];
    u.copy_from_slice(&p.u[..D]);
    State::from_primitive(p.rho, u, p.p, phi, &case.gas)
}

/// One row of nodal output.
#[derive(Debug, Clone, PartialEq)]
pub struct NodalRecord {
    pub x: [f64; 2],
    /// Conservative variables.
    pub q: Vec<f64>,
    pub p: f64,
    pub theta_perturbation: f64,
}

impl Discretization {
    pub fn new(case: &CaseSetup, opts: &DiscretizationOptions) -> Result<Self> {
        let ops = build_operators(opts.degree, case.dim, opts.quadrature)?;
        let mesh = build_mesh(case, &ops, opts)?;
        let phi = case.geopotential.clone();
        let rot = case.rotation.clone();
        Ok(match case.dim {
            1 => Self::One(SemiDiscretization::new(ops, mesh, case.gas, opts.flux, move |x| phi(x), rot, opts.path)?),
            2 => Self::Two(SemiDiscretization::new(ops, mesh, case.gas, opts.flux, move |x| phi(x), rot, opts.path)?),
            d => return Err(Error::InvalidArgument(format!("unsupported dimension {d}"))),
        })
    }

    pub fn dim(&self) -> usize {
        dispatch!(self, s => s.mesh.dim)
    }

    pub fn ops(&self) -> &ElementOperators {
        dispatch!(self, s => &s.ops)
    }

    pub fn mesh(&self) -> &Mesh {
        dispatch!(self, s => &s.mesh)
    }

    pub fn n_dofs(&self) -> usize {
        dispatch!(self, s => s.n_dofs())
    }

    pub fn n_components(&self) -> usize {
        self.dim() + 2
    }

    /// Nodal interpolant of the case's initial data, checked for
    /// admissibility at every volume quadrature point.
    pub fn initial_state(&self, case: &CaseSetup) -> Result<Vec<f64>> {
        self.interpolate(case, |x| (case.initial)(x))
    }

    pub fn interpolate(&self, case: &CaseSetup, f: impl Fn(&[f64; 2]) -> Primitive) -> Result<Vec<f64>> {
        let q = dispatch!(self, s => s.project_nodal(|x, phi| state_from(&f(x), phi, case)));
        self.entropy(&q)?;
        Ok(q)
    }

    pub fn compute_dt(&self, q: &[f64], cfl: f64) -> Result<f64> {
        dispatch!(self, s => s.compute_dt(q, cfl))
    }

    pub fn integrals(&self, q: &[f64]) -> Vec<f64> {
        dispatch!(self, s => s.integrals(q))
    }

    pub fn min_density_pressure(&self, q: &[f64]) -> (f64, f64) {
        dispatch!(self, s => s.min_density_pressure(q))
    }

    pub fn density_range(&self, q: &[f64]) -> (f64, f64) {
        dispatch!(self, s => s.density_range(q))
    }

    pub fn residual_terms(&self, q: &[f64]) -> Result<crate::semidiscrete::ResidualTerms> {
        dispatch!(self, s => s.residual_terms(q))
    }

    /// Largest speed `|u|` over interpolation nodes.
    pub fn max_speed(&self, q: &[f64]) -> f64 {
        let np = self.ops().n_nodes();
        let mut best: f64 = 0.0;
        for e in 0..self.mesh().n_elements {
            for i in 0..np {
                let u = dispatch!(self, s => s.node_state(q, e, i).velocity().iter().map(|v| v * v).sum::<f64>());
                best = best.max(u.sqrt());
            }
        }
        best
    }

    /// Nodal values with pressure and the potential temperature deviation
    /// from the case background (or the initial data).
    pub fn nodal_records(&self, case: &CaseSetup, q: &[f64]) -> Result<Vec<NodalRecord>> {
        let np = self.ops().n_nodes();
        let reference = case.background.as_ref().unwrap_or(&case.initial);
        let mut out = Vec::with_capacity(self.mesh().n_elements * np);
        for e in 0..self.mesh().n_elements {
            for i in 0..np {
                let x = self.mesh().x_nodes[e * np + i];
                let (qv, p) = dispatch!(self, s => {
                    let st = s.node_state(q, e, i);
                    let p = pressure(&st, s.phi_nodes[e * np + i], &s.gas).map_err(|err| err.at(e, i))?;
                    (st.to_vec(), p)
                });
                let bg = reference(&x);
                let theta = potential_temperature(qv[0], p, &case.gas)
                    - potential_temperature(bg.rho, bg.p, &case.gas);
                out.push(NodalRecord { x, q: qv, p, theta_perturbation: theta });
            }
        }
        Ok(out)
    }

    /// Primitive state `(rho, u, p)` at volume quadrature point `v` of element `e`.
    pub fn primitive_at_volume_point(&self, q: &[f64], e: usize, v: usize) -> Result<Primitive> {
        let nqv = self.ops().n_vol();
        dispatch!(self, s => {
            let st = s.volume_state(q, e, v);
            let p = pressure(&st, s.phi_vol[e * nqv + v], &s.gas).map_err(|err| err.at(e, v))?;
            let mut u = [0.0; 2];
            u[..st.mom.len()].copy_from_slice(&st.velocity());
            Ok(Primitive { rho: st.rho, u, p })
        })
    }

    /// Evaluate the discrete solution at a physical point. Only valid on
    /// unwarped box meshes.
    pub fn evaluate_at(&self, case: &CaseSetup, q: &[f64], x: &[f64; 2]) -> Result<Vec<f64>> {
        let mesh = self.mesh();
        let dim = self.dim();
        let ops = self.ops();
        let mut idx = [0usize; 2];
        let mut xi = [0.0; 2];
        for a in 0..dim {
            let (lo, hi) = case.extents[a];
            let k = mesh.elements_per_dim[a];
            let h = (hi - lo) / k as f64;
            let t = (x[a] - lo) / h;
            if !(-1e-12..=k as f64 + 1e-12).contains(&t) {
                return Err(Error::InvalidArgument(format!("point {x:?} outside the domain")));
            }
            idx[a] = (t.floor().max(0.0) as usize).min(k - 1);
            xi[a] = 2.0 * (t - idx[a] as f64) - 1.0;
        }
        let e = idx[0] + mesh.elements_per_dim[0] * idx[1];
        let l0 = ops.basis.eval(xi[0]);
        let l1 = if dim == 2 { ops.basis.eval(xi[1]) } else { vec![1.0] };
        let n1 = ops.basis.len();
        let np = ops.n_nodes();
        let nc = self.n_components();
        let mut out = vec![0.0; nc];
        for (c, o) in out.iter_mut().enumerate() {
            let block = &q[(e * nc + c) * np..(e * nc + c + 1) * np];
            for (j, lj) in l1.iter().enumerate() {
                for (i, li) in l0.iter().enumerate() {
                    *o += li * lj * block[i + n1 * j];
                }
            }
        }
        Ok(out)
    }
}

impl EntropySystem for Discretization {
    fn rhs(&self, q: &[f64], dq: &mut [f64]) -> Result<()> {
        dispatch!(self, s => s.rhs(q, dq))
    }
    fn entropy(&self, q: &[f64]) -> Result<f64> {
        dispatch!(self, s => s.entropy(q))
    }
    fn entropy_inner(&self, q: &[f64], v: &[f64]) -> Result<f64> {
        dispatch!(self, s => s.entropy_inner(q, v))
    }
}
