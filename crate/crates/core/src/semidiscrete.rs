//! Flux-differencing DG right-hand side with entropy projection.
//!
//! Each evaluation runs in two phases. First every element builds the
//! entropy-projected auxiliary states on its combined volume/face grid; then
//! each element assembles its volume, surface and source terms reading its
//! neighbours' face traces, writing only its own slice of the output.

use nalgebra::{Cholesky, DMatrix, Dyn};

use crate::error::{Error, Result};
use crate::euler::{
    coriolis_source, ec_flux_dir, entropy, matrix_dissipation, pressure, state_from_entropy_variables,
    GasParameters, NodeAux, RotationField, State,
};
use crate::mesh::Mesh;
use crate::operators::ElementOperators;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SurfaceFlux {
    /// Entropy conservative.
    Ec,
    /// Entropy conservative plus matrix dissipation.
    Es,
}

impl std::str::FromStr for SurfaceFlux {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ec" => Ok(Self::Ec),
            "es" => Ok(Self::Es),
            other => Err(Error::InvalidArgument(format!(
                "unknown flux '{other}', expected 'ec' or 'es'"
            ))),
        }
    }
}

impl std::fmt::Display for SurfaceFlux {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Ec => "ec",
            Self::Es => "es",
        })
    }
}

/// Which volume kernel to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelPath {
    /// Collocated shortcut whenever the operators allow it.
    Auto,
    /// Always project and visit volume-face coupling pairs.
    General,
}

/// Mirror state for a no-flux wall: normal momentum reversed.
pub fn wall_ghost_state<const D: usize>(q: &State<D>, n: &[f64; D]) -> State<D> {
    let mn: f64 = q.mom.iter().zip(n).map(|(m, v)| m * v).sum();
    let mut ghost = *q;
    for i in 0..D {
        ghost.mom[i] -= 2.0 * mn * n[i];
    }
    ghost
}

fn mirror_aux<const D: usize>(a: &NodeAux<D>, n: &[f64; D]) -> NodeAux<D> {
    let un: f64 = a.u.iter().zip(n).map(|(u, v)| u * v).sum();
    let mut g = *a;
    for i in 0..D {
        g.u[i] -= 2.0 * un * n[i];
    }
    g
}

/// Volume, surface and source contributions before the mass-matrix solve,
/// each in field layout.
#[derive(Debug, Clone)]
pub struct ResidualTerms {
    pub volume: Vec<f64>,
    pub surface: Vec<f64>,
    pub source: Vec<f64>,
}

enum MassSolve {
    /// Diagonal `J w` at the collocated nodes.
    Diagonal(Vec<f64>),
    Dense(Cholesky<f64, Dyn>),
}

pub struct SemiDiscretization<const D: usize> {
    pub ops: ElementOperators,
    pub mesh: Mesh,
    pub gas: GasParameters,
    pub flux: SurfaceFlux,
    pub rotation: RotationField,
    /// Geopotential at interpolation nodes, volume and face points.
    pub phi_nodes: Vec<f64>,
    pub phi_vol: Vec<f64>,
    pub phi_face: Vec<f64>,
    omega_vol: Option<Vec<[f64; 3]>>,
    fast: bool,
    mass: Vec<MassSolve>,
    /// Per element `P_K = M_K^-1 V^T J W`; empty on the collocated path.
    projection: Vec<DMatrix<f64>>,
    /// Per element, the physical direction `a(n, m)` of each visited pair.
    pair_dirs: Vec<Vec<[f64; D]>>,
    pairs: Vec<(usize, usize)>,
    /// `w^f J^f` per face point.
    face_scale: Vec<f64>,
}

impl<const D: usize> SemiDiscretization<D> {
    pub fn new(
        ops: ElementOperators,
        mesh: Mesh,
        gas: GasParameters,
        flux: SurfaceFlux,
        geopotential: impl Fn(&[f64; 2]) -> f64,
        rotation: RotationField,
        path: KernelPath,
    ) -> Result<Self> {
        if ops.dim != D || mesh.dim != D {
            return Err(Error::InvalidArgument(format!(
                "operators ({}D) and mesh ({}D) must match the {D}D state",
                ops.dim, mesh.dim
            )));
        }
        if mesh.n_vol != ops.n_vol() || mesh.n_face != ops.n_face() {
            return Err(Error::InvalidArgument("mesh was built with different operators".into()));
        }
        let fast = ops.collocated && path == KernelPath::Auto;
        let (nqv, nqf, nt) = (ops.n_vol(), ops.n_face(), ops.n_total());
        let k = mesh.n_elements;

        let mut mass = Vec::with_capacity(k);
        let mut projection = Vec::new();
        for e in 0..k {
            let jw: Vec<f64> = (0..nqv)
                .map(|q| mesh.jac_vol[e * nqv + q] * ops.vol_rule.weights[q])
                .collect();
            if fast {
                mass.push(MassSolve::Diagonal(jw));
                continue;
            }
            let mut vtjw = ops.vol_vandermonde.transpose();
            for (q, w) in jw.iter().enumerate() {
                vtjw.column_mut(q).scale_mut(*w);
            }
            let m = &vtjw * &ops.vol_vandermonde;
            let chol = Cholesky::new(m).ok_or_else(|| {
                Error::ConstructionFailure(format!("mass matrix of element {e} is not positive definite"))
            })?;
            projection.push(chol.solve(&vtjw));
            mass.push(MassSolve::Dense(chol));
        }

        let pairs: Vec<(usize, usize)> = ops
            .volume_pairs
            .iter()
            .chain(if fast { &[][..] } else { &ops.coupling_pairs[..] })
            .map(|p| (p.n, p.m))
            .collect();
        let pair_list: Vec<_> = ops
            .volume_pairs
            .iter()
            .chain(if fast { &[][..] } else { &ops.coupling_pairs[..] })
            .copied()
            .collect();
        let mut pair_dirs = Vec::with_capacity(k);
        for e in 0..k {
            let g = mesh.combined_metrics(e);
            let dirs = pair_list
                .iter()
                .map(|p| {
                    let mut a = [0.0; D];
                    for (j, aj) in a.iter_mut().enumerate() {
                        for kk in 0..D {
                            let gjk = &g[j * D + kk];
                            *aj += gjk[p.n] * p.q_nm[kk] - gjk[p.m] * p.q_mn[kk];
                        }
                    }
                    a
                })
                .collect();
            pair_dirs.push(dirs);
        }

        let phi_nodes = mesh.x_nodes.iter().map(&geopotential).collect();
        let phi_vol = mesh.x_vol.iter().map(&geopotential).collect();
        let phi_face = mesh.x_face.iter().map(&geopotential).collect();
        let omega_vol = (!rotation.is_zero()).then(|| {
            mesh.x_vol
                .iter()
                .map(|x| rotation.at(&[x[0], x[1], 0.0]))
                .collect()
        });
        let face_scale = (0..k * nqf)
            .map(|i| ops.face_weights[i % nqf] * mesh.jac_face[i])
            .collect();
        debug_assert_eq!(nt, nqv + nqf);
        Ok(Self {
            ops,
            mesh,
            gas,
            flux,
            rotation,
            phi_nodes,
            phi_vol,
            phi_face,
            omega_vol,
            fast,
            mass,
            projection,
            pair_dirs,
            pairs,
            face_scale,
        })
    }

    pub const NC: usize = D + 2;

    pub fn uses_collocated_path(&self) -> bool {
        self.fast
    }

    /// Length of a field vector.
    pub fn n_dofs(&self) -> usize {
        self.mesh.n_elements * Self::NC * self.ops.n_nodes()
    }

    /// Nodal state `i` of element `e`.
    pub fn node_state(&self, q: &[f64], e: usize, i: usize) -> State<D> {
        let np = self.ops.n_nodes();
        State::from_fn(|c| q[(e * Self::NC + c) * np + i])
    }

    pub fn set_node_state(&self, q: &mut [f64], e: usize, i: usize, s: &State<D>) {
        let np = self.ops.n_nodes();
        for c in 0..Self::NC {
            q[(e * Self::NC + c) * np + i] = s.get(c);
        }
    }

    /// Interpolate a nodal field by evaluating `f(x, phi)` at each node.
    pub fn project_nodal(&self, mut f: impl FnMut(&[f64; 2], f64) -> State<D>) -> Vec<f64> {
        let mut q = vec![0.0; self.n_dofs()];
        let np = self.ops.n_nodes();
        for e in 0..self.mesh.n_elements {
            for i in 0..np {
                let x = &self.mesh.x_nodes[e * np + i];
                self.set_node_state(&mut q, e, i, &f(x, self.phi_nodes[e * np + i]));
            }
        }
        q
    }

    /// Values at volume quadrature points, `nqv x NC`.
    pub fn volume_values(&self, q: &[f64], e: usize) -> DMatrix<f64> {
        let np = self.ops.n_nodes();
        let block = &q[e * Self::NC * np..(e + 1) * Self::NC * np];
        let qn = DMatrix::from_column_slice(np, Self::NC, block);
        if self.fast {
            qn
        } else {
            &self.ops.vol_vandermonde * qn
        }
    }

    /// State at volume quadrature point `v` of element `e`.
    pub fn volume_state(&self, q: &[f64], e: usize, v: usize) -> State<D> {
        Self::vol_state(&self.volume_values(q, e), v)
    }

    fn vol_state(m: &DMatrix<f64>, row: usize) -> State<D> {
        State::from_fn(|c| m[(row, c)])
    }

    /// Entropy-projected auxiliary states on the combined grid of every element.
    fn projected_aux(&self, q: &[f64]) -> Result<Vec<NodeAux<D>>> {
        let (nqv, nqf, nt) = (self.ops.n_vol(), self.ops.n_face(), self.ops.n_total());
        let mut aux = Vec::with_capacity(self.mesh.n_elements * nt);
        for e in 0..self.mesh.n_elements {
            let qv = self.volume_values(q, e);
            if self.fast {
                let start = aux.len();
                for v in 0..nqv {
                    let s = Self::vol_state(&qv, v);
                    aux.push(NodeAux::new(&s, self.phi_vol[e * nqv + v], &self.gas).map_err(|err| err.at(e, v))?);
                }
                let map = self.ops.face_to_vol.as_ref().expect("collocated operators");
                for (f, &v) in map.iter().enumerate() {
                    let mut a = aux[start + v];
                    a.phi = self.phi_face[e * nqf + f];
                    aux.push(a);
                }
                continue;
            }
            let mut beta = DMatrix::zeros(nqv, Self::NC);
            for v in 0..nqv {
                let s = Self::vol_state(&qv, v);
                let b = NodeAux::new(&s, self.phi_vol[e * nqv + v], &self.gas)
                    .map_err(|err| err.at(e, v))?
                    .entropy_variables(&self.gas);
                for c in 0..Self::NC {
                    beta[(v, c)] = b.get(c);
                }
            }
            let beta_n = &self.projection[e] * beta;
            let beta_t = &self.ops.vandermonde * beta_n;
            for i in 0..nt {
                let phi = if i < nqv {
                    self.phi_vol[e * nqv + i]
                } else {
                    self.phi_face[e * nqf + i - nqv]
                };
                let b = Self::vol_state(&beta_t, i);
                let s = state_from_entropy_variables(&b, phi, &self.gas)
                    .map_err(|_| Error::EntropyProjection { element: e })?;
                aux.push(NodeAux::new(&s, phi, &self.gas).map_err(|_| Error::EntropyProjection { element: e })?);
            }
        }
        Ok(aux)
    }

    /// Flux-differencing volume residual on the combined grid, `nt x NC`.
    fn volume_combined(&self, e: usize, aux: &[NodeAux<D>], r: &mut [State<D>]) {
        for s in r.iter_mut() {
            *s = State::zero();
        }
        for (&(n, m), a) in self.pairs.iter().zip(&self.pair_dirs[e]) {
            if a.iter().all(|&v| v == 0.0) {
                continue;
            }
            let (fnm, fmn) = ec_flux_pair(&aux[n], &aux[m], a, &self.gas);
            r[n] += fnm;
            r[m] -= fmn;
        }
    }

    /// Surface flux times `w^f J^f` at every face point of element `e`.
    fn surface_combined(&self, e: usize, aux: &[NodeAux<D>], r: &mut [State<D>]) {
        let (nqv, nqf, nt) = (self.ops.n_vol(), self.ops.n_face(), self.ops.n_total());
        for s in r.iter_mut() {
            *s = State::zero();
        }
        for f in 0..nqf {
            let gi = e * nqf + f;
            let nvec = self.mesh.normals[gi];
            let mut n = [0.0; D];
            n.copy_from_slice(&nvec[..D]);
            let inner = &aux[e * nt + nqv + f];
            let outer = match self.mesh.neighbor_point[gi] {
                Some((ne, nf)) => aux[ne * nt + nqv + nf],
                None => mirror_aux(inner, &n),
            };
            let mut flux = ec_flux_dir(inner, &outer, &n, &self.gas);
            if self.flux == SurfaceFlux::Es {
                flux -= matrix_dissipation(inner, &outer, &n, &self.gas) * 0.5;
            }
            r[nqv + f] = flux * self.face_scale[gi];
        }
    }

    /// `V^T r` for a combined-grid residual, written into `out` (`np x NC`).
    fn apply_vt(&self, r: &[State<D>], out: &mut DMatrix<f64>) {
        let nqv = self.ops.n_vol();
        out.fill(0.0);
        if self.fast {
            let map = self.ops.face_to_vol.as_ref().expect("collocated operators");
            for (v, s) in r[..nqv].iter().enumerate() {
                for c in 0..Self::NC {
                    out[(v, c)] += s.get(c);
                }
            }
            for (f, &v) in map.iter().enumerate() {
                for c in 0..Self::NC {
                    out[(v, c)] += r[nqv + f].get(c);
                }
            }
        } else {
            let rm = DMatrix::from_fn(r.len(), Self::NC, |i, c| r[i].get(c));
            out.gemm_tr(1.0, &self.ops.vandermonde, &rm, 0.0);
        }
    }

    fn source_nodal(&self, e: usize, aux: &[NodeAux<D>], out: &mut DMatrix<f64>) {
        out.fill(0.0);
        let Some(omega) = &self.omega_vol else {
            return;
        };
        let (nqv, nt) = (self.ops.n_vol(), self.ops.n_total());
        let mut g = DMatrix::zeros(nqv, Self::NC);
        for v in 0..nqv {
            let a = &aux[e * nt + v];
            let s = State::new(a.rho, a.u.map(|u| a.rho * u), 0.0);
            let jw = self.mesh.jac_vol[e * nqv + v] * self.ops.vol_rule.weights[v];
            let src = coriolis_source(&s, &omega[e * nqv + v]) * jw;
            for c in 0..Self::NC {
                g[(v, c)] = src.get(c);
            }
        }
        if self.fast {
            out.copy_from(&g);
        } else {
            out.gemm_tr(1.0, &self.ops.vol_vandermonde, &g, 0.0);
        }
    }

    /// Volume, surface and source terms, before the mass solve.
    pub fn residual_terms(&self, q: &[f64]) -> Result<ResidualTerms> {
        let np = self.ops.n_nodes();
        let nt = self.ops.n_total();
        let aux = self.projected_aux(q)?;
        let mut terms = ResidualTerms {
            volume: vec![0.0; q.len()],
            surface: vec![0.0; q.len()],
            source: vec![0.0; q.len()],
        };
        let mut r = vec![State::zero(); nt];
        let mut out = DMatrix::zeros(np, Self::NC);
        let block = np * Self::NC;
        for e in 0..self.mesh.n_elements {
            let ea = &aux[e * nt..(e + 1) * nt];
            self.volume_combined(e, ea, &mut r);
            self.apply_vt(&r, &mut out);
            terms.volume[e * block..(e + 1) * block].copy_from_slice(out.as_slice());
            self.surface_combined(e, &aux, &mut r);
            self.apply_vt(&r, &mut out);
            terms.surface[e * block..(e + 1) * block].copy_from_slice(out.as_slice());
            self.source_nodal(e, &aux, &mut out);
            terms.source[e * block..(e + 1) * block].copy_from_slice(out.as_slice());
        }
        Ok(terms)
    }

    /// `dq/dt = M^-1 (-volume - surface + source)`.
    pub fn rhs(&self, q: &[f64], dq: &mut [f64]) -> Result<()> {
        if q.len() != self.n_dofs() || dq.len() != self.n_dofs() {
            return Err(Error::InvalidArgument(format!(
                "field length {} / {} does not match {} dofs",
                q.len(),
                dq.len(),
                self.n_dofs()
            )));
        }
        let np = self.ops.n_nodes();
        let nt = self.ops.n_total();
        let aux = self.projected_aux(q)?;
        let mut r = vec![State::zero(); nt];
        let mut vol = DMatrix::zeros(np, Self::NC);
        let mut surf = DMatrix::zeros(np, Self::NC);
        let mut src = DMatrix::zeros(np, Self::NC);
        let block = np * Self::NC;
        for (e, out) in dq.chunks_mut(block).enumerate() {
            let ea = &aux[e * nt..(e + 1) * nt];
            self.volume_combined(e, ea, &mut r);
            self.apply_vt(&r, &mut vol);
            self.surface_combined(e, &aux, &mut r);
            self.apply_vt(&r, &mut surf);
            self.source_nodal(e, &aux, &mut src);
            let mut total = src.clone() - &vol - &surf;
            self.solve_mass(e, &mut total);
            out.copy_from_slice(total.as_slice());
        }
        Ok(())
    }

    fn solve_mass(&self, e: usize, m: &mut DMatrix<f64>) {
        match &self.mass[e] {
            MassSolve::Diagonal(jw) => {
                for c in 0..Self::NC {
                    for (i, w) in jw.iter().enumerate() {
                        m[(i, c)] /= w;
                    }
                }
            }
            MassSolve::Dense(chol) => chol.solve_mut(m),
        }
    }

    /// Multiply a field by the element mass matrices.
    pub fn apply_mass(&self, v: &[f64]) -> Vec<f64> {
        let np = self.ops.n_nodes();
        let block = np * Self::NC;
        let mut out = Vec::with_capacity(v.len());
        for (e, chunk) in v.chunks(block).enumerate() {
            let m = DMatrix::from_column_slice(np, Self::NC, chunk);
            let r = match &self.mass[e] {
                MassSolve::Diagonal(jw) => {
                    DMatrix::from_fn(np, Self::NC, |i, c| m[(i, c)] * jw[i])
                }
                MassSolve::Dense(chol) => {
                    let l = chol.l();
                    &l * (l.transpose() * m)
                }
            };
            out.extend_from_slice(r.as_slice());
        }
        out
    }

    /// `sum_K beta(q^v)^T J W V^v v`: rate of change of [`Self::entropy`]
    /// along the field direction `v`.
    pub fn entropy_inner(&self, q: &[f64], v: &[f64]) -> Result<f64> {
        let nqv = self.ops.n_vol();
        let mut total = 0.0;
        for e in 0..self.mesh.n_elements {
            let qv = self.volume_values(q, e);
            let vv = self.volume_values(v, e);
            for p in 0..nqv {
                let s = Self::vol_state(&qv, p);
                let beta = NodeAux::new(&s, self.phi_vol[e * nqv + p], &self.gas)
                    .map_err(|err| err.at(e, p))?
                    .entropy_variables(&self.gas);
                let jw = self.mesh.jac_vol[e * nqv + p] * self.ops.vol_rule.weights[p];
                total += jw * beta.dot(&Self::vol_state(&vv, p));
            }
        }
        Ok(total)
    }

    /// Discrete total entropy `sum_K 1^T J W eta(q^v)`.
    pub fn entropy(&self, q: &[f64]) -> Result<f64> {
        let nqv = self.ops.n_vol();
        let mut total = 0.0;
        for e in 0..self.mesh.n_elements {
            let qv = self.volume_values(q, e);
            for p in 0..nqv {
                let s = Self::vol_state(&qv, p);
                let jw = self.mesh.jac_vol[e * nqv + p] * self.ops.vol_rule.weights[p];
                total += jw * entropy(&s, self.phi_vol[e * nqv + p], &self.gas).map_err(|err| err.at(e, p))?;
            }
        }
        Ok(total)
    }

    /// Quadrature integral of each conservative component.
    pub fn integrals(&self, q: &[f64]) -> Vec<f64> {
        let nqv = self.ops.n_vol();
        let mut total = vec![0.0; Self::NC];
        for e in 0..self.mesh.n_elements {
            let qv = self.volume_values(q, e);
            for p in 0..nqv {
                let jw = self.mesh.jac_vol[e * nqv + p] * self.ops.vol_rule.weights[p];
                for (c, t) in total.iter_mut().enumerate() {
                    *t += jw * qv[(p, c)];
                }
            }
        }
        total
    }

    /// Minimum density and pressure over volume quadrature points. Pressure
    /// is reported as computed, even if nonpositive.
    pub fn min_density_pressure(&self, q: &[f64]) -> (f64, f64) {
        let nqv = self.ops.n_vol();
        let (mut rmin, mut pmin) = (f64::INFINITY, f64::INFINITY);
        for e in 0..self.mesh.n_elements {
            let qv = self.volume_values(q, e);
            for p in 0..nqv {
                let s = Self::vol_state(&qv, p);
                rmin = rmin.min(s.rho);
                let m2: f64 = s.mom.iter().map(|m| m * m).sum();
                let pr = (self.gas.gamma - 1.0)
                    * (s.rhoe - s.rho * self.phi_vol[e * nqv + p] - 0.5 * m2 / s.rho);
                pmin = pmin.min(pr);
            }
        }
        (rmin, pmin)
    }

    /// Smallest and largest density over volume quadrature points.
    pub fn density_range(&self, q: &[f64]) -> (f64, f64) {
        let nqv = self.ops.n_vol();
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for e in 0..self.mesh.n_elements {
            let qv = self.volume_values(q, e);
            for p in 0..nqv {
                lo = lo.min(qv[(p, 0)]);
                hi = hi.max(qv[(p, 0)]);
            }
        }
        (lo, hi)
    }

    /// Pressure at every interpolation node.
    pub fn nodal_pressure(&self, q: &[f64]) -> Result<Vec<f64>> {
        let np = self.ops.n_nodes();
        let mut out = Vec::with_capacity(self.mesh.n_elements * np);
        for e in 0..self.mesh.n_elements {
            for i in 0..np {
                let s = self.node_state(q, e, i);
                out.push(pressure(&s, self.phi_nodes[e * np + i], &self.gas).map_err(|err| err.at(e, i))?);
            }
        }
        Ok(out)
    }

    /// Largest `|u . n| + c` over all nodes and axis directions.
    pub fn max_wave_speed(&self, q: &[f64]) -> Result<f64> {
        let np = self.ops.n_nodes();
        let mut best: f64 = 0.0;
        for e in 0..self.mesh.n_elements {
            for i in 0..np {
                let s = self.node_state(q, e, i);
                let p = pressure(&s, self.phi_nodes[e * np + i], &self.gas).map_err(|err| err.at(e, i))?;
                let speed = s.velocity().iter().map(|u| u * u).sum::<f64>().sqrt();
                best = best.max(speed + (self.gas.gamma * p / s.rho).sqrt());
            }
        }
        Ok(best)
    }

    /// `cfl * min node spacing / max wave speed` of `q`.
    pub fn compute_dt(&self, q: &[f64], cfl: f64) -> Result<f64> {
        if !(cfl > 0.0) {
            return Err(Error::InvalidArgument(format!("cfl must be positive, got {cfl}")));
        }
        let h = (0..self.mesh.n_elements)
            .map(|e| self.mesh.min_node_spacing(e))
            .fold(f64::INFINITY, f64::min);
        Ok(cfl * h / self.max_wave_speed(q)?)
    }
}

/// Both orientations of the entropy-conservative flux for one pair:
/// `(F(l, r), F(r, l))` along `a`. Everything except the geopotential term is
/// symmetric, so the shared part is computed once.
#[inline]
fn ec_flux_pair<const D: usize>(
    l: &NodeAux<D>,
    r: &NodeAux<D>,
    a: &[f64; D],
    gas: &GasParameters,
) -> (State<D>, State<D>) {
    let rho_log = crate::euler::log_mean_with_logs(l.rho, r.rho, l.ln_rho, r.ln_rho);
    let b_log = crate::euler::log_mean_with_logs(l.b, r.b, l.ln_b, r.ln_b);
    let rho_avg = 0.5 * (l.rho + r.rho);
    let b_avg = 0.5 * (l.b + r.b);
    let mut ubar = [0.0; D];
    let mut un = 0.0;
    let mut ubar2 = 0.0;
    for i in 0..D {
        ubar[i] = 0.5 * (l.u[i] + r.u[i]);
        un += ubar[i] * a[i];
        ubar2 += ubar[i] * ubar[i];
    }
    let p_star = rho_avg / (2.0 * b_avg);
    let mass = rho_log * un;
    let e_star = 1.0 / (2.0 * (gas.gamma - 1.0) * b_log) + 0.5 * (l.phi + r.phi) + ubar2
        - 0.25 * (l.u2 + r.u2);
    let energy = e_star * mass + un * p_star;
    let half_jump = 0.5 * (r.phi - l.phi) * b_avg * rho_log;
    let p_lr = p_star + half_jump / l.b;
    let p_rl = p_star - half_jump / r.b;
    let mut mom_lr = [0.0; D];
    let mut mom_rl = [0.0; D];
    for i in 0..D {
        let adv = mass * ubar[i];
        mom_lr[i] = adv + a[i] * p_lr;
        mom_rl[i] = adv + a[i] * p_rl;
    }
    (
        State::new(mass, mom_lr, energy),
        State::new(mass, mom_rl, energy),
    )
}
