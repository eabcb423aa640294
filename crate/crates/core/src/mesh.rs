//! Tensor-product box meshes in 1D and 2D, optional smooth warping, and the
//! discrete metric terms.
//!
//! Elements are numbered with the first axis fastest. Metric entries are
//! `G_jk = J d(xi_k)/d(x_j)` stored as `[G11, G12, G21, G22]`; in 1D only the
//! first entry is used and equals one.

use std::io::Write;
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::operators::ElementOperators;

/// Tolerance for matching face quadrature points of neighbouring elements.
const FACE_MATCH_TOL: f64 = 1e-11;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryKind {
    Periodic,
    Wall,
}

impl std::str::FromStr for BoundaryKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "periodic" => Ok(Self::Periodic),
            "wall" => Ok(Self::Wall),
            other => Err(Error::InvalidArgument(format!("unknown boundary kind '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FaceConnection {
    Interior {
        element: usize,
        face: usize,
        /// Face points of the neighbour run in the opposite tangential order.
        reversed: bool,
    },
    Wall,
}

#[derive(Debug, Clone)]
pub struct Mesh {
    pub dim: usize,
    pub extents: Vec<(f64, f64)>,
    pub elements_per_dim: Vec<usize>,
    pub boundary: Vec<BoundaryKind>,
    pub n_elements: usize,
    pub n_nodes: usize,
    pub n_vol: usize,
    pub n_face: usize,
    /// Interpolation-node coordinates, `e * n_nodes + i`.
    pub x_nodes: Vec<[f64; 2]>,
    /// Volume quadrature coordinates, `e * n_vol + q`.
    pub x_vol: Vec<[f64; 2]>,
    /// Face quadrature coordinates, `e * n_face + f`.
    pub x_face: Vec<[f64; 2]>,
    pub jac_vol: Vec<f64>,
    pub metrics_vol: Vec<[f64; 4]>,
    pub metrics_face: Vec<[f64; 4]>,
    /// Face Jacobian `J^f`, the length of `sum_k G_jk n~_k`.
    pub jac_face: Vec<f64>,
    /// Physical outward unit normals at face quadrature points.
    pub normals: Vec<[f64; 2]>,
    /// `e * n_faces + face`
    pub connections: Vec<FaceConnection>,
    /// Element faces lying on the domain boundary (periodic or not).
    pub on_domain_boundary: Vec<bool>,
    /// For each face point, the matching face point `(element, stacked index)`
    /// of the neighbour, or `None` on walls.
    pub neighbor_point: Vec<Option<(usize, usize)>>,
}

impl Mesh {
    /// Uniform Cartesian mesh of the box `extents` with `elements` per axis.
    pub fn new_box(
        ops: &ElementOperators,
        extents: &[(f64, f64)],
        elements: &[usize],
        boundary: &[BoundaryKind],
    ) -> Result<Self> {
        let dim = ops.dim;
        if extents.len() != dim || elements.len() != dim || boundary.len() != dim {
            return Err(Error::InvalidArgument(format!(
                "box mesh needs {dim} extents, element counts and boundary kinds"
            )));
        }
        for (a, &(lo, hi)) in extents.iter().enumerate() {
            if !(hi > lo) || !lo.is_finite() || !hi.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "axis {a} has degenerate extent ({lo}, {hi})"
                )));
            }
        }
        if elements.iter().any(|&k| k == 0) {
            return Err(Error::InvalidArgument("element counts must be at least 1".into()));
        }

        // element breakpoints, shared bit-for-bit between neighbours
        let breaks: Vec<Vec<f64>> = (0..dim)
            .map(|a| {
                let (lo, hi) = extents[a];
                let k = elements[a];
                (0..=k)
                    .map(|i| if i == k { hi } else { lo + (hi - lo) * i as f64 / k as f64 })
                    .collect()
            })
            .collect();
        let n_elements: usize = elements.iter().product();
        let mut x_nodes = Vec::with_capacity(n_elements * ops.n_nodes());
        let kx = elements[0];
        for e in 0..n_elements {
            let idx = [e % kx, e / kx];
            for node in &ops.nodes {
                let mut x = [0.0; 2];
                for a in 0..dim {
                    let t = 0.5 * (node[a] + 1.0);
                    let (x0, x1) = (breaks[a][idx[a]], breaks[a][idx[a] + 1]);
                    x[a] = x0 * (1.0 - t) + x1 * t;
                }
                x_nodes.push(x);
            }
        }
        Self::from_nodes(
            ops,
            extents.to_vec(),
            elements.to_vec(),
            boundary.to_vec(),
            x_nodes,
        )
    }

    /// Apply a coordinate map to the interpolation nodes and recompute metrics.
    pub fn warp(&self, ops: &ElementOperators, map: impl Fn([f64; 2]) -> [f64; 2]) -> Result<Self> {
        let x_nodes = self.x_nodes.iter().map(|&x| map(x)).collect();
        Self::from_nodes(
            ops,
            self.extents.clone(),
            self.elements_per_dim.clone(),
            self.boundary.clone(),
            x_nodes,
        )
    }

    fn from_nodes(
        ops: &ElementOperators,
        extents: Vec<(f64, f64)>,
        elements_per_dim: Vec<usize>,
        boundary: Vec<BoundaryKind>,
        x_nodes: Vec<[f64; 2]>,
    ) -> Result<Self> {
        let dim = ops.dim;
        let n_elements: usize = elements_per_dim.iter().product();
        let (np, nqv, nqf) = (ops.n_nodes(), ops.n_vol(), ops.n_face());
        let mut mesh = Self {
            dim,
            extents,
            elements_per_dim,
            boundary,
            n_elements,
            n_nodes: np,
            n_vol: nqv,
            n_face: nqf,
            x_nodes,
            x_vol: Vec::with_capacity(n_elements * nqv),
            x_face: Vec::with_capacity(n_elements * nqf),
            jac_vol: Vec::with_capacity(n_elements * nqv),
            metrics_vol: Vec::with_capacity(n_elements * nqv),
            metrics_face: Vec::with_capacity(n_elements * nqf),
            jac_face: Vec::with_capacity(n_elements * nqf),
            normals: Vec::with_capacity(n_elements * nqf),
            connections: Vec::new(),
            on_domain_boundary: Vec::new(),
            neighbor_point: Vec::new(),
        };
        for e in 0..n_elements {
            mesh.compute_metrics(ops, e)?;
        }
        mesh.connect(ops)?;
        Ok(mesh)
    }

    fn compute_metrics(&mut self, ops: &ElementOperators, e: usize) -> Result<()> {
        let dim = self.dim;
        let np = self.n_nodes;
        let nodes = &self.x_nodes[e * np..(e + 1) * np];
        let coord = |a: usize| DVector::from_iterator(np, nodes.iter().map(|x| x[a]));
        let x1 = coord(0);
        let x2 = coord(1);
        let interp_v = |v: &DVector<f64>| &ops.vol_vandermonde * v;
        let interp_f = |v: &DVector<f64>| &ops.face_vandermonde * v;
        let (xv1, xv2, xf1, xf2) = (interp_v(&x1), interp_v(&x2), interp_f(&x1), interp_f(&x2));
        for q in 0..ops.n_vol() {
            self.x_vol.push([xv1[q], if dim == 2 { xv2[q] } else { 0.0 }]);
        }
        for f in 0..ops.n_face() {
            self.x_face.push([xf1[f], if dim == 2 { xf2[f] } else { 0.0 }]);
        }

        let (g_nodal, jac_vol): (Vec<DVector<f64>>, Vec<f64>) = if dim == 1 {
            let dx = interp_v(&centered_derivative(&ops.diff[0], &x1));
            (vec![DVector::from_element(np, 1.0)], dx.iter().copied().collect())
        } else {
            let d = |a: &DVector<f64>, k: usize| centered_derivative(&ops.diff[k], a);
            let (x1_1, x1_2, x2_1, x2_2) = (d(&x1, 0), d(&x1, 1), d(&x2, 0), d(&x2, 1));
            let g = vec![x2_2.clone(), -&x2_1, -&x1_2, x1_1.clone()];
            let gv: Vec<DVector<f64>> = g.iter().map(interp_v).collect();
            let jac = (0..ops.n_vol())
                .map(|q| gv[0][q] * gv[3][q] - gv[1][q] * gv[2][q])
                .collect();
            (g, jac)
        };
        let min_jac = jac_vol.iter().copied().fold(f64::INFINITY, f64::min);
        if !(min_jac > 0.0) {
            return Err(Error::DegenerateMesh {
                element: e,
                min_jacobian: min_jac,
            });
        }
        self.jac_vol.extend(jac_vol);

        let pack = |vals: Vec<DVector<f64>>, n: usize| -> Vec<[f64; 4]> {
            (0..n)
                .map(|i| {
                    let mut g = [0.0; 4];
                    for (slot, v) in g.iter_mut().zip(&vals) {
                        *slot = v[i];
                    }
                    g
                })
                .collect()
        };
        self.metrics_vol
            .extend(pack(g_nodal.iter().map(interp_v).collect(), ops.n_vol()));
        let gf = pack(g_nodal.iter().map(interp_f).collect(), ops.n_face());
        for (f, g) in gf.iter().enumerate() {
            let nt = ops.face_normals[f];
            let scaled = if dim == 1 {
                [g[0] * nt[0], 0.0]
            } else {
                [g[0] * nt[0] + g[1] * nt[1], g[2] * nt[0] + g[3] * nt[1]]
            };
            let jf = scaled[0].hypot(scaled[1]);
            if !(jf > 0.0) {
                return Err(Error::DegenerateMesh {
                    element: e,
                    min_jacobian: jf,
                });
            }
            self.jac_face.push(jf);
            self.normals.push([scaled[0] / jf, scaled[1] / jf]);
        }
        self.metrics_face.extend(gf);
        Ok(())
    }

    /// Neighbour of element `e` across local face `face`, with the shift
    /// that maps the neighbour's coordinates onto ours for periodic wraps.
    fn topological_neighbor(&self, e: usize, face: usize) -> Option<(usize, usize, [f64; 2])> {
        let axis = face / 2;
        let upper = face % 2 == 1;
        let k = &self.elements_per_dim;
        let mut idx = [e % k[0], if self.dim == 2 { e / k[0] } else { 0 }];
        let mut shift = [0.0; 2];
        let period = self.extents[axis].1 - self.extents[axis].0;
        if upper {
            if idx[axis] + 1 == k[axis] {
                if self.boundary[axis] == BoundaryKind::Wall {
                    return None;
                }
                idx[axis] = 0;
                shift[axis] = period;
            } else {
                idx[axis] += 1;
            }
        } else if idx[axis] == 0 {
            if self.boundary[axis] == BoundaryKind::Wall {
                return None;
            }
            idx[axis] = k[axis] - 1;
            shift[axis] = -period;
        } else {
            idx[axis] -= 1;
        }
        Some((idx[0] + k[0] * idx[1], face ^ 1, shift))
    }

    fn connect(&mut self, ops: &ElementOperators) -> Result<()> {
        let nf = ops.n_faces;
        let ppf = ops.points_per_face;
        let k = self.elements_per_dim.clone();
        self.connections = Vec::with_capacity(self.n_elements * nf);
        self.on_domain_boundary = Vec::with_capacity(self.n_elements * nf);
        self.neighbor_point = vec![None; self.n_elements * self.n_face];
        for e in 0..self.n_elements {
            let idx = [e % k[0], if self.dim == 2 { e / k[0] } else { 0 }];
            for face in 0..nf {
                let axis = face / 2;
                let upper = face % 2 == 1;
                self.on_domain_boundary
                    .push(if upper { idx[axis] + 1 == k[axis] } else { idx[axis] == 0 });
                let Some((ne, nface, shift)) = self.topological_neighbor(e, face) else {
                    self.connections.push(FaceConnection::Wall);
                    continue;
                };
                let mine = ops.face_range(face);
                let theirs = ops.face_range(nface);
                let mismatch = |reversed: bool| -> f64 {
                    (0..ppf)
                        .map(|i| {
                            let j = if reversed { ppf - 1 - i } else { i };
                            let a = self.x_face[e * self.n_face + mine.start + i];
                            let b = self.x_face[ne * self.n_face + theirs.start + j];
                            (a[0] - b[0] - shift[0]).abs().max((a[1] - b[1] - shift[1]).abs())
                        })
                        .fold(0.0, f64::max)
                };
                let scale = self.length_scale();
                let reversed = if mismatch(false) <= FACE_MATCH_TOL * scale {
                    false
                } else if mismatch(true) <= FACE_MATCH_TOL * scale {
                    true
                } else {
                    return Err(Error::Internal(format!(
                        "face {face} of element {e} does not match face {nface} of element {ne}"
                    )));
                };
                for i in 0..ppf {
                    let j = if reversed { ppf - 1 - i } else { i };
                    self.neighbor_point[e * self.n_face + mine.start + i] =
                        Some((ne, theirs.start + j));
                }
                self.connections.push(FaceConnection::Interior {
                    element: ne,
                    face: nface,
                    reversed,
                });
            }
        }
        Ok(())
    }

    /// Largest domain extent, used to make geometric tolerances relative.
    pub fn length_scale(&self) -> f64 {
        self.extents
            .iter()
            .map(|(lo, hi)| (hi - lo).max(lo.abs()).max(hi.abs()))
            .fold(1.0, f64::max)
    }

    pub fn n_faces_per_element(&self) -> usize {
        2 * self.dim
    }

    pub fn connection(&self, e: usize, face: usize) -> FaceConnection {
        self.connections[e * self.n_faces_per_element() + face]
    }

    pub fn min_jacobian(&self) -> f64 {
        self.jac_vol.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_jacobian(&self) -> f64 {
        self.jac_vol.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Metric entries of element `e` on the combined grid, `g[j * dim + k][node]`.
    pub fn combined_metrics(&self, e: usize) -> Vec<Vec<f64>> {
        let dim = self.dim;
        let mut g = vec![Vec::with_capacity(self.n_vol + self.n_face); dim * dim];
        let vol = &self.metrics_vol[e * self.n_vol..(e + 1) * self.n_vol];
        let face = &self.metrics_face[e * self.n_face..(e + 1) * self.n_face];
        for m in vol.iter().chain(face) {
            for j in 0..dim {
                for k in 0..dim {
                    g[j * dim + k].push(m[j * 2 + k]);
                }
            }
        }
        g
    }

    /// `max |sum_k Q_k G_jk 1|` over elements, directions and combined nodes.
    pub fn gcl_residual(&self, ops: &ElementOperators) -> f64 {
        let dim = self.dim;
        let mut worst: f64 = 0.0;
        let dense: Vec<_> = ops.hybrid.iter().map(|q| q.dense()).collect();
        for e in 0..self.n_elements {
            let g = self.combined_metrics(e);
            for j in 0..dim {
                let mut r = DVector::zeros(ops.n_total());
                for k in 0..dim {
                    r += &dense[k] * DVector::from_column_slice(&g[j * dim + k]);
                }
                worst = worst.max(r.amax());
            }
        }
        worst
    }

    /// `max |J^f n^- + J^f n^+|` over matched interior face points.
    pub fn watertightness_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, nb) in self.neighbor_point.iter().enumerate() {
            if let Some((ne, f)) = nb {
                let j = ne * self.n_face + f;
                for a in 0..self.dim {
                    let s = self.jac_face[i] * self.normals[i][a] + self.jac_face[j] * self.normals[j][a];
                    worst = worst.max(s.abs());
                }
            }
        }
        worst
    }

    /// `max | |n| - 1 |` over all face points.
    pub fn normal_residual(&self) -> f64 {
        self.normals
            .iter()
            .map(|n| (n[0].hypot(n[1]) - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// Sum of `J w` over all volume quadrature points.
    pub fn volume(&self, ops: &ElementOperators) -> f64 {
        self.jac_vol
            .iter()
            .enumerate()
            .map(|(i, j)| j * ops.vol_rule.weights[i % self.n_vol])
            .sum()
    }

    /// Sum of `J^f w^f` over element faces on the domain boundary.
    pub fn boundary_measure(&self, ops: &ElementOperators) -> f64 {
        let nf = self.n_faces_per_element();
        let mut total = 0.0;
        for e in 0..self.n_elements {
            for face in 0..nf {
                if self.on_domain_boundary[e * nf + face] {
                    for f in ops.face_range(face) {
                        total += self.jac_face[e * self.n_face + f] * ops.face_weights[f];
                    }
                }
            }
        }
        total
    }

    /// Minimum distance between distinct interpolation nodes of element `e`.
    pub fn min_node_spacing(&self, e: usize) -> f64 {
        let nodes = &self.x_nodes[e * self.n_nodes..(e + 1) * self.n_nodes];
        let mut best = f64::INFINITY;
        for (i, a) in nodes.iter().enumerate() {
            for b in &nodes[i + 1..] {
                best = best.min((a[0] - b[0]).hypot(a[1] - b[1]));
            }
        }
        best
    }

    /// Write interpolation-node coordinates as `element,node,x1[,x2]`.
    pub fn export_nodes_csv(&self, path: &Path) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        if self.dim == 1 {
            writeln!(f, "element,node,x1")?;
        } else {
            writeln!(f, "element,node,x1,x2")?;
        }
        for (i, x) in self.x_nodes.iter().enumerate() {
            let (e, n) = (i / self.n_nodes, i % self.n_nodes);
            if self.dim == 1 {
                writeln!(f, "{e},{n},{:.17e}", x[0])?;
            } else {
                writeln!(f, "{e},{n},{:.17e},{:.17e}", x[0], x[1])?;
            }
        }
        Ok(())
    }
}

/// `D v` evaluated as `sum_j D_ij (v_j - v_i)`, so coordinates that are
/// constant along a reference direction differentiate to exactly zero.
fn centered_derivative(d: &DMatrix<f64>, v: &DVector<f64>) -> DVector<f64> {
    DVector::from_fn(v.len(), |i, _| (0..v.len()).map(|j| d[(i, j)] * (v[j] - v[i])).sum())
}
