//! Reference-element matrices and the skew-hybridized SBP operator.
//!
//! The hybridized operator acts on the combined grid of volume quadrature
//! points followed by the stacked face quadrature points. It is stored as
//! four blocks; [`HybridOperator::dense`] assembles the full matrix for
//! verification and debugging.

use std::fs;
use std::io::Write;
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::quadrature::{tensor_product_rule, NodalBasis, QuadratureRule, TensorRule};

/// Tolerance for deciding that interpolation and quadrature nodes coincide.
const COLLOCATION_TOL: f64 = 1e-14;

/// One direction of the skew-hybridized operator, split into blocks.
#[derive(Debug, Clone)]
pub struct HybridOperator {
    /// `(Q^v - Q^v^T) / 2`
    pub vol_skew: DMatrix<f64>,
    /// `E^T B / 2`
    pub vol_face: DMatrix<f64>,
    /// `-B E / 2`
    pub face_vol: DMatrix<f64>,
    /// diagonal of `B / 2`
    pub face_diag: Vec<f64>,
}

impl HybridOperator {
    pub fn n_vol(&self) -> usize {
        self.vol_skew.nrows()
    }

    pub fn n_face(&self) -> usize {
        self.face_diag.len()
    }

    pub fn dense(&self) -> DMatrix<f64> {
        let nv = self.n_vol();
        let nf = self.n_face();
        let mut q = DMatrix::zeros(nv + nf, nv + nf);
        q.view_mut((0, 0), (nv, nv)).copy_from(&self.vol_skew);
        q.view_mut((0, nv), (nv, nf)).copy_from(&self.vol_face);
        q.view_mut((nv, 0), (nf, nv)).copy_from(&self.face_vol);
        for (i, &b) in self.face_diag.iter().enumerate() {
            q[(nv + i, nv + i)] = b;
        }
        q
    }

    /// Entry `(n, m)` on the combined grid.
    pub fn entry(&self, n: usize, m: usize) -> f64 {
        let nv = self.n_vol();
        match (n < nv, m < nv) {
            (true, true) => self.vol_skew[(n, m)],
            (true, false) => self.vol_face[(n, m - nv)],
            (false, true) => self.face_vol[(n - nv, m)],
            (false, false) => {
                if n == m {
                    self.face_diag[n - nv]
                } else {
                    0.0
                }
            }
        }
    }
}

/// Unordered pair `n < m` of combined-grid nodes at which some `Q_k` has a
/// structurally nonzero entry, with `Q_k[n, m]` and `Q_k[m, n]` per direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FluxPair {
    pub n: usize,
    pub m: usize,
    pub q_nm: [f64; 2],
    pub q_mn: [f64; 2],
}

#[derive(Debug, Clone)]
pub struct ElementOperators {
    pub degree: usize,
    pub dim: usize,
    pub basis: NodalBasis,
    pub vol_rule: TensorRule,
    /// 1D rule used on each face (`None` in 1D, where faces are points).
    pub face_rule: Option<QuadratureRule>,
    pub n_faces: usize,
    pub points_per_face: usize,
    /// Stacked reference face points, face by face.
    pub face_points: Vec<[f64; 2]>,
    pub face_weights: Vec<f64>,
    /// Reference outward normals at the stacked face points.
    pub face_normals: Vec<[f64; 2]>,
    /// Interpolation nodes of the tensor basis.
    pub nodes: Vec<[f64; 2]>,
    pub vol_vandermonde: DMatrix<f64>,
    pub face_vandermonde: DMatrix<f64>,
    pub vandermonde: DMatrix<f64>,
    pub mass: DMatrix<f64>,
    pub projection: DMatrix<f64>,
    /// `D^N_i` acting on expansion coefficients.
    pub diff: Vec<DMatrix<f64>>,
    /// `Q^v_i = W^v V^v D^N_i P^v`
    pub vol_diff: Vec<DMatrix<f64>>,
    /// `E^v = V^f P^v`
    pub extrapolation: DMatrix<f64>,
    /// Diagonals of `B^f_i`.
    pub boundary: Vec<Vec<f64>>,
    pub hybrid: Vec<HybridOperator>,
    /// Interpolation nodes coincide with the volume rule and face points
    /// with volume points.
    pub collocated: bool,
    /// For collocated operators, the volume node under each face point.
    pub face_to_vol: Option<Vec<usize>>,
    pub volume_pairs: Vec<FluxPair>,
    pub coupling_pairs: Vec<FluxPair>,
}

impl ElementOperators {
    /// Assemble all reference operators for a degree-`N` LGL nodal basis.
    ///
    /// `vol_rule` is the 1D rule tensorized over the volume; `face_rule` is
    /// the 1D rule placed on each face in 2D and must be `None` in 1D.
    pub fn new(
        basis: &NodalBasis,
        vol_rule: &QuadratureRule,
        face_rule: Option<&QuadratureRule>,
        dim: usize,
    ) -> Result<Self> {
        match (dim, face_rule) {
            (1, None) | (2, Some(_)) => {}
            (1, Some(_)) => {
                return Err(Error::InvalidArgument(
                    "1D elements take no face rule".into(),
                ))
            }
            (2, None) => {
                return Err(Error::InvalidArgument(
                    "2D elements need a face rule".into(),
                ))
            }
            _ => {
                return Err(Error::InvalidArgument(format!(
                    "unsupported dimension {dim}"
                )))
            }
        }
        let degree = basis.degree();
        let n1 = degree + 1;
        let vol = tensor_product_rule(vol_rule, dim)?;
        let nodes = tensor_product_rule(
            &QuadratureRule {
                nodes: basis.nodes.clone(),
                weights: vec![1.0; n1],
                kind: vol_rule.kind,
            },
            dim,
        )?
        .points;
        let n_p = nodes.len();

        let (face_points, face_weights, face_normals, points_per_face) = if dim == 1 {
            (
                vec![[-1.0, 0.0], [1.0, 0.0]],
                vec![1.0, 1.0],
                vec![[-1.0, 0.0], [1.0, 0.0]],
                1,
            )
        } else {
            let fr = face_rule.unwrap();
            let mut pts = Vec::new();
            let mut wts = Vec::new();
            let mut nrm = Vec::new();
            let faces: [([f64; 2], usize); 4] =
                [([-1.0, 0.0], 0), ([1.0, 0.0], 0), ([0.0, -1.0], 1), ([0.0, 1.0], 1)];
            for (normal, axis) in faces {
                for (&s, &w) in fr.nodes.iter().zip(&fr.weights) {
                    let p = if axis == 0 {
                        [normal[0], s]
                    } else {
                        [s, normal[1]]
                    };
                    pts.push(p);
                    wts.push(w);
                    nrm.push(normal);
                }
            }
            (pts, wts, nrm, fr.len())
        };
        let n_faces = 2 * dim;
        let nqv = vol.len();
        let nqf = face_points.len();

        let collocated = nqv == n_p
            && vol
                .points
                .iter()
                .zip(&nodes)
                .all(|(a, b)| (a[0] - b[0]).abs() < COLLOCATION_TOL && (a[1] - b[1]).abs() < COLLOCATION_TOL);
        let face_to_vol: Option<Vec<usize>> = if collocated {
            face_points
                .iter()
                .map(|fp| {
                    nodes.iter().position(|np| {
                        (np[0] - fp[0]).abs() < COLLOCATION_TOL
                            && (np[1] - fp[1]).abs() < COLLOCATION_TOL
                    })
                })
                .collect()
        } else {
            None
        };
        let collocated = face_to_vol.is_some();

        let eval_tensor = |p: &[f64; 2]| -> Vec<f64> {
            let l1 = basis.eval(p[0]);
            if dim == 1 {
                return l1;
            }
            let l2 = basis.eval(p[1]);
            let mut out = Vec::with_capacity(n_p);
            for b in &l2 {
                for a in &l1 {
                    out.push(a * b);
                }
            }
            out
        };
        let vandermonde_at = |pts: &[[f64; 2]]| -> DMatrix<f64> {
            let mut v = DMatrix::zeros(pts.len(), n_p);
            for (i, p) in pts.iter().enumerate() {
                for (j, val) in eval_tensor(p).into_iter().enumerate() {
                    v[(i, j)] = val;
                }
            }
            v
        };

        let vv = if collocated {
            DMatrix::identity(n_p, n_p)
        } else {
            vandermonde_at(&vol.points)
        };
        let vf = vandermonde_at(&face_points);
        let mut v = DMatrix::zeros(nqv + nqf, n_p);
        v.view_mut((0, 0), (nqv, n_p)).copy_from(&vv);
        v.view_mut((nqv, 0), (nqf, n_p)).copy_from(&vf);

        let wv = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vol.weights.clone()));
        let mass = vv.transpose() * &wv * &vv;
        let projection = if collocated {
            DMatrix::identity(n_p, n_p)
        } else {
            let chol = mass.clone().cholesky().ok_or_else(|| {
                Error::ConstructionFailure("volume mass matrix is not positive definite".into())
            })?;
            chol.inverse() * vv.transpose() * &wv
        };

        let d1 = basis.diff_matrix();
        let diff: Vec<DMatrix<f64>> = (0..dim)
            .map(|axis| tensor_diff(&d1, dim, axis))
            .collect();
        let vol_diff: Vec<DMatrix<f64>> = diff
            .iter()
            .map(|d| &wv * &vv * d * &projection)
            .collect();
        let extrapolation = if let Some(map) = &face_to_vol {
            let mut e = DMatrix::zeros(nqf, nqv);
            for (f, &n) in map.iter().enumerate() {
                e[(f, n)] = 1.0;
            }
            e
        } else {
            &vf * &projection
        };
        let boundary: Vec<Vec<f64>> = (0..dim)
            .map(|i| {
                face_weights
                    .iter()
                    .zip(&face_normals)
                    .map(|(w, n)| w * n[i])
                    .collect()
            })
            .collect();

        let hybrid: Vec<HybridOperator> = (0..dim)
            .map(|i| {
                let qv = &vol_diff[i];
                let b = &boundary[i];
                let vol_skew = (qv - qv.transpose()) * 0.5;
                let mut vol_face = extrapolation.transpose();
                let mut face_vol = extrapolation.clone();
                for f in 0..nqf {
                    for n in 0..nqv {
                        vol_face[(n, f)] *= 0.5 * b[f];
                        face_vol[(f, n)] *= -0.5 * b[f];
                    }
                }
                HybridOperator {
                    vol_skew,
                    vol_face,
                    face_vol,
                    face_diag: b.iter().map(|x| 0.5 * x).collect(),
                }
            })
            .collect();

        let (volume_pairs, coupling_pairs) = structural_pairs(&hybrid, nqv, nqf);

        Ok(Self {
            degree,
            dim,
            basis: basis.clone(),
            vol_rule: vol,
            face_rule: face_rule.cloned(),
            n_faces,
            points_per_face,
            face_points,
            face_weights,
            face_normals,
            nodes,
            vol_vandermonde: vv,
            face_vandermonde: vf,
            vandermonde: v,
            mass,
            projection,
            diff,
            vol_diff,
            extrapolation,
            boundary,
            hybrid,
            collocated,
            face_to_vol,
            volume_pairs,
            coupling_pairs,
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_vol(&self) -> usize {
        self.vol_rule.len()
    }

    pub fn n_face(&self) -> usize {
        self.face_points.len()
    }

    /// Combined volume + face grid size.
    pub fn n_total(&self) -> usize {
        self.n_vol() + self.n_face()
    }

    /// Range of stacked face rows belonging to local face `face`.
    pub fn face_range(&self, face: usize) -> std::ops::Range<usize> {
        face * self.points_per_face..(face + 1) * self.points_per_face
    }

    /// `max |Q_i + Q_i^T - blockdiag(0, B_i)|` and `max |Q_i 1|` over directions.
    pub fn sbp_residuals(&self) -> (f64, f64) {
        let nv = self.n_vol();
        let nt = self.n_total();
        let mut sbp: f64 = 0.0;
        let mut cst: f64 = 0.0;
        for (q, b) in self.hybrid.iter().zip(&self.boundary) {
            let dense = q.dense();
            let mut target = DMatrix::zeros(nt, nt);
            for (f, &bf) in b.iter().enumerate() {
                target[(nv + f, nv + f)] = bf;
            }
            sbp = sbp.max((&dense + dense.transpose() - target).amax());
            cst = cst.max((&dense * nalgebra::DVector::from_element(nt, 1.0)).amax());
        }
        (sbp, cst)
    }

    /// Write every operator matrix as a row-major CSV file into `dir`.
    pub fn dump_csv(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        let write = |name: &str, m: &DMatrix<f64>| -> Result<()> {
            let mut f = fs::File::create(dir.join(format!("{name}.csv")))?;
            for row in m.row_iter() {
                let line: Vec<String> = row.iter().map(|v| format!("{v:.17e}")).collect();
                writeln!(f, "{}", line.join(","))?;
            }
            Ok(())
        };
        let diag = |v: &[f64]| DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(v));
        write("Vv", &self.vol_vandermonde)?;
        write("Vf", &self.face_vandermonde)?;
        write("V", &self.vandermonde)?;
        write("Wv", &diag(&self.vol_rule.weights))?;
        write("Wf", &diag(&self.face_weights))?;
        write("Mv", &self.mass)?;
        write("Pv", &self.projection)?;
        write("Ev", &self.extrapolation)?;
        for i in 0..self.dim {
            write(&format!("D{}", i + 1), &self.diff[i])?;
            write(&format!("Qv{}", i + 1), &self.vol_diff[i])?;
            write(&format!("Bf{}", i + 1), &diag(&self.boundary[i]))?;
            write(&format!("Q{}", i + 1), &self.hybrid[i].dense())?;
        }
        Ok(())
    }
}

/// Tensor-product differentiation along `axis` with the first index fastest.
fn tensor_diff(d1: &DMatrix<f64>, dim: usize, axis: usize) -> DMatrix<f64> {
    if dim == 1 {
        return d1.clone();
    }
    let n1 = d1.nrows();
    let np = n1 * n1;
    let mut d = DMatrix::zeros(np, np);
    for j in 0..n1 {
        for i in 0..n1 {
            let row = i + n1 * j;
            for k in 0..n1 {
                if axis == 0 {
                    d[(row, k + n1 * j)] = d1[(i, k)];
                } else {
                    d[(row, i + n1 * k)] = d1[(j, k)];
                }
            }
        }
    }
    d
}

fn structural_pairs(hybrid: &[HybridOperator], nqv: usize, nqf: usize) -> (Vec<FluxPair>, Vec<FluxPair>) {
    let mut volume = Vec::new();
    let mut coupling = Vec::new();
    let nt = nqv + nqf;
    for n in 0..nt {
        for m in n + 1..nt {
            let mut q_nm = [0.0; 2];
            let mut q_mn = [0.0; 2];
            for (k, q) in hybrid.iter().enumerate() {
                q_nm[k] = q.entry(n, m);
                q_mn[k] = q.entry(m, n);
            }
            if q_nm.iter().chain(&q_mn).all(|&v| v == 0.0) {
                continue;
            }
            let pair = FluxPair { n, m, q_nm, q_mn };
            if m < nqv {
                volume.push(pair);
            } else {
                coupling.push(pair);
            }
        }
    }
    (volume, coupling)
}

/// Metric diagonals on the combined grid, `g[j * dim + k][node]`.
pub type CombinedMetrics = [Vec<f64>];

/// Flux-differencing term `V^T sum_{j,k} (G_jk (Q_k o D_j) - (D_j o Q_k^T) G_jk) 1`
/// for one solution component.
///
/// `flux(n, m, j)` returns entry `(n, m)` of the flux matrix `D_j`. Only pairs
/// where some `Q_k` is structurally nonzero are visited; diagonal pairs cancel
/// identically and are skipped.
pub fn apply_hadamard_flux_kernel<E>(
    ops: &ElementOperators,
    metrics: &CombinedMetrics,
    mut flux: impl FnMut(usize, usize, usize) -> std::result::Result<f64, E>,
) -> std::result::Result<Vec<f64>, E> {
    let dim = ops.dim;
    let mut r = vec![0.0; ops.n_total()];
    for pair in ops.volume_pairs.iter().chain(&ops.coupling_pairs) {
        let (n, m) = (pair.n, pair.m);
        for j in 0..dim {
            let mut a_nm = 0.0;
            for k in 0..dim {
                let g = &metrics[j * dim + k];
                a_nm += g[n] * pair.q_nm[k] - g[m] * pair.q_mn[k];
            }
            if a_nm == 0.0 {
                continue;
            }
            r[n] += a_nm * flux(n, m, j)?;
            r[m] -= a_nm * flux(m, n, j)?;
        }
    }
    let r = nalgebra::DVector::from_vec(r);
    Ok((ops.vandermonde.transpose() * r).as_slice().to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::{gauss_rule, lgl_rule};
    use nalgebra::DVector;

    fn lgl_ops(degree: usize, dim: usize) -> ElementOperators {
        let basis = NodalBasis::lgl(degree).unwrap();
        let r = lgl_rule(degree + 1).unwrap();
        ElementOperators::new(&basis, &r, (dim == 2).then_some(&r), dim).unwrap()
    }

    fn gauss_ops(degree: usize, dim: usize) -> ElementOperators {
        let basis = NodalBasis::lgl(degree).unwrap();
        let r = gauss_rule(degree + 2).unwrap();
        ElementOperators::new(&basis, &r, (dim == 2).then_some(&r), dim).unwrap()
    }

    /// Direct assembly of Q_i from its defining formulas as one dense matrix.
    fn dense_oracle(ops: &ElementOperators, i: usize) -> DMatrix<f64> {
        let wv = DMatrix::from_diagonal(&DVector::from_vec(ops.vol_rule.weights.clone()));
        let m = ops.vol_vandermonde.transpose() * &wv * &ops.vol_vandermonde;
        let p = m.try_inverse().unwrap() * ops.vol_vandermonde.transpose() * &wv;
        let qv = &wv * &ops.vol_vandermonde * &ops.diff[i] * &p;
        let e = &ops.face_vandermonde * &p;
        let b = DMatrix::from_diagonal(&DVector::from_vec(ops.boundary[i].clone()));
        let nv = ops.n_vol();
        let nf = ops.n_face();
        let mut q = DMatrix::zeros(nv + nf, nv + nf);
        q.view_mut((0, 0), (nv, nv)).copy_from(&((&qv - qv.transpose()) * 0.5));
        q.view_mut((0, nv), (nv, nf)).copy_from(&(e.transpose() * &b * 0.5));
        q.view_mut((nv, 0), (nf, nv)).copy_from(&(&b * &e * -0.5));
        q.view_mut((nv, nv), (nf, nf)).copy_from(&(&b * 0.5));
        q
    }

    #[test]
    fn projection_inverts_interpolation() {
        for ops in [lgl_ops(3, 2), gauss_ops(3, 2), gauss_ops(5, 1)] {
            let pv = &ops.projection * &ops.vol_vandermonde;
            assert!((pv - DMatrix::identity(ops.n_nodes(), ops.n_nodes())).amax() < 1e-12);
            assert!(ops.mass.clone().cholesky().is_some());
            assert!((&ops.mass - ops.mass.transpose()).amax() < 1e-14);
        }
    }

    #[test]
    fn collocated_lgl_reduces() {
        let ops = lgl_ops(4, 1);
        assert!(ops.collocated);
        assert_eq!(ops.projection, DMatrix::identity(5, 5));
        assert_eq!(ops.vol_vandermonde, DMatrix::identity(5, 5));
        // diagonal mass matrix
        for i in 0..5 {
            for j in 0..5 {
                if i != j {
                    assert_eq!(ops.mass[(i, j)], 0.0);
                }
            }
        }
        let w = DMatrix::from_diagonal(&DVector::from_vec(ops.vol_rule.weights.clone()));
        assert!((&ops.vol_diff[0] - &w * &ops.diff[0]).amax() < 1e-13);

        let ops = lgl_ops(3, 2);
        assert!(ops.collocated);
        for row in ops.extrapolation.row_iter() {
            assert_eq!(row.iter().filter(|&&v| v == 1.0).count(), 1);
            assert_eq!(row.iter().filter(|&&v| v == 0.0).count(), row.len() - 1);
        }
        assert!(!gauss_ops(3, 2).collocated);
    }

    #[test]
    fn sbp_identity_and_constant_exactness() {
        for degree in 1..=6 {
            for dim in 1..=2 {
                for ops in [lgl_ops(degree, dim), gauss_ops(degree, dim)] {
                    let (sbp, cst) = ops.sbp_residuals();
                    assert!(sbp < 1e-12, "N={degree} d={dim}: {sbp}");
                    assert!(cst < 1e-12, "N={degree} d={dim}: {cst}");
                }
            }
        }
    }

    #[test]
    fn blocks_match_dense_oracle() {
        for ops in [lgl_ops(3, 2), gauss_ops(3, 2), gauss_ops(2, 1)] {
            for i in 0..ops.dim {
                let diff = (ops.hybrid[i].dense() - dense_oracle(&ops, i)).amax();
                assert!(diff < 1e-12, "{diff}");
            }
        }
    }

    #[test]
    fn discrete_integration_by_parts() {
        // p, q polynomial in P^N: p^T V^T (Q + Q^T) V q equals the face
        // quadrature of n_i p q.
        for ops in [lgl_ops(4, 2), gauss_ops(4, 2), lgl_ops(5, 1)] {
            let np = ops.n_nodes();
            let p = DVector::from_fn(np, |i, _| ((i * 7 + 3) % 11) as f64 / 11.0 - 0.4);
            let q = DVector::from_fn(np, |i, _| ((i * 5 + 1) % 13) as f64 / 13.0 + 0.1);
            let pf = &ops.face_vandermonde * &p;
            let qf = &ops.face_vandermonde * &q;
            for i in 0..ops.dim {
                let qd = ops.hybrid[i].dense();
                let lhs = (&ops.vandermonde * &p).dot(&((&qd + qd.transpose()) * (&ops.vandermonde * &q)));
                let rhs: f64 = (0..ops.n_face())
                    .map(|f| ops.boundary[i][f] * pf[f] * qf[f])
                    .sum();
                assert!((lhs - rhs).abs() < 1e-11);
            }
        }
    }

    #[test]
    fn face_ranges_cover_faces() {
        let ops = gauss_ops(2, 2);
        assert_eq!(ops.n_faces, 4);
        for f in 0..4 {
            let r = ops.face_range(f);
            assert_eq!(r.len(), 4);
            for k in r {
                assert_eq!(ops.face_normals[k], ops.face_normals[f * 4]);
            }
        }
    }

    #[test]
    fn bad_dimensions_rejected() {
        let basis = NodalBasis::lgl(2).unwrap();
        let r = lgl_rule(3).unwrap();
        assert!(ElementOperators::new(&basis, &r, Some(&r), 1).is_err());
        assert!(ElementOperators::new(&basis, &r, None, 2).is_err());
        assert!(ElementOperators::new(&basis, &r, None, 3).is_err());
    }

    /// Dense triple-loop evaluation of the flux-differencing term.
    fn dense_kernel(
        ops: &ElementOperators,
        g: &[Vec<f64>],
        flux: &dyn Fn(usize, usize, usize) -> f64,
    ) -> DVector<f64> {
        let nt = ops.n_total();
        let dim = ops.dim;
        let mut r = DVector::zeros(nt);
        for n in 0..nt {
            for m in 0..nt {
                for j in 0..dim {
                    for k in 0..dim {
                        let q = ops.hybrid[k].dense();
                        let gjk = &g[j * dim + k];
                        r[n] += (gjk[n] * q[(n, m)] - q[(m, n)] * gjk[m]) * flux(n, m, j);
                    }
                }
            }
        }
        ops.vandermonde.transpose() * r
    }

    fn pseudo_random(n: usize, m: usize, j: usize) -> f64 {
        let h = (n * 7919 + m * 104729 + j * 1299709) % 10007;
        (h as f64 / 10007.0 - 0.5) * 2.0
    }

    #[test]
    fn kernel_zero_and_constant_flux() {
        let ops = gauss_ops(3, 2);
        let g: Vec<Vec<f64>> = (0..4)
            .map(|jk| vec![if jk == 0 || jk == 3 { 1.0 } else { 0.0 }; ops.n_total()])
            .collect();
        let r = apply_hadamard_flux_kernel(&ops, &g, |_, _, _| Ok::<_, ()>(0.0)).unwrap();
        assert!(r.iter().all(|&v| v == 0.0));
        // constant flux c gives -c V^T (B_1 + B_2) 1, which integrates to zero
        let c = 3.7;
        let r = apply_hadamard_flux_kernel(&ops, &g, |_, _, _| Ok::<_, ()>(c)).unwrap();
        let nv = ops.n_vol();
        let mut b = DVector::zeros(ops.n_total());
        for f in 0..ops.n_face() {
            b[nv + f] = ops.boundary[0][f] + ops.boundary[1][f];
        }
        let expected = ops.vandermonde.transpose() * b * -c;
        for (a, e) in r.iter().zip(expected.iter()) {
            assert!((a - e).abs() < 1e-12);
        }
        assert!(r.iter().sum::<f64>().abs() < 1e-12);
    }

    #[test]
    fn kernel_matches_dense_oracle() {
        // symmetric random flux on a 1D N=2 element
        let ops = gauss_ops(2, 1);
        let g = vec![vec![1.3; ops.n_total()]];
        let sym = |n: usize, m: usize, j: usize| pseudo_random(n.min(m), n.max(m), j);
        let fast = apply_hadamard_flux_kernel(&ops, &g, |n, m, j| Ok::<_, ()>(sym(n, m, j))).unwrap();
        let dense = dense_kernel(&ops, &g, &sym);
        for (a, b) in fast.iter().zip(dense.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
        // nonsymmetric flux and varying metrics in 2D, both quadrature kinds
        for ops in [lgl_ops(3, 2), gauss_ops(2, 2)] {
            let nt = ops.n_total();
            let g: Vec<Vec<f64>> = (0..4)
                .map(|jk| (0..nt).map(|i| pseudo_random(i, jk, 3) + if jk % 3 == 0 { 2.0 } else { 0.0 }).collect())
                .collect();
            let fast = apply_hadamard_flux_kernel(&ops, &g, |n, m, j| Ok::<_, ()>(pseudo_random(n, m, j))).unwrap();
            let dense = dense_kernel(&ops, &g, &pseudo_random);
            for (a, b) in fast.iter().zip(dense.iter()) {
                assert!((a - b).abs() < 1e-13, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn kernel_propagates_errors() {
        let ops = lgl_ops(2, 1);
        let g = vec![vec![1.0; ops.n_total()]];
        let r = apply_hadamard_flux_kernel(&ops, &g, |_, _, _| Err::<f64, _>("boom"));
        assert_eq!(r, Err("boom"));
    }

    #[test]
    fn dump_writes_all_matrices() {
        let ops = lgl_ops(2, 2);
        let dir = std::env::temp_dir().join(format!("esdg-ops-{}", std::process::id()));
        ops.dump_csv(&dir).unwrap();
        let q1 = std::fs::read_to_string(dir.join("Q1.csv")).unwrap();
        assert_eq!(q1.lines().count(), ops.n_total());
        assert_eq!(q1.lines().next().unwrap().split(',').count(), ops.n_total());
        for name in ["Vv", "Vf", "V", "Wv", "Wf", "Mv", "Pv", "Ev", "D2", "Qv2", "Bf2", "Q2"] {
            assert!(dir.join(format!("{name}.csv")).exists(), "{name}");
        }
        std::fs::remove_dir_all(dir).ok();
    }
}
