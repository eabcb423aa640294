//! One-dimensional quadrature rules, Lagrange nodal bases and their tensor
//! products on the reference element `[-1, 1]^d`.
//!
//! Node ordering on tensor grids is lexicographic with the first reference
//! coordinate running fastest; every other module indexes quadrature and
//! interpolation grids this way.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

const NEWTON_TOL: f64 = 1e-15;
const NEWTON_MAX_ITER: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuadratureKind {
    /// Legendre–Gauss–Lobatto, endpoints included.
    Lgl,
    /// Legendre–Gauss, interior points only.
    Gauss,
}

/// Quadrature rule on `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub kind: QuadratureKind,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Apply the rule to `f`.
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }

    /// Polynomial degree integrated exactly.
    pub fn exactness(&self) -> usize {
        match self.kind {
            QuadratureKind::Lgl => 2 * self.len() - 3,
            QuadratureKind::Gauss => 2 * self.len() - 1,
        }
    }
}

/// Legendre polynomial `P_n(x)` together with `P_{n-1}(x)`.
pub fn legendre(n: usize, x: f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let (mut p_prev, mut p) = (1.0, x);
    for k in 1..n {
        let k = k as f64;
        let p_next = ((2.0 * k + 1.0) * x * p - k * p_prev) / (k + 1.0);
        p_prev = p;
        p = p_next;
    }
    (p, p_prev)
}

/// `n`-point Legendre–Gauss–Lobatto rule, exact for degree `2n - 3`.
pub fn lgl_rule(n_points: usize) -> Result<QuadratureRule> {
    if n_points < 2 {
        return Err(Error::InvalidArgument(format!(
            "LGL rule needs at least 2 points, got {n_points}"
        )));
    }
    let degree = n_points - 1;
    let nf = degree as f64;
    let mut nodes = vec![0.0; n_points];
    nodes[0] = -1.0;
    nodes[degree] = 1.0;
    // Interior nodes are the roots of P_{N+1} - P_{N-1}, whose derivative is
    // (2N + 1) P_N.
    for (i, node) in nodes.iter_mut().enumerate().take(degree).skip(1) {
        let mut x = -(std::f64::consts::PI * i as f64 / nf).cos();
        for _ in 0..NEWTON_MAX_ITER {
            let (p_np1, p_n) = legendre(degree + 1, x);
            let (_, p_nm1) = legendre(degree, x);
            let dx = (p_np1 - p_nm1) / ((2.0 * nf + 1.0) * p_n);
            x -= dx;
            if dx.abs() < NEWTON_TOL {
                break;
            }
        }
        *node = x;
    }
    symmetrize(&mut nodes);
    let weights = nodes
        .iter()
        .map(|&x| {
            let (p, _) = legendre(degree, x);
            2.0 / (nf * (nf + 1.0) * p * p)
        })
        .collect();
    Ok(QuadratureRule {
        nodes,
        weights,
        kind: QuadratureKind::Lgl,
    })
}

/// `n`-point Legendre–Gauss rule, exact for degree `2n - 1`.
pub fn gauss_rule(n_points: usize) -> Result<QuadratureRule> {
    if n_points < 1 {
        return Err(Error::InvalidArgument(
            "Gauss rule needs at least 1 point".into(),
        ));
    }
    let nf = n_points as f64;
    let mut nodes = vec![0.0; n_points];
    let mut derivs = vec![0.0; n_points];
    for i in 0..n_points {
        let mut x = -(std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..NEWTON_MAX_ITER {
            let (p, p_prev) = legendre(n_points, x);
            dp = nf * (x * p - p_prev) / (x * x - 1.0);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < NEWTON_TOL {
                break;
            }
        }
        nodes[i] = x;
        derivs[i] = dp;
    }
    symmetrize(&mut nodes);
    let weights = nodes
        .iter()
        .map(|&x| {
            let (p, p_prev) = legendre(n_points, x);
            let dp = nf * (x * p - p_prev) / (x * x - 1.0);
            2.0 / ((1.0 - x * x) * dp * dp)
        })
        .collect();
    Ok(QuadratureRule {
        nodes,
        weights,
        kind: QuadratureKind::Gauss,
    })
}

/// Enforce exact antisymmetry of a symmetric node set.
fn symmetrize(nodes: &mut [f64]) {
    nodes.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = nodes.len();
    for i in 0..n / 2 {
        let half = 0.5 * (nodes[n - 1 - i] - nodes[i]);
        nodes[i] = -half;
        nodes[n - 1 - i] = half;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
}

/// Lagrange basis on a set of 1D interpolation nodes, evaluated in
/// barycentric form.
#[derive(Debug, Clone, PartialEq)]
pub struct NodalBasis {
    pub nodes: Vec<f64>,
    pub bary_weights: Vec<f64>,
}

impl NodalBasis {
    pub fn new(nodes: Vec<f64>) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(Error::InvalidArgument(
                "nodal basis needs degree >= 1".into(),
            ));
        }
        let bary_weights = (0..nodes.len())
            .map(|j| {
                let prod: f64 = (0..nodes.len())
                    .filter(|&k| k != j)
                    .map(|k| nodes[j] - nodes[k])
                    .product();
                1.0 / prod
            })
            .collect();
        Ok(Self {
            nodes,
            bary_weights,
        })
    }

    /// Degree-`degree` basis on the LGL nodes.
    pub fn lgl(degree: usize) -> Result<Self> {
        if degree < 1 {
            return Err(Error::InvalidArgument(
                "nodal basis needs degree >= 1".into(),
            ));
        }
        Self::new(lgl_rule(degree + 1)?.nodes)
    }

    pub fn degree(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Values of all cardinal functions at `x`.
    pub fn eval(&self, x: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.nodes.len()];
        if let Some(j) = self.nodes.iter().position(|&xj| xj == x) {
            out[j] = 1.0;
            return out;
        }
        let mut denom = 0.0;
        for (j, (&xj, &wj)) in self.nodes.iter().zip(&self.bary_weights).enumerate() {
            let t = wj / (x - xj);
            out[j] = t;
            denom += t;
        }
        out.iter_mut().for_each(|v| *v /= denom);
        out
    }

    /// Interpolation matrix with rows = points, columns = cardinal functions.
    pub fn vandermonde(&self, points: &[f64]) -> Result<DMatrix<f64>> {
        let mut v = DMatrix::zeros(points.len(), self.nodes.len());
        for (i, &x) in points.iter().enumerate() {
            if !(-1.0 - 1e-12..=1.0 + 1e-12).contains(&x) {
                return Err(Error::InvalidArgument(format!(
                    "evaluation point {x} outside [-1, 1]"
                )));
            }
            for (j, l) in self.eval(x).into_iter().enumerate() {
                v[(i, j)] = l;
            }
        }
        Ok(v)
    }

    /// Nodal differentiation matrix: maps nodal values of `p` to nodal values
    /// of `p'`.
    pub fn diff_matrix(&self) -> DMatrix<f64> {
        let n = self.nodes.len();
        let mut d = DMatrix::zeros(n, n);
        for i in 0..n {
            let mut diag = 0.0;
            for j in 0..n {
                if i != j {
                    let v = self.bary_weights[j]
                        / self.bary_weights[i]
                        / (self.nodes[i] - self.nodes[j]);
                    d[(i, j)] = v;
                    diag -= v;
                }
            }
            d[(i, i)] = diag;
        }
        d
    }
}

/// Quadrature on the reference element `[-1, 1]^d`, `d` in {1, 2}.
/// Points carry two coordinates; the second is zero when `dim == 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorRule {
    pub dim: usize,
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
}

impl TensorRule {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

pub fn tensor_product_rule(rule: &QuadratureRule, dim: usize) -> Result<TensorRule> {
    match dim {
        1 => Ok(TensorRule {
            dim,
            points: rule.nodes.iter().map(|&x| [x, 0.0]).collect(),
            weights: rule.weights.clone(),
        }),
        2 => {
            let n = rule.len();
            let mut points = Vec::with_capacity(n * n);
            let mut weights = Vec::with_capacity(n * n);
            for j in 0..n {
                for i in 0..n {
                    points.push([rule.nodes[i], rule.nodes[j]]);
                    weights.push(rule.weights[i] * rule.weights[j]);
                }
            }
            Ok(TensorRule {
                dim,
                points,
                weights,
            })
        }
        _ => Err(Error::InvalidArgument(format!(
            "unsupported dimension {dim}"
        ))),
    }
}
