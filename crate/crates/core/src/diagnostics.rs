//! Global diagnostics, error norms and convergence rates.

use std::io::Write;

use crate::cases::Primitive;
use crate::error::{Error, Result};
use crate::euler::GasParameters;
use crate::quadrature::gauss_rule;
use crate::simulation::Discretization;
use crate::time::EntropySystem;

pub const DIAGNOSTICS_HEADER: &str = "t,S,mass,energy,min_rho,min_p,dS_rel,relax_gamma";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagnosticsRow {
    pub t: f64,
    pub entropy: f64,
    pub mass: f64,
    pub energy: f64,
    pub min_rho: f64,
    pub min_p: f64,
    /// `(S - S0) / |S0|`.
    pub entropy_change: f64,
    pub relax_gamma: f64,
}

impl DiagnosticsRow {
    pub fn compute(disc: &Discretization, q: &[f64], t: f64, s0: Option<f64>, gamma: f64) -> Result<Self> {
        let entropy = disc.entropy(q)?;
        let ints = disc.integrals(q);
        let (min_rho, min_p) = disc.min_density_pressure(q);
        let s0 = s0.unwrap_or(entropy);
        Ok(Self {
            t,
            entropy,
            mass: ints[0],
            energy: ints[ints.len() - 1],
            min_rho,
            min_p,
            entropy_change: relative_change(entropy, s0),
            relax_gamma: gamma,
        })
    }

    pub fn write_csv(&self, w: &mut impl Write) -> std::io::Result<()> {
        writeln!(
            w,
            "{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}",
            self.t,
            self.entropy,
            self.mass,
            self.energy,
            self.min_rho,
            self.min_p,
            self.entropy_change,
            self.relax_gamma
        )
    }
}

/// `(a - b) / |b|`, or the absolute change when `b` is zero.
pub fn relative_change(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        a - b
    } else {
        (a - b) / b.abs()
    }
}

/// Primitive variables from a conservative vector `(rho, rho u.., rho e)`.
pub fn primitive_from_conservative(q: &[f64], phi: f64, gas: &GasParameters) -> Primitive {
    let d = q.len() - 2;
    let mut u = [0.0; 2];
    for i in 0..d {
        u[i] = q[1 + i] / q[0];
    }
    let ke: f64 = 0.5 * q[0] * u.iter().map(|v| v * v).sum::<f64>();
    Primitive {
        rho: q[0],
        u,
        p: (gas.gamma - 1.0) * (q[d + 1] - q[0] * phi - ke),
    }
}

/// Scalar quantities compared in error norms.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quantity {
    Density,
    Pressure,
    Temperature,
    /// Last velocity component.
    VerticalVelocity,
}

impl Quantity {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Density => "rho",
            Self::Pressure => "p",
            Self::Temperature => "T",
            Self::VerticalVelocity => "w",
        }
    }

    pub fn of(&self, s: &Primitive, dim: usize, gas: &GasParameters) -> f64 {
        match self {
            Self::Density => s.rho,
            Self::Pressure => s.p,
            Self::Temperature => s.p / (s.rho * gas.gas_constant),
            Self::VerticalVelocity => s.u[dim - 1],
        }
    }
}

impl std::str::FromStr for Quantity {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rho" => Ok(Self::Density),
            "p" => Ok(Self::Pressure),
            "T" => Ok(Self::Temperature),
            "w" => Ok(Self::VerticalVelocity),
            other => Err(Error::InvalidArgument(format!("unknown quantity '{other}'"))),
        }
    }
}

/// Normalized L2 error `sqrt(int (f - f_ref)^2 / |domain|)` by volume
/// quadrature, for each quantity.
pub fn l2_errors(
    disc: &Discretization,
    q: &[f64],
    gas: &GasParameters,
    measure: f64,
    quantities: &[Quantity],
    reference: impl Fn(&[f64; 2]) -> Result<Primitive>,
) -> Result<Vec<f64>> {
    let ops = disc.ops();
    let mesh = disc.mesh();
    let nqv = ops.n_vol();
    let dim = disc.dim();
    let mut sums = vec![0.0; quantities.len()];
    for e in 0..mesh.n_elements {
        for v in 0..nqv {
            let jw = mesh.jac_vol[e * nqv + v] * ops.vol_rule.weights[v];
            let s = disc.primitive_at_volume_point(q, e, v)?;
            let r = reference(&mesh.x_vol[e * nqv + v])?;
            for (sum, qty) in sums.iter_mut().zip(quantities) {
                let d = qty.of(&s, dim, gas) - qty.of(&r, dim, gas);
                *sum += jw * d * d;
            }
        }
    }
    Ok(sums.into_iter().map(|s| (s / measure).sqrt()).collect())
}

/// Normalized L2 norms `sqrt(int f_k^2 / |domain|)` of the components of
/// `f` on an unwarped box mesh, integrated with `points` Gauss points per
/// axis in every element.
pub fn l2_box_norms(
    extents: &[(f64, f64)],
    elements: &[usize],
    points: usize,
    n_values: usize,
    f: impl Fn(&[f64; 2]) -> Result<Vec<f64>>,
) -> Result<Vec<f64>> {
    let rule = gauss_rule(points)?;
    let dim = extents.len();
    let h: Vec<f64> = (0..dim).map(|a| (extents[a].1 - extents[a].0) / elements[a] as f64).collect();
    let jac: f64 = h.iter().map(|v| 0.5 * v).product();
    let ny = if dim == 2 { elements[1] } else { 1 };
    let my = if dim == 2 { points } else { 1 };
    let mut sums = vec![0.0; n_values];
    for ey in 0..ny {
        for ex in 0..elements[0] {
            for j in 0..my {
                for i in 0..points {
                    let mut x = [0.0; 2];
                    let mut w = jac * rule.weights[i];
                    x[0] = extents[0].0 + h[0] * (ex as f64 + 0.5 * (rule.nodes[i] + 1.0));
                    if dim == 2 {
                        x[1] = extents[1].0 + h[1] * (ey as f64 + 0.5 * (rule.nodes[j] + 1.0));
                        w *= rule.weights[j];
                    }
                    for (sum, v) in sums.iter_mut().zip(f(&x)?) {
                        *sum += w * v * v;
                    }
                }
            }
        }
    }
    let measure: f64 = extents.iter().map(|(a, b)| b - a).product();
    Ok(sums.into_iter().map(|s| (s / measure).sqrt()).collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Rate {
    Value(f64),
    /// One of the errors is zero.
    Saturated,
}

impl std::fmt::Display for Rate {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Value(r) => write!(f, "{r:.4}"),
            Self::Saturated => f.write_str("saturated"),
        }
    }
}

/// `log(e_i / e_{i+1}) / log(h_i / h_{i+1})` for consecutive levels.
pub fn convergence_rates(levels: &[(f64, f64)]) -> Result<Vec<Rate>> {
    for w in levels.windows(2) {
        if !(w[1].0 < w[0].0) || !(w[1].0 > 0.0) {
            return Err(Error::InvalidArgument("mesh sizes must be positive and strictly decreasing".into()));
        }
    }
    Ok(levels
        .windows(2)
        .map(|w| {
            let ((h0, e0), (h1, e1)) = (w[0], w[1]);
            if e0 == 0.0 || e1 == 0.0 {
                Rate::Saturated
            } else {
                Rate::Value((e0 / e1).ln() / (h0 / h1).ln())
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cases::{constant_state, density_wave, rising_bubble, Primitive};
    use crate::euler::{entropy, State};
    use crate::simulation::{DiscretizationOptions, Quadrature};
    use std::f64::consts::PI;

    #[test]
    fn rates_examples() {
        let levels: Vec<(f64, f64)> = [1.0, 0.5, 0.25].iter().map(|&h: &f64| (h, 3.0 * h.powi(4))).collect();
        for r in convergence_rates(&levels).unwrap() {
            match r {
                Rate::Value(v) => assert!((v - 4.0).abs() < 1e-12),
                Rate::Saturated => panic!(),
            }
        }
        let flat = convergence_rates(&[(1.0, 2.0), (0.5, 2.0)]).unwrap();
        assert_eq!(flat, vec![Rate::Value(0.0)]);
        assert_eq!(convergence_rates(&[(1.0, 1.0), (0.5, 0.0)]).unwrap(), vec![Rate::Saturated]);
        assert!(convergence_rates(&[(0.5, 1.0), (1.0, 1.0)]).is_err());
        assert!(convergence_rates(&[(1.0, 1.0)]).unwrap().is_empty());
    }

    #[test]
    fn unit_state_has_zero_entropy() {
        let case = constant_state(false);
        let d = Discretization::new(&case, &DiscretizationOptions::new(&case, 2, 2)).unwrap();
        let q = d.interpolate(&case, |_| Primitive { rho: 1.0, u: [0.3, 0.1], p: 1.0 }).unwrap();
        assert!(d.entropy(&q).unwrap().abs() < 1e-15);
    }

    #[test]
    fn entropy_of_constant_state_is_measure_times_density() {
        let case = constant_state(true);
        let s = (case.initial)(&[0.0, 0.0]);
        let st = State::<2>::from_primitive(s.rho, s.u, s.p, 0.0, &case.gas);
        let eta = entropy(&st, 0.0, &case.gas).unwrap();
        for warp in [false, true] {
            for quadrature in [Quadrature::Lgl, Quadrature::Gauss] {
                let opts = DiscretizationOptions { warp, quadrature, ..DiscretizationOptions::new(&case, 4, 3) };
                let d = Discretization::new(&case, &opts).unwrap();
                let q = d.initial_state(&case).unwrap();
                let total = d.entropy(&q).unwrap();
                assert!((total - eta).abs() < 1e-12 * eta.abs(), "{total} vs {eta}");
            }
        }
    }

    #[test]
    fn l2_examples() {
        let case = density_wave(2).unwrap();
        let d = Discretization::new(&case, &DiscretizationOptions::new(&case, 4, 3)).unwrap();
        let q = d.initial_state(&case).unwrap();
        let qty = [Quantity::Density, Quantity::Pressure];
        let gas = case.gas;
        let exact = |x: &[f64; 2]| Ok((case.initial)(x));
        let e = l2_errors(&d, &q, &gas, 1.0, &qty, exact).unwrap();
        // interpolation error only
        assert!(e[0] < 1e-4 && e[1] < 1e-12);
        let shifted = |x: &[f64; 2]| {
            let s = (case.initial)(x);
            Ok(Primitive { p: s.p + 0.25, ..s })
        };
        let e = l2_errors(&d, &q, &gas, 1.0, &qty, shifted).unwrap();
        assert!((e[1] - 0.25).abs() < 1e-12);
        // sin(2 pi x) has L2 norm 1/sqrt(2) on the unit square
        let zero = |x: &[f64; 2]| Ok(Primitive { rho: 0.0, u: [0.0; 2], p: 1.0 + (2.0 * PI * x[0]).sin() });
        let q1 = d.interpolate(&case, |_| Primitive { rho: 1.0, u: [0.0; 2], p: 1.0 }).unwrap();
        let e = l2_errors(&d, &q1, &gas, 1.0, &[Quantity::Pressure], zero).unwrap();
        assert!((e[0] - 0.5f64.sqrt()).abs() < 1e-6, "{}", e[0]);
    }

    #[test]
    fn box_norm_examples() {
        // sin(2 pi x) sin(pi y) on (0, 2) x (0, 1): mean square 1/4
        let f = |x: &[f64; 2]| Ok(vec![(2.0 * PI * x[0]).sin() * (PI * x[1]).sin(), 3.0]);
        let n = l2_box_norms(&[(0.0, 2.0), (0.0, 1.0)], &[3, 2], 8, 2, f).unwrap();
        assert!((n[0] - 0.5).abs() < 1e-9 && (n[1] - 3.0).abs() < 1e-14, "{n:?}");
        let n = l2_box_norms(&[(-1.0, 1.0)], &[4], 3, 1, |x| Ok(vec![x[0] * x[0]])).unwrap();
        assert!((n[0] - 0.2f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn row_and_csv() {
        let case = rising_bubble(true);
        let d = Discretization::new(&case, &DiscretizationOptions::new(&case, 3, 2)).unwrap();
        let q = d.initial_state(&case).unwrap();
        let row = DiagnosticsRow::compute(&d, &q, 0.0, None, 1.0).unwrap();
        assert_eq!(row.entropy_change, 0.0);
        assert!(row.min_rho > 0.9 && row.min_p > 7e4);
        let mut buf = Vec::new();
        row.write_csv(&mut buf).unwrap();
        let line = String::from_utf8(buf).unwrap();
        assert_eq!(line.trim().split(',').count(), DIAGNOSTICS_HEADER.split(',').count());
        let back: Vec<f64> = line.trim().split(',').map(|v| v.parse().unwrap()).collect();
        assert_eq!(back[1], row.entropy);
    }

    #[test]
    fn conservative_to_primitive_round_trip() {
        let gas = GasParameters::default();
        let s = State::<2>::from_primitive(1.3, [0.2, -0.7], 2.1, 0.4, &gas);
        let p = primitive_from_conservative(&s.to_vec(), 0.4, &gas);
        assert!((p.p - 2.1).abs() < 1e-14 && (p.u[1] + 0.7).abs() < 1e-15);
    }
}
