//! Compressible Euler equations with a geopotential: state algebra,
//! thermodynamics, entropy pair, the entropy-conservative two-point flux and
//! matrix dissipation.
//!
//! States are stored with `D` momentum components, so the entropy variables
//! have `D + 2` entries ordered (mass, momentum, energy).

use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use crate::error::{Error, Result};

/// Below this value of `((a - b) / (a + b))^2` the log mean uses its series.
const LOG_MEAN_SERIES_THRESHOLD: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GasParameters {
    pub gamma: f64,
    /// Specific gas constant, J/(kg K).
    pub gas_constant: f64,
}

impl Default for GasParameters {
    fn default() -> Self {
        Self {
            gamma: 1.4,
            gas_constant: 287.0,
        }
    }
}

impl GasParameters {
    pub fn new(gamma: f64, gas_constant: f64) -> Result<Self> {
        if !(gamma > 1.0) {
            return Err(Error::InvalidArgument(format!("gamma must exceed 1, got {gamma}")));
        }
        if !(gas_constant > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "gas constant must be positive, got {gas_constant}"
            )));
        }
        Ok(Self { gamma, gas_constant })
    }

    pub fn cp(&self) -> f64 {
        self.gas_constant * self.gamma / (self.gamma - 1.0)
    }

    pub fn cv(&self) -> f64 {
        self.gas_constant / (self.gamma - 1.0)
    }
}

/// Conservative state `(rho, rho u, rho e)`; also used for flux vectors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct State<const D: usize> {
    pub rho: f64,
    pub mom: [f64; D],
    pub rhoe: f64,
}

impl<const D: usize> State<D> {
    /// Number of conservative components.
    pub const NC: usize = D + 2;

    pub fn new(rho: f64, mom: [f64; D], rhoe: f64) -> Self {
        Self { rho, mom, rhoe }
    }

    pub fn zero() -> Self {
        Self::new(0.0, [0.0; D], 0.0)
    }

    /// State with the given density, velocity and pressure at geopotential `phi`.
    pub fn from_primitive(rho: f64, u: [f64; D], p: f64, phi: f64, gas: &GasParameters) -> Self {
        let ke: f64 = 0.5 * rho * u.iter().map(|v| v * v).sum::<f64>();
        Self::new(rho, u.map(|v| rho * v), p / (gas.gamma - 1.0) + ke + rho * phi)
    }

    pub fn velocity(&self) -> [f64; D] {
        self.mom.map(|m| m / self.rho)
    }

    pub fn get(&self, c: usize) -> f64 {
        match c {
            0 => self.rho,
            c if c <= D => self.mom[c - 1],
            c if c == D + 1 => self.rhoe,
            _ => panic!("component {c} out of range"),
        }
    }

    pub fn set(&mut self, c: usize, v: f64) {
        match c {
            0 => self.rho = v,
            c if c <= D => self.mom[c - 1] = v,
            c if c == D + 1 => self.rhoe = v,
            _ => panic!("component {c} out of range"),
        }
    }

    pub fn from_fn(mut f: impl FnMut(usize) -> f64) -> Self {
        let mut s = Self::zero();
        for c in 0..Self::NC {
            s.set(c, f(c));
        }
        s
    }

    pub fn to_vec(&self) -> Vec<f64> {
        (0..Self::NC).map(|c| self.get(c)).collect()
    }

    pub fn dot(&self, other: &Self) -> f64 {
        (0..Self::NC).map(|c| self.get(c) * other.get(c)).sum()
    }

    pub fn max_abs(&self) -> f64 {
        (0..Self::NC).map(|c| self.get(c).abs()).fold(0.0, f64::max)
    }
}

impl<const D: usize> Add for State<D> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::from_fn(|c| self.get(c) + o.get(c))
    }
}

impl<const D: usize> Sub for State<D> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::from_fn(|c| self.get(c) - o.get(c))
    }
}

impl<const D: usize> Neg for State<D> {
    type Output = Self;
    fn neg(self) -> Self {
        Self::from_fn(|c| -self.get(c))
    }
}

impl<const D: usize> Mul<f64> for State<D> {
    type Output = Self;
    fn mul(self, s: f64) -> Self {
        Self::from_fn(|c| self.get(c) * s)
    }
}

impl<const D: usize> AddAssign for State<D> {
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

impl<const D: usize> SubAssign for State<D> {
    fn sub_assign(&mut self, o: Self) {
        *self = *self - o;
    }
}

/// Entropy variables, same layout as [`State`]: `(beta_1, beta_mom, beta_last)`.
pub type EntropyVars<const D: usize> = State<D>;

fn inadmissible<const D: usize>(q: &State<D>, pressure: f64) -> Error {
    Error::Inadmissible {
        state: q.to_vec(),
        pressure,
        location: None,
    }
}

pub fn pressure<const D: usize>(q: &State<D>, phi: f64, gas: &GasParameters) -> Result<f64> {
    if !(q.rho > 0.0) {
        return Err(inadmissible(q, f64::NAN));
    }
    let m2: f64 = q.mom.iter().map(|m| m * m).sum();
    let p = (gas.gamma - 1.0) * (q.rhoe - q.rho * phi - 0.5 * m2 / q.rho);
    if !(p > 0.0) {
        return Err(inadmissible(q, p));
    }
    Ok(p)
}

/// Mathematical entropy `-rho s / (gamma - 1)` with `s = ln(p / rho^gamma)`.
pub fn entropy<const D: usize>(q: &State<D>, phi: f64, gas: &GasParameters) -> Result<f64> {
    let p = pressure(q, phi, gas)?;
    let s = p.ln() - gas.gamma * q.rho.ln();
    Ok(-q.rho * s / (gas.gamma - 1.0))
}

/// Entropy flux `zeta_k = u_k eta` in direction `k`.
pub fn entropy_flux<const D: usize>(
    q: &State<D>,
    phi: f64,
    k: usize,
    gas: &GasParameters,
) -> Result<f64> {
    Ok(q.mom[k] / q.rho * entropy(q, phi, gas)?)
}

pub fn entropy_variables<const D: usize>(
    q: &State<D>,
    phi: f64,
    gas: &GasParameters,
) -> Result<EntropyVars<D>> {
    Ok(NodeAux::new(q, phi, gas)?.entropy_variables(gas))
}

pub fn state_from_entropy_variables<const D: usize>(
    beta: &EntropyVars<D>,
    phi: f64,
    gas: &GasParameters,
) -> Result<State<D>> {
    if !(beta.rhoe < 0.0) {
        return Err(Error::InvalidEntropyState {
            beta_last: beta.rhoe,
        });
    }
    let g = gas.gamma;
    let b = -0.5 * beta.rhoe;
    let u = beta.mom.map(|v| v / (2.0 * b));
    let u2: f64 = u.iter().map(|v| v * v).sum();
    let s = (g - 1.0) * (-beta.rho + (2.0 * phi - u2) * b) + g;
    let rho = (-(s + (2.0 * b).ln()) / (g - 1.0)).exp();
    let e = 1.0 / ((g - 1.0) * 2.0 * b) + 0.5 * u2 + phi;
    let q = State::new(rho, u.map(|v| rho * v), rho * e);
    if !(rho > 0.0 && rho.is_finite() && q.rhoe.is_finite()) {
        return Err(inadmissible(&q, f64::NAN));
    }
    Ok(q)
}

/// Logarithmic mean `(a - b) / (ln a - ln b)`.
pub fn log_mean(a: f64, b: f64) -> Result<f64> {
    if !(a > 0.0 && b > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "log mean needs positive arguments, got {a} and {b}"
        )));
    }
    Ok(log_mean_with_logs(a, b, a.ln(), b.ln()))
}

/// Logarithmic mean reusing precomputed logarithms of positive `a` and `b`.
#[inline]
pub fn log_mean_with_logs(a: f64, b: f64, ln_a: f64, ln_b: f64) -> f64 {
    let f = (a - b) / (a + b);
    let u = f * f;
    if u < LOG_MEAN_SERIES_THRESHOLD {
        let series = 1.0 + u * (1.0 / 3.0 + u * (1.0 / 5.0 + u / 7.0));
        0.5 * (a + b) / series
    } else {
        (a - b) / (ln_a - ln_b)
    }
}

/// Per-node quantities reused by every two-point flux touching the node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeAux<const D: usize> {
    pub rho: f64,
    pub u: [f64; D],
    pub p: f64,
    /// Inverse temperature `rho / 2p`.
    pub b: f64,
    pub ln_rho: f64,
    pub ln_b: f64,
    pub phi: f64,
    /// `|u|^2`
    pub u2: f64,
}

impl<const D: usize> NodeAux<D> {
    pub fn new(q: &State<D>, phi: f64, gas: &GasParameters) -> Result<Self> {
        let p = pressure(q, phi, gas)?;
        let u = q.velocity();
        let b = q.rho / (2.0 * p);
        Ok(Self {
            rho: q.rho,
            u,
            p,
            b,
            ln_rho: q.rho.ln(),
            ln_b: b.ln(),
            phi,
            u2: u.iter().map(|v| v * v).sum(),
        })
    }

    pub fn entropy_variables(&self, gas: &GasParameters) -> EntropyVars<D> {
        let g = gas.gamma;
        let s = self.p.ln() - g * self.ln_rho;
        State::new(
            (g - s) / (g - 1.0) - (self.u2 - 2.0 * self.phi) * self.b,
            self.u.map(|v| 2.0 * self.b * v),
            -2.0 * self.b,
        )
    }
}

fn dot<const D: usize>(a: &[f64; D], b: &[f64; D]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Physical flux `h_k` in the direction vector `a` (not necessarily unit).
pub fn physical_flux_dir<const D: usize>(l: &NodeAux<D>, a: &[f64; D], gas: &GasParameters) -> State<D> {
    let un = dot(&l.u, a);
    let mut mom = [0.0; D];
    for i in 0..D {
        mom[i] = l.rho * un * l.u[i] + a[i] * l.p;
    }
    let e = l.p / ((gas.gamma - 1.0) * l.rho) + 0.5 * l.u2 + l.phi;
    State::new(l.rho * un, mom, (l.rho * e + l.p) * un)
}

/// Physical flux in coordinate direction `k`. The geopotential entry of the
/// balance-law flux is `phi` itself and is not part of the returned vector.
pub fn physical_flux<const D: usize>(
    q: &State<D>,
    phi: f64,
    k: usize,
    gas: &GasParameters,
) -> Result<State<D>> {
    let aux = NodeAux::new(q, phi, gas)?;
    Ok(physical_flux_dir(&aux, &unit::<D>(k), gas))
}

fn unit<const D: usize>(k: usize) -> [f64; D] {
    let mut a = [0.0; D];
    a[k] = 1.0;
    a
}

/// `rho_hat`, the coefficient of the geopotential jump in the momentum flux.
/// Twice the nonconservative matrix entry reduces to `rho` for equal states.
pub fn rho_hat<const D: usize>(l: &NodeAux<D>, r: &NodeAux<D>) -> f64 {
    let b_avg = 0.5 * (l.b + r.b);
    b_avg * log_mean_with_logs(l.rho, r.rho, l.ln_rho, r.ln_rho) / l.b
}

/// First bracket of the entropy-conservative fluctuation flux, contracted
/// with direction vector `a`. The state-`l`-only bracket is omitted; callers
/// that need the full fluctuation subtract [`physical_flux_dir`] of `l`.
#[inline]
pub fn ec_flux_dir<const D: usize>(
    l: &NodeAux<D>,
    r: &NodeAux<D>,
    a: &[f64; D],
    gas: &GasParameters,
) -> State<D> {
    let rho_log = log_mean_with_logs(l.rho, r.rho, l.ln_rho, r.ln_rho);
    let b_log = log_mean_with_logs(l.b, r.b, l.ln_b, r.ln_b);
    let rho_avg = 0.5 * (l.rho + r.rho);
    let b_avg = 0.5 * (l.b + r.b);
    let mut ubar = [0.0; D];
    for i in 0..D {
        ubar[i] = 0.5 * (l.u[i] + r.u[i]);
    }
    let ubar2 = dot(&ubar, &ubar);
    let p_star = rho_avg / (2.0 * b_avg);
    let rho_hat = b_avg * rho_log / l.b;
    let un = dot(&ubar, a);
    let mass = rho_log * un;
    let pressure_term = p_star + 0.5 * rho_hat * (r.phi - l.phi);
    let mut mom = [0.0; D];
    for i in 0..D {
        mom[i] = mass * ubar[i] + a[i] * pressure_term;
    }
    let e_star = 1.0 / (2.0 * (gas.gamma - 1.0) * b_log) + 0.5 * (l.phi + r.phi) + ubar2
        - 0.25 * (l.u2 + r.u2);
    State::new(mass, mom, e_star * mass + un * p_star)
}

/// [`ec_flux_dir`] in coordinate direction `k` from conservative states.
pub fn ec_flux<const D: usize>(
    ql: &State<D>,
    phil: f64,
    qr: &State<D>,
    phir: f64,
    k: usize,
    gas: &GasParameters,
) -> Result<State<D>> {
    let l = NodeAux::new(ql, phil, gas)?;
    let r = NodeAux::new(qr, phir, gas)?;
    Ok(ec_flux_dir(&l, &r, &unit::<D>(k), gas))
}

/// Full fluctuation flux: [`ec_flux`] minus the physical flux of the left state.
pub fn fluctuation_flux<const D: usize>(
    ql: &State<D>,
    phil: f64,
    qr: &State<D>,
    phir: f64,
    k: usize,
    gas: &GasParameters,
) -> Result<State<D>> {
    Ok(ec_flux(ql, phil, qr, phir, k, gas)? - physical_flux(ql, phil, k, gas)?)
}

/// `H_n [[beta]]` with `[[beta]] = beta(r) - beta(l)`, for unit normal `n`.
pub fn matrix_dissipation<const D: usize>(
    l: &NodeAux<D>,
    r: &NodeAux<D>,
    n: &[f64; D],
    gas: &GasParameters,
) -> State<D> {
    let g = gas.gamma;
    let jb = r.entropy_variables(gas) - l.entropy_variables(gas);
    let rho_log = log_mean_with_logs(l.rho, r.rho, l.ln_rho, r.ln_rho);
    let b_log = log_mean_with_logs(l.b, r.b, l.ln_b, r.ln_b);
    let rho_avg = 0.5 * (l.rho + r.rho);
    let b_avg = 0.5 * (l.b + r.b);
    let phi_avg = 0.5 * (l.phi + r.phi);
    let mut ubar = [0.0; D];
    for i in 0..D {
        ubar[i] = 0.5 * (l.u[i] + r.u[i]);
    }
    let un = dot(&ubar, n);
    let u2bar = 2.0 * dot(&ubar, &ubar) - 0.5 * (l.u2 + r.u2);
    let p_star = rho_avg / (2.0 * b_avg);
    let c = (p_star / rho_log).sqrt();
    let h = g / (2.0 * b_log * (g - 1.0)) + 0.5 * u2bar + phi_avg;
    let e2 = 0.5 * u2bar + phi_avg;

    let ub_jm = dot(&ubar, &jb.mom);
    let n_jm = dot(n, &jb.mom);
    let acoustic = rho_log / (2.0 * g);
    let w1 = (un - c).abs() * acoustic * (jb.rho + ub_jm - c * n_jm + (h - c * un) * jb.rhoe);
    let w2 = un.abs() * (g - 1.0) * rho_log / g * (jb.rho + ub_jm + e2 * jb.rhoe);
    let w3 = (un + c).abs() * acoustic * (jb.rho + ub_jm + c * n_jm + (h + c * un) * jb.rhoe);

    // tangential projections T v = v - n (n . v)
    let mut t_jm = jb.mom;
    let mut t_u = ubar;
    for i in 0..D {
        t_jm[i] -= n[i] * n_jm;
        t_u[i] -= n[i] * un;
    }
    let shear = un.abs() * p_star;
    let mut mom = [0.0; D];
    for i in 0..D {
        mom[i] = w1 * (ubar[i] - c * n[i])
            + w2 * ubar[i]
            + w3 * (ubar[i] + c * n[i])
            + shear * (t_jm[i] + t_u[i] * jb.rhoe);
    }
    let energy = w1 * (h - c * un)
        + w2 * e2
        + w3 * (h + c * un)
        + shear * (dot(&t_u, &jb.mom) + dot(&t_u, &t_u) * jb.rhoe);
    State::new(w1 + w2 + w3, mom, energy)
}

/// Entropy-stable normal flux: [`ec_flux_dir`] along `n` minus half the
/// matrix dissipation.
pub fn es_flux_dir<const D: usize>(
    l: &NodeAux<D>,
    r: &NodeAux<D>,
    n: &[f64; D],
    gas: &GasParameters,
) -> State<D> {
    ec_flux_dir(l, r, n, gas) - matrix_dissipation(l, r, n, gas) * 0.5
}

/// [`es_flux_dir`] from conservative states.
pub fn es_surface_flux<const D: usize>(
    ql: &State<D>,
    phil: f64,
    qr: &State<D>,
    phir: f64,
    n: &[f64; D],
    gas: &GasParameters,
) -> Result<State<D>> {
    let l = NodeAux::new(ql, phil, gas)?;
    let r = NodeAux::new(qr, phir, gas)?;
    Ok(es_flux_dir(&l, &r, n, gas))
}

/// `|u . n| + sqrt(gamma p / rho)`.
pub fn max_wave_speed<const D: usize>(
    q: &State<D>,
    phi: f64,
    n: &[f64; D],
    gas: &GasParameters,
) -> Result<f64> {
    let p = pressure(q, phi, gas)?;
    Ok(dot(&q.velocity(), n).abs() + (gas.gamma * p / q.rho).sqrt())
}

/// Planetary rotation vector as a function of position.
#[derive(Clone, Default)]
pub struct RotationField {
    omega: Option<std::sync::Arc<dyn Fn(&[f64; 3]) -> [f64; 3] + Send + Sync>>,
}

impl std::fmt::Debug for RotationField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RotationField")
            .field("active", &self.omega.is_some())
            .finish()
    }
}

impl RotationField {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn constant(omega: [f64; 3]) -> Self {
        Self::from_fn(move |_| omega)
    }

    pub fn from_fn(f: impl Fn(&[f64; 3]) -> [f64; 3] + Send + Sync + 'static) -> Self {
        Self {
            omega: Some(std::sync::Arc::new(f)),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.omega.is_none()
    }

    pub fn at(&self, x: &[f64; 3]) -> [f64; 3] {
        self.omega.as_ref().map_or([0.0; 3], |f| f(x))
    }
}

fn levi_civita(i: usize, j: usize, k: usize) -> f64 {
    match (i, j, k) {
        (0, 1, 2) | (2, 0, 1) | (1, 2, 0) => 1.0,
        (2, 1, 0) | (0, 2, 1) | (1, 0, 2) => -1.0,
        _ => 0.0,
    }
}

/// Coriolis source `-2 sum_{j,k <= d} eps_ijk omega_j u_k` in the momentum rows.
pub fn coriolis_source<const D: usize>(q: &State<D>, omega: &[f64; 3]) -> State<D> {
    let u = q.velocity();
    let mut mom = [0.0; D];
    for (i, m) in mom.iter_mut().enumerate() {
        for j in 0..D {
            for k in 0..D {
                *m -= 2.0 * levi_civita(i, j, k) * omega[j] * u[k];
            }
        }
    }
    State::new(0.0, mom, 0.0)
}
