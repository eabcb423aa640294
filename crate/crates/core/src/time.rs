//! Low-storage Runge-Kutta time stepping with optional entropy relaxation.

use crate::error::{Error, Result};

/// An autonomous ODE `dq/dt = f(q)` with an entropy functional.
pub trait EntropySystem {
    fn rhs(&self, q: &[f64], dq: &mut [f64]) -> Result<()>;
    fn entropy(&self, q: &[f64]) -> Result<f64>;
    /// Directional derivative of the entropy at `q` along `v`.
    fn entropy_inner(&self, q: &[f64], v: &[f64]) -> Result<f64>;
}

impl<const D: usize> EntropySystem for crate::semidiscrete::SemiDiscretization<D> {
    fn rhs(&self, q: &[f64], dq: &mut [f64]) -> Result<()> {
        Self::rhs(self, q, dq)
    }
    fn entropy(&self, q: &[f64]) -> Result<f64> {
        Self::entropy(self, q)
    }
    fn entropy_inner(&self, q: &[f64], v: &[f64]) -> Result<f64> {
        Self::entropy_inner(self, q, v)
    }
}

/// Carpenter-Kennedy (5,4) 2N-storage coefficients, solution 3.
pub const LSRK54_A: [f64; 5] = [
    0.0,
    -567301805773.0 / 1357537059087.0,
    -2404267990393.0 / 2016746695238.0,
    -3550918686646.0 / 2091501179385.0,
    -1275806237668.0 / 842570457699.0,
];
pub const LSRK54_B: [f64; 5] = [
    1432997174477.0 / 9575080441755.0,
    5161836677717.0 / 13612068292357.0,
    1720146321549.0 / 2090206949498.0,
    3134564353537.0 / 4481467310338.0,
    2277821191437.0 / 14882151754819.0,
];
pub const LSRK54_C: [f64; 5] = [
    0.0,
    1432997174477.0 / 9575080441755.0,
    2526269341429.0 / 6820363962896.0,
    2006345519317.0 / 3224310063776.0,
    2802321613138.0 / 2924317926251.0,
];

/// Butcher weights equivalent to the 2N-storage update.
pub fn lsrk54_weights() -> [f64; 5] {
    let mut b = [0.0; 5];
    for (j, bj) in b.iter_mut().enumerate() {
        let mut prod = 1.0;
        for i in j..5 {
            if i > j {
                prod *= LSRK54_A[i];
            }
            *bj += LSRK54_B[i] * prod;
        }
    }
    b
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    Lsrk54,
    Lsrk54Relaxation,
}

impl std::str::FromStr for Scheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lsrk54" => Ok(Self::Lsrk54),
            "lsrk54-relaxation" | "lsrk54+relaxation" => Ok(Self::Lsrk54Relaxation),
            other => Err(Error::InvalidArgument(format!(
                "unknown time scheme '{other}', expected 'lsrk54' or 'lsrk54-relaxation'"
            ))),
        }
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Lsrk54 => "lsrk54",
            Self::Lsrk54Relaxation => "lsrk54-relaxation",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeStepperConfig {
    pub scheme: Scheme,
    pub cfl: f64,
    pub t_end: f64,
    pub relaxation_tol: f64,
    pub relaxation_max_iter: usize,
    /// Re-estimate the wave speed every step instead of freezing the
    /// initial value.
    pub adaptive_dt: bool,
}

impl Default for TimeStepperConfig {
    fn default() -> Self {
        Self {
            scheme: Scheme::Lsrk54,
            cfl: 0.5,
            t_end: 1.0,
            relaxation_tol: 1e-14,
            relaxation_max_iter: 100,
            adaptive_dt: false,
        }
    }
}

impl TimeStepperConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.cfl > 0.0 && self.cfl.is_finite()) {
            return Err(Error::Config(format!("cfl must be positive, got {}", self.cfl)));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(Error::Config(format!("t_end must be nonnegative, got {}", self.t_end)));
        }
        if !(self.relaxation_tol > 0.0) || self.relaxation_max_iter == 0 {
            return Err(Error::Config("relaxation tolerance and iteration limit must be positive".into()));
        }
        Ok(())
    }
}

/// Scratch buffers for one LSRK54 step.
pub struct Lsrk54 {
    du: Vec<f64>,
    k: Vec<f64>,
    start: Vec<f64>,
}

/// Result of one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepInfo {
    /// Time actually advanced, `gamma * dt`.
    pub dt_taken: f64,
    pub gamma: f64,
    /// Stage estimate of the entropy change over the step (unrelaxed).
    pub entropy_change_estimate: f64,
}

impl Lsrk54 {
    pub fn new(n: usize) -> Self {
        Self {
            du: vec![0.0; n],
            k: vec![0.0; n],
            start: vec![0.0; n],
        }
    }

    /// One plain 2N-storage step in place.
    pub fn step<S: EntropySystem + ?Sized>(&mut self, sys: &S, q: &mut [f64], dt: f64) -> Result<StepInfo> {
        self.stages(sys, q, dt, false).map(|_| StepInfo {
            dt_taken: dt,
            gamma: 1.0,
            entropy_change_estimate: f64::NAN,
        })
    }

    /// Returns the stage entropy estimate `dt sum_i b_i <beta(q_i), f(q_i)>`
    /// when asked for.
    fn stages<S: EntropySystem + ?Sized>(
        &mut self,
        sys: &S,
        q: &mut [f64],
        dt: f64,
        estimate: bool,
    ) -> Result<f64> {
        if !(dt > 0.0) {
            return Err(Error::InvalidArgument(format!("time step must be positive, got {dt}")));
        }
        if q.len() != self.du.len() {
            return Err(Error::InvalidArgument("state length does not match stepper".into()));
        }
        let weights = lsrk54_weights();
        let mut est = 0.0;
        self.du.fill(0.0);
        for s in 0..5 {
            sys.rhs(q, &mut self.k)?;
            if estimate {
                est += weights[s] * sys.entropy_inner(q, &self.k)?;
            }
            let (a, b) = (LSRK54_A[s], LSRK54_B[s]);
            for ((du, k), qi) in self.du.iter_mut().zip(&self.k).zip(q.iter_mut()) {
                *du = a * *du + dt * k;
                *qi += b * *du;
            }
        }
        Ok(dt * est)
    }

    /// LSRK54 step followed by entropy relaxation. On success `q` holds
    /// `q_old + gamma * (q_rk - q_old)`, valid at time `t + gamma * dt`.
    pub fn relaxation_step<S: EntropySystem + ?Sized>(
        &mut self,
        sys: &S,
        q: &mut [f64],
        dt: f64,
        tol: f64,
        max_iter: usize,
    ) -> Result<StepInfo> {
        self.start.copy_from_slice(q);
        let s0 = sys.entropy(q)?;
        let est = self.stages(sys, q, dt, true)?;
        // reuse du as the update direction
        for ((d, qn), q0) in self.du.iter_mut().zip(q.iter()).zip(&self.start) {
            *d = qn - q0;
        }
        let gamma = solve_relaxation(sys, &self.start, &self.du, s0, est, tol, max_iter, &mut self.k)?;
        for ((qi, q0), d) in q.iter_mut().zip(&self.start).zip(&self.du) {
            *qi = q0 + gamma * d;
        }
        Ok(StepInfo {
            dt_taken: gamma * dt,
            gamma,
            entropy_change_estimate: est,
        })
    }
}

/// Root of `r(g) = S(q + g d) - S(q) - g est` in `[0.5, 1.5]` by Newton
/// iteration kept inside a shrinking bracket.
#[allow(clippy::too_many_arguments)]
fn solve_relaxation<S: EntropySystem + ?Sized>(
    sys: &S,
    q: &[f64],
    d: &[f64],
    s0: f64,
    est: f64,
    tol: f64,
    max_iter: usize,
    work: &mut Vec<f64>,
) -> Result<f64> {
    let scale = s0.abs().max(1.0);
    let eval = |g: f64, deriv: bool, work: &mut Vec<f64>| -> Result<(f64, f64)> {
        work.clear();
        work.extend(q.iter().zip(d).map(|(a, b)| a + g * b));
        let r = sys.entropy(work)? - s0 - g * est;
        let dr = if deriv { sys.entropy_inner(work, d)? - est } else { f64::NAN };
        Ok((r, dr))
    };
    let (r1, dr1) = eval(1.0, true, work)?;
    if r1.abs() <= tol * scale {
        return Ok(1.0);
    }
    let (mut lo, mut hi) = (0.5, 1.5);
    let (r_lo, _) = eval(lo, false, work)?;
    let (r_hi, _) = eval(hi, false, work)?;
    if r_lo.abs() <= tol * scale {
        return Ok(lo);
    }
    if r_hi.abs() <= tol * scale {
        return Ok(hi);
    }
    if r_lo.signum() == r_hi.signum() {
        return Err(Error::Relaxation(format!(
            "root not bracketed in [0.5, 1.5]: r(0.5) = {r_lo:e}, r(1.5) = {r_hi:e}"
        )));
    }
    let lo_negative = r_lo < 0.0;
    let (mut g, mut r, mut dr) = (1.0, r1, dr1);
    for _ in 0..max_iter {
        if (r < 0.0) == lo_negative {
            lo = g;
        } else {
            hi = g;
        }
        let newton = g - r / dr;
        let next = if dr.is_finite() && dr != 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        let step = (next - g).abs();
        g = next;
        (r, dr) = eval(g, true, work)?;
        if r.abs() <= tol * scale || step <= 4.0 * f64::EPSILON * g.abs() {
            return Ok(g);
        }
    }
    Err(Error::Relaxation(format!(
        "no convergence in {max_iter} iterations, residual {r:e}"
    )))
}

/// Per-step report passed to observers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepReport {
    pub step: usize,
    pub t: f64,
    pub info: StepInfo,
}

/// Advance `q` from `t0` to the configured end time. `dt_of` supplies the
/// nominal step; the last step is shortened to land on `t_end` (relaxation
/// may still move the final time by `(gamma - 1) dt`). The observer may stop
/// the run early by returning `false`.
pub fn integrate<S: EntropySystem + ?Sized>(
    sys: &S,
    q: &mut [f64],
    t0: f64,
    config: &TimeStepperConfig,
    mut dt_of: impl FnMut(&[f64]) -> Result<f64>,
    mut observer: impl FnMut(&StepReport, &[f64]) -> Result<bool>,
) -> Result<f64> {
    config.validate()?;
    let mut stepper = Lsrk54::new(q.len());
    let mut t = t0;
    let mut step = 0;
    let end_slack = 1e-12 * config.t_end.abs().max(1.0);
    while t < config.t_end - end_slack {
        let dt = dt_of(q)?.min(config.t_end - t);
        let info = match config.scheme {
            Scheme::Lsrk54 => stepper.step(sys, q, dt)?,
            Scheme::Lsrk54Relaxation => {
                stepper.relaxation_step(sys, q, dt, config.relaxation_tol, config.relaxation_max_iter)?
            }
        };
        t += info.dt_taken;
        step += 1;
        if !observer(&StepReport { step, t, info }, q)? {
            break;
        }
    }
    Ok(t)
}
