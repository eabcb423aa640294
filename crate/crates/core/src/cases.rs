//! Test-case initializers.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::euler::{GasParameters, RotationField};
use crate::mesh::BoundaryKind;

/// Primitive variables; `u[1]` is ignored in 1D.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Primitive {
    pub rho: f64,
    pub u: [f64; 2],
    pub p: f64,
}

pub type ScalarField = Arc<dyn Fn(&[f64; 2]) -> f64 + Send + Sync>;
pub type PrimitiveField = Arc<dyn Fn(&[f64; 2]) -> Primitive + Send + Sync>;
pub type ExactSolution = Arc<dyn Fn(&[f64; 2], f64) -> Primitive + Send + Sync>;
pub type Warp = Arc<dyn Fn([f64; 2]) -> [f64; 2] + Send + Sync>;

pub const SURFACE_PRESSURE: f64 = 1e5;
pub const GRAVITY: f64 = 9.81;

#[derive(Clone)]
pub struct CaseSetup {
    pub name: String,
    pub dim: usize,
    pub extents: Vec<(f64, f64)>,
    pub boundary: Vec<BoundaryKind>,
    /// Element counts are `k * aspect[d]` for a requested resolution `k`.
    pub aspect: Vec<usize>,
    pub default_resolution: usize,
    pub gas: GasParameters,
    pub geopotential: ScalarField,
    pub rotation: RotationField,
    pub initial: PrimitiveField,
    /// Reference state for perturbation output; defaults to the initial data.
    pub background: Option<PrimitiveField>,
    pub warp: Option<Warp>,
    pub exact: Option<ExactSolution>,
    pub t_end: f64,
    pub cfl: f64,
}

impl std::fmt::Debug for CaseSetup {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CaseSetup")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("extents", &self.extents)
            .field("boundary", &self.boundary)
            .field("warp", &self.warp.is_some())
            .field("exact", &self.exact.is_some())
            .finish()
    }
}

impl CaseSetup {
    pub fn elements(&self, resolution: usize) -> Vec<usize> {
        self.aspect.iter().map(|a| a * resolution).collect()
    }

    /// Domain measure `L` or `L H`.
    pub fn measure(&self) -> f64 {
        self.extents.iter().map(|(a, b)| b - a).product()
    }

    pub fn without_warp(mut self) -> Self {
        self.warp = None;
        self
    }
}

pub const CASE_NAMES: &[&str] = &[
    "sod",
    "bubble",
    "gravity-wave",
    "isothermal-1d",
    "isothermal-2d",
    "density-wave-1d",
    "density-wave-2d",
    "periodic-perturbation",
    "constant",
];

/// Look up a case by name with its default options.
pub fn case_by_name(name: &str) -> Result<CaseSetup> {
    match name {
        "sod" => Ok(sod_gravity()),
        "bubble" => Ok(rising_bubble(true)),
        "gravity-wave" => Ok(gravity_wave(&GravityWaveParams::default(), false)),
        "isothermal-1d" => isothermal_balance(1, &IsothermalParams::default()),
        "isothermal-2d" => isothermal_balance(2, &IsothermalParams::default()),
        "density-wave-1d" => density_wave(1),
        "density-wave-2d" => density_wave(2),
        "periodic-perturbation" => Ok(periodic_perturbation()),
        "constant" => Ok(constant_state(true)),
        other => Err(Error::InvalidArgument(format!(
            "unknown case '{other}', expected one of {}",
            CASE_NAMES.join(", ")
        ))),
    }
}

/// `theta = T (p0 / p)^(R / cp)`.
pub fn potential_temperature(rho: f64, p: f64, gas: &GasParameters) -> f64 {
    let t = p / (rho * gas.gas_constant);
    t * (SURFACE_PRESSURE / p).powf(gas.gas_constant / gas.cp())
}

/// Sod shock tube on `[0, 1]` with `phi = x` and walls.
pub fn sod_gravity() -> CaseSetup {
    CaseSetup {
        name: "sod".into(),
        dim: 1,
        extents: vec![(0.0, 1.0)],
        boundary: vec![BoundaryKind::Wall],
        aspect: vec![1],
        default_resolution: 32,
        gas: GasParameters::default(),
        geopotential: Arc::new(|x| x[0]),
        rotation: RotationField::none(),
        initial: Arc::new(|x| {
            if x[0] < 0.5 {
                Primitive { rho: 1.0, u: [0.0; 2], p: 1.0 }
            } else {
                Primitive { rho: 0.125, u: [0.0; 2], p: 0.1 }
            }
        }),
        background: None,
        warp: None,
        exact: None,
        t_end: 0.2,
        cfl: 0.2,
    }
}

/// Neutrally stratified hydrostatic state with constant `theta0`.
pub fn neutral_base_state(z: f64, theta0: f64, gas: &GasParameters) -> Primitive {
    let exner = 1.0 - GRAVITY * z / (gas.cp() * theta0);
    let p = SURFACE_PRESSURE * exner.powf(gas.cp() / gas.gas_constant);
    let t = theta0 * exner;
    Primitive { rho: p / (gas.gas_constant * t), u: [0.0; 2], p }
}

/// Coordinate warp of the rising bubble domain `(-L/2, L/2) x (0, H)`.
pub fn bubble_warp(l: f64, h: f64) -> Warp {
    Arc::new(move |x| {
        let s = PI * (x[0] + 0.5 * l) / l;
        [
            x[0] + l / 5.0 * s.sin() * (2.0 * PI * x[1] / h).sin(),
            x[1] - h / 5.0 * (2.0 * s).sin() * (PI * x[1] / h).sin(),
        ]
    })
}

/// Coordinate warp of the gravity-wave channel `(0, L) x (0, H)`.
pub fn channel_warp(l: f64, h: f64) -> Warp {
    Arc::new(move |x| {
        [
            x[0] + l / 20.0 * (PI * x[0] / l).sin() * (2.0 * PI * x[1] / h).sin(),
            x[1] - h / 20.0 * (2.0 * PI * x[0] / l).sin() * (PI * x[1] / h).sin(),
        ]
    })
}

pub const BUBBLE_THETA0: f64 = 300.0;
pub const BUBBLE_AMPLITUDE: f64 = 0.5;
pub const BUBBLE_RADIUS: f64 = 250.0;
pub const BUBBLE_CENTER: [f64; 2] = [0.0, 260.0];

/// Rising thermal bubble in a 2 km box, periodic in x with rigid lids.
pub fn rising_bubble(warped: bool) -> CaseSetup {
    let (l, h) = (2000.0, 2000.0);
    let gas = GasParameters::default();
    let initial = move |x: &[f64; 2]| {
        let base = neutral_base_state(x[1], BUBBLE_THETA0, &gas);
        let r = (x[0] - BUBBLE_CENTER[0]).hypot(x[1] - BUBBLE_CENTER[1]);
        if r > BUBBLE_RADIUS {
            return base;
        }
        // same pressure, warmer parcel
        let exner = (base.p / SURFACE_PRESSURE).powf(gas.gas_constant / gas.cp());
        let t = (BUBBLE_THETA0 + BUBBLE_AMPLITUDE) * exner;
        Primitive { rho: base.p / (gas.gas_constant * t), ..base }
    };
    CaseSetup {
        name: "bubble".into(),
        dim: 2,
        extents: vec![(-0.5 * l, 0.5 * l), (0.0, h)],
        boundary: vec![BoundaryKind::Periodic, BoundaryKind::Wall],
        aspect: vec![1, 1],
        default_resolution: 10,
        gas,
        geopotential: Arc::new(|x| GRAVITY * x[1]),
        rotation: RotationField::none(),
        initial: Arc::new(initial),
        background: Some(Arc::new(move |x| neutral_base_state(x[1], BUBBLE_THETA0, &gas))),
        warp: warped.then(|| bubble_warp(l, h)),
        exact: None,
        t_end: 1000.0,
        cfl: 0.4,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IsothermalParams {
    pub p0: f64,
    pub t0: f64,
    pub g: f64,
    pub height: f64,
}

impl Default for IsothermalParams {
    fn default() -> Self {
        Self { p0: SURFACE_PRESSURE, t0: 250.0, g: GRAVITY, height: 10_000.0 }
    }
}

/// `p = p0 exp(-g z / (R T0))`, `rho = p / (R T0)`.
pub fn isothermal_profile(z: f64, params: &IsothermalParams, gas: &GasParameters) -> Primitive {
    let rt = gas.gas_constant * params.t0;
    let p = params.p0 * (-params.g * z / rt).exp();
    Primitive { rho: p / rt, u: [0.0; 2], p }
}

/// Resting isothermal atmosphere: a wall-bounded column in 1D, or a box
/// periodic in x and walled in z in 2D.
pub fn isothermal_balance(dim: usize, params: &IsothermalParams) -> Result<CaseSetup> {
    if !(dim == 1 || dim == 2) {
        return Err(Error::InvalidArgument(format!("dimension must be 1 or 2, got {dim}")));
    }
    let gas = GasParameters::default();
    let p = *params;
    let axis = dim - 1;
    let profile: PrimitiveField = Arc::new(move |x| isothermal_profile(x[axis], &p, &gas));
    let (extents, boundary) = if dim == 1 {
        (vec![(0.0, p.height)], vec![BoundaryKind::Wall])
    } else {
        (
            vec![(0.0, p.height), (0.0, p.height)],
            vec![BoundaryKind::Periodic, BoundaryKind::Wall],
        )
    };
    Ok(CaseSetup {
        name: format!("isothermal-{dim}d"),
        dim,
        extents,
        boundary,
        aspect: vec![1; dim],
        default_resolution: 8,
        gas,
        geopotential: Arc::new(move |x| p.g * x[axis]),
        rotation: RotationField::none(),
        initial: profile.clone(),
        background: Some(profile.clone()),
        warp: None,
        exact: Some(Arc::new(move |x, _| profile(x))),
        t_end: 100.0,
        cfl: 0.5,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GravityWaveParams {
    pub length: f64,
    pub height: f64,
    pub t0: f64,
    pub delta_t: f64,
    pub half_width: f64,
    pub center: f64,
    pub wind: f64,
}

impl Default for GravityWaveParams {
    fn default() -> Self {
        Self {
            length: 300e3,
            height: 10e3,
            t0: 250.0,
            delta_t: 1e-3,
            half_width: 5e3,
            center: 150e3,
            wind: 20.0,
        }
    }
}

/// Temperature perturbation `dT / (1 + ((x - xc)/a)^2) sin(pi z / H)`.
pub fn gravity_wave_perturbation(x: &[f64; 2], params: &GravityWaveParams) -> f64 {
    let s = (x[0] - params.center) / params.half_width;
    params.delta_t / (1.0 + s * s) * (PI * x[1] / params.height).sin()
}

/// Gravity waves in a periodic channel with rigid lids over an isothermal
/// background. Element aspect 10:1 keeps `dx / dz = 3`.
pub fn gravity_wave(params: &GravityWaveParams, warped: bool) -> CaseSetup {
    let gas = GasParameters::default();
    let p = *params;
    let iso = IsothermalParams { t0: p.t0, height: p.height, ..Default::default() };
    let background = move |x: &[f64; 2]| Primitive {
        u: [p.wind, 0.0],
        ..isothermal_profile(x[1], &iso, &gas)
    };
    let initial = move |x: &[f64; 2]| {
        let base = background(x);
        let t = p.t0 + gravity_wave_perturbation(x, &p);
        Primitive { rho: base.p / (gas.gas_constant * t), ..base }
    };
    CaseSetup {
        name: "gravity-wave".into(),
        dim: 2,
        extents: vec![(0.0, p.length), (0.0, p.height)],
        boundary: vec![BoundaryKind::Periodic, BoundaryKind::Wall],
        aspect: vec![10, 1],
        default_resolution: 2,
        gas,
        geopotential: Arc::new(|x| GRAVITY * x[1]),
        rotation: RotationField::none(),
        initial: Arc::new(initial),
        background: Some(Arc::new(background)),
        warp: warped.then(|| channel_warp(p.length, p.height)),
        exact: None,
        t_end: 300.0,
        cfl: 0.5,
    }
}

/// Density wave advected by a uniform flow on the periodic unit domain;
/// exact solution `rho(x - u t)`.
pub fn density_wave(dim: usize) -> Result<CaseSetup> {
    if !(dim == 1 || dim == 2) {
        return Err(Error::InvalidArgument(format!("dimension must be 1 or 2, got {dim}")));
    }
    let u = if dim == 1 { [1.0, 0.0] } else { [0.7, 0.4] };
    let exact = move |x: &[f64; 2], t: f64| {
        let phase = (0..dim).map(|d| x[d] - u[d] * t).sum::<f64>();
        Primitive { rho: 1.0 + 0.3 * (2.0 * PI * phase).sin(), u, p: 1.0 }
    };
    Ok(CaseSetup {
        name: format!("density-wave-{dim}d"),
        dim,
        extents: vec![(0.0, 1.0); dim],
        boundary: vec![BoundaryKind::Periodic; dim],
        aspect: vec![1; dim],
        default_resolution: 4,
        gas: GasParameters::default(),
        geopotential: Arc::new(|_| 0.0),
        rotation: RotationField::none(),
        initial: Arc::new(move |x| exact(x, 0.0)),
        background: None,
        warp: None,
        exact: Some(Arc::new(exact)),
        t_end: 1.0,
        cfl: 0.5,
    })
}

/// Constant state plus a smooth perturbation on the doubly periodic unit
/// square, with a periodic geopotential.
pub fn periodic_perturbation() -> CaseSetup {
    CaseSetup {
        name: "periodic-perturbation".into(),
        dim: 2,
        extents: vec![(0.0, 1.0), (0.0, 1.0)],
        boundary: vec![BoundaryKind::Periodic; 2],
        aspect: vec![1, 1],
        default_resolution: 4,
        gas: GasParameters::default(),
        geopotential: Arc::new(|x| 0.1 * (2.0 * PI * x[0]).sin() * (2.0 * PI * x[1]).cos()),
        rotation: RotationField::none(),
        initial: Arc::new(|x| {
            let bump = (-((x[0] - 0.5).powi(2) + (x[1] - 0.5).powi(2)) / 0.02).exp();
            Primitive {
                rho: 1.0 + 0.2 * bump,
                u: [0.3, -0.2],
                p: 1.0 + 0.3 * bump,
            }
        }),
        background: None,
        warp: Some(Arc::new(|x| {
            let s = 0.05 * (2.0 * PI * x[0]).sin() * (2.0 * PI * x[1]).sin();
            [x[0] + s, x[1] + s]
        })),
        exact: None,
        t_end: 0.5,
        cfl: 0.4,
    }
}

/// Uniform state with zero geopotential on `(-1/2, 1/2) x (0, 1)`, optionally
/// under the bubble warp.
pub fn constant_state(warped: bool) -> CaseSetup {
    let state = Primitive { rho: 1.2, u: [0.3, -0.1], p: 0.9 };
    CaseSetup {
        name: "constant".into(),
        dim: 2,
        extents: vec![(-0.5, 0.5), (0.0, 1.0)],
        boundary: vec![BoundaryKind::Periodic; 2],
        aspect: vec![1, 1],
        default_resolution: 4,
        gas: GasParameters::default(),
        geopotential: Arc::new(|_| 0.0),
        rotation: RotationField::none(),
        initial: Arc::new(move |_| state),
        background: None,
        warp: warped.then(|| bubble_warp(1.0, 1.0)),
        exact: Some(Arc::new(move |_, _| state)),
        t_end: 0.1,
        cfl: 0.5,
    }
}
