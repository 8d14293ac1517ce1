//! Benchmark dynamics and the fixed-step RK4 transition map `Φ(t1; t0, x0, d)`.
//!
//! Disturbances are constant in time. State layouts:
//! - duffing: `(x, y)`, no disturbance
//! - quadrotor: `(x, ẋ, h, ḣ, θ, θ̇)`, disturbance `(u1, u2)`
//! - traffic: six cell densities `(x1..x6)`, disturbance `d` (inflow)
//! - linear (`custom-test`): scalar `ẋ = rate·x`, no disturbance

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SystemId {
    Duffing,
    Quadrotor,
    Traffic,
    #[serde(rename = "custom-test")]
    Linear,
}

impl SystemId {
    pub fn as_str(self) -> &'static str {
        match self {
            SystemId::Duffing => "duffing",
            SystemId::Quadrotor => "quadrotor",
            SystemId::Traffic => "traffic",
            SystemId::Linear => "custom-test",
        }
    }

    pub fn state_dim(self) -> usize {
        match self {
            SystemId::Duffing => 2,
            SystemId::Quadrotor | SystemId::Traffic => 6,
            SystemId::Linear => 1,
        }
    }

    pub fn disturbance_dim(self) -> usize {
        match self {
            SystemId::Duffing | SystemId::Linear => 0,
            SystemId::Quadrotor => 2,
            SystemId::Traffic => 1,
        }
    }

    /// Default RK4 step for the benchmark horizons.
    pub fn default_step(self) -> f64 {
        match self {
            SystemId::Duffing => 0.01,
            SystemId::Quadrotor => 0.005,
            SystemId::Traffic => 0.05,
            SystemId::Linear => 0.01,
        }
    }

    pub fn is_monotone(self) -> bool {
        matches!(self, SystemId::Traffic | SystemId::Linear)
    }

    fn default_params(self) -> &'static [(&'static str, f64)] {
        match self {
            SystemId::Duffing => &[("alpha", 0.05), ("gamma", 0.4), ("omega", 1.3)],
            SystemId::Quadrotor => &[
                ("g", 9.81),
                ("K", 0.89 / 1.4),
                ("d0", 70.0),
                ("d1", 17.0),
                ("n0", 55.0),
            ],
            SystemId::Traffic => &[
                ("T", 30.0),
                ("v", 0.5),
                ("w", 1.0 / 6.0),
                ("x_max", 320.0),
                ("c", 40.0),
                ("beta", 1.0),
            ],
            SystemId::Linear => &[("rate", 1.0)],
        }
    }
}

impl fmt::Display for SystemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SystemId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "duffing" => Ok(SystemId::Duffing),
            "quadrotor" => Ok(SystemId::Quadrotor),
            "traffic" => Ok(SystemId::Traffic),
            "custom-test" => Ok(SystemId::Linear),
            other => Err(Error::InvalidArgument(format!("unknown system `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DuffingParams {
    pub alpha: f64,
    pub gamma: f64,
    pub omega: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadrotorParams {
    pub g: f64,
    pub gain: f64,
    pub d0: f64,
    pub d1: f64,
    pub n0: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrafficParams {
    pub period: f64,
    pub free_flow_speed: f64,
    pub wave_speed: f64,
    pub max_density: f64,
    pub capacity: f64,
    pub beta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Dynamics {
    Duffing(DuffingParams),
    Quadrotor(QuadrotorParams),
    Traffic(TrafficParams),
    Linear { rate: f64 },
}

/// A benchmark system together with its parameter values.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SystemSpec {
    id: SystemId,
    params: BTreeMap<String, f64>,
    #[serde(skip)]
    dynamics: Dynamics,
}

impl SystemSpec {
    pub fn new(id: SystemId) -> Self {
        let params = id
            .default_params()
            .iter()
            .map(|&(name, value)| (name.to_string(), value))
            .collect();
        let dynamics = build_dynamics(id, &params);
        SystemSpec {
            id,
            params,
            dynamics,
        }
    }

    /// Overrides one named parameter. Unknown names are rejected.
    pub fn with_param(mut self, name: &str, value: f64) -> Result<Self> {
        match self.params.get_mut(name) {
            Some(slot) if value.is_finite() => *slot = value,
            Some(_) => {
                return Err(Error::InvalidArgument(format!(
                    "parameter `{name}` must be finite"
                )))
            }
            None => {
                return Err(Error::InvalidArgument(format!(
                    "system `{}` has no parameter `{name}` (known: {})",
                    self.id,
                    self.params.keys().cloned().collect::<Vec<_>>().join(", ")
                )))
            }
        }
        self.dynamics = build_dynamics(self.id, &self.params);
        Ok(self)
    }

    pub fn id(&self) -> SystemId {
        self.id
    }

    pub fn params(&self) -> &BTreeMap<String, f64> {
        &self.params
    }

    pub fn state_dim(&self) -> usize {
        self.id.state_dim()
    }

    pub fn disturbance_dim(&self) -> usize {
        self.id.disturbance_dim()
    }

    /// Vector field at `(t, x)` under constant disturbance `d`.
    pub fn field(&self, t: f64, x: &[f64], d: &[f64], dx: &mut [f64]) {
        match self.dynamics {
            Dynamics::Duffing(p) => {
                let v = duffing_field(t, [x[0], x[1]], &p);
                dx.copy_from_slice(&v);
            }
            Dynamics::Quadrotor(p) => {
                let state = [x[0], x[1], x[2], x[3], x[4], x[5]];
                let v = quadrotor_field(t, &state, [d[0], d[1]], &p);
                dx.copy_from_slice(&v);
            }
            Dynamics::Traffic(p) => traffic_field(t, x, d[0], &p, dx),
            Dynamics::Linear { rate } => {
                for (o, xi) in dx.iter_mut().zip(x) {
                    *o = rate * xi;
                }
            }
        }
    }
}

fn build_dynamics(id: SystemId, params: &BTreeMap<String, f64>) -> Dynamics {
    let p = |name: &str| params[name];
    match id {
        SystemId::Duffing => Dynamics::Duffing(DuffingParams {
            alpha: p("alpha"),
            gamma: p("gamma"),
            omega: p("omega"),
        }),
        SystemId::Quadrotor => Dynamics::Quadrotor(QuadrotorParams {
            g: p("g"),
            gain: p("K"),
            d0: p("d0"),
            d1: p("d1"),
            n0: p("n0"),
        }),
        SystemId::Traffic => Dynamics::Traffic(TrafficParams {
            period: p("T"),
            free_flow_speed: p("v"),
            wave_speed: p("w"),
            max_density: p("x_max"),
            capacity: p("c"),
            beta: p("beta"),
        }),
        SystemId::Linear => Dynamics::Linear { rate: p("rate") },
    }
}

pub fn duffing_field(t: f64, state: [f64; 2], p: &DuffingParams) -> [f64; 2] {
    let [x, y] = state;
    [
        y,
        -p.alpha * y + x - x * x * x + p.gamma * (p.omega * t).cos(),
    ]
}

pub fn quadrotor_field(
    _t: f64,
    state: &[f64; 6],
    input: [f64; 2],
    p: &QuadrotorParams,
) -> [f64; 6] {
    let [_, vx, _, vh, theta, omega] = *state;
    let [u1, u2] = input;
    let thrust = u1 * p.gain;
    [
        vx,
        thrust * theta.sin(),
        vh,
        -p.g + thrust * theta.cos(),
        omega,
        -p.d0 * theta - p.d1 * omega + p.n0 * u2,
    ]
}

/// Cell transmission model with inflow `d` into the first cell. Works for any
/// number of cells `>= 2`.
pub fn traffic_field(_t: f64, x: &[f64], d: f64, p: &TrafficParams, dx: &mut [f64]) {
    let n = x.len();
    debug_assert!(n >= 2 && dx.len() == n);
    let (c, v, w, cap) = (p.capacity, p.free_flow_speed, p.wave_speed, p.max_density);
    // flow from cell i into cell i + 1
    let flow = |i: usize| {
        let receive = if i + 1 == n - 1 {
            w * (cap - x[i + 1]) / p.beta
        } else {
            w * (cap - x[i + 1])
        };
        c.min(v * x[i]).min(receive)
    };
    let mut inflow = d;
    for (i, slot) in dx.iter_mut().enumerate().take(n - 1) {
        let out = flow(i);
        *slot = (inflow - out) / p.period;
        inflow = out;
    }
    let exit = c.min(v * x[n - 1]);
    dx[n - 1] = (inflow - exit) / p.period;
}

/// Fixed-step classical Runge–Kutta settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    pub step: f64,
}

impl IntegratorConfig {
    pub fn new(step: f64) -> Result<Self> {
        if !(step > 0.0) || !step.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "integrator step must be positive, got {step}"
            )));
        }
        Ok(IntegratorConfig { step })
    }

    pub fn default_for(id: SystemId) -> Self {
        IntegratorConfig {
            step: id.default_step(),
        }
    }

    /// Number of full steps and the length of a trailing partial step (0 when
    /// the step divides the horizon to within 1e-9 relative).
    fn schedule(&self, span: f64) -> (u64, f64) {
        let ratio = span / self.step;
        let rounded = ratio.round();
        if rounded >= 1.0 && (ratio - rounded).abs() <= 1e-9 * rounded {
            (rounded as u64, 0.0)
        } else {
            let full = ratio.floor();
            (full as u64, span - full * self.step)
        }
    }
}

/// Final state `x(t1)` from `x(t0) = x0` under constant disturbance `d`.
pub fn simulate(
    spec: &SystemSpec,
    integ: &IntegratorConfig,
    t0: f64,
    t1: f64,
    x0: &[f64],
    d: &[f64],
) -> Result<Vec<f64>> {
    if x0.len() != spec.state_dim() {
        return Err(Error::DimensionMismatch {
            expected: spec.state_dim(),
            got: x0.len(),
        });
    }
    if d.len() != spec.disturbance_dim() {
        return Err(Error::DimensionMismatch {
            expected: spec.disturbance_dim(),
            got: d.len(),
        });
    }
    if !(t1 >= t0) {
        return Err(Error::InvalidArgument(format!(
            "time range [{t0}, {t1}] is reversed"
        )));
    }
    let mut x = x0.to_vec();
    if t1 == t0 {
        return Ok(x);
    }
    let (steps, tail) = integ.schedule(t1 - t0);
    let mut rk = Rk4::new(x.len());
    for i in 0..steps {
        let t = t0 + i as f64 * integ.step;
        rk.step(spec, t, integ.step, &mut x, d);
        check_finite(&x, t + integ.step)?;
    }
    if tail > 0.0 {
        let t = t0 + steps as f64 * integ.step;
        rk.step(spec, t, tail, &mut x, d);
        check_finite(&x, t1)?;
    }
    Ok(x)
}

fn check_finite(x: &[f64], time: f64) -> Result<()> {
    if x.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite { time, index: None })
    }
}

struct Rk4 {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    tmp: Vec<f64>,
}

impl Rk4 {
    fn new(n: usize) -> Self {
        Rk4 {
            k1: vec![0.0; n],
            k2: vec![0.0; n],
            k3: vec![0.0; n],
            k4: vec![0.0; n],
            tmp: vec![0.0; n],
        }
    }

    fn step(&mut self, spec: &SystemSpec, t: f64, h: f64, x: &mut [f64], d: &[f64]) {
        let half = 0.5 * h;
        spec.field(t, x, d, &mut self.k1);
        axpy(&mut self.tmp, x, half, &self.k1);
        spec.field(t + half, &self.tmp, d, &mut self.k2);
        axpy(&mut self.tmp, x, half, &self.k2);
        spec.field(t + half, &self.tmp, d, &mut self.k3);
        axpy(&mut self.tmp, x, h, &self.k3);
        spec.field(t + h, &self.tmp, d, &mut self.k4);
        let sixth = h / 6.0;
        for (i, xi) in x.iter_mut().enumerate() {
            *xi += sixth * (self.k1[i] + 2.0 * self.k2[i] + 2.0 * self.k3[i] + self.k4[i]);
        }
    }
}

#[inline]
fn axpy(out: &mut [f64], x: &[f64], a: f64, k: &[f64]) {
    for ((o, xi), ki) in out.iter_mut().zip(x).zip(k) {
        *o = xi + a * ki;
    }
}

/// Tight interval enclosure of the reachable set of a monotone system:
/// the endpoints of the trajectories from the lowest and the highest corner.
#[allow(clippy::too_many_arguments)]
pub fn monotone_interval(
    spec: &SystemSpec,
    integ: &IntegratorConfig,
    t0: f64,
    t1: f64,
    x_lo: &[f64],
    x_hi: &[f64],
    d_lo: &[f64],
    d_hi: &[f64],
) -> Result<(Vec<f64>, Vec<f64>)> {
    if !spec.id().is_monotone() {
        return Err(Error::NotMonotone(spec.id().to_string()));
    }
    ordered(x_lo, x_hi, "initial interval")?;
    ordered(d_lo, d_hi, "disturbance interval")?;
    let lower = simulate(spec, integ, t0, t1, x_lo, d_lo)?;
    let upper = simulate(spec, integ, t0, t1, x_hi, d_hi)?;
    for (component, (&lo, &hi)) in lower.iter().zip(&upper).enumerate() {
        if lo > hi + 1e-9 * (1.0 + hi.abs()) {
            return Err(Error::MonotonicityViolated {
                component,
                lower: lo,
                upper: hi,
            });
        }
    }
    Ok((lower, upper))
}

fn ordered(lo: &[f64], hi: &[f64], what: &str) -> Result<()> {
    if lo.len() != hi.len() {
        return Err(Error::DimensionMismatch {
            expected: lo.len(),
            got: hi.len(),
        });
    }
    if lo.iter().zip(hi).any(|(a, b)| !(a <= b)) {
        return Err(Error::InvalidArgument(format!("{what} has lower > upper")));
    }
    Ok(())
}
