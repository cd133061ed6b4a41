//! Planar systems `ω = v dx∧dy` near a Morse minimum normalized to `x² + y²`:
//! period function, period-rescaling chart, measured periods and the area law.

use std::f64::consts::PI;

use crate::error::{PhhsError, Result};
use crate::flow::FlowConfig;
use crate::quad::composite_gl;
use crate::tensor::ScalarField;

/// Angular nodes of the periodic trapezoid rule for `T̂`.
pub const ANGULAR_NODES: usize = 64;

#[derive(Debug, Clone)]
pub struct PlanarSystem {
    /// Conformal factor, positive on the working disk.
    pub v: ScalarField,
    pub t_target: f64,
}

impl PlanarSystem {
    pub fn new(v: ScalarField, t_target: f64) -> Result<Self> {
        if v.dim() != 2 {
            return Err(PhhsError::Dimension("planar systems live on R²".into()));
        }
        if !(t_target > 0.0) {
            return Err(PhhsError::Invalid("target period must be positive".into()));
        }
        Ok(PlanarSystem { v, t_target })
    }
}

/// Which Hamiltonian the flow uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Chart {
    /// `H = x² + y²`.
    Identity,
    /// `H̃ = ψ(x² + y²)`.
    Rescaled,
}

/// `T̂(r) = ½ ∫₀^{2π} v(r cos φ, r sin φ) dφ`.
pub fn period_function(sys: &PlanarSystem, r: f64) -> f64 {
    let h = 2.0 * PI / ANGULAR_NODES as f64;
    let sum: f64 = (0..ANGULAR_NODES)
        .map(|k| {
            let (s, c) = (h * k as f64).sin_cos();
            sys.v.eval(&[r * c, r * s])
        })
        .sum();
    0.5 * h * sum
}

/// `ψ(s) = (1/T) ∫₀^s T̂(√|s′|) ds′`, computed as `(1/T) ∫₀^{√|s|} T̂(u) 2u du` with the sign of `s`.
pub fn rescaling_chart(sys: &PlanarSystem, s: f64) -> f64 {
    let u1 = s.abs().sqrt();
    if u1 == 0.0 {
        return 0.0;
    }
    let panels = (u1 / 0.25).ceil().max(1.0) as usize;
    let integral: f64 = composite_gl(0.0, u1, panels, 16).into_iter().map(|(u, w)| w * period_function(sys, u) * 2.0 * u).sum();
    s.signum() * integral / sys.t_target
}

/// `dψ/ds` at `s`, i.e. `T̂(√|s|)/T`.
pub fn chart_derivative(sys: &PlanarSystem, s: f64) -> f64 {
    period_function(sys, s.abs().sqrt()) / sys.t_target
}

fn hamiltonian(sys: &PlanarSystem, chart: Chart, x: f64, y: f64) -> f64 {
    let s = x * x + y * y;
    match chart {
        Chart::Identity => s,
        Chart::Rescaled => rescaling_chart(sys, s),
    }
}

/// `X` with `ι_X(v dx∧dy) = −dH` for `H = f(x² + y²)`: `X = 2f′(s)(−y, x)/v`.
fn field(sys: &PlanarSystem, chart: Chart, p: [f64; 2]) -> [f64; 2] {
    let s = p[0] * p[0] + p[1] * p[1];
    let fp = match chart {
        Chart::Identity => 1.0,
        Chart::Rescaled => chart_derivative(sys, s),
    };
    let k = 2.0 * fp / sys.v.eval(&p);
    [-k * p[1], k * p[0]]
}

/// Integrate from `(r0, 0)` and return the time at which the polar angle first reaches `2π`.
pub fn verify_t_periodic(sys: &PlanarSystem, chart: Chart, r0: f64, cfg: &FlowConfig) -> Result<f64> {
    if !(r0 > 0.0) {
        return Err(PhhsError::Invalid("start radius must be positive".into()));
    }
    let h = cfg.dt;
    let (mut p, mut angle, mut t) = ([r0, 0.0], 0.0_f64, 0.0_f64);
    let add = |a: [f64; 2], b: [f64; 2], c: f64| [a[0] + c * b[0], a[1] + c * b[1]];
    for _ in 0..cfg.max_step_count {
        let k1 = field(sys, chart, p);
        let k2 = field(sys, chart, add(p, k1, h / 2.0));
        let k3 = field(sys, chart, add(p, k2, h / 2.0));
        let k4 = field(sys, chart, add(p, k3, h));
        let q = [
            p[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
            p[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
        ];
        if !(q[0].is_finite() && q[1].is_finite()) {
            return Err(PhhsError::NonFiniteState { steps: (t / h) as usize });
        }
        // Unwrapped angle increment between consecutive states.
        let d = (p[0] * q[1] - p[1] * q[0]).atan2(p[0] * q[0] + p[1] * q[1]);
        let next = angle + d;
        if next >= 2.0 * PI {
            return Ok(t + h * (2.0 * PI - angle) / d);
        }
        angle = next;
        t += h;
        p = q;
    }
    Err(PhhsError::NoReturn)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AreaLaw {
    pub area: f64,
    pub t_times_e: f64,
    pub residual: f64,
}

/// `∫_{H ≤ E} v dx dy` against `T·E` (or `compare_t · E` when given).
pub fn area_law_check(sys: &PlanarSystem, chart: Chart, e: f64, compare_t: Option<f64>) -> Result<AreaLaw> {
    if !(e > 0.0) {
        return Err(PhhsError::Invalid("energy must be positive".into()));
    }
    let hphi = 2.0 * PI / ANGULAR_NODES as f64;
    let mut area = 0.0;
    for k in 0..ANGULAR_NODES {
        let (s, c) = (hphi * k as f64).sin_cos();
        let on_ray = |r: f64| hamiltonian(sys, chart, r * c, r * s);
        let mut hi = 1.0;
        while on_ray(hi) < e {
            hi *= 2.0;
            if hi > 1e6 {
                return Err(PhhsError::Invalid("sublevel set is unbounded along a ray".into()));
            }
        }
        let mut lo = 0.0;
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if on_ray(mid) < e {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-15 * hi {
                break;
            }
        }
        let rho = 0.5 * (lo + hi);
        let panels = (rho / 0.25).ceil().max(1.0) as usize;
        let radial: f64 = composite_gl(0.0, rho, panels, 16).into_iter().map(|(r, w)| w * sys.v.eval(&[r * c, r * s]) * r).sum();
        area += hphi * radial;
    }
    let t_times_e = compare_t.unwrap_or(sys.t_target) * e;
    Ok(AreaLaw { area, t_times_e, residual: (area - t_times_e).abs() })
}
