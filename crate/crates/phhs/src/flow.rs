//! Fixed-step RK4 flows of `X`, `JX` and their combinations.
//!
//! A holomorphic trajectory `γ(t + is)` is obtained by flowing `X` for real
//! time `t` and `JX` for `s`, so complex time `Δz` corresponds to the real
//! field `Re(Δz) X + Im(Δz) JX`.

use nalgebra::DVector;
use num_complex::Complex64;

use crate::error::{PhhsError, Result};
use crate::hamiltonian::HamiltonianFields;
use crate::par::{self, Exec};
use crate::tensor::{Point, VectorField};

/// Coordinates beyond this magnitude abort the integration.
pub const BLOWUP: f64 = 1e8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowConfig {
    pub dt: f64,
    pub max_step_count: usize,
    /// Also integrate at `dt/2` and report `‖x_h − x_{h/2}‖/15`.
    pub richardson: bool,
}

impl Default for FlowConfig {
    fn default() -> Self {
        FlowConfig { dt: 1e-3, max_step_count: 1_000_000, richardson: false }
    }
}

impl FlowConfig {
    pub fn new(dt: f64, max_step_count: usize) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) || max_step_count == 0 {
            return Err(PhhsError::Invalid(format!("flow config needs dt > 0 and a positive budget, got dt={dt}")));
        }
        Ok(FlowConfig { dt, max_step_count, richardson: false })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowOutcome {
    pub point: Point,
    pub steps: usize,
    pub error_estimate: Option<f64>,
}

fn rk4(v: &VectorField, x0: &[f64], t: f64, n: usize) -> Result<Point> {
    let mut x = DVector::from_column_slice(x0);
    if n == 0 {
        return Ok(x0.to_vec());
    }
    let h = t / n as f64;
    for step in 0..n {
        let k1 = v.eval(x.as_slice());
        let k2 = v.eval((&x + &k1 * (h / 2.0)).as_slice());
        let k3 = v.eval((&x + &k2 * (h / 2.0)).as_slice());
        let k4 = v.eval((&x + &k3 * h).as_slice());
        x += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        if x.iter().any(|c| !c.is_finite() || c.abs() > BLOWUP) {
            return Err(PhhsError::NonFiniteState { steps: step + 1 });
        }
    }
    Ok(x.as_slice().to_vec())
}

fn step_count(t: f64, cfg: &FlowConfig) -> Result<usize> {
    let needed = (t.abs() / cfg.dt).ceil() as usize;
    if needed > cfg.max_step_count {
        return Err(PhhsError::StepBudgetExceeded { needed, budget: cfg.max_step_count });
    }
    Ok(needed)
}

/// `φ^V_t(x0)` with the step count and optional error estimate.
pub fn flow_outcome(v: &VectorField, x0: &[f64], t: f64, cfg: &FlowConfig) -> Result<FlowOutcome> {
    let n = step_count(t, cfg)?;
    let point = rk4(v, x0, t, n)?;
    let error_estimate = if cfg.richardson {
        let fine = rk4(v, x0, t, 2 * n)?;
        Some(point.iter().zip(&fine).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt() / 15.0)
    } else {
        None
    };
    Ok(FlowOutcome { point, steps: n, error_estimate })
}

/// `φ^V_t(x0)`.
pub fn flow(v: &VectorField, x0: &[f64], t: f64, cfg: &FlowConfig) -> Result<Point> {
    let n = step_count(t, cfg)?;
    rk4(v, x0, t, n)
}

/// `a X + b JX`.
pub fn combined_field(fields: &HamiltonianFields, a: f64, b: f64) -> VectorField {
    let (x, jx) = (fields.x.clone(), fields.jx.clone());
    VectorField::new(x.dim(), move |p| {
        let mut out = DVector::zeros(x.dim());
        if a != 0.0 {
            out += x.eval(p) * a;
        }
        if b != 0.0 {
            out += jx.eval(p) * b;
        }
        out
    })
}

/// Flow along `cos(α) X + sin(α) JX` for parameter `r`.
pub fn tilted_flow(fields: &HamiltonianFields, x0: &[f64], alpha: f64, r: f64, cfg: &FlowConfig) -> Result<Point> {
    flow(&combined_field(fields, alpha.cos(), alpha.sin()), x0, r, cfg)
}

/// `φ^X_{t_1}∘φ^{JX}_{s_1}∘…∘φ^X_{t_n}∘φ^{JX}_{s_n}(x0)`: the last pair acts first,
/// and within a pair the `JX` flow acts before the `X` flow.
pub fn flow_word(fields: &HamiltonianFields, x0: &[f64], word: &[(f64, f64)], cfg: &FlowConfig) -> Result<Point> {
    let mut x = x0.to_vec();
    for &(t, s) in word.iter().rev() {
        x = flow(&fields.jx, &x, s, cfg)?;
        x = flow(&fields.x, &x, t, cfg)?;
    }
    Ok(x)
}

/// Distance between `φ^X_t∘φ^{JX}_s(x0)` and `φ^{JX}_s∘φ^X_t(x0)`.
pub fn commutation_defect(fields: &HamiltonianFields, x0: &[f64], t: f64, s: f64, cfg: &FlowConfig) -> Result<f64> {
    let a = flow(&fields.x, &flow(&fields.jx, x0, s, cfg)?, t, cfg)?;
    let b = flow(&fields.jx, &flow(&fields.x, x0, t, cfg)?, s, cfg)?;
    Ok(dist(&a, &b))
}

pub(crate) fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

/// A polyline in the complex time plane.
#[derive(Debug, Clone, PartialEq)]
pub struct TimePath {
    nodes: Vec<Complex64>,
}

impl TimePath {
    pub fn new(nodes: Vec<Complex64>) -> Result<Self> {
        if nodes.is_empty() {
            return Err(PhhsError::Invalid("time path needs at least one node".into()));
        }
        if nodes.windows(2).any(|w| w[0] == w[1]) {
            return Err(PhhsError::Invalid("consecutive time path nodes coincide".into()));
        }
        Ok(TimePath { nodes })
    }

    /// `turns` loops around `center` starting from `start`, with `segments` chords per loop.
    /// Negative `turns` run clockwise.
    pub fn circle(center: Complex64, start: Complex64, turns: i32, segments: usize) -> Result<Self> {
        let r0 = start - center;
        if r0.norm() == 0.0 || segments < 3 {
            return Err(PhhsError::Invalid("circle path needs a positive radius and ≥ 3 segments".into()));
        }
        let total = segments * turns.unsigned_abs() as usize;
        let sign = f64::from(turns.signum());
        let nodes = (0..=total)
            .map(|k| {
                let th = sign * 2.0 * std::f64::consts::PI * k as f64 / segments as f64;
                center + r0 * Complex64::from_polar(1.0, th)
            })
            .collect();
        TimePath::new(nodes)
    }

    pub fn nodes(&self) -> &[Complex64] {
        &self.nodes
    }
}

/// Continue `x0` (sitting at time `path[0]`) along the polyline and return the endpoint.
pub fn continue_along_path(fields: &HamiltonianFields, x0: &[f64], path: &TimePath, cfg: &FlowConfig) -> Result<Point> {
    let mut x = x0.to_vec();
    for w in path.nodes.windows(2) {
        let dz = w[1] - w[0];
        let len = dz.norm();
        let v = combined_field(fields, dz.re / len, dz.im / len);
        x = flow(&v, &x, len, cfg)?;
    }
    Ok(x)
}

/// Axis-aligned rectangle of complex times with node counts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub t_range: (f64, f64),
    pub s_range: (f64, f64),
    pub nt: usize,
    pub ns: usize,
}

impl GridSpec {
    pub fn t(&self, i: usize) -> f64 {
        lin(self.t_range, self.nt, i)
    }

    pub fn s(&self, j: usize) -> f64 {
        lin(self.s_range, self.ns, j)
    }

    pub fn ht(&self) -> f64 {
        (self.t_range.1 - self.t_range.0) / (self.nt - 1) as f64
    }

    pub fn hs(&self) -> f64 {
        (self.s_range.1 - self.s_range.0) / (self.ns - 1) as f64
    }

    fn index_of(range: (f64, f64), n: usize, v: f64) -> Option<usize> {
        let h = (range.1 - range.0) / (n - 1) as f64;
        let k = ((v - range.0) / h).round();
        (k >= 0.0 && (k as usize) < n && (lin(range, n, k as usize) - v).abs() <= 1e-9 * h.max(1.0)).then_some(k as usize)
    }
}

fn lin(r: (f64, f64), n: usize, i: usize) -> f64 {
    if n == 1 {
        r.0
    } else {
        r.0 + (r.1 - r.0) * i as f64 / (n - 1) as f64
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct GridDiagnostics {
    /// Distance at the far corner between the t-then-s and s-then-t constructions.
    pub swap_defect: f64,
    pub drift_h_r: f64,
    pub drift_h_i: f64,
    /// `max ‖∂_s γ − J ∂_t γ‖` from grid differences.
    pub cr_residual: f64,
}

/// Holomorphic trajectory sampled on a rectangle; `values[i][j] = γ(t_i + i s_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridCurve {
    pub spec: GridSpec,
    pub values: Vec<Vec<Point>>,
    pub anchor: (usize, usize),
    pub z0: Complex64,
    pub x0: Point,
    pub diagnostics: GridDiagnostics,
}

impl GridCurve {
    pub fn at(&self, i: usize, j: usize) -> &Point {
        &self.values[i][j]
    }

    pub fn time(&self, i: usize, j: usize) -> Complex64 {
        Complex64::new(self.spec.t(i), self.spec.s(j))
    }
}

pub fn trajectory_grid(
    fields: &HamiltonianFields,
    x0: &[f64],
    z0: Complex64,
    spec: GridSpec,
    cfg: &FlowConfig,
) -> Result<GridCurve> {
    trajectory_grid_with(fields, x0, z0, spec, cfg, Exec::default())
}

pub fn trajectory_grid_with(
    fields: &HamiltonianFields,
    x0: &[f64],
    z0: Complex64,
    spec: GridSpec,
    cfg: &FlowConfig,
    exec: Exec,
) -> Result<GridCurve> {
    if spec.nt < 2 || spec.ns < 2 {
        return Err(PhhsError::Invalid("trajectory grid needs at least 2 nodes per axis".into()));
    }
    let i0 = GridSpec::index_of(spec.t_range, spec.nt, z0.re)
        .ok_or_else(|| PhhsError::Invalid("anchor time is not a grid node".into()))?;
    let j0 = GridSpec::index_of(spec.s_range, spec.ns, z0.im)
        .ok_or_else(|| PhhsError::Invalid("anchor time is not a grid node".into()))?;

    // Sequential sweep along the t axis through the anchor.
    let mut axis: Vec<Point> = vec![Vec::new(); spec.nt];
    axis[i0] = x0.to_vec();
    for i in i0 + 1..spec.nt {
        axis[i] = flow(&fields.x, &axis[i - 1], spec.t(i) - spec.t(i - 1), cfg)?;
    }
    for i in (0..i0).rev() {
        axis[i] = flow(&fields.x, &axis[i + 1], spec.t(i) - spec.t(i + 1), cfg)?;
    }

    let columns: Vec<Result<Vec<Point>>> = par::map_range(exec, spec.nt, |i| {
        let mut col = vec![Vec::new(); spec.ns];
        col[j0] = axis[i].clone();
        for j in j0 + 1..spec.ns {
            col[j] = flow(&fields.jx, &col[j - 1], spec.s(j) - spec.s(j - 1), cfg)?;
        }
        for j in (0..j0).rev() {
            col[j] = flow(&fields.jx, &col[j + 1], spec.s(j) - spec.s(j + 1), cfg)?;
        }
        Ok(col)
    });
    let values = columns.into_iter().collect::<Result<Vec<_>>>()?;

    let mut curve = GridCurve { spec, values, anchor: (i0, j0), z0, x0: x0.to_vec(), diagnostics: GridDiagnostics::default() };
    curve.diagnostics = grid_diagnostics(fields, &curve, cfg, exec)?;
    Ok(curve)
}

fn grid_diagnostics(fields: &HamiltonianFields, c: &GridCurve, cfg: &FlowConfig, exec: Exec) -> Result<GridDiagnostics> {
    let spec = c.spec;
    let (i0, j0) = c.anchor;
    let fi = if i0 * 2 < spec.nt { spec.nt - 1 } else { 0 };
    let fj = if j0 * 2 < spec.ns { spec.ns - 1 } else { 0 };
    let swapped = flow(&fields.x, &flow(&fields.jx, &c.x0, spec.s(fj) - spec.s(j0), cfg)?, spec.t(fi) - spec.t(i0), cfg)?;
    let swap_defect = dist(&swapped, &c.values[fi][fj]);

    let e0 = fields.hamiltonian(&c.x0);
    let per: Vec<(f64, f64, f64)> = par::map_range(exec, spec.nt * spec.ns, |k| {
        let (i, j) = (k / spec.ns, k % spec.ns);
        let p = &c.values[i][j];
        let e = fields.hamiltonian(p);
        let dt = grid_derivative(spec.nt, i, spec.ht(), |ii| &c.values[ii][j]);
        let ds = grid_derivative(spec.ns, j, spec.hs(), |jj| &c.values[i][jj]);
        let r = ds - fields.j.eval(p) * dt;
        ((e.re - e0.re).abs(), (e.im - e0.im).abs(), r.amax())
    });
    let fold = |f: fn(&(f64, f64, f64)) -> f64| per.iter().map(f).fold(0.0, f64::max);
    Ok(GridDiagnostics { swap_defect, drift_h_r: fold(|v| v.0), drift_h_i: fold(|v| v.1), cr_residual: fold(|v| v.2) })
}

/// Second-order difference along one grid axis; one-sided at the ends.
pub(crate) fn grid_derivative<'a>(n: usize, k: usize, h: f64, at: impl Fn(usize) -> &'a Point) -> DVector<f64> {
    let v = |i: usize| DVector::from_column_slice(at(i));
    if n == 2 {
        return (v(1) - v(0)) / h;
    }
    if k == 0 {
        (v(0) * -3.0 + v(1) * 4.0 - v(2)) / (2.0 * h)
    } else if k == n - 1 {
        (v(n - 1) * 3.0 - v(n - 2) * 4.0 + v(n - 3)) / (2.0 * h)
    } else {
        (v(k + 1) - v(k - 1)) / (2.0 * h)
    }
}
