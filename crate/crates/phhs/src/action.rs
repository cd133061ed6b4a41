//! Discrete action functionals on segments, parallelograms, disks and
//! star-shaped domains, and their node-wise variational gradients.
//!
//! Every functional is stored as `norm · Σ_k T_k`: `Λ`-terms use the midpoint
//! rule on each grid edge, `Λ_R(x̄)(x_j − x_i)`, and `H`-terms carry the
//! quadrature weight of one node. The edge form keeps the discrete
//! Euler–Lagrange equations consistent up to the boundary. The complex one-form
//! is `Λ(v) = Λ_R(v) − i Λ_R(Jv)`.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DVector;
use num_complex::Complex64;

use crate::error::{PhhsError, Result};
use crate::flow::GridCurve;
use crate::hamiltonian::{CovectorField, HamiltonianFields, PhhsModel};
use crate::par::{self, Exec};
use crate::quad::trapezoid_weights;
use crate::tensor::{MatrixField, Point};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// `Λ_R`, `J` and `H = H_R + i H_I`, the data every functional needs.
#[derive(Clone)]
pub struct ActionContext {
    pub lambda_r: CovectorField,
    pub j: MatrixField,
    pub h: Arc<dyn Fn(&[f64]) -> Complex64 + Send + Sync>,
}

impl ActionContext {
    /// Uses the holomorphic Hamiltonian when the model has one, else `H_R + i H_I`.
    pub fn new(model: &PhhsModel, fields: &HamiltonianFields) -> Result<Self> {
        let lambda_r = model.lambda_r.clone().ok_or(PhhsError::MissingPrimitive)?;
        let h: Arc<dyn Fn(&[f64]) -> Complex64 + Send + Sync> = match &model.h_holomorphic {
            Some(e) => {
                let e = e.clone();
                Arc::new(move |p| e.eval(p))
            }
            None => {
                let f = fields.clone();
                Arc::new(move |p| f.hamiltonian(p))
            }
        };
        Ok(ActionContext { lambda_r, j: fields.j.clone(), h })
    }
}

/// Which variant of the polar functionals.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolarVariant {
    /// `(1/2π) ∫₀^{2π} ∫₀^{R(α)} [Λ(γ_α′) − e^{iα} H] dr dα`.
    One,
    /// `(i/4R̂) ∫₀^π ∫_{−R(α+π)}^{R(α)} [Λ(γ_α′) − e^{iα} H] dr dα`.
    Two,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Domain {
    Segment { z0: Complex64, alpha: f64, r: (f64, f64) },
    Parallelogram { z0: Complex64, alpha: f64, t: (f64, f64), r: (f64, f64) },
    Disk { z0: Complex64, radius: f64, variant: PolarVariant },
    Star { z0: Complex64, variant: PolarVariant },
}

/// One quadrature contribution: either `coef · H(x_node)` or the edge term
/// `a Λ_R(x̄)(x_j − x_i) + b Λ_R(x̄)(J(x̄)(x_j − x_i))` with `x̄ = (x_i + x_j)/2`.
#[derive(Debug, Clone)]
enum Term {
    H { node: usize, coef: Complex64 },
    Edge { i: usize, j: usize, a: Complex64, b: Complex64 },
}

impl Term {
    fn nodes(&self) -> Vec<usize> {
        match *self {
            Term::H { node, .. } => vec![node],
            Term::Edge { i, j, .. } => vec![i, j],
        }
    }
}

/// A map from a time domain sampled on the domain's node layout.
#[derive(Debug, Clone)]
pub struct DiscreteCurve {
    pub domain: Domain,
    /// Complex time of each node.
    pub times: Vec<Complex64>,
    /// Phase-space value of each node.
    pub nodes: Vec<Point>,
    pub boundary: Vec<bool>,
    pub center: Option<usize>,
    norm: Complex64,
    terms: Vec<Term>,
    /// Indices of the terms that read each node.
    dependents: Vec<Vec<usize>>,
}

/// Edge terms along a line of nodes plus node-weighted `H` terms.
fn line_terms(terms: &mut Vec<Term>, idx: &[usize], a: Complex64, b: Complex64, h_coefs: &[Complex64]) {
    for w in idx.windows(2) {
        terms.push(Term::Edge { i: w[0], j: w[1], a, b });
    }
    for (&node, &coef) in idx.iter().zip(h_coefs) {
        terms.push(Term::H { node, coef });
    }
}

/// Weights `F_k` with `Σ F_k g(α_k) = ∫ e^{iα} g(α) dα` for piecewise linear `g` on the nodes.
pub fn filon_weights(alphas: &[f64]) -> Vec<Complex64> {
    let mut w = vec![Complex64::new(0.0, 0.0); alphas.len()];
    for k in 0..alphas.len().saturating_sub(1) {
        let (a, b) = (alphas[k], alphas[k + 1]);
        let h = b - a;
        let (ea, eb) = (Complex64::from_polar(1.0, a), Complex64::from_polar(1.0, b));
        let wb = -I * eb + (eb - ea) / h;
        let wa = -I * (eb - ea) - wb;
        w[k] += wa;
        w[k + 1] += wb;
    }
    w
}

fn check_sizes(n: usize, what: &str) -> Result<()> {
    if n < 2 {
        return Err(PhhsError::Invalid(format!("{what} needs at least 2 intervals")));
    }
    Ok(())
}

impl DiscreteCurve {
    fn finish(
        domain: Domain,
        times: Vec<Complex64>,
        boundary: Vec<bool>,
        center: Option<usize>,
        norm: Complex64,
        terms: Vec<Term>,
        gamma: &dyn Fn(Complex64) -> Point,
    ) -> Self {
        let nodes = times.iter().map(|&z| gamma(z)).collect();
        let mut dependents = vec![Vec::new(); times.len()];
        for (t, term) in terms.iter().enumerate() {
            for k in term.nodes() {
                if dependents[k].last() != Some(&t) {
                    dependents[k].push(t);
                }
            }
        }
        DiscreteCurve { domain, times, nodes, boundary, center, norm, terms, dependents }
    }

    /// `γ(z0 + e^{iα} r)` for `r` in `[r0, r1]` on `n` intervals.
    pub fn segment(z0: Complex64, alpha: f64, r: (f64, f64), n: usize, gamma: impl Fn(Complex64) -> Point) -> Result<Self> {
        check_sizes(n, "segment")?;
        let dir = Complex64::from_polar(1.0, alpha);
        let h = (r.1 - r.0) / n as f64;
        let times: Vec<Complex64> = (0..=n).map(|k| z0 + dir * (r.0 + h * k as f64)).collect();
        let idx: Vec<usize> = (0..=n).collect();
        let hc: Vec<Complex64> = trapezoid_weights(n + 1, r.1 - r.0).into_iter().map(|w| -dir * w).collect();
        let mut terms = Vec::new();
        line_terms(&mut terms, &idx, 1.0.into(), -I, &hc);
        let mut boundary = vec![false; n + 1];
        boundary[0] = true;
        boundary[n] = true;
        Ok(Self::finish(Domain::Segment { z0, alpha, r }, times, boundary, None, 1.0.into(), terms, &gamma))
    }

    /// `γ(z0 + t + e^{iα} r)` on an `nt × nr` interval grid; node `(i, j)` has index `i (nr+1) + j`.
    pub fn parallelogram(
        z0: Complex64,
        alpha: f64,
        t: (f64, f64),
        r: (f64, f64),
        nt: usize,
        nr: usize,
        gamma: impl Fn(Complex64) -> Point,
    ) -> Result<Self> {
        check_sizes(nt, "parallelogram")?;
        check_sizes(nr, "parallelogram")?;
        let (sa, ca) = alpha.sin_cos();
        if sa.abs() < 1e-9 {
            return Err(PhhsError::Invalid("parallelogram angle must not be a multiple of π".into()));
        }
        let dir = Complex64::from_polar(1.0, alpha);
        let (ht, hr) = ((t.1 - t.0) / nt as f64, (r.1 - r.0) / nr as f64);
        let id = |i: usize, j: usize| i * (nr + 1) + j;
        let mut times = Vec::new();
        let mut boundary = Vec::new();
        for i in 0..=nt {
            for j in 0..=nr {
                times.push(z0 + t.0 + ht * i as f64 + dir * (r.0 + hr * j as f64));
                boundary.push(i == 0 || j == 0 || i == nt || j == nr);
            }
        }
        let (wt, wr) = (trapezoid_weights(nt + 1, t.1 - t.0), trapezoid_weights(nr + 1, r.1 - r.0));
        // Area element sin α dt dr; Λ_R(∂_t) − iΛ_R(∂_s) with ∂_s = (∂_r − cos α ∂_t)/sin α.
        let mut terms = Vec::new();
        for j in 0..=nr {
            let line: Vec<usize> = (0..=nt).map(|i| id(i, j)).collect();
            line_terms(&mut terms, &line, Complex64::new(sa, ca) * wr[j], 0.0.into(), &[]);
        }
        for i in 0..=nt {
            let line: Vec<usize> = (0..=nr).map(|j| id(i, j)).collect();
            let hc: Vec<Complex64> = wr.iter().map(|w| Complex64::from(-wt[i] * w * sa)).collect();
            line_terms(&mut terms, &line, -I * wt[i], 0.0.into(), &hc);
        }
        Ok(Self::finish(Domain::Parallelogram { z0, alpha, t, r }, times, boundary, None, 1.0.into(), terms, &gamma))
    }

    /// The rectangle of a trajectory grid, node values copied from it.
    pub fn from_grid(grid: &GridCurve) -> Result<Self> {
        let spec = grid.spec;
        let mut c = Self::parallelogram(
            Complex64::new(0.0, spec.s_range.0),
            PI / 2.0,
            spec.t_range,
            (0.0, spec.s_range.1 - spec.s_range.0),
            spec.nt - 1,
            spec.ns - 1,
            |_| Vec::new(),
        )?;
        for i in 0..spec.nt {
            for j in 0..spec.ns {
                c.nodes[i * spec.ns + j] = grid.values[i][j].clone();
            }
        }
        Ok(c)
    }

    /// Polar grid on the disk `|z − z0| ≤ R` with `nr` radial intervals and `nalpha` angular ones.
    pub fn disk(z0: Complex64, radius: f64, nr: usize, nalpha: usize, variant: PolarVariant, gamma: impl Fn(Complex64) -> Point) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(PhhsError::Invalid("disk radius must be positive".into()));
        }
        let mut c = Self::star(z0, |_| radius, nr, nalpha, variant, gamma)?;
        c.domain = Domain::Disk { z0, radius, variant };
        Ok(c)
    }

    /// Polar grid on the star-shaped domain `{z0 + r e^{iα} : 0 ≤ r ≤ R(α)}`.
    pub fn star(
        z0: Complex64,
        radius: impl Fn(f64) -> f64,
        nr: usize,
        nalpha: usize,
        variant: PolarVariant,
        gamma: impl Fn(Complex64) -> Point,
    ) -> Result<Self> {
        check_sizes(nr, "radial grid")?;
        check_sizes(nalpha, "angular grid")?;
        let positive = |r: f64| if r > 0.0 { Ok(r) } else { Err(PhhsError::Invalid("boundary radius must be positive".into())) };
        let mut times = vec![z0];
        let mut boundary = vec![false];
        let mut terms = Vec::new();
        let norm;
        match variant {
            PolarVariant::One => {
                // Periodic trapezoid in α; the center node is shared by all rays.
                let wa = 2.0 * PI / nalpha as f64;
                for k in 0..nalpha {
                    let alpha = wa * k as f64;
                    let rr = positive(radius(alpha))?;
                    let dir = Complex64::from_polar(1.0, alpha);
                    let h = rr / nr as f64;
                    let mut idx = vec![0];
                    for j in 1..=nr {
                        idx.push(times.len());
                        times.push(z0 + dir * (h * j as f64));
                        boundary.push(j == nr);
                    }
                    let hc: Vec<Complex64> = trapezoid_weights(nr + 1, rr).into_iter().map(|w| -dir * wa * w).collect();
                    line_terms(&mut terms, &idx, wa.into(), -I * wa, &hc);
                }
                norm = Complex64::new(1.0 / (2.0 * PI), 0.0);
            }
            PolarVariant::Two => {
                // Diameters α ∈ [0, π]; the α = π diameter is the α = 0 one reversed.
                let alphas: Vec<f64> = (0..=nalpha).map(|k| PI * k as f64 / nalpha as f64).collect();
                let filon = filon_weights(&alphas);
                let wa = trapezoid_weights(nalpha + 1, PI);
                let mut first: Vec<usize> = Vec::new();
                let mut r_hat = Complex64::new(0.0, 0.0);
                for (k, &alpha) in alphas.iter().enumerate() {
                    let (rp, rm) = (positive(radius(alpha))?, positive(radius(alpha + PI))?);
                    r_hat += filon[k] * (rp + rm);
                    let idx: Vec<usize> = if k == nalpha {
                        first.iter().rev().cloned().collect()
                    } else {
                        let dir = Complex64::from_polar(1.0, alpha);
                        let h = (rp + rm) / (2 * nr) as f64;
                        let shares_center = (rp - rm).abs() <= 1e-14 * rp;
                        (0..=2 * nr)
                            .map(|j| {
                                if shares_center && j == nr {
                                    return 0;
                                }
                                times.push(z0 + dir * (-rm + h * j as f64));
                                boundary.push(j == 0 || j == 2 * nr);
                                times.len() - 1
                            })
                            .collect()
                    };
                    if k == 0 {
                        first = idx.clone();
                    }
                    let hc: Vec<Complex64> = trapezoid_weights(2 * nr + 1, rp + rm).into_iter().map(|w| -filon[k] * w).collect();
                    line_terms(&mut terms, &idx, wa[k].into(), -I * wa[k], &hc);
                }
                // R̂ = (i/4)[∫_π^{2π} R e^{iα} − ∫_0^π R e^{iα}] on the same angular rule.
                r_hat *= -I / 4.0;
                norm = I / (4.0 * r_hat);
            }
        }
        Ok(Self::finish(Domain::Star { z0, variant }, times, boundary, Some(0), norm, terms, &gamma))
    }

    /// Move one coordinate of one node.
    pub fn displace(&mut self, node: usize, coord: usize, amount: f64) {
        self.nodes[node][coord] += amount;
    }

    /// Index of the interior node nearest to complex time `z`.
    pub fn nearest_interior(&self, z: Complex64) -> Option<usize> {
        (0..self.times.len())
            .filter(|&k| !self.boundary[k] && Some(k) != self.center && !self.dependents[k].is_empty())
            .min_by(|&a, &b| (self.times[a] - z).norm().total_cmp(&(self.times[b] - z).norm()))
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// The functional's value.
    pub fn action(&self, ctx: &ActionContext) -> Complex64 {
        self.action_with(ctx, Exec::default())
    }

    pub fn action_with(&self, ctx: &ActionContext, exec: Exec) -> Complex64 {
        let h_cache: Vec<Complex64> = par::map_slice(exec, &self.nodes, |p| (ctx.h)(p));
        let vals: Vec<Complex64> = par::map_slice(exec, &self.terms, |t| self.term_value(ctx, t, &h_cache, None));
        self.norm * vals.iter().sum::<Complex64>()
    }

    fn term_value(&self, ctx: &ActionContext, term: &Term, h_cache: &[Complex64], pert: Option<(usize, &Point, Complex64)>) -> Complex64 {
        let node = |k: usize| -> &Point {
            match pert {
                Some((pk, p, _)) if pk == k => p,
                _ => &self.nodes[k],
            }
        };
        match *term {
            Term::H { node: k, coef } => match pert {
                Some((pk, _, hv)) if pk == k => coef * hv,
                _ => coef * h_cache[k],
            },
            Term::Edge { i, j, a, b } => {
                let (xi, xj) = (node(i), node(j));
                let mid: Vec<f64> = xi.iter().zip(xj).map(|(u, v)| 0.5 * (u + v)).collect();
                let d = DVector::from_iterator(xi.len(), xi.iter().zip(xj).map(|(u, v)| v - u));
                let lam = ctx.lambda_r.eval(&mid);
                let mut val = a * lam.dot(&d);
                if b != Complex64::new(0.0, 0.0) {
                    val += b * lam.dot(&(ctx.j.eval(&mid) * &d));
                }
                val
            }
        }
    }
}

fn expect_domain(curve: &DiscreteCurve, ok: bool, what: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(PhhsError::Invalid(format!("{what} requires a matching curve layout, got {:?}", curve.domain)))
    }
}

/// `∫ Λ(γ̇) − e^{iα} ∫ H∘γ` over a segment.
pub fn segment_action(ctx: &ActionContext, curve: &DiscreteCurve) -> Result<Complex64> {
    expect_domain(curve, matches!(curve.domain, Domain::Segment { .. }), "segment_action")?;
    Ok(curve.action(ctx))
}

/// `∬ [Λ_R(∂_tγ) − iΛ_R(∂_sγ) − H∘γ] dt ds` over a parallelogram.
pub fn parallelogram_action(ctx: &ActionContext, curve: &DiscreteCurve) -> Result<Complex64> {
    expect_domain(curve, matches!(curve.domain, Domain::Parallelogram { .. }), "parallelogram_action")?;
    Ok(curve.action(ctx))
}

pub fn disk_action_1(ctx: &ActionContext, curve: &DiscreteCurve) -> Result<Complex64> {
    expect_domain(curve, matches!(curve.domain, Domain::Disk { variant: PolarVariant::One, .. }), "disk_action_1")?;
    Ok(curve.action(ctx))
}

pub fn disk_action_2(ctx: &ActionContext, curve: &DiscreteCurve) -> Result<Complex64> {
    expect_domain(curve, matches!(curve.domain, Domain::Disk { variant: PolarVariant::Two, .. }), "disk_action_2")?;
    Ok(curve.action(ctx))
}

pub fn star_action(ctx: &ActionContext, curve: &DiscreteCurve) -> Result<Complex64> {
    expect_domain(curve, matches!(curve.domain, Domain::Star { .. } | Domain::Disk { .. }), "star_action")?;
    Ok(curve.action(ctx))
}

/// Error estimate of the finer of two second-order values, never below `floor`.
pub fn refinement_error(coarse: Complex64, fine: Complex64, floor: f64) -> f64 {
    ((coarse - fine).norm() / 3.0).max(floor)
}

/// Round-off floor used with [`refinement_error`].
pub const ROUNDOFF_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FixedSet {
    Boundary,
    BoundaryAndCenter,
}

/// Per-node derivatives of the real and imaginary parts of the action.
#[derive(Debug, Clone, PartialEq)]
pub struct VariationalGradient {
    pub re: Vec<DVector<f64>>,
    pub im: Vec<DVector<f64>>,
    pub free: Vec<bool>,
}

impl VariationalGradient {
    pub fn max_re(&self) -> f64 {
        self.re.iter().map(|g| g.amax()).fold(0.0, f64::max)
    }

    pub fn max_im(&self) -> f64 {
        self.im.iter().map(|g| g.amax()).fold(0.0, f64::max)
    }

    pub fn max_norm(&self) -> f64 {
        self.max_re().max(self.max_im())
    }
}

pub fn variational_gradient(ctx: &ActionContext, curve: &DiscreteCurve, fixed: FixedSet, delta: f64) -> VariationalGradient {
    variational_gradient_with(ctx, curve, fixed, delta, Exec::default())
}

/// Central differences of the action in every free node coordinate; only the
/// terms that read the perturbed node are re-evaluated.
pub fn variational_gradient_with(ctx: &ActionContext, curve: &DiscreteCurve, fixed: FixedSet, delta: f64, exec: Exec) -> VariationalGradient {
    let h_cache: Vec<Complex64> = par::map_slice(exec, &curve.nodes, |p| (ctx.h)(p));
    let free: Vec<bool> = (0..curve.len())
        .map(|k| !(curve.boundary[k] || (fixed == FixedSet::BoundaryAndCenter && curve.center == Some(k))))
        .collect();
    let grads: Vec<DVector<Complex64>> = par::map_range(exec, curve.len(), |k| {
        let d = curve.nodes[k].len();
        let mut g = DVector::from_element(d, Complex64::new(0.0, 0.0));
        if !free[k] || curve.dependents[k].is_empty() {
            return g;
        }
        for a in 0..d {
            let sum = |sign: f64| {
                let mut p = curve.nodes[k].clone();
                p[a] += sign * delta;
                let hv = (ctx.h)(&p);
                curve.dependents[k]
                    .iter()
                    .map(|&t| curve.term_value(ctx, &curve.terms[t], &h_cache, Some((k, &p, hv))))
                    .sum::<Complex64>()
            };
            g[a] = curve.norm * (sum(1.0) - sum(-1.0)) / (2.0 * delta);
        }
        g
    });
    VariationalGradient {
        re: grads.iter().map(|g| g.map(|c| c.re)).collect(),
        im: grads.iter().map(|g| g.map(|c| c.im)).collect(),
        free,
    }
}
