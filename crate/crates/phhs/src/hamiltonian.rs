//! PHSM/PHHS assembly from `(J, Ω_R, H_R)`.
//!
//! Sign conventions: Hamiltonian fields solve `ι_X ω = −dH`, which with
//! `ω(u, v) = uᵀ ω v` reads `ω X = ∇H`. On `ω = dp∧dq` this gives
//! `X_{p²/2} = p ∂_q` and `{q, p} = ω(X_q, X_p) = −1`. The imaginary
//! Hamiltonian is normalized by `Ω_R(JX, ·) = dH_I` and `H_I(base) = 0`.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{PhhsError, Result};
use crate::expr::BoundExpr;
use crate::models::Lattice;
use crate::par::{self, Exec};
use crate::quad::composite_gl;
use crate::tensor::{
    check_acs, check_anticompat, exterior_derivative_2form, gradient, lie_bracket, lie_derivative_j, max_abs,
    max_abs_vec, nijenhuis, MatrixField, Point, ScalarField, TwoFormField, VectorField,
};

/// Components `α_b` of a one-form.
pub type CovectorField = VectorField;

/// An exact solution hook: the point reached from `x0` by continuing along the
/// complex-time polyline `path` (starting at time 0).
pub trait ClosedForm: Send + Sync {
    fn eval(&self, x0: &[f64], path: &[Complex64]) -> Result<Point>;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// For fields given in closed form.
    pub exact: f64,
    /// For quantities differentiated twice numerically.
    pub derived: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { exact: 1e-6, derived: 1e-3 }
    }
}

/// One Hamiltonian system under study.
#[derive(Clone)]
pub struct PhhsModel {
    pub name: String,
    /// Complex dimension; points have `2m` real coordinates.
    pub m: usize,
    pub j: MatrixField,
    pub omega_r: TwoFormField,
    pub h_r: ScalarField,
    pub lambda_r: Option<CovectorField>,
    pub base_point: Point,
    pub closed_form: Option<Arc<dyn ClosedForm>>,
    /// Points at which the diagnostics are evaluated.
    pub samples: Vec<Point>,
    pub tol: Tolerances,
    /// The holomorphic Hamiltonian when the model has one.
    pub h_holomorphic: Option<BoundExpr>,
    /// Period lattice acting on the `Q` coordinates.
    pub lattice: Option<Lattice>,
}

impl PhhsModel {
    /// Euclidean distance, with `Q` differences reduced modulo the lattice if any.
    pub fn distance(&self, a: &[f64], b: &[f64]) -> f64 {
        let mut d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
        if let Some(l) = &self.lattice {
            let n = self.m / 2;
            let q: Vec<f64> = (0..n).map(|k| d[k]).chain((0..n).map(|k| d[self.m + k])).collect();
            let r = l.reduce(&q);
            for k in 0..n {
                d[k] = r[k];
                d[self.m + k] = r[n + k];
            }
        }
        d.iter().map(|x| x * x).sum::<f64>().sqrt()
    }
}

impl std::fmt::Debug for PhhsModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PhhsModel")
            .field("name", &self.name)
            .field("m", &self.m)
            .field("base_point", &self.base_point)
            .field("samples", &self.samples.len())
            .finish()
    }
}

/// Tensor grid of `n` points per axis on the cube `center ± half`.
pub fn cube_grid(center: &[f64], half: f64, n: usize) -> Vec<Point> {
    let d = center.len();
    let total = n.pow(d as u32);
    let coord = |k: usize| if n == 1 { 0.0 } else { -half + 2.0 * half * k as f64 / (n - 1) as f64 };
    (0..total)
        .map(|mut idx| {
            let mut p = center.to_vec();
            for a in 0..d {
                p[a] += coord(idx % n);
                idx /= n;
            }
            p
        })
        .collect()
}

/// `Ω_I = −Ω_R(J·, ·)`, i.e. the matrix `−Jᵀ Ω_R`.
pub fn omega_i_from(omega_r: &TwoFormField, j: &MatrixField) -> TwoFormField {
    let (w, j) = (omega_r.clone(), j.clone());
    TwoFormField::new(w.dim(), move |p| -(j.eval(p).transpose() * w.eval(p))).with_fd(omega_r.fd)
}

/// Solve `ω(p) X = ∇H(p)`.
pub fn hamiltonian_vector_at(omega: &TwoFormField, h: &ScalarField, p: &[f64]) -> Result<DVector<f64>> {
    let w = omega.eval(p);
    let g = gradient(h, p);
    w.lu().solve(&g).filter(|x| x.iter().all(|v| v.is_finite())).ok_or(PhhsError::SingularForm)
}

/// The Hamiltonian vector field as a field; evaluates to NaN where `ω` is singular.
pub fn hamiltonian_vector_field(omega: &TwoFormField, h: &ScalarField) -> VectorField {
    let (w, hh) = (omega.clone(), h.clone());
    let n = omega.dim();
    VectorField::new(n, move |p| {
        hamiltonian_vector_at(&w, &hh, p).unwrap_or_else(|_| DVector::from_element(n, f64::NAN))
    })
    .with_fd(h.fd)
}

/// `∫_a^b α` along the straight segment, composite 16-point Gauss–Legendre.
pub fn line_integral(alpha: &CovectorField, a: &[f64], b: &[f64]) -> f64 {
    let d = DVector::from_iterator(a.len(), a.iter().zip(b).map(|(x, y)| y - x));
    let len = d.norm();
    if len == 0.0 {
        return 0.0;
    }
    let panels = (len / 0.25).ceil().max(1.0) as usize;
    let mut q = a.to_vec();
    composite_gl(0.0, 1.0, panels, 16)
        .into_iter()
        .map(|(u, w)| {
            for (k, qk) in q.iter_mut().enumerate() {
                *qk = a[k] + u * d[k];
            }
            w * alpha.eval(&q).dot(&d)
        })
        .sum()
}

/// Number of random loops used by the closedness diagnostic.
pub const CLOSEDNESS_TRIANGLES: usize = 8;
/// Diameter of the diagnostic triangles.
pub const CLOSEDNESS_DIAMETER: f64 = 0.2;
/// Loop residual allowed per unit area.
pub const CLOSEDNESS_THRESHOLD: f64 = 1e-4;

/// Largest `|∮α| / area` over random equilateral triangles through `p`.
pub fn closedness_residual(alpha: &CovectorField, p: &[f64]) -> f64 {
    let n = p.len();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_1f0e);
    let mut worst = 0.0_f64;
    for _ in 0..CLOSEDNESS_TRIANGLES {
        let mut u = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
        let mut v = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
        u /= u.norm();
        v -= &u * u.dot(&v);
        v /= v.norm();
        let s = CLOSEDNESS_DIAMETER;
        let a = p.to_vec();
        let b: Vec<f64> = (0..n).map(|k| p[k] + s * u[k]).collect();
        let c: Vec<f64> = (0..n).map(|k| p[k] + s * (0.5 * u[k] + 0.75_f64.sqrt() * v[k])).collect();
        let area = 0.75_f64.sqrt() / 2.0 * s * s;
        let loop_int = line_integral(alpha, &a, &b) + line_integral(alpha, &b, &c) + line_integral(alpha, &c, &a);
        worst = worst.max(loop_int.abs() / area);
    }
    worst
}

/// Primitive of `α` normalized at `base`, checked for closedness near `p`.
pub fn primitive_scalar(alpha: &CovectorField, base: &[f64], p: &[f64]) -> Result<f64> {
    let r = closedness_residual(alpha, p);
    if r > CLOSEDNESS_THRESHOLD {
        return Err(PhhsError::NonClosedForm { residual: r, threshold: CLOSEDNESS_THRESHOLD });
    }
    Ok(line_integral(alpha, base, p))
}

/// `{F, G} = ω(X_F, X_G)`.
pub fn poisson_bracket(f: &ScalarField, g: &ScalarField, omega: &TwoFormField, p: &[f64]) -> Result<f64> {
    let xf = hamiltonian_vector_at(omega, f, p)?;
    let xg = hamiltonian_vector_at(omega, g, p)?;
    Ok((xf.transpose() * omega.eval(p) * xg)[(0, 0)])
}

/// The fields derived from a PHHS.
#[derive(Clone, Debug)]
pub struct HamiltonianFields {
    pub m: usize,
    pub j: MatrixField,
    pub omega_r: TwoFormField,
    pub omega_i: TwoFormField,
    pub h_r: ScalarField,
    pub h_i: ScalarField,
    /// `X = X^{Ω_R}_{H_R}`.
    pub x: VectorField,
    /// `J X`.
    pub jx: VectorField,
    /// `Ω_R(JX, ·)`, whose primitive is `H_I`.
    pub alpha: CovectorField,
}

impl HamiltonianFields {
    /// `H = H_R + i H_I`.
    pub fn hamiltonian(&self, p: &[f64]) -> Complex64 {
        Complex64::new(self.h_r.eval(p), self.h_i.eval(p))
    }
}

/// Maxima of the assembly diagnostics over the model samples.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AssemblyReport {
    pub acs: f64,
    pub anticompat: f64,
    pub closedness: f64,
    /// `‖Ω_R X − ∇H_R‖`.
    pub defining_residual: f64,
    /// `‖[X, JX]‖`.
    pub bracket: f64,
    /// `‖dH∘J − i dH‖` (both real components).
    pub pseudo_holomorphy: f64,
    /// `‖X^{Ω_I}_{H_I} − X‖`.
    pub cr_imag_imag: f64,
    /// `‖X^{Ω_I}_{H_R} − JX‖`.
    pub cr_imag_real: f64,
    /// `‖−X^{Ω_R}_{H_I} − JX‖`.
    pub cr_real_imag: f64,
    /// `|{H_R, H_I}|`.
    pub poisson: f64,
    /// `|dH_R(X)|`, `|dH_I(X)|`, `|dH_R(JX)|`.
    pub energy: f64,
    pub tolerance: f64,
}

impl AssemblyReport {
    pub fn worst_identity(&self) -> f64 {
        [
            self.bracket,
            self.pseudo_holomorphy,
            self.cr_imag_imag,
            self.cr_imag_real,
            self.cr_real_imag,
            self.poisson,
            self.energy,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }

    pub fn passed(&self) -> bool {
        self.worst_identity() <= self.tolerance && self.defining_residual <= self.tolerance
    }
}

/// Build the Hamiltonian fields of `model` and record the diagnostic suite.
pub fn assemble_phhs(model: &PhhsModel) -> Result<(HamiltonianFields, AssemblyReport)> {
    assemble_phhs_with(model, Exec::default())
}

pub fn assemble_phhs_with(model: &PhhsModel, exec: Exec) -> Result<(HamiltonianFields, AssemblyReport)> {
    let n = 2 * model.m;
    if model.j.dim() != n || model.omega_r.dim() != n || model.h_r.dim() != n || model.base_point.len() != n {
        return Err(PhhsError::Dimension(format!("model {} expects {} real coordinates", model.name, n)));
    }
    let mut rep = AssemblyReport { tolerance: model.tol.derived, ..Default::default() };
    for p in &model.samples {
        rep.acs = rep.acs.max(check_acs(&model.j, p));
        rep.anticompat = rep.anticompat.max(check_anticompat(&model.omega_r, &model.j, p));
    }
    if rep.acs > model.tol.exact {
        return Err(PhhsError::NotAlmostComplex(rep.acs));
    }
    if rep.anticompat > model.tol.exact {
        return Err(PhhsError::NotAnticompatible(rep.anticompat));
    }

    let x = hamiltonian_vector_field(&model.omega_r, &model.h_r);
    let jx = {
        let (j, x) = (model.j.clone(), x.clone());
        VectorField::new(n, move |p| j.eval(p) * x.eval(p))
    };
    let alpha = {
        let (w, jx) = (model.omega_r.clone(), jx.clone());
        CovectorField::new(n, move |p| w.eval(p).transpose() * jx.eval(p))
    };
    let closed: Vec<f64> = par::map_slice(exec, &model.samples, |p| closedness_residual(&alpha, p));
    rep.closedness = closed.iter().cloned().fold(0.0, f64::max);
    if rep.closedness > CLOSEDNESS_THRESHOLD {
        return Err(PhhsError::NonClosedForm { residual: rep.closedness, threshold: CLOSEDNESS_THRESHOLD });
    }
    let h_i = {
        let (alpha, base) = (alpha.clone(), model.base_point.clone());
        ScalarField::new(n, move |p| line_integral(&alpha, &base, p))
    };
    let omega_i = omega_i_from(&model.omega_r, &model.j);
    let fields = HamiltonianFields {
        m: model.m,
        j: model.j.clone(),
        omega_r: model.omega_r.clone(),
        omega_i,
        h_r: model.h_r.clone(),
        h_i,
        x,
        jx,
        alpha,
    };

    let per_point: Vec<Result<[f64; 9]>> = par::map_slice(exec, &model.samples, |p| point_diagnostics(&fields, p));
    for r in per_point {
        let v = r?;
        rep.defining_residual = rep.defining_residual.max(v[0]);
        rep.bracket = rep.bracket.max(v[1]);
        rep.pseudo_holomorphy = rep.pseudo_holomorphy.max(v[2]);
        rep.cr_imag_imag = rep.cr_imag_imag.max(v[3]);
        rep.cr_imag_real = rep.cr_imag_real.max(v[4]);
        rep.cr_real_imag = rep.cr_real_imag.max(v[5]);
        rep.poisson = rep.poisson.max(v[6]);
        rep.energy = rep.energy.max(v[7]).max(v[8]);
    }
    Ok((fields, rep))
}

fn point_diagnostics(f: &HamiltonianFields, p: &[f64]) -> Result<[f64; 9]> {
    let jp = f.j.eval(p);
    let wr = f.omega_r.eval(p);
    let x = f.x.eval(p);
    let jx = f.jx.eval(p);
    let gr = gradient(&f.h_r, p);
    let gi = gradient(&f.h_i, p);
    let defining = max_abs_vec(&(&wr * &x - &gr));
    let bracket = max_abs_vec(&lie_bracket(&f.x, &f.jx, p));
    let ph = max_abs_vec(&(jp.transpose() * &gr + &gi)).max(max_abs_vec(&(jp.transpose() * &gi - &gr)));
    let x_ii = hamiltonian_vector_at(&f.omega_i, &f.h_i, p)?;
    let x_ir = hamiltonian_vector_at(&f.omega_i, &f.h_r, p)?;
    let x_ri = hamiltonian_vector_at(&f.omega_r, &f.h_i, p)?;
    let cr1 = max_abs_vec(&(x_ii - &x));
    let cr2 = max_abs_vec(&(x_ir - &jx));
    let cr3 = max_abs_vec(&(-x_ri - &jx));
    let poisson = poisson_bracket(&f.h_r, &f.h_i, &f.omega_r, p)?.abs();
    let e1 = gr.dot(&x).abs().max(gi.dot(&x).abs());
    let e2 = gr.dot(&jx).abs();
    Ok([defining, bracket, ph, cr1, cr2, cr3, poisson, e1, e2])
}

/// Per-point `(‖N_J‖, ‖dΩ_I‖)` over a sample grid.
#[derive(Debug, Clone, PartialEq)]
pub struct IntegrabilityReport {
    pub points: Vec<Point>,
    pub values: Vec<(f64, f64)>,
    pub max_nijenhuis: f64,
    pub max_d_omega_i: f64,
    pub threshold: f64,
}

impl IntegrabilityReport {
    pub fn integrable(&self) -> bool {
        self.max_nijenhuis <= self.threshold && self.max_d_omega_i <= self.threshold
    }

    /// Both quantities vanish together, or neither does, at every point.
    pub fn dichotomy_holds(&self) -> bool {
        self.values.iter().all(|(n, d)| (*n <= self.threshold) == (*d <= self.threshold))
    }
}

pub fn integrability_report(j: &MatrixField, omega_r: &TwoFormField, grid: &[Point], threshold: f64) -> IntegrabilityReport {
    integrability_report_with(j, omega_r, grid, threshold, Exec::default())
}

pub fn integrability_report_with(
    j: &MatrixField,
    omega_r: &TwoFormField,
    grid: &[Point],
    threshold: f64,
    exec: Exec,
) -> IntegrabilityReport {
    let omega_i = omega_i_from(omega_r, j);
    let values: Vec<(f64, f64)> = par::map_slice(exec, grid, |p| {
        (nijenhuis(j, p).max_abs(), exterior_derivative_2form(&omega_i, p).max_abs())
    });
    let max_nijenhuis = values.iter().map(|v| v.0).fold(0.0, f64::max);
    let max_d_omega_i = values.iter().map(|v| v.1).fold(0.0, f64::max);
    IntegrabilityReport { points: grid.to_vec(), values, max_nijenhuis, max_d_omega_i, threshold }
}

/// Per-point `(‖L_V J‖, ‖ι_V dΩ_I‖)`.
pub fn j_preserving_check(v: &VectorField, j: &MatrixField, omega_r: &TwoFormField, grid: &[Point]) -> Vec<(f64, f64)> {
    let omega_i = omega_i_from(omega_r, j);
    par::map_slice(Exec::default(), grid, |p| {
        let lie = max_abs(&lie_derivative_j(v, j, p));
        let contr = max_abs(&exterior_derivative_2form(&omega_i, p).contract(&v.eval(p)));
        (lie, contr)
    })
}

/// The standard real form `Ω_R = Σ (dx_{n+j}∧dx_j − dy_{n+j}∧dy_j)` on `C^{2n}`.
pub fn standard_omega_r(n: usize) -> DMatrix<f64> {
    let m = 2 * n;
    let mut w = DMatrix::zeros(2 * m, 2 * m);
    for k in 0..n {
        let (xq, xp, yq, yp) = (k, n + k, m + k, m + n + k);
        w[(xp, xq)] = 1.0;
        w[(xq, xp)] = -1.0;
        w[(yp, yq)] = -1.0;
        w[(yq, yp)] = 1.0;
    }
    w
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::standard_j;

    fn darboux() -> TwoFormField {
        // ω = dp∧dq on coordinates (q, p).
        TwoFormField::constant_matrix(DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]))
    }

    #[test]
    fn darboux_field_and_bracket() {
        let h = ScalarField::new(2, |p| 0.5 * p[1] * p[1]);
        let x = hamiltonian_vector_at(&darboux(), &h, &[0.3, 1.7]).unwrap();
        assert!((x[0] - 1.7).abs() < 1e-9 && x[1].abs() < 1e-9);
        let q = ScalarField::new(2, |p| p[0]);
        let pp = ScalarField::new(2, |p| p[1]);
        let b = poisson_bracket(&q, &pp, &darboux(), &[0.2, 0.1]).unwrap();
        assert!((b + 1.0).abs() < 1e-9);
        assert!(poisson_bracket(&h, &h, &darboux(), &[0.2, 0.1]).unwrap().abs() < 1e-12);
    }

    #[test]
    fn singular_form_is_reported() {
        let w = TwoFormField::constant_matrix(DMatrix::zeros(2, 2));
        let h = ScalarField::new(2, |p| p[0]);
        assert_eq!(hamiltonian_vector_at(&w, &h, &[0.0, 0.0]).unwrap_err(), PhhsError::SingularForm);
    }

    #[test]
    fn primitive_of_exact_form() {
        let alpha = CovectorField::new(2, |p| DVector::from_column_slice(&[2.0 * p[0], 0.0]));
        let v = primitive_scalar(&alpha, &[0.0, 0.0], &[1.5, -0.3]).unwrap();
        assert!((v - 2.25).abs() < 1e-12);
        let rot = CovectorField::new(2, |p| DVector::from_column_slice(&[-p[1], p[0]]));
        assert!(matches!(primitive_scalar(&rot, &[0.0, 0.0], &[0.5, 0.5]), Err(PhhsError::NonClosedForm { .. })));
    }

    #[test]
    fn standard_omega_i() {
        let j = MatrixField::constant_matrix(standard_j(2));
        let w = TwoFormField::constant_matrix(standard_omega_r(1));
        let wi = omega_i_from(&w, &j).eval(&[0.0; 4]);
        // Im(dz₂∧dz₁) = dx₂∧dy₁ + dy₂∧dx₁ in (x₁, x₂, y₁, y₂).
        let mut want = DMatrix::zeros(4, 4);
        want[(1, 2)] = 1.0;
        want[(2, 1)] = -1.0;
        want[(3, 0)] = 1.0;
        want[(0, 3)] = -1.0;
        assert_eq!(wi, want);
    }

    #[test]
    fn cube_grid_layout() {
        let g = cube_grid(&[0.0, 1.0], 0.5, 3);
        assert_eq!(g.len(), 9);
        assert_eq!(g[0], vec![-0.5, 0.5]);
        assert_eq!(g[8], vec![0.5, 1.5]);
    }
}
