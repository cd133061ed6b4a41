//! Built-in example systems.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{PhhsError, Result};
use crate::expr::{compile, BoundExpr, Scope};
use crate::hamiltonian::{standard_omega_r, ClosedForm, CovectorField, PhhsModel, Tolerances};
use crate::tensor::{check_acs, check_anticompat, gradient, max_abs, standard_j, MatrixField, Point, ScalarField, ThreeForm, TwoFormField};

/// Uniform random points in the cube `center ± half`, reproducible from `seed`.
pub fn random_samples(center: &[f64], half: f64, count: usize, seed: u64) -> Vec<Point> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| center.iter().map(|c| c + rng.random_range(-half..half)).collect()).collect()
}

/// `Λ_R = Σ (x_{n+j} dx_j − y_{n+j} dy_j)`, a primitive of the standard `Ω_R`.
pub fn standard_lambda(n: usize) -> CovectorField {
    let m = 2 * n;
    CovectorField::new(2 * m, move |p| {
        let mut l = DVector::zeros(2 * m);
        for j in 0..n {
            l[j] = p[n + j];
            l[m + j] = -p[m + n + j];
        }
        l
    })
}

fn real_part(e: &BoundExpr) -> ScalarField {
    let e = e.clone();
    ScalarField::new(2 * e.dim(), move |p| e.eval_re(p))
}

fn imag_part(e: &BoundExpr) -> ScalarField {
    let e = e.clone();
    ScalarField::new(2 * e.dim(), move |p| e.eval(p).im)
}

/// Largest `‖dH∘J − i dH‖` over `samples` for the standard `J`.
pub fn holomorphy_residual(h: &BoundExpr, samples: &[Point]) -> f64 {
    let j = standard_j(h.dim());
    let (hr, hi) = (real_part(h), imag_part(h));
    samples
        .iter()
        .map(|p| {
            let (gr, gi) = (gradient(&hr, p), gradient(&hi, p));
            let a = (j.transpose() * &gr + &gi).amax();
            let b = (j.transpose() * &gi - &gr).amax();
            a.max(b) / (1.0 + gr.amax().max(gi.amax()))
        })
        .fold(0.0, f64::max)
}

const HOLOMORPHY_TOL: f64 = 1e-6;

fn standard_model(name: &str, n: usize, h: BoundExpr, base: Point, samples: Vec<Point>) -> Result<PhhsModel> {
    let res = holomorphy_residual(&h, &samples);
    if !(res <= HOLOMORPHY_TOL) {
        return Err(PhhsError::NotHolomorphic(res));
    }
    let m = 2 * n;
    Ok(PhhsModel {
        name: name.to_string(),
        m,
        j: MatrixField::constant_matrix(standard_j(m)),
        omega_r: TwoFormField::constant_matrix(standard_omega_r(n)),
        h_r: real_part(&h),
        lambda_r: Some(standard_lambda(n)),
        base_point: base,
        closed_form: None,
        samples,
        tol: Tolerances::default(),
        h_holomorphic: Some(h),
        lattice: None,
    })
}

/// `C^{2n}` with `Ω = Σ dP_j∧dQ_j`, `Q_j = z_j`, `P_j = z_{n+j}` and holomorphic `H`.
pub fn build_standard_hhs(n: usize, h: &str) -> Result<PhhsModel> {
    build_standard_hhs_at(n, h, &vec![0.0; 4 * n], 0.5)
}

/// As [`build_standard_hhs`], with diagnostics sampled on `base ± half`.
pub fn build_standard_hhs_at(n: usize, h: &str, base: &[f64], half: f64) -> Result<PhhsModel> {
    if n == 0 || base.len() != 4 * n {
        return Err(PhhsError::Dimension(format!("standard HHS with n={n} needs {} coordinates", 4 * n)));
    }
    let e = compile(h, &Scope::canonical(n))?;
    standard_model("standard", n, e, base.to_vec(), random_samples(base, half, 24, 11))
}

/// Start point of the central problem: `(Q, P) = (1, ½)`.
pub const CENTRAL_X0: [f64; 4] = [1.0, 0.5, 0.0, 0.0];

/// `H = P²/2 − 1/(8Q²)` on `Q ≠ 0`, coordinates `(Re Q, Re P, Im Q, Im P)`.
pub fn build_central_problem() -> Result<PhhsModel> {
    let e = compile("P^2/2 - 1/(8*Q^2)", &Scope::canonical(1))?;
    let mut model = standard_model("central", 1, e, CENTRAL_X0.to_vec(), random_samples(&CENTRAL_X0, 0.3, 24, 12))?;
    model.closed_form = Some(Arc::new(CentralClosedForm));
    Ok(model)
}

pub fn central_energy(q: Complex64, p: Complex64) -> Complex64 {
    p * p / 2.0 - 1.0 / (8.0 * q * q)
}

/// Closed-form continuation of the central problem:
/// `Q² = Q₀² + 2Q₀P₀z + 2E₀z²`, `P = (Q₀P₀ + 2E₀z)/Q`, branch chosen by continuity.
#[derive(Debug, Clone, Copy)]
pub struct CentralClosedForm;

/// Largest step along the path between branch choices.
pub const BRANCH_STEP: f64 = 0.05;

impl CentralClosedForm {
    pub fn continue_pair(q0: Complex64, p0: Complex64, path: &[Complex64]) -> Result<(Complex64, Complex64)> {
        let e0 = central_energy(q0, p0);
        let q_sq = |z: Complex64| q0 * q0 + 2.0 * q0 * p0 * z + 2.0 * e0 * z * z;
        let (mut q, mut z) = (q0, Complex64::new(0.0, 0.0));
        let mut steps = 0;
        for w in path.windows(2) {
            let dz = w[1] - w[0];
            let k = (dz.norm() / BRANCH_STEP).ceil().max(1.0) as usize;
            for _ in 0..k {
                z += dz / k as f64;
                steps += 1;
                let r = q_sq(z).sqrt();
                if r.norm() < 1e-12 {
                    return Err(PhhsError::NonFiniteState { steps });
                }
                q = if (r - q).norm() <= (r + q).norm() { r } else { -r };
            }
        }
        Ok((q, (q0 * p0 + 2.0 * e0 * z) / q))
    }
}

impl ClosedForm for CentralClosedForm {
    fn eval(&self, x0: &[f64], path: &[Complex64]) -> Result<Point> {
        let q0 = Complex64::new(x0[0], x0[2]);
        let p0 = Complex64::new(x0[1], x0[3]);
        let (q, p) = Self::continue_pair(q0, p0, path)?;
        Ok(vec![q.re, p.re, q.im, p.im])
    }
}

/// A full-rank lattice in `C^n ≅ R^{2n}`; generators use the `(x, y)` ordering.
#[derive(Debug, Clone, PartialEq)]
pub struct Lattice {
    generators: DMatrix<f64>,
    inverse: DMatrix<f64>,
}

impl Lattice {
    pub fn new(generators: Vec<Vec<f64>>) -> Result<Self> {
        let d = generators.len();
        if d == 0 || d % 2 != 0 || generators.iter().any(|g| g.len() != d) {
            return Err(PhhsError::Dimension("a lattice in C^n needs 2n generators of length 2n".into()));
        }
        let g = DMatrix::from_fn(d, d, |r, c| generators[c][r]);
        let inverse = g
            .clone()
            .try_inverse()
            .filter(|_| g.determinant().abs() > 1e-12)
            .ok_or_else(|| PhhsError::Invalid("lattice generators are linearly dependent".into()))?;
        Ok(Lattice { generators: g, inverse })
    }

    /// `Z^n + i Z^n`.
    pub fn standard(n: usize) -> Self {
        Lattice { generators: DMatrix::identity(2 * n, 2 * n), inverse: DMatrix::identity(2 * n, 2 * n) }
    }

    /// Complex dimension `n`.
    pub fn n(&self) -> usize {
        self.generators.nrows() / 2
    }

    pub fn generator(&self, k: usize) -> Vec<Complex64> {
        let n = self.n();
        (0..n).map(|j| Complex64::new(self.generators[(j, k)], self.generators[(n + j, k)])).collect()
    }

    /// Representative of `q` with lattice coordinates in `[−½, ½)`.
    pub fn reduce(&self, q: &[f64]) -> Vec<f64> {
        let v = DVector::from_column_slice(q);
        let c = (&self.inverse * &v).map(|x| x.round());
        (v - &self.generators * c).as_slice().to_vec()
    }

    /// Lattice point with integer coordinates `k`, as a complex vector.
    pub fn point(&self, k: &[i64]) -> Vec<Complex64> {
        let n = self.n();
        let v = &self.generators * DVector::from_iterator(2 * n, k.iter().map(|&x| x as f64));
        (0..n).map(|j| Complex64::new(v[j], v[n + j])).collect()
    }
}

/// `T*(C^n/Γ)` with `H` a function of the momenta only.
pub fn build_torus_model(lattice: Lattice, h: &str) -> Result<PhhsModel> {
    let n = lattice.n();
    let m = 2 * n;
    let e = compile(h, &Scope::canonical(n))?;
    let base = vec![0.0; 2 * m];
    let samples = random_samples(&base, 0.5, 24, 13);
    let (hr, hi) = (real_part(&e), imag_part(&e));
    let mut q_dep = 0.0_f64;
    for p in &samples {
        let (gr, gi) = (gradient(&hr, p), gradient(&hi, p));
        for k in (0..n).chain(m..m + n) {
            q_dep = q_dep.max(gr[k].abs()).max(gi[k].abs());
        }
    }
    if q_dep > 1e-8 {
        return Err(PhhsError::QDependence(q_dep));
    }
    let mut model = standard_model("torus", n, e, base, samples)?;
    model.lattice = Some(lattice);
    Ok(model)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OrbitKind {
    Constant,
    /// No period found in the search box; not a proof of aperiodicity.
    Aperiodic,
    Cylinder,
    Torus,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrbitClass {
    pub kind: OrbitKind,
    /// Up to two `R`-independent periods, shortest first.
    pub generators_found: Vec<Complex64>,
    /// The bounded search cannot exclude further periods.
    pub caveat: bool,
}

/// Classify `z ↦ Q⁰ + z v` on `C^n/Γ` for `H = Σ P_j²/2`, where `v = P⁰`.
pub fn classify_torus_orbit(p0: &[Complex64], lattice: &Lattice, search_radius: i64) -> OrbitClass {
    classify_with_velocity(p0, lattice, search_radius)
}

/// Periods `z` with `z v ∈ Γ`, found among lattice points with coordinates in `[−R, R]`.
pub fn classify_with_velocity(v: &[Complex64], lattice: &Lattice, search_radius: i64) -> OrbitClass {
    let vv: f64 = v.iter().map(|c| c.norm_sqr()).sum();
    if vv.sqrt() < 1e-14 {
        return OrbitClass { kind: OrbitKind::Constant, generators_found: Vec::new(), caveat: false };
    }
    let d = 2 * lattice.n();
    let r = search_radius.max(1);
    let mut periods: Vec<Complex64> = Vec::new();
    let mut k = vec![-r; d];
    loop {
        if k.iter().any(|&x| x != 0) {
            let w = lattice.point(&k);
            let z: Complex64 = v.iter().zip(&w).map(|(a, b)| a.conj() * b).sum::<Complex64>() / vv;
            let res: f64 = v.iter().zip(&w).map(|(a, b)| (z * a - b).norm_sqr()).sum::<f64>().sqrt();
            if res <= 1e-9 {
                periods.push(z);
            }
        }
        // Odometer increment over [−r, r]^d.
        let mut idx = 0;
        while idx < d && k[idx] == r {
            k[idx] = -r;
            idx += 1;
        }
        if idx == d {
            break;
        }
        k[idx] += 1;
    }
    periods.sort_by(|a, b| a.norm().total_cmp(&b.norm()));
    let mut basis: Vec<Complex64> = Vec::new();
    for z in periods {
        let independent = match basis.as_slice() {
            [] => true,
            [b] => (b.re * z.im - b.im * z.re).abs() > 1e-9 * b.norm() * z.norm(),
            _ => false,
        };
        if independent {
            basis.push(z);
        }
    }
    let kind = match basis.len() {
        0 => OrbitKind::Aperiodic,
        1 => OrbitKind::Cylinder,
        _ => OrbitKind::Torus,
    };
    OrbitClass { kind, caveat: basis.len() < 2, generators_found: basis }
}

/// Real part of an expression in `m` complex coordinates as a scalar field.
pub fn real_field(src: &str, m: usize) -> Result<ScalarField> {
    Ok(real_part(&compile(src, &Scope::new(m))?))
}

/// `I_g` on `C²` for `f, h`: `∂x₁ ↦ f∂x₂`, `∂x₂ ↦ −f⁻¹∂x₁`, `∂y₁ ↦ −h∂y₂`, `∂y₂ ↦ h⁻¹∂y₁`.
pub fn i_g_matrix(f: f64, h: f64) -> DMatrix<f64> {
    let mut i = DMatrix::zeros(4, 4);
    i[(1, 0)] = f;
    i[(0, 1)] = -1.0 / f;
    i[(3, 2)] = -h;
    i[(2, 3)] = 1.0 / h;
    i
}

/// The proper PHHS on `C²` with `J_g = I_g J I_g`, `Ω_R = dx₂∧dx₁ − dy₂∧dy₁`,
/// `Λ_R = x₂dx₁ − y₂dy₁`.
pub fn build_proper_phhs(f: &str, h: &str, h_r: &str) -> Result<PhhsModel> {
    let (ff, hh) = (real_field(f, 2)?, real_field(h, 2)?);
    let base = vec![0.0; 4];
    let samples = random_samples(&base, 0.5, 24, 14);
    for p in &samples {
        if ff.eval(p).abs() < 1e-12 || hh.eval(p).abs() < 1e-12 {
            return Err(PhhsError::ZeroDenominator);
        }
    }
    let i_field = {
        let (ff, hh) = (ff.clone(), hh.clone());
        MatrixField::new(4, move |p| i_g_matrix(ff.eval(p), hh.eval(p)))
    };
    let omega = TwoFormField::constant_matrix(standard_omega_r(1));
    let j0 = standard_j(2);
    let j = {
        let i_field = i_field.clone();
        MatrixField::new(4, move |p| {
            let i = i_field.eval(p);
            &i * &j0 * &i
        })
    };
    for p in &samples {
        let i = i_field.eval(p);
        let compat = max_abs(&(i.transpose() * omega.eval(p) * &i - omega.eval(p)));
        let acs = check_acs(&i_field, p);
        if acs > 1e-9 || compat > 1e-9 {
            return Err(PhhsError::Invalid(format!("I_g is not an Ω_R-compatible complex structure (residual {:.3e})", acs.max(compat))));
        }
    }
    Ok(PhhsModel {
        name: "proper".into(),
        m: 2,
        j,
        omega_r: omega,
        h_r: real_field(h_r, 2)?,
        lambda_r: Some(standard_lambda(1)),
        base_point: base,
        closed_form: None,
        samples,
        tol: Tolerances::default(),
        h_holomorphic: None,
        lattice: None,
    })
}

/// An almost complex structure together with the real form it is paired with.
#[derive(Debug, Clone)]
pub struct PhsmData {
    pub j: MatrixField,
    pub omega_r: TwoFormField,
}

pub fn rotation_matrix(phi: f64) -> DMatrix<f64> {
    let (c, s) = (phi.cos(), phi.sin());
    // Columns are the images of ∂x₁, ∂x₂, ∂y₁, ∂y₂.
    DMatrix::from_row_slice(4, 4, &[0.0, 0.0, -c, s, 0.0, 0.0, -s, -c, c, s, 0.0, 0.0, -s, c, 0.0, 0.0])
}

/// `J_φ` on `C²` obtained by rotating the axes by the angle function `φ`.
pub fn build_rotation_family(phi: &str) -> Result<PhsmData> {
    let f = real_field(phi, 2)?;
    let j = MatrixField::new(4, move |p| rotation_matrix(f.eval(p)));
    let omega_r = TwoFormField::constant_matrix(standard_omega_r(1));
    for p in random_samples(&[0.0; 4], 0.5, 16, 15) {
        let r = check_anticompat(&omega_r, &j, &p).max(check_acs(&j, &p));
        if r > 1e-9 {
            return Err(PhhsError::NotAnticompatible(r));
        }
    }
    Ok(PhsmData { j, omega_r })
}

/// Hamiltonian of a deformed standard system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DeformationHamiltonian {
    /// `H = z_{2n}`.
    Regular,
    Constant(f64),
}

/// `J^ε` matrix at a point with `r = 1 + ε² f`.
pub fn deformed_j(n: usize, r: f64) -> DMatrix<f64> {
    let m = 2 * n;
    let mut j = standard_j(m);
    j[(m, 0)] = r;
    j[(0, m)] = -1.0 / r;
    j[(m + n, n)] = 1.0 / r;
    j[(n, m + n)] = -r;
    j
}

/// Default bump `exp(1 − 1/(1 − |x|²))` on the unit ball of `R^{4n}`.
pub fn default_bump(n: usize) -> String {
    let m = 2 * n;
    let terms: Vec<String> = (1..=m).flat_map(|k| [format!("x{k}^2"), format!("y{k}^2")]).collect();
    format!("bump({})", terms.join(" + "))
}

/// The standard HHS on `C^{2n}` with `J` deformed by `r = 1 + ε² f`.
pub fn build_deformation(epsilon: f64, f: &str, n: usize, hamiltonian: DeformationHamiltonian) -> Result<PhhsModel> {
    if n == 0 {
        return Err(PhhsError::Dimension("deformation needs n ≥ 1".into()));
    }
    if n == 1 && hamiltonian == DeformationHamiltonian::Regular {
        return Err(PhhsError::Dimension("the deformation with H = z_{2n} needs n > 1; use a constant H for n = 1".into()));
    }
    let m = 2 * n;
    let ff = real_field(f, m)?;
    let j = MatrixField::new(2 * m, move |p| deformed_j(n, 1.0 + epsilon * epsilon * ff.eval(p)));
    let (h_r, h_holomorphic) = match hamiltonian {
        DeformationHamiltonian::Regular => {
            let e = compile(&format!("z{m}"), &Scope::new(m))?;
            (real_part(&e), Some(e))
        }
        DeformationHamiltonian::Constant(c) => (ScalarField::constant(2 * m, c), None),
    };
    let base = vec![0.0; 2 * m];
    Ok(PhhsModel {
        name: format!("deformation(eps={epsilon})"),
        m,
        j,
        omega_r: TwoFormField::constant_matrix(standard_omega_r(n)),
        h_r,
        lambda_r: Some(standard_lambda(n)),
        samples: random_samples(&base, 0.5, 24, 16),
        base_point: base,
        closed_form: None,
        tol: Tolerances::default(),
        h_holomorphic,
        lattice: None,
    })
}

/// `ε² df∧(dy_{n+1}∧dx₁ − r⁻² dx_{n+1}∧dy₁)` at `p`.
pub fn deformation_d_omega_formula(epsilon: f64, f: &ScalarField, n: usize, p: &[f64]) -> ThreeForm {
    let m = 2 * n;
    let d = 2 * m;
    let r = 1.0 + epsilon * epsilon * f.eval(p);
    let df = gradient(f, p) * (epsilon * epsilon);
    let mut beta = DMatrix::zeros(d, d);
    beta[(m + n, 0)] = 1.0;
    beta[(0, m + n)] = -1.0;
    beta[(n, m)] = -1.0 / (r * r);
    beta[(m, n)] = 1.0 / (r * r);
    let mut out = ThreeForm::zeros(d);
    for a in 0..d {
        for b in a + 1..d {
            for c in b + 1..d {
                let v = df[a] * beta[(b, c)] - df[b] * beta[(a, c)] + df[c] * beta[(a, b)];
                out.set(a, b, c, v);
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HyperkahlerReport {
    /// `‖I² + 1‖`.
    pub i_squared: f64,
    /// `‖IJ + JI‖`.
    pub anticommutator: f64,
    /// `‖IJI − J‖`.
    pub j_delta_minus_j: f64,
}

/// Evaluate the `I_g` identities for constant `f, h` on `C²`.
pub fn hyperkahler_check(f: f64, h: f64) -> HyperkahlerReport {
    let i = i_g_matrix(f, h);
    let j = standard_j(2);
    HyperkahlerReport {
        i_squared: max_abs(&(&i * &i + DMatrix::identity(4, 4))),
        anticommutator: max_abs(&(&i * &j + &j * &i)),
        j_delta_minus_j: max_abs(&(&i * &j * &i - &j)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::nijenhuis;

    #[test]
    fn standard_rejects_antiholomorphic() {
        assert!(build_standard_hhs(1, "Q1").is_ok());
        assert!(matches!(build_standard_hhs(1, "conj(Q1)"), Err(PhhsError::NotHolomorphic(_))));
    }

    #[test]
    fn central_closed_form_real_axis() {
        let q0 = Complex64::new(1.0, 0.0);
        let p0 = Complex64::new(0.5, 0.0);
        assert!(central_energy(q0, p0).norm() < 1e-15);
        let (q, p) = CentralClosedForm::continue_pair(q0, p0, &[Complex64::new(0.0, 0.0), Complex64::new(3.0, 0.0)]).unwrap();
        assert!((q - 2.0).norm() < 1e-14 && (p - 0.25).norm() < 1e-14);
    }

    #[test]
    fn torus_rejects_q_dependence() {
        assert!(build_torus_model(Lattice::standard(1), "P^2/2").is_ok());
        assert!(matches!(build_torus_model(Lattice::standard(1), "Q1"), Err(PhhsError::QDependence(_))));
    }

    #[test]
    fn lattice_reduction() {
        let l = Lattice::new(vec![vec![1.0, 0.0], vec![0.5, 1.0]]).unwrap();
        let r = l.reduce(&[2.6, 1.2]);
        // 2.6 + 1.2i − (2·1 + 1·(0.5 + i)) = 0.1 + 0.2i.
        assert!((r[0] - 0.1).abs() < 1e-12 && (r[1] - 0.2).abs() < 1e-12);
        assert!(Lattice::new(vec![vec![1.0, 0.0], vec![2.0, 0.0]]).is_err());
    }

    #[test]
    fn orbit_classes() {
        let one = Complex64::new(1.0, 0.0);
        let l1 = Lattice::standard(1);
        let c = classify_torus_orbit(&[one], &l1, 3);
        assert_eq!(c.kind, OrbitKind::Torus);
        assert!(!c.caveat);
        assert_eq!(classify_torus_orbit(&[Complex64::new(0.0, 0.0)], &l1, 3).kind, OrbitKind::Constant);
        let c = classify_torus_orbit(&[one, Complex64::new(2f64.sqrt(), 0.0)], &Lattice::standard(2), 3);
        assert_eq!(c.kind, OrbitKind::Aperiodic);
        assert!(c.caveat);
        let c = classify_torus_orbit(&[one, one], &Lattice::standard(2), 3);
        assert_eq!(c.kind, OrbitKind::Torus);
    }

    #[test]
    fn rotation_family_is_anticompatible() {
        let d = build_rotation_family("x1").unwrap();
        let zero = build_rotation_family("0").unwrap();
        assert_eq!(zero.j.eval(&[0.3; 4]), standard_j(2));
        assert!(nijenhuis(&d.j, &[0.1, 0.2, 0.3, 0.4]).max_abs() > 0.05);
        assert!(nijenhuis(&build_rotation_family("0.7").unwrap().j, &[0.1; 4]).max_abs() < 1e-8);
    }

    #[test]
    fn deformation_structure() {
        assert!(matches!(
            build_deformation(0.5, &default_bump(1), 1, DeformationHamiltonian::Regular),
            Err(PhhsError::Dimension(_))
        ));
        let model = build_deformation(0.5, &default_bump(2), 2, DeformationHamiltonian::Regular).unwrap();
        for p in &model.samples {
            assert!(check_acs(&model.j, p) < 1e-12);
            assert!(check_anticompat(&model.omega_r, &model.j, p) < 1e-12);
        }
    }

    #[test]
    fn hyperkahler_cases() {
        let r = hyperkahler_check(1.0, 1.0);
        assert!(r.anticommutator < 1e-15 && r.j_delta_minus_j < 1e-15 && r.i_squared < 1e-15);
        let r = hyperkahler_check(2.0, 1.0);
        assert!(r.i_squared < 1e-15 && r.anticommutator > 0.1);
    }
}
