//! Metrics on `R^n`, their Levi-Civita data, and the almost complex structures
//! `J_∇` on `TM` (coordinates `(x, v)`) and `J*` on `T*M` (coordinates `(q, p)`).

use nalgebra::{DMatrix, DVector};

use crate::error::{PhhsError, Result};
use crate::expr::{compile, BoundExpr, Scope};
use crate::models::holomorphy_residual;
use crate::tensor::{max_abs, nijenhuis, partial_jet, FdConfig, Field, MatrixField, Point};

/// Step used when a quantity that already contains finite differences is differentiated again.
pub const OUTER_FD: f64 = 1e-3;

/// Christoffel symbols `Γ^i_{kl}` stored as `data[(i n + k) n + l]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Christoffel {
    pub n: usize,
    pub data: Vec<f64>,
}

impl Christoffel {
    pub fn get(&self, i: usize, k: usize, l: usize) -> f64 {
        self.data[(i * self.n + k) * self.n + l]
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
    }
}

fn inverse(g: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let scale = max_abs(g).max(1e-300);
    if g.determinant().abs() <= 1e-12 * scale.powi(g.nrows() as i32) {
        return Err(PhhsError::SingularMetric);
    }
    g.clone().try_inverse().ok_or(PhhsError::SingularMetric)
}

/// `Γ^i_{kl} = ½ g^{im}(∂_k g_{ml} + ∂_l g_{mk} − ∂_m g_{kl})`.
pub fn christoffel(g: &MatrixField, x: &[f64]) -> Result<Christoffel> {
    let n = g.dim();
    let gi = inverse(&g.eval(x))?;
    let dg: Vec<DMatrix<f64>> = (0..n).map(|a| partial_jet(g, x, a)).collect();
    let mut data = vec![0.0; n * n * n];
    for i in 0..n {
        for k in 0..n {
            for l in 0..n {
                data[(i * n + k) * n + l] =
                    0.5 * (0..n).map(|m| gi[(i, m)] * (dg[k][(m, l)] + dg[l][(m, k)] - dg[m][(k, l)])).sum::<f64>();
            }
        }
    }
    Ok(Christoffel { n, data })
}

/// `(pos, neg)` eigenvalue counts of a symmetric matrix.
pub fn signature(m: &DMatrix<f64>) -> (usize, usize) {
    let sym = (m + m.transpose()) * 0.5;
    let eig = sym.symmetric_eigenvalues();
    let tol = 1e-10 * eig.amax().max(1.0);
    (eig.iter().filter(|&&e| e > tol).count(), eig.iter().filter(|&&e| e < -tol).count())
}

/// `J_∇` at `(x, v)`: `J(V_k) = H_k`, `J(H_k) = −V_k` with `H_k = ∂_{x_k} − Γ^j_{kl} v_l ∂_{v_j}`.
pub fn j_tangent(g: &MatrixField, x: &[f64], v: &[f64]) -> Result<DMatrix<f64>> {
    let n = g.dim();
    let gam = christoffel(g, x)?;
    let mut b = DMatrix::identity(2 * n, 2 * n);
    for k in 0..n {
        for j in 0..n {
            b[(n + j, k)] = -(0..n).map(|l| gam.get(j, k, l) * v[l]).sum::<f64>();
        }
    }
    let mut j0 = DMatrix::zeros(2 * n, 2 * n);
    for k in 0..n {
        j0[(k, n + k)] = 1.0;
        j0[(n + k, k)] = -1.0;
    }
    let binv = b.clone().try_inverse().ok_or(PhhsError::SingularMetric)?;
    Ok(b * j0 * binv)
}

/// `dG` at `(x, v)` for `G(x, v) = (x, g(x) v)`.
fn d_g(g: &MatrixField, x: &[f64], v: &DVector<f64>) -> DMatrix<f64> {
    let n = g.dim();
    let gm = g.eval(x);
    let mut d = DMatrix::zeros(2 * n, 2 * n);
    for a in 0..n {
        d[(a, a)] = 1.0;
        let col = partial_jet(g, x, a) * v;
        for i in 0..n {
            d[(n + i, a)] = col[i];
            d[(n + i, n + a)] = gm[(i, a)];
        }
    }
    d
}

/// `J* = dG ∘ J_∇ ∘ dG⁻¹` at `(q, p)`.
pub fn j_cotangent(g: &MatrixField, q: &[f64], p: &[f64]) -> Result<DMatrix<f64>> {
    let gi = inverse(&g.eval(q))?;
    let v = gi * DVector::from_column_slice(p);
    let jt = j_tangent(g, q, v.as_slice())?;
    let dg = d_g(g, q, &v);
    let dgi = dg.clone().try_inverse().ok_or(PhhsError::SingularMetric)?;
    Ok(dg * jt * dgi)
}

fn split(n: usize, w: &[f64]) -> (&[f64], &[f64]) {
    (&w[..n], &w[n..])
}

/// `J_∇` as a field on `TM`; NaN where the metric is singular.
pub fn j_tangent_field(g: &MatrixField) -> MatrixField {
    let (g, n) = (g.clone(), g.dim());
    MatrixField::new(2 * n, move |w| {
        let (x, v) = split(n, w);
        j_tangent(&g, x, v).unwrap_or_else(|_| DMatrix::from_element(2 * n, 2 * n, f64::NAN))
    })
    .with_fd(FdConfig { step: OUTER_FD, order: 4 })
}

/// `J*` as a field on `T*M`; NaN where the metric is singular.
pub fn j_cotangent_field(g: &MatrixField) -> MatrixField {
    let (g, n) = (g.clone(), g.dim());
    MatrixField::new(2 * n, move |w| {
        let (q, p) = split(n, w);
        j_cotangent(&g, q, p).unwrap_or_else(|_| DMatrix::from_element(2 * n, 2 * n, f64::NAN))
    })
    .with_fd(FdConfig { step: OUTER_FD, order: 4 })
}

/// `ω_can = Σ dp_k∧dq_k` in `(q, p)` ordering.
pub fn omega_can(n: usize) -> DMatrix<f64> {
    let mut w = DMatrix::zeros(2 * n, 2 * n);
    for k in 0..n {
        w[(n + k, k)] = 1.0;
        w[(k, n + k)] = -1.0;
    }
    w
}

#[derive(Debug, Clone, PartialEq)]
pub struct Compatibility {
    /// `‖B − Bᵀ‖` for `B(u, w) = ω_can(u, J* w)`.
    pub asymmetry: f64,
    pub signature: (usize, usize),
    /// `‖J*² + 1‖`.
    pub square: f64,
}

pub fn compatibility(g: &MatrixField, q: &[f64], p: &[f64]) -> Result<Compatibility> {
    let n = g.dim();
    let j = j_cotangent(g, q, p)?;
    let b = omega_can(n) * &j;
    Ok(Compatibility {
        asymmetry: max_abs(&(&b - b.transpose())),
        signature: signature(&b),
        square: max_abs(&(&j * &j + DMatrix::identity(2 * n, 2 * n))),
    })
}

/// `R^i_{jkl} = ∂_kΓ^i_{lj} − ∂_lΓ^i_{kj} + Γ^i_{km}Γ^m_{lj} − Γ^i_{lm}Γ^m_{kj}`, stored as `data[((i n + j) n + k) n + l]`.
pub fn riemann_curvature(g: &MatrixField, x: &[f64]) -> Result<Vec<f64>> {
    let n = g.dim();
    let gam = christoffel(g, x)?;
    let gfield = g.clone();
    let field: Field<Vec<f64>> = Field::new(n, move |y| christoffel(&gfield, y).map(|c| c.data).unwrap_or_else(|_| vec![f64::NAN; n * n * n]))
        .with_fd(FdConfig { step: OUTER_FD, order: 4 });
    let d: Vec<Vec<f64>> = (0..n).map(|a| partial_jet(&field, x, a)).collect();
    let dg = |a: usize, i: usize, k: usize, l: usize| d[a][(i * n + k) * n + l];
    let mut r = vec![0.0; n * n * n * n];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let quad: f64 = (0..n).map(|m| gam.get(i, k, m) * gam.get(m, l, j) - gam.get(i, l, m) * gam.get(m, k, j)).sum();
                    r[((i * n + j) * n + k) * n + l] = dg(k, i, l, j) - dg(l, i, k, j) + quad;
                }
            }
        }
    }
    Ok(r)
}

/// Per-point `(‖R‖ at q, ‖N_{J*}‖ at (q, p))`.
pub fn flatness_vs_integrability(g: &MatrixField, points: &[Point]) -> Result<Vec<(f64, f64)>> {
    let n = g.dim();
    let jf = j_cotangent_field(g);
    points
        .iter()
        .map(|w| {
            let r = riemann_curvature(g, &w[..n])?;
            let rn = r.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
            Ok((rn, nijenhuis(&jf, w).max_abs()))
        })
        .collect()
}

/// A holomorphic symmetric bilinear form `h = Σ h_{ij} dz_i ⊗ dz_j` on `C^n`.
#[derive(Debug, Clone)]
pub struct HoloMetric {
    pub n: usize,
    entries: Vec<BoundExpr>,
}

impl HoloMetric {
    /// `components[i][j]` are expressions in `z_1..z_n`.
    pub fn parse(components: &[Vec<String>]) -> Result<Self> {
        let n = components.len();
        if n == 0 || components.iter().any(|row| row.len() != n) {
            return Err(PhhsError::Dimension("holomorphic metric needs an n×n component table".into()));
        }
        let scope = Scope::new(n);
        let entries = components.iter().flatten().map(|s| compile(s, &scope)).collect::<Result<Vec<_>>>()?;
        Ok(HoloMetric { n, entries })
    }

    pub fn complex_matrix(&self, p: &[f64]) -> nalgebra::DMatrix<num_complex::Complex64> {
        DMatrix::from_fn(self.n, self.n, |i, j| self.entries[i * self.n + j].eval(p))
    }

    /// Largest holomorphy and symmetry residual over `samples`.
    pub fn validate(&self, samples: &[Point]) -> Result<()> {
        let hol = self.entries.iter().map(|e| holomorphy_residual(e, samples)).fold(0.0, f64::max);
        if !(hol <= 1e-6) {
            return Err(PhhsError::NotHolomorphic(hol));
        }
        for p in samples {
            let h = self.complex_matrix(p);
            if (&h - h.transpose()).iter().any(|c| c.norm() > 1e-12) {
                return Err(PhhsError::Invalid("holomorphic metric is not symmetric".into()));
            }
        }
        Ok(())
    }

    /// `(h_R, h_I)` as real metrics in `(x, y)` ordering.
    pub fn real_parts(&self) -> (MatrixField, MatrixField) {
        let (a, b) = (self.clone(), self.clone());
        let n = self.n;
        let build = move |h: DMatrix<num_complex::Complex64>, imag: bool| {
            // h(∂x,∂x) = H, h(∂x,∂y) = iH, h(∂y,∂y) = −H.
            DMatrix::from_fn(2 * n, 2 * n, |r, c| {
                let z = h[(r % n, c % n)] * num_complex::Complex64::new(0.0, 1.0).powi((r / n + c / n) as i32);
                if imag {
                    z.im
                } else {
                    z.re
                }
            })
        };
        let hr = MatrixField::new(2 * n, move |p| build(a.complex_matrix(p), false));
        let hi = MatrixField::new(2 * n, move |p| build(b.complex_matrix(p), true));
        (hr, hi)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HoloMetricReport {
    pub max_difference: f64,
    pub max_christoffel: f64,
    pub points: usize,
}

/// `max ‖Γ(h_R) − Γ(h_I)‖` over `grid`, with derivatives at spacing `fd_step`.
pub fn holo_metric_lc_check(h: &HoloMetric, grid: &[Point], fd_step: f64) -> Result<HoloMetricReport> {
    h.validate(grid)?;
    let fd = FdConfig::new(fd_step, 4)?;
    let (hr, hi) = h.real_parts();
    let (hr, hi) = (hr.with_fd(fd), hi.with_fd(fd));
    let mut rep = HoloMetricReport { max_difference: 0.0, max_christoffel: 0.0, points: grid.len() };
    for p in grid {
        let (a, b) = (christoffel(&hr, p)?, christoffel(&hi, p)?);
        let diff = a.data.iter().zip(&b.data).fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()));
        rep.max_difference = rep.max_difference.max(diff);
        rep.max_christoffel = rep.max_christoffel.max(a.max_abs());
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn polar_like() -> MatrixField {
        MatrixField::new(2, |x| DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, x[0] * x[0]]))
    }

    #[test]
    fn euclidean_is_flat() {
        let g = MatrixField::constant_matrix(DMatrix::identity(2, 2));
        assert_eq!(christoffel(&g, &[0.3, 0.4]).unwrap().max_abs(), 0.0);
        let j = j_tangent(&g, &[0.3, 0.4], &[1.0, -2.0]).unwrap();
        let want = DMatrix::from_row_slice(4, 4, &[0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0, -1.0, 0.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0]);
        assert_eq!(j, want);
    }

    #[test]
    fn polar_christoffels() {
        let c = christoffel(&polar_like(), &[2.0, 0.3]).unwrap();
        assert!((c.get(1, 0, 1) - 0.5).abs() < 1e-9);
        assert!((c.get(1, 1, 0) - 0.5).abs() < 1e-9);
        assert!((c.get(0, 1, 1) + 2.0).abs() < 1e-9);
        assert!(c.get(0, 0, 0).abs() < 1e-12);
    }

    #[test]
    fn polar_metric_is_flat_and_integrable() {
        let vals = flatness_vs_integrability(&polar_like(), &[vec![1.5, 0.2, 0.3, -0.4]]).unwrap();
        assert!(vals[0].0 < 1e-6 && vals[0].1 < 1e-5, "{vals:?}");
    }

    #[test]
    fn minkowski_sign_split() {
        let g = MatrixField::constant_matrix(DMatrix::from_diagonal(&DVector::from_column_slice(&[1.0, -1.0])));
        let j = j_cotangent(&g, &[0.0, 0.0], &[0.5, 0.1]).unwrap();
        // J*(∂q₁) = −∂p₁ and J*(∂q₂) = +∂p₂.
        assert_eq!(j[(2, 0)], -1.0);
        assert_eq!(j[(3, 1)], 1.0);
        let c = compatibility(&g, &[0.0, 0.0], &[0.5, 0.1]).unwrap();
        assert_eq!(c.signature, (2, 2));
    }

    #[test]
    fn singular_metric() {
        let g = MatrixField::constant_matrix(DMatrix::zeros(2, 2));
        assert_eq!(christoffel(&g, &[0.0, 0.0]).unwrap_err(), PhhsError::SingularMetric);
    }

    #[test]
    fn antiholomorphic_metric_rejected() {
        let h = HoloMetric::parse(&[vec!["conj(z1)".into(), "0".into()], vec!["0".into(), "1".into()]]).unwrap();
        assert!(matches!(holo_metric_lc_check(&h, &[vec![0.1, 0.2, 0.3, 0.4]], 1e-4), Err(PhhsError::NotHolomorphic(_))));
    }
}
