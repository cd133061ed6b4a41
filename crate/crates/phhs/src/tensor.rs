//! Pointwise tensor calculus on a coordinate patch.
//!
//! Matrices follow one convention throughout: a vector field acts as a column,
//! an endomorphism `J` has entries `J[(c, b)] = J^c_b` (so `J e_b = Σ_c J^c_b e_c`),
//! and a two-form `ω` has entries `ω[(a, b)] = ω(e_a, e_b)`, so `ω(u, v) = uᵀ ω v`.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{PhhsError, Result};

pub type Point = Vec<f64>;

/// Finite-difference settings. The actual spacing at `p` is
/// `step * max(1, |p|)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdConfig {
    pub step: f64,
    pub order: u8,
}

impl Default for FdConfig {
    fn default() -> Self {
        FdConfig { step: 1e-5, order: 4 }
    }
}

impl FdConfig {
    pub fn new(step: f64, order: u8) -> Result<Self> {
        if !(step > 0.0) || !(order == 2 || order == 4) {
            return Err(PhhsError::Invalid(format!("fd step {step} order {order}")));
        }
        Ok(FdConfig { step, order })
    }

    pub fn spacing(&self, p: &[f64]) -> f64 {
        let n = p.iter().map(|x| x * x).sum::<f64>().sqrt();
        self.step * n.max(1.0)
    }
}

/// Values a field may take; needed to form difference quotients.
pub trait FieldValue: Clone + Send + Sync + 'static {
    fn lin_comb(terms: &[(f64, &Self)]) -> Self;
}

impl FieldValue for f64 {
    fn lin_comb(terms: &[(f64, &Self)]) -> Self {
        terms.iter().map(|(c, v)| c * **v).sum()
    }
}

impl FieldValue for DVector<f64> {
    fn lin_comb(terms: &[(f64, &Self)]) -> Self {
        let mut out = DVector::zeros(terms[0].1.len());
        for (c, v) in terms {
            out.axpy(*c, v, 1.0);
        }
        out
    }
}

impl FieldValue for DMatrix<f64> {
    fn lin_comb(terms: &[(f64, &Self)]) -> Self {
        let (r, c) = terms[0].1.shape();
        let mut out = DMatrix::zeros(r, c);
        for (k, v) in terms {
            out += *v * *k;
        }
        out
    }
}

impl FieldValue for Vec<f64> {
    fn lin_comb(terms: &[(f64, &Self)]) -> Self {
        let mut out = vec![0.0; terms[0].1.len()];
        for (c, v) in terms {
            for (o, x) in out.iter_mut().zip(v.iter()) {
                *o += c * x;
            }
        }
        out
    }
}

/// An evaluable map from points of a `dim`-dimensional patch to `T`.
#[derive(Clone)]
pub struct Field<T> {
    dim: usize,
    f: Arc<dyn Fn(&[f64]) -> T + Send + Sync>,
    pub fd: FdConfig,
}

impl<T> std::fmt::Debug for Field<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Field").field("dim", &self.dim).field("fd", &self.fd).finish()
    }
}

impl<T: FieldValue> Field<T> {
    pub fn new(dim: usize, f: impl Fn(&[f64]) -> T + Send + Sync + 'static) -> Self {
        Field { dim, f: Arc::new(f), fd: FdConfig::default() }
    }

    pub fn with_fd(mut self, fd: FdConfig) -> Self {
        self.fd = fd;
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn eval(&self, p: &[f64]) -> T {
        debug_assert_eq!(p.len(), self.dim);
        (self.f)(p)
    }
}

pub type ScalarField = Field<f64>;
pub type VectorField = Field<DVector<f64>>;
/// Endomorphism fields, e.g. almost complex structures.
pub type MatrixField = Field<DMatrix<f64>>;
/// Antisymmetric matrix fields.
pub type TwoFormField = Field<DMatrix<f64>>;

impl ScalarField {
    pub fn constant(dim: usize, c: f64) -> Self {
        Field::new(dim, move |_| c)
    }
}

impl MatrixField {
    pub fn constant_matrix(m: DMatrix<f64>) -> Self {
        let dim = m.nrows();
        Field::new(dim, move |_| m.clone())
    }
}

/// Central difference of `f` along `axis` at `p`.
pub fn partial_jet<T: FieldValue>(f: &Field<T>, p: &[f64], axis: usize) -> T {
    assert!(axis < f.dim(), "axis {axis} out of range");
    let h = f.fd.spacing(p);
    let mut q = p.to_vec();
    let mut at = |d: f64| {
        q[axis] = p[axis] + d;
        f.eval(&q)
    };
    match f.fd.order {
        2 => {
            let a = at(h);
            let b = at(-h);
            let d = T::lin_comb(&[(1.0, &a), (-1.0, &b)]);
            T::lin_comb(&[(0.5 / h, &d)])
        }
        _ => {
            let a2 = at(2.0 * h);
            let a1 = at(h);
            let b1 = at(-h);
            let b2 = at(-2.0 * h);
            // Differences first, so that constant fields give exactly zero.
            let d1 = T::lin_comb(&[(1.0, &a1), (-1.0, &b1)]);
            let d2 = T::lin_comb(&[(1.0, &a2), (-1.0, &b2)]);
            let c = 1.0 / (12.0 * h);
            T::lin_comb(&[(8.0 * c, &d1), (-c, &d2)])
        }
    }
}

pub fn gradient(f: &ScalarField, p: &[f64]) -> DVector<f64> {
    DVector::from_iterator(f.dim(), (0..f.dim()).map(|a| partial_jet(f, p, a)))
}

/// `D[(a, b)] = ∂_b V^a`.
pub fn jacobian(v: &VectorField, p: &[f64]) -> DMatrix<f64> {
    let n = v.dim();
    let mut d = DMatrix::zeros(n, n);
    for b in 0..n {
        d.set_column(b, &partial_jet(v, p, b));
    }
    d
}

/// All first partials `∂_d M`, indexed by `d`.
pub fn matrix_partials(m: &MatrixField, p: &[f64]) -> Vec<DMatrix<f64>> {
    (0..m.dim()).map(|d| partial_jet(m, p, d)).collect()
}

pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |a, x| a.max(x.abs()))
}

pub fn max_abs_vec(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0_f64, |a, x| a.max(x.abs()))
}

/// A 3-form stored as a full antisymmetric array.
#[derive(Debug, Clone, PartialEq)]
pub struct ThreeForm {
    pub dim: usize,
    data: Vec<f64>,
}

impl ThreeForm {
    pub fn zeros(dim: usize) -> Self {
        ThreeForm { dim, data: vec![0.0; dim * dim * dim] }
    }

    fn idx(&self, a: usize, b: usize, c: usize) -> usize {
        (a * self.dim + b) * self.dim + c
    }

    pub fn get(&self, a: usize, b: usize, c: usize) -> f64 {
        self.data[self.idx(a, b, c)]
    }

    /// Set the component `(a,b,c)` and all its signed permutations.
    pub fn set(&mut self, a: usize, b: usize, c: usize, v: f64) {
        for (i, j, k, s) in [
            (a, b, c, 1.0),
            (b, c, a, 1.0),
            (c, a, b, 1.0),
            (b, a, c, -1.0),
            (a, c, b, -1.0),
            (c, b, a, -1.0),
        ] {
            let t = self.idx(i, j, k);
            self.data[t] = s * v;
        }
    }

    /// Independent components `((a,b,c), value)` with `a < b < c`.
    pub fn independent(&self) -> Vec<((usize, usize, usize), f64)> {
        let n = self.dim;
        let mut out = Vec::new();
        for a in 0..n {
            for b in a + 1..n {
                for c in b + 1..n {
                    out.push(((a, b, c), self.get(a, b, c)));
                }
            }
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
    }

    /// The 2-form `ι_V dω`, i.e. `(ι_V dω)_{bc} = V^a (dω)_{abc}`.
    pub fn contract(&self, v: &DVector<f64>) -> DMatrix<f64> {
        let n = self.dim;
        DMatrix::from_fn(n, n, |b, c| (0..n).map(|a| v[a] * self.get(a, b, c)).sum())
    }
}

/// `(dω)_{abc} = ∂_a ω_{bc} − ∂_b ω_{ac} + ∂_c ω_{ab}`.
pub fn exterior_derivative_2form(w: &TwoFormField, p: &[f64]) -> ThreeForm {
    let n = w.dim();
    let d = matrix_partials(w, p);
    let mut out = ThreeForm::zeros(n);
    for a in 0..n {
        for b in a + 1..n {
            for c in b + 1..n {
                let v = d[a][(b, c)] - d[b][(a, c)] + d[c][(a, b)];
                out.set(a, b, c, v);
            }
        }
    }
    out
}

/// `[V,W]^a = V^b ∂_b W^a − W^b ∂_b V^a`.
pub fn lie_bracket(v: &VectorField, w: &VectorField, p: &[f64]) -> DVector<f64> {
    let dv = jacobian(v, p);
    let dw = jacobian(w, p);
    &dw * v.eval(p) - &dv * w.eval(p)
}

/// `(L_V J)^a_b = V^c ∂_c J^a_b − J^c_b ∂_c V^a + J^a_c ∂_b V^c`.
pub fn lie_derivative_j(v: &VectorField, j: &MatrixField, p: &[f64]) -> DMatrix<f64> {
    let vp = v.eval(p);
    let jp = j.eval(p);
    let dv = jacobian(v, p);
    let dj = matrix_partials(j, p);
    let mut out = -(&dv * &jp) + &jp * &dv;
    for (c, djc) in dj.iter().enumerate() {
        out += djc * vp[c];
    }
    out
}

/// The Nijenhuis tensor, stored as `N(e_a, e_b)` for every ordered pair.
#[derive(Debug, Clone)]
pub struct NijenhuisTensor {
    pub dim: usize,
    /// `pairs[a * dim + b] = N(e_a, e_b)`.
    pairs: Vec<DVector<f64>>,
}

impl NijenhuisTensor {
    pub fn on_basis(&self, a: usize, b: usize) -> &DVector<f64> {
        &self.pairs[a * self.dim + b]
    }

    pub fn apply(&self, v: &DVector<f64>, w: &DVector<f64>) -> DVector<f64> {
        let n = self.dim;
        let mut out = DVector::zeros(n);
        for a in 0..n {
            for b in 0..n {
                let c = v[a] * w[b];
                if c != 0.0 {
                    out.axpy(c, &self.pairs[a * n + b], 1.0);
                }
            }
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.pairs.iter().map(max_abs_vec).fold(0.0, f64::max)
    }

    /// Columns `N(e_a, e_b)` for `a < b`.
    pub fn image_matrix(&self) -> DMatrix<f64> {
        let n = self.dim;
        let cols: Vec<DVector<f64>> = (0..n)
            .flat_map(|a| (a + 1..n).map(move |b| (a, b)))
            .map(|(a, b)| self.pairs[a * n + b].clone())
            .collect();
        DMatrix::from_columns(&cols)
    }
}

/// `N^c_{ab} = J^d_a ∂_d J^c_b − J^d_b ∂_d J^c_a − J^c_d (∂_a J^d_b − ∂_b J^d_a)`.
pub fn nijenhuis(j: &MatrixField, p: &[f64]) -> NijenhuisTensor {
    let n = j.dim();
    let jp = j.eval(p);
    let dj = matrix_partials(j, p);
    // dir[a] = Σ_d J^d_a ∂_d J, the derivative of J along J e_a.
    let dir: Vec<DMatrix<f64>> = (0..n)
        .map(|a| {
            let mut m = DMatrix::zeros(n, n);
            for d in 0..n {
                let c = jp[(d, a)];
                if c != 0.0 {
                    m += &dj[d] * c;
                }
            }
            m
        })
        .collect();
    let mut pairs = vec![DVector::zeros(n); n * n];
    for a in 0..n {
        for b in a + 1..n {
            let first = dir[a].column(b) - dir[b].column(a);
            let second = &jp * (dj[a].column(b) - dj[b].column(a));
            let v = first - second;
            pairs[b * n + a] = -v.clone();
            pairs[a * n + b] = v;
        }
    }
    NijenhuisTensor { dim: n, pairs }
}

/// Rank of the image of `N`: singular values above `rel * σ_max` count, and
/// the rank is 0 when `σ_max <= abs_floor`.
pub fn nijenhuis_rank_with(j: &MatrixField, p: &[f64], rel: f64, abs_floor: f64) -> usize {
    let m = nijenhuis(j, p).image_matrix();
    let sv = m.singular_values();
    let smax = sv.iter().fold(0.0_f64, |a, x| a.max(*x));
    if smax <= abs_floor {
        return 0;
    }
    sv.iter().filter(|s| **s > rel * smax).count()
}

pub fn nijenhuis_rank(j: &MatrixField, p: &[f64]) -> usize {
    nijenhuis_rank_with(j, p, 1e-7, 1e-6)
}

/// `max |J² + I|`.
pub fn check_acs(j: &MatrixField, p: &[f64]) -> f64 {
    let jp = j.eval(p);
    let n = jp.nrows();
    max_abs(&(&jp * &jp + DMatrix::identity(n, n)))
}

/// `max |Jᵀ Ω J + Ω|`.
pub fn check_anticompat(omega: &TwoFormField, j: &MatrixField, p: &[f64]) -> f64 {
    let w = omega.eval(p);
    let jp = j.eval(p);
    max_abs(&(jp.transpose() * &w * &jp + &w))
}

/// `½ (v − i J v)`.
pub fn project_10(j: &MatrixField, v: &DVector<f64>, p: &[f64]) -> DVector<Complex64> {
    let jv = j.eval(p) * v;
    DVector::from_iterator(
        v.len(),
        v.iter().zip(jv.iter()).map(|(a, b)| Complex64::new(0.5 * a, -0.5 * b)),
    )
}

/// A symplectic frame `(ê^Q_j, ê^P_j)` with its dual coframe.
#[derive(Debug, Clone)]
pub struct ComplexFrame {
    pub q: Vec<DVector<Complex64>>,
    pub p: Vec<DVector<Complex64>>,
    /// Rows of the inverse frame matrix; `theta_q[j](ê^Q_k) = δ_jk` etc.
    pub theta_q: Vec<DVector<Complex64>>,
    pub theta_p: Vec<DVector<Complex64>>,
}

impl ComplexFrame {
    /// Frame matrix with columns `(Q_1..Q_n, P_1..P_n)`.
    pub fn matrix(&self) -> DMatrix<Complex64> {
        let cols: Vec<_> = self.q.iter().chain(self.p.iter()).cloned().collect();
        DMatrix::from_columns(&cols)
    }
}

fn bilinear(w: &DMatrix<Complex64>, u: &DVector<Complex64>, v: &DVector<Complex64>) -> Complex64 {
    (u.transpose() * w * v)[(0, 0)]
}

/// Partner threshold for [`symplectic_gram_schmidt`].
pub const PARTNER_THRESHOLD: f64 = 1e-8;

/// Symplectic Gram–Schmidt on a complex antisymmetric form `w` (given on the
/// coefficient space), starting from the columns of `seed`.
///
/// The first remaining seed vector becomes `Q`, the first later vector with
/// `|ω(Q, ·)| ≥ 1e-8` is rescaled into `P` with `ω(P, Q) = 1`, and the rest
/// are projected onto the ω-complement of `span(Q, P)`.
pub fn symplectic_gram_schmidt(w: &DMatrix<Complex64>, seed: &DMatrix<Complex64>) -> Result<ComplexFrame> {
    let m = w.nrows();
    if w.ncols() != m || seed.nrows() != m || seed.ncols() != m {
        return Err(PhhsError::Dimension(format!("form {}x{}, seed {}x{}", m, w.ncols(), seed.nrows(), seed.ncols())));
    }
    if m % 2 != 0 {
        return Err(PhhsError::Dimension(format!("odd dimension {m} carries no symplectic frame")));
    }
    let mut rest: Vec<DVector<Complex64>> = seed.column_iter().map(|c| c.into_owned()).collect();
    let mut qs = Vec::new();
    let mut ps = Vec::new();
    while !rest.is_empty() {
        let v = rest.remove(0);
        let k = rest
            .iter()
            .position(|u| bilinear(w, &v, u).norm() >= PARTNER_THRESHOLD)
            .ok_or(PhhsError::DegenerateForm)?;
        let u = rest.remove(k);
        let p = &u / bilinear(w, &u, &v);
        for x in rest.iter_mut() {
            // Two passes keep the complement accurate to rounding.
            for _ in 0..2 {
                let a = bilinear(w, x, &p);
                let b = bilinear(w, x, &v);
                *x += &v * a - &p * b;
            }
        }
        qs.push(v);
        ps.push(p);
    }
    let n = qs.len();
    let f = DMatrix::from_columns(&qs.iter().chain(ps.iter()).cloned().collect::<Vec<_>>());
    let inv = f.try_inverse().ok_or(PhhsError::DegenerateForm)?;
    let theta_q = (0..n).map(|j| inv.row(j).transpose()).collect();
    let theta_p = (0..n).map(|j| inv.row(n + j).transpose()).collect();
    Ok(ComplexFrame { q: qs, p: ps, theta_q, theta_p })
}

/// `Fᵀ ω F` for the frame matrix `F`; standard means `ω(P_i, Q_j) = δ_ij` and
/// all other pairings zero.
pub fn pairing_matrix(w: &DMatrix<Complex64>, frame: &ComplexFrame) -> DMatrix<Complex64> {
    let f = frame.matrix();
    f.transpose() * w * f
}

/// Distance of a pairing matrix from the standard one.
pub fn pairing_defect(pairing: &DMatrix<Complex64>) -> f64 {
    let m = pairing.nrows();
    let n = m / 2;
    let mut worst = 0.0_f64;
    for a in 0..m {
        for b in 0..m {
            let target = if a >= n && b == a - n {
                1.0
            } else if a < n && b == a + n {
                -1.0
            } else {
                0.0
            };
            worst = worst.max((pairing[(a, b)] - Complex64::new(target, 0.0)).norm());
        }
    }
    worst
}

/// A symplectic frame of `T^{(1,0)}` at `p` for `Ω = Ω_R + i Ω_I`, returned as
/// complex vectors in the real coordinate basis.
pub fn frame_at(j: &MatrixField, omega_r: &TwoFormField, p: &[f64]) -> Result<ComplexFrame> {
    let n2 = j.dim();
    let m = n2 / 2;
    let jp = j.eval(p);
    let wr = omega_r.eval(p);
    let wi = -(jp.transpose() * &wr);
    // Pick m independent (1,0) vectors among the projections of the basis.
    let mut basis: Vec<DVector<Complex64>> = Vec::new();
    for a in 0..n2 {
        let mut e = DVector::zeros(n2);
        e[a] = 1.0;
        let v = project_10(j, &e, p);
        let mut trial = basis.clone();
        trial.push(v.clone());
        let rank = DMatrix::from_columns(&trial).rank(1e-10);
        if rank == trial.len() {
            basis.push(v);
        }
        if basis.len() == m {
            break;
        }
    }
    if basis.len() < m {
        return Err(PhhsError::NotAlmostComplex(check_acs(j, p)));
    }
    let wc = DMatrix::from_fn(n2, n2, |a, b| Complex64::new(wr[(a, b)], wi[(a, b)]));
    let w = DMatrix::from_fn(m, m, |a, b| bilinear(&wc, &basis[a], &basis[b]));
    let coeff = symplectic_gram_schmidt(&w, &DMatrix::identity(m, m))?;
    let b = DMatrix::from_columns(&basis);
    let lift = |c: &DVector<Complex64>| &b * c;
    let q: Vec<_> = coeff.q.iter().map(lift).collect();
    let pp: Vec<_> = coeff.p.iter().map(lift).collect();
    // Dual covectors on the (1,0) span: θ(v) = θ_coeff(B⁺ v).
    let pinv = b.clone().pseudo_inverse(1e-12).map_err(|_| PhhsError::DegenerateForm)?;
    let dual = |t: &DVector<Complex64>| (t.transpose() * &pinv).transpose();
    Ok(ComplexFrame {
        theta_q: coeff.theta_q.iter().map(dual).collect(),
        theta_p: coeff.theta_p.iter().map(dual).collect(),
        q,
        p: pp,
    })
}

/// The standard complex structure on `C^m`, `[[0, −I], [I, 0]]` in `(x, y)` order.
pub fn standard_j(m: usize) -> DMatrix<f64> {
    let mut j = DMatrix::zeros(2 * m, 2 * m);
    for k in 0..m {
        j[(m + k, k)] = 1.0;
        j[(k, m + k)] = -1.0;
    }
    j
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn v(xs: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(xs)
    }

    #[test]
    fn fd_config_rejects_bad_input() {
        assert!(FdConfig::new(0.0, 4).is_err());
        assert!(FdConfig::new(1e-5, 3).is_err());
    }

    #[test]
    fn partial_of_square_is_exact() {
        let f = ScalarField::new(4, |p| p[0] * p[0]);
        assert!((partial_jet(&f, &[3.0, 0.0, 0.0, 0.0], 0) - 6.0).abs() < 1e-9);
        let c = ScalarField::constant(4, 2.5);
        assert_eq!(partial_jet(&c, &[1.0, 2.0, 3.0, 4.0], 2), 0.0);
    }

    #[test]
    fn partial_of_exp_matches_analytic() {
        for order in [2u8, 4] {
            let f = ScalarField::new(2, |p| p[0].exp()).with_fd(FdConfig::new(1e-3, order).unwrap());
            let err = (partial_jet(&f, &[0.0, 0.0], 0) - 1.0).abs();
            let bound = if order == 2 { 1e-6 } else { 1e-11 };
            assert!(err < bound, "order {order}: {err}");
        }
    }

    #[test]
    fn exterior_derivative_examples() {
        // Constant Ω_R = dx₂∧dx₁ − dy₂∧dy₁.
        let mut w = DMatrix::zeros(4, 4);
        w[(1, 0)] = 1.0;
        w[(0, 1)] = -1.0;
        w[(3, 2)] = -1.0;
        w[(2, 3)] = 1.0;
        let d = exterior_derivative_2form(&TwoFormField::constant_matrix(w), &[0.3, 0.1, -0.2, 0.5]);
        assert_eq!(d.max_abs(), 0.0);

        // y₁ dx₁∧dx₂: only (x₁,x₂,y₁) survives, with value 1.
        let w = TwoFormField::new(4, |p| {
            let mut m = DMatrix::zeros(4, 4);
            m[(0, 1)] = p[2];
            m[(1, 0)] = -p[2];
            m
        });
        let d = exterior_derivative_2form(&w, &[0.2, 0.4, 0.7, -0.1]);
        for ((a, b, c), val) in d.independent() {
            let want = if (a, b, c) == (0, 1, 2) { 1.0 } else { 0.0 };
            assert!((val - want).abs() < 1e-9, "({a},{b},{c}) = {val}");
        }
    }

    #[test]
    fn lie_bracket_hand_example() {
        let vf = VectorField::new(4, |p| v(&[0.0, p[0], 0.0, 0.0]));
        let wf = VectorField::new(4, |_| v(&[1.0, 0.0, 0.0, 0.0]));
        let b = lie_bracket(&vf, &wf, &[0.5, 0.1, 0.2, 0.3]);
        assert!((b - v(&[0.0, -1.0, 0.0, 0.0])).norm() < 1e-9);
    }

    #[test]
    fn constant_structures_are_flat() {
        let j = MatrixField::constant_matrix(standard_j(2));
        let p = [0.1, 0.2, 0.3, 0.4];
        assert_eq!(nijenhuis(&j, &p).max_abs(), 0.0);
        assert_eq!(nijenhuis_rank(&j, &p), 0);
        assert_eq!(check_acs(&j, &p), 0.0);
        let c = VectorField::new(4, |_| v(&[1.0, -2.0, 0.5, 0.0]));
        assert_eq!(max_abs(&lie_derivative_j(&c, &j, &p)), 0.0);
    }

    #[test]
    fn project_10_is_eigenvector() {
        let j = MatrixField::constant_matrix(standard_j(1));
        let u = project_10(&j, &v(&[1.0, 0.0]), &[0.0, 0.0]);
        assert_eq!(u[0], Complex64::new(0.5, 0.0));
        assert_eq!(u[1], Complex64::new(0.0, -0.5));
        let w = v(&[0.3, -1.2]);
        let jw = j.eval(&[0.0, 0.0]) * &w;
        let lhs = project_10(&j, &jw, &[0.0, 0.0]);
        let rhs = project_10(&j, &w, &[0.0, 0.0]) * Complex64::new(0.0, 1.0);
        assert!((lhs - rhs).norm() < 1e-15);
    }

    #[test]
    fn perturbed_j_is_flagged() {
        let mut j = standard_j(2);
        j[(0, 3)] += 1e-3;
        j[(1, 0)] -= 1e-3;
        let jf = MatrixField::constant_matrix(j);
        let r = check_acs(&jf, &[0.0; 4]);
        assert!(r > 5e-4 && r < 5e-3, "{r}");
    }

    fn random_form(rng: &mut ChaCha8Rng, m: usize) -> DMatrix<Complex64> {
        let a = DMatrix::from_fn(m, m, |_, _| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        &a - a.transpose()
    }

    #[test]
    fn gram_schmidt_standard_input_is_identity() {
        // Ω = dz₂∧dz₁ on the basis (∂z₁, ∂z₂): ω(∂z₂, ∂z₁) = 1.
        let mut w = DMatrix::zeros(2, 2);
        w[(1, 0)] = Complex64::new(1.0, 0.0);
        w[(0, 1)] = Complex64::new(-1.0, 0.0);
        let f = symplectic_gram_schmidt(&w, &DMatrix::identity(2, 2)).unwrap();
        assert_eq!(f.matrix(), DMatrix::identity(2, 2));
        assert_eq!(pairing_defect(&pairing_matrix(&w, &f)), 0.0);
    }

    #[test]
    fn gram_schmidt_rejects_odd_and_degenerate() {
        let w = DMatrix::from_element(1, 1, Complex64::new(0.0, 0.0));
        assert!(matches!(symplectic_gram_schmidt(&w, &DMatrix::identity(1, 1)), Err(PhhsError::Dimension(_))));
        let w = DMatrix::from_element(2, 2, Complex64::new(0.0, 0.0));
        assert_eq!(symplectic_gram_schmidt(&w, &DMatrix::identity(2, 2)).unwrap_err(), PhhsError::DegenerateForm);
    }

    #[test]
    fn gram_schmidt_random_forms() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for m in [2, 4, 6] {
            for _ in 0..10 {
                let w = random_form(&mut rng, m);
                let f = symplectic_gram_schmidt(&w, &DMatrix::identity(m, m)).unwrap();
                assert!(pairing_defect(&pairing_matrix(&w, &f)) < 1e-10);
                let inv = DMatrix::from_columns(
                    &f.theta_q.iter().chain(f.theta_p.iter()).cloned().collect::<Vec<_>>(),
                )
                .transpose();
                assert!((inv * f.matrix() - DMatrix::identity(m, m)).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn frame_for_standard_structure() {
        let m = 2;
        let j = MatrixField::constant_matrix(standard_j(m));
        let mut w = DMatrix::zeros(4, 4);
        w[(1, 0)] = 1.0;
        w[(0, 1)] = -1.0;
        w[(3, 2)] = -1.0;
        w[(2, 3)] = 1.0;
        let omega = TwoFormField::constant_matrix(w.clone());
        let p = [0.0; 4];
        let f = frame_at(&j, &omega, &p).unwrap();
        let jc = j.eval(&p).map(|x| Complex64::new(x, 0.0));
        let i = Complex64::new(0.0, 1.0);
        for e in f.q.iter().chain(f.p.iter()) {
            assert!((&jc * e - e * i).norm() < 1e-12);
        }
        let wi = -(j.eval(&p).transpose() * &w);
        let wc = DMatrix::from_fn(4, 4, |a, b| Complex64::new(w[(a, b)], wi[(a, b)]));
        let pq = (f.p[0].transpose() * &wc * &f.q[0])[(0, 0)];
        assert!((pq - 1.0).norm() < 1e-12);
    }
}
