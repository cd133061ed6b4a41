//! Acceptance suite. Runs without the libtest harness so that every criterion
//! prints its own PASS/FAIL line; exits non-zero if any asserted line fails.

use std::f64::consts::PI;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use phhs::action::*;
use phhs::connection::*;
use phhs::flow::*;
use phhs::hamiltonian::*;
use phhs::models::*;
use phhs::morse::*;
use phhs::tensor::*;
use phhs::{Complex64, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Line {
    label: String,
    pass: bool,
    detail: String,
    /// Informational lines are printed but do not decide the exit status.
    asserted: bool,
}

fn line(label: &str, pass: bool, detail: String) -> Line {
    Line { label: label.into(), pass, detail, asserted: true }
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn pair_error(x: &[f64], q: Complex64, p: Complex64) -> f64 {
    [(x[0] - q.re), (x[1] - p.re), (x[2] - q.im), (x[3] - p.im)].iter().fold(0.0, |m, v| m.max(v.abs()))
}

fn criterion_1() -> Result<Vec<Line>> {
    let t0 = Instant::now();
    let model = build_central_problem()?;
    let (fields, _) = assemble_phhs(&model)?;
    let cfg = FlowConfig::default();
    let a = flow_word(&fields, &CENTRAL_X0, &[(0.0, -2.0), (-2.0, 1.0)], &cfg)?;
    let b = flow_word(&fields, &CENTRAL_X0, &[(0.0, 1.0), (-2.0, -2.0)], &cfg)?;
    let phase = c(0.0, 5.0 * PI / 8.0).exp();
    let reference = pair_error(&a, 2f64.sqrt() * phase, phase.conj() / (2.0 * 2f64.sqrt()));
    // Q = √(z + 1) along the word has modulus 2^{1/4}; P = Q′ = 1/(2Q).
    let q = 2f64.powf(0.25) * phase;
    let err = pair_error(&a, q, 1.0 / (2.0 * q));
    let neg: Vec<f64> = a.iter().map(|v| -v).collect();
    let swap = b.iter().zip(&neg).fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()));
    let secs = t0.elapsed().as_secs_f64();
    Ok(vec![
        Line {
            label: "1  flow word, reference modulus √2".into(),
            pass: reference <= 1e-5,
            detail: format!("max error {reference:.3e} (informational)"),
            asserted: false,
        },
        line(
            "1  flow word, Q = 2^{1/4}e^{i5π/8}, swapped word = negative",
            err <= 1e-5 && swap <= 1e-5 && secs < 5.0,
            format!("error {err:.3e}, swap {swap:.3e}, {secs:.2}s"),
        ),
    ])
}

fn criterion_2() -> Result<Vec<Line>> {
    let model = build_central_problem()?;
    let (fields, _) = assemble_phhs(&model)?;
    let spec = GridSpec { t_range: (0.0, 1.0), s_range: (0.0, 1.0), nt: 33, ns: 33 };
    let grid = trajectory_grid(&fields, &CENTRAL_X0, c(0.0, 0.0), spec, &FlowConfig::default())?;
    let mut err = 0.0_f64;
    for i in 0..33 {
        for j in 0..33 {
            let q = (grid.time(i, j) + 1.0).sqrt();
            err = err.max(pair_error(grid.at(i, j), q, 1.0 / (2.0 * q)));
        }
    }
    Ok(vec![line("2  closed-form trajectory Q = √(z+1)", err <= 1e-6, format!("max error {err:.3e}"))])
}

fn criterion_3() -> Result<Vec<Line>> {
    let model = build_central_problem()?;
    let (fields, _) = assemble_phhs(&model)?;
    let cfg = FlowConfig::default();
    let once = continue_along_path(&fields, &CENTRAL_X0, &TimePath::circle(c(-1.0, 0.0), c(0.0, 0.0), 1, 64)?, &cfg)?;
    let twice = continue_along_path(&fields, &CENTRAL_X0, &TimePath::circle(c(-1.0, 0.0), c(0.0, 0.0), 2, 64)?, &cfg)?;
    let e1 = once.iter().zip(CENTRAL_X0).fold(0.0_f64, |m, (a, b)| m.max((a + b).abs()));
    let e2 = twice.iter().zip(CENTRAL_X0).fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
    Ok(vec![line("3  monodromy around z = −1", e1 <= 1e-5 && e2 <= 1e-5, format!("once {e1:.3e}, twice {e2:.3e}"))])
}

fn criterion_4() -> Result<Vec<Line>> {
    let grid = cube_grid(&[0.0; 4], 0.5, 5);
    let thr = 1e-3;
    let mut zoo: Vec<(String, MatrixField, TwoFormField, bool)> = Vec::new();
    let std = build_standard_hhs(1, "P^2/2 + Q^2/2")?;
    zoo.push(("standard".into(), std.j, std.omega_r, false));
    for (f, h, proper) in [("1", "1", false), ("1", "exp(x1)", true)] {
        let m = build_proper_phhs(f, h, "-y1")?;
        zoo.push((format!("(f,h)=({f},{h})"), m.j, m.omega_r, proper));
    }
    for (phi, proper) in [("0", false), ("x1", true)] {
        let d = build_rotation_family(phi)?;
        zoo.push((format!("phi={phi}"), d.j, d.omega_r, proper));
    }
    for (eps, proper) in [(0.0, false), (0.5, true)] {
        let m = build_deformation(eps, &default_bump(1), 1, DeformationHamiltonian::Constant(0.0))?;
        zoo.push((format!("eps={eps}"), m.j, m.omega_r, proper));
    }
    let mut ok = true;
    let mut parts = Vec::new();
    for (name, j, w, proper) in &zoo {
        let r = integrability_report(j, w, &grid, thr);
        let agree = (r.max_nijenhuis <= thr) == (r.max_d_omega_i <= thr);
        let expected = if *proper { r.max_nijenhuis > 0.05 && r.max_d_omega_i > 0.05 } else { r.integrable() };
        ok &= agree && expected;
        parts.push(format!("{name}: N {:.1e} dΩ {:.1e}", r.max_nijenhuis, r.max_d_omega_i));
    }
    let proper = build_proper_phhs("1", "exp(x1)", "-y1")?;
    let omega_i = omega_i_from(&proper.omega_r, &proper.j);
    let comp = exterior_derivative_2form(&omega_i, &[0.0; 4]).get(0, 1, 2);
    Ok(vec![
        line("4  integrability dichotomy across the zoo", ok, parts.join("; ")),
        line("4  dΩ_I(x1,x2,y1) at origin = 1", (comp - 1.0).abs() <= 1e-4, format!("{comp:.8}")),
    ])
}

fn criterion_5() -> Result<Vec<Line>> {
    let model = build_proper_phhs("1", "exp(x1)", "-y1")?;
    let (fields, rep) = assemble_phhs(&model)?;
    let worst = [rep.bracket, rep.pseudo_holomorphy, rep.poisson, rep.cr_imag_imag].into_iter().fold(0.0, f64::max);
    let mut offsets: Vec<f64> = Vec::new();
    for p in &model.samples {
        offsets.push(fields.hamiltonian(p).im + (-p[0]).exp());
    }
    let spread = offsets.iter().fold(f64::MIN, |a, &b| a.max(b)) - offsets.iter().fold(f64::MAX, |a, &b| a.min(b));
    Ok(vec![
        line("5  proper PHHS assembly identities", worst <= 1e-4, format!("worst {worst:.3e}")),
        line("5  H_I = −e^{−x1} + const", spread <= 1e-6, format!("constant spread {spread:.3e}")),
    ])
}

fn criterion_6() -> Result<Vec<Line>> {
    let model = build_proper_phhs("1", "exp(x1)", "-y1")?;
    let (fields, _) = assemble_phhs(&model)?;
    let origin = vec![vec![0.0; 4]];
    let x = j_preserving_check(&fields.x, &model.j, &model.omega_r, &origin)[0];
    let jx = j_preserving_check(&fields.jx, &model.j, &model.omega_r, &origin)[0];
    let pass = x.0 <= 1e-3 && jx.0 >= 0.05 && x.1 <= 1e-3 && jx.1 >= 0.05;
    Ok(vec![line(
        "6  J-preserving criterion",
        pass,
        format!("L_X J {:.1e}, ι_X dΩ_I {:.1e}, L_JX J {:.3}, ι_JX dΩ_I {:.3}", x.0, x.1, jx.0, jx.1),
    )])
}

fn criterion_7() -> Result<Vec<Line>> {
    let model = build_standard_hhs(1, "P^2/2 + Q^2/2")?;
    let (fields, _) = assemble_phhs(&model)?;
    let ctx = ActionContext::new(&model, &fields)?;
    let affine = |z: Complex64| {
        let q = c(0.2, 0.1) + c(0.5, -0.3) * z;
        let p = c(-0.1, 0.4) + c(0.2, 0.7) * z;
        vec![q.re, p.re, q.im, p.im]
    };
    let z0 = c(0.1, 0.0);
    let fine = disk_action_1(&ctx, &DiscreteCurve::disk(z0, 0.8, 64, 256, PolarVariant::One, affine)?)?;
    let coarse = disk_action_1(&ctx, &DiscreteCurve::disk(z0, 0.8, 32, 128, PolarVariant::One, affine)?)?;
    let est = refinement_error(coarse, fine, ROUNDOFF_FLOOR);
    let x0 = vec![0.3, 0.2, 0.1, -0.1];
    let a2 = disk_action_2(&ctx, &DiscreteCurve::disk(c(0.0, 0.0), 0.8, 16, 32, PolarVariant::Two, |_| x0.clone())?)?;
    let h0 = (ctx.h)(&x0);
    Ok(vec![
        line("7  A1 of a holomorphic curve vanishes", fine.norm() <= 2.0 * est, format!("|A1| {:.3e}, error estimate {est:.3e}", fine.norm())),
        line("7  A2 of a constant curve = H(x0)", (a2 - h0).norm() <= 1e-8, format!("difference {:.3e}", (a2 - h0).norm())),
    ])
}

fn variational_ratio(model: &PhhsModel, x0: &[f64], real_part: bool) -> Result<(f64, f64)> {
    let (fields, _) = assemble_phhs(model)?;
    let ctx = ActionContext::new(model, &fields)?;
    let spec = GridSpec { t_range: (0.0, 1.0), s_range: (0.0, 1.0), nt: 17, ns: 17 };
    let grid = trajectory_grid(&fields, x0, c(0.0, 0.0), spec, &FlowConfig::default())?;
    let curve = DiscreteCurve::from_grid(&grid)?;
    let mut bent = curve.clone();
    let k = bent.nearest_interior(c(0.5, 0.5)).expect("interior node");
    bent.displace(k, 0, 0.05);
    let norm = |g: VariationalGradient| if real_part { g.max_re() } else { g.max_norm() };
    Ok((
        norm(variational_gradient(&ctx, &curve, FixedSet::Boundary, 1e-5)),
        norm(variational_gradient(&ctx, &bent, FixedSet::Boundary, 1e-5)),
    ))
}

fn criterion_8() -> Result<Vec<Line>> {
    let (a, b) = variational_ratio(&build_standard_hhs(1, "P^2/2 + Q^2/2")?, &[0.3, 0.2, 0.1, -0.1], false)?;
    let (c1, d) = variational_ratio(&build_proper_phhs("1", "exp(x1)", "-y1")?, &[0.1, 0.2, 0.0, 0.1], true)?;
    Ok(vec![
        line("8  variational principle, standard HHS", a <= 0.1 * b, format!("trajectory {a:.3e}, displaced {b:.3e}")),
        line("8  variational principle, proper PHHS (real part)", c1 <= 0.1 * d, format!("trajectory {c1:.3e}, displaced {d:.3e}")),
    ])
}

fn criterion_9() -> Result<Vec<Line>> {
    let sys = PlanarSystem::new(ScalarField::new(2, |p| 1.0 + p[0] * p[0]), PI)?;
    let cfg = FlowConfig::default();
    let mut period_err = 0.0_f64;
    for r0 in [0.2, 0.5, 0.8] {
        period_err = period_err.max((verify_t_periodic(&sys, Chart::Rescaled, r0, &cfg)? - PI).abs());
    }
    let oracle = (0..=10).map(|k| 0.1 * k as f64).map(|r| (period_function(&sys, r) - PI * (1.0 + r * r / 2.0)).abs()).fold(0.0, f64::max);
    let mut area = 0.0_f64;
    for e in [0.05, 0.1, 0.15, 0.2] {
        area = area.max(area_law_check(&sys, Chart::Rescaled, e, None)?.residual);
    }
    Ok(vec![
        line("9  rescaled orbits have period π", period_err <= 1e-4, format!("max error {period_err:.3e}")),
        line("9  period function = π(1 + r²/2)", oracle <= 1e-8, format!("max error {oracle:.3e}")),
        line("9  area law ∫ω = T·E", area <= 1e-4, format!("max residual {area:.3e}")),
    ])
}

fn criterion_10() -> Result<Vec<Line>> {
    let points = [vec![0.1, -0.2, 0.3, 0.4], vec![0.5, 0.2, -0.7, 0.1]];
    let flat = MatrixField::constant_matrix(DMatrix::identity(2, 2));
    let jf = j_cotangent_field(&flat);
    let n_flat = points.iter().map(|p| nijenhuis(&jf, p).max_abs()).fold(0.0, f64::max);
    let sig = compatibility(&flat, &points[0][..2], &points[0][2..])?.signature;
    let curved = MatrixField::new(2, |x| DMatrix::from_diagonal(&DVector::from_column_slice(&[1.0, 1.0 + x[0] * x[0]])));
    let (r, n) = flatness_vs_integrability(&curved, &points[1..])?[0];
    let h = HoloMetric::parse(&[vec!["1".into(), "0".into()], vec!["0".into(), "exp(z1)".into()]])?;
    let holo = holo_metric_lc_check(&h, &cube_grid(&[0.0; 4], 0.5, 3), 1e-4)?;
    Ok(vec![
        line("10 Euclidean J* integrable, signature (2n,0)", n_flat <= 1e-8 && sig == (4, 0), format!("‖N‖ {n_flat:.1e}, signature {sig:?}")),
        line("10 curved metric: R and N_J* nonzero", r >= 1e-2 && n >= 1e-2, format!("‖R‖ {r:.3}, ‖N‖ {n:.3}")),
        line("10 Γ(h_R) = Γ(h_I) for dz1² + e^z1 dz2²", holo.max_difference <= 1e-5, format!("max difference {:.3e}", holo.max_difference)),
    ])
}

fn criterion_11() -> Result<Vec<Line>> {
    let model = build_deformation(0.5, &default_bump(1), 1, DeformationHamiltonian::Constant(0.0))?;
    let inside = [[0.3, 0.1, 0.2, -0.1], [-0.2, 0.4, 0.1, 0.3]].map(|p| nijenhuis_rank(&model.j, &p));
    let flat = [[0.0; 4], [1.2, 0.0, 0.0, 0.0], [0.0, 0.9, 0.8, 0.0]].map(|p| nijenhuis_rank(&model.j, &p));
    Ok(vec![line(
        "11 Nijenhuis rank of J^ε",
        inside.iter().all(|&r| r == 2) && flat.iter().all(|&r| r == 0),
        format!("df ≠ 0: {inside:?}; df = 0: {flat:?}"),
    )])
}

fn criterion_12() -> Result<Vec<Line>> {
    let one = c(1.0, 0.0);
    let l1 = Lattice::standard(1);
    let a = classify_torus_orbit(&[one], &l1, 3);
    let b = classify_torus_orbit(&[c(0.0, 0.0)], &l1, 3);
    let d = classify_torus_orbit(&[one, c(2f64.sqrt(), 0.0)], &Lattice::standard(2), 3);
    let pass = a.kind == OrbitKind::Torus && b.kind == OrbitKind::Constant && d.kind == OrbitKind::Aperiodic && d.caveat;
    Ok(vec![line("12 torus orbit classification", pass, format!("{:?}, {:?}, {:?} (caveat {})", a.kind, b.kind, d.kind, d.caveat))])
}

fn criterion_13() -> Result<Vec<Line>> {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = 0.0_f64;
    let mut count = 0;
    for (m, reps) in [(2, 7), (4, 7), (6, 6)] {
        for _ in 0..reps {
            let a = DMatrix::from_fn(m, m, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
            let w = &a - a.transpose();
            let frame = symplectic_gram_schmidt(&w, &DMatrix::identity(m, m))?;
            worst = worst.max(pairing_defect(&pairing_matrix(&w, &frame)));
            count += 1;
        }
    }
    Ok(vec![line("13 symplectic Gram-Schmidt pairing", worst <= 1e-10 && count == 20, format!("{count} forms, worst defect {worst:.3e}"))])
}

fn main() {
    let criteria: [(&str, fn() -> Result<Vec<Line>>); 13] = [
        ("1", criterion_1),
        ("2", criterion_2),
        ("3", criterion_3),
        ("4", criterion_4),
        ("5", criterion_5),
        ("6", criterion_6),
        ("7", criterion_7),
        ("8", criterion_8),
        ("9", criterion_9),
        ("10", criterion_10),
        ("11", criterion_11),
        ("12", criterion_12),
        ("13", criterion_13),
    ];
    let mut failed = 0;
    for (id, run) in criteria {
        let t0 = Instant::now();
        let lines = run().unwrap_or_else(|e| vec![line(id, false, format!("error: {e}"))]);
        let secs = t0.elapsed().as_secs_f64();
        for l in lines {
            let tag = match (l.pass, l.asserted) {
                (true, _) => "PASS",
                (false, true) => "FAIL",
                (false, false) => "FAIL (not asserted)",
            };
            println!("[{tag}] {:<58} {} [{secs:.2}s]", l.label, l.detail);
            if !l.pass && l.asserted {
                failed += 1;
            }
        }
    }
    println!("acceptance: {failed} asserted failures");
    if failed > 0 {
        std::process::exit(1);
    }
}
