//! One function per verb. Each fills a [`Report`] with results, checks and tables.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde_json::json;

use phhs::action::{disk_action_2, variational_gradient, ActionContext, DiscreteCurve, FixedSet, PolarVariant};
use phhs::connection::{compatibility, flatness_vs_integrability, holo_metric_lc_check, HoloMetric};
use phhs::flow::{continue_along_path, flow_word, trajectory_grid, FlowConfig, GridSpec, TimePath};
use phhs::hamiltonian::{assemble_phhs, cube_grid, integrability_report, omega_i_from, PhhsModel};
use phhs::models::{
    build_central_problem, build_deformation, build_proper_phhs, build_rotation_family, build_standard_hhs, deformation_d_omega_formula,
    real_field, DeformationHamiltonian,
};
use phhs::morse::{area_law_check, period_function, verify_t_periodic, Chart, PlanarSystem};
use phhs::tensor::{exterior_derivative_2form as d_form, nijenhuis_rank, MatrixField, Point, ThreeForm, TwoFormField};
use phhs::PhhsError;

use crate::config::{ModelConfig, ScenarioConfig};
use crate::report::{coordinate_names, num, nums, Report, Table};

#[derive(Debug)]
pub enum RunError {
    Config(String),
    Library(PhhsError),
}

impl From<PhhsError> for RunError {
    fn from(e: PhhsError) -> Self {
        RunError::Library(e)
    }
}

impl RunError {
    /// 3 for configuration or model-definition problems, 4 for failures during a run.
    pub fn exit_code(&self) -> i32 {
        use PhhsError::*;
        match self {
            RunError::Config(_) => 3,
            RunError::Library(e) => match e {
                Parse(_) | UnknownIdentifier { .. } | Dimension(_) | NotAlmostComplex(_) | NotAnticompatible(_) | NonClosedForm { .. }
                | NotHolomorphic(_) | QDependence(_) | ZeroDenominator | MissingPrimitive | Invalid(_) => 3,
                SingularForm | DegenerateForm | StepBudgetExceeded { .. } | NonFiniteState { .. } | SingularMetric | NoReturn => 4,
            },
        }
    }

    /// Error name followed by its message.
    pub fn describe(&self) -> String {
        match self {
            RunError::Config(m) => format!("ConfigError: {m}"),
            RunError::Library(e) => {
                let dbg = format!("{e:?}");
                let name: String = dbg.chars().take_while(|c| c.is_alphanumeric()).collect();
                format!("{name}: {e}")
            }
        }
    }
}

type Run = Result<(), RunError>;

fn config_err<T>(msg: impl Into<String>) -> Result<T, RunError> {
    Err(RunError::Config(msg.into()))
}

fn flow_cfg(cfg: &ScenarioConfig) -> Result<FlowConfig, RunError> {
    let mut f = FlowConfig::new(cfg.flow.dt, cfg.flow.max_step_count)?;
    f.richardson = cfg.flow.richardson;
    Ok(f)
}

fn z0(cfg: &ScenarioConfig) -> Complex64 {
    Complex64::new(cfg.z0[0], cfg.z0[1])
}

/// Structure data for every model kind.
fn structure(model: &ModelConfig) -> Result<(MatrixField, TwoFormField, usize), RunError> {
    match model {
        ModelConfig::Rotation { phi } => {
            let d = build_rotation_family(phi)?;
            Ok((d.j, d.omega_r, 4))
        }
        _ => {
            let m = hamiltonian_model(model)?;
            Ok((m.j, m.omega_r, 2 * m.m))
        }
    }
}

fn hamiltonian_model(model: &ModelConfig) -> Result<PhhsModel, RunError> {
    Ok(match model {
        ModelConfig::Central => build_central_problem()?,
        ModelConfig::Standard { n, hamiltonian } => build_standard_hhs(*n, hamiltonian)?,
        ModelConfig::Proper { f, h, h_r } => build_proper_phhs(f, h, h_r)?,
        ModelConfig::Deformation { epsilon, f, n, constant_hamiltonian } => {
            let ham = constant_hamiltonian.map_or(DeformationHamiltonian::Regular, DeformationHamiltonian::Constant);
            build_deformation(*epsilon, f.as_deref().unwrap_or_default(), *n, ham)?
        }
        ModelConfig::Rotation { .. } => return config_err("the rotation model has no Hamiltonian; use integrability-scan"),
    })
}

fn start(cfg: &ScenarioConfig, model: &PhhsModel) -> Result<Point, RunError> {
    let x0 = cfg.x0.clone().unwrap_or_else(|| model.base_point.clone());
    if x0.len() != 2 * model.m {
        return config_err(format!("x0 has {} coordinates, model needs {}", x0.len(), 2 * model.m));
    }
    Ok(x0)
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

pub fn integrate(cfg: &ScenarioConfig, rep: &mut Report) -> Run {
    let model = hamiltonian_model(&cfg.model)?;
    let (fields, assembly) = assemble_phhs(&model)?;
    let x0 = start(cfg, &model)?;
    let g = &cfg.grid;
    let spec = GridSpec { t_range: (g.t_range[0], g.t_range[1]), s_range: (g.s_range[0], g.s_range[1]), nt: g.nt, ns: g.ns };
    let grid = trajectory_grid(&fields, &x0, z0(cfg), spec, &flow_cfg(cfg)?)?;
    let h0 = fields.hamiltonian(&x0);
    let mut header: Vec<String> = vec!["t".into(), "s".into()];
    header.extend(coordinate_names(x0.len()));
    header.extend(["energy_drift".into(), "closed_form_error".into()]);
    let mut table = Table { file: "grid.csv".into(), header, rows: Vec::new() };
    let (mut drift, mut cf_err) = (0.0_f64, 0.0_f64);
    for i in 0..spec.nt {
        for j in 0..spec.ns {
            let p = grid.at(i, j);
            let d = (fields.hamiltonian(p) - h0).norm();
            let e = match &model.closed_form {
                Some(cf) => {
                    let t = grid.time(i, j);
                    model.distance(p, &cf.eval(&x0, &[z0(cfg), Complex64::new(t.re, cfg.z0[1]), t])?)
                }
                None => f64::NAN,
            };
            drift = drift.max(d);
            if e.is_finite() {
                cf_err = cf_err.max(e);
            }
            let mut row = nums(&[grid.time(i, j).re, grid.time(i, j).im]);
            row.extend(nums(p));
            row.extend(nums(&[d, e]));
            table.push(row);
        }
    }
    rep.tables.push(table);
    let dg = &grid.diagnostics;
    rep.result("model", &model.name);
    rep.result("x0", &x0);
    rep.result("diagnostics", json!({"swap_defect": dg.swap_defect, "drift_h_r": dg.drift_h_r, "drift_h_i": dg.drift_h_i, "cr_residual": dg.cr_residual}));
    rep.at_most("assembly identities", assembly.worst_identity(), model.tol.derived);
    rep.at_most("swap defect", dg.swap_defect, model.tol.exact);
    rep.at_most("energy drift", drift, model.tol.exact);
    // Grid differences, so the bound depends on the spacing.
    rep.at_most("Cauchy-Riemann residual", dg.cr_residual, 10.0 * model.tol.derived);
    if model.closed_form.is_some() {
        rep.result("max_closed_form_error", cf_err);
        rep.at_most("closed-form error", cf_err, model.tol.exact);
    }
    Ok(())
}

pub fn foliate(cfg: &ScenarioConfig, rep: &mut Report) -> Run {
    if cfg.words.is_empty() {
        return config_err("foliate needs at least one word in `words`");
    }
    let model = hamiltonian_model(&cfg.model)?;
    let (fields, _) = assemble_phhs(&model)?;
    let x0 = start(cfg, &model)?;
    let fc = flow_cfg(cfg)?;
    let h0 = fields.hamiltonian(&x0);
    let mut header: Vec<String> = vec!["word".into()];
    header.extend(coordinate_names(x0.len()));
    header.push("energy_drift".into());
    let mut table = Table { file: "words.csv".into(), header, rows: Vec::new() };
    let mut endpoints = Vec::new();
    let mut drift = 0.0_f64;
    for (k, w) in cfg.words.iter().enumerate() {
        let word: Vec<(f64, f64)> = w.iter().map(|p| (p[0], p[1])).collect();
        let end = flow_word(&fields, &x0, &word, &fc)?;
        let d = (fields.hamiltonian(&end) - h0).norm();
        drift = drift.max(d);
        let mut row = vec![k.to_string()];
        row.extend(nums(&end));
        row.push(num(d));
        table.push(row);
        endpoints.push(end);
    }
    rep.tables.push(table);
    rep.result("x0", &x0);
    rep.result("endpoints", &endpoints);
    if endpoints.len() > 1 {
        let e0 = &endpoints[0];
        let pairs: Vec<f64> = endpoints[1..].iter().map(|e| dist(e0, e)).collect();
        let neg: Vec<f64> = endpoints[1..].iter().map(|e| e0.iter().zip(e).map(|(a, b)| (a + b).powi(2)).sum::<f64>().sqrt()).collect();
        rep.result("distance_to_first", pairs);
        rep.result("distance_to_negative_of_first", neg);
    }
    rep.at_most("energy drift", drift, model.tol.exact);
    Ok(())
}

pub fn monodromy(cfg: &ScenarioConfig, rep: &mut Report) -> Run {
    let model = hamiltonian_model(&cfg.model)?;
    let (fields, _) = assemble_phhs(&model)?;
    let x0 = start(cfg, &model)?;
    let fc = flow_cfg(cfg)?;
    let p = &cfg.path;
    let path = TimePath::circle(Complex64::new(p.center[0], p.center[1]), z0(cfg), p.turns, p.segments)?;
    let mut header: Vec<String> = vec!["node".into(), "t".into(), "s".into()];
    header.extend(coordinate_names(x0.len()));
    let mut table = Table { file: "path.csv".into(), header, rows: Vec::new() };
    let nodes = path.nodes();
    let mut x = x0.clone();
    for (k, z) in nodes.iter().enumerate() {
        if k > 0 {
            x = continue_along_path(&fields, &x, &TimePath::new(vec![nodes[k - 1], *z])?, &fc)?;
        }
        let mut row = vec![k.to_string(), num(z.re), num(z.im)];
        row.extend(nums(&x));
        table.push(row);
    }
    rep.tables.push(table);
    let neg: Vec<f64> = x0.iter().map(|v| -v).collect();
    let (to_start, to_neg) = (dist(&x, &x0), dist(&x, &neg));
    rep.result("x0", &x0);
    rep.result("endpoint", &x);
    rep.result("distance_to_start", to_start);
    rep.result("distance_to_negated_start", to_neg);
    let sheet = if to_start <= 1e-5 {
        "returned"
    } else if to_neg <= 1e-5 {
        "sign-flipped"
    } else {
        "other"
    };
    rep.result("sheet", sheet);
    rep.at_most("energy drift", (fields.hamiltonian(&x) - fields.hamiltonian(&x0)).norm(), model.tol.exact);
    if let Some(cf) = &model.closed_form {
        let want = cf.eval(&x0, nodes)?;
        rep.result("closed_form_endpoint", &want);
        rep.at_most("closed-form endpoint error", dist(&x, &want), 1e-5);
    }
    Ok(())
}

pub fn action_check(cfg: &ScenarioConfig, rep: &mut Report) -> Run {
    let model = hamiltonian_model(&cfg.model)?;
    let (fields, _) = assemble_phhs(&model)?;
    let ctx = ActionContext::new(&model, &fields)?;
    let x0 = start(cfg, &model)?;
    let g = &cfg.grid;
    let spec = GridSpec { t_range: (g.t_range[0], g.t_range[1]), s_range: (g.s_range[0], g.s_range[1]), nt: g.nt, ns: g.ns };
    let grid = trajectory_grid(&fields, &x0, z0(cfg), spec, &flow_cfg(cfg)?)?;
    let curve = DiscreteCurve::from_grid(&grid)?;
    let mut bent = curve.clone();
    let mid = Complex64::new(0.5 * (g.t_range[0] + g.t_range[1]), 0.5 * (g.s_range[0] + g.s_range[1]));
    let Some(k) = bent.nearest_interior(mid) else {
        return config_err("action-check needs a grid with interior nodes (nt, ns ≥ 3)");
    };
    bent.displace(k, 0, cfg.action.displacement);
    let real = cfg.action.real_part.unwrap_or(model.h_holomorphic.is_none());
    let a = variational_gradient(&ctx, &curve, FixedSet::Boundary, cfg.action.delta);
    let b = variational_gradient(&ctx, &bent, FixedSet::Boundary, cfg.action.delta);
    let norm = |v: &phhs::action::VariationalGradient| if real { v.max_re() } else { v.max_norm() };
    let (na, nb) = (norm(&a), norm(&b));
    let mut table = Table::new("gradient.csv", &["t", "s", "free", "grad_re", "grad_im"]);
    for (i, t) in curve.times.iter().enumerate() {
        let mut row = nums(&[t.re, t.im]);
        row.push(u8::from(a.free[i]).to_string());
        row.extend(nums(&[a.re[i].amax(), a.im[i].amax()]));
        table.push(row);
    }
    rep.tables.push(table);
    let action = curve.action(&ctx);
    let constant = DiscreteCurve::disk(Complex64::new(0.0, 0.0), 0.5, 8, 16, PolarVariant::Two, |_| x0.clone())?;
    let a2 = disk_action_2(&ctx, &constant)?;
    let h0 = (ctx.h)(&x0);
    rep.result("real_part_only", real);
    rep.result("action", [action.re, action.im]);
    rep.result("gradient_on_trajectory", na);
    rep.result("gradient_displaced", nb);
    rep.result("displaced_node", k);
    rep.result("constant_curve_action", [a2.re, a2.im]);
    rep.result("hamiltonian_at_x0", [h0.re, h0.im]);
    rep.at_most("gradient ratio", na / nb, cfg.action.max_ratio);
    rep.at_most("constant-curve action minus H(x0)", (a2 - h0).norm(), 1e-8);
    Ok(())
}

fn component_label(dim: usize, (a, b, c): (usize, usize, usize)) -> String {
    let names = coordinate_names(dim);
    format!("{}{}{}", names[a], names[b], names[c])
}

fn largest_component(w: &ThreeForm) -> ((usize, usize, usize), f64) {
    w.independent().into_iter().fold(((0, 1, 2), 0.0), |best, (k, v)| if v.abs() > best.1.abs() { (k, v) } else { best })
}

pub fn integrability_scan(cfg: &ScenarioConfig, rep: &mut Report) -> Run {
    let (j, omega_r, dim) = structure(&cfg.model)?;
    let s = &cfg.scan;
    let center = s.center.clone().unwrap_or_else(|| vec![0.0; dim]);
    if center.len() != dim {
        return config_err(format!("scan.center has {} coordinates, model needs {dim}", center.len()));
    }
    let grid = cube_grid(&center, s.half, s.n);
    let r = integrability_report(&j, &omega_r, &grid, s.threshold);
    let omega_i = omega_i_from(&omega_r, &j);
    let mut header = coordinate_names(dim);
    header.extend(["nijenhuis", "d_omega_i", "component", "component_value"].map(String::from));
    let mut table = Table { file: "scan.csv".into(), header, rows: Vec::new() };
    for (p, (n, d)) in grid.iter().zip(&r.values) {
        let (k, v) = largest_component(&d_form(&omega_i, p));
        let mut row = nums(p);
        row.extend(nums(&[*n, *d]));
        row.push(component_label(dim, k));
        row.push(num(v));
        table.push(row);
    }
    rep.tables.push(table);
    let at_center: Vec<_> = d_form(&omega_i, &center)
        .independent()
        .into_iter()
        .filter(|(_, v)| v.abs() > s.threshold)
        .map(|(k, v)| json!({"component": component_label(dim, k), "value": v}))
        .collect();
    let proper = r.max_nijenhuis > s.threshold || r.max_d_omega_i > s.threshold;
    let disagreements = r.values.iter().filter(|(n, d)| (*n <= s.threshold) != (*d <= s.threshold)).count();
    rep.result("points", grid.len());
    rep.result("max_nijenhuis", r.max_nijenhuis);
    rep.result("max_d_omega_i", r.max_d_omega_i);
    rep.result("d_omega_i_at_center", at_center);
    rep.result("pointwise_disagreements", disagreements);
    rep.result("flag", if proper { "proper" } else { "integrable" });
    rep.holds("N_J small iff dΩ_I small", (r.max_nijenhuis <= s.threshold) == (r.max_d_omega_i <= s.threshold));
    Ok(())
}

pub fn deform(cfg: &ScenarioConfig, rep: &mut Report) -> Run {
    let d = &cfg.deform;
    let f = d.f.clone().unwrap_or_default();
    let n = d.n;
    let dim = 4 * n;
    if d.probes.iter().any(|p| p.len() != dim) {
        return config_err(format!("deform.probes need {dim} coordinates"));
    }
    let f_field = real_field(&f, 2 * n)?;
    let grid = cube_grid(&vec![0.0; dim], cfg.scan.half, cfg.scan.n);
    let thr = cfg.scan.threshold;
    let mut table = Table::new("deform.csv", &["epsilon", "max_nijenhuis", "max_d_omega_i", "formula_error", "flag"]);
    let mut ranks = Vec::new();
    let mut worst_formula = 0.0_f64;
    let mut consistent = true;
    for &eps in &d.epsilons {
        let model = build_deformation(eps, &f, n, DeformationHamiltonian::Constant(0.0))?;
        let r = integrability_report(&model.j, &model.omega_r, &grid, thr);
        let omega_i = omega_i_from(&model.omega_r, &model.j);
        let err = grid
            .iter()
            .map(|p| {
                let (num_d, formula) = (d_form(&omega_i, p), deformation_d_omega_formula(eps, &f_field, n, p));
                num_d.independent().iter().zip(formula.independent()).map(|(a, b)| (a.1 - b.1).abs()).fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        worst_formula = worst_formula.max(err);
        let integrable = r.max_nijenhuis <= thr && r.max_d_omega_i <= thr;
        consistent &= (r.max_nijenhuis <= thr) == (r.max_d_omega_i <= thr);
        ranks.push(json!({"epsilon": eps, "ranks": d.probes.iter().map(|p| nijenhuis_rank(&model.j, p)).collect::<Vec<_>>()}));
        let mut row = nums(&[eps, r.max_nijenhuis, r.max_d_omega_i, err]);
        row.push(if integrable { "integrable" } else { "proper" }.into());
        table.push(row);
    }
    rep.tables.push(table);
    rep.result("f", &f);
    rep.result("probes", &d.probes);
    rep.result("nijenhuis_ranks", ranks);
    rep.at_most("dΩ_I against the closed formula", worst_formula, 1e-3);
    rep.holds("N_J small iff dΩ_I small for every epsilon", consistent);
    Ok(())
}

pub fn morse_period(cfg: &ScenarioConfig, rep: &mut Report) -> Run {
    let m = &cfg.morse;
    let sys = PlanarSystem::new(real_field(&m.v, 1)?, m.period)?;
    let fc = flow_cfg(cfg)?;
    let mut periods = Table::new("periods.csv", &["radius", "period_function", "period_identity_chart", "period_rescaled_chart", "error"]);
    let mut worst = 0.0_f64;
    for &r in &m.radii {
        let plain = verify_t_periodic(&sys, Chart::Identity, r, &fc)?;
        let rescaled = verify_t_periodic(&sys, Chart::Rescaled, r, &fc)?;
        let err = (rescaled - m.period).abs();
        worst = worst.max(err);
        periods.push(nums(&[r, period_function(&sys, r), plain, rescaled, err]));
    }
    let mut areas = Table::new("area.csv", &["energy", "area", "period_times_energy", "residual"]);
    let mut worst_area = 0.0_f64;
    for &e in &m.energies {
        let law = area_law_check(&sys, Chart::Rescaled, e, None)?;
        worst_area = worst_area.max(law.residual);
        areas.push(nums(&[e, law.area, law.t_times_e, law.residual]));
    }
    rep.tables.push(periods);
    rep.tables.push(areas);
    rep.result("max_period_error", worst);
    rep.result("max_area_residual", worst_area);
    rep.at_most("rescaled period error", worst, 1e-4);
    rep.at_most("area law residual", worst_area, 1e-4);
    Ok(())
}

fn metric_field(components: &[Vec<String>]) -> Result<MatrixField, RunError> {
    let n = components.len();
    let entries = components.iter().flatten().map(|s| real_field(s, n)).collect::<phhs::Result<Vec<_>>>()?;
    Ok(MatrixField::new(n, move |x| {
        let mut p = x.to_vec();
        p.resize(2 * n, 0.0);
        DMatrix::from_fn(n, n, |i, j| entries[i * n + j].eval(&p))
    }))
}

pub fn connection_check(cfg: &ScenarioConfig, rep: &mut Report) -> Run {
    let c = &cfg.connection;
    let n = c.metric.len();
    let g = metric_field(&c.metric)?;
    let pairs = flatness_vs_integrability(&g, &c.points)?;
    let mut header = (1..=n).map(|k| format!("q{k}")).chain((1..=n).map(|k| format!("p{k}"))).collect::<Vec<_>>();
    header.extend(["riemann", "nijenhuis", "asymmetry", "square", "positive", "negative"].map(String::from));
    let mut table = Table { file: "connection.csv".into(), header, rows: Vec::new() };
    let (mut asym, mut square, mut agree) = (0.0_f64, 0.0_f64, true);
    let mut signatures = Vec::new();
    for (p, (r, nij)) in c.points.iter().zip(&pairs) {
        let comp = compatibility(&g, &p[..n], &p[n..])?;
        asym = asym.max(comp.asymmetry);
        square = square.max(comp.square);
        agree &= (*r <= c.threshold) == (*nij <= c.threshold);
        signatures.push(comp.signature);
        let mut row = nums(p);
        row.extend(nums(&[*r, *nij, comp.asymmetry, comp.square]));
        row.extend([comp.signature.0.to_string(), comp.signature.1.to_string()]);
        table.push(row);
    }
    rep.tables.push(table);
    rep.result("signatures", &signatures);
    rep.result("flat", pairs.iter().all(|(r, _)| *r <= c.threshold));
    rep.at_most("J*² + 1", square, 1e-8);
    rep.at_most("ω_can(·, J*·) asymmetry", asym, 1e-8);
    rep.holds("flat iff J* integrable at every point", agree);
    rep.holds("constant signature", signatures.windows(2).all(|w| w[0] == w[1]));
    if let Some(h) = &c.holomorphic {
        let metric = HoloMetric::parse(&h.components)?;
        let grid = cube_grid(&vec![0.0; 2 * metric.n], h.half, h.n);
        let r = holo_metric_lc_check(&metric, &grid, h.fd_step)?;
        rep.result("holomorphic", json!({"points": r.points, "max_difference": r.max_difference, "max_christoffel": r.max_christoffel}));
        rep.at_most("Γ(h_R) − Γ(h_I)", r.max_difference, 1e-5);
    }
    Ok(())
}
