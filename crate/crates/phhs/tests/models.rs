use phhs::action::*;
use phhs::flow::*;
use phhs::hamiltonian::*;
use phhs::models::*;
use phhs::par::Exec;
use phhs::{Complex64, PhhsError};

fn z(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[test]
fn sequential_and_parallel_grids_agree() {
    let model = build_central_problem().unwrap();
    let (fields, _) = assemble_phhs(&model).unwrap();
    let spec = GridSpec { t_range: (0.0, 0.5), s_range: (0.0, 0.5), nt: 6, ns: 6 };
    let cfg = FlowConfig::default();
    let a = trajectory_grid_with(&fields, &CENTRAL_X0, z(0.0, 0.0), spec, &cfg, Exec::Sequential).unwrap();
    let b = trajectory_grid_with(&fields, &CENTRAL_X0, z(0.0, 0.0), spec, &cfg, Exec::Parallel).unwrap();
    assert_eq!(a.values, b.values);
}

#[test]
fn central_flows_commute_away_from_branch_point() {
    let model = build_central_problem().unwrap();
    let (fields, report) = assemble_phhs(&model).unwrap();
    assert!(report.passed(), "{report:?}");
    let d = commutation_defect(&fields, &CENTRAL_X0, 0.3, 0.4, &FlowConfig::default()).unwrap();
    assert!(d < 1e-10, "{d}");
}

#[test]
fn holomorphic_trajectory_is_critical_for_parallelogram_action() {
    let model = build_standard_hhs(1, "P^2/2 + Q^2/2").unwrap();
    let (fields, _) = assemble_phhs(&model).unwrap();
    let ctx = ActionContext::new(&model, &fields).unwrap();
    let spec = GridSpec { t_range: (0.0, 0.6), s_range: (0.0, 0.6), nt: 9, ns: 9 };
    let grid = trajectory_grid(&fields, &[0.3, 0.2, 0.1, -0.1], z(0.0, 0.0), spec, &FlowConfig::default()).unwrap();
    let curve = DiscreteCurve::from_grid(&grid).unwrap();
    let g = variational_gradient(&ctx, &curve, FixedSet::Boundary, 1e-5);
    assert!(g.max_norm() < 1e-3, "{}", g.max_norm());
}

#[test]
fn model_without_primitive_has_no_action() {
    let mut model = build_standard_hhs(1, "P^2/2").unwrap();
    model.lambda_r = None;
    let (fields, _) = assemble_phhs(&model).unwrap();
    assert!(matches!(ActionContext::new(&model, &fields), Err(PhhsError::MissingPrimitive)));
}

#[test]
fn nonclosed_alpha_is_reported() {
    assert!(matches!(build_proper_phhs("1", "exp(x2)", "-y1").and_then(|m| assemble_phhs(&m)), Err(PhhsError::NonClosedForm { .. })));
}
