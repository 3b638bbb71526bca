use brinkman_fosls::adapt::{
    adaptive_loop, compute_errors, dorfler_mark, estimate, solve, step, AdaptRecord, Refinement, SolveOptions,
};
use brinkman_fosls::assembly::{eval_functional, FunctionalVariant};
use brinkman_fosls::mesh::{make_lshape_mesh, make_unit_square_mesh, refine_nvb, uniform_refine, Triangle, TriangleMesh};
use brinkman_fosls::problems::{problem_lshape, problem_poiseuille_layer, problem_polynomial_pressure};
use brinkman_fosls::spaces::{build_space, FeFunction, SpaceKind};

#[test]
fn error_of_zero_field_for_smooth_pressure() {
    let mesh = uniform_refine(&make_unit_square_mesh(2));
    let problem = problem_polynomial_pressure(1.0).unwrap();
    let e = compute_errors(&mesh, &problem, &FeFunction::zero(&mesh), 8).unwrap();
    assert_eq!(e.err_u(), 0.0);
    assert!(e.m_dev.abs() < 1e-14);
    // M = -pI: t²‖tr M‖² = 4‖p‖² = 16/45 and t²‖Div M‖² = ‖∇p‖² = 4/3
    assert!((e.m_trace - 16.0 / 45.0).abs() < 1e-12, "{}", e.m_trace);
    assert!((e.err_m().powi(2) - (16.0 / 45.0 + 4.0 / 3.0)).abs() < 1e-12, "{}", e.err_m().powi(2));
}

#[test]
fn estimator_total_equals_functional() {
    let mesh = uniform_refine(&make_unit_square_mesh(2));
    for t in [1.0, 1e-2] {
        let problem = problem_polynomial_pressure(t).unwrap();
        let space = build_space(&mesh, SpaceKind::Augmented);
        let sol = solve(&space, &problem, &SolveOptions::default()).unwrap();
        let ind = estimate(&space, &problem, &sol.field, 6).unwrap();
        assert!(ind.values.iter().all(|&v| v >= 0.0));
        let mean = brinkman_fosls::assembly::mean_trace(&mesh, &sol.field);
        let total = ind.total() + t * t * mean * mean * space.domain_area();
        let j = eval_functional(&space, &problem, &sol.field, FunctionalVariant::J, 6).unwrap();
        assert!((total - j).abs() <= 1e-10 * j, "{total} vs {j}");
        let j_star = eval_functional(&space, &problem, &sol.field, FunctionalVariant::JStar, 6).unwrap();
        assert!((ind.total() - j_star).abs() <= 1e-12 * j_star);
    }
}

/// Same triangulation with vertices and elements listed in another order.
fn renumbered(mesh: &TriangleMesh) -> TriangleMesh {
    let nv = mesh.num_vertices();
    assert!(nv % 7 != 0);
    let perm: Vec<usize> = (0..nv).map(|i| (i * 7 + 3) % nv).collect();
    let mut vertices = vec![[0.0; 2]; nv];
    for (old, &new) in perm.iter().enumerate() {
        vertices[new] = mesh.vertices()[old];
    }
    let triangles = mesh
        .triangles()
        .iter()
        .rev()
        .map(|t| Triangle::new([perm[t.v[0]], perm[t.v[1]], perm[t.v[2]]], t.refinement_edge))
        .collect();
    TriangleMesh::new(vertices, triangles).unwrap()
}

#[test]
fn errors_do_not_depend_on_numbering() {
    let mesh = uniform_refine(&make_unit_square_mesh(2));
    let other = renumbered(&mesh);
    let problem = problem_poiseuille_layer(0.1).unwrap();
    let a = solve(&build_space(&mesh, SpaceKind::Augmented), &problem, &SolveOptions::default()).unwrap();
    let b = solve(&build_space(&other, SpaceKind::Augmented), &problem, &SolveOptions::default()).unwrap();
    let ea = compute_errors(&mesh, &problem, &a.field, 6).unwrap();
    let eb = compute_errors(&other, &problem, &b.field, 6).unwrap();
    assert!((ea.err_u() - eb.err_u()).abs() < 1e-8 * ea.err_u());
    assert!((ea.err_m() - eb.err_m()).abs() < 1e-8 * ea.err_m());
}

#[test]
fn first_loop_step_equals_standalone_solve() {
    let mesh = make_unit_square_mesh(2);
    let problem = problem_poiseuille_layer(5e-2).unwrap();
    let opts = SolveOptions::default();
    let run = adaptive_loop(&problem, mesh.clone(), SpaceKind::Augmented, Refinement::Dorfler(0.25), 0, &opts).unwrap();
    assert_eq!(run.records.len(), 1);
    let space = build_space(&mesh, SpaceKind::Augmented);
    let sol = solve(&space, &problem, &opts).unwrap();
    let ind = estimate(&space, &problem, &sol.field, 6).unwrap();
    assert_eq!(run.solution, sol.field);
    assert_eq!(run.records[0].est, ind.total().sqrt());
    let e = compute_errors(&mesh, &problem, &sol.field, 6).unwrap();
    assert_eq!(run.records[0].err_u, Some(e.err_u()));
    assert_eq!(run.records[0].iterations, sol.report.iterations);
}

#[test]
fn uniform_driver_equals_manual_loop() {
    let problem = problem_lshape(0.1).unwrap();
    let opts = SolveOptions::default();
    let run = adaptive_loop(&problem, make_lshape_mesh(), SpaceKind::Augmented, Refinement::Uniform, 1500, &opts).unwrap();
    let mut mesh = make_lshape_mesh();
    let mut manual: Vec<AdaptRecord> = Vec::new();
    loop {
        let (r, _, _) = step(&mesh, &problem, SpaceKind::Augmented, &opts, manual.len()).unwrap();
        let done = r.dofs >= 1500;
        manual.push(r);
        if done {
            break;
        }
        mesh = uniform_refine(&mesh);
    }
    assert_eq!(run.records, manual);
    assert!(run.records.windows(2).all(|w| w[1].dofs > w[0].dofs));
}

#[test]
fn full_bulk_marks_every_element() {
    let mesh = make_unit_square_mesh(2);
    let problem = problem_lshape(0.5).unwrap();
    let (_, ind, _) = step(&mesh, &problem, SpaceKind::Augmented, &SolveOptions::default(), 0).unwrap();
    let marked = dorfler_mark(&ind, 1.0).unwrap();
    assert_eq!(marked, (0..mesh.num_elements()).collect::<Vec<_>>());
    let refined = refine_nvb(&mesh, &marked).unwrap();
    assert!(refined.num_elements() >= 2 * mesh.num_elements());
}

#[test]
fn lshape_refines_towards_corner() {
    let problem = problem_lshape(1e-2).unwrap();
    let opts = SolveOptions::default();
    let mut mesh = make_lshape_mesh();
    let mut records = Vec::new();
    for i in 0..15 {
        let (r, ind, _) = step(&mesh, &problem, SpaceKind::Augmented, &opts, i).unwrap();
        records.push(r);
        mesh = refine_nvb(&mesh, &dorfler_mark(&ind, 0.25).unwrap()).unwrap();
    }
    let corner = mesh.vertices().iter().position(|p| *p == [0.0, 0.0]).unwrap();
    let areas: Vec<f64> = (0..mesh.num_elements()).map(|k| mesh.geometry(k).unwrap().area).collect();
    let max_area = areas.iter().copied().fold(0.0, f64::max);
    let min_area = areas.iter().copied().fold(f64::INFINITY, f64::min);
    let corner_area = (0..mesh.num_elements())
        .filter(|&k| mesh.triangles()[k].v.contains(&corner))
        .map(|k| areas[k])
        .fold(f64::INFINITY, f64::min);
    assert_eq!(corner_area, min_area);
    assert!(corner_area < 0.1 * max_area, "{corner_area} vs {max_area}");
    assert!(records.windows(2).all(|w| w[1].dofs > w[0].dofs));
}

#[test]
fn estimator_decreases_overall() {
    // new boundary nodes change the interpolated Dirichlet data, so a single step can raise η
    let problem = problem_poiseuille_layer(5e-2).unwrap();
    let run = adaptive_loop(
        &problem,
        make_unit_square_mesh(2),
        SpaceKind::Augmented,
        Refinement::Dorfler(0.25),
        4000,
        &SolveOptions::default(),
    )
    .unwrap();
    let first = run.records[0].est;
    let last = run.records.last().unwrap().est;
    assert!(last < 0.25 * first, "{first} -> {last}");
    let recovered = run.records.windows(2).filter(|w| w[1].est > w[0].est).count();
    assert!(recovered * 4 < run.records.len(), "{recovered} increases in {} steps", run.records.len());
}
