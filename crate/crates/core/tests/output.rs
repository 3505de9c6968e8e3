use hyshell::assembly::Assembler;
use hyshell::config::parse_config;
use hyshell::mesh::ShellModel;
use hyshell::output::{csv_header, write_vtk, Emitter, RunLog};
use hyshell::run::execute;
use hyshell::solver::{EquilibriumState, Solver};
use std::path::Path;

const PLATE: &str = r#"
[geometry]
kind = "plate"
eta1 = [0.0, 2.0]
eta2 = [0.0, 0.5]
[shell]
thickness = 0.05
orders = [1, 1, 2]
[material]
model = "neo_hookean"
lambda = 1e5
mu = 1e5
[mesh]
elements = [2, 1]
order = 2
[[bcs]]
edge = "eta1_min"
kind = "fixed"
[loads]
point_loads = [{ at = [2.0, 0.25], force = [0.0, 0.0, 0.3] }]
[solver]
method = "newton"
tol = 1e-10
max_steps = 3
[output]
probes = [[2.0, 0.25, 0.0], [1.0, 0.5, 0.025]]
"#;

fn empty_log() -> RunLog {
    RunLog { preset: None, method: "newton".into(), free_dofs: 0, status: "running".into(), error: None, steps: vec![] }
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r.records().map(|rec| rec.unwrap().iter().map(String::from).collect()).collect();
    (header, rows)
}

#[test]
fn csv_round_trips_every_value() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = parse_config(PLATE).unwrap();
    let out = execute(&cfg, dir.path()).unwrap();
    assert!(out.error.is_none());
    assert_eq!(out.states.len(), 3);
    let model = ShellModel::build(cfg.model_spec().unwrap()).unwrap();
    let asm = Assembler::new(&model).unwrap();
    let (header, rows) = read_csv(&dir.path().join("curve.csv"));
    assert_eq!(header, csv_header(2));
    assert_eq!(rows.len(), 3);
    for (row, s) in rows.iter().zip(&out.states) {
        let v: Vec<f64> = row.iter().map(|x| x.parse().unwrap()).collect();
        assert_eq!(v[0] as usize, s.step);
        assert_eq!(v[1].to_bits(), s.lambda.to_bits());
        assert_eq!(v[2].to_bits(), (s.lambda * 0.3).to_bits());
        for (k, p) in cfg.probes().unwrap().iter().enumerate() {
            let d = asm.displacement_at(&s.u, p[0], p[1], p[2]).unwrap();
            for c in 0..3 {
                assert_eq!(v[4 + 4 * k + c].to_bits(), d[c].to_bits());
            }
        }
    }
}

#[test]
fn zero_step_path_writes_only_the_header() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = parse_config(PLATE).unwrap();
    let model = ShellModel::build(cfg.model_spec().unwrap()).unwrap();
    let asm = Assembler::new(&model).unwrap();
    let em = Emitter::create(&asm, dir.path(), cfg.probes().unwrap(), 1.0, 1, empty_log()).unwrap();
    let log = em.finish(Ok(())).unwrap();
    assert!(log.steps.is_empty());
    let text = std::fs::read_to_string(dir.path().join("curve.csv")).unwrap();
    assert_eq!(text.lines().count(), 1);
    assert_eq!(text.trim_end(), csv_header(2).join(","));
}

#[test]
fn run_log_records_iterations() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = parse_config(PLATE).unwrap();
    let out = execute(&cfg, dir.path()).unwrap();
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("run.json")).unwrap()).unwrap();
    assert_eq!(json["status"], "completed");
    let steps = json["steps"].as_array().unwrap();
    assert_eq!(steps.len(), out.states.len());
    for (j, s) in steps.iter().zip(&out.states) {
        assert_eq!(j["iterations"].as_u64().unwrap() as usize, s.iterations);
        assert_eq!(j["residual_history"].as_array().unwrap().len(), s.residual_history.len());
    }
}

struct Vtk {
    points: Vec<[f64; 3]>,
    polys: Vec<Vec<usize>>,
    vectors: usize,
}

/// Minimal legacy-VTK polydata reader that checks every declared count.
fn read_vtk(path: &Path) -> Vtk {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# vtk DataFile Version"));
    lines.next().unwrap();
    assert_eq!(lines.next().unwrap(), "ASCII");
    assert_eq!(lines.next().unwrap(), "DATASET POLYDATA");
    let head: Vec<&str> = lines.next().unwrap().split_whitespace().collect();
    assert_eq!(head[0], "POINTS");
    let np: usize = head[1].parse().unwrap();
    let points: Vec<[f64; 3]> = (0..np)
        .map(|_| {
            let v: Vec<f64> = lines.next().unwrap().split_whitespace().map(|x| x.parse().unwrap()).collect();
            assert_eq!(v.len(), 3);
            [v[0], v[1], v[2]]
        })
        .collect();
    let head: Vec<&str> = lines.next().unwrap().split_whitespace().collect();
    assert_eq!(head[0], "POLYGONS");
    let (nc, size): (usize, usize) = (head[1].parse().unwrap(), head[2].parse().unwrap());
    let mut total = 0;
    let polys: Vec<Vec<usize>> = (0..nc)
        .map(|_| {
            let v: Vec<usize> = lines.next().unwrap().split_whitespace().map(|x| x.parse().unwrap()).collect();
            assert_eq!(v[0] + 1, v.len());
            total += v.len();
            v[1..].to_vec()
        })
        .collect();
    assert_eq!(total, size);
    assert_eq!(lines.next().unwrap(), format!("POINT_DATA {np}"));
    assert!(lines.next().unwrap().starts_with("VECTORS"));
    let vectors = lines.by_ref().take_while(|l| !l.is_empty()).count();
    Vtk { points, polys, vectors }
}

#[test]
fn vtk_surface_is_structurally_valid() {
    let cfg = parse_config("preset = \"pressurized_cylinder_6_4\"\n[mesh]\nelements = [2, 2]\n[geometry]\neta1 = [0.0, \"2*pi\"]\n[[bcs]]\nedge = \"eta2_min\"\nkind = \"fixed\"\n").unwrap();
    let mut spec = cfg.model_spec().unwrap();
    spec.bcs.retain(|b| b.edge == hyshell::mesh::Edge::Eta2Min);
    let model = ShellModel::build(spec).unwrap();
    assert!(model.mesh.periodic);
    let asm = Assembler::new(&model).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("surface_0.vtk");
    write_vtk(&asm, &vec![0.0; asm.n_full()], &path, 0).unwrap();
    let vtk = read_vtk(&path);
    assert_eq!(vtk.points.len(), model.mesh.num_nodes());
    assert_eq!(vtk.vectors, vtk.points.len());
    // periodic ring: one quad per node pair around, closing the seam
    assert_eq!(vtk.polys.len(), model.mesh.n1() * (model.mesh.n2() - 1));
    for q in &vtk.polys {
        assert_eq!(q.len(), 4);
        assert!(q.iter().all(|&i| i < vtk.points.len()));
        let mut d = q.clone();
        d.sort();
        d.dedup();
        assert_eq!(d.len(), 4);
    }
    // undeformed points lie on the unit cylinder
    for p in &vtk.points {
        assert!(((p[0] * p[0] + p[1] * p[1]).sqrt() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn vtk_points_follow_the_displacement() {
    let cfg = parse_config(PLATE).unwrap();
    let model = ShellModel::build(cfg.model_spec().unwrap()).unwrap();
    let asm = Assembler::new(&model).unwrap();
    let solver = Solver::new(&asm, cfg.solver.clone()).unwrap();
    let states = solver.run(&mut |_: &EquilibriumState| Ok(())).unwrap();
    let u = &states.last().unwrap().u;
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.vtk");
    write_vtk(&asm, u, &path, 3).unwrap();
    let vtk = read_vtk(&path);
    assert_eq!(vtk.polys.len(), (model.mesh.n1() - 1) * (model.mesh.n2() - 1));
    let tip = model.mesh.find_node(2.0, 0.25).unwrap();
    let d = asm.displacement_at(u, 2.0, 0.25, 0.0).unwrap();
    let p = vtk.points[tip];
    let want = [2.0 + d[0], 0.25 + d[1], d[2]];
    for k in 0..3 {
        assert!((p[k] - want[k]).abs() <= 1e-12 * (1.0 + want[k].abs()), "{p:?} vs {want:?}");
    }
    assert!(d[2] > 0.0);
}
