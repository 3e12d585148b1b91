//! One line per acceptance criterion. Run with `--nocapture` to see the report:
//!
//! ```text
//! cargo test -p hdg-maxwell --test acceptance -- --nocapture
//! ```
//!
//! Criteria that cannot be met are reported as `FAIL` and listed in
//! `KNOWN_FAILURES` together with the reason; any other failure fails the test.

mod common;

use std::cell::Cell;
use std::time::{Duration, Instant};

use common::{c, cube, manufactured_spec, max_abs, max_abs_diff, reference_tet, two_tets, Manufactured};
use hdg_maxwell::assembly::{self, assemble_full, DiscreteSpace, DofGroup, FullOptions, LocalOptions, Mode, SolveOptions};
use hdg_maxwell::basis::{eval_element_vector_basis, eval_face_tangential_basis};
use hdg_maxwell::mesh::Mesh;
use hdg_maxwell::postproc::{self, ErrorReport};
use hdg_maxwell::problem::{self, ProblemSpec};
use hdg_maxwell::quadrature::{tet_rule, tri_rule, MAX_DEGREE};
use hdg_maxwell::{linsolve, C64};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Criteria expected to fail, with the reason printed next to the verdict.
const KNOWN_FAILURES: &[(&str, &str)] = &[(
    "1c",
    "k=2 q errors of Example 1 are ~6-7x below the printed table; the same code matches the interface tables within 2x",
)];

struct Report {
    lines: Vec<(String, bool, String)>,
}

impl Report {
    fn record(&mut self, id: &str, pass: bool, detail: String) {
        let verdict = if pass { "PASS" } else { "FAIL" };
        let note = KNOWN_FAILURES
            .iter()
            .find(|(k, _)| *k == id && !pass)
            .map_or(String::new(), |(_, why)| format!(" [known: {why}]"));
        println!("{verdict} {id:<3} {detail}{note}");
        self.lines.push((id.to_string(), pass, detail));
    }
}

fn vm_hwm_mb() -> Option<f64> {
    let status = std::fs::read_to_string("/proc/self/status").ok()?;
    let line = status.lines().find(|l| l.starts_with("VmHWM"))?;
    let kb: f64 = line.split_whitespace().nth(1)?.parse().ok()?;
    Some(kb / 1024.0)
}

struct Sweep {
    reports: Vec<ErrorReport>,
    times: Vec<Duration>,
}

fn sweep(spec: &ProblemSpec, k: usize, m: usize, levels: &[usize], opts: &SolveOptions) -> Sweep {
    let mut reports = Vec::new();
    let mut times = Vec::new();
    for &n in levels {
        let t = Instant::now();
        let mesh = Mesh::build_structured_cube(n).unwrap();
        let space = DiscreteSpace::new(&mesh, k, m).unwrap();
        let fields = assembly::solve(spec, &mesh, &space, opts).unwrap();
        reports.push(postproc::l2_errors(spec, &mesh, &space, &fields).unwrap());
        times.push(t.elapsed());
    }
    postproc::fill_rates(&mut reports);
    Sweep { reports, times }
}

fn final_rates(s: &Sweep) -> (f64, f64) {
    let last = s.reports.last().unwrap();
    (last.rate_u.unwrap(), last.rate_q.unwrap())
}

fn within(x: f64, lo: f64, hi: f64) -> bool {
    (lo..=hi).contains(&x)
}

fn check_rates(r: &mut Report, id: &str, label: &str, s: &Sweep, u: (f64, f64), q: Option<(f64, f64)>) {
    let (ru, rq) = final_rates(s);
    let mut pass = within(ru, u.0, u.1);
    let mut detail = format!("{label}: u-rate {ru:.3} in [{}, {}]", u.0, u.1);
    if let Some(q) = q {
        pass &= within(rq, q.0, q.1);
        detail += &format!(", q-rate {rq:.3} in [{}, {}]", q.0, q.1);
    } else {
        detail += &format!(" (q-rate {rq:.3})");
    }
    r.record(id, pass, detail);
}

// printed relative errors at n = 2, 4, 8 for (q, u)
const TABLE2_K1: [(f64, f64); 3] = [(1.23e-1, 1.55e-1), (6.38e-2, 4.37e-2), (3.23e-2, 1.15e-2)];
const TABLE2_K2: [(f64, f64); 3] = [(2.86e-2, 1.06e-2), (7.50e-3, 1.33e-3), (1.92e-3, 1.67e-4)];

fn magnitude_ratios(s: &Sweep, table: &[(f64, f64); 3]) -> Vec<f64> {
    s.reports
        .iter()
        .zip(table)
        .flat_map(|(e, &(q, u))| [e.err_q_rel / q, e.err_u_rel / u])
        .collect()
}

fn criterion_1_2(r: &mut Report) -> Duration {
    let ex1 = problem::example1(1.0);
    let opts = SolveOptions::default();
    let k1 = sweep(&ex1, 1, 0, &[2, 4, 8], &opts);
    check_rates(r, "1a", "Example 1, k=1, n=4->8", &k1, (1.7, 2.1), Some((0.85, 1.1)));
    let k2 = sweep(&ex1, 2, 1, &[2, 4, 8], &opts);
    check_rates(r, "1b", "Example 1, k=2, n=4->8", &k2, (2.8, 3.2), Some((1.8, 2.1)));

    let mut ratios = magnitude_ratios(&k1, &TABLE2_K1);
    ratios.extend(magnitude_ratios(&k2, &TABLE2_K2));
    let worst = ratios.iter().map(|x| x.max(1.0 / x)).fold(0.0, f64::max);
    let k2q: Vec<String> = k2.reports.iter().map(|e| format!("{:.2e}", e.err_q_rel)).collect();
    r.record(
        "1c",
        worst <= 3.0,
        format!("Example 1 magnitudes within 3x of table: worst ratio {worst:.2} (k=2 q errors {})", k2q.join(" ")),
    );

    let ex1_0 = problem::example1(0.0);
    let k0 = sweep(&ex1_0, 1, 0, &[2, 4, 8], &opts);
    check_rates(r, "2", "Example 1, kappa=0, k=1, n=4->8", &k0, (1.6, 2.0), Some((0.85, 1.1)));
    *k2.times.last().unwrap()
}

fn criterion_3(r: &mut Report) -> Duration {
    let opts = SolveOptions::default();
    let mut largest = Duration::ZERO;
    for (id, spec) in [("3a", problem::example2()), ("3b", problem::example3())] {
        let s = sweep(&spec, 1, 0, &[2, 4, 8, 16], &opts);
        largest = *s.times.last().unwrap();
        check_rates(r, id, &format!("{}, k=1, n=8->16", spec.name), &s, (1.75, 2.05), Some((0.85, 1.05)));
    }
    for (id, spec) in [("3c", problem::example2()), ("3d", problem::example3())] {
        let s = sweep(&spec, 2, 1, &[2, 4, 8], &opts);
        check_rates(r, id, &format!("{}, k=2, n=4->8", spec.name), &s, (2.85, 3.1), None);
    }
    largest
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

fn criterion_4a() -> (bool, String) {
    let tet = tet_rule(MAX_DEGREE).unwrap();
    let tri = tri_rule(MAX_DEGREE).unwrap();
    let mut worst: f64 = 0.0;
    for a in 0..=MAX_DEGREE {
        for b in 0..=MAX_DEGREE - a {
            let exact = factorial(a) * factorial(b) / factorial(a + b + 2);
            let q: f64 = tri.points.iter().zip(&tri.weights).map(|(p, w)| w * p[0].powi(a as i32) * p[1].powi(b as i32)).sum();
            worst = worst.max((q - exact).abs() / exact);
            for cc in 0..=MAX_DEGREE - a - b {
                let exact = factorial(a) * factorial(b) * factorial(cc) / factorial(a + b + cc + 3);
                let q: f64 = tet
                    .points
                    .iter()
                    .zip(&tet.weights)
                    .map(|(p, w)| w * p[0].powi(a as i32) * p[1].powi(b as i32) * p[2].powi(cc as i32))
                    .sum();
                worst = worst.max((q - exact).abs() / exact);
            }
        }
    }
    (worst <= 1e-12, format!("monomials to degree {MAX_DEGREE}: max rel error {worst:.1e}"))
}

/// `Σ ∫ Re μ |q|² + Σ ∫ Re ε |u|² + Σ_K τ_K Σ_F ∫ |n×(u−û)|²` evaluated
/// directly from basis functions.
fn coercivity_oracle(spec: &ProblemSpec, mesh: &Mesh, space: &DiscreteSpace, sys: &assembly::FullSystem, x: &[C64]) -> f64 {
    let lay = &sys.layout;
    let vol = tet_rule(2 * space.k + 2).unwrap();
    let fr = tri_rule(2 * space.k + 2).unwrap();
    let mut total = 0.0;
    for e in 0..mesh.num_elements() {
        let geo = mesh.element_geometry(e);
        let (pts, wts) = vol.map_to_tet(&geo).unwrap();
        let (qv, _) = eval_element_vector_basis(space.m, &geo, &pts).unwrap();
        let (uv, _) = eval_element_vector_basis(space.k, &geo, &pts).unwrap();
        let off = sys.element_offset(e);
        let qc = &x[off..off + lay.nq];
        let uc = &x[off + lay.nq..off + lay.nq + lay.nu];
        let eval = |basis: &[Vec<[f64; 3]>], coef: &[C64], ip: usize| {
            let mut v = [C64::new(0.0, 0.0); 3];
            for (b, cf) in basis.iter().zip(coef) {
                for d in 0..3 {
                    v[d] += cf * b[ip][d];
                }
            }
            v
        };
        let n2 = |v: [C64; 3]| v.iter().map(|z| z.norm_sqr()).sum::<f64>();
        for (ip, (&xp, &w)) in pts.iter().zip(&wts).enumerate() {
            total += w * spec.mu.eval(xp).re * n2(eval(&qv, qc, ip));
            total += w * spec.eps.eval(xp).re * n2(eval(&uv, uc, ip));
        }
        let tau = 1.0 / mesh.element_diameter(e).unwrap();
        for &f in mesh.element_faces(e) {
            let fgeo = mesh.face_geometry(f);
            let frame = mesh.face_frame(f).unwrap();
            let (fpts, fw) = fr.map_to_triangle(&fgeo).unwrap();
            let (uf, _) = eval_element_vector_basis(space.k, &geo, &fpts).unwrap();
            let hat = eval_face_tangential_basis(space.k, &fgeo, frame, &fpts).unwrap();
            let ho = sys.face_offset[f].unwrap();
            let hc = &x[ho..ho + lay.nfb];
            let n = frame.normal;
            for (ip, &w) in fw.iter().enumerate() {
                let u = eval(&uf, uc, ip);
                let uh = eval(&hat, hc, ip);
                let un = u[0] * n[0] + u[1] * n[1] + u[2] * n[2];
                let d = [0, 1, 2].map(|i| u[i] - un * n[i] - uh[i]);
                total += tau * w * n2(d);
            }
        }
    }
    total
}

fn criterion_4b() -> (bool, String) {
    let worst = Cell::new(0.0f64);
    let cases = Cell::new(0usize);
    for (spec, n, k, m) in [(problem::example1(1.0), 1, 2, 2), (problem::example2(), 2, 1, 0)] {
        let mesh = Mesh::build_structured_cube(n).unwrap();
        let space = DiscreteSpace::new(&mesh, k, m).unwrap();
        let opts = FullOptions {
            local: LocalOptions {
                mass_shift: spec.kappa * spec.kappa + 1.0,
                ..LocalOptions::default()
            },
            include_boundary: true,
        };
        let sys = assemble_full(&spec, &mesh, &space, &opts).unwrap();
        let len = sys.len();
        let mut runner = TestRunner::new(Config {
            cases: 25,
            ..Config::default()
        });
        runner
            .run(&any::<u64>(), |seed| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let x: Vec<C64> = (0..len).map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
                let ax = sys.matrix.matvec(&x);
                let form: C64 = x.iter().zip(&ax).map(|(a, b)| a.conj() * b).sum();
                let oracle = coercivity_oracle(&spec, &mesh, &space, &sys, &x);
                let rel = (form.re - oracle).abs() / oracle;
                worst.set(worst.get().max(rel));
                cases.set(cases.get() + 1);
                prop_assert!(rel <= 1e-10, "relative mismatch {rel:e}");
                Ok(())
            })
            .ok();
    }
    let (worst, cases) = (worst.get(), cases.get());
    (worst <= 1e-10 && cases == 50, format!("{cases} random tuples: max rel deviation {worst:.1e}"))
}

fn lemma_deviation(spec: &ProblemSpec, mesh: &Mesh, k: usize) -> f64 {
    let space = DiscreteSpace::new(mesh, k, k).unwrap();
    let full = |adjoint| {
        let opts = FullOptions {
            local: LocalOptions {
                adjoint_coefficients: adjoint,
                ..LocalOptions::default()
            },
            include_boundary: true,
        };
        assemble_full(spec, mesh, &space, &opts).unwrap()
    };
    let a = full(false);
    let b = full(true);
    let sign: Vec<f64> = a
        .groups
        .iter()
        .map(|g| if matches!(g, DofGroup::Q | DofGroup::P) { -1.0 } else { 1.0 })
        .collect();
    let (da, db) = (a.matrix.to_dense(), b.matrix.to_dense());
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for i in 0..a.len() {
        for j in 0..a.len() {
            let lhs = sign[i] * da[(i, j)];
            let rhs = (sign[j] * db[(j, i)]).conj();
            worst = worst.max((lhs - rhs).norm());
            scale = scale.max(da[(i, j)].norm());
        }
    }
    worst / scale
}

fn criterion_4c() -> (bool, String) {
    let mesh = two_tets();
    let mut worst: f64 = 0.0;
    for spec in [problem::example1(1.0), problem::example2()] {
        for k in 1..=2 {
            worst = worst.max(lemma_deviation(&spec, &mesh, k));
        }
    }
    (worst <= 1e-12, format!("2-element mesh, k=1,2: max entrywise deviation {worst:.1e} (relative to max |A|)"))
}

fn condensation_deviation(spec: &ProblemSpec, k: usize) -> f64 {
    let (mesh, space) = cube(1, k, k);
    let fields = common::solve(spec, &mesh, &space);
    let sys = assemble_full(spec, &mesh, &space, &FullOptions::default()).unwrap();
    let (x, _) = linsolve::solve(&sys.matrix, &sys.rhs, 1e-13).unwrap();
    let lay = &sys.layout;
    let mut diff: f64 = 0.0;
    for e in 0..mesh.num_elements() {
        let o = sys.element_offset(e);
        diff = diff.max(max_abs_diff(&x[o..o + lay.nq], fields.q_elem(e)));
        diff = diff.max(max_abs_diff(&x[o + lay.nq..o + lay.nq + lay.nu], fields.u_elem(e)));
    }
    for f in 0..mesh.num_faces() {
        if let Some(o) = sys.face_offset[f] {
            diff = diff.max(max_abs_diff(&x[o..o + lay.nfb], fields.uhat_face(f)));
        }
    }
    for (node, slot) in sys.node_index.iter().enumerate() {
        if let Some(i) = slot {
            diff = diff.max((x[*i] - fields.p[node]).norm());
        }
    }
    diff / max_abs(&x)
}

fn criterion_4d() -> (bool, String) {
    let mut worst: f64 = 0.0;
    for k in 1..=3 {
        worst = worst.max(condensation_deviation(&problem::example1(1.0), k));
    }
    worst = worst.max(condensation_deviation(&problem::example3(), 2));
    (worst <= 1e-9, format!("n=1, k=1..3: max rel deviation {worst:.1e}"))
}

fn cubic_with_bubble() -> Manufactured {
    Manufactured {
        u: |x| [x[1] * x[1] * x[2], x[0].powi(3), x[0] * x[1]],
        curl_u: |x| [x[0], x[1] * x[1] - x[1], 3.0 * x[0] * x[0] - 2.0 * x[1] * x[2]],
        curl_curl_u: |x| [-2.0 * x[2], -6.0 * x[0], 0.0],
        p: |x| x[0] * x[1] * x[2] * (1.0 - x[0] - x[1] - x[2]),
        grad_p: |x| {
            let [a, b, cc] = x;
            [
                b * cc - 2.0 * a * b * cc - b * b * cc - b * cc * cc,
                a * cc - a * a * cc - 2.0 * a * b * cc - a * cc * cc,
                a * b - a * a * b - a * b * b - 2.0 * a * b * cc,
            ]
        },
    }
}

fn cubic() -> Manufactured {
    Manufactured {
        p: |_| 0.0,
        grad_p: |_| [0.0; 3],
        ..cubic_with_bubble()
    }
}

fn linear() -> Manufactured {
    Manufactured {
        u: |x| [x[1], x[2], x[0]],
        curl_u: |_| [-1.0, -1.0, -1.0],
        curl_curl_u: |_| [0.0; 3],
        p: |_| 0.0,
        grad_p: |_| [0.0; 3],
    }
}

fn exactness_error(spec: &ProblemSpec, mesh: &Mesh, k: usize, m: usize) -> f64 {
    let space = DiscreteSpace::new(mesh, k, m).unwrap();
    let fields = common::solve(spec, mesh, &space);
    let e = postproc::l2_errors(spec, mesh, &space, &fields).unwrap();
    e.err_q_rel.max(e.err_u_rel).max(e.err_gradp)
}

fn criterion_4e() -> (bool, String) {
    let (mu, eps) = (c(0.2, -0.4), c(1.0, 2.0));
    let cube2 = Mesh::build_structured_cube(2).unwrap();
    let cases: Vec<(&str, f64)> = vec![
        ("example2 k=3", exactness_error(&problem::example2(), &cube2, 3, 2)),
        ("example3 k=3", exactness_error(&problem::example3(), &cube2, 3, 2)),
        ("cubic u, quartic p, one tet", exactness_error(&manufactured_spec(1.0, mu, eps, cubic_with_bubble()), &reference_tet(), 3, 3)),
        ("cubic u, two tets", exactness_error(&manufactured_spec(1.0, mu, eps, cubic()), &two_tets(), 3, 2)),
        ("linear u, k=1", exactness_error(&manufactured_spec(1.0, mu, eps, linear()), &cube2, 1, 0)),
    ];
    let worst = cases.iter().map(|c| c.1).fold(0.0, f64::max);
    let detail = cases.iter().map(|(n, e)| format!("{n}: {e:.1e}")).collect::<Vec<_>>().join(", ");
    (worst <= 1e-8, detail)
}

fn criterion_4f() -> (bool, String) {
    let (mu, eps) = (c(0.2, -0.4), c(1.0, 2.0));
    let cube2 = Mesh::build_structured_cube(2).unwrap();
    let tet = reference_tet();
    let cases: Vec<(ProblemSpec, &Mesh, usize)> = vec![
        (problem::example1(1.0), &cube2, 1),
        (problem::example1(1.0), &cube2, 2),
        (problem::example1(2.5), &cube2, 1),
        (problem::example2(), &cube2, 2),
        (problem::example3(), &cube2, 2),
        (manufactured_spec(1.0, mu, eps, cubic_with_bubble()), &tet, 3),
    ];
    let mut worst_p: f64 = 0.0;
    let mut worst_c: f64 = 0.0;
    for (spec, mesh, k) in &cases {
        let space = DiscreteSpace::new(mesh, *k, *k).unwrap();
        let mono = assembly::solve(spec, mesh, &space, &SolveOptions::default()).unwrap();
        let dec_opts = SolveOptions {
            mode: Mode::Decoupled,
            ..SolveOptions::default()
        };
        let dec = assembly::solve(spec, mesh, &space, &dec_opts).unwrap();
        worst_p = worst_p.max(max_abs_diff(&mono.p, &dec.p) / max_abs(&mono.p).max(1.0));
        for f in [&mono, &dec] {
            worst_c = worst_c.max(postproc::constraint_residual(spec, mesh, &space, f).unwrap());
        }
    }
    (
        worst_p <= 1e-8 && worst_c <= 1e-7,
        format!("{} problems: max p deviation {worst_p:.1e}, max constraint residual {worst_c:.1e}", cases.len()),
    )
}

fn criterion_4g() -> (bool, String) {
    let spec = problem::example2();
    let (mesh, space) = cube(2, 2, 2);
    let fields = common::solve(&spec, &mesh, &space);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst_orth: f64 = 0.0;
    let mut worst_idem: f64 = 0.0;
    let noise: Vec<C64> = fields.u.iter().map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
    for v in [&fields.u, &noise] {
        let d = postproc::helmholtz_decompose(&spec, &mesh, &space, v, 1e-13).unwrap();
        worst_orth = worst_orth.max(postproc::gradient_orthogonality_residual(&spec, &mesh, &space, &d.z).unwrap());
        let again = postproc::helmholtz_decompose(&spec, &mesh, &space, &d.z, 1e-13).unwrap();
        worst_idem = worst_idem.max(max_abs_diff(&again.z, &d.z) / max_abs(&d.z));
        worst_idem = worst_idem.max(max_abs(&again.xi) / max_abs(&d.xi).max(1e-300));
    }
    (
        worst_orth <= 1e-9 && worst_idem <= 1e-9,
        format!("orthogonality {worst_orth:.1e}, idempotence {worst_idem:.1e}"),
    )
}

#[test]
fn acceptance() {
    let mut r = Report { lines: Vec::new() };
    let start = Instant::now();

    let k2n8 = criterion_1_2(&mut r);
    let k1n16 = criterion_3(&mut r);

    let props: [(&str, fn() -> (bool, String)); 7] = [
        ("4a", criterion_4a),
        ("4b", criterion_4b),
        ("4c", criterion_4c),
        ("4d", criterion_4d),
        ("4e", criterion_4e),
        ("4f", criterion_4f),
        ("4g", criterion_4g),
    ];
    for (id, check) in props {
        let t = Instant::now();
        let (pass, detail) = check();
        let dt = t.elapsed();
        r.record(id, pass && dt < Duration::from_secs(60), format!("{detail} ({:.1} s)", dt.as_secs_f64()));
    }

    // the largest shipped run: k=1, n=20 with the multiplier eliminated first
    let spec = problem::example2();
    let dec = SolveOptions {
        mode: Mode::Decoupled,
        ..SolveOptions::default()
    };
    let big = sweep(&spec, 1, 0, &[20], &dec);
    let n20 = big.times[0];
    let hwm = vm_hwm_mb().unwrap_or(f64::NAN);
    let limit = Duration::from_secs(15 * 60);
    let e = &big.reports[0];
    r.record(
        "5",
        n20 < limit && k2n8 < limit && hwm < 8192.0,
        format!(
            "k=1 n=20 decoupled {:.0} s ({} dofs, q {:.2e}, u {:.2e}), k=2 n=8 {:.1} s, k=1 n=16 {:.1} s, peak resident {hwm:.0} MB",
            n20.as_secs_f64(),
            e.global_dofs,
            e.err_q_rel,
            e.err_u_rel,
            k2n8.as_secs_f64(),
            k1n16.as_secs_f64()
        ),
    );
    println!("total {:.0} s", start.elapsed().as_secs_f64());

    let unexpected: Vec<&str> = r
        .lines
        .iter()
        .filter(|(id, pass, _)| !pass && !KNOWN_FAILURES.iter().any(|(k, _)| k == id))
        .map(|(id, _, _)| id.as_str())
        .collect();
    assert!(unexpected.is_empty(), "failed criteria: {unexpected:?}");
}
