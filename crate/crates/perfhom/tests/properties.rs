use proptest::prelude::*;

use perfhom::fem::{extend_into_holes, FemSpace, Weight};
use perfhom::harness::{parse_config, ReportTable};
use perfhom::homogenize::{cell_coefficient, effective_tensor, solve_cell_elliptic, solve_cell_memory, MemoryCell};
use perfhom::mesh::{build_cell_mesh, build_perforated_mesh, validate_cell_mesh, validate_mesh, CellGeometry};
use perfhom::micro::{dual_map, Constraint, ProjectionMode};
use perfhom::model::{exponent_p, BoundarySource, CellCoefficient, ModelParams};

fn config() -> ProptestConfig {
    ProptestConfig {
        cases: 24,
        ..ProptestConfig::default()
    }
}

fn params() -> impl Strategy<Value = ModelParams> {
    (0.5..2.0f64, 0.0..2.0f64, 1.0..9.0f64, 0.0..1.0f64, 0.5..2.0f64, 0.1..3.0f64, 0.2..1.0f64).prop_map(
        |(theta_k, gamma_k, beta, lambda_frac, theta_p, alpha, kappa_d)| ModelParams {
            theta_k,
            gamma_k,
            beta,
            lambda: 0.5 + lambda_frac * (beta - 0.5),
            theta_p,
            alpha,
            kappa_d,
            ..ModelParams::default()
        },
    )
}

fn geometry() -> impl Strategy<Value = CellGeometry> {
    (8usize..=24, 0.1..0.3f64, 2usize..=8).prop_map(|(divisions, hole_radius, quarter)| CellGeometry {
        divisions: 2 * divisions,
        hole_radius,
        hole_segments: 4 * quarter,
        ..CellGeometry::default()
    })
}

/// Deterministic pseudo-random values in [-1, 1].
fn noise(seed: u64, n: usize) -> Vec<f64> {
    let mut s = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
    (0..n)
        .map(|_| {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        })
        .collect()
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn regularized_laws_are_monotone(p in params(), delta in 1e-3..1e-1f64) {
        prop_assert!(p.validate().is_ok());
        let grid: Vec<f64> = (0..=10_000).map(|i| -1.0 + 3.0 * i as f64 / 10_000.0).collect();
        for w in grid.windows(2) {
            prop_assert!(p.k_delta(delta, w[1]) >= p.k_delta(delta, w[0]));
            prop_assert!(p.b_delta(delta, w[1]) >= p.b_delta(delta, w[0]));
            prop_assert!(p.db_delta(delta, w[0]) > 0.0);
        }
        prop_assert_eq!(p.k(0.0), 0.0);
        prop_assert_eq!(p.k_delta(delta, 0.0), p.k(delta));
        prop_assert!(p.k_delta(delta, 0.0) > 0.0);
    }

    #[test]
    fn k_pc_bound_is_delta_uniform(p in params(), beta in 2.0..9.0f64) {
        // Bounded k·P_c needs β ≥ λ; the borderline β = λ is the default family.
        let p = ModelParams { beta, lambda: beta, ..p };
        let sup = |delta: f64| {
            (0..=10_000)
                .map(|i| p.k_pc_delta(delta, -1.0 + 3.0 * i as f64 / 10_000.0))
                .fold(0.0, f64::max)
        };
        let s: Vec<f64> = [1e-1, 1e-2, 1e-3].iter().map(|&d| sup(d)).collect();
        let lo = s.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = s.iter().cloned().fold(0.0, f64::max);
        prop_assert!(hi <= 1.05 * lo, "{s:?}");
    }

    #[test]
    fn exponent_lies_in_open_interval(alpha in 0.1..3.0f64, extra in 0.01..4.0f64, gap in 0.0..3.0f64, q1 in 2.5..10.0f64) {
        let lambda = 3.0 + alpha + 4.0 / (q1 - 2.0) + extra;
        if let Ok(e) = exponent_p(alpha, lambda + gap, lambda, 2, q1) {
            let p = e.p_f64();
            prop_assert!(p > 1.0 && p < 2.0);
        }
    }

    #[test]
    fn boundary_source_sign_condition(p in params(), level in 0.0..10.0f64, xi in -3.0..3.0f64) {
        let s = BoundarySource::new(level, &p);
        prop_assert!(xi * s.f1(xi) >= 0.0);
        prop_assert_eq!(s.f1(0.0), 0.0);
    }

    #[test]
    fn generated_cell_meshes_are_valid(g in geometry()) {
        let m = build_cell_mesh(&g).unwrap();
        prop_assert!(validate_cell_mesh(&m).is_empty());
        prop_assert!((m.area() - g.solid_area()).abs() <= 1e-12 * g.solid_area());
    }

    #[test]
    fn generated_perforated_meshes_are_valid(g in geometry(), k in 0usize..3) {
        let g = CellGeometry { divisions: g.divisions.min(16), ..g };
        let eps = [1.0, 0.5, 0.25][k];
        let m = build_perforated_mesh(&g, eps).unwrap();
        prop_assert!(validate_mesh(&m).is_empty());
    }

    #[test]
    fn assembled_matrices_are_symmetric_and_definite(g in geometry(), seed in any::<u64>()) {
        let g = CellGeometry { divisions: g.divisions.min(16), ..g };
        let m = build_perforated_mesh(&g, 0.5).unwrap();
        let space = FemSpace::new(&m.mesh);
        let w: Vec<f64> = noise(seed, m.mesh.n_triangles()).iter().map(|x| 1.5 + x).collect();
        let mass = space.mass(Weight::PerTriangle(&w)).unwrap();
        let stiff = space.stiffness(Weight::PerTriangle(&w)).unwrap();
        let scale = |a: &perfhom::fem::SparseMatrix| a.diag().iter().cloned().fold(0.0, f64::max);
        prop_assert!(mass.asymmetry() <= 1e-14 * scale(&mass));
        prop_assert!(stiff.asymmetry() <= 1e-14 * scale(&stiff));
        let ones = vec![1.0; space.dim()];
        let area = space.mass(Weight::Constant(1.0)).unwrap().quad_form(&ones);
        prop_assert!((area - m.mesh.total_area()).abs() <= 1e-12);
        let dirichlet = m.dirichlet_mask();
        let x: Vec<f64> = noise(seed ^ 1, space.dim())
            .iter()
            .zip(&dirichlet)
            .map(|(v, &d)| if d { 0.0 } else { *v })
            .collect();
        prop_assert!(stiff.quad_form(&x) > 0.0);
        prop_assert!(mass.quad_form(&x) > 0.0);
    }

    #[test]
    fn extension_is_linear(seed in any::<u64>(), a in -2.0..2.0f64) {
        let m = build_perforated_mesh(&CellGeometry::default(), 0.5).unwrap();
        let n = m.mesh.n_vertices();
        let u = noise(seed, n);
        let v = noise(seed ^ 7, n);
        let w: Vec<f64> = u.iter().zip(&v).map(|(x, y)| a * x + y).collect();
        let (eu, ev, ew) = (
            extend_into_holes(&m, &u).unwrap(),
            extend_into_holes(&m, &v).unwrap(),
            extend_into_holes(&m, &w).unwrap(),
        );
        for i in 0..ew.values.len() {
            prop_assert!((ew.values[i] - (a * eu.values[i] + ev.values[i])).abs() <= 1e-9);
        }
        // Extending the restriction again changes nothing.
        let again = extend_into_holes(&m, &ew.values[..n]).unwrap();
        prop_assert_eq!(again.values, ew.values);
    }

    #[test]
    fn effective_tensor_is_spd_and_bounded(mean in 0.5..2.0f64, frac in 0.0..0.9f64, seed in any::<u64>()) {
        let cell = build_cell_mesh(&CellGeometry::default()).unwrap();
        let c = CellCoefficient::Layered { mean, amplitude: frac * mean };
        let coeff = cell_coefficient(&cell, &c);
        let omega = solve_cell_elliptic(&cell, &coeff, "A").unwrap();
        let a = effective_tensor(&omega, &coeff, &cell).unwrap();
        prop_assert!(a.asymmetry() <= 1e-10);
        let cmax = coeff.iter().cloned().fold(0.0, f64::max);
        let voigt: f64 = coeff.iter().zip(&cell.mesh.areas).map(|(c, a)| c * a).sum::<f64>() / cell.area();
        for xi in noise(seed, 16).chunks(2) {
            let q: f64 = (0..2).map(|i| (0..2).map(|j| xi[i] * a.entries[i][j] * xi[j]).sum::<f64>()).sum();
            let n2 = xi[0] * xi[0] + xi[1] * xi[1];
            prop_assert!(q > 0.0);
            prop_assert!(q <= voigt * n2 * (1.0 + 1e-12));
        }
        for j in 0..2 {
            prop_assert!(a.entries[j][j] <= cmax);
            prop_assert!(omega.mean(&cell, j).abs() <= 1e-10);
        }
    }

    #[test]
    fn memory_cell_energy_decays(u in 0.2..1.0f64, amp in 0.1..0.6f64) {
        let cell = build_cell_mesh(&CellGeometry::default()).unwrap();
        let b = CellCoefficient::Layered { mean: 1.0, amplitude: amp };
        let mc = MemoryCell::new(&cell, &CellCoefficient::Constant(1.0), &b).unwrap();
        let p = ModelParams::default();
        let chi = solve_cell_memory(&mc, &[u; 6], &p, 1e-2, 0.05).unwrap();
        let space = FemSpace::new(&cell.mesh);
        let s = space.stiffness(Weight::PerTriangle(&mc.coeff_a)).unwrap();
        let mass = space.mass(Weight::Constant(1.0)).unwrap();
        let ones = vec![1.0; space.dim()];
        for j in 0..2 {
            let energy: Vec<f64> = chi.chi.iter().map(|c| s.quad_form(&c[j])).collect();
            prop_assert!(energy.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)), "{energy:?}");
            for c in &chi.chi {
                let mean = mass.mul(&c[j]).iter().zip(&ones).map(|(a, b)| a * b).sum::<f64>();
                prop_assert!(mean.abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn exact_projection_is_feasible_idempotent_and_closest(seed in any::<u64>(), k in 1usize..=4) {
        let m = build_perforated_mesh(&CellGeometry::default(), 0.5).unwrap();
        let space = FemSpace::new(&m.mesh);
        let j = dual_map(&space).unwrap();
        let free: Vec<bool> = m.dirichlet_mask().iter().map(|d| !d).collect();
        let gamma = m.gamma_mask();
        let constrained: Vec<usize> = (0..free.len()).filter(|&i| gamma[i] && free[i]).step_by(k).collect();
        let c = Constraint::new(j.clone(), free.clone(), constrained, 1.0).unwrap();
        let w: Vec<f64> = noise(seed, free.len())
            .iter()
            .zip(&free)
            .map(|(x, &f)| if f { 1.5 * x - 0.6 } else { 0.0 })
            .collect();
        let p = c.project(&w, ProjectionMode::ExactJ).unwrap().value;
        prop_assert!(p.iter().zip(&w).all(|(a, _)| a.is_finite()));
        for &i in &c.constrained {
            prop_assert!(p[i] >= -1.0 - 1e-10);
        }
        let q = c.project(&p, ProjectionMode::ExactJ).unwrap().value;
        for (a, b) in p.iter().zip(&q) {
            prop_assert!((a - b).abs() <= 1e-10);
        }
        let dist = |v: &[f64]| {
            let d: Vec<f64> = v.iter().zip(&w).map(|(a, b)| a - b).collect();
            j.quad_form(&d)
        };
        let clamp = c.project(&w, ProjectionMode::NodalClamp).unwrap().value;
        prop_assert!(dist(&p) <= dist(&clamp) * (1.0 + 1e-10) + 1e-14);
    }

    #[test]
    fn config_values_round_trip(eps_k in 1usize..5, mu in 1e-6..1.0f64, steps in 1usize..500, amp in 0.0..0.9f64) {
        let eps = 1.0 / (1u32 << eps_k) as f64;
        let text = format!(
            "epsilon = {eps}\nmu = {mu:e}\nsteps = {steps}\ncoefficient_b = layered:1,{amp}\nsweep_mus = {mu:e}, {:e}\n",
            mu / 2.0
        );
        let c = parse_config(&text, "p.cfg").unwrap();
        prop_assert_eq!(c.micro.epsilon, eps);
        prop_assert_eq!(c.micro.mu, mu);
        prop_assert_eq!(c.micro.steps, steps);
        prop_assert_eq!(c.coefficient_b, Some(CellCoefficient::Layered { mean: 1.0, amplitude: amp }));
        prop_assert_eq!(c.sweep.mus, vec![mu, mu / 2.0]);
    }

    #[test]
    fn report_table_csv_is_exact(values in proptest::collection::vec(-1e6..1e6f64, 1..6)) {
        let names: Vec<String> = (0..values.len()).map(|i| format!("c{i}")).collect();
        let refs: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
        let mut t = ReportTable::new("row", &refs);
        t.push("r", values.clone()).unwrap();
        let csv = t.to_csv();
        let row = csv.lines().nth(1).unwrap();
        let back: Vec<f64> = row.split(',').skip(1).map(|x| x.parse().unwrap()).collect();
        prop_assert_eq!(back, values);
    }
}
