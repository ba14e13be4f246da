use fdban_core::classes::{iso_group, orbit_covering_estimate, OrbitSpace};
use fdban_core::limits::{LimitSystem, Tail};
use fdban_core::metrics::{banach_mazur, embedding_defect, operator_norm_of};
use fdban_core::rational::{rat, rat_int};
use fdban_core::{LinearMap, Matrix, NormedSpace, Rat};
use proptest::prelude::*;

fn int_rows(dim: usize, count: std::ops::Range<usize>) -> impl Strategy<Value = Vec<Vec<i64>>> {
    prop::collection::vec(prop::collection::vec(-4i64..=4, dim), count)
}

/// Symmetric polytopes from small integer points; `None` when the points do not span.
fn polytope(dim: usize) -> impl Strategy<Value = Option<NormedSpace>> {
    int_rows(dim, dim..dim + 4).prop_map(move |pts| {
        let pts: Vec<Vec<Rat>> = pts.iter().map(|p| p.iter().map(|&v| rat_int(v)).collect()).collect();
        NormedSpace::vertex_ball(dim, &pts).ok().filter(|s| s.polytope().is_some())
    })
}

fn lp_space(dim: usize) -> impl Strategy<Value = NormedSpace> {
    prop_oneof![Just(1.0), Just(1.5), Just(2.0), Just(3.0), Just(f64::INFINITY)]
        .prop_map(move |p| NormedSpace::lp(p, dim).unwrap())
}

fn matrix(rows: usize, cols: usize) -> impl Strategy<Value = Matrix> {
    prop::collection::vec(-3i64..=3, rows * cols)
        .prop_map(move |d| Matrix::from_rat(rows, cols, d.into_iter().map(rat_int).collect()).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn norm_axioms(
        e in prop_oneof![lp_space(3), polytope(3).prop_filter_map("span", |s| s)],
        x in prop::collection::vec(-5.0f64..5.0, 3),
        y in prop::collection::vec(-5.0f64..5.0, 3),
        t in -4.0f64..4.0,
    ) {
        let (nx, ny) = (e.norm(&x), e.norm(&y));
        let sum: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a + b).collect();
        let tx: Vec<f64> = x.iter().map(|a| t * a).collect();
        prop_assert!(nx >= 0.0);
        prop_assert!(e.norm(&sum) <= nx + ny + 1e-9 * (1.0 + nx + ny));
        prop_assert!((e.norm(&tx) - t.abs() * nx).abs() <= 1e-9 * (1.0 + nx));
        prop_assert_eq!(e.norm(&[0.0; 3]), 0.0);
    }

    #[test]
    fn exact_norm_agrees_with_float(
        e in polytope(2).prop_filter_map("span", |s| s),
        x in prop::collection::vec(-20i64..20, 2),
    ) {
        let xr: Vec<Rat> = x.iter().map(|&v| rat(v, 7)).collect();
        let xf: Vec<f64> = x.iter().map(|&v| v as f64 / 7.0).collect();
        let exact = e.norm_exact(&xr).unwrap();
        let v = fdban_core::rational::rat_to_f64(&exact);
        prop_assert!((v - e.norm(&xf)).abs() <= 1e-9 * (1.0 + v));
    }

    #[test]
    fn composition_law(
        e in polytope(2).prop_filter_map("span", |s| s),
        f in lp_space(3),
        g in polytope(3).prop_filter_map("span", |s| s),
        t in matrix(3, 2),
        s in matrix(3, 3),
    ) {
        prop_assume!(t.rank() == 2 && s.rank() == 3);
        let t = LinearMap::new(&e, &f, t).unwrap();
        let s = LinearMap::new(&f, &g, s).unwrap();
        let st = s.compose(&t).unwrap();
        let (a, b, c) = (embedding_defect(&s), embedding_defect(&t), embedding_defect(&st));
        prop_assert!(c.defect_lower <= a.defect + b.defect + 1e-9,
            "{} > {} + {}", c.defect_lower, a.defect, b.defect);
    }

    #[test]
    fn certificates_bracket_the_truth(e in lp_space(2), f in lp_space(3), t in matrix(3, 2)) {
        prop_assume!(t.rank() == 2);
        let c = embedding_defect(&LinearMap::new(&e, &f, t).unwrap());
        prop_assert!(c.defect_lower <= c.defect + 1e-12);
        prop_assert!(c.norm.lower <= c.norm.upper && c.gain.lower <= c.gain.upper);
    }

    #[test]
    fn operator_norm_is_subadditive(e in lp_space(2), f in lp_space(2), a in matrix(2, 2), b in matrix(2, 2)) {
        let sum = a.add(&b).unwrap();
        let (na, nb, ns) = (operator_norm_of(&e, &f, &a), operator_norm_of(&e, &f, &b), operator_norm_of(&e, &f, &sum));
        prop_assert!(ns.lower <= na.upper + nb.upper + 1e-9);
    }

    #[test]
    fn limit_brackets_nest(deltas in prop::collection::vec(1u32..40, 2..7)) {
        // scalar stages x ↦ (1 + 1/d) x with exactly declared defects
        let line = NormedSpace::lp(1.0, 1).unwrap();
        let mut sys = LimitSystem::new(line.clone());
        for &d in &deltas {
            let m = Matrix::from_rows_rat(&[vec![rat(d as i64 + 1, d as i64)]]).unwrap();
            let eps = (1.0 + 1.0 / d as f64).ln();
            sys.push(LinearMap::new(&line, &line, m).unwrap(), eps).unwrap();
        }
        sys.set_tail(Tail::Finite).unwrap();
        let truth: f64 = deltas.iter().map(|&d| 1.0 + 1.0 / d as f64).product();
        let mut prev: Option<(f64, f64)> = None;
        for k in 1..=sys.len() {
            let b = sys.limit_norm(1, &[1.0], k).unwrap();
            prop_assert!(b.lo <= truth * (1.0 + 1e-12) && truth <= b.hi * (1.0 + 1e-12));
            if let Some((lo, hi)) = prev {
                prop_assert!(b.lo >= lo * (1.0 - 1e-12) && b.hi <= hi * (1.0 + 1e-12));
            }
            prev = Some((b.lo, b.hi));
        }
        for n in 1..=sys.len() {
            prop_assert!(sys.compose_checked(n, sys.len()).unwrap().holds());
        }
    }

    #[test]
    fn iso_group_is_closed(e in polytope(2).prop_filter_map("span", |s| s)) {
        let g = iso_group(&e).unwrap();
        prop_assert!(g.len() >= 2 && g.len() % 2 == 0);
        for a in &g {
            prop_assert_eq!(embedding_defect(a).defect, 0.0);
            for b in &g {
                let ab = a.matrix().mul(b.matrix()).unwrap().exact_data();
                prop_assert!(g.iter().any(|c| c.matrix().exact_data() == ab));
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(4))]

    #[test]
    fn banach_mazur_is_symmetric(
        e in polytope(2).prop_filter_map("span", |s| s),
        f in polytope(2).prop_filter_map("span", |s| s),
    ) {
        let a = banach_mazur(&e, &f, 60, 3).unwrap();
        let b = banach_mazur(&f, &e, 60, 3).unwrap();
        prop_assert!((a.upper - b.upper).abs() <= 1e-9, "{} vs {}", a.upper, b.upper);
        // certified lower bounds never cross the other direction's upper bound
        prop_assert!(a.lower <= b.upper + 1e-9 && b.lower <= a.upper + 1e-9);
    }

    #[test]
    fn orbit_estimate_is_monotone(p in prop_oneof![Just(1.0), Just(f64::INFINITY)], n in 2usize..5, e1 in 0.1f64..0.8, e2 in 0.1f64..0.8, seed in 0u64..50) {
        let (lo, hi) = if e1 <= e2 { (e1, e2) } else { (e2, e1) };
        let x = OrbitSpace::Lp { p, n };
        let a = orbit_covering_estimate(x, 1, None, lo, 400, seed).unwrap();
        let b = orbit_covering_estimate(x, 1, None, hi, 400, seed).unwrap();
        prop_assert!(b.count <= a.count, "{} at {hi} > {} at {lo}", b.count, a.count);
    }
}
