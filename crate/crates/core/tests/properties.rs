use proptest::prelude::*;
use toricspec_core::harness::{gaps_nonincreasing, richardson, GapRow, GAP_FLOOR, GAP_NOISE};
use toricspec_core::operator::mode_set;
use toricspec_core::polytope::{DelzantPolytope, Rational};

fn row(s: f64, rel: Vec<f64>) -> GapRow {
    GapRow {
        s,
        computed: vec![],
        predicted: vec![],
        gaps: rel.clone(),
        relative_gaps: rel,
    }
}

fn unimodular() -> impl Strategy<Value = Vec<Vec<i64>>> {
    // products of elementary shears and a sign flip
    (prop::collection::vec((0usize..2, -3i64..=3), 1..5), any::<bool>()).prop_map(|(shears, flip)| {
        let mut a = vec![vec![1i64, 0], vec![0, 1]];
        for (i, t) in shears {
            let j = 1 - i;
            for c in 0..2 {
                a[i][c] += t * a[j][c];
            }
        }
        if flip {
            a[0].iter_mut().for_each(|x| *x = -*x);
        }
        a
    })
}

fn polygon() -> impl Strategy<Value = DelzantPolytope> {
    prop_oneof![
        (1i64..4).prop_map(|n| DelzantPolytope::simplex(2, n)),
        (0i64..3, 1i64..4, 1i64..4).prop_map(|(a, b, extra)| DelzantPolytope::hirzebruch(a, b, a * b + extra).unwrap()),
    ]
}

fn brute_force(p: &DelzantPolytope, k: i64) -> Vec<Vec<i64>> {
    let v = p.vertices_f64();
    let span = |d: usize| {
        let lo = v.iter().map(|x| x[d]).fold(f64::INFINITY, f64::min) * k as f64;
        let hi = v.iter().map(|x| x[d]).fold(f64::NEG_INFINITY, f64::max) * k as f64;
        (lo.floor() as i64 - 1)..=(hi.ceil() as i64 + 1)
    };
    let mut out = vec![];
    for x in span(0) {
        for y in span(1) {
            if p.contains(&[Rational::new(x, k), Rational::new(y, k)]) {
                out.push(vec![x, y]);
            }
        }
    }
    out
}

proptest! {
    #[test]
    fn richardson_recovers_power_law(limit in -5.0f64..5.0, c in 0.1f64..10.0, p in 0.5f64..4.0, s0 in 0.05f64..1.0) {
        let s = [s0, s0 / 2.0, s0 / 4.0];
        let v = s.map(|si| limit + c * si.powf(p));
        let got = richardson(s, v).unwrap();
        prop_assert!((got - limit).abs() <= 1e-8 * (1.0 + c), "{got} vs {limit}");
    }

    #[test]
    fn gaps_monotone_tables_accepted(start in prop::collection::vec(1e-3f64..1.0, 1..4), factors in prop::collection::vec(0.1f64..1.0, 1..5)) {
        let mut rows = vec![row(1.0, start.clone())];
        let mut cur = start;
        for (i, f) in factors.iter().enumerate() {
            cur = cur.iter().map(|g| g * f).collect();
            rows.push(row(0.5f64.powi(i as i32 + 1), cur.clone()));
        }
        prop_assert!(gaps_nonincreasing(&rows));
    }

    #[test]
    fn gaps_growth_rejected(g in 1e-3f64..1.0, extra in 0.01f64..1.0) {
        let grown = g * (1.0 + GAP_NOISE) * (1.0 + extra);
        prop_assume!(grown >= GAP_FLOOR);
        prop_assert!(!gaps_nonincreasing(&[row(0.2, vec![g]), row(0.1, vec![grown])]));
        // both below the floor: noise, accepted
        let tiny = GAP_FLOOR * 0.5;
        prop_assert!(gaps_nonincreasing(&[row(0.2, vec![tiny * 0.1]), row(0.1, vec![tiny])]));
    }

    #[test]
    fn lattice_points_match_brute_force(p in polygon(), a in unimodular(), c in prop::collection::vec(-2i64..=2, 2), k in 1i64..4) {
        let q = p.transform(&a, &c).unwrap();
        let bs: Vec<Vec<i64>> = q
            .bs_points(k)
            .unwrap()
            .iter()
            .map(|b| b.point.iter().map(|x| (*x * k).to_integer()).collect())
            .collect();
        let mut sorted = bs.clone();
        sorted.sort();
        prop_assert_eq!(&bs, &sorted);
        prop_assert_eq!(bs, brute_force(&q, k));
        prop_assert_eq!(q.lattice_count(k), p.lattice_count(k));
    }

    #[test]
    fn mode_set_contains_bs_modes(p in polygon(), a in unimodular(), k in 1i64..4, margin in 0i64..3) {
        let q = p.transform(&a, &[0, 0]).unwrap();
        let modes = mode_set(&q, k, margin);
        for b in q.bs_points(k).unwrap() {
            let m: Vec<i64> = b.point.iter().map(|x| (*x * k).to_integer()).collect();
            prop_assert!(modes.contains(&m), "{m:?}");
        }
        prop_assert!(modes.len() >= q.lattice_count(k));
        if margin == 0 {
            prop_assert_eq!(modes.len(), q.lattice_count(k));
        }
    }
}
