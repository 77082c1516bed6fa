mod common;

use common::{cellwise, close, grid4, schedule};
use empirical_chaos::{
    averaged_contraction, contract, contract_integrated, diagram_terms, empirical_integral,
    enumerate_colored, enumerate_diagrams, exact_cross_moment, exact_mean, f_bilinear,
    f_bilinear_limit, f_bilinear_with, CellCounts, CellwiseFunction, ColoredDiagram, Grid, Measure,
};
use proptest::prelude::*;

fn orders() -> impl Strategy<Value = (CellwiseFunction<f64>, CellwiseFunction<f64>)> {
    (1usize..=3, 1usize..=3).prop_flat_map(|(k1, k2)| (cellwise(k1, 5), cellwise(k2, 5)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn integrated_contraction_obeys_cauchy_schwarz((f, g) in orders(), n in 16u64..10_000) {
        let s = schedule();
        let (k1, k2) = (f.order(), g.order());
        for measure in [Measure::Sampling(n), Measure::Control] {
            let bound = f.l2_norm(&s, measure).unwrap() * g.l2_norm(&s, measure).unwrap();
            for l in 0..=k1.min(k2) {
                for d in enumerate_diagrams(k1, k2, l).unwrap() {
                    let full = ColoredDiagram::new(d, vec![true; l]).unwrap();
                    let c = contract_integrated(&f, &g, &full, &s, measure).unwrap();
                    let norm = c.l2_norm(&s, measure).unwrap();
                    prop_assert!(norm <= bound * (1.0 + 1e-12) + 1e-15, "{norm} > {bound}");
                }
            }
        }
    }

    #[test]
    fn f_bilinear_independent_of_coloring((f, g) in orders(), n in 16u64..100_000) {
        let s = schedule();
        for l in 0..=f.order().min(g.order()) {
            let full = f_bilinear_with(&f, &g, l, l, &s, n).unwrap();
            let none = f_bilinear_with(&f, &g, l, 0, &s, n).unwrap();
            prop_assert!((full - none).abs() <= 1e-12 * full.abs().max(none.abs()).max(1e-300));
        }
    }

    #[test]
    fn f_bilinear_bounded_by_norms((f, g) in orders(), n in 16u64..100_000) {
        let s = schedule();
        let bound = f.l2_norm(&s, Measure::Control).unwrap() * g.l2_norm(&s, Measure::Control).unwrap();
        for l in 0..=f.order().min(g.order()) {
            let v = f_bilinear(&f, &g, l, &s, n).unwrap();
            prop_assert!(v.abs() <= bound * (1.0 + 1e-12));
        }
    }

    #[test]
    fn f_bilinear_sees_only_symmetrizations((f, g) in orders(), n in 16u64..100_000) {
        let s = schedule();
        let (fs, gs) = (f.symmetrize(), g.symmetrize());
        for l in 0..=f.order().min(g.order()) {
            let a = f_bilinear(&f, &g, l, &s, n).unwrap();
            let b = f_bilinear(&fs, &gs, l, &s, n).unwrap();
            prop_assert!(close(a, b, 1e-12));
        }
    }

    #[test]
    fn product_formula_holds_per_realization(
        (f, g) in orders(),
        n in 16u64..2_000,
        split in prop::collection::vec(0.0f64..1.0, 4),
    ) {
        let s = schedule();
        let grid = grid4();
        // any counts with total <= n are a possible realization
        let mut remaining = n;
        let counts: Vec<u64> = split
            .iter()
            .map(|u| {
                let c = (u * remaining as f64 * 0.5) as u64;
                remaining -= c;
                c
            })
            .collect();
        let counts = CellCounts::new(&s, n, grid, counts).unwrap();
        let lhs = empirical_integral(&f, &counts).unwrap() * empirical_integral(&g, &counts).unwrap();
        let mut rhs = 0.0;
        let mut scale = lhs.abs();
        for term in diagram_terms(&f, &g, &s, n).unwrap() {
            let v = term.coefficient * term.count as f64
                * empirical_integral(&term.contraction, &counts).unwrap();
            scale = scale.max(v.abs());
            rhs += v;
        }
        prop_assert!((lhs - rhs).abs() <= 1e-9 * scale.max(1.0), "{lhs} vs {rhs}");
    }
}

#[test]
fn uncolored_contraction_norm_is_not_bounded() {
    // the bound is for the integrated contraction; identifying variables
    // without integrating can exceed it
    let s = schedule();
    let g = Grid::from_breakpoints(&[0.0, 0.5]).unwrap();
    let f = CellwiseFunction::indicator(g, &[0]).unwrap();
    let d = enumerate_diagrams(1, 1, 1).unwrap().remove(0);
    let c = contract(&f, &f, &d).unwrap();
    let lhs = c.l2_norm(&s, Measure::Control).unwrap();
    let rhs = f.l2_norm(&s, Measure::Control).unwrap().powi(2);
    assert!((lhs - 0.5f64.sqrt()).abs() < 1e-15);
    assert!((rhs - 0.5).abs() < 1e-15);
    assert!(lhs > rhs);
}

#[test]
fn averaged_contraction_counts_every_colored_diagram() {
    let s = schedule();
    let f = CellwiseFunction::indicator(grid4(), &[0, 1]).unwrap();
    let g = CellwiseFunction::indicator(grid4(), &[1, 2]).unwrap();
    let avg = averaged_contraction(&f, &g, 1, 0, &s, 100).unwrap();
    // of the four diagrams only the one pairing f's slot 2 with g's slot 1 survives
    assert_eq!(enumerate_colored(2, 2, 1, 0).unwrap().len(), 4);
    assert_eq!(avg.coeff(&[0, 1, 2]), 0.25);
    assert_eq!(avg.nnz(), 1);
}

fn indicator_pairs() -> Vec<(CellwiseFunction<f64>, CellwiseFunction<f64>)> {
    let g = grid4();
    let ind = |t: &[usize]| CellwiseFunction::indicator(g.clone(), t).unwrap();
    vec![
        (ind(&[0]), ind(&[1])),
        (ind(&[0, 1]), ind(&[0])),
        (ind(&[0, 1]), ind(&[1, 2])),
        (ind(&[0, 1, 2]), ind(&[2, 3])),
        (ind(&[1, 1]), ind(&[1, 2, 3])),
    ]
}

#[test]
fn off_top_bilinear_forms_decay_monotonically() {
    let s = schedule();
    for (f, g) in indicator_pairs() {
        let (k1, k2) = (f.order(), g.order());
        for l in 0..=k1.min(k2) {
            if 2 * l >= k1 + k2 {
                continue;
            }
            let values: Vec<f64> = [100u64, 1_000, 10_000, 100_000]
                .iter()
                .map(|&n| f_bilinear(&f, &g, l, &s, n).unwrap().abs())
                .collect();
            assert!(
                values.windows(2).all(|w| w[1] <= w[0]),
                "k=({k1},{k2}) l={l}: {values:?}"
            );
            assert!(values[3] < values[0] || values[0] == 0.0);
        }
    }
}

#[test]
fn full_matching_bilinear_form_tends_to_symmetric_inner_product() {
    // summing over all k! full matchings gives k! ⟨f̃, g̃⟩; the average gives ⟨f̃, g̃⟩
    let s = schedule();
    let g = grid4();
    let f = CellwiseFunction::new(2, g.clone(), [(vec![0, 1], 1.0), (vec![2, 2], -0.5)]).unwrap();
    let h = CellwiseFunction::new(2, g.clone(), [(vec![1, 0], 2.0), (vec![2, 2], 1.0)]).unwrap();
    let limit = f_bilinear_limit(&f, &h, 2, &s).unwrap();
    let direct = f
        .symmetrize()
        .l2_inner(&h.symmetrize(), &s, Measure::Control)
        .unwrap();
    assert!(close(limit, direct, 1e-14));
    for n in [100u64, 10_000, 1_000_000] {
        let v = f_bilinear(&f, &h, 2, &s, n).unwrap();
        assert!(close(v, limit, 1e-12), "n={n}: {v} vs {limit}");
        assert!(close(2.0 * v, 2.0 * direct, 1e-12));
    }
    assert_eq!(f_bilinear_limit(&f, &h, 1, &s).unwrap(), 0.0);
}

/// All outcomes of a multinomial draw with their probabilities.
fn multinomial_outcomes(n: u64, probs: &[f64]) -> Vec<(Vec<u64>, f64)> {
    fn go(
        i: usize,
        left: u64,
        probs: &[f64],
        cur: &mut Vec<u64>,
        weight: f64,
        out: &mut Vec<(Vec<u64>, f64)>,
    ) {
        if i == probs.len() {
            out.push((cur.clone(), weight));
            return;
        }
        for c in 0..=left {
            // multinomial coefficient built up one cell at a time
            let w = weight * binom(left, c) * probs[i].powi(c as i32);
            cur.push(c);
            go(i + 1, left - c, probs, cur, w, out);
            cur.pop();
        }
    }
    fn binom(n: u64, k: u64) -> f64 {
        (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
    }
    let rest = 1.0 - probs.iter().sum::<f64>();
    let mut full = probs.to_vec();
    full.push(rest.max(0.0));
    let mut out = Vec::new();
    go(0, n, &full, &mut Vec::new(), 1.0, &mut out);
    out.into_iter()
        .filter(|(c, _)| *c.last().unwrap() + c[..c.len() - 1].iter().sum::<u64>() == n)
        .map(|(mut c, w)| {
            c.pop();
            (c, w)
        })
        .collect()
}

#[test]
fn exact_moments_match_outcome_enumeration() {
    let s = schedule();
    // E_n = [0, √n]; at n = 9 the last cell [2, 3.5) is clipped
    let grid = grid4();
    let ind = |t: &[usize]| CellwiseFunction::indicator(grid.clone(), t).unwrap();
    let mixed = CellwiseFunction::new(
        3,
        grid.clone(),
        [
            (vec![0, 0, 1], 1.0),
            (vec![2, 1, 2], -0.7),
            (vec![3, 3, 3], 0.4),
        ],
    )
    .unwrap();
    let fs = vec![
        ind(&[0]),
        ind(&[1, 1]),
        ind(&[0, 2]),
        ind(&[0, 0, 0]),
        mixed,
    ];
    for n in [4u64, 9, 7] {
        let probs = grid.masses(&s, Measure::Sampling(n)).unwrap();
        let outcomes = multinomial_outcomes(n, &probs);
        let total: f64 = outcomes.iter().map(|(_, w)| w).sum();
        assert!((total - 1.0).abs() < 1e-12);
        let counts: Vec<_> = outcomes
            .iter()
            .map(|(c, w)| (CellCounts::new(&s, n, grid.clone(), c.clone()).unwrap(), *w))
            .collect();
        let expect = |f: &dyn Fn(&CellCounts<f64>) -> f64| -> f64 {
            counts.iter().map(|(c, w)| w * f(c)).sum()
        };
        for f in &fs {
            let mean = expect(&|c| empirical_integral(f, c).unwrap());
            let exact = exact_mean(f, &s, n).unwrap();
            assert!((mean - exact).abs() < 1e-10, "n={n} mean {mean} vs {exact}");
            for g in &fs {
                let m = expect(&|c| {
                    empirical_integral(f, c).unwrap() * empirical_integral(g, c).unwrap()
                });
                let exact = exact_cross_moment(f, g, &s, n).unwrap();
                assert!((m - exact).abs() < 1e-9, "n={n} cross {m} vs {exact}");
            }
        }
    }
}
