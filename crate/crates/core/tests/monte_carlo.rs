mod common;

use common::schedule;
use empirical_chaos::{
    chaos_series, chaos_variance, draw_counts, empirical_integral, exact_mean, hermite,
    sample_gaussian_cells, wiener_integral, CellwiseFunction, ChaosVector, ControlMeasure, Grid,
    Measure,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

const R: usize = 100_000;

struct Sample {
    mean: f64,
    se: f64,
}

fn mean_of(xs: &[f64]) -> Sample {
    let r = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / r;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (r - 1.0);
    Sample {
        mean,
        se: (var / r).sqrt(),
    }
}

fn within(s: &Sample, target: f64, what: &str) {
    let z = (s.mean - target) / s.se.max(1e-300);
    assert!(
        z.abs() <= 4.0 || (s.mean - target).abs() < 1e-12,
        "{what}: mean {} target {target} se {} z {z}",
        s.mean,
        s.se
    );
}

/// Products of centered pairs, so the mean estimates the covariance.
fn centered_products(xs: &[f64], ys: &[f64]) -> Vec<f64> {
    let mx = xs.iter().sum::<f64>() / xs.len() as f64;
    let my = ys.iter().sum::<f64>() / ys.len() as f64;
    xs.iter()
        .zip(ys)
        .map(|(x, y)| (x - mx) * (y - my))
        .collect()
}

#[test]
fn cell_count_mean() {
    let s = schedule();
    let g = Grid::from_breakpoints(&[0.0, 1.0]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let xs: Vec<f64> = (0..R)
        .map(|_| draw_counts(&s, 100, &g, &mut rng).unwrap().counts()[0] as f64)
        .collect();
    within(&mean_of(&xs), 10.0, "E N_A");
}

#[test]
fn normalized_measure_covariances() {
    let s = schedule();
    let g = Grid::from_breakpoints(&[0.0, 1.0, 2.0]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(102);
    let (mut w1, mut w2) = (Vec::with_capacity(R), Vec::with_capacity(R));
    for _ in 0..R {
        let c = draw_counts(&s, 10_000, &g, &mut rng).unwrap();
        w1.push(c.w_cells(&[0]).unwrap());
        w2.push(c.w_cells(&[1]).unwrap());
    }
    within(&mean_of(&centered_products(&w1, &w1)), 0.99, "Var W_n");
    within(&mean_of(&centered_products(&w1, &w2)), -0.01, "Cov W_n");
}

#[test]
fn mean_identity_for_indicators() {
    let s = schedule();
    let g = Grid::from_breakpoints(&[0.0, 1.0, 2.0]).unwrap();
    let ind = |t: &[usize]| CellwiseFunction::indicator(g.clone(), t).unwrap();
    let fs = [
        ind(&[0]),
        ind(&[0, 0]),
        ind(&[0, 1]),
        ind(&[0, 0, 0]),
        ind(&[1, 0, 1]),
    ];
    for n in [100u64, 10_000] {
        let mut rng = ChaCha8Rng::seed_from_u64(103 + n);
        let samples: Vec<Vec<f64>> = (0..R)
            .map(|_| {
                let c = draw_counts(&s, n, &g, &mut rng).unwrap();
                fs.iter()
                    .map(|f| empirical_integral(f, &c).unwrap())
                    .collect()
            })
            .collect();
        for (i, f) in fs.iter().enumerate() {
            let xs: Vec<f64> = samples.iter().map(|r| r[i]).collect();
            within(
                &mean_of(&xs),
                exact_mean(f, &s, n).unwrap(),
                &format!("n={n} f#{i}"),
            );
        }
    }
}

#[test]
fn gaussian_cells_have_control_variances() {
    let g = Grid::from_breakpoints(&[0.0, 2.0, 3.0]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(104);
    let (mut a, mut b) = (Vec::with_capacity(R), Vec::with_capacity(R));
    for _ in 0..R {
        let r = sample_gaussian_cells(&g, &ControlMeasure::lebesgue(), &mut rng);
        a.push(r.values()[0]);
        b.push(r.values()[1]);
    }
    within(&mean_of(&centered_products(&a, &a)), 2.0, "Var W([0,2])");
    within(&mean_of(&centered_products(&a, &b)), 0.0, "Cov W(A), W(B)");
}

#[test]
fn hermite_orthogonality() {
    let mut rng = ChaCha8Rng::seed_from_u64(105);
    let zs: Vec<f64> = (0..R).map(|_| StandardNormal.sample(&mut rng)).collect();
    for j in 0..=4 {
        for m in 0..=4 {
            let xs: Vec<f64> = zs.iter().map(|&z| hermite(j, z) * hermite(m, z)).collect();
            let target = if j == m {
                (1..=m).product::<usize>() as f64
            } else {
                0.0
            };
            within(&mean_of(&xs), target, &format!("E H_{j} H_{m}"));
        }
    }
}

#[test]
fn wiener_isometry_and_orthogonality() {
    let s = schedule();
    let g = Grid::from_breakpoints(&[0.0, 0.5, 1.0, 2.0, 3.0]).unwrap();
    let ind = |t: &[usize]| CellwiseFunction::indicator(g.clone(), t).unwrap();
    let fs = [
        ind(&[2]),
        ind(&[2, 3]),
        ind(&[0, 1]),
        ind(&[1, 1]),
        ind(&[0, 2, 3]),
        ind(&[3, 3, 2]),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(106);
    let samples: Vec<Vec<f64>> = (0..R)
        .map(|_| {
            let r = sample_gaussian_cells(&g, s.control(), &mut rng);
            fs.iter().map(|f| wiener_integral(f, &r).unwrap()).collect()
        })
        .collect();
    for (i, f) in fs.iter().enumerate() {
        for (j, h) in fs.iter().enumerate().skip(i) {
            let xs: Vec<f64> = samples.iter().map(|r| r[i] * r[j]).collect();
            let target = if f.order() == h.order() {
                let k = f.order();
                (1..=k).product::<usize>() as f64
                    * f.symmetrize()
                        .l2_inner(&h.symmetrize(), &s, Measure::Control)
                        .unwrap()
            } else {
                0.0
            };
            within(&mean_of(&xs), target, &format!("E I(f{i}) I(f{j})"));
        }
        let xs: Vec<f64> = samples.iter().map(|r| r[i]).collect();
        within(&mean_of(&xs), 0.0, &format!("E I(f{i})"));
        // second-moment bound with the unsymmetrized norm
        let sq = mean_of(&samples.iter().map(|r| r[i] * r[i]).collect::<Vec<_>>());
        let k = f.order();
        let bound =
            (1..=k).product::<usize>() as f64 * f.l2_norm(&s, Measure::Control).unwrap().powi(2);
        assert!(sq.mean <= bound + 4.0 * sq.se);
    }
    // disjoint unit cells: Var I(1_{A×B}) = 2! ‖f̃‖² = 1
    let xs: Vec<f64> = samples.iter().map(|r| r[1] * r[1]).collect();
    within(&mean_of(&xs), 1.0, "isometry");
}

#[test]
fn chaos_series_moments() {
    let s = schedule();
    let g = Grid::from_breakpoints(&[0.0, 1.0]).unwrap();
    let h = ChaosVector::new(vec![
        CellwiseFunction::zero(0, g.clone()),
        CellwiseFunction::indicator(g.clone(), &[0]).unwrap(),
        CellwiseFunction::indicator(g.clone(), &[0, 0]).unwrap(),
    ])
    .unwrap();
    assert!((chaos_variance(&h, 2, &s).unwrap() - 3.0).abs() < 1e-14);
    let mut rng = ChaCha8Rng::seed_from_u64(107);
    let xs: Vec<f64> = (0..R)
        .map(|_| chaos_series(&h, 2, &sample_gaussian_cells(&g, s.control(), &mut rng)).unwrap())
        .collect();
    within(&mean_of(&xs), 0.0, "E chaos");
    within(
        &mean_of(&xs.iter().map(|x| x * x).collect::<Vec<_>>()),
        3.0,
        "Var chaos",
    );
}
