#![allow(dead_code)]

use empirical_chaos::{CellwiseFunction, Grid, Schedule};
use proptest::prelude::*;
use rand::Rng;

pub fn schedule() -> Schedule<f64> {
    Schedule::sqrt_window()
}

/// Four unequal cells inside `E_n` for every `n >= 16`.
pub fn grid4() -> Grid<f64> {
    Grid::from_breakpoints(&[0.0, 0.5, 1.0, 2.0, 3.5]).unwrap()
}

pub fn cellwise(order: usize, max_terms: usize) -> impl Strategy<Value = CellwiseFunction<f64>> {
    let cells = grid4().len();
    prop::collection::vec(
        (prop::collection::vec(0..cells, order), -2.0f64..2.0),
        1..=max_terms,
    )
    .prop_map(move |terms| CellwiseFunction::new(order, grid4(), terms).unwrap())
}

pub fn random_cellwise<R: Rng>(
    rng: &mut R,
    grid: &Grid<f64>,
    order: usize,
    terms: usize,
) -> CellwiseFunction<f64> {
    let entries: Vec<_> = (0..terms)
        .map(|_| {
            let t: Vec<usize> = (0..order)
                .map(|_| rng.random_range(0..grid.len()))
                .collect();
            (t, rng.random_range(-2.0..2.0))
        })
        .collect();
    CellwiseFunction::new(order, grid.clone(), entries).unwrap()
}

pub fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1.0)
}
