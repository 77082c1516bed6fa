//! Gaussian random measure on a grid and exact multiple Wiener-Itô
//! integrals of cellwise integrands.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::empirical::SeedInfo;
use crate::error::{Error, Result};
use crate::integrands::{CellwiseFunction, ChaosVector, Grid, PatternTable, MAX_PATTERN_POWER};
use crate::model::{ControlMeasure, Measure, Schedule};
use crate::scalar::{KahanSum, Scalar};

/// Values `W(A_i) ~ N(0, μ(A_i))` on the cells of a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianCellRealization<T> {
    grid: Grid<T>,
    variances: Vec<T>,
    values: Vec<T>,
    seed_info: Option<SeedInfo>,
}

impl<T: Scalar> GaussianCellRealization<T> {
    pub fn new(grid: Grid<T>, control: &ControlMeasure<T>, values: Vec<T>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} values for {} cells",
                values.len(),
                grid.len()
            )));
        }
        let variances = grid
            .cells()
            .iter()
            .map(|c| control.interval_mass(c))
            .collect();
        Ok(Self {
            grid,
            variances,
            values,
            seed_info: None,
        })
    }

    pub fn with_seed_info(mut self, info: SeedInfo) -> Self {
        self.seed_info = Some(info);
        self
    }

    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    pub fn variances(&self) -> &[T] {
        &self.variances
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn seed_info(&self) -> Option<SeedInfo> {
        self.seed_info
    }

    /// `W` of a union of cells.
    pub fn w_cells(&self, cells: &[usize]) -> Result<T> {
        let mut acc = KahanSum::new();
        for &i in cells {
            let v = self.values.get(i).ok_or_else(|| {
                Error::GridMismatch(format!(
                    "cell index {i} outside grid of {}",
                    self.values.len()
                ))
            })?;
            acc.add(*v);
        }
        Ok(acc.value())
    }

    /// Table of `φ_wie(A_i, m) = μ(A_i)^{m/2} H_m(W(A_i) / μ(A_i)^{1/2})`.
    pub fn pattern_table(&self, max_power: usize) -> Result<PatternTable<T>> {
        if max_power > MAX_PATTERN_POWER {
            return Err(Error::Budget(format!(
                "pattern power {max_power} exceeds {MAX_PATTERN_POWER}"
            )));
        }
        let mut row = Vec::with_capacity(max_power + 1);
        let mut current = usize::MAX;
        Ok(PatternTable::new(self.grid.len(), max_power, |cell, m| {
            if cell != current {
                current = cell;
                row = scaled_hermite_row(max_power, self.values[cell], self.variances[cell]);
            }
            row[m]
        }))
    }
}

/// Independent `N(0, μ(A_i))` values on every cell.
pub fn sample_gaussian_cells<T: Scalar, R: Rng + ?Sized>(
    grid: &Grid<T>,
    control: &ControlMeasure<T>,
    rng: &mut R,
) -> GaussianCellRealization<T> {
    let values = grid
        .cells()
        .iter()
        .map(|c| {
            let z: f64 = StandardNormal.sample(rng);
            control.interval_mass(c).sqrt() * T::lit(z)
        })
        .collect();
    GaussianCellRealization::new(grid.clone(), control, values).expect("one value per cell")
}

/// Probabilists' Hermite polynomial `H_m(x)`.
pub fn hermite<T: Scalar>(m: usize, x: T) -> T {
    scaled_hermite_row(m, x, T::one())[m]
}

/// `σ^m H_j(x/σ)` for `j = 0..=m` with `σ² = variance`; the recurrence
/// `H^σ_j = x H^σ_{j-1} - (j-1) σ² H^σ_{j-2}` needs no division, so zero
/// variance gives `x^j` (and `x = 0` there yields zero for `j >= 1`).
fn scaled_hermite_row<T: Scalar>(m: usize, x: T, variance: T) -> Vec<T> {
    let mut row = Vec::with_capacity(m + 1);
    row.push(T::one());
    if m >= 1 {
        row.push(x);
    }
    for j in 2..=m {
        let next = x * row[j - 1] - T::from_count((j - 1) as u64) * variance * row[j - 2];
        row.push(next);
    }
    row
}

/// `I_k(f)` on one realization. The function is refined onto the
/// realization's grid first.
pub fn wiener_integral<T: Scalar>(
    f: &CellwiseFunction<T>,
    realization: &GaussianCellRealization<T>,
) -> Result<T> {
    if f.order() == 0 {
        return Ok(f.coeff(&[]));
    }
    let table = realization.pattern_table(f.order())?;
    if f.grid() == realization.grid() {
        f.pattern_evaluate(&table)
    } else {
        f.refine_to(realization.grid())?.pattern_evaluate(&table)
    }
}

/// `Σ_{k=0}^{K} I_k(h^{(k)})` with every order on the same realization.
pub fn chaos_series<T: Scalar>(
    h: &ChaosVector<T>,
    k: usize,
    realization: &GaussianCellRealization<T>,
) -> Result<T> {
    let mut acc = KahanSum::new();
    for component in h.components().iter().take(k + 1) {
        acc.add(wiener_integral(component, realization)?);
    }
    Ok(acc.value())
}

/// `Σ_{1<=k<=K} k! ‖h̃^{(k)}‖²`, the variance of the truncated series.
pub fn chaos_variance<T: Scalar>(
    h: &ChaosVector<T>,
    k: usize,
    schedule: &Schedule<T>,
) -> Result<T> {
    let mut acc = KahanSum::new();
    for (order, component) in h.components().iter().enumerate().take(k + 1).skip(1) {
        let norm2 = component.symmetric_inner(component, schedule, Measure::Control)?;
        acc.add(crate::integrands::factorial_f::<T>(order) * norm2);
    }
    Ok(acc.value())
}
