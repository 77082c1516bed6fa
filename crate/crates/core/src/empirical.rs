//! Triangular-array sampling, the normalized empirical measure and exact
//! evaluation of multiple empirical integrals on cellwise integrands.

use rand::Rng;
use rand_distr::{Binomial, Distribution};

use crate::error::{Error, Result};
use crate::integrands::{
    CellwiseFunction, ChaosVector, Grid, PatternTable, Tuple, MAX_PATTERN_POWER,
};
use crate::model::{Interval, Measure, Schedule};
use crate::scalar::{compensated_sum, KahanSum, Scalar};

/// Budget `(n + 1)^k` for the brute-force oracle.
pub const BRUTEFORCE_BUDGET: f64 = 1e7;

/// Tolerance on `Σ P_n(A_i) <= 1`.
const PROBABILITY_SLACK: f64 = 1e-12;

/// Where a sample came from, for reproducibility reports.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SeedInfo {
    pub master_seed: u64,
    pub replicate: u64,
}

/// Per-cell occupancy of a sample of size `n`; `rest` counts points of
/// `E_n` outside every cell.
#[derive(Clone, Debug, PartialEq)]
pub struct CellCounts<T> {
    n: u64,
    grid: Grid<T>,
    counts: Vec<u64>,
    rest: u64,
    a_n: T,
    probabilities: Vec<T>,
    seed_info: Option<SeedInfo>,
}

impl<T: Scalar> CellCounts<T> {
    pub fn new(schedule: &Schedule<T>, n: u64, grid: Grid<T>, counts: Vec<u64>) -> Result<Self> {
        if counts.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} counts for {} cells",
                counts.len(),
                grid.len()
            )));
        }
        let total: u64 = counts.iter().sum();
        if total > n {
            return Err(Error::Validation(format!(
                "cell counts sum to {total} > n = {n}"
            )));
        }
        let probabilities = cell_probabilities(&grid, schedule, n)?;
        Ok(Self {
            n,
            rest: n - total,
            a_n: effective_a_n(schedule, n)?,
            grid,
            counts,
            probabilities,
            seed_info: None,
        })
    }

    /// Counts of `points` in each cell of `grid`.
    pub fn from_points(
        schedule: &Schedule<T>,
        grid: Grid<T>,
        points: &PointSample<T>,
    ) -> Result<Self> {
        let mut counts = vec![0u64; grid.len()];
        for &x in points.points() {
            if let Some(i) = grid.locate(x) {
                counts[i] += 1;
            }
        }
        Self::new(schedule, points.n(), grid, counts)
    }

    pub fn with_seed_info(mut self, info: SeedInfo) -> Self {
        self.seed_info = Some(info);
        self
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn rest(&self) -> u64 {
        self.rest
    }

    pub fn a_n(&self) -> T {
        self.a_n
    }

    /// `P_n(A_i)` per cell.
    pub fn probabilities(&self) -> &[T] {
        &self.probabilities
    }

    pub fn seed_info(&self) -> Option<SeedInfo> {
        self.seed_info
    }

    /// `W_n` of a union of cells given by index.
    pub fn w_cells(&self, cells: &[usize]) -> Result<T> {
        let mut count = 0u64;
        let mut prob = KahanSum::new();
        for &i in cells {
            if i >= self.grid.len() {
                return Err(Error::GridMismatch(format!(
                    "cell index {i} outside grid of {} cells",
                    self.grid.len()
                )));
            }
            count += self.counts[i];
            prob.add(self.probabilities[i]);
        }
        let np = T::from_count(self.n) * prob.value();
        Ok((T::from_count(count) - np) / self.a_n.sqrt())
    }

    /// `W_n(B)` for a disjoint union of intervals aligned with the grid.
    pub fn w_intervals(&self, intervals: &[Interval<T>]) -> Result<T> {
        let mut cells = Vec::new();
        for iv in intervals {
            cells.extend(self.grid.cells_within(iv)?);
        }
        cells.sort_unstable();
        if cells.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Validation("intervals overlap".into()));
        }
        self.w_cells(&cells)
    }

    /// Table of `φ_emp(A_i, m)` for `m <= max_power`.
    pub fn pattern_table(&self, max_power: usize) -> Result<PatternTable<T>> {
        if max_power > MAX_PATTERN_POWER {
            return Err(Error::Budget(format!(
                "pattern power {max_power} exceeds {MAX_PATTERN_POWER}"
            )));
        }
        let nf = T::from_count(self.n);
        Ok(PatternTable::new(self.grid.len(), max_power, |cell, m| {
            empirical_pattern(
                self.counts[cell],
                nf * self.probabilities[cell],
                self.a_n,
                m,
            )
        }))
    }
}

/// `n` i.i.d. points from `P_n`.
#[derive(Clone, Debug, PartialEq)]
pub struct PointSample<T> {
    points: Vec<T>,
}

impl<T: Scalar> PointSample<T> {
    pub fn new(schedule: &Schedule<T>, n: u64, points: Vec<T>) -> Result<Self> {
        if points.len() as u64 != n {
            return Err(Error::Validation(format!(
                "{} points for n = {n}",
                points.len()
            )));
        }
        if n > 0 {
            let window = schedule.window_interval(n)?;
            if let Some(x) = points.iter().find(|&&x| x < window.lo || x > window.hi) {
                return Err(Error::Domain(format!("point {x} outside {window}")));
            }
        }
        Ok(Self { points })
    }

    pub fn n(&self) -> u64 {
        self.points.len() as u64
    }

    pub fn points(&self) -> &[T] {
        &self.points
    }
}

fn effective_a_n<T: Scalar>(schedule: &Schedule<T>, n: u64) -> Result<T> {
    // the normalization is irrelevant for the empty sample
    if n == 0 {
        Ok(T::one())
    } else {
        schedule.a_n(n)
    }
}

/// `P_n(A_i)` for each grid cell; errors if they sum past one.
pub fn cell_probabilities<T: Scalar>(
    grid: &Grid<T>,
    schedule: &Schedule<T>,
    n: u64,
) -> Result<Vec<T>> {
    if n == 0 {
        return Ok(vec![T::zero(); grid.len()]);
    }
    let probs = grid.masses(schedule, Measure::Sampling(n))?;
    let total = compensated_sum(probs.iter().copied());
    if total.to_f64().unwrap_or(f64::INFINITY) > 1.0 + PROBABILITY_SLACK {
        return Err(Error::Inconsistent(format!(
            "cell probabilities sum to {total} > 1"
        )));
    }
    Ok(probs)
}

/// Multinomial cell counts drawn as a chain of conditional binomials.
pub fn draw_counts<T: Scalar, R: Rng + ?Sized>(
    schedule: &Schedule<T>,
    n: u64,
    grid: &Grid<T>,
    rng: &mut R,
) -> Result<CellCounts<T>> {
    let probs = cell_probabilities(grid, schedule, n)?;
    let mut counts = vec![0u64; grid.len()];
    let mut remaining_n = n;
    let mut remaining_p = 1.0f64;
    for (count, p) in counts.iter_mut().zip(&probs) {
        if remaining_n == 0 {
            break;
        }
        let p = p.to_f64().unwrap_or(0.0);
        if p <= 0.0 {
            continue;
        }
        let q = if remaining_p <= 0.0 {
            1.0
        } else {
            (p / remaining_p).clamp(0.0, 1.0)
        };
        let draw = Binomial::new(remaining_n, q)
            .map_err(|e| Error::Domain(format!("binomial parameters: {e}")))?
            .sample(rng);
        *count = draw;
        remaining_n -= draw;
        remaining_p -= p;
    }
    CellCounts::new(schedule, n, grid.clone(), counts)
}

/// `n` points from `P_n` by inverting the cumulative control measure on
/// `[0, e(n)]`.
pub fn draw_points<T: Scalar, R: Rng + ?Sized>(
    schedule: &Schedule<T>,
    n: u64,
    rng: &mut R,
) -> Result<PointSample<T>> {
    if n == 0 {
        return PointSample::new(schedule, 0, Vec::new());
    }
    let window = schedule.window_interval(n)?;
    let mass = schedule.window_mass(n)?;
    let points = (0..n)
        .map(|_| {
            let u = T::lit(rng.random::<f64>());
            let x = schedule.control().inverse_cumulative(u * mass);
            x.min(window.hi)
        })
        .collect();
    PointSample::new(schedule, n, points)
}

/// `φ_emp(A, m) = a^{-m/2} Σ_d C(m,d) (N)_d (-nP)^{m-d}`.
///
/// With `λ = nP` these are the coefficients of `(1+t)^N e^{-λt}`, which
/// satisfy `c_{m+1} = (N - λ - m) c_m - m λ c_{m-1}`. Running the recurrence
/// on `a^{-m/2} c_m` starts from the centered count and avoids the
/// cancellation of the explicit sum.
pub fn empirical_pattern<T: Scalar>(count: u64, np: T, a_n: T, m: usize) -> T {
    let s = a_n.sqrt().recip();
    let centered = T::from_count(count) - np;
    let lambda_s2 = np * s * s;
    let mut prev = T::one();
    if m == 0 {
        return prev;
    }
    let mut cur = centered * s;
    for j in 1..m {
        let jf = T::from_count(j as u64);
        let next = (centered - jf) * s * cur - jf * lambda_s2 * prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// `I_k^{(n)}(f)` on the sample summarized by `counts`. The function is
/// refined onto the counts' grid first.
pub fn empirical_integral<T: Scalar>(f: &CellwiseFunction<T>, counts: &CellCounts<T>) -> Result<T> {
    if f.order() == 0 {
        return Ok(f.coeff(&[]));
    }
    let f = if f.grid() == counts.grid() {
        std::borrow::Cow::Borrowed(f)
    } else {
        std::borrow::Cow::Owned(f.refine_to(counts.grid())?)
    };
    let table = counts.pattern_table(f.order())?;
    f.pattern_evaluate(&table)
}

/// Direct expansion of `∫ f d(Σ_j δ_{X_j} - nP_n)^{⊗k}` off the diagonals,
/// scaled by `a_n^{-k/2}`. Each slot takes either a point not used by
/// another slot or the measure `-nP_n`.
pub fn empirical_integral_bruteforce<T: Scalar>(
    f: &CellwiseFunction<T>,
    schedule: &Schedule<T>,
    points: &PointSample<T>,
) -> Result<T> {
    let k = f.order();
    let n = points.n();
    if k == 0 {
        return Ok(f.coeff(&[]));
    }
    if (k as f64) * ((n + 1) as f64).ln() > BRUTEFORCE_BUDGET.ln() + 1e-9 {
        return Err(Error::Budget(format!(
            "(n+1)^k = {}^{k} exceeds {BRUTEFORCE_BUDGET:e}",
            n + 1
        )));
    }
    let grid = f.grid();
    let located: Vec<Option<usize>> = points.points().iter().map(|&x| grid.locate(x)).collect();
    let nf = T::from_count(n);
    let weights: Vec<T> = grid
        .masses(schedule, Measure::Sampling(n))?
        .into_iter()
        .map(|p| -nf * p)
        .collect();

    struct Walk<'a, T> {
        f: &'a CellwiseFunction<T>,
        located: &'a [Option<usize>],
        weights: &'a [T],
        used: Vec<bool>,
        tuple: Tuple,
        acc: KahanSum<T>,
    }

    fn walk<T: Scalar>(w: &mut Walk<'_, T>, factor: T) {
        if w.tuple.len() == w.f.order() {
            w.acc.add(factor * w.f.coeff(&w.tuple));
            return;
        }
        for j in 0..w.located.len() {
            if w.used[j] {
                continue;
            }
            if let Some(cell) = w.located[j] {
                w.used[j] = true;
                w.tuple.push(cell);
                walk(w, factor);
                w.tuple.pop();
                w.used[j] = false;
            }
        }
        for cell in 0..w.weights.len() {
            w.tuple.push(cell);
            walk(w, factor * w.weights[cell]);
            w.tuple.pop();
        }
    }

    let mut state = Walk {
        f,
        located: &located,
        weights: &weights,
        used: vec![false; located.len()],
        tuple: Vec::with_capacity(k),
        acc: KahanSum::new(),
    };
    walk(&mut state, T::one());
    let a_n = schedule.a_n(n)?;
    Ok(state.acc.value() * a_n.powf(-T::lit(k as f64 / 2.0)))
}

/// `Σ_{k=0}^{K} I_k^{(n)}(h^{(k)})`; orders beyond `h`'s length are zero.
pub fn truncated_chaos<T: Scalar>(
    h: &ChaosVector<T>,
    k: usize,
    counts: &CellCounts<T>,
) -> Result<T> {
    let mut acc = KahanSum::new();
    for component in h.components().iter().take(k + 1) {
        acc.add(empirical_integral(component, counts)?);
    }
    Ok(acc.value())
}

/// `K_n = ⌊c (ln(n/a_n))^{1-ε}⌋`, or zero (with a warning) when
/// `n/a_n <= 1`.
pub fn k_schedule<T: Scalar>(
    schedule: &Schedule<T>,
    n: u64,
    c: f64,
    epsilon: f64,
) -> Result<usize> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::Domain(format!("epsilon = {epsilon} not in (0, 1)")));
    }
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::Domain(format!("c = {c} must be positive")));
    }
    let scale = schedule.scale(n)?.to_f64().unwrap_or(0.0);
    if scale <= 1.0 {
        eprintln!("warning: n/a_n = {scale} <= 1 at n = {n}; truncation order set to 0");
        return Ok(0);
    }
    let k = (c * scale.ln().powf(1.0 - epsilon)).floor();
    Ok(k.max(0.0) as usize)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn unit_grid() -> Grid<f64> {
        Grid::from_breakpoints(&[0.0, 1.0]).unwrap()
    }

    #[test]
    fn worked_example_repeated_cell() {
        let s = Schedule::<f64>::sqrt_window();
        let counts = CellCounts::new(&s, 4, unit_grid(), vec![3]).unwrap();
        assert_eq!(counts.a_n(), 2.0);
        let f = CellwiseFunction::indicator(unit_grid(), &[0, 0]).unwrap();
        assert!((empirical_integral(&f, &counts).unwrap() + 1.0).abs() < 1e-14);
    }

    #[test]
    fn linear_integral_is_w_n() {
        let s = Schedule::<f64>::sqrt_window();
        let counts = CellCounts::new(&s, 100, unit_grid(), vec![13]).unwrap();
        let f = CellwiseFunction::indicator(unit_grid(), &[0]).unwrap();
        let w = counts.w_cells(&[0]).unwrap();
        assert!((w - 3.0 / 100f64.sqrt().sqrt()).abs() < 1e-12);
        assert_eq!(empirical_integral(&f, &counts).unwrap(), w);
    }

    #[test]
    fn w_n_vanishes_when_sample_fills_full_window() {
        let s = Schedule::<f64>::sqrt_window();
        let g = Grid::from_breakpoints(&[0.0, 3.0]).unwrap();
        let counts = CellCounts::new(&s, 9, g, vec![9]).unwrap();
        assert!(counts.w_cells(&[0]).unwrap().abs() < 1e-12);
    }

    #[test]
    fn w_n_rejects_unaligned_interval() {
        let s = Schedule::<f64>::sqrt_window();
        let counts = CellCounts::new(&s, 9, unit_grid(), vec![2]).unwrap();
        let half = Interval::new(0.0, 0.5).unwrap();
        assert!(counts.w_intervals(&[half]).is_err());
    }

    #[test]
    fn full_cover_leaves_no_rest() {
        let s = Schedule::<f64>::sqrt_window();
        let g = Grid::from_breakpoints(&[0.0, 4.0, 10.0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let c = draw_counts(&s, 16, &g, &mut rng).unwrap();
            assert_eq!(c.rest(), 0);
            assert_eq!(c.counts().iter().sum::<u64>(), 16);
        }
        let empty = draw_counts(&s, 0, &g, &mut rng).unwrap();
        assert!(empty.counts().iter().all(|&c| c == 0));
    }

    #[test]
    fn cells_covering_window_carry_full_probability() {
        let s = Schedule::<f64>::sqrt_window();
        let g = Grid::from_breakpoints(&[0.0, 1.0, 2.0]).unwrap();
        let p = cell_probabilities(&g, &s, 4).unwrap();
        assert!((p[0] + p[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn symmetrization_invariance() {
        let s = Schedule::<f64>::sqrt_window();
        let g = Grid::from_breakpoints(&[0.0, 1.0, 2.0, 3.0]).unwrap();
        let f = CellwiseFunction::new(
            3,
            g.clone(),
            [
                (vec![0, 1, 2], 1.5),
                (vec![1, 1, 0], -2.0),
                (vec![2, 2, 2], 0.25),
            ],
        )
        .unwrap();
        let counts = CellCounts::new(&s, 25, g, vec![4, 6, 3]).unwrap();
        let a = empirical_integral(&f, &counts).unwrap();
        let b = empirical_integral(&f.symmetrize(), &counts).unwrap();
        assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
    }

    #[test]
    fn bruteforce_matches_on_small_sample() {
        let s = Schedule::<f64>::sqrt_window();
        let g = Grid::from_breakpoints(&[0.0, 1.0, 2.0]).unwrap();
        let pts =
            PointSample::new(&s, 9, vec![0.1, 0.5, 1.2, 2.5, 0.9, 1.9, 2.9, 0.0, 1.0]).unwrap();
        let counts = CellCounts::from_points(&s, g.clone(), &pts).unwrap();
        let f = CellwiseFunction::new(2, g, [(vec![0, 0], 1.0), (vec![0, 1], -0.5)]).unwrap();
        let fast = empirical_integral(&f, &counts).unwrap();
        let slow = empirical_integral_bruteforce(&f, &s, &pts).unwrap();
        assert!((fast - slow).abs() < 1e-12);
        let zero = CellwiseFunction::zero(2, unit_grid());
        assert_eq!(empirical_integral_bruteforce(&zero, &s, &pts).unwrap(), 0.0);
    }

    #[test]
    fn bruteforce_budget() {
        let s = Schedule::<f64>::sqrt_window();
        let pts = PointSample::new(&s, 100, vec![0.5; 100]).unwrap();
        let f = CellwiseFunction::indicator(unit_grid(), &[0, 0, 0, 0]).unwrap();
        assert!(matches!(
            empirical_integral_bruteforce(&f, &s, &pts),
            Err(Error::Budget(_))
        ));
    }

    #[test]
    fn truncated_chaos_examples() {
        let s = Schedule::<f64>::sqrt_window();
        let g = unit_grid();
        let counts = CellCounts::new(&s, 100, g.clone(), vec![7]).unwrap();
        let h = ChaosVector::new(vec![
            CellwiseFunction::constant(g.clone(), 2.5),
            CellwiseFunction::indicator(g.clone(), &[0]).unwrap(),
        ])
        .unwrap();
        assert_eq!(truncated_chaos(&h, 0, &counts).unwrap(), 2.5);
        let w = counts.w_cells(&[0]).unwrap();
        assert!((truncated_chaos(&h, 5, &counts).unwrap() - 2.5 - w).abs() < 1e-14);
    }

    #[test]
    fn k_schedule_examples() {
        let s = Schedule::<f64>::sqrt_window();
        assert_eq!(k_schedule(&s, 1_000_000, 2.0, 0.5).unwrap(), 5);
        assert_eq!(k_schedule(&s, 1, 2.0, 0.5).unwrap(), 0);
        let mut last = 0;
        for e in 2..=8 {
            let k = k_schedule(&s, 10u64.pow(e), 2.0, 0.5).unwrap();
            assert!(k >= last);
            last = k;
        }
        assert!(k_schedule(&s, 100, 2.0, 1.0).is_err());
    }

    fn pattern_by_explicit_sum(count: u64, np: f64, a_n: f64, m: usize) -> f64 {
        let mut total = 0.0;
        let mut binom = 1.0;
        let mut falling = 1.0;
        for d in 0..=m {
            if d > 0 {
                binom *= (m - d + 1) as f64 / d as f64;
                falling *= count as f64 - (d - 1) as f64;
            }
            total += binom * falling * (-np).powi((m - d) as i32);
        }
        total / a_n.powf(m as f64 / 2.0)
    }

    #[test]
    fn pattern_recurrence_matches_explicit_sum() {
        for &(count, np, a_n) in &[
            (3u64, 2.0, 2.0),
            (0, 1.5, 3.0),
            (12, 7.25, 10.0),
            (1, 0.0, 1.0),
        ] {
            for m in 0..=8 {
                let a = empirical_pattern(count, np, a_n, m);
                let b = pattern_by_explicit_sum(count, np, a_n, m);
                assert!(
                    (a - b).abs() <= 1e-11 * b.abs().max(1.0),
                    "{count} {np} {m}: {a} vs {b}"
                );
            }
        }
        // falling factorial vanishes past the count
        assert_eq!(empirical_pattern(2, 0.0, 1.0, 3), 0.0);
    }

    #[test]
    fn pattern_is_finite_in_single_precision_at_large_n() {
        let v = empirical_pattern::<f32>(1_050, 1_000.0, 1_000.0, 20);
        assert!(v.is_finite());
    }
}
