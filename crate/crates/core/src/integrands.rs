//! Cell-constant integrands on `E^k`.
//!
//! A [`CellwiseFunction`] of order `k` is `Σ_τ c_τ 1_{A_{τ_1} × … × A_{τ_k}}`
//! over the cells of a [`Grid`]. Repeated indices are allowed, which covers
//! simple functions, tensor powers and contraction outputs alike. Cell
//! indices are 0-based in this API.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::model::{Interval, Measure, Schedule};
use crate::scalar::{compensated_sum, KahanSum, Scalar};

/// Largest number of stored coefficients any operation may produce.
pub const DEFAULT_BUDGET: usize = 1_000_000;

/// Highest per-cell multiplicity the pattern evaluators accept.
pub const MAX_PATTERN_POWER: usize = 20;

pub type Tuple = Vec<usize>;

/// Ordered, pairwise disjoint, bounded, nonempty cells `A_1 < … < A_t`.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid<T> {
    cells: Vec<Interval<T>>,
}

impl<T: Scalar> Grid<T> {
    pub fn new(cells: Vec<Interval<T>>) -> Result<Self> {
        if cells.is_empty() {
            return Err(Error::Validation("a grid needs at least one cell".into()));
        }
        for c in &cells {
            if !(c.lo < c.hi) {
                return Err(Error::Validation(format!("empty grid cell {c}")));
            }
        }
        for w in cells.windows(2) {
            if w[1].lo < w[0].hi {
                return Err(Error::Validation(format!(
                    "grid cells must be sorted and disjoint: {} then {}",
                    w[0], w[1]
                )));
            }
        }
        Ok(Self { cells })
    }

    /// Contiguous cells between consecutive breakpoints.
    pub fn from_breakpoints(points: &[T]) -> Result<Self> {
        let cells = points
            .windows(2)
            .map(|w| Interval::new(w[0], w[1]))
            .collect::<Result<Vec<_>>>()?;
        Self::new(cells)
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn cells(&self) -> &[Interval<T>] {
        &self.cells
    }

    pub fn cell(&self, i: usize) -> &Interval<T> {
        &self.cells[i]
    }

    /// Index of the cell containing `x`, if any.
    pub fn locate(&self, x: T) -> Option<usize> {
        let i = self.cells.partition_point(|c| c.hi <= x);
        (i < self.cells.len() && self.cells[i].contains(x)).then_some(i)
    }

    pub fn masses(&self, schedule: &Schedule<T>, measure: Measure) -> Result<Vec<T>> {
        self.cells
            .iter()
            .map(|c| schedule.interval_mass(measure, c))
            .collect()
    }

    /// Sorted union of breakpoints, keeping the pieces covered by either grid.
    pub fn common_refinement(&self, other: &Self) -> Self {
        if self == other {
            return self.clone();
        }
        let mut points: Vec<T> = self
            .cells
            .iter()
            .chain(&other.cells)
            .flat_map(|c| [c.lo, c.hi])
            .collect();
        points.sort_by(|a, b| a.partial_cmp(b).expect("finite endpoints"));
        points.dedup();
        let covered = |piece: &Interval<T>| {
            self.cells
                .iter()
                .chain(&other.cells)
                .any(|c| piece.is_subset_of(c))
        };
        let cells = points
            .windows(2)
            .map(|w| Interval { lo: w[0], hi: w[1] })
            .filter(covered)
            .collect();
        Self { cells }
    }

    /// Indices of the cells making up `iv`; errors unless `iv` is exactly a
    /// union of cells.
    pub fn cells_within(&self, iv: &Interval<T>) -> Result<Vec<usize>> {
        let mut inside = Vec::new();
        let mut covered = T::zero();
        for (i, c) in self.cells.iter().enumerate() {
            if c.is_subset_of(iv) {
                inside.push(i);
                covered = covered + (c.hi - c.lo);
            } else if c.overlaps(iv) {
                return Err(Error::GridMismatch(format!(
                    "cell {c} straddles the boundary of {iv}"
                )));
            }
        }
        let width = iv.hi - iv.lo;
        if (covered - width).abs() > T::lit(1e-12) * width.max(T::one()) {
            return Err(Error::GridMismatch(format!(
                "{iv} is not a union of grid cells"
            )));
        }
        Ok(inside)
    }

    /// For each cell of `self`, the cells of the finer grid it splits into.
    pub fn embedding(&self, finer: &Self) -> Result<Vec<Vec<usize>>> {
        self.cells.iter().map(|c| finer.cells_within(c)).collect()
    }
}

/// Per-cell kernel `φ(A, m)` tabulated for `m = 0..=max_power`.
#[derive(Clone, Debug)]
pub struct PatternTable<T> {
    max_power: usize,
    values: Vec<T>,
}

impl<T: Scalar> PatternTable<T> {
    pub fn new(cells: usize, max_power: usize, mut phi: impl FnMut(usize, usize) -> T) -> Self {
        let mut values = Vec::with_capacity(cells * (max_power + 1));
        for cell in 0..cells {
            for m in 0..=max_power {
                values.push(phi(cell, m));
            }
        }
        Self { max_power, values }
    }

    pub fn cells(&self) -> usize {
        self.values.len() / (self.max_power + 1)
    }

    pub fn max_power(&self) -> usize {
        self.max_power
    }

    #[inline]
    pub fn get(&self, cell: usize, m: usize) -> T {
        self.values[cell * (self.max_power + 1) + m]
    }
}

/// Order-`k` integrand constant on products of grid cells.
#[derive(Clone, Debug, PartialEq)]
pub struct CellwiseFunction<T> {
    order: usize,
    grid: Grid<T>,
    coeffs: BTreeMap<Tuple, T>,
}

impl<T: Scalar> CellwiseFunction<T> {
    /// Builds from `(tuple, value)` pairs; repeated tuples are summed.
    pub fn new(
        order: usize,
        grid: Grid<T>,
        coeffs: impl IntoIterator<Item = (Tuple, T)>,
    ) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (tuple, value) in coeffs {
            if tuple.len() != order {
                return Err(Error::Validation(format!(
                    "index tuple {tuple:?} has length {}, expected {order}",
                    tuple.len()
                )));
            }
            if let Some(&bad) = tuple.iter().find(|&&i| i >= grid.len()) {
                return Err(Error::Validation(format!(
                    "cell index {bad} out of range for a grid of {} cells",
                    grid.len()
                )));
            }
            if !value.is_finite() {
                return Err(Error::Validation(format!("non-finite coefficient {value}")));
            }
            let slot = map.entry(tuple).or_insert_with(T::zero);
            *slot = *slot + value;
        }
        map.retain(|_, v| *v != T::zero());
        Ok(Self {
            order,
            grid,
            coeffs: map,
        })
    }

    fn from_map(order: usize, grid: Grid<T>, mut coeffs: BTreeMap<Tuple, T>) -> Self {
        coeffs.retain(|_, v| *v != T::zero());
        Self {
            order,
            grid,
            coeffs,
        }
    }

    pub fn zero(order: usize, grid: Grid<T>) -> Self {
        Self::from_map(order, grid, BTreeMap::new())
    }

    /// Order-0 constant.
    pub fn constant(grid: Grid<T>, c: T) -> Self {
        Self::from_map(0, grid, BTreeMap::from([(Vec::new(), c)]))
    }

    /// `1_{A_{i_1} × … × A_{i_k}}`.
    pub fn indicator(grid: Grid<T>, cells: &[usize]) -> Result<Self> {
        Self::new(cells.len(), grid, [(cells.to_vec(), T::one())])
    }

    /// `value · 1_{B_1 × … × B_k}` for intervals that are unions of grid cells.
    pub fn product_box(grid: Grid<T>, sides: &[Interval<T>], value: T) -> Result<Self> {
        let slots = sides
            .iter()
            .map(|iv| grid.cells_within(iv))
            .collect::<Result<Vec<_>>>()?;
        let size: usize = slots.iter().map(Vec::len).product();
        if size > DEFAULT_BUDGET {
            return Err(Error::Budget(format!("box expands to {size} coefficients")));
        }
        let mut coeffs = BTreeMap::new();
        for tuple in cartesian(&slots) {
            coeffs.insert(tuple, value);
        }
        Ok(Self::from_map(sides.len(), grid, coeffs))
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    pub fn coeffs(&self) -> impl Iterator<Item = (&Tuple, T)> + '_ {
        self.coeffs.iter().map(|(k, v)| (k, *v))
    }

    pub fn coeff(&self, tuple: &[usize]) -> T {
        self.coeffs.get(tuple).copied().unwrap_or_else(T::zero)
    }

    pub fn nnz(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// True when every tuple with a repeated index has coefficient zero,
    /// i.e. the function is simple.
    pub fn vanishes_on_repeats(&self) -> bool {
        self.coeffs.keys().all(|t| !has_repeat(t))
    }

    /// Re-expresses the function on a grid refining its own.
    pub fn refine_to(&self, finer: &Grid<T>) -> Result<Self> {
        if &self.grid == finer {
            return Ok(self.clone());
        }
        let embed = self.grid.embedding(finer)?;
        let mut coeffs = BTreeMap::new();
        for (tuple, &c) in &self.coeffs {
            let slots: Vec<Vec<usize>> = tuple.iter().map(|&i| embed[i].clone()).collect();
            let size: usize = slots.iter().map(Vec::len).product();
            if coeffs.len() + size > DEFAULT_BUDGET {
                return Err(Error::Budget(format!(
                    "refinement exceeds {DEFAULT_BUDGET} coefficients"
                )));
            }
            for t in cartesian(&slots) {
                coeffs.insert(t, c);
            }
        }
        Ok(Self::from_map(self.order, finer.clone(), coeffs))
    }

    /// Both functions on the common refinement of their grids.
    pub fn on_common_grid(&self, other: &Self) -> Result<(Self, Self)> {
        let grid = self.grid.common_refinement(&other.grid);
        Ok((self.refine_to(&grid)?, other.refine_to(&grid)?))
    }

    pub fn scale(&self, c: T) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .map(|(k, v)| (k.clone(), *v * c))
            .collect();
        Self::from_map(self.order, self.grid.clone(), coeffs)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.order != other.order {
            return Err(Error::OrderMismatch {
                left: self.order,
                right: other.order,
            });
        }
        let (a, b) = self.on_common_grid(other)?;
        let mut coeffs = a.coeffs;
        for (k, v) in b.coeffs {
            let slot = coeffs.entry(k).or_insert_with(T::zero);
            *slot = *slot + v;
        }
        Ok(Self::from_map(self.order, a.grid, coeffs))
    }

    /// `f̃ = (1/k!) Σ_σ f ∘ σ`.
    ///
    /// Each distinct rearrangement of a tuple with multiplicities `m_j`
    /// receives `Π m_j! / k!` of its coefficient.
    pub fn symmetrize(&self) -> Self {
        let k = self.order;
        let k_fact = factorial_f::<T>(k);
        let mut coeffs: BTreeMap<Tuple, T> = BTreeMap::new();
        for (tuple, &c) in &self.coeffs {
            let mut perm = tuple.clone();
            perm.sort_unstable();
            let weight = multiplicities(&perm)
                .iter()
                .fold(T::one(), |acc, &m| acc * factorial_f::<T>(m))
                / k_fact;
            loop {
                let slot = coeffs.entry(perm.clone()).or_insert_with(T::zero);
                *slot = *slot + c * weight;
                if !next_permutation(&mut perm) {
                    break;
                }
            }
        }
        Self::from_map(k, self.grid.clone(), coeffs)
    }

    /// `(f ⊗ g)(x_1..x_{k1+k2}) = f(x_1..x_{k1}) g(x_{k1+1}..x_{k1+k2})`.
    pub fn tensor(&self, other: &Self) -> Result<Self> {
        let (a, b) = self.on_common_grid(other)?;
        if a.nnz().saturating_mul(b.nnz()) > DEFAULT_BUDGET {
            return Err(Error::Budget(format!(
                "tensor product of {} and {} coefficients",
                a.nnz(),
                b.nnz()
            )));
        }
        let mut coeffs = BTreeMap::new();
        for (ta, &ca) in &a.coeffs {
            for (tb, &cb) in &b.coeffs {
                let mut t = ta.clone();
                t.extend_from_slice(tb);
                coeffs.insert(t, ca * cb);
            }
        }
        Ok(Self::from_map(a.order + b.order, a.grid, coeffs))
    }

    /// Integral against the product measure `m^k`.
    pub fn integral(&self, schedule: &Schedule<T>, measure: Measure) -> Result<T> {
        let masses = self.grid.masses(schedule, measure)?;
        Ok(compensated_sum(self.coeffs.iter().map(|(t, &c)| {
            t.iter().fold(c, |acc, &i| acc * masses[i])
        })))
    }

    /// `⟨f, g⟩` in `L²(m^k)`.
    pub fn l2_inner(&self, other: &Self, schedule: &Schedule<T>, measure: Measure) -> Result<T> {
        if self.order != other.order {
            return Err(Error::OrderMismatch {
                left: self.order,
                right: other.order,
            });
        }
        let (a, b) = self.on_common_grid(other)?;
        let masses = a.grid.masses(schedule, measure)?;
        Ok(compensated_sum(a.coeffs.iter().filter_map(|(t, &ca)| {
            let cb = b.coeffs.get(t)?;
            Some(t.iter().fold(ca * *cb, |acc, &i| acc * masses[i]))
        })))
    }

    pub fn l2_norm(&self, schedule: &Schedule<T>, measure: Measure) -> Result<T> {
        Ok(self.l2_inner(self, schedule, measure)?.sqrt())
    }

    /// `⟨f̃, g̃⟩` in `L²(m^k)` without materializing the symmetrizations:
    /// `Σ_M S_M(f) S_M(g) / P_M · m(M)` over multisets `M`, with `S_M` the
    /// coefficient sum over rearrangements of `M` and `P_M` their number.
    pub fn symmetric_inner(
        &self,
        other: &Self,
        schedule: &Schedule<T>,
        measure: Measure,
    ) -> Result<T> {
        if self.order != other.order {
            return Err(Error::OrderMismatch {
                left: self.order,
                right: other.order,
            });
        }
        let (a, b) = self.on_common_grid(other)?;
        let masses = a.grid.masses(schedule, measure)?;
        let class_sums = |f: &Self| {
            let mut sums: BTreeMap<Tuple, KahanSum<T>> = BTreeMap::new();
            for (t, &c) in &f.coeffs {
                let mut key = t.clone();
                key.sort_unstable();
                sums.entry(key).or_default().add(c);
            }
            sums
        };
        let sa = class_sums(&a);
        let sb = class_sums(&b);
        let k_fact = factorial_f::<T>(self.order);
        Ok(compensated_sum(sa.iter().filter_map(|(m, x)| {
            let y = sb.get(m)?;
            let arrangements = k_fact
                / multiplicities(m)
                    .iter()
                    .fold(T::one(), |acc, &r| acc * factorial_f::<T>(r));
            let mass = m.iter().fold(T::one(), |acc, &i| acc * masses[i]);
            Some(x.value() * y.value() / arrangements * mass)
        })))
    }

    /// `Σ_τ c_τ Π_j φ(A_j, m_j)` where `m_j` is the multiplicity of cell
    /// `A_j` in `τ`.
    pub fn pattern_evaluate(&self, table: &PatternTable<T>) -> Result<T> {
        if table.cells() != self.grid.len() {
            return Err(Error::GridMismatch(format!(
                "pattern table covers {} cells, function grid has {}",
                table.cells(),
                self.grid.len()
            )));
        }
        if self.order > table.max_power() {
            return Err(Error::Budget(format!(
                "order {} exceeds tabulated power {}",
                self.order,
                table.max_power()
            )));
        }
        let mut scratch: Vec<usize> = Vec::with_capacity(self.order);
        Ok(compensated_sum(self.coeffs.iter().map(|(t, &c)| {
            scratch.clear();
            scratch.extend_from_slice(t);
            scratch.sort_unstable();
            let mut value = c;
            let mut i = 0;
            while i < scratch.len() {
                let cell = scratch[i];
                let mut j = i + 1;
                while j < scratch.len() && scratch[j] == cell {
                    j += 1;
                }
                value = value * table.get(cell, j - i);
                i = j;
            }
            value
        })))
    }
}

/// A step function `g` on a grid (zero off the grid).
#[derive(Clone, Debug, PartialEq)]
pub struct StepFunction<T> {
    pub grid: Grid<T>,
    pub values: Vec<T>,
}

impl<T: Scalar> StepFunction<T> {
    pub fn new(grid: Grid<T>, values: Vec<T>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Validation(format!(
                "{} values for {} cells",
                values.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn to_cellwise(&self) -> CellwiseFunction<T> {
        let coeffs = self
            .values
            .iter()
            .enumerate()
            .map(|(i, &v)| (vec![i], v))
            .collect();
        CellwiseFunction::from_map(1, self.grid.clone(), coeffs)
    }
}

/// `g^{⊗k}`.
#[derive(Clone, Debug, PartialEq)]
pub struct TensorPowerFunction<T> {
    pub base: StepFunction<T>,
    pub power: usize,
}

impl<T: Scalar> TensorPowerFunction<T> {
    pub fn new(base: StepFunction<T>, power: usize) -> Result<Self> {
        if power == 0 {
            return Err(Error::Domain("tensor power must be at least 1".into()));
        }
        Ok(Self { base, power })
    }

    /// `‖g^{⊗k}‖ = ‖g‖^k`.
    pub fn l2_norm(&self, schedule: &Schedule<T>, measure: Measure) -> Result<T> {
        Ok(self
            .base
            .to_cellwise()
            .l2_norm(schedule, measure)?
            .powi(self.power as i32))
    }

    pub fn expand(&self) -> Result<CellwiseFunction<T>> {
        self.expand_with_budget(DEFAULT_BUDGET)
    }

    /// Coefficient of `(i_1..i_k)` is `Π_m g(A_{i_m})`.
    pub fn expand_with_budget(&self, budget: usize) -> Result<CellwiseFunction<T>> {
        let t = self.base.grid.len() as f64;
        if self.power as f64 * t.ln() > (budget as f64).ln() {
            return Err(Error::Budget(format!(
                "expanding a {}-cell step function to power {} exceeds {budget} coefficients; \
                 evaluate it through the pattern evaluator on the base grid instead",
                self.base.grid.len(),
                self.power
            )));
        }
        let nonzero: Vec<usize> = (0..self.base.values.len())
            .filter(|&i| self.base.values[i] != T::zero())
            .collect();
        let slots = vec![nonzero; self.power];
        let coeffs = cartesian(&slots)
            .map(|tuple| {
                let v = tuple
                    .iter()
                    .fold(T::one(), |acc, &i| acc * self.base.values[i]);
                (tuple, v)
            })
            .collect();
        Ok(CellwiseFunction::from_map(
            self.power,
            self.base.grid.clone(),
            coeffs,
        ))
    }
}

/// Integrand vector `h = (h^{(0)}, h^{(1)}, …, h^{(K_max)})`, zero beyond `K_max`.
#[derive(Clone, Debug, PartialEq)]
pub struct ChaosVector<T> {
    components: Vec<CellwiseFunction<T>>,
}

impl<T: Scalar> ChaosVector<T> {
    pub fn new(components: Vec<CellwiseFunction<T>>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::Validation("chaos vector needs h^(0)".into()));
        }
        for (k, h) in components.iter().enumerate() {
            if h.order() != k {
                return Err(Error::Validation(format!(
                    "component {k} has order {}",
                    h.order()
                )));
            }
        }
        Ok(Self { components })
    }

    /// `h^{(k)} = k^{-1} 1_{[0,1] × [0,1/2] × … × [0,1/k]}` for `1 <= k <= k_max`,
    /// `h^{(0)} = 0`, on the grid with breakpoints `0, 1/k_max, …, 1/2, 1`.
    pub fn nested_boxes(k_max: usize) -> Result<Self> {
        let mut points: Vec<T> = vec![T::zero()];
        points.extend(
            (1..=k_max.max(1))
                .rev()
                .map(|j| T::one() / T::from_count(j as u64)),
        );
        let grid = Grid::from_breakpoints(&points)?;
        let mut components = vec![CellwiseFunction::zero(0, grid.clone())];
        for k in 1..=k_max {
            let sides = (1..=k)
                .map(|j| Interval::new(T::zero(), T::one() / T::from_count(j as u64)))
                .collect::<Result<Vec<_>>>()?;
            let value = T::one() / T::from_count(k as u64);
            components.push(CellwiseFunction::product_box(grid.clone(), &sides, value)?);
        }
        Self::new(components)
    }

    pub fn k_max(&self) -> usize {
        self.components.len() - 1
    }

    pub fn components(&self) -> &[CellwiseFunction<T>] {
        &self.components
    }

    pub fn component(&self, k: usize) -> Option<&CellwiseFunction<T>> {
        self.components.get(k)
    }

    /// All components re-expressed on one common grid.
    pub fn on_common_grid(&self) -> Result<Self> {
        let grid = self
            .components
            .iter()
            .skip(1)
            .fold(self.components[0].grid().clone(), |g, h| {
                g.common_refinement(h.grid())
            });
        let components = self
            .components
            .iter()
            .map(|h| h.refine_to(&grid))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { components })
    }

    pub fn grid(&self) -> &Grid<T> {
        self.components[0].grid()
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        let k_max = self.k_max().max(other.k_max());
        let components = (0..=k_max)
            .map(|k| match (self.component(k), other.component(k)) {
                (Some(a), Some(b)) => a.add(b),
                (Some(a), None) => Ok(a.clone()),
                (None, Some(b)) => Ok(b.clone()),
                (None, None) => unreachable!(),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(components)
    }

    /// `k! ‖h̃^{(k)}‖²_{L²(μ^k)}` for each order.
    pub fn norm_terms(&self, schedule: &Schedule<T>) -> Result<Vec<T>> {
        self.components
            .iter()
            .enumerate()
            .map(|(k, h)| {
                Ok(factorial_f::<T>(k) * h.symmetric_inner(h, schedule, Measure::Control)?)
            })
            .collect()
    }

    /// `‖h‖_H = (Σ_k k! ‖h̃^{(k)}‖²)^{1/2}`.
    pub fn h_norm(&self, schedule: &Schedule<T>) -> Result<T> {
        Ok(compensated_sum(self.norm_terms(schedule)?).sqrt())
    }
}

pub(crate) fn factorial_f<T: Scalar>(k: usize) -> T {
    (1..=k).fold(T::one(), |acc, i| acc * T::from_count(i as u64))
}

pub(crate) fn has_repeat(t: &[usize]) -> bool {
    t.iter().enumerate().any(|(i, a)| t[i + 1..].contains(a))
}

/// Run lengths of a sorted slice.
pub(crate) fn multiplicities(sorted: &[usize]) -> Vec<usize> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i + 1;
        while j < sorted.len() && sorted[j] == sorted[i] {
            j += 1;
        }
        out.push(j - i);
        i = j;
    }
    out
}

/// Lexicographic successor; false once the last permutation is reached.
pub(crate) fn next_permutation(v: &mut [usize]) -> bool {
    if v.len() < 2 {
        return false;
    }
    let Some(i) = (0..v.len() - 1).rev().find(|&i| v[i] < v[i + 1]) else {
        return false;
    };
    let j = (i + 1..v.len())
        .rev()
        .find(|&j| v[j] > v[i])
        .expect("exists");
    v.swap(i, j);
    v[i + 1..].reverse();
    true
}

/// All tuples picking one entry from each slot.
pub(crate) fn cartesian(slots: &[Vec<usize>]) -> impl Iterator<Item = Tuple> + '_ {
    let empty = slots.iter().any(Vec::is_empty);
    let mut cursor = vec![0usize; slots.len()];
    let mut done = empty;
    std::iter::from_fn(move || {
        if done {
            return None;
        }
        let item: Tuple = cursor.iter().zip(slots).map(|(&c, s)| s[c]).collect();
        done = true;
        for pos in (0..slots.len()).rev() {
            cursor[pos] += 1;
            if cursor[pos] < slots[pos].len() {
                done = false;
                break;
            }
            cursor[pos] = 0;
        }
        Some(item)
    })
}
