//! The measure space `E = [0, ∞)` with a piecewise-constant control density,
//! and the triangular-array schedule `(E_n, a_n, P_n, μ_n)` built on it.
//!
//! The windows are `E_n = [0, e(n)]`, `a_n = n / μ(E_n)`,
//! `P_n(B) = μ(B ∩ E_n) / μ(E_n)` and `μ_n = (n / a_n) P_n = μ(· ∩ E_n)`.
//! Every mass is evaluated in closed form.

use std::fmt;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Half-open interval `[lo, hi)` inside `[0, ∞)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interval<T> {
    pub lo: T,
    pub hi: T,
}

impl<T: Scalar> Interval<T> {
    pub fn new(lo: T, hi: T) -> Result<Self> {
        if !lo.is_finite() || !hi.is_finite() {
            return Err(Error::Domain(format!("unbounded interval [{lo}, {hi})")));
        }
        if lo < T::zero() {
            return Err(Error::Domain(format!(
                "interval [{lo}, {hi}) leaves the half-line"
            )));
        }
        if hi < lo {
            return Err(Error::Domain(format!("reversed interval [{lo}, {hi})")));
        }
        Ok(Self { lo, hi })
    }

    pub fn contains(&self, x: T) -> bool {
        self.lo <= x && x < self.hi
    }

    pub fn overlaps(&self, other: &Self) -> bool {
        self.lo < other.hi && other.lo < self.hi
    }

    pub fn intersect(&self, other: &Self) -> Option<Self> {
        let lo = self.lo.max(other.lo);
        let hi = self.hi.min(other.hi);
        (lo < hi).then_some(Self { lo, hi })
    }

    pub fn is_subset_of(&self, other: &Self) -> bool {
        other.lo <= self.lo && self.hi <= other.hi
    }
}

impl<T: Scalar> fmt::Display for Interval<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {})", self.lo, self.hi)
    }
}

/// Rejects overlapping intervals. Touching endpoints are allowed.
pub fn check_disjoint<T: Scalar>(cells: &[Interval<T>]) -> Result<()> {
    let mut sorted: Vec<&Interval<T>> = cells.iter().filter(|c| c.lo < c.hi).collect();
    sorted.sort_by(|a, b| a.lo.partial_cmp(&b.lo).expect("finite endpoints"));
    for pair in sorted.windows(2) {
        if pair[0].overlaps(pair[1]) {
            return Err(Error::Validation(format!(
                "intervals {} and {} overlap",
                pair[0], pair[1]
            )));
        }
    }
    Ok(())
}

/// Control measure `μ` on `[0, ∞)` with a piecewise-constant density.
///
/// `values[0]` applies on `[0, breakpoints[0])`, `values[i]` on
/// `[breakpoints[i-1], breakpoints[i])` and the last value on
/// `[breakpoints.last(), ∞)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ControlMeasure<T> {
    breakpoints: Vec<T>,
    values: Vec<T>,
}

impl<T: Scalar> ControlMeasure<T> {
    pub fn new(breakpoints: Vec<T>, values: Vec<T>) -> Result<Self> {
        if values.len() != breakpoints.len() + 1 {
            return Err(Error::Validation(format!(
                "density needs {} values for {} breakpoints, got {}",
                breakpoints.len() + 1,
                breakpoints.len(),
                values.len()
            )));
        }
        let mut prev = T::zero();
        for &b in &breakpoints {
            if !b.is_finite() || b <= prev {
                return Err(Error::Validation(format!(
                    "breakpoints must be finite, positive and strictly increasing (got {b} after {prev})"
                )));
            }
            prev = b;
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite() || **v < T::zero()) {
            return Err(Error::Validation(format!(
                "density values must be finite and nonnegative, got {v}"
            )));
        }
        if *values.last().expect("nonempty") <= T::zero() {
            return Err(Error::Validation(
                "final density piece must be strictly positive so that μ(E) = ∞".into(),
            ));
        }
        Ok(Self {
            breakpoints,
            values,
        })
    }

    /// Lebesgue measure.
    pub fn lebesgue() -> Self {
        Self {
            breakpoints: Vec::new(),
            values: vec![T::one()],
        }
    }

    pub fn breakpoints(&self) -> &[T] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    fn piece(&self, i: usize) -> (T, T) {
        let lo = if i == 0 {
            T::zero()
        } else {
            self.breakpoints[i - 1]
        };
        let hi = self.breakpoints.get(i).copied().unwrap_or_else(T::infinity);
        (lo, hi)
    }

    pub fn density_at(&self, x: T) -> T {
        let i = self.breakpoints.partition_point(|&b| b <= x);
        self.values[i]
    }

    /// `μ([lo, hi))` for a single bounded interval.
    pub fn interval_mass(&self, iv: &Interval<T>) -> T {
        let mut total = T::zero();
        for (i, &v) in self.values.iter().enumerate() {
            let (plo, phi) = self.piece(i);
            if plo >= iv.hi {
                break;
            }
            let lo = iv.lo.max(plo);
            let hi = iv.hi.min(phi);
            if hi > lo {
                total = total + v * (hi - lo);
            }
        }
        total
    }

    /// Mass of a finite union of pairwise disjoint bounded intervals.
    pub fn mass(&self, cells: &[Interval<T>]) -> Result<T> {
        check_disjoint(cells)?;
        Ok(cells
            .iter()
            .fold(T::zero(), |acc, c| acc + self.interval_mass(c)))
    }

    /// Smallest `x` with `μ([0, x)) = m`.
    pub fn inverse_cumulative(&self, m: T) -> T {
        let mut remaining = m.max(T::zero());
        for (i, &v) in self.values.iter().enumerate() {
            let (plo, phi) = self.piece(i);
            if v <= T::zero() {
                continue;
            }
            let piece_mass = v * (phi - plo);
            if remaining <= piece_mass || !phi.is_finite() {
                return plo + remaining / v;
            }
            remaining = remaining - piece_mass;
        }
        unreachable!("last density piece is positive and unbounded")
    }
}

/// Rule for the right endpoint `e(n)` of the window `E_n = [0, e(n)]`.
#[derive(Clone, Debug, PartialEq)]
pub enum Window<T> {
    /// `e(n) = n^alpha`.
    Power { alpha: T },
    /// `e(n) = ln(1 + n)`.
    Log,
    /// `e(n) = table[n - 1]`.
    Table(Vec<T>),
}

impl<T: Scalar> Window<T> {
    pub fn right_end(&self, n: u64) -> Result<T> {
        if n < 1 {
            return Err(Error::Domain("sample size n must be at least 1".into()));
        }
        let end = match self {
            Window::Power { alpha } => T::from_count(n).powf(*alpha),
            Window::Log => T::from_count(n).ln_1p(),
            Window::Table(table) => *table.get((n - 1) as usize).ok_or_else(|| {
                Error::Domain(format!(
                    "table window has {} entries, undefined at n = {n}",
                    table.len()
                ))
            })?,
        };
        if !end.is_finite() || end < T::zero() {
            return Err(Error::Domain(format!(
                "window end e({n}) = {end} is invalid"
            )));
        }
        Ok(end)
    }
}

/// Which measure a mass is taken under.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Measure {
    /// The control measure `μ`.
    Control,
    /// `μ_n = μ(· ∩ E_n)`.
    Truncated(u64),
    /// The sampling distribution `P_n`.
    Sampling(u64),
}

/// The triangular-array model.
#[derive(Clone, Debug, PartialEq)]
pub struct Schedule<T> {
    control: ControlMeasure<T>,
    window: Window<T>,
}

impl<T: Scalar> Schedule<T> {
    pub fn new(control: ControlMeasure<T>, window: Window<T>) -> Result<Self> {
        if let Window::Power { alpha } = window {
            if !(alpha > T::zero()) || !alpha.is_finite() {
                return Err(Error::Validation(format!(
                    "power window needs alpha > 0, got {alpha}"
                )));
            }
        }
        Ok(Self { control, window })
    }

    /// Lebesgue measure with `E_n = [0, √n]`, so that `a_n = √n`.
    pub fn sqrt_window() -> Self {
        Self {
            control: ControlMeasure::lebesgue(),
            window: Window::Power { alpha: T::lit(0.5) },
        }
    }

    pub fn control(&self) -> &ControlMeasure<T> {
        &self.control
    }

    pub fn window(&self) -> &Window<T> {
        &self.window
    }

    pub fn window_interval(&self, n: u64) -> Result<Interval<T>> {
        Ok(Interval {
            lo: T::zero(),
            hi: self.window.right_end(n)?,
        })
    }

    /// `μ(E_n)`, which also equals `n / a_n`.
    pub fn window_mass(&self, n: u64) -> Result<T> {
        Ok(self.control.interval_mass(&self.window_interval(n)?))
    }

    fn positive_window_mass(&self, n: u64) -> Result<T> {
        let m = self.window_mass(n)?;
        if m <= T::zero() {
            return Err(Error::Domain(format!("μ(E_{n}) = 0")));
        }
        Ok(m)
    }

    /// `a_n = n / μ(E_n)`.
    pub fn a_n(&self, n: u64) -> Result<T> {
        Ok(T::from_count(n) / self.positive_window_mass(n)?)
    }

    /// `n / a_n`.
    pub fn scale(&self, n: u64) -> Result<T> {
        self.positive_window_mass(n)
    }

    /// Mass of one interval under `measure`, without a disjointness check.
    pub fn interval_mass(&self, measure: Measure, iv: &Interval<T>) -> Result<T> {
        match measure {
            Measure::Control => Ok(self.control.interval_mass(iv)),
            Measure::Truncated(n) => {
                let window = self.window_interval(n)?;
                Ok(iv
                    .intersect(&window)
                    .map_or(T::zero(), |c| self.control.interval_mass(&c)))
            }
            Measure::Sampling(n) => {
                let total = self.positive_window_mass(n)?;
                Ok(self.interval_mass(Measure::Truncated(n), iv)? / total)
            }
        }
    }

    pub fn mass(&self, measure: Measure, cells: &[Interval<T>]) -> Result<T> {
        check_disjoint(cells)?;
        cells.iter().try_fold(
            T::zero(),
            |acc, c| Ok(acc + self.interval_mass(measure, c)?),
        )
    }

    pub fn mu_mass(&self, cells: &[Interval<T>]) -> Result<T> {
        self.mass(Measure::Control, cells)
    }

    pub fn p_n(&self, cells: &[Interval<T>], n: u64) -> Result<T> {
        self.mass(Measure::Sampling(n), cells)
    }

    pub fn mu_n_mass(&self, cells: &[Interval<T>], n: u64) -> Result<T> {
        self.mass(Measure::Truncated(n), cells)
    }

    /// Checks the finite-grid surrogates of the model assumptions.
    ///
    /// `a_n → ∞` and `a_n = o(n)` are asymptotic; over the grid they are
    /// checked as "a_n strictly increasing" and "a_n / n strictly decreasing".
    pub fn validate(&self, n_grid: &[u64]) -> ScheduleReport {
        let mut report = ScheduleReport::default();
        if n_grid.is_empty() || n_grid.windows(2).any(|w| w[0] >= w[1]) || n_grid[0] == 0 {
            report.push(
                "n-grid",
                false,
                "grid must be nonempty, strictly increasing and start at n >= 1".into(),
            );
            return report;
        }

        let mut nested = Vec::new();
        let mut pairs: Vec<(u64, u64)> = n_grid.iter().map(|&n| (n, n + 1)).collect();
        pairs.extend(n_grid.windows(2).map(|w| (w[0], w[1])));
        for (lo, hi) in pairs {
            match (self.window.right_end(lo), self.window.right_end(hi)) {
                (Ok(a), Ok(b)) if a > b => nested.push(format!("e({lo}) = {a} > e({hi}) = {b}")),
                (Err(e), _) => nested.push(e.to_string()),
                // e(n+1) past the end of a table is not an error
                _ => {}
            }
        }
        report.push("nestedness", nested.is_empty(), nested.join("; "));

        let masses: Vec<Result<T>> = n_grid.iter().map(|&n| self.window_mass(n)).collect();
        let positive: Vec<String> = n_grid
            .iter()
            .zip(&masses)
            .filter_map(|(n, m)| match m {
                Ok(m) if *m > T::zero() => None,
                Ok(m) => Some(format!("μ(E_{n}) = {m}")),
                Err(e) => Some(e.to_string()),
            })
            .collect();
        report.push(
            "window mass positive",
            positive.is_empty(),
            positive.join("; "),
        );

        let a: Vec<Option<T>> = n_grid.iter().map(|&n| self.a_n(n).ok()).collect();
        let mut increasing = Vec::new();
        let mut sublinear = Vec::new();
        for i in 1..n_grid.len() {
            let (n0, n1) = (n_grid[i - 1], n_grid[i]);
            match (a[i - 1], a[i]) {
                (Some(a0), Some(a1)) => {
                    if a1 <= a0 {
                        increasing.push(format!("a_{n0} = {a0} >= a_{n1} = {a1}"));
                    }
                    let r0 = a0 / T::from_count(n0);
                    let r1 = a1 / T::from_count(n1);
                    if r1 >= r0 {
                        sublinear.push(format!("a_{n0}/{n0} = {r0} <= a_{n1}/{n1} = {r1}"));
                    }
                }
                _ => increasing.push(format!("a_n undefined near n = {n1}")),
            }
        }
        report.push(
            "a_n increasing",
            increasing.is_empty(),
            increasing.join("; "),
        );
        report.push(
            "a_n/n decreasing",
            sublinear.is_empty(),
            sublinear.join("; "),
        );

        let mut monotone = Vec::new();
        for probe in probe_family::<T>() {
            let full = self.control.interval_mass(&probe);
            let mut prev: Option<(u64, T)> = None;
            for &n in n_grid {
                let Ok(cur) = self.interval_mass(Measure::Truncated(n), &probe) else {
                    continue;
                };
                if cur > full * (T::one() + T::lit(1e-12)) {
                    monotone.push(format!("μ_{n}({probe}) = {cur} > μ({probe}) = {full}"));
                }
                if let Some((pn, pv)) = prev {
                    if cur < pv {
                        monotone.push(format!("μ_{n}({probe}) = {cur} < μ_{pn}({probe}) = {pv}"));
                    }
                }
                prev = Some((n, cur));
            }
        }
        report.push("μ_n monotone", monotone.is_empty(), monotone.join("; "));
        report
    }
}

fn probe_family<T: Scalar>() -> Vec<Interval<T>> {
    [
        (0.0, 0.5),
        (0.0, 1.0),
        (1.0, 2.0),
        (2.0, 5.0),
        (0.0, 10.0),
        (10.0, 100.0),
    ]
    .iter()
    .map(|&(lo, hi)| Interval {
        lo: T::lit(lo),
        hi: T::lit(hi),
    })
    .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScheduleCheck {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ScheduleReport {
    pub checks: Vec<ScheduleCheck>,
}

impl ScheduleReport {
    fn push(&mut self, name: &'static str, pass: bool, detail: String) {
        self.checks.push(ScheduleCheck { name, pass, detail });
    }

    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failed(&self) -> impl Iterator<Item = &ScheduleCheck> {
        self.checks.iter().filter(|c| !c.pass)
    }
}
