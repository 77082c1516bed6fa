//! Diagram calculus for products of multiple empirical integrals.
//!
//! A diagram pairs some vertices of a row of `k1` vertices with vertices of a
//! second row of `k2`; a coloring marks the edges whose identified variable
//! is integrated out. Counts are exact integers; reals appear only when a
//! measure is evaluated.

use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, OnceLock, RwLock};

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::integrands::{factorial_f, CellwiseFunction, Tuple, DEFAULT_BUDGET};
use crate::model::{Measure, Schedule};
use crate::scalar::Scalar;

/// Largest `k` for which [`b_coeff`] is evaluated.
pub const MAX_B_ORDER: usize = 20;

/// Partial matching between the rows. Edges are `(i, j)` with `i < k1` a
/// first-row vertex and `j < k2` a second-row vertex, sorted by `i`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Diagram {
    k1: usize,
    k2: usize,
    edges: Vec<(usize, usize)>,
}

impl Diagram {
    pub fn new(k1: usize, k2: usize, mut edges: Vec<(usize, usize)>) -> Result<Self> {
        edges.sort_unstable();
        for (s, &(i, j)) in edges.iter().enumerate() {
            if i >= k1 || j >= k2 {
                return Err(Error::Domain(format!(
                    "edge ({i}, {j}) outside rows of sizes {k1} and {k2}"
                )));
            }
            if edges[s + 1..].iter().any(|&(a, b)| a == i || b == j) {
                return Err(Error::Domain(format!(
                    "vertex of edge ({i}, {j}) appears in two edges"
                )));
            }
        }
        Ok(Self { k1, k2, edges })
    }

    pub fn rows(&self) -> (usize, usize) {
        (self.k1, self.k2)
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Edges in 1-based numbering with the second row as `k1+1..=k1+k2`.
    pub fn numbered_edges(&self) -> Vec<(usize, usize)> {
        self.edges
            .iter()
            .map(|&(i, j)| (i + 1, self.k1 + j + 1))
            .collect()
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ColoredDiagram {
    diagram: Diagram,
    colored: Vec<bool>,
}

impl ColoredDiagram {
    pub fn new(diagram: Diagram, colored: Vec<bool>) -> Result<Self> {
        if colored.len() != diagram.len() {
            return Err(Error::Domain(format!(
                "{} color flags for {} edges",
                colored.len(),
                diagram.len()
            )));
        }
        Ok(Self { diagram, colored })
    }

    pub fn diagram(&self) -> &Diagram {
        &self.diagram
    }

    pub fn colored(&self) -> &[bool] {
        &self.colored
    }

    pub fn colored_count(&self) -> usize {
        self.colored.iter().filter(|&&c| c).count()
    }
}

fn factorial_big(k: usize) -> BigUint {
    (1..=k as u64).fold(BigUint::one(), |acc, i| acc * i)
}

fn to_u128(x: BigUint) -> Result<u128> {
    x.to_u128()
        .ok_or_else(|| Error::Budget("count exceeds 128-bit range".into()))
}

fn check_lp(k1: usize, k2: usize, l: usize, p: Option<usize>) -> Result<()> {
    if l > k1.min(k2) {
        return Err(Error::Domain(format!(
            "l = {l} exceeds min(k1, k2) = {}",
            k1.min(k2)
        )));
    }
    if let Some(p) = p {
        if p > l {
            return Err(Error::Domain(format!("p = {p} exceeds l = {l}")));
        }
    }
    Ok(())
}

/// `|B(l)| = k1! k2! / ((k1-l)! (k2-l)! l!)`.
pub fn diagram_count(k1: usize, k2: usize, l: usize) -> Result<u128> {
    check_lp(k1, k2, l, None)?;
    to_u128(
        factorial_big(k1) * factorial_big(k2)
            / (factorial_big(k1 - l) * factorial_big(k2 - l) * factorial_big(l)),
    )
}

/// `|B(l, p)| = k1! k2! / ((k1-l)! (k2-l)! (l-p)! p!)`.
pub fn colored_diagram_count(k1: usize, k2: usize, l: usize, p: usize) -> Result<u128> {
    check_lp(k1, k2, l, Some(p))?;
    to_u128(
        factorial_big(k1) * factorial_big(k2)
            / (factorial_big(k1 - l)
                * factorial_big(k2 - l)
                * factorial_big(l - p)
                * factorial_big(p)),
    )
}

type CacheKey = (usize, usize, usize, usize);

fn colored_cache() -> &'static RwLock<HashMap<CacheKey, Arc<Vec<ColoredDiagram>>>> {
    static CACHE: OnceLock<RwLock<HashMap<CacheKey, Arc<Vec<ColoredDiagram>>>>> = OnceLock::new();
    CACHE.get_or_init(Default::default)
}

/// All diagrams with exactly `l` edges, in canonical order.
pub fn enumerate_diagrams(k1: usize, k2: usize, l: usize) -> Result<Vec<Diagram>> {
    check_lp(k1, k2, l, None)?;
    let mut out = Vec::new();
    let mut firsts = Vec::with_capacity(l);
    choose_firsts(k1, l, 0, &mut firsts, &mut |firsts| {
        let mut seconds = Vec::with_capacity(l);
        let mut used = vec![false; k2];
        assign_seconds(k2, l, &mut seconds, &mut used, &mut |seconds| {
            let edges = firsts
                .iter()
                .copied()
                .zip(seconds.iter().copied())
                .collect();
            out.push(Diagram { k1, k2, edges });
        });
    });
    Ok(out)
}

fn choose_firsts(
    k1: usize,
    l: usize,
    start: usize,
    current: &mut Vec<usize>,
    visit: &mut dyn FnMut(&[usize]),
) {
    if current.len() == l {
        visit(current);
        return;
    }
    for i in start..k1 {
        current.push(i);
        choose_firsts(k1, l, i + 1, current, visit);
        current.pop();
    }
}

fn assign_seconds(
    k2: usize,
    l: usize,
    current: &mut Vec<usize>,
    used: &mut [bool],
    visit: &mut dyn FnMut(&[usize]),
) {
    if current.len() == l {
        visit(current);
        return;
    }
    for j in 0..k2 {
        if !used[j] {
            used[j] = true;
            current.push(j);
            assign_seconds(k2, l, current, used, visit);
            current.pop();
            used[j] = false;
        }
    }
}

/// All colored diagrams with `l` edges of which `p` are colored. Cached.
pub fn enumerate_colored(
    k1: usize,
    k2: usize,
    l: usize,
    p: usize,
) -> Result<Arc<Vec<ColoredDiagram>>> {
    check_lp(k1, k2, l, Some(p))?;
    let key = (k1, k2, l, p);
    if let Some(hit) = colored_cache().read().expect("cache lock").get(&key) {
        return Ok(Arc::clone(hit));
    }
    let mut out = Vec::new();
    for diagram in enumerate_diagrams(k1, k2, l)? {
        let mut chosen = Vec::with_capacity(p);
        choose_firsts(l, p, 0, &mut chosen, &mut |chosen| {
            let mut colored = vec![false; l];
            for &s in chosen {
                colored[s] = true;
            }
            out.push(ColoredDiagram {
                diagram: diagram.clone(),
                colored,
            });
        });
    }
    let out = Arc::new(out);
    colored_cache()
        .write()
        .expect("cache lock")
        .entry(key)
        .or_insert_with(|| Arc::clone(&out));
    Ok(out)
}

fn check_rows<T: Scalar>(
    f: &CellwiseFunction<T>,
    g: &CellwiseFunction<T>,
    d: &Diagram,
) -> Result<()> {
    if f.order() != d.k1 {
        return Err(Error::OrderMismatch {
            left: f.order(),
            right: d.k1,
        });
    }
    if g.order() != d.k2 {
        return Err(Error::OrderMismatch {
            left: g.order(),
            right: d.k2,
        });
    }
    Ok(())
}

/// Identifies paired slots and integrates the colored ones against `masses`.
fn contract_generic<T: Scalar>(
    f: &CellwiseFunction<T>,
    g: &CellwiseFunction<T>,
    d: &Diagram,
    colored: &[bool],
    masses: &[T],
) -> BTreeMap<Tuple, T> {
    let (k1, k2) = (d.k1, d.k2);
    // partner of each first-row slot, and whether it is integrated
    let mut partner: Vec<Option<(usize, bool)>> = vec![None; k1];
    let mut matched_second = vec![false; k2];
    for (s, &(i, j)) in d.edges.iter().enumerate() {
        partner[i] = Some((j, colored.get(s).copied().unwrap_or(false)));
        matched_second[j] = true;
    }
    let mut out: BTreeMap<Tuple, T> = BTreeMap::new();
    let mut tuple = Vec::with_capacity(k1 + k2);
    for (tf, cf) in f.coeffs() {
        'pairs: for (tg, cg) in g.coeffs() {
            let mut value = cf * cg;
            tuple.clear();
            for i in 0..k1 {
                match partner[i] {
                    Some((j, integrate)) => {
                        if tf[i] != tg[j] {
                            continue 'pairs;
                        }
                        if integrate {
                            value = value * masses[tf[i]];
                        } else {
                            tuple.push(tf[i]);
                        }
                    }
                    None => tuple.push(tf[i]),
                }
            }
            for j in 0..k2 {
                if !matched_second[j] {
                    tuple.push(tg[j]);
                }
            }
            let slot = out.entry(tuple.clone()).or_insert_with(T::zero);
            *slot = *slot + value;
        }
    }
    out
}

fn guard_pairs<T: Scalar>(f: &CellwiseFunction<T>, g: &CellwiseFunction<T>) -> Result<()> {
    if f.nnz().saturating_mul(g.nnz()) > DEFAULT_BUDGET {
        return Err(Error::Budget(format!(
            "contraction of {} and {} coefficients",
            f.nnz(),
            g.nnz()
        )));
    }
    Ok(())
}

/// `(f ⊗ g)_{B(N)}`: sets `x_i = y_j` for each edge. Variables are ordered
/// as `f`'s slots followed by `g`'s unmatched slots.
pub fn contract<T: Scalar>(
    f: &CellwiseFunction<T>,
    g: &CellwiseFunction<T>,
    diagram: &Diagram,
) -> Result<CellwiseFunction<T>> {
    check_rows(f, g, diagram)?;
    let (f, g) = f.on_common_grid(g)?;
    guard_pairs(&f, &g)?;
    let coeffs = contract_generic(&f, &g, diagram, &[], &[]);
    CellwiseFunction::new(
        diagram.k1 + diagram.k2 - diagram.len(),
        f.grid().clone(),
        coeffs,
    )
}

/// `(f ⊗ g)_{B(N, N₁)}`: contraction with the colored variables integrated
/// against `measure`.
pub fn contract_integrated<T: Scalar>(
    f: &CellwiseFunction<T>,
    g: &CellwiseFunction<T>,
    colored: &ColoredDiagram,
    schedule: &Schedule<T>,
    measure: Measure,
) -> Result<CellwiseFunction<T>> {
    let d = &colored.diagram;
    check_rows(f, g, d)?;
    let (f, g) = f.on_common_grid(g)?;
    guard_pairs(&f, &g)?;
    let masses = f.grid().masses(schedule, measure)?;
    let coeffs = contract_generic(&f, &g, d, &colored.colored, &masses);
    CellwiseFunction::new(
        d.k1 + d.k2 - d.len() - colored.colored_count(),
        f.grid().clone(),
        coeffs,
    )
}

/// `\overline{(f ⊗ g)}_{B(l,p)}`: average over all colored diagrams of the
/// contractions integrated against `P_n`.
pub fn averaged_contraction<T: Scalar>(
    f: &CellwiseFunction<T>,
    g: &CellwiseFunction<T>,
    l: usize,
    p: usize,
    schedule: &Schedule<T>,
    n: u64,
) -> Result<CellwiseFunction<T>> {
    let (k1, k2) = (f.order(), g.order());
    let diagrams = enumerate_colored(k1, k2, l, p)?;
    let (f, g) = f.on_common_grid(g)?;
    guard_pairs(&f, &g)?;
    let masses = f.grid().masses(schedule, Measure::Sampling(n))?;
    let mut total: BTreeMap<Tuple, T> = BTreeMap::new();
    for cd in diagrams.iter() {
        for (t, v) in contract_generic(&f, &g, &cd.diagram, &cd.colored, &masses) {
            let slot = total.entry(t).or_insert_with(T::zero);
            *slot = *slot + v;
        }
    }
    let count = T::from_u128(diagrams.len() as u128).expect("count fits scalar");
    CellwiseFunction::new(
        k1 + k2 - l - p,
        f.grid().clone(),
        total.into_iter().map(|(t, v)| (t, v / count)),
    )
}

/// Number of partitions of `{1..k}`, `k = Σ r_j`, into blocks of sizes
/// `r_1, …, r_s`: `k! / (Π r_j! · Π_t m_t!)` with `m_t` the multiplicity of
/// block size `t`.
pub fn set_partition_count(sizes: &[usize]) -> Result<u128> {
    to_u128(set_partition_count_big(sizes)?)
}

fn set_partition_count_big(sizes: &[usize]) -> Result<BigUint> {
    if sizes.is_empty() || sizes.contains(&0) {
        return Err(Error::Domain(format!(
            "block sizes must be a nonempty list of positive integers, got {sizes:?}"
        )));
    }
    let k: usize = sizes.iter().sum();
    let mut denom = BigUint::one();
    let mut mult: BTreeMap<usize, usize> = BTreeMap::new();
    for &r in sizes {
        denom *= factorial_big(r);
        *mult.entry(r).or_default() += 1;
    }
    for &m in mult.values() {
        denom *= factorial_big(m);
    }
    Ok(factorial_big(k) / denom)
}

/// Integer partitions of `k` into parts `>= min_part`, non-increasing.
fn integer_partitions(k: usize, min_part: usize) -> Vec<Vec<usize>> {
    fn go(rest: usize, max: usize, min: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if rest == 0 {
            out.push(cur.clone());
            return;
        }
        for r in (min..=max.min(rest)).rev() {
            cur.push(r);
            go(rest - r, r, min, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(k, k, min_part, &mut Vec::new(), &mut out);
    out
}

fn falling_factorial_big(n: u64, s: usize) -> BigInt {
    (0..s as u64).fold(BigInt::one(), |acc, i| {
        if i >= n {
            BigInt::zero()
        } else {
            acc * (n - i)
        }
    })
}

/// Integer part of the mean coefficient:
/// `Σ_s (-1)^{k-s} (n)_s Σ_{sizes} Π (r_j - 1) · #partitions(sizes)`,
/// summing once per set partition. Blocks of size one contribute zero and
/// are never enumerated.
pub fn b_coeff_numerator(n: u64, k: usize) -> Result<BigInt> {
    if n < 1 {
        return Err(Error::Domain("n must be at least 1".into()));
    }
    if k > MAX_B_ORDER {
        return Err(Error::Budget(format!(
            "k = {k} exceeds {MAX_B_ORDER} for exact coefficient accumulation"
        )));
    }
    if k == 0 {
        return Ok(BigInt::one());
    }
    let mut total = BigInt::zero();
    for sizes in integer_partitions(k, 2) {
        let s = sizes.len();
        let weight: BigInt = sizes.iter().fold(BigInt::one(), |acc, &r| acc * (r - 1));
        let count = BigInt::from(set_partition_count_big(&sizes)?);
        let term = falling_factorial_big(n, s) * weight * count;
        if (k - s).is_multiple_of(2) {
            total += term;
        } else {
            total -= term;
        }
    }
    Ok(total)
}

/// `B_{n,k}` with `B_{n,0} = 1`, so that
/// `E I_k^{(n)}(f) = k! B_{n,k} (n/a_n)^{k/2} P_n^k(f)`.
pub fn b_coeff<T: Scalar>(n: u64, k: usize) -> Result<T> {
    let numerator = b_coeff_numerator(n, k)?;
    if k == 0 {
        return Ok(T::one());
    }
    // k! n^{k/2} = k! n^{⌊k/2⌋} √n^{k mod 2}
    let denom = BigInt::from(factorial_big(k)) * BigInt::from(n).pow((k / 2) as u32);
    let ratio = BigRational::new(numerator, denom)
        .to_f64()
        .ok_or_else(|| Error::Budget("coefficient not representable".into()))?;
    let mut value = T::lit(ratio);
    if k % 2 == 1 {
        value = value / T::from_count(n).sqrt();
    }
    Ok(value)
}

/// `E I_k^{(n)}(f) = k! B_{n,k} (n/a_n)^{k/2} P_n^k(f)`.
pub fn exact_mean<T: Scalar>(f: &CellwiseFunction<T>, schedule: &Schedule<T>, n: u64) -> Result<T> {
    let k = f.order();
    if k == 0 {
        return Ok(f.coeff(&[]));
    }
    let b: T = b_coeff(n, k)?;
    let scale = schedule.scale(n)?;
    Ok(factorial_f::<T>(k)
        * b
        * scale.powf(T::lit(k as f64 / 2.0))
        * f.integral(schedule, Measure::Sampling(n))?)
}

/// `F_l^{(n)}(f, g) = (n/a_n)^{(k1+k2)/2} P_n^{k1+k2-l-p}(\overline{(f⊗g)}_{B(l,p)})`
/// for a chosen `p`. Every `p` in `0..=l` gives the same value.
pub fn f_bilinear_with<T: Scalar>(
    f: &CellwiseFunction<T>,
    g: &CellwiseFunction<T>,
    l: usize,
    p: usize,
    schedule: &Schedule<T>,
    n: u64,
) -> Result<T> {
    let avg = averaged_contraction(f, g, l, p, schedule, n)?;
    let scale = schedule.scale(n)?;
    let half = T::lit((f.order() + g.order()) as f64 / 2.0);
    Ok(scale.powf(half) * avg.integral(schedule, Measure::Sampling(n))?)
}

/// `F_l^{(n)}(f, g)`, evaluated with all edges integrated.
pub fn f_bilinear<T: Scalar>(
    f: &CellwiseFunction<T>,
    g: &CellwiseFunction<T>,
    l: usize,
    schedule: &Schedule<T>,
    n: u64,
) -> Result<T> {
    f_bilinear_with(f, g, l, l, schedule, n)
}

/// Limit of `F_l^{(n)}(f, g)` as `n → ∞`: zero unless `l = k1 = k2`, where
/// it is `⟨f̃, g̃⟩_{L²(μ^k)}` (the sum over all `k!` full diagrams tends to
/// `k! ⟨f̃, g̃⟩`).
pub fn f_bilinear_limit<T: Scalar>(
    f: &CellwiseFunction<T>,
    g: &CellwiseFunction<T>,
    l: usize,
    schedule: &Schedule<T>,
) -> Result<T> {
    check_lp(f.order(), g.order(), l, None)?;
    if f.order() == g.order() && l == f.order() {
        f.symmetric_inner(g, schedule, Measure::Control)
    } else {
        Ok(T::zero())
    }
}

/// One `(l, p)` term of the product expansion
/// `I(f) I(g) = Σ_{l,p} coefficient · count · I(contraction)`.
#[derive(Clone, Debug)]
pub struct DiagramTerm<T> {
    pub l: usize,
    pub p: usize,
    pub count: u128,
    /// `(n/a_n)^{(l+p)/2} n^{-(l-p)/2}`.
    pub coefficient: T,
    pub contraction: CellwiseFunction<T>,
}

/// All terms of the product formula for `I_{k1}^{(n)}(f) I_{k2}^{(n)}(g)`.
pub fn diagram_terms<T: Scalar>(
    f: &CellwiseFunction<T>,
    g: &CellwiseFunction<T>,
    schedule: &Schedule<T>,
    n: u64,
) -> Result<Vec<DiagramTerm<T>>> {
    let (k1, k2) = (f.order(), g.order());
    if k1 == 0 || k2 == 0 {
        return Ok(vec![DiagramTerm {
            l: 0,
            p: 0,
            count: 1,
            coefficient: T::one(),
            contraction: f.tensor(g)?,
        }]);
    }
    let scale = schedule.scale(n)?;
    let nf = T::from_count(n);
    let mut terms = Vec::new();
    for l in 0..=k1.min(k2) {
        for p in 0..=l {
            let coefficient =
                scale.powf(T::lit((l + p) as f64 / 2.0)) * nf.powf(-T::lit((l - p) as f64 / 2.0));
            terms.push(DiagramTerm {
                l,
                p,
                count: colored_diagram_count(k1, k2, l, p)?,
                coefficient,
                contraction: averaged_contraction(f, g, l, p, schedule, n)?,
            });
        }
    }
    Ok(terms)
}

/// Exact `E[I_{k1}^{(n)}(f) I_{k2}^{(n)}(g)]` from the product formula and
/// the mean identity.
pub fn exact_cross_moment<T: Scalar>(
    f: &CellwiseFunction<T>,
    g: &CellwiseFunction<T>,
    schedule: &Schedule<T>,
    n: u64,
) -> Result<T> {
    let mut total = T::zero();
    for term in diagram_terms(f, g, schedule, n)? {
        let count = T::from_u128(term.count).expect("count fits scalar");
        total = total + term.coefficient * count * exact_mean(&term.contraction, schedule, n)?;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrands::Grid;
    use crate::model::Interval;

    fn grid2() -> Grid<f64> {
        Grid::from_breakpoints(&[0.0, 1.0, 2.0]).unwrap()
    }

    #[test]
    fn diagram_counts_examples() {
        assert_eq!(enumerate_diagrams(2, 2, 1).unwrap().len(), 4);
        assert_eq!(diagram_count(2, 2, 1).unwrap(), 4);
        assert_eq!(enumerate_diagrams(3, 2, 2).unwrap().len(), 6);
        assert_eq!(diagram_count(3, 2, 2).unwrap(), 6);
        for (k1, k2) in [(0, 0), (3, 1), (4, 4)] {
            let empty = enumerate_colored(k1, k2, 0, 0).unwrap();
            assert_eq!(empty.len(), 1);
            assert!(empty[0].diagram().is_empty());
        }
    }

    #[test]
    fn numbered_edges_follow_row_convention() {
        let d = enumerate_diagrams(2, 2, 1).unwrap();
        let edges: Vec<_> = d.iter().map(|d| d.numbered_edges()[0]).collect();
        assert_eq!(edges, vec![(1, 3), (1, 4), (2, 3), (2, 4)]);
    }

    #[test]
    fn out_of_range_is_domain_error() {
        assert!(matches!(enumerate_diagrams(2, 1, 2), Err(Error::Domain(_))));
        assert!(matches!(
            enumerate_colored(2, 2, 1, 2),
            Err(Error::Domain(_))
        ));
        assert!(Diagram::new(2, 2, vec![(0, 0), (1, 0)]).is_err());
    }

    #[test]
    fn contraction_examples() {
        let g = grid2();
        let f = CellwiseFunction::indicator(g.clone(), &[0, 1]).unwrap();
        let h = CellwiseFunction::indicator(g.clone(), &[0]).unwrap();
        let d = Diagram::new(2, 1, vec![(0, 0)]).unwrap();
        assert_eq!(contract(&f, &h, &d).unwrap(), f);

        let a = CellwiseFunction::indicator(g.clone(), &[0]).unwrap();
        let b = CellwiseFunction::indicator(g.clone(), &[1]).unwrap();
        let d = Diagram::new(1, 1, vec![(0, 0)]).unwrap();
        assert!(contract(&a, &b, &d).unwrap().is_zero());

        let empty = Diagram::new(1, 1, vec![]).unwrap();
        assert_eq!(contract(&a, &b, &empty).unwrap(), a.tensor(&b).unwrap());
    }

    #[test]
    fn worked_example_variable_order() {
        // k1 = 3, k2 = 2, N = {(1,4), (3,5)}: f(y1,y2,y3) g(y1,y3)
        let g = Grid::from_breakpoints(&[0.0, 1.0, 2.0, 3.0]).unwrap();
        let f = CellwiseFunction::new(3, g.clone(), [(vec![0, 1, 2], 2.0)]).unwrap();
        let h = CellwiseFunction::new(2, g.clone(), [(vec![0, 2], 3.0)]).unwrap();
        let d = Diagram::new(3, 2, vec![(0, 0), (2, 1)]).unwrap();
        let c = contract(&f, &h, &d).unwrap();
        assert_eq!(c.order(), 3);
        assert_eq!(c.coeff(&[0, 1, 2]), 6.0);

        // integrating the first edge: ∫ f(x,y1,y2) g(x,y2) P(dx)
        let s = Schedule::<f64>::sqrt_window();
        let cd = ColoredDiagram::new(d, vec![true, false]).unwrap();
        let ci = contract_integrated(&f, &h, &cd, &s, Measure::Control).unwrap();
        assert_eq!(ci.order(), 2);
        assert_eq!(ci.coeff(&[1, 2]), 6.0);
    }

    #[test]
    fn integrated_contraction_examples() {
        let s = Schedule::<f64>::sqrt_window();
        let g = Grid::from_breakpoints(&[0.0, 1.0]).unwrap();
        let f = CellwiseFunction::indicator(g.clone(), &[0]).unwrap();
        let d = Diagram::new(1, 1, vec![(0, 0)]).unwrap();
        let full = ColoredDiagram::new(d.clone(), vec![true]).unwrap();
        let pn = contract_integrated(&f, &f, &full, &s, Measure::Sampling(100)).unwrap();
        assert_eq!(pn.order(), 0);
        assert!((pn.coeff(&[]) - 0.1).abs() < 1e-15);
        let mu = contract_integrated(&f, &f, &full, &s, Measure::Control).unwrap();
        assert_eq!(mu.coeff(&[]), 1.0);
        let none = ColoredDiagram::new(d.clone(), vec![false]).unwrap();
        assert_eq!(
            contract_integrated(&f, &f, &none, &s, Measure::Sampling(100)).unwrap(),
            contract(&f, &f, &d).unwrap()
        );
    }

    #[test]
    fn averaged_contraction_examples() {
        let s = Schedule::<f64>::sqrt_window();
        let g = grid2();
        let f = CellwiseFunction::indicator(g.clone(), &[0]).unwrap();
        let h = CellwiseFunction::indicator(g.clone(), &[0, 1]).unwrap();
        assert_eq!(
            averaged_contraction(&f, &h, 0, 0, &s, 100).unwrap(),
            f.tensor(&h).unwrap()
        );
        assert_eq!(averaged_contraction(&f, &f, 1, 0, &s, 100).unwrap(), f);
        let c = averaged_contraction(&f, &f, 1, 1, &s, 100).unwrap();
        assert!((c.coeff(&[]) - 0.1).abs() < 1e-15);
    }

    #[test]
    fn partition_counts() {
        assert_eq!(set_partition_count(&[2, 1]).unwrap(), 3);
        assert_eq!(set_partition_count(&[5]).unwrap(), 1);
        assert_eq!(set_partition_count(&[2, 2]).unwrap(), 3);
        assert_eq!(set_partition_count(&[1, 1, 1]).unwrap(), 1);
        assert!(matches!(
            set_partition_count(&[2, 0]),
            Err(Error::Domain(_))
        ));
        assert!(matches!(set_partition_count(&[]), Err(Error::Domain(_))));
    }

    #[test]
    fn b_coeff_examples() {
        for n in [1, 2, 7, 100, 1_000_000] {
            assert_eq!(b_coeff::<f64>(n, 0).unwrap(), 1.0);
            assert_eq!(b_coeff::<f64>(n, 1).unwrap(), 0.0);
            assert_eq!(b_coeff::<f64>(n, 2).unwrap(), -0.5);
        }
        assert!((b_coeff::<f64>(100, 3).unwrap() - 1.0 / 30.0).abs() < 1e-14);
        assert!(matches!(b_coeff::<f64>(10, 21), Err(Error::Budget(_))));
        assert!(matches!(b_coeff::<f64>(0, 2), Err(Error::Domain(_))));
    }

    #[test]
    fn exact_mean_examples() {
        let s = Schedule::<f64>::sqrt_window();
        let g = Grid::from_breakpoints(&[0.0, 1.0]).unwrap();
        let f1 = CellwiseFunction::indicator(g.clone(), &[0]).unwrap();
        assert_eq!(exact_mean(&f1, &s, 10_000).unwrap(), 0.0);
        let f2 = CellwiseFunction::indicator(g.clone(), &[0, 0]).unwrap();
        assert!((exact_mean(&f2, &s, 10_000).unwrap() + 0.01).abs() < 1e-15);
        let c = CellwiseFunction::constant(g, 3.5);
        assert_eq!(exact_mean(&c, &s, 10).unwrap(), 3.5);
    }

    #[test]
    fn f_bilinear_examples() {
        let s = Schedule::<f64>::sqrt_window();
        let g = Grid::from_breakpoints(&[0.0, 1.0]).unwrap();
        let f = CellwiseFunction::indicator(g, &[0]).unwrap();
        for n in [1, 100, 10_000] {
            assert!((f_bilinear(&f, &f, 1, &s, n).unwrap() - 1.0).abs() < 1e-12);
        }
        assert!((f_bilinear(&f, &f, 0, &s, 10_000).unwrap() - 0.01).abs() < 1e-14);
    }

    #[test]
    fn f_limit_for_full_matching_is_inner_product_of_symmetrizations() {
        let s = Schedule::<f64>::sqrt_window();
        let f = CellwiseFunction::indicator(grid2(), &[0, 1]).unwrap();
        let lim = f_bilinear_limit(&f, &f, 2, &s).unwrap();
        assert!((lim - 0.5).abs() < 1e-15);
        // [0,2] ⊂ E_n once √n >= 2
        let v = f_bilinear(&f, &f, 2, &s, 10_000).unwrap();
        assert!((v - 0.5).abs() < 1e-12);
        assert_eq!(f_bilinear_limit(&f, &f, 1, &s).unwrap(), 0.0);
    }

    #[test]
    fn cross_moment_of_linear_statistics() {
        // Var W_n([0,1]) = 1 - n^{-1/2}, Cov(W_n([0,1]), W_n([1,2])) = -n^{-1/2}
        let s = Schedule::<f64>::sqrt_window();
        let a = CellwiseFunction::indicator(grid2(), &[0]).unwrap();
        let b = CellwiseFunction::indicator(grid2(), &[1]).unwrap();
        let n = 10_000;
        assert!((exact_cross_moment(&a, &a, &s, n).unwrap() - 0.99).abs() < 1e-13);
        assert!((exact_cross_moment(&a, &b, &s, n).unwrap() + 0.01).abs() < 1e-13);
    }

    #[test]
    fn product_box_contraction_uses_refined_grid() {
        let g = Grid::from_breakpoints(&[0.0, 0.5, 1.0]).unwrap();
        let f = CellwiseFunction::product_box(
            g,
            &[
                Interval::new(0.0, 1.0).unwrap(),
                Interval::new(0.0, 0.5).unwrap(),
            ],
            1.0,
        )
        .unwrap();
        assert_eq!(f.nnz(), 2);
    }
}
