//! The verification suites. Each check writes `results/<id>.csv` and returns
//! a pass/fail outcome with a one-line detail.
//!
//! Replicates run on the rayon pool and are collected in index order, so
//! every aggregate is independent of the number of workers.

use std::collections::BTreeMap;
use std::fs::File;
use std::path::PathBuf;

use empirical_chaos::{
    chaos_series, diagram_terms, draw_counts, empirical_integral, exact_cross_moment, exact_mean,
    f_bilinear, f_bilinear_limit, k_schedule, sample_gaussian_cells, truncated_chaos, CellCounts,
    CellwiseFunction, DiagramTerm, Grid, Interval, Measure, SeedInfo,
};
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{CheckSpec, RandomPairs, Resolved, TargetKind};
use crate::seeds::Stream;
use crate::stats::{ks_two_sample, shape_statistics, MomentEstimate};
use crate::{HarnessError, Result};

/// Result of one check as recorded in `summary.json`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckOutcome {
    pub pass: bool,
    pub detail: String,
}

impl CheckOutcome {
    fn from_failures(failures: Vec<String>, ok: String) -> Self {
        if failures.is_empty() {
            Self {
                pass: true,
                detail: ok,
            }
        } else {
            Self {
                pass: false,
                detail: failures.join("; "),
            }
        }
    }
}

/// Everything a check needs besides its own spec.
#[derive(Clone, Debug)]
pub struct RunContext<'a> {
    pub resolved: &'a Resolved,
    pub master_seed: u64,
    /// Overrides every replicate count in the config.
    pub replicates: Option<usize>,
    pub results_dir: PathBuf,
    pub dump_counts: bool,
    pub dump_gaussians: bool,
}

impl RunContext<'_> {
    fn replicates(&self, own: Option<usize>) -> usize {
        self.replicates
            .or(own)
            .unwrap_or(self.resolved.config.replicates)
    }

    fn n_grid<'b>(&'b self, own: &'b Option<Vec<u64>>) -> &'b [u64] {
        own.as_deref().unwrap_or(&self.resolved.config.n_grid)
    }

    fn stream(&self, id: &str, side: &str) -> Stream {
        Stream::new(self.master_seed, id, side)
    }

    fn writer(&self, name: &str) -> Result<csv::Writer<File>> {
        Ok(csv::Writer::from_path(self.results_dir.join(name))?)
    }

    fn draw(&self, stream: &Stream, r: u64, n: u64, grid: &Grid<f64>) -> Result<CellCounts<f64>> {
        let mut rng = stream.rng(r);
        Ok(
            draw_counts(&self.resolved.schedule, n, grid, &mut rng)?.with_seed_info(SeedInfo {
                master_seed: self.master_seed,
                replicate: r,
            }),
        )
    }

    /// Counts are not kept; the dump redraws them from their seeds.
    fn dump_counts(
        &self,
        id: &str,
        stream: &Stream,
        n: u64,
        grid: &Grid<f64>,
        reps: usize,
    ) -> Result<()> {
        if !self.dump_counts {
            return Ok(());
        }
        let mut w = self.writer(&format!("{id}_counts_n{n}.csv"))?;
        w.write_record(["replicate", "cell_index", "count"])?;
        for r in 0..reps as u64 {
            let counts = self.draw(stream, r, n, grid)?;
            for (i, c) in counts.counts().iter().enumerate() {
                w.write_record([r.to_string(), (i + 1).to_string(), c.to_string()])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Evaluates `f(r)` for `r = 0..reps` on the current pool, in index order.
fn replicates<T, F>(reps: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync + Send,
{
    (0..reps as u64).into_par_iter().map(f).collect()
}

fn num(x: f64) -> String {
    format!("{x}")
}

fn sci(xs: &[f64]) -> String {
    let parts: Vec<String> = xs.iter().map(|x| format!("{x:.3e}")).collect();
    format!("[{}]", parts.join(", "))
}

fn common_grid<'a>(fs: impl IntoIterator<Item = &'a CellwiseFunction<f64>>) -> Grid<f64> {
    let mut iter = fs.into_iter();
    let first = iter.next().expect("at least one integrand").grid().clone();
    iter.fold(first, |g, f| g.common_refinement(f.grid()))
}

fn refine_all(
    resolved: &Resolved,
    names: &[String],
    grid: &Grid<f64>,
) -> Result<BTreeMap<String, CellwiseFunction<f64>>> {
    names
        .iter()
        .map(|name| Ok((name.clone(), resolved.integrand(name).refine_to(grid)?)))
        .collect()
}

fn unique_names<'a>(names: impl IntoIterator<Item = &'a String>) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for name in names {
        if !out.contains(name) {
            out.push(name.clone());
        }
    }
    out
}

/// `lim E[I_{k1}(f) I_{k2}(g)]`: zero for unequal orders, else `k! ⟨f̃, g̃⟩`.
pub fn limit_cross_moment(
    f: &CellwiseFunction<f64>,
    g: &CellwiseFunction<f64>,
    resolved: &Resolved,
) -> Result<f64> {
    let (k1, k2) = (f.order(), g.order());
    if k1 != k2 {
        return Ok(0.0);
    }
    if k1 == 0 {
        return Ok(f.coeff(&[]) * g.coeff(&[]));
    }
    let (f, g) = f.on_common_grid(g)?;
    let inner = f.symmetric_inner(&g, &resolved.schedule, Measure::Control)?;
    let factorial: f64 = (1..=k1).map(|j| j as f64).product();
    Ok(factorial * inner)
}

const MOMENT_HEADER: [&str; 11] = [
    "check_id", "k1", "k2", "n", "R", "mean", "se", "target", "z", "f", "g",
];

pub fn run_check(ctx: &RunContext<'_>, spec: &CheckSpec) -> Result<CheckOutcome> {
    match spec {
        CheckSpec::CrossMoment {
            id,
            pairs,
            n_grid,
            replicates,
            target,
            tolerance,
        } => cross_moment(
            ctx,
            id,
            pairs,
            ctx.n_grid(n_grid),
            ctx.replicates(*replicates),
            *target,
            *tolerance,
        ),
        CheckSpec::Mean {
            id,
            integrands,
            n_grid,
            replicates,
        } => mean_formula(
            ctx,
            id,
            integrands,
            ctx.n_grid(n_grid),
            ctx.replicates(*replicates),
        ),
        CheckSpec::DiagramIdentity {
            id,
            pairs,
            random,
            n,
            realizations,
            tolerance,
        } => diagram_identity(
            ctx,
            id,
            pairs,
            random.as_ref(),
            *n,
            *realizations,
            *tolerance,
        ),
        CheckSpec::FLimits {
            id,
            f,
            g,
            l,
            n_grid,
        } => f_limit_sweep(ctx, id, f, g, l.as_deref(), ctx.n_grid(n_grid)),
        CheckSpec::Ks {
            id,
            chaos,
            n_grid,
            replicates,
            limit_order,
            p_min,
            require_decreasing,
        } => ks_convergence(
            ctx,
            id,
            chaos,
            ctx.n_grid(n_grid),
            ctx.replicates(*replicates),
            *limit_order,
            *p_min,
            *require_decreasing,
        ),
        CheckSpec::Gaussianity {
            id,
            interval,
            n_grid,
            replicates,
            z_max,
            min_n,
        } => gaussianity(
            ctx,
            id,
            *interval,
            ctx.n_grid(n_grid),
            ctx.replicates(*replicates),
            *z_max,
            *min_n,
        ),
    }
}

#[allow(clippy::too_many_arguments)]
fn moment_row(
    w: &mut csv::Writer<File>,
    id: &str,
    k1: usize,
    k2: usize,
    n: u64,
    est: &MomentEstimate,
    f: &str,
    g: &str,
) -> Result<()> {
    w.write_record([
        id.to_string(),
        k1.to_string(),
        k2.to_string(),
        n.to_string(),
        est.replicates.to_string(),
        num(est.mean),
        num(est.standard_error),
        est.target.map_or_else(String::new, num),
        est.z_score.map_or_else(String::new, num),
        f.to_string(),
        g.to_string(),
    ])?;
    Ok(())
}

/// Monte Carlo `E[I_{k1}(f) I_{k2}(g)]` for each pair, all pairs sharing
/// one realization per replicate.
fn cross_moment(
    ctx: &RunContext<'_>,
    id: &str,
    pairs: &[(String, String)],
    n_grid: &[u64],
    reps: usize,
    target: TargetKind,
    tolerance: f64,
) -> Result<CheckOutcome> {
    let resolved = ctx.resolved;
    let names = unique_names(pairs.iter().flat_map(|(f, g)| [f, g]));
    let grid = common_grid(names.iter().map(|n| resolved.integrand(n)));
    let fs = refine_all(resolved, &names, &grid)?;
    let index: Vec<(usize, usize)> = pairs
        .iter()
        .map(|(f, g)| {
            let at = |x: &String| names.iter().position(|n| n == x).expect("listed");
            (at(f), at(g))
        })
        .collect();
    let ordered: Vec<&CellwiseFunction<f64>> = names.iter().map(|n| &fs[n]).collect();
    let stream = ctx.stream(id, "empirical");

    let mut w = ctx.writer(&format!("{id}.csv"))?;
    w.write_record(MOMENT_HEADER)?;
    let mut history: Vec<Vec<MomentEstimate>> = vec![Vec::new(); pairs.len()];
    for &n in n_grid {
        let products = replicates(reps, |r| {
            let counts = ctx.draw(&stream, r, n, &grid)?;
            let values = ordered
                .iter()
                .map(|f| empirical_integral(f, &counts))
                .collect::<empirical_chaos::Result<Vec<f64>>>()?;
            Ok(index
                .iter()
                .map(|&(i, j)| values[i] * values[j])
                .collect::<Vec<f64>>())
        })?;
        ctx.dump_counts(id, &stream, n, &grid, reps)?;
        for (p, (f, g)) in pairs.iter().enumerate() {
            let (fp, gp) = (&fs[f], &fs[g]);
            let t = match target {
                TargetKind::Exact => exact_cross_moment(fp, gp, &resolved.schedule, n)?,
                TargetKind::Limit => limit_cross_moment(fp, gp, resolved)?,
            };
            let xs: Vec<f64> = products.iter().map(|v| v[p]).collect();
            let est = MomentEstimate::from_samples(&xs, Some(t))?;
            moment_row(&mut w, id, fp.order(), gp.order(), n, &est, f, g)?;
            history[p].push(est);
        }
    }
    w.flush()?;

    let mut failures = Vec::new();
    for ((f, g), ests) in pairs.iter().zip(&history) {
        match target {
            TargetKind::Exact => {
                for (n, e) in n_grid.iter().zip(ests) {
                    if !e.within(4.0) {
                        failures.push(format!(
                            "({f},{g}) n={n}: z={:.3}",
                            e.z_score.unwrap_or(f64::NAN)
                        ));
                    }
                }
            }
            TargetKind::Limit => {
                let gaps: Vec<f64> = ests
                    .iter()
                    .map(|e| (e.mean - e.target.unwrap_or(0.0)).abs())
                    .collect();
                if gaps.windows(2).any(|w| w[1] >= w[0]) {
                    failures.push(format!(
                        "({f},{g}) |mean-limit| not decreasing: {}",
                        sci(&gaps)
                    ));
                }
                let last = ests.last().expect("nonempty n_grid");
                let band = (4.0 * last.standard_error).max(tolerance);
                if gaps[gaps.len() - 1] > band {
                    failures.push(format!(
                        "({f},{g}) final |mean-limit| = {:.3e} > {band:.3e}",
                        gaps[gaps.len() - 1]
                    ));
                }
            }
        }
    }
    let ok = format!(
        "{} pairs x {} sample sizes, R = {reps}",
        pairs.len(),
        n_grid.len()
    );
    Ok(CheckOutcome::from_failures(failures, ok))
}

/// Monte Carlo `E I_k(f)` against the exact finite-`n` mean.
fn mean_formula(
    ctx: &RunContext<'_>,
    id: &str,
    integrands: &[String],
    n_grid: &[u64],
    reps: usize,
) -> Result<CheckOutcome> {
    let resolved = ctx.resolved;
    let names = unique_names(integrands);
    let grid = common_grid(names.iter().map(|n| resolved.integrand(n)));
    let fs = refine_all(resolved, &names, &grid)?;
    let ordered: Vec<&CellwiseFunction<f64>> = names.iter().map(|n| &fs[n]).collect();
    let stream = ctx.stream(id, "empirical");

    let mut w = ctx.writer(&format!("{id}.csv"))?;
    w.write_record(MOMENT_HEADER)?;
    let mut failures = Vec::new();
    for &n in n_grid {
        let values = replicates(reps, |r| {
            let counts = ctx.draw(&stream, r, n, &grid)?;
            Ok(ordered
                .iter()
                .map(|f| empirical_integral(f, &counts))
                .collect::<empirical_chaos::Result<Vec<f64>>>()?)
        })?;
        ctx.dump_counts(id, &stream, n, &grid, reps)?;
        for (i, name) in names.iter().enumerate() {
            let f = &fs[name];
            let xs: Vec<f64> = values.iter().map(|v| v[i]).collect();
            let est =
                MomentEstimate::from_samples(&xs, Some(exact_mean(f, &resolved.schedule, n)?))?;
            moment_row(&mut w, id, f.order(), 0, n, &est, name, "")?;
            if !est.within(4.0) {
                failures.push(format!(
                    "{name} n={n}: z={:.3}",
                    est.z_score.unwrap_or(f64::NAN)
                ));
            }
        }
    }
    w.flush()?;
    let ok = format!(
        "{} integrands x {} sample sizes, R = {reps}",
        names.len(),
        n_grid.len()
    );
    Ok(CheckOutcome::from_failures(failures, ok))
}

struct PairCase {
    label: String,
    f: CellwiseFunction<f64>,
    g: CellwiseFunction<f64>,
}

/// Random cellwise integrands on a shared random grid of `spec.cells` cells
/// inside `[0, min(e(n), spec.span)]`.
fn random_pairs(
    ctx: &RunContext<'_>,
    id: &str,
    spec: &RandomPairs,
    n: u64,
) -> Result<Vec<PairCase>> {
    let mut rng = ctx.stream(id, "integrands").rng(0);
    let right = ctx.resolved.schedule.window_interval(n)?.hi.min(spec.span);
    let mut inner: Vec<f64> = (1..spec.cells)
        .map(|_| rng.random_range(0.0..right))
        .collect();
    inner.sort_by(f64::total_cmp);
    let mut points = vec![0.0];
    points.extend(inner);
    points.push(right);
    points.dedup();
    let grid = Grid::from_breakpoints(&points)?;
    let mut random_f = |order: usize| -> Result<CellwiseFunction<f64>> {
        let terms = rng.random_range(1..=spec.max_terms);
        let entries: Vec<(Vec<usize>, f64)> = (0..terms)
            .map(|_| {
                let t = (0..order)
                    .map(|_| rng.random_range(0..grid.len()))
                    .collect();
                (t, rng.random_range(-2.0..2.0))
            })
            .collect();
        Ok(CellwiseFunction::new(order, grid.clone(), entries)?)
    };
    let mut out = Vec::new();
    for &(k1, k2) in &spec.orders {
        for i in 0..spec.per_order {
            out.push(PairCase {
                label: format!("random_{k1}{k2}_{i}"),
                f: random_f(k1)?,
                g: random_f(k2)?,
            });
        }
    }
    Ok(out)
}

/// Product formula on each realization: `I(f) I(g)` against the sum of
/// its diagram terms. The error is `|LHS - RHS| / (1 + |LHS|)`.
fn diagram_identity(
    ctx: &RunContext<'_>,
    id: &str,
    pairs: &[(String, String)],
    random: Option<&RandomPairs>,
    n: u64,
    realizations: usize,
    tolerance: f64,
) -> Result<CheckOutcome> {
    let resolved = ctx.resolved;
    let mut cases = Vec::new();
    for (f, g) in pairs {
        let (fr, gr) = resolved
            .integrand(f)
            .on_common_grid(resolved.integrand(g))?;
        cases.push(PairCase {
            label: format!("{f}*{g}"),
            f: fr,
            g: gr,
        });
    }
    if let Some(spec) = random {
        cases.extend(random_pairs(ctx, id, spec, n)?);
    }
    let stream = ctx.stream(id, "empirical");

    let mut w = ctx.writer(&format!("{id}.csv"))?;
    w.write_record(["k1", "k2", "pair", "n", "realizations", "max_rel_error"])?;
    let mut tw = ctx.writer(&format!("{id}_terms.csv"))?;
    tw.write_record([
        "pair",
        "l",
        "p",
        "count",
        "coefficient",
        "empirical_integral_value",
    ])?;
    let mut worst: f64 = 0.0;
    let mut failures = Vec::new();
    for case in &cases {
        let grid = case.f.grid().clone();
        let terms: Vec<DiagramTerm<f64>> = diagram_terms(&case.f, &case.g, &resolved.schedule, n)?
            .into_iter()
            .map(|mut t| {
                if t.contraction.grid() != &grid {
                    t.contraction = t.contraction.refine_to(&grid)?;
                }
                Ok(t)
            })
            .collect::<empirical_chaos::Result<_>>()?;
        let errors = replicates(realizations, |r| {
            let counts = ctx.draw(&stream, r, n, &grid)?;
            let lhs = empirical_integral(&case.f, &counts)? * empirical_integral(&case.g, &counts)?;
            let mut rhs = empirical_chaos::KahanSum::new();
            let mut values = Vec::with_capacity(terms.len());
            for t in &terms {
                let v = empirical_integral(&t.contraction, &counts)?;
                values.push(v);
                rhs.add(t.coefficient * t.count as f64 * v);
            }
            Ok(((lhs - rhs.value()).abs() / (1.0 + lhs.abs()), values))
        })?;
        for (t, v) in terms.iter().zip(&errors[0].1) {
            tw.write_record([
                case.label.clone(),
                t.l.to_string(),
                t.p.to_string(),
                t.count.to_string(),
                num(t.coefficient),
                num(*v),
            ])?;
        }
        let max_err = errors.iter().map(|e| e.0).fold(0.0, f64::max);
        if errors.iter().any(|e| e.0.is_nan()) || max_err > tolerance {
            failures.push(format!("{}: max relative error {max_err:.3e}", case.label));
        }
        worst = worst.max(max_err);
        w.write_record([
            case.f.order().to_string(),
            case.g.order().to_string(),
            case.label.clone(),
            n.to_string(),
            realizations.to_string(),
            num(max_err),
        ])?;
    }
    w.flush()?;
    tw.flush()?;
    let ok = format!(
        "{} pairs x {realizations} realizations, max relative error {worst:.3e}",
        cases.len()
    );
    Ok(CheckOutcome::from_failures(failures, ok))
}

/// Deterministic table of `F_l^{(n)}(f, g)` with its `n → ∞` limit; passes
/// when the distance to the limit never grows along the grid.
fn f_limit_sweep(
    ctx: &RunContext<'_>,
    id: &str,
    f: &str,
    g: &str,
    ls: Option<&[usize]>,
    n_grid: &[u64],
) -> Result<CheckOutcome> {
    let resolved = ctx.resolved;
    let (f, g) = resolved
        .integrand(f)
        .on_common_grid(resolved.integrand(g))?;
    let all: Vec<usize> = (0..=f.order().min(g.order())).collect();
    let ls = ls.unwrap_or(&all);
    let mut w = ctx.writer(&format!("{id}.csv"))?;
    w.write_record(["l", "n", "value", "limit"])?;
    let mut failures = Vec::new();
    for &l in ls {
        let limit = f_bilinear_limit(&f, &g, l, &resolved.schedule)?;
        let mut gaps = Vec::with_capacity(n_grid.len());
        for &n in n_grid {
            let value = f_bilinear(&f, &g, l, &resolved.schedule, n)?;
            gaps.push((value - limit).abs());
            w.write_record([l.to_string(), n.to_string(), num(value), num(limit)])?;
        }
        if gaps.windows(2).any(|w| w[1] > w[0] + 1e-12) {
            failures.push(format!("l={l}: |F - limit| increases: {}", sci(&gaps)));
        }
    }
    w.flush()?;
    let ok = format!("{} values of l x {} sample sizes", ls.len(), n_grid.len());
    Ok(CheckOutcome::from_failures(failures, ok))
}

/// Two-sample KS distance between the truncated empirical chaos and an
/// independent sample of the limit chaos, along the sample-size grid.
#[allow(clippy::too_many_arguments)]
fn ks_convergence(
    ctx: &RunContext<'_>,
    id: &str,
    chaos: &str,
    n_grid: &[u64],
    reps: usize,
    limit_order: Option<usize>,
    p_min: f64,
    require_decreasing: bool,
) -> Result<CheckOutcome> {
    let resolved = ctx.resolved;
    let h = &resolved.chaos[chaos];
    let grid = h.grid().clone();
    let limit_k = limit_order.unwrap_or(h.k_max()).min(h.k_max());
    let control = resolved.schedule.control();

    let limit_stream = ctx.stream(id, "limit");
    let limit = replicates(reps, |r| {
        let mut rng = limit_stream.rng(r);
        let real = sample_gaussian_cells(&grid, control, &mut rng);
        Ok(chaos_series(h, limit_k, &real)?)
    })?;
    if ctx.dump_gaussians {
        let mut dw = ctx.writer(&format!("{id}_gaussians.csv"))?;
        dw.write_record(["replicate", "cell_index", "value"])?;
        for r in 0..reps as u64 {
            let real = sample_gaussian_cells(&grid, control, &mut limit_stream.rng(r));
            for (i, v) in real.values().iter().enumerate() {
                dw.write_record([r.to_string(), (i + 1).to_string(), num(*v)])?;
            }
        }
        dw.flush()?;
    }

    let stream = ctx.stream(id, "empirical");
    let rule = resolved.config.k_rule;
    let mut w = ctx.writer(&format!("{id}.csv"))?;
    w.write_record(["n", "K", "ks_stat", "p_value", "R"])?;
    let mut stats = Vec::with_capacity(n_grid.len());
    let mut notes = Vec::new();
    for &n in n_grid {
        let k = k_schedule(&resolved.schedule, n, rule.c, rule.epsilon)?.min(h.k_max());
        let empirical = replicates(reps, |r| {
            let counts = ctx.draw(&stream, r, n, &grid)?;
            Ok(truncated_chaos(h, k, &counts)?)
        })?;
        ctx.dump_counts(id, &stream, n, &grid, reps)?;
        let constant = |xs: &[f64]| xs.iter().all(|x| *x == xs[0]);
        if constant(&empirical) && constant(&limit) {
            notes.push(format!("n={n}: both samples degenerate"));
        }
        let ks = ks_two_sample(&empirical, &limit)?;
        w.write_record([
            n.to_string(),
            k.to_string(),
            num(ks.statistic),
            num(ks.p_value),
            reps.to_string(),
        ])?;
        stats.push(ks);
    }
    w.flush()?;

    let mut failures = Vec::new();
    let ds: Vec<f64> = stats.iter().map(|s| s.statistic).collect();
    if require_decreasing && ds.windows(2).any(|w| w[1] >= w[0] && w[0] > 0.0) {
        failures.push(format!("KS statistic not decreasing: {ds:.4?}"));
    }
    let last = stats.last().expect("nonempty n_grid");
    if last.p_value <= p_min {
        failures.push(format!("final p-value {:.4} <= {p_min}", last.p_value));
    }
    let mut ok = format!("KS statistics {ds:.4?}, final p-value {:.4}", last.p_value);
    for note in notes {
        ok.push_str("; ");
        ok.push_str(&note);
    }
    Ok(CheckOutcome::from_failures(failures, ok))
}

/// Skewness and excess kurtosis of `W_n(B)` with jackknife z-scores; only
/// sample sizes of at least `min_n` count toward the verdict.
fn gaussianity(
    ctx: &RunContext<'_>,
    id: &str,
    interval: [f64; 2],
    n_grid: &[u64],
    reps: usize,
    z_max: f64,
    min_n: u64,
) -> Result<CheckOutcome> {
    let b = Interval::new(interval[0], interval[1])?;
    let grid = Grid::new(vec![b])?;
    let stream = ctx.stream(id, "empirical");
    let mut w = ctx.writer(&format!("{id}.csv"))?;
    w.write_record([
        "n",
        "R",
        "skewness",
        "skew_se",
        "skew_z",
        "excess_kurtosis",
        "kurt_se",
        "kurt_z",
    ])?;
    let mut failures = Vec::new();
    let mut notes = Vec::new();
    for &n in n_grid {
        let xs = replicates(reps, |r| {
            Ok(ctx.draw(&stream, r, n, &grid)?.w_cells(&[0])?)
        })?;
        ctx.dump_counts(id, &stream, n, &grid, reps)?;
        let shape = shape_statistics(&xs)?;
        let (sz, kz) = if shape.degenerate {
            (f64::NAN, f64::NAN)
        } else {
            (shape.skewness_z(), shape.kurtosis_z())
        };
        w.write_record([
            n.to_string(),
            reps.to_string(),
            num(shape.skewness),
            num(shape.skewness_se),
            num(sz),
            num(shape.excess_kurtosis),
            num(shape.kurtosis_se),
            num(kz),
        ])?;
        if shape.degenerate {
            notes.push(format!("n={n}: degenerate constant sample"));
        }
        if n < min_n {
            continue;
        }
        if shape.degenerate {
            failures.push(format!("n={n}: degenerate constant sample"));
        } else if !(sz.abs() <= z_max && kz.abs() <= z_max) {
            failures.push(format!("n={n}: skew z={sz:.3}, kurtosis z={kz:.3}"));
        }
    }
    w.flush()?;
    let mut ok = format!("{} sample sizes, R = {reps}", n_grid.len());
    for note in notes {
        ok.push_str("; ");
        ok.push_str(&note);
    }
    Ok(CheckOutcome::from_failures(failures, ok))
}

impl From<HarnessError> for CheckOutcome {
    fn from(e: HarnessError) -> Self {
        Self {
            pass: false,
            detail: format!("error: {e}"),
        }
    }
}
