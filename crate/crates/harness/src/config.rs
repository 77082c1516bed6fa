//! Experiment configuration: a single JSON document naming a schedule,
//! integrands, chaos vectors and the checks to run.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use empirical_chaos::{
    CellwiseFunction, ChaosVector, ControlMeasure, Grid, Interval, Schedule, StepFunction,
    TensorPowerFunction, Window,
};
use serde::Deserialize;

use crate::HarnessError;

/// Largest row size accepted by the diagram identity check.
pub const MAX_DIAGRAM_ORDER: usize = 4;

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub schedule: ScheduleSpec,
    #[serde(default)]
    pub integrands: BTreeMap<String, IntegrandSpec>,
    #[serde(default)]
    pub chaos: BTreeMap<String, ChaosSpec>,
    pub n_grid: Vec<u64>,
    pub replicates: usize,
    pub master_seed: u64,
    #[serde(default)]
    pub k_rule: KRule,
    #[serde(default)]
    pub checks: Vec<CheckSpec>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("empchaos-out")
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleSpec {
    pub control_density: DensitySpec,
    pub window: WindowSpec,
}

impl Default for ScheduleSpec {
    fn default() -> Self {
        Self {
            control_density: DensitySpec {
                breakpoints: Vec::new(),
                values: vec![1.0],
            },
            window: WindowSpec::Power { alpha: 0.5 },
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensitySpec {
    pub breakpoints: Vec<f64>,
    pub values: Vec<f64>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case", deny_unknown_fields)]
pub enum WindowSpec {
    Power { alpha: f64 },
    Log,
    Table { values: Vec<f64> },
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum IntegrandSpec {
    Cellwise {
        order: usize,
        grid: Vec<[f64; 2]>,
        coeffs: Vec<CoeffSpec>,
    },
    TensorPower {
        k: usize,
        g: StepSpec,
    },
    Constant {
        value: f64,
    },
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoeffSpec {
    /// 1-based cell indices.
    pub idx: Vec<usize>,
    pub val: f64,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepSpec {
    pub grid: Vec<[f64; 2]>,
    pub values: Vec<f64>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ChaosSpec {
    /// `h^{(k)} = k^{-1} 1_{[0,1] × [0,1/2] × … × [0,1/k]}` for `k <= k_max`.
    NestedBoxes {
        k_max: usize,
        #[serde(default)]
        n0: Option<u64>,
    },
    /// Component `k` is the named integrand of order `k`.
    Components {
        components: Vec<String>,
        #[serde(default)]
        n0: Option<u64>,
    },
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KRule {
    pub c: f64,
    pub epsilon: f64,
}

impl Default for KRule {
    fn default() -> Self {
        Self {
            c: 2.0,
            epsilon: 0.5,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum TargetKind {
    /// Exact finite-`n` value from the diagram formula.
    Exact,
    /// The `n → ∞` limit.
    #[default]
    Limit,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomPairs {
    pub orders: Vec<(usize, usize)>,
    pub per_order: usize,
    #[serde(default = "default_random_cells")]
    pub cells: usize,
    #[serde(default = "default_random_terms")]
    pub max_terms: usize,
    /// Cells are drawn inside `[0, min(e(n), span)]`.
    #[serde(default = "default_random_span")]
    pub span: f64,
}

fn default_random_span() -> f64 {
    4.0
}

fn default_random_cells() -> usize {
    4
}

fn default_random_terms() -> usize {
    6
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CheckSpec {
    CrossMoment {
        id: String,
        pairs: Vec<(String, String)>,
        #[serde(default)]
        n_grid: Option<Vec<u64>>,
        #[serde(default)]
        replicates: Option<usize>,
        #[serde(default)]
        target: TargetKind,
        #[serde(default = "default_limit_tolerance")]
        tolerance: f64,
    },
    Mean {
        id: String,
        integrands: Vec<String>,
        #[serde(default)]
        n_grid: Option<Vec<u64>>,
        #[serde(default)]
        replicates: Option<usize>,
    },
    DiagramIdentity {
        id: String,
        #[serde(default)]
        pairs: Vec<(String, String)>,
        #[serde(default)]
        random: Option<RandomPairs>,
        n: u64,
        realizations: usize,
        #[serde(default = "default_identity_tolerance")]
        tolerance: f64,
    },
    FLimits {
        id: String,
        f: String,
        g: String,
        #[serde(default)]
        l: Option<Vec<usize>>,
        #[serde(default)]
        n_grid: Option<Vec<u64>>,
    },
    Ks {
        id: String,
        chaos: String,
        #[serde(default)]
        n_grid: Option<Vec<u64>>,
        #[serde(default)]
        replicates: Option<usize>,
        #[serde(default)]
        limit_order: Option<usize>,
        #[serde(default = "default_p_min")]
        p_min: f64,
        #[serde(default = "default_true")]
        require_decreasing: bool,
    },
    Gaussianity {
        id: String,
        interval: [f64; 2],
        #[serde(default)]
        n_grid: Option<Vec<u64>>,
        #[serde(default)]
        replicates: Option<usize>,
        #[serde(default = "default_z_max")]
        z_max: f64,
        #[serde(default = "default_min_n")]
        min_n: u64,
    },
}

fn default_limit_tolerance() -> f64 {
    0.02
}

fn default_identity_tolerance() -> f64 {
    1e-9
}

fn default_p_min() -> f64 {
    0.005
}

fn default_true() -> bool {
    true
}

fn default_z_max() -> f64 {
    4.0
}

fn default_min_n() -> u64 {
    10_000
}

/// Which CLI subcommand a check belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum CheckFamily {
    Moments,
    Mean,
    DiagramCheck,
    FLimits,
    Converge,
    Gaussianity,
}

impl CheckSpec {
    pub fn id(&self) -> &str {
        match self {
            CheckSpec::CrossMoment { id, .. }
            | CheckSpec::Mean { id, .. }
            | CheckSpec::DiagramIdentity { id, .. }
            | CheckSpec::FLimits { id, .. }
            | CheckSpec::Ks { id, .. }
            | CheckSpec::Gaussianity { id, .. } => id,
        }
    }

    pub fn family(&self) -> CheckFamily {
        match self {
            CheckSpec::CrossMoment { .. } => CheckFamily::Moments,
            CheckSpec::Mean { .. } => CheckFamily::Mean,
            CheckSpec::DiagramIdentity { .. } => CheckFamily::DiagramCheck,
            CheckSpec::FLimits { .. } => CheckFamily::FLimits,
            CheckSpec::Ks { .. } => CheckFamily::Converge,
            CheckSpec::Gaussianity { .. } => CheckFamily::Gaussianity,
        }
    }
}

/// A configuration with every name resolved into core objects.
#[derive(Clone, Debug)]
pub struct Resolved {
    pub config: ExperimentConfig,
    pub schedule: Schedule<f64>,
    pub integrands: BTreeMap<String, CellwiseFunction<f64>>,
    pub chaos: BTreeMap<String, ChaosVector<f64>>,
}

impl Resolved {
    pub fn integrand(&self, name: &str) -> &CellwiseFunction<f64> {
        &self.integrands[name]
    }
}

/// Parses JSON text, reporting line and column on failure.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, HarnessError> {
    serde_json::from_str(text).map_err(|e| {
        HarnessError::Config(format!("line {}, column {}: {}", e.line(), e.column(), e))
    })
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig, HarnessError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
    parse_config(&text).map_err(|e| match e {
        HarnessError::Config(msg) => HarnessError::Config(format!("{}: {msg}", path.display())),
        other => other,
    })
}

fn config_err(msg: impl Into<String>) -> HarnessError {
    HarnessError::Config(msg.into())
}

fn build_grid(cells: &[[f64; 2]], what: &str) -> Result<Grid<f64>, HarnessError> {
    let cells = cells
        .iter()
        .map(|[lo, hi]| Interval::new(*lo, *hi))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| config_err(format!("{what}.grid: {e}")))?;
    Grid::new(cells).map_err(|e| config_err(format!("{what}.grid: {e}")))
}

fn build_schedule(spec: &ScheduleSpec) -> Result<Schedule<f64>, HarnessError> {
    let control = ControlMeasure::new(
        spec.control_density.breakpoints.clone(),
        spec.control_density.values.clone(),
    )
    .map_err(|e| config_err(format!("schedule.control_density: {e}")))?;
    let window = match &spec.window {
        WindowSpec::Power { alpha } => Window::Power { alpha: *alpha },
        WindowSpec::Log => Window::Log,
        WindowSpec::Table { values } => Window::Table(values.clone()),
    };
    Schedule::new(control, window).map_err(|e| config_err(format!("schedule.window: {e}")))
}

fn build_integrand(
    name: &str,
    spec: &IntegrandSpec,
) -> Result<CellwiseFunction<f64>, HarnessError> {
    let what = format!("integrands.{name}");
    match spec {
        IntegrandSpec::Cellwise {
            order,
            grid,
            coeffs,
        } => {
            let grid = build_grid(grid, &what)?;
            let mut entries = Vec::with_capacity(coeffs.len());
            for (i, c) in coeffs.iter().enumerate() {
                if c.idx.contains(&0) {
                    return Err(config_err(format!(
                        "{what}.coeffs[{i}].idx: cell indices are 1-based"
                    )));
                }
                entries.push((c.idx.iter().map(|j| j - 1).collect(), c.val));
            }
            CellwiseFunction::new(*order, grid, entries)
                .map_err(|e| config_err(format!("{what}.coeffs: {e}")))
        }
        IntegrandSpec::TensorPower { k, g } => {
            let grid = build_grid(&g.grid, &format!("{what}.g"))?;
            let step = StepFunction::new(grid, g.values.clone())
                .map_err(|e| config_err(format!("{what}.g.values: {e}")))?;
            TensorPowerFunction::new(step, *k)
                .and_then(|t| t.expand())
                .map_err(|e| config_err(format!("{what}: {e}")))
        }
        IntegrandSpec::Constant { value } => {
            let grid = Grid::from_breakpoints(&[0.0, 1.0]).expect("unit grid");
            Ok(CellwiseFunction::constant(grid, *value))
        }
    }
}

fn check_increasing(grid: &[u64], what: &str) -> Result<(), HarnessError> {
    if grid.is_empty() {
        return Err(config_err(format!("{what}: empty")));
    }
    if grid.contains(&0) {
        return Err(config_err(format!("{what}: sample sizes must be positive")));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(config_err(format!("{what}: must be strictly increasing")));
    }
    Ok(())
}

fn check_replicates(r: Option<usize>, what: &str) -> Result<(), HarnessError> {
    match r {
        Some(r) if r < 2 => Err(config_err(format!("{what}: need at least 2 replicates"))),
        _ => Ok(()),
    }
}

/// Every cell carrying a nonzero coefficient must lie in `E_{n0}`.
fn check_support(
    schedule: &Schedule<f64>,
    h: &ChaosVector<f64>,
    n0: u64,
    what: &str,
) -> Result<(), HarnessError> {
    let window = schedule
        .window_interval(n0)
        .map_err(|e| config_err(format!("{what}.n0: {e}")))?;
    for (k, component) in h.components().iter().enumerate() {
        for (tuple, _) in component.coeffs() {
            for &cell in tuple {
                let c = component.grid().cell(cell);
                if !c.is_subset_of(&window) {
                    return Err(config_err(format!(
                        "{what}: component {k} is supported on {c}, outside E_{n0} = {window}"
                    )));
                }
            }
        }
    }
    Ok(())
}

/// Resolves names and validates everything that can be checked before
/// sampling: schema constraints, the schedule over the union of all sample
/// sizes, and the support condition of every chaos vector.
pub fn resolve(config: ExperimentConfig) -> Result<Resolved, HarnessError> {
    if config.replicates < 2 {
        return Err(config_err("replicates: need at least 2"));
    }
    check_increasing(&config.n_grid, "n_grid")?;
    if !(config.k_rule.c > 0.0) || !(config.k_rule.epsilon > 0.0 && config.k_rule.epsilon < 1.0) {
        return Err(config_err("k_rule: need c > 0 and 0 < epsilon < 1"));
    }
    let schedule = build_schedule(&config.schedule)?;

    let mut integrands = BTreeMap::new();
    for (name, spec) in &config.integrands {
        integrands.insert(name.clone(), build_integrand(name, spec)?);
    }
    let lookup = |name: &str, what: &str| -> Result<&CellwiseFunction<f64>, HarnessError> {
        integrands
            .get(name)
            .ok_or_else(|| config_err(format!("{what}: unknown integrand \"{name}\"")))
    };

    let mut chaos = BTreeMap::new();
    for (name, spec) in &config.chaos {
        let what = format!("chaos.{name}");
        let (h, n0) = match spec {
            ChaosSpec::NestedBoxes { k_max, n0 } => (
                ChaosVector::nested_boxes(*k_max)
                    .map_err(|e| config_err(format!("{what}: {e}")))?,
                *n0,
            ),
            ChaosSpec::Components { components, n0 } => {
                let parts = components
                    .iter()
                    .enumerate()
                    .map(|(k, c)| lookup(c, &format!("{what}.components[{k}]")).cloned())
                    .collect::<Result<Vec<_>, _>>()?;
                let h = ChaosVector::new(parts)
                    .and_then(|h| h.on_common_grid())
                    .map_err(|e| config_err(format!("{what}: {e}")))?;
                (h, *n0)
            }
        };
        check_support(&schedule, &h, n0.unwrap_or(config.n_grid[0]), &what)?;
        chaos.insert(name.clone(), h);
    }

    let mut ids = BTreeSet::new();
    let mut all_n: BTreeSet<u64> = config.n_grid.iter().copied().collect();
    for check in &config.checks {
        let id = check.id();
        let what = format!("checks.{id}");
        if id.is_empty()
            || !id
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
        {
            return Err(config_err(format!(
                "checks: id \"{id}\" must be nonempty and use only letters, digits, '_' or '-'"
            )));
        }
        if !ids.insert(id.to_string()) {
            return Err(config_err(format!("checks: duplicate id \"{id}\"")));
        }
        let mut grid_override = None;
        match check {
            CheckSpec::CrossMoment {
                pairs,
                n_grid,
                replicates,
                tolerance,
                ..
            } => {
                if pairs.is_empty() {
                    return Err(config_err(format!("{what}.pairs: empty")));
                }
                for (f, g) in pairs {
                    lookup(f, &format!("{what}.pairs"))?;
                    lookup(g, &format!("{what}.pairs"))?;
                }
                if !(*tolerance >= 0.0) {
                    return Err(config_err(format!("{what}.tolerance: must be >= 0")));
                }
                check_replicates(*replicates, &format!("{what}.replicates"))?;
                grid_override = n_grid.as_ref();
            }
            CheckSpec::Mean {
                integrands: names,
                n_grid,
                replicates,
                ..
            } => {
                for f in names {
                    lookup(f, &format!("{what}.integrands"))?;
                }
                check_replicates(*replicates, &format!("{what}.replicates"))?;
                grid_override = n_grid.as_ref();
            }
            CheckSpec::DiagramIdentity {
                pairs,
                random,
                n,
                realizations,
                ..
            } => {
                for (f, g) in pairs {
                    for name in [f, g] {
                        let order = lookup(name, &format!("{what}.pairs"))?.order();
                        if order > MAX_DIAGRAM_ORDER {
                            return Err(config_err(format!(
                                "{what}.pairs: order {order} of \"{name}\" exceeds {MAX_DIAGRAM_ORDER}"
                            )));
                        }
                    }
                }
                if let Some(rp) = random {
                    if rp
                        .orders
                        .iter()
                        .any(|&(a, b)| a > MAX_DIAGRAM_ORDER || b > MAX_DIAGRAM_ORDER)
                    {
                        return Err(config_err(format!(
                            "{what}.random.orders: orders above {MAX_DIAGRAM_ORDER}"
                        )));
                    }
                    if rp.cells == 0 || rp.max_terms == 0 || !(rp.span > 0.0) {
                        return Err(config_err(format!(
                            "{what}.random: cells, max_terms and span must be positive"
                        )));
                    }
                }
                if pairs.is_empty() && random.is_none() {
                    return Err(config_err(format!("{what}: needs pairs or random")));
                }
                if *n == 0 || *realizations == 0 {
                    return Err(config_err(format!(
                        "{what}: n and realizations must be positive"
                    )));
                }
                all_n.insert(*n);
            }
            CheckSpec::FLimits {
                f, g, l, n_grid, ..
            } => {
                let kf = lookup(f, &format!("{what}.f"))?.order();
                let kg = lookup(g, &format!("{what}.g"))?.order();
                if let Some(ls) = l {
                    if let Some(bad) = ls.iter().find(|&&l| l > kf.min(kg)) {
                        return Err(config_err(format!(
                            "{what}.l: {bad} exceeds min(k1, k2) = {}",
                            kf.min(kg)
                        )));
                    }
                }
                grid_override = n_grid.as_ref();
            }
            CheckSpec::Ks {
                chaos: name,
                n_grid,
                replicates,
                ..
            } => {
                if !chaos.contains_key(name) {
                    return Err(config_err(format!(
                        "{what}.chaos: unknown chaos vector \"{name}\""
                    )));
                }
                check_replicates(*replicates, &format!("{what}.replicates"))?;
                grid_override = n_grid.as_ref();
            }
            CheckSpec::Gaussianity {
                interval,
                n_grid,
                replicates,
                ..
            } => {
                Interval::new(interval[0], interval[1])
                    .map_err(|e| config_err(format!("{what}.interval: {e}")))?;
                if replicates.is_some_and(|r| r < 3) {
                    return Err(config_err(format!("{what}.replicates: need at least 3")));
                }
                grid_override = n_grid.as_ref();
            }
        }
        if let Some(g) = grid_override {
            check_increasing(g, &format!("{what}.n_grid"))?;
            all_n.extend(g.iter().copied());
        }
    }

    let all_n: Vec<u64> = all_n.into_iter().collect();
    let report = schedule.validate(&all_n);
    if !report.pass() {
        let failed: Vec<String> = report
            .failed()
            .map(|c| format!("{}: {}", c.name, c.detail))
            .collect();
        return Err(config_err(format!("schedule: {}", failed.join("; "))));
    }

    Ok(Resolved {
        config,
        schedule,
        integrands,
        chaos,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{"n_grid": [100], "replicates": 10, "master_seed": 1}"#;

    #[test]
    fn minimal_config_defaults() {
        let c = parse_config(MINIMAL).unwrap();
        assert!(c.checks.is_empty());
        let r = resolve(c).unwrap();
        assert_eq!(r.schedule.a_n(100).unwrap(), 10.0);
    }

    #[test]
    fn integrand_schema_is_one_based() {
        let text = r#"{"n_grid": [100], "replicates": 10, "master_seed": 1,
            "integrands": {"f": {"type":"cellwise","order":2,"grid":[[0,1],[1,2]],
                                 "coeffs":[{"idx":[1,2],"val":1.0}]},
                           "t": {"type":"tensor_power","k":3,"g":{"grid":[[0,1]],"values":[1.0]}}}}"#;
        let r = resolve(parse_config(text).unwrap()).unwrap();
        assert_eq!(r.integrand("f").coeff(&[0, 1]), 1.0);
        assert_eq!(r.integrand("t").coeff(&[0, 0, 0]), 1.0);

        let zero = text.replace(r#""idx":[1,2]"#, r#""idx":[0,2]"#);
        let err = resolve(parse_config(&zero).unwrap()).unwrap_err();
        assert!(err.to_string().contains("1-based"), "{err}");
    }

    #[test]
    fn malformed_json_reports_position() {
        let text = "{\n  \"n_grid\": [100],\n  \"replicates\": \"many\"\n}";
        let err = parse_config(text).unwrap_err().to_string();
        assert!(err.contains("line 3"), "{err}");
    }

    #[test]
    fn unknown_names_and_bad_grids_rejected() {
        let text = r#"{"n_grid": [100], "replicates": 10, "master_seed": 1,
            "checks": [{"kind":"mean","id":"m","integrands":["nope"]}]}"#;
        assert!(resolve(parse_config(text).unwrap()).is_err());
        let text = r#"{"n_grid": [100, 10], "replicates": 10, "master_seed": 1}"#;
        assert!(resolve(parse_config(text).unwrap()).is_err());
        let text = r#"{"n_grid": [100], "replicates": 1, "master_seed": 1}"#;
        assert!(resolve(parse_config(text).unwrap()).is_err());
    }

    #[test]
    fn failing_schedule_rejected() {
        let text = r#"{"n_grid": [10, 100], "replicates": 10, "master_seed": 1,
            "schedule": {"control_density": {"breakpoints": [], "values": [1.0]},
                         "window": {"rule": "power", "alpha": 2.0}}}"#;
        let err = resolve(parse_config(text).unwrap())
            .unwrap_err()
            .to_string();
        assert!(err.contains("schedule"), "{err}");
    }

    #[test]
    fn support_condition_enforced() {
        let text = r#"{"n_grid": [4], "replicates": 10, "master_seed": 1,
            "integrands": {"c": {"type":"constant","value":0.0},
                           "far": {"type":"cellwise","order":1,"grid":[[5,6]],"coeffs":[{"idx":[1],"val":1.0}]}},
            "chaos": {"h": {"type":"components","components":["c","far"]}}}"#;
        let err = resolve(parse_config(text).unwrap())
            .unwrap_err()
            .to_string();
        assert!(err.contains("outside"), "{err}");
    }
}
