//! Moment estimates, jackknifed shape statistics and the two-sample
//! Kolmogorov-Smirnov test.

use empirical_chaos::compensated_sum;
use serde::Serialize;

use crate::HarnessError;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MomentEstimate {
    pub mean: f64,
    pub standard_error: f64,
    pub replicates: usize,
    pub target: Option<f64>,
    pub z_score: Option<f64>,
}

impl MomentEstimate {
    /// Sample mean with its standard error; sums run in index order.
    pub fn from_samples(xs: &[f64], target: Option<f64>) -> Result<Self, HarnessError> {
        if xs.len() < 2 {
            return Err(HarnessError::Check(format!(
                "need at least 2 replicates, got {}",
                xs.len()
            )));
        }
        let r = xs.len() as f64;
        let mean = compensated_sum(xs.iter().copied()) / r;
        let var = compensated_sum(xs.iter().map(|x| (x - mean) * (x - mean))) / (r - 1.0);
        let standard_error = (var / r).sqrt();
        Ok(Self::new(mean, standard_error, xs.len(), target))
    }

    pub fn new(mean: f64, standard_error: f64, replicates: usize, target: Option<f64>) -> Self {
        let z_score = target.map(|t| z_score(mean, standard_error, t));
        Self {
            mean,
            standard_error,
            replicates,
            target,
            z_score,
        }
    }

    /// `|z| <= k`; an exact hit with zero spread counts as within.
    pub fn within(&self, k: f64) -> bool {
        self.z_score.is_some_and(|z| z.abs() <= k)
    }
}

fn z_score(mean: f64, se: f64, target: f64) -> f64 {
    let diff = mean - target;
    if se > 0.0 {
        diff / se
    } else if diff == 0.0 {
        0.0
    } else {
        f64::INFINITY.copysign(diff)
    }
}

/// Sample skewness `m3 / m2^{3/2}` and excess kurtosis `m4 / m2² - 3` with
/// delete-one jackknife standard errors.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ShapeEstimate {
    pub skewness: f64,
    pub skewness_se: f64,
    pub excess_kurtosis: f64,
    pub kurtosis_se: f64,
    pub degenerate: bool,
}

impl ShapeEstimate {
    pub fn skewness_z(&self) -> f64 {
        z_score(self.skewness, self.skewness_se, 0.0)
    }

    pub fn kurtosis_z(&self) -> f64 {
        z_score(self.excess_kurtosis, self.kurtosis_se, 0.0)
    }
}

fn shape_from_sums(n: f64, s1: f64, s2: f64, s3: f64, s4: f64) -> Option<(f64, f64)> {
    let m = s1 / n;
    let m2 = s2 / n - m * m;
    if m2 <= 0.0 {
        return None;
    }
    let m3 = s3 / n - 3.0 * m * s2 / n + 2.0 * m.powi(3);
    let m4 = s4 / n - 4.0 * m * s3 / n + 6.0 * m * m * s2 / n - 3.0 * m.powi(4);
    Some((m3 / m2.powf(1.5), m4 / (m2 * m2) - 3.0))
}

/// O(R) jackknife: each delete-one statistic comes from the full power sums
/// minus one observation's contribution. Data are centered first, which
/// leaves both statistics unchanged and keeps the sums well conditioned.
pub fn shape_statistics(xs: &[f64]) -> Result<ShapeEstimate, HarnessError> {
    if xs.len() < 3 {
        return Err(HarnessError::Check(format!(
            "need at least 3 replicates for shape statistics, got {}",
            xs.len()
        )));
    }
    let n = xs.len() as f64;
    let center = compensated_sum(xs.iter().copied()) / n;
    let ys: Vec<f64> = xs.iter().map(|x| x - center).collect();
    let power_sum = |p: i32| compensated_sum(ys.iter().map(|y| y.powi(p)));
    let (s1, s2, s3, s4) = (power_sum(1), power_sum(2), power_sum(3), power_sum(4));
    let Some((skewness, excess_kurtosis)) = shape_from_sums(n, s1, s2, s3, s4) else {
        return Ok(ShapeEstimate {
            skewness: 0.0,
            skewness_se: 0.0,
            excess_kurtosis: 0.0,
            kurtosis_se: 0.0,
            degenerate: true,
        });
    };
    let leave_one_out: Vec<(f64, f64)> = ys
        .iter()
        .map(|&y| {
            shape_from_sums(n - 1.0, s1 - y, s2 - y * y, s3 - y.powi(3), s4 - y.powi(4))
                .unwrap_or((0.0, 0.0))
        })
        .collect();
    let jackknife_se = |pick: fn(&(f64, f64)) -> f64| {
        let mean = compensated_sum(leave_one_out.iter().map(pick)) / n;
        let ss = compensated_sum(leave_one_out.iter().map(|t| (pick(t) - mean).powi(2)));
        ((n - 1.0) / n * ss).sqrt()
    };
    Ok(ShapeEstimate {
        skewness,
        skewness_se: jackknife_se(|t| t.0),
        excess_kurtosis,
        kurtosis_se: jackknife_se(|t| t.1),
        degenerate: false,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
}

/// Two-sample Kolmogorov-Smirnov statistic `sup |F_a - F_b|` with the
/// asymptotic Kolmogorov p-value at effective size `n_a n_b / (n_a + n_b)`.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<KsResult, HarnessError> {
    if a.is_empty() || b.is_empty() {
        return Err(HarnessError::Check(
            "KS test needs two nonempty samples".into(),
        ));
    }
    if a.iter().chain(b).any(|x| x.is_nan()) {
        return Err(HarnessError::Check("KS test sample contains NaN".into()));
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    let en = (na * nb / (na + nb)).sqrt();
    let p_value = kolmogorov_q((en + 0.12 + 0.11 / en) * d);
    Ok(KsResult {
        statistic: d,
        p_value,
    })
}

/// `Q(λ) = P(K > λ)` for the Kolmogorov distribution.
pub fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    let q = if lambda < 1.18 {
        // Jacobi-transformed series converges fast for small λ
        let y = (-std::f64::consts::PI.powi(2) / (8.0 * lambda * lambda)).exp();
        let mut s = 0.0;
        for k in 0..50 {
            s += y.powi((2 * k + 1) * (2 * k + 1));
        }
        1.0 - (2.0 * std::f64::consts::PI).sqrt() / lambda * s
    } else {
        let mut s = 0.0;
        for k in 1..=100 {
            let term = (-2.0 * (k * k) as f64 * lambda * lambda).exp();
            s += if k % 2 == 1 { term } else { -term };
            if term < 1e-17 {
                break;
            }
        }
        2.0 * s
    };
    q.clamp(0.0, 1.0)
}
