//! Exact finite-N computations for the conditional measure.
//!
//! The mean-field energy depends on a configuration only through the number
//! `k` of `+1` free spins, so every expectation is a sum over `n_free + 1`
//! sectors weighted by `C(n_free, k) exp(beta N (m_k^2 / 2 + h m_k))`.

use std::sync::{Arc, RwLock};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::model::{validate_beta, FiniteModel, ModelParams};
use crate::solver::specific_magnetization;

/// Largest number of free spins [`enumerate_conditional_measure`] accepts.
pub const MAX_ENUMERATION_FREE: usize = 20;

static LOG_FACTORIALS: RwLock<Option<Arc<Vec<f64>>>> = RwLock::new(None);

/// Table of `ln k!` for `k = 0..=n`, shared across the process and regrown
/// only when a larger `n` is requested.
pub fn log_factorials(n: usize) -> Arc<Vec<f64>> {
    if let Some(table) = LOG_FACTORIALS.read().expect("table lock").as_ref() {
        if table.len() > n {
            return Arc::clone(table);
        }
    }
    let mut guard = LOG_FACTORIALS.write().expect("table lock");
    if let Some(table) = guard.as_ref() {
        if table.len() > n {
            return Arc::clone(table);
        }
    }
    let len = (n + 1).max(1024).next_power_of_two();
    let mut table = Vec::with_capacity(len);
    let mut acc = 0.0f64;
    table.push(0.0);
    for k in 1..len {
        acc += (k as f64).ln();
        table.push(acc);
    }
    let table = Arc::new(table);
    *guard = Some(Arc::clone(&table));
    table
}

/// `ln C(n, k)`, symmetric in `k <-> n - k` bit for bit.
fn log_binomial(lf: &[f64], n: usize, k: usize) -> f64 {
    lf[n] - (lf[k] + lf[n - k])
}

/// Stable `ln sum exp(x_i)`.
pub fn logsumexp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

/// Sums `xs` pairing index `i` with `len - 1 - i` from the outside in, so
/// that reversing `xs` gives a bit-identical result.
fn mirror_sum(xs: &[f64]) -> f64 {
    let n = xs.len();
    let mut acc = 0.0;
    for i in 0..n / 2 {
        acc += xs[i] + xs[n - 1 - i];
    }
    if n % 2 == 1 {
        acc += xs[n / 2];
    }
    acc
}

/// Exact moments of the finite conditional measure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExactResult {
    /// `ln` of the sector-summed Boltzmann weight, with the configuration
    /// independent constants of the energy dropped.
    pub log_partition: f64,
    pub mean_magnetization: f64,
    /// Mean of a free spin; `0` when there are no free sites.
    pub mean_free_spin: f64,
}

fn sector_log_weights(fm: &FiniteModel, beta: f64, h: f64) -> Vec<f64> {
    let nf = fm.n_free();
    let lf = log_factorials(nf);
    let bn = beta * fm.n_total() as f64;
    (0..=nf)
        .map(|k| {
            let m = fm.sector_m(k);
            log_binomial(&lf, nf, k) + bn * (0.5 * m * m + h * m)
        })
        .collect()
}

pub fn exact_moments(fm: &FiniteModel, beta: f64, h: f64) -> Result<ExactResult> {
    validate_beta(beta)?;
    if !h.is_finite() {
        return Err(invalid(format!("field must be finite (h = {h})")));
    }
    let nf = fm.n_free();
    let logw = sector_log_weights(fm, beta, h);
    let log_partition = logsumexp(&logw);
    let w: Vec<f64> = logw.iter().map(|x| (x - log_partition).exp()).collect();
    let norm = mirror_sum(&w);

    let weighted = |f: &dyn Fn(usize) -> f64| {
        let terms: Vec<f64> = (0..=nf).map(|k| f(k) * w[k]).collect();
        mirror_sum(&terms) / norm
    };
    let mean_magnetization = weighted(&|k| fm.sector_m(k));
    let mean_free_spin = if nf == 0 {
        0.0
    } else {
        weighted(&|k| (2 * k as i64 - nf as i64) as f64 / nf as f64)
    };
    Ok(ExactResult {
        log_partition,
        mean_magnetization,
        mean_free_spin,
    })
}

/// Probabilities of every free-spin assignment under the conditioned full
/// model and under the reduced free-site model.
///
/// Bit `i` of an assignment index is set when free spin `i` is `+1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionalTable {
    pub model: FiniteModel,
    /// From the full Hamiltonian over all `N` sites.
    pub full: Vec<f64>,
    /// From the reduced Hamiltonian over free sites only.
    pub reduced: Vec<f64>,
}

impl ConditionalTable {
    pub fn max_abs_difference(&self) -> f64 {
        self.full
            .iter()
            .zip(&self.reduced)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Probability of each sector `k` under the full-model column.
    pub fn sector_marginals(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.model.n_free() + 1];
        for (mask, p) in self.full.iter().enumerate() {
            out[mask.count_ones() as usize] += p;
        }
        out
    }

    /// `<m_N>` from the full-model column.
    pub fn mean_magnetization(&self) -> f64 {
        self.full
            .iter()
            .enumerate()
            .map(|(mask, p)| p * self.model.sector_m(mask.count_ones() as usize))
            .sum()
    }
}

fn normalize(log_weights: Vec<f64>) -> Vec<f64> {
    let z = logsumexp(&log_weights);
    log_weights.into_iter().map(|x| (x - z).exp()).collect()
}

pub fn enumerate_conditional_measure(
    fm: &FiniteModel,
    beta: f64,
    h: f64,
) -> Result<ConditionalTable> {
    validate_beta(beta)?;
    if !h.is_finite() {
        return Err(invalid(format!("field must be finite (h = {h})")));
    }
    let nf = fm.n_free();
    if nf > MAX_ENUMERATION_FREE {
        return Err(Error::Size {
            what: "free sites for enumeration",
            size: nf,
            limit: MAX_ENUMERATION_FREE,
        });
    }
    let n = fm.n_total() as f64;
    let pinned = fm.n_plus() as i64 - fm.n_minus() as i64;
    let field_free = fm.s_n() - fm.r_n() + h;

    let mut full = Vec::with_capacity(1 << nf);
    let mut reduced = Vec::with_capacity(1 << nf);
    for mask in 0u64..(1u64 << nf) {
        let free_sum = 2 * mask.count_ones() as i64 - nf as i64;
        // H_N = -N (m^2/2 + h m) - 1/2 on the whole configuration
        let m = (pinned + free_sum) as f64 / n;
        let h_full = -n * (0.5 * m * m + h * m) - 0.5;
        // H_{N,s,r} = -N ((S/N)^2 / 2 + (s_N - r_N + h) S / N), S = free spin sum
        let y = free_sum as f64 / n;
        let h_reduced = -n * (0.5 * y * y + field_free * y);
        full.push(-beta * h_full);
        reduced.push(-beta * h_reduced);
    }
    Ok(ConditionalTable {
        model: *fm,
        full: normalize(full),
        reduced: normalize(reduced),
    })
}

/// One row of a finite-N convergence study.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub n: usize,
    /// Realized pinned fractions after rounding.
    pub s_n: f64,
    pub r_n: f64,
    pub mean_magnetization: f64,
    pub error: f64,
}

/// Exact `<m_N>` for each size, compared with the limiting magnetization.
pub fn convergence_study(
    s: f64,
    r: f64,
    beta: f64,
    h: f64,
    sizes: &[usize],
) -> Result<(f64, Vec<ConvergenceRow>)> {
    let params = ModelParams::new(beta, s, r, h)?;
    let m_inf = specific_magnetization(&params)?;
    let models = sizes
        .iter()
        .map(|&n| FiniteModel::from_fractions(n, s, r))
        .collect::<Result<Vec<_>>>()?;
    if let Some(&max_n) = sizes.iter().max() {
        log_factorials(max_n);
    }
    let rows = models
        .par_iter()
        .map(|fm| {
            let ex = exact_moments(fm, beta, h)?;
            Ok(ConvergenceRow {
                n: fm.n_total(),
                s_n: fm.s_n(),
                r_n: fm.r_n(),
                mean_magnetization: ex.mean_magnetization,
                error: (ex.mean_magnetization - m_inf).abs(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((m_inf, rows))
}

/// Rises below this are rounding noise, not inversions.
const ERROR_NOISE_FLOOR: f64 = 1e-14;

/// Whether errors shrink along the rows, tolerating at most one increase of
/// size below `inversion_tol`.
pub fn errors_nonincreasing(rows: &[ConvergenceRow], inversion_tol: f64) -> bool {
    let mut inversions = 0;
    for w in rows.windows(2) {
        let rise = w[1].error - w[0].error;
        if rise > ERROR_NOISE_FLOOR {
            if rise >= inversion_tol {
                return false;
            }
            inversions += 1;
        }
    }
    inversions <= 1
}

/// Sizes `start, 2 start, 4 start, ...` up to and including `stop`.
pub fn doubling_sizes(start: usize, stop: usize) -> Vec<usize> {
    std::iter::successors(Some(start), |&n| n.checked_mul(2))
        .take_while(|&n| n <= stop)
        .collect()
}
