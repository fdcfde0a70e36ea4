//! Single-spin-flip Monte Carlo sampling of the conditional measure.
//!
//! Only free sites are ever proposed. The energy depends on the total spin
//! `M` alone, so flipping a spin `sigma` changes it by
//! `dH = 2 sigma ((M - sigma) / N + h)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::exactn::enumerate_conditional_measure;
use crate::model::{validate_beta, FiniteModel};

/// Generator behind every chain, recorded in output metadata.
pub const RNG_ALGORITHM: &str = "ChaCha8Rng-seed_from_u64";

/// Number of equal batches for the batch-means error bar.
pub const BATCHES: usize = 20;

/// Largest free-site count for [`transition_matrix_check`].
pub const MAX_MATRIX_FREE: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dynamics {
    #[default]
    Metropolis,
    Glauber,
}

impl Dynamics {
    /// Probability of accepting a proposed flip with energy change `delta_h`.
    pub fn acceptance(self, beta: f64, delta_h: f64) -> f64 {
        let x = beta * delta_h;
        match self {
            Dynamics::Metropolis => {
                if x <= 0.0 {
                    1.0
                } else {
                    (-x).exp()
                }
            }
            Dynamics::Glauber => {
                if x > 0.0 {
                    let e = (-x).exp();
                    e / (1.0 + e)
                } else {
                    1.0 / (1.0 + x.exp())
                }
            }
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Dynamics::Metropolis => "metropolis",
            Dynamics::Glauber => "glauber",
        }
    }
}

/// Starting configuration of the free spins.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialState {
    /// All free spins along `sign(h + s_N - r_N)`, alternating when it is zero.
    #[default]
    FieldAligned,
    AllUp,
    AllDown,
    /// Independent fair coins drawn from the chain's generator.
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainConfig {
    pub model: FiniteModel,
    pub beta: f64,
    pub h: f64,
    pub seed: u64,
    /// Measured sweeps; one sweep is `n_free` proposals.
    pub sweeps: usize,
    pub burn_in_sweeps: usize,
    pub dynamics: Dynamics,
    pub init: InitialState,
}

impl ChainConfig {
    pub fn new(model: FiniteModel, beta: f64, h: f64, seed: u64, sweeps: usize) -> Self {
        Self {
            model,
            beta,
            h,
            seed,
            sweeps,
            burn_in_sweeps: sweeps / 10,
            dynamics: Dynamics::default(),
            init: InitialState::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        validate_beta(self.beta)?;
        if !self.h.is_finite() {
            return Err(invalid(format!("field must be finite (h = {})", self.h)));
        }
        if self.sweeps < BATCHES {
            return Err(invalid(format!(
                "need at least {BATCHES} measured sweeps for batch means (got {})",
                self.sweeps
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean_magnetization: f64,
    pub mean_free_spin: f64,
    /// Batch-means standard error of `mean_magnetization`.
    pub std_error: f64,
    pub acceptance_rate: f64,
    /// Number of `+1` free spins at the end of the run.
    pub final_sector: usize,
    /// How often each sector was seen at the end of a measured sweep.
    #[serde(skip)]
    pub sector_counts: Vec<u64>,
}

#[inline]
fn flip_energy(sigma: i64, total: i64, n: f64, h: f64) -> f64 {
    2.0 * sigma as f64 * ((total - sigma) as f64 / n + h)
}

fn initial_spins(cfg: &ChainConfig, rng: &mut ChaCha8Rng) -> Vec<i8> {
    let fm = &cfg.model;
    let nf = fm.n_free();
    match cfg.init {
        InitialState::AllUp => vec![1; nf],
        InitialState::AllDown => vec![-1; nf],
        InitialState::Random => (0..nf)
            .map(|_| if rng.random::<bool>() { 1 } else { -1 })
            .collect(),
        InitialState::FieldAligned => {
            let h_eff = cfg.h + fm.s_n() - fm.r_n();
            if h_eff > 0.0 {
                vec![1; nf]
            } else if h_eff < 0.0 {
                vec![-1; nf]
            } else {
                (0..nf).map(|i| if i % 2 == 0 { 1 } else { -1 }).collect()
            }
        }
    }
}

/// Mean and batch-means standard error over the last `BATCHES * b` samples.
fn batch_means(samples: &[f64]) -> (f64, f64) {
    let b = samples.len() / BATCHES;
    let used = &samples[samples.len() - b * BATCHES..];
    let means: Vec<f64> = used
        .chunks(b)
        .map(|c| c.iter().sum::<f64>() / b as f64)
        .collect();
    let grand = means.iter().sum::<f64>() / BATCHES as f64;
    let var = means.iter().map(|m| (m - grand).powi(2)).sum::<f64>() / (BATCHES - 1) as f64;
    (grand, (var / BATCHES as f64).sqrt())
}

/// Runs one chain. Equal configurations give bit-identical estimates.
pub fn run_chain(cfg: &ChainConfig) -> Result<McEstimate> {
    cfg.validate()?;
    let fm = &cfg.model;
    let nf = fm.n_free();
    let n = fm.n_total() as f64;
    if nf == 0 {
        let mut sector_counts = vec![0; 1];
        sector_counts[0] = cfg.sweeps as u64;
        return Ok(McEstimate {
            mean_magnetization: fm.s_n() - fm.r_n(),
            mean_free_spin: 0.0,
            std_error: 0.0,
            acceptance_rate: 0.0,
            final_sector: 0,
            sector_counts,
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut spins = initial_spins(cfg, &mut rng);
    let pinned = fm.n_plus() as i64 - fm.n_minus() as i64;
    let mut free_total: i64 = spins.iter().map(|&s| s as i64).sum();

    let mut accepted = 0u64;
    let mut proposed = 0u64;
    let mut m_samples = Vec::with_capacity(cfg.sweeps);
    let mut free_samples = Vec::with_capacity(cfg.sweeps);
    let mut sector_counts = vec![0u64; nf + 1];

    for sweep in 0..cfg.burn_in_sweeps + cfg.sweeps {
        let measuring = sweep >= cfg.burn_in_sweeps;
        for _ in 0..nf {
            let i = rng.random_range(0..nf);
            let sigma = spins[i] as i64;
            let dh = flip_energy(sigma, pinned + free_total, n, cfg.h);
            let acc = cfg.dynamics.acceptance(cfg.beta, dh);
            if measuring {
                proposed += 1;
            }
            if acc >= 1.0 || rng.random::<f64>() < acc {
                spins[i] = -spins[i];
                free_total -= 2 * sigma;
                if measuring {
                    accepted += 1;
                }
            }
        }
        if measuring {
            m_samples.push((pinned + free_total) as f64 / n);
            free_samples.push(free_total as f64 / nf as f64);
            sector_counts[((free_total + nf as i64) / 2) as usize] += 1;
        }
    }

    let (mean_magnetization, std_error) = batch_means(&m_samples);
    let (mean_free_spin, _) = batch_means(&free_samples);
    Ok(McEstimate {
        mean_magnetization,
        mean_free_spin,
        std_error,
        acceptance_rate: accepted as f64 / proposed as f64,
        final_sector: ((free_total + nf as i64) / 2) as usize,
        sector_counts,
    })
}

/// Independent chains evaluated concurrently; output order follows input.
pub fn run_chains(cfgs: &[ChainConfig]) -> Result<Vec<McEstimate>> {
    cfgs.par_iter().map(run_chain).collect()
}

/// Largest detailed-balance violation `|pi(x) P(x,y) - pi(y) P(y,x)|` of the
/// single-flip chain over all `2^n_free` free-spin states.
///
/// `pi` comes from full enumeration of the conditional measure, not from the
/// energy differences the chain uses.
pub fn transition_matrix_check(
    fm: &FiniteModel,
    beta: f64,
    h: f64,
    dynamics: Dynamics,
) -> Result<f64> {
    let nf = fm.n_free();
    if nf > MAX_MATRIX_FREE {
        return Err(Error::Size {
            what: "free sites for transition matrix",
            size: nf,
            limit: MAX_MATRIX_FREE,
        });
    }
    if nf == 0 {
        validate_beta(beta)?;
        return Ok(0.0);
    }
    let pi = enumerate_conditional_measure(fm, beta, h)?.full;
    let n = fm.n_total() as f64;
    let pinned = fm.n_plus() as i64 - fm.n_minus() as i64;
    let spin = |x: usize, i: usize| if x >> i & 1 == 1 { 1i64 } else { -1 };
    let total = |x: usize| pinned + 2 * x.count_ones() as i64 - nf as i64;

    // rows hold only the nf off-diagonal entries; the rest of the row is the
    // holding probability and plays no part in detailed balance
    let rows: Vec<Vec<f64>> = (0..1usize << nf)
        .map(|x| {
            (0..nf)
                .map(|i| {
                    dynamics.acceptance(beta, flip_energy(spin(x, i), total(x), n, h)) / nf as f64
                })
                .collect()
        })
        .collect();

    let mut worst = 0.0f64;
    for (x, row) in rows.iter().enumerate() {
        let off: f64 = row.iter().sum();
        debug_assert!(off <= 1.0 + 1e-12);
        for (i, &p_xy) in row.iter().enumerate() {
            let y = x ^ (1 << i);
            let p_yx = rows[y][i];
            worst = worst.max((pi[x] * p_xy - pi[y] * p_yx).abs());
        }
    }
    Ok(worst)
}
