//! Domain types, the mean-field Hamiltonian and the free-energy functional.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Parameters are rejected when `s + r` comes closer to 1 than this.
pub const COUPLING_MARGIN: f64 = 1e-12;

/// A point `(beta, s, r, h)` of the limiting model.
///
/// `beta` is the inverse temperature, `s` and `r` the pinned-plus and
/// pinned-minus fractions, `h` the external field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    beta: f64,
    s: f64,
    r: f64,
    h: f64,
}

/// Validates a pinned-fraction pair.
pub fn validate_fractions(s: f64, r: f64) -> Result<()> {
    if !(s.is_finite() && r.is_finite()) {
        return Err(invalid(format!(
            "fractions must be finite (s = {s}, r = {r})"
        )));
    }
    if s < 0.0 || r < 0.0 {
        return Err(invalid(format!(
            "fractions must be nonnegative (s = {s}, r = {r})"
        )));
    }
    if s + r >= 1.0 - COUPLING_MARGIN {
        return Err(invalid(format!("need s + r < 1 (s = {s}, r = {r})")));
    }
    Ok(())
}

pub fn validate_beta(beta: f64) -> Result<()> {
    if !(beta.is_finite() && beta > 0.0) {
        return Err(invalid(format!(
            "beta must be finite and positive (beta = {beta})"
        )));
    }
    Ok(())
}

/// Fraction of free sites, `1 - s - r`.
///
/// Every code path computes the coupling through this function so that
/// quantities derived from it agree bit for bit.
#[inline]
pub fn coupling(s: f64, r: f64) -> f64 {
    1.0 - s - r
}

impl ModelParams {
    pub fn new(beta: f64, s: f64, r: f64, h: f64) -> Result<Self> {
        validate_beta(beta)?;
        validate_fractions(s, r)?;
        if !h.is_finite() {
            return Err(invalid(format!("field must be finite (h = {h})")));
        }
        Ok(Self { beta, s, r, h })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    /// `t = 1 - s - r`, the coupling felt by the free spins.
    pub fn coupling(&self) -> f64 {
        coupling(self.s, self.r)
    }

    /// `h + s - r`, the field felt by the free spins once the pinned ones
    /// are absorbed into the Hamiltonian.
    pub fn effective_field(&self) -> f64 {
        self.h + self.s - self.r
    }

    /// `beta * t`, the single parameter controlling the symmetric double well.
    pub fn beta_coupling(&self) -> f64 {
        self.beta * self.coupling()
    }

    /// Same model with a different field.
    pub fn with_field(&self, h: f64) -> Result<Self> {
        Self::new(self.beta, self.s, self.r, h)
    }
}

/// `x log x`, extended by continuity to `0` at `x = 0`.
fn xlogx_half(one_pm_z: f64) -> f64 {
    if one_pm_z == 0.0 {
        0.0
    } else {
        0.5 * one_pm_z * one_pm_z.ln()
    }
}

fn check_closed(z: f64) -> Result<()> {
    if z.is_nan() || z.abs() > 1.0 {
        return Err(Error::Domain(format!("z = {z} outside [-1, 1]")));
    }
    Ok(())
}

fn check_open(z: f64) -> Result<()> {
    if z.is_nan() || z.abs() >= 1.0 {
        return Err(Error::Domain(format!("z = {z} outside (-1, 1)")));
    }
    Ok(())
}

/// The entropy part `((1-z)/2) log(1-z) + ((1+z)/2) log(1+z)`.
pub fn entropy_term(z: f64) -> f64 {
    if z.abs() < 0.5 {
        // ln_1p keeps the relative accuracy near the origin
        0.5 * ((1.0 - z) * (-z).ln_1p() + (1.0 + z) * z.ln_1p())
    } else {
        xlogx_half(1.0 - z) + xlogx_half(1.0 + z)
    }
}

/// The free-energy functional
/// `i(z) = -beta t z^2 / 2 - beta (s - r + h) z + entropy(z)` on `[-1, 1]`.
pub fn free_energy(p: &ModelParams, z: f64) -> Result<f64> {
    check_closed(z)?;
    let b = p.beta();
    Ok(-0.5 * b * p.coupling() * z * z - b * p.effective_field() * z + entropy_term(z))
}

/// First derivative `-beta t z - beta h_eff + artanh(z)`.
pub fn free_energy_deriv(p: &ModelParams, z: f64) -> Result<f64> {
    check_open(z)?;
    Ok(-p.beta() * (p.coupling() * z + p.effective_field()) + z.atanh())
}

/// Second derivative `-beta t + 1 / (1 - z^2)`.
pub fn free_energy_second_deriv(p: &ModelParams, z: f64) -> Result<f64> {
    check_open(z)?;
    Ok(-p.beta_coupling() + 1.0 / ((1.0 - z) * (1.0 + z)))
}

/// `z - tanh(beta (t z + h_eff))`. Has the sign of the free-energy derivative
/// and vanishes exactly at its stationary points, but stays bounded at `±1`.
pub fn self_consistency_residual(p: &ModelParams, z: f64) -> f64 {
    z - (p.beta() * (p.coupling() * z + p.effective_field())).tanh()
}

/// Specific magnetization corresponding to a free-spin mean `z`:
/// `s - r + t z`.
pub fn magnetization_from_z(p: &ModelParams, z: f64) -> f64 {
    p.s() - p.r() + p.coupling() * z
}

/// Integer composition of `N` sites into pinned-plus, pinned-minus and free.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FiniteModel {
    n_total: usize,
    n_plus: usize,
    n_minus: usize,
    n_free: usize,
}

/// How target fractions are turned into integer site counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Rounding {
    #[default]
    HalfAwayFromZero,
    Floor,
}

impl FiniteModel {
    pub fn new(n_plus: usize, n_minus: usize, n_free: usize) -> Result<Self> {
        let n_total = n_plus + n_minus + n_free;
        if n_total == 0 {
            return Err(invalid("model needs at least one site"));
        }
        Ok(Self {
            n_total,
            n_plus,
            n_minus,
            n_free,
        })
    }

    /// Builds the composition with `round(N s)` plus sites and `round(N r)`
    /// minus sites. At least one free site must remain.
    pub fn from_fractions(n_total: usize, s: f64, r: f64) -> Result<Self> {
        Self::from_fractions_with(n_total, s, r, Rounding::default())
    }

    pub fn from_fractions_with(n_total: usize, s: f64, r: f64, rounding: Rounding) -> Result<Self> {
        validate_fractions(s, r)?;
        if n_total == 0 {
            return Err(invalid("model needs at least one site"));
        }
        let count = |x: f64| {
            let v = x * n_total as f64;
            match rounding {
                Rounding::HalfAwayFromZero => v.round() as usize,
                Rounding::Floor => v.floor() as usize,
            }
        };
        let (n_plus, n_minus) = (count(s), count(r));
        if n_plus + n_minus >= n_total {
            return Err(invalid(format!(
                "N = {n_total} leaves no free site for s = {s}, r = {r}"
            )));
        }
        Self::new(n_plus, n_minus, n_total - n_plus - n_minus)
    }

    pub fn n_total(&self) -> usize {
        self.n_total
    }

    pub fn n_plus(&self) -> usize {
        self.n_plus
    }

    pub fn n_minus(&self) -> usize {
        self.n_minus
    }

    pub fn n_free(&self) -> usize {
        self.n_free
    }

    pub fn s_n(&self) -> f64 {
        self.n_plus as f64 / self.n_total as f64
    }

    pub fn r_n(&self) -> f64 {
        self.n_minus as f64 / self.n_total as f64
    }

    pub fn t_n(&self) -> f64 {
        self.n_free as f64 / self.n_total as f64
    }

    /// Same model with the pinned groups exchanged.
    pub fn mirrored(&self) -> Self {
        Self {
            n_plus: self.n_minus,
            n_minus: self.n_plus,
            ..*self
        }
    }

    /// Total spin `sum_i sigma_i` in sector `k` (no range check).
    pub(crate) fn total_spin(&self, k: usize) -> i64 {
        self.n_plus as i64 - self.n_minus as i64 + 2 * k as i64 - self.n_free as i64
    }

    /// Per-site magnetization in sector `k` (no range check).
    pub(crate) fn sector_m(&self, k: usize) -> f64 {
        self.total_spin(k) as f64 / self.n_total as f64
    }

    pub fn sector(&self, k: usize) -> Result<SectorMagnetization> {
        if k > self.n_free {
            return Err(Error::Range {
                k,
                n_free: self.n_free,
            });
        }
        Ok(SectorMagnetization {
            k,
            m_n: self.sector_m(k),
        })
    }
}

/// Sector `k` (number of `+1` free spins) and its per-site magnetization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SectorMagnetization {
    pub k: usize,
    pub m_n: f64,
}

/// `H_N / N = -(m^2/2 + h m) - 1/(2N)` for any configuration in sector `k`.
pub fn hamiltonian_per_site(fm: &FiniteModel, h: f64, k: usize) -> Result<f64> {
    let m = fm.sector(k)?.m_n;
    Ok(-(0.5 * m * m + h * m) - 0.5 / fm.n_total() as f64)
}
