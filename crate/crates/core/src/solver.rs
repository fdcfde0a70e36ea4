//! Global minimization of the free energy and the limiting magnetization.
//!
//! The derivative `i'(z) = artanh(z) - beta (t z + h_eff)` is increasing on
//! `(-1, -z_c)`, decreasing on `(-z_c, z_c)` and increasing on `(z_c, 1)` with
//! `z_c = sqrt(1 - 1/(beta t))` (only the first and last pieces exist when
//! `beta t <= 1`). The scan grid always contains `±z_c`, so each monotone piece
//! holding a root shows up as a sign change between adjacent scan points.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    free_energy, free_energy_deriv, free_energy_second_deriv, magnetization_from_z,
    self_consistency_residual, ModelParams,
};

/// Interior points of the uniform scan grid (odd, so `z = 0` is on it).
pub const SCAN_POINTS: usize = 4001;

/// Stationary points are accepted once `|z - tanh(...)|` is below this.
pub const RESIDUAL_TOL: f64 = 1e-12;

/// Two minima whose values differ by less than this are compared by parity.
pub const TIE_TOL: f64 = 1e-10;

const REFINE_TARGET: f64 = 1e-15;
const MAX_REFINE_STEPS: usize = 300;

/// Iteration budget of [`solve_self_consistency`].
pub const MAX_FIXED_POINT_ITERATIONS: usize = 10_000;

/// Global minimizer(s) of the free energy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinimizerSet {
    /// One or two `z` values, ascending.
    pub minimizers: Vec<f64>,
    /// Common minimal value of the free energy.
    pub value: f64,
    /// Second derivative at each minimizer.
    pub curvature: Vec<f64>,
}

impl MinimizerSet {
    pub fn unique(&self) -> Option<f64> {
        match self.minimizers.as_slice() {
            [z] => Some(*z),
            _ => None,
        }
    }
}

/// One-sided limits of the magnetization as `h -> r - s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MagnetizationLimits {
    pub beta: f64,
    pub s: f64,
    pub r: f64,
    /// Limit as `h` increases to `r - s`.
    pub m_minus: f64,
    /// Limit as `h` decreases to `r - s`.
    pub m_plus: f64,
    pub z_minus: f64,
    pub z_plus: f64,
    /// `m_plus - m_minus = 2 t z_plus`.
    pub jump: f64,
}

fn scan_grid(p: &ModelParams) -> Vec<f64> {
    let n = SCAN_POINTS;
    let mut grid: Vec<f64> = (1..=n)
        .map(|i| -1.0 + 2.0 * i as f64 / (n + 1) as f64)
        .collect();
    let bt = p.beta_coupling();
    if bt > 1.0 {
        let zc = (1.0 - 1.0 / bt).sqrt();
        grid.push(zc);
        grid.push(-zc);
        grid.sort_by(f64::total_cmp);
        grid.dedup();
    }
    grid
}

/// Brackets of local minima found on the scan grid: either an exact grid
/// root or an interval `(lo, hi)` with residual `< 0` at `lo` and `> 0` at `hi`.
enum Candidate {
    Exact(f64),
    Bracket(f64, f64),
}

fn local_minimum_candidates(p: &ModelParams) -> Vec<Candidate> {
    let grid = scan_grid(p);
    // virtual endpoints: the derivative tends to -inf at -1 and +inf at +1
    let mut pts = Vec::with_capacity(grid.len() + 2);
    pts.push((-1.0, -1i8));
    for &z in &grid {
        let g = self_consistency_residual(p, z);
        let sign = if g > 0.0 {
            1
        } else if g < 0.0 {
            -1
        } else {
            0
        };
        pts.push((z, sign));
    }
    pts.push((1.0, 1i8));

    let mut out = Vec::new();
    let mut last_neg: Option<usize> = None;
    for (i, &(z, sign)) in pts.iter().enumerate() {
        match sign {
            -1 => last_neg = Some(i),
            1 => {
                if let Some(j) = last_neg.take() {
                    // a zero between the last negative point and here is the root
                    match pts[j + 1..i].iter().find(|(_, s)| *s == 0) {
                        Some(&(root, _)) => out.push(Candidate::Exact(root)),
                        None => out.push(Candidate::Bracket(pts[j].0, z)),
                    }
                }
            }
            _ => {}
        }
    }
    out
}

/// Safeguarded Newton on the free-energy derivative inside a sign bracket.
fn refine_minimum(p: &ModelParams, lo: f64, hi: f64) -> f64 {
    let (mut lo, mut hi) = (lo, hi);
    let mut z = 0.5 * (lo + hi);
    let mut best = (z, f64::INFINITY);
    for _ in 0..MAX_REFINE_STEPS {
        let g = self_consistency_residual(p, z);
        if g.abs() < best.1 {
            best = (z, g.abs());
        }
        if g.abs() <= REFINE_TARGET {
            return z;
        }
        if g < 0.0 {
            lo = z;
        } else {
            hi = z;
        }
        if hi - lo <= 4.0 * f64::EPSILON * z.abs().max(1e-300) {
            break;
        }
        let newton = match (free_energy_deriv(p, z), free_energy_second_deriv(p, z)) {
            (Ok(d), Ok(c)) if c > 0.0 => Some(z - d / c),
            _ => None,
        };
        z = match newton {
            Some(next) if next > lo && next < hi => next,
            _ => 0.5 * (lo + hi),
        };
    }
    best.0
}

/// All global minimizers of the free energy on `[-1, 1]`.
///
/// When two wells come within [`TIE_TOL`] of each other the winner follows
/// from parity: the free energy is `even(z) - beta h_eff z`, so the well on the
/// side of `h_eff` is strictly lower unless `h_eff == 0`, in which case both
/// `±z0` are returned.
pub fn minimize_free_energy(p: &ModelParams) -> Result<MinimizerSet> {
    let mut minima: Vec<(f64, f64)> = local_minimum_candidates(p)
        .into_iter()
        .map(|c| match c {
            Candidate::Exact(z) => z,
            Candidate::Bracket(lo, hi) => refine_minimum(p, lo, hi),
        })
        .map(|z| free_energy(p, z).map(|v| (z, v)))
        .collect::<Result<_>>()?;
    minima.sort_by(|a, b| a.1.total_cmp(&b.1));
    let best = minima
        .first()
        .copied()
        .ok_or_else(|| Error::InvalidParameter("free energy has no interior minimum".into()))?;
    let tied: Vec<(f64, f64)> = minima
        .iter()
        .copied()
        .filter(|&(_, v)| v - best.1 < TIE_TOL)
        .collect();

    let h_eff = p.effective_field();
    let zs: Vec<f64> = if tied.len() == 1 {
        vec![best.0]
    } else if h_eff == 0.0 {
        let z0 = tied.iter().map(|(z, _)| z.abs()).sum::<f64>() / tied.len() as f64;
        vec![-z0, z0]
    } else {
        let pick = tied
            .iter()
            .find(|(z, _)| z * h_eff > 0.0)
            .copied()
            .unwrap_or(best);
        vec![pick.0]
    };

    let value = free_energy(p, zs[0])?;
    let curvature = zs
        .iter()
        .map(|&z| free_energy_second_deriv(p, z))
        .collect::<Result<Vec<_>>>()?;
    Ok(MinimizerSet {
        minimizers: zs,
        value,
        curvature,
    })
}

/// A root of the self-consistency equation reached from `z_init`.
///
/// Damped fixed-point steps `z <- (1 - l) z + l tanh(...)` with `l` halved
/// until the residual drops; a full step is taken when no damping helps
/// (leaving a repelling root). Newton steps take over once they reduce the
/// residual further than the damped step would.
pub fn solve_self_consistency(p: &ModelParams, z_init: f64) -> Result<f64> {
    if z_init.is_nan() || z_init.abs() > 1.0 {
        return Err(Error::Domain(format!("z_init = {z_init} outside [-1, 1]")));
    }
    let bt = p.beta_coupling();
    let field = p.beta() * p.effective_field();
    let map = |z: f64| (bt * z + field).tanh();

    let mut z = z_init;
    let mut res = self_consistency_residual(p, z);
    for _ in 0..MAX_FIXED_POINT_ITERATIONS {
        if res.abs() < RESIDUAL_TOL {
            return Ok(z);
        }
        // Newton on the residual g(z) = z - tanh(bt z + field)
        let u = bt * z + field;
        let slope = 1.0 - bt * (1.0 - u.tanh().powi(2));
        if slope > 0.0 {
            let next = z - res / slope;
            if next.abs() <= 1.0 {
                let r_next = self_consistency_residual(p, next);
                if r_next.abs() < 0.5 * res.abs() {
                    z = next;
                    res = r_next;
                    continue;
                }
            }
        }
        let target = map(z);
        let mut lambda = 1.0;
        let mut stepped = false;
        while lambda >= 1.0 / 1024.0 {
            let next = (1.0 - lambda) * z + lambda * target;
            let r_next = self_consistency_residual(p, next);
            if r_next.abs() < res.abs() {
                z = next;
                res = r_next;
                stepped = true;
                break;
            }
            lambda *= 0.5;
        }
        if !stepped {
            if target == z {
                break;
            }
            z = target;
            res = self_consistency_residual(p, z);
        }
    }
    if res.abs() < RESIDUAL_TOL {
        return Ok(z);
    }
    Err(Error::NonConvergence {
        iterations: MAX_FIXED_POINT_ITERATIONS,
        last: z,
        residual: res,
    })
}

/// Limiting specific magnetization `s - r + t z` at the global minimizer.
///
/// Fails with [`Error::Ambiguous`] on the discontinuity `h = r - s`,
/// `beta > 1/t`, where [`directional_limits`] applies instead.
pub fn specific_magnetization(p: &ModelParams) -> Result<f64> {
    let set = minimize_free_energy(p)?;
    match set.unique() {
        Some(z) => Ok(magnetization_from_z(p, z)),
        None => Err(Error::Ambiguous {
            z: set.minimizers[1],
        }),
    }
}

/// Nonnegative root of `z = tanh(beta_t z)`: zero for `beta_t <= 1`,
/// otherwise found by bisection on `[1e-16, 1 - 1e-16]`.
pub fn spontaneous_z(beta_t: f64) -> f64 {
    if beta_t.is_nan() || beta_t <= 1.0 {
        return 0.0;
    }
    let g = |z: f64| z - (beta_t * z).tanh();
    let (mut lo, mut hi) = (1e-16, 1.0 - 1e-16);
    if g(hi) <= 0.0 {
        // root lies above the largest double below 1
        return hi;
    }
    while hi - lo > 1e-13 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // finish to full precision; the bracket is already tight
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// One-sided limits of the magnetization at `h = r - s`.
///
/// On that slice the free energy is even, so the limits from above and below
/// select the right and left wells `±z0` with `z0 = spontaneous_z(beta t)`.
pub fn directional_limits(beta: f64, s: f64, r: f64) -> Result<MagnetizationLimits> {
    let p = ModelParams::new(beta, s, r, r - s)?;
    let t = p.coupling();
    let z0 = spontaneous_z(beta * t);
    Ok(MagnetizationLimits {
        beta,
        s,
        r,
        m_minus: magnetization_from_z(&p, -z0),
        m_plus: magnetization_from_z(&p, z0),
        z_minus: -z0,
        z_plus: z0,
        jump: 2.0 * t * z0,
    })
}

/// One probe of the field-approach cross-check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ApproachStep {
    pub offset: f64,
    pub m_below: f64,
    pub m_above: f64,
    pub dist_below: f64,
    pub dist_above: f64,
}

/// Evaluates the magnetization at `h = r - s ± 10^-k`, `k = 3..=8`, and
/// reports the distances to the computed directional limits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitCrossCheck {
    pub limits: MagnetizationLimits,
    pub steps: Vec<ApproachStep>,
}

impl LimitCrossCheck {
    /// Distances shrink monotonically and the closest probe is within `tol`.
    pub fn converged(&self, tol: f64) -> bool {
        let mono = self.steps.windows(2).all(|w| {
            w[1].dist_below <= w[0].dist_below + 1e-15 && w[1].dist_above <= w[0].dist_above + 1e-15
        });
        let last = self.steps.last();
        mono && last.is_some_and(|l| l.dist_below < tol && l.dist_above < tol)
    }
}

pub fn cross_check_limits(beta: f64, s: f64, r: f64) -> Result<LimitCrossCheck> {
    let limits = directional_limits(beta, s, r)?;
    let base = ModelParams::new(beta, s, r, r - s)?;
    let steps = (3..=8)
        .map(|k| {
            let offset = 10f64.powi(-k);
            let m_below = specific_magnetization(&base.with_field(r - s - offset)?)?;
            let m_above = specific_magnetization(&base.with_field(r - s + offset)?)?;
            Ok(ApproachStep {
                offset,
                m_below,
                m_above,
                dist_below: (m_below - limits.m_minus).abs(),
                dist_above: (m_above - limits.m_plus).abs(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LimitCrossCheck { limits, steps })
}
