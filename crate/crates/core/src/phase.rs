//! Critical inverse temperatures and transition-regime classification.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{coupling, validate_beta, validate_fractions};
use crate::solver::{directional_limits, spontaneous_z, MagnetizationLimits};

/// `|s - r|` at or below this counts as `s = r`.
pub const DIAGONAL_TOL: f64 = 1e-15;

/// Relative distance to the second critical point that counts as equality.
pub const BETA_REL_TOL: f64 = 1e-12;

/// A one-sided limit with magnitude below this counts as zero when a report is
/// certified against recomputed limits.
pub const ZERO_MAGNETIZATION_TOL: f64 = 1e-9;

/// Part of the admissible `(s, r)` triangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Region {
    /// `s = r < 1/2`.
    Diagonal,
    /// `s >= 1/2` or `r >= 1/2`.
    Dominant,
    /// `s, r < 1/2` with `s != r`.
    OffDiagonalSmall,
}

impl Region {
    pub fn as_str(&self) -> &'static str {
        match self {
            Region::Diagonal => "Diagonal",
            Region::Dominant => "Dominant",
            Region::OffDiagonalSmall => "OffDiagonalSmall",
        }
    }
}

/// Behaviour of the magnetization at `h = r - s`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Regime {
    /// Both one-sided limits equal `s - r`.
    NoJump,
    /// Jump between `±m` (`s = r`).
    SymmetricFlip,
    /// Jump with both limits carrying the sign of `s - r`.
    JumpNoPhaseChange,
    /// One limit is zero: ordered on one side, disordered on the other.
    OrderDisorder,
    /// Limits of opposite sign, not symmetric about zero.
    AsymmetricFlip,
}

impl Regime {
    pub fn as_str(&self) -> &'static str {
        match self {
            Regime::NoJump => "NoJump",
            Regime::SymmetricFlip => "SymmetricFlip",
            Regime::JumpNoPhaseChange => "JumpNoPhaseChange",
            Regime::OrderDisorder => "OrderDisorder",
            Regime::AsymmetricFlip => "AsymmetricFlip",
        }
    }
}

/// First critical inverse temperature `1 / (1 - s - r)`.
pub fn beta_star(s: f64, r: f64) -> Result<f64> {
    validate_fractions(s, r)?;
    Ok(1.0 / coupling(s, r))
}

/// Second critical inverse temperature `artanh(|s-r| / t) / |s-r|`, defined
/// for `s, r < 1/2`, `s != r`.
pub fn beta_double_star(s: f64, r: f64) -> Result<f64> {
    validate_fractions(s, r)?;
    if s >= 0.5 || r >= 0.5 {
        return Err(Error::Domain(format!(
            "second critical point needs s, r < 1/2 (s = {s}, r = {r})"
        )));
    }
    let d = (s - r).abs();
    if d <= DIAGONAL_TOL {
        return Err(Error::Domain(format!(
            "second critical point needs s != r (s = r = {s})"
        )));
    }
    Ok((d / coupling(s, r)).atanh() / d)
}

pub fn classify_region(s: f64, r: f64) -> Result<Region> {
    validate_fractions(s, r)?;
    Ok(if s >= 0.5 || r >= 0.5 {
        Region::Dominant
    } else if (s - r).abs() <= DIAGONAL_TOL {
        Region::Diagonal
    } else {
        Region::OffDiagonalSmall
    })
}

/// Regime classification at a parameter point, with the limits it rests on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransitionReport {
    pub region: Region,
    pub beta_star: f64,
    pub beta_double_star: Option<f64>,
    pub regime: Regime,
    pub limits: MagnetizationLimits,
    /// `beta - beta_star`.
    pub beta_star_distance: f64,
    /// `beta - beta_double_star`, when the latter exists.
    pub beta_double_star_distance: Option<f64>,
    /// `s - r`.
    pub diagonal_distance: f64,
}

/// Classifies the jump at `h = r - s`.
///
/// The regime is decided from `(s, r, beta)` alone; the attached limits come
/// from [`directional_limits`] and can be checked with [`regime_from_limits`].
pub fn classify_transition(s: f64, r: f64, beta: f64) -> Result<TransitionReport> {
    validate_beta(beta)?;
    let region = classify_region(s, r)?;
    let bstar = beta_star(s, r)?;
    let bss = match region {
        Region::OffDiagonalSmall => Some(beta_double_star(s, r)?),
        _ => None,
    };
    let limits = directional_limits(beta, s, r)?;

    // same test as spontaneous_z, so NoJump and a zero jump coincide
    let regime = if beta * coupling(s, r) <= 1.0 {
        Regime::NoJump
    } else {
        match region {
            Region::Diagonal => Regime::SymmetricFlip,
            Region::Dominant => Regime::JumpNoPhaseChange,
            Region::OffDiagonalSmall => {
                let bss = bss.expect("defined off the diagonal");
                if (beta - bss).abs() <= BETA_REL_TOL * bss {
                    Regime::OrderDisorder
                } else if beta < bss {
                    Regime::JumpNoPhaseChange
                } else {
                    Regime::AsymmetricFlip
                }
            }
        }
    };

    Ok(TransitionReport {
        region,
        beta_star: bstar,
        beta_double_star: bss,
        regime,
        limits,
        beta_star_distance: beta - bstar,
        beta_double_star_distance: bss.map(|b| beta - b),
        diagonal_distance: s - r,
    })
}

/// Reads the regime off the signs of the one-sided limits.
///
/// Limits within [`ZERO_MAGNETIZATION_TOL`] of zero count as zero.
pub fn regime_from_limits(limits: &MagnetizationLimits) -> Regime {
    let sign = |m: f64| {
        if m.abs() <= ZERO_MAGNETIZATION_TOL {
            0
        } else if m > 0.0 {
            1
        } else {
            -1
        }
    };
    let (lo, hi) = (sign(limits.m_minus), sign(limits.m_plus));
    if limits.jump == 0.0 {
        Regime::NoJump
    } else if lo == 0 || hi == 0 {
        Regime::OrderDisorder
    } else if lo == hi {
        Regime::JumpNoPhaseChange
    } else if (limits.m_plus + limits.m_minus).abs() <= 1e-12 {
        Regime::SymmetricFlip
    } else {
        Regime::AsymmetricFlip
    }
}

impl TransitionReport {
    /// Whether the claimed regime matches the signs of freshly recomputed
    /// directional limits.
    pub fn sign_pattern_holds(&self) -> bool {
        match directional_limits(self.limits.beta, self.limits.s, self.limits.r) {
            Ok(fresh) => regime_from_limits(&fresh) == self.regime,
            Err(_) => false,
        }
    }
}

/// Size of the jump `m_plus - m_minus = 2 t z0(beta t)`.
pub fn jump_magnitude(s: f64, r: f64, beta: f64) -> Result<f64> {
    validate_fractions(s, r)?;
    validate_beta(beta)?;
    let t = coupling(s, r);
    Ok(2.0 * t * spontaneous_z(beta * t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_small_offdiag(rng: &mut ChaCha8Rng) -> (f64, f64) {
        loop {
            let s: f64 = rng.random_range(0.0..0.5);
            let r: f64 = rng.random_range(0.0..0.5);
            if (s - r).abs() > 1e-3 {
                return (s, r);
            }
        }
    }

    #[test]
    fn beta_star_examples() {
        assert_eq!(beta_star(0.0, 0.0).unwrap(), 1.0);
        assert_eq!(beta_star(0.25, 0.25).unwrap(), 2.0);
        assert!((beta_star(0.2, 0.1).unwrap() - 10.0 / 7.0).abs() < 1e-12);
        assert!(beta_star(0.6, 0.4).is_err());
    }

    #[test]
    fn beta_double_star_examples() {
        let expected = 5.0 * (4.0f64 / 3.0).ln();
        assert!((expected - 1.438410).abs() < 1e-6);
        assert!((beta_double_star(0.2, 0.1).unwrap() - expected).abs() < 1e-13);
        assert!((beta_double_star(0.1, 0.2).unwrap() - expected).abs() < 1e-13);
        assert!(matches!(beta_double_star(0.2, 0.2), Err(Error::Domain(_))));
        assert!(matches!(beta_double_star(0.6, 0.1), Err(Error::Domain(_))));
        assert!(matches!(beta_double_star(0.1, 0.5), Err(Error::Domain(_))));
    }

    #[test]
    fn double_star_exceeds_star() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let (s, r) = random_small_offdiag(&mut rng);
            assert!(beta_double_star(s, r).unwrap() > beta_star(s, r).unwrap());
        }
        for i in 0..20 {
            for j in 0..20 {
                let (s, r) = (i as f64 / 40.0, j as f64 / 40.0 + 0.0125);
                if r < 0.5 {
                    assert!(beta_double_star(s, r).unwrap() > beta_star(s, r).unwrap());
                }
            }
        }
    }

    #[test]
    fn region_examples() {
        assert_eq!(classify_region(0.3, 0.3).unwrap(), Region::Diagonal);
        assert_eq!(classify_region(0.6, 0.2).unwrap(), Region::Dominant);
        assert_eq!(classify_region(0.2, 0.1).unwrap(), Region::OffDiagonalSmall);
        assert_eq!(classify_region(0.5, 0.1).unwrap(), Region::Dominant);
        assert_eq!(classify_region(0.0, 0.7).unwrap(), Region::Dominant);
        assert!(classify_region(0.5, 0.5).is_err());
        assert!(classify_region(-0.1, 0.2).is_err());
    }

    #[test]
    fn transition_examples() {
        let rep = classify_transition(0.3, 0.3, 1.5).unwrap();
        assert_eq!(rep.regime, Regime::NoJump);
        assert!((rep.beta_star - 2.5).abs() < 1e-12);

        let rep = classify_transition(0.2, 0.1, 1.433).unwrap();
        assert_eq!(rep.regime, Regime::JumpNoPhaseChange);
        assert!(rep.limits.m_minus > 0.0 && rep.limits.m_plus > 0.0);

        let bss = beta_double_star(0.2, 0.1).unwrap();
        let rep = classify_transition(0.2, 0.1, bss).unwrap();
        assert_eq!(rep.regime, Regime::OrderDisorder);
        assert!(rep.limits.m_minus.abs() < 1e-6);
        assert!((rep.limits.z_plus - 1.0 / 7.0).abs() < 1e-7);

        // the six-digit literal sits 3.6e-7 below the critical point, where
        // dm_-/dbeta is about -5, so m_- is still slightly positive there
        let rep = classify_transition(0.2, 0.1, 1.438410).unwrap();
        assert_eq!(rep.regime, Regime::JumpNoPhaseChange);
        assert!(rep.limits.m_minus > 0.0 && rep.limits.m_minus < 3e-6);

        let rep = classify_transition(0.2, 0.1, 2.0).unwrap();
        assert_eq!(rep.regime, Regime::AsymmetricFlip);
        assert!(rep.limits.m_minus < 0.0 && rep.limits.m_plus > 0.0);
    }

    #[test]
    fn mirrored_offdiagonal_pattern() {
        let bss = beta_double_star(0.1, 0.2).unwrap();
        let rep = classify_transition(0.1, 0.2, bss).unwrap();
        assert_eq!(rep.regime, Regime::OrderDisorder);
        assert!(rep.limits.m_plus.abs() < 1e-9 && rep.limits.m_minus < 0.0);
        let rep = classify_transition(0.1, 0.2, 1.435).unwrap();
        assert_eq!(rep.regime, Regime::JumpNoPhaseChange);
        assert!(rep.limits.m_plus < 0.0);
        assert!(rep.sign_pattern_holds());
    }

    #[test]
    fn half_boundary_stays_positive() {
        for beta in [4.0, 10.0, 30.0] {
            let rep = classify_transition(0.5, 0.2, beta).unwrap();
            assert_eq!(rep.regime, Regime::JumpNoPhaseChange);
            assert!(rep.limits.m_minus > 0.0);
            assert!(rep.beta_double_star.is_none());
        }
    }

    #[test]
    fn jump_examples() {
        let z = spontaneous_z(2.0);
        assert!((jump_magnitude(0.0, 0.0, 2.0).unwrap() - 1.915009).abs() < 1e-6);
        let scaled = jump_magnitude(0.2, 0.2, 10.0 / 3.0).unwrap();
        assert!((scaled - 0.6 * 2.0 * z).abs() < 1e-12);
        assert!((scaled - 1.149005).abs() < 1e-6);
        assert_eq!(jump_magnitude(0.3, 0.2, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn jump_switches_on_at_beta_star() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let s: f64 = rng.random_range(0.0..0.9);
            let r: f64 = rng.random_range(0.0..(0.95 - s));
            let b = beta_star(s, r).unwrap();
            assert_eq!(jump_magnitude(s, r, b * (1.0 - 1e-6)).unwrap(), 0.0);
            assert!(jump_magnitude(s, r, b * (1.0 + 1e-3)).unwrap() > 0.0);
        }
    }

    #[test]
    fn spontaneous_root_at_double_star() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..10 {
            let (s, r) = random_small_offdiag(&mut rng);
            let bss = beta_double_star(s, r).unwrap();
            let t = 1.0 - s - r;
            let z0 = spontaneous_z(bss * t);
            assert!((z0 - (s - r).abs() / t).abs() < 1e-7);
            let l = directional_limits(bss, s, r).unwrap();
            let toward_zero = if s > r { l.m_minus } else { l.m_plus };
            assert!(toward_zero.abs() < 1e-6);
        }
    }

    #[test]
    fn reports_match_recomputed_signs() {
        for i in 0..20 {
            for j in 0..20 {
                let (s, r) = (i as f64 / 20.0, j as f64 / 20.0);
                if s + r >= 0.99 {
                    continue;
                }
                for beta in [0.5, 1.3, 2.0, 4.0, 12.0] {
                    let rep = classify_transition(s, r, beta).unwrap();
                    assert!(rep.sign_pattern_holds(), "{s},{r},{beta}: {rep:?}");
                }
            }
        }
    }

    #[test]
    fn dominant_region_limits_are_positive() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..20 {
            let s: f64 = rng.random_range(0.5..0.95);
            let r: f64 = rng.random_range(0.0..(0.99 - s).min(0.5));
            let b = beta_star(s, r).unwrap();
            let beta = b * rng.random_range(1.0..10.0) + 1e-9;
            let l = directional_limits(beta, s, r).unwrap();
            assert!(l.m_minus > 0.0 && l.m_plus > 0.0, "{s},{r},{beta}: {l:?}");
        }
    }
}
