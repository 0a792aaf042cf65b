use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::Action;
use crate::grid::GridCase;

/// One success/failure pattern of an attack and its probability.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub success_mask: Vec<bool>,
    pub probability: f64,
}

/// Outcomes of an attack with independent per-load success probabilities.
///
/// Only fractional entries vary: loads at level 1 always succeed and loads at
/// level 0 always fail, so `2^f` outcomes are produced for `f` fractional
/// entries. The i-th fractional entry is bit `i` of the outcome counter.
pub fn enumerate_outcomes(a: &Action, support_limit: usize) -> Result<Vec<Outcome>> {
    let frac = a.fractional_indices();
    if frac.len() > support_limit {
        return Err(Error::SupportOverflow {
            fractional: frac.len(),
            limit: support_limit,
        });
    }
    let top = a.n_levels() - 1;
    let base: Vec<bool> = a.levels().iter().map(|&l| l == top).collect();
    let p: Vec<f64> = frac.iter().map(|&k| a.value(k)).collect();
    let outcomes = (0u64..1 << frac.len())
        .map(|code| {
            let mut mask = base.clone();
            let mut probability = 1.0;
            for (bit, (&k, &pk)) in frac.iter().zip(&p).enumerate() {
                if code >> bit & 1 == 1 {
                    mask[k] = true;
                    probability *= pk;
                } else {
                    probability *= 1.0 - pk;
                }
            }
            Outcome {
                success_mask: mask,
                probability,
            }
        })
        .collect();
    Ok(outcomes)
}

/// Demand increment `O ⊙ q_a` for one outcome; the attacker applies its full
/// per-load magnitude on every load it invests in.
pub fn attack_increment(case: &GridCase, a: &Action, mask: &[bool]) -> Vec<f64> {
    let q = case.attack_magnitude();
    (0..case.n_loads())
        .map(|k| if mask[k] && a.levels()[k] > 0 { q[k] } else { 0.0 })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn act(levels: &[u8]) -> Action {
        Action::new(levels.to_vec(), 3).unwrap()
    }

    #[test]
    fn zero_attack_is_a_point_mass_on_failure() {
        let out = enumerate_outcomes(&act(&[0, 0, 0]), 20).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].success_mask, vec![false; 3]);
        assert_eq!(out[0].probability, 1.0);
    }

    #[test]
    fn mixed_attack_enumerates_only_fractional_loads() {
        let out = enumerate_outcomes(&act(&[2, 1, 0]), 20).unwrap();
        assert_eq!(out.len(), 2);
        assert_eq!(out[0].success_mask, vec![true, false, false]);
        assert_eq!(out[1].success_mask, vec![true, true, false]);
        assert!(out.iter().all(|o| o.probability == 0.5));
    }

    #[test]
    fn independent_halves() {
        let out = enumerate_outcomes(&act(&[1, 1]), 20).unwrap();
        assert_eq!(out.len(), 4);
        assert!(out.iter().all(|o| o.probability == 0.25));
    }

    #[test]
    fn support_limit_is_enforced() {
        let err = enumerate_outcomes(&act(&[1, 1, 1]), 2).unwrap_err();
        assert!(matches!(
            err,
            Error::SupportOverflow {
                fractional: 3,
                limit: 2
            }
        ));
    }

    #[test]
    fn unequal_levels_probabilities() {
        let a = Action::new(vec![1, 3], 4).unwrap();
        let out = enumerate_outcomes(&a, 20).unwrap();
        let total: f64 = out.iter().map(|o| o.probability).sum();
        assert!((total - 1.0).abs() < 1e-15);
        assert!((out[1].probability - 1.0 / 3.0).abs() < 1e-15);
    }
}
