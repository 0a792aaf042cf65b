//! Robust defense against an attacker whose per-load cost is only known to
//! be at least `gamma_a_est`.
//!
//! The defender first predicts the lowest-cost best response of an attacker
//! paying `gamma_a_est` to each defense and commits to the defense that fares
//! best against those predictions. The real attacker, paying `gamma_a`, then
//! best-responds to that commitment.

use serde::{Deserialize, Serialize};

use crate::bpega::{ga_best_response, run_bpega, GaParams};
use crate::cbbi::{best_response, PayoffTable, Response};
use crate::equilibrium::{EquilibriumResult, Metadata, Method};
use crate::error::{Error, Result};
use crate::game::{count_feasible, genes, Game, Player};
use crate::par::par_range;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    Traversal,
    Bpega(GaParams),
}

impl Engine {
    fn name(&self) -> &'static str {
        match self {
            Engine::Traversal => "traversal",
            Engine::Bpega(_) => "bpega",
        }
    }
}

fn warn_if_optimistic(gamma_a_est: f64, gamma_a: f64) {
    if gamma_a_est > gamma_a {
        log::warn!("gamma_a_est = {gamma_a_est} exceeds gamma_a = {gamma_a}; the robust guarantee does not hold");
    }
}

fn check_estimate(gamma_a_est: f64) -> Result<()> {
    if gamma_a_est.is_finite() && gamma_a_est >= 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(
            "nonnegative costs",
            format!("gamma_a_est = {gamma_a_est}"),
        ))
    }
}

fn rd_result(game: &Game, table: &PayoffTable, gamma_a_est: f64) -> EquilibriumResult {
    let cfg = game.config();
    let s = table
        .solve_rd(gamma_a_est, cfg.gamma_a, cfg.gamma_d)
        .expect("zero actions are always feasible");
    let mut r = EquilibriumResult::evaluate(
        Method::Rd,
        game,
        table.attacks()[s.attack].clone(),
        table.defenses()[s.defense].clone(),
        Metadata {
            gamma_a_est: Some(gamma_a_est),
            u_defender_estimated: Some(s.u_defender_estimated),
            evaluations: Some(table.len() as u64),
            engine: Some(Engine::Traversal.name().into()),
            ..Metadata::default()
        },
    );
    debug_assert_eq!(r.u_defender, s.u_defender);
    r.u_defender = s.u_defender;
    r
}

/// RD solution at the game's costs for the estimate `gamma_a_est`.
pub fn solve_rd(game: &Game, gamma_a_est: f64, engine: &Engine) -> Result<EquilibriumResult> {
    check_estimate(gamma_a_est)?;
    let cfg = game.config();
    warn_if_optimistic(gamma_a_est, cfg.gamma_a);
    match engine {
        Engine::Traversal => {
            let table = PayoffTable::for_costs(game, gamma_a_est.min(cfg.gamma_a), cfg.gamma_d)?;
            Ok(rd_result(game, &table, gamma_a_est))
        }
        Engine::Bpega(params) => {
            let planned = run_bpega(&game.with_costs(gamma_a_est, cfg.gamma_d), params)?;
            let d = planned.d_star;
            let response = attacker_response(game, &d, cfg.gamma_a, params)?;
            let mut meta = planned.metadata;
            meta.gamma_a_est = Some(gamma_a_est);
            meta.u_defender_estimated = Some(planned.u_defender);
            meta.engine = Some(engine.name().into());
            Ok(EquilibriumResult::evaluate(Method::Rd, game, response.action, d, meta))
        }
    }
}

/// Exact best response when the attack space fits the enumeration cap,
/// otherwise an evolutionary search.
fn attacker_response(game: &Game, d: &crate::Action, gamma: f64, params: &GaParams) -> Result<Response> {
    let cfg = game.config();
    let n = genes(game.case(), Player::Attacker).len();
    if count_feasible(n, cfg.attack_levels, gamma) <= u128::from(cfg.enumeration_cap) {
        best_response(game, d, gamma)
    } else {
        ga_best_response(game, d, gamma, params)
    }
}

/// One grid point of an RD sweep.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RdPoint {
    pub gamma_a: f64,
    pub gamma_d: f64,
    pub gamma_a_est: f64,
}

/// Traversal RD solutions at each point, sharing one payoff table; results
/// are in input order.
pub fn sweep_rd(game: &Game, points: &[RdPoint]) -> Result<Vec<EquilibriumResult>> {
    if points.is_empty() {
        return Ok(Vec::new());
    }
    for p in points {
        check_estimate(p.gamma_a_est)?;
        warn_if_optimistic(p.gamma_a_est, p.gamma_a);
    }
    let min_a = points
        .iter()
        .map(|p| p.gamma_a.min(p.gamma_a_est))
        .fold(f64::INFINITY, f64::min);
    let min_d = points.iter().map(|p| p.gamma_d).fold(f64::INFINITY, f64::min);
    let table = PayoffTable::for_costs(game, min_a, min_d)?;
    Ok(par_range(points.len(), |i| {
        let p = points[i];
        rd_result(&game.with_costs(p.gamma_a, p.gamma_d), &table, p.gamma_a_est)
    }))
}

/// Relative defender-utility gap of an RD solution to the CBSE, in percent.
pub fn rd_mismatch(rd: &EquilibriumResult, cbse: &EquilibriumResult) -> f64 {
    ((rd.u_defender - cbse.u_defender) / cbse.u_defender).abs() * 100.0
}

/// `||d_rd||_1 / ||d_cbse||_1`, or `None` when the CBSE defender does not invest.
pub fn overpayment_ratio(rd: &EquilibriumResult, cbse: &EquilibriumResult) -> Option<f64> {
    let base = cbse.d_star.l1();
    (base > 0.0).then(|| rd.d_star.l1() / base)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::Action;

    fn result(u_defender: f64) -> EquilibriumResult {
        EquilibriumResult {
            method: Method::Rd,
            case_name: "x".into(),
            n_loads: 1,
            delta_nominal: 0.5,
            gamma_a: 0.0,
            gamma_d: 0.0,
            a_star: Action::zeros(1, 3),
            d_star: Action::zeros(1, 3),
            u_attacker: -u_defender,
            u_defender,
            cost_a: 0.0,
            cost_d: 0.0,
            metadata: Metadata::default(),
        }
    }

    #[test]
    fn mismatch_arithmetic() {
        assert_eq!(rd_mismatch(&result(-0.8), &result(-0.8)), 0.0);
        assert!((rd_mismatch(&result(-1.0), &result(-0.8)) - 25.0).abs() < 1e-12);
    }

    #[test]
    fn overpayment_needs_positive_baseline() {
        assert_eq!(overpayment_ratio(&result(-1.0), &result(-0.8)), None);
    }
}
