use proptest::prelude::*;
use voltsec::cases;
use voltsec::cbbi::{best_response, solve_cbse, sweep_cbse, PayoffTable};
use voltsec::{Game, GameConfig, Player};

const TOL: f64 = 1e-9;

fn game(ga: f64, gd: f64) -> Game {
    Game::new(cases::ieee9(), GameConfig::new(ga, gd)).unwrap()
}

fn grid(n: usize, step: f64) -> Vec<f64> {
    (0..n).map(|i| i as f64 * step).collect()
}

#[test]
fn equilibrium_is_a_best_response_pair() {
    for (ga, gd) in [(0.1, 0.1), (0.1, 1.5), (0.75, 0.75), (1.5, 0.1), (1.5, 1.5)] {
        let g = game(ga, gd);
        let eq = solve_cbse(&g).unwrap();
        let attacks = g.actions(Player::Attacker).unwrap();
        let defenses = g.actions(Player::Defender).unwrap();
        let u = |a, d| g.attacker_utility(a, d);

        // follower: nothing affordable does better, ties cost at least as much
        for a in &attacks {
            let ua = u(a, &eq.d_star);
            assert!(ua <= eq.u_attacker + TOL);
            if ua >= eq.u_attacker - TOL {
                assert!(a.level_sum() >= eq.a_star.level_sum());
            }
        }
        // leader: every other defense lets the follower reach at least as much
        for d in &defenses {
            let r = best_response(&g, d, ga).unwrap();
            assert!(r.u_attacker >= eq.u_attacker - TOL);
            if r.u_attacker <= eq.u_attacker + TOL {
                assert!(d.level_sum() >= eq.d_star.level_sum());
            }
        }
        assert_eq!(eq.u_attacker, -eq.u_defender);
        assert!(eq.a_star.is_affordable(ga) && eq.d_star.is_affordable(gd));
    }
}

#[test]
fn sweep_matches_pointwise_solves() {
    let g = game(0.0, 0.0);
    let points: Vec<(f64, f64)> = grid(6, 0.3)
        .iter()
        .flat_map(|&a| grid(6, 0.3).into_iter().map(move |d| (a, d)))
        .collect();
    let swept = sweep_cbse(&g, &points).unwrap();
    for (&(ga, gd), r) in points.iter().zip(&swept) {
        let single = solve_cbse(&g.with_costs(ga, gd)).unwrap();
        assert_eq!(r.a_star, single.a_star);
        assert_eq!(r.d_star, single.d_star);
        assert_eq!(r.u_attacker, single.u_attacker);
        assert_eq!((r.gamma_a, r.gamma_d), (ga, gd));
    }
}

#[test]
fn surface_has_collapse_and_quiet_regions() {
    let g = game(0.0, 0.0);
    let axis = grid(21, 0.075);
    let points: Vec<(f64, f64)> = axis.iter().flat_map(|&a| axis.iter().map(move |&d| (a, d))).collect();
    let u: Vec<f64> = sweep_cbse(&g, &points).unwrap().iter().map(|r| r.u_attacker).collect();
    let at = |i: usize, j: usize| u[i * 21 + j];
    for i in 0..21 {
        for j in 0..21 {
            if i + 1 < 21 {
                assert!(at(i + 1, j) <= at(i, j) + TOL);
            }
            if j + 1 < 21 {
                assert!(at(i, j + 1) >= at(i, j) - TOL);
            }
        }
    }
    assert!(u.contains(&1.0));
    assert!(u.iter().any(|&x| x == g.delta_nominal()));
}

#[test]
fn free_actions_give_the_full_compensation_outcome() {
    let g = game(0.0, 0.0);
    let eq = solve_cbse(&g).unwrap();
    assert_eq!(eq.u_attacker, g.delta_nominal());
}

#[test]
fn table_respects_its_cost_floor() {
    let g = game(0.3, 0.3);
    let table = PayoffTable::for_costs(&g, 0.3, 0.3).unwrap();
    assert!(table.attacks().iter().all(|a| a.is_affordable(0.3)));
    assert!(table.solve(0.3, 0.3).is_some());
    assert_eq!(table.len(), table.attacks().len() * table.defenses().len());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn attacker_utility_stays_in_window(ga in 0.0f64..1.5, gd in 0.0f64..1.5) {
        let g = game(ga, gd);
        let eq = solve_cbse(&g).unwrap();
        prop_assert!(eq.u_attacker >= g.delta_nominal() && eq.u_attacker <= 1.0);
        let cheaper = solve_cbse(&g.with_costs(ga * 0.5, gd)).unwrap();
        prop_assert!(cheaper.u_attacker >= eq.u_attacker - TOL);
    }
}
