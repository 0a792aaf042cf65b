use voltsec::bpega::{ga_best_response, run_bpega, Coevolution, GaParams};
use voltsec::cases;
use voltsec::cbbi::{best_response, solve_cbse};
use voltsec::{Game, GameConfig, Player};

fn game(ga: f64, gd: f64) -> Game {
    Game::new(cases::ieee9(), GameConfig::new(ga, gd)).unwrap()
}

#[test]
fn matches_backward_induction_on_the_small_case() {
    for (ga, gd) in [(0.1, 0.1), (0.75, 0.75), (1.5, 1.5)] {
        let g = game(ga, gd);
        let exact = solve_cbse(&g).unwrap();
        let hits = (1..=5)
            .filter(|&s| run_bpega(&g, &GaParams::default().with_seed(s)).unwrap().u_attacker == exact.u_attacker)
            .count();
        assert!(hits >= 4, "({ga}, {gd}): {hits}/5");
    }
}

#[test]
fn same_seed_same_result() {
    let g = game(0.45, 0.75);
    let p = GaParams::default().with_seed(11);
    let a = run_bpega(&g, &p).unwrap();
    let b = run_bpega(&g, &p).unwrap();
    assert_eq!(a.to_json(), b.to_json());
    assert_eq!(a.metadata.trace.len(), a.metadata.generations.unwrap() + 1);
}

#[test]
fn populations_stay_feasible_and_keep_the_best_parent() {
    let g = game(0.3, 0.6);
    let mut evo = Coevolution::new(&g, GaParams::default().with_seed(3)).unwrap();
    for _ in 0..10 {
        let best_d = evo.defenders()[evo.incumbent()].action.clone();
        evo.step();
        assert!(evo.defenders().iter().any(|x| x.action == best_d));
        assert!(evo.attackers().iter().all(|x| x.action.is_affordable(0.3)));
        assert!(evo.defenders().iter().all(|x| x.action.is_affordable(0.6)));
        assert!(evo.defenders().iter().all(|x| x
            .action
            .levels()
            .iter()
            .enumerate()
            .all(|(k, &l)| l == 0 || g.case().is_controllable(k))));
    }
}

#[test]
fn reported_pair_is_a_best_response_within_the_final_sets() {
    let g = game(0.75, 0.45);
    let mut evo = Coevolution::new(&g, GaParams::default().with_seed(5)).unwrap();
    evo.run();
    let attacks: Vec<_> = evo.attackers().iter().map(|x| x.action.clone()).collect();
    let r = evo.finish();
    for a in &attacks {
        assert!(g.attacker_utility(a, &r.d_star) <= r.u_attacker + 1e-9);
    }
}

#[test]
fn evolutionary_response_agrees_with_enumeration() {
    let g = game(0.45, 0.45);
    let d = g.zero(Player::Defender);
    let exact = best_response(&g, &d, 0.45).unwrap();
    let ga = ga_best_response(&g, &d, 0.45, &GaParams::default()).unwrap();
    assert!(ga.action.is_affordable(0.45));
    assert!(ga.u_attacker <= exact.u_attacker + 1e-12);
    assert!(ga.u_attacker >= exact.u_attacker - 0.05);
}

#[test]
fn large_case_runs_without_enumeration() {
    let g = Game::new(cases::ieee39(), GameConfig::new(0.75, 0.75)).unwrap();
    let r = run_bpega(&g, &GaParams::default()).unwrap();
    assert!(r.u_attacker >= g.delta_nominal() && r.u_attacker <= 1.0);
    assert!(r.a_star.is_affordable(0.75) && r.d_star.is_affordable(0.75));
    assert!(r.metadata.generations.unwrap() <= 30);
}
