use voltsec::cases;
use voltsec::cbbi::solve_cbse;
use voltsec::uncertainty::{generate_models, summary_stats, utility_mismatch, utility_under_model, ClipWindow};
use voltsec::{Error, Game, GameConfig};

fn game(ga: f64, gd: f64) -> Game {
    Game::new(cases::ieee9(), GameConfig::new(ga, gd)).unwrap()
}

#[test]
fn zero_sigma_reproduces_the_nominal_model() {
    let g = game(0.75, 0.75);
    let set = generate_models(g.case(), g.model(), 0.0, 5, 1).unwrap();
    assert!(set.models.iter().all(|m| m == g.case().q_l_nominal()));
    let eq = solve_cbse(&g).unwrap();
    for clip in [ClipWindow::Nominal, ClipWindow::PerModel] {
        assert!(utility_mismatch(&set, &g, &eq, clip).iter().all(|&mu| mu == 0.0));
    }
}

#[test]
fn draws_have_the_requested_spread() {
    let g = game(0.0, 0.0);
    let set = generate_models(g.case(), g.model(), 0.1, 400, 9).unwrap();
    let q = g.case().q_l_nominal();
    let eps: Vec<f64> = set
        .models
        .iter()
        .flat_map(|m| m.iter().zip(q).filter(|(_, &n)| n != 0.0).map(|(x, n)| x / n - 1.0))
        .collect();
    let n = eps.len() as f64;
    let mean = eps.iter().sum::<f64>() / n;
    let sd = (eps.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    assert!(mean.abs() < 0.02, "mean {mean}");
    assert!((sd - 0.1).abs() < 0.01, "sd {sd}");
    assert!(set.delta_nominal.iter().all(|&d| d < 1.0));
    // loads without demand stay at zero
    assert!(set
        .models
        .iter()
        .all(|m| m.iter().zip(q).all(|(x, &n)| n != 0.0 || *x == 0.0)));
}

#[test]
fn models_are_reproducible_from_the_seed() {
    let g = game(0.0, 0.0);
    let a = generate_models(g.case(), g.model(), 0.1, 20, 42).unwrap();
    let b = generate_models(g.case(), g.model(), 0.1, 20, 42).unwrap();
    let c = generate_models(g.case(), g.model(), 0.1, 20, 43).unwrap();
    assert_eq!(a, b);
    assert_ne!(a.models, c.models);
}

#[test]
fn heavy_noise_gives_up_after_redraws() {
    let g = game(0.0, 0.0);
    let r = generate_models(g.case(), g.model(), 50.0, 20, 1);
    assert!(matches!(r, Err(Error::TooStressed { .. })));
}

#[test]
fn mismatch_is_small_at_the_reported_pairs() {
    for (ga, gd) in [(0.1, 0.1), (0.1, 1.5), (0.75, 0.75), (1.5, 0.1), (1.5, 1.5)] {
        let g = game(ga, gd);
        let set = generate_models(g.case(), g.model(), 0.1, 20, 42).unwrap();
        let eq = solve_cbse(&g).unwrap();
        let mu = utility_mismatch(&set, &g, &eq, ClipWindow::Nominal);
        let s = summary_stats(&mu).unwrap();
        assert!(s.mean <= 10.0, "({ga}, {gd}): {}", s.mean);
    }
}

#[test]
fn per_model_clip_uses_each_model_floor() {
    let g = game(0.75, 0.75);
    let set = generate_models(g.case(), g.model(), 0.1, 3, 2).unwrap();
    let z = g.zero(voltsec::Player::Attacker);
    let zd = g.zero(voltsec::Player::Defender);
    for (m, &delta) in set.models.iter().zip(&set.delta_nominal) {
        let u = utility_under_model(&g, m, &z, &zd, ClipWindow::PerModel);
        assert!((u - delta).abs() < 1e-15);
        let u = utility_under_model(&g, m, &z, &zd, ClipWindow::Nominal);
        assert!((u - delta.max(g.delta_nominal())).abs() < 1e-15);
    }
}
