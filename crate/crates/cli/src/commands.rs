use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use voltsec::bpega::run_bpega;
use voltsec::cbbi::{solve_cbse, sweep_cbse};
use voltsec::equilibrium::TraceRow;
use voltsec::par::{par_range, with_threads};
use voltsec::robust::{rd_mismatch, solve_rd, sweep_rd, Engine, RdPoint};
use voltsec::uncertainty::{generate_models, summary_stats, utility_mismatch, ClipWindow};
use voltsec::{cases, load_case, EquilibriumResult, Game, GameConfig, GridCase, Method, Player, StiffnessModel};

use crate::args::{parse_grid, Cli, Command, Common, EngineArg, MethodArg};

#[derive(Debug)]
pub enum CliError {
    Core(voltsec::Error),
    Usage(String),
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(voltsec::Error::Io { .. }) | CliError::Io { .. } => 3,
            CliError::Core(voltsec::Error::Capacity { .. }) => 2,
            _ => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Usage(msg) => f.write_str(msg),
            CliError::Io { path, source } => write!(f, "cannot write {}: {source}", path.display()),
        }
    }
}

impl From<voltsec::Error> for CliError {
    fn from(e: voltsec::Error) -> Self {
        CliError::Core(e)
    }
}

type Result<T> = std::result::Result<T, CliError>;

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Inspect { case, json, out } => inspect(&case, json, out.as_deref()),
        Command::Solve {
            case,
            method,
            gamma_a,
            gamma_d,
            gamma_a_est,
            trace,
            common,
        } => {
            let method = resolve_method(method, &common)?;
            with_threads(common.jobs, || {
                solve(&case, method, gamma_a, gamma_d, gamma_a_est, trace.as_deref(), &common)
            })
        }
        Command::Sweep {
            case,
            method,
            gamma_a,
            gamma_d,
            gamma_a_est,
            common,
        } => {
            let method = resolve_method(method, &common)?;
            with_threads(common.jobs, || {
                sweep(&case, method, &gamma_a, &gamma_d, gamma_a_est.as_deref(), &common)
            })
        }
        Command::Uncertainty {
            case,
            equilibrium,
            sigma,
            models,
            seed,
            clip,
            mc_samples,
            jobs,
            out,
        } => with_threads(jobs, || {
            uncertainty(
                &case,
                &equilibrium,
                sigma,
                models,
                seed,
                clip.into(),
                mc_samples,
                out.as_deref(),
            )
        }),
    }
}

fn resolve_method(positional: Option<MethodArg>, common: &Common) -> Result<Method> {
    match (positional, common.method_flag) {
        (Some(a), Some(b)) if a != b => Err(CliError::Usage(format!(
            "method given twice with different values ({a:?} and {b:?})"
        ))),
        (Some(m), _) | (None, Some(m)) => Ok(m.into()),
        (None, None) => Ok(Method::Cbbi),
    }
}

/// A case file path, or the name of a bundled case when no such file exists.
fn open_case(spec: &str) -> Result<GridCase> {
    if !Path::new(spec).exists() {
        if let Some(case) = cases::bundled(spec) {
            return Ok(case?);
        }
    }
    Ok(load_case(spec)?)
}

fn emit(out: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, bytes).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        }),
        None => std::io::stdout().write_all(bytes).map_err(|source| CliError::Io {
            path: PathBuf::from("<stdout>"),
            source,
        }),
    }
}

#[derive(Serialize)]
struct Inspection {
    name: String,
    n_loads: usize,
    n_gens: usize,
    n_ctrl: usize,
    ctrl_buses: Vec<u32>,
    delta_nominal: f64,
    b_ll_condition: f64,
    q_crit_condition: f64,
    v_l_star: Vec<f64>,
}

fn inspect(spec: &str, json: bool, out: Option<&Path>) -> Result<()> {
    let case = open_case(spec)?;
    let model = StiffnessModel::build(&case)?;
    let report = Inspection {
        name: case.name().to_string(),
        n_loads: case.n_loads(),
        n_gens: case.n_gens(),
        n_ctrl: case.ctrl_indices().len(),
        ctrl_buses: case.ctrl_buses(),
        delta_nominal: model.delta_nominal(),
        b_ll_condition: model.b_ll_condition(),
        q_crit_condition: model.q_crit_condition(),
        v_l_star: model.v_l_star().to_vec(),
    };
    let text = if json {
        serde_json::to_string_pretty(&report).expect("report serializes") + "\n"
    } else {
        let buses: Vec<String> = report.ctrl_buses.iter().map(u32::to_string).collect();
        let volts: Vec<String> = report.v_l_star.iter().map(|v| format!("{v:.6}")).collect();
        format!(
            "case            {}\nloads (K)       {}\ngenerators (G)  {}\ncontrollable    {} {{{}}}\ndelta_n         {:.12}\ncond(B_LL)      {:.3e}\ncond(Q_crit)    {:.3e}\nV_L*            [{}]\n",
            report.name,
            report.n_loads,
            report.n_gens,
            report.n_ctrl,
            buses.join(", "),
            report.delta_nominal,
            report.b_ll_condition,
            report.q_crit_condition,
            volts.join(", "),
        )
    };
    emit(out, text.as_bytes())
}

fn engine(common: &Common) -> Engine {
    match common.engine {
        EngineArg::Traversal => Engine::Traversal,
        EngineArg::Bpega => Engine::Bpega(common.ga_params()),
    }
}

/// CBSE reference for RD comparisons, computed with the RD engine's solver family.
fn reference(game: &Game, common: &Common) -> voltsec::Result<EquilibriumResult> {
    match common.engine {
        EngineArg::Traversal => solve_cbse(game),
        EngineArg::Bpega => run_bpega(game, &common.ga_params()),
    }
}

fn with_reference(mut rd: EquilibriumResult, cbse: &EquilibriumResult) -> EquilibriumResult {
    rd.metadata.u_defender_cbse = Some(cbse.u_defender);
    rd.metadata.mu_rd = Some(rd_mismatch(&rd, cbse));
    rd
}

fn check_estimate_flag(method: Method, given: bool) -> Result<()> {
    match (method, given) {
        (Method::Rd, false) => Err(CliError::Usage("rd requires --gamma-a-est".into())),
        (Method::Cbbi | Method::Bpega, true) => Err(CliError::Usage(format!(
            "--gamma-a-est applies only to rd, not {method}"
        ))),
        _ => Ok(()),
    }
}

fn solve_one(
    game: &Game,
    method: Method,
    gamma_a_est: Option<f64>,
    common: &Common,
) -> voltsec::Result<EquilibriumResult> {
    match method {
        Method::Cbbi => solve_cbse(game),
        Method::Bpega => run_bpega(game, &common.ga_params()),
        Method::Rd => {
            let est = gamma_a_est.expect("checked by caller");
            let rd = solve_rd(game, est, &engine(common))?;
            Ok(with_reference(rd, &reference(game, common)?))
        }
    }
}

fn solve(
    spec: &str,
    method: Method,
    gamma_a: f64,
    gamma_d: f64,
    gamma_a_est: Option<f64>,
    trace: Option<&Path>,
    common: &Common,
) -> Result<()> {
    check_estimate_flag(method, gamma_a_est.is_some())?;
    if trace.is_some() && method != Method::Bpega {
        return Err(CliError::Usage("--trace applies only to bpega".into()));
    }
    let game = Game::new(open_case(spec)?, common.config(gamma_a, gamma_d))?;
    let result = solve_one(&game, method, gamma_a_est, common)?;
    if let Some(path) = trace {
        emit(Some(path), &trace_csv(&result.metadata.trace))?;
    }
    emit(common.out.as_deref(), (result.to_json() + "\n").as_bytes())
}

fn trace_csv(rows: &[TraceRow]) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["generation", "best_fit_a", "best_fit_d", "u_attacker_of_incumbent"])
        .expect("in-memory write");
    for r in rows {
        w.write_record([
            r.generation.to_string(),
            r.best_fit_a.to_string(),
            r.best_fit_d.to_string(),
            r.u_attacker_of_incumbent.to_string(),
        ])
        .expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

const SWEEP_COLUMNS: [&str; 14] = [
    "gamma_a", "gamma_d", "gamma_a_est", "u_attacker", "u_defender", "cost_a", "cost_d", "a_vector", "d_vector",
    "method", "seed", "mu_rd", "u_defender_estimated", "error",
];

#[derive(Clone, Copy)]
struct Point {
    gamma_a: f64,
    gamma_d: f64,
    gamma_a_est: Option<f64>,
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn sweep_record(p: Point, method: Method, seed: u64, r: &voltsec::Result<EquilibriumResult>) -> Vec<String> {
    let mut rec = vec![p.gamma_a.to_string(), p.gamma_d.to_string(), opt(p.gamma_a_est)];
    match r {
        Ok(r) => rec.extend([
            r.u_attacker.to_string(),
            r.u_defender.to_string(),
            r.cost_a.to_string(),
            r.cost_d.to_string(),
            r.a_star.encode(),
            r.d_star.encode(),
            method.to_string(),
            seed.to_string(),
            opt(r.metadata.mu_rd),
            opt(r.metadata.u_defender_estimated),
            String::new(),
        ]),
        Err(e) => {
            rec.extend(std::iter::repeat_n(String::new(), 6));
            rec.extend([
                method.to_string(),
                seed.to_string(),
                String::new(),
                String::new(),
                e.to_string(),
            ]);
        }
    }
    rec
}

fn sweep(
    spec: &str,
    method: Method,
    grid_a: &str,
    grid_d: &str,
    grid_est: Option<&str>,
    common: &Common,
) -> Result<()> {
    check_estimate_flag(method, grid_est.is_some())?;
    let ga = parse_grid(grid_a).map_err(CliError::Usage)?;
    let gd = parse_grid(grid_d).map_err(CliError::Usage)?;
    let ge: Vec<Option<f64>> = match grid_est {
        Some(g) => parse_grid(g).map_err(CliError::Usage)?.into_iter().map(Some).collect(),
        None => vec![None],
    };
    let mut points = Vec::new();
    for &a in &ga {
        for &d in &gd {
            for &e in &ge {
                points.push(Point {
                    gamma_a: a,
                    gamma_d: d,
                    gamma_a_est: e,
                });
            }
        }
    }
    let game = Game::new(open_case(spec)?, common.config(0.0, 0.0))?;
    let results = solve_points(&game, method, &points, common);

    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(SWEEP_COLUMNS).expect("in-memory write");
    for (p, r) in points.iter().zip(&results) {
        if let Err(e) = r {
            log::warn!("gamma_a = {}, gamma_d = {}: {e}", p.gamma_a, p.gamma_d);
        }
        w.write_record(sweep_record(*p, method, common.seed, r))
            .expect("in-memory write");
    }
    emit(common.out.as_deref(), &w.into_inner().expect("in-memory flush"))
}

/// Results in point order. Traversal solves share one payoff table; if that
/// table cannot be built, each point is solved on its own so that failures
/// stay local.
fn solve_points(
    game: &Game,
    method: Method,
    points: &[Point],
    common: &Common,
) -> Vec<voltsec::Result<EquilibriumResult>> {
    let pairs: Vec<(f64, f64)> = points.iter().map(|p| (p.gamma_a, p.gamma_d)).collect();
    let shared = match (method, common.engine) {
        (Method::Cbbi, _) => sweep_cbse(game, &pairs).ok(),
        (Method::Rd, EngineArg::Traversal) => {
            let rd_points: Vec<RdPoint> = points
                .iter()
                .map(|p| RdPoint {
                    gamma_a: p.gamma_a,
                    gamma_d: p.gamma_d,
                    gamma_a_est: p.gamma_a_est.expect("rd points carry an estimate"),
                })
                .collect();
            match (sweep_rd(game, &rd_points), sweep_cbse(game, &pairs)) {
                (Ok(rd), Ok(cbse)) => Some(rd.into_iter().zip(&cbse).map(|(r, c)| with_reference(r, c)).collect()),
                _ => None,
            }
        }
        _ => None,
    };
    match shared {
        Some(results) => results.into_iter().map(Ok).collect(),
        None => par_range(points.len(), |i| {
            let p = points[i];
            solve_one(&game.with_costs(p.gamma_a, p.gamma_d), method, p.gamma_a_est, common)
        }),
    }
}

const UNCERTAINTY_COLUMNS: [&str; 14] = [
    "equilibrium", "gamma_a", "gamma_d", "method", "model", "mu", "min", "q1", "median", "q3", "max", "mean", "sigma",
    "clip",
];

#[allow(clippy::too_many_arguments)]
fn uncertainty(
    spec: &str,
    files: &[PathBuf],
    sigma: f64,
    models: usize,
    seed: u64,
    clip: ClipWindow,
    mc_samples: usize,
    out: Option<&Path>,
) -> Result<()> {
    let case = open_case(spec)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(UNCERTAINTY_COLUMNS).expect("in-memory write");
    let clip_name = match clip {
        ClipWindow::Nominal => "nominal",
        ClipWindow::PerModel => "per-model",
    };
    let mut set = None;
    for file in files {
        let text = std::fs::read_to_string(file).map_err(|source| voltsec::Error::Io {
            path: file.clone(),
            source,
        })?;
        let eq = EquilibriumResult::from_json(&text)?;
        let mut cfg = GameConfig::new(eq.gamma_a, eq.gamma_d)
            .with_levels(eq.a_star.n_levels(), eq.d_star.n_levels())
            .with_seed(seed);
        cfg.mc_samples = mc_samples;
        let game = Game::new(case.clone(), cfg)?;
        eq.check_case(game.case(), game.delta_nominal())?;
        eq.a_star.check_feasible(game.case(), Player::Attacker, eq.gamma_a)?;
        eq.d_star.check_feasible(game.case(), Player::Defender, eq.gamma_d)?;
        let set = match &set {
            Some(s) => s,
            None => set.insert(generate_models(game.case(), game.model(), sigma, models, seed)?),
        };
        let mu = utility_mismatch(set, &game, &eq, clip);
        let name = file.display().to_string();
        let head = [
            name,
            eq.gamma_a.to_string(),
            eq.gamma_d.to_string(),
            eq.method.to_string(),
        ];
        for (i, m) in mu.iter().enumerate() {
            let mut rec: Vec<String> = head.to_vec();
            rec.extend([i.to_string(), m.to_string()]);
            rec.extend(std::iter::repeat_n(String::new(), 6));
            rec.extend([sigma.to_string(), clip_name.to_string()]);
            w.write_record(rec).expect("in-memory write");
        }
        let s = summary_stats(&mu)?;
        let mut rec: Vec<String> = head.to_vec();
        rec.extend(["summary".to_string(), String::new()]);
        rec.extend([s.min, s.q1, s.median, s.q3, s.max, s.mean].map(|v| v.to_string()));
        rec.extend([sigma.to_string(), clip_name.to_string()]);
        w.write_record(rec).expect("in-memory write");
    }
    emit(out, &w.into_inner().expect("in-memory flush"))
}
