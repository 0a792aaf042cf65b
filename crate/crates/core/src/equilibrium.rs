use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{Action, Game};
use crate::grid::GridCase;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Cbbi,
    Bpega,
    Rd,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Cbbi => "cbbi",
            Method::Bpega => "bpega",
            Method::Rd => "rd",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cbbi" => Ok(Method::Cbbi),
            "bpega" => Ok(Method::Bpega),
            "rd" => Ok(Method::Rd),
            _ => Err(Error::invalid("method", format!("unknown method `{s}`"))),
        }
    }
}

/// One generation of a co-evolution run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub generation: usize,
    pub best_fit_a: f64,
    pub best_fit_d: f64,
    pub u_attacker_of_incumbent: f64,
}

/// Solver-specific details; absent fields do not apply to the method.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generations: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_a_est: Option<f64>,
    /// Defender utility the RD defender expected when planning against `gamma_a_est`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u_defender_estimated: Option<f64>,
    /// Utility evaluations performed (table cells or fitness cache misses).
    /// Defender utility at the CBSE for the same costs, when compared.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u_defender_cbse: Option<f64>,
    /// Relative defender-utility gap to the CBSE, in percent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu_rd: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub evaluations: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub engine: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub trace: Vec<TraceRow>,
}

/// A strategy pair with its utilities and costs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumResult {
    pub method: Method,
    pub case_name: String,
    pub n_loads: usize,
    pub delta_nominal: f64,
    pub gamma_a: f64,
    pub gamma_d: f64,
    pub a_star: Action,
    pub d_star: Action,
    pub u_attacker: f64,
    pub u_defender: f64,
    pub cost_a: f64,
    pub cost_d: f64,
    #[serde(default)]
    pub metadata: Metadata,
}

impl EquilibriumResult {
    /// Evaluates `(a, d)` in `game` and records it as a `method` result.
    pub fn evaluate(method: Method, game: &Game, a: Action, d: Action, metadata: Metadata) -> Self {
        let cfg = game.config();
        let u_attacker = game.payoff().attacker_utility(&a, &d);
        EquilibriumResult {
            method,
            case_name: game.case().name().to_string(),
            n_loads: game.case().n_loads(),
            delta_nominal: game.delta_nominal(),
            gamma_a: cfg.gamma_a,
            gamma_d: cfg.gamma_d,
            cost_a: a.cost(cfg.gamma_a),
            cost_d: d.cost(cfg.gamma_d),
            a_star: a,
            d_star: d,
            u_attacker,
            u_defender: -u_attacker,
            metadata,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("result serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|source| Error::Parse {
            context: "equilibrium JSON".into(),
            source,
        })
    }

    /// Fails unless this result was computed on `case` (name, size and nominal index).
    pub fn check_case(&self, case: &GridCase, delta_nominal: f64) -> Result<()> {
        let same = self.case_name == case.name()
            && self.n_loads == case.n_loads()
            && self.a_star.len() == case.n_loads()
            && self.d_star.len() == case.n_loads()
            && (self.delta_nominal - delta_nominal).abs() <= 1e-12 * delta_nominal.max(1.0);
        if same {
            Ok(())
        } else {
            Err(Error::invalid(
                "equilibrium matches case",
                format!(
                    "result is for `{}` (K = {}, delta_n = {}), case is `{}` (K = {}, delta_n = {})",
                    self.case_name,
                    self.n_loads,
                    self.delta_nominal,
                    case.name(),
                    case.n_loads(),
                    delta_nominal
                ),
            ))
        }
    }
}
