//! Grid cases and the voltage instability index.
//!
//! Buses are ordered load buses first (`K` of them), then generator buses
//! (`G`). The susceptance matrix `B` is partitioned accordingly into the
//! load-load block `B_LL` and the load-generator block `B_LG`. From these the
//! open-circuit load voltages `V_L* = -B_LL^-1 B_LG V_G` and the stiffness
//! matrix `Q_crit = 1/4 diag(V_L*) B_LL diag(V_L*)` follow; the instability
//! index of a reactive setpoint vector `Q_L` is `||Q_crit^-1 Q_L||_inf`.

use std::collections::HashMap;
use std::path::Path;

use nalgebra::{DMatrix, DVector, Dyn, LU};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const SYMMETRY_RTOL: f64 = 1e-9;
/// Smallest admissible ratio of extreme singular values for `B_LL` and `Q_crit`.
const MIN_SINGULAR_RATIO: f64 = 1e-10;
const MAX_CONDITION: f64 = 1e12;

/// On-disk JSON representation of a grid case.
///
/// Either `B` or `branches` must be given. Bus labels default to `1..=K` for
/// loads and `K+1..=K+G` for generators; `ctrl_buses` and branch endpoints
/// refer to these labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaseFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    /// Informational only; all powers are already in pu.
    #[serde(rename = "base_MVA", default, skip_serializing_if = "Option::is_none")]
    pub base_mva: Option<f64>,
    pub n_loads: usize,
    pub n_gens: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub load_bus_ids: Option<Vec<u32>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gen_bus_ids: Option<Vec<u32>>,
    #[serde(rename = "B", default, skip_serializing_if = "Option::is_none")]
    pub b: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub branches: Option<Vec<Branch>>,
    #[serde(rename = "V_G")]
    pub v_g: Vec<f64>,
    #[serde(rename = "Q_L_nominal")]
    pub q_l_nominal: Vec<f64>,
    pub q_a_max: Vec<f64>,
    pub q_d_max: Vec<f64>,
    /// Per-load attack magnitudes; defaults to `q_a_max`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q_a: Option<Vec<f64>>,
    pub ctrl_buses: Vec<u32>,
}

/// A line or transformer, MATPOWER style (pu impedances, total charging `b`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Branch {
    pub from: u32,
    pub to: u32,
    pub r: f64,
    pub x: f64,
    #[serde(default)]
    pub b: f64,
    /// Off-nominal turns ratio; `0` means 1.
    #[serde(default)]
    pub tap: f64,
}

/// A validated grid case. Immutable once built.
#[derive(Debug, Clone)]
pub struct GridCase {
    name: String,
    description: Option<String>,
    base_mva: Option<f64>,
    n_loads: usize,
    n_gens: usize,
    load_bus_ids: Vec<u32>,
    gen_bus_ids: Vec<u32>,
    b: DMatrix<f64>,
    v_g: Vec<f64>,
    q_l_nominal: Vec<f64>,
    q_a_max: Vec<f64>,
    q_d_max: Vec<f64>,
    q_a: Vec<f64>,
    /// 0-based load indices with control devices, ascending.
    ctrl: Vec<usize>,
}

/// Reads and validates a JSON case file.
pub fn load_case(path: impl AsRef<Path>) -> Result<GridCase> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let file: CaseFile = serde_json::from_str(&text).map_err(|source| Error::Parse {
        context: path.display().to_string(),
        source,
    })?;
    GridCase::from_case_file(file)
}

impl GridCase {
    pub fn from_json_str(text: &str) -> Result<Self> {
        let file: CaseFile = serde_json::from_str(text).map_err(|source| Error::Parse {
            context: "case JSON".into(),
            source,
        })?;
        Self::from_case_file(file)
    }

    pub fn from_case_file(file: CaseFile) -> Result<Self> {
        let k = file.n_loads;
        let g = file.n_gens;
        if k == 0 || g == 0 {
            return Err(Error::invalid(
                "dimensions",
                format!("n_loads = {k} and n_gens = {g} must both be positive"),
            ));
        }
        let n = k + g;

        let load_bus_ids = file.load_bus_ids.clone().unwrap_or_else(|| (1..=k as u32).collect());
        let gen_bus_ids = file
            .gen_bus_ids
            .clone()
            .unwrap_or_else(|| (k as u32 + 1..=n as u32).collect());
        check_len("load_bus_ids", load_bus_ids.len(), k)?;
        check_len("gen_bus_ids", gen_bus_ids.len(), g)?;
        let labels: Vec<u32> = load_bus_ids.iter().chain(&gen_bus_ids).copied().collect();
        let mut index = HashMap::with_capacity(n);
        for (i, &label) in labels.iter().enumerate() {
            if index.insert(label, i).is_some() {
                return Err(Error::invalid("dimensions", format!("bus label {label} appears twice")));
            }
        }

        let b = match (&file.b, &file.branches) {
            (Some(rows), None) => {
                check_len("B rows", rows.len(), n)?;
                for (i, row) in rows.iter().enumerate() {
                    if row.len() != n {
                        return Err(Error::invalid(
                            "dimensions",
                            format!("B row {i} has {} entries, expected {n}", row.len()),
                        ));
                    }
                }
                DMatrix::from_fn(n, n, |i, j| rows[i][j])
            }
            (None, Some(branches)) => assemble_susceptance(&index, branches)?,
            (Some(_), Some(_)) => return Err(Error::invalid("dimensions", "give either `B` or `branches`, not both")),
            (None, None) => {
                return Err(Error::invalid(
                    "dimensions",
                    "missing susceptance data: need `B` or `branches`",
                ))
            }
        };

        check_len("V_G", file.v_g.len(), g)?;
        check_len("Q_L_nominal", file.q_l_nominal.len(), k)?;
        check_len("q_a_max", file.q_a_max.len(), k)?;
        check_len("q_d_max", file.q_d_max.len(), k)?;
        let q_a = file.q_a.clone().unwrap_or_else(|| file.q_a_max.clone());
        check_len("q_a", q_a.len(), k)?;

        let all_finite = b.iter().all(|v| v.is_finite())
            && [&file.v_g, &file.q_l_nominal, &file.q_a_max, &file.q_d_max, &q_a]
                .iter()
                .all(|v| v.iter().all(|x| x.is_finite()));
        if !all_finite {
            return Err(Error::invalid("finite values", "case contains NaN or infinity"));
        }

        for i in 0..n {
            for j in (i + 1)..n {
                let (u, v) = (b[(i, j)], b[(j, i)]);
                if (u - v).abs() > SYMMETRY_RTOL * u.abs().max(v.abs()) {
                    return Err(Error::invalid(
                        "B symmetric",
                        format!("B[{i}][{j}] = {u} but B[{j}][{i}] = {v}"),
                    ));
                }
            }
        }

        for (name, v) in [("q_a_max", &file.q_a_max), ("q_d_max", &file.q_d_max), ("q_a", &q_a)] {
            if let Some(i) = v.iter().position(|&x| x < 0.0) {
                return Err(Error::invalid(
                    "nonnegative bounds",
                    format!("{name}[{}] = {} is negative", load_bus_ids[i], v[i]),
                ));
            }
        }
        if let Some(i) = (0..k).find(|&i| q_a[i] > file.q_a_max[i]) {
            return Err(Error::invalid(
                "covertness",
                format!(
                    "q_a = {} exceeds q_a_max = {} at bus {}",
                    q_a[i], file.q_a_max[i], load_bus_ids[i]
                ),
            ));
        }

        let mut ctrl = Vec::with_capacity(file.ctrl_buses.len());
        for &label in &file.ctrl_buses {
            match load_bus_ids.iter().position(|&id| id == label) {
                Some(i) if !ctrl.contains(&i) => ctrl.push(i),
                Some(_) => return Err(Error::invalid("ctrl_buses", format!("bus {label} listed twice"))),
                None => return Err(Error::invalid("ctrl_buses", format!("bus {label} is not a load bus"))),
            }
        }
        ctrl.sort_unstable();
        if let Some(i) = (0..k).find(|i| !ctrl.contains(i) && file.q_d_max[*i] != 0.0) {
            return Err(Error::invalid(
                "q_d_max zero off ctrl_buses",
                format!(
                    "q_d_max = {} at bus {} which has no control device",
                    file.q_d_max[i], load_bus_ids[i]
                ),
            ));
        }

        let b_ll = b.view((0, 0), (k, k)).into_owned();
        let ratio = singular_ratio(&b_ll);
        if !(ratio > MIN_SINGULAR_RATIO) {
            return Err(Error::invalid(
                "B_LL invertible",
                format!("smallest/largest singular value = {ratio:.3e}"),
            ));
        }

        let case = GridCase {
            name: file.name.clone().unwrap_or_else(|| "case".into()),
            description: file.description.clone(),
            base_mva: file.base_mva,
            n_loads: k,
            n_gens: g,
            load_bus_ids,
            gen_bus_ids,
            b,
            v_g: file.v_g,
            q_l_nominal: file.q_l_nominal,
            q_a_max: file.q_a_max,
            q_d_max: file.q_d_max,
            q_a,
            ctrl,
        };
        // rejects cases whose nominal point is already unstable
        StiffnessModel::build(&case)?;
        Ok(case)
    }

    /// Serializable form, always carrying `B` explicitly.
    pub fn to_case_file(&self) -> CaseFile {
        let n = self.n_loads + self.n_gens;
        CaseFile {
            name: Some(self.name.clone()),
            description: self.description.clone(),
            base_mva: self.base_mva,
            n_loads: self.n_loads,
            n_gens: self.n_gens,
            load_bus_ids: Some(self.load_bus_ids.clone()),
            gen_bus_ids: Some(self.gen_bus_ids.clone()),
            b: Some((0..n).map(|i| self.b.row(i).iter().copied().collect()).collect()),
            branches: None,
            v_g: self.v_g.clone(),
            q_l_nominal: self.q_l_nominal.clone(),
            q_a_max: self.q_a_max.clone(),
            q_d_max: self.q_d_max.clone(),
            q_a: (self.q_a != self.q_a_max).then(|| self.q_a.clone()),
            ctrl_buses: self.ctrl.iter().map(|&i| self.load_bus_ids[i]).collect(),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn n_loads(&self) -> usize {
        self.n_loads
    }

    pub fn n_gens(&self) -> usize {
        self.n_gens
    }

    pub fn load_bus_ids(&self) -> &[u32] {
        &self.load_bus_ids
    }

    pub fn gen_bus_ids(&self) -> &[u32] {
        &self.gen_bus_ids
    }

    pub fn susceptance(&self) -> &DMatrix<f64> {
        &self.b
    }

    pub fn b_ll(&self) -> DMatrix<f64> {
        self.b.view((0, 0), (self.n_loads, self.n_loads)).into_owned()
    }

    pub fn b_lg(&self) -> DMatrix<f64> {
        self.b.view((0, self.n_loads), (self.n_loads, self.n_gens)).into_owned()
    }

    pub fn v_g(&self) -> &[f64] {
        &self.v_g
    }

    pub fn q_l_nominal(&self) -> &[f64] {
        &self.q_l_nominal
    }

    pub fn q_a_max(&self) -> &[f64] {
        &self.q_a_max
    }

    pub fn q_d_max(&self) -> &[f64] {
        &self.q_d_max
    }

    /// Demand increment applied at load `k` when an attack there succeeds.
    pub fn attack_magnitude(&self) -> &[f64] {
        &self.q_a
    }

    /// 0-based indices of the load buses with control devices.
    pub fn ctrl_indices(&self) -> &[usize] {
        &self.ctrl
    }

    /// Labels of the load buses with control devices.
    pub fn ctrl_buses(&self) -> Vec<u32> {
        self.ctrl.iter().map(|&i| self.load_bus_ids[i]).collect()
    }

    pub fn is_controllable(&self, k: usize) -> bool {
        self.ctrl.binary_search(&k).is_ok()
    }
}

fn check_len(field: &str, got: usize, want: usize) -> Result<()> {
    if got == want {
        Ok(())
    } else {
        Err(Error::invalid(
            "dimensions",
            format!("{field} has length {got}, expected {want}"),
        ))
    }
}

/// Imaginary part of the bus admittance matrix for a branch list.
fn assemble_susceptance(index: &HashMap<u32, usize>, branches: &[Branch]) -> Result<DMatrix<f64>> {
    let n = index.len();
    let mut b = DMatrix::zeros(n, n);
    for br in branches {
        let (Some(&f), Some(&t)) = (index.get(&br.from), index.get(&br.to)) else {
            return Err(Error::invalid(
                "dimensions",
                format!("branch {}-{} references an unknown bus", br.from, br.to),
            ));
        };
        let z2 = br.r * br.r + br.x * br.x;
        if f == t || z2 == 0.0 {
            return Err(Error::invalid(
                "dimensions",
                format!("branch {}-{} is degenerate", br.from, br.to),
            ));
        }
        let tap = if br.tap == 0.0 { 1.0 } else { br.tap };
        let series = -br.x / z2;
        let to_self = series + br.b / 2.0;
        b[(f, f)] += to_self / (tap * tap);
        b[(t, t)] += to_self;
        b[(f, t)] -= series / tap;
        b[(t, f)] -= series / tap;
    }
    Ok(b)
}

fn singular_ratio(m: &DMatrix<f64>) -> f64 {
    let sv = m.clone().singular_values();
    let max = sv.max();
    let min = sv.min();
    if max > 0.0 {
        min / max
    } else {
        0.0
    }
}

pub(crate) fn inf_norm(x: &[f64]) -> f64 {
    x.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}

/// Stiffness matrix of a case with a reusable factorization.
#[derive(Debug, Clone)]
pub struct StiffnessModel {
    v_l_star: Vec<f64>,
    q_crit: DMatrix<f64>,
    lu: LU<f64, Dyn, Dyn>,
    delta_nominal: f64,
    b_ll_condition: f64,
    q_crit_condition: f64,
}

pub fn build_stiffness(case: &GridCase) -> Result<StiffnessModel> {
    StiffnessModel::build(case)
}

pub fn instability_index(model: &StiffnessModel, q_l: &[f64]) -> f64 {
    model.instability_index(q_l)
}

impl StiffnessModel {
    pub fn build(case: &GridCase) -> Result<Self> {
        let k = case.n_loads;
        let b_ll = case.b_ll();
        let b_lg = case.b_lg();

        let b_ll_ratio = singular_ratio(&b_ll);
        let b_ll_condition = 1.0 / b_ll_ratio;
        if !(b_ll_condition <= MAX_CONDITION) {
            return Err(Error::Singular {
                what: "B_LL",
                condition: b_ll_condition,
            });
        }
        let v_g = DVector::from_column_slice(&case.v_g);
        let rhs = -(&b_lg * v_g);
        let v_l_star = b_ll.clone().lu().solve(&rhs).ok_or(Error::Singular {
            what: "B_LL",
            condition: f64::INFINITY,
        })?;

        let v = v_l_star.as_slice();
        // v_i * v_j is commutative, so a symmetric B_LL yields a bitwise symmetric Q_crit
        let q_crit = DMatrix::from_fn(k, k, |i, j| 0.25 * b_ll[(i, j)] * (v[i] * v[j]));
        let q_ratio = singular_ratio(&q_crit);
        let q_crit_condition = 1.0 / q_ratio;
        if !(q_ratio > MIN_SINGULAR_RATIO) {
            return Err(Error::Singular {
                what: "Q_crit",
                condition: q_crit_condition,
            });
        }
        let lu = q_crit.clone().lu();

        let mut model = StiffnessModel {
            v_l_star: v.to_vec(),
            q_crit,
            lu,
            delta_nominal: f64::NAN,
            b_ll_condition,
            q_crit_condition,
        };
        let delta = model.instability_index(&case.q_l_nominal);
        if !(delta < 1.0) {
            return Err(Error::UnstableNominal { delta });
        }
        model.delta_nominal = delta;
        Ok(model)
    }

    /// Solves `Q_crit x = rhs` with the stored factorization.
    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let b = DVector::from_column_slice(rhs);
        self.lu
            .solve(&b)
            .expect("Q_crit conditioning is checked at build time")
            .as_slice()
            .to_vec()
    }

    /// `||Q_crit^-1 Q_L||_inf`.
    pub fn instability_index(&self, q_l: &[f64]) -> f64 {
        inf_norm(&self.solve(q_l))
    }

    pub fn v_l_star(&self) -> &[f64] {
        &self.v_l_star
    }

    pub fn q_crit(&self) -> &DMatrix<f64> {
        &self.q_crit
    }

    pub fn delta_nominal(&self) -> f64 {
        self.delta_nominal
    }

    pub fn b_ll_condition(&self) -> f64 {
        self.b_ll_condition
    }

    pub fn q_crit_condition(&self) -> f64 {
        self.q_crit_condition
    }
}
