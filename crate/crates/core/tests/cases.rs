use std::path::PathBuf;

use voltsec::cases;
use voltsec::grid::CaseFile;
use voltsec::{load_case, Error, GridCase, StiffnessModel};

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

fn max_abs_diff(a: &GridCase, b: &GridCase) -> f64 {
    (a.susceptance() - b.susceptance()).amax()
}

#[test]
fn branch_lists_assemble_the_bundled_matrices() {
    for (file, bundled) in [
        ("ieee9_branches.json", cases::ieee9()),
        ("ieee39_branches.json", cases::ieee39()),
    ] {
        let built = load_case(data(file)).unwrap();
        assert_eq!(built.n_loads(), bundled.n_loads());
        assert_eq!(built.ctrl_indices(), bundled.ctrl_indices());
        assert!(max_abs_diff(&built, &bundled) < 1e-12, "{file}");
    }
}

// reference values computed with numpy from the same case data
#[test]
fn nominal_index_of_bundled_cases() {
    for (case, want) in [
        (cases::ieee9(), 0.7221966491320801),
        (cases::ieee39(), 0.43485230002729774),
    ] {
        let got = StiffnessModel::build(&case).unwrap().delta_nominal();
        assert!((got - want).abs() / want < 1e-9, "{}: {got}", case.name());
    }
}

#[test]
fn dimensions_of_bundled_cases() {
    let c9 = cases::ieee9();
    assert_eq!((c9.n_loads(), c9.n_gens()), (6, 3));
    assert_eq!(c9.ctrl_buses(), vec![4, 5, 6, 8]);
    let c39 = cases::ieee39();
    assert_eq!((c39.n_loads(), c39.n_gens()), (29, 10));
    assert_eq!(c39.ctrl_buses(), vec![5, 6, 7, 8, 10, 11, 13]);
    assert!(cases::bundled("ieee118").is_none());
}

#[test]
fn case_file_round_trip() {
    let case = cases::ieee39();
    let text = serde_json::to_string(&case.to_case_file()).unwrap();
    let back = GridCase::from_json_str(&text).unwrap();
    assert_eq!(max_abs_diff(&case, &back), 0.0);
    assert_eq!(back.q_l_nominal(), case.q_l_nominal());
    assert_eq!(back.ctrl_buses(), case.ctrl_buses());
}

#[test]
fn missing_file_is_an_io_error() {
    assert!(matches!(load_case(data("nope.json")), Err(Error::Io { .. })));
}

#[test]
fn unknown_fields_are_rejected() {
    let mut v: serde_json::Value = serde_json::from_str(cases::IEEE9_JSON).unwrap();
    v["extra"] = serde_json::json!(1);
    assert!(matches!(
        GridCase::from_json_str(&v.to_string()),
        Err(Error::Parse { .. })
    ));
    let file: CaseFile = serde_json::from_str(cases::IEEE9_JSON).unwrap();
    assert_eq!(file.n_loads, 6);
}

#[test]
fn overloaded_case_is_rejected() {
    let mut file: CaseFile = serde_json::from_str(cases::IEEE9_JSON).unwrap();
    file.q_l_nominal.iter_mut().for_each(|q| *q *= 2.0);
    assert!(matches!(
        GridCase::from_case_file(file),
        Err(Error::UnstableNominal { .. })
    ));
}
