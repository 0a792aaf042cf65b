//! Grid cases shipped with the crate.

use crate::error::Result;
use crate::grid::GridCase;

pub const IEEE9_JSON: &str = include_str!("../data/ieee9.json");
pub const IEEE39_JSON: &str = include_str!("../data/ieee39.json");

/// IEEE 9-bus: 6 loads, controllable buses 4, 5, 6 and 8.
pub fn ieee9() -> GridCase {
    GridCase::from_json_str(IEEE9_JSON).expect("bundled ieee9 case is valid")
}

/// IEEE 39-bus: 29 loads, controllable buses 5, 6, 7, 8, 10, 11 and 13.
pub fn ieee39() -> GridCase {
    GridCase::from_json_str(IEEE39_JSON).expect("bundled ieee39 case is valid")
}

/// Looks up a bundled case by name (`ieee9`, `ieee39`).
pub fn bundled(name: &str) -> Option<Result<GridCase>> {
    match name {
        "ieee9" => Some(GridCase::from_json_str(IEEE9_JSON)),
        "ieee39" => Some(GridCase::from_json_str(IEEE39_JSON)),
        _ => None,
    }
}
