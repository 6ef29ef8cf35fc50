//! Reference detector configurations shipped with the crate.

use crate::detector::DetectorModel;
use crate::io::parse_detector_config;

pub const NAMES: [&str; 3] = ["ligo", "lisa_pathfinder", "auriga"];

const LIGO: &str = include_str!("../configs/ligo.json");
const LISA_PATHFINDER: &str = include_str!("../configs/lisa_pathfinder.json");
const AURIGA: &str = include_str!("../configs/auriga.json");

/// JSON text of a bundled config.
pub fn source(name: &str) -> Option<&'static str> {
    match name {
        "ligo" => Some(LIGO),
        "lisa_pathfinder" => Some(LISA_PATHFINDER),
        "auriga" => Some(AURIGA),
        _ => None,
    }
}

pub fn by_name(name: &str) -> Option<DetectorModel> {
    source(name).map(|text| parse_detector_config(text, name).expect("bundled config is valid"))
}

pub fn ligo() -> DetectorModel {
    by_name("ligo").expect("bundled")
}

pub fn lisa_pathfinder() -> DetectorModel {
    by_name("lisa_pathfinder").expect("bundled")
}

pub fn auriga() -> DetectorModel {
    by_name("auriga").expect("bundled")
}
