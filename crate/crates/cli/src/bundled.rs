//! Scenarios shipped with the binary.

pub const SCENARIOS: &[(&str, &str)] = &[
    ("trivial", include_str!("../scenarios/trivial.json")),
    ("winding-one", include_str!("../scenarios/winding-one.json")),
    ("constant-coboundary", include_str!("../scenarios/constant-coboundary.json")),
    ("lacunary", include_str!("../scenarios/lacunary.json")),
];

pub fn lookup(name: &str) -> Option<&'static str> {
    SCENARIOS.iter().find(|(n, _)| *n == name).map(|(_, text)| *text)
}
