//! Scenarios shipped with the binary.

const BUILTINS: [(&str, &str); 7] = [
    ("weak-moser-example", include_str!("../scenarios/weak-moser-example.scn")),
    ("strong-moser-example", include_str!("../scenarios/strong-moser-example.scn")),
    ("radial-euler", include_str!("../scenarios/radial-euler.scn")),
    ("lagrangian-pair", include_str!("../scenarios/lagrangian-pair.scn")),
    ("isotropic-exactness", include_str!("../scenarios/isotropic-exactness.scn")),
    ("symplectic-plane-refusal", include_str!("../scenarios/symplectic-plane-refusal.scn")),
    ("non-euler-detection", include_str!("../scenarios/non-euler-detection.scn")),
];

pub fn list_scenarios() -> Vec<&'static str> {
    BUILTINS.iter().map(|(n, _)| *n).collect()
}

pub fn builtin_source(name: &str) -> Option<&'static str> {
    BUILTINS.iter().find(|(n, _)| *n == name).map(|(_, s)| *s)
}
