//! Named configurations compiled into the binary.

macro_rules! presets {
    ($($name:literal),* $(,)?) => {
        pub const PRESETS: &[(&str, &str)] =
            &[$(($name, include_str!(concat!("../presets/", $name, ".toml")))),*];
    };
}

presets!(
    "cauchy_rotation",
    "certify_rotation",
    "constant_walk",
    "contraction_geodesic",
    "contraction_splitting",
    "evi_splitting",
    "geodesic_flow",
    "pairing_calculus",
    "rhombus_pairing",
    "rotation_disc",
    "sign_filippov",
    "splitting_dirac",
    "splitting_lebesgue",
    "splitting_pairing",
);

pub fn get(name: &str) -> Option<&'static str> {
    PRESETS.iter().find(|(n, _)| *n == name).map(|(_, text)| *text)
}
