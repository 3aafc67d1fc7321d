//! Named configurations shipped with the binary.

pub const NAMES: [&str; 6] = [
    "newtonian-decay",
    "heat-kernel",
    "shear-thinning-3d",
    "shear-thinning-2d",
    "twin-contraction",
    "galerkin-refine",
];

pub fn get(name: &str) -> Option<&'static str> {
    Some(match name {
        "newtonian-decay" => include_str!("../presets/newtonian-decay.toml"),
        "heat-kernel" => include_str!("../presets/heat-kernel.toml"),
        "shear-thinning-3d" => include_str!("../presets/shear-thinning-3d.toml"),
        "shear-thinning-2d" => include_str!("../presets/shear-thinning-2d.toml"),
        "twin-contraction" => include_str!("../presets/twin-contraction.toml"),
        "galerkin-refine" => include_str!("../presets/galerkin-refine.toml"),
        _ => return None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{Experiment, Overrides};

    #[test]
    fn every_preset_parses() {
        for name in NAMES {
            let e = Experiment::parse(get(name).unwrap(), &Overrides::default())
                .unwrap_or_else(|e| panic!("{name}: {e}"));
            assert!(e.warnings.is_empty(), "{name}: {:?}", e.warnings);
        }
        assert!(get("nope").is_none());
    }
}
