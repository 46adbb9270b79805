//! Bundled example problems, embedded at compile time and loaded through
//! the ordinary problem-file parser.

use crate::problem::{ProblemError, ProblemFile};

pub struct Preset {
    pub name: &'static str,
    source: &'static str,
}

pub const PRESETS: &[Preset] = &[
    Preset {
        name: "rc_ladder_ivp",
        source: include_str!("../presets/rc_ladder_ivp.toml"),
    },
    Preset {
        name: "rc_ladder_bvp",
        source: include_str!("../presets/rc_ladder_bvp.toml"),
    },
    Preset {
        name: "rotation_bvp",
        source: include_str!("../presets/rotation_bvp.toml"),
    },
    Preset {
        name: "exp_decay_ivp",
        source: include_str!("../presets/exp_decay_ivp.toml"),
    },
    Preset {
        name: "constant_ivp",
        source: include_str!("../presets/constant_ivp.toml"),
    },
];

impl Preset {
    pub fn parse(&self) -> Result<ProblemFile, ProblemError> {
        ProblemFile::from_toml_str(self.source)
    }
}

pub fn find(name: &str) -> Option<&'static Preset> {
    PRESETS.iter().find(|p| p.name == name)
}

/// `(name, description)` pairs in a fixed order.
pub fn list() -> Vec<(&'static str, String)> {
    PRESETS
        .iter()
        .map(|p| {
            let description = p
                .parse()
                .ok()
                .and_then(|f| f.description)
                .unwrap_or_default();
            (p.name, description)
        })
        .collect()
}
