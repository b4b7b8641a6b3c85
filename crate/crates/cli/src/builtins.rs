//! Builtin scenarios, embedded as scenario files so loading them exercises
//! the same parser and validation as user files.

use crate::scenario::{load_str, LoadError, LoadedScenario};

pub const BUILTIN_SOURCES: [(&str, &str); 6] = [
    ("example1", include_str!("../builtins/example1.toml")),
    ("example1-jbar", include_str!("../builtins/example1-jbar.toml")),
    ("example1-golden", include_str!("../builtins/example1-golden.toml")),
    ("example2", include_str!("../builtins/example2.toml")),
    ("example2-jbar", include_str!("../builtins/example2-jbar.toml")),
    ("paraboloid", include_str!("../builtins/paraboloid.toml")),
];

pub fn names() -> Vec<&'static str> {
    BUILTIN_SOURCES.iter().map(|(n, _)| *n).collect()
}

pub fn source(name: &str) -> Option<&'static str> {
    BUILTIN_SOURCES
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, s)| *s)
}

pub fn builtin(name: &str) -> Result<LoadedScenario, LoadError> {
    let src = source(name).ok_or_else(|| {
        LoadError::validation(
            "builtin",
            name,
            format!("unknown builtin (available: {})", names().join(", ")),
        )
    })?;
    load_str(src)
}
