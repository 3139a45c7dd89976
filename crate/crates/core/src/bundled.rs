//! Models shipped with the crate.

macro_rules! models {
    ($($name:literal),* $(,)?) => {
        /// `(file name, source)` of every bundled model.
        pub const MODELS: &[(&str, &str)] = &[$(($name, include_str!(concat!("../models/", $name)))),*];
    };
}

models!(
    "example1.pta",
    "geometric_a.pta",
    "geometric_b.pta",
    "geometric_c.pta",
    "geometric_d.pta",
    "cycle_0999.pta",
    "two_step.pta",
    "branching.pta",
    "two_cycles.pta",
    "sequential.pta",
    "inescapable.pta",
    "unbounded.pta",
);

/// Source of a bundled model, looked up by file name with or without the
/// `.pta` extension.
pub fn get(name: &str) -> Option<&'static str> {
    let file = std::path::Path::new(name).file_name()?.to_str()?;
    let stem = file.strip_suffix(".pta").unwrap_or(file);
    MODELS
        .iter()
        .find(|(n, _)| n.strip_suffix(".pta") == Some(stem))
        .map(|(_, src)| *src)
}
