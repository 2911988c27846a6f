use super::config::{parse_config_str, ScenarioSpec};
use super::HarnessError;

/// A built-in scenario file.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CatalogEntry {
    pub name: &'static str,
    pub toml: &'static str,
}

impl CatalogEntry {
    pub fn spec(&self) -> Result<ScenarioSpec, HarnessError> {
        parse_config_str(self.toml, self.name)
    }

    /// The file's `description`, read without resolving defaults.
    pub fn description(&self) -> String {
        self.toml
            .parse::<toml::Table>()
            .ok()
            .and_then(|t| t.get("description")?.as_str().map(str::to_string))
            .unwrap_or_default()
    }
}

macro_rules! entries {
    ($($name:literal),* $(,)?) => {
        &[$(CatalogEntry {
            name: $name,
            toml: include_str!(concat!("../../scenarios/", $name, ".toml")),
        }),*]
    };
}

const CATALOG: &[CatalogEntry] = entries![
    "daa-corr1",
    "daa-corr1-low",
    "daa-corr2",
    "quickfork-thm2",
    "quickfork-thm2-deep",
    "smb-thm3",
    "smb-thm3-small",
    "txwithhold-lemma1",
    "pcmod-thm4",
    "deflation-thm7",
    "horizon-thm8",
];

pub fn catalog() -> &'static [CatalogEntry] {
    CATALOG
}

pub fn catalog_entry(name: &str) -> Option<&'static CatalogEntry> {
    CATALOG.iter().find(|e| e.name == name)
}
