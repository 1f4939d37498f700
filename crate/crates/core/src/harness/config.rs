//! Run configuration: a TOML file with sections. Every field has a default
//! except `seed`, which must come from the file or the command line.
//!
//! ```toml
//! seed = 7
//! out = "results"
//!
//! [search]
//! population = 20
//! generations = 50
//!
//! [evaluator]
//! kind = "distance"
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::evaluators::{MacroConfig, TrainHyper};
use crate::rng::SeedStreams;
use crate::search_space::SearchSpaceScheme;
use crate::slow_fast::SlowFastConfig;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvaluatorKind {
    #[default]
    Distance,
    Opcost,
    Micronet,
    Tabular,
}

impl EvaluatorKind {
    pub fn is_surrogate(self) -> bool {
        self != EvaluatorKind::Micronet
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpaceSection {
    pub blocks_per_cell: usize,
}

impl Default for SpaceSection {
    fn default() -> Self {
        SpaceSection {
            blocks_per_cell: SearchSpaceScheme::default().blocks_per_cell(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluatorSection {
    pub kind: EvaluatorKind,
    /// Target genotype JSON for the distance surrogate; drawn from the seed when absent.
    pub target: Option<PathBuf>,
    /// Loss table for the tabular surrogate.
    pub table: Option<PathBuf>,
    /// Pin the reduction cell so only the normal cell is searched.
    pub frozen_reduction: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetSection {
    pub classes: usize,
    pub train_size: usize,
    pub val_size: usize,
    /// Overrides the seed-derived dataset stream.
    pub seed: Option<u64>,
}

impl Default for DatasetSection {
    fn default() -> Self {
        DatasetSection {
            classes: 4,
            train_size: 2048,
            val_size: 512,
            seed: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    #[serde(default = "default_checkpoint_every")]
    pub checkpoint_every: usize,
    #[serde(default)]
    pub search: SlowFastConfig,
    #[serde(default)]
    pub space: SpaceSection,
    #[serde(default)]
    pub evaluator: EvaluatorSection,
    /// `t_max` defaults to the generation count.
    #[serde(default)]
    pub train: TrainHyper,
    #[serde(default, rename = "macro")]
    pub macro_cfg: MacroConfig,
    #[serde(default)]
    pub dataset: DatasetSection,
}

fn default_out() -> PathBuf {
    PathBuf::from("results")
}

fn default_checkpoint_every() -> usize {
    10
}

/// Command-line adjustments applied on top of the file.
#[derive(Clone, Debug, Default)]
pub struct ConfigOverrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    /// `dotted.key=value` pairs; values are TOML literals, bare words are strings.
    pub assignments: Vec<String>,
}

impl RunConfig {
    /// Reads `path` (or starts from defaults when `None`) and applies `overrides`.
    pub fn load(path: Option<&Path>, overrides: &ConfigOverrides) -> Result<Self> {
        match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
                Self::parse(&text, &p.display().to_string(), overrides)
            }
            None => Self::parse("", "<defaults>", overrides),
        }
    }

    /// Parses TOML `text`; `name` prefixes error messages.
    pub fn parse(text: &str, name: &str, overrides: &ConfigOverrides) -> Result<Self> {
        let mut table: toml::Table = toml::from_str(text).map_err(|e| {
            let at = e
                .span()
                .map(|s| format!(":{}", line_of(text, s.start)))
                .unwrap_or_default();
            Error::Config(format!("{name}{at}: {}", e.message().trim()))
        })?;

        for assignment in &overrides.assignments {
            apply_assignment(&mut table, assignment)?;
        }
        if let Some(seed) = overrides.seed {
            let seed = i64::try_from(seed)
                .map_err(|_| Error::Config(format!("--seed {seed}: TOML integers stop at {}", i64::MAX)))?;
            table.insert("seed".into(), toml::Value::Integer(seed));
        }
        if let Some(out) = &overrides.out {
            table.insert("out".into(), toml::Value::String(out.display().to_string()));
        }
        if !table.contains_key("seed") {
            return Err(Error::Config(format!(
                "{name}: `seed` is required (set it in the file or pass --seed)"
            )));
        }
        default_t_max(&mut table);

        let config: RunConfig = table
            .try_into()
            .map_err(|e: toml::de::Error| located(text, name, None, e.message(), overrides))?;
        config
            .validate()
            .map_err(|(section, msg)| located(text, name, Some(section), &msg, overrides))?;
        Ok(config)
    }

    /// `(section, message)` for the first violated constraint.
    fn validate(&self) -> std::result::Result<(), (&'static str, String)> {
        let msg = |e: Error| match e {
            Error::Config(m) => m,
            other => other.to_string(),
        };
        if self.checkpoint_every == 0 {
            return Err(("", "checkpoint_every must be at least 1".into()));
        }
        self.search.validate().map_err(|e| ("search", msg(e)))?;
        SearchSpaceScheme::new(self.space.blocks_per_cell).map_err(|e| ("space", msg(e)))?;
        self.train.validate().map_err(|e| ("train", msg(e)))?;
        self.macro_cfg.validate().map_err(|e| ("macro", msg(e)))?;
        let d = &self.dataset;
        if d.classes < 2 {
            return Err(("dataset", format!("classes must be at least 2, got {}", d.classes)));
        }
        if d.train_size == 0 || d.val_size == 0 {
            return Err(("dataset", "train_size and val_size must be positive".into()));
        }
        let e = &self.evaluator;
        if e.kind == EvaluatorKind::Tabular && e.table.is_none() {
            return Err(("evaluator", "kind = \"tabular\" needs a table path".into()));
        }
        if e.target.is_some() && e.kind != EvaluatorKind::Distance {
            return Err(("evaluator", "target is only used by kind = \"distance\"".into()));
        }
        if e.frozen_reduction && !e.kind.is_surrogate() {
            return Err((
                "evaluator",
                "frozen_reduction needs a surrogate kind; the micronet trains both cells".into(),
            ));
        }
        Ok(())
    }

    pub fn scheme(&self) -> SearchSpaceScheme {
        SearchSpaceScheme::new(self.space.blocks_per_cell).expect("validated")
    }

    pub fn streams(&self) -> SeedStreams {
        SeedStreams::new(self.seed)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// SHA-256 over everything that influences results (the output directory does not).
    pub fn hash(&self) -> String {
        let mut view = self.clone();
        view.out = PathBuf::new();
        let canonical = serde_json::to_string(&view).expect("config serializes");
        hex(&Sha256::digest(canonical.as_bytes()))
    }
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn default_t_max(table: &mut toml::Table) {
    let generations = table
        .get("search")
        .and_then(|s| s.get("generations"))
        .and_then(toml::Value::as_integer)
        .unwrap_or(SlowFastConfig::default().generations as i64);
    let train = table
        .entry("train")
        .or_insert_with(|| toml::Value::Table(toml::Table::new()));
    if let Some(t) = train.as_table_mut() {
        t.entry("t_max").or_insert(toml::Value::Integer(generations));
    }
}

fn apply_assignment(table: &mut toml::Table, assignment: &str) -> Result<()> {
    let bad = |why: &str| Error::Config(format!("--override {assignment}: {why}"));
    let (path, raw) = assignment.split_once('=').ok_or_else(|| bad("expected key=value"))?;
    let path = path.trim();
    let raw = raw.trim();
    let value = match toml::from_str::<toml::Table>(&format!("v = {raw}")) {
        Ok(mut t) => t.remove("v").expect("just parsed"),
        Err(_) => toml::Value::String(raw.to_string()),
    };
    let keys: Vec<&str> = path.split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(bad("empty key segment"));
    }
    let (last, parents) = keys.split_last().expect("split yields one segment");
    let mut node = table;
    for key in parents {
        node = node
            .entry(key.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .ok_or_else(|| bad(&format!("`{key}` is not a section")))?;
    }
    node.insert(last.to_string(), value);
    Ok(())
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// Builds a config error pointing at the line (or override) that the message
/// is about. A key is "about" the message when the message names it.
fn located(text: &str, name: &str, section: Option<&str>, msg: &str, overrides: &ConfigOverrides) -> Error {
    let msg = msg.trim();
    for assignment in &overrides.assignments {
        let key = assignment.split('=').next().unwrap_or("").trim();
        let leaf = key.rsplit('.').next().unwrap_or(key);
        if !leaf.is_empty() && mentions(msg, leaf) {
            return Error::Config(format!("--override {assignment}: {msg}"));
        }
    }
    let mut current = "";
    let mut section_line = None;
    for (i, line) in text.lines().enumerate() {
        let t = line.trim();
        if let Some(header) = t.strip_prefix('[').and_then(|h| h.strip_suffix(']')) {
            current = header.trim();
            if Some(current) == section {
                section_line = Some(i + 1);
            }
            continue;
        }
        let Some((key, _)) = t.split_once('=') else { continue };
        let key = key.trim();
        if section.is_none_or(|s| s == current) && mentions(msg, key) {
            return Error::Config(format!("{name}:{}: {msg}", i + 1));
        }
    }
    match section_line {
        Some(l) => Error::Config(format!("{name}:{l}: {msg}")),
        None => Error::Config(format!("{name}: {msg}")),
    }
}

fn mentions(msg: &str, key: &str) -> bool {
    msg.match_indices(key).any(|(i, _)| {
        let before = msg[..i].chars().next_back();
        let after = msg[i + key.len()..].chars().next();
        let word = |c: Option<char>| c.is_some_and(|c| c.is_alphanumeric() || c == '_');
        !word(before) && !word(after)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<RunConfig> {
        RunConfig::parse(text, "run.toml", &ConfigOverrides::default())
    }

    #[test]
    fn defaults_follow_the_search_settings() {
        let c = parse("seed = 3").unwrap();
        assert_eq!(c.search.population, 20);
        assert_eq!(c.search.generations, 50);
        assert_eq!(c.train.lr0, 0.1);
        assert_eq!(c.train.weight_decay, 3e-4);
        assert_eq!(c.train.t_max, 50);
        assert_eq!(c.space.blocks_per_cell, 4);
        assert_eq!(c.checkpoint_every, 10);
        let c = parse("seed = 3\n[search]\ngenerations = 12\n").unwrap();
        assert_eq!(c.train.t_max, 12);
    }

    #[test]
    fn seed_is_mandatory() {
        let err = parse("[search]\npopulation = 4\n").unwrap_err().to_string();
        assert!(err.contains("seed"), "{err}");
        let c = RunConfig::parse(
            "",
            "x",
            &ConfigOverrides {
                seed: Some(9),
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(c.seed, 9);
    }

    #[test]
    fn errors_name_the_line() {
        let text = "seed = 1\n\n[search]\ngenerations = 5\npopulation = 7\n";
        let err = parse(text).unwrap_err().to_string();
        assert!(err.contains("run.toml:5:"), "{err}");

        let err = parse("seed = 1\n[search]\npopulaton = 4\n").unwrap_err().to_string();
        assert!(err.contains("run.toml:3:"), "{err}");

        let err = parse("seed = 1\n[macro]\nwidth = 15\n").unwrap_err().to_string();
        assert!(err.contains("run.toml:3:"), "{err}");

        let err = parse("seed = 1\n[search\n").unwrap_err().to_string();
        assert!(err.contains("run.toml:2:"), "{err}");
    }

    #[test]
    fn overrides_apply_and_are_blamed() {
        let ov = ConfigOverrides {
            assignments: vec!["search.population=6".into(), "evaluator.kind=opcost".into()],
            ..Default::default()
        };
        let c = RunConfig::parse("seed = 2", "f", &ov).unwrap();
        assert_eq!(c.search.population, 6);
        assert_eq!(c.evaluator.kind, EvaluatorKind::Opcost);

        let ov = ConfigOverrides {
            assignments: vec!["search.population=5".into()],
            ..Default::default()
        };
        let err = RunConfig::parse("seed = 2", "f", &ov).unwrap_err().to_string();
        assert!(err.contains("--override search.population=5"), "{err}");
    }

    #[test]
    fn hash_ignores_out_but_not_settings() {
        let a = parse("seed = 1").unwrap();
        let mut b = a.clone();
        b.out = PathBuf::from("elsewhere");
        assert_eq!(a.hash(), b.hash());
        b.search.population = 10;
        assert_ne!(a.hash(), b.hash());
    }

    #[test]
    fn toml_round_trip() {
        let a = parse("seed = 1\n[evaluator]\nkind = \"opcost\"\nfrozen_reduction = true\n").unwrap();
        let b = parse(&a.to_toml()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn evaluator_coherence() {
        assert!(parse("seed = 1\n[evaluator]\nkind = \"tabular\"\n").is_err());
        assert!(parse("seed = 1\n[evaluator]\nkind = \"micronet\"\nfrozen_reduction = true\n").is_err());
        assert!(parse("seed = 1\n[evaluator]\nkind = \"opcost\"\ntarget = \"t.json\"\n").is_err());
    }
}
