//! Scenario files.
//!
//! ```toml
//! preset = "H1"                 # or: channel = [[0, 0.3, ...], ...]
//! powers_dB = 0.0               # scalar for every node, or one per node
//! sweep_dB = [0, 5, 10]         # sumrate only
//! protocols = ["Simple", "FMABC_N"]
//! outer_families = ["FMABC_OUT"]
//! min_rates = 0.01              # scalar or one per rate
//!
//! [search]
//! seed = 42
//! directions = 64
//!
//! [outputs]
//! dir = "out"
//!
//! [[groups]]
//! name = "nc"
//! members = ["FMABC_N", "PMABC_NR"]
//! ```

use std::path::PathBuf;

use mprelay::model::{ChannelGains, OuterFamily, PowerAllocation, Protocol};
use mprelay::region::SearchOptions;
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum ScalarOrList {
    Scalar(f64),
    List(Vec<f64>),
}

impl ScalarOrList {
    fn expand(&self, n: usize, key: &str) -> Result<Vec<f64>, CliError> {
        match self {
            ScalarOrList::Scalar(v) => Ok(vec![*v; n]),
            ScalarOrList::List(v) if v.len() == n => Ok(v.clone()),
            ScalarOrList::List(v) => {
                Err(CliError::Config(format!("`{key}` needs 1 or {n} values, got {}", v.len())))
            }
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSearch {
    seed: Option<u64>,
    starts: Option<usize>,
    iters: Option<usize>,
    ftol: Option<f64>,
    directions: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutputs {
    dir: Option<PathBuf>,
    sumrate: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGroup {
    name: String,
    members: Vec<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawValidate {
    draws: Option<usize>,
    lp_sets: Option<usize>,
    grid: Option<usize>,
    cached: Option<bool>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    preset: Option<String>,
    channel: Option<Vec<Vec<f64>>>,
    #[serde(rename = "powers_dB")]
    powers_db: Option<ScalarOrList>,
    #[serde(rename = "sweep_dB")]
    sweep_db: Option<Vec<f64>>,
    #[serde(default)]
    protocols: Vec<String>,
    #[serde(default)]
    outer_families: Vec<String>,
    min_rates: Option<ScalarOrList>,
    #[serde(default)]
    search: RawSearch,
    #[serde(default)]
    outputs: RawOutputs,
    #[serde(default)]
    groups: Vec<RawGroup>,
    #[serde(default)]
    validate: RawValidate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Group {
    pub name: String,
    pub members: Vec<String>,
}

/// Sizes of the validation suites.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidateOptions {
    pub draws: usize,
    pub lp_sets: usize,
    pub grid: usize,
    /// Read boundaries from `outputs.dir` instead of recomputing them.
    pub cached: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub channel: ChannelGains,
    pub powers: PowerAllocation,
    pub powers_db: Vec<f64>,
    pub sweep_db: Vec<f64>,
    pub protocols: Vec<Protocol>,
    pub outer_families: Vec<OuterFamily>,
    pub min_rates: Vec<f64>,
    pub search: SearchOptions,
    pub out_dir: PathBuf,
    pub sumrate_file: String,
    pub groups: Vec<Group>,
    pub validate: ValidateOptions,
}

pub fn preset(name: &str) -> Option<ChannelGains> {
    let rows = match name {
        "H1" => vec![
            vec![0.0, 0.3, 0.05, 1.0],
            vec![0.3, 0.0, 1.5, 1.0],
            vec![0.05, 1.5, 0.0, 0.2],
            vec![1.0, 1.0, 0.2, 0.0],
        ],
        "H2" => vec![
            vec![0.0, 0.9, 0.4, 1.0],
            vec![0.0, 0.0, 0.02, 1.0],
            vec![0.0, 0.02, 0.0, 0.5],
            vec![1.0, 1.0, 0.5, 0.0],
        ],
        _ => return None,
    };
    ChannelGains::new(2, rows).ok()
}

pub fn parse_config(text: &str) -> Result<ScenarioConfig, CliError> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| CliError::Parse(e.to_string()))?;

    let channel = match (&raw.preset, raw.channel) {
        (Some(_), Some(_)) => return Err(CliError::Config("give either `preset` or `channel`, not both".into())),
        (None, None) => return Err(CliError::Config("missing `preset` or `channel`".into())),
        (Some(name), None) => preset(name).ok_or_else(|| CliError::Config(format!("unknown preset `{name}`")))?,
        (None, Some(rows)) => {
            if rows.len() < 3 {
                return Err(CliError::Config("`channel` needs at least 3 rows".into()));
            }
            ChannelGains::new(rows.len() - 2, rows)?
        }
    };
    let m = channel.m();

    let powers_db = raw.powers_db.unwrap_or(ScalarOrList::Scalar(0.0)).expand(m + 2, "powers_dB")?;
    let powers = PowerAllocation::from_db(m, &powers_db)?;
    let min_rates = raw.min_rates.unwrap_or(ScalarOrList::Scalar(0.01)).expand(2 * m, "min_rates")?;
    if min_rates.iter().any(|r| !(r.is_finite() && *r >= 0.0)) {
        return Err(CliError::Config("`min_rates` must be finite and nonnegative".into()));
    }
    let sweep_db = raw.sweep_db.unwrap_or_default();
    if sweep_db.iter().any(|v| !v.is_finite()) {
        return Err(CliError::Config("`sweep_dB` must be finite".into()));
    }

    let protocols = raw.protocols.iter().map(|s| s.parse()).collect::<Result<Vec<Protocol>, _>>()?;
    let outer_families = raw.outer_families.iter().map(|s| s.parse()).collect::<Result<Vec<OuterFamily>, _>>()?;

    let d = SearchOptions::default();
    let search = SearchOptions {
        seed: raw.search.seed.unwrap_or(d.seed),
        starts: raw.search.starts.unwrap_or(d.starts),
        iters: raw.search.iters.unwrap_or(d.iters),
        ftol: raw.search.ftol.unwrap_or(d.ftol),
        directions: raw.search.directions.unwrap_or(d.directions),
    };
    if search.starts == 0 || search.iters == 0 || search.directions == 0 || !(search.ftol > 0.0) {
        return Err(CliError::Config("search options must be positive".into()));
    }

    let labels: Vec<&str> =
        protocols.iter().map(|p| p.name()).chain(outer_families.iter().map(|f| f.name())).collect();
    let mut groups = Vec::new();
    for g in raw.groups {
        if g.members.is_empty() {
            return Err(CliError::Config(format!("group `{}` is empty", g.name)));
        }
        if let Some(bad) = g.members.iter().find(|m| !labels.contains(&m.as_str())) {
            return Err(CliError::Config(format!("group `{}` member `{bad}` is not computed", g.name)));
        }
        if groups.iter().any(|h: &Group| h.name == g.name) {
            return Err(CliError::Config(format!("duplicate group `{}`", g.name)));
        }
        groups.push(Group { name: g.name, members: g.members });
    }

    Ok(ScenarioConfig {
        channel,
        powers,
        powers_db,
        sweep_db,
        protocols,
        outer_families,
        min_rates,
        search,
        out_dir: raw.outputs.dir.unwrap_or_else(|| PathBuf::from("out")),
        sumrate_file: raw.outputs.sumrate.unwrap_or_else(|| "sumrate.csv".into()),
        groups,
        validate: ValidateOptions {
            draws: raw.validate.draws.unwrap_or(1000),
            lp_sets: raw.validate.lp_sets.unwrap_or(100),
            grid: raw.validate.grid.unwrap_or(10),
            cached: raw.validate.cached.unwrap_or(false),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets() {
        let h1 = preset("H1").unwrap();
        assert_eq!(h1.rows()[1], vec![0.3, 0.0, 1.5, 1.0]);
        assert_eq!(h1.rows()[3], vec![1.0, 1.0, 0.2, 0.0]);
        let h2 = preset("H2").unwrap();
        assert_eq!(h2.rows()[0], vec![0.0, 0.9, 0.4, 1.0]);
        assert_eq!(h2.rows()[2], vec![0.0, 0.02, 0.0, 0.5]);
        assert!(preset("H3").is_none());
    }

    #[test]
    fn defaults() {
        let cfg = parse_config("preset = \"H1\"\nprotocols = [\"Simple\"]").unwrap();
        assert_eq!(cfg.powers.as_slice(), &[1.0; 4]);
        assert_eq!(cfg.min_rates, vec![0.01; 4]);
        assert_eq!((cfg.search.seed, cfg.search.directions, cfg.search.starts), (42, 64, 32));
        assert_eq!(cfg.out_dir, PathBuf::from("out"));
    }

    #[test]
    fn per_node_powers_and_groups() {
        let text = r#"
            channel = [[0, 1, 1, 1], [1, 0, 1, 1], [1, 1, 0, 1], [1, 1, 1, 0]]
            powers_dB = [20, 0, 0, 20]
            protocols = ["FMABC_N"]
            outer_families = ["FMABC_OUT"]
            min_rates = [0, 0.1, 0, 0.1]
            [[groups]]
            name = "f"
            members = ["FMABC_N", "FMABC_OUT"]
        "#;
        let cfg = parse_config(text).unwrap();
        assert!((cfg.powers.p(0) - 100.0).abs() < 1e-9);
        assert_eq!(cfg.powers.p(1), 1.0);
        assert_eq!(cfg.min_rates[1], 0.1);
        assert_eq!(cfg.groups[0].members.len(), 2);
    }

    #[test]
    fn rejects_bad_documents() {
        assert!(matches!(parse_config("preset = \"H1\"\nbogus = 1"), Err(CliError::Parse(_))));
        assert!(parse_config("preset = \"H1\"\nprotocols = [\"XYZ\"]").is_err());
        assert!(parse_config("preset = \"H9\"").is_err());
        assert!(parse_config("protocols = []").is_err());
        assert!(parse_config("preset = \"H1\"\npowers_dB = [0, 0]").is_err());
        assert!(parse_config("preset = \"H1\"\nmin_rates = -0.1").is_err());
        let g = "preset = \"H1\"\nprotocols = [\"Simple\"]\n[[groups]]\nname = \"a\"\nmembers = [\"FMABC\"]";
        assert!(parse_config(g).is_err());
        let e = parse_config("preset = \"H1\"\n[search]\nseed = \"x\"").unwrap_err().to_string();
        assert!(e.contains("line"), "{e}");
    }
}
