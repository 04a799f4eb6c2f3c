//! `key = value` config files for the search command. `#` starts a
//! comment; unknown keys are rejected. Flags override file values.

use anyhow::{anyhow, bail, Context, Result};
use defiperf_core::nt::Natural;
use defiperf_core::prune::RuleSet;
use defiperf_core::search::SearchConfig;

/// The section 5 restriction on the two smallest primes, shipped as an
/// opt-in preset and never assumed by default.
pub const PRESET_PAIRS: &[(u64, u64)] = &[(3, 5), (3, 7), (3, 11), (3, 13), (3, 17)];
pub const PRESET_NAME: &str = "paper-s5";

#[derive(Debug, Clone, Default)]
pub struct SearchOverrides {
    pub omega: Option<usize>,
    pub odd: Option<bool>,
    pub prime_max: Option<u64>,
    pub exp_max: Option<u32>,
    pub value_max: Option<Natural>,
    pub rules: Option<RuleSet>,
    pub preset: Option<String>,
    pub max_leaves: Option<u64>,
    pub time_cap_secs: Option<u64>,
    pub seed: Option<u64>,
    pub trace: Option<bool>,
}

impl SearchOverrides {
    /// Later sources win field by field.
    pub fn merge(mut self, over: SearchOverrides) -> SearchOverrides {
        macro_rules! take {
            ($f:ident) => {
                if over.$f.is_some() {
                    self.$f = over.$f;
                }
            };
        }
        take!(omega);
        take!(odd);
        take!(prime_max);
        take!(exp_max);
        take!(value_max);
        take!(rules);
        take!(preset);
        take!(max_leaves);
        take!(time_cap_secs);
        take!(seed);
        take!(trace);
        self
    }

    pub fn into_config(self) -> Result<(SearchConfig, Option<u64>)> {
        let mut cfg = SearchConfig {
            omega: self.omega.unwrap_or(4),
            odd_only: self.odd.unwrap_or(false),
            prime_min: Vec::new(),
            prime_max: self.prime_max.unwrap_or(300),
            exp_max: self.exp_max.unwrap_or(16),
            value_max: self.value_max,
            pair_presets: None,
            rules: self.rules.unwrap_or(RuleSet::ALL),
            max_leaves: self.max_leaves,
            seed: self.seed.unwrap_or(1),
            trace: self.trace.unwrap_or(false),
        };
        if let Some(name) = &self.preset {
            if name != PRESET_NAME {
                bail!("unknown preset {name}; available: {PRESET_NAME}");
            }
            cfg.pair_presets = Some(PRESET_PAIRS.to_vec());
        }
        Ok((cfg, self.time_cap_secs))
    }
}

pub fn parse_rules(spec: &str) -> Result<RuleSet> {
    match spec {
        "all" => return Ok(RuleSet::ALL),
        "none" => return Ok(RuleSet::NONE),
        _ => {}
    }
    let mut rules = RuleSet::NONE;
    for part in spec.split(',') {
        match part.trim() {
            "bound" => rules.bound = true,
            "forced-divisor" => rules.forced_divisor = true,
            "order" => rules.order = true,
            "quadratic-residue" => rules.quadratic_residue = true,
            other => bail!("unknown rule {other}; expected all, none, or a comma list of bound, forced-divisor, order, quadratic-residue"),
        }
    }
    Ok(rules)
}

/// Parses a `key = value` file into overrides.
pub fn parse_config_file(text: &str) -> Result<SearchOverrides> {
    let mut over = SearchOverrides::default();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| anyhow!("line {}: expected key = value", idx + 1))?;
        let (key, value) = (key.trim(), value.trim());
        let ctx = || format!("line {}: bad value for {key}", idx + 1);
        match key {
            "omega" => over.omega = Some(value.parse().with_context(ctx)?),
            "odd" => over.odd = Some(value.parse().with_context(ctx)?),
            "prime_max" => over.prime_max = Some(value.parse().with_context(ctx)?),
            "exp_max" => over.exp_max = Some(value.parse().with_context(ctx)?),
            "value_max" => over.value_max = Some(value.parse().with_context(ctx)?),
            "rules" => over.rules = Some(parse_rules(value)?),
            "preset" => over.preset = Some(value.to_string()),
            "max_leaves" => over.max_leaves = Some(value.parse().with_context(ctx)?),
            "time_cap_secs" => over.time_cap_secs = Some(value.parse().with_context(ctx)?),
            "seed" => over.seed = Some(value.parse().with_context(ctx)?),
            "trace" => over.trace = Some(value.parse().with_context(ctx)?),
            other => bail!("line {}: unknown key {other}", idx + 1),
        }
    }
    Ok(over)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_merges() {
        let file = "\
# search defaults for the desk run
omega = 4
odd = true
prime_max = 50   # inline comment
exp_max = 6
rules = bound,order
";
        let from_file = parse_config_file(file).unwrap();
        let flags = SearchOverrides { prime_max: Some(40), ..Default::default() };
        let (cfg, _) = from_file.merge(flags).into_config().unwrap();
        assert_eq!(cfg.omega, 4);
        assert!(cfg.odd_only);
        assert_eq!(cfg.prime_max, 40);
        assert_eq!(cfg.exp_max, 6);
        assert!(cfg.rules.bound && cfg.rules.order);
        assert!(!cfg.rules.forced_divisor && !cfg.rules.quadratic_residue);
    }

    #[test]
    fn rejects_unknown_keys_and_rules() {
        assert!(parse_config_file("bogus = 1").is_err());
        assert!(parse_rules("bound,magic").is_err());
        assert_eq!(parse_rules("none").unwrap(), RuleSet::NONE);
    }

    #[test]
    fn preset_expands() {
        let over = SearchOverrides {
            preset: Some(PRESET_NAME.to_string()),
            omega: Some(4),
            ..Default::default()
        };
        let (cfg, _) = over.into_config().unwrap();
        assert_eq!(cfg.pair_presets.as_deref(), Some(PRESET_PAIRS));
    }
}
