//! Problem instances and the regularity conditions they are checked against.
//!
//! Files have unit size, so memories and rates are measured in files.
//! Levels are stored in canonical order: decreasing popularity (users per
//! file), ties kept in input order. All level indices reported elsewhere in
//! the crate refer to this canonical order.

use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{int, parse_rational, ratio, rational_string, Rational};

/// Default level-separation constant β.
pub fn default_beta() -> Rational {
    ratio(1, 80)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Setup {
    MultiUser,
    SingleUser,
    Mixed,
}

impl Setup {
    pub fn name(self) -> &'static str {
        match self {
            Setup::MultiUser => "multi-user",
            Setup::SingleUser => "single-user",
            Setup::Mixed => "mixed",
        }
    }
}

impl fmt::Display for Setup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One popularity level. `users` counts users per cache in the multi-user
/// setup and total users in the single-user setup.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LevelSpec {
    pub files: u64,
    pub users: u64,
}

impl LevelSpec {
    pub fn new(files: u64, users: u64) -> Result<Self> {
        if files == 0 || users == 0 {
            return Err(Error::Config(format!(
                "level needs files >= 1 and users >= 1, got ({files}, {users})"
            )));
        }
        Ok(LevelSpec { files, users })
    }

    pub fn files_q(&self) -> Rational {
        int(self.files)
    }

    pub fn users_q(&self) -> Rational {
        int(self.users)
    }
}

/// Users per file of a level.
pub fn popularity(level: &LevelSpec) -> Rational {
    Rational::new(BigInt::from(level.users), BigInt::from(level.files))
}

/// Cache memory in units of files.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Memory(Rational);

impl Memory {
    pub fn new(value: Rational) -> Result<Self> {
        if value.is_negative() {
            return Err(Error::Domain(format!(
                "memory must be nonnegative, got {}",
                rational_string(&value)
            )));
        }
        Ok(Memory(value))
    }

    pub fn from_integer(n: u64) -> Self {
        Memory(int(n))
    }

    pub fn ratio(n: u64, d: u64) -> Self {
        Memory(Rational::new(BigInt::from(n), BigInt::from(d)))
    }

    pub fn zero() -> Self {
        Memory(Rational::zero())
    }

    pub fn value(&self) -> &Rational {
        &self.0
    }

    pub fn into_inner(self) -> Rational {
        self.0
    }

    pub fn parse(s: &str) -> Result<Self> {
        let q = parse_rational(s).ok_or_else(|| Error::Domain(format!("cannot parse memory value `{s}`")))?;
        Memory::new(q)
    }
}

impl fmt::Display for Memory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&rational_string(&self.0))
    }
}

/// A full problem instance.
#[derive(Clone, Debug, PartialEq)]
pub struct SystemConfig {
    pub setup: Setup,
    pub caches: u64,
    /// Levels in canonical order (class F for mixed instances).
    pub levels: Vec<LevelSpec>,
    /// Class G levels of a mixed instance, canonical order; empty otherwise.
    pub mixed_levels: Vec<LevelSpec>,
    pub beta: Rational,
    /// `input_order[k]` is the input position of canonical level `k`.
    pub input_order: Vec<usize>,
}

fn canonical_order(levels: &[LevelSpec]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..levels.len()).collect();
    // stable sort keeps input order among equal popularities
    idx.sort_by(|&a, &b| popularity(&levels[b]).cmp(&popularity(&levels[a])));
    idx
}

impl SystemConfig {
    pub fn new(setup: Setup, caches: u64, levels: Vec<LevelSpec>) -> Result<Self> {
        Self::with_mixed(setup, caches, levels, Vec::new())
    }

    pub fn multi_user(caches: u64, levels: &[(u64, u64)]) -> Result<Self> {
        let levels = levels
            .iter()
            .map(|&(n, u)| LevelSpec::new(n, u))
            .collect::<Result<Vec<_>>>()?;
        Self::new(Setup::MultiUser, caches, levels)
    }

    pub fn single_user(caches: u64, levels: &[(u64, u64)]) -> Result<Self> {
        let levels = levels
            .iter()
            .map(|&(n, k)| LevelSpec::new(n, k))
            .collect::<Result<Vec<_>>>()?;
        Self::new(Setup::SingleUser, caches, levels)
    }

    pub fn with_mixed(setup: Setup, caches: u64, levels: Vec<LevelSpec>, mixed_levels: Vec<LevelSpec>) -> Result<Self> {
        if caches == 0 {
            return Err(Error::Config("caches must be >= 1".into()));
        }
        if levels.is_empty() && (setup != Setup::Mixed || mixed_levels.is_empty()) {
            return Err(Error::EmptyLevels);
        }
        if setup != Setup::Mixed && !mixed_levels.is_empty() {
            return Err(Error::Config("mixed_levels is only allowed for the mixed setup".into()));
        }
        for l in levels.iter().chain(&mixed_levels) {
            LevelSpec::new(l.files, l.users)?;
        }
        let order = canonical_order(&levels);
        let sorted = order.iter().map(|&i| levels[i]).collect();
        let g_order = canonical_order(&mixed_levels);
        let g_sorted = g_order.iter().map(|&i| mixed_levels[i]).collect();
        Ok(SystemConfig {
            setup,
            caches,
            levels: sorted,
            mixed_levels: g_sorted,
            beta: default_beta(),
            input_order: order,
        })
    }

    pub fn with_beta(mut self, beta: Rational) -> Result<Self> {
        if !beta.is_positive() || beta >= Rational::one() {
            return Err(Error::Config("beta must lie in (0, 1)".into()));
        }
        self.beta = beta;
        Ok(self)
    }

    pub fn level_count(&self) -> usize {
        self.levels.len()
    }

    pub fn total_files(&self) -> u64 {
        self.levels.iter().map(|l| l.files).sum()
    }

    pub fn total_users(&self) -> u64 {
        match self.setup {
            Setup::MultiUser => self.caches * self.levels.iter().map(|l| l.users).sum::<u64>(),
            Setup::SingleUser => self.levels.iter().map(|l| l.users).sum(),
            Setup::Mixed => {
                self.caches * self.levels.iter().map(|l| l.users).sum::<u64>()
                    + self.mixed_levels.iter().map(|l| l.users).sum::<u64>()
            }
        }
    }

    /// Class F of a mixed instance as a multi-user configuration.
    pub fn class_f(&self) -> Option<SystemConfig> {
        if self.levels.is_empty() {
            return None;
        }
        Some(SystemConfig {
            setup: Setup::MultiUser,
            caches: self.caches,
            levels: self.levels.clone(),
            mixed_levels: Vec::new(),
            beta: self.beta.clone(),
            input_order: (0..self.levels.len()).collect(),
        })
    }

    /// Class G of a mixed instance as a single-user configuration.
    pub fn class_g(&self) -> Option<SystemConfig> {
        if self.mixed_levels.is_empty() {
            return None;
        }
        Some(SystemConfig {
            setup: Setup::SingleUser,
            caches: self.caches,
            levels: self.mixed_levels.clone(),
            mixed_levels: Vec::new(),
            beta: self.beta.clone(),
            input_order: (0..self.mixed_levels.len()).collect(),
        })
    }

    pub fn require(&self, setup: Setup) -> Result<()> {
        if self.setup != setup {
            return Err(Error::WrongSetup {
                expected: setup.name(),
                found: self.setup.name(),
            });
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: ConfigFile = serde_json::from_str(text)?;
        raw.try_into()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&ConfigFile::from(self)).expect("config serializes")
    }
}

/// On-disk JSON layout of a configuration.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub setup: Setup,
    pub caches: u64,
    #[serde(default)]
    pub levels: Vec<LevelSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub mixed_levels: Vec<LevelSpec>,
    /// Optional override of β as a rational string such as "1/80".
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<String>,
}

impl TryFrom<ConfigFile> for SystemConfig {
    type Error = Error;

    fn try_from(raw: ConfigFile) -> Result<Self> {
        let cfg = SystemConfig::with_mixed(raw.setup, raw.caches, raw.levels, raw.mixed_levels)?;
        match raw.beta {
            Some(b) => {
                let q = parse_rational(&b).ok_or_else(|| Error::Config(format!("cannot parse beta `{b}`")))?;
                cfg.with_beta(q)
            }
            None => Ok(cfg),
        }
    }
}

impl From<&SystemConfig> for ConfigFile {
    fn from(c: &SystemConfig) -> Self {
        ConfigFile {
            setup: c.setup,
            caches: c.caches,
            levels: c.levels.clone(),
            mixed_levels: c.mixed_levels.clone(),
            beta: (c.beta != default_beta()).then(|| rational_string(&c.beta)),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Rule {
    #[serde(rename = "MU-FILES")]
    MuFiles,
    #[serde(rename = "MU-POP")]
    MuPop,
    #[serde(rename = "SU-FILES")]
    SuFiles,
    #[serde(rename = "SU-COUNT")]
    SuCount,
}

impl Rule {
    pub fn id(self) -> &'static str {
        match self {
            Rule::MuFiles => "MU-FILES",
            Rule::MuPop => "MU-POP",
            Rule::SuFiles => "SU-FILES",
            Rule::SuCount => "SU-COUNT",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LevelRef {
    Single(usize),
    Pair(usize, usize),
    Global,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub rule: Rule,
    pub levels: LevelRef,
    pub message: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub ok: bool,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    fn from_violations(violations: Vec<Violation>) -> Self {
        ValidationReport {
            ok: violations.is_empty(),
            violations,
        }
    }
}

fn check_levels_mu(caches: u64, levels: &[LevelSpec], beta: &Rational) -> Vec<Violation> {
    let mut out = Vec::new();
    let k = int(caches);
    for (i, l) in levels.iter().enumerate() {
        if l.files_q() < &k * l.users_q() {
            out.push(Violation {
                rule: Rule::MuFiles,
                levels: LevelRef::Single(i),
                message: format!("level {i}: N = {} < K*U = {}", l.files, caches * l.users),
            });
        }
    }
    let separation = (beta * beta).recip();
    // Every pair is checked, not only neighbours in popularity order.
    for i in 0..levels.len() {
        for j in (i + 1)..levels.len() {
            let (pi, pj) = (popularity(&levels[i]), popularity(&levels[j]));
            let (hi, lo, a, b) = if pi >= pj { (pi, pj, i, j) } else { (pj, pi, j, i) };
            let r = hi / lo;
            if r < separation {
                out.push(Violation {
                    rule: Rule::MuPop,
                    levels: LevelRef::Pair(a, b),
                    message: format!(
                        "levels ({a}, {b}): popularity ratio {} below 1/beta^2 = {} (checked pairwise)",
                        rational_string(&r),
                        rational_string(&separation)
                    ),
                });
            }
        }
    }
    out
}

fn check_levels_su(caches: u64, levels: &[LevelSpec]) -> Vec<Violation> {
    let mut out = Vec::new();
    for (i, l) in levels.iter().enumerate() {
        if l.files < l.users {
            out.push(Violation {
                rule: Rule::SuFiles,
                levels: LevelRef::Single(i),
                message: format!("level {i}: N = {} < K_i = {}", l.files, l.users),
            });
        }
    }
    let total: u64 = levels.iter().map(|l| l.users).sum();
    if total != caches {
        out.push(Violation {
            rule: Rule::SuCount,
            levels: LevelRef::Global,
            message: format!("sum of K_i = {total} differs from K = {caches}"),
        });
    }
    out
}

/// Checks `N_i >= K U_i` for every level and the popularity separation
/// `ratio >= 1/beta^2` for every pair of levels.
pub fn validate_multi_user(config: &SystemConfig) -> Result<ValidationReport> {
    config.require(Setup::MultiUser)?;
    if config.levels.is_empty() {
        return Err(Error::EmptyLevels);
    }
    Ok(ValidationReport::from_violations(check_levels_mu(
        config.caches,
        &config.levels,
        &config.beta,
    )))
}

/// Checks `N_i >= K_i` for every level and `Σ K_i = K`.
pub fn validate_single_user(config: &SystemConfig) -> Result<ValidationReport> {
    config.require(Setup::SingleUser)?;
    if config.levels.is_empty() {
        return Err(Error::EmptyLevels);
    }
    Ok(ValidationReport::from_violations(check_levels_su(
        config.caches,
        &config.levels,
    )))
}

/// Validates a mixed instance: class F as multi-user, class G as single-user.
pub fn validate_mixed(config: &SystemConfig) -> Result<ValidationReport> {
    config.require(Setup::Mixed)?;
    let mut v = check_levels_mu(config.caches, &config.levels, &config.beta);
    if !config.mixed_levels.is_empty() {
        v.extend(check_levels_su(config.caches, &config.mixed_levels));
    }
    Ok(ValidationReport::from_violations(v))
}

pub fn validate(config: &SystemConfig) -> Result<ValidationReport> {
    match config.setup {
        Setup::MultiUser => validate_multi_user(config),
        Setup::SingleUser => validate_single_user(config),
        Setup::Mixed => validate_mixed(config),
    }
}

/// Whether regularity violations are reported or rejected.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Mode {
    #[default]
    Permissive,
    Strict,
}

/// Returns the regularity flag in permissive mode, or an error listing the
/// violations in strict mode.
pub fn regularity(config: &SystemConfig, mode: Mode) -> Result<bool> {
    let report = validate(config)?;
    if !report.ok && mode == Mode::Strict {
        return Err(Error::Regularity(report.violations));
    }
    Ok(report.ok)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rules(r: &ValidationReport) -> Vec<(Rule, LevelRef)> {
        r.violations.iter().map(|v| (v.rule, v.levels)).collect()
    }

    #[test]
    fn multi_user_single_level() {
        let ok = SystemConfig::multi_user(4, &[(8, 2)]).unwrap();
        assert!(validate_multi_user(&ok).unwrap().ok);
        let bad = SystemConfig::multi_user(4, &[(7, 2)]).unwrap();
        let r = validate_multi_user(&bad).unwrap();
        assert!(!r.ok);
        assert_eq!(rules(&r), vec![(Rule::MuFiles, LevelRef::Single(0))]);
    }

    #[test]
    fn multi_user_popularity_separation() {
        // (16/32)/(1/25600) = 12800 >= 6400
        let cfg = SystemConfig::multi_user(2, &[(32, 16), (25600, 1)]).unwrap();
        assert!(validate_multi_user(&cfg).unwrap().ok);
        // ratio 6400 exactly passes, 6399 fails
        let edge = SystemConfig::multi_user(1, &[(1, 1), (6400, 1)]).unwrap();
        assert!(validate_multi_user(&edge).unwrap().ok);
        let near = SystemConfig::multi_user(1, &[(1, 1), (6399, 1)]).unwrap();
        assert_eq!(
            rules(&validate_multi_user(&near).unwrap()),
            vec![(Rule::MuPop, LevelRef::Pair(0, 1))]
        );
    }

    #[test]
    fn equal_popularities_violate_separation() {
        let cfg = SystemConfig::multi_user(2, &[(10, 1), (20, 2)]).unwrap();
        let r = validate_multi_user(&cfg).unwrap();
        assert_eq!(rules(&r), vec![(Rule::MuPop, LevelRef::Pair(0, 1))]);
    }

    #[test]
    fn single_user_rules() {
        let ok = SystemConfig::single_user(4, &[(4, 3), (100, 1)]).unwrap();
        assert!(validate_single_user(&ok).unwrap().ok);
        let bad = SystemConfig::single_user(4, &[(2, 3), (100, 1)]).unwrap();
        let r = validate_single_user(&bad).unwrap();
        // (2,3) has popularity 3/2, sorts first
        assert_eq!(rules(&r), vec![(Rule::SuFiles, LevelRef::Single(0))]);
        let count = SystemConfig::single_user(5, &[(4, 3), (100, 1)]).unwrap();
        assert_eq!(
            rules(&validate_single_user(&count).unwrap()),
            vec![(Rule::SuCount, LevelRef::Global)]
        );
    }

    #[test]
    fn wrong_setup_and_empty_levels() {
        let mu = SystemConfig::multi_user(4, &[(8, 2)]).unwrap();
        assert!(matches!(validate_single_user(&mu), Err(Error::WrongSetup { .. })));
        assert!(matches!(SystemConfig::multi_user(4, &[]), Err(Error::EmptyLevels)));
    }

    #[test]
    fn popularity_values() {
        assert_eq!(popularity(&LevelSpec::new(8, 2).unwrap()), ratio(1, 4));
        assert_eq!(popularity(&LevelSpec::new(25600, 1).unwrap()), ratio(1, 25600));
        assert_eq!(popularity(&LevelSpec::new(4, 4).unwrap()), int(1));
    }

    #[test]
    fn canonical_order_is_stable() {
        let cfg = SystemConfig::single_user(6, &[(100, 1), (10, 1), (4, 4), (20, 2)]).unwrap();
        let pops: Vec<_> = cfg.levels.iter().map(popularity).collect();
        assert!(pops.windows(2).all(|w| w[0] >= w[1]));
        // (10,1) and (20,2) tie; input order kept
        assert_eq!(cfg.input_order, vec![2, 1, 3, 0]);
    }

    #[test]
    fn strict_mode_rejects() {
        let bad = SystemConfig::multi_user(4, &[(7, 2)]).unwrap();
        assert!(!regularity(&bad, Mode::Permissive).unwrap());
        assert!(matches!(regularity(&bad, Mode::Strict), Err(Error::Regularity(_))));
    }

    #[test]
    fn json_schema() {
        let text = r#"{"setup":"multi-user","caches":4,"levels":[{"files":8,"users":2}]}"#;
        let cfg = SystemConfig::from_json(text).unwrap();
        assert_eq!(cfg.setup, Setup::MultiUser);
        assert_eq!(cfg.levels, vec![LevelSpec { files: 8, users: 2 }]);
        let back = SystemConfig::from_json(&cfg.to_json()).unwrap();
        assert_eq!(back, cfg);
        let mixed = r#"{"setup":"mixed","caches":2,"levels":[{"files":4,"users":1}],
            "mixed_levels":[{"files":9,"users":2}],"beta":"1/10"}"#;
        let m = SystemConfig::from_json(mixed).unwrap();
        assert_eq!(m.mixed_levels.len(), 1);
        assert_eq!(m.beta, ratio(1, 10));
        assert!(SystemConfig::from_json(r#"{"setup":"x","caches":1,"levels":[]}"#).is_err());
        assert!(
            SystemConfig::from_json(r#"{"setup":"single-user","caches":1,"levels":[{"files":0,"users":1}]}"#).is_err()
        );
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn passing_configs_are_separated(levels in proptest::collection::vec((1u64..100_000, 1u64..20), 1..5), k in 1u64..8) {
                let cfg = SystemConfig::multi_user(k, &levels).unwrap();
                let r1 = validate_multi_user(&cfg).unwrap();
                let r2 = validate_multi_user(&cfg).unwrap();
                prop_assert_eq!(&r1, &r2);
                let pops: Vec<_> = cfg.levels.iter().map(popularity).collect();
                prop_assert!(pops.windows(2).all(|w| w[0] >= w[1]));
                if r1.ok {
                    let b2 = &cfg.beta * &cfg.beta;
                    for i in 0..pops.len() {
                        for j in 0..pops.len() {
                            if i != j {
                                let r = &pops[i] / &pops[j];
                                prop_assert!(r >= b2.recip() || r <= b2);
                            }
                        }
                    }
                }
            }
        }
    }
}
