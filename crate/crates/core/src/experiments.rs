//! Memory sweeps, the two dichotomy constructions, the mixed-setup rate and
//! seeded gap audits over random instances.

use std::cmp::Ordering;

use num_bigint::BigInt;
use num_traits::{One, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::bounds::{appendix_a3_params, GapClass};
use crate::error::{Error, Result};
use crate::model::{validate_multi_user, Memory, Setup, SystemConfig};
use crate::multi_user::{find_m_feasible_partition, level_bounds, rate_memory_sharing, refine};
use crate::numeric::{format_significant, int, parse_rational, rational_string, Rational, Real};
use crate::report::{analyze, MixedWitness, RateReport, Witness, DIGITS};
use crate::single_level::rate_single_level_real;
use crate::single_user::{partition_su, rate_clustering};

/// Default size of the `γ` grid of the mixed setup (`k/100`, `k = 0..=100`).
pub const DEFAULT_GAMMA_POINTS: usize = 101;
/// Default number of sweep points.
pub const DEFAULT_SWEEP_POINTS: usize = 33;

/// Memory grid of a sweep: sorted, deduplicated, within `[0, ΣN]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SweepSpec {
    pub grid: Vec<Rational>,
}

impl SweepSpec {
    pub fn new(mut grid: Vec<Rational>, total_files: u64) -> Result<Self> {
        let top = int(total_files);
        if let Some(bad) = grid.iter().find(|m| m < &&Rational::zero() || m > &&top) {
            return Err(Error::Config(format!(
                "grid value {} outside [0, {total_files}]",
                rational_string(bad)
            )));
        }
        grid.sort();
        grid.dedup();
        Ok(SweepSpec { grid })
    }

    /// `n` evenly spaced points from `a` to `b` inclusive.
    pub fn range(a: &Rational, b: &Rational, n: usize, total_files: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::Config("grid needs at least one point".into()));
        }
        if a > b {
            return Err(Error::Config("grid start exceeds its end".into()));
        }
        let grid = if n == 1 {
            vec![a.clone()]
        } else {
            let step = (b - a) / int(n as u64 - 1);
            (0..n).map(|k| a + &step * int(k as u64)).collect()
        };
        Self::new(grid, total_files)
    }

    /// Parses `a:b:n`.
    pub fn parse(text: &str, total_files: u64) -> Result<Self> {
        let parts: Vec<&str> = text.split(':').collect();
        let bad = || Error::Config(format!("grid `{text}` is not of the form a:b:n"));
        if parts.len() != 3 {
            return Err(bad());
        }
        let a = parse_rational(parts[0]).ok_or_else(bad)?;
        let b = parse_rational(parts[1]).ok_or_else(bad)?;
        let n: usize = parts[2].trim().parse().map_err(|_| bad())?;
        Self::range(&a, &b, n, total_files)
    }

    pub fn default_for(config: &SystemConfig) -> Self {
        let total = total_memory_scale(config);
        Self::range(&Rational::zero(), &int(total), DEFAULT_SWEEP_POINTS, total).expect("valid default grid")
    }
}

/// `ΣN` over every level of the instance, both classes included.
fn total_memory_scale(config: &SystemConfig) -> u64 {
    config.total_files() + config.mixed_levels.iter().map(|l| l.files).sum::<u64>()
}

pub fn sweep_spec_total(config: &SystemConfig) -> u64 {
    total_memory_scale(config)
}

/// Analyzes every grid point; rows come back in grid order.
pub fn sweep(config: &SystemConfig, spec: &SweepSpec) -> Result<Vec<RateReport>> {
    spec.grid
        .par_iter()
        .map(|m| analyze(config, &Memory::new(m.clone())?))
        .collect()
}

fn join(v: &[usize]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(";")
}

fn decimal(q: &Rational) -> String {
    format_significant(q, DIGITS)
}

fn gap_cell(r: &RateReport) -> String {
    match &r.gap {
        Some(g) => g
            .ratio
            .as_ref()
            .map(|x| x.to_decimal(DIGITS))
            .unwrap_or_else(|| "inf".into()),
        None => String::new(),
    }
}

pub const CSV_HEADER: [&str; 7] = [
    "M",
    "rate_achievable",
    "rate_lower",
    "gap_ratio",
    "partition_H",
    "partition_I",
    "partition_J",
];

pub fn render_csv(rows: &[RateReport]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER).expect("in-memory write");
    for r in rows {
        let (h, i, j) = r.partition_columns();
        w.write_record([
            decimal(r.memory.value()),
            r.achievable.to_decimal(DIGITS),
            r.lower.as_ref().map(decimal).unwrap_or_default(),
            gap_cell(r),
            join(&h),
            join(&i),
            join(&j),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 cells")
}

/// Exact companion of the CSV.
pub fn render_json(config: &SystemConfig, rows: &[RateReport]) -> Value {
    json!({
        "config": serde_json::from_str::<Value>(&config.to_json()).expect("config json"),
        "rows": rows.iter().map(RateReport::to_json).collect::<Vec<_>>(),
    })
}

/// Whitespace-separated columns `M achievable lower gap` for gnuplot;
/// missing values are written as `NaN`.
pub fn render_dat(rows: &[RateReport]) -> String {
    let mut out = String::from("# M achievable lower gap\n");
    for r in rows {
        let gap = match &r.gap {
            Some(g) => g
                .ratio
                .as_ref()
                .map(|x| x.to_decimal(DIGITS))
                .unwrap_or_else(|| "inf".into()),
            None => "NaN".into(),
        };
        out += &format!(
            "{} {} {} {}\n",
            decimal(r.memory.value()),
            r.achievable.to_decimal(DIGITS),
            r.lower.as_ref().map(decimal).unwrap_or_else(|| "NaN".into()),
            gap
        );
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct DichotomyResult {
    /// `r` for the multi-user construction, `L` for the single-user one.
    pub parameter: u64,
    pub memory: Memory,
    pub approx_memory_sharing: Real,
    pub approx_clustering: Real,
    /// Larger over smaller of the two approximations.
    pub approx_ratio: Real,
    pub exact_memory_sharing: Option<Real>,
    pub exact_clustering: Option<Real>,
    /// Larger over smaller of the two exact rates.
    pub exact_ratio: Option<Real>,
    /// Whether every level sits in the partially stored regime.
    pub regime_ok: bool,
    pub regular: bool,
}

fn larger_over_smaller(a: &Real, b: &Real) -> Option<Real> {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if lo.is_zero() {
        return None;
    }
    Some(hi / lo)
}

fn pow2(e: u64) -> BigInt {
    BigInt::one() << e
}

/// Default memory for the multi-user construction, `2^5r`.
pub fn default_memory_mu(r: u64) -> Memory {
    Memory::new(Rational::from_integer(pow2(5 * r))).expect("positive")
}

/// Default memory for the single-user construction, `LN/4`.
pub fn default_memory_su(levels: u64, files: u64) -> Memory {
    Memory::ratio(levels * files, 4)
}

/// The multi-user construction `(N1, N2) = (2^5r, 2^8r)`,
/// `(U1, U2) = (2^4r, 2^r)`. Caches default to `2^3r`.
pub fn dichotomy_multi_user(r: u64, memory: &Memory, caches: Option<u64>) -> Result<DichotomyResult> {
    if r == 0 {
        return Err(Error::Config("r must be at least 1".into()));
    }
    let n1 = pow2(5 * r);
    let n2 = pow2(8 * r);
    let u1 = pow2(4 * r);
    let u2 = pow2(r);
    let m = Real::from(memory.value().clone());
    if memory.value().is_zero() {
        return Err(Error::Domain("the dichotomy rates need M > 0".into()));
    }
    let q = |x: &BigInt| Rational::from_integer(x.clone());
    let s = &Real::sqrt(&q(&(&n1 * &u1))) + &Real::sqrt(&q(&(&n2 * &u2)));
    let approx_ms = &(&s * &s) / &m;
    let approx_cl = &Real::from(q(&((&n1 + &n2) * (&u1 + &u2)))) / &m;
    let approx_ratio = larger_over_smaller(&approx_ms, &approx_cl).expect("positive rates");

    let k = match caches {
        Some(k) => k,
        None => 1u64
            .checked_shl((3 * r) as u32)
            .filter(|_| 3 * r < 64)
            .ok_or_else(|| Error::Config(format!("default cache count 2^{} does not fit", 3 * r)))?,
    };
    let fits = [&n1, &n2, &u1, &u2].iter().all(|x| x.to_u64().is_some()) && (&n1 + &n2).to_u64().is_some();
    let (mut exact_ms, mut exact_cl, mut regime_ok, mut regular) = (None, None, false, false);
    if fits {
        let (n1, n2, u1, u2) = (
            n1.to_u64().unwrap(),
            n2.to_u64().unwrap(),
            u1.to_u64().unwrap(),
            u2.to_u64().unwrap(),
        );
        let config = SystemConfig::multi_user(k, &[(n1, u1), (n2, u2)])?;
        if memory.value() <= &int(n1 + n2) {
            let report = rate_memory_sharing(&config, memory)?;
            regular = validate_multi_user(&config)?.ok;
            if let Witness::MultiUser(w) = &report.witness {
                regime_ok = w.partition.i.len() == 2;
            }
            exact_ms = Some(report.achievable);
            exact_cl = Some(rate_single_level_real(&m, k, n1 + n2, u1 + u2)?);
        }
    }
    let exact_ratio = match (&exact_ms, &exact_cl) {
        (Some(a), Some(b)) => larger_over_smaller(a, b),
        _ => None,
    };
    Ok(DichotomyResult {
        parameter: r,
        memory: memory.clone(),
        approx_memory_sharing: approx_ms,
        approx_clustering: approx_cl,
        approx_ratio,
        exact_memory_sharing: exact_ms,
        exact_clustering: exact_cl,
        exact_ratio,
        regime_ok,
        regular,
    })
}

/// Default users per level of the single-user construction.
pub const DEFAULT_SU_USERS: u64 = 4;

/// The single-user construction: `L` levels of `N` files each with
/// `users` users per level (default `min(N, 4)`). Memory sharing splits
/// the memory equally across levels.
pub fn dichotomy_single_user(levels: u64, files: u64, memory: &Memory, users: Option<u64>) -> Result<DichotomyResult> {
    if levels < 2 {
        return Err(Error::Config("the single-user construction needs L >= 2".into()));
    }
    if memory.value().is_zero() {
        return Err(Error::Domain("the dichotomy rates need M > 0".into()));
    }
    let users = users.unwrap_or(files.min(DEFAULT_SU_USERS));
    let specs = vec![(files, users); levels as usize];
    let config = SystemConfig::single_user(levels * users, &specs)?;
    let m = memory.value();
    let l = int(levels);
    let n = int(files);
    let approx_cl = Real::from(&l * &n / m);
    let approx_ms = Real::from(&l * &l * &n / m);
    let approx_ratio = larger_over_smaller(&approx_ms, &approx_cl).expect("positive rates");

    let share = m / &l;
    let (mut exact_ms, mut exact_cl, mut regime_ok) = (None, None, false);
    if share <= n {
        let per = rate_single_level_real(&Real::from(share.clone()), users, files, 1)?;
        exact_ms = Some(&per * &Real::from(l.clone()));
        exact_cl = Some(rate_clustering(&config, memory)?.achievable);
        let p = partition_su(&config, memory)?;
        regime_ok = p.hprime.is_empty() && share >= &n / int(users);
    }
    let exact_ratio = match (&exact_ms, &exact_cl) {
        (Some(a), Some(b)) => larger_over_smaller(a, b),
        _ => None,
    };
    Ok(DichotomyResult {
        parameter: levels,
        memory: memory.clone(),
        approx_memory_sharing: approx_ms,
        approx_clustering: approx_cl,
        approx_ratio,
        exact_memory_sharing: exact_ms,
        exact_clustering: exact_cl,
        exact_ratio,
        regime_ok,
        regular: crate::model::validate_single_user(&config)?.ok,
    })
}

impl DichotomyResult {
    pub fn to_json(&self) -> Value {
        let r = |x: &Real| json!({ "exact": x.to_string(), "decimal": x.to_decimal(DIGITS) });
        json!({
            "parameter": self.parameter,
            "memory": rational_string(self.memory.value()),
            "approx_memory_sharing": r(&self.approx_memory_sharing),
            "approx_clustering": r(&self.approx_clustering),
            "approx_ratio": r(&self.approx_ratio),
            "exact_memory_sharing": self.exact_memory_sharing.as_ref().map(r),
            "exact_clustering": self.exact_clustering.as_ref().map(r),
            "exact_ratio": self.exact_ratio.as_ref().map(r),
            "regime_ok": self.regime_ok,
            "regular": self.regular,
        })
    }
}

fn gamma_grid(points: usize) -> Vec<Rational> {
    if points <= 1 {
        return vec![Rational::one()];
    }
    (0..points)
        .map(|k| Rational::new(BigInt::from(k), BigInt::from(points - 1)))
        .collect()
}

fn mixed_parts(
    config: &SystemConfig,
    memory: &Memory,
    gamma: &Rational,
) -> Result<(Option<RateReport>, Option<RateReport>, Real)> {
    let m = memory.value();
    let f = match config.class_f() {
        Some(f) => Some(rate_memory_sharing(&f, &Memory::new(gamma * m)?)?),
        None => None,
    };
    let g = match config.class_g() {
        Some(g) => Some(rate_clustering(&g, &Memory::new((Rational::one() - gamma) * m)?)?),
        None => None,
    };
    let total = [&f, &g]
        .into_iter()
        .flatten()
        .fold(Real::zero(), |a, r| &a + &r.achievable);
    Ok((f, g, total))
}

/// `rate_memory_sharing(F, γM) + rate_clustering(G, (1 − γ)M)`. Without an
/// explicit `γ` the grid minimizer is used.
pub fn mixed_rate(
    config: &SystemConfig,
    memory: &Memory,
    gamma: Option<Rational>,
    points: usize,
) -> Result<RateReport> {
    config.require(Setup::Mixed)?;
    if let Some(g) = &gamma {
        if g < &Rational::zero() || g > &Rational::one() {
            return Err(Error::Config("gamma must lie in [0, 1]".into()));
        }
    }
    let evaluated: Vec<(Rational, Real)> = gamma_grid(points)
        .into_par_iter()
        .map(|g| mixed_parts(config, memory, &g).map(|(_, _, t)| (g, t)))
        .collect::<Result<_>>()?;
    let (best_gamma, best_rate) = evaluated
        .into_iter()
        .reduce(|a, b| if b.1 < a.1 { b } else { a })
        .expect("nonempty grid");
    let gamma = gamma.unwrap_or_else(|| best_gamma.clone());
    let (f, g, total) = mixed_parts(config, memory, &gamma)?;
    let regular = crate::model::validate_mixed(config)?.ok;
    Ok(RateReport {
        setup: Setup::Mixed,
        memory: memory.clone(),
        achievable: total,
        approximate: None,
        lower: None,
        gap: None,
        regular,
        witness: Witness::Mixed(Box::new(MixedWitness {
            gamma,
            f: f.map(Box::new),
            g: g.map(Box::new),
            best_gamma,
            best_rate,
        })),
    })
}

/// Seeded audit of the gap constants over random regular instances.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AuditSpec {
    pub setup: Setup,
    pub count: usize,
    pub seed: u64,
    /// Memory points per instance.
    pub points: usize,
}

impl AuditSpec {
    pub fn new(setup: Setup, count: usize, seed: u64) -> Self {
        AuditSpec {
            setup,
            count,
            seed,
            points: 20,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum FailureKind {
    Inversion,
    GapExceeded,
    LevelBound,
    ClosedFormRange,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AuditFailure {
    pub instance: usize,
    pub config: SystemConfig,
    pub memory: Memory,
    pub kind: FailureKind,
    pub detail: String,
}

impl AuditFailure {
    pub fn to_json(&self) -> Value {
        json!({
            "instance": self.instance,
            "kind": self.kind,
            "memory": rational_string(self.memory.value()),
            "detail": self.detail,
            "config": serde_json::from_str::<Value>(&self.config.to_json()).expect("config json"),
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClassStats {
    pub class: GapClass,
    /// Points with a positive lower bound.
    pub points: usize,
    /// Points skipped because the lower bound vanished.
    pub zero_lower: usize,
    pub max_ratio: Option<Real>,
    pub max_at: Option<(usize, Memory)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AuditSummary {
    pub setup: Setup,
    pub instances: usize,
    pub points: usize,
    pub classes: Vec<ClassStats>,
    /// Instances/points where the closed-form parameters applied.
    pub closed_form_checked: usize,
    /// Level-bound comparisons performed.
    pub level_bounds_checked: usize,
    pub failures: Vec<AuditFailure>,
}

impl AuditSummary {
    pub fn ok(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn render(&self) -> String {
        let mut s = format!(
            "audit: setup={} instances={} points={}\n",
            self.setup.name(),
            self.instances,
            self.points
        );
        for c in &self.classes {
            let max = c
                .max_ratio
                .as_ref()
                .map(|r| r.to_decimal(DIGITS))
                .unwrap_or_else(|| "-".into());
            s += &format!(
                "  {}: points={} zero_lower={} max_gap={}\n",
                c.class.label(),
                c.points,
                c.zero_lower,
                max
            );
        }
        if self.setup == Setup::MultiUser {
            s += &format!(
                "  level bounds checked: {}; closed-form parameter sets checked: {}\n",
                self.level_bounds_checked, self.closed_form_checked
            );
        }
        let inversions = self
            .failures
            .iter()
            .filter(|f| f.kind == FailureKind::Inversion)
            .count();
        s += &format!("  inversions: {inversions}; failures: {}\n", self.failures.len());
        for f in self.failures.iter().take(5) {
            s += &format!(
                "  failure: instance {} M={} {:?}: {} config={}\n",
                f.instance,
                f.memory,
                f.kind,
                f.detail,
                serde_json::to_string(&serde_json::from_str::<Value>(&f.config.to_json()).expect("config json"))
                    .expect("json")
            );
        }
        s += if self.ok() {
            "  result: PASS\n"
        } else {
            "  result: FAIL\n"
        };
        s
    }
}

fn instance_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// Cache counts drawn by the multi-user generator.
pub const MU_CACHES: [u64; 6] = [4, 8, 16, 32, 96, 128];
/// Cache counts drawn by the single-user generator.
pub const SU_CACHES: [u64; 4] = [4, 8, 16, 32];

/// Random regular multi-user instance: `N_i = K U_i m_i` with each `m_i`
/// at least `6400` times the previous one, so every popularity ratio is at
/// least `1/β²` for the default `β`.
pub fn random_multi_user(rng: &mut impl Rng) -> SystemConfig {
    let l = rng.random_range(1..=4usize);
    let k = MU_CACHES[rng.random_range(0..MU_CACHES.len())];
    let mut m = rng.random_range(1..=4u64);
    let mut levels = Vec::with_capacity(l);
    for x in 0..l {
        if x > 0 {
            m *= 6400 * rng.random_range(1..=4u64);
        }
        let u = rng.random_range(1..=4u64);
        levels.push((k * u * m, u));
    }
    SystemConfig::multi_user(k, &levels).expect("generated instance is well-formed")
}

/// Random regular single-user instance: `K_i` a random composition of `K`
/// and `N_i = K_i · c_i` with `c_i` log-uniform in `1..=1000`.
pub fn random_single_user(rng: &mut impl Rng) -> SystemConfig {
    let k = SU_CACHES[rng.random_range(0..SU_CACHES.len())];
    let l = rng.random_range(1..=4u64).min(k);
    // composition of k into l positive parts via l-1 distinct cut points
    let mut cuts: Vec<u64> = Vec::new();
    while cuts.len() < (l - 1) as usize {
        let c = rng.random_range(1..k);
        if !cuts.contains(&c) {
            cuts.push(c);
        }
    }
    cuts.sort_unstable();
    let mut prev = 0;
    let mut levels = Vec::new();
    for c in cuts.into_iter().chain(std::iter::once(k)) {
        let users = c - prev;
        prev = c;
        let mult = 10f64.powf(rng.random_range(0.0..3.0)).round().max(1.0) as u64;
        levels.push((users * mult, users));
    }
    SystemConfig::single_user(k, &levels).expect("generated instance is well-formed")
}

fn dyadic(x: f64) -> Rational {
    let scaled = (x * 64.0).floor().max(0.0);
    Rational::new(BigInt::from(scaled as u128), BigInt::from(64))
}

/// Memory grid for the multi-user audit: both endpoints and log-uniform
/// interior points on a 1/64 lattice.
pub fn multi_user_grid(config: &SystemConfig, rng: &mut impl Rng, points: usize) -> Vec<Rational> {
    let total = config.total_files();
    let top = (total as f64).log2();
    let mut grid = vec![Rational::zero(), int(total)];
    let mut tries = 0;
    while grid.len() < points && tries < 100 * points {
        tries += 1;
        let m = dyadic(2f64.powf(rng.random_range(-4.0..top)));
        if m <= int(total) && !grid.contains(&m) {
            grid.push(m);
        }
    }
    grid.sort();
    grid
}

/// Memory grid for the single-user audit: points below `1/6` (including
/// 0), the boundary `1/6` itself, and log-uniform points up to `ΣN`.
pub fn single_user_grid(config: &SystemConfig, rng: &mut impl Rng, points: usize) -> Vec<Rational> {
    let total = config.total_files();
    let mut grid = vec![
        Rational::zero(),
        Rational::new(BigInt::from(1), BigInt::from(20)),
        Rational::new(BigInt::from(1), BigInt::from(7)),
        Rational::new(BigInt::from(1), BigInt::from(6)),
        int(total),
    ];
    let top = (total as f64).log2();
    let mut tries = 0;
    while grid.len() < points && tries < 100 * points {
        tries += 1;
        let m = dyadic(2f64.powf(rng.random_range(-6.0..top)));
        if m <= int(total) && !grid.contains(&m) {
            grid.push(m);
        }
    }
    grid.sort();
    grid
}

struct PointOutcome {
    class: GapClass,
    ratio: Option<Real>,
    positive_lower: bool,
    memory: Memory,
    failures: Vec<AuditFailure>,
    level_bounds: usize,
    closed_form: usize,
}

fn audit_point(index: usize, config: &SystemConfig, memory: Memory) -> Result<PointOutcome> {
    let report = analyze(config, &memory)?;
    let gap = report.gap.clone().expect("analyze fills the gap");
    let fail = |kind, detail: String| AuditFailure {
        instance: index,
        config: config.clone(),
        memory: memory.clone(),
        kind,
        detail,
    };
    let mut failures = Vec::new();
    if gap.inversion {
        failures.push(fail(
            FailureKind::Inversion,
            format!(
                "lower {} above achievable {}",
                rational_string(&gap.lower),
                gap.achievable
            ),
        ));
    }
    let positive_lower = !gap.lower.is_zero();
    if positive_lower && !gap.within {
        failures.push(fail(
            FailureKind::GapExceeded,
            format!(
                "ratio {} above {}",
                gap.ratio.as_ref().map(|r| r.to_decimal(DIGITS)).unwrap_or_default(),
                rational_string(&gap.constant)
            ),
        ));
    }
    let (mut level_checks, mut closed_form) = (0, 0);
    if config.setup == Setup::MultiUser {
        if let Witness::MultiUser(w) = &report.witness {
            let p = find_m_feasible_partition(config, &memory)?;
            let r = refine(config, &memory, &p);
            let bounds = level_bounds(config, &memory, &p, &r);
            for (x, (rate, bound)) in w.level_rates.iter().zip(&bounds).enumerate() {
                level_checks += 1;
                if rate.cmp(bound) == Ordering::Greater {
                    failures.push(fail(
                        FailureKind::LevelBound,
                        format!(
                            "level {x}: rate {} above bound {}",
                            rate.to_decimal(DIGITS),
                            bound.to_decimal(DIGITS)
                        ),
                    ));
                }
            }
        }
        match appendix_a3_params(config, &memory) {
            Ok(params) => {
                closed_form += 1;
                if let Err(e) = params.validate(config) {
                    failures.push(fail(FailureKind::ClosedFormRange, e.to_string()));
                }
            }
            Err(Error::NotApplicable(_)) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(PointOutcome {
        class: gap.class,
        ratio: gap.ratio.filter(|_| positive_lower),
        positive_lower,
        memory,
        failures,
        level_bounds: level_checks,
        closed_form,
    })
}

/// Generates `count` seeded instances with their memory grids.
pub fn audit_instances(spec: &AuditSpec) -> Result<Vec<(SystemConfig, Vec<Rational>)>> {
    (0..spec.count)
        .map(|i| {
            let mut rng = instance_rng(spec.seed, i);
            match spec.setup {
                Setup::MultiUser => {
                    let c = random_multi_user(&mut rng);
                    let g = multi_user_grid(&c, &mut rng, spec.points);
                    Ok((c, g))
                }
                Setup::SingleUser => {
                    let c = random_single_user(&mut rng);
                    let g = single_user_grid(&c, &mut rng, spec.points);
                    Ok((c, g))
                }
                Setup::Mixed => Err(Error::WrongSetup {
                    expected: "multi-user or single-user",
                    found: Setup::Mixed.name(),
                }),
            }
        })
        .collect()
}

/// Runs the audit. Work is parallel; results are merged in instance order.
pub fn audit(spec: &AuditSpec) -> Result<AuditSummary> {
    let instances = audit_instances(spec)?;
    let outcomes: Vec<Vec<PointOutcome>> = instances
        .par_iter()
        .enumerate()
        .map(|(i, (config, grid))| {
            grid.iter()
                .map(|m| audit_point(i, config, Memory::new(m.clone())?))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let order = match spec.setup {
        Setup::MultiUser => vec![GapClass::MultiUser],
        _ => vec![GapClass::SingleUserSmall, GapClass::SingleUserLarge],
    };
    let mut classes: Vec<ClassStats> = order
        .into_iter()
        .map(|class| ClassStats {
            class,
            points: 0,
            zero_lower: 0,
            max_ratio: None,
            max_at: None,
        })
        .collect();
    let mut summary_failures = Vec::new();
    let (mut points, mut level_bounds_checked, mut closed_form_checked) = (0, 0, 0);
    for (i, per_instance) in outcomes.into_iter().enumerate() {
        for o in per_instance {
            points += 1;
            level_bounds_checked += o.level_bounds;
            closed_form_checked += o.closed_form;
            let stats = classes.iter_mut().find(|c| c.class == o.class).expect("known class");
            if o.positive_lower {
                stats.points += 1;
                if let Some(r) = o.ratio {
                    if stats.max_ratio.as_ref().is_none_or(|m| r > *m) {
                        stats.max_ratio = Some(r);
                        stats.max_at = Some((i, o.memory.clone()));
                    }
                }
            } else {
                stats.zero_lower += 1;
            }
            summary_failures.extend(o.failures);
        }
    }
    Ok(AuditSummary {
        setup: spec.setup,
        instances: spec.count,
        points,
        classes,
        closed_form_checked,
        level_bounds_checked,
        failures: summary_failures,
    })
}
