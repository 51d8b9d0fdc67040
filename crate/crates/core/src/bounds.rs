//! Information-theoretic lower bounds for both setups and the gap ratios
//! against the achievable schemes.

use std::cmp::Ordering;

use num_bigint::BigInt;
use num_integer::Roots;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{Memory, Setup, SystemConfig};
use crate::multi_user::{find_m_feasible_partition, refine, sqrt_n_over_u, sqrt_nu};
use crate::numeric::{int, ratio, Rational, Real};
use crate::single_user::{refine_partition_su, RefinedClusterPartition};

/// Parameters of the sliding-window bound
/// `Σ_i min{s_i t U_i, N_i/(s_i b)} − (t/b) M`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct MultiUserBoundParams {
    pub t: u64,
    pub b: u128,
    pub s: Vec<u64>,
}

impl MultiUserBoundParams {
    pub fn validate(&self, config: &SystemConfig) -> Result<()> {
        let k = config.caches;
        if self.t == 0 || self.t > k {
            return Err(Error::InvalidParams(format!("t = {} outside 1..={k}", self.t)));
        }
        if self.b == 0 {
            return Err(Error::InvalidParams("b must be positive".into()));
        }
        let smax = k / (2 * self.t);
        if smax == 0 {
            return Err(Error::InvalidParams(format!(
                "floor(K/2t) = 0 for K = {k}, t = {}",
                self.t
            )));
        }
        if self.s.len() != config.levels.len() {
            return Err(Error::InvalidParams(format!(
                "{} cut sizes for {} levels",
                self.s.len(),
                config.levels.len()
            )));
        }
        if let Some((i, s)) = self.s.iter().enumerate().find(|(_, &s)| s == 0 || s > smax) {
            return Err(Error::InvalidParams(format!("s[{i}] = {s} outside 1..={smax}")));
        }
        Ok(())
    }
}

fn term(s: u64, t: u64, b: u128, files: u64, users: u64) -> Rational {
    let cut = int(s * t * users);
    let files_per = Rational::new(BigInt::from(files), BigInt::from(s) * BigInt::from(b));
    cut.min(files_per)
}

/// Exact value of the sliding-window bound; may be negative.
pub fn lower_bound_multi_user(
    config: &SystemConfig,
    memory: &Memory,
    params: &MultiUserBoundParams,
) -> Result<Rational> {
    config.require(Setup::MultiUser)?;
    params.validate(config)?;
    let sum = config
        .levels
        .iter()
        .zip(&params.s)
        .map(|(l, &s)| term(s, params.t, params.b, l.files, l.users))
        .fold(Rational::zero(), |a, b| a + b);
    let sub = Rational::new(BigInt::from(params.t), BigInt::from(params.b)) * memory.value();
    Ok(sum - sub)
}

fn real_ceil_u128(x: &Real) -> u128 {
    x.ceil().to_u128().unwrap_or(u128::MAX)
}

fn real_floor_u128(x: &Real) -> u128 {
    x.floor()
        .to_u128()
        .unwrap_or(if x.is_negative() { 0 } else { u128::MAX })
}

/// Search range for `b`: `max(1, ⌈64 (ΣN)² / (Σ√(N U))²⌉)`, extended to
/// the closed-form `⌊64 (M − T_J + V_I)² / S_I²⌋` when that is larger.
pub fn b_max(config: &SystemConfig, memory: &Memory) -> Result<u128> {
    let total = int(config.total_files());
    let s = config.levels.iter().fold(Real::zero(), |a, l| &a + &sqrt_nu(l));
    let base = real_ceil_u128(&(&Real::from(int(64) * &total * &total) / &(&s * &s))).max(1);
    let p = find_m_feasible_partition(config, memory)?;
    if p.i.is_empty() {
        return Ok(base);
    }
    let d = p.effective_memory(memory);
    let closed = real_floor_u128(&(&Real::from(int(64) * &d * &d) / &(&p.s_i * &p.s_i)));
    Ok(base.max(closed))
}

/// Best `s` in `1..=smax` for one level at fixed `(t, b)`; the objective is
/// unimodal in `s` with its peak at `√(N/(t b U))`.
fn best_s(t: u64, b: u128, files: u64, users: u64, smax: u64) -> u64 {
    let q = files as u128 / (t as u128 * b * users as u128);
    let s0 = q.sqrt().min(smax as u128) as u64;
    let lo = s0.max(1);
    let hi = (s0 + 1).min(smax).max(1);
    if lo == hi {
        return lo;
    }
    match term(lo, t, b, files, users).cmp(&term(hi, t, b, files, users)) {
        Ordering::Less => hi,
        _ => lo,
    }
}

fn eval_f64(config: &SystemConfig, m: f64, t: u64, b: u128, smax: u64) -> f64 {
    let bf = b as f64;
    let mut v = -(t as f64) * m / bf;
    for l in &config.levels {
        let q = l.files as u128 / (t as u128 * b * l.users as u128);
        let s0 = q.sqrt().min(smax as u128) as u64;
        let mut best = f64::NEG_INFINITY;
        for s in [s0.max(1), (s0 + 1).min(smax).max(1)] {
            let x = ((s * t * l.users) as f64).min(l.files as f64 / (s as f64 * bf));
            best = best.max(x);
        }
        v += best;
    }
    v
}

/// Breakpoints in `b` of the separable objective at fixed `t`: where a cut
/// term saturates (`N/(s² t U)`) and where the best `s` moves to `s + 1`
/// (`N/(s(s+1) t U)`), rounded both ways, plus both ends of the range.
fn candidate_bs(config: &SystemConfig, t: u64, smax: u64, bmax: u128) -> Vec<u128> {
    let mut out = vec![1, bmax];
    for l in &config.levels {
        let base = t as u128 * l.users as u128;
        for s in 1..=smax as u128 {
            for den in [s * s * base, s * (s + 1) * base] {
                let q = l.files as u128 / den;
                let exact = (l.files as u128).is_multiple_of(den);
                out.push(q);
                out.push(if exact { q } else { q + 1 });
            }
        }
    }
    for b in out.iter_mut() {
        *b = (*b).clamp(1, bmax);
    }
    out.sort_unstable();
    out.dedup();
    out
}

/// Result of maximizing the sliding-window bound.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundOptimum {
    /// Best bound, clamped at 0.
    pub value: Rational,
    /// Best raw value of the expression (may be negative).
    pub raw: Option<Rational>,
    /// `None` when no valid parameters exist (`K = 1`).
    pub params: Option<MultiUserBoundParams>,
}

/// Maximizes the bound over `t ∈ 1..K`, `b ∈ 1..b_max` and separable `s`.
/// Candidates are screened in floating point and the survivors compared
/// exactly; ties go to the lexicographically smallest `(t, b, s)`.
pub fn optimize_lower_bound_mu(config: &SystemConfig, memory: &Memory) -> Result<BoundOptimum> {
    config.require(Setup::MultiUser)?;
    let k = config.caches;
    let bmax = b_max(config, memory)?;
    let m = memory.value().to_f64().unwrap_or(f64::MAX);
    let scale = 1.0
        + config.total_files() as f64
        + k as f64 * config.levels.iter().map(|l| l.users as f64).sum::<f64>()
        + k as f64 * m;
    let tol = 1e-9 * scale;

    let mut scored: Vec<(f64, u64, u128, u64)> = Vec::new();
    for t in 1..=k {
        let smax = k / (2 * t);
        if smax == 0 {
            break;
        }
        for b in candidate_bs(config, t, smax, bmax) {
            scored.push((eval_f64(config, m, t, b, smax), t, b, smax));
        }
    }
    let Some(best_f) = scored.iter().map(|c| c.0).reduce(f64::max) else {
        return Ok(BoundOptimum {
            value: Rational::zero(),
            raw: None,
            params: None,
        });
    };
    let mut best: Option<(Rational, MultiUserBoundParams)> = None;
    for &(f, t, b, smax) in &scored {
        if f < best_f - tol {
            continue;
        }
        let s = config
            .levels
            .iter()
            .map(|l| best_s(t, b, l.files, l.users, smax))
            .collect();
        let params = MultiUserBoundParams { t, b, s };
        let v = lower_bound_multi_user(config, memory, &params)?;
        // scored is in (t, b) order, so strict improvement keeps the smallest
        if best.as_ref().is_none_or(|(bv, _)| v > *bv) {
            best = Some((v, params));
        }
    }
    let (raw, params) = best.expect("at least the float maximizer survives");
    Ok(BoundOptimum {
        value: raw.clone().max(Rational::zero()),
        raw: Some(raw),
        params: Some(params),
    })
}

/// The closed-form parameters for the case `K ≥ 96`, `I1 = ∅`, `J ≠ ∅`:
/// `t = 1`, `s_h = ⌊K/8⌋`, `s_i = ⌊c · S_I √(N_i/U_i)/(M − T_J + V_I)⌋`
/// with `c = 1/16` on `I0` and `1/8` on `I'`, `s_j = 1`, and
/// `b = ⌊64 (M − T_J + V_I)² / S_I²⌋`.
pub fn appendix_a3_params(config: &SystemConfig, memory: &Memory) -> Result<MultiUserBoundParams> {
    config.require(Setup::MultiUser)?;
    let k = config.caches;
    if k < 96 {
        return Err(Error::NotApplicable(format!("needs K >= 96, got K = {k}")));
    }
    let p = find_m_feasible_partition(config, memory)?;
    let r = refine(config, memory, &p);
    if !r.i1.is_empty() {
        return Err(Error::NotApplicable("I1 is nonempty".into()));
    }
    if r.j.is_empty() {
        return Err(Error::NotApplicable("J is empty".into()));
    }
    if p.i.is_empty() {
        return Err(Error::NotApplicable("I is empty".into()));
    }
    let d = Real::from(p.effective_memory(memory));
    let s_for = |x: usize, c: Rational| -> u64 {
        let v = &(&(&p.s_i * &sqrt_n_over_u(&config.levels[x])) * &Real::from(c)) / &d;
        v.floor().to_u64().unwrap_or(0)
    };
    let s = (0..config.levels.len())
        .map(|x| {
            if r.h.contains(&x) {
                k / 8
            } else if r.i0.contains(&x) {
                s_for(x, ratio(1, 16))
            } else if r.iprime.contains(&x) {
                s_for(x, ratio(1, 8))
            } else {
                1
            }
        })
        .collect();
    let b = real_floor_u128(&(&(&d * &d) * &Real::from(int(64)) / &(&p.s_i * &p.s_i)));
    Ok(MultiUserBoundParams { t: 1, b, s })
}

/// Witness of the single-user cut-set bound.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SingleUserBoundParams {
    pub b: u128,
    /// Cut size per level; 0 for `J` levels, which share `s_J`.
    pub s: Vec<u64>,
    pub s_j: u64,
    /// Files decodable from the `J` part of the cut.
    pub n_j: u128,
    /// True when the cut budget `Σ s ≤ K` needed repair.
    pub repaired: bool,
}

fn ceil_q(q: &Rational) -> u128 {
    q.ceil().to_integer().to_u128().unwrap_or(u128::MAX)
}

/// `s (min{1, N/(s b)} − M/b)`.
fn cut_value(s: u64, files: u64, b: u128, memory: &Rational) -> Rational {
    if s == 0 {
        return Rational::zero();
    }
    let bq = Rational::from_integer(BigInt::from(b));
    let share = (int(files) / (int(s) * &bq)).min(Rational::one());
    int(s) * (share - memory / &bq)
}

/// Files decodable from the `J` part of a cut with `s_J` caches and `b`
/// broadcasts. The user arrangement may change between broadcasts, so each
/// broadcast offers `s_J` slots with at most `min(K_j, s_J)` for level `j`,
/// and level `j` supplies at most `N_j` distinct files. The max flow of
/// that network is `min{s_J b, Σ_j min(N_j, b·min(K_j, s_J))}`.
fn decodable_j(config: &SystemConfig, j: &[usize], s_j: u64, b: u128) -> u128 {
    let per_level: u128 = j
        .iter()
        .map(|&x| {
            let l = &config.levels[x];
            (b * l.users.min(s_j) as u128).min(l.files as u128)
        })
        .sum();
    (s_j as u128 * b).min(per_level)
}

fn su_value(
    config: &SystemConfig,
    refined: &RefinedClusterPartition,
    memory: &Rational,
    b: u128,
    s: &[u64],
    s_j: u64,
) -> (Rational, u128) {
    let mut total = Rational::zero();
    for (x, l) in config.levels.iter().enumerate() {
        if !refined.j.contains(&x) {
            total += cut_value(s[x], l.files, b, memory);
        }
    }
    let n_j = decodable_j(config, &refined.j, s_j, b);
    if s_j > 0 {
        let bq = Rational::from_integer(BigInt::from(b));
        total += (Rational::from_integer(BigInt::from(n_j)) - int(s_j) * memory) / bq;
    }
    (total, n_j)
}

/// Cut-set lower bound for the single-user setup. Below `M = 1/6` one
/// broadcast and all caches are used; otherwise `b = ⌈6M⌉` and the cut
/// sizes follow the class of each level.
pub fn lower_bound_single_user(config: &SystemConfig, memory: &Memory) -> Result<(Rational, SingleUserBoundParams)> {
    config.require(Setup::SingleUser)?;
    let m = memory.value();
    let l = config.levels.len();
    if *m < ratio(1, 6) {
        let s: Vec<u64> = config.levels.iter().map(|lv| lv.users).collect();
        let v = config
            .levels
            .iter()
            .map(|lv| int(lv.users) * ((int(lv.files) / int(lv.users)).min(Rational::one()) - m))
            .fold(Rational::zero(), |a, b| a + b);
        let params = SingleUserBoundParams {
            b: 1,
            s,
            s_j: 0,
            n_j: 0,
            repaired: false,
        };
        return Ok((v.max(Rational::zero()), params));
    }
    let refined = refine_partition_su(config, memory)?;
    let b = ceil_q(&(int(6) * m));
    let mut s = vec![0u64; l];
    for (x, (sx, lv)) in s.iter_mut().zip(&config.levels).enumerate() {
        if refined.g.contains(&x) {
            *sx = 1;
        } else if refined.h.contains(&x) {
            *sx = lv.users.div_ceil(6);
        } else if refined.i.contains(&x) {
            *sx = ceil_q(&(int(lv.files) / (int(6) * m))) as u64;
        }
    }
    let n_total_j: u64 = refined.j.iter().map(|&x| config.levels[x].files).sum();
    let j_users: u64 = refined.j.iter().map(|&x| config.levels[x].users).sum();
    let mut s_j = 0;
    if !refined.j.is_empty() && m < &int(n_total_j) {
        s_j = (ceil_q(&(int(n_total_j) / (int(6) * m))) as u64).min(j_users);
    }
    // a cut may use at most K caches; shrink the largest cut first
    let mut repaired = false;
    while s.iter().sum::<u64>() + s_j > config.caches {
        repaired = true;
        let (x, &largest) = s
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))
            .expect("nonempty");
        if s_j > largest {
            s_j -= 1;
        } else {
            s[x] -= 1;
        }
    }
    let (v, n_j) = su_value(config, &refined, m, b, &s, s_j);
    let params = SingleUserBoundParams {
        b,
        s,
        s_j,
        n_j,
        repaired,
    };
    Ok((v.max(Rational::zero()), params))
}

/// Which gap constant applies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum GapClass {
    /// Multi-user memory sharing, constant 192.
    MultiUser,
    /// Single-user clustering with `M ≥ 1/6`, constant 72.
    SingleUserLarge,
    /// Single-user clustering with `M < 1/6`, constant 6/5.
    SingleUserSmall,
}

impl GapClass {
    pub fn constant(self) -> Rational {
        match self {
            GapClass::MultiUser => int(192),
            GapClass::SingleUserLarge => int(72),
            GapClass::SingleUserSmall => ratio(6, 5),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            GapClass::MultiUser => "multi-user (192)",
            GapClass::SingleUserLarge => "single-user M>=1/6 (72)",
            GapClass::SingleUserSmall => "single-user M<1/6 (6/5)",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GapReport {
    pub achievable: Real,
    pub lower: Rational,
    /// `achievable / lower`; 0 when both vanish, `None` (infinite) when
    /// only the lower bound vanishes.
    pub ratio: Option<Real>,
    pub class: GapClass,
    pub constant: Rational,
    pub within: bool,
    /// Lower bound above the achievable rate: a correctness bug signal.
    pub inversion: bool,
}

pub fn gap_report(setup: Setup, achievable: &Real, lower: &Rational, memory: &Memory) -> Result<GapReport> {
    let class = match setup {
        Setup::MultiUser => GapClass::MultiUser,
        Setup::SingleUser if *memory.value() < ratio(1, 6) => GapClass::SingleUserSmall,
        Setup::SingleUser => GapClass::SingleUserLarge,
        Setup::Mixed => {
            return Err(Error::WrongSetup {
                expected: "multi-user or single-user",
                found: Setup::Mixed.name(),
            })
        }
    };
    let constant = class.constant();
    let inversion = achievable.cmp_rational(lower) == Ordering::Less;
    let (ratio, within) = if lower.is_zero() {
        if achievable.is_zero() {
            (Some(Real::zero()), true)
        } else {
            (None, false)
        }
    } else {
        let within = achievable.cmp_rational(&(&constant * lower)) != Ordering::Greater;
        (Some(achievable / &Real::from(lower.clone())), within)
    };
    Ok(GapReport {
        achievable: achievable.clone(),
        lower: lower.clone(),
        ratio,
        class,
        constant,
        within,
        inversion,
    })
}
