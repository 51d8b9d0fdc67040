//! Memory-sharing achievability in the multi-user setup.
//!
//! Levels are split into `H` (no memory), `I` (partial memory) and `J`
//! (fully stored) through the normalized memory
//! `M̃ = (M − T_J + V_I) / S_I`, where for a set `A` of levels
//! `S_A = Σ √(N_i U_i)`, `T_A = Σ N_i` and `V_A = Σ N_i / K`.

use num_traits::{One, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{validate_multi_user, LevelSpec, Memory, Setup, SystemConfig};
use crate::numeric::{int, Rational, Real};
use crate::report::{MultiUserWitness, RateReport, Witness};
use crate::single_level::rate_single_level_real;

/// `√(N U)` of a level.
pub fn sqrt_nu(level: &LevelSpec) -> Real {
    Real::sqrt(&(level.files_q() * level.users_q()))
}

/// `√(N / U)` of a level.
pub fn sqrt_n_over_u(level: &LevelSpec) -> Real {
    Real::sqrt(&(level.files_q() / level.users_q()))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Partition {
    pub h: Vec<usize>,
    pub i: Vec<usize>,
    pub j: Vec<usize>,
    #[serde(skip)]
    pub s_i: Real,
    #[serde(skip)]
    pub t_j: Rational,
    #[serde(skip)]
    pub v_i: Rational,
    /// `None` stands for `+∞` (empty `I`).
    #[serde(skip)]
    pub m_tilde: Option<Real>,
}

impl Partition {
    /// `M − T_J + V_I`.
    pub fn effective_memory(&self, memory: &Memory) -> Rational {
        memory.value() - &self.t_j + &self.v_i
    }

    pub fn class_of(&self, level: usize) -> LevelClass {
        if self.h.contains(&level) {
            LevelClass::H
        } else if self.i.contains(&level) {
            LevelClass::I
        } else {
            LevelClass::J
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LevelClass {
    H,
    I,
    J,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RefinedPartition {
    pub h: Vec<usize>,
    pub i0: Vec<usize>,
    pub iprime: Vec<usize>,
    pub i1: Vec<usize>,
    pub j: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MemoryAllocation {
    /// Memory given to each level, `α_i M`.
    pub level_memory: Vec<Real>,
    /// Fractions `α_i`; all zero when `M = 0`.
    pub alphas: Vec<Real>,
}

fn sum_of<'a>(levels: impl Iterator<Item = &'a LevelSpec>, f: impl Fn(&LevelSpec) -> Real) -> Real {
    levels.fold(Real::zero(), |acc, l| &acc + &f(l))
}

fn build_partition(config: &SystemConfig, memory: &Memory, h: Vec<usize>, i: Vec<usize>, j: Vec<usize>) -> Partition {
    let k = int(config.caches);
    let lv = &config.levels;
    let s_i = sum_of(i.iter().map(|&x| &lv[x]), sqrt_nu);
    let t_j = j.iter().map(|&x| lv[x].files_q()).fold(Rational::zero(), |a, b| a + b);
    let v_i = i
        .iter()
        .map(|&x| lv[x].files_q() / &k)
        .fold(Rational::zero(), |a, b| a + b);
    let m_tilde = if i.is_empty() {
        None
    } else {
        let num = memory.value() - &t_j + &v_i;
        Some(&Real::from(num) / &s_i)
    };
    Partition {
        h,
        i,
        j,
        s_i,
        t_j,
        v_i,
        m_tilde,
    }
}

/// Checks the three M-feasibility conditions for every level.
pub fn is_m_feasible(config: &SystemConfig, partition: &Partition) -> bool {
    let k = int(config.caches);
    let low = Rational::one() / &k;
    let high = Rational::one() + &low;
    let Some(mt) = &partition.m_tilde else {
        // M̃ = +∞: only J may be populated
        return partition.h.is_empty() && partition.i.is_empty();
    };
    let lv = &config.levels;
    partition.h.iter().all(|&x| *mt < &sqrt_n_over_u(&lv[x]) * &low)
        && partition.i.iter().all(|&x| {
            let a = sqrt_n_over_u(&lv[x]);
            &a * &low <= *mt && *mt <= &a * &high
        })
        && partition.j.iter().all(|&x| &sqrt_n_over_u(&lv[x]) * &high < *mt)
}

fn require_levels(config: &SystemConfig) -> Result<()> {
    if config.setup != Setup::MultiUser {
        return Err(Error::WrongSetup {
            expected: Setup::MultiUser.name(),
            found: config.setup.name(),
        });
    }
    if config.levels.is_empty() {
        return Err(Error::EmptyLevels);
    }
    Ok(())
}

/// Levels sorted ascending by `√(N_i/U_i)`, ties by index.
fn threshold_order(config: &SystemConfig) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..config.levels.len()).collect();
    idx.sort_by(|&a, &b| {
        let la = &config.levels[a];
        let lb = &config.levels[b];
        (la.files_q() / la.users_q()).cmp(&(lb.files_q() / lb.users_q()))
    });
    idx
}

/// Finds an M-feasible partition by scanning splits where `J` is a prefix
/// and `H` a suffix of the levels ordered by `√(N/U)`. The first feasible
/// split with the smallest `|J|`, then smallest `|H|`, is returned.
pub fn find_m_feasible_partition(config: &SystemConfig, memory: &Memory) -> Result<Partition> {
    require_levels(config)?;
    let total = int(config.total_files());
    let l = config.levels.len();
    if memory.value() > &total {
        return Ok(build_partition(config, memory, vec![], vec![], (0..l).collect()));
    }
    let order = threshold_order(config);
    for j_len in 0..l {
        for h_len in 0..(l - j_len) {
            let mut j: Vec<usize> = order[..j_len].to_vec();
            let mut i: Vec<usize> = order[j_len..l - h_len].to_vec();
            let mut h: Vec<usize> = order[l - h_len..].to_vec();
            j.sort_unstable();
            i.sort_unstable();
            h.sort_unstable();
            // cheap necessary condition before the certified checks
            if memory.value()
                < &j.iter()
                    .map(|&x| config.levels[x].files_q())
                    .fold(Rational::zero(), |a, b| a + b)
            {
                continue;
            }
            let p = build_partition(config, memory, h, i, j);
            if is_m_feasible(config, &p) {
                return Ok(p);
            }
        }
    }
    Err(Error::Infeasible {
        memory: memory.to_string(),
    })
}

/// `α_h M = 0`, `α_i M = √(N_i U_i)·M̃ − N_i/K`, `α_j M = N_j`.
pub fn allocate_memory(partition: &Partition, config: &SystemConfig, memory: &Memory) -> MemoryAllocation {
    let k = int(config.caches);
    let level_memory: Vec<Real> = (0..config.levels.len())
        .map(|x| {
            let l = &config.levels[x];
            match partition.class_of(x) {
                LevelClass::H => Real::zero(),
                LevelClass::J => Real::from(l.files_q()),
                LevelClass::I => {
                    let mt = partition.m_tilde.as_ref().expect("I nonempty");
                    &(&sqrt_nu(l) * mt) - &Real::from(l.files_q() / &k)
                }
            }
        })
        .collect();
    let alphas = if memory.value().is_zero() {
        vec![Real::zero(); level_memory.len()]
    } else {
        level_memory
            .iter()
            .map(|a| a / &Real::from(memory.value().clone()))
            .collect()
    };
    MemoryAllocation { level_memory, alphas }
}

/// Splits `I` into the low (`I0`: `α_i M < N_i/K`), high
/// (`I1`: `α_i M > β N_i`) and intermediate (`I'`) memory regimes. In terms
/// of the normalized memory these are `M̃ < (2/K)√(N_i/U_i)` and
/// `M̃ > (β + 1/K)√(N_i/U_i)`. A level meeting both (possible when
/// `β < 1/K`) is placed in `I0`.
pub fn refine(config: &SystemConfig, _memory: &Memory, partition: &Partition) -> RefinedPartition {
    let k = int(config.caches);
    let low = Real::from(int(2) / &k);
    let high = Real::from(&config.beta + Rational::one() / &k);
    let mut out = RefinedPartition {
        h: partition.h.clone(),
        i0: vec![],
        iprime: vec![],
        i1: vec![],
        j: partition.j.clone(),
    };
    let Some(mt) = &partition.m_tilde else {
        return out;
    };
    for &x in &partition.i {
        let a = sqrt_n_over_u(&config.levels[x]);
        if *mt < &a * &low {
            out.i0.push(x);
        } else if *mt > &a * &high {
            out.i1.push(x);
        } else {
            out.iprime.push(x);
        }
    }
    out
}

pub fn refine_partition(config: &SystemConfig, memory: &Memory) -> Result<RefinedPartition> {
    let p = find_m_feasible_partition(config, memory)?;
    Ok(refine(config, memory, &p))
}

/// Per-level rate bounds: `K U_h` on `H`, `2 S_I √(N_i U_i)/(M − T_J + V_I)`
/// on `I0 ∪ I'`, the `1/β` expression on `I1`, and `0` on `J`.
pub fn level_bounds(
    config: &SystemConfig,
    memory: &Memory,
    partition: &Partition,
    refined: &RefinedPartition,
) -> Vec<Real> {
    let k = int(config.caches);
    let lv = &config.levels;
    let inv_beta = Real::from(config.beta.recip());
    let eff = Real::from(partition.effective_memory(memory));
    let m_minus_tj = Real::from(memory.value() - &partition.t_j);
    let s_low = sum_of(refined.i0.iter().chain(&refined.iprime).map(|&x| &lv[x]), sqrt_nu);
    (0..lv.len())
        .map(|x| {
            let l = &lv[x];
            if refined.h.contains(&x) {
                Real::from(&k * l.users_q())
            } else if refined.j.contains(&x) {
                Real::zero()
            } else if refined.i1.contains(&x) {
                let u = Real::from(l.users_q());
                let n = Real::from(l.files_q());
                let first = &(&inv_beta * &u) * &(&Real::one() - &(&m_minus_tj / &n));
                let second = &(&(&inv_beta * &u) * &s_low) / &sqrt_nu(l);
                &first + &second
            } else {
                &(&(&partition.s_i * &sqrt_nu(l)) * &Real::from(int(2))) / &eff
            }
        })
        .collect()
}

pub fn lemma3_level_bounds(config: &SystemConfig, memory: &Memory) -> Result<Vec<Real>> {
    let p = find_m_feasible_partition(config, memory)?;
    let r = refine(config, memory, &p);
    Ok(level_bounds(config, memory, &p, &r))
}

/// Per-level achieved rates `R^SL(α_i M, K, N_i, U_i)`.
pub fn level_rates(config: &SystemConfig, allocation: &MemoryAllocation) -> Result<Vec<Real>> {
    config
        .levels
        .iter()
        .zip(&allocation.level_memory)
        .map(|(l, m)| rate_single_level_real(m, config.caches, l.files, l.users))
        .collect()
}

/// Display form `Σ_H K U_h + S_I²/(M − T_J) − Σ_I U_i`; `None` when
/// `M = T_J` with a nonempty `I`.
pub fn approximate_rate(config: &SystemConfig, memory: &Memory, partition: &Partition) -> Option<Real> {
    let k = int(config.caches);
    let lv = &config.levels;
    let h_part: Rational = partition
        .h
        .iter()
        .map(|&x| &k * lv[x].users_q())
        .fold(Rational::zero(), |a, b| a + b);
    if partition.i.is_empty() {
        return Some(Real::from(h_part));
    }
    let denom = memory.value() - &partition.t_j;
    if denom.is_zero() {
        return None;
    }
    let u_i: Rational = partition
        .i
        .iter()
        .map(|&x| lv[x].users_q())
        .fold(Rational::zero(), |a, b| a + b);
    let s2 = &partition.s_i * &partition.s_i;
    Some(&(&Real::from(h_part) + &(&s2 / &Real::from(denom))) - &Real::from(u_i))
}

/// Achievable rate of memory sharing: `Σ_i R^SL(α_i M, K, N_i, U_i)` over an
/// M-feasible partition and its allocation.
pub fn rate_memory_sharing(config: &SystemConfig, memory: &Memory) -> Result<RateReport> {
    let regular = validate_multi_user(config)?.ok;
    let partition = find_m_feasible_partition(config, memory)?;
    let refined = refine(config, memory, &partition);
    let allocation = allocate_memory(&partition, config, memory);
    let rates = level_rates(config, &allocation)?;
    let achievable = rates.iter().fold(Real::zero(), |a, r| &a + r);
    let approximate = approximate_rate(config, memory, &partition);
    Ok(RateReport {
        setup: Setup::MultiUser,
        memory: memory.clone(),
        achievable,
        approximate,
        lower: None,
        gap: None,
        regular,
        witness: Witness::MultiUser(Box::new(MultiUserWitness {
            partition,
            refined,
            allocation,
            level_rates: rates,
            bound: None,
            closed_form: None,
        })),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::ratio;

    fn cfg() -> SystemConfig {
        SystemConfig::multi_user(4, &[(8, 2)]).unwrap()
    }

    fn mem(n: i64, d: i64) -> Memory {
        Memory::new(ratio(n, d)).unwrap()
    }

    /// Exhaustive oracle: all 3^L assignments that satisfy the conditions.
    fn feasible_set(config: &SystemConfig, memory: &Memory) -> Vec<(Vec<usize>, Vec<usize>, Vec<usize>)> {
        let l = config.levels.len();
        let mut out = Vec::new();
        for code in 0..3usize.pow(l as u32) {
            let (mut h, mut i, mut j) = (vec![], vec![], vec![]);
            let mut c = code;
            for x in 0..l {
                match c % 3 {
                    0 => h.push(x),
                    1 => i.push(x),
                    _ => j.push(x),
                }
                c /= 3;
            }
            let p = build_partition(config, memory, h.clone(), i.clone(), j.clone());
            if p.m_tilde.is_none() && !(memory.value() > &int(config.total_files())) {
                continue;
            }
            if is_m_feasible(config, &p) {
                out.push((h, i, j));
            }
        }
        out
    }

    #[test]
    fn single_level_partitions() {
        let c = cfg();
        let p = find_m_feasible_partition(&c, &mem(2, 1)).unwrap();
        assert_eq!(p.i, vec![0]);
        assert_eq!(p.m_tilde.clone().unwrap().as_rational(), Some(int(1)));
        assert_eq!(feasible_set(&c, &mem(2, 1)), vec![(vec![], vec![0], vec![])]);

        // M = 0: M̃ = (1/K)√(N/U) exactly, the boundary belongs to I
        let p0 = find_m_feasible_partition(&c, &mem(0, 1)).unwrap();
        assert_eq!(p0.i, vec![0]);
        assert_eq!(p0.m_tilde.clone().unwrap().as_rational(), Some(ratio(1, 2)));

        let big = find_m_feasible_partition(&c, &mem(9, 1)).unwrap();
        assert_eq!(big.j, vec![0]);
        assert!(big.h.is_empty() && big.i.is_empty());
    }

    #[test]
    fn allocation_examples() {
        let c = cfg();
        let m = mem(2, 1);
        let p = find_m_feasible_partition(&c, &m).unwrap();
        let a = allocate_memory(&p, &c, &m);
        assert_eq!(a.level_memory[0].as_rational(), Some(int(2)));
        let m8 = mem(8, 1);
        let p8 = find_m_feasible_partition(&c, &m8).unwrap();
        assert_eq!(p8.i, vec![0]);
        let a8 = allocate_memory(&p8, &c, &m8);
        assert_eq!(a8.level_memory[0].as_rational(), Some(int(8)));
    }

    #[test]
    fn refinement_examples() {
        let c = cfg();
        let r = refine_partition(&c, &mem(2, 1)).unwrap();
        assert_eq!(r.i1, vec![0]);
        let r = refine_partition(&c, &mem(3, 4)).unwrap();
        assert_eq!(r.i0, vec![0]);
        let two = SystemConfig::multi_user(2, &[(32, 16), (25600, 1)]).unwrap();
        let r = refine_partition(&two, &mem(25633, 1)).unwrap();
        assert_eq!(r.j, vec![0, 1]);
    }

    #[test]
    fn rate_examples() {
        let c = cfg();
        let r = rate_memory_sharing(&c, &mem(2, 1)).unwrap();
        assert_eq!(r.achievable.as_rational(), Some(int(6)));
        assert!(r.regular);
        let r0 = rate_memory_sharing(&c, &mem(0, 1)).unwrap();
        assert_eq!(r0.achievable.as_rational(), Some(int(8)));
        let rf = rate_memory_sharing(&c, &mem(8, 1)).unwrap();
        assert_eq!(rf.achievable.as_rational(), Some(int(0)));
    }

    #[test]
    fn level_bound_examples() {
        let c = cfg();
        let b = lemma3_level_bounds(&c, &mem(2, 1)).unwrap();
        // 80·2·(1 − 2/8)
        assert_eq!(b[0].as_rational(), Some(int(120)));
        // a level in H gets K·U_h; J gets 0
        let two = SystemConfig::multi_user(2, &[(32, 16), (25600, 1)]).unwrap();
        let m = mem(1, 1);
        let p = find_m_feasible_partition(&two, &m).unwrap();
        let r = refine(&two, &m, &p);
        let b = level_bounds(&two, &m, &p, &r);
        for &h in &p.h {
            assert_eq!(b[h].as_rational(), Some(int(2) * two.levels[h].users_q()));
        }
        let full = mem(25632, 1);
        let pf = find_m_feasible_partition(&two, &full).unwrap();
        let rf = refine(&two, &full, &pf);
        let bf = level_bounds(&two, &full, &pf, &rf);
        for &j in &pf.j {
            assert!(bf[j].is_zero());
        }
    }

    #[test]
    fn two_level_partition_matches_oracle() {
        let two = SystemConfig::multi_user(2, &[(32, 16), (25600, 1)]).unwrap();
        for m in [0i64, 1, 3, 10, 40, 100, 1000, 25000, 25632] {
            let memory = mem(m, 1);
            let p = find_m_feasible_partition(&two, &memory).unwrap();
            let oracle = feasible_set(&two, &memory);
            assert!(
                oracle.contains(&(p.h.clone(), p.i.clone(), p.j.clone())),
                "M={m}: {:?} not in {:?}",
                (&p.h, &p.i, &p.j),
                oracle
            );
        }
    }

    #[test]
    fn display_form_rate() {
        let c = cfg();
        let m = mem(2, 1);
        let p = find_m_feasible_partition(&c, &m).unwrap();
        // 16/2 − 2 = 6
        assert_eq!(approximate_rate(&c, &m, &p).unwrap().as_rational(), Some(int(6)));
    }

    #[test]
    fn wrong_setup_rejected() {
        let su = SystemConfig::single_user(4, &[(8, 4)]).unwrap();
        assert!(find_m_feasible_partition(&su, &mem(1, 1)).is_err());
    }
}
