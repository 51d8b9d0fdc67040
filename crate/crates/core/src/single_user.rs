//! Clustering achievability in the single-user setup: levels whose files
//! are too large to cache usefully (`M < N_h/K_h`) are served uncoded, the
//! rest are merged into one super-level that receives all of the memory.

use num_traits::Zero;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{validate_single_user, Memory, Setup, SystemConfig};
use crate::numeric::{int, ratio, Rational, Real};
use crate::report::{RateReport, SingleUserWitness, Witness};
use crate::single_level::{deliver, place, place_random, verify_decode, Demand, PlacementState, Transcript};

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ClusterPartition {
    pub hprime: Vec<usize>,
    pub iprime: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RefinedClusterPartition {
    pub g: Vec<usize>,
    pub h: Vec<usize>,
    pub i: Vec<usize>,
    pub j: Vec<usize>,
}

fn require(config: &SystemConfig) -> Result<()> {
    config.require(Setup::SingleUser)?;
    if config.levels.is_empty() {
        return Err(Error::EmptyLevels);
    }
    Ok(())
}

/// `h ∈ H'` iff `M < N_h/K_h`; the boundary goes to `I'`.
pub fn partition_su(config: &SystemConfig, memory: &Memory) -> Result<ClusterPartition> {
    require(config)?;
    let m = memory.value();
    let mut out = ClusterPartition {
        hprime: vec![],
        iprime: vec![],
    };
    for (x, l) in config.levels.iter().enumerate() {
        if m < &(l.files_q() / l.users_q()) {
            out.hprime.push(x);
        } else {
            out.iprime.push(x);
        }
    }
    Ok(out)
}

/// `Σ_{H'} K_h + max{Σ_{I'} N_i / M − 1, 0}`.
pub fn clustering_rate(config: &SystemConfig, memory: &Memory, partition: &ClusterPartition) -> Rational {
    let lv = &config.levels;
    let uncoded: u64 = partition.hprime.iter().map(|&x| lv[x].users).sum();
    let library: u64 = partition.iprime.iter().map(|&x| lv[x].files).sum();
    let m = memory.value();
    let coded = if library == 0 || m.is_zero() {
        // with M = 0 every level is in H'
        Rational::zero()
    } else {
        (int(library) / m - int(1)).max(Rational::zero())
    };
    int(uncoded) + coded
}

pub fn rate_clustering(config: &SystemConfig, memory: &Memory) -> Result<RateReport> {
    let regular = validate_single_user(config)?.ok;
    let partition = partition_su(config, memory)?;
    let rate = clustering_rate(config, memory, &partition);
    let refined = refine_partition_su(config, memory).ok();
    Ok(RateReport {
        setup: Setup::SingleUser,
        memory: memory.clone(),
        achievable: Real::from(rate),
        approximate: None,
        lower: None,
        gap: None,
        regular,
        witness: Witness::SingleUser(Box::new(SingleUserWitness {
            partition,
            refined,
            bound: None,
        })),
    })
}

/// Definition of the `(G, H, I, J)` classes:
/// `G`: `M < N/K`, `K ≤ 5`, `M ≤ N/6`; `H`: `M < N/K`, `K ≥ 6`;
/// `I`: `N/K ≤ M ≤ N/6`; `J`: `M > N/6`. The first matching class wins and
/// a level matching none is reported as an error.
pub fn refine_partition_su(config: &SystemConfig, memory: &Memory) -> Result<RefinedClusterPartition> {
    require(config)?;
    let m = memory.value();
    let mut out = RefinedClusterPartition {
        g: vec![],
        h: vec![],
        i: vec![],
        j: vec![],
    };
    for (x, l) in config.levels.iter().enumerate() {
        let per_user = l.files_q() / l.users_q();
        let sixth = l.files_q() * ratio(1, 6);
        if m < &per_user && l.users <= 5 && m <= &sixth {
            out.g.push(x);
        } else if m < &per_user && l.users >= 6 {
            out.h.push(x);
        } else if &per_user <= m && m <= &sixth {
            out.i.push(x);
        } else if m > &sixth {
            out.j.push(x);
        } else {
            return Err(Error::Uncovered {
                level: x,
                memory: memory.to_string(),
            });
        }
    }
    Ok(out)
}

/// `Σ_G K_g + Σ_H K_h + Σ_I N_i / M` plus the `J` term: `N_J/M` below
/// `N_J/6`, `6(1 − M/N_J)` up to `N_J`, and 0 beyond.
pub fn rate_upper_bound_su(config: &SystemConfig, memory: &Memory) -> Result<Rational> {
    let m = memory.value();
    if m.is_zero() {
        return Err(Error::Domain("the clustering upper bound needs M > 0".into()));
    }
    let r = refine_partition_su(config, memory)?;
    let lv = &config.levels;
    let users: u64 = r.g.iter().chain(&r.h).map(|&x| lv[x].users).sum();
    let files_i: u64 = r.i.iter().map(|&x| lv[x].files).sum();
    let n_j = int(r.j.iter().map(|&x| lv[x].files).sum());
    let j_term = if r.j.is_empty() || m >= &n_j {
        Rational::zero()
    } else if m < &(&n_j * ratio(1, 6)) {
        &n_j / m
    } else {
        int(6) * (int(1) - m / &n_j)
    };
    Ok(int(users) + int(files_i) / m + j_term)
}

/// How the super-level is placed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ClusterPlacement {
    /// Subset placement over all caches.
    Centralized,
    /// Seeded random packet placement.
    Random { packets: usize, seed: u64 },
}

/// One independently served part of a clustered run.
#[derive(Clone, Debug)]
pub struct ClusterPart {
    pub placement: PlacementState,
    pub demands: Vec<Demand>,
    pub transcript: Transcript,
    /// Canonical level of each file of this part's library.
    pub file_levels: Vec<usize>,
}

impl ClusterPart {
    pub fn verify(&self) -> bool {
        verify_decode(&self.placement, &self.transcript, &self.demands)
    }
}

#[derive(Clone, Debug)]
pub struct ClusterRun {
    pub partition: ClusterPartition,
    /// `H'` users served uncoded.
    pub uncoded: Option<ClusterPart>,
    /// The `I'` super-level.
    pub coded: Option<ClusterPart>,
}

impl ClusterRun {
    pub fn total_size(&self) -> Rational {
        [&self.uncoded, &self.coded]
            .into_iter()
            .flatten()
            .map(|p| p.transcript.total_size.clone())
            .fold(Rational::zero(), |a, b| a + b)
    }

    pub fn verify(&self) -> bool {
        [&self.uncoded, &self.coded]
            .into_iter()
            .flatten()
            .all(ClusterPart::verify)
    }
}

/// Runs the clustered scheme for one arrangement: `assignment[c]` is the
/// level of the user at cache `c`, `demands[c]` the file it requests
/// (an index within that level).
pub fn cluster_place_deliver(
    config: &SystemConfig,
    memory: &Memory,
    assignment: &[usize],
    demands: &[usize],
) -> Result<ClusterRun> {
    cluster_place_deliver_with(config, memory, assignment, demands, ClusterPlacement::Centralized)
}

pub fn cluster_place_deliver_with(
    config: &SystemConfig,
    memory: &Memory,
    assignment: &[usize],
    demands: &[usize],
    mode: ClusterPlacement,
) -> Result<ClusterRun> {
    require(config)?;
    let k = config.caches as usize;
    if assignment.len() != k || demands.len() != k {
        return Err(Error::Domain(format!(
            "assignment and demands need one entry per cache ({k}), got {} and {}",
            assignment.len(),
            demands.len()
        )));
    }
    for (x, l) in config.levels.iter().enumerate() {
        let count = assignment.iter().filter(|&&a| a == x).count() as u64;
        if count != l.users {
            return Err(Error::Domain(format!(
                "level {x} has {} users but {count} caches are assigned to it",
                l.users
            )));
        }
    }
    if let Some(c) = (0..k).find(|&c| assignment[c] >= config.levels.len()) {
        return Err(Error::Domain(format!(
            "cache {c} assigned to unknown level {}",
            assignment[c]
        )));
    }
    if let Some(c) = (0..k).find(|&c| demands[c] as u64 >= config.levels[assignment[c]].files) {
        return Err(Error::Domain(format!("cache {c} requests missing file {}", demands[c])));
    }
    let partition = partition_su(config, memory)?;
    let build = |levels: &[usize], memory: &Memory| -> Result<Option<ClusterPart>> {
        if levels.is_empty() {
            return Ok(None);
        }
        let mut offset = vec![0usize; config.levels.len()];
        let mut file_levels = Vec::new();
        for &x in levels {
            offset[x] = file_levels.len();
            file_levels.extend(std::iter::repeat_n(x, config.levels[x].files as usize));
        }
        let files = file_levels.len();
        let capped = if memory.value() > &int(files as u64) {
            Memory::from_integer(files as u64)
        } else {
            memory.clone()
        };
        let placement = match mode {
            ClusterPlacement::Centralized => place(k, files, &capped)?,
            ClusterPlacement::Random { packets, seed } => place_random(k, files, &capped, packets, seed)?,
        };
        let part_demands: Vec<Demand> = (0..k)
            .filter(|&c| levels.contains(&assignment[c]))
            .map(|c| Demand::new(c, offset[assignment[c]] + demands[c]))
            .collect();
        let transcript = deliver(&placement, &part_demands)?;
        Ok(Some(ClusterPart {
            placement,
            demands: part_demands,
            transcript,
            file_levels,
        }))
    };
    // uncoded service needs no cached content
    let uncoded = build(&partition.hprime, &Memory::zero())?;
    let coded = build(&partition.iprime, memory)?;
    Ok(ClusterRun {
        partition,
        uncoded,
        coded,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mem(n: i64, d: i64) -> Memory {
        Memory::new(ratio(n, d)).unwrap()
    }

    fn example() -> SystemConfig {
        SystemConfig::single_user(5, &[(4, 4), (100, 1)]).unwrap()
    }

    #[test]
    fn partition_examples() {
        let c = example();
        // canonical order keeps (4,4) first: popularity 1 > 1/100
        let p = partition_su(&c, &mem(10, 1)).unwrap();
        assert_eq!(p.hprime, vec![1]);
        assert_eq!(p.iprime, vec![0]);
        let p0 = partition_su(&c, &mem(0, 1)).unwrap();
        assert_eq!(p0.hprime, vec![0, 1]);
        let big = partition_su(&c, &mem(100, 1)).unwrap();
        assert_eq!(big.iprime, vec![0, 1]);
        // boundary M = N/K goes to I'
        let edge = partition_su(&c, &mem(1, 1)).unwrap();
        assert_eq!(edge.iprime, vec![0]);
    }

    #[test]
    fn rate_examples() {
        let c = example();
        let r = rate_clustering(&c, &mem(10, 1)).unwrap();
        assert_eq!(r.achievable.as_rational(), Some(int(1)));
        let r0 = rate_clustering(&c, &mem(0, 1)).unwrap();
        assert_eq!(r0.achievable.as_rational(), Some(int(5)));
        let one = SystemConfig::single_user(3, &[(7, 3)]).unwrap();
        let full = rate_clustering(&one, &mem(7, 1)).unwrap();
        assert!(full.achievable.is_zero());
    }

    #[test]
    fn refined_examples() {
        let c = example();
        let r = refine_partition_su(&c, &mem(10, 1)).unwrap();
        assert_eq!(r.g, vec![1]);
        assert_eq!(r.j, vec![0]);
        let r = refine_partition_su(&c, &mem(1000, 1)).unwrap();
        assert_eq!(r.j, vec![0, 1]);
        let h = SystemConfig::single_user(6, &[(60, 6)]).unwrap();
        assert_eq!(refine_partition_su(&h, &mem(5, 1)).unwrap().h, vec![0]);
    }

    #[test]
    fn upper_bound_examples() {
        let c = example();
        assert_eq!(rate_upper_bound_su(&c, &mem(10, 1)).unwrap(), int(1));
        assert_eq!(rate_upper_bound_su(&c, &mem(104, 1)).unwrap(), int(0));
        // (4,4) alone in J with M < 4/6
        let j = SystemConfig::single_user(4, &[(4, 4)]).unwrap();
        let m = mem(1, 2);
        let r = refine_partition_su(&j, &m).unwrap();
        assert_eq!(r.g, vec![0]);
        let j2 = SystemConfig::single_user(2, &[(12, 1), (12, 1)]).unwrap();
        let m = mem(5, 2);
        assert_eq!(refine_partition_su(&j2, &m).unwrap().j, vec![0, 1]);
        assert_eq!(rate_upper_bound_su(&j2, &m).unwrap(), int(24) / ratio(5, 2));
        assert!(rate_upper_bound_su(&j2, &mem(0, 1)).is_err());
    }

    #[test]
    fn engine_examples() {
        let c = example();
        let run = cluster_place_deliver(&c, &mem(0, 1), &[0, 0, 0, 0, 1], &[0, 1, 2, 3, 0]).unwrap();
        assert_eq!(run.total_size(), int(5));
        assert!(run.verify());

        let one = SystemConfig::single_user(3, &[(4, 3)]).unwrap();
        let full = cluster_place_deliver(&one, &mem(4, 1), &[0, 0, 0], &[0, 1, 2]).unwrap();
        assert!(full.total_size().is_zero());
        assert!(full.verify());

        let two = SystemConfig::single_user(2, &[(4, 2)]).unwrap();
        let run = cluster_place_deliver(&two, &mem(2, 1), &[0, 0], &[0, 1]).unwrap();
        assert!(run.verify());
        assert!(run.total_size() <= int(1));
    }

    #[test]
    fn malformed_assignments_rejected() {
        let c = example();
        assert!(cluster_place_deliver(&c, &mem(1, 1), &[0, 0, 0, 1, 1], &[0; 5]).is_err());
        assert!(cluster_place_deliver(&c, &mem(1, 1), &[0, 0, 0, 0], &[0; 4]).is_err());
        assert!(cluster_place_deliver(&c, &mem(1, 1), &[0, 0, 0, 0, 1], &[0, 0, 0, 9, 0]).is_err());
    }

    #[test]
    fn random_mode_decodes() {
        let c = SystemConfig::single_user(3, &[(3, 2), (4, 1)]).unwrap();
        for seed in 0..3 {
            let run = cluster_place_deliver_with(
                &c,
                &mem(3, 2),
                &[0, 1, 0],
                &[0, 3, 2],
                ClusterPlacement::Random { packets: 8, seed },
            )
            .unwrap();
            assert!(run.verify());
        }
    }
}
