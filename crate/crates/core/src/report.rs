//! Rate reports: an achievable rate with the witnesses that produced it,
//! optionally paired with a lower bound and the resulting gap.

use serde_json::{json, Value};

use crate::bounds::{
    appendix_a3_params, gap_report, lower_bound_multi_user, lower_bound_single_user, optimize_lower_bound_mu,
    GapReport, MultiUserBoundParams, SingleUserBoundParams,
};
use crate::error::{Error, Result};
use crate::model::{Memory, Setup, SystemConfig};
use crate::multi_user::{rate_memory_sharing, MemoryAllocation, Partition, RefinedPartition};
use crate::numeric::{rational_string, Rational, Real};
use crate::single_user::{rate_clustering, ClusterPartition, RefinedClusterPartition};

/// Significant digits used for decimal renderings.
pub const DIGITS: usize = 12;

#[derive(Clone, Debug, PartialEq)]
pub struct MultiUserWitness {
    pub partition: Partition,
    pub refined: RefinedPartition,
    pub allocation: MemoryAllocation,
    pub level_rates: Vec<Real>,
    /// Maximizer of the sliding-window bound.
    pub bound: Option<MultiUserBoundParams>,
    /// Closed-form parameters with their bound value, when that case applies.
    pub closed_form: Option<(MultiUserBoundParams, Rational)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SingleUserWitness {
    pub partition: ClusterPartition,
    /// `None` if some level matched no class.
    pub refined: Option<RefinedClusterPartition>,
    pub bound: Option<SingleUserBoundParams>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MixedWitness {
    pub gamma: Rational,
    pub f: Option<Box<RateReport>>,
    pub g: Option<Box<RateReport>>,
    /// Grid minimizer of the total rate and its value.
    pub best_gamma: Rational,
    pub best_rate: Real,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Witness {
    MultiUser(Box<MultiUserWitness>),
    SingleUser(Box<SingleUserWitness>),
    Mixed(Box<MixedWitness>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct RateReport {
    pub setup: Setup,
    pub memory: Memory,
    pub achievable: Real,
    /// The closed-form approximation of the memory-sharing rate, for display.
    pub approximate: Option<Real>,
    pub lower: Option<Rational>,
    pub gap: Option<GapReport>,
    /// Whether the instance satisfies the regularity conditions.
    pub regular: bool,
    pub witness: Witness,
}

/// Achievable rate, best lower bound and gap for one `(config, M)`.
/// Mixed instances get the grid-optimized rate and no bound.
pub fn analyze(config: &SystemConfig, memory: &Memory) -> Result<RateReport> {
    match config.setup {
        Setup::MultiUser => {
            let mut report = rate_memory_sharing(config, memory)?;
            let opt = optimize_lower_bound_mu(config, memory)?;
            let gap = gap_report(Setup::MultiUser, &report.achievable, &opt.value, memory)?;
            if let Witness::MultiUser(w) = &mut report.witness {
                w.bound = opt.params;
                w.closed_form = match appendix_a3_params(config, memory) {
                    Ok(p) => {
                        let v = lower_bound_multi_user(config, memory, &p)?;
                        Some((p, v))
                    }
                    Err(Error::NotApplicable(_)) | Err(Error::InvalidParams(_)) => None,
                    Err(e) => return Err(e),
                };
            }
            report.lower = Some(opt.value);
            report.gap = Some(gap);
            Ok(report)
        }
        Setup::SingleUser => {
            let mut report = rate_clustering(config, memory)?;
            let (lower, params) = lower_bound_single_user(config, memory)?;
            let gap = gap_report(Setup::SingleUser, &report.achievable, &lower, memory)?;
            if let Witness::SingleUser(w) = &mut report.witness {
                w.bound = Some(params);
            }
            report.lower = Some(lower);
            report.gap = Some(gap);
            Ok(report)
        }
        Setup::Mixed => crate::experiments::mixed_rate(config, memory, None, crate::experiments::DEFAULT_GAMMA_POINTS),
    }
}

fn real_json(x: &Real) -> Value {
    match x.as_rational() {
        Some(q) => json!({ "exact": rational_string(&q), "decimal": x.to_decimal(DIGITS) }),
        None => json!({ "exact": x.to_string(), "decimal": x.to_decimal(DIGITS) }),
    }
}

fn rational_json(q: &Rational) -> Value {
    real_json(&Real::from(q.clone()))
}

fn levels_json(v: &[usize]) -> Value {
    json!(v)
}

impl RateReport {
    /// Partition columns `(H, I, J)`: the memory-sharing classes, or
    /// `(H', I', -)` for clustering.
    pub fn partition_columns(&self) -> (Vec<usize>, Vec<usize>, Vec<usize>) {
        match &self.witness {
            Witness::MultiUser(w) => (w.partition.h.clone(), w.partition.i.clone(), w.partition.j.clone()),
            Witness::SingleUser(w) => (w.partition.hprime.clone(), w.partition.iprime.clone(), vec![]),
            Witness::Mixed(_) => (vec![], vec![], vec![]),
        }
    }

    pub fn to_json(&self) -> Value {
        let mut out = json!({
            "setup": self.setup.name(),
            "memory": rational_json(self.memory.value()),
            "achievable": real_json(&self.achievable),
            "regular": self.regular,
        });
        if let Some(a) = &self.approximate {
            out["approximate"] = real_json(a);
        }
        if let Some(l) = &self.lower {
            out["lower"] = rational_json(l);
        }
        if let Some(g) = &self.gap {
            out["gap"] = json!({
                "ratio": g.ratio.as_ref().map(real_json).unwrap_or(json!("inf")),
                "constant": rational_string(&g.constant),
                "class": g.class.label(),
                "within": g.within,
                "inversion": g.inversion,
            });
        }
        out["witness"] = match &self.witness {
            Witness::MultiUser(w) => {
                let mut v = json!({
                    "partition": { "H": levels_json(&w.partition.h), "I": levels_json(&w.partition.i), "J": levels_json(&w.partition.j) },
                    "refined": w.refined,
                    "m_tilde": w.partition.m_tilde.as_ref().map(real_json).unwrap_or(json!("inf")),
                    "level_memory": w.allocation.level_memory.iter().map(real_json).collect::<Vec<_>>(),
                    "level_rates": w.level_rates.iter().map(real_json).collect::<Vec<_>>(),
                    "bound_params": w.bound,
                });
                if let Some((p, val)) = &w.closed_form {
                    v["closed_form_params"] = json!({ "params": p, "value": rational_json(val) });
                }
                v
            }
            Witness::SingleUser(w) => json!({
                "partition": { "Hprime": levels_json(&w.partition.hprime), "Iprime": levels_json(&w.partition.iprime) },
                "refined": w.refined,
                "bound_params": w.bound,
            }),
            Witness::Mixed(w) => json!({
                "gamma": rational_string(&w.gamma),
                "class_f": w.f.as_ref().map(|r| r.to_json()),
                "class_g": w.g.as_ref().map(|r| r.to_json()),
                "best_gamma": rational_string(&w.best_gamma),
                "best_rate": real_json(&w.best_rate),
            }),
        };
        out
    }

    /// Human-readable multi-line summary.
    pub fn summary(&self) -> String {
        let mut s = format!(
            "setup: {}\nmemory: {}\nachievable: {} ({})\n",
            self.setup.name(),
            self.memory,
            self.achievable.to_decimal(DIGITS),
            self.achievable
        );
        if let Some(a) = &self.approximate {
            s += &format!("approximate (display form): {}\n", a.to_decimal(DIGITS));
        }
        if let Some(l) = &self.lower {
            s += &format!(
                "lower bound: {} ({})\n",
                Real::from(l.clone()).to_decimal(DIGITS),
                rational_string(l)
            );
        }
        if let Some(g) = &self.gap {
            let ratio = g
                .ratio
                .as_ref()
                .map(|r| r.to_decimal(DIGITS))
                .unwrap_or_else(|| "inf".into());
            s += &format!(
                "gap: {ratio} (constant {}, {})\n",
                rational_string(&g.constant),
                if g.inversion {
                    "INVERSION"
                } else if g.within {
                    "within"
                } else {
                    "EXCEEDED"
                }
            );
        }
        let (h, i, j) = self.partition_columns();
        match &self.witness {
            Witness::MultiUser(_) => s += &format!("partition: H={h:?} I={i:?} J={j:?}\n"),
            Witness::SingleUser(_) => s += &format!("partition: H'={h:?} I'={i:?}\n"),
            Witness::Mixed(w) => {
                s += &format!(
                    "gamma: {} (grid best {} at rate {})\n",
                    rational_string(&w.gamma),
                    rational_string(&w.best_gamma),
                    w.best_rate.to_decimal(DIGITS)
                )
            }
        }
        if !self.regular {
            s += "warning: instance violates the regularity conditions\n";
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::{int, ratio};

    #[test]
    fn multi_user_composition() {
        let c = SystemConfig::multi_user(4, &[(8, 2)]).unwrap();
        let r = analyze(&c, &Memory::from_integer(2)).unwrap();
        assert_eq!(r.achievable.as_rational(), Some(int(6)));
        assert_eq!(r.lower, Some(int(2)));
        assert_eq!(
            r.gap.as_ref().unwrap().ratio.as_ref().unwrap().as_rational(),
            Some(int(3))
        );
        let v = r.to_json();
        assert_eq!(v["achievable"]["exact"], "6");
        assert_eq!(v["gap"]["ratio"]["exact"], "3");
    }

    #[test]
    fn single_user_composition() {
        let c = SystemConfig::single_user(5, &[(4, 4), (100, 1)]).unwrap();
        let r = analyze(&c, &Memory::from_integer(10)).unwrap();
        assert_eq!(r.achievable.as_rational(), Some(int(1)));
        assert_eq!(r.lower, Some(ratio(5, 6)));
        assert_eq!(r.gap.unwrap().ratio.unwrap().as_rational(), Some(ratio(6, 5)));
        let small = analyze(&c, &Memory::ratio(1, 10)).unwrap();
        assert_eq!(small.lower, Some(ratio(9, 2)));
        assert_eq!(small.gap.unwrap().ratio.unwrap().as_rational(), Some(ratio(10, 9)));
    }

    #[test]
    fn zero_memory_serves_everyone() {
        let c = SystemConfig::multi_user(4, &[(8, 2), (800, 1)]).unwrap();
        let r = analyze(&c, &Memory::zero()).unwrap();
        assert_eq!(r.achievable.as_rational(), Some(int(12)));
        let s = SystemConfig::single_user(5, &[(4, 4), (100, 1)]).unwrap();
        let r = analyze(&s, &Memory::zero()).unwrap();
        assert_eq!(r.achievable.as_rational(), Some(int(5)));
    }
}
