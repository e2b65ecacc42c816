//! Seek/transfer cost model and the choice between local-only and
//! local+global repair.

use num_rational::Ratio;
use num_traits::Zero;

use crate::code::LinearCode;
use crate::error::{Error, Result};
use crate::locality::LocalCode;
use crate::repair::{plan_local, plan_msr, plan_parity, RepairPlan, Strategy};

pub type Q = Ratio<i128>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CostModel {
    /// Time units charged per contiguous read.
    pub seek_cost: Q,
    /// Bytes per time unit.
    pub transfer_rate: Q,
    pub subpacket_bytes: u64,
}

impl CostModel {
    pub fn new(seek_cost: Q, transfer_rate: Q, subpacket_bytes: u64) -> Result<CostModel> {
        if seek_cost < Q::zero() {
            return Err(Error::Parameter("seek cost must not be negative".into()));
        }
        if transfer_rate <= Q::zero() || subpacket_bytes == 0 {
            return Err(Error::Parameter("transfer rate and sub-packet size must be positive".into()));
        }
        Ok(CostModel {
            seek_cost,
            transfer_rate,
            subpacket_bytes,
        })
    }

    /// Time to move one sub-packet.
    pub fn subpacket_time(&self) -> Q {
        Q::from_integer(self.subpacket_bytes as i128) / self.transfer_rate
    }
}

/// Parses `"9"`, `"3/5"` or `"0.25"` exactly.
pub fn parse_rational(s: &str) -> Result<Q> {
    let s = s.trim();
    let bad = || Error::Parameter(format!("not a number: {s:?}"));
    if let Some((int, frac)) = s.split_once('.') {
        let num: i128 = format!("{int}{frac}").parse().map_err(|_| bad())?;
        let den = 10i128.checked_pow(frac.len() as u32).ok_or_else(bad)?;
        return Ok(Q::new(num, den));
    }
    let q: Q = s.parse().map_err(|_| bad())?;
    Ok(q)
}

/// Number of read operations: each maximal run of consecutive rows on a node
/// is one read.
pub fn coalesce_reads(plan: &RepairPlan) -> usize {
    plan.reads
        .iter()
        .map(|r| 1 + r.rows.windows(2).filter(|w| w[1] != w[0] + 1).count())
        .sum()
}

pub fn estimate_time(plan: &RepairPlan, cm: &CostModel) -> Q {
    let reads = Q::from_integer(coalesce_reads(plan) as i128);
    let bw = Q::from_integer(plan.bandwidth_subpackets() as i128);
    reads * cm.seek_cost + bw * cm.subpacket_time()
}

#[derive(Clone, Debug)]
pub struct StrategyCost {
    pub plan: RepairPlan,
    pub reads: usize,
    pub bandwidth_subpackets: usize,
    pub bytes: u64,
    pub time: Q,
}

impl StrategyCost {
    pub fn evaluate(plan: RepairPlan, cm: &CostModel) -> StrategyCost {
        StrategyCost {
            reads: coalesce_reads(&plan),
            bandwidth_subpackets: plan.bandwidth_subpackets(),
            bytes: plan.bandwidth_subpackets() as u64 * cm.subpacket_bytes,
            time: estimate_time(&plan, cm),
            plan,
        }
    }

    pub fn strategy(&self) -> Strategy {
        self.plan.strategy
    }
}

#[derive(Clone, Debug)]
pub struct Choice {
    pub options: Vec<StrategyCost>,
    /// Index into `options`.
    pub winner: usize,
    /// Seek cost at which the first two options tie, when that happens at a
    /// positive seek cost.
    pub flip_seek_cost: Option<Q>,
}

impl Choice {
    pub fn best(&self) -> &StrategyCost {
        &self.options[self.winner]
    }
}

/// Seek cost at which two plans take equal time, if positive.
pub fn flip_threshold(a: &StrategyCost, b: &StrategyCost, cm: &CostModel) -> Option<Q> {
    let dr = a.reads as i128 - b.reads as i128;
    let db = b.bandwidth_subpackets as i128 - a.bandwidth_subpackets as i128;
    if dr == 0 {
        return None;
    }
    let s = Q::from_integer(db) * cm.subpacket_time() / Q::from_integer(dr);
    (s > Q::zero()).then_some(s)
}

/// Plans every applicable strategy for `failed` and picks the fastest, with
/// ties going to the plan that contacts fewer helpers.
pub fn choose_strategy(lc: &LocalCode, failed: usize, cm: &CostModel) -> Result<Choice> {
    let plans = if lc.role(failed).is_systematic() {
        vec![plan_local(lc, failed)?, plan_msr(lc, failed)?]
    } else {
        vec![plan_parity(lc, failed)?]
    };
    Ok(choose_among(plans, cm))
}

pub fn choose_among(plans: Vec<RepairPlan>, cm: &CostModel) -> Choice {
    let options: Vec<StrategyCost> = plans.into_iter().map(|p| StrategyCost::evaluate(p, cm)).collect();
    let winner = (0..options.len())
        .min_by(|&a, &b| {
            let (x, y) = (&options[a], &options[b]);
            x.time.cmp(&y.time).then(x.plan.helper_count().cmp(&y.plan.helper_count()))
        })
        .expect("at least one plan");
    let flip_seek_cost = match options.as_slice() {
        [a, b, ..] => flip_threshold(a, b, cm),
        _ => None,
    };
    Choice {
        options,
        winner,
        flip_seek_cost,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::code::CodeSpec;
    use crate::locality::{split, LocalitySpec};
    use crate::repair::Read;

    fn q(n: i128) -> Q {
        Q::from_integer(n)
    }

    fn lc(l: usize) -> LocalCode {
        split(&CodeSpec::builtin_ht_9_6_9(), LocalitySpec::new(l, 2)).unwrap()
    }

    #[test]
    fn coalescing() {
        let lc = lc(2);
        assert_eq!(coalesce_reads(&plan_local(&lc, 1).unwrap()), 3);
        assert_eq!(coalesce_reads(&plan_msr(&CodeSpec::builtin_ht_9_6_9(), 1).unwrap()), 8);
        let mut p = plan_local(&lc, 1).unwrap();
        p.reads = vec![Read { node: 2, rows: vec![1, 3, 5] }];
        assert_eq!(coalesce_reads(&p), 3);
    }

    #[test]
    fn small_file_prefers_local() {
        // 1 KB sub-packets, a seek costs as much as moving 9 KB
        let cm = CostModel::new(q(9), q(1000), 1000).unwrap();
        let c = choose_strategy(&lc(2), 1, &cm).unwrap();
        assert_eq!(c.best().strategy(), Strategy::LocalOnly);
        assert_eq!(c.options[0].time, q(54));
        assert_eq!(c.options[1].time, q(96));
    }

    #[test]
    fn big_file_prefers_msr() {
        let cm = CostModel::new(q(9), q(1000), 10_000_000).unwrap();
        let c = choose_strategy(&lc(2), 1, &cm).unwrap();
        assert_eq!(c.best().strategy(), Strategy::LocalPlusGlobal);
        assert_eq!((c.options[0].bytes, c.options[1].bytes), (270_000_000, 240_000_000));
        // 3s + 27·10^4 = 8s + 24·10^4
        assert_eq!(c.flip_seek_cost, Some(q(6000)));
    }

    #[test]
    fn zero_seek_is_pure_bandwidth() {
        let cm = CostModel::new(q(0), q(1), 1).unwrap();
        let c = choose_strategy(&lc(3), 1, &cm).unwrap();
        assert_eq!(c.best().strategy(), Strategy::LocalOnly);
        assert_eq!(c.best().bandwidth_subpackets, 18);
        let c = choose_strategy(&lc(2), 7, &cm).unwrap();
        assert_eq!(c.options.len(), 1);
        assert_eq!(c.best().strategy(), Strategy::Reencode);
    }

    #[test]
    fn ties_go_to_fewer_helpers() {
        let lc = lc(2);
        // local: 3 reads, 27 rows; msr: 8 reads, 24 rows; equal at seek 3/5
        let cm = CostModel::new(Q::new(3, 5), q(1), 1).unwrap();
        let c = choose_strategy(&lc, 1, &cm).unwrap();
        assert_eq!(c.options[0].time, c.options[1].time);
        assert_eq!(c.best().strategy(), Strategy::LocalOnly);
    }

    #[test]
    fn rationals() {
        assert_eq!(parse_rational("9").unwrap(), q(9));
        assert_eq!(parse_rational("3/5").unwrap(), Q::new(3, 5));
        assert_eq!(parse_rational("-0.25").unwrap(), Q::new(-1, 4));
        assert!(parse_rational("x").is_err());
        assert!(parse_rational("1/0").is_err());
    }

    #[test]
    fn rejects_bad_model() {
        assert!(CostModel::new(q(-1), q(1), 1).is_err());
        assert!(CostModel::new(q(1), q(0), 1).is_err());
        assert!(CostModel::new(q(1), q(1), 0).is_err());
    }
}
