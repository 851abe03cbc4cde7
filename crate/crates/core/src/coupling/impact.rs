use std::collections::BTreeMap;

use serde::Serialize;

use crate::market_data::StockId;
use crate::period::Period;
use crate::polarity::{PolarityPanel, ReturnSeries};
use crate::stats::FiveNumberSummary;

/// Return distributions grouped by the sign of the same minute's polarity.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ImpactGroups {
    pub negative: Option<FiveNumberSummary>,
    pub zero: Option<FiveNumberSummary>,
    pub positive: Option<FiveNumberSummary>,
}

/// Splits `(polarity, return)` pairs into negative, zero and positive
/// polarity groups of returns, preserving input order within each group.
pub fn split_by_sign(pairs: &[(f64, f64)]) -> [Vec<f64>; 3] {
    let mut groups: [Vec<f64>; 3] = Default::default();
    for &(p, r) in pairs {
        let g = if p < 0.0 {
            0
        } else if p == 0.0 {
            1
        } else {
            2
        };
        groups[g].push(r);
    }
    groups
}

pub fn price_impact_groups(pairs: &[(f64, f64)]) -> ImpactGroups {
    let [neg, zero, pos] = split_by_sign(pairs);
    ImpactGroups {
        negative: FiveNumberSummary::from_values(&neg),
        zero: FiveNumberSummary::from_values(&zero),
        positive: FiveNumberSummary::from_values(&pos),
    }
}

/// All minutes in `period` where both polarity and the stock's one-minute
/// log-return are present.
pub fn impact_pairs(
    panel: &PolarityPanel,
    returns: &BTreeMap<StockId, ReturnSeries>,
    period: &Period,
) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    for (k, row) in panel.rows().filter(|(k, _)| period.contains(k.date)) {
        let Some(rets) = returns.get(&k.stock).and_then(|r| r.intraday_log.get(&k.date)) else { continue };
        for (c, r) in row.cells().iter().zip(rets) {
            if let (Some(p), Some(r)) = (c.polarity(), r) {
                out.push((p, *r));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn zero_returns() {
        let pairs = [(-0.5, 0.0), (0.0, 0.0), (0.3, 0.0), (0.9, 0.0)];
        let g = price_impact_groups(&pairs);
        for s in [g.negative, g.zero, g.positive] {
            let s = s.unwrap();
            assert_eq!((s.median, s.iqr()), (0.0, 0.0));
        }
    }

    #[test]
    fn single_pair_and_empty_groups() {
        let g = price_impact_groups(&[(0.5, 0.01)]);
        let p = g.positive.unwrap();
        assert_eq!((p.n, p.median), (1, 0.01));
        assert!(g.negative.is_none() && g.zero.is_none());
    }

    proptest! {
        #[test]
        fn groups_conserve_observations(pairs in prop::collection::vec(
            (prop_oneof![Just(0.0), -1.0f64..1.0], -0.1f64..0.1), 0..200)) {
            let groups = split_by_sign(&pairs);
            let mut merged: Vec<f64> = groups.concat();
            let mut input: Vec<f64> = pairs.iter().map(|p| p.1).collect();
            merged.sort_by(f64::total_cmp);
            input.sort_by(f64::total_cmp);
            prop_assert_eq!(merged, input);
            let g = price_impact_groups(&pairs);
            let n: usize = [g.negative, g.zero, g.positive].iter().flatten().map(|s| s.n).sum();
            prop_assert_eq!(n, pairs.len());
        }
    }
}
