use serde::Serialize;

use super::{PolarityError, PolarityPanel};
use crate::market_data::StockId;
use crate::period::Period;

/// Shares of positive, negative and zero polarities among non-missing cells.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DirectionRatios {
    pub stock_id: StockId,
    pub period: String,
    pub pos_ratio: f64,
    pub neg_ratio: f64,
    pub zero_ratio: f64,
    pub n: usize,
}

impl DirectionRatios {
    /// `None` when `values` is empty.
    pub fn from_values(
        stock_id: StockId,
        period: impl Into<String>,
        values: impl IntoIterator<Item = f64>,
    ) -> Option<Self> {
        let (mut pos, mut neg, mut zero) = (0usize, 0usize, 0usize);
        for v in values {
            if v > 0.0 {
                pos += 1;
            } else if v < 0.0 {
                neg += 1;
            } else {
                zero += 1;
            }
        }
        let n = pos + neg + zero;
        (n > 0).then(|| DirectionRatios {
            stock_id,
            period: period.into(),
            pos_ratio: pos as f64 / n as f64,
            neg_ratio: neg as f64 / n as f64,
            zero_ratio: zero as f64 / n as f64,
            n,
        })
    }
}

pub fn direction_ratios(
    panel: &PolarityPanel,
    stock: StockId,
    period: &Period,
) -> Result<DirectionRatios, PolarityError> {
    let values = panel
        .rows()
        .filter(|(k, _)| k.stock == stock && period.contains(k.date))
        .flat_map(|(_, row)| row.polarities().into_iter().flatten());
    DirectionRatios::from_values(stock, period.label.clone(), values)
        .ok_or_else(|| PolarityError::EmptyPeriod { stock, period: period.label.clone() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market_data::Bar;
    use crate::polarity::{DayRow, MantimeCounts, PanelKey};

    fn sid() -> StockId {
        "000001".parse().unwrap()
    }

    #[test]
    fn direct_counts() {
        let r = DirectionRatios::from_values(sid(), "p", [0.2, -0.1, 0.0, 0.5]).unwrap();
        assert_eq!((r.pos_ratio, r.neg_ratio, r.zero_ratio), (0.5, 0.25, 0.25));
        let r = DirectionRatios::from_values(sid(), "p", [0.1, 0.9]).unwrap();
        assert_eq!((r.pos_ratio, r.neg_ratio, r.zero_ratio), (1.0, 0.0, 0.0));
        assert!(DirectionRatios::from_values(sid(), "p", []).is_none());
    }

    #[test]
    fn panel_period_filter_and_empty_signal() {
        let mut panel = PolarityPanel::default();
        let mut row = DayRow::default();
        row.set(Bar::new(1).unwrap(), MantimeCounts { buy: 3, sell: 1 });
        row.set(Bar::new(2).unwrap(), MantimeCounts { buy: 1, sell: 1 });
        panel.insert(PanelKey { stock: sid(), date: "2015-05-08".parse().unwrap() }, row);
        let r = direction_ratios(&panel, sid(), &Period::all()).unwrap();
        assert_eq!((r.pos_ratio, r.zero_ratio, r.n), (0.5, 0.5, 2));
        let june = Period::new("june", "2015-06-01".parse().unwrap(), "2015-06-30".parse().unwrap());
        assert!(matches!(direction_ratios(&panel, sid(), &june), Err(PolarityError::EmptyPeriod { .. })));
    }
}
