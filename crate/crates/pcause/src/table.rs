//! Exact joint probability tables over binary endogenous variables and the
//! datasets they are estimated from.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::graph::VariableId;

/// Most variables the dense table representation accepts; 2^20 cells.
pub const MAX_TABLE_VARS: usize = 20;

const SUM_TOLERANCE: f64 = 1e-9;

/// A partial assignment of binary values to named variables.
pub type Event = [(VariableId, bool)];

/// Dense joint distribution over an ordered set of binary variables.
///
/// Cell indexing treats an assignment as a binary number with the first
/// declared variable as the most significant bit.
#[derive(Debug, Clone, PartialEq)]
pub struct JointTable {
    vars: Vec<VariableId>,
    index: BTreeMap<VariableId, usize>,
    probs: Vec<f64>,
}

impl JointTable {
    pub fn new(vars: Vec<VariableId>, probs: Vec<f64>) -> Result<Self> {
        if vars.is_empty() {
            return Err(Error::InvalidDistribution("no variables".into()));
        }
        if vars.len() > MAX_TABLE_VARS {
            return Err(Error::InvalidDistribution(format!(
                "{} variables exceed the {MAX_TABLE_VARS}-variable cap",
                vars.len()
            )));
        }
        let mut index = BTreeMap::new();
        for (i, v) in vars.iter().enumerate() {
            if index.insert(v.clone(), i).is_some() {
                return Err(Error::InvalidDistribution(format!(
                    "duplicate variable `{v}`"
                )));
            }
        }
        if probs.len() != 1usize << vars.len() {
            return Err(Error::InvalidDistribution(format!(
                "expected {} probabilities, got {}",
                1usize << vars.len(),
                probs.len()
            )));
        }
        if let Some(p) = probs.iter().find(|p| !p.is_finite() || **p < 0.0) {
            return Err(Error::InvalidDistribution(format!(
                "probability {p} is negative or not finite"
            )));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::InvalidDistribution(format!(
                "probabilities sum to {total}, not 1"
            )));
        }
        Ok(JointTable { vars, index, probs })
    }

    /// Relative frequencies of a dataset with additive smoothing applied per
    /// cell, renormalized.
    pub fn from_dataset(data: &Dataset, smoothing: f64) -> Result<Self> {
        if data.rows.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if smoothing < 0.0 || !smoothing.is_finite() {
            return Err(Error::InvalidDistribution(format!(
                "smoothing must be a nonnegative real, got {smoothing}"
            )));
        }
        let n_vars = data.columns.len();
        if n_vars > MAX_TABLE_VARS {
            return Err(Error::InvalidDistribution(format!(
                "{n_vars} columns exceed the {MAX_TABLE_VARS}-variable cap"
            )));
        }
        let cells = 1usize << n_vars;
        let mut counts = vec![0u64; cells];
        for row in &data.rows {
            let mut idx = 0usize;
            for &bit in row {
                idx = (idx << 1) | bit as usize;
            }
            counts[idx] += 1;
        }
        let denom = data.rows.len() as f64 + smoothing * cells as f64;
        let probs: Vec<f64> = counts
            .iter()
            .map(|&c| (c as f64 + smoothing) / denom)
            .collect();
        JointTable::new(data.columns.clone(), probs)
    }

    pub fn variables(&self) -> &[VariableId] {
        &self.vars
    }

    pub fn cells(&self) -> &[f64] {
        &self.probs
    }

    pub fn var_position(&self, v: &VariableId) -> Option<usize> {
        self.index.get(v).copied()
    }

    fn check_event(&self, event: &Event) -> Result<()> {
        for (v, _) in event {
            if !self.index.contains_key(v) {
                return Err(Error::BadVariable(v.as_str().to_string()));
            }
        }
        Ok(())
    }

    /// Probability of a partial assignment (marginalizing everything else).
    /// The empty event has probability 1.
    pub fn probability(&self, event: &Event) -> Result<f64> {
        self.check_event(event)?;
        let mut mask = 0usize;
        let mut want = 0usize;
        for (v, val) in event {
            let pos = self.index[v];
            let bit = 1usize << (self.vars.len() - 1 - pos);
            mask |= bit;
            if *val {
                want |= bit;
            }
        }
        let mut total = 0.0;
        for (idx, p) in self.probs.iter().enumerate() {
            if idx & mask == want {
                total += p;
            }
        }
        Ok(total)
    }

    /// Conditional probability of `event` given `given`. Errors when the
    /// conditioning event has zero mass.
    pub fn conditional(&self, event: &Event, given: &Event) -> Result<f64> {
        let pg = self.probability(given)?;
        if pg <= 0.0 {
            return Err(Error::ZeroConditioningEvent(format_event(given)));
        }
        let mut joint: Vec<(VariableId, bool)> = given.to_vec();
        for (v, val) in event {
            if let Some((_, prev)) = joint.iter().find(|(w, _)| w == v) {
                if prev != val {
                    return Ok(0.0);
                }
            } else {
                joint.push((v.clone(), *val));
            }
        }
        Ok(self.probability(&joint)? / pg)
    }

    /// Joint marginal over a subset of variables, in the given order.
    pub fn marginal(&self, vars: &[VariableId]) -> Result<JointTable> {
        for v in vars {
            if !self.index.contains_key(v) {
                return Err(Error::BadVariable(v.as_str().to_string()));
            }
        }
        let k = vars.len();
        let mut probs = vec![0.0; 1usize << k];
        let mut event: Vec<(VariableId, bool)> = vars.iter().map(|v| (v.clone(), false)).collect();
        for (cell, slot) in probs.iter_mut().enumerate() {
            for (j, e) in event.iter_mut().enumerate() {
                e.1 = (cell >> (k - 1 - j)) & 1 == 1;
            }
            *slot = self.probability(&event)?;
        }
        JointTable::new(vars.to_vec(), probs)
    }
}

pub fn format_event(event: &Event) -> String {
    if event.is_empty() {
        return "{}".to_string();
    }
    let parts: Vec<String> = event
        .iter()
        .map(|(v, val)| format!("{v}={}", *val as u8))
        .collect();
    parts.join(",")
}

/// Rows of observed binary endogenous variables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    pub columns: Vec<VariableId>,
    pub rows: Vec<Vec<bool>>,
}

impl Dataset {
    pub fn new(columns: Vec<VariableId>, rows: Vec<Vec<bool>>) -> Result<Self> {
        for row in &rows {
            if row.len() != columns.len() {
                return Err(Error::InvalidDistribution(format!(
                    "row has {} cells, expected {}",
                    row.len(),
                    columns.len()
                )));
            }
        }
        Ok(Dataset { columns, rows })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn vid(s: &str) -> VariableId {
        VariableId::new(s)
    }

    fn example3_table() -> JointTable {
        crate::bench::models::example3_distribution()
    }

    #[test]
    fn example3_joint_of_cause_and_effect() {
        let t = example3_table();
        let p = t
            .probability(&[(vid("X"), true), (vid("Y"), true)])
            .unwrap();
        assert!((p - 0.33625).abs() < 1e-12, "got {p}");
        // The last four published entries sum to 1/8.
        let p = t
            .probability(&[(vid("S"), true), (vid("X"), true)])
            .unwrap();
        assert!((p - 0.125).abs() < 1e-12, "got {p}");
    }

    #[test]
    fn empty_event_has_probability_one() {
        let t = example3_table();
        assert!((t.probability(&[]).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_mass_conditioning_is_an_error() {
        let t = JointTable::new(
            vec![vid("A"), vid("B")],
            vec![0.5, 0.0, 0.5, 0.0],
        )
        .unwrap();
        let err = t
            .conditional(&[(vid("A"), true)], &[(vid("B"), true)])
            .unwrap_err();
        assert!(matches!(err, Error::ZeroConditioningEvent(_)));
    }

    #[test]
    fn estimate_uniform_from_four_rows() {
        let d = Dataset::new(
            vec![vid("X"), vid("Y")],
            vec![
                vec![false, false],
                vec![false, true],
                vec![true, false],
                vec![true, true],
            ],
        )
        .unwrap();
        let t = JointTable::from_dataset(&d, 0.0).unwrap();
        for &p in t.cells() {
            assert!((p - 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn estimate_with_additive_smoothing() {
        let d = Dataset::new(vec![vid("X"), vid("Y")], vec![vec![true, true]]).unwrap();
        let t = JointTable::from_dataset(&d, 1.0).unwrap();
        assert!((t.cells()[3] - 0.4).abs() < 1e-12);
        for &p in &t.cells()[..3] {
            assert!((p - 0.2).abs() < 1e-12);
        }
    }

    #[test]
    fn empty_dataset_rejected() {
        let d = Dataset::new(vec![vid("X")], vec![]).unwrap();
        assert_eq!(JointTable::from_dataset(&d, 0.0), Err(Error::EmptyDataset));
    }

    #[test]
    fn unnormalized_table_rejected() {
        let err = JointTable::new(vec![vid("X")], vec![0.7, 0.7]).unwrap_err();
        assert!(matches!(err, Error::InvalidDistribution(_)));
    }

    #[test]
    fn marginal_preserves_order_and_mass() {
        let t = example3_table();
        let m = t.marginal(&[vid("Z"), vid("X")]).unwrap();
        assert_eq!(m.variables(), &[vid("Z"), vid("X")]);
        let direct = t
            .probability(&[(vid("Z"), true), (vid("X"), false)])
            .unwrap();
        // Z is the leading (most significant) variable of the marginal.
        assert!((m.cells()[2] - direct).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn chain_rule_holds(cells in proptest::collection::vec(0.01f64..1.0, 8)) {
            let total: f64 = cells.iter().sum();
            let probs: Vec<f64> = cells.iter().map(|c| c / total).collect();
            let t = JointTable::new(vec![vid("A"), vid("B"), vid("C")], probs).unwrap();
            let e = [(vid("A"), true)];
            let g = [(vid("B"), false), (vid("C"), true)];
            let joint: Vec<(VariableId, bool)> = e.iter().cloned().chain(g.iter().cloned()).collect();
            let lhs = t.conditional(&e, &g).unwrap() * t.probability(&g).unwrap();
            let rhs = t.probability(&joint).unwrap();
            prop_assert!((lhs - rhs).abs() < 1e-12);
        }
    }
}
