//! Instances, allocations and utility vectors.
//!
//! An [`Instance`] is a fixed set of agents and an ordered stream of divisible
//! items. Allocations are stored item-major (one column of per-agent amounts
//! per item) because every online algorithm produces them one column at a time.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative slack allowed on `sum_i x_it <= s_t`.
pub const FEASIBILITY_TOLERANCE: f64 = 1e-9;

/// Relative tolerance used by invariant checks unless a check states its own.
pub const INVARIANT_TOLERANCE: f64 = 1e-6;

/// A divisible item: its supply and the per-unit value each agent assigns to it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Item {
    pub supply: f64,
    pub values: Vec<f64>,
}

impl Item {
    pub fn new(supply: f64, values: Vec<f64>) -> Self {
        Self { supply, values }
    }

    /// Largest value any agent has for this item.
    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    fn validate(&self, num_agents: usize, index: usize) -> Result<()> {
        if self.values.len() != num_agents {
            return Err(Error::Structure(format!(
                "item {index} has {} values, expected {num_agents}",
                self.values.len()
            )));
        }
        if !(self.supply.is_finite() && self.supply > 0.0) {
            return Err(Error::Structure(format!(
                "item {index} has non-positive or non-finite supply {}",
                self.supply
            )));
        }
        if let Some((agent, v)) = self.values.iter().enumerate().find(|(_, v)| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::Structure(format!("item {index} has invalid value {v} for agent {agent}")));
        }
        Ok(())
    }
}

/// `num_agents` agents and a non-empty ordered stream of items.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    num_agents: usize,
    items: Vec<Item>,
}

impl Instance {
    pub fn new(num_agents: usize, items: Vec<Item>) -> Result<Self> {
        if num_agents == 0 {
            return Err(Error::Structure("instance needs at least one agent".into()));
        }
        if items.is_empty() {
            return Err(Error::Structure("instance needs at least one item".into()));
        }
        for (t, item) in items.iter().enumerate() {
            item.validate(num_agents, t)?;
        }
        Ok(Self { num_agents, items })
    }

    pub fn num_agents(&self) -> usize {
        self.num_agents
    }

    pub fn num_items(&self) -> usize {
        self.items.len()
    }

    pub fn items(&self) -> &[Item] {
        &self.items
    }

    pub fn item(&self, t: usize) -> &Item {
        &self.items[t]
    }

    pub fn value(&self, agent: usize, item: usize) -> f64 {
        self.items[item].values[agent]
    }

    /// The first `len` items as a standalone instance.
    pub fn prefix(&self, len: usize) -> Result<Self> {
        if len == 0 || len > self.items.len() {
            return Err(Error::Precondition(format!("prefix length {len} outside 1..={}", self.items.len())));
        }
        Self::new(self.num_agents, self.items[..len].to_vec())
    }

    /// Agents whose values are zero for every item.
    pub fn zero_agents(&self) -> Vec<usize> {
        (0..self.num_agents).filter(|&i| self.items.iter().all(|item| item.values[i] == 0.0)).collect()
    }

    /// FNV-1a digest of the agent count and every supply and value bit pattern.
    pub fn fingerprint(&self) -> u64 {
        const PRIME: u64 = 0x0000_0100_0000_01b3;
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut eat = |word: u64| {
            for byte in word.to_le_bytes() {
                h ^= byte as u64;
                h = h.wrapping_mul(PRIME);
            }
        };
        eat(self.num_agents as u64);
        for item in &self.items {
            eat(item.supply.to_bits());
            for v in &item.values {
                eat(v.to_bits());
            }
        }
        h
    }

    /// Every nonzero value of an item equals that item's common value.
    pub fn is_binary(&self) -> bool {
        self.items.iter().all(|item| {
            let top = item.max_value();
            item.values.iter().all(|&v| v == 0.0 || v == top)
        })
    }
}

/// Compensated running sum.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct KahanSum {
    sum: f64,
    carry: f64,
}

impl KahanSum {
    pub fn add(&mut self, x: f64) {
        // Neumaier's variant: also correct when |x| > |sum|.
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

impl FromIterator<f64> for KahanSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = KahanSum::default();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

/// Amounts `x_it` of each item given to each agent, stored one column per item.
#[derive(Debug, Clone, PartialEq)]
pub struct Allocation {
    num_agents: usize,
    columns: Vec<Vec<f64>>,
}

impl Allocation {
    pub fn empty(num_agents: usize) -> Self {
        Self { num_agents, columns: Vec::new() }
    }

    pub fn zeros(num_agents: usize, num_items: usize) -> Self {
        Self { num_agents, columns: vec![vec![0.0; num_agents]; num_items] }
    }

    pub fn from_columns(num_agents: usize, columns: Vec<Vec<f64>>) -> Result<Self> {
        for (t, col) in columns.iter().enumerate() {
            if col.len() != num_agents {
                return Err(Error::Structure(format!("column {t} has {} entries, expected {num_agents}", col.len())));
            }
            if col.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
                return Err(Error::Structure(format!("column {t} has a negative or non-finite entry")));
            }
        }
        Ok(Self { num_agents, columns })
    }

    pub fn push_column(&mut self, column: Vec<f64>) {
        debug_assert_eq!(column.len(), self.num_agents);
        self.columns.push(column);
    }

    pub fn num_agents(&self) -> usize {
        self.num_agents
    }

    pub fn num_items(&self) -> usize {
        self.columns.len()
    }

    pub fn get(&self, agent: usize, item: usize) -> f64 {
        self.columns[item][agent]
    }

    pub fn column(&self, item: usize) -> &[f64] {
        &self.columns[item]
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.columns
    }

    pub(crate) fn column_mut(&mut self, item: usize) -> &mut [f64] {
        &mut self.columns[item]
    }

    /// Row of agent `i` across items.
    pub fn row(&self, agent: usize) -> Vec<f64> {
        self.columns.iter().map(|c| c[agent]).collect()
    }

    pub fn check_dimensions(&self, inst: &Instance) -> Result<()> {
        if self.num_agents != inst.num_agents() || self.columns.len() != inst.num_items() {
            return Err(Error::Structure(format!(
                "allocation is {}x{}, instance is {}x{}",
                self.num_agents,
                self.columns.len(),
                inst.num_agents(),
                inst.num_items()
            )));
        }
        Ok(())
    }

    /// Largest relative supply overrun, `max_t (sum_i x_it - s_t) / s_t` (negative when slack).
    pub fn max_overrun(&self, inst: &Instance) -> Result<f64> {
        self.check_dimensions(inst)?;
        Ok(self
            .columns
            .iter()
            .zip(inst.items())
            .map(|(col, item)| {
                let used: KahanSum = col.iter().copied().collect();
                (used.value() - item.supply) / item.supply
            })
            .fold(f64::NEG_INFINITY, f64::max))
    }

    pub fn is_feasible(&self, inst: &Instance) -> Result<bool> {
        Ok(self.max_overrun(inst)? <= FEASIBILITY_TOLERANCE && self.columns.iter().flatten().all(|&x| x >= 0.0))
    }
}

/// Per-agent utilities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtilityVector(pub Vec<f64>);

impl UtilityVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn max(&self) -> f64 {
        self.0.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.0.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

impl From<Vec<f64>> for UtilityVector {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_malformed_instances() {
        assert!(Instance::new(0, vec![Item::new(1.0, vec![])]).is_err());
        assert!(Instance::new(2, vec![]).is_err());
        assert!(Instance::new(2, vec![Item::new(1.0, vec![1.0])]).is_err());
        assert!(Instance::new(1, vec![Item::new(0.0, vec![1.0])]).is_err());
        assert!(Instance::new(1, vec![Item::new(1.0, vec![-1.0])]).is_err());
        assert!(Instance::new(1, vec![Item::new(1.0, vec![f64::NAN])]).is_err());
        assert!(Instance::new(1, vec![Item::new(f64::INFINITY, vec![1.0])]).is_err());
    }

    #[test]
    fn zero_agents_are_accepted_but_reported() {
        let inst = Instance::new(2, vec![Item::new(1.0, vec![1.0, 0.0])]).unwrap();
        assert_eq!(inst.zero_agents(), vec![1]);
    }

    #[test]
    fn kahan_recovers_small_addends() {
        let mut acc = KahanSum::default();
        acc.add(1e16);
        for _ in 0..1000 {
            acc.add(1.0);
        }
        acc.add(-1e16);
        assert_eq!(acc.value(), 1000.0);
    }

    #[test]
    fn feasibility_uses_relative_slack() {
        let inst = Instance::new(2, vec![Item::new(2.0, vec![1.0, 1.0])]).unwrap();
        let ok = Allocation::from_columns(2, vec![vec![1.0, 1.0 + 1e-10]]).unwrap();
        let bad = Allocation::from_columns(2, vec![vec![1.0, 1.001]]).unwrap();
        assert!(ok.is_feasible(&inst).unwrap());
        assert!(!bad.is_feasible(&inst).unwrap());
    }

    #[test]
    fn binary_predicate() {
        let bin = Instance::new(2, vec![Item::new(1.0, vec![0.5, 0.0]), Item::new(1.0, vec![2.0, 2.0])]).unwrap();
        let not = Instance::new(2, vec![Item::new(1.0, vec![0.5, 0.25])]).unwrap();
        assert!(bin.is_binary());
        assert!(!not.is_binary());
    }
}
