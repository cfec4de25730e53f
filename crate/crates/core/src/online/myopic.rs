use crate::error::Result;
use crate::model::{Instance, Item, KahanSum};

use super::{run_online, AlgorithmSummary, OnlineAllocator, RunTrace, WaterfillStep};

/// Allocates each item to maximize Nash welfare given the utilities accrued so far.
#[derive(Debug, Clone)]
pub struct MyopicGreedy {
    utilities: Vec<KahanSum>,
}

impl MyopicGreedy {
    pub fn new(num_agents: usize) -> Self {
        Self { utilities: vec![KahanSum::default(); num_agents] }
    }
}

impl OnlineAllocator for MyopicGreedy {
    fn num_agents(&self) -> usize {
        self.utilities.len()
    }

    fn allocate(&mut self, item: &Item) -> Result<(Vec<f64>, Vec<WaterfillStep>)> {
        let anticipated = self.utilities.iter().map(KahanSum::value).collect();
        let step = WaterfillStep::solve(anticipated, item.values.clone(), item.supply)?;
        for ((acc, &z), &v) in self.utilities.iter_mut().zip(&step.result.z).zip(&item.values) {
            acc.add(z * v);
        }
        Ok((step.result.z.clone(), vec![step]))
    }

    fn summary(&self) -> AlgorithmSummary {
        AlgorithmSummary::Myopic
    }
}

pub fn myopic_greedy(inst: &Instance) -> Result<RunTrace> {
    run_online(inst, &mut MyopicGreedy::new(inst.num_agents()))
}
