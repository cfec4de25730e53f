//! Hard instances and seeded random families.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::monopolist_utilities;
use crate::model::{Instance, Item};

/// Largest `n` accepted by the staircase generators; keeps `n^(2n)` well inside `f64`.
pub const MAX_STAIRCASE_N: usize = 25;

/// A generator family with its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum GeneratorSpec {
    HardTable2 { n: usize },
    HardTable2Binary { n: usize },
    Copies { base: Box<GeneratorSpec>, copies: usize },
    RandomBalanced { agents: usize, items: usize, lambda: f64, seed: u64 },
    RandomBinary { agents: usize, items: usize, density: f64, seed: u64 },
}

impl GeneratorSpec {
    pub fn generate(&self) -> Result<Instance> {
        match self {
            Self::HardTable2 { n } => gen_hard_table2(*n),
            Self::HardTable2Binary { n } => gen_hard_table2_binary(*n),
            Self::Copies { base, copies } => gen_copies(&base.generate()?, *copies),
            Self::RandomBalanced { agents, items, lambda, seed } => {
                gen_random_balanced(*agents, *items, *lambda, *seed)
            }
            Self::RandomBinary { agents, items, density, seed } => gen_random_binary(*agents, *items, *density, *seed),
        }
    }

    pub fn family(&self) -> &'static str {
        match self {
            Self::HardTable2 { .. } => "hard-table2",
            Self::HardTable2Binary { .. } => "hard-table2-binary",
            Self::Copies { .. } => "copies",
            Self::RandomBalanced { .. } => "random-balanced",
            Self::RandomBinary { .. } => "random-binary",
        }
    }

    /// Compact `key=value` description for report rows.
    pub fn params(&self) -> String {
        match self {
            Self::HardTable2 { n } | Self::HardTable2Binary { n } => format!("n={n}"),
            Self::Copies { base, copies } => format!("m={copies};base={}:{}", base.family(), base.params()),
            Self::RandomBalanced { agents, items, lambda, seed } => {
                format!("N={agents};T={items};lambda={lambda};seed={seed}")
            }
            Self::RandomBinary { agents, items, density, seed } => {
                format!("N={agents};T={items};density={density};seed={seed}")
            }
        }
    }

    /// The staircase size `n` for the hard families (through copies).
    pub fn staircase_n(&self) -> Option<usize> {
        match self {
            Self::HardTable2 { n } | Self::HardTable2Binary { n } => Some(*n),
            Self::Copies { base, .. } => base.staircase_n(),
            _ => None,
        }
    }
}

fn check_staircase(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::Precondition(format!("staircase needs n >= 2, got {n}")));
    }
    if n > MAX_STAIRCASE_N {
        return Err(Error::Refused(format!("n = {n} exceeds {MAX_STAIRCASE_N}; n^(2n) would overflow")));
    }
    Ok(())
}

/// The staircase lower-bound instance: item `t` (1-based) has unit supply and
/// value `n^(2t)` for agents `t..=n`, zero for the others.
pub fn gen_hard_table2(n: usize) -> Result<Instance> {
    check_staircase(n)?;
    let base = n as f64;
    let items = (1..=n)
        .map(|t| {
            let v = base.powi(2 * t as i32);
            Item::new(1.0, (1..=n).map(|i| if i >= t { v } else { 0.0 }).collect())
        })
        .collect();
    Instance::new(n, items)
}

/// Same utilities as [`gen_hard_table2`] with 0/1 values: item `t` has supply `n^(2t)`.
pub fn gen_hard_table2_binary(n: usize) -> Result<Instance> {
    check_staircase(n)?;
    let base = n as f64;
    let items = (1..=n)
        .map(|t| Item::new(base.powi(2 * t as i32), (1..=n).map(|i| if i >= t { 1.0 } else { 0.0 }).collect()))
        .collect();
    Instance::new(n, items)
}

/// `m` independent copies of `base` on disjoint agent blocks.
///
/// Copy `g` of base item `t` is its own item, valued only by block `g`; items
/// arrive interleaved (item 1 of every copy, then item 2, ...).
pub fn gen_copies(base: &Instance, m: usize) -> Result<Instance> {
    if m == 0 {
        return Err(Error::Precondition("need at least one copy".into()));
    }
    let n = base.num_agents();
    let mut items = Vec::with_capacity(base.num_items() * m);
    for item in base.items() {
        for g in 0..m {
            let mut values = vec![0.0; n * m];
            values[g * n..(g + 1) * n].copy_from_slice(&item.values);
            items.push(Item::new(item.supply, values));
        }
    }
    Instance::new(n * m, items)
}

/// `(0, 1]`, avoiding exact zeros.
fn unit_open_closed(rng: &mut ChaCha8Rng) -> f64 {
    1.0 - rng.random::<f64>()
}

/// Uniform random values rescaled so monopolist utilities run geometrically
/// from 1 up to `lambda` across agents.
pub fn gen_random_balanced(agents: usize, items: usize, lambda: f64, seed: u64) -> Result<Instance> {
    if agents == 0 || items == 0 {
        return Err(Error::Precondition("need at least one agent and one item".into()));
    }
    if !(lambda >= 1.0 && lambda.is_finite()) {
        return Err(Error::Precondition(format!("balance target {lambda} must be a finite value >= 1")));
    }
    if agents == 1 && lambda != 1.0 {
        return Err(Error::Precondition("a single agent always has balance ratio 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let raw: Vec<Item> =
        (0..items).map(|_| Item::new(1.0, (0..agents).map(|_| unit_open_closed(&mut rng)).collect())).collect();
    let raw = Instance::new(agents, raw)?;
    let current = monopolist_utilities(&raw);
    let scale: Vec<f64> = (0..agents)
        .map(|i| {
            let target = if agents == 1 { 1.0 } else { lambda.powf(i as f64 / (agents - 1) as f64) };
            target / current.0[i]
        })
        .collect();
    let items = raw
        .items()
        .iter()
        .map(|item| Item::new(item.supply, item.values.iter().zip(&scale).map(|(v, c)| v * c).collect()))
        .collect();
    Instance::new(agents, items)
}

/// Items with a common value `v_t` in `(0, 1]` for a random non-empty agent
/// subset (each agent joins with probability `density`); unit supplies.
pub fn gen_random_binary(agents: usize, items: usize, density: f64, seed: u64) -> Result<Instance> {
    if agents == 0 || items == 0 {
        return Err(Error::Precondition("need at least one agent and one item".into()));
    }
    if !(density > 0.0 && density <= 1.0) {
        return Err(Error::Precondition(format!("density {density} must lie in (0, 1]")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let items = (0..items)
        .map(|_| {
            let v = unit_open_closed(&mut rng);
            loop {
                let members: Vec<bool> = (0..agents).map(|_| rng.random::<f64>() < density).collect();
                if members.iter().any(|&m| m) {
                    break Item::new(1.0, members.iter().map(|&m| if m { v } else { 0.0 }).collect());
                }
            }
        })
        .collect();
    Instance::new(agents, items)
}
