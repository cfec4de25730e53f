//! Fixed workloads shared by the criterion benchmarks.

use nash_stream_core::generators::{gen_hard_table2, gen_random_balanced, gen_random_binary};
use nash_stream_core::Instance;

/// A balanced random instance of the given shape; seed 0, balance ratio 4.
pub fn balanced(agents: usize, items: usize) -> Instance {
    gen_random_balanced(agents, items, 4.0, 0).expect("valid generator parameters")
}

pub fn binary(agents: usize, items: usize) -> Instance {
    gen_random_binary(agents, items, 0.5, 0).expect("valid generator parameters")
}

pub fn staircase(n: usize) -> Instance {
    gen_hard_table2(n).expect("valid staircase size")
}
