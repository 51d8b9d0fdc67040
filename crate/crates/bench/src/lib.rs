//! Fixed instances shared by the benchmarks.

use cachelab_core::{Memory, SystemConfig};

/// Three regular multi-user levels on 32 caches with every class populated
/// somewhere along the memory axis.
pub fn multi_user_instance() -> SystemConfig {
    SystemConfig::multi_user(32, &[(32 * 2, 2), (32 * 3 * 6400, 3), (32 * 6400 * 6400 * 2, 1)]).expect("valid instance")
}

/// Four single-user levels on 16 caches.
pub fn single_user_instance() -> SystemConfig {
    SystemConfig::single_user(16, &[(12, 6), (90, 5), (400, 4), (2000, 1)]).expect("valid instance")
}

/// Memory sizes spread over the multi-user instance's interesting range.
pub fn multi_user_memories() -> Vec<Memory> {
    [1u64, 64, 4096, 1 << 20, 1 << 28]
        .into_iter()
        .map(Memory::from_integer)
        .collect()
}

pub fn single_user_memories() -> Vec<Memory> {
    vec![
        Memory::ratio(1, 10),
        Memory::from_integer(2),
        Memory::from_integer(40),
        Memory::from_integer(600),
    ]
}
