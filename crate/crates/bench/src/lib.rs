//! Fixtures shared by the benchmarks.

use risee_core::channel::{self, FadingParams};
use risee_core::{Architecture, ChannelSet, SystemConfig};

/// Default-sized system with `n_ris` elements and its channels for `seed`.
pub fn fixture(n_ris: usize, seed: u64) -> (SystemConfig, ChannelSet) {
    let cfg = SystemConfig { n_ris, ..SystemConfig::default() };
    let geom = channel::generate_scenario(&cfg, seed);
    let ch = channel::generate_channels(&geom, &FadingParams::default(), &cfg, seed);
    (cfg, ch)
}

pub const BENCH_ARCHS: [Architecture; 4] = Architecture::OPTIMIZED;
