//! Shared fixtures for the benchmarks.

use fieldspec::field::{random_topology, sample_signal, Support};
use fieldspec::{seed, BandlimitedSignal, SampleSet};

/// Samples of a random real signal with `m` harmonics at `r` uniform positions.
pub fn random_samples(m: usize, r: usize, seed_value: u64) -> SampleSet {
    let mut rng = seed::rng(seed::child(seed_value, 0));
    let signal = BandlimitedSignal::random_real(m, &mut rng);
    let positions = random_topology(r, Support::UNIT, seed::child(seed_value, 1)).expect("valid topology");
    sample_signal(&signal, &positions).expect("valid positions")
}
