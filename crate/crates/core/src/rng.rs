//! Counter-based random streams.
//!
//! Every random draw is keyed by `(master_seed, domain, a, b)` rather than by
//! the position in a shared sequence, so the noise a player receives at a
//! timestep does not depend on scheduling, worker count or which of two
//! coupled games is being simulated.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Stream domains. Distinct domains never share keys.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Domain {
    Noise = 0x6e6f_6973_6500_0001,
    Graph = 0x6772_6170_6800_0002,
    Utility = 0x7574_696c_0000_0003,
    Audit = 0x6175_6469_7400_0004,
    Profile = 0x7072_6f66_0000_0005,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// A ChaCha8 generator keyed by `(master_seed, domain, a, b)`.
pub fn keyed_rng(master_seed: u64, domain: Domain, a: u64, b: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    let mut state = splitmix64(master_seed ^ domain as u64);
    for (k, word) in [a, b, !a, !b].into_iter().enumerate() {
        state = splitmix64(state ^ word.rotate_left(17 * k as u32));
        key[8 * k..8 * (k + 1)].copy_from_slice(&state.to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}

/// `n_i^{(t)}`: i.i.d. `N(0, sigma^2)` coordinates for player `i` at round `t`.
///
/// Returns exact zeros when `sigma == 0`.
pub fn gaussian_noise(master_seed: u64, player: usize, t: usize, dim: usize, sigma: f64) -> Vec<f64> {
    if sigma == 0.0 {
        return vec![0.0; dim];
    }
    let mut rng = keyed_rng(master_seed, Domain::Noise, player as u64, t as u64);
    (0..dim)
        .map(|_| {
            let z: f64 = StandardNormal.sample(&mut rng);
            sigma * z
        })
        .collect()
}
