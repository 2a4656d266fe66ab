//! Counter-keyed random substreams.
//!
//! Every stochastic draw in the crate comes from a ChaCha8 stream whose key is
//! built from the user seed plus coordinates, so outputs do not depend on the
//! order in which voxels or scatterers are generated.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream domains, so different generators never share a key.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Domain {
    Samples = 1,
    Voxel = 2,
    Scatterers = 3,
}

/// Independent stream for `(seed, domain, a, b)`.
pub fn substream(seed: u64, domain: Domain, a: u64, b: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[0..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&(domain as u64).to_le_bytes());
    key[16..24].copy_from_slice(&a.to_le_bytes());
    key[24..32].copy_from_slice(&b.to_le_bytes());
    ChaCha8Rng::from_seed(key)
}
