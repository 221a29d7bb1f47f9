//! Per-member random streams derived from a master seed.
//!
//! Member `i` draws its initial condition from stream `2i` and its Brownian
//! increments from stream `2i + 1` of a ChaCha8 generator keyed by the master
//! seed, so results do not depend on how members are scheduled.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type MemberRng = ChaCha8Rng;

fn stream(master_seed: u64, id: u64) -> MemberRng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(id);
    rng
}

pub fn init_stream(master_seed: u64, member: u64) -> MemberRng {
    stream(master_seed, 2 * member)
}

pub fn noise_stream(master_seed: u64, member: u64) -> MemberRng {
    stream(master_seed, 2 * member + 1)
}
