//! Seed derivation.
//!
//! A check draws from named streams, one per `(check_id, side)`. The stream
//! seed is `splitmix64(master ^ fnv1a(label))` and replicate `r` uses a
//! ChaCha8 generator seeded with `splitmix64(stream ^ r)`. The label does not
//! include `n`, so a sweep over sample sizes reuses replicate seeds.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, &b| {
        (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Stream {
    master: u64,
    seed: u64,
}

impl Stream {
    pub fn new(master: u64, check_id: &str, side: &str) -> Self {
        let label = format!("{check_id}/{side}");
        Self {
            master,
            seed: splitmix64(master ^ fnv1a(label.as_bytes())),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn master(&self) -> u64 {
        self.master
    }

    pub fn replicate_seed(&self, r: u64) -> u64 {
        splitmix64(self.seed ^ r)
    }

    pub fn rng(&self, r: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.replicate_seed(r))
    }
}
