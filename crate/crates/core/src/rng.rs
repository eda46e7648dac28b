//! Counter-based random streams.
//!
//! Every random decision in the simulators is drawn from a stream keyed by
//! `(seed, round, domain, index)`. Streams never share state, so a round can
//! be evaluated pair by pair in any order (or in parallel) and still produce
//! the same bits. The generator is SplitMix64 started from a hashed key; it
//! is fast and statistically adequate for simulation, and not meant for
//! anything security related.

use rand::RngCore;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline(always)]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Which kind of decision a stream feeds. Keeps streams for the same
/// `(seed, round, index)` apart.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum Domain {
    Partition = 1,
    Transmission = 2,
    Recovery = 3,
    Symptom = 4,
    Seeding = 5,
    Aggregate = 6,
    AlbumFill = 7,
    Chat = 8,
}

#[derive(Debug, Clone)]
pub struct StreamRng {
    state: u64,
}

impl StreamRng {
    pub fn keyed(seed: u64, round: u64, domain: Domain, index: u64) -> Self {
        let mut k = mix64(seed ^ 0x6A09_E667_F3BC_C909);
        k = mix64(k ^ round.wrapping_mul(GOLDEN_GAMMA));
        k = mix64(k ^ (domain as u64).wrapping_mul(0xD1B5_4A32_D192_ED03));
        k = mix64(k ^ index.wrapping_mul(0x8CB9_2BA7_2F3D_8DD7));
        Self { state: k }
    }
}

impl RngCore for StreamRng {
    #[inline]
    fn next_u32(&mut self) -> u32 {
        (self.next_u64() >> 32) as u32
    }

    #[inline]
    fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN_GAMMA);
        mix64(self.state)
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        for chunk in dst.chunks_mut(8) {
            let bytes = self.next_u64().to_le_bytes();
            chunk.copy_from_slice(&bytes[..chunk.len()]);
        }
    }
}
