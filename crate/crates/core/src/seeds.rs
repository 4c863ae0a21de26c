use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Independent random streams derived from one experiment seed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Domain {
    Channel,
    Deltas(u64),
    Weights(usize),
    Noise(u64),
    Sweep(u64),
}

impl Domain {
    fn stream_id(self) -> u64 {
        // High byte carries the domain, the rest an index within it.
        let (tag, idx) = match self {
            Domain::Channel => (1u64, 0u64),
            Domain::Deltas(i) => (2, i),
            Domain::Weights(j) => (3, j as u64),
            Domain::Noise(i) => (5, i),
            Domain::Sweep(i) => (6, i),
        };
        (tag << 56) | (idx & 0x00ff_ffff_ffff_ffff)
    }
}

pub(crate) fn rng_for(seed: u64, domain: Domain) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(domain.stream_id());
    rng
}
