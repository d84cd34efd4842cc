//! Named, independent random streams spawned from one master seed.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// Stream identifiers. Each (stream, index) pair maps to its own ChaCha
/// stream, so drawing more from one never shifts another.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Stream {
    Channels,
    Symbols,
    NoiseReference,
    MonteCarloNoise,
    EveNoise,
    Oracle,
}

impl Stream {
    fn id(self) -> u64 {
        match self {
            Stream::Channels => 1,
            Stream::Symbols => 2,
            Stream::NoiseReference => 3,
            Stream::MonteCarloNoise => 4,
            Stream::EveNoise => 5,
            Stream::Oracle => 6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeedStreams {
    master: u64,
}

impl SeedStreams {
    pub fn new(master: u64) -> Self {
        Self { master }
    }

    pub fn master(&self) -> u64 {
        self.master
    }

    pub fn rng(&self, stream: Stream, index: u64) -> ChaCha12Rng {
        let mut rng = ChaCha12Rng::seed_from_u64(self.master);
        rng.set_stream((stream.id() << 48) ^ index);
        rng
    }
}
