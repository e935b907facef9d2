//! Named random sub-streams derived from one master seed.
//!
//! Every concern (population sampling, network construction, appliance
//! behaviour, ...) owns its own stream, and per-agent concerns get one stream
//! per agent. Turning a mechanism on or off therefore never shifts the draws
//! seen by any other mechanism, which is what "frozen stream" comparisons
//! between scenarios rely on.

use rand::SeedableRng;
use rand_xoshiro::Xoshiro256PlusPlus;

pub type SimRng = Xoshiro256PlusPlus;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Population,
    Network,
    Households,
    Positions,
    DailyTimes,
    Behaviour,
    Response,
    Contacts,
    Scenario,
    Intervention,
}

impl Stream {
    fn tag(self) -> u64 {
        match self {
            Stream::Population => 0x706f_7075,
            Stream::Network => 0x6e65_7477,
            Stream::Households => 0x686f_7573,
            Stream::Positions => 0x706f_7369,
            Stream::DailyTimes => 0x6461_696c,
            Stream::Behaviour => 0x6265_6861,
            Stream::Response => 0x7265_7370,
            Stream::Contacts => 0x636f_6e74,
            Stream::Scenario => 0x7363_656e,
            Stream::Intervention => 0x696e_7465,
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed for `(master, stream, index)`; distinct triples give unrelated seeds.
pub fn derive_seed(master: u64, stream: Stream, index: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(master) ^ stream.tag()) ^ index)
}

pub fn stream(master: u64, stream: Stream, index: u64) -> SimRng {
    SimRng::seed_from_u64(derive_seed(master, stream, index))
}
