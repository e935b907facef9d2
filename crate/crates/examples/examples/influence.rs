//! One contact from an experienced neighbour.

use learnsim_core::agent::{council_archetypes, Experience};
use learnsim_core::network::{apply_influence, maybe_contact, InfluenceParams};
use learnsim_core::rng::{stream, Stream};
use learnsim_core::ConsumerAgent;

fn main() {
    let specs = council_archetypes(true);
    let mut rng = stream(3, Stream::Population, 0);
    let mut sender = ConsumerAgent::sample(0, &specs[0], &mut rng);
    let mut receiver = ConsumerAgent::sample(1, &specs[specs.len() - 1], &mut rng);
    sender.set_influenced();
    sender.experience = Experience::Experienced;
    receiver.set_influenced();

    let params = InfluenceParams {
        eta: 0.01,
        experience_bonus: 0.003,
        novice_bonus: 0.01,
    };
    println!("sender   A {:.4} ESA {:.4}", sender.attitude, sender.awareness);
    println!("receiver A {:.4} ESA {:.4}", receiver.attitude, receiver.awareness);

    let mut contacts = stream(3, Stream::Contacts, 0);
    let mut days = 0;
    while days < 30 {
        if let Some(msg) = maybe_contact(&sender, &[1], 1.0, &mut contacts) {
            apply_influence(&mut receiver, &msg, &params);
        }
        days += 1;
    }
    println!("after {days} daily contacts: receiver A {:.4} ESA {:.4}", receiver.attitude, receiver.awareness);
}
