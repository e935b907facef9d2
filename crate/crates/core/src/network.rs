//! Small-world contact network and the influence messages exchanged on it.

use std::collections::VecDeque;
use std::fmt::Write as _;

use rand::seq::IndexedRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::agent::ConsumerAgent;
use crate::error::{Error, Result};
use crate::rng::{stream, SimRng, Stream};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NetworkParams {
    /// Mean degree of the initial ring lattice; must be even.
    pub k: usize,
    pub beta: f64,
}

impl Default for NetworkParams {
    fn default() -> Self {
        Self { k: 4, beta: 0.1 }
    }
}

/// Undirected graph stored as sorted neighbour lists.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SocialNetwork {
    pub adjacency: Vec<Vec<u32>>,
    /// Sub-seed the accepted graph was built from (after connectivity retries).
    pub build_seed: u64,
}

impl SocialNetwork {
    pub fn n(&self) -> usize {
        self.adjacency.len()
    }

    pub fn neighbours(&self, v: usize) -> &[u32] {
        &self.adjacency[v]
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn edges(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        self.adjacency.iter().enumerate().flat_map(|(u, ns)| {
            ns.iter()
                .filter(move |&&v| (u as u32) < v)
                .map(move |&v| (u as u32, v))
        })
    }

    /// One `u v` pair per line, `u < v`, in ascending order.
    pub fn to_edge_list(&self) -> String {
        let mut out = String::new();
        for (u, v) in self.edges() {
            let _ = writeln!(out, "{u} {v}");
        }
        out
    }

    pub fn from_edges(n: usize, edges: &[(u32, u32)]) -> Self {
        let mut adjacency = vec![Vec::new(); n];
        for &(u, v) in edges {
            adjacency[u as usize].push(v);
            adjacency[v as usize].push(u);
        }
        for ns in &mut adjacency {
            ns.sort_unstable();
            ns.dedup();
        }
        Self {
            adjacency,
            build_seed: 0,
        }
    }

    pub fn complete(n: usize) -> Self {
        let adjacency = (0..n)
            .map(|u| (0..n as u32).filter(|&v| v as usize != u).collect())
            .collect();
        Self {
            adjacency,
            build_seed: 0,
        }
    }

    pub fn is_connected(&self) -> bool {
        let n = self.n();
        if n == 0 {
            return true;
        }
        let dist = self.bfs(0);
        dist.iter().all(|d| *d != u32::MAX)
    }

    fn bfs(&self, source: usize) -> Vec<u32> {
        let mut dist = vec![u32::MAX; self.n()];
        let mut queue = VecDeque::new();
        dist[source] = 0;
        queue.push_back(source);
        while let Some(u) = queue.pop_front() {
            for &v in &self.adjacency[u] {
                if dist[v as usize] == u32::MAX {
                    dist[v as usize] = dist[u] + 1;
                    queue.push_back(v as usize);
                }
            }
        }
        dist
    }

    /// Mean local clustering coefficient; nodes of degree < 2 count as 0.
    pub fn clustering_coefficient(&self) -> f64 {
        let n = self.n();
        if n == 0 {
            return 0.0;
        }
        let mut total = 0.0;
        for ns in &self.adjacency {
            let d = ns.len();
            if d < 2 {
                continue;
            }
            let mut links = 0usize;
            for (i, &a) in ns.iter().enumerate() {
                for &b in &ns[i + 1..] {
                    if self.adjacency[a as usize].binary_search(&b).is_ok() {
                        links += 1;
                    }
                }
            }
            total += 2.0 * links as f64 / (d * (d - 1)) as f64;
        }
        total / n as f64
    }

    /// Mean shortest-path length over reachable ordered pairs.
    pub fn mean_path_length(&self) -> f64 {
        let mut sum = 0u64;
        let mut pairs = 0u64;
        for s in 0..self.n() {
            for (t, d) in self.bfs(s).into_iter().enumerate() {
                if t != s && d != u32::MAX {
                    sum += d as u64;
                    pairs += 1;
                }
            }
        }
        if pairs == 0 {
            0.0
        } else {
            sum as f64 / pairs as f64
        }
    }
}

fn check_params(n: usize, params: &NetworkParams) -> Result<()> {
    if params.k < 2 || params.k % 2 != 0 {
        return Err(Error::Domain(format!("mean degree K must be even and >= 2, got {}", params.k)));
    }
    if n <= params.k {
        return Err(Error::Domain(format!("need n > K, got n = {n}, K = {}", params.k)));
    }
    if !(0.0..=1.0).contains(&params.beta) {
        return Err(Error::Domain(format!("rewiring probability must lie in [0, 1], got {}", params.beta)));
    }
    Ok(())
}

/// One Watts–Strogatz draw: ring lattice, then each lattice edge `(u, u+j)`
/// has its far end rewired with probability `beta` to a uniform node that is
/// neither `u` nor already adjacent to it.
pub fn watts_strogatz(n: usize, params: &NetworkParams, rng: &mut SimRng) -> Result<SocialNetwork> {
    check_params(n, params)?;
    let half = params.k / 2;
    let mut adj: Vec<Vec<u32>> = vec![Vec::with_capacity(params.k + 2); n];
    let link = |adj: &mut Vec<Vec<u32>>, u: usize, v: usize| {
        adj[u].push(v as u32);
        adj[v].push(u as u32);
    };
    for u in 0..n {
        for j in 1..=half {
            link(&mut adj, u, (u + j) % n);
        }
    }
    for j in 1..=half {
        for u in 0..n {
            let v = (u + j) % n;
            if rng.random::<f64>() >= params.beta {
                continue;
            }
            if adj[u].len() >= n - 1 {
                continue;
            }
            let w = loop {
                let w = rng.random_range(0..n);
                if w != u && !adj[u].contains(&(w as u32)) {
                    break w;
                }
            };
            if let Some(p) = adj[u].iter().position(|&x| x as usize == v) {
                adj[u].swap_remove(p);
            }
            if let Some(p) = adj[v].iter().position(|&x| x as usize == u) {
                adj[v].swap_remove(p);
            }
            link(&mut adj, u, w);
        }
    }
    for ns in &mut adj {
        ns.sort_unstable();
    }
    Ok(SocialNetwork {
        adjacency: adj,
        build_seed: 0,
    })
}

/// Connected Watts–Strogatz graph. A disconnected draw is discarded and
/// rebuilt from the next network sub-seed. Populations too small for the
/// lattice (`n <= K`) fall back to the complete graph.
pub fn generate_small_world(n: usize, params: &NetworkParams, seed: u64) -> Result<SocialNetwork> {
    if params.k >= 2 && params.k % 2 == 0 && (0.0..=1.0).contains(&params.beta) && n <= params.k {
        return Ok(SocialNetwork::complete(n));
    }
    check_params(n, params)?;
    for attempt in 0..1000u64 {
        let mut rng = stream(seed, Stream::Network, attempt);
        let mut g = watts_strogatz(n, params, &mut rng)?;
        if g.is_connected() {
            g.build_seed = attempt;
            return Ok(g);
        }
    }
    Err(Error::Domain(format!(
        "no connected small-world graph found for n = {n}, K = {}, beta = {} after 1000 attempts",
        params.k, params.beta
    )))
}

/// Erdős–Rényi `G(n, m)` graph, used as the random baseline for
/// small-world comparisons.
pub fn random_gnm(n: usize, m: usize, rng: &mut SimRng) -> Result<SocialNetwork> {
    if n < 2 || m > n * (n - 1) / 2 {
        return Err(Error::Domain(format!("cannot place {m} edges on {n} nodes")));
    }
    let mut adj: Vec<Vec<u32>> = vec![Vec::new(); n];
    let mut placed = 0;
    while placed < m {
        let u = rng.random_range(0..n);
        let v = rng.random_range(0..n);
        if u == v || adj[u].contains(&(v as u32)) {
            continue;
        }
        adj[u].push(v as u32);
        adj[v].push(u as u32);
        placed += 1;
    }
    for ns in &mut adj {
        ns.sort_unstable();
    }
    Ok(SocialNetwork {
        adjacency: adj,
        build_seed: 0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InfluenceMessage {
    pub sender: u32,
    pub receiver: u32,
    pub sender_attitude: f64,
    pub sender_awareness: f64,
    /// Experienced and not discontinued.
    pub sender_is_experienced: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InfluenceParams {
    /// Assimilation strength.
    pub eta: f64,
    /// Added to the receiver's A and ESA when the sender is experienced and
    /// the receiver has not discontinued.
    pub experience_bonus: f64,
    /// Added when the receiver itself is influenced but not yet experienced.
    pub novice_bonus: f64,
}

impl InfluenceParams {
    pub fn violations(&self, path: &str) -> Vec<crate::error::Violation> {
        use crate::error::Violation;
        let mut v = Vec::new();
        if !(0.0..=1.0).contains(&self.eta) {
            v.push(Violation::new(format!("{path}.eta"), "0 <= eta <= 1"));
        }
        if !(0.0..=1.0).contains(&self.experience_bonus) {
            v.push(Violation::new(format!("{path}.experience_bonus"), "0 <= experience_bonus <= 1"));
        }
        if !(0.0..=1.0).contains(&self.novice_bonus) {
            v.push(Violation::new(format!("{path}.novice_bonus"), "0 <= novice_bonus <= 1"));
        }
        v
    }
}

/// Bernoulli(`contact_rate`) contact from an influenced agent to one
/// uniformly chosen neighbour. Both the Bernoulli draw and the neighbour
/// draw are always taken, so the contact stream advances identically
/// whatever the outcome and a higher rate contacts a superset of days.
pub fn maybe_contact(
    agent: &ConsumerAgent,
    neighbours: &[u32],
    contact_rate: f64,
    rng: &mut SimRng,
) -> Option<InfluenceMessage> {
    let u: f64 = rng.random();
    let pick = neighbours.choose(rng);
    if !agent.is_influenced() || u >= contact_rate {
        return None;
    }
    let &receiver = pick?;
    Some(InfluenceMessage {
        sender: agent.id,
        receiver,
        sender_attitude: agent.attitude,
        sender_awareness: agent.awareness,
        sender_is_experienced: agent.is_active_experienced(),
    })
}

/// Assimilation towards the sender plus any bonus, clamped to `[0, 1]`.
pub fn apply_influence(receiver: &mut ConsumerAgent, msg: &InfluenceMessage, params: &InfluenceParams) {
    let mut bonus = 0.0;
    // A discontinuer has stopped engaging, so encouragement no longer sticks.
    if msg.sender_is_experienced && !receiver.discontinued {
        bonus += params.experience_bonus;
    }
    if receiver.is_influenced() && !receiver.is_experienced() {
        bonus += params.novice_bonus;
    }
    let step = |x: f64, target: f64| (x + params.eta * (target - x) + bonus).clamp(0.0, 1.0);
    receiver.attitude = step(receiver.attitude, msg.sender_attitude);
    receiver.awareness = step(receiver.awareness, msg.sender_awareness);
}
