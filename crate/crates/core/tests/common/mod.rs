//! Small random ecosystems and brute-force oracles shared by the
//! integration tests. Nothing here calls the library's connectivity or
//! placement code.

#![allow(dead_code)]

use std::collections::{BTreeSet, VecDeque};

use fedisim::{Ecosystem, Instance};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A random valid ecosystem. Every AS and instance exists; follows are
/// drawn independently with probability `p_follow`; toots pick a uniform
/// author.
pub fn random_eco(
    seed: u64,
    n_ases: usize,
    n_instances: usize,
    n_users: usize,
    p_follow: f64,
    n_toots: usize,
) -> Ecosystem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut b = Ecosystem::builder();
    for a in 0..n_ases {
        b.add_as(&format!("as{a}"), if a % 2 == 0 { "JP" } else { "US" })
            .unwrap();
    }
    for i in 0..n_instances {
        let a = if i < n_ases { i } else { rng.random_range(0..n_ases) };
        let country = if rng.random::<bool>() { "JP" } else { "FR" };
        let mut inst = Instance::new(&format!("i{i:02}"), &format!("as{a}"), country);
        inst.open_registration = rng.random::<bool>();
        b.add_instance(inst).unwrap();
    }
    for u in 0..n_users {
        let i = if u < n_instances { u } else { rng.random_range(0..n_instances) };
        b.add_user(&format!("u{u:03}"), &format!("i{i:02}")).unwrap();
    }
    for a in 0..n_users {
        for c in 0..n_users {
            if a != c && rng.random::<f64>() < p_follow {
                b.add_follow_idx(a, c).unwrap();
            }
        }
    }
    for t in 0..n_toots {
        let author = rng.random_range(0..n_users.max(1));
        b.add_toot(&format!("t{t:03}"), &format!("u{author:03}"), t as i64)
            .unwrap();
    }
    b.build()
}

/// Weak components by breadth-first search over an adjacency list,
/// restricted to `alive` nodes. Returns `(largest size, component count,
/// members of the largest component with the lowest smallest member)`.
pub fn bfs_components(n: usize, edges: &[(usize, usize)], alive: &[bool]) -> (usize, usize, Vec<usize>) {
    let mut adj = vec![Vec::new(); n];
    for &(a, b) in edges {
        if alive[a] && alive[b] {
            adj[a].push(b);
            adj[b].push(a);
        }
    }
    let mut seen = vec![false; n];
    let mut best: Vec<usize> = Vec::new();
    let mut count = 0;
    for s in 0..n {
        if !alive[s] || seen[s] {
            continue;
        }
        count += 1;
        let mut comp = vec![s];
        seen[s] = true;
        let mut q = VecDeque::from([s]);
        while let Some(x) = q.pop_front() {
            for &y in &adj[x] {
                if !seen[y] {
                    seen[y] = true;
                    comp.push(y);
                    q.push_back(y);
                }
            }
        }
        if comp.len() > best.len() {
            best = comp;
        }
    }
    best.sort_unstable();
    (best.len(), count, best)
}

/// Oracle view of an ecosystem after removing users and instances: the
/// social and federation graphs are rebuilt from scratch.
pub struct Rebuilt {
    pub lcc_users: usize,
    pub social_components: usize,
    pub lcc_instances: usize,
    pub federation_components: usize,
    pub remaining_users: usize,
    pub remaining_instances: usize,
}

pub fn rebuild(eco: &Ecosystem, removed_users: &BTreeSet<usize>, removed_instances: &BTreeSet<usize>) -> Rebuilt {
    let home: Vec<usize> = eco
        .users()
        .iter()
        .map(|u| eco.instance_idx(&u.instance_id).unwrap())
        .collect();
    let user_alive: Vec<bool> = (0..eco.users().len())
        .map(|u| !removed_users.contains(&u) && !removed_instances.contains(&home[u]))
        .collect();
    let follows: Vec<(usize, usize)> = eco
        .follows()
        .iter()
        .map(|&(a, b)| (a as usize, b as usize))
        .filter(|&(a, b)| user_alive[a] && user_alive[b])
        .collect();
    let (lu, cu, _) = bfs_components(eco.users().len(), &follows, &user_alive);
    let inst_alive: Vec<bool> = (0..eco.instances().len())
        .map(|i| !removed_instances.contains(&i))
        .collect();
    let fed: Vec<(usize, usize)> = follows
        .iter()
        .map(|&(a, b)| (home[a], home[b]))
        .filter(|(a, b)| a != b)
        .collect();
    let (li, ci, _) = bfs_components(eco.instances().len(), &fed, &inst_alive);
    Rebuilt {
        lcc_users: lu,
        social_components: cu,
        lcc_instances: li,
        federation_components: ci,
        remaining_users: user_alive.iter().filter(|&&x| x).count(),
        remaining_instances: inst_alive.iter().filter(|&&x| x).count(),
    }
}

/// Replica sets recomputed from the raw ecosystem.
pub fn oracle_none(eco: &Ecosystem) -> Vec<BTreeSet<usize>> {
    eco.toots()
        .iter()
        .map(|t| {
            let u = eco.user_idx(&t.author_id).unwrap();
            BTreeSet::from([eco.instance_idx(&eco.users()[u].instance_id).unwrap()])
        })
        .collect()
}

pub fn oracle_subscription(eco: &Ecosystem) -> Vec<BTreeSet<usize>> {
    let mut sets = oracle_none(eco);
    for (t, toot) in eco.toots().iter().enumerate() {
        let author = eco.user_idx(&toot.author_id).unwrap() as u32;
        for &(follower, followed) in eco.follows() {
            if followed == author {
                let f = &eco.users()[follower as usize];
                sets[t].insert(eco.instance_idx(&f.instance_id).unwrap());
            }
        }
    }
    sets
}

/// Random placement redone with a dense partial Fisher-Yates shuffle fed
/// from the same per-toot stream.
pub fn oracle_random(eco: &Ecosystem, n: usize, seed: u64) -> Vec<BTreeSet<usize>> {
    let m = eco.instances().len() - 1;
    oracle_none(eco)
        .into_iter()
        .enumerate()
        .map(|(t, home_set)| {
            let home = *home_set.iter().next().unwrap();
            let others: Vec<usize> = (0..eco.instances().len()).filter(|&i| i != home).collect();
            let mut deck: Vec<usize> = (0..m).collect();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(t as u64);
            let mut set = home_set;
            for j in 0..n.min(m) {
                let r = rng.random_range(j..m);
                deck.swap(j, r);
                set.insert(others[deck[j]]);
            }
            set
        })
        .collect()
}

/// Fraction of toots with a replica on an instance outside `failed_bits`.
pub fn oracle_availability(sets: &[BTreeSet<usize>], failed_bits: u64) -> f64 {
    if sets.is_empty() {
        return 1.0;
    }
    let alive = sets
        .iter()
        .filter(|s| s.iter().any(|&i| failed_bits & (1 << i) == 0))
        .count();
    alive as f64 / sets.len() as f64
}

pub fn mask(bits: u64, n: usize) -> Vec<bool> {
    (0..n).map(|i| bits & (1 << i) != 0).collect()
}
