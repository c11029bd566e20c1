//! Toot placement strategies and toot availability under instance failures.
//!
//! A toot is available while at least one instance holding a replica is
//! up. A global index over replicas is assumed and not itself simulated.
//! All toots weigh the same.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::ecosystem::Ecosystem;
use crate::error::{Error, Result};
use crate::report::{opt_f64, CsvTable};
use crate::resilience::{rank_ases, rank_instances, Ranking, Target};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Strategy {
    /// Only the home instance holds the toot.
    None,
    /// Home plus every instance hosting a follower of the author.
    Subscription,
    /// Home plus `n` distinct other instances drawn uniformly per toot.
    Random(usize),
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Strategy::None => f.write_str("none"),
            Strategy::Subscription => f.write_str("subscription"),
            Strategy::Random(n) => write!(f, "random:{n}"),
        }
    }
}

impl FromStr for Strategy {
    type Err = Error;

    /// Accepts `none`, `subscription`, `random:N` and `random(N)`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "none" => return Ok(Strategy::None),
            "subscription" => return Ok(Strategy::Subscription),
            _ => {}
        }
        let n = s
            .strip_prefix("random:")
            .or_else(|| s.strip_prefix("random(").and_then(|r| r.strip_suffix(')')))
            .ok_or_else(|| Error::invalid(format!("unknown strategy `{s}`")))?;
        n.trim()
            .parse()
            .map(Strategy::Random)
            .map_err(|_| Error::invalid(format!("bad replica count in `{s}`")))
    }
}

impl TryFrom<String> for Strategy {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Strategy> for String {
    fn from(s: Strategy) -> String {
        s.to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReplicationPlacement {
    strategy: Strategy,
    n_instances: usize,
    /// Per toot: home instance first, then the remaining holders ascending.
    replicas: Vec<Vec<u32>>,
}

impl ReplicationPlacement {
    pub fn strategy(&self) -> Strategy {
        self.strategy
    }

    pub fn n_instances(&self) -> usize {
        self.n_instances
    }

    pub fn len(&self) -> usize {
        self.replicas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.replicas.is_empty()
    }

    /// Instance indices holding toot `toot`; the first entry is its home.
    pub fn replicas(&self, toot: usize) -> &[u32] {
        &self.replicas[toot]
    }

    /// Histogram of copies per toot as ascending `(copies, toot count)`.
    pub fn copy_count_histogram(&self) -> Vec<(usize, usize)> {
        let mut h: std::collections::BTreeMap<usize, usize> = Default::default();
        for r in &self.replicas {
            *h.entry(r.len()).or_default() += 1;
        }
        h.into_iter().collect()
    }

    /// `toot_id,instance_ids` with the instance ids comma-joined, home first.
    pub fn table(&self, eco: &Ecosystem) -> CsvTable {
        let mut t = CsvTable::new(&["toot_id", "instance_ids"]);
        for (i, r) in self.replicas.iter().enumerate() {
            let ids: Vec<&str> = r
                .iter()
                .map(|&x| eco.instances()[x as usize].id.as_str())
                .collect();
            t.push(vec![eco.toots()[i].id.clone(), ids.join(",")]);
        }
        t
    }
}

fn with_home(home: usize, mut others: Vec<u32>) -> Vec<u32> {
    others.retain(|&i| i as usize != home);
    others.sort_unstable();
    others.dedup();
    others.insert(0, home as u32);
    others
}

pub fn place_none(eco: &Ecosystem) -> ReplicationPlacement {
    ReplicationPlacement {
        strategy: Strategy::None,
        n_instances: eco.instances().len(),
        replicas: (0..eco.toots().len())
            .map(|t| vec![eco.toot_home(t) as u32])
            .collect(),
    }
}

pub fn place_subscription(eco: &Ecosystem) -> ReplicationPlacement {
    let mut follower_instances: Vec<Vec<u32>> = vec![Vec::new(); eco.users().len()];
    for &(follower, followed) in eco.follows() {
        follower_instances[followed as usize].push(eco.user_instance(follower as usize) as u32);
    }
    let per_author: Vec<Vec<u32>> = follower_instances
        .into_iter()
        .enumerate()
        .map(|(u, f)| with_home(eco.user_instance(u), f))
        .collect();
    ReplicationPlacement {
        strategy: Strategy::Subscription,
        n_instances: eco.instances().len(),
        replicas: (0..eco.toots().len())
            .map(|t| per_author[eco.toot_author(t)].clone())
            .collect(),
    }
}

/// Draws `k` distinct values from `0..m` by a sparse partial Fisher-Yates
/// shuffle. The first `j` draws do not depend on `k`, so a larger `k`
/// extends the sample of a smaller one.
fn sample_prefix<R: Rng>(rng: &mut R, m: usize, k: usize) -> Vec<usize> {
    let mut swapped: HashMap<usize, usize> = HashMap::with_capacity(k);
    let mut out = Vec::with_capacity(k);
    for j in 0..k.min(m) {
        let r = rng.random_range(j..m);
        let at_r = *swapped.get(&r).unwrap_or(&r);
        let at_j = *swapped.get(&j).unwrap_or(&j);
        swapped.insert(r, at_j);
        out.push(at_r);
    }
    out
}

/// Each toot goes to its home plus `n` instances drawn uniformly without
/// replacement from the other instances, saturating at all of them.
///
/// Every toot draws from its own ChaCha stream keyed by `(seed, toot index)`,
/// so placements are reproducible and nested in `n`.
pub fn place_random(eco: &Ecosystem, n: usize, seed: u64) -> ReplicationPlacement {
    let m = eco.instances().len().saturating_sub(1);
    let replicas = (0..eco.toots().len())
        .map(|t| {
            let home = eco.toot_home(t);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(t as u64);
            let picks = sample_prefix(&mut rng, m, n)
                .into_iter()
                .map(|c| if c < home { c as u32 } else { c as u32 + 1 })
                .collect();
            with_home(home, picks)
        })
        .collect();
    ReplicationPlacement {
        strategy: Strategy::Random(n),
        n_instances: eco.instances().len(),
        replicas,
    }
}

pub fn place(eco: &Ecosystem, strategy: Strategy, seed: u64) -> ReplicationPlacement {
    match strategy {
        Strategy::None => place_none(eco),
        Strategy::Subscription => place_subscription(eco),
        Strategy::Random(n) => place_random(eco, n, seed),
    }
}

/// Fraction of toots with at least one replica outside `failed`, where
/// `failed[i]` marks instance `i` as down. Zero toots count as fully
/// available.
pub fn toot_availability(placement: &ReplicationPlacement, failed: &[bool]) -> Result<f64> {
    if failed.len() != placement.n_instances {
        return Err(Error::invalid(format!(
            "failure mask covers {} instances, placement has {}",
            failed.len(),
            placement.n_instances
        )));
    }
    if placement.is_empty() {
        return Ok(1.0);
    }
    let alive = placement
        .replicas
        .iter()
        .filter(|r| r.iter().any(|&i| !failed[i as usize]))
        .count();
    Ok(alive as f64 / placement.len() as f64)
}

/// [`toot_availability`] with failures given as instance ids.
pub fn toot_availability_by_id<S: AsRef<str>>(
    eco: &Ecosystem,
    placement: &ReplicationPlacement,
    failed: &BTreeSet<S>,
) -> Result<f64> {
    let mut mask = vec![false; eco.instances().len()];
    for id in failed {
        let i = eco
            .instance_idx(id.as_ref())
            .ok_or_else(|| Error::invalid(format!("unknown instance `{}`", id.as_ref())))?;
        mask[i] = true;
    }
    toot_availability(placement, &mask)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub n: usize,
    pub availability: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AvailabilitySweep {
    pub strategy: Strategy,
    pub target: Target,
    pub ranking: Ranking,
    pub seed: u64,
    pub points: Vec<SweepPoint>,
}

impl AvailabilitySweep {
    pub fn table(&self) -> CsvTable {
        let mut t = CsvTable::new(&["strategy", "target", "ranking", "n", "seed", "availability"]);
        self.append_rows(&mut t);
        t
    }

    /// Adds this sweep's rows to a table built by [`AvailabilitySweep::table`].
    pub fn append_rows(&self, t: &mut CsvTable) {
        for p in &self.points {
            t.push(vec![
                self.strategy.to_string(),
                self.target.to_string(),
                self.ranking.to_string(),
                p.n.to_string(),
                self.seed.to_string(),
                p.availability.to_string(),
            ]);
        }
    }
}

/// Failure units under a ranking: one instance each for `Target::Instances`,
/// all hosted instances for `Target::Ases`.
pub fn failure_units(eco: &Ecosystem, target: Target, ranking: Ranking) -> Result<Vec<Vec<usize>>> {
    match target {
        Target::Instances => Ok(rank_instances(eco, ranking)?
            .into_iter()
            .map(|i| vec![i])
            .collect()),
        Target::Ases => {
            let hosted = eco.instances_by_as();
            Ok(rank_ases(eco, ranking)?
                .into_iter()
                .map(|a| hosted[a].clone())
                .collect())
        }
        Target::Users => Err(Error::invalid("availability sweeps fail instances or ases")),
    }
}

/// Availability after failing each cumulative top-`n` prefix of `units`,
/// `n = 1..=units.len()`. Runs in time linear in the total replica count.
pub fn availability_curve(placement: &ReplicationPlacement, units: &[Vec<usize>]) -> Vec<f64> {
    let n_inst = placement.n_instances;
    let mut holders: Vec<Vec<u32>> = vec![Vec::new(); n_inst];
    let mut live: Vec<u32> = Vec::with_capacity(placement.len());
    for (t, r) in placement.replicas.iter().enumerate() {
        for &i in r {
            holders[i as usize].push(t as u32);
        }
        live.push(r.len() as u32);
    }
    let total = placement.len();
    let mut lost = 0usize;
    let mut failed = vec![false; n_inst];
    units
        .iter()
        .map(|unit| {
            for &i in unit {
                if std::mem::replace(&mut failed[i], true) {
                    continue;
                }
                for &t in &holders[i] {
                    live[t as usize] -= 1;
                    if live[t as usize] == 0 {
                        lost += 1;
                    }
                }
            }
            if total == 0 {
                1.0
            } else {
                (total - lost) as f64 / total as f64
            }
        })
        .collect()
}

/// Fails the top `n` units under `ranking` for `n = 1..=max_n` and reports
/// toot availability at each step.
pub fn availability_sweep(
    eco: &Ecosystem,
    strategy: Strategy,
    target: Target,
    ranking: Ranking,
    max_n: usize,
    seed: u64,
) -> Result<AvailabilitySweep> {
    let placement = place(eco, strategy, seed);
    sweep_placement(eco, &placement, target, ranking, max_n, seed)
}

/// [`availability_sweep`] over an already computed placement.
pub fn sweep_placement(
    eco: &Ecosystem,
    placement: &ReplicationPlacement,
    target: Target,
    ranking: Ranking,
    max_n: usize,
    seed: u64,
) -> Result<AvailabilitySweep> {
    let units = failure_units(eco, target, ranking)?;
    if max_n > units.len() {
        return Err(Error::invalid(format!(
            "max_n {max_n} exceeds the {} {target} available",
            units.len()
        )));
    }
    let points = availability_curve(placement, &units[..max_n])
        .into_iter()
        .enumerate()
        .map(|(i, availability)| SweepPoint {
            n: i + 1,
            availability,
        })
        .collect();
    Ok(AvailabilitySweep {
        strategy: placement.strategy,
        target,
        ranking,
        seed,
        points,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct HomeRemoteRow {
    pub instance_id: String,
    pub home_toots: usize,
    pub remote_toots: usize,
    /// `home / (home + remote)`; `None` when both are zero.
    pub home_fraction: Option<f64>,
}

/// Share of home toots among all toots on each instance's federated
/// timeline under subscription placement, sorted ascending by that share
/// (undefined shares last, ties by id).
pub fn home_remote_ratio(eco: &Ecosystem, placement: &ReplicationPlacement) -> Result<Vec<HomeRemoteRow>> {
    if placement.strategy != Strategy::Subscription {
        return Err(Error::invalid(
            "home/remote ratio needs a subscription placement",
        ));
    }
    let n = eco.instances().len();
    let mut home = vec![0usize; n];
    let mut remote = vec![0usize; n];
    for r in &placement.replicas {
        home[r[0] as usize] += 1;
        for &i in &r[1..] {
            remote[i as usize] += 1;
        }
    }
    let mut rows: Vec<HomeRemoteRow> = (0..n)
        .map(|i| {
            let total = home[i] + remote[i];
            HomeRemoteRow {
                instance_id: eco.instances()[i].id.clone(),
                home_toots: home[i],
                remote_toots: remote[i],
                home_fraction: (total > 0).then(|| home[i] as f64 / total as f64),
            }
        })
        .collect();
    rows.sort_by(|a, b| {
        let key = |r: &HomeRemoteRow| r.home_fraction.unwrap_or(f64::INFINITY);
        key(a)
            .total_cmp(&key(b))
            .then_with(|| a.instance_id.cmp(&b.instance_id))
    });
    Ok(rows)
}

pub fn home_remote_table(rows: &[HomeRemoteRow]) -> CsvTable {
    let mut t = CsvTable::new(&["instance_id", "home_toots", "remote_toots", "home_fraction"]);
    for r in rows {
        t.push(vec![
            r.instance_id.clone(),
            r.home_toots.to_string(),
            r.remote_toots.to_string(),
            opt_f64(r.home_fraction),
        ]);
    }
    t
}
