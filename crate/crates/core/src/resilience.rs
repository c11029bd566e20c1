//! Targeted failure experiments over the social and federation graphs.
//!
//! Three removal units are supported:
//!
//! * users, removed iteratively: each step ranks the remaining users by
//!   their current total degree (in + out) in the remaining social graph and
//!   removes the top `ceil(f * remaining)`;
//! * instances, swept over `n = 1..=max_n`, removing the top `n` under a
//!   ranking computed once on the intact ecosystem;
//! * ASes, swept the same way, each removal taking every instance the AS
//!   hosts.
//!
//! Removing an instance removes its users (and so their toots and follow
//! edges) from every later metric. Ties in every ranking are broken by
//! ascending id.

use std::cmp::Reverse;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::ecosystem::Ecosystem;
use crate::error::{Error, Result};
use crate::graph::{induce_federation_graph, WeakComponents};
use crate::report::CsvTable;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    Users,
    Instances,
    Ases,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ranking {
    /// Total (in + out) social degree; users only.
    Degree,
    UserCount,
    TootCount,
    /// Distinct federation neighbours; instances only.
    ConnectionCount,
    /// Hosted instances; ASes only.
    InstanceCount,
}

impl Target {
    pub fn as_str(self) -> &'static str {
        match self {
            Target::Users => "users",
            Target::Instances => "instances",
            Target::Ases => "ases",
        }
    }

    pub fn allows(self, ranking: Ranking) -> bool {
        use Ranking::*;
        match self {
            Target::Users => ranking == Degree,
            Target::Instances => matches!(ranking, UserCount | TootCount | ConnectionCount),
            Target::Ases => matches!(ranking, InstanceCount | UserCount | TootCount),
        }
    }

    fn check(self, ranking: Ranking) -> Result<()> {
        if self.allows(ranking) {
            Ok(())
        } else {
            Err(Error::invalid(format!("ranking `{ranking}` is not valid for {self}")))
        }
    }
}

impl Ranking {
    pub fn as_str(self) -> &'static str {
        match self {
            Ranking::Degree => "degree",
            Ranking::UserCount => "user_count",
            Ranking::TootCount => "toot_count",
            Ranking::ConnectionCount => "connection_count",
            Ranking::InstanceCount => "instance_count",
        }
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl fmt::Display for Ranking {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Target {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "users" => Ok(Target::Users),
            "instances" => Ok(Target::Instances),
            "ases" => Ok(Target::Ases),
            other => Err(Error::invalid(format!("unknown target `{other}`"))),
        }
    }
}

impl FromStr for Ranking {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "degree" => Ok(Ranking::Degree),
            "user_count" => Ok(Ranking::UserCount),
            "toot_count" => Ok(Ranking::TootCount),
            "connection_count" => Ok(Ranking::ConnectionCount),
            "instance_count" => Ok(Ranking::InstanceCount),
            other => Err(Error::invalid(format!("unknown ranking `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RemovalMode {
    IterativeFraction { fraction: f64, steps: usize },
    TopNSweep { max_n: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RemovalPlan {
    pub target: Target,
    pub ranking: Ranking,
    pub mode: RemovalMode,
}

impl RemovalPlan {
    pub fn validate(&self, eco: &Ecosystem) -> Result<()> {
        self.target.check(self.ranking)?;
        match (self.target, self.mode) {
            (Target::Users, RemovalMode::IterativeFraction { fraction, steps }) => {
                check_fraction(fraction)?;
                if steps == 0 {
                    return Err(Error::invalid("steps must be at least 1"));
                }
                Ok(())
            }
            (Target::Instances, RemovalMode::TopNSweep { max_n }) => {
                check_max_n(max_n, eco.instances().len(), "instances")
            }
            (Target::Ases, RemovalMode::TopNSweep { max_n }) => {
                check_max_n(max_n, eco.ases().len(), "ASes")
            }
            (t, _) => Err(Error::invalid(format!("unsupported removal mode for {t}"))),
        }
    }

    pub fn run(&self, eco: &Ecosystem) -> Result<RemovalTrace> {
        self.validate(eco)?;
        match self.mode {
            RemovalMode::IterativeFraction { fraction, steps } => {
                remove_users_iterative(eco, fraction, steps)
            }
            RemovalMode::TopNSweep { max_n } => match self.target {
                Target::Instances => remove_instances_top_n(eco, self.ranking, max_n),
                _ => remove_ases_top_n(eco, self.ranking, max_n),
            },
        }
    }
}

fn check_fraction(f: f64) -> Result<()> {
    if f > 0.0 && f <= 1.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("fraction {f} outside (0, 1]")))
    }
}

fn check_max_n(max_n: usize, population: usize, what: &str) -> Result<()> {
    if max_n > population {
        return Err(Error::invalid(format!(
            "max_n {max_n} exceeds the {population} {what} available"
        )));
    }
    Ok(())
}

/// Connectivity of what is left after a removal.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Metrics {
    pub lcc_users: usize,
    pub social_components: usize,
    /// LCC of the federation graph induced from the surviving follows.
    pub lcc_instances: usize,
    pub federation_components: usize,
    pub remaining_users: usize,
    pub remaining_instances: usize,
}

/// Measures the ecosystem with the given users and instances removed. Users
/// hosted on a removed instance count as removed.
pub fn measure(eco: &Ecosystem, removed_users: &[bool], removed_instances: &[bool]) -> Metrics {
    let user_alive: Vec<bool> = (0..eco.users().len())
        .map(|u| !removed_users[u] && !removed_instances[eco.user_instance(u)])
        .collect();
    let instance_alive: Vec<bool> = removed_instances.iter().map(|&r| !r).collect();
    let social = WeakComponents::compute(
        eco.users().len(),
        eco.follows().iter().copied(),
        Some(&user_alive),
    );
    let cross_instance = eco.follows().iter().filter_map(|&(a, b)| {
        if !(user_alive[a as usize] && user_alive[b as usize]) {
            return None;
        }
        let (ia, ib) = (eco.user_instance(a as usize), eco.user_instance(b as usize));
        (ia != ib).then_some((ia as u32, ib as u32))
    });
    let federation =
        WeakComponents::compute(eco.instances().len(), cross_instance, Some(&instance_alive));
    Metrics {
        lcc_users: social.lcc_size,
        social_components: social.component_count,
        lcc_instances: federation.lcc_size,
        federation_components: federation.component_count,
        remaining_users: user_alive.iter().filter(|&&a| a).count(),
        remaining_instances: instance_alive.iter().filter(|&&a| a).count(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepRecord {
    /// 0 for the intact baseline.
    pub step: usize,
    /// Units removed at this step.
    pub removed_ids: Vec<String>,
    /// Cumulative units removed so far.
    pub n_removed: usize,
    pub lcc_size_users: usize,
    pub lcc_size_instances: usize,
    /// Social components for user removal, federation components otherwise.
    pub component_count: usize,
    /// Remaining users for user removal, remaining instances otherwise.
    pub remaining_node_count: usize,
}

impl StepRecord {
    fn from_metrics(step: usize, removed_ids: Vec<String>, n_removed: usize, target: Target, m: Metrics) -> Self {
        let (component_count, remaining_node_count) = match target {
            Target::Users => (m.social_components, m.remaining_users),
            _ => (m.federation_components, m.remaining_instances),
        };
        Self {
            step,
            removed_ids,
            n_removed,
            lcc_size_users: m.lcc_users,
            lcc_size_instances: m.lcc_instances,
            component_count,
            remaining_node_count,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RemovalTrace {
    pub target: Target,
    pub ranking: Ranking,
    pub baseline: StepRecord,
    pub steps: Vec<StepRecord>,
}

impl RemovalTrace {
    /// One row per step, baseline first as step 0.
    pub fn table(&self) -> CsvTable {
        let mut t = CsvTable::new(&[
            "step",
            "n_removed",
            "target",
            "ranking",
            "lcc_users",
            "lcc_instances",
            "components",
            "remaining_nodes",
        ]);
        for r in std::iter::once(&self.baseline).chain(&self.steps) {
            t.push(vec![
                r.step.to_string(),
                r.n_removed.to_string(),
                self.target.to_string(),
                self.ranking.to_string(),
                r.lcc_size_users.to_string(),
                r.lcc_size_instances.to_string(),
                r.component_count.to_string(),
                r.remaining_node_count.to_string(),
            ]);
        }
        t
    }
}

/// Orders indices by descending score, then ascending id.
fn rank_by<'a>(scores: &[usize], id: impl Fn(usize) -> &'a str) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].cmp(&scores[a]).then_with(|| id(a).cmp(id(b))));
    order
}

/// Instance indices, most important first.
pub fn rank_instances(eco: &Ecosystem, ranking: Ranking) -> Result<Vec<usize>> {
    Target::Instances.check(ranking)?;
    let scores = match ranking {
        Ranking::UserCount => eco.users_per_instance(),
        Ranking::TootCount => eco.toots_per_instance(),
        _ => induce_federation_graph(eco).connection_counts(),
    };
    Ok(rank_by(&scores, |i| eco.instances()[i].id.as_str()))
}

/// AS indices, most important first.
pub fn rank_ases(eco: &Ecosystem, ranking: Ranking) -> Result<Vec<usize>> {
    Target::Ases.check(ranking)?;
    let per_instance = match ranking {
        Ranking::UserCount => eco.users_per_instance(),
        Ranking::TootCount => eco.toots_per_instance(),
        _ => vec![1; eco.instances().len()],
    };
    let mut scores = vec![0usize; eco.ases().len()];
    for (i, v) in per_instance.into_iter().enumerate() {
        scores[eco.instance_as(i)] += v;
    }
    Ok(rank_by(&scores, |a| eco.ases()[a].id.as_str()))
}

/// Iteratively removes the top `fraction` of remaining users by current
/// total degree. Stops early once no users remain, so an empty ecosystem
/// yields a trace without steps.
pub fn remove_users_iterative(eco: &Ecosystem, fraction: f64, steps: usize) -> Result<RemovalTrace> {
    check_fraction(fraction)?;
    let n = eco.users().len();
    let no_instances = vec![false; eco.instances().len()];
    let mut removed = vec![false; n];
    let baseline = StepRecord::from_metrics(0, Vec::new(), 0, Target::Users, measure(eco, &removed, &no_instances));
    let mut trace = RemovalTrace {
        target: Target::Users,
        ranking: Ranking::Degree,
        baseline,
        steps: Vec::new(),
    };
    let mut n_removed = 0;
    for step in 1..=steps {
        let remaining = n - n_removed;
        if remaining == 0 {
            break;
        }
        let k = crate::stats::top_count(fraction, remaining).max(1);
        let mut degree = vec![0usize; n];
        for &(a, b) in eco.follows() {
            if !removed[a as usize] && !removed[b as usize] {
                degree[a as usize] += 1;
                degree[b as usize] += 1;
            }
        }
        let mut candidates: Vec<usize> = (0..n).filter(|&u| !removed[u]).collect();
        candidates.sort_by_key(|&u| (Reverse(degree[u]), eco.users()[u].id.as_str()));
        let victims = &candidates[..k];
        for &u in victims {
            removed[u] = true;
        }
        n_removed += k;
        let ids = victims.iter().map(|&u| eco.users()[u].id.clone()).collect();
        trace.steps.push(StepRecord::from_metrics(
            step,
            ids,
            n_removed,
            Target::Users,
            measure(eco, &removed, &no_instances),
        ));
    }
    Ok(trace)
}

fn sweep(
    eco: &Ecosystem,
    target: Target,
    ranking: Ranking,
    units: &[Vec<usize>],
    unit_ids: &[String],
) -> RemovalTrace {
    let no_users = vec![false; eco.users().len()];
    let mut removed_instances = vec![false; eco.instances().len()];
    let baseline = StepRecord::from_metrics(0, Vec::new(), 0, target, measure(eco, &no_users, &removed_instances));
    let mut steps = Vec::with_capacity(units.len());
    for (n, (unit, id)) in units.iter().zip(unit_ids).enumerate() {
        for &i in unit {
            removed_instances[i] = true;
        }
        steps.push(StepRecord::from_metrics(
            n + 1,
            vec![id.clone()],
            n + 1,
            target,
            measure(eco, &no_users, &removed_instances),
        ));
    }
    RemovalTrace {
        target,
        ranking,
        baseline,
        steps,
    }
}

/// For `n = 1..=max_n`, removes the top `n` instances under `ranking`.
pub fn remove_instances_top_n(eco: &Ecosystem, ranking: Ranking, max_n: usize) -> Result<RemovalTrace> {
    check_max_n(max_n, eco.instances().len(), "instances")?;
    let order = rank_instances(eco, ranking)?;
    let units: Vec<Vec<usize>> = order[..max_n].iter().map(|&i| vec![i]).collect();
    let ids: Vec<String> = order[..max_n]
        .iter()
        .map(|&i| eco.instances()[i].id.clone())
        .collect();
    Ok(sweep(eco, Target::Instances, ranking, &units, &ids))
}

/// For `n = 1..=max_n`, removes the top `n` ASes under `ranking` together
/// with every instance they host.
pub fn remove_ases_top_n(eco: &Ecosystem, ranking: Ranking, max_n: usize) -> Result<RemovalTrace> {
    check_max_n(max_n, eco.ases().len(), "ASes")?;
    let order = rank_ases(eco, ranking)?;
    let hosted = eco.instances_by_as();
    let units: Vec<Vec<usize>> = order[..max_n].iter().map(|&a| hosted[a].clone()).collect();
    let ids: Vec<String> = order[..max_n].iter().map(|&a| eco.ases()[a].id.clone()).collect();
    Ok(sweep(eco, Target::Ases, ranking, &units, &ids))
}
