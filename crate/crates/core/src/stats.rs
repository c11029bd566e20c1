//! Descriptive statistics over an ecosystem: how users and toots concentrate
//! on instances, open vs closed registration, activity levels, hosting
//! distribution across ASes and countries, and same-country federation.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::ecosystem::Ecosystem;
use crate::error::{Error, Result};
use crate::graph::{DirectedGraph, FederationGraph};
use crate::report::{opt_f64, CsvTable};

/// Population fractions reported by [`concentration`].
pub const DEFAULT_FRACTIONS: [f64; 7] = [0.01, 0.05, 0.10, 0.20, 0.25, 0.50, 1.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Weight {
    Users,
    Toots,
}

impl Weight {
    pub fn as_str(self) -> &'static str {
        match self {
            Weight::Users => "users",
            Weight::Toots => "toots",
        }
    }
}

/// Number of members in the top `p` fraction of `n`: `ceil(p * n)`.
///
/// The product is nudged down by a tiny epsilon so that values such as
/// `0.05 * 100` that land a rounding error above an integer are not bumped
/// to the next count.
pub fn top_count(p: f64, n: usize) -> usize {
    ((p * n as f64 - 1e-9).ceil().max(0.0) as usize).min(n)
}

/// Share of the total held by the `ceil(p * n)` largest values.
/// `sorted_desc` must be sorted descending. `None` when the total is zero.
pub fn top_share(sorted_desc: &[usize], p: f64) -> Option<f64> {
    let total: usize = sorted_desc.iter().sum();
    if total == 0 {
        return None;
    }
    let k = top_count(p, sorted_desc.len());
    let top: usize = sorted_desc[..k].iter().sum();
    Some(top as f64 / total as f64)
}

/// Gini coefficient of a non-negative sample; `None` for an empty sample or
/// a zero total.
pub fn gini(values: &[usize]) -> Option<f64> {
    let n = values.len();
    let total: usize = values.iter().sum();
    if n == 0 || total == 0 {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_unstable();
    let weighted: f64 = sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| (i + 1) as f64 * x as f64)
        .sum();
    let n = n as f64;
    Some((2.0 * weighted / (n * total as f64) - (n + 1.0) / n).max(0.0))
}

/// Empirical CDF as ascending `(value, P(X <= value))` pairs.
pub fn empirical_cdf(values: &[f64]) -> Vec<(f64, f64)> {
    let mut sorted: Vec<f64> = values.iter().copied().filter(|v| !v.is_nan()).collect();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut out: Vec<(f64, f64)> = Vec::new();
    for (i, v) in sorted.into_iter().enumerate() {
        let p = (i + 1) as f64 / n;
        match out.last_mut() {
            Some(last) if last.0 == v => last.1 = p,
            _ => out.push((v, p)),
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConcentrationReport {
    pub weight: Weight,
    pub total: usize,
    /// `(p, share)` for every fraction in [`DEFAULT_FRACTIONS`].
    pub shares: Vec<(f64, Option<f64>)>,
    pub gini: Option<f64>,
    sorted: Vec<usize>,
}

impl ConcentrationReport {
    /// Share held by the top `p` fraction of instances, `p` in `(0, 1]`.
    pub fn top_share(&self, p: f64) -> Option<f64> {
        top_share(&self.sorted, p)
    }

    pub fn table(&self) -> CsvTable {
        let mut t = CsvTable::new(&["weight", "top_fraction", "top_count", "share"]);
        for &(p, share) in &self.shares {
            t.push(vec![
                self.weight.as_str().into(),
                p.to_string(),
                top_count(p, self.sorted.len()).to_string(),
                opt_f64(share),
            ]);
        }
        t
    }
}

/// Concentration of users or toots on instances. Instances are ranked
/// descending by weight; the top group for fraction `p` is the first
/// `ceil(p * N)` instances.
pub fn concentration(eco: &Ecosystem, weight: Weight) -> Result<ConcentrationReport> {
    if eco.instances().is_empty() {
        return Err(Error::invalid("concentration needs at least one instance"));
    }
    let mut sorted = match weight {
        Weight::Users => eco.users_per_instance(),
        Weight::Toots => eco.toots_per_instance(),
    };
    sorted.sort_unstable_by(|a, b| b.cmp(a));
    let shares = DEFAULT_FRACTIONS
        .iter()
        .map(|&p| (p, top_share(&sorted, p)))
        .collect();
    Ok(ConcentrationReport {
        weight,
        total: sorted.iter().sum(),
        shares,
        gini: gini(&sorted),
        sorted,
    })
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct GroupTotals {
    pub instance_count: usize,
    pub user_count: usize,
    pub toot_count: usize,
    /// `None` when the group has no users.
    pub mean_toots_per_user: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OpenClosedSplit {
    pub open: GroupTotals,
    pub closed: GroupTotals,
}

impl OpenClosedSplit {
    pub fn table(&self) -> CsvTable {
        let mut t = CsvTable::new(&[
            "registration",
            "instance_count",
            "user_count",
            "toot_count",
            "mean_toots_per_user",
        ]);
        for (name, g) in [("open", &self.open), ("closed", &self.closed)] {
            t.push(vec![
                name.into(),
                g.instance_count.to_string(),
                g.user_count.to_string(),
                g.toot_count.to_string(),
                opt_f64(g.mean_toots_per_user),
            ]);
        }
        t
    }
}

pub fn open_closed_split(eco: &Ecosystem) -> OpenClosedSplit {
    let users = eco.users_per_instance();
    let toots = eco.toots_per_instance();
    let mut open = GroupTotals::default();
    let mut closed = GroupTotals::default();
    for (i, inst) in eco.instances().iter().enumerate() {
        let g = if inst.open_registration {
            &mut open
        } else {
            &mut closed
        };
        g.instance_count += 1;
        g.user_count += users[i];
        g.toot_count += toots[i];
    }
    for g in [&mut open, &mut closed] {
        g.mean_toots_per_user =
            (g.user_count > 0).then(|| g.toot_count as f64 / g.user_count as f64);
    }
    OpenClosedSplit { open, closed }
}

/// Activity level per instance: the maximum weekly fraction of users that
/// logged in. Empty series yield `None`.
pub fn activity_level(
    login_series: &BTreeMap<String, Vec<f64>>,
) -> Result<BTreeMap<String, Option<f64>>> {
    let mut out = BTreeMap::new();
    for (instance, weeks) in login_series {
        if let Some(bad) = weeks.iter().find(|f| !(0.0..=1.0).contains(*f)) {
            return Err(Error::invalid(format!(
                "activity fraction {bad} for `{instance}` outside [0, 1]"
            )));
        }
        out.insert(
            instance.clone(),
            weeks.iter().copied().reduce(f64::max),
        );
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct HostingRow {
    pub key: String,
    pub instance_count: usize,
    pub user_count: usize,
    pub toot_count: usize,
    pub instance_share: Option<f64>,
    pub user_share: Option<f64>,
    pub toot_share: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HostingDistribution {
    pub by_as: Vec<HostingRow>,
    pub by_country: Vec<HostingRow>,
}

fn hosting_table(rows: &[HostingRow], key: &'static str) -> CsvTable {
    let mut t = CsvTable::new(&[
        key,
        "instance_count",
        "user_count",
        "toot_count",
        "instance_share",
        "user_share",
        "toot_share",
    ]);
    for r in rows {
        t.push(vec![
            r.key.clone(),
            r.instance_count.to_string(),
            r.user_count.to_string(),
            r.toot_count.to_string(),
            opt_f64(r.instance_share),
            opt_f64(r.user_share),
            opt_f64(r.toot_share),
        ]);
    }
    t
}

impl HostingDistribution {
    pub fn as_table(&self) -> CsvTable {
        hosting_table(&self.by_as, "as_id")
    }

    pub fn country_table(&self) -> CsvTable {
        hosting_table(&self.by_country, "country")
    }
}

fn share(part: usize, total: usize) -> Option<f64> {
    (total > 0).then(|| part as f64 / total as f64)
}

fn hosting_rows(groups: BTreeMap<String, [usize; 3]>) -> Vec<HostingRow> {
    let totals = groups.values().fold([0usize; 3], |acc, g| {
        [acc[0] + g[0], acc[1] + g[1], acc[2] + g[2]]
    });
    let mut rows: Vec<HostingRow> = groups
        .into_iter()
        .map(|(key, [i, u, t])| HostingRow {
            key,
            instance_count: i,
            user_count: u,
            toot_count: t,
            instance_share: share(i, totals[0]),
            user_share: share(u, totals[1]),
            toot_share: share(t, totals[2]),
        })
        .collect();
    // BTreeMap order already gives ascending keys for equal counts.
    rows.sort_by(|a, b| b.instance_count.cmp(&a.instance_count));
    rows
}

/// Instance, user and toot totals per AS and per country, descending by
/// instance count.
pub fn hosting_distribution(eco: &Ecosystem) -> HostingDistribution {
    let users = eco.users_per_instance();
    let toots = eco.toots_per_instance();
    let mut by_as: BTreeMap<String, [usize; 3]> = eco
        .ases()
        .iter()
        .map(|a| (a.id.clone(), [0; 3]))
        .collect();
    let mut by_country: BTreeMap<String, [usize; 3]> = BTreeMap::new();
    for (i, inst) in eco.instances().iter().enumerate() {
        for g in [
            by_as.get_mut(&inst.as_id).expect("resolved AS"),
            by_country.entry(inst.country.clone()).or_default(),
        ] {
            g[0] += 1;
            g[1] += users[i];
            g[2] += toots[i];
        }
    }
    HostingDistribution {
        by_as: hosting_rows(by_as),
        by_country: hosting_rows(by_country),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HomophilyReport {
    /// Long-form `(src_country, dst_country, fraction)`, rows normalised by
    /// the source country's outgoing edge count.
    pub matrix: Vec<(String, String, f64)>,
    /// Fraction of all federation edges joining same-country instances.
    pub same_country_fraction: Option<f64>,
}

impl HomophilyReport {
    pub fn table(&self) -> CsvTable {
        let mut t = CsvTable::new(&["src_country", "dst_country", "fraction"]);
        for (s, d, f) in &self.matrix {
            t.push(vec![s.clone(), d.clone(), f.to_string()]);
        }
        t
    }
}

pub fn country_homophily(eco: &Ecosystem, fed: &FederationGraph) -> HomophilyReport {
    let country = |i: u32| eco.instances()[i as usize].country.as_str();
    let mut pairs: BTreeMap<(&str, &str), usize> = BTreeMap::new();
    let mut out_totals: BTreeMap<&str, usize> = BTreeMap::new();
    let mut same = 0usize;
    for &(a, b) in fed.edges() {
        let (ca, cb) = (country(a), country(b));
        *pairs.entry((ca, cb)).or_default() += 1;
        *out_totals.entry(ca).or_default() += 1;
        if ca == cb {
            same += 1;
        }
    }
    let matrix = pairs
        .into_iter()
        .map(|((s, d), c)| (s.to_string(), d.to_string(), c as f64 / out_totals[s] as f64))
        .collect();
    HomophilyReport {
        matrix,
        same_country_fraction: share(same, fed.edges().len()),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CategoryRow {
    pub category: Option<String>,
    pub instance_count: usize,
    pub user_count: usize,
    pub toot_count: usize,
}

/// Plain group-by over the free-form instance category, descending by
/// instance count. Uncategorised instances group under `None`.
pub fn category_breakdown(eco: &Ecosystem) -> Vec<CategoryRow> {
    let users = eco.users_per_instance();
    let toots = eco.toots_per_instance();
    let mut groups: BTreeMap<Option<String>, [usize; 3]> = BTreeMap::new();
    for (i, inst) in eco.instances().iter().enumerate() {
        let g = groups.entry(inst.category.clone()).or_default();
        g[0] += 1;
        g[1] += users[i];
        g[2] += toots[i];
    }
    let mut rows: Vec<CategoryRow> = groups
        .into_iter()
        .map(|(category, [i, u, t])| CategoryRow {
            category,
            instance_count: i,
            user_count: u,
            toot_count: t,
        })
        .collect();
    rows.sort_by(|a, b| b.instance_count.cmp(&a.instance_count));
    rows
}

pub fn category_table(rows: &[CategoryRow]) -> CsvTable {
    let mut t = CsvTable::new(&["category", "instance_count", "user_count", "toot_count"]);
    for r in rows {
        t.push(vec![
            r.category.clone().unwrap_or_default(),
            r.instance_count.to_string(),
            r.user_count.to_string(),
            r.toot_count.to_string(),
        ]);
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::induce_federation_graph;
    use crate::test_fixtures::{sized_chain, three_instance_chain};
    use crate::Instance;

    fn eco_with_sizes(sizes: &[usize]) -> Ecosystem {
        let mut b = Ecosystem::builder();
        b.add_as("a", "US").unwrap();
        for (i, &s) in sizes.iter().enumerate() {
            let inst = format!("i{i:03}");
            b.add_instance(Instance::new(&inst, "a", "US")).unwrap();
            for u in 0..s {
                b.add_user(&format!("u{u}@{inst}"), &inst).unwrap();
            }
        }
        b.build()
    }

    #[test]
    fn top_count_uses_inclusive_ceiling() {
        assert_eq!(top_count(0.2, 5), 1);
        assert_eq!(top_count(0.05, 100), 5);
        assert_eq!(top_count(0.05, 101), 6);
        assert_eq!(top_count(0.05, 1), 1);
        assert_eq!(top_count(1.0, 7), 7);
    }

    #[test]
    fn concentration_examples() {
        let r = concentration(&eco_with_sizes(&[100, 50, 25, 15, 10]), Weight::Users).unwrap();
        assert_eq!(r.top_share(0.2), Some(0.5));
        assert_eq!(r.top_share(1.0), Some(1.0));

        let r = concentration(&eco_with_sizes(&[4; 20]), Weight::Users).unwrap();
        assert_eq!(r.top_share(0.05), Some(0.05));
        assert_eq!(r.top_share(0.10), Some(0.10));
        assert_eq!(r.top_share(0.12), Some(0.15));
        assert_eq!(r.gini, Some(0.0));

        let r = concentration(&eco_with_sizes(&[3]), Weight::Users).unwrap();
        assert_eq!(r.top_share(0.05), Some(1.0));
    }

    #[test]
    fn zero_weight_gives_null_shares() {
        let r = concentration(&eco_with_sizes(&[2, 1]), Weight::Toots).unwrap();
        assert!(r.shares.iter().all(|(_, s)| s.is_none()));
        assert_eq!(r.gini, None);
        assert!(concentration(&Ecosystem::default(), Weight::Users).is_err());
    }

    #[test]
    fn gini_of_maximal_inequality() {
        // one holder out of n: (n - 1) / n
        assert!((gini(&[0, 0, 0, 10]).unwrap() - 0.75).abs() < 1e-12);
    }

    #[test]
    fn open_closed_example() {
        let mut b = Ecosystem::builder();
        b.add_as("a", "US").unwrap();
        b.add_instance(Instance::new("i1", "a", "US")).unwrap();
        let mut closed = Instance::new("i2", "a", "US");
        closed.open_registration = false;
        b.add_instance(closed).unwrap();
        b.add_user("u1", "i1").unwrap();
        b.add_user("u2", "i1").unwrap();
        b.add_user("u3", "i2").unwrap();
        for t in 0..10 {
            b.add_toot(&format!("a{t}"), if t % 2 == 0 { "u1" } else { "u2" }, 0)
                .unwrap();
        }
        for t in 0..8 {
            b.add_toot(&format!("b{t}"), "u3", 0).unwrap();
        }
        let s = open_closed_split(&b.build());
        assert_eq!(s.open.instance_count, 1);
        assert_eq!((s.open.user_count, s.open.toot_count), (2, 10));
        assert_eq!(s.open.mean_toots_per_user, Some(5.0));
        assert_eq!(s.closed.mean_toots_per_user, Some(8.0));
    }

    #[test]
    fn all_open_leaves_closed_group_empty() {
        let s = open_closed_split(&three_instance_chain());
        assert_eq!(s.closed, GroupTotals::default());
        assert_eq!(s.open.instance_count, 3);
    }

    #[test]
    fn activity_level_takes_weekly_maximum() {
        let mut m = BTreeMap::new();
        m.insert("a".to_string(), vec![0.2, 0.7, 0.5]);
        m.insert("b".to_string(), vec![0.4, 0.4]);
        m.insert("c".to_string(), vec![]);
        let out = activity_level(&m).unwrap();
        assert_eq!(out["a"], Some(0.7));
        assert_eq!(out["b"], Some(0.4));
        assert_eq!(out["c"], None);
        m.insert("d".to_string(), vec![1.5]);
        assert!(activity_level(&m).is_err());
    }

    #[test]
    fn hosting_example() {
        let h = hosting_distribution(&sized_chain());
        assert_eq!(h.by_as[0].key, "a1");
        assert_eq!(h.by_as[0].instance_count, 2);
        assert_eq!(h.by_as[0].user_share, Some(5.0 / 6.0));
        assert_eq!(h.by_as[1].user_share, Some(1.0 / 6.0));
        assert_eq!(h.by_country[0].key, "JP");

        let single = eco_with_sizes(&[2, 3]);
        let h = hosting_distribution(&single);
        assert_eq!(h.by_as.len(), 1);
        assert_eq!(h.by_as[0].instance_share, Some(1.0));
        assert_eq!(h.by_as[0].user_share, Some(1.0));
        assert_eq!(h.by_as[0].toot_share, None);
    }

    #[test]
    fn homophily_example() {
        // i1(JP) -> i2(JP), i2(JP) -> i3(US)
        let eco = three_instance_chain();
        let r = country_homophily(&eco, &induce_federation_graph(&eco));
        assert_eq!(r.same_country_fraction, Some(0.5));
        assert_eq!(
            r.matrix,
            vec![
                ("JP".to_string(), "JP".to_string(), 0.5),
                ("JP".to_string(), "US".to_string(), 0.5)
            ]
        );
    }

    #[test]
    fn homophily_edge_cases() {
        let eco = eco_with_sizes(&[1, 1]);
        let r = country_homophily(&eco, &induce_federation_graph(&eco));
        assert!(r.matrix.is_empty());
        assert_eq!(r.same_country_fraction, None);

        let mut b = Ecosystem::builder();
        b.add_as("a", "US").unwrap();
        b.add_instance(Instance::new("x", "a", "US")).unwrap();
        b.add_instance(Instance::new("y", "a", "FR")).unwrap();
        b.add_user("u", "x").unwrap();
        b.add_user("v", "y").unwrap();
        b.add_follow("u", "v").unwrap();
        b.add_follow("v", "u").unwrap();
        let eco = b.build();
        let r = country_homophily(&eco, &induce_federation_graph(&eco));
        assert_eq!(r.same_country_fraction, Some(0.0));
    }

    #[test]
    fn ecdf_merges_ties() {
        assert_eq!(
            empirical_cdf(&[0.5, 0.1, 0.5, 1.0]),
            vec![(0.1, 0.25), (0.5, 0.75), (1.0, 1.0)]
        );
    }

    #[test]
    fn categories_group_by_free_text() {
        let mut b = Ecosystem::builder();
        b.add_as("a", "US").unwrap();
        for (id, cat) in [("x", Some("tech")), ("y", Some("tech")), ("z", None)] {
            let mut i = Instance::new(id, "a", "US");
            i.category = cat.map(str::to_string);
            b.add_instance(i).unwrap();
        }
        let rows = category_breakdown(&b.build());
        assert_eq!(rows[0].category.as_deref(), Some("tech"));
        assert_eq!(rows[0].instance_count, 2);
        assert_eq!(rows[1].category, None);
    }
}
