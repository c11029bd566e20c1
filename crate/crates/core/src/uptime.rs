//! Analytics over per-instance availability timelines: downtime fractions,
//! bounded outages, AS-wide simultaneous outages and the users and toots an
//! outage makes unreachable.
//!
//! Probes are `Up`, `Down` or `Unknown`. Unknown probes are monitor gaps and
//! never count as either state. An outage is a maximal run of `Down` probes
//! that is immediately followed by an `Up` probe, so a run that reaches the
//! end of the timeline or runs into a gap is not reported.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::ecosystem::{canonical_id, Ecosystem};
use crate::error::{EcosystemError, Error, Result};
use crate::report::{opt_f64, CsvTable};
use crate::stats::empirical_cdf;

pub const DEFAULT_PROBE_INTERVAL: i64 = 300;
pub const DEFAULT_AS_OUTAGE_MIN_INSTANCES: usize = 8;
pub const SECONDS_PER_DAY: i64 = 86_400;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeStatus {
    Up,
    Down,
    Unknown,
}

/// Equal-length probe series for a set of instances, sampled every
/// `probe_interval` seconds from `start`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AvailabilityTimeline {
    start: i64,
    probe_interval: i64,
    instance_ids: Vec<String>,
    series: Vec<Vec<ProbeStatus>>,
    index: HashMap<String, usize>,
}

impl AvailabilityTimeline {
    /// Builds a timeline from `(instance_id, probes)` pairs. Ids are
    /// canonicalised and must be unique; every series must have the same
    /// length.
    pub fn new<I, S>(start: i64, probe_interval: i64, series: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, Vec<ProbeStatus>)>,
        S: AsRef<str>,
    {
        if probe_interval <= 0 {
            return Err(Error::invalid(format!(
                "probe interval must be positive, got {probe_interval}"
            )));
        }
        let mut tl = Self {
            start,
            probe_interval,
            instance_ids: Vec::new(),
            series: Vec::new(),
            index: HashMap::new(),
        };
        for (id, probes) in series {
            let id = canonical_id(id.as_ref());
            if id.is_empty() {
                return Err(EcosystemError::EmptyId { kind: "instance" }.into());
            }
            if tl.index.contains_key(&id) {
                return Err(EcosystemError::DuplicateId {
                    kind: "instance",
                    id,
                }
                .into());
            }
            if let Some(first) = tl.series.first() {
                if first.len() != probes.len() {
                    return Err(Error::invalid(format!(
                        "series for `{id}` has {} probes, expected {}",
                        probes.len(),
                        first.len()
                    )));
                }
            }
            tl.index.insert(id.clone(), tl.instance_ids.len());
            tl.instance_ids.push(id);
            tl.series.push(probes);
        }
        Ok(tl)
    }

    pub fn start(&self) -> i64 {
        self.start
    }

    pub fn probe_interval(&self) -> i64 {
        self.probe_interval
    }

    pub fn probe_count(&self) -> usize {
        self.series.first().map_or(0, Vec::len)
    }

    pub fn instance_ids(&self) -> &[String] {
        &self.instance_ids
    }

    pub fn instance_index(&self, id: &str) -> Option<usize> {
        self.index.get(&canonical_id(id)).copied()
    }

    pub fn series(&self, id: &str) -> Option<&[ProbeStatus]> {
        self.instance_index(id).map(|i| self.series[i].as_slice())
    }

    pub fn series_at(&self, i: usize) -> &[ProbeStatus] {
        &self.series[i]
    }

    /// Timestamp of probe `k`.
    pub fn timestamp(&self, k: usize) -> i64 {
        self.start + k as i64 * self.probe_interval
    }

    fn require(&self, id: &str) -> Result<usize> {
        self.instance_index(id).ok_or_else(|| {
            EcosystemError::UnknownReference {
                kind: "instance",
                id: canonical_id(id),
            }
            .into()
        })
    }
}

/// A bounded outage: down on `[start_index, end_index)` and up at
/// `end_index`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outage {
    pub instance_id: String,
    pub start_index: usize,
    pub end_index: usize,
}

impl Outage {
    pub fn duration_probes(&self) -> usize {
        self.end_index - self.start_index
    }

    pub fn duration_days(&self, probe_interval: i64) -> f64 {
        (self.duration_probes() as i64 * probe_interval) as f64 / SECONDS_PER_DAY as f64
    }
}

/// Down probes over known probes. `None` when every probe is unknown.
pub fn downtime_fraction(tl: &AvailabilityTimeline, instance_id: &str) -> Result<Option<f64>> {
    let i = tl.require(instance_id)?;
    Ok(fraction_down(tl.series_at(i)))
}

fn fraction_down(probes: &[ProbeStatus]) -> Option<f64> {
    let (mut down, mut known) = (0usize, 0usize);
    for p in probes {
        match p {
            ProbeStatus::Up => known += 1,
            ProbeStatus::Down => {
                down += 1;
                known += 1;
            }
            ProbeStatus::Unknown => {}
        }
    }
    (known > 0).then(|| down as f64 / known as f64)
}

/// Maximal runs where `is_down(k)` holds, closed by a probe where
/// `is_up(k)` holds.
fn bounded_runs(
    len: usize,
    is_down: impl Fn(usize) -> bool,
    is_up: impl Fn(usize) -> bool,
) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut k = 0;
    while k < len {
        if !is_down(k) {
            k += 1;
            continue;
        }
        let start = k;
        while k < len && is_down(k) {
            k += 1;
        }
        if k < len && is_up(k) {
            out.push((start, k));
        }
    }
    out
}

pub fn extract_outages(tl: &AvailabilityTimeline, instance_id: &str) -> Result<Vec<Outage>> {
    let i = tl.require(instance_id)?;
    Ok(outages_at(tl, i))
}

fn outages_at(tl: &AvailabilityTimeline, i: usize) -> Vec<Outage> {
    let s = tl.series_at(i);
    bounded_runs(
        s.len(),
        |k| s[k] == ProbeStatus::Down,
        |k| s[k] == ProbeStatus::Up,
    )
    .into_iter()
    .map(|(start_index, end_index)| Outage {
        instance_id: tl.instance_ids[i].clone(),
        start_index,
        end_index,
    })
    .collect()
}

/// Every bounded outage in the timeline, by instance order then start.
pub fn all_outages(tl: &AvailabilityTimeline) -> Vec<Outage> {
    (0..tl.instance_ids.len())
        .flat_map(|i| outages_at(tl, i))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AsOutage {
    pub as_id: String,
    pub start_index: usize,
    pub end_index: usize,
    pub instances_affected: usize,
}

impl AsOutage {
    pub fn duration_probes(&self) -> usize {
        self.end_index - self.start_index
    }
}

/// Maximal probe ranges in which every instance an AS hosts is down, for
/// ASes hosting at least `min_instances` instances. Like single-instance
/// outages, a range only counts once at least one of the instances is back
/// up. Instances missing from the timeline are treated as unknown
/// throughout, which rules their AS out.
pub fn detect_as_outages(
    tl: &AvailabilityTimeline,
    eco: &Ecosystem,
    min_instances: usize,
) -> Result<Vec<AsOutage>> {
    if min_instances == 0 {
        return Err(Error::invalid("min_instances must be at least 1"));
    }
    let mut out = Vec::new();
    for (a, hosted) in eco.instances_by_as().iter().enumerate() {
        if hosted.is_empty() || hosted.len() < min_instances {
            continue;
        }
        let rows: Option<Vec<&[ProbeStatus]>> = hosted
            .iter()
            .map(|&i| {
                tl.instance_index(&eco.instances()[i].id)
                    .map(|t| tl.series_at(t))
            })
            .collect();
        let Some(rows) = rows else { continue };
        let runs = bounded_runs(
            tl.probe_count(),
            |k| rows.iter().all(|r| r[k] == ProbeStatus::Down),
            |k| rows.iter().any(|r| r[k] == ProbeStatus::Up),
        );
        out.extend(runs.into_iter().map(|(start_index, end_index)| AsOutage {
            as_id: eco.ases()[a].id.clone(),
            start_index,
            end_index,
            instances_affected: hosted.len(),
        }));
    }
    Ok(out)
}

/// Value at nearest rank `ceil(p * n)` of the ascending sort, for
/// `p` in `(0, 1]`. `None` for an empty sample.
pub fn nearest_rank_percentile<T: Ord + Copy>(values: &[T], p: f64) -> Option<T> {
    if values.is_empty() {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_unstable();
    let rank = ((p * sorted.len() as f64 - 1e-9).ceil() as usize).clamp(1, sorted.len());
    Some(sorted[rank - 1])
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutageImpact {
    pub outage: Outage,
    pub users_unavailable: usize,
    pub toots_unavailable: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InstanceImpact {
    pub instance_id: String,
    pub outages: usize,
    pub p95_users: usize,
    pub p95_toots: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImpactReport {
    pub per_outage: Vec<OutageImpact>,
    /// One row per instance with at least one outage, in timeline order.
    pub per_instance: Vec<InstanceImpact>,
}

/// Users and toots hosted on the down instance for each outage, plus the
/// per-instance 95th percentile (nearest rank) over that instance's
/// outages. Every timeline instance must exist in `eco`.
pub fn outage_impact(tl: &AvailabilityTimeline, eco: &Ecosystem) -> Result<ImpactReport> {
    let users = eco.users_per_instance();
    let toots = eco.toots_per_instance();
    let mut per_outage = Vec::new();
    let mut per_instance = Vec::new();
    for (t, id) in tl.instance_ids.iter().enumerate() {
        let e = eco
            .instance_idx(id)
            .ok_or_else(|| EcosystemError::UnknownReference {
                kind: "instance",
                id: id.clone(),
            })?;
        let outages = outages_at(tl, t);
        if outages.is_empty() {
            continue;
        }
        let n = outages.len();
        per_outage.extend(outages.into_iter().map(|outage| OutageImpact {
            outage,
            users_unavailable: users[e],
            toots_unavailable: toots[e],
        }));
        let rows = &per_outage[per_outage.len() - n..];
        let u: Vec<usize> = rows.iter().map(|r| r.users_unavailable).collect();
        let s: Vec<usize> = rows.iter().map(|r| r.toots_unavailable).collect();
        per_instance.push(InstanceImpact {
            instance_id: id.clone(),
            outages: n,
            p95_users: nearest_rank_percentile(&u, 0.95).unwrap_or(0),
            p95_toots: nearest_rank_percentile(&s, 0.95).unwrap_or(0),
        });
    }
    Ok(ImpactReport {
        per_outage,
        per_instance,
    })
}

/// Instances down at probe `k`, in timeline order.
pub fn timeline_to_failure_sets(tl: &AvailabilityTimeline, k: usize) -> Result<Vec<String>> {
    if k >= tl.probe_count() {
        return Err(Error::invalid(format!(
            "probe index {k} out of range ({} probes)",
            tl.probe_count()
        )));
    }
    Ok(tl
        .instance_ids
        .iter()
        .zip(&tl.series)
        .filter(|(_, s)| s[k] == ProbeStatus::Down)
        .map(|(id, _)| id.clone())
        .collect())
}

/// The failure set at probe `k` as a mask over `eco`'s instances.
pub fn failure_mask(tl: &AvailabilityTimeline, eco: &Ecosystem, k: usize) -> Result<Vec<bool>> {
    let mut mask = vec![false; eco.instances().len()];
    for id in timeline_to_failure_sets(tl, k)? {
        let i = eco
            .instance_idx(&id)
            .ok_or(EcosystemError::UnknownReference { kind: "instance", id })?;
        mask[i] = true;
    }
    Ok(mask)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DailyDowntime {
    /// Unix time of the UTC midnight opening the day.
    pub day_start: i64,
    pub downtime_fraction: Option<f64>,
}

/// Downtime fraction per UTC calendar day, covering every day the timeline
/// touches.
pub fn daily_downtime(tl: &AvailabilityTimeline, instance_id: &str) -> Result<Vec<DailyDowntime>> {
    let i = tl.require(instance_id)?;
    let s = tl.series_at(i);
    let mut out: Vec<DailyDowntime> = Vec::new();
    let mut from = 0;
    while from < s.len() {
        let day = tl.timestamp(from).div_euclid(SECONDS_PER_DAY);
        let mut to = from;
        while to < s.len() && tl.timestamp(to).div_euclid(SECONDS_PER_DAY) == day {
            to += 1;
        }
        out.push(DailyDowntime {
            day_start: day * SECONDS_PER_DAY,
            downtime_fraction: fraction_down(&s[from..to]),
        });
        from = to;
    }
    Ok(out)
}

/// `instance_id,downtime_fraction` for every instance in the timeline.
pub fn downtime_table(tl: &AvailabilityTimeline) -> CsvTable {
    let mut t = CsvTable::new(&["instance_id", "downtime_fraction"]);
    for (id, s) in tl.instance_ids.iter().zip(&tl.series) {
        t.push(vec![id.clone(), opt_f64(fraction_down(s))]);
    }
    t
}

/// CDF of per-instance downtime over instances with at least one known
/// probe.
pub fn downtime_cdf_table(tl: &AvailabilityTimeline) -> CsvTable {
    let fractions: Vec<f64> = tl.series.iter().filter_map(|s| fraction_down(s)).collect();
    let mut t = CsvTable::new(&["downtime_fraction", "cdf"]);
    for (x, p) in empirical_cdf(&fractions) {
        t.push(vec![x.to_string(), p.to_string()]);
    }
    t
}

pub fn daily_downtime_table(tl: &AvailabilityTimeline) -> CsvTable {
    let mut t = CsvTable::new(&["instance_id", "day_start", "downtime_fraction"]);
    for id in &tl.instance_ids {
        for d in daily_downtime(tl, id).expect("id taken from the timeline") {
            t.push(vec![
                id.clone(),
                d.day_start.to_string(),
                opt_f64(d.downtime_fraction),
            ]);
        }
    }
    t
}

pub fn outage_table(tl: &AvailabilityTimeline, report: &ImpactReport) -> CsvTable {
    let mut t = CsvTable::new(&[
        "instance_id",
        "start_index",
        "end_index",
        "start_timestamp",
        "duration_probes",
        "duration_days",
        "users_unavailable",
        "toots_unavailable",
    ]);
    for r in &report.per_outage {
        let o = &r.outage;
        t.push(vec![
            o.instance_id.clone(),
            o.start_index.to_string(),
            o.end_index.to_string(),
            tl.timestamp(o.start_index).to_string(),
            o.duration_probes().to_string(),
            o.duration_days(tl.probe_interval).to_string(),
            r.users_unavailable.to_string(),
            r.toots_unavailable.to_string(),
        ]);
    }
    t
}

pub fn impact_summary_table(report: &ImpactReport) -> CsvTable {
    let mut t = CsvTable::new(&["instance_id", "outages", "p95_users", "p95_toots"]);
    for r in &report.per_instance {
        t.push(vec![
            r.instance_id.clone(),
            r.outages.to_string(),
            r.p95_users.to_string(),
            r.p95_toots.to_string(),
        ]);
    }
    t
}

pub fn as_outage_table(tl: &AvailabilityTimeline, outages: &[AsOutage]) -> CsvTable {
    let mut t = CsvTable::new(&[
        "as_id",
        "start_index",
        "end_index",
        "start_timestamp",
        "duration_probes",
        "instances_affected",
    ]);
    for o in outages {
        t.push(vec![
            o.as_id.clone(),
            o.start_index.to_string(),
            o.end_index.to_string(),
            tl.timestamp(o.start_index).to_string(),
            o.duration_probes().to_string(),
            o.instances_affected.to_string(),
        ]);
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ecosystem::Instance;
    use crate::replication::{place_none, toot_availability};
    use crate::test_fixtures::three_instance_chain;
    use ProbeStatus::{Down as D, Unknown as X, Up as U};

    fn single(probes: Vec<ProbeStatus>) -> AvailabilityTimeline {
        AvailabilityTimeline::new(0, DEFAULT_PROBE_INTERVAL, [("i1", probes)]).unwrap()
    }

    #[test]
    fn downtime_examples() {
        let tl = single(vec![U, U, D, U, D, D, U, U, U, U]);
        assert_eq!(downtime_fraction(&tl, "i1").unwrap(), Some(0.3));
        assert_eq!(downtime_fraction(&single(vec![U; 4]), "i1").unwrap(), Some(0.0));
        assert_eq!(downtime_fraction(&single(vec![D; 4]), "i1").unwrap(), Some(1.0));
        assert_eq!(downtime_fraction(&single(vec![X; 4]), "i1").unwrap(), None);
        assert_eq!(downtime_fraction(&single(vec![D, X, X, U]), "i1").unwrap(), Some(0.5));
        assert!(downtime_fraction(&tl, "nope").is_err());
    }

    #[test]
    fn outage_examples() {
        let o = extract_outages(&single(vec![U, D, D, U]), "i1").unwrap();
        assert_eq!(o.len(), 1);
        assert_eq!((o[0].start_index, o[0].end_index), (1, 3));
        assert_eq!(o[0].duration_probes(), 2);
        assert_eq!(o[0].duration_days(43_200), 1.0);
        assert!(extract_outages(&single(vec![D, D, D]), "i1").unwrap().is_empty());
        assert!(extract_outages(&single(vec![U, U]), "i1").unwrap().is_empty());
        // A gap does not close an outage.
        let o = extract_outages(&single(vec![D, X, D, U]), "i1").unwrap();
        assert_eq!((o[0].start_index, o[0].end_index), (2, 3));
        assert_eq!(o.len(), 1);
    }

    #[test]
    fn rejects_ragged_and_bad_interval() {
        assert!(AvailabilityTimeline::new(0, 300, [("a", vec![U]), ("b", vec![U, U])]).is_err());
        assert!(AvailabilityTimeline::new(0, 0, [("a", vec![U])]).is_err());
        assert!(AvailabilityTimeline::new(0, 300, [("a", vec![U]), ("A", vec![U])]).is_err());
    }

    fn two_instance_as() -> Ecosystem {
        let mut b = Ecosystem::builder();
        b.add_as("a1", "jp").unwrap();
        b.add_as("a2", "us").unwrap();
        b.add_instance(Instance::new("i1", "a1", "jp")).unwrap();
        b.add_instance(Instance::new("i2", "a1", "jp")).unwrap();
        b.add_instance(Instance::new("i3", "a2", "us")).unwrap();
        b.build()
    }

    #[test]
    fn as_outage_examples() {
        let eco = two_instance_as();
        let tl = AvailabilityTimeline::new(
            0,
            300,
            [
                ("i1", vec![U, U, U, D, D, U, U]),
                ("i2", vec![U, U, D, D, D, D, U]),
                ("i3", vec![D, D, D, D, D, D, U]),
            ],
        )
        .unwrap();
        let found = detect_as_outages(&tl, &eco, 2).unwrap();
        assert_eq!(
            found,
            vec![AsOutage {
                as_id: "a1".into(),
                start_index: 3,
                end_index: 5,
                instances_affected: 2,
            }]
        );
        assert!(detect_as_outages(&tl, &eco, 8).unwrap().is_empty());
        assert_eq!(detect_as_outages(&tl, &eco, 1).unwrap().len(), 2);
        assert!(detect_as_outages(&tl, &eco, 0).is_err());
    }

    #[test]
    fn percentile_nearest_rank() {
        assert_eq!(nearest_rank_percentile::<usize>(&[], 0.95), None);
        assert_eq!(nearest_rank_percentile(&[7], 0.95), Some(7));
        let v: Vec<usize> = (1..=20).collect();
        assert_eq!(nearest_rank_percentile(&v, 0.95), Some(19));
        let v: Vec<usize> = (1..=10).rev().collect();
        assert_eq!(nearest_rank_percentile(&v, 0.95), Some(10));
        assert_eq!(nearest_rank_percentile(&v, 0.5), Some(5));
    }

    #[test]
    fn impact_uses_hosted_counts() {
        let eco = three_instance_chain();
        let tl = AvailabilityTimeline::new(
            0,
            300,
            [
                ("i1", vec![U, D, U, D, U]),
                ("i2", vec![U, U, U, U, U]),
                ("i3", vec![D, D, D, D, D]),
            ],
        )
        .unwrap();
        let r = outage_impact(&tl, &eco).unwrap();
        assert_eq!(r.per_outage.len(), 2);
        assert_eq!(r.per_outage[0].users_unavailable, 1);
        assert_eq!(r.per_outage[0].toots_unavailable, 1);
        assert_eq!(r.per_instance.len(), 1);
        assert_eq!(r.per_instance[0].instance_id, "i1");
        assert_eq!(r.per_instance[0].outages, 2);
    }

    #[test]
    fn failure_sets_feed_availability() {
        let eco = three_instance_chain();
        let tl = AvailabilityTimeline::new(
            0,
            300,
            [("i1", vec![U, U]), ("i2", vec![D, U]), ("i3", vec![U, U])],
        )
        .unwrap();
        assert_eq!(timeline_to_failure_sets(&tl, 0).unwrap(), vec!["i2"]);
        assert!(timeline_to_failure_sets(&tl, 1).unwrap().is_empty());
        assert!(timeline_to_failure_sets(&tl, 2).is_err());
        let mask = failure_mask(&tl, &eco, 0).unwrap();
        let a = toot_availability(&place_none(&eco), &mask).unwrap();
        assert!((a - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn daily_buckets_follow_utc_midnight() {
        // Six-hour probes starting at 12:00 UTC: two probes on day 0, four on day 1.
        let tl = AvailabilityTimeline::new(43_200, 21_600, [("i1", vec![D, U, D, D, U, X])]).unwrap();
        let d = daily_downtime(&tl, "i1").unwrap();
        assert_eq!(d.len(), 2);
        assert_eq!(d[0].day_start, 0);
        assert_eq!(d[0].downtime_fraction, Some(0.5));
        assert_eq!(d[1].day_start, 86_400);
        assert_eq!(d[1].downtime_fraction, Some(2.0 / 3.0));
    }
}
