//! Seeded generator for synthetic ecosystems with heavy-tailed instance
//! sizes, AS sizes, follower degrees and toot volumes.
//!
//! Generation is single-threaded and fully determined by the config,
//! including its seed.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::ecosystem::{Ecosystem, Instance};
use crate::error::{Error, Result};
use crate::report::{opt_f64, CsvTable};
use crate::stats;

/// Redraw budget per follow edge before the edge is dropped.
pub const MAX_EDGE_ATTEMPTS: usize = 100;

/// Toot timestamps are spread uniformly over this window (UTC seconds).
pub const TOOT_WINDOW: (i64, i64) = (1_491_004_800, 1_533_081_600);

const COUNTRIES: [&str; 30] = [
    "JP", "US", "FR", "DE", "GB", "NL", "CA", "KR", "CN", "ES", "IT", "RU", "BR", "AU", "SE",
    "CH", "PL", "FI", "AT", "BE", "IE", "NO", "DK", "CZ", "IN", "TW", "SG", "MX", "AR", "PT",
];

const CATEGORIES: [&str; 6] = ["general", "tech", "art", "games", "music", "academia"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub seed: u64,
    pub n_users: usize,
    pub n_instances: usize,
    pub n_ases: usize,
    /// Zipf exponent of users per instance.
    pub instance_size_exponent: f64,
    /// Zipf exponent of instances per AS.
    pub as_size_exponent: f64,
    /// Power-law exponent of user out-degree, > 1.
    pub follow_out_degree_exponent: f64,
    pub mean_out_degree: f64,
    /// Probability that a follow targets a user on the follower's instance.
    pub p_local_follow: f64,
    /// Power-law exponent of toots per user, > 1.
    pub toots_per_user_exponent: f64,
    pub mean_toots_per_user: f64,
    /// Countries are assigned to ASes by a Zipf(1) draw over this many codes.
    pub n_countries: usize,
    /// Pick remote target instances uniformly instead of by size.
    #[serde(default)]
    pub uniform_targets: bool,
    /// Within an instance, a target is drawn with probability proportional
    /// to `activity ^ popularity_exponent`, where activity is the user's raw
    /// power-law degree draw. 0 means uniform.
    #[serde(default = "default_popularity_exponent")]
    pub popularity_exponent: f64,
    /// Rank-couples user activity to the size of the user's instance: 0 keeps
    /// them independent, 1 puts the most active users on the largest
    /// instances.
    #[serde(default)]
    pub activity_size_coupling: f64,
    /// Rank-couples toot volume to user activity: 0 assigns toot counts
    /// independently of activity, 1 gives the most active users the largest
    /// toot counts.
    #[serde(default)]
    pub toot_activity_coupling: f64,
    #[serde(default = "default_p_open")]
    pub p_open_registration: f64,
}

fn default_popularity_exponent() -> f64 {
    1.0
}

fn default_p_open() -> f64 {
    0.5
}

impl SynthConfig {
    /// Desk-scale preset: 10^4 users, ~10^5 follows and ~10^5 toots on
    /// 500 instances in 60 ASes, skewed so the top 5% of instances hold
    /// roughly 90% of users.
    pub fn desk_scale(seed: u64) -> Self {
        Self {
            seed,
            n_users: 10_000,
            n_instances: 500,
            n_ases: 60,
            instance_size_exponent: 1.8,
            as_size_exponent: 1.0,
            follow_out_degree_exponent: 1.8,
            mean_out_degree: 13.5,
            p_local_follow: 0.8,
            toots_per_user_exponent: 2.0,
            mean_toots_per_user: 10.0,
            n_countries: 15,
            uniform_targets: false,
            popularity_exponent: 3.0,
            activity_size_coupling: 0.9,
            toot_activity_coupling: 1.0,
            p_open_registration: 0.5,
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.n_ases == 0 || self.n_instances == 0 || self.n_users == 0 || self.n_countries == 0 {
            return bad("all counts must be at least 1".into());
        }
        if !(self.n_users >= self.n_instances && self.n_instances >= self.n_ases) {
            return bad("need n_users >= n_instances >= n_ases".into());
        }
        if self.n_countries > COUNTRIES.len() {
            return bad(format!("n_countries must be at most {}", COUNTRIES.len()));
        }
        for (name, p) in [
            ("p_local_follow", self.p_local_follow),
            ("p_open_registration", self.p_open_registration),
            ("activity_size_coupling", self.activity_size_coupling),
            ("toot_activity_coupling", self.toot_activity_coupling),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("{name} must lie in [0, 1]"));
            }
        }
        for (name, e) in [
            ("instance_size_exponent", self.instance_size_exponent),
            ("as_size_exponent", self.as_size_exponent),
        ] {
            if !(e > 0.0 && e.is_finite()) {
                return bad(format!("{name} must be positive"));
            }
        }
        for (name, e) in [
            ("follow_out_degree_exponent", self.follow_out_degree_exponent),
            ("toots_per_user_exponent", self.toots_per_user_exponent),
        ] {
            if !(e > 1.0 && e.is_finite()) {
                return bad(format!("{name} must exceed 1"));
            }
        }
        if !(self.popularity_exponent >= 0.0 && self.popularity_exponent.is_finite()) {
            return bad("popularity_exponent must be non-negative".into());
        }
        if !(self.mean_out_degree > 0.0) {
            return bad("mean_out_degree must be positive".into());
        }
        if self.mean_out_degree >= self.n_users as f64 {
            return bad("mean_out_degree must be below n_users".into());
        }
        if !(self.mean_toots_per_user > 0.0 && self.mean_toots_per_user.is_finite()) {
            return bad("mean_toots_per_user must be positive".into());
        }
        Ok(())
    }
}

/// Sampler over indices `0..n` by cumulative weights.
#[derive(Debug, Clone)]
pub(crate) struct Cumulative {
    cdf: Vec<f64>,
}

impl Cumulative {
    pub fn new(weights: impl IntoIterator<Item = f64>) -> Self {
        let mut acc = 0.0;
        let cdf = weights
            .into_iter()
            .map(|w| {
                acc += w;
                acc
            })
            .collect();
        Self { cdf }
    }

    pub fn total(&self) -> f64 {
        self.cdf.last().copied().unwrap_or(0.0)
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> usize {
        let x = rng.random::<f64>() * self.total();
        self.cdf
            .partition_point(|&c| c <= x)
            .min(self.cdf.len() - 1)
    }
}

/// Discrete power law `P(k) ∝ k^-exponent` on `1..=max`.
fn power_law(exponent: f64, max: usize) -> Cumulative {
    Cumulative::new((1..=max).map(|k| (k as f64).powf(-exponent)))
}

/// Splits `total` into `parts` sizes, each at least 1, with the remainder
/// allocated multinomially with probabilities `∝ rank^-exponent`.
pub(crate) fn zipf_partition<R: Rng>(total: usize, parts: usize, exponent: f64, rng: &mut R) -> Vec<usize> {
    let mut sizes = vec![1; parts];
    let zipf = power_law(exponent, parts);
    for _ in parts..total {
        sizes[zipf.sample(rng)] += 1;
    }
    sizes
}

/// Rescales raw draws to the requested mean, rounding stochastically and
/// clamping to `max`.
fn rescale<R: Rng>(raw: &[usize], mean: f64, max: usize, rng: &mut R) -> Vec<usize> {
    let raw_mean = raw.iter().sum::<usize>() as f64 / raw.len().max(1) as f64;
    let factor = if raw_mean > 0.0 { mean / raw_mean } else { 0.0 };
    raw.iter()
        .map(|&r| {
            let x = r as f64 * factor;
            let base = x.floor();
            let up = rng.random::<f64>() < x - base;
            ((base as usize) + up as usize).min(max)
        })
        .collect()
}

pub fn generate(config: &SynthConfig) -> Result<Ecosystem> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut b = Ecosystem::builder();

    let country_pick = power_law(1.0, config.n_countries);
    for a in 0..config.n_ases {
        let country = COUNTRIES[country_pick.sample(&mut rng)];
        b.add_as(&format!("as{:05}", a + 1), country)?;
    }

    // Instances are dealt to ASes in a random order so instance size and
    // AS size are independent.
    let as_sizes = zipf_partition(config.n_instances, config.n_ases, config.as_size_exponent, &mut rng);
    let mut slots: Vec<usize> = as_sizes
        .iter()
        .enumerate()
        .flat_map(|(a, &s)| std::iter::repeat_n(a, s))
        .collect();
    for i in (1..slots.len()).rev() {
        slots.swap(i, rng.random_range(0..=i));
    }
    let instance_sizes =
        zipf_partition(config.n_users, config.n_instances, config.instance_size_exponent, &mut rng);
    let mut instance_ids = Vec::with_capacity(config.n_instances);
    for (i, &host) in slots.iter().enumerate() {
        let id = format!("inst{:04}.example", i + 1);
        let as_id = b.build_ref().ases()[host].id.clone();
        let country = b.build_ref().ases()[host].country.clone();
        let open_registration = rng.random::<f64>() < config.p_open_registration;
        let category = CATEGORIES[rng.random_range(0..CATEGORIES.len())];
        b.add_instance(Instance {
            id: id.clone(),
            as_id,
            country,
            open_registration,
            category: Some(category.to_string()),
        })?;
        instance_ids.push(id);
    }

    let mut members: Vec<Vec<usize>> = Vec::with_capacity(config.n_instances);
    for (i, &size) in instance_sizes.iter().enumerate() {
        let mut m = Vec::with_capacity(size);
        for _ in 0..size {
            let u = b.user_count();
            m.push(b.add_user(&format!("u{}@{}", u + 1, instance_ids[i]), &instance_ids[i])?);
        }
        members.push(m);
    }
    let n = config.n_users;
    let home: Vec<usize> = {
        let mut h = vec![0; n];
        for (i, m) in members.iter().enumerate() {
            for &u in m {
                h[u] = i;
            }
        }
        h
    };

    // Activity: raw power-law draw shared by out-degree and popularity.
    let degree_law = power_law(config.follow_out_degree_exponent, (n - 1).max(1));
    let mut activity: Vec<usize> = (0..n).map(|_| degree_law.sample(&mut rng) + 1).collect();
    if config.activity_size_coupling > 0.0 {
        let host_size: Vec<usize> = (0..n).map(|u| instance_sizes[home[u]]).collect();
        rank_couple(&mut activity, &host_size, config.activity_size_coupling, &mut rng);
    }
    let out_degree = rescale(&activity, config.mean_out_degree, n - 1, &mut rng);

    let popularity = |u: usize| (activity[u] as f64).powf(config.popularity_exponent);
    let local_pick: Vec<Cumulative> = members
        .iter()
        .map(|m| Cumulative::new(m.iter().map(|&u| popularity(u))))
        .collect();
    let instance_pick = if config.uniform_targets {
        Cumulative::new(std::iter::repeat_n(1.0, config.n_instances))
    } else {
        Cumulative::new(instance_sizes.iter().map(|&s| s as f64))
    };

    for u in 0..n {
        let own = home[u];
        for _ in 0..out_degree[u] {
            for _ in 0..MAX_EDGE_ATTEMPTS {
                let target_instance = if config.n_instances == 1
                    || rng.random::<f64>() < config.p_local_follow
                {
                    own
                } else {
                    let t = instance_pick.sample(&mut rng);
                    if t == own {
                        continue;
                    }
                    t
                };
                let v = members[target_instance][local_pick[target_instance].sample(&mut rng)];
                if v != u && !b.has_follow_idx(u, v) {
                    b.add_follow_idx(u, v)?;
                    break;
                }
            }
        }
    }

    let toot_cap = ((config.mean_toots_per_user * 1000.0).ceil() as usize).max(1);
    let toot_law = power_law(config.toots_per_user_exponent, toot_cap);
    let raw_toots: Vec<usize> = (0..n).map(|_| toot_law.sample(&mut rng) + 1).collect();
    let mut toot_counts = rescale(&raw_toots, config.mean_toots_per_user, usize::MAX, &mut rng);
    if config.toot_activity_coupling > 0.0 {
        rank_couple(&mut toot_counts, &activity, config.toot_activity_coupling, &mut rng);
    }
    let mut next = 0usize;
    for (u, &count) in toot_counts.iter().enumerate() {
        let author = b.build_ref().users()[u].id.clone();
        for _ in 0..count {
            next += 1;
            let ts = rng.random_range(TOOT_WINDOW.0..TOOT_WINDOW.1);
            b.add_toot(&format!("t{next}"), &author, ts)?;
        }
    }
    Ok(b.build())
}

/// Permutes `values` among a random `coupling` fraction of positions so that,
/// within that subset, larger values sit where `key` is larger. Ties in `key`
/// keep index order.
fn rank_couple<R: Rng>(values: &mut [usize], key: &[usize], coupling: f64, rng: &mut R) {
    let coupled: Vec<usize> = (0..values.len())
        .filter(|_| rng.random::<f64>() < coupling)
        .collect();
    let mut sorted: Vec<usize> = coupled.iter().map(|&u| values[u]).collect();
    sorted.sort_unstable_by(|a, b| b.cmp(a));
    let mut by_key = coupled;
    by_key.sort_by(|&a, &b| key[b].cmp(&key[a]).then(a.cmp(&b)));
    for (u, v) in by_key.into_iter().zip(sorted) {
        values[u] = v;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationReport {
    pub n_users: usize,
    pub n_instances: usize,
    pub n_follows: usize,
    pub n_toots: usize,
    pub top5_user_share: Option<f64>,
    pub top10_user_share: Option<f64>,
    pub gini_instance_sizes: Option<f64>,
    /// Follows per user; `None` without users.
    pub mean_out_degree: Option<f64>,
    /// Fraction of follows within one instance; `None` without follows.
    pub local_follow_fraction: Option<f64>,
}

impl CalibrationReport {
    pub fn table(&self) -> CsvTable {
        let mut t = CsvTable::new(&["metric", "value"]);
        let rows = [
            ("n_users", Some(self.n_users as f64)),
            ("n_instances", Some(self.n_instances as f64)),
            ("n_follows", Some(self.n_follows as f64)),
            ("n_toots", Some(self.n_toots as f64)),
            ("top5_user_share", self.top5_user_share),
            ("top10_user_share", self.top10_user_share),
            ("gini_instance_sizes", self.gini_instance_sizes),
            ("mean_out_degree", self.mean_out_degree),
            ("local_follow_fraction", self.local_follow_fraction),
        ];
        for (k, v) in rows {
            t.push(vec![k.to_string(), opt_f64(v)]);
        }
        t
    }
}

pub fn calibration_report(eco: &Ecosystem) -> CalibrationReport {
    let mut sizes = eco.users_per_instance();
    sizes.sort_unstable_by(|a, b| b.cmp(a));
    let follows = eco.follows();
    let local = follows
        .iter()
        .filter(|&&(a, b)| eco.user_instance(a as usize) == eco.user_instance(b as usize))
        .count();
    CalibrationReport {
        n_users: eco.users().len(),
        n_instances: eco.instances().len(),
        n_follows: follows.len(),
        n_toots: eco.toots().len(),
        top5_user_share: stats::top_share(&sizes, 0.05),
        top10_user_share: stats::top_share(&sizes, 0.10),
        gini_instance_sizes: stats::gini(&sizes),
        mean_out_degree: (!eco.users().is_empty())
            .then(|| follows.len() as f64 / eco.users().len() as f64),
        local_follow_fraction: (!follows.is_empty()).then(|| local as f64 / follows.len() as f64),
    }
}
