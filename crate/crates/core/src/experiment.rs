//! Experiment specs read from TOML and the runner that turns them into CSV
//! reports.
//!
//! A spec names the experiment, a seed and a data source:
//!
//! ```toml
//! experiment = "availability-sweep"
//! seed = 7
//! data_dir = "data"          # or a [synth] table; neither means the desk preset
//! strategies = ["none", "subscription", "random:1"]
//! target = "instances"
//! ranking = "toot_count"
//! max_n = "all"
//! ```
//!
//! Every CSV written gets a `<file>.meta.json` sidecar echoing the spec,
//! seed and tool version. Output depends only on the spec.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::ecosystem::Ecosystem;
use crate::error::{Error, Result};
use crate::graph::{complementary_cdf, induce_federation_graph, out_degree_distribution, SocialGraph};
use crate::ingest::{export_bundle, load_bundle, login_series, DatasetBundle, LoadedBundle};
use crate::replication::{
    home_remote_ratio, home_remote_table, place, place_subscription, sweep_placement, Strategy,
};
use crate::report::{opt_f64, CsvTable};
use crate::resilience::{remove_ases_top_n, remove_instances_top_n, remove_users_iterative, Ranking, Target};
use crate::stats::{self, Weight};
use crate::synth::{calibration_report, generate, SynthConfig};
use crate::uptime::{self, DEFAULT_AS_OUTAGE_MIN_INSTANCES, DEFAULT_PROBE_INTERVAL};

pub const TOOL_NAME: &str = "fedisim";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// How many units a sweep removes: a count, or every unit there is.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(try_from = "MaxNRepr", into = "MaxNRepr")]
pub enum MaxN {
    #[default]
    All,
    Count(usize),
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum MaxNRepr {
    Count(usize),
    Word(String),
}

impl TryFrom<MaxNRepr> for MaxN {
    type Error = String;

    fn try_from(r: MaxNRepr) -> Result<Self, String> {
        match r {
            MaxNRepr::Count(n) => Ok(MaxN::Count(n)),
            MaxNRepr::Word(w) if w == "all" => Ok(MaxN::All),
            MaxNRepr::Word(w) => Err(format!("max_n must be a count or \"all\", found `{w}`")),
        }
    }
}

impl From<MaxN> for MaxNRepr {
    fn from(m: MaxN) -> Self {
        match m {
            MaxN::All => MaxNRepr::Word("all".into()),
            MaxN::Count(n) => MaxNRepr::Count(n),
        }
    }
}

impl MaxN {
    pub fn resolve(self, available: usize) -> usize {
        match self {
            MaxN::All => available,
            MaxN::Count(n) => n,
        }
    }
}

fn default_strategies() -> Vec<Strategy> {
    vec![Strategy::None, Strategy::Subscription, Strategy::Random(1)]
}

fn default_target() -> Target {
    Target::Instances
}

fn default_min_instances() -> usize {
    DEFAULT_AS_OUTAGE_MIN_INSTANCES
}

fn default_probe_interval() -> i64 {
    DEFAULT_PROBE_INTERVAL
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "experiment", rename_all = "kebab-case")]
pub enum Experiment {
    /// Writes a synthetic dataset bundle plus a calibration summary.
    Generate,
    ResilienceUsers {
        fraction: f64,
        steps: usize,
    },
    ResilienceInstances {
        ranking: Ranking,
        #[serde(default)]
        max_n: MaxN,
    },
    ResilienceAses {
        ranking: Ranking,
        #[serde(default)]
        max_n: MaxN,
    },
    AvailabilitySweep {
        #[serde(default = "default_strategies")]
        strategies: Vec<Strategy>,
        #[serde(default = "default_target")]
        target: Target,
        ranking: Ranking,
        #[serde(default)]
        max_n: MaxN,
        /// Also write each strategy's toot placement.
        #[serde(default)]
        export_placement: bool,
    },
    UptimeReport {
        #[serde(default = "default_min_instances")]
        min_instances: usize,
        #[serde(default = "default_probe_interval")]
        probe_interval: i64,
    },
    StatsReport,
}

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Experiment::Generate => "generate",
            Experiment::ResilienceUsers { .. } => "resilience-users",
            Experiment::ResilienceInstances { .. } => "resilience-instances",
            Experiment::ResilienceAses { .. } => "resilience-ases",
            Experiment::AvailabilitySweep { .. } => "availability-sweep",
            Experiment::UptimeReport { .. } => "uptime-report",
            Experiment::StatsReport => "stats-report",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    /// Drives every random choice, including synthesis: it replaces any
    /// `seed` in the `[synth]` table.
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data_dir: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synth: Option<SynthConfig>,
    #[serde(flatten)]
    pub experiment: Experiment,
}

impl ExperimentSpec {
    pub fn new(experiment: Experiment, seed: u64) -> Self {
        Self {
            seed,
            data_dir: None,
            synth: None,
            experiment,
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Reads a spec file; a relative `data_dir` is taken relative to the
    /// file's directory.
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut spec = Self::from_toml_str(&text)?;
        if let (Some(dir), Some(base)) = (&spec.data_dir, path.parent()) {
            if dir.is_relative() {
                spec.data_dir = Some(base.join(dir));
            }
        }
        Ok(spec)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("spec serialises")
    }

    /// The synthesis config this spec would use, with the spec's seed.
    pub fn synth_config(&self) -> SynthConfig {
        let mut c = self
            .synth
            .clone()
            .unwrap_or_else(|| SynthConfig::desk_scale(self.seed));
        c.seed = self.seed;
        c
    }

    fn probe_interval(&self) -> i64 {
        match self.experiment {
            Experiment::UptimeReport { probe_interval, .. } => probe_interval,
            _ => DEFAULT_PROBE_INTERVAL,
        }
    }

    /// Loads `data_dir`, or synthesises an ecosystem when there is none.
    pub fn load_data(&self) -> Result<LoadedBundle> {
        if self.data_dir.is_some() && self.synth.is_some() {
            return Err(Error::Config("give either data_dir or [synth], not both".into()));
        }
        match &self.data_dir {
            Some(dir) => {
                let mut bundle = DatasetBundle::from_dir(dir);
                bundle.probe_interval = self.probe_interval();
                load_bundle(&bundle)
            }
            None => Ok(LoadedBundle {
                ecosystem: generate(&self.synth_config())?,
                timeline: None,
                logins: None,
            }),
        }
    }
}

#[derive(Serialize)]
struct Sidecar<'a> {
    tool: &'static str,
    version: &'static str,
    experiment: &'static str,
    seed: u64,
    file: &'a str,
    spec: &'a ExperimentSpec,
}

struct Outputs<'a> {
    dir: &'a Path,
    spec: &'a ExperimentSpec,
    written: Vec<PathBuf>,
}

impl Outputs<'_> {
    fn csv(&mut self, name: &str, table: &CsvTable) -> Result<()> {
        let path = self.dir.join(name);
        table.write(&path)?;
        self.sidecar(name)?;
        self.written.push(path);
        Ok(())
    }

    fn sidecar(&self, name: &str) -> Result<()> {
        let meta = Sidecar {
            tool: TOOL_NAME,
            version: TOOL_VERSION,
            experiment: self.spec.experiment.name(),
            seed: self.spec.seed,
            file: name,
            spec: self.spec,
        };
        let path = self.dir.join(format!("{name}.meta.json"));
        let mut text = serde_json::to_string_pretty(&meta)?;
        text.push('\n');
        fs::write(&path, text).map_err(|e| Error::io(&path, e))
    }
}

/// Runs `spec`, writing reports into `out_dir` (created if missing).
/// Returns the CSV files written, sidecars excluded.
pub fn run_experiment(spec: &ExperimentSpec, out_dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut echo = spec.clone();
    if echo.data_dir.is_none() {
        echo.synth = Some(spec.synth_config());
    }
    let mut out = Outputs {
        dir: out_dir,
        spec: &echo,
        written: Vec::new(),
    };
    if spec.experiment == Experiment::Generate {
        if spec.data_dir.is_some() {
            return Err(Error::Config("generate takes [synth], not data_dir".into()));
        }
        let eco = generate(&spec.synth_config())?;
        export_bundle(out_dir, &eco, None, None)?;
        for name in [
            crate::ingest::ASES_FILE,
            crate::ingest::INSTANCES_FILE,
            crate::ingest::USERS_FILE,
            crate::ingest::FOLLOWS_FILE,
            crate::ingest::TOOTS_FILE,
        ] {
            out.sidecar(name)?;
            out.written.push(out_dir.join(name));
        }
        out.csv("calibration.csv", &calibration_report(&eco).table())?;
        return Ok(out.written);
    }

    let data = spec.load_data()?;
    let eco = &data.ecosystem;
    match &spec.experiment {
        Experiment::Generate => unreachable!("handled above"),
        Experiment::ResilienceUsers { fraction, steps } => {
            let trace = remove_users_iterative(eco, *fraction, *steps)?;
            out.csv("resilience_users.csv", &trace.table())?;
        }
        Experiment::ResilienceInstances { ranking, max_n } => {
            let n = max_n.resolve(eco.instances().len());
            let trace = remove_instances_top_n(eco, *ranking, n)?;
            out.csv("resilience_instances.csv", &trace.table())?;
        }
        Experiment::ResilienceAses { ranking, max_n } => {
            let n = max_n.resolve(eco.ases().len());
            let trace = remove_ases_top_n(eco, *ranking, n)?;
            out.csv("resilience_ases.csv", &trace.table())?;
        }
        Experiment::AvailabilitySweep {
            strategies,
            target,
            ranking,
            max_n,
            export_placement,
        } => {
            if strategies.is_empty() {
                return Err(Error::invalid("availability-sweep needs at least one strategy"));
            }
            let units = match target {
                Target::Instances => eco.instances().len(),
                Target::Ases => eco.ases().len(),
                Target::Users => {
                    return Err(Error::invalid("availability sweeps fail instances or ASes, not users"))
                }
            };
            let n = max_n.resolve(units);
            let mut table: Option<CsvTable> = None;
            for &strategy in strategies {
                let placement = place(eco, strategy, spec.seed);
                let sweep = sweep_placement(eco, &placement, *target, *ranking, n, spec.seed)?;
                match &mut table {
                    Some(t) => sweep.append_rows(t),
                    None => table = Some(sweep.table()),
                }
                if *export_placement {
                    let name = format!("placement_{}.csv", strategy.to_string().replace(':', "_"));
                    out.csv(&name, &placement.table(eco))?;
                }
            }
            out.csv("availability_sweep.csv", &table.expect("at least one strategy"))?;
        }
        Experiment::UptimeReport { min_instances, .. } => {
            let tl = data
                .timeline
                .as_ref()
                .ok_or_else(|| Error::Config("uptime-report needs a data_dir with uptime.csv".into()))?;
            let impact = uptime::outage_impact(tl, eco)?;
            let as_outages = uptime::detect_as_outages(tl, eco, *min_instances)?;
            out.csv("downtime.csv", &uptime::downtime_table(tl))?;
            out.csv("downtime_cdf.csv", &uptime::downtime_cdf_table(tl))?;
            out.csv("daily_downtime.csv", &uptime::daily_downtime_table(tl))?;
            out.csv("outages.csv", &uptime::outage_table(tl, &impact))?;
            out.csv("outage_impact.csv", &uptime::impact_summary_table(&impact))?;
            out.csv("as_outages.csv", &uptime::as_outage_table(tl, &as_outages))?;
        }
        Experiment::StatsReport => stats_report(&mut out, &data)?,
    }
    Ok(out.written)
}

fn stats_report(out: &mut Outputs<'_>, data: &LoadedBundle) -> Result<()> {
    let eco: &Ecosystem = &data.ecosystem;
    let fed = induce_federation_graph(eco);
    out.csv("concentration_users.csv", &stats::concentration(eco, Weight::Users)?.table())?;
    out.csv("concentration_toots.csv", &stats::concentration(eco, Weight::Toots)?.table())?;
    out.csv("open_closed.csv", &stats::open_closed_split(eco).table())?;
    let hosting = stats::hosting_distribution(eco);
    out.csv("hosting_as.csv", &hosting.as_table())?;
    out.csv("hosting_country.csv", &hosting.country_table())?;
    let homophily = stats::country_homophily(eco, &fed);
    out.csv("homophily.csv", &homophily.table())?;
    let mut t = CsvTable::new(&["metric", "value"]);
    t.push(vec![
        "same_country_fraction".into(),
        opt_f64(homophily.same_country_fraction),
    ]);
    out.csv("homophily_summary.csv", &t)?;
    out.csv("categories.csv", &stats::category_table(&stats::category_breakdown(eco)))?;

    let mut t = CsvTable::new(&["out_degree", "ccdf"]);
    for (d, p) in complementary_cdf(&out_degree_distribution(&SocialGraph::from_ecosystem(eco))) {
        t.push(vec![d.to_string(), p.to_string()]);
    }
    out.csv("user_out_degree_ccdf.csv", &t)?;

    let sub = place_subscription(eco);
    let mut t = CsvTable::new(&["copies", "toots"]);
    for (c, n) in sub.copy_count_histogram() {
        t.push(vec![c.to_string(), n.to_string()]);
    }
    out.csv("subscription_copies.csv", &t)?;
    out.csv("home_remote.csv", &home_remote_table(&home_remote_ratio(eco, &sub)?))?;

    if let Some(logins) = &data.logins {
        let mut t = CsvTable::new(&["instance_id", "activity_level"]);
        for (id, level) in stats::activity_level(&login_series(logins))? {
            t.push(vec![id, opt_f64(level)]);
        }
        out.csv("activity_level.csv", &t)?;
    }
    Ok(())
}
