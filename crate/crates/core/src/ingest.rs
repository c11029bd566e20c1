//! Loading and exporting datasets as a directory of CSV files.
//!
//! | file            | header                                                 |
//! |-----------------|--------------------------------------------------------|
//! | `ases.csv`      | `as_id,country`                                        |
//! | `instances.csv` | `instance_id,as_id,country,open_registration,category` |
//! | `users.csv`     | `user_id,instance_id`                                  |
//! | `follows.csv`   | `follower_user_id,followed_user_id`                    |
//! | `toots.csv`     | `toot_id,author_user_id,created_at`                    |
//! | `uptime.csv`    | `timestamp,instance_id,status` (optional)              |
//! | `logins.csv`    | `instance_id,week_index,active_fraction` (optional)    |
//!
//! Headers must match exactly. Every error carries the file and line.

use std::collections::{BTreeMap, HashMap};
use std::fs::{self, File};
use std::path::{Path, PathBuf};

use csv::{ReaderBuilder, StringRecord, Trim};

use crate::ecosystem::{canonical_id, Ecosystem, Instance};
use crate::error::{Error, Result};
use crate::report::CsvTable;
use crate::uptime::{AvailabilityTimeline, ProbeStatus, DEFAULT_PROBE_INTERVAL};

pub const ASES_FILE: &str = "ases.csv";
pub const INSTANCES_FILE: &str = "instances.csv";
pub const USERS_FILE: &str = "users.csv";
pub const FOLLOWS_FILE: &str = "follows.csv";
pub const TOOTS_FILE: &str = "toots.csv";
pub const UPTIME_FILE: &str = "uptime.csv";
pub const LOGINS_FILE: &str = "logins.csv";

const ASES_HEADER: &[&str] = &["as_id", "country"];
const INSTANCES_HEADER: &[&str] = &["instance_id", "as_id", "country", "open_registration", "category"];
const USERS_HEADER: &[&str] = &["user_id", "instance_id"];
const FOLLOWS_HEADER: &[&str] = &["follower_user_id", "followed_user_id"];
const TOOTS_HEADER: &[&str] = &["toot_id", "author_user_id", "created_at"];
const UPTIME_HEADER: &[&str] = &["timestamp", "instance_id", "status"];
const LOGINS_HEADER: &[&str] = &["instance_id", "week_index", "active_fraction"];

/// Weekly active-user fractions per instance, keyed by week index.
pub type Logins = BTreeMap<String, BTreeMap<u32, f64>>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetBundle {
    pub ases: PathBuf,
    pub instances: PathBuf,
    pub users: PathBuf,
    pub follows: PathBuf,
    pub toots: PathBuf,
    pub uptime: Option<PathBuf>,
    pub logins: Option<PathBuf>,
    /// Seconds between uptime probes.
    pub probe_interval: i64,
}

impl DatasetBundle {
    /// The standard file names under `dir`. Optional files are picked up
    /// only if present.
    pub fn from_dir(dir: &Path) -> Self {
        let optional = |name: &str| {
            let p = dir.join(name);
            p.is_file().then_some(p)
        };
        Self {
            ases: dir.join(ASES_FILE),
            instances: dir.join(INSTANCES_FILE),
            users: dir.join(USERS_FILE),
            follows: dir.join(FOLLOWS_FILE),
            toots: dir.join(TOOTS_FILE),
            uptime: optional(UPTIME_FILE),
            logins: optional(LOGINS_FILE),
            probe_interval: DEFAULT_PROBE_INTERVAL,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoadedBundle {
    pub ecosystem: Ecosystem,
    /// Covers every instance of the ecosystem; instances without rows are
    /// unknown throughout.
    pub timeline: Option<AvailabilityTimeline>,
    pub logins: Option<Logins>,
}

fn ingest_err(path: &Path, line: u64, message: impl ToString) -> Error {
    Error::Ingest {
        path: path.to_path_buf(),
        line,
        message: message.to_string(),
    }
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line());
    if !e.is_io_error() {
        return ingest_err(path, line, e);
    }
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        kind => ingest_err(path, line, format!("{kind:?}")),
    }
}

/// Calls `row` for every record of `path` after checking the header.
/// `row` receives the record and its line number.
fn read_rows(
    path: &Path,
    header: &[&str],
    mut row: impl FnMut(&StringRecord, u64) -> Result<(), String>,
) -> Result<()> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = ReaderBuilder::new().trim(Trim::All).from_reader(file);
    let found = rdr.headers().map_err(|e| csv_err(path, e))?.clone();
    if found.iter().ne(header.iter().copied()) {
        return Err(ingest_err(
            path,
            1,
            format!(
                "expected header `{}`, found `{}`",
                header.join(","),
                found.iter().collect::<Vec<_>>().join(",")
            ),
        ));
    }
    let mut rec = StringRecord::new();
    loop {
        match rdr.read_record(&mut rec) {
            Ok(false) => return Ok(()),
            Ok(true) => {
                let line = rec.position().map_or(0, |p| p.line());
                row(&rec, line).map_err(|m| ingest_err(path, line, m))?;
            }
            Err(e) => return Err(csv_err(path, e)),
        }
    }
}

fn parse_bool(s: &str) -> Result<bool, String> {
    match s.to_ascii_lowercase().as_str() {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(format!("expected true or false, found `{s}`")),
    }
}

fn parse_num<T: std::str::FromStr>(s: &str, what: &str) -> Result<T, String> {
    s.parse()
        .map_err(|_| format!("invalid {what} `{s}`"))
}

/// Loads and validates a bundle. Referential errors name the offending row.
pub fn load_bundle(bundle: &DatasetBundle) -> Result<LoadedBundle> {
    let mut b = Ecosystem::builder();
    read_rows(&bundle.ases, ASES_HEADER, |r, _| {
        b.add_as(&r[0], &r[1]).map(drop).map_err(|e| e.to_string())
    })?;
    read_rows(&bundle.instances, INSTANCES_HEADER, |r, _| {
        let category = (!r[4].is_empty()).then(|| r[4].to_string());
        b.add_instance(Instance {
            id: r[0].to_string(),
            as_id: r[1].to_string(),
            country: r[2].to_string(),
            open_registration: parse_bool(&r[3])?,
            category,
        })
        .map(drop)
        .map_err(|e| e.to_string())
    })?;
    read_rows(&bundle.users, USERS_HEADER, |r, _| {
        b.add_user(&r[0], &r[1]).map(drop).map_err(|e| e.to_string())
    })?;
    read_rows(&bundle.follows, FOLLOWS_HEADER, |r, _| {
        b.add_follow(&r[0], &r[1]).map_err(|e| e.to_string())
    })?;
    read_rows(&bundle.toots, TOOTS_HEADER, |r, _| {
        let ts = parse_num(&r[2], "timestamp")?;
        b.add_toot(&r[0], &r[1], ts).map(drop).map_err(|e| e.to_string())
    })?;
    let ecosystem = b.build();
    let timeline = match &bundle.uptime {
        Some(p) => Some(load_uptime(p, &ecosystem, bundle.probe_interval)?),
        None => None,
    };
    let logins = match &bundle.logins {
        Some(p) => Some(load_logins(p, &ecosystem)?),
        None => None,
    };
    Ok(LoadedBundle {
        ecosystem,
        timeline,
        logins,
    })
}

/// Buckets probe rows into slots of `probe_interval` seconds counted from
/// the earliest timestamp. Two rows landing in the same slot must agree.
pub fn load_uptime(path: &Path, eco: &Ecosystem, probe_interval: i64) -> Result<AvailabilityTimeline> {
    if probe_interval <= 0 {
        return Err(Error::invalid(format!(
            "probe interval must be positive, got {probe_interval}"
        )));
    }
    let mut rows: Vec<(i64, usize, bool, u64)> = Vec::new();
    read_rows(path, UPTIME_HEADER, |r, line| {
        let ts: i64 = parse_num(&r[0], "timestamp")?;
        let inst = eco
            .instance_idx(&r[1])
            .ok_or_else(|| format!("unknown instance `{}`", canonical_id(&r[1])))?;
        let up = match r[2].to_ascii_lowercase().as_str() {
            "up" => true,
            "down" => false,
            s => return Err(format!("status must be up or down, found `{s}`")),
        };
        rows.push((ts, inst, up, line));
        Ok(())
    })?;
    let start = rows.iter().map(|r| r.0).min().unwrap_or(0);
    let slots = rows
        .iter()
        .map(|r| ((r.0 - start) / probe_interval) as usize + 1)
        .max()
        .unwrap_or(0);
    let n = eco.instances().len();
    let mut series = vec![vec![ProbeStatus::Unknown; slots]; n];
    let mut seen: HashMap<(usize, usize), u64> = HashMap::new();
    for (ts, inst, up, line) in rows {
        let k = ((ts - start) / probe_interval) as usize;
        let status = if up { ProbeStatus::Up } else { ProbeStatus::Down };
        let cell = &mut series[inst][k];
        if *cell != ProbeStatus::Unknown && *cell != status {
            return Err(ingest_err(
                path,
                line,
                format!(
                    "conflicting status for `{}` in probe slot {k} (first seen on line {})",
                    eco.instances()[inst].id,
                    seen[&(inst, k)]
                ),
            ));
        }
        *cell = status;
        seen.entry((inst, k)).or_insert(line);
    }
    AvailabilityTimeline::new(
        start,
        probe_interval,
        eco.instances().iter().map(|i| i.id.clone()).zip(series),
    )
}

pub fn load_logins(path: &Path, eco: &Ecosystem) -> Result<Logins> {
    let mut out = Logins::new();
    read_rows(path, LOGINS_HEADER, |r, _| {
        let inst = eco
            .instance_idx(&r[0])
            .ok_or_else(|| format!("unknown instance `{}`", canonical_id(&r[0])))?;
        let week: u32 = parse_num(&r[1], "week index")?;
        let f: f64 = parse_num(&r[2], "active fraction")?;
        if !(0.0..=1.0).contains(&f) {
            return Err(format!("active fraction {f} outside [0, 1]"));
        }
        let id = eco.instances()[inst].id.clone();
        if out.entry(id.clone()).or_default().insert(week, f).is_some() {
            return Err(format!("duplicate week {week} for `{id}`"));
        }
        Ok(())
    })?;
    Ok(out)
}

/// Weekly fractions in week order, ready for `stats::activity_level`.
pub fn login_series(logins: &Logins) -> BTreeMap<String, Vec<f64>> {
    logins
        .iter()
        .map(|(id, weeks)| (id.clone(), weeks.values().copied().collect()))
        .collect()
}

/// Writes the bundle files under `dir` with rows sorted by id (follows by
/// follower then followed, uptime by timestamp then instance). Unknown
/// probes are omitted.
pub fn export_bundle(
    dir: &Path,
    eco: &Ecosystem,
    timeline: Option<&AvailabilityTimeline>,
    logins: Option<&Logins>,
) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let sorted = |mut t: CsvTable| {
        t.rows.sort();
        t
    };

    let mut t = CsvTable::new(ASES_HEADER);
    for a in eco.ases() {
        t.push(vec![a.id.clone(), a.country.clone()]);
    }
    sorted(t).write(&dir.join(ASES_FILE))?;

    let mut t = CsvTable::new(INSTANCES_HEADER);
    for i in eco.instances() {
        t.push(vec![
            i.id.clone(),
            i.as_id.clone(),
            i.country.clone(),
            i.open_registration.to_string(),
            i.category.clone().unwrap_or_default(),
        ]);
    }
    sorted(t).write(&dir.join(INSTANCES_FILE))?;

    let mut t = CsvTable::new(USERS_HEADER);
    for u in eco.users() {
        t.push(vec![u.id.clone(), u.instance_id.clone()]);
    }
    sorted(t).write(&dir.join(USERS_FILE))?;

    let mut t = CsvTable::new(FOLLOWS_HEADER);
    for &(a, b) in eco.follows() {
        t.push(vec![
            eco.users()[a as usize].id.clone(),
            eco.users()[b as usize].id.clone(),
        ]);
    }
    sorted(t).write(&dir.join(FOLLOWS_FILE))?;

    let mut t = CsvTable::new(TOOTS_HEADER);
    for x in eco.toots() {
        t.push(vec![x.id.clone(), x.author_id.clone(), x.created_at.to_string()]);
    }
    sorted(t).write(&dir.join(TOOTS_FILE))?;

    if let Some(tl) = timeline {
        let mut rows: Vec<(i64, &str, &str)> = Vec::new();
        for (i, id) in tl.instance_ids().iter().enumerate() {
            for (k, s) in tl.series_at(i).iter().enumerate() {
                let status = match s {
                    ProbeStatus::Up => "up",
                    ProbeStatus::Down => "down",
                    ProbeStatus::Unknown => continue,
                };
                rows.push((tl.timestamp(k), id, status));
            }
        }
        rows.sort();
        let mut t = CsvTable::new(UPTIME_HEADER);
        for (ts, id, s) in rows {
            t.push(vec![ts.to_string(), id.to_string(), s.to_string()]);
        }
        t.write(&dir.join(UPTIME_FILE))?;
    }

    if let Some(logins) = logins {
        let mut t = CsvTable::new(LOGINS_HEADER);
        for (id, weeks) in logins {
            for (w, f) in weeks {
                t.push(vec![id.clone(), w.to_string(), f.to_string()]);
            }
        }
        t.write(&dir.join(LOGINS_FILE))?;
    }
    Ok(())
}
