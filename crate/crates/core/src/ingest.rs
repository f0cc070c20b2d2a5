//! Parsers for `vmstat`, `iostat -k` and `netstat -s` captures, frame
//! assembly, and the dataset CSV format.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use chrono::{DateTime, NaiveDateTime};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::labeling::{DatasetRow, FrameRtt, Label, LabeledDataset};
use crate::schema::{FeatureSchema, KpiFrame, Tool, FEATURES, SCHEMA_VERSION};
use crate::stressor::{ScenarioId, StressLevel, StressorKind};

/// One sample from one tool. Netstat's first snapshot carries only
/// cumulative `*_total` counters and has `rates == false`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolRecord {
    pub tool: Tool,
    /// Seconds since the Unix epoch, or since the start of the capture when
    /// the tool printed no timestamps.
    pub timestamp: f64,
    pub values: BTreeMap<String, f64>,
    pub rates: bool,
}

fn parse_num(tok: &str, line: usize, what: &str) -> Result<f64> {
    tok.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| Error::Parse {
            line,
            msg: format!("`{tok}` in column {what} is not a number"),
        })
}

const DATETIME_FORMATS: [&str; 6] = [
    "%Y-%m-%d %H:%M:%S",
    "%Y-%m-%dT%H:%M:%S",
    "%m/%d/%Y %I:%M:%S %p",
    "%m/%d/%Y %H:%M:%S",
    "%m/%d/%y %I:%M:%S %p",
    "%m/%d/%y %H:%M:%S",
];

/// Seconds since the epoch for a wall-clock string; zone-less forms are
/// read as UTC.
fn parse_datetime(s: &str) -> Option<f64> {
    let s = s.trim();
    if let Ok(dt) = DateTime::parse_from_rfc3339(s) {
        return Some(dt.timestamp() as f64);
    }
    if let Ok(dt) = DateTime::parse_from_str(s, "%Y-%m-%dT%H:%M:%S%z") {
        return Some(dt.timestamp() as f64);
    }
    DATETIME_FORMATS
        .iter()
        .find_map(|f| NaiveDateTime::parse_from_str(s, f).ok())
        .map(|dt| dt.and_utc().timestamp() as f64)
}

const VMSTAT_COLUMNS: [(&str, &str); 15] = [
    ("r", "procs_runnable"),
    ("b", "procs_blocked"),
    ("free", "mem_free"),
    ("buff", "mem_buff"),
    ("cache", "mem_cache"),
    ("si", "swap_in"),
    ("so", "swap_out"),
    ("bi", "blocks_in"),
    ("bo", "blocks_out"),
    ("in", "interrupts"),
    ("cs", "context_switches"),
    ("us", "cpu_user"),
    ("sy", "cpu_sys"),
    ("id", "cpu_idle"),
    ("wa", "cpu_wait"),
];

/// Parses `vmstat [-t] <interval>` output. Columns are located from the
/// header, which may repeat. Without `-t`, row `i` is stamped `i·interval`.
pub fn parse_vmstat(text: &str, interval: f64) -> Result<Vec<ToolRecord>> {
    let mut header: Option<(Vec<String>, bool)> = None;
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with("procs") {
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks[0] == "r" {
            let cols: Vec<String> = toks.iter().map(|t| t.to_string()).collect();
            let missing: Vec<&str> = VMSTAT_COLUMNS
                .iter()
                .filter(|(c, _)| !cols.iter().any(|h| h == c))
                .map(|(c, _)| *c)
                .collect();
            if !missing.is_empty() {
                return Err(Error::Schema(format!(
                    "line {lineno}: vmstat header lacks column(s) {}",
                    missing.join(", ")
                )));
            }
            let n_time = cols.len()
                - cols.iter().take_while(|c| c.chars().all(|ch| ch.is_ascii_lowercase())).count();
            header = Some((cols, n_time > 0));
            continue;
        }
        let Some((cols, timed)) = &header else {
            return Err(Error::Schema(format!(
                "line {lineno}: data before any vmstat header"
            )));
        };
        let n_num = if *timed { cols.len() - 1 } else { cols.len() };
        if toks.len() < n_num {
            return Err(Error::Parse {
                line: lineno,
                msg: format!("expected {n_num} columns, found {}", toks.len()),
            });
        }
        let mut values = BTreeMap::new();
        for (c, name) in VMSTAT_COLUMNS {
            let j = cols.iter().position(|h| h == c).expect("checked above");
            values.insert(name.to_string(), parse_num(toks[j], lineno, c)?);
        }
        let timestamp = if *timed {
            let stamp = toks[n_num..].join(" ");
            parse_datetime(&stamp).ok_or_else(|| Error::Parse {
                line: lineno,
                msg: format!("unreadable timestamp `{stamp}`"),
            })?
        } else {
            out.len() as f64 * interval
        };
        out.push(ToolRecord {
            tool: Tool::Vmstat,
            timestamp,
            values,
            rates: true,
        });
    }
    Ok(out)
}

/// Parses `iostat [-t] -k <interval>` output. Each report yields one
/// record: device throughput summed over all devices plus the `avg-cpu`
/// percentages under `avg_cpu_*` names.
pub fn parse_iostat(text: &str, interval: f64) -> Result<Vec<ToolRecord>> {
    enum Section {
        None,
        Cpu(Vec<String>),
        Device { tps: usize, read: (usize, f64), wrtn: (usize, f64) },
    }
    let mut out = Vec::new();
    let mut section = Section::None;
    let mut pending_time: Option<f64> = None;
    let mut current: Option<BTreeMap<String, f64>> = None;
    let mut stamp_of_current: Option<f64> = None;

    let flush = |out: &mut Vec<ToolRecord>, values: Option<BTreeMap<String, f64>>, stamp: Option<f64>| {
        if let Some(values) = values {
            if values.contains_key("tps") {
                let timestamp = stamp.unwrap_or(out.len() as f64 * interval);
                out.push(ToolRecord {
                    tool: Tool::Iostat,
                    timestamp,
                    values,
                    rates: true,
                });
            }
        }
    };

    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            if matches!(section, Section::Device { .. }) {
                flush(&mut out, current.take(), stamp_of_current.take());
            }
            section = Section::None;
            continue;
        }
        if line.starts_with("Linux") {
            continue;
        }
        if let Some(rest) = line.strip_prefix("avg-cpu:") {
            if current.as_ref().is_some_and(|c| c.contains_key("tps")) {
                flush(&mut out, current.take(), stamp_of_current.take());
            }
            let cols = rest
                .split_whitespace()
                .map(|c| format!("avg_cpu_{}", c.trim_start_matches('%')))
                .collect();
            current.get_or_insert_with(BTreeMap::new);
            if stamp_of_current.is_none() {
                stamp_of_current = pending_time.take();
            }
            section = Section::Cpu(cols);
            continue;
        }
        if line.starts_with("Device") {
            let cols: Vec<&str> = line.split_whitespace().skip(1).collect();
            let find = |names: &[&str]| cols.iter().position(|c| names.contains(c));
            let unit = |j: usize| if cols[j].starts_with("MB") { 1024.0 } else { 1.0 };
            let (Some(tps), Some(read), Some(wrtn)) = (
                find(&["tps"]),
                find(&["kB_read/s", "MB_read/s"]),
                find(&["kB_wrtn/s", "MB_wrtn/s"]),
            ) else {
                return Err(Error::Schema(format!(
                    "line {lineno}: iostat device header lacks tps/read/wrtn columns"
                )));
            };
            let mut vals = current.take().unwrap_or_default();
            for k in ["tps", "kb_read_per_s", "kb_wrtn_per_s"] {
                vals.insert(k.into(), 0.0);
            }
            current = Some(vals);
            if stamp_of_current.is_none() {
                stamp_of_current = pending_time.take();
            }
            section = Section::Device {
                tps,
                read: (read, unit(read)),
                wrtn: (wrtn, unit(wrtn)),
            };
            continue;
        }
        match &section {
            Section::Cpu(cols) => {
                let toks: Vec<&str> = line.split_whitespace().collect();
                if toks.len() != cols.len() {
                    return Err(Error::Parse {
                        line: lineno,
                        msg: format!("avg-cpu row has {} fields, header has {}", toks.len(), cols.len()),
                    });
                }
                let vals = current.get_or_insert_with(BTreeMap::new);
                for (c, t) in cols.iter().zip(toks) {
                    vals.insert(c.clone(), parse_num(t, lineno, c)?);
                }
                section = Section::None;
            }
            Section::Device { tps, read, wrtn } => {
                let toks: Vec<&str> = line.split_whitespace().skip(1).collect();
                let need = 1 + *tps.max(&read.0).max(&wrtn.0);
                if toks.len() < need {
                    return Err(Error::Parse {
                        line: lineno,
                        msg: format!("device row has {} fields, expected at least {need}", toks.len()),
                    });
                }
                let vals = current.as_mut().expect("set with the header");
                *vals.get_mut("tps").expect("seeded") += parse_num(toks[*tps], lineno, "tps")?;
                *vals.get_mut("kb_read_per_s").expect("seeded") +=
                    read.1 * parse_num(toks[read.0], lineno, "read/s")?;
                *vals.get_mut("kb_wrtn_per_s").expect("seeded") +=
                    wrtn.1 * parse_num(toks[wrtn.0], lineno, "wrtn/s")?;
            }
            Section::None => {
                if let Some(t) = parse_datetime(line) {
                    if current.is_some() {
                        flush(&mut out, current.take(), stamp_of_current.take());
                    }
                    pending_time = Some(t);
                } else {
                    return Err(Error::Parse {
                        line: lineno,
                        msg: format!("unexpected line `{line}`"),
                    });
                }
            }
        }
    }
    flush(&mut out, current.take(), stamp_of_current.take());
    Ok(out)
}

/// `(section, phrases, feature)` for the counters read from `netstat -s`.
/// Older net-tools spell two of the phrases differently.
const NETSTAT_COUNTERS: [(&str, &[&str], &str); 6] = [
    ("Tcp", &["segments received"], "tcp_segments_in"),
    ("Tcp", &["segments sent out", "segments send out"], "tcp_segments_out"),
    ("Tcp", &["segments retransmitted", "segments retransmited"], "tcp_retransmits"),
    ("Udp", &["packets received"], "udp_in"),
    ("Udp", &["packets sent"], "udp_out"),
    ("Udp", &["packet receive errors"], "udp_errors"),
];

#[derive(Debug)]
struct Snapshot {
    line: usize,
    time: Option<f64>,
    counters: BTreeMap<&'static str, f64>,
}

fn parse_timestamp_line(line: &str) -> Option<f64> {
    if let Ok(v) = line.parse::<f64>() {
        return v.is_finite().then_some(v);
    }
    parse_datetime(line)
}

/// Parses consecutive `netstat -s` snapshots. A snapshot starts at its
/// `Ip:` section, optionally preceded by a timestamp line (epoch seconds or
/// a date such as `date -Is` prints). Without timestamps snapshot `i` is
/// at `i·interval`. Each later snapshot yields per-second rates over the
/// preceding interval.
pub fn parse_netstat(text: &str, interval: f64) -> Result<Vec<ToolRecord>> {
    let mut snaps: Vec<Snapshot> = Vec::new();
    let mut pending_time = None;
    let mut section = String::new();
    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let indented = raw.starts_with(' ') || raw.starts_with('\t');
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if !indented {
            if let Some(name) = line.strip_suffix(':') {
                if name == "Ip" || snaps.is_empty() {
                    snaps.push(Snapshot {
                        line: lineno,
                        time: pending_time.take(),
                        counters: BTreeMap::new(),
                    });
                }
                section = name.to_string();
                continue;
            }
            if let Some(t) = parse_timestamp_line(line) {
                pending_time = Some(t);
                continue;
            }
            return Err(Error::Parse {
                line: lineno,
                msg: format!("unexpected line `{line}`"),
            });
        }
        let Some(snap) = snaps.last_mut() else {
            return Err(Error::Parse {
                line: lineno,
                msg: "counter outside any section".into(),
            });
        };
        let Some((first, rest)) = line.split_once(char::is_whitespace) else {
            continue;
        };
        let Ok(value) = first.parse::<f64>() else {
            continue;
        };
        let rest = rest.trim();
        for (sec, phrases, feature) in NETSTAT_COUNTERS {
            if section == sec && phrases.contains(&rest) {
                snap.counters.insert(feature, value);
            }
        }
    }

    let mut out = Vec::with_capacity(snaps.len());
    let stamp = |i: usize, s: &Snapshot| s.time.unwrap_or(i as f64 * interval);
    for (i, s) in snaps.iter().enumerate() {
        let mut values: BTreeMap<String, f64> = s
            .counters
            .iter()
            .map(|(k, v)| (format!("{k}_total"), *v))
            .collect();
        let t = stamp(i, s);
        let mut rates = false;
        if i > 0 {
            let prev = &snaps[i - 1];
            let dt = t - stamp(i - 1, prev);
            if !(dt > 0.0) {
                return Err(Error::Parse {
                    line: s.line,
                    msg: format!("snapshot time does not advance (dt = {dt})"),
                });
            }
            for (k, v) in &s.counters {
                if let Some(p) = prev.counters.get(k) {
                    if v < p {
                        return Err(Error::Parse {
                            line: s.line,
                            msg: format!("counter {k} decreased from {p} to {v}"),
                        });
                    }
                    values.insert(k.to_string(), (v - p) / dt);
                }
            }
            rates = true;
        }
        out.push(ToolRecord {
            tool: Tool::Netstat,
            timestamp: t,
            values,
            rates,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Assembly {
    pub frames: Vec<KpiFrame>,
    /// Windows that had records from some tools but not all three.
    pub dropped: usize,
}

/// Buckets records into `frame_duration` windows starting at the earliest
/// timestamp and averages each tool's records per window. Netstat records
/// without rates are ignored.
pub fn assemble_frames(
    vmstat: &[ToolRecord],
    iostat: &[ToolRecord],
    netstat: &[ToolRecord],
    frame_duration: f64,
) -> Result<Assembly> {
    if !(frame_duration > 0.0) {
        return Err(Error::Config(format!("frame_duration must be > 0, got {frame_duration}")));
    }
    let tools = [vmstat, iostat, netstat];
    let mut spans = [(0.0, 0.0); 3];
    for (ti, recs) in tools.iter().enumerate() {
        let mut ts = recs.iter().filter(|r| r.rates).map(|r| r.timestamp);
        let Some(first) = ts.next() else {
            return Err(Error::Domain(format!("no usable {} records", Tool::ALL[ti].name())));
        };
        spans[ti] = ts.fold((first, first), |(lo, hi), t| (lo.min(t), hi.max(t)));
    }
    let lo = spans.iter().map(|s| s.0).fold(f64::NEG_INFINITY, f64::max);
    let hi = spans.iter().map(|s| s.1).fold(f64::INFINITY, f64::min);
    if lo > hi {
        let desc: Vec<String> = spans
            .iter()
            .zip(Tool::ALL)
            .map(|((lo, hi), t)| format!("{} {lo}..{hi}", t.name()))
            .collect();
        return Err(Error::Domain(format!("tool clocks do not overlap: {}", desc.join(", "))));
    }
    let t0 = spans.iter().map(|s| s.0).fold(f64::INFINITY, f64::min);

    let mut sums: BTreeMap<u64, [(Vec<f64>, usize); 3]> = BTreeMap::new();
    for (ti, recs) in tools.into_iter().enumerate() {
        for r in recs.iter().filter(|r| r.rates) {
            let w = ((r.timestamp - t0) / frame_duration).floor() as u64;
            let slot = &mut sums
                .entry(w)
                .or_insert_with(|| std::array::from_fn(|_| (vec![0.0; FEATURES.len()], 0)))[ti];
            for (j, f) in FEATURES.iter().enumerate() {
                if f.tool == Tool::ALL[ti] {
                    let v = r.values.get(f.name).ok_or_else(|| {
                        Error::Schema(format!("{} record at t={} lacks {}", f.tool.name(), r.timestamp, f.name))
                    })?;
                    slot.0[j] += v;
                }
            }
            slot.1 += 1;
        }
    }
    let mut frames = Vec::new();
    let mut dropped = 0;
    for (w, tools) in sums {
        if tools.iter().any(|(_, n)| *n == 0) {
            dropped += 1;
            continue;
        }
        let mut features = vec![0.0; FEATURES.len()];
        for (ti, (s, n)) in tools.iter().enumerate() {
            for (j, f) in FEATURES.iter().enumerate() {
                if f.tool == Tool::ALL[ti] {
                    features[j] = s[j] / *n as f64;
                }
            }
        }
        frames.push(KpiFrame::new(t0 + w as f64 * frame_duration, frame_duration, features)?);
    }
    if frames.is_empty() {
        return Err(Error::Domain(format!(
            "no complete frames: all {dropped} window(s) lack data from some tool"
        )));
    }
    Ok(Assembly { frames, dropped })
}

/// Reads a client-side `timestamp,rtt_ms` CSV. Timestamps are epoch
/// seconds or a wall-clock string.
pub fn parse_rtt_csv(text: &str) -> Result<Vec<(f64, f64)>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = rdr.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["timestamp", "rtt_ms"] {
        return Err(Error::Format("RTT CSV header must be `timestamp,rtt_ms`".into()));
    }
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        if rec.len() != 2 {
            return Err(Error::Parse {
                line,
                msg: format!("expected 2 fields, found {}", rec.len()),
            });
        }
        let t = match parse_datetime(&rec[0]) {
            Some(t) => t,
            None => parse_num(&rec[0], line, "timestamp")?,
        };
        let rtt = parse_num(&rec[1], line, "rtt_ms")?;
        if !(rtt > 0.0) {
            return Err(Error::Parse {
                line,
                msg: format!("rtt must be > 0, got {rtt}"),
            });
        }
        out.push((t, rtt));
    }
    Ok(out)
}

/// Pairs each frame with the mean RTT of the samples inside its window.
/// Frames without samples are dropped; the second value counts them.
pub fn attach_rtt(frames: &[KpiFrame], samples: &[(f64, f64)]) -> Result<(Vec<(KpiFrame, FrameRtt)>, usize)> {
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out = Vec::new();
    let mut dropped = 0;
    for f in frames {
        let lo = sorted.partition_point(|s| s.0 < f.frame_start);
        let hi = sorted.partition_point(|s| s.0 < f.frame_start + f.frame_duration);
        if hi == lo {
            dropped += 1;
            continue;
        }
        let mean = sorted[lo..hi].iter().map(|s| s.1).sum::<f64>() / (hi - lo) as f64;
        out.push((f.clone(), FrameRtt::new(f.frame_start, mean, hi - lo)?));
    }
    Ok((out, dropped))
}

fn label_name(l: Label) -> &'static str {
    match l {
        Label::Anomalous => "anomalous",
        Label::NonAnomalous => "non-anomalous",
    }
}

fn dataset_header(schema: &FeatureSchema) -> Vec<String> {
    ["schema_version", "frame_start", "scenario_kind", "scenario_level", "avg_rtt_ms", "label"]
        .iter()
        .map(|s| s.to_string())
        .chain(schema.names.iter().cloned())
        .collect()
}

/// Serialises a dataset. Floats use the shortest representation that
/// parses back to the same value.
pub fn dataset_to_csv(ds: &LabeledDataset) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(dataset_header(&ds.schema))?;
    for r in &ds.rows {
        ds.schema.check_len(r.features.len())?;
        let mut rec = vec![
            ds.schema.version.clone(),
            r.frame_start.to_string(),
            r.scenario.kind().to_string(),
            r.scenario.level().to_string(),
            r.avg_rtt.to_string(),
            label_name(r.label).to_string(),
        ];
        rec.extend(r.features.iter().map(|v| v.to_string()));
        w.write_record(&rec)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::Format(format!("csv flush: {e}")))?;
    String::from_utf8(bytes).map_err(|e| Error::Format(e.to_string()))
}

pub fn dataset_from_csv(text: &str) -> Result<LabeledDataset> {
    let schema = FeatureSchema::canonical();
    let expected = dataset_header(&schema);
    let mut rdr = csv::ReaderBuilder::new()
        .flexible(true)
        .from_reader(text.as_bytes());
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if header.len() != expected.len() {
        return Err(Error::Format(format!(
            "dataset header has {} columns, expected {}",
            header.len(),
            expected.len()
        )));
    }
    if header != expected {
        return Err(Error::Schema("dataset header does not match the feature schema".into()));
    }
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = i + 1;
        if rec.len() != expected.len() {
            return Err(Error::Format(format!(
                "row {row} has {} columns, expected {}",
                rec.len(),
                expected.len()
            )));
        }
        if &rec[0] != SCHEMA_VERSION {
            return Err(Error::Version {
                expected: SCHEMA_VERSION.into(),
                found: rec[0].to_string(),
            });
        }
        let num = |j: usize| -> Result<f64> {
            rec[j]
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::Format(format!("row {row}, column {}: `{}` is not a finite number", expected[j], &rec[j])))
        };
        let kind: StressorKind = rec[2].parse()?;
        let level: StressLevel = rec[3].parse()?;
        let label = match &rec[5] {
            "anomalous" => Label::Anomalous,
            "non-anomalous" => Label::NonAnomalous,
            other => return Err(Error::Format(format!("row {row}: unknown label `{other}`"))),
        };
        let features = (6..expected.len()).map(num).collect::<Result<Vec<_>>>()?;
        rows.push(DatasetRow {
            frame_start: num(1)?,
            scenario: ScenarioId::new(kind, level)?,
            avg_rtt: num(4)?,
            label,
            features,
        });
    }
    Ok(LabeledDataset { schema, rows })
}

/// Writes via a sibling temporary file and a rename, so readers never see
/// a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let tmp = path.with_file_name(format!(".{name}.tmp{}", std::process::id()));
    let write = || -> std::io::Result<()> {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    };
    write().map_err(|e| {
        let _ = fs::remove_file(&tmp);
        Error::io(path, e)
    })
}

pub fn read_text(path: &Path, producer: &'static str) -> Result<String> {
    match fs::read_to_string(path) {
        Ok(s) => Ok(s),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Err(Error::MissingArtifact {
            path: path.to_path_buf(),
            producer,
        }),
        Err(e) => Err(Error::io(path, e)),
    }
}

pub fn write_dataset(ds: &LabeledDataset, path: &Path) -> Result<()> {
    write_atomic(path, dataset_to_csv(ds)?.as_bytes())
}

pub fn read_dataset(path: &Path) -> Result<LabeledDataset> {
    dataset_from_csv(&read_text(path, "generate")?)
}

#[cfg(test)]
mod tests {
    use super::*;

    const VMSTAT: &str = "\
procs -----------memory---------- ---swap-- -----io---- -system-- ------cpu-----
 r  b   swpd   free   buff  cache   si   so    bi    bo   in   cs us sy id wa st
 1  0      0 1210044   4212 982140    0    0     2    45 5214 9812 18 11 70  1  0
 2  0      0 1209876   4212 982188    0    0     0    52 5301 9977 19 11 70  0  0
";

    #[test]
    fn vmstat_rows() {
        let recs = parse_vmstat(VMSTAT, 2.0).unwrap();
        assert_eq!(recs.len(), 2);
        assert_eq!(recs[0].values["mem_free"], 1210044.0);
        assert_eq!(recs[1].values["context_switches"], 9977.0);
        assert_eq!(recs[1].timestamp, 2.0);
        assert!(parse_vmstat("", 2.0).unwrap().is_empty());
    }

    #[test]
    fn vmstat_garbage_names_line() {
        let bad = VMSTAT.replace("5301", "53x1");
        match parse_vmstat(&bad, 2.0) {
            Err(Error::Parse { line, msg }) => {
                assert_eq!(line, 4);
                assert!(msg.contains("in"), "{msg}");
            }
            other => panic!("{other:?}"),
        }
        let bad_header = VMSTAT.replace(" cs ", " xx ");
        assert!(matches!(parse_vmstat(&bad_header, 2.0), Err(Error::Schema(_))));
    }

    #[test]
    fn netstat_rate_arithmetic() {
        let snap = |t: u64, seg: u64| {
            format!("{t}\nIp:\n    10 total packets received\nTcp:\n    {seg} segments received\n    5 segments sent out\n    0 segments retransmitted\nUdp:\n    7 packets received\n    7 packets sent\n    0 packet receive errors\n")
        };
        let text = snap(100, 1000) + &snap(106, 1600);
        let recs = parse_netstat(&text, 6.0).unwrap();
        assert_eq!(recs.len(), 2);
        assert!(!recs[0].rates);
        assert!(!recs[0].values.contains_key("tcp_segments_in"));
        assert_eq!(recs[0].values["tcp_segments_in_total"], 1000.0);
        assert!(recs[1].rates);
        assert_eq!(recs[1].values["tcp_segments_in"], 100.0);
        assert_eq!(recs[1].timestamp, 106.0);
    }

    fn rec(tool: Tool, t: f64) -> ToolRecord {
        let values = FEATURES
            .iter()
            .filter(|f| f.tool == tool)
            .map(|f| (f.name.to_string(), t))
            .collect();
        ToolRecord {
            tool,
            timestamp: t,
            values,
            rates: true,
        }
    }

    #[test]
    fn assembly_averages_and_drops() {
        let vm: Vec<_> = [0.0, 2.0, 4.0, 6.0].map(|t| rec(Tool::Vmstat, t)).to_vec();
        let io: Vec<_> = [0.0, 2.0, 4.0].map(|t| rec(Tool::Iostat, t)).to_vec();
        let ns = vec![rec(Tool::Netstat, 3.0)];
        let a = assemble_frames(&vm, &io, &ns, 6.0).unwrap();
        assert_eq!(a.frames.len(), 1);
        assert_eq!(a.dropped, 1);
        assert_eq!(a.frames[0].get("cpu_user"), Some(2.0));
        assert_eq!(a.frames[0].get("tcp_segments_in"), Some(3.0));
        assert!(assemble_frames(&vm, &[], &ns, 6.0).is_err());
        // An untimed capture next to epoch-stamped ones.
        let late = vec![rec(Tool::Netstat, 1.7e9)];
        let err = assemble_frames(&vm, &io, &late, 6.0).unwrap_err();
        assert!(err.to_string().contains("do not overlap"), "{err}");
    }

    #[test]
    fn sixty_seconds_at_two_second_cadence() {
        let ts: Vec<f64> = (0..30).map(|i| 2.0 * i as f64).collect();
        let vm: Vec<_> = ts.iter().map(|t| rec(Tool::Vmstat, *t)).collect();
        let io: Vec<_> = ts.iter().map(|t| rec(Tool::Iostat, *t)).collect();
        let ns: Vec<_> = ts.iter().map(|t| rec(Tool::Netstat, *t)).collect();
        let a = assemble_frames(&vm, &io, &ns, 6.0).unwrap();
        assert_eq!(a.frames.len(), 10);
        assert_eq!(a.dropped, 0);
    }

    fn dataset() -> LabeledDataset {
        let rows = (0..100)
            .map(|i| DatasetRow {
                frame_start: 6.0 * i as f64,
                scenario: ScenarioId::new(StressorKind::Udp, StressLevel::High).unwrap(),
                avg_rtt: 4.675 + 0.1 / (i as f64 + 3.0),
                label: Label::from_index(i % 2),
                features: (0..FEATURES.len()).map(|j| (i * j) as f64 / 7.0 + 1e-9).collect(),
            })
            .collect();
        LabeledDataset::new(rows)
    }

    #[test]
    fn dataset_round_trip_and_errors() {
        let ds = dataset();
        let text = dataset_to_csv(&ds).unwrap();
        assert!(text.starts_with("schema_version,frame_start,scenario_kind,scenario_level,avg_rtt_ms,label,procs_runnable,"));
        assert_eq!(dataset_from_csv(&text).unwrap(), ds);

        let wrong = text.replace("\nkpi-v1,", "\nkpi-v0,");
        assert!(matches!(dataset_from_csv(&wrong), Err(Error::Version { .. })));

        let mut lines: Vec<String> = text.lines().map(String::from).collect();
        let mut cells: Vec<&str> = lines[3].split(',').collect();
        cells[10] = "NaN";
        lines[3] = cells.join(",");
        match dataset_from_csv(&lines.join("\n")) {
            Err(Error::Format(m)) => assert!(m.contains("row 3"), "{m}"),
            other => panic!("{other:?}"),
        }
        let short: String = text
            .lines()
            .enumerate()
            .map(|(i, l)| if i == 1 { l.rsplit_once(',').unwrap().0.to_string() } else { l.to_string() })
            .collect::<Vec<_>>()
            .join("\n");
        assert!(matches!(dataset_from_csv(&short), Err(Error::Format(_))));
    }

    #[test]
    fn rtt_attachment() {
        let f = |t| KpiFrame::new(t, 6.0, vec![0.0; FEATURES.len()]).unwrap();
        let frames = vec![f(0.0), f(6.0), f(12.0)];
        let samples = parse_rtt_csv("timestamp,rtt_ms\n0.5,4\n5.9,6\n13,9\n").unwrap();
        let (pairs, dropped) = attach_rtt(&frames, &samples).unwrap();
        assert_eq!(dropped, 1);
        assert_eq!(pairs[0].1.avg_rtt, 5.0);
        assert_eq!(pairs[1].1.sample_count, 1);
        assert!(parse_rtt_csv("t,r\n1,2\n").is_err());
    }
}
