//! CSV files written by a batch.
//!
//! | file               | one row per                                            |
//! |--------------------|--------------------------------------------------------|
//! | `episodes.csv`     | episode, columns as [`EPISODE_COLUMNS`]                |
//! | `summary.csv`      | (ratio, kind, malicious fraction, weighting, w_max)    |
//! | `plot_<pm>.csv`    | (weighting, w_max, malicious fraction) for measure pm  |
//! | `significance.csv` | weighting pair × measure × malicious fraction          |
//! | `trace.csv`        | agent × step, only when tracing                        |
//!
//! Undefined values are written as empty fields.

use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use thiserror::Error;

use super::batch::{EpisodeRow, TraceRow};
use super::summary::{plot_points, significance, summarize, SummaryRow, MEASURES};

pub const EPISODE_COLUMNS: [&str; 24] = [
    "index",
    "ratio",
    "kind",
    "malicious_fraction",
    "weighting",
    "w_max",
    "repetition",
    "seed",
    "correct_opinion",
    "wall_steps",
    "forced",
    "pm1_1",
    "pm1_2",
    "pm2_1",
    "pm2_2",
    "pm2_3",
    "pm3_1",
    "pm3_2",
    "pm4_1",
    "pm4_2",
    "tp",
    "fp",
    "tn",
    "fn",
];

pub const TRACE_COLUMNS: [&str; 11] = [
    "episode",
    "step",
    "agent",
    "role",
    "x",
    "y",
    "heading",
    "observations",
    "white",
    "gamma",
    "committed",
];

#[derive(Debug, Error)]
pub enum OutputError {
    #[error("{path}: {error}")]
    Io {
        path: PathBuf,
        error: std::io::Error,
    },
    #[error("{path}: {error}")]
    Csv { path: PathBuf, error: csv::Error },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> OutputError + '_ {
    move |error| OutputError::Io {
        path: path.to_path_buf(),
        error,
    }
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> OutputError + '_ {
    move |error| OutputError::Csv {
        path: path.to_path_buf(),
        error,
    }
}

fn writer(path: &Path, header: &[&str]) -> Result<csv::Writer<File>, OutputError> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(file);
    w.write_record(header).map_err(csv_err(path))?;
    Ok(w)
}

fn finish<W: Write>(mut w: csv::Writer<W>, path: &Path) -> Result<(), OutputError> {
    w.flush().map_err(io_err(path))
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_episodes(rows: &[EpisodeRow], path: &Path) -> Result<(), OutputError> {
    let mut w = writer(path, &EPISODE_COLUMNS)?;
    for r in rows {
        w.serialize(r).map_err(csv_err(path))?;
    }
    finish(w, path)
}

pub fn read_episodes(path: &Path) -> Result<Vec<EpisodeRow>, OutputError> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
    r.deserialize()
        .collect::<Result<_, _>>()
        .map_err(csv_err(path))
}

fn summary_header() -> Vec<String> {
    let mut h: Vec<String> = [
        "ratio",
        "kind",
        "malicious_fraction",
        "weighting",
        "w_max",
        "n",
    ]
    .map(String::from)
    .to_vec();
    for m in MEASURES {
        h.push(format!("{m}_mean"));
        h.push(format!("{m}_std"));
    }
    h
}

pub fn write_summary(rows: &[SummaryRow], path: &Path) -> Result<(), OutputError> {
    let header = summary_header();
    let mut w = writer(path, &header.iter().map(String::as_str).collect::<Vec<_>>())?;
    for s in rows {
        let mut rec = vec![
            s.ratio.to_string(),
            s.kind.clone(),
            s.malicious_fraction.to_string(),
            s.weighting.clone(),
            s.w_max.to_string(),
            s.n.to_string(),
        ];
        for st in &s.stats {
            rec.push(opt(st.mean));
            rec.push(opt(st.std));
        }
        w.write_record(&rec).map_err(csv_err(path))?;
    }
    finish(w, path)
}

/// Writes every derived file (summary, plot data, significance) for `rows`
/// into `dir` and returns the summary.
pub fn write_derived(rows: &[EpisodeRow], dir: &Path) -> Result<Vec<SummaryRow>, OutputError> {
    let summary = summarize(rows).unwrap_or_default();
    write_summary(&summary, &dir.join("summary.csv"))?;

    for m in MEASURES {
        let path = dir.join(format!("plot_{m}.csv"));
        let mut w = writer(
            &path,
            &["label", "weighting", "w_max", "x", "mean", "std", "n"],
        )?;
        for p in plot_points(rows, m) {
            w.write_record([
                p.label,
                p.weighting,
                p.w_max.to_string(),
                p.x.to_string(),
                opt(p.mean),
                opt(p.std),
                p.n.to_string(),
            ])
            .map_err(csv_err(&path))?;
        }
        finish(w, &path)?;
    }

    let path = dir.join("significance.csv");
    let mut w = writer(
        &path,
        &[
            "measure",
            "group_a",
            "group_b",
            "malicious_fraction",
            "n_a",
            "n_b",
            "t",
            "df",
            "p_value",
        ],
    )?;
    for c in significance(rows) {
        w.write_record([
            c.measure,
            c.group_a,
            c.group_b,
            c.malicious_fraction,
            c.n_a.to_string(),
            c.n_b.to_string(),
            opt(c.t),
            opt(c.df),
            opt(c.p_value),
        ])
        .map_err(csv_err(&path))?;
    }
    finish(w, &path)?;
    Ok(summary)
}

/// Writes `episodes.csv` and every derived file into `dir`, creating it if
/// needed. Re-emitting the same rows produces byte-identical files.
pub fn emit(rows: &[EpisodeRow], dir: &Path) -> Result<Vec<SummaryRow>, OutputError> {
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    write_episodes(rows, &dir.join("episodes.csv"))?;
    write_derived(rows, dir)
}

/// Streaming writer for `trace.csv`.
pub struct TraceWriter {
    path: PathBuf,
    inner: csv::Writer<std::io::BufWriter<File>>,
}

impl TraceWriter {
    pub fn create(path: &Path) -> Result<Self, OutputError> {
        let file = File::create(path).map_err(io_err(path))?;
        let mut inner = csv::WriterBuilder::new()
            .has_headers(false)
            .from_writer(std::io::BufWriter::new(file));
        inner.write_record(TRACE_COLUMNS).map_err(csv_err(path))?;
        Ok(TraceWriter {
            path: path.to_path_buf(),
            inner,
        })
    }

    pub fn write(&mut self, rows: &[TraceRow]) -> Result<(), OutputError> {
        for r in rows {
            self.inner.serialize(r).map_err(csv_err(&self.path))?;
        }
        Ok(())
    }

    pub fn finish(mut self) -> Result<(), OutputError> {
        self.inner.flush().map_err(io_err(&self.path))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::batch::run_batch;
    use crate::harness::config::parse_config;

    fn rows() -> Vec<EpisodeRow> {
        let c = parse_config(
            "name = \"o\"\nrepetitions = 3\nratios = [0.6]\nmalicious_fractions = [0.0, 0.25]\n\
             [scenario]\nlength = 14\nagents = 4\nt_max = 60\n\
             [[weighting]]\nmethod = \"static\"\nw_max = 0.4\n\
             [[weighting]]\nmethod = \"equation\"\nw_max = 0.4\n",
            "o",
        )
        .unwrap();
        run_batch(&c, 1).unwrap()
    }

    #[test]
    fn header_matches_struct() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("e.csv");
        let r = rows();
        write_episodes(&r[..1], &path).unwrap();
        let mut rd = csv::Reader::from_path(&path).unwrap();
        let header: Vec<String> = rd.headers().unwrap().iter().map(String::from).collect();
        assert_eq!(header, EPISODE_COLUMNS);
        // Serialised field order must match the declared header.
        let mut buf = csv::Writer::from_writer(Vec::new());
        buf.serialize(&r[0]).unwrap();
        let text = String::from_utf8(buf.into_inner().unwrap()).unwrap();
        assert_eq!(text.lines().next().unwrap(), EPISODE_COLUMNS.join(","));
    }

    #[test]
    fn round_trip_and_idempotent() {
        let dir = tempfile::tempdir().unwrap();
        let r = rows();
        let summary = emit(&r, dir.path()).unwrap();
        let back = read_episodes(&dir.path().join("episodes.csv")).unwrap();
        assert_eq!(back, r);

        let snapshot: Vec<Vec<u8>> = [
            "episodes.csv",
            "summary.csv",
            "plot_pm3_1.csv",
            "significance.csv",
        ]
        .iter()
        .map(|f| std::fs::read(dir.path().join(f)).unwrap())
        .collect();
        emit(&back, dir.path()).unwrap();
        for (f, before) in [
            "episodes.csv",
            "summary.csv",
            "plot_pm3_1.csv",
            "significance.csv",
        ]
        .iter()
        .zip(snapshot)
        {
            assert_eq!(std::fs::read(dir.path().join(f)).unwrap(), before, "{f}");
        }

        // Summary means are reconstructible from the episode file.
        let mut rd = csv::Reader::from_path(dir.path().join("summary.csv")).unwrap();
        let recs: Vec<csv::StringRecord> = rd.records().map(Result::unwrap).collect();
        assert_eq!(recs.len(), summary.len());
        for (rec, s) in recs.iter().zip(&summary) {
            let members: Vec<&EpisodeRow> = back
                .iter()
                .filter(|e| {
                    e.weighting == s.weighting
                        && e.malicious_fraction == s.malicious_fraction
                        && e.kind == s.kind
                        && e.ratio == s.ratio
                })
                .collect();
            let expect = members.iter().map(|e| e.pm3_2).sum::<f64>() / members.len() as f64;
            let col = 6 + 2 * MEASURES.iter().position(|m| *m == "pm3_2").unwrap();
            let got: f64 = rec[col].parse().unwrap();
            assert!((got - expect).abs() < 1e-9);
        }
    }

    #[test]
    fn empty_batch_writes_headers() {
        let dir = tempfile::tempdir().unwrap();
        emit(&[], dir.path()).unwrap();
        let e = std::fs::read_to_string(dir.path().join("episodes.csv")).unwrap();
        assert_eq!(e.trim_end(), EPISODE_COLUMNS.join(","));
        let s = std::fs::read_to_string(dir.path().join("summary.csv")).unwrap();
        assert_eq!(s.lines().count(), 1);
        let p = std::fs::read_to_string(dir.path().join("plot_pm1_1.csv")).unwrap();
        assert_eq!(p.trim_end(), "label,weighting,w_max,x,mean,std,n");
    }

    #[test]
    fn plot_file_rows_per_configuration() {
        let dir = tempfile::tempdir().unwrap();
        emit(&rows(), dir.path()).unwrap();
        let p = std::fs::read_to_string(dir.path().join("plot_pm3_1.csv")).unwrap();
        // Two weightings x two malicious fractions.
        assert_eq!(p.lines().count(), 1 + 4);
        assert!(p
            .lines()
            .nth(1)
            .unwrap()
            .starts_with("static:0.4,static,0.4,0,"));
    }

    #[test]
    fn trace_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("trace.csv");
        let mut t = TraceWriter::create(&path).unwrap();
        t.write(&[TraceRow {
            episode: 0,
            step: 1,
            agent: 2,
            role: "regular".into(),
            x: 3,
            y: 4,
            heading: "north".into(),
            observations: 1,
            white: 0,
            gamma: 0.5,
            committed: false,
        }])
        .unwrap();
        t.finish().unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(
            text,
            format!(
                "{}\n0,1,2,regular,3,4,north,1,0,0.5,false\n",
                TRACE_COLUMNS.join(",")
            )
        );
    }

    #[test]
    fn unwritable_directory() {
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("f");
        std::fs::write(&file, "x").unwrap();
        assert!(emit(&[], &file.join("sub")).is_err());
    }
}
