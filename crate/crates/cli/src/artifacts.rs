//! Line-delimited JSON artifacts with resumable, order-preserving writes.

use std::collections::{BTreeSet, HashMap};
use std::fs::{self, File, OpenOptions};
use std::hash::Hash;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::Context;
use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::Serialize;

pub const ANALYZED: &str = "analyzed.jsonl";
pub const REWRITES: &str = "rewrites.jsonl";
pub const REWRITES_ANALYZED: &str = "rewrites_analyzed.jsonl";
pub const FIDELITY: &str = "fidelity.jsonl";
pub const FIDELITY_SUMMARY: &str = "fidelity_summary.json";
pub const BROWSING_LOG: &str = "browsing_log.jsonl";
pub const WEEKLY: &str = "weekly.jsonl";
pub const RECOMMENDATIONS: &str = "recommendations.jsonl";
pub const REPORT_JSON: &str = "report.json";
pub const REPORT_MD: &str = "report.md";
pub const FIG_EMOTIONS: &str = "fig2_emotions.csv";
pub const FIG_SCATTER: &str = "fig3_scatter.csv";

pub fn path(dir: &Path, name: &str) -> PathBuf {
    dir.join(name)
}

pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> anyhow::Result<Vec<T>> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    BufReader::new(file)
        .lines()
        .enumerate()
        .filter(|(_, l)| !matches!(l, Ok(s) if s.trim().is_empty()))
        .map(|(i, line)| {
            let line = line.with_context(|| format!("reading {}", path.display()))?;
            serde_json::from_str(&line)
                .with_context(|| format!("{}:{}: malformed record", path.display(), i + 1))
        })
        .collect()
}

/// Reads records up to the first unparseable line, which an interrupted write may leave behind.
fn read_jsonl_prefix<T: DeserializeOwned>(path: &Path) -> anyhow::Result<Vec<T>> {
    if !path.exists() {
        return Ok(Vec::new());
    }
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        match serde_json::from_str(&line) {
            Ok(v) => out.push(v),
            Err(e) => {
                log::warn!("{}:{}: dropping unreadable tail ({e})", path.display(), i + 1);
                break;
            }
        }
    }
    Ok(out)
}

fn encode<T: Serialize>(records: &[T]) -> anyhow::Result<Vec<u8>> {
    let mut buf = Vec::new();
    for r in records {
        serde_json::to_writer(&mut buf, r)?;
        buf.push(b'\n');
    }
    Ok(buf)
}

/// Replaces `path` through a temporary sibling so readers never see a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> anyhow::Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let tmp = path.with_extension("tmp");
    {
        let mut w = BufWriter::new(File::create(&tmp).with_context(|| format!("creating {}", tmp.display()))?);
        w.write_all(bytes)?;
        w.flush()?;
    }
    fs::rename(&tmp, path).with_context(|| format!("replacing {}", path.display()))
}

pub fn write_jsonl<T: Serialize>(path: &Path, records: &[T]) -> anyhow::Result<()> {
    write_atomic(path, &encode(records)?)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    write_atomic(path, s.as_bytes())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> anyhow::Result<T> {
    let raw = fs::read_to_string(path).with_context(|| format!("opening {}", path.display()))?;
    serde_json::from_str(&raw).with_context(|| format!("parsing {}", path.display()))
}

pub fn thread_pool(threads: usize) -> anyhow::Result<rayon::ThreadPool> {
    Ok(rayon::ThreadPoolBuilder::new().num_threads(threads).build()?)
}

/// A keyed batch job whose results are persisted to a line-delimited file.
///
/// Inputs whose `per_input` outputs are already on disk are skipped. New
/// results are appended chunk by chunk from a single writer. On success the
/// file is rewritten sorted by key, so reruns produce identical bytes.
pub struct Resumable<'a, K> {
    pub path: &'a Path,
    pub per_input: usize,
    pub pool: &'a rayon::ThreadPool,
    pub _key: std::marker::PhantomData<K>,
}

impl<'a, K> Resumable<'a, K>
where
    K: Ord + Hash + Clone + Send + Sync + std::fmt::Debug,
{
    pub fn new(path: &'a Path, per_input: usize, pool: &'a rayon::ThreadPool) -> Self {
        Self {
            path,
            per_input,
            pool,
            _key: std::marker::PhantomData,
        }
    }

    pub fn run<I, O, F>(
        &self,
        inputs: &[I],
        key_in: impl Fn(&I) -> K + Sync,
        key_out: impl Fn(&O) -> K,
        work: F,
    ) -> anyhow::Result<Vec<O>>
    where
        I: Sync,
        O: Serialize + DeserializeOwned + Send,
        F: Fn(&I) -> anyhow::Result<Vec<O>> + Sync,
    {
        let wanted: BTreeSet<K> = inputs.iter().map(&key_in).collect();
        let existing: Vec<O> = read_jsonl_prefix(self.path)?;
        let mut counts: HashMap<K, usize> = HashMap::new();
        for r in &existing {
            *counts.entry(key_out(r)).or_default() += 1;
        }
        let mut done: Vec<O> = existing
            .into_iter()
            .filter(|r| {
                let k = key_out(r);
                wanted.contains(&k) && counts.get(&k) == Some(&self.per_input)
            })
            .collect();
        let finished: BTreeSet<K> = done.iter().map(&key_out).collect();
        let pending: Vec<&I> = inputs.iter().filter(|i| !finished.contains(&key_in(i))).collect();
        if !finished.is_empty() {
            log::info!(
                "{}: {} finished, {} pending",
                self.path.display(),
                finished.len(),
                pending.len()
            );
        }
        write_jsonl(self.path, &done)?;

        let mut file = OpenOptions::new().append(true).open(self.path)?;
        let chunk = self.pool.current_num_threads() * 4;
        for batch in pending.chunks(chunk.max(1)) {
            let results: Vec<anyhow::Result<Vec<O>>> = self.pool.install(|| {
                batch
                    .par_iter()
                    .map(|i| work(i).with_context(|| format!("item {:?}", key_in(i))))
                    .collect()
            });
            let mut first_err = None;
            let mut fresh = Vec::new();
            for r in results {
                match r {
                    Ok(v) => fresh.extend(v),
                    Err(e) => {
                        first_err.get_or_insert(e);
                    }
                }
            }
            file.write_all(&encode(&fresh)?)?;
            file.flush()?;
            done.extend(fresh);
            if let Some(e) = first_err {
                return Err(e);
            }
        }
        drop(file);
        done.sort_by_key(&key_out);
        write_jsonl(self.path, &done)?;
        Ok(done)
    }
}
