//! Pipeline stages. Each reads its upstream artifacts from the output
//! directory and returns the number of flagged results it produced.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use calmfeed_core::chat::{self, ChatBackend};
use calmfeed_core::classifier::Classifier;
use calmfeed_core::corpus::{load_corpus, sample_balanced, NewsRecord, SamplePlan};
use calmfeed_core::detox::{detoxify, PresentationMode, RewriteBundle};
use calmfeed_core::evaluation::{build_report, emotion_csv, render_markdown, scatter_csv, ConditionSet, Report, ReportInputs};
use calmfeed_core::fidelity::{assess, embedder_from_config, nli_from_config, summarize_fidelity, FidelityRecord, FidelitySummary};
use calmfeed_core::monitor::{
    builtin_personas, bucket_by_week, generate_advice, parse_personas, recommend_mode, simulate_consumers,
    synthetic_week_log, weekly_summary_with, Advice, AdviceStatus, IsoWeek, ModeRecommendation, PersonaProfile,
    WeeklySummary,
};
use calmfeed_core::rng::derive_seed;
use calmfeed_core::{AnalyzedText, Error};
use chrono::{DateTime, TimeZone, Utc};
use serde::{Deserialize, Serialize};

use crate::artifacts::{self, read_json, read_jsonl, thread_pool, write_atomic, write_json, write_jsonl, Resumable};
use crate::config::RunConfig;

pub const CORPUS_STAGE: &str = "corpus";
pub const CONSUMER_STAGE: &str = "consumers";

/// Start of the simulated browsing week (a Monday, so one ISO week).
pub fn simulated_week_start() -> DateTime<Utc> {
    Utc.with_ymd_and_hms(2024, 1, 1, 0, 0, 0).unwrap()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetoxRecord {
    pub text_id: u64,
    #[serde(flatten)]
    pub bundle: RewriteBundle,
}

impl DetoxRecord {
    pub fn flagged(&self) -> bool {
        self.bundle.balanced.status.is_flagged() || self.bundle.cool.status.is_flagged()
    }
}

/// Emotion analysis of both rewrites of one text.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewriteAnalysis {
    pub text_id: u64,
    pub balanced: AnalyzedText,
    pub cool: AnalyzedText,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeeklyRecord {
    pub week: IsoWeek,
    pub summary: WeeklySummary,
    pub advice: Advice,
}

fn out(cfg: &RunConfig, name: &str) -> PathBuf {
    artifacts::path(&cfg.out_dir, name)
}

fn upstream<T: serde::de::DeserializeOwned>(cfg: &RunConfig, name: &str, stage: &str) -> anyhow::Result<Vec<T>> {
    let p = out(cfg, name);
    if !p.exists() {
        return Err(Error::MissingSection(format!("{} (run `calmfeed {stage}` first)", p.display())).into());
    }
    read_jsonl(&p)
}

pub fn analyze(cfg: &RunConfig) -> anyhow::Result<usize> {
    let corpus = cfg
        .corpus_path
        .as_deref()
        .context("no corpus configured; set corpus_path or pass --corpus")?;
    let records = load_corpus(corpus)?;
    let plan = SamplePlan::new(cfg.per_class_count, derive_seed(cfg.seed, CORPUS_STAGE))?;
    let sample = sample_balanced(&records, &plan)?;
    let classifier = Classifier::from_config(&cfg.backends.classifier)?;
    let pool = thread_pool(cfg.concurrency.classifier)?;
    let path = out(cfg, artifacts::ANALYZED);
    let analyzed = Resumable::new(&path, 1, &pool).run(
        &sample,
        |r: &NewsRecord| r.id,
        |a: &AnalyzedText| a.id(),
        |r| Ok(vec![AnalyzedText::new(r.clone(), classifier.classify(&r.text)?)?]),
    )?;
    log::info!("analyzed {} texts into {}", analyzed.len(), path.display());
    Ok(0)
}

fn rewrite_targets(cfg: &RunConfig, analyzed: Vec<AnalyzedText>) -> Vec<AnalyzedText> {
    match cfg.min_stimulus {
        None => analyzed,
        Some(min) => {
            let total = analyzed.len();
            let kept: Vec<AnalyzedText> = analyzed.into_iter().filter(|t| t.stimulus >= min).collect();
            log::info!("{} of {total} texts reach the rewrite threshold {min}", kept.len());
            kept
        }
    }
}

pub fn detox(cfg: &RunConfig) -> anyhow::Result<usize> {
    let analyzed: Vec<AnalyzedText> = upstream(cfg, artifacts::ANALYZED, "analyze")?;
    let targets = rewrite_targets(cfg, analyzed);
    let chat = chat::from_config(&cfg.backends.chat)?;
    let chat_pool = thread_pool(cfg.concurrency.chat)?;
    let rewrites = Resumable::new(&out(cfg, artifacts::REWRITES), 1, &chat_pool).run(
        &targets,
        |t: &AnalyzedText| t.id(),
        |r: &DetoxRecord| r.text_id,
        |t| {
            Ok(vec![DetoxRecord {
                text_id: t.id(),
                bundle: detoxify(&t.record.text, chat.as_ref())?,
            }])
        },
    )?;
    let flagged = rewrites.iter().filter(|r| r.flagged()).count();
    if flagged > 0 {
        log::warn!("{flagged} texts have a rewrite accepted without passing validation");
    }

    let categories: HashMap<u64, _> = targets.iter().map(|t| (t.id(), t.category())).collect();
    let classifier = Classifier::from_config(&cfg.backends.classifier)?;
    let pool = thread_pool(cfg.concurrency.classifier)?;
    let analyze_rewrite = |id: u64, text: &str| -> anyhow::Result<AnalyzedText> {
        let record = NewsRecord {
            id,
            category: categories[&id],
            text: text.to_string(),
        };
        let dist = classifier.classify(text)?;
        Ok(AnalyzedText::new(record, dist)?)
    };
    Resumable::new(&out(cfg, artifacts::REWRITES_ANALYZED), 1, &pool).run(
        &rewrites,
        |r: &DetoxRecord| r.text_id,
        |a: &RewriteAnalysis| a.text_id,
        |r| {
            Ok(vec![RewriteAnalysis {
                text_id: r.text_id,
                balanced: analyze_rewrite(r.text_id, &r.bundle.balanced.text)?,
                cool: analyze_rewrite(r.text_id, &r.bundle.cool.text)?,
            }])
        },
    )?;
    log::info!("rewrote {} texts", rewrites.len());
    Ok(flagged)
}

pub fn verify(cfg: &RunConfig) -> anyhow::Result<usize> {
    let rewrites: Vec<DetoxRecord> = upstream(cfg, artifacts::REWRITES, "detox")?;
    if rewrites.is_empty() {
        bail!("{} holds no rewrites to verify", out(cfg, artifacts::REWRITES).display());
    }
    let embedder = embedder_from_config(&cfg.backends.embedding)?;
    let nli = nli_from_config(&cfg.backends.nli)?;
    let pool = thread_pool(cfg.concurrency.fidelity)?;
    let records = Resumable::new(&out(cfg, artifacts::FIDELITY), 2, &pool).run(
        &rewrites,
        |r: &DetoxRecord| r.text_id,
        |f: &FidelityRecord| f.text_id,
        |r| {
            PresentationMode::REWRITTEN
                .iter()
                .map(|&mode| {
                    let rewrite = &r.bundle.outcome(mode).expect("rewritten mode").text;
                    Ok(assess(r.text_id, mode, &r.bundle.original, rewrite, embedder.as_ref(), nli.as_ref())?)
                })
                .collect()
        },
    )?;
    let summaries = PresentationMode::REWRITTEN
        .iter()
        .map(|&mode| {
            let per_mode: Vec<FidelityRecord> = records.iter().filter(|r| r.mode == mode).cloned().collect();
            summarize_fidelity(&per_mode)
        })
        .collect::<Result<Vec<FidelitySummary>, _>>()?;
    write_json(&out(cfg, artifacts::FIDELITY_SUMMARY), &summaries)?;
    for s in &summaries {
        log::info!(
            "{}: similarity {:.3}, contradiction {:.1}%",
            s.mode,
            s.mean_cosine,
            100.0 * s.contradiction_rate
        );
    }
    Ok(0)
}

pub fn weekly(cfg: &RunConfig) -> anyhow::Result<usize> {
    let analyzed: Vec<AnalyzedText> = upstream(cfg, artifacts::ANALYZED, "analyze")?;
    let seed = derive_seed(cfg.seed, CONSUMER_STAGE);
    let assignments = simulate_consumers(&analyzed, cfg.consumers, cfg.texts_per_consumer, seed)?;
    let log_events = synthetic_week_log(&assignments, simulated_week_start());
    write_jsonl(&out(cfg, artifacts::BROWSING_LOG), &log_events)?;

    let by_id: HashMap<u64, &AnalyzedText> = analyzed.iter().map(|t| (t.id(), t)).collect();
    let summaries = bucket_by_week(&log_events)
        .into_iter()
        .map(|((consumer, week), ids)| {
            let texts: Vec<AnalyzedText> = ids.iter().map(|id| by_id[id].clone()).collect();
            Ok((week, weekly_summary_with(&texts, consumer, cfg.theta, cfg.weekly_ebi)?))
        })
        .collect::<anyhow::Result<Vec<(IsoWeek, WeeklySummary)>>>()?;

    let chat = chat::from_config(&cfg.backends.chat)?;
    let pool = thread_pool(cfg.concurrency.chat)?;
    let records = Resumable::new(&out(cfg, artifacts::WEEKLY), 1, &pool).run(
        &summaries,
        |(week, s): &(IsoWeek, WeeklySummary)| (s.consumer_id, *week),
        |r: &WeeklyRecord| (r.summary.consumer_id, r.week),
        |(week, s)| {
            Ok(vec![WeeklyRecord {
                week: *week,
                summary: s.clone(),
                advice: generate_advice(s, chat.as_ref())?,
            }])
        },
    )?;
    let flagged = records.iter().filter(|r| r.advice.status == AdviceStatus::Warning).count();
    if flagged > 0 {
        log::warn!("{flagged} advice texts failed validation");
    }
    Ok(flagged)
}

fn personas(cfg: &RunConfig) -> anyhow::Result<Vec<PersonaProfile>> {
    match &cfg.personas_path {
        None => Ok(builtin_personas()),
        Some(p) => {
            let raw = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            Ok(parse_personas(&raw)?)
        }
    }
}

pub fn recommend(cfg: &RunConfig) -> anyhow::Result<usize> {
    let personas = personas(cfg)?;
    let chat: std::sync::Arc<dyn ChatBackend> = chat::from_config(&cfg.backends.chat)?;
    let pool = thread_pool(cfg.concurrency.chat)?;
    let recs = Resumable::new(&out(cfg, artifacts::RECOMMENDATIONS), 1, &pool).run(
        &personas,
        |p: &PersonaProfile| p.id.clone(),
        |r: &ModeRecommendation| r.persona_id.clone(),
        |p| Ok(vec![recommend_mode(p, chat.as_ref())?]),
    )?;
    for r in &recs {
        log::info!("{}: {}", r.persona_id, r.mode);
    }
    Ok(0)
}

/// Aligns RAW analyses with the rewrite analyses; texts without rewrites are left out.
pub fn condition_set(analyzed: Vec<AnalyzedText>, rewrites: Vec<RewriteAnalysis>) -> anyhow::Result<ConditionSet> {
    let mut raw_by_id: HashMap<u64, AnalyzedText> = analyzed.into_iter().map(|t| (t.id(), t)).collect();
    let mut raw = Vec::with_capacity(rewrites.len());
    let (mut balanced, mut cool) = (Vec::new(), Vec::new());
    for r in rewrites {
        let original = raw_by_id
            .remove(&r.text_id)
            .with_context(|| format!("rewrite for unknown text {}", r.text_id))?;
        raw.push(original);
        balanced.push(r.balanced);
        cool.push(r.cool);
    }
    Ok(ConditionSet::new(raw, balanced, cool)?)
}

pub fn evaluate(cfg: &RunConfig) -> anyhow::Result<usize> {
    let analyzed: Vec<AnalyzedText> = upstream(cfg, artifacts::ANALYZED, "analyze")?;
    let rewrites: Vec<RewriteAnalysis> = upstream(cfg, artifacts::REWRITES_ANALYZED, "detox")?;
    let fidelity: Vec<FidelityRecord> = upstream(cfg, artifacts::FIDELITY, "verify")?;
    let summary_path = out(cfg, artifacts::FIDELITY_SUMMARY);
    if !summary_path.exists() {
        return Err(Error::MissingSection(format!("{} (run `calmfeed verify` first)", summary_path.display())).into());
    }
    let fidelity_summaries: Vec<FidelitySummary> = read_json(&summary_path)?;

    let mut flagged = 0;
    if !out(cfg, artifacts::WEEKLY).exists() {
        flagged += weekly(cfg)?;
    }
    if !out(cfg, artifacts::RECOMMENDATIONS).exists() {
        flagged += recommend(cfg)?;
    }
    let weekly: Vec<WeeklyRecord> = read_jsonl(&out(cfg, artifacts::WEEKLY))?;
    let recommendations: Vec<ModeRecommendation> = read_jsonl(&out(cfg, artifacts::RECOMMENDATIONS))?;

    let bundle = build_report(ReportInputs {
        conditions: Some(condition_set(analyzed, rewrites)?),
        fidelity: Some(fidelity),
        fidelity_summaries: Some(fidelity_summaries),
        weekly: Some(weekly.iter().map(|w| w.summary.clone()).collect()),
        advice: Some(weekly.into_iter().map(|w| w.advice).collect()),
        recommendations: Some(recommendations),
        theta: cfg.theta,
    })?;
    write_atomic(&out(cfg, artifacts::REPORT_JSON), bundle.report.to_json().as_bytes())?;
    write_atomic(
        &out(cfg, artifacts::FIG_EMOTIONS),
        emotion_csv(&bundle.report.emotion_means).as_bytes(),
    )?;
    write_atomic(&out(cfg, artifacts::FIG_SCATTER), scatter_csv(&bundle.scatter).as_bytes())?;
    log::info!("report written to {}", out(cfg, artifacts::REPORT_JSON).display());
    Ok(flagged)
}

pub fn load_report(dir: &Path) -> anyhow::Result<Report> {
    let p = artifacts::path(dir, artifacts::REPORT_JSON);
    if !p.exists() {
        return Err(Error::MissingSection(format!("{} (run `calmfeed evaluate` first)", p.display())).into());
    }
    read_json(&p)
}

pub fn report(cfg: &RunConfig) -> anyhow::Result<usize> {
    let report = load_report(&cfg.out_dir)?;
    let p = out(cfg, artifacts::REPORT_MD);
    write_atomic(&p, render_markdown(&report).as_bytes())?;
    println!("{}", p.display());
    Ok(0)
}

/// Runs analyze through report in order.
pub fn run_all(cfg: &RunConfig) -> anyhow::Result<usize> {
    let mut flagged = 0;
    for stage in [analyze, detox, verify, evaluate, report] {
        flagged += stage(cfg)?;
    }
    Ok(flagged)
}
