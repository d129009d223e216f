//! Condition comparisons, category breakdowns and report assembly.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::corpus::Category;
use crate::detox::PresentationMode;
use crate::emotion::{Emotion, EmotionDistribution};
use crate::error::{Error, Result};
use crate::fidelity::{FidelityRecord, FidelitySummary};
use crate::metrics::{aggregate, AnalyzedText};
use crate::monitor::{Advice, ModeRecommendation, WeeklySummary};
use crate::stats::{holm_adjust, paired_t, pearson, student_t_two_tailed};

/// Reference `(metric, comparison, t, d, p_adj)` rows at n = 800.
pub const REFERENCE_TESTS: [(Metric, PresentationMode, f64, f64, f64); 6] = [
    (Metric::Stimulus, PresentationMode::Balanced, 5.93, 0.210, 1.3e-8),
    (Metric::Stimulus, PresentationMode::Cool, 7.97, 0.282, 2.1e-14),
    (Metric::Ebi, PresentationMode::Balanced, -4.26, -0.151, 2.3e-5),
    (Metric::Ebi, PresentationMode::Cool, -5.67, -0.201, 3.9e-8),
    (Metric::Fre, PresentationMode::Balanced, 17.23, 0.609, 5.2e-56),
    (Metric::Fre, PresentationMode::Cool, 9.60, 0.339, 4.9e-20),
];
pub const REFERENCE_N: usize = 800;
pub const EFFECT_SIZE_TOLERANCE: f64 = 0.001;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Stimulus,
    Ebi,
    Fre,
}

impl Metric {
    pub const ALL: [Metric; 3] = [Metric::Stimulus, Metric::Ebi, Metric::Fre];

    pub fn of(self, t: &AnalyzedText) -> f64 {
        match self {
            Metric::Stimulus => t.stimulus,
            Metric::Ebi => t.ebi,
            Metric::Fre => t.fre,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Metric::Stimulus => "S",
            Metric::Ebi => "EBI",
            Metric::Fre => "FRE",
        }
    }
}

pub fn comparison_label(mode: PresentationMode) -> String {
    let short = match mode {
        PresentationMode::Raw => "RAW",
        PresentationMode::Balanced => "BAL",
        PresentationMode::Cool => "COOL",
    };
    format!("RAW vs {short}")
}

/// `100 * (raw - treated) / raw`; negative when the treatment increases the value.
pub fn percent_reduction(raw: f64, treated: f64) -> Result<f64> {
    if raw == 0.0 {
        return Err(Error::Domain("percent reduction from a zero baseline".into()));
    }
    Ok(100.0 * (raw - treated) / raw)
}

/// The three conditions over the same texts, each sorted by text id.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionSet {
    pub raw: Vec<AnalyzedText>,
    pub balanced: Vec<AnalyzedText>,
    pub cool: Vec<AnalyzedText>,
}

impl ConditionSet {
    pub fn new(
        mut raw: Vec<AnalyzedText>,
        mut balanced: Vec<AnalyzedText>,
        mut cool: Vec<AnalyzedText>,
    ) -> Result<Self> {
        for v in [&mut raw, &mut balanced, &mut cool] {
            v.sort_by_key(|t| t.id());
        }
        let ids = |v: &[AnalyzedText]| v.iter().map(|t| t.id()).collect::<Vec<_>>();
        let reference = ids(&raw);
        for (mode, v) in [(PresentationMode::Balanced, &balanced), (PresentationMode::Cool, &cool)] {
            if ids(v) != reference {
                return Err(Error::Contract(format!(
                    "{mode} condition does not cover the same text ids as RAW"
                )));
            }
        }
        if raw.windows(2).any(|w| w[0].id() == w[1].id()) {
            return Err(Error::Contract("duplicate text id in a condition".into()));
        }
        Ok(Self { raw, balanced, cool })
    }

    pub fn len(&self) -> usize {
        self.raw.len()
    }

    pub fn is_empty(&self) -> bool {
        self.raw.is_empty()
    }

    pub fn condition(&self, mode: PresentationMode) -> &[AnalyzedText] {
        match mode {
            PresentationMode::Raw => &self.raw,
            PresentationMode::Balanced => &self.balanced,
            PresentationMode::Cool => &self.cool,
        }
    }

    pub fn metric(&self, mode: PresentationMode, metric: Metric) -> Vec<f64> {
        self.condition(mode).iter().map(|t| metric.of(t)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeMetrics {
    pub mode: PresentationMode,
    pub n: usize,
    pub mean_stimulus: f64,
    pub hir: f64,
    pub mean_ebi: f64,
    pub mean_fre: f64,
}

pub fn mode_metrics(set: &ConditionSet, theta: f64) -> Result<Vec<ModeMetrics>> {
    PresentationMode::ALL
        .iter()
        .map(|&mode| {
            let s = aggregate(set.condition(mode), theta)?;
            Ok(ModeMetrics {
                mode,
                n: s.n,
                mean_stimulus: s.mean_stimulus,
                hir: s.hir,
                mean_ebi: s.mean_ebi,
                mean_fre: s.mean_fre,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatTestResult {
    pub metric: Metric,
    pub comparison: String,
    pub n: usize,
    pub t: f64,
    pub p_raw: f64,
    pub p_adjusted: f64,
    pub d: f64,
}

/// Paired tests of RAW against each rewrite mode for every metric, Holm-adjusted
/// as one family.
pub fn paired_tests(set: &ConditionSet) -> Result<Vec<StatTestResult>> {
    let mut rows = Vec::new();
    for metric in Metric::ALL {
        let base = set.metric(PresentationMode::Raw, metric);
        for mode in PresentationMode::REWRITTEN {
            let test = paired_t(&base, &set.metric(mode, metric)).map_err(|e| match e {
                Error::DegenerateSample(m) => {
                    Error::DegenerateSample(format!("{} {}: {m}", metric.label(), comparison_label(mode)))
                }
                other => other,
            })?;
            rows.push(StatTestResult {
                metric,
                comparison: comparison_label(mode),
                n: test.n,
                t: test.t,
                p_raw: test.p,
                p_adjusted: test.p,
                d: test.d,
            });
        }
    }
    let raw: Vec<f64> = rows.iter().map(|r| r.p_raw).collect();
    for (row, adj) in rows.iter_mut().zip(holm_adjust(&raw)?) {
        row.p_adjusted = adj;
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryRow {
    pub category: Category,
    pub n: usize,
    pub raw: f64,
    pub balanced: f64,
    pub cool: f64,
    pub delta_balanced: f64,
    pub delta_cool: f64,
}

impl CategoryRow {
    pub fn from_means(category: Category, n: usize, raw: f64, balanced: f64, cool: f64) -> Result<Self> {
        Ok(Self {
            category,
            n,
            raw,
            balanced,
            cool,
            delta_balanced: percent_reduction(raw, balanced)?,
            delta_cool: percent_reduction(raw, cool)?,
        })
    }
}

/// Mean stimulus per category and condition; categories without texts are omitted.
pub fn category_breakdown(set: &ConditionSet) -> Result<Vec<CategoryRow>> {
    let mut rows = Vec::new();
    for category in Category::ALL {
        let mean = |mode| {
            let v: Vec<f64> = set
                .condition(mode)
                .iter()
                .filter(|t| t.category() == category)
                .map(|t| t.stimulus)
                .collect();
            (v.len(), v.iter().sum::<f64>() / v.len().max(1) as f64)
        };
        let (n, raw) = mean(PresentationMode::Raw);
        if n == 0 {
            continue;
        }
        let (_, balanced) = mean(PresentationMode::Balanced);
        let (_, cool) = mean(PresentationMode::Cool);
        rows.push(CategoryRow::from_means(category, n, raw, balanced, cool)?);
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmotionMeans {
    pub mode: PresentationMode,
    pub distribution: EmotionDistribution,
}

pub fn emotion_delta(set: &ConditionSet) -> Result<Vec<EmotionMeans>> {
    PresentationMode::ALL
        .iter()
        .map(|&mode| {
            Ok(EmotionMeans {
                mode,
                distribution: EmotionDistribution::mean(
                    set.condition(mode).iter().map(|t| &t.distribution),
                )?,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatterPoint {
    pub text_id: u64,
    pub mode: PresentationMode,
    pub reduction: f64,
    pub similarity: f64,
}

/// Pairs each text's stimulus reduction with its embedding similarity.
pub fn scatter_points(set: &ConditionSet, fidelity: &[FidelityRecord]) -> Result<Vec<ScatterPoint>> {
    let mut out = Vec::new();
    for mode in PresentationMode::REWRITTEN {
        let mut recs: Vec<&FidelityRecord> = fidelity.iter().filter(|r| r.mode == mode).collect();
        recs.sort_by_key(|r| r.text_id);
        if recs.len() != set.len() {
            return Err(Error::Contract(format!(
                "{} fidelity records for {mode}, expected {}",
                recs.len(),
                set.len()
            )));
        }
        for ((raw, treated), rec) in set.raw.iter().zip(set.condition(mode)).zip(recs) {
            if rec.text_id != raw.id() {
                return Err(Error::Contract(format!(
                    "fidelity record {} does not match text {}",
                    rec.text_id,
                    raw.id()
                )));
            }
            out.push(ScatterPoint {
                text_id: raw.id(),
                mode,
                reduction: raw.stimulus - treated.stimulus,
                similarity: rec.cosine,
            });
        }
    }
    Ok(out)
}

pub fn reduction_similarity_correlation(reductions: &[f64], similarities: &[f64]) -> Result<f64> {
    pearson(reductions, similarities)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Correlation {
    pub mode: PresentationMode,
    pub n: usize,
    /// `None` when either side is constant.
    pub r: Option<f64>,
}

pub fn correlations(points: &[ScatterPoint]) -> Result<Vec<Correlation>> {
    PresentationMode::REWRITTEN
        .iter()
        .map(|&mode| {
            let (x, y): (Vec<f64>, Vec<f64>) = points
                .iter()
                .filter(|p| p.mode == mode)
                .map(|p| (p.reduction, p.similarity))
                .unzip();
            let r = match reduction_similarity_correlation(&x, &y) {
                Ok(r) => Some(r),
                Err(Error::Domain(m)) => {
                    log::warn!("{mode} correlation undefined: {m}");
                    None
                }
                Err(e) => return Err(e),
            };
            Ok(Correlation { mode, n: x.len(), r })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectSizeCheck {
    pub metric: Metric,
    pub comparison: String,
    pub n: usize,
    pub t: f64,
    pub d: f64,
    pub t_over_sqrt_n: f64,
    pub abs_error: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl EffectSizeCheck {
    pub fn new(metric: Metric, comparison: String, n: usize, t: f64, d: f64, tolerance: f64) -> Self {
        let t_over_sqrt_n = t / (n as f64).sqrt();
        let abs_error = (d - t_over_sqrt_n).abs();
        Self {
            metric,
            comparison,
            n,
            t,
            d,
            t_over_sqrt_n,
            abs_error,
            tolerance,
            pass: abs_error < tolerance,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferencePCheck {
    pub metric: Metric,
    pub comparison: String,
    pub reference_p_adjusted: f64,
    pub recomputed_p_adjusted: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelfCheck {
    /// `d = t / sqrt(n)` on the reference rows (rounded inputs, tolerance 0.001).
    pub reference_effect_sizes: Vec<EffectSizeCheck>,
    /// Holm-adjusted p recomputed from the rounded reference t values; informational.
    pub reference_p_values: Vec<ReferencePCheck>,
    /// `d = t / sqrt(n)` on this run's tests (tolerance 1e-12).
    pub run_effect_sizes: Vec<EffectSizeCheck>,
}

pub fn reference_effect_checks() -> Vec<EffectSizeCheck> {
    REFERENCE_TESTS
        .iter()
        .map(|&(metric, mode, t, d, _)| {
            EffectSizeCheck::new(metric, comparison_label(mode), REFERENCE_N, t, d, EFFECT_SIZE_TOLERANCE)
        })
        .collect()
}

pub fn self_check(tests: &[StatTestResult]) -> Result<SelfCheck> {
    let df = (REFERENCE_N - 1) as f64;
    let raw: Vec<f64> = REFERENCE_TESTS
        .iter()
        .map(|&(_, _, t, _, _)| student_t_two_tailed(t, df))
        .collect();
    let adjusted = holm_adjust(&raw)?;
    let reference_p_values = REFERENCE_TESTS
        .iter()
        .zip(adjusted)
        .map(|(&(metric, mode, _, _, p), recomputed)| ReferencePCheck {
            metric,
            comparison: comparison_label(mode),
            reference_p_adjusted: p,
            recomputed_p_adjusted: recomputed,
        })
        .collect();
    Ok(SelfCheck {
        reference_effect_sizes: reference_effect_checks(),
        reference_p_values,
        run_effect_sizes: tests
            .iter()
            .map(|r| EffectSizeCheck::new(r.metric, r.comparison.clone(), r.n, r.t, r.d, 1e-12))
            .collect(),
    })
}

/// Everything the report draws on; each field is one upstream stage.
#[derive(Debug, Clone, Default)]
pub struct ReportInputs {
    pub conditions: Option<ConditionSet>,
    pub fidelity: Option<Vec<FidelityRecord>>,
    pub fidelity_summaries: Option<Vec<FidelitySummary>>,
    pub weekly: Option<Vec<WeeklySummary>>,
    pub advice: Option<Vec<Advice>>,
    pub recommendations: Option<Vec<ModeRecommendation>>,
    pub theta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub n_texts: usize,
    pub theta: f64,
    pub table1_mode_metrics: Vec<ModeMetrics>,
    pub table2_paired_tests: Vec<StatTestResult>,
    pub table3_category_stimulus: Vec<CategoryRow>,
    pub table4_fidelity: Vec<FidelitySummary>,
    pub table5_weekly: Vec<WeeklySummary>,
    pub table6_advice: Vec<Advice>,
    pub table7_recommendations: Vec<ModeRecommendation>,
    pub emotion_means: Vec<EmotionMeans>,
    pub reduction_similarity: Vec<Correlation>,
    pub self_check: SelfCheck,
}

pub const REPORT_SECTIONS: [&str; 7] = [
    "table1_mode_metrics",
    "table2_paired_tests",
    "table3_category_stimulus",
    "table4_fidelity",
    "table5_weekly",
    "table6_advice",
    "table7_recommendations",
];

/// Report plus columnar figure data.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportBundle {
    pub report: Report,
    pub scatter: Vec<ScatterPoint>,
}

fn require<T>(value: Option<T>, section: &str) -> Result<T> {
    value.ok_or_else(|| Error::MissingSection(section.to_string()))
}

pub fn build_report(inputs: ReportInputs) -> Result<ReportBundle> {
    let set = require(inputs.conditions, "analyzed conditions")?;
    let fidelity = require(inputs.fidelity, "fidelity records")?;
    let table4 = require(inputs.fidelity_summaries, "fidelity summaries")?;
    let weekly = require(inputs.weekly, "weekly summaries")?;
    let advice = require(inputs.advice, "advice")?;
    let recommendations = require(inputs.recommendations, "recommendations")?;

    let tests = paired_tests(&set)?;
    let scatter = scatter_points(&set, &fidelity)?;
    let report = Report {
        n_texts: set.len(),
        theta: inputs.theta,
        table1_mode_metrics: mode_metrics(&set, inputs.theta)?,
        table3_category_stimulus: category_breakdown(&set)?,
        table4_fidelity: table4,
        table5_weekly: weekly,
        table6_advice: advice,
        table7_recommendations: recommendations,
        emotion_means: emotion_delta(&set)?,
        reduction_similarity: correlations(&scatter)?,
        self_check: self_check(&tests)?,
        table2_paired_tests: tests,
    };
    Ok(ReportBundle { report, scatter })
}

impl Report {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

pub fn emotion_csv(means: &[EmotionMeans]) -> String {
    let mut out = String::from("condition");
    for e in Emotion::ALL {
        out.push(',');
        out.push_str(e.name());
    }
    out.push('\n');
    for m in means {
        out.push_str(m.mode.as_str());
        for p in m.distribution.as_array() {
            let _ = write!(out, ",{p}");
        }
        out.push('\n');
    }
    out
}

pub fn scatter_csv(points: &[ScatterPoint]) -> String {
    let mut out = String::from("text_id,mode,stimulus_reduction,similarity\n");
    for p in points {
        let _ = writeln!(out, "{},{},{},{}", p.text_id, p.mode.as_str(), p.reduction, p.similarity);
    }
    out
}

fn pct(x: f64) -> String {
    format!("{:.1}%", 100.0 * x)
}

pub fn render_markdown(r: &Report) -> String {
    let mut o = String::new();
    let _ = writeln!(o, "# Evaluation report\n\nTexts: {}, theta: {}\n", r.n_texts, r.theta);

    let _ = writeln!(o, "## Table 1: metrics by presentation mode\n");
    let _ = writeln!(o, "| Mode | S mean | HIR | EBI | FRE |\n|---|---|---|---|---|");
    for m in &r.table1_mode_metrics {
        let _ = writeln!(
            o,
            "| {} | {:.3} | {:.3} | {:.3} | {:.2} |",
            m.mode, m.mean_stimulus, m.hir, m.mean_ebi, m.mean_fre
        );
    }

    let _ = writeln!(o, "\n## Table 2: paired t-tests (Holm, n = {})\n", r.n_texts);
    let _ = writeln!(o, "| Metric | Comparison | t | p_adj | d |\n|---|---|---|---|---|");
    for t in &r.table2_paired_tests {
        let _ = writeln!(
            o,
            "| {} | {} | {:.2} | {:.1e} | {:.3} |",
            t.metric.label(),
            t.comparison,
            t.t,
            t.p_adjusted,
            t.d
        );
    }

    let _ = writeln!(o, "\n## Table 3: mean stimulus by category\n");
    let _ = writeln!(o, "| Category | RAW | BAL | COOL | dBAL | dCOOL |\n|---|---|---|---|---|---|");
    for c in &r.table3_category_stimulus {
        let _ = writeln!(
            o,
            "| {} | {:.3} | {:.3} | {:.3} | {:.1}% | {:.1}% |",
            c.category.label(),
            c.raw,
            c.balanced,
            c.cool,
            c.delta_balanced,
            c.delta_cool
        );
    }

    let _ = writeln!(o, "\n## Table 4: semantic preservation\n");
    let _ = writeln!(o, "| Mode | Similarity | Entailment | Neutral | Contradiction |\n|---|---|---|---|---|");
    for f in &r.table4_fidelity {
        let _ = writeln!(
            o,
            "| {} | {:.3} | {} | {} | {} |",
            f.mode,
            f.mean_cosine,
            pct(f.entailment_rate),
            pct(f.neutral_rate),
            pct(f.contradiction_rate)
        );
    }
    for c in &r.reduction_similarity {
        let r = c.r.map_or("undefined".to_string(), |r| format!("{r:.3}"));
        let _ = writeln!(o, "\nReduction vs similarity, {}: r = {r}", c.mode);
    }

    let _ = writeln!(o, "\n## Table 5: weekly summaries\n");
    let _ = writeln!(o, "| Consumer | S mean | HIR | EBI | anger |\n|---|---|---|---|---|");
    for w in &r.table5_weekly {
        let _ = writeln!(
            o,
            "| {} | {:.3} | {:.2} | {:.3} | {:.3} |",
            w.consumer_id,
            w.mean_stimulus,
            w.hir,
            w.ebi,
            w.mean_emotions.get(Emotion::Anger)
        );
    }

    let _ = writeln!(o, "\n## Table 6: advice\n");
    let _ = writeln!(o, "| Consumer | Status | Advice |\n|---|---|---|");
    for a in &r.table6_advice {
        let _ = writeln!(o, "| {} | {:?} | {} |", a.consumer_id, a.status, a.text.replace('|', "/"));
    }

    let _ = writeln!(o, "\n## Table 7: mode recommendations\n");
    let _ = writeln!(o, "| Persona | Mode | Rationale |\n|---|---|---|");
    for m in &r.table7_recommendations {
        let _ = writeln!(o, "| {} | {} | {} |", m.persona_id, m.mode, m.rationale.replace('|', "/"));
    }

    let _ = writeln!(o, "\n## Self-check: d = t / sqrt(n)\n");
    let _ = writeln!(o, "| Source | Metric | Comparison | t | d | t/sqrt(n) | pass |\n|---|---|---|---|---|---|---|");
    for (source, rows) in [
        ("reference", &r.self_check.reference_effect_sizes),
        ("run", &r.self_check.run_effect_sizes),
    ] {
        for c in rows {
            let _ = writeln!(
                o,
                "| {source} | {} | {} | {:.2} | {:.3} | {:.4} | {} |",
                c.metric.label(),
                c.comparison,
                c.t,
                c.d,
                c.t_over_sqrt_n,
                c.pass
            );
        }
    }
    o
}
