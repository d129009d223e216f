//! Deterministic AG-News-shaped rows for offline runs and tests.
//!
//! Texts mix neutral reporting, factual high-stimulus vocabulary (which a
//! rewrite cannot remove) and sensational modifiers (which it can), in
//! category-dependent proportions.

use std::io::Write;

use crate::corpus::Category;
use crate::error::{Error, Result};
use crate::rng::SeededRng;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SyntheticRow {
    pub category: Category,
    pub title: String,
    pub description: String,
}

struct Bank {
    /// Headline subjects with whether they take a singular verb.
    subjects: &'static [(&'static str, bool)],
    /// Verb phrases in base form.
    titles: &'static [&'static str],
    neutral: &'static [&'static str],
    /// Sentences with an `{adj}` slot for an optional sensational adjective.
    factual: &'static [&'static str],
    sensational: &'static [&'static str],
    /// Probability that each sentence slot draws from `factual`.
    factual_rate: f64,
    /// Probability that a factual sentence gets a sensational adjective.
    sensational_rate: f64,
}

const WORLD: Bank = Bank {
    subjects: &[
        ("Officials", false),
        ("Troops", false),
        ("Diplomats", false),
        ("Police", false),
        ("Rebels", false),
        ("The government", true),
        ("The United Nations", true),
    ],
    titles: &[
        "report fighting near the border",
        "warn of a deepening crisis",
        "meet after the explosion",
        "respond to the attack",
        "discuss the hostage situation",
        "hold talks on the ceasefire",
    ],
    neutral: &[
        "The statement was released on Tuesday",
        "Talks are scheduled to continue next week",
        "The delegation arrived in the capital",
        "A spokesman confirmed the figures",
        "The meeting lasted several hours",
    ],
    factual: &[
        "A {adj}bomb killed at least 12 people in the market",
        "The {adj}war has forced thousands to leave their homes",
        "Officials fear further {adj}violence in the region",
        "Militants threatened a {adj}attack on the convoy",
        "The {adj}explosion damaged several buildings and caused panic",
        "Protesters clashed with police during a {adj}standoff at the embassy",
        "The {adj}nuclear dispute raised fears of a wider crisis",
        "Rescue teams searched for victims after the {adj}blast",
    ],
    sensational: &["shocking", "furious", "horrific", "dramatic", "stunning"],
    factual_rate: 0.75,
    sensational_rate: 0.45,
};

const SPORTS: Bank = Bank {
    subjects: &[
        ("United", true),
        ("The Lakers", false),
        ("Federer", true),
        ("The Yankees", false),
        ("Arsenal", true),
        ("The national team", true),
    ],
    titles: &[
        "win the final",
        "beat the champions",
        "reach the semifinal",
        "sign a new coach",
        "lose at home",
        "return from injury",
    ],
    neutral: &[
        "The match was played on Sunday afternoon",
        "The coach named the squad for the next game",
        "The season resumes after the break",
        "The club confirmed the transfer fee",
        "The game went into extra time",
    ],
    factual: &[
        "Fans celebrate the {adj}victory across the city",
        "The team won a {adj}third title in four years",
        "Supporters welcome the players home after a {adj}season",
        "The {adj}defeat ended a long unbeaten run",
        "The striker scored twice in a {adj}second half",
        "A {adj}injury scare worried the coaching staff",
    ],
    sensational: &["stunning", "shocking", "furious", "sensational", "dramatic", "astonishing"],
    factual_rate: 0.55,
    sensational_rate: 0.7,
};

const BUSINESS: Bank = Bank {
    subjects: &[
        ("Oil prices", false),
        ("Shares", false),
        ("The central bank", true),
        ("Retailers", false),
        ("Airlines", false),
        ("The automaker", true),
    ],
    titles: &[
        "rise on strong demand",
        "fall after weak earnings",
        "announce job cuts",
        "report record profits",
        "face pressure over prices",
        "raise interest rates",
    ],
    neutral: &[
        "The company will release its results next month",
        "Analysts expect the trend to continue",
        "Trading volume was close to average",
        "The figures cover the third quarter",
        "The board approved the plan on Monday",
    ],
    factual: &[
        "Investors fear a {adj}slump in consumer spending",
        "{Adj}layoffs and losses hit the manufacturing sector",
        "Profits rose on {adj}growth in Asia",
        "The {adj}crisis in credit markets raised fresh risks",
        "Workers protest the {adj}cuts planned by the board",
        "The {adj}merger boosts the firm's market share",
    ],
    sensational: &["scorching", "shocking", "furious", "stunning", "bombshell", "brutal"],
    factual_rate: 0.6,
    sensational_rate: 0.75,
};

const SCITECH: Bank = Bank {
    subjects: &[
        ("Researchers", false),
        ("The software maker", true),
        ("NASA", true),
        ("Chip makers", false),
        ("The startup", true),
        ("Engineers", false),
    ],
    titles: &[
        "launch a new processor",
        "release a security update",
        "report a new discovery",
        "unveil a faster network",
        "test the new spacecraft",
        "patch a software flaw",
    ],
    neutral: &[
        "The product will be available in the spring",
        "The study was published in a journal",
        "The update is free for existing users",
        "The device uses a new type of memory",
        "The company described the design at a conference",
    ],
    factual: &[
        "Experts warn the {adj}flaw is a serious threat to users",
        "The launch was a {adj}success for the space agency",
        "Users love the {adj}new interface",
        "A {adj}virus attack disrupted thousands of computers",
        "The team celebrates a {adj}record speed test",
        "The {adj}risk of data loss worries large companies",
    ],
    sensational: &["stunning", "shocking", "astonishing", "incredible", "alarming"],
    factual_rate: 0.45,
    sensational_rate: 0.6,
};

fn bank(category: Category) -> &'static Bank {
    match category {
        Category::World => &WORLD,
        Category::Sports => &SPORTS,
        Category::Business => &BUSINESS,
        Category::SciTech => &SCITECH,
    }
}

fn pick<'a>(rng: &mut SeededRng, items: &'a [&'a str]) -> &'a str {
    items[rng.below(items.len())]
}

/// Third-person singular of the leading verb.
fn conjugate(phrase: &str) -> String {
    let (verb, rest) = phrase.split_once(' ').unwrap_or((phrase, ""));
    let suffix = if ["s", "sh", "ch", "x"].iter().any(|e| verb.ends_with(e)) {
        "es"
    } else {
        "s"
    };
    format!("{verb}{suffix} {rest}").trim_end().to_string()
}

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    c.next()
        .map(|f| f.to_uppercase().chain(c).collect())
        .unwrap_or_default()
}

fn headline(rng: &mut SeededRng, b: &Bank) -> String {
    let (subject, singular) = b.subjects[rng.below(b.subjects.len())];
    let verb = pick(rng, b.titles);
    let verb = if singular { conjugate(verb) } else { verb.to_string() };
    let mut title = format!("{subject} {verb}");
    if rng.unit() < b.sensational_rate / 2.0 {
        title = format!("{title} in a {} turn", pick(rng, b.sensational));
    }
    fix_articles(&title)
}

fn sentence(rng: &mut SeededRng, b: &Bank, template: &str) -> String {
    let adj = if template.contains("{adj}") || template.contains("{Adj}") {
        if rng.unit() < b.sensational_rate {
            format!("{} ", pick(rng, b.sensational))
        } else {
            String::new()
        }
    } else {
        String::new()
    };
    let s = template.replace("{adj}", &adj).replace("{Adj}", &capitalize(&adj));
    format!("{}.", capitalize(&fix_articles(&s)))
}

fn fix_articles(s: &str) -> String {
    let words: Vec<&str> = s.split(' ').collect();
    let mut out = Vec::with_capacity(words.len());
    for (i, w) in words.iter().enumerate() {
        let vowel = words
            .get(i + 1)
            .and_then(|n| n.chars().next())
            .is_some_and(|c| "aeiouAEIOU".contains(c));
        out.push(match (*w, vowel) {
            ("a", true) => "an",
            ("A", true) => "An",
            _ => w,
        });
    }
    out.join(" ")
}

fn description(rng: &mut SeededRng, b: &Bank) -> String {
    let n = 2 + rng.below(2);
    let mut used = Vec::with_capacity(n);
    while used.len() < n {
        let template = if rng.unit() < b.factual_rate {
            pick(rng, b.factual)
        } else {
            pick(rng, b.neutral)
        };
        if !used.contains(&template) {
            used.push(template);
        }
    }
    used.iter()
        .map(|t| sentence(rng, b, t))
        .collect::<Vec<_>>()
        .join(" ")
}

/// Generates `per_class` rows per category, categories interleaved.
pub fn synthetic_rows(per_class: usize, seed: u64) -> Vec<SyntheticRow> {
    let mut rng = SeededRng::for_stage(seed, "synthetic-corpus");
    let mut rows = Vec::with_capacity(4 * per_class);
    for _ in 0..per_class {
        for category in Category::ALL {
            let b = bank(category);
            rows.push(SyntheticRow {
                category,
                title: headline(&mut rng, b),
                description: description(&mut rng, b),
            });
        }
    }
    rows
}

/// Writes rows in the corpus file format (class index, title, description).
pub fn write_csv<W: Write>(rows: &[SyntheticRow], writer: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .quote_style(csv::QuoteStyle::Always)
        .from_writer(writer);
    for r in rows {
        w.write_record([
            r.category.class_index().to_string().as_str(),
            r.title.as_str(),
            r.description.as_str(),
        ])
        .map_err(|e| Error::Protocol(format!("csv write failed: {e}")))?;
    }
    w.flush().map_err(|source| Error::Io {
        path: "<csv writer>".into(),
        source,
    })
}
