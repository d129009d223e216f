//! News corpus ingestion and balanced sampling.
//!
//! The input is a headerless comma-delimited file with three fields per row:
//! class index (1-4), title, description.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::SeededRng;

pub mod synthetic;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Category {
    World,
    Sports,
    Business,
    SciTech,
}

impl Category {
    pub const ALL: [Category; 4] = [
        Category::World,
        Category::Sports,
        Category::Business,
        Category::SciTech,
    ];

    /// Maps the 1-based class index used by the corpus files.
    pub fn from_class_index(idx: u8) -> Option<Self> {
        match idx {
            1 => Some(Category::World),
            2 => Some(Category::Sports),
            3 => Some(Category::Business),
            4 => Some(Category::SciTech),
            _ => None,
        }
    }

    pub fn class_index(self) -> u8 {
        self as u8 + 1
    }

    pub fn label(self) -> &'static str {
        match self {
            Category::World => "World",
            Category::Sports => "Sports",
            Category::Business => "Business",
            Category::SciTech => "Sci/Tech",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Category {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm: String = s.chars().filter(|c| c.is_alphanumeric()).collect();
        Category::ALL
            .into_iter()
            .find(|c| format!("{c:?}").eq_ignore_ascii_case(&norm))
            .ok_or_else(|| Error::Contract(format!("unknown category {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NewsRecord {
    pub id: u64,
    pub category: Category,
    pub text: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplePlan {
    pub per_class_count: usize,
    pub seed: u64,
}

impl SamplePlan {
    pub fn new(per_class_count: usize, seed: u64) -> Result<Self> {
        if per_class_count == 0 {
            return Err(Error::Contract("per_class_count must be at least 1".into()));
        }
        Ok(Self {
            per_class_count,
            seed,
        })
    }
}

pub fn load_corpus(path: impl AsRef<Path>) -> Result<Vec<NewsRecord>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_corpus(file)
}

/// Parses corpus rows from any reader. Row numbers in errors are 1-based.
pub fn parse_corpus<R: std::io::Read>(reader: R) -> Result<Vec<NewsRecord>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(reader);

    let mut out = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let row_no = i + 1;
        let row = row.map_err(|e| Error::MalformedRow {
            row: row_no,
            reason: e.to_string(),
        })?;
        if row.len() != 3 {
            return Err(Error::MalformedRow {
                row: row_no,
                reason: format!("expected 3 fields, found {}", row.len()),
            });
        }
        let category = row[0]
            .trim()
            .parse::<u8>()
            .ok()
            .and_then(Category::from_class_index)
            .ok_or_else(|| Error::MalformedRow {
                row: row_no,
                reason: format!("class index {:?} is not in 1..=4", &row[0]),
            })?;
        let text = [row[1].trim(), row[2].trim()]
            .into_iter()
            .filter(|s| !s.is_empty())
            .collect::<Vec<_>>()
            .join(" ");
        if text.is_empty() {
            return Err(Error::MalformedRow {
                row: row_no,
                reason: "title and description are both empty".into(),
            });
        }
        out.push(NewsRecord {
            id: i as u64,
            category,
            text,
        });
    }
    Ok(out)
}

/// Draws `per_class_count` records from each category without replacement.
///
/// Output is grouped by category in [`Category::ALL`] order, each group in
/// draw order.
pub fn sample_balanced(records: &[NewsRecord], plan: &SamplePlan) -> Result<Vec<NewsRecord>> {
    let k = plan.per_class_count;
    let by_category: Vec<Vec<&NewsRecord>> = Category::ALL
        .iter()
        .map(|c| records.iter().filter(|r| r.category == *c).collect())
        .collect();

    for (cat, pool) in Category::ALL.iter().zip(&by_category) {
        if pool.len() < k {
            return Err(Error::InsufficientRecords {
                category: cat.to_string(),
                available: pool.len(),
                required: k,
                shortfall: k - pool.len(),
            });
        }
    }

    let mut rng = SeededRng::new(plan.seed);
    let mut out = Vec::with_capacity(4 * k);
    for pool in &by_category {
        out.extend(
            rng.sample_indices(pool.len(), k)
                .into_iter()
                .map(|i| pool[i].clone()),
        );
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn records(per_class: usize) -> Vec<NewsRecord> {
        let mut out = Vec::new();
        for (i, c) in Category::ALL.iter().cycle().take(4 * per_class).enumerate() {
            out.push(NewsRecord {
                id: i as u64,
                category: *c,
                text: format!("text {i}"),
            });
        }
        out
    }

    #[test]
    fn maps_class_index_and_joins_fields() {
        let recs = parse_corpus(r#""3","Oil up","Prices rose""#.as_bytes()).unwrap();
        assert_eq!(
            recs,
            vec![NewsRecord {
                id: 0,
                category: Category::Business,
                text: "Oil up Prices rose".into()
            }]
        );
    }

    #[test]
    fn empty_input_gives_no_records() {
        assert!(parse_corpus("".as_bytes()).unwrap().is_empty());
    }

    #[test]
    fn bad_class_index_names_row() {
        let input = "\"1\",\"a\",\"b\"\n\"5\",\"c\",\"d\"\n";
        match parse_corpus(input.as_bytes()) {
            Err(Error::MalformedRow { row, .. }) => assert_eq!(row, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn wrong_field_count_names_row() {
        let input = "\"1\",\"a\",\"b\"\n\"2\",\"only title\"\n";
        match parse_corpus(input.as_bytes()) {
            Err(Error::MalformedRow { row, reason }) => {
                assert_eq!(row, 2);
                assert!(reason.contains("3 fields"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn quoted_commas_survive() {
        let recs = parse_corpus(r#"4,"Chips, faster","New, cheaper parts""#.as_bytes()).unwrap();
        assert_eq!(recs[0].category, Category::SciTech);
        assert_eq!(recs[0].text, "Chips, faster New, cheaper parts");
    }

    #[test]
    fn missing_file_is_io_error() {
        assert!(matches!(
            load_corpus("/nonexistent/corpus.csv"),
            Err(Error::Io { .. })
        ));
    }

    #[test]
    fn exhaustive_sample_returns_everything() {
        let recs = records(200);
        let plan = SamplePlan::new(200, 9).unwrap();
        let s = sample_balanced(&recs, &plan).unwrap();
        assert_eq!(s.len(), 800);
        let mut ids: Vec<u64> = s.iter().map(|r| r.id).collect();
        ids.sort_unstable();
        assert_eq!(ids, (0..800).collect::<Vec<_>>());
        assert_eq!(s, sample_balanced(&recs, &plan).unwrap());
    }

    #[test]
    fn forced_selection() {
        let recs = records(1);
        let s = sample_balanced(&recs, &SamplePlan::new(1, 0).unwrap()).unwrap();
        assert_eq!(s, recs);
    }

    #[test]
    fn shortfall_names_category() {
        let mut recs = records(3);
        recs.retain(|r| !(r.category == Category::Sports && r.id > 2));
        match sample_balanced(&recs, &SamplePlan::new(3, 0).unwrap()) {
            Err(Error::InsufficientRecords {
                category,
                shortfall,
                ..
            }) => {
                assert_eq!(category, "Sports");
                assert_eq!(shortfall, 2);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn zero_per_class_rejected() {
        assert!(SamplePlan::new(0, 1).is_err());
    }
}
