//! Emotion analysis, detoxifying rewrites and evaluation for news texts.

pub mod backend;
pub mod chat;
pub mod classifier;
pub mod corpus;
pub mod detox;
pub mod emotion;
pub mod error;
pub mod evaluation;
pub mod fidelity;
pub mod metrics;
pub mod monitor;
pub mod prompts;
pub mod rng;
pub mod stats;

pub use backend::BackendConfig;
pub use chat::{ChatBackend, ChatRequest};
pub use classifier::Classifier;
pub use corpus::{Category, NewsRecord, SamplePlan};
pub use detox::{PresentationMode, RewriteBundle, RewriteOutcome, ValidationStatus};
pub use emotion::{Emotion, EmotionDistribution};
pub use error::{Error, Result};
pub use fidelity::{FidelityRecord, FidelitySummary, NliLabel};
pub use metrics::{AnalyzedText, CollectionStats};
pub use monitor::{Advice, BrowsingEvent, ModeRecommendation, PersonaProfile, WeeklySummary};
pub use rng::SeededRng;
