//! Guideline-grounded clinical question answering.
//!
//! The pipeline routes a question to one guideline section, retrieves that
//! section's evidence in clinical-priority order (recommendations, then
//! criteria tables, then narrative), drafts a two-part answer, and releases it
//! only if every claim is backed by a cited unit with exactly matching
//! numbers. A table-driven diabetes risk score sits alongside.
//!
//! ```
//! use guideqa_core::{kb, pipeline::{Pipeline, PipelineConfig}};
//!
//! let kb = kb::parse_guideline_markup(guideqa_core::fixtures::STANDARDS_OF_CARE).unwrap();
//! let pipeline = Pipeline::new(kb, PipelineConfig::default());
//! let answer = pipeline.ask("Is a fasting glucose of 110 mg/dL prediabetes?").unwrap();
//! assert_eq!(answer.route.section_id, "2");
//! assert!(answer.is_answered());
//! ```

pub mod gateway;
pub mod generator;
pub mod kb;
pub mod pipeline;
pub mod prompt;
pub mod retriever;
pub mod risk;
pub mod router;
pub mod text;
pub mod validator;

/// Bundled fixture inputs.
pub mod fixtures {
    /// Guideline markup for the diabetes fixture knowledge base.
    pub const STANDARDS_OF_CARE: &str = include_str!("../fixtures/standards_of_care.guideline");
}
