//! Route → retrieve → generate → validate.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use tracing::info;

use crate::gateway::{ChatBackend, ModelSettings};
use crate::generator::{generate_extractive, generate_llm, DraftResponse, GenerateError, GenerationBackend, GenerationConfig};
use crate::kb::{KnowledgeBase, UnknownSection};
use crate::retriever::{retrieve, EvidenceBundle, LexicalScorer, RetrieveOptions, SimilarityScorer};
use crate::router::{route_keyword, route_llm, RouteDecision, RouteError};
use crate::validator::{validate, FinalResponse, Rejection, ValidationStatus};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RouterChoice {
    #[default]
    Keyword,
    Llm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendChoice {
    #[default]
    Extractive,
    Llm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PrefilterChoice {
    #[default]
    None,
    Lexical,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub router: RouterChoice,
    pub backend: BackendChoice,
    pub max_bundle_size: usize,
    pub per_tier_cap: Option<usize>,
    pub prefilter: PrefilterChoice,
    pub generation: GenerationConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            router: RouterChoice::Keyword,
            backend: BackendChoice::Extractive,
            max_bundle_size: 12,
            per_tier_cap: None,
            prefilter: PrefilterChoice::None,
            generation: GenerationConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Route(#[from] RouteError),
    #[error(transparent)]
    UnknownSection(#[from] UnknownSection),
    #[error(transparent)]
    Generate(#[from] GenerateError),
    #[error("the LLM backend is configured but no gateway is available")]
    GatewayUnavailable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AnswerStatus {
    Answered,
    Refused,
}

/// Result of one question through the pipeline.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Answer {
    pub question: String,
    pub status: AnswerStatus,
    pub route: RouteDecision,
    pub section_title: String,
    pub bundle: EvidenceBundle,
    /// Present when answered.
    pub response: Option<FinalResponse>,
    /// Rejections of the last draft that failed validation, if any.
    pub rejections: Vec<Rejection>,
    /// True when a rejected draft was replaced by an extractive one.
    pub regenerated: bool,
}

impl Answer {
    pub fn is_answered(&self) -> bool {
        self.status == AnswerStatus::Answered
    }
}

pub struct Pipeline {
    kb: Arc<KnowledgeBase>,
    config: PipelineConfig,
    gateway: Option<Arc<dyn ChatBackend>>,
}

impl Pipeline {
    pub fn new(kb: KnowledgeBase, config: PipelineConfig) -> Self {
        Self::shared(Arc::new(kb), config, None)
    }

    pub fn shared(
        kb: Arc<KnowledgeBase>,
        config: PipelineConfig,
        gateway: Option<Arc<dyn ChatBackend>>,
    ) -> Self {
        Self {
            kb,
            config,
            gateway,
        }
    }

    pub fn with_gateway(mut self, gateway: Arc<dyn ChatBackend>) -> Self {
        self.gateway = Some(gateway);
        self
    }

    pub fn kb(&self) -> &KnowledgeBase {
        &self.kb
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    fn model_settings(&self) -> ModelSettings {
        ModelSettings {
            model_name: self.config.generation.model_name.clone(),
            temperature: self.config.generation.temperature,
            max_output_tokens: 16,
        }
    }

    pub fn route(&self, question: &str) -> Result<RouteDecision, PipelineError> {
        let catalog = &self.kb.catalog;
        Ok(match (self.config.router, &self.gateway) {
            (RouterChoice::Llm, Some(gw)) => {
                route_llm(question, catalog, gw.as_ref(), &self.model_settings())?
            }
            (RouterChoice::Llm, None) => return Err(PipelineError::GatewayUnavailable),
            (RouterChoice::Keyword, _) => route_keyword(question, catalog)?,
        })
    }

    pub fn retrieve(&self, route: &RouteDecision, question: &str) -> Result<EvidenceBundle, PipelineError> {
        let lexical = LexicalScorer;
        let prefilter: Option<&dyn SimilarityScorer> = match self.config.prefilter {
            PrefilterChoice::None => None,
            PrefilterChoice::Lexical => Some(&lexical),
        };
        let options = RetrieveOptions {
            max_bundle_size: self.config.max_bundle_size,
            prefilter,
            per_tier_cap: self.config.per_tier_cap,
        };
        Ok(retrieve(&self.kb, route, question, &options)?)
    }

    fn draft(&self, question: &str, bundle: &EvidenceBundle) -> Result<DraftResponse, PipelineError> {
        let config = &self.config.generation;
        match (self.config.backend, &self.gateway) {
            (BackendChoice::Extractive, _) => Ok(generate_extractive(bundle, config)?),
            (BackendChoice::Llm, Some(gw)) => Ok(generate_llm(question, bundle, gw.as_ref(), config)?),
            (BackendChoice::Llm, None) => Err(PipelineError::GatewayUnavailable),
        }
    }

    /// Answer a question, or refuse.
    ///
    /// An LLM draft that fails validation is replaced once by an extractive
    /// draft and re-validated; a draft that still fails is refused.
    pub fn ask(&self, question: &str) -> Result<Answer, PipelineError> {
        let route = self.route(question)?;
        let bundle = self.retrieve(&route, question)?;
        let section_title = self
            .kb
            .catalog
            .get(&route.section_id)
            .map(|e| e.title.clone())
            .unwrap_or_default();
        let mut answer = Answer {
            question: question.to_string(),
            status: AnswerStatus::Refused,
            route,
            section_title,
            bundle,
            response: None,
            rejections: Vec::new(),
            regenerated: false,
        };
        if answer.bundle.items.is_empty() {
            return Ok(answer);
        }

        let draft = self.draft(question, &answer.bundle)?;
        let mut outcome = validate(&draft, &answer.bundle);
        if outcome.status != ValidationStatus::Accepted && draft.backend == GenerationBackend::Llm {
            info!(rejections = outcome.rejections.len(), "draft rejected; regenerating extractively");
            let fallback = generate_extractive(&answer.bundle, &self.config.generation)?;
            answer.regenerated = true;
            answer.rejections = outcome.rejections;
            outcome = validate(&fallback, &answer.bundle);
        }
        match outcome.status {
            ValidationStatus::Accepted => {
                answer.status = AnswerStatus::Answered;
                answer.response = outcome.final_response;
            }
            ValidationStatus::Rejected => answer.rejections = outcome.rejections,
            ValidationStatus::Refusal => {}
        }
        Ok(answer)
    }
}
