//! Loading knowledge bases, scoring tables and building pipelines from config.

use std::path::Path;
use std::sync::Arc;

use anyhow::{Context, Result};
use guideqa_core::gateway::{ChatBackend, HttpGateway};
use guideqa_core::kb::{load_kb, parse_guideline_markup, KnowledgeBase};
use guideqa_core::pipeline::Pipeline;
use guideqa_core::risk::ScoringTable;

use crate::config::ServiceConfig;

/// `.json` files are KB documents; anything else is guideline markup.
pub fn read_kb(path: &Path) -> Result<KnowledgeBase> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
        load_kb(&bytes).with_context(|| format!("loading KB document {}", path.display()))
    } else {
        let text = String::from_utf8(bytes)
            .with_context(|| format!("{} is not UTF-8", path.display()))?;
        parse_guideline_markup(&text).with_context(|| format!("parsing markup {}", path.display()))
    }
}

pub fn read_risk_table(path: Option<&Path>) -> Result<ScoringTable> {
    match path {
        None => Ok(ScoringTable::shipped()),
        Some(p) => {
            let bytes = std::fs::read(p).with_context(|| format!("reading {}", p.display()))?;
            ScoringTable::from_json(&bytes).with_context(|| format!("loading scoring table {}", p.display()))
        }
    }
}

/// Builds the HTTP gateway when the config asks for an LLM stage.
///
/// Must run outside an async runtime: the HTTP client is blocking.
pub fn gateway_for(cfg: &ServiceConfig) -> Result<Option<Arc<dyn ChatBackend>>> {
    if !cfg.needs_gateway() {
        return Ok(None);
    }
    let gw = HttpGateway::new(cfg.gateway.clone()).context("building gateway client")?;
    Ok(Some(Arc::new(gw)))
}

pub fn pipeline_for(
    cfg: &ServiceConfig,
    kb: KnowledgeBase,
    gateway: Option<Arc<dyn ChatBackend>>,
) -> Pipeline {
    Pipeline::shared(Arc::new(kb), cfg.pipeline.clone(), gateway)
}
