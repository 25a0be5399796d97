//! Service configuration: one TOML document plus environment overrides.
//!
//! Every key is optional. Defaults:
//!
//! ```toml
//! [kb]
//! # path = "kb.json"            # .json → KB document, anything else → markup
//!
//! [pipeline]
//! router = "keyword"             # keyword | llm
//! backend = "extractive"         # extractive | llm
//! max_bundle_size = 12
//! prefilter = "none"             # none | lexical
//!
//! [gateway]
//! base_url = "https://openrouter.ai/api/v1"
//! model = "openai/gpt-4o"
//! timeout_ms = 30000
//! max_retries = 2
//! backoff_initial_ms = 250
//! backoff_multiplier = 2.0
//!
//! [risk]
//! # table_path = "risk_table.json"
//!
//! [server]
//! host = "127.0.0.1"
//! port = 8080
//! cors_allowed_origins = []      # empty → any origin
//! ```
//!
//! Environment overrides: `GUIDEQA_KB_PATH`, `GUIDEQA_ROUTER`,
//! `GUIDEQA_BACKEND`, `GUIDEQA_GATEWAY_BASE_URL`, `GUIDEQA_MODEL`,
//! `GUIDEQA_RISK_TABLE`, `GUIDEQA_HOST`, `GUIDEQA_PORT`,
//! `GUIDEQA_CORS_ORIGINS` (comma-separated). The API key is read only from
//! `GATEWAY_API_KEY` and never from the file.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use guideqa_core::gateway::GatewayConfig;
use guideqa_core::pipeline::{BackendChoice, PipelineConfig, RouterChoice};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KbConfig {
    pub path: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RiskConfig {
    pub table_path: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServerConfig {
    pub host: String,
    pub port: u16,
    pub cors_allowed_origins: Vec<String>,
}

impl Default for ServerConfig {
    fn default() -> Self {
        Self {
            host: "127.0.0.1".to_string(),
            port: 8080,
            cors_allowed_origins: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServiceConfig {
    pub kb: KbConfig,
    pub pipeline: PipelineConfig,
    pub gateway: GatewayConfig,
    pub risk: RiskConfig,
    pub server: ServerConfig,
}

impl ServiceConfig {
    /// Read `path` if given, then apply the process environment.
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let mut cfg = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .with_context(|| format!("reading config {}", p.display()))?;
                Self::from_toml(&text).with_context(|| format!("parsing config {}", p.display()))?
            }
            None => Self::default(),
        };
        cfg.apply_env(|k| std::env::var(k).ok())?;
        Ok(cfg)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn apply_env(&mut self, var: impl Fn(&str) -> Option<String>) -> Result<()> {
        if let Some(v) = var("GUIDEQA_KB_PATH") {
            self.kb.path = Some(v.into());
        }
        if let Some(v) = var("GUIDEQA_ROUTER") {
            self.pipeline.router = parse_router(&v)?;
        }
        if let Some(v) = var("GUIDEQA_BACKEND") {
            self.pipeline.backend = parse_backend(&v)?;
        }
        if let Some(v) = var("GUIDEQA_GATEWAY_BASE_URL") {
            self.gateway.base_url = v;
        }
        if let Some(v) = var("GUIDEQA_MODEL") {
            self.gateway.model = v.clone();
            self.pipeline.generation.model_name = v;
        }
        if let Some(v) = var("GUIDEQA_RISK_TABLE") {
            self.risk.table_path = Some(v.into());
        }
        if let Some(v) = var("GUIDEQA_HOST") {
            self.server.host = v;
        }
        if let Some(v) = var("GUIDEQA_PORT") {
            self.server.port = v
                .parse()
                .with_context(|| format!("GUIDEQA_PORT `{v}` is not a port number"))?;
        }
        if let Some(v) = var("GUIDEQA_CORS_ORIGINS") {
            self.server.cors_allowed_origins = v
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(String::from)
                .collect();
        }
        if let Some(key) = var(guideqa_core::gateway::API_KEY_ENV).filter(|k| !k.is_empty()) {
            self.gateway.api_key = Some(guideqa_core::gateway::Secret::new(key));
        }
        Ok(())
    }

    pub fn needs_gateway(&self) -> bool {
        self.pipeline.backend == BackendChoice::Llm || self.pipeline.router == RouterChoice::Llm
    }
}

pub fn parse_backend(s: &str) -> Result<BackendChoice> {
    match s {
        "extractive" => Ok(BackendChoice::Extractive),
        "llm" => Ok(BackendChoice::Llm),
        _ => bail!("unknown backend `{s}` (expected extractive or llm)"),
    }
}

pub fn parse_router(s: &str) -> Result<RouterChoice> {
    match s {
        "keyword" => Ok(RouterChoice::Keyword),
        "llm" => Ok(RouterChoice::Llm),
        _ => bail!("unknown router `{s}` (expected keyword or llm)"),
    }
}
