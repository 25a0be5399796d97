//! Command-line interface.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use guideqa_core::kb::serialize_kb;
use guideqa_core::pipeline::BackendChoice;
use guideqa_core::risk::{score, Height, RiskProfile, Sex, Weight};

use crate::api::{AskResponse, RiskResponse};
use crate::config::ServiceConfig;
use crate::load::{gateway_for, pipeline_for, read_kb, read_risk_table};
use crate::server::{self, AppState};
use crate::eval;

#[derive(Debug, Parser)]
#[command(name = "guideqa", version, about = "Guideline-grounded clinical question answering")]
pub struct Cli {
    /// TOML configuration file; environment variables override it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Backend {
    Extractive,
    Llm,
}

impl From<Backend> for BackendChoice {
    fn from(b: Backend) -> Self {
        match b {
            Backend::Extractive => BackendChoice::Extractive,
            Backend::Llm => BackendChoice::Llm,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Answer one question and print the two-part response.
    Ask {
        #[arg(long)]
        question: String,
        /// KB document (.json) or guideline markup.
        #[arg(long)]
        kb: Option<PathBuf>,
        #[arg(long, value_enum)]
        backend: Option<Backend>,
        /// Print the API response JSON instead of text.
        #[arg(long)]
        json: bool,
    },
    /// Score a diabetes risk profile.
    Risk(RiskArgs),
    /// Parse guideline markup and write the KB document.
    Ingest {
        #[arg(long)]
        markup: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run an evaluation case file and write the graded report.
    Eval {
        #[arg(long)]
        cases: PathBuf,
        #[arg(long)]
        report: PathBuf,
        #[arg(long)]
        kb: Option<PathBuf>,
        #[arg(long, value_enum)]
        backend: Option<Backend>,
    },
    /// Run the HTTP API.
    Serve {
        #[arg(long)]
        kb: Option<PathBuf>,
        #[arg(long)]
        host: Option<String>,
        #[arg(long)]
        port: Option<u16>,
    },
}

#[derive(Debug, Args)]
pub struct RiskArgs {
    /// JSON file holding a risk profile; the flags below are ignored when set.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub age: Option<u32>,
    #[arg(long, value_parser = ["male", "female"])]
    pub sex: Option<String>,
    #[arg(long)]
    pub gestational: bool,
    #[arg(long)]
    pub family_history: bool,
    #[arg(long)]
    pub high_blood_pressure: bool,
    #[arg(long)]
    pub inactive: bool,
    #[arg(long, conflicts_with_all = ["height_ft", "height_in"])]
    pub height_cm: Option<f64>,
    #[arg(long)]
    pub height_ft: Option<f64>,
    #[arg(long)]
    pub height_in: Option<f64>,
    #[arg(long, conflicts_with = "weight_lb")]
    pub weight_kg: Option<f64>,
    #[arg(long)]
    pub weight_lb: Option<f64>,
    #[arg(long)]
    pub json: bool,
}

impl RiskArgs {
    pub fn profile(&self) -> Result<RiskProfile> {
        if let Some(path) = &self.input {
            let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
            return serde_json::from_slice(&bytes)
                .with_context(|| format!("parsing risk profile {}", path.display()));
        }
        let Some(age_years) = self.age else { bail!("--age is required without --input") };
        let sex = match self.sex.as_deref() {
            Some("male") => Sex::Male,
            Some("female") => Sex::Female,
            _ => bail!("--sex is required without --input"),
        };
        let height = match (self.height_cm, self.height_ft, self.height_in) {
            (Some(value), _, _) => Height::Cm { value },
            (None, Some(feet), inches) => Height::FtIn { feet, inches: inches.unwrap_or(0.0) },
            _ => bail!("give --height-cm or --height-ft [--height-in]"),
        };
        let weight = match (self.weight_kg, self.weight_lb) {
            (Some(value), _) => Weight::Kg { value },
            (None, Some(value)) => Weight::Lb { value },
            _ => bail!("give --weight-kg or --weight-lb"),
        };
        Ok(RiskProfile {
            age_years,
            sex,
            gestational_history: self.gestational,
            family_history: self.family_history,
            high_blood_pressure: self.high_blood_pressure,
            physically_active: !self.inactive,
            height,
            weight,
        })
    }
}

fn apply_overrides(cfg: &mut ServiceConfig, kb: Option<PathBuf>, backend: Option<Backend>) {
    if let Some(kb) = kb {
        cfg.kb.path = Some(kb);
    }
    if let Some(b) = backend {
        cfg.pipeline.backend = b.into();
    }
}

fn require_kb(cfg: &ServiceConfig) -> Result<PathBuf> {
    cfg.kb
        .path
        .clone()
        .context("no knowledge base configured; pass --kb or set GUIDEQA_KB_PATH")
}

pub fn run(cli: Cli) -> Result<ExitCode> {
    let mut cfg = ServiceConfig::load(cli.config.as_deref())?;
    match cli.command {
        Command::Ask { question, kb, backend, json } => {
            apply_overrides(&mut cfg, kb, backend);
            let kb = read_kb(&require_kb(&cfg)?)?;
            let pipeline = pipeline_for(&cfg, kb, gateway_for(&cfg)?);
            let started = Instant::now();
            let answer = pipeline.ask(&question)?;
            let resp = AskResponse::from_answer(&answer, started.elapsed().as_millis() as u64);
            if json {
                println!("{}", serde_json::to_string_pretty(&resp)?);
            } else {
                print!("{}", resp.render_text());
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Risk(args) => {
            let table = read_risk_table(cfg.risk.table_path.as_deref())?;
            let resp = RiskResponse::from(score(&args.profile()?, &table)?);
            if args.json {
                println!("{}", serde_json::to_string_pretty(&resp)?);
            } else {
                print!("{}", resp.render_text());
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Ingest { markup, out } => {
            let kb = read_kb(&markup)?;
            std::fs::write(&out, serialize_kb(&kb))
                .with_context(|| format!("writing {}", out.display()))?;
            eprintln!(
                "wrote {} units in {} sections to {}",
                kb.units.len(),
                kb.catalog.entries.len(),
                out.display()
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Eval { cases, report, kb, backend } => {
            apply_overrides(&mut cfg, kb, backend);
            let kb = read_kb(&require_kb(&cfg)?)?;
            let pipeline = pipeline_for(&cfg, kb, gateway_for(&cfg)?);
            let cases = eval::read_cases(&cases)?;
            let result = eval::run(&pipeline, &cases);
            std::fs::write(&report, result.to_json())
                .with_context(|| format!("writing {}", report.display()))?;
            println!("{}", result.summary());
            Ok(if result.has_errors() { ExitCode::FAILURE } else { ExitCode::SUCCESS })
        }
        Command::Serve { kb, host, port } => {
            apply_overrides(&mut cfg, kb, None);
            if let Some(h) = host {
                cfg.server.host = h;
            }
            if let Some(p) = port {
                cfg.server.port = p;
            }
            let pipeline = match &cfg.kb.path {
                Some(path) => Some(pipeline_for(&cfg, read_kb(path)?, gateway_for(&cfg)?)),
                None => {
                    tracing::warn!("no knowledge base configured; /ask will return 503");
                    None
                }
            };
            let mut state = AppState::new(pipeline, read_risk_table(cfg.risk.table_path.as_deref())?);
            state.cors_allowed_origins = cfg.server.cors_allowed_origins.clone();
            let addr = format!("{}:{}", cfg.server.host, cfg.server.port);
            let runtime = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
            runtime.block_on(server::serve(state, &addr))?;
            Ok(ExitCode::SUCCESS)
        }
    }
}
