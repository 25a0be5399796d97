//! Table-driven diabetes risk score.
//!
//! Seven questionnaire items (age, sex, gestational history, family
//! history, high blood pressure, physical activity and BMI) each add points
//! from a [`ScoringTable`]; the total selects a risk category with its
//! interpretation and recommendations.

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

const SHIPPED_TABLE: &str = include_str!("../assets/risk/ada_risk_test.json");

pub const CM_PER_INCH: f64 = 2.54;
pub const KG_PER_POUND: f64 = 0.45359237;

pub const AGE_RANGE: (u32, u32) = (18, 120);
pub const HEIGHT_RANGE_CM: (f64, f64) = (90.0, 250.0);
pub const WEIGHT_RANGE_KG: (f64, f64) = (30.0, 350.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Sex {
    Male,
    Female,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "unit", rename_all = "snake_case")]
pub enum Height {
    Cm { value: f64 },
    FtIn { feet: f64, inches: f64 },
}

impl Height {
    pub fn cm(&self) -> f64 {
        match *self {
            Height::Cm { value } => value,
            Height::FtIn { feet, inches } => (feet * 12.0 + inches) * CM_PER_INCH,
        }
    }
}

impl fmt::Display for Height {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Height::Cm { value } => write!(f, "{value} cm"),
            Height::FtIn { feet, inches } => write!(f, "{feet} ft {inches} in"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "unit", rename_all = "snake_case")]
pub enum Weight {
    Kg { value: f64 },
    Lb { value: f64 },
}

impl Weight {
    pub fn kg(&self) -> f64 {
        match *self {
            Weight::Kg { value } => value,
            Weight::Lb { value } => value * KG_PER_POUND,
        }
    }
}

impl fmt::Display for Weight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Weight::Kg { value } => write!(f, "{value} kg"),
            Weight::Lb { value } => write!(f, "{value} lb"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskProfile {
    pub age_years: u32,
    pub sex: Sex,
    pub gestational_history: bool,
    pub family_history: bool,
    pub high_blood_pressure: bool,
    pub physically_active: bool,
    pub height: Height,
    pub weight: Weight,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RiskError {
    #[error("{field} out of range: {message}")]
    OutOfRange { field: &'static str, message: String },
    #[error("invalid scoring table: {0}")]
    InvalidTable(String),
}

fn out_of_range(field: &'static str, message: String) -> RiskError {
    RiskError::OutOfRange { field, message }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgeBracket {
    pub min_age: u32,
    pub points: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BmiBracket {
    pub min_bmi: f64,
    pub points: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ItemPoints {
    pub gestational: u32,
    pub family: u32,
    pub blood_pressure: u32,
    pub inactive: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RiskCategory {
    pub min_score: u32,
    pub label: String,
    pub interpretation_text: String,
    pub recommendation_texts: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoringTable {
    #[serde(default)]
    pub name: String,
    /// Where the point values come from.
    #[serde(default)]
    pub provenance: String,
    pub age_brackets: Vec<AgeBracket>,
    pub sex_points: BTreeMap<Sex, u32>,
    pub item_points: ItemPoints,
    pub bmi_brackets: Vec<BmiBracket>,
    pub categories: Vec<RiskCategory>,
}

impl ScoringTable {
    /// The table bundled with the crate.
    pub fn shipped() -> Self {
        Self::from_json(SHIPPED_TABLE.as_bytes()).expect("shipped scoring table is valid")
    }

    pub fn from_json(bytes: &[u8]) -> Result<Self, RiskError> {
        let table: ScoringTable =
            serde_json::from_slice(bytes).map_err(|e| RiskError::InvalidTable(e.to_string()))?;
        table.check()?;
        Ok(table)
    }

    /// Check ordering, coverage and uniqueness invariants.
    pub fn check(&self) -> Result<(), RiskError> {
        let bad = |m: &str| Err(RiskError::InvalidTable(m.to_string()));
        if self.age_brackets.is_empty() || self.bmi_brackets.is_empty() || self.categories.is_empty() {
            return bad("brackets and categories must be non-empty");
        }
        if !self.age_brackets.windows(2).all(|w| w[0].min_age < w[1].min_age) {
            return bad("age brackets must be strictly increasing");
        }
        if !self.bmi_brackets.windows(2).all(|w| w[0].min_bmi < w[1].min_bmi) {
            return bad("BMI brackets must be strictly increasing");
        }
        if !self.categories.windows(2).all(|w| w[0].min_score < w[1].min_score) {
            return bad("categories must be strictly increasing in min_score");
        }
        let mut labels = HashSet::new();
        if !self.categories.iter().all(|c| labels.insert(c.label.as_str())) {
            return bad("category labels must be unique");
        }
        if self.age_brackets[0].min_age > AGE_RANGE.0 {
            return bad("age brackets must cover the youngest valid age");
        }
        let min_bmi = WEIGHT_RANGE_KG.0 / (HEIGHT_RANGE_CM.1 / 100.0).powi(2);
        if self.bmi_brackets[0].min_bmi > min_bmi {
            return bad("BMI brackets must cover the lowest valid BMI");
        }
        if self.categories[0].min_score != 0 {
            return bad("the lowest category must start at score 0");
        }
        if !(self.sex_points.contains_key(&Sex::Male) && self.sex_points.contains_key(&Sex::Female)) {
            return bad("sex_points needs Male and Female");
        }
        Ok(())
    }

    pub fn age_points(&self, age: u32) -> u32 {
        self.age_brackets
            .iter()
            .rev()
            .find(|b| b.min_age <= age)
            .map_or(0, |b| b.points)
    }

    pub fn bmi_points(&self, bmi: f64) -> u32 {
        self.bmi_brackets
            .iter()
            .rev()
            .find(|b| b.min_bmi <= bmi)
            .map_or(0, |b| b.points)
    }

    /// Highest category whose `min_score` does not exceed `total`.
    pub fn category(&self, total: u32) -> &RiskCategory {
        self.categories
            .iter()
            .rev()
            .find(|c| c.min_score <= total)
            .unwrap_or(&self.categories[0])
    }
}

/// BMI in kg/m², unrounded. Imperial inputs are converted first.
pub fn compute_bmi(height: &Height, weight: &Weight) -> Result<f64, RiskError> {
    let cm = height.cm();
    let kg = weight.kg();
    if !cm.is_finite() || !(HEIGHT_RANGE_CM.0..=HEIGHT_RANGE_CM.1).contains(&cm) {
        return Err(out_of_range(
            "height",
            format!("{cm:.1} cm is outside {}-{} cm", HEIGHT_RANGE_CM.0, HEIGHT_RANGE_CM.1),
        ));
    }
    if !kg.is_finite() || !(WEIGHT_RANGE_KG.0..=WEIGHT_RANGE_KG.1).contains(&kg) {
        return Err(out_of_range(
            "weight",
            format!("{kg:.1} kg is outside {}-{} kg", WEIGHT_RANGE_KG.0, WEIGHT_RANGE_KG.1),
        ));
    }
    let m = cm / 100.0;
    Ok(kg / (m * m))
}

/// BMI rounded to one decimal for display.
pub fn display_bmi(bmi: f64) -> f64 {
    (bmi * 10.0).round() / 10.0
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BreakdownItem {
    pub item_name: String,
    pub input_echo: String,
    pub points: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskResult {
    pub total_score: u32,
    pub category_label: String,
    pub interpretation: String,
    pub recommendations: Vec<String>,
    pub breakdown: Vec<BreakdownItem>,
    /// BMI rounded for display.
    pub bmi: f64,
}

impl RiskResult {
    /// e.g. `Score: 7 (Increased Risk)`.
    pub fn headline(&self) -> String {
        format!("Score: {} ({})", self.total_score, self.category_label)
    }
}

fn yes_no(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

pub fn score(profile: &RiskProfile, table: &ScoringTable) -> Result<RiskResult, RiskError> {
    if !(AGE_RANGE.0..=AGE_RANGE.1).contains(&profile.age_years) {
        return Err(out_of_range(
            "age_years",
            format!("{} is outside {}-{}", profile.age_years, AGE_RANGE.0, AGE_RANGE.1),
        ));
    }
    let bmi = compute_bmi(&profile.height, &profile.weight)?;
    let items = &table.item_points;
    let flag = |on: bool, pts: u32| if on { pts } else { 0 };

    let breakdown = vec![
        BreakdownItem {
            item_name: "age".into(),
            input_echo: format!("{} years", profile.age_years),
            points: table.age_points(profile.age_years),
        },
        BreakdownItem {
            item_name: "sex".into(),
            input_echo: format!("{:?}", profile.sex),
            points: table.sex_points.get(&profile.sex).copied().unwrap_or(0),
        },
        BreakdownItem {
            item_name: "gestational_history".into(),
            input_echo: yes_no(profile.gestational_history).into(),
            points: flag(profile.gestational_history, items.gestational),
        },
        BreakdownItem {
            item_name: "family_history".into(),
            input_echo: yes_no(profile.family_history).into(),
            points: flag(profile.family_history, items.family),
        },
        BreakdownItem {
            item_name: "high_blood_pressure".into(),
            input_echo: yes_no(profile.high_blood_pressure).into(),
            points: flag(profile.high_blood_pressure, items.blood_pressure),
        },
        BreakdownItem {
            item_name: "physical_activity".into(),
            input_echo: if profile.physically_active { "active" } else { "not active" }.into(),
            points: flag(!profile.physically_active, items.inactive),
        },
        BreakdownItem {
            item_name: "bmi".into(),
            input_echo: format!(
                "BMI {:.1} kg/m² ({}, {})",
                display_bmi(bmi),
                profile.height,
                profile.weight
            ),
            points: table.bmi_points(bmi),
        },
    ];
    let total_score = breakdown.iter().map(|b| b.points).sum();
    let category = table.category(total_score);
    Ok(RiskResult {
        total_score,
        category_label: category.label.clone(),
        interpretation: category.interpretation_text.clone(),
        recommendations: category.recommendation_texts.clone(),
        breakdown,
        bmi: display_bmi(bmi),
    })
}
