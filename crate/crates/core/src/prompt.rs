//! Versioned prompt templates.
//!
//! Each asset holds a system part and a user part separated by a
//! `=== user ===` line; `{{name}}` placeholders are filled by [`render`].

pub const ROUTE_V1: &str = include_str!("../assets/prompts/route_v1.txt");
pub const ANSWER_V1: &str = include_str!("../assets/prompts/answer_v1.txt");
pub const REPAIR_V1: &str = include_str!("../assets/prompts/repair_v1.txt");

const USER_MARKER: &str = "=== user ===\n";

/// Look up an answer template by id.
pub fn answer_template(id: &str) -> Option<&'static str> {
    match id {
        "answer_v1" => Some(ANSWER_V1),
        _ => None,
    }
}

/// Fill placeholders and split into (system, user) text.
pub fn render(template: &str, vars: &[(&str, &str)]) -> (String, String) {
    let mut filled = template.to_string();
    for (name, value) in vars {
        filled = filled.replace(&format!("{{{{{name}}}}}"), value);
    }
    match filled.split_once(USER_MARKER) {
        Some((system, user)) => (system.trim_end().to_string(), user.trim_end().to_string()),
        None => (String::new(), filled.trim_end().to_string()),
    }
}
