use serde::Deserialize;

use super::{CvBenchError, Result};

const BUNDLED: &str = include_str!("../../resources/cvbench_templates.json");

/// Question wording per task. Placeholders are `{name}` and are filled by
/// plain substitution.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct Templates {
    pub version: u32,
    pub answer_suffix: String,
    pub spatial_relationship: String,
    pub object_count: String,
    pub depth_order: String,
    pub relative_distance: String,
}

impl Default for Templates {
    fn default() -> Self {
        Self::parse(BUNDLED).expect("bundled templates parse")
    }
}

impl Templates {
    pub fn parse(json: &str) -> Result<Self> {
        serde_json::from_str(json).map_err(|e| CvBenchError::Template(e.to_string()))
    }

    pub fn fill(template: &str, vars: &[(&str, &str)]) -> String {
        let mut s = template.to_string();
        for (k, v) in vars {
            s = s.replace(&format!("{{{k}}}"), v);
        }
        s
    }
}

/// Naive English plural for category names.
pub(crate) fn plural(noun: &str) -> String {
    match noun {
        "person" => "people".into(),
        "mouse" => "mice".into(),
        "sheep" | "skis" | "scissors" => noun.into(),
        _ if noun.ends_with('s') || noun.ends_with('x') || noun.ends_with("ch") || noun.ends_with("sh") => {
            format!("{noun}es")
        }
        _ if noun.ends_with('y') && !noun.ends_with("ay") && !noun.ends_with("ey") && !noun.ends_with("oy") => {
            format!("{}ies", &noun[..noun.len() - 1])
        }
        _ => format!("{noun}s"),
    }
}
