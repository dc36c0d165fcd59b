use serde::{Deserialize, Serialize};

use super::scene::{BBox2d, Source};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    SpatialRelationship,
    ObjectCount,
    DepthOrder,
    RelativeDistance,
}

impl Task {
    pub const ALL: [Task; 4] = [
        Task::SpatialRelationship,
        Task::ObjectCount,
        Task::DepthOrder,
        Task::RelativeDistance,
    ];

    pub fn is_3d(self) -> bool {
        matches!(self, Task::DepthOrder | Task::RelativeDistance)
    }

    pub fn label(self) -> &'static str {
        match self {
            Task::SpatialRelationship => "Spatial Relationship",
            Task::ObjectCount => "Object Count",
            Task::DepthOrder => "Depth Order",
            Task::RelativeDistance => "Relative Distance",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Color {
    Red,
    Blue,
    Green,
}

impl Color {
    pub const ORDER: [Color; 3] = [Color::Red, Color::Blue, Color::Green];

    pub fn name(self) -> &'static str {
        match self {
            Color::Red => "red",
            Color::Blue => "blue",
            Color::Green => "green",
        }
    }
}

/// Box drawn over the image to disambiguate an instance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Overlay {
    pub bbox2d: BBox2d,
    pub color: Color,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    #[default]
    Pending,
    Accepted,
    Modified,
    Rejected,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionItem {
    pub id: String,
    pub scene_id: String,
    pub source: Source,
    pub task: Task,
    pub prompt: String,
    pub choices: Vec<String>,
    pub answer_index: usize,
    #[serde(default)]
    pub overlays: Vec<Overlay>,
    #[serde(default)]
    pub status: Status,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edited_answer: Option<String>,
}

impl QuestionItem {
    pub fn answer(&self) -> &str {
        self.edited_answer
            .as_deref()
            .unwrap_or(&self.choices[self.answer_index])
    }

    /// Option letter of the answer, `"(A)"` style.
    pub fn answer_letter(&self) -> String {
        format!("({})", letter(self.answer_index))
    }

    /// Prompt, lettered options and the response-format suffix.
    pub fn render(&self, suffix: &str) -> String {
        let mut s = self.prompt.clone();
        for (i, c) in self.choices.iter().enumerate() {
            s.push_str(&format!("\n({}) {c}", letter(i)));
        }
        s.push_str(suffix);
        s
    }
}

fn letter(i: usize) -> char {
    (b'A' + i as u8) as char
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn render_letters_options() {
        let q = QuestionItem {
            id: "x".into(),
            scene_id: "s".into(),
            source: Source::Ade,
            task: Task::SpatialRelationship,
            prompt: "Where? ".into(),
            choices: vec!["right".into(), "left".into()],
            answer_index: 1,
            overlays: vec![],
            status: Status::Pending,
            edited_answer: None,
        };
        assert_eq!(q.render("\nGo."), "Where? \n(A) right\n(B) left\nGo.");
        assert_eq!(q.answer_letter(), "(B)");
        assert_eq!(q.answer(), "left");
    }
}
