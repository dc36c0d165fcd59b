//! Vision-centric multiple-choice items built from annotated scenes.

mod gen;
mod item;
mod scene;
mod score;
mod templates;

pub use gen::{
    count_window, gen_count, gen_depth_order, gen_relative_distance, gen_spatial, generate_all,
    scene_seed, GenConfig, COCO_CATEGORIES, DEFAULT_OFFSET_M,
};
pub use item::{Color, Overlay, QuestionItem, Status, Task};
pub use scene::{BBox2d, Point3, Scene, SceneObject, Source};
pub use score::{composition, score_cvbench, Composition, CvBenchScore, GradedItem};
pub use templates::Templates;

#[derive(Debug, thiserror::Error)]
pub enum CvBenchError {
    #[error("scene {id}: {reason}")]
    InvalidScene { id: String, reason: String },
    #[error("no graded items in bucket {0}")]
    EmptyBucket(&'static str),
    #[error("template: {0}")]
    Template(String),
    #[error(transparent)]
    Jsonl(#[from] crate::jsonl::JsonlError),
}

pub type Result<T> = std::result::Result<T, CvBenchError>;
