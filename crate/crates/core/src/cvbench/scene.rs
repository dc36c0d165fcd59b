use serde::{Deserialize, Serialize};

use super::{CvBenchError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Source {
    #[serde(rename = "coco", alias = "coco-like")]
    Coco,
    #[serde(rename = "ade", alias = "ade-like")]
    Ade,
    #[serde(rename = "omni3d", alias = "omni3d-like")]
    Omni3d,
}

/// Pixel box `(x, y, w, h)` with the origin at the top-left corner.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BBox2d {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl BBox2d {
    pub fn new(x: f64, y: f64, w: f64, h: f64) -> Self {
        Self { x, y, w, h }
    }

    pub fn center(&self) -> (f64, f64) {
        (self.x + self.w / 2.0, self.y + self.h / 2.0)
    }

    pub fn area(&self) -> f64 {
        self.w * self.h
    }
}

/// Camera-frame point in meters.
pub type Point3 = [f64; 3];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneObject {
    pub category: String,
    pub bbox2d: BBox2d,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub corners3d: Option<[Point3; 8]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub id: String,
    pub source: Source,
    pub objects: Vec<SceneObject>,
}

impl Scene {
    pub fn validate(&self) -> Result<()> {
        for (i, o) in self.objects.iter().enumerate() {
            let b = &o.bbox2d;
            let finite = [b.x, b.y, b.w, b.h].iter().all(|v| v.is_finite());
            if !finite || b.w <= 0.0 || b.h <= 0.0 {
                return Err(CvBenchError::InvalidScene {
                    id: self.id.clone(),
                    reason: format!("object {i} ({}) has a degenerate box", o.category),
                });
            }
            if let Some(c) = &o.corners3d {
                if c.iter().flatten().any(|v| !v.is_finite()) {
                    return Err(CvBenchError::InvalidScene {
                        id: self.id.clone(),
                        reason: format!("object {i} ({}) has non-finite corners", o.category),
                    });
                }
            }
        }
        Ok(())
    }

    /// Distinct categories in first-seen order.
    pub fn categories(&self) -> Vec<&str> {
        let mut seen: Vec<&str> = Vec::new();
        for o in &self.objects {
            if !seen.contains(&o.category.as_str()) {
                seen.push(&o.category);
            }
        }
        seen
    }

    pub fn instances<'a>(&'a self, category: &'a str) -> impl Iterator<Item = &'a SceneObject> + 'a {
        self.objects.iter().filter(move |o| o.category == category)
    }

    pub fn read_jsonl(path: impl AsRef<std::path::Path>) -> Result<Vec<Scene>> {
        let scenes: Vec<Scene> = crate::jsonl::read_file(path)?;
        for s in &scenes {
            s.validate()?;
        }
        Ok(scenes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corners_must_be_eight() {
        let line = r#"{"id":"s","source":"omni3d-like","objects":[{"category":"car","bbox2d":{"x":0,"y":0,"w":1,"h":1},"corners3d":[[0,0,1],[0,0,1]]}]}"#;
        assert!(serde_json::from_str::<Scene>(line).is_err());
    }

    #[test]
    fn zero_width_box_rejected() {
        let s = Scene {
            id: "a".into(),
            source: Source::Coco,
            objects: vec![SceneObject {
                category: "cat".into(),
                bbox2d: BBox2d::new(0.0, 0.0, 0.0, 4.0),
                corners3d: None,
            }],
        };
        assert!(s.validate().is_err());
    }
}
