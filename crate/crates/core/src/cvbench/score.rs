use std::fmt;

use serde::{Deserialize, Serialize};

use super::item::{QuestionItem, Task};
use super::scene::Source;
use super::{CvBenchError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradedItem {
    pub id: String,
    pub task: Task,
    pub source: Source,
    pub correct: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CvBenchScore {
    pub acc_coco: f64,
    pub acc_ade: f64,
    pub acc_2d: f64,
    pub acc_3d: f64,
    pub overall: f64,
}

impl CvBenchScore {
    /// 2D is the mean of the two 2D sources, overall the mean of 2D and 3D.
    pub fn from_parts(acc_coco: f64, acc_ade: f64, acc_3d: f64) -> Self {
        let acc_2d = (acc_coco + acc_ade) / 2.0;
        Self {
            acc_coco,
            acc_ade,
            acc_2d,
            acc_3d,
            overall: (acc_2d + acc_3d) / 2.0,
        }
    }
}

fn accuracy<'a>(name: &'static str, items: impl Iterator<Item = &'a GradedItem>) -> Result<f64> {
    let (mut hit, mut n) = (0usize, 0usize);
    for g in items {
        n += 1;
        hit += g.correct as usize;
    }
    if n == 0 {
        return Err(CvBenchError::EmptyBucket(name));
    }
    Ok(hit as f64 / n as f64)
}

/// 2D items are bucketed by source; all 3D items pool into one bucket.
pub fn score_cvbench(graded: &[GradedItem]) -> Result<CvBenchScore> {
    let two_d = |src: Source| move |g: &&GradedItem| !g.task.is_3d() && g.source == src;
    let acc_coco = accuracy("coco", graded.iter().filter(two_d(Source::Coco)))?;
    let acc_ade = accuracy("ade", graded.iter().filter(two_d(Source::Ade)))?;
    let acc_3d = accuracy("3d", graded.iter().filter(|g| g.task.is_3d()))?;
    Ok(CvBenchScore::from_parts(acc_coco, acc_ade, acc_3d))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Composition {
    pub spatial_relationship: usize,
    pub object_count: usize,
    pub depth_order: usize,
    pub relative_distance: usize,
    pub total: usize,
}

pub fn composition<'a>(tasks: impl IntoIterator<Item = &'a Task>) -> Composition {
    let mut c = Composition::default();
    for t in tasks {
        match t {
            Task::SpatialRelationship => c.spatial_relationship += 1,
            Task::ObjectCount => c.object_count += 1,
            Task::DepthOrder => c.depth_order += 1,
            Task::RelativeDistance => c.relative_distance += 1,
        }
        c.total += 1;
    }
    c
}

impl Composition {
    pub fn of_items(items: &[QuestionItem]) -> Self {
        composition(items.iter().map(|q| &q.task))
    }

    pub fn count(&self, task: Task) -> usize {
        match task {
            Task::SpatialRelationship => self.spatial_relationship,
            Task::ObjectCount => self.object_count,
            Task::DepthOrder => self.depth_order,
            Task::RelativeDistance => self.relative_distance,
        }
    }
}

/// One row per task: dimension, task name, sample count, then the total.
impl fmt::Display for Composition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<4}{:<22}Samples", "Type", "Task")?;
        for t in Task::ALL {
            let dim = if t.is_3d() { "3D" } else { "2D" };
            writeln!(f, "{dim:<4}{:<22}{}", t.label(), self.count(t))?;
        }
        write!(f, "{:<4}{:<22}{}", "", "Total", self.total)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(task: Task, source: Source, correct: bool) -> GradedItem {
        GradedItem { id: String::new(), task, source, correct }
    }

    #[test]
    fn composition_rows() {
        let c = Composition {
            spatial_relationship: 650,
            object_count: 788,
            depth_order: 600,
            relative_distance: 600,
            total: 2638,
        };
        let text = c.to_string();
        assert!(text.lines().any(|l| l == "3D  Depth Order           600"));
        assert!(text.ends_with("Total                 2638"));
    }

    #[test]
    fn formula() {
        let s = CvBenchScore::from_parts(0.6, 0.8, 0.7);
        assert!((s.acc_2d - 0.7).abs() < 1e-12);
        assert!((s.overall - 0.7).abs() < 1e-12);
    }

    #[test]
    fn missing_bucket_is_named() {
        let e = score_cvbench(&[g(Task::ObjectCount, Source::Coco, true), g(Task::DepthOrder, Source::Omni3d, true)])
            .unwrap_err();
        assert!(matches!(e, CvBenchError::EmptyBucket("ade")));
    }

    #[test]
    fn all_correct() {
        let s = score_cvbench(&[
            g(Task::ObjectCount, Source::Coco, true),
            g(Task::SpatialRelationship, Source::Ade, true),
            g(Task::RelativeDistance, Source::Omni3d, true),
        ])
        .unwrap();
        assert_eq!(s.overall, 1.0);
    }
}
