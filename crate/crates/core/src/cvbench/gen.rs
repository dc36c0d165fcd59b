use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::item::{Color, Overlay, QuestionItem, Status, Task};
use super::scene::{Point3, Scene, SceneObject, Source};
use super::templates::{plural, Templates};
use super::Result;

/// Default separation margin for both 3D tasks, in meters.
pub const DEFAULT_OFFSET_M: f64 = 0.3;

pub const COCO_CATEGORIES: [&str; 80] = [
    "person", "bicycle", "car", "motorcycle", "airplane", "bus", "train", "truck", "boat",
    "traffic light", "fire hydrant", "stop sign", "parking meter", "bench", "bird", "cat", "dog",
    "horse", "sheep", "cow", "elephant", "bear", "zebra", "giraffe", "backpack", "umbrella",
    "handbag", "tie", "suitcase", "frisbee", "skis", "snowboard", "sports ball", "kite",
    "baseball bat", "baseball glove", "skateboard", "surfboard", "tennis racket", "bottle",
    "wine glass", "cup", "fork", "knife", "spoon", "bowl", "banana", "apple", "sandwich", "orange",
    "broccoli", "carrot", "hot dog", "pizza", "donut", "cake", "chair", "couch", "potted plant",
    "bed", "dining table", "toilet", "tv", "laptop", "mouse", "remote", "keyboard", "cell phone",
    "microwave", "oven", "toaster", "sink", "refrigerator", "book", "clock", "vase", "scissors",
    "teddy bear", "hair drier", "toothbrush",
];

#[derive(Debug, Clone, PartialEq)]
pub struct GenConfig {
    pub seed: u64,
    pub depth_offset: f64,
    pub distance_offset: f64,
    /// Candidates for existence-check count items.
    pub count_vocabulary: Vec<String>,
    pub templates: Templates,
}

impl Default for GenConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            depth_offset: DEFAULT_OFFSET_M,
            distance_offset: DEFAULT_OFFSET_M,
            count_vocabulary: COCO_CATEGORIES.iter().map(|s| s.to_string()).collect(),
            templates: Templates::default(),
        }
    }
}

/// Per-scene seed so that results do not depend on scene order or threads.
pub fn scene_seed(seed: u64, scene_id: &str) -> u64 {
    crate::seed::derive(seed, scene_id)
}

/// Five consecutive non-negative counts containing `n`, starting at
/// `max(0, n - 2)`.
pub fn count_window(n: usize) -> [usize; 5] {
    let lo = n.saturating_sub(2);
    [lo, lo + 1, lo + 2, lo + 3, lo + 4]
}

fn item(
    scene: &Scene,
    id: String,
    task: Task,
    prompt: String,
    choices: Vec<String>,
    answer_index: usize,
    overlays: Vec<Overlay>,
) -> QuestionItem {
    QuestionItem {
        id,
        scene_id: scene.id.clone(),
        source: scene.source,
        task,
        prompt,
        choices,
        answer_index,
        overlays,
        status: Status::Pending,
        edited_answer: None,
    }
}

fn largest<'a>(scene: &'a Scene, category: &'a str) -> &'a SceneObject {
    scene
        .instances(category)
        .reduce(|best, o| if o.bbox2d.area() > best.bbox2d.area() { o } else { best })
        .expect("category present")
}

/// Direction of the non-anchor object relative to a randomly designated
/// anchor, along whichever image axis separates their box centers more.
/// Only scenes with exactly two categories qualify; when a category has
/// several instances its largest box is used and marked by an overlay.
pub fn gen_spatial(scene: &Scene, seed: u64, templates: &Templates) -> Vec<QuestionItem> {
    let cats = scene.categories();
    if cats.len() != 2 {
        return Vec::new();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let anchor_idx = rng.random_range(0..2);
    let (anchor_cat, other_cat) = (cats[anchor_idx], cats[1 - anchor_idx]);
    let (anchor, other) = (largest(scene, anchor_cat), largest(scene, other_cat));
    let (ax, ay) = anchor.bbox2d.center();
    let (ox, oy) = other.bbox2d.center();
    let (dx, dy) = (ox - ax, oy - ay);
    if dx == 0.0 && dy == 0.0 {
        return Vec::new();
    }
    let (mut choices, answer) = if dx.abs() >= dy.abs() {
        (["left", "right"], if dx > 0.0 { "right" } else { "left" })
    } else {
        // image y grows downward
        (["above", "below"], if dy > 0.0 { "below" } else { "above" })
    };
    choices.shuffle(&mut rng);
    let prompt = Templates::fill(
        &templates.spatial_relationship,
        &[("a", other_cat), ("b", anchor_cat)],
    );
    vec![item(
        scene,
        format!("{}-spatial", scene.id),
        Task::SpatialRelationship,
        prompt,
        choices.iter().map(|s| s.to_string()).collect(),
        choices.iter().position(|&c| c == answer).expect("answer among choices"),
        vec![
            Overlay { bbox2d: other.bbox2d, color: Color::Red },
            Overlay { bbox2d: anchor.bbox2d, color: Color::Blue },
        ],
    )]
}

fn count_item(scene: &Scene, category: &str, n: usize, rng: &mut ChaCha8Rng, templates: &Templates) -> QuestionItem {
    let mut options = count_window(n);
    options.shuffle(rng);
    item(
        scene,
        format!("{}-count-{}", scene.id, category.replace(' ', "_")),
        Task::ObjectCount,
        Templates::fill(&templates.object_count, &[("plural", &plural(category))]),
        options.iter().map(|o| o.to_string()).collect(),
        options.iter().position(|&o| o == n).expect("window holds n"),
        Vec::new(),
    )
}

/// One count item for a sampled present category and one existence check
/// (answer 0) for a sampled vocabulary category absent from the scene.
pub fn gen_count<S: AsRef<str>>(
    scene: &Scene,
    seed: u64,
    vocabulary: &[S],
    templates: &Templates,
) -> Vec<QuestionItem> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cats = scene.categories();
    let mut out = Vec::new();
    if !cats.is_empty() {
        let cat = cats[rng.random_range(0..cats.len())];
        let n = scene.instances(cat).count();
        out.push(count_item(scene, cat, n, &mut rng, templates));
    }
    let absent: Vec<&str> = vocabulary
        .iter()
        .map(|v| v.as_ref())
        .filter(|v| !cats.contains(v))
        .collect();
    if !absent.is_empty() {
        let cat = absent[rng.random_range(0..absent.len())];
        out.push(count_item(scene, cat, 0, &mut rng, templates));
    }
    out
}

/// Categories with exactly one instance, which carries a 3D box. Sorted.
fn unique_3d(scene: &Scene) -> Vec<(&str, &SceneObject)> {
    let mut cats: Vec<&str> = scene.categories();
    cats.sort_unstable();
    cats.into_iter()
        .filter_map(|c| {
            let mut it = scene.instances(c);
            match (it.next(), it.next()) {
                (Some(o), None) if o.corners3d.is_some() => Some((c, o)),
                _ => None,
            }
        })
        .collect()
}

fn dist(a: &Point3, b: &Point3) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

fn vertex_range(corners: &[Point3; 8], reference: &Point3) -> (f64, f64) {
    corners.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
        let d = dist(p, reference);
        (lo.min(d), hi.max(d))
    })
}

/// `Some(0)` when the first range lies wholly nearer by more than `offset`,
/// `Some(1)` for the reverse, `None` when they overlap within the margin.
fn separated(a: (f64, f64), b: (f64, f64), offset: f64) -> Option<usize> {
    if a.1 + offset < b.0 {
        Some(0)
    } else if b.1 + offset < a.0 {
        Some(1)
    } else {
        None
    }
}

pub(crate) fn centroid(corners: &[Point3; 8]) -> Point3 {
    let mut c = [0.0; 3];
    for p in corners {
        for (acc, v) in c.iter_mut().zip(p) {
            *acc += v / 8.0;
        }
    }
    c
}

const ORIGIN: Point3 = [0.0; 3];

/// Which of two objects is nearer the camera origin, for every pair whose
/// vertex distance ranges are separated by more than `offset`.
pub fn gen_depth_order(scene: &Scene, offset: f64, templates: &Templates) -> Vec<QuestionItem> {
    let objs = unique_3d(scene);
    let mut out = Vec::new();
    for i in 0..objs.len() {
        for j in i + 1..objs.len() {
            let ((a, oa), (b, ob)) = (objs[i], objs[j]);
            let ra = vertex_range(oa.corners3d.as_ref().expect("3d"), &ORIGIN);
            let rb = vertex_range(ob.corners3d.as_ref().expect("3d"), &ORIGIN);
            let Some(answer) = separated(ra, rb, offset) else {
                continue;
            };
            let prompt = Templates::fill(
                &templates.depth_order,
                &[("a", a), ("color_a", "red"), ("b", b), ("color_b", "blue")],
            );
            out.push(item(
                scene,
                format!("{}-depth-{}-{}", scene.id, a.replace(' ', "_"), b.replace(' ', "_")),
                Task::DepthOrder,
                prompt,
                vec![a.to_string(), b.to_string()],
                answer,
                vec![
                    Overlay { bbox2d: oa.bbox2d, color: Color::Red },
                    Overlay { bbox2d: ob.bbox2d, color: Color::Blue },
                ],
            ));
        }
    }
    out
}

/// Which of two objects is nearer a third (anchor) object, measured from
/// each vertex to the anchor's centroid. Every choice of anchor within
/// every triple of eligible categories is tried.
pub fn gen_relative_distance(scene: &Scene, offset: f64, templates: &Templates) -> Vec<QuestionItem> {
    let objs = unique_3d(scene);
    let mut out = Vec::new();
    let n = objs.len();
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                let triple = [objs[i], objs[j], objs[k]];
                for anchor_pos in 0..3 {
                    let (anchor, oanchor) = triple[anchor_pos];
                    let mut rest = triple.iter().enumerate().filter(|(p, _)| *p != anchor_pos).map(|(_, t)| *t);
                    let (a, oa) = rest.next().expect("two left");
                    let (b, ob) = rest.next().expect("two left");
                    let c = centroid(oanchor.corners3d.as_ref().expect("3d"));
                    let ra = vertex_range(oa.corners3d.as_ref().expect("3d"), &c);
                    let rb = vertex_range(ob.corners3d.as_ref().expect("3d"), &c);
                    let Some(answer) = separated(ra, rb, offset) else {
                        continue;
                    };
                    let prompt = Templates::fill(
                        &templates.relative_distance,
                        &[
                            ("anchor", anchor),
                            ("color_anchor", "red"),
                            ("a", a),
                            ("color_a", "blue"),
                            ("b", b),
                            ("color_b", "green"),
                        ],
                    );
                    out.push(item(
                        scene,
                        format!(
                            "{}-distance-{}-{}-{}",
                            scene.id,
                            anchor.replace(' ', "_"),
                            a.replace(' ', "_"),
                            b.replace(' ', "_")
                        ),
                        Task::RelativeDistance,
                        prompt,
                        vec![a.to_string(), b.to_string()],
                        answer,
                        vec![
                            Overlay { bbox2d: oanchor.bbox2d, color: Color::Red },
                            Overlay { bbox2d: oa.bbox2d, color: Color::Blue },
                            Overlay { bbox2d: ob.bbox2d, color: Color::Green },
                        ],
                    ));
                }
            }
        }
    }
    out
}

/// 2D tasks for COCO/ADE scenes, 3D tasks for Omni3D scenes. Output order
/// follows scene order.
pub fn generate_all(scenes: &[Scene], cfg: &GenConfig) -> Result<Vec<QuestionItem>> {
    for s in scenes {
        s.validate()?;
    }
    let per_scene: Vec<Vec<QuestionItem>> = scenes
        .par_iter()
        .map(|s| {
            let seed = scene_seed(cfg.seed, &s.id);
            match s.source {
                Source::Coco | Source::Ade => {
                    let mut v = gen_spatial(s, seed, &cfg.templates);
                    v.extend(gen_count(s, seed.wrapping_add(1), &cfg.count_vocabulary, &cfg.templates));
                    v
                }
                Source::Omni3d => {
                    let mut v = gen_depth_order(s, cfg.depth_offset, &cfg.templates);
                    v.extend(gen_relative_distance(s, cfg.distance_offset, &cfg.templates));
                    v
                }
            }
        })
        .collect();
    Ok(per_scene.into_iter().flatten().collect())
}

#[cfg(test)]
mod tests {
    use super::super::scene::BBox2d;
    use super::*;

    fn obj(cat: &str, x: f64, y: f64) -> SceneObject {
        SceneObject {
            category: cat.into(),
            bbox2d: BBox2d::new(x - 5.0, y - 5.0, 10.0, 10.0),
            corners3d: None,
        }
    }

    /// Axis-aligned cube of half-size `h` centered at `c`.
    fn cube(cat: &str, c: Point3, h: f64) -> SceneObject {
        let mut corners = [[0.0; 3]; 8];
        for (n, p) in corners.iter_mut().enumerate() {
            for (axis, v) in p.iter_mut().enumerate() {
                *v = c[axis] + if n >> axis & 1 == 1 { h } else { -h };
            }
        }
        SceneObject {
            category: cat.into(),
            bbox2d: BBox2d::new(0.0, 0.0, 1.0, 1.0),
            corners3d: Some(corners),
        }
    }

    fn scene(source: Source, objects: Vec<SceneObject>) -> Scene {
        Scene { id: "s".into(), source, objects }
    }

    #[test]
    fn right_of_anchor() {
        let t = Templates::default();
        for seed in 0..8 {
            let s = scene(Source::Ade, vec![obj("lamp", 10.0, 50.0), obj("sofa", 90.0, 50.0)]);
            let q = &gen_spatial(&s, seed, &t)[0];
            let expect = if q.prompt.contains("where is the sofa") { "right" } else { "left" };
            assert_eq!(q.choices[q.answer_index], expect);
        }
    }

    #[test]
    fn three_categories_skipped() {
        let s = scene(Source::Ade, vec![obj("a", 1.0, 1.0), obj("b", 2.0, 2.0), obj("c", 3.0, 3.0)]);
        assert!(gen_spatial(&s, 0, &Templates::default()).is_empty());
    }

    #[test]
    fn count_of_four() {
        assert_eq!(count_window(4), [2, 3, 4, 5, 6]);
        assert_eq!(count_window(1), [0, 1, 2, 3, 4]);
        let s = scene(Source::Coco, (0..4).map(|i| obj("train", i as f64 * 20.0, 5.0)).collect());
        let items = gen_count(&s, 3, &["train", "bus"], &Templates::default());
        assert_eq!(items.len(), 2);
        assert_eq!(items[0].answer(), "4");
        let mut opts: Vec<usize> = items[0].choices.iter().map(|c| c.parse().unwrap()).collect();
        opts.sort();
        assert_eq!(opts, vec![2, 3, 4, 5, 6]);
        assert_eq!(items[1].answer(), "0");
        assert!(items[1].prompt.contains("buses"));
    }

    #[test]
    fn depth_forced_and_interleaved() {
        let t = Templates::default();
        let s = scene(Source::Omni3d, vec![cube("a", [0.0, 0.0, 2.0], 0.1), cube("b", [0.0, 0.0, 6.0], 0.1)]);
        let q = gen_depth_order(&s, 0.5, &t);
        assert_eq!(q.len(), 1);
        assert_eq!(q[0].answer(), "a");
        let s = scene(Source::Omni3d, vec![cube("a", [0.0, 0.0, 3.0], 0.5), cube("b", [0.0, 0.0, 4.0], 0.5)]);
        assert!(gen_depth_order(&s, 0.0, &t).is_empty());
    }

    #[test]
    fn duplicate_instances_excluded_from_3d() {
        let s = scene(
            Source::Omni3d,
            vec![cube("a", [0.0, 0.0, 2.0], 0.1), cube("a", [1.0, 0.0, 2.0], 0.1), cube("b", [0.0, 0.0, 9.0], 0.1)],
        );
        assert!(gen_depth_order(&s, 0.1, &Templates::default()).is_empty());
    }

    #[test]
    fn relative_distance_overlays() {
        let s = scene(
            Source::Omni3d,
            vec![
                cube("cone", [0.0, 0.0, 10.0], 0.2),
                cube("bike", [1.0, 0.0, 10.0], 0.2),
                cube("bus", [7.0, 0.0, 10.0], 0.2),
            ],
        );
        let items = gen_relative_distance(&s, 1.0, &Templates::default());
        let q = items.iter().find(|q| q.id == "s-distance-cone-bike-bus").unwrap();
        assert_eq!(q.answer(), "bike");
        let colors: Vec<Color> = q.overlays.iter().map(|o| o.color).collect();
        assert_eq!(colors, Color::ORDER);
    }

    #[test]
    fn scene_seed_depends_on_both_inputs() {
        assert_ne!(scene_seed(1, "a"), scene_seed(2, "a"));
        assert_ne!(scene_seed(1, "a"), scene_seed(1, "b"));
        assert_eq!(scene_seed(1, "a"), scene_seed(1, "a"));
    }
}
