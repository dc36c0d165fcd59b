//! Seeded fixture builders shared by the integration tests.
#![allow(dead_code)]

use forge_core::curator::{Category, DataPool, PoolRecord};
use forge_core::cvbench::{BBox2d, Point3, QuestionItem, Scene, SceneObject, Source, Status, Task};
use forge_core::eval::{BenchCategory, BenchmarkMeta, ScoreTable};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

const NAMES: [&str; 8] = ["car", "chair", "cup", "dog", "lamp", "person", "sofa", "table"];

fn random_box(rng: &mut ChaCha8Rng) -> BBox2d {
    BBox2d::new(
        rng.random_range(0.0..600.0),
        rng.random_range(0.0..400.0),
        rng.random_range(1.0..200.0),
        rng.random_range(1.0..200.0),
    )
}

/// A 2D scene with exactly two categories, each with one to three instances.
pub fn two_category_scene(rng: &mut ChaCha8Rng, id: &str, source: Source) -> Scene {
    let mut names = NAMES.to_vec();
    names.shuffle(rng);
    let mut objects = Vec::new();
    for name in &names[..2] {
        for _ in 0..rng.random_range(1..=3) {
            objects.push(SceneObject {
                category: name.to_string(),
                bbox2d: random_box(rng),
                corners3d: None,
            });
        }
    }
    objects.shuffle(rng);
    Scene {
        id: id.into(),
        source,
        objects,
    }
}

/// A 2D scene holding `counts[i]` instances of category `names[i]`.
pub fn counted_scene(rng: &mut ChaCha8Rng, id: &str, counts: &[(&str, usize)]) -> Scene {
    let mut objects = Vec::new();
    for &(name, n) in counts {
        for _ in 0..n {
            objects.push(SceneObject {
                category: name.to_string(),
                bbox2d: random_box(rng),
                corners3d: None,
            });
        }
    }
    objects.shuffle(rng);
    Scene {
        id: id.into(),
        source: Source::Coco,
        objects,
    }
}

/// Corners of an axis-aligned box centered at `c` with half-extents `h`.
pub fn cuboid(c: Point3, h: Point3) -> [Point3; 8] {
    let mut out = [[0.0; 3]; 8];
    for (i, p) in out.iter_mut().enumerate() {
        for axis in 0..3 {
            let sign = if (i >> axis) & 1 == 1 { 1.0 } else { -1.0 };
            p[axis] = c[axis] + sign * h[axis];
        }
    }
    out
}

/// A 3D scene with three to six categories in front of the camera; some
/// categories get a second instance, which makes them ineligible.
pub fn scene_3d(rng: &mut ChaCha8Rng, id: &str) -> Scene {
    let mut names = NAMES.to_vec();
    names.shuffle(rng);
    let k = rng.random_range(3..=6);
    let mut objects = Vec::new();
    for name in &names[..k] {
        let copies = if rng.random_bool(0.15) { 2 } else { 1 };
        for _ in 0..copies {
            let center = [
                rng.random_range(-3.0..3.0),
                rng.random_range(-1.5..1.5),
                rng.random_range(1.0..12.0),
            ];
            let half = [
                rng.random_range(0.05..0.8),
                rng.random_range(0.05..0.8),
                rng.random_range(0.05..0.8),
            ];
            objects.push(SceneObject {
                category: name.to_string(),
                bbox2d: random_box(rng),
                corners3d: Some(cuboid(center, half)),
            });
        }
    }
    Scene {
        id: id.into(),
        source: Source::Omni3d,
        objects,
    }
}

/// `sizes[i]` records from source `src{i}`, categories cycling through all seven.
pub fn pool(sizes: &[usize]) -> DataPool {
    let mut records = Vec::with_capacity(sizes.iter().sum());
    for (s, &n) in sizes.iter().enumerate() {
        let source = format!("src{s}");
        for i in 0..n {
            records.push(PoolRecord {
                id: format!("{s}-{i}"),
                source: source.clone(),
                category: Category::ALL[(s + i) % Category::ALL.len()],
                instruction: String::new(),
                response: String::new(),
                image: None,
            });
        }
    }
    DataPool::new(records)
}

/// The ten-source pool used for the threshold sweep: sources on both sides
/// of every sweep value, one at exactly 250k.
pub const SWEEP_POOL_SIZES: [usize; 10] = [
    20_000, 90_000, 149_999, 150_001, 210_000, 250_000, 300_000, 360_000, 420_000, 470_000,
];

pub fn meta(name: &str, category: BenchCategory) -> BenchmarkMeta {
    BenchmarkMeta::new(name, category)
}

/// Twenty models over eight benchmarks driven by two independent latent
/// factors. Benchmarks `0..4` load on the first factor and `4..8` on the
/// second; all scores carry small noise.
pub fn planted_table(seed: u64) -> (ScoreTable, Vec<usize>) {
    let mut r = rng(seed);
    let models: Vec<String> = (0..20).map(|i| format!("model{i}")).collect();
    let benchmarks: Vec<BenchmarkMeta> = (0..8)
        .map(|j| meta(&format!("bench{j}"), BenchCategory::ALL[j % 4]))
        .collect();
    let truth: Vec<usize> = (0..8).map(|j| j / 4).collect();
    let scores = (0..20)
        .map(|_| {
            let f = [r.random_range(-1.0..1.0), r.random_range(-1.0..1.0)];
            truth
                .iter()
                .enumerate()
                .map(|(j, &g)| 50.0 + 20.0 * f[g] + (j as f64) + 0.5 * r.random_range(-1.0..1.0))
                .collect()
        })
        .collect();
    (ScoreTable::new(models, benchmarks, scores).expect("valid table"), truth)
}

/// `n` review items with ids `item00000..`, four choices each.
pub fn review_items(n: usize) -> Vec<QuestionItem> {
    (0..n)
        .map(|i| QuestionItem {
            id: format!("item{i:05}"),
            scene_id: format!("scene{i}"),
            source: if i % 3 == 0 { Source::Omni3d } else { Source::Coco },
            task: Task::ALL[i % 4],
            prompt: format!("prompt {i}"),
            choices: vec!["a".into(), "b".into(), "c".into(), "d".into()],
            answer_index: i % 4,
            overlays: Vec::new(),
            status: Status::Pending,
            edited_answer: None,
        })
        .collect()
}
