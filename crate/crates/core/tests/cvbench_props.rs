mod oracle;
mod support;

use std::collections::BTreeMap;

use forge_core::cvbench::{
    count_window, gen_count, gen_depth_order, gen_relative_distance, gen_spatial, generate_all, Color, GenConfig,
    QuestionItem, Scene, Source, Task, Templates,
};
use proptest::prelude::*;
use rand::seq::SliceRandom;

const SCENES_PER_TASK: usize = 500;

fn overlay(item: &QuestionItem, color: Color) -> forge_core::cvbench::BBox2d {
    item.overlays.iter().find(|o| o.color == color).expect("overlay present").bbox2d
}

/// Checks one spatial item against the center-comparison oracle.
fn check_spatial(scene: &Scene, item: &QuestionItem) {
    let cats = scene.categories();
    let anchor_cat = cats
        .iter()
        .find(|c| oracle::largest_instance(scene, c).bbox2d == overlay(item, Color::Blue))
        .expect("blue overlay marks the anchor's largest instance");
    let other_cat = cats.iter().find(|c| *c != anchor_cat).unwrap();
    let anchor = oracle::largest_instance(scene, anchor_cat);
    let other = oracle::largest_instance(scene, other_cat);
    assert_eq!(overlay(item, Color::Red), other.bbox2d, "{}", scene.id);
    let want = oracle::spatial_answer(anchor, other).unwrap();
    assert_eq!(item.answer(), want, "{}", scene.id);
    let mut pair = item.choices.clone();
    pair.sort();
    let axis = if ["left", "right"].contains(&want) { ["left", "right"] } else { ["above", "below"] };
    assert_eq!(pair, axis);
}

#[test]
fn spatial_agrees_with_oracle_on_500_scenes() {
    let mut r = support::rng(11);
    let t = Templates::default();
    for s in 0..SCENES_PER_TASK {
        let source = if s % 2 == 0 { Source::Coco } else { Source::Ade };
        let scene = support::two_category_scene(&mut r, &format!("sp{s}"), source);
        let items = gen_spatial(&scene, s as u64, &t);
        assert_eq!(items.len(), 1);
        assert_eq!(items[0].task, Task::SpatialRelationship);
        check_spatial(&scene, &items[0]);
    }
}

#[test]
fn count_agrees_with_oracle_on_500_scenes() {
    let mut r = support::rng(12);
    let t = Templates::default();
    let vocab = ["car", "chair", "cup", "dog", "lamp", "person", "sofa", "table", "zebra", "kite"];
    for s in 0..SCENES_PER_TASK {
        let counts = [("car", s % 21), ("dog", (s * 7) % 5 + 1)];
        let scene = support::counted_scene(&mut r, &format!("ct{s}"), &counts);
        let items = gen_count(&scene, s as u64, &vocab, &t);
        assert_eq!(items.len(), 2, "{}", scene.id);
        for item in &items {
            let cat = item.id.rsplit("-count-").next().unwrap().replace('_', " ");
            let n = oracle::brute_count(&scene, &cat);
            assert_eq!(item.answer(), n.to_string(), "{}", item.id);
            let mut opts: Vec<usize> = item.choices.iter().map(|c| c.parse().unwrap()).collect();
            opts.sort_unstable();
            assert_eq!(opts, count_window(n));
        }
        assert_eq!(items[1].answer(), "0", "second item is the existence check");
    }
}

#[test]
fn depth_order_agrees_with_oracle_on_500_scenes() {
    let mut r = support::rng(13);
    let t = Templates::default();
    let mut total = 0;
    for s in 0..SCENES_PER_TASK {
        let scene = support::scene_3d(&mut r, &format!("dp{s}"));
        let got: Vec<(String, String, usize)> = gen_depth_order(&scene, 0.3, &t)
            .into_iter()
            .map(|i| (i.choices[0].clone(), i.choices[1].clone(), i.answer_index))
            .collect();
        assert_eq!(got, oracle::depth_items(&scene, 0.3), "{}", scene.id);
        total += got.len();
    }
    assert!(total > SCENES_PER_TASK, "fixture too sparse: {total} items");
}

#[test]
fn relative_distance_agrees_with_oracle_on_500_scenes() {
    let mut r = support::rng(14);
    let t = Templates::default();
    let mut total = 0;
    for s in 0..SCENES_PER_TASK {
        let scene = support::scene_3d(&mut r, &format!("rd{s}"));
        let got: Vec<(String, usize, Vec<String>)> = gen_relative_distance(&scene, 0.3, &t)
            .into_iter()
            .map(|i| (i.id, i.answer_index, i.choices))
            .collect();
        let want: Vec<(String, usize, Vec<String>)> = oracle::distance_items(&scene, 0.3)
            .into_iter()
            .map(|(anchor, a, b, ans)| (format!("{}-distance-{anchor}-{a}-{b}", scene.id), ans, vec![a, b]))
            .collect();
        assert_eq!(got, want, "{}", scene.id);
        total += got.len();
    }
    assert!(total > SCENES_PER_TASK, "fixture too sparse: {total} items");
}

#[test]
fn larger_offsets_only_drop_items() {
    let mut r = support::rng(15);
    let t = Templates::default();
    let offsets: Vec<f64> = (0..50).map(|i| i as f64 * 0.05).collect();
    for s in 0..60 {
        let scene = support::scene_3d(&mut r, &format!("of{s}"));
        let mut prev: Option<BTreeMap<String, usize>> = None;
        for &off in &offsets {
            let now: BTreeMap<String, usize> = gen_depth_order(&scene, off, &t)
                .into_iter()
                .chain(gen_relative_distance(&scene, off, &t))
                .map(|i| (i.id, i.answer_index))
                .collect();
            if let Some(p) = &prev {
                for (id, ans) in &now {
                    assert_eq!(p.get(id), Some(ans), "{id} appeared or flipped at offset {off}");
                }
            }
            prev = Some(now);
        }
    }
}

#[test]
fn count_windows_hold_for_every_n_up_to_20() {
    let t = Templates::default();
    let mut r = support::rng(16);
    for n in 0..=20usize {
        let w = count_window(n);
        assert!(w.contains(&n));
        assert_eq!(w[0], n.saturating_sub(2));
        assert!(w.windows(2).all(|p| p[1] == p[0] + 1));
        if n > 0 {
            let scene = support::counted_scene(&mut r, &format!("n{n}"), &[("cup", n)]);
            let items = gen_count(&scene, n as u64, &["cup"], &t);
            assert_eq!(items.len(), 1);
            assert_eq!(items[0].answer(), n.to_string());
        } else {
            let scene = support::counted_scene(&mut r, "n0", &[("cup", 2)]);
            let items = gen_count(&scene, 0, &["cup", "kite"], &t);
            assert_eq!(items[1].id, "n0-count-kite");
            assert_eq!(items[1].answer(), "0");
        }
    }
}

#[test]
fn generation_is_deterministic_and_order_free() {
    let mut r = support::rng(17);
    let mut scenes: Vec<Scene> = (0..40)
        .map(|s| match s % 3 {
            0 => support::two_category_scene(&mut r, &format!("a{s}"), Source::Coco),
            1 => support::two_category_scene(&mut r, &format!("a{s}"), Source::Ade),
            _ => support::scene_3d(&mut r, &format!("a{s}")),
        })
        .collect();
    let cfg = GenConfig {
        seed: 5,
        ..GenConfig::default()
    };
    let first = generate_all(&scenes, &cfg).unwrap();
    assert_eq!(first, generate_all(&scenes, &cfg).unwrap());
    scenes.shuffle(&mut r);
    let mut again = generate_all(&scenes, &cfg).unwrap();
    let mut sorted = first.clone();
    sorted.sort_by(|a, b| a.id.cmp(&b.id));
    again.sort_by(|a, b| a.id.cmp(&b.id));
    assert_eq!(sorted, again);
}

fn flip(scene: &Scene, horizontal: bool) -> Scene {
    let mut out = scene.clone();
    for o in &mut out.objects {
        if horizontal {
            o.bbox2d.x = 1000.0 - o.bbox2d.x - o.bbox2d.w;
        } else {
            o.bbox2d.y = 1000.0 - o.bbox2d.y - o.bbox2d.h;
        }
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn mirroring_swaps_the_matching_direction(seed in any::<u64>(), horizontal in any::<bool>()) {
        let scene = support::two_category_scene(&mut support::rng(seed), "m", Source::Coco);
        let t = Templates::default();
        let a = gen_spatial(&scene, seed, &t);
        let b = gen_spatial(&flip(&scene, horizontal), seed, &t);
        prop_assert_eq!(a.len(), b.len());
        if let (Some(a), Some(b)) = (a.first(), b.first()) {
            let swapped = match (a.answer(), horizontal) {
                ("left", true) => "right",
                ("right", true) => "left",
                ("above", false) => "below",
                ("below", false) => "above",
                (same, _) => same,
            };
            prop_assert_eq!(b.answer(), swapped);
        }
    }

    #[test]
    fn random_scenes_agree_with_oracles(seed in any::<u64>()) {
        let mut r = support::rng(seed);
        let t = Templates::default();
        let s2 = support::two_category_scene(&mut r, "p", Source::Ade);
        check_spatial(&s2, &gen_spatial(&s2, seed, &t)[0]);
        let s3 = support::scene_3d(&mut r, "q");
        let got: Vec<(String, String, usize)> = gen_depth_order(&s3, 0.3, &t)
            .into_iter()
            .map(|i| (i.choices[0].clone(), i.choices[1].clone(), i.answer_index))
            .collect();
        prop_assert_eq!(got, oracle::depth_items(&s3, 0.3));
    }
}
