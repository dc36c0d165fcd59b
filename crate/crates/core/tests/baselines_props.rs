mod oracle;

use forge_core::baselines::{concat_ensemble, resampler, BaselineError, Projector, ResamplerParams};
use forge_core::numcore::Tensor;
use forge_core::sva::{sva_forward, EncoderFeatureMap, SvaConfig, SvaParams};
use proptest::prelude::*;

fn rand_tensor(shape: &[usize], seed: u64) -> Tensor {
    Tensor::from_fn(shape, |i| ((i as f64 + 1.0) * 0.61 + seed as f64 * 1.7).sin() * 1.5)
}

fn random_params(c: usize, seed: u64) -> ResamplerParams {
    ResamplerParams {
        w_q: rand_tensor(&[c, c], seed),
        w_k: rand_tensor(&[c, c], seed + 1),
        w_v: rand_tensor(&[c, c], seed + 2),
        ffn: None,
    }
}

fn oracle_resampler(latents: &Tensor, tokens: &Tensor, p: &ResamplerParams) -> oracle::Mat {
    let q = oracle::mat_mul(&oracle::to_mat(latents), &oracle::to_mat(&p.w_q));
    let k = oracle::mat_mul(&oracle::to_mat(tokens), &oracle::to_mat(&p.w_k));
    let v = oracle::mat_mul(&oracle::to_mat(tokens), &oracle::to_mat(&p.w_v));
    let mask = vec![vec![true; tokens.rows()]; latents.rows()];
    oracle::masked_attention(&q, &k, &v, &mask, 1.0 / (p.channels() as f64).sqrt()).0
}

#[test]
fn resampler_matches_dense_oracle() {
    let c = 4;
    let latents = rand_tensor(&[2, c], 3);
    let parts = [rand_tensor(&[4, c], 5), rand_tensor(&[2, c], 6)];
    let p = random_params(c, 9);
    let got = resampler(&latents, &parts, &p).unwrap();
    let all = Tensor::concat_rows(&[&parts[0], &parts[1]]).unwrap();
    let err = oracle::max_abs_diff(&oracle::to_mat(&got), &oracle_resampler(&latents, &all, &p));
    assert!(err < 1e-9, "{err}");
}

#[test]
fn resampler_single_token_returns_value_projection() {
    let p = random_params(3, 1);
    let token = rand_tensor(&[1, 3], 2);
    let got = resampler(&rand_tensor(&[5, 3], 4), std::slice::from_ref(&token), &p).unwrap();
    let v = oracle::mat_mul(&oracle::to_mat(&token), &oracle::to_mat(&p.w_v));
    for r in 0..5 {
        assert!(got.row(r).iter().zip(&v[0]).all(|(a, b)| (a - b).abs() < 1e-12));
    }
}

#[test]
fn resampler_rejects_empty_features() {
    let p = ResamplerParams::identity(2);
    let e = resampler(&Tensor::zeros(&[1, 2]), &[], &p).unwrap_err();
    assert!(matches!(e, BaselineError::Empty));
}

#[test]
fn ensemble_resizes_729_to_576_like_the_bilinear_oracle() {
    let raw = rand_tensor(&[729, 2], 0);
    let out = concat_ensemble(std::slice::from_ref(&raw), 576, &Projector::identity(2)).unwrap();
    let want = oracle::bilinear(&raw.reshape(&[27, 27, 2]).unwrap(), 24, 24);
    assert!(out.tokens.max_abs_diff(&want.reshape(&[576, 2]).unwrap()) < 1e-12);
}

#[test]
fn ensemble_concatenates_channel_widths() {
    let raw = [rand_tensor(&[576, 3], 1), rand_tensor(&[256, 5], 2)];
    let out = concat_ensemble(&raw, 576, &Projector::identity(8)).unwrap();
    assert_eq!(out.tokens.shape(), &[576, 8]);
    assert_eq!(out.projected.shape(), &[576, 8]);
    // the map already at 576 tokens passes through unchanged
    for r in 0..576 {
        assert_eq!(&out.tokens.row(r)[..3], raw[0].row(r));
    }
}

#[test]
fn ensemble_rejects_non_square_maps() {
    let e = concat_ensemble(&[rand_tensor(&[10, 2], 0)], 576, &Projector::identity(2)).unwrap_err();
    assert!(matches!(e, BaselineError::NonSquare { encoder: 0, tokens: 10 }));
}

#[test]
fn unit_grid_aggregator_coincides_with_resampler() {
    let c = 3;
    let mut cfg = SvaConfig::new(1, c, vec![1]);
    cfg.residual = false;
    let latent = rand_tensor(&[c], 4);
    let grid = rand_tensor(&[1, 1, c], 5);
    let sva = sva_forward(
        &[EncoderFeatureMap::new(0, 1, grid.clone())],
        &SvaParams::identity(&cfg, vec![latent.clone()]).unwrap(),
        &cfg,
    )
    .unwrap();
    let res = resampler(
        &latent.reshape(&[1, c]).unwrap(),
        &[grid.reshape(&[1, c]).unwrap()],
        &ResamplerParams::identity(c),
    )
    .unwrap();
    assert_eq!(sva.tokens, res);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn resampler_ignores_token_order(seed in 0u64..500, n in 1usize..12, perm_seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let c = 3;
        let tokens = rand_tensor(&[n, c], seed);
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(perm_seed));
        let rows: Vec<f64> = order.iter().flat_map(|&r| tokens.row(r).to_vec()).collect();
        let shuffled = Tensor::new(vec![n, c], rows).unwrap();
        let latents = rand_tensor(&[3, c], seed + 1);
        let p = random_params(c, seed + 2);
        let a = resampler(&latents, &[tokens], &p).unwrap();
        let b = resampler(&latents, &[shuffled], &p).unwrap();
        prop_assert!(a.max_abs_diff(&b) < 1e-12);
    }

    #[test]
    fn ensemble_always_emits_target_tokens(sides in prop::collection::vec(1usize..30, 1..4), target_side in 1usize..25) {
        let raw: Vec<Tensor> = sides.iter().enumerate().map(|(k, s)| rand_tensor(&[s * s, 2], k as u64)).collect();
        let width = 2 * raw.len();
        let out = concat_ensemble(&raw, target_side * target_side, &Projector::identity(width)).unwrap();
        prop_assert_eq!(out.tokens.shape(), &[target_side * target_side, width][..]);
    }
}
