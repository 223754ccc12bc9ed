mod common;

use rand::Rng;
use weldmat_core::augment::{augment_pair_traced, AugmentConfig, AugmentOp, Stage};
use weldmat_core::matting::{
    assemble_system, build_matting_laplacian, energy, solve_alpha, MattingParams,
};
use weldmat_core::refine::{refine, threshold_mask, RefineParams};
use weldmat_core::synth::{synth_instance, SynthParams};
use weldmat_core::{BinaryMask, FloatRaster, TrimapLabel};

use common::*;

#[test]
fn solved_matte_is_a_constrained_minimum() {
    let mut rng = rng(31);
    let params = MattingParams {
        solver_tol: 1e-12,
        ..Default::default()
    };
    for _ in 0..10 {
        let (w, h) = (rng.random_range(4..=16), rng.random_range(4..=16));
        let img = random_image(&mut rng, w, h);
        let trimap = random_trimap(&mut rng, w, h);
        let l = build_matting_laplacian(&img, &params).unwrap();
        let a = solve_alpha(&assemble_system(&img, &trimap, &params).unwrap(), &params).unwrap();
        let e0 = energy(&l, &a.alpha).unwrap();
        for _ in 0..100 {
            let probe: Vec<f64> = a
                .alpha
                .iter()
                .zip(trimap.labels())
                .map(|(&v, l)| {
                    if l.is_known() {
                        v
                    } else {
                        v + rng.random_range(-0.2..0.2)
                    }
                })
                .collect();
            assert!(energy(&l, &probe).unwrap() >= e0 - 1e-9);
        }
    }
}

#[test]
fn twelve_by_twelve_mask_matches_dense_thresholding() {
    let mut rng = rng(12);
    let params = MattingParams {
        solver_tol: 1e-12,
        ..Default::default()
    };
    let img = random_image(&mut rng, 12, 12);
    let trimap = random_trimap(&mut rng, 12, 12);
    let a = solve_alpha(&assemble_system(&img, &trimap, &params).unwrap(), &params).unwrap();
    let dense = dense_alpha(&dense_laplacian(&img, params.epsilon), &trimap);
    assert!(max_abs_diff(&a.alpha, &dense) < 1e-6);
    let oracle = BinaryMask::new(12, 12, dense.iter().map(|&v| v > 0.5).collect()).unwrap();
    assert_eq!(threshold_mask(&a, 0.5), oracle);
}

#[test]
fn synthetic_corpus_respects_maximum_principle_and_constraints() {
    let sp = SynthParams::square(96);
    let params = RefineParams::default();
    for i in 0..20 {
        let inst = synth_instance(5, i, &sp).unwrap();
        let out = refine(&inst.image, &inst.prob, &params).unwrap();
        for &a in &out.alpha.alpha {
            assert!((-0.05..=1.05).contains(&a), "instance {i}: raw alpha {a}");
        }
        for (m, l) in out.mask.data().iter().zip(out.trimap.labels()) {
            match l {
                TrimapLabel::Foreground => assert!(*m),
                TrimapLabel::Background => assert!(!*m),
                TrimapLabel::Unknown => {}
            }
        }
    }
}

#[test]
fn refine_is_bitwise_deterministic() {
    let inst = synth_instance(1, 2, &SynthParams::square(64)).unwrap();
    let p = RefineParams {
        band_dilation: 2,
        ..Default::default()
    };
    let a = refine(&inst.image, &inst.prob, &p).unwrap();
    let b = refine(&inst.image, &inst.prob, &p).unwrap();
    assert_eq!(a, b);
}

#[test]
fn activation_rates_track_p() {
    let mut cfg = AugmentConfig::default();
    cfg.stages.push(Stage::new(AugmentOp::Crop, 0.7));
    let img = FloatRaster::filled(6, 6, 0.5);
    let mask = BinaryMask::zeros(6, 6);
    let mut hits = vec![0usize; cfg.stages.len()];
    let n = 10_000u64;
    for seed in 0..n {
        cfg.seed = seed;
        let out = augment_pair_traced(&img, &mask, &cfg).unwrap();
        for (h, on) in hits.iter_mut().zip(out.activated) {
            *h += on as usize;
        }
    }
    for (stage, h) in cfg.stages.iter().zip(hits) {
        let rate = h as f64 / n as f64;
        assert!(
            (rate - stage.p).abs() <= 0.02,
            "{:?}: rate {rate} vs p {}",
            stage.op,
            stage.p
        );
    }
}

#[test]
fn full_pipeline_keeps_mask_binary_and_geometry_consistent() {
    let mut rng = rng(77);
    for seed in 0..50 {
        let img = random_image(&mut rng, 16, 16);
        let mask = random_binary(&mut rng, 16, 16, 0.4);
        let cfg = AugmentConfig {
            seed,
            stages: AugmentConfig::default().stages,
        };
        let out = augment_pair_traced(&img, &mask, &cfg).unwrap();
        assert_eq!(out.image.dims(), out.mask.dims());
        // running the mask through the same pipeline as a standalone pair gives the same mask
        let flat = FloatRaster::filled(16, 16, 0.0);
        let again = augment_pair_traced(&flat, &mask, &cfg).unwrap();
        assert_eq!(again.mask, out.mask);
        out.image.ensure_unit_range("augmented image").unwrap();
    }
}
