use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use serde_json::json;
use weldmat_core::augment::{augment_pair_traced, AugmentConfig};
use weldmat_core::heatmap::{laplacian_boundary, make_heatmap_gt, HeatmapParams};
use weldmat_core::io::{load_image, load_mask, load_prob, save_float, save_mask, save_trimap};
use weldmat_core::loss::{combined_loss, LossParams};
use weldmat_core::matting::MattingParams;
use weldmat_core::metrics::{evaluate_with, ImageScore};
use weldmat_core::refine::{build_trimap, dilate_unknown, RefineParams};
use weldmat_core::synth::{synth_instance, SynthParams};
use weldmat_core::{Error, Result};

use crate::{AugmentArgs, EvalArgs, HeatmapArgs, LossArgs, RefineArgs, SynthArgs, TrimapArgs};

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|source| Error::UnwritableFile {
        path: dir.to_path_buf(),
        source,
    })
}

fn print_json(value: &impl Serialize) {
    println!(
        "{}",
        serde_json::to_string_pretty(value).expect("serializable")
    );
}

pub fn heatmap_gt(a: HeatmapArgs) -> Result<()> {
    let params = HeatmapParams {
        sigma: a.sigma,
        edge_threshold: a.edge_threshold,
    };
    params.validate()?;
    let mask = load_mask(&a.mask)?;
    let boundary = laplacian_boundary(&mask, params.edge_threshold).count_ones();
    if boundary == 0 {
        eprintln!(
            "warning: {} has no boundary pixels; writing an all-zero heatmap",
            a.mask.display()
        );
    }
    let heat = make_heatmap_gt(&mask, &params)?;
    save_float(&a.out, &heat)?;
    if let Some(p) = &a.preview {
        save_float(p, &heat)?;
    }
    let support = heat.data().iter().filter(|&&v| v > 0.0).count() as f64 / heat.len() as f64;
    println!("sigma {}", params.sigma);
    println!("boundary pixels {boundary}");
    println!("support fraction {support:.6}");
    Ok(())
}

pub fn loss(a: LossArgs) -> Result<()> {
    let params = LossParams {
        w1: a.w1,
        w2: a.w2,
        alpha_t: a.alpha_t,
        gamma: a.gamma,
    };
    let ps = load_prob(&a.ps)?;
    let gs = load_mask(&a.gs)?;
    let pb = load_prob(&a.pb)?;
    let hb = load_prob(&a.hb)?;
    let r = combined_loss(&ps, &gs, &pb, &hb, &params)?;
    if let Some(p) = &a.grad_ps_out {
        save_float(p, &r.grad_ps)?;
    }
    if let Some(p) = &a.grad_pb_out {
        save_float(p, &r.grad_pb)?;
    }
    print_json(&json!({
        "focal": r.focal,
        "boundary_mse": r.boundary_mse,
        "combined": r.combined,
        "params": params,
    }));
    Ok(())
}

pub fn refine(a: RefineArgs) -> Result<()> {
    let params = RefineParams {
        c_high: a.thresholds.c_high,
        c_low: a.thresholds.c_low,
        matting: MattingParams {
            epsilon: a.epsilon,
            solver_tol: a.solver_tol,
            max_iters: a.max_iters,
            ..Default::default()
        },
        mask_threshold: a.mask_threshold,
        band_dilation: a.thresholds.band,
    };
    params.validate()?;
    let image = load_image(&a.image)?;
    let prob = load_prob(&a.prob)?;

    let start = Instant::now();
    let out = weldmat_core::refine::refine(&image, &prob, &params)?;
    let elapsed = start.elapsed();

    save_mask(&a.out, &out.mask)?;
    if let Some(p) = &a.trimap_out {
        save_trimap(p, &out.trimap)?;
    }
    if let Some(p) = &a.alpha_out {
        save_float(p, &out.alpha.raw_raster())?;
    }

    let unknown = out.trimap.unknown_count();
    if a.json {
        let mut summary = json!({
            "width": out.mask.width(),
            "height": out.mask.height(),
            "unknown_pixels": unknown,
            "foreground_pixels": out.mask.count_ones(),
            "iterations": out.alpha.iterations,
            "relative_residual": out.alpha.relative_residual,
        });
        if a.bench {
            summary["wall_seconds"] = json!(elapsed.as_secs_f64());
        }
        print_json(&summary);
    } else {
        println!(
            "mask {}: {} foreground of {} pixels",
            a.out.display(),
            out.mask.count_ones(),
            out.mask.len()
        );
        if a.bench {
            println!("wall time {:.3} s", elapsed.as_secs_f64());
            println!("unknown pixels {unknown}");
            println!("solver iterations {}", out.alpha.iterations);
        }
    }
    Ok(())
}

pub fn trimap(a: TrimapArgs) -> Result<()> {
    let t = &a.thresholds;
    RefineParams {
        c_high: t.c_high,
        c_low: t.c_low,
        ..Default::default()
    }
    .validate()?;
    let prob = load_prob(&a.prob)?;
    let trimap = dilate_unknown(&build_trimap(&prob, t.c_high, t.c_low), t.band);
    save_trimap(&a.out, &trimap)?;
    let fg = trimap.labels().iter().filter(|l| l.value() == 1.0).count();
    let unknown = trimap.unknown_count();
    println!("foreground {fg}");
    println!("unknown {unknown}");
    println!("background {}", trimap.len() - fg - unknown);
    Ok(())
}

/// Mask files in `dir` keyed by file stem.
fn mask_files(dir: &Path) -> Result<BTreeMap<String, PathBuf>> {
    let unreadable = |source| Error::UnreadableFile {
        path: dir.to_path_buf(),
        source,
    };
    let mut out = BTreeMap::new();
    for entry in fs::read_dir(dir).map_err(unreadable)? {
        let path = entry.map_err(unreadable)?.path();
        let ext = path
            .extension()
            .and_then(|e| e.to_str())
            .map(str::to_ascii_lowercase);
        if !matches!(ext.as_deref(), Some("png" | "pgm" | "wfr")) {
            continue;
        }
        let stem = path
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or_default()
            .to_owned();
        if let Some(prev) = out.insert(stem.clone(), path.clone()) {
            return Err(Error::InvalidParams(format!(
                "{} and {} share the stem {stem:?}",
                prev.display(),
                path.display()
            )));
        }
    }
    Ok(out)
}

#[derive(Serialize)]
struct ImageRecord<'a> {
    name: &'a str,
    #[serde(flatten)]
    score: ImageScore,
}

pub fn eval(a: EvalArgs) -> Result<()> {
    let preds = mask_files(&a.pred_dir)?;
    let gts = mask_files(&a.gt_dir)?;
    if preds.len() != gts.len() {
        return Err(Error::LengthMismatch {
            preds: preds.len(),
            gts: gts.len(),
        });
    }
    let mut pm = Vec::with_capacity(preds.len());
    let mut gm = Vec::with_capacity(preds.len());
    for (name, path) in &preds {
        let gt = gts.get(name).ok_or_else(|| {
            Error::InvalidParams(format!(
                "no ground truth named {name:?} in {}",
                a.gt_dir.display()
            ))
        })?;
        pm.push(load_mask(path)?);
        gm.push(load_mask(gt)?);
    }
    let r = evaluate_with(&pm, &gm, a.aggregate.into())?;
    let report = json!({
        "aggregate": r.aggregate,
        "dataset_miou": r.dataset_miou,
        "per_image": preds
            .keys()
            .zip(&r.per_image)
            .map(|(name, &score)| ImageRecord { name, score })
            .collect::<Vec<_>>(),
    });
    let text = serde_json::to_string_pretty(&report).expect("serializable");
    fs::write(&a.report, format!("{text}\n")).map_err(|source| Error::UnwritableFile {
        path: a.report.clone(),
        source,
    })?;
    if a.json {
        println!("{text}");
    } else {
        println!(
            "{} images, dataset miou {:.6}",
            r.per_image.len(),
            r.dataset_miou
        );
    }
    Ok(())
}

pub fn augment(a: AugmentArgs) -> Result<()> {
    let mut cfg = match &a.config {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|source| Error::UnreadableFile {
                path: p.clone(),
                source,
            })?;
            serde_json::from_str::<AugmentConfig>(&text)
                .map_err(|e| Error::InvalidParams(format!("{}: {e}", p.display())))?
        }
        None => AugmentConfig::default(),
    };
    if let Some(seed) = a.seed {
        cfg.seed = seed;
    }
    let image = load_image(&a.image)?;
    let mask = load_mask(&a.mask)?;
    let out = augment_pair_traced(&image, &mask, &cfg)?;
    create_dir(&a.out_dir)?;
    save_float(a.out_dir.join("image.png"), &out.image)?;
    save_float(a.out_dir.join("image.wfr"), &out.image)?;
    save_mask(a.out_dir.join("mask.png"), &out.mask)?;
    for (stage, on) in cfg.stages.iter().zip(&out.activated) {
        println!(
            "{:<10} p={:<5} {}",
            format!("{:?}", stage.op).to_lowercase(),
            stage.p,
            if *on { "on" } else { "off" }
        );
    }
    Ok(())
}

pub fn synth(a: SynthArgs) -> Result<()> {
    let params = SynthParams {
        blur_sigma: a.blur_sigma,
        prob_noise: a.prob_noise,
        confidence: a.confidence,
        ..SynthParams::square(a.size)
    };
    params.validate()?;
    create_dir(&a.out_dir)?;
    for i in 0..a.count {
        let inst = synth_instance(a.seed, i, &params)?;
        let stem = format!("synth_{i:04}");
        save_float(a.out_dir.join(format!("{stem}_image.png")), &inst.image)?;
        save_mask(a.out_dir.join(format!("{stem}_gt.png")), &inst.gt)?;
        save_float(a.out_dir.join(format!("{stem}_prob.wfr")), &inst.prob)?;
    }
    println!("{} instances written to {}", a.count, a.out_dir.display());
    Ok(())
}
