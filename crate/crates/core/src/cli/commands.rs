use std::collections::HashMap;
use std::path::Path;

use log::{info, warn};

use super::args::*;
use crate::error::{Error, Result};
use crate::featstore::{
    generate_synthetic_dataset, handcrafted_patch_features, load_manifest, DatasetManifest, FeatureBag, FeatureScaler,
    Split, SyntheticSpec,
};
use crate::gbdt::{
    enhanced_from_forward, predict_ensemble, train_ensemble, GbdtConfig, TreeEnsemble, ENHANCED_DIM,
    ENHANCED_FEATURE_NAMES,
};
use crate::harness::{
    cross_validate, cv_indices, evaluate_metrics, evaluate_model, history_csv, require_test_split, train_model,
    training_hyperparameters, TrainConfig, TrainedModel,
};
use crate::heatmap::{render_heatmap, OverlayConfig, ResampleMode};
use crate::io::{to_stable_json, write_atomic};
use crate::mil::{extract_attention, MilModel, ModelKind};
use crate::nn::{DenseMatrix, Mode};
use crate::rng::Rng;
use crate::wsi::{
    build_pyramid, extract_patch_grid, render_mask_overlay, segment_tissue, synthetic_slide, BinaryMask, ImagePyramid,
    PatchGrid, RasterImage, SegmentationConfig,
};

const MASK_TINT: [u8; 3] = [0, 160, 0];

pub(super) fn execute(cmd: Command) -> Result<()> {
    match cmd {
        Command::Segment(a) => segment(a),
        Command::Patch(a) => patch(a),
        Command::Synth(a) => synth(a),
        Command::SynthSlide(a) => synth_slide(a),
        Command::Train(a) => train(a),
        Command::Cv(a) => cv(a),
        Command::Eval(a) => eval(a),
        Command::Heatmap(a) => heatmap(a),
        Command::GbdtTrain(a) => gbdt_train(a),
        Command::GbdtEval(a) => gbdt_eval(a),
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => write_atomic(p, text.as_bytes()),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load_pyramid(path: &Path, max_levels: usize) -> Result<ImagePyramid> {
    let img = RasterImage::read(path)?;
    if img.channels != 3 {
        return Err(Error::contract(format!("{}: slides must be RGB (P6)", path.display())));
    }
    build_pyramid(&img, max_levels)
}

fn segment(a: SegmentArgs) -> Result<()> {
    let pyr = load_pyramid(&a.slide, a.max_levels)?;
    let cfg = SegmentationConfig {
        target_downsample: a.target_downsample,
        blur_sigma_base: a.blur_sigma,
        close_kernel: a.close_kernel,
        open_kernel: a.open_kernel,
        min_component_area_px: a.min_area,
        min_tissue_saturation: a.min_tissue_saturation,
        ..SegmentationConfig::default()
    };
    let seg = segment_tissue(&pyr, &cfg)?;
    for w in &seg.warnings {
        warn!("{w}");
    }
    let m = &seg.mask;
    let comment = format!(
        "pathomil mask level={} downsample={} base={}x{} sat_threshold={} grad_threshold={}",
        m.level, m.downsample, m.base_width, m.base_height, seg.saturation_threshold.threshold,
        seg.gradient_threshold.threshold
    );
    write_atomic(&a.out_mask, &m.to_image().to_pnm_with_comment(Some(&comment)))?;
    if let Some(path) = &a.out_overlay {
        render_mask_overlay(pyr.level(m.level), m, MASK_TINT, a.alpha)?.write(path)?;
    }
    info!("mask level {} coverage {:.4}", m.level, m.coverage());
    Ok(())
}

/// Reads a mask PGM and places it at the pyramid level with matching size.
fn load_mask(path: &Path, pyr: &ImagePyramid) -> Result<BinaryMask> {
    let img = RasterImage::read(path)?;
    let level = (0..pyr.levels.len())
        .find(|&l| pyr.level(l).width == img.width && pyr.level(l).height == img.height)
        .ok_or_else(|| {
            Error::contract(format!(
                "{}: mask {}x{} matches no pyramid level of the slide",
                path.display(),
                img.width,
                img.height
            ))
        })?;
    let base = pyr.base();
    Ok(BinaryMask::from_image(&img)?.at_level(level, base.width, base.height))
}

fn features_for_grid(source: &FeatureBag, grid: &PatchGrid) -> Result<DenseMatrix> {
    let index: HashMap<(u32, u32), usize> = source.coords.iter().enumerate().map(|(i, &c)| (c, i)).collect();
    let d = source.feature_dim();
    let mut out = DenseMatrix::zeros(grid.len(), d);
    for (r, c) in grid.coords.iter().enumerate() {
        let &i = index.get(c).ok_or_else(|| {
            Error::contract(format!("bag {} has no features for patch ({}, {})", source.slide_id, c.0, c.1))
        })?;
        out.row_mut(r).copy_from_slice(source.features.row(i));
    }
    Ok(out)
}

fn patch(a: PatchArgs) -> Result<()> {
    let pyr = load_pyramid(&a.slide, a.max_levels)?;
    let mask = load_mask(&a.mask, &pyr)?;
    let grid = extract_patch_grid(&mask, a.patch_size, a.coverage)?;
    if grid.is_empty() {
        warn!("no patch reaches coverage {}", a.coverage);
    }
    let features = match &a.features_from {
        Some(p) => features_for_grid(&FeatureBag::read(p)?, &grid)?,
        None => handcrafted_patch_features(pyr.base(), &grid)?,
    };
    let slide_id = a
        .slide_id
        .clone()
        .unwrap_or_else(|| a.slide.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default());
    FeatureBag::new(slide_id, a.label, grid.coords.clone(), features)?.write(&a.out)?;
    if let Some(p) = &a.coords_out {
        grid.write_text(p)?;
    }
    info!("{} patches of {} px", grid.len(), a.patch_size);
    Ok(())
}

fn synth(a: SynthArgs) -> Result<()> {
    let bags_per_class: [usize; 3] = a
        .bags_per_class
        .as_slice()
        .try_into()
        .map_err(|_| Error::Config(format!("--bags-per-class needs 3 counts, got {}", a.bags_per_class.len())))?;
    let spec = SyntheticSpec {
        bags_per_class,
        feature_dim: a.feature_dim,
        min_instances: a.min_instances,
        max_instances: a.max_instances,
        signal_fraction: a.signal_fraction,
        noise_sigma: a.noise_sigma,
        test_fraction: a.test_fraction,
        seed: a.seed.seed,
    };
    let ds = generate_synthetic_dataset(&spec)?;
    let manifest = ds.write(&a.out)?;
    info!("wrote {} bags to {}", manifest.entries.len(), a.out.display());
    Ok(())
}

fn synth_slide(a: SynthSlideArgs) -> Result<()> {
    let slide = synthetic_slide(a.width, a.height, a.seed.seed);
    slide.image.write(&a.out)?;
    if let Some(p) = &a.truth_out {
        slide.tissue.to_image().write(p)?;
    }
    Ok(())
}

fn train_config(f: &TrainFlags) -> Result<TrainConfig> {
    let mut cfg = TrainConfig::defaults(f.model);
    cfg.lr = f.lr.unwrap_or(cfg.lr);
    cfg.reg = f.reg.unwrap_or(cfg.reg);
    cfg.dropout = f.dropout.unwrap_or(cfg.dropout);
    cfg.max_epochs = f.max_epochs.unwrap_or(cfg.max_epochs);
    cfg.warmup_epochs = f.warmup_epochs.unwrap_or(cfg.warmup_epochs);
    cfg.bag_weight = f.bag_weight.unwrap_or(cfg.bag_weight);
    cfg.b = f.b.unwrap_or(cfg.b);
    cfg.patience = f.patience.unwrap_or(cfg.patience);
    cfg.standardize = f.standardize;
    cfg.seed = f.seed.seed;
    cfg.validate()?;
    Ok(cfg)
}

fn load_split(manifest: &DatasetManifest, keep: impl Fn(Split) -> bool) -> Result<Vec<FeatureBag>> {
    manifest.entries.iter().filter(|e| keep(e.split)).map(|e| manifest.load_bag(e)).collect()
}

fn train(a: TrainArgs) -> Result<()> {
    let cfg = train_config(&a.train)?;
    let manifest = load_manifest(&a.manifest)?;
    let mut train_bags = load_split(&manifest, |s| matches!(s, Split::Train | Split::Unassigned))?;
    let mut val_bags = load_split(&manifest, |s| s == Split::Val)?;
    if train_bags.is_empty() {
        return Err(Error::Config("manifest has no train or unassigned entries".into()));
    }
    let scaler = if cfg.standardize {
        let s = FeatureScaler::fit(&train_bags)?;
        for b in train_bags.iter_mut().chain(val_bags.iter_mut()) {
            s.apply(b)?;
        }
        Some(s)
    } else {
        None
    };
    let tr: Vec<&FeatureBag> = train_bags.iter().collect();
    let va: Vec<&FeatureBag> = val_bags.iter().collect();
    let outcome = train_model(&tr, &va, &cfg)?;
    let hyper = training_hyperparameters(&cfg, scaler.as_ref(), outcome.best_epoch);
    outcome.model.save(&a.out, &hyper, cfg.seed)?;
    if let Some(p) = &a.history {
        write_atomic(p, history_csv(&outcome.history).as_bytes())?;
    }
    info!("trained {} epochs, best {}", outcome.history.len(), outcome.best_epoch);
    Ok(())
}

fn cv(a: CvArgs) -> Result<()> {
    let cfg = train_config(&a.train)?;
    let manifest = load_manifest(&a.manifest)?;
    let idx = cv_indices(&manifest)?;
    let bags = idx.iter().map(|&i| manifest.load_bag(&manifest.entries[i])).collect::<Result<Vec<_>>>()?;
    let outcome = cross_validate(&bags, &cfg, a.folds, a.jobs.max(1))?;
    if let Some(dir) = &a.history_dir {
        for f in &outcome.folds {
            write_atomic(&dir.join(format!("fold{}.csv", f.fold)), history_csv(&f.history).as_bytes())?;
        }
    }
    emit(a.out.as_deref(), &outcome.report.to_json()?)
}

fn test_bags(m: &TrainedModel, manifest: &DatasetManifest) -> Result<Vec<FeatureBag>> {
    require_test_split(manifest)?;
    manifest.entries.iter().map(|e| m.prepare(manifest.load_bag(e)?)).collect()
}

fn eval(a: EvalArgs) -> Result<()> {
    let manifest = load_manifest(&a.manifest)?;
    require_test_split(&manifest)?;
    let m = TrainedModel::load(&a.model)?;
    let bags = test_bags(&m, &manifest)?;
    let refs: Vec<&FeatureBag> = bags.iter().collect();
    let report = evaluate_model(&m.model, &refs)?;
    emit(a.out.as_deref(), &to_stable_json(&report)?)
}

fn heatmap(a: HeatmapArgs) -> Result<()> {
    let m = TrainedModel::load(&a.model)?;
    let bag = m.prepare(FeatureBag::read(&a.bag)?)?;
    let pyr = load_pyramid(&a.slide, a.max_levels)?;
    let scores = extract_attention(&m.model, &bag.features, a.class)?;
    let mode = a.mode.unwrap_or(match m.model.kind() {
        ModelKind::ClamSb => ResampleMode::Gaussian,
        ModelKind::Abmil => ResampleMode::Bilinear,
    });
    let cfg = OverlayConfig { alpha: a.alpha, mode, sigma_cells: a.sigma, class_index: a.class };
    let render = render_heatmap(&pyr, &bag.coords, &scores, a.patch_size, &cfg)?;
    write_atomic(&a.out, &render.overlay.to_pnm_with_comment(Some(&render.metadata_line())))?;
    if let Some(p) = &a.heat_out {
        render.heat.write(p)?;
    }
    if let Some(p) = &a.side_out {
        write_atomic(p, render.side_text().as_bytes())?;
    }
    Ok(())
}

fn embedding_names(dim: usize) -> Vec<String> {
    (0..dim).map(|i| format!("emb_{i}")).collect()
}

/// Enhanced features (plus the bag embedding when `concat`) for each bag.
fn slide_vectors(model: &MilModel, bags: &[FeatureBag], concat: bool) -> Result<DenseMatrix> {
    let mut rng = Rng::new(0);
    let rows = bags
        .iter()
        .map(|b| {
            let fwd = model.forward(&b.features, Mode::Eval, &mut rng)?;
            let mut row = enhanced_from_forward(&fwd)?.as_slice().to_vec();
            if concat {
                row.extend(fwd.embedding());
            }
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;
    DenseMatrix::from_rows(&rows)
}

fn gbdt_train(a: GbdtTrainArgs) -> Result<()> {
    let manifest = load_manifest(&a.manifest)?;
    let idx = cv_indices(&manifest)?;
    let m = TrainedModel::load(&a.model)?;
    let bags = idx.iter().map(|&i| m.prepare(manifest.load_bag(&manifest.entries[i])?)).collect::<Result<Vec<_>>>()?;
    let x = slide_vectors(&m.model, &bags, a.concat_embedding)?;
    let mut names: Vec<String> = ENHANCED_FEATURE_NAMES.iter().map(|s| s.to_string()).collect();
    if a.concat_embedding {
        names.extend(embedding_names(x.cols() - ENHANCED_DIM));
    }
    let y: Vec<usize> = bags.iter().map(|b| b.label as usize).collect();
    let cfg = GbdtConfig {
        n_rounds: a.rounds,
        learning_rate: a.learning_rate,
        max_depth: a.max_depth,
        lambda: a.lambda,
        gamma_leaf: a.gamma,
        min_child_hessian: a.min_child_hessian,
        ..GbdtConfig::default()
    };
    let trained = train_ensemble(&x, &y, names, &cfg)?;
    trained.ensemble.save(&a.out)?;
    info!(
        "log-loss {:.6} -> {:.6}",
        trained.loss_history.first().copied().unwrap_or(f64::NAN),
        trained.loss_history.last().copied().unwrap_or(f64::NAN)
    );
    Ok(())
}

fn gbdt_eval(a: GbdtEvalArgs) -> Result<()> {
    let manifest = load_manifest(&a.manifest)?;
    require_test_split(&manifest)?;
    let m = TrainedModel::load(&a.model)?;
    let ens = TreeEnsemble::load(&a.gbdt)?;
    let bags = test_bags(&m, &manifest)?;
    let concat = ens.n_features() > ENHANCED_DIM;
    let x = slide_vectors(&m.model, &bags, concat)?;
    if x.cols() != ens.n_features() {
        return Err(Error::contract(format!("ensemble expects {} features, built {}", ens.n_features(), x.cols())));
    }
    let probs = (0..x.rows()).map(|r| Ok(predict_ensemble(&ens, x.row(r))?.probs)).collect::<Result<Vec<_>>>()?;
    let labels: Vec<usize> = bags.iter().map(|b| b.label as usize).collect();
    emit(a.out.as_deref(), &to_stable_json(&evaluate_metrics(&probs, &labels)?)?)
}
