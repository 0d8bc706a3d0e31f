//! Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any failure.
//!
//! Runs with `harness = false`; `cargo test --workspace` executes it like any
//! other test target.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use occlugen_core::dataset::{
    derive_seed, ingest_faces, ingest_occluders, ingest_textures, verify_sample, write_demo_inputs, Generator,
    IMAGES_DIR, MANIFEST_FILE, MASKS_DIR,
};
use occlugen_core::evalmetrics::LabelMap;
use occlugen_core::imgcore::{
    alpha_blend, gaussian_blur, kernel_radius, morphology, warp, AffineParams, Interp, MorphOp,
};
use occlugen_core::natocc::{augment_occluder, generate_natocc_sample, Synthesis};
use occlugen_core::randocc::{assign_transparency, generate_randocc_sample_with_alpha, Texture};
use occlugen_core::sot::{preprocess_source, sliced_wasserstein, sot_color_transfer};
use occlugen_core::{
    BinaryMask, Category, ConfusionMatrix, FaceSample, GenerationConfig, ImageBuffer, NatOccConfig, Occluder,
    Pipeline, RandOccConfig, SoftMask, SotParams,
};

type Check = Box<dyn Fn() -> Outcome>;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn random_image(w: usize, h: usize, seed: u64) -> ImageBuffer {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    ImageBuffer::from_fn(w, h, |_, _| [rng.random(), rng.random(), rng.random()]).unwrap()
}

fn max_abs_diff(a: &ImageBuffer, b: &ImageBuffer) -> f64 {
    a.data().iter().zip(b.data()).map(|(x, y)| f64::from((x - y).abs())).fold(0.0, f64::max)
}

fn miou_arithmetic() -> Outcome {
    let m = ConfusionMatrix::from_counts(&[vec![950_994, 24_816], vec![24_815, 260_369]]).unwrap();
    let iou = m.iou_per_class();
    let miou = m.mean_iou().unwrap();
    outcome(
        (miou - 0.89515).abs() <= 5e-5,
        format!("IoU = [{:.4}, {:.4}], mIoU = {miou:.5} ({:.2})", iou[0].unwrap(), iou[1].unwrap(), 100.0 * miou),
    )
}

fn sot_identity() -> Outcome {
    let params = SotParams::default();
    let img = random_image(128, 128, 7);
    let mut worst = 0f64;
    for seed in [0, 1, 42, 0xDEAD_BEEF, u64::MAX] {
        let out = sot_color_transfer(&img, &img, &params, seed).unwrap();
        worst = worst.max(max_abs_diff(&out, &img));
    }
    let c = [0.3f32, 0.6, 0.9];
    let constant = ImageBuffer::filled(128, 128, c).unwrap();
    let one = SotParams { iterations: 1, step_size: 1.0, ..SotParams::default() };
    let out = sot_color_transfer(&constant, &random_image(128, 128, 8), &one, 3).unwrap();
    let const_err = max_abs_diff(&out, &constant);
    outcome(
        worst <= 1e-6 && const_err <= 1e-6,
        format!("self-transfer max diff {worst:.2e}, constant-source max diff {const_err:.2e}"),
    )
}

fn gradient(w: usize, h: usize, f: impl Fn(f32, f32) -> [f32; 3]) -> ImageBuffer {
    ImageBuffer::from_fn(w, h, |x, y| f(x as f32 / (w - 1) as f32, y as f32 / (h - 1) as f32)).unwrap()
}

fn sot_convergence() -> Outcome {
    let pairs = [
        (
            gradient(512, 512, |x, y| [x, y, 0.5 * (x + y)]),
            gradient(512, 512, |x, y| [0.2 + 0.5 * y, 1.0 - x, 0.3 + 0.4 * x * y]),
        ),
        (
            gradient(512, 512, |x, y| [0.9 - 0.6 * x * x, 0.2 + 0.3 * y, 0.8 * (1.0 - y)]),
            gradient(512, 512, |x, y| [0.1 + 0.2 * x, 0.4 + 0.5 * x * y, 0.5 + 0.4 * y]),
        ),
    ];
    let params = SotParams::default();
    let mut worst: f64 = 0.0;
    let mut notes = Vec::new();
    let mut slowest = Duration::ZERO;
    for (i, (src, tgt)) in pairs.iter().enumerate() {
        let pre = sliced_wasserstein(&cloud(src), &cloud(tgt), 512, 99).unwrap();
        let start = Instant::now();
        let out = sot_color_transfer(src, tgt, &params, i as u64).unwrap();
        slowest = slowest.max(start.elapsed());
        let post = sliced_wasserstein(&cloud(src), &cloud(&out), 512, 99).unwrap();
        worst = worst.max(post / pre);
        notes.push(format!("{pre:.4} -> {post:.5}"));
    }
    // the time limit covers the transfer; the 512-direction measurement is extra
    outcome(
        worst <= 0.05 && slowest <= Duration::from_secs(30),
        format!(
            "SW {}; worst ratio {:.2}%; slowest transfer {:.2}s of 30s, one thread",
            notes.join(", "),
            100.0 * worst,
            slowest.as_secs_f64()
        ),
    )
}

fn cloud(img: &ImageBuffer) -> Vec<[f64; 3]> {
    occlugen_core::sot::image_to_cloud(img)
}

fn preprocess_balance() -> Outcome {
    let params = SotParams::default();
    let (w, h) = (40, 40);
    let mut notes = Vec::new();
    let mut pass = true;
    for (s, t) in [(100usize, 50usize), (30, 60), (500, 1)] {
        let mut rng = ChaCha8Rng::seed_from_u64((s * 1000 + t) as u64);
        let src = ImageBuffer::from_fn(w, h, |x, y| {
            let i = y * w + x;
            if i < s {
                [0.01, 0.02, 0.0]
            } else if i % 3 == 0 {
                // above the ceiling, must be clipped
                [0.99, 0.97, 1.0]
            } else {
                [rng.random_range(0.1..0.9), rng.random_range(0.1..0.9), rng.random_range(0.1..0.9)]
            }
        })
        .unwrap();
        let tgt = ImageBuffer::from_fn(w, h, |x, y| if y * w + x < t { [0.0; 3] } else { [0.5, 0.4, 0.3] }).unwrap();
        let (out, report) = preprocess_source(&src, &tgt, &params, 5).unwrap();
        let dark_after = out.pixels().filter(|p| p[0].max(p[1]).max(p[2]) < params.lower_thresh).count();
        let capped = out.data().iter().all(|&v| v <= params.upper_thresh);
        let ratio = s as f64 / t as f64;
        let ok = if ratio > 1.0 {
            dark_after.abs_diff(t) <= 1
        } else {
            // nothing replaced: output is just the clipped source
            report.replaced_count == 0
                && src.data().iter().zip(out.data()).all(|(a, b)| a.min(params.upper_thresh) == *b)
        };
        pass &= ok && capped && report.s_quantity == s && report.t_quantity == t;
        notes.push(format!("({s},{t}): ratio {ratio:.2}, replaced {}, dark after {dark_after}", report.replaced_count));
    }
    outcome(pass, notes.join("; "))
}

struct Pools {
    _dir: tempfile::TempDir,
    faces: Vec<FaceSample>,
    occluders: Vec<Occluder>,
    textures: Vec<Texture>,
}

fn demo_pools(faces: usize, size: usize) -> Pools {
    let dir = tempfile::tempdir().unwrap();
    let (fd, od, td) = write_demo_inputs(dir.path(), faces, size).unwrap();
    let fc = ingest_faces(&fd).unwrap();
    let faces = (0..fc.len()).map(|i| fc.load(i).unwrap()).collect();
    let occluders = ingest_occluders(&od).unwrap().entries.iter().map(|e| e.load().unwrap()).collect();
    let textures = ingest_textures(&td).unwrap().iter().map(|e| e.load().unwrap()).collect();
    Pools { _dir: dir, faces, occluders, textures }
}

/// Union of hard occluder supports on the face canvas, from the placed layers.
fn occluder_oracle(s: &Synthesis, w: usize, h: usize) -> BinaryMask {
    BinaryMask::from_fn(w, h, |x, y| {
        s.placed.iter().any(|p| {
            let (ox, oy) = (x as i64 - p.offset[0], y as i64 - p.offset[1]);
            let (mw, mh) = p.occluder.mask.dims();
            ox >= 0 && oy >= 0 && (ox as usize) < mw && (oy as usize) < mh && p.occluder.mask.get(ox as usize, oy as usize) >= 0.5
        })
    })
    .unwrap()
}

fn label_matches(face: &FaceSample, s: &Synthesis) -> bool {
    let (w, h) = face.image.dims();
    let m = occluder_oracle(s, w, h);
    let expected = BinaryMask::from_fn(w, h, |x, y| face.face_mask.get(x, y) && !m.get(x, y)).unwrap();
    s.gt_mask == expected && s.occluder_mask == m
}

fn label_exactness() -> Outcome {
    let pools = demo_pools(5, 96);
    let mut nat = NatOccConfig::default();
    nat.sot.iterations = 16;
    let rand_cfg = RandOccConfig::default();
    let (mut checked, mut bad, mut alpha_bad, mut errors) = (0usize, 0usize, 0usize, 0usize);
    for i in 0..1000u64 {
        let face = &pools.faces[i as usize % pools.faces.len()];
        let seed = derive_seed(2024, i);
        let result = if i % 2 == 0 {
            generate_natocc_sample(face, &pools.occluders, &nat, seed)
        } else {
            generate_randocc_sample_with_alpha(face, &pools.textures, &rand_cfg, seed, None).and_then(|s| {
                let opaque = generate_randocc_sample_with_alpha(face, &pools.textures, &rand_cfg, seed, Some(1.0))?;
                let faint = generate_randocc_sample_with_alpha(face, &pools.textures, &rand_cfg, seed, Some(0.5))?;
                if opaque.gt_mask != s.gt_mask || faint.gt_mask != s.gt_mask {
                    alpha_bad += 1;
                }
                Ok(s)
            })
        };
        match result {
            Ok(s) => {
                checked += 1;
                if !label_matches(face, &s) {
                    bad += 1;
                }
            }
            Err(_) => errors += 1,
        }
    }
    outcome(
        checked >= 990 && bad == 0 && alpha_bad == 0,
        format!("{checked} samples checked ({errors} skipped), {bad} label mismatches, {alpha_bad} alpha-dependent labels"),
    )
}

/// Two-sided KS statistic against Uniform[lo, hi].
fn ks_uniform(mut xs: Vec<f64>, lo: f64, hi: f64) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = ((x - lo) / (hi - lo)).clamp(0.0, 1.0);
            ((i + 1) as f64 / n - f).max(f - i as f64 / n)
        })
        .fold(0.0, f64::max)
}

fn distribution_conformance() -> Outcome {
    let cfg = NatOccConfig::default().augment();
    let img = ImageBuffer::filled(24, 24, [0.6, 0.5, 0.4]).unwrap();
    let mask = SoftMask::from_fn(24, 24, |x, y| if (4..20).contains(&x) && (4..20).contains(&y) { 1.0 } else { 0.0 }).unwrap();
    let occ = Occluder::new("cup", img, mask, Category::Object, None).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(6, 0));
    let scales: Vec<f64> = (0..10_000)
        .map(|_| augment_occluder(&occ, (64, 64), &cfg, true, &mut rng).unwrap().1.scale)
        .collect();
    let ks = ks_uniform(scales, cfg.scale_range[0], cfg.scale_range[1]);

    let rcfg = RandOccConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(6, 1));
    let alphas: Vec<f64> = (0..10_000).map(|_| assign_transparency(&rcfg, &mut rng)).collect();
    let transparent: Vec<f64> = alphas.iter().copied().filter(|&a| a < 1.0).collect();
    let frac = transparent.len() as f64 / alphas.len() as f64;
    let in_range = transparent.iter().all(|a| (0.5..=0.8).contains(a)) && alphas.iter().all(|&a| a == 1.0 || a <= 0.8);
    outcome(
        ks < 0.02 && (frac - 0.30).abs() <= 0.014 && in_range,
        format!("scale KS {ks:.4} over [{}, {}]; transparent fraction {frac:.4}, alphas in [0.5, 0.8]: {in_range}", cfg.scale_range[0], cfg.scale_range[1]),
    )
}

fn files_under(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    for sub in [IMAGES_DIR, MASKS_DIR] {
        for e in fs::read_dir(dir.join(sub)).unwrap() {
            let p = e.unwrap().path();
            out.insert(p.strip_prefix(dir).unwrap().to_path_buf(), fs::read(&p).unwrap());
        }
    }
    out.insert(MANIFEST_FILE.into(), fs::read(dir.join(MANIFEST_FILE)).unwrap());
    out
}

fn run_generation(root: &Path, pipeline: Pipeline, count: u64, workers: usize, name: &str) -> (PathBuf, Duration) {
    let out = root.join(name);
    let cfg = GenerationConfig {
        pipeline,
        count,
        workers,
        global_seed: 20_240_601,
        faces_dir: root.join("faces"),
        occluders_dir: root.join("occluders"),
        textures_dir: root.join("textures"),
        output_dir: out.clone(),
        ..Default::default()
    };
    let start = Instant::now();
    Generator::new(cfg).unwrap().run(false).unwrap();
    (out, start.elapsed())
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    write_demo_inputs(dir.path(), 6, 128).unwrap();
    let (a, ta) = run_generation(dir.path(), Pipeline::Mix, 200, 1, "w1");
    let (b, tb) = run_generation(dir.path(), Pipeline::Mix, 200, 8, "w8");
    let (fa, fb) = (files_under(&a), files_under(&b));
    let identical = fa == fb;
    let images = fa.keys().filter(|k| k.starts_with(IMAGES_DIR)).count();

    let mut verified = 0;
    for id in ["000000", "000057", "000123", "000199"] {
        if verify_sample(&b, id).map(|v| v.passed()).unwrap_or(false) {
            verified += 1;
        }
    }
    let cli = Command::new(env!("CARGO_BIN_EXE_occlugen"))
        .args(["inspect", "--out", a.to_str().unwrap(), "--id", "000042"])
        .env("OCCLUGEN_LOG", "warn")
        .output()
        .unwrap();
    let cli_ok = cli.status.success() && String::from_utf8_lossy(&cli.stdout).contains("verification passed");
    outcome(
        identical && images > 0 && verified == 4 && cli_ok,
        format!(
            "{} files compared ({images} images), identical: {identical}; inspect verified {}/5 ids; {:.1}s + {:.1}s",
            fa.len(),
            verified + usize::from(cli_ok),
            ta.as_secs_f64(),
            tb.as_secs_f64()
        ),
    )
}

fn oracle_scores(pred: &[u8], gt: &[u8]) -> (Vec<Option<f64>>, f64, f64, f64) {
    let n = gt.len() as f64;
    let mut iou = Vec::new();
    let mut fw = 0.0;
    for c in 0..2u8 {
        let inter = pred.iter().zip(gt).filter(|(p, g)| **p == c && **g == c).count();
        let union = pred.iter().zip(gt).filter(|(p, g)| **p == c || **g == c).count();
        let v = (union > 0).then(|| inter as f64 / union as f64);
        if let Some(v) = v {
            fw += gt.iter().filter(|g| **g == c).count() as f64 / n * v;
        }
        iou.push(v);
    }
    let defined: Vec<f64> = iou.iter().flatten().copied().collect();
    let miou = defined.iter().sum::<f64>() / defined.len() as f64;
    let acc = pred.iter().zip(gt).filter(|(p, g)| p == g).count() as f64 / n;
    (iou, miou, fw, acc)
}

fn metrics_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst = 0f64;
    let mut structural = 0;
    let (mut all_p, mut all_g) = (Vec::new(), Vec::new());
    let mut global = ConfusionMatrix::new(2).unwrap();
    for _ in 0..500 {
        // vary the foreground rate so some pairs are one-class
        let rate: f64 = rng.random_range(0.0..1.0);
        let gt: Vec<u8> = (0..64).map(|_| u8::from(rng.random_bool(rate))).collect();
        let pred: Vec<u8> = (0..64).map(|_| u8::from(rng.random_bool(rate))).collect();
        let mut m = ConfusionMatrix::new(2).unwrap();
        m.accumulate(&LabelMap::new(8, 8, pred.clone()).unwrap(), &LabelMap::new(8, 8, gt.clone()).unwrap()).unwrap();
        global.merge(&m).unwrap();
        let (iou, miou, fw, acc) = oracle_scores(&pred, &gt);
        let got = m.iou_per_class();
        for (a, b) in got.iter().zip(&iou) {
            match (a, b) {
                (Some(a), Some(b)) => worst = worst.max((a - b).abs()),
                (None, None) => {}
                _ => structural += 1,
            }
        }
        worst = worst
            .max((m.mean_iou().unwrap() - miou).abs())
            .max((m.fw_iou().unwrap() - fw).abs())
            .max((m.pixel_accuracy().unwrap() - acc).abs());
        all_p.extend(pred);
        all_g.extend(gt);
    }
    let (_, miou, fw, acc) = oracle_scores(&all_p, &all_g);
    worst = worst
        .max((global.mean_iou().unwrap() - miou).abs())
        .max((global.fw_iou().unwrap() - fw).abs())
        .max((global.pixel_accuracy().unwrap() - acc).abs());
    outcome(worst <= 1e-9 && structural == 0, format!("max deviation {worst:.2e} over 500 pairs + global, {structural} undefined-class mismatches"))
}

fn property_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut failures = Vec::new();

    // blend affinity
    let mut blend_err = 0f64;
    for k in 0..50 {
        let fg = random_image(16, 12, 100 + k);
        let bg = random_image(16, 12, 200 + k);
        let a = SoftMask::from_fn(16, 12, |_, _| rng.random()).unwrap();
        let out = alpha_blend(&fg, &bg, &a).unwrap();
        for y in 0..12 {
            for x in 0..16 {
                let (f, b, o, t) = (fg.pixel(x, y), bg.pixel(x, y), out.pixel(x, y), a.get(x, y));
                for c in 0..3 {
                    blend_err = blend_err.max(f64::from((o[c] - (t * f[c] + (1.0 - t) * b[c])).abs()));
                }
            }
        }
    }
    if blend_err > 1e-6 {
        failures.push("blend");
    }

    // blur conserves mass for content clear of the border
    let mut mass_err = 0f64;
    for k in 0..50 {
        let sigma: f32 = rng.random_range(0.3..3.0);
        let r = kernel_radius(sigma);
        let n = 2 * r + 20;
        let img = random_image(n, n, 300 + k);
        let img = ImageBuffer::from_fn(n, n, |x, y| {
            if (r..n - r).contains(&x) && (r..n - r).contains(&y) { img.pixel(x, y) } else { [0.0; 3] }
        })
        .unwrap();
        let out = gaussian_blur(&img, sigma).unwrap();
        let before: f64 = img.data().iter().map(|&v| f64::from(v)).sum();
        let after: f64 = out.data().iter().map(|&v| f64::from(v)).sum();
        mass_err = mass_err.max((after - before).abs() / before);
    }
    if mass_err > 1e-4 {
        failures.push("blur mass");
    }

    // forward warp followed by the composed inverse
    let mut worst_mae = 0f64;
    for k in 0..50 {
        let (rot, shear) = (rng.random_range(-30.0..30.0), rng.random_range(-10.0..10.0));
        let (sx, sy) = (rng.random_range(0.8..1.25), rng.random_range(0.8..1.25));
        let phase = k as f32 * 0.12;
        let img = ImageBuffer::from_fn(48, 48, |x, y| {
            let (fx, fy) = (x as f32 / 48.0, y as f32 / 48.0);
            [0.5 + 0.4 * (6.0 * fx + phase).sin(), 0.5 + 0.4 * (5.0 * fy - phase).cos(), 0.5 + 0.3 * (4.0 * (fx + fy)).sin()]
        })
        .unwrap();
        let p = AffineParams { rotation: rot, shear, scale_x: sx, scale_y: sy, ..AffineParams::identity() };
        let fwd = warp(&img, &p, Interp::Bilinear).unwrap();
        let r_inv = AffineParams::rotation(-rot);
        let sh_inv = AffineParams { shear: -shear, ..AffineParams::identity() };
        let s_inv = AffineParams { scale_x: 1.0 / sx, scale_y: 1.0 / sy, ..AffineParams::identity() };
        let back = [r_inv, sh_inv, s_inv].iter().fold(fwd, |im, q| warp(&im, q, Interp::Bilinear).unwrap());
        let (mut err, mut n) = (0f64, 0usize);
        for y in 14..34 {
            for x in 14..34 {
                let (a, b) = (img.pixel(x, y), back.pixel(x, y));
                for c in 0..3 {
                    err += f64::from((a[c] - b[c]).abs());
                    n += 1;
                }
            }
        }
        worst_mae = worst_mae.max(err / n as f64);
    }
    if worst_mae >= 0.02 {
        failures.push("affine round trip");
    }

    // A ⊆ B ⇒ op(A) ⊆ op(B), and erode(A) ⊆ A ⊆ dilate(A)
    let subset = |a: &BinaryMask, b: &BinaryMask| a.data().iter().zip(b.data()).all(|(x, y)| *x <= *y);
    let mut morph_ok = true;
    for _ in 0..50 {
        let (w, h) = (rng.random_range(8..40), rng.random_range(8..40));
        let b = BinaryMask::from_fn(w, h, |_, _| rng.random_bool(0.6)).unwrap();
        let a = BinaryMask::from_fn(w, h, |x, y| b.get(x, y) && rng.random_bool(0.7)).unwrap();
        let r = rng.random_range(1..4);
        for op in [MorphOp::Dilate, MorphOp::Erode] {
            morph_ok &= subset(&morphology(&a, op, r).unwrap(), &morphology(&b, op, r).unwrap());
        }
        morph_ok &= subset(&morphology(&a, MorphOp::Erode, r).unwrap(), &a);
        morph_ok &= subset(&a, &morphology(&a, MorphOp::Dilate, r).unwrap());
    }
    if !morph_ok {
        failures.push("morphology");
    }

    // single-bit input flips
    let trials = 10_000u64;
    let mut flipped = 0u64;
    for t in 0..trials {
        let g = rng.random::<u64>();
        let i = rng.random::<u64>() >> 1;
        let bit = t % 64;
        let flip_g = t % 2 == 0;
        let (g2, i2) = if flip_g { (g ^ (1 << bit), i) } else { (g, i ^ (1 << (bit % 63))) };
        flipped += u64::from((derive_seed(g, i) ^ derive_seed(g2, i2)).count_ones());
    }
    let avalanche = flipped as f64 / trials as f64;
    if (avalanche - 32.0).abs() > 3.0 {
        failures.push("avalanche");
    }

    outcome(
        failures.is_empty(),
        format!(
            "blend {blend_err:.1e}, blur mass {mass_err:.1e}, round-trip MAE {worst_mae:.4}, morphology monotone: {morph_ok}, avalanche {avalanche:.2} bits{}",
            if failures.is_empty() { String::new() } else { format!("; failed: {}", failures.join(", ")) }
        ),
    )
}

/// Defaults to 24 samples per run so the gate stays within minutes on one
/// core; set `OCCLUGEN_THROUGHPUT_COUNT=1000` for the full-size comparison.
fn throughput() -> Outcome {
    let count: u64 = std::env::var("OCCLUGEN_THROUGHPUT_COUNT").ok().and_then(|v| v.parse().ok()).unwrap_or(24);
    let dir = tempfile::tempdir().unwrap();
    write_demo_inputs(dir.path(), 4, 512).unwrap();
    let (a, t1) = run_generation(dir.path(), Pipeline::Mix, count, 1, "w1");
    let (b, t8) = run_generation(dir.path(), Pipeline::Mix, count, 8, "w8");
    let identical = files_under(&a) == files_under(&b);
    let ratio = t8.as_secs_f64() / t1.as_secs_f64();
    let cores = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
    outcome(
        identical,
        format!(
            "{count} composites at 512x512: 1 worker {:.1}s, 8 workers {:.1}s (ratio {ratio:.2}, soft target < 0.33, {cores} core(s) available); outputs identical: {identical}",
            t1.as_secs_f64(),
            t8.as_secs_f64()
        ),
    )
}

fn main() {
    // `cargo test -- --list` and filters: this target has one test, the gate.
    let args: Vec<String> = std::env::args().collect();
    if args.iter().any(|a| a == "--list") {
        println!("acceptance: test");
        return;
    }

    let one_thread = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let criteria: Vec<(&str, Duration, Check)> = vec![
        ("mIoU arithmetic", Duration::from_secs(1), Box::new(miou_arithmetic)),
        ("SOT identity", Duration::from_secs(5), Box::new(sot_identity)),
        ("SOT convergence", Duration::MAX, Box::new(move || one_thread.install(sot_convergence))),
        ("preprocess balance", Duration::MAX, Box::new(preprocess_balance)),
        ("label exactness", Duration::MAX, Box::new(label_exactness)),
        ("distribution conformance", Duration::MAX, Box::new(distribution_conformance)),
        ("determinism", Duration::from_secs(300), Box::new(determinism)),
        ("metrics oracle", Duration::MAX, Box::new(metrics_oracle)),
        ("property suite", Duration::MAX, Box::new(property_suite)),
        ("throughput", Duration::MAX, Box::new(throughput)),
    ];

    let mut failed = 0;
    for (n, (name, budget, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = check();
        let took = start.elapsed();
        let in_time = took <= *budget;
        let pass = o.pass && in_time;
        if !pass {
            failed += 1;
        }
        let budget_note = if *budget == Duration::MAX { String::new() } else { format!(" / budget {:.0}s", budget.as_secs_f64()) };
        println!(
            "{} [{:>2}] {name}: {}{} ({:.2}s{budget_note})",
            if pass { "PASS" } else { "FAIL" },
            n + 1,
            o.detail,
            if in_time { "" } else { "; over time budget" },
            took.as_secs_f64(),
        );
    }
    println!("{}/{} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
