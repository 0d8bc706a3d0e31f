use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::atomic::{AtomicU64, Ordering};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::catalog::{ingest_faces, ingest_occluders, ingest_textures, FaceCatalog, OccluderCatalog, TextureEntry};
use super::config::{GenerationConfig, Pipeline};
use super::manifest::{read_manifest, write_manifest, ManifestRecord, SampleStatus};
use super::seed::derive_seed;
use crate::error::{invalid, io_err, Error, Result};
use crate::imgcore::io::{encode_png_image, encode_png_mask, mask_to_gray8, to_rgb8};
use crate::imgcore::BBox;
use crate::natocc::{select_occluder, synthesize_natocc, CompositeSample, Occluder, Synthesis};
use crate::randocc::synthesize_randocc;

pub const MANIFEST_FILE: &str = "manifest.jsonl";
pub const SNAPSHOT_FILE: &str = "config.snapshot";
pub const IMAGES_DIR: &str = "images";
pub const MASKS_DIR: &str = "masks";

/// One regenerated sample with its manifest row.
#[derive(Debug, Clone)]
pub struct Generated {
    pub record: ManifestRecord,
    pub synthesis: Option<Synthesis>,
    /// Why the sample was skipped.
    pub error: Option<String>,
}

impl Generated {
    pub fn composite(&self) -> Option<CompositeSample> {
        self.synthesis.as_ref().map(|s| CompositeSample {
            image: s.image.clone(),
            gt_mask: s.gt_mask.clone(),
            record: self.record.clone(),
        })
    }

    pub fn encoded(&self) -> Option<(Vec<u8>, Vec<u8>)> {
        self.synthesis.as_ref().map(|s| (encode_png_image(&s.image), encode_png_mask(&s.gt_mask)))
    }
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub records: Vec<ManifestRecord>,
    pub ok: u64,
    pub skipped: u64,
    pub elapsed: Duration,
}

/// Catalogs plus a frozen config; `generate(i)` is a pure function of both.
#[derive(Debug)]
pub struct Generator {
    config: GenerationConfig,
    snapshot: String,
    hash: String,
    faces: FaceCatalog,
    occluders: Option<OccluderCatalog>,
    textures: Option<Vec<TextureEntry>>,
}

impl Generator {
    pub fn new(config: GenerationConfig) -> Result<Self> {
        config.validate()?;
        let snapshot = config.snapshot()?;
        let hash = config.hash()?;
        let faces = ingest_faces(&config.faces_dir)?;
        let uses = |p| config.pipeline == p || (config.pipeline == Pipeline::Mix && config.mix_weight(p) > 0.0);
        let occluders = uses(Pipeline::Natocc).then(|| ingest_occluders(&config.occluders_dir)).transpose()?;
        let textures = uses(Pipeline::Randocc).then(|| ingest_textures(&config.textures_dir)).transpose()?;
        log::info!(
            "catalog: {} faces, {} occluders, {} textures",
            faces.len(),
            occluders.as_ref().map_or(0, |c| c.entries.len()),
            textures.as_ref().map_or(0, Vec::len)
        );
        Ok(Self { config, snapshot, hash, faces, occluders, textures })
    }

    /// Rebuilds the generator recorded in an output tree's snapshot.
    pub fn from_output(out_dir: &Path) -> Result<Self> {
        let path = out_dir.join(SNAPSHOT_FILE);
        let text = fs::read_to_string(&path).map_err(io_err(&path))?;
        let gen = Self::new(GenerationConfig::from_snapshot(&text)?)?;
        if gen.snapshot != text {
            log::warn!("{} is not in canonical form; hashes may differ", path.display());
        }
        Ok(gen)
    }

    pub fn config(&self) -> &GenerationConfig {
        &self.config
    }

    pub fn config_hash(&self) -> &str {
        &self.hash
    }

    pub fn snapshot(&self) -> &str {
        &self.snapshot
    }

    pub fn faces(&self) -> &FaceCatalog {
        &self.faces
    }

    pub fn sample_id(&self, index: u64) -> String {
        let digits = (self.config.count.saturating_sub(1)).to_string().len().max(6);
        format!("{index:0digits$}")
    }

    pub fn generate(&self, index: u64) -> Generated {
        let seed = derive_seed(self.config.global_seed, index);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pipeline = match self.config.pipeline {
            Pipeline::Mix => {
                let (wn, wr) = (self.config.mix_weight(Pipeline::Natocc), self.config.mix_weight(Pipeline::Randocc));
                if rng.random::<f64>() * (wn + wr) < wn {
                    Pipeline::Natocc
                } else {
                    Pipeline::Randocc
                }
            }
            p => p,
        };
        let face_index = (index % self.faces.len() as u64) as usize;
        let mut record = ManifestRecord {
            sample_id: self.sample_id(index),
            pipeline: pipeline.as_str().into(),
            face_id: self.faces.entries[face_index].id.clone(),
            occluder_ids: Vec::new(),
            seed,
            alpha: 0.0,
            scale: 0.0,
            placement: [0, 0],
            config_hash: self.hash.clone(),
            status: SampleStatus::Skipped,
        };
        match self.synthesize(pipeline, face_index, &mut rng) {
            Ok(s) => {
                let p = &s.provenance;
                record.occluder_ids = p.occluder_ids.clone();
                record.alpha = p.alpha;
                record.scale = p.scale;
                record.placement = p.placement;
                record.status = SampleStatus::Ok;
                Generated { record, synthesis: Some(s), error: None }
            }
            Err(e) => {
                log::warn!("sample {} skipped: {e}", record.sample_id);
                Generated { record, synthesis: None, error: Some(e.to_string()) }
            }
        }
    }

    fn synthesize(&self, pipeline: Pipeline, face_index: usize, rng: &mut ChaCha8Rng) -> Result<Synthesis> {
        let face = self.faces.load(face_index)?;
        match pipeline {
            Pipeline::Natocc => {
                let cat = self.occluders.as_ref().ok_or_else(|| invalid("no occluder catalog loaded"))?;
                let picks = select_occluder(&cat.categories(), &self.config.natocc, rng)?;
                let occs = picks.iter().map(|&i| cat.entries[i].load()).collect::<Result<Vec<Occluder>>>()?;
                synthesize_natocc(&face, &occs, &self.config.natocc, rng)
            }
            Pipeline::Randocc => {
                let tex = self.textures.as_ref().ok_or_else(|| invalid("no texture catalog loaded"))?;
                let pick = rng.random_range(0..tex.len());
                synthesize_randocc(&face, &tex[pick].load()?, &self.config.randocc, None, rng)
            }
            Pipeline::Mix => unreachable!("mix resolves to a concrete pipeline"),
        }
    }

    /// Generates every sample into `config.output_dir`.
    pub fn run(&self, force: bool) -> Result<RunSummary> {
        let start = Instant::now();
        let out = &self.config.output_dir;
        prepare_output(out, force)?;
        let snap = out.join(SNAPSHOT_FILE);
        fs::write(&snap, &self.snapshot).map_err(io_err(&snap))?;

        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(self.config.workers)
            .build()
            .map_err(|e| invalid(format!("cannot start worker pool: {e}")))?;
        let done = AtomicU64::new(0);
        let count = self.config.count;
        let every = (count / 20).max(1);
        let records: Vec<ManifestRecord> = pool.install(|| {
            (0..count)
                .into_par_iter()
                .map(|i| {
                    let g = self.generate(i);
                    if let Some((img, mask)) = g.encoded() {
                        let img_path = out.join(IMAGES_DIR).join(format!("{}.png", g.record.sample_id));
                        write_file(&img_path, &img)?;
                        write_file(&out.join(MASKS_DIR).join(format!("{}.png", g.record.sample_id)), &mask)?;
                        post_process(&self.config.post_process_command, &img_path)?;
                    }
                    let n = done.fetch_add(1, Ordering::Relaxed) + 1;
                    if n % every == 0 || n == count {
                        log::info!("{n}/{count} samples");
                    }
                    Ok(g.record)
                })
                .collect::<Result<_>>()
        })?;
        write_manifest(&records, &out.join(MANIFEST_FILE))?;
        let ok = records.iter().filter(|r| r.status == SampleStatus::Ok).count() as u64;
        Ok(RunSummary { ok, skipped: count - ok, records, elapsed: start.elapsed() })
    }
}

/// Runs the configured hook on a written image; masks are never touched, so
/// labels stay exact whatever the hook does to the pixels.
fn post_process(argv: &[String], image: &Path) -> Result<()> {
    let Some((program, args)) = argv.split_first() else {
        return Ok(());
    };
    let status = Command::new(program).args(args).arg(image).status().map_err(io_err(program))?;
    if !status.success() {
        return Err(invalid(format!("post-process command {program} failed on {}: {status}", image.display())));
    }
    Ok(())
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(io_err(path))
}

fn prepare_output(out: &Path, force: bool) -> Result<()> {
    let occupied = [MANIFEST_FILE, SNAPSHOT_FILE, IMAGES_DIR, MASKS_DIR].iter().any(|p| out.join(p).exists());
    if occupied {
        if !force {
            return Err(Error::OutputExists(out.to_path_buf()));
        }
        for d in [IMAGES_DIR, MASKS_DIR] {
            let p = out.join(d);
            if p.exists() {
                fs::remove_dir_all(&p).map_err(io_err(&p))?;
            }
        }
    }
    for d in [IMAGES_DIR, MASKS_DIR] {
        let p = out.join(d);
        fs::create_dir_all(&p).map_err(io_err(&p))?;
    }
    Ok(())
}

/// Where and by how much a stored file differs from its regeneration.
#[derive(Debug, Clone, PartialEq)]
pub struct PixelDiff {
    pub differing: usize,
    pub total: usize,
    pub bbox: Option<BBox>,
    /// Largest per-channel difference in 8-bit levels.
    pub max_delta: u8,
    pub size_mismatch: Option<((u32, u32), (u32, u32))>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum FileCheck {
    Identical,
    Missing(PathBuf),
    /// Not expected (skipped sample) but present.
    Unexpected(PathBuf),
    Differs(PixelDiff),
}

#[derive(Debug, Clone)]
pub struct Verification {
    pub stored: ManifestRecord,
    pub regenerated: Generated,
    pub image: FileCheck,
    pub mask: FileCheck,
}

impl Verification {
    pub fn record_matches(&self) -> bool {
        self.stored == self.regenerated.record
    }

    pub fn passed(&self) -> bool {
        self.record_matches() && self.image == FileCheck::Identical && self.mask == FileCheck::Identical
    }
}

/// Regenerates `sample_id` from the output tree's snapshot and compares it
/// with the stored manifest row and files.
pub fn verify_sample(out_dir: &Path, sample_id: &str) -> Result<Verification> {
    let gen = Generator::from_output(out_dir)?;
    let records = read_manifest(&out_dir.join(MANIFEST_FILE))?;
    let stored = records
        .into_iter()
        .find(|r| r.sample_id == sample_id)
        .ok_or_else(|| invalid(format!("sample {sample_id} is not in the manifest")))?;
    let index: u64 = sample_id.parse().map_err(|_| invalid(format!("sample id {sample_id} is not an index")))?;
    let regenerated = gen.generate(index);
    let img_path = out_dir.join(IMAGES_DIR).join(format!("{sample_id}.png"));
    let mask_path = out_dir.join(MASKS_DIR).join(format!("{sample_id}.png"));
    let (image, mask) = match &regenerated.synthesis {
        Some(s) => (
            check_file(&img_path, to_rgb8(&s.image).as_raw(), s.image.width(), s.image.height(), 3, &encode_png_image(&s.image))?,
            check_file(
                &mask_path,
                mask_to_gray8(&s.gt_mask).as_raw(),
                s.gt_mask.width(),
                s.gt_mask.height(),
                1,
                &encode_png_mask(&s.gt_mask),
            )?,
        ),
        None => (absent(&img_path), absent(&mask_path)),
    };
    Ok(Verification { stored, regenerated, image, mask })
}

fn absent(p: &Path) -> FileCheck {
    if p.exists() {
        FileCheck::Unexpected(p.to_path_buf())
    } else {
        FileCheck::Identical
    }
}

fn check_file(path: &Path, raw: &[u8], w: usize, h: usize, channels: usize, encoded: &[u8]) -> Result<FileCheck> {
    let Ok(bytes) = fs::read(path) else {
        return Ok(FileCheck::Missing(path.to_path_buf()));
    };
    if bytes == encoded {
        return Ok(FileCheck::Identical);
    }
    let decoded = image::load_from_memory(&bytes).map_err(|source| Error::Image { path: path.into(), source })?;
    let stored: Vec<u8> = if channels == 3 { decoded.to_rgb8().into_raw() } else { decoded.to_luma8().into_raw() };
    let (sw, sh) = (decoded.width(), decoded.height());
    if (sw as usize, sh as usize) != (w, h) {
        return Ok(FileCheck::Differs(PixelDiff {
            differing: w * h,
            total: w * h,
            bbox: None,
            max_delta: 0,
            size_mismatch: Some(((sw, sh), (w as u32, h as u32))),
        }));
    }
    Ok(FileCheck::Differs(diff_raw(&stored, raw, w, h, channels)))
}

fn diff_raw(a: &[u8], b: &[u8], w: usize, h: usize, channels: usize) -> PixelDiff {
    let mut diff = PixelDiff { differing: 0, total: w * h, bbox: None, max_delta: 0, size_mismatch: None };
    for y in 0..h {
        for x in 0..w {
            let i = (y * w + x) * channels;
            let delta = (0..channels).map(|c| a[i + c].abs_diff(b[i + c])).max().unwrap_or(0);
            if delta == 0 {
                continue;
            }
            diff.differing += 1;
            diff.max_delta = diff.max_delta.max(delta);
            diff.bbox = Some(match diff.bbox {
                None => BBox { x0: x, y0: y, x1: x, y1: y },
                Some(b) => BBox { x0: b.x0.min(x), y0: b.y0.min(y), x1: b.x1.max(x), y1: b.y1.max(y) },
            });
        }
    }
    diff
}

/// Writes a small synthetic input tree (faces, occluders, textures); used by
/// tests, benchmarks and the CLI smoke path.
pub fn write_demo_inputs(root: &Path, faces: usize, size: usize) -> Result<(PathBuf, PathBuf, PathBuf)> {
    use crate::imgcore::io::{write_binary_mask, write_image};
    use crate::imgcore::{BinaryMask, ImageBuffer};

    let faces_dir = root.join("faces");
    let occ_dir = root.join("occluders");
    let tex_dir = root.join("textures");
    for d in [
        faces_dir.join("img"),
        faces_dir.join("mask"),
        occ_dir.join("hands/img"),
        occ_dir.join("hands/mask"),
        occ_dir.join("objects/img"),
        occ_dir.join("objects/mask"),
        tex_dir.clone(),
    ] {
        fs::create_dir_all(&d).map_err(io_err(&d))?;
    }
    let s = size as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(0x5EED);
    for i in 0..faces {
        let tone: [f32; 3] = [rng.random_range(0.45..0.9), rng.random_range(0.3..0.7), rng.random_range(0.2..0.6)];
        let (cx, cy, r) = (s * rng.random_range(0.42..0.58), s * rng.random_range(0.42..0.58), s * rng.random_range(0.25..0.35));
        let inside = |x: usize, y: usize| {
            let (dx, dy) = ((x as f64 - cx) / r, (y as f64 - cy) / (1.25 * r));
            dx * dx + dy * dy < 1.0
        };
        let img = ImageBuffer::from_fn(size, size, |x, y| {
            if inside(x, y) {
                let shade = 0.85 + 0.15 * (y as f32 / size as f32);
                tone.map(|c| c * shade)
            } else if (x + y) % 23 < 3 {
                [0.0; 3]
            } else {
                [0.1, 0.15 + 0.3 * (x as f32 / size as f32), 0.2]
            }
        })?;
        let mask = BinaryMask::from_fn(size, size, inside)?;
        write_image(&faces_dir.join(format!("img/face_{i:03}.png")), &img)?;
        write_binary_mask(&faces_dir.join(format!("mask/face_{i:03}.png")), &mask)?;
    }
    for i in 0..2 {
        let (w, h) = (size * 3 / 4, size);
        // palm plus four fingers pointing up
        let hand = BinaryMask::from_fn(w, h, |x, y| {
            let (fx, fy) = (x as f64 / w as f64, y as f64 / h as f64);
            let palm = (0.2..0.8).contains(&fx) && (0.45..0.95).contains(&fy);
            let finger = fy >= 0.1 + 0.05 * i as f64 && fy < 0.5 && (0..4).any(|k| {
                let c = 0.27 + 0.15 * k as f64;
                (fx - c).abs() < 0.05
            });
            palm || finger
        })?;
        let img = ImageBuffer::from_fn(w, h, |x, y| {
            if hand.get(x, y) {
                [0.75 - 0.1 * i as f32, 0.55, 0.45 + 0.1 * (x as f32 / w as f32)]
            } else {
                [0.0; 3]
            }
        })?;
        write_image(&occ_dir.join(format!("hands/img/hand_{i}.png")), &img)?;
        write_binary_mask(&occ_dir.join(format!("hands/mask/hand_{i}.png")), &hand)?;
    }
    let cup = BinaryMask::from_fn(size / 2, size / 2, |x, y| {
        let (dx, dy) = (x as f64 - s / 4.0, y as f64 - s / 4.0);
        dx * dx + dy * dy < (s / 5.0).powi(2)
    })?;
    let cup_img = ImageBuffer::from_fn(size / 2, size / 2, |x, _| [0.2, 0.3, 0.8 - 0.3 * (x as f32 / s as f32)])?;
    write_image(&occ_dir.join("objects/img/cup.png"), &cup_img)?;
    write_binary_mask(&occ_dir.join("objects/mask/cup.png"), &cup)?;
    for (i, period) in [5usize, 9].into_iter().enumerate() {
        let tex = ImageBuffer::from_fn(64, 64, |x, y| {
            let on = ((x / period) + (y / period)) % 2 == 0;
            if on {
                [0.9, 0.8 - 0.3 * i as f32, 0.1]
            } else {
                [0.1, 0.2, 0.3 + 0.4 * i as f32]
            }
        })?;
        write_image(&tex_dir.join(format!("tex_{i}.png")), &tex)?;
    }
    Ok((faces_dir, occ_dir, tex_dir))
}
