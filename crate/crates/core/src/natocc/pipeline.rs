use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{
    augment_occluder, compose, place_hand, place_occluder, Category, ColorTransfer, FaceSample, NatOccConfig,
    Occluder,
};
use crate::error::{invalid, Result};
use crate::imgcore::{resize, BinaryMask, ImageBuffer, Interp};
use crate::sot::{preprocess_source, sot_color_transfer, PreprocessReport};

/// Per-sample draws that end up in the manifest.
#[derive(Debug, Clone, PartialEq)]
pub struct Provenance {
    pub pipeline: &'static str,
    pub face_id: String,
    pub occluder_ids: Vec<String>,
    pub alpha: f64,
    pub scale: f64,
    pub placement: [i64; 2],
}

/// Inputs and report of a hand color transfer.
#[derive(Debug, Clone, PartialEq)]
pub struct HandColorTransfer {
    pub occluder_id: String,
    /// Hand canvas resized to the face and background-zeroed, as fed to the transfer.
    pub target: ImageBuffer,
    pub report: PreprocessReport,
}

/// An occluder after augmentation and orientation, with its canvas origin on the face.
#[derive(Debug, Clone, PartialEq)]
pub struct PlacedOccluder {
    pub occluder: Occluder,
    pub offset: [i64; 2],
}

/// One generated sample before it is tied to a manifest row.
#[derive(Debug, Clone, PartialEq)]
pub struct Synthesis {
    pub image: ImageBuffer,
    pub gt_mask: BinaryMask,
    /// Union of hard occluder supports on the face canvas.
    pub occluder_mask: BinaryMask,
    pub provenance: Provenance,
    pub color_transfer: Vec<HandColorTransfer>,
    /// In compositing order.
    pub placed: Vec<PlacedOccluder>,
}

/// Picks `occluders_per_sample` pool indices from the pool's categories.
pub fn select_occluder<R: Rng + ?Sized>(categories: &[Category], cfg: &NatOccConfig, rng: &mut R) -> Result<Vec<usize>> {
    if categories.is_empty() {
        return Err(invalid("occluder pool is empty"));
    }
    let mut picks = Vec::with_capacity(cfg.occluders_per_sample);
    for _ in 0..cfg.occluders_per_sample {
        if cfg.category_weights.is_empty() {
            picks.push(rng.random_range(0..categories.len()));
            continue;
        }
        let present: Vec<(Category, f64)> = [Category::Hand, Category::Object, Category::Synthetic]
            .into_iter()
            .filter(|c| categories.contains(c))
            .map(|c| (c, cfg.category_weights.get(c.as_str()).copied().unwrap_or(0.0)))
            .filter(|(_, w)| *w > 0.0)
            .collect();
        let total: f64 = present.iter().map(|p| p.1).sum();
        if present.is_empty() {
            return Err(invalid("no occluder category in the pool has positive weight"));
        }
        let mut u = rng.random::<f64>() * total;
        let mut chosen = present[present.len() - 1].0;
        for (c, w) in &present {
            if u < *w {
                chosen = *c;
                break;
            }
            u -= w;
        }
        let members: Vec<usize> = (0..categories.len()).filter(|&i| categories[i] == chosen).collect();
        picks.push(members[rng.random_range(0..members.len())]);
    }
    Ok(picks)
}

/// Recolors a hand with the face's palette on a face-sized canvas, then maps
/// the result back onto the hand's own canvas with its background zeroed.
fn transfer_hand(
    face: &FaceSample,
    hand: &Occluder,
    cfg: &NatOccConfig,
    seeds: (u64, u64),
) -> Result<(ImageBuffer, HandColorTransfer)> {
    let (fw, fh) = face.image.dims();
    let (hw, hh) = hand.image.dims();
    let mut target = resize(&hand.image, fw, fh, Interp::Bilinear)?;
    let mask = resize(&hand.mask, fw, fh, Interp::Bilinear)?;
    target.mask_out(&mask)?;
    let (source, report) = preprocess_source(&face.image, &target, &cfg.sot, seeds.0)?;
    let recolored = sot_color_transfer(&source, &target, &cfg.sot, seeds.1)?;
    let mut back = resize(&recolored, hw, hh, Interp::Bilinear)?;
    back.mask_out(&hand.mask)?;
    Ok((back, HandColorTransfer { occluder_id: hand.id.clone(), target, report }))
}

/// Runs the naturalistic pipeline for already-selected occluders.
pub fn synthesize_natocc<R: Rng + ?Sized>(
    face: &FaceSample,
    occluders: &[Occluder],
    cfg: &NatOccConfig,
    rng: &mut R,
) -> Result<Synthesis> {
    if occluders.is_empty() {
        return Err(invalid("no occluder selected"));
    }
    let augment = cfg.augment();
    let placement = cfg.placement();
    let blend = cfg.blend();

    let mut current = face.clone();
    let mut gt = face.face_mask.clone();
    let mut union = BinaryMask::new(face.image.width(), face.image.height())?;
    let mut first: Option<(f64, [i64; 2])> = None;
    let mut transfers = Vec::new();
    let mut placed_all = Vec::with_capacity(occluders.len());

    for occ in occluders {
        // Always drawn so the stream does not depend on the transfer switch.
        let seeds = (rng.next_u64(), rng.next_u64());
        let mut source = occ.clone();
        let recolor = occ.category == Category::Hand && cfg.color_transfer == ColorTransfer::Sot;
        if recolor {
            let (image, record) = transfer_hand(face, occ, cfg, seeds)?;
            source.image = image;
            transfers.push(record);
        }
        let (aug, draws) = augment_occluder(&source, face.image.dims(), &augment, recolor, rng)?;
        let (placed, place) = if aug.category == Category::Hand {
            let (o, p, _) = place_hand(face, &aug, &placement, cfg.hand_rotation_jitter, rng)?;
            (o, p)
        } else {
            let p = place_occluder(face, &aug, &placement, rng)?;
            (aug, p)
        };
        let c = compose(&current, &placed, place.offset, &blend, 1.0)?;
        gt = gt.and_not(&c.occluder_mask)?;
        union = union.or(&c.occluder_mask)?;
        current.image = c.image;
        first.get_or_insert((draws.scale, place.offset));
        placed_all.push(PlacedOccluder { occluder: placed, offset: place.offset });
    }
    let (scale, offset) = first.expect("at least one occluder");
    Ok(Synthesis {
        image: current.image,
        gt_mask: gt,
        occluder_mask: union,
        provenance: Provenance {
            pipeline: "natocc",
            face_id: face.id.clone(),
            occluder_ids: occluders.iter().map(|o| o.id.clone()).collect(),
            alpha: 1.0,
            scale,
            placement: offset,
        },
        color_transfer: transfers,
        placed: placed_all,
    })
}

/// Seeded selection plus synthesis over an in-memory pool.
pub fn generate_natocc_sample(face: &FaceSample, pool: &[Occluder], cfg: &NatOccConfig, seed: u64) -> Result<Synthesis> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cats: Vec<Category> = pool.iter().map(|o| o.category).collect();
    let picks = select_occluder(&cats, cfg, &mut rng)?;
    let chosen: Vec<Occluder> = picks.into_iter().map(|i| pool[i].clone()).collect();
    synthesize_natocc(face, &chosen, cfg, &mut rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imgcore::{kernel_radius, morphology, MorphOp, SoftMask};
    use crate::natocc::FINGERS_UP;

    fn face() -> FaceSample {
        let (w, h) = (64, 64);
        let img = ImageBuffer::from_fn(w, h, |x, y| {
            if (x as i64 - 32).pow(2) + (y as i64 - 32).pow(2) < 600 {
                [0.8, 0.6, 0.5 + 0.002 * x as f32]
            } else {
                [0.0, 0.02 * (y % 3) as f32, 0.0]
            }
        })
        .unwrap();
        let mask = BinaryMask::from_fn(w, h, |x, y| (x as i64 - 32).pow(2) + (y as i64 - 32).pow(2) < 500).unwrap();
        FaceSample::new("face_00", img, mask).unwrap()
    }

    fn hand() -> Occluder {
        let (w, h) = (40, 30);
        let mask = SoftMask::from_fn(w, h, |x, y| f32::from((6..34).contains(&x) && (4..28).contains(&y))).unwrap();
        let img = ImageBuffer::from_fn(w, h, |x, y| [0.3 + 0.01 * x as f32, 0.2, 0.1 + 0.01 * y as f32]).unwrap();
        Occluder::new("hand/h1", img, mask, Category::Hand, Some(FINGERS_UP)).unwrap()
    }

    fn object() -> Occluder {
        let mask = SoftMask::from_fn(24, 24, |x, y| f32::from((x as i64 - 12).pow(2) + (y as i64 - 12).pow(2) < 100)).unwrap();
        let img = ImageBuffer::filled(24, 24, [0.1, 0.4, 0.9]).unwrap();
        Occluder::new("object/cup", img, mask, Category::Object, None).unwrap()
    }

    fn small_sot() -> NatOccConfig {
        NatOccConfig { sot: crate::sot::SotParams { iterations: 8, ..Default::default() }, ..Default::default() }
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let pool = vec![object()];
        let a = generate_natocc_sample(&face(), &pool, &NatOccConfig::default(), 17).unwrap();
        let b = generate_natocc_sample(&face(), &pool, &NatOccConfig::default(), 17).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.provenance.occluder_ids, vec!["object/cup".to_string()]);
    }

    #[test]
    fn labels_are_face_and_not_occluder() {
        let pool = vec![object(), hand()];
        let f = face();
        for seed in 0..20 {
            let s = generate_natocc_sample(&f, &pool, &small_sot(), seed).unwrap();
            let expect = BinaryMask::from_fn(64, 64, |x, y| f.face_mask.get(x, y) && !s.occluder_mask.get(x, y)).unwrap();
            assert_eq!(s.gt_mask, expect);
            assert!(s.gt_mask.is_subset_of(&f.face_mask));
        }
    }

    #[test]
    fn color_transfer_changes_only_hand_pixels() {
        let pool = vec![hand()];
        let f = face();
        let with = generate_natocc_sample(&f, &pool, &small_sot(), 5).unwrap();
        let without = generate_natocc_sample(
            &f,
            &pool,
            &NatOccConfig { color_transfer: ColorTransfer::None, ..small_sot() },
            5,
        )
        .unwrap();
        assert_eq!(with.gt_mask, without.gt_mask);
        assert_eq!(with.occluder_mask, without.occluder_mask);
        assert_ne!(with.image, without.image);
        let cfg = NatOccConfig::default();
        let reach = kernel_radius(cfg.mask_feather_sigma) + cfg.intersection_band_radius;
        let zone = morphology(&with.occluder_mask, MorphOp::Dilate, reach).unwrap();
        for y in 0..64 {
            for x in 0..64 {
                if !zone.get(x, y) {
                    assert_eq!(with.image.pixel(x, y), without.image.pixel(x, y));
                }
            }
        }
        assert_eq!(with.color_transfer.len(), 1);
        assert!(without.color_transfer.is_empty());
    }

    #[test]
    fn category_weights_steer_selection() {
        let cats = vec![Category::Hand, Category::Object, Category::Object];
        let mut cfg = NatOccConfig::default();
        cfg.category_weights.insert("object".into(), 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let p = select_occluder(&cats, &cfg, &mut rng).unwrap();
            assert!(p[0] == 1 || p[0] == 2);
        }
        cfg.category_weights.clear();
        cfg.category_weights.insert("synthetic".into(), 1.0);
        assert!(select_occluder(&cats, &cfg, &mut rng).is_err());
        assert!(select_occluder(&[], &NatOccConfig::default(), &mut rng).is_err());
    }

    #[test]
    fn multiple_occluders_accumulate_labels() {
        let pool = vec![object()];
        let f = face();
        let cfg = NatOccConfig { occluders_per_sample: 3, ..NatOccConfig::default() };
        let s = generate_natocc_sample(&f, &pool, &cfg, 2).unwrap();
        assert_eq!(s.provenance.occluder_ids.len(), 3);
        assert_eq!(s.gt_mask, f.face_mask.and_not(&s.occluder_mask).unwrap());
    }
}
