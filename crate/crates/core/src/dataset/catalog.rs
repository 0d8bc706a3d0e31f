//! Input tree discovery. Catalogs hold paths only; pixels are loaded per sample.
//!
//! ```text
//! faces/img/<id>.{png,jpg}    faces/mask/<id>.png
//! occluders/<category>/img/<stem>.*   occluders/<category>/mask/<stem>.png
//! occluders/<category>/meta.json      (optional)
//! textures/<id>.*
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{io_err, Error, Result};
use crate::imgcore::io::{read_binary_mask, read_image, read_soft_mask};
use crate::natocc::{Category, FaceSample, Occluder, FINGERS_UP};
use crate::randocc::Texture;

const IMAGE_EXTENSIONS: [&str; 3] = ["png", "jpg", "jpeg"];

/// Image files directly inside `dir`, keyed and sorted by file stem.
fn images_by_stem(dir: &Path) -> Result<BTreeMap<String, PathBuf>> {
    let mut out = BTreeMap::new();
    for entry in fs::read_dir(dir).map_err(io_err(dir))? {
        let path = entry.map_err(io_err(dir))?.path();
        let ext = path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase);
        if !path.is_file() || !ext.is_some_and(|e| IMAGE_EXTENSIONS.contains(&e.as_str())) {
            continue;
        }
        if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
            if let Some(prev) = out.insert(stem.to_string(), path.clone()) {
                log::warn!("{} shadows {} (same stem)", path.display(), prev.display());
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FaceEntry {
    pub id: String,
    pub image: PathBuf,
    pub mask: PathBuf,
}

#[derive(Debug, Clone, Default)]
pub struct FaceCatalog {
    pub entries: Vec<FaceEntry>,
    /// One line per rejected input file.
    pub diagnostics: Vec<String>,
}

impl FaceCatalog {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn load(&self, i: usize) -> Result<FaceSample> {
        let e = &self.entries[i];
        FaceSample::new(e.id.clone(), read_image(&e.image)?, read_binary_mask(&e.mask)?)
    }
}

/// Pairs `dir/img` with `dir/mask` by stem and drops unusable pairs.
pub fn ingest_faces(dir: &Path) -> Result<FaceCatalog> {
    let images = images_by_stem(&dir.join("img"))?;
    let masks = images_by_stem(&dir.join("mask"))?;
    let mut cat = FaceCatalog::default();
    for (id, image) in images {
        let Some(mask) = masks.get(&id) else {
            cat.diagnostics.push(format!("{}: no matching mask", image.display()));
            continue;
        };
        match read_binary_mask(mask) {
            Ok(m) if m.is_empty() => cat.diagnostics.push(format!("{}: mask is empty", mask.display())),
            Ok(_) => cat.entries.push(FaceEntry { id, image, mask: mask.clone() }),
            Err(e) => cat.diagnostics.push(format!("{}: {e}", mask.display())),
        }
    }
    for d in &cat.diagnostics {
        log::warn!("face catalog: {d}");
    }
    if cat.entries.is_empty() {
        return Err(Error::Catalog(format!("no usable face/mask pairs under {}", dir.display())));
    }
    Ok(cat)
}

#[derive(Debug, Clone, PartialEq)]
pub struct OccluderEntry {
    /// `<category dir>/<stem>`.
    pub id: String,
    pub category: Category,
    pub finger_direction: Option<[f64; 2]>,
    pub image: PathBuf,
    pub mask: PathBuf,
}

impl OccluderEntry {
    pub fn load(&self) -> Result<Occluder> {
        Occluder::new(
            self.id.clone(),
            read_image(&self.image)?,
            read_soft_mask(&self.mask)?,
            self.category,
            self.finger_direction,
        )
    }
}

#[derive(Debug, Clone, Default)]
pub struct OccluderCatalog {
    pub entries: Vec<OccluderEntry>,
    pub diagnostics: Vec<String>,
}

impl OccluderCatalog {
    pub fn categories(&self) -> Vec<Category> {
        self.entries.iter().map(|e| e.category).collect()
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct CategoryMeta {
    category: Option<Category>,
    /// Default finger direction for hands in this directory.
    finger_direction: Option<[f64; 2]>,
    #[serde(default)]
    items: BTreeMap<String, ItemMeta>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ItemMeta {
    finger_direction: Option<[f64; 2]>,
}

fn category_for_dir(name: &str) -> Category {
    match name.to_ascii_lowercase().as_str() {
        "hand" | "hands" => Category::Hand,
        "synthetic" => Category::Synthetic,
        _ => Category::Object,
    }
}

fn unit(v: [f64; 2]) -> Option<[f64; 2]> {
    let n = v[0].hypot(v[1]);
    (n > 0.0 && n.is_finite()).then(|| [v[0] / n, v[1] / n])
}

pub fn ingest_occluders(dir: &Path) -> Result<OccluderCatalog> {
    let mut subdirs: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(io_err(dir))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_dir())
        .collect();
    subdirs.sort();
    let mut cat = OccluderCatalog::default();
    for sub in subdirs {
        let name = sub.file_name().and_then(|n| n.to_str()).unwrap_or_default().to_string();
        let meta_path = sub.join("meta.json");
        let meta: CategoryMeta = if meta_path.is_file() {
            let text = fs::read_to_string(&meta_path).map_err(io_err(&meta_path))?;
            serde_json::from_str(&text)
                .map_err(|e| Error::Catalog(format!("{}: {e}", meta_path.display())))?
        } else {
            CategoryMeta::default()
        };
        let category = meta.category.unwrap_or_else(|| category_for_dir(&name));
        let (img_dir, mask_dir) = (sub.join("img"), sub.join("mask"));
        if !img_dir.is_dir() || !mask_dir.is_dir() {
            cat.diagnostics.push(format!("{}: missing img/ or mask/", sub.display()));
            continue;
        }
        let masks = images_by_stem(&mask_dir)?;
        for (stem, image) in images_by_stem(&img_dir)? {
            let Some(mask) = masks.get(&stem) else {
                cat.diagnostics.push(format!("{}: no matching mask", image.display()));
                continue;
            };
            let finger_direction = match category {
                Category::Hand => {
                    let raw = meta.items.get(&stem).and_then(|m| m.finger_direction).or(meta.finger_direction);
                    match raw.map(unit).unwrap_or(Some(FINGERS_UP)) {
                        Some(d) => Some(d),
                        None => {
                            cat.diagnostics.push(format!("{}: zero finger direction", image.display()));
                            continue;
                        }
                    }
                }
                _ => None,
            };
            cat.entries.push(OccluderEntry {
                id: format!("{name}/{stem}"),
                category,
                finger_direction,
                image,
                mask: mask.clone(),
            });
        }
    }
    for d in &cat.diagnostics {
        log::warn!("occluder catalog: {d}");
    }
    if cat.entries.is_empty() {
        return Err(Error::Catalog(format!("no usable occluders under {}", dir.display())));
    }
    Ok(cat)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TextureEntry {
    pub id: String,
    pub path: PathBuf,
}

impl TextureEntry {
    pub fn load(&self) -> Result<Texture> {
        Ok(Texture { id: self.id.clone(), image: read_image(&self.path)? })
    }
}

pub fn ingest_textures(dir: &Path) -> Result<Vec<TextureEntry>> {
    let entries: Vec<TextureEntry> = images_by_stem(dir)?
        .into_iter()
        .map(|(id, path)| TextureEntry { id, path })
        .collect();
    if entries.is_empty() {
        return Err(Error::Catalog(format!("no texture images under {}", dir.display())));
    }
    Ok(entries)
}
