//! Color transfer by sliced optimal transport, with the dark-pixel balancing
//! preprocess applied to the source (face) before the transfer.
//!
//! Both images are treated as RGB point clouds of equal cardinality. Each
//! round draws a uniformly random orthonormal basis of R³, matches sorted 1-D
//! projections of the two clouds along each basis vector, and advects every
//! target color by the summed per-axis displacement. Pixel positions never
//! move; only colors do.

use std::fmt;

use rand::{seq::index, Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result, Violation};
use crate::imgcore::{ensure_same_dims, ImageBuffer};

/// How many dark source pixels get replaced when the source has more than the target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReplacementRule {
    /// Replace a fraction `1 - 1/ratio`, leaving exactly as many dark pixels as the target has.
    Equalize,
    /// Replace a fraction `ratio - 1` (capped at 1).
    Literal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SotParams {
    /// Source pixels whose brightest channel is below this are "black".
    pub lower_thresh: f32,
    /// Every source channel is clipped to this ceiling.
    pub upper_thresh: f32,
    pub iterations: usize,
    pub step_size: f64,
    pub replacement: ReplacementRule,
    /// When non-zero, transport plans are fit on at most this many points per
    /// cloud and every pixel is mapped through per-direction quantile interpolation.
    pub max_points: usize,
}

impl Default for SotParams {
    fn default() -> Self {
        Self {
            lower_thresh: 10.0 / 255.0,
            upper_thresh: 240.0 / 255.0,
            iterations: 64,
            step_size: 1.0,
            replacement: ReplacementRule::Equalize,
            max_points: 0,
        }
    }
}

impl SotParams {
    pub fn violations(&self, prefix: &str) -> Vec<Violation> {
        let mut v = Vec::new();
        if !(0.0 <= self.lower_thresh && self.lower_thresh < self.upper_thresh && self.upper_thresh <= 1.0) {
            v.push(Violation::new(
                format!("{prefix}lower_thresh"),
                "need 0 <= lower_thresh < upper_thresh <= 1",
            ));
        }
        if self.iterations == 0 {
            v.push(Violation::new(format!("{prefix}iterations"), "must be >= 1"));
        }
        if !(self.step_size > 0.0 && self.step_size <= 1.0) {
            v.push(Violation::new(format!("{prefix}step_size"), "must lie in (0, 1]"));
        }
        v
    }

    fn check(&self) -> Result<()> {
        let v = self.violations("");
        if v.is_empty() {
            Ok(())
        } else {
            Err(crate::Error::Config(v))
        }
    }
}

/// What the dark-pixel preprocess measured and changed.
#[derive(Debug, Clone, PartialEq)]
pub struct PreprocessReport {
    /// Source pixels with max channel below `lower_thresh`.
    pub s_quantity: usize,
    /// Target pixels that are exactly zero in every channel.
    pub t_quantity: usize,
    /// `s_quantity / t_quantity`; infinite when the target has no black pixels.
    pub black_ratio: f64,
    pub replaced_count: usize,
    /// Per-channel mean of the non-black source pixels.
    pub replacement_color: [f32; 3],
}

impl fmt::Display for PreprocessReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "s_quantity: {}", self.s_quantity)?;
        writeln!(f, "t_quantity: {}", self.t_quantity)?;
        writeln!(f, "black_ratio: {}", self.black_ratio)?;
        writeln!(f, "replaced_count: {}", self.replaced_count)?;
        let [r, g, b] = self.replacement_color;
        write!(f, "replacement_color: [{r:.6}, {g:.6}, {b:.6}]")
    }
}

#[inline]
fn is_dark(px: [f32; 3], lower: f32) -> bool {
    px[0].max(px[1]).max(px[2]) < lower
}

/// Balances dark pixels between source and target, then clips the source.
///
/// `seed` drives which dark pixels are replaced.
pub fn preprocess_source(
    source: &ImageBuffer,
    target: &ImageBuffer,
    params: &SotParams,
    seed: u64,
) -> Result<(ImageBuffer, PreprocessReport)> {
    ensure_same_dims("preprocess_source", source.dims(), target.dims())?;
    params.check()?;

    let dark: Vec<usize> = source
        .pixels()
        .enumerate()
        .filter(|(_, p)| is_dark(*p, params.lower_thresh))
        .map(|(i, _)| i)
        .collect();
    let s_quantity = dark.len();
    let t_quantity = target.pixels().filter(|p| *p == [0.0; 3]).count();

    let mut sum = [0f64; 3];
    let mut lit = 0usize;
    for p in source.pixels().filter(|p| !is_dark(*p, params.lower_thresh)) {
        for c in 0..3 {
            sum[c] += f64::from(p[c]);
        }
        lit += 1;
    }
    // An all-dark source has no mean; fall back to a gray just above the cutoff.
    let replacement_color = if lit > 0 {
        sum.map(|s| (s / lit as f64) as f32)
    } else {
        [params.lower_thresh; 3]
    };

    let black_ratio = match (s_quantity, t_quantity) {
        (0, _) => 0.0,
        (_, 0) => f64::INFINITY,
        (s, t) => s as f64 / t as f64,
    };

    let replace_n = if black_ratio > 1.0 {
        match params.replacement {
            ReplacementRule::Equalize => s_quantity - t_quantity.min(s_quantity),
            ReplacementRule::Literal => {
                let frac = (black_ratio - 1.0).min(1.0);
                ((frac * s_quantity as f64).round() as usize).min(s_quantity)
            }
        }
    } else {
        0
    };

    let mut out = source.clone();
    if replace_n > 0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for k in index::sample(&mut rng, s_quantity, replace_n) {
            let i = dark[k];
            let w = out.width();
            out.set_pixel(i % w, i / w, replacement_color);
        }
    }
    for v in out.data_mut() {
        *v = v.min(params.upper_thresh);
    }

    Ok((
        out,
        PreprocessReport {
            s_quantity,
            t_quantity,
            black_ratio,
            replaced_count: replace_n,
            replacement_color,
        },
    ))
}

pub type Cloud = Vec<[f64; 3]>;

pub fn image_to_cloud(img: &ImageBuffer) -> Cloud {
    img.pixels().map(|p| p.map(f64::from)).collect()
}

/// Haar-uniform rotation via a uniform unit quaternion (Shoemake); its rows
/// form the orthonormal basis.
fn random_basis<R: Rng + ?Sized>(rng: &mut R) -> [[f64; 3]; 3] {
    use std::f64::consts::TAU;
    let u1: f64 = rng.random();
    let u2: f64 = rng.random();
    let u3: f64 = rng.random();
    let (a, b) = ((1.0 - u1).sqrt(), u1.sqrt());
    let (x, y, z, w) = (
        a * (TAU * u2).sin(),
        a * (TAU * u2).cos(),
        b * (TAU * u3).sin(),
        b * (TAU * u3).cos(),
    );
    [
        [1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - z * w), 2.0 * (x * z + y * w)],
        [2.0 * (x * y + z * w), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - x * w)],
        [2.0 * (x * z - y * w), 2.0 * (y * z + x * w), 1.0 - 2.0 * (x * x + y * y)],
    ]
}

#[inline]
fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn sorted_projection(cloud: &[[f64; 3]], dir: &[f64; 3]) -> Vec<f64> {
    let mut p: Vec<f64> = cloud.iter().map(|c| dot(c, dir)).collect();
    radsort::sort(&mut p);
    p
}

/// Value at fractional rank `t ∈ [0, 1]` of a sorted sample.
fn quantile(sorted: &[f64], t: f64) -> f64 {
    let pos = t * (sorted.len() - 1) as f64;
    let i = pos.floor() as usize;
    let j = (i + 1).min(sorted.len() - 1);
    sorted[i] + (sorted[j] - sorted[i]) * (pos - i as f64)
}

/// Fractional rank of `v` within a sorted sample, linearly interpolated.
fn fractional_rank(sorted: &[f64], v: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return 0.5;
    }
    let k = sorted.partition_point(|&s| s < v);
    if k == 0 {
        return 0.0;
    }
    if k >= n {
        return 1.0;
    }
    let (lo, hi) = (sorted[k - 1], sorted[k]);
    let f = if hi > lo { (v - lo) / (hi - lo) } else { 0.0 };
    ((k - 1) as f64 + f) / (n - 1) as f64
}

/// Advects `target` toward `source` in place.
pub fn transfer_cloud(source: &[[f64; 3]], target: &mut [[f64; 3]], params: &SotParams, seed: u64) -> Result<()> {
    if source.len() != target.len() || source.is_empty() {
        return Err(invalid(format!(
            "point clouds must be non-empty and equal-sized, got {} and {}",
            source.len(),
            target.len()
        )));
    }
    params.check()?;
    let n = target.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let subsample = params.max_points > 0 && n > params.max_points;
    let (src_sub, tgt_sub_idx) = if subsample {
        let m = params.max_points;
        let s: Vec<[f64; 3]> = index::sample(&mut rng, n, m).into_iter().map(|i| source[i]).collect();
        let t: Vec<usize> = index::sample(&mut rng, n, m).into_vec();
        (s, t)
    } else {
        (Vec::new(), Vec::new())
    };

    // per-axis displacement along each basis vector, indexed by pixel
    let mut delta = [vec![0f64; n], vec![0f64; n], vec![0f64; n]];
    let mut keyed: Vec<(f64, u32)> = Vec::with_capacity(n);
    for _ in 0..params.iterations {
        let basis = random_basis(&mut rng);
        for (dir, out) in basis.iter().zip(delta.iter_mut()) {
            if subsample {
                let ss = sorted_projection(&src_sub, dir);
                let mut ts: Vec<f64> = tgt_sub_idx.iter().map(|&i| dot(&target[i], dir)).collect();
                radsort::sort(&mut ts);
                for (t, o) in target.iter().zip(out.iter_mut()) {
                    let p = dot(t, dir);
                    *o = quantile(&ss, fractional_rank(&ts, p)) - p;
                }
            } else {
                let ss = sorted_projection(source, dir);
                keyed.clear();
                keyed.extend(target.iter().enumerate().map(|(i, t)| (dot(t, dir), i as u32)));
                // stable radix sort: ties stay in index order
                radsort::sort_by_key(&mut keyed, |k| k.0);
                for (&(tp, i), &sp) in keyed.iter().zip(&ss) {
                    out[i as usize] = sp - tp;
                }
            }
        }
        for (i, t) in target.iter_mut().enumerate() {
            let d = [delta[0][i], delta[1][i], delta[2][i]];
            for c in 0..3 {
                t[c] += params.step_size * (d[0] * basis[0][c] + d[1] * basis[1][c] + d[2] * basis[2][c]);
            }
        }
    }
    Ok(())
}

/// Recolors `target` with the color distribution of `source`.
///
/// `source` is expected to be the output of [`preprocess_source`].
pub fn sot_color_transfer(
    source: &ImageBuffer,
    target: &ImageBuffer,
    params: &SotParams,
    seed: u64,
) -> Result<ImageBuffer> {
    ensure_same_dims("sot_color_transfer", source.dims(), target.dims())?;
    let src = image_to_cloud(source);
    let mut tgt = image_to_cloud(target);
    transfer_cloud(&src, &mut tgt, params, seed)?;
    let data = tgt
        .iter()
        .flat_map(|p| p.map(|v| v.clamp(0.0, 1.0) as f32))
        .collect();
    ImageBuffer::from_vec(target.width(), target.height(), data)
}

/// Seeded directions uniform on the unit sphere.
pub fn random_directions(n_dirs: usize, seed: u64) -> Vec<[f64; 3]> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n_dirs)
        .map(|_| {
            let z: f64 = rng.random_range(-1.0..=1.0);
            let phi: f64 = rng.random_range(0.0..std::f64::consts::TAU);
            let r = (1.0 - z * z).max(0.0).sqrt();
            [r * phi.cos(), r * phi.sin(), z]
        })
        .collect()
}

/// Mean over `dirs` of the mean absolute difference of sorted projections.
pub fn sliced_wasserstein_along(a: &[[f64; 3]], b: &[[f64; 3]], dirs: &[[f64; 3]]) -> Result<f64> {
    if a.len() != b.len() || a.is_empty() {
        return Err(invalid(format!(
            "point clouds must be non-empty and equal-sized, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    if dirs.is_empty() {
        return Err(invalid("need at least one direction"));
    }
    let total: f64 = dirs
        .iter()
        .map(|d| {
            let pa = sorted_projection(a, d);
            let pb = sorted_projection(b, d);
            pa.iter().zip(&pb).map(|(x, y)| (x - y).abs()).sum::<f64>() / a.len() as f64
        })
        .sum();
    Ok(total / dirs.len() as f64)
}

/// Sliced 1-Wasserstein distance over `n_dirs` seeded random directions.
pub fn sliced_wasserstein(a: &[[f64; 3]], b: &[[f64; 3]], n_dirs: usize, seed: u64) -> Result<f64> {
    if n_dirs == 0 {
        return Err(invalid("n_dirs must be >= 1"));
    }
    sliced_wasserstein_along(a, b, &random_directions(n_dirs, seed))
}
