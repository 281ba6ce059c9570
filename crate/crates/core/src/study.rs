//! Blinded study construction.
//!
//! A study pairs each source image with a deformed counterpart, groups the
//! pairs into sigma bands, hides everything behind random item ids and
//! shuffles the presentation order. Every random choice comes from streams
//! derived from one master seed:
//!
//! * the band sigma of each modified item, drawn in item order from
//!   `SplitMix64(derive_seed(master, SIGMA_STREAM))`;
//! * the study id and the 128-bit item ids, from the id stream;
//! * the display order, a Fisher–Yates shuffle on the order stream;
//! * the deformation seed of item `i`, `derive_seed(master, i)`.

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::raster::{encode_png, load_image, write_atomic, RasterError};
use crate::rng::{derive_seed, SplitMix64};
use crate::warp::{deform, BorderPolicy};
use crate::DeformError;

const SIGMA_STREAM: u64 = u64::MAX;
const ID_STREAM: u64 = u64::MAX - 1;
const ORDER_STREAM: u64 = u64::MAX - 2;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const IMAGE_DIR: &str = "images";

#[derive(Debug, Error)]
pub enum StudyError {
    #[error("invalid category: {0}")]
    InvalidCategory(String),
    #[error("pool has {available} images but the design needs {needed}")]
    InsufficientPool { needed: usize, available: usize },
    #[error(transparent)]
    Raster(#[from] RasterError),
    #[error("deforming {source_ref}: {error}")]
    Deform { source_ref: String, error: DeformError },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("manifest encoding: {0}")]
    Encoding(#[from] serde_json::Error),
    #[error("invalid manifest: {0}")]
    InvalidManifest(String),
    #[error("unknown item `{0}`")]
    UnknownItem(String),
}

/// One sigma band of the study design.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategorySpec {
    pub name: String,
    pub sigma_min: f64,
    pub sigma_max: f64,
    pub pair_count: usize,
}

impl CategorySpec {
    pub fn new(name: &str, sigma_min: f64, sigma_max: f64, pair_count: usize) -> Result<Self, StudyError> {
        let spec = Self {
            name: name.to_string(),
            sigma_min,
            sigma_max,
            pair_count,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), StudyError> {
        let bad = |why: &str| Err(StudyError::InvalidCategory(format!("{}: {why}", self.name)));
        if self.name.is_empty() {
            return bad("empty name");
        }
        if !(self.sigma_min.is_finite() && self.sigma_max.is_finite()) {
            return bad("sigma bounds must be finite");
        }
        if !(0.0 < self.sigma_min && self.sigma_min <= self.sigma_max) {
            return bad("need 0 < sigma_min <= sigma_max");
        }
        if self.pair_count == 0 {
            return bad("pair_count must be at least 1");
        }
        Ok(())
    }

    pub fn contains(&self, sigma: f64) -> bool {
        (self.sigma_min..=self.sigma_max).contains(&sigma)
    }
}

/// `NAME:MIN:MAX:PAIRS`, e.g. `LDA:1:6:100`.
impl FromStr for CategorySpec {
    type Err = StudyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').collect();
        let [name, lo, hi, n] = parts[..] else {
            return Err(StudyError::InvalidCategory(format!("`{s}` is not NAME:MIN:MAX:PAIRS")));
        };
        let num = |v: &str| {
            v.parse::<f64>()
                .map_err(|_| StudyError::InvalidCategory(format!("`{v}` is not a number in `{s}`")))
        };
        let pairs = n
            .parse::<usize>()
            .map_err(|_| StudyError::InvalidCategory(format!("`{n}` is not a pair count in `{s}`")))?;
        CategorySpec::new(name, num(lo)?, num(hi)?, pairs)
    }
}

/// Low, medium and high bands with 100 pairs each plus a 20-pair extreme
/// control band: 640 images.
pub fn standard_design() -> Vec<CategorySpec> {
    vec![
        spec("LDA", 1.0, 6.0, 100),
        spec("MDA", 7.0, 12.0, 100),
        spec("HDA", 13.0, 18.0, 100),
        spec("CTRL", 19.0, 24.0, 20),
    ]
}

/// The medium band split in two, 100 pairs each.
pub fn refined_design() -> Vec<CategorySpec> {
    vec![spec("S7-9", 7.0, 9.0, 100), spec("S10-11", 10.0, 11.0, 100)]
}

fn spec(name: &str, lo: f64, hi: f64, n: usize) -> CategorySpec {
    CategorySpec {
        name: name.into(),
        sigma_min: lo,
        sigma_max: hi,
        pair_count: n,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GroundTruth {
    Original,
    Modified,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyItem {
    pub item_id: String,
    pub category: String,
    pub ground_truth: GroundTruth,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_used: Option<f64>,
    pub source_ref: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyManifest {
    pub study_id: String,
    pub categories: Vec<CategorySpec>,
    pub items: Vec<StudyItem>,
    /// `display_order[position]` is an index into `items`.
    pub display_order: Vec<usize>,
    pub master_seed: u64,
}

impl StudyManifest {
    pub fn item_count(&self) -> usize {
        self.items.len()
    }

    /// The item shown at display position `position`.
    pub fn displayed(&self, position: usize) -> Option<&StudyItem> {
        self.display_order.get(position).map(|&i| &self.items[i])
    }

    pub fn category(&self, name: &str) -> Option<&CategorySpec> {
        self.categories.iter().find(|c| c.name == name)
    }

    /// Admin-side unblinding of one item.
    pub fn reveal(&self, item_id: &str) -> Result<(GroundTruth, Option<f64>), StudyError> {
        self.items
            .iter()
            .find(|it| it.item_id == item_id)
            .map(|it| (it.ground_truth, it.sigma_used))
            .ok_or_else(|| StudyError::UnknownItem(item_id.to_string()))
    }

    pub fn image_path(&self, study_dir: &Path, item: &StudyItem) -> PathBuf {
        study_dir.join(IMAGE_DIR).join(format!("{}.png", item.item_id))
    }

    pub fn to_json(&self) -> Result<String, StudyError> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self, StudyError> {
        let manifest: Self = serde_json::from_str(text)?;
        manifest.validate()?;
        Ok(manifest)
    }

    pub fn load(path: &Path) -> Result<Self, StudyError> {
        let text = fs::read_to_string(path).map_err(|source| StudyError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text)
    }

    /// Loads `<dir>/manifest.json`.
    pub fn load_dir(dir: &Path) -> Result<Self, StudyError> {
        Self::load(&dir.join(MANIFEST_FILE))
    }

    pub fn save(&self, path: &Path) -> Result<(), StudyError> {
        write_atomic(path, self.to_json()?.as_bytes())?;
        Ok(())
    }

    /// Checks the structural invariants: per-category counts, sigma ranges,
    /// unique ids and a permutation display order.
    pub fn validate(&self) -> Result<(), StudyError> {
        let bad = |m: String| Err(StudyError::InvalidManifest(m));
        let mut names = HashSet::new();
        for c in &self.categories {
            c.validate()?;
            if !names.insert(c.name.as_str()) {
                return bad(format!("duplicate category {}", c.name));
            }
        }
        for c in &self.categories {
            let of = |gt| {
                self.items
                    .iter()
                    .filter(|it| it.category == c.name && it.ground_truth == gt)
                    .count()
            };
            if of(GroundTruth::Original) != c.pair_count || of(GroundTruth::Modified) != c.pair_count {
                return bad(format!("category {} does not hold {} pairs", c.name, c.pair_count));
            }
        }
        let mut ids = HashSet::new();
        for it in &self.items {
            let Some(cat) = self.category(&it.category) else {
                return bad(format!("item {} has unknown category {}", it.item_id, it.category));
            };
            match (it.ground_truth, it.sigma_used) {
                (GroundTruth::Original, None) => {}
                (GroundTruth::Modified, Some(s)) if cat.contains(s) => {}
                _ => return bad(format!("item {} has an inconsistent sigma", it.item_id)),
            }
            if !ids.insert(it.item_id.as_str()) {
                return bad(format!("duplicate item id {}", it.item_id));
            }
        }
        let mut seen = vec![false; self.items.len()];
        if self.display_order.len() != self.items.len() {
            return bad("display_order length differs from item count".into());
        }
        for &i in &self.display_order {
            if i >= seen.len() || std::mem::replace(&mut seen[i], true) {
                return bad("display_order is not a permutation".into());
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BuildOptions {
    pub grid: (usize, usize),
    pub border: BorderPolicy,
}

impl Default for BuildOptions {
    fn default() -> Self {
        Self {
            grid: (crate::grid::DEFAULT_GRID_ROWS, crate::grid::DEFAULT_GRID_COLS),
            border: BorderPolicy::Clamp,
        }
    }
}

struct PairPlan<'a> {
    source: &'a Path,
    original: usize,
    modified: usize,
    sigma: f64,
}

fn opaque_id(rng: &mut SplitMix64) -> String {
    format!("{:016x}{:016x}", rng.next_u64(), rng.next_u64())
}

/// Builds a study under `out_dir`: `manifest.json` plus
/// `images/<item_id>.png` for every item.
///
/// Pool images are consumed in order, one per pair. The result depends only
/// on the pool order and contents, `specs` and `master_seed`.
pub fn build_study(
    pool: &[PathBuf],
    specs: &[CategorySpec],
    master_seed: u64,
    out_dir: &Path,
    options: &BuildOptions,
) -> Result<StudyManifest, StudyError> {
    let mut names = HashSet::new();
    for s in specs {
        s.validate()?;
        if !names.insert(s.name.as_str()) {
            return Err(StudyError::InvalidCategory(format!("duplicate name {}", s.name)));
        }
    }
    if specs.is_empty() {
        return Err(StudyError::InvalidCategory("no categories".into()));
    }
    let needed: usize = specs.iter().map(|s| s.pair_count).sum();
    if pool.len() < needed {
        return Err(StudyError::InsufficientPool {
            needed,
            available: pool.len(),
        });
    }

    let mut sigma_rng = SplitMix64::new(derive_seed(master_seed, SIGMA_STREAM));
    let mut id_rng = SplitMix64::new(derive_seed(master_seed, ID_STREAM));
    let mut order_rng = SplitMix64::new(derive_seed(master_seed, ORDER_STREAM));

    let study_id = format!("{:016x}", id_rng.next_u64());
    let mut items = Vec::with_capacity(2 * needed);
    let mut plans = Vec::with_capacity(needed);
    let mut ids = HashSet::new();
    let mut fresh_id = |rng: &mut SplitMix64| loop {
        let id = opaque_id(rng);
        if ids.insert(id.clone()) {
            return id;
        }
    };
    let mut sources = pool.iter();
    for spec in specs {
        for _ in 0..spec.pair_count {
            let source = sources.next().expect("pool size checked above");
            let sigma = sigma_rng.uniform(spec.sigma_min, spec.sigma_max);
            let source_ref = source.display().to_string();
            plans.push(PairPlan {
                source,
                original: items.len(),
                modified: items.len() + 1,
                sigma,
            });
            items.push(StudyItem {
                item_id: fresh_id(&mut id_rng),
                category: spec.name.clone(),
                ground_truth: GroundTruth::Original,
                sigma_used: None,
                source_ref: source_ref.clone(),
            });
            items.push(StudyItem {
                item_id: fresh_id(&mut id_rng),
                category: spec.name.clone(),
                ground_truth: GroundTruth::Modified,
                sigma_used: Some(sigma),
                source_ref,
            });
        }
    }
    let mut display_order: Vec<usize> = (0..items.len()).collect();
    order_rng.shuffle(&mut display_order);

    let image_dir = out_dir.join(IMAGE_DIR);
    fs::create_dir_all(&image_dir).map_err(|source| StudyError::Io {
        path: image_dir.clone(),
        source,
    })?;

    plans.par_iter().try_for_each(|plan| -> Result<(), StudyError> {
        let source = load_image(plan.source)?;
        let seed = derive_seed(master_seed, plan.modified as u64);
        let deformed = deform(&source, plan.sigma, seed, options.grid, options.border).map_err(|error| {
            StudyError::Deform {
                source_ref: plan.source.display().to_string(),
                error,
            }
        })?;
        for (index, image) in [(plan.original, &source), (plan.modified, &deformed.image)] {
            let path = image_dir.join(format!("{}.png", items[index].item_id));
            write_atomic(&path, &encode_png(image))?;
        }
        Ok(())
    })?;

    let manifest = StudyManifest {
        study_id,
        categories: specs.to_vec(),
        items,
        display_order,
        master_seed,
    };
    manifest.validate()?;
    manifest.save(&out_dir.join(MANIFEST_FILE))?;
    Ok(manifest)
}

/// Deformation seed of the item at manifest index `index`.
pub fn item_seed(master_seed: u64, index: usize) -> u64 {
    derive_seed(master_seed, index as u64)
}
