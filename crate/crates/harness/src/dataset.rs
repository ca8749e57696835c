//! Dataset directories.
//!
//! ```text
//! DIR/manifest.json
//! DIR/problems/<id>.json     RAVEN problems
//! DIR/images/<id>.pgm        optional RAVEN sheets
//! DIR/tasks/<id>.json        ARC tasks
//! ```
//!
//! The manifest stores the generation recipe and master seed next to the
//! entry list, so a dataset can be regenerated and compared byte for byte.
//! RAVEN recipes enumerate a global index `g` in `offset..offset + count`;
//! item `g` uses spec `g % specs.len()`, instance `g / specs.len()` and seed
//! `suite_seed(master, spec, instance)`.

use std::fs;
use std::path::{Path, PathBuf};

use conceptprobe_core::arc::concepts::{family_suite, FamilyId};
use conceptprobe_core::arc::{parse_task, write_task, ArcTask};
use conceptprobe_core::raven::generator::suite_seed;
use conceptprobe_core::raven::io::{read_problem, write_problem};
use conceptprobe_core::raven::render::render_problem;
use conceptprobe_core::raven::{sample_problem, ConceptSpec, Problem};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::HarnessError;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const MANIFEST_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Domain {
    Raven,
    Arc,
}

impl Domain {
    pub fn name(self) -> &'static str {
        match self {
            Domain::Raven => "raven",
            Domain::Arc => "arc",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
    Probe,
}

impl Split {
    pub const ALL: [Split; 4] = [Split::Train, Split::Val, Split::Test, Split::Probe];

    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
            Split::Probe => "probe",
        }
    }

    pub fn from_name(name: &str) -> Option<Split> {
        Split::ALL.into_iter().find(|s| s.name() == name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Recipe {
    Raven {
        specs: Vec<ConceptSpec>,
        offset: usize,
        count: usize,
        /// Sheet side in pixels when PGM renders are part of the dataset.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        image_side: Option<u32>,
    },
    Arc {
        plan: Vec<(FamilyId, usize)>,
    },
}

impl Recipe {
    pub fn domain(&self) -> Domain {
        match self {
            Recipe::Raven { .. } => Domain::Raven,
            Recipe::Arc { .. } => Domain::Arc,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: String,
    pub path: String,
    pub concept_tags: Vec<String>,
    pub sha256: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image_sha256: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub version: u32,
    pub domain: Domain,
    pub split: Split,
    pub master_seed: u64,
    pub recipe: Recipe,
    pub entries: Vec<ManifestEntry>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Item {
    Raven(Problem),
    Arc(ArcTask),
}

impl Item {
    pub fn id(&self) -> &str {
        match self {
            Item::Raven(p) => &p.id,
            Item::Arc(t) => &t.id,
        }
    }

    /// Slice names: family then full tag for RAVEN, group then family for ARC.
    pub fn concept_tags(&self) -> Vec<String> {
        match self {
            Item::Raven(p) => p.tags(),
            Item::Arc(t) => match t.concept_tag.as_deref() {
                Some(tag) => match FamilyId::from_name(tag) {
                    Some(f) => vec![f.group().to_string(), tag.to_string()],
                    None => vec![tag.to_string()],
                },
                None => Vec::new(),
            },
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        match self {
            Item::Raven(p) => write_problem(p).into_bytes(),
            Item::Arc(t) => {
                let mut s = write_task(t);
                s.push('\n');
                s.into_bytes()
            }
        }
    }

    fn relative_path(&self) -> String {
        match self {
            Item::Raven(p) => format!("problems/{}.json", p.id),
            Item::Arc(t) => format!("tasks/{}.json", t.id),
        }
    }
}

/// A dataset in memory: the manifest plus its items and rendered images.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub manifest: DatasetManifest,
    pub items: Vec<Item>,
    pub images: Vec<Option<Vec<u8>>>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// RAVEN problems for global indices `offset..offset + count`.
pub fn raven_problems(
    specs: &[ConceptSpec],
    offset: usize,
    count: usize,
    master: u64,
) -> Result<Vec<Problem>, HarnessError> {
    if specs.is_empty() {
        return Err(HarnessError::ConfigInvalid("no concept specs".into()));
    }
    let problems = (offset..offset + count)
        .into_par_iter()
        .map(|g| {
            let (s, inst) = (g % specs.len(), g / specs.len());
            sample_problem(&specs[s], suite_seed(master, s, inst))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(problems)
}

/// Generates the items described by `recipe`.
pub fn materialize(split: Split, master_seed: u64, recipe: Recipe) -> Result<Dataset, HarnessError> {
    let (items, images): (Vec<Item>, Vec<Option<Vec<u8>>>) = match &recipe {
        Recipe::Raven { specs, offset, count, image_side } => {
            let problems = raven_problems(specs, *offset, *count, master_seed)?;
            let images = problems
                .par_iter()
                .map(|p| match image_side {
                    Some(side) => render_problem(p, *side).map(|b| Some(b.to_pgm())),
                    None => Ok(None),
                })
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| HarnessError::ConfigInvalid(e.to_string()))?;
            (problems.into_iter().map(Item::Raven).collect(), images)
        }
        Recipe::Arc { plan } => {
            let tasks = family_suite(plan, master_seed)?;
            let n = tasks.len();
            (tasks.into_iter().map(Item::Arc).collect(), vec![None; n])
        }
    };
    let entries = items
        .iter()
        .zip(&images)
        .enumerate()
        .map(|(i, (item, image))| ManifestEntry {
            id: item.id().to_string(),
            path: item.relative_path(),
            concept_tags: item.concept_tags(),
            sha256: sha256_hex(&item.to_bytes()),
            // Numbered, not named by id: image-mode solvers see this path.
            image: image.as_ref().map(|_| format!("images/{i:06}.pgm")),
            image_sha256: image.as_deref().map(sha256_hex),
        })
        .collect();
    let manifest = DatasetManifest {
        version: MANIFEST_VERSION,
        domain: recipe.domain(),
        split,
        master_seed,
        recipe,
        entries,
    };
    Ok(Dataset { manifest, items, images })
}

fn io_err(path: &Path, e: std::io::Error) -> HarnessError {
    HarnessError::Io { path: path.display().to_string(), message: e.to_string() }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), HarnessError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| io_err(parent, e))?;
    }
    fs::write(path, bytes).map_err(|e| io_err(path, e))
}

pub fn manifest_json(manifest: &DatasetManifest) -> String {
    let mut s = serde_json::to_string_pretty(manifest).expect("manifest serializes");
    s.push('\n');
    s
}

pub fn write_dataset(dir: &Path, dataset: &Dataset) -> Result<(), HarnessError> {
    for ((item, image), entry) in dataset.items.iter().zip(&dataset.images).zip(&dataset.manifest.entries) {
        write_file(&dir.join(&entry.path), &item.to_bytes())?;
        if let (Some(bytes), Some(path)) = (image, &entry.image) {
            write_file(&dir.join(path), bytes)?;
        }
    }
    write_file(&dir.join(MANIFEST_FILE), manifest_json(&dataset.manifest).as_bytes())
}

pub fn read_manifest(dir: &Path) -> Result<DatasetManifest, HarnessError> {
    let path = dir.join(MANIFEST_FILE);
    let text = fs::read_to_string(&path).map_err(|e| io_err(&path, e))?;
    let manifest: DatasetManifest = serde_json::from_str(&text)
        .map_err(|e| HarnessError::Manifest { path: path.display().to_string(), message: e.to_string() })?;
    if manifest.version != MANIFEST_VERSION {
        return Err(HarnessError::Manifest {
            path: path.display().to_string(),
            message: format!("unsupported manifest version {}", manifest.version),
        });
    }
    if manifest.domain != manifest.recipe.domain() {
        return Err(HarnessError::Manifest {
            path: path.display().to_string(),
            message: "domain differs from recipe".into(),
        });
    }
    Ok(manifest)
}

fn parse_item(domain: Domain, path: &Path, text: &str) -> Result<Item, HarnessError> {
    let bad = |message: String| HarnessError::Manifest { path: path.display().to_string(), message };
    match domain {
        Domain::Raven => read_problem(text).map(Item::Raven).map_err(|e| bad(e.to_string())),
        Domain::Arc => parse_task(text).map(Item::Arc).map_err(|e| bad(e.to_string())),
    }
}

/// Reads a dataset directory; every entry must exist, parse and match its
/// recorded id and hash.
pub fn load_dataset(dir: &Path) -> Result<Dataset, HarnessError> {
    let manifest = read_manifest(dir)?;
    let mut items = Vec::with_capacity(manifest.entries.len());
    let mut images = Vec::with_capacity(manifest.entries.len());
    for entry in &manifest.entries {
        let path = dir.join(&entry.path);
        let text = fs::read_to_string(&path).map_err(|e| io_err(&path, e))?;
        if sha256_hex(text.as_bytes()) != entry.sha256 {
            return Err(HarnessError::Manifest { path: path.display().to_string(), message: "hash mismatch".into() });
        }
        let item = parse_item(manifest.domain, &path, &text)?;
        if item.id() != entry.id {
            return Err(HarnessError::Manifest {
                path: path.display().to_string(),
                message: format!("id {} differs from manifest id {}", item.id(), entry.id),
            });
        }
        items.push(item);
        images.push(match &entry.image {
            Some(p) => {
                let path = dir.join(p);
                let bytes = fs::read(&path).map_err(|e| io_err(&path, e))?;
                if entry.image_sha256.as_deref() != Some(sha256_hex(&bytes).as_str()) {
                    return Err(HarnessError::Manifest {
                        path: path.display().to_string(),
                        message: "image hash mismatch".into(),
                    });
                }
                Some(bytes)
            }
            None => None,
        });
    }
    Ok(Dataset { manifest, items, images })
}

/// Files whose bytes differ from a fresh regeneration of the manifest
/// recipe (empty when the dataset reproduces exactly).
pub fn verify_dataset(dir: &Path) -> Result<Vec<PathBuf>, HarnessError> {
    let manifest = read_manifest(dir)?;
    let fresh = materialize(manifest.split, manifest.master_seed, manifest.recipe.clone())?;
    let mut differing = Vec::new();
    if fresh.manifest != manifest {
        differing.push(dir.join(MANIFEST_FILE));
    }
    for ((item, image), entry) in fresh.items.iter().zip(&fresh.images).zip(&fresh.manifest.entries) {
        let path = dir.join(&entry.path);
        if fs::read(&path).ok().as_deref() != Some(item.to_bytes().as_slice()) {
            differing.push(path);
        }
        if let (Some(bytes), Some(p)) = (image, &entry.image) {
            let path = dir.join(p);
            if fs::read(&path).ok().as_deref() != Some(bytes.as_slice()) {
                differing.push(path);
            }
        }
    }
    Ok(differing)
}
