//! Acoustic material database, semantic material assignment and
//! scattering-coefficient sampling.
//!
//! Assignment compares the embedding of an object's label with the
//! embedding of every material name. Non-negative cosine similarities are
//! used as sampling weights, so near-synonyms (different thicknesses or
//! finishes of the same material) all stay in play instead of always
//! picking the single best match.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::{derive_seed, stream};
use crate::scene::TriangleMesh;

/// Octave band centers (Hz) for absorption and scattering spectra.
pub const OCTAVE_BANDS: [f64; 8] = [63.0, 125.0, 250.0, 500.0, 1000.0, 2000.0, 4000.0, 8000.0];
pub const NUM_BANDS: usize = 8;
pub const DEFAULT_EMBEDDING_DIM: usize = 512;

/// Bands handled by the wave solver (63 Hz to 1 kHz).
const WAVE_BANDS: usize = 5;
/// Bands whose scattering is capped (63 Hz to 250 Hz).
const LOW_SCATTER_BANDS: usize = 3;
const LOW_SCATTER_CAP: f64 = 0.05;

const ABSORPTION_COLUMNS: [&str; 8] = ["a63", "a125", "a250", "a500", "a1000", "a2000", "a4000", "a8000"];
const SCATTERING_COLUMNS: [&str; 8] = ["s63", "s125", "s250", "s500", "s1000", "s2000", "s4000", "s8000"];

pub type Spectrum = [f64; NUM_BANDS];

#[derive(Debug, Error)]
pub enum MaterialError {
    #[error("cannot read {path}: {msg}")]
    Io { path: String, msg: String },
    #[error("missing column {0}")]
    MissingColumn(String),
    #[error("row {row}, column {column}: {msg}")]
    BadValue { row: usize, column: String, msg: String },
    #[error("material database is empty")]
    EmptyDatabase,
    #[error("material list is empty")]
    NoMaterials,
    #[error("invalid embedding table: {0}")]
    BadEmbeddings(String),
    #[error("invalid material record: {0}")]
    InvalidRecord(String),
}

pub type Result<T> = std::result::Result<T, MaterialError>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaterialRecord {
    pub name: String,
    pub absorption: Spectrum,
    pub scattering: Option<Spectrum>,
}

impl MaterialRecord {
    pub fn new(name: impl Into<String>, absorption: Spectrum, scattering: Option<Spectrum>) -> Result<Self> {
        let rec = Self {
            name: name.into(),
            absorption,
            scattering,
        };
        if rec.name.trim().is_empty() {
            return Err(MaterialError::InvalidRecord("empty name".into()));
        }
        let in_range = |s: &Spectrum| s.iter().all(|v| (0.0..=1.0).contains(v));
        if !in_range(&rec.absorption) || !rec.scattering.as_ref().map_or(true, in_range) {
            return Err(MaterialError::InvalidRecord(format!(
                "{}: coefficients must lie in [0, 1]",
                rec.name
            )));
        }
        Ok(rec)
    }

    /// Frequency-independent boundary admittance for the wave solver.
    pub fn admittance(&self) -> f64 {
        admittance_from_absorption(&self.absorption)
    }
}

/// Locally reacting admittance from the mean absorption over 63 Hz..1 kHz:
/// `R = sqrt(1 - a)`, `xi = (1 + R) / (1 - R)`, admittance `1 / xi`.
pub fn admittance_from_absorption(absorption: &Spectrum) -> f64 {
    let mean = absorption[..WAVE_BANDS].iter().sum::<f64>() / WAVE_BANDS as f64;
    let a = mean.clamp(0.001, 0.999);
    let r = (1.0 - a).sqrt();
    (1.0 - r) / (1.0 + r)
}

/// Loads `name,a63..a8000[,s63..s8000]`. Row numbers in errors are file
/// line numbers (the header is line 1).
pub fn load_material_db(path: impl AsRef<Path>) -> Result<Vec<MaterialRecord>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| MaterialError::Io {
        path: path.display().to_string(),
        msg: e.to_string(),
    })?;
    parse_material_db(&text)
}

pub fn parse_material_db(text: &str) -> Result<Vec<MaterialRecord>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = rdr
        .headers()
        .map_err(|e| MaterialError::Io {
            path: "<csv>".into(),
            msg: e.to_string(),
        })?
        .clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let name_col = col("name").ok_or_else(|| MaterialError::MissingColumn("name".into()))?;
    let abs_cols = ABSORPTION_COLUMNS
        .iter()
        .map(|c| col(c).ok_or_else(|| MaterialError::MissingColumn(c.to_string())))
        .collect::<Result<Vec<_>>>()?;
    let sca_cols: Vec<Option<usize>> = SCATTERING_COLUMNS.iter().map(|c| col(c)).collect();
    let has_scattering = sca_cols.iter().any(Option::is_some);
    if has_scattering {
        if let Some(i) = sca_cols.iter().position(Option::is_none) {
            return Err(MaterialError::MissingColumn(SCATTERING_COLUMNS[i].into()));
        }
    }

    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 2;
        let rec = rec.map_err(|e| MaterialError::BadValue {
            row,
            column: "-".into(),
            msg: e.to_string(),
        })?;
        let field = |c: usize, name: &str| -> Result<f64> {
            let raw = rec.get(c).unwrap_or("");
            let v: f64 = raw.parse().map_err(|_| MaterialError::BadValue {
                row,
                column: name.into(),
                msg: format!("'{raw}' is not a number"),
            })?;
            if !(0.0..=1.0).contains(&v) {
                return Err(MaterialError::BadValue {
                    row,
                    column: name.into(),
                    msg: format!("{v} outside [0, 1]"),
                });
            }
            Ok(v)
        };
        let mut absorption = [0.0; NUM_BANDS];
        for (b, &c) in abs_cols.iter().enumerate() {
            absorption[b] = field(c, ABSORPTION_COLUMNS[b])?;
        }
        let scattering = if has_scattering {
            let mut s = [0.0; NUM_BANDS];
            for (b, c) in sca_cols.iter().enumerate() {
                s[b] = field(c.unwrap_or_default(), SCATTERING_COLUMNS[b])?;
            }
            Some(s)
        } else {
            None
        };
        let name = rec.get(name_col).unwrap_or("").to_string();
        if name.is_empty() {
            return Err(MaterialError::BadValue {
                row,
                column: "name".into(),
                msg: "empty name".into(),
            });
        }
        out.push(MaterialRecord {
            name,
            absorption,
            scattering,
        });
    }
    if out.is_empty() {
        return Err(MaterialError::EmptyDatabase);
    }
    Ok(out)
}

/// Name -> embedding vector, all of one dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingTable {
    pub dimension: usize,
    pub entries: BTreeMap<String, Vec<f64>>,
}

impl EmbeddingTable {
    pub fn validate(&self) -> Result<()> {
        if self.dimension == 0 {
            return Err(MaterialError::BadEmbeddings("dimension must be positive".into()));
        }
        for (name, v) in &self.entries {
            if v.len() != self.dimension {
                return Err(MaterialError::BadEmbeddings(format!(
                    "'{name}' has {} components, expected {}",
                    v.len(),
                    self.dimension
                )));
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(MaterialError::BadEmbeddings(format!("'{name}' has non-finite components")));
            }
        }
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| MaterialError::Io {
            path: path.display().to_string(),
            msg: e.to_string(),
        })?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let t: EmbeddingTable =
            serde_json::from_str(text).map_err(|e| MaterialError::BadEmbeddings(e.to_string()))?;
        t.validate()?;
        Ok(t)
    }

    pub fn get(&self, name: &str) -> Option<&[f64]> {
        self.entries.get(name).map(Vec::as_slice)
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325u64, |h, &b| {
        (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

/// Deterministic character-trigram embedding used when no embedding file is
/// supplied: lowercase, collapse whitespace, pad with one space on each
/// side, hash every trigram into one of 512 buckets, L2-normalize.
pub fn fallback_embed(text: &str) -> Vec<f64> {
    let mut v = vec![0.0; DEFAULT_EMBEDDING_DIM];
    let norm: Vec<&str> = text.split_whitespace().collect();
    if norm.is_empty() {
        return v;
    }
    let padded: Vec<char> = format!(" {} ", norm.join(" ").to_lowercase()).chars().collect();
    let mut buf = String::new();
    for w in padded.windows(3) {
        buf.clear();
        buf.extend(w);
        let bucket = (fnv1a(buf.as_bytes()) % DEFAULT_EMBEDDING_DIM as u64) as usize;
        v[bucket] += 1.0;
    }
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter_mut().for_each(|x| *x /= n);
    v
}

/// Cosine similarity; zero when either vector is zero.
pub fn cosine_similarity(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    (dot / (na * nb)).clamp(-1.0, 1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssignmentDistribution {
    pub weights: Vec<f64>,
    pub probabilities: Vec<f64>,
    pub chosen: Option<usize>,
}

impl AssignmentDistribution {
    /// Normalizes weights into probabilities; all-zero weights fall back to
    /// the uniform distribution.
    pub fn from_weights(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(MaterialError::NoMaterials);
        }
        let total: f64 = weights.iter().sum();
        let probabilities = if total > 0.0 {
            weights.iter().map(|w| w / total).collect()
        } else {
            vec![1.0 / weights.len() as f64; weights.len()]
        };
        Ok(Self {
            weights,
            probabilities,
            chosen: None,
        })
    }
}

/// Sampling distribution over `materials` for an object label.
///
/// Uses the supplied table when it covers the label and every material
/// name; otherwise every vector (label included) comes from
/// [`fallback_embed`] so all compared vectors share one space.
pub fn assignment_distribution(
    label: &str,
    materials: &[MaterialRecord],
    embeddings: Option<&EmbeddingTable>,
) -> Result<AssignmentDistribution> {
    if materials.is_empty() {
        return Err(MaterialError::NoMaterials);
    }
    let covered = embeddings.filter(|t| {
        t.get(label).is_some() && materials.iter().all(|m| t.get(&m.name).is_some())
    });
    let weights = match covered {
        Some(t) => {
            let e0 = t.get(label).unwrap_or_default();
            materials
                .iter()
                .map(|m| cosine_similarity(e0, t.get(&m.name).unwrap_or_default()).max(0.0))
                .collect()
        }
        None => {
            let e0 = fallback_embed(label);
            materials
                .iter()
                .map(|m| cosine_similarity(&e0, &fallback_embed(&m.name)).max(0.0))
                .collect()
        }
    };
    AssignmentDistribution::from_weights(weights)
}

/// Inverse-CDF draw with a seeded generator.
pub fn sample_assignment(dist: &AssignmentDistribution, seed: u64) -> usize {
    let u: f64 = stream(seed, 0).random();
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (i, &p) in dist.probabilities.iter().enumerate() {
        if p <= 0.0 {
            continue;
        }
        last_positive = i;
        acc += p;
        if u < acc {
            return i;
        }
    }
    // rounding left u above the final cumulative sum
    last_positive
}

/// Per-band normal prior over scattering coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatteringPrior {
    pub mean: Spectrum,
    pub std: Spectrum,
}

impl Default for ScatteringPrior {
    fn default() -> Self {
        Self {
            mean: [0.3; NUM_BANDS],
            std: [0.15; NUM_BANDS],
        }
    }
}

impl ScatteringPrior {
    pub fn validate(&self) -> Result<()> {
        if self.std.iter().any(|s| !(*s >= 0.0)) || self.mean.iter().any(|m| !m.is_finite()) {
            return Err(MaterialError::InvalidRecord(
                "scattering prior needs finite means and std >= 0".into(),
            ));
        }
        Ok(())
    }
}

/// One scattering spectrum drawn from `prior`, clamped to `[0, 1]`, with
/// the 63-250 Hz bands additionally capped at 0.05.
pub fn sample_scattering(prior: &ScatteringPrior, seed: u64) -> Spectrum {
    let mut rng = stream(seed, 1);
    let mut out = [0.0; NUM_BANDS];
    for b in 0..NUM_BANDS {
        let v = if prior.std[b] > 0.0 {
            Normal::new(prior.mean[b], prior.std[b])
                .map(|n| n.sample(&mut rng))
                .unwrap_or(prior.mean[b])
        } else {
            prior.mean[b]
        };
        let cap = if b < LOW_SCATTER_BANDS { LOW_SCATTER_CAP } else { 1.0 };
        out[b] = v.clamp(0.0, 1.0).min(cap);
    }
    out
}

/// Absorption and scattering for one surface.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Surface {
    pub absorption: Spectrum,
    pub scattering: Spectrum,
}

impl Surface {
    pub fn uniform(absorption: f64, scattering: f64) -> Self {
        Self {
            absorption: [absorption; NUM_BANDS],
            scattering: [scattering; NUM_BANDS],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelAssignment {
    pub label: String,
    pub material: String,
    pub material_index: usize,
    pub seed: u64,
    pub scattering: Spectrum,
}

/// Result of assigning database materials to every semantic label of a mesh.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MeshMaterials {
    pub assignments: Vec<LabelAssignment>,
    /// Index into `assignments` per triangle.
    pub triangle_assignment: Vec<usize>,
}

impl MeshMaterials {
    pub fn surfaces(&self, db: &[MaterialRecord]) -> Vec<Surface> {
        self.triangle_assignment
            .iter()
            .map(|&a| {
                let asg = &self.assignments[a];
                Surface {
                    absorption: db[asg.material_index].absorption,
                    scattering: asg.scattering,
                }
            })
            .collect()
    }

    pub fn triangle_admittance(&self, db: &[MaterialRecord]) -> Vec<f64> {
        let per_assignment: Vec<f64> = self
            .assignments
            .iter()
            .map(|a| db[a.material_index].admittance())
            .collect();
        self.triangle_assignment
            .iter()
            .map(|&a| per_assignment[a])
            .collect()
    }
}

/// Semantic label for a triangle: its `usemtl` name, or its group label when
/// the material slot is unnamed.
pub fn semantic_label(mesh: &TriangleMesh, tri: usize) -> &str {
    let m = mesh.material_of(tri);
    if m == "default" {
        mesh.label_of(tri)
    } else {
        m
    }
}

/// Runs the seeded assignment for every distinct semantic label of `mesh`.
/// Scattering comes from the database when present, otherwise from `prior`.
pub fn assign_mesh_materials(
    mesh: &TriangleMesh,
    db: &[MaterialRecord],
    embeddings: Option<&EmbeddingTable>,
    prior: &ScatteringPrior,
    seed: u64,
) -> Result<MeshMaterials> {
    if db.is_empty() {
        return Err(MaterialError::NoMaterials);
    }
    let mut index: BTreeMap<String, usize> = BTreeMap::new();
    let mut labels: Vec<String> = Vec::new();
    let triangle_assignment = (0..mesh.len())
        .map(|t| {
            let l = semantic_label(mesh, t);
            *index.entry(l.to_string()).or_insert_with(|| {
                labels.push(l.to_string());
                labels.len() - 1
            })
        })
        .collect();
    let assignments = labels
        .into_iter()
        .enumerate()
        .map(|(i, label)| {
            let label_seed = derive_seed(seed, i as u64);
            let mut dist = assignment_distribution(&label, db, embeddings)?;
            let choice = sample_assignment(&dist, label_seed);
            dist.chosen = Some(choice);
            let rec = &db[choice];
            let scattering = rec
                .scattering
                .unwrap_or_else(|| sample_scattering(prior, label_seed));
            Ok(LabelAssignment {
                label,
                material: rec.name.clone(),
                material_index: choice,
                seed: label_seed,
                scattering,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MeshMaterials {
        assignments,
        triangle_assignment,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str = "name,a63,a125,a250,a500,a1000,a2000,a4000,a8000\n";

    #[test]
    fn loads_two_rows() {
        let csv = format!(
            "{HEADER}brick,0.01,0.01,0.02,0.02,0.03,0.04,0.05,0.05\ncarpet,0.02,0.05,0.1,0.3,0.5,0.6,0.65,0.7\n"
        );
        let db = parse_material_db(&csv).unwrap();
        assert_eq!(db.len(), 2);
        assert_eq!(db[1].name, "carpet");
        assert_eq!(db[1].absorption[4], 0.5);
        assert!(db[0].scattering.is_none());
    }

    #[test]
    fn out_of_range_names_row_and_column() {
        let csv = format!(
            "{HEADER}brick,0.01,0.01,0.02,0.02,0.03,0.04,0.05,0.05\nbad,0.1,0.1,0.1,1.2,0.1,0.1,0.1,0.1\n"
        );
        match parse_material_db(&csv) {
            Err(MaterialError::BadValue { row, column, .. }) => {
                assert_eq!(row, 3);
                assert_eq!(column, "a500");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn header_only_is_empty_error() {
        assert!(matches!(parse_material_db(HEADER), Err(MaterialError::EmptyDatabase)));
    }

    #[test]
    fn missing_column() {
        let csv = "name,a63,a125\nx,0.1,0.1\n";
        assert!(matches!(parse_material_db(csv), Err(MaterialError::MissingColumn(c)) if c == "a250"));
    }

    #[test]
    fn scattering_columns_are_read() {
        let csv = "name,a63,a125,a250,a500,a1000,a2000,a4000,a8000,s63,s125,s250,s500,s1000,s2000,s4000,s8000\n\
                   wood,0.1,0.1,0.1,0.1,0.1,0.1,0.1,0.1,0.01,0.02,0.03,0.1,0.2,0.3,0.4,0.5\n";
        let db = parse_material_db(csv).unwrap();
        assert_eq!(db[0].scattering.unwrap()[7], 0.5);
    }

    #[test]
    fn fallback_embedding_basics() {
        let a = fallback_embed("wood");
        assert_eq!(a, fallback_embed("wood"));
        assert!((cosine_similarity(&a, &a) - 1.0).abs() < 1e-12);
        assert!(fallback_embed("").iter().all(|&x| x == 0.0));
        assert!(fallback_embed("   ").iter().all(|&x| x == 0.0));
        assert_eq!(fallback_embed("Wood  Floor"), fallback_embed("wood floor"));
        let n: f64 = a.iter().map(|x| x * x).sum();
        assert!((n - 1.0).abs() < 1e-12);
    }

    fn mats(names: &[&str]) -> Vec<MaterialRecord> {
        names
            .iter()
            .map(|n| MaterialRecord::new(*n, [0.1; 8], None).unwrap())
            .collect()
    }

    fn table(entries: &[(&str, Vec<f64>)]) -> EmbeddingTable {
        EmbeddingTable {
            dimension: entries[0].1.len(),
            entries: entries.iter().map(|(k, v)| (k.to_string(), v.clone())).collect(),
        }
    }

    #[test]
    fn single_material_gets_all_mass() {
        let d = assignment_distribution("anything", &mats(&["glass"]), None).unwrap();
        assert_eq!(d.probabilities, vec![1.0]);
    }

    #[test]
    fn orthogonal_label_falls_back_to_uniform() {
        let t = table(&[
            ("label", vec![0.0, 0.0, 1.0]),
            ("a", vec![1.0, 0.0, 0.0]),
            ("b", vec![0.0, 1.0, 0.0]),
            ("c", vec![-1.0, 0.0, 0.0]),
        ]);
        let d = assignment_distribution("label", &mats(&["a", "b", "c"]), Some(&t)).unwrap();
        assert_eq!(d.weights, vec![0.0, 0.0, 0.0]);
        for p in d.probabilities {
            assert!((p - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn empty_material_list_errors() {
        assert!(matches!(
            assignment_distribution("x", &[], None),
            Err(MaterialError::NoMaterials)
        ));
    }

    #[test]
    fn degenerate_distribution_always_picks_first() {
        let d = AssignmentDistribution::from_weights(vec![1.0, 0.0, 0.0]).unwrap();
        for seed in 0..200 {
            assert_eq!(sample_assignment(&d, seed), 0);
        }
    }

    #[test]
    fn zero_probability_never_drawn() {
        let d = AssignmentDistribution::from_weights(vec![0.9, 0.3, 0.0]).unwrap();
        assert!((0..5000).all(|s| sample_assignment(&d, s) != 2));
        assert_eq!(sample_assignment(&d, 42), sample_assignment(&d, 42));
    }

    #[test]
    fn scattering_sampling() {
        let exact = ScatteringPrior {
            mean: [0.02, 0.03, 0.04, 0.2, 0.3, 0.4, 0.5, 1.3],
            std: [0.0; 8],
        };
        let s = sample_scattering(&exact, 9);
        assert_eq!(s, [0.02, 0.03, 0.04, 0.2, 0.3, 0.4, 0.5, 1.0]);

        let wide = ScatteringPrior {
            mean: [0.5; 8],
            std: [10.0; 8],
        };
        let low = ScatteringPrior {
            mean: [0.2; 8],
            std: [0.05; 8],
        };
        for seed in 0..2000 {
            assert!(sample_scattering(&wide, seed).iter().all(|v| (0.0..=1.0).contains(v)));
            assert!(sample_scattering(&low, seed)[0] <= 0.05);
        }
        assert_eq!(sample_scattering(&wide, 5), sample_scattering(&wide, 5));
    }

    #[test]
    fn admittance_formula() {
        // a = 0.75 -> R = 0.5 -> xi = 3
        let y = admittance_from_absorption(&[0.75; 8]);
        assert!((y - 1.0 / 3.0).abs() < 1e-12);
        // clamped ends stay finite
        assert!(admittance_from_absorption(&[0.0; 8]) > 0.0);
        assert!(admittance_from_absorption(&[1.0; 8]).is_finite());
        // only the 63 Hz..1 kHz bands matter
        let mut a = [0.75; 8];
        a[5] = 0.0;
        a[7] = 1.0;
        assert!((admittance_from_absorption(&a) - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn embedding_table_validation() {
        let bad = r#"{"dimension": 3, "entries": {"a": [1, 2]}}"#;
        assert!(EmbeddingTable::from_json(bad).is_err());
        let ok = r#"{"dimension": 2, "entries": {"a": [1, 2], "b": [0.5, -1]}}"#;
        assert_eq!(EmbeddingTable::from_json(ok).unwrap().entries.len(), 2);
    }

    #[test]
    fn mesh_assignment_is_seeded() {
        use crate::geom::Vec3;
        let mut b = TriangleMesh::builder();
        b.add_box(Vec3::ZERO, Vec3::splat(3.0), "default", "wall");
        b.add_box(Vec3::splat(1.0), Vec3::splat(1.5), "wood", "table");
        let mesh = b.build().unwrap();
        let db = mats(&["brick wall", "wooden panel", "glass window"]);
        let a = assign_mesh_materials(&mesh, &db, None, &ScatteringPrior::default(), 7).unwrap();
        let b2 = assign_mesh_materials(&mesh, &db, None, &ScatteringPrior::default(), 7).unwrap();
        assert_eq!(a.assignments, b2.assignments);
        assert_eq!(a.assignments.len(), 2);
        assert_eq!(a.assignments[0].label, "wall");
        assert_eq!(a.assignments[1].label, "wood");
        assert_eq!(a.triangle_assignment.len(), 24);
        assert_eq!(a.surfaces(&db).len(), 24);
    }
}
