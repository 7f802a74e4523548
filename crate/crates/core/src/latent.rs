//! Seeds, class embeddings, blending and per-layer conditioning schedules.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::rng::SplitMix64;
use crate::{Error, Result};

pub const DEFAULT_Z_DIM: usize = 64;
pub const DEFAULT_E_DIM: usize = 16;
pub const DEFAULT_LAYERS: usize = 12;

/// Integer seed fixing the generator noise input.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize), serde(transparent))]
pub struct Seed(pub u64);

impl From<u64> for Seed {
    fn from(v: u64) -> Self {
        Seed(v)
    }
}

impl core::fmt::Display for Seed {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LatentVector(Vec<f64>);

impl LatentVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Expands a seed into `z_dim` standard-normal components.
pub fn seed_to_latent(seed: Seed, z_dim: usize) -> Result<LatentVector> {
    if z_dim == 0 {
        return Err(Error::invalid("z_dim must be at least 1"));
    }
    let mut rng = SplitMix64::new(seed.0);
    Ok(LatentVector((0..z_dim).map(|_| rng.next_normal()).collect()))
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ClassEmbedding {
    #[cfg_attr(feature = "serde", serde(rename = "id"))]
    pub class_id: u32,
    pub name: String,
    pub vector: Vec<f64>,
}

impl ClassEmbedding {
    pub fn new(class_id: u32, name: impl Into<String>, vector: Vec<f64>) -> Self {
        Self { class_id, name: name.into(), vector }
    }

    pub fn dim(&self) -> usize {
        self.vector.len()
    }
}

/// A validated set of class embeddings sharing one dimensionality.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSet {
    e_dim: usize,
    classes: Vec<ClassEmbedding>,
}

impl EmbeddingSet {
    pub fn new(e_dim: usize, classes: Vec<ClassEmbedding>) -> Result<Self> {
        if e_dim == 0 {
            return Err(Error::invalid("e_dim must be at least 1"));
        }
        for (i, c) in classes.iter().enumerate() {
            if c.dim() != e_dim {
                return Err(Error::invalid(format!(
                    "class {} ({}) has dimension {}, expected {e_dim}",
                    c.class_id,
                    c.name,
                    c.dim()
                )));
            }
            if c.vector.iter().any(|v| !v.is_finite()) {
                return Err(Error::invalid(format!("class {} has non-finite components", c.class_id)));
            }
            if classes[..i].iter().any(|o| o.class_id == c.class_id) {
                return Err(Error::invalid(format!("duplicate class id {}", c.class_id)));
            }
        }
        Ok(Self { e_dim, classes })
    }

    /// The two axis-aligned unit embeddings used by the toy backend.
    pub fn toy(e_dim: usize, names: [&str; 2]) -> Result<Self> {
        if e_dim < 2 {
            return Err(Error::invalid("toy embeddings need e_dim >= 2"));
        }
        let unit = |axis: usize| {
            let mut v = vec![0.0; e_dim];
            v[axis] = 1.0;
            v
        };
        Self::new(
            e_dim,
            vec![ClassEmbedding::new(0, names[0], unit(0)), ClassEmbedding::new(1, names[1], unit(1))],
        )
    }

    pub fn e_dim(&self) -> usize {
        self.e_dim
    }

    pub fn classes(&self) -> &[ClassEmbedding] {
        &self.classes
    }

    pub fn get(&self, index: usize) -> Option<&ClassEmbedding> {
        self.classes.get(index)
    }

    /// The first two classes, in file order.
    pub fn pair(&self) -> Result<(&ClassEmbedding, &ClassEmbedding)> {
        match self.classes.as_slice() {
            [a, b, ..] => Ok((a, b)),
            _ => Err(Error::invalid("need at least two class embeddings")),
        }
    }
}

/// Interpolation weight: 0 selects the first class, 1 the second.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
#[cfg_attr(feature = "serde", derive(serde::Serialize), serde(transparent))]
pub struct BlendWeight(f64);

impl BlendWeight {
    pub const FIRST: BlendWeight = BlendWeight(0.0);
    pub const SECOND: BlendWeight = BlendWeight(1.0);

    pub fn new(w: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&w) {
            Ok(Self(w))
        } else {
            Err(Error::invalid(format!("blend weight {w} outside [0, 1]")))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

/// `(1 - w) * a + w * b`, componentwise. Endpoints are returned exactly.
pub fn blend_embeddings(a: &ClassEmbedding, b: &ClassEmbedding, w: BlendWeight) -> Result<Vec<f64>> {
    blend_vectors(&a.vector, &b.vector, w)
}

pub fn blend_vectors(a: &[f64], b: &[f64], w: BlendWeight) -> Result<Vec<f64>> {
    if a.len() != b.len() {
        return Err(Error::invalid(format!(
            "embedding dimensions differ: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    let w = w.get();
    if w == 0.0 {
        return Ok(a.to_vec());
    }
    if w == 1.0 {
        return Ok(b.to_vec());
    }
    Ok(a.iter().zip(b).map(|(x, y)| (1.0 - w) * x + w * y).collect())
}

/// Per-layer conditioning vectors, one entry per generator layer.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditioningSchedule {
    layers: Vec<Vec<f64>>,
}

impl ConditioningSchedule {
    pub fn from_layers(layers: Vec<Vec<f64>>) -> Result<Self> {
        let Some(first) = layers.first() else {
            return Err(Error::invalid("schedule needs at least one layer"));
        };
        let e_dim = first.len();
        if e_dim == 0 {
            return Err(Error::invalid("schedule vectors must be non-empty"));
        }
        for (i, l) in layers.iter().enumerate() {
            if l.len() != e_dim {
                return Err(Error::invalid(format!(
                    "layer {} has dimension {}, expected {e_dim}",
                    i + 1,
                    l.len()
                )));
            }
            if l.iter().any(|v| !v.is_finite()) {
                return Err(Error::invalid(format!("layer {} has non-finite components", i + 1)));
            }
        }
        Ok(Self { layers })
    }

    pub fn layers(&self) -> &[Vec<f64>] {
        &self.layers
    }

    pub fn len(&self) -> usize {
        self.layers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.layers.is_empty()
    }

    pub fn e_dim(&self) -> usize {
        self.layers[0].len()
    }

    /// Bytes that identify this schedule: little-endian f64s, layer-major.
    pub fn canonical_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.len() * self.e_dim() * 8 + 8);
        out.extend_from_slice(&(self.len() as u32).to_le_bytes());
        out.extend_from_slice(&(self.e_dim() as u32).to_le_bytes());
        for l in &self.layers {
            for v in l {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }
}

/// The same vector at every one of `layers` layers.
pub fn uniform_schedule(vector: &[f64], layers: usize) -> Result<ConditioningSchedule> {
    if layers == 0 {
        return Err(Error::invalid("layer count must be at least 1"));
    }
    ConditioningSchedule::from_layers(vec![vector.to_vec(); layers])
}

/// Inclusive, 1-based range of generator layers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LayerRange {
    pub first: usize,
    pub last: usize,
}

impl LayerRange {
    pub fn new(first: usize, last: usize) -> Self {
        Self { first, last }
    }

    pub fn contains(&self, layer: usize) -> bool {
        (self.first..=self.last).contains(&layer)
    }
}

impl core::fmt::Display for LayerRange {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "{}..{}", self.first, self.last)
    }
}

/// Builds a schedule from disjoint layer ranges that jointly cover `1..=layers`.
pub fn layer_schedule(assignments: &[(LayerRange, Vec<f64>)], layers: usize) -> Result<ConditioningSchedule> {
    if layers == 0 {
        return Err(Error::invalid("layer count must be at least 1"));
    }
    let mut owner: Vec<Option<usize>> = vec![None; layers];
    for (idx, (range, _)) in assignments.iter().enumerate() {
        if range.first == 0 || range.first > range.last || range.last > layers {
            return Err(Error::invalid(format!("layer range {range} is not within 1..{layers}")));
        }
        for slot in &mut owner[range.first - 1..range.last] {
            if let Some(prev) = slot {
                return Err(Error::invalid(format!(
                    "layer range {range} overlaps {}",
                    assignments[*prev].0
                )));
            }
            *slot = Some(idx);
        }
    }
    let mut out = Vec::with_capacity(layers);
    for (i, slot) in owner.iter().enumerate() {
        match slot {
            Some(idx) => out.push(assignments[*idx].1.clone()),
            None => return Err(Error::invalid(format!("layer {} is not covered by any range", i + 1))),
        }
    }
    ConditioningSchedule::from_layers(out)
}
