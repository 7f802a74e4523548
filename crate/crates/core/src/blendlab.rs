//! Class-blend traces and per-layer blend experiments.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::backend::{ModelBackend, Prediction};
use crate::digest::sha256_hex;
use crate::imaging::RgbImage;
use crate::latent::{layer_schedule, BlendWeight, ConditioningSchedule, LayerRange, Seed};
use crate::workbench::Workbench;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct BlendStep {
    pub w: BlendWeight,
    /// Generator output (before magnification matching).
    pub image: RgbImage,
    pub digest: String,
    pub prediction: Prediction,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlendTrace {
    pub seed: Seed,
    pub steps: Vec<BlendStep>,
}

impl BlendTrace {
    /// Second-class evidence along the trace, in `w` order.
    pub fn evidence(&self) -> Vec<f64> {
        self.steps.iter().map(|s| s.prediction.second_class_evidence()).collect()
    }
}

/// `n_steps` equally spaced weights from 0 to 1 inclusive. The endpoints are
/// exactly 0 and 1.
pub fn blend_weights(n_steps: usize) -> Result<Vec<BlendWeight>> {
    if n_steps < 2 {
        return Err(Error::invalid(format!("blend needs at least 2 steps, got {n_steps}")));
    }
    let last = (n_steps - 1) as f64;
    (0..n_steps).map(|i| BlendWeight::new(i as f64 / last)).collect()
}

pub fn blend_sequence<B: ModelBackend>(bench: &Workbench<B>, seed: Seed, n_steps: usize) -> Result<BlendTrace> {
    let steps = blend_weights(n_steps)?
        .into_iter()
        .map(|w| {
            let schedule = bench.blend_schedule(w)?;
            let r = bench.render(seed, &schedule)?;
            let digest = sha256_hex(r.synthetic.image.as_bytes());
            Ok(BlendStep { w, image: r.synthetic.image, digest, prediction: r.prediction })
        })
        .collect::<Result<Vec<_>>>()
        .map_err(|e| e.with_seed(seed.0))?;
    Ok(BlendTrace { seed, steps })
}

/// Which class embedding a layer range receives.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ClassAssignment {
    pub range: LayerRange,
    pub class: usize,
}

impl ClassAssignment {
    pub fn new(first: usize, last: usize, class: usize) -> Self {
        Self { range: LayerRange::new(first, last), class }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerBlendCell {
    pub label: String,
    pub seed: Seed,
    pub assignments: Vec<ClassAssignment>,
    /// Class index per layer, derived from `assignments`.
    pub layer_classes: Vec<usize>,
    pub image: RgbImage,
    pub prediction: Prediction,
}

fn schedule_for<B: ModelBackend>(bench: &Workbench<B>, assignments: &[ClassAssignment]) -> Result<ConditioningSchedule> {
    let ranges = assignments
        .iter()
        .map(|a| Ok((a.range, bench.class_vector(a.class)?.to_vec())))
        .collect::<Result<Vec<_>>>()?;
    layer_schedule(&ranges, bench.layers())
}

pub fn layer_blend<B: ModelBackend>(
    bench: &Workbench<B>,
    seed: Seed,
    assignments: &[ClassAssignment],
    label: impl Into<String>,
) -> Result<LayerBlendCell> {
    let schedule = schedule_for(bench, assignments)?;
    let layer_classes = (1..=bench.layers())
        .map(|l| assignments.iter().find(|a| a.range.contains(l)).map(|a| a.class).unwrap_or(0))
        .collect();
    let r = bench.render(seed, &schedule).map_err(|e| e.with_seed(seed.0))?;
    Ok(LayerBlendCell {
        label: label.into(),
        seed,
        assignments: assignments.to_vec(),
        layer_classes,
        image: r.synthetic.image,
        prediction: r.prediction,
    })
}

/// The six layer-blend presets over 12 layers: B1 all first class, B2-B4
/// second class at layers 4-6, 7-9, 10-12, B5 second class at 4-12, B6
/// all second class.
pub fn fig3_presets() -> [(&'static str, Vec<ClassAssignment>); 6] {
    use alloc::vec;
    let a = |f, l| ClassAssignment::new(f, l, 0);
    let b = |f, l| ClassAssignment::new(f, l, 1);
    [
        ("B1", vec![a(1, 12)]),
        ("B2", vec![a(1, 3), b(4, 6), a(7, 12)]),
        ("B3", vec![a(1, 6), b(7, 9), a(10, 12)]),
        ("B4", vec![a(1, 9), b(10, 12)]),
        ("B5", vec![a(1, 3), b(4, 12)]),
        ("B6", vec![b(1, 12)]),
    ]
}

pub fn fig3_grid<B: ModelBackend>(bench: &Workbench<B>, seed: Seed) -> Result<Vec<LayerBlendCell>> {
    if bench.layers() != 12 {
        return Err(Error::invalid(format!(
            "layer-blend grid needs 12 layers, backend has {}",
            bench.layers()
        )));
    }
    fig3_presets().into_iter().map(|(label, assignments)| layer_blend(bench, seed, &assignments, label)).collect()
}
