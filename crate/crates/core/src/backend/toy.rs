//! Deterministic closed-form backend.
//!
//! Each layer's class coordinate is `c = v[1] - v[0]`, so the axis-0 unit
//! embedding gives -1 (class A) and the axis-1 unit embedding +1 (class B).
//! Layers split into coarse, mid and fine thirds. Coarse layers rotate the
//! stripe texture, mid layers scale its frequency, fine layers tint it red
//! (towards B) or blue (towards A). The toy classifier reads only the tint,
//! so early-layer swaps change the picture but not the prediction.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::f64::consts::{PI, TAU};

use super::{BackendDescriptor, BackendKind, Head, ModelBackend, Prediction, Provenance, SyntheticImage};
use crate::digest::sha256_hex;
use crate::imaging::{RgbImage, TileSpec};
use crate::latent::{seed_to_latent, ConditioningSchedule, EmbeddingSet, Seed};
use crate::{Error, Result};

const TINT: f64 = 0.08;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize), serde(default))]
pub struct ToyConfig {
    pub generator_spec: TileSpec,
    pub classifier_spec: TileSpec,
    /// Logistic slope of the categorical head.
    pub slope: f64,
    pub head: Head,
    pub z_dim: usize,
    pub e_dim: usize,
    pub layers: usize,
    pub classes: [String; 2],
}

impl Default for ToyConfig {
    fn default() -> Self {
        Self {
            generator_spec: TileSpec { um: 400.0, px: 256 },
            classifier_spec: TileSpec { um: 302.0, px: 299 },
            slope: 6.0,
            head: Head::Categorical,
            z_dim: crate::latent::DEFAULT_Z_DIM,
            e_dim: crate::latent::DEFAULT_E_DIM,
            layers: crate::latent::DEFAULT_LAYERS,
            classes: ["A".to_string(), "B".to_string()],
        }
    }
}

#[derive(Debug, Clone)]
pub struct ToyBackend {
    config: ToyConfig,
    id: String,
}

impl ToyBackend {
    pub fn new(config: ToyConfig) -> Result<Self> {
        config.generator_spec.validate()?;
        config.classifier_spec.validate()?;
        if !(config.slope.is_finite() && config.slope > 0.0) {
            return Err(Error::invalid("toy slope must be positive"));
        }
        if config.z_dim < 8 {
            return Err(Error::invalid("toy backend needs z_dim >= 8 for its phases"));
        }
        if config.e_dim < 2 {
            return Err(Error::invalid("toy backend needs e_dim >= 2"));
        }
        if config.layers < 3 {
            return Err(Error::invalid("toy backend needs at least 3 layers"));
        }
        let id = alloc::format!(
            "toy-k{}-{}{}",
            config.slope,
            config.generator_spec.px,
            match config.head {
                Head::Categorical => "",
                Head::Continuous => "-brs",
            }
        );
        Ok(Self { config, id })
    }

    pub fn with_slope(slope: f64) -> Result<Self> {
        Self::new(ToyConfig { slope, ..ToyConfig::default() })
    }

    pub fn config(&self) -> &ToyConfig {
        &self.config
    }

    /// Axis-aligned embeddings matching this backend's class coordinate.
    pub fn embeddings(&self) -> EmbeddingSet {
        let [a, b] = &self.config.classes;
        EmbeddingSet::toy(self.config.e_dim, [a.as_str(), b.as_str()]).expect("validated e_dim")
    }

    /// Coarse, mid and fine class coordinates of a schedule.
    fn group_coordinates(&self, schedule: &ConditioningSchedule) -> (f64, f64, f64) {
        let c: Vec<f64> = schedule.layers().iter().map(|v| v[1] - v[0]).collect();
        let n = c.len();
        let (coarse, rest) = c.split_at(n / 3);
        let (mid, fine) = rest.split_at(2 * n / 3 - n / 3);
        let mean = |s: &[f64]| s.iter().sum::<f64>() / s.len() as f64;
        // Fine tint moves only when every fine layer agrees on B.
        let fine_min = fine.iter().copied().fold(f64::INFINITY, f64::min);
        (mean(coarse), mean(mid), fine_min)
    }
}

impl ModelBackend for ToyBackend {
    fn describe(&self) -> BackendDescriptor {
        BackendDescriptor {
            id: self.id.clone(),
            kind: BackendKind::Toy,
            layers: self.config.layers,
            e_dim: self.config.e_dim,
            z_dim: self.config.z_dim,
            generator_spec: self.config.generator_spec,
            classifier_spec: self.config.classifier_spec,
            classes: self.config.classes.to_vec(),
        }
    }

    fn generate(&self, seed: Seed, schedule: &ConditioningSchedule) -> Result<SyntheticImage> {
        self.describe().check_schedule(schedule)?;
        let (c_coarse, c_mid, c_fine) = self.group_coordinates(schedule);
        let z = seed_to_latent(seed, self.config.z_dim)?;
        let z = z.as_slice();
        let phases: [f64; 4] = core::array::from_fn(|k| libm::atan2(z[2 * k + 1], z[2 * k]));

        let theta = PI / 4.0 + c_coarse * PI / 12.0;
        let m = libm::exp2(0.5 * c_mid);
        let (sin_t, cos_t) = libm::sincos(theta);
        let freqs: [f64; 4] = core::array::from_fn(|k| TAU * (2u32 << k) as f64 * m);

        let px = self.config.generator_spec.px;
        let inv = 1.0 / px as f64;
        let quantize = |x: f64| libm::round(255.0 * x.clamp(0.0, 1.0)) as u8;
        let image = RgbImage::from_fn(px, px, |x, y| {
            let u = (x as f64 + 0.5) * inv;
            let v = (y as f64 + 0.5) * inv;
            let s = u * cos_t + v * sin_t;
            let g = 0.5 + 0.125 * (0..4).map(|k| libm::sin(freqs[k] * s + phases[k])).sum::<f64>();
            [quantize(g * (1.0 + TINT * c_fine)), quantize(g), quantize(g * (1.0 - TINT * c_fine))]
        });
        let provenance = Provenance {
            seed,
            schedule_digest: sha256_hex(&schedule.canonical_bytes()),
            backend_id: self.id.clone(),
        };
        SyntheticImage::new(image, provenance, self.config.generator_spec)
    }

    fn classify(&self, image: &RgbImage) -> Result<Prediction> {
        if image.is_empty() {
            return Err(Error::invalid("cannot classify an empty image"));
        }
        let want = self.config.classifier_spec.px;
        if image.width() != want || image.height() != want {
            return Err(Error::invalid(alloc::format!(
                "classifier expects {want}x{want}, got {}x{}",
                image.width(),
                image.height()
            )));
        }
        let (mut rb, mut g) = (0.0f64, 0.0f64);
        for [r, gg, b] in image.pixels() {
            rb += r as f64 - b as f64;
            g += gg as f64;
        }
        if g == 0.0 {
            return Err(Error::DegenerateInput("mean green channel is zero".into()));
        }
        let tau = rb / (2.0 * TINT * g);
        match self.config.head {
            Head::Categorical => {
                let p_b = 1.0 / (1.0 + libm::exp(-self.config.slope * tau));
                Prediction::categorical(alloc::vec![1.0 - p_b, p_b])
            }
            Head::Continuous => Prediction::continuous(tau.clamp(-1.0, 1.0)),
        }
    }
}
