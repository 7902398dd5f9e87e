//! Frame-to-frame tracking: localization on the confidence map, scale search
//! and filter learning with temporal blending.

mod scale;
mod score;

pub use self::scale::{scale_factors, ScaleEstimate, ScaleFilter, ScaleParams};
pub use self::score::{confidence_map, localize, Interpolant, Peak, ScoreGrid};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{FeatureProviderConfig, FeatureStack, FrameFeatures, Image, SearchRegion};
use crate::filter_core::{
    gaussian_label_with_sigma, learn, penalty_spectrum, project_sample, update_filter, KernelBank, LabelSpectrum,
    PenaltySpectrum, SampleMemory, SampleSpectrum, SpectralFilter,
};
use crate::geometry::BBox;
use crate::semantic_window::{apply_weighting, stack_masks, stack_windows, SemanticMask, WeightGrid};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrackerConfig {
    /// Filter and sample-weight learning rate.
    pub learning_rate: f64,
    pub cg_iterations: usize,
    /// Iterations for the first solve, which starts from zero.
    pub first_frame_cg_iterations: usize,
    pub sample_capacity: usize,
    /// Side of the square search region relative to `sqrt(w * h)`.
    pub search_area_scale: f64,
    pub label_sigma_factor: f64,
    pub penalty_bandwidth: usize,
    /// Largest HOG search patch, in pixels.
    pub max_patch_size: usize,
    /// Largest per-block grid when cropping precomputed maps.
    pub max_block_grid: usize,
    pub scale: ScaleParams,
    pub features: FeatureProviderConfig,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        TrackerConfig {
            learning_rate: 0.009,
            cg_iterations: 5,
            first_frame_cg_iterations: 100,
            sample_capacity: 50,
            search_area_scale: 5.0,
            label_sigma_factor: 0.083,
            penalty_bandwidth: 5,
            max_patch_size: 250,
            max_block_grid: 64,
            scale: ScaleParams::default(),
            features: FeatureProviderConfig::default(),
        }
    }
}

impl TrackerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.learning_rate) {
            return Err(Error::config(format!(
                "learning rate {} outside [0, 1]",
                self.learning_rate
            )));
        }
        if self.cg_iterations == 0 || self.first_frame_cg_iterations == 0 {
            return Err(Error::config("conjugate-gradient iteration counts must be positive"));
        }
        if self.sample_capacity == 0 {
            return Err(Error::config("sample capacity must be positive"));
        }
        if !(self.search_area_scale >= 1.0 && self.search_area_scale.is_finite()) {
            return Err(Error::config("search area scale must be at least 1"));
        }
        if !(self.label_sigma_factor > 0.0) {
            return Err(Error::config("label sigma factor must be positive"));
        }
        if self.penalty_bandwidth < 3 || self.penalty_bandwidth % 2 == 0 {
            return Err(Error::config("penalty bandwidth must be odd and at least 3"));
        }
        if self.max_patch_size < 8 || self.max_block_grid < 4 {
            return Err(Error::config("patch and grid limits are too small"));
        }
        self.scale.validate()?;
        self.features.validate()
    }
}

/// Result of one processed frame.
#[derive(Debug, Clone)]
pub struct StepOutput {
    /// 1-based frame number.
    pub frame: usize,
    pub bbox: BBox,
    /// Peak of the confidence map (absent on the first frame).
    pub score: Option<f64>,
    /// Objective of the newly learned filter over the sample memory.
    pub objective: f64,
    /// Normal-equation residual after learning.
    pub residual: f64,
    pub cg_iterations: usize,
    pub scale: f64,
    pub score_map: Option<ScoreGrid>,
    /// Semantic masks of the training sample, one per block.
    pub masks: Vec<SemanticMask>,
}

/// Full tracker state for one sequence.
#[derive(Debug, Clone)]
pub struct TrackState {
    cfg: TrackerConfig,
    center: (f64, f64),
    base_size: (f64, f64),
    scale: f64,
    scale_range: (f64, f64),
    base_side: f64,
    grids: Vec<(usize, usize)>,
    kernels: KernelBank,
    windows: Vec<WeightGrid>,
    label: LabelSpectrum,
    penalty: PenaltySpectrum,
    translation_filter: SpectralFilter,
    scale_filter: ScaleFilter,
    memory: SampleMemory,
    frame_index: usize,
}

fn round_up(v: f64, m: usize) -> usize {
    m * ((v / m as f64).ceil() as usize).max(1)
}

impl TrackState {
    /// Initializes on the first frame from a 0-based box.
    pub fn init(frame: &Image, bbox: BBox, cfg: &TrackerConfig) -> Result<(TrackState, StepOutput)> {
        TrackState::init_inner(frame, bbox, cfg).map_err(|e| Error::Tracking {
            frame: 1,
            source: Box::new(e),
        })
    }

    fn init_inner(frame: &Image, bbox: BBox, cfg: &TrackerConfig) -> Result<(TrackState, StepOutput)> {
        cfg.validate()?;
        let (fw, fh) = (frame.width() as f64, frame.height() as f64);
        // one pixel of slack absorbs 1-based rounding in annotation files
        if !bbox.is_valid()
            || bbox.area() < 4.0
            || bbox.x < -1.0
            || bbox.y < -1.0
            || bbox.x + bbox.w > fw + 1.0
            || bbox.y + bbox.h > fh + 1.0
        {
            return Err(Error::invalid(format!(
                "initial box {bbox:?} must lie inside the {fw}x{fh} frame with area >= 4"
            )));
        }
        let base_size = (bbox.w, bbox.h);
        let base_side = cfg.search_area_scale * (bbox.w * bbox.h).sqrt();
        let features = FrameFeatures::prepare(&cfg.features, frame, 1)?;
        let grids = match &cfg.features {
            FeatureProviderConfig::Hog { cell } => {
                let cell = *cell;
                let cap = cell * (cfg.max_patch_size / cell).max(1);
                let floor = round_up(8.0, cell).max(3 * cell);
                let out = round_up(base_side, cell).min(cap).max(floor);
                vec![(out / cell, out / cell)]
            }
            FeatureProviderConfig::Fmap { .. } => features
                .strides()
                .iter()
                .map(|&s| {
                    let g = (base_side / s as f64).round().clamp(4.0, cfg.max_block_grid as f64) as usize;
                    (g, g)
                })
                .collect(),
        };
        let center = bbox.center();
        let region = SearchRegion {
            center,
            side: base_side,
        };
        let stack = features.sample(&region, &grids)?;
        let kernels = KernelBank::for_stack(&stack)?;
        let windows = stack_windows(&stack)?;
        let (n1, n2) = kernels.grid();
        // target extent in common-grid cells: rows follow the height
        let q = (bbox.h / base_side * n1 as f64, bbox.w / base_side * n2 as f64);
        let label = gaussian_label_with_sigma((n1, n2), cfg.label_sigma_factor * (q.0 * q.1).sqrt())?;
        let penalty = penalty_spectrum(q.0, q.1, cfg.penalty_bandwidth, (n1, n2))?;

        let min_side = base_size.0.min(base_size.1);
        let max_ratio = (fw / base_size.0).min(fh / base_size.1).max(1.0);
        let step = cfg.scale.step;
        // keep candidate patches above one HOG cell and the target inside the frame
        let scale_range = (
            step.powf((((cfg.scale.cell + 1) as f64 / min_side).ln() / step.ln()).ceil())
                .min(1.0),
            step.powf((max_ratio.ln() / step.ln()).floor()).max(1.0),
        );

        let mut state = TrackState {
            cfg: cfg.clone(),
            center,
            base_size,
            scale: 1.0,
            scale_range,
            base_side,
            grids,
            kernels,
            windows,
            label,
            penalty,
            translation_filter: SpectralFilter::zeros(0, n1, n2),
            scale_filter: ScaleFilter::new(cfg.scale)?,
            memory: SampleMemory::new(cfg.sample_capacity)?,
            frame_index: 1,
        };
        let (sample, masks) = state.project(&stack)?;
        state.memory.update(sample, cfg.learning_rate)?;
        let outcome = learn(
            state.memory.samples(),
            state.memory.weights(),
            &state.label,
            &state.penalty,
            None,
            cfg.first_frame_cg_iterations,
        )?;
        state.translation_filter = outcome.filter;
        state.scale_filter.update(frame, center, base_size)?;
        let output = StepOutput {
            frame: 1,
            bbox: state.bbox(),
            score: None,
            objective: outcome.objective,
            residual: outcome.residual,
            cg_iterations: outcome.iterations,
            scale: state.scale,
            score_map: None,
            masks,
        };
        Ok((state, output))
    }

    fn project(&self, stack: &FeatureStack) -> Result<(SampleSpectrum, Vec<SemanticMask>)> {
        let masks = stack_masks(stack, self.cfg.features.semantic_block())?;
        let weighted = apply_weighting(stack, &masks, &self.windows)?;
        Ok((project_sample(&weighted, &self.kernels)?, masks))
    }

    fn region(&self) -> SearchRegion {
        SearchRegion {
            center: self.center,
            side: self.base_side * self.scale,
        }
    }

    /// Processes the next frame of the sequence.
    pub fn step(&mut self, frame: &Image) -> Result<StepOutput> {
        let number = self.frame_index + 1;
        self.step_inner(frame, number).map_err(|e| Error::Tracking {
            frame: number,
            source: Box::new(e),
        })
    }

    fn step_inner(&mut self, frame: &Image, number: usize) -> Result<StepOutput> {
        let features = FrameFeatures::prepare(&self.cfg.features, frame, number)?;

        // detection at the previous position and scale
        let region = self.region();
        let test = features.sample(&region, &self.grids)?;
        let (test_spectrum, _) = self.project(&test)?;
        let score = confidence_map(&self.translation_filter, &test_spectrum)?;
        let peak = localize(&score)?;
        let (n1, n2) = self.kernels.grid();
        let (fw, fh) = (frame.width() as f64, frame.height() as f64);
        self.center = (
            (self.center.0 + peak.dx * region.side / n2 as f64).clamp(0.0, fw),
            (self.center.1 + peak.dy * region.side / n1 as f64).clamp(0.0, fh),
        );

        let estimate = self.scale_filter.estimate(frame, self.center, self.target_size())?;
        self.scale = (self.scale * estimate.factor).clamp(self.scale_range.0, self.scale_range.1);

        // learning on the region at the new estimate
        let train = features.sample(&self.region(), &self.grids)?;
        let (sample, masks) = self.project(&train)?;
        let gamma = self.cfg.learning_rate;
        self.memory.update(sample, gamma)?;
        let outcome = learn(
            self.memory.samples(),
            self.memory.weights(),
            &self.label,
            &self.penalty,
            Some(&self.translation_filter),
            self.cfg.cg_iterations,
        )?;
        self.translation_filter = update_filter(&self.translation_filter, &outcome.filter, gamma)?;
        self.scale_filter.update(frame, self.center, self.target_size())?;
        self.frame_index = number;

        Ok(StepOutput {
            frame: number,
            bbox: self.bbox(),
            score: Some(peak.value),
            objective: outcome.objective,
            residual: outcome.residual,
            cg_iterations: outcome.iterations,
            scale: self.scale,
            score_map: Some(score),
            masks,
        })
    }

    fn target_size(&self) -> (f64, f64) {
        (self.base_size.0 * self.scale, self.base_size.1 * self.scale)
    }

    pub fn bbox(&self) -> BBox {
        let (w, h) = self.target_size();
        BBox::from_center(self.center.0, self.center.1, w, h)
    }

    pub fn center(&self) -> (f64, f64) {
        self.center
    }

    pub fn base_size(&self) -> (f64, f64) {
        self.base_size
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn frame_index(&self) -> usize {
        self.frame_index
    }

    pub fn config(&self) -> &TrackerConfig {
        &self.cfg
    }

    pub fn translation_filter(&self) -> &SpectralFilter {
        &self.translation_filter
    }

    pub fn scale_filter(&self) -> &ScaleFilter {
        &self.scale_filter
    }

    pub fn memory(&self) -> &SampleMemory {
        &self.memory
    }

    /// Common-grid resolution of the translation filter.
    pub fn grid(&self) -> (usize, usize) {
        self.kernels.grid()
    }
}
