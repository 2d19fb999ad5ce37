use serde::{Deserialize, Serialize};

use crate::coverage::patch_centers;
use crate::error::{Error, Result};
use crate::pattern::SampledPattern;

pub const DEFAULT_PATCHES: usize = 32;
/// Sub-samples per patch side when averaging a rectangle mask.
const MASK_SUBSAMPLES: usize = 8;

/// Closed axis-aligned rectangle in field-of-view coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Rect {
    pub fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Result<Self> {
        let r = Self { x0, x1, y0, y1 };
        if ![x0, x1, y0, y1].iter().all(|v| v.is_finite()) || x0 > x1 || y0 > y1 {
            return Err(crate::error::domain(format!("bad rectangle {r:?}")));
        }
        Ok(r)
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.x0 && x <= self.x1 && y >= self.y0 && y <= self.y1
    }

    pub fn translated(&self, dx: f64, dy: f64) -> Self {
        Self {
            x0: self.x0 + dx,
            x1: self.x1 + dx,
            y0: self.y0 + dy,
            y1: self.y1 + dy,
        }
    }

    pub fn area(&self) -> f64 {
        (self.x1 - self.x0) * (self.y1 - self.y0)
    }

    pub fn intersection_over_union(&self, other: &Rect) -> f64 {
        let w = (self.x1.min(other.x1) - self.x0.max(other.x0)).max(0.0);
        let h = (self.y1.min(other.y1) - self.y0.max(other.y0)).max(0.0);
        let inter = w * h;
        inter / (self.area() + other.area() - inter)
    }
}

/// Left-of-center region used in tests and examples.
pub const ROI_A: Rect = Rect {
    x0: -0.9,
    x1: -0.3,
    y0: -0.3,
    y1: 0.3,
};
/// Upper-right region used in tests and examples.
pub const ROI_B: Rect = Rect {
    x0: 0.2,
    x1: 0.9,
    y0: 0.2,
    y1: 0.8,
};

/// Samples inside the union of the rectangles.
pub fn roi_density(pattern: &SampledPattern, rois: &[Rect]) -> usize {
    pattern
        .points()
        .filter(|&(x, y)| rois.iter().any(|r| r.contains(x, y)))
        .count()
}

/// `M x M` patch weights over `[-1, 1]^2`, stored row-major with row 0 at
/// `y = -1` and column 0 at `x = -1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightMap {
    pub m: usize,
    pub w: Vec<f64>,
}

impl WeightMap {
    pub fn new(m: usize, w: Vec<f64>) -> Result<Self> {
        let map = Self { m, w };
        map.validate()?;
        Ok(map)
    }

    pub fn uniform(m: usize) -> Self {
        Self { m, w: vec![1.0; m * m] }
    }

    /// Fraction of each patch covered by the union of the rectangles.
    pub fn from_rects(rects: &[Rect], m: usize) -> Result<Self> {
        let fine = patch_centers(m * MASK_SUBSAMPLES);
        let mut w = vec![0.0; m * m];
        for (iy, &y) in fine.iter().enumerate() {
            for (ix, &x) in fine.iter().enumerate() {
                if rects.iter().any(|r| r.contains(x, y)) {
                    w[(iy / MASK_SUBSAMPLES) * m + ix / MASK_SUBSAMPLES] += 1.0;
                }
            }
        }
        let per_patch = (MASK_SUBSAMPLES * MASK_SUBSAMPLES) as f64;
        w.iter_mut().for_each(|v| *v /= per_patch);
        Self::new(m, w)
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 || self.w.len() != self.m * self.m {
            return Err(Error::InvalidParams(format!(
                "weight map needs {m}x{m} entries (got {})",
                self.w.len(),
                m = self.m
            )));
        }
        if self.w.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::InvalidParams("weights must be finite and nonnegative".into()));
        }
        if !self.w.iter().any(|&v| v > 0.0) {
            return Err(Error::InvalidParams("weight map has no positive entry".into()));
        }
        Ok(())
    }

    pub fn get(&self, ix: usize, iy: usize) -> f64 {
        self.w[iy * self.m + ix]
    }

    /// Half a patch side.
    pub fn default_threshold(&self) -> f64 {
        1.0 / self.m as f64
    }
}
