//! Axis-aligned box arithmetic.
//!
//! Coordinates are continuous reals in pixel units. Width is `x_max - x_min`
//! with no "+1" pixel-grid convention.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BoxError {
    #[error("box coordinates must be finite, got {0:?}")]
    NonFinite([f64; 4]),
    #[error("box must have positive width and height, got {0:?}")]
    Degenerate([f64; 4]),
    #[error("image dimensions must be positive, got {width}x{height}")]
    InvalidImage { width: f64, height: f64 },
    #[error("box {bbox} extends outside the {width}x{height} image")]
    OutOfImage { bbox: BBox, width: f64, height: f64 },
}

/// An axis-aligned rectangle `(x_min, y_min, x_max, y_max)` with strictly
/// positive width and height.
///
/// Serialized as a four-element array `[x_min, y_min, x_max, y_max]`.
#[derive(Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 4]", into = "[f64; 4]")]
pub struct BBox {
    x_min: f64,
    y_min: f64,
    x_max: f64,
    y_max: f64,
}

impl BBox {
    pub fn new(x_min: f64, y_min: f64, x_max: f64, y_max: f64) -> Result<Self, BoxError> {
        let coords = [x_min, y_min, x_max, y_max];
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(BoxError::NonFinite(coords));
        }
        if !(x_max > x_min && y_max > y_min) {
            return Err(BoxError::Degenerate(coords));
        }
        Ok(Self {
            x_min,
            y_min,
            x_max,
            y_max,
        })
    }

    /// Builds a box from its center and size.
    pub fn from_center(cx: f64, cy: f64, width: f64, height: f64) -> Result<Self, BoxError> {
        Self::new(
            cx - width / 2.0,
            cy - height / 2.0,
            cx + width / 2.0,
            cy + height / 2.0,
        )
    }

    #[inline]
    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    #[inline]
    pub fn y_min(&self) -> f64 {
        self.y_min
    }

    #[inline]
    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    #[inline]
    pub fn y_max(&self) -> f64 {
        self.y_max
    }

    #[inline]
    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    #[inline]
    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }

    #[inline]
    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn center(&self) -> (f64, f64) {
        (
            (self.x_min + self.x_max) / 2.0,
            (self.y_min + self.y_max) / 2.0,
        )
    }

    pub fn to_array(&self) -> [f64; 4] {
        [self.x_min, self.y_min, self.x_max, self.y_max]
    }

    /// Area of the overlap with `other`, 0 when disjoint or only touching.
    #[inline]
    pub fn intersection_area(&self, other: &BBox) -> f64 {
        let w = self.x_max.min(other.x_max) - self.x_min.max(other.x_min);
        let h = self.y_max.min(other.y_max) - self.y_min.max(other.y_min);
        if w <= 0.0 || h <= 0.0 {
            0.0
        } else {
            w * h
        }
    }

    /// True when the box lies inside `[0, width] x [0, height]`.
    pub fn is_within(&self, width: f64, height: f64) -> bool {
        self.x_min >= 0.0 && self.y_min >= 0.0 && self.x_max <= width && self.y_max <= height
    }

    /// Intersects the box with the image rectangle. `None` if nothing with
    /// positive area remains.
    pub fn clip(&self, width: f64, height: f64) -> Option<BBox> {
        BBox::new(
            self.x_min.max(0.0),
            self.y_min.max(0.0),
            self.x_max.min(width),
            self.y_max.min(height),
        )
        .ok()
    }

    pub fn translate(&self, dx: f64, dy: f64) -> Result<BBox, BoxError> {
        BBox::new(
            self.x_min + dx,
            self.y_min + dy,
            self.x_max + dx,
            self.y_max + dy,
        )
    }

    pub fn scale(&self, factor: f64) -> Result<BBox, BoxError> {
        BBox::new(
            self.x_min * factor,
            self.y_min * factor,
            self.x_max * factor,
            self.y_max * factor,
        )
    }
}

impl TryFrom<[f64; 4]> for BBox {
    type Error = BoxError;

    fn try_from(c: [f64; 4]) -> Result<Self, Self::Error> {
        BBox::new(c[0], c[1], c[2], c[3])
    }
}

impl From<BBox> for [f64; 4] {
    fn from(b: BBox) -> Self {
        b.to_array()
    }
}

impl fmt::Debug for BBox {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "BBox({}, {}, {}, {})",
            self.x_min, self.y_min, self.x_max, self.y_max
        )
    }
}

impl fmt::Display for BBox {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}, {}, {}, {}]",
            self.x_min, self.y_min, self.x_max, self.y_max
        )
    }
}

/// Intersection over union. Symmetric; 0 for disjoint boxes.
#[inline]
pub fn iou(a: &BBox, b: &BBox) -> f64 {
    let inter = a.intersection_area(b);
    if inter == 0.0 {
        return 0.0;
    }
    inter / (a.area() + b.area() - inter)
}

/// Which box's area divides the intersection in [`ioa_with`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IoaDenominator {
    /// The first argument. Equals 1 when the candidate lies inside the reference.
    #[default]
    Candidate,
    Reference,
    Smaller,
}

/// Intersection over the candidate's area.
#[inline]
pub fn ioa(candidate: &BBox, reference: &BBox) -> f64 {
    candidate.intersection_area(reference) / candidate.area()
}

pub fn ioa_with(candidate: &BBox, reference: &BBox, denominator: IoaDenominator) -> f64 {
    let inter = candidate.intersection_area(reference);
    let area = match denominator {
        IoaDenominator::Candidate => candidate.area(),
        IoaDenominator::Reference => reference.area(),
        IoaDenominator::Smaller => candidate.area().min(reference.area()),
    };
    inter / area
}

/// Height over width.
#[inline]
pub fn aspect_ratio(b: &BBox) -> f64 {
    b.height() / b.width()
}

/// Fraction of the image covered by `b`. The box must lie inside the image.
pub fn area_fraction(b: &BBox, image_width: f64, image_height: f64) -> Result<f64, BoxError> {
    if !(image_width > 0.0 && image_height > 0.0)
        || !image_width.is_finite()
        || !image_height.is_finite()
    {
        return Err(BoxError::InvalidImage {
            width: image_width,
            height: image_height,
        });
    }
    if !b.is_within(image_width, image_height) {
        return Err(BoxError::OutOfImage {
            bbox: *b,
            width: image_width,
            height: image_height,
        });
    }
    Ok(b.area() / (image_width * image_height))
}
