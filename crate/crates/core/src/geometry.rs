//! Planar point processes, rectangular regions, and fixed-radius neighbor queries.
//!
//! All coordinates are meters. Regions are `[0, width) x [0, height)` and come
//! in two boundary flavors: `Torus` (distances wrap, so empirical densities
//! match analytic intensities without edge bias) and `Truncate` (plain
//! Euclidean distance, used for real-world data).

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("intensity must be finite and non-negative, got {0}")]
    InvalidDensity(f64),
    #[error("cell size must be positive and finite, got {0}")]
    InvalidCellSize(f64),
    #[error("region must have positive finite area, got {width} x {height}")]
    EmptyRegion { width: f64, height: f64 },
}

/// A location in the plane, meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryMode {
    Torus,
    Truncate,
}

/// Rectangular simulation window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub width: f64,
    pub height: f64,
    pub boundary_mode: BoundaryMode,
}

impl Region {
    pub fn torus(width: f64, height: f64) -> Self {
        Self {
            width,
            height,
            boundary_mode: BoundaryMode::Torus,
        }
    }

    pub fn truncate(width: f64, height: f64) -> Self {
        Self {
            width,
            height,
            boundary_mode: BoundaryMode::Truncate,
        }
    }

    pub fn area(&self) -> f64 {
        self.width * self.height
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        if !(self.width > 0.0 && self.height > 0.0 && self.area().is_finite()) {
            return Err(GeometryError::EmptyRegion {
                width: self.width,
                height: self.height,
            });
        }
        Ok(())
    }

    pub fn contains(&self, p: Point) -> bool {
        p.x >= 0.0 && p.x <= self.width && p.y >= 0.0 && p.y <= self.height
    }

    /// Distance between two points honoring the boundary mode.
    pub fn distance(&self, a: Point, b: Point) -> f64 {
        let (dx, dy) = match self.boundary_mode {
            BoundaryMode::Truncate => (a.x - b.x, a.y - b.y),
            BoundaryMode::Torus => {
                let dx = (a.x - b.x).abs();
                let dy = (a.y - b.y).abs();
                (dx.min(self.width - dx), dy.min(self.height - dy))
            }
        };
        dx.hypot(dy)
    }
}

/// An immutable batch of points tied to the region they were sampled on.
#[derive(Debug, Clone)]
pub struct PointSet {
    pub points: Vec<Point>,
    pub region: Region,
}

impl PointSet {
    pub fn new(points: Vec<Point>, region: Region) -> Self {
        Self { points, region }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Sample a homogeneous Poisson point process on `region`.
///
/// The count is Poisson with mean `density * area`; locations are i.i.d.
/// uniform. `density = 0` yields an empty set.
pub fn sample_ppp(
    region: &Region,
    density: f64,
    rng: &mut impl Rng,
) -> Result<PointSet, GeometryError> {
    if !density.is_finite() || density < 0.0 {
        return Err(GeometryError::InvalidDensity(density));
    }
    region.validate()?;
    let mean = density * region.area();
    let count = if mean > 0.0 {
        Poisson::new(mean)
            .map_err(|_| GeometryError::InvalidDensity(density))?
            .sample(rng) as usize
    } else {
        0
    };
    let points = (0..count)
        .map(|_| {
            Point::new(
                rng.random_range(0.0..region.width),
                rng.random_range(0.0..region.height),
            )
        })
        .collect();
    Ok(PointSet::new(points, *region))
}

/// Uniform grid over a region answering fixed-radius queries exactly.
///
/// Buckets hold indices into the indexed point set; candidate cells are always
/// confirmed with an exact distance check, so there are no false dismissals
/// and no false hits.
#[derive(Debug, Clone)]
pub struct GridIndex {
    cell_size: f64,
    nx: i64,
    ny: i64,
    buckets: Vec<Vec<u32>>,
    points: Vec<Point>,
    region: Region,
}

impl GridIndex {
    /// Build an index with the given cell size (normally the query radius).
    ///
    /// The cell size is grown when it would produce far more cells than
    /// points; results are identical either way since every candidate is
    /// distance-checked.
    pub fn build(points: &PointSet, cell_size: f64) -> Result<Self, GeometryError> {
        if !cell_size.is_finite() || cell_size <= 0.0 {
            return Err(GeometryError::InvalidCellSize(cell_size));
        }
        let region = points.region;
        region.validate()?;
        let mut cell_size = cell_size;
        let mut nx = ((region.width / cell_size).ceil() as i64).max(1);
        let mut ny = ((region.height / cell_size).ceil() as i64).max(1);
        let limit = (4 * points.len().max(256)) as i64;
        if nx * ny > limit {
            cell_size *= ((nx * ny) as f64 / limit as f64).sqrt();
            nx = ((region.width / cell_size).ceil() as i64).max(1);
            ny = ((region.height / cell_size).ceil() as i64).max(1);
        }
        let mut buckets = vec![Vec::new(); (nx * ny) as usize];
        for (id, p) in points.points.iter().enumerate() {
            let (ix, iy) = Self::cell_of(p, cell_size, nx, ny);
            buckets[(iy * nx + ix) as usize].push(id as u32);
        }
        Ok(Self {
            cell_size,
            nx,
            ny,
            buckets,
            points: points.points.clone(),
            region,
        })
    }

    fn cell_of(p: &Point, cell_size: f64, nx: i64, ny: i64) -> (i64, i64) {
        let ix = ((p.x / cell_size).floor() as i64).clamp(0, nx - 1);
        let iy = ((p.y / cell_size).floor() as i64).clamp(0, ny - 1);
        (ix, iy)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, id: usize) -> Point {
        self.points[id]
    }

    /// Ids of all indexed points with `distance(center, p) <= radius`.
    pub fn neighbors_within(&self, center: Point, radius: f64) -> Vec<usize> {
        let mut out = Vec::new();
        if radius < 0.0 || self.points.is_empty() {
            return out;
        }
        let span = (radius / self.cell_size).ceil() as i64 + 1;
        let (cx, cy) = Self::cell_of(&center, self.cell_size, self.nx, self.ny);
        let wrap = self.region.boundary_mode == BoundaryMode::Torus;

        let (x_lo, x_hi) = Self::cell_range(cx, span, self.nx, wrap);
        let (y_lo, y_hi) = Self::cell_range(cy, span, self.ny, wrap);
        for ry in y_lo..=y_hi {
            let iy = if wrap { ry.rem_euclid(self.ny) } else { ry };
            for rx in x_lo..=x_hi {
                let ix = if wrap { rx.rem_euclid(self.nx) } else { rx };
                for &id in &self.buckets[(iy * self.nx + ix) as usize] {
                    if self.region.distance(center, self.points[id as usize]) <= radius {
                        out.push(id as usize);
                    }
                }
            }
        }
        out.sort_unstable();
        out
    }

    fn cell_range(c: i64, span: i64, n: i64, wrap: bool) -> (i64, i64) {
        if wrap {
            if 2 * span + 1 >= n {
                (0, n - 1)
            } else {
                (c - span, c + span)
            }
        } else {
            ((c - span).max(0), (c + span).min(n - 1))
        }
    }
}
