//! Disk and square regions, and the density of the distance between two
//! independent uniform points in them.

use std::f64::consts::{PI, SQRT_2};
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", try_from = "String")]
pub enum Shape {
    Disk,
    Square,
}

impl Shape {
    pub fn name(self) -> &'static str {
        match self {
            Shape::Disk => "disk",
            Shape::Square => "square",
        }
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Shape {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "disk" => Ok(Shape::Disk),
            "square" => Ok(Shape::Square),
            other => Err(Error::Unsupported(format!(
                "unsupported shape {other:?} (closed forms exist for disk and square; use the Monte Carlo path)"
            ))),
        }
    }
}

impl TryFrom<String> for Shape {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

/// Serialized form of a [`Region`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionSpec {
    pub shape: Shape,
    pub size: f64,
    #[serde(default = "one")]
    pub lambda: f64,
    #[serde(default)]
    pub offset: [f64; 2],
}

fn one() -> f64 {
    1.0
}

/// `λ·A₀ + offset`, where `A₀` is the disk of radius `size` centred at the
/// origin or the square `[0, size]²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RegionSpec", into = "RegionSpec")]
pub struct Region {
    shape: Shape,
    size: f64,
    lambda: f64,
    offset: [f64; 2],
}

impl Region {
    pub fn new(shape: Shape, size: f64, lambda: f64) -> Result<Self> {
        if !(size > 0.0 && size.is_finite()) {
            return Err(domain("region", format!("size must be positive, got {size}")));
        }
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(domain("region", format!("lambda must be positive, got {lambda}")));
        }
        Ok(Self {
            shape,
            size,
            lambda,
            offset: [0.0, 0.0],
        })
    }

    pub fn disk(radius: f64) -> Result<Self> {
        Self::new(Shape::Disk, radius, 1.0)
    }

    pub fn square(side: f64) -> Result<Self> {
        Self::new(Shape::Square, side, 1.0)
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    /// Radius or side before the homothety.
    pub fn size(&self) -> f64 {
        self.size
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn offset(&self) -> [f64; 2] {
        self.offset
    }

    /// Radius or side after the homothety.
    pub fn scaled_size(&self) -> f64 {
        self.size * self.lambda
    }

    pub fn with_lambda(&self, lambda: f64) -> Result<Self> {
        Ok(Self {
            offset: self.offset,
            ..Self::new(self.shape, self.size, lambda)?
        })
    }

    /// Same region with `λ = 1` and the homothety folded into the size.
    pub fn unscaled(&self) -> Self {
        Self {
            size: self.scaled_size(),
            lambda: 1.0,
            ..*self
        }
    }

    pub fn translated(&self, by: [f64; 2]) -> Self {
        Self {
            offset: [self.offset[0] + by[0], self.offset[1] + by[1]],
            ..*self
        }
    }

    pub fn area(&self) -> f64 {
        let s = self.scaled_size();
        match self.shape {
            Shape::Disk => PI * s * s,
            Shape::Square => s * s,
        }
    }

    /// Largest distance between two points of the region.
    pub fn max_distance(&self) -> f64 {
        let s = self.scaled_size();
        match self.shape {
            Shape::Disk => 2.0 * s,
            Shape::Square => SQRT_2 * s,
        }
    }

    /// Points where the distance density is not smooth, strictly inside its
    /// support.
    pub fn density_breakpoints(&self) -> Vec<f64> {
        match self.shape {
            Shape::Disk => Vec::new(),
            Shape::Square => vec![self.scaled_size()],
        }
    }

    pub fn contains(&self, p: [f64; 2]) -> bool {
        let s = self.scaled_size();
        let x = p[0] - self.offset[0];
        let y = p[1] - self.offset[1];
        match self.shape {
            Shape::Disk => x * x + y * y <= s * s,
            Shape::Square => (0.0..=s).contains(&x) && (0.0..=s).contains(&y),
        }
    }

    /// `(min, max)` corners of the axis-aligned bounding box.
    pub fn bounding_box(&self) -> ([f64; 2], [f64; 2]) {
        let s = self.scaled_size();
        let [ox, oy] = self.offset;
        match self.shape {
            Shape::Disk => ([ox - s, oy - s], [ox + s, oy + s]),
            Shape::Square => ([ox, oy], [ox + s, oy + s]),
        }
    }

    /// True when the interiors do not intersect; shared boundaries are allowed.
    pub fn is_disjoint_from(&self, other: &Region) -> bool {
        match (self.shape, other.shape) {
            (Shape::Square, Shape::Square) => {
                let (a0, a1) = self.bounding_box();
                let (b0, b1) = other.bounding_box();
                a1[0] <= b0[0] || b1[0] <= a0[0] || a1[1] <= b0[1] || b1[1] <= a0[1]
            }
            (Shape::Disk, Shape::Disk) => {
                let dx = self.offset[0] - other.offset[0];
                let dy = self.offset[1] - other.offset[1];
                dx.hypot(dy) >= self.scaled_size() + other.scaled_size()
            }
            (Shape::Disk, Shape::Square) => disk_square_disjoint(self, other),
            (Shape::Square, Shape::Disk) => disk_square_disjoint(other, self),
        }
    }

    /// One point uniformly distributed on the region.
    pub fn sample_point<R: Rng + ?Sized>(&self, rng: &mut R) -> [f64; 2] {
        let s = self.scaled_size();
        let [ox, oy] = self.offset;
        match self.shape {
            Shape::Square => [ox + s * rng.random::<f64>(), oy + s * rng.random::<f64>()],
            Shape::Disk => {
                let r = s * rng.random::<f64>().sqrt();
                let angle = 2.0 * PI * rng.random::<f64>();
                [ox + r * angle.cos(), oy + r * angle.sin()]
            }
        }
    }
}

fn disk_square_disjoint(disk: &Region, square: &Region) -> bool {
    let (lo, hi) = square.bounding_box();
    let [cx, cy] = disk.offset;
    let nx = cx.clamp(lo[0], hi[0]);
    let ny = cy.clamp(lo[1], hi[1]);
    (cx - nx).hypot(cy - ny) >= disk.scaled_size()
}

impl TryFrom<RegionSpec> for Region {
    type Error = Error;

    fn try_from(spec: RegionSpec) -> Result<Self> {
        if !spec.offset.iter().all(|c| c.is_finite()) {
            return Err(domain("region", "offset must be finite"));
        }
        Ok(Self::new(spec.shape, spec.size, spec.lambda)?.translated(spec.offset))
    }
}

impl From<Region> for RegionSpec {
    fn from(r: Region) -> Self {
        Self {
            shape: r.shape,
            size: r.size,
            lambda: r.lambda,
            offset: r.offset,
        }
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(size={}, lambda={})", self.shape, self.size, self.lambda)
    }
}

/// Density of `‖S - T‖` for `S`, `T` independent and uniform on the region.
pub fn pair_distance_density(region: &Region, h: f64) -> Result<f64> {
    if !(h >= 0.0) {
        return Err(domain("pair_distance_density", format!("distance must be non-negative, got {h}")));
    }
    Ok(density_raw(region, h))
}

pub(crate) fn density_raw(region: &Region, h: f64) -> f64 {
    let lambda = region.lambda;
    if lambda == 1.0 {
        base_density(region.shape, h, region.size)
    } else {
        base_density(region.shape, h / lambda, region.size) / lambda
    }
}

fn base_density(shape: Shape, h: f64, size: f64) -> f64 {
    match shape {
        Shape::Disk => disk_density(h, size),
        Shape::Square => square_density(h, size),
    }
}

/// Distance density for a disk of radius `r`.
pub fn disk_density(h: f64, r: f64) -> f64 {
    if h >= 2.0 * r {
        return 0.0;
    }
    let half = h / (2.0 * r);
    2.0 * h / (r * r) * (2.0 / PI * half.acos() - h / (PI * r) * (1.0 - half * half).sqrt())
}

/// Distance density for a square of side `r`.
///
/// On `[r, √2 r]` the two terms that diverge at `h = r`,
/// `(b+1)/√(b-1)` and `4 / (b √(1 - (2-b)²/b²))`, are combined exactly into
/// `√(b-1)` (with `b = h²/r²`), which removes the cancellation.
pub fn square_density(h: f64, r: f64) -> f64 {
    if h <= r {
        let t = h / r;
        2.0 * h / (r * r) * (PI - 4.0 * t + t * t)
    } else if h < SQRT_2 * r {
        let b = (h / r) * (h / r);
        let arg = ((2.0 - b) / b).clamp(-1.0, 1.0);
        2.0 * h / (r * r) * (-2.0 - b + 4.0 * (b - 1.0).sqrt() + 2.0 * arg.asin())
    } else {
        0.0
    }
}

/// Distance between two independent uniform points of the region.
pub fn sample_pair_distance<R: Rng + ?Sized>(region: &Region, rng: &mut R) -> f64 {
    let s = region.sample_point(rng);
    let t = region.sample_point(rng);
    (s[0] - t[0]).hypot(s[1] - t[1])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spot_values() {
        let sq = Region::square(1.0).unwrap();
        assert_eq!(pair_distance_density(&sq, 0.0).unwrap(), 0.0);
        let want = 2.0 * PI * 0.5 - 8.0 * 0.25 + 2.0 * 0.125;
        assert!((pair_distance_density(&sq, 0.5).unwrap() - want).abs() < 1e-15);
        let disk = Region::disk(1.0).unwrap();
        assert_eq!(pair_distance_density(&disk, 2.0).unwrap(), 0.0);
        assert!(pair_distance_density(&disk, 1.0).unwrap() > 0.0);
        assert_eq!(pair_distance_density(&sq, 1.5).unwrap(), 0.0);
        assert!(pair_distance_density(&sq, SQRT_2).unwrap().abs() < 1e-15);
    }

    #[test]
    fn lambda_identity_is_exact() {
        let base = Region::square(1.3).unwrap();
        let scaled = base.with_lambda(2.5).unwrap();
        for i in 0..50 {
            let h = i as f64 * 0.09;
            assert_eq!(
                pair_distance_density(&scaled, h).unwrap(),
                pair_distance_density(&base, h / 2.5).unwrap() / 2.5
            );
        }
    }

    #[test]
    fn areas_and_extent() {
        let d = Region::new(Shape::Disk, 2.0, 3.0).unwrap();
        assert!((d.area() - PI * 36.0).abs() < 1e-12);
        assert_eq!(d.max_distance(), 12.0);
        let s = Region::new(Shape::Square, 2.0, 0.5).unwrap();
        assert_eq!(s.area(), 1.0);
        assert_eq!(s.max_distance(), SQRT_2);
    }

    #[test]
    fn invalid_regions() {
        assert!(Region::square(0.0).is_err());
        assert!(Region::new(Shape::Disk, 1.0, -2.0).is_err());
        assert!("triangle".parse::<Shape>().is_err());
        let sq = Region::square(1.0).unwrap();
        assert!(pair_distance_density(&sq, -0.1).is_err());
    }

    #[test]
    fn disjointness() {
        let a = Region::square(1.0).unwrap();
        assert!(a.is_disjoint_from(&a.translated([1.0, 0.0])));
        assert!(!a.is_disjoint_from(&a.translated([0.5, 0.5])));
        let d = Region::disk(1.0).unwrap();
        assert!(d.is_disjoint_from(&d.translated([2.0, 0.0])));
        assert!(!d.is_disjoint_from(&d.translated([1.9, 0.0])));
        // Bounding boxes overlap but the disk misses the square corner.
        let sq = Region::square(1.0).unwrap().translated([0.8, 0.8]);
        assert!(d.is_disjoint_from(&sq));
        assert!(!d.is_disjoint_from(&Region::square(1.0).unwrap()));
    }

    #[test]
    fn sampled_points_inside() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let d = Region::new(Shape::Disk, 1.0, 2.0).unwrap().translated([3.0, -1.0]);
        for _ in 0..1000 {
            assert!(d.contains(d.sample_point(&mut rng)));
        }
    }
}
