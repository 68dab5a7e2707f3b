use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::GeometryError;

/// A point (or vector) of the ambient space, `d ∈ {2, 3}`.
///
/// Storage is always three wide; the unused coordinate of a planar point is
/// held at zero so distances and dot products need no dimension branch.
#[derive(Clone, Copy, PartialEq)]
pub struct Point {
    coords: [f64; 3],
    dim: u8,
}

/// Displacements share the point representation.
pub type Vector = Point;

impl Point {
    pub fn xy(x: f64, y: f64) -> Self {
        Self { coords: [x, y, 0.0], dim: 2 }
    }

    pub fn xyz(x: f64, y: f64, z: f64) -> Self {
        Self { coords: [x, y, z], dim: 3 }
    }

    pub fn from_slice(c: &[f64]) -> Result<Self, GeometryError> {
        let p = match c.len() {
            2 => Self::xy(c[0], c[1]),
            3 => Self::xyz(c[0], c[1], c[2]),
            n => return Err(GeometryError::UnsupportedDimension(n)),
        };
        if !p.is_finite() {
            return Err(GeometryError::NonFinite);
        }
        Ok(p)
    }

    pub fn zero(dim: usize) -> Self {
        debug_assert!(dim == 2 || dim == 3);
        Self { coords: [0.0; 3], dim: dim as u8 }
    }

    /// The `i`-th standard basis vector.
    pub fn basis(dim: usize, i: usize) -> Self {
        let mut p = Self::zero(dim);
        p.coords[i] = 1.0;
        p
    }

    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords[..self.dim as usize]
    }

    pub(crate) fn raw(&self) -> &[f64; 3] {
        &self.coords
    }

    pub fn get(&self, i: usize) -> f64 {
        self.coords[i]
    }

    pub fn with(mut self, i: usize, v: f64) -> Self {
        self.coords[i] = v;
        self
    }

    pub fn is_finite(&self) -> bool {
        self.coords.iter().all(|c| c.is_finite())
    }

    pub fn dot(&self, o: &Point) -> f64 {
        self.coords[0] * o.coords[0] + self.coords[1] * o.coords[1] + self.coords[2] * o.coords[2]
    }

    pub fn norm_sq(&self) -> f64 {
        self.dot(self)
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn dist_sq(&self, o: &Point) -> f64 {
        let dx = self.coords[0] - o.coords[0];
        let dy = self.coords[1] - o.coords[1];
        let dz = self.coords[2] - o.coords[2];
        dx * dx + dy * dy + dz * dz
    }

    pub fn dist(&self, o: &Point) -> f64 {
        self.dist_sq(o).sqrt()
    }

    /// Unit vector in the same direction, or `None` for the zero vector.
    pub fn normalized(&self) -> Option<Point> {
        let n = self.norm();
        (n > 0.0 && n.is_finite()).then(|| *self * (1.0 / n))
    }

    /// Lexicographic comparison of the coordinates.
    pub fn lex_cmp(&self, o: &Point) -> std::cmp::Ordering {
        for i in 0..3 {
            match self.coords[i].total_cmp(&o.coords[i]) {
                std::cmp::Ordering::Equal => continue,
                ord => return ord,
            }
        }
        std::cmp::Ordering::Equal
    }

    pub fn lerp(&self, o: &Point, t: f64) -> Point {
        *self + (*o - *self) * t
    }
}

impl fmt::Debug for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.coords()).finish()
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, c) in self.coords().iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, o: Point) -> Point {
        Point {
            coords: [self.coords[0] + o.coords[0], self.coords[1] + o.coords[1], self.coords[2] + o.coords[2]],
            dim: self.dim.max(o.dim),
        }
    }
}

impl AddAssign for Point {
    fn add_assign(&mut self, o: Point) {
        *self = *self + o;
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, o: Point) -> Point {
        Point {
            coords: [self.coords[0] - o.coords[0], self.coords[1] - o.coords[1], self.coords[2] - o.coords[2]],
            dim: self.dim.max(o.dim),
        }
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(self, s: f64) -> Point {
        Point { coords: [self.coords[0] * s, self.coords[1] * s, self.coords[2] * s], dim: self.dim }
    }
}

impl Neg for Point {
    type Output = Point;
    fn neg(self) -> Point {
        self * -1.0
    }
}

impl Serialize for Point {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.coords().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Point {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = Vec::<f64>::deserialize(d)?;
        Point::from_slice(&v).map_err(D::Error::custom)
    }
}
