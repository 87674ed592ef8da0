//! Planar primitives used by configuration spaces and planners.

use serde::{Deserialize, Serialize};

const GEOM_EPS: f64 = 1e-12;

/// A configuration in the workspace plane. Serialized as `[x, y]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

impl From<[f64; 2]> for Point {
    fn from([x, y]: [f64; 2]) -> Self {
        Self { x, y }
    }
}

impl From<Point> for [f64; 2] {
    fn from(p: Point) -> Self {
        [p.x, p.y]
    }
}

/// Axis-aligned rectangle. Serialized as `[x_min, y_min, x_max, y_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 4]", into = "[f64; 4]")]
pub struct Bounds {
    pub x_min: f64,
    pub y_min: f64,
    pub x_max: f64,
    pub y_max: f64,
}

impl Bounds {
    pub const fn new(x_min: f64, y_min: f64, x_max: f64, y_max: f64) -> Self {
        Self {
            x_min,
            y_min,
            x_max,
            y_max,
        }
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }

    pub fn diagonal(&self) -> f64 {
        self.width().hypot(self.height())
    }

    pub fn is_degenerate(&self) -> bool {
        !(self.width() > 0.0 && self.height() > 0.0)
    }

    pub fn contains(&self, p: &Point) -> bool {
        p.x >= self.x_min && p.x <= self.x_max && p.y >= self.y_min && p.y <= self.y_max
    }

    /// Overlap of two rectangles; may be degenerate.
    pub fn intersection(&self, other: &Bounds) -> Bounds {
        Bounds {
            x_min: self.x_min.max(other.x_min),
            y_min: self.y_min.max(other.y_min),
            x_max: self.x_max.min(other.x_max),
            y_max: self.y_max.min(other.y_max),
        }
    }

    pub fn union(&self, other: &Bounds) -> Bounds {
        Bounds {
            x_min: self.x_min.min(other.x_min),
            y_min: self.y_min.min(other.y_min),
            x_max: self.x_max.max(other.x_max),
            y_max: self.y_max.max(other.y_max),
        }
    }
}

impl From<[f64; 4]> for Bounds {
    fn from([x_min, y_min, x_max, y_max]: [f64; 4]) -> Self {
        Self::new(x_min, y_min, x_max, y_max)
    }
}

impl From<Bounds> for [f64; 4] {
    fn from(b: Bounds) -> Self {
        [b.x_min, b.y_min, b.x_max, b.y_max]
    }
}

/// Simple polygon given by its vertex ring (counter-clockwise, not closed).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Polygon {
    pub vertices: Vec<Point>,
}

impl Polygon {
    pub fn new(vertices: Vec<Point>) -> Self {
        Self { vertices }
    }

    /// Axis-aligned rectangle as a counter-clockwise polygon.
    pub fn rectangle(x_min: f64, y_min: f64, x_max: f64, y_max: f64) -> Self {
        Self::new(vec![
            Point::new(x_min, y_min),
            Point::new(x_max, y_min),
            Point::new(x_max, y_max),
            Point::new(x_min, y_max),
        ])
    }

    pub fn edges(&self) -> impl Iterator<Item = (Point, Point)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    pub fn bounding_box(&self) -> Bounds {
        let mut b = Bounds::new(f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
        for v in &self.vertices {
            b.x_min = b.x_min.min(v.x);
            b.y_min = b.y_min.min(v.y);
            b.x_max = b.x_max.max(v.x);
            b.y_max = b.y_max.max(v.y);
        }
        b
    }

    /// Closed containment: points on the boundary count as inside.
    pub fn contains(&self, p: &Point) -> bool {
        if self.vertices.len() < 3 {
            return false;
        }
        if self.edges().any(|(a, b)| on_segment(&a, &b, p)) {
            return true;
        }
        let mut inside = false;
        for (a, b) in self.edges() {
            if (a.y > p.y) != (b.y > p.y) {
                let x_cross = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
                if p.x < x_cross {
                    inside = !inside;
                }
            }
        }
        inside
    }

    /// True when the closed segment `a`–`b` touches the closed polygon.
    pub fn intersects_segment(&self, a: &Point, b: &Point) -> bool {
        if self.vertices.len() < 3 {
            return false;
        }
        let bb = self.bounding_box();
        if a.x.max(b.x) < bb.x_min
            || a.x.min(b.x) > bb.x_max
            || a.y.max(b.y) < bb.y_min
            || a.y.min(b.y) > bb.y_max
        {
            return false;
        }
        if self.contains(a) || self.contains(b) {
            return true;
        }
        self.edges().any(|(p, q)| segments_intersect(a, b, &p, &q))
    }

    /// No two non-adjacent edges touch and no vertex repeats.
    pub fn is_simple(&self) -> bool {
        let n = self.vertices.len();
        if n < 3 {
            return false;
        }
        let edges: Vec<_> = self.edges().collect();
        for i in 0..n {
            for j in (i + 1)..n {
                let adjacent = j == i + 1 || (i == 0 && j == n - 1);
                if adjacent {
                    // Adjacent edges share exactly one vertex; reject collinear folds.
                    let (a, b) = edges[i];
                    let (c, d) = edges[j];
                    let shared = if j == i + 1 { b } else { a };
                    let other_i = if j == i + 1 { a } else { b };
                    let other_j = if j == i + 1 { d } else { c };
                    if shared == other_i || shared == other_j {
                        return false;
                    }
                    if orientation(&other_i, &shared, &other_j).abs() <= GEOM_EPS
                        && ((other_i.x - shared.x) * (other_j.x - shared.x)
                            + (other_i.y - shared.y) * (other_j.y - shared.y))
                            > 0.0
                    {
                        return false;
                    }
                    continue;
                }
                let (a, b) = edges[i];
                let (c, d) = edges[j];
                if segments_intersect(&a, &b, &c, &d) {
                    return false;
                }
            }
        }
        true
    }
}

fn orientation(a: &Point, b: &Point, c: &Point) -> f64 {
    (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)
}

fn on_segment(a: &Point, b: &Point, p: &Point) -> bool {
    let scale = 1.0 + a.x.abs().max(a.y.abs()).max(b.x.abs()).max(b.y.abs());
    orientation(a, b, p).abs() <= GEOM_EPS * scale * scale
        && p.x >= a.x.min(b.x) - GEOM_EPS * scale
        && p.x <= a.x.max(b.x) + GEOM_EPS * scale
        && p.y >= a.y.min(b.y) - GEOM_EPS * scale
        && p.y <= a.y.max(b.y) + GEOM_EPS * scale
}

/// Closed segment intersection, collinear overlaps included.
pub fn segments_intersect(a: &Point, b: &Point, c: &Point, d: &Point) -> bool {
    let d1 = orientation(c, d, a);
    let d2 = orientation(c, d, b);
    let d3 = orientation(a, b, c);
    let d4 = orientation(a, b, d);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    on_segment(c, d, a) || on_segment(c, d, b) || on_segment(a, b, c) || on_segment(a, b, d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rectangle_containment_is_closed() {
        let r = Polygon::rectangle(0.0, 0.0, 2.0, 1.0);
        assert!(r.contains(&Point::new(1.0, 0.5)));
        assert!(r.contains(&Point::new(2.0, 0.5)));
        assert!(r.contains(&Point::new(0.0, 0.0)));
        assert!(!r.contains(&Point::new(2.1, 0.5)));
        assert!(!r.contains(&Point::new(-0.1, -0.1)));
    }

    #[test]
    fn segment_through_rectangle_is_blocked() {
        let r = Polygon::rectangle(1.0, -1.0, 2.0, 1.0);
        assert!(r.intersects_segment(&Point::new(0.0, 0.0), &Point::new(3.0, 0.0)));
        assert!(!r.intersects_segment(&Point::new(0.0, 2.0), &Point::new(3.0, 2.0)));
        // grazing a corner counts as contact
        assert!(r.intersects_segment(&Point::new(0.0, 2.0), &Point::new(2.0, 0.0)));
    }

    #[test]
    fn bowtie_is_not_simple() {
        let bowtie = Polygon::new(vec![
            Point::new(0.0, 0.0),
            Point::new(1.0, 1.0),
            Point::new(1.0, 0.0),
            Point::new(0.0, 1.0),
        ]);
        assert!(!bowtie.is_simple());
        assert!(Polygon::rectangle(0.0, 0.0, 1.0, 1.0).is_simple());
        let triangle = Polygon::new(vec![
            Point::new(0.0, 0.0),
            Point::new(4.0, 0.0),
            Point::new(2.0, 3.0),
        ]);
        assert!(triangle.is_simple());
    }

    #[test]
    fn concave_polygon_containment() {
        // U shape opening upward
        let u = Polygon::new(vec![
            Point::new(0.0, 0.0),
            Point::new(3.0, 0.0),
            Point::new(3.0, 3.0),
            Point::new(2.0, 3.0),
            Point::new(2.0, 1.0),
            Point::new(1.0, 1.0),
            Point::new(1.0, 3.0),
            Point::new(0.0, 3.0),
        ]);
        assert!(u.is_simple());
        assert!(u.contains(&Point::new(0.5, 2.0)));
        assert!(!u.contains(&Point::new(1.5, 2.0)));
    }
}
