//! Planar geometry: points, simple polygons, the survey domain (outer boundary
//! plus obstacle holes) and the circle-area queries used by collision avoidance.

use crate::error::{Error, Result};

/// A point (or vector) in the plane, in meters.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub fn new(x: f64, y: f64) -> Self {
        Point2 { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn add(self, o: Point2) -> Point2 {
        Point2::new(self.x + o.x, self.y + o.y)
    }

    pub fn sub(self, o: Point2) -> Point2 {
        Point2::new(self.x - o.x, self.y - o.y)
    }

    pub fn scale(self, s: f64) -> Point2 {
        Point2::new(self.x * s, self.y * s)
    }

    pub fn dot(self, o: Point2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    /// z-component of the cross product `self x o`.
    pub fn cross(self, o: Point2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dist(self, o: Point2) -> f64 {
        self.sub(o).norm()
    }
}

/// Winding direction of a polygon's vertex list.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    Ccw,
    Cw,
}

/// A simple closed polygon; the last vertex connects back to the first.
#[derive(Debug, Clone)]
pub struct Polygon {
    vertices: Vec<Point2>,
}

impl Polygon {
    /// Builds a polygon, checking the basic invariants: at least 3 vertices,
    /// finite coordinates, nonzero area and no self-intersections.
    pub fn new(vertices: Vec<Point2>) -> Result<Self> {
        if vertices.len() < 3 {
            return Err(Error::InvalidGeometry(format!(
                "polygon needs at least 3 vertices, got {}",
                vertices.len()
            )));
        }
        if vertices.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidGeometry(
                "polygon has non-finite vertex coordinates".into(),
            ));
        }
        let poly = Polygon { vertices };
        if poly.signed_area().abs() < 1e-15 {
            return Err(Error::InvalidGeometry("polygon has zero area".into()));
        }
        if !poly.is_simple() {
            return Err(Error::InvalidGeometry("polygon is self-intersecting".into()));
        }
        Ok(poly)
    }

    pub fn vertices(&self) -> &[Point2] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Edges as (start, end) pairs, including the closing edge.
    pub fn segments(&self) -> impl Iterator<Item = (Point2, Point2)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    /// Shoelace area: positive for counter-clockwise winding.
    pub fn signed_area(&self) -> f64 {
        signed_area_of(&self.vertices)
    }

    pub fn area(&self) -> f64 {
        self.signed_area().abs()
    }

    pub fn orientation(&self) -> Orientation {
        if self.signed_area() >= 0.0 {
            Orientation::Ccw
        } else {
            Orientation::Cw
        }
    }

    /// Returns a copy wound in the requested direction.
    pub fn with_orientation(&self, want: Orientation) -> Polygon {
        if self.orientation() == want {
            self.clone()
        } else {
            let mut v = self.vertices.clone();
            v.reverse();
            Polygon { vertices: v }
        }
    }

    pub fn bbox(&self) -> (Point2, Point2) {
        let mut lo = self.vertices[0];
        let mut hi = self.vertices[0];
        for v in &self.vertices {
            lo.x = lo.x.min(v.x);
            lo.y = lo.y.min(v.y);
            hi.x = hi.x.max(v.x);
            hi.y = hi.y.max(v.y);
        }
        (lo, hi)
    }

    /// Even-odd point containment. Points exactly on the boundary may land on
    /// either side; callers needing boundary semantics should test distance.
    pub fn contains(&self, p: Point2) -> bool {
        let mut inside = false;
        let n = self.vertices.len();
        let mut j = n - 1;
        for i in 0..n {
            let a = self.vertices[i];
            let b = self.vertices[j];
            if (a.y > p.y) != (b.y > p.y) {
                let x_cross = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
                if p.x < x_cross {
                    inside = !inside;
                }
            }
            j = i;
        }
        inside
    }

    /// Distance from `p` to the polygon outline (zero on the outline itself).
    pub fn distance_to_outline(&self, p: Point2) -> f64 {
        self.segments()
            .map(|(a, b)| point_segment_distance(p, a, b))
            .fold(f64::INFINITY, f64::min)
    }

    /// O(n^2) segment-pair test; adjacent edges may share their endpoint only.
    fn is_simple(&self) -> bool {
        let segs: Vec<_> = self.segments().collect();
        let n = segs.len();
        for i in 0..n {
            for j in (i + 1)..n {
                let adjacent = j == i + 1 || (i == 0 && j == n - 1);
                let (a, b) = segs[i];
                let (c, d) = segs[j];
                if adjacent {
                    // Shared endpoint is fine; overlap beyond it is not.
                    if segments_overlap_collinear(a, b, c, d) {
                        return false;
                    }
                } else if segments_intersect(a, b, c, d) {
                    return false;
                }
            }
        }
        true
    }
}

fn signed_area_of(vertices: &[Point2]) -> f64 {
    let n = vertices.len();
    let mut acc = 0.0;
    for i in 0..n {
        let a = vertices[i];
        let b = vertices[(i + 1) % n];
        acc += a.cross(b);
    }
    0.5 * acc
}

/// Distance from point `p` to segment `ab`.
pub fn point_segment_distance(p: Point2, a: Point2, b: Point2) -> f64 {
    let ab = b.sub(a);
    let len2 = ab.dot(ab);
    if len2 == 0.0 {
        return p.dist(a);
    }
    let t = (p.sub(a).dot(ab) / len2).clamp(0.0, 1.0);
    p.dist(a.add(ab.scale(t)))
}

fn orient(a: Point2, b: Point2, c: Point2) -> f64 {
    b.sub(a).cross(c.sub(a))
}

/// Proper or improper intersection of closed segments `ab` and `cd`.
fn segments_intersect(a: Point2, b: Point2, c: Point2, d: Point2) -> bool {
    let d1 = orient(c, d, a);
    let d2 = orient(c, d, b);
    let d3 = orient(a, b, c);
    let d4 = orient(a, b, d);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    (d1 == 0.0 && on_segment(c, d, a))
        || (d2 == 0.0 && on_segment(c, d, b))
        || (d3 == 0.0 && on_segment(a, b, c))
        || (d4 == 0.0 && on_segment(a, b, d))
}

fn on_segment(a: Point2, b: Point2, p: Point2) -> bool {
    p.x >= a.x.min(b.x) && p.x <= a.x.max(b.x) && p.y >= a.y.min(b.y) && p.y <= a.y.max(b.y)
}

/// True when adjacent edges double back over each other.
fn segments_overlap_collinear(a: Point2, b: Point2, c: Point2, d: Point2) -> bool {
    if orient(a, b, c) != 0.0 || orient(a, b, d) != 0.0 {
        return false;
    }
    // Collinear: overlap means more than a single shared point.
    let axis = if (b.x - a.x).abs() >= (b.y - a.y).abs() {
        |p: Point2| p.x
    } else {
        |p: Point2| p.y
    };
    let (lo1, hi1) = minmax(axis(a), axis(b));
    let (lo2, hi2) = minmax(axis(c), axis(d));
    let lo = lo1.max(lo2);
    let hi = hi1.min(hi2);
    hi > lo
}

fn minmax(a: f64, b: f64) -> (f64, f64) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

/// The survey domain: a counter-clockwise outer boundary with clockwise
/// obstacle holes. The accessible region is the outer interior minus the holes.
#[derive(Debug, Clone)]
pub struct DomainGeometry {
    outer: Polygon,
    obstacles: Vec<Polygon>,
}

impl DomainGeometry {
    /// Builds and validates the domain: outer is stored CCW, obstacles CW,
    /// each obstacle strictly inside the outer boundary and pairwise disjoint.
    ///
    /// Connectivity of the accessible region cannot be decided from the
    /// polygons alone; it is validated against the mesh in `mesh::load_mesh`.
    pub fn new(outer: Polygon, obstacles: Vec<Polygon>) -> Result<Self> {
        let outer = outer.with_orientation(Orientation::Ccw);
        let obstacles: Vec<Polygon> = obstacles
            .into_iter()
            .map(|o| o.with_orientation(Orientation::Cw))
            .collect();

        for (j, obs) in obstacles.iter().enumerate() {
            for v in obs.vertices() {
                if !outer.contains(*v) {
                    return Err(Error::InvalidGeometry(format!(
                        "obstacle {} is not strictly inside the outer boundary",
                        j + 1
                    )));
                }
            }
            if polygons_cross(obs, &outer) {
                return Err(Error::InvalidGeometry(format!(
                    "obstacle {} crosses the outer boundary",
                    j + 1
                )));
            }
        }
        for i in 0..obstacles.len() {
            for j in (i + 1)..obstacles.len() {
                if polygons_cross(&obstacles[i], &obstacles[j])
                    || obstacles[j]
                        .vertices()
                        .iter()
                        .any(|v| obstacles[i].contains(*v))
                    || obstacles[i]
                        .vertices()
                        .iter()
                        .any(|v| obstacles[j].contains(*v))
                {
                    return Err(Error::InvalidGeometry(format!(
                        "obstacles {} and {} are not disjoint",
                        i + 1,
                        j + 1
                    )));
                }
            }
        }
        Ok(DomainGeometry { outer, obstacles })
    }

    pub fn outer(&self) -> &Polygon {
        &self.outer
    }

    pub fn obstacles(&self) -> &[Polygon] {
        &self.obstacles
    }

    pub fn obstacle_count(&self) -> usize {
        self.obstacles.len()
    }

    /// Area of the accessible region (outer minus holes).
    pub fn area(&self) -> f64 {
        self.outer.area() - self.obstacles.iter().map(|o| o.area()).sum::<f64>()
    }

    /// True when `p` lies in the accessible region.
    pub fn contains(&self, p: Point2) -> bool {
        self.outer.contains(p) && !self.obstacles.iter().any(|o| o.contains(p))
    }

    /// Euclidean distance from `p` to the nearest boundary polyline (outer or
    /// any obstacle). Defined for points inside or outside the domain.
    pub fn distance_to_boundary(&self, p: Point2) -> f64 {
        let mut d = self.outer.distance_to_outline(p);
        for obs in &self.obstacles {
            d = d.min(obs.distance_to_outline(p));
        }
        d
    }

    /// Area of the disk (center `c`, radius `r`) that lies outside the
    /// accessible region, approximated by clipping a circumscribed regular
    /// 64-gon against the domain polygons. The circumscribed polygon contains
    /// the true disk, so a zero result certifies the disk is fully inside the
    /// domain; the overestimate is below 0.5% of the disk area.
    pub fn circle_outside_area(&self, c: Point2, r: f64) -> f64 {
        debug_assert!(r > 0.0);
        // Cheap certificate: a disk further from every boundary than its
        // circumscribed radius is entirely inside or entirely outside.
        let r_out = r / (std::f64::consts::PI / CIRCLE_GON_SIDES as f64).cos();
        let d = self.distance_to_boundary(c);
        if d >= r_out {
            return if self.contains(c) {
                0.0
            } else {
                circle_gon_area(r)
            };
        }

        let gon = circle_gon(c, r);
        let gon_area = signed_area_of(&gon);
        let mut inside = convex_clip_area(self.outer.vertices(), &gon);
        for obs in &self.obstacles {
            let ccw = obs.with_orientation(Orientation::Ccw);
            inside -= convex_clip_area(ccw.vertices(), &gon);
        }
        let outside = (gon_area - inside).clamp(0.0, gon_area);
        // Fully-inside disks must report exactly zero so that collision
        // feasibility can demand exact zeros; residues below this are
        // clipping roundoff, far under any real boundary crossing.
        if outside < CLIP_ROUNDOFF_GUARD {
            0.0
        } else {
            outside
        }
    }
}

fn polygons_cross(a: &Polygon, b: &Polygon) -> bool {
    for (p1, p2) in a.segments() {
        for (q1, q2) in b.segments() {
            if segments_intersect(p1, p2, q1, q2) {
                return true;
            }
        }
    }
    false
}

const CIRCLE_GON_SIDES: usize = 64;

/// Clipped areas below this are floating-point residue, not geometry.
const CLIP_ROUNDOFF_GUARD: f64 = 1e-12;

/// Circumscribed regular 64-gon around the circle (contains the disk).
fn circle_gon(c: Point2, r: f64) -> Vec<Point2> {
    let n = CIRCLE_GON_SIDES;
    let r_out = r / (std::f64::consts::PI / n as f64).cos();
    (0..n)
        .map(|k| {
            let ang = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
            Point2::new(c.x + r_out * ang.cos(), c.y + r_out * ang.sin())
        })
        .collect()
}

/// Area of the circumscribed 64-gon used to approximate a disk of radius `r`.
pub fn circle_gon_area(r: f64) -> f64 {
    let n = CIRCLE_GON_SIDES as f64;
    n * r * r * (std::f64::consts::PI / n).tan()
}

/// Area of `subject ∩ clip` where `clip` is convex and CCW. The subject may be
/// non-convex; Sutherland-Hodgman then traces the intersection with zero-width
/// bridges whose signed area cancels, so the returned area is still correct.
fn convex_clip_area(subject: &[Point2], clip: &[Point2]) -> f64 {
    let mut poly: Vec<Point2> = subject.to_vec();
    let n = clip.len();
    for i in 0..n {
        if poly.is_empty() {
            return 0.0;
        }
        let a = clip[i];
        let b = clip[(i + 1) % n];
        let mut out: Vec<Point2> = Vec::with_capacity(poly.len() + 4);
        let m = poly.len();
        for k in 0..m {
            let cur = poly[k];
            let nxt = poly[(k + 1) % m];
            let cur_in = orient(a, b, cur) >= 0.0;
            let nxt_in = orient(a, b, nxt) >= 0.0;
            if cur_in {
                out.push(cur);
                if !nxt_in {
                    out.push(line_intersection(a, b, cur, nxt));
                }
            } else if nxt_in {
                out.push(line_intersection(a, b, cur, nxt));
            }
        }
        poly = out;
    }
    if poly.len() < 3 {
        return 0.0;
    }
    signed_area_of(&poly).max(0.0)
}

/// Intersection of the infinite line `ab` with segment `cd` (caller guarantees
/// the segment straddles the line).
fn line_intersection(a: Point2, b: Point2, c: Point2, d: Point2) -> Point2 {
    let dc = orient(a, b, c);
    let dd = orient(a, b, d);
    let t = dc / (dc - dd);
    c.add(d.sub(c).scale(t))
}

/// Exact lens area of two overlapping disks via the circular-segment formula.
/// Zero at or beyond tangency; the smaller disk's area under full containment.
pub fn circle_circle_intersection_area(c1: Point2, r1: f64, c2: Point2, r2: f64) -> f64 {
    debug_assert!(r1 > 0.0 && r2 > 0.0);
    let d = c1.dist(c2);
    if d >= r1 + r2 {
        return 0.0;
    }
    let r_min = r1.min(r2);
    if d <= (r1 - r2).abs() {
        return std::f64::consts::PI * r_min * r_min;
    }
    let cos1 = ((d * d + r1 * r1 - r2 * r2) / (2.0 * d * r1)).clamp(-1.0, 1.0);
    let cos2 = ((d * d + r2 * r2 - r1 * r1) / (2.0 * d * r2)).clamp(-1.0, 1.0);
    let term1 = r1 * r1 * cos1.acos();
    let term2 = r2 * r2 * cos2.acos();
    let s = (-d + r1 + r2) * (d + r1 - r2) * (d - r1 + r2) * (d + r1 + r2);
    let term3 = 0.5 * s.max(0.0).sqrt();
    (term1 + term2 - term3).max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn unit_square() -> Polygon {
        Polygon::new(vec![
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 0.0),
            Point2::new(1.0, 1.0),
            Point2::new(0.0, 1.0),
        ])
        .unwrap()
    }

    fn square_with_hole() -> DomainGeometry {
        // 10x10 outer, 2x2 obstacle centered at (5,5).
        let outer = Polygon::new(vec![
            Point2::new(0.0, 0.0),
            Point2::new(10.0, 0.0),
            Point2::new(10.0, 10.0),
            Point2::new(0.0, 10.0),
        ])
        .unwrap();
        let hole = Polygon::new(vec![
            Point2::new(4.0, 4.0),
            Point2::new(6.0, 4.0),
            Point2::new(6.0, 6.0),
            Point2::new(4.0, 6.0),
        ])
        .unwrap();
        DomainGeometry::new(outer, vec![hole]).unwrap()
    }

    #[test]
    fn polygon_rejects_degenerate_input() {
        assert!(Polygon::new(vec![Point2::new(0.0, 0.0), Point2::new(1.0, 0.0)]).is_err());
        // Self-intersecting bowtie.
        assert!(Polygon::new(vec![
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 1.0),
            Point2::new(1.0, 0.0),
            Point2::new(0.0, 1.0),
        ])
        .is_err());
    }

    #[test]
    fn orientation_and_area() {
        let sq = unit_square();
        assert_eq!(sq.orientation(), Orientation::Ccw);
        assert!((sq.signed_area() - 1.0).abs() < 1e-15);
        let cw = sq.with_orientation(Orientation::Cw);
        assert!((cw.signed_area() + 1.0).abs() < 1e-15);
    }

    #[test]
    fn domain_rejects_obstacle_outside() {
        let outer = unit_square();
        let obs = Polygon::new(vec![
            Point2::new(0.5, 0.5),
            Point2::new(1.5, 0.5),
            Point2::new(1.5, 1.5),
            Point2::new(0.5, 1.5),
        ])
        .unwrap();
        assert!(DomainGeometry::new(outer, vec![obs]).is_err());
    }

    #[test]
    fn distance_center_of_unit_square() {
        let geom = DomainGeometry::new(unit_square(), vec![]).unwrap();
        assert!((geom.distance_to_boundary(Point2::new(0.5, 0.5)) - 0.5).abs() < 1e-12);
        // On the boundary.
        assert!(geom.distance_to_boundary(Point2::new(0.0, 0.3)).abs() < 1e-12);
    }

    #[test]
    fn distance_near_obstacle_corner_matches_dense_sampling() {
        let geom = square_with_hole();
        let p = Point2::new(6.8, 6.9); // near the (6,6) corner of the hole
        let fast = geom.distance_to_boundary(p);

        // Brute-force oracle: densely sample every boundary polyline.
        let mut best = f64::INFINITY;
        let mut rings: Vec<&Polygon> = vec![geom.outer()];
        rings.extend(geom.obstacles().iter());
        for ring in rings {
            for (a, b) in ring.segments() {
                let steps = 100_000 / (ring.len() * 4);
                for k in 0..=steps {
                    let t = k as f64 / steps as f64;
                    best = best.min(p.dist(a.add(b.sub(a).scale(t))));
                }
            }
        }
        assert!((fast - best).abs() < 1e-4, "fast {fast} vs sampled {best}");
    }

    #[test]
    fn lens_area_identical_disks() {
        let a = circle_circle_intersection_area(
            Point2::new(0.0, 0.0),
            1.0,
            Point2::new(0.0, 0.0),
            1.0,
        );
        assert!((a - std::f64::consts::PI).abs() < 1e-12);
    }

    #[test]
    fn lens_area_tangent_disks() {
        let a = circle_circle_intersection_area(
            Point2::new(0.0, 0.0),
            1.0,
            Point2::new(2.0, 0.0),
            1.0,
        );
        assert_eq!(a, 0.0);
    }

    #[test]
    fn lens_area_unit_disks_one_apart() {
        // 2 acos(1/2) - sqrt(3)/2 for r1 = r2 = 1, d = 1.
        let expect = 2.0 * 0.5f64.acos() - 0.5 * 3.0f64.sqrt();
        let a = circle_circle_intersection_area(
            Point2::new(0.0, 0.0),
            1.0,
            Point2::new(1.0, 0.0),
            1.0,
        );
        assert!((a - expect).abs() < 1e-12);
        assert!((a - 1.2283696986087567).abs() < 1e-9);
    }

    #[test]
    fn outside_area_interior_disk_is_zero() {
        let geom = square_with_hole();
        assert_eq!(geom.circle_outside_area(Point2::new(2.0, 2.0), 0.5), 0.0);
    }

    #[test]
    fn outside_area_disk_inside_obstacle_is_full() {
        let geom = square_with_hole();
        let r = 0.3;
        let a = geom.circle_outside_area(Point2::new(5.0, 5.0), r);
        let disk = std::f64::consts::PI * r * r;
        assert!((a - disk).abs() / disk < 5e-3, "a = {a}, disk = {disk}");
    }

    #[test]
    fn outside_area_half_plane() {
        let geom = square_with_hole();
        // Centered on the long straight bottom edge, far from corners.
        let r = 0.4;
        let a = geom.circle_outside_area(Point2::new(5.0, 0.0), r);
        let half = 0.5 * std::f64::consts::PI * r * r;
        assert!((a - half).abs() / (2.0 * half) < 5e-3, "a = {a}, half = {half}");
    }

    proptest! {
        #[test]
        fn lens_symmetry_and_monotonicity(
            x in -2.0f64..2.0, y in -2.0f64..2.0,
            r1 in 0.1f64..2.0, r2 in 0.1f64..2.0,
            shrink in 0.0f64..1.0,
        ) {
            let c1 = Point2::new(0.0, 0.0);
            let c2 = Point2::new(x, y);
            let a12 = circle_circle_intersection_area(c1, r1, c2, r2);
            let a21 = circle_circle_intersection_area(c2, r2, c1, r1);
            prop_assert!((a12 - a21).abs() <= 1e-12 * (1.0 + a12.abs()));

            // Moving the centers closer never decreases the overlap.
            let closer = Point2::new(x * shrink, y * shrink);
            let a_closer = circle_circle_intersection_area(c1, r1, closer, r2);
            prop_assert!(a_closer >= a12 - 1e-12);
        }

        #[test]
        fn boundary_distance_is_lipschitz(
            px in -1.0f64..11.0, py in -1.0f64..11.0,
            qx in -1.0f64..11.0, qy in -1.0f64..11.0,
        ) {
            let geom = square_with_hole();
            let p = Point2::new(px, py);
            let q = Point2::new(qx, qy);
            let dp = geom.distance_to_boundary(p);
            let dq = geom.distance_to_boundary(q);
            prop_assert!((dp - dq).abs() <= p.dist(q) + 1e-12);
        }
    }
}
