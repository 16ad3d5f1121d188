//! Structured quadratic-triangle meshes on rectilinear cell grids.
//!
//! Used to produce the shipped scenario meshes and the unit-square meshes in
//! the test suite. Obstacles are unions of grid-cell rectangles, so every
//! boundary edge lies exactly on the polygonal domain outline and the open
//! area is an exact cell count times `h^2`.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::geom::Point2;
use crate::mesh::{BoundaryEdge, TriMesh};

/// How grid squares are split into triangles.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiagonalStyle {
    /// All cells split along the "/" diagonal.
    Slash,
    /// Cells left of the vertical midline use "/", cells right of it "\",
    /// making the triangulation exactly mirror-symmetric about the midline
    /// (requires an even column count).
    MirrorX,
}

/// Inclusive-exclusive cell-rectangle `(c0..c1, r0..r1)` in grid columns/rows.
pub type CellRect = (usize, usize, usize, usize);

/// Specification of a rectangular grid domain with cell-aligned obstacles.
#[derive(Debug, Clone)]
pub struct GridSpec {
    pub origin: Point2,
    pub h: f64,
    pub nx: usize,
    pub ny: usize,
    pub diagonals: DiagonalStyle,
    obstacles: Vec<Vec<CellRect>>,
}

impl GridSpec {
    pub fn rectangle(origin: Point2, h: f64, nx: usize, ny: usize) -> GridSpec {
        Self::with_diagonals(origin, h, nx, ny, DiagonalStyle::Slash)
    }

    pub fn with_diagonals(
        origin: Point2,
        h: f64,
        nx: usize,
        ny: usize,
        diagonals: DiagonalStyle,
    ) -> GridSpec {
        GridSpec {
            origin,
            h,
            nx,
            ny,
            diagonals,
            obstacles: Vec::new(),
        }
    }

    /// Unit square with `n x n` cells, for refinement studies.
    pub fn unit_square(n: usize) -> GridSpec {
        Self::rectangle(Point2::new(0.0, 0.0), 1.0 / n as f64, n, n)
    }

    /// Adds one obstacle as a union of cell rectangles. Obstacles must stay
    /// one cell away from the grid perimeter and from each other.
    pub fn add_obstacle(&mut self, rects: Vec<CellRect>) -> &mut Self {
        self.obstacles.push(rects);
        self
    }

    pub fn obstacle_count(&self) -> usize {
        self.obstacles.len()
    }

    fn corner(&self, i: usize, j: usize) -> Point2 {
        Point2::new(
            self.origin.x + i as f64 * self.h,
            self.origin.y + j as f64 * self.h,
        )
    }

    /// Builds and fully validates the mesh.
    pub fn build(&self) -> Result<TriMesh> {
        let (nx, ny) = (self.nx, self.ny);
        if nx == 0 || ny == 0 || !(self.h > 0.0) {
            return Err(Error::InvalidGeometry("empty grid".into()));
        }
        if self.diagonals == DiagonalStyle::MirrorX && nx % 2 != 0 {
            return Err(Error::InvalidGeometry(
                "MirrorX diagonals need an even column count".into(),
            ));
        }

        // Label cells: None = open, Some(k) = obstacle k.
        let mut label: Vec<Option<usize>> = vec![None; nx * ny];
        for (k, rects) in self.obstacles.iter().enumerate() {
            for &(c0, c1, r0, r1) in rects {
                if c0 >= c1 || r0 >= r1 || c1 > nx || r1 > ny {
                    return Err(Error::InvalidGeometry(format!(
                        "obstacle {} rect ({c0}..{c1}, {r0}..{r1}) out of grid bounds",
                        k + 1
                    )));
                }
                if c0 == 0 || r0 == 0 || c1 == nx || r1 == ny {
                    return Err(Error::InvalidGeometry(format!(
                        "obstacle {} touches the grid perimeter",
                        k + 1
                    )));
                }
                for r in r0..r1 {
                    for c in c0..c1 {
                        let slot = &mut label[r * nx + c];
                        if slot.is_some() && *slot != Some(k) {
                            return Err(Error::InvalidGeometry(format!(
                                "obstacles {} and {} overlap",
                                slot.unwrap() + 1,
                                k + 1
                            )));
                        }
                        *slot = Some(k);
                    }
                }
            }
        }
        // Distinct obstacles may not touch, not even diagonally, or the
        // extracted boundary loops would merge or pinch.
        for r in 0..ny {
            for c in 0..nx {
                let Some(k) = label[r * nx + c] else { continue };
                for dr in -1i64..=1 {
                    for dc in -1i64..=1 {
                        let (rr, cc) = (r as i64 + dr, c as i64 + dc);
                        if rr < 0 || cc < 0 || rr >= ny as i64 || cc >= nx as i64 {
                            continue;
                        }
                        if let Some(other) = label[rr as usize * nx + cc as usize] {
                            if other != k {
                                return Err(Error::InvalidGeometry(format!(
                                    "obstacles {} and {} touch",
                                    k + 1,
                                    other + 1
                                )));
                            }
                        }
                    }
                }
            }
        }

        let open_cells: usize = label.iter().filter(|l| l.is_none()).count();
        if open_cells == 0 {
            return Err(Error::InvalidGeometry("no open cells".into()));
        }

        // Corner nodes, numbered row-major over corners touching open cells.
        let mut corner_id: Vec<Option<usize>> = vec![None; (nx + 1) * (ny + 1)];
        let mut nodes: Vec<Point2> = Vec::new();
        let open = |c: i64, r: i64| -> bool {
            c >= 0
                && r >= 0
                && c < nx as i64
                && r < ny as i64
                && label[r as usize * nx + c as usize].is_none()
        };
        for j in 0..=ny {
            for i in 0..=nx {
                let (ci, rj) = (i as i64, j as i64);
                if open(ci - 1, rj - 1) || open(ci, rj - 1) || open(ci - 1, rj) || open(ci, rj) {
                    corner_id[j * (nx + 1) + i] = Some(nodes.len());
                    nodes.push(self.corner(i, j));
                }
            }
        }
        let cid = |i: usize, j: usize| corner_id[j * (nx + 1) + i].expect("corner in use");

        // Elements with midside nodes allocated per unique edge.
        let mut mid_id: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        let mut elements: Vec<[usize; 6]> = Vec::new();
        {
            let mut midside = |a: usize, b: usize, nodes: &mut Vec<Point2>| -> usize {
                let key = (a.min(b), a.max(b));
                *mid_id.entry(key).or_insert_with(|| {
                    let p = nodes[a].add(nodes[b]).scale(0.5);
                    nodes.push(p);
                    nodes.len() - 1
                })
            };
            let mut push_tri = |c: [usize; 3], nodes: &mut Vec<Point2>, out: &mut Vec<[usize; 6]>| {
                let m1 = midside(c[1], c[2], nodes);
                let m2 = midside(c[2], c[0], nodes);
                let m3 = midside(c[0], c[1], nodes);
                out.push([c[0], c[1], c[2], m1, m2, m3]);
            };
            for j in 0..ny {
                for i in 0..nx {
                    if label[j * nx + i].is_some() {
                        continue;
                    }
                    let v00 = cid(i, j);
                    let v10 = cid(i + 1, j);
                    let v11 = cid(i + 1, j + 1);
                    let v01 = cid(i, j + 1);
                    let slash = match self.diagonals {
                        DiagonalStyle::Slash => true,
                        DiagonalStyle::MirrorX => i < nx / 2,
                    };
                    if slash {
                        push_tri([v00, v10, v01], &mut nodes, &mut elements);
                        push_tri([v10, v11, v01], &mut nodes, &mut elements);
                    } else {
                        push_tri([v00, v10, v11], &mut nodes, &mut elements);
                        push_tri([v00, v11, v01], &mut nodes, &mut elements);
                    }
                }
            }
        }

        // Boundary edges: sides of open cells facing a closed cell or the
        // outside of the grid. Tag 0 for the perimeter, k+1 for obstacle k.
        let mut boundary: Vec<BoundaryEdge> = Vec::new();
        let side_tag = |c: i64, r: i64| -> Option<usize> {
            if c < 0 || r < 0 || c >= nx as i64 || r >= ny as i64 {
                Some(0)
            } else {
                label[r as usize * nx + c as usize].map(|k| k + 1)
            }
        };
        for j in 0..ny {
            for i in 0..nx {
                if label[j * nx + i].is_some() {
                    continue;
                }
                let (ci, rj) = (i as i64, j as i64);
                let sides = [
                    (side_tag(ci, rj - 1), cid(i, j), cid(i + 1, j)),
                    (side_tag(ci + 1, rj), cid(i + 1, j), cid(i + 1, j + 1)),
                    (side_tag(ci, rj + 1), cid(i + 1, j + 1), cid(i, j + 1)),
                    (side_tag(ci - 1, rj), cid(i, j + 1), cid(i, j)),
                ];
                for (tag, a, b) in sides {
                    if let Some(tag) = tag {
                        boundary.push(BoundaryEdge { a, b, tag });
                    }
                }
            }
        }

        let mesh = TriMesh::new(nodes, elements, boundary)?;
        // Loop extraction doubles as validation of the obstacle layout.
        let geom = mesh.extract_geometry()?;
        if geom.obstacle_count() != self.obstacles.len() {
            return Err(Error::InvalidGeometry(format!(
                "expected {} obstacles, boundary loops produced {}",
                self.obstacles.len(),
                geom.obstacle_count()
            )));
        }
        Ok(mesh)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn open_area_is_exact_cell_count() {
        let mut spec = GridSpec::rectangle(Point2::new(0.0, 0.0), 0.5, 10, 8);
        spec.add_obstacle(vec![(2, 4, 2, 4)]); // 4 cells
        spec.add_obstacle(vec![(6, 7, 5, 7)]); // 2 cells
        let mesh = spec.build().unwrap();
        let geom = mesh.extract_geometry().unwrap();
        let open_cells = 10 * 8 - 4 - 2;
        assert!((geom.area() - open_cells as f64 * 0.25).abs() < 1e-12);
        assert_eq!(geom.obstacle_count(), 2);
        assert_eq!(mesh.element_count(), 2 * open_cells);
    }

    #[test]
    fn touching_obstacles_are_rejected() {
        let mut spec = GridSpec::rectangle(Point2::new(0.0, 0.0), 1.0, 8, 8);
        spec.add_obstacle(vec![(2, 3, 2, 3)]);
        spec.add_obstacle(vec![(3, 4, 3, 4)]); // diagonal touch
        assert!(spec.build().is_err());
    }

    #[test]
    fn perimeter_obstacle_is_rejected() {
        let mut spec = GridSpec::rectangle(Point2::new(0.0, 0.0), 1.0, 4, 4);
        spec.add_obstacle(vec![(0, 1, 1, 2)]);
        assert!(spec.build().is_err());
    }

    #[test]
    fn wall_splitting_domain_is_rejected() {
        let mut spec = GridSpec::rectangle(Point2::new(0.0, 0.0), 1.0, 5, 5);
        // A full-height wall would disconnect the domain, but it may not
        // touch the perimeter; build a wall with one blocked gap instead:
        // obstacle from row 1..4 plus rows 0 and 4 cannot exist, so emulate
        // disconnection with two obstacles pinching the middle — which the
        // touch rule rejects before connectivity even runs.
        spec.add_obstacle(vec![(2, 3, 1, 4)]);
        spec.add_obstacle(vec![(2, 3, 4, 5)]);
        assert!(spec.build().is_err());
    }
}
