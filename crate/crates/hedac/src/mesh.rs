//! Six-node quadratic triangle meshes: file format, validation, point
//! location and reconstruction of the domain geometry from tagged boundary
//! edges.
//!
//! Mesh file format (plain text, whitespace separated, `#` starts a comment):
//!
//! ```text
//! hedac-mesh v1
//! NODES n
//! id x y                 # ids are 1-based
//! ELEMENTS m
//! id n1 n2 n3 n4 n5 n6   # corners then midsides opposite each corner
//! BOUNDARY k
//! node_a node_b tag      # corner nodes; tag 0 = outer, j >= 1 = obstacle j
//! ```

use std::collections::BTreeMap;
use std::io::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::geom::{DomainGeometry, Point2, Polygon};

/// Tolerance for midside nodes sitting at their edge midpoint.
pub const MIDSIDE_TOL: f64 = 1e-9;

/// Barycentric slack accepted by point location.
pub const LOCATE_TOL: f64 = 1e-9;

/// One tagged boundary edge between two corner nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundaryEdge {
    pub a: usize,
    pub b: usize,
    pub tag: usize,
}

/// Conforming mesh of 6-node quadratic triangles.
///
/// Element connectivity is `[c1, c2, c3, m1, m2, m3]` where `m1` is the
/// midside opposite corner 1 (on edge `c2-c3`), `m2` opposite corner 2 and
/// `m3` opposite corner 3. Immutable after construction; all queries are pure.
#[derive(Debug)]
pub struct TriMesh {
    nodes: Vec<Point2>,
    elements: Vec<[usize; 6]>,
    boundary_edges: Vec<BoundaryEdge>,
    locator: Locator,
}

/// Result of a point-location query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Located {
    Inside { element: usize, bary: [f64; 3] },
    Outside,
}

impl TriMesh {
    /// Validates the raw mesh data and builds the element locator.
    ///
    /// Checks: index ranges, midside placement (within [`MIDSIDE_TOL`]),
    /// conformity (shared edges share the midside node; at most two elements
    /// per edge), boundary consistency (the tagged edges are exactly the
    /// edges with a single incident element) and element connectivity.
    pub fn new(
        nodes: Vec<Point2>,
        elements: Vec<[usize; 6]>,
        boundary_edges: Vec<BoundaryEdge>,
    ) -> Result<TriMesh> {
        let n = nodes.len();
        if n == 0 || elements.is_empty() {
            return Err(Error::InvalidMesh("mesh has no nodes or no elements".into()));
        }
        for (i, p) in nodes.iter().enumerate() {
            if !p.is_finite() {
                return Err(Error::InvalidMesh(format!(
                    "node {} has non-finite coordinates",
                    i + 1
                )));
            }
        }
        for (e, conn) in elements.iter().enumerate() {
            for &id in conn {
                if id >= n {
                    return Err(Error::InvalidMesh(format!(
                        "element {} references node {} but the mesh has {} nodes",
                        e + 1,
                        id + 1,
                        n
                    )));
                }
            }
            let mut sorted = *conn;
            sorted.sort_unstable();
            if sorted.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::InvalidMesh(format!(
                    "element {} repeats a node",
                    e + 1
                )));
            }
            // Midside k must be the midpoint of the edge opposite corner k.
            for k in 0..3 {
                let (a, b) = (conn[(k + 1) % 3], conn[(k + 2) % 3]);
                let mid = nodes[conn[3 + k]];
                let expect = nodes[a].add(nodes[b]).scale(0.5);
                if mid.dist(expect) > MIDSIDE_TOL {
                    return Err(Error::InvalidMesh(format!(
                        "element {}: midside node {} is {:.3e} m away from the midpoint of its edge",
                        e + 1,
                        conn[3 + k] + 1,
                        mid.dist(expect)
                    )));
                }
            }
        }

        // Edge table keyed by the sorted corner pair.
        struct EdgeInfo {
            midside: usize,
            count: usize,
            first_element: usize,
        }
        let mut edges: BTreeMap<(usize, usize), EdgeInfo> = BTreeMap::new();
        for (e, conn) in elements.iter().enumerate() {
            for k in 0..3 {
                let (a, b) = (conn[(k + 1) % 3], conn[(k + 2) % 3]);
                let key = (a.min(b), a.max(b));
                let mid = conn[3 + k];
                match edges.get_mut(&key) {
                    None => {
                        edges.insert(
                            key,
                            EdgeInfo {
                                midside: mid,
                                count: 1,
                                first_element: e,
                            },
                        );
                    }
                    Some(info) => {
                        if info.midside != mid {
                            return Err(Error::InvalidMesh(format!(
                                "edge {}-{} has two different midside nodes (elements {} and {})",
                                key.0 + 1,
                                key.1 + 1,
                                info.first_element + 1,
                                e + 1
                            )));
                        }
                        info.count += 1;
                        if info.count > 2 {
                            return Err(Error::InvalidMesh(format!(
                                "edge {}-{} is shared by more than two elements",
                                key.0 + 1,
                                key.1 + 1
                            )));
                        }
                    }
                }
            }
        }

        // The tagged boundary must be exactly the set of single-element edges.
        let mut tagged: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        for be in &boundary_edges {
            if be.a >= n || be.b >= n {
                return Err(Error::InvalidMesh(format!(
                    "boundary edge {}-{} references a missing node",
                    be.a + 1,
                    be.b + 1
                )));
            }
            let key = (be.a.min(be.b), be.a.max(be.b));
            if tagged.insert(key, be.tag).is_some() {
                return Err(Error::InvalidMesh(format!(
                    "boundary edge {}-{} listed twice",
                    key.0 + 1,
                    key.1 + 1
                )));
            }
        }
        for (key, info) in &edges {
            let on_boundary = info.count == 1;
            let is_tagged = tagged.contains_key(key);
            if on_boundary && !is_tagged {
                return Err(Error::InvalidMesh(format!(
                    "edge {}-{} lies on the boundary but carries no tag",
                    key.0 + 1,
                    key.1 + 1
                )));
            }
            if !on_boundary && is_tagged {
                return Err(Error::InvalidMesh(format!(
                    "interior edge {}-{} is tagged as boundary",
                    key.0 + 1,
                    key.1 + 1
                )));
            }
        }
        for key in tagged.keys() {
            if !edges.contains_key(key) {
                return Err(Error::InvalidMesh(format!(
                    "boundary edge {}-{} does not belong to any element",
                    key.0 + 1,
                    key.1 + 1
                )));
            }
        }

        // Connectivity: elements joined over shared edges must form one body.
        let mut uf = UnionFind::new(elements.len());
        let mut edge_first: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        for (e, conn) in elements.iter().enumerate() {
            for k in 0..3 {
                let (a, b) = (conn[(k + 1) % 3], conn[(k + 2) % 3]);
                let key = (a.min(b), a.max(b));
                match edge_first.get(&key) {
                    None => {
                        edge_first.insert(key, e);
                    }
                    Some(&other) => uf.union(e, other),
                }
            }
        }
        let root = uf.find(0);
        if (0..elements.len()).any(|e| uf.find(e) != root) {
            return Err(Error::InvalidMesh(
                "mesh is disconnected: the accessible region must be a single connected domain"
                    .into(),
            ));
        }

        let locator = Locator::build(&nodes, &elements);
        Ok(TriMesh {
            nodes,
            elements,
            boundary_edges,
            locator,
        })
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn element_count(&self) -> usize {
        self.elements.len()
    }

    pub fn nodes(&self) -> &[Point2] {
        &self.nodes
    }

    pub fn elements(&self) -> &[[usize; 6]] {
        &self.elements
    }

    pub fn boundary_edges(&self) -> &[BoundaryEdge] {
        &self.boundary_edges
    }

    pub fn corner_coords(&self, element: usize) -> [Point2; 3] {
        let c = &self.elements[element];
        [self.nodes[c[0]], self.nodes[c[1]], self.nodes[c[2]]]
    }

    /// Locates the element containing `p` and its barycentric coordinates
    /// with respect to the element corners. Ties on shared edges resolve to
    /// the lowest element index.
    pub fn locate(&self, p: Point2) -> Located {
        for &e in self.locator.candidates(p) {
            let e = e as usize;
            let [a, b, c] = self.corner_coords(e);
            let det = b.sub(a).cross(c.sub(a));
            if det <= 0.0 {
                continue;
            }
            let l1 = b.sub(p).cross(c.sub(p)) / det;
            let l2 = c.sub(p).cross(a.sub(p)) / det;
            let l3 = 1.0 - l1 - l2;
            if l1 >= -LOCATE_TOL && l2 >= -LOCATE_TOL && l3 >= -LOCATE_TOL {
                return Located::Inside {
                    element: e,
                    bary: [l1, l2, l3],
                };
            }
        }
        Located::Outside
    }

    /// Rebuilds the domain polygons by chaining tagged boundary edges into
    /// closed loops. Tag 0 must trace the outer boundary; tags `1..=n_o` one
    /// loop per obstacle. Collinear runs are merged into single polygon edges.
    pub fn extract_geometry(&self) -> Result<DomainGeometry> {
        let max_tag = self
            .boundary_edges
            .iter()
            .map(|e| e.tag)
            .max()
            .unwrap_or(0);
        let mut outer: Option<Polygon> = None;
        let mut obstacles = Vec::new();
        for tag in 0..=max_tag {
            let edges: Vec<&BoundaryEdge> = self
                .boundary_edges
                .iter()
                .filter(|e| e.tag == tag)
                .collect();
            if edges.is_empty() {
                return Err(Error::InvalidMesh(format!(
                    "boundary tag {tag} has no edges (tags must be contiguous)"
                )));
            }
            let loop_nodes = chain_single_loop(&edges, tag)?;
            let pts: Vec<Point2> = loop_nodes.iter().map(|&i| self.nodes[i]).collect();
            let poly = Polygon::new(merge_collinear(pts))?;
            if tag == 0 {
                outer = Some(poly);
            } else {
                obstacles.push(poly);
            }
        }
        let outer = outer.ok_or_else(|| Error::InvalidMesh("no outer boundary (tag 0)".into()))?;
        DomainGeometry::new(outer, obstacles)
    }
}

/// Chains the edges of one tag into a single closed loop of node indices.
fn chain_single_loop(edges: &[&BoundaryEdge], tag: usize) -> Result<Vec<usize>> {
    let mut adj: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for e in edges {
        adj.entry(e.a).or_default().push(e.b);
        adj.entry(e.b).or_default().push(e.a);
    }
    for (node, nbrs) in &adj {
        if nbrs.len() != 2 {
            return Err(Error::InvalidMesh(format!(
                "boundary node {} of tag {tag} has {} incident edges (expected 2)",
                node + 1,
                nbrs.len()
            )));
        }
    }
    let start = *adj.keys().next().unwrap();
    let mut loop_nodes = vec![start];
    let mut prev = start;
    let mut cur = adj[&start][0];
    while cur != start {
        loop_nodes.push(cur);
        let nbrs = &adj[&cur];
        let next = if nbrs[0] == prev { nbrs[1] } else { nbrs[0] };
        prev = cur;
        cur = next;
        if loop_nodes.len() > edges.len() {
            return Err(Error::InvalidMesh(format!(
                "boundary tag {tag} does not close into a loop"
            )));
        }
    }
    if loop_nodes.len() != edges.len() {
        return Err(Error::InvalidMesh(format!(
            "boundary tag {tag} forms more than one loop"
        )));
    }
    Ok(loop_nodes)
}

fn merge_collinear(pts: Vec<Point2>) -> Vec<Point2> {
    let n = pts.len();
    if n < 3 {
        return pts;
    }
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let prev = pts[(i + n - 1) % n];
        let cur = pts[i];
        let next = pts[(i + 1) % n];
        let cross = cur.sub(prev).cross(next.sub(cur));
        let scale = cur.sub(prev).norm() * next.sub(cur).norm();
        if cross.abs() > 1e-12 * scale.max(1e-300) {
            out.push(cur);
        }
    }
    if out.len() < 3 {
        pts
    } else {
        out
    }
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let ra = self.find(a);
        let rb = self.find(b);
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Uniform background grid bucketing elements by bounding box for O(1)
/// average point location.
#[derive(Debug)]
struct Locator {
    x0: f64,
    y0: f64,
    inv_cell: f64,
    nx: usize,
    ny: usize,
    cells: Vec<Vec<u32>>,
}

impl Locator {
    fn build(nodes: &[Point2], elements: &[[usize; 6]]) -> Locator {
        let mut lo = nodes[0];
        let mut hi = nodes[0];
        for p in nodes {
            lo.x = lo.x.min(p.x);
            lo.y = lo.y.min(p.y);
            hi.x = hi.x.max(p.x);
            hi.y = hi.y.max(p.y);
        }
        let extent = (hi.x - lo.x).max(hi.y - lo.y).max(1e-12);
        // Aim for roughly one element per cell.
        let target = (elements.len() as f64).sqrt().ceil() as usize;
        let n = target.clamp(1, 2048);
        let cell = extent / n as f64;
        let nx = (((hi.x - lo.x) / cell).ceil() as usize).max(1);
        let ny = (((hi.y - lo.y) / cell).ceil() as usize).max(1);
        let mut cells = vec![Vec::new(); nx * ny];
        let inv_cell = 1.0 / cell;
        for (e, conn) in elements.iter().enumerate() {
            let pts = [nodes[conn[0]], nodes[conn[1]], nodes[conn[2]]];
            let exl = pts.iter().map(|p| p.x).fold(f64::INFINITY, f64::min);
            let exh = pts.iter().map(|p| p.x).fold(f64::NEG_INFINITY, f64::max);
            let eyl = pts.iter().map(|p| p.y).fold(f64::INFINITY, f64::min);
            let eyh = pts.iter().map(|p| p.y).fold(f64::NEG_INFINITY, f64::max);
            let ix0 = (((exl - lo.x) * inv_cell).floor() as isize).clamp(0, nx as isize - 1) as usize;
            let ix1 = (((exh - lo.x) * inv_cell).floor() as isize).clamp(0, nx as isize - 1) as usize;
            let iy0 = (((eyl - lo.y) * inv_cell).floor() as isize).clamp(0, ny as isize - 1) as usize;
            let iy1 = (((eyh - lo.y) * inv_cell).floor() as isize).clamp(0, ny as isize - 1) as usize;
            for iy in iy0..=iy1 {
                for ix in ix0..=ix1 {
                    cells[iy * nx + ix].push(e as u32);
                }
            }
        }
        Locator {
            x0: lo.x,
            y0: lo.y,
            inv_cell,
            nx,
            ny,
            cells,
        }
    }

    fn candidates(&self, p: Point2) -> &[u32] {
        let ix = ((p.x - self.x0) * self.inv_cell).floor();
        let iy = ((p.y - self.y0) * self.inv_cell).floor();
        if ix < 0.0 || iy < 0.0 || !ix.is_finite() || !iy.is_finite() {
            return &[];
        }
        let (ix, iy) = (ix as usize, iy as usize);
        if ix >= self.nx || iy >= self.ny {
            return &[];
        }
        &self.cells[iy * self.nx + ix]
    }
}

/// Loads and validates a mesh file, returning the reconstructed domain
/// geometry together with the mesh.
pub fn load_mesh(path: impl AsRef<Path>) -> Result<(DomainGeometry, TriMesh)> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mesh = parse_mesh(&text, path)?;
    let geometry = mesh.extract_geometry()?;
    Ok((geometry, mesh))
}

fn parse_mesh(text: &str, path: &Path) -> Result<TriMesh> {
    let err = |line: usize, msg: String| Error::MeshParse {
        path: path.to_path_buf(),
        line,
        msg,
    };
    // Strip comments, keep (line_number, tokens).
    let mut lines = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let body = raw.split('#').next().unwrap_or("");
        let tokens: Vec<&str> = body.split_whitespace().collect();
        if !tokens.is_empty() {
            lines.push((idx + 1, tokens));
        }
    }
    let mut it = lines.into_iter();

    let (ln, header) = it
        .next()
        .ok_or_else(|| err(0, "empty mesh file".into()))?;
    if header != ["hedac-mesh", "v1"] {
        return Err(err(ln, "expected header `hedac-mesh v1`".into()));
    }

    fn section<'a>(
        it: &mut impl Iterator<Item = (usize, Vec<&'a str>)>,
        name: &str,
        err: &impl Fn(usize, String) -> Error,
    ) -> Result<usize> {
        let (ln, tokens) = it
            .next()
            .ok_or_else(|| err(0, format!("missing `{name}` section")))?;
        if tokens.len() != 2 || tokens[0] != name {
            return Err(err(ln, format!("expected `{name} <count>`")));
        }
        tokens[1]
            .parse::<usize>()
            .map_err(|_| err(ln, format!("bad count in `{name}` header")))
    }

    let n_nodes = section(&mut it, "NODES", &err)?;
    let mut nodes: Vec<Option<Point2>> = vec![None; n_nodes];
    for _ in 0..n_nodes {
        let (ln, t) = it
            .next()
            .ok_or_else(|| err(0, "unexpected end of file in NODES".into()))?;
        if t.len() != 3 {
            return Err(err(ln, "expected `id x y`".into()));
        }
        let id: usize = t[0].parse().map_err(|_| err(ln, "bad node id".into()))?;
        if id == 0 || id > n_nodes {
            return Err(err(ln, format!("node id {id} out of range 1..={n_nodes}")));
        }
        let x: f64 = t[1].parse().map_err(|_| err(ln, "bad x coordinate".into()))?;
        let y: f64 = t[2].parse().map_err(|_| err(ln, "bad y coordinate".into()))?;
        if !x.is_finite() || !y.is_finite() {
            return Err(err(ln, "non-finite node coordinates".into()));
        }
        if nodes[id - 1].replace(Point2::new(x, y)).is_some() {
            return Err(err(ln, format!("duplicate node id {id}")));
        }
    }
    let nodes: Vec<Point2> = nodes
        .into_iter()
        .enumerate()
        .map(|(i, p)| p.ok_or_else(|| err(0, format!("node id {} missing", i + 1))))
        .collect::<Result<_>>()?;

    let n_elems = section(&mut it, "ELEMENTS", &err)?;
    let mut elements: Vec<Option<[usize; 6]>> = vec![None; n_elems];
    for _ in 0..n_elems {
        let (ln, t) = it
            .next()
            .ok_or_else(|| err(0, "unexpected end of file in ELEMENTS".into()))?;
        if t.len() != 7 {
            return Err(err(ln, "expected `id n1 n2 n3 n4 n5 n6`".into()));
        }
        let id: usize = t[0].parse().map_err(|_| err(ln, "bad element id".into()))?;
        if id == 0 || id > n_elems {
            return Err(err(ln, format!("element id {id} out of range 1..={n_elems}")));
        }
        let mut conn = [0usize; 6];
        for (k, tok) in t[1..].iter().enumerate() {
            let v: usize = tok.parse().map_err(|_| err(ln, "bad node index".into()))?;
            if v == 0 {
                return Err(err(ln, "node indices are 1-based".into()));
            }
            conn[k] = v - 1;
        }
        if elements[id - 1].replace(conn).is_some() {
            return Err(err(ln, format!("duplicate element id {id}")));
        }
    }
    let elements: Vec<[usize; 6]> = elements
        .into_iter()
        .enumerate()
        .map(|(i, e)| e.ok_or_else(|| err(0, format!("element id {} missing", i + 1))))
        .collect::<Result<_>>()?;

    let n_bnd = section(&mut it, "BOUNDARY", &err)?;
    let mut boundary = Vec::with_capacity(n_bnd);
    for _ in 0..n_bnd {
        let (ln, t) = it
            .next()
            .ok_or_else(|| err(0, "unexpected end of file in BOUNDARY".into()))?;
        if t.len() != 3 {
            return Err(err(ln, "expected `node_a node_b tag`".into()));
        }
        let a: usize = t[0].parse().map_err(|_| err(ln, "bad node index".into()))?;
        let b: usize = t[1].parse().map_err(|_| err(ln, "bad node index".into()))?;
        let tag: usize = t[2].parse().map_err(|_| err(ln, "bad boundary tag".into()))?;
        if a == 0 || b == 0 {
            return Err(err(ln, "node indices are 1-based".into()));
        }
        boundary.push(BoundaryEdge {
            a: a - 1,
            b: b - 1,
            tag,
        });
    }
    if let Some((ln, _)) = it.next() {
        return Err(err(ln, "trailing content after BOUNDARY section".into()));
    }

    TriMesh::new(nodes, elements, boundary)
}

/// Writes a mesh in the `hedac-mesh v1` format.
pub fn write_mesh_file(mesh: &TriMesh, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    let res: std::io::Result<()> = (|| {
        writeln!(w, "hedac-mesh v1")?;
        writeln!(w, "NODES {}", mesh.node_count())?;
        for (i, p) in mesh.nodes().iter().enumerate() {
            writeln!(w, "{} {} {}", i + 1, p.x, p.y)?;
        }
        writeln!(w, "ELEMENTS {}", mesh.element_count())?;
        for (i, c) in mesh.elements().iter().enumerate() {
            writeln!(
                w,
                "{} {} {} {} {} {} {}",
                i + 1,
                c[0] + 1,
                c[1] + 1,
                c[2] + 1,
                c[3] + 1,
                c[4] + 1,
                c[5] + 1
            )?;
        }
        writeln!(w, "BOUNDARY {}", mesh.boundary_edges().len())?;
        for e in mesh.boundary_edges() {
            writeln!(w, "{} {} {}", e.a + 1, e.b + 1, e.tag)?;
        }
        w.flush()
    })();
    res.map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gridmesh::{DiagonalStyle, GridSpec};
    use proptest::prelude::*;

    /// Unit square split into two P2 triangles: 9 nodes, 2 elements.
    pub(crate) fn two_triangle_square() -> TriMesh {
        GridSpec::rectangle(Point2::new(0.0, 0.0), 1.0, 1, 1)
            .build()
            .unwrap()
    }

    fn square_with_hole() -> TriMesh {
        // 8x8 cells of h = 0.25 (2x2 domain), 2x2-cell hole in the middle.
        let mut spec = GridSpec::rectangle(Point2::new(0.0, 0.0), 0.25, 8, 8);
        spec.add_obstacle(vec![(3, 5, 3, 5)]);
        spec.build().unwrap()
    }

    #[test]
    fn two_triangle_square_counts() {
        let mesh = two_triangle_square();
        assert_eq!(mesh.element_count(), 2);
        assert_eq!(mesh.node_count(), 9);
        assert_eq!(mesh.boundary_edges().len(), 4);
    }

    #[test]
    fn out_of_range_node_is_rejected() {
        let mesh = two_triangle_square();
        let mut elements = mesh.elements().to_vec();
        elements[1][4] = mesh.node_count() + 4; // node N+5, 1-based
        let res = TriMesh::new(
            mesh.nodes().to_vec(),
            elements,
            mesh.boundary_edges().to_vec(),
        );
        assert!(matches!(res, Err(Error::InvalidMesh(_))), "{res:?}");
    }

    #[test]
    fn misplaced_midside_is_rejected() {
        let mesh = two_triangle_square();
        let mut nodes = mesh.nodes().to_vec();
        // Perturb one midside node beyond tolerance.
        let mid = mesh.elements()[0][3];
        nodes[mid].x += 1e-6;
        let res = TriMesh::new(
            nodes,
            mesh.elements().to_vec(),
            mesh.boundary_edges().to_vec(),
        );
        assert!(res.is_err());
    }

    #[test]
    fn missing_boundary_tag_is_rejected() {
        let mesh = two_triangle_square();
        let mut bnd = mesh.boundary_edges().to_vec();
        bnd.pop();
        let res = TriMesh::new(mesh.nodes().to_vec(), mesh.elements().to_vec(), bnd);
        assert!(res.is_err());
    }

    #[test]
    fn locate_centroid_and_corner() {
        let mesh = two_triangle_square();
        let [a, b, c] = mesh.corner_coords(0);
        let centroid = a.add(b).add(c).scale(1.0 / 3.0);
        match mesh.locate(centroid) {
            Located::Inside { element, bary } => {
                assert_eq!(element, 0);
                for l in bary {
                    assert!((l - 1.0 / 3.0).abs() < 1e-12);
                }
            }
            Located::Outside => panic!("centroid not found"),
        }
        // A corner node: one barycentric coordinate equals 1.
        match mesh.locate(a) {
            Located::Inside { bary, .. } => {
                assert!(bary.iter().any(|l| (l - 1.0).abs() < 1e-12));
                assert!((bary.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            }
            Located::Outside => panic!("corner not found"),
        }
    }

    #[test]
    fn locate_inside_hole_is_outside() {
        let mesh = square_with_hole();
        assert_eq!(mesh.locate(Point2::new(1.0, 1.0)), Located::Outside);
        assert_eq!(mesh.locate(Point2::new(5.0, 5.0)), Located::Outside);
    }

    #[test]
    fn geometry_extraction_square_with_hole() {
        let mesh = square_with_hole();
        let geom = mesh.extract_geometry().unwrap();
        assert_eq!(geom.obstacle_count(), 1);
        // Outer 2x2 minus 0.5x0.5 hole.
        assert!((geom.area() - (4.0 - 0.25)).abs() < 1e-12);
        // Collinear merging reduces the outer rectangle to 4 corners.
        assert_eq!(geom.outer().len(), 4);
        assert!(geom.contains(Point2::new(0.2, 0.2)));
        assert!(!geom.contains(Point2::new(1.0, 1.0)));
    }

    #[test]
    fn file_roundtrip() {
        let mesh = square_with_hole();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("roundtrip.mesh");
        write_mesh_file(&mesh, &path).unwrap();
        let (geom, loaded) = load_mesh(&path).unwrap();
        assert_eq!(loaded.node_count(), mesh.node_count());
        assert_eq!(loaded.element_count(), mesh.element_count());
        assert_eq!(loaded.boundary_edges().len(), mesh.boundary_edges().len());
        assert!((geom.area() - 3.75).abs() < 1e-12);
    }

    #[test]
    fn parse_rejects_bad_header_and_indices() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.mesh");
        std::fs::write(&path, "not-a-mesh\n").unwrap();
        assert!(matches!(load_mesh(&path), Err(Error::MeshParse { .. })));

        // Element referencing a node beyond NODES count.
        let text = "hedac-mesh v1\nNODES 1\n1 0 0\nELEMENTS 1\n1 1 2 3 4 5 6\nBOUNDARY 0\n";
        std::fs::write(&path, text).unwrap();
        assert!(load_mesh(&path).is_err());
    }

    #[test]
    fn disconnected_mesh_is_rejected() {
        // Two separate squares, no shared nodes.
        let a = GridSpec::rectangle(Point2::new(0.0, 0.0), 1.0, 1, 1)
            .build()
            .unwrap();
        let mut nodes = a.nodes().to_vec();
        let mut elements = a.elements().to_vec();
        let mut boundary = a.boundary_edges().to_vec();
        let off = nodes.len();
        for p in a.nodes() {
            nodes.push(Point2::new(p.x + 10.0, p.y));
        }
        for conn in a.elements() {
            let mut c = *conn;
            for v in &mut c {
                *v += off;
            }
            elements.push(c);
        }
        for e in a.boundary_edges() {
            boundary.push(BoundaryEdge {
                a: e.a + off,
                b: e.b + off,
                tag: e.tag,
            });
        }
        let res = TriMesh::new(nodes, elements, boundary);
        assert!(matches!(res, Err(Error::InvalidMesh(msg)) if msg.contains("disconnected")));
    }

    proptest! {
        /// Barycentric interpolation of the corner coordinates reproduces the
        /// query point.
        #[test]
        fn locate_roundtrips_coordinates(x in 0.01f64..1.99, y in 0.01f64..1.99) {
            let mesh = square_with_hole();
            let p = Point2::new(x, y);
            match mesh.locate(p) {
                Located::Inside { element, bary } => {
                    let [a, b, c] = mesh.corner_coords(element);
                    let q = a.scale(bary[0]).add(b.scale(bary[1])).add(c.scale(bary[2]));
                    prop_assert!(q.dist(p) < 1e-9);
                }
                Located::Outside => {
                    // Must actually be in the hole (or on its rim).
                    let geom = mesh.extract_geometry().unwrap();
                    prop_assert!(
                        !geom.contains(p) || geom.distance_to_boundary(p) < 1e-9
                    );
                }
            }
        }
    }

    #[test]
    fn mirror_grid_is_symmetric() {
        let spec = GridSpec::with_diagonals(
            Point2::new(0.0, 0.0),
            0.125,
            16,
            16,
            DiagonalStyle::MirrorX,
        );
        let mesh = spec.build().unwrap();
        // Every node's mirror about x = 1 is also a node, bit-exactly.
        let mut coords: Vec<(u64, u64)> = mesh
            .nodes()
            .iter()
            .map(|p| (p.x.to_bits(), p.y.to_bits()))
            .collect();
        coords.sort_unstable();
        for p in mesh.nodes() {
            let m = Point2::new(2.0 - p.x, p.y);
            assert!(
                coords.binary_search(&(m.x.to_bits(), m.y.to_bits())).is_ok(),
                "mirror of ({}, {}) missing",
                p.x,
                p.y
            );
        }
    }
}
