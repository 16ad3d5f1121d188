//! Quadratic-triangle FEM for the stationary potential equation
//! `alpha * lap(u) - beta * u + m = 0` with zero-flux (natural) boundary
//! conditions on every boundary.
//!
//! The discrete system is `(alpha*S + beta*M) u = M m` with the stiffness
//! matrix `S_ij = ∫ grad(N_i) . grad(N_j)` and the consistent mass matrix
//! `M_ij = ∫ N_i N_j`. Both are assembled once; the system matrix is constant,
//! so a single sparse Cholesky factorization serves every time step.

use faer::prelude::*;
use faer::sparse::{SparseColMat, Triplet};

use crate::error::{Error, Result};
use crate::geom::Point2;
use crate::mesh::{Located, TriMesh};

/// Per-node scalar field samples.
#[derive(Debug, Clone, PartialEq)]
pub struct NodalField {
    values: Vec<f64>,
}

impl NodalField {
    pub fn zeros(n: usize) -> Self {
        NodalField {
            values: vec![0.0; n],
        }
    }

    pub fn constant(n: usize, v: f64) -> Self {
        NodalField {
            values: vec![v; n],
        }
    }

    pub fn from_vec(values: Vec<f64>) -> Self {
        NodalField { values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

impl std::ops::Index<usize> for NodalField {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.values[i]
    }
}

impl std::ops::IndexMut<usize> for NodalField {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.values[i]
    }
}

/// Compressed sparse row matrix; enough for assembly, matvecs and dumping
/// entries into the factorization backend.
#[derive(Debug, Clone)]
pub struct Csr {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    vals: Vec<f64>,
}

impl Csr {
    /// Builds from COO triplets, summing duplicates. The sort is stable, so
    /// duplicates accumulate in insertion order and symmetric inputs stay
    /// symmetric bit for bit.
    fn from_triplets(n: usize, mut coo: Vec<(usize, usize, f64)>) -> Csr {
        coo.sort_by_key(|&(r, c, _)| (r, c));
        let mut row_counts = vec![0usize; n + 1];
        let mut col_idx: Vec<usize> = Vec::new();
        let mut vals: Vec<f64> = Vec::new();
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in coo {
            if last == Some((r, c)) {
                *vals.last_mut().unwrap() += v;
            } else {
                col_idx.push(c);
                vals.push(v);
                row_counts[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for i in 0..n {
            row_counts[i + 1] += row_counts[i];
        }
        Csr {
            n,
            row_ptr: row_counts,
            col_idx,
            vals,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n);
        debug_assert_eq!(y.len(), self.n);
        for r in 0..self.n {
            let mut acc = 0.0;
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.vals[k] * x[self.col_idx[k]];
            }
            y[r] = acc;
        }
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |r| {
            (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |k| (r, self.col_idx[k], self.vals[k]))
        })
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        for k in self.row_ptr[r]..self.row_ptr[r + 1] {
            if self.col_idx[k] == c {
                return self.vals[k];
            }
        }
        0.0
    }
}

/// Degree-4 quadrature on the reference triangle: 6 points, weights sum to 1,
/// exact for the quartic products of quadratic shape functions.
const QUAD_PTS: [([f64; 3], f64); 6] = {
    const A: f64 = 0.445948490915965;
    const WA: f64 = 0.223381589678011;
    const B: f64 = 0.091576213509771;
    const WB: f64 = 0.109951743655322;
    [
        ([1.0 - 2.0 * A, A, A], WA),
        ([A, 1.0 - 2.0 * A, A], WA),
        ([A, A, 1.0 - 2.0 * A], WA),
        ([1.0 - 2.0 * B, B, B], WB),
        ([B, 1.0 - 2.0 * B, B], WB),
        ([B, B, 1.0 - 2.0 * B], WB),
    ]
};

/// P2 shape functions at barycentric coordinates, ordered as the element
/// connectivity: corners 1..3, then midsides opposite each corner.
fn shape_values(l: [f64; 3]) -> [f64; 6] {
    let [l1, l2, l3] = l;
    [
        l1 * (2.0 * l1 - 1.0),
        l2 * (2.0 * l2 - 1.0),
        l3 * (2.0 * l3 - 1.0),
        4.0 * l2 * l3,
        4.0 * l3 * l1,
        4.0 * l1 * l2,
    ]
}

/// Gradients of the P2 shape functions given the (constant) barycentric
/// gradients of the element.
fn shape_gradients(l: [f64; 3], dl: [Point2; 3]) -> [Point2; 6] {
    let [l1, l2, l3] = l;
    let [g1, g2, g3] = dl;
    [
        g1.scale(4.0 * l1 - 1.0),
        g2.scale(4.0 * l2 - 1.0),
        g3.scale(4.0 * l3 - 1.0),
        g2.scale(4.0 * l3).add(g3.scale(4.0 * l2)),
        g3.scale(4.0 * l1).add(g1.scale(4.0 * l3)),
        g1.scale(4.0 * l2).add(g2.scale(4.0 * l1)),
    ]
}

/// Barycentric gradients and twice the signed area of a corner triangle.
fn bary_gradients(p: [Point2; 3]) -> ([Point2; 3], f64) {
    let [p1, p2, p3] = p;
    let det = p2.sub(p1).cross(p3.sub(p1));
    let inv = 1.0 / det;
    (
        [
            Point2::new((p2.y - p3.y) * inv, (p3.x - p2.x) * inv),
            Point2::new((p3.y - p1.y) * inv, (p1.x - p3.x) * inv),
            Point2::new((p1.y - p2.y) * inv, (p2.x - p1.x) * inv),
        ],
        det,
    )
}

/// Assembled Helmholtz system with its (lazily computed) factorization.
pub struct HelmholtzSystem {
    alpha: f64,
    beta: f64,
    stiffness: Csr,
    mass: Csr,
    system: Csr,
    factor: Option<faer::sparse::linalg::solvers::Llt<usize, f64>>,
}

impl std::fmt::Debug for HelmholtzSystem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("HelmholtzSystem")
            .field("alpha", &self.alpha)
            .field("beta", &self.beta)
            .field("n", &self.system.n())
            .field("nnz", &self.system.nnz())
            .field("factorized", &self.factor.is_some())
            .finish()
    }
}

/// Assembles stiffness, mass and the combined system matrix for the mesh.
/// Fails on elements with non-positive Jacobian.
pub fn assemble(mesh: &TriMesh, alpha: f64, beta: f64) -> Result<HelmholtzSystem> {
    if !(alpha > 0.0) || !(beta > 0.0) {
        return Err(Error::InvalidField(format!(
            "alpha and beta must be positive (got alpha={alpha}, beta={beta})"
        )));
    }
    let n = mesh.node_count();
    let mut coo_s: Vec<(usize, usize, f64)> = Vec::with_capacity(36 * mesh.element_count());
    let mut coo_m: Vec<(usize, usize, f64)> = Vec::with_capacity(36 * mesh.element_count());

    for (e, conn) in mesh.elements().iter().enumerate() {
        let corners = mesh.corner_coords(e);
        let (dl, det) = bary_gradients(corners);
        if !(det > 0.0) || !det.is_finite() {
            return Err(Error::DegenerateElement {
                element: e + 1,
                msg: format!("Jacobian determinant {det:.3e} (must be positive)"),
            });
        }
        let area = 0.5 * det;
        let mut se = [[0.0f64; 6]; 6];
        let mut me = [[0.0f64; 6]; 6];
        for (l, w) in QUAD_PTS {
            let nv = shape_values(l);
            let ng = shape_gradients(l, dl);
            let wa = w * area;
            for i in 0..6 {
                for j in 0..6 {
                    se[i][j] += wa * ng[i].dot(ng[j]);
                    me[i][j] += wa * (nv[i] * nv[j]);
                }
            }
        }
        for i in 0..6 {
            for j in 0..6 {
                coo_s.push((conn[i], conn[j], se[i][j]));
                coo_m.push((conn[i], conn[j], me[i][j]));
            }
        }
    }

    let stiffness = Csr::from_triplets(n, coo_s);
    let mass = Csr::from_triplets(n, coo_m);
    // S and M share their sparsity pattern, so K can be combined entrywise.
    debug_assert_eq!(stiffness.nnz(), mass.nnz());
    let mut system = stiffness.clone();
    for k in 0..system.vals.len() {
        system.vals[k] = alpha * stiffness.vals[k] + beta * mass.vals[k];
    }
    Ok(HelmholtzSystem {
        alpha,
        beta,
        stiffness,
        mass,
        system,
        factor: None,
    })
}

impl HelmholtzSystem {
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn node_count(&self) -> usize {
        self.system.n()
    }

    pub fn stiffness(&self) -> &Csr {
        &self.stiffness
    }

    pub fn mass(&self) -> &Csr {
        &self.mass
    }

    pub fn system_matrix(&self) -> &Csr {
        &self.system
    }

    pub fn is_factorized(&self) -> bool {
        self.factor.is_some()
    }

    /// Computes the sparse Cholesky factorization of the system matrix.
    /// Subsequent calls are no-ops; every solve reuses the stored factor.
    pub fn factorize(&mut self) -> Result<()> {
        if self.factor.is_some() {
            return Ok(());
        }
        let n = self.system.n();
        let triplets: Vec<Triplet<usize, usize, f64>> = self
            .system
            .entries()
            .map(|(r, c, v)| Triplet::new(r, c, v))
            .collect();
        let mat = SparseColMat::try_new_from_triplets(n, n, &triplets)
            .map_err(|e| Error::Factorization(format!("building sparse matrix: {e:?}")))?;
        let llt = mat.sp_cholesky(faer::Side::Lower).map_err(|e| {
            Error::Factorization(format!(
                "sparse Cholesky failed ({e:?}); system matrix of size {n} is not positive definite"
            ))
        })?;
        self.factor = Some(llt);
        Ok(())
    }

    /// Solves `K u = M m` for the nodal potential. Requires [`factorize`].
    pub fn solve_potential(&self, m: &NodalField) -> Result<NodalField> {
        let n = self.system.n();
        if m.len() != n {
            return Err(Error::InvalidField(format!(
                "density field has {} values, mesh has {} nodes",
                m.len(),
                n
            )));
        }
        if !m.is_finite() {
            return Err(Error::InvalidField(
                "density field contains non-finite values".into(),
            ));
        }
        let factor = self
            .factor
            .as_ref()
            .ok_or_else(|| Error::Factorization("solve before factorize".into()))?;

        let mut rhs = vec![0.0; n];
        self.mass.matvec(m.values(), &mut rhs);
        let rhs_mat = Mat::from_fn(n, 1, |i, _| rhs[i]);
        let sol = factor.solve(&rhs_mat);
        let u: Vec<f64> = (0..n).map(|i| sol[(i, 0)]).collect();

        // Direct-solver contract: relative residual below 1e-8.
        let mut ku = vec![0.0; n];
        self.system.matvec(&u, &mut ku);
        let rhs_norm = rhs.iter().map(|v| v * v).sum::<f64>().sqrt();
        let res_norm = ku
            .iter()
            .zip(&rhs)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        if rhs_norm > 0.0 && res_norm / rhs_norm > 1e-8 {
            return Err(Error::Factorization(format!(
                "solve residual {:.3e} exceeds 1e-8",
                res_norm / rhs_norm
            )));
        }
        Ok(NodalField::from_vec(u))
    }

    /// `∫ f dΩ` using the consistent mass matrix (`1^T M f`).
    pub fn integrate(&self, f: &NodalField) -> f64 {
        let mut y = vec![0.0; self.mass.n()];
        self.mass.matvec(f.values(), &mut y);
        y.iter().sum()
    }
}

/// Interpolates a nodal field at `p` with the P2 shape functions.
/// Returns `None` outside the domain.
pub fn eval_field(mesh: &TriMesh, field: &NodalField, p: Point2) -> Option<f64> {
    match mesh.locate(p) {
        Located::Outside => None,
        Located::Inside { element, bary } => {
            let conn = &mesh.elements()[element];
            let nv = shape_values(bary);
            Some((0..6).map(|i| nv[i] * field[conn[i]]).sum())
        }
    }
}

/// Analytic gradient of the P2 interpolant at `p`, in field units per meter.
/// Returns `None` outside the domain.
pub fn eval_gradient(mesh: &TriMesh, field: &NodalField, p: Point2) -> Option<Point2> {
    match mesh.locate(p) {
        Located::Outside => None,
        Located::Inside { element, bary } => {
            let conn = &mesh.elements()[element];
            let (dl, _) = bary_gradients(mesh.corner_coords(element));
            let ng = shape_gradients(bary, dl);
            let mut g = Point2::new(0.0, 0.0);
            for i in 0..6 {
                g = g.add(ng[i].scale(field[conn[i]]));
            }
            Some(g)
        }
    }
}
