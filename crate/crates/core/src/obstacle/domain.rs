//! Convex domains and their node grids.

use serde::{Deserialize, Serialize};

use crate::error::{check_positive, Error, Result};
use crate::geom::Vec2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Shape {
    UnitDisk,
    /// Axis-aligned ellipse with semi-axes `ax`, `ay`.
    Ellipse { ax: f64, ay: f64 },
    /// Convex polygon, vertices counter-clockwise.
    ConvexPolygon { vertices: Vec<Vec2> },
}

impl Shape {
    pub fn ellipse(ax: f64, ay: f64) -> Result<Self> {
        check_positive("ax", ax)?;
        check_positive("ay", ay)?;
        Ok(Shape::Ellipse { ax, ay })
    }

    /// Validates convexity; clockwise input is reversed.
    pub fn polygon(mut vertices: Vec<Vec2>) -> Result<Self> {
        let n = vertices.len();
        if n < 3 {
            return Err(Error::InvalidInput("polygon needs at least 3 vertices".into()));
        }
        for v in &vertices {
            if !(v.x.is_finite() && v.y.is_finite()) {
                return Err(Error::NonFinite("vertex"));
            }
        }
        let area: f64 = (0..n).map(|i| vertices[i].cross(vertices[(i + 1) % n])).sum::<f64>() / 2.0;
        if area == 0.0 {
            return Err(Error::InvalidInput("polygon has zero area".into()));
        }
        if area < 0.0 {
            vertices.reverse();
        }
        let scale = vertices.iter().fold(0.0f64, |m, v| m.max(v.norm_sq()));
        for i in 0..n {
            let (a, b, c) = (vertices[i], vertices[(i + 1) % n], vertices[(i + 2) % n]);
            if (b - a).cross(c - b) <= 1e-14 * scale {
                return Err(Error::InvalidInput(format!("polygon is not strictly convex at vertex {}", (i + 1) % n)));
            }
        }
        Ok(Shape::ConvexPolygon { vertices })
    }

    /// Exact area of the continuous domain.
    pub fn area(&self) -> f64 {
        match self {
            Shape::UnitDisk => std::f64::consts::PI,
            Shape::Ellipse { ax, ay } => std::f64::consts::PI * ax * ay,
            Shape::ConvexPolygon { vertices } => {
                let n = vertices.len();
                (0..n).map(|i| vertices[i].cross(vertices[(i + 1) % n])).sum::<f64>() / 2.0
            }
        }
    }

    /// Half-widths of the axis-aligned bounding box and its centre.
    fn bounds(&self) -> (Vec2, Vec2) {
        match self {
            Shape::UnitDisk => (Vec2::ZERO, Vec2::new(1.0, 1.0)),
            Shape::Ellipse { ax, ay } => (Vec2::ZERO, Vec2::new(*ax, *ay)),
            Shape::ConvexPolygon { vertices } => {
                let (mut lo, mut hi) = (vertices[0], vertices[0]);
                for v in vertices {
                    lo = Vec2::new(lo.x.min(v.x), lo.y.min(v.y));
                    hi = Vec2::new(hi.x.max(v.x), hi.y.max(v.y));
                }
                (0.5 * (lo + hi), 0.5 * (hi - lo))
            }
        }
    }

    pub fn contains(&self, p: Vec2) -> bool {
        match self {
            Shape::UnitDisk => p.norm_sq() < 1.0,
            Shape::Ellipse { ax, ay } => (p.x / ax).powi(2) + (p.y / ay).powi(2) < 1.0,
            Shape::ConvexPolygon { vertices } => {
                let n = vertices.len();
                (0..n).all(|i| {
                    let (a, b) = (vertices[i], vertices[(i + 1) % n]);
                    (b - a).cross(p - a) > 0.0
                })
            }
        }
    }

    /// Distance from interior point `p` to the boundary along unit direction `d`.
    pub fn ray_exit(&self, p: Vec2, d: Vec2) -> f64 {
        let conic = |ax: f64, ay: f64| {
            let a = (d.x / ax).powi(2) + (d.y / ay).powi(2);
            let b = 2.0 * (p.x * d.x / (ax * ax) + p.y * d.y / (ay * ay));
            let c = (p.x / ax).powi(2) + (p.y / ay).powi(2) - 1.0;
            let disc = (b * b - 4.0 * a * c).max(0.0).sqrt();
            // stable root of a t^2 + b t + c with c < 0
            if b >= 0.0 {
                2.0 * c / (-b - disc)
            } else {
                (-b + disc) / (2.0 * a)
            }
        };
        match self {
            Shape::UnitDisk => conic(1.0, 1.0),
            Shape::Ellipse { ax, ay } => conic(*ax, *ay),
            Shape::ConvexPolygon { vertices } => {
                let n = vertices.len();
                let mut t = f64::INFINITY;
                for i in 0..n {
                    let (a, b) = (vertices[i], vertices[(i + 1) % n]);
                    let e = b - a;
                    // outward normal of a counter-clockwise edge
                    let nrm = Vec2::new(e.y, -e.x);
                    let nd = nrm.dot(d);
                    if nd > 0.0 {
                        t = t.min(nrm.dot(a - p) / nd);
                    }
                }
                t
            }
        }
    }
}

/// Directions of the four stencil neighbours: east, west, north, south.
pub(crate) const DIRS: [Vec2; 4] = [Vec2::new(1.0, 0.0), Vec2::new(-1.0, 0.0), Vec2::new(0.0, 1.0), Vec2::new(0.0, -1.0)];

const NO_NODE: u32 = u32::MAX;

/// Nodes closer to the boundary than this fraction of `h` are treated as
/// boundary points.
const MIN_THETA: f64 = 1e-6;

/// An interior grid node with its Shortley-Weller stencil.
#[derive(Debug, Clone, Copy)]
pub struct Node {
    pub i: i32,
    pub j: i32,
    pub x: Vec2,
    /// Neighbour index per direction, `None` when the arm ends on the boundary.
    pub nbr: [Option<u32>; 4],
    /// Arm lengths (`h`, or the distance to the boundary).
    pub arm: [f64; 4],
    /// Off-diagonal weights of `-Delta_h + 1`, sign flipped.
    pub coef: [f64; 4],
    pub diag: f64,
    /// Sum of the weights of boundary arms.
    pub bnd: f64,
}

/// Nodes `(i h, j h)` strictly inside the domain.
#[derive(Debug, Clone)]
pub struct DomainGrid {
    pub shape: Shape,
    pub h: f64,
    nodes: Vec<Node>,
    lookup: Vec<u32>,
    i0: i32,
    j0: i32,
    nx: usize,
    ny: usize,
    /// Inradius estimate used to pick the relaxation factor.
    pub(crate) width: f64,
}

impl DomainGrid {
    pub fn new(shape: Shape, h: f64) -> Result<Self> {
        check_positive("h", h)?;
        let (c, half) = shape.bounds();
        let i0 = ((c.x - half.x) / h).floor() as i32 - 1;
        let i1 = ((c.x + half.x) / h).ceil() as i32 + 1;
        let j0 = ((c.y - half.y) / h).floor() as i32 - 1;
        let j1 = ((c.y + half.y) / h).ceil() as i32 + 1;
        let nx = (i1 - i0 + 1) as usize;
        let ny = (j1 - j0 + 1) as usize;
        if nx.saturating_mul(ny) > 50_000_000 {
            return Err(Error::InvalidInput(format!("grid with spacing {h} is too large")));
        }
        let mut lookup = vec![NO_NODE; nx * ny];
        let mut nodes = Vec::new();
        for j in j0..=j1 {
            for i in i0..=i1 {
                let x = Vec2::new(i as f64 * h, j as f64 * h);
                if !shape.contains(x) {
                    continue;
                }
                let mut arm = [h; 4];
                let mut near_boundary = false;
                for (k, &d) in DIRS.iter().enumerate() {
                    let t = shape.ray_exit(x, d);
                    if t < MIN_THETA * h {
                        near_boundary = true;
                    }
                    arm[k] = t.min(h);
                }
                if near_boundary {
                    continue;
                }
                lookup[(j - j0) as usize * nx + (i - i0) as usize] = nodes.len() as u32;
                nodes.push(Node { i, j, x, nbr: [None; 4], arm, coef: [0.0; 4], diag: 0.0, bnd: 0.0 });
            }
        }
        if nodes.is_empty() {
            return Err(Error::InvalidInput(format!("no interior nodes at spacing {h}")));
        }
        let mut grid = DomainGrid { shape, h, nodes, lookup, i0, j0, nx, ny, width: half.x.min(half.y) };
        grid.build_stencils();
        Ok(grid)
    }

    fn build_stencils(&mut self) {
        let offsets = [(1, 0), (-1, 0), (0, 1), (0, -1)];
        for k in 0..self.nodes.len() {
            let n = self.nodes[k];
            let mut nbr = [None; 4];
            let mut arm = n.arm;
            for (d, &(di, dj)) in offsets.iter().enumerate() {
                if arm[d] >= self.h {
                    nbr[d] = self.index(n.i + di, n.j + dj);
                    // an excluded neighbour sits on the boundary
                    if nbr[d].is_none() {
                        arm[d] = self.h;
                    }
                }
            }
            let mut coef = [0.0; 4];
            let mut diag = 1.0;
            let mut bnd = 0.0;
            for (a, b) in [(0, 1), (2, 3)] {
                let (hr, hl) = (arm[a], arm[b]);
                coef[a] = 2.0 / (hr * (hl + hr));
                coef[b] = 2.0 / (hl * (hl + hr));
                diag += 2.0 / (hl * hr);
            }
            for d in 0..4 {
                if nbr[d].is_none() {
                    bnd += coef[d];
                }
            }
            let node = &mut self.nodes[k];
            node.nbr = nbr;
            node.arm = arm;
            node.coef = coef;
            node.diag = diag;
            node.bnd = bnd;
        }
    }

    fn index(&self, i: i32, j: i32) -> Option<u32> {
        let (a, b) = (i - self.i0, j - self.j0);
        if a < 0 || b < 0 || a as usize >= self.nx || b as usize >= self.ny {
            return None;
        }
        let v = self.lookup[b as usize * self.nx + a as usize];
        (v != NO_NODE).then_some(v)
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Discrete area of the domain, `(#nodes) h^2`.
    pub fn area(&self) -> f64 {
        self.nodes.len() as f64 * self.h * self.h
    }

    /// Node index at integer coordinates `(i, j)`.
    pub fn node_at(&self, i: i32, j: i32) -> Option<usize> {
        self.index(i, j).map(|v| v as usize)
    }

    /// `(-Delta_h u + u)` at node `k` for interior values `u` and Dirichlet
    /// data `boundary`.
    pub fn apply(&self, u: &[f64], boundary: f64, k: usize) -> f64 {
        let n = &self.nodes[k];
        // diag = 1 + sum(coef); differences keep the rounding floor low
        let mut s = u[k];
        for d in 0..4 {
            let val = n.nbr[d].map_or(boundary, |q| u[q as usize]);
            s += n.coef[d] * (u[k] - val);
        }
        s
    }

    /// Second-order gradient at node `k` from the (possibly unequal) arms.
    pub fn gradient(&self, u: &[f64], boundary: f64, k: usize) -> Vec2 {
        let n = &self.nodes[k];
        let val = |d: usize| n.nbr[d].map_or(boundary, |q| u[q as usize]);
        let diff = |a: usize, b: usize| {
            let (hr, hl) = (n.arm[a], n.arm[b]);
            (val(a) - u[k]) * hl / (hr * (hl + hr)) + (u[k] - val(b)) * hr / (hl * (hl + hr))
        };
        Vec2::new(diff(0, 1), diff(2, 3))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn disk_area_converges() {
        let g = DomainGrid::new(Shape::UnitDisk, 1.0 / 64.0).unwrap();
        assert!((g.area() - std::f64::consts::PI).abs() < 0.1);
        assert!(g.node_at(0, 0).is_some());
    }

    #[test]
    fn nonconvex_polygon_rejected() {
        let v = vec![Vec2::new(0.0, 0.0), Vec2::new(2.0, 0.0), Vec2::new(1.0, 0.5), Vec2::new(2.0, 2.0), Vec2::new(0.0, 2.0)];
        assert!(matches!(Shape::polygon(v), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn clockwise_polygon_is_reoriented() {
        let v = vec![Vec2::new(-1.0, -1.0), Vec2::new(-1.0, 1.0), Vec2::new(1.0, 1.0), Vec2::new(1.0, -1.0)];
        let s = Shape::polygon(v).unwrap();
        assert!((s.area() - 4.0).abs() < 1e-15);
        assert!(s.contains(Vec2::ZERO));
        assert!((s.ray_exit(Vec2::new(0.25, 0.0), Vec2::new(1.0, 0.0)) - 0.75).abs() < 1e-15);
    }

    #[test]
    fn laplacian_is_exact_on_quadratics() {
        // -Delta (x^2 + y^2) + (x^2 + y^2) with boundary value 1 on the unit disk
        let g = DomainGrid::new(Shape::UnitDisk, 0.1).unwrap();
        let u: Vec<f64> = g.nodes().iter().map(|n| n.x.norm_sq()).collect();
        for k in 0..g.len() {
            let expect = -4.0 + u[k];
            assert!((g.apply(&u, 1.0, k) - expect).abs() < 1e-9, "{k}");
        }
    }

    #[test]
    fn gradient_is_exact_on_quadratics() {
        let g = DomainGrid::new(Shape::UnitDisk, 0.1).unwrap();
        let u: Vec<f64> = g.nodes().iter().map(|n| n.x.norm_sq()).collect();
        for k in 0..g.len() {
            let gr = g.gradient(&u, 1.0, k);
            assert!((gr - 2.0 * g.nodes()[k].x).norm() < 1e-9);
        }
    }
}
