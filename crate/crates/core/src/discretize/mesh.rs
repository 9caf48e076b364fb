//! Boundary-fitted triangulation of a star-shaped domain.
//!
//! Nodes sit on scaled copies `c + s(γ(t) - c)` of the boundary curve around
//! the interior patch center, followed by thin layers offset along the
//! interior normal at distances `δ, 2δ, 4δ, ...` and finally the boundary
//! itself. Consecutive rings are stitched by merging their parameters.
//! Ring node counts are multiples of four, so curves with quarter-turn
//! symmetry in their parameter give quarter-turn symmetric meshes.

use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::geometry::{boundary_frames, BoundaryFrame, DomainSpec, Point};

#[derive(Clone, Debug)]
pub struct Mesh {
    /// Interior nodes first, then the `n_boundary` boundary nodes in
    /// parameter order.
    pub nodes: Vec<Point>,
    pub n_interior: usize,
    pub n_boundary: usize,
    pub triangles: Vec<[usize; 3]>,
    pub frames: Vec<BoundaryFrame>,
    /// Chart whose box contains the node; `None` for the interior patch.
    pub chart_of_node: Vec<Option<usize>>,
    pub h: f64,
    pub domain_name: String,
}

impl Mesh {
    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t];
        signed_area(self.nodes[a], self.nodes[b], self.nodes[c])
    }

    pub fn is_boundary(&self, node: usize) -> bool {
        node >= self.n_interior
    }

    /// Short identifier used in reports.
    pub fn id(&self) -> String {
        format!("{}:N{}:m{}", self.domain_name, self.n_interior, self.n_boundary)
    }
}

pub fn signed_area(a: Point, b: Point, c: Point) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

/// Power of two nearest to `length / h` on a log scale, at least 8.
pub fn boundary_count(length: f64, h: f64) -> usize {
    let e = (length / h).log2().round().max(3.0);
    1usize << (e as u32)
}

fn ring_count(perimeter: f64, h: f64) -> usize {
    (4.0 * (perimeter / (4.0 * h)).round()).max(4.0) as usize
}

pub fn build_mesh(dom: &DomainSpec, h: f64) -> Result<Mesh> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::Mesh(format!("resolution h = {h} must be positive")));
    }
    let length = dom.boundary_length();
    let m = boundary_count(length, h);
    let frames = boundary_frames(dom, m)?;
    let c = dom.center();
    let hb = length / m as f64;

    // star-shapedness with respect to the center
    let probe = 4 * m;
    let mut rho_max = 0.0_f64;
    let mut rho_sum = 0.0;
    for k in 0..probe {
        let fr = dom.curve.frame(TAU * k as f64 / probe as f64);
        let r = [fr.point[0] - c[0], fr.point[1] - c[1]];
        let rho = r[0].hypot(r[1]);
        // radial direction must point out of the domain
        let dot = -(r[0] * fr.interior_normal[0] + r[1] * fr.interior_normal[1]);
        if !(dot > 1e-3 * rho) {
            return Err(Error::Mesh(format!(
                "boundary is not star-shaped about ({:.3}, {:.3}) or is oriented clockwise",
                c[0], c[1]
            )));
        }
        rho_max = rho_max.max(rho);
        rho_sum += rho;
    }
    let rho_mean = rho_sum / probe as f64;

    let delta = hb / 32.0;
    let mut layers = Vec::new();
    let mut d = delta;
    while d < 0.6 * hb {
        layers.push(d);
        d *= 2.0;
    }
    let d_last = *layers.last().unwrap_or(&0.0);
    let s_max = 1.0 - (d_last + 0.8 * h) / rho_max;
    if !(s_max > 0.0) {
        return Err(Error::Mesh("resolution too coarse for the domain".into()));
    }
    let n_rings = ((s_max * rho_mean) / h).ceil().max(1.0) as usize;

    let mut nodes: Vec<Point> = vec![c];
    let mut rings: Vec<(usize, usize)> = Vec::new(); // (first node, count)
    for i in 1..=n_rings {
        let s = s_max * i as f64 / n_rings as f64;
        let n = ring_count(s * length, h);
        let first = nodes.len();
        for k in 0..n {
            let p = dom.curve.point(TAU * k as f64 / n as f64);
            nodes.push([c[0] + s * (p[0] - c[0]), c[1] + s * (p[1] - c[1])]);
        }
        rings.push((first, n));
    }
    for &d in layers.iter().rev() {
        let first = nodes.len();
        for fr in &frames {
            nodes.push([
                fr.point[0] + d * fr.interior_normal[0],
                fr.point[1] + d * fr.interior_normal[1],
            ]);
        }
        rings.push((first, m));
    }
    let n_interior = nodes.len();
    if n_interior < 16 {
        return Err(Error::Mesh(format!(
            "resolution gives only {n_interior} interior nodes (need at least 16)"
        )));
    }
    for fr in &frames {
        nodes.push(fr.point);
    }
    rings.push((n_interior, m));

    let mut triangles = Vec::new();
    let (f0, n0) = rings[0];
    for k in 0..n0 {
        triangles.push([0, f0 + k, f0 + (k + 1) % n0]);
    }
    for w in rings.windows(2) {
        zipper(w[0], w[1], &mut triangles);
    }

    let mut min_area = f64::INFINITY;
    for t in &triangles {
        let a = signed_area(nodes[t[0]], nodes[t[1]], nodes[t[2]]);
        min_area = min_area.min(a);
    }
    if !(min_area > 0.0) {
        return Err(Error::Mesh(format!(
            "degenerate or inverted element (signed area {min_area:.3e})"
        )));
    }

    let chart_of_node = nodes
        .iter()
        .map(|&p| {
            let dist = (p[0] - c[0]).hypot(p[1] - c[1]);
            if dist < dom.interior_patch.radius {
                return None;
            }
            dom.charts
                .iter()
                .enumerate()
                .filter_map(|(j, ch)| {
                    let q = ch.affine_map.to_chart(p);
                    ch.in_box(q).then_some((j, q[0].abs()))
                })
                .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
                .map(|(j, _)| j)
        })
        .collect();

    Ok(Mesh {
        nodes,
        n_interior,
        n_boundary: m,
        triangles,
        frames,
        chart_of_node,
        h,
        domain_name: dom.name.clone(),
    })
}

/// Triangulates the band between an inner ring `a` and an outer ring `b`,
/// both given as (first node, count) with nodes at parameters `2πk/count`.
fn zipper(a: (usize, usize), b: (usize, usize), out: &mut Vec<[usize; 3]>) {
    let (fa, na) = a;
    let (fb, nb) = b;
    let (mut i, mut j) = (0usize, 0usize);
    while i < na || j < nb {
        // compare next parameters (i+1)/na and (j+1)/nb exactly
        let take_a = j == nb || (i < na && (i + 1) * nb <= (j + 1) * na);
        if take_a {
            out.push([fa + i % na, fb + j % nb, fa + (i + 1) % na]);
            i += 1;
        } else {
            out.push([fa + i % na, fb + j % nb, fb + (j + 1) % nb]);
            j += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts() {
        assert_eq!(boundary_count(TAU, 0.2), 32);
        assert_eq!(boundary_count(TAU, 0.1), 64);
        assert_eq!(boundary_count(1.0, 1.0), 8);
    }

    #[test]
    fn zipper_covers_band_once() {
        let mut t = Vec::new();
        zipper((0, 4), (4, 6), &mut t);
        assert_eq!(t.len(), 10);
    }
}
