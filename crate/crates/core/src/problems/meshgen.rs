//! Generators for the bundled unstructured meshes: a disk, a square plate
//! with a circular hole, and a slender airfoil-like section inside a circular far field.
//! Each takes a refinement factor; doubling it roughly quadruples the node
//! count.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_xoshiro::SplitMix64;

use super::mesh::signed_area;
use super::Mesh;
use crate::{Error, Result};

/// Concentric rings of radius `k / rings` carrying `6k` nodes each, with the
/// interior nodes jittered by up to 10% of the ring spacing.
pub fn disk(rings: usize, seed: u64) -> Result<Mesh> {
    if rings < 1 {
        return Err(Error::Invalid("disk needs at least one ring".into()));
    }
    let mut nodes = vec![[0.0, 0.0]];
    let mut boundary = vec![false];
    let mut ring_ids: Vec<Vec<usize>> = vec![vec![0]];
    let mut ring_angles: Vec<Vec<f64>> = vec![vec![0.0]];
    for k in 1..=rings {
        let r = k as f64 / rings as f64;
        let count = 6 * k;
        // Stagger alternate rings by half a step.
        let offset = if k % 2 == 0 { 0.5 } else { 0.0 };
        let angles: Vec<f64> = (0..count).map(|j| TAU * (j as f64 + offset) / count as f64).collect();
        let ids: Vec<usize> = (0..count).map(|j| nodes.len() + j).collect();
        for &a in &angles {
            nodes.push([r * a.cos(), r * a.sin()]);
            boundary.push(k == rings);
        }
        ring_ids.push(ids);
        ring_angles.push(angles);
    }
    let mut triangles = Vec::new();
    for k in 1..=rings {
        stitch(
            &ring_ids[k - 1],
            &ring_angles[k - 1],
            &ring_ids[k],
            &ring_angles[k],
            &mut triangles,
        );
    }
    orient(&nodes, &mut triangles);
    jitter(&mut nodes, &boundary, 0.1 / rings as f64, seed);
    Mesh::new(nodes, triangles, boundary, 2.0)
}

/// Square `[-1, 1]^2` with a hole of radius 0.3, meshed by an O-grid of
/// `8 * refine` angular and `refine` radial cells.
pub fn plate_with_hole(refine: usize) -> Result<Mesh> {
    if refine < 1 {
        return Err(Error::Invalid("plate_with_hole needs refine >= 1".into()));
    }
    let map = |t: f64, s: f64| {
        let (c, sn) = (t.cos(), t.sin());
        let m = c.abs().max(sn.abs());
        let r = (1.0 - s) * 0.3;
        [r * c + s * c / m, r * sn + s * sn / m]
    };
    o_grid(8 * refine, refine, map, 2.0)
}

/// Slender elliptic section of unit chord and 12% thickness centred at the
/// origin, inside a confocal far-field ellipse reaching `x = +-1.5`.
///
/// Elliptic coordinates give an orthogonal grid, which keeps every element
/// free of obtuse angles even where the cells are small near the leading
/// and trailing edges. `16 * refine` angular and `3 * refine` radial cells.
pub fn airfoil(refine: usize) -> Result<Mesh> {
    if refine < 1 {
        return Err(Error::Invalid("airfoil needs refine >= 1".into()));
    }
    let (a, b) = (0.5f64, 0.06f64);
    let focus = (a * a - b * b).sqrt();
    let xi0 = (b / a).atanh();
    let xi1 = (1.5 / focus).acosh();
    let map = move |t: f64, s: f64| {
        let xi = xi0 + s * (xi1 - xi0);
        [focus * xi.cosh() * t.cos(), focus * xi.sinh() * t.sin()]
    };
    o_grid(16 * refine, 3 * refine, map, 3.0)
}

/// Structured annulus `map(theta, s)` for `theta` around the circle and `s`
/// from the inner (0) to the outer (1) curve, quads split along the shorter
/// diagonal. Both curves are flagged as boundary.
fn o_grid(n_theta: usize, n_r: usize, map: impl Fn(f64, f64) -> [f64; 2], length: f64) -> Result<Mesh> {
    let id = |i: usize, j: usize| (i % n_theta) + n_theta * j;
    let mut nodes = Vec::with_capacity(n_theta * (n_r + 1));
    let mut boundary = Vec::with_capacity(nodes.capacity());
    for j in 0..=n_r {
        let s = j as f64 / n_r as f64;
        for i in 0..n_theta {
            nodes.push(map(TAU * i as f64 / n_theta as f64, s));
            boundary.push(j == 0 || j == n_r);
        }
    }
    let dist = |a: usize, b: usize| {
        let (p, q): ([f64; 2], [f64; 2]) = (nodes[a], nodes[b]);
        (p[0] - q[0]).hypot(p[1] - q[1])
    };
    let mut triangles = Vec::with_capacity(2 * n_theta * n_r);
    for j in 0..n_r {
        for i in 0..n_theta {
            let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            if dist(a, c) <= dist(b, d) {
                triangles.push([a, b, c]);
                triangles.push([a, c, d]);
            } else {
                triangles.push([a, b, d]);
                triangles.push([b, c, d]);
            }
        }
    }
    orient(&nodes, &mut triangles);
    Mesh::new(nodes, triangles, boundary, length)
}

/// Joins two concentric node rings, each listed by increasing angle in
/// `[0, 2 pi)`, with a strip of triangles.
fn stitch(inner: &[usize], ia: &[f64], outer: &[usize], oa: &[f64], out: &mut Vec<[usize; 3]>) {
    let (a, b) = (inner.len(), outer.len());
    let next = |angles: &[f64], k: usize| {
        if k + 1 < angles.len() {
            angles[k + 1]
        } else {
            angles[0] + TAU
        }
    };
    let (mut p, mut q) = (0, 0);
    while p < a || q < b {
        let advance_inner = a > 1 && p < a && (q == b || next(ia, p) <= next(oa, q));
        if advance_inner {
            out.push([inner[p], outer[q % b], inner[(p + 1) % a]]);
            p += 1;
        } else {
            out.push([inner[p % a], outer[q], outer[(q + 1) % b]]);
            q += 1;
        }
        if a == 1 && q == b {
            break;
        }
    }
}

/// Flips clockwise triangles so every element is counterclockwise.
fn orient(nodes: &[[f64; 2]], triangles: &mut [[usize; 3]]) {
    for t in triangles.iter_mut() {
        if signed_area(nodes[t[0]], nodes[t[1]], nodes[t[2]]) < 0.0 {
            t.swap(1, 2);
        }
    }
}

fn jitter(nodes: &mut [[f64; 2]], boundary: &[bool], amount: f64, seed: u64) {
    let mut rng = SplitMix64::seed_from_u64(seed);
    for (p, &b) in nodes.iter_mut().zip(boundary) {
        let dx = rng.random_range(-amount..=amount);
        let dy = rng.random_range(-amount..=amount);
        if !b {
            p[0] += dx;
            p[1] += dy;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn total_area(m: &Mesh) -> f64 {
        (0..m.triangles.len()).map(|t| m.area(t)).sum()
    }

    #[test]
    fn disk_counts_and_area() {
        for rings in [1usize, 2, 5] {
            let m = disk(rings, 3).unwrap();
            assert_eq!(m.nodes.len(), 1 + 3 * rings * (rings + 1));
            assert_eq!(m.triangles.len(), 6 * rings * rings);
            assert_eq!(m.interior_count(), 1 + 3 * rings * (rings - 1));
        }
        let m = disk(16, 3).unwrap();
        assert!((total_area(&m) - PI).abs() < 0.02);
    }

    #[test]
    fn plate_area() {
        let m = plate_with_hole(4).unwrap();
        assert!((total_area(&m) - (4.0 - PI * 0.09)).abs() < 0.01);
        assert_eq!(m.interior_count(), 32 * 3);
    }

    #[test]
    fn airfoil_encloses_section() {
        let m = airfoil(2).unwrap();
        let focus = (0.25f64 - 0.0036).sqrt();
        let far = PI * 1.5 * focus * (1.5 / focus).acosh().sinh();
        let expect = far - PI * 0.5 * 0.06;
        assert!((total_area(&m) - expect).abs() < 0.05, "{}", total_area(&m));
    }

    #[test]
    fn refinement_quadruples() {
        for gen in [|r| plate_with_hole(r), |r| airfoil(r), |r| disk(2 * r, 1)] {
            let a = gen(4).unwrap().interior_count() as f64;
            let b = gen(8).unwrap().interior_count() as f64;
            assert!((3.5..5.0).contains(&(b / a)), "{a} -> {b}");
        }
    }
}
