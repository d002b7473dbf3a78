use super::{Mesh, ProblemInstance};
use crate::solver::StoppingNorm;
use crate::sparsemat::SparseMatrix;
use crate::{Error, Result};

/// P1 stiffness matrix of one counterclockwise triangle.
pub fn local_stiffness(p: [[f64; 2]; 3]) -> Result<[[f64; 3]; 3]> {
    let area = super::mesh::signed_area(p[0], p[1], p[2]);
    if !(area > super::mesh::MIN_AREA) {
        return Err(Error::DegenerateTriangle { index: 0, area });
    }
    // Gradient of the hat function at vertex i is (b_i, c_i) / (2 area).
    let mut b = [0.0; 3];
    let mut c = [0.0; 3];
    for i in 0..3 {
        let (j, k) = ((i + 1) % 3, (i + 2) % 3);
        b[i] = p[j][1] - p[k][1];
        c[i] = p[k][0] - p[j][0];
    }
    let mut k = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            k[i][j] = (b[i] * b[j] + c[i] * c[j]) / (4.0 * area);
        }
    }
    Ok(k)
}

/// Which edge length stands in for the grid spacing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Spacing {
    Min,
    Max,
    Mean,
}

/// `(-cos(pi h / L), cos(pi h / L))` for the chosen spacing `h`; `None`
/// when `h > L / 2` leaves no usable interval.
pub fn fem_cjm_bounds(mesh: &Mesh, spacing: Spacing) -> Option<(f64, f64)> {
    let lengths = mesh.edge_lengths();
    let h = match spacing {
        Spacing::Min => lengths.iter().copied().fold(f64::INFINITY, f64::min),
        Spacing::Max => lengths.iter().copied().fold(0.0, f64::max),
        Spacing::Mean => lengths.iter().sum::<f64>() / lengths.len() as f64,
    };
    let c = (std::f64::consts::PI * h / mesh.length).cos();
    (c > 0.0 && c < 1.0).then_some((-c, c))
}

/// Poisson `-u'' = 1` with homogeneous Dirichlet data on flagged nodes.
///
/// Boundary rows and columns are removed, so unknowns are the interior nodes
/// in mesh order. Starts from zero; default Chebyshev bounds use the mean
/// edge length.
pub fn assemble_fem_poisson(mesh: &Mesh) -> Result<ProblemInstance> {
    mesh.validate()?;
    let mut unknown = vec![usize::MAX; mesh.nodes.len()];
    let mut n = 0;
    for (i, &b) in mesh.boundary.iter().enumerate() {
        if !b {
            unknown[i] = n;
            n += 1;
        }
    }
    if n == 0 {
        return Err(Error::NoInteriorNodes);
    }
    let mut triplets = Vec::with_capacity(9 * mesh.triangles.len());
    let mut rhs = vec![0.0; n];
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let p = [mesh.nodes[tri[0]], mesh.nodes[tri[1]], mesh.nodes[tri[2]]];
        let k = local_stiffness(p).map_err(|e| match e {
            Error::DegenerateTriangle { area, .. } => Error::DegenerateTriangle { index: t, area },
            other => other,
        })?;
        let load = mesh.area(t) / 3.0;
        for i in 0..3 {
            let r = unknown[tri[i]];
            if r == usize::MAX {
                continue;
            }
            rhs[r] += load;
            for j in 0..3 {
                let c = unknown[tri[j]];
                if c != usize::MAX {
                    triplets.push((r, c, k[i][j]));
                }
            }
        }
    }
    let a = SparseMatrix::from_triplets(n, &triplets)?;
    let p = ProblemInstance::new(a, rhs, vec![0.0; n], StoppingNorm::AbsoluteL2, format!("fem:{n}"))?;
    match fem_cjm_bounds(mesh, Spacing::Mean) {
        Some((lo, hi)) => p.with_cjm_bounds(lo, hi),
        None => Ok(p),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::perturbed_mesh;
    use crate::sparsemat::dense_jacobi_eigenvalues;

    #[test]
    fn right_triangle_stiffness() {
        let k = local_stiffness([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]).unwrap();
        let want = [[1.0, -0.5, -0.5], [-0.5, 0.5, 0.0], [-0.5, 0.0, 0.5]];
        for i in 0..3 {
            for j in 0..3 {
                assert!((k[i][j] - want[i][j]).abs() < 1e-15);
            }
        }
        assert!(local_stiffness([[0.0, 0.0], [0.0, 1.0], [1.0, 0.0]]).is_err());
    }

    #[test]
    fn local_rows_sum_to_zero() {
        let k = local_stiffness([[0.1, 0.2], [1.3, -0.4], [0.7, 0.9]]).unwrap();
        for row in k {
            assert!(row.iter().sum::<f64>().abs() < 1e-14);
        }
    }

    #[test]
    fn single_interior_node_matches_five_point_stencil() {
        let m = perturbed_mesh(2, 2, 0.0, 0).unwrap();
        let p = assemble_fem_poisson(&m).unwrap();
        assert_eq!(p.n(), 1);
        assert!((p.matrix.get(0, 0) - 4.0).abs() < 1e-14);
        // Six triangles of area 1/8 touch the centre.
        assert!((p.rhs[0] - 6.0 / 24.0).abs() < 1e-15);
        assert_eq!(p.cjm_bounds, None);
    }

    #[test]
    fn structured_interior_rows() {
        let m = perturbed_mesh(8, 8, 0.0, 0).unwrap();
        let p = assemble_fem_poisson(&m).unwrap();
        assert_eq!(p.n(), 49);
        let centre = 3 + 7 * 3;
        // Diagonal couplings cancel to zero on right triangles.
        let mut row: Vec<f64> = p.matrix.row(centre).map(|(_, v)| v).filter(|v| v.abs() > 1e-12).collect();
        row.sort_by(f64::total_cmp);
        assert_eq!(row.len(), 5);
        for v in &row[..4] {
            assert!((v + 1.0).abs() < 1e-13);
        }
        assert!((row[4] - 4.0).abs() < 1e-13);
    }

    #[test]
    fn jittered_system_is_convergent() {
        let m = perturbed_mesh(7, 6, 0.3, 4).unwrap();
        let p = assemble_fem_poisson(&m).unwrap();
        let e = dense_jacobi_eigenvalues(&p.matrix).unwrap();
        assert!(e.iter().all(|l| l.abs() < 1.0));
        let (lo, hi) = p.cjm_bounds.unwrap();
        assert!(lo < 0.0 && hi > 0.0 && hi < 1.0);
        let (_, h_min) = fem_cjm_bounds(&m, Spacing::Min).unwrap();
        let (_, h_max) = fem_cjm_bounds(&m, Spacing::Max).unwrap();
        assert!(h_min > hi && hi > h_max);
    }

    #[test]
    fn all_boundary_mesh_is_rejected() {
        let m = perturbed_mesh(2, 2, 0.0, 0).unwrap();
        let mut all = m.clone();
        all.boundary = vec![true; m.nodes.len()];
        assert!(matches!(assemble_fem_poisson(&all), Err(Error::NoInteriorNodes)));
    }
}
