//! Structured triangulations of surfaces of revolution and the cotangent
//! Laplace–Beltrami operator with lumped (barycentric) mass. Fixed-point
//! endpoints collapse to a single pole vertex with a triangle fan; pole
//! vertices are excluded from residual norms.

use crate::error::{Error, Result};
use crate::expr::{Bindings, Expr};
use crate::geometry::GeometrySpec;
use crate::solvers::RadialSolution;
use serde::Serialize;
use std::collections::BTreeMap;

#[derive(Debug, Clone)]
pub struct SurfaceMesh {
    pub vertices: Vec<[f64; 3]>,
    pub faces: Vec<[usize; 3]>,
    /// (r, θ) per vertex; poles carry θ = 0.
    pub polar: Vec<(f64, f64)>,
    /// Included in residual norms: neither a pole nor on the mesh boundary.
    pub interior: Vec<bool>,
    /// Symmetric cotangent weights per vertex: (neighbor, w).
    pub weights: Vec<Vec<(usize, f64)>>,
    /// Lumped barycentric vertex mass.
    pub mass: Vec<f64>,
    pub pole_lo: Option<usize>,
    pub pole_hi: Option<usize>,
    pub nr: usize,
    pub ntheta: usize,
}

impl SurfaceMesh {
    /// Structured nr×ntheta triangulation of the revolution surface between
    /// the given arclength stations.
    pub fn revolution(
        geom: &GeometrySpec,
        r_lo: f64,
        r_hi: f64,
        nr: usize,
        ntheta: usize,
    ) -> Result<Self> {
        let profile = geom.profile.as_ref().ok_or_else(|| {
            Error::Mesh("geometry has no profile; only surfaces of revolution mesh".to_string())
        })?;
        if nr < 2 || ntheta < 3 {
            return Err(Error::Mesh(format!(
                "mesh needs nr >= 2 and ntheta >= 3, got ({}, {})",
                nr, ntheta
            )));
        }
        if !(r_lo < r_hi)
            || r_lo < profile.r_range.0 - 1e-12
            || r_hi > profile.r_range.1 + 1e-12
        {
            return Err(Error::Mesh(format!(
                "station range [{}, {}] outside the profile range {:?}",
                r_lo, r_hi, profile.r_range
            )));
        }

        let radius_at = |r: f64| (profile.radius)(r);
        let height_at = |r: f64| (profile.height)(r);
        let scale = radius_at(0.5 * (r_lo + r_hi))?.abs().max(1.0);
        let pole_lo_here = radius_at(r_lo)?.abs() < 1e-9 * scale;
        let pole_hi_here = radius_at(r_hi)?.abs() < 1e-9 * scale;

        let mut vertices = Vec::new();
        let mut polar = Vec::new();
        let mut ring_start = vec![usize::MAX; nr + 1];
        let mut pole_lo = None;
        let mut pole_hi = None;

        #[allow(clippy::needless_range_loop)] // j indexes rings, not just ring_start
        for j in 0..=nr {
            let r = r_lo + (r_hi - r_lo) * j as f64 / nr as f64;
            if j == 0 && pole_lo_here {
                pole_lo = Some(vertices.len());
                ring_start[j] = vertices.len();
                vertices.push([0.0, 0.0, height_at(r)?]);
                polar.push((r, 0.0));
                continue;
            }
            if j == nr && pole_hi_here {
                pole_hi = Some(vertices.len());
                ring_start[j] = vertices.len();
                vertices.push([0.0, 0.0, height_at(r)?]);
                polar.push((r, 0.0));
                continue;
            }
            ring_start[j] = vertices.len();
            let radius = radius_at(r)?;
            let height = height_at(r)?;
            for i in 0..ntheta {
                let theta = 2.0 * std::f64::consts::PI * i as f64 / ntheta as f64;
                vertices.push([radius * theta.cos(), radius * theta.sin(), height]);
                polar.push((r, theta));
            }
        }

        let mut faces = Vec::new();
        let ring = |j: usize, i: usize| ring_start[j] + i % ntheta;
        for j in 0..nr {
            let lo_is_pole = j == 0 && pole_lo.is_some();
            let hi_is_pole = j + 1 == nr && pole_hi.is_some();
            match (lo_is_pole, hi_is_pole) {
                (true, false) => {
                    let p = pole_lo.unwrap();
                    for i in 0..ntheta {
                        faces.push([p, ring(1, i), ring(1, i + 1)]);
                    }
                }
                (false, true) => {
                    let p = pole_hi.unwrap();
                    for i in 0..ntheta {
                        faces.push([p, ring(j, i + 1), ring(j, i)]);
                    }
                }
                (true, true) => {
                    return Err(Error::Mesh(
                        "mesh needs at least one full ring between two poles (increase nr)"
                            .to_string(),
                    ))
                }
                (false, false) => {
                    for i in 0..ntheta {
                        let a = ring(j, i);
                        let b = ring(j, i + 1);
                        let c = ring(j + 1, i);
                        let d = ring(j + 1, i + 1);
                        faces.push([a, c, d]);
                        faces.push([a, d, b]);
                    }
                }
            }
        }

        // interior: not a pole, not on an open boundary ring
        let mut interior = vec![true; vertices.len()];
        if let Some(p) = pole_lo {
            interior[p] = false;
        } else {
            for i in 0..ntheta {
                interior[ring(0, i)] = false;
            }
        }
        if let Some(p) = pole_hi {
            interior[p] = false;
        } else {
            for i in 0..ntheta {
                interior[ring(nr, i)] = false;
            }
        }

        let (weights, mass) = assemble(&vertices, &faces);
        Ok(SurfaceMesh {
            vertices,
            faces,
            polar,
            interior,
            weights,
            mass,
            pole_lo,
            pole_hi,
            nr,
            ntheta,
        })
    }

    /// Discrete Laplace–Beltrami: (Δ_h u)_i = −(1/m_i)·Σ_j w_ij (u_i − u_j).
    pub fn laplacian(&self, u: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; u.len()];
        for (i, nbrs) in self.weights.iter().enumerate() {
            let mut acc = 0.0;
            for &(j, w) in nbrs {
                acc += w * (u[i] - u[j]);
            }
            out[i] = -acc / self.mass[i];
        }
        out
    }

    /// Stiffness quadratic form x'Lx = Σ_edges w_ij (x_i − x_j)².
    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        let mut acc = 0.0;
        for (i, nbrs) in self.weights.iter().enumerate() {
            for &(j, w) in nbrs {
                if j > i {
                    let d = x[i] - x[j];
                    acc += w * d * d;
                }
            }
        }
        acc
    }

    /// Max asymmetry |w_ij − w_ji| over all stored edges.
    pub fn symmetry_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, nbrs) in self.weights.iter().enumerate() {
            for &(j, w) in nbrs {
                let back = self.weights[j]
                    .iter()
                    .find(|(k, _)| *k == i)
                    .map(|(_, v)| *v)
                    .unwrap_or(0.0);
                worst = worst.max((w - back).abs());
            }
        }
        worst
    }

    /// Every edge must be shared by exactly 2 faces (interior) or 1 (boundary).
    pub fn check_manifold(&self) -> Result<()> {
        let mut counts: BTreeMap<(usize, usize), u32> = BTreeMap::new();
        for f in &self.faces {
            for (a, b) in [(f[0], f[1]), (f[1], f[2]), (f[2], f[0])] {
                let key = (a.min(b), a.max(b));
                *counts.entry(key).or_insert(0) += 1;
            }
        }
        for ((a, b), c) in counts {
            if c > 2 {
                return Err(Error::Mesh(format!(
                    "edge ({}, {}) shared by {} faces",
                    a, b, c
                )));
            }
        }
        Ok(())
    }

    pub fn total_mass(&self) -> f64 {
        self.mass.iter().sum()
    }
}

fn assemble(vertices: &[[f64; 3]], faces: &[[usize; 3]]) -> (Vec<Vec<(usize, f64)>>, Vec<f64>) {
    let mut maps: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); vertices.len()];
    let mut mass = vec![0.0; vertices.len()];
    for f in faces {
        let p = [vertices[f[0]], vertices[f[1]], vertices[f[2]]];
        let area = triangle_area(&p);
        for corner in 0..3 {
            mass[f[corner]] += area / 3.0;
            let (i, j, k) = (f[corner], f[(corner + 1) % 3], f[(corner + 2) % 3]);
            // cotangent at corner i weights the opposite edge (j, k)
            let e1 = sub(vertices[j], vertices[i]);
            let e2 = sub(vertices[k], vertices[i]);
            let cross_norm = norm(cross(e1, e2));
            if cross_norm <= 0.0 {
                continue; // degenerate triangle contributes no stiffness
            }
            let w = 0.5 * dot(e1, e2) / cross_norm;
            *maps[j].entry(k).or_insert(0.0) += w;
            *maps[k].entry(j).or_insert(0.0) += w;
        }
    }
    let weights = maps
        .into_iter()
        .map(|m| m.into_iter().collect())
        .collect();
    (weights, mass)
}

fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn norm(a: [f64; 3]) -> f64 {
    dot(a, a).sqrt()
}

fn triangle_area(p: &[[f64; 3]; 3]) -> f64 {
    0.5 * norm(cross(sub(p[1], p[0]), sub(p[2], p[0])))
}

#[derive(Debug, Clone, Serialize)]
pub struct LiftResidualReport {
    pub nr: usize,
    pub ntheta: usize,
    /// max over interior vertices of |Δ_h u − f(r, u)|.
    pub max_residual: f64,
    /// mass-weighted L² norm of the residual over interior vertices.
    pub l2_residual: f64,
    pub interior_vertices: usize,
    /// Fan triangulation used at a collapsed pole.
    pub polar_fan: bool,
    /// max |Δ_h(1)| : the stiffness annihilates constants.
    pub constant_annihilation: f64,
}

/// Mesh plus per-vertex residual field (NaN at vertices excluded from norms).
pub struct ResidualField {
    pub mesh: SurfaceMesh,
    pub lifted: Vec<f64>,
    pub residual: Vec<f64>,
    pub report: LiftResidualReport,
}

/// Lift the radial solution onto the meshed surface (u constant on each
/// θ-ring by construction), apply the discrete operator, and measure
/// Δ_h u − f(r, u) on interior vertices. Checks −Δu + f = 0 ⇔ Δu = f.
pub fn lift_and_residual(
    geom: &GeometrySpec,
    sol: &RadialSolution,
    nr: usize,
    ntheta: usize,
    f: &Expr,
) -> Result<LiftResidualReport> {
    Ok(lift_residual_field(geom, sol, nr, ntheta, f)?.report)
}

/// As [`lift_and_residual`], returning the mesh and the residual at every
/// vertex for inspection and export.
pub fn lift_residual_field(
    geom: &GeometrySpec,
    sol: &RadialSolution,
    nr: usize,
    ntheta: usize,
    f: &Expr,
) -> Result<ResidualField> {
    let profile = geom.profile.as_ref().ok_or_else(|| {
        Error::Mesh("geometry has no profile; only surfaces of revolution verify".to_string())
    })?;
    let (w_lo, w_hi) = sol.window();
    let r_lo = profile.r_range.0.max(w_lo);
    let r_hi = profile.r_range.1.min(w_hi);
    if !(r_lo < r_hi) {
        return Err(Error::Mesh(
            "solution window does not overlap the profile range".to_string(),
        ));
    }
    let mesh = SurfaceMesh::revolution(geom, r_lo, r_hi, nr, ntheta)?;
    mesh.check_manifold()?;

    // radial lift: one evaluation per ring, copied around it
    let mut ring_values: BTreeMap<u64, f64> = BTreeMap::new();
    let mut u = vec![0.0; mesh.vertices.len()];
    for (v, &(r, _)) in mesh.polar.iter().enumerate() {
        let key = r.to_bits();
        let val = match ring_values.get(&key) {
            Some(&v) => v,
            None => {
                let val = sol.eval(r)?;
                ring_values.insert(key, val);
                val
            }
        };
        u[v] = val;
    }

    let lap = mesh.laplacian(&u);
    let ones = vec![1.0; mesh.vertices.len()];
    let lap_ones = mesh.laplacian(&ones);
    let constant_annihilation = lap_ones.iter().fold(0.0f64, |m, v| m.max(v.abs()));

    let mut residual = vec![f64::NAN; mesh.vertices.len()];
    let mut max_residual: f64 = 0.0;
    let mut l2_num = 0.0;
    let mut l2_den = 0.0;
    let mut interior_vertices = 0usize;
    for v in 0..mesh.vertices.len() {
        if !mesh.interior[v] {
            continue;
        }
        let (r, _) = mesh.polar[v];
        let fv = f.eval(&Bindings::new().r(r).y(u[v]))?;
        let res = lap[v] - fv;
        residual[v] = res;
        max_residual = max_residual.max(res.abs());
        l2_num += mesh.mass[v] * res * res;
        l2_den += mesh.mass[v];
        interior_vertices += 1;
    }
    let report = LiftResidualReport {
        nr,
        ntheta,
        max_residual,
        l2_residual: (l2_num / l2_den.max(1e-300)).sqrt(),
        interior_vertices,
        polar_fan: mesh.pole_lo.is_some() || mesh.pole_hi.is_some(),
        constant_annihilation,
    };
    Ok(ResidualField {
        mesh,
        lifted: u,
        residual,
        report,
    })
}

/// Run the residual over a refinement ladder and fit the empirical
/// convergence order of the L² residual against the ring spacing.
pub fn residual_ladder(
    geom: &GeometrySpec,
    sol: &RadialSolution,
    ladder: &[(usize, usize)],
    f: &Expr,
) -> Result<(Vec<LiftResidualReport>, f64)> {
    let mut reports = Vec::new();
    for &(nr, ntheta) in ladder {
        reports.push(lift_and_residual(geom, sol, nr, ntheta, f)?);
    }
    // least-squares slope of ln(L2) vs ln(1/nr)
    let pts: Vec<(f64, f64)> = reports
        .iter()
        .map(|rep| ((1.0 / rep.nr as f64).ln(), rep.l2_residual.max(1e-300).ln()))
        .collect();
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let order = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    Ok((reports, order))
}
