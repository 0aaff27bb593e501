use std::f64::consts::TAU;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{BoundaryTag, Mesh2D, Point};

/// `exp(sum_{m=1..M} a_m cos(m t) + b_m sin(m t))`: smooth, positive, seeded.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrigDensity {
    pub cos: Vec<f64>,
    pub sin: Vec<f64>,
    /// Added to the exponent.
    pub shift: f64,
}

impl TrigDensity {
    /// Coefficients uniform in `[-amplitude, amplitude]` for modes `1..=max_mode`.
    pub fn random(rng: &mut impl Rng, max_mode: usize, amplitude: f64) -> Self {
        let mut draw = || rng.random_range(-amplitude..=amplitude);
        let cos = (0..max_mode).map(|_| draw()).collect();
        let sin = (0..max_mode).map(|_| draw()).collect();
        TrigDensity { cos, sin, shift: 0.0 }
    }

    pub fn exponent(&self, theta: f64) -> f64 {
        let mut s = self.shift;
        for (m, (a, b)) in self.cos.iter().zip(&self.sin).enumerate() {
            let (sn, cs) = ((m + 1) as f64 * theta).sin_cos();
            s += a * cs + b * sn;
        }
        s
    }

    pub fn eval(&self, theta: f64) -> f64 {
        self.exponent(theta).exp()
    }

    /// Same profile shifted so its minimum over `thetas` equals `floor`.
    pub fn normalized_min(&self, thetas: &[f64], floor: f64) -> Self {
        let lo = thetas.iter().map(|&t| self.exponent(t)).fold(f64::INFINITY, f64::min);
        TrigDensity { shift: self.shift - lo + floor.ln(), ..self.clone() }
    }

    /// Per-boundary-edge values at edge midpoints (polar angle about the origin).
    pub fn sample_edges(&self, mesh: &Mesh2D) -> Vec<f64> {
        edge_angles(mesh).into_iter().map(|t| self.eval(t)).collect()
    }
}

/// Polar angle of every boundary-edge midpoint.
pub fn edge_angles(mesh: &Mesh2D) -> Vec<f64> {
    mesh.boundary_edges()
        .iter()
        .map(|e| {
            let m = mesh.edge_midpoint(e.vertices[0], e.vertices[1]);
            m[1].atan2(m[0]).rem_euclid(TAU)
        })
        .collect()
}

/// Conformal deformation family `h_eps^2 g` whose boundary factor converts
/// the base density into `rho_bar`.
#[derive(Clone, Debug)]
pub struct DensityFamily {
    base: Mesh2D,
    rho_bar: Vec<f64>,
    virtual_dim: u32,
    /// `(rho_bar / rho)^(1/(n-1))` per boundary edge (1 off the Steklov boundary).
    boundary_factor: Vec<f64>,
    /// Distance from each triangle centroid to the Steklov boundary, and the
    /// boundary edge realizing it.
    nearest: Vec<(f64, usize)>,
}

impl DensityFamily {
    pub fn new(base: &Mesh2D, rho_bar: Vec<f64>, virtual_dim: u32) -> Result<Self> {
        if virtual_dim < 3 {
            return Err(Error::Parameter(format!("virtual dimension must be at least 3, got {virtual_dim}")));
        }
        let edges = base.boundary_edges();
        if rho_bar.len() != edges.len() {
            return Err(Error::Validation(format!(
                "{} target densities for {} boundary edges",
                rho_bar.len(),
                edges.len()
            )));
        }
        let mut boundary_factor = vec![1.0; edges.len()];
        let mut steklov = Vec::new();
        for (i, e) in edges.iter().enumerate() {
            if e.tag != BoundaryTag::Steklov {
                continue;
            }
            steklov.push(i);
            // relative slack for densities that agree up to rounding
            if rho_bar[i] < e.density * (1.0 - 1e-14) {
                return Err(Error::Precondition(format!(
                    "target density {} is below the base density {} on boundary edge {i}",
                    rho_bar[i], e.density
                )));
            }
            boundary_factor[i] = (rho_bar[i] / e.density).max(1.0).powf(1.0 / (virtual_dim - 1) as f64);
        }
        if steklov.is_empty() {
            return Err(Error::EmptyBoundary("steklov"));
        }
        let nearest = (0..base.n_triangles())
            .map(|t| {
                let c = base.triangle_centroid(t);
                steklov
                    .iter()
                    .map(|&i| {
                        let [a, b] = edges[i].vertices;
                        (point_segment_distance(base, c, a, b), i)
                    })
                    .fold((f64::INFINITY, usize::MAX), |m, x| if x.0 < m.0 { x } else { m })
            })
            .collect();
        Ok(DensityFamily { base: base.clone(), rho_bar, virtual_dim, boundary_factor, nearest })
    }

    pub fn base(&self) -> &Mesh2D {
        &self.base
    }

    pub fn rho_bar(&self) -> &[f64] {
        &self.rho_bar
    }

    pub fn boundary_factor(&self) -> &[f64] {
        &self.boundary_factor
    }

    /// The limit problem: base geometry, unit weights, density `rho_bar` on Steklov edges.
    pub fn limit_mesh(&self) -> Result<Mesh2D> {
        let d = self.target_densities();
        self.base.with_tri_weights(vec![1.0; self.base.n_triangles()])?.with_edge_densities(&d)
    }

    fn target_densities(&self) -> Vec<f64> {
        self.base
            .boundary_edges()
            .iter()
            .zip(&self.rho_bar)
            .map(|(e, &r)| if e.tag == BoundaryTag::Steklov { r } else { e.density })
            .collect()
    }

    /// Whether some triangle centroid lies inside the layer of width `eps`;
    /// below that the sampled family coincides with the limit problem.
    pub fn resolves(&self, eps: f64) -> bool {
        self.nearest.iter().any(|&(d, i)| d < eps && self.boundary_factor[i] > 1.0)
    }

    /// Profile value `h_eps` at each triangle centroid: the boundary factor of
    /// the nearest Steklov edge, decaying linearly to 1 at distance `eps`.
    pub fn profile(&self, eps: f64) -> Vec<f64> {
        self.nearest.iter().map(|&(d, i)| 1.0 + (self.boundary_factor[i] - 1.0) * (1.0 - d / eps).max(0.0)).collect()
    }
}

/// Mesh of the family at parameter `eps`: triangle weights `h_eps^(n-2)`,
/// Steklov densities `rho * h^(n-1) = rho_bar` on the boundary.
pub fn density_family_at(family: &DensityFamily, eps: f64) -> Result<Mesh2D> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::Parameter(format!("eps must lie in (0, 1], got {eps}")));
    }
    let p = (family.virtual_dim - 2) as i32;
    let w: Vec<f64> = family.profile(eps).iter().map(|h| h.powi(p)).collect();
    family.base.with_tri_weights(w)?.with_edge_densities(&family.target_densities())
}

fn point_segment_distance(mesh: &Mesh2D, c: Point, a: usize, b: usize) -> f64 {
    let pa = mesh.vertices()[a];
    let d = mesh.displacement(a, b);
    let len2 = d[0] * d[0] + d[1] * d[1];
    let shifts = match mesh.period() {
        Some(l) => vec![-l, 0.0, l],
        None => vec![0.0],
    };
    shifts
        .into_iter()
        .map(|s| {
            let q = [c[0] + s - pa[0], c[1] - pa[1]];
            let t = ((q[0] * d[0] + q[1] * d[1]) / len2).clamp(0.0, 1.0);
            (q[0] - t * d[0]).hypot(q[1] - t * d[1])
        })
        .fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::make_disk_mesh;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_when_densities_agree() {
        let m = make_disk_mesh(1.0, 0.1).unwrap();
        let f = DensityFamily::new(&m, vec![1.0; m.boundary_edges().len()], 3).unwrap();
        for eps in [1.0, 0.5, 0.1] {
            let me = density_family_at(&f, eps).unwrap();
            assert!(me.tri_weights().iter().all(|&w| w == 1.0));
            assert_eq!(me.boundary_edges(), m.boundary_edges());
        }
    }

    #[test]
    fn boundary_weight_at_eps_one() {
        let h = 0.02;
        let m = make_disk_mesh(1.0, h).unwrap();
        let f = DensityFamily::new(&m, vec![2.0; m.boundary_edges().len()], 3).unwrap();
        let me = density_family_at(&f, 1.0).unwrap();
        let owners = m.boundary_edge_triangles();
        // sampled at centroids, which sit within h of the circle
        for &t in &owners {
            let w = me.tri_weights()[t];
            assert!((w - 2f64.sqrt()).abs() <= (2f64.sqrt() - 1.0) * h, "{w}");
            assert!(w <= 2f64.sqrt());
        }
        assert!(me.boundary_edges().iter().all(|e| e.density == 2.0));
        // n = 4: exponent n - 2 = 2 on a factor 2^(1/3)
        let f4 = DensityFamily::new(&m, vec![2.0; m.boundary_edges().len()], 4).unwrap();
        assert!((f4.boundary_factor()[0] - 2f64.powf(1.0 / 3.0)).abs() < 1e-15);
    }

    #[test]
    fn weights_monotone_in_eps_and_precondition() {
        let m = make_disk_mesh(1.0, 0.1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let rho = TrigDensity::random(&mut rng, 4, 0.5);
        let angles = edge_angles(&m);
        let rho = rho.normalized_min(&angles, 1.0);
        let rb = rho.sample_edges(&m);
        assert!(rb.iter().all(|&r| r >= 1.0 - 1e-12));
        let f = DensityFamily::new(&m, rb, 3).unwrap();
        let a = f.profile(0.5);
        let b = f.profile(0.25);
        assert!(a.iter().zip(&b).all(|(x, y)| x >= y && *y >= 1.0));
        let low = vec![0.5; m.boundary_edges().len()];
        assert!(matches!(DensityFamily::new(&m, low, 3), Err(Error::Precondition(_))));
        assert!(DensityFamily::new(&m, vec![1.0; m.boundary_edges().len()], 2).is_err());
    }
}
