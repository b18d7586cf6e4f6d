//! Points on the unit sphere, geodesic distances and mesh statistics.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::exec;

/// Geodesic distance below which two points count as the same point.
pub const DUPLICATE_TOLERANCE: f64 = 1e-12;

/// Smallest admissible candidate-grid frequency for [`mesh_stats`].
pub const MIN_CANDIDATE_RESOLUTION: usize = 16;

/// Candidate points per center used when no resolution is given.
pub const DEFAULT_CANDIDATE_DENSITY: usize = 100;

/// Empirical mesh-ratio bound of the Fibonacci lattice for n >= 50
/// (observed maximum is about 1.75).
pub const FIBONACCI_MESH_RATIO_BOUND: f64 = 2.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpherePoint {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl SpherePoint {
    /// Projects `(x, y, z)` onto the unit sphere.
    pub fn new(x: f64, y: f64, z: f64) -> Result<Self> {
        let r = (x * x + y * y + z * z).sqrt();
        if !(r.is_finite() && r > 0.0) {
            return Err(Error::Domain(format!(
                "cannot normalize ({x}, {y}, {z}) onto the sphere"
            )));
        }
        Ok(Self::unchecked(x / r, y / r, z / r))
    }

    pub(crate) const fn unchecked(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    /// Colatitude `theta` in [0, pi], longitude `phi`.
    pub fn from_spherical(theta: f64, phi: f64) -> Self {
        let s = theta.sin();
        Self::unchecked(s * phi.cos(), s * phi.sin(), theta.cos())
    }

    pub const fn north() -> Self {
        Self::unchecked(0.0, 0.0, 1.0)
    }

    pub const fn south() -> Self {
        Self::unchecked(0.0, 0.0, -1.0)
    }

    #[inline]
    pub fn dot(&self, other: &Self) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    #[inline]
    pub fn cross(&self, other: &Self) -> [f64; 3] {
        [
            self.y * other.z - self.z * other.y,
            self.z * other.x - self.x * other.z,
            self.x * other.y - self.y * other.x,
        ]
    }

    pub fn antipode(&self) -> Self {
        Self::unchecked(-self.x, -self.y, -self.z)
    }

    pub fn to_array(&self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    /// Moves along the great circle towards `direction` (any tangent-ish
    /// vector; its normal component is removed) by `angle` radians.
    pub fn step(&self, direction: [f64; 3], angle: f64) -> Result<Self> {
        let d = direction[0] * self.x + direction[1] * self.y + direction[2] * self.z;
        let t = [
            direction[0] - d * self.x,
            direction[1] - d * self.y,
            direction[2] - d * self.z,
        ];
        let norm = (t[0] * t[0] + t[1] * t[1] + t[2] * t[2]).sqrt();
        if norm == 0.0 {
            return Err(Error::Domain("step direction is normal to the sphere".into()));
        }
        let (s, c) = angle.sin_cos();
        Self::new(
            c * self.x + s * t[0] / norm,
            c * self.y + s * t[1] / norm,
            c * self.z + s * t[2] / norm,
        )
    }
}

/// Great-circle distance in radians, in `[0, pi]`.
///
/// Evaluated as `atan2(|a x b|, a . b)`, which equals the arccosine of the
/// clamped inner product but keeps full precision for nearby points.
#[inline]
pub fn geodesic_distance(a: &SpherePoint, b: &SpherePoint) -> f64 {
    let c = a.cross(b);
    let s = (c[0] * c[0] + c[1] * c[1] + c[2] * c[2]).sqrt();
    s.atan2(a.dot(b).clamp(-1.0, 1.0))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeshStats {
    /// Fill distance (lower estimate), radians.
    pub h: f64,
    /// Separation radius, radians.
    pub q: f64,
    /// `h / q`.
    pub rho: f64,
}

/// Constants of the volume estimates on the 2-sphere.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifoldConstants {
    pub alpha: f64,
    pub omega: f64,
    pub counting: f64,
    pub inradius: f64,
    pub dimension: usize,
}

/// `alpha r^2 <= vol B(x, r) = 2 pi (1 - cos r) <= omega r^2` on `[0, pi]`,
/// packing constant `omega 2^d / alpha`, injectivity radius `pi`.
pub fn sphere_constants() -> ManifoldConstants {
    let alpha = 4.0 / PI;
    let omega = PI;
    let dimension = 2;
    ManifoldConstants {
        alpha,
        omega,
        counting: omega * (1 << dimension) as f64 / alpha,
        inradius: PI,
        dimension,
    }
}

/// Area of the geodesic ball of radius `r`.
pub fn cap_area(r: f64) -> f64 {
    2.0 * PI * (1.0 - r.cos())
}

/// Vertices of the geodesic icosahedral grid of the given frequency
/// (`10 f^2 + 2` points). One vertex sits on each pole, and even
/// frequencies put points on the equator. Grids are nested along divisor
/// chains (`f | g` implies `grid(f)` is a subset of `grid(g)`).
pub fn icosahedral_grid(frequency: usize) -> Vec<SpherePoint> {
    let f = frequency.max(1);
    let zr = 1.0 / 5f64.sqrt();
    let rr = 2.0 / 5f64.sqrt();
    let mut verts = vec![[0.0, 0.0, 1.0]];
    for k in 0..5 {
        let a = 2.0 * PI * k as f64 / 5.0;
        verts.push([rr * a.cos(), rr * a.sin(), zr]);
    }
    for k in 0..5 {
        let a = 2.0 * PI * k as f64 / 5.0 + PI / 5.0;
        verts.push([rr * a.cos(), rr * a.sin(), -zr]);
    }
    verts.push([0.0, 0.0, -1.0]);
    let up = |k: usize| 1 + (k % 5);
    let lo = |k: usize| 6 + (k % 5);
    let mut faces = Vec::with_capacity(20);
    for k in 0..5 {
        faces.push([0, up(k), up(k + 1)]);
        faces.push([up(k), lo(k), up(k + 1)]);
        faces.push([lo(k), lo(k + 1), up(k + 1)]);
        faces.push([11, lo(k + 1), lo(k)]);
    }

    let mut seen: HashMap<[i64; 3], ()> = HashMap::new();
    let mut out = Vec::with_capacity(10 * f * f + 2);
    let key = |p: &SpherePoint| {
        [
            (p.x * 1e9).round() as i64,
            (p.y * 1e9).round() as i64,
            (p.z * 1e9).round() as i64,
        ]
    };
    for face in &faces {
        let [a, b, c] = face.map(|i| verts[i]);
        for i in 0..=f {
            for j in 0..=(f - i) {
                let k = f - i - j;
                let (wi, wj, wk) = (i as f64 / f as f64, j as f64 / f as f64, k as f64 / f as f64);
                let v = [
                    wi * a[0] + wj * b[0] + wk * c[0],
                    wi * a[1] + wj * b[1] + wk * c[1],
                    wi * a[2] + wj * b[2] + wk * c[2],
                ];
                let p = SpherePoint::new(v[0], v[1], v[2]).expect("grid vertex is nonzero");
                if seen.insert(key(&p), ()).is_none() {
                    out.push(p);
                }
            }
        }
    }
    out
}

/// Icosahedral frequency giving at least `density` candidates per center.
pub fn resolution_for_density(n: usize, density: usize) -> usize {
    let target = (density * n.max(1)) as f64;
    (((target - 2.0) / 10.0).max(0.0).sqrt().ceil() as usize).max(MIN_CANDIDATE_RESOLUTION)
}

/// Spherical Fibonacci (golden-angle spiral) points.
pub fn fibonacci_points(n: usize) -> Vec<SpherePoint> {
    let golden = PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|i| {
            let z = 1.0 - (2.0 * i as f64 + 1.0) / n as f64;
            let r = (1.0 - z * z).max(0.0).sqrt();
            let a = golden * i as f64;
            SpherePoint::unchecked(r * a.cos(), r * a.sin(), z)
        })
        .collect()
}

/// For each query point, the index of and distance to the nearest center.
pub fn nearest_centers(centers: &[SpherePoint], queries: &[SpherePoint]) -> Vec<(usize, f64)> {
    exec::map_range(queries.len(), |i| {
        let x = &queries[i];
        let (best, _) = centers
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |(bi, bd), (j, c)| {
                let d = x.dot(c);
                if d > bd {
                    (j, d)
                } else {
                    (bi, bd)
                }
            });
        (best, geodesic_distance(x, &centers[best]))
    })
}

/// Separation radius plus the closest pair, checking for duplicates.
fn separation(points: &[SpherePoint]) -> Result<(f64, usize, usize)> {
    let per_row = exec::map_range(points.len(), |i| {
        let mut best = (f64::INFINITY, i, i);
        for j in (i + 1)..points.len() {
            let d = geodesic_distance(&points[i], &points[j]);
            if d < best.0 {
                best = (d, i, j);
            }
        }
        best
    });
    let (dmin, i, j) = per_row
        .into_iter()
        .fold((f64::INFINITY, 0, 0), |a, b| if b.0 < a.0 { b } else { a });
    if dmin < DUPLICATE_TOLERANCE {
        return Err(Error::DegenerateSet {
            first: i,
            second: j,
            distance: dmin,
        });
    }
    Ok((dmin / 2.0, i, j))
}

/// Mesh norm, separation radius and mesh ratio.
///
/// `q` is exact. `h` is the largest nearest-center distance over the
/// icosahedral grid of frequency `candidate_resolution`, raised to `q` if
/// smaller (the true mesh norm is never below `q` for two or more points),
/// so it is a lower bound of the true value.
pub fn mesh_stats(points: &[SpherePoint], candidate_resolution: usize) -> Result<MeshStats> {
    if points.len() < 2 {
        return Err(Error::Size {
            required: 2,
            found: points.len(),
        });
    }
    if candidate_resolution < MIN_CANDIDATE_RESOLUTION {
        return Err(Error::Domain(format!(
            "candidate resolution {candidate_resolution} < {MIN_CANDIDATE_RESOLUTION}"
        )));
    }
    let (q, _, _) = separation(points)?;
    let grid = icosahedral_grid(candidate_resolution);
    let h_grid = nearest_centers(points, &grid)
        .into_iter()
        .map(|(_, d)| d)
        .fold(0.0, f64::max);
    let h = h_grid.max(q);
    Ok(MeshStats { h, q, rho: h / q })
}

/// Centers together with their mesh statistics.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PointSet {
    points: Vec<SpherePoint>,
    stats: MeshStats,
    candidate_resolution: usize,
}

/// Sidecar record written next to a point-set CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointSetSidecar {
    pub n: usize,
    pub h: f64,
    pub q: f64,
    pub rho: f64,
    pub candidate_resolution: usize,
}

impl PointSet {
    pub fn new(points: Vec<SpherePoint>, candidate_resolution: usize) -> Result<Self> {
        let stats = mesh_stats(&points, candidate_resolution)?;
        Ok(Self {
            points,
            stats,
            candidate_resolution,
        })
    }

    /// Uses [`DEFAULT_CANDIDATE_DENSITY`] candidates per point.
    pub fn with_default_resolution(points: Vec<SpherePoint>) -> Result<Self> {
        let r = resolution_for_density(points.len(), DEFAULT_CANDIDATE_DENSITY);
        Self::new(points, r)
    }

    /// A lone center. Its antipode plays the role of the nearest other
    /// center, so `q = pi/2` and `h = pi`.
    pub fn singleton(point: SpherePoint) -> Self {
        Self {
            points: vec![point],
            stats: MeshStats {
                h: PI,
                q: PI / 2.0,
                rho: 2.0,
            },
            candidate_resolution: 0,
        }
    }

    pub fn points(&self) -> &[SpherePoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn stats(&self) -> MeshStats {
        self.stats
    }

    pub fn mesh_norm(&self) -> f64 {
        self.stats.h
    }

    pub fn separation_radius(&self) -> f64 {
        self.stats.q
    }

    pub fn mesh_ratio(&self) -> f64 {
        self.stats.rho
    }

    pub fn candidate_resolution(&self) -> usize {
        self.candidate_resolution
    }

    /// SHA-256 over the little-endian coordinates.
    pub fn digest(&self) -> String {
        let mut hasher = Sha256::new();
        for p in &self.points {
            for c in p.to_array() {
                hasher.update(c.to_le_bytes());
            }
        }
        hex::encode(hasher.finalize())
    }

    pub fn sidecar(&self) -> PointSetSidecar {
        PointSetSidecar {
            n: self.len(),
            h: self.stats.h,
            q: self.stats.q,
            rho: self.stats.rho,
            candidate_resolution: self.candidate_resolution,
        }
    }

    /// Writes `x,y,z` rows; coordinates use round-trip float formatting.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        write_points_csv(&self.points, path)
    }

    pub fn write_sidecar(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(&self.sidecar())?)?;
        Ok(())
    }

    /// Reads an `x,y,z` CSV, normalizing every row onto the sphere.
    pub fn read_csv(path: impl AsRef<Path>, candidate_resolution: Option<usize>) -> Result<Self> {
        let points = read_points_csv(path)?;
        match candidate_resolution {
            Some(r) => Self::new(points, r),
            None => Self::with_default_resolution(points),
        }
    }
}

pub fn write_points_csv(points: &[SpherePoint], path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["x", "y", "z"])?;
    for p in points {
        w.write_record([p.x.to_string(), p.y.to_string(), p.z.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_points_csv(path: impl AsRef<Path>) -> Result<Vec<SpherePoint>> {
    #[derive(Deserialize)]
    struct Row {
        x: f64,
        y: f64,
        z: f64,
    }
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize::<Row>()
        .map(|row| {
            let row = row?;
            SpherePoint::new(row.x, row.y, row.z)
        })
        .collect()
}

/// Spherical Fibonacci lattice of `n` points with default mesh statistics.
pub fn generate_fibonacci(n: usize) -> Result<PointSet> {
    if n < 2 {
        return Err(Error::Size {
            required: 2,
            found: n,
        });
    }
    PointSet::with_default_resolution(fibonacci_points(n))
}

/// Greedy thinning: scans `points` in order and keeps a point when it lies
/// at least `2 q_min` from every point kept so far.
pub fn thin_to_separation(points: &[SpherePoint], q_min: f64) -> Result<PointSet> {
    if points.is_empty() {
        return Err(Error::Size {
            required: 1,
            found: 0,
        });
    }
    if !(q_min > 0.0) {
        return Err(Error::Domain(format!("q_min must be positive, got {q_min}")));
    }
    let min_dist = 2.0 * q_min;
    let mut kept: Vec<SpherePoint> = Vec::new();
    for p in points {
        if kept.iter().all(|k| geodesic_distance(k, p) >= min_dist) {
            kept.push(*p);
        }
    }
    if kept.len() == 1 {
        return Ok(PointSet::singleton(kept[0]));
    }
    PointSet::with_default_resolution(kept)
}
