//! Pinhole-camera raycaster producing ideal intensity, metric depth, and
//! ground-truth segmentation frames.
//!
//! Scenes have no background: rays that miss the mesh produce zero intensity,
//! an invalid depth, and a `Background` segmentation label. All geometry math
//! runs in `f64`; frames store `f32`.

use crate::models::{ComponentClass, DroneMesh};
use crate::pose::{self, Pose, Vec3};
use rand::Rng;
use std::io::Write;

pub const ROWS: usize = 80;
pub const COLS: usize = 240;
pub const PIXELS: usize = ROWS * COLS;

/// Pinhole camera. The default sits at the world origin looking along `+z`
/// with `x` right and `y` down.
#[derive(Debug, Clone)]
pub struct CameraModel {
    pub focal_px: f64,
    /// Principal point: (column, row) of the optical axis.
    pub cx: f64,
    pub cy: f64,
    pub rows: usize,
    pub cols: usize,
    pub position: Vec3,
    /// World-from-camera rotation.
    pub orientation: pose::Mat3,
}

impl Default for CameraModel {
    fn default() -> Self {
        CameraModel {
            focal_px: 650.0,
            cx: COLS as f64 / 2.0,
            cy: ROWS as f64 / 2.0,
            rows: ROWS,
            cols: COLS,
            position: [0.0, 0.0, 0.0],
            orientation: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
        }
    }
}

impl CameraModel {
    /// Unit ray through the center of pixel `(row, col)`, in world frame.
    pub fn pixel_ray(&self, row: usize, col: usize) -> Vec3 {
        let d = [
            (col as f64 + 0.5 - self.cx) / self.focal_px,
            (row as f64 + 0.5 - self.cy) / self.focal_px,
            1.0,
        ];
        pose::normalize(pose::mat_vec(&self.orientation, d))
    }

    /// Project a world point; returns `(u, v, z)` with `u`/`v` in pixels and
    /// `z` the camera-frame depth along the optical axis.
    pub fn project(&self, p: Vec3) -> (f64, f64, f64) {
        let rel = [
            p[0] - self.position[0],
            p[1] - self.position[1],
            p[2] - self.position[2],
        ];
        let cam = pose::mat_vec(&pose::transpose(&self.orientation), rel);
        (
            self.focal_px * cam[0] / cam[2] + self.cx,
            self.focal_px * cam[1] / cam[2] + self.cy,
            cam[2],
        )
    }
}

/// Single directional light plus an ambient floor.
#[derive(Debug, Clone)]
pub struct LightModel {
    /// Unit vector from surfaces toward the light.
    pub direction: Vec3,
    /// Ambient fraction in `[0, 1]`.
    pub ambient: f64,
    /// Expected photon count for a fully lit surface facing the light.
    pub photon_scale: f64,
}

impl LightModel {
    pub const DEFAULT_AMBIENT: f64 = 0.3;
    pub const DEFAULT_PHOTON_SCALE: f64 = 50.0;

    /// Draw a light direction uniformly from the hemisphere above the scene
    /// (world up is `-y`).
    pub fn sample_upper_hemisphere<R: Rng>(rng: &mut R) -> LightModel {
        let cos_t: f64 = rng.random_range(0.0..=1.0);
        let phi: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        let sin_t = (1.0 - cos_t * cos_t).sqrt();
        let up = [0.0, -1.0, 0.0];
        let e1 = [1.0, 0.0, 0.0];
        let e2 = [0.0, 0.0, 1.0];
        let mut dir = [0.0; 3];
        for k in 0..3 {
            dir[k] = cos_t * up[k] + sin_t * (phi.cos() * e1[k] + phi.sin() * e2[k]);
        }
        LightModel {
            direction: pose::normalize(dir),
            ambient: Self::DEFAULT_AMBIENT,
            photon_scale: Self::DEFAULT_PHOTON_SCALE,
        }
    }

    pub fn overhead() -> LightModel {
        LightModel {
            direction: [0.0, -1.0, 0.0],
            ambient: Self::DEFAULT_AMBIENT,
            photon_scale: Self::DEFAULT_PHOTON_SCALE,
        }
    }
}

/// Ideal (noise-free) render output.
#[derive(Debug, Clone, PartialEq)]
pub struct RenderedFrame {
    pub rows: usize,
    pub cols: usize,
    /// Expected photon counts, row-major.
    pub intensity: Vec<f32>,
    /// Euclidean camera-to-surface distance in meters; only meaningful where
    /// `valid` is set.
    pub depth: Vec<f32>,
    pub valid: Vec<bool>,
    pub segmap: Vec<ComponentClass>,
}

impl RenderedFrame {
    pub fn idx(&self, row: usize, col: usize) -> usize {
        row * self.cols + col
    }
}

#[derive(Clone, Copy)]
struct Hit {
    t: f64,
    tri: u32,
}

/// Watertight-enough Moller-Trumbore, two-sided.
fn ray_triangle(orig: Vec3, dir: Vec3, v0: Vec3, v1: Vec3, v2: Vec3) -> Option<f64> {
    let e1 = [v1[0] - v0[0], v1[1] - v0[1], v1[2] - v0[2]];
    let e2 = [v2[0] - v0[0], v2[1] - v0[1], v2[2] - v0[2]];
    let pv = pose::cross(dir, e2);
    let det = pose::dot(e1, pv);
    if det.abs() < 1e-14 {
        return None;
    }
    let inv = 1.0 / det;
    let tv = [orig[0] - v0[0], orig[1] - v0[1], orig[2] - v0[2]];
    let u = pose::dot(tv, pv) * inv;
    if !(0.0..=1.0).contains(&u) {
        return None;
    }
    let qv = pose::cross(tv, e1);
    let v = pose::dot(dir, qv) * inv;
    if v < 0.0 || u + v > 1.0 {
        return None;
    }
    let t = pose::dot(e2, qv) * inv;
    if t > 1e-9 {
        Some(t)
    } else {
        None
    }
}

fn better(candidate: Option<(f64, u32)>, best: &mut Option<Hit>) {
    if let Some((t, tri)) = candidate {
        let replace = match best {
            None => true,
            Some(h) => t < h.t || (t == h.t && tri < h.tri),
        };
        if replace {
            *best = Some(Hit { t, tri });
        }
    }
}

/// Bounding-volume hierarchy over mesh triangles. Hit results are exactly
/// those of an index-ordered brute-force scan: ties on `t` resolve to the
/// lowest triangle index, and nodes are only pruned when strictly farther
/// than the current best hit.
pub struct Bvh {
    nodes: Vec<BvhNode>,
    tri_order: Vec<u32>,
}

struct BvhNode {
    lo: Vec3,
    hi: Vec3,
    /// Leaf when `count > 0`; otherwise `left`/`left + 1`-style child pair.
    left: u32,
    right: u32,
    start: u32,
    count: u32,
}

const BVH_LEAF: usize = 4;

impl Bvh {
    pub fn build(mesh: &DroneMesh) -> Bvh {
        let n = mesh.triangles.len();
        let mut order: Vec<u32> = (0..n as u32).collect();
        let centroids: Vec<Vec3> = mesh
            .triangles
            .iter()
            .map(|t| {
                let [a, b, c] = [
                    mesh.vertices[t[0] as usize],
                    mesh.vertices[t[1] as usize],
                    mesh.vertices[t[2] as usize],
                ];
                [
                    (a[0] + b[0] + c[0]) / 3.0,
                    (a[1] + b[1] + c[1]) / 3.0,
                    (a[2] + b[2] + c[2]) / 3.0,
                ]
            })
            .collect();
        let mut bvh = Bvh {
            nodes: Vec::new(),
            tri_order: Vec::new(),
        };
        if n > 0 {
            bvh.build_node(mesh, &centroids, &mut order, 0);
        }
        bvh.tri_order = order;
        bvh
    }

    fn build_node(
        &mut self,
        mesh: &DroneMesh,
        centroids: &[Vec3],
        order: &mut [u32],
        offset: usize,
    ) -> u32 {
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for &ti in order.iter() {
            for &vi in &mesh.triangles[ti as usize] {
                let v = mesh.vertices[vi as usize];
                for k in 0..3 {
                    lo[k] = lo[k].min(v[k]);
                    hi[k] = hi[k].max(v[k]);
                }
            }
        }
        let me = self.nodes.len() as u32;
        self.nodes.push(BvhNode {
            lo,
            hi,
            left: 0,
            right: 0,
            start: offset as u32,
            count: 0,
        });
        if order.len() <= BVH_LEAF {
            self.nodes[me as usize].count = order.len() as u32;
            return me;
        }
        // Split on the widest centroid axis at the median.
        let mut clo = [f64::INFINITY; 3];
        let mut chi = [f64::NEG_INFINITY; 3];
        for &ti in order.iter() {
            let c = centroids[ti as usize];
            for k in 0..3 {
                clo[k] = clo[k].min(c[k]);
                chi[k] = chi[k].max(c[k]);
            }
        }
        let axis = (0..3)
            .max_by(|&a, &b| (chi[a] - clo[a]).partial_cmp(&(chi[b] - clo[b])).unwrap())
            .unwrap();
        let mid = order.len() / 2;
        order.select_nth_unstable_by(mid, |&a, &b| {
            centroids[a as usize][axis]
                .partial_cmp(&centroids[b as usize][axis])
                .unwrap()
                .then(a.cmp(&b))
        });
        let (left_half, right_half) = order.split_at_mut(mid);
        let l = self.build_node(mesh, centroids, left_half, offset);
        let r = self.build_node(mesh, centroids, right_half, offset + mid);
        self.nodes[me as usize].left = l;
        self.nodes[me as usize].right = r;
        me
    }

    fn slab(&self, node: &BvhNode, orig: Vec3, inv_dir: Vec3) -> Option<f64> {
        let mut t0 = 0.0f64;
        let mut t1 = f64::INFINITY;
        for k in 0..3 {
            let a = (node.lo[k] - orig[k]) * inv_dir[k];
            let b = (node.hi[k] - orig[k]) * inv_dir[k];
            let (near, far) = if a <= b { (a, b) } else { (b, a) };
            t0 = t0.max(near);
            t1 = t1.min(far);
            if t0 > t1 {
                return None;
            }
        }
        Some(t0)
    }

    fn intersect(&self, mesh: &DroneMesh, orig: Vec3, dir: Vec3) -> Option<Hit> {
        if self.nodes.is_empty() {
            return None;
        }
        let inv_dir = [1.0 / dir[0], 1.0 / dir[1], 1.0 / dir[2]];
        let mut best: Option<Hit> = None;
        let mut stack = [0u32; 64];
        let mut sp = 0usize;
        stack[sp] = 0;
        sp += 1;
        while sp > 0 {
            sp -= 1;
            let node = &self.nodes[stack[sp] as usize];
            let entry = match self.slab(node, orig, inv_dir) {
                Some(t) => t,
                None => continue,
            };
            if let Some(h) = &best {
                if entry > h.t {
                    continue;
                }
            }
            if node.count > 0 {
                for &ti in
                    &self.tri_order[node.start as usize..(node.start + node.count) as usize]
                {
                    let tri = mesh.triangles[ti as usize];
                    let cand = ray_triangle(
                        orig,
                        dir,
                        mesh.vertices[tri[0] as usize],
                        mesh.vertices[tri[1] as usize],
                        mesh.vertices[tri[2] as usize],
                    )
                    .map(|t| (t, ti));
                    better(cand, &mut best);
                }
            } else {
                // Push the far child first so the near one pops next.
                let l = node.left as usize;
                let r = node.right as usize;
                let tl = self.slab(&self.nodes[l], orig, inv_dir);
                let tr = self.slab(&self.nodes[r], orig, inv_dir);
                let (first, second) = match (tl, tr) {
                    (Some(a), Some(b)) if b < a => (r, l),
                    _ => (l, r),
                };
                stack[sp] = second as u32;
                sp += 1;
                stack[sp] = first as u32;
                sp += 1;
            }
        }
        best
    }
}

fn brute_force_intersect(mesh: &DroneMesh, orig: Vec3, dir: Vec3) -> Option<Hit> {
    let mut best: Option<Hit> = None;
    for (ti, tri) in mesh.triangles.iter().enumerate() {
        let cand = ray_triangle(
            orig,
            dir,
            mesh.vertices[tri[0] as usize],
            mesh.vertices[tri[1] as usize],
            mesh.vertices[tri[2] as usize],
        )
        .map(|t| (t, ti as u32));
        better(cand, &mut best);
    }
    best
}

fn shade(mesh: &DroneMesh, tri: u32, dir: Vec3, light: &LightModel) -> f64 {
    let t = mesh.triangles[tri as usize];
    let [a, b, c] = [
        mesh.vertices[t[0] as usize],
        mesh.vertices[t[1] as usize],
        mesh.vertices[t[2] as usize],
    ];
    let e1 = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
    let e2 = [c[0] - a[0], c[1] - a[1], c[2] - a[2]];
    let mut n = pose::cross(e1, e2);
    let len = pose::norm(n);
    if len == 0.0 {
        return light.photon_scale * light.ambient;
    }
    for v in &mut n {
        *v /= len;
    }
    // Orient the normal toward the camera.
    if pose::dot(n, dir) > 0.0 {
        for v in &mut n {
            *v = -*v;
        }
    }
    let lambert = pose::dot(n, light.direction).max(0.0);
    light.photon_scale * (light.ambient + (1.0 - light.ambient) * lambert)
}

fn render_with<F>(mesh: &DroneMesh, camera: &CameraModel, light: &LightModel, intersect: F)
    -> crate::Result<RenderedFrame>
where
    F: Fn(Vec3, Vec3) -> Option<Hit>,
{
    for &v in &mesh.vertices {
        let (_, _, z) = camera.project(v);
        if z <= 0.0 {
            return Err(crate::Error::Render(
                "mesh vertex behind the camera".into(),
            ));
        }
    }
    let n = camera.rows * camera.cols;
    let mut frame = RenderedFrame {
        rows: camera.rows,
        cols: camera.cols,
        intensity: vec![0.0; n],
        depth: vec![0.0; n],
        valid: vec![false; n],
        segmap: vec![ComponentClass::Background; n],
    };
    for row in 0..camera.rows {
        for col in 0..camera.cols {
            let dir = camera.pixel_ray(row, col);
            if let Some(hit) = intersect(camera.position, dir) {
                let i = row * camera.cols + col;
                frame.depth[i] = hit.t as f32;
                frame.valid[i] = true;
                frame.segmap[i] = mesh.triangle_class[hit.tri as usize];
                frame.intensity[i] = shade(mesh, hit.tri, dir, light) as f32;
            }
        }
    }
    Ok(frame)
}

/// Render through a bounding-volume hierarchy.
pub fn render(
    mesh: &DroneMesh,
    camera: &CameraModel,
    light: &LightModel,
) -> crate::Result<RenderedFrame> {
    let bvh = Bvh::build(mesh);
    render_with(mesh, camera, light, |o, d| bvh.intersect(mesh, o, d))
}

/// Reference renderer testing every triangle per pixel.
pub fn render_brute_force(
    mesh: &DroneMesh,
    camera: &CameraModel,
    light: &LightModel,
) -> crate::Result<RenderedFrame> {
    render_with(mesh, camera, light, |o, d| brute_force_intersect(mesh, o, d))
}

/// Target placement sampling parameters.
#[derive(Debug, Clone)]
pub struct PlacementConfig {
    /// Camera-to-target distance interval in meters.
    pub range_m: (f64, f64),
    /// Transverse jitter half-widths in meters (horizontal, vertical).
    pub jitter_m: (f64, f64),
    pub max_retries: usize,
}

impl Default for PlacementConfig {
    fn default() -> Self {
        PlacementConfig {
            range_m: (9.0, 16.0),
            jitter_m: (0.25, 0.12),
            max_retries: 100,
        }
    }
}

/// Pose the drone near the optical axis at a sampled distance, resampling
/// until the whole silhouette projects inside the frame.
///
/// Draw order per attempt: distance, horizontal jitter, vertical jitter.
pub fn place_drone<R: Rng>(
    mesh: &DroneMesh,
    pose: &Pose,
    rng: &mut R,
    config: &PlacementConfig,
) -> crate::Result<(DroneMesh, CameraModel)> {
    let camera = CameraModel::default();
    let (lo, hi) = config.range_m;
    if !(lo.is_finite() && hi.is_finite() && 0.0 < lo && lo <= hi) {
        return Err(crate::Error::config(format!(
            "invalid range interval [{lo}, {hi}]"
        )));
    }
    for _ in 0..config.max_retries.max(1) {
        let z = if lo == hi { lo } else { rng.random_range(lo..=hi) };
        let jx = config.jitter_m.0;
        let jy = config.jitter_m.1;
        let x = if jx == 0.0 { 0.0 } else { rng.random_range(-jx..=jx) };
        let y = if jy == 0.0 { 0.0 } else { rng.random_range(-jy..=jy) };
        let world = crate::models::transform_mesh(mesh, pose, [x, y, z]);
        let inside = world.vertices.iter().all(|&v| {
            let (u, vv, z) = camera.project(v);
            z > 0.0 && u >= 0.0 && u < camera.cols as f64 && vv >= 0.0 && vv < camera.rows as f64
        });
        if inside {
            return Ok((world, camera));
        }
    }
    Err(crate::Error::RetryExhausted(format!(
        "no placement kept the silhouette in frame after {} tries",
        config.max_retries
    )))
}

/// Debug dump as plain-text PGM (intensity, depth) and PPM (segmentation).
pub fn write_debug_images<W: Write>(
    frame: &RenderedFrame,
    intensity_out: &mut W,
    depth_out: &mut W,
    segmap_out: &mut W,
) -> crate::Result<()> {
    let max_i = frame.intensity.iter().cloned().fold(0.0f32, f32::max).max(1e-6);
    writeln!(intensity_out, "P2\n{} {}\n255", frame.cols, frame.rows)?;
    let max_d = frame
        .depth
        .iter()
        .zip(&frame.valid)
        .filter(|(_, &v)| v)
        .map(|(&d, _)| d)
        .fold(0.0f32, f32::max)
        .max(1e-6);
    writeln!(depth_out, "P2\n{} {}\n255", frame.cols, frame.rows)?;
    writeln!(segmap_out, "P3\n{} {}\n255", frame.cols, frame.rows)?;
    for row in 0..frame.rows {
        let mut iline = String::new();
        let mut dline = String::new();
        let mut sline = String::new();
        for col in 0..frame.cols {
            let i = frame.idx(row, col);
            iline.push_str(&format!("{} ", (frame.intensity[i] / max_i * 255.0) as u8));
            let d = if frame.valid[i] {
                255 - (frame.depth[i] / max_d * 255.0) as u8
            } else {
                0
            };
            dline.push_str(&format!("{d} "));
            let rgb = match frame.segmap[i] {
                ComponentClass::Background => [0, 0, 0],
                ComponentClass::Body => [60, 120, 255],
                ComponentClass::Engine => [255, 80, 60],
                ComponentClass::Camera => [80, 255, 120],
            };
            sline.push_str(&format!("{} {} {} ", rgb[0], rgb[1], rgb[2]));
        }
        writeln!(intensity_out, "{}", iline.trim_end())?;
        writeln!(depth_out, "{}", dline.trim_end())?;
        writeln!(segmap_out, "{}", sline.trim_end())?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{build_model, transform_mesh, transform_mesh_rigid, Archetype};
    use crate::pose::{sample_pose, RegimePreset};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn quad_at(z: f64, half: f64) -> DroneMesh {
        DroneMesh {
            vertices: vec![
                [-half, -half, z],
                [half, -half, z],
                [half, half, z],
                [-half, half, z],
            ],
            triangles: vec![[0, 1, 2], [0, 2, 3]],
            triangle_class: vec![ComponentClass::Body; 2],
            archetype: Archetype::ModelA,
        }
    }

    #[test]
    fn face_on_plane_depth_is_analytic() {
        let mesh = quad_at(5.0, 1.0);
        let camera = CameraModel::default();
        let frame = render(&mesh, &camera, &LightModel::overhead()).unwrap();
        for row in 39..=41 {
            for col in 119..=121 {
                let i = frame.idx(row, col);
                assert!(frame.valid[i]);
                assert!(
                    (frame.depth[i] as f64 - 5.0).abs() < 1e-4,
                    "depth {} at ({row},{col})",
                    frame.depth[i]
                );
            }
        }
    }

    #[test]
    fn icosphere_center_depth_within_faceting_bound() {
        // A sphere of radius r at distance d: the center pixel hits near the
        // closest point, so depth = d - r up to the tessellation sagitta.
        let mesh = crate::models::test_icosphere([0.0, 0.0, 10.0], 0.5, 2);

        // Oracle bound from the mesh itself: each triangle lies in a plane at
        // distance |n . (v0 - center)| from the sphere center, so no hit can
        // be more than (r - plane distance) inside the true sphere.
        let mut sagitta = 0.0f64;
        for tri in &mesh.triangles {
            let [a, b, c] = [
                mesh.vertices[tri[0] as usize],
                mesh.vertices[tri[1] as usize],
                mesh.vertices[tri[2] as usize],
            ];
            let n = pose::normalize(pose::cross(
                [b[0] - a[0], b[1] - a[1], b[2] - a[2]],
                [c[0] - a[0], c[1] - a[1], c[2] - a[2]],
            ));
            let plane_dist = pose::dot(n, [a[0], a[1], a[2] - 10.0]).abs();
            sagitta = sagitta.max(0.5 - plane_dist);
        }
        assert!(sagitta > 0.0 && sagitta < 0.02, "sagitta {sagitta}");

        let camera = CameraModel::default();
        let frame = render(&mesh, &camera, &LightModel::overhead()).unwrap();
        let i = frame.idx(40, 120);
        assert!(frame.valid[i]);
        let depth = frame.depth[i] as f64;
        assert!(
            depth >= 9.5 - 1e-6 && depth <= 9.5 + sagitta + 1e-6,
            "depth {depth} outside [9.5, 9.5 + {sagitta}]"
        );
    }

    #[test]
    fn empty_scene_is_all_background() {
        let mesh = DroneMesh {
            vertices: vec![],
            triangles: vec![],
            triangle_class: vec![],
            archetype: Archetype::ModelA,
        };
        let frame = render(&mesh, &CameraModel::default(), &LightModel::overhead()).unwrap();
        assert!(frame.valid.iter().all(|&v| !v));
        assert!(frame.intensity.iter().all(|&x| x == 0.0));
        assert!(frame
            .segmap
            .iter()
            .all(|&c| c == ComponentClass::Background));
    }

    #[test]
    fn mesh_behind_camera_is_an_error() {
        let mesh = quad_at(-5.0, 1.0);
        let err = render(&mesh, &CameraModel::default(), &LightModel::overhead()).unwrap_err();
        assert!(matches!(err, crate::Error::Render(_)));
    }

    #[test]
    fn validity_mask_equals_foreground_segmap() {
        let mesh = build_model(Archetype::ModelB);
        let regime = RegimePreset::Full.regime();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..5 {
            let pose = sample_pose(&regime, &mut rng);
            let world = transform_mesh(&mesh, &pose, [0.0, 0.0, 10.0]);
            let frame = render(&world, &CameraModel::default(), &LightModel::overhead()).unwrap();
            for i in 0..PIXELS {
                assert_eq!(
                    frame.valid[i],
                    frame.segmap[i] != ComponentClass::Background
                );
            }
        }
    }

    #[test]
    fn bvh_matches_brute_force_bit_for_bit() {
        let regime = RegimePreset::Full.regime();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for arch in Archetype::ALL {
            let mesh = build_model(arch);
            let pose = sample_pose(&regime, &mut rng);
            let world = transform_mesh(&mesh, &pose, [0.1, -0.05, 11.0]);
            let camera = CameraModel::default();
            let light = LightModel::sample_upper_hemisphere(&mut rng);
            let fast = render(&world, &camera, &light).unwrap();
            let slow = render_brute_force(&world, &camera, &light).unwrap();
            assert_eq!(fast.segmap, slow.segmap);
            assert_eq!(fast.depth, slow.depth);
            assert_eq!(fast.intensity, slow.intensity);
            assert_eq!(fast.valid, slow.valid);
        }
    }

    #[test]
    fn rendering_is_deterministic() {
        let mesh = build_model(Archetype::ModelA);
        let world = transform_mesh(&mesh, &Pose::LEVEL_FACING_AWAY, [0.0, 0.0, 10.0]);
        let camera = CameraModel::default();
        let light = LightModel::overhead();
        let f1 = render(&world, &camera, &light).unwrap();
        let f2 = render(&world, &camera, &light).unwrap();
        assert_eq!(f1, f2);
    }

    #[test]
    fn frame_invariance_under_shared_rigid_motion() {
        let mesh = build_model(Archetype::ModelA);
        let regime = RegimePreset::Full.regime();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..10 {
            let pose = sample_pose(&regime, &mut rng);
            let world = transform_mesh(&mesh, &pose, [0.0, 0.0, 10.0]);
            let light = LightModel::sample_upper_hemisphere(&mut rng);
            let base = render(&world, &CameraModel::default(), &light).unwrap();

            // Shared rigid motion applied to mesh, camera, and light.
            let motion_pose = sample_pose(&regime, &mut rng);
            let m = pose::pose_to_rotation(&motion_pose);
            let shift = [1.5, -0.7, 2.0];
            let moved_mesh = transform_mesh_rigid(&world, &m, shift);
            let moved_camera = CameraModel {
                orientation: m,
                position: shift,
                ..CameraModel::default()
            };
            let moved_light = LightModel {
                direction: pose::mat_vec(&m, light.direction),
                ..light.clone()
            };
            let moved = render(&moved_mesh, &moved_camera, &moved_light).unwrap();
            assert_eq!(base.segmap, moved.segmap);
            assert_eq!(base.valid, moved.valid);
            assert_eq!(base.depth, moved.depth);
            assert_eq!(base.intensity, moved.intensity);
        }
    }

    #[test]
    fn placement_zero_width_is_exact() {
        let mesh = build_model(Archetype::ModelA);
        let config = PlacementConfig {
            range_m: (10.0, 10.0),
            jitter_m: (0.0, 0.0),
            max_retries: 1,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let (world, _) =
            place_drone(&mesh, &Pose::LEVEL_FACING_AWAY, &mut rng, &config).unwrap();
        // Center of mass of the transformed vertices sits at (0, 0, 10).
        let local = transform_mesh(&mesh, &Pose::LEVEL_FACING_AWAY, [0.0, 0.0, 10.0]);
        assert_eq!(world.vertices, local.vertices);
    }

    #[test]
    fn placement_keeps_every_vertex_in_frame() {
        let regime = RegimePreset::Full.regime();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for arch in Archetype::ALL {
            let mesh = build_model(arch);
            for _ in 0..20 {
                let pose = sample_pose(&regime, &mut rng);
                let (world, camera) =
                    place_drone(&mesh, &pose, &mut rng, &PlacementConfig::default()).unwrap();
                for &v in &world.vertices {
                    let (u, vv, z) = camera.project(v);
                    assert!(z > 0.0);
                    assert!((0.0..camera.cols as f64).contains(&u));
                    assert!((0.0..camera.rows as f64).contains(&vv));
                }
            }
        }
    }

    #[test]
    fn placement_is_deterministic_per_seed() {
        let mesh = build_model(Archetype::ModelB);
        let pose = Pose::LEVEL_FACING_AWAY;
        let config = PlacementConfig::default();
        let (w1, _) = place_drone(&mesh, &pose, &mut ChaCha8Rng::seed_from_u64(9), &config)
            .unwrap();
        let (w2, _) = place_drone(&mesh, &pose, &mut ChaCha8Rng::seed_from_u64(9), &config)
            .unwrap();
        assert_eq!(w1.vertices, w2.vertices);
    }

    #[test]
    fn body_dominates_projected_area() {
        let regime = RegimePreset::Full.regime();
        let mut rng = ChaCha8Rng::seed_from_u64(20);
        let mesh = build_model(Archetype::ModelA);
        for _ in 0..8 {
            let pose = sample_pose(&regime, &mut rng);
            let world = transform_mesh(&mesh, &pose, [0.0, 0.0, 9.0]);
            let frame = render(&world, &CameraModel::default(), &LightModel::overhead()).unwrap();
            let count = |class| frame.segmap.iter().filter(|&&c| c == class).count();
            let body = count(ComponentClass::Body);
            let engine = count(ComponentClass::Engine);
            let camera = count(ComponentClass::Camera);
            assert!(
                body > engine && body > camera,
                "body {body} engine {engine} camera {camera} at {pose:?}"
            );
        }
    }
}
