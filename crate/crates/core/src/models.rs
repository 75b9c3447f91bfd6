//! Procedural triangle-mesh drone models with per-triangle component labels.
//!
//! Two archetypes are built from primitive solids in the body frame
//! (`+x` forward, `+y` left, `+z` up, origin at the center of mass):
//!
//! * `ModelA` — compact quad: flat body slab, four arms ending in rotor
//!   disk + motor pods, one front camera sphere. Geometry is nearly
//!   invariant under a 180 degree roll, so roll carries the weakest cues.
//! * `ModelB` — larger craft: tall body, raised arms, four engine pods,
//!   landing skids below and an underslung camera sphere, making top and
//!   bottom clearly distinct.

use crate::pose::{self, Mat3, Pose, Vec3};
use std::io::Write;

/// Semantic class of a pixel or triangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[repr(u8)]
pub enum ComponentClass {
    Background = 0,
    Body = 1,
    Engine = 2,
    Camera = 3,
}

impl ComponentClass {
    /// The three foreground classes, in label order.
    pub const FOREGROUND: [ComponentClass; 3] = [
        ComponentClass::Body,
        ComponentClass::Engine,
        ComponentClass::Camera,
    ];

    pub fn from_u8(v: u8) -> crate::Result<ComponentClass> {
        match v {
            0 => Ok(ComponentClass::Background),
            1 => Ok(ComponentClass::Body),
            2 => Ok(ComponentClass::Engine),
            3 => Ok(ComponentClass::Camera),
            other => Err(crate::Error::Format(format!("bad component class {other}"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ComponentClass::Background => "background",
            ComponentClass::Body => "body",
            ComponentClass::Engine => "engine",
            ComponentClass::Camera => "camera",
        }
    }

    /// Channel index in the segmentation output (foreground classes only).
    pub fn channel(&self) -> Option<usize> {
        match self {
            ComponentClass::Background => None,
            ComponentClass::Body => Some(0),
            ComponentClass::Engine => Some(1),
            ComponentClass::Camera => Some(2),
        }
    }
}

/// Which drone the mesh represents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Archetype {
    ModelA,
    ModelB,
}

impl Archetype {
    pub const ALL: [Archetype; 2] = [Archetype::ModelA, Archetype::ModelB];

    pub fn id(&self) -> u8 {
        match self {
            Archetype::ModelA => 0,
            Archetype::ModelB => 1,
        }
    }

    pub fn from_id(id: u8) -> crate::Result<Archetype> {
        match id {
            0 => Ok(Archetype::ModelA),
            1 => Ok(Archetype::ModelB),
            other => Err(crate::Error::Format(format!("bad drone id {other}"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Archetype::ModelA => "a",
            Archetype::ModelB => "b",
        }
    }
}

impl std::str::FromStr for Archetype {
    type Err = crate::Error;

    fn from_str(s: &str) -> crate::Result<Archetype> {
        match s {
            "a" | "model-a" => Ok(Archetype::ModelA),
            "b" | "model-b" => Ok(Archetype::ModelB),
            other => Err(crate::Error::config(format!("unknown archetype `{other}`"))),
        }
    }
}

/// Labeled triangle mesh, immutable once built.
#[derive(Debug, Clone)]
pub struct DroneMesh {
    pub vertices: Vec<Vec3>,
    /// Vertex-index triples, counter-clockwise when viewed from outside.
    pub triangles: Vec<[u32; 3]>,
    /// Component class per triangle; never `Background`.
    pub triangle_class: Vec<ComponentClass>,
    pub archetype: Archetype,
}

impl DroneMesh {
    pub fn validate(&self) -> crate::Result<()> {
        if self.triangles.len() != self.triangle_class.len() {
            return Err(crate::Error::config("triangle/class length mismatch"));
        }
        let n = self.vertices.len() as u32;
        for tri in &self.triangles {
            if tri.iter().any(|&i| i >= n) {
                return Err(crate::Error::config("triangle index out of range"));
            }
        }
        if self
            .triangle_class
            .iter()
            .any(|&c| c == ComponentClass::Background)
        {
            return Err(crate::Error::config("mesh triangle labelled Background"));
        }
        Ok(())
    }

    /// Axis-aligned bounding box as (min, max) corners.
    pub fn bounding_box(&self) -> (Vec3, Vec3) {
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for v in &self.vertices {
            for k in 0..3 {
                lo[k] = lo[k].min(v[k]);
                hi[k] = hi[k].max(v[k]);
            }
        }
        (lo, hi)
    }

    pub fn bounding_diagonal(&self) -> f64 {
        let (lo, hi) = self.bounding_box();
        pose::norm([hi[0] - lo[0], hi[1] - lo[1], hi[2] - lo[2]])
    }

    /// Radius of the bounding sphere about the origin.
    pub fn bounding_radius(&self) -> f64 {
        self.vertices
            .iter()
            .map(|&v| pose::norm(v))
            .fold(0.0, f64::max)
    }
}

struct MeshBuilder {
    vertices: Vec<Vec3>,
    triangles: Vec<[u32; 3]>,
    classes: Vec<ComponentClass>,
}

impl MeshBuilder {
    fn new() -> Self {
        MeshBuilder {
            vertices: Vec::new(),
            triangles: Vec::new(),
            classes: Vec::new(),
        }
    }

    fn vertex(&mut self, v: Vec3) -> u32 {
        self.vertices.push(v);
        (self.vertices.len() - 1) as u32
    }

    fn tri(&mut self, a: u32, b: u32, c: u32, class: ComponentClass) {
        self.triangles.push([a, b, c]);
        self.classes.push(class);
    }

    /// Axis-aligned box given center and half extents.
    fn push_box(&mut self, center: Vec3, half: Vec3, class: ComponentClass) {
        let mut ids = [0u32; 8];
        for (i, id) in ids.iter_mut().enumerate() {
            let sx = if i & 1 == 0 { -1.0 } else { 1.0 };
            let sy = if i & 2 == 0 { -1.0 } else { 1.0 };
            let sz = if i & 4 == 0 { -1.0 } else { 1.0 };
            *id = self.vertex([
                center[0] + sx * half[0],
                center[1] + sy * half[1],
                center[2] + sz * half[2],
            ]);
        }
        // Quads per face, split into two triangles with outward winding.
        const FACES: [[usize; 4]; 6] = [
            [0, 2, 6, 4], // -x
            [1, 5, 7, 3], // +x
            [0, 4, 5, 1], // -y
            [2, 3, 7, 6], // +y
            [0, 1, 3, 2], // -z
            [4, 6, 7, 5], // +z
        ];
        for f in FACES {
            self.tri(ids[f[0]], ids[f[1]], ids[f[2]], class);
            self.tri(ids[f[0]], ids[f[2]], ids[f[3]], class);
        }
    }

    /// Closed cylinder between two points with `segments` sides.
    fn push_cylinder(
        &mut self,
        p0: Vec3,
        p1: Vec3,
        radius: f64,
        segments: usize,
        class: ComponentClass,
    ) {
        let axis = pose::normalize([p1[0] - p0[0], p1[1] - p0[1], p1[2] - p0[2]]);
        // Any vector not parallel to the axis seeds the cross-section frame.
        let seed = if axis[0].abs() < 0.9 {
            [1.0, 0.0, 0.0]
        } else {
            [0.0, 1.0, 0.0]
        };
        let u = pose::normalize(pose::cross(axis, seed));
        let v = pose::cross(axis, u);

        let c0 = self.vertex(p0);
        let c1 = self.vertex(p1);
        let mut ring0 = Vec::with_capacity(segments);
        let mut ring1 = Vec::with_capacity(segments);
        for s in 0..segments {
            let a = 2.0 * std::f64::consts::PI * s as f64 / segments as f64;
            let (sa, ca) = a.sin_cos();
            let off = [
                radius * (ca * u[0] + sa * v[0]),
                radius * (ca * u[1] + sa * v[1]),
                radius * (ca * u[2] + sa * v[2]),
            ];
            ring0.push(self.vertex([p0[0] + off[0], p0[1] + off[1], p0[2] + off[2]]));
            ring1.push(self.vertex([p1[0] + off[0], p1[1] + off[1], p1[2] + off[2]]));
        }
        for s in 0..segments {
            let t = (s + 1) % segments;
            self.tri(ring0[s], ring1[s], ring1[t], class);
            self.tri(ring0[s], ring1[t], ring0[t], class);
            self.tri(c0, ring0[t], ring0[s], class);
            self.tri(c1, ring1[s], ring1[t], class);
        }
    }

    /// Icosphere with the given subdivision level.
    fn push_icosphere(&mut self, center: Vec3, radius: f64, level: u32, class: ComponentClass) {
        let phi = (1.0 + 5.0f64.sqrt()) / 2.0;
        let base: [Vec3; 12] = [
            [-1.0, phi, 0.0],
            [1.0, phi, 0.0],
            [-1.0, -phi, 0.0],
            [1.0, -phi, 0.0],
            [0.0, -1.0, phi],
            [0.0, 1.0, phi],
            [0.0, -1.0, -phi],
            [0.0, 1.0, -phi],
            [phi, 0.0, -1.0],
            [phi, 0.0, 1.0],
            [-phi, 0.0, -1.0],
            [-phi, 0.0, 1.0],
        ];
        let mut tris: Vec<[Vec3; 3]> = [
            [0, 11, 5],
            [0, 5, 1],
            [0, 1, 7],
            [0, 7, 10],
            [0, 10, 11],
            [1, 5, 9],
            [5, 11, 4],
            [11, 10, 2],
            [10, 7, 6],
            [7, 1, 8],
            [3, 9, 4],
            [3, 4, 2],
            [3, 2, 6],
            [3, 6, 8],
            [3, 8, 9],
            [4, 9, 5],
            [2, 4, 11],
            [6, 2, 10],
            [8, 6, 7],
            [9, 8, 1],
        ]
        .iter()
        .map(|idx| {
            [
                pose::normalize(base[idx[0]]),
                pose::normalize(base[idx[1]]),
                pose::normalize(base[idx[2]]),
            ]
        })
        .collect();

        for _ in 0..level {
            let mut next = Vec::with_capacity(tris.len() * 4);
            for [a, b, c] in tris {
                let mid = |p: Vec3, q: Vec3| {
                    pose::normalize([p[0] + q[0], p[1] + q[1], p[2] + q[2]])
                };
                let ab = mid(a, b);
                let bc = mid(b, c);
                let ca = mid(c, a);
                next.push([a, ab, ca]);
                next.push([b, bc, ab]);
                next.push([c, ca, bc]);
                next.push([ab, bc, ca]);
            }
            tris = next;
        }

        for [a, b, c] in tris {
            let place = |p: Vec3| {
                [
                    center[0] + radius * p[0],
                    center[1] + radius * p[1],
                    center[2] + radius * p[2],
                ]
            };
            let ia = self.vertex(place(a));
            let ib = self.vertex(place(b));
            let ic = self.vertex(place(c));
            self.tri(ia, ib, ic, class);
        }
    }

    fn finish(self, archetype: Archetype) -> DroneMesh {
        DroneMesh {
            vertices: self.vertices,
            triangles: self.triangles,
            triangle_class: self.classes,
            archetype,
        }
    }
}

/// Build the canonical mesh for an archetype. Deterministic.
pub fn build_model(archetype: Archetype) -> DroneMesh {
    let mut b = MeshBuilder::new();
    match archetype {
        Archetype::ModelA => build_model_a(&mut b),
        Archetype::ModelB => build_model_b(&mut b),
    }
    let mesh = b.finish(archetype);
    debug_assert!(mesh.validate().is_ok());
    mesh
}

fn build_model_a(b: &mut MeshBuilder) {
    use ComponentClass::*;
    // Central slab.
    b.push_box([0.0, 0.0, 0.0], [0.12, 0.05, 0.025], Body);
    // Arms out to the four rotor hubs.
    let hubs: [Vec3; 4] = [
        [0.12, 0.12, 0.0],
        [0.12, -0.12, 0.0],
        [-0.12, 0.12, 0.0],
        [-0.12, -0.12, 0.0],
    ];
    for hub in hubs {
        let root = [hub[0] * 0.55, hub[1] * 0.35, 0.0];
        b.push_cylinder(root, hub, 0.009, 10, Body);
        // Motor pod, symmetric about the arm plane.
        b.push_cylinder(
            [hub[0], hub[1], -0.012],
            [hub[0], hub[1], 0.012],
            0.013,
            12,
            Engine,
        );
        // Rotor disk sits on top; the only top/bottom roll asymmetry.
        b.push_cylinder(
            [hub[0], hub[1], 0.012],
            [hub[0], hub[1], 0.017],
            0.04,
            12,
            Engine,
        );
    }
    // Front camera ball, slightly below the slab midplane.
    b.push_icosphere([0.13, 0.0, -0.012], 0.022, 1, Camera);
}

fn build_model_b(b: &mut MeshBuilder) {
    use ComponentClass::*;
    // Tall central body.
    b.push_box([0.0, 0.0, 0.04], [0.14, 0.07, 0.06], Body);
    // Raised arms to wide-set rotor hubs.
    let hubs: [Vec3; 4] = [
        [0.20, 0.20, 0.10],
        [0.20, -0.20, 0.10],
        [-0.20, 0.20, 0.10],
        [-0.20, -0.20, 0.10],
    ];
    for hub in hubs {
        let root = [hub[0] * 0.35, hub[1] * 0.3, 0.08];
        b.push_cylinder(root, hub, 0.012, 10, Body);
        b.push_cylinder(
            [hub[0], hub[1], 0.08],
            [hub[0], hub[1], 0.12],
            0.018,
            12,
            Engine,
        );
        b.push_cylinder(
            [hub[0], hub[1], 0.12],
            [hub[0], hub[1], 0.127],
            0.06,
            12,
            Engine,
        );
    }
    // Landing gear: two skids plus four struts.
    for side in [-1.0, 1.0] {
        b.push_cylinder(
            [-0.15, side * 0.12, -0.22],
            [0.15, side * 0.12, -0.22],
            0.012,
            8,
            Body,
        );
        for end in [-1.0, 1.0] {
            b.push_cylinder(
                [end * 0.08, side * 0.05, -0.01],
                [end * 0.12, side * 0.12, -0.21],
                0.010,
                8,
                Body,
            );
        }
    }
    // Underslung gimbal camera.
    b.push_icosphere([0.12, 0.0, -0.10], 0.035, 1, Camera);
}

/// Standalone icosphere mesh, used by rendering tests as analytic geometry.
#[cfg(test)]
pub(crate) fn test_icosphere(center: Vec3, radius: f64, level: u32) -> DroneMesh {
    let mut b = MeshBuilder::new();
    b.push_icosphere(center, radius, level, ComponentClass::Body);
    b.finish(Archetype::ModelA)
}

/// Apply the rigid motion `v -> R(pose) v + position` to every vertex.
pub fn transform_mesh(mesh: &DroneMesh, pose: &Pose, position: Vec3) -> DroneMesh {
    let r = pose::pose_to_rotation(pose);
    transform_mesh_rigid(mesh, &r, position)
}

/// Apply an explicit rotation + translation; classes and topology unchanged.
pub fn transform_mesh_rigid(mesh: &DroneMesh, rotation: &Mat3, position: Vec3) -> DroneMesh {
    let vertices = mesh
        .vertices
        .iter()
        .map(|&v| {
            let r = pose::mat_vec(rotation, v);
            [r[0] + position[0], r[1] + position[1], r[2] + position[2]]
        })
        .collect();
    DroneMesh {
        vertices,
        triangles: mesh.triangles.clone(),
        triangle_class: mesh.triangle_class.clone(),
        archetype: mesh.archetype,
    }
}

/// Write the mesh as ASCII STL, one `solid` per component class.
pub fn write_stl<W: Write>(mesh: &DroneMesh, mut w: W) -> crate::Result<()> {
    for class in ComponentClass::FOREGROUND {
        writeln!(w, "solid {}", class.name())?;
        for (tri, &c) in mesh.triangles.iter().zip(&mesh.triangle_class) {
            if c != class {
                continue;
            }
            let [a, b, cv] = [
                mesh.vertices[tri[0] as usize],
                mesh.vertices[tri[1] as usize],
                mesh.vertices[tri[2] as usize],
            ];
            let e1 = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
            let e2 = [cv[0] - a[0], cv[1] - a[1], cv[2] - a[2]];
            let n = pose::cross(e1, e2);
            let n = if pose::norm(n) > 0.0 {
                pose::normalize(n)
            } else {
                [0.0, 0.0, 1.0]
            };
            writeln!(w, "  facet normal {:e} {:e} {:e}", n[0], n[1], n[2])?;
            writeln!(w, "    outer loop")?;
            for v in [a, b, cv] {
                writeln!(w, "      vertex {:e} {:e} {:e}", v[0], v[1], v[2])?;
            }
            writeln!(w, "    endloop")?;
            writeln!(w, "  endfacet")?;
        }
        writeln!(w, "endsolid {}", class.name())?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pose::{sample_pose, RegimePreset};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn build_is_deterministic() {
        for arch in Archetype::ALL {
            let m1 = build_model(arch);
            let m2 = build_model(arch);
            assert_eq!(m1.vertices, m2.vertices);
            assert_eq!(m1.triangles, m2.triangles);
            assert_eq!(m1.triangle_class, m2.triangle_class);
        }
    }

    #[test]
    fn meshes_are_valid_and_fully_labelled() {
        for arch in Archetype::ALL {
            let m = build_model(arch);
            m.validate().unwrap();
            for class in ComponentClass::FOREGROUND {
                assert!(
                    m.triangle_class.iter().any(|&c| c == class),
                    "{arch:?} missing {class:?}"
                );
            }
            let n = m.triangles.len();
            assert!((200..=2000).contains(&n), "{arch:?} has {n} triangles");
        }
    }

    #[test]
    fn bounding_sizes_separate_the_archetypes() {
        let a = build_model(Archetype::ModelA);
        let b = build_model(Archetype::ModelB);
        let (alo, ahi) = a.bounding_box();
        let (blo, bhi) = b.bounding_box();
        for k in 0..3 {
            assert!(ahi[k] - alo[k] <= 0.35, "ModelA axis {k} too large");
            assert!(bhi[k] - blo[k] <= 0.60, "ModelB axis {k} too large");
        }
        assert!(a.bounding_diagonal() < 0.61);
        assert!(b.bounding_diagonal() > 0.61);
    }

    #[test]
    fn transform_is_a_rigid_isometry() {
        let mesh = build_model(Archetype::ModelA);
        let regime = RegimePreset::Full.regime();
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..100 {
            let pose = sample_pose(&regime, &mut rng);
            let moved = transform_mesh(&mesh, &pose, [0.3, -0.2, 9.0]);
            assert_eq!(moved.triangle_class, mesh.triangle_class);
            // Pairwise distances preserved.
            let n = mesh.vertices.len();
            for step in [1usize, 7, 61] {
                for i in (0..n).step_by(97) {
                    let j = (i + step) % n;
                    let d0 = dist(mesh.vertices[i], mesh.vertices[j]);
                    let d1 = dist(moved.vertices[i], moved.vertices[j]);
                    assert!((d0 - d1).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn inverse_rotation_recovers_vertices() {
        let mesh = build_model(Archetype::ModelB);
        let regime = RegimePreset::Full.regime();
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let pose = sample_pose(&regime, &mut rng);
        let t = [0.1, 0.2, 12.0];
        let moved = transform_mesh(&mesh, &pose, t);
        let rinv = pose::transpose(&pose::pose_to_rotation(&pose));
        let back = transform_mesh_rigid(
            &moved,
            &rinv,
            pose::mat_vec(&rinv, [-t[0], -t[1], -t[2]]),
        );
        for (v0, v1) in mesh.vertices.iter().zip(&back.vertices) {
            assert!(dist(*v0, *v1) < 1e-9);
        }
    }

    #[test]
    fn reference_pose_translation_is_pure_offset() {
        let mesh = build_model(Archetype::ModelA);
        let pose = Pose::LEVEL_FACING_AWAY;
        let at_origin = transform_mesh(&mesh, &pose, [0.0, 0.0, 0.0]);
        let offset = transform_mesh(&mesh, &pose, [1.0, 2.0, 3.0]);
        for (a, b) in at_origin.vertices.iter().zip(&offset.vertices) {
            assert!((a[0] + 1.0 - b[0]).abs() < 1e-12);
            assert!((a[1] + 2.0 - b[1]).abs() < 1e-12);
            assert!((a[2] + 3.0 - b[2]).abs() < 1e-12);
        }
    }

    #[test]
    fn stl_export_contains_one_solid_per_class() {
        let mesh = build_model(Archetype::ModelA);
        let mut buf = Vec::new();
        write_stl(&mesh, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        for class in ComponentClass::FOREGROUND {
            assert!(text.contains(&format!("solid {}", class.name())));
            assert!(text.contains(&format!("endsolid {}", class.name())));
        }
    }

    #[test]
    fn unknown_archetype_string_is_a_config_error() {
        let err = "c".parse::<Archetype>().unwrap_err();
        assert!(matches!(err, crate::Error::Config(_)));
    }

    fn dist(a: Vec3, b: Vec3) -> f64 {
        pose::norm([a[0] - b[0], a[1] - b[1], a[2] - b[2]])
    }
}
