//! Deterministic mesh generators with analytic reference data.
//!
//! Planar sectors are meshed by concentric rings joined with a zipper: ring k
//! of a sector of opening `s·π/3` carries `s·k` segments, so the triangles
//! are close to equilateral and vertex patches stay regular.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, PI, TAU};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};
use crate::euclid::norm;
use crate::mesh::{BoundaryFace, ExactMeasures, Frame, Label, SimplicialMesh, SupportPiece};
use crate::quadrature::gauss_legendre;

/// Every generator the CLI and the tests can request.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Fixture {
    /// Upper unit half-disk; Σ the arc, Γ the diameter on `{x₂ = 0}`.
    HalfDisk,
    /// Unit disk minus the closed third quadrant (a convex wedge); Γ on the
    /// two negative half-axes.
    QuarterWedge,
    /// First-quadrant quarter disk with Γ on both axes. Its support would be
    /// the complement of a quadrant, which is not convex.
    QuarterDisk,
    /// Unit disk, all boundary Σ, embedded in R^ambient.
    FullDiskClosed { ambient: usize },
    /// The half-disk in the plane of the first two axes of R^ambient.
    FlatHalfDiskEmbedded { ambient: usize },
    /// Half of a geodesic cap of opening `theta0` around e₁ on the unit
    /// sphere in R³, cut by the plane `{x₃ = 0}` which carries Γ.
    SphereCap { theta0: f64 },
    /// Rectangle `[0, πr/2] × [0, 1]` rolled onto a cylinder of radius r.
    CylinderPatch { radius: f64 },
    /// Half-disk with outer boundary `r(θ) = 1 + a sin²(3θ)`.
    PerturbedHalfDisk { amplitude: f64 },
    /// `{r_in ≤ |x| ≤ r_out}` over the angles `[π/4, 3π/4]`, with Γ on the
    /// inner arc (support: the disk of radius r_in).
    AnnulusSector { inner: f64, outer: f64 },
    /// Unit square with every edge Σ.
    UnitSquare,
    /// Subdivided icosahedron on the unit sphere (closed).
    Icosphere { level: usize },
    /// Upper unit hemisphere in R³ with Γ the equator on `{x₃ = 0}`.
    Hemisphere,
    /// Half-disk of the given radius in R^ambient with the whole boundary
    /// free: the diameter on `{x₂ = 0}`, the arc on a sphere.
    FreeHalfDisk { radius: f64, ambient: usize },
}

impl FromStr for Fixture {
    type Err = Error;

    /// Accepts `name` or `name(arg, …)`, e.g. `flat_half_disk_embedded(4)`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (name, args) = match s.find('(') {
            Some(i) if s.ends_with(')') => (&s[..i], &s[i + 1..s.len() - 1]),
            _ => (s, ""),
        };
        let args: Vec<f64> = args
            .split(',')
            .filter(|a| !a.trim().is_empty())
            .map(|a| {
                a.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(format!("fixture argument {a:?}: {e}")))
            })
            .collect::<Result<_>>()?;
        let arg = |k: usize, default: f64| args.get(k).copied().unwrap_or(default);
        let dim = |k: usize, default: usize| -> Result<usize> {
            let v = arg(k, default as f64);
            if v.fract() != 0.0 || v < 2.0 {
                return Err(Error::Parse(format!(
                    "ambient dimension must be an integer >= 2, got {v}"
                )));
            }
            Ok(v as usize)
        };
        Ok(match name {
            "half_disk" => Fixture::HalfDisk,
            "quarter_wedge" => Fixture::QuarterWedge,
            "quarter_disk" => Fixture::QuarterDisk,
            "full_disk_closed" => Fixture::FullDiskClosed {
                ambient: dim(0, 2)?,
            },
            "flat_half_disk_embedded" => Fixture::FlatHalfDiskEmbedded {
                ambient: dim(0, 4)?,
            },
            "sphere_cap" => Fixture::SphereCap {
                theta0: arg(0, PI / 4.0),
            },
            "cylinder_patch" => Fixture::CylinderPatch {
                radius: arg(0, 1.0),
            },
            "perturbed_half_disk" => Fixture::PerturbedHalfDisk {
                amplitude: arg(0, 0.1),
            },
            "annulus_sector" => Fixture::AnnulusSector {
                inner: arg(0, 1.0),
                outer: arg(1, 2.0),
            },
            "unit_square" => Fixture::UnitSquare,
            "icosphere" => Fixture::Icosphere {
                level: arg(0, 3.0) as usize,
            },
            "hemisphere" => Fixture::Hemisphere,
            "free_half_disk" => Fixture::FreeHalfDisk {
                radius: arg(0, 11.0),
                ambient: dim(1, 3)?,
            },
            other => return Err(Error::Parse(format!("unknown fixture kind {other:?}"))),
        })
    }
}

impl Fixture {
    /// Generate the mesh at nominal edge length `h` (ignored by the icosphere).
    pub fn generate(&self, h: f64) -> Result<SimplicialMesh> {
        if !(h > 0.0 && h < 1.0) && !matches!(self, Fixture::FreeHalfDisk { .. }) {
            return Err(Error::Domain(format!(
                "mesh size must lie in (0, 1), got {h}"
            )));
        }
        let mesh = match *self {
            Fixture::HalfDisk => half_disk(h, 0.0)?,
            Fixture::PerturbedHalfDisk { amplitude } => half_disk(h, amplitude)?,
            Fixture::QuarterWedge => quarter_wedge(h)?,
            Fixture::QuarterDisk => quarter_disk(h)?,
            Fixture::FullDiskClosed { ambient } => full_disk(h, ambient)?,
            Fixture::FlatHalfDiskEmbedded { ambient } => flat_half_disk_embedded(h, ambient)?,
            Fixture::SphereCap { theta0 } => sphere_cap(h, theta0)?,
            Fixture::CylinderPatch { radius } => cylinder_patch(h, radius)?,
            Fixture::AnnulusSector { inner, outer } => annulus_sector(h, inner, outer)?,
            Fixture::UnitSquare => unit_square(h)?,
            Fixture::Icosphere { level } => icosphere(level)?,
            Fixture::Hemisphere => hemisphere(h)?,
            Fixture::FreeHalfDisk { radius, ambient } => free_half_disk(h, radius, ambient)?,
        };
        let mut meta = serde_json::to_value(self)?;
        meta["h"] = json!(h);
        Ok(mesh.with_fixture(meta))
    }

    pub fn name(&self) -> &'static str {
        match self {
            Fixture::HalfDisk => "half_disk",
            Fixture::QuarterWedge => "quarter_wedge",
            Fixture::QuarterDisk => "quarter_disk",
            Fixture::FullDiskClosed { .. } => "full_disk_closed",
            Fixture::FlatHalfDiskEmbedded { .. } => "flat_half_disk_embedded",
            Fixture::SphereCap { .. } => "sphere_cap",
            Fixture::CylinderPatch { .. } => "cylinder_patch",
            Fixture::PerturbedHalfDisk { .. } => "perturbed_half_disk",
            Fixture::AnnulusSector { .. } => "annulus_sector",
            Fixture::UnitSquare => "unit_square",
            Fixture::Icosphere { .. } => "icosphere",
            Fixture::Hemisphere => "hemisphere",
            Fixture::FreeHalfDisk { .. } => "free_half_disk",
        }
    }
}

/// Polar-grid vertex.
#[derive(Debug, Clone, Copy)]
struct PolarVertex {
    r: f64,
    theta: f64,
}

/// Polar ring mesh of a sector before embedding.
struct PolarMesh {
    verts: Vec<PolarVertex>,
    cells: Vec<Vec<usize>>,
    /// Edges of the outermost ring.
    outer: Vec<Vec<usize>>,
    /// Edges of the innermost ring (empty when it is the center point).
    inner: Vec<Vec<usize>>,
    /// Radial edges at the first and the last angle (open sectors only).
    side_start: Vec<Vec<usize>>,
    side_end: Vec<Vec<usize>>,
}

/// Rings at the given radii with the given segment counts over the angles
/// `[theta0, theta0 + span]`; a full turn closes the rings. Radius 0 is the
/// center point.
fn polar_mesh(theta0: f64, span: f64, radii: &[f64], segments: &[usize]) -> PolarMesh {
    let closed = (span - TAU).abs() < 1e-12;
    let mut verts = Vec::new();
    let mut rings: Vec<Vec<usize>> = Vec::new();
    for (&r, &seg) in radii.iter().zip(segments) {
        let mut ring = Vec::new();
        if r == 0.0 {
            ring.push(verts.len());
            verts.push(PolarVertex { r, theta: theta0 });
        } else {
            let count = if closed { seg } else { seg + 1 };
            for j in 0..count {
                ring.push(verts.len());
                verts.push(PolarVertex {
                    r,
                    theta: theta0 + span * j as f64 / seg as f64,
                });
            }
        }
        rings.push(ring);
    }
    let seg_of = |k: usize| if radii[k] == 0.0 { 0 } else { segments[k] };
    let at = |k: usize, j: usize| -> usize {
        let ring = &rings[k];
        if radii[k] == 0.0 {
            ring[0]
        } else if closed {
            ring[j % ring.len()]
        } else {
            ring[j]
        }
    };
    let mut cells = Vec::new();
    let mut side_start = Vec::new();
    let mut side_end = Vec::new();
    for k in 1..radii.len() {
        let (na, nb) = (seg_of(k - 1), seg_of(k));
        let (mut i, mut j) = (0usize, 0usize);
        while i < na || j < nb {
            let advance_outer = if i == na {
                true
            } else if j == nb {
                false
            } else {
                (j + 1) as f64 / nb as f64 <= (i + 1) as f64 / na as f64 + 1e-12
            };
            if advance_outer {
                cells.push(vec![at(k - 1, i), at(k, j), at(k, j + 1)]);
                j += 1;
            } else {
                cells.push(vec![at(k - 1, i), at(k, j), at(k - 1, i + 1)]);
                i += 1;
            }
        }
        if !closed {
            side_start.push(vec![at(k - 1, 0), at(k, 0)]);
            side_end.push(vec![at(k - 1, na), at(k, nb)]);
        }
    }
    let ring_edges = |k: usize| -> Vec<Vec<usize>> {
        if radii[k] == 0.0 {
            return vec![];
        }
        (0..segments[k])
            .map(|j| vec![at(k, j), at(k, j + 1)])
            .collect()
    };
    PolarMesh {
        outer: ring_edges(radii.len() - 1),
        inner: ring_edges(0),
        verts,
        cells,
        side_start,
        side_end,
    }
}

/// Center-plus-rings sector of opening `span` with `s·k` segments on ring k.
fn disk_sector(theta0: f64, span: f64, h: f64) -> PolarMesh {
    let rings = (1.0 / h).ceil() as usize;
    let s = ((span / FRAC_PI_3).round() as usize).max(1);
    let radii: Vec<f64> = (0..=rings).map(|k| k as f64 / rings as f64).collect();
    let segments: Vec<usize> = (0..=rings).map(|k| s * k).collect();
    polar_mesh(theta0, span, &radii, &segments)
}

fn faces(edges: &[Vec<usize>], label: Label) -> Vec<BoundaryFace> {
    edges
        .iter()
        .map(|e| BoundaryFace {
            face: e.clone(),
            label,
        })
        .collect()
}

fn unit(k: usize, dim: usize) -> Vec<f64> {
    let mut e = vec![0.0; dim];
    e[k] = 1.0;
    e
}

fn hyperplane(k: usize, dim: usize) -> SupportPiece {
    SupportPiece::Hyperplane {
        normal: unit(k, dim),
        offset: 0.0,
    }
}

fn flat_frames(count: usize, dim: usize) -> Vec<Frame> {
    vec![
        Frame {
            tangent: vec![unit(0, dim), unit(1, dim)],
            normal: (2..dim).map(|k| unit(k, dim)).collect(),
        };
        count
    ]
}

fn half_disk(h: f64, amplitude: f64) -> Result<SimplicialMesh> {
    let p = disk_sector(0.0, PI, h);
    let radius = |t: f64| 1.0 + amplitude * (3.0 * t).sin().powi(2);
    let vertices = p
        .verts
        .iter()
        .map(|v| {
            let r = v.r * radius(v.theta);
            vec![r * v.theta.cos(), r * v.theta.sin()]
        })
        .collect();
    let mut boundary = faces(&p.outer, Label::Sigma);
    boundary.extend(faces(&p.side_start, Label::Gamma));
    boundary.extend(faces(&p.side_end, Label::Gamma));
    // |Σ| = ∫ √(r² + r'²) dθ by a high-order rule on 24 panels
    let sigma = if amplitude == 0.0 {
        PI
    } else {
        let g = gauss_legendre(16);
        let panels = 24;
        let mut s = 0.0;
        for k in 0..panels {
            for &(t, w) in &g {
                let th = PI * (k as f64 + t) / panels as f64;
                let r = radius(th);
                let dr = 3.0 * amplitude * (6.0 * th).sin();
                s += w * PI / panels as f64 * (r * r + dr * dr).sqrt();
            }
        }
        s
    };
    let a = amplitude;
    Ok(SimplicialMesh::new(vertices, p.cells, boundary)?
        .with_support(vec![hyperplane(1, 2)])
        .with_exact(Some(ExactMeasures {
            volume: FRAC_PI_2 * (1.0 + a + 3.0 * a * a / 8.0),
            sigma,
            gamma: 2.0,
            mean_curvature: Some(0.0),
        })))
}

fn quarter_wedge(h: f64) -> Result<SimplicialMesh> {
    let p = disk_sector(-FRAC_PI_2, 1.5 * PI, h);
    let vertices = p
        .verts
        .iter()
        .map(|v| vec![v.r * v.theta.cos(), v.r * v.theta.sin()])
        .collect();
    let mut boundary = faces(&p.outer, Label::Sigma);
    boundary.extend(faces(&p.side_start, Label::Gamma));
    boundary.extend(faces(&p.side_end, Label::Gamma));
    Ok(SimplicialMesh::new(vertices, p.cells, boundary)?
        .with_support(vec![hyperplane(0, 2), hyperplane(1, 2)])
        .with_exact(Some(ExactMeasures {
            volume: 0.75 * PI,
            sigma: 1.5 * PI,
            gamma: 2.0,
            mean_curvature: Some(0.0),
        })))
}

fn quarter_disk(h: f64) -> Result<SimplicialMesh> {
    let p = disk_sector(0.0, FRAC_PI_2, h);
    let vertices = p
        .verts
        .iter()
        .map(|v| vec![v.r * v.theta.cos(), v.r * v.theta.sin()])
        .collect();
    let mut boundary = faces(&p.outer, Label::Sigma);
    boundary.extend(faces(&p.side_start, Label::Gamma));
    boundary.extend(faces(&p.side_end, Label::Gamma));
    Ok(SimplicialMesh::new(vertices, p.cells, boundary)?
        .with_support(vec![hyperplane(0, 2), hyperplane(1, 2)])
        .with_exact(Some(ExactMeasures {
            volume: PI / 4.0,
            sigma: FRAC_PI_2,
            gamma: 2.0,
            mean_curvature: Some(0.0),
        })))
}

fn full_disk(h: f64, ambient: usize) -> Result<SimplicialMesh> {
    let p = disk_sector(0.0, TAU, h);
    let vertices = p
        .verts
        .iter()
        .map(|v| {
            let mut x = vec![0.0; ambient];
            x[0] = v.r * v.theta.cos();
            x[1] = v.r * v.theta.sin();
            x
        })
        .collect::<Vec<_>>();
    let count = vertices.len();
    let mesh = SimplicialMesh::new(vertices, p.cells, faces(&p.outer, Label::Sigma))?.with_exact(
        Some(ExactMeasures {
            volume: PI,
            sigma: TAU,
            gamma: 0.0,
            mean_curvature: Some(0.0),
        }),
    );
    Ok(if ambient > 2 {
        mesh.with_frames(Some(flat_frames(count, ambient)))
    } else {
        mesh
    })
}

fn flat_half_disk_embedded(h: f64, ambient: usize) -> Result<SimplicialMesh> {
    let flat = half_disk(h, 0.0)?;
    let count = flat.vertex_count();
    let mut m = flat.map_vertices(|v| {
        let mut x = v.to_vec();
        x.resize(ambient, 0.0);
        x
    })?;
    m = m
        .with_support(vec![hyperplane(1, ambient)])
        .with_exact(flat.exact().copied());
    Ok(if ambient > 2 {
        m.with_frames(Some(flat_frames(count, ambient)))
    } else {
        m
    })
}

/// Orthonormal tangent basis of the unit sphere at `x` (R³).
fn sphere_frame(x: &[f64]) -> Frame {
    let n = x.to_vec();
    let seed = if n[0].abs() < 0.6 {
        [1.0, 0.0, 0.0]
    } else {
        [0.0, 1.0, 0.0]
    };
    let d = seed.iter().zip(&n).map(|(a, b)| a * b).sum::<f64>();
    let mut t1: Vec<f64> = seed.iter().zip(&n).map(|(a, b)| a - d * b).collect();
    let l = norm(&t1);
    t1.iter_mut().for_each(|c| *c /= l);
    let t2 = vec![
        n[1] * t1[2] - n[2] * t1[1],
        n[2] * t1[0] - n[0] * t1[2],
        n[0] * t1[1] - n[1] * t1[0],
    ];
    Frame {
        tangent: vec![t1, t2],
        normal: vec![n],
    }
}

fn sphere_cap(h: f64, theta0: f64) -> Result<SimplicialMesh> {
    if !(theta0 > 0.0 && theta0 < FRAC_PI_2) {
        return Err(Error::Domain(format!(
            "cap opening must lie in (0, π/2), got {theta0}"
        )));
    }
    // mesh the parameter half-disk finely enough that geodesic edges are ≈ h
    let p = disk_sector(0.0, PI, (h / theta0).min(0.5));
    let vertices: Vec<Vec<f64>> = p
        .verts
        .iter()
        .map(|v| {
            let t = v.r * theta0;
            vec![t.cos(), t.sin() * v.theta.cos(), t.sin() * v.theta.sin()]
        })
        .collect();
    let frames = vertices.iter().map(|x| sphere_frame(x)).collect();
    let mut boundary = faces(&p.outer, Label::Sigma);
    boundary.extend(faces(&p.side_start, Label::Gamma));
    boundary.extend(faces(&p.side_end, Label::Gamma));
    Ok(SimplicialMesh::new(vertices, p.cells, boundary)?
        .with_support(vec![hyperplane(2, 3)])
        .with_frames(Some(frames))
        .with_exact(Some(ExactMeasures {
            volume: PI * (1.0 - theta0.cos()),
            sigma: PI * theta0.sin(),
            gamma: 2.0 * theta0,
            mean_curvature: Some(2.0),
        })))
}

fn hemisphere(h: f64) -> Result<SimplicialMesh> {
    let p = disk_sector(0.0, TAU, (h / FRAC_PI_2).min(0.5));
    let vertices: Vec<Vec<f64>> = p
        .verts
        .iter()
        .map(|v| {
            let t = v.r * FRAC_PI_2;
            vec![t.sin() * v.theta.cos(), t.sin() * v.theta.sin(), t.cos()]
        })
        .collect();
    let frames = vertices.iter().map(|x| sphere_frame(x)).collect();
    Ok(
        SimplicialMesh::new(vertices, p.cells, faces(&p.outer, Label::Gamma))?
            .with_support(vec![hyperplane(2, 3)])
            .with_frames(Some(frames))
            .with_exact(Some(ExactMeasures {
                volume: TAU,
                sigma: 0.0,
                gamma: TAU,
                mean_curvature: Some(2.0),
            })),
    )
}

fn free_half_disk(h: f64, radius: f64, ambient: usize) -> Result<SimplicialMesh> {
    if !(h > 0.0 && h < radius) {
        return Err(Error::Domain(format!(
            "mesh size must lie in (0, radius), got {h}"
        )));
    }
    let p = disk_sector(0.0, PI, h / radius);
    let vertices: Vec<Vec<f64>> = p
        .verts
        .iter()
        .map(|v| {
            let mut x = vec![0.0; ambient];
            x[0] = radius * v.r * v.theta.cos();
            x[1] = radius * v.r * v.theta.sin();
            x
        })
        .collect();
    let count = vertices.len();
    let mut boundary = faces(&p.outer, Label::Gamma);
    boundary.extend(faces(&p.side_start, Label::Gamma));
    boundary.extend(faces(&p.side_end, Label::Gamma));
    let m = SimplicialMesh::new(vertices, p.cells, boundary)?
        .with_support(vec![
            hyperplane(1, ambient),
            SupportPiece::Sphere {
                center: vec![0.0; ambient],
                radius,
            },
        ])
        .with_exact(Some(ExactMeasures {
            volume: FRAC_PI_2 * radius * radius,
            sigma: 0.0,
            gamma: PI * radius + 2.0 * radius,
            mean_curvature: Some(0.0),
        }));
    Ok(if ambient > 2 {
        m.with_frames(Some(flat_frames(count, ambient)))
    } else {
        m
    })
}

fn annulus_sector(h: f64, inner: f64, outer: f64) -> Result<SimplicialMesh> {
    if !(inner > 0.0 && outer > inner) {
        return Err(Error::Domain("annulus needs 0 < inner < outer".into()));
    }
    let span = FRAC_PI_2;
    let rings = ((outer - inner) / h).ceil() as usize;
    let radii: Vec<f64> = (0..=rings)
        .map(|k| inner + (outer - inner) * k as f64 / rings as f64)
        .collect();
    let segments: Vec<usize> = radii
        .iter()
        .map(|r| ((span * r / h).round() as usize).max(1))
        .collect();
    let p = polar_mesh(PI / 4.0, span, &radii, &segments);
    let vertices = p
        .verts
        .iter()
        .map(|v| vec![v.r * v.theta.cos(), v.r * v.theta.sin()])
        .collect();
    let mut boundary = faces(&p.outer, Label::Sigma);
    boundary.extend(faces(&p.side_start, Label::Sigma));
    boundary.extend(faces(&p.side_end, Label::Sigma));
    boundary.extend(faces(&p.inner, Label::Gamma));
    Ok(SimplicialMesh::new(vertices, p.cells, boundary)?
        .with_support(vec![SupportPiece::Sphere {
            center: vec![0.0, 0.0],
            radius: inner,
        }])
        .with_exact(Some(ExactMeasures {
            volume: span * (outer * outer - inner * inner) / 2.0,
            sigma: span * outer + 2.0 * (outer - inner),
            gamma: span * inner,
            mean_curvature: Some(0.0),
        })))
}

type Grid = (Vec<[f64; 2]>, Vec<Vec<usize>>, Vec<Vec<usize>>);

/// Structured triangulation of `[0, a] × [0, b]` with about `h` spacing,
/// returning parameter points, cells and the four boundary sides.
fn grid(a: f64, b: f64, h: f64) -> Grid {
    let (nx, ny) = (
        ((a / h).ceil() as usize).max(1),
        ((b / h).ceil() as usize).max(1),
    );
    let id = |i: usize, j: usize| j * (nx + 1) + i;
    let mut pts = Vec::new();
    for j in 0..=ny {
        for i in 0..=nx {
            pts.push([a * i as f64 / nx as f64, b * j as f64 / ny as f64]);
        }
    }
    let mut cells = Vec::new();
    for j in 0..ny {
        for i in 0..nx {
            // alternate diagonals so no direction is preferred
            if (i + j) % 2 == 0 {
                cells.push(vec![id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
                cells.push(vec![id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
            } else {
                cells.push(vec![id(i, j), id(i + 1, j), id(i, j + 1)]);
                cells.push(vec![id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)]);
            }
        }
    }
    let mut edges = Vec::new();
    for i in 0..nx {
        edges.push(vec![id(i, 0), id(i + 1, 0)]);
        edges.push(vec![id(i, ny), id(i + 1, ny)]);
    }
    for j in 0..ny {
        edges.push(vec![id(0, j), id(0, j + 1)]);
        edges.push(vec![id(nx, j), id(nx, j + 1)]);
    }
    (pts, cells, edges)
}

fn unit_square(h: f64) -> Result<SimplicialMesh> {
    let (pts, cells, edges) = grid(1.0, 1.0, h);
    Ok(SimplicialMesh::new(
        pts.iter().map(|p| p.to_vec()).collect(),
        cells,
        faces(&edges, Label::Sigma),
    )?
    .with_exact(Some(ExactMeasures {
        volume: 1.0,
        sigma: 4.0,
        gamma: 0.0,
        mean_curvature: Some(0.0),
    })))
}

fn cylinder_patch(h: f64, radius: f64) -> Result<SimplicialMesh> {
    if !(radius > 0.0) {
        return Err(Error::Domain("cylinder radius must be positive".into()));
    }
    let arc = FRAC_PI_2 * radius;
    let (pts, cells, edges) = grid(arc, 1.0, h);
    let vertices: Vec<Vec<f64>> = pts
        .iter()
        .map(|p| {
            let t = p[0] / radius;
            vec![radius * t.cos(), radius * t.sin(), p[1]]
        })
        .collect();
    let frames = pts
        .iter()
        .map(|p| {
            let t = p[0] / radius;
            Frame {
                tangent: vec![vec![-t.sin(), t.cos(), 0.0], vec![0.0, 0.0, 1.0]],
                normal: vec![vec![t.cos(), t.sin(), 0.0]],
            }
        })
        .collect();
    Ok(
        SimplicialMesh::new(vertices, cells, faces(&edges, Label::Sigma))?
            .with_frames(Some(frames))
            .with_exact(Some(ExactMeasures {
                volume: arc,
                sigma: 2.0 * arc + 2.0,
                gamma: 0.0,
                mean_curvature: Some(1.0 / radius),
            })),
    )
}

fn icosphere(level: usize) -> Result<SimplicialMesh> {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let mut verts: Vec<Vec<f64>> = [
        [-1.0, t, 0.0],
        [1.0, t, 0.0],
        [-1.0, -t, 0.0],
        [1.0, -t, 0.0],
        [0.0, -1.0, t],
        [0.0, 1.0, t],
        [0.0, -1.0, -t],
        [0.0, 1.0, -t],
        [t, 0.0, -1.0],
        [t, 0.0, 1.0],
        [-t, 0.0, -1.0],
        [-t, 0.0, 1.0],
    ]
    .iter()
    .map(|v| {
        let l = norm(v);
        v.iter().map(|c| c / l).collect()
    })
    .collect();
    let mut cells: Vec<[usize; 3]> = vec![
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
    ];
    for _ in 0..level {
        let mut mid = std::collections::HashMap::new();
        let mut next = Vec::with_capacity(cells.len() * 4);
        let mut midpoint = |a: usize, b: usize, verts: &mut Vec<Vec<f64>>| -> usize {
            *mid.entry((a.min(b), a.max(b))).or_insert_with(|| {
                let m: Vec<f64> = verts[a].iter().zip(&verts[b]).map(|(x, y)| x + y).collect();
                let l = norm(&m);
                verts.push(m.iter().map(|c| c / l).collect());
                verts.len() - 1
            })
        };
        for [a, b, c] in cells {
            let ab = midpoint(a, b, &mut verts);
            let bc = midpoint(b, c, &mut verts);
            let ca = midpoint(c, a, &mut verts);
            next.extend([[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        cells = next;
    }
    let frames = verts.iter().map(|x| sphere_frame(x)).collect();
    Ok(
        SimplicialMesh::new(verts, cells.iter().map(|c| c.to_vec()).collect(), vec![])?
            .with_frames(Some(frames))
            .with_exact(Some(ExactMeasures {
                volume: 4.0 * PI,
                sigma: 0.0,
                gamma: 0.0,
                mean_curvature: Some(2.0),
            })),
    )
}
