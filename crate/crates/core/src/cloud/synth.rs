//! Seeded synthetic shape families used in place of a scanned dataset.

use std::f64::consts::PI;
use std::str::FromStr;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::PointCloud;
use crate::error::{invalid, Error, Result};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ShapeFamily {
    /// Uniform samples on the unit sphere.
    Sphere,
    /// Fuselage cylinder, swept main wing, tailplane and fin.
    ToyAirplane,
    /// Points along the 12 edges of a box.
    BoxEdges,
}

impl ShapeFamily {
    pub const ALL: [ShapeFamily; 3] = [ShapeFamily::Sphere, ShapeFamily::ToyAirplane, ShapeFamily::BoxEdges];

    pub fn name(self) -> &'static str {
        match self {
            ShapeFamily::Sphere => "sphere",
            ShapeFamily::ToyAirplane => "airplane",
            ShapeFamily::BoxEdges => "box",
        }
    }
}

impl FromStr for ShapeFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sphere" => Ok(ShapeFamily::Sphere),
            "airplane" | "toy_airplane" => Ok(ShapeFamily::ToyAirplane),
            "box" | "box_edges" => Ok(ShapeFamily::BoxEdges),
            other => Err(invalid(format!("unknown shape family '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub families: Vec<ShapeFamily>,
    pub count: usize,
    pub points_per_cloud: usize,
    pub seed: u64,
}

/// Samples `n` points of a family in its canonical pose. Shape parameters
/// (wing span, box aspect) are drawn from `rng`.
pub fn sample_family(family: ShapeFamily, n: usize, rng: &mut ChaCha8Rng) -> Vec<[f64; 3]> {
    match family {
        ShapeFamily::Sphere => (0..n).map(|_| unit_sphere(rng)).collect(),
        ShapeFamily::ToyAirplane => airplane(n, rng),
        ShapeFamily::BoxEdges => box_edges(n, rng),
    }
}

fn unit_sphere(rng: &mut ChaCha8Rng) -> [f64; 3] {
    loop {
        let v: [f64; 3] = [
            StandardNormal.sample(rng),
            StandardNormal.sample(rng),
            StandardNormal.sample(rng),
        ];
        let r = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if r > 1e-12 {
            return v.map(|x| x / r);
        }
    }
}

/// A flat quadrilateral part: `p(u, v) = origin + u * a + v * b`.
struct Panel {
    origin: [f64; 3],
    a: [f64; 3],
    b: [f64; 3],
}

impl Panel {
    fn area(&self) -> f64 {
        let [a, b] = [self.a, self.b];
        let c = [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]];
        (c[0] * c[0] + c[1] * c[1] + c[2] * c[2]).sqrt()
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> [f64; 3] {
        let (u, v): (f64, f64) = (rng.random(), rng.random());
        std::array::from_fn(|d| self.origin[d] + u * self.a[d] + v * self.b[d])
    }
}

fn airplane(n: usize, rng: &mut ChaCha8Rng) -> Vec<[f64; 3]> {
    let radius = rng.random_range(0.08..0.14);
    let length = 2.0;
    let span = rng.random_range(1.6..2.2);
    let chord = rng.random_range(0.3..0.45);
    let sweep = rng.random_range(0.0..0.35);
    let tail_span = rng.random_range(0.6..0.9);
    let fin_height = rng.random_range(0.3..0.45);

    let fuselage_area = 2.0 * PI * radius * length;
    let half_wing = |side: f64| Panel {
        origin: [-chord / 2.0, 0.0, 0.0],
        a: [chord, 0.0, 0.0],
        b: [sweep, side * span / 2.0, 0.0],
    };
    let panels = [
        half_wing(1.0),
        half_wing(-1.0),
        Panel { origin: [0.7, -tail_span / 2.0, 0.0], a: [0.25, 0.0, 0.0], b: [0.0, tail_span, 0.0] },
        Panel { origin: [0.7, 0.0, radius * 0.5], a: [0.28, 0.0, 0.0], b: [0.08, 0.0, fin_height] },
    ];
    let areas: Vec<f64> = std::iter::once(fuselage_area).chain(panels.iter().map(Panel::area)).collect();
    let total: f64 = areas.iter().sum();
    (0..n)
        .map(|_| {
            let mut pick = rng.random::<f64>() * total;
            let mut part = 0;
            while part + 1 < areas.len() && pick >= areas[part] {
                pick -= areas[part];
                part += 1;
            }
            if part == 0 {
                let x = rng.random_range(-length / 2.0..length / 2.0);
                let phi = rng.random_range(0.0..2.0 * PI);
                // Taper the nose and tail.
                let taper = (1.0 - (x / (length / 2.0)).powi(4)).max(0.15).sqrt();
                [x, radius * taper * phi.cos(), radius * taper * phi.sin()]
            } else {
                panels[part - 1].sample(rng)
            }
        })
        .collect()
}

fn box_edges(n: usize, rng: &mut ChaCha8Rng) -> Vec<[f64; 3]> {
    let half = [rng.random_range(0.4..1.0), rng.random_range(0.4..1.0), rng.random_range(0.4..1.0)];
    let total = 4.0 * 2.0 * (half[0] + half[1] + half[2]);
    (0..n)
        .map(|_| {
            // Choose the edge direction proportional to its length.
            let mut pick = rng.random::<f64>() * total;
            let mut axis = 0;
            while axis < 2 && pick >= 8.0 * half[axis] {
                pick -= 8.0 * half[axis];
                axis += 1;
            }
            let corner: u8 = rng.random_range(0..4);
            let mut p = [0.0; 3];
            let others = [(axis + 1) % 3, (axis + 2) % 3];
            p[axis] = rng.random_range(-half[axis]..half[axis]);
            p[others[0]] = if corner & 1 != 0 { half[others[0]] } else { -half[others[0]] };
            p[others[1]] = if corner & 2 != 0 { half[others[1]] } else { -half[others[1]] };
            p
        })
        .collect()
}

fn rotation(rx: f64, ry: f64, rz: f64) -> [[f64; 3]; 3] {
    let (sx, cx) = rx.sin_cos();
    let (sy, cy) = ry.sin_cos();
    let (sz, cz) = rz.sin_cos();
    // R = Rz * Ry * Rx
    [
        [cz * cy, cz * sy * sx - sz * cx, cz * sy * cx + sz * sx],
        [sz * cy, sz * sy * sx + cz * cx, sz * sy * cx - cz * sx],
        [-sy, cy * sx, cy * cx],
    ]
}

/// Small random rotation (up to ±0.25 rad per axis), anisotropic scale in
/// [0.85, 1.15] and translation up to ±0.1.
pub fn jitter(points: &mut [[f64; 3]], rng: &mut ChaCha8Rng) {
    let r = rotation(rng.random_range(-0.25..0.25), rng.random_range(-0.25..0.25), rng.random_range(-0.25..0.25));
    let s: [f64; 3] = std::array::from_fn(|_| rng.random_range(0.85..1.15));
    let t: [f64; 3] = std::array::from_fn(|_| rng.random_range(-0.1..0.1));
    for p in points.iter_mut() {
        let q = [p[0] * s[0], p[1] * s[1], p[2] * s[2]];
        *p = std::array::from_fn(|i| r[i][0] * q[0] + r[i][1] * q[1] + r[i][2] * q[2] + t[i]);
    }
}

/// Generates `count` clouds cycling through `families`. Cloud `i` depends
/// only on `(seed, i)`.
pub fn generate_synthetic_dataset(spec: &SyntheticSpec) -> Result<Vec<PointCloud>> {
    if spec.count == 0 {
        return Err(invalid("dataset count must be at least 1"));
    }
    if spec.points_per_cloud < 8 {
        return Err(invalid("points per cloud must be at least 8"));
    }
    if spec.families.is_empty() {
        return Err(invalid("at least one shape family is required"));
    }
    (0..spec.count)
        .map(|i| {
            let family = spec.families[i % spec.families.len()];
            let mut rng = seed::rng(seed::derive(spec.seed, i as u64));
            let mut pts = sample_family(family, spec.points_per_cloud, &mut rng);
            jitter(&mut pts, &mut rng);
            PointCloud::from_points(&pts, format!("{}-{i}", family.name()))
        })
        .collect()
}

/// Parses a family list such as `"sphere,airplane,box"`.
pub fn parse_families(names: &[String]) -> Result<Vec<ShapeFamily>> {
    names.iter().map(|n| n.parse()).collect()
}
