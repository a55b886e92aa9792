//! Catalog of concrete spaces with admissibility domains, samplers and Killing
//! fields.
//!
//! | name | n | structure |
//! |---|---|---|
//! | `euclidean-n`, `minkowski-4` | 2–4 | flat, `A = 0` |
//! | `sphere` | 2 | round unit sphere, `A = 0` |
//! | `linear-diag` | 2 | `diag(1 + x¹, 1)`, `A = 0` |
//! | `randers-const` | 2 | `a = δ`, constant `b`, `G = 0` |
//! | `randers-varying` | 2 | `b₁ = k / (1 + (x²)²)` |
//! | `randers-axisym3` | 3 | graded-index medium plus constant `b = β dz` |
//! | `schwarzschild-weak` | 4 | weak-field Schwarzschild, `A = 0` |
//! | `finsler-schwarzschild` | 4 | weak-field Schwarzschild plus `ε (y³)⁴/(y⁰)²` |

mod fields;
mod models;

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub use fields::{observer_field, Boost, Rotation, SphereRotation, TiltedObserver, Translation};
pub use models::{
    make_flat, make_randers, make_riemannian, AnisotropicSchwarzschild, ConstantDiagonal,
    ConstantForm, DecayingForm, GradedIndex, LinearDiagonal, MetricField, OneFormField, Randers,
    Riemannian, RoundSphere, WeakSchwarzschild,
};

use crate::error::{FinslerError, Result};
use crate::jets::{FinslerSpace, Signature};

pub type Params = BTreeMap<String, f64>;

type Predicate = Arc<dyn Fn(&[f64], &[f64]) -> bool + Send + Sync>;
type Sampler = Arc<dyn Fn(&mut ChaCha8Rng) -> Vec<f64> + Send + Sync>;

/// A catalog space with its domain and known structure.
#[derive(Clone)]
pub struct SpaceDescriptor {
    pub name: String,
    pub params: Params,
    pub space: FinslerSpace,
    /// Known special structure (flat, `A = 0`, …).
    pub notes: &'static str,
    pub flat: bool,
    /// Length over which curvature acts; sets integration spans in tests.
    pub curvature_scale: f64,
    admissible: Predicate,
    position: Sampler,
}

impl fmt::Debug for SpaceDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SpaceDescriptor")
            .field("name", &self.name)
            .field("params", &self.params)
            .field("notes", &self.notes)
            .finish()
    }
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    // Box–Muller; the sampler only needs a spread of directions.
    let u: f64 = rng.gen_range(f64::EPSILON..1.0);
    let v: f64 = rng.gen();
    (-2.0 * u.ln()).sqrt() * (2.0 * PI * v).cos()
}

impl SpaceDescriptor {
    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn signature(&self) -> Signature {
        self.space.signature()
    }

    /// Whether `(x, y)` lies in the documented domain. For Lorentzian spaces
    /// this is the chart domain; `L` may take any sign there.
    pub fn is_admissible(&self, x: &[f64], y: &[f64]) -> bool {
        x.len() == self.dim()
            && y.len() == self.dim()
            && y.iter().any(|&v| v != 0.0)
            && (self.admissible)(x, y)
    }

    pub fn sample_position(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        (self.position)(rng)
    }

    /// Random admissible point; Lorentzian samples are timelike (`L > 0`).
    pub fn sample_point(&self, rng: &mut ChaCha8Rng) -> (Vec<f64>, Vec<f64>) {
        let n = self.dim();
        loop {
            let x = self.sample_position(rng);
            let y: Vec<f64> = match self.signature() {
                Signature::PositiveDefinite => (0..n).map(|_| normal(rng)).collect(),
                Signature::Lorentzian => {
                    let mut y: Vec<f64> = (0..n).map(|_| 0.4 * normal(rng)).collect();
                    y[0] = rng.gen_range(0.8..1.6) * if rng.gen_bool(0.8) { 1.0 } else { -1.0 };
                    y
                }
            };
            if !self.is_admissible(&x, &y) {
                continue;
            }
            match self.space.l(&x, &y) {
                Ok(l) if l > 0.0 => return (x, y),
                _ => continue,
            }
        }
    }
}

fn param(params: &Params, key: &str, default: f64) -> f64 {
    params.get(key).copied().unwrap_or(default)
}

fn check_keys(name: &str, params: &Params, allowed: &[&str]) -> Result<()> {
    match params.keys().find(|k| !allowed.contains(&k.as_str())) {
        Some(k) => Err(FinslerError::Construction(format!(
            "space `{name}` has no parameter `{k}` (expected one of {allowed:?})"
        ))),
        None => Ok(()),
    }
}

fn probe_positions(position: &Sampler, count: usize) -> Vec<Vec<f64>> {
    use rand::SeedableRng;
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    (0..count).map(|_| position(&mut rng)).collect()
}

fn uniform_box(lo: Vec<f64>, hi: Vec<f64>) -> Sampler {
    Arc::new(move |rng: &mut ChaCha8Rng| {
        lo.iter().zip(&hi).map(|(&a, &b)| rng.gen_range(a..b)).collect()
    })
}

/// Names accepted by [`build`].
pub const CATALOG: &[&str] = &[
    "euclidean-2",
    "euclidean-3",
    "minkowski-4",
    "sphere",
    "linear-diag",
    "randers-const",
    "randers-varying",
    "randers-axisym3",
    "schwarzschild-weak",
    "finsler-schwarzschild",
];

/// Builds a catalog space; missing parameters take documented defaults.
pub fn build(name: &str, params: &Params) -> Result<SpaceDescriptor> {
    let always: Predicate = Arc::new(|_, _| true);
    let (space, notes, flat, scale, admissible, position, used): (
        FinslerSpace,
        &'static str,
        bool,
        f64,
        Predicate,
        Sampler,
        Vec<&str>,
    ) = match name {
        "euclidean-2" | "euclidean-3" => {
            let n = if name.ends_with('2') { 2 } else { 3 };
            (
                make_flat(n, Signature::PositiveDefinite)?,
                "flat Euclidean space: A = 0, G = 0, R = 0",
                true,
                1.0,
                always,
                uniform_box(vec![-2.0; n], vec![2.0; n]),
                vec![],
            )
        }
        "minkowski-4" => (
            make_flat(4, Signature::Lorentzian)?,
            "Minkowski space (+,−,−,−): A = 0, G = 0, R = 0",
            true,
            1.0,
            always,
            uniform_box(vec![-2.0; 4], vec![2.0; 4]),
            vec![],
        ),
        "sphere" => {
            let position = uniform_box(vec![0.4, 0.0], vec![PI - 0.4, 2.0 * PI]);
            let probes = probe_positions(&position, 32);
            let mut space = make_riemannian(
                "sphere",
                2,
                Signature::PositiveDefinite,
                RoundSphere,
                &probes,
            )?;
            for (axis, label) in ["rotation-x", "rotation-y", "rotation-z"].iter().enumerate() {
                space = space.with_killing(fields::sphere_rotation(label, axis));
            }
            (
                space,
                "round unit sphere in (θ, φ): A = 0, Gaussian curvature 1",
                false,
                1.0,
                Arc::new(|x: &[f64], _: &[f64]| x[0] > 0.05 && x[0] < PI - 0.05),
                position,
                vec![],
            )
        }
        "linear-diag" => {
            let position = uniform_box(vec![-0.5, -2.0], vec![2.0, 2.0]);
            let probes = probe_positions(&position, 32);
            let space = make_riemannian(
                "linear-diag",
                2,
                Signature::PositiveDefinite,
                LinearDiagonal,
                &probes,
            )?
            .with_killing(fields::translation("translation-1", 2, 1));
            (
                space,
                "Riemannian diag(1 + x¹, 1): A = 0, Γ¹₁₁ = 1/(2(1 + x¹))",
                false,
                1.0,
                Arc::new(|x: &[f64], _: &[f64]| x[0] > -0.9),
                position,
                vec![],
            )
        }
        "randers-const" => {
            let b = vec![param(params, "b1", 0.3), param(params, "b2", 0.0)];
            let position = uniform_box(vec![-2.0; 2], vec![2.0; 2]);
            let probes = probe_positions(&position, 4);
            let space = make_randers("randers-const", 2, ConstantDiagonal(vec![1.0; 2]), ConstantForm(b), &probes)?
                .with_killing(fields::translation("translation-0", 2, 0))
                .with_killing(fields::translation("translation-1", 2, 1));
            (
                space,
                "Randers with a = δ and constant b: x-independent, G = 0, R = 0, A ≠ 0",
                true,
                1.0,
                always,
                position,
                vec!["b1", "b2"],
            )
        }
        "randers-varying" => {
            let k = param(params, "k", 0.3);
            let position = uniform_box(vec![-2.0; 2], vec![2.0; 2]);
            let probes = probe_positions(&position, 64);
            let space = make_randers("randers-varying", 2, ConstantDiagonal(vec![1.0; 2]), DecayingForm { k }, &probes)?
                .with_killing(fields::translation("translation-0", 2, 0));
            (
                space,
                "Randers with a = δ and b₁ = k/(1 + (x²)²): curved, A ≠ 0",
                false,
                1.0,
                always,
                position,
                vec!["k"],
            )
        }
        "randers-axisym3" => {
            let k = param(params, "k", 0.3);
            let beta = param(params, "beta", 0.2);
            let position = uniform_box(vec![-1.5; 3], vec![1.5; 3]);
            let probes = probe_positions(&position, 64);
            let space = make_randers(
                "randers-axisym3",
                3,
                GradedIndex { k },
                ConstantForm(vec![0.0, 0.0, beta]),
                &probes,
            )?
            .with_killing(fields::rotation("rotation-z", 3, 0, 1))
            .with_killing(fields::translation("translation-z", 3, 2));
            (
                space,
                "axisymmetric optical medium: a = n(ρ)² δ, n = 1 + k e^{−ρ²}, b = β dz; A ≠ 0",
                false,
                1.0,
                always,
                position,
                vec!["k", "beta"],
            )
        }
        "schwarzschild-weak" | "finsler-schwarzschild" => {
            let mass = param(params, "mass", 1.0);
            let r_min = 8.0 * mass.abs().max(1e-3);
            let position: Sampler = Arc::new(move |rng: &mut ChaCha8Rng| {
                let r = rng.gen_range(r_min..2.5 * r_min);
                let mut d: Vec<f64> = (0..3).map(|_| normal(rng)).collect();
                let norm = d.iter().map(|v| v * v).sum::<f64>().sqrt();
                d.iter_mut().for_each(|v| *v *= r / norm);
                vec![rng.gen_range(-5.0..5.0), d[0], d[1], d[2]]
            });
            let probes = probe_positions(&position, 32);
            let base = make_riemannian(
                "schwarzschild-weak",
                4,
                Signature::Lorentzian,
                WeakSchwarzschild { mass },
                &probes,
            )?;
            let r_cut = 4.0 * mass.abs();
            let outside: Predicate = Arc::new(move |x: &[f64], _: &[f64]| {
                (x[1] * x[1] + x[2] * x[2] + x[3] * x[3]).sqrt() > r_cut
            });
            let scale = r_min * (r_min / (2.0 * mass.abs().max(1e-12))).sqrt();
            if name == "schwarzschild-weak" {
                let mut space = base.with_killing(fields::translation("time-translation", 4, 0));
                for (i, j, label) in [(2, 3, "rotation-x"), (3, 1, "rotation-y"), (1, 2, "rotation-z")] {
                    space = space.with_killing(fields::rotation(label, 4, i, j));
                }
                (
                    space,
                    "weak-field Schwarzschild chart in isotropic coordinates: Riemannian, A = 0",
                    false,
                    scale,
                    outside,
                    position,
                    vec!["mass"],
                )
            } else {
                let epsilon = param(params, "epsilon", 0.02);
                let space = FinslerSpace::new(
                    "finsler-schwarzschild",
                    4,
                    Signature::Lorentzian,
                    AnisotropicSchwarzschild {
                        base: WeakSchwarzschild { mass },
                        epsilon,
                    },
                )?
                .with_killing(fields::translation("time-translation", 4, 0))
                .with_killing(fields::rotation("rotation-z", 4, 1, 2));
                let admissible: Predicate = Arc::new(move |x: &[f64], y: &[f64]| {
                    outside(x, y) && y[0].abs() > 0.2 * y[1..].iter().map(|v| v.abs()).fold(0.0, f64::max)
                });
                (
                    space,
                    "weak-field Schwarzschild plus ε (y³)⁴/(y⁰)²: Lorentzian Finsler, A ≠ 0",
                    false,
                    scale,
                    admissible,
                    position,
                    vec!["mass", "epsilon"],
                )
            }
        }
        other => {
            return Err(FinslerError::Construction(format!(
                "unknown space `{other}` (catalog: {CATALOG:?})"
            )))
        }
    };
    check_keys(name, params, &used)?;
    Ok(SpaceDescriptor {
        name: name.to_string(),
        params: params.clone(),
        space,
        notes,
        flat,
        curvature_scale: scale,
        admissible,
        position,
    })
}

/// Every catalog space at default parameters.
pub fn catalog() -> Vec<SpaceDescriptor> {
    CATALOG
        .iter()
        .map(|name| build(name, &Params::new()).expect("catalog defaults are valid"))
        .collect()
}
