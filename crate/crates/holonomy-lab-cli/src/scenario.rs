//! Scenario files: a versioned JSON schema describing the bundle,
//! connection, gauge, BF data, loops, families, integrator settings and the
//! requested checks. Unknown fields are rejected; every randomized
//! construction draws from an explicit seed.

use std::collections::BTreeMap;

use serde::Deserialize;

use holonomy_lab::bundle::GaugeTransformation;
use holonomy_lab::chen::BfPair;
use holonomy_lab::geometry::{LoopFamily, SampledCurve};
use holonomy_lab::lie::{AlgebraElement, GroupSpec, Representation};
use holonomy_lab::presets::*;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub schema_version: u32,
    pub group: String,
    pub bundle: BundleSpec,
    #[serde(default)]
    pub gauge: Option<GaugeSpec>,
    #[serde(default)]
    pub bf: Option<BfSpec>,
    #[serde(default)]
    pub representation: Option<RepSpec>,
    pub loops: Vec<LoopSpec>,
    #[serde(default)]
    pub family: Option<FamilySpec>,
    pub integrator: IntegratorSpec,
    #[serde(default)]
    pub checks: Vec<CheckSpec>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BundleSpec {
    pub atlas: String,
    pub preset: String,
    #[serde(default)]
    pub charge: Option<i64>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub degree: Option<usize>,
    #[serde(default)]
    pub scale: Option<f64>,
    #[serde(default)]
    pub xi: Option<Vec<f64>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaugeSpec {
    pub preset: String,
    pub seed: u64,
    #[serde(default)]
    pub degree: Option<usize>,
    #[serde(default)]
    pub scale: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BfSpec {
    pub preset: String,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub degree: Option<usize>,
    #[serde(default)]
    pub scale: Option<f64>,
    #[serde(default)]
    pub angle_coeff: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RepSpec {
    pub kind: String,
    #[serde(default)]
    pub charge: Option<i64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoopSpec {
    pub id: String,
    pub preset: String,
    #[serde(default)]
    pub radius: Option<f64>,
    #[serde(default)]
    pub winding: Option<i32>,
    #[serde(default)]
    pub phase: Option<f64>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub theta: Option<f64>,
    #[serde(default)]
    pub phi0: Option<f64>,
    #[serde(default)]
    pub m: Option<i32>,
    #[serde(default)]
    pub n: Option<i32>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilySpec {
    pub preset: String,
    #[serde(default)]
    pub r0: Option<f64>,
    #[serde(default)]
    pub r1: Option<f64>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub theta0: Option<f64>,
    #[serde(default)]
    pub theta1: Option<f64>,
    #[serde(default)]
    pub grid_s: Option<usize>,
    #[serde(default)]
    pub grid_t: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorSpec {
    pub step: f64,
    #[serde(default)]
    pub quad_order: Option<usize>,
    pub seed: u64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckSpec {
    pub check: String,
    pub tolerance: f64,
}

/// Everything a command needs, resolved from the scenario.
pub struct Built {
    pub group: GroupSpec,
    pub bc: BundleConnection,
    /// whether the connection preset is analytically flat
    pub flat_preset: bool,
    pub gauge: Option<GaugeTransformation>,
    pub bf: Option<BfPair>,
    pub rep: Representation,
    pub loops: Vec<(String, SampledCurve)>,
    pub family: Option<LoopFamily>,
    pub step: f64,
    pub order: usize,
    pub seed: u64,
    pub tolerances: BTreeMap<String, f64>,
}

/// Check names known to the runner, with default tolerances.
pub fn known_checks() -> BTreeMap<String, f64> {
    [
        ("transport-step-refinement", 1e-7),
        ("holonomy-step-refinement", 1e-7),
        ("curvature-flat", 1e-8),
        ("curvature-richardson", 0.8),
        ("curvature-estimator-agreement", 0.05),
        ("wilson-basepoint", 1e-9),
        ("wilson-gauge", 1e-7),
        ("gen-wilson-final-residual", 1e-4),
        ("gen-wilson-monotone", 1e-12),
        ("flatness-admission", 1e-8),
        ("flatness-homotopy", 1e-6),
        ("flatness-horizontality", 1e-5),
        ("flatness-intertwine", 1e-5),
        ("groupoid-axioms", 0.0),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v))
    .collect()
}

pub fn build(scenario: &Scenario, cli_step: Option<f64>, cli_order: Option<usize>, cli_seed: Option<u64>) -> Result<Built, String> {
    if scenario.schema_version != SCHEMA_VERSION {
        return Err(format!(
            "unsupported schema_version {} (expected {SCHEMA_VERSION})",
            scenario.schema_version
        ));
    }
    let group = match scenario.group.as_str() {
        "U1" => GroupSpec::U1,
        "SU2" => GroupSpec::SU2,
        "SO3" => GroupSpec::SO3,
        other => return Err(format!("unknown group {other:?}")),
    };
    let atlas = atlas_by_name(&scenario.bundle.atlas)
        .ok_or_else(|| format!("unknown atlas {:?}", scenario.bundle.atlas))?;

    let (bc, flat_preset) = match scenario.bundle.preset.as_str() {
        "trivial" => (trivial_preset(atlas.clone(), group), true),
        "flat-angle" => {
            if scenario.bundle.atlas != "punctured-plane" {
                return Err("flat-angle requires the punctured-plane atlas".into());
            }
            let coeffs = scenario
                .bundle
                .xi
                .clone()
                .ok_or("flat-angle requires the field \"xi\"")?;
            if coeffs.len() != group.algebra_dim() {
                return Err(format!(
                    "xi has {} coefficients, {} has algebra dimension {}",
                    coeffs.len(),
                    group,
                    group.algebra_dim()
                ));
            }
            (flat_angle_preset(AlgebraElement::from_coefficients(group, &coeffs)), true)
        }
        "monopole" => {
            if group != GroupSpec::U1 || scenario.bundle.atlas != "sphere" {
                return Err("monopole requires group U1 and the sphere atlas".into());
            }
            let charge = scenario.bundle.charge.ok_or("monopole requires \"charge\"")?;
            (monopole_preset(charge), false)
        }
        "random-polynomial" => {
            if scenario.bundle.atlas != "punctured-plane" {
                return Err("random-polynomial requires the punctured-plane atlas".into());
            }
            let seed = scenario.bundle.seed.ok_or("random-polynomial requires \"seed\"")?;
            let degree = scenario.bundle.degree.unwrap_or(3);
            let scale = scenario.bundle.scale.unwrap_or(0.8);
            (random_polynomial_preset(group, seed, degree, scale), false)
        }
        other => return Err(format!("unknown bundle preset {other:?}")),
    };

    let gauge = match &scenario.gauge {
        None => None,
        Some(spec) => match spec.preset.as_str() {
            "random-polynomial" => {
                if bc.bundle.atlas.charts.len() != 1 {
                    return Err("random-polynomial gauge requires a single-chart atlas".into());
                }
                Some(random_polynomial_gauge(
                    bc.bundle.clone(),
                    spec.seed,
                    spec.degree.unwrap_or(2),
                    spec.scale.unwrap_or(0.5),
                ))
            }
            "sphere-height" => {
                if scenario.bundle.atlas != "sphere" {
                    return Err("sphere-height gauge requires the sphere atlas".into());
                }
                Some(sphere_height_gauge(bc.bundle.clone(), spec.seed))
            }
            other => return Err(format!("unknown gauge preset {other:?}")),
        },
    };

    let bf = match &scenario.bf {
        None => None,
        Some(spec) => {
            let form = match spec.preset.as_str() {
                "random-polynomial" => {
                    let seed = spec.seed.ok_or("bf random-polynomial requires \"seed\"")?;
                    let raw = random_polynomial_1form(
                        bc.bundle.clone(),
                        seed,
                        spec.degree.unwrap_or(1),
                        1.0,
                    );
                    raw.scaled(spec.scale.unwrap_or(0.3))
                }
                "closed-angle" => {
                    if group != GroupSpec::U1 {
                        return Err("closed-angle bf preset requires group U1".into());
                    }
                    let seed = spec.seed.ok_or("closed-angle requires \"seed\"")?;
                    u1_closed_1form(bc.bundle.clone(), spec.angle_coeff.unwrap_or(0.3), seed)
                }
                "nonclosed" => {
                    if group != GroupSpec::U1 {
                        return Err("nonclosed bf preset requires group U1".into());
                    }
                    u1_nonclosed_1form(bc.bundle.clone(), spec.scale.unwrap_or(0.3))
                }
                other => return Err(format!("unknown bf preset {other:?}")),
            };
            Some(BfPair::new(bc.connection.clone(), form).map_err(|e| e.to_string())?)
        }
    };

    let rep = match &scenario.representation {
        None => Representation::fundamental(group),
        Some(spec) => match spec.kind.as_str() {
            "fundamental" => Representation::fundamental(group),
            "adjoint" => Representation::adjoint_rep(group),
            "u1-charge" => {
                if group != GroupSpec::U1 {
                    return Err("u1-charge representation requires group U1".into());
                }
                Representation::u1_charge(spec.charge.ok_or("u1-charge requires \"charge\"")?)
            }
            other => return Err(format!("unknown representation {other:?}")),
        },
    };

    let mut loops = Vec::new();
    for spec in &scenario.loops {
        let curve = match spec.preset.as_str() {
            "circle" => {
                require_planar(&scenario.bundle.atlas, "circle")?;
                circle_loop(
                    atlas.clone(),
                    spec.radius.ok_or("circle loop requires \"radius\"")?,
                    spec.winding.unwrap_or(1),
                    spec.phase.unwrap_or(0.0),
                )
            }
            "random-trig" => {
                require_planar(&scenario.bundle.atlas, "random-trig")?;
                random_trig_loop(
                    atlas.clone(),
                    spec.seed.ok_or("random-trig loop requires \"seed\"")?,
                    spec.radius.unwrap_or(1.0),
                )
            }
            "latitude" => {
                if scenario.bundle.atlas != "sphere" {
                    return Err("latitude loop requires the sphere atlas".into());
                }
                latitude_loop(
                    atlas.clone(),
                    spec.theta.ok_or("latitude loop requires \"theta\"")?,
                    spec.winding.unwrap_or(1),
                )
            }
            "meridian" => {
                if scenario.bundle.atlas != "sphere" {
                    return Err("meridian loop requires the sphere atlas".into());
                }
                meridian_loop(atlas.clone(), spec.phi0.unwrap_or(0.0)).map_err(|e| e.to_string())?
            }
            "torus-line" => {
                if scenario.bundle.atlas != "torus" {
                    return Err("torus-line loop requires the torus atlas".into());
                }
                torus_loop(atlas.clone(), spec.m.unwrap_or(1), spec.n.unwrap_or(0))
            }
            other => return Err(format!("unknown loop preset {other:?}")),
        };
        loops.push((spec.id.clone(), curve));
    }
    if loops.is_empty() {
        return Err("scenario needs at least one loop".into());
    }
    let mut ids: Vec<&String> = loops.iter().map(|(id, _)| id).collect();
    ids.sort();
    ids.dedup();
    if ids.len() != loops.len() {
        return Err("loop ids must be unique".into());
    }

    let family = match &scenario.family {
        None => None,
        Some(spec) => {
            let fam = match spec.preset.as_str() {
                "radius" => {
                    require_planar(&scenario.bundle.atlas, "radius family")?;
                    radius_family(
                        atlas.clone(),
                        spec.r0.ok_or("radius family requires \"r0\"")?,
                        spec.r1.ok_or("radius family requires \"r1\"")?,
                    )
                }
                "trig-radius" => {
                    require_planar(&scenario.bundle.atlas, "trig-radius family")?;
                    trig_radius_family(
                        atlas.clone(),
                        spec.seed.ok_or("trig-radius family requires \"seed\"")?,
                        spec.r0.unwrap_or(1.0),
                    )
                }
                "latitude" => {
                    if scenario.bundle.atlas != "sphere" {
                        return Err("latitude family requires the sphere atlas".into());
                    }
                    latitude_family(
                        atlas.clone(),
                        spec.theta0.unwrap_or(0.8),
                        spec.theta1.unwrap_or(2.0),
                    )
                }
                other => return Err(format!("unknown family preset {other:?}")),
            };
            Some(fam.with_grid(spec.grid_s.unwrap_or(64), spec.grid_t.unwrap_or(256)))
        }
    };

    let mut tolerances = known_checks();
    for check in &scenario.checks {
        if !tolerances.contains_key(&check.check) {
            return Err(format!("unknown check {:?}", check.check));
        }
        tolerances.insert(check.check.clone(), check.tolerance);
    }

    let step = cli_step.unwrap_or(scenario.integrator.step);
    if !(step > 0.0 && step <= 0.1) {
        return Err(format!("integrator step {step} out of range (0, 0.1]"));
    }
    let order = cli_order.or(scenario.integrator.quad_order).unwrap_or(4);
    if order > holonomy_lab::chen::MAX_ORDER {
        return Err(format!(
            "series order {order} exceeds the cost guard {}",
            holonomy_lab::chen::MAX_ORDER
        ));
    }

    Ok(Built {
        group,
        bc,
        flat_preset,
        gauge,
        bf,
        rep,
        loops,
        family,
        step,
        order,
        seed: cli_seed.unwrap_or(scenario.integrator.seed),
        tolerances,
    })
}

fn require_planar(atlas: &str, what: &str) -> Result<(), String> {
    if atlas == "punctured-plane" || atlas == "torus" {
        Ok(())
    } else {
        Err(format!("{what} requires a planar atlas (punctured-plane)"))
    }
}
