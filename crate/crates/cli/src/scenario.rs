//! Scenario files: a single JSON document describing a graph family and what to run on it.

use std::path::Path;
use std::sync::Arc;

use graphmass::comparison::AsymptoticProfile;
use graphmass::levelsets::CoareaOptions;
use graphmass::geometry::{Bump, Bumped, LowerHemisphere, Paraboloid, Rescaled, RotationalGraph};
use graphmass::schwarzschild::{profile_from_mass, MassLaw, MassProfile, SchwarzschildProfile};
use graphmass::{Dimension, GraphFunction, RadialProfile};
use serde::Deserialize;

use crate::report::Invariant;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub schema: u32,
    pub dimension: usize,
    pub family: Family,
    #[serde(default)]
    pub asymptotics: Option<Asymptotics>,
    #[serde(default)]
    pub study: Study,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub coarea: Coarea,
}

/// Ray controls for the level integrals of non-rotational graphs.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Coarea {
    pub rule_q: usize,
    pub band_nodes: usize,
    pub spacing: f64,
}

impl Default for Coarea {
    fn default() -> Self {
        let d = CoareaOptions::default();
        Self { rule_q: d.rule_q, band_nodes: d.band_nodes, spacing: d.spacing }
    }
}

impl Coarea {
    pub fn options(&self) -> CoareaOptions {
        CoareaOptions { rule_q: self.rule_q, band_nodes: self.band_nodes, spacing: self.spacing }
    }
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Family {
    Schwarzschild {
        m: f64,
    },
    /// `mass` is either a closed-form law or `{"law": "tabulated", "r": [...], "m": [...]}`.
    MassProfile {
        r_min: Option<f64>,
        mass: serde_json::Value,
    },
    SchwarzschildPlusBump {
        m: f64,
        bump: BumpSpec,
    },
    ExplicitRotational {
        profile: Explicit,
    },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BumpSpec {
    pub center: Vec<f64>,
    pub width: f64,
    pub amplitude: f64,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "shape", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Explicit {
    Paraboloid { a: f64 },
    Hemisphere { radius: f64 },
}

/// Decay data `|f - S_m - Lambda| <= gamma |x|^alpha` for `|x| > r0`; `gamma` is
/// fitted when omitted.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Asymptotics {
    pub r0: f64,
    pub decay_exponent: f64,
    pub gamma: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Study {
    /// Strictly decreasing mass ladder for `study`.
    pub masses: Vec<f64>,
    pub rho: f64,
    /// Number of sampled levels for `verify` and `levelsets`.
    pub levels: usize,
    /// Offset of the ball centre from `(0, h0)` for `flatnorm`, `n + 1` coordinates.
    pub center_offset: Option<Vec<f64>>,
}

impl Default for Study {
    fn default() -> Self {
        Self { masses: (0..=4).map(|i| 2f64.powi(-i)).collect(), rho: 4.0, levels: 6, center_offset: None }
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Relative agreement of the two scalar-curvature routes.
    pub curvature: f64,
    /// Relative error of the recovered ADM mass.
    pub mass: f64,
    /// Quasi-local identity residual relative to `C_n m`.
    pub identity: f64,
    /// Allowed negative Minkowski gap relative to the total mean curvature.
    pub minkowski: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { curvature: 1e-6, mass: 1e-4, identity: 1e-5, minkowski: 1e-8 }
    }
}

/// Bad input: reported with exit status 2.
#[derive(Debug)]
pub struct ParseError(pub String);

impl std::fmt::Display for ParseError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ParseError {}

fn bad(msg: impl Into<String>) -> anyhow::Error {
    ParseError(msg.into()).into()
}

impl Scenario {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| bad(format!("{}: {e}", path.display())))?;
        let s: Scenario = serde_json::from_str(&text).map_err(|e| bad(format!("{}: {e}", path.display())))?;
        s.validate()?;
        Ok(s)
    }

    /// Scenario for commands that need only a dimension.
    pub fn bare(dimension: usize) -> Self {
        Self {
            schema: SCHEMA_VERSION,
            dimension,
            family: Family::Schwarzschild { m: 1.0 },
            asymptotics: None,
            study: Study::default(),
            tolerances: Tolerances::default(),
            coarea: Coarea::default(),
        }
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        if self.schema != SCHEMA_VERSION {
            return Err(bad(format!("unsupported schema {} (expected {SCHEMA_VERSION})", self.schema)));
        }
        Dimension::new(self.dimension).map_err(|e| bad(e.to_string()))?;
        let t = &self.tolerances;
        if [t.curvature, t.mass, t.identity, t.minkowski].iter().any(|v| !(*v > 0.0)) {
            return Err(bad("tolerances must be positive"));
        }
        if self.study.masses.windows(2).any(|w| !(w[1] < w[0])) || self.study.masses.iter().any(|m| !(*m > 0.0)) {
            return Err(bad("mass ladder must be positive and strictly decreasing"));
        }
        if !(self.study.rho > 0.0) {
            return Err(bad("rho must be positive"));
        }
        if self.coarea.rule_q < 2 || self.coarea.band_nodes < 2 || !(self.coarea.spacing > 0.0) {
            return Err(bad("coarea controls must be positive (rule_q, band_nodes >= 2)"));
        }
        if self.study.levels < 2 {
            return Err(bad("need at least two levels"));
        }
        if let Some(c) = &self.study.center_offset {
            if c.len() != self.dimension + 1 {
                return Err(bad(format!("center_offset needs {} coordinates", self.dimension + 1)));
            }
        }
        match &self.family {
            Family::Schwarzschild { m } | Family::SchwarzschildPlusBump { m, .. } if !(*m > 0.0) => {
                Err(bad("mass must be positive"))
            }
            Family::SchwarzschildPlusBump { bump, .. } if bump.center.len() != self.dimension => {
                Err(bad(format!("bump centre needs {} coordinates", self.dimension)))
            }
            _ => Ok(()),
        }
    }

    pub fn dim(&self) -> Dimension {
        Dimension::new(self.dimension).expect("validated")
    }
}

/// The scenario graph together with what is known about it in closed form.
pub struct Built {
    pub graph: Arc<dyn GraphFunction>,
    /// Exact ADM mass, when the family has one.
    pub mass: Option<f64>,
    /// Rotational profile used to place levels (the unperturbed one for bumped graphs).
    pub profile: Arc<dyn RadialProfile>,
    /// `[lo, hi]` radii for curvature sampling.
    pub shell: [f64; 2],
    /// `[lo, hi]` radii whose profile heights are the sampled levels.
    pub level_radii: [f64; 2],
    /// Whether the family guarantees `R >= 0` (and with it a nondecreasing flux).
    pub nonnegative_curvature: bool,
}

/// Outcome of building the scenario graph: a graph, or a failed admissibility invariant.
pub enum Build {
    Graph(Built),
    Inadmissible(Invariant),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Tabulated {
    #[allow(dead_code)]
    law: String,
    r: Vec<f64>,
    m: Vec<f64>,
}

fn negative_curvature(n: Dimension, r: f64, dm: f64) -> Invariant {
    let nf = n.as_f64();
    let big_r = 2.0 * (nf - 1.0) * dm * r.powf(1.0 - nf);
    Invariant::fail(
        "scalar-curvature-nonnegative",
        format!("mass decreases near r = {r}: R = {big_r:e} < 0"),
    )
    .with("R", big_r)
    .with("r", r)
}

fn build_mass_profile(n: Dimension, r_min: Option<f64>, mass: &serde_json::Value) -> anyhow::Result<Build> {
    let tag = mass.get("law").and_then(|v| v.as_str()).unwrap_or_default();
    let mp = if tag == "tabulated" {
        let t: Tabulated = serde_json::from_value(mass.clone()).map_err(|e| bad(format!("mass samples: {e}")))?;
        if t.r.len() != t.m.len() || t.r.len() < 2 || t.r.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(bad("mass samples need matching, strictly increasing radii"));
        }
        // a falling sample pair forces m' < 0, hence R < 0, on that interval
        let worst = (0..t.r.len() - 1)
            .map(|i| (t.r[i + 1], (t.m[i + 1] - t.m[i]) / (t.r[i + 1] - t.r[i])))
            .fold((f64::NAN, 0.0), |a, b| if b.1 < a.1 { b } else { a });
        if worst.1 < 0.0 {
            return Ok(Build::Inadmissible(negative_curvature(n, worst.0, worst.1)));
        }
        let samples = graphmass::schwarzschild::Pchip::new(t.r, t.m).map_err(|e| bad(e.to_string()))?;
        let mut mp = MassProfile::tabulated(samples);
        if let Some(r) = r_min {
            mp.r_min = r;
        }
        mp
    } else {
        let law: MassLaw = serde_json::from_value(mass.clone()).map_err(|e| bad(format!("mass law: {e}")))?;
        MassProfile::new(law, r_min.ok_or_else(|| bad("mass-profile needs r_min"))?)
    };
    let p = profile_from_mass(mp, n).map_err(|e| bad(e.to_string()))?;
    if !p.nondecreasing() {
        let (big_r, r) = p.min_scalar_curvature();
        let nf = n.as_f64();
        return Ok(Build::Inadmissible(negative_curvature(n, r, big_r / (2.0 * (nf - 1.0) * r.powf(1.0 - nf)))));
    }
    let m = p.mass_profile().m_total();
    let r0 = p.r_min();
    let p: Arc<dyn RadialProfile> = Arc::new(p);
    let g = RotationalGraph::new(n, p.clone()).map_err(|e| bad(e.to_string()))?;
    Ok(Build::Graph(Built {
        graph: Arc::new(g),
        mass: m.is_finite().then_some(m),
        profile: p,
        shell: [1.05 * r0, 6.0 * r0],
        level_radii: [1.5 * r0, 8.0 * r0],
        nonnegative_curvature: true,
    }))
}

pub fn build(s: &Scenario) -> anyhow::Result<Build> {
    let n = s.dim();
    let schwarzschild = |m: f64| -> anyhow::Result<(Arc<dyn RadialProfile>, Arc<dyn GraphFunction>)> {
        let p: Arc<dyn RadialProfile> = Arc::new(SchwarzschildProfile::new(n, m).map_err(|e| bad(e.to_string()))?);
        let g = RotationalGraph::new(n, p.clone()).map_err(|e| bad(e.to_string()))?;
        Ok((p, Arc::new(g)))
    };
    Ok(Build::Graph(match &s.family {
        Family::Schwarzschild { m } => {
            let (p, g) = schwarzschild(*m)?;
            let rh = p.r_min();
            Built {
                graph: g,
                mass: Some(*m),
                profile: p,
                shell: [1.05 * rh, 6.0 * rh],
                level_radii: [1.5 * rh, 8.0 * rh],
                nonnegative_curvature: true,
            }
        }
        Family::SchwarzschildPlusBump { m, bump } => {
            let (p, g) = schwarzschild(*m)?;
            let rh = p.r_min();
            let bump = Bump { center: bump.center.clone(), width: bump.width, amplitude: bump.amplitude };
            let b = Bumped::new(g, bump).map_err(|e| bad(e.to_string()))?;
            Built {
                graph: Arc::new(b),
                mass: Some(*m),
                profile: p,
                shell: [1.05 * rh, 6.0 * rh],
                level_radii: [1.5 * rh, 8.0 * rh],
                // a compact bump on a scalar-flat graph makes R change sign
                nonnegative_curvature: false,
            }
        }
        Family::MassProfile { r_min, mass } => return build_mass_profile(n, *r_min, mass),
        Family::ExplicitRotational { profile } => {
            let (p, hi): (Arc<dyn RadialProfile>, f64) = match profile {
                Explicit::Paraboloid { a } if *a > 0.0 => (Arc::new(Paraboloid { a: *a }), 3.0),
                Explicit::Hemisphere { radius } if *radius > 0.0 => {
                    (Arc::new(LowerHemisphere { radius: *radius }), 0.9 * radius)
                }
                _ => return Err(bad("profile parameters must be positive")),
            };
            let g = RotationalGraph::new(n, p.clone()).map_err(|e| bad(e.to_string()))?;
            Built {
                graph: Arc::new(g),
                mass: None,
                profile: p,
                shell: [0.0, hi],
                level_radii: [0.2 * hi, hi],
                nonnegative_curvature: true,
            }
        }
    }))
}

impl Built {
    pub fn require_mass(&self) -> anyhow::Result<f64> {
        self.mass.ok_or_else(|| bad("this command needs a family with finite ADM mass"))
    }

    /// Member of mass `m`: `g(x) = lambda^(-1) f(lambda x)` with `lambda = (m / M)^(-1/(n-2))`.
    pub fn member(&self, m: f64) -> anyhow::Result<Arc<dyn GraphFunction>> {
        let big_m = self.require_mass()?;
        let lambda = (m / big_m).powf(-1.0 / self.graph.dim().k());
        Ok(Arc::new(Rescaled::new(self.graph.clone(), lambda, 0.0)?))
    }

    /// Decay data for the low-dimensional bounds, fitted on the scenario graph.
    pub fn asymptotics(&self, a: Option<Asymptotics>) -> anyhow::Result<Option<AsymptoticProfile>> {
        if self.graph.dim().get() >= 5 {
            return Ok(None);
        }
        let a = a.ok_or_else(|| bad("n = 3, 4 need an \"asymptotics\" block"))?;
        let m = self.require_mass()?;
        let gamma = match a.gamma {
            Some(g) => g,
            None => {
                // 1.5 times the worst measured ratio leaves room for the fit
                let (_, probe) =
                    AsymptoticProfile::fit(self.graph.as_ref(), m, a.r0, 1.0, a.decay_exponent, 1e4)?;
                1.5 * probe.worst_ratio.max(1e-12)
            }
        };
        let (ap, _) = AsymptoticProfile::fit(self.graph.as_ref(), m, a.r0, gamma, a.decay_exponent, 1e4)?;
        Ok(Some(ap))
    }
}
