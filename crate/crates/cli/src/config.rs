//! Scenario configuration: a sectioned TOML document is parsed, validated,
//! and resolved into a [`RunManifest`] in which every defaultable field has
//! an explicit value. Unknown keys are rejected by name; invariant
//! violations surface the invariant itself.

use anyhow::{anyhow, bail, Result};
use serde::Deserialize;

use eprad_core::params::PhysicsParams;
use eprad_core::solver::{InitialProfile, InitialVelocity, ScenarioConfig};

/// The five audits the report can carry, in canonical order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AuditKind {
    EnergyDissipation,
    InertiaIdentity,
    Expansion,
    Hoelder,
    CollapseScaling,
}

impl AuditKind {
    pub const ALL: [AuditKind; 5] = [
        AuditKind::EnergyDissipation,
        AuditKind::InertiaIdentity,
        AuditKind::Expansion,
        AuditKind::Hoelder,
        AuditKind::CollapseScaling,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AuditKind::EnergyDissipation => "energy-dissipation",
            AuditKind::InertiaIdentity => "inertia-identity",
            AuditKind::Expansion => "expansion",
            AuditKind::Hoelder => "hoelder",
            AuditKind::CollapseScaling => "collapse-scaling",
        }
    }

    fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| {
                anyhow!(
                    "unknown audit \"{s}\"; available: {}",
                    Self::ALL.map(|k| k.name()).join(", ")
                )
            })
    }
}

/// Fully resolved run description: scenario, enabled audits, artifact names.
#[derive(Debug, Clone)]
pub struct RunManifest {
    /// Stem used for artifact file names.
    pub name: String,
    pub scenario: ScenarioConfig,
    /// Enabled audits in canonical order, duplicates removed.
    pub audits: Vec<AuditKind>,
}

impl RunManifest {
    pub fn csv_filename(&self) -> String {
        format!("{}.csv", self.name)
    }

    pub fn report_filename(&self) -> String {
        format!("{}.report.txt", self.name)
    }

    /// Echo of the manifest with every field resolved, one `key = value`
    /// line each, so defaults are visible rather than implied.
    pub fn echo(&self) -> String {
        let s = &self.scenario;
        let mut out = String::new();
        out.push_str("[manifest]\n");
        out.push_str(&format!("name = {}\n", self.name));
        out.push_str(&format!("dim = {}\n", s.params.dim));
        out.push_str(&format!("gamma = {}\n", s.params.gamma));
        out.push_str(&format!("k = {}\n", s.params.k));
        out.push_str(&format!("beta = {}\n", s.params.beta));
        out.push_str(&format!("alpha = {}\n", s.params.alpha));
        out.push_str(&format!("n_cells = {}\n", s.n_cells));
        out.push_str(&format!("r_max = {}\n", s.r_max));
        match s.profile {
            InitialProfile::UniformBall { rho0, radius } => {
                out.push_str("profile = uniform-ball\n");
                out.push_str(&format!("rho0 = {rho0}\n"));
                out.push_str(&format!("radius = {radius}\n"));
            }
            InitialProfile::ParabolicCap { rho_center, radius } => {
                out.push_str("profile = parabolic-cap\n");
                out.push_str(&format!("rho_center = {rho_center}\n"));
                out.push_str(&format!("radius = {radius}\n"));
            }
            InitialProfile::ConcentrationFamily { epsilon, mass } => {
                out.push_str("profile = concentration\n");
                out.push_str(&format!("epsilon = {epsilon}\n"));
                out.push_str(&format!("mass = {mass}\n"));
            }
        }
        match &s.velocity {
            InitialVelocity::Zero => out.push_str("velocity = zero\n"),
            InitialVelocity::Linear { rate } => {
                out.push_str("velocity = linear\n");
                out.push_str(&format!("rate = {rate}\n"));
            }
            InitialVelocity::Table(points) => {
                out.push_str("velocity = table\n");
                let rows: Vec<String> =
                    points.iter().map(|(r, v)| format!("[{r}, {v}]")).collect();
                out.push_str(&format!("table = [{}]\n", rows.join(", ")));
            }
        }
        out.push_str(&format!("t_end = {}\n", s.t_end));
        out.push_str(&format!("cfl = {}\n", s.cfl));
        out.push_str(&format!("output_every = {}\n", s.output_every));
        out.push_str(&format!("density_floor_ratio = {}\n", s.density_floor_ratio));
        out.push_str(&format!(
            "support_threshold_ratio = {}\n",
            s.support_threshold_ratio
        ));
        match s.fail_at_time {
            Some(t) => out.push_str(&format!("fail_at_time = {t}\n")),
            None => out.push_str("fail_at_time = none\n"),
        }
        let names: Vec<&str> = self.audits.iter().map(|a| a.name()).collect();
        out.push_str(&format!("audits = {}\n", names.join(", ")));
        out
    }
}

// ---------------------------------------------------------------------
// Raw document schema
// ---------------------------------------------------------------------

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Document {
    #[serde(default)]
    params: ParamsSection,
    #[serde(default)]
    grid: GridSection,
    #[serde(default)]
    initial: InitialSection,
    run: RunSection,
    #[serde(default)]
    audits: AuditsSection,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ParamsSection {
    dim: Option<u32>,
    gamma: Option<f64>,
    k: Option<f64>,
    beta: Option<f64>,
}

impl Default for ParamsSection {
    fn default() -> Self {
        Self { dim: None, gamma: None, k: None, beta: None }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridSection {
    n_cells: Option<usize>,
    r_max: Option<f64>,
}

impl Default for GridSection {
    fn default() -> Self {
        Self { n_cells: None, r_max: None }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct InitialSection {
    profile: Option<String>,
    rho0: Option<f64>,
    radius: Option<f64>,
    rho_center: Option<f64>,
    epsilon: Option<f64>,
    mass: Option<f64>,
    velocity: Option<String>,
    rate: Option<f64>,
    table: Option<Vec<[f64; 2]>>,
}

impl Default for InitialSection {
    fn default() -> Self {
        Self {
            profile: None,
            rho0: None,
            radius: None,
            rho_center: None,
            epsilon: None,
            mass: None,
            velocity: None,
            rate: None,
            table: None,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RunSection {
    t_end: f64,
    cfl: Option<f64>,
    output_every: Option<f64>,
    density_floor_ratio: Option<f64>,
    support_threshold_ratio: Option<f64>,
    fail_at_time: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct AuditsSection {
    enabled: Option<Vec<String>>,
}

// ---------------------------------------------------------------------
// Resolution
// ---------------------------------------------------------------------

/// Reject a key that was given but does not apply to the chosen variant.
fn forbid(key: &str, value: Option<f64>, chosen: &str, applies_to: &str) -> Result<()> {
    if value.is_some() {
        bail!("key \"{key}\" only applies to {applies_to}, but {chosen} was selected");
    }
    Ok(())
}

/// Parse and validate a configuration document into a fully resolved
/// manifest named `name`.
pub fn parse_config(text: &str, name: &str) -> Result<RunManifest> {
    // The single-line message keeps the offending key readable in
    // aggregate tables; the multi-line snippet rendering does not.
    let doc: Document = toml::from_str(text)
        .map_err(|e| anyhow!("configuration rejected: {}", e.message()))?;

    let dim = doc.params.dim.unwrap_or(3);
    let gamma = doc.params.gamma.unwrap_or(5.0 / 3.0);
    let k = doc.params.k.unwrap_or(1.0 / gamma);
    let beta = doc.params.beta.unwrap_or(0.0);
    let params = PhysicsParams::new(dim, gamma, k, beta)?;

    let n_cells = doc.grid.n_cells.unwrap_or(256);
    let r_max = doc.grid.r_max.unwrap_or(8.0);

    let ini = &doc.initial;
    let profile_kind = ini.profile.as_deref().unwrap_or("uniform-ball");
    let profile = match profile_kind {
        "uniform-ball" => {
            forbid("rho_center", ini.rho_center, "uniform-ball", "profile = parabolic-cap")?;
            forbid("epsilon", ini.epsilon, "uniform-ball", "profile = concentration")?;
            forbid("mass", ini.mass, "uniform-ball", "profile = concentration")?;
            InitialProfile::UniformBall {
                rho0: ini.rho0.unwrap_or(1.0),
                radius: ini.radius.unwrap_or(1.0),
            }
        }
        "parabolic-cap" => {
            forbid("rho0", ini.rho0, "parabolic-cap", "profile = uniform-ball")?;
            forbid("epsilon", ini.epsilon, "parabolic-cap", "profile = concentration")?;
            forbid("mass", ini.mass, "parabolic-cap", "profile = concentration")?;
            InitialProfile::ParabolicCap {
                rho_center: ini.rho_center.unwrap_or(1.0),
                radius: ini.radius.unwrap_or(1.0),
            }
        }
        "concentration" => {
            forbid("rho0", ini.rho0, "concentration", "profile = uniform-ball")?;
            forbid("rho_center", ini.rho_center, "concentration", "profile = parabolic-cap")?;
            forbid("radius", ini.radius, "concentration", "ball profiles")?;
            InitialProfile::ConcentrationFamily {
                epsilon: ini.epsilon.unwrap_or(0.1),
                mass: ini.mass.unwrap_or(1.0),
            }
        }
        other => bail!(
            "unknown profile \"{other}\"; available: uniform-ball, parabolic-cap, concentration"
        ),
    };

    let velocity_kind = ini.velocity.as_deref().unwrap_or("zero");
    let velocity = match velocity_kind {
        "zero" => {
            forbid("rate", ini.rate, "velocity = zero", "velocity = linear")?;
            if ini.table.is_some() {
                bail!("key \"table\" only applies to velocity = table, but velocity = zero was selected");
            }
            InitialVelocity::Zero
        }
        "linear" => {
            if ini.table.is_some() {
                bail!("key \"table\" only applies to velocity = table, but velocity = linear was selected");
            }
            InitialVelocity::Linear { rate: ini.rate.unwrap_or(0.0) }
        }
        "table" => {
            forbid("rate", ini.rate, "velocity = table", "velocity = linear")?;
            let points = ini
                .table
                .as_ref()
                .ok_or_else(|| anyhow!("velocity = table requires the \"table\" key"))?
                .iter()
                .map(|&[r, v]| (r, v))
                .collect();
            InitialVelocity::Table(points)
        }
        other => bail!("unknown velocity \"{other}\"; available: zero, linear, table"),
    };

    let mut scenario = ScenarioConfig::new(params, n_cells, r_max, profile, doc.run.t_end);
    scenario.velocity = velocity;
    if let Some(cfl) = doc.run.cfl {
        scenario.cfl = cfl;
    }
    if let Some(every) = doc.run.output_every {
        scenario.output_every = every;
    }
    if let Some(ratio) = doc.run.density_floor_ratio {
        scenario.density_floor_ratio = ratio;
    }
    if let Some(ratio) = doc.run.support_threshold_ratio {
        scenario.support_threshold_ratio = ratio;
    }
    scenario.fail_at_time = doc.run.fail_at_time;
    scenario.validate()?;

    let audits: Vec<AuditKind> = match &doc.audits.enabled {
        Some(names) => {
            let mut set = Vec::new();
            for n in names {
                let kind = AuditKind::parse(n)?;
                if !set.contains(&kind) {
                    set.push(kind);
                }
            }
            // Canonical order regardless of listing order.
            AuditKind::ALL.into_iter().filter(|k| set.contains(k)).collect()
        }
        // Default: everything that applies. The inertia identity is only
        // defined for undamped flows, so it is auto-enabled only there.
        None => AuditKind::ALL
            .into_iter()
            .filter(|k| *k != AuditKind::InertiaIdentity || beta == 0.0)
            .collect(),
    };
    if beta > 0.0 && audits.contains(&AuditKind::InertiaIdentity) {
        bail!(
            "the inertia-identity audit requires beta = 0; it cannot be enabled with beta = {beta}"
        );
    }

    Ok(RunManifest { name: name.to_string(), scenario, audits })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_resolves_every_default() {
        let manifest = parse_config("[run]\nt_end = 1.0\n", "mini").unwrap();
        let echo = manifest.echo();
        for needle in [
            "dim = 3",
            "gamma = 1.6666666666666667",
            "k = 0.6",
            "beta = 0",
            "n_cells = 256",
            "r_max = 8",
            "profile = uniform-ball",
            "rho0 = 1",
            "radius = 1",
            "velocity = zero",
            "t_end = 1",
            "cfl = 0.4",
            "output_every = 0.01",
            "density_floor_ratio = 0.000000000001",
            "fail_at_time = none",
            "audits = energy-dissipation, inertia-identity, expansion, hoelder, collapse-scaling",
        ] {
            assert!(echo.contains(needle), "echo is missing \"{needle}\":\n{echo}");
        }
    }

    #[test]
    fn unknown_key_is_named() {
        let err = parse_config("[run]\nt_end = 1.0\nfrobnicate = 2\n", "x").unwrap_err();
        let msg = format!("{err:#}");
        assert!(msg.contains("frobnicate"), "{msg}");
    }

    #[test]
    fn gamma_below_one_names_the_invariant() {
        let err =
            parse_config("[params]\ngamma = 0.5\n[run]\nt_end = 1.0\n", "x").unwrap_err();
        let msg = format!("{err:#}");
        assert!(msg.contains("gamma >= 1"), "{msg}");
    }

    #[test]
    fn damped_inertia_identity_is_rejected() {
        let text = "[params]\nbeta = 0.5\n[run]\nt_end = 1.0\n[audits]\nenabled = [\"inertia-identity\"]\n";
        let err = parse_config(text, "x").unwrap_err();
        let msg = format!("{err:#}");
        assert!(msg.contains("requires beta = 0"), "{msg}");
    }

    #[test]
    fn damped_default_audit_set_omits_the_inertia_identity() {
        let manifest =
            parse_config("[params]\nbeta = 0.5\n[run]\nt_end = 1.0\n", "x").unwrap();
        assert!(!manifest.audits.contains(&AuditKind::InertiaIdentity));
        assert_eq!(manifest.audits.len(), 4);
    }

    #[test]
    fn profile_keys_are_cross_checked() {
        let text = "[initial]\nprofile = \"uniform-ball\"\nrho_center = 1.0\n[run]\nt_end = 1.0\n";
        let err = parse_config(text, "x").unwrap_err();
        assert!(format!("{err:#}").contains("rho_center"));
    }

    #[test]
    fn audit_names_are_validated() {
        let text = "[run]\nt_end = 1.0\n[audits]\nenabled = [\"entropy\"]\n";
        let err = parse_config(text, "x").unwrap_err();
        assert!(format!("{err:#}").contains("unknown audit"));
    }
}
