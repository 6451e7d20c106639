//! Run configuration: a sectioned TOML document with an explicit
//! `schema_version`. Unknown keys are rejected with their full path.

use std::path::Path;

use serde::{Deserialize, Serialize};
use wingqed_core::consts::angular;
use wingqed_core::fdfd::SolverSettings;
use wingqed_core::geometry::{CavityParams, GridSpec, MirrorModel, MirrorProfile};
use wingqed_core::mirror::{quarter_wave_stack, StackSpec};

use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub geometry: Option<GeometrySection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solver: Option<SolverSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mirror: Option<MirrorSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub qed: Option<QedSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    ConfocalArc,
    Plane,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MirrorModelKind {
    IdealPec,
    DielectricStack,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeometrySection {
    #[serde(rename = "L_m")]
    pub length_m: f64,
    #[serde(rename = "h_over_L")]
    pub h_over_l: f64,
    #[serde(rename = "d_over_L")]
    pub d_over_l: f64,
    #[serde(rename = "l_pml_over_L")]
    pub l_pml_over_l: f64,
    pub eta: f64,
    pub profile: Profile,
    pub mirror_model: MirrorModelKind,
}

impl Default for GeometrySection {
    fn default() -> Self {
        Self {
            length_m: 0.01,
            h_over_l: 0.5,
            d_over_l: 0.0,
            l_pml_over_l: 0.4,
            eta: 1.0,
            profile: Profile::ConfocalArc,
            mirror_model: MirrorModelKind::IdealPec,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSection {
    pub shift_ghz: f64,
    pub n_modes: usize,
    pub seed: u64,
    /// Grid points per wavelength at the shift frequency.
    pub ppw: f64,
    pub pml_order: f64,
    pub pml_target_reflection: f64,
    pub max_pml_energy_fraction: f64,
    /// Mode followed across sweep points.
    pub track_m: usize,
    pub track_k: usize,
}

impl Default for SolverSection {
    fn default() -> Self {
        Self {
            shift_ghz: 45.0,
            n_modes: 6,
            seed: 1,
            ppw: 40.0,
            pml_order: 3.0,
            pml_target_reflection: 1e-8,
            max_pml_energy_fraction: 0.2,
            track_m: 1,
            track_k: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MirrorSection {
    pub n_h: f64,
    pub k_h: f64,
    pub n_l: f64,
    pub k_l: f64,
    pub n_pairs: usize,
    pub n_sub: f64,
    /// Design wavelength. The pipeline falls back to the tracked mode's
    /// wavelength when unset.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda0_mm: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda_min_mm: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda_max_mm: Option<f64>,
    pub lambda_points: usize,
    /// Replaces the stack-derived mirror decay rate (kappa / 2 pi, Hz).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kappa_mirror_hz: Option<f64>,
}

impl Default for MirrorSection {
    fn default() -> Self {
        Self {
            n_h: 6.0,
            k_h: 0.0,
            n_l: 1.2,
            k_l: 0.0,
            n_pairs: 8,
            n_sub: 1.0,
            lambda0_mm: None,
            lambda_min_mm: None,
            lambda_max_mm: None,
            lambda_points: 1,
            kappa_mirror_hz: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialState {
    /// Vacuum field, excited atom.
    #[serde(rename = "0e")]
    ZeroExcited,
    #[serde(rename = "0g")]
    ZeroGround,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QedSection {
    /// Atomic transition frequency.
    pub omega_ghz: f64,
    /// Cavity frequency; defaults to the atomic one.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega_a_ghz: Option<f64>,
    /// gamma / 2 pi.
    pub gamma_hz: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub g_over_gamma: Option<f64>,
    #[serde(rename = "derive_g_from_V")]
    pub derive_g_from_v: bool,
    /// kappa / 2 pi.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kappa_hz: Option<f64>,
    pub derive_kappa_from_pipeline: bool,
    /// Cached pipeline artifact supplying derived g and kappa.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pipeline_run_id: Option<String>,
    #[serde(rename = "pipeline_d_over_L", skip_serializing_if = "Option::is_none")]
    pub pipeline_d_over_l: Option<f64>,
    pub omega_drive_over_gamma: f64,
    /// Drive detuning used by driven dynamics.
    pub delta_over_gamma: f64,
    pub n_max: usize,
    pub rel_tol: f64,
    pub t_end_us: f64,
    pub initial_state: InitialState,
    pub delta_min_over_gamma: f64,
    pub delta_max_over_gamma: f64,
    pub delta_points: usize,
}

impl Default for QedSection {
    fn default() -> Self {
        Self {
            omega_ghz: 45.2,
            omega_a_ghz: None,
            gamma_hz: 2.5e3,
            g_over_gamma: None,
            derive_g_from_v: false,
            kappa_hz: None,
            derive_kappa_from_pipeline: false,
            pipeline_run_id: None,
            pipeline_d_over_l: None,
            omega_drive_over_gamma: 0.0,
            delta_over_gamma: 0.0,
            n_max: 10,
            rel_tol: 1e-10,
            t_end_us: 3.0,
            initial_state: InitialState::ZeroExcited,
            delta_min_over_gamma: -1200.0,
            delta_max_over_gamma: 1200.0,
            delta_points: 241,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    Modes,
    Mirror,
    Pipeline,
    QedDynamics,
    QedSpectrum,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::Modes => "modes",
            Stage::Mirror => "mirror",
            Stage::Pipeline => "pipeline",
            Stage::QedDynamics => "qed-dynamics",
            Stage::QedSpectrum => "qed-spectrum",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    /// Dotted key path, e.g. `geometry.d_over_L`.
    pub path: String,
    pub values: Vec<toml::Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    /// Stage run by the `sweep` subcommand.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stage: Option<Stage>,
    pub axes: Vec<Axis>,
    pub budget: usize,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            stage: None,
            axes: Vec::new(),
            budget: 10_000,
        }
    }
}

const KNOWN_KEYS: &[(&str, &[&str])] = &[
    ("", &["schema_version", "geometry", "solver", "mirror", "qed", "sweep"]),
    (
        "geometry",
        &["L_m", "h_over_L", "d_over_L", "l_pml_over_L", "eta", "profile", "mirror_model"],
    ),
    (
        "solver",
        &[
            "shift_ghz",
            "n_modes",
            "seed",
            "ppw",
            "pml_order",
            "pml_target_reflection",
            "max_pml_energy_fraction",
            "track_m",
            "track_k",
        ],
    ),
    (
        "mirror",
        &[
            "n_h",
            "k_h",
            "n_l",
            "k_l",
            "n_pairs",
            "n_sub",
            "lambda0_mm",
            "lambda_min_mm",
            "lambda_max_mm",
            "lambda_points",
            "kappa_mirror_hz",
        ],
    ),
    (
        "qed",
        &[
            "omega_ghz",
            "omega_a_ghz",
            "gamma_hz",
            "g_over_gamma",
            "derive_g_from_V",
            "kappa_hz",
            "derive_kappa_from_pipeline",
            "pipeline_run_id",
            "pipeline_d_over_L",
            "omega_drive_over_gamma",
            "delta_over_gamma",
            "n_max",
            "rel_tol",
            "t_end_us",
            "initial_state",
            "delta_min_over_gamma",
            "delta_max_over_gamma",
            "delta_points",
        ],
    ),
    ("sweep", &["stage", "axes", "budget"]),
];

fn known(section: &str) -> Option<&'static [&'static str]> {
    KNOWN_KEYS.iter().find(|(s, _)| *s == section).map(|(_, k)| *k)
}

/// Is `path` (dotted) a settable scalar key?
pub fn is_known_path(path: &str) -> bool {
    match path.split_once('.') {
        Some((section, key)) => {
            section != "sweep" && known(section).is_some_and(|k| k.contains(&key))
        }
        None => false,
    }
}

fn check_keys(table: &toml::Table) -> Result<(), CliError> {
    let top = known("").unwrap();
    for (key, value) in table {
        if !top.contains(&key.as_str()) {
            return Err(CliError::config(format!("unknown key `{key}`")));
        }
        let Some(section) = value.as_table() else {
            if key != "schema_version" {
                return Err(CliError::config(format!("`{key}` must be a section")));
            }
            continue;
        };
        let allowed = known(key).unwrap();
        for (inner, v) in section {
            if !allowed.contains(&inner.as_str()) {
                return Err(CliError::config(format!("unknown key `{key}.{inner}`")));
            }
            if key == "sweep" && inner == "axes" {
                for (i, axis) in v.as_array().into_iter().flatten().enumerate() {
                    for k in axis.as_table().into_iter().flat_map(|t| t.keys()) {
                        if k != "path" && k != "values" {
                            return Err(CliError::config(format!(
                                "unknown key `sweep.axes[{i}].{k}`"
                            )));
                        }
                    }
                }
            }
        }
    }
    Ok(())
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, CliError> {
        let table: toml::Table = toml::from_str(text)
            .map_err(|e| CliError::config(format!("malformed config: {}", e.message())))?;
        Self::from_table(table)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn from_table(table: toml::Table) -> Result<Self, CliError> {
        check_keys(&table)?;
        let cfg: RunConfig = table
            .try_into()
            .map_err(|e: toml::de::Error| CliError::config(e.message().to_string()))?;
        if cfg.schema_version != SCHEMA_VERSION {
            return Err(CliError::config(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                cfg.schema_version
            )));
        }
        Ok(cfg)
    }

    pub fn to_table(&self) -> toml::Table {
        toml::Table::try_from(self).expect("config serializes to a table")
    }

    /// Canonical text of the fully resolved configuration.
    pub fn canonical(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Copy with the dotted key `path` set to `value`.
    pub fn with_value(&self, path: &str, value: &toml::Value) -> Result<Self, CliError> {
        if !is_known_path(path) {
            return Err(CliError::config(format!("unknown sweep path `{path}`")));
        }
        let (section, key) = path.split_once('.').unwrap();
        let mut table = self.to_table();
        let entry = table
            .entry(section.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        entry
            .as_table_mut()
            .unwrap()
            .insert(key.to_string(), value.clone());
        Self::from_table(table).map_err(|e| CliError::config(format!("`{path}` = {value}: {}", e.message)))
    }

    pub fn geometry(&self) -> Result<&GeometrySection, CliError> {
        self.geometry.as_ref().ok_or_else(|| missing("geometry"))
    }

    pub fn solver(&self) -> Result<&SolverSection, CliError> {
        self.solver.as_ref().ok_or_else(|| missing("solver"))
    }

    pub fn mirror(&self) -> Result<&MirrorSection, CliError> {
        self.mirror.as_ref().ok_or_else(|| missing("mirror"))
    }

    pub fn qed(&self) -> Result<&QedSection, CliError> {
        self.qed.as_ref().ok_or_else(|| missing("qed"))
    }
}

fn missing(section: &str) -> CliError {
    CliError::config(format!("missing section [{section}]"))
}

fn positive(path: &str, v: f64) -> Result<(), CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(CliError::config(format!("`{path}` must be positive, got {v}")))
    }
}

impl MirrorSection {
    pub fn validate(&self) -> Result<(), CliError> {
        // a trial stack exercises every index constraint
        quarter_wave_stack(self.n_h, self.k_h, self.n_l, self.k_l, 1.0, self.n_pairs, self.n_sub)
            .map_err(|e| CliError::config(format!("[mirror]: {e}")))?;
        if self.n_pairs == 0 {
            return Err(CliError::config("`mirror.n_pairs` must be at least 1"));
        }
        for (name, v) in [
            ("mirror.lambda0_mm", self.lambda0_mm),
            ("mirror.lambda_min_mm", self.lambda_min_mm),
            ("mirror.lambda_max_mm", self.lambda_max_mm),
        ] {
            if let Some(v) = v {
                positive(name, v)?;
            }
        }
        if let Some(k) = self.kappa_mirror_hz {
            if !(k >= 0.0 && k.is_finite()) {
                return Err(CliError::config("`mirror.kappa_mirror_hz` must be non-negative"));
            }
        }
        if self.lambda_points == 0 {
            return Err(CliError::config("`mirror.lambda_points` must be at least 1"));
        }
        if self.lambda_points > 1 {
            match (self.lambda_min_mm, self.lambda_max_mm) {
                (Some(a), Some(b)) if b > a => {}
                _ => {
                    return Err(CliError::config(
                        "`mirror.lambda_points` > 1 needs lambda_min_mm < lambda_max_mm",
                    ))
                }
            }
        }
        Ok(())
    }

    pub fn stack(&self, lambda0: f64) -> Result<StackSpec, CliError> {
        Ok(quarter_wave_stack(
            self.n_h,
            self.k_h,
            self.n_l,
            self.k_l,
            lambda0,
            self.n_pairs,
            self.n_sub,
        )?)
    }

    /// Wavelengths (m) of the reflectance sweep.
    pub fn wavelengths(&self) -> Result<Vec<f64>, CliError> {
        if self.lambda_points == 1 {
            let l = self
                .lambda0_mm
                .or(self.lambda_min_mm)
                .ok_or_else(|| CliError::config("`mirror.lambda0_mm` is required"))?;
            return Ok(vec![l * 1e-3]);
        }
        let (a, b) = (self.lambda_min_mm.unwrap(), self.lambda_max_mm.unwrap());
        let n = self.lambda_points;
        Ok((0..n)
            .map(|i| 1e-3 * (a + (b - a) * i as f64 / (n - 1) as f64))
            .collect())
    }
}

/// Geometry, grid and solver settings for one FDFD run.
#[derive(Debug, Clone)]
pub struct ModeSetup {
    pub params: CavityParams,
    pub grid: GridSpec,
    pub settings: SolverSettings,
    pub shift_hz: f64,
    pub track: (usize, usize),
}

impl RunConfig {
    pub fn mode_setup(&self) -> Result<ModeSetup, CliError> {
        let g = self.geometry()?;
        let s = self.solver()?;
        positive("geometry.L_m", g.length_m)?;
        positive("solver.shift_ghz", s.shift_ghz)?;
        positive("solver.ppw", s.ppw)?;
        if s.n_modes == 0 {
            return Err(CliError::config("`solver.n_modes` must be at least 1"));
        }
        if !(s.max_pml_energy_fraction > 0.0 && s.max_pml_energy_fraction <= 1.0) {
            return Err(CliError::config(
                "`solver.max_pml_energy_fraction` must lie in (0, 1]",
            ));
        }
        let l = g.length_m;
        let mirror = match g.mirror_model {
            MirrorModelKind::IdealPec => MirrorModel::IdealPec,
            MirrorModelKind::DielectricStack => {
                let m = self.mirror()?;
                m.validate()?;
                let lambda0 = m.lambda0_mm.ok_or_else(|| {
                    CliError::config("`mirror.lambda0_mm` is required for a dielectric_stack geometry")
                })?;
                MirrorModel::DielectricStack(m.stack(lambda0 * 1e-3)?)
            }
        };
        let params = CavityParams {
            length: l,
            min_gap: g.h_over_l * l,
            wing_width: g.d_over_l * l,
            pml_width: g.l_pml_over_l * l,
            eta: g.eta,
            mirror,
            profile: match g.profile {
                Profile::ConfocalArc => MirrorProfile::ConfocalArc,
                Profile::Plane => MirrorProfile::Plane,
            },
        };
        params.validate()?;
        let shift_hz = s.shift_ghz * 1e9;
        let grid = GridSpec::for_cavity(&params, shift_hz, s.ppw);
        grid.validate()?;
        let settings = SolverSettings {
            n_modes: s.n_modes,
            seed: s.seed,
            pml_order: s.pml_order,
            pml_target_reflection: s.pml_target_reflection,
            max_pml_energy_fraction: s.max_pml_energy_fraction,
            ..Default::default()
        };
        Ok(ModeSetup {
            params,
            grid,
            settings,
            shift_hz,
            track: (s.track_m, s.track_k),
        })
    }
}

impl QedSection {
    pub fn validate(&self) -> Result<(), CliError> {
        positive("qed.omega_ghz", self.omega_ghz)?;
        positive("qed.gamma_hz", self.gamma_hz)?;
        if let Some(w) = self.omega_a_ghz {
            positive("qed.omega_a_ghz", w)?;
        }
        match (self.g_over_gamma.is_some(), self.derive_g_from_v) {
            (true, true) => {
                return Err(CliError::config(
                    "`qed.g_over_gamma` and `qed.derive_g_from_V` are mutually exclusive",
                ))
            }
            (false, false) => {
                return Err(CliError::config(
                    "set `qed.g_over_gamma` or `qed.derive_g_from_V = true`",
                ))
            }
            _ => {}
        }
        match (self.kappa_hz.is_some(), self.derive_kappa_from_pipeline) {
            (true, true) => {
                return Err(CliError::config(
                    "`qed.kappa_hz` and `qed.derive_kappa_from_pipeline` are mutually exclusive",
                ))
            }
            (false, false) => {
                return Err(CliError::config(
                    "set `qed.kappa_hz` or `qed.derive_kappa_from_pipeline = true`",
                ))
            }
            _ => {}
        }
        if (self.derive_g_from_v || self.derive_kappa_from_pipeline)
            && (self.pipeline_run_id.is_none() || self.pipeline_d_over_l.is_none())
        {
            return Err(CliError::config(
                "derived couplings need `qed.pipeline_run_id` and `qed.pipeline_d_over_L`",
            ));
        }
        if let Some(g) = self.g_over_gamma {
            if !(g >= 0.0 && g.is_finite()) {
                return Err(CliError::config("`qed.g_over_gamma` must be non-negative"));
            }
        }
        if let Some(k) = self.kappa_hz {
            if !(k >= 0.0 && k.is_finite()) {
                return Err(CliError::config("`qed.kappa_hz` must be non-negative"));
            }
        }
        if !(self.omega_drive_over_gamma >= 0.0) {
            return Err(CliError::config("`qed.omega_drive_over_gamma` must be non-negative"));
        }
        if self.n_max < 2 {
            return Err(CliError::config("`qed.n_max` must be at least 2"));
        }
        if !(1e-12..=1e-4).contains(&self.rel_tol) {
            return Err(CliError::config("`qed.rel_tol` must lie in [1e-12, 1e-4]"));
        }
        positive("qed.t_end_us", self.t_end_us)?;
        if self.delta_points == 0 {
            return Err(CliError::config("`qed.delta_points` must be at least 1"));
        }
        if self.delta_points > 1 && !(self.delta_max_over_gamma > self.delta_min_over_gamma) {
            return Err(CliError::config(
                "`qed.delta_max_over_gamma` must exceed `qed.delta_min_over_gamma`",
            ));
        }
        Ok(())
    }

    pub fn gamma(&self) -> f64 {
        angular(self.gamma_hz)
    }

    pub fn omega_sigma(&self) -> f64 {
        angular(self.omega_ghz * 1e9)
    }

    pub fn omega_a(&self) -> f64 {
        angular(self.omega_a_ghz.unwrap_or(self.omega_ghz) * 1e9)
    }

    /// Drive detunings in units of gamma.
    pub fn delta_grid(&self) -> Vec<f64> {
        let n = self.delta_points;
        if n == 1 {
            return vec![self.delta_min_over_gamma];
        }
        let (a, b) = (self.delta_min_over_gamma, self.delta_max_over_gamma);
        (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "schema_version = 1\n[geometry]\nd_over_L = 0.2\n[solver]\n";

    #[test]
    fn defaults_fill_sections() {
        let c = RunConfig::from_toml_str(MINIMAL).unwrap();
        assert_eq!(c.geometry.as_ref().unwrap().d_over_l, 0.2);
        assert_eq!(c.solver.as_ref().unwrap().n_modes, 6);
        assert!(c.mirror.is_none());
        let setup = c.mode_setup().unwrap();
        assert!((setup.params.wing_width - 0.002).abs() < 1e-15);
    }

    #[test]
    fn unknown_key_is_named() {
        let err = RunConfig::from_toml_str("schema_version = 1\n[solver]\nshift_gz = 4\n").unwrap_err();
        assert!(err.message.contains("solver.shift_gz"), "{}", err.message);
        let err = RunConfig::from_toml_str("schema_version = 1\n[solvr]\n").unwrap_err();
        assert!(err.message.contains("solvr"));
    }

    #[test]
    fn wrong_schema_version() {
        assert!(RunConfig::from_toml_str("schema_version = 7\n").is_err());
        assert!(RunConfig::from_toml_str("[geometry]\n").is_err());
    }

    #[test]
    fn canonical_text_round_trips() {
        let c = RunConfig::from_toml_str(MINIMAL).unwrap();
        let again = RunConfig::from_toml_str(&c.canonical()).unwrap();
        assert_eq!(c, again);
        assert_eq!(c.canonical(), again.canonical());
    }

    #[test]
    fn set_value_by_path() {
        let c = RunConfig::from_toml_str(MINIMAL).unwrap();
        let d = c.with_value("geometry.d_over_L", &toml::Value::Integer(0)).unwrap();
        assert_eq!(d.geometry.unwrap().d_over_l, 0.0);
        let m = c.with_value("mirror.n_h", &toml::Value::Float(5.0)).unwrap();
        assert_eq!(m.mirror.unwrap().n_h, 5.0);
        assert!(c.with_value("geometry.width", &toml::Value::Float(1.0)).is_err());
        assert!(c.with_value("sweep.budget", &toml::Value::Integer(1)).is_err());
    }

    #[test]
    fn qed_sources_are_exclusive() {
        let base = QedSection {
            g_over_gamma: Some(832.0),
            kappa_hz: Some(4.5e5),
            ..Default::default()
        };
        assert!(base.validate().is_ok());
        let both = QedSection {
            derive_g_from_v: true,
            ..base.clone()
        };
        assert!(both.validate().is_err());
        let none = QedSection {
            kappa_hz: None,
            ..base
        };
        assert!(none.validate().is_err());
    }
}
