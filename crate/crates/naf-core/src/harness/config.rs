//! Run configuration: a TOML file with [model], [method], [run] and
//! [observables] sections, strictly validated (unknown keys are errors and
//! are listed by name).

use std::collections::BTreeSet;
use std::path::PathBuf;

use nalgebra::DMatrix;

use crate::dynamics::{ElectronicStepping, Family, MethodKind, MethodSpec};
use crate::estimators::{ObservableKind, ObservableRequest};
use crate::models::{catalog, ModelDefinition, Representation};
use crate::sampling::gamma_default;
use crate::{NafError, Result};

/// Which engine executes the run.
#[derive(Debug, Clone)]
pub enum Engine {
    Trajectory(MethodSpec),
    /// numerically exact grid propagation (1-D models only)
    ExactGrid,
}

#[derive(Debug, Clone)]
pub struct MomentumSpec {
    pub damping: f64,
    pub grid: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct ScatteringSpec {
    /// |R| below this counts as still interacting at the final time
    pub free_halfwidth: f64,
}

/// Fully resolved run description.
#[derive(Debug, Clone)]
pub struct RunSpec {
    pub model: ModelDefinition,
    pub engine: Engine,
    pub method_name: String,
    pub dt: f64,
    pub t_final: f64,
    pub record_every: usize,
    pub n_traj: usize,
    pub seed: u64,
    pub requests: Vec<ObservableRequest>,
    pub momentum: Option<MomentumSpec>,
    pub scattering: Option<ScatteringSpec>,
    pub output: Option<PathBuf>,
    /// raw configuration text, echoed into reports and output headers
    pub echo: String,
}

impl RunSpec {
    pub fn n_steps(&self) -> usize {
        (self.t_final / self.dt - 1e-9).ceil().max(0.0) as usize
    }

    /// Output-grid times: every record_every-th step, always including t = 0.
    pub fn record_times(&self) -> Vec<f64> {
        let n = self.n_steps();
        (0..=n)
            .step_by(self.record_every)
            .map(|k| k as f64 * self.dt)
            .collect()
    }
}

/// Strict section reader: every get marks its key, leftovers are reported.
struct Section<'a> {
    name: &'static str,
    table: Option<&'a toml::Table>,
    used: BTreeSet<String>,
}

impl<'a> Section<'a> {
    fn new(root: &'a toml::Table, name: &'static str, used_root: &mut BTreeSet<String>) -> Result<Self> {
        let table = match root.get(name) {
            Some(toml::Value::Table(t)) => {
                used_root.insert(name.to_string());
                Some(t)
            }
            Some(_) => {
                return Err(NafError::config(format!("[{name}] must be a table")));
            }
            None => None,
        };
        Ok(Section { name, table, used: BTreeSet::new() })
    }

    fn get(&mut self, key: &str) -> Option<&'a toml::Value> {
        let v = self.table.and_then(|t| t.get(key));
        if v.is_some() {
            self.used.insert(key.to_string());
        }
        v
    }

    fn f64(&mut self, key: &str) -> Result<Option<f64>> {
        match self.get(key) {
            None => Ok(None),
            Some(toml::Value::Float(x)) => Ok(Some(*x)),
            Some(toml::Value::Integer(x)) => Ok(Some(*x as f64)),
            Some(_) => Err(self.type_err(key, "a number")),
        }
    }

    fn usize(&mut self, key: &str) -> Result<Option<usize>> {
        match self.get(key) {
            None => Ok(None),
            Some(toml::Value::Integer(x)) if *x >= 0 => Ok(Some(*x as usize)),
            Some(_) => Err(self.type_err(key, "a non-negative integer")),
        }
    }

    fn u64(&mut self, key: &str) -> Result<Option<u64>> {
        match self.get(key) {
            None => Ok(None),
            Some(toml::Value::Integer(x)) if *x >= 0 => Ok(Some(*x as u64)),
            Some(_) => Err(self.type_err(key, "a non-negative integer")),
        }
    }

    fn bool(&mut self, key: &str) -> Result<Option<bool>> {
        match self.get(key) {
            None => Ok(None),
            Some(toml::Value::Boolean(x)) => Ok(Some(*x)),
            Some(_) => Err(self.type_err(key, "a boolean")),
        }
    }

    fn str(&mut self, key: &str) -> Result<Option<&'a str>> {
        match self.get(key) {
            None => Ok(None),
            Some(toml::Value::String(s)) => Ok(Some(s)),
            Some(_) => Err(self.type_err(key, "a string")),
        }
    }

    fn f64_array(&mut self, key: &str) -> Result<Option<Vec<f64>>> {
        match self.get(key) {
            None => Ok(None),
            Some(toml::Value::Array(items)) => {
                let mut out = Vec::with_capacity(items.len());
                for item in items {
                    match item {
                        toml::Value::Float(x) => out.push(*x),
                        toml::Value::Integer(x) => out.push(*x as f64),
                        _ => return Err(self.type_err(key, "an array of numbers")),
                    }
                }
                Ok(Some(out))
            }
            Some(_) => Err(self.type_err(key, "an array of numbers")),
        }
    }

    fn usize_array(&mut self, key: &str) -> Result<Option<Vec<usize>>> {
        match self.get(key) {
            None => Ok(None),
            Some(toml::Value::Array(items)) => {
                let mut out = Vec::with_capacity(items.len());
                for item in items {
                    match item {
                        toml::Value::Integer(x) if *x >= 0 => out.push(*x as usize),
                        _ => return Err(self.type_err(key, "an array of state indices")),
                    }
                }
                Ok(Some(out))
            }
            Some(_) => Err(self.type_err(key, "an array of state indices")),
        }
    }

    fn pair_array(&mut self, key: &str) -> Result<Option<Vec<(usize, usize)>>> {
        match self.get(key) {
            None => Ok(None),
            Some(toml::Value::Array(items)) => {
                let mut out = Vec::with_capacity(items.len());
                for item in items {
                    let pair = match item {
                        toml::Value::Array(p) if p.len() == 2 => {
                            match (&p[0], &p[1]) {
                                (toml::Value::Integer(a), toml::Value::Integer(b))
                                    if *a >= 0 && *b >= 0 =>
                                {
                                    (*a as usize, *b as usize)
                                }
                                _ => return Err(self.type_err(key, "index pairs")),
                            }
                        }
                        _ => return Err(self.type_err(key, "index pairs")),
                    };
                    out.push(pair);
                }
                Ok(Some(out))
            }
            Some(_) => Err(self.type_err(key, "an array of index pairs")),
        }
    }

    fn type_err(&self, key: &str, expect: &str) -> NafError {
        NafError::config(format!("{}.{key} must be {expect}", self.name))
    }

    fn finish(&self, unknown: &mut Vec<String>) {
        if let Some(t) = self.table {
            for key in t.keys() {
                if !self.used.contains(key) {
                    unknown.push(format!("{}.{key}", self.name));
                }
            }
        }
    }
}

fn parse_representation(s: &str) -> Result<Representation> {
    match s {
        "diabatic" => Ok(Representation::Diabatic),
        "adiabatic" => Ok(Representation::Adiabatic),
        other => Err(NafError::config(format!(
            "unknown representation {other:?} (expected \"diabatic\" or \"adiabatic\")"
        ))),
    }
}

fn build_model(section: &mut Section) -> Result<ModelDefinition> {
    let name = section
        .str("name")?
        .ok_or_else(|| NafError::config("model.name is required"))?;
    let mut model = match name {
        "tully_sac" | "tully_dac" | "tully_ecr" | "asym_sac" => {
            let p0 = section
                .f64("p0")?
                .ok_or_else(|| NafError::config(format!("model {name} needs p0")))?;
            match name {
                "tully_sac" => catalog::tully_sac(p0),
                "tully_dac" => catalog::tully_dac(p0),
                "tully_ecr" => catalog::tully_ecr(p0),
                _ => catalog::asym_sac(p0),
            }
        }
        "photodissociation" => {
            let variant = section.usize("variant")?.unwrap_or(1);
            catalog::photodissociation(variant)?
        }
        "spin_boson" => {
            let d = catalog::SpinBosonParams::default();
            catalog::spin_boson(catalog::SpinBosonParams {
                eps: section.f64("eps")?.unwrap_or(d.eps),
                delta: section.f64("delta")?.unwrap_or(d.delta),
                alpha: section.f64("alpha")?.unwrap_or(d.alpha),
                omega_c: section.f64("omega_c")?.unwrap_or(d.omega_c),
                beta: section.f64("beta")?.unwrap_or(d.beta),
                n_b: section.usize("n_b")?.unwrap_or(d.n_b),
            })?
        }
        "fmo7" => {
            let n_b = section.usize("modes_per_site")?.unwrap_or(60);
            let temp = section.f64("temperature_k")?.unwrap_or(300.0);
            catalog::fmo7(n_b, temp)?
        }
        "singlet_fission" => {
            let n_b = section.usize("modes_per_state")?.unwrap_or(50);
            let temp = section.f64("temperature_k")?.unwrap_or(300.0);
            catalog::singlet_fission(n_b, temp)?
        }
        "cavity" => {
            let levels = section.usize("levels")?.unwrap_or(2);
            let n_modes = section.usize("n_modes")?.unwrap_or(400);
            catalog::cavity(levels, n_modes)?
        }
        "lvcm_pyrazine3" => catalog::lvcm_pyrazine3(),
        "lvcm_pyrazine24" => catalog::lvcm_pyrazine24(),
        "lvcm_crco5" => catalog::lvcm_crco5(),
        "linear_sweep" => {
            let need = |s: &mut Section, k: &str| {
                s.f64(k)?.ok_or_else(|| {
                    NafError::config(format!("model linear_sweep needs {k}"))
                })
            };
            let slope = need(section, "slope")?;
            let delta = need(section, "delta")?;
            let mass = need(section, "mass")?;
            let r_start = need(section, "r_start")?;
            let velocity = need(section, "velocity")?;
            catalog::linear_sweep(slope, delta, mass, r_start, velocity)
        }
        "harmonic_diag" => {
            let e0 = section
                .f64_array("e0")?
                .ok_or_else(|| NafError::config("model harmonic_diag needs e0"))?;
            let omega = section.f64("omega")?.unwrap_or(1.0);
            let mass = section.f64("mass")?.unwrap_or(1.0);
            let r0 = section.f64("r0")?.unwrap_or(0.0);
            let p0 = section.f64("p0")?.unwrap_or(0.0);
            catalog::harmonic_diag(e0, omega, mass, r0, p0)
        }
        "constant_v" => {
            let rows = match section.get("v") {
                Some(toml::Value::Array(rows)) => rows.clone(),
                _ => return Err(NafError::config("model constant_v needs v (array of rows)")),
            };
            let f = rows.len();
            let mut v = DMatrix::zeros(f, f);
            for (i, row) in rows.iter().enumerate() {
                let items = match row {
                    toml::Value::Array(items) if items.len() == f => items,
                    _ => {
                        return Err(NafError::config("constant_v rows must be square"));
                    }
                };
                for (j, item) in items.iter().enumerate() {
                    v[(i, j)] = match item {
                        toml::Value::Float(x) => *x,
                        toml::Value::Integer(x) => *x as f64,
                        _ => return Err(NafError::config("constant_v entries must be numbers")),
                    };
                }
            }
            let occ = section.usize("occupation")?.unwrap_or(0);
            catalog::constant_v(v, occ)
        }
        other => {
            return Err(NafError::config(format!("unknown model {other:?}")));
        }
    };
    // optional overrides of the initial electronic occupation
    if let Some(occ) = section.usize("occupation")? {
        if name != "constant_v" {
            if occ >= model.f {
                return Err(NafError::config(format!(
                    "occupation {occ} out of range for {} states",
                    model.f
                )));
            }
            model.init.occupation = occ;
        }
    }
    if let Some(rep) = section.str("occupation_rep")? {
        model.init.occupation_rep = parse_representation(rep)?;
    }
    Ok(model)
}

fn build_engine(
    section: &mut Section,
    model: &ModelDefinition,
) -> Result<(Engine, String)> {
    let name = section
        .str("name")?
        .ok_or_else(|| NafError::config("method.name is required"))?
        .to_string();
    if name == "exact_grid" {
        if !model.is_1d() {
            return Err(NafError::config(format!(
                "exact_grid needs a 1-D model with a reference grid; {} has {} degrees of freedom",
                model.label, model.n
            )));
        }
        return Ok((Engine::ExactGrid, name));
    }
    let kind = MethodKind::parse(&name).ok_or_else(|| {
        NafError::config(format!(
            "unknown method {name:?} (expected one of naf, naf_s, naf_ehrenfest, naf_gdtwa, \
             gdtwa, mean_field_cps, ehrenfest, fssh, fs_naf, exact_grid)"
        ))
    })?;
    let mut spec = MethodSpec::new(kind, model.f);
    if let Some(gamma) = section.f64("gamma")? {
        let fd = model.f as f64;
        if !gamma.is_finite() || 1.0 + fd * gamma <= 0.0 {
            return Err(NafError::config(format!(
                "gamma = {gamma} is invalid: 1 + F*gamma must stay positive (F = {})",
                model.f
            )));
        }
        spec.gamma = gamma;
    } else {
        spec.gamma = gamma_default(model.f);
    }
    if let Some(stepping) = section.str("stepping")? {
        spec.stepping = match stepping {
            "adiabatic_direct" => ElectronicStepping::AdiabaticDirect,
            "diabatic_transform" => ElectronicStepping::DiabaticTransform,
            other => {
                return Err(NafError::config(format!(
                    "unknown stepping {other:?} (expected \"adiabatic_direct\" or \
                     \"diabatic_transform\")"
                )));
            }
        };
    }
    if let Some(rep) = section.str("representation")? {
        spec.representation = parse_representation(rep)?;
    }
    let mean_field = matches!(kind.family(), Family::MeanField);
    match section.bool("hard_wall")? {
        Some(true) => {
            if !mean_field {
                return Err(NafError::config(format!(
                    "hard_wall is not compatible with {name}: the reflecting wall is a \
                     mean-field device, while {name} pins trajectories to one surface and \
                     rescales momenta, so a wall reflection would break its energy bookkeeping"
                )));
            }
            if !model.hard_wall_eligible {
                return Err(NafError::config(format!(
                    "model {} does not define a hard wall",
                    model.label
                )));
            }
            spec.hard_wall = true;
        }
        Some(false) => spec.hard_wall = false,
        None => spec.hard_wall = mean_field && model.hard_wall_eligible,
    }
    Ok((Engine::Trajectory(spec), name))
}

fn build_observables(
    section: &mut Section,
    model: &ModelDefinition,
    method_name: &str,
) -> Result<(Vec<ObservableRequest>, Option<MomentumSpec>, Option<ScatteringSpec>)> {
    let rep = match section.str("representation")? {
        Some(s) => parse_representation(s)?,
        None => model.init.occupation_rep,
    };
    let mut requests = Vec::new();
    let population = section
        .usize_array("population")?
        .unwrap_or_else(|| (0..model.f).collect());
    for state in population {
        requests.push(ObservableRequest {
            kind: ObservableKind::Population { state },
            representation: rep,
        });
    }
    if section.bool("population_difference")?.unwrap_or(false) {
        requests.push(ObservableRequest {
            kind: ObservableKind::PopulationDifference,
            representation: rep,
        });
    }
    for (row, col) in section.pair_array("coherence")?.unwrap_or_default() {
        requests.push(ObservableRequest {
            kind: ObservableKind::Coherence { row, col },
            representation: rep,
        });
    }
    for dof in section.usize_array("mean_r")?.unwrap_or_default() {
        requests.push(ObservableRequest { kind: ObservableKind::MeanR { dof }, representation: rep });
    }
    for dof in section.usize_array("mean_p")?.unwrap_or_default() {
        requests.push(ObservableRequest { kind: ObservableKind::MeanP { dof }, representation: rep });
    }
    for req in &requests {
        req.validate(model)?;
    }

    let momentum = if section.bool("momentum_distribution")?.unwrap_or(false) {
        if !model.is_1d() {
            return Err(NafError::config(
                "momentum_distribution needs a 1-D model",
            ));
        }
        let damping = match section.f64("damping")? {
            Some(a) if a > 0.0 => a,
            Some(a) => {
                return Err(NafError::config(format!("damping must be positive, got {a}")));
            }
            None => match model.label.as_str() {
                l if l.starts_with("photodissociation") => 0.05,
                "tully_sac" | "tully_dac" | "tully_ecr" | "asym_sac" => 0.01,
                other => {
                    return Err(NafError::config(format!(
                        "no default damping for model {other}; set observables.damping"
                    )));
                }
            },
        };
        let grid = match section.f64_array("momentum_grid")? {
            Some(spec3) if spec3.len() == 3 => {
                let n = spec3[2] as usize;
                if n < 2 || spec3[1] <= spec3[0] {
                    return Err(NafError::config(
                        "momentum_grid must be [min, max, points] with max > min, points >= 2",
                    ));
                }
                let h = (spec3[1] - spec3[0]) / (n - 1) as f64;
                (0..n).map(|i| spec3[0] + h * i as f64).collect()
            }
            Some(_) => {
                return Err(NafError::config(
                    "momentum_grid must be [min, max, points]",
                ));
            }
            None => {
                let h = 100.0 / 1000.0;
                (0..=1000).map(|i| -50.0 + h * i as f64).collect()
            }
        };
        Some(MomentumSpec { damping, grid })
    } else {
        section.f64("damping")?;
        section.f64_array("momentum_grid")?;
        None
    };

    let scattering = if section.bool("scattering")?.unwrap_or(false) {
        if !model.is_1d() {
            return Err(NafError::config("scattering channels need a 1-D model"));
        }
        let free_halfwidth = section.f64("free_halfwidth")?.unwrap_or(5.0);
        Some(ScatteringSpec { free_halfwidth })
    } else {
        section.f64("free_halfwidth")?;
        None
    };
    Ok((requests, momentum, scattering))
}

/// Parse and validate a complete run configuration.
pub fn load_run_spec(text: &str) -> Result<RunSpec> {
    let root: toml::Table = text
        .parse()
        .map_err(|e| NafError::config(format!("TOML parse error: {e}")))?;
    let mut used_root = BTreeSet::new();
    let mut model_sec = Section::new(&root, "model", &mut used_root)?;
    let mut method_sec = Section::new(&root, "method", &mut used_root)?;
    let mut run_sec = Section::new(&root, "run", &mut used_root)?;
    let mut obs_sec = Section::new(&root, "observables", &mut used_root)?;
    if model_sec.table.is_none() {
        return Err(NafError::config("missing [model] section"));
    }
    if method_sec.table.is_none() {
        return Err(NafError::config("missing [method] section"));
    }
    if run_sec.table.is_none() {
        return Err(NafError::config("missing [run] section"));
    }

    let model = build_model(&mut model_sec)?;
    let (engine, method_name) = build_engine(&mut method_sec, &model)?;
    let (requests, momentum, scattering) =
        build_observables(&mut obs_sec, &model, &method_name)?;

    let dt = match run_sec.f64("dt")? {
        Some(dt) if dt > 0.0 => dt,
        Some(dt) => return Err(NafError::config(format!("dt must be positive, got {dt}"))),
        None => model.defaults.dt,
    };
    let t_final = match run_sec.f64("t_final")? {
        Some(t) if t > 0.0 => t,
        Some(t) => {
            return Err(NafError::config(format!("t_final must be positive, got {t}")));
        }
        None => return Err(NafError::config("run.t_final is required")),
    };
    let record_every = match run_sec.usize("record_every")? {
        Some(0) => {
            return Err(NafError::config("record_every must be at least 1"));
        }
        Some(k) => k,
        None => 1,
    };
    let n_traj = match run_sec.usize("n_traj")? {
        Some(0) => return Err(NafError::config("n_traj must be at least 1")),
        Some(n) => n,
        None => model.defaults.n_traj,
    };
    let seed = run_sec.u64("seed")?.unwrap_or(0);
    let output = run_sec.str("output")?.map(PathBuf::from);

    let mut unknown = Vec::new();
    for key in root.keys() {
        if !used_root.contains(key) {
            unknown.push(key.clone());
        }
    }
    model_sec.finish(&mut unknown);
    method_sec.finish(&mut unknown);
    run_sec.finish(&mut unknown);
    obs_sec.finish(&mut unknown);
    if !unknown.is_empty() {
        return Err(NafError::config(format!(
            "unknown configuration keys: {}",
            unknown.join(", ")
        )));
    }

    Ok(RunSpec {
        model,
        engine,
        method_name,
        dt,
        t_final,
        record_every,
        n_traj,
        seed,
        requests,
        momentum,
        scattering,
        output,
        echo: text.to_string(),
    })
}
