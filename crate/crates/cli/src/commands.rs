use std::collections::BTreeMap;
use std::path::PathBuf;

use km_core::cr3bp::{self, hamiltonian, PhaseState, SystemParams};
use km_core::equilibria::first_critical_value;
use km_core::format::{csv_row, ser_f64, ser_vec};
use km_core::hill::{classify_components_with, GridSpec, HillComponent};
use km_core::homology::{
    corollary_table, group_homology, loop_space_o2_table, loop_space_so2_table, parse_bo2, shipped_bo2,
    AbelianGroupDescriptor, Character, Convention, FiniteGroup, HomologyPath, TableOptions,
};
use km_core::moser::{
    cr3bp_chart_point, defining_function, fiber_convexity_check, starshape_check, stereographic_lift,
    vf_identity_residual, ChartPoint, ConvexityOptions, SphereCotangent, StarshapeOptions,
};
use km_core::par::Execution;
use km_core::symmetry::{shoot_symmetric_orbit_with, verify_observation_with, Sense, ShootingOptions, SymmetricOrbit};
use serde::Serialize;

use crate::{CliError, RunConfig, RunOutput};

/// Largest accepted `X_K = |q| X_H` residual.
const VF_THRESHOLD: f64 = 1e-10;
/// Largest accepted twisted-reflection residual.
const OBSERVATION_THRESHOLD: f64 = 1e-6;

struct Params<'a>(&'a BTreeMap<String, String>);

impl Params<'_> {
    fn raw(&self, key: &str) -> Result<&str, CliError> {
        self.0
            .get(key)
            .map(String::as_str)
            .ok_or_else(|| CliError::Validation(format!("missing --{key}")))
    }

    fn opt(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(String::as_str).filter(|s| !s.is_empty())
    }

    fn parse<T: std::str::FromStr>(&self, key: &str) -> Result<T, CliError>
    where
        T::Err: std::fmt::Display,
    {
        let s = self.raw(key)?;
        s.trim()
            .parse()
            .map_err(|e| CliError::Validation(format!("--{key} {s}: {e}")))
    }

    fn f64(&self, key: &str) -> Result<f64, CliError> {
        let x: f64 = self.parse(key)?;
        if !x.is_finite() {
            return Err(CliError::Validation(format!("--{key} must be finite")));
        }
        Ok(x)
    }

    fn usize(&self, key: &str) -> Result<usize, CliError> {
        self.parse(key)
    }

    fn flag(&self, key: &str) -> Result<bool, CliError> {
        match self.opt(key) {
            None | Some("false") | Some("0") | Some("no") => Ok(false),
            Some("true") | Some("1") | Some("yes") => Ok(true),
            Some(s) => Err(CliError::Validation(format!("--{key}: expected true or false, got '{s}'"))),
        }
    }

    fn list(&self, key: &str) -> Result<Vec<f64>, CliError> {
        let s = self.raw(key)?;
        s.split(',')
            .map(|x| {
                x.trim()
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| CliError::Validation(format!("--{key}: '{x}' is not a finite number")))
            })
            .collect()
    }

    fn sign(&self, key: &str) -> Result<i64, CliError> {
        match self.raw(key)?.trim() {
            "1" | "+1" | "+" | "plus" => Ok(1),
            "-1" | "-" | "minus" => Ok(-1),
            s => Err(CliError::Validation(format!("--{key}: expected +1 or -1, got '{s}'"))),
        }
    }

    fn sense(&self) -> Result<Sense, CliError> {
        match self.raw("sense")? {
            "retrograde" => Ok(Sense::Retrograde),
            "prograde" => Ok(Sense::Prograde),
            s => Err(CliError::Validation(format!("--sense: expected retrograde or prograde, got '{s}'"))),
        }
    }

    fn path(&self) -> Result<HomologyPath, CliError> {
        match self.raw("path")? {
            "bar" => Ok(HomologyPath::Bar),
            "periodic" => Ok(HomologyPath::Periodic),
            s => Err(CliError::Validation(format!("--path: expected bar or periodic, got '{s}'"))),
        }
    }

    fn convention(&self) -> Result<Convention, CliError> {
        Ok(Convention {
            tau: self.parse("tau-rule")?,
            refl: self.parse("refl-rule")?,
        })
    }

    fn planar(&self) -> Result<SystemParams, CliError> {
        Ok(SystemParams::planar(self.f64("mu")?)?)
    }

    fn state(&self, params: &SystemParams) -> Result<PhaseState, CliError> {
        let q = self.list("q")?;
        let p = self.list("p")?;
        if q.len() != params.n() || p.len() != params.n() {
            return Err(CliError::Validation(format!(
                "--q and --p need {} components, got {} and {}",
                params.n(),
                q.len(),
                p.len()
            )));
        }
        Ok(PhaseState::new(q, p))
    }
}

fn json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable output");
    s.push('\n');
    s
}

fn plain(primary: String) -> RunOutput {
    RunOutput {
        primary,
        files: Vec::new(),
        pass: None,
    }
}

pub fn dispatch(config: &RunConfig, exec: Execution) -> Result<RunOutput, CliError> {
    let p = Params(&config.params);
    let format = config.format();
    let path: Vec<&str> = config.command.iter().map(String::as_str).collect();
    match path.as_slice() {
        ["lagrange"] => lagrange(&p, format),
        ["hill"] => hill(&p, format, exec),
        ["orbit"] => orbit(&p, format),
        ["moser", "check-vf"] => check_vf(&p),
        ["moser", "embed"] => embed(&p),
        ["symmetric"] => symmetric(&p, format),
        ["observe"] => observe(&p),
        ["starshape"] => starshape(&p, exec),
        ["convexity"] => convexity(&p, exec),
        ["homology", "group"] => homology_group(&p, exec),
        ["homology", "loopspace"] => loopspace(&p, exec),
        ["homology", "corollary"] => corollary(&p, exec),
        _ => Err(CliError::Validation(format!("unknown command '{}'", config.command_name()))),
    }
}

fn lagrange(p: &Params, format: &str) -> Result<RunOutput, CliError> {
    let report = first_critical_value(&p.planar()?)?;
    if format == "csv" {
        let mut out = String::from("label,q1,q2,U\n");
        for pt in &report.points {
            out.push_str(&format!("{:?},{}\n", pt.label, csv_row(&[pt.position[0], pt.position[1], pt.value])));
        }
        return Ok(plain(out));
    }
    Ok(plain(json(&report)))
}

#[derive(Serialize)]
struct HillReport<'a> {
    #[serde(serialize_with = "ser_f64")]
    mu: f64,
    #[serde(serialize_with = "ser_f64")]
    c: f64,
    #[serde(serialize_with = "ser_vec")]
    bounds: Vec<f64>,
    resolution: usize,
    component_count: usize,
    bounded_count: usize,
    components: &'a [HillComponent],
    earth_component: Option<usize>,
    moon_component: Option<usize>,
}

fn hill(p: &Params, format: &str, exec: Execution) -> Result<RunOutput, CliError> {
    let params = p.planar()?;
    let c = p.f64("c")?;
    let resolution = p.usize("grid")?;
    let spec = match p.opt("bounds") {
        Some(_) => {
            let b = p.list("bounds")?;
            let bounds: [f64; 4] = b
                .try_into()
                .map_err(|_| CliError::Validation("--bounds needs four numbers x0,x1,y0,y1".into()))?;
            GridSpec { bounds, resolution }
        }
        None => GridSpec::square(p.f64("half-width")?, resolution),
    };
    let grid = classify_components_with(&params, c, spec, exec)?;
    let primary = match format {
        "csv" if p.flag("labels")? => grid.labels_csv(),
        "csv" => grid.values_csv(),
        "svg" => grid.to_svg(&params),
        _ => json(&HillReport {
            mu: params.mu(),
            c,
            bounds: grid.spec.bounds.to_vec(),
            resolution: grid.spec.resolution,
            component_count: grid.component_count(),
            bounded_count: grid.bounded_count(),
            components: &grid.components,
            earth_component: grid.earth_component,
            moon_component: grid.moon_component,
        }),
    };
    Ok(plain(primary))
}

#[derive(Serialize)]
struct OrbitReport {
    #[serde(serialize_with = "ser_f64")]
    mu: f64,
    #[serde(serialize_with = "ser_f64")]
    t_end: f64,
    #[serde(serialize_with = "ser_f64")]
    tol: f64,
    samples: usize,
    #[serde(serialize_with = "ser_f64")]
    jacobi_drift: f64,
    #[serde(serialize_with = "ser_vec")]
    end_q: Vec<f64>,
    #[serde(serialize_with = "ser_vec")]
    end_p: Vec<f64>,
}

fn orbit(p: &Params, format: &str) -> Result<RunOutput, CliError> {
    let mu = p.f64("mu")?;
    let n = p.list("q")?.len();
    let params = SystemParams::new(n, mu)?;
    let start = p.state(&params)?;
    let t = p.f64("t")?;
    let tol = p.f64("tol")?;
    let traj = cr3bp::integrate(&params, &start, t, tol)?;
    if format == "csv" {
        return Ok(plain(traj.to_csv(&params)?));
    }
    Ok(plain(json(&OrbitReport {
        mu,
        t_end: t,
        tol,
        samples: traj.samples.len(),
        jacobi_drift: traj.jacobi_drift(&params)?,
        end_q: traj.end().q.clone(),
        end_p: traj.end().p.clone(),
    })))
}

#[derive(Serialize)]
struct VfReport {
    n: usize,
    #[serde(serialize_with = "ser_f64")]
    c: f64,
    samples: usize,
    seed: u64,
    #[serde(serialize_with = "ser_f64")]
    max_residual: f64,
    #[serde(serialize_with = "ser_f64")]
    threshold: f64,
    pass: bool,
}

fn check_vf(p: &Params) -> Result<RunOutput, CliError> {
    let (n, c, samples, seed) = (p.usize("n")?, p.f64("c")?, p.usize("samples")?, p.parse("seed")?);
    let max_residual = vf_identity_residual(n, c, samples, seed)?;
    let pass = max_residual <= VF_THRESHOLD;
    Ok(RunOutput {
        pass: Some(pass),
        ..plain(json(&VfReport {
            n,
            c,
            samples,
            seed,
            max_residual,
            threshold: VF_THRESHOLD,
            pass,
        }))
    })
}

#[derive(Serialize)]
struct EmbedReport {
    #[serde(serialize_with = "ser_f64")]
    mu: f64,
    #[serde(serialize_with = "ser_f64")]
    c: f64,
    chart_point: ChartPoint,
    sphere: SphereCotangent,
    #[serde(serialize_with = "ser_f64")]
    defining_function: f64,
}

fn embed(p: &Params) -> Result<RunOutput, CliError> {
    let mu = p.f64("mu")?;
    let n = p.list("q")?.len();
    let params = SystemParams::new(n, mu)?;
    let state = p.state(&params)?;
    let c = match p.opt("c") {
        Some(_) => p.f64("c")?,
        None => hamiltonian(&params, &state)?,
    };
    let chart_point = cr3bp_chart_point(&params, &state);
    let sphere = stereographic_lift(&chart_point);
    let f = defining_function(&params, c, &chart_point)?;
    Ok(plain(json(&EmbedReport {
        mu,
        c,
        chart_point,
        sphere,
        defining_function: f,
    })))
}

fn shoot(p: &Params, params: &SystemParams, c: f64, tol: f64) -> Result<SymmetricOrbit, CliError> {
    let q1 = p.f64("q1")?;
    let bracket = match p.opt("bracket") {
        Some(_) => match p.list("bracket")?.as_slice() {
            [a, b] => (*a, *b),
            _ => return Err(CliError::Validation("--bracket needs two numbers lo,hi".into())),
        },
        None => (q1 - 0.05, q1 + 0.05),
    };
    let opts = ShootingOptions {
        sense: p.sense()?,
        tol,
        ..ShootingOptions::default()
    };
    Ok(shoot_symmetric_orbit_with(params, c, q1, bracket, &opts)?)
}

fn symmetric(p: &Params, format: &str) -> Result<RunOutput, CliError> {
    let params = p.planar()?;
    let c = p.f64("c")?;
    let orbit = shoot(p, &params, c, p.f64("tol")?)?;
    let csv = orbit.trajectory.to_csv(&params)?;
    let mut files = Vec::new();
    if let Some(path) = p.opt("traj-out") {
        files.push((PathBuf::from(path), csv.clone()));
    }
    let primary = if format == "csv" { csv } else { json(&orbit.summary()) };
    Ok(RunOutput {
        primary,
        files,
        pass: None,
    })
}

#[derive(Serialize)]
struct ObserveReport {
    #[serde(serialize_with = "ser_f64")]
    mu: f64,
    #[serde(serialize_with = "ser_f64")]
    c: f64,
    #[serde(serialize_with = "ser_f64")]
    q1: f64,
    #[serde(serialize_with = "ser_f64")]
    period: f64,
    twisted: bool,
    samples: usize,
    #[serde(serialize_with = "ser_f64")]
    residual: f64,
    #[serde(serialize_with = "ser_f64")]
    phase: f64,
}

fn observe(p: &Params) -> Result<RunOutput, CliError> {
    let params = p.planar()?;
    let c = p.f64("c")?;
    let orbit = shoot(p, &params, c, ShootingOptions::default().tol)?;
    let twisted = !p.flag("no-rho")?;
    let samples = p.usize("samples")?;
    let rep = verify_observation_with(&orbit, &params, c, samples, twisted)?;
    Ok(RunOutput {
        // the control run has no verdict of its own
        pass: twisted.then_some(rep.residual <= OBSERVATION_THRESHOLD),
        ..plain(json(&ObserveReport {
            mu: params.mu(),
            c,
            q1: orbit.start.q[0],
            period: orbit.period(),
            twisted,
            samples,
            residual: rep.residual,
            phase: rep.phase,
        }))
    })
}

fn starshape(p: &Params, exec: Execution) -> Result<RunOutput, CliError> {
    let params = SystemParams::new(p.usize("n")?, p.f64("mu")?)?;
    let opts = StarshapeOptions {
        base_samples: p.usize("bases")?,
        ray_samples: p.usize("rays")?,
        seed: p.parse("seed")?,
        scan_points: p.usize("scan")?,
        grid_resolution: p.usize("grid")?,
        allow_above_kappa: p.flag("allow-above-kappa")?,
        execution: exec,
    };
    let report = starshape_check(&params, p.f64("c")?, &opts)?;
    Ok(RunOutput {
        pass: Some(report.pass),
        ..plain(json(&report))
    })
}

fn convexity(p: &Params, exec: Execution) -> Result<RunOutput, CliError> {
    let params = p.planar()?;
    let opts = ConvexityOptions {
        base_samples: p.usize("bases")?,
        ray_samples: p.usize("rays")?,
        seed: p.parse("seed")?,
        relative_step: p.f64("step")?,
        execution: exec,
    };
    let report = fiber_convexity_check(&params, p.f64("c")?, &opts)?;
    Ok(RunOutput {
        pass: Some(report.pass),
        ..plain(json(&report))
    })
}

#[derive(Serialize)]
struct DegreeEntry<'a> {
    degree: usize,
    #[serde(flatten)]
    group: &'a AbelianGroupDescriptor,
}

#[derive(Serialize)]
struct GroupReport<'a> {
    group: String,
    order: usize,
    character: Character,
    path: HomologyPath,
    homology: Vec<DegreeEntry<'a>>,
}

fn homology_group(p: &Params, exec: Execution) -> Result<RunOutput, CliError> {
    let m = p.usize("m")?;
    let group = match p.raw("group")? {
        "cyclic" => FiniteGroup::Cyclic(m),
        "dihedral" => FiniteGroup::Dihedral(m),
        s => return Err(CliError::Validation(format!("--group: expected cyclic or dihedral, got '{s}'"))),
    };
    let chi = Character::new(p.sign("tau")?, p.sign("refl")?)?;
    let path = p.path()?;
    let h = group_homology(group, chi, p.usize("max-deg")?, path, exec)?;
    Ok(plain(json(&GroupReport {
        group: group.to_string(),
        order: group.order(),
        character: chi,
        path,
        homology: h.iter().enumerate().map(|(degree, group)| DegreeEntry { degree, group }).collect(),
    })))
}

fn table_options(p: &Params, exec: Execution) -> Result<TableOptions, CliError> {
    Ok(TableOptions {
        convention: p.convention()?,
        path: p.path()?,
        execution: exec,
    })
}

fn loopspace(p: &Params, exec: Execution) -> Result<RunOutput, CliError> {
    let opts = table_options(p, exec)?;
    let (n, max_deg, m_range) = (p.usize("n")?, p.usize("max-deg")?, p.usize("m-range")?);
    let action: km_core::homology::Action = p.parse("action")?;
    let table = match action {
        km_core::homology::Action::So2 => loop_space_so2_table(n, max_deg, m_range, &opts)?,
        km_core::homology::Action::O2 => {
            let bo2 = match p.opt("bo2") {
                Some(path) => {
                    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{path}: {e}")))?;
                    parse_bo2(&text)?
                }
                None => shipped_bo2(),
            };
            loop_space_o2_table(n, max_deg, m_range, &bo2, &opts)?
        }
    };
    Ok(plain(table.to_json() + "\n"))
}

fn corollary(p: &Params, exec: Execution) -> Result<RunOutput, CliError> {
    let opts = table_options(p, exec)?;
    let table = corollary_table(p.usize("max-deg")?, p.usize("m-range")?, p.flag("spatial")?, &opts)?;
    Ok(plain(table.to_json() + "\n"))
}
