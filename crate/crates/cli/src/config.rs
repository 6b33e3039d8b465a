//! Subcommand table, flag parsing and `key = value` config files.

use std::collections::BTreeMap;
use std::path::Path;

use clap::{Arg, ArgAction, ArgMatches, Command};

use crate::CliError;

/// One flag of a subcommand. `default: None` means required (from a flag or the config file).
pub struct Param {
    pub name: &'static str,
    pub default: Option<&'static str>,
    pub help: &'static str,
    pub switch: bool,
}

const fn opt(name: &'static str, default: &'static str, help: &'static str) -> Param {
    Param {
        name,
        default: Some(default),
        help,
        switch: false,
    }
}

const fn req(name: &'static str, help: &'static str) -> Param {
    Param {
        name,
        default: None,
        help,
        switch: false,
    }
}

const fn maybe(name: &'static str, help: &'static str) -> Param {
    Param {
        name,
        default: Some(""),
        help,
        switch: false,
    }
}

const fn switch(name: &'static str, help: &'static str) -> Param {
    Param {
        name,
        default: Some("false"),
        help,
        switch: true,
    }
}

pub struct Spec {
    pub path: &'static [&'static str],
    pub about: &'static str,
    pub formats: &'static [&'static str],
    pub params: &'static [Param],
}

const MU: Param = req("mu", "mass ratio in [0, 1)");
const C: Param = req("c", "energy level H = c");
const SEED: Param = opt("seed", "0", "sampling seed");
const SENSE: Param = opt("sense", "retrograde", "retrograde or prograde");
const Q1: Param = req("q1", "initial guess for the crossing of the q1-axis");
const BRACKET: Param = maybe("bracket", "search interval lo,hi for q1 (default q1 -+ 0.05)");
const TAU_RULE: Param = opt("tau-rule", "koszul", "rotation sign rule: koszul, plus or minus");
const REFL_RULE: Param = opt("refl-rule", "koszul", "reflection sign rule: koszul, plus or minus");
const PATH: Param = opt("path", "bar", "resolution: bar, or periodic where the group is cyclic");
const MAX_DEG: Param = opt("max-deg", "6", "largest degree");
const M_RANGE: Param = opt("m-range", "4", "largest m summed");

pub const SPECS: &[Spec] = &[
    Spec {
        path: &["lagrange"],
        about: "Lagrange points and the first critical value",
        formats: &["json", "csv"],
        params: &[MU],
    },
    Spec {
        path: &["hill"],
        about: "Hill's region components on a planar grid",
        formats: &["json", "csv", "svg"],
        params: &[
            MU,
            C,
            opt("grid", "400", "cells per axis"),
            opt("half-width", "2", "grid covers [-h, h]^2"),
            maybe("bounds", "x0,x1,y0,y1 (overrides --half-width)"),
            switch("labels", "CSV of component labels instead of U values"),
        ],
    },
    Spec {
        path: &["orbit"],
        about: "Integrate the restricted problem from one state",
        formats: &["csv", "json"],
        params: &[
            MU,
            req("q", "position, comma separated"),
            req("p", "momentum, comma separated"),
            opt("t", "10", "final time (negative integrates backwards)"),
            opt("tol", "1e-12", "integrator tolerance"),
        ],
    },
    Spec {
        path: &["moser", "check-vf"],
        about: "Check X_K = |q| X_H on sampled Kepler energy surfaces",
        formats: &["json"],
        params: &[
            opt("n", "2", "dimension of the configuration space"),
            opt("c", "-0.5", "negative Kepler energy"),
            opt("samples", "1000", "number of surface samples"),
            SEED,
        ],
    },
    Spec {
        path: &["moser", "embed"],
        about: "Regularize one state onto the cotangent bundle of the sphere",
        formats: &["json"],
        params: &[
            MU,
            req("q", "position, comma separated"),
            req("p", "momentum, comma separated"),
            maybe("c", "energy for the defining function (default H(q, p))"),
        ],
    },
    Spec {
        path: &["symmetric"],
        about: "Shoot a symmetric periodic orbit from the q1-axis",
        formats: &["json", "csv"],
        params: &[
            MU,
            C,
            Q1,
            BRACKET,
            SENSE,
            opt("tol", "1e-12", "integrator tolerance"),
            maybe("traj-out", "also write the trajectory CSV here"),
        ],
    },
    Spec {
        path: &["observe"],
        about: "Compare time reversal with the twisted reflection on a symmetric orbit",
        formats: &["json"],
        params: &[
            MU,
            C,
            Q1,
            BRACKET,
            SENSE,
            opt("samples", "1024", "loop samples"),
            switch("no-rho", "drop the reflection (negative control)"),
        ],
    },
    Spec {
        path: &["starshape"],
        about: "Fiberwise starshape check of the regularized energy surface",
        formats: &["json"],
        params: &[
            MU,
            C,
            opt("n", "2", "dimension of the configuration space"),
            opt("bases", "200", "base points on the sphere"),
            opt("rays", "64", "rays per base point"),
            SEED,
            opt("grid", "800", "Hill grid resolution for the earth component"),
            opt("scan", "4096", "scan points per ray"),
            switch("allow-above-kappa", "run even when c >= kappa"),
        ],
    },
    Spec {
        path: &["convexity"],
        about: "Fiberwise convexity check (mu = 0)",
        formats: &["json"],
        params: &[
            opt("mu", "0", "mass ratio (must be 0)"),
            C,
            opt("bases", "100", "base points on the sphere"),
            opt("rays", "32", "rays per base point"),
            SEED,
            opt("step", "1e-4", "finite-difference step relative to the fiber radius"),
        ],
    },
    Spec {
        path: &["homology", "group"],
        about: "Integer homology of Z_m or D_m with a sign character",
        formats: &["json"],
        params: &[
            opt("group", "cyclic", "cyclic or dihedral"),
            req("m", "group parameter"),
            opt("tau", "1", "rotation sign"),
            opt("refl", "1", "reflection sign"),
            MAX_DEG,
            PATH,
        ],
    },
    Spec {
        path: &["homology", "loopspace"],
        about: "Equivariant homology table of the free loop space of S^n",
        formats: &["json"],
        params: &[
            opt("n", "2", "sphere dimension"),
            opt("action", "so2", "so2 or o2"),
            MAX_DEG,
            M_RANGE,
            TAU_RULE,
            REFL_RULE,
            PATH,
            maybe("bo2", "BO(2) table file (default: shipped table)"),
        ],
    },
    Spec {
        path: &["homology", "corollary"],
        about: "O(2)-equivariant symplectic homology table below the first critical value",
        formats: &["json"],
        params: &[MAX_DEG, M_RANGE, switch("spatial", "spatial problem (n = 3)"), TAU_RULE, REFL_RULE, PATH],
    },
];

pub fn find_spec(path: &[String]) -> Option<&'static Spec> {
    SPECS.iter().find(|s| s.path.iter().copied().eq(path.iter().map(String::as_str)))
}

fn leaf(spec: &Spec) -> Command {
    let mut cmd = Command::new(*spec.path.last().expect("non-empty path")).about(spec.about);
    for p in spec.params {
        let mut arg = Arg::new(p.name).long(p.name).help(p.help);
        arg = if p.switch {
            arg.action(ArgAction::SetTrue)
        } else {
            arg.value_name("VALUE").allow_hyphen_values(true)
        };
        cmd = cmd.arg(arg);
    }
    cmd.arg(
        Arg::new("format")
            .long("format")
            .value_name("FORMAT")
            .value_parser(spec.formats.to_vec())
            .help("output format"),
    )
}

fn group_about(group: &str) -> &'static str {
    match group {
        "moser" => "Kepler regularization checks",
        "homology" => "Group homology and equivariant loop-space tables",
        _ => "",
    }
}

pub fn command() -> Command {
    let mut root = Command::new("km")
        .version(env!("CARGO_PKG_VERSION"))
        .about("Restricted three-body mechanics, Moser regularization and loop-space homology")
        .subcommand_required(true)
        .arg(
            Arg::new("config")
                .long("config")
                .global(true)
                .value_name("FILE")
                .help("key = value file; flags take precedence"),
        )
        .arg(
            Arg::new("out")
                .long("out")
                .global(true)
                .value_name("FILE")
                .help("write the primary output here instead of stdout"),
        );
    let mut groups: BTreeMap<&str, Command> = BTreeMap::new();
    for spec in SPECS {
        match spec.path {
            [name] => root = root.subcommand(leaf(spec).name(*name)),
            [group, _] => {
                let g = groups
                    .remove(group)
                    .unwrap_or_else(|| Command::new(*group).about(group_about(group)).subcommand_required(true));
                groups.insert(group, g.subcommand(leaf(spec)));
            }
            _ => unreachable!("subcommands are at most two deep"),
        }
    }
    for (_, g) in groups {
        root = root.subcommand(g);
    }
    root
}

/// Parses `key = value` lines; `#` starts a comment, `_` and `-` are interchangeable in keys.
pub fn parse_config_file(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut out = BTreeMap::new();
    for (no, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(CliError::Validation(format!("config line {}: expected key = value", no + 1)));
        };
        let key = k.trim().replace('_', "-");
        let value = v.trim().trim_matches('"').to_string();
        if key.is_empty() {
            return Err(CliError::Validation(format!("config line {}: empty key", no + 1)));
        }
        out.insert(key, value);
    }
    Ok(out)
}

pub fn read_config_file(path: &Path) -> Result<BTreeMap<String, String>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    parse_config_file(&text)
}

/// Defaults, then the config file, then flags given on the command line.
pub fn merge(
    spec: &Spec,
    file: &BTreeMap<String, String>,
    matches: &ArgMatches,
) -> Result<BTreeMap<String, String>, CliError> {
    let known = |k: &str| k == "format" || k == "out" || spec.params.iter().any(|p| p.name == k);
    if let Some(bad) = file.keys().find(|k| !known(k)) {
        return Err(CliError::Validation(format!(
            "config key '{bad}' is not a parameter of '{}'",
            spec.path.join(" ")
        )));
    }
    let mut params = BTreeMap::new();
    for p in spec.params {
        if let Some(d) = p.default {
            if !d.is_empty() {
                params.insert(p.name.to_string(), d.to_string());
            }
        }
    }
    params.insert("format".into(), spec.formats[0].to_string());
    for (k, v) in file {
        params.insert(k.clone(), v.clone());
    }
    for p in spec.params {
        if p.switch {
            if matches.get_flag(p.name) {
                params.insert(p.name.into(), "true".into());
            }
        } else if let Some(v) = matches.get_one::<String>(p.name) {
            params.insert(p.name.into(), v.clone());
        }
    }
    if let Some(v) = matches.get_one::<String>("format") {
        params.insert("format".into(), v.clone());
    }
    if let Some(v) = matches.get_one::<String>("out") {
        params.insert("out".into(), v.clone());
    }
    let format = &params["format"];
    if !spec.formats.contains(&format.as_str()) {
        return Err(CliError::Validation(format!(
            "format '{format}' is not one of {}",
            spec.formats.join(", ")
        )));
    }
    for p in spec.params {
        if p.default.is_none() && !params.contains_key(p.name) {
            return Err(CliError::Validation(format!("missing --{}", p.name)));
        }
    }
    Ok(params)
}
