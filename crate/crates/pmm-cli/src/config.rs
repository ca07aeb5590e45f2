//! Flat `key=value` run configuration.
//!
//! Values come from three layers: built-in defaults, an optional config file,
//! the `PMM_SEED` environment variable (for `seed` only), then `--key=value`
//! flags. Later layers win. Unknown keys are rejected in every layer.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use pmm_core::lattice::Topology;
use pmm_core::pde::{BoundaryRegistry, Profile};
use pmm_core::ModelParams;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("unknown key `{0}`")]
    UnknownKey(String),

    #[error("malformed line {line}: `{text}` (expected key=value)")]
    Malformed { line: usize, text: String },

    #[error("invalid value for `{key}`: `{value}` ({expected})")]
    BadValue {
        key: String,
        value: String,
        expected: String,
    },

    #[error("missing value for `{0}`")]
    Missing(String),

    #[error(transparent)]
    Model(#[from] pmm_core::Error),

    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Simulate,
    Solve,
    Energy,
    Sweep,
    Hydro,
    Oracle,
    Slowbond,
}

impl Command {
    pub const ALL: [Command; 7] = [
        Command::Simulate,
        Command::Solve,
        Command::Energy,
        Command::Sweep,
        Command::Hydro,
        Command::Oracle,
        Command::Slowbond,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Solve => "solve",
            Command::Energy => "energy",
            Command::Sweep => "sweep",
            Command::Hydro => "hydro",
            Command::Oracle => "oracle",
            Command::Slowbond => "slowbond",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Command {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, ConfigError> {
        Command::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| bad("command", s, "simulate|solve|energy|sweep|hydro|oracle|slowbond"))
    }
}

/// Recognised keys with their defaults (`None`: no default) and a short
/// description for `--help`.
pub const KEYS: &[(&str, Option<&str>, &str)] = &[
    ("command", None, "simulate|solve|energy|sweep|hydro|oracle|slowbond"),
    ("m", Some("2"), "porous medium exponent"),
    ("n", Some("100"), "lattice scale"),
    ("kappa", Some("1"), "reservoir intensity"),
    ("theta", Some("1"), "boundary exponent"),
    ("a", Some("1.5"), "SSEP perturbation exponent, in (1,2)"),
    ("alpha", Some("0.2"), "left reservoir density"),
    ("beta", Some("0.8"), "right reservoir density"),
    ("T", Some("0.1"), "final macroscopic time"),
    ("g", Some("cos:0.5:-0.3:1"), "initial profile: const:c | step:at:l:r | linear:l:r | cos:mean:amp:j"),
    ("topology", Some("interval"), "interval|torus"),
    ("bc", Some("robin"), "boundary condition of solve/energy"),
    ("cells", Some("200"), "PDE cells N"),
    ("cfl", Some("0.4"), "time step as a fraction of the stability limit"),
    ("snapshots", Some("200"), "stored PDE time intervals"),
    ("trajectories", Some("200"), "ensemble size M"),
    ("kappa_grid", Some("1,0.3,0.1,0.03,0.01"), "comma-separated kappa values"),
    ("n_grid", Some("50,100,200"), "comma-separated lattice sizes"),
    ("samples", Some("10"), "sample intervals on [0,T] for particle runs"),
    ("bins", Some("10"), "cells the lattice is binned onto"),
    ("pde_cells", Some("400"), "resolution of hydro reference solves"),
    ("j_max", Some("4"), "highest mode of the energy dictionary"),
    ("c", Some("auto"), "energy constant; auto is m + m^2 + 1"),
    ("seed", Some("0"), "master seed (env PMM_SEED)"),
    ("out", Some("out"), "output directory"),
];

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub params: ModelParams,
    pub profile: Profile,
    pub topology: Topology,
    pub bc: String,
    pub cells: usize,
    pub cfl: f64,
    pub snapshots: usize,
    pub trajectories: usize,
    pub kappa_grid: Vec<f64>,
    pub n_grid: Vec<usize>,
    pub samples: usize,
    pub bins: usize,
    pub pde_cells: usize,
    pub j_max: u32,
    /// `None` selects the default constant for `m`.
    pub c: Option<f64>,
    pub seed: u64,
    pub out: PathBuf,
}

/// A parsed configuration and the keys that fell back to their defaults.
#[derive(Debug, Clone, PartialEq)]
pub struct Parsed {
    pub config: RunConfig,
    pub defaulted: Vec<String>,
}

fn bad(key: &str, value: &str, expected: &str) -> ConfigError {
    ConfigError::BadValue {
        key: key.to_string(),
        value: value.to_string(),
        expected: expected.to_string(),
    }
}

fn check_key(key: &str) -> Result<(), ConfigError> {
    if KEYS.iter().any(|(k, _, _)| *k == key) {
        Ok(())
    } else {
        Err(ConfigError::UnknownKey(key.to_string()))
    }
}

/// Parses the text of a config file. `#` starts a comment.
pub fn parse_file_text(text: &str) -> Result<Vec<(String, String)>, ConfigError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| ConfigError::Malformed {
            line: i + 1,
            text: raw.to_string(),
        })?;
        let k = k.trim();
        check_key(k)?;
        out.push((k.to_string(), v.trim().to_string()));
    }
    Ok(out)
}

/// Parses `--key=value` or `--key value` flags.
pub fn parse_flags(args: &[String]) -> Result<Vec<(String, String)>, ConfigError> {
    let mut out = Vec::new();
    let mut it = args.iter();
    while let Some(a) = it.next() {
        let body = a.strip_prefix("--").ok_or_else(|| bad("flag", a, "--key=value"))?;
        let (k, v) = match body.split_once('=') {
            Some((k, v)) => (k.to_string(), v.to_string()),
            None => {
                let v = it.next().ok_or_else(|| ConfigError::Missing(body.to_string()))?;
                (body.to_string(), v.clone())
            }
        };
        check_key(&k)?;
        out.push((k, v));
    }
    Ok(out)
}

fn num<T: FromStr>(key: &str, v: &str, expected: &str) -> Result<T, ConfigError> {
    v.trim().parse().map_err(|_| bad(key, v, expected))
}

fn list<T: FromStr>(key: &str, v: &str, expected: &str) -> Result<Vec<T>, ConfigError> {
    let items: Vec<T> = v
        .split(',')
        .map(|s| num(key, s, expected))
        .collect::<Result<_, _>>()?;
    if items.is_empty() {
        return Err(bad(key, v, expected));
    }
    Ok(items)
}

fn join<T: fmt::Display>(v: &[T]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

impl RunConfig {
    /// Layers `file`, `env_seed` and `flags` over the defaults and validates.
    pub fn resolve(
        file: &[(String, String)],
        env_seed: Option<&str>,
        flags: &[(String, String)],
    ) -> Result<Parsed, ConfigError> {
        let mut values: BTreeMap<&str, String> = BTreeMap::new();
        let mut defaulted = Vec::new();
        let set = |layer: &[(String, String)], values: &mut BTreeMap<&str, String>| {
            for (k, v) in layer {
                let key = KEYS.iter().find(|(name, _, _)| name == k).unwrap().0;
                values.insert(key, v.clone());
            }
        };
        for (k, _) in file.iter().chain(flags) {
            check_key(k)?;
        }
        set(file, &mut values);
        if let Some(s) = env_seed {
            values.insert("seed", s.to_string());
        }
        set(flags, &mut values);
        for (k, default, _) in KEYS {
            if !values.contains_key(k) {
                match default {
                    Some(d) => {
                        values.insert(k, d.to_string());
                        defaulted.push(k.to_string());
                    }
                    None => return Err(ConfigError::Missing(k.to_string())),
                }
            }
        }
        let config = Self::from_values(&values)?;
        Ok(Parsed { config, defaulted })
    }

    fn from_values(v: &BTreeMap<&str, String>) -> Result<Self, ConfigError> {
        let get = |k: &str| v[k].as_str();
        let params = ModelParams {
            m: num("m", get("m"), "positive integer")?,
            n: num("n", get("n"), "integer >= 3")?,
            kappa: num("kappa", get("kappa"), "positive number")?,
            theta: num("theta", get("theta"), "number >= 0")?,
            a: num("a", get("a"), "number in (1, 2)")?,
            alpha: num("alpha", get("alpha"), "number in (0, 1)")?,
            beta: num("beta", get("beta"), "number in (0, 1)")?,
            t_final: num("T", get("T"), "positive number")?,
        };
        params.validate()?;
        let profile: Profile = get("g").parse()?;
        profile.validate()?;
        let topology = Topology::from_name(get("topology"))
            .ok_or_else(|| bad("topology", get("topology"), "interval|torus"))?;
        let bc = get("bc").to_string();
        let registry = BoundaryRegistry::builtin();
        if !registry.names().any(|n| n == bc) {
            return Err(bad("bc", &bc, &registry.names().collect::<Vec<_>>().join("|")));
        }
        let positive = |key: &str| -> Result<usize, ConfigError> {
            let x: usize = num(key, get(key), "positive integer")?;
            if x == 0 {
                return Err(bad(key, get(key), "positive integer"));
            }
            Ok(x)
        };
        let cfl: f64 = num("cfl", get("cfl"), "positive number")?;
        if !(cfl > 0.0 && cfl.is_finite()) {
            return Err(bad("cfl", get("cfl"), "positive number"));
        }
        let kappa_grid: Vec<f64> = list("kappa_grid", get("kappa_grid"), "comma-separated positive numbers")?;
        if kappa_grid.iter().any(|k| !(*k > 0.0 && k.is_finite())) {
            return Err(bad("kappa_grid", get("kappa_grid"), "comma-separated positive numbers"));
        }
        let n_grid: Vec<usize> = list("n_grid", get("n_grid"), "comma-separated integers >= 3")?;
        if n_grid.iter().any(|&n| n < 3) {
            return Err(bad("n_grid", get("n_grid"), "comma-separated integers >= 3"));
        }
        let c = match get("c") {
            "auto" => None,
            s => {
                let c: f64 = num("c", s, "auto or a positive number")?;
                if !(c > 0.0 && c.is_finite()) {
                    return Err(bad("c", s, "auto or a positive number"));
                }
                Some(c)
            }
        };
        let out = get("out");
        if out.is_empty() {
            return Err(bad("out", out, "nonempty path"));
        }
        Ok(RunConfig {
            command: get("command").parse()?,
            params,
            profile,
            topology,
            bc,
            cells: positive("cells")?,
            cfl,
            snapshots: positive("snapshots")?,
            trajectories: positive("trajectories")?,
            kappa_grid,
            n_grid,
            samples: positive("samples")?,
            bins: positive("bins")?,
            pde_cells: positive("pde_cells")?,
            j_max: num("j_max", get("j_max"), "nonnegative integer")?,
            c,
            seed: num("seed", get("seed"), "unsigned 64-bit integer")?,
            out: PathBuf::from(out),
        })
    }

    /// Every key with its value, in `KEYS` order.
    pub fn pairs(&self) -> Vec<(&'static str, String)> {
        let p = &self.params;
        KEYS.iter()
            .map(|(k, _, _)| {
                let v = match *k {
                    "command" => self.command.to_string(),
                    "m" => p.m.to_string(),
                    "n" => p.n.to_string(),
                    "kappa" => p.kappa.to_string(),
                    "theta" => p.theta.to_string(),
                    "a" => p.a.to_string(),
                    "alpha" => p.alpha.to_string(),
                    "beta" => p.beta.to_string(),
                    "T" => p.t_final.to_string(),
                    "g" => self.profile.to_string(),
                    "topology" => self.topology.name().to_string(),
                    "bc" => self.bc.clone(),
                    "cells" => self.cells.to_string(),
                    "cfl" => self.cfl.to_string(),
                    "snapshots" => self.snapshots.to_string(),
                    "trajectories" => self.trajectories.to_string(),
                    "kappa_grid" => join(&self.kappa_grid),
                    "n_grid" => join(&self.n_grid),
                    "samples" => self.samples.to_string(),
                    "bins" => self.bins.to_string(),
                    "pde_cells" => self.pde_cells.to_string(),
                    "j_max" => self.j_max.to_string(),
                    "c" => self.c.map_or("auto".to_string(), |c| c.to_string()),
                    "seed" => self.seed.to_string(),
                    "out" => self.out.display().to_string(),
                    other => unreachable!("key {other} has no serializer"),
                };
                (*k, v)
            })
            .collect()
    }

    /// Config file text that parses back to `self`.
    pub fn to_text(&self) -> String {
        self.pairs()
            .into_iter()
            .map(|(k, v)| format!("{k}={v}\n"))
            .collect()
    }
}

/// Reads a config file from disk.
pub fn read_file(path: &std::path::Path) -> Result<Vec<(String, String)>, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    parse_file_text(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn kv(pairs: &[(&str, &str)]) -> Vec<(String, String)> {
        pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
    }

    #[test]
    fn minimal_file_echoes_defaults() {
        let file = parse_file_text("command = solve\nm=2\nn=100 # lattice\n").unwrap();
        let p = RunConfig::resolve(&file, None, &[]).unwrap();
        assert_eq!(p.config.params.a, 1.5);
        assert_eq!(p.config.cfl, 0.4);
        assert_eq!(p.config.params.theta, 1.0);
        for k in ["a", "cfl", "theta", "seed"] {
            assert!(p.defaulted.iter().any(|d| d == k), "{k} not echoed");
        }
        assert!(!p.defaulted.iter().any(|d| d == "m"));
    }

    #[test]
    fn alpha_out_of_range_names_the_field() {
        let err = RunConfig::resolve(&kv(&[("command", "solve"), ("alpha", "1.2")]), None, &[]).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("alpha") && msg.contains("(0, 1)"), "{msg}");
    }

    #[test]
    fn precedence() {
        let file = kv(&[("command", "sweep"), ("kappa", "1"), ("seed", "3")]);
        let flags = parse_flags(&["--kappa=5".to_string()]).unwrap();
        let p = RunConfig::resolve(&file, Some("11"), &flags).unwrap();
        assert_eq!(p.config.params.kappa, 5.0);
        assert_eq!(p.config.seed, 11);
        let flags = parse_flags(&["--seed".to_string(), "12".to_string()]).unwrap();
        assert_eq!(RunConfig::resolve(&file, Some("11"), &flags).unwrap().config.seed, 12);
    }

    #[test]
    fn unknown_keys_are_errors() {
        assert_eq!(parse_file_text("kapa=1").unwrap_err(), ConfigError::UnknownKey("kapa".into()));
        assert!(matches!(
            parse_flags(&["--nope=1".to_string()]).unwrap_err(),
            ConfigError::UnknownKey(_)
        ));
        assert!(matches!(parse_file_text("m 2").unwrap_err(), ConfigError::Malformed { line: 1, .. }));
        assert!(matches!(parse_flags(&["m=2".to_string()]).unwrap_err(), ConfigError::BadValue { .. }));
    }

    #[test]
    fn value_errors_name_the_key() {
        let cases = [
            ("cells", "0"),
            ("cfl", "-1"),
            ("bc", "mixed"),
            ("topology", "sphere"),
            ("g", "wave:1"),
            ("kappa_grid", "1,0,2"),
            ("n_grid", "2,4"),
            ("c", "-2"),
            ("seed", "-1"),
        ];
        for (k, v) in cases {
            let err = RunConfig::resolve(&kv(&[("command", "solve"), (k, v)]), None, &[]).unwrap_err();
            let msg = err.to_string();
            let named = msg.contains(&format!("`{k}`")) || (k == "g" && msg.contains("`g`"));
            assert!(named, "{k}: {msg}");
        }
        assert!(matches!(
            RunConfig::resolve(&[], None, &[]).unwrap_err(),
            ConfigError::Missing(_)
        ));
    }

    fn arb_config() -> impl Strategy<Value = RunConfig> {
        (
            (0usize..7, 1u32..5, 3usize..500, 1e-3..1e3f64, 0.0..3.0f64, 1.01..1.99f64),
            (0.01..0.99f64, 0.01..0.99f64, 1e-3..10.0f64, 0.01..0.99f64, any::<bool>(), any::<bool>()),
            (1usize..1000, 0.05..0.95f64, prop::collection::vec(1e-3..1e3f64, 1..5), prop::collection::vec(3usize..400, 1..4)),
            (any::<u64>(), prop::option::of(0.1..100.0f64), 0u32..8, "[a-z]{1,8}"),
        )
            .prop_map(|((cmd, m, n, kappa, theta, a), (alpha, beta, t, gv, torus, dir), (cells, cfl, kg, ng), (seed, c, j_max, out))| RunConfig {
                command: Command::ALL[cmd],
                params: ModelParams {
                    m,
                    n,
                    kappa,
                    theta,
                    a,
                    alpha,
                    beta,
                    t_final: t,
                },
                profile: Profile::Step {
                    at: 0.5,
                    left: gv,
                    right: 1.0 - gv,
                },
                topology: if torus { Topology::TorusSlowBond } else { Topology::Interval },
                bc: if dir { "dirichlet".into() } else { "robin".into() },
                cells,
                cfl,
                snapshots: cells / 2 + 1,
                trajectories: cells + 30,
                kappa_grid: kg,
                n_grid: ng,
                samples: 1 + cells % 20,
                bins: 1 + cells % 13,
                pde_cells: cells + 3,
                j_max,
                c,
                seed,
                out: PathBuf::from(out),
            })
    }

    proptest! {
        #[test]
        fn round_trip(cfg in arb_config()) {
            let text = cfg.to_text();
            let back = RunConfig::resolve(&parse_file_text(&text).unwrap(), None, &[]).unwrap();
            prop_assert_eq!(back.config, cfg);
            prop_assert!(back.defaulted.is_empty());
        }
    }
}
