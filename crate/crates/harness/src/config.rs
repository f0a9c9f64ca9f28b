//! INI sweep configuration with sections `[geometry]`, `[data]`, `[schedule]`,
//! `[solver]` and `[output]`.

use std::path::{Path, PathBuf};

use ini::Ini;
use lichnerowicz_core::geometry::Geometry;
use lichnerowicz_core::solver::{InitialGuess, SolveOptions};
use sha2::{Digest, Sha256};

use crate::recipe::{PotentialRecipe, ScalarRecipe, TensorRecipe};
use crate::HarnessError;

#[derive(Debug, Clone, PartialEq)]
pub struct GeometrySpec {
    pub dim: usize,
    pub resolution: usize,
    pub period: f64,
}

impl GeometrySpec {
    pub fn build(&self) -> Result<Geometry, HarnessError> {
        Ok(Geometry::torus(self.dim, self.resolution, self.period)?)
    }
}

/// Base physics data and perturbation shapes.
#[derive(Debug, Clone, PartialEq)]
pub struct DataSpec {
    pub psi: ScalarRecipe,
    pub pi: ScalarRecipe,
    pub tau: ScalarRecipe,
    pub sigma: TensorRecipe,
    pub potential: PotentialRecipe,
    pub d_psi: ScalarRecipe,
    pub d_pi: ScalarRecipe,
    pub d_tau: ScalarRecipe,
    pub d_sigma: TensorRecipe,
    pub d_potential: PotentialRecipe,
}

impl DataSpec {
    /// Base data with zero perturbation shapes.
    pub fn unperturbed(
        psi: ScalarRecipe,
        pi: ScalarRecipe,
        tau: ScalarRecipe,
        sigma: TensorRecipe,
        potential: PotentialRecipe,
    ) -> Self {
        DataSpec {
            psi,
            pi,
            tau,
            sigma,
            potential,
            d_psi: ScalarRecipe::zero(),
            d_pi: ScalarRecipe::zero(),
            d_tau: ScalarRecipe::zero(),
            d_sigma: TensorRecipe::zero(),
            d_potential: PotentialRecipe::zero(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleSpec {
    /// `ε_α`, strictly decreasing and nonnegative.
    pub eps: Vec<f64>,
    /// A trajectory counts as vanishing once `sup u` falls below this fraction
    /// of its first value.
    pub vanish_ratio: f64,
    /// Successive differences at or below this level count as settled.
    pub stall_tol: f64,
}

impl ScheduleSpec {
    pub fn geometric(start: f64, ratio: f64, count: usize) -> Result<Self, HarnessError> {
        let s = ScheduleSpec {
            eps: (0..count).map(|a| start * ratio.powi(a as i32)).collect(),
            vanish_ratio: 0.5,
            stall_tol: 1e-9,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.eps.len() < 4 {
            return Err(HarnessError::Config("schedule needs at least 4 points".into()));
        }
        if self.eps.iter().any(|e| !(*e >= 0.0) || !e.is_finite()) {
            return Err(HarnessError::Config("schedule values must be finite and nonnegative".into()));
        }
        if self.eps.windows(2).any(|w| w[1] >= w[0]) {
            return Err(HarnessError::Config("schedule must be strictly decreasing".into()));
        }
        if !(self.vanish_ratio > 0.0 && self.vanish_ratio < 1.0) {
            return Err(HarnessError::Config("vanish_ratio must lie in (0, 1)".into()));
        }
        if !(self.stall_tol >= 0.0) {
            return Err(HarnessError::Config("stall_tol must be nonnegative".into()));
        }
        Ok(())
    }

    /// Every other point, starting with the first.
    pub fn halved(&self) -> Self {
        ScheduleSpec { eps: self.eps.iter().step_by(2).copied().collect(), ..self.clone() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverSpec {
    pub options: SolveOptions,
    /// Start each schedule point from the previous solution.
    pub warm_start: bool,
}

impl Default for SolverSpec {
    fn default() -> Self {
        SolverSpec { options: SolveOptions::default(), warm_start: true }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct OutputSpec {
    pub csv: Option<PathBuf>,
    pub json: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub geometry: GeometrySpec,
    pub data: DataSpec,
    pub schedule: ScheduleSpec,
    pub solver: SolverSpec,
    pub output: OutputSpec,
}

const SECTIONS: [(&str, &[&str]); 5] = [
    ("geometry", &["dim", "resolution", "period"]),
    (
        "data",
        &["psi", "pi", "tau", "sigma", "potential", "d_psi", "d_pi", "d_tau", "d_sigma", "d_potential"],
    ),
    ("schedule", &["values", "start", "ratio", "count", "vanish_ratio", "stall_tol"]),
    (
        "solver",
        &["max_outer", "max_newton", "tol_residual", "damping", "u_floor", "initial_guess", "require_coercive", "warm_start"],
    ),
    ("output", &["csv", "json"]),
];

struct Reader<'a> {
    ini: &'a Ini,
}

impl Reader<'_> {
    fn raw(&self, sec: &str, key: &str) -> Option<&str> {
        self.ini.section(Some(sec)).and_then(|p| p.get(key)).map(str::trim)
    }

    fn num<T: std::str::FromStr>(&self, sec: &str, key: &str, default: Option<T>) -> Result<T, HarnessError> {
        match self.raw(sec, key) {
            Some(v) => v.parse().map_err(|_| HarnessError::Config(format!("[{sec}] {key}: cannot parse `{v}`"))),
            None => default.ok_or_else(|| HarnessError::Config(format!("[{sec}] {key} is required"))),
        }
    }

    fn flag(&self, sec: &str, key: &str, default: bool) -> Result<bool, HarnessError> {
        match self.raw(sec, key) {
            None => Ok(default),
            Some("true") => Ok(true),
            Some("false") => Ok(false),
            Some(v) => Err(HarnessError::Config(format!("[{sec}] {key}: expected true or false, got `{v}`"))),
        }
    }

    fn scalar(&self, key: &str, default: &str) -> Result<ScalarRecipe, HarnessError> {
        ScalarRecipe::parse(self.raw("data", key).unwrap_or(default))
    }
}

impl SweepConfig {
    pub fn from_file(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))?;
        Self::from_ini_str(&text)
    }

    pub fn from_ini_str(text: &str) -> Result<Self, HarnessError> {
        let ini = Ini::load_from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        for (sec, props) in ini.iter() {
            let Some(sec) = sec else {
                if props.iter().next().is_some() {
                    return Err(HarnessError::Config("keys outside a section".into()));
                }
                continue;
            };
            let Some((_, keys)) = SECTIONS.iter().find(|(s, _)| *s == sec) else {
                return Err(HarnessError::Config(format!("unknown section [{sec}]")));
            };
            for (k, _) in props.iter() {
                if !keys.contains(&k) {
                    return Err(HarnessError::Config(format!("[{sec}] unknown key `{k}`")));
                }
            }
        }
        let r = Reader { ini: &ini };

        let geometry = GeometrySpec {
            dim: r.num("geometry", "dim", Some(3))?,
            resolution: r.num("geometry", "resolution", Some(16))?,
            period: r.num("geometry", "period", Some(2.0 * std::f64::consts::PI))?,
        };

        let data = DataSpec {
            psi: r.scalar("psi", "zero()")?,
            pi: r.scalar("pi", "zero()")?,
            tau: r.scalar("tau", "zero()")?,
            sigma: TensorRecipe::parse(r.raw("data", "sigma").unwrap_or("zero()"))?,
            potential: PotentialRecipe::parse(r.raw("data", "potential").unwrap_or("zero()"))?,
            d_psi: r.scalar("d_psi", "zero()")?,
            d_pi: r.scalar("d_pi", "zero()")?,
            d_tau: r.scalar("d_tau", "zero()")?,
            d_sigma: TensorRecipe::parse(r.raw("data", "d_sigma").unwrap_or("zero()"))?,
            d_potential: PotentialRecipe::parse(r.raw("data", "d_potential").unwrap_or("zero()"))?,
        };

        let eps = match r.raw("schedule", "values") {
            Some(v) => v
                .split(',')
                .map(|t| t.trim().parse::<f64>().map_err(|_| HarnessError::Config(format!("[schedule] values: `{t}`"))))
                .collect::<Result<Vec<_>, _>>()?,
            None => {
                let start: f64 = r.num("schedule", "start", Some(1.0))?;
                let ratio: f64 = r.num("schedule", "ratio", Some(0.5))?;
                let count: usize = r.num("schedule", "count", Some(9))?;
                (0..count).map(|a| start * ratio.powi(a as i32)).collect()
            }
        };
        let schedule = ScheduleSpec {
            eps,
            vanish_ratio: r.num("schedule", "vanish_ratio", Some(0.5))?,
            stall_tol: r.num("schedule", "stall_tol", Some(1e-9))?,
        };
        schedule.validate()?;

        let d = SolveOptions::default();
        let initial_guess = match r.raw("solver", "initial_guess") {
            None | Some("auto") => InitialGuess::Auto,
            Some(v) => InitialGuess::Constant(
                v.parse().map_err(|_| HarnessError::Config(format!("[solver] initial_guess: `{v}`")))?,
            ),
        };
        let solver = SolverSpec {
            options: SolveOptions {
                max_outer: r.num("solver", "max_outer", Some(d.max_outer))?,
                max_newton: r.num("solver", "max_newton", Some(d.max_newton))?,
                tol_residual: r.num("solver", "tol_residual", Some(d.tol_residual))?,
                damping: r.num("solver", "damping", Some(d.damping))?,
                u_floor: r.num("solver", "u_floor", Some(d.u_floor))?,
                initial_guess,
                require_coercive: r.flag("solver", "require_coercive", d.require_coercive)?,
            },
            warm_start: r.flag("solver", "warm_start", true)?,
        };

        let output = OutputSpec {
            csv: r.raw("output", "csv").map(PathBuf::from),
            json: r.raw("output", "json").map(PathBuf::from),
        };
        Ok(SweepConfig { geometry, data, schedule, solver, output })
    }

    /// Canonical INI text; parsing it gives back an equal configuration.
    pub fn to_ini_string(&self) -> String {
        let mut ini = Ini::new();
        let g = &self.geometry;
        ini.with_section(Some("geometry"))
            .set("dim", g.dim.to_string())
            .set("resolution", g.resolution.to_string())
            .set("period", format!("{:?}", g.period));
        let d = &self.data;
        ini.with_section(Some("data"))
            .set("psi", d.psi.to_string())
            .set("pi", d.pi.to_string())
            .set("tau", d.tau.to_string())
            .set("sigma", d.sigma.to_string())
            .set("potential", d.potential.to_string())
            .set("d_psi", d.d_psi.to_string())
            .set("d_pi", d.d_pi.to_string())
            .set("d_tau", d.d_tau.to_string())
            .set("d_sigma", d.d_sigma.to_string())
            .set("d_potential", d.d_potential.to_string());
        let s = &self.schedule;
        ini.with_section(Some("schedule"))
            .set("values", s.eps.iter().map(|e| format!("{e:?}")).collect::<Vec<_>>().join(", "))
            .set("vanish_ratio", format!("{:?}", s.vanish_ratio))
            .set("stall_tol", format!("{:?}", s.stall_tol));
        let o = &self.solver.options;
        let guess = match &o.initial_guess {
            InitialGuess::Constant(c) => format!("{c:?}"),
            _ => "auto".to_string(),
        };
        ini.with_section(Some("solver"))
            .set("max_outer", o.max_outer.to_string())
            .set("max_newton", o.max_newton.to_string())
            .set("tol_residual", format!("{:?}", o.tol_residual))
            .set("damping", format!("{:?}", o.damping))
            .set("u_floor", format!("{:?}", o.u_floor))
            .set("initial_guess", guess)
            .set("require_coercive", o.require_coercive.to_string())
            .set("warm_start", self.solver.warm_start.to_string());
        let mut out = ini.with_section(Some("output"));
        if let Some(p) = &self.output.csv {
            out.set("csv", p.display().to_string());
        }
        if let Some(p) = &self.output.json {
            out.set("json", p.display().to_string());
        }
        let mut buf = Vec::new();
        ini.write_to(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("ini output is UTF-8")
    }

    /// SHA-256 of the canonical text, hex encoded.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.to_ini_string().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "
[geometry]
dim = 3
resolution = 12
period = 6.283185307179586

[data]
psi = cos(k1=1, amp=0.1)
pi = constant(c=0.5) + cos(k2=1, amp=0.1)
tau = constant(c=1.0)
potential = constant(c=-1.0)
d_tau = cos(k3=1)

[schedule]
start = 1.0
ratio = 0.5
count = 5

[solver]
tol_residual = 1e-9
require_coercive = false

[output]
csv = out.csv
";

    #[test]
    fn parses_and_round_trips() {
        let c = SweepConfig::from_ini_str(SAMPLE).unwrap();
        assert_eq!(c.geometry.resolution, 12);
        assert_eq!(c.schedule.eps, vec![1.0, 0.5, 0.25, 0.125, 0.0625]);
        assert!(!c.solver.options.require_coercive);
        assert!(c.solver.warm_start);
        assert_eq!(c.output.csv, Some(PathBuf::from("out.csv")));
        assert!(c.data.d_psi.is_zero());
        let again = SweepConfig::from_ini_str(&c.to_ini_string()).unwrap();
        assert_eq!(c, again);
        assert_eq!(c.hash(), again.hash());
        assert_eq!(c.hash().len(), 64);
    }

    #[test]
    fn hash_tracks_content() {
        let a = SweepConfig::from_ini_str(SAMPLE).unwrap();
        let b = SweepConfig::from_ini_str(&SAMPLE.replace("resolution = 12", "resolution = 16")).unwrap();
        assert_ne!(a.hash(), b.hash());
    }

    #[test]
    fn rejects_bad_documents() {
        for (from, to) in [
            ("[output]", "[plots]"),
            ("count = 5", "count = 3"),
            ("ratio = 0.5", "ratio = 1.5"),
            ("dim = 3", "dimension = 3"),
            ("require_coercive = false", "require_coercive = no"),
            ("resolution = 12", "resolution = twelve"),
        ] {
            let text = SAMPLE.replace(from, to);
            assert!(SweepConfig::from_ini_str(&text).is_err(), "{to}");
        }
        assert!(SweepConfig::from_ini_str("[schedule]\nvalues = 1, 0.5, 0.5, 0.1\n").is_err());
    }

    #[test]
    fn halving_keeps_endpoints_of_odd_schedules() {
        let s = ScheduleSpec::geometric(1.0, 0.5, 9).unwrap();
        let h = s.halved();
        assert_eq!(h.eps, vec![1.0, 0.25, 0.0625, 0.015625, 0.00390625]);
        assert!(h.validate().is_ok());
    }
}
