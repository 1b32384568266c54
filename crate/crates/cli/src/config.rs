//! Run configuration: a flat `key = value` text format with `[section]` headers, where
//! command-line flags override file values through the same setters.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use serde::{Deserialize, Serialize};
use splda::wdro::TargetMode;
use splda::{NormKind, Regime};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    CubicQuadratic,
    SineBilinear,
    Bilinear,
    KlPlanar,
    KlScalar,
    LinregWdro,
    MlpWdro,
}

impl Family {
    pub fn as_str(&self) -> &'static str {
        match self {
            Family::CubicQuadratic => "cubic_quadratic",
            Family::SineBilinear => "sine_bilinear",
            Family::Bilinear => "bilinear",
            Family::KlPlanar => "kl_planar",
            Family::KlScalar => "kl_scalar",
            Family::LinregWdro => "linreg_wdro",
            Family::MlpWdro => "mlp_wdro",
        }
    }
}

impl FromStr for Family {
    type Err = anyhow::Error;
    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase().replace('-', "_");
        Ok(match norm.as_str() {
            "cubic_quadratic" | "toy_a" => Family::CubicQuadratic,
            "sine_bilinear" | "toy_b" => Family::SineBilinear,
            "bilinear" | "toy_c" => Family::Bilinear,
            "kl_planar" => Family::KlPlanar,
            "kl_scalar" => Family::KlScalar,
            "linreg_wdro" | "linreg" => Family::LinregWdro,
            "mlp_wdro" | "mlp" => Family::MlpWdro,
            _ => bail!("unknown problem family `{s}`"),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Plda,
    Sgda,
    Subgrad,
}

impl FromStr for Method {
    type Err = anyhow::Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim().to_ascii_lowercase().as_str() {
            "plda" | "smoothed_plda" => Method::Plda,
            "sgda" | "smoothed_gda" => Method::Sgda,
            "subgrad" | "subgradient" => Method::Subgrad,
            _ => bail!("unknown method `{s}` (expected plda, sgda or subgrad)"),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Schedule {
    Constant,
    Diminishing,
}

impl FromStr for Schedule {
    type Err = anyhow::Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim() {
            "constant" => Schedule::Constant,
            "diminishing" => Schedule::Diminishing,
            _ => bail!("unknown schedule `{s}` (expected constant or diminishing)"),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemConfig {
    pub family: Family,
    /// Samples (synthetic data).
    pub n: usize,
    pub d: usize,
    pub rho: f64,
    pub p: NormKind,
    pub seed: u64,
    pub target_mode: TargetMode,
    /// LIBSVM file replacing the synthetic regression data.
    pub data: Option<PathBuf>,
    /// Band parameter of the ring classification data.
    pub eta: f64,
    pub trust_radius: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodConfig {
    pub name: Method,
    /// Theory schedule used for every parameter not given explicitly.
    pub regime: Regime,
    pub r: Option<f64>,
    pub lambda: Option<f64>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub force: bool,
    /// Base primal step of the baselines.
    pub step: Option<f64>,
    pub schedule: Schedule,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunOptions {
    pub horizon: usize,
    pub stride: usize,
    pub gs: bool,
    pub os: bool,
    pub potential: bool,
    pub objective: bool,
    pub tol: f64,
    pub inner_target: Option<f64>,
    pub inner_max_iters: Option<usize>,
    pub inner_strict: Option<bool>,
    pub x0: Option<Vec<f64>>,
    pub y0: Option<Vec<f64>>,
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub problem: ProblemConfig,
    pub method: MethodConfig,
    pub run: RunOptions,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            problem: ProblemConfig {
                family: Family::Bilinear,
                n: 100,
                d: 10,
                rho: 1.0,
                p: NormKind::L2,
                seed: 7,
                target_mode: TargetMode::Planted,
                data: None,
                eta: 1.2,
                trust_radius: None,
            },
            method: MethodConfig {
                name: Method::Plda,
                regime: Regime::General,
                r: None,
                lambda: None,
                alpha: None,
                beta: None,
                force: false,
                step: None,
                schedule: Schedule::Diminishing,
            },
            run: RunOptions {
                horizon: 100,
                stride: 1,
                gs: false,
                os: false,
                potential: false,
                objective: true,
                tol: 1e-9,
                inner_target: None,
                inner_max_iters: None,
                inner_strict: None,
                x0: None,
                y0: None,
                out: PathBuf::from("out"),
            },
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    value.trim().parse::<T>().map_err(|e| anyhow!("invalid value `{value}` for `{key}`: {e}"))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.trim() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => bail!("invalid value `{value}` for `{key}`: expected true or false"),
    }
}

fn parse_list(key: &str, value: &str) -> Result<Vec<f64>> {
    value.split(',').map(|v| parse::<f64>(key, v)).collect()
}

fn fmt_list(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(",")
}

impl RunConfig {
    /// Sets `section.key`; the error names the field.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let (p, m, r) = (&mut self.problem, &mut self.method, &mut self.run);
        match key {
            "problem.family" => p.family = parse(key, value)?,
            "problem.n" => p.n = parse(key, value)?,
            "problem.d" => p.d = parse(key, value)?,
            "problem.rho" => p.rho = parse(key, value)?,
            "problem.p" => p.p = parse(key, value)?,
            "problem.seed" => p.seed = parse(key, value)?,
            "problem.target_mode" => p.target_mode = parse(key, value)?,
            "problem.data" => p.data = Some(PathBuf::from(value.trim())),
            "problem.eta" => p.eta = parse(key, value)?,
            "problem.trust_radius" => p.trust_radius = Some(parse(key, value)?),
            "method.name" => m.name = parse(key, value)?,
            "method.regime" => m.regime = parse(key, value)?,
            "method.r" => m.r = Some(parse(key, value)?),
            "method.lambda" => m.lambda = Some(parse(key, value)?),
            "method.alpha" => m.alpha = Some(parse(key, value)?),
            "method.beta" => m.beta = Some(parse(key, value)?),
            "method.force" => m.force = parse_bool(key, value)?,
            "method.step" => m.step = Some(parse(key, value)?),
            "method.schedule" => m.schedule = parse(key, value)?,
            "run.horizon" => r.horizon = parse(key, value)?,
            "run.stride" => r.stride = parse(key, value)?,
            "run.gs" => r.gs = parse_bool(key, value)?,
            "run.os" => r.os = parse_bool(key, value)?,
            "run.potential" => r.potential = parse_bool(key, value)?,
            "run.objective" => r.objective = parse_bool(key, value)?,
            "run.tol" => r.tol = parse(key, value)?,
            "run.inner_target" => r.inner_target = Some(parse(key, value)?),
            "run.inner_max_iters" => r.inner_max_iters = Some(parse(key, value)?),
            "run.inner_strict" => r.inner_strict = Some(parse_bool(key, value)?),
            "run.x0" => r.x0 = Some(parse_list(key, value)?),
            "run.y0" => r.y0 = Some(parse_list(key, value)?),
            "run.out" => r.out = PathBuf::from(value.trim()),
            _ => bail!("unknown config key `{key}`"),
        }
        Ok(())
    }

    /// Applies a config file. Keys inside `[name]` are read as `name.key`.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        let mut section = String::new();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                section = name.trim().to_string();
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("line {}: expected `key = value`, got `{line}`", no + 1))?;
            let key = if section.is_empty() {
                k.trim().to_string()
            } else {
                format!("{section}.{}", k.trim())
            };
            self.set(&key, v).with_context(|| format!("line {}", no + 1))?;
        }
        Ok(())
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut cfg = Self::default();
        cfg.apply_text(&text)?;
        Ok(cfg)
    }

    /// The config in the file format; applying it to the defaults reproduces `self`.
    pub fn to_text(&self) -> String {
        let (p, m, r) = (&self.problem, &self.method, &self.run);
        let mut s = String::new();
        let _ = writeln!(s, "[problem]");
        let _ = writeln!(s, "family = {}", p.family.as_str());
        let _ = writeln!(s, "n = {}\nd = {}\nrho = {:?}\np = {}\nseed = {}", p.n, p.d, p.rho, p.p, p.seed);
        let mode = match p.target_mode {
            TargetMode::Planted => "planted",
            TargetMode::Independent => "independent",
        };
        let _ = writeln!(s, "target_mode = {mode}\neta = {:?}", p.eta);
        if let Some(d) = &p.data {
            let _ = writeln!(s, "data = {}", d.display());
        }
        if let Some(t) = p.trust_radius {
            let _ = writeln!(s, "trust_radius = {t:?}");
        }
        let _ = writeln!(s, "\n[method]");
        let name = match m.name {
            Method::Plda => "plda",
            Method::Sgda => "sgda",
            Method::Subgrad => "subgrad",
        };
        let regime = match m.regime {
            Regime::General => "general",
            Regime::Kl => "kl",
        };
        let _ = writeln!(s, "name = {name}\nregime = {regime}\nforce = {}", m.force);
        for (k, v) in [("r", m.r), ("lambda", m.lambda), ("alpha", m.alpha), ("beta", m.beta), ("step", m.step)] {
            if let Some(v) = v {
                let _ = writeln!(s, "{k} = {v:?}");
            }
        }
        let schedule = match m.schedule {
            Schedule::Constant => "constant",
            Schedule::Diminishing => "diminishing",
        };
        let _ = writeln!(s, "schedule = {schedule}");
        let _ = writeln!(s, "\n[run]");
        let _ = writeln!(
            s,
            "horizon = {}\nstride = {}\ngs = {}\nos = {}\npotential = {}\nobjective = {}\ntol = {:?}",
            r.horizon, r.stride, r.gs, r.os, r.potential, r.objective, r.tol
        );
        if let Some(t) = r.inner_target {
            let _ = writeln!(s, "inner_target = {t:?}");
        }
        if let Some(t) = r.inner_max_iters {
            let _ = writeln!(s, "inner_max_iters = {t}");
        }
        if let Some(t) = r.inner_strict {
            let _ = writeln!(s, "inner_strict = {t}");
        }
        if let Some(x) = &r.x0 {
            let _ = writeln!(s, "x0 = {}", fmt_list(x));
        }
        if let Some(y) = &r.y0 {
            let _ = writeln!(s, "y0 = {}", fmt_list(y));
        }
        let _ = writeln!(s, "out = {}", r.out.display());
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sections_prefix_keys() {
        let mut c = RunConfig::default();
        c.apply_text("[problem]\nfamily = linreg-wdro  # comment\nn = 20\n\n[method]\nlambda = 10\n[run]\nx0 = 0.5, -0.5\n")
            .unwrap();
        assert_eq!(c.problem.family, Family::LinregWdro);
        assert_eq!(c.problem.n, 20);
        assert_eq!(c.method.lambda, Some(10.0));
        assert_eq!(c.run.x0, Some(vec![0.5, -0.5]));
    }

    #[test]
    fn errors_name_the_field() {
        let mut c = RunConfig::default();
        let e = c.apply_text("[problem]\nn = many\n").unwrap_err();
        assert!(format!("{e:#}").contains("problem.n"), "{e:#}");
        let e = c.set("method.gamma", "1").unwrap_err();
        assert!(e.to_string().contains("method.gamma"));
        assert!(c.apply_text("just words").is_err());
    }

    #[test]
    fn text_round_trips() {
        let mut c = RunConfig::default();
        c.apply_text("[problem]\nfamily = mlp\np = inf\ndata = a.svm\n[method]\nname = sgda\nregime = kl\nr = 0.1\nstep = 0.3\n[run]\ny0 = 1e-3,2\ninner_strict = false\n")
            .unwrap();
        let mut back = RunConfig::default();
        back.apply_text(&c.to_text()).unwrap();
        assert_eq!(back, c);
    }
}
