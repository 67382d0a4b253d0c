//! Flat `key = value` run configuration.
//!
//! One pair per line; `#` starts a comment; lists are comma-separated. Unknown,
//! duplicate, or family-irrelevant keys are rejected. Relative paths resolve against
//! the directory holding the config file.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::family::CurveFamily;
use crate::flow::FlowConfig;

/// Every accepted key with its meaning.
pub const KEYS: &[(&str, &str)] = &[
    ("family", "latitude | perturbed | lissajous | file"),
    ("nodes", "number of curve nodes (default 256)"),
    ("theta", "latitude: polar angle in radians"),
    ("amplitude", "perturbed: amplitude ε, |ε| ≤ 0.1"),
    ("modes", "perturbed: comma list of modes in 1..=5"),
    ("seed", "perturbed: random seed (default 0)"),
    ("frequencies", "lissajous: p,q"),
    ("phase", "lissajous: phase (default 0)"),
    ("path", "file: snapshot to start from"),
    ("scheme", "imex | explicit-rk4"),
    ("diff", "fd | fourier"),
    ("dt", "initial step"),
    ("dt_max", "largest step"),
    ("adaptive", "Richardson step control (true/false)"),
    ("error_tol", "local error tolerance"),
    ("cfl", "fraction of the explicit stability bound"),
    ("energy_increase_tol", "energy increase that rejects a step"),
    ("max_halvings", "rejections before a step fails"),
    ("resample_every", "accepted steps between resamplings, 0 = never"),
    ("max_steps", "accepted step limit"),
    ("t_end", "end time or `none`"),
    ("sample_interval", "time between samples or `every-step`"),
    ("kappa_tol", "sup|κ| stop threshold"),
    ("energy_gap_tol", "energy gap stop threshold"),
    ("gradient_tol", "gradient norm stop threshold"),
    ("kappa_ceiling", "sup|κ| that flags a suspected singularity"),
    ("dt_floor", "accepted step that flags a suspected singularity"),
    ("expect_small_energy", "refuse initial energy ≥ 8 (true/false)"),
    ("output_dir", "output directory (default `out`)"),
    (
        "snapshot_every",
        "write every k-th sample as a snapshot, 0 = initial and final only",
    ),
    ("fiber_res", "fiber resolution of the Hopf torus (default 64)"),
    ("export_mesh", "write the final Hopf torus mesh (true/false)"),
    ("check_hopf", "verify the surface identities on the final curve"),
    ("check_residuals", "evaluate the evolution-identity residuals"),
    ("track_moduli", "append modulus columns (default true)"),
];

const FAMILY_KEYS: &[(&str, &[&str])] = &[
    ("latitude", &["theta"]),
    ("perturbed", &["amplitude", "modes", "seed"]),
    ("lissajous", &["frequencies", "phase"]),
    ("file", &["path"]),
];

#[derive(Clone, Debug, Serialize)]
pub struct RunConfig {
    pub family: CurveFamily,
    pub nodes: usize,
    pub flow: FlowConfig,
    pub output_dir: PathBuf,
    pub snapshot_every: usize,
    pub fiber_res: usize,
    pub export_mesh: bool,
    pub check_hopf: bool,
    pub check_residuals: bool,
    pub track_moduli: bool,
}

/// `(value, line)` per key.
pub(crate) type Pairs = BTreeMap<String, (String, usize)>;

/// Splits `key = value` lines, checking keys against `known`.
pub(crate) fn parse_pairs(text: &str, path: &Path, known: &[&str]) -> Result<Pairs> {
    let mut out = Pairs::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                message: format!("expected `key = value`, got `{line}`"),
            });
        };
        let (key, value) = (key.trim(), value.trim());
        if !known.contains(&key) {
            return Err(Error::config(key, format!("unknown key (line {})", i + 1)));
        }
        if out.insert(key.to_string(), (value.to_string(), i + 1)).is_some() {
            return Err(Error::config(key, format!("duplicate key (line {})", i + 1)));
        }
    }
    Ok(out)
}

pub(crate) fn value<T: FromStr>(pairs: &mut Pairs, key: &str) -> Result<Option<T>>
where
    T::Err: Display,
{
    match pairs.remove(key) {
        None => Ok(None),
        Some((v, line)) => v
            .parse()
            .map(Some)
            .map_err(|e| Error::config(key, format!("cannot parse `{v}` (line {line}): {e}"))),
    }
}

pub(crate) fn list<T: FromStr>(pairs: &mut Pairs, key: &str) -> Result<Option<Vec<T>>>
where
    T::Err: Display,
{
    match pairs.remove(key) {
        None => Ok(None),
        Some((v, line)) => v
            .split(',')
            .map(|s| {
                s.trim()
                    .parse()
                    .map_err(|e| Error::config(key, format!("cannot parse `{s}` (line {line}): {e}")))
            })
            .collect::<Result<Vec<T>>>()
            .map(Some),
    }
}

fn required<T: FromStr>(pairs: &mut Pairs, key: &str, family: &str) -> Result<T>
where
    T::Err: Display,
{
    value(pairs, key)?.ok_or_else(|| Error::config(key, format!("required by family `{family}`")))
}

/// `none`-able float.
fn optional_float(pairs: &mut Pairs, key: &str, none: &str, default: Option<f64>) -> Result<Option<f64>> {
    match pairs.get(key) {
        Some((v, _)) if v == none => {
            pairs.remove(key);
            Ok(None)
        }
        _ => Ok(value(pairs, key)?.map(Some).unwrap_or(default)),
    }
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text, path)
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let known: Vec<&str> = KEYS.iter().map(|(k, _)| *k).collect();
        let mut pairs = parse_pairs(text, path, &known)?;
        let base = path.parent().unwrap_or(Path::new("")).to_path_buf();
        let resolve = |p: PathBuf| if p.is_absolute() { p } else { base.join(p) };

        let name: String = value(&mut pairs, "family")?.ok_or_else(|| Error::config("family", "missing"))?;
        let own = FAMILY_KEYS
            .iter()
            .find(|(f, _)| *f == name)
            .ok_or_else(|| Error::config("family", format!("unknown family `{name}`")))?
            .1;
        for (other, keys) in FAMILY_KEYS {
            for key in keys.iter().filter(|k| !own.contains(k)) {
                if pairs.contains_key(*key) {
                    return Err(Error::config(
                        *key,
                        format!("not used by family `{name}` (belongs to `{other}`)"),
                    ));
                }
            }
        }
        let family = match name.as_str() {
            "latitude" => CurveFamily::Latitude {
                theta: required(&mut pairs, "theta", &name)?,
            },
            "perturbed" => CurveFamily::PerturbedGreatCircle {
                amplitude: required(&mut pairs, "amplitude", &name)?,
                modes: list(&mut pairs, "modes")?
                    .ok_or_else(|| Error::config("modes", "required by family `perturbed`"))?,
                seed: value(&mut pairs, "seed")?.unwrap_or(0),
            },
            "lissajous" => {
                let f: Vec<usize> = list(&mut pairs, "frequencies")?
                    .ok_or_else(|| Error::config("frequencies", "required by family `lissajous`"))?;
                let [p, q] = f[..] else {
                    return Err(Error::config("frequencies", "expected two values p,q"));
                };
                CurveFamily::Lissajous {
                    p,
                    q,
                    phase: value(&mut pairs, "phase")?.unwrap_or(0.0),
                }
            }
            _ => CurveFamily::FromFile {
                path: resolve(required(&mut pairs, "path", &name)?),
            },
        };

        let d = FlowConfig::default();
        let flow = FlowConfig {
            scheme: value(&mut pairs, "scheme")?.unwrap_or(d.scheme),
            diff: value(&mut pairs, "diff")?.unwrap_or(d.diff),
            dt: value(&mut pairs, "dt")?.unwrap_or(d.dt),
            dt_max: value(&mut pairs, "dt_max")?.unwrap_or(d.dt_max),
            adaptive: value(&mut pairs, "adaptive")?.unwrap_or(d.adaptive),
            error_tol: value(&mut pairs, "error_tol")?.unwrap_or(d.error_tol),
            cfl: value(&mut pairs, "cfl")?.unwrap_or(d.cfl),
            energy_increase_tol: value(&mut pairs, "energy_increase_tol")?.unwrap_or(d.energy_increase_tol),
            max_halvings: value(&mut pairs, "max_halvings")?.unwrap_or(d.max_halvings),
            resample_every: value(&mut pairs, "resample_every")?.unwrap_or(d.resample_every),
            max_steps: value(&mut pairs, "max_steps")?.unwrap_or(d.max_steps),
            t_end: optional_float(&mut pairs, "t_end", "none", d.t_end)?,
            sample_interval: optional_float(&mut pairs, "sample_interval", "every-step", d.sample_interval)?,
            kappa_tol: value(&mut pairs, "kappa_tol")?.unwrap_or(d.kappa_tol),
            energy_gap_tol: value(&mut pairs, "energy_gap_tol")?.unwrap_or(d.energy_gap_tol),
            gradient_tol: value(&mut pairs, "gradient_tol")?.unwrap_or(d.gradient_tol),
            kappa_ceiling: value(&mut pairs, "kappa_ceiling")?.unwrap_or(d.kappa_ceiling),
            dt_floor: value(&mut pairs, "dt_floor")?.unwrap_or(d.dt_floor),
            expect_small_energy: value(&mut pairs, "expect_small_energy")?.unwrap_or(d.expect_small_energy),
        };
        flow.validate()?;

        let config = RunConfig {
            family,
            nodes: value(&mut pairs, "nodes")?.unwrap_or(256),
            flow,
            output_dir: resolve(value(&mut pairs, "output_dir")?.unwrap_or_else(|| PathBuf::from("out"))),
            snapshot_every: value(&mut pairs, "snapshot_every")?.unwrap_or(0),
            fiber_res: value(&mut pairs, "fiber_res")?.unwrap_or(64),
            export_mesh: value(&mut pairs, "export_mesh")?.unwrap_or(false),
            check_hopf: value(&mut pairs, "check_hopf")?.unwrap_or(false),
            check_residuals: value(&mut pairs, "check_residuals")?.unwrap_or(false),
            track_moduli: value(&mut pairs, "track_moduli")?.unwrap_or(true),
        };
        debug_assert!(pairs.is_empty(), "unconsumed keys {pairs:?}");
        if config.fiber_res < crate::hopf::MIN_FIBER_RES {
            return Err(Error::config(
                "fiber_res",
                format!("must be at least {}", crate::hopf::MIN_FIBER_RES),
            ));
        }
        Ok(config)
    }
}

/// Configuration of `verify-all`: `criteria` (comma list, default all) and `output_dir`.
#[derive(Clone, Debug, Serialize)]
pub struct VerifyConfig {
    pub criteria: Vec<u8>,
    pub output_dir: Option<PathBuf>,
}

impl VerifyConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text, path)
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let mut pairs = parse_pairs(text, path, &["criteria", "output_dir"])?;
        let all: Vec<u8> = crate::acceptance::CRITERIA.iter().map(|(id, _)| *id).collect();
        let criteria = match pairs.get("criteria") {
            Some((v, _)) if v == "all" => {
                pairs.remove("criteria");
                all.clone()
            }
            _ => list(&mut pairs, "criteria")?.unwrap_or_else(|| all.clone()),
        };
        if let Some(bad) = criteria.iter().find(|id| !all.contains(id)) {
            return Err(Error::config("criteria", format!("no criterion {bad}")));
        }
        let base = path.parent().unwrap_or(Path::new(""));
        let output_dir = value::<PathBuf>(&mut pairs, "output_dir")?.map(|p| base.join(p));
        Ok(Self { criteria, output_dir })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::TimeScheme;

    fn parse(text: &str) -> Result<RunConfig> {
        RunConfig::parse(text, Path::new("/tmp/run.cfg"))
    }

    #[test]
    fn full_config() {
        let c = parse(
            "# latitude run\nfamily = latitude\ntheta = 1.0471975511965976\nnodes = 128\n\
             scheme = explicit-rk4\ndiff = fourier\nt_end = 2.5 # comment\nsample_interval = every-step\n\
             output_dir = res\ncheck_hopf = true\n",
        )
        .unwrap();
        assert_eq!(c.nodes, 128);
        assert_eq!(c.flow.scheme, TimeScheme::ExplicitRk4);
        assert_eq!(c.flow.t_end, Some(2.5));
        assert_eq!(c.flow.sample_interval, None);
        assert_eq!(c.output_dir, PathBuf::from("/tmp/res"));
        assert!(c.check_hopf && c.track_moduli);
    }

    #[test]
    fn errors_name_the_key() {
        let key = |text: &str| match parse(text) {
            Err(Error::Config { key, .. }) => key,
            other => panic!("{other:?}"),
        };
        assert_eq!(key("family = latitude\ntheta = 1\nbogus = 3\n"), "bogus");
        assert_eq!(key("family = latitude\ntheta = 1\ntheta = 2\n"), "theta");
        assert_eq!(key("family = latitude\ntheta = abc\n"), "theta");
        assert_eq!(key("family = latitude\n"), "theta");
        assert_eq!(key("family = latitude\ntheta = 1\namplitude = 0.1\n"), "amplitude");
        assert_eq!(key("family = latitude\ntheta = 1\ndt = -1\n"), "dt");
        assert_eq!(key("family = blob\n"), "family");
        assert_eq!(key("family = lissajous\nfrequencies = 1\n"), "frequencies");
    }

    #[test]
    fn syntax_error_has_line() {
        match parse("family = latitude\n\njunk\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn verify_config() {
        let c = VerifyConfig::parse("criteria = 2, 9\n", Path::new("/tmp/v.cfg")).unwrap();
        assert_eq!(c.criteria, vec![2, 9]);
        assert_eq!(VerifyConfig::parse("", Path::new("v")).unwrap().criteria.len(), 12);
        assert!(matches!(
            VerifyConfig::parse("criteria = 13\n", Path::new("v")),
            Err(Error::Config { key, .. }) if key == "criteria"
        ));
        assert!(matches!(
            VerifyConfig::parse("fast = yes\n", Path::new("v")),
            Err(Error::Config { key, .. }) if key == "fast"
        ));
    }

    #[test]
    fn every_documented_key_is_accepted() {
        let known: Vec<&str> = KEYS.iter().map(|(k, _)| *k).collect();
        let text: String = known.iter().map(|k| format!("{k} = x\n")).collect();
        let pairs = parse_pairs(&text, Path::new("x"), &known).unwrap();
        assert_eq!(pairs.len(), KEYS.len());
    }
}
