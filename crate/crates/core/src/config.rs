//! Plain-text experiment configuration.
//!
//! One `key = value` entry per line with dotted keys; `#` starts a comment.
//! Lists are comma separated. Every key in a file must be read by the command
//! it is given to, so misspelled keys are reported instead of ignored.
//!
//! Model keys:
//!
//! ```text
//! fitness.kind = linear | tabulated | yule
//! fitness.rates = 1, 2, 4          # tabulated only
//! fitness.tail = zero-after-end | constant-last
//! weight.coupling = u-zero | u-one | u-equals-v | independent
//! weight.v.law = point | exponential | uniform | pareto | log-pareto-tail
//! weight.v.value / rate / lo, hi / shape, scale / nu, x0
//! weight.u.*                       # independent coupling only
//! ```

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::fitness::{Coupling, FitnessModel, FitnessSpec, PairSpec, ScalarLaw, TailRule, WeightSpec};

#[derive(Debug, Clone, Default)]
pub struct Config {
    entries: BTreeMap<String, String>,
    read: RefCell<BTreeSet<String>>,
}

impl PartialEq for Config {
    fn eq(&self, other: &Self) -> bool {
        self.entries == other.entries
    }
}

fn valid_key(key: &str) -> bool {
    !key.is_empty()
        && key
            .split('.')
            .all(|part| !part.is_empty() && part.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-'))
}

impl Config {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Config::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let at = format!("line {}", n + 1);
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::config(&at, "expected `key = value`"))?;
            let key = key.trim();
            if !valid_key(key) {
                return Err(Error::config(at, format!("malformed key `{key}`")));
            }
            if cfg.entries.insert(key.to_string(), value.trim().to_string()).is_some() {
                return Err(Error::config(key, "duplicate key"));
            }
        }
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(path.display().to_string(), format!("cannot read: {e}")))?;
        Self::parse(&text)
    }

    pub fn set(&mut self, key: impl Into<String>, value: impl ToString) {
        self.entries.insert(key.into(), value.to_string());
    }

    pub fn contains(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    pub fn entries(&self) -> &BTreeMap<String, String> {
        &self.entries
    }

    /// Raw value, marking the key as read.
    pub fn get(&self, key: &str) -> Option<&str> {
        let v = self.entries.get(key)?;
        self.read.borrow_mut().insert(key.to_string());
        Some(v)
    }

    /// Marks every key under `prefix` as read.
    pub fn mark_read(&self, prefix: &str) {
        let mut read = self.read.borrow_mut();
        for k in self.entries.keys().filter(|k| k.starts_with(prefix)) {
            read.insert(k.clone());
        }
    }

    pub fn value<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: fmt::Display,
    {
        match self.get(key) {
            None => Ok(None),
            Some(s) => s
                .parse()
                .map(Some)
                .map_err(|e| Error::config(key, format!("cannot parse `{s}`: {e}"))),
        }
    }

    pub fn value_or<T: FromStr>(&self, key: &str, default: T) -> Result<T>
    where
        T::Err: fmt::Display,
    {
        Ok(self.value(key)?.unwrap_or(default))
    }

    pub fn require<T: FromStr>(&self, key: &str) -> Result<T>
    where
        T::Err: fmt::Display,
    {
        self.value(key)?.ok_or_else(|| Error::config(key, "missing"))
    }

    pub fn list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>>
    where
        T::Err: fmt::Display,
    {
        let Some(s) = self.get(key) else {
            return Ok(None);
        };
        s.split(',')
            .map(str::trim)
            .filter(|p| !p.is_empty())
            .map(|p| {
                p.parse()
                    .map_err(|e| Error::config(key, format!("cannot parse `{p}`: {e}")))
            })
            .collect::<Result<Vec<T>>>()
            .map(Some)
    }

    pub fn list_or<T: FromStr>(&self, key: &str, default: Vec<T>) -> Result<Vec<T>>
    where
        T::Err: fmt::Display,
    {
        Ok(self.list(key)?.unwrap_or(default))
    }

    pub fn seed(&self) -> Result<u64> {
        self.value("seed")?
            .ok_or_else(|| Error::config("seed", "a seed is required (config key `seed` or --seed)"))
    }

    /// Fails on the first key nothing has read.
    pub fn check_all_read(&self) -> Result<()> {
        let read = self.read.borrow();
        match self.entries.keys().find(|k| !read.contains(*k)) {
            Some(k) => Err(Error::config(k.clone(), "unknown key for this command")),
            None => Ok(()),
        }
    }
}

impl fmt::Display for Config {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in &self.entries {
            writeln!(f, "{k} = {v}")?;
        }
        Ok(())
    }
}

/// Turns a model validation failure into a config error at `key`.
pub fn at<T>(key: &str, r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        Error::InvalidSpec(m) | Error::Domain(m) => Error::config(key, m),
        other => other,
    })
}

pub fn parse_law(cfg: &Config, prefix: &str) -> Result<ScalarLaw> {
    let key = |p: &str| format!("{prefix}.{p}");
    let kind: String = cfg.require(&key("law"))?;
    let law = match kind.as_str() {
        "point" => ScalarLaw::point_mass(cfg.require(&key("value"))?),
        "exponential" => ScalarLaw::exponential(cfg.value_or(&key("rate"), 1.0)?),
        "uniform" => ScalarLaw::uniform(cfg.require(&key("lo"))?, cfg.require(&key("hi"))?),
        "pareto" => ScalarLaw::pareto(cfg.require(&key("shape"))?, cfg.value_or(&key("scale"), 1.0)?),
        "log-pareto-tail" => ScalarLaw::log_pareto_tail(cfg.require(&key("nu"))?, cfg.require(&key("x0"))?),
        other => return Err(Error::config(key("law"), format!("unknown law `{other}`"))),
    };
    at(prefix, law)
}

pub fn render_law(cfg: &mut Config, prefix: &str, law: &ScalarLaw) {
    let key = |p: &str| format!("{prefix}.{p}");
    match law {
        ScalarLaw::PointMass(v) => {
            cfg.set(key("law"), "point");
            cfg.set(key("value"), v);
        }
        ScalarLaw::Exponential { rate } => {
            cfg.set(key("law"), "exponential");
            cfg.set(key("rate"), rate);
        }
        ScalarLaw::Uniform { lo, hi } => {
            cfg.set(key("law"), "uniform");
            cfg.set(key("lo"), lo);
            cfg.set(key("hi"), hi);
        }
        ScalarLaw::Pareto { shape, scale } => {
            cfg.set(key("law"), "pareto");
            cfg.set(key("shape"), shape);
            cfg.set(key("scale"), scale);
        }
        ScalarLaw::LogParetoTail(l) => {
            cfg.set(key("law"), "log-pareto-tail");
            cfg.set(key("nu"), l.nu());
            cfg.set(key("x0"), l.x0());
        }
    }
}

/// Weight pair of a linear model.
pub fn parse_pair(cfg: &Config) -> Result<PairSpec> {
    let coupling = match cfg.get("weight.coupling") {
        None => Coupling::UZero,
        Some(s) => {
            Coupling::parse(s).ok_or_else(|| Error::config("weight.coupling", format!("unknown coupling `{s}`")))?
        }
    };
    let v = parse_law(cfg, "weight.v")?;
    Ok(match coupling {
        Coupling::UZero => PairSpec::wrrt(v),
        Coupling::UOne => PairSpec::additive(v),
        Coupling::UEqualsV => PairSpec::bianconi_barabasi(v),
        Coupling::Independent => PairSpec::independent(parse_law(cfg, "weight.u")?, v),
    })
}

pub fn parse_model(cfg: &Config) -> Result<FitnessModel> {
    let kind = cfg.get("fitness.kind").unwrap_or("linear").to_string();
    match kind.as_str() {
        "linear" => at("weight", FitnessModel::linear(parse_pair(cfg)?)),
        "yule" => Ok(FitnessModel::yule()),
        "tabulated" => {
            let rates = cfg
                .list("fitness.rates")?
                .ok_or_else(|| Error::config("fitness.rates", "missing"))?;
            let tail = match cfg.get("fitness.tail") {
                None => TailRule::ZeroAfterEnd,
                Some(s) => {
                    TailRule::parse(s).ok_or_else(|| Error::config("fitness.tail", format!("unknown tail `{s}`")))?
                }
            };
            at("fitness.rates", FitnessModel::tabulated(rates, tail))
        }
        other => Err(Error::config("fitness.kind", format!("unknown fitness `{other}`"))),
    }
}

/// Model keys that [`parse_model`] reads back into `model`.
pub fn render_model(model: &FitnessModel) -> Config {
    let mut cfg = Config::new();
    match (&model.fitness, &model.weights) {
        (FitnessSpec::Tabulated { rates, tail }, _) => {
            cfg.set("fitness.kind", "tabulated");
            cfg.set(
                "fitness.rates",
                rates.iter().map(|r| r.to_string()).collect::<Vec<_>>().join(", "),
            );
            cfg.set("fitness.tail", tail.as_str());
        }
        (FitnessSpec::Linear, WeightSpec::Pair(pair)) => {
            cfg.set("fitness.kind", "linear");
            cfg.set("weight.coupling", pair.coupling.as_str());
            render_law(&mut cfg, "weight.v", &pair.v);
            if pair.coupling == Coupling::Independent {
                render_law(&mut cfg, "weight.u", &pair.u);
            }
        }
        (FitnessSpec::Linear, WeightSpec::Scalar(v)) => {
            cfg.set("fitness.kind", "linear");
            cfg.set("weight.coupling", Coupling::UZero.as_str());
            render_law(&mut cfg, "weight.v", v);
        }
    }
    cfg
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_lists() {
        let cfg = Config::parse("# heading\nseed = 7\n\ntree.n = 100 # nodes\nbirth.t = 0.25, 0.7,1.5\n").unwrap();
        assert_eq!(cfg.seed().unwrap(), 7);
        assert_eq!(cfg.require::<u64>("tree.n").unwrap(), 100);
        assert_eq!(cfg.list::<f64>("birth.t").unwrap().unwrap(), vec![0.25, 0.7, 1.5]);
        cfg.check_all_read().unwrap();
    }

    #[test]
    fn errors_name_the_key() {
        let err = Config::parse("seed = x").unwrap().seed().unwrap_err();
        assert!(matches!(err, Error::Config { ref key, .. } if key == "seed"));
        let err = Config::parse("seed = 1\nseed = 2").unwrap_err();
        assert!(matches!(err, Error::Config { ref key, .. } if key == "seed"));
        assert!(Config::parse("novalue").is_err());
        assert!(Config::parse("a..b = 1").is_err());
        let cfg = Config::parse("seed = 1\ntree.nn = 3").unwrap();
        cfg.seed().unwrap();
        let err = cfg.check_all_read().unwrap_err();
        assert!(matches!(err, Error::Config { ref key, .. } if key == "tree.nn"));
        assert!(Config::new().seed().is_err());
    }

    #[test]
    fn model_keys() {
        let cfg =
            Config::parse("weight.coupling = u-equals-v\nweight.v.law = uniform\nweight.v.lo = 1\nweight.v.hi = 2")
                .unwrap();
        let m = parse_model(&cfg).unwrap();
        assert_eq!(
            m,
            FitnessModel::bianconi_barabasi(ScalarLaw::uniform(1.0, 2.0).unwrap()).unwrap()
        );
        cfg.check_all_read().unwrap();
        let cfg = Config::parse("weight.v.law = pareto\nweight.v.shape = -1").unwrap();
        assert!(matches!(parse_model(&cfg).unwrap_err(), Error::Config { ref key, .. } if key == "weight.v"));
        let cfg =
            Config::parse("fitness.kind = tabulated\nfitness.rates = 1, 0.5\nfitness.tail = constant-last").unwrap();
        assert_eq!(
            parse_model(&cfg).unwrap(),
            FitnessModel::tabulated(vec![1.0, 0.5], TailRule::ConstantLast).unwrap()
        );
    }
}
