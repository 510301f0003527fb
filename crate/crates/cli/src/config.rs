//! key = value configuration with [section] headers (TOML syntax).

use std::collections::BTreeMap;
use std::fmt;

use corners_core::Complex64;

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, config or parameters: exit 2.
    Config(String),
    /// A computation could not be carried out: exit 1.
    Run(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Run(m) => write!(f, "run error: {m}"),
        }
    }
}

impl From<corners_core::Error> for CliError {
    fn from(e: corners_core::Error) -> Self {
        use corners_core::Error::*;
        match e {
            Contract(_) | Unsupported(_) | Domain(_) => CliError::Config(e.to_string()),
            _ => CliError::Run(e.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

fn bad(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

/// Flattened "section.key" → value. Top-level keys have no section.
#[derive(Clone, Debug, Default)]
pub struct Params {
    values: BTreeMap<String, toml::Value>,
}

impl Params {
    pub fn parse(text: &str) -> CliResult<Self> {
        let table: toml::Table = text.parse().map_err(|e: toml::de::Error| bad(e.to_string()))?;
        let mut values = BTreeMap::new();
        for (k, v) in table {
            match v {
                toml::Value::Table(t) => {
                    for (k2, v2) in t {
                        if v2.is_table() {
                            return Err(bad(format!("nested section [{k}.{k2}] is not supported")));
                        }
                        values.insert(format!("{k}.{k2}"), v2);
                    }
                }
                v => {
                    values.insert(k, v);
                }
            }
        }
        Ok(Params { values })
    }

    pub fn set(&mut self, key: &str, v: toml::Value) {
        self.values.insert(key.to_string(), v);
    }

    pub fn keys(&self) -> impl Iterator<Item = &String> {
        self.values.keys()
    }

    /// Every key must be in `allowed`.
    pub fn reject_unknown(&self, allowed: &[&str]) -> CliResult<()> {
        let unknown: Vec<&String> = self.values.keys().filter(|k| !allowed.contains(&k.as_str())).collect();
        if unknown.is_empty() {
            Ok(())
        } else {
            Err(bad(format!("unknown keys for this command: {unknown:?}")))
        }
    }

    pub fn as_json(&self) -> serde_json::Value {
        serde_json::to_value(&self.values).unwrap_or(serde_json::Value::Null)
    }

    fn raw(&self, key: &str) -> Option<&toml::Value> {
        self.values.get(key)
    }

    fn num(key: &str, v: &toml::Value) -> CliResult<f64> {
        match v {
            toml::Value::Float(x) => Ok(*x),
            toml::Value::Integer(i) => Ok(*i as f64),
            _ => Err(bad(format!("{key}: expected a number, got {v}"))),
        }
    }

    pub fn f64_or(&self, key: &str, default: f64) -> CliResult<f64> {
        self.raw(key).map_or(Ok(default), |v| Self::num(key, v))
    }

    pub fn raw_f64(&self, key: &str) -> CliResult<Option<f64>> {
        self.raw(key).map(|v| Self::num(key, v)).transpose()
    }

    pub fn f64_req(&self, key: &str) -> CliResult<f64> {
        self.raw(key).ok_or_else(|| bad(format!("missing required key {key}"))).and_then(|v| Self::num(key, v))
    }

    fn int(key: &str, v: &toml::Value) -> CliResult<u64> {
        match v {
            toml::Value::Integer(i) if *i >= 0 => Ok(*i as u64),
            _ => Err(bad(format!("{key}: expected a nonnegative integer, got {v}"))),
        }
    }

    pub fn uint_or(&self, key: &str, default: u64) -> CliResult<u64> {
        self.raw(key).map_or(Ok(default), |v| Self::int(key, v))
    }

    pub fn uint_req(&self, key: &str) -> CliResult<u64> {
        self.raw(key).ok_or_else(|| bad(format!("missing required key {key}"))).and_then(|v| Self::int(key, v))
    }

    pub fn str_or<'a>(&'a self, key: &str, default: &'a str) -> CliResult<&'a str> {
        match self.raw(key) {
            None => Ok(default),
            Some(toml::Value::String(s)) => Ok(s),
            Some(v) => Err(bad(format!("{key}: expected a string, got {v}"))),
        }
    }

    pub fn opt_str(&self, key: &str) -> CliResult<Option<&str>> {
        match self.raw(key) {
            None => Ok(None),
            Some(toml::Value::String(s)) => Ok(Some(s)),
            Some(v) => Err(bad(format!("{key}: expected a string, got {v}"))),
        }
    }

    pub fn f64_list_or(&self, key: &str, default: &[f64]) -> CliResult<Vec<f64>> {
        match self.raw(key) {
            None => Ok(default.to_vec()),
            Some(toml::Value::Array(a)) => a.iter().map(|v| Self::num(key, v)).collect(),
            Some(v) => Err(bad(format!("{key}: expected an array of numbers, got {v}"))),
        }
    }

    pub fn uint_list_or(&self, key: &str, default: &[u64]) -> CliResult<Vec<u64>> {
        match self.raw(key) {
            None => Ok(default.to_vec()),
            Some(toml::Value::Array(a)) => a.iter().map(|v| Self::int(key, v)).collect(),
            Some(v) => Err(bad(format!("{key}: expected an array of integers, got {v}"))),
        }
    }

    /// [re, im] pair.
    pub fn complex_opt(&self, key: &str) -> CliResult<Option<Complex64>> {
        match self.raw(key) {
            None => Ok(None),
            Some(toml::Value::Array(a)) if a.len() == 2 => {
                Ok(Some(Complex64::new(Self::num(key, &a[0])?, Self::num(key, &a[1])?)))
            }
            Some(v) => Err(bad(format!("{key}: expected [re, im], got {v}"))),
        }
    }

    /// [[level, re, im], …].
    pub fn points(&self, key: &str) -> CliResult<Vec<(usize, Complex64)>> {
        match self.raw(key) {
            None => Ok(Vec::new()),
            Some(toml::Value::Array(a)) => a
                .iter()
                .map(|row| match row {
                    toml::Value::Array(r) if r.len() == 3 => {
                        let lvl = Self::int(key, &r[0])? as usize;
                        Ok((lvl, Complex64::new(Self::num(key, &r[1])?, Self::num(key, &r[2])?)))
                    }
                    _ => Err(bad(format!("{key}: each point is [level, re, im], got {row}"))),
                })
                .collect(),
            Some(v) => Err(bad(format!("{key}: expected [[level, re, im], …], got {v}"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sections_flatten() {
        let p = Params::parse("command = \"enumerate\"\n[measure]\nn = 2\ntheta = 0.5\npoly = [0, 1.5]\n").unwrap();
        assert_eq!(p.str_or("command", "").unwrap(), "enumerate");
        assert_eq!(p.uint_req("measure.n").unwrap(), 2);
        assert_eq!(p.f64_req("measure.theta").unwrap(), 0.5);
        assert_eq!(p.f64_list_or("measure.poly", &[]).unwrap(), vec![0.0, 1.5]);
        assert!(p.reject_unknown(&["command", "measure.n", "measure.theta"]).is_err());
        assert!(p.uint_req("measure.theta").is_err());
        assert!(p.f64_req("measure.m").is_err());
    }

    #[test]
    fn points_parse() {
        let p = Params::parse("[loop]\npoints = [[1, 3.5, 0.0], [2, 0, 2]]\nv = [0.5, 2]\n").unwrap();
        let pts = p.points("loop.points").unwrap();
        assert_eq!(pts[1], (2, Complex64::new(0.0, 2.0)));
        assert_eq!(p.complex_opt("loop.v").unwrap(), Some(Complex64::new(0.5, 2.0)));
        assert!(Params::parse("[loop]\npoints = [[1, 2]]").unwrap().points("loop.points").is_err());
    }
}
