//! Flat `key[unit] = value` run configuration.

use std::collections::BTreeMap;
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Number,
    Count,
    Text,
    List,
}

#[derive(Debug, Clone, Copy)]
pub struct Field {
    pub key: &'static str,
    /// Required unit suffix; `None` for counts, names and ratios.
    pub unit: Option<&'static str>,
    pub kind: Kind,
    pub default: &'static str,
}

const fn num(key: &'static str, unit: &'static str, default: &'static str) -> Field {
    Field { key, unit: Some(unit), kind: Kind::Number, default }
}

const fn ratio(key: &'static str, default: &'static str) -> Field {
    Field { key, unit: None, kind: Kind::Number, default }
}

const fn count(key: &'static str, default: &'static str) -> Field {
    Field { key, unit: None, kind: Kind::Count, default }
}

const fn text(key: &'static str, default: &'static str) -> Field {
    Field { key, unit: None, kind: Kind::Text, default }
}

const fn list(key: &'static str, default: &'static str) -> Field {
    Field { key, unit: None, kind: Kind::List, default }
}

const RB87: &str = "1.4e-25";

pub const AMPLITUDES: &[Field] = &[
    text("scenario", "amplitudes"),
    num("mass", "kg", RB87),
    num("gamma", "rad/s", "0"),
    num("delta", "rad/s", "0"),
    num("strength", "m/s", "1"),
    text("layout", "single"),
    num("separation", "m", "1e-6"),
    num("velocity_min", "m/s", "0.01"),
    num("velocity_max", "m/s", "10"),
    count("points", "2001"),
    text("spacing", "log"),
];

pub const RAMSEY: &[Field] = &[
    text("scenario", "ramsey"),
    num("mass", "kg", RB87),
    num("strength", "m/s", "1"),
    num("velocity", "m/s", "10"),
    num("crossing_time", "s", "0.01"),
    ratio("fringes", "3"),
    count("points", "1201"),
];

pub const DETECTION: &[Field] = &[
    text("scenario", "detection"),
    text("mode", "distributions"),
    num("mass", "kg", RB87),
    num("gamma", "rad/s", "165944127.4448547"),
    num("delta", "rad/s", "0"),
    num("strength", "m/s", "0.35355339059327373"),
    num("velocity", "m/s", "0.5"),
    ratio("spread", "0.1"),
    count("nodes", "512"),
    ratio("window", "12"),
    count("time_points", "2048"),
    text("distributions", "first_photon,normalized_rate,ideal_density,ideal_ked,kijowski,flux"),
    text("limit", "density_fluorescence"),
    list("depths", "10,40,160"),
];

pub const ORACLE: &[Field] = &[
    text("scenario", "oracle"),
    text("study", "delta_limit"),
    num("mass", "kg", RB87),
    num("gamma", "rad/s", "0"),
    num("delta", "rad/s", "0"),
    num("strength", "m/s", "1"),
    num("velocity", "m/s", "0.5"),
    text("layout", "single"),
    num("separation", "m", "0"),
    num("width_start", "m", "0"),
    ratio("spread", "0.1"),
    num("duration", "s", "0"),
    num("dt", "s", "0"),
    num("dx_start", "m", "0"),
    count("rungs", "5"),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Amplitudes,
    Ramsey,
    Detection,
    Oracle,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Amplitudes => "amplitudes",
            Command::Ramsey => "ramsey",
            Command::Detection => "detection",
            Command::Oracle => "oracle",
        }
    }

    pub fn schema(self) -> &'static [Field] {
        match self {
            Command::Amplitudes => AMPLITUDES,
            Command::Ramsey => RAMSEY,
            Command::Detection => DETECTION,
            Command::Oracle => ORACLE,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub key: String,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(line) = self.line {
            write!(f, "line {line}: ")?;
        }
        if self.key.is_empty() {
            write!(f, "{}", self.message)
        } else {
            write!(f, "key `{}`: {}", self.key, self.message)
        }
    }
}

impl std::error::Error for ConfigError {}

fn err(line: Option<usize>, key: &str, message: impl Into<String>) -> ConfigError {
    ConfigError { line, key: key.to_string(), message: message.into() }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Number(f64),
    Count(usize),
    Text(String),
    List(Vec<f64>),
}

/// Resolved configuration: every schema key with a validated value.
#[derive(Debug, Clone)]
pub struct RunConfig {
    schema: &'static [Field],
    raw: BTreeMap<&'static str, String>,
    values: BTreeMap<&'static str, Value>,
}

fn parse_value(field: &Field, raw: &str, line: Option<usize>) -> Result<Value, ConfigError> {
    let number = |s: &str| -> Result<f64, ConfigError> {
        let v: f64 = s.trim().parse().map_err(|_| err(line, field.key, format!("`{s}` is not a number")))?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(err(line, field.key, "value must be finite"))
        }
    };
    Ok(match field.kind {
        Kind::Number => Value::Number(number(raw)?),
        Kind::Count => Value::Count(
            raw.trim().parse().map_err(|_| err(line, field.key, format!("`{raw}` is not a non-negative integer")))?,
        ),
        Kind::Text => Value::Text(raw.trim().to_string()),
        Kind::List => Value::List(raw.split(',').map(number).collect::<Result<_, _>>()?),
    })
}

/// Splits `name[unit]` into its parts.
fn split_key(key: &str) -> (&str, Option<&str>) {
    match key.find('[') {
        Some(i) if key.ends_with(']') => (key[..i].trim(), Some(&key[i + 1..key.len() - 1])),
        _ => (key.trim(), None),
    }
}

impl RunConfig {
    pub fn defaults(schema: &'static [Field]) -> Self {
        let mut cfg = Self { schema, raw: BTreeMap::new(), values: BTreeMap::new() };
        for f in schema {
            let v = parse_value(f, f.default, None).expect("schema defaults parse");
            cfg.raw.insert(f.key, f.default.to_string());
            cfg.values.insert(f.key, v);
        }
        cfg
    }

    /// Applies one `key[unit]` assignment.
    pub fn assign(&mut self, key: &str, value: &str, line: Option<usize>) -> Result<(), ConfigError> {
        let (name, unit) = split_key(key);
        let field = self
            .schema
            .iter()
            .find(|f| f.key == name)
            .ok_or_else(|| err(line, name, "unknown key"))?;
        match (field.unit, unit) {
            (Some(want), Some(got)) if want == got => {}
            (Some(want), Some(got)) => return Err(err(line, name, format!("expected unit [{want}], got [{got}]"))),
            (Some(want), None) => return Err(err(line, name, format!("missing unit suffix [{want}]"))),
            (None, Some(got)) => return Err(err(line, name, format!("takes no unit, got [{got}]"))),
            (None, None) => {}
        }
        let v = parse_value(field, value, line)?;
        self.raw.insert(field.key, value.trim().to_string());
        self.values.insert(field.key, v);
        Ok(())
    }

    /// Applies a config file body: one assignment per line, `#` comments.
    pub fn apply_text(&mut self, text: &str) -> Result<(), ConfigError> {
        for (i, line) in text.lines().enumerate() {
            let body = line.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let (key, value) = body
                .split_once('=')
                .ok_or_else(|| err(Some(i + 1), "", format!("expected `key[unit] = value`, got `{body}`")))?;
            self.assign(key.trim(), value, Some(i + 1))?;
        }
        Ok(())
    }

    /// Applies a `--set key[unit]=value` override.
    pub fn apply_override(&mut self, spec: &str) -> Result<(), ConfigError> {
        let (key, value) =
            spec.split_once('=').ok_or_else(|| err(None, "", format!("--set expects key=value, got `{spec}`")))?;
        self.assign(key.trim(), value, None)
    }

    pub fn number(&self, key: &str) -> f64 {
        match self.values.get(key) {
            Some(Value::Number(v)) => *v,
            other => panic!("schema key {key} is not a number: {other:?}"),
        }
    }

    pub fn count(&self, key: &str) -> usize {
        match self.values.get(key) {
            Some(Value::Count(v)) => *v,
            other => panic!("schema key {key} is not a count: {other:?}"),
        }
    }

    pub fn text(&self, key: &str) -> &str {
        match self.values.get(key) {
            Some(Value::Text(v)) => v,
            other => panic!("schema key {key} is not text: {other:?}"),
        }
    }

    pub fn list(&self, key: &str) -> &[f64] {
        match self.values.get(key) {
            Some(Value::List(v)) => v,
            other => panic!("schema key {key} is not a list: {other:?}"),
        }
    }

    /// `key[unit]` → value text, in key order.
    pub fn snapshot(&self) -> BTreeMap<String, String> {
        self.schema
            .iter()
            .map(|f| {
                let key = match f.unit {
                    Some(u) => format!("{}[{u}]", f.key),
                    None => f.key.to_string(),
                };
                (key, self.raw[f.key].clone())
            })
            .collect()
    }

    /// Rejects a value outside `allowed`.
    pub fn choice(&self, key: &str, allowed: &[&str]) -> Result<&str, ConfigError> {
        let v = self.text(key);
        if allowed.contains(&v) {
            Ok(v)
        } else {
            Err(err(None, key, format!("`{v}` is not one of {}", allowed.join(", "))))
        }
    }

    pub fn invalid(&self, key: &str, message: impl Into<String>) -> ConfigError {
        err(None, key, message)
    }
}
