//! Value parsers and the key=value config file. Flags always win over the file.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use desboves::bifurcation::Rect;
use desboves::julia::SliceChart;
use desboves::measure::LyapunovMethod;
use desboves::misiurewicz::Target;
use num_complex::Complex64;

use crate::CliError;

/// Parses `2`, `-0.5+0.2i`, `3i`, `1e-3-2i` or `re,im`.
pub fn parse_complex(s: &str) -> Result<Complex64, String> {
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    let bad = || format!("cannot parse complex number '{s}'");
    if let Some((re, im)) = t.split_once(',') {
        return Ok(Complex64::new(re.parse().map_err(|_| bad())?, im.parse().map_err(|_| bad())?));
    }
    let Some(body) = t.strip_suffix('i') else {
        return t.parse::<f64>().map(|re| Complex64::new(re, 0.0)).map_err(|_| bad());
    };
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&k| (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    let (re, im) = match split {
        Some(k) => (&body[..k], &body[k..]),
        None => ("0", body),
    };
    let im = match im {
        "" | "+" => "1",
        "-" => "-1",
        other => other,
    };
    Ok(Complex64::new(re.parse().map_err(|_| bad())?, im.parse().map_err(|_| bad())?))
}

pub fn parse_rect(s: &str) -> Result<Rect, String> {
    let v: Vec<f64> = s.split(',').map(|x| x.trim().parse::<f64>()).collect::<Result<_, _>>().map_err(|_| format!("cannot parse rectangle '{s}'"))?;
    let [a, b, c, d] = v[..] else {
        return Err(format!("rectangle needs re_min,re_max,im_min,im_max, got '{s}'"));
    };
    Rect::new(a, b, c, d).map_err(|e| e.to_string())
}

pub fn parse_chart(s: &str) -> Result<SliceChart, String> {
    match s.to_ascii_lowercase().as_str() {
        "x" => Ok(SliceChart::X),
        "y" => Ok(SliceChart::Y),
        "z" => Ok(SliceChart::Z),
        other => match other.strip_prefix("fiber:") {
            Some(w) => Ok(SliceChart::Fiber { w: parse_complex(w)? }),
            None => Err(format!("unknown chart '{s}' (expected x, y, z or fiber:<w>)")),
        },
    }
}

pub fn parse_method(s: &str) -> Result<LyapunovMethod, String> {
    match s {
        "critical" => Ok(LyapunovMethod::CriticalOrbits),
        "cloud" => Ok(LyapunovMethod::CloudAverage),
        _ => Err(format!("unknown method '{s}' (expected critical or cloud)")),
    }
}

pub fn parse_targets(s: &str) -> Result<Vec<Target>, String> {
    match s {
        "x0" => Ok(vec![Target::X0]),
        "z0" => Ok(vec![Target::Z0]),
        "both" => Ok(Target::BOTH.to_vec()),
        _ => Err(format!("unknown target '{s}' (expected x0, z0 or both)")),
    }
}

pub fn parse_list(s: &str) -> Result<Vec<f64>, String> {
    s.split(',').map(|x| x.trim().parse::<f64>().map_err(|_| format!("cannot parse list '{s}'"))).collect()
}

pub fn parse_from_str<T: FromStr>(s: &str) -> Result<T, String> {
    s.trim().parse().map_err(|_| format!("cannot parse '{s}'"))
}

/// Entries of a config file: `key = value` lines, `#` comments, keys named as the long flags.
#[derive(Debug, Default)]
pub struct ConfigFile {
    entries: BTreeMap<String, String>,
}

impl ConfigFile {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut entries = BTreeMap::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(CliError::Config(format!("config line {}: expected key = value", n + 1)));
            };
            entries.insert(k.trim().replace('_', "-"), v.trim().to_string());
        }
        Ok(ConfigFile { entries })
    }

    /// The flag value if given, else the parsed file entry, else None.
    pub fn pick<T>(&self, flag: Option<T>, key: &str, parse: impl Fn(&str) -> Result<T, String>) -> Result<Option<T>, CliError> {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.entries.get(key) {
            Some(v) => parse(v).map(Some).map_err(|e| CliError::Config(format!("{key}: {e}"))),
            None => Ok(None),
        }
    }

    /// As [`ConfigFile::pick`] for a flag still in string form.
    pub fn pick_str<T>(&self, flag: Option<&str>, key: &str, parse: impl Fn(&str) -> Result<T, String>) -> Result<Option<T>, CliError> {
        let flag = flag.map(&parse).transpose().map_err(|e| CliError::Config(format!("--{key}: {e}")))?;
        self.pick(flag, key, parse)
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }
}
