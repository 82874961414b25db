//! Flat, typed key-value configuration with dotted sections.
//!
//! One `key = value` pair per line, `#` comments, repeated keys allowed only
//! where documented (`observable.term`). Parsing is strict: unknown keys are
//! rejected with their path, and `parse(serialize(parse(text)))` is the
//! identity on the parsed form.

use crate::CliError;
use steindyn::observables::{Observable, Wave};
use steindyn::systems::SystemKind;

#[derive(Clone, Debug, PartialEq)]
pub struct TermRecord {
    pub component: usize,
    pub freq: Vec<i64>,
    pub amp: f64,
    pub wave: Wave,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KPolicy {
    Corollary,
    Optimize,
    Fixed(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Config {
    pub system_kind: String,
    pub matrix: Option<[[i64; 2]; 2]>,
    pub seed: u64,
    pub terms: Vec<TermRecord>,
    pub n_list: Vec<usize>,
    pub samples: usize,
    pub k_policy: KPolicy,
    pub safety: f64,
    pub corr_lag_max: usize,
    pub corr_samples: usize,
    pub bootstrap: usize,
    pub dt: f64,
    pub t_list: Vec<f64>,
    pub scheme_n: usize,
    pub scheme_centers: Vec<usize>,
    pub scheme_gaps: Vec<usize>,
    pub scheme_samples: usize,
    pub out_dir: String,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            system_kind: "doubling".into(),
            matrix: None,
            seed: 1,
            terms: vec![TermRecord { component: 0, freq: vec![1], amp: 1.0, wave: Wave::Cos }],
            n_list: vec![16, 32, 64, 128, 256, 512, 1024, 2048, 4096],
            samples: 100_000,
            k_policy: KPolicy::Corollary,
            safety: 2.0,
            corr_lag_max: 8,
            corr_samples: 1_000_000,
            bootstrap: 200,
            dt: 1.0 / 64.0,
            t_list: vec![16.5, 64.25],
            scheme_n: 256,
            scheme_centers: vec![0, 8, 16],
            scheme_gaps: vec![0, 2, 4, 6, 8],
            scheme_samples: 100_000,
            out_dir: "out".into(),
        }
    }
}

fn bad(path: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Validation(format!("{path}: {msg}"))
}

fn parse_num<T: std::str::FromStr>(path: &str, v: &str) -> Result<T, CliError>
where
    T::Err: std::fmt::Display,
{
    v.trim().parse::<T>().map_err(|e| bad(path, e))
}

fn parse_list<T: std::str::FromStr>(path: &str, v: &str) -> Result<Vec<T>, CliError>
where
    T::Err: std::fmt::Display,
{
    v.split_whitespace().map(|x| parse_num(path, x)).collect()
}

fn parse_term(v: &str) -> Result<TermRecord, CliError> {
    let path = "observable.term";
    let mut component = None;
    let mut freq = None;
    let mut amp = None;
    let mut wave = Wave::Cos;
    for field in v.split_whitespace() {
        let (k, val) = field
            .split_once('=')
            .ok_or_else(|| bad(path, format!("expected key=value, got '{field}'")))?;
        match k {
            "component" => component = Some(parse_num::<usize>(path, val)?),
            "freq" => {
                freq = Some(
                    val.split(',')
                        .map(|x| parse_num::<i64>(path, x))
                        .collect::<Result<Vec<_>, _>>()?,
                )
            }
            "amp" => amp = Some(parse_num::<f64>(path, val)?),
            "wave" => {
                wave = match val {
                    "cos" => Wave::Cos,
                    "sin" => Wave::Sin,
                    other => return Err(bad(path, format!("wave must be cos|sin, got '{other}'"))),
                }
            }
            other => return Err(bad(path, format!("unknown field '{other}'"))),
        }
    }
    Ok(TermRecord {
        component: component.ok_or_else(|| bad(path, "missing component="))?,
        freq: freq.ok_or_else(|| bad(path, "missing freq="))?,
        amp: amp.ok_or_else(|| bad(path, "missing amp="))?,
        wave,
    })
}

impl Config {
    pub fn parse(text: &str) -> Result<Config, CliError> {
        let mut cfg = Config { terms: Vec::new(), ..Config::default() };
        let mut saw_terms = false;
        let mut saw_scheme_centers = false;
        let mut saw_scheme_gaps = false;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| bad(&format!("line {}", lineno + 1), "expected key = value"))?;
            let key = key.trim();
            let value = value.trim();
            match key {
                "system.kind" => cfg.system_kind = value.to_string(),
                "system.matrix" => {
                    let v: Vec<i64> = parse_list(key, value)?;
                    if v.len() != 4 {
                        return Err(bad(key, "expected four integers"));
                    }
                    cfg.matrix = Some([[v[0], v[1]], [v[2], v[3]]]);
                }
                "system.seed" => cfg.seed = parse_num(key, value)?,
                "observable.term" => {
                    saw_terms = true;
                    cfg.terms.push(parse_term(value)?);
                }
                "experiment.n_list" => cfg.n_list = parse_list(key, value)?,
                "experiment.samples" => cfg.samples = parse_num(key, value)?,
                "experiment.k_policy" => {
                    cfg.k_policy = match value {
                        "corollary" => KPolicy::Corollary,
                        "optimize" => KPolicy::Optimize,
                        other => match other.strip_prefix("fixed:") {
                            Some(k) => KPolicy::Fixed(parse_num(key, k)?),
                            None => return Err(bad(key, "expected corollary|optimize|fixed:K")),
                        },
                    }
                }
                "experiment.safety" => cfg.safety = parse_num(key, value)?,
                "experiment.corr_lag_max" => cfg.corr_lag_max = parse_num(key, value)?,
                "experiment.corr_samples" => cfg.corr_samples = parse_num(key, value)?,
                "experiment.bootstrap" => cfg.bootstrap = parse_num(key, value)?,
                "experiment.dt" => cfg.dt = parse_num(key, value)?,
                "experiment.t_list" => cfg.t_list = parse_list(key, value)?,
                "scheme.n" => cfg.scheme_n = parse_num(key, value)?,
                "scheme.centers" => {
                    saw_scheme_centers = true;
                    cfg.scheme_centers = parse_list(key, value)?;
                }
                "scheme.gaps" => {
                    saw_scheme_gaps = true;
                    cfg.scheme_gaps = parse_list(key, value)?;
                }
                "scheme.samples" => cfg.scheme_samples = parse_num(key, value)?,
                "outputs.dir" => cfg.out_dir = value.to_string(),
                other => return Err(bad(other, "unknown key")),
            }
        }
        if !saw_terms {
            cfg.terms = Config::default().terms;
        }
        if !saw_scheme_centers {
            cfg.scheme_centers = Config::default().scheme_centers;
        }
        if !saw_scheme_gaps {
            cfg.scheme_gaps = Config::default().scheme_gaps;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn serialize(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("system.kind = {}\n", self.system_kind));
        if let Some(m) = self.matrix {
            out.push_str(&format!("system.matrix = {} {} {} {}\n", m[0][0], m[0][1], m[1][0], m[1][1]));
        }
        out.push_str(&format!("system.seed = {}\n", self.seed));
        for t in &self.terms {
            let freq = t.freq.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
            let wave = match t.wave {
                Wave::Cos => "cos",
                Wave::Sin => "sin",
            };
            out.push_str(&format!(
                "observable.term = component={} freq={} amp={} wave={}\n",
                t.component, freq, t.amp, wave
            ));
        }
        let nl = self.n_list.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ");
        out.push_str(&format!("experiment.n_list = {nl}\n"));
        out.push_str(&format!("experiment.samples = {}\n", self.samples));
        let kp = match self.k_policy {
            KPolicy::Corollary => "corollary".to_string(),
            KPolicy::Optimize => "optimize".to_string(),
            KPolicy::Fixed(k) => format!("fixed:{k}"),
        };
        out.push_str(&format!("experiment.k_policy = {kp}\n"));
        out.push_str(&format!("experiment.safety = {}\n", self.safety));
        out.push_str(&format!("experiment.corr_lag_max = {}\n", self.corr_lag_max));
        out.push_str(&format!("experiment.corr_samples = {}\n", self.corr_samples));
        out.push_str(&format!("experiment.bootstrap = {}\n", self.bootstrap));
        out.push_str(&format!("experiment.dt = {}\n", self.dt));
        let tl = self.t_list.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ");
        out.push_str(&format!("experiment.t_list = {tl}\n"));
        out.push_str(&format!("scheme.n = {}\n", self.scheme_n));
        let sc = self.scheme_centers.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ");
        out.push_str(&format!("scheme.centers = {sc}\n"));
        let sg = self.scheme_gaps.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ");
        out.push_str(&format!("scheme.gaps = {sg}\n"));
        out.push_str(&format!("scheme.samples = {}\n", self.scheme_samples));
        out.push_str(&format!("outputs.dir = {}\n", self.out_dir));
        out
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.system()?;
        let _ = self.observable()?;
        if self.n_list.is_empty() {
            return Err(bad("experiment.n_list", "must not be empty"));
        }
        for w in self.n_list.windows(2) {
            if w[0] >= w[1] {
                return Err(bad("experiment.n_list", "must be strictly ascending"));
            }
        }
        for &n in &self.n_list {
            if !n.is_power_of_two() || n < 4 {
                return Err(bad("experiment.n_list", format!("{n} is not a power of two ≥ 4")));
            }
            if self.system_kind == "toral" && n > 16384 {
                return Err(bad(
                    "experiment.n_list",
                    format!("{n} exceeds the 2^14 shadowing budget of floating-point toral orbits"),
                ));
            }
            if let KPolicy::Fixed(k) = self.k_policy {
                if k >= n {
                    return Err(bad("experiment.k_policy", format!("fixed K={k} invalid for N={n}")));
                }
            }
        }
        if self.samples < 1000 {
            return Err(bad("experiment.samples", "must be at least 1000"));
        }
        if self.safety.is_nan() || self.safety < 1.0 {
            return Err(bad("experiment.safety", "must be at least 1"));
        }
        if self.corr_lag_max < 2 || self.corr_lag_max > 64 {
            return Err(bad("experiment.corr_lag_max", "must lie in [2, 64]"));
        }
        for w in self.t_list.windows(2) {
            if w[0] >= w[1] {
                return Err(bad("experiment.t_list", "must be strictly ascending"));
            }
        }
        for &t in &self.t_list {
            if t < 1.0 {
                return Err(bad("experiment.t_list", "horizons must be at least 1"));
            }
        }
        for &c in &self.scheme_centers {
            if c > 24 {
                return Err(bad(
                    "scheme.centers",
                    format!("center {c} needs 2^{c} partition cells; the cap is generation 24"),
                ));
            }
            if c >= self.scheme_n {
                return Err(bad("scheme.centers", format!("center {c} must be < scheme.n = {}", self.scheme_n)));
            }
        }
        for &g in &self.scheme_gaps {
            if g >= self.scheme_n {
                return Err(bad("scheme.gaps", format!("gap {g} must be < scheme.n = {}", self.scheme_n)));
            }
        }
        Ok(())
    }

    /// The configured system (validated).
    pub fn system(&self) -> Result<SystemKind, CliError> {
        let kind = match self.system_kind.as_str() {
            "doubling" => SystemKind::Doubling,
            "toral" => SystemKind::Toral {
                m: self.matrix.ok_or_else(|| bad("system.matrix", "required for toral systems"))?,
            },
            "suspension" => SystemKind::Suspension { base: Box::new(SystemKind::Doubling) },
            other => return Err(bad("system.kind", format!("unknown kind '{other}'"))),
        };
        kind.validate().map_err(|e| bad("system", e))?;
        Ok(kind)
    }

    /// The configured observable (validated; rejects the degenerate f ≡ 0,
    /// whose limit variance vanishes).
    pub fn observable(&self) -> Result<Observable, CliError> {
        if self.terms.is_empty() || self.terms.iter().all(|t| t.amp == 0.0) {
            return Err(bad(
                "observable.term",
                "degenerate observable: zero amplitude means zero limit variance (coboundary case)",
            ));
        }
        let coord_dim = match self.system_kind.as_str() {
            "toral" => 2,
            _ => 1,
        };
        let dim = self.terms.iter().map(|t| t.component).max().unwrap() + 1;
        let records: Vec<(usize, Vec<i64>, f64, Wave)> =
            self.terms.iter().map(|t| (t.component, t.freq.clone(), t.amp, t.wave)).collect();
        Observable::trig(coord_dim, dim, &records).map_err(|e| bad("observable.term", e))
    }
}
