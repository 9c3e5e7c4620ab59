//! Line-oriented `key = value` sweep configuration.
//!
//! `#` starts a comment. List keys take comma-separated values, or an
//! integer range `start:stop[:step]` (inclusive). An empty list is allowed and
//! yields a sweep without data rows.

use std::fmt;
use std::str::FromStr;

use super::presets::preset;

/// Experiment kinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Kind {
    /// Largest payload at fixed power; `S_eff = K_a B / (n q)`.
    AchannelSeff,
    /// Minimum `E_b/N0` of threshold detection, with the ALOHA baseline.
    AchannelEbn0,
    /// MMV-AMP per-user miss probability versus `K_a` for each list size.
    AmpMissrate,
    /// COMMA spectral efficiency with known channels, with the Gaussian baseline.
    CommaSeffPerfect,
    /// COMMA spectral efficiency with pilot-based estimation, with the Gaussian baseline.
    CommaSeffEstimated,
    /// Matched-filter bound, antenna scaling law and simulation.
    MfScaling,
    /// Gaussian-signaling baseline alone.
    MimoFbl,
}

impl Kind {
    pub const ALL: [Kind; 7] = [
        Kind::AchannelSeff,
        Kind::AchannelEbn0,
        Kind::AmpMissrate,
        Kind::CommaSeffPerfect,
        Kind::CommaSeffEstimated,
        Kind::MfScaling,
        Kind::MimoFbl,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Kind::AchannelSeff => "achannel-seff",
            Kind::AchannelEbn0 => "achannel-ebn0",
            Kind::AmpMissrate => "amp-missrate",
            Kind::CommaSeffPerfect => "comma-seff-perfect",
            Kind::CommaSeffEstimated => "comma-seff-estimated",
            Kind::MfScaling => "mf-scaling",
            Kind::MimoFbl => "mimo-fbl",
        }
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Kind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Kind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = Kind::ALL.iter().map(|k| k.name()).collect();
                format!("unknown kind `{s}` (expected one of {})", names.join(", "))
            })
    }
}

/// A fully specified sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub kind: Kind,
    pub k_a: Vec<usize>,
    pub q: Vec<usize>,
    /// Blocklength; the largest one searched for the COMMA and baseline kinds.
    pub n: Vec<usize>,
    pub m: Vec<usize>,
    /// Linear power per orthogonal pulse (per symbol for `mimo-fbl` with `q = 1`).
    pub power: Vec<f64>,
    pub b: Vec<u32>,
    pub eps: f64,
    /// Misdetection budget of threshold detection; `p_md = pmd_budget / n`.
    pub pmd_budget: f64,
    pub n_fa_max: usize,
    pub miss_target: f64,
    pub frames: usize,
    pub mc_samples: usize,
    pub fbl_trials: usize,
    pub seed: u64,
    pub gamma: f64,
    pub max_iters: usize,
    pub pilot_blocks: usize,
    pub pilot_pool: usize,
    pub baseline: bool,
    pub aloha: bool,
    pub pfa_zero: bool,
    pub b_max: u32,
    pub baseline_n_max: usize,
    pub alpha: f64,
    pub power_min_db: f64,
    pub power_max_db: f64,
    pub power_step_db: f64,
    pub out: String,
}

impl SweepSpec {
    /// Documented defaults for `kind`.
    pub fn defaults(kind: Kind) -> Self {
        let mut s = SweepSpec {
            kind,
            k_a: vec![10],
            q: vec![256],
            n: vec![117],
            m: vec![1],
            power: vec![10f64.powf(1.5)],
            b: vec![200],
            eps: 0.05,
            pmd_budget: 0.01,
            n_fa_max: 8,
            miss_target: 0.01,
            frames: 200,
            mc_samples: 10_000,
            fbl_trials: 2_000,
            seed: 1,
            gamma: 0.7,
            max_iters: 50,
            pilot_blocks: 1,
            pilot_pool: 1024,
            baseline: true,
            aloha: true,
            pfa_zero: true,
            b_max: 1024,
            baseline_n_max: 0,
            alpha: 0.5,
            power_min_db: -20.0,
            power_max_db: 40.0,
            power_step_db: 0.1,
            out: "sweep.csv".into(),
        };
        match kind {
            Kind::AchannelSeff | Kind::AchannelEbn0 => {}
            Kind::AmpMissrate => {
                s.q = vec![128];
                s.n = vec![23];
                s.m = vec![25];
                s.power = vec![0.7];
                s.n_fa_max = 4;
            }
            Kind::CommaSeffPerfect | Kind::CommaSeffEstimated => {
                s.q = vec![32];
                s.n = vec![24];
                s.m = vec![8];
                s.power = vec![4.0];
                s.b = vec![40];
            }
            Kind::MfScaling => {
                s.q = vec![32];
                s.n = vec![10];
                s.m = vec![32];
                s.power = vec![1.0];
                s.b = vec![40];
            }
            Kind::MimoFbl => {
                s.q = vec![1];
                s.n = vec![2000];
                s.m = vec![1];
                s.power = vec![1.0];
                s.b = vec![100];
            }
        }
        s
    }

    /// Emit the spec as config text that parses back to an equal spec.
    pub fn to_config_text(&self) -> String {
        fn list<T: fmt::Display>(v: &[T]) -> String {
            v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ")
        }
        fn real(x: f64) -> String {
            format!("{x:?}")
        }
        let reals = |v: &[f64]| v.iter().map(|&x| real(x)).collect::<Vec<_>>().join(", ");
        let mut t = String::new();
        let mut kv = |k: &str, v: String| {
            t.push_str(k);
            t.push_str(" = ");
            t.push_str(&v);
            t.push('\n');
        };
        kv("kind", self.kind.to_string());
        kv("k_a", list(&self.k_a));
        kv("q", list(&self.q));
        kv("n", list(&self.n));
        kv("m", list(&self.m));
        kv("power", reals(&self.power));
        kv("b", list(&self.b));
        kv("eps", real(self.eps));
        kv("pmd_budget", real(self.pmd_budget));
        kv("n_fa_max", self.n_fa_max.to_string());
        kv("miss_target", real(self.miss_target));
        kv("frames", self.frames.to_string());
        kv("mc_samples", self.mc_samples.to_string());
        kv("fbl_trials", self.fbl_trials.to_string());
        kv("seed", self.seed.to_string());
        kv("gamma", real(self.gamma));
        kv("max_iters", self.max_iters.to_string());
        kv("pilot_blocks", self.pilot_blocks.to_string());
        kv("pilot_pool", self.pilot_pool.to_string());
        kv("baseline", self.baseline.to_string());
        kv("aloha", self.aloha.to_string());
        kv("pfa_zero", self.pfa_zero.to_string());
        kv("b_max", self.b_max.to_string());
        kv("baseline_n_max", self.baseline_n_max.to_string());
        kv("alpha", real(self.alpha));
        kv("power_min_db", real(self.power_min_db));
        kv("power_max_db", real(self.power_max_db));
        kv("power_step_db", real(self.power_step_db));
        kv("out", self.out.clone());
        t
    }
}

/// One problem found in a config, with its 1-based line number (0 if global).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub line: usize,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.line == 0 {
            write!(f, "{}", self.message)
        } else {
            write!(f, "line {}: {}", self.line, self.message)
        }
    }
}

/// Parse and validate a config that names its own `kind`.
pub fn validate_config(text: &str) -> Result<SweepSpec, Vec<ConfigError>> {
    parse_config(text, None, None)
}

/// Parse a config on top of a preset or the defaults of `default_kind`.
///
/// The base is, in order: the preset, the `kind` key of the text, then
/// `default_kind`. Keys in the text override the base.
pub fn parse_config(text: &str, default_kind: Option<Kind>, preset_name: Option<&str>) -> Result<SweepSpec, Vec<ConfigError>> {
    let mut errors = Vec::new();
    let mut entries: Vec<(usize, String, String)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            errors.push(ConfigError { line, message: format!("expected `key = value`, found `{content}`") });
            continue;
        };
        let key = key.trim().to_string();
        if let Some((first, _, _)) = entries.iter().find(|(_, k, _)| *k == key) {
            errors.push(ConfigError { line, message: format!("duplicate key `{key}` (first set on line {first})") });
            continue;
        }
        entries.push((line, key, value.trim().to_string()));
    }

    let text_kind = entries.iter().find(|(_, k, _)| k == "kind").and_then(|(line, _, v)| match v.parse::<Kind>() {
        Ok(k) => Some(k),
        Err(e) => {
            errors.push(ConfigError { line: *line, message: e });
            None
        }
    });
    let mut spec = match preset_name {
        Some(name) => match preset(name) {
            Some(p) => p,
            None => {
                errors.push(ConfigError { line: 0, message: format!("unknown preset `{name}`") });
                return Err(errors);
            }
        },
        None => match text_kind.or(default_kind) {
            Some(k) => SweepSpec::defaults(k),
            None => {
                if errors.is_empty() {
                    errors.push(ConfigError { line: 0, message: "missing required key `kind`".into() });
                }
                return Err(errors);
            }
        },
    };
    if let Some(k) = text_kind {
        spec.kind = k;
    }

    for (line, key, value) in &entries {
        if let Err(message) = apply(&mut spec, key, value) {
            errors.push(ConfigError { line: *line, message });
        }
    }
    for message in check_ranges(&spec) {
        let line = entries
            .iter()
            .find(|(_, k, _)| message.starts_with(&format!("`{k}`")))
            .map_or(0, |(l, _, _)| *l);
        errors.push(ConfigError { line, message });
    }
    if errors.is_empty() {
        Ok(spec)
    } else {
        errors.sort_by_key(|e| e.line);
        Err(errors)
    }
}

fn scalar<T: FromStr>(key: &str, value: &str, what: &str) -> Result<T, String> {
    value
        .parse::<T>()
        .map_err(|_| format!("`{key}` expects {what}, found `{value}`"))
}

fn int_list<T>(key: &str, value: &str) -> Result<Vec<T>, String>
where
    T: FromStr + TryFrom<u64>,
{
    let mut out = Vec::new();
    for item in value.split(',').map(str::trim) {
        if item.is_empty() {
            if value.trim().is_empty() {
                continue;
            }
            return Err(format!("`{key}` has an empty list element"));
        }
        if item.contains(':') {
            let parts: Vec<&str> = item.split(':').map(str::trim).collect();
            let nums: Result<Vec<u64>, _> = parts.iter().map(|p| p.parse::<u64>()).collect();
            let nums = nums.map_err(|_| format!("`{key}` expects integer ranges like 10:100:10, found `{item}`"))?;
            let (start, stop, step) = match nums.as_slice() {
                [a, b] => (*a, *b, 1),
                [a, b, c] => (*a, *b, *c),
                _ => return Err(format!("`{key}` range `{item}` must be start:stop or start:stop:step")),
            };
            if step == 0 || start > stop {
                return Err(format!("`{key}` range `{item}` is empty or has a zero step"));
            }
            let mut v = start;
            while v <= stop {
                out.push(T::try_from(v).map_err(|_| format!("`{key}` value {v} is out of range"))?);
                v += step;
            }
        } else {
            out.push(scalar::<T>(key, item, "a list of non-negative integers")?);
        }
    }
    Ok(out)
}

fn real_list(key: &str, value: &str) -> Result<Vec<f64>, String> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty() || !value.trim().is_empty())
        .map(|s| scalar::<f64>(key, s, "a list of numbers"))
        .collect()
}

fn boolean(key: &str, value: &str) -> Result<bool, String> {
    match value {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(format!("`{key}` expects true or false, found `{value}`")),
    }
}

fn apply(s: &mut SweepSpec, key: &str, v: &str) -> Result<(), String> {
    match key {
        "kind" => {}
        "k_a" => s.k_a = int_list(key, v)?,
        "q" => s.q = int_list(key, v)?,
        "n" => s.n = int_list(key, v)?,
        "m" => s.m = int_list(key, v)?,
        "power" => s.power = real_list(key, v)?,
        "power_db" => s.power = real_list(key, v)?.into_iter().map(|db| 10f64.powf(db / 10.0)).collect(),
        "b" => s.b = int_list(key, v)?,
        "eps" => s.eps = scalar(key, v, "a number")?,
        "pmd_budget" => s.pmd_budget = scalar(key, v, "a number")?,
        "n_fa_max" => s.n_fa_max = scalar(key, v, "an integer")?,
        "miss_target" => s.miss_target = scalar(key, v, "a number")?,
        "frames" => s.frames = scalar(key, v, "an integer")?,
        "mc_samples" => s.mc_samples = scalar(key, v, "an integer")?,
        "fbl_trials" => s.fbl_trials = scalar(key, v, "an integer")?,
        "seed" => s.seed = scalar(key, v, "an integer")?,
        "gamma" => s.gamma = scalar(key, v, "a number")?,
        "max_iters" => s.max_iters = scalar(key, v, "an integer")?,
        "pilot_blocks" => s.pilot_blocks = scalar(key, v, "an integer")?,
        "pilot_pool" => s.pilot_pool = scalar(key, v, "an integer")?,
        "baseline" => s.baseline = boolean(key, v)?,
        "aloha" => s.aloha = boolean(key, v)?,
        "pfa_zero" => s.pfa_zero = boolean(key, v)?,
        "b_max" => s.b_max = scalar(key, v, "an integer")?,
        "baseline_n_max" => s.baseline_n_max = scalar(key, v, "an integer")?,
        "alpha" => s.alpha = scalar(key, v, "a number")?,
        "power_min_db" => s.power_min_db = scalar(key, v, "a number")?,
        "power_max_db" => s.power_max_db = scalar(key, v, "a number")?,
        "power_step_db" => s.power_step_db = scalar(key, v, "a number")?,
        "out" => {
            if v.is_empty() {
                return Err("`out` must not be empty".into());
            }
            s.out = v.to_string();
        }
        _ => return Err(format!("unknown key `{key}`")),
    }
    Ok(())
}

fn check_ranges(s: &SweepSpec) -> Vec<String> {
    let mut e = Vec::new();
    let unit_open = |x: f64| x > 0.0 && x < 1.0;
    if !(s.gamma > 0.0 && s.gamma <= 1.0) {
        e.push(format!("`gamma` = {} violates the constraint gamma in (0, 1]", s.gamma));
    }
    if !unit_open(s.eps) {
        e.push(format!("`eps` = {} must lie in (0, 1)", s.eps));
    }
    if !unit_open(s.pmd_budget) {
        e.push(format!("`pmd_budget` = {} must lie in (0, 1)", s.pmd_budget));
    }
    if !unit_open(s.miss_target) {
        e.push(format!("`miss_target` = {} must lie in (0, 1)", s.miss_target));
    }
    if !(0.0..=1.0).contains(&s.alpha) {
        e.push(format!("`alpha` = {} must lie in [0, 1]", s.alpha));
    }
    if s.k_a.contains(&0) {
        e.push("`k_a` values must be at least 1".into());
    }
    let min_q = if s.kind == Kind::MimoFbl { 1 } else { 2 };
    if s.q.iter().any(|&q| q < min_q) {
        e.push(format!("`q` values must be at least {min_q}"));
    }
    if s.n.contains(&0) {
        e.push("`n` values must be at least 1".into());
    }
    if s.m.contains(&0) {
        e.push("`m` values must be at least 1".into());
    }
    if s.power.iter().any(|&p| !(p > 0.0) || !p.is_finite()) {
        e.push("`power` values must be positive".into());
    }
    if s.b.iter().any(|&b| b == 0 || b > 4096) {
        e.push("`b` values must lie in 1..=4096".into());
    }
    for (name, v) in [
        ("frames", s.frames),
        ("mc_samples", s.mc_samples),
        ("fbl_trials", s.fbl_trials),
        ("max_iters", s.max_iters),
        ("pilot_blocks", s.pilot_blocks),
        ("pilot_pool", s.pilot_pool),
    ] {
        if v == 0 {
            e.push(format!("`{name}` must be at least 1"));
        }
    }
    if s.b_max == 0 || s.b_max > 4096 {
        e.push("`b_max` must lie in 1..=4096".into());
    }
    if !(s.power_step_db > 0.0) {
        e.push("`power_step_db` must be positive".into());
    }
    if !(s.power_min_db < s.power_max_db) {
        e.push("`power_min_db` must be below power_max_db".into());
    }
    e
}
