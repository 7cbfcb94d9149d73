//! Run configuration: flat `key = value` files whose keys mirror the CLI flags.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mr::{ThresholdMode, ThresholdPolicy};
use crate::physics::GlmParams;
use crate::problems::Problem;

pub const MIN_LEVEL: u8 = 3;
pub const MAX_LEVEL: u8 = 12;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    #[default]
    FvUniform,
    Mr,
}

impl Mode {
    pub fn id(&self) -> &'static str {
        match self {
            Mode::FvUniform => "fv-uniform",
            Mode::Mr => "mr",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fv-uniform" | "fv" => Ok(Mode::FvUniform),
            "mr" => Ok(Mode::Mr),
            _ => Err(Error::Config(format!("unknown mode `{s}`"))),
        }
    }
}

impl FromStr for ThresholdMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "constant" => Ok(ThresholdMode::Constant),
            "harten" => Ok(ThresholdMode::Harten),
            _ => Err(Error::Config(format!("unknown threshold mode `{s}`"))),
        }
    }
}

impl fmt::Display for ThresholdMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ThresholdMode::Constant => "constant",
            ThresholdMode::Harten => "harten",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct RunConfig {
    pub problem: Problem,
    pub mode: Mode,
    /// Finest level `L`; the uniform grid has `2^L x 2^L` cells.
    pub level: u8,
    pub threshold_mode: ThresholdMode,
    pub epsilon: f64,
    pub epsilon0: f64,
    pub gamma: f64,
    pub cfl: f64,
    pub cp2_over_ch: f64,
    pub t_end: f64,
    pub snapshots: Vec<f64>,
    pub out: PathBuf,
    pub psi_damp_per_stage: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        let glm = GlmParams::default();
        Self {
            problem: Problem::Riemann2d,
            mode: Mode::FvUniform,
            level: 7,
            threshold_mode: ThresholdMode::Harten,
            epsilon: 0.01,
            epsilon0: 0.01,
            gamma: glm.gamma,
            cfl: glm.c_cfl,
            cp2_over_ch: glm.cp2_over_ch,
            t_end: 0.1,
            snapshots: Vec::new(),
            out: PathBuf::from("out"),
            psi_damp_per_stage: false,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("bad value `{value}` for `{key}`")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "1" | "yes" | "on" => Ok(true),
        "false" | "0" | "no" | "off" => Ok(false),
        _ => Err(Error::Config(format!("bad value `{value}` for `{key}`"))),
    }
}

/// Comma-separated list of times; empty for none.
pub fn parse_times(value: &str) -> Result<Vec<f64>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse("snapshots", s))
        .collect()
}

impl RunConfig {
    /// Set one key; keys are the long CLI flag names without dashes prefix.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key.trim() {
            "problem" => self.problem = value.parse()?,
            "mode" => self.mode = value.parse()?,
            "level" => self.level = parse(key, value)?,
            "threshold-mode" => self.threshold_mode = value.parse()?,
            "epsilon" => self.epsilon = parse(key, value)?,
            "epsilon0" => self.epsilon0 = parse(key, value)?,
            "gamma" => self.gamma = parse(key, value)?,
            "cfl" => self.cfl = parse(key, value)?,
            "cp2-over-ch" => self.cp2_over_ch = parse(key, value)?,
            "t-end" => self.t_end = parse(key, value)?,
            "snapshots" => self.snapshots = parse_times(value)?,
            "out" => self.out = PathBuf::from(value),
            "psi-damp-per-stage" => self.psi_damp_per_stage = parse_bool(key, value)?,
            other => return Err(Error::Config(format!("unknown key `{other}`"))),
        }
        Ok(())
    }

    /// Apply a `key = value` file on top of `self`. Blank lines and lines
    /// starting with `#` are ignored.
    pub fn apply_kv(&mut self, text: &str) -> Result<()> {
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", n + 1)))?;
            self.set(k, v)?;
        }
        Ok(())
    }

    pub fn from_kv(text: &str) -> Result<Self> {
        let mut c = Self::default();
        c.apply_kv(text)?;
        Ok(c)
    }

    pub fn to_kv(&self) -> String {
        let snaps: Vec<String> = self.snapshots.iter().map(|t| t.to_string()).collect();
        format!(
            "problem = {}\nmode = {}\nlevel = {}\nthreshold-mode = {}\nepsilon = {}\nepsilon0 = {}\n\
             gamma = {}\ncfl = {}\ncp2-over-ch = {}\nt-end = {}\nsnapshots = {}\nout = {}\n\
             psi-damp-per-stage = {}\n",
            self.problem,
            self.mode,
            self.level,
            self.threshold_mode,
            self.epsilon,
            self.epsilon0,
            self.gamma,
            self.cfl,
            self.cp2_over_ch,
            self.t_end,
            snaps.join(","),
            self.out.display(),
            self.psi_damp_per_stage
        )
    }

    pub fn validate(&self) -> Result<()> {
        if !(MIN_LEVEL..=MAX_LEVEL).contains(&self.level) {
            return Err(Error::Config(format!(
                "level {} outside [{MIN_LEVEL}, {MAX_LEVEL}]",
                self.level
            )));
        }
        if !(self.t_end > 0.0) || !self.t_end.is_finite() {
            return Err(Error::Config(format!("t-end must be positive (got {})", self.t_end)));
        }
        if !(self.epsilon >= 0.0) || !(self.epsilon0 >= 0.0) {
            return Err(Error::Config("thresholds must be non-negative".into()));
        }
        if let Some(t) = self.snapshots.iter().find(|t| !(**t >= 0.0) || **t > self.t_end) {
            return Err(Error::Config(format!("snapshot time {t} outside [0, t-end]")));
        }
        self.glm().validate()
    }

    pub fn glm(&self) -> GlmParams {
        GlmParams {
            c_cfl: self.cfl,
            ch: GlmParams::default().ch,
            cp2_over_ch: self.cp2_over_ch,
            gamma: self.gamma,
        }
    }

    pub fn threshold_policy(&self) -> ThresholdPolicy {
        let area = self.problem.domain().area();
        match self.threshold_mode {
            ThresholdMode::Constant => ThresholdPolicy {
                domain_area: area,
                ..ThresholdPolicy::constant(self.epsilon, self.level)
            },
            ThresholdMode::Harten => ThresholdPolicy::harten(self.epsilon0, area, self.level),
        }
    }
}
