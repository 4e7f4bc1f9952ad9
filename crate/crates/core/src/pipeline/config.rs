use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::data::Target;
use crate::enrich::EnrichParams;
use crate::forest::ForestParams;
use crate::preselect::PreselectParams;
use crate::select::{SelectParams, SolveOptions};
use crate::{Error, Result};

/// Where the forest's training error for the selection program comes from.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitError {
    /// Forest predictions on its own training data.
    Resubstitution,
    /// Out-of-bag votes; falls back to resubstitution without OOB votes.
    #[default]
    Oob,
}

#[derive(Clone, Debug, PartialEq)]
pub enum DataSource {
    /// Generated XOR data with this many rows.
    Xor(usize),
    Csv {
        path: PathBuf,
        target: String,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct CvParams {
    pub splits: usize,
    pub train_ratio: f64,
}

impl Default for CvParams {
    fn default() -> Self {
        CvParams {
            splits: 10,
            train_ratio: 0.7,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PipelineConfig {
    pub seed: u64,
    pub data: DataSource,
    pub forest: ForestParams,
    pub preselect: PreselectParams,
    pub select: SelectParams,
    pub solve: SolveOptions,
    pub enrich: EnrichParams,
    pub cv: CvParams,
    pub init_error: InitError,
    pub parallel: bool,
    pub export_lp: bool,
    pub output: PathBuf,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            seed: 42,
            data: DataSource::Xor(840),
            forest: ForestParams::default(),
            preselect: PreselectParams::default(),
            select: SelectParams::default(),
            solve: SolveOptions::default(),
            enrich: EnrichParams::default(),
            cv: CvParams::default(),
            init_error: InitError::default(),
            parallel: cfg!(feature = "parallel"),
            export_lp: false,
            output: PathBuf::from("ruleforest-out"),
        }
    }
}

fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::InvalidParam(format!("{key}: cannot parse {v:?}")))
}

fn flag(key: &str, v: &str) -> Result<bool> {
    match v {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(Error::InvalidParam(format!("{key}: expected a boolean, got {v:?}"))),
    }
}

impl PipelineConfig {
    /// Reads an INI file (`key = value`, optional `[section]` headers that
    /// prefix keys as `section.key`) over the defaults. Relative data and
    /// output paths resolve against the file's directory.
    pub fn from_ini_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_ini_str(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        if let DataSource::Csv { path: p, .. } = &mut cfg.data {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        if cfg.output.is_relative() {
            cfg.output = base.join(&cfg.output);
        }
        Ok(cfg)
    }

    pub fn from_ini_str(text: &str) -> Result<Self> {
        let ini = ini::Ini::load_from_str(text).map_err(|e| Error::Parse(format!("config: {e}")))?;
        let mut cfg = PipelineConfig::default();
        for (section, props) in ini.iter() {
            for (k, v) in props.iter() {
                let key = match section {
                    Some(s) => format!("{s}.{k}"),
                    None => k.to_string(),
                };
                cfg.set(&key, v)?;
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Applies one `key=value` override; keys are those of the INI file.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key.trim() {
            "seed" => self.seed = num(key, v)?,
            "data" => {
                self.data = if v == "xor" {
                    DataSource::Xor(match &self.data {
                        DataSource::Xor(n) => *n,
                        _ => 840,
                    })
                } else {
                    let target = match &self.data {
                        DataSource::Csv { target, .. } => target.clone(),
                        _ => "last".into(),
                    };
                    DataSource::Csv { path: v.into(), target }
                }
            }
            "xor_n" => self.data = DataSource::Xor(num(key, v)?),
            "target" => match &mut self.data {
                DataSource::Csv { target, .. } => *target = v.into(),
                DataSource::Xor(_) => return Err(Error::InvalidParam("target applies to csv data only".into())),
            },
            "output" => self.output = v.into(),
            "parallel" => self.parallel = flag(key, v)?,
            "init_error" => {
                self.init_error = match v {
                    "resubstitution" => InitError::Resubstitution,
                    "oob" => InitError::Oob,
                    _ => return Err(Error::InvalidParam(format!("init_error: unknown source {v:?}"))),
                }
            }
            "export_lp" => self.export_lp = flag(key, v)?,
            "forest.n_trees" => self.forest.n_trees = num(key, v)?,
            "forest.mtry" => self.forest.mtry = if v == "auto" { None } else { Some(num(key, v)?) },
            "forest.min_leaf" => self.forest.min_leaf = num(key, v)?,
            "preselect.min_conf" => self.preselect.min_conf = num(key, v)?,
            "preselect.min_class_cov" => self.preselect.min_class_cov = num(key, v)?,
            "preselect.max_len" => self.preselect.max_len = num(key, v)?,
            "preselect.max_simil" => self.preselect.max_simil = num(key, v)?,
            "select.w0" => self.select.w0 = num(key, v)?,
            "select.w1" => self.select.w1 = num(key, v)?,
            "select.w2" => self.select.w2 = num(key, v)?,
            "select.w3" => self.select.w3 = num(key, v)?,
            "select.maxcover" => self.select.maxcover = num(key, v)?,
            "select.maxoverlap" => self.select.maxoverlap = num(key, v)?,
            "select.alpha" => self.select.alpha = num(key, v)?,
            "select.beta" => self.select.beta = num(key, v)?,
            "select.solver" => self.solve.solver = v.parse()?,
            "select.restarts" => self.solve.restarts = num(key, v)?,
            "select.node_limit" => self.solve.node_limit = num(key, v)?,
            "select.time_limit" => {
                self.solve.time_limit = Some(Duration::from_secs_f64(num::<f64>(key, v)?));
            }
            "enrich.arm_minconf" => self.enrich.arm_minconf = num(key, v)?,
            "enrich.arm_minsup" => self.enrich.arm_minsup = num(key, v)?,
            "cv.splits" => self.cv.splits = num(key, v)?,
            "cv.train_ratio" => self.cv.train_ratio = num(key, v)?,
            other => return Err(Error::InvalidParam(format!("unknown config key {other:?}"))),
        }
        Ok(())
    }

    /// Applies `key=value` overrides in order.
    pub fn apply_overrides<S: AsRef<str>>(&mut self, overrides: &[S]) -> Result<()> {
        for o in overrides {
            let (k, v) = o
                .as_ref()
                .split_once('=')
                .ok_or_else(|| Error::InvalidParam(format!("override {:?} is not key=value", o.as_ref())))?;
            self.set(k, v)?;
        }
        self.validate()
    }

    pub fn validate(&self) -> Result<()> {
        if self.forest.n_trees == 0 {
            return Err(Error::InvalidParam("forest.n_trees must be at least 1".into()));
        }
        if self.forest.min_leaf == 0 {
            return Err(Error::InvalidParam("forest.min_leaf must be at least 1".into()));
        }
        if self.forest.mtry == Some(0) {
            return Err(Error::InvalidParam("forest.mtry must be at least 1".into()));
        }
        self.preselect.validate()?;
        self.select.validate()?;
        self.enrich.validate()?;
        if self.cv.splits == 0 {
            return Err(Error::InvalidParam("cv.splits must be at least 1".into()));
        }
        if !(self.cv.train_ratio > 0.0 && self.cv.train_ratio < 1.0) {
            return Err(Error::InvalidParam("cv.train_ratio must be in (0, 1)".into()));
        }
        if self.solve.restarts == 0 {
            return Err(Error::InvalidParam("select.restarts must be at least 1".into()));
        }
        if let DataSource::Xor(n) = self.data {
            if n < 16 {
                return Err(Error::InvalidParam("xor_n must be at least 16".into()));
            }
        }
        Ok(())
    }

    pub fn target(&self) -> Result<Target> {
        match &self.data {
            DataSource::Csv { target, .. } => Ok(target.parse().unwrap_or(Target::Last)),
            DataSource::Xor(_) => Ok(Target::Last),
        }
    }
}
