//! Experiment configuration: INI sections per module, every key overridable as
//! `section.key=value`.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use ini::Ini;
use nlab_core::augment::{RandAugmentConfig, WarmupVariant};
use nlab_core::data::{GlyphSpec, SymmetricMode};
use nlab_core::lossmodel::FitOptions;
use nlab_core::nn::{LrSchedule, SgdConfig};
use nlab_core::strategies::{Algorithm, CoTeachPlusConfig, DivideMixConfig, MdyrhConfig, StrategySpec, TrainConfig};

use crate::error::{io_err, LabError, LabResult};

#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    Glyphs,
    Idx {
        train_images: PathBuf,
        train_labels: PathBuf,
        test_images: PathBuf,
        test_labels: PathBuf,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DataConfig {
    pub source: DataSource,
    /// Train-set glyph parameters; `per_class` is the training count.
    pub glyphs: GlyphSpec,
    pub test_per_class: usize,
    /// Dataset seed; `None` uses the run seed.
    pub seed: Option<u64>,
    /// Class count for IDX data; `None` infers it from the labels. Glyph data uses
    /// `glyphs.num_classes`.
    pub classes: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseKind {
    Symmetric,
    /// Class `i` flips to `(i + 1) mod C`.
    Asymmetric,
}

impl fmt::Display for NoiseKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NoiseKind::Symmetric => "symmetric",
            NoiseKind::Asymmetric => "asymmetric",
        })
    }
}

impl FromStr for NoiseKind {
    type Err = LabError;

    fn from_str(s: &str) -> LabResult<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "symmetric" | "sym" => Ok(NoiseKind::Symmetric),
            "asymmetric" | "asym" => Ok(NoiseKind::Asymmetric),
            _ => Err(LabError::Usage(format!("unknown noise kind {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseConfig {
    pub kind: NoiseKind,
    pub rate: f64,
    pub mode: SymmetricMode,
    /// `None` uses the run seed.
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainSettings {
    pub epochs: usize,
    pub warmup: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub momentum: f64,
    pub weight_decay: f64,
    pub lr_drop: usize,
    pub filters: usize,
    pub hidden: usize,
    pub fit_on_augmented: bool,
    pub fit: FitOptions,
}

/// DivideMix settings; `alpha` and `lambda_u` follow the noise rate when unset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DivideMixSettings {
    pub base: DivideMixConfig,
    pub alpha: Option<f64>,
    pub lambda_u: Option<f64>,
}

impl DivideMixSettings {
    pub fn resolve(&self, noise_rate: f64) -> DivideMixConfig {
        let auto = DivideMixConfig::for_noise(noise_rate);
        DivideMixConfig {
            alpha: self.alpha.unwrap_or(auto.alpha),
            lambda_u: self.lambda_u.unwrap_or(auto.lambda_u),
            ..self.base
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeSettings {
    pub epoch: usize,
    pub p_strong: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub histogram_bins: usize,
    pub histogram_epochs: Vec<usize>,
    pub checkpoint: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub data: DataConfig,
    pub noise: NoiseConfig,
    pub strategy: StrategySpec,
    pub train: TrainSettings,
    pub augment: RandAugmentConfig,
    pub dividemix: DivideMixSettings,
    pub coteaching: CoTeachPlusConfig,
    pub mdyrh: MdyrhConfig,
    pub probe: ProbeSettings,
    pub seeds: Vec<u64>,
    pub output: OutputConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let dm = DivideMixConfig::default();
        Self {
            data: DataConfig {
                source: DataSource::Glyphs,
                glyphs: GlyphSpec::default(),
                test_per_class: 100,
                seed: None,
                classes: None,
            },
            noise: NoiseConfig {
                kind: NoiseKind::Symmetric,
                rate: 0.8,
                mode: SymmetricMode::AllClasses,
                seed: None,
            },
            strategy: "dividemix".parse().expect("builtin strategy name"),
            train: TrainSettings {
                epochs: 60,
                warmup: 10,
                batch_size: 32,
                lr: 0.02,
                momentum: 0.9,
                weight_decay: 5e-4,
                lr_drop: 40,
                filters: 8,
                hidden: 64,
                fit_on_augmented: false,
                fit: FitOptions::default(),
            },
            augment: RandAugmentConfig::default(),
            dividemix: DivideMixSettings {
                base: dm,
                alpha: None,
                lambda_u: None,
            },
            coteaching: CoTeachPlusConfig::default(),
            mdyrh: MdyrhConfig::default(),
            probe: ProbeSettings {
                epoch: 20,
                p_strong: vec![0.0, 1.0],
            },
            seeds: vec![0],
            output: OutputConfig {
                dir: PathBuf::from("runs/default"),
                histogram_bins: 20,
                histogram_epochs: Vec::new(),
                checkpoint: true,
            },
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> LabResult<T> {
    value
        .trim()
        .parse()
        .map_err(|_| LabError::Usage(format!("invalid value {value:?} for {key}")))
}

fn parse_bool(key: &str, value: &str) -> LabResult<bool> {
    match value.trim().to_ascii_lowercase().as_str() {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(LabError::Usage(format!("invalid boolean {value:?} for {key}"))),
    }
}

fn parse_auto<T: FromStr>(key: &str, value: &str) -> LabResult<Option<T>> {
    if value.trim().eq_ignore_ascii_case("auto") {
        Ok(None)
    } else {
        parse(key, value).map(Some)
    }
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> LabResult<Vec<T>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse(key, s))
        .collect()
}

fn auto<T: fmt::Display>(v: &Option<T>) -> String {
    v.as_ref().map_or_else(|| "auto".to_string(), T::to_string)
}

fn list<T: fmt::Display>(v: &[T]) -> String {
    v.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

fn idx_path(source: &mut DataSource, key: &str, value: &str) -> LabResult<()> {
    let DataSource::Idx {
        train_images,
        train_labels,
        test_images,
        test_labels,
    } = source
    else {
        return Err(LabError::Usage(format!("data.{key} needs data.source = idx")));
    };
    let slot = match key {
        "train_images" => train_images,
        "train_labels" => train_labels,
        "test_images" => test_images,
        _ => test_labels,
    };
    *slot = PathBuf::from(value.trim());
    Ok(())
}

impl ExperimentConfig {
    /// Reads an INI file on top of the defaults.
    pub fn load(path: &Path) -> LabResult<Self> {
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        Self::from_ini_str(&text).map_err(|e| match e {
            LabError::Usage(message) => LabError::Parse {
                path: path.to_path_buf(),
                message,
            },
            other => other,
        })
    }

    pub fn from_ini_str(text: &str) -> LabResult<Self> {
        let ini = Ini::load_from_str(text).map_err(|e| LabError::Usage(e.to_string()))?;
        let mut cfg = Self::default();
        // `source` first so the IDX path keys can land
        if let Some(src) = ini.section(Some("data")).and_then(|s| s.get("source")) {
            cfg.set("data", "source", src)?;
        }
        for (section, props) in ini.iter() {
            for (key, value) in props.iter() {
                let Some(section) = section else {
                    return Err(LabError::Usage(format!("key {key:?} outside a section")));
                };
                if section == "data" && key == "source" {
                    continue;
                }
                cfg.set(section, key, value)?;
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Applies `section.key=value`.
    pub fn apply_override(&mut self, assignment: &str) -> LabResult<()> {
        let (path, value) = assignment
            .split_once('=')
            .ok_or_else(|| LabError::Usage(format!("override {assignment:?} is not section.key=value")))?;
        let (section, key) = path
            .trim()
            .split_once('.')
            .ok_or_else(|| LabError::Usage(format!("override key {path:?} is not section.key")))?;
        self.set(section, key, value)
    }

    pub fn set(&mut self, section: &str, key: &str, value: &str) -> LabResult<()> {
        let name = format!("{section}.{key}");
        let k = name.as_str();
        let g = &mut self.data.glyphs;
        match (section, key) {
            ("data", "source") => {
                self.data.source = match value.trim() {
                    "glyphs" => DataSource::Glyphs,
                    "idx" => match &self.data.source {
                        DataSource::Idx { .. } => self.data.source.clone(),
                        DataSource::Glyphs => DataSource::Idx {
                            train_images: PathBuf::new(),
                            train_labels: PathBuf::new(),
                            test_images: PathBuf::new(),
                            test_labels: PathBuf::new(),
                        },
                    },
                    other => return Err(LabError::Usage(format!("unknown data source {other:?}"))),
                }
            }
            ("data", "classes") => match self.data.source {
                DataSource::Glyphs => g.num_classes = parse(k, value)?,
                DataSource::Idx { .. } => self.data.classes = parse_auto(k, value)?,
            },
            ("data", "per_class") => g.per_class = parse(k, value)?,
            ("data", "test_per_class") => self.data.test_per_class = parse(k, value)?,
            ("data", "size") => g.size = parse(k, value)?,
            ("data", "rotation") => g.rotation_deg = parse(k, value)?,
            ("data", "translation") => g.translation_px = parse(k, value)?,
            ("data", "scale_min") => g.scale_min = parse(k, value)?,
            ("data", "scale_max") => g.scale_max = parse(k, value)?,
            ("data", "pixel_noise") => g.pixel_noise = parse(k, value)?,
            ("data", "seed") => self.data.seed = parse_auto(k, value)?,
            ("data", "train_images" | "train_labels" | "test_images" | "test_labels") => {
                idx_path(&mut self.data.source, key, value)?
            }
            ("noise", "kind") => self.noise.kind = value.parse()?,
            ("noise", "rate") => self.noise.rate = parse(k, value)?,
            ("noise", "mode") => {
                self.noise.mode = match value.trim() {
                    "all" => SymmetricMode::AllClasses,
                    "other" => SymmetricMode::OtherClasses,
                    other => return Err(LabError::Usage(format!("unknown noise mode {other:?}"))),
                }
            }
            ("noise", "seed") => self.noise.seed = parse_auto(k, value)?,
            ("train", "strategy") => {
                self.strategy = value.parse().map_err(|e: nlab_core::Error| LabError::Usage(e.to_string()))?
            }
            ("train", "seeds") => self.seeds = parse_list(k, value)?,
            ("train", "epochs") => self.train.epochs = parse(k, value)?,
            ("train", "warmup") => self.train.warmup = parse(k, value)?,
            ("train", "batch_size") => self.train.batch_size = parse(k, value)?,
            ("train", "lr") => self.train.lr = parse(k, value)?,
            ("train", "momentum") => self.train.momentum = parse(k, value)?,
            ("train", "weight_decay") => self.train.weight_decay = parse(k, value)?,
            ("train", "lr_drop") => self.train.lr_drop = parse(k, value)?,
            ("train", "filters") => self.train.filters = parse(k, value)?,
            ("train", "hidden") => self.train.hidden = parse(k, value)?,
            ("train", "fit_on_augmented") => self.train.fit_on_augmented = parse_bool(k, value)?,
            ("train", "em_max_iter") => self.train.fit.max_iter = parse(k, value)?,
            ("train", "em_tol") => self.train.fit.tol = parse(k, value)?,
            ("augment", "n") => self.augment.n = parse(k, value)?,
            ("augment", "m") => self.augment.m = parse(k, value)?,
            ("dividemix", "m") => self.dividemix.base.m = parse(k, value)?,
            ("dividemix", "t") => self.dividemix.base.t = parse(k, value)?,
            ("dividemix", "tau") => self.dividemix.base.tau = parse(k, value)?,
            ("dividemix", "alpha") => self.dividemix.alpha = parse_auto(k, value)?,
            ("dividemix", "lambda_u") => self.dividemix.lambda_u = parse_auto(k, value)?,
            ("dividemix", "lambda_r") => self.dividemix.base.lambda_r = parse(k, value)?,
            ("dividemix", "rampup") => self.dividemix.base.rampup_epochs = parse(k, value)?,
            ("dividemix", "max_lambda") => self.dividemix.base.max_lambda = parse_bool(k, value)?,
            ("dividemix", "warmup_penalty") => self.dividemix.base.warmup_penalty = parse_bool(k, value)?,
            ("coteaching", "tau") => self.coteaching.tau = parse(k, value)?,
            ("coteaching", "tk") => self.coteaching.tk = parse(k, value)?,
            ("mdyrh", "alpha") => self.mdyrh.alpha = parse(k, value)?,
            ("mdyrh", "lambda_r") => self.mdyrh.lambda_r = parse(k, value)?,
            ("probe", "epoch") => self.probe.epoch = parse(k, value)?,
            ("probe", "p_strong") => self.probe.p_strong = parse_list(k, value)?,
            ("output", "dir") => self.output.dir = PathBuf::from(value.trim()),
            ("output", "histogram_bins") => self.output.histogram_bins = parse(k, value)?,
            ("output", "histogram_epochs") => self.output.histogram_epochs = parse_list(k, value)?,
            ("output", "checkpoint") => self.output.checkpoint = parse_bool(k, value)?,
            _ => return Err(LabError::Usage(format!("unknown configuration key {name:?}"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> LabResult<()> {
        let bad = |m: String| Err(LabError::Usage(m));
        if !(0.0..=1.0).contains(&self.noise.rate) {
            return bad(format!("noise rate {} outside [0, 1]", self.noise.rate));
        }
        if self.seeds.is_empty() {
            return bad("at least one seed is required".into());
        }
        if self.train.epochs == 0 {
            return bad("epochs must be at least 1".into());
        }
        if self.train.filters == 0 || self.train.hidden == 0 {
            return bad("network widths must be positive".into());
        }
        if self.output.histogram_bins == 0 {
            return bad("histogram_bins must be at least 1".into());
        }
        if let Some(p) = self.probe.p_strong.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return bad(format!("probe probability {p} outside [0, 1]"));
        }
        if let DataSource::Idx { train_images, .. } = &self.data.source {
            if train_images.as_os_str().is_empty() {
                return bad("idx data needs data.train_images and friends".into());
            }
        }
        let alg = self.strategy.algorithm;
        if matches!(alg, Algorithm::CoTeachingPlus | Algorithm::Mdyrh) && self.strategy.strategy.warmup == WarmupVariant::Saw {
            return bad(format!("{} warms up with weak augmentation only; drop the -SAW suffix", alg.name()));
        }
        RandAugmentConfig::new(self.augment.n, self.augment.m)?;
        self.train_config(0).validate()?;
        self.dividemix.resolve(self.noise.rate).validate()?;
        self.coteaching.validate()?;
        Ok(())
    }

    /// Core training settings for one seed.
    pub fn train_config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            batch_size: self.train.batch_size,
            sgd: SgdConfig {
                lr: self.train.lr,
                momentum: self.train.momentum,
                weight_decay: self.train.weight_decay,
            },
            schedule: LrSchedule::new(self.train.lr, self.train.lr_drop),
            warmup_epochs: if self.strategy.algorithm.has_warmup() { self.train.warmup } else { 0 },
            epochs: self.train.epochs,
            rand_augment: self.augment,
            strategy: self.strategy.strategy,
            seed,
            fit_on_augmented: self.train.fit_on_augmented,
            fit: self.train.fit,
        }
    }

    /// The configuration as INI text; loading it back gives an equal configuration.
    pub fn to_ini(&self) -> Ini {
        let mut ini = Ini::new();
        let g = &self.data.glyphs;
        let mut data = ini.with_section(Some("data"));
        match &self.data.source {
            DataSource::Glyphs => {
                data.set("source", "glyphs");
            }
            DataSource::Idx {
                train_images,
                train_labels,
                test_images,
                test_labels,
            } => {
                data.set("source", "idx")
                    .set("train_images", train_images.display().to_string())
                    .set("train_labels", train_labels.display().to_string())
                    .set("test_images", test_images.display().to_string())
                    .set("test_labels", test_labels.display().to_string());
            }
        }
        let classes = match self.data.source {
            DataSource::Glyphs => g.num_classes.to_string(),
            DataSource::Idx { .. } => auto(&self.data.classes),
        };
        data.set("classes", classes)
            .set("per_class", g.per_class.to_string())
            .set("test_per_class", self.data.test_per_class.to_string())
            .set("size", g.size.to_string())
            .set("rotation", g.rotation_deg.to_string())
            .set("translation", g.translation_px.to_string())
            .set("scale_min", g.scale_min.to_string())
            .set("scale_max", g.scale_max.to_string())
            .set("pixel_noise", g.pixel_noise.to_string())
            .set("seed", auto(&self.data.seed));
        ini.with_section(Some("noise"))
            .set("kind", self.noise.kind.to_string())
            .set("rate", self.noise.rate.to_string())
            .set(
                "mode",
                match self.noise.mode {
                    SymmetricMode::AllClasses => "all",
                    SymmetricMode::OtherClasses => "other",
                },
            )
            .set("seed", auto(&self.noise.seed));
        let t = &self.train;
        ini.with_section(Some("train"))
            .set("strategy", self.strategy.to_string())
            .set("seeds", list(&self.seeds))
            .set("epochs", t.epochs.to_string())
            .set("warmup", t.warmup.to_string())
            .set("batch_size", t.batch_size.to_string())
            .set("lr", t.lr.to_string())
            .set("momentum", t.momentum.to_string())
            .set("weight_decay", t.weight_decay.to_string())
            .set("lr_drop", t.lr_drop.to_string())
            .set("filters", t.filters.to_string())
            .set("hidden", t.hidden.to_string())
            .set("fit_on_augmented", t.fit_on_augmented.to_string())
            .set("em_max_iter", t.fit.max_iter.to_string())
            .set("em_tol", t.fit.tol.to_string());
        ini.with_section(Some("augment"))
            .set("n", self.augment.n.to_string())
            .set("m", self.augment.m.to_string());
        let dm = &self.dividemix;
        ini.with_section(Some("dividemix"))
            .set("m", dm.base.m.to_string())
            .set("t", dm.base.t.to_string())
            .set("tau", dm.base.tau.to_string())
            .set("alpha", auto(&dm.alpha))
            .set("lambda_u", auto(&dm.lambda_u))
            .set("lambda_r", dm.base.lambda_r.to_string())
            .set("rampup", dm.base.rampup_epochs.to_string())
            .set("max_lambda", dm.base.max_lambda.to_string())
            .set("warmup_penalty", dm.base.warmup_penalty.to_string());
        ini.with_section(Some("coteaching"))
            .set("tau", self.coteaching.tau.to_string())
            .set("tk", self.coteaching.tk.to_string());
        ini.with_section(Some("mdyrh"))
            .set("alpha", self.mdyrh.alpha.to_string())
            .set("lambda_r", self.mdyrh.lambda_r.to_string());
        ini.with_section(Some("probe"))
            .set("epoch", self.probe.epoch.to_string())
            .set("p_strong", list(&self.probe.p_strong));
        ini.with_section(Some("output"))
            .set("dir", self.output.dir.display().to_string())
            .set("histogram_bins", self.output.histogram_bins.to_string())
            .set("histogram_epochs", list(&self.output.histogram_epochs))
            .set("checkpoint", self.output.checkpoint.to_string());
        ini
    }

    pub fn to_ini_string(&self) -> String {
        let mut buf = Vec::new();
        self.to_ini().write_to(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("ini output is UTF-8")
    }

    /// The same experiment restricted to one seed.
    pub fn for_seed(&self, seed: u64) -> Self {
        Self {
            seeds: vec![seed],
            ..self.clone()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_and_round_trip() {
        let cfg = ExperimentConfig::default();
        cfg.validate().unwrap();
        let back = ExperimentConfig::from_ini_str(&cfg.to_ini_string()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn overrides_apply() {
        let mut cfg = ExperimentConfig::default();
        cfg.apply_override("noise.rate=0.2").unwrap();
        cfg.apply_override("train.strategy=dividemix-WS-SAW").unwrap();
        cfg.apply_override("dividemix.alpha=0.75").unwrap();
        assert_eq!(cfg.noise.rate, 0.2);
        assert_eq!(cfg.strategy.to_string(), "dividemix-WS-SAW");
        assert_eq!(cfg.dividemix.resolve(0.2).alpha, 0.75);
        assert_eq!(cfg.dividemix.resolve(0.2).lambda_u, 0.0);
        assert!(cfg.apply_override("train.nope=1").is_err());
        assert!(cfg.apply_override("noise.rate").is_err());
        assert!(cfg.apply_override("train.strategy=ce-XX").is_err());
    }

    #[test]
    fn invalid_values_rejected() {
        assert!(ExperimentConfig::from_ini_str("[noise]\nrate = 1.5\n").is_err());
        assert!(ExperimentConfig::from_ini_str("[train]\nseeds = \n").is_err());
        assert!(ExperimentConfig::from_ini_str("stray = 1\n").is_err());
        assert!(ExperimentConfig::from_ini_str("[data]\ntrain_images = a\n").is_err());
    }

    #[test]
    fn idx_source_round_trips() {
        let text = "[data]\ntrain_images = a.idx\nsource = idx\ntrain_labels = b\ntest_images = c\ntest_labels = d\n";
        let cfg = ExperimentConfig::from_ini_str(text).unwrap();
        assert!(matches!(cfg.data.source, DataSource::Idx { .. }));
        assert_eq!(ExperimentConfig::from_ini_str(&cfg.to_ini_string()).unwrap(), cfg);
    }
}
