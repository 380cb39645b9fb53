use alloc::format;
use alloc::string::String;
use core::fmt;
use core::str::FromStr;

use crate::augment::{AugStrategy, StrategyVariant, WarmupVariant};
use crate::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    CrossEntropy,
    CoTeachingPlus,
    Mdyrh,
    DivideMix,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::CrossEntropy => "ce",
            Algorithm::CoTeachingPlus => "coteaching+",
            Algorithm::Mdyrh => "mdyrh",
            Algorithm::DivideMix => "dividemix",
        }
    }

    /// Networks trained side by side.
    pub fn network_count(self) -> usize {
        match self {
            Algorithm::CrossEntropy | Algorithm::Mdyrh => 1,
            Algorithm::CoTeachingPlus | Algorithm::DivideMix => 2,
        }
    }

    /// Whether the procedure starts with a warm-up phase.
    pub fn has_warmup(self) -> bool {
        self != Algorithm::CrossEntropy
    }
}

/// A parsed strategy name such as `dividemix-WS-WAW`: an algorithm, an augmentation
/// variant suffix and a warm-up suffix. Variant suffixes are `-WW`, `-SS`, `-WS`, plus
/// `-RAW`, `-EW`, `-ES`, `-RW`, `-RS` for raw, expansion and runtime variants; the
/// default is runtime weak. Warm-up suffixes are `-WAW` (default) and `-SAW`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StrategySpec {
    pub algorithm: Algorithm,
    pub strategy: AugStrategy,
}

fn variant_suffix(v: StrategyVariant) -> &'static str {
    match v {
        StrategyVariant::Raw => "RAW",
        StrategyVariant::ExpansionW => "EW",
        StrategyVariant::ExpansionS => "ES",
        StrategyVariant::RuntimeW => "RW",
        StrategyVariant::RuntimeS => "RS",
        StrategyVariant::AugDescWW => "WW",
        StrategyVariant::AugDescSS => "SS",
        StrategyVariant::AugDescWS => "WS",
    }
}

impl fmt::Display for StrategySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.algorithm.name())?;
        if self.strategy.variant != StrategyVariant::RuntimeW {
            write!(f, "-{}", variant_suffix(self.strategy.variant))?;
        }
        if self.strategy.warmup == WarmupVariant::Saw {
            f.write_str("-SAW")?;
        } else if self.algorithm.has_warmup() && self.strategy.variant != StrategyVariant::RuntimeW {
            f.write_str("-WAW")?;
        }
        Ok(())
    }
}

impl FromStr for StrategySpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        let s = s.trim();
        let mut parts = s.split('-');
        let head = parts.next().unwrap_or_default().to_ascii_lowercase();
        let algorithm = match head.as_str() {
            "ce" => Algorithm::CrossEntropy,
            "coteaching+" | "coteachingplus" => Algorithm::CoTeachingPlus,
            "mdyrh" => Algorithm::Mdyrh,
            "dividemix" => Algorithm::DivideMix,
            _ => return Err(Error::Config(format!("unknown strategy {s:?}"))),
        };
        let mut variant = None;
        let mut warmup = None;
        for p in parts {
            let p = String::from(p).to_ascii_uppercase();
            let (slot_is_variant, v, w) = match p.as_str() {
                "WAW" => (false, None, Some(WarmupVariant::Waw)),
                "SAW" => (false, None, Some(WarmupVariant::Saw)),
                "WW" => (true, Some(StrategyVariant::AugDescWW), None),
                "SS" => (true, Some(StrategyVariant::AugDescSS), None),
                "WS" => (true, Some(StrategyVariant::AugDescWS), None),
                "RAW" => (true, Some(StrategyVariant::Raw), None),
                "EW" => (true, Some(StrategyVariant::ExpansionW), None),
                "ES" => (true, Some(StrategyVariant::ExpansionS), None),
                "RW" => (true, Some(StrategyVariant::RuntimeW), None),
                "RS" => (true, Some(StrategyVariant::RuntimeS), None),
                _ => return Err(Error::Config(format!("unknown suffix {p:?} in strategy {s:?}"))),
            };
            let dup = if slot_is_variant {
                variant.replace(v.unwrap()).is_some()
            } else {
                warmup.replace(w.unwrap()).is_some()
            };
            if dup {
                return Err(Error::Config(format!("repeated suffix kind in strategy {s:?}")));
            }
        }
        Ok(StrategySpec {
            algorithm,
            strategy: AugStrategy::new(
                variant.unwrap_or(StrategyVariant::RuntimeW),
                warmup.unwrap_or_default(),
            ),
        })
    }
}
