use std::fmt;
use std::str::FromStr;

use serde::{Serialize, Serializer};
use thiserror::Error;

pub const DEFAULT_K1: f64 = 1.2;
pub const DEFAULT_B: f64 = 0.75;
pub const DEFAULT_MU: f64 = 2000.0;
pub const DEFAULT_FB_DOCS: usize = 10;
pub const DEFAULT_FB_TERMS: usize = 25;
pub const DEFAULT_RM3_LAMBDA: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid config token `{token}`: {reason}")]
pub struct ConfigParseError {
    pub token: String,
    pub reason: String,
}

impl ConfigParseError {
    fn new(token: impl Into<String>, reason: impl Into<String>) -> Self {
        Self { token: token.into(), reason: reason.into() }
    }
}

macro_rules! component_enum {
    ($(#[$meta:meta])* $name:ident { $($variant:ident => $label:literal),+ $(,)? }) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub enum $name {
            $($variant),+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn label(self) -> &'static str {
                match self {
                    $($name::$variant => $label),+
                }
            }
        }

        impl FromStr for $name {
            type Err = ConfigParseError;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                let upper = s.to_ascii_uppercase();
                let upper = if upper == "NONE" { "NO".to_string() } else { upper };
                $name::ALL
                    .iter()
                    .copied()
                    .find(|v| v.label() == upper)
                    .ok_or_else(|| ConfigParseError::new(s, concat!("unknown ", stringify!($name))))
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.label())
            }
        }
    };
}

component_enum!(
    /// DFR basic randomness model.
    BasicModel { Be => "BE", D => "D", G => "G", If => "IF", In => "IN", Ine => "INE", P => "P" }
);
component_enum!(
    /// DFR first normalization (information gain).
    AfterEffect { B => "B", L => "L", No => "NO" }
);
component_enum!(
    /// Term-frequency normalization shared by DFR and IB.
    Normalization { H1 => "H1", H2 => "H2", H3 => "H3", No => "NO", Z => "Z" }
);
component_enum!(
    /// IB probability distribution.
    Distribution { Ll => "LL", Spl => "SPL" }
);
component_enum!(
    /// IB lambda estimate.
    IbLambda { Df => "DF", Ttf => "TTF" }
);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DfrConfig {
    pub basic_model: BasicModel,
    pub after_effect: AfterEffect,
    pub normalization: Normalization,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IbConfig {
    pub distribution: Distribution,
    pub lambda: IbLambda,
    pub normalization: Normalization,
}

/// A first-stage scoring function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Similarity {
    Bm25 { k1: f64, b: f64 },
    LmDirichlet { mu: f64 },
    Dfr(DfrConfig),
    Ib(IbConfig),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FeedbackModel {
    Rm1,
    /// Interpolates the original query model with weight `lambda`.
    Rm3 {
        lambda: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RerankConfig {
    pub base: Similarity,
    pub model: FeedbackModel,
    pub fb_docs: usize,
    pub fb_terms: usize,
}

impl RerankConfig {
    /// Dirichlet prior for the smoothed document models used by feedback
    /// and rescoring: the base's `mu` when it is a language model.
    pub fn smoothing_mu(&self) -> f64 {
        match self.base {
            Similarity::LmDirichlet { mu } => mu,
            _ => DEFAULT_MU,
        }
    }
}

/// One candidate search-algorithm configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SimilarityConfig {
    Base(Similarity),
    Rerank(RerankConfig),
}

impl Similarity {
    pub fn bm25_default() -> Self {
        Similarity::Bm25 { k1: DEFAULT_K1, b: DEFAULT_B }
    }

    pub fn lmd_default() -> Self {
        Similarity::LmDirichlet { mu: DEFAULT_MU }
    }

    pub fn dfr(basic_model: BasicModel, after_effect: AfterEffect, normalization: Normalization) -> Self {
        Similarity::Dfr(DfrConfig { basic_model, after_effect, normalization })
    }

    pub fn ib(distribution: Distribution, lambda: IbLambda, normalization: Normalization) -> Self {
        Similarity::Ib(IbConfig { distribution, lambda, normalization })
    }

    pub fn canonical_name(&self) -> String {
        self.to_string()
    }

    fn validate(&self) -> Result<(), ConfigParseError> {
        match *self {
            Similarity::Bm25 { k1, b } => {
                if !(k1.is_finite() && k1 > 0.0) {
                    return Err(ConfigParseError::new(format!("k1={k1}"), "k1 must be > 0"));
                }
                if !(0.0..=1.0).contains(&b) {
                    return Err(ConfigParseError::new(format!("b={b}"), "b must be in [0, 1]"));
                }
            }
            Similarity::LmDirichlet { mu } => {
                if !(mu.is_finite() && mu > 0.0) {
                    return Err(ConfigParseError::new(format!("mu={mu}"), "mu must be > 0"));
                }
            }
            Similarity::Dfr(_) | Similarity::Ib(_) => {}
        }
        Ok(())
    }
}

impl SimilarityConfig {
    pub fn canonical_name(&self) -> String {
        self.to_string()
    }

    pub fn is_rerank(&self) -> bool {
        matches!(self, SimilarityConfig::Rerank(_))
    }

    /// The first-stage similarity (the config itself, or a reranker's base).
    pub fn first_stage(&self) -> &Similarity {
        match self {
            SimilarityConfig::Base(s) => s,
            SimilarityConfig::Rerank(r) => &r.base,
        }
    }
}

impl From<Similarity> for SimilarityConfig {
    fn from(s: Similarity) -> Self {
        SimilarityConfig::Base(s)
    }
}

impl fmt::Display for Similarity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Similarity::Bm25 { k1, b } => write!(f, "bm25:k1={k1},b={b}"),
            Similarity::LmDirichlet { mu } => write!(f, "lmd:mu={mu}"),
            Similarity::Dfr(c) => write!(f, "dfr:{}:{}:{}", c.basic_model, c.after_effect, c.normalization),
            Similarity::Ib(c) => write!(f, "ib:{}:{}:{}", c.distribution, c.lambda, c.normalization),
        }
    }
}

impl fmt::Display for SimilarityConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SimilarityConfig::Base(s) => s.fmt(f),
            SimilarityConfig::Rerank(r) => {
                let family = match r.model {
                    FeedbackModel::Rm1 => "rm1",
                    FeedbackModel::Rm3 { .. } => "rm3",
                };
                write!(f, "{family}:base={};fbdocs={};fbterms={}", r.base, r.fb_docs, r.fb_terms)?;
                if let FeedbackModel::Rm3 { lambda } = r.model {
                    write!(f, ";lambda={lambda}")?;
                }
                Ok(())
            }
        }
    }
}

impl Serialize for SimilarityConfig {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.canonical_name())
    }
}

impl FromStr for Similarity {
    type Err = ConfigParseError;

    fn from_str(spec: &str) -> Result<Self, Self::Err> {
        let spec = spec.trim();
        let (family, rest) = match spec.split_once(':') {
            Some((f, r)) => (f, Some(r)),
            None => (spec, None),
        };
        let sim = match family.to_ascii_lowercase().as_str() {
            "bm25" => {
                let (mut k1, mut b) = (DEFAULT_K1, DEFAULT_B);
                for (key, value) in key_values(rest, &[',', ':'])? {
                    match key {
                        "k1" => k1 = parse_f64(key, value)?,
                        "b" => b = parse_f64(key, value)?,
                        _ => return Err(ConfigParseError::new(key, "unknown bm25 parameter")),
                    }
                }
                Similarity::Bm25 { k1, b }
            }
            "lmd" | "lm" | "dirichlet" => {
                let mut mu = DEFAULT_MU;
                for (key, value) in key_values(rest, &[',', ':'])? {
                    match key {
                        "mu" => mu = parse_f64(key, value)?,
                        _ => return Err(ConfigParseError::new(key, "unknown lmd parameter")),
                    }
                }
                Similarity::LmDirichlet { mu }
            }
            "dfr" => {
                let parts = components(rest, 3, "dfr needs basic_model:after_effect:normalization")?;
                Similarity::dfr(parts[0].parse()?, parts[1].parse()?, parts[2].parse()?)
            }
            "ib" => {
                let parts = components(rest, 3, "ib needs distribution:lambda:normalization")?;
                Similarity::ib(parts[0].parse()?, parts[1].parse()?, parts[2].parse()?)
            }
            "rm1" | "rm3" => {
                return Err(ConfigParseError::new(family, "reranker cannot be used as a first-stage similarity"))
            }
            _ => return Err(ConfigParseError::new(family, "unknown similarity family")),
        };
        sim.validate()?;
        Ok(sim)
    }
}

impl FromStr for SimilarityConfig {
    type Err = ConfigParseError;

    fn from_str(spec: &str) -> Result<Self, Self::Err> {
        let spec = spec.trim();
        let (family, rest) = match spec.split_once(':') {
            Some((f, r)) => (f, Some(r)),
            None => (spec, None),
        };
        let family_lc = family.to_ascii_lowercase();
        let rm3 = match family_lc.as_str() {
            "rm1" => false,
            "rm3" => true,
            _ => return spec.parse::<Similarity>().map(SimilarityConfig::Base),
        };
        let mut base = Similarity::lmd_default();
        let mut fb_docs = DEFAULT_FB_DOCS;
        let mut fb_terms = DEFAULT_FB_TERMS;
        let mut lambda = DEFAULT_RM3_LAMBDA;
        for (key, value) in key_values(rest, &[';'])? {
            match key {
                "base" => base = value.parse()?,
                "fbdocs" => fb_docs = parse_usize(key, value)?,
                "fbterms" => fb_terms = parse_usize(key, value)?,
                "lambda" if rm3 => lambda = parse_f64(key, value)?,
                "lambda" => return Err(ConfigParseError::new(key, "rm1 takes no interpolation weight")),
                _ => return Err(ConfigParseError::new(key, "unknown reranker parameter")),
            }
        }
        if fb_docs == 0 {
            return Err(ConfigParseError::new("fbdocs=0", "fbdocs must be >= 1"));
        }
        if fb_terms == 0 {
            return Err(ConfigParseError::new("fbterms=0", "fbterms must be >= 1"));
        }
        if !(0.0..=1.0).contains(&lambda) {
            return Err(ConfigParseError::new(format!("lambda={lambda}"), "lambda must be in [0, 1]"));
        }
        let model = if rm3 { FeedbackModel::Rm3 { lambda } } else { FeedbackModel::Rm1 };
        Ok(SimilarityConfig::Rerank(RerankConfig { base, model, fb_docs, fb_terms }))
    }
}

/// Shorthand for `spec.parse::<SimilarityConfig>()`.
pub fn parse_config(spec: &str) -> Result<SimilarityConfig, ConfigParseError> {
    spec.parse()
}

fn key_values<'a>(rest: Option<&'a str>, seps: &[char]) -> Result<Vec<(&'a str, &'a str)>, ConfigParseError> {
    let Some(rest) = rest else { return Ok(Vec::new()) };
    rest.split(seps)
        .filter(|p| !p.is_empty())
        .map(|part| {
            part.split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| ConfigParseError::new(part, "expected key=value"))
        })
        .collect()
}

fn components<'a>(rest: Option<&'a str>, n: usize, msg: &str) -> Result<Vec<&'a str>, ConfigParseError> {
    let parts: Vec<&str> = rest.map(|r| r.split(':').collect()).unwrap_or_default();
    if parts.len() != n || parts.iter().any(|p| p.is_empty()) {
        return Err(ConfigParseError::new(rest.unwrap_or(""), msg));
    }
    Ok(parts)
}

fn parse_f64(key: &str, value: &str) -> Result<f64, ConfigParseError> {
    value
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| ConfigParseError::new(format!("{key}={value}"), "not a finite number"))
}

fn parse_usize(key: &str, value: &str) -> Result<usize, ConfigParseError> {
    value.parse::<usize>().map_err(|_| ConfigParseError::new(format!("{key}={value}"), "not a non-negative integer"))
}

/// Default DFR configuration used when a single "DFR" candidate is needed.
pub fn default_dfr() -> Similarity {
    Similarity::dfr(BasicModel::If, AfterEffect::B, Normalization::H2)
}

/// Default information-based configuration.
pub fn default_ib() -> Similarity {
    Similarity::ib(Distribution::Spl, IbLambda::Df, Normalization::H2)
}

/// Every DFR basic model × after effect × normalization, sorted by canonical name.
pub fn enumerate_dfr_grid() -> Vec<SimilarityConfig> {
    let mut grid: Vec<SimilarityConfig> = BasicModel::ALL
        .iter()
        .flat_map(|&bm| {
            AfterEffect::ALL.iter().flat_map(move |&ae| {
                Normalization::ALL.iter().map(move |&n| SimilarityConfig::Base(Similarity::dfr(bm, ae, n)))
            })
        })
        .collect();
    grid.sort_by_cached_key(SimilarityConfig::canonical_name);
    grid
}

/// Every IB distribution × lambda × normalization, sorted by canonical name.
pub fn enumerate_ib_grid() -> Vec<SimilarityConfig> {
    let mut grid: Vec<SimilarityConfig> = Distribution::ALL
        .iter()
        .flat_map(|&d| {
            IbLambda::ALL.iter().flat_map(move |&l| {
                Normalization::ALL.iter().map(move |&n| SimilarityConfig::Base(Similarity::ib(d, l, n)))
            })
        })
        .collect();
    grid.sort_by_cached_key(SimilarityConfig::canonical_name);
    grid
}

/// BM25, LM-Dirichlet, DFR and IB with default parameters, plus RM1 and RM3
/// reranking over LM-Dirichlet.
pub fn usecase1_set() -> Vec<SimilarityConfig> {
    let rerank = |model| {
        SimilarityConfig::Rerank(RerankConfig {
            base: Similarity::lmd_default(),
            model,
            fb_docs: DEFAULT_FB_DOCS,
            fb_terms: DEFAULT_FB_TERMS,
        })
    };
    vec![
        Similarity::bm25_default().into(),
        Similarity::lmd_default().into(),
        default_dfr().into(),
        default_ib().into(),
        rerank(FeedbackModel::Rm1),
        rerank(FeedbackModel::Rm3 { lambda: DEFAULT_RM3_LAMBDA }),
    ]
}
