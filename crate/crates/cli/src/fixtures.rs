//! Published parameter sets and printed values, embedded at build time.

use mvpois::asymptotics::{DimFamily, Limit, RateSequence, RatioOrientation, SweepParam};
use mvpois::{ExtremeKind, Model};
use serde::Deserialize;

use crate::error::{CliError, CliResult};

pub const TABLE1_JSON: &str = include_str!("../fixtures/table1.json");
pub const TABLE2_JSON: &str = include_str!("../fixtures/table2.json");
pub const TABLE3_JSON: &str = include_str!("../fixtures/table3.json");

const SUPPORTED_VERSION: u32 = 1;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Table1 {
    pub version: u32,
    pub stat: ExtremeKind,
    pub x: Vec<f64>,
    pub columns: Vec<Table1Column>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Table1Column {
    pub label: String,
    /// Parameters as given in the text.
    pub stated: Model,
    /// Parameters that reproduce the printed column.
    pub reconstructed: Model,
    pub printed: Vec<f64>,
    /// Levels whose printed value carries a wrong power of ten.
    #[serde(default)]
    pub exponent_typo_x: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Table2 {
    pub version: u32,
    pub stat: ExtremeKind,
    pub x: f64,
    pub orientation: RatioOrientation,
    pub d: Vec<f64>,
    pub rows: Vec<Table2Row>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Table2Row {
    pub label: String,
    pub family: FamilySpec,
    pub printed: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum FamilySpec {
    Common { theta0: f64, theta: f64 },
    Comonotonic { rates: String, theta: f64 },
    Thinning { thetas: Vec<f64>, probs: Vec<f64> },
}

impl FamilySpec {
    pub fn to_family(&self) -> CliResult<DimFamily> {
        Ok(match self {
            FamilySpec::Common { theta0, theta } => DimFamily::Common {
                theta0: *theta0,
                theta: *theta,
            },
            FamilySpec::Comonotonic { rates, theta } => DimFamily::Comonotonic {
                rates: rates.parse::<RateSequence>()?,
                theta: *theta,
            },
            FamilySpec::Thinning { thetas, probs } => DimFamily::Thinning {
                thetas: thetas.clone(),
                probs: probs.clone(),
            },
        })
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Table3 {
    pub version: u32,
    pub stat: ExtremeKind,
    pub x: f64,
    pub rows: Vec<Table3Row>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Table3Row {
    pub label: String,
    pub base: Model,
    pub param: SweepParam,
    pub limit: Limit,
    pub orientation: RatioOrientation,
    pub sweep: Vec<f64>,
    pub printed: Vec<f64>,
    /// The printed setup leaves a parameter open, so only the trend is
    /// checked.
    pub qualitative: bool,
}

fn load<T: for<'de> Deserialize<'de>>(name: &str, text: &str, version: impl Fn(&T) -> u32) -> CliResult<T> {
    let t: T = serde_json::from_str(text).map_err(|e| CliError::Validation(format!("{name}: {e}")))?;
    if version(&t) != SUPPORTED_VERSION {
        return Err(CliError::Validation(format!("{name}: unsupported fixture version {}", version(&t))));
    }
    Ok(t)
}

pub fn table1() -> CliResult<Table1> {
    load("table1.json", TABLE1_JSON, |t: &Table1| t.version)
}

pub fn table2() -> CliResult<Table2> {
    load("table2.json", TABLE2_JSON, |t: &Table2| t.version)
}

pub fn table3() -> CliResult<Table3> {
    load("table3.json", TABLE3_JSON, |t: &Table3| t.version)
}
