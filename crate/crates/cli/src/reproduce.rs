//! Recompute the published tables next to their printed values.

use mvpois::asymptotics::{ratio_sweep, ModelKind, Regime, SweepTemplate};
use mvpois::extrema::extreme_cdf;
use mvpois::{ExtremeQuery, Model};
use rayon::prelude::*;

use crate::error::CliResult;
use crate::fixtures;
use crate::table::{Cell, Table};

/// Which parameter sets drive the CDF table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum ParamSet {
    /// As given in the text.
    Stated,
    /// Fitted to the printed columns.
    Reconstructed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CdfCell {
    pub config: String,
    pub x: f64,
    pub value: f64,
    pub printed: f64,
    pub exponent_typo: bool,
}

impl CdfCell {
    pub fn abs_diff(&self) -> f64 {
        (self.value - self.printed).abs()
    }
}

pub fn table1_cells(params: ParamSet, tail_eps: f64) -> CliResult<Vec<CdfCell>> {
    let t = fixtures::table1()?;
    let jobs: Vec<(usize, usize)> = (0..t.columns.len())
        .flat_map(|c| (0..t.x.len()).map(move |i| (c, i)))
        .collect();
    jobs.par_iter()
        .map(|&(c, i)| {
            let col = &t.columns[c];
            let model = match params {
                ParamSet::Stated => &col.stated,
                ParamSet::Reconstructed => &col.reconstructed,
            };
            let x = t.x[i];
            let q = ExtremeQuery::new(t.stat, x).with_tail_eps(tail_eps)?;
            Ok(CdfCell {
                config: col.label.clone(),
                x,
                value: extreme_cdf(model, &q)?.value,
                printed: col.printed[i],
                exponent_typo: col.exponent_typo_x.contains(&x),
            })
        })
        .collect()
}

pub fn table1(params: ParamSet, tail_eps: f64) -> CliResult<Table> {
    let mut out = Table::new(&["config", "x", "value", "printed_value", "abs_diff", "note"]);
    for c in table1_cells(params, tail_eps)? {
        let note = if c.exponent_typo { "printed_exponent_typo" } else { "" };
        out.push(vec![
            c.config.clone().into(),
            c.x.into(),
            c.value.into(),
            c.printed.into(),
            c.abs_diff().into(),
            note.into(),
        ]);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RatioCell {
    pub row: String,
    pub param: f64,
    pub exact: f64,
    pub target: f64,
    pub ratio: f64,
    pub printed: f64,
    pub method: &'static str,
    pub qualitative: bool,
}

impl RatioCell {
    pub fn abs_diff(&self) -> f64 {
        (self.ratio - self.printed).abs()
    }
}

fn ratio_cells(
    label: &str,
    template: &SweepTemplate,
    regime: &Regime,
    x: f64,
    sweep: &[f64],
    printed: &[f64],
    orientation: mvpois::asymptotics::RatioOrientation,
    qualitative: bool,
) -> CliResult<Vec<RatioCell>> {
    let rows: Vec<_> = sweep
        .par_iter()
        .map(|&v| ratio_sweep(template, regime, x, &[v], orientation).map(|mut r| r.remove(0)))
        .collect::<Result<_, _>>()?;
    Ok(rows
        .into_iter()
        .zip(printed)
        .map(|(r, &p)| RatioCell {
            row: label.to_string(),
            param: r.param,
            exact: r.exact.value,
            target: r.target.value,
            ratio: r.ratio,
            printed: p,
            method: r.exact.method.as_str(),
            qualitative,
        })
        .collect())
}

fn model_kind(family: &mvpois::asymptotics::DimFamily) -> ModelKind {
    use mvpois::asymptotics::DimFamily;
    match family {
        DimFamily::Common { .. } => ModelKind::Common,
        DimFamily::Comonotonic { .. } => ModelKind::Comonotonic,
        DimFamily::Thinning { .. } => ModelKind::Thinning,
    }
}

pub fn table2_cells() -> CliResult<Vec<RatioCell>> {
    let t = fixtures::table2()?;
    let mut out = Vec::new();
    for row in &t.rows {
        let family = row.family.to_family()?;
        let regime = Regime::new(model_kind(&family), mvpois::asymptotics::Limit::DimToInf, t.stat);
        let template = SweepTemplate::Dim(family);
        out.extend(ratio_cells(&row.label, &template, &regime, t.x, &t.d, &row.printed, t.orientation, false)?);
    }
    Ok(out)
}

pub fn table3_cells() -> CliResult<Vec<RatioCell>> {
    let t = fixtures::table3()?;
    let mut out = Vec::new();
    for row in &t.rows {
        let regime = Regime::new(ModelKind::of(&row.base), row.limit, t.stat);
        let template = SweepTemplate::Scalar {
            base: row.base.clone(),
            param: row.param,
        };
        out.extend(ratio_cells(
            &row.label,
            &template,
            &regime,
            t.x,
            &row.sweep,
            &row.printed,
            row.orientation,
            row.qualitative,
        )?);
    }
    Ok(out)
}

fn ratio_table(cells: &[RatioCell], param: &str) -> Table {
    let mut out = Table::new(&[
        "row",
        param,
        "exact",
        "target",
        "ratio",
        "printed_value",
        "abs_diff",
        "method",
        "check",
    ]);
    for c in cells {
        out.push(vec![
            c.row.clone().into(),
            c.param.into(),
            c.exact.into(),
            c.target.into(),
            c.ratio.into(),
            c.printed.into(),
            c.abs_diff().into(),
            c.method.into(),
            Cell::from(if c.qualitative { "qualitative" } else { "quantitative" }),
        ]);
    }
    out
}

pub fn table2() -> CliResult<Table> {
    Ok(ratio_table(&table2_cells()?, "d"))
}

pub fn table3() -> CliResult<Table> {
    Ok(ratio_table(&table3_cells()?, "param"))
}

/// Every Table 1 model under the chosen parameter set, with its label.
pub fn table1_models(params: ParamSet) -> CliResult<Vec<(String, Model)>> {
    Ok(fixtures::table1()?
        .columns
        .into_iter()
        .map(|c| {
            let m = match params {
                ParamSet::Stated => c.stated,
                ParamSet::Reconstructed => c.reconstructed,
            };
            (c.label, m)
        })
        .collect())
}
