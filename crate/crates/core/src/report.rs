//! CSV tables for a planned configuration: per-product LCA, byproduct reuse,
//! and planetary-boundary status.

use std::fmt::Write;

use crate::bitset::reuse_match;
use crate::economy::{Configuration, Demand, Economy, MaterialId};
use crate::error::Error;
use crate::io::{EconomyDocument, ResultDocument};
use crate::lca::{LcaMemo, PlanetaryBounds};
use crate::search::{evaluate, replay, Objective};

/// Renders `x` with 9 significant digits, trailing zeros trimmed; switches to
/// exponent notation outside [1e-5, 1e9).
pub fn format_sig9(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{x:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..9).contains(&exp) {
        let decimals = (8 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}"))
    } else {
        format!("{}e{exp}", trim_zeros(mantissa))
    }
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// The three tables for `config`, separated by blank lines.
pub fn render_tables(
    economy: &Economy,
    config: &Configuration,
    demand: &Demand,
    bounds: &PlanetaryBounds,
    reuse_credit: bool,
) -> Result<String, Error> {
    let mut out = String::new();
    let materials: Vec<String> = economy.raw_materials().iter().map(|m| csv_field(&m.name)).collect();

    out.push_str("product,time,climate");
    for m in &materials {
        write!(out, ",{m}").unwrap();
    }
    out.push('\n');
    let mut memo = LcaMemo::new();
    for p in economy.products() {
        let v = memo.get(economy, config, p.id)?;
        write!(out, "{},{},{}", csv_field(&p.name), format_sig9(v.time), format_sig9(v.climate)).unwrap();
        for q in &v.materials {
            write!(out, ",{}", format_sig9(*q)).unwrap();
        }
        out.push('\n');
    }

    out.push('\n');
    out.push_str("material,gross,supply,reused,net\n");
    let reuse = reuse_match(economy, config, demand);
    for m in reuse.materials.iter().filter(|m| m.supply > 0.0) {
        writeln!(
            out,
            "{},{},{},{},{}",
            materials[m.material.0],
            format_sig9(m.gross),
            format_sig9(m.supply),
            format_sig9(m.reused),
            format_sig9(m.net)
        )
        .unwrap();
    }

    out.push('\n');
    out.push_str("indicator,value,cap,excess\n");
    // weights do not affect the bounds table
    let mut objective = Objective::new(crate::lca::Weights::uniform(economy.material_count(), 1.0), bounds.clone());
    objective.reuse_credit = reuse_credit;
    let impact = evaluate(economy, config, demand, &objective)?.impact;
    for (indicator, value) in impact.indicators() {
        let label = match indicator {
            crate::lca::Indicator::Material(MaterialId(i)) => materials[i].clone(),
            other => other.to_string(),
        };
        let (cap, excess) = match bounds.cap(indicator) {
            Some(cap) => (format_sig9(cap), format_sig9((value - cap).max(0.0))),
            None => (String::new(), "0".into()),
        };
        writeln!(out, "{label},{},{cap},{excess}", format_sig9(value)).unwrap();
    }
    Ok(out)
}

/// Report for a search result; fails if the result was produced for a
/// different economy document.
pub fn render_report(economy_doc: &EconomyDocument, result: &ResultDocument) -> Result<String, Error> {
    let actual = economy_doc.schema_hash();
    if actual != result.schema_hash {
        return Err(Error::SchemaMismatch {
            expected: result.schema_hash.clone(),
            actual,
        });
    }
    let economy = economy_doc.to_economy()?;
    let plan = result.plan.resolve(&economy)?;
    let config = replay(&economy, &plan.demand, &result.moves(&economy)?)?;
    render_tables(&economy, &config, &plan.demand, &plan.bounds, plan.reuse_credit)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixture;

    #[test]
    fn sig9_formatting() {
        assert_eq!(format_sig9(5.0), "5");
        assert_eq!(format_sig9(11.0), "11");
        assert_eq!(format_sig9(0.5), "0.5");
        assert_eq!(format_sig9(-0.0), "0");
        assert_eq!(format_sig9(1.0 / 3.0), "0.333333333");
        assert_eq!(format_sig9(123456789.4), "123456789");
        assert_eq!(format_sig9(1234567890.0), "1.23456789e9");
        assert_eq!(format_sig9(0.000012345), "0.000012345");
        assert_eq!(format_sig9(1.5e-7), "1.5e-7");
        assert_eq!(format_sig9(-2.25), "-2.25");
    }

    #[test]
    fn default_config_rows() {
        let e = fixture::micro_economy();
        let c = Configuration::default_for(&e);
        let d = Demand::single(&e, e.product_id("B").unwrap(), 1.0).unwrap();
        let bounds = PlanetaryBounds::unbounded(3).with_climate(12.0);
        let out = render_tables(&e, &c, &d, &bounds, false).unwrap();
        let sections: Vec<&str> = out.split("\n\n").collect();
        assert_eq!(sections.len(), 3);
        assert!(sections[0].starts_with("product,time,climate,steel,recycled_steel,plastic\n"));
        assert!(sections[0].lines().any(|l| l == "B,7,19,2,0,3"));
        // no byproducts: header only
        assert_eq!(sections[1], "material,gross,supply,reused,net");
        assert!(sections[2].lines().any(|l| l == "climate,19,12,7"));
        assert!(sections[2].lines().any(|l| l == "time,7,,0"));
    }

    #[test]
    fn reuse_rows() {
        let e = fixture::micro_with_byproduct("steel", 0.5);
        let c = Configuration::default_for(&e);
        let d = Demand::single(&e, e.product_id("B").unwrap(), 1.0).unwrap();
        let out = render_tables(&e, &c, &d, &PlanetaryBounds::unbounded(3), false).unwrap();
        assert!(out.contains("material,gross,supply,reused,net\nsteel,2,0.5,0.5,1.5\n"));
    }
}
