//! Bundled scenarios and the data behind each reproduced figure and table.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::analytic::{optimal_operating_point, spectral_overlap_factor};
use crate::config::{parse_document, ScenarioDocument};
use crate::error::{Error, Result};
use crate::model::Scenario;
use crate::prob::rate_hz;
use crate::runner::{calibrate, compare_mux, log_grid, predict, Calibration, MuxCompareOptions};
use crate::table::{num, opt_num, Table};

const BUNDLED: &[(&str, &str)] = &[
    ("table1", include_str!("../scenarios/table1.scenario")),
    ("channel1", include_str!("../scenarios/channel1.scenario")),
    ("identical3", include_str!("../scenarios/identical3.scenario")),
];

pub fn bundled_names() -> impl Iterator<Item = &'static str> {
    BUNDLED.iter().map(|(n, _)| *n)
}

pub fn bundled_source(name: &str) -> Option<&'static str> {
    BUNDLED.iter().find(|(n, _)| *n == name).map(|(_, text)| *text)
}

pub fn bundled(name: &str) -> Result<ScenarioDocument> {
    let text = bundled_source(name).ok_or_else(|| Error::Validation(format!("no bundled scenario `{name}`")))?;
    parse_document(text)
}

/// Quoted single-channel coincidence rates: (channel, pump mW, rate Hz).
pub const QUOTED_RATES: [(&str, f64, f64); 4] =
    [("ch1", 4.25, 27.0), ("ch2", 4.25, 27.0), ("ch3", 4.25, 6.0), ("ch4", 4.25, 17.0)];

/// Channel subsets of the multiplexing comparison.
pub fn mux_subsets() -> Vec<(&'static str, Vec<String>)> {
    let s = |xs: &[&str]| xs.iter().map(|x| x.to_string()).collect::<Vec<_>>();
    vec![
        ("MUX-2-1", s(&["ch1", "ch4"])),
        ("MUX-3-1", s(&["ch1", "ch2", "ch4"])),
        ("MUX-4-1", s(&["ch1", "ch2", "ch3", "ch4"])),
    ]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Figure {
    Fig3a,
    Fig3b,
    Fig3c,
    Table1,
}

impl Figure {
    pub const ALL: [Figure; 4] = [Figure::Fig3a, Figure::Fig3b, Figure::Fig3c, Figure::Table1];
}

impl fmt::Display for Figure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Figure::Fig3a => "fig3a",
            Figure::Fig3b => "fig3b",
            Figure::Fig3c => "fig3c",
            Figure::Table1 => "table1",
        })
    }
}

impl FromStr for Figure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Figure::ALL
            .into_iter()
            .find(|f| f.to_string() == s)
            .ok_or_else(|| Error::Validation(format!("unknown figure `{s}` (expected fig3a, fig3b, fig3c or table1)")))
    }
}

pub fn reproduce(figure: Figure) -> Result<Vec<Table>> {
    let s = bundled("table1")?.scenario;
    match figure {
        Figure::Fig3a => fig3a(&s),
        Figure::Fig3b => fig3b(&s),
        Figure::Fig3c => fig3c(&s),
        Figure::Table1 => table1(&s),
    }
}

/// Writes each table to `<out_dir>/<name>.csv`.
pub fn write_tables(tables: &[Table], out_dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out_dir)?;
    tables
        .iter()
        .map(|t| {
            let path = out_dir.join(format!("{}.csv", t.name));
            t.write_csv(std::fs::File::create(&path)?)?;
            Ok(path)
        })
        .collect()
}

/// Per-channel fitted noise, optimum and maximum CAR.
pub fn table1(s: &Scenario) -> Result<Vec<Table>> {
    let r = s.resolve()?;
    let mut t = Table::new(
        "table1",
        &[
            "channel",
            "mu",
            "eta_idler_db",
            "eta_signal_db",
            "d_idler",
            "d_signal_fitted",
            "c_star",
            "rate_at_c_star_hz",
            "car_max",
            "car_max_measured",
        ],
    );
    for (spec, ch) in s.channels.iter().zip(&r.channels) {
        let a = ch.analytic();
        let (c_star, car_max) = optimal_operating_point(a.eta_s, a.eta_i, a.d_i, a.d_s)?;
        t.push(vec![
            spec.label.clone(),
            num(spec.mu),
            num(spec.eta_idler_db),
            num(spec.eta_signal_db),
            num(a.d_i),
            num(a.d_s),
            num(c_star),
            num(rate_hz(c_star, r.rep_rate_hz)),
            num(car_max),
            opt_num(spec.max_car),
        ]);
    }
    let mut extra = Table::new("table1_spectral", &["quantity", "value"]);
    if let Some(sp) = &s.spectral {
        extra.push(vec!["spectral_overlap_factor".into(), num(spectral_overlap_factor(sp))]);
        extra.push(vec!["spectral_overlap_estimate".into(), num(0.5)]);
    }
    Ok(vec![t, extra])
}

/// Brightness slope of every channel from its quoted rate.
pub fn calibrations(s: &Scenario) -> Result<Vec<Calibration>> {
    QUOTED_RATES.iter().map(|&(ch, p, r)| calibrate(s, ch, &[(p, r)])).collect()
}

/// Rate against pump power. Single channels are taken at the channel
/// (before the switch tree); the four-way series goes through the tree.
pub fn fig3a(s: &Scenario) -> Result<Vec<Table>> {
    let cals = calibrations(s)?;
    let mut cal = Table::new(
        "fig3a_calibration",
        &[
            "channel",
            "pump_power_mw",
            "rate_hz",
            "brightness_slope_per_mw",
            "implied_mu",
            "listed_mu",
            "implied_over_listed",
        ],
    );
    let mut calibrated = s.clone();
    for (c, &(label, p, rate)) in cals.iter().zip(&QUOTED_RATES) {
        let idx = s.channel_index(label).expect("bundled channel");
        let listed = s.channels[idx].mu;
        calibrated.channels[idx].brightness_slope = Some(c.brightness_slope_per_mw);
        cal.push(vec![
            label.into(),
            num(p),
            num(rate),
            num(c.brightness_slope_per_mw),
            num(c.implied_mu[0]),
            num(listed),
            num(c.implied_mu[0] / listed),
        ]);
    }

    let r = s.resolve()?;
    let powers: Vec<f64> = (1..=17).map(|k| 0.25 * k as f64).collect();
    let mut t = Table::new("fig3a", &["series", "pump_power_mw", "mu", "coincidence_per_pulse", "rate_hz"]);
    for (i, ch) in r.channels.iter().enumerate() {
        let slope = calibrated.channels[i].brightness_slope.expect("calibrated");
        for &p in &powers {
            let a = ch.analytic();
            let c = slope * p * a.eta_s * a.eta_i;
            t.push(vec![format!("single-{}", ch.label), num(p), num(slope * p), num(c), num(rate_hz(c, r.rep_rate_hz))]);
        }
    }
    for &p in &powers {
        let at = calibrated.at_pump_power(p)?;
        let pred = predict(&at)?;
        let mu_total: f64 = at.channels.iter().map(|c| c.mu).sum();
        t.push(vec![
            "MUX-4-1".into(),
            num(p),
            num(mu_total),
            num(pred.coincidence_per_pulse),
            num(rate_hz(pred.coincidence_per_pulse, r.rep_rate_hz)),
        ]);
    }
    Ok(vec![t, cal])
}

/// CAR against coincidence rate for each channel on its own, from c*/100 to 100 c*.
pub fn fig3b(s: &Scenario) -> Result<Vec<Table>> {
    let r = s.resolve()?;
    let mut t = Table::new("fig3b", &["series", "coincidence_per_pulse", "rate_hz", "car"]);
    for ch in &r.channels {
        let a = ch.analytic();
        let (c_star, _) = optimal_operating_point(a.eta_s, a.eta_i, a.d_i, a.d_s)?;
        for c in log_grid(c_star / 100.0, c_star * 100.0, 201) {
            let car = crate::analytic::car(c, a.eta_s, a.eta_i, a.d_i, a.d_s)?;
            t.push(vec![format!("single-{}", ch.label), num(c), num(rate_hz(c, r.rep_rate_hz)), num(car)]);
        }
    }
    Ok(vec![t])
}

/// CAR against coincidence rate for the singles and the multiplexed sets,
/// each channel keeping its path through the switch tree.
pub fn fig3c(s: &Scenario) -> Result<Vec<Table>> {
    let subsets = mux_subsets();
    let lists: Vec<Vec<String>> = subsets.iter().map(|(_, l)| l.clone()).collect();
    let report = compare_mux(s, &lists, &MuxCompareOptions::default())?;

    let mut curves = Table::new("fig3c", &["series", "mu_scale", "coincidence_per_pulse", "rate_hz", "car"]);
    let mut summary = Table::new(
        "fig3c_summary",
        &[
            "series",
            "channels",
            "car_max",
            "reference_car",
            "rate_at_reference_hz",
            "scale_at_reference",
            "enhancement",
            "rate_at_unit_scale_hz",
            "car_at_unit_scale",
        ],
    );
    for c in report.singles.iter().chain(&report.configs) {
        for p in &c.curve {
            curves.push(vec![c.name.clone(), num(p.scale), num(p.coincidence_per_pulse), num(p.rate_hz), num(p.car)]);
        }
        let enhancement = match (c.at_reference, report.best_single_rate_hz) {
            (Some(p), Some(b)) => Some(p.rate_hz / b),
            _ => None,
        };
        summary.push(vec![
            c.name.clone(),
            c.channels.join(" "),
            num(c.car_max),
            num(report.reference_car),
            opt_num(c.at_reference.map(|p| p.rate_hz)),
            opt_num(c.at_reference.map(|p| p.scale)),
            opt_num(enhancement),
            num(c.at_unit_scale.rate_hz),
            num(c.at_unit_scale.car),
        ]);
    }
    Ok(vec![curves, summary])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_scenarios_parse() {
        for name in bundled_names() {
            bundled(name).unwrap_or_else(|e| panic!("{name}: {e}"));
        }
        assert!(bundled("nope").is_err());
    }

    #[test]
    fn figure_names_round_trip() {
        for f in Figure::ALL {
            assert_eq!(f.to_string().parse::<Figure>().unwrap(), f);
        }
        assert!("fig4".parse::<Figure>().is_err());
    }

    #[test]
    fn table1_reproduces_measured_maxima() {
        let t = &reproduce(Figure::Table1).unwrap()[0];
        for row in &t.rows {
            let got: f64 = row[8].parse().unwrap();
            let want: f64 = row[9].parse().unwrap();
            assert!((got - want).abs() < 1e-6, "{row:?}");
        }
    }

    #[test]
    fn mux3_beats_every_single_at_reference() {
        let tables = reproduce(Figure::Fig3c).unwrap();
        let summary = &tables[1];
        let rate = |name: &str| -> Option<f64> {
            summary.rows.iter().find(|r| r[0] == name).and_then(|r| r[4].parse().ok())
        };
        let mux3 = rate("MUX-3-1").unwrap();
        for ch in ["ch1", "ch2", "ch3", "ch4"] {
            if let Some(single) = rate(&format!("single-{ch}")) {
                assert!(mux3 > single, "{ch}: {single} vs {mux3}");
            }
        }
        assert_eq!(rate("single-ch3"), None);
    }
}
