use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use herald_mux::analytic::{central_wavelength, coincidence_at_car, optimal_operating_point, spectral_overlap_factor};
use herald_mux::config::{load_document, ScenarioDocument};
use herald_mux::mc::{self, CarEstimate};
use herald_mux::prob::rate_hz;
use herald_mux::recipes::{self, Figure};
use herald_mux::runner::{
    calibrate, compare_mux, predict, sweep, sweep_table, EngineSelector, MuxCompareOptions, SweepParameter, SweepSpec,
};
use herald_mux::table::{num, opt_num, Table};
use herald_mux::{Result, Scenario};

const EXIT_VALIDATION: u8 = 2;
const EXIT_RUNTIME: u8 = 3;
/// Tables longer than this are only written to files by `reproduce`.
const MAX_PRINTED_ROWS: usize = 100;

#[derive(Parser)]
#[command(name = "herald-mux", version, about = "Analytic model and Monte Carlo of multiplexed heralded photon sources")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Random seed (overrides the scenario file).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Number of pump pulses to simulate (overrides the scenario file).
    #[arg(long, global = true)]
    pulses: Option<u64>,
    /// Number of independent random streams (overrides the scenario file).
    #[arg(long, global = true)]
    shards: Option<u32>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Directory to write CSV files into.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Text,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form CAR, optimum and multiplexed prediction per channel.
    Analytic {
        /// Scenario file, or `bundled:<name>` (table1, channel1, identical3).
        scenario: String,
        /// CAR level for the operating-point columns.
        #[arg(long, default_value_t = 10.0)]
        reference_car: f64,
    },
    /// Pulse-slot Monte Carlo of the scenario.
    Simulate {
        /// Scenario file or `bundled:<name>`.
        scenario: String,
    },
    /// Sweep one parameter with either or both engines.
    Sweep {
        /// Scenario file or `bundled:<name>`.
        scenario: String,
        /// Swept parameter; defaults to the file's [sweep] section.
        #[arg(long, value_enum)]
        param: Option<Param>,
        /// Grid values, comma separated.
        #[arg(long, value_delimiter = ',')]
        values: Option<Vec<f64>>,
        #[arg(long, value_enum)]
        engine: Option<Engine>,
        /// Restrict to these channels, comma separated.
        #[arg(long, value_delimiter = ',')]
        channels: Option<Vec<String>>,
    },
    /// Rates of channel subsets at a common CAR.
    MuxCompare {
        /// Scenario file or `bundled:<name>`.
        scenario: String,
        /// Channel subset, comma separated; repeat for several.
        /// Defaults to all channels together.
        #[arg(long = "subset")]
        subsets: Vec<String>,
        #[arg(long, default_value_t = 10.0)]
        reference_car: f64,
    },
    /// Brightness slope of one channel from measured (power, rate) points.
    Calibrate {
        /// Scenario file or `bundled:<name>`.
        scenario: String,
        #[arg(long)]
        channel: String,
        /// Measurement as `<power_mw>:<rate_hz>`; repeat for several.
        #[arg(long = "point", required = true, value_parser = parse_point)]
        points: Vec<(f64, f64)>,
    },
    /// Regenerate the data of a figure or table from the bundled scenarios.
    Reproduce {
        /// fig3a, fig3b, fig3c, table1 or all.
        figure: String,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Param {
    MuScale,
    PumpPowerMw,
    CoincidencePerPulse,
}

#[derive(Clone, Copy, ValueEnum)]
enum Engine {
    Analytic,
    MonteCarlo,
    Both,
}

fn parse_point(s: &str) -> std::result::Result<(f64, f64), String> {
    let (p, r) = s.split_once(':').ok_or_else(|| format!("expected <power_mw>:<rate_hz>, got `{s}`"))?;
    let p = p.trim().parse::<f64>().map_err(|e| format!("power `{p}`: {e}"))?;
    let r = r.trim().parse::<f64>().map_err(|e| format!("rate `{r}`: {e}"))?;
    Ok((p, r))
}

fn load(path: &str) -> Result<ScenarioDocument> {
    match path.strip_prefix("bundled:") {
        Some(name) => recipes::bundled(name),
        None => load_document(Path::new(path)),
    }
}

impl Cli {
    /// Applies command-line overrides and revalidates.
    fn scenario(&self, doc: &ScenarioDocument) -> Result<Scenario> {
        let mut s = doc.scenario.clone();
        if let Some(seed) = self.seed {
            s.mc.seed = seed;
        }
        if let Some(p) = self.pulses {
            s.mc.num_pulses = p;
        }
        if let Some(k) = self.shards {
            s.mc.shards = k;
        }
        s.validate()?;
        Ok(s)
    }

    fn emit(&self, tables: &[Table]) -> Result<()> {
        if let Some(dir) = &self.out {
            for path in recipes::write_tables(tables, dir)? {
                eprintln!("wrote {}", path.display());
            }
        }
        print_tables(self.format, tables)
    }
}

fn print_tables(format: Format, tables: &[Table]) -> Result<()> {
    let stdout = io::stdout();
    let mut w = stdout.lock();
    for (i, t) in tables.iter().enumerate() {
        if i > 0 {
            writeln!(w)?;
        }
        if t.rows.len() > MAX_PRINTED_ROWS {
            writeln!(w, "# {}: {} rows (use --out to write them)", t.name, t.rows.len())?;
            continue;
        }
        match format {
            Format::Text => t.write_text(&mut w)?,
            Format::Csv => {
                writeln!(w, "# {}", t.name)?;
                t.write_csv(&mut w)?;
            }
        }
    }
    Ok(())
}

fn analytic_tables(s: &Scenario, reference_car: f64) -> Result<Vec<Table>> {
    let r = s.resolve()?;
    let mut chans = Table::new(
        "channels",
        &[
            "channel",
            "mu",
            "eta_idler",
            "eta_signal",
            "d_idler",
            "d_signal",
            "coincidence_per_pulse",
            "rate_hz",
            "car",
            "c_star",
            "car_max",
            "reference_car",
            "c_at_reference_low",
            "c_at_reference_high",
        ],
    );
    for ch in &r.channels {
        let a = ch.analytic();
        let opt = optimal_operating_point(a.eta_s, a.eta_i, a.d_i, a.d_s).ok();
        let at_ref = coincidence_at_car(reference_car, a.eta_s, a.eta_i, a.d_i, a.d_s)?;
        chans.push(vec![
            ch.label.clone(),
            num(ch.mu),
            num(a.eta_i),
            num(a.eta_s),
            num(a.d_i),
            num(a.d_s),
            num(a.c),
            num(rate_hz(a.c, r.rep_rate_hz)),
            a.car().map(num).unwrap_or_default(),
            opt_num(opt.map(|o| o.0)),
            opt_num(opt.map(|o| o.1)),
            num(reference_car),
            opt_num(at_ref.map(|x| x.0)),
            opt_num(at_ref.map(|x| x.1)),
        ]);
    }

    let p = predict(s)?;
    let mut mux = Table::new("mux", &["quantity", "value"]);
    let mut row = |k: &str, v: f64| mux.push(vec![k.to_string(), num(v)]);
    row("herald_prob_per_pulse", p.herald_prob_per_pulse);
    row("coincidence_per_pulse", p.coincidence_per_pulse);
    row("rate_hz", rate_hz(p.coincidence_per_pulse, r.rep_rate_hz));
    row("accidental_per_pulse", p.accidental_per_pulse);
    row("car", p.car);
    for (ch, sp) in r.channels.iter().zip(&p.selection_probs) {
        row(&format!("selection_prob_{}", ch.label), *sp);
    }
    let mut tables = vec![chans, mux];

    if let Some(sp) = &s.spectral {
        let mut t = Table::new("spectral", &["quantity", "value"]);
        t.push(vec!["overlap_factor".into(), num(spectral_overlap_factor(sp))]);
        t.push(vec!["center_wavelength_nm".into(), num(central_wavelength(sp.temperature_ref_k, sp))]);
        tables.push(t);
    }
    Ok(tables)
}

fn simulate_tables(s: &Scenario) -> Result<Vec<Table>> {
    let res = mc::run_sharded(s, s.mc.shards)?;
    let pred = predict(s)?;
    let rep = s.laser.rep_rate_hz;
    let t = &res.tally;

    let mut sum = Table::new("simulate", &["quantity", "value", "err"]);
    let mut add = |k: &str, v: String, e: String| sum.push(vec![k.to_string(), v, e]);
    add("seed", res.metadata.seed.to_string(), String::new());
    add("pulses", res.metadata.pulses.to_string(), String::new());
    add("shards", res.metadata.shards.to_string(), String::new());
    add("scenario_digest", res.metadata.scenario_digest.clone(), String::new());
    add("accidental_method", res.metadata.accidental_method.clone(), String::new());
    add("herald_clicks", t.herald_clicks().to_string(), String::new());
    add("coincidences", t.coincidences.to_string(), String::new());
    add("accidentals_shifted", t.accidentals_shifted.to_string(), String::new());
    add("accidental_windows", t.accidental_windows.to_string(), String::new());
    add("heralded_detector_darks", t.heralded_detector_darks.to_string(), String::new());
    match res.car_measured {
        CarEstimate::Value(e) => add("car_raw", num(e.value), num(e.err)),
        CarEstimate::LowerBound(b) => add("car_raw_lower_bound", num(b), String::new()),
    }
    match res.car_net {
        Some(e) => add("car_net", num(e.value), num(e.err)),
        None => add("car_net", String::new(), String::new()),
    }
    add("heralded_rate_hz", num(res.heralded_rate_hz.value), num(res.heralded_rate_hz.err));
    add("net_rate_hz", num(res.net_rate_hz.value), num(res.net_rate_hz.err));
    add("herald_rate_hz", num(res.herald_rate_hz.value), num(res.herald_rate_hz.err));
    add("analytic_car", num(pred.car), String::new());
    add("analytic_rate_hz", num(rate_hz(pred.coincidence_per_pulse, rep)), String::new());

    let mut per = Table::new(
        "simulate_channels",
        &["channel", "herald_clicks", "selected", "unrouted", "coincidences", "accidentals", "rate_hz", "rate_err"],
    );
    for ((ch, c), rate) in s.channels.iter().zip(&t.channels).zip(&res.channel_rates_hz) {
        per.push(vec![
            ch.label.clone(),
            c.herald_clicks.to_string(),
            c.selected.to_string(),
            c.unrouted.to_string(),
            c.coincidences.to_string(),
            c.accidentals.to_string(),
            num(rate.value),
            num(rate.err),
        ]);
    }
    Ok(vec![sum, per])
}

fn compare_tables(s: &Scenario, subsets: &[Vec<String>], reference_car: f64) -> Result<Vec<Table>> {
    let opts = MuxCompareOptions { reference_car, ..Default::default() };
    let report = compare_mux(s, subsets, &opts)?;
    let mut t = Table::new(
        "mux_compare",
        &[
            "config",
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
    let best = report.best_single_rate_hz;
    for c in report.singles.iter().chain(&report.configs) {
        let enh = match (c.at_reference, best) {
            (Some(p), Some(b)) => Some(p.rate_hz / b),
            _ => None,
        };
        t.push(vec![
            c.name.clone(),
            c.channels.join(" "),
            num(c.car_max),
            num(report.reference_car),
            opt_num(c.at_reference.map(|p| p.rate_hz)),
            opt_num(c.at_reference.map(|p| p.scale)),
            opt_num(enh),
            num(c.at_unit_scale.rate_hz),
            num(c.at_unit_scale.car),
        ]);
    }
    Ok(vec![t])
}

fn calibrate_tables(s: &Scenario, channel: &str, points: &[(f64, f64)]) -> Result<Vec<Table>> {
    let c = calibrate(s, channel, points)?;
    let listed = s.channel_index(channel).map(|i| s.channels[i].mu).unwrap_or(f64::NAN);
    let mut fit = Table::new(
        "calibration",
        &["channel", "rate_slope_hz_per_mw", "brightness_slope_per_mw", "rms_residual_hz", "listed_mu"],
    );
    fit.push(vec![
        c.channel.clone(),
        num(c.rate_slope_hz_per_mw),
        num(c.brightness_slope_per_mw),
        num(c.rms_residual_hz),
        num(listed),
    ]);
    let mut pts = Table::new(
        "calibration_points",
        &["pump_power_mw", "rate_hz", "fitted_rate_hz", "residual_hz", "implied_mu", "implied_over_listed"],
    );
    for (&(p, r, f, res), mu) in c.residuals.iter().zip(&c.implied_mu) {
        pts.push(vec![num(p), num(r), num(f), num(res), num(*mu), num(mu / listed)]);
    }
    Ok(vec![fit, pts])
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Analytic { scenario, reference_car } => {
            let s = cli.scenario(&load(scenario)?)?;
            cli.emit(&analytic_tables(&s, *reference_car)?)
        }
        Command::Simulate { scenario } => {
            let s = cli.scenario(&load(scenario)?)?;
            cli.emit(&simulate_tables(&s)?)
        }
        Command::Sweep { scenario, param, values, engine, channels } => {
            let doc = load(scenario)?;
            let s = cli.scenario(&doc)?;
            let mut spec = doc.sweep.clone().unwrap_or(SweepSpec {
                parameter: SweepParameter::MuScale,
                values: Vec::new(),
                engine: EngineSelector::Analytic,
                channels: None,
            });
            if let Some(p) = param {
                spec.parameter = match p {
                    Param::MuScale => SweepParameter::MuScale,
                    Param::PumpPowerMw => SweepParameter::PumpPowerMw,
                    Param::CoincidencePerPulse => SweepParameter::CoincidencePerPulse,
                };
            }
            if let Some(v) = values {
                spec.values = v.clone();
            }
            if let Some(e) = engine {
                spec.engine = match e {
                    Engine::Analytic => EngineSelector::Analytic,
                    Engine::MonteCarlo => EngineSelector::MonteCarlo,
                    Engine::Both => EngineSelector::Both,
                };
            }
            if channels.is_some() {
                spec.channels = channels.clone();
            }
            let rows = sweep(&s, &spec)?;
            cli.emit(&[sweep_table(&rows)])
        }
        Command::MuxCompare { scenario, subsets, reference_car } => {
            let s = cli.scenario(&load(scenario)?)?;
            let mut lists: Vec<Vec<String>> =
                subsets.iter().map(|x| x.split(',').map(|l| l.trim().to_string()).collect()).collect();
            if lists.is_empty() {
                lists.push(s.channels.iter().map(|c| c.label.clone()).collect());
            }
            cli.emit(&compare_tables(&s, &lists, *reference_car)?)
        }
        Command::Calibrate { scenario, channel, points } => {
            let s = cli.scenario(&load(scenario)?)?;
            cli.emit(&calibrate_tables(&s, channel, points)?)
        }
        Command::Reproduce { figure } => {
            let figures: Vec<Figure> = if figure == "all" { Figure::ALL.to_vec() } else { vec![figure.parse()?] };
            let dir = cli.out.clone().unwrap_or_else(|| PathBuf::from("reproduced"));
            let mut tables = Vec::new();
            for f in figures {
                tables.extend(recipes::reproduce(f)?);
            }
            for path in recipes::write_tables(&tables, &dir)? {
                eprintln!("wrote {}", path.display());
            }
            print_tables(cli.format, &tables)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_validation() { EXIT_VALIDATION } else { EXIT_RUNTIME })
        }
    }
}
