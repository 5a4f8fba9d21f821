//! Command-line front end: argument parsing, report rendering, exit codes.
//! All behavior lives in the library.

use clap::{Parser, Subcommand, ValueEnum};
use entnet::commands::{
    cmd_analyze, cmd_compare, cmd_plan, cmd_simulate, AnalyzeOptions, CompareReport, FiberBuild,
    PlanReport, ScenarioOverrides, SimulateOptions, TagFormat,
};
use entnet::Error;
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "entnet",
    version,
    about = "Plan, simulate, and analyze wavelength-multiplexed entanglement networks"
)]
struct Cli {
    /// Emit machine-readable JSON instead of tables.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum OnOff {
    On,
    Off,
}

#[derive(Clone, Copy, ValueEnum)]
enum FiberArg {
    /// The plant as configured in the scenario.
    Hollow,
    /// Every hollow segment replaced by the equal-loss solid build.
    Solid,
}

impl From<FiberArg> for FiberBuild {
    fn from(f: FiberArg) -> Self {
        match f {
            FiberArg::Hollow => FiberBuild::Hollow,
            FiberArg::Solid => FiberBuild::Solid,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum TagFormatArg {
    Csv,
    Binary,
}

#[derive(Subcommand)]
enum Command {
    /// Plan the full-mesh wavelength allocation and check classical gaps.
    Plan {
        /// Scenario TOML file.
        #[arg(long)]
        scenario: PathBuf,
        /// Also write the allocation as CSV to this path.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Synthesize a run: tag files, rate predictions, and a manifest.
    Simulate {
        /// Scenario TOML file.
        #[arg(long)]
        scenario: PathBuf,
        /// Output directory for the run.
        #[arg(long)]
        out: PathBuf,
        /// Acquisition time in seconds (scenario default otherwise).
        #[arg(long)]
        duration: Option<f64>,
        /// Random seed (scenario default otherwise).
        #[arg(long)]
        seed: Option<u64>,
        /// Force the classical carriers on or off.
        #[arg(long, value_enum)]
        coexistence: Option<OnOff>,
        /// Fiber build to simulate.
        #[arg(long, value_enum, default_value = "hollow")]
        fiber: FiberArg,
        /// Restrict recording to these users (comma separated).
        #[arg(long, value_delimiter = ',')]
        users: Option<Vec<String>>,
        /// Tag file format.
        #[arg(long, value_enum, default_value = "csv")]
        tags_format: TagFormatArg,
    },
    /// Reduce a simulated run to per-link statistics.
    Analyze {
        /// Run directory produced by `simulate`.
        #[arg(long)]
        run: PathBuf,
        /// Subtract the accidental floor estimated outside the window.
        #[arg(long)]
        background_subtract: bool,
        /// Histogram bin width override, ps.
        #[arg(long)]
        bin_ps: Option<i64>,
        /// Coincidence window override, ps.
        #[arg(long)]
        window_ps: Option<i64>,
        /// Fix the window on this delay instead of searching for a peak, ps.
        #[arg(long, allow_negative_numbers = true)]
        window_center: Option<i64>,
        /// Analyze only this link (name like `alice-bob`).
        #[arg(long)]
        link: Option<String>,
    },
    /// Analytic what-if table: baseline, coexistence off, solid fiber.
    Compare {
        /// Scenario TOML file.
        #[arg(long)]
        scenario: PathBuf,
    },
}

fn render_plan(report: &PlanReport) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "scenario {}: {} users, {} wavelength channels (center ITU {})\n",
        report.scenario, report.users, report.channels_required, report.center_itu
    ));
    out.push_str(&format!(
        "{:<10} {:>4} {:>7} {:>12} {:>12}  {}\n",
        "user", "itu", "offset", "freq_thz", "lambda_nm", "partner"
    ));
    for row in &report.rows {
        out.push_str(&format!(
            "{:<10} {:>4} {:>7} {:>12.4} {:>12.4}  {}\n",
            row.user, row.itu_index, row.offset, row.frequency_thz, row.wavelength_nm, row.partner_user
        ));
    }
    if report.violations.is_empty() {
        out.push_str(&format!(
            "classical gap check: all channels ≥ {} GHz clear\n",
            report.min_classical_gap_ghz
        ));
    } else {
        out.push_str(&format!(
            "classical gap check: {} violation(s) below {} GHz\n",
            report.violations.len(),
            report.min_classical_gap_ghz
        ));
        for v in &report.violations {
            out.push_str(&format!(
                "  quantum ITU {} ({}) vs classical ITU {}: gap {:.1} GHz\n",
                v.quantum_itu, v.quantum_user, v.classical_itu, v.gap_ghz
            ));
        }
    }
    out
}

fn render_compare(report: &CompareReport) -> String {
    let mut out = format!("scenario {}\n", report.scenario);
    for variant in &report.variants {
        out.push_str(&format!(
            "\n[{}] coexistence={} fiber={:?}\n",
            variant.variant, variant.coexistence, variant.fiber
        ));
        out.push_str(&format!(
            "{:<14} {:>9} {:>8} {:>12} {:>12} {:>14}\n",
            "link", "vis", "qber_%", "sifted_cps", "skr_bps", "floor_cps/bin"
        ));
        for l in &variant.links {
            out.push_str(&format!(
                "{:<14} {:>9.4} {:>8.2} {:>12.3} {:>12.4} {:>14.5}\n",
                l.link,
                l.visibility,
                l.qber * 100.0,
                l.sifted_cps,
                l.skr_bps,
                l.accidental_per_bin_cps
            ));
        }
    }
    out
}

fn to_json<T: serde::Serialize>(value: &T) -> Result<String, Error> {
    serde_json::to_string_pretty(value).map_err(|e| Error::Data(format!("JSON output: {e}")))
}

/// Writes to stdout, exiting quietly if the reader closed the pipe.
fn emit(text: &str) {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    if out.write_all(text.as_bytes()).is_err() || out.flush().is_err() {
        std::process::exit(0);
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Plan { scenario, out } => {
            let report = cmd_plan(&scenario, out.as_deref())?;
            if cli.json {
                emit(&format!("{}\n", to_json(&report)?));
            } else {
                emit(&render_plan(&report));
            }
            if !report.violations.is_empty() {
                return Err(Error::Validation { count: report.violations.len() });
            }
            Ok(())
        }
        Command::Simulate {
            scenario,
            out,
            duration,
            seed,
            coexistence,
            fiber,
            users,
            tags_format,
        } => {
            let manifest = cmd_simulate(&SimulateOptions {
                scenario_path: scenario,
                out_dir: out.clone(),
                duration_s: duration,
                seed,
                overrides: ScenarioOverrides {
                    coexistence: coexistence.map(|c| matches!(c, OnOff::On)),
                    fiber: fiber.into(),
                },
                users,
                tags_format: match tags_format {
                    TagFormatArg::Csv => TagFormat::Csv,
                    TagFormatArg::Binary => TagFormat::Binary,
                },
            })?;
            if cli.json {
                emit(&format!("{}\n", to_json(&manifest)?));
            } else {
                let events: u64 = manifest
                    .users
                    .iter()
                    .flat_map(|u| u.detectors.iter().map(|d| d.events))
                    .sum();
                emit(&format!(
                    "run written to {}: {} users, {} links, {} events over {} s (seed {})\n",
                    out.display(),
                    manifest.users.len(),
                    manifest.links.len(),
                    events,
                    manifest.duration_s,
                    manifest.seed
                ));
            }
            Ok(())
        }
        Command::Analyze {
            run: run_dir,
            background_subtract,
            bin_ps,
            window_ps,
            window_center,
            link,
        } => {
            let results = cmd_analyze(&AnalyzeOptions {
                run_dir,
                background_subtract,
                bin_ps,
                window_ps,
                window_center_ps: window_center,
                link,
            })?;
            if cli.json {
                emit(&format!("{}\n", to_json(&results)?));
            } else {
                let mut table = format!(
                    "{:<14} {:>9} {:>8} {:>9} {:>12} {:>12} {:>9} {:>5}\n",
                    "link", "vis", "qber_%", "err_pp", "sifted_cps", "skr_bps", "peak_ps", "bgsub"
                );
                for r in &results {
                    table.push_str(&format!(
                        "{:<14} {:>9.4} {:>8.2} {:>9.3} {:>12.3} {:>12.4} {:>9} {:>5}\n",
                        r.stats.link,
                        r.stats.visibility,
                        r.stats.qber * 100.0,
                        r.stats.qber_err * 100.0,
                        r.stats.sifted_cps,
                        r.stats.skr_bps,
                        r.peak_delay_ps,
                        r.stats.background_subtracted
                    ));
                }
                emit(&table);
            }
            Ok(())
        }
        Command::Compare { scenario } => {
            let report = cmd_compare(&scenario)?;
            if cli.json {
                emit(&format!("{}\n", to_json(&report)?));
            } else {
                emit(&render_compare(&report));
            }
            Ok(())
        }
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
