//! `demonlab`: command-line driver for the demon simulator.
//!
//! Every quantity on the command line and in output files is in units of
//! the qubit–qutrit coupling J (energies, rates) or 1/J (times).

mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use demonlab::engine::steady_state;
use demonlab::observables::{cycle_result, cycle_series, entropy, x_ss_inst};
use demonlab::output::{self, CycleRecord, Fig3Row, S5cRow, Table};
use demonlab::protocol::{build_cycle, RunManifest};
use demonlab::reduced::markov_validity;
use demonlab::shots::{self, oscillation_time, ShotOptions};
use demonlab::sweep::{self, GammaOptOptions, SweepSpec};
use demonlab::{DemonModel, ModelKind, Simulator, Subsystem, SystemParams};

use config::{CliError, Resolved};

#[derive(Parser)]
#[command(name = "demonlab", version, about = "Qutrit Maxwell demon between two damped qubits", long_about = None,
    after_help = "Energies, rates and temperatures are in units of the qubit-qutrit coupling J; times in units of 1/J.")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Debug, Default)]
pub struct Common {
    /// TOML run configuration: [params], [policy], out, workers
    #[arg(long, value_name = "FILE", global = true)]
    pub config: Option<PathBuf>,
    /// Coupling of the cold and hot qubits to their reservoirs [units of J]
    #[arg(long, value_name = "J", global = true, allow_negative_numbers = true)]
    pub gamma: Option<f64>,
    /// Demon period T [units of 1/J]
    #[arg(long = "T", value_name = "1/J", global = true, allow_negative_numbers = true)]
    pub period: Option<f64>,
    /// Override a parameter, e.g. --set tau_CZ=0.2 [units of J or 1/J]
    #[arg(long = "set", value_name = "NAME=VALUE", global = true)]
    pub set: Vec<String>,
    /// Output directory [default: current directory]
    #[arg(long, value_name = "DIR", global = true)]
    pub out: Option<PathBuf>,
    /// J in MHz; adds lab-unit values to the printed summary only, never to files
    #[arg(long = "unit-J-MHz", value_name = "MHz", global = true)]
    pub unit_j_mhz: Option<f64>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModelArg {
    Full,
    Reduced,
}

impl From<ModelArg> for ModelKind {
    fn from(m: ModelArg) -> Self {
        match m {
            ModelArg::Full => ModelKind::Full,
            ModelArg::Reduced => ModelKind::Reduced,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// One demon operation from the steady state; writes fig2.csv
    SingleShot {
        #[command(flatten)]
        common: Common,
        /// Largest sampling step [1/J]
        #[arg(long, default_value_t = 0.01)]
        dt: f64,
        /// End of the record [1/J]
        #[arg(long, default_value_t = 5.0)]
        t_end: f64,
    },
    /// Two operations with the memory reset in between; writes double_shot.csv
    /// and the population record double_shot_trajectory.csv
    DoubleShot {
        #[command(flatten)]
        common: Common,
        /// Start the second operation after k half swings, t = kπ/(2√2 J)
        #[arg(long, default_value_t = 4.0)]
        oscillations: f64,
        /// Start of the second operation [1/J]; overrides --oscillations
        #[arg(long)]
        t_tilde: Option<f64>,
        /// Largest sampling step of the record [1/J]
        #[arg(long, default_value_t = 0.01)]
        dt: f64,
        /// End of the record [1/J]
        #[arg(long, default_value_t = 10.0)]
        t_end: f64,
    },
    /// Limit-cycle transfer X and current J_av for one (γ, T); writes cycle.csv
    Cycles {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "full")]
        model: ModelArg,
        /// Also write X_{C,n}, X_{H,n} per cycle from ρ_ss to convergence.csv
        #[arg(long)]
        series: bool,
    },
    /// Parameter grid from a TOML spec; writes CSV tables and a manifest
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Sweep spec file
        #[arg(long, value_name = "FILE")]
        spec: PathBuf,
        /// Worker threads [default: DEMONLAB_WORKERS or all cores]
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Undriven stationary state; writes steady_state.json
    SteadyState {
        #[command(flatten)]
        common: Common,
    },
    /// γ maximizing max_T J_av; writes s5c.csv
    GammaOpt {
        #[command(flatten)]
        common: Common,
        /// Lower search bound [J]
        #[arg(long, default_value_t = 0.2)]
        gamma_min: f64,
        /// Upper search bound [J]
        #[arg(long, default_value_t = 10.0)]
        gamma_max: f64,
        /// Largest period of the inner search [1/J]
        #[arg(long = "T-max", default_value_t = 10.0)]
        t_max: f64,
        /// Grid step of the inner search [1/J]
        #[arg(long = "T-step", default_value_t = 0.1)]
        t_step: f64,
        /// Tolerance of the outer search in ln γ
        #[arg(long, default_value_t = 0.02)]
        tol: f64,
        /// Cold-bath temperatures to scan [J], comma separated
        #[arg(long = "T-C", value_delimiter = ',')]
        temp_c: Vec<f64>,
        /// Hot-bath temperatures to scan [J], comma separated
        #[arg(long = "T-H", value_delimiter = ',')]
        temp_h: Vec<f64>,
        /// Controlled-phase gate times to scan [1/J], comma separated
        #[arg(long = "tau-CZ", value_delimiter = ',')]
        tau_cz: Vec<f64>,
    },
    /// Full and reduced models over a T grid; writes reduced_compare.csv
    ReducedCompare {
        #[command(flatten)]
        common: Common,
        /// First period [1/J]
        #[arg(long = "T-min", default_value_t = 0.3)]
        t_min: f64,
        /// Last period [1/J]
        #[arg(long = "T-max", default_value_t = 5.0)]
        t_max: f64,
        /// Period step [1/J]
        #[arg(long = "T-step", default_value_t = 0.05)]
        t_step: f64,
    },
}

/// Formats for the stdout summary, optionally with lab units.
struct Display {
    j_mhz: Option<f64>,
}

impl Display {
    fn time(&self, t: f64) -> String {
        match self.j_mhz {
            Some(j) => format!("{t:.4}/J ({:.4} us)", t / j),
            None => format!("{t:.4}/J"),
        }
    }

    fn rate(&self, r: f64) -> String {
        match self.j_mhz {
            Some(j) => format!("{r:.6} J ({:.6} MHz)", r * j),
            None => format!("{r:.6} J"),
        }
    }
}

fn write_table(table: &Table, dir: &Path, name: &str) -> Result<PathBuf, CliError> {
    let path = dir.join(name);
    table.write(&path)?;
    if table.flagged() > 0 {
        eprintln!("warning: {} of {} rows in {} are flagged", table.flagged(), table.rows.len(), path.display());
    }
    Ok(path)
}

fn finish(mut manifest: RunManifest, dir: &Path, stem: &str, started: Instant, files: &[PathBuf]) -> Result<(), CliError> {
    manifest.insert("schema_version", output::SCHEMA_VERSION)?;
    manifest.insert("units", output::column_units())?;
    manifest.insert("files", files.iter().map(|f| f.display().to_string()).collect::<Vec<_>>())?;
    manifest.elapsed_seconds = started.elapsed().as_secs_f64();
    let path = dir.join(format!("{stem}.manifest.json"));
    manifest.write(&path)?;
    for f in files {
        println!("wrote {}", f.display());
    }
    println!("wrote {}", path.display());
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    let started = Instant::now();
    match cli.command {
        Command::SingleShot { common, dt, t_end } => {
            let r = Resolved::load(&common)?;
            let p = r.params;
            p.validate_physics()?;
            let shot = shots::single_shot(&p, ShotOptions { dt, t_end })?;
            let rows = shot.rows()?;
            let show = r.display();
            let at = |t: f64| &rows[shot.index_at(t)];
            println!("single shot, gamma = {}", show.rate(p.gamma));
            println!("  P(2_M) at t = 0:          {:.6}", rows[0].p_2m);
            println!("  P(1_D) after step 1 ({}): {:.6}", show.time(shot.t1), at(shot.t1).p_1d);
            println!("  P(2_M) after step 2 ({}): {:.6}", show.time(shot.t2), at(shot.t2).p_2m);
            println!(
                "  S_CMH {:.5} -> {:.5}, S_D {:.5} -> {:.5}, S_tot {:.5} -> {:.5} (nats)",
                rows[0].s_cmh,
                at(shot.t2).s_cmh,
                rows[0].s_d,
                at(shot.t2).s_d,
                rows[0].s_tot,
                at(shot.t2).s_tot
            );
            let file = write_table(&output::fig2_table(&rows), &r.out, "fig2.csv")?;
            let mut m = RunManifest::new("single-shot", &p).with_schedule(&demonlab::protocol::gate_sequence(&p)?);
            m.insert("dt", dt)?;
            m.insert("t_end", t_end)?;
            finish(m, &r.out, "fig2", started, &[file])
        }
        Command::DoubleShot {
            common,
            oscillations,
            t_tilde,
            dt,
            t_end,
        } => {
            let r = Resolved::load(&common)?;
            let p = r.params;
            p.validate_physics()?;
            let t_tilde = t_tilde.unwrap_or_else(|| oscillation_time(oscillations, p.j));
            let result = shots::double_shot(&p, t_tilde)?;
            let traj = shots::double_shot_trajectory(&p, t_tilde, ShotOptions { dt, t_end })?;
            let show = r.display();
            println!("double shot, second operation at {}", show.time(t_tilde));
            println!("  X total:           {:.6}", result.x_total);
            println!("  X until 2nd done:  {:.6}", result.x_until_second);
            println!("  P(2_M) removed:    {:.6}, {:.6}", result.removed[0], result.removed[1]);
            let a = write_table(&output::double_shot_table(&[result]), &r.out, "double_shot.csv")?;
            let b = write_table(&output::fig2_table(&traj.rows()?), &r.out, "double_shot_trajectory.csv")?;
            let mut m = RunManifest::new("double-shot", &p);
            m.insert("t_tilde", t_tilde)?;
            m.insert("dt", dt)?;
            m.insert("t_end", t_end)?;
            finish(m, &r.out, "double_shot", started, &[a, b])
        }
        Command::Cycles { common, model, series } => {
            let r = Resolved::load(&common)?;
            let p = r.params;
            p.validate()?;
            let sim = Simulator::new(DemonModel::new(model.into(), &p)?);
            let res = cycle_result(&sim)?;
            let show = r.display();
            println!(
                "{} model, gamma = {}, T = {}: X = {:.6}, J_av = {}, X_H = {:.6}, |X - X_brute| = {:.1e}",
                res.model.label(),
                show.rate(p.gamma),
                show.time(p.period),
                res.x,
                show.rate(res.j_av),
                res.x_h,
                res.discrepancy
            );
            let mut files = vec![write_table(&output::cycle_table(&[CycleRecord::from_result(&res)]), &r.out, "cycle.csv")?];
            if series {
                let n = res.window.1;
                let rows: Vec<output::ConvergenceRow> = cycle_series(&sim, n)?
                    .into_iter()
                    .enumerate()
                    .map(|(k, x)| output::ConvergenceRow {
                        gamma: p.gamma,
                        period: p.period,
                        n: k,
                        x_cn: x[0],
                        x_hn: x[1],
                    })
                    .collect();
                files.push(write_table(&output::convergence_table(&rows), &r.out, "convergence.csv")?);
            }
            let mut m = RunManifest::new("cycles", &p).with_schedule(&build_cycle(&p)?);
            m.insert("model", res.model.label())?;
            m.insert("validation_window", res.window)?;
            m.insert("window_rule", "start = lo + round((hi - lo) * min(1, 0.5/T)), [lo, hi] = [200, 400] for gamma >= 30 else [100, 200]; mean over 10 cycles")?;
            finish(m, &r.out, "cycle", started, &files)?;
            if !res.converged {
                return Err(CliError::NotConverged(format!(
                    "limit cycle and repeated propagation differ by {:.3e}",
                    res.discrepancy
                )));
            }
            Ok(())
        }
        Command::Sweep { common, spec, workers } => {
            let r = Resolved::load(&common)?;
            let text = std::fs::read_to_string(&spec).map_err(|e| CliError::Config(format!("{}: {e}", spec.display())))?;
            let sweep_spec = SweepSpec::from_toml(&text)?;
            let workers = workers.or(r.workers).unwrap_or_else(sweep::worker_count);
            let table = sweep::run_sweep(&sweep_spec, &r.params, workers)?;
            let name = sweep_spec.name.clone().unwrap_or_else(|| "sweep".into());
            let mut files = Vec::new();
            if sweep_spec.figure.as_deref() == Some("fig3") {
                let both = table.fig3_rows(&[ModelKind::Full, ModelKind::Reduced]);
                let full = table.fig3_rows(&[ModelKind::Full]);
                files.push(write_table(&output::fig3_table(&both), &r.out, "fig3b.csv")?);
                files.push(write_table(&output::fig3_table(&full), &r.out, "fig3c.csv")?);
                summarize_fig3(&both);
            } else {
                let file = sweep_spec.output.clone().unwrap_or_else(|| PathBuf::from(format!("{name}.csv")));
                let file = file.file_name().map(PathBuf::from).unwrap_or(file);
                files.push(write_table(&table.to_table(), &r.out, &file.to_string_lossy())?);
            }
            println!("{} rows, {} flagged, {} workers", table.rows.len(), table.flagged(), workers);
            let mut m = RunManifest::new("sweep", &sweep_spec.base_params(&r.params)?);
            m.insert("spec", &sweep_spec)?;
            m.insert("workers", workers)?;
            m.insert("flagged", table.flagged())?;
            m.insert("window_rule", "start = lo + round((hi - lo) * min(1, 0.5/T)), [lo, hi] = [200, 400] for gamma >= 30 else [100, 200]; mean over 10 cycles")?;
            finish(m, &r.out, &name, started, &files)
        }
        Command::SteadyState { common } => {
            let r = Resolved::load(&common)?;
            let p = r.params;
            p.validate_physics()?;
            let rho = steady_state(&p)?;
            let levels = |s: Subsystem| -> Result<Vec<f64>, CliError> {
                (0..s.dim()).map(|k| Ok(rho.level_population(s, k)?)).collect()
            };
            let pops = json!({
                "C": levels(Subsystem::Cold)?,
                "M": levels(Subsystem::Qutrit)?,
                "H": levels(Subsystem::Hot)?,
                "D": levels(Subsystem::Demon)?,
            });
            let p2 = rho.level_population(Subsystem::Qutrit, 2)?;
            let closed = x_ss_inst(&p);
            let validity = markov_validity(&p)?;
            println!("P(2_M) = {p2:.6} (closed form {closed:.6}), S = {:.6} nats", entropy(&rho));
            println!("populations: {pops}");
            let out = json!({
                "P_2M": p2,
                "closed_form": closed,
                "entropy": entropy(&rho),
                "populations": pops,
                "markov_validity": validity,
            });
            let path = r.out.join("steady_state.json");
            std::fs::write(&path, serde_json::to_string_pretty(&out)? + "\n")?;
            finish(RunManifest::new("steady-state", &p), &r.out, "steady_state", started, &[path])
        }
        Command::GammaOpt {
            common,
            gamma_min,
            gamma_max,
            t_max,
            t_step,
            tol,
            temp_c,
            temp_h,
            tau_cz,
        } => {
            let r = Resolved::load(&common)?;
            let base = r.params;
            base.validate_physics()?;
            let opts = GammaOptOptions {
                bounds: (gamma_min, gamma_max),
                t_max,
                t_step,
                log_gamma_tol: tol,
            };
            let or_base = |v: Vec<f64>, b: f64| if v.is_empty() { vec![b] } else { v };
            let mut rows = Vec::new();
            let mut traces = Vec::new();
            for &th in &or_base(temp_h, base.temp_h) {
                for &tz in &or_base(tau_cz.clone(), base.tau_cz) {
                    for &tc in &or_base(temp_c.clone(), base.temp_c) {
                        let p = SystemParams {
                            temp_c: tc,
                            temp_h: th,
                            tau_cz: tz,
                            ..base
                        };
                        let res = sweep::gamma_opt(&p, &opts)?;
                        let n_c = p.derive()?.n_c;
                        let flag = if res.flat {
                            " [flat]"
                        } else if res.at_boundary {
                            " [at search boundary]"
                        } else {
                            ""
                        };
                        println!(
                            "T_C = {tc}, T_H = {th}, tau_CZ = {tz}: gamma_opt = {:.4}, gamma_opt (n_C + 1/2) = {:.4}, best T = {:.3}{flag}",
                            res.gamma_opt, res.product, res.period_at_max
                        );
                        rows.push(S5cRow {
                            n_c,
                            temp_h: th,
                            tau_cz: tz,
                            gamma_opt: res.gamma_opt,
                            product: res.product,
                        });
                        traces.push(json!({"temp_c": tc, "temp_h": th, "tau_cz": tz, "result": res}));
                    }
                }
            }
            let file = write_table(&output::s5c_table(&rows), &r.out, "s5c.csv")?;
            let mut m = RunManifest::new("gamma-opt", &base);
            m.insert("options", opts)?;
            m.insert("searches", traces)?;
            finish(m, &r.out, "s5c", started, &[file])
        }
        Command::ReducedCompare {
            common,
            t_min,
            t_max,
            t_step,
        } => {
            let r = Resolved::load(&common)?;
            let p = r.params;
            p.validate_physics()?;
            if !(t_step > 0.0 && t_max >= t_min) {
                return Err(CliError::Config(format!("bad period grid {t_min}:{t_max}:{t_step}")));
            }
            let ts = sweep::linspace_step(t_min, t_max, t_step);
            let workers = r.workers.unwrap_or_else(sweep::worker_count);
            let mut rows = Vec::new();
            for kind in [ModelKind::Full, ModelKind::Reduced] {
                for (t, (res, flag)) in ts.iter().zip(sweep::period_scan(&p, kind, &ts, workers)?) {
                    rows.push(Fig3Row {
                        gamma: p.gamma,
                        period: *t,
                        model: kind.label().into(),
                        x: res.as_ref().map_or(f64::NAN, |c| c.x),
                        j_av: res.as_ref().map_or(f64::NAN, |c| c.j_av),
                        flag,
                    });
                }
            }
            let n = ts.len();
            let worst = (0..n)
                .map(|k| ((rows[k].x - rows[n + k].x) / rows[k].x).abs())
                .filter(|x| x.is_finite())
                .fold(0.0, f64::max);
            let validity = markov_validity(&p)?;
            println!(
                "gamma = {}: max relative difference full vs reduced {worst:.4}; regime {:?} (cold ratio {:.2}, hot ratio {:.2})",
                r.display().rate(p.gamma),
                validity.regime,
                validity.cold_ratio,
                validity.hot_ratio
            );
            let file = write_table(&output::fig3_table(&rows), &r.out, "reduced_compare.csv")?;
            let mut m = RunManifest::new("reduced-compare", &p);
            m.insert("periods", &ts)?;
            m.insert("markov_validity", validity)?;
            finish(m, &r.out, "reduced_compare", started, &[file])
        }
    }
}

fn summarize_fig3(rows: &[Fig3Row]) {
    let mut keys: Vec<(f64, String)> = Vec::new();
    for r in rows {
        if !keys.iter().any(|(g, m)| *g == r.gamma && *m == r.model) {
            keys.push((r.gamma, r.model.clone()));
        }
    }
    for (g, model) in keys {
        let best = rows
            .iter()
            .filter(|r| r.gamma == g && r.model == model && r.x.is_finite())
            .max_by(|a, b| a.x.total_cmp(&b.x));
        if let Some(b) = best {
            println!("gamma = {g} ({model}): max X = {:.5} at T = {}", b.x, b.period);
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            return CliError::Usage(e.to_string()).report();
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => e.report(),
    }
}
