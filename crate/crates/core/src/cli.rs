//! The `sqc` command line: scenario verification, simulation, interference sweeps,
//! Stinespring dilation of Kraus fixtures, and measurement reports.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::correspondence::{
    density_matrix, dictionary_modulus, dictionary_trace, evolution_from_stochastic,
    gauge_schur_hadamard, gauge_unitary, kraus_decomposition, kraus_from_evolution,
    kraus_identity_residual, EvolutionOperator, GaugeObjects, KrausSet, PhaseMatrix,
};
use crate::dilation::stinespring_dilate;
use crate::dynamics::UnitaryFamily;
use crate::error::Error;
use crate::interference::{divisibility_profile, profile_csv};
use crate::linalg::{
    format_matrix, max_abs_diff_real, modulus_squared, parse_matrices, trace, unitarity_residual,
    CMatrix, RMatrix,
};
use crate::random::{self, rng_from_seed};
use crate::scenario::{composite_factorization, replay, run_queries, Model, Scenario};
use crate::stochastic::{bad_columns, format_real, StochasticMatrix};

#[derive(Debug, Parser)]
#[command(name = "sqc", version, about = "Generalized stochastic systems and their Hilbert-space representations")]
pub struct Cli {
    /// Seed for every random draw; overrides the scenario's seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Tolerance for every verification check; overrides the scenario's tolerances.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Write outputs into this directory instead of standard output.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run structural checks on a scenario file or a built-in preset.
    Verify { scenario: String },
    /// Execute events and answer the scenario's queries.
    Simulate { scenario: String },
    /// Sweep the interference discrepancy over intermediate times.
    Interfere {
        scenario: String,
        /// Final time.
        #[arg(long)]
        t: f64,
        /// Comma-separated intermediate times.
        #[arg(long, value_delimiter = ',', conflicts_with = "points")]
        grid: Option<Vec<f64>>,
        /// Number of evenly spaced intermediate times on [0, t].
        #[arg(long)]
        points: Option<usize>,
        /// Initial configuration; defaults to the scenario's.
        #[arg(long)]
        j0: Option<usize>,
    },
    /// Lift a Kraus-set fixture to a unitary on N^3 dimensions.
    Dilate { kraus: PathBuf },
    /// Report outcome and device probabilities of each measurement event.
    Measure { scenario: String },
}

/// Exit status and message of a failed command.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }

    fn check(message: impl Into<String>) -> Self {
        Self {
            code: 1,
            message: message.into(),
        }
    }
}

fn runtime(e: Error) -> Failure {
    match e {
        Error::Parse { .. } => Failure::usage(e.to_string()),
        other => Failure::check(other.to_string()),
    }
}

/// Loads a scenario file, or a built-in preset when no such file exists.
pub fn load_scenario(arg: &str) -> Result<Scenario, Failure> {
    let path = Path::new(arg);
    if path.exists() {
        let text = std::fs::read_to_string(path).map_err(|e| Failure::usage(format!("{arg}: {e}")))?;
        Scenario::from_json(&text).map_err(|e| Failure::usage(format!("{arg}: {e}")))
    } else {
        Scenario::preset(arg).ok_or_else(|| Failure::usage(format!("{arg}: no such file or preset")))
    }
}

/// One line of a verification report.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub residual: f64,
    pub tol: f64,
    pub detail: String,
}

impl Check {
    fn new(name: impl Into<String>, residual: f64, tol: f64) -> Self {
        Self {
            name: name.into(),
            residual,
            tol,
            detail: String::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.residual <= self.tol
    }

    pub fn line(&self) -> String {
        let mut s = format!(
            "{} {} residual={:.3e} tol={:.1e}",
            if self.passed() { "PASS" } else { "FAIL" },
            self.name,
            self.residual,
            self.tol
        );
        if !self.detail.is_empty() {
            s.push_str(": ");
            s.push_str(&self.detail);
        }
        s
    }
}

fn sample_times(scenario: &Scenario, family: &UnitaryFamily) -> Vec<f64> {
    let (start, end) = family.domain();
    let mut times: Vec<f64> = if end.is_finite() {
        [0.25, 0.5, 0.75, 1.0].iter().map(|f| start + f * (end - start)).collect()
    } else {
        vec![0.25, 0.5, 1.0, 2.0]
    };
    times.extend(scenario.events.iter().map(|e| e.time()));
    times.extend(scenario.queries.iter().map(|q| q.time));
    times.retain(|t| *t >= start && *t <= end);
    times.sort_by(f64::total_cmp);
    times.dedup();
    times
}

fn unitary_checks(
    theta: &CMatrix,
    t: f64,
    p0: &crate::stochastic::ProbabilityVector,
    structural: f64,
    dictionary: f64,
    rng: &mut random::SeededRng,
) -> Result<Vec<Check>, Error> {
    let n = theta.nrows();
    let mut out = Vec::new();
    out.push(Check::new(format!("unitarity t={t}"), unitarity_residual(theta), structural));
    let modulus = dictionary_modulus(theta);
    out.push(Check::new(
        format!("dictionary_consistency t={t}"),
        max_abs_diff_real(&modulus, &dictionary_trace(theta)),
        dictionary,
    ));
    let rows = modulus.row_iter().map(|r| (r.sum() - 1.0).abs());
    let cols = modulus.column_iter().map(|c| (c.sum() - 1.0).abs());
    out.push(Check::new(
        format!("double_stochasticity t={t}"),
        rows.chain(cols).fold(0.0, f64::max),
        dictionary,
    ));

    let op = EvolutionOperator::new(theta.clone())?;
    let kraus = kraus_from_evolution(&op);
    out.push(Check::new(format!("kraus_identity t={t}"), kraus.identity_residual(), dictionary));
    out.push(Check::new(
        format!("kraus_decomposition t={t}"),
        max_abs_diff_real(&kraus_decomposition(&kraus), &modulus),
        dictionary,
    ));

    let phases = PhaseMatrix::new(random::phases(n, n, rng))?;
    let gauged = gauge_schur_hadamard(&op, &phases)?;
    out.push(Check::new(
        format!("schur_hadamard_gauge t={t}"),
        max_abs_diff_real(&dictionary_modulus(gauged.matrix()), &modulus),
        dictionary,
    ));

    let rho = density_matrix(&op, p0)?;
    let a = random::hermitian(n, rng);
    let objects = GaugeObjects {
        rho: rho.clone(),
        psi: None,
        observables: vec![a.clone()],
        theta: op.clone(),
    };
    let frame = gauge_unitary(&objects, &random::unitary(n, rng), &random::unitary(n, rng))?;
    let mut residual = max_abs_diff_real(&frame.gamma(), &modulus);
    for (i, p) in frame.probabilities().iter().enumerate() {
        residual = residual.max((p - rho.matrix()[(i, i)].re).abs());
    }
    let before = trace(&(&a * rho.matrix())).re;
    residual = residual.max((frame.expectations()[0] - before).abs());
    out.push(Check::new(format!("unitary_gauge t={t}"), residual, dictionary));
    Ok(out)
}

fn stochastic_checks(t: f64, gamma: &RMatrix, dictionary: f64) -> Result<Vec<Check>, Error> {
    let mut out = Vec::new();
    let bad = bad_columns(gamma, dictionary);
    let worst = gamma
        .column_iter()
        .map(|c| (c.sum() - 1.0).abs().max(-c.min()))
        .fold(0.0, f64::max);
    let mut check = Check::new(format!("column_sums t={t}"), worst, dictionary);
    check.detail = bad
        .iter()
        .map(|(j, sum)| format!("column {j} sums to {sum}"))
        .collect::<Vec<_>>()
        .join("; ");
    out.push(check);
    if !bad.is_empty() {
        return Ok(out);
    }
    let sm = StochasticMatrix::new(gamma.clone())?;
    let theta = evolution_from_stochastic(&sm);
    out.push(Check::new(
        format!("dictionary_roundtrip t={t}"),
        max_abs_diff_real(&dictionary_trace(theta.matrix()), gamma),
        dictionary,
    ));
    let kraus = kraus_from_evolution(&theta);
    out.push(Check::new(
        format!("kraus_identity t={t}"),
        kraus_identity_residual(kraus.operators()),
        dictionary,
    ));
    out.push(Check::new(
        format!("kraus_decomposition t={t}"),
        max_abs_diff_real(&kraus_decomposition(&kraus), gamma),
        dictionary,
    ));
    Ok(out)
}

/// Runs every applicable check on the scenario's dynamics.
pub fn verify_scenario(scenario: &Scenario, tol: Option<f64>, seed: u64) -> Result<Vec<Check>, Error> {
    let structural = tol.unwrap_or(scenario.tolerances.structural);
    let dictionary = tol.unwrap_or(scenario.tolerances.dictionary);
    let model = scenario.build()?;
    let mut rng = rng_from_seed(seed);
    let mut checks = Vec::new();
    match &model {
        Model::Family {
            family, decay_tau, ..
        } => {
            let p0 = scenario.initial_distribution(family.n())?;
            for t in sample_times(scenario, family) {
                let theta = family.evaluate(t)?;
                checks.extend(unitary_checks(&theta, t, &p0, structural, dictionary, &mut rng)?);
                if let Some(tau) = decay_tau {
                    let closed = StochasticMatrix::exponential(t, *tau);
                    checks.push(Check::new(
                        format!("closed_form t={t}"),
                        max_abs_diff_real(&modulus_squared(&theta), closed.matrix()),
                        dictionary,
                    ));
                }
                if let Some(f) = composite_factorization(&model, t, structural)? {
                    checks.push(Check::new(format!("factorization t={t}"), f.best_residual, structural));
                }
            }
        }
        Model::Stochastic { times, matrices } => {
            for (t, gamma) in times.iter().zip(matrices) {
                checks.extend(stochastic_checks(*t, gamma, dictionary)?);
            }
        }
    }
    Ok(checks)
}

fn emit(outputs: &[(String, String)], dir: Option<&Path>, stdout: &mut dyn Write) -> Result<(), Failure> {
    let io = |e: std::io::Error| Failure::check(e.to_string());
    match dir {
        Some(dir) => {
            std::fs::create_dir_all(dir).map_err(io)?;
            for (name, body) in outputs {
                let path = dir.join(name);
                std::fs::write(&path, body).map_err(io)?;
                writeln!(stdout, "wrote {}", path.display()).map_err(io)?;
            }
        }
        None => {
            for (name, body) in outputs {
                if outputs.len() > 1 {
                    writeln!(stdout, "# {name}").map_err(io)?;
                }
                stdout.write_all(body.as_bytes()).map_err(io)?;
            }
        }
    }
    Ok(())
}

fn family_of(scenario: &Scenario) -> Result<UnitaryFamily, Failure> {
    match scenario.build().map_err(runtime)? {
        Model::Family { family, .. } => Ok(family),
        Model::Stochastic { .. } => Err(Failure::usage("this command needs unitary dynamics")),
    }
}

fn cmd_verify(cli: &Cli, arg: &str, stdout: &mut dyn Write) -> Result<(), Failure> {
    let scenario = load_scenario(arg)?;
    let seed = cli.seed.unwrap_or(scenario.seed);
    let checks = verify_scenario(&scenario, cli.tol, seed).map_err(runtime)?;
    let mut report = String::new();
    for c in &checks {
        writeln!(report, "{}", c.line()).ok();
    }
    let failed = checks.iter().filter(|c| !c.passed()).count();
    writeln!(report, "{} checks, {failed} failed", checks.len()).ok();
    emit(&[("verify.txt".into(), report)], cli.out.as_deref(), stdout)?;
    if failed > 0 {
        Err(Failure::check(format!("{failed} checks failed")))
    } else {
        Ok(())
    }
}

fn cmd_simulate(cli: &Cli, arg: &str, stdout: &mut dyn Write) -> Result<(), Failure> {
    let scenario = load_scenario(arg)?;
    let seed = cli.seed.unwrap_or(scenario.seed);
    let outputs = run_queries(&scenario, seed).map_err(runtime)?;
    emit(&outputs, cli.out.as_deref(), stdout)
}

fn cmd_interfere(
    cli: &Cli,
    arg: &str,
    t: f64,
    grid: Option<&[f64]>,
    points: Option<usize>,
    j0: Option<usize>,
    stdout: &mut dyn Write,
) -> Result<(), Failure> {
    let scenario = load_scenario(arg)?;
    let family = family_of(&scenario)?;
    let grid: Vec<f64> = match (grid, points) {
        (Some(g), _) => g.to_vec(),
        (None, Some(k)) if k >= 2 => (0..k).map(|i| t * i as f64 / (k - 1) as f64).collect(),
        (None, Some(_)) => return Err(Failure::usage("--points needs at least 2")),
        (None, None) => (0..=20).map(|i| t * i as f64 / 20.0).collect(),
    };
    let j0 = j0.unwrap_or_else(|| scenario.initial_configuration());
    let profile = divisibility_profile(&family, j0, t, &grid).map_err(runtime)?;
    emit(&[("interference.csv".into(), profile_csv(&profile))], cli.out.as_deref(), stdout)
}

fn cmd_dilate(cli: &Cli, path: &Path, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
    let ops = parse_matrices(&text).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
    let kraus = KrausSet::new(ops).map_err(runtime)?;
    let result = stinespring_dilate(&kraus).map_err(runtime)?;
    let n = kraus.n();
    let fixture = format!(
        "# Stinespring unitary for {n} Kraus operators; row (i, b, m) at i*{n2} + b*{n} + m; ancilla label {g}\n{}",
        format_matrix(&result.unitary_out),
        n2 = n * n,
        g = result.ancilla_label
    );
    let mut report = String::new();
    writeln!(report, "kraus_identity residual={:.3e}", kraus.identity_residual()).ok();
    writeln!(report, "unitarity residual={:.3e}", unitarity_residual(&result.unitary_out)).ok();
    writeln!(report, "dilated_dictionary residual={:.3e}", result.residual).ok();
    match cli.out.as_deref() {
        Some(dir) => emit(
            &[("dilation.txt".into(), fixture), ("dilation_report.txt".into(), report)],
            Some(dir),
            stdout,
        ),
        None => {
            stdout.write_all(fixture.as_bytes()).map_err(|e| Failure::check(e.to_string()))?;
            stderr.write_all(report.as_bytes()).map_err(|e| Failure::check(e.to_string()))
        }
    }
}

fn cmd_measure(cli: &Cli, arg: &str, stdout: &mut dyn Write) -> Result<(), Failure> {
    let scenario = load_scenario(arg)?;
    let family = family_of(&scenario)?;
    let end = scenario.events.last().map_or(0.0, |e| e.time());
    let snap = replay(&scenario, &family, end).map_err(runtime)?;
    if snap.measurements.is_empty() {
        return Err(Failure::usage("scenario has no measurement events"));
    }
    let outputs: Vec<(String, String)> = snap
        .measurements
        .iter()
        .enumerate()
        .map(|(k, m)| {
            let mut csv = String::from("outcome,eigenvalue,device_configuration,probability\n");
            for (a, p) in m.outcome_probs.as_slice().iter().enumerate() {
                writeln!(csv, "{a},{},{},{}", format_real(m.eigenvalues[a]), m.d_of[a], format_real(*p)).ok();
            }
            (format!("measurement{k}.csv"), csv)
        })
        .collect();
    emit(&outputs, cli.out.as_deref(), stdout)
}

/// Parses arguments and runs the command, returning the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            let _ = if code == 0 {
                stdout.write_all(text.as_bytes())
            } else {
                stderr.write_all(text.as_bytes())
            };
            return code;
        }
    };
    let result = match &cli.command {
        Command::Verify { scenario } => cmd_verify(&cli, scenario, stdout),
        Command::Simulate { scenario } => cmd_simulate(&cli, scenario, stdout),
        Command::Interfere {
            scenario,
            t,
            grid,
            points,
            j0,
        } => cmd_interfere(&cli, scenario, *t, grid.as_deref(), *points, *j0, stdout),
        Command::Dilate { kraus } => cmd_dilate(&cli, kraus, stdout, stderr),
        Command::Measure { scenario } => cmd_measure(&cli, scenario, stdout),
    };
    match result {
        Ok(()) => 0,
        Err(f) => {
            let _ = writeln!(stderr, "error: {}", f.message);
            f.code
        }
    }
}
