//! Command-line front end.
//!
//! Each subcommand resolves its flags, the optional config file and the
//! built-in defaults (in increasing order of precedence: defaults, config,
//! flags) into a [`Plan`], executes it into the output directory and writes
//! a [`Manifest`]. `rerun` executes the plan stored in a manifest again and
//! checks that every output hash matches.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{self, RateTable, RunConfig};
use crate::lattice::{default_dos_grid, phonon_dos, EnergyGrid};
use crate::manifest::{digest, Manifest, TOOL_NAME, TOOL_VERSION};
use crate::ratemodel::{compare_reference, fit_effective_modes, fit_power_law, FitOptions};
use crate::spinphonon::{
    build_couplings, default_spectral_grid, rate_curve, spectral_function, Channel, RateCurve, Spacing,
    SpectralFunction, TemperatureGrid,
};
use crate::toygen::{generate_case, modes_from_forceset, write_case, ToyGenParams, Variant};
use crate::zfs::extract_derivatives;

pub const MODES_FILE: &str = "modes.json";
pub const DOS_FILE: &str = "dos.csv";
pub const DERIVATIVES_FILE: &str = "derivatives.json";
pub const FIT_REPORT_FILE: &str = "fit_report.json";

#[derive(Debug, Parser)]
#[command(name = "spinlattice", version, about = "Spin-phonon relaxation of S=1 defects in layered BN")]
struct Cli {
    /// Configuration file (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic force set and ZFS sample set.
    ToyGen(ToyGenArgs),
    /// Normal modes and phonon DOS from a force set.
    Phonons(PhononArgs),
    /// Second derivatives of the D-tensor along each mode.
    ZfsDerivs(ZfsDerivArgs),
    /// Spectral functions and relaxation rates.
    Rates(RateArgs),
    /// Power-law and effective-mode fits of a rate table.
    Fit(FitArgs),
    /// Execute a manifest again and check its outputs.
    Rerun(RerunArgs),
}

#[derive(Debug, Args)]
struct ToyGenArgs {
    #[arg(long)]
    variant: Variant,
    /// In-plane supercell size (n×n), at least 4.
    #[arg(long)]
    n: usize,
    #[arg(long)]
    seed: Option<u64>,
    /// Multiplier on N-site displacements in the dipolar model.
    #[arg(long)]
    enhancement: Option<f64>,
    /// Calibrated equilibrium D, GHz.
    #[arg(long)]
    target_d: Option<f64>,
    /// Gaussian force noise, eV/Å.
    #[arg(long)]
    force_noise: Option<f64>,
    #[arg(long)]
    g_factor: Option<f64>,
    /// Vertical interlayer spring, eV/Å².
    #[arg(long)]
    k_inter: Option<f64>,
    /// Tilted interlayer spring, eV/Å².
    #[arg(long)]
    k_shear: Option<f64>,
    /// Å
    #[arg(long)]
    displacement_step: Option<f64>,
    /// Å·√amu
    #[arg(long)]
    derivative_step: Option<f64>,
}

#[derive(Debug, Args)]
struct PhononArgs {
    #[arg(long)]
    forceset: Option<PathBuf>,
    /// DOS broadening, meV.
    #[arg(long)]
    sigma: Option<f64>,
    /// DOS grid as start:stop:step in meV.
    #[arg(long)]
    dos_grid: Option<String>,
}

#[derive(Debug, Args)]
struct ZfsDerivArgs {
    #[arg(long)]
    samples: Option<PathBuf>,
    #[arg(long)]
    modes: Option<PathBuf>,
    /// Override the step recorded in the sample file, Å·√amu.
    #[arg(long)]
    step: Option<f64>,
    /// Drop modes above this energy, meV.
    #[arg(long)]
    cutoff: Option<f64>,
}

#[derive(Debug, Args)]
struct RateArgs {
    #[arg(long)]
    derivatives: Option<PathBuf>,
    /// Broadening, meV.
    #[arg(long)]
    sigma: Option<f64>,
    /// Highest mode energy kept, meV.
    #[arg(long)]
    cutoff: Option<f64>,
    /// Comma-separated channels (double, single, dephase).
    #[arg(long)]
    channel: Option<String>,
    /// Temperature grid as min:max:points[:log|linear].
    #[arg(long)]
    temps: Option<String>,
    /// Comma-separated broadenings; writes one file pair per value.
    #[arg(long)]
    sigma_sweep: Option<String>,
}

#[derive(Debug, Args)]
struct FitArgs {
    #[arg(long)]
    rates: Option<PathBuf>,
    #[arg(long, default_value = "double")]
    channel: Channel,
    /// Power-law window as lo:hi in K.
    #[arg(long, default_value = "150:300")]
    window: String,
    #[arg(long, default_value_t = 1)]
    n_modes: usize,
    #[arg(long)]
    fit_sample_constant: bool,
    /// Upper end of the initial-energy grid, meV.
    #[arg(long)]
    max_energy: Option<f64>,
    /// Reference rates (T_K,gamma_Hz) to compare against.
    #[arg(long)]
    reference: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct RerunArgs {
    manifest: PathBuf,
}

/// Fully resolved parameters of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Plan {
    ToyGen {
        variant: Variant,
        n: usize,
        params: ToyGenParams,
    },
    Phonons {
        forceset: PathBuf,
        sigma: f64,
        dos_grid: Option<EnergyGrid>,
    },
    ZfsDerivs {
        samples: PathBuf,
        modes: PathBuf,
        step: Option<f64>,
        cutoff: Option<f64>,
    },
    Rates {
        derivatives: PathBuf,
        sigmas: Vec<f64>,
        sweep: bool,
        cutoff: f64,
        temperatures: TemperatureGrid,
        channels: Vec<Channel>,
    },
    Fit {
        rates: PathBuf,
        channel: Channel,
        window: (f64, f64),
        n_modes: usize,
        fit_sample_constant: bool,
        max_energy: f64,
        reference: Option<PathBuf>,
    },
}

impl Plan {
    pub fn command(&self) -> &'static str {
        match self {
            Plan::ToyGen { .. } => "toy-gen",
            Plan::Phonons { .. } => "phonons",
            Plan::ZfsDerivs { .. } => "zfs-derivs",
            Plan::Rates { .. } => "rates",
            Plan::Fit { .. } => "fit",
        }
    }

    pub fn inputs(&self) -> Vec<PathBuf> {
        match self {
            Plan::ToyGen { .. } => vec![],
            Plan::Phonons { forceset, .. } => vec![forceset.clone()],
            Plan::ZfsDerivs { samples, modes, .. } => vec![samples.clone(), modes.clone()],
            Plan::Rates { derivatives, .. } => vec![derivatives.clone()],
            Plan::Fit { rates, reference, .. } => std::iter::once(rates.clone()).chain(reference.clone()).collect(),
        }
    }
}

/// Result of executing a plan.
#[derive(Debug, Clone, Default)]
pub struct Outcome {
    pub outputs: Vec<PathBuf>,
    pub warnings: Vec<String>,
    /// Human-readable lines for stdout.
    pub summary: Vec<String>,
}

impl Outcome {
    fn warn(&mut self, w: impl Into<String>) {
        let w = w.into();
        if !self.warnings.contains(&w) {
            self.warnings.push(w);
        }
    }
}

/// Run the CLI with explicit arguments (the first one is the program name)
/// and return the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let typed: Vec<String> = argv.iter().skip(1).map(|a| a.to_string_lossy().into_owned()).collect();
    match dispatch(cli, typed) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code() as i32
        }
    }
}

fn dispatch(cli: Cli, argv: Vec<String>) -> Result<()> {
    let pool = match cli.threads {
        Some(0) => return Err(Error::validation("--threads must be at least 1")),
        Some(n) => Some(
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Computation(format!("thread pool: {e}")))?,
        ),
        None => None,
    };
    let work = || -> Result<()> {
        if let Command::Rerun(a) = &cli.command {
            return rerun(&a.manifest, cli.out.as_deref());
        }
        let (config, base) = load_config(cli.config.as_deref())?;
        let out = match &cli.out {
            Some(o) => o.clone(),
            None => base.join(&config.output_dir),
        };
        let plan = resolve(&cli.command, &config, &base)?;
        let (manifest, outcome) = run_plan(&plan, argv, &out)?;
        report(&outcome);
        println!("{}", manifest.display());
        Ok(())
    };
    match pool {
        Some(p) => p.install(work),
        None => work(),
    }
}

fn report(outcome: &Outcome) {
    for w in &outcome.warnings {
        eprintln!("warning: {w}");
    }
    for line in &outcome.summary {
        println!("{line}");
    }
}

fn load_config(path: Option<&Path>) -> Result<(RunConfig, PathBuf)> {
    match path {
        None => Ok((RunConfig::default(), PathBuf::new())),
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
            let config = io::parse_config(&text).map_err(|e| match e {
                Error::Validation(m) => Error::Validation(format!("{}: {m}", p.display())),
                other => other,
            })?;
            let base = absolute(p)?.parent().map(Path::to_path_buf).unwrap_or_default();
            Ok((config, base))
        }
    }
}

fn absolute(p: &Path) -> Result<PathBuf> {
    std::path::absolute(p).map_err(|e| Error::io(p, e))
}

/// Flag path if given, else the config entry resolved against the config
/// file's directory.
fn input_path(flag: &Option<PathBuf>, config: &Option<PathBuf>, base: &Path, name: &str) -> Result<PathBuf> {
    match (flag, config) {
        (Some(p), _) => absolute(p),
        (None, Some(p)) => absolute(&base.join(p)),
        (None, None) => Err(Error::validation(format!("no {name} input: pass --{name} or set inputs.{name}"))),
    }
}

fn parse_floats(s: &str, sep: char, what: &str) -> Result<Vec<f64>> {
    s.split(sep)
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| Error::validation(format!("{what}: expected a number, got {p:?}")))
        })
        .collect()
}

fn parse_channels(s: &str) -> Result<Vec<Channel>> {
    let mut out: Vec<Channel> = Vec::new();
    for c in s.split(',') {
        let c: Channel = c.trim().parse()?;
        if !out.contains(&c) {
            out.push(c);
        }
    }
    Ok(out)
}

fn parse_temps(s: &str) -> Result<TemperatureGrid> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 && parts.len() != 4 {
        return Err(Error::validation(format!("--temps expects min:max:points[:log|linear], got {s:?}")));
    }
    let num = |p: &str| p.parse::<f64>().map_err(|_| Error::validation(format!("--temps: bad number {p:?}")));
    let grid = TemperatureGrid {
        min: num(parts[0])?,
        max: num(parts[1])?,
        points: parts[2].parse().map_err(|_| Error::validation(format!("--temps: bad point count {:?}", parts[2])))?,
        spacing: match parts.get(3) {
            Some(p) => p.parse::<Spacing>()?,
            None => Spacing::Log,
        },
    };
    grid.validate()?;
    Ok(grid)
}

fn positive(v: f64, name: &str) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::validation(format!("{name} must be positive, got {v}")))
    }
}

fn resolve(command: &Command, config: &RunConfig, base: &Path) -> Result<Plan> {
    Ok(match command {
        Command::ToyGen(a) => {
            let mut toy = config.toy;
            if let Some(k) = a.k_inter {
                toy.k_inter = k;
            }
            if let Some(k) = a.k_shear {
                toy.k_shear = k;
            }
            let defaults = ToyGenParams::default();
            let params = ToyGenParams {
                toy,
                displacement_step: a.displacement_step.unwrap_or(config.displacement_step),
                derivative_step: a.derivative_step.unwrap_or(config.derivative_step),
                enhancement: a.enhancement,
                target_d: a.target_d,
                force_noise: a.force_noise.unwrap_or(defaults.force_noise),
                seed: a.seed.unwrap_or(defaults.seed),
                g_factor: a.g_factor.unwrap_or(defaults.g_factor),
            };
            params.validate()?;
            Plan::ToyGen { variant: a.variant, n: a.n, params }
        }
        Command::Phonons(a) => {
            let dos_grid = match &a.dos_grid {
                None => None,
                Some(s) => {
                    let v = parse_floats(s, ':', "--dos-grid")?;
                    if v.len() != 3 {
                        return Err(Error::validation(format!("--dos-grid expects start:stop:step, got {s:?}")));
                    }
                    Some(EnergyGrid::new(v[0], v[1], v[2])?)
                }
            };
            Plan::Phonons {
                forceset: input_path(&a.forceset, &config.inputs.forceset, base, "forceset")?,
                sigma: positive(a.sigma.unwrap_or(config.sigma), "sigma")?,
                dos_grid,
            }
        }
        Command::ZfsDerivs(a) => Plan::ZfsDerivs {
            samples: input_path(&a.samples, &config.inputs.zfs_samples, base, "samples")?,
            modes: input_path(&a.modes, &config.inputs.modes, base, "modes")?,
            step: a.step.map(|s| positive(s, "step")).transpose()?,
            cutoff: a.cutoff.map(|c| positive(c, "cutoff")).transpose()?,
        },
        Command::Rates(a) => {
            let (sigmas, sweep) = match &a.sigma_sweep {
                Some(s) => {
                    let v = parse_floats(s, ',', "--sigma-sweep")?;
                    for &x in &v {
                        positive(x, "sigma")?;
                    }
                    (v, true)
                }
                None => (vec![positive(a.sigma.unwrap_or(config.sigma), "sigma")?], false),
            };
            Plan::Rates {
                derivatives: input_path(&a.derivatives, &config.inputs.derivatives, base, "derivatives")?,
                sigmas,
                sweep,
                cutoff: positive(a.cutoff.unwrap_or(config.cutoff), "cutoff")?,
                temperatures: match &a.temps {
                    Some(s) => parse_temps(s)?,
                    None => config.temperatures,
                },
                channels: match &a.channel {
                    Some(s) => parse_channels(s)?,
                    None => config.channels.clone(),
                },
            }
        }
        Command::Fit(a) => {
            let w = parse_floats(&a.window, ':', "--window")?;
            if w.len() != 2 || !(w[0] < w[1]) {
                return Err(Error::validation(format!("--window expects lo:hi with lo < hi, got {:?}", a.window)));
            }
            Plan::Fit {
                rates: input_path(&a.rates, &config.inputs.rates, base, "rates")?,
                channel: a.channel,
                window: (w[0], w[1]),
                n_modes: a.n_modes,
                fit_sample_constant: a.fit_sample_constant,
                max_energy: positive(a.max_energy.unwrap_or(config.cutoff), "max-energy")?,
                reference: match (&a.reference, &config.inputs.reference) {
                    (None, None) => None,
                    (f, c) => Some(input_path(f, c, base, "reference")?),
                },
            }
        }
        Command::Rerun(_) => unreachable!("rerun has no plan"),
    })
}

/// Execute `plan` into `out` and write its manifest.
pub fn run_plan(plan: &Plan, argv: Vec<String>, out: &Path) -> Result<(PathBuf, Outcome)> {
    let outcome = execute(plan, out)?;
    let inputs = plan.inputs().into_iter().map(|p| digest(&p, p.clone())).collect::<Result<Vec<_>>>()?;
    let outputs = outcome
        .outputs
        .iter()
        .map(|p| digest(p, p.file_name().map(PathBuf::from).unwrap_or_default()))
        .collect::<Result<Vec<_>>>()?;
    let manifest = Manifest {
        tool: TOOL_NAME.to_string(),
        version: TOOL_VERSION.to_string(),
        format_version: io::FORMAT_VERSION,
        command: plan.command().to_string(),
        argv,
        plan: plan.clone(),
        inputs,
        outputs,
        warnings: outcome.warnings.clone(),
    };
    let path = manifest.write(out)?;
    Ok((path, outcome))
}

fn rerun(path: &Path, out: Option<&Path>) -> Result<()> {
    let m = Manifest::read(path)?;
    if m.version != TOOL_VERSION {
        eprintln!("warning: manifest written by version {}, running {TOOL_VERSION}", m.version);
    }
    let changed = m.changed_inputs()?;
    if !changed.is_empty() {
        let list: Vec<String> = changed.iter().map(|p| p.display().to_string()).collect();
        return Err(Error::validation(format!("inputs changed since the manifest was written: {}", list.join(", "))));
    }
    let out = match out {
        Some(o) => o.to_path_buf(),
        None => path.parent().map(Path::to_path_buf).unwrap_or_default(),
    };
    let (new_manifest, outcome) = run_plan(&m.plan, m.argv.clone(), &out)?;
    report(&outcome);
    let fresh = Manifest::read(&new_manifest)?;
    for (old, new) in m.outputs.iter().zip(&fresh.outputs) {
        if old != new {
            return Err(Error::Computation(format!("rerun output {} differs from the manifest", new.path.display())));
        }
    }
    if m.outputs.len() != fresh.outputs.len() {
        return Err(Error::Computation("rerun produced a different set of outputs".into()));
    }
    println!("{}", new_manifest.display());
    println!("all {} outputs reproduced", fresh.outputs.len());
    Ok(())
}

fn sigma_label(s: f64) -> String {
    format!("{s}")
}

/// Execute a plan, writing its outputs into `out`.
pub fn execute(plan: &Plan, out: &Path) -> Result<Outcome> {
    let mut o = Outcome::default();
    match plan {
        Plan::ToyGen { variant, n, params } => {
            let case = generate_case(*variant, *n, params)?;
            o.outputs = write_case(&case, out)?;
            o.summary.push(format!(
                "{variant} n={n}: {} atoms, {} modes ({} zero), dipolar scale {:.6}, D = {:.6} GHz",
                case.cell.len(),
                case.modes.len(),
                case.modes.zero_mode_count(),
                case.spin.scale,
                case.equilibrium_d()
            ));
        }
        Plan::Phonons { forceset, sigma, dos_grid } => {
            let set = io::parse_forceset(forceset)?;
            let modes = modes_from_forceset(&set)?;
            let grid = match dos_grid {
                Some(g) => *g,
                None => default_dos_grid(&modes, *sigma)?,
            };
            let dos = phonon_dos(&modes, *sigma, &grid)?;
            dos.warnings.iter().for_each(|w| o.warn(w.clone()));
            if set.reference.periodic.iter().all(|&p| p) && modes.zero_mode_count() != 3 {
                o.warn(format!("{} zero modes (expected 3 for a periodic cell)", modes.zero_mode_count()));
            }
            let modes_path = out.join(MODES_FILE);
            let dos_path = out.join(DOS_FILE);
            io::write_modes(&modes, &modes_path)?;
            io::write_text(&dos_path, &io::dos_csv(&dos)?)?;
            let top = modes.frequencies.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            o.summary.push(format!(
                "{} modes: {} zero, {} imaginary, highest {top:.3} meV",
                modes.len(),
                modes.zero_mode_count(),
                modes.imaginary_count()
            ));
            o.outputs = vec![modes_path, dos_path];
        }
        Plan::ZfsDerivs { samples, modes, step, cutoff } => {
            let (mut set, warnings) = io::parse_zfs_samples(samples)?;
            warnings.into_iter().for_each(|w| o.warn(w));
            if let Some(s) = step {
                if *s != set.step {
                    o.warn(format!("step override: sample file records {} Å·√amu, using {s}", set.step));
                }
                set.step = *s;
            }
            let modes = io::parse_modes(modes)?;
            let derivs = extract_derivatives(&set, &modes, *cutoff)?;
            derivs.warnings.iter().for_each(|w| o.warn(w.clone()));
            let path = out.join(DERIVATIVES_FILE);
            io::write_derivatives(&derivs, &path)?;
            o.summary.push(format!("{} mode derivatives, step {} Å·√amu", derivs.modes.len(), derivs.step));
            o.outputs = vec![path];
        }
        Plan::Rates { derivatives, sigmas, sweep, cutoff, temperatures, channels } => {
            let derivs = io::parse_derivatives(derivatives)?;
            let couplings = build_couplings(&derivs, *cutoff)?;
            couplings.warnings.iter().for_each(|w| o.warn(w.clone()));
            let temps = temperatures.values()?;
            for &sigma in sigmas {
                let grid = default_spectral_grid(*cutoff, sigma)?;
                let mut spectra = Vec::new();
                let mut columns = Vec::new();
                for c in Channel::ALL {
                    if channels.contains(&c) {
                        spectra.push(spectral_function(&couplings, c, sigma, &grid)?);
                        let curve = rate_curve(&couplings, c, sigma, &temps, Some(&grid))?;
                        curve.warnings.iter().for_each(|w| o.warn(w.clone()));
                        columns.push(curve.rates);
                    } else {
                        spectra.push(not_computed(c, sigma, &grid));
                        columns.push(vec![f64::NAN; temps.len()]);
                    }
                }
                let table = RateTable {
                    temperatures: temps.clone(),
                    double: columns[0].clone(),
                    single: columns[1].clone(),
                    dephase: columns[2].clone(),
                };
                let suffix = if *sweep { format!("_sigma{}", sigma_label(sigma)) } else { String::new() };
                let spectral_path = out.join(format!("spectral{suffix}.csv"));
                let rates_path = out.join(format!("rates{suffix}.csv"));
                io::write_text(&spectral_path, &io::spectral_csv(&spectra[0], &spectra[1], &spectra[2])?)?;
                io::write_text(&rates_path, &io::rates_csv(&table)?)?;
                o.outputs.push(spectral_path);
                o.outputs.push(rates_path);
                let k = temps.len() - 1;
                o.summary.push(format!(
                    "sigma {sigma} meV, {} modes: at {:.1} K double {:.4e} Hz, single {:.4e} Hz, dephase {:.4e} Hz",
                    couplings.len(),
                    temps[k],
                    table.double[k],
                    table.single[k],
                    table.dephase[k]
                ));
            }
        }
        Plan::Fit { rates, channel, window, n_modes, fit_sample_constant, max_energy, reference } => {
            let table = io::parse_rates_csv(rates)?;
            let mut curve = RateCurve::from_points(*channel, table.temperatures.clone(), table.channel(*channel).to_vec())?;
            curve.source = Some(rates.display().to_string());
            let power_law = fit_power_law(&curve, *window)?;
            let opts = FitOptions {
                n_modes: *n_modes,
                fit_sample_constant: *fit_sample_constant,
                max_energy: *max_energy,
                ..FitOptions::default()
            };
            o.summary.push(format!(
                "{channel} power law over {}-{} K: exponent {:.4}",
                window.0, window.1, power_law.exponent
            ));
            let effective = match fit_effective_modes(&curve, opts) {
                Ok(fit) => {
                    for m in &fit.model.modes {
                        o.summary.push(format!("effective mode: A = {:.6e} Hz, energy {:.4} meV", m.amplitude, m.energy));
                    }
                    o.summary.push(format!("effective-mode log residual {:.3e}", fit.residual));
                    Some(fit)
                }
                Err(Error::Computation(msg)) => {
                    o.warn(msg);
                    None
                }
                Err(e) => return Err(e),
            };
            let comparison = match reference {
                None => None,
                Some(p) => {
                    let c = compare_reference(&curve, &io::parse_reference_csv(p)?)?;
                    for t in &c.out_of_range {
                        o.warn(format!("reference point at {t} K is outside the computed range"));
                    }
                    for pt in &c.points {
                        if let Some(r) = pt.ratio {
                            o.summary.push(format!("T = {} K: computed/reference = {r:.4}", pt.temperature));
                        }
                    }
                    Some(c)
                }
            };
            let report = FitReport { channel: *channel, power_law, effective_modes: effective, reference: comparison };
            let path = out.join(FIT_REPORT_FILE);
            io::write_text(&path, &io::to_document("fit_report", &report)?)?;
            o.outputs = vec![path];
        }
    }
    Ok(o)
}

// unselected channels are written as NaN columns
fn not_computed(channel: Channel, sigma: f64, grid: &EnergyGrid) -> SpectralFunction {
    let energies = grid.points();
    let values = vec![f64::NAN; energies.len()];
    SpectralFunction { channel, sigma, grid: *grid, energies, values, sticks: Vec::new() }
}

/// Contents of `fit_report.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub channel: Channel,
    pub power_law: crate::ratemodel::PowerLawFit,
    /// Absent when no start converged; the power law still stands.
    pub effective_modes: Option<crate::ratemodel::EffectiveModeFit>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<crate::ratemodel::ReferenceComparison>,
}
