mod config;
mod plot;
mod spec;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{ArgGroup, Args, Parser, Subcommand};
use serde::Deserialize;
use serde_json::{json, Value};

use tmlab_core::extraction::{decompose, DecomposeOptions, FunctionSequence, DEFAULT_N_LIST};
use tmlab_core::kg::{evolve, linearizability, write_snapshot_csv, write_trajectory_csv, Trajectory};
use tmlab_core::orlicz::{calibrate_kappa, default_calibration_grid, tm_bound_constant, tm_functional};
use tmlab_core::profiles::{bubble_sum, concentration_limit_norm, GridPolicy, ScaleDescriptor};
use tmlab_core::rearrange::{polya_szego_check, symmetric_decreasing_rearrangement_with};
use tmlab_core::{luxemburg_norm, Field2D, LabError, LogRadialField, OrliczParams, Profile};

use config::KgRunConfig;
use plot::{write_dat, write_plt, PlotSpec};
use spec::{ProfileSpec, ShapeSpec};

const FOUR_PI: f64 = 4.0 * std::f64::consts::PI;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Numerical(LabError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Parse(String),
}

impl From<LabError> for CliError {
    fn from(e: LabError) -> Self {
        match e {
            LabError::Io(io) => CliError::Io(io),
            LabError::Parse(msg) => CliError::Parse(msg),
            other => CliError::Numerical(other),
        }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        if e.is_io() {
            CliError::Io(e.into())
        } else {
            CliError::Parse(e.to_string())
        }
    }
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) => 4,
            CliError::Parse(_) => 5,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Numerical(_) => "numerical",
            CliError::Io(_) => "io",
            CliError::Parse(_) => "parse",
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "tmlab", version, about = "Orlicz norms, bubbles and exponential Klein-Gordon runs")]
struct Cli {
    /// Directory for generated files
    #[arg(long, global = true, env = "TMLAB_OUT_DIR", default_value = ".")]
    out_dir: PathBuf,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Luxemburg norm of a radial field
    OrliczNorm {
        #[command(flatten)]
        input: RadialInput,
        #[arg(long, default_value_t = 1)]
        p: u32,
        #[arg(long, default_value_t = 1.0)]
        kappa: f64,
    },
    /// Trudinger-Moser functional against the L^{2p} norm
    TmCheck {
        #[command(flatten)]
        input: RadialInput,
        #[arg(long)]
        alpha: f64,
        #[arg(long, default_value_t = 1)]
        p: u32,
    },
    /// Symmetric decreasing rearrangement of a Cartesian field
    Rearrange {
        #[arg(long)]
        field2d: PathBuf,
        #[arg(long, default_value_t = 1.0 / 64.0)]
        ds: f64,
        /// Output CSV name inside the output directory
        #[arg(long, default_value = "rearranged.csv")]
        out: String,
    },
    /// Samples one concentrating bubble
    Bubble {
        #[arg(long)]
        profile: ProfileSpec,
        #[arg(long)]
        alpha: f64,
        #[arg(long, default_value_t = 1.0 / 32.0)]
        ds: f64,
        #[arg(long, default_value_t = 1)]
        p: u32,
        #[arg(long, default_value_t = 1.0)]
        kappa: f64,
        #[arg(long, default_value = "bubble.csv")]
        out: String,
    },
    /// Profile decomposition of a synthetic bubble sequence
    Decompose {
        /// JSON sequence description
        #[arg(long)]
        seq: PathBuf,
        #[arg(long, default_value_t = 0.05)]
        eps: f64,
        #[arg(long, default_value_t = 8)]
        max_levels: usize,
    },
    /// Evolves the nonlinear equation from a key-value config
    KgRun {
        #[arg(long)]
        config: PathBuf,
        /// Also write every saved snapshot as `r,u,ut`
        #[arg(long)]
        snapshots: bool,
        #[arg(long, default_value = "kg")]
        name: String,
    },
    /// Kinetic gap between nonlinear and free runs for n^{-1/2}·data
    Linearizability {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_delimiter = ',', default_values_t = [1.0, 2.0, 4.0, 8.0, 16.0])]
        ns: Vec<f64>,
    },
    /// Estimates sup ∫(e^{4πu²} − 1) over unit-H¹ Moser fields
    CalibrateKappa {
        #[arg(long, default_value_t = 1.0 / 64.0)]
        ds: f64,
        #[arg(long, value_delimiter = ',')]
        a: Vec<f64>,
        #[arg(long, value_delimiter = ',')]
        radii: Vec<f64>,
    },
    /// Writes a fixture as a log-radial or Cartesian CSV
    Fixture {
        #[arg(long)]
        shape: ShapeSpec,
        #[arg(long, default_value_t = 1.0 / 64.0)]
        ds: f64,
        /// Cartesian half width; writes a Field2D instead
        #[arg(long)]
        half_width: Option<f64>,
        #[arg(long, default_value_t = 0.01)]
        h: f64,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_values_t = [0.0, 0.0])]
        center: Vec<f64>,
        #[arg(long)]
        out: String,
    },
}

#[derive(Args, Debug)]
#[group(skip)]
#[command(group(ArgGroup::new("input").required(true).args(["field", "shape"])))]
struct RadialInput {
    /// Log-radial CSV with columns `s,v`
    #[arg(long)]
    field: Option<PathBuf>,
    /// Fixture spec such as `disk:amp=1,radius=1`
    #[arg(long)]
    shape: Option<ShapeSpec>,
    #[arg(long, default_value_t = 1.0 / 256.0, requires = "shape")]
    shape_ds: f64,
}

impl RadialInput {
    fn load(&self) -> Result<LogRadialField, CliError> {
        match (&self.field, &self.shape) {
            (Some(path), _) => Ok(LogRadialField::load(path)?),
            (None, Some(ShapeSpec(Some(shape)))) => Ok(shape.log_field(self.shape_ds)?),
            (None, Some(ShapeSpec(None))) => Ok(LogRadialField::zeros(0.0, self.shape_ds, 2)?),
            (None, None) => Err(CliError::Usage("one of --field or --shape is required".into())),
        }
    }
}

/// Bubble sequence for `decompose`.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SequenceSpec {
    #[serde(default)]
    n_list: Option<Vec<f64>>,
    #[serde(default = "one_u32")]
    p: u32,
    #[serde(default = "one_f64")]
    kappa: f64,
    /// Grid step as a multiple of `n`; defaults to a fixed step of 1/32.
    #[serde(default)]
    ds_per_n: Option<f64>,
    bubbles: Vec<BubbleSpec>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct BubbleSpec {
    profile: String,
    scale: ScaleDescriptor,
}

fn one_u32() -> u32 {
    1
}

fn one_f64() -> f64 {
    1.0
}

fn prepare_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)?;
    Ok(())
}

fn orlicz_norm(input: &RadialInput, p: u32, kappa: f64) -> Result<Value, CliError> {
    let u = input.load()?;
    let norm = luxemburg_norm(&u, &OrliczParams::new(p, kappa))?;
    Ok(json!({ "luxemburg_norm": norm, "p": p, "kappa": kappa }))
}

fn tm_check(input: &RadialInput, alpha: f64, p: u32) -> Result<Value, CliError> {
    let u = input.load()?;
    let grad = u.grad_l2_norm_sq();
    let tm = tm_functional(&u, alpha, p)?;
    let lq = u.lq_norm_pow(2.0 * p as f64);
    let bound = if (0.0..FOUR_PI).contains(&alpha) { Some(tm_bound_constant(alpha, p)?) } else { None };
    let ratio = if lq > 0.0 { Some(tm / lq) } else { None };
    Ok(json!({
        "alpha": alpha,
        "p": p,
        "tm_functional": tm,
        "l2p_norm_pow": lq,
        "ratio": ratio,
        "bound_constant": bound,
        "grad_norm_sq": grad,
        "gradient_ok": grad <= 1.0,
        "within_bound": match (ratio, bound) { (Some(r), Some(b)) => Some(r <= b), _ => None },
    }))
}

fn rearrange(dir: &Path, path: &Path, ds: f64, out: &str) -> Result<Value, CliError> {
    let f = Field2D::load(path)?;
    let star = symmetric_decreasing_rearrangement_with(&f, ds)?;
    let (grad_in, grad_out) = polya_szego_check(&f)?;
    prepare_dir(dir)?;
    let out_path = dir.join(out);
    star.save(&out_path)?;
    let rows: Vec<Vec<f64>> = (0..star.len()).map(|i| vec![(-star.s(i)).exp(), star.values()[i]]).collect();
    write_dat(&dir.join("rearranged.dat"), &["r", "u_star"], &rows)?;
    write_plt(
        dir,
        "rearranged",
        &PlotSpec {
            title: "rearrangement",
            xlabel: "r",
            ylabel: "u*",
            logscale_y: false,
            series: &[(2, "u*")],
        },
    )?;
    Ok(json!({
        "output": out_path,
        "grad_sq_in": grad_in,
        "grad_sq_out": grad_out,
        "polya_szego_ratio": grad_out / grad_in,
        "sup_norm": star.sup_norm(),
    }))
}

#[allow(clippy::too_many_arguments)]
fn bubble(
    dir: &Path,
    profile: &ProfileSpec,
    alpha: f64,
    ds: f64,
    p: u32,
    kappa: f64,
    out: &str,
) -> Result<Value, CliError> {
    let psi = profile.build()?;
    let u = bubble_sum(&[(&psi, alpha)], &GridPolicy::with_ds(ds))?;
    prepare_dir(dir)?;
    let out_path = dir.join(out);
    u.save(&out_path)?;
    Ok(json!({
        "output": out_path,
        "alpha": alpha,
        "samples": u.len(),
        "ds": u.ds(),
        "grad_norm_sq": u.grad_l2_norm_sq(),
        "luxemburg_norm": luxemburg_norm(&u, &OrliczParams::new(p, kappa))?,
        "limit_norm": concentration_limit_norm(&psi),
    }))
}

fn load_sequence(path: &Path) -> Result<(FunctionSequence, Vec<f64>), CliError> {
    let spec: SequenceSpec = serde_json::from_reader(std::fs::File::open(path)?)?;
    if spec.bubbles.is_empty() {
        return Err(CliError::Parse("sequence needs at least one bubble".into()));
    }
    let base = path.parent().unwrap_or(Path::new("."));
    let mut profiles: Vec<Profile> = Vec::new();
    for b in &spec.bubbles {
        let mut ps: ProfileSpec = b.profile.parse()?;
        if let ProfileSpec::File(f) = &mut ps {
            *f = base.join(&*f).to_string_lossy().into_owned();
        }
        profiles.push(ps.build()?);
    }
    let n_list = spec.n_list.unwrap_or_else(|| DEFAULT_N_LIST.to_vec());
    let seq = FunctionSequence::from_evaluator(&n_list, OrliczParams::new(spec.p, spec.kappa), |n| {
        let parts: Vec<(&Profile, f64)> =
            profiles.iter().zip(&spec.bubbles).map(|(p, b)| (p, b.scale.at(n))).collect();
        let policy = match spec.ds_per_n {
            Some(c) => GridPolicy::with_ds(c * n),
            None => GridPolicy::default(),
        };
        bubble_sum(&parts, &policy)
    })?;
    Ok((seq, n_list))
}

fn run_decompose(dir: &Path, seq: &Path, eps: f64, max_levels: usize) -> Result<Value, CliError> {
    if eps.is_nan() || eps <= 0.0 || max_levels == 0 {
        return Err(CliError::Usage("--eps and --max-levels must be positive".into()));
    }
    let (seq, n_list) = load_sequence(seq)?;
    let opts = DecomposeOptions { eps_stop: eps, max_levels, ..Default::default() };
    let res = decompose(&seq, &opts)?;
    prepare_dir(dir)?;
    let mut levels = Vec::new();
    for (j, level) in res.levels.iter().enumerate() {
        let path = dir.join(format!("profile_{}.csv", j + 1));
        level.recovery.profile.save(&path)?;
        levels.push(json!({
            "scale_per_n": level.scales(),
            "scale_fit": level.scale_fit,
            "profile_path": path,
            "profile_derivative_norm": level.recovery.derivative_norm,
            "cauchy_distance": level.recovery.cauchy_distance,
            "non_converged": level.recovery.non_converged,
            "lower_bound_ok": level.recovery.lower_bound_ok,
            "residual_orlicz": level.residual_orlicz,
            "stability": level.stability,
            "stability_defect": level.stability.defect(),
        }));
    }
    let rows: Vec<Vec<f64>> =
        res.residual_orlicz.iter().enumerate().map(|(l, a)| vec![l as f64, *a]).collect();
    write_dat(&dir.join("residuals.dat"), &["level", "A"], &rows)?;
    write_plt(
        dir,
        "residuals",
        &PlotSpec {
            title: "residual Orlicz norms",
            xlabel: "level",
            ylabel: "A",
            logscale_y: true,
            series: &[(2, "A")],
        },
    )?;
    Ok(json!({
        "n_list": n_list,
        "levels": levels,
        "residual_orlicz": res.residual_orlicz,
        "orthogonality": res.consecutive_orthogonality(),
        "termination_reason": res.termination,
    }))
}

fn energy_rows(traj: &Trajectory) -> Vec<Vec<f64>> {
    traj.snapshots
        .iter()
        .zip(&traj.energies)
        .map(|(s, e)| vec![s.t, e.total, e.kinetic, e.gradient, e.potential])
        .collect()
}

fn kg_run(dir: &Path, config: &Path, snapshots: bool, name: &str) -> Result<Value, CliError> {
    let cfg = KgRunConfig::load(config)?;
    let traj = evolve(&cfg.data()?, &cfg.schedule())?;
    prepare_dir(dir)?;
    let csv_path = dir.join(format!("{name}_trajectory.csv"));
    write_trajectory_csv(&traj, cfg.kappa, std::io::BufWriter::new(std::fs::File::create(&csv_path)?))?;
    if snapshots {
        for k in 0..traj.snapshots.len() {
            let f = std::fs::File::create(dir.join(format!("{name}_snapshot_{k:04}.csv")))?;
            write_snapshot_csv(&traj, k, std::io::BufWriter::new(f))?;
        }
    }
    let stem = format!("{name}_energy");
    write_dat(
        &dir.join(format!("{stem}.dat")),
        &["t", "E_total", "E_kin", "E_grad", "E_pot"],
        &energy_rows(&traj),
    )?;
    write_plt(
        dir,
        &stem,
        &PlotSpec {
            title: "energy",
            xlabel: "t",
            ylabel: "E",
            logscale_y: false,
            series: &[(2, "total"), (3, "kinetic"), (4, "gradient"), (5, "potential")],
        },
    )?;
    let e0 = traj.energies[0];
    Ok(json!({
        "trajectory": csv_path,
        "snapshots": traj.snapshots.len(),
        "dt": traj.dt,
        "initial_energy": e0.total,
        "criticality": e0.criticality,
        "max_energy_drift": traj.max_energy_drift(),
        "config": cfg.emit(),
    }))
}

fn run_linearizability(dir: &Path, config: &Path, ns: &[f64]) -> Result<Value, CliError> {
    let cfg = KgRunConfig::load(config)?;
    let runs = linearizability(&cfg.data()?, ns, &cfg.schedule(), cfg.kappa)?;
    prepare_dir(dir)?;
    let rows: Vec<Vec<f64>> = runs.iter().map(|r| vec![r.n, r.kinetic_gap, r.free_lux_max]).collect();
    write_dat(&dir.join("linearizability.dat"), &["n", "kinetic_gap", "free_lux_max"], &rows)?;
    write_plt(
        dir,
        "linearizability",
        &PlotSpec {
            title: "kinetic energy gap",
            xlabel: "n",
            ylabel: "sup_t E_c(u - v)",
            logscale_y: true,
            series: &[(2, "gap")],
        },
    )?;
    Ok(json!({ "runs": runs, "threshold": 1.0 / FOUR_PI.sqrt() }))
}

fn calibrate(ds: f64, a: &[f64], radii: &[f64]) -> Result<Value, CliError> {
    let (da, dr) = default_calibration_grid();
    let a = if a.is_empty() { da } else { a.to_vec() };
    let radii = if radii.is_empty() { dr } else { radii.to_vec() };
    let cal = calibrate_kappa(&a, &radii, ds)?;
    Ok(serde_json::to_value(cal)?)
}

#[allow(clippy::too_many_arguments)]
fn fixture(
    dir: &Path,
    shape: ShapeSpec,
    ds: f64,
    half_width: Option<f64>,
    h: f64,
    center: &[f64],
    out: &str,
) -> Result<Value, CliError> {
    let Some(shape_inner) = shape.0 else {
        return Err(CliError::Usage("the zero fixture has no file form".into()));
    };
    let center: [f64; 2] = center
        .try_into()
        .map_err(|_| CliError::Usage(format!("--center needs two values, got {}", center.len())))?;
    prepare_dir(dir)?;
    let path = dir.join(out);
    match half_width {
        Some(hw) => shape_inner.field_2d(hw, h, center)?.save(&path)?,
        None => shape_inner.log_field(ds)?.save(&path)?,
    }
    Ok(json!({ "output": path, "shape": shape.to_string() }))
}

fn dispatch(cli: &Cli) -> Result<Value, CliError> {
    let dir = cli.out_dir.as_path();
    match &cli.command {
        Command::OrliczNorm { input, p, kappa } => orlicz_norm(input, *p, *kappa),
        Command::TmCheck { input, alpha, p } => tm_check(input, *alpha, *p),
        Command::Rearrange { field2d, ds, out } => rearrange(dir, field2d, *ds, out),
        Command::Bubble { profile, alpha, ds, p, kappa, out } => {
            bubble(dir, profile, *alpha, *ds, *p, *kappa, out)
        }
        Command::Decompose { seq, eps, max_levels } => run_decompose(dir, seq, *eps, *max_levels),
        Command::KgRun { config, snapshots, name } => kg_run(dir, config, *snapshots, name),
        Command::Linearizability { config, ns } => run_linearizability(dir, config, ns),
        Command::CalibrateKappa { ds, a, radii } => calibrate(*ds, a, radii),
        Command::Fixture { shape, ds, half_width, h, center, out } => {
            fixture(dir, *shape, *ds, *half_width, *h, center, out)
        }
    }
}

fn report(e: &CliError) -> ExitCode {
    let record = json!({ "error": { "kind": e.kind(), "code": e.code(), "message": e.to_string() } });
    eprintln!("{record}");
    ExitCode::from(e.code())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            let rendered = e.render().to_string();
            let first = rendered.lines().next().unwrap_or_default();
            let message = first.strip_prefix("error: ").unwrap_or(first).to_string();
            let err = match e.kind() {
                ErrorKind::ValueValidation | ErrorKind::InvalidValue => CliError::Parse(message),
                _ => CliError::Usage(message),
            };
            return report(&err);
        }
    };
    match dispatch(&cli) {
        Ok(v) => {
            let text = serde_json::to_string_pretty(&v).expect("JSON values serialize");
            let mut out = std::io::stdout().lock();
            match writeln!(out, "{text}").and_then(|_| out.flush()) {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => ExitCode::SUCCESS,
                Err(e) => report(&CliError::Io(e)),
            }
        }
        Err(e) => report(&e),
    }
}
