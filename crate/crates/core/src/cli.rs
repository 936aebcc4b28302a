//! Command line front end: synthesize, verify, cross-validate, plot-data.
//!
//! Exit codes: 0 pass, 1 audit or verification failure, 2 I/O, parse or
//! usage error.

use std::ffi::OsString;
use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::constructor::{
    self, audit, parse_curve_json, Certificate, EpsilonRule, GrowthParams, SynthConfig,
};
use crate::contfrac::DEFAULT_DEPTH_CAP;
use crate::error::{Error, Result};
use crate::trajectory::{self, to_plane};
use crate::verify::{self, VerifyOptions};

#[derive(Debug, Parser)]
#[command(name = "limitset", version, about = "Certified continued-fraction rays with prescribed barycentric limit sets")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build and audit a certificate for a target curve
    Synthesize(SynthArgs),
    /// Re-check a certificate from the file alone
    Verify(VerifyArgs),
    /// Compare the coarse engine with exact arithmetic on random schedules
    CrossValidate(CrossArgs),
    /// Export trajectory, plan and curve tables for plotting
    PlotData(PlotArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// curve spec (JSON)
    #[arg(long)]
    pub curve: PathBuf,
    #[arg(long, default_value_t = 25)]
    pub k: usize,
    /// ratio r of epsilon_j = 0.4 r^(j-1)
    #[arg(long, default_value_t = 0.8)]
    pub epsilon_ratio: f64,
    /// slit length: "auto" or a number below the threshold
    #[arg(long, default_value = "auto")]
    pub slit: String,
    #[arg(long, default_value_t = 1.0)]
    pub epsilon0: f64,
    #[arg(long, default_value_t = 0.25)]
    pub r0: f64,
    /// additive slack R between curve graph distance and index proxy
    #[arg(long, default_value_t = 4)]
    pub r_constant: u64,
    /// digits wider than this many bits are kept as scales only
    #[arg(long, default_value_t = 4096)]
    pub digit_cap: u64,
    /// output directory
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long)]
    pub certificate: PathBuf,
    #[arg(long, default_value_t = 0.05)]
    pub mesh: f64,
    #[arg(long, default_value_t = trajectory::WINDOW_POINTS)]
    pub grid_density: usize,
    /// optional directory for verification.json
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CrossArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 500)]
    pub trials: usize,
    #[arg(long, default_value_t = DEFAULT_DEPTH_CAP)]
    pub depth_cap: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    #[arg(long)]
    pub certificate: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = trajectory::WINDOW_POINTS)]
    pub grid_density: usize,
    #[arg(long, default_value_t = 0.05)]
    pub mesh: f64,
}

/// Resolved settings of a synthesize run.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub curve: PathBuf,
    pub synth: SynthConfig,
    pub out: PathBuf,
}

impl RunConfig {
    pub fn from_args(a: &SynthArgs) -> Result<Self> {
        let slit = match a.slit.trim() {
            "auto" => None,
            v => Some(crate::numeric::parse_f64(v, "--slit")?),
        };
        let (slit, slit_auto) = constructor::resolve_slit(slit, a.epsilon0, a.r0)?;
        let synth = SynthConfig {
            k: a.k,
            epsilon: EpsilonRule {
                ratio: a.epsilon_ratio,
                ..EpsilonRule::default()
            },
            growth: GrowthParams {
                r: a.r_constant,
                ..GrowthParams::default()
            },
            slit,
            slit_auto,
            epsilon0: a.epsilon0,
            r0: a.r0,
            digit_cap: a.digit_cap,
        };
        synth.epsilon.validate()?;
        if synth.k < 2 {
            return Err(Error::Domain("--k must be at least 2".into()));
        }
        Ok(RunConfig {
            curve: a.curve.clone(),
            synth,
            out: a.out.clone(),
        })
    }
}

/// Exclusive claim on an output directory, released on drop.
pub struct OutputLock {
    path: PathBuf,
}

impl OutputLock {
    pub const NAME: &'static str = ".limitset.lock";

    pub fn acquire(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir)?;
        let path = dir.join(Self::NAME);
        match OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(mut f) => {
                let _ = writeln!(f, "{}", std::process::id());
                Ok(OutputLock { path })
            }
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => {
                Err(Error::Locked(path.display().to_string()))
            }
            Err(e) => Err(e.into()),
        }
    }
}

impl Drop for OutputLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}

/// Write through a temporary file so readers never see half a file.
fn write_atomic(path: &Path, text: &str) -> Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, text)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

pub enum Outcome {
    Pass,
    Fail,
}

pub fn cmd_synthesize(a: &SynthArgs) -> Result<Outcome> {
    let cfg = RunConfig::from_args(a)?;
    let text = fs::read_to_string(&cfg.curve)?;
    let curve = parse_curve_json(&text)?;
    let _lock = OutputLock::acquire(&cfg.out)?;
    let cert = constructor::synthesize(&curve, &cfg.synth)?;
    let path = cfg.out.join("certificate.json");
    write_atomic(&path, &(cert.to_json()? + "\n"))?;
    println!("certificate: {}", path.display());
    println!("K = {}, {} audit entries, all passing", cert.k(), cert.audit.len());
    for (id, m) in audit::worst_margins(&cert.audit) {
        println!("  {id:<18} worst margin {m:.3e}");
    }
    Ok(Outcome::Pass)
}

pub fn cmd_verify(a: &VerifyArgs) -> Result<Outcome> {
    let cert = Certificate::load(&a.certificate)?;
    let opts = VerifyOptions {
        mesh: a.mesh,
        grid_density: a.grid_density,
    };
    let rep = verify::verify_certificate(&cert, opts)?;
    println!("K = {}, {} audit entries replayed", rep.k, rep.audit_entries);
    let line = |name: &str, ok: bool| println!("  {name:<14} {}", if ok { "pass" } else { "FAIL" });
    line("audit-replay", rep.audit_replay_matches && rep.audit_failures.is_empty());
    line("interleaving", rep.interleaving_pass);
    line("tracking", rep.tracking.pass);
    line("horoball", rep.horoball_pass);
    line("digits", rep.digits_pass);
    line("growth", rep.growth_pass);
    line("limit-set", rep.limit_set.pass);
    if let Some(dir) = &a.out {
        let _lock = OutputLock::acquire(dir)?;
        write_atomic(&dir.join("verification.json"), &serde_json::to_string_pretty(&rep)?)?;
    }
    Ok(if rep.pass { Outcome::Pass } else { Outcome::Fail })
}

pub fn cmd_cross_validate(a: &CrossArgs) -> Result<Outcome> {
    let rep = verify::cross_validate(a.seed, a.trials, a.depth_cap)?;
    println!(
        "{} schedules, {} comparisons; max |log q| error {:.4}, max |T| error {:.4} (L = {:.4})",
        rep.trials, rep.comparisons, rep.max_log_q_error, rep.max_balance_error, rep.l
    );
    for f in rep.failures.iter().take(10) {
        println!("  {f}");
    }
    if let Some(dir) = &a.out {
        let _lock = OutputLock::acquire(dir)?;
        write_atomic(&dir.join("cross_validation.json"), &serde_json::to_string_pretty(&rep)?)?;
    }
    Ok(if rep.pass { Outcome::Pass } else { Outcome::Fail })
}

pub fn cmd_plot_data(a: &PlotArgs) -> Result<Outcome> {
    let cert = Certificate::load(&a.certificate)?;
    let curve = constructor::TargetCurve::from_spec(cert.curve.clone())?;
    let _lock = OutputLock::acquire(&a.out)?;
    let rows = trajectory::trajectory_table(&cert, a.grid_density)?;
    write_atomic(&a.out.join("trajectory.csv"), &trajectory::table_csv(&rows))?;

    let mut s = String::from("j,t,b0,b1,b2,x,y\n");
    for j in 1..=cert.k() {
        let p = cert.plan.point(j);
        let (x, y) = to_plane(p);
        s.push_str(&format!("{j},{},{},{},{},{x},{y}\n", cert.plan.params[j - 1], p[0], p[1], p[2]));
    }
    write_atomic(&a.out.join("plan.csv"), &s)?;

    let mut s = String::from("b0,b1,b2,x,y\n");
    for p in curve.image_samples(a.mesh) {
        let (x, y) = to_plane(&p);
        s.push_str(&format!("{},{},{},{x},{y}\n", p[0], p[1], p[2]));
    }
    write_atomic(&a.out.join("curve.csv"), &s)?;

    let mut s = String::from("k,t,horoball_ratio,epsilon,pass\n");
    for c in trajectory::checkpoints(&cert)? {
        s.push_str(&format!("{},{:e},{:e},{:e},{}\n", c.k, c.t, c.horoball_ratio, c.epsilon, c.pass));
    }
    write_atomic(&a.out.join("checkpoints.csv"), &s)?;
    println!("wrote {} trajectory rows to {}", rows.len(), a.out.display());
    Ok(Outcome::Pass)
}

pub fn exit_code(r: &Result<Outcome>) -> i32 {
    match r {
        Ok(Outcome::Pass) => 0,
        Ok(Outcome::Fail) => 1,
        Err(Error::AuditFailed(_)) | Err(Error::PlanInfeasible { .. }) => 1,
        Err(_) => 2,
    }
}

pub fn run(cli: &Cli) -> Result<Outcome> {
    match &cli.command {
        Command::Synthesize(a) => cmd_synthesize(a),
        Command::Verify(a) => cmd_verify(a),
        Command::CrossValidate(a) => cmd_cross_validate(a),
        Command::PlotData(a) => cmd_plot_data(a),
    }
}

/// Parse arguments, run, report errors on stderr and return the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let r = run(&cli);
    if let Err(e) = &r {
        eprintln!("error: {e}");
    }
    exit_code(&r)
}
