use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use narrowband::driver::{
    report_csv, run_extension_study, run_repeated_extension, run_transport, ErrorRow, RunConfig,
};
use narrowband::Error;

#[derive(Parser)]
#[command(name = "narrowband", version, about = "Narrow-band DG level set transport and ghost-penalty extension")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Transport convergence study.
    Transport(Flags),
    /// Ghost-penalty extension convergence study.
    Extension(Flags),
    /// Repeated extension on the finest level.
    RepeatExt(Flags),
}

#[derive(Args)]
struct Flags {
    /// key=value config file; flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    case: Option<String>,
    #[arg(long)]
    order: Option<usize>,
    #[arg(long)]
    bdf: Option<usize>,
    #[arg(long)]
    layers: Option<usize>,
    #[arg(long)]
    proj: Option<String>,
    #[arg(long)]
    bnd: Option<String>,
    #[arg(long)]
    gp: Option<String>,
    #[arg(long = "gamma-ext")]
    gamma_ext: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    h0: Option<f64>,
    #[arg(long)]
    refine: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long = "dump-interface")]
    dump_interface: Option<PathBuf>,
    #[arg(long = "warmup-substeps")]
    warmup_substeps: Option<usize>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long = "end-time")]
    end_time: Option<f64>,
    #[arg(long = "track-volume")]
    track_volume: bool,
    #[arg(long = "ext-layers")]
    ext_layers: Option<usize>,
    /// Iteration count for repeat-ext.
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    sublevels: Option<usize>,
}

impl Flags {
    fn config(&self) -> Result<RunConfig, Error> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::parse_kv(&std::fs::read_to_string(p)?)?,
            None => RunConfig::default(),
        };
        let mut set = |k: &str, v: Option<String>| v.map_or(Ok(()), |v| cfg.set(k, &v));
        set("case", self.case.clone())?;
        set("order", self.order.map(|v| v.to_string()))?;
        set("bdf", self.bdf.map(|v| v.to_string()))?;
        set("layers", self.layers.map(|v| v.to_string()))?;
        set("proj", self.proj.clone())?;
        set("bnd", self.bnd.clone())?;
        set("gp", self.gp.clone())?;
        set("gamma-ext", self.gamma_ext.map(|v| v.to_string()))?;
        set("alpha", self.alpha.map(|v| v.to_string()))?;
        set("h0", self.h0.map(|v| v.to_string()))?;
        set("refine", self.refine.map(|v| v.to_string()))?;
        set("out", self.out.as_ref().map(|p| p.display().to_string()))?;
        set("dump-interface", self.dump_interface.as_ref().map(|p| p.display().to_string()))?;
        set("warmup-substeps", self.warmup_substeps.map(|v| v.to_string()))?;
        set("dt", self.dt.map(|v| v.to_string()))?;
        set("end-time", self.end_time.map(|v| v.to_string()))?;
        set("track-volume", self.track_volume.then(|| "true".to_string()))?;
        set("ext-layers", self.ext_layers.map(|v| v.to_string()))?;
        set("steps", self.steps.map(|v| v.to_string()))?;
        set("sublevels", self.sublevels.map(|v| v.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Transport(f) => {
            let runs = run_transport(&f.config()?)?;
            let rows: Vec<ErrorRow> = runs
                .iter()
                .map(|r| ErrorRow { h: r.h, e_l2: r.e_l2, e_gamma: r.e_gamma, e_gamma_inf: r.e_gamma_inf })
                .collect();
            print!("{}", report_csv(&rows));
        }
        Command::Extension(f) => {
            println!("MeshSize,eExt,eExtGrad,eExt1,eExt1Grad");
            for r in run_extension_study(&f.config()?)? {
                println!("{:.11e},{:.11e},{:.11e},{:.11e},{:.11e}", r.h, r.e_ext, r.e_ext_grad, r.e_ext1, r.e_ext1_grad);
            }
        }
        Command::RepeatExt(f) => {
            println!("N,NormP,NormS,eP,eE");
            for r in run_repeated_extension(&f.config()?)? {
                println!("{},{:.11e},{:.11e},{:.11e},{:.11e}", r.n, r.norm_p, r.norm_s, r.e_p, r.e_e);
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_numerical() {
                ExitCode::from(2)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
