use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use ptspec_cli::config::JobConfig;
use ptspec_cli::{init_threads, parse_pairs, run};
use ptspec_core::{PtError, Result};

/// Classical paths and spectra of p^2 + x^(2K) (ix)^eps and p^2 + |x|^P (ix)^eps.
#[derive(Debug, Parser)]
#[command(name = "ptspec", version)]
struct Cli {
    /// trajectory | spectrum | matrix | wkb | table1 | pinch | special-points | emit-figure
    command: Option<String>,
    /// Figure id for emit-figure (fig1, fig2, fig4, fig6, fig10, fig11, fig13, fig16, fig17, fig18, fig19, fig115)
    figure: Option<String>,
    /// Flat key = value file; flags override its entries
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long = "K")]
    k: Option<String>,
    #[arg(long = "P")]
    p: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    eps: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    eps_min: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    eps_max: Option<String>,
    #[arg(long)]
    eps_steps: Option<String>,
    #[arg(long)]
    levels: Option<String>,
    #[arg(long)]
    trunc: Option<String>,
    #[arg(long)]
    energy: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    x0_re: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    x0_im: Option<String>,
    /// plus | minus: sign of the initial momentum
    #[arg(long)]
    branch: Option<String>,
    #[arg(long)]
    t_max: Option<String>,
    /// lo | nlo
    #[arg(long)]
    order: Option<String>,
    /// Level pair for pinch, e.g. 1,2
    #[arg(long)]
    pair: Option<String>,
    /// Comma-separated deltas for table1
    #[arg(long)]
    deltas: Option<String>,
    /// RK4 steps per shooting ray
    #[arg(long)]
    steps: Option<String>,
    #[arg(long)]
    action: Option<String>,
    #[arg(long)]
    tol_e: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// csv | json
    #[arg(long)]
    format: Option<String>,
}

impl Cli {
    fn flag_pairs(&self) -> BTreeMap<String, String> {
        let fields: [(&str, &Option<String>); 21] = [
            ("command", &self.command),
            ("figure", &self.figure),
            ("K", &self.k),
            ("P", &self.p),
            ("eps", &self.eps),
            ("eps_min", &self.eps_min),
            ("eps_max", &self.eps_max),
            ("eps_steps", &self.eps_steps),
            ("levels", &self.levels),
            ("trunc", &self.trunc),
            ("energy", &self.energy),
            ("x0_re", &self.x0_re),
            ("x0_im", &self.x0_im),
            ("branch", &self.branch),
            ("t_max", &self.t_max),
            ("order", &self.order),
            ("pair", &self.pair),
            ("deltas", &self.deltas),
            ("steps", &self.steps),
            ("action", &self.action),
            ("tol_e", &self.tol_e),
        ];
        let mut m: BTreeMap<String, String> = fields
            .into_iter()
            .filter_map(|(k, v)| v.as_ref().map(|v| (k.to_string(), v.clone())))
            .collect();
        if let Some(o) = &self.out {
            m.insert("out".into(), o.display().to_string());
        }
        if let Some(f) = &self.format {
            m.insert("format".into(), f.clone());
        }
        m
    }
}

fn job(cli: &Cli) -> Result<String> {
    init_threads()?;
    let file = match &cli.config {
        Some(path) => parse_pairs(&std::fs::read_to_string(path)?)?,
        None => BTreeMap::new(),
    };
    let cfg = JobConfig::merge(file, cli.flag_pairs())?;
    run(&cfg)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("error")).init();
    let cli = Cli::parse();
    match job(&cli) {
        Ok(summary) => {
            // stdout may carry the data itself
            eprintln!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("ptspec: {e}");
            let code = match e {
                PtError::Io(_) => 2,
                ref other => other.exit_code(),
            };
            ExitCode::from(code as u8)
        }
    }
}
