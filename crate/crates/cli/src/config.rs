use std::path::PathBuf;

use ddstab::ewald::EwaldParams;
use ddstab::kernels::{BuiltinKernel, Kernel};
use ddstab::lattice::GridConvention;
use ddstab::Par;
use serde::{Deserialize, Serialize};

use crate::{CliError, GlobalArgs};

/// Keys accepted in a `--config` JSON file.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    kernel: Option<String>,
    d: Option<usize>,
    #[serde(rename = "N")]
    n: Option<NList>,
    beta: Option<f64>,
    trunc: Option<usize>,
    grid: Option<String>,
    samples: Option<usize>,
    out: Option<PathBuf>,
    format: Option<String>,
    sequential: Option<bool>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum NList {
    One(usize),
    Many(Vec<usize>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

/// Validated options shared by all subcommands.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub builtin: BuiltinKernel,
    pub kernel: Kernel,
    pub n: Vec<usize>,
    pub params: EwaldParams,
    pub grid: GridConvention,
    pub samples: Option<usize>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub par: Par,
}

fn bad(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

impl RunConfig {
    pub fn resolve(args: &GlobalArgs) -> Result<Self, CliError> {
        let file = match &args.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| bad(format!("cannot read {}: {e}", path.display())))?;
                serde_json::from_str::<FileConfig>(&text).map_err(|e| bad(format!("invalid config: {e}")))?
            }
            None => FileConfig::default(),
        };
        let name = args.kernel.clone().or(file.kernel).unwrap_or_else(|| "ex3".into());
        let d = args.d.or(file.d);
        let builtin = BuiltinKernel::parse(&name, d)?;
        if let Some(d) = d {
            if d != builtin.dim() {
                return Err(bad(format!("kernel {builtin} has dimension {}, not {d}", builtin.dim())));
            }
        }
        let kernel = builtin.build()?;
        let n = match (&args.n, file.n) {
            (Some(v), _) => v.clone(),
            (None, Some(NList::One(v))) => vec![v],
            (None, Some(NList::Many(v))) => v,
            (None, None) => vec![8],
        };
        if n.is_empty() || n.contains(&0) {
            return Err(bad("N must be positive"));
        }
        let mut params = EwaldParams::default_for(builtin.dim());
        if let Some(b) = args.beta.or(file.beta) {
            params.beta = b;
        }
        if let Some(m) = args.trunc.or(file.trunc) {
            params.fourier_radius = m;
            params.poisson_radius = m;
        }
        params.validate()?;
        let grid = match args.grid.as_deref().or(file.grid.as_deref()) {
            Some(g) => GridConvention::parse(g)?,
            None => GridConvention::VertexClosed,
        };
        let samples = args.samples.or(file.samples);
        if let Some(s) = samples {
            if s < 2 {
                return Err(bad("samples must be at least 2"));
            }
        }
        let format = match args.format.as_deref().or(file.format.as_deref()) {
            None => None,
            Some("csv") => Some(Format::Csv),
            Some("json") => Some(Format::Json),
            Some(f) => return Err(bad(format!("unknown format '{f}' (csv or json)"))),
        };
        let sequential = args.sequential || file.sequential.unwrap_or(false);
        Ok(Self {
            builtin,
            kernel,
            n,
            params,
            grid,
            samples,
            out: args.out.clone().or(file.out),
            format,
            par: if sequential { Par::Sequential } else { Par::default() },
        })
    }

    /// The single refinement of commands that take one `N`.
    pub fn single_n(&self) -> Result<usize, CliError> {
        match self.n.as_slice() {
            [n] => Ok(*n),
            _ => Err(bad("this command takes a single N")),
        }
    }

    /// Metadata recorded in every output.
    pub fn meta(&self, command: &str) -> serde_json::Value {
        serde_json::json!({
            "command": command,
            "version": env!("CARGO_PKG_VERSION"),
            "kernel": self.builtin.to_string(),
            "d": self.builtin.dim(),
            "block": self.kernel.block(),
            "N": self.n,
            "beta": self.params.beta,
            "fourier_radius": self.params.fourier_radius,
            "poisson_radius": self.params.poisson_radius,
            "grid": self.grid.name(),
            "samples": self.samples,
            "parallel": self.par != Par::Sequential,
        })
    }
}
