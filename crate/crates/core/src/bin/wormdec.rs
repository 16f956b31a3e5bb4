use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use worm_decoder::bench::{estimate_chi2_empirical, relaxation_bound, run_experiment, write_csv, ExperimentSpec};
use worm_decoder::codes::{gen_repetition, gen_surface, gen_surface_depolarizing, gen_toric, write_check_matrices};
use worm_decoder::decoder::{decode, DecodeConfig, DecodeRecord};
use worm_decoder::oracle::{exact_chi, MAX_EDGES};
use worm_decoder::{parse_dem, reweight, DecodingGraph, DetectorErrorModel, Error, Result, Variant};

#[derive(Parser)]
#[command(
    name = "wormdec",
    version,
    about = "Worm-algorithm decoder for matchable detector error models"
)]
struct Cli {
    /// Master seed (overrides a bench config's `seed`).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for `bench` (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Elementary-move cap per worm sweep.
    #[arg(long, global = true)]
    timeout_steps: Option<u64>,
    #[arg(long, global = true, default_value = "directed")]
    variant: Variant,
    /// Output path (default: stdout; `gen` uses it as a file prefix).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    Repetition,
    Surface,
    SurfacePhenom,
    Toric,
    SurfaceDepolarizing,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Dem,
    Check,
}

#[derive(clap::Args)]
struct CodeArgs {
    /// Model file in the text DEM format.
    #[arg(long, conflicts_with = "code")]
    dem: Option<PathBuf>,
    #[arg(long, value_enum)]
    code: Option<Family>,
    #[arg(long, default_value_t = 3)]
    d: usize,
    #[arg(long, default_value_t = 0.05)]
    p: f64,
    /// Measurement error rate (`surface_phenom`; default `p`).
    #[arg(long)]
    meas_p: Option<f64>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Write a generated code as a DEM or as check-matrix files.
    Gen {
        #[command(flatten)]
        code: CodeArgs,
        #[arg(long, value_enum, default_value = "dem")]
        format: Format,
    },
    /// Decode one syndrome and print a JSON record.
    Decode {
        #[command(flatten)]
        code: CodeArgs,
        /// Detector bits, e.g. `0110`.
        #[arg(long)]
        syndrome: String,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long)]
        burn_in: Option<usize>,
        #[arg(long)]
        thin: Option<usize>,
        /// Stop early at confidence `1 - alpha`.
        #[arg(long)]
        early_stop: Option<f64>,
        /// Include per-edge posterior marginals.
        #[arg(long)]
        marginals: bool,
    },
    /// Run an experiment config and write CSV.
    Bench {
        config: PathBuf,
        /// Fill the wall_time column.
        #[arg(long)]
        timing: bool,
    },
    /// Defect susceptibilities and the relaxation-time bound.
    Diag {
        #[command(flatten)]
        code: CodeArgs,
        /// Symmetric-chain steps for the empirical estimate.
        #[arg(long, default_value_t = 1_000_000)]
        steps: u64,
        /// Uniform weight for the bound (default: largest edge weight).
        #[arg(long)]
        w: Option<f64>,
        /// Override χ₄ (the chain never visits four-defect states).
        #[arg(long)]
        chi4: Option<f64>,
    },
}

enum Built {
    Model(DetectorErrorModel),
    Pair(DetectorErrorModel, DetectorErrorModel),
}

fn build(args: &CodeArgs) -> Result<Built> {
    if let Some(path) = &args.dem {
        return Ok(Built::Model(parse_dem(&fs::read_to_string(path)?)?));
    }
    let fam = args
        .code
        .ok_or_else(|| Error::InvalidParameter("pass --dem or --code".into()))?;
    let (d, p) = (args.d, args.p);
    Ok(match fam {
        Family::Repetition => Built::Model(gen_repetition(d, p)?),
        Family::Surface => Built::Model(gen_surface(d, p, None)?),
        Family::SurfacePhenom => Built::Model(gen_surface(d, p, Some(args.meas_p.unwrap_or(p)))?),
        Family::Toric => Built::Model(gen_toric(d, p)?),
        Family::SurfaceDepolarizing => {
            let prob = gen_surface_depolarizing(d, p)?;
            Built::Pair(prob.model_x, prob.model_z)
        }
    })
}

fn single(args: &CodeArgs) -> Result<DetectorErrorModel> {
    match build(args)? {
        Built::Model(m) => Ok(m),
        Built::Pair(x, _) => Ok(x),
    }
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn write_model(out: &Option<PathBuf>, tag: &str, m: &DetectorErrorModel, format: Format) -> Result<()> {
    match format {
        Format::Dem => match out {
            Some(prefix) => fs::write(with_suffix(prefix, &format!("{tag}.dem")), m.to_text())?,
            None => emit(&None, &m.to_text())?,
        },
        Format::Check => {
            let prefix = out
                .as_ref()
                .ok_or_else(|| Error::InvalidParameter("--format check needs --out".into()))?;
            let (e, l) = write_check_matrices(m);
            fs::write(with_suffix(prefix, &format!("{tag}.errors")), e)?;
            fs::write(with_suffix(prefix, &format!("{tag}.logicals")), l)?;
        }
    }
    Ok(())
}

fn parse_bits(s: &str) -> Result<Vec<bool>> {
    s.trim()
        .chars()
        .map(|c| match c {
            '0' => Ok(false),
            '1' => Ok(true),
            _ => Err(Error::MalformedSyndrome(format!("unexpected character `{c}`"))),
        })
        .collect()
}

fn run(cli: Cli) -> Result<()> {
    match &cli.cmd {
        Cmd::Gen { code, format } => match build(code)? {
            Built::Model(m) => write_model(&cli.out, "", &m, *format),
            Built::Pair(x, z) => {
                write_model(&cli.out, ".x", &x, *format)?;
                write_model(&cli.out, ".z", &z, *format)
            }
        },
        Cmd::Decode {
            code,
            syndrome,
            samples,
            burn_in,
            thin,
            early_stop,
            marginals,
        } => {
            let model = single(code)?;
            let g = DecodingGraph::from_dem(&model)?;
            let cfg = DecodeConfig {
                n_samples: *samples,
                burn_in: *burn_in,
                thin: *thin,
                variant: cli.variant,
                seed: cli.seed.unwrap_or(0),
                early_stop: *early_stop,
                step_cap: cli.timeout_steps,
                marginals: *marginals,
                ..Default::default()
            };
            let record = match decode(&g, &parse_bits(syndrome)?, &cfg) {
                Ok(r) => r.to_record(),
                Err(Error::Timeout(steps)) => DecodeRecord::timed_out(steps, &cfg.sampler_config(&g)),
                Err(e) => return Err(e),
            };
            let text = serde_json::to_string_pretty(&record).map_err(|e| Error::Io(e.to_string()))?;
            emit(&cli.out, &(text + "\n"))
        }
        Cmd::Bench { config, timing } => {
            let mut spec = ExperimentSpec::load(config)?;
            if let Some(s) = cli.seed {
                spec.seed = s;
            }
            spec.timing |= *timing;
            if let Some(cap) = cli.timeout_steps {
                spec.step_cap = Some(cap);
            }
            let rows = match cli.threads {
                Some(n) => rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build()
                    .map_err(|e| Error::InvalidParameter(e.to_string()))?
                    .install(|| run_experiment(&spec))?,
                None => run_experiment(&spec)?,
            };
            match &cli.out {
                Some(p) => write_csv(&rows, fs::File::create(p)?),
                None => write_csv(&rows, std::io::stdout().lock()),
            }
        }
        Cmd::Diag { code, steps, w, chi4 } => {
            let model = single(code)?;
            let g = DecodingGraph::from_dem(&model)?;
            let rg = reweight(&g, g.empty_chain());
            let exact = (g.num_edges() <= MAX_EDGES).then(|| exact_chi(&rg)).transpose()?;
            let mut rng = ChaCha8Rng::seed_from_u64(cli.seed.unwrap_or(0));
            let chi2_hat = estimate_chi2_empirical(&rg, *steps, &mut rng)?;
            let w = w.unwrap_or_else(|| g.weights().into_iter().fold(0.0, f64::max));
            let chi2 = exact.map_or(chi2_hat, |e| e.0);
            let chi4 = chi4.or(exact.map(|e| e.1)).unwrap_or(0.0);
            let bound = relaxation_bound(
                g.max_degree() as f64,
                w,
                g.num_edges() as f64,
                g.num_vertices() as f64,
                chi2,
                chi4,
            )
            .ok();
            let v = json!({
                "vertices": g.num_vertices(),
                "edges": g.num_edges(),
                "max_degree": g.max_degree(),
                "w": w,
                "chi2_empirical": chi2_hat,
                "chi2_exact": exact.map(|e| e.0),
                "chi4_exact": exact.map(|e| e.1),
                "chi4_used": chi4,
                "relaxation_bound": bound,
            });
            emit(&cli.out, &(serde_json::to_string_pretty(&v).unwrap_or_default() + "\n"))
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("wormdec: {e}");
            ExitCode::FAILURE
        }
    }
}
