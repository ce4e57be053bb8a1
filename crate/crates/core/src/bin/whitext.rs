use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use whitext::error::{Error, Result};
use whitext::extension::{ExtensionOperator, ExtensionOptions};
use whitext::functionals::{Analysis, RadiusLadder, Space, SpaceParams, TableOptions};
use whitext::grid::Grid;
use whitext::harness::{criteria, emit_report, exit_code, generate_function, run_verification, Config, Format, FunctionSpec};
use whitext::io::{read_function, read_set, write_function, write_set};
use whitext::regular_set::{default_radii, estimate_regularity, RegularSet, SetSpec};
use whitext::whitney::whitney_decompose;

#[derive(Parser)]
#[command(name = "whitext", version, about = "Whitney-type extension and trace norms on uniform grids")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Rasterize a set description to a SET1 file.
    GenSet {
        /// Set kind: box, half_space, fat_cantor, fat_sierpinski_carpet,
        /// lipschitz_subgraph or union.
        #[arg(long)]
        kind: String,
        /// Remaining fields of the description as a JSON object.
        #[arg(long, default_value = "{}")]
        params: String,
        /// `n,dims...,origin...,h`.
        #[arg(long)]
        grid: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Estimate theta and delta of a set; prints JSON.
    EstimateReg {
        #[arg(long)]
        set: PathBuf,
    },
    /// Whitney decomposition of the complement as a JSON cube list.
    Whitney {
        #[arg(long)]
        set: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Extend a function from S to the box; prints the sidecar JSON.
    Extend {
        #[arg(long)]
        set: PathBuf,
        #[arg(long = "fn")]
        func: PathBuf,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        out: PathBuf,
        /// Also write the sidecar here.
        #[arg(long)]
        sidecar: Option<PathBuf>,
    },
    /// Intrinsic trace functional of a function on S.
    Norm {
        #[arg(long = "fn")]
        func: PathBuf,
        #[arg(long)]
        set: PathBuf,
        /// sobolev, tl or besov.
        #[arg(long)]
        space: String,
        /// `s,k,p,q,u`; `inf` is accepted.
        #[arg(long)]
        params: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sample a corpus function on the grid of a set.
    GenFn {
        #[arg(long)]
        set: PathBuf,
        /// Function kind: constant, monomial, cusp, sine or noise.
        #[arg(long)]
        kind: String,
        #[arg(long, default_value = "{}")]
        params: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the verification suite; exit code 1 if any check fails.
    Verify {
        /// TOML config; the default corpus when absent.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        format: Option<Format>,
    },
    /// Print the default verification config as TOML.
    DefaultConfig,
}

fn parse_grid(text: &str) -> Result<Grid> {
    let nums: Vec<f64> = text
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| Error::Config(format!("bad number {t:?} in --grid"))))
        .collect::<Result<_>>()?;
    let n = *nums.first().ok_or_else(|| Error::Config("empty --grid".into()))? as usize;
    if !(1..=3).contains(&n) || nums.len() != 2 * n + 2 {
        return Err(Error::Config(format!("--grid needs n,dims[n],origin[n],h; got {} numbers", nums.len())));
    }
    let dims: Vec<usize> = nums[1..=n].iter().map(|&d| d as usize).collect();
    Grid::new(&dims, &nums[n + 1..=2 * n], nums[2 * n + 1])
}

fn tagged<T: serde::de::DeserializeOwned>(kind: &str, params: &str) -> Result<T> {
    let mut v: Value = serde_json::from_str(params).map_err(|e| Error::Config(format!("--params: {e}")))?;
    let obj = v.as_object_mut().ok_or_else(|| Error::Config("--params must be a JSON object".into()))?;
    obj.insert("kind".into(), Value::String(kind.to_string()));
    serde_json::from_value(v).map_err(|e| Error::Config(e.to_string()))
}

fn write_json(path: Option<&PathBuf>, v: &Value) -> Result<()> {
    let text = serde_json::to_string_pretty(v).map_err(|e| Error::Format(e.to_string()))? + "\n";
    match path {
        Some(p) => std::fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn load_set(path: &PathBuf) -> Result<RegularSet> {
    RegularSet::estimate(read_set(path)?)
}

fn run(cmd: Cmd) -> Result<u8> {
    match cmd {
        Cmd::GenSet { kind, params, grid, out } => {
            let spec: SetSpec = tagged(&kind, &params)?;
            let cells = spec.rasterize(&parse_grid(&grid)?)?;
            write_set(&out, &cells)?;
        }
        Cmd::EstimateReg { set } => {
            let cells = read_set(&set)?;
            let reg = estimate_regularity(&cells, &default_radii(cells.grid()))?;
            write_json(
                None,
                &json!({"theta": reg.theta, "delta": reg.delta, "centers_sampled": reg.centers_sampled, "radii": reg.radii}),
            )?;
        }
        Cmd::Whitney { set, out } => {
            let s = load_set(&set)?;
            let w = whitney_decompose(&s, s.grid())?;
            let n = s.grid().n();
            let cubes: Vec<Value> = w
                .cubes
                .iter()
                .map(|q| json!({"center": q.cube.center[..n], "radius": q.cube.radius, "flagged": q.flagged}))
                .collect();
            write_json(Some(&out), &Value::Array(cubes))?;
        }
        Cmd::Extend { set, func, k, out, sidecar } => {
            let s = load_set(&set)?;
            let f = read_function(&func)?;
            let op = ExtensionOperator::build(&s, k, &ExtensionOptions::default())?;
            let (ext, map) = op.extend_with_map(&f)?;
            write_function(&out, &ext)?;
            let v = serde_json::to_value(op.sidecar(&map)).map_err(|e| Error::Format(e.to_string()))?;
            if let Some(p) = sidecar {
                write_json(Some(&p), &v)?;
            }
            write_json(None, &v)?;
        }
        Cmd::Norm { func, set, space, params, out } => {
            let s = load_set(&set)?;
            let f = read_function(&func)?;
            let space: Space = space.parse()?;
            let v = SpaceParams::parse(&params)?;
            let ladder = RadiusLadder::for_grid(s.grid());
            let mut a = Analysis::new(f, Some(s.cells.clone()), ladder.clone(), TableOptions::default());
            let parts = a.trace_norm(space, &v)?;
            let mut body = json!({
                "value": parts.value,
                "parts": {"lp": parts.lp, "seminorm": parts.seminorm},
                "ladder": {"per_octave": ladder.per_octave, "t_min": ladder.t.first(), "t_max": ladder.t.last(), "count": ladder.len()},
            });
            if v.unvalidated() {
                body["warning"] = json!("q below the validated range");
            }
            write_json(out.as_ref(), &body)?;
        }
        Cmd::GenFn { set, kind, params, out } => {
            let s = load_set(&set)?;
            let spec: FunctionSpec = tagged(&kind, &params)?;
            let f = generate_function(&spec, s.grid(), Some(&s))?;
            write_function(&out, &f)?;
        }
        Cmd::Verify { config, out, format } => {
            let mut cfg = match config {
                Some(p) => Config::load(p)?,
                None => Config::default_corpus(),
            };
            if let Some(o) = out {
                cfg.output = Some(o);
            }
            if let Some(f) = format {
                cfg.format = f;
            }
            let report = run_verification(&cfg);
            let path = cfg.output.clone().unwrap_or_else(|| PathBuf::from("report.json"));
            emit_report(&report, cfg.format, &path)?;
            for c in criteria(&report) {
                eprintln!(
                    "criterion {} ({}): {} [{} checks, {} failed]",
                    c.id,
                    c.title,
                    if c.passed() { "pass" } else { "FAIL" },
                    c.checks,
                    c.failed.len()
                );
            }
            let failed = report.iter().filter(|r| !r.passed()).count();
            eprintln!("{} checks, {failed} failed; report written to {}", report.len(), path.display());
            return Ok(exit_code(&report) as u8);
        }
        Cmd::DefaultConfig => print!("{}", Config::default_corpus().to_toml()?),
    }
    Ok(0)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse().cmd) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
