//! `tensoraudit` command-line driver.
//!
//! Exit codes: 0 success, 1 usage error, 2 data/format/io error, 3 numerical
//! failure (including an audit with a failed test). Errors are also reported
//! as one JSON line on standard error.

mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use tensoraudit::audit::{self, AuditConfig, Method, Verdict};
use tensoraudit::format::{load_tensor, save_tensor};
use tensoraudit::generate::{planted_tucker, random_uniform, PlantedSpec};
use tensoraudit::hosvd::hosvd_run;
use tensoraudit::images::ingest_images;
use tensoraudit::init::{make_init_bundle, make_init_bundle_rank, StartLabel};
use tensoraudit::parafac::parafac_run;
use tensoraudit::report::{spectra_csv, ReportFile};
use tensoraudit::scramble::{Rect, ScrambleKind, ScrambleSpec};
use tensoraudit::spectrum::{spectrum_report, Centering, SpectrumReport, DEFAULT_TAU};
use tensoraudit::{Error, Result};

use output::{read_json, read_sidecar, sidecar_path, write_json, write_matrix_csv, write_text};

#[derive(Parser, Debug)]
#[command(name = "tensoraudit", version, about = "Tensor decompositions and uniqueness audits")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a uniform random or planted Tucker tensor
    Gen(GenArgs),
    /// Stack a directory of PGM images into a tensor
    Ingest(IngestArgs),
    /// Scramble or occlude every image slice
    Scramble(ScrambleArgs),
    /// Fit one HOSVD or ParaFac model
    Decompose(DecomposeArgs),
    /// Multi-start uniqueness audit
    Audit(AuditArgs),
    /// Mode spectra and eigengap uniqueness prediction
    Spectrum(SpectrumArgs),
    /// Validate a report, merge a spectrum and flatten to CSV
    Report(ReportArgs),
}

#[derive(Args, Debug)]
struct GenArgs {
    /// Tensor dims n1,n2,n3
    #[arg(long, value_delimiter = ',', required = true)]
    dims: Vec<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Core dims for a planted Tucker tensor (omit for uniform random)
    #[arg(long, value_delimiter = ',')]
    core_dims: Option<Vec<usize>>,
    /// Superdiagonal core values, non-increasing
    #[arg(long, value_delimiter = ',', requires = "core_dims")]
    spectrum: Option<Vec<f64>>,
    /// Noise norm relative to the signal norm
    #[arg(long, default_value_t = 0.0, requires = "core_dims")]
    noise: f64,
}

#[derive(Args, Debug)]
struct IngestArgs {
    #[arg(long)]
    dir: PathBuf,
    /// Resize every image to h,w
    #[arg(long, value_delimiter = ',')]
    size: Option<Vec<usize>>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
#[command(group(clap::ArgGroup::new("kind").required(true).args(["block", "pixel", "occlude"])))]
struct ScrambleArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Block grid size n (n x n cells)
    #[arg(long)]
    block: Option<usize>,
    /// Fraction of pixels to shuffle
    #[arg(long)]
    pixel: Option<f64>,
    /// Occlusion rectangle x,y,w,h (x column, y row)
    #[arg(long, value_delimiter = ',')]
    occlude: Option<Vec<usize>>,
    #[arg(long, default_value_t = 0.0)]
    fill: f64,
    /// Place the occlusion at a random position per image
    #[arg(long)]
    random_position: bool,
    /// Use one permutation for all images
    #[arg(long)]
    shared: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Algo {
    Hosvd,
    Parafac,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Preset {
    M5,
    M10,
}

#[derive(Args, Debug)]
struct DecomposeArgs {
    #[arg(long, value_enum)]
    algo: Algo,
    #[arg(long, value_delimiter = ',')]
    dims: Option<Vec<usize>>,
    #[arg(long)]
    rank: Option<usize>,
    #[arg(long)]
    iters: Option<usize>,
    /// Start from the bundle: r1, r2a, r2b, r2c, r3a, r3b, r3c
    #[arg(long, default_value = "r1")]
    init: String,
    /// Seed of the start bundle
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long = "in")]
    input: PathBuf,
    /// Output directory
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct AuditArgs {
    #[arg(long, value_enum)]
    algo: Algo,
    #[arg(long, value_delimiter = ',', conflicts_with = "preset")]
    dims: Option<Vec<usize>>,
    #[arg(long, value_enum)]
    preset: Option<Preset>,
    #[arg(long)]
    rank: Option<usize>,
    #[arg(long, default_value_t = audit::DEFAULT_TESTS)]
    tests: usize,
    #[arg(long)]
    iters: Option<usize>,
    #[arg(long, default_value_t = audit::DEFAULT_EPSILON)]
    eps: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Tests run concurrently (default: available processors)
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Also compute the spectrum prediction for the same dims
    #[arg(long)]
    predict: bool,
    #[arg(long, default_value_t = DEFAULT_TAU)]
    tau: f64,
    #[arg(long, default_value = "all-modes", value_parser = parse_centering)]
    centering: Centering,
}

#[derive(Args, Debug)]
struct SpectrumArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, value_delimiter = ',', required = true)]
    dims: Vec<usize>,
    #[arg(long, default_value_t = DEFAULT_TAU)]
    tau: f64,
    #[arg(long, default_value = "all-modes", value_parser = parse_centering)]
    centering: Centering,
    /// JSON output; the spectra CSV is written next to it
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct ReportArgs {
    #[arg(long = "in")]
    input: PathBuf,
    /// Spectrum JSON to merge into the report
    #[arg(long)]
    spectrum: Option<PathBuf>,
    #[arg(long)]
    csv_dir: Option<PathBuf>,
    /// Write the (merged) report here
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_centering(s: &str) -> std::result::Result<Centering, String> {
    s.parse::<Centering>().map_err(|e| e.to_string())
}

fn triple(v: &[usize], what: &str) -> Result<[usize; 3]> {
    <[usize; 3]>::try_from(v).map_err(|_| {
        Error::Argument(format!("{what} needs exactly three comma-separated values, got {}", v.len()))
    })
}

fn print_resolved(command: &str, config: Value) {
    println!("{}", json!({ "command": command, "resolved": config }));
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Argument(_) => 1,
        Error::Numerical(_) => 3,
        _ => 2,
    }
}

fn report_error(e: &Error) -> ExitCode {
    let code = exit_code(e);
    eprintln!(
        "{}",
        json!({ "error": { "kind": e.kind(), "exit_code": code, "message": e.to_string() } })
    );
    ExitCode::from(code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            if !usage {
                return ExitCode::SUCCESS;
            }
            eprintln!(
                "{}",
                json!({ "error": { "kind": "usage", "exit_code": 1, "message": e.kind().to_string() } })
            );
            return ExitCode::from(1);
        }
    };
    let result = match cli.command {
        Command::Gen(a) => gen(a),
        Command::Ingest(a) => ingest(a),
        Command::Scramble(a) => scramble(a),
        Command::Decompose(a) => decompose(a),
        Command::Audit(a) => run_audit(a),
        Command::Spectrum(a) => spectrum(a),
        Command::Report(a) => report(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => report_error(&e),
    }
}

fn gen(a: GenArgs) -> Result<u8> {
    let dims = triple(&a.dims, "--dims")?;
    if dims.contains(&0) {
        return Err(Error::Argument("--dims must be positive".into()));
    }
    let planted = match &a.core_dims {
        None => None,
        Some(c) => Some(PlantedSpec {
            dims,
            core_dims: triple(c, "--core-dims")?,
            spectrum: a
                .spectrum
                .clone()
                .ok_or_else(|| Error::Argument("--core-dims needs --spectrum".into()))?,
            noise: a.noise,
            seed: a.seed,
        }),
    };
    let provenance = match &planted {
        None => json!({ "command": "gen", "generator": "uniform", "dims": dims, "seed": a.seed }),
        Some(p) => json!({
            "command": "gen", "generator": "planted-tucker", "dims": dims,
            "core_dims": p.core_dims, "spectrum": p.spectrum, "noise": p.noise, "seed": p.seed
        }),
    };
    let mut resolved = provenance.clone();
    resolved["out"] = json!(a.out);
    print_resolved("gen", resolved);

    let x = match &planted {
        None => random_uniform(dims, a.seed),
        Some(p) => planted_tucker(p)?.tensor,
    };
    save_tensor(&x, &a.out)?;
    write_json(&sidecar_path(&a.out), &provenance)?;
    Ok(0)
}

fn ingest(a: IngestArgs) -> Result<u8> {
    let size = match &a.size {
        Some(s) => {
            let [h, w] = <[usize; 2]>::try_from(s.as_slice()).map_err(|_| {
                Error::Argument("--size needs two comma-separated values h,w".into())
            })?;
            Some((h, w))
        }
        None => None,
    };
    let provenance = json!({
        "command": "ingest", "dir": a.dir, "size": size.map(|(h, w)| [h, w]), "mode": "gray"
    });
    let mut resolved = provenance.clone();
    resolved["out"] = json!(a.out);
    print_resolved("ingest", resolved);
    let x = ingest_images(&a.dir, size)?;
    save_tensor(&x, &a.out)?;
    let mut provenance = provenance;
    provenance["dims"] = json!(x.dims());
    write_json(&sidecar_path(&a.out), &provenance)?;
    Ok(0)
}

fn scramble(a: ScrambleArgs) -> Result<u8> {
    let kind = if let Some(n) = a.block {
        ScrambleKind::Block { n }
    } else if let Some(alpha) = a.pixel {
        ScrambleKind::Pixel { alpha }
    } else {
        let r = a.occlude.as_deref().unwrap_or_default();
        let [x, y, width, height] = <[usize; 4]>::try_from(r)
            .map_err(|_| Error::Argument("--occlude needs x,y,w,h".into()))?;
        ScrambleKind::Occlude {
            rect: Rect {
                x,
                y,
                width,
                height,
            },
            fill: a.fill,
            random_position: a.random_position,
        }
    };
    let spec = ScrambleSpec {
        kind,
        seed: a.seed,
        per_image: !a.shared,
    };
    print_resolved(
        "scramble",
        json!({ "in": a.input, "out": a.out, "scramble": spec }),
    );
    let x = load_tensor(&a.input)?;
    let (y, notes) = spec.apply(&x)?;
    for n in &notes {
        eprintln!("{}", json!({ "note": n }));
    }
    save_tensor(&y, &a.out)?;
    let provenance = json!({
        "command": "scramble",
        "scramble": spec,
        "notes": notes,
        "source": { "path": a.input, "provenance": read_sidecar(&a.input)? },
    });
    write_json(&sidecar_path(&a.out), &provenance)?;
    Ok(0)
}

fn parse_label(s: &str) -> Result<StartLabel> {
    StartLabel::ALL
        .into_iter()
        .find(|l| l.as_str().eq_ignore_ascii_case(s))
        .ok_or_else(|| {
            Error::Argument(format!("unknown --init '{s}' (expected r1, r2a-c or r3a-c)"))
        })
}

fn method_from(
    algo: Algo,
    dims: Option<&[usize]>,
    preset: Option<Preset>,
    rank: Option<usize>,
) -> Result<Method> {
    match algo {
        Algo::Hosvd => {
            if rank.is_some() {
                return Err(Error::Argument("--rank applies to parafac; use --dims".into()));
            }
            let dims = match (dims, preset) {
                (Some(d), _) => triple(d, "--dims")?,
                (None, Some(Preset::M5)) => [5; 3],
                (None, Some(Preset::M10)) => [10; 3],
                (None, None) => return Err(Error::Argument("hosvd needs --dims or --preset".into())),
            };
            Ok(Method::Hosvd { dims })
        }
        Algo::Parafac => {
            if dims.is_some() || preset.is_some() {
                return Err(Error::Argument("parafac takes --rank, not --dims/--preset".into()));
            }
            let rank = rank.ok_or_else(|| Error::Argument("parafac needs --rank".into()))?;
            Ok(Method::Parafac { rank })
        }
    }
}

fn default_iters(method: &Method) -> usize {
    match method {
        Method::Hosvd { .. } => audit::DEFAULT_HOSVD_ITERATIONS,
        Method::Parafac { .. } => audit::DEFAULT_PARAFAC_ITERATIONS,
    }
}

fn decompose(a: DecomposeArgs) -> Result<u8> {
    let method = method_from(a.algo, a.dims.as_deref(), None, a.rank)?;
    let iters = a.iters.unwrap_or_else(|| default_iters(&method));
    if iters == 0 {
        return Err(Error::Argument("--iters must be positive".into()));
    }
    let label = parse_label(&a.init)?;
    let mut resolved = serde_json::to_value(method).expect("method serializes");
    resolved["iterations"] = json!(iters);
    resolved["init"] = json!(label);
    resolved["seed"] = json!(a.seed);
    resolved["in"] = json!(a.input);
    resolved["out"] = json!(a.out);
    print_resolved("decompose", resolved.clone());

    let x = load_tensor(&a.input)?;
    let bundle = match method {
        Method::Hosvd { dims } => make_init_bundle(&x, dims, a.seed)?,
        Method::Parafac { rank } => make_init_bundle_rank(&x, rank, a.seed)?,
    };
    let start = bundle
        .starts
        .iter()
        .find(|s| s.label == label)
        .expect("bundle holds every label");
    std::fs::create_dir_all(&a.out).map_err(|e| io_error(&a.out, e))?;
    let norm_sq = x.frobenius_norm_sq();

    let mut model_json = json!({ "config": resolved, "tensor_dims": x.dims(), "norm_sq": norm_sq });
    if !bundle.notes.is_empty() {
        model_json["notes"] = json!(bundle.notes);
    }
    let (u, v, w, j1) = match method {
        Method::Hosvd { dims } => {
            let (model, trace) = hosvd_run(&x, dims, &start.v0, &start.w0, iters)?;
            let resid = x.distance_sq(&model.reconstruct()?)?;
            save_tensor(&model.core, a.out.join("core.tns3"))?;
            model_json["objective"] = json!(trace.objective);
            model_json["j1_identity"] = json!(norm_sq - model.core.frobenius_norm_sq());
            (model.u, model.v, model.w, resid)
        }
        Method::Parafac { .. } => {
            let (model, trace) = parafac_run(&x, &start.v0, &start.w0, iters)?;
            let resid = x.distance_sq(&model.reconstruct()?)?;
            model_json["objective"] = json!(trace.objective);
            (model.u, model.v, model.w, resid)
        }
    };
    model_json["j1"] = json!(j1);
    model_json["j1_relative"] = json!(if norm_sq > 0.0 { j1 / norm_sq } else { 0.0 });
    write_matrix_csv(&a.out.join("u.csv"), &u)?;
    write_matrix_csv(&a.out.join("v.csv"), &v)?;
    write_matrix_csv(&a.out.join("w.csv"), &w)?;
    write_json(&a.out.join("model.json"), &model_json)?;
    println!("{}", json!({ "j1": j1, "j1_relative": model_json["j1_relative"] }));
    Ok(0)
}

fn run_audit(a: AuditArgs) -> Result<u8> {
    let method = method_from(a.algo, a.dims.as_deref(), a.preset, a.rank)?;
    let config = AuditConfig {
        method,
        tests: a.tests,
        iterations: a.iters.unwrap_or_else(|| default_iters(&method)),
        epsilon: a.eps,
        master_seed: a.seed,
    };
    config.validate()?;
    let jobs = a
        .jobs
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    if jobs == 0 {
        return Err(Error::Argument("--jobs must be positive".into()));
    }
    let predict_dims = match method {
        Method::Hosvd { dims } => Some(dims),
        Method::Parafac { rank } => Some([rank; 3]),
    };
    let mut resolved = serde_json::to_value(&config).expect("config serializes");
    resolved["jobs"] = json!(jobs);
    resolved["in"] = json!(a.input);
    resolved["out"] = json!(a.out);
    if a.predict {
        resolved["predict"] = json!({ "tau": a.tau, "centering": a.centering, "dims": predict_dims });
    }
    print_resolved("audit", resolved);

    let x = load_tensor(&a.input)?;
    let provenance = read_sidecar(&a.input)?;
    let audit = audit::run_audit_jobs(&x, &config, jobs)?;
    let mut file = ReportFile::from_audit(audit);
    if a.predict {
        let dims = predict_dims.expect("set above");
        file = file.with_spectrum(&spectrum_report(&x, dims, a.tau, a.centering)?);
    }
    if let Some(p) = provenance {
        file = file.with_provenance(p);
    }
    file.save(&a.out)?;
    let failed: Vec<_> = file
        .per_test
        .iter()
        .filter_map(|t| t.error.as_ref().map(|e| json!({ "test": t.index, "error": e })))
        .collect();
    println!(
        "{}",
        json!({
            "verdict": file.verdict,
            "threshold": file.threshold,
            "final_d": file.per_test.iter().map(|t| t.final_d).collect::<Vec<_>>(),
            "prediction": file.prediction.as_ref().map(|p| p.prediction),
        })
    );
    if file.verdict == Verdict::Indeterminate {
        return Err(Error::Numerical(format!(
            "audit written to {} but {} test(s) failed: {}",
            a.out.display(),
            failed.len(),
            Value::Array(failed)
        )));
    }
    Ok(0)
}

fn spectrum(a: SpectrumArgs) -> Result<u8> {
    let dims = triple(&a.dims, "--dims")?;
    print_resolved(
        "spectrum",
        json!({ "in": a.input, "dims": dims, "tau": a.tau, "centering": a.centering, "out": a.out }),
    );
    let x = load_tensor(&a.input)?;
    let report = spectrum_report(&x, dims, a.tau, a.centering)?;
    write_json(&a.out, &report)?;
    let csv = a.out.with_extension("csv");
    write_text(&csv, &spectra_csv(&report.spectra))?;
    println!(
        "{}",
        json!({ "prediction": report.prediction.prediction, "csv": csv })
    );
    Ok(0)
}

fn report(a: ReportArgs) -> Result<u8> {
    print_resolved(
        "report",
        json!({ "in": a.input, "spectrum": a.spectrum, "csv_dir": a.csv_dir, "out": a.out }),
    );
    let mut file = ReportFile::load(&a.input)?;
    if let Some(p) = &a.spectrum {
        let spec: SpectrumReport = read_json(p)?;
        if spec.tensor_dims != file.tensor.dims {
            return Err(Error::Data(format!(
                "spectrum was computed on a {:?} tensor but the audit used {:?}",
                spec.tensor_dims, file.tensor.dims
            )));
        }
        if let Method::Hosvd { dims } = file.config.method {
            if spec.dims != dims {
                return Err(Error::Data(format!(
                    "spectrum cutoff {:?} differs from audit dims {dims:?}",
                    spec.dims
                )));
            }
        }
        file = file.with_spectrum(&spec);
    }
    let mut written = Vec::new();
    if let Some(dir) = &a.csv_dir {
        written = file.write_csv_dir(dir)?;
    }
    if let Some(out) = &a.out {
        file.save(out)?;
    }
    println!(
        "{}",
        json!({
            "verdict": file.verdict,
            "audit_centering": file.centering,
            "spectrum_centering": file.spectra.as_ref().map(|s| s.centering),
            "prediction": file.prediction.as_ref().map(|p| p.prediction),
            "written": written,
        })
    );
    Ok(0)
}

fn io_error(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.display().to_string(),
        source,
    }
}
