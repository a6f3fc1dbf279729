use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use asai_core::harness::{self, ReportFormat, SuiteSpec, SUITES};
use asai_core::Error;
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "asai-verify", version, about = "Run exact and numeric identity suites over real quadratic fields")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one suite and write its reports
    Verify(VerifyArgs),
    /// Convert a saved JSON report to csv or json
    Report {
        path: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the suite names
    ListSuites,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum Format {
    Json,
    Csv,
}

impl From<Format> for ReportFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Json => ReportFormat::Json,
            Format::Csv => ReportFormat::Csv,
        }
    }
}

#[derive(Args, Debug)]
struct VerifyArgs {
    /// suite name; may also come from --suite or the config file
    suite: Option<String>,
    #[arg(long = "suite", conflicts_with = "suite")]
    suite_flag: Option<String>,
    /// JSON config document; flags override its fields
    #[arg(long)]
    config: Option<PathBuf>,
    /// field discriminant(s), comma separated
    #[arg(long = "D", value_delimiter = ',')]
    d: Vec<i64>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_norm: Option<i64>,
    #[arg(long)]
    max_n: Option<i64>,
    #[arg(long)]
    depth: Option<i64>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    #[arg(long)]
    parallel: Option<usize>,
}

impl VerifyArgs {
    fn spec(&self) -> Result<SuiteSpec, Error> {
        let mut spec = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| Error::ConfigInvalid(format!("{}: {e}", path.display())))?;
                SuiteSpec::from_json(&text)?
            }
            None => SuiteSpec::default(),
        };
        if let Some(s) = self.suite.as_ref().or(self.suite_flag.as_ref()) {
            spec.suite_name = s.clone();
        }
        if spec.suite_name.is_empty() {
            return Err(Error::ConfigInvalid("no suite given".into()));
        }
        if !self.d.is_empty() {
            spec.field_d = self.d.clone();
        }
        spec.tolerance = self.tol.or(spec.tolerance);
        let r = &mut spec.ranges;
        r.max_norm = self.max_norm.or(r.max_norm);
        r.max_n = self.max_n.or(r.max_n);
        r.depth = self.depth.or(r.depth);
        r.samples = self.samples.or(r.samples);
        if let Some(seed) = self.seed {
            spec.seed = seed;
        }
        if self.out.is_some() {
            spec.output = self.out.clone();
        }
        if let Some(f) = self.format {
            spec.format = f.into();
        }
        spec.parallel = self.parallel.or(spec.parallel);
        spec.validate()?;
        Ok(spec)
    }
}

fn write_out(text: &str, out: Option<&PathBuf>) -> Result<(), Error> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| Error::IoFailure(format!("{}: {e}", p.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes()).and_then(|_| stdout.write_all(b"\n")).map_err(|e| Error::IoFailure(e.to_string()))
        }
    }
}

fn verify(args: &VerifyArgs) -> Result<bool, Error> {
    let spec = args.spec()?;
    let reports = harness::run_suite(&spec)?;
    write_out(&harness::render(&reports, spec.format)?, spec.output.as_ref())?;
    for (suite, (pass, total)) in harness::summary(&reports) {
        eprintln!("{suite}: {pass}/{total} pass");
    }
    Ok(harness::all_pass(&reports))
}

fn report(path: &PathBuf, format: Format, out: Option<&PathBuf>) -> Result<bool, Error> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::IoFailure(format!("{}: {e}", path.display())))?;
    let reports = harness::from_json(&text)?;
    write_out(&harness::render(&reports, format.into())?, out)?;
    Ok(harness::all_pass(&reports))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::ListSuites => {
            for s in SUITES {
                println!("{s}");
            }
            Ok(true)
        }
        Command::Verify(args) => verify(args),
        Command::Report { path, format, out } => report(path, *format, out.as_ref()),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e @ (Error::UnknownSuite(_) | Error::ConfigInvalid(_))) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
