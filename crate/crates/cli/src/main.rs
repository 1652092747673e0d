use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use hypertorsor_core::checks;
use hypertorsor_core::cochain::SheafCohomology;
use hypertorsor_core::finsite::FinSpace;
use hypertorsor_core::fixtures;
use hypertorsor_core::gerbe::{gerbe_setting, Bockstein, GerbeData};
use hypertorsor_core::rtc::{Rtc, RtcSetting};
use hypertorsor_core::sheaf::Sheaf;
use hypertorsor_core::{Error, Int};

#[derive(Parser)]
#[command(name = "hypertorsor", version, about = "Sheaf cohomology and rigidified torsor cocycles on finite spaces")]
struct Cli {
    #[arg(long, value_enum, default_value_t = Format::Json, global = true)]
    format: Format,
    /// Shorthand for `--format csv`.
    #[arg(long, global = true)]
    csv: bool,
    /// Levels kept in hypercoverings built by the command.
    #[arg(long, global = true)]
    depth: Option<usize>,
    #[arg(long, default_value_t = 1, global = true)]
    seed: u64,
    /// Print coboundary witnesses where the command finds them.
    #[arg(long, global = true)]
    witness: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// H^n(X, F) for a fixture space (or space file) and `Z` or `Z/m`.
    Cohomology { space: String, sheaf: String, n: usize },
    /// Classify torsors: H^1 with a representative torsor per generator.
    Torsors { space: String, sheaf: String },
    #[command(subcommand)]
    Rtc(RtcCommand),
    #[command(subcommand)]
    Gerbe(GerbeCommand),
    /// Connecting map H^n(X, Z/m) -> H^{n+1}(X, Z) on the generators.
    Bockstein { space: String, m: i64, n: usize },
    /// Run the acceptance suite.
    Selftest,
}

#[derive(Subcommand)]
enum RtcCommand {
    /// Check the cocycle condition.
    Validate { files: Vec<PathBuf> },
    /// Class in H^n(X, F).
    Class { files: Vec<PathBuf> },
    /// Decide whether two RTCs have the same class.
    Equiv { a: PathBuf, b: PathBuf },
    /// Write the neutral RTC, or generator `k`, on a fixture setting.
    New {
        space: String,
        sheaf: String,
        /// `const`, `cech`, `cech2` or `type1`.
        cover: String,
        n: usize,
        #[arg(long)]
        generator: Option<usize>,
    },
}

#[derive(Subcommand)]
enum GerbeCommand {
    /// Check associativity of the multiplication.
    Check { file: PathBuf },
    /// Class in H^2(X, F).
    Class { file: PathBuf },
    /// Write the trivial gerbe, or generator `k`, on the two-member cover.
    New {
        space: String,
        sheaf: String,
        #[arg(long)]
        generator: Option<usize>,
    },
}

/// A report plus, on failure, the violated invariant.
struct Outcome {
    report: Value,
    violated: Option<String>,
}

impl Outcome {
    fn ok(report: Value) -> Self {
        Outcome { report, violated: None }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let format = if cli.csv { Format::Csv } else { cli.format };
    match run(&cli) {
        Ok(out) => {
            print!("{}", render(&out.report, format));
            match out.violated {
                None => ExitCode::SUCCESS,
                Some(v) => {
                    eprintln!("validation failed: {v}");
                    ExitCode::from(1)
                }
            }
        }
        Err(e) => {
            let code = exit_code(&e);
            eprintln!("{e}");
            ExitCode::from(code)
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Invalid(_) | Error::Failed(_) => 1,
        _ => 2,
    }
}

fn run(cli: &Cli) -> Result<Outcome, Error> {
    match &cli.command {
        Command::Cohomology { space, sheaf, n } => cohomology(space, sheaf, *n),
        Command::Torsors { space, sheaf } => torsors(space, sheaf, cli.depth),
        Command::Rtc(c) => rtc(c, cli),
        Command::Gerbe(c) => gerbe(c),
        Command::Bockstein { space, m, n } => bockstein(space, *m, *n),
        Command::Selftest => selftest(cli.seed),
    }
}

fn load_space(name: &str) -> Result<Arc<FinSpace>, Error> {
    if Path::new(name).is_file() {
        let text = std::fs::read_to_string(name)?;
        return Ok(Arc::new(FinSpace::from_json(&text)?));
    }
    fixtures::space(name)
}

fn load_sheaf(space: &Arc<FinSpace>, spec: &str) -> Result<Arc<Sheaf>, Error> {
    if Path::new(spec).is_file() {
        let text = std::fs::read_to_string(spec)?;
        return Ok(Arc::new(Sheaf::from_json(space.clone(), &text)?));
    }
    fixtures::constant_sheaf(space, spec)
}

fn read(path: &Path) -> Result<String, Error> {
    std::fs::read_to_string(path).map_err(|e| Error::Malformed(format!("{}: {e}", path.display())))
}

#[derive(Serialize)]
struct GroupReport {
    #[serde(rename = "H")]
    h: String,
    rank: usize,
    torsion: Vec<Int>,
}

fn cohomology(space: &str, sheaf: &str, n: usize) -> Result<Outcome, Error> {
    let sp = load_space(space)?;
    let f = load_sheaf(&sp, sheaf)?;
    let h = SheafCohomology::new(f, n + 1)?;
    let g = h.group(n)?;
    let r = GroupReport { h: g.describe(), rank: g.free_rank(), torsion: g.torsion() };
    Ok(Outcome::ok(serde_json::to_value(r)?))
}

fn torsors(space: &str, sheaf: &str, depth: Option<usize>) -> Result<Outcome, Error> {
    let setting = RtcSetting::fixture_with_depth(space, sheaf, "const", 1, depth.unwrap_or(2).max(2))?;
    let group = setting.target_group()?;
    let mut generators = Vec::new();
    for (k, r) in Rtc::generators(&setting)?.iter().enumerate() {
        let t = r.torsor();
        generators.push(json!({
            "generator": k,
            "order": group.orders()[k],
            "torsor": serde_json::from_str::<Value>(&t.to_json())?,
            "class": t.h1_class()?,
        }));
    }
    Ok(Outcome::ok(json!({
        "H1": group.describe(),
        "rank": group.free_rank(),
        "torsion": group.torsion(),
        "generators": generators,
    })))
}

fn rtc(c: &RtcCommand, cli: &Cli) -> Result<Outcome, Error> {
    match c {
        RtcCommand::Validate { files } => {
            let mut rows = Vec::new();
            let mut violated = None;
            for p in files {
                let r = Rtc::from_json(&read(p)?)?;
                let valid = r.validate()?;
                if !valid && violated.is_none() {
                    violated = Some(format!("{}: q_alt(phi) != 0", p.display()));
                }
                rows.push(json!({"file": p.display().to_string(), "degree": r.degree(), "valid": valid}));
            }
            Ok(Outcome { report: Value::Array(rows), violated })
        }
        RtcCommand::Class { files } => {
            let mut rows = Vec::new();
            for p in files {
                let r = Rtc::from_json(&read(p)?)?;
                if !r.validate()? {
                    return Ok(Outcome {
                        report: json!({"file": p.display().to_string(), "valid": false}),
                        violated: Some(format!("{}: q_alt(phi) != 0", p.display())),
                    });
                }
                rows.push(json!({
                    "file": p.display().to_string(),
                    "degree": r.degree(),
                    "group": r.setting().target_group()?.describe(),
                    "class": r.comparison()?,
                }));
            }
            Ok(Outcome::ok(Value::Array(rows)))
        }
        RtcCommand::Equiv { a, b } => {
            let ra = Rtc::from_json(&read(a)?)?;
            let rb = Rtc::from_json(&read(b)?)?;
            for (p, r) in [(a, &ra), (b, &rb)] {
                if !r.validate()? {
                    return Ok(Outcome {
                        report: json!({"equivalent": Value::Null}),
                        violated: Some(format!("{}: q_alt(phi) != 0", p.display())),
                    });
                }
            }
            let equivalent = ra.equivalent(&rb)?;
            let mut report = json!({"equivalent": equivalent});
            if cli.witness {
                let w = if Arc::ptr_eq(ra.setting(), rb.setting()) {
                    ra.witness(&rb)?
                } else {
                    let rb = Rtc::from_value_in(ra.setting(), &serde_json::from_str(&read(b)?)?);
                    match rb {
                        Ok(rb) => ra.witness(&rb)?,
                        Err(_) => None,
                    }
                };
                report["witness"] = match w {
                    Some(w) => json!({
                        "low_torsor": w.datum.low_torsor.cocycle(),
                        "shift": w.datum.shift,
                        "iso": w.iso,
                    }),
                    None => Value::Null,
                };
            }
            Ok(Outcome::ok(report))
        }
        RtcCommand::New { space, sheaf, cover, n, generator } => {
            let s = match cli.depth {
                Some(d) => RtcSetting::fixture_with_depth(space, sheaf, cover, *n, d)?,
                None => RtcSetting::fixture(space, sheaf, cover, *n)?,
            };
            let r = match generator {
                None => Rtc::neutral(s),
                Some(k) => {
                    let gens = Rtc::generators(&s)?;
                    gens.get(*k).cloned().ok_or_else(|| Error::Malformed(format!("no generator {k}; H^{n} has {}", gens.len())))?
                }
            };
            Ok(Outcome::ok(serde_json::from_str(&r.to_json()?)?))
        }
    }
}

fn gerbe(c: &GerbeCommand) -> Result<Outcome, Error> {
    match c {
        GerbeCommand::Check { file } => {
            let g = GerbeData::from_json(&read(file)?)?;
            let a = g.associativity()?;
            let report = json!({"associative": a.associative, "residue": a.residue, "four_scalar": a.four_scalar});
            let violated = (!a.associative).then(|| "q_alt(mu) != 0".to_string());
            Ok(Outcome { report, violated })
        }
        GerbeCommand::Class { file } => {
            let g = GerbeData::from_json(&read(file)?)?;
            if !g.is_associative()? {
                return Ok(Outcome { report: json!({"associative": false}), violated: Some("q_alt(mu) != 0".into()) });
            }
            Ok(Outcome::ok(json!({"group": g.setting().target_group()?.describe(), "class": g.class()?})))
        }
        GerbeCommand::New { space, sheaf, generator } => {
            let sp = fixtures::space(space)?;
            let f = fixtures::constant_sheaf(&sp, sheaf)?;
            let s = gerbe_setting(f, fixtures::small_cover(space, &sp)?)?;
            let g = match generator {
                None => GerbeData::trivial(s)?,
                Some(k) => {
                    let gens = Rtc::generators(&s)?;
                    let r = gens.get(*k).ok_or_else(|| Error::Malformed(format!("no generator {k}; H^2 has {}", gens.len())))?;
                    GerbeData::from_rtc(r)?
                }
            };
            Ok(Outcome::ok(serde_json::from_str(&g.with_coefficients(sheaf).to_json()?)?))
        }
    }
}

fn bockstein(space: &str, m: i64, n: usize) -> Result<Outcome, Error> {
    if m < 2 {
        return Err(Error::Malformed(format!("modulus {m} must be at least 2")));
    }
    let sp = load_space(space)?;
    let b = Bockstein::new(&sp, m, n)?;
    let src = b.source_group()?;
    let k = src.orders().len();
    let mut images = Vec::new();
    for i in 0..k {
        let mut coords = vec![Int::ZERO; k];
        coords[i] = Int::ONE;
        images.push(b.apply(&coords)?);
    }
    Ok(Outcome::ok(json!({
        "source": src.describe(),
        "target": b.target_group()?.describe(),
        "images": images,
    })))
}

fn selftest(seed: u64) -> Result<Outcome, Error> {
    let mut rows = Vec::new();
    let mut failed = Vec::new();
    for c in checks::run_all(seed) {
        if !c.passed {
            failed.push(format!("criterion {} ({})", c.id, c.name));
        }
        rows.push(json!({"criterion": c.id, "name": c.name, "passed": c.passed, "detail": c.detail}));
    }
    let violated = (!failed.is_empty()).then(|| failed.join(", "));
    Ok(Outcome { report: Value::Array(rows), violated })
}

fn render(v: &Value, format: Format) -> String {
    match format {
        Format::Json => format!("{}\n", serde_json::to_string(v).expect("reports serialize")),
        Format::Csv => csv(v),
    }
}

fn cell(v: &Value) -> String {
    let s = match v {
        Value::String(s) => s.clone(),
        Value::Null => String::new(),
        other => other.to_string(),
    };
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s
    }
}

fn csv(v: &Value) -> String {
    let rows: Vec<&serde_json::Map<String, Value>> = match v {
        Value::Array(a) => a.iter().filter_map(Value::as_object).collect(),
        Value::Object(o) => vec![o],
        _ => return format!("{}\n", cell(v)),
    };
    let Some(first) = rows.first() else { return String::new() };
    let keys: Vec<&String> = first.keys().collect();
    let mut out = keys.iter().map(|k| k.as_str()).collect::<Vec<_>>().join(",");
    out.push('\n');
    for r in &rows {
        let line: Vec<String> = keys.iter().map(|k| r.get(*k).map(cell).unwrap_or_default()).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}
