//! Batch command-line frontend. Every invocation loads a network, runs one
//! command, and optionally writes the updated network back out.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::document;
use crate::dot::{export_dot, DotOptions};
use crate::dsl::parse_network;
use crate::error::Error;
use crate::evaluator::eval_method;
use crate::exploiters::ExploiterKind;
use crate::fuzzy::{fmt_num, Degree, TNorm, DEFAULT_TOLERANCE};
use crate::network::{Direction, Network, RelationKind};

pub const EXIT_OK: i32 = 0;
pub const EXIT_DOMAIN: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "foodn", version, about = "Fuzzy object-oriented dynamic networks")]
struct Cli {
    /// Network to read: a .foodn definition or a JSON document.
    #[arg(long = "in", global = true, value_name = "FILE")]
    input: Option<PathBuf>,

    /// Where mutating commands write the updated network document.
    #[arg(long, global = true, value_name = "FILE")]
    out: Option<PathBuf>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,

    /// Comparison tolerance for crisp values and fuzzy sets.
    #[arg(long, global = true, env = "FOODN_TOLERANCE", default_value_t = DEFAULT_TOLERANCE)]
    tolerance: f64,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Doc,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum TNormArg {
    Min,
    Product,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum DirectionArg {
    Out,
    In,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse a network and summarise it.
    Load,
    /// Validate a network and report asserted hierarchy edges that the
    /// specifications do not support.
    Check {
        /// Also list relations inferred at this membership threshold.
        #[arg(long)]
        threshold: Option<f64>,
    },
    /// Report whether the network is fuzzy, with witnesses.
    Fuzzy,
    /// Graded membership of an object in a class.
    Membership {
        object: String,
        class: String,
        #[arg(long, value_enum, default_value_t = TNormArg::Min)]
        tnorm: TNormArg,
    },
    /// Entities related to NAME.
    Query {
        name: String,
        /// Relation kind to follow; repeat for several. Default: all kinds.
        #[arg(long = "kind")]
        kinds: Vec<String>,
        #[arg(long, value_enum, default_value_t = DirectionArg::Out)]
        direction: DirectionArg,
        #[arg(long)]
        transitive: bool,
    },
    /// Apply an exploiter (union, intersect, diff, symdiff, clone, or a
    /// registered name such as E2).
    ApplyExploiter {
        exploiter: String,
        #[arg(required = true)]
        args: Vec<String>,
        /// Name for the result (ignored by clone).
        #[arg(long)]
        name: Option<String>,
    },
    /// Apply a registered modifier to an entity.
    ApplyModifier { modifier: String, entity: String },
    /// Evaluate a method of an entity.
    Eval { entity: String, method: String },
    /// Graphviz rendering of the network.
    ExportDot {
        /// Draw exploiter applications over these entities.
        #[arg(long)]
        overlay: Vec<String>,
    },
    /// Write the network as a canonical document to --out.
    Save,
}

/// A failed invocation: exit code plus the lines for the error stream.
struct Failure {
    code: i32,
    lines: Vec<String>,
}

impl Failure {
    fn usage(msg: impl Into<String>) -> Self {
        Failure {
            code: EXIT_USAGE,
            lines: vec![format!("error: {}", msg.into())],
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = if e.is_domain_error() { EXIT_DOMAIN } else { EXIT_USAGE };
        Failure {
            code,
            lines: vec![format!("error: {e}")],
        }
    }
}

type Outcome = Result<(), Failure>;

struct Ctx<'a> {
    cli: &'a Cli,
    out: &'a mut dyn Write,
    err: &'a mut dyn Write,
}

impl Ctx<'_> {
    fn print(&mut self, text: &str) -> Outcome {
        self.out
            .write_all(text.as_bytes())
            .map_err(|e| Failure::usage(format!("cannot write output: {e}")))
    }

    fn line(&mut self, text: impl AsRef<str>) -> Outcome {
        self.print(&format!("{}\n", text.as_ref()))
    }

    fn doc(&mut self, value: serde_json::Value) -> Outcome {
        let text = serde_json::to_string_pretty(&value).expect("json value serializes");
        self.line(text)
    }

    fn warn(&mut self, text: &str) {
        let _ = writeln!(self.err, "warning: {text}");
    }

    fn tol(&self) -> f64 {
        self.cli.tolerance
    }

    fn load(&mut self) -> Result<Network, Failure> {
        let path = self
            .cli
            .input
            .clone()
            .ok_or_else(|| Failure::usage("missing --in <FILE>"))?;
        let text = std::fs::read_to_string(&path)
            .map_err(|e| Failure::usage(format!("cannot read {}: {e}", path.display())))?;
        if text.trim_start().starts_with('{') {
            return document::load(&text).map_err(|e| Failure::usage(format!("{}: {e}", path.display())));
        }
        let shown = path.display().to_string();
        match parse_network(&text) {
            Ok((net, warnings)) => {
                for w in warnings {
                    let _ = writeln!(self.err, "{shown}:{w}");
                }
                Ok(net)
            }
            Err(diags) => Err(Failure {
                code: EXIT_USAGE,
                lines: diags.iter().map(|d| format!("{shown}:{d}")).collect(),
            }),
        }
    }

    fn store(&mut self, net: &Network) -> Outcome {
        if let Some(path) = &self.cli.out {
            write_file(path, &document::serialize(net))?;
        }
        Ok(())
    }
}

fn write_file(path: &Path, text: &str) -> Outcome {
    std::fs::write(path, text).map_err(|e| Failure::usage(format!("cannot write {}: {e}", path.display())))
}

/// Runs one invocation. `args` includes the program name.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = err.write_all(text.as_bytes());
                EXIT_USAGE
            } else {
                let _ = out.write_all(text.as_bytes());
                EXIT_OK
            };
        }
    };
    let mut ctx = Ctx { cli: &cli, out, err };
    match dispatch(&mut ctx) {
        Ok(()) => EXIT_OK,
        Err(f) => {
            for l in f.lines {
                let _ = writeln!(ctx.err, "{l}");
            }
            f.code
        }
    }
}

fn dispatch(ctx: &mut Ctx<'_>) -> Outcome {
    let tol = ctx.tol();
    if !(tol.is_finite() && tol >= 0.0) {
        return Err(Failure::usage(format!("tolerance must be a non-negative number, got {tol}")));
    }
    let doc = ctx.cli.format == Format::Doc;
    match &ctx.cli.command {
        Command::Load => {
            let net = ctx.load()?;
            if doc {
                return ctx.print(&document::serialize(&net));
            }
            let fuzzy = net.is_fuzzy_network().0;
            ctx.line(format!("objects: {}", net.object_count()))?;
            ctx.line(format!("classes: {}", net.class_count()))?;
            ctx.line(format!("relations: {}", net.relations().len()))?;
            ctx.line(format!("exploiters: {}", net.exploiters().len()))?;
            ctx.line(format!("modifiers: {}", net.modifiers().count()))?;
            ctx.line(format!("provenance: {}", net.provenance().len()))?;
            ctx.line(format!("fuzzy: {fuzzy}"))
        }
        Command::Check { threshold } => {
            let threshold = threshold
                .map(|t| Degree::new(t).map_err(|e| Failure::usage(format!("--threshold: {e}"))))
                .transpose()?;
            let net = ctx.load()?;
            let inferred = net.infer_relations(threshold.unwrap_or(Degree::ONE), tol)?;
            let unsupported: Vec<String> = net
                .relations()
                .iter()
                .filter(|r| matches!(r.kind, RelationKind::AKindOf | RelationKind::IsA))
                .filter(|r| !inferred.iter().any(|i| i.source == r.source && i.target == r.target))
                .map(|r| format!("{} {} {}", r.source, r.kind, r.target))
                .collect();
            let proposed: Vec<String> = match threshold {
                Some(_) => inferred.iter().map(|r| r.to_string()).collect(),
                None => vec![],
            };
            if doc {
                return ctx.doc(json!({ "valid": true, "unsupported": unsupported, "proposed": proposed }));
            }
            ctx.line("valid")?;
            for u in &unsupported {
                ctx.line(format!("unsupported: {u}"))?;
            }
            for p in &proposed {
                ctx.line(format!("proposed: {p}"))?;
            }
            Ok(())
        }
        Command::Fuzzy => {
            let net = ctx.load()?;
            let (fuzzy, witnesses) = net.is_fuzzy_network();
            if doc {
                return ctx.doc(json!({ "fuzzy": fuzzy, "witnesses": witnesses }));
            }
            ctx.line(format!("fuzzy: {fuzzy}"))?;
            for w in witnesses {
                ctx.line(format!("  {w}"))?;
            }
            Ok(())
        }
        Command::Membership { object, class, tnorm } => {
            let net = ctx.load()?;
            let t = match tnorm {
                TNormArg::Min => TNorm::Min,
                TNormArg::Product => TNorm::Product,
            };
            let d = net.membership(object, class, t, tol)?;
            if doc {
                return ctx.doc(json!({ "object": object, "class": class, "degree": d.value() }));
            }
            ctx.line(fmt_num(d.value()))
        }
        Command::Query { name, kinds, direction, transitive } => {
            let kinds: Vec<RelationKind> = kinds
                .iter()
                .map(|k| k.parse().map_err(Failure::usage))
                .collect::<Result<_, _>>()?;
            let dir = match direction {
                DirectionArg::Out => Direction::Out,
                DirectionArg::In => Direction::In,
            };
            let net = ctx.load()?;
            let names = net.query_related(name, &kinds, dir, *transitive)?;
            if doc {
                return ctx.doc(json!(names));
            }
            for n in names {
                ctx.line(n)?;
            }
            Ok(())
        }
        Command::ApplyExploiter { exploiter, args, name } => {
            let mut net = ctx.load()?;
            let (kind, index) = match net.exploiters().iter().find(|e| &e.name == exploiter) {
                Some(e) => (e.kind, e.index),
                None => {
                    let kind: ExploiterKind = exploiter.parse().map_err(Failure::usage)?;
                    let index = net
                        .exploiters()
                        .iter()
                        .find(|e| e.kind == kind)
                        .map(|e| e.index)
                        .unwrap_or(1);
                    (kind, index)
                }
            };
            let refs: Vec<&str> = args.iter().map(String::as_str).collect();
            let result = net.apply_exploiter(kind, &refs, name.as_deref(), index, tol)?;
            ctx.store(&net)?;
            if doc {
                return ctx.doc(json!({ "exploiter": kind.keyword(), "args": args, "result": result }));
            }
            ctx.line(result)
        }
        Command::ApplyModifier { modifier, entity } => {
            let mut net = ctx.load()?;
            let applied = net.apply_modifier(modifier, entity, tol)?;
            ctx.store(&net)?;
            for w in &applied.warnings {
                ctx.warn(w);
            }
            if doc {
                return ctx.doc(json!({ "modifier": modifier, "source": entity, "result": applied.name, "warnings": applied.warnings }));
            }
            ctx.line(&applied.name)
        }
        Command::Eval { entity, method } => {
            let net = ctx.load()?;
            let value = match net.object(entity) {
                Some(o) => eval_method(o, method)?,
                None => match net.class_spec(entity) {
                    Some(c) => eval_method(c, method)?,
                    None => return Err(Error::UnknownEntity(entity.clone()).into()),
                },
            };
            if doc {
                return ctx.doc(serde_json::to_value(&value).expect("value serializes"));
            }
            ctx.line(value.to_string())
        }
        Command::ExportDot { overlay } => {
            let net = ctx.load()?;
            if let Some(missing) = overlay.iter().find(|n| !net.is_live(n)) {
                return Err(Error::UnknownEntity(missing.clone()).into());
            }
            let text = export_dot(&net, &DotOptions { overlay: overlay.clone() });
            match &ctx.cli.out {
                Some(path) => write_file(path, &text),
                None => ctx.print(&text),
            }
        }
        Command::Save => {
            let net = ctx.load()?;
            if ctx.cli.out.is_none() {
                return Err(Failure::usage("save needs --out <FILE>"));
            }
            ctx.store(&net)
        }
    }
}
