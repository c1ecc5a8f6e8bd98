use std::io::{BufRead, Write};
use std::net::{IpAddr, SocketAddr};
use std::path::PathBuf;
use std::process::ExitCode;

use add_cli::api::{router, AppState, DEFAULT_PORT};
use add_cli::{audit_workspace, gateway_for, open_session, open_workspace};
use add_core::engine::{run_baseline, GateDecision, GateKind, Phase, Session, StepOutcome};
use add_core::gateway::Gateway;
use add_core::prompt::BaselineMode;
use add_core::store::{ArtifactEdit, ArtifactPath, DesignMode, Workspace};
use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Parser)]
#[command(name = "add", version, about = "Gated Attribute-Driven Design sessions with a language model")]
struct Cli {
    /// Workspace directory.
    #[arg(short = 'C', long, global = true, default_value = ".")]
    workspace: PathBuf,
    /// Print machine-readable JSON.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Create a workspace with prompts, persona, config and a drivers template.
    Init {
        dir: PathBuf,
        /// Domain-driven design domain model (default).
        #[arg(long, conflicts_with = "plain")]
        ddd: bool,
        /// Plain domain model.
        #[arg(long)]
        plain: bool,
    },
    /// Interactive gated loop in the terminal.
    Run {
        /// Answer from a recorded transcript instead of the live model.
        #[arg(long)]
        replay: Option<PathBuf>,
    },
    /// Run exactly one engine action and stop at the gate.
    Step {
        #[arg(long)]
        replay: Option<PathBuf>,
    },
    /// Record a gate decision for the step waiting for review.
    Gate {
        #[arg(value_enum)]
        decision: GateArg,
        #[arg(long)]
        comment: Option<String>,
        /// Replacement artifact for edit-then-approve: `<artifact>=<local file>`.
        #[arg(long = "edit", value_name = "ARTIFACT=FILE")]
        edits: Vec<String>,
    },
    /// Audit the committed workspace. Exit 0 clean, 1 errors, 2 load failure.
    Audit,
    /// Drive the whole session from a transcript, approving every gate.
    Replay { transcript: PathBuf },
    /// Produce an architecture without the design process.
    Baseline {
        #[arg(long, value_enum)]
        mode: ModeArg,
        #[arg(long)]
        replay: Option<PathBuf>,
    },
    /// Serve the HTTP API for a review console.
    Serve {
        #[arg(long, default_value_t = DEFAULT_PORT)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        bind: IpAddr,
        #[arg(long)]
        replay: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum GateArg {
    Approve,
    Reject,
    Edit,
    Finish,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    ZeroShot,
    EmptyTemplate,
    TemplateInstructions,
}

impl From<ModeArg> for BaselineMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::ZeroShot => BaselineMode::ZeroShot,
            ModeArg::EmptyTemplate => BaselineMode::EmptyTemplate,
            ModeArg::TemplateInstructions => BaselineMode::TemplateInstructions,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            if cli.json {
                let code = e
                    .downcast_ref::<add_core::engine::EngineError>()
                    .map_or("ERROR", |e| e.code());
                println!("{}", serde_json::json!({ "code": code, "message": format!("{e:#}") }));
            } else {
                eprintln!("error: {e:#}");
            }
            ExitCode::from(if matches!(cli.command, Command::Audit) { 2 } else { 1 })
        }
    }
}

fn emit<T: Serialize>(json: bool, value: &T, text: impl FnOnce() -> String) {
    if json {
        println!("{}", serde_json::to_string_pretty(value).expect("output serializes"));
    } else {
        print!("{}", text());
    }
}

fn dispatch(cli: &Cli) -> Result<u8> {
    let root = cli.workspace.as_path();
    match &cli.command {
        Command::Init { dir, plain, .. } => {
            let mode = if *plain { DesignMode::Plain } else { DesignMode::Ddd };
            let ws = Workspace::scaffold(dir, mode)?;
            emit(cli.json, &serde_json::json!({ "workspace": ws.root() }), || {
                format!(
                    "initialized {}\nfill in ArchitecturalDrivers.md, then run `add step` or `add run`\n",
                    ws.root().display()
                )
            });
            Ok(0)
        }
        Command::Step { replay } => {
            let mut session = open_session(root, replay.is_none())?;
            let mut gw = gateway_for(session.workspace(), replay.as_deref())?;
            let outcome = session.advance(&mut gw)?;
            emit(cli.json, &outcome, || outcome_text(&session, &outcome));
            Ok(0)
        }
        Command::Gate {
            decision,
            comment,
            edits,
        } => {
            let mut session = open_session(root, false)?;
            let kind = match decision {
                GateArg::Approve => GateKind::Approve,
                GateArg::Reject => GateKind::RejectWithComment,
                GateArg::Edit => GateKind::EditArtifactsThenApprove,
                GateArg::Finish => GateKind::Finish,
            };
            let mut d = GateDecision::new(kind);
            d.comment = comment.clone();
            d.edits = edits.iter().map(|e| read_edit(e)).collect::<Result<_>>()?;
            session.record_gate(d)?;
            let summary = session.summary();
            emit(cli.json, &summary, || format!("phase: {}\n", summary.phase));
            Ok(0)
        }
        Command::Audit => {
            let ws = Workspace::open(root)?;
            let out = audit_workspace(&ws).map_err(|e| anyhow::anyhow!("{e}"))?;
            emit(cli.json, &out, || {
                let mut text = String::new();
                for issue in &out.load_issues {
                    text.push_str(&format!("load    {issue}\n"));
                }
                text.push_str(&out.report.to_text());
                text
            });
            Ok(out.exit_code() as u8)
        }
        Command::Replay { transcript } => {
            let mut session = open_session(root, false)?;
            let mut gw = gateway_for(session.workspace(), Some(transcript))?;
            let steps = drive_to_end(&mut session, &mut gw)?;
            let summary = session.summary();
            emit(cli.json, &summary, || {
                format!("replayed {steps} responses; phase {}\n", summary.phase)
            });
            Ok(0)
        }
        Command::Baseline { mode, replay } => {
            let ws = open_workspace(root, replay.is_none())?;
            let mut gw = gateway_for(&ws, replay.as_deref())?;
            let run = run_baseline(&ws, (*mode).into(), &mut gw)?;
            emit(cli.json, &run, || {
                format!("prompt:\n{}\n\nwrote {} (snapshot {})\n", run.prompt, run.output, run.snapshot.0)
            });
            Ok(0)
        }
        Command::Run { replay } => {
            let mut session = open_session(root, replay.is_none())?;
            let mut gw = gateway_for(session.workspace(), replay.as_deref())?;
            interactive(&mut session, &mut gw)?;
            Ok(0)
        }
        Command::Serve { port, bind, replay } => {
            let session = open_session(root, replay.is_none())?;
            let gw = gateway_for(session.workspace(), replay.as_deref())?;
            serve(session, gw, SocketAddr::new(*bind, *port))?;
            Ok(0)
        }
    }
}

fn read_edit(spec: &str) -> Result<ArtifactEdit> {
    let Some((artifact, file)) = spec.split_once('=') else {
        bail!("--edit takes ARTIFACT=FILE, got {spec:?}");
    };
    let path = ArtifactPath::parse(artifact)?;
    let content = std::fs::read_to_string(file).with_context(|| format!("reading {file}"))?;
    Ok(ArtifactEdit { path, content })
}

/// Advances and approves until the session finishes; returns the number
/// of responses applied.
fn drive_to_end(session: &mut Session, gw: &mut Gateway) -> Result<usize> {
    let mut applied = 0;
    while session.phase() != Phase::Finished {
        if session.is_awaiting_gate() {
            session.record_gate(GateDecision::approve())?;
        } else {
            session.advance(gw)?;
            applied += 1;
        }
    }
    Ok(applied)
}

fn outcome_text(session: &Session, o: &StepOutcome) -> String {
    let mut out = format!("{}\n", o.phase);
    if !o.commentary.is_empty() {
        out.push_str(&format!("\n{}\n\n", o.commentary));
    }
    for e in &o.artifact_edits {
        out.push_str(&format!("  staged {}\n", e.path));
    }
    for p in &o.problems {
        out.push_str(&format!("  problem {}: {}\n", p.code, p.message));
    }
    if o.needs_repair {
        out.push_str("the engine will ask the model to repair this output\n");
    } else if session.summary().proposes_finish {
        out.push_str("last planned step: approve or finish to end, or edit the plan to continue\n");
    } else {
        out.push_str("waiting for a gate: add gate approve|reject|edit|finish\n");
    }
    out
}

fn interactive(session: &mut Session, gw: &mut Gateway) -> Result<()> {
    let stdin = std::io::stdin();
    let mut lines = stdin.lock().lines();
    while session.phase() != Phase::Finished {
        if !session.is_awaiting_gate() {
            let outcome = session.advance(gw)?;
            print!("{}", outcome_text(session, &outcome));
            continue;
        }
        print!("[a]pprove, [r]eject <comment>, [f]inish, [q]uit > ");
        std::io::stdout().flush()?;
        let Some(line) = lines.next().transpose()? else {
            return Ok(());
        };
        let line = line.trim();
        let (cmd, rest) = line.split_once(' ').unwrap_or((line, ""));
        let decision = match cmd {
            "a" | "approve" => GateDecision::approve(),
            "f" | "finish" => GateDecision::finish(),
            "r" | "reject" => GateDecision::reject(rest.trim()),
            "q" | "quit" => return Ok(()),
            _ => {
                println!("unknown command {cmd:?}");
                continue;
            }
        };
        if let Err(e) = session.record_gate(decision) {
            println!("{e}");
        }
    }
    println!("session finished");
    Ok(())
}

fn serve(session: Session, gw: Gateway, addr: SocketAddr) -> Result<()> {
    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(async move {
        let app = router(AppState::new(session, gw));
        let listener = tokio::net::TcpListener::bind(addr).await?;
        eprintln!("listening on http://{}", listener.local_addr()?);
        axum::serve(listener, app)
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await?;
        Ok(())
    })
}
