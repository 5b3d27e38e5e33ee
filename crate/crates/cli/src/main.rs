//! Command-line front end: parse, check, query, abduce, oracle, explain.
//!
//! Exit codes: 0 = pass (consistent / property holds / answers found),
//! 1 = finding (inconsistency, violation, no answers, discrepancies),
//! 2 = tool or input error. CI pipelines rely on the distinction between
//! "found a requirements bug" and "tool broke".

mod output;
mod spec_args;

use clap::{Args, Parser, Subcommand};
use ecrv_core::abduce::{abduce_events, abduce_parameters, AbduceOpts};
use ecrv_core::diag::has_errors;
use ecrv_core::engine::{trigger_closure, EngineOpts};
use ecrv_core::model::{
    parse_domain, parse_goal, parse_narrative, stratification_check, validate_model, DomainModel,
    Literal, Narrative,
};
use ecrv_core::oracle::{cross_check, simulate, trace_csv};
use ecrv_core::rational::parse_rat;
use ecrv_core::validate::{check_property, check_scenario, PropertySpec, Scenario, Verdict};
use output::{paint, Color};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

#[derive(Parser)]
#[command(
    name = "ecrv",
    about = "Event Calculus requirements validation over exact rational time",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonFlags {
    /// Emit machine-readable JSON instead of text
    #[arg(long, global = true)]
    json: bool,
    /// Trigger-closure iteration bound (zeno guard)
    #[arg(long, default_value_t = 1000)]
    zeno_bound: usize,
    /// Goal-expansion depth bound
    #[arg(long, default_value_t = 10000)]
    depth: usize,
    /// Disable tabling of ground subgoals
    #[arg(long)]
    no_cache: bool,
    /// Print cache and goal-expansion counters
    #[arg(long)]
    stats: bool,
}

impl CommonFlags {
    fn engine_opts(&self) -> EngineOpts {
        EngineOpts {
            zeno_bound: self.zeno_bound,
            depth_bound: self.depth,
            cache_enabled: !self.no_cache,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Check scenario consistency and safety properties
    Check {
        /// Model file (.ec)
        model: PathBuf,
        /// Scenario files (.scn)
        scenarios: Vec<PathBuf>,
        /// Narrative files checked against --property specs
        #[arg(long)]
        narrative: Vec<PathBuf>,
        /// Property, e.g. "overdose(total_drug_delivered, 9, 2)"
        #[arg(long)]
        property: Vec<String>,
        #[command(flatten)]
        flags: CommonFlags,
    },
    /// Evaluate a goal over a narrative
    Query {
        model: PathBuf,
        narrative: PathBuf,
        /// Goal in the clause syntax, e.g. "happens(patient_bolus_completed, T)"
        goal: String,
        /// Print the proof tree of each answer
        #[arg(long)]
        proof: bool,
        #[command(flatten)]
        flags: CommonFlags,
    },
    /// Hypothesize events or solve for property parameters
    Abduce {
        model: PathBuf,
        narrative: PathBuf,
        /// Goal to make provable
        #[arg(long)]
        goal: String,
        /// Abducible event: "<event> in [<lo>,<hi>] max <n>"
        #[arg(long)]
        abducible: Vec<String>,
        /// Parameter variable of the goal
        #[arg(long)]
        param: Vec<String>,
        /// Fix a parameter: "W=2"
        #[arg(long)]
        fix: Vec<String>,
        #[command(flatten)]
        flags: CommonFlags,
    },
    /// Cross-check the engine against the discrete-time simulator
    Oracle {
        model: PathBuf,
        narrative: PathBuf,
        /// Sampling step (rational, e.g. 1/4)
        #[arg(long)]
        dt: String,
        /// Write the sampled trace as CSV
        #[arg(long)]
        trace_out: Option<PathBuf>,
        #[command(flatten)]
        flags: CommonFlags,
    },
    /// Re-render a saved JSON proof as indented text
    Explain {
        /// JSON file produced by `query --proof --json` or `check --json`
        proof: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(message) => {
            eprintln!("{} {message}", paint("error:", Color::Red));
            ExitCode::from(2)
        }
    }
}

fn load_model(path: &Path) -> Result<Arc<DomainModel>, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    let model = parse_domain(&text).map_err(|e| format!("{}: {e}", path.display()))?;
    let diags = validate_model(&model);
    if has_errors(&diags) {
        let rendered: Vec<String> =
            diags.iter().map(|d| format!("{}: {d}", path.display())).collect();
        return Err(rendered.join("\n"));
    }
    stratification_check(&model).map_err(|e| format!("{}: {e}", path.display()))?;
    Ok(Arc::new(model))
}

fn load_narrative(path: &Path) -> Result<Narrative, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    parse_narrative(&text).map_err(|e| format!("{}: {e}", path.display()))
}

fn parse_goal_checked(model: &DomainModel, text: &str) -> Result<Vec<Literal>, String> {
    let goal = parse_goal(text).map_err(|e| e.to_string())?;
    for lit in &goal {
        match lit {
            Literal::Holds { fluent, .. } => {
                if model.fluent_kind(&fluent.name).is_none() {
                    return Err(format!("undeclared fluent {}", fluent.name));
                }
            }
            Literal::Happens { event, .. } => {
                if !model.events.contains_key(&event.name) {
                    return Err(format!("undeclared event {}", event.name));
                }
            }
            _ => {}
        }
    }
    Ok(goal)
}

fn run(cli: Cli) -> Result<ExitCode, String> {
    match cli.command {
        Command::Check { model, scenarios, narrative, property, flags } => {
            cmd_check(&model, &scenarios, &narrative, &property, &flags)
        }
        Command::Query { model, narrative, goal, proof, flags } => {
            cmd_query(&model, &narrative, &goal, proof, &flags)
        }
        Command::Abduce { model, narrative, goal, abducible, param, fix, flags } => {
            cmd_abduce(&model, &narrative, &goal, &abducible, &param, &fix, &flags)
        }
        Command::Oracle { model, narrative, dt, trace_out, flags } => {
            cmd_oracle(&model, &narrative, &dt, trace_out.as_deref(), &flags)
        }
        Command::Explain { proof } => cmd_explain(&proof),
    }
}

fn cmd_check(
    model_path: &Path,
    scenario_paths: &[PathBuf],
    narrative_paths: &[PathBuf],
    properties: &[String],
    flags: &CommonFlags,
) -> Result<ExitCode, String> {
    if scenario_paths.is_empty() && (narrative_paths.is_empty() || properties.is_empty()) {
        return Err("nothing to check: pass scenario files or --narrative with --property".into());
    }
    let model = load_model(model_path)?;
    let opts = flags.engine_opts();
    let mut reports = Vec::new();

    for path in scenario_paths {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        let name = path.file_stem().map(|s| s.to_string_lossy().to_string()).unwrap_or_default();
        let scenario =
            Scenario::from_file(name, &text).map_err(|e| format!("{}: {e}", path.display()))?;
        reports.push(check_scenario(&model, &scenario, opts));
    }
    for npath in narrative_paths {
        let narrative = load_narrative(npath)?;
        for ptext in properties {
            let property = PropertySpec::parse(ptext)?;
            let mut report = check_property(&model, &narrative, &property, opts);
            report.subject = format!(
                "{}: {}",
                npath.file_stem().map(|s| s.to_string_lossy().to_string()).unwrap_or_default(),
                report.subject
            );
            reports.push(report);
        }
    }

    let mut findings = false;
    let mut errors = false;
    for r in &reports {
        match r.verdict {
            Verdict::Inconsistent | Verdict::Violation => findings = true,
            Verdict::Error => errors = true,
            Verdict::Consistent | Verdict::Pass => {}
        }
    }

    if flags.json {
        let mut out: Vec<serde_json::Value> = Vec::new();
        for r in &reports {
            let mut v = serde_json::to_value(r).map_err(|e| e.to_string())?;
            if !flags.stats {
                if let Some(obj) = v.as_object_mut() {
                    obj.remove("stats");
                }
            }
            out.push(v);
        }
        println!("{}", serde_json::to_string_pretty(&out).map_err(|e| e.to_string())?);
    } else {
        for r in &reports {
            println!("{}", output::colored_report(r));
            if flags.stats {
                if let Some(s) = &r.stats {
                    println!(
                        "  stats: {} expansions, {} checkpoint reads, cache {}h/{}m/{}f",
                        s.expansions,
                        s.checkpoint_reads,
                        s.cache.hits,
                        s.cache.misses,
                        s.cache.stored_failures
                    );
                }
            }
        }
    }
    Ok(exit_code(findings, errors))
}

fn cmd_query(
    model_path: &Path,
    narrative_path: &Path,
    goal_text: &str,
    with_proof: bool,
    flags: &CommonFlags,
) -> Result<ExitCode, String> {
    let model = load_model(model_path)?;
    let narrative = load_narrative(narrative_path)?;
    let goal = parse_goal_checked(&model, goal_text)?;
    let opts = flags.engine_opts();
    let tl = trigger_closure(&model, &narrative, opts)
        .map_err(|e| e.to_string())?
        .checkpoint()
        .map_err(|e| e.to_string())?;
    let cache = tl.fresh_cache();
    let (answers, stats) = tl.query_with(&goal, cache.as_ref()).map_err(|e| e.to_string())?;

    if flags.json {
        let mut doc = serde_json::json!({
            "goal": goal_text,
            "answers": answers,
        });
        if flags.stats {
            doc["stats"] = serde_json::to_value(stats).map_err(|e| e.to_string())?;
        }
        println!("{}", serde_json::to_string_pretty(&doc).map_err(|e| e.to_string())?);
    } else {
        if answers.is_empty() {
            println!("no");
        }
        for (i, a) in answers.iter().enumerate() {
            println!("answer {}: {}", i + 1, a.render_text(false));
            if with_proof {
                print!("{}", a.proof.render_text());
            }
        }
        if flags.stats {
            println!(
                "stats: {} expansions, {} checkpoint reads, cache {}h/{}m/{}f",
                stats.expansions,
                stats.checkpoint_reads,
                stats.cache.hits,
                stats.cache.misses,
                stats.cache.stored_failures
            );
        }
    }
    Ok(if answers.is_empty() { ExitCode::from(1) } else { ExitCode::SUCCESS })
}

fn cmd_abduce(
    model_path: &Path,
    narrative_path: &Path,
    goal_text: &str,
    abducibles: &[String],
    params: &[String],
    fixes: &[String],
    flags: &CommonFlags,
) -> Result<ExitCode, String> {
    if abducibles.is_empty() && params.is_empty() {
        return Err("pass at least one --abducible or --param".into());
    }
    let model = load_model(model_path)?;
    let narrative = load_narrative(narrative_path)?;
    let opts = flags.engine_opts();

    if !params.is_empty() {
        let fixed = spec_args::parse_fixes(fixes)?;
        let goal = spec_args::parametric_goal(&model, goal_text, params, fixed)?;
        let regions =
            abduce_parameters(&model, &narrative, &goal, opts).map_err(|e| e.to_string())?;
        if flags.json {
            let doc = serde_json::json!({ "goal": goal_text, "regions": regions });
            println!("{}", serde_json::to_string_pretty(&doc).map_err(|e| e.to_string())?);
        } else if regions.is_empty() {
            println!("no parameter region makes the goal provable");
        } else {
            for (i, r) in regions.iter().enumerate() {
                println!("region {}: {}", i + 1, r.region.join(", "));
                println!("  witness: {}", r.witness);
            }
        }
        return Ok(if regions.is_empty() { ExitCode::from(1) } else { ExitCode::SUCCESS });
    }

    let specs = abducibles
        .iter()
        .map(|a| spec_args::parse_abducible(&model, a))
        .collect::<Result<Vec<_>, _>>()?;
    let goal = parse_goal_checked(&model, goal_text)?;
    let abduce_opts = AbduceOpts { engine: opts, ..Default::default() };
    match abduce_events(&model, &narrative, &goal, &specs, abduce_opts) {
        Ok(solutions) => {
            if flags.json {
                let doc = serde_json::json!({ "goal": goal_text, "solutions": solutions });
                println!("{}", serde_json::to_string_pretty(&doc).map_err(|e| e.to_string())?);
            } else {
                for (i, s) in solutions.iter().enumerate() {
                    let hyps: Vec<String> =
                        s.hypotheses.iter().map(|h| format!("{}@{}", h.event, h.time)).collect();
                    println!(
                        "solution {}: hypothesize [{}]",
                        i + 1,
                        if hyps.is_empty() { "nothing".to_string() } else { hyps.join(", ") }
                    );
                    if !s.region.is_empty() {
                        println!("  where {}", s.region.join(", "));
                    }
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Err(ecrv_core::abduce::AbduceError::SearchExhausted) => {
            if flags.json {
                println!("{}", serde_json::json!({ "goal": goal_text, "solutions": [] }));
            } else {
                println!("no hypothesis set proves the goal");
            }
            Ok(ExitCode::from(1))
        }
        Err(e) => Err(e.to_string()),
    }
}

fn cmd_oracle(
    model_path: &Path,
    narrative_path: &Path,
    dt_text: &str,
    trace_out: Option<&Path>,
    flags: &CommonFlags,
) -> Result<ExitCode, String> {
    let model = load_model(model_path)?;
    let narrative = load_narrative(narrative_path)?;
    let dt = parse_rat(dt_text).ok_or_else(|| format!("invalid dt `{dt_text}`"))?;
    let opts = flags.engine_opts();
    let trace = simulate(&model, &narrative, &dt, opts.zeno_bound).map_err(|e| e.to_string())?;
    if let Some(path) = trace_out {
        std::fs::write(path, trace_csv(&trace))
            .map_err(|e| format!("cannot write {}: {e}", path.display()))?;
    }
    let tl = trigger_closure(&model, &narrative, opts)
        .map_err(|e| e.to_string())?
        .checkpoint()
        .map_err(|e| e.to_string())?;
    let discrepancies = cross_check(&tl, &trace).map_err(|e| e.to_string())?;

    if flags.json {
        let doc = serde_json::json!({
            "dt": dt_text,
            "grid_points": trace.rows.len(),
            "discrepancies": discrepancies.iter().map(|d| d.to_string()).collect::<Vec<_>>(),
        });
        println!("{}", serde_json::to_string_pretty(&doc).map_err(|e| e.to_string())?);
    } else if discrepancies.is_empty() {
        println!(
            "{} engine and oracle agree at all {} grid points",
            paint("ok:", Color::Green),
            trace.rows.len()
        );
    } else {
        for d in &discrepancies {
            println!("{} {d}", paint("mismatch:", Color::Red));
        }
    }
    Ok(if discrepancies.is_empty() { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn cmd_explain(path: &Path) -> Result<ExitCode, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?;
    let mut found = 0;
    output::render_proofs(&value, &mut found);
    if found == 0 {
        return Err("no proof objects found in the JSON input".into());
    }
    Ok(ExitCode::SUCCESS)
}

fn exit_code(findings: bool, errors: bool) -> ExitCode {
    if errors {
        ExitCode::from(2)
    } else if findings {
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    }
}
