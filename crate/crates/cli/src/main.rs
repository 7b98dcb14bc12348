use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context as _, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use tribell::dependence::{complete_contexts, Completion, DependenceReport, Measure};
use tribell::format::{parse_model, write_model};
use tribell::inequalities::{
    check_model_against_bound, evaluate, InequalityKind, RelaxationScenario, ScenarioShape,
    Verdict,
};
use tribell::num::{exact_string, int, parse_rational, Rational};
use tribell::reference_models::{
    build_reference_model, expected_claims, ClaimKind, ReferenceModel, ReferenceModelSpec,
};
use tribell::quantum::optimize_settings;
use tribell::search::{
    lp_max_s, parse_grid, verify_bound_soundness, BoundCertificate, Mode, PairLinking,
    MAX_ENUMERATION_L,
};
use tribell::{behavior, check_context_consistency, check_no_signaling, MdlModel};

const SCHEMA_VERSION: u32 = 1;
const QUANTUM_TOLERANCE: f64 = 1e-6;

#[derive(Parser)]
#[command(name = "tribell", version, about = "Measurement-dependent local models for tripartite Bell inequalities")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct OutputArgs {
    #[arg(long, value_enum, default_value_t = Format::Text, global = true)]
    format: Format,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a model file: S, dependence measures, no-signaling.
    Eval {
        model: PathBuf,
        #[arg(long)]
        inequality: Option<InequalityKind>,
        #[arg(long)]
        scenario: Option<ScenarioShape>,
        /// Budget such as `M1=1/2`; repeatable.
        #[arg(long = "budget", value_parser = parse_budget)]
        budgets: Vec<(Measure, Rational)>,
    },
    /// Rebuild the five tabulated models over a grid and check their claims.
    Tables {
        #[arg(long, default_value = "0:1:1/8")]
        grid: String,
    },
    /// Exhaustive bound soundness over deterministic strategies.
    Bounds {
        #[arg(long)]
        inequality: InequalityKind,
        #[arg(long)]
        scenario: ScenarioShape,
        #[arg(long = "L", default_value_t = 1)]
        hidden: usize,
        #[arg(long, default_value = "0:2:1/2")]
        grid: String,
        #[arg(long, default_value = "strict")]
        linking: PairLinking,
    },
    /// Optimize GHZ measurement settings for all three inequalities.
    Quantum,
    /// Largest S for one strategy file under dependence budgets.
    Search {
        strategy: PathBuf,
        #[arg(long)]
        inequality: InequalityKind,
        #[arg(long)]
        scenario: ScenarioShape,
        /// Explicit budgets; otherwise every grid value is spread uniformly.
        #[arg(long = "budget", value_parser = parse_budget)]
        budgets: Vec<(Measure, Rational)>,
        #[arg(long, default_value = "0:2:1/2")]
        grid: String,
        #[arg(long, value_enum, default_value_t = ModeArg::Exact)]
        mode: ModeArg,
        #[arg(long, default_value = "strict")]
        linking: PairLinking,
    },
    /// Fill in missing full contexts of a partial model within budgets.
    Complete {
        model: PathBuf,
        #[arg(long = "budget", value_parser = parse_budget, required = true)]
        budgets: Vec<(Measure, Rational)>,
        /// Where to write the completed model file.
        #[arg(long)]
        witness: Option<PathBuf>,
    },
    /// Write one of the tabulated models as a model file.
    Export {
        model: ReferenceModel,
        /// Parameter values (`p`, or `p1 p2` for model I).
        #[arg(long = "param", value_parser = parse_exact, num_args = 1..)]
        params: Vec<Rational>,
        /// Sign letters set to -1, e.g. `--flip a --flip c`.
        #[arg(long = "flip")]
        flips: Vec<char>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Exact,
    Real,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Mode {
        match m {
            ModeArg::Exact => Mode::Exact,
            ModeArg::Real => Mode::Real,
        }
    }
}

fn parse_exact(text: &str) -> Result<Rational, String> {
    parse_rational(text).map_err(|e| e.to_string())
}

fn parse_budget(text: &str) -> Result<(Measure, Rational), String> {
    let (key, value) = text
        .split_once('=')
        .ok_or_else(|| format!("expected MEASURE=VALUE, got `{text}`"))?;
    let measure: Measure = key.parse().map_err(|e| format!("{e}"))?;
    Ok((measure, parse_exact(value)?))
}

/// A finished command: the rendered report and whether every check passed.
struct Report {
    ok: bool,
    json: Value,
    csv: Vec<Vec<String>>,
    text: String,
}

fn load_model(path: &Path) -> Result<MdlModel> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_model(&text).map_err(|e| anyhow!("{}: {e}", path.display()))
}

fn scenario_from(
    shape: ScenarioShape,
    budgets: &[(Measure, Rational)],
) -> Result<RelaxationScenario> {
    let map: BTreeMap<Measure, Rational> = budgets.iter().cloned().collect();
    Ok(RelaxationScenario::new(shape, map)?)
}

fn eval(
    path: &Path,
    inequality: Option<InequalityKind>,
    scenario: Option<ScenarioShape>,
    budgets: &[(Measure, Rational)],
) -> Result<Report> {
    let model = load_model(path)?;
    let kinds: Vec<InequalityKind> = match inequality {
        Some(k) => vec![k],
        None => InequalityKind::ALL.to_vec(),
    };
    let mut ok = true;
    let mut text = format!(
        "model {} (L = {}, {})\n",
        model.label(),
        model.hidden_count(),
        model.responses().pairing()
    );
    let mut csv = vec![vec!["quantity".to_string(), "value".to_string()]];
    let mut s_json = serde_json::Map::new();
    for kind in &kinds {
        match evaluate(&model, *kind) {
            Ok(s) => {
                writeln!(text, "S[{kind}] = {}", exact_string(&s))?;
                csv.push(vec![format!("S_{kind}"), exact_string(&s)]);
                s_json.insert(kind.name().to_string(), json!(exact_string(&s)));
            }
            Err(e) if inequality.is_some() => return Err(e.into()),
            Err(e) => {
                writeln!(text, "S[{kind}] unavailable: {e}")?;
                s_json.insert(kind.name().to_string(), Value::Null);
            }
        }
    }

    let dependence = DependenceReport::of(&model);
    text.push_str("dependence:");
    for m in Measure::ALL {
        let value = dependence.get(m).map_or("-".to_string(), exact_string);
        write!(text, " {}={}", m.id(), value)?;
        csv.push(vec![m.id().to_string(), value]);
    }
    if dependence.partial {
        text.push_str(" (partial model: lower bounds)");
    }
    text.push('\n');

    let no_signaling = match behavior(&model) {
        Ok(b) => {
            let report = check_no_signaling(&b);
            ok &= report.passes();
            if report.passes() {
                text.push_str("no-signaling: pass\n");
            } else {
                writeln!(text, "no-signaling: FAIL ({} marginals)", report.violations.len())?;
                for v in &report.violations {
                    writeln!(
                        text,
                        "  {} at {} = {} but at {} = {}",
                        v.marginal,
                        v.first,
                        exact_string(&v.first_value),
                        v.second,
                        exact_string(&v.second_value)
                    )?;
                }
            }
            csv.push(vec!["no_signaling".into(), report.passes().to_string()]);
            serde_json::to_value(&report)?
        }
        Err(e) => {
            writeln!(text, "no-signaling: not checked ({e})")?;
            Value::Null
        }
    };

    let consistency = check_context_consistency(&model);
    if !consistency.entries.is_empty() {
        writeln!(
            text,
            "pair contexts: {}",
            if consistency.is_consistent() {
                "consistent with supplied extensions"
            } else {
                "differ from some supplied extensions (informational)"
            }
        )?;
    }

    let mut bound_json = Value::Null;
    if let Some(shape) = scenario {
        let kind = inequality.ok_or_else(|| anyhow!("--scenario needs --inequality"))?;
        let report = check_model_against_bound(&model, kind, &scenario_from(shape, budgets)?)?;
        let within = report.verdict == Verdict::WithinBound;
        ok &= within;
        writeln!(
            text,
            "bound[{shape}] = {}: {}{}",
            exact_string(&report.bound),
            if within { "within" } else { "EXCEEDED" },
            if report.tight { " (tight)" } else { "" }
        )?;
        csv.push(vec!["bound".into(), exact_string(&report.bound)]);
        bound_json = serde_json::to_value(&report)?;
    }

    Ok(Report {
        ok,
        json: json!({
            "label": model.label(),
            "hidden": model.hidden_count(),
            "pairing": model.responses().pairing(),
            "S": s_json,
            "dependence": dependence_json(&dependence)?,
            "no_signaling": no_signaling,
            "consistency": consistency,
            "bound": bound_json,
        }),
        csv,
        text,
    })
}

fn dependence_json(report: &DependenceReport) -> Result<Value> {
    Ok(serde_json::to_value(report)?)
}

fn tables(grid: &str) -> Result<Report> {
    let values = parse_grid(grid).map_err(|e| anyhow!(e))?;
    if values.iter().any(|v| *v < int(0) || *v > int(1)) {
        bail!("parameter grid must lie in [0, 1]");
    }
    let mut ok = true;
    let mut rows = Vec::new();
    let mut csv = vec![["model", "params", "inequality", "S", "claimed_S", "measures", "pass"]
        .map(String::from)
        .to_vec()];
    let mut text = String::new();
    for model in ReferenceModel::ALL {
        let param_sets: Vec<Vec<Rational>> = if model.param_names().len() == 2 {
            values
                .iter()
                .flat_map(|a| values.iter().map(move |b| vec![a.clone(), b.clone()]))
                .filter(|v| &v[0] + &v[1] <= int(1))
                .collect()
        } else {
            values.iter().map(|p| vec![p.clone()]).collect()
        };
        for params in param_sets {
            let built = build_reference_model(&ReferenceModelSpec::new(model, params.clone()))?;
            let claims = expected_claims(model, &params);
            let s = evaluate(&built, claims.inequality)?;
            let mut pass = s == claims.s;
            let mut measure_notes = Vec::new();
            let mut completable = Vec::new();
            for claim in &claims.measures {
                match claim.kind {
                    ClaimKind::Measured => {
                        let got = tribell::dependence::measure(&built, claim.measure);
                        pass &= got.as_ref() == Some(&claim.value);
                        measure_notes.push(format!(
                            "{}={}",
                            claim.measure.id(),
                            got.as_ref().map_or("-".into(), exact_string)
                        ));
                    }
                    ClaimKind::Completable => {
                        completable.push((claim.measure, claim.value.clone()));
                    }
                }
            }
            // Missing columns: the claimed values must be reachable together.
            if !completable.is_empty() {
                let feasible = complete_contexts(&built, &completable)?.is_feasible();
                pass &= feasible;
                measure_notes.push(format!(
                    "{} {}",
                    completable
                        .iter()
                        .map(|(m, v)| format!("{}<={}", m.id(), exact_string(v)))
                        .collect::<Vec<_>>()
                        .join(","),
                    if feasible { "completable" } else { "not completable" }
                ));
            }
            ok &= pass;
            let params_text = params.iter().map(exact_string).collect::<Vec<_>>().join(",");
            writeln!(
                text,
                "{:<4} p=({:<9}) {:<10} S={:<6} claimed {:<6} {:<30} {}",
                model.roman(),
                params_text,
                claims.inequality.name(),
                exact_string(&s),
                exact_string(&claims.s),
                measure_notes.join(" "),
                if pass { "pass" } else { "FAIL" }
            )?;
            csv.push(vec![
                model.roman().to_string(),
                params_text.clone(),
                claims.inequality.name().to_string(),
                exact_string(&s),
                exact_string(&claims.s),
                measure_notes.join(" "),
                pass.to_string(),
            ]);
            rows.push(json!({
                "model": model.roman(),
                "params": params.iter().map(exact_string).collect::<Vec<_>>(),
                "inequality": claims.inequality,
                "formula": claims.formula,
                "S": exact_string(&s),
                "claimed_S": exact_string(&claims.s),
                "measures": measure_notes,
                "pass": pass,
            }));
        }
    }
    Ok(Report {
        ok,
        json: json!({ "rows": rows }),
        csv,
        text,
    })
}

fn bounds(
    kind: InequalityKind,
    shape: ScenarioShape,
    hidden: usize,
    grid: &str,
    linking: PairLinking,
) -> Result<Report> {
    if hidden > MAX_ENUMERATION_L {
        bail!("--L is capped at {MAX_ENUMERATION_L} for exhaustive runs");
    }
    let grid = parse_grid(grid).map_err(|e| anyhow!(e))?;
    let summary = verify_bound_soundness(kind, shape, hidden, &grid, linking)?;
    let mut text = format!(
        "{kind} {shape} L={hidden}: {} canonical strategies ({} raw)\n",
        summary.strategies, summary.raw_strategies
    );
    let mut csv = vec![["budget", "max_S", "bound", "tight", "violations"]
        .map(String::from)
        .to_vec()];
    for b in &summary.budgets {
        writeln!(
            text,
            "  m={:<4} max S={:<5} bound={:<5} {}{}",
            exact_string(&b.budget),
            b.max_s.to_string(),
            exact_string(&b.bound),
            if b.tight { "tight" } else { "slack" },
            if b.violations > 0 {
                format!("  {} VIOLATIONS", b.violations)
            } else {
                String::new()
            }
        )?;
        csv.push(vec![
            exact_string(&b.budget),
            b.max_s.to_string(),
            exact_string(&b.bound),
            b.tight.to_string(),
            b.violations.to_string(),
        ]);
    }
    if let Some(v) = summary.violations.first() {
        writeln!(
            text,
            "first violation at m={}: S={:.6} > {:.6} with {}",
            exact_string(&v.budget),
            v.lp_max_s,
            v.bound,
            serde_json::to_string(&v.strategy)?
        )?;
    }
    Ok(Report {
        ok: summary.sound(),
        json: serde_json::to_value(&summary)?,
        csv,
        text,
    })
}

fn quantum() -> Result<Report> {
    let mut ok = true;
    let mut text = String::new();
    let mut csv = vec![["inequality", "S", "target"].map(String::from).to_vec()];
    let mut results = Vec::new();
    for kind in InequalityKind::ALL {
        let target = kind.spec().quantum_ghz_value;
        let (settings, s) = optimize_settings(kind);
        let pass = (s - target).abs() <= QUANTUM_TOLERANCE;
        ok &= pass;
        writeln!(text, "{:<10} S = {s:.12} (target {target:.12})", kind.name())?;
        let vectors = serde_json::to_value(&settings)?;
        if let Value::Object(map) = &vectors {
            for (name, v) in map {
                writeln!(text, "  {name} = {v}")?;
            }
        }
        csv.push(vec![kind.name().into(), format!("{s:.12}"), format!("{target:.12}")]);
        results.push(json!({
            "inequality": kind,
            "S": s,
            "target": target,
            "pass": pass,
            "settings": vectors,
        }));
    }
    Ok(Report {
        ok,
        json: json!({ "results": results }),
        csv,
        text,
    })
}

#[allow(clippy::too_many_arguments)]
fn search(
    path: &Path,
    kind: InequalityKind,
    shape: ScenarioShape,
    budgets: &[(Measure, Rational)],
    grid: &str,
    mode: Mode,
    linking: PairLinking,
) -> Result<Report> {
    let model = load_model(path)?;
    let strategy = model.responses();
    let scenarios: Vec<RelaxationScenario> = if budgets.is_empty() {
        parse_grid(grid)
            .map_err(|e| anyhow!(e))?
            .iter()
            .map(|m| RelaxationScenario::uniform(kind, shape, m))
            .collect::<Result<_, _>>()?
    } else {
        vec![scenario_from(shape, budgets)?]
    };
    let certificates: Vec<BoundCertificate> = scenarios
        .iter()
        .map(|s| lp_max_s(strategy, kind, s, linking, mode))
        .collect::<Result<_, _>>()?;
    let mut text = format!("{kind} {shape} for {} (L = {})\n", model.label(), strategy.len());
    let mut csv = vec![["budgets", "lp_max_S", "bound", "sound", "tight"]
        .map(String::from)
        .to_vec()];
    for c in &certificates {
        let budgets = c
            .budgets
            .iter()
            .map(|(m, v)| format!("{}={}", m.id(), exact_string(v)))
            .collect::<Vec<_>>()
            .join(" ");
        writeln!(
            text,
            "  {budgets:<20} max S={:<8} bound={:<6} {}{}",
            c.lp_max_s.to_string(),
            c.bound.to_string(),
            if c.sound { "sound" } else { "EXCEEDS BOUND" },
            if c.tight { ", tight" } else { "" }
        )?;
        csv.push(vec![
            budgets,
            c.lp_max_s.to_string(),
            c.bound.to_string(),
            c.sound.to_string(),
            c.tight.to_string(),
        ]);
    }
    Ok(Report {
        ok: certificates.iter().all(|c| c.sound),
        json: json!({ "certificates": certificates }),
        csv,
        text,
    })
}

fn complete(path: &Path, budgets: &[(Measure, Rational)], witness: Option<&Path>) -> Result<Report> {
    let model = load_model(path)?;
    let result = complete_contexts(&model, budgets)?;
    let budget_text = budgets
        .iter()
        .map(|(m, v)| format!("{}<={}", m.id(), exact_string(v)))
        .collect::<Vec<_>>()
        .join(", ");
    let (ok, text, file) = match &result {
        Completion::Feasible(done) => {
            let file = write_model(done);
            if let Some(path) = witness {
                std::fs::write(path, &file).with_context(|| format!("writing {}", path.display()))?;
            }
            (true, format!("feasible with {budget_text}\n{file}"), Some(file))
        }
        Completion::Infeasible => (false, format!("infeasible with {budget_text}\n"), None),
    };
    Ok(Report {
        ok,
        json: json!({
            "label": model.label(),
            "budgets": budgets.iter().map(|(m, v)| (m.id().to_string(), json!(exact_string(v)))).collect::<serde_json::Map<_, _>>(),
            "feasible": ok,
            "witness": file,
        }),
        csv: vec![
            vec!["feasible".into(), "budgets".into()],
            vec![ok.to_string(), budget_text],
        ],
        text,
    })
}

fn export(model: ReferenceModel, params: Vec<Rational>, flips: &[char]) -> Result<Report> {
    let spec = flips
        .iter()
        .fold(ReferenceModelSpec::new(model, params), |s, c| s.with_sign(*c, -1));
    let built = build_reference_model(&spec)?;
    let file = write_model(&built);
    Ok(Report {
        ok: true,
        json: json!({ "label": built.label(), "model": file }),
        csv: vec![vec!["model".into()], vec![file.clone()]],
        text: file,
    })
}

fn render(report: &Report, format: Format, command: &str) -> Result<String> {
    Ok(match format {
        Format::Text => report.text.clone(),
        Format::Json => {
            let mut body = json!({
                "schema_version": SCHEMA_VERSION,
                "command": command,
                "ok": report.ok,
            });
            if let (Value::Object(out), Value::Object(extra)) = (&mut body, &report.json) {
                out.extend(extra.clone());
            } else {
                body["result"] = report.json.clone();
            }
            let mut s = serde_json::to_string_pretty(&body)?;
            s.push('\n');
            s
        }
        Format::Csv => {
            let mut writer = csv::Writer::from_writer(Vec::new());
            for row in &report.csv {
                writer.write_record(row)?;
            }
            String::from_utf8(writer.into_inner()?)?
        }
    })
}

fn run(cli: Cli) -> Result<bool> {
    let (name, report) = match cli.command {
        Command::Eval {
            model,
            inequality,
            scenario,
            budgets,
        } => ("eval", eval(&model, inequality, scenario, &budgets)?),
        Command::Tables { grid } => ("tables", tables(&grid)?),
        Command::Bounds {
            inequality,
            scenario,
            hidden,
            grid,
            linking,
        } => ("bounds", bounds(inequality, scenario, hidden, &grid, linking)?),
        Command::Quantum => ("quantum", quantum()?),
        Command::Search {
            strategy,
            inequality,
            scenario,
            budgets,
            grid,
            mode,
            linking,
        } => (
            "search",
            search(&strategy, inequality, scenario, &budgets, &grid, mode.into(), linking)?,
        ),
        Command::Complete {
            model,
            budgets,
            witness,
        } => ("complete", complete(&model, &budgets, witness.as_deref())?),
        Command::Export {
            model,
            params,
            flips,
        } => ("export", export(model, params, &flips)?),
    };
    let rendered = render(&report, cli.output.format, name)?;
    match &cli.output.out {
        Some(path) => {
            std::fs::write(path, rendered).with_context(|| format!("writing {}", path.display()))?
        }
        None => print!("{rendered}"),
    }
    Ok(report.ok)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
