//! `disagg`: vertex disaggregation of graph Laplacians from the command line.
//!
//! Exit codes: 0 on success (for `verify`, every check holds), 1 when a
//! check fails, 2 on usage, parse or validation errors.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nalgebra::DVector;
use serde_json::json;

use disagg::io::{
    file_sha256, format_edge_list, format_triplets, read_graph, read_plan, write_plan, GraphFormat,
};
use disagg::precond::{
    build_preconditioner, condition_estimate, pcg_solve, transfer_constant, weight_rule_system,
    InnerKind,
};
use disagg::report::{consistent_rhs, run_checks, InputDescriptor, SuiteOptions};
use disagg::spectral::{
    cheeger_report, conjecture_probe, eigs, geometric_sweep, normalized_eigs, CHEEGER_MAX_VERTICES,
};
use disagg::{
    apply, plan_from_threshold, DisaggregationPlan, Error, LocalTemplate, MultiplicityRule,
    WeightedGraph,
};

#[derive(Parser)]
#[command(
    name = "disagg",
    version,
    about = "Vertex disaggregation of weighted graph Laplacians"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build G_D and the prolongation P.
    Disaggregate {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        plan: PlanArgs,
        /// Output directory for gd.edges, p.mtx and plan.json.
        #[arg(long)]
        out: PathBuf,
    },
    /// Smallest eigenpairs and connectivity, plus Cheeger constants for small graphs.
    Spectrum {
        #[command(flatten)]
        input: Input,
        /// Number of eigenpairs to report.
        #[arg(long, short, default_value_t = 6)]
        k: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run every check on (graph, plan) and write the JSON report.
    Verify {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        plan: PlanArgs,
        #[command(flatten)]
        solve: SolveArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Apply the internal-edge weight rule and solve A x = b with the transported preconditioner.
    Precondition {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        plan: PlanArgs,
        #[command(flatten)]
        solve: SolveArgs,
        #[arg(long, default_value = "pinv")]
        inner: InnerKind,
        /// Right-hand side, one value per line; a random consistent one is drawn otherwise.
        #[arg(long)]
        rhs: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sweep the internal weight and tabulate a(G_D) against its ceiling.
    ProbeConjecture {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        plan: PlanArgs,
        #[arg(long, default_value_t = 1.0)]
        w_start: f64,
        #[arg(long, default_value_t = 10.0)]
        w_factor: f64,
        #[arg(long, default_value_t = 7)]
        w_count: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Input {
    /// Graph file (Matrix Market or edge list).
    graph: PathBuf,
    /// `mm` or `edges`; detected from the extension when omitted.
    #[arg(long)]
    format: Option<GraphFormat>,
}

#[derive(Args)]
struct PlanArgs {
    /// Plan JSON; takes precedence over --threshold.
    #[arg(long)]
    plan: Option<PathBuf>,
    /// Split every vertex whose weighted degree exceeds this value.
    #[arg(long)]
    threshold: Option<f64>,
    /// `auto`, `ceil:<c>` or `fixed:<d>`.
    #[arg(long, default_value = "auto")]
    d_rule: MultiplicityRule,
    #[arg(long, default_value = "cycle")]
    template: LocalTemplate,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long, default_value_t = disagg::precond::DEFAULT_EPS)]
    eps: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    #[arg(long, default_value_t = 500)]
    maxit: usize,
}

impl SolveArgs {
    fn options(&self) -> SuiteOptions {
        SuiteOptions {
            eps: self.eps,
            seed: self.seed,
            tol: self.tol,
            maxit: self.maxit,
        }
    }
}

impl Input {
    fn load(&self) -> disagg::Result<WeightedGraph> {
        read_graph(&self.graph, self.format)
    }
}

impl PlanArgs {
    fn resolve(&self, g: &WeightedGraph) -> disagg::Result<DisaggregationPlan> {
        let plan = match (&self.plan, self.threshold) {
            (Some(path), _) => read_plan(path)?,
            (None, Some(t)) => plan_from_threshold(g, t, self.d_rule, self.template.clone())?,
            (None, None) => DisaggregationPlan::empty(),
        };
        plan.validate(g)?;
        Ok(plan)
    }
}

fn emit(out: Option<&Path>, text: &str) -> disagg::Result<()> {
    match out {
        Some(path) => fs::write(path, text)?,
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            if !text.ends_with('\n') {
                stdout.write_all(b"\n")?;
            }
        }
    }
    Ok(())
}

fn to_vec(v: &DVector<f64>) -> Vec<f64> {
    v.iter().copied().collect()
}

fn read_rhs(path: &Path, n: usize) -> disagg::Result<DVector<f64>> {
    let mut values = Vec::new();
    for (k, line) in fs::read_to_string(path)?.lines().enumerate() {
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        values.push(t.parse::<f64>().map_err(|_| Error::Parse {
            line: k + 1,
            msg: format!("cannot parse value `{t}`"),
        })?);
    }
    if values.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: values.len(),
        });
    }
    Ok(DVector::from_vec(values))
}

/// `Ok(true)` when everything holds.
fn run(cli: Cli) -> disagg::Result<bool> {
    match cli.command {
        Command::Disaggregate { input, plan, out } => {
            let g = input.load()?;
            let plan = plan.resolve(&g)?;
            let sys = apply(&g, &plan)?;
            fs::create_dir_all(&out)?;
            fs::write(out.join("gd.edges"), format_edge_list(sys.gd()))?;
            fs::write(out.join("p.mtx"), format_triplets(sys.p()))?;
            write_plan(&out.join("plan.json"), &plan)?;
            eprintln!(
                "n = {}, N = {}, {} split(s), {} edges in G_D",
                g.n(),
                sys.size(),
                sys.split_count(),
                sys.gd().edge_count()
            );
            Ok(true)
        }
        Command::Spectrum { input, k, out } => {
            let g = input.load()?;
            let s = eigs(&disagg::build_laplacian(&g))?;
            let k = k.min(s.dim());
            let pairs: Vec<_> = (0..k)
                .map(|i| {
                    let (lambda, v) = s.eigenpair(i);
                    json!({ "lambda": lambda, "vector": to_vec(&v) })
                })
                .collect();
            let nu2 = if g.n() >= 2 {
                Some(normalized_eigs(&g)?.nu2)
            } else {
                None
            };
            let cheeger = if (2..=CHEEGER_MAX_VERTICES).contains(&g.n()) {
                Some(cheeger_report(&g)?)
            } else {
                None
            };
            let doc = json!({
                "n": g.n(),
                "edges": g.edge_count(),
                "eigenpairs": pairs,
                "algebraic_connectivity": s.algebraic_connectivity,
                "fiedler": to_vec(&s.fiedler),
                "fiedler_degenerate": s.fiedler_degenerate,
                "nu2": nu2,
                "cheeger": cheeger,
            });
            emit(out.as_deref(), &serde_json::to_string_pretty(&doc)?)?;
            Ok(true)
        }
        Command::Verify {
            input,
            plan,
            solve,
            out,
        } => {
            let g = input.load()?;
            let plan = plan.resolve(&g)?;
            let descriptor = InputDescriptor {
                sha256: file_sha256(&input.graph)?,
                n: g.n(),
                edges: g.edge_count(),
            };
            let doc = run_checks(&g, &plan, descriptor, solve.options())?;
            emit(out.as_deref(), &serde_json::to_string_pretty(&doc)?)?;
            for c in doc.checks.iter().filter(|c| !c.holds) {
                eprintln!(
                    "check failed: {} (lhs {:e}, rhs {:e})",
                    c.name, c.lhs, c.rhs
                );
            }
            Ok(doc.all_hold())
        }
        Command::Precondition {
            input,
            plan,
            solve,
            inner,
            rhs,
            out,
        } => {
            let g = input.load()?;
            let plan = plan.resolve(&g)?;
            let sys = apply(&g, &plan)?;
            let (ruled, ledger) = weight_rule_system(&sys, solve.eps)?;
            let pc = build_preconditioner(&ruled, inner)?;
            let b = match &rhs {
                Some(path) => read_rhs(path, g.n())?,
                None => consistent_rhs(&g, solve.seed),
            };
            let (x, mut report) = pcg_solve(ruled.a(), &b, &pc.b, solve.tol, solve.maxit)?;
            report.kappa_ba = Some(condition_estimate(&pc.b, ruled.a())?);
            report.kappa_inner = Some(condition_estimate(&pc.inner, ruled.ad())?);
            report.c1_squared = Some(transfer_constant(&ruled)?);
            let doc = json!({
                "inner": inner,
                "eps": solve.eps,
                "thresholds": ledger.thresholds,
                "report": report,
                "solution": to_vec(&x),
            });
            emit(out.as_deref(), &serde_json::to_string_pretty(&doc)?)?;
            Ok(report.converged)
        }
        Command::ProbeConjecture {
            input,
            plan,
            w_start,
            w_factor,
            w_count,
            out,
        } => {
            let g = input.load()?;
            let plan = plan.resolve(&g)?;
            let table = conjecture_probe(&g, &plan, &geometric_sweep(w_start, w_factor, w_count))?;
            let mut csv = csv::Writer::from_writer(Vec::new());
            csv.write_record(["w", "a_GD", "bound", "a_G"])
                .map_err(csv_error)?;
            for r in &table.rows {
                csv.write_record([r.w, r.a_gd, r.bound, r.a_g].map(|x| format!("{x:.16e}")))
                    .map_err(csv_error)?;
            }
            let bytes = csv.into_inner().map_err(|e| Error::Io(e.into_error()))?;
            emit(out.as_deref(), &String::from_utf8_lossy(&bytes))?;
            if table.inconclusive {
                eprintln!("characteristic value is zero: the ceiling equals a(G), so the sweep is inconclusive");
            }
            if let Some(gap) = table.min_gap {
                eprintln!(
                    "min gap a(G) - a(G_D) = {gap:e}; guaranteed gap = {:e}",
                    table.guaranteed_gap
                );
            }
            Ok(table.holds)
        }
    }
}

fn csv_error(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
