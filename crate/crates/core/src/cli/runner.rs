//! Command pipelines binding the library modules into configuration-driven
//! runs that produce a report document, CSV tables, and gate verdicts.

use num_rational::Ratio;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::approximant::{
    build_approximant, build_forest, carleson_decomposition, partition_report,
    perimeter_in_window, region_boundary_faces, ForestParams,
};
use crate::cli::config::ExperimentConfig;
use crate::cli::report::{report_document, csv_text, Gate, RunArtifacts};
use crate::error::{LabError, Result};
use crate::fields::{ball_sampler, classify, ScalarField};
use crate::geometry::{LipschitzGraph, RootCube};
use crate::goodlambda::{
    build_families, check_hypothesis, decay_check, fraction_string, synth_martingale,
    verify_properties,
};
use crate::grid::GridSpec;
use crate::operators::{carleson_constant, fatou_average, CountingParams, FatouParams};

/// Boundary sample count for Carleson-constant scans.
const BOUNDARY_SAMPLES: usize = 64;
/// Fraction of cells owned by depth-capped nodes that a run may leave
/// unresolved and still pass its gate.
const UNRESOLVED_GATE: f64 = 0.01;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Approximate,
    Verify,
    Classify,
    Fatou,
    Goodlambda,
    Sweep,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Approximate => "approximate",
            Command::Verify => "verify",
            Command::Classify => "classify",
            Command::Fatou => "fatou",
            Command::Goodlambda => "goodlambda",
            Command::Sweep => "sweep",
        }
    }
}

/// Cap the global thread pool from `LAB_THREADS`; silently keeps the
/// existing pool when one is already installed.
pub fn configure_threads() {
    if let Ok(text) = std::env::var("LAB_THREADS") {
        if let Ok(n) = text.trim().parse::<usize>() {
            if n >= 1 {
                let _ = rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build_global();
            }
        }
    }
}

struct Context {
    field: ScalarField,
    graph: LipschitzGraph,
    root: RootCube,
    aperture: f64,
}

fn context(config: &ExperimentConfig) -> Result<Context> {
    config.validate()?;
    let graph = config.domain.graph()?;
    let aperture = config.aperture(&graph);
    Ok(Context {
        field: config.field.build()?,
        graph,
        root: config.domain.root()?,
        aperture,
    })
}

fn fmt(v: f64) -> String {
    format!("{v:.12e}")
}

/// Everything computed for one threshold of the approximant sweep.
#[derive(Serialize)]
struct EpsilonRow {
    epsilon: f64,
    nodes: usize,
    generations: Vec<usize>,
    sup_error: f64,
    sup_error_resolved: f64,
    error_budget: f64,
    unresolved_fraction: f64,
    red_fraction: f64,
    carleson_jump: f64,
    carleson_energy: f64,
    carleson_interface: f64,
    partition_exact: bool,
    boundary_length: f64,
    boundary_eps2: f64,
    packing_sum: f64,
    packing_eps2: f64,
    #[serde(skip)]
    forest_dump: String,
}

fn epsilon_row(ctx: &Context, config: &ExperimentConfig, eps: f64) -> Result<EpsilonRow> {
    let mut params = ForestParams::new(eps, config.max_depth);
    params.k_blue = config.k_blue;
    let forest = build_forest(&ctx.field, &ctx.graph, &ctx.root, &params)?;
    let approx = build_approximant(&ctx.field, &ctx.graph, &forest, config.grid_depth)?;
    let dec = carleson_decomposition(&approx);
    let ladder = &config.r_ladder;
    let jump = carleson_constant(&dec.jump_phi1, &ctx.graph, BOUNDARY_SAMPLES, ladder)?;
    let energy = carleson_constant(&dec.energy_red, &ctx.graph, BOUNDARY_SAMPLES, ladder)?;
    let interface = carleson_constant(&dec.red_interface, &ctx.graph, BOUNDARY_SAMPLES, ladder)?;

    let grad_sup = approx
        .grad_norm
        .data
        .iter()
        .fold(0.0f64, |a, &b| a.max(b));
    let budget = crate::approximant::error_budget(
        &forest,
        &ctx.graph,
        approx.maps.grid.cell(),
        grad_sup,
    );
    let red_fraction = approx.maps.red.data.iter().filter(|&&b| b).count() as f64
        / approx.maps.grid.cell_count() as f64;
    let partition = partition_report(&forest, &approx.maps);

    let faces = region_boundary_faces(&approx.maps);
    let window = ctx.root.cube();
    let perimeter = perimeter_in_window(&faces, &ctx.graph, &approx.maps, &window);
    let n = ctx.root.n() as i32;
    let norm = ctx.root.side.powi(n);
    let packing = forest.subtree_side_sums()[0];

    Ok(EpsilonRow {
        epsilon: eps,
        nodes: forest.nodes.len(),
        generations: forest.generation_sizes(),
        sup_error: approx.sup_error,
        sup_error_resolved: approx.sup_error_resolved,
        error_budget: budget,
        unresolved_fraction: approx.unresolved_fraction,
        red_fraction,
        carleson_jump: jump.constant,
        carleson_energy: energy.constant,
        carleson_interface: interface.constant,
        partition_exact: partition.exact,
        boundary_length: perimeter.estimate,
        boundary_eps2: perimeter.estimate * eps * eps / norm,
        packing_sum: packing,
        packing_eps2: packing * eps * eps / norm,
        forest_dump: forest.dump_json(),
    })
}

fn epsilon_rows(ctx: &Context, config: &ExperimentConfig) -> Result<Vec<EpsilonRow>> {
    config
        .epsilons
        .par_iter()
        .map(|&eps| epsilon_row(ctx, config, eps))
        .collect()
}

fn approximate_gates(rows: &[EpsilonRow]) -> Vec<Gate> {
    let mut gates = Vec::new();
    for row in rows {
        gates.push(Gate::new(
            format!("sup_error_within_budget@{}", row.epsilon),
            row.sup_error_resolved <= row.error_budget,
            format!(
                "certified sup_error {} vs budget {}",
                row.sup_error_resolved, row.error_budget
            ),
        ));
        gates.push(Gate::new(
            format!("unresolved_below_1pct@{}", row.epsilon),
            row.unresolved_fraction < UNRESOLVED_GATE,
            format!("unresolved fraction {}", row.unresolved_fraction),
        ));
        gates.push(Gate::new(
            format!("carleson_finite@{}", row.epsilon),
            row.carleson_jump.is_finite()
                && row.carleson_energy.is_finite()
                && row.carleson_interface.is_finite(),
            format!(
                "constants {}, {}, {}",
                row.carleson_jump, row.carleson_energy, row.carleson_interface
            ),
        ));
    }
    gates
}

fn run_approximate(ctx: &Context, config: &ExperimentConfig) -> Result<RunArtifacts> {
    let rows = epsilon_rows(ctx, config)?;
    let gates = approximate_gates(&rows);
    let table = csv_text(
        &[
            "epsilon",
            "nodes",
            "sup_error",
            "error_budget",
            "unresolved_fraction",
            "red_fraction",
            "carleson_jump",
            "carleson_energy",
            "carleson_interface",
        ],
        &rows
            .iter()
            .map(|r| {
                vec![
                    fmt(r.epsilon),
                    r.nodes.to_string(),
                    fmt(r.sup_error),
                    fmt(r.error_budget),
                    fmt(r.unresolved_fraction),
                    fmt(r.red_fraction),
                    fmt(r.carleson_jump),
                    fmt(r.carleson_energy),
                    fmt(r.carleson_interface),
                ]
            })
            .collect::<Vec<_>>(),
    );
    let forests: Vec<Value> = rows
        .iter()
        .map(|r| {
            json!({
                "epsilon": r.epsilon,
                "forest": serde_json::from_str::<Value>(&r.forest_dump)
                    .expect("forest dump is valid JSON"),
            })
        })
        .collect();
    let results = json!({ "rows": serde_json::to_value(&rows).expect("rows serialize") });
    let report = report_document("approximate", config, results, &gates);
    Ok(RunArtifacts {
        report,
        tables: vec![("approximate.csv".to_string(), table)],
        extra_json: vec![(
            "forest.json".to_string(),
            serde_json::to_string_pretty(&Value::Array(forests)).expect("forests serialize") + "\n",
        )],
        gates,
    })
}

fn run_verify(ctx: &Context, config: &ExperimentConfig) -> Result<RunArtifacts> {
    let rows = epsilon_rows(ctx, config)?;
    let mut gates = approximate_gates(&rows);
    for row in &rows {
        gates.push(Gate::new(
            format!("partition_exact@{}", row.epsilon),
            row.partition_exact,
            "every cell owned by the deepest selected slab containing it".to_string(),
        ));
    }
    let table = csv_text(
        &[
            "epsilon",
            "nodes",
            "partition_exact",
            "sup_error",
            "error_budget",
            "boundary_length",
            "boundary_eps2",
            "packing_sum",
            "packing_eps2",
            "carleson_jump",
            "carleson_energy",
            "carleson_interface",
        ],
        &rows
            .iter()
            .map(|r| {
                vec![
                    fmt(r.epsilon),
                    r.nodes.to_string(),
                    r.partition_exact.to_string(),
                    fmt(r.sup_error),
                    fmt(r.error_budget),
                    fmt(r.boundary_length),
                    fmt(r.boundary_eps2),
                    fmt(r.packing_sum),
                    fmt(r.packing_eps2),
                    fmt(r.carleson_jump),
                    fmt(r.carleson_energy),
                    fmt(r.carleson_interface),
                ]
            })
            .collect::<Vec<_>>(),
    );
    let results = json!({ "rows": serde_json::to_value(&rows).expect("rows serialize") });
    let report = report_document("verify", config, results, &gates);
    Ok(RunArtifacts {
        report,
        tables: vec![("verify.csv".to_string(), table)],
        extra_json: Vec::new(),
        gates,
    })
}

fn run_classify(ctx: &Context, config: &ExperimentConfig) -> Result<RunArtifacts> {
    let sample_depth = config.grid_depth.min(6);
    let grid = GridSpec::over_root(&ctx.root, sample_depth)?;
    let mut samples = Vec::with_capacity(grid.cell_count());
    for ix in 0..grid.nx() {
        let x = grid.x_center(ix);
        let base = ctx.graph.phi1(x);
        for jh in 0..grid.nx() {
            samples.push((x, base + grid.h_center(jh)));
        }
    }
    let balls = ball_sampler(&ctx.graph, &grid, config.eta, 16);
    // The power-branch exponent comes from the field's own parameter when
    // one was configured; without it the power branches are skipped.
    let alpha = config.field.params.get("alpha").copied();
    let class = classify(
        &ctx.field,
        &ctx.graph,
        &samples,
        &balls,
        config.eta,
        alpha,
    )?;
    let gates = vec![Gate::new(
        "classification_complete",
        class.sharp.samples > 0 && class.star.balls > 0,
        format!(
            "{} samples, {} balls",
            class.sharp.samples, class.star.balls
        ),
    )];
    let table = csv_text(
        &[
            "theta_sup",
            "star_ratio_sup",
            "morrey_ratio_sup",
            "nonneg_subharmonic",
            "power_superharmonic",
            "implied_theta",
        ],
        &[vec![
            fmt(class.sharp.theta_sup),
            fmt(class.star.ratio_sup),
            fmt(class.morrey.ratio_sup),
            class.nonneg_subharmonic.holds.to_string(),
            class
                .power_superharmonic
                .map(|b| b.holds.to_string())
                .unwrap_or_else(|| "n/a".to_string()),
            class
                .implied_theta
                .map(fmt)
                .unwrap_or_else(|| "n/a".to_string()),
        ]],
    );
    let results = serde_json::to_value(&class).expect("class report serializes");
    let report = report_document("classify", config, results, &gates);
    Ok(RunArtifacts {
        report,
        tables: vec![("classify.csv".to_string(), table)],
        extra_json: Vec::new(),
        gates,
    })
}

fn run_fatou(ctx: &Context, config: &ExperimentConfig) -> Result<RunArtifacts> {
    let params = FatouParams {
        counting: CountingParams {
            r: config.counting.r,
            eps: config.counting.eps,
            beta: config.counting.beta,
            aperture: ctx.aperture,
            depth: config.counting.depth,
        },
        omega_samples: 16,
        z_samples: 48,
        ladder: config.r_ladder.clone(),
    };
    let fatou = fatou_average(&ctx.field, &ctx.graph, &ctx.root, &params)?;
    let gates = vec![Gate::new(
        "fatou_average_finite",
        fatou.sup.is_finite(),
        format!("sup {}", fatou.sup),
    )];
    let table = csv_text(
        &["omega_x", "r", "average"],
        &fatou
            .rows
            .iter()
            .map(|r| vec![fmt(r.omega_x), fmt(r.r), fmt(r.average)])
            .collect::<Vec<_>>(),
    );
    let results = serde_json::to_value(&fatou).expect("fatou report serializes");
    let report = report_document("fatou", config, results, &gates);
    Ok(RunArtifacts {
        report,
        tables: vec![("fatou.csv".to_string(), table)],
        extra_json: Vec::new(),
        gates,
    })
}

fn run_goodlambda(config: &ExperimentConfig) -> Result<RunArtifacts> {
    config.validate()?;
    let gl = &config.goodlambda;
    let lambda = gl.lambda;
    let increment = gl.increment.unwrap_or(lambda / 4.0);
    let mut gates = Vec::new();
    let mut csv_rows = Vec::new();
    let mut seed_results = Vec::new();
    for &seed in &config.goodlambda_seeds() {
        let df = synth_martingale(gl.depth, increment, seed)?;
        let hyp = check_hypothesis(&df, lambda, Ratio::new(1, 4))?;
        gates.push(Gate::new(
            format!("hypothesis_holds@seed{seed}"),
            hyp.holds,
            format!(
                "worst exceed ratio {} at ({}, {})",
                fraction_string(hyp.worst_ratio),
                hyp.worst_generation,
                hyp.worst_index
            ),
        ));
        let families = build_families(&df, lambda, gl.steps)?;
        let props = verify_properties(&families, &df)?;
        gates.push(Gate::new(
            format!("properties_hold@seed{seed}"),
            props.all_hold(),
            format!("{} failures", props.failures.len()),
        ));
        let decay = decay_check(&df, lambda, gl.steps)?;
        let identity_ok = decay.rows.iter().all(|r| r.identity_rel_err <= 1e-12);
        gates.push(Gate::new(
            format!("decay_holds@seed{seed}"),
            decay.holds && identity_ok,
            format!("c2 {}", decay.c2),
        ));
        let mut row_values = Vec::new();
        for row in &decay.rows {
            csv_rows.push(vec![
                seed.to_string(),
                row.m.to_string(),
                fmt(row.threshold),
                fraction_string(row.tail),
                fraction_string(row.family_mass),
                fraction_string(row.bound),
                fmt(row.exp_bound),
                fmt(row.identity_rel_err),
            ]);
            row_values.push(json!({
                "m": row.m,
                "threshold": row.threshold,
                "tail": fraction_string(row.tail),
                "family_mass": fraction_string(row.family_mass),
                "bound": fraction_string(row.bound),
                "exp_bound": row.exp_bound,
                "identity_rel_err": row.identity_rel_err,
            }));
        }
        seed_results.push(json!({
            "seed": seed,
            "hypothesis_holds": hyp.holds,
            "worst_ratio": fraction_string(hyp.worst_ratio),
            "properties_hold": props.all_hold(),
            "c2": decay.c2,
            "rows": row_values,
        }));
    }
    let table = csv_text(
        &[
            "seed",
            "m",
            "threshold",
            "tail",
            "family_mass",
            "bound",
            "exp_bound",
            "identity_rel_err",
        ],
        &csv_rows,
    );
    let results = json!({
        "lambda": lambda,
        "increment": increment,
        "depth": gl.depth,
        "seeds": seed_results,
    });
    let report = report_document("goodlambda", config, results, &gates);
    Ok(RunArtifacts {
        report,
        tables: vec![("goodlambda.csv".to_string(), table)],
        extra_json: Vec::new(),
        gates,
    })
}

fn run_sweep(ctx: &Context, config: &ExperimentConfig) -> Result<RunArtifacts> {
    let rows = epsilon_rows(ctx, config)?;
    let mut gates = Vec::new();
    for row in &rows {
        gates.push(Gate::new(
            format!("sup_error_within_budget@{}", row.epsilon),
            row.sup_error_resolved <= row.error_budget,
            format!(
                "certified sup_error {} vs budget {}",
                row.sup_error_resolved, row.error_budget
            ),
        ));
    }
    let table = csv_text(
        &[
            "epsilon",
            "nodes",
            "sup_error",
            "unresolved_fraction",
            "boundary_eps2",
            "packing_eps2",
        ],
        &rows
            .iter()
            .map(|r| {
                vec![
                    fmt(r.epsilon),
                    r.nodes.to_string(),
                    fmt(r.sup_error),
                    fmt(r.unresolved_fraction),
                    fmt(r.boundary_eps2),
                    fmt(r.packing_eps2),
                ]
            })
            .collect::<Vec<_>>(),
    );
    let results = json!({ "rows": serde_json::to_value(&rows).expect("rows serialize") });
    let report = report_document("sweep", config, results, &gates);
    Ok(RunArtifacts {
        report,
        tables: vec![("sweep.csv".to_string(), table)],
        extra_json: Vec::new(),
        gates,
    })
}

/// Execute one command against a validated configuration.
pub fn run(config: &ExperimentConfig, command: Command) -> Result<RunArtifacts> {
    if command == Command::Goodlambda {
        return run_goodlambda(config);
    }
    let ctx = context(config)?;
    match command {
        Command::Approximate => run_approximate(&ctx, config),
        Command::Verify => run_verify(&ctx, config),
        Command::Classify => run_classify(&ctx, config),
        Command::Fatou => run_fatou(&ctx, config),
        Command::Sweep => run_sweep(&ctx, config),
        Command::Goodlambda => unreachable!("handled above"),
    }
}

/// Map an error to the exit-code contract: invalid configuration or
/// preconditions exit 2, I/O failures exit 3.
pub fn exit_code_for(err: &LabError) -> i32 {
    match err {
        LabError::Io { .. } => 3,
        _ => 2,
    }
}
