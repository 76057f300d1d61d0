use std::path::Path;

use deficiency_core::coherence::{coherence_fidelity_oracle, CoherenceSolver};
use deficiency_core::discrimination::{
    build_perfect_strategy, min_over_omega, operational_disadvantage, play, OMEGA_TOL,
    SIMULATION_TOL,
};
use deficiency_core::entanglement::{EntanglementSolver, MaxEntWitness};
use deficiency_core::formats::{StateFile, VectorJson};
use deficiency_core::freeops::{
    digest, summarize, violation_search, IncoherentFlavor, Resource, SearchConfig, StateKind,
    TrialReport, Verdict,
};
use deficiency_core::qcore::{haar_unitary, substream};
use deficiency_core::{
    BipartiteState, DeficiencyResult, DensityOperator, Error, Method, PureState,
};
use rand::RngCore;
use serde::Serialize;

use crate::report::{emit, output_path, to_json, write_text, Header};
use crate::suite::{run_selftest, table};
use crate::{
    exit, CliError, CliResult, DeficiencyArgs, DiscriminateArgs, FlavorChoice, Format,
    MethodChoice, MonotonicityArgs, Purity, ResourceKind, SelftestArgs,
};

const PURE_SIGMA_TOL: f64 = 1e-9;

fn read_state(path: &Path) -> CliResult<(StateFile, DensityOperator)> {
    let file = StateFile::read(path)?;
    let rho = file.density()?;
    Ok((file, rho))
}

#[derive(Serialize)]
struct ResultJson {
    value: f64,
    fidelity: f64,
    raw_fidelity: f64,
    witness: VectorJson,
    method: Method,
    iterations: usize,
    converged: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    bound_gap: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    grid_gap: Option<f64>,
}

impl ResultJson {
    fn new(r: &DeficiencyResult, grid_gap: Option<f64>) -> Self {
        Self {
            value: r.value,
            fidelity: r.fidelity,
            raw_fidelity: r.raw_fidelity,
            witness: VectorJson::from_vector(r.witness.amplitudes()),
            method: r.method,
            iterations: r.iterations,
            converged: r.converged,
            bound_gap: r.bound_gap,
            grid_gap,
        }
    }
}

#[derive(Serialize)]
struct DeficiencyReport {
    header: Header,
    resource: &'static str,
    dims: Vec<usize>,
    result: ResultJson,
}

fn sub_seed(seed: u64, label: &str) -> u64 {
    substream(seed, label).next_u64()
}

fn unsupported(msg: impl Into<String>) -> CliError {
    CliError::Core(Error::Unsupported(msg.into()))
}

pub fn deficiency(a: &DeficiencyArgs) -> CliResult<u8> {
    let (file, rho) = read_state(&a.state)?;
    let solver_seed = sub_seed(a.seed, "solver");
    let (result, grid_gap) = match (a.resource, a.method) {
        (ResourceKind::Coherence, MethodChoice::Auto) => {
            let solver = CoherenceSolver {
                restarts: a.restarts,
                seed: solver_seed,
                ..CoherenceSolver::default()
            };
            (solver.solve(&rho)?, None)
        }
        (ResourceKind::Coherence, MethodChoice::Ascent) => {
            let solver = CoherenceSolver {
                restarts: a.restarts,
                seed: solver_seed,
                ..CoherenceSolver::default()
            };
            (solver.maximize(&rho)?, None)
        }
        (ResourceKind::Coherence, MethodChoice::Oracle) => {
            let oracle = coherence_fidelity_oracle(&rho, a.grid_points)?;
            let value = (1.0 - oracle.fidelity).clamp(0.0, 1.0);
            let result = DeficiencyResult {
                value,
                fidelity: 1.0 - value,
                raw_fidelity: oracle.fidelity,
                witness: oracle.angles.to_state(),
                method: Method::GridOracle,
                iterations: a.grid_points.pow(rho.dim() as u32 - 1),
                converged: true,
                bound_gap: None,
            };
            (result, Some(oracle.gap))
        }
        (ResourceKind::Entanglement, m @ (MethodChoice::Auto | MethodChoice::PowerIteration)) => {
            if file.dims.len() != 2 {
                return Err(unsupported("entanglement needs a state file with two dims"));
            }
            let state = BipartiteState::new(rho.clone(), file.dims[0], file.dims[1])?;
            let solver = EntanglementSolver {
                restarts: a.restarts,
                seed: solver_seed,
                ..EntanglementSolver::default()
            };
            let r = if m == MethodChoice::Auto {
                solver.solve(&state)?
            } else {
                solver.maximize(&state)?
            };
            (r, None)
        }
        (r, m) => {
            return Err(unsupported(format!(
                "method {m:?} is not available for {r:?}"
            )))
        }
    };
    let header = Header::new("deficiency", a.seed)
        .tolerance("ascent_stop", CoherenceSolver::default().tolerance)
        .input("state", digest([rho.matrix()]));
    let report = DeficiencyReport {
        header,
        resource: match a.resource {
            ResourceKind::Coherence => "coherence",
            ResourceKind::Entanglement => "entanglement",
        },
        dims: file.dims.clone(),
        result: ResultJson::new(&result, grid_gap),
    };
    emit(
        a.out.as_deref(),
        &format!("deficiency-{}.json", a.seed),
        &to_json(&report),
    )?;
    Ok(exit::OK)
}

fn search_config(a: &MonotonicityArgs) -> CliResult<SearchConfig> {
    let resource = match (a.resource, a.dims.as_slice()) {
        (ResourceKind::Coherence, &[d]) => Resource::Coherence { dim: d },
        (ResourceKind::Entanglement, &[da, db]) => Resource::Entanglement {
            dim_a: da,
            dim_b: db,
        },
        (r, dims) => return Err(unsupported(format!("{r:?} cannot use dims {dims:?}"))),
    };
    let state = match a.purity {
        Purity::Pure => StateKind::Pure,
        Purity::Mixed => StateKind::Mixed { rank: a.rank },
    };
    let mut config = SearchConfig::new(resource, state, a.trials, a.seed);
    config.flavor = match a.flavor {
        FlavorChoice::PermPhaseMixture => IncoherentFlavor::PermPhaseMixture,
        FlavorChoice::BasisMeasurement => IncoherentFlavor::BasisMeasurement,
        FlavorChoice::Composed => IncoherentFlavor::Composed,
    };
    config.max_local_kraus = a.max_local_kraus;
    config.tolerance = a.tolerance;
    Ok(config)
}

#[derive(Serialize)]
struct ConfigJson {
    resource: Resource,
    state: StateKind,
    flavor: &'static str,
    max_local_kraus: usize,
    trials: usize,
    seed: u64,
    tolerance: f64,
}

#[derive(Serialize)]
struct MonotonicityReport<'a> {
    header: Header,
    config: ConfigJson,
    summary: deficiency_core::freeops::SearchSummary,
    trials: &'a [TrialReport],
}

#[derive(Serialize)]
struct CsvRow<'a> {
    seed: u64,
    trial: usize,
    dims: String,
    margin: f64,
    verdict: &'static str,
    lhs: f64,
    rhs: f64,
    reverified: bool,
    state_digest: &'a str,
    channel_digest: &'a str,
}

fn csv_table(header: &Header, reports: &[TrialReport]) -> CliResult<String> {
    let summary = summarize(reports);
    let mut out = format!(
        "# {} {} {} seed={} tolerance={}\n",
        header.tool, header.version, header.command, header.seed, header.tolerances["violation"]
    );
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in reports {
        w.serialize(CsvRow {
            seed: r.seed,
            trial: r.trial,
            dims: r
                .dims
                .iter()
                .map(|d| d.to_string())
                .collect::<Vec<_>>()
                .join("x"),
            margin: r.margin,
            verdict: r.verdict.as_str(),
            lhs: r.lhs,
            rhs: r.rhs,
            reverified: r.reverified,
            state_digest: &r.state_digest,
            channel_digest: &r.channel_digest,
        })
        .map_err(|e| CliError::Io(e.to_string()))?;
    }
    let body = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
    out.push_str(&String::from_utf8(body).expect("csv output is UTF-8"));
    out.push_str(&format!(
        "# summary trials={} min_margin={} violations={} numerical_warnings={}\n",
        summary.trials, summary.min_margin, summary.violations, summary.numerical_warnings
    ));
    Ok(out)
}

pub fn monotonicity(a: &MonotonicityArgs) -> CliResult<u8> {
    let config = search_config(a)?;
    let reports = violation_search(&config)?;
    let summary = summarize(&reports);
    let header = Header::new("monotonicity", a.seed).tolerance("violation", config.tolerance);
    let ext = match a.format {
        Format::Csv => "csv",
        Format::Json => "json",
    };
    let name = format!("monotonicity-{}-{}.{ext}", config.resource.name(), a.seed);
    let text = match a.format {
        Format::Csv => csv_table(&header, &reports)?,
        Format::Json => to_json(&MonotonicityReport {
            header: header.clone(),
            config: ConfigJson {
                resource: config.resource,
                state: config.state,
                flavor: config.flavor.name(),
                max_local_kraus: config.max_local_kraus,
                trials: config.trials,
                seed: config.seed,
                tolerance: config.tolerance,
            },
            summary,
            trials: &reports,
        }),
    };
    let path = output_path(a.out.as_deref(), &name);
    match &path {
        Some(p) => write_text(p, &text)?,
        None => print!("{text}"),
    }
    // CSV rows cannot hold reproduction data; violations go to a sidecar file
    if a.format == Format::Csv && summary.violations > 0 {
        if let Some(p) = &path {
            let violations: Vec<&TrialReport> = reports
                .iter()
                .filter(|r| r.verdict == Verdict::Violation)
                .collect();
            write_text(&p.with_extension("violations.json"), &to_json(&violations))?;
        }
    }
    eprintln!(
        "{} trials, min margin {:.3e}, {} violations, {} numerical warnings",
        summary.trials, summary.min_margin, summary.violations, summary.numerical_warnings
    );
    Ok(exit::OK)
}

fn resource_for(kind: ResourceKind, file: &StateFile, dim: usize) -> CliResult<Resource> {
    match kind {
        ResourceKind::Coherence => Ok(Resource::Coherence { dim }),
        ResourceKind::Entanglement => match file.dims.as_slice() {
            &[da, db] if da == db => Ok(Resource::Entanglement {
                dim_a: da,
                dim_b: db,
            }),
            dims => Err(unsupported(format!(
                "entanglement needs equal dims, got {dims:?}"
            ))),
        },
    }
}

/// The pure maximal resource state held in a sigma file.
fn maximal_sigma(
    rho_dim: usize,
    path: &Path,
    resource: Resource,
) -> CliResult<(PureState, String)> {
    let (file, sigma) = read_state(path)?;
    if sigma.dim() != rho_dim {
        return Err(CliError::BadSigma(format!(
            "sigma has dimension {}, rho has {rho_dim}",
            sigma.dim()
        )));
    }
    if sigma.purity() < 1.0 - PURE_SIGMA_TOL {
        return Err(CliError::BadSigma(format!(
            "purity {} is below 1",
            sigma.purity()
        )));
    }
    let (_, vectors) = sigma.eigen();
    let phi = PureState::normalized(vectors.column(0).into_owned())?;
    match resource {
        Resource::Coherence { dim } => {
            let target = 1.0 / dim as f64;
            if let Some(p) = phi
                .amplitudes()
                .iter()
                .map(|z| z.norm_sqr())
                .find(|p| (p - target).abs() > PURE_SIGMA_TOL)
            {
                return Err(CliError::BadSigma(format!(
                    "basis weight {p} differs from 1/{dim}"
                )));
            }
        }
        Resource::Entanglement { dim_a, dim_b } => {
            if file.dims.as_slice() != [dim_a, dim_b] {
                return Err(CliError::BadSigma(
                    "sigma dims differ from the state's".into(),
                ));
            }
            MaxEntWitness::from_vector(&phi, dim_a)
                .map_err(|e| CliError::BadSigma(e.to_string()))?;
        }
    }
    Ok((phi, digest([sigma.matrix()])))
}

#[derive(Serialize)]
struct OptimizeJson {
    disadvantage: f64,
    deficiency_cross_check: f64,
    simulated_p_succ: f64,
    sum_residual: f64,
}

#[derive(Serialize)]
struct DiscriminateReport {
    header: Header,
    resource: Resource,
    samples: usize,
    analytic_fidelity: f64,
    empirical_min: f64,
    sampled_min: f64,
    constructed_p_succ: f64,
    p_succ_sigma: f64,
    in_omega: bool,
    ratio_form: Option<f64>,
    simplified_form: f64,
    form_difference: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    optimize: Option<OptimizeJson>,
}

pub fn discriminate(a: &DiscriminateArgs) -> CliResult<u8> {
    let (file, rho) = read_state(&a.state)?;
    let mut header = Header::new("discriminate", a.seed)
        .tolerance("omega_membership", OMEGA_TOL)
        .tolerance("simulation", SIMULATION_TOL)
        .input("state", digest([rho.matrix()]));
    let mut rng = substream(a.seed, "discriminate");
    let (resource, sigma, optimize) = match (a.optimize, &a.sigma) {
        (Some(kind), _) => {
            let resource = resource_for(kind, &file, rho.dim())?;
            let d = operational_disadvantage(&rho, resource, &mut rng)?;
            let opt = OptimizeJson {
                disadvantage: d.value,
                deficiency_cross_check: d.deficiency_cross_check,
                simulated_p_succ: d.simulated,
                sum_residual: d.residual,
            };
            (resource, d.witness, Some(opt))
        }
        (None, Some(path)) => {
            let kind = a.resource.unwrap_or(if file.dims.len() == 2 {
                ResourceKind::Entanglement
            } else {
                ResourceKind::Coherence
            });
            let resource = resource_for(kind, &file, rho.dim())?;
            let (sigma, sigma_digest) = maximal_sigma(rho.dim(), path, resource)?;
            header = header.input("sigma", sigma_digest);
            (resource, sigma, None)
        }
        (None, None) => {
            return Err(CliError::Core(Error::InvalidArgument(
                "need --sigma or --optimize".into(),
            )))
        }
    };
    let omega = min_over_omega(&rho, &sigma, a.samples, &mut rng)?;
    let d = rho.dim();
    let frame = haar_unitary(d, &mut rng);
    let basis: Vec<_> = (0..d).map(|i| frame.column(i).into_owned()).collect();
    let strategy = build_perfect_strategy(&sigma, &vec![1.0 / d as f64; d], &basis, &mut rng)?;
    let game = play(&strategy, &rho, &sigma)?;
    let report = DiscriminateReport {
        header,
        resource,
        samples: a.samples,
        analytic_fidelity: omega.analytic,
        empirical_min: omega.empirical_min,
        sampled_min: omega.sampled_min,
        constructed_p_succ: omega.constructed,
        p_succ_sigma: game.p_succ_sigma,
        in_omega: game.in_omega,
        ratio_form: game.ratio,
        simplified_form: game.p_succ_rho,
        form_difference: game.ratio.map(|r| (r - game.p_succ_rho).abs()),
        optimize,
    };
    emit(
        a.out.as_deref(),
        &format!("discriminate-{}.json", a.seed),
        &to_json(&report),
    )?;
    Ok(exit::OK)
}

pub fn selftest(a: &SelftestArgs) -> CliResult<u8> {
    let (report, timings) = run_selftest(a.suite, a.seed);
    print!("{}", table(&report, None));
    for (id, t) in &timings.0 {
        eprintln!("criterion {id:>2}: {:.1}s", t.as_secs_f64());
    }
    let name = format!(
        "selftest-{}-{}.json",
        match a.suite {
            crate::suite::SuiteKind::Quick => "quick",
            crate::suite::SuiteKind::Full => "full",
        },
        a.seed
    );
    if let Some(path) = output_path(a.out.as_deref(), &name) {
        write_text(&path, &report.to_json())?;
    }
    Ok(if report.passed {
        exit::OK
    } else {
        exit::TEST_FAILURE
    })
}
