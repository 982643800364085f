use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use womble::boundary::{blv, classify_boundaries, effect_table, BlvResult};
use womble::diagnostics::{moran_permutation_test, pearson_residuals, ResidualType};
use womble::graph::{build_graph, compute_border_metrics, DissimilarityData};
use womble::mcmc::{
    dic, gelman_rubin, risk_summary, run_chains, summarize_params, ChainConfig, FixedBlocks, ObservedData,
    PosteriorSamples,
};
use womble::simulate::{default_partition, lattice, run_study, PairSet, SimConfig};
use womble::AreaGraph;

use crate::args::{BlvArgs, ChainArgs, DiagnoseArgs, FitArgs, InputArgs, PairChoice, SimulateArgs, WeightChoice};
use crate::config::{read_config, render_config};
use crate::error::{invalid, CliError, CliResult};
use crate::io::*;

pub const RUN_CONFIG: &str = "run_config.txt";

/// Everything a fit needs, loaded and validated.
pub struct Inputs {
    pub graph: AreaGraph,
    pub data: ObservedData<f64>,
    pub dis: DissimilarityData<f64>,
}

pub fn load_inputs(input: &InputArgs) -> CliResult<Inputs> {
    let areas = read_areas(&input.areas)?;
    let adjacency = read_adjacency(&input.adjacency, &areas.ids)?;
    let mut graph = build_graph(areas.ids.clone(), adjacency)?;
    if let Some(path) = &input.geojson {
        graph = graph.with_geometry(read_geojson(path, &areas.ids)?)?;
    }
    let (names, covariates) = areas.select(input.metrics.as_deref())?;
    let dis = if names.is_empty() {
        DissimilarityData::empty(&graph)
    } else {
        compute_border_metrics(&graph, names, &covariates)?
    };
    let data = ObservedData::new(areas.y, areas.e)?;
    Ok(Inputs { graph, data, dis })
}

pub fn chain_config(args: &ChainArgs) -> ChainConfig<f64> {
    ChainConfig {
        n_chains: args.chains,
        burn_in: args.burnin,
        keep: args.keep,
        thin: args.thin,
        seed: args.seed,
        max_boundary_fraction: args.max_boundary_fraction,
        ..Default::default()
    }
}

fn chain_pairs(args: &ChainArgs) -> Vec<(String, String)> {
    vec![
        ("chains".into(), args.chains.to_string()),
        ("burnin".into(), args.burnin.to_string()),
        ("keep".into(), args.keep.to_string()),
        ("thin".into(), args.thin.to_string()),
        ("seed".into(), args.seed.to_string()),
        ("max-boundary-fraction".into(), args.max_boundary_fraction.to_string()),
    ]
}

fn input_pairs(input: &InputArgs, dis: &DissimilarityData<f64>) -> Vec<(String, String)> {
    let mut p = vec![
        ("areas".into(), input.areas.display().to_string()),
        ("adjacency".into(), input.adjacency.display().to_string()),
    ];
    if let Some(g) = &input.geojson {
        p.push(("geojson".into(), g.display().to_string()));
    }
    p.push(("metrics".into(), dis.metric_names().join(",")));
    p
}

fn prepare_out(out: &Path) -> CliResult<()> {
    fs::create_dir_all(out).map_err(|e| CliError::io(out, e))
}

/// BLV flagging rule: `c1=<cutoff>` (strictly above) or `c2=<percent>`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BlvRule {
    Cutoff(f64),
    TopPercent(f64),
}

impl BlvRule {
    pub fn parse(s: &str) -> CliResult<Self> {
        let (k, v) = s.split_once('=').ok_or_else(|| invalid(format!("BLV rule `{s}` must be c1=<value> or c2=<value>")))?;
        let v: f64 = v.trim().parse().map_err(|_| invalid(format!("BLV rule `{s}` has a non-numeric value")))?;
        match k.trim() {
            "c1" => Ok(BlvRule::Cutoff(v)),
            "c2" => Ok(BlvRule::TopPercent(v)),
            other => Err(invalid(format!("unknown BLV rule `{other}`; use c1 or c2"))),
        }
    }

    pub fn flags(&self, r: &BlvResult<f64>) -> CliResult<Vec<bool>> {
        match *self {
            BlvRule::Cutoff(c1) => Ok(r.rule_a(c1)),
            BlvRule::TopPercent(c2) => Ok(r.rule_b(c2)?),
        }
    }
}

fn log(verbose: u8, msg: impl AsRef<str>) {
    if verbose > 0 {
        eprintln!("{}", msg.as_ref());
    }
}

/// Output of a completed fit, kept for callers that want more than files.
pub struct FitOutcome {
    pub samples: PosteriorSamples<f64>,
    pub inputs: Inputs,
}

fn summary_rows(samples: &PosteriorSamples<f64>, dis: &DissimilarityData<f64>) -> Vec<SummaryRow> {
    summarize_params(samples, dis.metric_names())
        .into_iter()
        .map(|s| SummaryRow {
            param: s.param,
            chain: s.chain.map_or_else(|| "all".to_string(), |c| c.to_string()),
            median: s.median,
            mean: s.mean,
            ci_lower: s.ci_lower,
            ci_upper: s.ci_upper,
            ess: s.ess,
        })
        .collect()
}

fn convergence_rows(samples: &PosteriorSamples<f64>, dis: &DissimilarityData<f64>) -> Vec<ConvergenceRow> {
    let chains = &samples.chains;
    let nc = chains.len() as f64;
    let mean_acc = |f: &dyn Fn(&womble::mcmc::AcceptanceReport) -> f64| Some(chains.iter().map(|c| f(&c.acceptance)).sum::<f64>() / nc);
    let mut rows = vec![
        ConvergenceRow { param: "phi".into(), psrf: None, acceptance: mean_acc(&|a| a.phi) },
        ConvergenceRow {
            param: "mu".into(),
            psrf: gelman_rubin(&chains.iter().map(|c| c.mu.clone()).collect::<Vec<_>>()),
            acceptance: None,
        },
        ConvergenceRow {
            param: "tau2".into(),
            psrf: gelman_rubin(&chains.iter().map(|c| c.tau2.clone()).collect::<Vec<_>>()),
            acceptance: mean_acc(&|a| a.tau2),
        },
    ];
    let q = samples.q;
    for (i, name) in dis.metric_names().iter().enumerate() {
        let per_chain: Vec<Vec<f64>> = chains.iter().map(|c| c.alpha.chunks(q).map(|a| a[i]).collect()).collect();
        rows.push(ConvergenceRow {
            param: format!("alpha_{name}"),
            psrf: gelman_rubin(&per_chain),
            acceptance: mean_acc(&|a| a.alpha.get(i).copied().unwrap_or(f64::NAN)),
        });
    }
    rows.push(ConvergenceRow {
        param: "deviance".into(),
        psrf: gelman_rubin(&chains.iter().map(|c| c.deviance.clone()).collect::<Vec<_>>()),
        acceptance: None,
    });
    rows
}

fn run_fit(
    input: &InputArgs,
    chain: &ChainArgs,
    baseline: Option<BlvRule>,
    out: &Path,
    mut pairs: Vec<(String, String)>,
    verbose: u8,
) -> CliResult<FitOutcome> {
    let inputs = load_inputs(input)?;
    let (graph, data, dis) = (&inputs.graph, &inputs.data, &inputs.dis);
    log(
        verbose,
        format!("{} areas, {} borders, {} components, {} metrics", graph.n(), graph.n_borders(), graph.n_components(), dis.q()),
    );
    let mut config = chain_config(chain);
    if baseline.is_some() {
        config.fixed = FixedBlocks { alpha: Some(vec![0.0; dis.q()]), ..Default::default() };
    }
    prepare_out(out)?;
    let samples = run_chains(data, graph, dis, &config)?;
    log(verbose, format!("retained {} draws", samples.n_draws()));

    write_rows(&out.join("posterior_summary.csv"), &summary_rows(&samples, dis))?;
    write_rows(&out.join("convergence.csv"), &convergence_rows(&samples, dis))?;

    let ids = graph.area_ids();
    let risk = risk_summary(&samples);
    let risk_rows: Vec<RiskRow> = risk
        .iter()
        .zip(ids)
        .map(|(r, id)| RiskRow { area_id: id.clone(), median: r.median, ci_lower: r.ci_lower, ci_upper: r.ci_upper })
        .collect();
    write_rows(&out.join("risk.csv"), &risk_rows)?;

    let set = classify_boundaries(&samples)?;
    let medians: Vec<f64> = risk.iter().map(|r| r.median).collect();
    let blv_values = blv(&medians, graph)?;
    let boundary_rows: Vec<BoundaryRow> = graph
        .borders()
        .iter()
        .zip(&set.borders)
        .zip(&blv_values.values)
        .map(|((&(k, j), b), &v)| BoundaryRow {
            area_id_1: ids[k].clone(),
            area_id_2: ids[j].clone(),
            w_median: b.w_median,
            w_mean: b.w_mean,
            is_boundary: b.is_boundary,
            blv: v,
        })
        .collect();
    write_rows(&out.join("boundaries.csv"), &boundary_rows)?;

    if dis.q() > 0 {
        let effects: Vec<EffectCsvRow> = effect_table(&samples, dis)?
            .into_iter()
            .map(|e| EffectCsvRow {
                metric: e.metric,
                estimate: e.estimate,
                ci_lower: e.ci_lower,
                ci_upper: e.ci_upper,
                alpha_min: e.alpha_min,
                effect: e.effect.to_string(),
            })
            .collect();
        write_rows(&out.join("effects.csv"), &effects)?;
    }

    let d = dic(&samples, data)?;
    write_rows(
        &out.join("dic.csv"),
        &[DicRow { dic: d.dic, p_d: d.p_d, mean_deviance: d.mean_deviance, boundaries: set.boundary_count }],
    )?;

    let w_mean: Vec<f64> = set.borders.iter().map(|b| b.w_mean).collect();
    let boundary_flags: Vec<bool> = set.borders.iter().map(|b| b.is_boundary).collect();
    if let Some(rule) = baseline {
        let flags = rule.flags(&blv_values)?;
        let rows: Vec<BlvRow> = graph
            .borders()
            .iter()
            .zip(&blv_values.values)
            .zip(&flags)
            .map(|((&(k, j), &v), &f)| BlvRow { area_id_1: ids[k].clone(), area_id_2: ids[j].clone(), blv: v, flagged: f })
            .collect();
        write_rows(&out.join("blv.csv"), &rows)?;
        if let Some(overlay) = boundary_overlay(graph, &flags, &w_mean) {
            write_text(&out.join("blv.geojson"), &overlay.to_string())?;
        }
    } else if let Some(overlay) = boundary_overlay(graph, &boundary_flags, &w_mean) {
        write_text(&out.join("boundaries.geojson"), &overlay.to_string())?;
    }

    pairs.splice(0..0, input_pairs(input, dis));
    pairs.extend(chain_pairs(chain));
    pairs.push(("out".into(), out.display().to_string()));
    write_text(&out.join(RUN_CONFIG), &render_config(&pairs))?;
    Ok(FitOutcome { samples, inputs })
}

pub fn cmd_fit(args: &FitArgs, verbose: u8) -> CliResult<FitOutcome> {
    let rule = args.baseline_blv.as_deref().map(BlvRule::parse).transpose()?;
    let extra = args.baseline_blv.iter().map(|r| ("baseline-blv".to_string(), r.clone())).collect();
    run_fit(&args.input, &args.chain, rule, &args.out, extra, verbose)
}

pub fn cmd_blv(args: &BlvArgs, verbose: u8) -> CliResult<FitOutcome> {
    let rule = BlvRule::parse(&args.rule)?;
    run_fit(&args.input, &args.chain, Some(rule), &args.out, vec![("rule".into(), args.rule.clone())], verbose)
}

fn parse_list(s: &str, what: &str) -> CliResult<Vec<f64>> {
    s.split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|_| invalid(format!("{what}: `{v}` is not a number"))))
        .collect()
}

fn simulation_base(args: &SimulateArgs) -> CliResult<SimConfig> {
    let (graph, partition) = match (&args.centroids, &args.adjacency) {
        (Some(sites), Some(adjacency)) => {
            let rows: Vec<SiteRow> = read_rows(sites)?;
            let ids: Vec<String> = rows.iter().map(|r| r.area_id.clone()).collect();
            let input = read_adjacency(adjacency, &ids)?;
            let graph = build_graph(ids, input)?.with_centroids(rows.iter().map(|r| [r.x, r.y]).collect())?;
            (graph, rows.iter().map(|r| r.group).collect())
        }
        _ => (lattice(args.rows, args.cols)?, default_partition(args.rows, args.cols)),
    };
    let n = graph.n();
    let expected = match &args.expected_file {
        Some(path) => {
            let rows: Vec<ExpectedRow> = read_rows(path)?;
            let by_id: HashMap<&str, f64> = rows.iter().map(|r| (r.area_id.as_str(), r.e)).collect();
            graph
                .area_ids()
                .iter()
                .map(|id| by_id.get(id.as_str()).copied().ok_or_else(|| invalid(format!("no expected count for area `{id}`"))))
                .collect::<CliResult<Vec<f64>>>()?
        }
        None => vec![args.expected; n],
    };
    Ok(SimConfig {
        graph,
        partition,
        k1: 0.0,
        k2: 0.0,
        kappa: args.kappa,
        field_variance: args.field_variance,
        target_median_correlation: args.target_correlation,
        pairs: match args.pairs {
            PairChoice::All => PairSet::All,
            PairChoice::Adjacent => PairSet::Adjacent,
        },
        expected,
        replicates: args.replicates,
        seed: args.chain.seed,
    })
}

pub fn replicate_file(k1: f64, k2: f64) -> String {
    format!("replicates_k1_{k1}_k2_{k2}.csv")
}

pub fn cmd_simulate(args: &SimulateArgs, verbose: u8) -> CliResult<Vec<ScoreRow>> {
    let k1s = parse_list(&args.k1, "k1")?;
    let k2s = parse_list(&args.k2, "k2")?;
    let base = simulation_base(args)?;
    let chains = chain_config(&args.chain);
    prepare_out(&args.out)?;
    let mut scores = Vec::new();
    for &k1 in &k1s {
        for &k2 in &k2s {
            let cfg = SimConfig { k1, k2, ..base.clone() };
            log(verbose, format!("k1={k1} k2={k2}: {} replicates", cfg.replicates));
            let study = run_study(&cfg, &chains)?;
            let s = &study.score;
            scores.push(ScoreRow {
                k1,
                k2,
                replicates: s.replicates,
                ba: s.ba,
                nba: s.nba,
                bias: s.bias,
                rmse: s.rmse,
                ba_se: s.ba_se,
                nba_se: s.nba_se,
                bias_se: s.bias_se,
                rmse_se: s.rmse_se,
            });
            let rows: Vec<ReplicateRow> = study
                .replicates
                .iter()
                .map(|r| ReplicateRow {
                    replicate: r.replicate,
                    ba: r.ba,
                    nba: r.nba,
                    bias: r.bias,
                    rmse: r.rmse,
                    boundaries_detected: r.boundaries_detected,
                    true_boundaries: r.true_boundaries,
                    alpha_median: r.alpha_median,
                })
                .collect();
            write_rows(&args.out.join(replicate_file(k1, k2)), &rows)?;
        }
    }
    write_rows(&args.out.join("scorecard.csv"), &scores)?;

    let mut pairs: Vec<(String, String)> = vec![("k1".into(), args.k1.clone()), ("k2".into(), args.k2.clone())];
    match (&args.centroids, &args.adjacency) {
        (Some(c), Some(a)) => {
            pairs.push(("centroids".into(), c.display().to_string()));
            pairs.push(("adjacency".into(), a.display().to_string()));
        }
        _ => {
            pairs.push(("rows".into(), args.rows.to_string()));
            pairs.push(("cols".into(), args.cols.to_string()));
        }
    }
    pairs.push(("replicates".into(), args.replicates.to_string()));
    match &args.expected_file {
        Some(p) => pairs.push(("expected-file".into(), p.display().to_string())),
        None => pairs.push(("expected".into(), args.expected.to_string())),
    }
    pairs.push(("kappa".into(), args.kappa.to_string()));
    pairs.push(("field-variance".into(), args.field_variance.to_string()));
    pairs.push(("target-correlation".into(), args.target_correlation.to_string()));
    pairs.push((
        "pairs".into(),
        match args.pairs {
            PairChoice::All => "all",
            PairChoice::Adjacent => "adjacent",
        }
        .into(),
    ));
    pairs.extend(chain_pairs(&args.chain));
    pairs.push(("out".into(), args.out.display().to_string()));
    write_text(&args.out.join(RUN_CONFIG), &render_config(&pairs))?;
    Ok(scores)
}

pub fn cmd_diagnose(args: &DiagnoseArgs, verbose: u8) -> CliResult<MoranRow> {
    let recorded: HashMap<String, String> = read_config(&args.fit.join(RUN_CONFIG))?.into_iter().collect();
    let path_of = |given: &Option<PathBuf>, key: &str| -> CliResult<PathBuf> {
        given
            .clone()
            .or_else(|| recorded.get(key).map(PathBuf::from))
            .ok_or_else(|| invalid(format!("the fit did not record `{key}`; pass --{key}")))
    };
    let areas = read_areas(&path_of(&args.areas, "areas")?)?;
    let adjacency = read_adjacency(&path_of(&args.adjacency, "adjacency")?, &areas.ids)?;
    let graph = build_graph(areas.ids.clone(), adjacency)?;

    let risk_rows: Vec<RiskRow> = read_rows(&args.fit.join("risk.csv"))?;
    let by_id: HashMap<&str, f64> = risk_rows.iter().map(|r| (r.area_id.as_str(), r.median)).collect();
    let risk = areas
        .ids
        .iter()
        .map(|id| by_id.get(id.as_str()).copied().ok_or_else(|| invalid(format!("risk.csv has no row for area `{id}`"))))
        .collect::<CliResult<Vec<f64>>>()?;

    let weights = match args.weights {
        WeightChoice::All => vec![true; graph.n_borders()],
        WeightChoice::Fitted => {
            let rows: Vec<BoundaryRow> = read_rows(&args.fit.join("boundaries.csv"))?;
            let mut kept = vec![true; graph.n_borders()];
            for r in rows {
                let (Some(k), Some(j)) = (graph.index_of(&r.area_id_1), graph.index_of(&r.area_id_2)) else {
                    return Err(invalid(format!("boundaries.csv names unknown areas `{}`/`{}`", r.area_id_1, r.area_id_2)));
                };
                let b = graph
                    .border_index(k, j)
                    .ok_or_else(|| invalid(format!("`{}`-`{}` is not a border", r.area_id_1, r.area_id_2)))?;
                kept[b] = !r.is_boundary;
            }
            kept
        }
    };

    let seed = match args.seed {
        Some(s) => s,
        None => recorded
            .get("seed")
            .map(|s| s.parse::<u64>().map_err(|_| invalid("recorded seed is not an integer")))
            .transpose()?
            .unwrap_or(1),
    };
    let data = ObservedData::new(areas.y, areas.e)?;
    let residuals = pearson_residuals(&data, &risk)?;
    log(verbose, format!("{} permutations", args.permutations));
    let result = moran_permutation_test(&residuals, &graph, &weights, args.permutations, seed, ResidualType::Pearson)?;
    let row = MoranRow {
        statistic: result.statistic,
        p_value: result.p_value,
        n_permutations: result.n_permutations,
        residual_type: result.residual_type.to_string(),
        weights: match args.weights {
            WeightChoice::All => "all",
            WeightChoice::Fitted => "fitted",
        }
        .into(),
    };
    let out = args.out.clone().unwrap_or_else(|| args.fit.clone());
    prepare_out(&out)?;
    write_rows(&out.join("moran.csv"), std::slice::from_ref(&row))?;
    Ok(row)
}
