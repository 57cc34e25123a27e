use crate::{Common, Failure, Format, Outcome};
use clap::Args;
use rayon::prelude::*;
use serde::Serialize;
use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;
use wardrop_signal::io::tntp::{parse_tntp, TntpParams};
use wardrop_signal::support::{enumerate_supports_two_state, EnumOptions};

const DEFAULT_TNTP: &str = "/root/data/SiouxFalls_net.tntp";

#[derive(Args, Debug)]
pub struct ExperimentArgs {
    /// TNTP network file; falls back to $WARDROP_SIOUX_TNTP.
    #[arg(long)]
    instance: Option<PathBuf>,
    /// Comma-separated fractions of randomized links.
    #[arg(long, default_value = "0.05,0.2,0.5,1.0")]
    tau: String,
    /// Runs per tau; run r uses seed + r.
    #[arg(long, default_value_t = 50)]
    runs: u64,
    #[arg(long, default_value_t = 1e5)]
    demand: f64,
    /// Source node label in the file.
    #[arg(long, default_value_t = 1)]
    source: usize,
    #[arg(long, default_value_t = 19)]
    target: usize,
    #[command(flatten)]
    common: Common,
}

#[derive(Serialize, Debug)]
struct Run {
    tau: f64,
    seed: u64,
    supports: Option<usize>,
    regions: Option<usize>,
    max_residual: Option<f64>,
    error: Option<String>,
}

#[derive(Serialize, Debug)]
struct Bin {
    tau: f64,
    supports: usize,
    count: usize,
    seeds: Vec<u64>,
}

fn histogram(runs: &[Run]) -> Vec<Bin> {
    let mut bins: BTreeMap<(u64, usize), Bin> = BTreeMap::new();
    for r in runs {
        let Some(k) = r.supports else { continue };
        let bin = bins.entry((r.tau.to_bits(), k)).or_insert_with(|| Bin {
            tau: r.tau,
            supports: k,
            count: 0,
            seeds: Vec::new(),
        });
        bin.count += 1;
        bin.seeds.push(r.seed);
    }
    let mut out: Vec<Bin> = bins.into_values().collect();
    out.sort_by(|a, b| a.tau.total_cmp(&b.tau).then(a.supports.cmp(&b.supports)));
    out
}

pub fn run(args: &ExperimentArgs) -> Outcome {
    let format = args.common.format(Format::Csv, &[Format::Csv, Format::Json])?;
    let path = args
        .instance
        .clone()
        .or_else(|| std::env::var_os("WARDROP_SIOUX_TNTP").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_TNTP));
    let text = std::fs::read_to_string(&path)
        .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))?;
    let taus = crate::parse_weights(&args.tau)?;
    if let Some(t) = taus.iter().find(|t| !(0.0..=1.0).contains(*t)) {
        return Err(Failure::Usage(format!("tau = {t} outside [0, 1]")));
    }
    let jobs: Vec<(f64, u64)> = taus
        .iter()
        .flat_map(|&tau| (0..args.runs).map(move |r| (tau, args.common.seed + r)))
        .collect();
    let eo = EnumOptions { solve: args.common.solve_options(), ..EnumOptions::default() };

    let mut runs: Vec<Run> = jobs
        .par_iter()
        .map(|&(tau, seed)| {
            let params = TntpParams {
                tau,
                seed,
                demand: args.demand,
                source: args.source,
                target: args.target,
                ..TntpParams::default()
            };
            let outcome = parse_tntp(&text, &params)
                .and_then(|t| enumerate_supports_two_state(&t.instance, &EnumOptions { seed, ..eo }));
            match outcome {
                Ok(atlas) => Run {
                    tau,
                    seed,
                    supports: Some(atlas.supports().into_iter().collect::<BTreeSet<_>>().len()),
                    regions: Some(atlas.regions.len()),
                    max_residual: Some(atlas.midpoint_residuals.iter().copied().fold(0.0, f64::max)),
                    error: None,
                },
                Err(e) => Run { tau, seed, supports: None, regions: None, max_residual: None, error: Some(e.to_string()) },
            }
        })
        .collect();
    runs.sort_by(|a, b| a.tau.total_cmp(&b.tau).then(a.seed.cmp(&b.seed)));
    let bins = histogram(&runs);

    let text = match format {
        Format::Json => serde_json::to_string_pretty(&serde_json::json!({ "runs": runs, "histogram": bins }))
            .expect("output serializes"),
        _ => {
            let mut out = String::from("tau,supports,count,seeds\n");
            for b in &bins {
                let seeds: Vec<String> = b.seeds.iter().map(u64::to_string).collect();
                out.push_str(&format!("{},{},{},{}\n", b.tau, b.supports, b.count, seeds.join(";")));
            }
            out
        }
    };
    args.common.emit(&text)?;
    let failed: Vec<String> = runs
        .iter()
        .filter_map(|r| r.error.as_ref().map(|e| format!("tau {} seed {}: {e}", r.tau, r.seed)))
        .collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Solver(failed.join("; ")))
    }
}
