use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use antichain_core::acceptance::{self, random_antichain_above, AcceptanceConfig};
use antichain_core::asymptotics::{estimate, rational_to_f64, t1, t1_closed_form_ratio, t1_hypergeometric, t2};
use antichain_core::clt_sim::{
    exact_defect_census, exact_defect_moments, normality_diagnostics, sample_defects, ChainConfig,
    MIN_NORMALITY_SAMPLES,
};
use antichain_core::containers::container_trials;
use antichain_core::exact_count::{
    count_antichains_brute, count_antichains_layered, SubposetSpec, BRUTE_MAX_POINTS,
};
use antichain_core::isoperimetry::{
    estimate_constants, fully_matched_count, log_concavity_check, motzkin_gap_check, tsai_scd, validate_scd,
    verify_clements_lindstrom, ConstantsGrid, EmpiricalConstants, CONSTANTS_VERSION, DEFAULT_SAMPLES,
};
use antichain_core::kp::{kp_check_all, TRUNCATION_NOTE};
use antichain_core::llt::{llt_layer_ratio, llt_table, to_csv, LayerRatioPrediction};
use antichain_core::polymer::{cluster_sums, partition_function_exact, ModelKind, PolymerModel};
use antichain_core::report::rational_string;
use antichain_core::{Error, Result};
use clap::{Parser, Subcommand, ValueEnum};
use num_bigint::BigInt;
use num_rational::BigRational;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

/// Verification suites for antichain counts in products of chains.
#[derive(Debug, Parser)]
#[command(name = "antichains", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    opts: Opts,
}

#[derive(Debug, Clone, Serialize, clap::Args)]
struct Opts {
    /// Chain length.
    #[arg(long, global = true)]
    t: Option<usize>,
    /// Dimension.
    #[arg(long, global = true)]
    n: Option<usize>,
    /// Largest dimension for sweeps
    #[arg(long, global = true)]
    n_max: Option<usize>,
    /// Largest cluster size
    #[arg(long, global = true)]
    cluster_size_max: Option<usize>,
    #[arg(long, global = true, default_value_t = 2024)]
    seed: u64,
    /// Recorded samples per sampler run
    #[arg(long, global = true)]
    samples: Option<usize>,
    /// Sweeps discarded before recording
    #[arg(long, global = true)]
    burn_in: Option<u64>,
    /// Report destination; standard output when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[arg(long, global = true, default_value = "data/constants.json")]
    constants_file: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, Serialize, Subcommand)]
#[serde(rename_all = "kebab-case")]
enum Command {
    /// Count antichains of a layer range, cross-checked by subset scan when small.
    Count {
        /// Lowest layer of the range, 0 when absent
        #[arg(long)]
        k_low: Option<usize>,
        /// Highest layer of the range, the top rank when absent
        #[arg(long)]
        k_high: Option<usize>,
    },
    /// Partition-function identities of the polymer models.
    Identities,
    /// Cluster-expansion sums by cluster size.
    Clusters,
    /// First-order cluster sum against its hypergeometric and asymptotic forms.
    Asympt,
    /// Shadow-compression, log-concavity and middle-layer checks.
    Isoperimetry,
    /// Symmetric chain decomposition by bracket structures.
    Scd,
    /// Container constructions on two consecutive layers.
    Containers,
    /// Local limit estimates of layer sizes.
    Llt,
    /// Markov-chain sampling of middle-layer antichains.
    CltSim,
    /// Truncated cluster-convergence certificates.
    Kp,
    /// Estimate the isoperimetric constants and write them to the constants file.
    Constants,
    /// Run every acceptance criterion.
    AllAcceptance,
}

struct Report {
    pass: bool,
    result: Value,
    csv: Option<String>,
}

impl Report {
    fn json(pass: bool, result: impl Serialize) -> Result<Self> {
        Ok(Report { pass, result: serde_json::to_value(result)?, csv: None })
    }
}

fn q(v: &BigRational) -> String {
    rational_string(v)
}

fn count(o: &Opts, k_low: Option<usize>, k_high: Option<usize>) -> Result<Report> {
    let (t, n) = (o.t.unwrap_or(3), o.n.unwrap_or(3));
    let top = t.saturating_sub(1) * n;
    let spec = SubposetSpec::range(t, n, k_low.unwrap_or(0), k_high.unwrap_or(top));
    let layered = count_antichains_layered(&spec)?;
    let brute = if layered.points <= BRUTE_MAX_POINTS { Some(count_antichains_brute(&spec)?.count) } else { None };
    let agree = brute.as_ref().map_or(true, |b| *b == layered.count);
    Report::json(
        agree,
        json!({
            "count": layered.count.to_string(),
            "method": layered.method,
            "points": layered.points,
            "subset_scan": brute.map(|b| b.to_string()),
            "agree": agree,
        }),
    )
}

fn identities(o: &Opts) -> Result<Report> {
    let n = o.n.unwrap_or(2);
    if n < 2 {
        return Err(Error::Domain(format!("identities need n >= 2, got {n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(o.seed);
    let pow2 = |k: usize| BigRational::from_integer(BigInt::from(1) << k);
    let mut rows = Vec::new();
    let mut pass = true;
    let mut record = |model: &PolymerModel, spec: SubposetSpec, name: &str| -> Result<()> {
        let xi = partition_function_exact(model)?;
        let lhs = pow2(model.middle_size()) * &xi;
        let alpha = count_antichains_layered(&spec)?.count;
        let holds = lhs == BigRational::from_integer(alpha.clone().into());
        pass &= holds;
        rows.push(json!({
            "model": name,
            "exclusion": spec.exclusion.iter().map(|p| p.to_string()).collect::<Vec<_>>(),
            "partition_function": q(&xi),
            "middle_size": model.middle_size(),
            "scaled": q(&lhs),
            "antichains": alpha.to_string(),
            "holds": holds,
        }));
        Ok(())
    };
    record(&PolymerModel::central(n)?, SubposetSpec::range(3, n, n - 1, n + 1), "central")?;
    let mut exclusions = vec![Vec::new()];
    for _ in 0..5 {
        exclusions.push(random_antichain_above(n, &mut rng)?);
    }
    for x in exclusions {
        let spec = SubposetSpec::range(3, n, n - 2, n).with_exclusion(x.clone());
        record(&PolymerModel::three_layer(n, &x, false)?, spec, "three-layer")?;
    }
    Report::json(pass, rows)
}

fn clusters(o: &Opts) -> Result<Report> {
    let lo = o.n.unwrap_or(3);
    let hi = o.n_max.unwrap_or(lo);
    let cap = o.cluster_size_max.unwrap_or(2);
    let mut rows = Vec::new();
    let mut csv = String::from("n,size,sum,abs_sum,ordered_clusters,closed_form,matches\n");
    let mut pass = true;
    for n in lo..=hi {
        let sums = cluster_sums(&PolymerModel::central(n)?, cap)?;
        for k in 1..=cap {
            let closed = match k {
                1 => Some(t1(n)?),
                2 => Some(t2(n)?),
                _ => None,
            };
            let matches = closed.as_ref().map(|c| *c == sums.by_size[k]);
            pass &= matches.unwrap_or(true);
            let closed_s = closed.as_ref().map(q);
            let _ = writeln!(
                csv,
                "{n},{k},{},{},{},{},{}",
                q(&sums.by_size[k]),
                q(&sums.abs_by_size[k]),
                sums.counts[k],
                closed_s.clone().unwrap_or_default(),
                matches.map(|m| m.to_string()).unwrap_or_default()
            );
            rows.push(json!({
                "n": n,
                "size": k,
                "sum": q(&sums.by_size[k]),
                "sum_f64": rational_to_f64(&sums.by_size[k]),
                "abs_sum": q(&sums.abs_by_size[k]),
                "abs_sum_f64": rational_to_f64(&sums.abs_by_size[k]),
                "ordered_clusters": sums.counts[k].to_string(),
                "closed_form": closed_s,
                "matches": matches,
            }));
        }
    }
    Ok(Report { pass, result: Value::Array(rows), csv: Some(csv) })
}

fn asympt(o: &Opts) -> Result<Report> {
    let n_max = o.n_max.unwrap_or(30);
    let mut mismatches = Vec::new();
    for n in 1..=n_max {
        if t1(n)? != t1_hypergeometric(n)? {
            mismatches.push(n);
        }
    }
    let ns = [50, 100, 200, 400];
    let mut ratios = Vec::new();
    for n in ns {
        ratios.push(json!({ "n": n, "ratio": t1_closed_form_ratio(n)? }));
    }
    let single = o.n.map(estimate).transpose()?;
    Report::json(
        mismatches.is_empty(),
        json!({
            "hypergeometric_checked_up_to": n_max,
            "hypergeometric_mismatches": mismatches,
            "closed_form_ratios": ratios,
            "estimate": single,
        }),
    )
}

fn isoperimetry(o: &Opts) -> Result<Report> {
    let (t, n) = (o.t.unwrap_or(3), o.n.unwrap_or(3));
    let cl = verify_clements_lindstrom(t, n, o.samples.unwrap_or(DEFAULT_SAMPLES), o.seed)?;
    let lc = log_concavity_check(t, n)?;
    let mut pass = cl.holds() && lc.holds;
    let gap = if t == 3 && n >= 2 {
        let g = motzkin_gap_check(n)?;
        pass &= g.holds;
        Some(g)
    } else {
        None
    };
    let matched = if t == 3 && n >= 2 { Some(fully_matched_count(n)?) } else { None };
    Report::json(
        pass,
        json!({ "clements_lindstrom": cl, "log_concavity": lc, "middle_gap": gap, "fully_matched": matched }),
    )
}

fn scd(o: &Opts) -> Result<Report> {
    let (t, n) = (o.t.unwrap_or(3), o.n.unwrap_or(4));
    let chains = tsai_scd(t, n)?;
    let report = validate_scd(t, n, &chains)?;
    let mut csv = String::from("start_rank,length,points\n");
    for c in &chains {
        let pts: Vec<String> = c.points.iter().map(|p| p.to_string()).collect();
        let _ = writeln!(csv, "{},{},{}", c.start_rank(), c.points.len(), pts.join(" "));
    }
    Ok(Report { pass: report.valid, result: json!({ "report": report, "chains": chains }), csv: Some(csv) })
}

fn containers(o: &Opts) -> Result<Report> {
    let lo = o.n.unwrap_or(5);
    let hi = o.n_max.unwrap_or(lo);
    let runs = o.samples.unwrap_or(100);
    let trials: Vec<_> = (lo..=hi).map(|n| container_trials(n, 10 * runs, runs, o.seed)).collect::<Result<_>>()?;
    Report::json(trials.iter().all(|r| r.pass()), trials)
}

fn llt(o: &Opts) -> Result<Report> {
    let (t, n) = (o.t.unwrap_or(3), o.n.unwrap_or(20));
    let hi = o.n_max.unwrap_or(n);
    let mut rows = Vec::new();
    let mut summary = Vec::new();
    for m in n..=hi {
        let table = llt_table(t, m)?;
        let worst = table.iter().map(|r| r.abs_error).fold(0.0, f64::max);
        summary.push(json!({ "n": m, "max_error": worst, "n_max_error": m as f64 * worst }));
        rows.extend(table);
    }
    let ratio: Option<LayerRatioPrediction> = llt_layer_ratio(t, n).ok();
    let pass = ratio.as_ref().map_or(true, |r| r.relative_error < acceptance::LLT_RATIO_TOLERANCE);
    Ok(Report { pass, result: json!({ "summary": summary, "layer_ratio": ratio }), csv: Some(to_csv(&rows)) })
}

fn clt_sim(o: &Opts) -> Result<Report> {
    let n = o.n.unwrap_or(4);
    let mut config = ChainConfig::new(n, o.samples.unwrap_or(100_000), o.seed);
    config.burn_in = o.burn_in;
    let stats = sample_defects(config)?;
    let normality =
        if stats.samples >= MIN_NORMALITY_SAMPLES { Some(normality_diagnostics(&stats)?) } else { None };
    let mut pass = true;
    let exact = if n <= 4 {
        let (mean, var) = exact_defect_moments(n)?;
        let z = (stats.cumulants[0] - rational_to_f64(&mean)) / stats.se_mean;
        pass = z.abs() <= 3.0;
        Some(json!({ "mean": q(&mean), "variance": q(&var), "mean_z": z }))
    } else {
        None
    };
    let census = if n <= 3 { Some(exact_defect_census(n)?) } else { None };
    let mut csv = String::from("defects,count\n");
    for (k, c) in stats.histogram.iter().enumerate() {
        let _ = writeln!(csv, "{k},{c}");
    }
    Ok(Report {
        pass,
        result: json!({ "stats": stats, "normality": normality, "exact": exact, "exact_census": census }),
        csv: Some(csv),
    })
}

fn kp(o: &Opts) -> Result<Report> {
    let n = o.n.unwrap_or(20);
    let cutoff = o.cluster_size_max.unwrap_or(2);
    let constants = EmpiricalConstants::read(&o.constants_file)?;
    let mut csv = String::from("model,vertex,vertex_type,partial_sum,f_target,margin,pass\n");
    let mut all = Vec::new();
    let mut pass = true;
    for kind in [ModelKind::Central, ModelKind::ThreeLayer] {
        let reports = kp_check_all(kind, n, cutoff, &constants.kp())?;
        for r in &reports {
            pass &= r.pass;
            let _ = writeln!(
                csv,
                "{:?},\"{}\",{:?},{:.6e},{:.6e},{:.6e},{}",
                kind, r.vertex, r.vertex_type, r.partial_sum, r.f_target, r.margin, r.pass
            );
        }
        all.extend(reports);
    }
    Ok(Report {
        pass,
        result: json!({ "constants": constants, "note": TRUNCATION_NOTE, "anchors": all }),
        csv: Some(csv),
    })
}

fn constants(o: &Opts) -> Result<Report> {
    let c = estimate_constants(&ConstantsGrid::default())?;
    if let Some(dir) = o.constants_file.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    c.write(&o.constants_file)?;
    Report::json(true, &c)
}

fn all_acceptance(o: &Opts) -> Result<Report> {
    let config = AcceptanceConfig {
        seed: o.seed,
        samples: o.samples.unwrap_or(AcceptanceConfig::default().samples),
        constants_file: o.constants_file.clone(),
    };
    let outcomes = acceptance::run_each(&config, |outcome| eprintln!("{outcome}"));
    let pass = outcomes.iter().all(|x| x.pass);
    let mut csv = String::from("criterion,title,verdict,detail\n");
    for x in &outcomes {
        let _ = writeln!(csv, "{},{},{},\"{}\"", x.id, x.title, if x.pass { "PASS" } else { "FAIL" }, x.detail.replace('"', "'"));
    }
    Ok(Report { pass, result: serde_json::to_value(&outcomes)?, csv: Some(csv) })
}

fn run(cli: &Cli) -> Result<Report> {
    let o = &cli.opts;
    match cli.command {
        Command::Count { k_low, k_high } => count(o, k_low, k_high),
        Command::Identities => identities(o),
        Command::Clusters => clusters(o),
        Command::Asympt => asympt(o),
        Command::Isoperimetry => isoperimetry(o),
        Command::Scd => scd(o),
        Command::Containers => containers(o),
        Command::Llt => llt(o),
        Command::CltSim => clt_sim(o),
        Command::Kp => kp(o),
        Command::Constants => constants(o),
        Command::AllAcceptance => all_acceptance(o),
    }
}

fn render(cli: &Cli, report: Report) -> Result<String> {
    match cli.opts.format {
        Format::Csv => report.csv.ok_or_else(|| Error::Unsupported("this command has no CSV form; use --format json".into())),
        Format::Json => {
            let envelope = json!({
                "command": cli.command,
                "config": cli.opts,
                "constants_version": CONSTANTS_VERSION,
                "pass": report.pass,
                "result": report.result,
            });
            Ok(serde_json::to_string_pretty(&envelope)? + "\n")
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = run(&cli).and_then(|report| {
        let pass = report.pass;
        let text = render(&cli, report)?;
        match &cli.opts.out {
            Some(path) => std::fs::write(path, text)?,
            None => print!("{text}"),
        }
        Ok(pass)
    });
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
