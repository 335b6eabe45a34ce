//! `lipvol`: seeded, reproducible CLI over the library.
//!
//! Exit codes: 0 = all assertions pass, 2 = an assertion-style check failed,
//! 3 = a resource budget was exceeded, 1 = other errors.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use lipvol::exact::{
    count_hom, count_lipschitz_with, ehrhart_c_with, lifting_check, DEFAULT_WORK_BUDGET,
};
use lipvol::experiment::{
    emit_report, run_experiment, ExperimentConfig, ExperimentKind, TRule,
};
use lipvol::graph::{
    components, gen_gnp, gen_gnp_with_p, giant_fraction_fixed_point, make_circular_target,
    make_complete, make_complete_bipartite, make_cycle, make_hypercube, make_path, Graph,
};
use lipvol::mc::{
    annealed_slice_mean, lipschitz_sampler_flatness_survey, quenched_slice_volume, sis_ln_weights,
    sis_log_volume, sis_volume,
};
use lipvol::profile::{neighbor_extremes, ProfileParams};
use lipvol::qseries::{
    one_tail_a, one_tail_a_bruteforce, parse_rational, pochhammer_z_inf, q_pochhammer,
    q_pochhammer_inf, two_tail_sum, zeta_integral,
};
use lipvol::{Error, Result};

#[derive(Parser)]
#[command(name = "lipvol", version, about = "Lipschitz growth constants of finite graphs")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate G(n, d/n) and write its edge list.
    Gen {
        #[arg(long)]
        n: usize,
        /// expected degree; edge probability is d/n
        #[arg(long, default_value_t = 0.0)]
        d: f64,
        /// override the edge probability directly (wins over --d)
        #[arg(long)]
        p: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        /// write the edge list here; stdout when omitted
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exact growth constant via lattice counting and finite differences.
    ExactC {
        /// edge-list file or builtin:<name> (see --help for names)
        #[arg(long, long_help = BUILTIN_HELP)]
        graph: String,
        #[arg(long, default_value_t = DEFAULT_WORK_BUDGET)]
        budget: u64,
        /// also report N_G(h) at this single h
        #[arg(long)]
        h: Option<u32>,
    },
    /// Count homomorphisms into a circular target T_{M,h}.
    Hom {
        #[arg(long, long_help = BUILTIN_HELP)]
        graph: String,
        /// circ:M,h
        #[arg(long)]
        target: String,
        /// run the lifting identity check Hom = M * N(h) instead (needs target circ:L*h,h)
        #[arg(long, default_value_t = false)]
        lifting: bool,
    },
    /// Monte Carlo volume estimators.
    Mc {
        #[arg(long, long_help = BUILTIN_HELP)]
        graph: Option<String>,
        #[arg(long, value_enum)]
        op: McOp,
        #[arg(long, default_value_t = 100_000)]
        samples: u64,
        #[arg(long)]
        seed: Option<u64>,
        /// profile degree parameter (slice / annealed / flatness)
        #[arg(long)]
        d: Option<f64>,
        /// profile window half-width T; default log d
        #[arg(long)]
        t: Option<f64>,
        /// number of coordinates for the annealed mean
        #[arg(long)]
        n: Option<usize>,
        /// log-domain SIS aggregation
        #[arg(long, default_value_t = false)]
        log: bool,
        /// dump per-sample log weights as CSV (op = sis)
        #[arg(long)]
        dump: Option<PathBuf>,
    },
    /// Logistic boundary-layer profile diagnostics.
    Profile {
        #[arg(long)]
        d: f64,
        /// window half-width T; default log d
        #[arg(long)]
        t: Option<f64>,
        #[arg(long, value_enum)]
        check: ProfileCheck,
        #[arg(long, default_value_t = 100_000)]
        replicas: u64,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// q-series identities and asymptotics.
    Qseries {
        /// rational "a/b" or real
        #[arg(long)]
        q: Option<String>,
        #[arg(long, default_value_t = 4)]
        n: usize,
        #[arg(long, default_value_t = 2)]
        r: usize,
        /// truncation order R for the two-tail sum
        #[arg(long = "R", default_value_t = 40)]
        cap_r: usize,
        #[arg(long, value_enum)]
        check: QCheck,
    },
    /// Configured sweeps with JSON + CSV reports.
    Experiment {
        /// flat key = value config file
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        kind: Option<String>,
        #[arg(long)]
        n: Option<usize>,
        /// comma-separated degrees
        #[arg(long)]
        d_list: Option<String>,
        #[arg(long)]
        t_rule: Option<String>,
        #[arg(long)]
        samples: Option<u64>,
        #[arg(long)]
        replicas: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
        /// report base path; writes <base>.json and <base>.csv
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

const BUILTIN_HELP: &str = "Edge-list file, or one of:\n\
  builtin:path:N | builtin:cycle:N | builtin:complete:N\n\
  builtin:kdd:A,B | builtin:hypercube:D | builtin:circ:M,H\n\
  builtin:gnp:N,D,SEED";

#[derive(Clone, Copy, ValueEnum)]
enum McOp {
    Sis,
    Slice,
    Annealed,
    Flatness,
}

#[derive(Clone, Copy, ValueEnum)]
enum ProfileCheck {
    Norm,
    Entropy,
    Badpair,
    Gain,
    Extremes,
}

#[derive(Clone, Copy, ValueEnum)]
enum QCheck {
    Identity,
    Rowsum,
    Twotail,
    Zeta,
    Poch,
}

/// `--seed` wins over `LIPVOL_SEED`; default 0.
fn resolve_seed(flag: Option<u64>) -> Result<u64> {
    if let Some(s) = flag {
        return Ok(s);
    }
    match std::env::var("LIPVOL_SEED") {
        Ok(v) => v
            .parse()
            .map_err(|_| Error::Parse(format!("LIPVOL_SEED is not a 64-bit integer: {v:?}"))),
        Err(_) => Ok(0),
    }
}

fn load_graph(spec: &str) -> Result<Graph> {
    if let Some(name) = spec.strip_prefix("builtin:") {
        let (family, args) = name.split_once(':').unwrap_or((name, ""));
        let nums: Vec<&str> = args.split(',').filter(|s| !s.is_empty()).collect();
        let int = |i: usize| -> Result<usize> {
            nums.get(i)
                .and_then(|s| s.trim().parse().ok())
                .ok_or_else(|| Error::Parse(format!("builtin {family}: bad argument list {args:?}")))
        };
        return match family {
            "path" => make_path(int(0)?),
            "cycle" => make_cycle(int(0)?),
            "complete" => make_complete(int(0)?),
            "kdd" => make_complete_bipartite(int(0)?, int(1)?),
            "hypercube" => make_hypercube(int(0)?),
            "circ" => make_circular_target(int(0)?, int(1)?),
            "gnp" => {
                let d: f64 = nums
                    .get(1)
                    .and_then(|s| s.trim().parse().ok())
                    .ok_or_else(|| Error::Parse("builtin gnp: bad d".into()))?;
                gen_gnp(int(0)?, d, int(2).unwrap_or(0) as u64)
            }
            _ => Err(Error::Parse(format!("unknown builtin graph {family:?}"))),
        };
    }
    let text = std::fs::read_to_string(spec).map_err(|source| Error::Io {
        path: spec.to_string(),
        source,
    })?;
    Graph::from_edge_list(&text)
}

fn parse_circ_target(spec: &str) -> Result<(Graph, usize, u32)> {
    let rest = spec
        .strip_prefix("circ:")
        .ok_or_else(|| Error::Parse(format!("target must be circ:M,h, got {spec:?}")))?;
    let (m, h) = rest
        .split_once(',')
        .ok_or_else(|| Error::Parse("target must be circ:M,h".into()))?;
    let m: usize = m.trim().parse().map_err(|_| Error::Parse("bad M".into()))?;
    let h: u32 = h.trim().parse().map_err(|_| Error::Parse("bad h".into()))?;
    Ok((make_circular_target(m, h as usize)?, m, h))
}

fn print_json(v: &serde_json::Value) {
    println!("{}", serde_json::to_string_pretty(v).expect("json"));
}

fn rational_str(r: &lipvol::qseries::Rational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

fn run(cli: Cli) -> Result<()> {
    match cli.cmd {
        Cmd::Gen { n, d, p, seed, out } => {
            let seed = resolve_seed(seed)?;
            let g = match p {
                Some(p) => gen_gnp_with_p(n, p, seed)?,
                None => gen_gnp(n, d, seed)?,
            };
            let text = g.to_edge_list();
            let comps = components(&g);
            let summary = json!({
                "n": g.vertex_count(),
                "edges": g.edge_count(),
                "components": comps.k,
                "giant_fraction_predicted":
                    if d > 0.0 { 1.0 - giant_fraction_fixed_point(d) } else { 0.0 },
                "seed": seed,
            });
            match out {
                Some(path) => {
                    std::fs::write(&path, text).map_err(|source| Error::Io {
                        path: path.display().to_string(),
                        source,
                    })?;
                    print_json(&summary);
                }
                None => print!("{text}"),
            }
        }
        Cmd::ExactC { graph, budget, h } => {
            let g = load_graph(&graph)?;
            let res = ehrhart_c_with(&g, budget)?;
            let mut out = json!({
                "counts": res.counts.iter().map(|c| c.to_string()).collect::<Vec<_>>(),
                "degree": res.degree,
                "leading": rational_str(&res.leading),
                "volume": res.volume,
                "c": res.c,
                "ln_c": res.ln_c(),
            });
            if let Some(h) = h {
                let n_h = count_lipschitz_with(&g, h, budget, None)?;
                out["count_at_h"] = json!(n_h.to_string());
                out["h"] = json!(h);
            }
            print_json(&out);
        }
        Cmd::Hom {
            graph,
            target,
            lifting,
        } => {
            let g = load_graph(&graph)?;
            let (t, m, h) = parse_circ_target(&target)?;
            if lifting {
                if m % h as usize != 0 {
                    return Err(Error::InvalidParameter(
                        "lifting check needs M = L*h".into(),
                    ));
                }
                let rep = lifting_check(&g, h, m / h as usize)?;
                print_json(&json!({
                    "hom": rep.hom.to_string(),
                    "m_times_n": rep.m_times_n.to_string(),
                    "m": rep.m,
                    "pass": rep.pass,
                }));
                if !rep.pass {
                    return Err(Error::Assertion("lifting identity failed".into()));
                }
            } else {
                let res = count_hom(&g, &t)?;
                print_json(&json!({
                    "count": res.count.to_string(),
                    "target_m": res.target_m,
                }));
            }
        }
        Cmd::Mc {
            graph,
            op,
            samples,
            seed,
            d,
            t,
            n,
            log,
            dump,
        } => {
            let seed = resolve_seed(seed)?;
            let need_graph = || -> Result<Graph> {
                load_graph(graph.as_deref().ok_or_else(|| {
                    Error::InvalidParameter("this op needs --graph".into())
                })?)
            };
            let need_profile = || -> Result<ProfileParams> {
                let d = d.ok_or_else(|| Error::InvalidParameter("this op needs --d".into()))?;
                match t {
                    Some(t) => ProfileParams::new(d, t),
                    None => ProfileParams::with_default_window(d),
                }
            };
            match op {
                McOp::Sis => {
                    let g = need_graph()?;
                    if let Some(path) = &dump {
                        let weights = sis_ln_weights(&g, samples, seed)?;
                        let mut csv = String::from("sample,ln_weight\n");
                        for (i, w) in weights.iter().enumerate() {
                            csv.push_str(&format!("{i},{w}\n"));
                        }
                        std::fs::write(path, csv).map_err(|source| Error::Io {
                            path: path.display().to_string(),
                            source,
                        })?;
                    }
                    if log {
                        let est = sis_log_volume(&g, samples, seed, 0)?;
                        print_json(&serde_json::to_value(est).expect("json"));
                    } else {
                        let est = sis_volume(&g, samples, seed)?;
                        print_json(&serde_json::to_value(est).expect("json"));
                    }
                }
                McOp::Slice => {
                    let g = need_graph()?;
                    let p = need_profile()?;
                    let est = quenched_slice_volume(&g, &p, samples, seed)?;
                    print_json(&serde_json::to_value(est).expect("json"));
                }
                McOp::Annealed => {
                    let p = need_profile()?;
                    let n = n.ok_or_else(|| Error::InvalidParameter("annealed needs --n".into()))?;
                    let rep = annealed_slice_mean(n, d.unwrap(), &p, samples, seed)?;
                    print_json(&serde_json::to_value(rep).expect("json"));
                    if rep.log_mean_over_n < rep.profile_prediction - 3.0 * rep.stderr_log {
                        return Err(Error::Assertion(
                            "annealed mean fell below the profile prediction".into(),
                        ));
                    }
                }
                McOp::Flatness => {
                    let g = need_graph()?;
                    let p = need_profile()?;
                    let rep = lipschitz_sampler_flatness_survey(&g, &p, samples, seed)?;
                    print_json(&serde_json::to_value(rep).expect("json"));
                }
            }
        }
        Cmd::Profile {
            d,
            t,
            check,
            replicas,
            seed,
        } => {
            let seed = resolve_seed(seed)?;
            let p = match t {
                Some(t) => ProfileParams::new(d, t)?,
                None => ProfileParams::with_default_window(d)?,
            };
            match check {
                ProfileCheck::Norm => {
                    let s = p.summary()?;
                    let pass = s.norm_defect.abs() < 1e-8;
                    print_json(&json!({
                        "summary": serde_json::to_value(s).expect("json"),
                        "pass": pass,
                    }));
                    if !pass {
                        return Err(Error::Assertion("profile normalization defect".into()));
                    }
                }
                ProfileCheck::Entropy => {
                    let h = p.entropy_h()?;
                    print_json(&json!({
                        "h": h,
                        "d_times_h": d * h,
                        "limit": std::f64::consts::PI.powi(2) / 3.0,
                    }));
                }
                ProfileCheck::Badpair => {
                    let q = p.bad_pair_q()?;
                    print_json(&json!({
                        "q": q,
                        "d2_times_q": d * d * q,
                        "limit": std::f64::consts::PI.powi(2) / 3.0,
                    }));
                }
                ProfileCheck::Gain => {
                    let s = p.summary()?;
                    print_json(&json!({
                        "gain": s.gain,
                        "d_times_gain": d * s.gain,
                        "limit": std::f64::consts::PI.powi(2) / 6.0,
                    }));
                }
                ProfileCheck::Extremes => {
                    let rep = neighbor_extremes(&p, d.round() as usize, replicas, seed)?;
                    print_json(&serde_json::to_value(rep).expect("json"));
                }
            }
        }
        Cmd::Qseries {
            q,
            n,
            r,
            cap_r,
            check,
        } => {
            let q_str = q.unwrap_or_else(|| "1/2".to_string());
            match check {
                QCheck::Identity => {
                    let q = parse_rational(&q_str)?;
                    let fast = one_tail_a(n, r, &q)?;
                    let brute = one_tail_a_bruteforce(n, r, &q)?;
                    let pass = fast == brute;
                    print_json(&json!({
                        "inputs": { "N": n, "r": r, "q": rational_str(&q) },
                        "value": rational_str(&fast),
                        "err": 0.0,
                        "pass": pass,
                    }));
                    if !pass {
                        return Err(Error::Assertion("one-tail identity mismatch".into()));
                    }
                }
                QCheck::Rowsum => {
                    let q: f64 = parse_to_f64(&q_str)?;
                    // sum_s q^(r s) / (q;q)_s against 1/(q^r; q)_inf
                    let mut sum = 0.0f64;
                    let mut s = 0usize;
                    loop {
                        let term = q.powi((r * s) as i32) / q_pochhammer(q, s)?;
                        sum += term;
                        s += 1;
                        if term < 1e-16 * sum || s > 100_000 {
                            break;
                        }
                    }
                    let rhs = 1.0 / pochhammer_z_inf(q.powi(r as i32), q)?;
                    let pass = (sum - rhs).abs() < 1e-9 * rhs;
                    print_json(&json!({
                        "inputs": { "q": q, "r": r },
                        "value": sum,
                        "err": (sum - rhs).abs(),
                        "pass": pass,
                    }));
                    if !pass {
                        return Err(Error::Assertion("q-binomial row sum mismatch".into()));
                    }
                }
                QCheck::Twotail => {
                    let q: f64 = parse_to_f64(&q_str)?;
                    let value = two_tail_sum(q, cap_r)?;
                    let bound = (cap_r as f64 + 1.0 + cap_r as f64 / (1.0 - q))
                        / q_pochhammer_inf(q)?.value;
                    let pass = value <= bound;
                    print_json(&json!({
                        "inputs": { "q": q, "R": cap_r },
                        "value": value,
                        "err": 0.0,
                        "bound": bound,
                        "pass": pass,
                    }));
                    if !pass {
                        return Err(Error::Assertion("two-tail prefactor bound violated".into()));
                    }
                }
                QCheck::Zeta => {
                    let value = zeta_integral()?;
                    let target = std::f64::consts::PI.powi(2) / 6.0;
                    let pass = (value - target).abs() < 1e-10;
                    print_json(&json!({
                        "inputs": {},
                        "value": value,
                        "err": (value - target).abs(),
                        "pass": pass,
                    }));
                    if !pass {
                        return Err(Error::Assertion("zeta integral off target".into()));
                    }
                }
                QCheck::Poch => {
                    let q: f64 = parse_to_f64(&q_str)?;
                    let v = q_pochhammer_inf(q)?;
                    print_json(&json!({
                        "inputs": { "q": q },
                        "value": v.value,
                        "err": v.err,
                        "ln_value": v.ln_value,
                        "ln_err": v.ln_err,
                        "pass": true,
                    }));
                }
            }
        }
        Cmd::Experiment {
            config,
            kind,
            n,
            d_list,
            t_rule,
            samples,
            replicas,
            seed,
            out,
        } => {
            let mut cfg = match &config {
                Some(path) => {
                    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
                        path: path.display().to_string(),
                        source,
                    })?;
                    ExperimentConfig::parse(&text)?
                }
                None => ExperimentConfig {
                    kind: ExperimentKind::RandomGraphSweep,
                    n: 400,
                    d_list: vec![8.0, 16.0, 32.0],
                    t_rule: TRule::LogD,
                    samples: 100_000,
                    replicas: 16,
                    seed: 0,
                    output_path: None,
                },
            };
            if let Some(k) = kind {
                cfg.kind = k.parse()?;
            }
            if let Some(n) = n {
                cfg.n = n;
            }
            if let Some(ds) = d_list {
                let parsed: std::result::Result<Vec<f64>, _> =
                    ds.split(',').map(|t| t.trim().parse()).collect();
                cfg.d_list = parsed.map_err(|_| Error::Parse(format!("bad d_list {ds:?}")))?;
            }
            if let Some(t) = t_rule {
                cfg.t_rule = t.parse()?;
            }
            if let Some(s) = samples {
                cfg.samples = s;
            }
            if let Some(r) = replicas {
                cfg.replicas = r;
            }
            cfg.seed = resolve_seed(seed.or(Some(cfg.seed)))?;
            cfg.validate()?;
            let record = run_experiment(&cfg)?;
            let out_path = out.or_else(|| cfg.output_path.clone().map(PathBuf::from));
            if let Some(path) = out_path {
                let (json_path, csv_path) = emit_report(&record, &path)?;
                eprintln!("wrote {} and {}", json_path.display(), csv_path.display());
            }
            print_json(&serde_json::to_value(&record).expect("json"));
        }
    }
    Ok(())
}

fn parse_to_f64(s: &str) -> Result<f64> {
    if let Ok(v) = s.parse::<f64>() {
        return Ok(v);
    }
    let r = parse_rational(s)?;
    let num: f64 = r
        .numer()
        .to_string()
        .parse()
        .map_err(|_| Error::Parse(format!("rational numerator too large: {s}")))?;
    let den: f64 = r
        .denom()
        .to_string()
        .parse()
        .map_err(|_| Error::Parse(format!("rational denominator too large: {s}")))?;
    Ok(num / den)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
