use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use hashtag_core::code::{generate_code, verify_mds, CodeSpec, LinearCode, MdsVerdict};
use hashtag_core::costmodel::{choose_among, parse_rational, CostModel, Q};
use hashtag_core::locality::{distance_bound, verify_distance, LocalitySpec, MAX_ENUMERATION_NODES};
use hashtag_core::repair::{plan_local, plan_msr, plan_parity};
use hashtag_core::storage::{
    check_shards, decode_dir, encode_file, plan_repair, repair_shard, AnyCode, CodeSection, Manifest, ShardStatus,
    StrategyChoice, MANIFEST_FILE,
};
use hashtag_core::{Error, FieldSpec, Result};
use serde_json::json;

const BUILTIN: &str = "builtin-9-6-9";

#[derive(Debug, Parser)]
#[command(name = "hashtag", version, about = "HashTag erasure coding with local and MSR-style repair")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, clap::Args)]
struct CodeArgs {
    /// `builtin-9-6-9`, a shard directory, a manifest, or a code file from `gen`.
    #[arg(long, default_value = BUILTIN)]
    code: String,

    /// Split into L local groups with local distance D.
    #[arg(long, value_name = "L,D", value_parser = parse_locality)]
    locality: Option<LocalitySpec>,
}

#[derive(Debug, clap::Args)]
struct CostArgs {
    /// Time charged per contiguous read (integer, fraction or decimal).
    #[arg(long, default_value = "0", value_parser = parse_q)]
    seek_cost: Q,

    /// Bytes transferred per time unit.
    #[arg(long, default_value = "1", value_parser = parse_q)]
    rate: Q,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum StrategyArg {
    Auto,
    Local,
    Msr,
}

impl From<StrategyArg> for StrategyChoice {
    fn from(s: StrategyArg) -> Self {
        match s {
            StrategyArg::Auto => StrategyChoice::Auto,
            StrategyArg::Local => StrategyChoice::Local,
            StrategyArg::Msr => StrategyChoice::Msr,
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Stripe a file into shards plus a manifest.
    Encode {
        input: PathBuf,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        code: CodeArgs,
        #[arg(long, default_value_t = 1000)]
        subpacket_bytes: u64,
    },
    /// Rebuild the original file from the shards that are present.
    Decode {
        dir: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
    /// Regenerate one lost shard.
    Repair {
        dir: PathBuf,
        #[arg(long)]
        node: usize,
        #[arg(long, value_enum, default_value_t = StrategyArg::Auto)]
        strategy: StrategyArg,
        #[command(flatten)]
        cost: CostArgs,
    },
    /// Check shard checksums and the code's distance.
    Verify {
        /// Shard directory; without it only the code is checked.
        dir: Option<PathBuf>,
        #[command(flatten)]
        code: CodeArgs,
    },
    /// Print the repair plan for a node.
    Plan {
        #[arg(long)]
        node: usize,
        #[command(flatten)]
        code: CodeArgs,
        #[arg(long, value_enum, default_value_t = StrategyArg::Auto)]
        strategy: StrategyArg,
        #[command(flatten)]
        cost: CostArgs,
    },
    /// Compare repair strategies under the seek/transfer model.
    CostCompare {
        #[arg(long)]
        node: usize,
        #[command(flatten)]
        code: CodeArgs,
        #[arg(long, default_value_t = 1000)]
        subpacket_bytes: u64,
        #[command(flatten)]
        cost: CostArgs,
        /// Also print the comparison as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Search for an MDS HashTag code and print it as JSON.
    Gen {
        n: usize,
        k: usize,
        alpha: usize,
        #[arg(long, default_value_t = 5)]
        w: u32,
        /// Field polynomial, decimal or 0x-prefixed.
        #[arg(long, default_value = "41", value_parser = parse_poly)]
        poly: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 100_000)]
        max_tries: u64,
        /// Write the code here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_locality(s: &str) -> std::result::Result<LocalitySpec, String> {
    let (l, d) = s.split_once(',').ok_or("expected L,D")?;
    let num = |t: &str| t.trim().parse::<usize>().map_err(|e| format!("{t:?}: {e}"));
    Ok(LocalitySpec::new(num(l)?, num(d)?))
}

fn parse_q(s: &str) -> std::result::Result<Q, String> {
    parse_rational(s).map_err(|e| e.to_string())
}

fn parse_poly(s: &str) -> std::result::Result<u32, String> {
    let r = match s.strip_prefix("0x") {
        Some(hex) => u32::from_str_radix(hex, 16),
        None => s.parse(),
    };
    r.map_err(|e| format!("{s:?}: {e}"))
}

/// Resolves `--code` and `--locality`. A manifest's own locality is used
/// unless `--locality` overrides it.
fn load_code(args: &CodeArgs) -> Result<AnyCode> {
    if args.code == BUILTIN {
        return AnyCode::new(CodeSpec::builtin_ht_9_6_9(), args.locality);
    }
    let mut path = PathBuf::from(&args.code);
    if path.is_dir() {
        path = path.join(MANIFEST_FILE);
    }
    let text = fs::read_to_string(&path).map_err(|e| Error::Manifest(format!("{}: {e}", path.display())))?;
    if let Ok(m) = Manifest::parse(&text) {
        if args.locality.is_none() {
            return m.code();
        }
        return AnyCode::new(m.code.to_spec()?, args.locality);
    }
    let section: CodeSection = serde_json::from_str(&text)?;
    AnyCode::new(section.to_spec()?, args.locality)
}

fn cost_model(cost: &CostArgs, subpacket_bytes: u64) -> Result<CostModel> {
    CostModel::new(cost.seek_cost, cost.rate, subpacket_bytes)
}

fn describe(code: &AnyCode) -> String {
    let b = code.base();
    match code {
        AnyCode::Base(_) => format!("({}, {}) code, alpha {}", b.n(), b.k(), b.alpha()),
        AnyCode::Local(lc) => format!(
            "({}, {}) code split from ({}, {}), l={} delta={}, alpha {}",
            lc.n_prime(),
            b.k(),
            b.n(),
            b.k(),
            lc.locality().l,
            lc.locality().delta,
            b.alpha()
        ),
    }
}

fn mds_line(spec: &CodeSpec) -> (String, bool) {
    match verify_mds(spec) {
        MdsVerdict::Ok { checked } => (format!("MDS: ok ({checked}/{checked} subsets)"), true),
        MdsVerdict::Witness { subset } => (format!("MDS: FAILED, nodes {subset:?} do not determine the data"), false),
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Encode {
            input,
            out,
            code,
            subpacket_bytes,
        } => {
            let code = load_code(&code)?;
            let m = encode_file(&input, &out, &code, subpacket_bytes)?;
            let alpha = code.alpha() as u64;
            println!(
                "{}: {} bytes in {} stripes, {} shards of {} bytes in {}",
                describe(&code),
                m.stripe.original_length_bytes,
                m.stripe.stripe_count,
                m.shards.len(),
                m.stripe.stripe_count * alpha * subpacket_bytes,
                out.display()
            );
        }
        Command::Decode { dir, output } => {
            let stats = decode_dir(&dir, &output)?;
            println!(
                "wrote {} bytes to {} using nodes {:?}",
                stats.bytes_written,
                output.display(),
                stats.used_nodes
            );
        }
        Command::Repair {
            dir,
            node,
            strategy,
            cost,
        } => {
            let manifest = Manifest::load(&dir)?;
            let code = manifest.code()?;
            let cm = cost_model(&cost, manifest.stripe.subpacket_bytes)?;
            let (plan, choice) = plan_repair(&code, node, strategy.into(), &cm)?;
            if let Some(choice) = &choice {
                for (i, o) in choice.options.iter().enumerate() {
                    println!(
                        "{:<18} reads={} subpackets={} time={}{}",
                        o.strategy().name(),
                        o.reads,
                        o.bandwidth_subpackets,
                        o.time,
                        if i == choice.winner { " *" } else { "" }
                    );
                }
            }
            let stats = repair_shard(&dir, &manifest, &plan)?;
            println!(
                "repaired node {node} with {}: {} read ops, {} bytes read, {} helpers",
                plan.strategy,
                stats.read_ops,
                stats.bytes_read,
                plan.helper_count()
            );
        }
        Command::Verify { dir, code } => {
            let (code, statuses) = match &dir {
                Some(dir) => {
                    let m = Manifest::load(dir)?;
                    let statuses = check_shards(dir, &m)?;
                    (m.code()?, Some((m, statuses)))
                }
                None => (load_code(&code)?, None),
            };
            println!("{}", describe(&code));
            let (line, mut ok) = mds_line(code.base());
            println!("{line}");
            if let AnyCode::Local(lc) = &code {
                if lc.n_prime() <= MAX_ENUMERATION_NODES {
                    let d = verify_distance(lc)?;
                    let bound = distance_bound(lc.n_prime(), lc.data_nodes(), lc.group_size(), lc.locality().delta);
                    println!("distance: {} (bound {bound}), witness {:?}", d.d_min, d.witness);
                }
            }
            let mut corrupt = false;
            if let Some((m, statuses)) = statuses {
                for (s, st) in m.shards.iter().zip(&statuses) {
                    println!("shard {:>2} {:<10} {:?}", s.node, s.role, st);
                }
                corrupt = statuses.contains(&ShardStatus::Corrupt);
                ok &= statuses.iter().all(|s| *s == ShardStatus::Ok);
            }
            return Ok(match (corrupt, ok) {
                (true, _) => ExitCode::from(2),
                (false, true) => ExitCode::SUCCESS,
                (false, false) => ExitCode::from(1),
            });
        }
        Command::Plan {
            node,
            code,
            strategy,
            cost,
        } => {
            let code = load_code(&code)?;
            let cm = cost_model(&cost, 1)?;
            let (plan, _) = plan_repair(&code, node, strategy.into(), &cm)?;
            print!("{}", plan.dump());
        }
        Command::CostCompare {
            node,
            code,
            subpacket_bytes,
            cost,
            json,
        } => {
            let code = load_code(&code)?;
            let cm = cost_model(&cost, subpacket_bytes)?;
            let plans = match &code {
                _ if !code.role(node).is_systematic() => vec![plan_parity(&code, node)?],
                AnyCode::Local(lc) => vec![plan_local(lc, node)?, plan_msr(lc, node)?],
                AnyCode::Base(spec) => vec![plan_msr(spec, node)?],
            };
            let choice = choose_among(plans, &cm);
            println!("{:<18} {:>6} {:>11} {:>12} {:>14}", "strategy", "reads", "subpackets", "bytes", "time");
            for (i, o) in choice.options.iter().enumerate() {
                println!(
                    "{:<18} {:>6} {:>11} {:>12} {:>14}{}",
                    o.strategy().name(),
                    o.reads,
                    o.bandwidth_subpackets,
                    o.bytes,
                    o.time.to_string(),
                    if i == choice.winner { " *" } else { "" }
                );
            }
            if let Some(s) = choice.flip_seek_cost {
                println!("winner flips at seek cost {s}");
            }
            if json {
                let options: Vec<_> = choice
                    .options
                    .iter()
                    .map(|o| {
                        json!({
                            "strategy": o.strategy().name(),
                            "reads": o.reads,
                            "subpackets": o.bandwidth_subpackets,
                            "bytes": o.bytes,
                            "time": o.time.to_string(),
                            "helpers": o.plan.helpers(),
                        })
                    })
                    .collect();
                let doc = json!({
                    "node": node,
                    "options": options,
                    "winner": choice.best().strategy().name(),
                    "flip_seek_cost": choice.flip_seek_cost.map(|s| s.to_string()),
                });
                println!("{}", serde_json::to_string_pretty(&doc)?);
            }
        }
        Command::Gen {
            n,
            k,
            alpha,
            w,
            poly,
            seed,
            max_tries,
            out,
        } => {
            let field = FieldSpec::new(w, poly)?;
            let spec = generate_code(n, k, alpha, &field, seed, max_tries)?;
            let text = serde_json::to_string_pretty(&CodeSection::from_spec(&spec))? + "\n";
            eprintln!("{}", mds_line(&spec).0);
            match out {
                Some(path) => write_file(&path, &text)?,
                None => print!("{text}"),
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text)?;
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            if let Error::StrategyUnavailable { .. } = e {
                eprintln!("hint: try --strategy auto");
            }
            ExitCode::from(if e.is_integrity() { 2 } else { 1 })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers() {
        assert_eq!(parse_q("9").unwrap(), Q::from_integer(9));
        assert_eq!(parse_q("3/5").unwrap(), Q::new(3, 5));
        assert_eq!(parse_q("0.25").unwrap(), Q::new(1, 4));
        assert!(parse_q("x").is_err());
        assert_eq!(parse_poly("0x29").unwrap(), 41);
        assert_eq!(parse_poly("41").unwrap(), 41);
    }

    #[test]
    fn locality_flag() {
        assert_eq!(parse_locality("2,2").unwrap(), LocalitySpec::new(2, 2));
        assert_eq!(parse_locality(" 3, 2").unwrap(), LocalitySpec::new(3, 2));
        assert!(parse_locality("3").is_err());
    }
}
