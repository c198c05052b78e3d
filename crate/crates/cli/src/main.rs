use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs::File;
use std::io::BufReader;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hyptree::bs::{common_root, phi_embed, BsWord};
use hyptree::comm::{denominator_profile, standard_generators, transporter};
use hyptree::horosphere::{check_growth_law, closeness_line, growth_profile, Horosphere, ProfileRow};
use hyptree::rigidity::{DiagonalLattice, Extraction, PlemmaOptions, TabulatedMap, Window};
use hyptree::selftest::{self, Check};
use hyptree::{BoundaryPoint, BtTree, Error, Prime, ProjMatrix, Rational, TreeLine, TreeVertex};
use num_bigint::BigInt;
use serde::Serialize;
use serde_json::json;

const EXIT_PRECONDITION: u8 = 1;
const EXIT_VIOLATION: u8 = 2;
const EXIT_USAGE: u8 = 64;

#[derive(Parser)]
#[command(name = "hyptree", version, about = "Exact computations in H² × T_p")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Bruhat–Tits tree navigation
    #[command(subcommand)]
    Tree(TreeCmd),
    /// Horospheres and fiber distances
    #[command(subcommand)]
    Horo(HoroCmd),
    /// Baumslag–Solitar groups
    #[command(subcommand)]
    Bs(BsCmd),
    /// Parallelogram lemma and affinity extraction
    #[command(subcommand)]
    Rig(RigCmd),
    /// Commensurator computations
    #[command(subcommand)]
    Comm(CommCmd),
}

fn parse_prime(s: &str) -> Result<Prime, String> {
    let n: u64 = s.parse().map_err(|_| format!("not an integer: {s}"))?;
    Prime::new(n).map_err(|e| e.to_string())
}

#[derive(Args, Clone)]
struct PrimeArg {
    /// The prime p
    #[arg(long, env = "HYPTREE_PRIME", default_value = "2", value_parser = parse_prime)]
    prime: Prime,
}

#[derive(Args)]
struct SelfTest {
    /// Run this module's oracle checks instead
    #[arg(long)]
    selftest: bool,
}

#[derive(Clone, Copy, clap::ValueEnum, PartialEq, Eq)]
enum Format {
    Dot,
    Json,
    Csv,
}

#[derive(Subcommand)]
enum TreeCmd {
    /// Ball around a vertex
    Ball {
        #[command(flatten)]
        prime: PrimeArg,
        #[arg(long, required_unless_present = "selftest")]
        radius: Option<u64>,
        /// Center as "m:b"
        #[arg(long, default_value = "0:0")]
        center: String,
        /// Mark the vertices of the line between these ends
        #[arg(long, num_args = 2, value_names = ["A", "B"])]
        line: Option<Vec<BoundaryPoint>>,
        #[arg(long, value_enum, default_value = "dot")]
        format: Format,
        #[command(flatten)]
        selftest: SelfTest,
    },
    /// Vertices of the line between two ends
    Geodesic {
        #[command(flatten)]
        prime: PrimeArg,
        #[arg(long, num_args = 2, value_names = ["A", "B"], required_unless_present = "selftest")]
        ends: Option<Vec<BoundaryPoint>>,
        #[arg(long, num_args = 2, value_names = ["LO", "HI"], allow_negative_numbers = true, default_values = ["-3", "3"])]
        window: Vec<i64>,
        #[command(flatten)]
        selftest: SelfTest,
    },
}

#[derive(Subcommand)]
enum HoroCmd {
    /// Fibers of one horosphere along the vertical line through its base
    Table {
        #[command(flatten)]
        prime: PrimeArg,
        #[arg(long, required_unless_present = "selftest")]
        base: Option<BoundaryPoint>,
        #[arg(long, num_args = 2, value_names = ["LO", "HI"], allow_negative_numbers = true, default_values = ["-3", "3"])]
        window: Vec<i64>,
        #[arg(long = "H", default_value = "2")]
        packing: Rational,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
        #[command(flatten)]
        selftest: SelfTest,
    },
    /// Fiber distances between two horospheres over a ball
    Profile {
        #[command(flatten)]
        prime: PrimeArg,
        #[arg(long, num_args = 2, value_names = ["A", "B"], required_unless_present = "selftest")]
        pair: Option<Vec<BoundaryPoint>>,
        #[arg(long, default_value = "3")]
        radius: u64,
        #[arg(long = "H", default_value = "2")]
        packing: Rational,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
        /// Exit 2 unless every row follows the growth law
        #[arg(long)]
        check: bool,
        #[command(flatten)]
        selftest: SelfTest,
    },
}

#[derive(Subcommand)]
enum BsCmd {
    /// Commensurability of BS(1, m) and BS(1, n)
    Comm {
        #[arg(long, required_unless_present = "selftest")]
        m: Option<u64>,
        #[arg(long, required_unless_present = "selftest")]
        n: Option<u64>,
        #[command(flatten)]
        prime: PrimeArg,
        #[command(flatten)]
        selftest: SelfTest,
    },
    /// Image of a word under BS(1, p²) → PSL₂(Z[1/p])
    Phi {
        #[command(flatten)]
        prime: PrimeArg,
        #[arg(long, required_unless_present = "selftest")]
        word: Option<BsWord>,
        #[command(flatten)]
        selftest: SelfTest,
    },
}

#[derive(Args)]
struct WindowArgs {
    /// Grid bound exponent w: points with |x| ≤ p^w
    #[arg(long, default_value = "2")]
    window: u32,
    /// p-adic depth E: grid step 1/(L·p^E)
    #[arg(long, default_value = "0")]
    depth: u32,
}

#[derive(Args)]
struct MapArgs {
    /// JSON lines {"x": "num/den", "fx": "num/den"}
    #[arg(long, required_unless_present = "selftest")]
    map: Option<PathBuf>,
    /// Declared bilipschitz constant
    #[arg(long = "K0", default_value = "1")]
    k0: Rational,
    /// Declared image class k
    #[arg(long)]
    k: Option<BigInt>,
    /// Declared adaptation bound D
    #[arg(long = "D")]
    d: Option<Rational>,
}

#[derive(Subcommand)]
enum RigCmd {
    /// Shape threshold s0
    S0 {
        #[command(flatten)]
        prime: PrimeArg,
        #[arg(long, required_unless_present = "selftest")]
        k: Option<BigInt>,
        #[arg(long = "D", required_unless_present = "selftest")]
        d: Option<Rational>,
        #[arg(long = "K0", default_value = "1")]
        k0: Rational,
        #[command(flatten)]
        selftest: SelfTest,
    },
    /// Search a tabulated map for parallelogram violations
    Verify {
        #[command(flatten)]
        prime: PrimeArg,
        #[command(flatten)]
        map: MapArgs,
        #[arg(long = "L", default_value = "1")]
        l: BigInt,
        #[command(flatten)]
        window: WindowArgs,
        /// Perimeter bound in place of L
        #[arg(long)]
        per_bound: Option<Rational>,
        #[arg(long, default_value = "0")]
        s0_increment: u64,
        #[command(flatten)]
        selftest: SelfTest,
    },
    /// Recover the multiplier of a tabulated map
    Extract {
        #[command(flatten)]
        prime: PrimeArg,
        #[command(flatten)]
        map: MapArgs,
        #[arg(long, default_value = "1")]
        q: BigInt,
        #[command(flatten)]
        window: WindowArgs,
        #[arg(long, default_value = "1024")]
        max_generator_depth: u32,
        #[command(flatten)]
        selftest: SelfTest,
    },
}

#[derive(Subcommand)]
enum CommCmd {
    /// Denominator profile of conjugation by g
    Bound {
        #[command(flatten)]
        prime: PrimeArg,
        #[arg(long, required_unless_present = "selftest")]
        g: Option<ProjMatrix>,
        #[arg(long, default_value = "6")]
        maxlen: usize,
        #[command(flatten)]
        selftest: SelfTest,
    },
    /// Matrix sending the pair to (0, ∞)
    Transport {
        #[arg(long, num_args = 2, value_names = ["A", "B"], required_unless_present = "selftest")]
        from: Option<Vec<BoundaryPoint>>,
        #[command(flatten)]
        prime: PrimeArg,
        #[command(flatten)]
        selftest: SelfTest,
    },
}

enum Outcome {
    Ok(String),
    Violation(String),
}

fn to_json(value: &impl Serialize) -> String {
    serde_json::to_string_pretty(value).expect("serializable") + "\n"
}

fn run_selftest(checks: Vec<Check>) -> Outcome {
    let text = to_json(&json!({ "checks": checks, "passed": selftest::all_passed(&checks) }));
    if selftest::all_passed(&checks) {
        Outcome::Ok(text)
    } else {
        Outcome::Violation(text)
    }
}

fn parse_vertex(tree: &BtTree, s: &str) -> Result<TreeVertex, Error> {
    let (m, b) = s
        .split_once(':')
        .ok_or_else(|| Error::Parse(format!("expected \"m:b\", got {s:?}")))?;
    let m: i64 = m
        .trim()
        .parse()
        .map_err(|_| Error::Parse(format!("bad height in {s:?}")))?;
    Ok(tree.vertex(m, &b.trim().parse()?))
}

fn pair(v: &[BoundaryPoint]) -> (&BoundaryPoint, &BoundaryPoint) {
    (&v[0], &v[1])
}

fn dot_id(v: &TreeVertex) -> String {
    format!("\"{}\"", v.label())
}

/// Undirected DOT graph of the vertex set; edges join members at distance 1.
fn to_dot(tree: &BtTree, name: &str, vertices: &[TreeVertex], line: Option<&TreeLine>) -> String {
    let members: BTreeSet<&TreeVertex> = vertices.iter().collect();
    let mut out = format!("graph {name} {{\n");
    for v in vertices {
        let on = line.is_some_and(|l| tree.on_line(v, l));
        let extra = if on { ", closeness=true, color=red" } else { "" };
        writeln!(out, "  {} [label=\"{}\"{extra}];", dot_id(v), v.label()).unwrap();
    }
    for v in vertices {
        for w in tree.neighbors(v) {
            if members.contains(&w) && v < &w {
                writeln!(out, "  {} -- {};", dot_id(v), dot_id(&w)).unwrap();
            }
        }
    }
    out.push_str("}\n");
    out
}

fn profile_csv(rows: &[ProfileRow]) -> String {
    let mut out = String::from("vertex,k,argument_num,argument_den\n");
    for r in rows {
        writeln!(
            out,
            "{},{},{},{}",
            r.vertex.label(),
            r.k,
            r.argument.numer(),
            r.argument.denom()
        )
        .unwrap();
    }
    out
}

fn run(cmd: Command) -> Result<Outcome, Error> {
    match cmd {
        Command::Tree(TreeCmd::Ball { prime, radius, center, line, format, selftest }) => {
            if selftest.selftest {
                return Ok(run_selftest(selftest::tree(prime.prime)));
            }
            let tree = BtTree::new(prime.prime);
            let center = parse_vertex(&tree, &center)?;
            let ball = tree.ball(&center, radius.expect("required"));
            let line = match &line {
                Some(ends) => {
                    let (a, b) = pair(ends);
                    Some(tree.line_between_ends(a, b)?)
                }
                None => None,
            };
            let vertices: Vec<TreeVertex> = ball.iter().map(|(v, _)| v.clone()).collect();
            Ok(Outcome::Ok(match format {
                Format::Dot => to_dot(&tree, "ball", &vertices, line.as_ref()),
                _ => to_json(
                    &ball
                        .iter()
                        .map(|(v, d)| {
                            json!({
                                "vertex": v,
                                "distance": d,
                                "on_line": line.as_ref().map(|l| tree.on_line(v, l)),
                            })
                        })
                        .collect::<Vec<_>>(),
                ),
            }))
        }
        Command::Tree(TreeCmd::Geodesic { prime, ends, window, selftest }) => {
            if selftest.selftest {
                return Ok(run_selftest(selftest::tree(prime.prime)));
            }
            let tree = BtTree::new(prime.prime);
            let ends = ends.expect("required");
            let (a, b) = pair(&ends);
            let line = tree.line_between_ends(a, b)?;
            let vertices = tree.line_vertices(&line, window[0], window[1]);
            Ok(Outcome::Ok(to_json(&json!({ "line": line, "vertices": vertices }))))
        }
        Command::Horo(HoroCmd::Table { prime, base, window, packing, format, selftest }) => {
            if selftest.selftest {
                return Ok(run_selftest(selftest::horo(prime.prime)));
            }
            let tree = BtTree::new(prime.prime);
            let base = base.expect("required");
            let sigma = Horosphere::new(base.clone(), packing)?;
            let foot = match &base {
                BoundaryPoint::Infinity => BoundaryPoint::Finite(Rational::zero()),
                finite => finite.clone(),
            };
            let line = tree.line_between_ends(&foot, &BoundaryPoint::Infinity)?;
            let rows: Vec<_> = tree
                .line_vertices(&line, window[0], window[1])
                .into_iter()
                .map(|v| {
                    let ball = sigma.fiber(&tree, &v);
                    (v, ball)
                })
                .collect();
            Ok(Outcome::Ok(match format {
                Format::Csv => {
                    let mut out = String::from("vertex,height,base,size_num,size_den\n");
                    for (v, ball) in &rows {
                        writeln!(
                            out,
                            "{},{},{},{},{}",
                            v.label(),
                            v.height(),
                            ball.base(),
                            ball.size().numer(),
                            ball.size().denom()
                        )
                        .unwrap();
                    }
                    out
                }
                Format::Dot => {
                    let vertices: Vec<TreeVertex> = rows.iter().map(|(v, _)| v.clone()).collect();
                    to_dot(&tree, "horosphere", &vertices, Some(&line))
                }
                Format::Json => to_json(
                    &rows
                        .iter()
                        .map(|(v, ball)| json!({ "vertex": v, "horoball": ball }))
                        .collect::<Vec<_>>(),
                ),
            }))
        }
        Command::Horo(HoroCmd::Profile { prime, pair: ends, radius, packing, format, check, selftest }) => {
            if selftest.selftest {
                return Ok(run_selftest(selftest::horo(prime.prime)));
            }
            let tree = BtTree::new(prime.prime);
            let ends = ends.expect("required");
            let (a, b) = pair(&ends);
            let rows = growth_profile(&tree, a, b, radius, &packing)?;
            let text = match format {
                Format::Csv => profile_csv(&rows),
                Format::Json => to_json(&rows),
                Format::Dot => {
                    let line = closeness_line(&tree, a, b)?;
                    let vertices: Vec<TreeVertex> = rows.iter().map(|r| r.vertex.clone()).collect();
                    to_dot(&tree, "profile", &vertices, Some(&line))
                }
            };
            if check {
                if let Err(v) = check_growth_law(prime.prime, &rows) {
                    eprintln!(
                        "{}",
                        json!({
                            "violation": "growth law",
                            "vertex": v.row.vertex,
                            "argument": v.row.argument,
                            "expected": v.expected,
                        })
                    );
                    return Ok(Outcome::Violation(text));
                }
            }
            Ok(Outcome::Ok(text))
        }
        Command::Bs(BsCmd::Comm { m, n, prime, selftest }) => {
            if selftest.selftest {
                return Ok(run_selftest(selftest::bs(prime.prime)));
            }
            let root = common_root(m.expect("required"), n.expect("required"))?;
            let value = match root {
                Some(r) => json!({ "commensurable": true, "root": r }),
                None => json!({ "commensurable": false }),
            };
            Ok(Outcome::Ok(serde_json::to_string(&value).unwrap() + "\n"))
        }
        Command::Bs(BsCmd::Phi { prime, word, selftest }) => {
            if selftest.selftest {
                return Ok(run_selftest(selftest::bs(prime.prime)));
            }
            let word = word.expect("required");
            let m = phi_embed(&word, prime.prime);
            Ok(Outcome::Ok(to_json(&json!({ "word": word.to_string(), "matrix": m }))))
        }
        Command::Rig(RigCmd::S0 { prime, k, d, k0, selftest }) => {
            if selftest.selftest {
                return Ok(run_selftest(selftest::rig(prime.prime)));
            }
            let lat = DiagonalLattice::new(prime.prime);
            let t = lat.s_threshold(&k0, &k.expect("required"), &d.expect("required"))?;
            Ok(Outcome::Ok(to_json(&t)))
        }
        Command::Rig(RigCmd::Verify { prime, map, l, window, per_bound, s0_increment, selftest }) => {
            if selftest.selftest {
                return Ok(run_selftest(selftest::rig(prime.prime)));
            }
            let table = load_map(&map)?;
            let lat = DiagonalLattice::new(prime.prime);
            let opts = PlemmaOptions {
                perimeter_bound: per_bound,
                s0_increment,
            };
            let report = lat.verify_plemma(&table, &l, &Window::new(window.window, window.depth), &opts)?;
            let text = to_json(&report);
            Ok(if report.passed() {
                Outcome::Ok(text)
            } else {
                Outcome::Violation(text)
            })
        }
        Command::Rig(RigCmd::Extract { prime, map, q, window, max_generator_depth, selftest }) => {
            if selftest.selftest {
                return Ok(run_selftest(selftest::rig(prime.prime)));
            }
            let table = load_map(&map)?;
            let lat = DiagonalLattice::new(prime.prime);
            let out = lat.extract_affine(
                &table,
                &q,
                &Window::new(window.window, window.depth),
                max_generator_depth,
            )?;
            let text = to_json(&out);
            Ok(match out {
                Extraction::Multiplier { .. } => Outcome::Ok(text),
                _ => Outcome::Violation(text),
            })
        }
        Command::Comm(CommCmd::Bound { prime, g, maxlen, selftest }) => {
            if selftest.selftest {
                return Ok(run_selftest(selftest::comm(prime.prime)));
            }
            let gens = standard_generators(prime.prime);
            let prof = denominator_profile(&g.expect("required"), &gens, maxlen, prime.prime)?;
            Ok(Outcome::Ok(to_json(&json!({
                "d": prof.d.to_string(),
                "max_len": prof.max_len,
                "by_length": prof.by_length.iter().map(|d| d.to_string()).collect::<Vec<_>>(),
                "words": prof.words,
                "status": if prof.stable { "STABLE" } else { "UNSTABLE" },
            }))))
        }
        Command::Comm(CommCmd::Transport { from, prime, selftest }) => {
            if selftest.selftest {
                return Ok(run_selftest(selftest::comm(prime.prime)));
            }
            let from = from.expect("required");
            let (a, b) = pair(&from);
            Ok(Outcome::Ok(to_json(&transporter(a, b)?)))
        }
    }
}

fn load_map(args: &MapArgs) -> Result<TabulatedMap, Error> {
    let path = args.map.as_ref().expect("required");
    let file = File::open(path).map_err(|e| Error::InvalidArgument(format!("{}: {e}", path.display())))?;
    let mut map = TabulatedMap::from_json_lines(BufReader::new(file), args.k0.clone())?;
    if let Some(k) = &args.k {
        map = map.declare_image_class(k.clone());
    }
    if let Some(d) = &args.d {
        map = map.declare_adaptation_bound(d.clone());
    }
    Ok(map)
}

fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::NotPrime(_) => "not_prime",
        Error::Parse(_) => "parse",
        Error::DivisionByZero => "division_by_zero",
        Error::Overflow => "overflow",
        Error::NonPositive { .. } => "non_positive",
        Error::SingularMatrix => "singular_matrix",
        Error::EqualPoints => "equal_points",
        Error::InvalidPacking(_) => "invalid_packing",
        Error::EmptySet => "empty_set",
        Error::NotCoprime { .. } => "not_coprime",
        Error::InvalidArgument(_) => "invalid_argument",
        Error::IncomparableWindows => "incomparable_windows",
        Error::EmptyIndexSet => "empty_index_set",
        Error::DegenerateBound(_) => "degenerate_bound",
        Error::MissingPoint(_) => "missing_point",
        Error::WindowTooSmall { .. } => "window_too_small",
        Error::NotNormalized(_) => "not_normalized",
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => EXIT_USAGE,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(Outcome::Ok(text)) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Ok(Outcome::Violation(text)) => {
            print!("{text}");
            ExitCode::from(EXIT_VIOLATION)
        }
        Err(e) => {
            eprintln!("{}", json!({ "error": error_kind(&e), "message": e.to_string() }));
            ExitCode::from(EXIT_PRECONDITION)
        }
    }
}
