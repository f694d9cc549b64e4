//! Command-line surface. Exit codes: 0 when the tool succeeds and any
//! analysis comes out positive (identity holds, series match, polynomial
//! irreducible), 1 on usage or input errors, 2 when the tool ran but the
//! answer is negative (identity failed, oracle mismatch, factors found,
//! no recurrence, fixture item failed).

use crate::analysis::{
    block_check, build_quotient_grammar, coeff_window, factor_search, find_recurrence,
    inherent_ambiguity_report, trace_support, Band, QuotientWitness,
};
use crate::automata::{automatic_member, build_chain_dfa, intersect_gf2, parse_dfa, DigitDfa};
use crate::grammar::{format_grammar, parse_grammar, to_cnf, validate_wellformed, CnfGrammar};
use crate::lang::{enumerate, ParityCyk};
use crate::series::{dual_of_slice_truncated, parse_poly, SeriesDto, SeriesError, TruncSeries};
use crate::solver::{det_cofactor, extract_dual_with, SolverError};
use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use serde_json::json;
use std::ffi::OsString;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

const EXIT_OK: i32 = 0;
const EXIT_USAGE: i32 = 1;
const EXIT_NEGATIVE: i32 = 2;

#[derive(Parser)]
#[command(
    name = "gf2g",
    version,
    about = "GF(2)-grammar toolkit: parity languages, chain intersections, \
             dual power series, and bounded-language analyses"
)]
struct Cli {
    /// Emit machine-readable JSON instead of text
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Check a grammar file for well-formedness
    Validate { grammar: PathBuf },
    /// Print the binary normal form of a grammar
    Cnf { grammar: PathBuf },
    /// Parity membership of a single word (prints 1 or 0)
    Member {
        grammar: PathBuf,
        /// The word to test; `-` denotes the empty word
        #[arg(long)]
        word: String,
    },
    /// List the parity language up to a length bound, one word per line
    Enum {
        grammar: PathBuf,
        #[arg(long)]
        bound: usize,
    },
    /// Intersect a grammar with a DFA (a file path, or `chain:<letters>`)
    Intersect {
        grammar: PathBuf,
        #[arg(long)]
        dfa: String,
    },
    /// Dual series of a chain-contained language by exhaustive enumeration
    Series {
        grammar: PathBuf,
        /// Chain letters in order, e.g. `ab`
        #[arg(long)]
        letters: String,
        /// Per-letter degree bounds, e.g. `12,12`
        #[arg(long = "box")]
        bounds: String,
    },
    /// Dual series via the chain-intersection linear systems
    Solve {
        grammar: PathBuf,
        #[arg(long)]
        letters: String,
        #[arg(long = "box")]
        bounds: String,
        /// Also compute the enumeration oracle and compare
        #[arg(long)]
        compare: bool,
        /// Emit the solved linear systems as JSON
        #[arg(long)]
        dump_system: bool,
    },
    /// Search the coefficient rows of a two-variable series for a linear
    /// recurrence with polynomial coefficients
    Recurrence {
        /// Grammar whose dual over --letters/--box supplies the series
        grammar: Option<PathBuf>,
        /// JSON series file used instead of a grammar
        #[arg(long, conflicts_with = "grammar")]
        series: Option<PathBuf>,
        #[arg(long, default_value = "ab")]
        letters: String,
        #[arg(long = "box")]
        bounds: Option<String>,
        /// Largest recurrence order to try
        #[arg(long)]
        d_max: usize,
        /// Largest coefficient degree to try
        #[arg(long)]
        deg_max: u32,
        /// First window row `n0`, or `n0:N` to require trusted rows through N
        #[arg(long)]
        window: String,
    },
    /// Support and diagonal band of a three-variable series (JSON file)
    Trace { series: PathBuf },
    /// Block structure of a sum of products of unary series (JSON file:
    /// an array of [A, B, C] series triples over a, b, c)
    Blocks { file: PathBuf },
    /// Exhaustive two-factor search for a GF(2) polynomial
    Irreducible {
        poly: String,
        /// Per-factor total-degree cap; deg(p)-1 makes the search complete
        #[arg(long)]
        max_deg: u32,
    },
    /// Extend a grammar over a*b* into one whose dual is the quotient by a
    /// polynomial with constant term 1
    Quotient {
        grammar: PathBuf,
        #[arg(long)]
        poly: String,
        /// Box for the verification of Dual(quotient) * p = Dual(numerator)
        #[arg(long = "box", default_value = "12,12")]
        bounds: String,
        /// Length bound for the a*b* containment scan fallback
        #[arg(long, default_value_t = 24)]
        scan: usize,
    },
    /// Check the symmetric-difference identities that pin the diagonal
    /// language { a^n b^n c^n } on words of length at most n
    AmbiguityReport {
        #[arg(long)]
        n: usize,
    },
    /// Run the bundled fixture suite and print pass/fail per item
    Fixtures {
        #[arg(long, default_value = "fixtures")]
        dir: PathBuf,
    },
}

pub fn dispatch_env() -> i32 {
    dispatch(std::env::args_os())
}

/// Parses and runs one invocation, returning the process exit code.
pub fn dispatch<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
            let _ = e.print();
            return code;
        }
    };
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_USAGE
        }
    }
}

#[derive(Debug)]
struct CliError(String);

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for CliError {}

type Fallible<T> = Result<T, Box<dyn std::error::Error>>;

fn fail<T>(msg: impl Into<String>) -> Fallible<T> {
    Err(Box::new(CliError(msg.into())))
}

fn read_file(path: &Path) -> Fallible<String> {
    fs::read_to_string(path).map_err(|e| CliError(format!("{}: {e}", path.display())).into())
}

fn load_cnf(path: &Path) -> Fallible<CnfGrammar> {
    Ok(to_cnf(&parse_grammar(&read_file(path)?)?)?)
}

fn parse_bounds(text: &str) -> Fallible<Vec<u32>> {
    text.split(',')
        .map(|t| {
            t.trim()
                .parse::<u32>()
                .map_err(|_| CliError(format!("bad bound {t:?} in {text:?}")).into())
        })
        .collect()
}

fn parse_letters(text: &str) -> Fallible<Vec<char>> {
    let letters: Vec<char> = text.chars().collect();
    if letters.is_empty() || !letters.iter().all(|c| c.is_ascii_lowercase()) {
        return fail(format!("letters must be lowercase ascii, got {text:?}"));
    }
    Ok(letters)
}

fn series_dto_json(f: &TruncSeries) -> serde_json::Value {
    serde_json::to_value(f.to_dto()).expect("series serializes")
}

fn load_series(path: &Path) -> Fallible<TruncSeries> {
    let dto: SeriesDto = serde_json::from_str(&read_file(path)?)
        .map_err(|e| CliError(format!("{}: {e}", path.display())))?;
    Ok(TruncSeries::from_dto(&dto)?)
}

fn band_json(band: &Band) -> serde_json::Value {
    match band {
        Band::Bounded(k) => json!({ "bounded": k }),
        Band::ExceedsBox { observed } => json!({ "exceeds_box": observed }),
    }
}

fn band_text(band: &Band) -> String {
    match band {
        Band::Bounded(k) => format!("{k}"),
        Band::ExceedsBox { observed } => format!("exceeds box (observed {observed})"),
    }
}

fn run(cli: &Cli) -> Fallible<i32> {
    match &cli.cmd {
        Cmd::Validate { grammar } => {
            let g = parse_grammar(&read_file(grammar)?)?;
            let r = validate_wellformed(&g);
            if cli.json {
                println!(
                    "{}",
                    json!({
                        "accepted": r.accepted,
                        "nullable": r.nullable,
                        "productive": r.productive,
                        "reachable": r.reachable,
                        "derivation_cycle": r.derivation_cycle,
                        "nullable_cycle": r.nullable_cycle,
                    })
                );
            } else {
                let list = |s: &std::collections::BTreeSet<String>| {
                    if s.is_empty() {
                        "(none)".to_string()
                    } else {
                        s.iter().cloned().collect::<Vec<_>>().join(" ")
                    }
                };
                println!("accepted: {}", if r.accepted { "yes" } else { "no" });
                println!("nullable: {}", list(&r.nullable));
                println!("productive: {}", list(&r.productive));
                println!("reachable: {}", list(&r.reachable));
                if let Some(cycle) = &r.derivation_cycle {
                    println!("derivation cycle: {}", cycle.join(" -> "));
                }
                if let Some(cycle) = &r.nullable_cycle {
                    println!("nullable cycle: {}", cycle.join(" -> "));
                }
            }
            Ok(if r.accepted { EXIT_OK } else { EXIT_NEGATIVE })
        }
        Cmd::Cnf { grammar } => {
            let cnf = load_cnf(grammar)?;
            let text = format_grammar(cnf.grammar());
            if cli.json {
                println!(
                    "{}",
                    json!({ "grammar": text, "empty_word": cnf.eps_parity })
                );
            } else {
                print!("{text}");
                println!("# empty word parity: {}", u8::from(cnf.eps_parity));
            }
            Ok(EXIT_OK)
        }
        Cmd::Member { grammar, word } => {
            let cnf = load_cnf(grammar)?;
            let w = if word == "-" { "" } else { word.as_str() };
            let parity = if w.is_empty() {
                cnf.eps_parity
            } else {
                ParityCyk::new(&cnf).parity(w)?
            };
            if cli.json {
                println!("{}", json!({ "word": w, "parity": u8::from(parity) }));
            } else {
                println!("{}", u8::from(parity));
            }
            Ok(EXIT_OK)
        }
        Cmd::Enum { grammar, bound } => {
            let slice = enumerate(&load_cnf(grammar)?, *bound);
            if cli.json {
                let words: Vec<&str> = slice.words.iter().map(|w| w.0.as_str()).collect();
                println!(
                    "{}",
                    json!({ "bound": bound, "count": words.len(), "words": words })
                );
            } else {
                print!("{}", slice.to_text());
            }
            Ok(EXIT_OK)
        }
        Cmd::Intersect { grammar, dfa } => {
            let cnf = load_cnf(grammar)?;
            let machine = match dfa.strip_prefix("chain:") {
                Some(letters) => build_chain_dfa(&parse_letters(letters)?)?,
                None => parse_dfa(&read_file(Path::new(dfa))?)?,
            };
            let ig = intersect_gf2(&cnf, &machine)?;
            let text = format_grammar(ig.cnf.grammar());
            if cli.json {
                println!(
                    "{}",
                    json!({ "grammar": text, "empty_word": ig.cnf.eps_parity })
                );
            } else {
                print!("{text}");
                println!("# empty word parity: {}", u8::from(ig.cnf.eps_parity));
            }
            Ok(EXIT_OK)
        }
        Cmd::Series {
            grammar,
            letters,
            bounds,
        } => {
            let cnf = load_cnf(grammar)?;
            let letters = parse_letters(letters)?;
            let bounds = parse_bounds(bounds)?;
            if letters.len() != bounds.len() {
                return fail("one bound per letter");
            }
            let total: usize = bounds.iter().map(|&b| b as usize).sum();
            let slice = enumerate(&cnf, total);
            match dual_of_slice_truncated(&slice, &letters, &bounds) {
                Ok(f) => {
                    if cli.json {
                        println!("{}", series_dto_json(&f));
                    } else {
                        println!("{f}");
                    }
                    Ok(EXIT_OK)
                }
                Err(SeriesError::WordOutOfChainOrder(w, pattern)) => {
                    println!("not contained in {pattern}: witness {w:?}");
                    Ok(EXIT_NEGATIVE)
                }
                Err(e) => Err(e.into()),
            }
        }
        Cmd::Solve {
            grammar,
            letters,
            bounds,
            compare,
            dump_system,
        } => {
            let cnf = load_cnf(grammar)?;
            let letters = parse_letters(letters)?;
            let bounds = parse_bounds(bounds)?;
            let (f, solver) = match extract_dual_with(&cnf, &letters, &bounds) {
                Ok(pair) => pair,
                Err(SolverError::NotChainContained { pattern, witness }) => {
                    println!("not contained in {pattern}: witness {witness:?}");
                    return Ok(EXIT_NEGATIVE);
                }
                Err(e) => return Err(e.into()),
            };
            let mut code = EXIT_OK;
            let mut oracle_matches = None;
            if *compare {
                let total: usize = bounds.iter().map(|&b| b as usize).sum();
                let slice = enumerate(&cnf, total);
                let oracle = dual_of_slice_truncated(&slice, &letters, &bounds)?;
                oracle_matches = Some(oracle == f);
                if oracle != f {
                    code = EXIT_NEGATIVE;
                }
            }
            let systems_json = dump_system.then(|| {
                let systems: Vec<serde_json::Value> = solver
                    .systems()
                    .iter()
                    .map(|(sys, report)| {
                        let grid = |m: &[Vec<TruncSeries>]| -> Vec<Vec<serde_json::Value>> {
                            m.iter()
                                .map(|row| row.iter().map(series_dto_json).collect())
                                .collect()
                        };
                        json!({
                            "span": [sys.span.0, sys.span.1],
                            "unknowns": sys.unknowns,
                            "left": grid(&sys.left_coeffs),
                            "right": grid(&sys.right_coeffs),
                            "constants": sys.constants.iter().map(series_dto_json).collect::<Vec<_>>(),
                            "iterations": report.iterations,
                        })
                    })
                    .collect();
                systems
            });
            if cli.json {
                let mut out = json!({ "series": series_dto_json(&f) });
                if let Some(m) = oracle_matches {
                    out["oracle"] = json!(if m { "match" } else { "mismatch" });
                }
                if let Some(systems) = systems_json {
                    out["systems"] = json!(systems);
                }
                println!("{out}");
            } else {
                println!("{f}");
                if let Some(m) = oracle_matches {
                    println!("oracle: {}", if m { "match" } else { "MISMATCH" });
                }
                if let Some(systems) = systems_json {
                    println!("{}", json!({ "systems": systems }));
                }
            }
            Ok(code)
        }
        Cmd::Recurrence {
            grammar,
            series,
            letters,
            bounds,
            d_max,
            deg_max,
            window,
        } => {
            let f = match (grammar, series) {
                (Some(path), None) => {
                    let bounds = match bounds {
                        Some(b) => parse_bounds(b)?,
                        None => return fail("--box is required with a grammar input"),
                    };
                    let letters = parse_letters(letters)?;
                    let cnf = load_cnf(path)?;
                    match extract_dual_with(&cnf, &letters, &bounds) {
                        Ok((f, _)) => f,
                        Err(SolverError::NotChainContained { pattern, witness }) => {
                            println!("not contained in {pattern}: witness {witness:?}");
                            return Ok(EXIT_NEGATIVE);
                        }
                        Err(e) => return Err(e.into()),
                    }
                }
                (None, Some(path)) => load_series(path)?,
                _ => return fail("provide a grammar file or --series, not both"),
            };
            let w = coeff_window(&f)?;
            let (n0, want_last) = match window.split_once(':') {
                Some((a, b)) => (
                    a.parse::<usize>()
                        .map_err(|_| CliError(format!("bad window {window:?}")))?,
                    Some(
                        b.parse::<usize>()
                            .map_err(|_| CliError(format!("bad window {window:?}")))?,
                    ),
                ),
                None => (
                    window
                        .parse::<usize>()
                        .map_err(|_| CliError(format!("bad window {window:?}")))?,
                    None,
                ),
            };
            let last = w.last_trusted().unwrap_or(0);
            if let Some(want) = want_last {
                if last < want {
                    return fail(format!(
                        "trusted rows end at {last}, but the window asks for {want}"
                    ));
                }
            }
            match find_recurrence(&w, *d_max, *deg_max, n0)? {
                Some(witness) => {
                    if cli.json {
                        let polys: Vec<String> =
                            witness.polys.iter().map(|p| p.to_string()).collect();
                        println!(
                            "{}",
                            json!({
                                "found": true,
                                "order": witness.d,
                                "polys": polys,
                                "window": [witness.window_start, witness.verified_through],
                            })
                        );
                    } else {
                        println!(
                            "recurrence of order {} on rows {}..={}",
                            witness.d, witness.window_start, witness.verified_through
                        );
                        for (t, p) in witness.polys.iter().enumerate() {
                            println!("p_{t} = {p}");
                        }
                    }
                    Ok(EXIT_OK)
                }
                None => {
                    if cli.json {
                        println!(
                            "{}",
                            json!({
                                "found": false,
                                "d_max": d_max,
                                "deg_max": deg_max,
                                "window": [n0, last],
                                "note": "evidence within these bounds, not a proof",
                            })
                        );
                    } else {
                        println!(
                            "no recurrence with order <= {d_max} and coefficient degree <= \
                             {deg_max} on rows {n0}..={last} (evidence within these bounds, \
                             not a proof)"
                        );
                    }
                    Ok(EXIT_NEGATIVE)
                }
            }
        }
        Cmd::Trace { series } => {
            let f = load_series(series)?;
            let r = trace_support(&f)?;
            if cli.json {
                println!(
                    "{}",
                    json!({
                        "support_size": r.support.len(),
                        "band": band_json(&r.band),
                        "witness": r.band_witness,
                    })
                );
            } else {
                println!("support size: {}", r.support.len());
                println!("band: {}", band_text(&r.band));
                if let Some(e) = &r.band_witness {
                    let parts: Vec<String> = e.iter().map(|x| x.to_string()).collect();
                    println!("witness: ({})", parts.join(", "));
                }
            }
            Ok(EXIT_OK)
        }
        Cmd::Blocks { file } => {
            let dtos: Vec<[SeriesDto; 3]> = serde_json::from_str(&read_file(file)?)
                .map_err(|e| CliError(format!("{}: {e}", file.display())))?;
            let summands: Vec<(TruncSeries, TruncSeries, TruncSeries)> = dtos
                .iter()
                .map(|[a, b, c]| {
                    Ok((
                        TruncSeries::from_dto(a)?,
                        TruncSeries::from_dto(b)?,
                        TruncSeries::from_dto(c)?,
                    ))
                })
                .collect::<Result<_, SeriesError>>()?;
            let r = block_check(&summands)?;
            let consistent = r.blocks_consistent.unwrap_or(false);
            let classes = r.classes.as_ref().expect("block reports carry classes");
            if cli.json {
                println!(
                    "{}",
                    json!({
                        "summands": summands.len(),
                        "classes": [classes[0].len(), classes[1].len(), classes[2].len()],
                        "support_size": r.support.len(),
                        "band": band_json(&r.band),
                        "consistent": consistent,
                    })
                );
            } else {
                println!("summands: {}", summands.len());
                println!(
                    "classes: a={} b={} c={}",
                    classes[0].len(),
                    classes[1].len(),
                    classes[2].len()
                );
                println!("support size: {}", r.support.len());
                println!("band: {}", band_text(&r.band));
                println!("consistent: {}", if consistent { "yes" } else { "no" });
            }
            Ok(if consistent { EXIT_OK } else { EXIT_NEGATIVE })
        }
        Cmd::Irreducible { poly, max_deg } => {
            let p = parse_poly(poly)?;
            let r = factor_search(&p, *max_deg)?;
            let (verdict, code) = if r.irreducible() {
                ("irreducible", EXIT_OK)
            } else if r.factors.is_some() {
                ("reducible", EXIT_NEGATIVE)
            } else {
                ("inconclusive", EXIT_NEGATIVE)
            };
            if cli.json {
                let factors = r
                    .factors
                    .as_ref()
                    .map(|(g, h)| vec![g.to_string(), h.to_string()]);
                println!(
                    "{}",
                    json!({
                        "verdict": verdict,
                        "factors": factors,
                        "complete": r.complete,
                        "pairs_tested": r.pairs_tested,
                        "max_total_deg": r.max_total_deg,
                    })
                );
            } else {
                match &r.factors {
                    Some((g, h)) => println!("reducible: ({g}) * ({h})"),
                    None if r.complete => println!("irreducible"),
                    None => println!(
                        "inconclusive: no factors with total degree <= {max_deg}, \
                         but the search missed some degree splits"
                    ),
                }
            }
            Ok(code)
        }
        Cmd::Quotient {
            grammar,
            poly,
            bounds,
            scan,
        } => {
            let numerator = parse_grammar(&read_file(grammar)?)?;
            let p = parse_poly(poly)?;
            let bounds = parse_bounds(bounds)?;
            let &[b0, b1] = bounds.as_slice() else {
                return fail("the quotient box takes exactly two bounds");
            };
            let witness = QuotientWitness::new(numerator, p)?;
            let quotient = match build_quotient_grammar(&witness, *scan) {
                Ok(q) => q,
                Err(crate::analysis::AnalysisError::NumeratorNotChain(w)) => {
                    println!("numerator not contained in a*b*: witness {w:?}");
                    return Ok(EXIT_NEGATIVE);
                }
                Err(e) => return Err(e.into()),
            };
            let verified = crate::analysis::verify_quotient(&witness, &quotient, &[b0, b1])?;
            let text = format_grammar(&quotient);
            if cli.json {
                println!(
                    "{}",
                    json!({
                        "grammar": text,
                        "poly": witness.p.to_string(),
                        "verified": verified,
                        "box": [b0, b1],
                    })
                );
            } else {
                print!("{text}");
                println!(
                    "# Dual(quotient) * ({}) = Dual(numerator) on box a<={b0}, b<={b1}: {}",
                    witness.p,
                    if verified { "holds" } else { "FAILS" }
                );
            }
            Ok(if verified { EXIT_OK } else { EXIT_NEGATIVE })
        }
        Cmd::AmbiguityReport { n } => {
            let r = inherent_ambiguity_report(*n)?;
            if cli.json {
                println!(
                    "{}",
                    json!({
                        "bound": r.bound,
                        "union_identity": r.union_identity_holds,
                        "complement_identity": r.complement_identity_holds,
                        "words_checked": r.words_checked,
                        "union_failure": r.union_failure.as_ref().map(|w| w.0.clone()),
                        "complement_failure": r.complement_failure.as_ref().map(|w| w.0.clone()),
                    })
                );
            } else {
                println!("bound: {}", r.bound);
                println!("words checked: {}", r.words_checked);
                println!(
                    "union identity ((l=m or m=n) xor one-equality = diagonal): {}",
                    if r.union_identity_holds { "holds" } else { "FAILS" }
                );
                println!(
                    "complement identity (a*b*c* xor some-inequality = diagonal): {}",
                    if r.complement_identity_holds { "holds" } else { "FAILS" }
                );
                if let Some(w) = &r.union_failure {
                    println!("union witness: {w}");
                }
                if let Some(w) = &r.complement_failure {
                    println!("complement witness: {w}");
                }
            }
            Ok(if r.all_hold() { EXIT_OK } else { EXIT_NEGATIVE })
        }
        Cmd::Fixtures { dir } => {
            let items = run_fixture_suite(dir);
            let all_pass = items.iter().all(|(_, status)| status == "pass");
            if cli.json {
                let arr: Vec<serde_json::Value> = items
                    .iter()
                    .map(|(name, status)| json!({ "name": name, "status": status }))
                    .collect();
                println!("{}", json!(arr));
            } else {
                for (name, status) in &items {
                    println!("{name}: {status}");
                }
            }
            Ok(if all_pass { EXIT_OK } else { EXIT_NEGATIVE })
        }
    }
}

/// One fixture item: Ok(true) = pass, Ok(false) = fail, Err = missing input
/// or a tool error along the way (reported as the error text).
type FixtureResult = Result<bool, String>;

fn fixture_grammar(dir: &Path, name: &str) -> Result<CnfGrammar, String> {
    let path = dir.join(name);
    let text = fs::read_to_string(&path).map_err(|_| format!("missing {}", path.display()))?;
    let g = parse_grammar(&text).map_err(|e| e.to_string())?;
    to_cnf(&g).map_err(|e| e.to_string())
}

fn one_equality_parity_item(dir: &Path) -> FixtureResult {
    let cnf = fixture_grammar(dir, "one_equality.g2")?;
    let cyk = ParityCyk::new(&cnf);
    for l in 0..=10usize {
        for m in 0..=10 - l {
            for n in 0..=10 - l - m {
                let w = format!("{}{}{}", "a".repeat(l), "b".repeat(m), "c".repeat(n));
                let got = if w.is_empty() {
                    cnf.eps_parity
                } else {
                    cyk.parity(&w).map_err(|e| e.to_string())?
                };
                if got != ((l == m) ^ (m == n)) {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

fn doubling_enumeration_item(dir: &Path) -> FixtureResult {
    let cnf = fixture_grammar(dir, "powers_of_two.g2")?;
    let slice = enumerate(&cnf, 64);
    let expected: Vec<String> = (0..=6).map(|k| "a".repeat(1 << k)).collect();
    let got: Vec<String> = slice.words.iter().map(|w| w.0.clone()).collect();
    if got != expected {
        return Ok(false);
    }
    let digits = DigitDfa::powers_of_two();
    for n in 0..=64u64 {
        if automatic_member(&digits, n) != slice.contains(&"a".repeat(n as usize)) {
            return Ok(false);
        }
    }
    Ok(true)
}

fn pair_recurrence_item(dir: &Path) -> FixtureResult {
    let cnf = fixture_grammar(dir, "anbn.g2")?;
    let f = crate::solver::extract_dual(&cnf, &['a', 'b'], &[32, 32]).map_err(|e| e.to_string())?;
    let w = coeff_window(&f).map_err(|e| e.to_string())?;
    let witness = find_recurrence(&w, 2, 4, 8)
        .map_err(|e| e.to_string())?
        .ok_or_else(|| "no recurrence found".to_string())?;
    let b = parse_poly("b").map_err(|e| e.to_string())?;
    Ok(witness.d == 1 && witness.polys[1] == witness.polys[0].mul(&b))
}

fn power_pairs_negative_item(dir: &Path) -> FixtureResult {
    let path = dir.join("power_pairs_64.json");
    let text = fs::read_to_string(&path).map_err(|_| format!("missing {}", path.display()))?;
    let dto: SeriesDto = serde_json::from_str(&text).map_err(|e| e.to_string())?;
    let f = TruncSeries::from_dto(&dto).map_err(|e| e.to_string())?;
    let w = coeff_window(&f).map_err(|e| e.to_string())?;
    Ok(find_recurrence(&w, 4, 8, 16).map_err(|e| e.to_string())?.is_none())
}

fn ambiguity_item() -> FixtureResult {
    Ok(inherent_ambiguity_report(9).map_err(|e| e.to_string())?.all_hold())
}

fn irreducibility_item() -> FixtureResult {
    let p = parse_poly("1+abc").map_err(|e| e.to_string())?;
    Ok(factor_search(&p, 2).map_err(|e| e.to_string())?.irreducible())
}

fn quotient_item(dir: &Path) -> FixtureResult {
    let path = dir.join("eps_only.g2");
    let text = fs::read_to_string(&path).map_err(|_| format!("missing {}", path.display()))?;
    let numerator = parse_grammar(&text).map_err(|e| e.to_string())?;
    let p = parse_poly("1 + ab").map_err(|e| e.to_string())?;
    let witness = QuotientWitness::new(numerator, p).map_err(|e| e.to_string())?;
    let quotient = build_quotient_grammar(&witness, 24).map_err(|e| e.to_string())?;
    crate::analysis::verify_quotient(&witness, &quotient, &[12, 12]).map_err(|e| e.to_string())
}

fn determinant_item(dir: &Path) -> FixtureResult {
    let mut checked = 0usize;
    for (name, letters, bounds) in [
        ("anbn.g2", &['a', 'b'][..], &[8u32, 8][..]),
        ("one_equality.g2", &['a', 'b', 'c'][..], &[3, 3, 3][..]),
    ] {
        let cnf = fixture_grammar(dir, name)?;
        let (_, solver) =
            extract_dual_with(&cnf, letters, bounds).map_err(|e| e.to_string())?;
        for (sys, _) in solver.systems() {
            if sys.unknowns.len() > 6 {
                continue;
            }
            let det = det_cofactor(&sys.identity_plus_matrix()).map_err(|e| e.to_string())?;
            if !det.constant_term() {
                return Ok(false);
            }
            checked += 1;
        }
    }
    Ok(checked > 0)
}

/// Runs all bundled fixture items; each row is (name, "pass" | "fail" |
/// an error/missing-file message).
pub fn run_fixture_suite(dir: &Path) -> Vec<(&'static str, String)> {
    let items: Vec<(&'static str, FixtureResult)> = vec![
        ("one-equality-parity", one_equality_parity_item(dir)),
        ("doubling-enumeration", doubling_enumeration_item(dir)),
        ("pair-recurrence", pair_recurrence_item(dir)),
        ("power-pairs-no-recurrence", power_pairs_negative_item(dir)),
        ("ambiguity-identities", ambiguity_item()),
        ("irreducible-1-abc", irreducibility_item()),
        ("quotient-identity", quotient_item(dir)),
        ("determinant-constant-term", determinant_item(dir)),
    ];
    items
        .into_iter()
        .map(|(name, result)| {
            let status = match result {
                Ok(true) => "pass".to_string(),
                Ok(false) => "fail".to_string(),
                Err(msg) => format!("fail ({msg})"),
            };
            (name, status)
        })
        .collect()
}
