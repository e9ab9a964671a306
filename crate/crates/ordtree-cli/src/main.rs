//! Batch front-end: parse and compile order expressions, validate and
//! canonicalize trees, decide isomorphism and lower isomorphism, sample and
//! compare points, audit initial-segment witnesses, run property suites.
//!
//! Exit codes: 0 success (or predicate true), 1 predicate false or
//! violations found, 2 usage or data errors. All output is deterministic
//! given the flags and seeds.

use std::cmp::Ordering;
use std::fs;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use ordtree::{
    canonicalize, compare, compile_str, enumerate_interval, fin_equiv, from_json_str, gamma_index,
    initial_segment_witness, invariance_check, level_equiv, lower_isomorphic, parse,
    point_from_json_str, point_to_json, predecessor, print as print_expr, random_point,
    random_point_below, random_point_with, successor, to_dot, to_json_string, tree_iso, validate,
    validate_point, CodingTree, Label, Point, Value,
};

#[derive(Parser)]
#[command(name = "ordtree", about = "coding trees for countable linear orders", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse an expression and echo its canonical form.
    Parse { expr: String },
    /// Compile an expression to a tree; optionally write JSON and DOT files.
    Compile {
        expr: String,
        #[arg(long)]
        json: Option<String>,
        #[arg(long)]
        dot: Option<String>,
    },
    /// Check a tree file against the structural rules.
    Validate { path: String },
    /// Merge isomorphic left siblings in a tree file.
    Canon {
        path: String,
        #[arg(long)]
        json: Option<String>,
    },
    /// Decide tree isomorphism (exit 0 yes, 1 no).
    Iso { a: String, b: String },
    /// Decide lower isomorphism (exit 0 yes, 1 no).
    Loweriso { a: String, b: String },
    /// Emit seeded random points of an expression, one JSON object per line.
    Sample {
        expr: String,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 10)]
        count: usize,
        #[arg(long, default_value_t = 5)]
        magnitude: i64,
    },
    /// Compare two points of the order named by the expression.
    Compare {
        expr: String,
        #[arg(long)]
        p: String,
        #[arg(long)]
        q: String,
    },
    /// Build the initial-segment witness between two anchors and probe it.
    Witness {
        expr: String,
        #[arg(long)]
        f: String,
        #[arg(long)]
        g: String,
        #[arg(long, default_value_t = 100)]
        probes: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        trace: Option<String>,
    },
    /// Run a property suite and report pass/fail counts.
    Check {
        expr: String,
        #[arg(long, value_enum)]
        suite: Suite,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Suite {
    Order,
    Transitivity,
    Invariance,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

/// Expression inline, or a tree file when the argument ends in `.json`.
fn load_tree(arg: &str) -> Result<CodingTree, String> {
    if arg.ends_with(".json") {
        let text = fs::read_to_string(arg).map_err(|e| format!("{arg}: {e}"))?;
        from_json_str(&text).map_err(|e| format!("{arg}: {e}"))
    } else {
        compile_str(arg).map_err(|e| e.to_string())
    }
}

/// Point inline as `(v, v, ...)`, or a point file otherwise. Inline values
/// are coerced by the labels along the branch: `top`, `p/q`, or integers.
fn load_point(t: &CodingTree, arg: &str) -> Result<Point, String> {
    let text = arg.trim();
    if text.starts_with('(') {
        parse_inline_point(t, text)
    } else {
        let body = fs::read_to_string(arg).map_err(|e| format!("{arg}: {e}"))?;
        point_from_json_str(&body).map_err(|e| format!("{arg}: {e}"))
    }
}

fn parse_inline_point(t: &CodingTree, text: &str) -> Result<Point, String> {
    let inner = text
        .strip_prefix('(')
        .and_then(|s| s.strip_suffix(')'))
        .ok_or_else(|| format!("bad point syntax {text:?}"))?;
    let items: Vec<&str> = if inner.trim().is_empty() {
        Vec::new()
    } else {
        inner.split(',').map(str::trim).collect()
    };
    let h = t.height() as usize;
    if items.len() != h {
        return Err(format!("point has {} values, tree height is {h}", items.len()));
    }
    let mut values = Vec::with_capacity(h);
    let mut vertex = t.root();
    for item in items {
        let label = t.vertex(vertex).label;
        let value = inline_value(label, item)?;
        vertex = next_vertex(t, vertex, &value)?;
        values.push(value);
    }
    let p = Point::new(values);
    let report = validate_point(t, &p);
    if report.is_valid() {
        Ok(p)
    } else {
        Err(report.to_string())
    }
}

fn inline_value(label: Label, item: &str) -> Result<Value, String> {
    match label {
        Label::Z | Label::WStar => item
            .parse::<i64>()
            .map(Value::Int)
            .map_err(|_| format!("expected an integer for {label}, got {item:?}")),
        Label::Q | Label::Qn(_) => ordtree::point::parse_rational(item)
            .map(Value::Rat)
            .map_err(|_| format!("expected a rational for {label}, got {item:?}")),
        Label::QDot | Label::QnDot(_) => {
            if item.eq_ignore_ascii_case("top") {
                Ok(Value::Top)
            } else {
                ordtree::point::parse_rational(item)
                    .map(Value::Rat)
                    .map_err(|_| format!("expected a rational or 'top' for {label}, got {item:?}"))
            }
        }
        Label::Singleton => Err("leaves carry no value".into()),
    }
}

/// One routing step for inline point parsing; the full point is re-checked
/// by the validator afterwards.
fn next_vertex(t: &CodingTree, vertex: usize, value: &Value) -> Result<usize, String> {
    let label = t.vertex(vertex).label;
    let children = &t.vertex(vertex).children;
    let next = match (label, value) {
        (Label::Z | Label::Q, _) => children[0],
        (Label::WStar, Value::Int(0)) => *children.last().unwrap(),
        (Label::WStar, _) => children[0],
        (Label::QDot | Label::QnDot(_), Value::Top) => *children.last().unwrap(),
        (Label::QDot, _) => children[0],
        (Label::Qn(n) | Label::QnDot(n), Value::Rat(r)) => {
            let m = ordtree::point::col(r, n) as usize;
            ordtree::tree::left_children_by_rank(t, vertex)[m]
        }
        _ => return Err(format!("value {value} does not fit label {label}")),
    };
    Ok(next)
}

fn ordering_name(o: Ordering) -> &'static str {
    match o {
        Ordering::Less => "Less",
        Ordering::Equal => "Equal",
        Ordering::Greater => "Greater",
    }
}

fn run(cmd: Command) -> Result<ExitCode, String> {
    match cmd {
        Command::Parse { expr } => {
            let e = parse(&expr).map_err(|e| e.to_string())?;
            println!("{}", print_expr(&e));
            Ok(ExitCode::SUCCESS)
        }
        Command::Compile { expr, json, dot } => {
            let tree = compile_str(&expr).map_err(|e| e.to_string())?;
            if let Some(path) = &json {
                fs::write(path, to_json_string(&tree) + "\n").map_err(|e| e.to_string())?;
            }
            if let Some(path) = &dot {
                fs::write(path, to_dot(&tree)).map_err(|e| e.to_string())?;
            }
            println!("ok: {} vertices, height {}", tree.vertex_count(), tree.height());
            Ok(ExitCode::SUCCESS)
        }
        Command::Validate { path } => {
            let tree = load_tree(&path)?;
            let report = validate(&tree);
            println!("{report}");
            Ok(if report.is_valid() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            })
        }
        Command::Canon { path, json } => {
            let tree = load_tree(&path)?;
            let fixed = canonicalize(&tree).map_err(|e| e.to_string())?;
            let body = to_json_string(&fixed);
            match json {
                Some(path) => {
                    fs::write(&path, body + "\n").map_err(|e| e.to_string())?;
                    println!("ok: {} vertices, height {}", fixed.vertex_count(), fixed.height());
                }
                None => println!("{body}"),
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Iso { a, b } => {
            let ta = load_tree(&a)?;
            let tb = load_tree(&b)?;
            let yes = tree_iso(&ta, &tb).is_some();
            println!("{yes}");
            Ok(if yes { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
        Command::Loweriso { a, b } => {
            let ta = load_tree(&a)?;
            let tb = load_tree(&b)?;
            let yes = lower_isomorphic(&ta, &tb).map_err(|e| e.to_string())?;
            println!("{yes}");
            Ok(if yes { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
        Command::Sample { expr, seed, count, magnitude } => {
            let tree = compile_str(&expr).map_err(|e| e.to_string())?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..count {
                let p = random_point_with(&tree, &mut rng, magnitude);
                println!("{}", point_to_json(&p));
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Compare { expr, p, q } => {
            let tree = compile_str(&expr).map_err(|e| e.to_string())?;
            let p = load_point(&tree, &p)?;
            let q = load_point(&tree, &q)?;
            let ord = compare(&tree, &p, &q).map_err(|e| e.to_string())?;
            println!("{}", ordering_name(ord));
            Ok(ExitCode::SUCCESS)
        }
        Command::Witness { expr, f, g, probes, seed, trace } => {
            let tree = compile_str(&expr).map_err(|e| e.to_string())?;
            let f = load_point(&tree, &f)?;
            let g = load_point(&tree, &g)?;
            let mut witness =
                initial_segment_witness(&tree, &f, &g).map_err(|e| e.to_string())?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut violations = 0usize;
            let anchor_image = witness.map(&f).map_err(|e| e.to_string())?;
            if anchor_image != g {
                violations += 1;
            }
            for _ in 0..probes {
                let p = random_point_below(&tree, &f, &mut rng, 5);
                let q = random_point_below(&tree, &f, &mut rng, 5);
                let fp = witness.map(&p).map_err(|e| e.to_string())?;
                let fq = witness.map(&q).map_err(|e| e.to_string())?;
                let before = compare(&tree, &p, &q).map_err(|e| e.to_string())?;
                let after = compare(&tree, &fp, &fq).map_err(|e| e.to_string())?;
                if before != after {
                    violations += 1;
                }
                if witness.inverse(&fp).map_err(|e| e.to_string())? != p {
                    violations += 1;
                }
            }
            if let Some(path) = trace {
                fs::write(&path, witness.trace_json().to_string() + "\n")
                    .map_err(|e| e.to_string())?;
            }
            println!("probes={probes} violations={violations}");
            Ok(if violations == 0 {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            })
        }
        Command::Check { expr, suite, seed } => {
            let tree = compile_str(&expr).map_err(|e| e.to_string())?;
            let violations = match suite {
                Suite::Order => check_order(&tree, seed),
                Suite::Transitivity => check_transitivity(&tree, seed)?,
                Suite::Invariance => check_invariance(&tree, seed)?,
            };
            Ok(if violations == 0 {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            })
        }
    }
}

/// Total-order laws plus neighbour coherence on seeded samples.
fn check_order(tree: &CodingTree, seed: u64) -> usize {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut violations = 0usize;
    let mut checks = 0usize;
    for _ in 0..1000 {
        let p = random_point_with(tree, &mut rng, 5);
        let q = random_point_with(tree, &mut rng, 5);
        let r = random_point_with(tree, &mut rng, 5);
        let pq = compare(tree, &p, &q).unwrap();
        let qp = compare(tree, &q, &p).unwrap();
        checks += 2;
        if pq != qp.reverse() {
            violations += 1;
        }
        if (pq == Ordering::Equal) != (p == q) {
            violations += 1;
        }
        let qr = compare(tree, &q, &r).unwrap();
        let pr = compare(tree, &p, &r).unwrap();
        checks += 1;
        if pq != Ordering::Greater && qr != Ordering::Greater && pr == Ordering::Greater {
            violations += 1;
        }
        if let Ok(Some(s)) = successor(tree, &p) {
            checks += 2;
            if compare(tree, &p, &s).unwrap() != Ordering::Less {
                violations += 1;
            }
            if enumerate_interval(tree, &p, &s).map(|v| v.len()).ok() != Some(2) {
                violations += 1;
            }
        }
        if let Ok(Some(b)) = predecessor(tree, &p) {
            checks += 1;
            if compare(tree, &b, &p).unwrap() != Ordering::Less {
                violations += 1;
            }
        }
        checks += 1;
        if fin_equiv(tree, &p, &q).unwrap()
            && compare(tree, &p, &q).unwrap() != Ordering::Greater
            && enumerate_interval(tree, &p, &q).is_err()
        {
            violations += 1;
        }
    }
    println!("law=total-order checks={checks} violations={violations}");
    println!("suite=order result={}", if violations == 0 { "pass" } else { "fail" });
    violations
}

/// Witness order preservation, stratum stability and inverse round trips.
fn check_transitivity(tree: &CodingTree, seed: u64) -> Result<usize, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut violations = 0usize;
    let mut checks = 0usize;
    for anchor in 0..5u64 {
        let f = random_point(tree, seed.wrapping_add(2 * anchor + 1), 5);
        let g = random_point(tree, seed.wrapping_add(2 * anchor + 2), 5);
        let mut witness = initial_segment_witness(tree, &f, &g).map_err(|e| e.to_string())?;
        checks += 1;
        if witness.map(&f).map_err(|e| e.to_string())? != g {
            violations += 1;
        }
        for _ in 0..200 {
            let p = random_point_below(tree, &f, &mut rng, 5);
            let q = random_point_below(tree, &f, &mut rng, 5);
            let fp = witness.map(&p).map_err(|e| e.to_string())?;
            let fq = witness.map(&q).map_err(|e| e.to_string())?;
            checks += 3;
            if compare(tree, &p, &q).unwrap() != compare(tree, &fp, &fq).unwrap() {
                violations += 1;
            }
            if witness.inverse(&fp).map_err(|e| e.to_string())? != p {
                violations += 1;
            }
            if p != f && fp != g {
                let i = gamma_index(tree, &f, &p).map_err(|e| e.to_string())?;
                let j = gamma_index(tree, &g, &fp).map_err(|e| e.to_string())?;
                if i != j {
                    violations += 1;
                }
            }
        }
    }
    println!("law=witness-embedding checks={checks} violations={violations}");
    println!(
        "suite=transitivity result={}",
        if violations == 0 { "pass" } else { "fail" }
    );
    Ok(violations)
}

/// Block-partition preservation at every level, plus the refinement chain.
fn check_invariance(tree: &CodingTree, seed: u64) -> Result<usize, String> {
    let mut violations = 0usize;
    let mut checks = 0usize;
    let f = random_point(tree, seed.wrapping_add(1), 5);
    let g = random_point(tree, seed.wrapping_add(2), 5);
    for i in 0..=tree.height() {
        let report = invariance_check(tree, i, &f, &g, 200, seed.wrapping_add(i as u64))
            .map_err(|e| e.to_string())?;
        checks += report.checked;
        violations += report.violations.len();
    }
    // refinement chain on plain samples
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..200 {
        let p = random_point_with(tree, &mut rng, 5);
        let q = random_point_with(tree, &mut rng, 5);
        for i in 0..tree.height() {
            checks += 1;
            if level_equiv(tree, &p, &q, i).unwrap() && !level_equiv(tree, &p, &q, i + 1).unwrap()
            {
                violations += 1;
            }
        }
    }
    println!("law=invariance checks={checks} violations={violations}");
    println!(
        "suite=invariance result={}",
        if violations == 0 { "pass" } else { "fail" }
    );
    Ok(violations)
}
