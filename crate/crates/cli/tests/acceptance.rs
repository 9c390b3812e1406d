//! Acceptance suite. Runs every criterion and prints one PASS/FAIL line for
//! each; exits nonzero if any fails.

use std::cell::Cell;
use std::collections::{BTreeMap, HashSet};
use std::path::PathBuf;
use std::process::Command;
use std::sync::Arc;

use arlang_core::dag::Dag;
use arlang_core::deployment::Deployment;
use arlang_core::eval::{Interp, NullHost, RuntimeErrorKind};
use arlang_core::object::{Heap, Value};
use arlang_core::runtime::{run_captured, RunSummary, TurnRecord};
use arlang_core::termination::TerminationGuard;
use arlang_core::{load, LoadError, Program, RuntimeOptions};
use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};

type Outcome = Result<(), String>;
type Criterion = (&'static str, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn corpus(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus").join(name)
}

fn golden(name: &str) -> String {
    std::fs::read_to_string(corpus("golden").join(name)).unwrap()
}

struct Cli {
    code: Option<i32>,
    stdout: String,
    stderr: String,
}

fn arlang(args: &[&str]) -> Cli {
    let out = Command::new(env!("CARGO_BIN_EXE_arlang")).args(args).output().unwrap();
    Cli {
        code: out.status.code(),
        stdout: String::from_utf8_lossy(&out.stdout).into_owned(),
        stderr: String::from_utf8_lossy(&out.stderr).into_owned(),
    }
}

fn run_corpus(name: &str, extra: &[&str]) -> Cli {
    let path = corpus(name);
    let mut args = vec!["run", path.to_str().unwrap()];
    args.extend_from_slice(extra);
    arlang(&args)
}

fn run_src(src: &str, max_turns: u64) -> Result<(Program, RunSummary), String> {
    let program = load(src).map_err(|e| format!("load failed: {e}\n{src}"))?;
    let summary = run_captured(
        &program,
        RuntimeOptions {
            seed: Some(11),
            max_turns,
            record: true,
            ..Default::default()
        },
    );
    Ok((program, summary))
}

fn runner(cases: u32) -> TestRunner {
    TestRunner::new_with_rng(
        Config {
            cases,
            failure_persistence: None,
            ..Config::default()
        },
        TestRng::deterministic_rng(RngAlgorithm::ChaCha),
    )
}

fn numbers(values: &[Value]) -> Vec<f64> {
    values.iter().map(|v| v.as_number().unwrap_or(f64::NAN)).collect()
}

const PAIR: &str = r#"
(class Pair
  (def-fields car cdr)
  (def-constructor (initialize-with initial-car initial-cdr)
    (set! car initial-car)
    (set! cdr initial-cdr))
  (def-routine (first) car)
  (def-routine (second) cdr)
  (def-method (set-first! new-car) (set! car new-car))
  (def-method (set-second! new-cdr) (set! cdr new-cdr))
  (def-routine (length)
    (cond ((eq? cdr #undefined) 1)
          ((eq? (type-of cdr) 'Pair) (+ 1 (length cdr)))
          (else 2))))
"#;

// ---------------------------------------------------------------------------
// 1. corpus

fn corpus_golden() -> Outcome {
    let hello = run_corpus("hello.arl", &[]);
    ensure!(hello.code == Some(0) && hello.stdout == "Hello World!\n", "hello: {:?} {:?}", hello.code, hello.stdout);

    let basic = run_corpus("basic-expressions.arl", &[]);
    ensure!(basic.code == Some(0) && basic.stdout == "no\n", "basic expressions: {:?}", basic.stdout);

    let pair = run_corpus("pair.arl", &[]);
    ensure!(
        pair.code == Some(0) && pair.stdout.starts_with("length: 3\n"),
        "pair: {:?}",
        pair.stdout
    );

    let circular = run_corpus("circular-list.arl", &[]);
    ensure!(circular.code == Some(2), "circular list exit code {:?}", circular.code);
    ensure!(
        circular.stderr.contains("termination violation") && circular.stderr.contains("Pair.length"),
        "circular list diagnostic: {}",
        circular.stderr
    );

    let wind = run_corpus("wind.arl", &["--seed", "1", "--max-turns", "30"]);
    ensure!(wind.code == Some(0), "wind exit {:?}", wind.code);
    ensure!(wind.stdout == golden("wind.seed1.turns30.out"), "wind transcript differs");
    ensure!(
        wind.stdout.lines().all(|l| l.starts_with("the new wind speed is: ")),
        "wind lines: {}",
        wind.stdout
    );

    for name in ["WindPower", "PowerOutput", "Turbine", "TurbinePowerOutput"] {
        let d = arlang(&["dump-dag", corpus("reactors.arl").to_str().unwrap(), name]);
        ensure!(d.code == Some(0), "{name} does not load");
    }
    let reactors = run_corpus("reactors.arl", &[]);
    ensure!(reactors.code == Some(0), "reactors.arl exit {:?}", reactors.code);

    let args = ["--seed", "1", "--max-turns", "50"];
    let a = run_corpus("turbine-simulator.arl", &args);
    let b = run_corpus("turbine-simulator.arl", &args);
    ensure!(a.code == Some(0), "simulator exit {:?}: {}", a.code, a.stderr);
    ensure!(a.stdout == b.stdout, "simulator is not deterministic");
    ensure!(a.stdout == golden("turbine-simulator.seed1.turns50.out"), "simulator transcript differs");
    Ok(())
}

// ---------------------------------------------------------------------------
// 2. wind power numbers

fn wind_power_numbers() -> Outcome {
    let src = format!(
        "{}\n{}",
        std::fs::read_to_string(corpus("reactors.arl"))
            .unwrap()
            .replace("(actor Main\n  (def-constructor (start) #true))", ""),
        r#"
(actor Steady
  (def-stream speed 1)
  (def-constructor (init) #true)
  (def-method (blow) (emit speed 10)))
(actor Main
  (def-constructor (start)
    (def wind (spawn-actor Steady 'init))
    (def turbine (spawn-reactor TurbinePowerOutput))
    (react-to turbine 80 0.3 wind)
    (monitor turbine.out 'print)
    (send wind 'blow))
  (def-method (print watt)
    (println "turbine produced: " (round (/ watt 1000000)) " MW")))
"#
    );
    let (_, s) = run_src(&src, 0)?;
    ensure!(s.is_ok(), "run failed: {:?}", s.error);
    let emitted: Vec<f64> = s
        .records
        .iter()
        .filter_map(|r| r.propagation.as_ref()?.emitted.as_ref())
        .flat_map(|p| p.numbers())
        .map(|n| n.unwrap_or(f64::NAN))
        .collect();
    let expected = 0.5 * std::f64::consts::PI * 80f64.powi(2) * 1.225 * 10f64.powi(3) * 0.3;
    ensure!(emitted.len() == 1, "expected one emission, got {emitted:?}");
    let rel = ((emitted[0] - expected) / expected).abs();
    ensure!(rel <= 1e-9, "power {} vs {expected} (relative error {rel})", emitted[0]);
    ensure!(s.stdout == ["turbine produced: 4 MW"], "printed {:?}", s.stdout);
    Ok(())
}

// ---------------------------------------------------------------------------
// 3. glitch freedom

#[derive(Debug, Clone, Copy)]
enum Operand {
    Var(usize),
    Lit(i8),
}

#[derive(Debug, Clone)]
struct GenDef {
    op: char,
    a: Operand,
    b: Operand,
}

#[derive(Debug, Clone)]
struct GenGraph {
    sources: usize,
    defs: Vec<GenDef>,
    outs: Vec<usize>,
}

impl GenGraph {
    fn var(&self, i: usize) -> String {
        if i < self.sources {
            format!("s{i}")
        } else {
            format!("d{}", i - self.sources)
        }
    }

    fn operand(&self, o: Operand) -> String {
        match o {
            Operand::Var(i) => self.var(i),
            Operand::Lit(n) => n.to_string(),
        }
    }

    fn nodes(&self) -> usize {
        let lits = self
            .defs
            .iter()
            .flat_map(|d| [d.a, d.b])
            .filter(|o| matches!(o, Operand::Lit(_)))
            .count();
        self.sources + self.defs.len() + lits + self.outs.len()
    }

    fn source(&self, name: &str) -> String {
        let params: Vec<String> = (0..self.sources).map(|i| self.var(i)).collect();
        let mut s = format!("(reactor ({name} {})\n", params.join(" "));
        for (i, d) in self.defs.iter().enumerate() {
            s += &format!(
                "  (def d{i} ({} {} {}))\n",
                d.op,
                self.operand(d.a),
                self.operand(d.b)
            );
        }
        let outs: Vec<String> = self.outs.iter().map(|&o| self.var(o)).collect();
        s + &format!("  (out {}))\n", outs.join(" "))
    }

    /// Direct evaluation of the generated definitions.
    fn oracle(&self, inputs: &[f64]) -> Vec<f64> {
        let mut vals = inputs.to_vec();
        for d in &self.defs {
            let get = |o: Operand| match o {
                Operand::Var(i) => vals[i],
                Operand::Lit(n) => f64::from(n),
            };
            let (a, b) = (get(d.a), get(d.b));
            vals.push(match d.op {
                '+' => a + b,
                '-' => a - b,
                _ => a * b,
            });
        }
        self.outs.iter().map(|&o| vals[o]).collect()
    }
}

fn graph_strategy(max_outs: usize) -> impl Strategy<Value = GenGraph> {
    (1usize..=3, 1usize..=4)
        .prop_flat_map(move |(sources, ndefs)| {
            let defs: Vec<_> = (0..ndefs)
                .map(|i| {
                    let vars = sources + i;
                    (
                        prop::sample::select(vec!['+', '-', '*']),
                        0..vars,
                        prop_oneof![(0..vars).prop_map(Operand::Var), (-3i8..=3).prop_map(Operand::Lit)],
                        any::<bool>(),
                    )
                        .prop_map(|(op, a, b, swap)| {
                            let a = Operand::Var(a);
                            if swap {
                                GenDef { op, a: b, b: a }
                            } else {
                                GenDef { op, a, b }
                            }
                        })
                })
                .collect();
            let outs = prop::collection::vec(0..sources + ndefs, 1..=max_outs);
            (Just(sources), defs, outs)
        })
        .prop_map(|(sources, defs, outs)| GenGraph { sources, defs, outs })
}

fn diamond() -> GenGraph {
    GenGraph {
        sources: 1,
        defs: vec![
            GenDef { op: '+', a: Operand::Var(0), b: Operand::Lit(1) },
            GenDef { op: '*', a: Operand::Var(0), b: Operand::Lit(2) },
            GenDef { op: '+', a: Operand::Var(1), b: Operand::Var(2) },
        ],
        outs: vec![3],
    }
}

type Turns = Vec<Vec<(usize, i8)>>;

fn case_strategy() -> impl Strategy<Value = (GenGraph, Vec<i8>, Turns)> {
    let graphs = prop_oneof![1 => Just(diamond()), 9 => graph_strategy(2)]
        .prop_filter("at most 12 nodes", |g| g.nodes() <= 12);
    graphs.prop_flat_map(|g| {
        let s = g.sources;
        let initial = prop::collection::vec(-5i8..=5, s);
        let turns = prop::collection::vec(prop::collection::vec((0..s, -5i8..=5), 1..=s), 1..6);
        (Just(g), initial, turns)
    })
}

fn reachable(dag: &Dag, from: &[usize]) -> HashSet<usize> {
    let mut seen: HashSet<usize> = from.iter().copied().collect();
    let mut stack = from.to_vec();
    while let Some(n) = stack.pop() {
        for &c in &dag.nodes[n].consumers {
            if seen.insert(c) {
                stack.push(c);
            }
        }
    }
    seen
}

fn check_glitch_case(g: &GenGraph, initial: &[i8], turns: &Turns) -> Result<usize, String> {
    let src = format!("{}(actor Main (def-constructor (start) #true))", g.source("G"));
    let program = load(&src).map_err(|e| format!("{e}\n{src}"))?;
    let dag = program.dag("G").unwrap().clone();
    ensure!(dag.nodes.len() <= 12, "generated graph has {} nodes", dag.nodes.len());
    let mut heap = Heap::new();
    let mut host = NullHost::default();
    let mut guard = TerminationGuard::new(false);
    let mut d = Deployment::new(Arc::clone(&dag), &mut heap);
    let mut interp = Interp::new(&program.def, &program.dags, &mut heap, &mut host, &mut guard);

    let mut current: Vec<f64> = initial.iter().map(|&v| f64::from(v)).collect();
    let mut last_emitted: Option<Vec<f64>> = None;
    let mut steps: Vec<BTreeMap<usize, i8>> = vec![initial.iter().copied().enumerate().collect()];
    steps.extend(turns.iter().map(|t| t.iter().copied().collect::<BTreeMap<_, _>>()));
    let mut audited = 0;
    for step in steps {
        for (&i, &v) in &step {
            current[i] = f64::from(v);
        }
        let assignments: Vec<(usize, Value)> = step
            .iter()
            .map(|(&i, &v)| (dag.sources[i], Value::Number(f64::from(v))))
            .collect();
        let changed: Vec<usize> = assignments.iter().map(|a| a.0).collect();
        let report = d.propagate(&mut interp, assignments).map_err(|e| e.to_string())?;
        audited += 1;

        let mut once = HashSet::new();
        for &n in &report.recomputed {
            ensure!(once.insert(n), "node {n} recomputed twice\n{src}");
        }
        for w in report.recomputed.windows(2) {
            let (a, b) = (&dag.nodes[w[0]], &dag.nodes[w[1]]);
            ensure!(a.height <= b.height && a.rank <= b.rank, "out of height order {w:?}\n{src}");
        }
        let affected = reachable(&dag, &changed);
        for &n in &report.recomputed {
            ensure!(affected.contains(&n), "node {n} recomputed without a changed input\n{src}");
        }
        let expected = g.oracle(&current);
        let sinks = d.sink_values().map(|v| numbers(&v));
        ensure!(sinks.as_ref() == Some(&expected), "sinks {sinks:?} vs oracle {expected:?}\n{src}");
        match report.emitted {
            Some(t) => {
                let t = numbers(&t);
                ensure!(t == expected, "emitted {t:?} vs oracle {expected:?}");
                ensure!(last_emitted.as_ref() != Some(&t), "emitted an unchanged tuple");
                last_emitted = Some(t);
            }
            None => ensure!(
                last_emitted.as_ref() == Some(&expected),
                "no emission although the tuple changed to {expected:?}"
            ),
        }
    }
    Ok(audited)
}

fn glitch_freedom() -> Outcome {
    let graphs = Cell::new(0usize);
    let diamonds = Cell::new(0usize);
    let mut r = runner(200);
    let result = r.run(&case_strategy(), |(g, initial, turns)| {
        let shared = g.defs.iter().any(|a| {
            g.defs.iter().any(|b| !std::ptr::eq(a, b) && matches!((a.a, b.a), (Operand::Var(x), Operand::Var(y)) if x == y))
        });
        check_glitch_case(&g, &initial, &turns).map_err(TestCaseError::fail)?;
        graphs.set(graphs.get() + 1);
        diamonds.set(diamonds.get() + usize::from(shared));
        Ok(())
    });
    result.map_err(|e| e.to_string())?;
    ensure!(graphs.get() >= 100, "only {} graphs generated", graphs.get());
    ensure!(diamonds.get() > 0, "no graph with a shared input was generated");
    Ok(())
}

// ---------------------------------------------------------------------------
// 4. purity of routines and reactors

const FORBIDDEN: [&str; 7] = [
    "(set! y 1)",
    "(spawn-actor Main 'start)",
    "(spawn-reactor R)",
    "(send y 'poke)",
    "(emit s 1)",
    "(monitor y.s 'poke)",
    "(react-to y 1)",
];

fn routine_hosts(form: &str) -> Vec<String> {
    [
        format!("(def-routine (r y) {form})"),
        format!("(def-routine (r y) (+ 1 {form}))"),
        format!("(def-routine (r y) (if y {form} 2))"),
        format!("(def-routine (r y) (cond (y 1) (else {form})))"),
        format!("(def-routine (r y) (def z {form}) z)"),
    ]
    .into_iter()
    .map(|m| format!("(class K (def-fields f) {m})"))
    .collect()
}

fn reactor_hosts(form: &str) -> Vec<String> {
    vec![
        format!("(reactor (R y) (out {form}))"),
        format!("(reactor (R y) (def z {form}) (out z))"),
        format!("(reactor (R y) (out (+ y {form})))"),
        format!("(reactor (R y) {form} (out y))"),
    ]
}

fn method_injections() -> Vec<(String, &'static str)> {
    // (source expression used by the reactor, argument given to react-to)
    let helpers = r#"
(class Noisy
  (def-fields v)
  (def-constructor (make) (set! v 1))
  (def-method (talk) v)
  (def-routine (relay other) (talk other))
  (def-routine (shout) (println "x"))
  (def-routine (nap) (sleep 1)))
"#;
    let cases: [(&str, &str); 6] = [
        ("(talk y)", "(new Noisy 'make)"),
        ("(relay y y)", "(new Noisy 'make)"),
        ("(shout y)", "(new Noisy 'make)"),
        ("(nap y)", "(new Noisy 'make)"),
        ("(println y)", "\"hi\""),
        ("(sleep y)", "5"),
    ];
    let mut out = Vec::new();
    for (expr, arg) in cases {
        let reactors = [
            format!("(reactor (R y) (out {expr}))"),
            format!("(reactor (R y) (def z {expr}) (out (equal? z z)))"),
            format!("(reactor (Inner y) (out {expr})) (reactor (R y) (def z (tick Inner y)) (out z))"),
            format!("(reactor (Inner y) (out {expr})) (reactor (Id x) (out x)) (reactor R (ror Inner Id))"),
        ];
        for r in reactors {
            out.push((
                format!(
                    "{helpers}{r}\n(actor Main (def-constructor (start) (def r (spawn-reactor R)) (react-to r {arg})))"
                ),
                expr,
            ));
        }
    }
    out
}

fn purity_matrix() -> Outcome {
    let main = "(actor Main (def-constructor (start) #true))";
    let mut caught = 0;
    let mut total = 0;
    for form in FORBIDDEN {
        for host in routine_hosts(form).into_iter().chain(reactor_hosts(form)) {
            total += 1;
            let src = format!("{host}\n{main}");
            match load(&src) {
                Err(LoadError::Purity(v)) if form.starts_with(&format!("({}", v.form)) => caught += 1,
                other => return Err(format!("not rejected as impure: {src}\n-> {:?}", other.err())),
            }
        }
    }
    for (src, expr) in method_injections() {
        total += 1;
        let (_, s) = run_src(&src, 0)?;
        match s.error {
            Some(e) if matches!(e.error.kind, RuntimeErrorKind::MethodFromPureContext { .. }) => {
                ensure!(s.stdout.is_empty(), "{expr}: output leaked from a reactor: {:?}", s.stdout);
                caught += 1;
            }
            other => return Err(format!("{expr} was not aborted: {other:?}\n{src}")),
        }
    }
    ensure!(caught == total, "{caught} of {total} injections caught");
    Ok(())
}

// ---------------------------------------------------------------------------
// 5. termination guard

fn termination_suite() -> Outcome {
    let main = |body: &str| format!("{PAIR}\n(class K (def-fields f)\n  (def-routine (same n) (same (new K) n))\n  (def-routine (swap a b) (swap (new K) b a))\n  (def-routine (fact n) (if (<= n 0) 1 (* n (fact (new K) (- n 1))))))\n(class Builder (def-fields f)\n  (def-method (build n acc) (if (<= n 0) acc (build #undefined n acc))))\n(actor Main (def-constructor (start) {body}))");
    let rejected = [
        ("circular list", "(def p1 (new Pair 'initialize-with 1 2)) (set-second! p1 p1) (length p1)"),
        ("nondecreasing argument", "(same (new K) 5)"),
        ("argument swap", "(swap (new K) 3 5)"),
    ];
    for (what, body) in rejected {
        let (_, s) = run_src(&main(body), 0)?;
        match &s.error {
            Some(e) if e.error.is_termination() => {}
            other => return Err(format!("{what}: expected a termination violation, got {other:?}")),
        }
    }

    let (_, s) = run_src(&main("(println \"\" (< 0 (fact (new K) 1000)))"), 0)?;
    ensure!(s.is_ok(), "factorial 1000: {:?}", s.error);
    ensure!(s.stdout == ["#true"], "factorial 1000 printed {:?}", s.stdout);

    // a 1000-element proper list, built by an effectful loop on the actor
    let src = format!(
        "{PAIR}\n(actor Main\n  (def-constructor (start) (send #self 'grow 1000 #undefined))\n  (def-method (grow n acc)\n    (if (<= n 0)\n        (println \"length \" (length acc))\n        (send #self 'grow (- n 1) (new Pair 'initialize-with n acc)))))"
    );
    let (_, s) = run_src(&src, 0)?;
    ensure!(s.is_ok(), "list length 1000: {:?}", s.error);
    ensure!(s.stdout == ["length 1000"], "list length printed {:?}", s.stdout);
    Ok(())
}

// ---------------------------------------------------------------------------
// 6. composition algebra

struct Tape {
    data: Vec<u32>,
    at: usize,
}

impl Tape {
    fn pick(&mut self, n: usize) -> usize {
        let v = self.data[self.at % self.data.len()];
        self.at += 1;
        v as usize % n
    }
}

#[derive(Debug, Clone)]
struct Member {
    name: String,
    sources: usize,
    sinks: usize,
}

/// Builds a pool of base behaviours and composes new ones on top of them,
/// tracking the expected source and sink counts alongside.
fn compose_pool(bases: &[GenGraph], tape: &mut Tape) -> (String, Vec<Member>, Vec<Member>) {
    let mut src = String::from("(reactor (Id x) (out x))\n");
    let mut pool = vec![Member { name: "Id".into(), sources: 1, sinks: 1 }];
    for (i, g) in bases.iter().enumerate() {
        let name = format!("B{i}");
        src += &g.source(&name);
        pool.push(Member { name, sources: g.sources, sinks: g.outs.len() });
    }
    let mut composed = Vec::new();
    for j in 0..8 {
        let name = format!("C{j}");
        let member = if tape.pick(2) == 0 {
            let out = pool[tape.pick(pool.len())].clone();
            let mut remaining = out.sources;
            let mut inputs = Vec::new();
            while remaining > 0 {
                let fits: Vec<&Member> = pool.iter().filter(|m| m.sinks <= remaining).collect();
                let m = fits[tape.pick(fits.len())].clone();
                remaining -= m.sinks;
                inputs.push(m);
            }
            let names: Vec<&str> = inputs.iter().map(|m| m.name.as_str()).collect();
            src += &format!("(reactor {name} (ror {} {}))\n", out.name, names.join(" "));
            Member {
                name,
                sources: inputs.iter().map(|m| m.sources).sum(),
                sinks: out.sinks,
            }
        } else {
            let g = pool[tape.pick(pool.len())].clone();
            let params: Vec<String> = (0..=g.sources).map(|k| format!("p{k}")).collect();
            let args = params[..g.sources].join(" ");
            let extra = &params[g.sources];
            let vals: Vec<String> = (0..g.sinks).map(|k| format!("v{k}")).collect();
            let bind = if g.sinks == 1 {
                format!("(def v0 (tick {} {args}))", g.name)
            } else {
                format!("(def-values ({}) (tick {} {args}))", vals.join(" "), g.name)
            };
            let rest = vals[1..].join(" ");
            src += &format!(
                "(reactor ({name} {}) {bind} (out (+ v0 {extra}) {rest}))\n",
                params.join(" ")
            );
            Member { name, sources: g.sources + 1, sinks: g.sinks }
        };
        pool.push(member.clone());
        composed.push(member);
    }
    src += "(actor Main (def-constructor (start) #true))\n";
    (src, pool, composed)
}

type EdgeCounts = BTreeMap<(String, String), usize>;

fn variant_edges(dag: &Dag) -> EdgeCounts {
    let mut m = BTreeMap::new();
    for (from, to, _) in dag.edges() {
        let key = (
            dag.nodes[from].kind.variant().to_string(),
            dag.nodes[to].kind.variant().to_string(),
        );
        *m.entry(key).or_insert(0) += 1;
    }
    m
}

fn edge_table(rows: &[(&str, &str, usize)]) -> EdgeCounts {
    rows.iter().map(|(a, b, n)| ((a.to_string(), b.to_string()), *n)).collect()
}

fn composition_algebra() -> Outcome {
    let mut r = runner(60);
    let strategy = (
        prop::collection::vec(graph_strategy(3), 1..4),
        prop::collection::vec(any::<u32>(), 64),
    );
    let checked = Cell::new(0usize);
    r.run(&strategy, |(bases, data)| {
        let (src, pool, composed) = compose_pool(&bases, &mut Tape { data, at: 0 });
        let program = load(&src).map_err(|e| TestCaseError::fail(format!("{e}\n{src}")))?;
        for m in pool.iter().chain(&composed) {
            let d = program.dag(&m.name).unwrap();
            prop_assert_eq!(d.explicit_sources, m.sources, "sources of {}\n{}", m.name, src);
            prop_assert_eq!(d.sinks.len(), m.sinks, "sinks of {}\n{}", m.name, src);
            prop_assert_eq!(d.count("source"), m.sources, "interior sources in {}", m.name);
            prop_assert_eq!(d.count("sink"), m.sinks, "interior sinks in {}", m.name);
            prop_assert!(d.validate().is_ok(), "{:?}", d.validate());
            checked.set(checked.get() + 1);
        }
        Ok(())
    })
    .map_err(|e| e.to_string())?;
    ensure!(checked.get() > 0, "no behaviours checked");

    let reactors = corpus("reactors.arl");
    let program = load(&std::fs::read_to_string(&reactors).unwrap()).map_err(|e| e.to_string())?;
    let shapes: [(&str, [usize; 6], EdgeCounts); 4] = [
        (
            "WindPower",
            [3, 0, 4, 4, 0, 1],
            edge_table(&[("source", "apply", 3), ("const", "apply", 4), ("apply", "apply", 3), ("apply", "sink", 1)]),
        ),
        (
            "PowerOutput",
            [3, 0, 5, 5, 0, 1],
            edge_table(&[("source", "apply", 3), ("const", "apply", 5), ("apply", "apply", 4), ("apply", "sink", 1)]),
        ),
        (
            "Turbine",
            [3, 1, 0, 0, 1, 3],
            edge_table(&[("source", "qualify", 1), ("source", "sink", 2), ("implicit-source", "sink", 1)]),
        ),
        (
            "TurbinePowerOutput",
            [3, 1, 5, 5, 1, 1],
            edge_table(&[
                ("source", "qualify", 1),
                ("source", "apply", 2),
                ("implicit-source", "apply", 1),
                ("const", "apply", 5),
                ("apply", "apply", 4),
                ("apply", "sink", 1),
            ]),
        ),
    ];
    for (name, counts, edges) in shapes {
        let dump = arlang(&["dump-dag", reactors.to_str().unwrap(), name]);
        ensure!(dump.stdout == golden(&format!("{name}.dag")), "{name} dump differs from the frozen shape");
        let d = program.dag(name).unwrap();
        let got = ["source", "implicit-source", "const", "apply", "qualify", "sink"].map(|v| d.count(v));
        ensure!(got == counts, "{name} variant counts {got:?}, expected {counts:?}");
        ensure!(variant_edges(d) == edges, "{name} edge multiset {:?}", variant_edges(d));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// 7. rebinding a qualified source

fn higher_order_rebind() -> Outcome {
    let src = r#"
(actor Gust
  (def-stream speed 1)
  (def-fields n)
  (def-constructor (init start) (set! n start))
  (def-method (blow)
    (set! n (+ n 1))
    (emit speed n)
    (sleep 1000)
    (send #self 'blow)))
(actor Calm
  (def-stream speed 1)
  (def-constructor (init) (emit speed 20)))
(reactor (Turbine blade-length efficiency wind)
  (out blade-length efficiency wind.speed))
(actor Main
  (def-constructor (start)
    (def old (spawn-actor Gust 'init 10))
    (def new (spawn-actor Calm 'init))
    (send old 'blow)
    (def turbine (spawn-reactor Turbine))
    (react-to turbine 80 0.3 old)
    (monitor turbine.out 'show)
    (sleep 3000)
    (react-to turbine 80 0.3 new))
  (def-method (show b e w) (println "wind " w)))
"#;
    let (_, s) = run_src(src, 80)?;
    ensure!(s.is_ok(), "run failed: {:?}", s.error);
    let turbine: Vec<&TurnRecord> = s.records.iter().filter(|r| &*r.process.behaviour == "Turbine").collect();
    let rebinds: Vec<usize> = turbine
        .iter()
        .enumerate()
        .filter(|(_, r)| r.message == "react-to")
        .map(|(i, _)| i)
        .collect();
    ensure!(rebinds.len() == 2, "expected two react-to turns, got {}", rebinds.len());
    let turn = turbine[rebinds[1]];
    ensure!(turn.time == 3000.0, "second rebind ran at {}", turn.time);
    let prop = turn.propagation.as_ref().ok_or("rebind turn did not propagate")?;
    let emitted: Vec<f64> = prop
        .emitted
        .as_ref()
        .ok_or("rebind turn did not emit the seeded value")?
        .numbers()
        .into_iter()
        .map(|n| n.unwrap_or(f64::NAN))
        .collect();
    ensure!(emitted == [80.0, 0.3, 20.0], "rebind turn emitted {emitted:?}");
    ensure!(prop.changed_sources.contains(&3), "implicit source not set in the rebind turn");

    let from_old = |r: &&&TurnRecord| r.publication.as_ref().is_some_and(|p| &*p.owner.behaviour == "Gust");
    let accepted_before = turbine[..rebinds[1]].iter().filter(from_old).filter(|r| !r.stale).count();
    let accepted_after = turbine[rebinds[1] + 1..].iter().filter(from_old).filter(|r| !r.stale).count();
    // Gust emits at 0, 1000, 2000 and 3000; the last one is already queued
    // behind the rebind when it is processed.
    ensure!(accepted_before == 3, "{accepted_before} publications accepted before the rebind");
    ensure!(accepted_after == 0, "{accepted_after} publications from the old wind accepted after the rebind");
    ensure!(s.stats.stale_drops == 1, "stale drops {}", s.stats.stale_drops);
    ensure!(
        s.stdout == ["wind 11", "wind 12", "wind 13", "wind 20"],
        "printed {:?}",
        s.stdout
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// 8. isolation and stream arity

fn isolation_and_arity() -> Outcome {
    let mut r = runner(100);
    r.run(&(-50i32..50, -50i32..50, -50i32..50), |(a, b, c)| {
        let src = format!(
            "{PAIR}
(actor Receiver
  (def-constructor (init) #true)
  (def-method (take p) (println \"\" (first p) \" \" (first (second p)))))
(actor Main
  (def-constructor (start)
    (def r (spawn-actor Receiver 'init))
    (def inner (new Pair 'initialize-with {b} #undefined))
    (def p (new Pair 'initialize-with {a} inner))
    (send r 'take p)
    (set-first! p {c})
    (set-first! inner {c})
    (send r 'take p)))"
        );
        let (_, s) = run_src(&src, 0).map_err(TestCaseError::fail)?;
        prop_assert!(s.is_ok(), "{:?}", s.error);
        prop_assert_eq!(s.stdout, vec![format!("{a} {b}"), format!("{c} {c}")]);
        Ok(())
    })
    .map_err(|e| e.to_string())?;

    let mut r = runner(100);
    let tuples = prop::collection::vec((-20i32..20, -20i32..20), 1..8)
        .prop_map(|mut v| {
            v.dedup();
            v
        });
    r.run(&tuples, |pairs| {
        let emits: String = pairs.iter().map(|(x, y)| format!("(emit at {x} {y}) ")).collect();
        let src = format!(
            "(actor Loc (def-stream at 2) (def-constructor (init) #true) (def-method (go) {emits}))
(reactor (Both lat lon) (out lat lon))
(actor Main
  (def-constructor (start)
    (def l (spawn-actor Loc 'init))
    (def r (spawn-reactor Both))
    (react-to r l.at)
    (monitor r.out 'show)
    (send l 'go))
  (def-method (show a b) (println \"\" a \" \" b)))"
        );
        let (_, s) = run_src(&src, 0).map_err(TestCaseError::fail)?;
        prop_assert!(s.is_ok(), "{:?}", s.error);
        let turns: Vec<&TurnRecord> = s
            .records
            .iter()
            .filter(|t| &*t.process.behaviour == "Both" && t.publication.is_some())
            .collect();
        prop_assert_eq!(turns.len(), pairs.len());
        for (t, (x, y)) in turns.iter().zip(&pairs) {
            let p = t.propagation.as_ref().unwrap();
            prop_assert_eq!(&p.changed_sources, &vec![0, 1]);
            let emitted: Vec<Option<f64>> = p.emitted.as_ref().map(|e| e.numbers()).unwrap_or_default();
            prop_assert_eq!(emitted, vec![Some(f64::from(*x)), Some(f64::from(*y))]);
        }
        let expected: Vec<String> = pairs.iter().map(|(x, y)| format!("{x} {y}")).collect();
        prop_assert_eq!(s.stdout, expected);
        Ok(())
    })
    .map_err(|e| e.to_string())
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("corpus programs and golden transcripts", corpus_golden),
        ("wind power numeric check", wind_power_numbers),
        ("glitch-free propagation on generated graphs", glitch_freedom),
        ("effects and methods rejected in pure code", purity_matrix),
        ("termination guard", termination_suite),
        ("composition algebra and frozen shapes", composition_algebra),
        ("higher-order rebind with stale drops", higher_order_rebind),
        ("isolation and arity-2 delivery", isolation_and_arity),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.into_iter().enumerate() {
        let result = std::panic::catch_unwind(check).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        match result {
            Ok(()) => println!("PASS {} {name}", i + 1),
            Err(e) => {
                failed += 1;
                println!("FAIL {} {name}: {e}", i + 1);
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
