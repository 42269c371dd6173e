//! The `capsafe` command line.
//!
//! Exit status: 0 on success, 1 when the analysis answers in the negative
//! (unsafe, not contained, not derivable, invalid certificate), 2 on errors.

pub mod input;
pub mod schema;

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write as _;

use anyhow::{bail, Context, Result};
use capsafe::audit::{audit_surface, AuditSurface};
use capsafe::datalog::{uniform_containment, Program};
use capsafe::encoding::{decode_text, encode_text};
use capsafe::gaplab::{probe_experiment, run_gap_bench, GAP_CSV_HEADER, PROBE_CSV_HEADER, PROBE_CSV_SPLIT_COLUMNS};
use capsafe::hypergraph::Hyperedge;
use capsafe::incremental::{EdgeUpdate, MaintainedState, Update, UpdateReport, CSV_HEADER};
use capsafe::modelfile::{parse_config, to_spec, to_text};
use capsafe::provenance::{certify, minimal_certificate, verify_certificate, why_provenance_with, Certificate, DEFAULT_CAP, EXACT_LIMIT};
use capsafe::safety::{bf_enumerate, coalition_safe};
use capsafe::{Antichain, AtomSet, AtomTable, SafetyModel};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use input::{atom, config_or, load_model, read_source, Format, ModelJson};
use schema::*;

#[derive(Debug, Parser)]
#[command(name = "capsafe", version, about = "Capability-safety analysis over Horn hypergraphs")]
pub struct Cli {
    /// Print machine-readable JSON instead of text.
    #[arg(long, global = true)]
    pub json: bool,
    /// Syntax of model inputs.
    #[arg(long, global = true, value_enum, default_value = "text")]
    pub format: Format,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    /// Model file, `-` for stdin, or a bundled fixture (`@telco`,
    /// `@telco-and-violation`, `@empty`).
    pub model: String,
    /// Configuration as a comma separated atom list; defaults to the file's
    /// `init` lines.
    #[arg(long)]
    pub init: Option<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Closure of the configuration, with derivation depths.
    Closure(ModelArgs),
    /// Is the closure free of forbidden atoms?
    CheckSafe(ModelArgs),
    /// Emergent atoms, near-miss frontier and top-k marginal gains.
    Audit {
        #[command(flatten)]
        m: ModelArgs,
        #[arg(long, default_value_t = 5)]
        k: usize,
    },
    /// Minimal unsafe configurations.
    Bf {
        model: String,
        /// Stop after this many closure evaluations.
        #[arg(long)]
        budget: Option<usize>,
    },
    /// Why-provenance: minimal supports within a universe.
    Why {
        model: String,
        /// Only this atom (all atoms otherwise).
        #[arg(long)]
        atom: Option<String>,
        /// Atoms allowed in supports; defaults to the `init` lines, or every
        /// atom when there are none.
        #[arg(long)]
        universe: Option<String>,
        /// Bound on each antichain's size.
        #[arg(long)]
        cap: Option<usize>,
    },
    /// Derivation certificate for an atom, or verification of one.
    Certify {
        #[command(flatten)]
        m: ModelArgs,
        #[arg(long, required_unless_present = "verify")]
        atom: Option<String>,
        /// Shrink the base to a minimal witness first.
        #[arg(long)]
        minimal: bool,
        /// Check a certificate given in its one-line form.
        #[arg(long, conflicts_with_all = ["atom", "minimal"])]
        verify: Option<String>,
    },
    /// Is the union of several configurations safe?
    Coalition {
        model: String,
        /// One configuration; repeat for each party.
        #[arg(long = "config", required = true)]
        configs: Vec<String>,
    },
    /// Uniform containment of one Datalog program in another.
    Contain {
        p1: String,
        p2: String,
        /// Compare a single query atom only.
        #[arg(long)]
        query: Option<String>,
    },
    /// Datalog encoding of a model.
    Encode { model: String },
    /// Model file from an encoded (or plain positive) program.
    Decode { program: String },
    /// Apply insert/delete operations and report per-update cost as CSV.
    DredTrace {
        #[command(flatten)]
        m: ModelArgs,
        /// Lines `insert a b -> c` or `delete a b -> c`; `#` comments.
        #[arg(long)]
        ops: String,
        #[arg(long, default_value_t = 5)]
        k: usize,
        /// Recompute from scratch instead of maintaining incrementally.
        #[arg(long)]
        naive: bool,
        /// Compare with a scratch recomputation after every update.
        #[arg(long)]
        check: bool,
    },
    /// Incremental versus naive maintenance on the HPRIME family, as CSV.
    BenchGap {
        #[arg(long, value_delimiter = ',', default_value = "64,128,256,512")]
        sizes: Vec<usize>,
        #[arg(long, default_value_t = 5)]
        trials: usize,
        #[arg(long, default_value_t = 10)]
        k: usize,
    },
    /// Probe counts of the DRed and frontier-avoiding strategies on the
    /// paired instances, as CSV.
    OracleProbes {
        #[arg(long, default_value_t = 16)]
        k_max: usize,
        /// Append frontier and propagation probe columns.
        #[arg(long)]
        split: bool,
    },
}

/// Text and JSON renderings of one result.
pub struct Output {
    pub text: String,
    pub json: serde_json::Value,
    pub negative: bool,
}

impl Output {
    fn new(text: String, json: &impl Serialize) -> Result<Self> {
        Ok(Output { text, json: serde_json::to_value(json)?, negative: false })
    }

    fn negative(mut self, negative: bool) -> Self {
        self.negative = negative;
        self
    }
}

/// Parses `args` (program name first), runs the command, prints the result
/// and returns the exit status.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(&cli) {
        Ok(out) => {
            let body = if cli.json {
                format!("{}\n", serde_json::to_string_pretty(&out.json).expect("JSON value serializes"))
            } else {
                out.text
            };
            // a closed pipe is the reader's choice, not an error
            let _ = std::io::stdout().lock().write_all(body.as_bytes());
            i32::from(out.negative)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            2
        }
    }
}

fn names(atoms: &AtomTable, s: &AtomSet) -> Vec<String> {
    atoms.set_names(s)
}

fn family(atoms: &AtomTable, a: &Antichain) -> Vec<Vec<String>> {
    a.elements().iter().map(|s| names(atoms, s)).collect()
}

fn audit_out(g: &AuditSurface, atoms: &AtomTable) -> AuditOut {
    AuditOut {
        emergent: names(atoms, &g.emergent),
        nmf: names(atoms, &g.nmf),
        topk: g.topk.iter().map(|&(v, gain)| Gain { atom: atoms.name(v).to_string(), gain }).collect(),
        k: g.k_param,
    }
}

pub fn run(cli: &Cli) -> Result<Output> {
    let fmt = cli.format;
    match &cli.command {
        Command::Closure(m) => {
            let (sm, init) = load_model(&m.model, fmt)?;
            let a = config_or(sm.atoms(), m.init.as_deref(), init)?;
            let run = sm.h.closure_run(&a, false);
            let atoms = sm.atoms();
            let depths: Vec<AtomDepth> = run
                .closed
                .iter()
                .map(|v| AtomDepth { atom: atoms.name(v).to_string(), depth: run.depth(v).unwrap_or(0) })
                .collect();
            let text = format!("{}\n", atoms.format_set(&run.closed));
            Output::new(text, &ClosureOut { closure: names(atoms, &run.closed), depths })
        }
        Command::CheckSafe(m) => {
            let (sm, init) = load_model(&m.model, fmt)?;
            let a = config_or(sm.atoms(), m.init.as_deref(), init)?;
            let reached = sm.h.closure(&a).intersection(&sm.forbidden);
            let safe = reached.is_empty();
            let text = if safe {
                "safe\n".to_string()
            } else {
                format!("unsafe: reaches {}\n", sm.atoms().format_set(&reached))
            };
            let out = CheckSafeOut { safe, reached_forbidden: names(sm.atoms(), &reached) };
            Ok(Output::new(text, &out)?.negative(!safe))
        }
        Command::Audit { m, k } => {
            let (sm, init) = load_model(&m.model, fmt)?;
            let a = config_or(sm.atoms(), m.init.as_deref(), init)?;
            let g = audit_surface(&sm, &a, *k);
            Output::new(g.to_text(sm.atoms()), &audit_out(&g, sm.atoms()))
        }
        Command::Bf { model, budget } => {
            let (sm, _) = load_model(model, fmt)?;
            let fam = bf_enumerate(&sm, *budget);
            let mut text = String::new();
            for w in fam.witnesses.elements() {
                let _ = writeln!(text, "{}", sm.atoms().format_set(w));
            }
            if !fam.complete {
                let _ = writeln!(text, "# incomplete: budget exhausted after {} closure evaluations", fam.closure_evals);
            }
            let out = BfOut { witnesses: family(sm.atoms(), &fam.witnesses), complete: fam.complete, closure_evals: fam.closure_evals };
            Output::new(text, &out)
        }
        Command::Why { model, atom: which, universe, cap } => {
            let (sm, init) = load_model(model, fmt)?;
            let atoms = sm.atoms();
            let u = match universe {
                Some(l) => parse_config(atoms, l).map_err(anyhow::Error::msg)?,
                None if !init.is_empty() => init,
                None => AtomSet::full(sm.n()),
            };
            let cap = cap.or((sm.n() > EXACT_LIMIT).then_some(DEFAULT_CAP));
            let t = why_provenance_with(&sm, &u, cap);
            let targets: Vec<capsafe::AtomId> = match which {
                Some(name) => vec![atom(atoms, name)?],
                None => atoms.ids().collect(),
            };
            let mut text = String::new();
            let mut entries = Vec::new();
            for v in targets {
                let _ = writeln!(text, "{}: {}", atoms.name(v), t.entry(v).format(atoms));
                entries.push(WhyEntry { atom: atoms.name(v).to_string(), witnesses: family(atoms, t.entry(v)) });
            }
            if which.is_none() {
                let _ = writeln!(text, "forbidden: {}", t.forbidden().format(atoms));
            }
            if let Some(tr) = &t.truncation {
                let _ = writeln!(text, "# truncated at {} witnesses for {} atoms", tr.cap, tr.atoms.len());
            }
            let out = WhyOut { universe: names(atoms, &u), exact: t.is_exact(), entries, forbidden: family(atoms, t.forbidden()) };
            Output::new(text, &out)
        }
        Command::Certify { m, atom: target, minimal, verify } => {
            let (sm, init) = load_model(&m.model, fmt)?;
            if let Some(text) = verify {
                let c = Certificate::parse(text, sm.atoms())?;
                let valid = verify_certificate(&sm, &c);
                let line = if valid { "valid\n" } else { "invalid\n" };
                return Ok(Output::new(line.to_string(), &VerifyOut { valid })?.negative(!valid));
            }
            let a = config_or(sm.atoms(), m.init.as_deref(), init)?;
            let name = target.as_deref().context("--atom is required")?;
            let v = atom(sm.atoms(), name)?;
            let cert = if *minimal { minimal_certificate(&sm, &a, v) } else { certify(&sm, &a, v) };
            match cert {
                Some(c) => Output::new(format!("{}\n", c.to_text(sm.atoms())), &certificate_out(&sm, &c)),
                None => {
                    let text = format!("{name} is not derivable from {}\n", sm.atoms().format_set(&a));
                    Ok(Output { text, json: serde_json::Value::Null, negative: true })
                }
            }
        }
        Command::Coalition { model, configs } => {
            let (sm, _) = load_model(model, fmt)?;
            let parts: Vec<AtomSet> = configs
                .iter()
                .map(|c| parse_config(sm.atoms(), c).map_err(anyhow::Error::msg))
                .collect::<Result<_>>()?;
            let fam = bf_enumerate(&sm, None);
            let safe = coalition_safe(&parts, &fam)?;
            let union = parts.iter().fold(AtomSet::new(), |u, c| u.union(c));
            let witness = fam.witnesses.elements().iter().find(|w| w.is_subset(&union));
            let text = match witness {
                None => "safe\n".to_string(),
                Some(w) => format!("unsafe: {} lies inside the union\n", sm.atoms().format_set(w)),
            };
            let out = CoalitionOut { safe, union: names(sm.atoms(), &union), witness: witness.map(|w| names(sm.atoms(), w)) };
            Ok(Output::new(text, &out)?.negative(!safe))
        }
        Command::Contain { p1, p2, query } => {
            let p1 = Program::parse(&read_source(p1)?).context("parsing first program")?;
            let p2 = Program::parse(&read_source(p2)?).context("parsing second program")?;
            let contained = match query {
                Some(q) => uniform_containment(&p1, &p2, atom(p1.atoms(), q)?)?,
                None => Program::is_uniformly_contained(&p1, &p2)?,
            };
            let text = if contained { "contained\n" } else { "not contained\n" };
            Ok(Output::new(text.to_string(), &ContainOut { contained, query: query.clone() })?.negative(!contained))
        }
        Command::Encode { model } => {
            let (sm, _) = load_model(model, fmt)?;
            let program = encode_text(&sm);
            Output::new(program.clone(), &EncodeOut { program })
        }
        Command::Decode { program } => {
            let sm = decode_text(&read_source(program)?)?;
            let empty = AtomSet::new();
            Output::new(to_text(&sm, &empty), &ModelJson::from(to_spec(&sm, &empty)))
        }
        Command::DredTrace { m, ops, k, naive, check } => {
            let (sm, init) = load_model(&m.model, fmt)?;
            let a = config_or(sm.atoms(), m.init.as_deref(), init)?;
            let mut st = MaintainedState::new(sm, a, *k);
            st.certify = false;
            let mut text = format!("{CSV_HEADER}\n");
            let mut updates = Vec::new();
            for (line_no, line) in read_source(ops)?.lines().enumerate() {
                let Some(u) = parse_op(&st, line).with_context(|| format!("{ops}:{}", line_no + 1))? else {
                    continue;
                };
                let rep = if *naive { st.apply_naive(&u)? } else { st.apply(&u)? };
                if *check {
                    st.check().map_err(anyhow::Error::msg).with_context(|| format!("after {}", rep.op))?;
                }
                let _ = writeln!(text, "{}", rep.csv_row());
                updates.push(update_out(&rep, st.model().atoms()));
            }
            let surface = audit_out(&st.surface(), st.model().atoms());
            Output::new(text, &DredTraceOut { updates, surface })
        }
        Command::BenchGap { sizes, trials, k } => {
            if sizes.windows(2).any(|w| w[0] > w[1]) {
                bail!("--sizes must be ascending");
            }
            let rows = run_gap_bench(sizes, *trials, *k)?;
            let mut text = format!("{GAP_CSV_HEADER}\n");
            for r in &rows {
                let _ = writeln!(text, "{}", r.csv_row());
            }
            let out: Vec<GapRowOut> = rows
                .iter()
                .map(|r| GapRowOut {
                    n: r.n,
                    incr_rederivations: r.incr_rederivations,
                    incr_wall_ns: r.incr_wall_ns,
                    naive_closure_evals: r.naive_closure_evals,
                    naive_wall_ns: r.naive_wall_ns,
                })
                .collect();
            Output::new(text, &out)
        }
        Command::OracleProbes { k_max, split } => {
            let rows = probe_experiment(1..=*k_max)?;
            let mut text = String::from(PROBE_CSV_HEADER);
            if *split {
                text.push_str(PROBE_CSV_SPLIT_COLUMNS);
            }
            text.push('\n');
            for r in &rows {
                let _ = writeln!(text, "{}", r.csv_row(*split));
            }
            let out: Vec<ProbeRowOut> = rows
                .iter()
                .map(|r| ProbeRowOut {
                    kind: r.kind.to_string(),
                    k: r.k,
                    j: r.j,
                    strategy: r.strategy.clone(),
                    probes: r.probes,
                    frontier_probes: r.frontier_probes,
                    propagation_probes: r.probes - r.frontier_probes,
                    correct_plus: r.correct_plus,
                    correct_minus: r.correct_minus,
                })
                .collect();
            Output::new(text, &out)
        }
    }
}

fn certificate_out(sm: &SafetyModel, c: &Certificate) -> CertificateOut {
    let atoms = sm.atoms();
    CertificateOut {
        target: atoms.name(c.target).to_string(),
        base: names(atoms, &c.base),
        steps: c.trace.steps.iter().map(|s| Step { edge: s.edge.0, atom: atoms.name(s.atom).to_string() }).collect(),
        text: c.to_text(atoms),
    }
}

fn update_out(r: &UpdateReport, atoms: &AtomTable) -> UpdateOut {
    UpdateOut {
        op: r.op.clone(),
        cone: names(atoms, &r.cone),
        rederivations: r.rederivations,
        closure_evals: r.closure_evals,
        wall_nanos: r.wall_nanos,
    }
}

/// `insert t1 t2 -> h` or `delete t1 t2 -> h`; blank and `#` lines give `None`.
fn parse_op(st: &MaintainedState, line: &str) -> Result<Option<Update>> {
    let line = line.split('#').next().unwrap_or("").trim();
    let Some((verb, rest)) = line.split_once(char::is_whitespace).or((!line.is_empty()).then_some((line, ""))) else {
        return Ok(None);
    };
    let (tail, head) = rest.split_once("->").context("expected `<tail atoms> -> <head>`")?;
    let tail: Vec<String> = tail.split_whitespace().map(str::to_string).collect();
    let head = match head.split_whitespace().collect::<Vec<_>>()[..] {
        [h] => h.to_string(),
        _ => bail!("exactly one head atom expected"),
    };
    match verb {
        "insert" => Ok(Some(Update::Insert(EdgeUpdate { tail, head }))),
        "delete" => {
            let atoms = st.model().atoms();
            let ids = tail.iter().map(|t| atom(atoms, t)).collect::<Result<Vec<_>>>()?;
            let e = Hyperedge::new(ids, atom(atoms, &head)?)?;
            let id = st.model().h.find_edge(&e).with_context(|| format!("no edge {line:?}"))?;
            Ok(Some(Update::Delete(id)))
        }
        other => bail!("unknown operation {other:?}"),
    }
}
