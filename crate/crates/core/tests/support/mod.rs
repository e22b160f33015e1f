//! Brute-force oracles and harnesses shared by the integration and
//! acceptance tests. The oracles never call into the code under test;
//! results are passed in.
#![allow(dead_code)]

use std::collections::{BTreeSet, HashMap};

use rand::Rng;
use satgym_core::clause::{Literal, Term};

/// Hash-consed ground terms: equal terms share one id.
#[derive(Debug, Default)]
pub struct GroundTable {
    nodes: Vec<(String, Vec<usize>)>,
    ids: HashMap<(String, Vec<usize>), usize>,
}

impl GroundTable {
    pub fn intern(&mut self, symbol: &str, args: Vec<usize>) -> usize {
        let key = (symbol.to_string(), args);
        if let Some(&id) = self.ids.get(&key) {
            return id;
        }
        let id = self.nodes.len();
        self.nodes.push(key.clone());
        self.ids.insert(key, id);
        id
    }

    pub fn node(&self, id: usize) -> &(String, Vec<usize>) {
        &self.nodes[id]
    }

    pub fn to_term(&self, id: usize) -> Term {
        let (f, args) = &self.nodes[id];
        Term::app(f.clone(), args.iter().map(|&a| self.to_term(a)).collect())
    }

    /// All ground terms over `constants`, `g/1` and `f/2` up to `depth`.
    pub fn enumerate(&mut self, constants: &[&str], depth: usize) -> Vec<usize> {
        let mut all: Vec<usize> = constants.iter().map(|c| self.intern(c, vec![])).collect();
        for _ in 0..depth {
            let prev = all.clone();
            let mut next: BTreeSet<usize> = prev.iter().copied().collect();
            for &x in &prev {
                next.insert(self.intern("g", vec![x]));
                for &y in &prev {
                    next.insert(self.intern("f", vec![x, y]));
                }
            }
            all = next.into_iter().collect();
        }
        all
    }

    /// Interns a ground term.
    pub fn from_term(&mut self, t: &Term) -> Option<usize> {
        match t {
            Term::Var(_) => None,
            Term::App(f, args) => {
                let ids = args
                    .iter()
                    .map(|a| self.from_term(a))
                    .collect::<Option<Vec<_>>>()?;
                Some(self.intern(f, ids))
            }
        }
    }
}

/// Is `t` under `assignment` equal to ground term `g`?
fn eq_ground(table: &GroundTable, g: usize, t: &Term, assignment: &HashMap<&str, usize>) -> bool {
    match t {
        Term::Var(v) => assignment[v.as_str()] == g,
        Term::App(f, args) => {
            let (gf, gargs) = table.node(g);
            gf == f
                && gargs.len() == args.len()
                && gargs
                    .iter()
                    .zip(args)
                    .all(|(&ga, a)| eq_ground(table, ga, a, assignment))
        }
    }
}

/// Do `s` and `t` become identical under `assignment`?
pub fn equal_under(
    table: &GroundTable,
    s: &Term,
    t: &Term,
    assignment: &HashMap<&str, usize>,
) -> bool {
    match (s, t) {
        (Term::Var(a), Term::Var(b)) => assignment[a.as_str()] == assignment[b.as_str()],
        (Term::Var(v), other) | (other, Term::Var(v)) => {
            eq_ground(table, assignment[v.as_str()], other, assignment)
        }
        (Term::App(f, fa), Term::App(g, ga)) => {
            f == g
                && fa.len() == ga.len()
                && fa
                    .iter()
                    .zip(ga)
                    .all(|(x, y)| equal_under(table, x, y, assignment))
        }
    }
}

/// Matches `pattern` against ground `g`, extending `binding`.
pub fn match_ground(
    table: &GroundTable,
    pattern: &Term,
    g: usize,
    binding: &mut HashMap<String, usize>,
) -> bool {
    match pattern {
        Term::Var(v) => match binding.get(v) {
            Some(&bound) => bound == g,
            None => {
                binding.insert(v.clone(), g);
                true
            }
        },
        Term::App(f, args) => {
            let (gf, gargs) = table.node(g).clone();
            gf == *f
                && gargs.len() == args.len()
                && gargs
                    .iter()
                    .zip(args)
                    .all(|(&ga, a)| match_ground(table, a, ga, binding))
        }
    }
}

pub fn vars_of(t: &Term) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    t.for_each_var(&mut |v| {
        out.insert(v.to_string());
    });
    out
}

/// Random term over `f/2`, `g/1`, `a` and variables `X`, `Y`.
pub fn random_term(rng: &mut impl Rng, depth: usize) -> Term {
    let leaf = depth == 0 || rng.random_bool(0.35);
    if leaf {
        return match rng.random_range(0..3) {
            0 => Term::constant("a"),
            1 => Term::var("X"),
            _ => Term::var("Y"),
        };
    }
    if rng.random_bool(0.5) {
        Term::app("g", vec![random_term(rng, depth - 1)])
    } else {
        Term::app(
            "f",
            vec![random_term(rng, depth - 1), random_term(rng, depth - 1)],
        )
    }
}

/// Random interpretation over the domain {0, 1}. Every symbol, equality
/// included, gets an arbitrary table.
#[derive(Debug, Default)]
pub struct Interpretation {
    tables: HashMap<(String, usize), Vec<u8>>,
    seed: u64,
}

impl Interpretation {
    pub fn new(seed: u64) -> Self {
        Interpretation {
            tables: HashMap::new(),
            seed,
        }
    }

    fn entry(&mut self, symbol: &str, args: &[u8]) -> u8 {
        let arity = args.len();
        let seed = self.seed;
        let table = self
            .tables
            .entry((symbol.to_string(), arity))
            .or_insert_with(|| {
                let mut h = seed ^ 0x9e37_79b9_7f4a_7c15;
                for b in symbol.bytes().chain([arity as u8]) {
                    h = (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01b3);
                }
                (0..1usize << arity)
                    .map(|i| {
                        let mut z =
                            h.wrapping_add((i as u64 + 1).wrapping_mul(0x9e37_79b9_7f4a_7c15));
                        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
                        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
                        ((z ^ (z >> 31)) & 1) as u8
                    })
                    .collect()
            });
        let index = args.iter().fold(0usize, |acc, &a| acc * 2 + a as usize);
        table[index]
    }

    fn eval(&mut self, t: &Term, env: &HashMap<String, u8>) -> u8 {
        match t {
            Term::Var(v) => env[v],
            Term::App(f, args) => {
                let vals: Vec<u8> = args.iter().map(|a| self.eval(a, env)).collect();
                self.entry(f, &vals)
            }
        }
    }

    fn literal_true(&mut self, lit: &Literal, env: &HashMap<String, u8>) -> bool {
        let truth = self.eval(&lit.atom, env) == 1;
        truth != lit.negated
    }

    /// True iff the clause holds under every assignment of its variables.
    pub fn satisfies(&mut self, lits: &[Literal]) -> bool {
        let mut vars = BTreeSet::new();
        for l in lits {
            vars.extend(vars_of(&l.atom));
        }
        let vars: Vec<String> = vars.into_iter().collect();
        (0..1u64 << vars.len()).all(|bits| {
            let env: HashMap<String, u8> = vars
                .iter()
                .enumerate()
                .map(|(i, v)| (v.clone(), ((bits >> i) & 1) as u8))
                .collect();
            lits.iter().any(|l| self.literal_true(l, &env))
        })
    }
}

/// Judges a unifier result for `s =? t` (variables `X`, `Y` only) against
/// exhaustive search over ground substitutions drawn from `grounds`.
///
/// A reported unifier must equate the terms and every ground unifier found
/// must be one of its instances. A reported failure must leave the search
/// empty.
pub fn judge_unifier(
    table: &GroundTable,
    grounds: &[usize],
    s: &Term,
    t: &Term,
    mgu: Option<&satgym_core::Substitution>,
) -> Result<(), String> {
    if let Some(sigma) = mgu {
        if sigma.apply(s) != sigma.apply(t) {
            return Err(format!("{sigma} does not unify {s} and {t}"));
        }
    }
    let x = Term::var("X");
    let y = Term::var("Y");
    let mut assignment = HashMap::new();
    for &gx in grounds {
        for &gy in grounds {
            assignment.insert("X", gx);
            assignment.insert("Y", gy);
            if !equal_under(table, s, t, &assignment) {
                continue;
            }
            let Some(sigma) = mgu else {
                return Err(format!(
                    "{s} and {t} reported non-unifiable but X={}, Y={} unifies them",
                    table.to_term(gx),
                    table.to_term(gy)
                ));
            };
            let mut tau = HashMap::new();
            if !(match_ground(table, &sigma.apply(&x), gx, &mut tau)
                && match_ground(table, &sigma.apply(&y), gy, &mut tau))
            {
                return Err(format!(
                    "ground unifier X={}, Y={} of {s} and {t} is not an instance of {sigma}",
                    table.to_term(gx),
                    table.to_term(gy)
                ));
            }
        }
    }
    Ok(())
}

/// Pipelines `pairs` request/response round trips through a relay server
/// on loopback and checks order and payload bytes. Returns the elapsed
/// time of the exchange.
pub fn relay_round_trips(pairs: u64) -> Result<std::time::Duration, String> {
    use std::sync::Arc;
    use std::time::{Duration, Instant};

    use satgym_core::external::relay::{
        MessageKind, NdjsonCodec, RelayClient, RelayMessage, RelayServer,
    };
    use serde_json::json;

    let payload = |tag: u64| json!({"clauses": [format!("cnf(c{tag}, plain, p(f(X{tag})) | ~q(\"{tag}\")).")], "n": tag});
    let mut server =
        RelayServer::bind("127.0.0.1:0", Arc::new(NdjsonCodec)).map_err(|e| e.to_string())?;
    let mut client = RelayClient::connect(server.local_addr(), Arc::new(NdjsonCodec))
        .map_err(|e| e.to_string())?;
    let mut sender = client.split_sender().map_err(|e| e.to_string())?;
    let started = Instant::now();
    let producer = std::thread::spawn(move || {
        for tag in 1..=pairs {
            sender
                .send(&RelayMessage::request(tag, payload(tag)))
                .map_err(|e| e.to_string())?;
        }
        Ok::<(), String>(())
    });
    let echo = std::thread::spawn(move || {
        for expected in 1..=pairs {
            let request = server
                .next_request(Duration::from_secs(10))
                .map_err(|e| e.to_string())?;
            if request.tag != expected || request.kind != MessageKind::Request {
                return Err(format!("request {} arrived as #{expected}", request.tag));
            }
            server
                .post_response(RelayMessage::response(request.tag, request.payload))
                .map_err(|e| e.to_string())?;
        }
        Ok(server)
    });
    for expected in 1..=pairs {
        let reply = client
            .recv()
            .map_err(|e| e.to_string())?
            .ok_or_else(|| format!("connection closed before reply {expected}"))?;
        if reply.tag != expected || reply.kind != MessageKind::Response {
            return Err(format!("reply {} arrived as #{expected}", reply.tag));
        }
        if reply.payload != payload(expected) {
            return Err(format!("payload of {expected} changed"));
        }
    }
    let elapsed = started.elapsed();
    producer
        .join()
        .map_err(|_| "producer panicked".to_string())??;
    echo.join().map_err(|_| "echo panicked".to_string())??;
    Ok(elapsed)
}
