//! Line-oriented text format for finite systems, webs, ultraproducts,
//! completions and first-order structures.
//!
//! One declaration per line; `#` starts a comment. Nested definitions
//! (ultraproduct factors, completion factors) sit between `begin <tag>` and
//! `end <tag>` lines.
//!
//! ```text
//! atoms p q              # finite system
//! nu v                   # optional alias for the unit token
//! con {p,q} {q}          # maximal consistent sets, or `con all`
//! entails {p} |- q
//!
//! pair atoms 0 1         # graph / pc web
//! inj ({0},1) -> 0
//! pair order definitional
//! pc order 0<=1
//! coh 0~1
//!
//! eats elements w s t st # filter web, rows follow the element order
//! eats omega w
//! eats meet w s t st
//! eats arrow w w w w
//!
//! ultra principal 1      # 1-based index of the principal factor
//! begin factor ... end factor
//!
//! omega stages 2         # completion of two factors
//! omega config stage_cap 3 ante_cap 3 ...
//! begin left ... end left
//! begin right ... end right
//! stage 1 token <{inl(0)}->pnu>
//! psi 1 1 <{inl(0)}->pnu> -> <{0}->nu>
//!
//! cap 3                  # relational structure
//! rel C2 (p,q)
//! rel R2 (p,nu)
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use crate::completion::{complete_with, CompletionConfig, OmegaWeb};
use crate::error::{Error, Result};
use crate::fo_axioms::{decode, RelStructure};
use crate::kernel::{FiniteSys, InfoSys, Sys};
use crate::token::{subsets_up_to, ConSet, Token, TokenParser};
use crate::ultra::{principal_ultrafilter, ultraproduct_web};
use crate::webs::{filter_sys, filter_web, graph_web, pcs_web, Eats, IWeb, PairOrder, PcSpec};

/// A finite system as declared: tokens, maximal consistent sets, rules.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SysDef {
    pub tokens: Vec<Token>,
    pub nu_alias: Option<String>,
    /// `None` means every finite set is consistent. Each set contains `ν`.
    pub maximal: Option<Vec<ConSet>>,
    pub rules: Vec<(ConSet, Token)>,
}

impl SysDef {
    pub fn build(&self) -> FiniteSys {
        FiniteSys::from_rules("dsl", self.tokens.iter().cloned(), self.maximal.clone(), self.rules.clone())
    }

    /// An extensional description of a small finite system: its maximal
    /// consistent sets and every entailment of a non-member from a
    /// consistent set.
    pub fn from_sys(sys: &dyn InfoSys) -> Result<SysDef> {
        if !sys.is_finite() || sys.nu() != Token::Nu {
            return Err(Error::InvalidArgument(format!("{} is not a finite system with unit nu", sys.describe())));
        }
        let all = sys.level(0);
        if all.len() > 12 {
            return Err(Error::TooLarge(format!("{} tokens", all.len())));
        }
        let sets: Vec<ConSet> = subsets_up_to(&all, all.len()).into_iter().filter(|a| sys.con(a)).collect();
        let maximal: Vec<ConSet> =
            sets.iter().filter(|a| !sets.iter().any(|b| b.len() > a.len() && a.is_subset(b))).cloned().collect();
        let everything: ConSet = all.iter().cloned().collect();
        let maximal = if maximal == [everything] { None } else { Some(maximal) };
        let mut rules = Vec::new();
        for a in &sets {
            for b in &all {
                if *b != Token::Nu && !a.contains(b) && sys.entails(a, b) {
                    rules.push((a.clone(), b.clone()));
                }
            }
        }
        Ok(SysDef { tokens: all.into_iter().filter(|t| *t != Token::Nu).collect(), nu_alias: None, maximal, rules })
    }
}

/// Stored tables of one completion stage.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct StageTable {
    pub tokens: Vec<Token>,
    pub psi: [BTreeMap<Token, Token>; 2],
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OmegaDef {
    pub left: Box<Definition>,
    pub right: Box<Definition>,
    pub stages: usize,
    pub config: CompletionConfig,
    /// Tables for stages `0..=stages`; empty when only the recipe is given.
    pub tables: Vec<StageTable>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Definition {
    System(SysDef),
    Graph(PcSpec),
    Pcs { spec: PcSpec, pair_order: PairOrder },
    Eats(Eats),
    Ultra { principal: usize, factors: Vec<Definition> },
    Omega(OmegaDef),
    Structure(RelStructure),
}

impl Definition {
    pub fn kind(&self) -> &'static str {
        match self {
            Definition::System(_) => "system",
            Definition::Graph(_) => "graph",
            Definition::Pcs { .. } => "pcs",
            Definition::Eats(_) => "eats",
            Definition::Ultra { .. } => "ultra",
            Definition::Omega(_) => "omega",
            Definition::Structure(_) => "structure",
        }
    }

    /// The information system underlying the definition.
    pub fn sys(&self) -> Result<Sys> {
        match self {
            Definition::System(d) => Ok(Arc::new(d.build())),
            Definition::Structure(s) => Ok(Arc::new(decode(s)?)),
            Definition::Eats(e) => Ok(filter_sys(e)),
            _ => Ok(self.web()?.sys().clone()),
        }
    }

    pub fn web(&self) -> Result<IWeb> {
        match self {
            Definition::System(_) | Definition::Structure(_) => {
                Err(Error::InvalidArgument(format!("a {} definition has no φ", self.kind())))
            }
            Definition::Graph(spec) => Ok(Arc::new(graph_web(&spec.atoms, spec.inj.clone())?)),
            Definition::Pcs { spec, pair_order } => Ok(Arc::new(pcs_web(spec.clone(), *pair_order)?)),
            Definition::Eats(e) => Ok(Arc::new(filter_web(e)?)),
            Definition::Ultra { principal, factors } => {
                let webs = factors.iter().map(Definition::web).collect::<Result<Vec<_>>>()?;
                let u = principal_ultrafilter(webs.len(), *principal)?;
                Ok(ultraproduct_web(webs, &u)?.as_iweb())
            }
            Definition::Omega(d) => Ok(d.build()?.as_iweb()),
        }
    }
}

impl OmegaDef {
    /// Runs the completion and, when tables are stored, checks they agree.
    pub fn build(&self) -> Result<OmegaWeb> {
        let (l, r) = (self.left.web()?, self.right.web()?);
        let omega = complete_with(&l, &r, self.stages, self.config.clone())?;
        if !self.tables.is_empty() {
            let fresh = stage_tables(&omega, self.stages)?;
            if let Some(n) = (0..=self.stages).find(|&n| self.tables.get(n) != fresh.get(n)) {
                return Err(Error::InvalidArgument(format!("stored tables of stage {n} differ from the recomputed completion")));
            }
        }
        Ok(omega)
    }

    /// A recipe plus the tables of the completion it produces.
    pub fn with_tables(left: Definition, right: Definition, stages: usize, config: CompletionConfig) -> Result<(OmegaDef, OmegaWeb)> {
        let mut def = OmegaDef { left: Box::new(left), right: Box::new(right), stages, config, tables: Vec::new() };
        let omega = def.build()?;
        def.tables = stage_tables(&omega, stages)?;
        Ok((def, omega))
    }
}

pub fn stage_tables(omega: &OmegaWeb, stages: usize) -> Result<Vec<StageTable>> {
    (0..=stages)
        .map(|n| Ok(StageTable { tokens: omega.stage_universe(n)?, psi: [omega.psi_table(n, 1)?, omega.psi_table(n, 2)?] }))
        .collect()
}

fn perr(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { pos: line, msg: msg.into() }
}

fn with_line<T>(line: usize, r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        Error::Parse { msg, .. } => perr(line, msg),
        other => other,
    })
}

struct Line<'a> {
    no: usize,
    key: &'a str,
    rest: &'a str,
}

fn lines(text: &str) -> Vec<Line<'_>> {
    text.lines()
        .enumerate()
        .filter_map(|(i, raw)| {
            let l = raw.split('#').next().unwrap_or("").trim();
            if l.is_empty() {
                return None;
            }
            let (key, rest) = l.split_once(char::is_whitespace).unwrap_or((l, ""));
            Some(Line { no: i + 1, key, rest: rest.trim() })
        })
        .collect()
}

/// Parses a definition.
pub fn parse(text: &str) -> Result<Definition> {
    let ls = lines(text);
    parse_lines(&ls, text)
}

fn block<'a, 'b>(ls: &'b [Line<'a>], start: usize, tag: &str) -> Result<(usize, &'b [Line<'a>])> {
    let mut depth = 0usize;
    for (i, l) in ls.iter().enumerate().skip(start + 1) {
        match l.key {
            "begin" => depth += 1,
            "end" if depth == 0 => {
                if l.rest != tag {
                    return Err(perr(l.no, format!("expected `end {tag}`")));
                }
                return Ok((i, &ls[start + 1..i]));
            }
            "end" => depth -= 1,
            _ => {}
        }
    }
    Err(perr(ls[start].no, format!("unterminated `begin {tag}`")))
}

fn tokens_of(rest: &str, alias: Option<&str>) -> Result<Vec<Token>> {
    let mut p = TokenParser::new(rest, alias);
    let mut out = Vec::new();
    while !p.at_end() {
        out.push(p.token()?);
    }
    Ok(out)
}

fn parse_lines(ls: &[Line<'_>], text: &str) -> Result<Definition> {
    let alias = ls.iter().find(|l| l.key == "nu").map(|l| l.rest);
    if let Some(l) = alias {
        if l.is_empty() || l.contains(char::is_whitespace) {
            return Err(perr(0, "`nu` takes one name"));
        }
    }
    let has = |k: &str| ls.iter().any(|l| l.key == k);
    if has("ultra") {
        parse_ultra(ls)
    } else if has("omega") {
        parse_omega(ls)
    } else if has("eats") {
        parse_eats(ls)
    } else if has("rel") || has("cap") {
        parse_structure(ls, alias)
    } else if has("pair") || has("inj") || has("pc") || has("coh") {
        parse_pair(ls, alias)
    } else if has("atoms") {
        parse_system(ls, alias)
    } else {
        let _ = text;
        Err(perr(0, "no declarations"))
    }
}

fn unknown(l: &Line<'_>) -> Error {
    perr(l.no, format!("unexpected `{}` line", l.key))
}

fn parse_system(ls: &[Line<'_>], alias: Option<&str>) -> Result<Definition> {
    let mut tokens = Vec::new();
    let mut maximal: Option<Vec<ConSet>> = None;
    let mut all = false;
    let mut rules = Vec::new();
    for l in ls {
        match l.key {
            "nu" => {}
            "atoms" => tokens.extend(with_line(l.no, tokens_of(l.rest, alias))?),
            "con" if l.rest == "all" => all = true,
            "con" => {
                let mut p = TokenParser::new(l.rest, alias);
                while !p.at_end() {
                    let a = with_line(l.no, p.conset())?;
                    maximal.get_or_insert_with(Vec::new).push(a.with(Token::Nu));
                }
            }
            "entails" => {
                let mut p = TokenParser::new(l.rest, alias);
                let r = (|| {
                    let a = p.conset()?;
                    p.punct('|')?;
                    p.punct('-')?;
                    let b = p.token()?;
                    p.finish()?;
                    Ok((a, b))
                })();
                rules.push(with_line(l.no, r)?);
            }
            _ => return Err(unknown(l)),
        }
    }
    if all && maximal.is_some() {
        return Err(perr(0, "`con all` together with explicit consistent sets"));
    }
    dedup(&mut tokens);
    tokens.retain(|t| *t != Token::Nu);
    Ok(Definition::System(SysDef { tokens, nu_alias: alias.map(String::from), maximal, rules }))
}

fn dedup(ts: &mut Vec<Token>) {
    let mut seen = BTreeSet::new();
    ts.retain(|t| seen.insert(t.clone()));
}

fn pair_of(p: &mut TokenParser<'_>, sep: &[char]) -> Result<(Token, Token)> {
    let x = p.token()?;
    for c in sep {
        p.punct(*c)?;
    }
    let y = p.token()?;
    p.finish()?;
    Ok((x, y))
}

fn parse_pair(ls: &[Line<'_>], alias: Option<&str>) -> Result<Definition> {
    let mut spec = PcSpec::default();
    let mut pair_order = None;
    let mut pcs = false;
    for l in ls {
        match l.key {
            "nu" => {}
            "pair" => {
                let (sub, rest) = l.rest.split_once(char::is_whitespace).unwrap_or((l.rest, ""));
                match sub {
                    "atoms" => spec.atoms.extend(with_line(l.no, tokens_of(rest, alias))?),
                    "order" => {
                        pcs = true;
                        pair_order = Some(match rest.trim() {
                            "discrete" => PairOrder::Discrete,
                            "definitional" => PairOrder::Definitional,
                            other => return Err(perr(l.no, format!("unknown pair order `{other}`"))),
                        });
                    }
                    _ => return Err(unknown(l)),
                }
            }
            "inj" => {
                let mut p = TokenParser::new(l.rest, alias);
                let r = (|| {
                    p.punct('(')?;
                    let a = p.conset()?;
                    p.punct(',')?;
                    let alpha = p.token()?;
                    p.punct(')')?;
                    p.punct('-')?;
                    p.punct('>')?;
                    let v = p.token()?;
                    p.finish()?;
                    Ok(((a, alpha), v))
                })();
                spec.inj.push(with_line(l.no, r)?);
            }
            "pc" => {
                pcs = true;
                let rest = l.rest.strip_prefix("order").ok_or_else(|| unknown(l))?;
                spec.order.push(with_line(l.no, pair_of(&mut TokenParser::new(rest, alias), &['<', '=']))?);
            }
            "coh" => {
                pcs = true;
                let c = with_line(l.no, pair_of(&mut TokenParser::new(l.rest, alias), &['~']))?;
                spec.coherence.get_or_insert_with(Vec::new).push(c);
            }
            _ => return Err(unknown(l)),
        }
    }
    dedup(&mut spec.atoms);
    if pcs {
        Ok(Definition::Pcs { spec, pair_order: pair_order.unwrap_or(PairOrder::Discrete) })
    } else {
        Ok(Definition::Graph(spec))
    }
}

fn parse_eats(ls: &[Line<'_>]) -> Result<Definition> {
    let mut names: Vec<String> = Vec::new();
    let mut omega = None;
    let mut meet = Vec::new();
    let mut arrow = Vec::new();
    for l in ls {
        if l.key != "eats" {
            return Err(unknown(l));
        }
        let mut words = l.rest.split_whitespace();
        let sub = words.next().unwrap_or("");
        let rest: Vec<&str> = words.collect();
        let idx = |w: &str| names.iter().position(|n| n == w).ok_or_else(|| perr(l.no, format!("unknown element `{w}`")));
        match sub {
            "elements" => names = rest.iter().map(|s| s.to_string()).collect(),
            "omega" if rest.len() == 1 => omega = Some(idx(rest[0])?),
            "meet" => meet.push(rest.iter().map(|w| idx(w)).collect::<Result<Vec<_>>>()?),
            "arrow" => arrow.push(rest.iter().map(|w| idx(w)).collect::<Result<Vec<_>>>()?),
            _ => return Err(unknown(l)),
        }
    }
    let omega = omega.ok_or_else(|| perr(0, "missing `eats omega`"))?;
    Ok(Definition::Eats(Eats::new(names, omega, meet, arrow)?))
}

fn parse_ultra(ls: &[Line<'_>]) -> Result<Definition> {
    let mut principal = None;
    let mut factors = Vec::new();
    let mut i = 0;
    while i < ls.len() {
        let l = &ls[i];
        match (l.key, l.rest) {
            ("ultra", rest) => {
                let j: usize = rest
                    .strip_prefix("principal")
                    .and_then(|s| s.trim().parse().ok())
                    .filter(|&j| j >= 1)
                    .ok_or_else(|| perr(l.no, "expected `ultra principal <j>` with j ≥ 1"))?;
                principal = Some(j - 1);
            }
            ("begin", "factor") => {
                let (end, body) = block(ls, i, "factor")?;
                factors.push(parse_lines(body, "")?);
                i = end;
            }
            _ => return Err(unknown(l)),
        }
        i += 1;
    }
    let principal = principal.ok_or_else(|| perr(0, "missing `ultra principal`"))?;
    if principal >= factors.len() {
        return Err(Error::IndexOutOfRange { index: principal + 1, size: factors.len() });
    }
    Ok(Definition::Ultra { principal, factors })
}

fn parse_omega(ls: &[Line<'_>]) -> Result<Definition> {
    let mut stages = None;
    let mut config = CompletionConfig::default();
    let mut left = None;
    let mut right = None;
    let mut tables: Vec<StageTable> = Vec::new();
    let mut i = 0;
    while i < ls.len() {
        let l = &ls[i];
        match (l.key, l.rest) {
            ("omega", rest) => {
                let words: Vec<&str> = rest.split_whitespace().collect();
                match words.first() {
                    Some(&"stages") if words.len() == 2 => {
                        stages = Some(words[1].parse().map_err(|_| perr(l.no, "bad stage count"))?);
                    }
                    Some(&"config") => {
                        for kv in words[1..].chunks(2) {
                            let [k, v] = kv else { return Err(perr(l.no, "config takes key value pairs")) };
                            let v: u64 = v.parse().map_err(|_| perr(l.no, format!("bad value for {k}")))?;
                            let slot = match *k {
                                "stage_cap" => &mut config.stage_cap,
                                "ante_cap" => &mut config.ante_cap,
                                "universe_limit" => &mut config.universe_limit,
                                "exhaustive_limit" => &mut config.exhaustive_limit,
                                "samples" => &mut config.samples,
                                "token_sample" => &mut config.token_sample,
                                "seed" => {
                                    config.seed = v;
                                    continue;
                                }
                                other => return Err(perr(l.no, format!("unknown config key `{other}`"))),
                            };
                            *slot = v as usize;
                        }
                    }
                    _ => return Err(unknown(l)),
                }
            }
            ("begin", tag @ ("left" | "right")) => {
                let (end, body) = block(ls, i, tag)?;
                let def = Box::new(parse_lines(body, "")?);
                if tag == "left" {
                    left = Some(def);
                } else {
                    right = Some(def);
                }
                i = end;
            }
            ("stage", rest) => {
                let (n, tok) = rest.split_once(" token ").ok_or_else(|| unknown(l))?;
                let n = stage_index(l, n)?;
                ensure_stage(&mut tables, n);
                tables[n].tokens.push(with_line(l.no, Token::parse(tok.trim()))?);
            }
            ("psi", rest) => {
                let mut parts = rest.splitn(3, char::is_whitespace);
                let n = stage_index(l, parts.next().unwrap_or(""))?;
                let which: usize = parts.next().and_then(|w| w.parse().ok()).filter(|w| (1..=2).contains(w)).ok_or_else(|| perr(l.no, "ψ index must be 1 or 2"))?;
                let mut p = TokenParser::new(parts.next().unwrap_or(""), None);
                let kv = with_line(l.no, pair_of(&mut p, &['-', '>']))?;
                ensure_stage(&mut tables, n);
                tables[n].psi[which - 1].insert(kv.0, kv.1);
            }
            _ => return Err(unknown(l)),
        }
        i += 1;
    }
    let stages = stages.ok_or_else(|| perr(0, "missing `omega stages`"))?;
    let left = left.ok_or_else(|| perr(0, "missing left factor"))?;
    let right = right.ok_or_else(|| perr(0, "missing right factor"))?;
    if !tables.is_empty() && tables.len() != stages + 1 {
        return Err(perr(0, format!("tables for {} stages, expected {}", tables.len(), stages + 1)));
    }
    Ok(Definition::Omega(OmegaDef { left, right, stages, config, tables }))
}

fn stage_index(l: &Line<'_>, s: &str) -> Result<usize> {
    s.trim().parse().map_err(|_| perr(l.no, "bad stage index"))
}

fn ensure_stage(tables: &mut Vec<StageTable>, n: usize) {
    while tables.len() <= n {
        tables.push(StageTable::default());
    }
}

fn parse_structure(ls: &[Line<'_>], alias: Option<&str>) -> Result<Definition> {
    let mut carrier = Vec::new();
    let mut cap = None;
    let mut unit = Token::Nu;
    let mut rels: Vec<(char, usize, Vec<Token>)> = Vec::new();
    for l in ls {
        match l.key {
            "nu" => {}
            "atoms" => carrier.extend(with_line(l.no, tokens_of(l.rest, alias))?),
            "unit" => unit = with_line(l.no, Token::parse(l.rest))?,
            "cap" => cap = Some(l.rest.parse::<usize>().map_err(|_| perr(l.no, "bad arity cap"))?),
            "rel" => {
                let (name, rest) = l.rest.split_once(char::is_whitespace).ok_or_else(|| unknown(l))?;
                let kind = name.chars().next().filter(|c| *c == 'C' || *c == 'R').ok_or_else(|| perr(l.no, "relation must be C<n> or R<n>"))?;
                let arity: usize = name[1..].parse().map_err(|_| perr(l.no, "bad relation arity"))?;
                let mut p = TokenParser::new(rest, alias);
                let r = (|| {
                    p.punct('(')?;
                    let mut args = vec![p.token()?];
                    while p.eat(',') {
                        args.push(p.token()?);
                    }
                    p.punct(')')?;
                    p.finish()?;
                    Ok(args)
                })();
                let args = with_line(l.no, r)?;
                if args.len() != arity {
                    return Err(perr(l.no, format!("{name} applied to {} arguments", args.len())));
                }
                rels.push((kind, arity, args));
            }
            _ => return Err(unknown(l)),
        }
    }
    let cap = cap.ok_or_else(|| perr(0, "missing `cap`"))?;
    if !carrier.contains(&unit) {
        carrier.insert(0, unit.clone());
    }
    dedup(&mut carrier);
    let mut s = RelStructure::empty(carrier, unit, cap);
    for (kind, arity, args) in rels {
        let table = if kind == 'C' { &mut s.c } else { &mut s.r };
        let rel = table.get_mut(&arity).ok_or_else(|| perr(0, format!("{kind}{arity} is beyond the arity cap {cap}")))?;
        if let Some(t) = args.iter().find(|t| !s.carrier.contains(t)) {
            return Err(perr(0, format!("{t} is not in the carrier")));
        }
        rel.insert(args);
    }
    Ok(Definition::Structure(s))
}

fn join<T: fmt::Display>(xs: impl IntoIterator<Item = T>, sep: &str) -> String {
    xs.into_iter().map(|x| x.to_string()).collect::<Vec<_>>().join(sep)
}

fn write_nested(f: &mut fmt::Formatter<'_>, tag: &str, def: &Definition) -> fmt::Result {
    writeln!(f, "begin {tag}")?;
    write!(f, "{def}")?;
    writeln!(f, "end {tag}")
}

impl fmt::Display for Definition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Definition::System(d) => {
                writeln!(f, "atoms {}", join(&d.tokens, " "))?;
                match &d.maximal {
                    None => writeln!(f, "con all")?,
                    Some(ms) => writeln!(f, "con {}", join(ms, " "))?,
                }
                for (a, b) in &d.rules {
                    writeln!(f, "entails {a} |- {b}")?;
                }
                Ok(())
            }
            Definition::Graph(spec) | Definition::Pcs { spec, .. } => {
                writeln!(f, "pair atoms {}", join(&spec.atoms, " "))?;
                if let Definition::Pcs { pair_order, .. } = self {
                    let o = match pair_order {
                        PairOrder::Discrete => "discrete",
                        PairOrder::Definitional => "definitional",
                    };
                    writeln!(f, "pair order {o}")?;
                }
                for ((a, alpha), v) in &spec.inj {
                    writeln!(f, "inj ({a},{alpha}) -> {v}")?;
                }
                for (x, y) in &spec.order {
                    writeln!(f, "pc order {x}<={y}")?;
                }
                for (x, y) in spec.coherence.iter().flatten() {
                    writeln!(f, "coh {x}~{y}")?;
                }
                Ok(())
            }
            Definition::Eats(e) => {
                let names = e.names();
                writeln!(f, "eats elements {}", names.join(" "))?;
                writeln!(f, "eats omega {}", names[e.omega()])?;
                for x in 0..e.len() {
                    writeln!(f, "eats meet {}", join((0..e.len()).map(|y| &names[e.meet(x, y)]), " "))?;
                }
                for x in 0..e.len() {
                    writeln!(f, "eats arrow {}", join((0..e.len()).map(|y| &names[e.arrow(x, y)]), " "))?;
                }
                Ok(())
            }
            Definition::Ultra { principal, factors } => {
                writeln!(f, "ultra principal {}", principal + 1)?;
                for d in factors {
                    write_nested(f, "factor", d)?;
                }
                Ok(())
            }
            Definition::Omega(d) => {
                let c = &d.config;
                writeln!(f, "omega stages {}", d.stages)?;
                writeln!(
                    f,
                    "omega config stage_cap {} ante_cap {} universe_limit {} exhaustive_limit {} samples {} token_sample {} seed {}",
                    c.stage_cap, c.ante_cap, c.universe_limit, c.exhaustive_limit, c.samples, c.token_sample, c.seed
                )?;
                write_nested(f, "left", &d.left)?;
                write_nested(f, "right", &d.right)?;
                for (n, t) in d.tables.iter().enumerate() {
                    for tok in &t.tokens {
                        writeln!(f, "stage {n} token {tok}")?;
                    }
                    for (i, psi) in t.psi.iter().enumerate() {
                        for (k, v) in psi {
                            writeln!(f, "psi {n} {} {k} -> {v}", i + 1)?;
                        }
                    }
                }
                Ok(())
            }
            Definition::Structure(s) => {
                writeln!(f, "cap {}", s.cap)?;
                if s.nu != Token::Nu {
                    writeln!(f, "unit {}", s.nu)?;
                }
                let others: Vec<&Token> = s.carrier.iter().filter(|t| **t != s.nu).collect();
                if !others.is_empty() {
                    writeln!(f, "atoms {}", join(others, " "))?;
                }
                for (kind, table) in [('C', &s.c), ('R', &s.r)] {
                    for (n, rel) in table {
                        for t in rel {
                            writeln!(f, "rel {kind}{n} ({})", join(t, ","))?;
                        }
                    }
                }
                Ok(())
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fo_axioms::encode;
    use crate::kernel::{check_is_axioms, product, Budget};

    const F3: &str = "atoms p q\nnu v\ncon all\n";

    #[test]
    fn finite_system_and_alias() {
        let d = parse(F3).unwrap();
        let sys = d.sys().unwrap();
        assert!(sys.entails(&ConSet::empty(), &Token::Nu));
        assert_eq!(sys.level(0).len(), 3);
        assert!(check_is_axioms(sys.as_ref(), &Budget::default()).unwrap().all_pass());
    }

    #[test]
    fn maximal_sets_close_downward_with_nu() {
        let d = parse("atoms p q r\ncon {p,q} {r}\nentails {p} |- q\n").unwrap();
        let s = d.sys().unwrap();
        let set = |ts: &[&str]| ts.iter().map(|t| Token::parse(t).unwrap()).collect::<ConSet>();
        assert!(s.con(&set(&["p", "nu"])));
        assert!(!s.con(&set(&["p", "r"])));
        assert!(s.entails(&set(&["p"]), &Token::atom("q")));
        let again = parse(&d.to_string()).unwrap();
        assert_eq!(again, d);
    }

    #[test]
    fn graph_and_pcs_round_trip() {
        for text in ["pair atoms 0 1\ninj ({0},1) -> 0\n", "pair atoms p q\npair order definitional\npc order p<=q\ncoh p~q\n"] {
            let d = parse(text).unwrap();
            d.web().unwrap();
            assert_eq!(parse(&d.to_string()).unwrap(), d);
        }
    }

    #[test]
    fn eats_round_trip() {
        let d = Definition::Eats(Eats::one_point());
        let back = parse(&d.to_string()).unwrap();
        assert_eq!(back, d);
        assert!(back.web().is_ok());
    }

    #[test]
    fn structure_round_trip() {
        let f3 = parse(F3).unwrap().sys().unwrap();
        let s = encode(product(f3.clone(), f3).as_ref(), 2).unwrap();
        let d = Definition::Structure(s);
        assert_eq!(parse(&d.to_string()).unwrap(), d);
    }

    #[test]
    fn extensional_writer() {
        let p = parse("atoms p q r s\ncon {p,q,r} {s,r}\nentails {p} |- q\nentails {q,r} |- r\n").unwrap().sys().unwrap();
        let d = Definition::System(SysDef::from_sys(p.as_ref()).unwrap());
        assert!(SysDef::from_sys(product(p.clone(), p.clone()).as_ref()).is_err());
        let s2 = parse(&d.to_string()).unwrap().sys().unwrap();
        for a in subsets_up_to(&p.level(0), 5) {
            assert_eq!(p.con(&a), s2.con(&a), "{a}");
            for t in p.level(0) {
                if p.con(&a) {
                    assert_eq!(p.entails(&a, &t), s2.entails(&a, &t), "{a} |- {t}");
                }
            }
        }
    }

    #[test]
    fn ultra_round_trip() {
        let text = "ultra principal 2\nbegin factor\npair atoms 0\nend factor\nbegin factor\npair atoms a b\nend factor\n";
        let d = parse(text).unwrap();
        assert_eq!(d.to_string(), text);
        let w = d.web().unwrap();
        assert_eq!(w.sys().level(0).len(), 3);
    }

    #[test]
    fn omega_round_trip_and_tamper() {
        let g = parse("pair atoms 0\n").unwrap();
        let (def, _) = OmegaDef::with_tables(g.clone(), g, 1, CompletionConfig::default()).unwrap();
        let text = Definition::Omega(def.clone()).to_string();
        let back = parse(&text).unwrap();
        assert_eq!(back, Definition::Omega(def));
        back.web().unwrap();
        let tampered = text.replacen("stage 1 token", "stage 1 token extra\nstage 1 token", 1);
        assert!(matches!(parse(&tampered).unwrap().web(), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn errors_carry_lines() {
        assert!(matches!(parse("atoms p\nentails {p} -> q\n"), Err(Error::Parse { pos: 2, .. })));
        assert!(matches!(parse("ultra principal 3\nbegin factor\npair atoms 0\nend factor\n"), Err(Error::IndexOutOfRange { .. })));
    }
}
