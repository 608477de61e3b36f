//! The partial product of two i-webs and its staged completion.
//!
//! Stage membership, consistency, entailment, `φ` and `ψ` are decided
//! intensionally from the token structure, so every stage is an honest
//! (possibly infinite) information system. Each stage also carries a finite
//! enumerated universe, used for validation and for the interpreter's pools;
//! only that enumeration is truncated.

use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, Mutex, RwLock};

use itertools::Itertools;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::interp::{token_in_interp, Fuel};
use crate::kernel::{
    check_is_axioms_on, check_morphism_on, AxiomReport, Budget, Exponential, InfoSys, Membership, MorphismKind, Product,
    Sys, TokenMap,
};
use crate::lambda::Term;
use crate::token::{subsets_up_to, ConSet, Token};
use crate::webs::{IWeb, Web};

pub const STAGE_CAP_ENV: &str = "WEBBED_LAMBDA_STAGE_CAP";

const DEFAULT_STAGE_CAP: usize = 3;

/// Stage cap from the environment, or the default of 3.
pub fn stage_cap_from_env() -> usize {
    std::env::var(STAGE_CAP_ENV).ok().and_then(|v| v.trim().parse().ok()).unwrap_or(DEFAULT_STAGE_CAP)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompletionConfig {
    /// Highest stage that may be materialized.
    pub stage_cap: usize,
    /// Antecedent cardinality bound when enumerating new tokens.
    pub ante_cap: usize,
    /// Bound on the enumerated universe of one stage.
    pub universe_limit: usize,
    /// Candidate-set families up to this size are checked exhaustively.
    pub exhaustive_limit: usize,
    /// Random sets drawn once the exhaustive limit is passed.
    pub samples: usize,
    /// Tokens drawn per stage when a universe is too large to validate whole.
    pub token_sample: usize,
    pub seed: u64,
}

impl Default for CompletionConfig {
    fn default() -> Self {
        CompletionConfig {
            stage_cap: stage_cap_from_env(),
            ante_cap: 3,
            universe_limit: 20_000,
            exhaustive_limit: 10_000,
            samples: 400,
            token_sample: 64,
            seed: 7,
        }
    }
}

struct Stage {
    universe: Arc<Vec<Token>>,
    fresh_from: usize,
    psi: [BTreeMap<Token, Token>; 2],
    truncated: bool,
}

struct Core {
    webs: [IWeb; 2],
    prod: Product,
    cfg: CompletionConfig,
    stages: RwLock<Vec<Arc<Stage>>>,
    stage_memo: Mutex<HashMap<Token, Option<usize>>>,
}

fn which_index(which: usize) -> Result<usize> {
    match which {
        1 | 2 => Ok(which - 1),
        _ => Err(Error::InvalidArgument(format!("side must be 1 or 2, got {which}"))),
    }
}

impl Core {
    fn new(a1: &IWeb, a2: &IWeb, cfg: CompletionConfig) -> Arc<Core> {
        Arc::new(Core {
            webs: [a1.clone(), a2.clone()],
            prod: Product::new(a1.sys().clone(), a2.sys().clone()),
            cfg,
            stages: RwLock::new(Vec::new()),
            stage_memo: Mutex::new(HashMap::new()),
        })
    }

    fn sys(self: &Arc<Self>, stage: Option<usize>) -> Sys {
        Arc::new(StageSys { core: self.clone(), stage })
    }

    /// Least stage containing `t`.
    fn stage_of(&self, t: &Token) -> Option<usize> {
        if let Some(k) = self.stage_memo.lock().expect("memo").get(t) {
            return *k;
        }
        let k = self.compute_stage(t);
        self.stage_memo.lock().expect("memo").insert(t.clone(), k);
        k
    }

    fn compute_stage(&self, t: &Token) -> Option<usize> {
        if self.prod.has_token(t) {
            return Some(0);
        }
        let (a, alpha) = t.as_arrow()?;
        let mut m = self.stage_of(alpha)?;
        for x in a.iter() {
            m = m.max(self.stage_of(x)?);
        }
        if !self.con(m, a) || (m == 0 && self.phi0(a, alpha).is_some()) {
            return None;
        }
        Some(m + 1)
    }

    fn within(&self, n: usize, t: &Token) -> bool {
        self.stage_of(t).is_some_and(|k| k <= n)
    }

    fn pair_within(&self, n: usize, a: &ConSet, alpha: &Token) -> bool {
        self.within(n, alpha) && a.iter().all(|x| self.within(n, x))
    }

    fn con(&self, n: usize, x: &ConSet) -> bool {
        if n == 0 {
            return x.iter().all(|t| self.prod.has_token(t)) && self.prod.con(x);
        }
        let mut old = Vec::new();
        let mut new = Vec::new();
        for t in x.iter() {
            match self.stage_of(t) {
                Some(k) if k < n => old.push(t.clone()),
                Some(k) if k == n => new.push(t.clone()),
                _ => return false,
            }
        }
        let old: ConSet = old.into_iter().collect();
        let new: ConSet = new.into_iter().collect();
        self.clause1(n, &old, &new) || self.clause2(n, &old, &new)
    }

    /// Consistency in `S_n ⇒ S_n`.
    fn exp_con(&self, n: usize, x: &ConSet) -> bool {
        let Some(pairs) = x.iter().map(|t| t.as_arrow()).collect::<Option<Vec<_>>>() else { return false };
        if !pairs.iter().all(|(a, b)| self.pair_within(n, a, b) && self.con(n, a)) {
            return false;
        }
        let succ: ConSet = pairs.iter().map(|(_, b)| (*b).clone()).collect();
        if self.con(n, &succ) {
            return true;
        }
        fn go(core: &Core, n: usize, pairs: &[(&ConSet, &Token)], ante: ConSet, succ: ConSet) -> bool {
            let Some(((a, b), rest)) = pairs.split_first() else { return true };
            if !go(core, n, rest, ante.clone(), succ.clone()) {
                return false;
            }
            let ante2 = ante.union(a);
            if !core.con(n, &ante2) {
                return true;
            }
            let succ2 = succ.with((*b).clone());
            core.con(n, &succ2) && go(core, n, rest, ante2, succ2)
        }
        go(self, n, &pairs, ConSet::empty(), ConSet::empty())
    }

    fn clause1(&self, n: usize, old: &ConSet, new: &ConSet) -> bool {
        if !self.con(n - 1, old) || !self.exp_con(n - 1, new) {
            return false;
        }
        let all = old.union(new);
        (0..2).all(|i| self.webs[i].sys().con(&self.psi_set(i, &all)))
    }

    /// Searches `X = new ∪ Y` with `Y` drawn from `φ`-preimages of `old`.
    fn clause2(&self, n: usize, old: &ConSet, new: &ConSet) -> bool {
        let needs: Vec<&Token> = old.iter().filter(|o| !self.entails(&ConSet::empty(), o)).collect();
        let options: Vec<Vec<(ConSet, Token)>> = needs.iter().map(|o| self.phi_inverse(n - 1, o)).collect();
        if options.iter().any(|v| v.is_empty()) {
            return false;
        }
        for choice in options.iter().map(|v| v.iter()).multi_cartesian_product().take(4096) {
            let ys: Vec<&(ConSet, Token)> = choice;
            let x: ConSet = new.iter().cloned().chain(ys.iter().map(|(a, b)| Token::arrow(a.clone(), b.clone()))).collect();
            if !self.exp_con(n - 1, &x) {
                continue;
            }
            let img: ConSet = ys.iter().filter_map(|(a, b)| self.phi_at(n - 1, a, b)).collect();
            if needs.iter().all(|o| self.entails(&img, o)) {
                return true;
            }
        }
        needs.is_empty() && self.exp_con(n - 1, new)
    }

    /// Stage-independent: `t ∈ a`, or `a ∩ S₀` entails `t` in the product.
    fn entails(&self, a: &ConSet, t: &Token) -> bool {
        if a.contains(t) {
            return true;
        }
        if !self.prod.has_token(t) {
            return false;
        }
        let base = a.filter_map(|x| self.prod.has_token(x).then(|| x.clone()));
        self.prod.entails(&base, t)
    }

    fn phi0(&self, a: &ConSet, alpha: &Token) -> Option<Token> {
        if !self.prod.has_token(alpha) || !a.iter().all(|x| self.prod.has_token(x)) || !self.prod.con(a) {
            return None;
        }
        let pn = Token::ProdNu;
        if a.iter().all(|x| *x == pn) && *alpha == pn {
            return Some(pn);
        }
        let right = |t: &Token| matches!(t, Token::ProdNu | Token::InR(_));
        let left = |t: &Token| matches!(t, Token::ProdNu | Token::InL(_));
        if a.iter().all(right) && right(alpha) {
            let v = self.webs[1].phi(&self.prod.snd_set(a), &self.prod.snd(alpha))?;
            return self.prod.pair(&self.webs[0].sys().nu(), &v);
        }
        if a.iter().all(left) && left(alpha) {
            let v = self.webs[0].phi(&self.prod.fst_set(a), &self.prod.fst(alpha))?;
            return self.prod.pair(&v, &self.webs[1].sys().nu());
        }
        None
    }

    fn phi_at(&self, n: usize, a: &ConSet, alpha: &Token) -> Option<Token> {
        if n == 0 {
            return self.phi0(a, alpha);
        }
        if let Some(v) = self.phi_at(n - 1, a, alpha) {
            return Some(v);
        }
        (self.pair_within(n - 1, a, alpha) && self.con(n - 1, a)).then(|| Token::arrow(a.clone(), alpha.clone()))
    }

    /// `φ_ω`, together with the stage the pair is first defined at.
    fn phi_omega(&self, a: &ConSet, alpha: &Token) -> Option<(Token, usize)> {
        let mut m = self.stage_of(alpha)?;
        for x in a.iter() {
            m = m.max(self.stage_of(x)?);
        }
        if m == 0 {
            if let Some(v) = self.phi0(a, alpha) {
                return Some((v, 0));
            }
        }
        self.con(m, a).then(|| (Token::arrow(a.clone(), alpha.clone()), m + 1))
    }

    fn lift(&self, side: usize, t: &Token) -> Token {
        if *t == self.webs[side].sys().nu() {
            Token::ProdNu
        } else if side == 0 {
            Token::inl(t.clone())
        } else {
            Token::inr(t.clone())
        }
    }

    fn phi0_inverse(&self, t: &Token) -> Vec<(ConSet, Token)> {
        let pn = Token::ProdNu;
        let mut out = Vec::new();
        if *t == pn {
            out.push((ConSet::empty(), pn.clone()));
            out.push((ConSet::singleton(pn.clone()), pn.clone()));
        }
        for side in [1usize, 0] {
            let comp = match (side, t) {
                (_, Token::ProdNu) => self.webs[side].sys().nu(),
                (1, Token::InR(x)) | (0, Token::InL(x)) => (**x).clone(),
                _ => continue,
            };
            for (b, beta) in self.webs[side].phi_inverse(&comp) {
                let a = b.map(|x| self.lift(side, x));
                let alpha = self.lift(side, &beta);
                if a.iter().all(|x| *x == pn) && alpha == pn {
                    continue;
                }
                out.push((a, alpha));
            }
        }
        out
    }

    fn phi_inverse(&self, n: usize, t: &Token) -> Vec<(ConSet, Token)> {
        match self.stage_of(t) {
            Some(0) => self.phi0_inverse(t),
            Some(k) if k <= n => t.as_arrow().map(|(a, b)| vec![(a.clone(), b.clone())]).unwrap_or_default(),
            _ => Vec::new(),
        }
    }

    fn psi(&self, i: usize, t: &Token) -> Option<Token> {
        match self.stage_of(t)? {
            0 => Some(if i == 0 { self.prod.fst(t) } else { self.prod.snd(t) }),
            _ => {
                let (b, beta) = t.as_arrow()?;
                let pb = self.psi_set(i, b);
                let pbeta = self.psi(i, beta)?;
                self.webs[i].phi(&pb, &pbeta)
            }
        }
    }

    fn psi_set(&self, i: usize, a: &ConSet) -> ConSet {
        a.filter_map(|x| self.psi(i, x))
    }

    fn stage(&self, n: usize) -> Result<Arc<Stage>> {
        if n > self.cfg.stage_cap {
            return Err(Error::StageCapExceeded { needed: n, cap: self.cfg.stage_cap });
        }
        if let Some(s) = self.stages.read().expect("stages").get(n) {
            return Ok(s.clone());
        }
        let mut w = self.stages.write().expect("stages");
        while w.len() <= n {
            let next = self.build_stage(w.len(), w.last().map(|s| s.as_ref()));
            w.push(Arc::new(next));
        }
        Ok(w[n].clone())
    }

    fn materialized(&self) -> usize {
        self.stages.read().expect("stages").len()
    }

    fn build_stage(&self, n: usize, prev: Option<&Stage>) -> Stage {
        let Some(p) = prev else {
            let universe = self.prod.level(0);
            let psi = [0, 1].map(|i| universe.iter().filter_map(|t| Some((t.clone(), self.psi(i, t)?))).collect());
            return Stage { fresh_from: 0, universe: Arc::new(universe), psi, truncated: false };
        };
        let mut universe: Vec<Token> = p.universe.as_ref().clone();
        let fresh_from = universe.len();
        let mut truncated = p.truncated;
        'outer: for k in 0..=self.cfg.ante_cap.min(p.universe.len()) {
            for a in p.universe.iter().cloned().combinations(k) {
                let a: ConSet = a.into_iter().collect();
                if !self.con(n - 1, &a) {
                    continue;
                }
                for alpha in p.universe.iter() {
                    if self.phi_at(n - 1, &a, alpha).is_none() {
                        if universe.len() >= self.cfg.universe_limit {
                            truncated = true;
                            break 'outer;
                        }
                        universe.push(Token::arrow(a.clone(), alpha.clone()));
                    }
                }
            }
        }
        let mut psi = p.psi.clone();
        for i in 0..2 {
            for t in &universe[fresh_from..] {
                let (b, beta) = t.as_arrow().expect("formal pair");
                let pb: ConSet = b.filter_map(|x| p.psi[i].get(x).cloned());
                if let Some(v) = p.psi[i].get(beta).and_then(|pbeta| self.webs[i].phi(&pb, pbeta)) {
                    psi[i].insert(t.clone(), v);
                }
            }
        }
        Stage { universe: Arc::new(universe), fresh_from, psi, truncated }
    }
}

struct StageSys {
    core: Arc<Core>,
    /// `None` is the limit `S_ω`, restricted to the stage cap.
    stage: Option<usize>,
}

impl StageSys {
    fn bound(&self) -> usize {
        self.stage.unwrap_or(self.core.cfg.stage_cap)
    }
}

impl InfoSys for StageSys {
    fn nu(&self) -> Token {
        Token::ProdNu
    }

    fn has_token(&self, t: &Token) -> bool {
        self.core.within(self.bound(), t)
    }

    fn con(&self, a: &ConSet) -> bool {
        let mut m = 0;
        for t in a.iter() {
            match self.core.stage_of(t) {
                Some(k) if k <= self.bound() => m = m.max(k),
                _ => return false,
            }
        }
        self.core.con(m, a)
    }

    fn entails(&self, a: &ConSet, t: &Token) -> bool {
        self.has_token(t) && self.core.entails(a, t)
    }

    fn level(&self, level: usize) -> Vec<Token> {
        let n = level.min(self.bound());
        match self.core.stage(n) {
            Ok(s) => s.universe.as_ref().clone(),
            Err(_) => Vec::new(),
        }
    }

    fn is_finite(&self) -> bool {
        false
    }

    fn describe(&self) -> String {
        let [a, b] = &self.core.webs;
        match self.stage {
            Some(n) => format!("S{n}({} par {})", a.describe(), b.describe()),
            None => format!("Somega({} par {})", a.describe(), b.describe()),
        }
    }
}

/// Stage `n` of the completion as a partial i-web.
#[derive(Clone)]
pub struct PartialIWeb {
    core: Arc<Core>,
    stage: usize,
    sys: Sys,
}

impl PartialIWeb {
    pub fn stage(&self) -> usize {
        self.stage
    }

    pub fn in_domain(&self, a: &ConSet, alpha: &Token) -> bool {
        self.phi(a, alpha).is_some()
    }

    /// `ψ^which` as a map into the chosen factor (`which` is 1 or 2).
    pub fn psi(&self, which: usize) -> Result<TokenMap> {
        psi_map(&self.core, self.sys.clone(), which)
    }

    pub fn universe(&self) -> Result<Vec<Token>> {
        Ok(self.core.stage(self.stage)?.universe.as_ref().clone())
    }
}

fn psi_map(core: &Arc<Core>, sys: Sys, which: usize) -> Result<TokenMap> {
    let i = which_index(which)?;
    let c = core.clone();
    Ok(TokenMap::new(sys, core.webs[i].sys().clone(), move |t| c.psi(i, t)))
}

impl Web for PartialIWeb {
    fn sys(&self) -> &Sys {
        &self.sys
    }

    fn phi(&self, a: &ConSet, alpha: &Token) -> Option<Token> {
        self.core.phi_at(self.stage, a, alpha)
    }

    fn phi_inverse(&self, t: &Token) -> Vec<(ConSet, Token)> {
        self.core.phi_inverse(self.stage, t)
    }

    fn is_flat(&self) -> bool {
        self.core.webs.iter().all(|w| w.is_flat())
    }

    fn describe(&self) -> String {
        self.sys.describe()
    }
}

/// `A₁ ⅋ A₂` with the three-case `φ` and the projections `ψ¹ = fst`, `ψ² = snd`.
pub fn partial_product(a1: &IWeb, a2: &IWeb) -> Result<(PartialIWeb, TokenMap, TokenMap)> {
    let state = CompletionState::new(a1, a2, CompletionConfig::default())?;
    let web = state.web();
    let (p1, p2) = (web.psi(1)?, web.psi(2)?);
    Ok((web, p1, p2))
}

/// A validated stage of the completion.
#[derive(Clone)]
pub struct CompletionState {
    core: Arc<Core>,
    stage: usize,
    report: AxiomReport,
}

impl CompletionState {
    /// Stage 0, after validating the partial product.
    pub fn new(a1: &IWeb, a2: &IWeb, cfg: CompletionConfig) -> Result<CompletionState> {
        let core = Core::new(a1, a2, cfg);
        core.stage(0)?;
        let report = validation_report(&core, 0)?;
        fail_on(&report, 0)?;
        Ok(CompletionState { core, stage: 0, report })
    }

    pub fn stage(&self) -> usize {
        self.stage
    }

    pub fn config(&self) -> &CompletionConfig {
        &self.core.cfg
    }

    pub fn factor(&self, which: usize) -> Result<&IWeb> {
        Ok(&self.core.webs[which_index(which)?])
    }

    pub fn web(&self) -> PartialIWeb {
        PartialIWeb { core: self.core.clone(), stage: self.stage, sys: self.core.sys(Some(self.stage)) }
    }

    /// Validation results for the step that produced this stage.
    pub fn report(&self) -> &AxiomReport {
        &self.report
    }

    pub fn universe(&self) -> Vec<Token> {
        self.core.stage(self.stage).map(|s| s.universe.as_ref().clone()).unwrap_or_default()
    }

    /// Tokens added at this stage.
    pub fn fresh_tokens(&self) -> Vec<Token> {
        self.core.stage(self.stage).map(|s| s.universe[s.fresh_from..].to_vec()).unwrap_or_default()
    }

    pub fn truncated(&self) -> bool {
        self.core.stage(self.stage).map(|s| s.truncated).unwrap_or(false)
    }

    /// The materialized `ψ^which` table of this stage.
    pub fn psi_table(&self, which: usize) -> Result<BTreeMap<Token, Token>> {
        Ok(self.core.stage(self.stage)?.psi[which_index(which)?].clone())
    }

    /// Finishes as the limit web; later stages materialize on demand up to the cap.
    pub fn into_omega(self) -> OmegaWeb {
        OmegaWeb { sys: self.core.sys(None), core: self.core }
    }
}

fn fail_on(report: &AxiomReport, stage: usize) -> Result<()> {
    match report.entries.iter().find(|e| !e.pass) {
        None => Ok(()),
        Some(e) => Err(Error::ValidationFailed {
            stage,
            condition: e.name.clone(),
            witness: e.witness.clone().unwrap_or_default(),
        }),
    }
}

/// Builds and validates the next stage.
pub fn completion_step(state: &CompletionState) -> Result<CompletionState> {
    let n = state.stage + 1;
    state.core.stage(n)?;
    let report = validation_report(&state.core, n)?;
    fail_on(&report, n)?;
    Ok(CompletionState { core: state.core.clone(), stage: n, report })
}

/// Re-runs the validation of the step into `state` without failing.
pub fn validate_stage(state: &CompletionState) -> Result<AxiomReport> {
    validation_report(&state.core, state.stage)
}

pub fn complete(a1: &IWeb, a2: &IWeb, max_stage: usize) -> Result<OmegaWeb> {
    complete_with(a1, a2, max_stage, CompletionConfig::default())
}

pub fn complete_with(a1: &IWeb, a2: &IWeb, max_stage: usize, cfg: CompletionConfig) -> Result<OmegaWeb> {
    if max_stage == 0 {
        return Err(Error::InvalidArgument("max_stage must be at least 1".into()));
    }
    if max_stage > cfg.stage_cap {
        return Err(Error::StageCapExceeded { needed: max_stage, cap: cfg.stage_cap });
    }
    let mut st = CompletionState::new(a1, a2, cfg)?;
    while st.stage < max_stage {
        st = completion_step(&st)?;
    }
    Ok(st.into_omega())
}

/// The limit `S_ω`, resolving each token at its least stage.
#[derive(Clone)]
pub struct OmegaWeb {
    core: Arc<Core>,
    sys: Sys,
}

impl OmegaWeb {
    /// Least stage containing `t`.
    pub fn resolve(&self, t: &Token) -> Result<usize> {
        let k = self.core.stage_of(t).ok_or_else(|| Error::InvalidArgument(format!("{t} is not a token of the completion")))?;
        if k > self.core.cfg.stage_cap {
            return Err(Error::StageCapExceeded { needed: k, cap: self.core.cfg.stage_cap });
        }
        Ok(k)
    }

    /// `φ_ω(a, α)` and the stage it is resolved at.
    pub fn phi_resolved(&self, a: &ConSet, alpha: &Token) -> Result<(Token, usize)> {
        let (v, k) = self
            .core
            .phi_omega(a, alpha)
            .ok_or_else(|| Error::InvalidArgument(format!("({a}, {alpha}) is not a pair of the completion")))?;
        if k > self.core.cfg.stage_cap {
            return Err(Error::StageCapExceeded { needed: k, cap: self.core.cfg.stage_cap });
        }
        Ok((v, k))
    }

    pub fn psi(&self, which: usize, t: &Token) -> Result<Option<Token>> {
        Ok(self.core.psi(which_index(which)?, t))
    }

    pub fn psi_map(&self, which: usize) -> Result<TokenMap> {
        psi_map(&self.core, self.sys.clone(), which)
    }

    pub fn factor(&self, which: usize) -> Result<&IWeb> {
        Ok(&self.core.webs[which_index(which)?])
    }

    pub fn config(&self) -> &CompletionConfig {
        &self.core.cfg
    }

    /// Number of stages materialized so far.
    pub fn materialized(&self) -> usize {
        self.core.materialized()
    }

    pub fn stage_universe(&self, n: usize) -> Result<Vec<Token>> {
        Ok(self.core.stage(n)?.universe.as_ref().clone())
    }

    pub fn psi_table(&self, n: usize, which: usize) -> Result<BTreeMap<Token, Token>> {
        Ok(self.core.stage(n)?.psi[which_index(which)?].clone())
    }

    /// Stage `n` as a partial web sharing this completion.
    pub fn stage_web(&self, n: usize) -> Result<PartialIWeb> {
        self.core.stage(n)?;
        Ok(PartialIWeb { core: self.core.clone(), stage: n, sys: self.core.sys(Some(n)) })
    }

    pub fn as_iweb(&self) -> IWeb {
        Arc::new(self.clone())
    }
}

impl Web for OmegaWeb {
    fn sys(&self) -> &Sys {
        &self.sys
    }

    fn phi(&self, a: &ConSet, alpha: &Token) -> Option<Token> {
        self.phi_resolved(a, alpha).ok().map(|(v, _)| v)
    }

    fn phi_inverse(&self, t: &Token) -> Vec<(ConSet, Token)> {
        self.core.phi_inverse(self.core.cfg.stage_cap, t)
    }

    fn is_flat(&self) -> bool {
        self.core.webs.iter().all(|w| w.is_flat())
    }

    fn describe(&self) -> String {
        self.sys.describe()
    }
}

/// Checks that `ψ^which(γ)` is found in the factor's approximant of `m`,
/// escalating depth by at most 2; returns the fuel that found it.
pub fn transport_check(m: &Term, gamma: &Token, which: usize, omega: &OmegaWeb, fuel: Fuel) -> Result<Fuel> {
    let web = omega.as_iweb();
    if token_in_interp(gamma, m, &web, fuel)? != Membership::Yes {
        return Err(Error::InvalidArgument(format!("{gamma} is not found in the completion at the given fuel")));
    }
    let target = omega
        .psi(which, gamma)?
        .ok_or_else(|| Error::TransportViolation(format!("psi{which} undefined on {gamma}")))?;
    let factor = omega.factor(which)?;
    for extra in 0..=2 {
        let f = Fuel { depth: fuel.depth + extra, width: fuel.width };
        if token_in_interp(&target, m, factor, f)? == Membership::Yes {
            return Ok(f);
        }
    }
    Err(Error::TransportViolation(format!("{gamma} in completion but psi{which} = {target} not found in factor {which} for {m}")))
}

// ---------------------------------------------------------------------------
// validation

fn candidate_sets(universe: &[Token], cfg: &CompletionConfig, rng: &mut ChaCha8Rng) -> (Vec<ConSet>, bool) {
    let n = universe.len();
    if n < 32 && (1usize << n) <= cfg.exhaustive_limit {
        return (subsets_up_to(universe, n), true);
    }
    let mut out = Vec::new();
    let mut next_card = 0;
    for k in 0..=n {
        let count = binomial(n, k);
        if out.len() + count > cfg.exhaustive_limit {
            break;
        }
        out.extend(universe.iter().cloned().combinations(k).map(|c| c.into_iter().collect::<ConSet>()));
        next_card = k + 1;
    }
    if next_card <= n {
        for _ in 0..cfg.samples {
            let k = rng.gen_range(next_card..=(next_card + 4).min(n));
            out.push(universe.choose_multiple(rng, k).cloned().collect());
        }
    }
    (out, false)
}

fn binomial(n: usize, k: usize) -> usize {
    (0..k).fold(1usize, |acc, i| acc.saturating_mul(n - i) / (i + 1))
}

fn sample_tokens(tokens: &[Token], cap: usize, rng: &mut ChaCha8Rng) -> (Vec<Token>, bool) {
    if tokens.len() <= cap {
        (tokens.to_vec(), true)
    } else {
        let mut v: Vec<Token> = tokens.choose_multiple(rng, cap).cloned().collect();
        v.sort();
        (v, false)
    }
}

fn validation_budget() -> Budget {
    Budget { exhaustive_tokens: 4, cut_card: 1, ..Budget::default() }
}

fn push(report: &mut AxiomReport, name: &str, w: Option<String>) {
    report.entries.push(crate::kernel::AxiomVerdict { name: name.to_string(), pass: w.is_none(), witness: w });
}

fn merge(report: &mut AxiomReport, prefix: &str, other: AxiomReport) {
    report.exhaustive &= other.exhaustive;
    for mut e in other.entries {
        e.name = format!("{prefix}{}", e.name);
        report.entries.push(e);
    }
}

fn validation_report(core: &Arc<Core>, n: usize) -> Result<AxiomReport> {
    let cfg = &core.cfg;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ (n as u64).wrapping_mul(0x9e37_79b9));
    let cur = core.stage(n)?;
    let prev = if n > 0 { Some(core.stage(n - 1)?) } else { None };
    let mut report = AxiomReport { entries: Vec::new(), exhaustive: !cur.truncated };
    let sys_n = core.sys(Some(n));

    // token universe under test
    let (old_tokens, fresh_tokens) = match &prev {
        Some(p) => (p.universe.as_ref().clone(), cur.universe[cur.fresh_from..].to_vec()),
        None => (Vec::new(), cur.universe.as_ref().clone()),
    };
    let (old_s, e1) = sample_tokens(&old_tokens, cfg.token_sample, &mut rng);
    let (fresh_s, e2) = sample_tokens(&fresh_tokens, cfg.token_sample, &mut rng);
    report.exhaustive &= e1 && e2;
    let mut tokens = old_s.clone();
    tokens.extend(fresh_s.iter().cloned());
    let (sets, e3) = candidate_sets(&tokens, cfg, &mut rng);
    report.exhaustive &= e3;

    let mut w = None;
    if let Some(p) = &prev {
        if cur.universe[..cur.fresh_from] != p.universe[..] {
            w = Some("earlier universe not a prefix".to_string());
        }
    }
    if w.is_none() {
        w = fresh_tokens.iter().find(|t| core.stage_of(t) != Some(n)).map(|t| format!("{t} resolves to {:?}", core.stage_of(t)));
    }
    push(&mut report, "TOKENS-CHAIN", w);

    let ex = report.exhaustive;
    merge(&mut report, "", check_is_axioms_on(sys_n.as_ref(), &tokens, &sets, ex, &validation_budget())?);

    // pairs of the previous stage (or of S₀ itself at stage 0)
    let base = if n > 0 { &old_tokens } else { cur.universe.as_ref() };
    let base_stage = n.saturating_sub(1);
    let mut pairs = Vec::new();
    for a in subsets_up_to(base, cfg.ante_cap.min(base.len())) {
        if !core.con(base_stage, &a) {
            continue;
        }
        for alpha in base {
            pairs.push(Token::arrow(a.clone(), alpha.clone()));
        }
    }
    let (pairs, e4) = sample_tokens(&pairs, 2 * cfg.token_sample, &mut rng);
    report.exhaustive &= e4;

    if n > 0 {
        let old_sets: Vec<&ConSet> = sets.iter().filter(|x| x.iter().all(|t| core.within(n - 1, t))).collect();
        let w = old_sets
            .iter()
            .find(|x| core.con(n, x) != core.con(n - 1, x))
            .map(|x| format!("{x}: con{n}={} con{}={}", core.con(n, x), n - 1, core.con(n - 1, x)));
        push(&mut report, "CON-RESTRICT", w);

        let prev_sys = core.sys(Some(n - 1));
        let mut w = None;
        'ent: for x in old_sets.iter().filter(|x| core.con(n - 1, x)) {
            for t in &old_s {
                if sys_n.entails(x, t) != prev_sys.entails(x, t) {
                    w = Some(format!("{x} |- {t}"));
                    break 'ent;
                }
            }
        }
        push(&mut report, "ENT-RESTRICT", w);

        let mut restrict = None;
        let mut formal = None;
        for p in &pairs {
            let (a, alpha) = p.as_arrow().expect("pair");
            let now = core.phi_at(n, a, alpha);
            match core.phi_at(n - 1, a, alpha) {
                Some(v) => {
                    if now.as_ref() != Some(&v) && restrict.is_none() {
                        restrict = Some(format!("phi{n}{p} = {now:?}, phi{} = {v}", n - 1));
                    }
                }
                None => {
                    if (now.as_ref() != Some(p) || core.stage_of(p) != Some(n)) && formal.is_none() {
                        formal = Some(format!("phi{n}{p} = {now:?}"));
                    }
                }
            }
        }
        push(&mut report, "PHI-RESTRICT", restrict);
        push(&mut report, "PHI-FORMAL", formal);

        let mut w = None;
        for _ in 0..cfg.samples.min(200) {
            if fresh_s.is_empty() {
                break;
            }
            let t = fresh_s.choose(&mut rng).expect("nonempty").clone();
            let u = tokens.choose(&mut rng).expect("nonempty").clone();
            let (a, alpha) = if rng.gen_bool(0.5) { (ConSet::singleton(t), u) } else { (ConSet::singleton(u), t) };
            if !core.con(n, &a) {
                continue;
            }
            if let Some(v) = core.phi_at(n, &a, &alpha) {
                w = Some(format!("phi{n}({a},{alpha}) = {v} should be undefined"));
                break;
            }
        }
        push(&mut report, "PHI-UNDEF", w);

        let (xsets, e5) = candidate_sets(&pairs, cfg, &mut rng);
        report.exhaustive &= e5;
        let mut w = None;
        for x in &xsets {
            if !core.exp_con(n - 1, x) {
                continue;
            }
            let formal: Vec<Token> = x.iter().filter(|p| core.phi_at(n - 1, p.as_arrow().unwrap().0, p.as_arrow().unwrap().1).is_none()).cloned().collect();
            let dom: ConSet = x
                .iter()
                .filter_map(|p| {
                    let (a, b) = p.as_arrow().expect("pair");
                    core.phi_at(n - 1, a, b)
                })
                .collect();
            let y: ConSet = formal.into_iter().chain(dom.iter().cloned()).collect();
            if !core.con(n, &y) {
                w = Some(format!("{x} maps to inconsistent {y}"));
                break;
            }
        }
        push(&mut report, "CLAUSE2", w);

        let src: Sys = {
            let s = core.sys(Some(n - 1));
            Arc::new(Exponential::new(s.clone(), s).with_ante_cap(cfg.ante_cap))
        };
        let c = core.clone();
        let phi = TokenMap::new(src, sys_n.clone(), move |p| p.as_arrow().and_then(|(a, b)| c.phi_at(n, a, b)));
        let dom_pairs: Vec<Token> = pairs.iter().filter(|p| phi.in_domain(p)).cloned().collect();
        let dom_sets: Vec<ConSet> = xsets.iter().filter(|x| x.iter().all(|p| phi.in_domain(p))).cloned().collect();
        let r = check_morphism_on(&phi, &[MorphismKind::Mo, MorphismKind::BMo], &dom_pairs, &dom_sets, false, 64)?;
        merge(&mut report, "PHI-", r);
    } else {
        // the partial φ of the product on its domain
        let src: Sys = {
            let s = core.sys(Some(0));
            Arc::new(Exponential::new(s.clone(), s).with_ante_cap(cfg.ante_cap))
        };
        let c = core.clone();
        let phi = TokenMap::new(src, sys_n.clone(), move |p| p.as_arrow().and_then(|(a, b)| c.phi0(a, b)));
        let dom_pairs: Vec<Token> = pairs.iter().filter(|p| phi.in_domain(p)).cloned().collect();
        let (dom_sets, e5) = candidate_sets(&dom_pairs, cfg, &mut rng);
        report.exhaustive &= e5;
        let r = check_morphism_on(&phi, &[MorphismKind::Mo, MorphismKind::BMo], &dom_pairs, &dom_sets, false, 64)?;
        merge(&mut report, "PHI-", r);
    }

    // ψ tables: extension and definition on fresh tokens
    let mut w = None;
    'psi: for i in 0..2 {
        if let Some(p) = &prev {
            for (t, v) in &p.psi[i] {
                if cur.psi[i].get(t) != Some(v) {
                    w = Some(format!("psi{} changed on {t}", i + 1));
                    break 'psi;
                }
            }
        }
        for t in &cur.universe[cur.fresh_from..] {
            let fresh = core.psi(i, t);
            if cur.psi[i].get(t) != fresh.as_ref() {
                w = Some(format!("psi{} table {t} = {:?}, recomputed {fresh:?}", i + 1, cur.psi[i].get(t)));
                break 'psi;
            }
            if n > 0 {
                let (b, beta) = t.as_arrow().expect("formal pair");
                let prevt = &prev.as_ref().expect("previous stage").psi[i];
                let want = prevt
                    .get(beta)
                    .and_then(|pb| core.webs[i].phi(&b.filter_map(|x| prevt.get(x).cloned()), pb));
                if want.as_ref() != cur.psi[i].get(t) {
                    w = Some(format!("psi{} on {t} is not phi of the images", i + 1));
                    break 'psi;
                }
            }
        }
    }
    push(&mut report, "PSI-EXTEND", w);

    for which in 1..=2 {
        let psi = psi_map(core, sys_n.clone(), which)?;
        let ex = report.exhaustive;
        let r = check_morphism_on(&psi, &[MorphismKind::Mo, MorphismKind::FMo], &tokens, &sets, ex, 64)?;
        merge(&mut report, &format!("PSI{which}-"), r);
        let i = which - 1;
        let mut w = None;
        for p in &pairs {
            let (a, alpha) = p.as_arrow().expect("pair");
            let Some(v) = core.phi_at(n, a, alpha) else { continue };
            let lhs = core.psi(i, &v);
            let rhs = core.psi(i, alpha).and_then(|pa| core.webs[i].phi(&core.psi_set(i, a), &pa));
            if lhs.is_none() || lhs != rhs {
                w = Some(format!("psi{which}(phi({a},{alpha})) = {lhs:?} vs {rhs:?}"));
                break;
            }
        }
        push(&mut report, &format!("PSI{which}-iMo"), w);
    }
    Ok(report)
}
