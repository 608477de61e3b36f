//! i-webs: an information system together with a b-morphism
//! `φ : (A ⇒ A) → A`, and the usual families of instances.

mod filter;
mod free;

use std::sync::Arc;

use crate::error::Result;
use crate::kernel::{check_morphism, AxiomReport, Budget, Exponential, MorphismKind, Sys, TokenMap};
use crate::token::{ConSet, Token};

pub use filter::{check_eats_star, filter_sys, filter_web, Eats, FilterWeb};
pub use free::{graph_web, krivine_web, pcs_web, FreeWeb, PairOrder, PcSpec};

pub trait Web: Send + Sync {
    fn sys(&self) -> &Sys;

    /// `φ(a, α)`, or `None` outside the domain of a partial web.
    fn phi(&self, a: &ConSet, alpha: &Token) -> Option<Token>;

    /// Every `(a, α)` in the domain with `φ(a, α) = t`. Finite for all
    /// built-in webs.
    fn phi_inverse(&self, t: &Token) -> Vec<(ConSet, Token)>;

    /// Entailment is membership plus `∅ ⊢ ν`.
    fn is_flat(&self) -> bool {
        false
    }

    /// Flat, fully coherent, and `φ` is the free completion of a partial pair.
    fn is_free_graph(&self) -> bool {
        false
    }

    fn describe(&self) -> String;
}

pub type IWeb = Arc<dyn Web>;

/// `φ` as a token map out of the exponential `A ⇒ A`.
pub fn phi_map(web: &IWeb) -> TokenMap {
    let sys = web.sys().clone();
    let exp: Sys = Arc::new(Exponential::new(sys.clone(), sys.clone()));
    let w = web.clone();
    TokenMap::new(exp, sys, move |t| t.as_arrow().and_then(|(a, alpha)| w.phi(a, alpha)))
}

/// Checks (Mo) and (bMo) for `φ` over the exponential at `budget.level`.
pub fn validate_phi(web: &IWeb, budget: &Budget) -> Result<AxiomReport> {
    check_morphism(&phi_map(web), &[MorphismKind::Mo, MorphismKind::BMo], budget)
}
