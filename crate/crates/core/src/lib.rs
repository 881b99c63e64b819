//! Worst-case-optimal resource selection in fair-reward sharing games.
//!
//! `m` players each pick `r` of `n` resources; resource `k` pays a random
//! reward with mean `E_k`, split equally among the players that picked it.
//! Player 1 plays a mixed strategy summarised by its marginals `p`, a point of
//! the `(n, r)`-hypersimplex, and wants to maximise its expected reward against
//! the least favourable behaviour of everybody else.
//!
//! * [`game`]: core types, `f(p, x)` and `f^worst(p)`.
//! * [`best_response`]: the opponents' exact greedy minimiser.
//! * [`hypersimplex`]: projection, vertex decomposition and sampling.
//! * [`maximin`]: projected subgradient ascent with a certificate.
//! * [`closed_form`]: explicit maximisers for the solvable special cases.
//! * [`online`]: a UCB learner for unknown means and regret accounting.

pub mod best_response;
pub mod closed_form;
pub mod error;
pub mod game;
pub mod hypersimplex;
pub mod maximin;
pub mod online;

pub use best_response::{brute_force_min_load, enumerate_loads, greedy_min_load, BestResponse};
pub use closed_form::{solve_closed_form, ClosedFormResult};
pub use error::{Error, Result};
pub use game::{f_worst, utility_f, GameSpec, LoadVector, MixedStrategy, PureAction};
pub use hypersimplex::{decompose, project, sample, split_load, Decomposition};
pub use maximin::{solve_maximin, MaximinResult, SolverConfig};
pub use online::{run_ucb, theoretical_regret_bound, NoiseModel, RegretTrace, UcbParams};
