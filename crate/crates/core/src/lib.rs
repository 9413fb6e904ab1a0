//! Touch-based object localization by guarded moves.
//!
//! A robot with a known object mesh but an uncertain object pose reduces that
//! uncertainty by executing *guarded moves*: straight-line end-effector motions
//! that stop on contact (or report no contact after travelling their full
//! length). The time of contact depends on where the object actually is, so
//! each move is a measurement.
//!
//! The crate is organised around a particle belief over the object pose
//! `(x, y, z, theta)` and a set of candidate guarded moves. Selection metrics
//! score each move by how much it is expected to reduce uncertainty per second
//! of execution time:
//!
//! * **HP** (hypothesis pruning) expects to prune probability mass using a
//!   hard contact-time window,
//! * **WHP** (weighted hypothesis pruning) does the same with a Gaussian
//!   window,
//! * **IG** scores expected reduction in differential entropy of a Gaussian
//!   fit to the belief.
//!
//! HP and WHP are adaptive submodular, which buys two things: a lazy-greedy
//! selector that provably returns the same choices as exhaustive greedy while
//! evaluating far fewer candidates, and near-optimality bounds for greedy
//! action sequences. The [`oracle`] module verifies both claims exhaustively
//! on tiny instances; [`harness`] runs repeatable simulation studies and
//! writes plot-ready CSV.
//!
//! Module map:
//!
//! * [`geometry`] — poses, triangle meshes, ray casting, contact queries
//! * [`belief`] — weighted particle sets over poses
//! * [`actions`] — guarded-move definitions and generators
//! * [`sensing`] — observations, weighting kernels, observation simulation
//! * [`metrics`] — selection objectives (HP / WHP / IG)
//! * [`policy`] — greedy, lazy-greedy, random and fixed-sequence selection
//! * [`oracle`] — brute-force verification of the theory on tiny instances
//! * [`harness`] — experiment configs, batch runs, CSV emission, benchmarks

pub mod actions;
pub mod belief;
pub mod geometry;
pub mod harness;
pub mod metrics;
pub mod oracle;
pub mod policy;
pub mod rng;
pub mod sensing;
