//! Typestate bug finding for MiniC, a small C subset.
//!
//! The pipeline takes a MiniC program plus a typestate machine specification
//! and finds inputs that drive the machine into an error state:
//!
//! 1. **frontend** — parse, check, and lower MiniC to a per-function CFG over
//!    an interned object table; includes a concrete reference interpreter.
//! 2. **machines** — parse machine specifications and match their transition
//!    labels against call and return sites.
//! 3. **pointsto** — flow-insensitive Andersen-style points-to analysis.
//! 4. **instrument** — compile a machine into the program: a state variable
//!    per tracked object and a `__fire` statement per matched site.
//! 5. **metal** — flow-sensitive abstract interpretation over state sets; the
//!    fast, imprecise bug reporter whose reports seed the rest.
//! 6. **slicer** — executable backward slicing on the instrumented program,
//!    keeping exactly what can influence the machine.
//! 7. **symexec** — symbolic execution of the slice with a small built-in
//!    constraint solver.
//! 8. **driver** — replay-confirmed end-to-end verdicts (`find`, `classify`).
//!
//! The `examples/` directory demonstrates each stage end to end; the
//! `minisse` binary exposes the same stages as subcommands.

pub mod diag;
pub mod frontend;
pub mod machines;
pub mod pointsto;
pub mod instrument;
pub mod metal;
pub mod slicer;
pub mod symexec;
pub mod driver;
