//! Episode runner, benchmark sweeps and certification timing for the
//! `certipomdp` command-line tool.

pub mod bench;
pub mod episode;
pub mod stats;
pub mod suite;
pub mod ttc;

pub use bench::{run_benchmark, write_outputs, BenchOptions, BenchmarkReport};
pub use episode::{run_episode, EpisodeResult};
pub use suite::{parse_suite, Budget, Cell, Suite};
pub use ttc::{time_to_certified, TtcPlan, TtcRow};
