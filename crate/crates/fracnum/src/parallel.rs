//! Independent chains on scoped threads.

use fracnum_core::path_gibbs::{chain_rng, GibbsSampler, PathEnsemble, SamplerError};

/// Runs `chains` chains of `sampler`, chain `c` on stream `first_stream + c`.
///
/// The merged ensemble lists chains in index order, so the result does not
/// depend on thread scheduling.
pub fn run_chains(
    sampler: &GibbsSampler,
    chains: usize,
    seed: u64,
    first_stream: u64,
) -> Result<PathEnsemble, SamplerError> {
    let parts: Vec<Result<PathEnsemble, SamplerError>> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..chains as u64)
            .map(|c| {
                scope.spawn(move || {
                    let mut rng = chain_rng(seed, first_stream + c);
                    sampler.run_chain(c, &mut rng)
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("sampler thread panicked")).collect()
    });
    PathEnsemble::merge(parts.into_iter().collect::<Result<Vec<_>, _>>()?)
}
