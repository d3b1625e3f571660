/// Runs `f` on a dedicated pool with `workers` threads, or on the global
/// pool when `workers` is `None`. Results never depend on the choice.
pub fn with_workers<T, F>(workers: Option<usize>, f: F) -> Result<T, rayon::ThreadPoolBuildError>
where
    T: Send,
    F: FnOnce() -> T + Send,
{
    match workers {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build()?;
            Ok(pool.install(f))
        }
    }
}
