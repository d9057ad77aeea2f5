//! Small saturating sets in PG(R,q) and the short covering codes they
//! define: a greedy step-by-step construction, independent brute-force
//! verification, lift-family parameters, and the bound constants and tables.

pub mod bounds;
pub mod construction;
pub mod field;
pub mod geometry;
pub mod io;
pub mod lift;
pub mod verify;

/// Caps the data-parallel worker pool. A no-op without the `parallel`
/// feature. Results never depend on the thread count.
pub fn configure_threads(n: Option<usize>) {
    #[cfg(feature = "parallel")]
    if let Some(n) = n {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
    #[cfg(not(feature = "parallel"))]
    let _ = n;
}
